pub mod blowup;
pub mod convexfn;
pub mod error;
pub mod estimates;
pub mod functionals;
pub mod linalg;
pub mod optimizer;
pub mod polytope;
pub mod quadrature;
pub mod random;
pub mod thermo;

pub use error::{Error, Result};
