//! Small dense helpers on `Vec<f64>` points, backed by nalgebra where a
//! factorization is involved.

use nalgebra::DMatrix;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn centroid(points: &[Vec<f64>]) -> Vec<f64> {
    let n = points[0].len();
    let mut c = vec![0.0; n];
    for p in points {
        for (ci, pi) in c.iter_mut().zip(p) {
            *ci += pi;
        }
    }
    let k = points.len() as f64;
    c.iter_mut().for_each(|ci| *ci /= k);
    c
}

/// Solves `rows * x = rhs` for a square system. Returns `None` when the
/// determinant is below `min_det` in absolute value.
pub fn solve_square(rows: &[&[f64]], rhs: &[f64], min_det: f64) -> Option<Vec<f64>> {
    let n = rows.len();
    if n == 1 {
        let a = rows[0][0];
        return if a.abs() < min_det {
            None
        } else {
            Some(vec![rhs[0] / a])
        };
    }
    if n == 2 {
        let (a, b, c, d) = (rows[0][0], rows[0][1], rows[1][0], rows[1][1]);
        let det = a * d - b * c;
        if det.abs() < min_det {
            return None;
        }
        return Some(vec![
            (rhs[0] * d - b * rhs[1]) / det,
            (a * rhs[1] - c * rhs[0]) / det,
        ]);
    }
    let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    let lu = m.lu();
    if lu.determinant().abs() < min_det {
        return None;
    }
    let b = nalgebra::DVector::from_column_slice(rhs);
    lu.solve(&b).map(|x| x.iter().copied().collect())
}

/// Affine dimension of a point set: rank of the differences to the first
/// point, with singular values below `rel_tol * max(1, largest)` treated as 0.
pub fn affine_rank(points: &[&[f64]], rel_tol: f64) -> usize {
    if points.len() <= 1 {
        return 0;
    }
    let n = points[0].len();
    let k = points.len() - 1;
    let m = DMatrix::from_fn(n, k, |i, j| points[j + 1][i] - points[0][i]);
    let sv = m.singular_values();
    let largest = sv.iter().copied().fold(0.0, f64::max);
    let cut = rel_tol * largest.max(1.0);
    sv.iter().filter(|&&s| s > cut).count()
}

/// `d`-dimensional measure of the simplex spanned by `d + 1` points in R^n.
pub fn simplex_volume(points: &[Vec<f64>]) -> f64 {
    let d = points.len() - 1;
    if d == 0 {
        return 1.0;
    }
    let n = points[0].len();
    let fact: f64 = (1..=d).map(|k| k as f64).product();
    if d == n {
        let m = DMatrix::from_fn(n, n, |i, j| points[j + 1][i] - points[0][i]);
        return m.determinant().abs() / fact;
    }
    let e = DMatrix::from_fn(n, d, |i, j| points[j + 1][i] - points[0][i]);
    let gram = e.transpose() * &e;
    gram.determinant().max(0.0).sqrt() / fact
}

pub fn determinant(rows: &[Vec<f64>]) -> f64 {
    let n = rows.len();
    DMatrix::from_fn(n, n, |i, j| rows[i][j]).determinant()
}

pub fn inverse_transpose(rows: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = rows.len();
    let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    let inv = m.try_inverse()?;
    let t = inv.transpose();
    Some(
        (0..n)
            .map(|i| (0..n).map(|j| t[(i, j)]).collect())
            .collect(),
    )
}

pub fn mat_vec(rows: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    rows.iter().map(|r| dot(r, x)).collect()
}
