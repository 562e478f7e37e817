//! Divided differences of `exp`, robust to clustered and repeated nodes.

/// Subranges with spread at most this are summed by series about their mean.
const SERIES_SPREAD: f64 = 1.0;
const SERIES_TERMS: usize = 40;

/// `exp[z_0, ..., z_k]`, the k-th divided difference of the exponential.
///
/// Nodes may repeat (confluent case). Internally the nodes are sorted and the
/// full triangular table is built; entries over a narrow subrange come from
/// the series `e^c Σ_r h_r(z - c) / (k + r)!` with `h_r` the complete
/// homogeneous symmetric polynomials, wide ones from the usual quotient.
pub fn exp_divided_difference(nodes: &[f64]) -> f64 {
    assert!(
        !nodes.is_empty(),
        "divided difference needs at least one node"
    );
    let mut z = nodes.to_vec();
    z.sort_by(f64::total_cmp);
    let k = z.len();
    if z[k - 1] - z[0] <= SERIES_SPREAD {
        return series(&z);
    }
    // table[i] holds exp[z_i .. z_{i+len-1}] for the current length.
    let mut table: Vec<f64> = z.iter().map(|v| v.exp()).collect();
    for len in 2..=k {
        for i in 0..=k - len {
            let j = i + len - 1;
            let spread = z[j] - z[i];
            table[i] = if spread <= SERIES_SPREAD {
                series(&z[i..=j])
            } else {
                (table[i + 1] - table[i]) / spread
            };
        }
    }
    table[0]
}

fn series(z: &[f64]) -> f64 {
    let k = z.len() - 1;
    let c = z.iter().sum::<f64>() / z.len() as f64;
    let w: Vec<f64> = z.iter().map(|v| v - c).collect();
    // h[r] = h_r(w_0..w_j), updated one variable at a time.
    let mut h = vec![0.0; SERIES_TERMS];
    h[0] = 1.0;
    for (j, wj) in w.iter().enumerate() {
        if j == 0 {
            for r in 1..SERIES_TERMS {
                h[r] = h[r - 1] * wj;
            }
        } else {
            for r in 1..SERIES_TERMS {
                h[r] += wj * h[r - 1];
            }
        }
    }
    let mut inv_fact = 1.0 / (1..=k).map(|i| i as f64).product::<f64>();
    let mut sum = 0.0;
    for (r, hr) in h.iter().enumerate() {
        if r > 0 {
            inv_fact /= (k + r) as f64;
        }
        sum += hr * inv_fact;
    }
    c.exp() * sum
}
