//! Gauss rules on segments and triangles.
//!
//! Triangle rules are collapsed (Duffy) Gauss-Legendre products: a rule with
//! `n` points per direction integrates polynomials of total degree `2n - 2`
//! exactly.

use std::f64::consts::PI;

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    if n == 1 {
        return (vec![0.5], vec![1.0]);
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Newton on P_n from the usual cosine initial guess
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = 0.5 * (1.0 - z);
        x[n - 1 - i] = 0.5 * (1.0 + z);
        w[i] = 0.5 * wi;
        w[n - 1 - i] = 0.5 * wi;
    }
    (x, w)
}

/// Segment rule on `[0, 1]` exact for degree `q`.
pub fn segment_rule(q: usize) -> (Vec<f64>, Vec<f64>) {
    gauss_legendre(q / 2 + 1)
}

/// Rule on the reference triangle `(0,0), (1,0), (0,1)` exact for total
/// degree `q`. Weights sum to `1/2`.
pub fn triangle_rule(q: usize) -> Vec<([f64; 2], f64)> {
    let n = q.div_ceil(2) + 1;
    let (x, w) = gauss_legendre(n);
    let mut out = Vec::with_capacity(n * n);
    for (&u, &wu) in x.iter().zip(&w) {
        for (&v, &wv) in x.iter().zip(&w) {
            out.push(([u, v * (1.0 - u)], wu * wv * (1.0 - u)));
        }
    }
    out
}
