//! Reference computations written independently of the library code paths.

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, Normal};

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn step<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    step(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// `log N(w; 0, Σ)` through a dense Cholesky factorization of `Σ`.
pub fn dense_normal_log_density(w: &[f64], sigma: &DMatrix<f64>) -> f64 {
    let n = w.len();
    let chol = sigma.clone().cholesky().expect("covariance must be positive definite");
    let l = chol.l();
    let log_det: f64 = 2.0 * (0..n).map(|i| l[(i, i)].ln()).sum::<f64>();
    let x = DVector::from_column_slice(w);
    let solved = chol.solve(&x);
    -0.5 * (n as f64 * (2.0 * std::f64::consts::PI).ln() + log_det + x.dot(&solved))
}

pub fn mean_and_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

pub fn relative_error(estimate: f64, truth: f64) -> f64 {
    ((estimate - truth) / truth).abs()
}

/// Kolmogorov–Smirnov test of `xs` against `N(0, 1)`; returns `(D, p)`.
pub fn ks_standard_normal(xs: &[f64]) -> (f64, f64) {
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let d = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal.cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max);
    let sqrt_n = n.sqrt();
    let lambda = (sqrt_n + 0.12 + 0.11 / sqrt_n) * d;
    let p: f64 = (1..=100)
        .map(|k| {
            let k = k as f64;
            let sign = if k as u64 % 2 == 1 { 1.0 } else { -1.0 };
            2.0 * sign * (-2.0 * k * k * lambda * lambda).exp()
        })
        .sum();
    (d, p.clamp(0.0, 1.0))
}

/// Rank-sum (Mann–Whitney) AUC of cases against controls, ties at mid-rank.
pub fn mann_whitney_auc(cases: &[f64], controls: &[f64]) -> f64 {
    let mut all: Vec<(f64, bool)> = cases.iter().map(|&m| (m, true)).chain(controls.iter().map(|&m| (m, false))).collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        let mid = (i + 1 + j) as f64 / 2.0;
        rank_sum += mid * all[i..j].iter().filter(|e| e.1).count() as f64;
        i = j;
    }
    let (n1, n0) = (cases.len() as f64, controls.len() as f64);
    (rank_sum - n1 * (n1 + 1.0) / 2.0) / (n1 * n0)
}

/// `E[f(X)]` for `X ~ N(0, sd²)` by the midpoint rule over `±10` sd.
pub fn normal_expectation<F: Fn(f64) -> f64>(sd: f64, f: F) -> f64 {
    if sd == 0.0 {
        return f(0.0);
    }
    let n = 4000;
    let width = 20.0 / n as f64;
    (0..n)
        .map(|i| {
            let z = -10.0 + (i as f64 + 0.5) * width;
            (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt() * f(sd * z) * width
        })
        .sum()
}
