use std::time::Instant;

use jlcm_core::covariance::{build_factors, random_effects_log_density, sigma_from_factors};
use jlcm_core::data::CovarianceDesign;
use jlcm_core::rng::substream;
use nalgebra::SymmetricEigen;
use rand::Rng;

use crate::oracles::dense_normal_log_density;
use crate::Outcome;

pub fn criterion() -> Outcome {
    let start = Instant::now();
    let mut rng = substream(11, &[1]);
    let (mut min_eig, mut max_factor_err, mut max_density_err) = (f64::INFINITY, 0.0f64, 0.0f64);
    for _ in 0..1000 {
        let q = rng.random_range(1..=4);
        let (pa, pb) = (rng.random_range(1..=3), rng.random_range(1..=3));
        let mut coef = |n: usize, lo: f64, hi: f64| (0..n).map(|_| rng.random_range(lo..hi)).collect::<Vec<f64>>();
        let design = CovarianceDesign {
            a: coef(pa, -1.0, 1.0),
            b: coef(pb, -1.0, 1.0),
        };
        let (alpha1, alpha2) = (coef(pa, -0.5, 0.5), coef(pb, -0.5, 0.5));
        let w = coef(q + 1, -2.0, 2.0);

        let f = build_factors(&alpha1, &alpha2, &design, q).expect("valid dimensions");
        let sigma = sigma_from_factors(&f);
        min_eig = min_eig.min(SymmetricEigen::new(sigma.clone()).eigenvalues.min());
        let residual = f.t() * &sigma * f.t().transpose() - f.d();
        max_factor_err = max_factor_err.max(residual.abs().max());
        let err = (random_effects_log_density(&w, &f) - dense_normal_log_density(&w, &sigma)).abs();
        max_density_err = max_density_err.max(err);
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(
        min_eig > 0.0 && max_factor_err < 1e-10 && max_density_err < 1e-8 && secs < 5.0,
        format!(
            "1000 cases; min eigenvalue {min_eig:.3e}, max |TΣTᵀ−D| {max_factor_err:.1e}, max log-density gap {max_density_err:.1e}"
        ),
    )
}
