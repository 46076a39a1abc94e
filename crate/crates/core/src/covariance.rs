//! Modified Cholesky parameterization of the random-effects covariance.
//!
//! For each subject, `T Σ Tᵀ = D` where `T` is unit lower triangular with
//! `(g, l)` entry `-φ` and `D = diag(d²)`. The autoregressive coefficients
//! follow `φ = Aᵀα₁` and the innovation variances `log d² = Bᵀα₂`, so any
//! real `α₁, α₂` give a positive-definite `Σ`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::data::CovarianceDesign;
use crate::error::{JlcmError, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_3;

#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactors {
    t: DMatrix<f64>,
    log_d2: DVector<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Factors for one subject. Every `(g, l)` pair shares `φ = Aᵀα₁` and every
/// `g` shares `log d² = Bᵀα₂`.
pub fn build_factors(alpha1: &[f64], alpha2: &[f64], design: &CovarianceDesign, q: usize) -> Result<CholeskyFactors> {
    if alpha1.len() != design.a.len() || alpha2.len() != design.b.len() {
        return Err(JlcmError::Dimension(format!(
            "covariance coefficients ({}, {}) do not match design ({}, {})",
            alpha1.len(),
            alpha2.len(),
            design.a.len(),
            design.b.len()
        )));
    }
    let n = q + 1;
    let phi = dot(&design.a, alpha1);
    let log_d2 = dot(&design.b, alpha2);
    let t = DMatrix::from_fn(n, n, |g, l| match g.cmp(&l) {
        std::cmp::Ordering::Equal => 1.0,
        std::cmp::Ordering::Greater => -phi,
        std::cmp::Ordering::Less => 0.0,
    });
    Ok(CholeskyFactors {
        t,
        log_d2: DVector::from_element(n, log_d2),
    })
}

impl CholeskyFactors {
    /// Builds factors from explicit parts, checking the unit-triangular shape.
    pub fn from_parts(t: DMatrix<f64>, log_d2: DVector<f64>) -> Result<Self> {
        let n = t.nrows();
        let shape_ok = t.ncols() == n
            && log_d2.len() == n
            && (0..n).all(|g| t[(g, g)] == 1.0 && (g + 1..n).all(|l| t[(g, l)] == 0.0));
        if !shape_ok || log_d2.iter().any(|v| !v.is_finite()) {
            return Err(JlcmError::InvalidParameter(
                "T must be unit lower triangular and log d² finite".into(),
            ));
        }
        Ok(Self { t, log_d2 })
    }

    pub fn dim(&self) -> usize {
        self.log_d2.len()
    }

    pub fn t(&self) -> &DMatrix<f64> {
        &self.t
    }

    pub fn log_d2(&self) -> &DVector<f64> {
        &self.log_d2
    }

    /// `D` as a dense diagonal matrix.
    pub fn d(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.log_d2.map(f64::exp))
    }

    /// Autoregressive coefficient `φ_gl` (0-based, `l < g`).
    pub fn phi(&self, g: usize, l: usize) -> f64 {
        -self.t[(g, l)]
    }

    /// Draws `W ~ N(0, Σ)` by sampling innovations and inverting `T`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let n = self.dim();
        let mut w = vec![0.0; n];
        for g in 0..n {
            let e: f64 = rng.sample::<f64, _>(StandardNormal) * (0.5 * self.log_d2[g]).exp();
            w[g] = e - (0..g).map(|l| self.t[(g, l)] * w[l]).sum::<f64>();
        }
        w
    }
}

/// `Σ = T⁻¹ D T⁻ᵀ`, computed with two unit-triangular solves.
pub fn sigma_from_factors(f: &CholeskyFactors) -> DMatrix<f64> {
    let n = f.dim();
    let mut tinv = DMatrix::identity(n, n);
    f.t.solve_lower_triangular_with_diag_mut(&mut tinv, 1.0);
    // Σ = (T⁻¹ D^{1/2}) (T⁻¹ D^{1/2})ᵀ
    let mut l = tinv;
    for g in 0..n {
        let s = (0.5 * f.log_d2[g]).exp();
        l.column_mut(g).scale_mut(s);
    }
    let sigma = &l * l.transpose();
    (&sigma + sigma.transpose()) * 0.5
}

/// Log density of `w` under `N(0, Σ)`:
/// `-(n/2) log 2π - ½ Σ_g [log d²_g + e²_g / d²_g]` with `e = T w`.
pub fn random_effects_log_density(w: &[f64], f: &CholeskyFactors) -> f64 {
    let n = f.dim();
    let mut quad = 0.0;
    for g in 0..n {
        let e = w[g] + (0..g).map(|l| f.t[(g, l)] * w[l]).sum::<f64>();
        let ld = f.log_d2[g];
        quad += ld + e * e * (-ld).exp();
    }
    -0.5 * (n as f64) * LN_2PI - 0.5 * quad
}
