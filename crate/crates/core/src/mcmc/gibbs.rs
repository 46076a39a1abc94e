//! Conjugate full conditionals for `β_k`, `λ0_k` and `τ_k`.
//!
//! A class with no assigned visits (or no subject ending in it, for `λ0_k`)
//! contributes no data, so its conditional reduces to the prior.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use super::{BetaPrior, PriorConfig};
use crate::data::Dataset;
use crate::likelihood::{dot, gompertz_integral, split_effects};
use crate::params::LatentState;

fn clamp_positive(v: f64) -> f64 {
    v.clamp(f64::MIN_POSITIVE, f64::MAX)
}

/// Gamma draw with the given shape and rate, kept inside the positive
/// normal range of `f64`.
pub fn sample_positive_gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64, rate: f64) -> f64 {
    let g = Gamma::new(shape, 1.0 / rate).expect("gamma shape and rate are positive");
    clamp_positive(g.sample(rng))
}

pub fn sample_inverse_gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64, rate: f64) -> f64 {
    let g = Gamma::new(shape, 1.0 / rate).expect("inverse gamma shape and rate are positive");
    clamp_positive(1.0 / g.sample(rng))
}

/// Normal full conditional of `β_k`, stored in precision form.
#[derive(Debug, Clone)]
pub struct BetaConditional {
    pub mean: DVector<f64>,
    precision: Cholesky<f64, Dyn>,
}

impl BetaConditional {
    fn from_normal_equations(a: DMatrix<f64>, b: DVector<f64>) -> Self {
        let precision = a.cholesky().expect("posterior precision is positive definite");
        let mean = precision.solve(&b);
        Self { mean, precision }
    }

    pub fn from_prior(prior: &BetaPrior) -> Self {
        Self::from_normal_equations(prior.precision.clone(), prior.precision_mean.clone())
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        self.precision.inverse()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let d = self.mean.len();
        let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let lt = self.precision.l().transpose();
        let x = lt.solve_upper_triangular(&z).expect("triangular factor is nonsingular");
        (&self.mean + x).iter().copied().collect()
    }
}

/// `A = Σ x2 x2ᵀ / τ + Σβ⁻¹`, `B = Σ (y − zᵀU) x2 / τ + Σβ⁻¹ β0` over visits
/// labelled `k`; the conditional is `N(A⁻¹B, A⁻¹)`.
pub fn beta_conditional(k: usize, data: &Dataset, state: &LatentState, tau: f64, prior: &BetaPrior) -> BetaConditional {
    let mut a = prior.precision.clone();
    let mut b = prior.precision_mean.clone();
    let d = b.len();
    for (i, s) in data.subjects().iter().enumerate() {
        let (u, _) = split_effects(&state.effects[i]);
        for (o, &l) in s.observations.iter().zip(&state.labels[i]) {
            if l != k {
                continue;
            }
            let r = o.response - dot(&o.z, u);
            for p in 0..d {
                b[p] += r * o.x2[p] / tau;
                for c in 0..d {
                    a[(p, c)] += o.x2[p] * o.x2[c] / tau;
                }
            }
        }
    }
    BetaConditional::from_normal_equations(a, b)
}

pub fn sample_beta_k<R: Rng + ?Sized>(
    rng: &mut R,
    k: usize,
    data: &Dataset,
    state: &LatentState,
    tau: f64,
    prior: &BetaPrior,
) -> Vec<f64> {
    beta_conditional(k, data, state, tau, prior).sample(rng)
}

/// Shape and rate of the Gamma conditional of `λ0_k`: events among subjects
/// whose final label is `k`, and their cumulative hazards with `λ0` factored
/// out.
pub fn lambda_conditional(
    k: usize,
    data: &Dataset,
    state: &LatentState,
    gamma: f64,
    omega: &[f64],
    prior: &PriorConfig,
) -> (f64, f64) {
    let mut shape = prior.lambda_shape;
    let mut rate = prior.lambda_rate;
    for (i, s) in data.subjects().iter().enumerate() {
        if state.labels[i].last() != Some(&k) {
            continue;
        }
        let (_, upsilon) = split_effects(&state.effects[i]);
        let sv = &s.survival;
        if sv.event {
            shape += 1.0;
        }
        rate += (dot(&sv.x3, omega) + upsilon).exp() * gompertz_integral(sv.time, gamma);
    }
    (shape, rate)
}

pub fn sample_lambda_k<R: Rng + ?Sized>(
    rng: &mut R,
    k: usize,
    data: &Dataset,
    state: &LatentState,
    gamma: f64,
    omega: &[f64],
    prior: &PriorConfig,
) -> f64 {
    let (shape, rate) = lambda_conditional(k, data, state, gamma, omega, prior);
    sample_positive_gamma(rng, shape, rate)
}

/// Shape and rate of the inverse-gamma conditional of `τ_k`.
pub fn tau_conditional(k: usize, data: &Dataset, state: &LatentState, beta: &[f64], prior: &PriorConfig) -> (f64, f64) {
    let mut n = 0.0;
    let mut ss = 0.0;
    for (i, s) in data.subjects().iter().enumerate() {
        let (u, _) = split_effects(&state.effects[i]);
        for (o, &l) in s.observations.iter().zip(&state.labels[i]) {
            if l == k {
                let r = o.response - dot(&o.x2, beta) - dot(&o.z, u);
                n += 1.0;
                ss += r * r;
            }
        }
    }
    (prior.tau_shape + 0.5 * n, prior.tau_rate + 0.5 * ss)
}

pub fn sample_tau_k<R: Rng + ?Sized>(
    rng: &mut R,
    k: usize,
    data: &Dataset,
    state: &LatentState,
    beta: &[f64],
    prior: &PriorConfig,
) -> f64 {
    let (shape, rate) = tau_conditional(k, data, state, beta, prior);
    sample_inverse_gamma(rng, shape, rate)
}
