//! Densities of the membership, longitudinal and survival submodels and the
//! joint log-likelihood given latent classes and random effects.
//!
//! Everything is evaluated in log space. Per visit, the class-`k` term is
//! `log π_ijk + log f(y_ij | k)`; the survival density enters only at the
//! subject's final visit, through the class held there.

use crate::covariance::{build_factors, random_effects_log_density, CholeskyFactors};
use crate::data::{Dataset, Subject};
use crate::error::{JlcmError, Result};
use crate::parallel::{map_indexed, Execution};
use crate::params::{validate, validate_state, ClassParams, LatentState, ParameterSet};

/// Below this `|γ|` the cumulative hazard uses its `γ → 0` limit.
pub const GAMMA_EPS: f64 = 1e-8;

const LN_2PI: f64 = 1.837_877_066_409_345_3;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Normalizes log weights into probabilities.
pub fn normalize_log_weights(log_w: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(log_w);
    if !lse.is_finite() {
        return vec![1.0 / log_w.len() as f64; log_w.len()];
    }
    log_w.iter().map(|w| (w - lse).exp()).collect()
}

/// Multinomial-logit log membership probabilities `log π_k` for covariates `x1`.
pub fn membership_log_probabilities<'a>(x1: &[f64], xis: impl IntoIterator<Item = &'a [f64]>) -> Vec<f64> {
    let eta: Vec<f64> = xis.into_iter().map(|xi| dot(x1, xi)).collect();
    let lse = log_sum_exp(&eta);
    eta.into_iter().map(|e| e - lse).collect()
}

pub fn membership_probabilities(x1: &[f64], xis: &[Vec<f64>]) -> Vec<f64> {
    membership_log_probabilities(x1, xis.iter().map(Vec::as_slice))
        .into_iter()
        .map(f64::exp)
        .collect()
}

/// Gaussian log density of `y` with mean `x2ᵀβ + zᵀU` and variance `tau`.
pub fn longitudinal_log_density(y: f64, x2: &[f64], z: &[f64], beta: &[f64], u: &[f64], tau: f64) -> f64 {
    let r = y - dot(x2, beta) - dot(z, u);
    -0.5 * (LN_2PI + tau.ln()) - 0.5 * r * r / tau
}

/// Class-specific Gompertz proportional hazard
/// `λ(t) = λ₀ exp(γ t) exp(x3ᵀω + υ)`.
#[derive(Debug, Clone, Copy)]
pub struct Gompertz<'a> {
    pub lambda0: f64,
    pub gamma: f64,
    pub omega: &'a [f64],
}

impl<'a> Gompertz<'a> {
    pub fn from_class(c: &'a ClassParams) -> Self {
        Self {
            lambda0: c.lambda0,
            gamma: c.gamma,
            omega: &c.omega,
        }
    }

    pub fn linear_predictor(&self, x3: &[f64], upsilon: f64) -> f64 {
        dot(x3, self.omega) + upsilon
    }
}

/// `∫₀ᵗ exp(γu) du`, switching to `t` for `|γ| < GAMMA_EPS`.
pub fn gompertz_integral(t: f64, gamma: f64) -> f64 {
    if gamma.abs() < GAMMA_EPS {
        t
    } else {
        (gamma * t).exp_m1() / gamma
    }
}

pub fn hazard(t: f64, x3: &[f64], model: &Gompertz<'_>, upsilon: f64) -> f64 {
    model.lambda0 * (model.gamma * t + model.linear_predictor(x3, upsilon)).exp()
}

pub fn cumulative_hazard(t: f64, x3: &[f64], model: &Gompertz<'_>, upsilon: f64) -> f64 {
    model.lambda0 * model.linear_predictor(x3, upsilon).exp() * gompertz_integral(t, model.gamma)
}

/// `δ log λ(T) − H(T)`.
pub fn survival_log_density(t: f64, event: bool, x3: &[f64], model: &Gompertz<'_>, upsilon: f64) -> f64 {
    let eta = model.linear_predictor(x3, upsilon);
    let cum = model.lambda0 * eta.exp() * gompertz_integral(t, model.gamma);
    if event {
        model.lambda0.ln() + model.gamma * t + eta - cum
    } else {
        -cum
    }
}

/// Split of a random-effects vector into `(U, υ)`.
pub fn split_effects(w: &[f64]) -> (&[f64], f64) {
    let (u, v) = w.split_at(w.len() - 1);
    (u, v[0])
}

/// Unnormalized log weights `log P_ijk` for every visit of `subject`
/// (`[j][k]`), given its random effects. The survival term is included at the
/// last visit only.
pub fn subject_site_log_weights(params: &ParameterSet, subject: &Subject, w: &[f64]) -> Vec<Vec<f64>> {
    let (u, upsilon) = split_effects(w);
    let m = subject.visits();
    let surv = &subject.survival;
    subject
        .observations
        .iter()
        .enumerate()
        .map(|(j, o)| {
            let log_pi = membership_log_probabilities(&o.x1, params.xis());
            params
                .classes
                .iter()
                .zip(log_pi)
                .map(|(c, lp)| {
                    let mut v = lp + longitudinal_log_density(o.response, &o.x2, &o.z, &c.beta, u, c.tau);
                    if j + 1 == m {
                        v += survival_log_density(surv.time, surv.event, &surv.x3, &Gompertz::from_class(c), upsilon);
                    }
                    v
                })
                .collect()
        })
        .collect()
}

/// Log-likelihood contribution of one subject given its labels and effects,
/// using precomputed covariance factors.
pub fn subject_log_likelihood_with(
    params: &ParameterSet,
    subject: &Subject,
    labels: &[usize],
    w: &[f64],
    factors: &CholeskyFactors,
) -> f64 {
    let (u, upsilon) = split_effects(w);
    let m = subject.visits();
    let mut total = random_effects_log_density(w, factors);
    for (j, (o, &k)) in subject.observations.iter().zip(labels).enumerate() {
        let c = &params.classes[k];
        let log_pi = membership_log_probabilities(&o.x1, params.xis())[k];
        total += log_pi + longitudinal_log_density(o.response, &o.x2, &o.z, &c.beta, u, c.tau);
        if j + 1 == m {
            let s = &subject.survival;
            total += survival_log_density(s.time, s.event, &s.x3, &Gompertz::from_class(c), upsilon);
        }
    }
    total
}

pub fn subject_log_likelihood(params: &ParameterSet, subject: &Subject, labels: &[usize], w: &[f64]) -> Result<f64> {
    let f = build_factors(&params.alpha1, &params.alpha2, &subject.design, w.len() - 1)?;
    Ok(subject_log_likelihood_with(params, subject, labels, w, &f))
}

fn check_inputs(params: &ParameterSet, data: &Dataset, state: &LatentState) -> Result<()> {
    validate(params, data).map_err(JlcmError::Validation)?;
    validate_state(state, data, params.k())
}

/// Per-subject log-likelihood contributions, in subject order.
pub fn subject_log_likelihoods(exec: Execution, params: &ParameterSet, data: &Dataset, state: &LatentState) -> Result<Vec<f64>> {
    check_inputs(params, data, state)?;
    let q = data.q();
    let parts = map_indexed(exec, data.len(), |i| {
        let s = &data.subjects()[i];
        build_factors(&params.alpha1, &params.alpha2, &s.design, q)
            .map(|f| subject_log_likelihood_with(params, s, &state.labels[i], &state.effects[i], &f))
    });
    parts.into_iter().collect()
}

/// Joint log-likelihood of parameters, latent classes and random effects.
pub fn joint_log_likelihood(params: &ParameterSet, data: &Dataset, state: &LatentState) -> Result<f64> {
    joint_log_likelihood_with(Execution::default(), params, data, state)
}

pub fn joint_log_likelihood_with(exec: Execution, params: &ParameterSet, data: &Dataset, state: &LatentState) -> Result<f64> {
    Ok(subject_log_likelihoods(exec, params, data, state)?.into_iter().sum())
}

/// Every per-class building block of the likelihood at fixed parameters and
/// random effects.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodTerms {
    /// `[i][j][k]`: `log π_ijk`.
    pub log_membership: Vec<Vec<Vec<f64>>>,
    /// `[i][j][k]`: `log f(y_ij | R_ij = k, W_i)`.
    pub log_response: Vec<Vec<Vec<f64>>>,
    /// `[i][k]`: `log f(T_i, δ_i | R_im = k, W_i)`.
    pub log_survival: Vec<Vec<f64>>,
    /// `[i]`: `log f(W_i | Ψ)`.
    pub log_effects: Vec<f64>,
}

impl LikelihoodTerms {
    pub fn compute(exec: Execution, params: &ParameterSet, data: &Dataset, effects: &[Vec<f64>]) -> Result<Self> {
        validate(params, data).map_err(JlcmError::Validation)?;
        if effects.len() != data.len() || effects.iter().any(|w| w.len() != data.dims().effects()) {
            return Err(JlcmError::Dimension("random effects do not match the dataset".into()));
        }
        let q = data.q();
        let per_subject = map_indexed(exec, data.len(), |i| -> Result<_> {
            let s = &data.subjects()[i];
            let w = &effects[i];
            let (u, upsilon) = split_effects(w);
            let f = build_factors(&params.alpha1, &params.alpha2, &s.design, q)?;
            let memb: Vec<Vec<f64>> = s
                .observations
                .iter()
                .map(|o| membership_log_probabilities(&o.x1, params.xis()))
                .collect();
            let resp: Vec<Vec<f64>> = s
                .observations
                .iter()
                .map(|o| {
                    params
                        .classes
                        .iter()
                        .map(|c| longitudinal_log_density(o.response, &o.x2, &o.z, &c.beta, u, c.tau))
                        .collect()
                })
                .collect();
            let sv = &s.survival;
            let surv: Vec<f64> = params
                .classes
                .iter()
                .map(|c| survival_log_density(sv.time, sv.event, &sv.x3, &Gompertz::from_class(c), upsilon))
                .collect();
            Ok((memb, resp, surv, random_effects_log_density(w, &f)))
        });
        let mut out = LikelihoodTerms {
            log_membership: Vec::with_capacity(data.len()),
            log_response: Vec::with_capacity(data.len()),
            log_survival: Vec::with_capacity(data.len()),
            log_effects: Vec::with_capacity(data.len()),
        };
        for part in per_subject {
            let (m, r, s, e) = part?;
            out.log_membership.push(m);
            out.log_response.push(r);
            out.log_survival.push(s);
            out.log_effects.push(e);
        }
        Ok(out)
    }

    /// `log P_ijk` for every class at visit `j` of subject `i`.
    pub fn site_log_weights(&self, i: usize, j: usize) -> Vec<f64> {
        let last = j + 1 == self.log_membership[i].len();
        (0..self.log_survival[i].len())
            .map(|k| {
                let mut v = self.log_membership[i][j][k] + self.log_response[i][j][k];
                if last {
                    v += self.log_survival[i][k];
                }
                v
            })
            .collect()
    }
}
