//! Dynamic prediction of conditional survival `S(t + Δt | T ≥ t)` from a
//! mixture of class-specific Gompertz survival curves.
//!
//! The mixture weights are the classification weights at the last visit
//! observed by the landmark `t`, with the survival factor replaced by
//! `S_k(t)` since only survival up to `t` is known. Weights are held fixed
//! across horizons, so predictions are nonincreasing in `Δt`.

use crate::data::Subject;
use crate::error::{JlcmError, Result};
use crate::likelihood::{
    cumulative_hazard, log_sum_exp, longitudinal_log_density, membership_log_probabilities, normalize_log_weights,
    split_effects, Gompertz,
};
use crate::params::ParameterSet;

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRequest {
    pub subject: Subject,
    /// Estimated random effects of the subject.
    pub effects: Vec<f64>,
    pub landmark: f64,
    pub horizons: Vec<f64>,
}

/// `log Σ_k w_k exp(−H_k(t))`.
pub fn mixture_log_survival(weights: &[f64], models: &[Gompertz<'_>], x3: &[f64], upsilon: f64, t: f64) -> f64 {
    let terms: Vec<f64> = weights
        .iter()
        .zip(models)
        .map(|(w, m)| w.ln() - cumulative_hazard(t, x3, m, upsilon))
        .collect();
    log_sum_exp(&terms)
}

/// `S(t + Δ) / S(t)` for each horizon `Δ`, or `None` when `S(t)` underflows.
pub fn mixture_survival_ratio(
    weights: &[f64],
    models: &[Gompertz<'_>],
    x3: &[f64],
    upsilon: f64,
    landmark: f64,
    horizons: &[f64],
) -> Option<Vec<f64>> {
    let base = mixture_log_survival(weights, models, x3, upsilon, landmark);
    if !base.is_finite() {
        return None;
    }
    Some(
        horizons
            .iter()
            .map(|&h| (mixture_log_survival(weights, models, x3, upsilon, landmark + h) - base).exp().min(1.0))
            .collect(),
    )
}

/// Mixture weights at the last visit of `history` given survival to
/// `landmark`.
pub fn landmark_weights(params: &ParameterSet, history: &Subject, effects: &[f64], landmark: f64) -> Result<Vec<f64>> {
    let o = history.observations.last().ok_or_else(|| {
        JlcmError::InvalidParameter(format!("subject {} has no observation at or before the landmark", history.id))
    })?;
    let (u, upsilon) = split_effects(effects);
    let x3 = &history.survival.x3;
    let log_pi = membership_log_probabilities(&o.x1, params.xis());
    let lw: Vec<f64> = params
        .classes
        .iter()
        .zip(&log_pi)
        .map(|(c, lp)| {
            2.0 * lp + longitudinal_log_density(o.response, &o.x2, &o.z, &c.beta, u, c.tau)
                - cumulative_hazard(landmark, x3, &Gompertz::from_class(c), upsilon)
        })
        .collect();
    Ok(normalize_log_weights(&lw))
}

/// Conditional survival probabilities for every requested horizon.
pub fn dynamic_survival(request: &PredictionRequest, params: &ParameterSet) -> Result<Vec<f64>> {
    let t = request.landmark;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(JlcmError::InvalidParameter(format!("landmark must be a nonnegative number, got {t}")));
    }
    if let Some(h) = request.horizons.iter().find(|h| !(**h >= 0.0 && h.is_finite())) {
        return Err(JlcmError::InvalidParameter(format!("horizons must be nonnegative, got {h}")));
    }
    let history = request.subject.history_until(t);
    let weights = landmark_weights(params, &history, &request.effects, t)?;
    let models: Vec<Gompertz<'_>> = params.classes.iter().map(Gompertz::from_class).collect();
    let (_, upsilon) = split_effects(&request.effects);
    mixture_survival_ratio(&weights, &models, &history.survival.x3, upsilon, t, &request.horizons).ok_or_else(|| {
        JlcmError::DegenerateLandmark {
            subject: request.subject.id.clone(),
            landmark: t,
        }
    })
}
