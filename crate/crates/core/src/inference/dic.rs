//! Deviance information criterion conditional on the latent classes and
//! random effects.

use crate::data::Dataset;
use crate::error::{JlcmError, Result};
use crate::likelihood::joint_log_likelihood_with;
use crate::mcmc::{relabel, ChainOutput, RelabelPolicy};
use crate::parallel::Execution;
use crate::params::LatentState;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelScore {
    pub mean_deviance: f64,
    /// Effective number of parameters; may be negative.
    pub p_d: f64,
    pub dic: f64,
}

pub fn compute_dic(chain: &ChainOutput, data: &Dataset) -> Result<ModelScore> {
    compute_dic_with(Execution::default(), chain, data)
}

/// `D(Ψ) = −2 log L(Ψ | R, W)` with each draw's own labels and effects;
/// `p_D = D̄ − D(Ψ̄, R̂, W̄)` with `R̂` the modal labels, and `DIC = D̄ + p_D`.
/// Draws are put in canonical class order first.
pub fn compute_dic_with(exec: Execution, chain: &ChainOutput, data: &Dataset) -> Result<ModelScore> {
    if chain.is_empty() {
        return Err(JlcmError::EmptyChain);
    }
    let chain = relabel(chain, RelabelPolicy::FirstFixedEffect);
    let mut total = 0.0;
    for (p, s) in chain.draws.iter().zip(&chain.states) {
        total += -2.0 * joint_log_likelihood_with(exec, p, data, s)?;
    }
    let mean_deviance = total / chain.len() as f64;
    let at_mean = LatentState {
        labels: chain.modal_labels()?,
        effects: chain.mean_effects()?,
    };
    let d_hat = -2.0 * joint_log_likelihood_with(exec, &chain.posterior_mean()?, data, &at_mean)?;
    let p_d = mean_deviance - d_hat;
    Ok(ModelScore {
        mean_deviance,
        p_d,
        dic: mean_deviance + p_d,
    })
}
