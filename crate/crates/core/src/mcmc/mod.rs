//! Metropolis-within-Gibbs sampler for the joint latent class model.
//!
//! Each iteration updates, in order: the per-visit class labels, the
//! conjugate blocks (`β_k`, `τ_k`, `λ0_k`), the non-conjugate blocks by
//! adaptive Metropolis (`(ω_k, γ_k)`, `ξ_k`, `α1`, `α2`), and finally every
//! subject's random effects.

mod adaptive;
mod chain;
mod classes;
mod gibbs;
mod init;
mod output;
mod relabel;
mod summary;

use nalgebra::{DMatrix, DVector};

use crate::error::{JlcmError, Result};
use crate::parallel::Execution;
use crate::params::{LatentState, ParameterSet};

pub use adaptive::{acceptance_probability, AdaptiveMetropolis, Proposal};
pub use chain::{run_chain, run_chain_from};
pub use classes::{class_probabilities, sample_class_indicators};
pub use gibbs::{
    beta_conditional, lambda_conditional, sample_beta_k, sample_inverse_gamma, sample_lambda_k, sample_positive_gamma,
    sample_tau_k, tau_conditional, BetaConditional,
};
pub use init::initial_state;
pub use output::{write_acceptance, write_chain, write_draws, write_log_likelihood};
pub use relabel::{canonical_order, relabel, RelabelPolicy};
pub use summary::{quantile, summarize, summarize_values, ParameterSummary, ValueSummary};

/// Prior hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorConfig {
    /// Prior mean of every `β_k`; `None` means zeros.
    pub beta_mean: Option<Vec<f64>>,
    /// Full prior covariance of `β_k`; `None` means `beta_variance · I`.
    pub beta_covariance: Option<Vec<Vec<f64>>>,
    pub beta_variance: f64,
    pub lambda_shape: f64,
    pub lambda_rate: f64,
    pub tau_shape: f64,
    pub tau_rate: f64,
    /// Variance of the independent normal prior on each element of
    /// `ω, ξ, α1, α2, γ`.
    pub theta_variance: f64,
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self {
            beta_mean: None,
            beta_covariance: None,
            beta_variance: 100.0,
            lambda_shape: 0.01,
            lambda_rate: 0.01,
            tau_shape: 0.01,
            tau_rate: 0.01,
            theta_variance: 1.0,
        }
    }
}

/// Normal prior on `β_k` in precision form.
#[derive(Debug, Clone)]
pub struct BetaPrior {
    pub mean: DVector<f64>,
    pub precision: DMatrix<f64>,
    pub precision_mean: DVector<f64>,
}

impl PriorConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("beta_variance", self.beta_variance),
            ("lambda_shape", self.lambda_shape),
            ("lambda_rate", self.lambda_rate),
            ("tau_shape", self.tau_shape),
            ("tau_rate", self.tau_rate),
            ("theta_variance", self.theta_variance),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(JlcmError::Config(format!("prior {name} must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }

    pub fn beta_prior(&self, dim: usize) -> Result<BetaPrior> {
        let mean = match &self.beta_mean {
            Some(m) if m.len() != dim => {
                return Err(JlcmError::Config(format!("beta prior mean has length {}, expected {dim}", m.len())))
            }
            Some(m) => DVector::from_column_slice(m),
            None => DVector::zeros(dim),
        };
        let cov = match &self.beta_covariance {
            Some(rows) => {
                if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                    return Err(JlcmError::Config(format!("beta prior covariance must be {dim}x{dim}")));
                }
                DMatrix::from_fn(dim, dim, |i, j| rows[i][j])
            }
            None => DMatrix::identity(dim, dim) * self.beta_variance,
        };
        let symmetric = (0..dim).all(|i| (0..i).all(|j| (cov[(i, j)] - cov[(j, i)]).abs() <= 1e-12 * cov[(i, i)].abs().max(1.0)));
        let chol = match cov.clone().cholesky() {
            Some(c) if symmetric => c,
            _ => return Err(JlcmError::Config("beta prior covariance must be symmetric positive definite".into())),
        };
        let precision = chol.inverse();
        let precision_mean = &precision * &mean;
        Ok(BetaPrior {
            mean,
            precision,
            precision_mean,
        })
    }
}

/// Whether the data enter the targets. `PriorOnly` samples every parameter
/// from its prior with labels and random effects held fixed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum LikelihoodMode {
    #[default]
    Full,
    PriorOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    /// Scale `σ²` of the adaptive proposal component.
    pub adaptive_scale: f64,
    /// Weight of the fixed safety component after warm-up.
    pub safety_weight: f64,
    /// Standard deviation of the safety component before division by the
    /// block dimension.
    pub initial_scale: f64,
    pub relabel: RelabelPolicy,
    pub likelihood: LikelihoodMode,
    pub execution: Execution,
    /// Random restarts of the label initialization.
    pub init_restarts: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            iterations: 5000,
            burn_in: 2000,
            thin: 1,
            seed: 1,
            adaptive_scale: 2.38 * 2.38,
            safety_weight: 0.05,
            initial_scale: 0.1,
            relabel: RelabelPolicy::default(),
            likelihood: LikelihoodMode::default(),
            execution: Execution::default(),
            init_restarts: 10,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.burn_in >= self.iterations {
            return Err(JlcmError::Config(format!(
                "burn-in ({}) must be smaller than the number of iterations ({})",
                self.burn_in, self.iterations
            )));
        }
        if self.thin == 0 {
            return Err(JlcmError::Config("thinning must be at least 1".into()));
        }
        if !(self.safety_weight > 0.0 && self.safety_weight < 1.0) {
            return Err(JlcmError::Config(format!("safety weight must lie in (0, 1), got {}", self.safety_weight)));
        }
        if !(self.adaptive_scale > 0.0 && self.initial_scale > 0.0) {
            return Err(JlcmError::Config("proposal scales must be positive".into()));
        }
        Ok(())
    }

    /// Number of draws kept after burn-in and thinning.
    pub fn stored_draws(&self) -> usize {
        (self.iterations - self.burn_in) / self.thin
    }
}

/// Acceptance counts for one adaptive block (or a family of blocks, such as
/// all subjects' random effects).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BlockAcceptance {
    pub block: String,
    pub proposed: u64,
    pub accepted: u64,
    pub proposed_adapted: u64,
    pub accepted_adapted: u64,
}

impl BlockAcceptance {
    pub fn rate(&self) -> f64 {
        ratio(self.accepted, self.proposed)
    }

    /// Acceptance rate once the adaptive component is in use.
    pub fn adapted_rate(&self) -> f64 {
        ratio(self.accepted_adapted, self.proposed_adapted)
    }

    pub(crate) fn absorb(&mut self, am: &AdaptiveMetropolis) {
        self.proposed += am.proposed();
        self.accepted += am.accepted();
        self.proposed_adapted += am.proposed_adapted();
        self.accepted_adapted += am.accepted_adapted();
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainOutput {
    pub k: usize,
    /// 1-based iteration index of each stored draw.
    pub iterations: Vec<usize>,
    pub draws: Vec<ParameterSet>,
    pub states: Vec<LatentState>,
    /// Joint log-likelihood of each stored draw.
    pub draw_log_likelihood: Vec<f64>,
    /// Joint log-likelihood after every iteration, burn-in included. In
    /// prior-only mode this is the log prior of the Metropolis blocks.
    pub trace: Vec<f64>,
    pub acceptance: Vec<BlockAcceptance>,
}

impl ChainOutput {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn posterior_mean(&self) -> Result<ParameterSet> {
        ParameterSet::mean_of(&self.draws).ok_or(JlcmError::EmptyChain)
    }

    /// Mean of each subject's random effects over the stored draws.
    pub fn mean_effects(&self) -> Result<Vec<Vec<f64>>> {
        let first = self.states.first().ok_or(JlcmError::EmptyChain)?;
        let n = self.states.len() as f64;
        let mut out: Vec<Vec<f64>> = first.effects.iter().map(|w| vec![0.0; w.len()]).collect();
        for s in &self.states {
            for (acc, w) in out.iter_mut().zip(&s.effects) {
                for (a, v) in acc.iter_mut().zip(w) {
                    *a += v;
                }
            }
        }
        out.iter_mut().flatten().for_each(|v| *v /= n);
        Ok(out)
    }

    /// Most frequent label of every visit over the stored draws; ties go to
    /// the lower class index.
    pub fn modal_labels(&self) -> Result<Vec<Vec<usize>>> {
        let first = self.states.first().ok_or(JlcmError::EmptyChain)?;
        let mut counts: Vec<Vec<Vec<u32>>> = first.labels.iter().map(|r| vec![vec![0; self.k]; r.len()]).collect();
        for s in &self.states {
            for (ci, row) in counts.iter_mut().zip(&s.labels) {
                for (c, &l) in ci.iter_mut().zip(row) {
                    c[l] += 1;
                }
            }
        }
        Ok(counts
            .iter()
            .map(|ci| {
                ci.iter()
                    .map(|c| {
                        let max = *c.iter().max().unwrap_or(&0);
                        c.iter().position(|&v| v == max).unwrap_or(0)
                    })
                    .collect()
            })
            .collect())
    }
}
