//! Adaptive random-walk Metropolis for one parameter block.
//!
//! For the first `2d` steps the proposal is `N(θ, s²I/d)` with the fixed
//! safety scale `s`. Afterwards it is the mixture
//! `(1 − w)·N(θ, σ²Σ/d) + w·N(θ, s²I/d)`, where `Σ` is the running empirical
//! covariance of the block's past states. Both components are symmetric, so
//! the acceptance ratio is the target ratio.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::SamplerConfig;

/// Proposal distribution in force at a given step.
#[derive(Debug, Clone, PartialEq)]
pub enum Proposal {
    Fixed(DMatrix<f64>),
    Mixture {
        adaptive: DMatrix<f64>,
        safety: DMatrix<f64>,
        safety_weight: f64,
    },
}

#[derive(Debug, Clone)]
pub struct AdaptiveMetropolis {
    dim: usize,
    adaptive_scale: f64,
    safety_weight: f64,
    initial_scale: f64,
    history: u64,
    mean: DVector<f64>,
    scatter: DMatrix<f64>,
    proposed: u64,
    accepted: u64,
    proposed_adapted: u64,
    accepted_adapted: u64,
}

/// `min(1, exp(new − current))`; a non-finite proposal has probability 0.
pub fn acceptance_probability(current: f64, proposal: f64) -> f64 {
    if !proposal.is_finite() {
        return 0.0;
    }
    (proposal - current).exp().min(1.0)
}

impl AdaptiveMetropolis {
    pub fn new(dim: usize, adaptive_scale: f64, safety_weight: f64, initial_scale: f64) -> Self {
        assert!(dim > 0, "adaptive block must have at least one coordinate");
        Self {
            dim,
            adaptive_scale,
            safety_weight,
            initial_scale,
            history: 0,
            mean: DVector::zeros(dim),
            scatter: DMatrix::zeros(dim, dim),
            proposed: 0,
            accepted: 0,
            proposed_adapted: 0,
            accepted_adapted: 0,
        }
    }

    pub fn from_config(dim: usize, config: &SamplerConfig) -> Self {
        Self::new(dim, config.adaptive_scale, config.safety_weight, config.initial_scale)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// 1-based index of the next step.
    pub fn iteration(&self) -> u64 {
        self.history + 1
    }

    pub fn in_warmup(&self) -> bool {
        self.iteration() <= 2 * self.dim as u64
    }

    pub fn proposed(&self) -> u64 {
        self.proposed
    }

    pub fn accepted(&self) -> u64 {
        self.accepted
    }

    pub fn proposed_adapted(&self) -> u64 {
        self.proposed_adapted
    }

    pub fn accepted_adapted(&self) -> u64 {
        self.accepted_adapted
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    pub fn adapted_acceptance_rate(&self) -> f64 {
        if self.proposed_adapted == 0 {
            0.0
        } else {
            self.accepted_adapted as f64 / self.proposed_adapted as f64
        }
    }

    /// Sample covariance of the recorded states, once at least two exist.
    pub fn empirical_covariance(&self) -> Option<DMatrix<f64>> {
        (self.history >= 2).then(|| &self.scatter / (self.history - 1) as f64)
    }

    pub fn safety_covariance(&self) -> DMatrix<f64> {
        DMatrix::identity(self.dim, self.dim) * (self.initial_scale * self.initial_scale / self.dim as f64)
    }

    pub fn proposal(&self) -> Proposal {
        let safety = self.safety_covariance();
        match self.empirical_covariance() {
            Some(cov) if !self.in_warmup() => Proposal::Mixture {
                adaptive: cov * (self.adaptive_scale / self.dim as f64),
                safety,
                safety_weight: self.safety_weight,
            },
            _ => Proposal::Fixed(safety),
        }
    }

    /// Adds a state to the running mean and scatter matrix.
    pub fn record(&mut self, x: &[f64]) {
        self.history += 1;
        let x = DVector::from_column_slice(x);
        let delta = &x - &self.mean;
        self.mean += &delta / self.history as f64;
        let delta2 = &x - &self.mean;
        self.scatter += &delta * delta2.transpose();
    }

    fn gaussian_step<R: Rng + ?Sized>(rng: &mut R, current: &[f64], chol_l: &DMatrix<f64>) -> Vec<f64> {
        let z = DVector::from_fn(current.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
        let step = chol_l * z;
        current.iter().zip(step.iter()).map(|(c, s)| c + s).collect()
    }

    fn safety_step<R: Rng + ?Sized>(&self, rng: &mut R, current: &[f64]) -> Vec<f64> {
        let sd = self.initial_scale / (self.dim as f64).sqrt();
        current
            .iter()
            .map(|c| c + sd * rng.sample::<f64, _>(StandardNormal))
            .collect()
    }

    pub fn propose<R: Rng + ?Sized>(&self, rng: &mut R, current: &[f64]) -> Vec<f64> {
        match self.proposal() {
            Proposal::Fixed(_) => self.safety_step(rng, current),
            Proposal::Mixture {
                adaptive,
                safety_weight,
                ..
            } => {
                if rng.random::<f64>() < safety_weight {
                    return self.safety_step(rng, current);
                }
                let jitter = 1e-10 * (adaptive.trace() / self.dim as f64).max(f64::MIN_POSITIVE);
                let regularized = &adaptive + DMatrix::identity(self.dim, self.dim) * jitter;
                match regularized.cholesky() {
                    Some(ch) => Self::gaussian_step(rng, current, &ch.l()),
                    None => self.safety_step(rng, current),
                }
            }
        }
    }

    /// One Metropolis step. `current_log_target` must be the target at
    /// `current`; both are updated on acceptance. The post-step state is
    /// recorded for adaptation.
    pub fn step<R, F>(&mut self, rng: &mut R, current: &mut [f64], current_log_target: &mut f64, mut log_target: F) -> bool
    where
        R: Rng + ?Sized,
        F: FnMut(&[f64]) -> f64,
    {
        let adapted = !self.in_warmup();
        let proposal = self.propose(rng, current);
        let lp = log_target(&proposal);
        let u: f64 = rng.random();
        let accept = lp.is_finite() && u.ln() < lp - *current_log_target;
        if accept {
            current.copy_from_slice(&proposal);
            *current_log_target = lp;
        }
        self.proposed += 1;
        self.accepted += accept as u64;
        if adapted {
            self.proposed_adapted += 1;
            self.accepted_adapted += accept as u64;
        }
        self.record(current);
        accept
    }
}
