//! Chain driver.

use super::adaptive::AdaptiveMetropolis;
use super::classes::sample_class_indicators;
use super::gibbs::{sample_beta_k, sample_inverse_gamma, sample_lambda_k, sample_positive_gamma, sample_tau_k, BetaConditional};
use super::init::initial_state;
use super::relabel::relabel;
use super::{BlockAcceptance, ChainOutput, LikelihoodMode, PriorConfig, SamplerConfig};
use crate::covariance::{build_factors, random_effects_log_density, CholeskyFactors};
use crate::data::Dataset;
use crate::error::{JlcmError, Result};
use crate::likelihood::{
    longitudinal_log_density, membership_log_probabilities, split_effects, subject_log_likelihood_with,
    survival_log_density, Gompertz,
};
use crate::parallel::{for_each_mut, map_indexed, sum_indexed, Execution};
use crate::params::{validate, validate_state, LatentState, ParameterSet};
use crate::rng::{substream, tags};

fn log_normal_prior(x: &[f64], variance: f64) -> f64 {
    -0.5 * x.iter().map(|v| v * v).sum::<f64>() / variance
}

fn all_factors(exec: Execution, alpha1: &[f64], alpha2: &[f64], data: &Dataset) -> Result<Vec<CholeskyFactors>> {
    let q = data.q();
    map_indexed(exec, data.len(), |i| build_factors(alpha1, alpha2, &data.subjects()[i].design, q))
        .into_iter()
        .collect()
}

fn effects_log_density(exec: Execution, alpha1: &[f64], alpha2: &[f64], data: &Dataset, effects: &[Vec<f64>]) -> f64 {
    let q = data.q();
    sum_indexed(exec, data.len(), |i| {
        build_factors(alpha1, alpha2, &data.subjects()[i].design, q)
            .map(|f| random_effects_log_density(&effects[i], &f))
            .unwrap_or(f64::NEG_INFINITY)
    })
}

fn theta_log_prior(params: &ParameterSet, variance: f64) -> f64 {
    params
        .classes
        .iter()
        .map(|c| log_normal_prior(&c.xi, variance) + log_normal_prior(&c.omega, variance) + log_normal_prior(&[c.gamma], variance))
        .sum::<f64>()
        + log_normal_prior(&params.alpha1, variance)
        + log_normal_prior(&params.alpha2, variance)
}

/// Runs a chain from the default starting values.
pub fn run_chain(data: &Dataset, k: usize, priors: &PriorConfig, config: &SamplerConfig) -> Result<ChainOutput> {
    if k == 0 {
        return Err(JlcmError::Config("the number of classes must be at least 1".into()));
    }
    config.validate()?;
    let (params, state) = initial_state(data, k, config);
    run_chain_from(data, params, state, priors, config)
}

/// Runs a chain from explicit starting values.
pub fn run_chain_from(
    data: &Dataset,
    mut params: ParameterSet,
    mut state: LatentState,
    priors: &PriorConfig,
    config: &SamplerConfig,
) -> Result<ChainOutput> {
    priors.validate()?;
    config.validate()?;
    validate(&params, data).map_err(JlcmError::Validation)?;
    let k = params.k();
    validate_state(&state, data, k)?;

    let dims = data.dims();
    let exec = config.execution;
    let full = config.likelihood == LikelihoodMode::Full;
    let var = priors.theta_variance;
    let beta_prior = priors.beta_prior(dims.x2)?;
    let beta_from_prior = BetaConditional::from_prior(&beta_prior);
    let mut rng = substream(config.seed, &[tags::MAIN]);

    let mut am_hazard: Vec<_> = (0..k).map(|_| AdaptiveMetropolis::from_config(dims.x3 + 1, config)).collect();
    let mut am_xi: Vec<_> = (0..k).map(|_| AdaptiveMetropolis::from_config(dims.x1, config)).collect();
    let mut am_alpha1 = AdaptiveMetropolis::from_config(dims.a, config);
    let mut am_alpha2 = AdaptiveMetropolis::from_config(dims.b, config);
    let mut am_effects: Vec<_> = (0..data.len())
        .map(|_| AdaptiveMetropolis::from_config(dims.effects(), config))
        .collect();

    let mut out = ChainOutput {
        k,
        iterations: Vec::with_capacity(config.stored_draws()),
        draws: Vec::with_capacity(config.stored_draws()),
        states: Vec::with_capacity(config.stored_draws()),
        draw_log_likelihood: Vec::with_capacity(config.stored_draws()),
        trace: Vec::with_capacity(config.iterations),
        acceptance: Vec::new(),
    };

    for m in 1..=config.iterations {
        if full {
            state.labels = sample_class_indicators(exec, config.seed, m as u64, &params, data, &state);
        }

        for c in 0..k {
            if full {
                params.classes[c].beta = sample_beta_k(&mut rng, c, data, &state, params.classes[c].tau, &beta_prior);
                params.classes[c].tau = sample_tau_k(&mut rng, c, data, &state, &params.classes[c].beta, priors);
                let (gamma, omega) = (params.classes[c].gamma, params.classes[c].omega.clone());
                params.classes[c].lambda0 = sample_lambda_k(&mut rng, c, data, &state, gamma, &omega, priors);
            } else {
                params.classes[c].beta = beta_from_prior.sample(&mut rng);
                params.classes[c].tau = sample_inverse_gamma(&mut rng, priors.tau_shape, priors.tau_rate);
                params.classes[c].lambda0 = sample_positive_gamma(&mut rng, priors.lambda_shape, priors.lambda_rate);
            }
        }

        // Hazard-covariate coefficients and Gompertz shape, per class.
        for c in 0..k {
            let members: Vec<usize> = if full {
                (0..data.len()).filter(|&i| state.labels[i].last() == Some(&c)).collect()
            } else {
                Vec::new()
            };
            let lambda0 = params.classes[c].lambda0;
            let target = |th: &[f64]| {
                let (omega, gamma) = th.split_at(dims.x3);
                let model = Gompertz {
                    lambda0,
                    gamma: gamma[0],
                    omega,
                };
                log_normal_prior(th, var)
                    + members
                        .iter()
                        .map(|&i| {
                            let sv = &data.subjects()[i].survival;
                            let (_, upsilon) = split_effects(&state.effects[i]);
                            survival_log_density(sv.time, sv.event, &sv.x3, &model, upsilon)
                        })
                        .sum::<f64>()
            };
            let mut theta = params.classes[c].omega.clone();
            theta.push(params.classes[c].gamma);
            let mut lp = target(&theta);
            am_hazard[c].step(&mut rng, &mut theta, &mut lp, target);
            params.classes[c].gamma = theta[dims.x3];
            theta.truncate(dims.x3);
            params.classes[c].omega = theta;
        }

        // Membership coefficients, per class.
        for c in 0..k {
            let target = |xi_c: &[f64]| {
                let mut lp = log_normal_prior(xi_c, var);
                if full {
                    let xis = || params.classes.iter().enumerate().map(|(j, cl)| if j == c { xi_c } else { cl.xi.as_slice() });
                    for (s, labels) in data.subjects().iter().zip(&state.labels) {
                        for (o, &l) in s.observations.iter().zip(labels) {
                            lp += membership_log_probabilities(&o.x1, xis())[l];
                        }
                    }
                }
                lp
            };
            let mut xi = params.classes[c].xi.clone();
            let mut lp = target(&xi);
            am_xi[c].step(&mut rng, &mut xi, &mut lp, target);
            params.classes[c].xi = xi;
        }

        // Covariance regression coefficients.
        {
            let alpha2 = params.alpha2.clone();
            let effects = &state.effects;
            let target = |a1: &[f64]| {
                log_normal_prior(a1, var) + if full { effects_log_density(exec, a1, &alpha2, data, effects) } else { 0.0 }
            };
            let mut a1 = params.alpha1.clone();
            let mut lp = target(&a1);
            am_alpha1.step(&mut rng, &mut a1, &mut lp, target);
            params.alpha1 = a1;
        }
        {
            let alpha1 = params.alpha1.clone();
            let effects = &state.effects;
            let target = |a2: &[f64]| {
                log_normal_prior(a2, var) + if full { effects_log_density(exec, &alpha1, a2, data, effects) } else { 0.0 }
            };
            let mut a2 = params.alpha2.clone();
            let mut lp = target(&a2);
            am_alpha2.step(&mut rng, &mut a2, &mut lp, target);
            params.alpha2 = a2;
        }

        let factors = all_factors(exec, &params.alpha1, &params.alpha2, data)?;

        // Random effects, one block per subject on its own substream.
        if full {
            let labels = &state.labels;
            let params_ref = &params;
            let factors_ref = &factors;
            let mut blocks: Vec<(&mut Vec<f64>, &mut AdaptiveMetropolis)> =
                state.effects.iter_mut().zip(am_effects.iter_mut()).collect();
            for_each_mut(exec, &mut blocks, |i, (w, am)| {
                let s = &data.subjects()[i];
                let lab = &labels[i];
                let target = |w: &[f64]| {
                    let (u, upsilon) = split_effects(w);
                    let mut lp = random_effects_log_density(w, &factors_ref[i]);
                    for (o, &l) in s.observations.iter().zip(lab) {
                        let cl = &params_ref.classes[l];
                        lp += longitudinal_log_density(o.response, &o.x2, &o.z, &cl.beta, u, cl.tau);
                    }
                    let last = &params_ref.classes[*lab.last().expect("subjects have visits")];
                    let sv = &s.survival;
                    lp + survival_log_density(sv.time, sv.event, &sv.x3, &Gompertz::from_class(last), upsilon)
                };
                let mut rng = substream(config.seed, &[tags::EFFECTS, m as u64, i as u64]);
                let mut lp = target(w);
                am.step(&mut rng, w, &mut lp, target);
            });
        }

        let ll = if full {
            let v = sum_indexed(exec, data.len(), |i| {
                subject_log_likelihood_with(&params, &data.subjects()[i], &state.labels[i], &state.effects[i], &factors[i])
            });
            if !v.is_finite() {
                return Err(JlcmError::Divergence { iteration: m });
            }
            v
        } else {
            theta_log_prior(&params, var)
        };
        out.trace.push(ll);

        if m > config.burn_in && (m - config.burn_in) % config.thin == 0 {
            out.iterations.push(m);
            out.draws.push(params.clone());
            out.states.push(state.clone());
            out.draw_log_likelihood.push(ll);
        }
    }

    for (c, am) in am_hazard.iter().enumerate() {
        let mut b = BlockAcceptance {
            block: format!("hazard_{}", c + 1),
            ..Default::default()
        };
        b.absorb(am);
        out.acceptance.push(b);
    }
    for (c, am) in am_xi.iter().enumerate() {
        let mut b = BlockAcceptance {
            block: format!("xi_{}", c + 1),
            ..Default::default()
        };
        b.absorb(am);
        out.acceptance.push(b);
    }
    for (name, am) in [("alpha1", &am_alpha1), ("alpha2", &am_alpha2)] {
        let mut b = BlockAcceptance {
            block: name.into(),
            ..Default::default()
        };
        b.absorb(am);
        out.acceptance.push(b);
    }
    let mut eff = BlockAcceptance {
        block: "effects".into(),
        ..Default::default()
    };
    am_effects.iter().for_each(|am| eff.absorb(am));
    out.acceptance.push(eff);

    Ok(relabel(&out, config.relabel))
}
