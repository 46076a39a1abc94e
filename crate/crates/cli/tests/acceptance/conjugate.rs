use std::time::Instant;

use jlcm_core::data::Dataset;
use jlcm_core::mcmc::{sample_beta_k, sample_lambda_k, sample_tau_k, PriorConfig};
use jlcm_core::params::LatentState;
use jlcm_core::rng::substream;
use jlcm_core::simulate::{scenario_defaults, simulate, SimulationScenario};
use nalgebra::{DMatrix, DVector};

use crate::oracles::{mean_and_variance, relative_error};
use crate::Outcome;

const DRAWS: usize = 50_000;
const TOLERANCE: f64 = 0.02;

/// Analytic first two moments of each conditional, coded from the data
/// directly.
struct Moments {
    beta_mean: Vec<f64>,
    beta_var: Vec<f64>,
    lambda: (f64, f64),
    tau: (f64, f64),
}

fn analytic(data: &Dataset, state: &LatentState, k: usize, tau: f64, beta: &[f64], gamma: f64, omega: f64, prior: &PriorConfig) -> Moments {
    let p = beta.len();
    let prior_cov = match &prior.beta_covariance {
        Some(rows) => DMatrix::from_fn(p, p, |r, c| rows[r][c]),
        None => DMatrix::identity(p, p) * prior.beta_variance,
    };
    let prior_mean = DVector::from_column_slice(prior.beta_mean.as_deref().unwrap_or(&vec![0.0; p]));
    let prior_prec = prior_cov.try_inverse().unwrap();
    let mut a = prior_prec.clone();
    let mut b = &prior_prec * prior_mean;
    let (mut n, mut ss, mut events, mut exposure) = (0.0, 0.0, 0.0, 0.0);
    for (i, s) in data.subjects().iter().enumerate() {
        let w = &state.effects[i];
        for (o, &l) in s.observations.iter().zip(&state.labels[i]) {
            if l != k {
                continue;
            }
            let x = DVector::from_column_slice(&o.x2);
            let zu: f64 = o.z.iter().zip(w).map(|(z, u)| z * u).sum();
            a += &x * x.transpose() / tau;
            b += &x * ((o.response - zu) / tau);
            let r = o.response - x.dot(&DVector::from_column_slice(beta)) - zu;
            n += 1.0;
            ss += r * r;
        }
        if state.labels[i].last() == Some(&k) {
            let sv = &s.survival;
            events += f64::from(u8::from(sv.event));
            let integral = if gamma == 0.0 { sv.time } else { ((gamma * sv.time).exp() - 1.0) / gamma };
            exposure += (omega * sv.x3[0] + w[w.len() - 1]).exp() * integral;
        }
    }
    let cov = a.try_inverse().unwrap();
    let mean = &cov * b;
    let (ls, lr) = (prior.lambda_shape + events, prior.lambda_rate + exposure);
    let (ts, tr) = (prior.tau_shape + n / 2.0, prior.tau_rate + ss / 2.0);
    Moments {
        beta_mean: mean.iter().copied().collect(),
        beta_var: (0..p).map(|j| cov[(j, j)]).collect(),
        lambda: (ls / lr, ls / (lr * lr)),
        tau: (tr / (ts - 1.0), tr * tr / ((ts - 1.0).powi(2) * (ts - 2.0))),
    }
}

/// Largest relative error of simulated moments against the analytic ones.
fn check(data: &Dataset, state: &LatentState, k: usize, prior: &PriorConfig, seed: u64) -> f64 {
    let c = &scenario_defaults().params.classes[0];
    let (tau, beta, gamma, omega) = (c.tau, c.beta.clone(), c.gamma, c.omega[0]);
    let m = analytic(data, state, k, tau, &beta, gamma, omega, prior);
    let beta_prior = prior.beta_prior(beta.len()).unwrap();
    let mut rng = substream(seed, &[3]);
    let mut worst = 0.0f64;

    let betas: Vec<Vec<f64>> = (0..DRAWS).map(|_| sample_beta_k(&mut rng, k, data, state, tau, &beta_prior)).collect();
    for j in 0..beta.len() {
        let col: Vec<f64> = betas.iter().map(|b| b[j]).collect();
        let (mean, var) = mean_and_variance(&col);
        worst = worst.max(relative_error(mean, m.beta_mean[j])).max(relative_error(var, m.beta_var[j]));
    }
    let lambdas: Vec<f64> = (0..DRAWS)
        .map(|_| sample_lambda_k(&mut rng, k, data, state, gamma, &[omega], prior))
        .collect();
    let (mean, var) = mean_and_variance(&lambdas);
    worst = worst.max(relative_error(mean, m.lambda.0)).max(relative_error(var, m.lambda.1));
    let taus: Vec<f64> = (0..DRAWS).map(|_| sample_tau_k(&mut rng, k, data, state, &beta, prior)).collect();
    let (mean, var) = mean_and_variance(&taus);
    worst.max(relative_error(mean, m.tau.0)).max(relative_error(var, m.tau.1))
}

pub fn criterion() -> Outcome {
    let start = Instant::now();
    let sim = simulate(&SimulationScenario {
        subjects: 400,
        seed: 33,
        ..scenario_defaults()
    })
    .unwrap();
    let data = &sim.dataset;
    let state = LatentState {
        labels: data.true_classes().unwrap().to_vec(),
        effects: sim.effects.clone(),
    };
    let occupied = check(data, &state, 0, &PriorConfig::default(), 1);

    // Class 2 of three is never occupied, so its draws come from the prior.
    // The prior is informative so every moment used is finite.
    let informative = PriorConfig {
        beta_mean: Some(vec![5.0, -8.0]),
        beta_covariance: Some(vec![vec![4.0, 0.0], vec![0.0, 9.0]]),
        lambda_shape: 50.0,
        lambda_rate: 25.0,
        tau_shape: 50.0,
        tau_rate: 49.0,
        ..PriorConfig::default()
    };
    let empty = check(data, &state, 2, &informative, 2);
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(
        occupied < TOLERANCE && empty < TOLERANCE && secs < 30.0,
        format!(
            "{DRAWS} draws each; worst relative moment error {:.2}% (occupied class), {:.2}% (empty class)",
            100.0 * occupied,
            100.0 * empty
        ),
    )
}
