use std::time::Instant;

use jlcm_core::mcmc::{run_chain, AdaptiveMetropolis, LikelihoodMode, PriorConfig, SamplerConfig};
use jlcm_core::params::ParamGroup;
use jlcm_core::rng::substream;
use jlcm_core::simulate::{scenario_defaults, simulate_dataset, SimulationScenario};

use crate::oracles::ks_standard_normal;
use crate::Outcome;

pub fn criterion() -> Outcome {
    let start = Instant::now();
    let d = 3;
    let mut am = AdaptiveMetropolis::new(d, 2.38 * 2.38, 0.05, 0.1);
    let mut rng = substream(14, &[4]);
    let target = |x: &[f64]| -0.5 * x.iter().map(|v| v * v).sum::<f64>();
    let mut x = vec![0.0; d];
    let mut lp = target(&x);
    let n = 50_000;
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        am.step(&mut rng, &mut x, &mut lp, target);
        samples.push(x.clone());
    }
    let mean: Vec<f64> = (0..d).map(|j| samples.iter().map(|s| s[j]).sum::<f64>() / n as f64).collect();
    let mut worst_cov = 0.0f64;
    for a in 0..d {
        for b in 0..d {
            let c = samples.iter().map(|s| (s[a] - mean[a]) * (s[b] - mean[b])).sum::<f64>() / (n - 1) as f64;
            worst_cov = worst_cov.max((c - f64::from(u8::from(a == b))).abs());
        }
    }
    let worst_mean = mean.iter().map(|m| m.abs()).fold(0.0, f64::max);
    let rate = am.adapted_acceptance_rate();
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(
        worst_mean < 0.05 && worst_cov < 0.1 && (0.1..=0.6).contains(&rate) && secs < 60.0,
        format!("max |mean| {worst_mean:.3}, max covariance error {worst_cov:.3}, post-warm-up acceptance {rate:.3}"),
    )
}

/// With the likelihood switched off, every non-conjugate coefficient should
/// follow its `N(0, 1)` prior.
pub fn prior_recovery() -> Outcome {
    let data = simulate_dataset(&SimulationScenario {
        subjects: 5,
        seed: 15,
        ..scenario_defaults()
    })
    .unwrap();
    let (draws, thin) = (10_000, 100);
    let config = SamplerConfig {
        iterations: 1000 + draws * thin,
        burn_in: 1000,
        thin,
        seed: 5,
        likelihood: LikelihoodMode::PriorOnly,
        ..SamplerConfig::default()
    };
    let chain = run_chain(&data, 2, &PriorConfig::default(), &config).unwrap();
    let groups = [ParamGroup::Xi, ParamGroup::Omega, ParamGroup::Gamma, ParamGroup::Alpha1, ParamGroup::Alpha2];
    let template = chain.draws[0].entries();
    let mut min_p = f64::INFINITY;
    let mut tested = 0;
    for (col, e) in template.iter().enumerate() {
        if !groups.contains(&e.group) {
            continue;
        }
        let values: Vec<f64> = chain.draws.iter().map(|d| d.entries()[col].value).collect();
        let (_, p) = ks_standard_normal(&values);
        min_p = min_p.min(p);
        tested += 1;
    }
    Outcome::new(
        min_p > 0.01 && tested == 12 && chain.len() == draws,
        format!("{tested} coefficients, {} thinned draws each; smallest KS p-value {min_p:.3}", chain.len()),
    )
}
