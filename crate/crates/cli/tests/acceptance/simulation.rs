use jlcm_core::simulate::{scenario_defaults, simulate, Censoring, SimulationScenario};
use nalgebra::DMatrix;

use crate::oracles::normal_expectation;
use crate::Outcome;

/// Variance of the survival random effect for hazard covariate `x3`, from
/// `Σ = T⁻¹ D T⁻ᵀ` with a dense inverse.
fn frailty_variance(alpha1: &[f64], alpha2: &[f64], x3: f64) -> f64 {
    let phi = alpha1[0] + alpha1[1] * x3;
    let d2 = (alpha2[0] + alpha2[1] * x3).exp();
    let t = DMatrix::from_fn(3, 3, |g, l| if g == l { 1.0 } else if g > l { -phi } else { 0.0 });
    let tinv = t.try_inverse().unwrap();
    let sigma = &tinv * DMatrix::identity(3, 3) * d2 * tinv.transpose();
    sigma[(2, 2)]
}

pub fn criterion() -> Outcome {
    let scenario = SimulationScenario {
        subjects: 10_000,
        censoring: Censoring::none(),
        fixed_class: Some(0),
        seed: 16,
        ..scenario_defaults()
    };
    let sim = simulate(&scenario).unwrap();
    let p = &scenario.params;
    let c = &p.classes[0];
    let integral = |t: f64| ((c.gamma * t).exp() - 1.0) / c.gamma;
    let survival = |t: f64| {
        [0.0, 1.0]
            .iter()
            .map(|&x3| {
                let sd = frailty_variance(&p.alpha1, &p.alpha2, x3).sqrt();
                0.5 * normal_expectation(sd, |v| (-c.lambda0 * (c.omega[0] * x3 + v).exp() * integral(t)).exp())
            })
            .sum::<f64>()
    };

    let times: Vec<f64> = sim.dataset.subjects().iter().map(|s| s.survival.time).collect();
    let all_events = sim.dataset.subjects().iter().all(|s| s.survival.event);
    let mut sorted = times.clone();
    sorted.sort_by(f64::total_cmp);
    let n = times.len() as f64;
    let mut worst = 0.0f64;
    for q in 1..=9 {
        let t = sorted[(q as f64 / 10.0 * n) as usize];
        let empirical = times.iter().filter(|&&x| x > t).count() as f64 / n;
        worst = worst.max((empirical - survival(t)).abs());
    }

    let mut round_trip = 0.0f64;
    for (i, s) in sim.dataset.subjects().iter().enumerate() {
        let eta = c.omega[0] * s.survival.x3[0] + sim.effects[i][2];
        let h = c.lambda0 * eta.exp() * integral(sim.event_times[i]);
        round_trip = round_trip.max((h + sim.uniforms[i].ln()).abs());
    }
    Outcome::new(
        all_events && worst < 0.02 && round_trip < 1e-10,
        format!("N=10000; max |Ŝ − S| over 9 deciles {worst:.4}, max |H(T) + log u| {round_trip:.1e}"),
    )
}
