use std::time::Instant;

use jlcm_core::likelihood::{cumulative_hazard, hazard, Gompertz, GAMMA_EPS};
use jlcm_core::rng::substream;
use rand::Rng;

use crate::oracles::simpson;
use crate::Outcome;

pub fn criterion() -> Outcome {
    let start = Instant::now();
    let mut rng = substream(12, &[2]);
    let mut max_rel = 0.0f64;
    for _ in 0..500 {
        let magnitude = 10f64.powf(rng.random_range((1e-9f64).log10()..2f64.log10()));
        let gamma = if rng.random::<bool>() { magnitude } else { -magnitude };
        let omega = [rng.random_range(-1.0..1.0)];
        let model = Gompertz {
            lambda0: rng.random_range(0.01..5.0),
            gamma,
            omega: &omega,
        };
        let x3 = [rng.random_range(-1.0..1.0)];
        let upsilon = rng.random_range(-1.0..1.0);
        let t = rng.random_range(0.01..10.0);
        let closed = cumulative_hazard(t, &x3, &model, upsilon);
        let numeric = simpson(&|s| hazard(s, &x3, &model, upsilon), 0.0, t, 1e-12 * closed);
        max_rel = max_rel.max(((closed - numeric) / numeric).abs());
    }

    // Near-zero shape against the exact constant-hazard limit, and the jump
    // across the switch to the limiting form.
    let (mut limit_gap, mut switch_gap) = (0.0f64, 0.0f64);
    let omega = [0.0];
    for i in 1..=500 {
        let t = 50.0 * i as f64 / 500.0;
        let at = |gamma: f64| {
            let m = Gompertz { lambda0: 1.0, gamma, omega: &omega };
            cumulative_hazard(t, &[0.0], &m, 0.0)
        };
        limit_gap = limit_gap.max((at(1e-9) - t).abs());
        switch_gap = switch_gap.max(((at(GAMMA_EPS * 1.0001) - at(GAMMA_EPS * 0.9999)) / at(GAMMA_EPS)).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(
        max_rel < 1e-6 && limit_gap < 1e-6 && switch_gap < 1e-6 && secs < 5.0,
        format!(
            "500 draws; max relative error vs quadrature {max_rel:.1e}, γ=1e-9 gap {limit_gap:.1e}, relative jump at switch {switch_gap:.1e}"
        ),
    )
}
