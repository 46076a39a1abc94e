//! Criteria built on repeated fits of the default two-class scenario.

use std::sync::OnceLock;
use std::time::Instant;

use jlcm_core::data::Dataset;
use jlcm_core::inference::{
    compute_dic, dynamic_survival, error_rate, ipcw_auc, posterior_membership, FittedModel, PredictionRequest,
};
use jlcm_core::mcmc::{run_chain, PriorConfig, SamplerConfig};
use jlcm_core::params::{ClassParams, ParameterSet};
use jlcm_core::rng::substream;
use jlcm_core::simulate::{scenario_defaults, simulate, SimulationScenario};
use rand::Rng;

use crate::oracles::mann_whitney_auc;
use crate::Outcome;

const REPLICATES: usize = 5;
const TOLERANCE: f64 = 0.3;
const LANDMARK: f64 = 0.5;
const WINDOW: f64 = 0.3;

struct Replicate {
    data: Dataset,
    dic: [f64; 2],
    fit: FittedModel,
    comparator: FittedModel,
    error_rate: f64,
    seconds: f64,
}

fn sampler(seed: u64) -> SamplerConfig {
    SamplerConfig {
        seed,
        ..SamplerConfig::default()
    }
}

fn run_replicate(r: usize) -> Replicate {
    let start = Instant::now();
    let scenario = SimulationScenario {
        seed: scenario_defaults().seed + r as u64,
        ..scenario_defaults()
    };
    let sim = simulate(&scenario).unwrap();
    let data = sim.dataset;
    let truth = data.true_classes().unwrap().to_vec();
    let priors = PriorConfig::default();
    let config = sampler(r as u64 + 1);

    let one = run_chain(&data, 1, &priors, &config).unwrap();
    let dic1 = compute_dic(&one, &data).unwrap().dic;
    drop(one);
    let two = run_chain(&data, 2, &priors, &config).unwrap();
    let dic2 = compute_dic(&two, &data).unwrap().dic;
    let fit = FittedModel::from_chain(&two).unwrap();
    drop(two);
    let error_rate = error_rate(&posterior_membership(&fit, &data).unwrap().modal, &truth).unwrap();

    let reduced = data.clone().with_intercept_only_covariance();
    let comparator = FittedModel::from_chain(&run_chain(&reduced, 2, &priors, &config).unwrap()).unwrap();
    Replicate {
        data,
        dic: [dic1, dic2],
        fit,
        comparator,
        error_rate,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn replicates() -> &'static [Replicate] {
    static RUNS: OnceLock<Vec<Replicate>> = OnceLock::new();
    RUNS.get_or_init(|| (0..REPLICATES).map(run_replicate).collect())
}

/// Largest absolute deviation from the truth, and the parameter behind it.
fn worst_deviation(fit: &ParameterSet, truth: &ParameterSet) -> (f64, String) {
    let mut pairs: Vec<(String, f64, f64)> = Vec::new();
    for (k, (f, t)) in fit.classes.iter().zip(&truth.classes).enumerate() {
        let k = k + 1;
        for (j, (a, b)) in f.beta.iter().zip(&t.beta).enumerate() {
            pairs.push((format!("beta_{k}_{}", j + 1), *a, *b));
        }
        for (j, (a, b)) in f.omega.iter().zip(&t.omega).enumerate() {
            pairs.push((format!("omega_{k}_{}", j + 1), *a, *b));
        }
        pairs.push((format!("gamma_{k}"), f.gamma, t.gamma));
        pairs.push((format!("lambda0_{k}"), f.lambda0, t.lambda0));
        pairs.push((format!("tau_{k}"), f.tau, t.tau));
    }
    for (j, (a, b)) in fit.alpha1.iter().zip(&truth.alpha1).enumerate() {
        pairs.push((format!("alpha1_{}", j + 1), *a, *b));
    }
    for (j, (a, b)) in fit.alpha2.iter().zip(&truth.alpha2).enumerate() {
        pairs.push((format!("alpha2_{}", j + 1), *a, *b));
    }
    pairs
        .into_iter()
        .map(|(name, a, b)| ((a - b).abs(), name))
        .fold((0.0, String::new()), |best, cur| if cur.0 > best.0 { cur } else { best })
}

pub fn criterion() -> Outcome {
    let runs = replicates();
    let truth = scenario_defaults().params;
    let selects_two = runs.iter().filter(|r| r.dic[1] < r.dic[0]).count();
    let deviations: Vec<(f64, String)> = runs.iter().map(|r| worst_deviation(&r.fit.params, &truth)).collect();
    let recovered = deviations.iter().filter(|d| d.0 <= TOLERANCE).count();
    let max_error = runs.iter().map(|r| r.error_rate).fold(0.0, f64::max);
    let max_secs = runs.iter().map(|r| r.seconds).fold(0.0, f64::max);
    let worst: Vec<String> = deviations.iter().map(|(d, n)| format!("{n} {d:.2}")).collect();
    let rates: Vec<String> = runs.iter().map(|r| format!("{:.3}", r.error_rate)).collect();
    Outcome::new(
        selects_two >= 4 && recovered >= 4 && max_error < 0.2 && max_secs < 900.0,
        format!(
            "DIC picks K=2 in {selects_two}/{REPLICATES}; all within ±{TOLERANCE} in {recovered}/{REPLICATES} (worst per replicate: {}); error rates [{}]; slowest replicate {max_secs:.0} s",
            worst.join(", "),
            rates.join(", ")
        ),
    )
}

fn predict(fit: &FittedModel, data: &Dataset, i: usize, landmark: f64, horizons: &[f64]) -> Option<Vec<f64>> {
    let request = PredictionRequest {
        subject: data.subjects()[i].clone(),
        effects: fit.effects[i].clone(),
        landmark,
        horizons: horizons.to_vec(),
    };
    dynamic_survival(&request, &fit.params).ok()
}

pub fn prediction_criterion() -> Outcome {
    let horizons: Vec<f64> = (0..20).map(|h| 0.1 * h as f64).collect();
    let (mut checked, mut broken) = (0, 0);
    for r in replicates() {
        for i in 0..r.data.len() {
            checked += 1;
            let ok = predict(&r.fit, &r.data, i, LANDMARK, &horizons)
                .is_some_and(|v| v[0] == 1.0 && v.windows(2).all(|w| w[1] <= w[0]));
            broken += usize::from(!ok);
        }
    }

    // Single class with constant hazard 1 and negligible random effects.
    let mut scenario = scenario_defaults();
    scenario.seed = 81;
    scenario.params = ParameterSet {
        classes: vec![ClassParams {
            xi: vec![0.0, 0.0],
            beta: vec![2.0, 1.5],
            omega: vec![0.0],
            gamma: 0.0,
            tau: 0.1,
            lambda0: 1.0,
        }],
        alpha1: vec![0.0, 0.0],
        alpha2: vec![-6.0, 0.0],
    };
    let data = simulate(&scenario).unwrap().dataset;
    let chain = run_chain(&data, 1, &PriorConfig::default(), &sampler(8)).unwrap();
    let fit = FittedModel::from_chain(&chain).unwrap();
    let toy_horizons = [0.1, 0.2, 0.3, 0.4, 0.5];
    let at_risk: Vec<usize> = (0..data.len()).filter(|&i| data.subjects()[i].survival.time > LANDMARK).take(5).collect();
    let mut worst_z = 0.0f64;
    for &i in &at_risk {
        let point = predict(&fit, &data, i, LANDMARK, &toy_horizons).unwrap();
        let per_draw: Vec<Vec<f64>> = chain
            .draws
            .iter()
            .zip(&chain.states)
            .map(|(p, s)| {
                let draw = FittedModel {
                    params: p.clone(),
                    effects: s.effects.clone(),
                    modal_labels: Vec::new(),
                };
                predict(&draw, &data, i, LANDMARK, &toy_horizons).unwrap()
            })
            .collect();
        for (h, &dt) in toy_horizons.iter().enumerate() {
            let col: Vec<f64> = per_draw.iter().map(|v| v[h]).collect();
            let (_, var) = crate::oracles::mean_and_variance(&col);
            worst_z = worst_z.max((point[h] - (-dt).exp()).abs() / var.sqrt());
        }
    }
    Outcome::new(
        broken == 0 && worst_z <= 2.0 && !at_risk.is_empty(),
        format!(
            "{checked} subject curves, {broken} violate S(Δ=0)=1 or monotonicity; constant-hazard toy max |Ŝ − e^(−Δ)| / sd {worst_z:.2}"
        ),
    )
}

fn risk_markers(fit: &FittedModel, data: &Dataset) -> Vec<f64> {
    (0..data.len())
        .map(|i| {
            if data.subjects()[i].survival.time <= LANDMARK {
                return 0.0;
            }
            predict(fit, data, i, LANDMARK, &[WINDOW]).map_or(1.0, |v| 1.0 - v[0])
        })
        .collect()
}

pub fn auc_criterion() -> Outcome {
    let mut rng = substream(19, &[9]);
    let n = 2000;
    let times: Vec<f64> = (0..n).map(|_| -rng.random::<f64>().ln()).collect();
    let events = vec![true; n];
    let end = LANDMARK + WINDOW;
    let is_case = |t: f64| t > LANDMARK && t <= end;

    let perfect: Vec<f64> = times.iter().map(|&t| if is_case(t) { 1.0 } else { 0.0 }).collect();
    let perfect_auc = ipcw_auc(&perfect, &times, &events, LANDMARK, WINDOW).unwrap();
    let null: Vec<f64> = (0..n).map(|_| rng.random()).collect();
    let null_auc = ipcw_auc(&null, &times, &events, LANDMARK, WINDOW).unwrap();

    let coarse: Vec<f64> = times.iter().map(|&t| ((-t + rng.random::<f64>()) * 4.0).round()).collect();
    let ipcw = ipcw_auc(&coarse, &times, &events, LANDMARK, WINDOW).unwrap();
    let cases: Vec<f64> = (0..n).filter(|&i| is_case(times[i])).map(|i| coarse[i]).collect();
    let controls: Vec<f64> = (0..n).filter(|&i| times[i] > end).map(|i| coarse[i]).collect();
    let mw_gap = (ipcw - mann_whitney_auc(&cases, &controls)).abs();

    let mut general = Vec::new();
    let mut comparator = Vec::new();
    for r in replicates() {
        let times: Vec<f64> = r.data.subjects().iter().map(|s| s.survival.time).collect();
        let events: Vec<bool> = r.data.subjects().iter().map(|s| s.survival.event).collect();
        let reduced = r.data.clone().with_intercept_only_covariance();
        if let (Ok(a), Ok(b)) = (
            ipcw_auc(&risk_markers(&r.fit, &r.data), &times, &events, LANDMARK, WINDOW),
            ipcw_auc(&risk_markers(&r.comparator, &reduced), &times, &events, LANDMARK, WINDOW),
        ) {
            general.push(a);
            comparator.push(b);
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (mg, mc) = (mean(&general), mean(&comparator));
    Outcome::new(
        perfect_auc == 1.0 && (null_auc - 0.5).abs() <= 0.05 && mw_gap < 1e-12 && !general.is_empty() && mg >= mc,
        format!(
            "perfect {perfect_auc}, null {null_auc:.3}, |IPCW − Mann–Whitney| {mw_gap:.1e}; mean AUC regression {mg:.3} vs intercept-only {mc:.3} over {} replicates",
            general.len()
        ),
    )
}
