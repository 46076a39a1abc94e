use std::fs::{self, File};
use std::path::Path;

use jlcm_core::data::Dataset;
use jlcm_core::inference::{
    compute_dic, dynamic_survival, error_rate, ipcw_auc, posterior_membership, write_membership, FittedModel,
    ModelScore, PredictionRequest,
};
use jlcm_core::likelihood::split_effects;
use jlcm_core::mcmc::{run_chain, summarize, write_chain, ChainOutput};
use jlcm_core::schema::{load_dataset, write_dataset, SchemaConfig};
use jlcm_core::simulate::{read_true_classes, simulate, write_truth};
use jlcm_core::JlcmError;

use crate::config::{CovarianceDesignKind, DataSource, RunConfig};
use crate::error::{CliError, CliResult};

/// A dataset ready for fitting, with its true labels when known.
pub struct Prepared {
    pub data: Dataset,
    pub truth: Option<Vec<Vec<usize>>>,
}

pub fn prepare(cfg: &RunConfig, replicate: usize) -> CliResult<Prepared> {
    let (data, truth) = match cfg.source()? {
        DataSource::File(path) => {
            let data = load_dataset(path, &cfg.schema()?)?;
            let truth = match &cfg.io.truth {
                Some(t) => Some(read_true_classes(t, &data)?),
                None => None,
            };
            (data, truth)
        }
        DataSource::Simulated(section) => {
            let sim = simulate(&section.scenario(replicate)?)?;
            let truth = sim.dataset.true_classes().map(<[_]>::to_vec);
            (sim.dataset, truth)
        }
    };
    let data = match cfg.model.covariance_design {
        CovarianceDesignKind::Regression => data,
        CovarianceDesignKind::InterceptOnly => data.with_intercept_only_covariance(),
    };
    Ok(Prepared { data, truth })
}

fn csv_writer(path: &Path) -> CliResult<csv::Writer<File>> {
    Ok(csv::Writer::from_writer(File::create(path)?))
}

fn optional(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn cmd_simulate(cfg: &RunConfig) -> CliResult<()> {
    let DataSource::Simulated(section) = cfg.source()? else {
        return Err(CliError::Config("simulate needs a [simulation] section".into()));
    };
    let sim = simulate(&section.scenario(0)?)?;
    let out = cfg.out_dir();
    fs::create_dir_all(&out)?;
    write_dataset(&sim.dataset, &SchemaConfig::simulation(), File::create(out.join("data.csv"))?)?;
    write_truth(&out.join("truth.csv"), &sim)?;
    Ok(())
}

/// Fits one model and writes its chain, summary, point estimates, membership
/// probabilities and score into `dir`.
pub fn fit_into(dir: &Path, cfg: &RunConfig, data: &Dataset, k: usize) -> CliResult<(ChainOutput, ModelScore)> {
    if k == 0 {
        return Err(CliError::Config("K must be at least 1".into()));
    }
    let chain = run_chain(data, k, &cfg.priors()?, &cfg.sampler()?)?;
    fs::create_dir_all(dir)?;
    write_chain(dir, &chain)?;

    let mut w = csv_writer(&dir.join("summary.csv"))?;
    w.write_record(["parameter", "estimate", "sd", "ci_low", "ci_high"])?;
    for s in summarize(&chain)? {
        let v = s.summary;
        w.write_record([s.label, v.mean.to_string(), v.sd.to_string(), v.ci_low.to_string(), v.ci_high.to_string()])?;
    }
    w.flush()?;

    let fitted = FittedModel::from_chain(&chain)?;
    fitted.write(dir, data)?;
    write_membership(&dir.join("membership.csv"), data, &posterior_membership(&fitted, data)?)?;

    let score = compute_dic(&chain, data)?;
    let mut w = csv_writer(&dir.join("score.csv"))?;
    w.write_record(["k", "mean_deviance", "p_d", "dic"])?;
    w.write_record([k.to_string(), score.mean_deviance.to_string(), score.p_d.to_string(), score.dic.to_string()])?;
    w.flush()?;
    Ok((chain, score))
}

pub fn cmd_fit(cfg: &RunConfig) -> CliResult<()> {
    let p = prepare(cfg, 0)?;
    fit_into(&cfg.out_dir(), cfg, &p.data, cfg.model.k)?;
    Ok(())
}

pub fn cmd_select(cfg: &RunConfig) -> CliResult<()> {
    let ks = cfg.k_range()?;
    let p = prepare(cfg, 0)?;
    let out = cfg.out_dir();
    let mut scores = Vec::with_capacity(ks.len());
    for &k in &ks {
        let (_, score) = fit_into(&out.join(format!("k{k}")), cfg, &p.data, k).map_err(CliError::at_k(k))?;
        scores.push((k, score));
    }
    let best = scores
        .iter()
        .min_by(|a, b| a.1.dic.total_cmp(&b.1.dic))
        .map(|(k, _)| *k);
    let mut w = csv_writer(&out.join("select.csv"))?;
    w.write_record(["k", "mean_deviance", "p_d", "dic", "selected"])?;
    for (k, s) in &scores {
        w.write_record([
            k.to_string(),
            s.mean_deviance.to_string(),
            s.p_d.to_string(),
            s.dic.to_string(),
            (Some(*k) == best).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Outcome of a per-subject prediction.
pub enum Prediction {
    Survival(Vec<f64>),
    /// Follow-up ended at or before the landmark.
    NotAtRisk,
    /// No visit at or before the landmark.
    NoHistory,
    Degenerate,
}

impl Prediction {
    fn status(&self) -> &'static str {
        match self {
            Prediction::Survival(_) => "ok",
            Prediction::NotAtRisk => "not_at_risk",
            Prediction::NoHistory => "no_history",
            Prediction::Degenerate => "degenerate",
        }
    }
}

pub fn predict_subjects(fit: &FittedModel, data: &Dataset, landmark: f64, horizons: &[f64]) -> CliResult<Vec<Prediction>> {
    let mut out = Vec::with_capacity(data.len());
    for (s, effects) in data.subjects().iter().zip(&fit.effects) {
        if s.survival.time <= landmark {
            out.push(Prediction::NotAtRisk);
            continue;
        }
        if s.observations.first().is_none_or(|o| o.time > landmark) {
            out.push(Prediction::NoHistory);
            continue;
        }
        let request = PredictionRequest {
            subject: s.clone(),
            effects: effects.clone(),
            landmark,
            horizons: horizons.to_vec(),
        };
        out.push(match dynamic_survival(&request, &fit.params) {
            Ok(v) => Prediction::Survival(v),
            Err(JlcmError::DegenerateLandmark { .. }) => Prediction::Degenerate,
            Err(e) => return Err(e.into()),
        });
    }
    Ok(out)
}

fn check_prediction_inputs(landmark: f64, horizons: &[f64]) -> CliResult<()> {
    if !(landmark >= 0.0 && landmark.is_finite()) {
        return Err(CliError::Config(format!("landmark must be a nonnegative number, got {landmark}")));
    }
    if horizons.is_empty() || horizons.iter().any(|h| !(*h >= 0.0 && h.is_finite())) {
        return Err(CliError::Config("horizons must be a nonempty list of nonnegative numbers".into()));
    }
    Ok(())
}

pub fn cmd_predict(cfg: &RunConfig) -> CliResult<()> {
    let fit_dir = cfg
        .io
        .fit
        .as_ref()
        .ok_or_else(|| CliError::Config("predict needs a fitted model directory (--fit DIR or io.fit)".into()))?;
    let (landmark, horizons) = (cfg.prediction.landmark, &cfg.prediction.horizons);
    check_prediction_inputs(landmark, horizons)?;
    let data = prepare(cfg, 0)?.data;
    let fit = FittedModel::read(fit_dir, &data)?;
    let out = cfg.out_dir();
    fs::create_dir_all(&out)?;

    let predictions = predict_subjects(&fit, &data, landmark, horizons)?;
    let mut w = csv_writer(&out.join("predictions.csv"))?;
    w.write_record(["subject_id", "landmark", "horizon", "conditional_survival", "status"])?;
    for (s, p) in data.subjects().iter().zip(&predictions) {
        for (h, &horizon) in horizons.iter().enumerate() {
            let value = match p {
                Prediction::Survival(v) => Some(v[h]),
                _ => None,
            };
            w.write_record([
                s.id.clone(),
                landmark.to_string(),
                horizon.to_string(),
                optional(value),
                p.status().to_string(),
            ])?;
        }
    }
    w.flush()?;
    write_plot_data(&out.join("plot_data.csv"), cfg, &fit, &data, landmark)
}

/// Per-subject class trajectories and the conditional survival curve on a
/// common time grid.
fn write_plot_data(path: &Path, cfg: &RunConfig, fit: &FittedModel, data: &Dataset, landmark: f64) -> CliResult<()> {
    let layout = data
        .layout()
        .ok_or_else(|| CliError::Config("dataset has no column layout for plot data".into()))?;
    let n = cfg.prediction.grid_points.max(2);
    let end = data.subjects().iter().map(|s| s.survival.time).fold(landmark, f64::max);
    let grid: Vec<f64> = (0..n).map(|g| end * g as f64 / (n - 1) as f64).collect();
    let after: Vec<f64> = grid.iter().filter(|&&t| t >= landmark).map(|t| t - landmark).collect();
    let curves = predict_subjects(fit, data, landmark, &after)?;
    let k = fit.k();

    let mut w = csv_writer(path)?;
    let mut header = vec!["subject_id".to_string(), "time".to_string()];
    header.extend((1..=k).map(|c| format!("trajectory_{c}")));
    header.push("conditional_survival".into());
    w.write_record(&header)?;
    for ((s, effects), curve) in data.subjects().iter().zip(&fit.effects).zip(&curves) {
        let (u, _) = split_effects(effects);
        let before = grid.len() - after.len();
        for (g, &t) in grid.iter().enumerate() {
            let (_, x2, z) = layout.at_time(s, t);
            let random: f64 = z.iter().zip(u).map(|(a, b)| a * b).sum();
            let mut row = vec![s.id.clone(), t.to_string()];
            for c in &fit.params.classes {
                let fixed: f64 = x2.iter().zip(&c.beta).map(|(a, b)| a * b).sum();
                row.push((fixed + random).to_string());
            }
            let surv = match curve {
                Prediction::Survival(v) if g >= before => Some(v[g - before]),
                _ => None,
            };
            row.push(optional(surv));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Risk marker `1 − Ŝ(landmark + horizon | landmark)` for every subject;
/// subjects without a prediction get 1 if degenerate and 0 otherwise.
pub fn risk_markers(fit: &FittedModel, data: &Dataset, landmark: f64, horizon: f64) -> CliResult<Vec<f64>> {
    Ok(predict_subjects(fit, data, landmark, &[horizon])?
        .iter()
        .map(|p| match p {
            Prediction::Survival(v) => 1.0 - v[0],
            Prediction::Degenerate => 1.0,
            _ => 0.0,
        })
        .collect())
}

pub struct ReplicateMetrics {
    pub auc: Option<f64>,
    pub error_rate: Option<f64>,
}

pub fn evaluate_replicate(cfg: &RunConfig, replicate: usize, horizon: f64) -> CliResult<ReplicateMetrics> {
    let p = prepare(cfg, replicate)?;
    let chain = run_chain(&p.data, cfg.model.k, &cfg.priors()?, &cfg.sampler()?)?;
    let fit = FittedModel::from_chain(&chain)?;
    let landmark = cfg.prediction.landmark;
    let markers = risk_markers(&fit, &p.data, landmark, horizon)?;
    let times: Vec<f64> = p.data.subjects().iter().map(|s| s.survival.time).collect();
    let events: Vec<bool> = p.data.subjects().iter().map(|s| s.survival.event).collect();
    let auc = match ipcw_auc(&markers, &times, &events, landmark, horizon) {
        Ok(a) => Some(a),
        Err(JlcmError::UndefinedAuc(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let error_rate = match &p.truth {
        Some(truth) => Some(error_rate(&posterior_membership(&fit, &p.data)?.modal, truth)?),
        None => None,
    };
    Ok(ReplicateMetrics { auc, error_rate })
}

pub fn cmd_evaluate(cfg: &RunConfig, horizon: f64) -> CliResult<()> {
    check_prediction_inputs(cfg.prediction.landmark, &[horizon])?;
    let replicates = match cfg.source()? {
        DataSource::Simulated(s) => s.replicates.max(1),
        DataSource::File(_) => 1,
    };
    let out = cfg.out_dir();
    fs::create_dir_all(&out)?;
    let mut w = csv_writer(&out.join("metrics.csv"))?;
    w.write_record(["replicate", "auc", "error_rate"])?;
    for r in 0..replicates {
        let m = evaluate_replicate(cfg, r, horizon)?;
        w.write_record([(r + 1).to_string(), optional(m.auc), optional(m.error_rate)])?;
    }
    w.flush()?;
    Ok(())
}
