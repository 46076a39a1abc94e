//! Point estimates extracted from a chain, with CSV persistence.

use std::fs::File;
use std::path::Path;

use crate::data::Dataset;
use crate::error::{JlcmError, Result};
use crate::mcmc::ChainOutput;
use crate::params::{validate, ParameterSet};

/// Posterior means of the parameters and random effects, plus the modal
/// label of every visit.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    pub params: ParameterSet,
    pub effects: Vec<Vec<f64>>,
    pub modal_labels: Vec<Vec<usize>>,
}

const PARAMS_FILE: &str = "fitted_params.csv";
const EFFECTS_FILE: &str = "fitted_effects.csv";
const LABELS_FILE: &str = "fitted_labels.csv";

fn parse_f64(field: &str, file: &str) -> Result<f64> {
    field
        .parse()
        .map_err(|_| JlcmError::Config(format!("{file}: cannot parse number '{field}'")))
}

impl FittedModel {
    pub fn from_chain(chain: &ChainOutput) -> Result<Self> {
        Ok(Self {
            params: chain.posterior_mean()?,
            effects: chain.mean_effects()?,
            modal_labels: chain.modal_labels()?,
        })
    }

    pub fn k(&self) -> usize {
        self.params.k()
    }

    /// Writes `fitted_params.csv`, `fitted_effects.csv` and
    /// `fitted_labels.csv` into `dir`.
    pub fn write(&self, dir: &Path, data: &Dataset) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_writer(File::create(dir.join(PARAMS_FILE))?);
        w.write_record(["parameter", "value"])?;
        for e in self.params.entries() {
            w.write_record([e.label(), e.value.to_string()])?;
        }
        w.flush()?;

        let n_eff = data.dims().effects();
        let mut w = csv::Writer::from_writer(File::create(dir.join(EFFECTS_FILE))?);
        let mut header = vec!["subject_id".to_string()];
        header.extend((1..=n_eff).map(|g| format!("effect_{g}")));
        w.write_record(&header)?;
        for (s, eff) in data.subjects().iter().zip(&self.effects) {
            let mut row = vec![s.id.clone()];
            row.extend(eff.iter().map(f64::to_string));
            w.write_record(&row)?;
        }
        w.flush()?;

        let mut w = csv::Writer::from_writer(File::create(dir.join(LABELS_FILE))?);
        w.write_record(["subject_id", "visit", "class"])?;
        for (s, labels) in data.subjects().iter().zip(&self.modal_labels) {
            for (o, l) in s.observations.iter().zip(labels) {
                w.write_record([s.id.clone(), o.visit.to_string(), (l + 1).to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a model written by [`FittedModel::write`] for the same dataset.
    pub fn read(dir: &Path, data: &Dataset) -> Result<Self> {
        let mut values = Vec::new();
        let mut r = csv::Reader::from_path(dir.join(PARAMS_FILE))?;
        for rec in r.records() {
            let rec = rec?;
            values.push((rec[0].to_string(), parse_f64(&rec[1], PARAMS_FILE)?));
        }
        let k = values.iter().filter(|(l, _)| l.starts_with("tau_")).count();
        if k == 0 {
            return Err(JlcmError::Config(format!("{PARAMS_FILE}: no class parameters found")));
        }
        let mut params = ParameterSet::zeros(k, &data.dims());
        for e in params.entries() {
            let label = e.label();
            let v = values
                .iter()
                .find(|(l, _)| *l == label)
                .ok_or_else(|| JlcmError::Config(format!("{PARAMS_FILE}: missing parameter {label}")))?
                .1;
            params.set(e.group, e.class, e.index, v)?;
        }
        validate(&params, data).map_err(JlcmError::Validation)?;

        let mut r = csv::Reader::from_path(dir.join(EFFECTS_FILE))?;
        let mut effects = Vec::with_capacity(data.len());
        for (rec, s) in r.records().zip(data.subjects()) {
            let rec = rec?;
            if &rec[0] != s.id.as_str() || rec.len() != data.dims().effects() + 1 {
                return Err(JlcmError::Config(format!("{EFFECTS_FILE}: rows do not match the dataset")));
            }
            effects.push(rec.iter().skip(1).map(|f| parse_f64(f, EFFECTS_FILE)).collect::<Result<Vec<_>>>()?);
        }
        if effects.len() != data.len() {
            return Err(JlcmError::Config(format!("{EFFECTS_FILE}: expected {} subjects", data.len())));
        }

        let mut modal_labels: Vec<Vec<usize>> = data.subjects().iter().map(|s| Vec::with_capacity(s.visits())).collect();
        let mut r = csv::Reader::from_path(dir.join(LABELS_FILE))?;
        let mut rows = r.records();
        for (i, s) in data.subjects().iter().enumerate() {
            for _ in 0..s.visits() {
                let rec = rows
                    .next()
                    .ok_or_else(|| JlcmError::Config(format!("{LABELS_FILE}: too few rows")))??;
                let class: usize = rec[2]
                    .parse()
                    .map_err(|_| JlcmError::Config(format!("{LABELS_FILE}: bad class '{}'", &rec[2])))?;
                if &rec[0] != s.id.as_str() || class == 0 || class > k {
                    return Err(JlcmError::Config(format!("{LABELS_FILE}: rows do not match the dataset")));
                }
                modal_labels[i].push(class - 1);
            }
        }
        Ok(Self {
            params,
            effects,
            modal_labels,
        })
    }
}
