//! Posterior class-membership probabilities for model-based classification.
//!
//! The weight of class `k` at visit `j` is `π_ijk · f(Ŵ_i) · P̂_ijk`, where
//! `P̂_ijk` is the per-visit likelihood term (membership probability times the
//! response density, times the survival density at the last visit). The
//! membership probability therefore enters twice; this follows the
//! classification rule as published. `f(Ŵ_i)` is common to all classes and
//! cancels on normalization.

use std::fs::File;
use std::path::Path;

use super::FittedModel;
use crate::covariance::{build_factors, random_effects_log_density};
use crate::data::{Dataset, Subject};
use crate::error::Result;
use crate::likelihood::{membership_log_probabilities, normalize_log_weights, subject_site_log_weights};
use crate::params::ParameterSet;

#[derive(Debug, Clone, PartialEq)]
pub struct Membership {
    /// `[i][j][k]`.
    pub probabilities: Vec<Vec<Vec<f64>>>,
    pub modal: Vec<Vec<usize>>,
}

/// Unnormalized log classification weights `[j][k]` for one subject.
pub fn membership_log_weights(params: &ParameterSet, subject: &Subject, w: &[f64], q: usize) -> Result<Vec<Vec<f64>>> {
    let f = build_factors(&params.alpha1, &params.alpha2, &subject.design, q)?;
    let log_fw = random_effects_log_density(w, &f);
    let sites = subject_site_log_weights(params, subject, w);
    Ok(subject
        .observations
        .iter()
        .zip(sites)
        .map(|(o, site)| {
            membership_log_probabilities(&o.x1, params.xis())
                .iter()
                .zip(site)
                .map(|(lp, s)| lp + log_fw + s)
                .collect()
        })
        .collect())
}

fn argmax(p: &[f64]) -> usize {
    p.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (k, &v)| if v > best.1 { (k, v) } else { best })
        .0
}

pub fn posterior_membership(fit: &FittedModel, data: &Dataset) -> Result<Membership> {
    let q = data.q();
    let mut probabilities = Vec::with_capacity(data.len());
    for (s, w) in data.subjects().iter().zip(&fit.effects) {
        let rows: Vec<Vec<f64>> = membership_log_weights(&fit.params, s, w, q)?
            .iter()
            .map(|lw| normalize_log_weights(lw))
            .collect();
        probabilities.push(rows);
    }
    let modal = probabilities
        .iter()
        .map(|rows| rows.iter().map(|p| argmax(p)).collect())
        .collect();
    Ok(Membership { probabilities, modal })
}

/// Columns: `subject_id, visit, prob_1..prob_K, modal_class` (1-based class).
pub fn write_membership(path: &Path, data: &Dataset, membership: &Membership) -> Result<()> {
    let k = membership
        .probabilities
        .first()
        .and_then(|r| r.first())
        .map_or(0, Vec::len);
    let mut w = csv::Writer::from_writer(File::create(path)?);
    let mut header = vec!["subject_id".to_string(), "visit".to_string()];
    header.extend((1..=k).map(|c| format!("prob_{c}")));
    header.push("modal_class".into());
    w.write_record(&header)?;
    for ((s, probs), modal) in data.subjects().iter().zip(&membership.probabilities).zip(&membership.modal) {
        for ((o, p), m) in s.observations.iter().zip(probs).zip(modal) {
            let mut row = vec![s.id.clone(), o.visit.to_string()];
            row.extend(p.iter().map(f64::to_string));
            row.push((m + 1).to_string());
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}
