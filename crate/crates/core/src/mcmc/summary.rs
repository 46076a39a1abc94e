//! Posterior summaries: mean, standard deviation and 89% equal-tailed
//! interval of every parameter.

use super::ChainOutput;
use crate::error::{JlcmError, Result};
use crate::params::ParamGroup;

pub const INTERVAL_LOW: f64 = 0.055;
pub const INTERVAL_HIGH: f64 = 0.945;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueSummary {
    pub mean: f64,
    pub sd: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSummary {
    pub label: String,
    pub group: ParamGroup,
    pub class: Option<usize>,
    pub index: usize,
    pub summary: ValueSummary,
}

/// Linear-interpolation quantile of sorted data (`(n − 1)p` positioning).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize_values(values: &[f64]) -> Result<ValueSummary> {
    if values.len() < 2 {
        return Err(JlcmError::EmptyChain);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(ValueSummary {
        mean,
        sd: var.sqrt(),
        ci_low: quantile(&sorted, INTERVAL_LOW),
        ci_high: quantile(&sorted, INTERVAL_HIGH),
    })
}

/// Summaries of every parameter, in the order of `ParameterSet::entries`.
pub fn summarize(chain: &ChainOutput) -> Result<Vec<ParameterSummary>> {
    let first = chain.draws.first().ok_or(JlcmError::EmptyChain)?;
    let template = first.entries();
    let columns: Vec<Vec<f64>> = {
        let mut cols = vec![Vec::with_capacity(chain.len()); template.len()];
        for d in &chain.draws {
            for (col, e) in cols.iter_mut().zip(d.entries()) {
                col.push(e.value);
            }
        }
        cols
    };
    template
        .iter()
        .zip(&columns)
        .map(|(e, col)| {
            Ok(ParameterSummary {
                label: e.label(),
                group: e.group,
                class: e.class,
                index: e.index,
                summary: summarize_values(col)?,
            })
        })
        .collect()
}
