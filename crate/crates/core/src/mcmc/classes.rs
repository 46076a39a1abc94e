//! Discrete update of the per-visit class labels.

use rand::Rng;

use crate::data::Dataset;
use crate::likelihood::{normalize_log_weights, subject_site_log_weights};
use crate::parallel::{map_indexed, Execution};
use crate::params::{LatentState, ParameterSet};
use crate::rng::{substream, tags};

/// Full-conditional label probabilities `[i][j][k]` given parameters and
/// random effects.
pub fn class_probabilities(exec: Execution, params: &ParameterSet, data: &Dataset, state: &LatentState) -> Vec<Vec<Vec<f64>>> {
    map_indexed(exec, data.len(), |i| {
        subject_site_log_weights(params, &data.subjects()[i], &state.effects[i])
            .iter()
            .map(|lw| normalize_log_weights(lw))
            .collect()
    })
}

fn draw_index<R: Rng + ?Sized>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Draws every label independently from its full conditional. Subject `i`
/// uses the substream `(seed, CLASSES, iteration, i)`.
pub fn sample_class_indicators(
    exec: Execution,
    seed: u64,
    iteration: u64,
    params: &ParameterSet,
    data: &Dataset,
    state: &LatentState,
) -> Vec<Vec<usize>> {
    map_indexed(exec, data.len(), |i| {
        let mut rng = substream(seed, &[tags::CLASSES, iteration, i as u64]);
        subject_site_log_weights(params, &data.subjects()[i], &state.effects[i])
            .iter()
            .map(|lw| draw_index(&mut rng, &normalize_log_weights(lw)))
            .collect()
    })
}
