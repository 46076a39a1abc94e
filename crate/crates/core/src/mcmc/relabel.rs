//! Post-hoc handling of label switching.

use super::ChainOutput;
use crate::params::ParameterSet;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum RelabelPolicy {
    /// Keep draws as sampled.
    None,
    /// Order classes within every draw by ascending first fixed-effect
    /// coefficient.
    #[default]
    FirstFixedEffect,
}

/// Permutation putting the classes of `params` in canonical order: entry `k`
/// is the old index of the new class `k`.
pub fn canonical_order(params: &ParameterSet) -> Vec<usize> {
    let mut order: Vec<usize> = (0..params.k()).collect();
    order.sort_by(|&a, &b| {
        let ba = params.classes[a].beta.first().copied().unwrap_or(0.0);
        let bb = params.classes[b].beta.first().copied().unwrap_or(0.0);
        ba.total_cmp(&bb)
    });
    order
}

/// Applies `policy` to every stored draw, permuting parameters and labels
/// together.
pub fn relabel(chain: &ChainOutput, policy: RelabelPolicy) -> ChainOutput {
    let mut out = chain.clone();
    if policy == RelabelPolicy::None || chain.k < 2 {
        return out;
    }
    for (p, s) in out.draws.iter_mut().zip(out.states.iter_mut()) {
        let order = canonical_order(p);
        if order.iter().enumerate().all(|(a, &b)| a == b) {
            continue;
        }
        *p = p.permuted(&order);
        *s = s.permuted(&order);
    }
    out
}
