//! Evaluation metrics: label error rate, class-jumping counts and the
//! inverse-probability-of-censoring-weighted time-dependent AUC.

use crate::error::{JlcmError, Result};

/// Largest class count accepted by [`error_rate`]'s permutation search.
pub const MAX_PERMUTED_CLASSES: usize = 6;

fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for c in 0..used.len() {
            if !used[c] {
                used[c] = true;
                prefix.push(c);
                go(prefix, used, out);
                prefix.pop();
                used[c] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::with_capacity(k), &mut vec![false; k], &mut out);
    out
}

/// Fraction of visits whose fitted label disagrees with the truth, minimized
/// over relabelings of the fitted classes. Class counts may differ; the
/// smaller label set is padded.
pub fn error_rate(fitted: &[Vec<usize>], truth: &[Vec<usize>]) -> Result<f64> {
    if fitted.len() != truth.len() || fitted.iter().zip(truth).any(|(a, b)| a.len() != b.len()) {
        return Err(JlcmError::Dimension("fitted and true labels differ in shape".into()));
    }
    let sites: Vec<(usize, usize)> = fitted
        .iter()
        .zip(truth)
        .flat_map(|(a, b)| a.iter().copied().zip(b.iter().copied()))
        .collect();
    if sites.is_empty() {
        return Ok(0.0);
    }
    let k = sites.iter().map(|&(a, b)| a.max(b) + 1).max().unwrap_or(1);
    if k > MAX_PERMUTED_CLASSES {
        return Err(JlcmError::TooManyClasses(k));
    }
    let mut confusion = vec![vec![0usize; k]; k];
    for &(a, b) in &sites {
        confusion[a][b] += 1;
    }
    let best = permutations(k)
        .iter()
        .map(|perm| (0..k).map(|a| confusion[a][perm[a]]).sum::<usize>())
        .max()
        .unwrap_or(0);
    Ok(1.0 - best as f64 / sites.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JumpingSummary {
    /// Subjects whose label never changes, by class.
    pub stayers: Vec<usize>,
    /// Subjects whose label changes at least once, by final class.
    pub jumpers: Vec<usize>,
}

impl JumpingSummary {
    pub fn total(&self) -> usize {
        self.stayers.iter().sum::<usize>() + self.jumpers.iter().sum::<usize>()
    }
}

pub fn jumping_summary(labels: &[Vec<usize>], k: usize) -> JumpingSummary {
    let k = labels.iter().flatten().map(|l| l + 1).max().unwrap_or(0).max(k);
    let mut out = JumpingSummary {
        stayers: vec![0; k],
        jumpers: vec![0; k],
    };
    for row in labels {
        let Some(&last) = row.last() else { continue };
        if row.iter().all(|&l| l == last) {
            out.stayers[last] += 1;
        } else {
            out.jumpers[last] += 1;
        }
    }
    out
}

/// Kaplan–Meier estimate of the censoring survival function `G`.
#[derive(Debug, Clone, PartialEq)]
pub struct CensoringSurvival {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl CensoringSurvival {
    /// Censorings (`event == false`) are the events of this estimator.
    pub fn fit(times: &[f64], events: &[bool]) -> Self {
        let mut order: Vec<usize> = (0..times.len()).collect();
        order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
        let mut out = Self {
            times: Vec::new(),
            values: Vec::new(),
        };
        let mut at_risk = times.len();
        let mut g = 1.0;
        let mut idx = 0;
        while idx < order.len() {
            let t = times[order[idx]];
            let mut censored = 0;
            let mut tied = 0;
            while idx + tied < order.len() && times[order[idx + tied]] == t {
                censored += usize::from(!events[order[idx + tied]]);
                tied += 1;
            }
            if censored > 0 {
                g *= 1.0 - censored as f64 / at_risk as f64;
                out.times.push(t);
                out.values.push(g);
            }
            at_risk -= tied;
            idx += tied;
        }
        out
    }

    /// `G(t)`.
    pub fn at(&self, t: f64) -> f64 {
        let n = self.times.partition_point(|&s| s <= t);
        if n == 0 {
            1.0
        } else {
            self.values[n - 1]
        }
    }

    /// `G(t⁻)`.
    pub fn before(&self, t: f64) -> f64 {
        let n = self.times.partition_point(|&s| s < t);
        if n == 0 {
            1.0
        } else {
            self.values[n - 1]
        }
    }
}

/// IPCW estimate of the AUC for events in `(landmark, landmark + horizon]`.
///
/// Cases have an observed event in the window and weight `1/G(T⁻)`;
/// controls survive past the window and have weight `1/G(landmark + horizon)`.
/// A case outranks a control when its marker is larger; ties count one half.
pub fn ipcw_auc(markers: &[f64], times: &[f64], events: &[bool], landmark: f64, horizon: f64) -> Result<f64> {
    if markers.len() != times.len() || times.len() != events.len() {
        return Err(JlcmError::Dimension("markers, times and events differ in length".into()));
    }
    let end = landmark + horizon;
    let g = CensoringSurvival::fit(times, events);
    let g_end = g.at(end);
    let cases: Vec<(f64, f64)> = (0..times.len())
        .filter(|&i| events[i] && times[i] > landmark && times[i] <= end)
        .filter_map(|i| {
            let gi = g.before(times[i]);
            (gi > 0.0).then(|| (markers[i], 1.0 / gi))
        })
        .collect();
    let controls: Vec<f64> = (0..times.len()).filter(|&i| times[i] > end).map(|i| markers[i]).collect();
    if cases.is_empty() || controls.is_empty() || g_end <= 0.0 {
        return Err(JlcmError::UndefinedAuc(format!(
            "{} cases and {} controls in ({landmark}, {end}]",
            cases.len(),
            controls.len()
        )));
    }
    let wc = 1.0 / g_end;
    let mut num = 0.0;
    let mut den = 0.0;
    for &(mi, wi) in &cases {
        for &mj in &controls {
            let score = if mi > mj {
                1.0
            } else if mi == mj {
                0.5
            } else {
                0.0
            };
            num += wi * wc * score;
            den += wi * wc;
        }
    }
    Ok(num / den)
}
