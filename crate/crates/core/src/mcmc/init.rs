//! Starting values: a classification-EM mixture of linear regressions of the
//! response on the fixed-effect covariates, ignoring random effects.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::SamplerConfig;
use crate::data::Dataset;
use crate::likelihood::{dot, longitudinal_log_density};
use crate::params::{LatentState, ParameterSet};
use crate::rng::{substream, tags};

const MAX_ROUNDS: usize = 100;
const RIDGE: f64 = 1e-8;

struct Fit {
    labels: Vec<usize>,
    betas: Vec<Vec<f64>>,
    taus: Vec<f64>,
    score: f64,
}

fn least_squares(rows: &[(&[f64], f64)], d: usize) -> Option<(Vec<f64>, f64)> {
    if rows.len() < d {
        return None;
    }
    let mut xtx = DMatrix::<f64>::identity(d, d) * RIDGE;
    let mut xty = DVector::<f64>::zeros(d);
    for (x, y) in rows {
        for a in 0..d {
            xty[a] += x[a] * y;
            for b in 0..d {
                xtx[(a, b)] += x[a] * x[b];
            }
        }
    }
    let beta: Vec<f64> = xtx.cholesky()?.solve(&xty).iter().copied().collect();
    let rss: f64 = rows.iter().map(|(x, y)| (y - dot(x, &beta)).powi(2)).sum();
    Some((beta, (rss / rows.len() as f64).max(1e-6)))
}

fn classification_em(sites: &[(&[f64], f64)], k: usize, d: usize, mut labels: Vec<usize>) -> Option<Fit> {
    let n = sites.len();
    let mut betas = vec![vec![0.0; d]; k];
    let mut taus = vec![1.0; k];
    let mut weights = vec![1.0 / k as f64; k];
    for _ in 0..MAX_ROUNDS {
        for c in 0..k {
            let rows: Vec<(&[f64], f64)> = sites.iter().zip(&labels).filter(|(_, &l)| l == c).map(|(s, _)| *s).collect();
            let (b, t) = least_squares(&rows, d)?;
            betas[c] = b;
            taus[c] = t;
            weights[c] = rows.len() as f64 / n as f64;
        }
        let next: Vec<usize> = sites
            .iter()
            .map(|(x, y)| {
                (0..k)
                    .map(|c| weights[c].ln() + longitudinal_log_density(*y, x, &[], &betas[c], &[], taus[c]))
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (c, v)| if v > best.1 { (c, v) } else { best })
                    .0
            })
            .collect();
        if next == labels {
            break;
        }
        labels = next;
    }
    let score = sites
        .iter()
        .zip(&labels)
        .map(|((x, y), &c)| weights[c].ln() + longitudinal_log_density(*y, x, &[], &betas[c], &[], taus[c]))
        .sum();
    Some(Fit {
        labels,
        betas,
        taus,
        score,
    })
}

/// Initial parameters and latent state for a `k`-class fit.
///
/// Labels and `(β_k, τ_k)` come from the best of several randomly started
/// classification-EM runs, with classes ordered by the first fixed-effect
/// coefficient. Membership, hazard-covariate, shape and covariance
/// coefficients start at zero, random effects at zero, and every `λ0_k` at
/// the crude event rate.
pub fn initial_state(data: &Dataset, k: usize, config: &SamplerConfig) -> (ParameterSet, LatentState) {
    let dims = data.dims();
    let mut params = ParameterSet::zeros(k, &dims);
    let mut state = LatentState::zeros(data);

    let events = data.subjects().iter().filter(|s| s.survival.event).count() as f64;
    let exposure: f64 = data.subjects().iter().map(|s| s.survival.time).sum();
    let rate = (events.max(0.5) / exposure).max(1e-6);
    for c in &mut params.classes {
        c.lambda0 = rate;
    }

    let sites: Vec<(&[f64], f64)> = data
        .subjects()
        .iter()
        .flat_map(|s| s.observations.iter().map(|o| (o.x2.as_slice(), o.response)))
        .collect();
    let restarts = if k == 1 { 1 } else { config.init_restarts.max(1) };
    let best = (0..restarts)
        .filter_map(|r| {
            let mut rng = substream(config.seed, &[tags::INIT, r as u64]);
            let labels = (0..sites.len()).map(|_| rng.random_range(0..k)).collect();
            classification_em(&sites, k, dims.x2, labels)
        })
        .fold(None::<Fit>, |best, f| match best {
            Some(b) if b.score >= f.score => Some(b),
            _ => Some(f),
        });

    if let Some(fit) = best {
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| fit.betas[a][0].total_cmp(&fit.betas[b][0]));
        let mut rank = vec![0; k];
        for (new, &old) in order.iter().enumerate() {
            rank[old] = new;
            params.classes[new].beta = fit.betas[old].clone();
            params.classes[new].tau = fit.taus[old];
        }
        let mut it = fit.labels.iter();
        for row in &mut state.labels {
            for l in row.iter_mut() {
                *l = rank[*it.next().expect("one label per site")];
            }
        }
    } else {
        let (b, t) = least_squares(&sites, dims.x2).unwrap_or((vec![0.0; dims.x2], 1.0));
        for c in &mut params.classes {
            c.beta = b.clone();
            c.tau = t;
        }
    }
    (params, state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{CovarianceDesign, Observation, Subject, SurvivalOutcome};

    #[test]
    fn separates_two_regression_lines() {
        let subjects = (0..40)
            .map(|i| {
                let high = i % 2 == 0;
                let observations = (0..4)
                    .map(|j| {
                        let t = j as f64 * 0.3;
                        let y = if high { 5.0 + 2.0 * t } else { -1.0 + 0.5 * t } + 0.01 * ((i * 7 + j) % 5) as f64;
                        Observation {
                            visit: j + 1,
                            time: t,
                            response: y,
                            x1: vec![1.0],
                            x2: vec![1.0, t],
                            z: vec![1.0],
                        }
                    })
                    .collect();
                Subject {
                    id: format!("s{i}"),
                    observations,
                    survival: SurvivalOutcome {
                        time: 2.0,
                        event: i % 3 == 0,
                        x3: vec![0.0],
                    },
                    design: CovarianceDesign::intercept_only(),
                }
            })
            .collect();
        let data = Dataset::new(subjects).unwrap();
        let (params, state) = initial_state(&data, 2, &SamplerConfig::default());
        assert!((params.classes[0].beta[0] + 1.0).abs() < 0.1);
        assert!((params.classes[1].beta[0] - 5.0).abs() < 0.1);
        for (i, row) in state.labels.iter().enumerate() {
            let expected = if i % 2 == 0 { 1 } else { 0 };
            assert!(row.iter().all(|&l| l == expected));
        }
        let events = 14.0;
        assert!((params.classes[0].lambda0 - events / 80.0).abs() < 1e-12);
    }
}
