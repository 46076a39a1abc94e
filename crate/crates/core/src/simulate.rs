//! Synthetic data from the joint latent class model.
//!
//! Each subject gets a standard-normal covariate `X1`, a Bernoulli(0.5)
//! covariate `X3` and random effects `W ~ N(0, Σ)` with both covariance
//! designs equal to `(1, X3)`. Visits follow a fixed schedule. At each visit
//! a class label is drawn from the membership model and the response from
//! that class's regression. The event time is generated by inverting the
//! Gompertz survival function of the class held at the current visit with a
//! single uniform draw per subject; follow-up stops at the first visit after
//! the event or censoring time, so the survival class is the label at the
//! last observed visit. A visit whose newly drawn class would place the event
//! before the visit itself is discarded, and follow-up ends with the previous
//! visit's class.

use std::fs::File;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::covariance::build_factors;
use crate::data::{CovarianceDesign, Dataset, Observation, Subject, SurvivalOutcome};
use crate::error::{JlcmError, Result};
use crate::likelihood::{dot, membership_probabilities, GAMMA_EPS};
use crate::params::{ClassParams, ParameterSet};
use crate::rng::{substream, tags};
use crate::schema::SchemaConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct Censoring {
    /// End of study; `None` disables administrative censoring.
    pub administrative: Option<f64>,
    /// Bounds of an independent uniform censoring time.
    pub uniform: Option<(f64, f64)>,
}

impl Censoring {
    pub fn none() -> Self {
        Self {
            administrative: None,
            uniform: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationScenario {
    pub subjects: usize,
    pub max_visits: usize,
    pub spacing: f64,
    pub first_visit: f64,
    /// True parameters; covariates are `x1 = x2 = (X1, t)`, `z = (1, t)`,
    /// `x3 = (X3)` and `A = B = (1, X3)`.
    pub params: ParameterSet,
    pub censoring: Censoring,
    /// Forces every label to this class when set.
    pub fixed_class: Option<usize>,
    pub seed: u64,
}

/// Two-class scenario with random effects of dimension three.
pub fn scenario_defaults() -> SimulationScenario {
    let class = |xi: [f64; 2], beta: [f64; 2], tau: f64, lambda0: f64, gamma: f64, omega: f64| ClassParams {
        xi: xi.to_vec(),
        beta: beta.to_vec(),
        omega: vec![omega],
        gamma,
        tau,
        lambda0,
    };
    SimulationScenario {
        subjects: 200,
        max_visits: 6,
        spacing: 0.2,
        first_visit: 0.0,
        params: ParameterSet {
            classes: vec![
                class([0.01, 0.2], [2.0, 1.5], 0.1, 0.2, 0.2, 0.5),
                class([0.0, 1.0], [4.0, 3.0], 0.5, 0.1, -0.2, 0.8),
            ],
            alpha1: vec![-0.2, -0.5],
            alpha2: vec![0.1, 0.3],
        },
        censoring: Censoring {
            administrative: Some(1.2),
            uniform: Some((0.4, 2.0)),
        },
        fixed_class: None,
        seed: 2024,
    }
}

impl SimulationScenario {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(JlcmError::Config(m));
        if self.subjects == 0 || self.max_visits == 0 {
            return bad("scenario needs at least one subject and one visit".into());
        }
        if !(self.spacing > 0.0 && self.first_visit >= 0.0) {
            return bad("visit spacing must be positive and the first visit nonnegative".into());
        }
        if let Some(a) = self.censoring.administrative {
            if !(a > 0.0) {
                return bad(format!("administrative censoring time must be positive, got {a}"));
            }
        }
        if let Some((lo, hi)) = self.censoring.uniform {
            if !(lo > 0.0 && hi >= lo) {
                return bad(format!("uniform censoring bounds ({lo}, {hi}) are invalid"));
            }
        }
        let p = &self.params;
        let dims_ok = p.classes.iter().all(|c| c.xi.len() == 2 && c.beta.len() == 2 && c.omega.len() == 1)
            && p.alpha1.len() == 2
            && p.alpha2.len() == 2;
        if p.classes.is_empty() || !dims_ok {
            return bad("scenario parameters must have 2 membership, 2 fixed, 1 hazard and 2+2 covariance coefficients".into());
        }
        if p.classes.iter().any(|c| !(c.tau > 0.0 && c.lambda0 > 0.0)) {
            return bad("scenario variances and baseline hazards must be positive".into());
        }
        if let Some(k) = self.fixed_class {
            if k >= p.k() {
                return bad(format!("fixed class {} exceeds the {} classes", k + 1, p.k()));
            }
        }
        Ok(())
    }

    fn end_of_schedule(&self) -> f64 {
        self.first_visit + self.max_visits as f64 * self.spacing
    }
}

/// Event time with survival `exp(−H(T)) = u` under a Gompertz hazard
/// `λ0 exp(γt + η)`; `+∞` when the total hazard never reaches `−ln u`.
pub fn gompertz_inverse(u: f64, lambda0: f64, gamma: f64, eta: f64) -> f64 {
    let scaled = -u.ln() / (lambda0 * eta.exp());
    if gamma.abs() < GAMMA_EPS {
        return scaled;
    }
    let arg = gamma * scaled;
    if arg <= -1.0 {
        f64::INFINITY
    } else {
        arg.ln_1p() / gamma
    }
}

/// Simulated data together with the generating random effects.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub dataset: Dataset,
    pub effects: Vec<Vec<f64>>,
    /// Uniform draw behind each subject's event time.
    pub uniforms: Vec<f64>,
    /// Latent event time of each subject (before censoring).
    pub event_times: Vec<f64>,
}

struct SubjectDraw {
    subject: Subject,
    labels: Vec<usize>,
    effects: Vec<f64>,
    uniform: f64,
    event_time: f64,
}

fn simulate_subject(s: &SimulationScenario, i: usize) -> Result<SubjectDraw> {
    let mut rng = substream(s.seed, &[tags::SIMULATE, i as u64]);
    let p = &s.params;
    let x1: f64 = rng.sample(StandardNormal);
    let x3 = if rng.random::<f64>() < 0.5 { 1.0 } else { 0.0 };
    let design = CovarianceDesign {
        a: vec![1.0, x3],
        b: vec![1.0, x3],
    };
    let w = build_factors(&p.alpha1, &p.alpha2, &design, 2)?.sample(&mut rng);
    let (u_eff, upsilon) = (&w[..2], w[2]);

    let mut censor = f64::INFINITY;
    if let Some(a) = s.censoring.administrative {
        censor = censor.min(a);
    }
    if let Some((lo, hi)) = s.censoring.uniform {
        censor = censor.min(lo + (hi - lo) * rng.random::<f64>());
    }
    let u = loop {
        let v: f64 = rng.random();
        if v > 0.0 {
            break v;
        }
    };

    let xis: Vec<Vec<f64>> = p.classes.iter().map(|c| c.xi.clone()).collect();
    let mut observations = Vec::new();
    let mut labels = Vec::new();
    let mut event_time = f64::INFINITY;
    for j in 0..s.max_visits {
        let t = s.first_visit + j as f64 * s.spacing;
        let xv = vec![x1, t];
        let k = match s.fixed_class {
            Some(k) => k,
            None => {
                let probs = membership_probabilities(&xv, &xis);
                let r: f64 = rng.random();
                let mut acc = 0.0;
                probs.iter().position(|&pk| {
                    acc += pk;
                    r < acc
                })
                .unwrap_or(probs.len() - 1)
            }
        };
        let c = &p.classes[k];
        let t_k = gompertz_inverse(u, c.lambda0, c.gamma, c.omega[0] * x3 + upsilon);
        if j > 0 && t_k.min(censor) < t {
            break;
        }
        event_time = t_k;
        let z = vec![1.0, t];
        let noise: f64 = rng.sample(StandardNormal);
        let y = dot(&xv, &c.beta) + dot(&z, u_eff) + c.tau.sqrt() * noise;
        observations.push(Observation {
            visit: j + 1,
            time: t,
            response: y,
            x1: xv.clone(),
            x2: xv,
            z,
        });
        labels.push(k);
        let next = s.first_visit + (j + 1) as f64 * s.spacing;
        if next > event_time.min(censor) {
            break;
        }
    }

    let (time, event) = if event_time <= censor {
        (event_time, true)
    } else if censor.is_finite() {
        (censor, false)
    } else {
        (s.end_of_schedule(), false)
    };
    Ok(SubjectDraw {
        subject: Subject {
            id: (i + 1).to_string(),
            observations,
            survival: SurvivalOutcome {
                time,
                event,
                x3: vec![x3],
            },
            design,
        },
        labels,
        effects: w,
        uniform: u,
        event_time,
    })
}

pub fn simulate(scenario: &SimulationScenario) -> Result<Simulation> {
    scenario.validate()?;
    let draws: Vec<SubjectDraw> = (0..scenario.subjects)
        .map(|i| simulate_subject(scenario, i))
        .collect::<Result<_>>()?;
    let mut subjects = Vec::with_capacity(draws.len());
    let mut labels = Vec::with_capacity(draws.len());
    let mut effects = Vec::with_capacity(draws.len());
    let mut uniforms = Vec::with_capacity(draws.len());
    let mut event_times = Vec::with_capacity(draws.len());
    for d in draws {
        subjects.push(d.subject);
        labels.push(d.labels);
        effects.push(d.effects);
        uniforms.push(d.uniform);
        event_times.push(d.event_time);
    }
    let dataset = Dataset::new(subjects)?
        .with_layout(SchemaConfig::simulation().layout())
        .with_true_classes(labels)?;
    Ok(Simulation {
        dataset,
        effects,
        uniforms,
        event_times,
    })
}

pub fn simulate_dataset(scenario: &SimulationScenario) -> Result<Dataset> {
    Ok(simulate(scenario)?.dataset)
}

/// Columns: `subject, visit, true_class` (1-based) and the subject's random
/// effects `w_1..w_n`.
pub fn write_truth(path: &Path, sim: &Simulation) -> Result<()> {
    let truth = sim
        .dataset
        .true_classes()
        .ok_or_else(|| JlcmError::Config("simulation carries no true classes".into()))?;
    let n_eff = sim.effects.first().map_or(0, Vec::len);
    let mut w = csv::Writer::from_writer(File::create(path)?);
    let mut header = vec!["subject".to_string(), "visit".into(), "true_class".into()];
    header.extend((1..=n_eff).map(|g| format!("w_{g}")));
    w.write_record(&header)?;
    for ((s, labels), eff) in sim.dataset.subjects().iter().zip(truth).zip(&sim.effects) {
        for (o, l) in s.observations.iter().zip(labels) {
            let mut row = vec![s.id.clone(), o.visit.to_string(), (l + 1).to_string()];
            row.extend(eff.iter().map(f64::to_string));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads true labels from a truth file, in the subject order of `data`.
pub fn read_true_classes(path: &Path, data: &Dataset) -> Result<Vec<Vec<usize>>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut by_subject: std::collections::HashMap<String, Vec<usize>> = std::collections::HashMap::new();
    for rec in r.records() {
        let rec = rec?;
        let class: usize = rec[2]
            .parse()
            .map_err(|_| JlcmError::Config(format!("truth file: bad class '{}'", &rec[2])))?;
        if class == 0 {
            return Err(JlcmError::Config("truth file classes are 1-based".into()));
        }
        by_subject.entry(rec[0].to_string()).or_default().push(class - 1);
    }
    data.subjects()
        .iter()
        .map(|s| match by_subject.remove(&s.id) {
            Some(v) if v.len() == s.visits() => Ok(v),
            _ => Err(JlcmError::Config(format!("truth file does not match subject {}", s.id))),
        })
        .collect()
}
