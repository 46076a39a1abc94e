//! Subjects, observations and designs.

use serde::{Deserialize, Serialize};

use crate::error::{JlcmError, Result};

/// One longitudinal measurement with its design vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// 1-based visit index within the subject.
    pub visit: usize,
    pub time: f64,
    pub response: f64,
    /// Membership covariates (including any time term).
    pub x1: Vec<f64>,
    /// Fixed-effect covariates.
    pub x2: Vec<f64>,
    /// Random-effect covariates, length `q`.
    pub z: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalOutcome {
    /// Follow-up time, `min(event time, censoring time)`.
    pub time: f64,
    pub event: bool,
    /// Hazard covariates (baseline values).
    pub x3: Vec<f64>,
}

/// Covariates of the covariance regression. `a` drives the autoregressive
/// coefficients and `b` the log innovation variances; both are stored once
/// per subject and shared by every `(g, l)` entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceDesign {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl CovarianceDesign {
    pub fn intercept_only() -> Self {
        Self {
            a: vec![1.0],
            b: vec![1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subject {
    pub id: String,
    pub observations: Vec<Observation>,
    pub survival: SurvivalOutcome,
    pub design: CovarianceDesign,
}

impl Subject {
    pub fn visits(&self) -> usize {
        self.observations.len()
    }

    pub fn last_time(&self) -> f64 {
        self.observations.last().map_or(0.0, |o| o.time)
    }

    /// Copy holding only the visits observed at or before `t`.
    pub fn history_until(&self, t: f64) -> Subject {
        Subject {
            id: self.id.clone(),
            observations: self
                .observations
                .iter()
                .filter(|o| o.time <= t)
                .cloned()
                .collect(),
            survival: self.survival.clone(),
            design: self.design.clone(),
        }
    }
}

/// How a design vector entry is built from the raw data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Term {
    Intercept,
    Time,
    Column(String),
}

/// Column roles behind `x1`, `x2` and `z`, kept so design vectors can be
/// re-evaluated at arbitrary times (plot grids, predictions).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignLayout {
    pub membership: Vec<Term>,
    pub fixed: Vec<Term>,
    pub random: Vec<Term>,
}

fn retime(terms: &[Term], template: &[f64], t: f64) -> Vec<f64> {
    template
        .iter()
        .enumerate()
        .map(|(p, &v)| match terms.get(p) {
            Some(Term::Time) => t,
            _ => v,
        })
        .collect()
}

impl DesignLayout {
    /// Design vectors `(x1, x2, z)` for `subject` at time `t`, taking
    /// time-constant entries from its last observation.
    pub fn at_time(&self, subject: &Subject, t: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let last = subject
            .observations
            .last()
            .expect("subjects always carry at least one observation");
        (
            retime(&self.membership, &last.x1, t),
            retime(&self.fixed, &last.x2, t),
            retime(&self.random, &last.z, t),
        )
    }
}

/// Vector lengths shared by every subject of a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub x1: usize,
    pub x2: usize,
    pub q: usize,
    pub x3: usize,
    pub a: usize,
    pub b: usize,
}

impl Dims {
    /// Dimension of the random-effects vector `W = (U, υ)`.
    pub fn effects(&self) -> usize {
        self.q + 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    subjects: Vec<Subject>,
    dims: Dims,
    true_classes: Option<Vec<Vec<usize>>>,
    layout: Option<DesignLayout>,
}

fn all_finite(xs: &[f64]) -> bool {
    xs.iter().all(|v| v.is_finite())
}

/// Checks one subject against the dataset invariants, appending every
/// violation found.
fn check_subject(s: &Subject, dims: &Dims, errors: &mut Vec<JlcmError>) {
    let sid = || s.id.clone();
    if s.observations.is_empty() {
        errors.push(JlcmError::EmptySubject(sid()));
        return;
    }
    for w in s.observations.windows(2) {
        if !(w[1].time > w[0].time) {
            errors.push(JlcmError::UnorderedTimes { subject: sid() });
            break;
        }
    }
    for o in &s.observations {
        let dims_ok = o.x1.len() == dims.x1 && o.x2.len() == dims.x2 && o.z.len() == dims.q;
        if !dims_ok {
            errors.push(JlcmError::Dimension(format!(
                "subject {}: visit {} design lengths ({}, {}, {}) differ from ({}, {}, {})",
                s.id,
                o.visit,
                o.x1.len(),
                o.x2.len(),
                o.z.len(),
                dims.x1,
                dims.x2,
                dims.q
            )));
        }
        if !(o.time.is_finite() && o.time >= 0.0) {
            errors.push(JlcmError::NonFinite {
                subject: sid(),
                field: format!("obs_time at visit {}", o.visit),
            });
        }
        if !(o.response.is_finite() && all_finite(&o.x1) && all_finite(&o.x2) && all_finite(&o.z)) {
            errors.push(JlcmError::NonFinite {
                subject: sid(),
                field: format!("visit {}", o.visit),
            });
        }
    }
    let surv = &s.survival;
    if !(surv.time.is_finite() && surv.time > 0.0) {
        errors.push(JlcmError::InvalidSurvival {
            subject: sid(),
            reason: format!("follow-up time {} must be positive and finite", surv.time),
        });
    }
    if surv.time < s.last_time() {
        errors.push(JlcmError::FollowupBeforeObservation {
            subject: sid(),
            followup: surv.time,
            last_obs: s.last_time(),
        });
    }
    if surv.x3.len() != dims.x3 || s.design.a.len() != dims.a || s.design.b.len() != dims.b {
        errors.push(JlcmError::Dimension(format!(
            "subject {}: hazard/covariance design lengths differ from the dataset",
            s.id
        )));
    }
    if !(all_finite(&surv.x3) && all_finite(&s.design.a) && all_finite(&s.design.b)) {
        errors.push(JlcmError::NonFinite {
            subject: sid(),
            field: "subject-level covariates".into(),
        });
    }
}

impl Dataset {
    /// Builds a dataset, rejecting the first invariant violation.
    pub fn new(subjects: Vec<Subject>) -> Result<Self> {
        let first = subjects
            .first()
            .ok_or_else(|| JlcmError::Config("dataset has no subjects".into()))?;
        let Some(obs) = first.observations.first() else {
            return Err(JlcmError::EmptySubject(first.id.clone()));
        };
        let dims = Dims {
            x1: obs.x1.len(),
            x2: obs.x2.len(),
            q: obs.z.len(),
            x3: first.survival.x3.len(),
            a: first.design.a.len(),
            b: first.design.b.len(),
        };
        if dims.q == 0 {
            return Err(JlcmError::Dimension(
                "random-effect design z must have at least one column".into(),
            ));
        }
        let mut errors = Vec::new();
        for s in &subjects {
            check_subject(s, &dims, &mut errors);
        }
        if let Some(e) = errors.into_iter().next() {
            return Err(e);
        }
        Ok(Self {
            subjects,
            dims,
            true_classes: None,
            layout: None,
        })
    }

    pub fn with_layout(mut self, layout: DesignLayout) -> Self {
        self.layout = Some(layout);
        self
    }

    /// Attaches 0-based ground-truth labels, one per visit.
    pub fn with_true_classes(mut self, classes: Vec<Vec<usize>>) -> Result<Self> {
        if classes.len() != self.subjects.len()
            || classes
                .iter()
                .zip(&self.subjects)
                .any(|(c, s)| c.len() != s.visits())
        {
            return Err(JlcmError::Dimension(
                "true classes must match the visit layout".into(),
            ));
        }
        self.true_classes = Some(classes);
        Ok(self)
    }

    /// Replaces every subject's covariance design by the intercept-only
    /// design, which yields a covariance shared by all subjects.
    pub fn with_intercept_only_covariance(mut self) -> Self {
        for s in &mut self.subjects {
            s.design = CovarianceDesign::intercept_only();
        }
        self.dims.a = 1;
        self.dims.b = 1;
        self
    }

    pub fn subjects(&self) -> &[Subject] {
        &self.subjects
    }

    pub fn len(&self) -> usize {
        self.subjects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subjects.is_empty()
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn q(&self) -> usize {
        self.dims.q
    }

    pub fn n_observations(&self) -> usize {
        self.subjects.iter().map(Subject::visits).sum()
    }

    pub fn true_classes(&self) -> Option<&[Vec<usize>]> {
        self.true_classes.as_deref()
    }

    pub fn layout(&self) -> Option<&DesignLayout> {
        self.layout.as_ref()
    }

    /// Subset of subjects by index, keeping layout and truth.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let subjects = indices.iter().map(|&i| self.subjects[i].clone()).collect();
        let mut out = Dataset::new(subjects)?;
        out.layout = self.layout.clone();
        if let Some(t) = &self.true_classes {
            out.true_classes = Some(indices.iter().map(|&i| t[i].clone()).collect());
        }
        Ok(out)
    }

    /// Concatenates two datasets with identical dimensions.
    pub fn concat(&self, other: &Dataset) -> Result<Self> {
        if self.dims != other.dims {
            return Err(JlcmError::Dimension("cannot concatenate datasets".into()));
        }
        let subjects = self.subjects.iter().chain(&other.subjects).cloned().collect();
        let mut out = Dataset::new(subjects)?;
        out.layout = self.layout.clone();
        Ok(out)
    }
}
