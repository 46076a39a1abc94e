//! Model parameters and latent state.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Dims};
use crate::error::{JlcmError, Result};

/// Parameters specific to one latent class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassParams {
    /// Membership coefficients on `x1`.
    pub xi: Vec<f64>,
    /// Fixed effects on `x2`.
    pub beta: Vec<f64>,
    /// Hazard coefficients on `x3`.
    pub omega: Vec<f64>,
    /// Gompertz shape.
    pub gamma: f64,
    /// Residual variance of the longitudinal response.
    pub tau: f64,
    /// Gompertz baseline scale.
    pub lambda0: f64,
}

impl ClassParams {
    pub fn zeros(dims: &Dims) -> Self {
        Self {
            xi: vec![0.0; dims.x1],
            beta: vec![0.0; dims.x2],
            omega: vec![0.0; dims.x3],
            gamma: 0.0,
            tau: 1.0,
            lambda0: 1.0,
        }
    }
}

/// Full parameter vector: one [`ClassParams`] per class plus the shared
/// covariance-regression coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSet {
    pub classes: Vec<ClassParams>,
    /// Coefficients of the generalized autoregressive parameters.
    pub alpha1: Vec<f64>,
    /// Coefficients of the log innovation variances.
    pub alpha2: Vec<f64>,
}

/// Parameter groups, in the order used for flattening and output files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ParamGroup {
    Xi,
    Beta,
    Omega,
    Gamma,
    Tau,
    Lambda0,
    Alpha1,
    Alpha2,
}

impl ParamGroup {
    pub const ALL: [ParamGroup; 8] = [
        ParamGroup::Xi,
        ParamGroup::Beta,
        ParamGroup::Omega,
        ParamGroup::Gamma,
        ParamGroup::Tau,
        ParamGroup::Lambda0,
        ParamGroup::Alpha1,
        ParamGroup::Alpha2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParamGroup::Xi => "xi",
            ParamGroup::Beta => "beta",
            ParamGroup::Omega => "omega",
            ParamGroup::Gamma => "gamma",
            ParamGroup::Tau => "tau",
            ParamGroup::Lambda0 => "lambda0",
            ParamGroup::Alpha1 => "alpha1",
            ParamGroup::Alpha2 => "alpha2",
        }
    }

    pub fn is_class_specific(self) -> bool {
        !matches!(self, ParamGroup::Alpha1 | ParamGroup::Alpha2)
    }
}

/// One scalar of a flattened [`ParameterSet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamEntry {
    pub group: ParamGroup,
    /// 0-based class, `None` for shared parameters.
    pub class: Option<usize>,
    /// 0-based position inside the vector (0 for scalars).
    pub index: usize,
    pub value: f64,
}

impl ParamEntry {
    /// Column label with 1-based indices, e.g. `beta_2_1` or `alpha1_2`.
    pub fn label(&self) -> String {
        match (self.group, self.class) {
            (ParamGroup::Gamma | ParamGroup::Tau | ParamGroup::Lambda0, Some(k)) => {
                format!("{}_{}", self.group.name(), k + 1)
            }
            (_, Some(k)) => format!("{}_{}_{}", self.group.name(), k + 1, self.index + 1),
            (_, None) => format!("{}_{}", self.group.name(), self.index + 1),
        }
    }
}

impl ParameterSet {
    /// All-zero coefficients with unit variances and scales.
    pub fn zeros(k: usize, dims: &Dims) -> Self {
        Self {
            classes: vec![ClassParams::zeros(dims); k],
            alpha1: vec![0.0; dims.a],
            alpha2: vec![0.0; dims.b],
        }
    }

    pub fn k(&self) -> usize {
        self.classes.len()
    }

    pub fn xis(&self) -> impl Iterator<Item = &[f64]> + Clone {
        self.classes.iter().map(|c| c.xi.as_slice())
    }

    /// Flattens into labelled scalars, grouped in [`ParamGroup::ALL`] order.
    pub fn entries(&self) -> Vec<ParamEntry> {
        let mut out = Vec::new();
        for group in ParamGroup::ALL {
            self.push_group(group, &mut out);
        }
        out
    }

    pub fn group_entries(&self, group: ParamGroup) -> Vec<ParamEntry> {
        let mut out = Vec::new();
        self.push_group(group, &mut out);
        out
    }

    fn push_group(&self, group: ParamGroup, out: &mut Vec<ParamEntry>) {
        let mut push = |class, index, value| {
            out.push(ParamEntry {
                group,
                class,
                index,
                value,
            })
        };
        match group {
            ParamGroup::Alpha1 => self.alpha1.iter().enumerate().for_each(|(p, &v)| push(None, p, v)),
            ParamGroup::Alpha2 => self.alpha2.iter().enumerate().for_each(|(p, &v)| push(None, p, v)),
            _ => {
                for (k, c) in self.classes.iter().enumerate() {
                    match group {
                        ParamGroup::Xi => c.xi.iter().enumerate().for_each(|(p, &v)| push(Some(k), p, v)),
                        ParamGroup::Beta => c.beta.iter().enumerate().for_each(|(p, &v)| push(Some(k), p, v)),
                        ParamGroup::Omega => c.omega.iter().enumerate().for_each(|(p, &v)| push(Some(k), p, v)),
                        ParamGroup::Gamma => push(Some(k), 0, c.gamma),
                        ParamGroup::Tau => push(Some(k), 0, c.tau),
                        ParamGroup::Lambda0 => push(Some(k), 0, c.lambda0),
                        ParamGroup::Alpha1 | ParamGroup::Alpha2 => unreachable!(),
                    }
                }
            }
        }
    }

    /// Writes `value` into the slot described by `(group, class, index)`.
    pub fn set(&mut self, group: ParamGroup, class: Option<usize>, index: usize, value: f64) -> Result<()> {
        let bad = || JlcmError::Dimension(format!("no parameter slot {}[{class:?}][{index}]", group.name()));
        let slot = match (group, class) {
            (ParamGroup::Alpha1, None) => self.alpha1.get_mut(index),
            (ParamGroup::Alpha2, None) => self.alpha2.get_mut(index),
            (g, Some(k)) if g.is_class_specific() => {
                let c = self.classes.get_mut(k).ok_or_else(bad)?;
                match g {
                    ParamGroup::Xi => c.xi.get_mut(index),
                    ParamGroup::Beta => c.beta.get_mut(index),
                    ParamGroup::Omega => c.omega.get_mut(index),
                    ParamGroup::Gamma if index == 0 => Some(&mut c.gamma),
                    ParamGroup::Tau if index == 0 => Some(&mut c.tau),
                    ParamGroup::Lambda0 if index == 0 => Some(&mut c.lambda0),
                    _ => None,
                }
            }
            _ => None,
        };
        *slot.ok_or_else(bad)? = value;
        Ok(())
    }

    /// Element-wise mean of several parameter sets of identical shape.
    pub fn mean_of<'a>(sets: impl IntoIterator<Item = &'a ParameterSet>) -> Option<ParameterSet> {
        let mut iter = sets.into_iter();
        let first = iter.next()?;
        let mut sum = first.entries();
        let mut n = 1.0;
        for s in iter {
            for (acc, e) in sum.iter_mut().zip(s.entries()) {
                acc.value += e.value;
            }
            n += 1.0;
        }
        let mut out = first.clone();
        for e in sum {
            out.set(e.group, e.class, e.index, e.value / n).ok()?;
        }
        Some(out)
    }

    /// Applies a class permutation: class `k` of the result is class
    /// `order[k]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> ParameterSet {
        ParameterSet {
            classes: order.iter().map(|&k| self.classes[k].clone()).collect(),
            alpha1: self.alpha1.clone(),
            alpha2: self.alpha2.clone(),
        }
    }
}

/// Latent quantities: per-visit class labels `R` (0-based) and per-subject
/// random effects `W = (U, υ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentState {
    pub labels: Vec<Vec<usize>>,
    pub effects: Vec<Vec<f64>>,
}

impl LatentState {
    /// Every visit in class 0 and zero random effects.
    pub fn zeros(data: &Dataset) -> Self {
        Self {
            labels: data.subjects().iter().map(|s| vec![0; s.visits()]).collect(),
            effects: vec![vec![0.0; data.dims().effects()]; data.len()],
        }
    }

    /// Relabels classes so that old class `order[k]` becomes class `k`.
    pub fn permuted(&self, order: &[usize]) -> LatentState {
        let mut inverse = vec![0; order.len()];
        for (new, &old) in order.iter().enumerate() {
            inverse[old] = new;
        }
        LatentState {
            labels: self
                .labels
                .iter()
                .map(|row| row.iter().map(|&l| inverse[l]).collect())
                .collect(),
            effects: self.effects.clone(),
        }
    }
}

/// Checks parameters, data and their agreement, collecting every violation.
pub fn validate(params: &ParameterSet, data: &Dataset) -> std::result::Result<(), Vec<JlcmError>> {
    let dims = data.dims();
    let mut errors = Vec::new();
    if params.k() == 0 {
        errors.push(JlcmError::InvalidParameter("class count must be at least 1".into()));
    }
    let mut dim = |what: &str, k: Option<usize>, got: usize, want: usize| {
        if got != want {
            let who = k.map_or(String::new(), |k| format!(" of class {}", k + 1));
            errors.push(JlcmError::Dimension(format!(
                "{what}{who} has length {got}, design has {want}"
            )));
        }
    };
    for (k, c) in params.classes.iter().enumerate() {
        dim("xi", Some(k), c.xi.len(), dims.x1);
        dim("beta", Some(k), c.beta.len(), dims.x2);
        dim("omega", Some(k), c.omega.len(), dims.x3);
    }
    dim("alpha1", None, params.alpha1.len(), dims.a);
    dim("alpha2", None, params.alpha2.len(), dims.b);
    for (k, c) in params.classes.iter().enumerate() {
        if !(c.tau > 0.0) {
            errors.push(JlcmError::NonpositiveVariance(format!("tau_{} = {}", k + 1, c.tau)));
        }
        if !(c.lambda0 > 0.0) {
            errors.push(JlcmError::NonpositiveHazard(format!("lambda0_{} = {}", k + 1, c.lambda0)));
        }
    }
    if params.entries().iter().any(|e| !e.value.is_finite()) {
        errors.push(JlcmError::InvalidParameter("non-finite parameter value".into()));
    }
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}

/// Checks that a latent state fits the dataset and class count.
pub fn validate_state(state: &LatentState, data: &Dataset, k: usize) -> Result<()> {
    let q1 = data.dims().effects();
    if state.labels.len() != data.len() || state.effects.len() != data.len() {
        return Err(JlcmError::Dimension("latent state does not match subject count".into()));
    }
    for ((labels, w), s) in state.labels.iter().zip(&state.effects).zip(data.subjects()) {
        if labels.len() != s.visits() || w.len() != q1 {
            return Err(JlcmError::Dimension(format!("latent state of subject {} has wrong shape", s.id)));
        }
        if labels.iter().any(|&l| l >= k) {
            return Err(JlcmError::InvalidParameter(format!("label out of range for subject {}", s.id)));
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(JlcmError::NonFinite {
                subject: s.id.clone(),
                field: "random effects".into(),
            });
        }
    }
    Ok(())
}
