//! Column mapping and CSV ingestion for long-format longitudinal data.
//!
//! The input has one row per longitudinal measurement. Survival fields
//! (follow-up time, event indicator) repeat on every row of a subject; hazard
//! and covariance covariates are read from the subject's earliest row.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{CovarianceDesign, Dataset, DesignLayout, Observation, Subject, SurvivalOutcome, Term};
use crate::error::{JlcmError, Result};

/// Maps logical roles to CSV columns.
///
/// Covariate lists may contain `"1"` (or `"intercept"`) for a constant term;
/// naming the `obstime` column inside a covariate list inserts the visit time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaConfig {
    pub id: String,
    pub time: String,
    pub event: String,
    pub response: String,
    pub obstime: String,
    #[serde(default = "intercept")]
    pub membership: Vec<String>,
    pub fixed: Vec<String>,
    #[serde(default = "intercept_and_time")]
    pub random: Vec<String>,
    #[serde(default)]
    pub hazard: Vec<String>,
    /// Covariates of the autoregressive coefficients.
    #[serde(default = "intercept")]
    pub covariance: Vec<String>,
    /// Covariates of the log innovation variances; defaults to `covariance`.
    #[serde(default)]
    pub covariance_b: Option<Vec<String>>,
    /// Two-level factors: level names in code order (first is 0, second is 1).
    #[serde(default)]
    pub factors: BTreeMap<String, Vec<String>>,
}

fn intercept() -> Vec<String> {
    vec!["1".into()]
}

fn intercept_and_time() -> Vec<String> {
    vec!["1".into(), "obstime".into()]
}

fn strings(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

impl SchemaConfig {
    /// Layout of the AIDS clinical-trial data (`patient`, `Time`, `death`,
    /// `CD4`, `obstime`, `drug`, `gender`, `prevOI`, `AZT`).
    pub fn aids() -> Self {
        let factors = [
            ("gender", ["female", "male"]),
            ("prevOI", ["noAIDS", "AIDS"]),
            ("AZT", ["intolerance", "failure"]),
            ("drug", ["ddC", "ddI"]),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), strings(&v)))
        .collect();
        Self {
            id: "patient".into(),
            time: "Time".into(),
            event: "death".into(),
            response: "CD4".into(),
            obstime: "obstime".into(),
            membership: strings(&["1", "obstime"]),
            fixed: strings(&["1", "obstime", "gender", "prevOI", "AZT"]),
            random: strings(&["1", "obstime"]),
            hazard: strings(&["gender", "prevOI", "AZT", "drug"]),
            covariance: strings(&["drug", "AZT"]),
            covariance_b: None,
            factors,
        }
    }

    /// Layout written by the simulator.
    pub fn simulation() -> Self {
        Self {
            id: "subject".into(),
            time: "Time".into(),
            event: "event".into(),
            response: "y".into(),
            obstime: "obstime".into(),
            membership: strings(&["x1", "obstime"]),
            fixed: strings(&["x1", "obstime"]),
            random: strings(&["1", "obstime"]),
            hazard: strings(&["x3"]),
            covariance: strings(&["1", "x3"]),
            covariance_b: None,
            factors: BTreeMap::new(),
        }
    }

    pub fn covariance_b(&self) -> &[String] {
        self.covariance_b.as_deref().unwrap_or(&self.covariance)
    }

    /// Switches both covariance designs to an intercept.
    pub fn intercept_only_covariance(mut self) -> Self {
        self.covariance = intercept();
        self.covariance_b = None;
        self
    }

    fn term(&self, name: &str) -> Term {
        if name == "1" || name.eq_ignore_ascii_case("intercept") {
            Term::Intercept
        } else if name == self.obstime {
            Term::Time
        } else {
            Term::Column(name.to_string())
        }
    }

    fn terms(&self, names: &[String]) -> Vec<Term> {
        names.iter().map(|n| self.term(n)).collect()
    }

    pub fn layout(&self) -> DesignLayout {
        DesignLayout {
            membership: self.terms(&self.membership),
            fixed: self.terms(&self.fixed),
            random: self.terms(&self.random),
        }
    }

    /// Covariate columns in output order, without duplicates.
    fn covariate_columns(&self) -> Vec<String> {
        let mut seen = Vec::<String>::new();
        let lists = [
            &self.membership,
            &self.fixed,
            &self.random,
            &self.hazard,
            &self.covariance,
            &self.covariance_b().to_vec(),
        ];
        for list in lists {
            for name in list.iter() {
                if matches!(self.term(name), Term::Column(_)) && !seen.contains(name) {
                    seen.push(name.clone());
                }
            }
        }
        seen
    }

    fn check_factors(&self) -> Result<()> {
        for (name, levels) in &self.factors {
            if levels.len() != 2 || levels[0] == levels[1] {
                return Err(JlcmError::Config(format!(
                    "factor `{name}` must declare exactly two distinct levels"
                )));
            }
        }
        Ok(())
    }
}

struct Columns {
    index: HashMap<String, usize>,
}

impl Columns {
    fn get(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| JlcmError::MissingColumn(name.to_string()))
    }
}

struct Row {
    obstime: f64,
    response: f64,
    x1: Vec<f64>,
    x2: Vec<f64>,
    z: Vec<f64>,
    followup: f64,
    event: f64,
    x3: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
}

struct Parser<'a> {
    schema: &'a SchemaConfig,
    cols: Columns,
}

impl Parser<'_> {
    fn cell(&self, rec: &csv::StringRecord, subject: &str, column: &str) -> Result<f64> {
        let raw = rec.get(self.cols.get(column)?).unwrap_or("").trim();
        if let Some(levels) = self.schema.factors.get(column) {
            return levels
                .iter()
                .position(|l| l == raw)
                .map(|p| p as f64)
                .ok_or_else(|| JlcmError::UnknownLevel {
                    subject: subject.to_string(),
                    column: column.to_string(),
                    level: raw.to_string(),
                });
        }
        raw.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| JlcmError::NonNumeric {
                subject: subject.to_string(),
                column: column.to_string(),
                value: raw.to_string(),
            })
    }

    fn design(&self, rec: &csv::StringRecord, subject: &str, names: &[String], obstime: f64) -> Result<Vec<f64>> {
        names
            .iter()
            .map(|n| match self.schema.term(n) {
                Term::Intercept => Ok(1.0),
                Term::Time => Ok(obstime),
                Term::Column(c) => self.cell(rec, subject, &c),
            })
            .collect()
    }

    fn row(&self, rec: &csv::StringRecord, subject: &str) -> Result<Row> {
        let s = self.schema;
        let obstime = self.cell(rec, subject, &s.obstime)?;
        Ok(Row {
            obstime,
            response: self.cell(rec, subject, &s.response)?,
            x1: self.design(rec, subject, &s.membership, obstime)?,
            x2: self.design(rec, subject, &s.fixed, obstime)?,
            z: self.design(rec, subject, &s.random, obstime)?,
            followup: self.cell(rec, subject, &s.time)?,
            event: self.cell(rec, subject, &s.event)?,
            x3: self.design(rec, subject, &s.hazard, obstime)?,
            a: self.design(rec, subject, &s.covariance, obstime)?,
            b: self.design(rec, subject, s.covariance_b(), obstime)?,
        })
    }
}

fn build_subject(id: String, mut rows: Vec<Row>) -> Result<Subject> {
    rows.sort_by(|a, b| a.obstime.total_cmp(&b.obstime));
    let first = rows.first().ok_or_else(|| JlcmError::EmptySubject(id.clone()))?;
    let (followup, event) = (first.followup, first.event);
    if rows.iter().any(|r| r.followup != followup || r.event != event) {
        return Err(JlcmError::InvalidSurvival {
            subject: id,
            reason: "follow-up time or event indicator differs across rows".into(),
        });
    }
    if event != 0.0 && event != 1.0 {
        return Err(JlcmError::InvalidSurvival {
            subject: id,
            reason: format!("event indicator {event} is not 0 or 1"),
        });
    }
    let survival = SurvivalOutcome {
        time: followup,
        event: event == 1.0,
        x3: first.x3.clone(),
    };
    let design = CovarianceDesign {
        a: first.a.clone(),
        b: first.b.clone(),
    };
    let observations = rows
        .into_iter()
        .enumerate()
        .map(|(j, r)| Observation {
            visit: j + 1,
            time: r.obstime,
            response: r.response,
            x1: r.x1,
            x2: r.x2,
            z: r.z,
        })
        .collect();
    Ok(Subject {
        id,
        observations,
        survival,
        design,
    })
}

/// Reads a long-format CSV into a [`Dataset`].
pub fn load_dataset_from_reader<R: Read>(reader: R, schema: &SchemaConfig) -> Result<Dataset> {
    schema.check_factors()?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let cols = Columns {
        index: headers.iter().enumerate().map(|(i, h)| (h.to_string(), i)).collect(),
    };
    for name in [&schema.id, &schema.time, &schema.event, &schema.response, &schema.obstime] {
        cols.get(name)?;
    }
    for name in schema.covariate_columns() {
        cols.get(&name)?;
    }
    let id_col = cols.get(&schema.id)?;
    let parser = Parser { schema, cols };

    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, Vec<Row>> = HashMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let id = rec.get(id_col).unwrap_or("").to_string();
        let row = parser.row(&rec, &id)?;
        groups
            .entry(id.clone())
            .or_insert_with(|| {
                order.push(id.clone());
                Vec::new()
            })
            .push(row);
    }
    let subjects = order
        .into_iter()
        .map(|id| {
            let rows = groups.remove(&id).unwrap_or_default();
            build_subject(id, rows)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset::new(subjects)?.with_layout(schema.layout()))
}

pub fn load_dataset(path: impl AsRef<Path>, schema: &SchemaConfig) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    load_dataset_from_reader(std::io::BufReader::new(file), schema)
}

/// Where a covariate column's value lives inside a subject.
enum Source {
    X1(usize),
    X2(usize),
    Z(usize),
    X3(usize),
    A(usize),
    B(usize),
}

fn locate(schema: &SchemaConfig, column: &str) -> Option<Source> {
    let pos = |list: &[String]| list.iter().position(|n| n == column);
    pos(&schema.membership)
        .map(Source::X1)
        .or_else(|| pos(&schema.fixed).map(Source::X2))
        .or_else(|| pos(&schema.random).map(Source::Z))
        .or_else(|| pos(&schema.hazard).map(Source::X3))
        .or_else(|| pos(&schema.covariance).map(Source::A))
        .or_else(|| pos(schema.covariance_b()).map(Source::B))
}

fn format_value(schema: &SchemaConfig, column: &str, v: f64) -> String {
    match schema.factors.get(column) {
        Some(levels) => levels.get(v as usize).cloned().unwrap_or_else(|| v.to_string()),
        None => v.to_string(),
    }
}

/// Writes `data` in the long format [`load_dataset`] reads.
pub fn write_dataset<W: Write>(data: &Dataset, schema: &SchemaConfig, writer: W) -> Result<()> {
    let covariates = schema.covariate_columns();
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec![
        schema.id.clone(),
        schema.time.clone(),
        schema.event.clone(),
        schema.response.clone(),
        schema.obstime.clone(),
    ];
    header.extend(covariates.iter().cloned());
    wtr.write_record(&header)?;
    let sources: Vec<_> = covariates
        .iter()
        .map(|c| locate(schema, c).ok_or_else(|| JlcmError::MissingColumn(c.clone())))
        .collect::<Result<_>>()?;
    for s in data.subjects() {
        for o in &s.observations {
            let event = if s.survival.event { 1.0 } else { 0.0 };
            let mut rec = vec![
                s.id.clone(),
                format_value(schema, &schema.time, s.survival.time),
                format_value(schema, &schema.event, event),
                format_value(schema, &schema.response, o.response),
                format_value(schema, &schema.obstime, o.time),
            ];
            for (col, src) in covariates.iter().zip(&sources) {
                let v = match *src {
                    Source::X1(p) => o.x1[p],
                    Source::X2(p) => o.x2[p],
                    Source::Z(p) => o.z[p],
                    Source::X3(p) => s.survival.x3[p],
                    Source::A(p) => s.design.a[p],
                    Source::B(p) => s.design.b[p],
                };
                rec.push(format_value(schema, col, v));
            }
            wtr.write_record(&rec)?;
        }
    }
    wtr.flush()?;
    Ok(())
}
