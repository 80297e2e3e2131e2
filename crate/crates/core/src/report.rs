//! Row types and CSV / JSON serialization for experiment output.

use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::analysis::{convergence_alpha_threshold, ddm_alpha_threshold, max_users_convergence, max_users_ddm};
use crate::error::{Error, Result};
use crate::montecarlo::{ConvergenceRow, DdmRow, SirCurvePoint};

/// A decibel value. Non-finite values are written as `inf`, `-inf` or `nan`
/// so that CSV and JSON round-trip them.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Db(pub f64);

impl Serialize for Db {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else if self.0.is_nan() {
            s.serialize_str("nan")
        } else if self.0 > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

struct DbVisitor;

impl Visitor<'_> for DbVisitor {
    type Value = Db;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a number or one of inf, -inf, nan")
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Db, E> {
        Ok(Db(v))
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Db, E> {
        Ok(Db(v as f64))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Db, E> {
        Ok(Db(v as f64))
    }

    fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Db, E> {
        v.trim().parse::<f64>().map(Db).map_err(E::custom)
    }
}

impl<'de> Deserialize<'de> for Db {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Db, D::Error> {
        d.deserialize_any(DbVisitor)
    }
}

/// Both antenna-to-user thresholds for one array size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    #[serde(rename = "M")]
    pub antennas: usize,
    pub convergence_alpha: f64,
    pub ddm_alpha: f64,
    pub max_k_convergence: usize,
    pub max_k_ddm: usize,
}

impl ThresholdRow {
    pub fn for_antennas(antennas: usize) -> Result<Self> {
        Ok(Self {
            antennas,
            convergence_alpha: convergence_alpha_threshold(),
            ddm_alpha: ddm_alpha_threshold(antennas)?,
            max_k_convergence: max_users_convergence(antennas)?,
            max_k_ddm: max_users_ddm(antennas)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Convergence,
    Ddm,
    Sir,
    Thresholds,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Rows {
    Convergence(Vec<ConvergenceRow>),
    Ddm(Vec<DdmRow>),
    Sir(Vec<SirCurvePoint>),
    Thresholds(Vec<ThresholdRow>),
}

fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

fn write_rows<T: Serialize>(rows: &[T], header: &[&str]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(!rows.is_empty())
        .from_writer(Vec::new());
    if rows.is_empty() {
        w.write_record(header)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Serialization(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Serialization(e.to_string()))
}

fn read_rows<T: for<'de> Deserialize<'de>>(text: &str) -> Result<Vec<T>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

impl Rows {
    pub fn kind(&self) -> RowKind {
        match self {
            Rows::Convergence(_) => RowKind::Convergence,
            Rows::Ddm(_) => RowKind::Ddm,
            Rows::Sir(_) => RowKind::Sir,
            Rows::Thresholds(_) => RowKind::Thresholds,
        }
    }

    pub fn empty(kind: RowKind) -> Self {
        match kind {
            RowKind::Convergence => Rows::Convergence(Vec::new()),
            RowKind::Ddm => Rows::Ddm(Vec::new()),
            RowKind::Sir => Rows::Sir(Vec::new()),
            RowKind::Thresholds => Rows::Thresholds(Vec::new()),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Rows::Convergence(r) => r.len(),
            Rows::Ddm(r) => r.len(),
            Rows::Sir(r) => r.len(),
            Rows::Thresholds(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Appends rows of the same kind.
    pub fn extend(&mut self, other: Rows) -> Result<()> {
        match (self, other) {
            (Rows::Convergence(a), Rows::Convergence(b)) => a.extend(b),
            (Rows::Ddm(a), Rows::Ddm(b)) => a.extend(b),
            (Rows::Sir(a), Rows::Sir(b)) => a.extend(b),
            (Rows::Thresholds(a), Rows::Thresholds(b)) => a.extend(b),
            (a, b) => {
                return Err(Error::Parameter(format!(
                    "cannot merge {:?} rows into {:?} rows",
                    b.kind(),
                    a.kind()
                )))
            }
        }
        Ok(())
    }

    /// Probabilities and their intervals rounded to three decimals.
    pub fn rounded_probabilities(&self) -> Rows {
        let mut out = self.clone();
        match &mut out {
            Rows::Convergence(rows) => {
                for r in rows {
                    for v in [
                        &mut r.exact_p,
                        &mut r.exact_ci_low,
                        &mut r.exact_ci_high,
                        &mut r.approx_p,
                        &mut r.approx_ci_low,
                        &mut r.approx_ci_high,
                    ] {
                        *v = round3(*v);
                    }
                }
            }
            Rows::Ddm(rows) => {
                for r in rows {
                    for v in [
                        &mut r.strict_p,
                        &mut r.strict_ci_low,
                        &mut r.strict_ci_high,
                        &mut r.delta_p,
                        &mut r.delta_ci_low,
                        &mut r.delta_ci_high,
                    ] {
                        *v = round3(*v);
                    }
                }
            }
            Rows::Sir(_) | Rows::Thresholds(_) => {}
        }
        out
    }

    pub fn to_csv(&self) -> Result<String> {
        match self {
            Rows::Convergence(r) => write_rows(
                r,
                &[
                    "M",
                    "K",
                    "trials",
                    "exact_successes",
                    "exact_p",
                    "exact_ci_low",
                    "exact_ci_high",
                    "approx_successes",
                    "approx_p",
                    "approx_ci_low",
                    "approx_ci_high",
                    "agreement",
                    "seed",
                ],
            ),
            Rows::Ddm(r) => write_rows(
                r,
                &[
                    "M",
                    "K",
                    "trials",
                    "strict_successes",
                    "strict_p",
                    "strict_ci_low",
                    "strict_ci_high",
                    "delta_successes",
                    "delta_p",
                    "delta_ci_low",
                    "delta_ci_high",
                    "mean_max_delta",
                    "seed",
                ],
            ),
            Rows::Sir(r) => write_rows(
                r,
                &[
                    "M",
                    "K",
                    "N",
                    "sir_exact_db",
                    "sir_estimated_db",
                    "sir_lower_bound_db",
                    "trials",
                    "seed",
                ],
            ),
            Rows::Thresholds(r) => write_rows(
                r,
                &["M", "convergence_alpha", "ddm_alpha", "max_k_convergence", "max_k_ddm"],
            ),
        }
    }

    pub fn from_csv(kind: RowKind, text: &str) -> Result<Rows> {
        Ok(match kind {
            RowKind::Convergence => Rows::Convergence(read_rows(text)?),
            RowKind::Ddm => Rows::Ddm(read_rows(text)?),
            RowKind::Sir => Rows::Sir(read_rows(text)?),
            RowKind::Thresholds => Rows::Thresholds(read_rows(text)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialCount {
    #[serde(rename = "M")]
    pub antennas: usize,
    #[serde(rename = "K")]
    pub users: usize,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub version: String,
    pub seed: u64,
    pub wall_time_s: f64,
    pub configurations: Vec<TrialCount>,
}

/// What a command was asked to compute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSpec {
    pub command: String,
    #[serde(rename = "M")]
    pub antennas: Vec<usize>,
    #[serde(rename = "K")]
    pub users: Vec<usize>,
    #[serde(rename = "N")]
    pub terms: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub spec: ReportSpec,
    pub rows: Rows,
    pub meta: ReportMeta,
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
