//! Trial ingestion and cleaning: CSV parsing with per-row validation, robust
//! outlier rejection on raw task times, per-subject z-score normalization,
//! and scalar performance scoring.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::affordance::Affordance;
use crate::error::{Error, Result};
use crate::geometry::ViewpointSet;
use crate::stats::{mean, sample_std};

/// Exact header a trial CSV must carry.
pub const TRIAL_HEADER: [&str; 6] = [
    "subject",
    "robot",
    "affordance",
    "viewpoint",
    "time_s",
    "errors",
];

/// Deviation threshold for outlier rejection, in robust standard deviations.
pub const DEFAULT_MAD_THRESHOLD: f64 = 3.0;

/// Scale factor that makes the median absolute deviation a consistent
/// estimator of the standard deviation under normality.
pub const DEFAULT_MAD_SCALE: f64 = 1.4826;

/// One completed teleoperation trial. `row` is the 1-based source line for
/// error reporting, 0 for records not read from a file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    #[serde(skip, default)]
    pub row: u64,
    pub subject: u32,
    pub robot: String,
    pub affordance: Affordance,
    pub viewpoint: u32,
    pub time_s: f64,
    pub errors: u32,
}

/// Validated trial records in canonical (subject, affordance, viewpoint)
/// order. At most one record exists per such key.
#[derive(Debug, Clone)]
pub struct TrialSet {
    records: Vec<TrialRecord>,
}

impl TrialSet {
    /// Validates and canonically orders `records`. Duplicate
    /// (subject, affordance, viewpoint) keys, nonpositive times, and empty
    /// inputs are rejected.
    pub fn from_records(records: Vec<TrialRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyTrials);
        }
        let mut seen: BTreeMap<(u32, Affordance, u32), u64> = BTreeMap::new();
        for r in &records {
            validate_record(r)?;
            let key = (r.subject, r.affordance, r.viewpoint);
            if let Some(first) = seen.insert(key, r.row) {
                return Err(Error::InvalidTrial {
                    row: r.row,
                    reason: format!(
                        "duplicate trial for subject {}, {}, viewpoint {} (first at row {first})",
                        r.subject, r.affordance, r.viewpoint
                    ),
                });
            }
        }
        Ok(Self::from_valid(records))
    }

    fn from_valid(mut records: Vec<TrialRecord>) -> Self {
        records.sort_by(|a, b| {
            (a.subject, a.affordance, a.viewpoint).cmp(&(b.subject, b.affordance, b.viewpoint))
        });
        TrialSet { records }
    }

    /// Parses a trial CSV, checking the header and every field, and verifying
    /// viewpoint ids against `vs`. Errors name the offending 1-based row.
    pub fn from_csv_reader<R: Read>(reader: R, vs: &ViewpointSet) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(reader);
        {
            let headers = rdr.headers()?;
            let got: Vec<&str> = headers.iter().map(str::trim).collect();
            if got != TRIAL_HEADER {
                return Err(Error::BadTrialHeader {
                    expected: TRIAL_HEADER.join(","),
                    got: got.join(","),
                });
            }
        }
        let mut records = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let row = rec.position().map_or(0, |p| p.line());
            records.push(parse_row(&rec, row, vs)?);
        }
        if records.is_empty() {
            return Err(Error::EmptyTrials);
        }
        TrialSet::from_records(records)
    }

    pub fn from_csv_path(path: &Path, vs: &ViewpointSet) -> Result<Self> {
        let file =
            std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_csv_reader(std::io::BufReader::new(file), vs)
    }

    /// Writes the canonical CSV representation, including the header.
    pub fn to_csv_writer<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(TRIAL_HEADER)?;
        for r in &self.records {
            wtr.write_record(&[
                r.subject.to_string(),
                r.robot.clone(),
                r.affordance.to_string(),
                r.viewpoint.to_string(),
                r.time_s.to_string(),
                r.errors.to_string(),
            ])?;
        }
        wtr.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn records(&self) -> &[TrialRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn subjects(&self) -> Vec<u32> {
        let mut s: Vec<u32> = self.records.iter().map(|r| r.subject).collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    /// Rejects trials whose raw time deviates from its (affordance,
    /// viewpoint) group median by more than `threshold * scale * MAD`, where
    /// MAD is the median absolute deviation of the full group. One pass:
    /// medians are computed once on the unfiltered group, and groups of two
    /// or fewer records are never touched.
    pub fn reject_outliers(&self, threshold: f64, scale: f64) -> (TrialSet, Vec<RejectedTrial>) {
        let mut groups: BTreeMap<(Affordance, u32), Vec<usize>> = BTreeMap::new();
        for (i, r) in self.records.iter().enumerate() {
            groups
                .entry((r.affordance, r.viewpoint))
                .or_default()
                .push(i);
        }
        let mut rejected_idx = vec![false; self.records.len()];
        let mut rejected = Vec::new();
        for ((affordance, viewpoint), idx) in &groups {
            if idx.len() <= 2 {
                continue;
            }
            let times: Vec<f64> = idx.iter().map(|&i| self.records[i].time_s).collect();
            let med = median(&times);
            let deviations: Vec<f64> = times.iter().map(|t| (t - med).abs()).collect();
            let mad = median(&deviations);
            let bound = threshold * scale * mad;
            for (&i, &dev) in idx.iter().zip(&deviations) {
                if dev > bound {
                    rejected_idx[i] = true;
                    rejected.push(RejectedTrial {
                        row: self.records[i].row,
                        reason: format!(
                            "time {} deviates from the {affordance}/viewpoint {viewpoint} \
                             median {med} by {dev}, beyond the robust bound",
                            self.records[i].time_s
                        ),
                        bound,
                        value: self.records[i].time_s,
                    });
                }
            }
        }
        let kept: Vec<TrialRecord> = self
            .records
            .iter()
            .enumerate()
            .filter(|(i, _)| !rejected_idx[*i])
            .map(|(_, r)| r.clone())
            .collect();
        rejected.sort_by_key(|r| r.row);
        (TrialSet::from_valid(kept), rejected)
    }
}

/// Record dropped by outlier rejection; `bound` is the deviation limit the
/// raw `value` (task time) exceeded.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RejectedTrial {
    pub row: u64,
    pub reason: String,
    pub bound: f64,
    pub value: f64,
}

fn validate_record(r: &TrialRecord) -> Result<()> {
    if !(r.time_s.is_finite() && r.time_s > 0.0) {
        return Err(Error::InvalidTrial {
            row: r.row,
            reason: format!("time_s must be positive and finite, got {}", r.time_s),
        });
    }
    if r.robot.trim().is_empty() {
        return Err(Error::InvalidTrial {
            row: r.row,
            reason: "robot label is empty".into(),
        });
    }
    Ok(())
}

fn parse_row(rec: &csv::StringRecord, row: u64, vs: &ViewpointSet) -> Result<TrialRecord> {
    let invalid = |reason: String| Error::InvalidTrial { row, reason };
    if rec.len() != TRIAL_HEADER.len() {
        return Err(invalid(format!(
            "expected {} fields, got {}",
            TRIAL_HEADER.len(),
            rec.len()
        )));
    }
    let field = |i: usize| rec.get(i).unwrap_or("").trim();
    let subject: u32 = field(0).parse().map_err(|_| {
        invalid(format!(
            "subject `{}` is not a nonnegative integer",
            field(0)
        ))
    })?;
    let robot = field(1).to_string();
    let affordance = Affordance::from_str(field(2)).map_err(invalid)?;
    let viewpoint: u32 = field(3).parse().map_err(|_| {
        invalid(format!(
            "viewpoint `{}` is not a nonnegative integer",
            field(3)
        ))
    })?;
    if !vs.contains(viewpoint) {
        return Err(invalid(format!(
            "viewpoint {viewpoint} is not in the viewpoint set"
        )));
    }
    let time_s: f64 = field(4)
        .parse()
        .map_err(|_| invalid(format!("time_s `{}` is not a number", field(4))))?;
    let errors: i64 = field(5)
        .parse()
        .map_err(|_| invalid(format!("errors `{}` is not an integer", field(5))))?;
    if errors < 0 {
        return Err(invalid(format!("errors must be nonnegative, got {errors}")));
    }
    let record = TrialRecord {
        row,
        subject,
        robot,
        affordance,
        viewpoint,
        time_s,
        errors: errors as u32,
    };
    validate_record(&record)?;
    Ok(record)
}

fn median(xs: &[f64]) -> f64 {
    debug_assert!(!xs.is_empty());
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("times are finite"));
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Trial with per-subject z-scores attached.
#[derive(Debug, Clone, Serialize)]
pub struct NormalizedTrial {
    pub subject: u32,
    pub robot: String,
    pub affordance: Affordance,
    pub viewpoint: u32,
    pub time_s: f64,
    pub errors: u32,
    pub norm_time: f64,
    pub norm_errors: f64,
}

/// Trials with per-subject normalization applied, in canonical order.
#[derive(Debug, Clone)]
pub struct NormalizedTrialSet {
    records: Vec<NormalizedTrial>,
}

impl NormalizedTrialSet {
    pub fn records(&self) -> &[NormalizedTrial] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Z-scores each subject's times and error counts against that subject's own
/// mean and sample standard deviation, removing between-subject skill
/// differences. A subject whose times have zero spread (or only one record)
/// makes time z-scores undefined and is an error; zero spread in error
/// counts maps to zero, since identical error behavior carries no signal.
pub fn normalize_subject_measures(trials: &TrialSet) -> Result<NormalizedTrialSet> {
    let mut by_subject: BTreeMap<u32, Vec<&TrialRecord>> = BTreeMap::new();
    for r in trials.records() {
        by_subject.entry(r.subject).or_default().push(r);
    }
    let mut records = Vec::with_capacity(trials.len());
    for (subject, recs) in &by_subject {
        let times: Vec<f64> = recs.iter().map(|r| r.time_s).collect();
        let errs: Vec<f64> = recs.iter().map(|r| f64::from(r.errors)).collect();
        let (t_mean, t_std) = (mean(&times), sample_std(&times));
        let (e_mean, e_std) = (mean(&errs), sample_std(&errs));
        if t_std == 0.0 {
            return Err(Error::ZeroSubjectSpread {
                subject: *subject,
                measure: "time",
            });
        }
        for r in recs {
            let norm_errors = if e_std == 0.0 {
                0.0
            } else {
                (f64::from(r.errors) - e_mean) / e_std
            };
            records.push(NormalizedTrial {
                subject: r.subject,
                robot: r.robot.clone(),
                affordance: r.affordance,
                viewpoint: r.viewpoint,
                time_s: r.time_s,
                errors: r.errors,
                norm_time: (r.time_s - t_mean) / t_std,
                norm_errors,
            });
        }
    }
    records.sort_by(|a, b| {
        (a.subject, a.affordance, a.viewpoint).cmp(&(b.subject, b.affordance, b.viewpoint))
    });
    Ok(NormalizedTrialSet { records })
}

/// Weighting constants for performance scoring and manifold valuation.
/// `time`/`errors` trade off the two normalized measures; `mean`/`deviation`
/// trade off reward for high average performance against penalty for
/// inconsistency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    #[serde(rename = "w_t")]
    pub time: f64,
    #[serde(rename = "w_e")]
    pub errors: f64,
    #[serde(rename = "w_m")]
    pub mean: f64,
    #[serde(rename = "w_d")]
    pub deviation: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights {
            time: 0.4,
            errors: 0.6,
            mean: 0.9,
            deviation: 0.1,
        }
    }
}

impl Weights {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("w_t", self.time),
            ("w_e", self.errors),
            ("w_m", self.mean),
            ("w_d", self.deviation),
        ];
        for (name, w) in all {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::BadWeights(format!(
                    "{name} must be finite and nonnegative, got {w}"
                )));
            }
        }
        if self.time + self.errors <= 0.0 {
            return Err(Error::BadWeights("w_t + w_e must be positive".into()));
        }
        if self.mean + self.deviation <= 0.0 {
            return Err(Error::BadWeights("w_m + w_d must be positive".into()));
        }
        Ok(())
    }
}

/// One scored trial: higher `performance` is better (faster and cleaner than
/// the subject's own baseline).
#[derive(Debug, Clone, Serialize)]
pub struct PerformanceSample {
    pub subject: u32,
    pub robot: String,
    pub affordance: Affordance,
    pub viewpoint: u32,
    pub norm_time: f64,
    pub norm_errors: f64,
    pub performance: f64,
}

/// Scores every normalized trial as the negated weighted sum of its time and
/// error z-scores.
pub fn score_performance(
    normalized: &NormalizedTrialSet,
    weights: &Weights,
) -> Result<Vec<PerformanceSample>> {
    weights.validate()?;
    Ok(normalized
        .records()
        .iter()
        .map(|r| PerformanceSample {
            subject: r.subject,
            robot: r.robot.clone(),
            affordance: r.affordance,
            viewpoint: r.viewpoint,
            norm_time: r.norm_time,
            norm_errors: r.norm_errors,
            performance: -weights.time * r.norm_time - weights.errors * r.norm_errors,
        })
        .collect())
}
