//! End-to-end orchestration: configuration, the ingest-to-report pipeline,
//! and artifact export. All outputs are canonically ordered so identical
//! inputs yield identical bytes regardless of thread count.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::advisor::{extract_cardinal_rules, DirectionRule};
use crate::affordance::Affordance;
use crate::clustering::{cluster_value_field, ClusteringDetail, ManifoldSet};
use crate::error::{Error, Result};
use crate::geometry::{
    lattice_with_threshold, ViewpointSet, DEFAULT_RADIUS_M, DEFAULT_TOP_THRESHOLD_RAD,
};
use crate::stats::{validate_model, StatsReport};
use crate::trials::{
    normalize_subject_measures, score_performance, PerformanceSample, RejectedTrial, TrialSet,
    Weights, DEFAULT_MAD_SCALE, DEFAULT_MAD_THRESHOLD,
};
use crate::valuation::{make_sample_points, value_field, ViewpointValue};

/// Where the viewpoint set comes from: the built-in hemisphere lattice or a
/// JSON file.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViewpointSource {
    #[default]
    Lattice,
    File(PathBuf),
}

/// Tunable pipeline parameters. Defaults reproduce the reference study
/// setup; see the field docs for the few that are artifacts of this
/// implementation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub weights: Weights,
    pub radius_m: f64,
    pub mad_threshold: f64,
    pub mad_scale: f64,
    pub k_max: usize,
    pub alpha: f64,
    /// Elevation above which a viewpoint belongs to the top group rather
    /// than an azimuthal quadrant.
    pub top_threshold_rad: f64,
    /// Fill unmeasured viewpoints from their cardinal group's mean instead
    /// of failing on incomplete coverage.
    pub impute_missing: bool,
    pub viewpoints: ViewpointSource,
    /// Seed of the generator that produced the trials, when synthetic;
    /// echoed into the report for provenance.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            weights: Weights::default(),
            radius_m: DEFAULT_RADIUS_M,
            mad_threshold: DEFAULT_MAD_THRESHOLD,
            mad_scale: DEFAULT_MAD_SCALE,
            k_max: 10,
            alpha: 0.05,
            top_threshold_rad: DEFAULT_TOP_THRESHOLD_RAD,
            impute_missing: false,
            viewpoints: ViewpointSource::Lattice,
            seed: None,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.weights.validate()?;
        if !(self.radius_m.is_finite() && self.radius_m > 0.0) {
            return Err(Error::BadConfig(format!(
                "radius_m must be positive, got {}",
                self.radius_m
            )));
        }
        if !(self.mad_threshold.is_finite() && self.mad_threshold > 0.0) {
            return Err(Error::BadConfig(format!(
                "mad_threshold must be positive, got {}",
                self.mad_threshold
            )));
        }
        if !(self.mad_scale.is_finite() && self.mad_scale > 0.0) {
            return Err(Error::BadConfig(format!(
                "mad_scale must be positive, got {}",
                self.mad_scale
            )));
        }
        if self.k_max < 2 {
            return Err(Error::BadConfig(format!(
                "k_max must be at least 2, got {}",
                self.k_max
            )));
        }
        if !(self.alpha.is_finite() && 0.0 < self.alpha && self.alpha < 1.0) {
            return Err(Error::BadConfig(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if !(self.top_threshold_rad.is_finite()
            && 0.0 < self.top_threshold_rad
            && self.top_threshold_rad <= std::f64::consts::FRAC_PI_2)
        {
            return Err(Error::BadConfig(format!(
                "top_threshold_rad must lie in (0, pi/2], got {}",
                self.top_threshold_rad
            )));
        }
        Ok(())
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let config: PipelineConfig = serde_json::from_reader(std::io::BufReader::new(file))?;
        config.validate()?;
        Ok(config)
    }

    /// Builds or loads the viewpoint set this config points at.
    pub fn viewpoint_set(&self) -> Result<ViewpointSet> {
        match &self.viewpoints {
            ViewpointSource::Lattice => {
                lattice_with_threshold(self.radius_m, self.top_threshold_rad)
            }
            ViewpointSource::File(path) => {
                let file =
                    fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
                ViewpointSet::from_reader(std::io::BufReader::new(file))
            }
        }
    }
}

/// Everything the pipeline derived for one affordance.
#[derive(Debug, Clone)]
pub struct AffordanceResult {
    pub values: Vec<ViewpointValue>,
    pub detail: ClusteringDetail,
    pub rule: DirectionRule,
}

/// Full pipeline result, ready for artifact export or direct queries.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub viewpoint_set: ViewpointSet,
    pub n_trials_in: usize,
    pub rejected: Vec<RejectedTrial>,
    pub samples: Vec<PerformanceSample>,
    pub per_affordance: BTreeMap<Affordance, AffordanceResult>,
    pub stats: StatsReport,
}

impl PipelineOutput {
    pub fn manifold_sets(&self) -> BTreeMap<Affordance, ManifoldSet> {
        self.per_affordance
            .iter()
            .map(|(a, r)| (*a, r.detail.set.clone()))
            .collect()
    }
}

/// Runs ingest → outlier rejection → normalization → scoring → valuation →
/// clustering → rule extraction → statistical validation. Affordances are
/// processed in parallel; results are keyed, so the output is independent
/// of scheduling.
pub fn run(config: &PipelineConfig, trials: &TrialSet) -> Result<PipelineOutput> {
    config.validate()?;
    let vs = config.viewpoint_set()?;
    let (clean, rejected) = trials.reject_outliers(config.mad_threshold, config.mad_scale);
    let normalized = normalize_subject_measures(&clean)?;
    let samples = score_performance(&normalized, &config.weights)?;

    let affordances: BTreeSet<Affordance> = samples.iter().map(|s| s.affordance).collect();
    let per_affordance: BTreeMap<Affordance, AffordanceResult> = affordances
        .par_iter()
        .map(|&a| -> Result<(Affordance, AffordanceResult)> {
            let values = value_field(a, &samples, &vs, &config.weights, config.impute_missing)?;
            let points = make_sample_points(&values, &vs)?;
            let detail = cluster_value_field(&points, &values, &vs, &config.weights, config.k_max)?;
            let rule = extract_cardinal_rules(&values, &vs)?;
            Ok((
                a,
                AffordanceResult {
                    values,
                    detail,
                    rule,
                },
            ))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .collect();

    let sets: BTreeMap<Affordance, ManifoldSet> = per_affordance
        .iter()
        .map(|(a, r)| (*a, r.detail.set.clone()))
        .collect();
    let stats = validate_model(&sets, &samples, &clean, config.alpha)?;

    Ok(PipelineOutput {
        viewpoint_set: vs,
        n_trials_in: trials.len(),
        rejected,
        samples,
        per_affordance,
        stats,
    })
}

/// [`run`] on a trials CSV path.
pub fn run_csv(config: &PipelineConfig, trials_path: &Path) -> Result<PipelineOutput> {
    config.validate()?;
    let vs = config.viewpoint_set()?;
    let trials = TrialSet::from_csv_path(trials_path, &vs)?;
    run(config, &trials)
}

#[derive(Serialize)]
struct AffordanceReport<'a> {
    k: usize,
    candidates: &'a [crate::clustering::ChScore],
    manifolds: &'a ManifoldSet,
    rule: &'a DirectionRule,
}

#[derive(Serialize)]
struct RunReport<'a> {
    config: &'a PipelineConfig,
    n_trials: usize,
    n_rejected: usize,
    n_samples: usize,
    affordances: BTreeMap<Affordance, AffordanceReport<'a>>,
    stats: &'a StatsReport,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut file = fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    serde_json::to_writer_pretty(&mut file, value)?;
    file.write_all(b"\n")
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

/// Writes values.csv, manifolds.json, rejected.json, report.json, and the
/// plotdata/ directory under `out_dir`, returning the paths written.
pub fn write_artifacts(
    out_dir: &Path,
    config: &PipelineConfig,
    output: &PipelineOutput,
) -> Result<Vec<PathBuf>> {
    let plot_dir = out_dir.join("plotdata");
    fs::create_dir_all(&plot_dir).map_err(|e| Error::io(plot_dir.display().to_string(), e))?;
    let mut written = Vec::new();

    let values_path = out_dir.join("values.csv");
    {
        let file = fs::File::create(&values_path)
            .map_err(|e| Error::io(values_path.display().to_string(), e))?;
        let mut wtr = csv::Writer::from_writer(file);
        wtr.write_record([
            "affordance",
            "viewpoint",
            "value",
            "perf_mean",
            "perf_std",
            "n",
        ])?;
        for result in output.per_affordance.values() {
            for v in &result.values {
                wtr.write_record(&[
                    v.affordance.to_string(),
                    v.viewpoint.to_string(),
                    v.value.to_string(),
                    v.perf_mean.to_string(),
                    v.perf_std.to_string(),
                    v.n.to_string(),
                ])?;
            }
        }
        wtr.flush()
            .map_err(|e| Error::io(values_path.display().to_string(), e))?;
    }
    written.push(values_path);

    let manifolds_path = out_dir.join("manifolds.json");
    write_json(&manifolds_path, &output.manifold_sets())?;
    written.push(manifolds_path);

    let rejected_path = out_dir.join("rejected.json");
    write_json(&rejected_path, &output.rejected)?;
    written.push(rejected_path);

    let report_path = out_dir.join("report.json");
    let report = RunReport {
        config,
        n_trials: output.n_trials_in,
        n_rejected: output.rejected.len(),
        n_samples: output.samples.len(),
        affordances: output
            .per_affordance
            .iter()
            .map(|(a, r)| {
                (
                    *a,
                    AffordanceReport {
                        k: r.detail.set.k(),
                        candidates: &r.detail.candidates,
                        manifolds: &r.detail.set,
                        rule: &r.rule,
                    },
                )
            })
            .collect(),
        stats: &output.stats,
    };
    write_json(&report_path, &report)?;
    written.push(report_path);

    for (a, result) in &output.per_affordance {
        let rank_of: BTreeMap<u32, u32> = result
            .detail
            .set
            .manifolds()
            .iter()
            .flat_map(|m| m.members.iter().map(|id| (*id, m.rank)))
            .collect();
        let field_path = plot_dir.join(format!("field_{a}.csv"));
        {
            let file = fs::File::create(&field_path)
                .map_err(|e| Error::io(field_path.display().to_string(), e))?;
            let mut wtr = csv::Writer::from_writer(file);
            wtr.write_record(["viewpoint", "theta", "phi", "value", "manifold_rank"])?;
            for v in &result.values {
                let vp = output
                    .viewpoint_set
                    .get(v.viewpoint)
                    .ok_or(Error::UnknownViewpoint(v.viewpoint))?;
                wtr.write_record(&[
                    v.viewpoint.to_string(),
                    vp.theta.to_string(),
                    vp.phi.to_string(),
                    v.value.to_string(),
                    rank_of[&v.viewpoint].to_string(),
                ])?;
            }
            wtr.flush()
                .map_err(|e| Error::io(field_path.display().to_string(), e))?;
        }
        written.push(field_path);

        let dendro_path = plot_dir.join(format!("dendrogram_{a}.csv"));
        {
            let file = fs::File::create(&dendro_path)
                .map_err(|e| Error::io(dendro_path.display().to_string(), e))?;
            result.detail.dendrogram.to_csv_writer(file)?;
        }
        written.push(dendro_path);
    }

    Ok(written)
}
