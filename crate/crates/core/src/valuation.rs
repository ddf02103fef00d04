//! Per-viewpoint value of an affordance: reward for high mean performance,
//! penalty for inconsistency, and the z-normalized sample points handed to
//! clustering.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::affordance::Affordance;
use crate::error::{Error, Result};
use crate::geometry::{CardinalDirection, ViewpointSet};
use crate::stats::{mean, sample_std};
use crate::trials::{PerformanceSample, Weights};

/// Value of one viewpoint for one affordance. `n` counts the performance
/// samples behind it; zero marks a value imputed from the viewpoint's
/// cardinal group rather than measured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewpointValue {
    pub affordance: Affordance,
    pub viewpoint: u32,
    pub value: f64,
    pub perf_mean: f64,
    pub perf_std: f64,
    pub n: usize,
}

/// Scores one viewpoint from the performance samples observed there: the
/// weighted mean minus the weighted sample deviation, so consistently good
/// beats erratically good.
pub fn viewpoint_value(
    affordance: Affordance,
    viewpoint: u32,
    performances: &[f64],
    weights: &Weights,
) -> Result<ViewpointValue> {
    weights.validate()?;
    if performances.is_empty() {
        return Err(Error::EmptySamples);
    }
    let perf_mean = mean(performances);
    let perf_std = sample_std(performances);
    Ok(ViewpointValue {
        affordance,
        viewpoint,
        value: weights.mean * perf_mean - weights.deviation * perf_std,
        perf_mean,
        perf_std,
        n: performances.len(),
    })
}

/// Values every viewpoint of the set for `affordance`, in ascending id
/// order. Samples of other affordances are ignored. Viewpoints without
/// samples are an error unless `impute` is set, in which case they take the
/// mean statistics of the sampled viewpoints in their cardinal group and are
/// marked with `n = 0`.
pub fn value_field(
    affordance: Affordance,
    samples: &[PerformanceSample],
    vs: &ViewpointSet,
    weights: &Weights,
    impute: bool,
) -> Result<Vec<ViewpointValue>> {
    weights.validate()?;
    let mut by_viewpoint: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for s in samples.iter().filter(|s| s.affordance == affordance) {
        if !vs.contains(s.viewpoint) {
            return Err(Error::UnknownViewpoint(s.viewpoint));
        }
        by_viewpoint
            .entry(s.viewpoint)
            .or_default()
            .push(s.performance);
    }
    if by_viewpoint.is_empty() {
        return Err(Error::EmptySamples);
    }

    let uncovered: Vec<u32> = vs
        .ids()
        .filter(|id| !by_viewpoint.contains_key(id))
        .collect();
    if !uncovered.is_empty() && !impute {
        return Err(Error::UncoveredViewpoints {
            affordance,
            viewpoints: uncovered,
        });
    }

    let mut values: BTreeMap<u32, ViewpointValue> = BTreeMap::new();
    for (&vp, perfs) in &by_viewpoint {
        values.insert(vp, viewpoint_value(affordance, vp, perfs, weights)?);
    }
    for vp in uncovered {
        let group = vs.group_of(vp).expect("id comes from the set");
        let donors: Vec<&ViewpointValue> = vs
            .members_of(group)
            .iter()
            .filter_map(|id| values.get(id))
            .filter(|v| v.n > 0)
            .collect();
        if donors.is_empty() {
            return Err(Error::ImputeNoDonor { id: vp });
        }
        let perf_mean = mean(&donors.iter().map(|v| v.perf_mean).collect::<Vec<_>>());
        let perf_std = mean(&donors.iter().map(|v| v.perf_std).collect::<Vec<_>>());
        values.insert(
            vp,
            ViewpointValue {
                affordance,
                viewpoint: vp,
                value: weights.mean * perf_mean - weights.deviation * perf_std,
                perf_mean,
                perf_std,
                n: 0,
            },
        );
    }
    Ok(values.into_values().collect())
}

/// Observation handed to clustering: a pose plus its value z-scored across
/// the whole field, so spatial and value distances share a scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint {
    pub viewpoint: u32,
    pub theta: f64,
    pub phi: f64,
    pub norm_value: f64,
}

/// Z-normalizes a complete value field over its viewpoints and attaches
/// poses. The field must value every viewpoint of the set exactly once, and
/// a flat field (zero deviation across viewpoints) has no usable normalization.
pub fn make_sample_points(
    values: &[ViewpointValue],
    vs: &ViewpointSet,
) -> Result<Vec<SamplePoint>> {
    if values.is_empty() {
        return Err(Error::EmptySamples);
    }
    let affordance = values[0].affordance;
    let mut seen = BTreeSet::new();
    for v in values {
        if v.affordance != affordance {
            return Err(Error::IncompleteField(format!(
                "mixed affordances {} and {}",
                affordance, v.affordance
            )));
        }
        if !vs.contains(v.viewpoint) {
            return Err(Error::IncompleteField(format!(
                "value for unknown viewpoint {}",
                v.viewpoint
            )));
        }
        if !seen.insert(v.viewpoint) {
            return Err(Error::IncompleteField(format!(
                "duplicate value for viewpoint {}",
                v.viewpoint
            )));
        }
    }
    let missing: Vec<u32> = vs.ids().filter(|id| !seen.contains(id)).collect();
    if !missing.is_empty() {
        return Err(Error::IncompleteField(format!(
            "no value for viewpoints {missing:?}"
        )));
    }

    let raw: Vec<f64> = values.iter().map(|v| v.value).collect();
    let (m, sd) = (mean(&raw), sample_std(&raw));
    if sd == 0.0 {
        return Err(Error::FlatValueField { affordance });
    }
    let mut points: Vec<SamplePoint> = values
        .iter()
        .map(|v| {
            let pose = vs.get(v.viewpoint).expect("membership checked above");
            SamplePoint {
                viewpoint: v.viewpoint,
                theta: pose.theta,
                phi: pose.phi,
                norm_value: (v.value - m) / sd,
            }
        })
        .collect();
    points.sort_by_key(|p| p.viewpoint);
    Ok(points)
}

/// Convenience: members of each cardinal group that carry measured (not
/// imputed) values.
pub fn measured_by_group(
    values: &[ViewpointValue],
    vs: &ViewpointSet,
) -> BTreeMap<CardinalDirection, Vec<u32>> {
    let mut out: BTreeMap<CardinalDirection, Vec<u32>> = BTreeMap::new();
    for v in values.iter().filter(|v| v.n > 0) {
        if let Some(g) = vs.group_of(v.viewpoint) {
            out.entry(g).or_default().push(v.viewpoint);
        }
    }
    out
}
