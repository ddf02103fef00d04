//! Task-level guidance on top of the per-affordance manifold models: pose
//! recommendations for action sequences, cardinal-direction rules of thumb,
//! weight-sensitivity sweeps, and manifold-set comparison.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::affordance::Affordance;
use crate::clustering::{build_manifold_set, ManifoldSet};
use crate::error::{Error, Result};
use crate::geometry::{orthodromic_distance, CardinalDirection, Viewpoint, ViewpointSet};
use crate::stats::{mean, Outcome};
use crate::trials::{PerformanceSample, Weights};
use crate::valuation::{make_sample_points, value_field, ViewpointValue};

/// Mean-minus-deviation weights swept by [`sensitivity_sweep`], best first.
pub const SWEEP_GRID: [f64; 6] = [1.0, 0.9, 0.8, 0.7, 0.6, 0.5];

/// Fraction of the direction-value range a direction must clear to be
/// selected by [`extract_cardinal_rules`].
pub const RULE_RANGE_FRACTION: f64 = 0.8;

/// One action to assist: a free-form label plus the affordance it exercises.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanAction {
    pub label: String,
    pub affordance: Affordance,
}

/// An ordered action sequence, e.g. "go through a door" decomposed into
/// approach, reach, open, pass.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskPlan {
    pub actions: Vec<PlanAction>,
}

impl TaskPlan {
    pub fn from_reader<R: Read>(r: R) -> Result<Self> {
        let plan: TaskPlan = serde_json::from_reader(r)?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.actions.is_empty() {
            return Err(Error::EmptyPlan);
        }
        if self.actions.iter().any(|a| a.label.trim().is_empty()) {
            return Err(Error::BadConfig("plan action with empty label".into()));
        }
        Ok(())
    }
}

/// Where to stand, serialized in radians plus meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub theta_rad: f64,
    pub phi_rad: f64,
    pub radius_m: f64,
}

impl From<Viewpoint> for Pose {
    fn from(v: Viewpoint) -> Self {
        Pose {
            theta_rad: v.theta,
            phi_rad: v.phi,
            radius_m: v.radius,
        }
    }
}

/// Compact per-manifold line in an advice step.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifoldSummary {
    pub rank: u32,
    pub value: f64,
    pub area_fraction: f64,
}

/// Recommendation for one plan action: stand at the best manifold's
/// centroid; `stability` is that manifold's lattice coverage, the proxy for
/// tolerance to pose error. `transfer_m` is the great-circle distance from
/// the previous step's pose (absent on the first step).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdviceStep {
    pub action: String,
    pub affordance: Affordance,
    pub manifolds: Vec<ManifoldSummary>,
    pub recommended_pose: Pose,
    pub stability: f64,
    pub reaches_ground: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transfer_m: Option<f64>,
}

/// Advice for a whole plan, one step per action in order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Advice {
    pub steps: Vec<AdviceStep>,
    pub total_transfer_m: f64,
}

/// Recommends, per action, the rank-1 manifold's centroid of the matching
/// affordance model, and reports the pose transfers a single assistant would
/// make between consecutive actions. The viewpoint set supplies member poses
/// for the ground-reach flag and must be the one the models were built on.
pub fn advise(
    plan: &TaskPlan,
    models: &BTreeMap<Affordance, ManifoldSet>,
    vs: &ViewpointSet,
) -> Result<Advice> {
    plan.validate()?;
    let mut steps = Vec::with_capacity(plan.actions.len());
    let mut previous: Option<Viewpoint> = None;
    let mut total = 0.0;
    for action in &plan.actions {
        let model = models
            .get(&action.affordance)
            .ok_or(Error::MissingModel(action.affordance))?;
        let best = model.best();
        let transfer_m = match previous {
            None => None,
            Some(prev) => Some(orthodromic_distance(&prev, &best.centroid)?),
        };
        total += transfer_m.unwrap_or(0.0);
        steps.push(AdviceStep {
            action: action.label.clone(),
            affordance: action.affordance,
            manifolds: model
                .manifolds()
                .iter()
                .map(|m| ManifoldSummary {
                    rank: m.rank,
                    value: m.value,
                    area_fraction: m.area_fraction,
                })
                .collect(),
            recommended_pose: best.centroid.into(),
            stability: best.area_fraction,
            reaches_ground: best.reaches_ground(vs),
            transfer_m,
        });
        previous = Some(best.centroid);
    }
    Ok(Advice {
        steps,
        total_transfer_m: total,
    })
}

/// Which way to stand relative to the task when no full model is at hand:
/// per-direction mean of the member viewpoint values, with the directions
/// inside the top fifth of the value range selected.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DirectionRule {
    pub affordance: Affordance,
    pub direction_values: BTreeMap<CardinalDirection, f64>,
    pub threshold: f64,
    pub selected: Vec<CardinalDirection>,
}

/// Averages the value field over the five cardinal-direction groups and
/// selects every direction with value >= min + 0.8 * (max - min). A flat
/// field selects all five.
pub fn extract_cardinal_rules(
    values: &[ViewpointValue],
    vs: &ViewpointSet,
) -> Result<DirectionRule> {
    if values.is_empty() {
        return Err(Error::EmptySamples);
    }
    let affordance = values[0].affordance;
    let mut by_id: BTreeMap<u32, f64> = BTreeMap::new();
    for v in values {
        if v.affordance != affordance {
            return Err(Error::IncompleteField(format!(
                "mixed affordances {} and {}",
                affordance, v.affordance
            )));
        }
        if by_id.insert(v.viewpoint, v.value).is_some() {
            return Err(Error::IncompleteField(format!(
                "duplicate value for viewpoint {}",
                v.viewpoint
            )));
        }
    }
    for id in vs.ids() {
        if !by_id.contains_key(&id) {
            return Err(Error::IncompleteField(format!(
                "viewpoint {id} has no value"
            )));
        }
    }

    let mut direction_values = BTreeMap::new();
    for direction in CardinalDirection::ALL {
        let members = vs.members_of(direction);
        if members.is_empty() {
            return Err(Error::IncompleteField(format!(
                "direction {direction} has no viewpoints"
            )));
        }
        let vals: Vec<f64> = members.iter().map(|id| by_id[id]).collect();
        direction_values.insert(direction, mean(&vals));
    }

    let min = direction_values
        .values()
        .fold(f64::INFINITY, |a, &b| a.min(b));
    let max = direction_values
        .values()
        .fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let threshold = min + RULE_RANGE_FRACTION * (max - min);
    let selected = CardinalDirection::ALL
        .into_iter()
        .filter(|d| direction_values[d] >= threshold)
        .collect();
    Ok(DirectionRule {
        affordance,
        direction_values,
        threshold,
        selected,
    })
}

/// How two manifold sets of the same affordance and lattice differ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffVerdict {
    /// Same memberships, same rank order.
    Unchanged,
    /// Differences confined to ranks 3 and below on both sides.
    ChangedBelowTop2,
    /// A difference touches rank 1 or 2 on either side.
    ChangedIncludingTop2,
    /// Different cluster counts.
    StructureChanged,
}

impl std::fmt::Display for DiffVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DiffVerdict::Unchanged => "unchanged",
            DiffVerdict::ChangedBelowTop2 => "changed below top-2",
            DiffVerdict::ChangedIncludingTop2 => "changed including top-2",
            DiffVerdict::StructureChanged => "structure changed",
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifoldDiff {
    pub verdict: DiffVerdict,
    /// (rank in `a`, rank in `b`) pairs matched by maximum member overlap.
    pub matching: Vec<(u32, u32)>,
    /// Viewpoints whose cluster assignment is not explained by the matching.
    pub moved: Vec<u32>,
}

/// Matches clusters across two sets of the same affordance greedily by
/// largest member overlap (ties toward smaller ranks), then reports which
/// viewpoints changed cluster and how high in the ranking the differences
/// reach.
pub fn compare_manifold_sets(a: &ManifoldSet, b: &ManifoldSet) -> Result<ManifoldDiff> {
    if a.affordance() != b.affordance() {
        return Err(Error::ReferenceMismatch(format!(
            "comparing {} against {}",
            a.affordance(),
            b.affordance()
        )));
    }
    let ids_of = |s: &ManifoldSet| -> BTreeSet<u32> {
        s.manifolds()
            .iter()
            .flat_map(|m| m.members.iter().copied())
            .collect()
    };
    if ids_of(a) != ids_of(b) {
        return Err(Error::ReferenceMismatch(
            "manifold sets cover different viewpoints".into(),
        ));
    }

    let mut overlaps = Vec::new();
    for (i, ma) in a.manifolds().iter().enumerate() {
        let set_a: BTreeSet<u32> = ma.members.iter().copied().collect();
        for (j, mb) in b.manifolds().iter().enumerate() {
            let count = mb.members.iter().filter(|id| set_a.contains(id)).count();
            if count > 0 {
                overlaps.push((count, i, j));
            }
        }
    }
    overlaps.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut used_a = vec![false; a.k()];
    let mut used_b = vec![false; b.k()];
    let mut matching = Vec::new();
    for (_, i, j) in overlaps {
        if !used_a[i] && !used_b[j] {
            used_a[i] = true;
            used_b[j] = true;
            matching.push((i as u32 + 1, j as u32 + 1));
        }
    }
    matching.sort_unstable();

    let match_of: BTreeMap<u32, u32> = matching.iter().copied().collect();
    let rank_in = |s: &ManifoldSet, id: u32| -> u32 {
        s.manifolds()
            .iter()
            .find(|m| m.members.binary_search(&id).is_ok())
            .map(|m| m.rank)
            .expect("coverage already checked")
    };
    let mut moved = Vec::new();
    let mut touched_ranks: BTreeSet<u32> = BTreeSet::new();
    for &id in ids_of(a).iter() {
        let ra = rank_in(a, id);
        let rb = rank_in(b, id);
        if match_of.get(&ra) != Some(&rb) {
            moved.push(id);
            touched_ranks.insert(ra);
            touched_ranks.insert(rb);
        }
    }
    for &(ra, rb) in &matching {
        if ra != rb {
            touched_ranks.insert(ra);
            touched_ranks.insert(rb);
        }
    }

    let verdict = if a.k() != b.k() {
        DiffVerdict::StructureChanged
    } else if moved.is_empty() && matching.iter().all(|&(ra, rb)| ra == rb) {
        DiffVerdict::Unchanged
    } else if touched_ranks.iter().any(|&r| r <= 2) {
        DiffVerdict::ChangedIncludingTop2
    } else {
        DiffVerdict::ChangedBelowTop2
    };
    Ok(ManifoldDiff {
        verdict,
        matching,
        moved,
    })
}

/// Result of re-running valuation and clustering at one mean/deviation
/// weight setting. `compared_to` names the previous (higher w_m) grid point;
/// the first point has nothing to compare against and reports unchanged.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPoint {
    pub w_m: f64,
    pub w_d: f64,
    pub sets: BTreeMap<Affordance, Outcome<ManifoldSet>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compared_to: Option<String>,
    pub comparisons: BTreeMap<Affordance, Outcome<ManifoldDiff>>,
    pub verdict: DiffVerdict,
}

/// Sweep results keyed by the w_m grid value ("1.0" down to "0.5").
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub points: BTreeMap<String, SweepPoint>,
}

fn grid_key(w_m: f64) -> String {
    format!("{w_m:.1}")
}

/// Walks w_m from 1.0 down to 0.5 (w_d = 1 - w_m), rebuilding every
/// affordance's value field and manifolds at each step, and compares each
/// grid point's sets against the previous point's. Per-point failures are
/// recorded without aborting the sweep; a point whose sets cannot be
/// compared counts as a structure change.
pub fn sensitivity_sweep(
    samples: &[PerformanceSample],
    vs: &ViewpointSet,
    base: &Weights,
    k_max: usize,
    impute: bool,
) -> Result<SensitivityReport> {
    base.validate()?;
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let affordances: BTreeSet<Affordance> = samples.iter().map(|s| s.affordance).collect();

    let mut points: BTreeMap<String, SweepPoint> = BTreeMap::new();
    let mut previous: Option<(String, BTreeMap<Affordance, Outcome<ManifoldSet>>)> = None;
    for w_m in SWEEP_GRID {
        let weights = Weights {
            time: base.time,
            errors: base.errors,
            mean: w_m,
            deviation: 1.0 - w_m,
        };
        let mut sets: BTreeMap<Affordance, Outcome<ManifoldSet>> = BTreeMap::new();
        for &a in &affordances {
            let built = value_field(a, samples, vs, &weights, impute).and_then(|values| {
                let pts = make_sample_points(&values, vs)?;
                build_manifold_set(&pts, &values, vs, &weights, k_max)
            });
            sets.insert(a, Outcome::from_result(built));
        }

        let mut comparisons: BTreeMap<Affordance, Outcome<ManifoldDiff>> = BTreeMap::new();
        let mut verdict = DiffVerdict::Unchanged;
        let compared_to = previous.as_ref().map(|(key, _)| key.clone());
        if let Some((_, prev_sets)) = &previous {
            for &a in &affordances {
                let diff = match (prev_sets[&a].as_ok(), sets[&a].as_ok()) {
                    (Some(pa), Some(pb)) => Outcome::from_result(compare_manifold_sets(pa, pb)),
                    _ => Outcome::Err {
                        error: "grid point failed to build".into(),
                    },
                };
                verdict = verdict.max(match &diff {
                    Outcome::Ok(d) => d.verdict,
                    Outcome::Err { .. } => DiffVerdict::StructureChanged,
                });
                comparisons.insert(a, diff);
            }
        }

        let key = grid_key(w_m);
        points.insert(
            key.clone(),
            SweepPoint {
                w_m,
                w_d: 1.0 - w_m,
                sets: sets.clone(),
                compared_to,
                comparisons,
                verdict,
            },
        );
        previous = Some((key, sets));
    }
    Ok(SensitivityReport { points })
}
