//! Grouping viewpoints into manifolds of equivalent value: a combined
//! spatial/value dissimilarity, average-linkage (UPGMA) agglomeration, the
//! Calinski-Harabasz criterion for choosing the cluster count, and the
//! ranked manifold sets the advisor serves.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::affordance::Affordance;
use crate::error::{Error, Result};
use crate::geometry::{area_fraction, haversine_arc, manifold_centroid, Viewpoint, ViewpointSet};
use crate::stats::{mean, sample_std};
use crate::trials::Weights;
use crate::valuation::{SamplePoint, ViewpointValue};

/// Largest cluster count considered when none is configured.
pub const DEFAULT_K_MAX: usize = 10;

/// Pairwise dissimilarities between sample points, stored condensed
/// (upper triangle, row-major). Distances combine the great-circle
/// separation of the poses with the separation of their normalized values:
/// sqrt(d_spatial^2 + d_value^2).
#[derive(Debug, Clone)]
pub struct DissimilarityMatrix {
    ids: Vec<u32>,
    condensed: Vec<f64>,
    /// (spatial, value) breakdown per condensed entry, when built from
    /// sample points.
    components: Option<Vec<(f64, f64)>>,
}

fn condensed_index(i: usize, j: usize, n: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

impl DissimilarityMatrix {
    /// Builds the combined matrix for `points` on the sphere of `vs`.
    pub fn from_points(points: &[SamplePoint], vs: &ViewpointSet) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::EmptySamples);
        }
        let mut seen = BTreeSet::new();
        for p in points {
            if !seen.insert(p.viewpoint) {
                return Err(Error::BadPartition(format!(
                    "duplicate sample point for viewpoint {}",
                    p.viewpoint
                )));
            }
            if !p.norm_value.is_finite() {
                return Err(Error::Stats(format!(
                    "viewpoint {}: non-finite normalized value",
                    p.viewpoint
                )));
            }
        }
        let n = points.len();
        let r = vs.radius();
        let mut condensed = Vec::with_capacity(n * (n - 1) / 2);
        let mut components = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (&points[i], &points[j]);
                let spatial = r * haversine_arc(a.theta, a.phi, b.theta, b.phi);
                let value = (a.norm_value - b.norm_value).abs();
                condensed.push(spatial.hypot(value));
                components.push((spatial, value));
            }
        }
        Ok(DissimilarityMatrix {
            ids: points.iter().map(|p| p.viewpoint).collect(),
            condensed,
            components: Some(components),
        })
    }

    /// Wraps an existing condensed matrix; used by oracle tests and anywhere
    /// distances come precomputed.
    pub fn from_condensed(ids: Vec<u32>, condensed: Vec<f64>) -> Result<Self> {
        let n = ids.len();
        if n < 2 {
            return Err(Error::EmptySamples);
        }
        if ids.iter().collect::<BTreeSet<_>>().len() != n {
            return Err(Error::BadPartition("duplicate observation ids".into()));
        }
        if condensed.len() != n * (n - 1) / 2 {
            return Err(Error::BadPartition(format!(
                "condensed length {} does not match {} observations",
                condensed.len(),
                n
            )));
        }
        if let Some(bad) = condensed.iter().find(|d| !(d.is_finite() && **d >= 0.0)) {
            return Err(Error::Stats(format!("invalid dissimilarity {bad}")));
        }
        Ok(DissimilarityMatrix {
            ids,
            condensed,
            components: None,
        })
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }

    /// Observation labels in matrix order.
    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    /// Distance between observations at positions `i` and `j`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        self.condensed[condensed_index(i, j, self.n())]
    }

    /// (spatial, value) parts of the distance, when known.
    pub fn components(&self, i: usize, j: usize) -> Option<(f64, f64)> {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        self.components
            .as_ref()
            .map(|c| c[condensed_index(i, j, self.n())])
    }
}

/// One agglomeration: clusters `left` and `right` (left < right) merge at
/// `height` into a new cluster labeled `id` with `size` leaves.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MergeStep {
    pub left: u32,
    pub right: u32,
    pub height: f64,
    pub id: u32,
    pub size: u32,
}

/// Full UPGMA merge history: n - 1 steps over n leaves. Leaf labels are the
/// observation ids; merged clusters get consecutive labels starting past the
/// largest leaf id.
#[derive(Debug, Clone)]
pub struct Dendrogram {
    leaves: Vec<u32>,
    steps: Vec<MergeStep>,
    monotonic: bool,
}

impl Dendrogram {
    pub fn leaves(&self) -> &[u32] {
        &self.leaves
    }

    pub fn steps(&self) -> &[MergeStep] {
        &self.steps
    }

    /// Average linkage is monotone in exact arithmetic; a false value here
    /// signals floating-point trouble in the inputs.
    pub fn monotonic(&self) -> bool {
        self.monotonic
    }

    /// Merge list as CSV for external plotting.
    pub fn to_csv_writer<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["step", "left", "right", "height", "id", "size"])?;
        for (i, s) in self.steps.iter().enumerate() {
            wtr.write_record(&[
                (i + 1).to_string(),
                s.left.to_string(),
                s.right.to_string(),
                s.height.to_string(),
                s.id.to_string(),
                s.size.to_string(),
            ])?;
        }
        wtr.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Average-linkage agglomerative clustering via the Lance-Williams update:
/// d(K∪L, M) = (|K| d(K,M) + |L| d(L,M)) / (|K| + |L|). Distance ties break
/// toward the lexicographically smallest (smaller id, larger id) pair, which
/// pins the merge order.
#[allow(clippy::needless_range_loop)]
pub fn upgma_tree(m: &DissimilarityMatrix) -> Dendrogram {
    let n = m.n();
    let mut dist = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = m.get(i, j);
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }
    let mut active: Vec<bool> = vec![true; n];
    let mut cluster_id: Vec<u32> = m.ids().to_vec();
    let mut size: Vec<u32> = vec![1; n];
    let mut next_id = m.ids().iter().copied().max().unwrap_or(0) + 1;
    let mut steps = Vec::with_capacity(n - 1);

    for _ in 0..(n - 1) {
        let mut best: Option<(f64, u32, u32, usize, usize)> = None;
        for i in 0..n {
            if !active[i] {
                continue;
            }
            for j in (i + 1)..n {
                if !active[j] {
                    continue;
                }
                let d = dist[i][j];
                let (lo, hi) = if cluster_id[i] < cluster_id[j] {
                    (cluster_id[i], cluster_id[j])
                } else {
                    (cluster_id[j], cluster_id[i])
                };
                let better = match &best {
                    None => true,
                    Some((bd, blo, bhi, _, _)) => d < *bd || (d == *bd && (lo, hi) < (*blo, *bhi)),
                };
                if better {
                    best = Some((d, lo, hi, i, j));
                }
            }
        }
        let (height, lo, hi, i, j) = best.expect("at least two active clusters");
        for k in 0..n {
            if active[k] && k != i && k != j {
                let merged = (f64::from(size[i]) * dist[i][k] + f64::from(size[j]) * dist[j][k])
                    / f64::from(size[i] + size[j]);
                dist[i][k] = merged;
                dist[k][i] = merged;
            }
        }
        size[i] += size[j];
        active[j] = false;
        cluster_id[i] = next_id;
        steps.push(MergeStep {
            left: lo,
            right: hi,
            height,
            id: next_id,
            size: size[i],
        });
        next_id += 1;
    }

    let monotonic = steps
        .windows(2)
        .all(|w| w[1].height >= w[0].height - 1e-12 * w[0].height.abs().max(1.0));
    Dendrogram {
        leaves: m.ids().to_vec(),
        steps,
        monotonic,
    }
}

/// Partition into `k` clusters by undoing the last k - 1 merges. Clusters
/// come sorted by smallest member, each member list ascending.
pub fn cut_tree(tree: &Dendrogram, k: usize) -> Result<Vec<Vec<u32>>> {
    let n = tree.leaves().len();
    if k < 1 || k > n {
        return Err(Error::BadClusterCount { k, min: 1, max: n });
    }
    let mut clusters: BTreeMap<u32, Vec<u32>> =
        tree.leaves().iter().map(|&id| (id, vec![id])).collect();
    for step in &tree.steps[..n - k] {
        let left = clusters.remove(&step.left).ok_or_else(|| {
            Error::BadPartition(format!("merge references unknown cluster {}", step.left))
        })?;
        let right = clusters.remove(&step.right).ok_or_else(|| {
            Error::BadPartition(format!("merge references unknown cluster {}", step.right))
        })?;
        let mut merged = left;
        merged.extend(right);
        merged.sort_unstable();
        clusters.insert(step.id, merged);
    }
    let mut out: Vec<Vec<u32>> = clusters.into_values().collect();
    out.sort_by_key(|c| c[0]);
    Ok(out)
}

/// Calinski-Harabasz score of one partition. `degenerate` marks a zero
/// within-cluster dispersion, where the ratio is infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChScore {
    pub k: usize,
    pub score: f64,
    pub degenerate: bool,
}

/// Variance-ratio criterion evaluated directly on dissimilarities. Within
/// dispersion W sums, per cluster, the squared pairwise distances divided by
/// the cluster size; total dispersion T does the same over everything; the
/// score is ((T - W)/(k - 1)) / (W/(n - k)). On Euclidean distances this
/// equals the classical centroid-based form exactly.
pub fn calinski_harabasz(m: &DissimilarityMatrix, partition: &[Vec<u32>]) -> Result<ChScore> {
    let n = m.n();
    let k = partition.len();
    if k < 2 || k >= n {
        return Err(Error::BadClusterCount {
            k,
            min: 2,
            max: n.saturating_sub(1),
        });
    }
    let position: BTreeMap<u32, usize> =
        m.ids().iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let mut seen = BTreeSet::new();
    for cluster in partition {
        if cluster.is_empty() {
            return Err(Error::BadPartition("empty cluster".into()));
        }
        for id in cluster {
            if !position.contains_key(id) {
                return Err(Error::BadPartition(format!(
                    "cluster member {id} is not an observation"
                )));
            }
            if !seen.insert(*id) {
                return Err(Error::BadPartition(format!(
                    "observation {id} appears in two clusters"
                )));
            }
        }
    }
    if seen.len() != n {
        return Err(Error::BadPartition(format!(
            "partition covers {} of {} observations",
            seen.len(),
            n
        )));
    }

    let mut total = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = m.get(i, j);
            total += d * d;
        }
    }
    let total = total / n as f64;

    let mut within = 0.0;
    for cluster in partition {
        let pos: Vec<usize> = cluster.iter().map(|id| position[id]).collect();
        let mut s = 0.0;
        for (a, &i) in pos.iter().enumerate() {
            for &j in &pos[a + 1..] {
                let d = m.get(i, j);
                s += d * d;
            }
        }
        within += s / pos.len() as f64;
    }

    let between = (total - within).max(0.0);
    if within == 0.0 {
        return Ok(ChScore {
            k,
            score: f64::INFINITY,
            degenerate: true,
        });
    }
    Ok(ChScore {
        k,
        score: (between / (k - 1) as f64) / (within / (n - k) as f64),
        degenerate: false,
    })
}

/// One ranked manifold: a set of equivalently valuable viewpoints.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ManifoldDoc", into = "ManifoldDoc")]
pub struct Manifold {
    /// 1 is the most valuable manifold of its set.
    pub rank: u32,
    /// Weighted mean-minus-deviation of the member viewpoint values.
    pub value: f64,
    /// Member viewpoint ids, ascending.
    pub members: Vec<u32>,
    /// Spherical centroid of the members (id 0).
    pub centroid: Viewpoint,
    /// Fraction of the lattice covered: the stability proxy.
    pub area_fraction: f64,
    /// Performance samples behind the member values.
    pub n_perf_samples: usize,
}

impl Manifold {
    /// Whether any member sits on the horizon and the pose is reachable by
    /// a ground robot.
    pub fn reaches_ground(&self, vs: &ViewpointSet) -> bool {
        self.members
            .iter()
            .filter_map(|id| vs.get(*id))
            .any(|v| v.theta == 0.0)
    }
}

#[derive(Serialize, Deserialize)]
struct CentroidDoc {
    theta: f64,
    phi: f64,
    r: f64,
}

#[derive(Serialize, Deserialize)]
struct ManifoldDoc {
    rank: u32,
    value: f64,
    members: Vec<u32>,
    centroid: CentroidDoc,
    area_fraction: f64,
    n_perf_samples: usize,
}

impl From<Manifold> for ManifoldDoc {
    fn from(m: Manifold) -> Self {
        ManifoldDoc {
            rank: m.rank,
            value: m.value,
            members: m.members,
            centroid: CentroidDoc {
                theta: m.centroid.theta,
                phi: m.centroid.phi,
                r: m.centroid.radius,
            },
            area_fraction: m.area_fraction,
            n_perf_samples: m.n_perf_samples,
        }
    }
}

impl TryFrom<ManifoldDoc> for Manifold {
    type Error = Error;

    fn try_from(d: ManifoldDoc) -> Result<Self> {
        if d.members.is_empty() {
            return Err(Error::BadPartition(format!(
                "manifold {} has no members",
                d.rank
            )));
        }
        let mut members = d.members;
        members.sort_unstable();
        Ok(Manifold {
            rank: d.rank,
            value: d.value,
            members,
            centroid: Viewpoint {
                id: 0,
                theta: d.centroid.theta,
                phi: d.centroid.phi,
                radius: d.centroid.r,
            },
            area_fraction: d.area_fraction,
            n_perf_samples: d.n_perf_samples,
        })
    }
}

/// The ranked manifolds of one affordance, best first.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ManifoldSetDoc", into = "ManifoldSetDoc")]
pub struct ManifoldSet {
    affordance: Affordance,
    weights: Weights,
    manifolds: Vec<Manifold>,
}

#[derive(Serialize, Deserialize)]
struct ManifoldSetDoc {
    affordance: Affordance,
    k: usize,
    weights: Weights,
    manifolds: Vec<Manifold>,
}

impl From<ManifoldSet> for ManifoldSetDoc {
    fn from(s: ManifoldSet) -> Self {
        ManifoldSetDoc {
            affordance: s.affordance,
            k: s.manifolds.len(),
            weights: s.weights,
            manifolds: s.manifolds,
        }
    }
}

impl TryFrom<ManifoldSetDoc> for ManifoldSet {
    type Error = Error;

    fn try_from(d: ManifoldSetDoc) -> Result<Self> {
        if d.k != d.manifolds.len() {
            return Err(Error::BadPartition(format!(
                "declared k = {} but {} manifolds present",
                d.k,
                d.manifolds.len()
            )));
        }
        ManifoldSet::new(d.affordance, d.weights, d.manifolds)
    }
}

impl ManifoldSet {
    /// Validates rank contiguity, value ordering, and member disjointness.
    pub fn new(affordance: Affordance, weights: Weights, manifolds: Vec<Manifold>) -> Result<Self> {
        weights.validate()?;
        if manifolds.is_empty() {
            return Err(Error::BadPartition("manifold set is empty".into()));
        }
        let mut seen = BTreeSet::new();
        for (i, m) in manifolds.iter().enumerate() {
            if m.rank as usize != i + 1 {
                return Err(Error::BadPartition(format!(
                    "ranks must run 1..={}, found {} at position {}",
                    manifolds.len(),
                    m.rank,
                    i + 1
                )));
            }
            if i > 0 && m.value > manifolds[i - 1].value {
                return Err(Error::BadPartition(format!(
                    "manifold {} outvalues its better-ranked neighbor",
                    m.rank
                )));
            }
            for id in &m.members {
                if !seen.insert(*id) {
                    return Err(Error::BadPartition(format!(
                        "viewpoint {id} belongs to two manifolds"
                    )));
                }
            }
        }
        Ok(ManifoldSet {
            affordance,
            weights,
            manifolds,
        })
    }

    pub fn affordance(&self) -> Affordance {
        self.affordance
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    /// Manifolds in rank order, best first.
    pub fn manifolds(&self) -> &[Manifold] {
        &self.manifolds
    }

    pub fn k(&self) -> usize {
        self.manifolds.len()
    }

    pub fn best(&self) -> &Manifold {
        &self.manifolds[0]
    }

    pub fn to_writer<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    pub fn from_reader<R: Read>(r: R) -> Result<Self> {
        Ok(serde_json::from_reader(r)?)
    }
}

/// Clustering output with the evidence behind the chosen k.
#[derive(Debug, Clone)]
pub struct ClusteringDetail {
    pub set: ManifoldSet,
    pub dendrogram: Dendrogram,
    /// CH score per candidate k, ascending k.
    pub candidates: Vec<ChScore>,
}

/// Full clustering of one affordance's value field: dissimilarities, UPGMA,
/// CH selection over k in [2, min(k_max, n-1)] (ties and degenerate scores
/// prefer the smallest k), then manifold assembly. Manifold values reuse the
/// mean-minus-deviation rule over raw member values; ranking is by value,
/// descending, ties toward the smaller first member.
pub fn cluster_value_field(
    points: &[SamplePoint],
    values: &[ViewpointValue],
    vs: &ViewpointSet,
    weights: &Weights,
    k_max: usize,
) -> Result<ClusteringDetail> {
    weights.validate()?;
    if k_max < 2 {
        return Err(Error::BadConfig(format!(
            "k_max must be at least 2, got {k_max}"
        )));
    }
    let value_of: BTreeMap<u32, &ViewpointValue> =
        values.iter().map(|v| (v.viewpoint, v)).collect();
    for p in points {
        if !value_of.contains_key(&p.viewpoint) {
            return Err(Error::IncompleteField(format!(
                "sample point {} has no viewpoint value",
                p.viewpoint
            )));
        }
    }
    let affordance = values
        .first()
        .map(|v| v.affordance)
        .ok_or(Error::EmptySamples)?;

    let matrix = DissimilarityMatrix::from_points(points, vs)?;
    let tree = upgma_tree(&matrix);
    let n = matrix.n();
    if n < 3 {
        return Err(Error::BadClusterCount {
            k: 2,
            min: 2,
            max: n.saturating_sub(1),
        });
    }

    let mut candidates = Vec::new();
    let mut best: Option<ChScore> = None;
    for k in 2..=k_max.min(n - 1) {
        let partition = cut_tree(&tree, k)?;
        let score = calinski_harabasz(&matrix, &partition)?;
        let better = match &best {
            None => true,
            Some(b) => score.score > b.score,
        };
        if better {
            best = Some(score);
        }
        candidates.push(score);
    }
    let chosen = best.expect("candidate range is non-empty");

    let partition = cut_tree(&tree, chosen.k)?;
    let mut manifolds: Vec<Manifold> = partition
        .into_iter()
        .map(|members| {
            let member_values: Vec<f64> = members.iter().map(|id| value_of[id].value).collect();
            let value = weights.mean * mean(&member_values)
                - weights.deviation * sample_std(&member_values);
            let centroid = manifold_centroid(&members, vs)?;
            let n_perf_samples = members.iter().map(|id| value_of[id].n).sum();
            Ok(Manifold {
                rank: 0,
                value,
                area_fraction: area_fraction(&members, vs),
                centroid,
                members,
                n_perf_samples,
            })
        })
        .collect::<Result<_>>()?;
    manifolds.sort_by(|a, b| {
        b.value
            .partial_cmp(&a.value)
            .expect("manifold values are finite")
            .then_with(|| a.members[0].cmp(&b.members[0]))
    });
    for (i, m) in manifolds.iter_mut().enumerate() {
        m.rank = i as u32 + 1;
    }

    Ok(ClusteringDetail {
        set: ManifoldSet::new(affordance, *weights, manifolds)?,
        dendrogram: tree,
        candidates,
    })
}

/// See [`cluster_value_field`]; this drops the diagnostic evidence.
pub fn build_manifold_set(
    points: &[SamplePoint],
    values: &[ViewpointValue],
    vs: &ViewpointSet,
    weights: &Weights,
    k_max: usize,
) -> Result<ManifoldSet> {
    cluster_value_field(points, values, vs, weights, k_max).map(|d| d.set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::default_lattice;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn point(viewpoint: u32, theta: f64, phi: f64, z: f64) -> SamplePoint {
        SamplePoint {
            viewpoint,
            theta,
            phi,
            norm_value: z,
        }
    }

    #[test]
    fn distance_mixes_spatial_and_value_parts() {
        let vs = default_lattice(1.5).unwrap();
        // Same pose, values 2 apart: pure value distance.
        let m = DissimilarityMatrix::from_points(
            &[point(1, 0.3, 0.5, 1.0), point(2, 0.3, 0.5, -1.0)],
            &vs,
        )
        .unwrap();
        assert_relative_eq!(m.get(0, 1), 2.0, max_relative = 1e-15);

        // Same value, quarter arc apart: pure spatial distance.
        let m = DissimilarityMatrix::from_points(
            &[point(1, 0.0, 0.0, 0.3), point(2, PI / 2.0, 0.0, 0.3)],
            &vs,
        )
        .unwrap();
        assert_relative_eq!(m.get(0, 1), 1.5 * PI / 2.0, max_relative = 1e-12);

        // 0.3 m spatial and 0.4 value separation: 0.5 combined.
        let m = DissimilarityMatrix::from_points(
            &[point(1, 0.0, 0.0, 0.0), point(2, 0.0, 0.2, 0.4)],
            &vs,
        )
        .unwrap();
        assert_relative_eq!(m.get(0, 1), 0.5, max_relative = 1e-12);
        let (spatial, value) = m.components(0, 1).unwrap();
        assert_relative_eq!(spatial, 0.3, max_relative = 1e-12);
        assert_relative_eq!(value, 0.4, max_relative = 1e-15);
    }

    #[test]
    fn matrix_is_symmetric_with_zero_diagonal() {
        let vs = default_lattice(1.5).unwrap();
        let pts: Vec<SamplePoint> = vs
            .viewpoints()
            .iter()
            .map(|v| point(v.id, v.theta, v.phi, f64::from(v.id) * 0.1))
            .collect();
        let m = DissimilarityMatrix::from_points(&pts, &vs).unwrap();
        for i in 0..m.n() {
            assert_eq!(m.get(i, i), 0.0);
            for j in 0..m.n() {
                assert_eq!(m.get(i, j), m.get(j, i));
            }
        }
    }

    fn toy_matrix() -> DissimilarityMatrix {
        // ids 1..4; d(1,2)=1, d(1,3)=5, d(1,4)=9, d(2,3)=6, d(2,4)=10, d(3,4)=4
        DissimilarityMatrix::from_condensed(vec![1, 2, 3, 4], vec![1.0, 5.0, 9.0, 6.0, 10.0, 4.0])
            .unwrap()
    }

    #[test]
    fn upgma_matches_hand_computation() {
        let tree = upgma_tree(&toy_matrix());
        let s = tree.steps();
        assert_eq!(s.len(), 3);
        assert_eq!((s[0].left, s[0].right, s[0].id, s[0].size), (1, 2, 5, 2));
        assert_relative_eq!(s[0].height, 1.0);
        assert_eq!((s[1].left, s[1].right, s[1].id, s[1].size), (3, 4, 6, 2));
        assert_relative_eq!(s[1].height, 4.0);
        assert_eq!((s[2].left, s[2].right, s[2].id, s[2].size), (5, 6, 7, 4));
        // Average of the four original cross distances (5+9+6+10)/4.
        assert_relative_eq!(s[2].height, 7.5);
        assert!(tree.monotonic());
    }

    #[test]
    fn equal_distances_break_ties_toward_smallest_ids() {
        let m = DissimilarityMatrix::from_condensed(vec![1, 2, 3, 4], vec![1.0; 6]).unwrap();
        let tree = upgma_tree(&m);
        let pairs: Vec<(u32, u32)> = tree.steps().iter().map(|s| (s.left, s.right)).collect();
        assert_eq!(pairs, vec![(1, 2), (3, 4), (5, 6)]);
        assert!(tree.steps().iter().all(|s| s.height == 1.0));
    }

    #[test]
    fn cut_tree_extremes() {
        let tree = upgma_tree(&toy_matrix());
        assert_eq!(
            cut_tree(&tree, 4).unwrap(),
            vec![vec![1], vec![2], vec![3], vec![4]]
        );
        assert_eq!(cut_tree(&tree, 1).unwrap(), vec![vec![1, 2, 3, 4]]);
        assert_eq!(cut_tree(&tree, 2).unwrap(), vec![vec![1, 2], vec![3, 4]]);
        assert!(matches!(
            cut_tree(&tree, 0),
            Err(Error::BadClusterCount { .. })
        ));
        assert!(matches!(
            cut_tree(&tree, 5),
            Err(Error::BadClusterCount { .. })
        ));
    }

    #[test]
    fn ch_matches_hand_computation() {
        // Two tight pairs far apart: T = (1 + 1 + 4*100)/4, W = 0.5 + 0.5.
        let m = DissimilarityMatrix::from_condensed(
            vec![1, 2, 3, 4],
            vec![1.0, 10.0, 10.0, 10.0, 10.0, 1.0],
        )
        .unwrap();
        let score = calinski_harabasz(&m, &[vec![1, 2], vec![3, 4]]).unwrap();
        let t = (1.0 + 1.0 + 4.0 * 100.0) / 4.0;
        let w = 1.0;
        let expected = ((t - w) / 1.0) / (w / 2.0);
        assert_relative_eq!(score.score, expected, max_relative = 1e-12);
        assert!(!score.degenerate);
    }

    #[test]
    fn ch_flags_zero_within_dispersion() {
        let m = DissimilarityMatrix::from_condensed(
            vec![1, 2, 3, 4],
            vec![0.0, 5.0, 5.0, 5.0, 5.0, 0.0],
        )
        .unwrap();
        let score = calinski_harabasz(&m, &[vec![1, 2], vec![3, 4]]).unwrap();
        assert!(score.degenerate);
        assert!(score.score.is_infinite());
    }

    #[test]
    fn ch_rejects_bad_partitions() {
        let m = toy_matrix();
        // k out of range.
        assert!(calinski_harabasz(&m, &[vec![1, 2, 3, 4]]).is_err());
        // Missing an observation.
        assert!(calinski_harabasz(&m, &[vec![1, 2], vec![3]]).is_err());
        // Duplicated observation.
        assert!(calinski_harabasz(&m, &[vec![1, 2], vec![2, 3, 4]]).is_err());
        // Unknown observation.
        assert!(calinski_harabasz(&m, &[vec![1, 2], vec![3, 9]]).is_err());
    }

    /// Builds a two-plateau value field split at the azimuth meridian:
    /// viewpoints with phi < pi get `high`, the rest `low`.
    fn plateau_field(vs: &ViewpointSet, high: f64, low: f64) -> Vec<ViewpointValue> {
        vs.viewpoints()
            .iter()
            .map(|v| {
                let val = if v.phi < PI { high } else { low };
                ViewpointValue {
                    affordance: Affordance::Reachability,
                    viewpoint: v.id,
                    value: val,
                    perf_mean: val,
                    perf_std: 0.0,
                    n: 3,
                }
            })
            .collect()
    }

    #[test]
    fn planted_plateaus_are_recovered_exactly() {
        let vs = default_lattice(1.5).unwrap();
        let values = plateau_field(&vs, 4.0, 0.0);
        let points = crate::valuation::make_sample_points(&values, &vs).unwrap();
        let detail =
            cluster_value_field(&points, &values, &vs, &Weights::default(), DEFAULT_K_MAX).unwrap();
        assert_eq!(detail.set.k(), 2);
        let expected_high: Vec<u32> = vs
            .viewpoints()
            .iter()
            .filter(|v| v.phi < PI)
            .map(|v| v.id)
            .collect();
        assert_eq!(detail.set.best().members, expected_high);
        assert!(detail.set.best().value > detail.set.manifolds()[1].value);
        // Centroid of the high plateau points into its own azimuth half.
        let c = detail.set.best().centroid;
        assert!(c.phi > 0.0 && c.phi < PI, "centroid phi {}", c.phi);
    }

    #[test]
    fn manifold_set_invariants_hold_after_clustering() {
        let vs = default_lattice(1.5).unwrap();
        let values = plateau_field(&vs, 1.0, -1.0);
        let points = crate::valuation::make_sample_points(&values, &vs).unwrap();
        let set = build_manifold_set(&points, &values, &vs, &Weights::default(), 10).unwrap();
        let mut covered = BTreeSet::new();
        let mut area = 0.0;
        for (i, m) in set.manifolds().iter().enumerate() {
            assert_eq!(m.rank as usize, i + 1);
            assert!(!m.members.is_empty());
            for id in &m.members {
                assert!(covered.insert(*id), "viewpoint {id} in two manifolds");
            }
            area += m.area_fraction;
            assert_eq!(m.n_perf_samples, m.members.len() * 3);
        }
        assert_eq!(covered.len(), 30);
        assert_relative_eq!(area, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn manifold_set_round_trips_through_json() {
        let vs = default_lattice(1.5).unwrap();
        let values = plateau_field(&vs, 4.0, 0.0);
        let points = crate::valuation::make_sample_points(&values, &vs).unwrap();
        let set = build_manifold_set(&points, &values, &vs, &Weights::default(), 10).unwrap();
        let mut buf = Vec::new();
        set.to_writer(&mut buf).unwrap();
        let back = ManifoldSet::from_reader(buf.as_slice()).unwrap();
        assert_eq!(back.k(), set.k());
        assert_eq!(back.affordance(), set.affordance());
        for (a, b) in set.manifolds().iter().zip(back.manifolds()) {
            assert_eq!(a.rank, b.rank);
            assert_eq!(a.members, b.members);
            assert_eq!(a.value, b.value);
            assert_eq!(a.centroid.theta, b.centroid.theta);
            assert_eq!(a.centroid.phi, b.centroid.phi);
            assert_eq!(a.centroid.radius, b.centroid.radius);
        }
    }

    #[test]
    fn manifold_set_validation_rejects_overlap_and_rank_gaps() {
        let vs = default_lattice(1.5).unwrap();
        let centroid = *vs.get(1).unwrap();
        let mk = |rank: u32, value: f64, members: Vec<u32>| Manifold {
            rank,
            value,
            members,
            centroid,
            area_fraction: 0.1,
            n_perf_samples: 1,
        };
        // Overlapping members.
        assert!(ManifoldSet::new(
            Affordance::Reachability,
            Weights::default(),
            vec![mk(1, 1.0, vec![1, 2]), mk(2, 0.5, vec![2, 3])],
        )
        .is_err());
        // Rank gap.
        assert!(ManifoldSet::new(
            Affordance::Reachability,
            Weights::default(),
            vec![mk(1, 1.0, vec![1]), mk(3, 0.5, vec![2])],
        )
        .is_err());
        // Value inversion.
        assert!(ManifoldSet::new(
            Affordance::Reachability,
            Weights::default(),
            vec![mk(1, 0.1, vec![1]), mk(2, 0.5, vec![2])],
        )
        .is_err());
    }

    #[test]
    fn reaches_ground_flags_horizon_members() {
        let vs = default_lattice(1.5).unwrap();
        let values = plateau_field(&vs, 4.0, 0.0);
        let points = crate::valuation::make_sample_points(&values, &vs).unwrap();
        let set = build_manifold_set(&points, &values, &vs, &Weights::default(), 10).unwrap();
        // Both azimuth halves contain horizon-ring viewpoints.
        assert!(set.manifolds().iter().all(|m| m.reaches_ground(&vs)));
    }

    proptest! {
        /// Cutting at any k yields a valid partition of the leaves.
        #[test]
        fn any_cut_partitions_the_leaves(
            distances in proptest::collection::vec(0.1f64..10.0, 28),
            k in 1usize..8,
        ) {
            let m = DissimilarityMatrix::from_condensed(
                (1..=8).collect(),
                distances,
            ).unwrap();
            let tree = upgma_tree(&m);
            let partition = cut_tree(&tree, k).unwrap();
            prop_assert_eq!(partition.len(), k);
            let mut all: Vec<u32> = partition.into_iter().flatten().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (1..=8).collect::<Vec<u32>>());
        }

        /// Merge heights recomputed from the original matrix agree with the
        /// incrementally updated ones.
        #[test]
        fn linkage_heights_match_direct_averages(
            distances in proptest::collection::vec(0.1f64..10.0, 21),
        ) {
            let ids: Vec<u32> = (1..=7).collect();
            let m = DissimilarityMatrix::from_condensed(ids, distances).unwrap();
            let tree = upgma_tree(&m);
            let pos: BTreeMap<u32, usize> =
                m.ids().iter().enumerate().map(|(i, &id)| (id, i)).collect();
            let mut members: BTreeMap<u32, Vec<u32>> =
                m.ids().iter().map(|&id| (id, vec![id])).collect();
            for step in tree.steps() {
                let left = members.remove(&step.left).unwrap();
                let right = members.remove(&step.right).unwrap();
                let mut s = 0.0;
                for a in &left {
                    for b in &right {
                        s += m.get(pos[a], pos[b]);
                    }
                }
                let direct = s / (left.len() * right.len()) as f64;
                prop_assert!((direct - step.height).abs() <= 1e-9,
                    "direct {direct} vs height {}", step.height);
                let mut merged = left;
                merged.extend(right);
                members.insert(step.id, merged);
            }
            prop_assert!(tree.monotonic());
        }
    }
}
