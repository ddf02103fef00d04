//! Independent oracle implementations the acceptance suite checks the
//! production code against. Each one recomputes from first principles with
//! no shared code paths.

/// One merge of the reference agglomeration: same shape as the production
/// steps, recomputed from scratch each round.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleStep {
    pub left: u32,
    pub right: u32,
    pub height: f64,
    pub id: u32,
    pub size: u32,
}

/// Reference average-linkage clustering. Keeps explicit member lists and
/// recomputes every inter-cluster average from the original matrix each
/// round (O(n^3) per merge), merging the closest pair with ties broken
/// toward the smallest (low id, high id) pair.
pub fn naive_upgma(ids: &[u32], dist: &[Vec<f64>]) -> Vec<OracleStep> {
    let n = ids.len();
    let mut clusters: Vec<(u32, Vec<usize>)> = ids
        .iter()
        .enumerate()
        .map(|(i, &id)| (id, vec![i]))
        .collect();
    let mut next_id = ids.iter().copied().max().unwrap_or(0) + 1;
    let mut steps = Vec::with_capacity(n - 1);
    while clusters.len() > 1 {
        let mut best: Option<(f64, u32, u32, usize, usize)> = None;
        for i in 0..clusters.len() {
            for j in (i + 1)..clusters.len() {
                let mut sum = 0.0;
                for &a in &clusters[i].1 {
                    for &b in &clusters[j].1 {
                        sum += dist[a][b];
                    }
                }
                let avg = sum / (clusters[i].1.len() * clusters[j].1.len()) as f64;
                let (lo, hi) = if clusters[i].0 < clusters[j].0 {
                    (clusters[i].0, clusters[j].0)
                } else {
                    (clusters[j].0, clusters[i].0)
                };
                let better = match &best {
                    None => true,
                    Some((bd, blo, bhi, _, _)) => {
                        avg < *bd || (avg == *bd && (lo, hi) < (*blo, *bhi))
                    }
                };
                if better {
                    best = Some((avg, lo, hi, i, j));
                }
            }
        }
        let (height, lo, hi, i, j) = best.expect("two clusters remain");
        let (_, members_j) = clusters.remove(j);
        clusters[i].1.extend(members_j);
        clusters[i].0 = next_id;
        steps.push(OracleStep {
            left: lo,
            right: hi,
            height,
            id: next_id,
            size: clusters[i].1.len() as u32,
        });
        next_id += 1;
    }
    steps
}

/// Classical variance-ratio cluster validity index for 2-D points:
/// between-cluster dispersion around the grand centroid over within-cluster
/// dispersion around each cluster centroid.
pub fn classical_ch(points: &[(f64, f64)], partition: &[Vec<usize>]) -> f64 {
    let n = points.len();
    let k = partition.len();
    let centroid = |members: &[usize]| -> (f64, f64) {
        let m = members.len() as f64;
        let (sx, sy) = members.iter().fold((0.0, 0.0), |(sx, sy), &i| {
            (sx + points[i].0, sy + points[i].1)
        });
        (sx / m, sy / m)
    };
    let grand = centroid(&(0..n).collect::<Vec<_>>());
    let mut within = 0.0;
    let mut between = 0.0;
    for members in partition {
        let c = centroid(members);
        for &i in members {
            let (dx, dy) = (points[i].0 - c.0, points[i].1 - c.1);
            within += dx * dx + dy * dy;
        }
        let (dx, dy) = (c.0 - grand.0, c.1 - grand.1);
        between += members.len() as f64 * (dx * dx + dy * dy);
    }
    (between / (k - 1) as f64) / (within / (n - k) as f64)
}

/// Reference robust rejection: flag values farther from the group median
/// than threshold * scale * MAD, with groups of one or two exempt.
pub fn brute_mad_mask(values: &[f64], threshold: f64, scale: f64) -> Vec<bool> {
    if values.len() <= 2 {
        return vec![false; values.len()];
    }
    let median = |xs: &[f64]| -> f64 {
        let mut sorted = xs.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mid = sorted.len() / 2;
        if sorted.len() % 2 == 1 {
            sorted[mid]
        } else {
            (sorted[mid - 1] + sorted[mid]) / 2.0
        }
    };
    let med = median(values);
    let deviations: Vec<f64> = values.iter().map(|v| (v - med).abs()).collect();
    let bound = threshold * scale * median(&deviations);
    deviations.iter().map(|d| *d > bound).collect()
}
