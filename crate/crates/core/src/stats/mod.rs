//! Statistical validation of viewpoint-value models: Welch comparisons of
//! the best and worst manifolds, one-way ANOVA across manifolds, interaction
//! ANOVA for unbalanced two-factor layouts, and relative improvement of raw
//! task measures.

pub mod dist;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;

use serde::{Deserialize, Serialize};

use crate::affordance::Affordance;
use crate::clustering::ManifoldSet;
use crate::error::{Error, Result};
use crate::trials::{PerformanceSample, TrialSet};

pub fn mean(xs: &[f64]) -> f64 {
    debug_assert!(!xs.is_empty());
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 in the denominator); zero for fewer than
/// two values.
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// Sufficient statistics of one sample group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
}

impl GroupSummary {
    pub fn from_samples(xs: &[f64]) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::Stats("cannot summarize an empty sample".into()));
        }
        Ok(GroupSummary {
            n: xs.len(),
            mean: mean(xs),
            std: sample_std(xs),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    WelchTLeft,
    OneWayAnova,
    TwoWayInteraction,
}

/// Outcome of a single hypothesis test. `df2` is present for F tests only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub kind: TestKind,
    pub statistic: f64,
    pub df1: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub df2: Option<f64>,
    pub p_value: f64,
}

/// Welch's unequal-variance t-test of whether `b`'s mean lies below `a`'s:
/// t = (b.mean - a.mean) / se with the Welch-Satterthwaite degrees of
/// freedom, p the left tail.
pub fn welch_t_left(a: &GroupSummary, b: &GroupSummary) -> Result<TestResult> {
    if a.n < 2 || b.n < 2 {
        return Err(Error::Stats(format!(
            "welch t needs at least two samples per group, got {} and {}",
            a.n, b.n
        )));
    }
    let va = a.std * a.std / a.n as f64;
    let vb = b.std * b.std / b.n as f64;
    if va + vb == 0.0 {
        return Err(Error::Stats(
            "welch t undefined: both groups have zero variance".into(),
        ));
    }
    let se = (va + vb).sqrt();
    let t = (b.mean - a.mean) / se;
    let df = (va + vb) * (va + vb) / (va * va / (a.n as f64 - 1.0) + vb * vb / (b.n as f64 - 1.0));
    Ok(TestResult {
        kind: TestKind::WelchTLeft,
        statistic: t,
        df1: df,
        df2: None,
        p_value: dist::t_cdf(t, df)?,
    })
}

/// Cohen's d with the pooled sample standard deviation: (a.mean - b.mean) /
/// s_p. Positive when `a` outperforms `b`.
pub fn cohens_d(a: &GroupSummary, b: &GroupSummary) -> Result<f64> {
    if a.n + b.n < 3 {
        return Err(Error::Stats(format!(
            "cohen's d needs at least three samples total, got {}",
            a.n + b.n
        )));
    }
    let pooled_var = ((a.n as f64 - 1.0) * a.std * a.std + (b.n as f64 - 1.0) * b.std * b.std)
        / (a.n + b.n - 2) as f64;
    if pooled_var == 0.0 {
        return Err(Error::Stats(
            "cohen's d undefined: pooled standard deviation is zero".into(),
        ));
    }
    Ok((a.mean - b.mean) / pooled_var.sqrt())
}

/// One-way fixed-effects ANOVA over `groups`.
pub fn one_way_anova(groups: &[Vec<f64>]) -> Result<TestResult> {
    let k = groups.len();
    if k < 2 {
        return Err(Error::Stats(format!(
            "ANOVA needs at least two groups, got {k}"
        )));
    }
    for (i, g) in groups.iter().enumerate() {
        if g.is_empty() {
            return Err(Error::Stats(format!("ANOVA group {i} is empty")));
        }
    }
    let n: usize = groups.iter().map(Vec::len).sum();
    if n <= k {
        return Err(Error::Stats(format!(
            "ANOVA needs more observations ({n}) than groups ({k})"
        )));
    }
    let all: Vec<f64> = groups.iter().flatten().copied().collect();
    let grand = mean(&all);
    let mut ss_between = 0.0;
    let mut ss_within = 0.0;
    for g in groups {
        let gm = mean(g);
        ss_between += g.len() as f64 * (gm - grand) * (gm - grand);
        ss_within += g.iter().map(|x| (x - gm) * (x - gm)).sum::<f64>();
    }
    let df1 = (k - 1) as f64;
    let df2 = (n - k) as f64;
    if ss_within == 0.0 && ss_between == 0.0 {
        return Err(Error::Stats(
            "ANOVA undefined: all responses are identical".into(),
        ));
    }
    let (f, p) = if ss_within == 0.0 {
        (f64::INFINITY, 0.0)
    } else {
        let f = (ss_between / df1) / (ss_within / df2);
        (f, dist::f_sf(f, df1, df2)?)
    };
    Ok(TestResult {
        kind: TestKind::OneWayAnova,
        statistic: f,
        df1,
        df2: Some(df2),
        p_value: p,
    })
}

/// Interaction test for an unbalanced two-factor layout, with empty cells
/// allowed. The interaction sum of squares is the residual difference
/// between the additive model (least squares on main effects) and the full
/// cell-means model; its degrees of freedom are the rank difference, which
/// for a connected design is (#filled cells) - (r + c - 1).
pub fn two_way_interaction_anova<A, B>(
    data: &[(f64, A, B)],
    factor_a: &str,
    factor_b: &str,
) -> Result<TestResult>
where
    A: Ord + Clone + Display,
    B: Ord + Clone + Display,
{
    let levels_a: Vec<A> = {
        let s: BTreeSet<A> = data.iter().map(|(_, a, _)| a.clone()).collect();
        s.into_iter().collect()
    };
    let levels_b: Vec<B> = {
        let s: BTreeSet<B> = data.iter().map(|(_, _, b)| b.clone()).collect();
        s.into_iter().collect()
    };
    let (r, c) = (levels_a.len(), levels_b.len());
    if r < 2 {
        return Err(Error::Stats(format!(
            "factor {factor_a} has fewer than two levels"
        )));
    }
    if c < 2 {
        return Err(Error::Stats(format!(
            "factor {factor_b} has fewer than two levels"
        )));
    }
    let a_index: BTreeMap<&A, usize> = levels_a.iter().zip(0..).collect();
    let b_index: BTreeMap<&B, usize> = levels_b.iter().zip(0..).collect();
    let mut cells: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    for (y, a, b) in data {
        if !y.is_finite() {
            return Err(Error::Stats(format!("non-finite response {y}")));
        }
        cells.entry((a_index[a], b_index[b])).or_default().push(*y);
    }

    check_connected(&cells, r, c, &levels_a, &levels_b, factor_a, factor_b)?;

    let n = data.len();
    let rank_full = cells.len();
    let rank_additive = r + c - 1;
    let df_int = rank_full as f64 - rank_additive as f64;
    let df_err = n as f64 - rank_full as f64;
    if df_int < 1.0 {
        return Err(Error::Stats(
            "interaction has no degrees of freedom: the additive model already \
             saturates the filled cells"
                .into(),
        ));
    }
    if df_err < 1.0 {
        return Err(Error::Stats(
            "no residual degrees of freedom: every filled cell has a single \
             observation"
                .into(),
        ));
    }

    let mut rss_full = 0.0;
    for vals in cells.values() {
        let m = mean(vals);
        rss_full += vals.iter().map(|y| (y - m) * (y - m)).sum::<f64>();
    }
    if rss_full == 0.0 {
        return Err(Error::Stats(
            "interaction F undefined: zero residual variance in the cell-means \
             model"
                .into(),
        ));
    }

    let beta = fit_additive(&cells, r, c)?;
    let mut rss_additive = 0.0;
    for (&(ai, bi), vals) in &cells {
        let pred = beta[0]
            + if ai > 0 { beta[ai] } else { 0.0 }
            + if bi > 0 { beta[r - 1 + bi] } else { 0.0 };
        rss_additive += vals.iter().map(|y| (y - pred) * (y - pred)).sum::<f64>();
    }
    let ss_int = (rss_additive - rss_full).max(0.0);

    let f = (ss_int / df_int) / (rss_full / df_err);
    Ok(TestResult {
        kind: TestKind::TwoWayInteraction,
        statistic: f,
        df1: df_int,
        df2: Some(df_err),
        p_value: dist::f_sf(f, df_int, df_err)?,
    })
}

/// Errors if the bipartite graph of filled cells is disconnected, naming a
/// level cut off from the rest of the design.
fn check_connected<A: Display, B: Display>(
    cells: &BTreeMap<(usize, usize), Vec<f64>>,
    r: usize,
    c: usize,
    levels_a: &[A],
    levels_b: &[B],
    factor_a: &str,
    factor_b: &str,
) -> Result<()> {
    // Nodes 0..r are A levels, r..r+c are B levels.
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); r + c];
    for &(ai, bi) in cells.keys() {
        adj[ai].push(r + bi);
        adj[r + bi].push(ai);
    }
    let mut seen = vec![false; r + c];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        let label = if i < r {
            format!("{factor_a}={}", levels_a[i])
        } else {
            format!("{factor_b}={}", levels_b[i - r])
        };
        return Err(Error::DisconnectedLevel(label));
    }
    Ok(())
}

/// Least-squares fit of intercept + A main effects + B main effects via the
/// normal equations. Reference coding drops the first level of each factor,
/// so the Gram matrix is positive definite whenever the design is connected.
fn fit_additive(
    cells: &BTreeMap<(usize, usize), Vec<f64>>,
    r: usize,
    c: usize,
) -> Result<Vec<f64>> {
    let p = r + c - 1;
    let col_a = |ai: usize| ai; // valid for ai >= 1
    let col_b = |bi: usize| r - 1 + bi; // valid for bi >= 1
    let mut g = vec![vec![0.0f64; p]; p];
    let mut rhs = vec![0.0f64; p];
    for (&(ai, bi), vals) in cells {
        let n = vals.len() as f64;
        let sum: f64 = vals.iter().sum();
        let mut cols = vec![0usize];
        if ai > 0 {
            cols.push(col_a(ai));
        }
        if bi > 0 {
            cols.push(col_b(bi));
        }
        for &i in &cols {
            rhs[i] += sum;
            for &j in &cols {
                g[i][j] += n;
            }
        }
    }
    cholesky_solve(g, rhs)
        .ok_or_else(|| Error::Stats("additive two-way design is rank deficient".into()))
}

/// Solves g x = rhs for symmetric positive definite g, in place. Returns
/// None when a pivot collapses, i.e. the system is singular.
#[allow(clippy::needless_range_loop)]
fn cholesky_solve(mut g: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let p = g.len();
    let scale = g
        .iter()
        .enumerate()
        .map(|(i, row)| row[i].abs())
        .fold(0.0f64, f64::max)
        .max(1.0);
    for j in 0..p {
        let mut d = g[j][j];
        for k in 0..j {
            d -= g[j][k] * g[j][k];
        }
        if d <= 1e-12 * scale {
            return None;
        }
        let d = d.sqrt();
        g[j][j] = d;
        for i in (j + 1)..p {
            let mut v = g[i][j];
            for k in 0..j {
                v -= g[i][k] * g[j][k];
            }
            g[i][j] = v / d;
        }
    }
    // Forward substitution: L z = rhs.
    for i in 0..p {
        for k in 0..i {
            rhs[i] -= g[i][k] * rhs[k];
        }
        rhs[i] /= g[i][i];
    }
    // Back substitution: L^T x = z.
    for i in (0..p).rev() {
        for k in (i + 1)..p {
            rhs[i] -= g[k][i] * rhs[k];
        }
        rhs[i] /= g[i][i];
    }
    Some(rhs)
}

/// Z-scores `performance` within each affordance so different affordances
/// become comparable in cross-affordance tests. Time and error z-scores are
/// untouched.
pub fn normalize_within_affordance(
    samples: &[PerformanceSample],
) -> Result<Vec<PerformanceSample>> {
    let mut by_affordance: BTreeMap<Affordance, Vec<f64>> = BTreeMap::new();
    for s in samples {
        by_affordance
            .entry(s.affordance)
            .or_default()
            .push(s.performance);
    }
    let mut scale: BTreeMap<Affordance, (f64, f64)> = BTreeMap::new();
    for (a, vals) in &by_affordance {
        let (m, sd) = (mean(vals), sample_std(vals));
        if sd == 0.0 {
            return Err(Error::Stats(format!(
                "{a}: performance values have zero spread, normalization undefined"
            )));
        }
        scale.insert(*a, (m, sd));
    }
    Ok(samples
        .iter()
        .map(|s| {
            let (m, sd) = scale[&s.affordance];
            PerformanceSample {
                performance: (s.performance - m) / sd,
                ..s.clone()
            }
        })
        .collect())
}

/// Which raw trial measure an improvement refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Time,
    Errors,
}

impl Metric {
    fn of(&self, time_s: f64, errors: u32) -> f64 {
        match self {
            Metric::Time => time_s,
            Metric::Errors => f64::from(errors),
        }
    }
}

/// Relative improvement of a raw measure when moving from the worst-side
/// manifold to the best-side one, computed over the subjects who saw both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Improvement {
    pub metric: Metric,
    pub best_side_mean: f64,
    pub worst_side_mean: f64,
    /// (worst - best) / worst: the fraction of the worst-side measure saved
    /// by observing from the best manifold instead.
    pub improvement: f64,
    pub n_subjects: usize,
}

/// Mean of `metric` per subject over that subject's kept trials at the given
/// member viewpoints.
fn subject_means(
    trials: &TrialSet,
    affordance: Affordance,
    members: &[u32],
    metric: Metric,
) -> BTreeMap<u32, f64> {
    let members: BTreeSet<u32> = members.iter().copied().collect();
    let mut per_subject: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for r in trials.records() {
        if r.affordance == affordance && members.contains(&r.viewpoint) {
            per_subject
                .entry(r.subject)
                .or_default()
                .push(metric.of(r.time_s, r.errors));
        }
    }
    per_subject
        .into_iter()
        .map(|(s, v)| (s, mean(&v)))
        .collect()
}

/// Relative improvement core: both sides zero means nothing to improve;
/// a zero worst side with a nonzero best side has no meaningful ratio.
pub fn improvement_from_means(best_side: f64, worst_side: f64) -> Result<f64> {
    if worst_side == 0.0 {
        if best_side == 0.0 {
            return Ok(0.0);
        }
        return Err(Error::Stats(
            "relative improvement undefined: worst-side mean is zero while the \
             best side is not"
                .into(),
        ));
    }
    Ok((worst_side - best_side) / worst_side)
}

/// Paired comparison of raw measures between two manifolds of one
/// affordance. Subject means are taken first, then averaged across the
/// subjects present on both sides, so no subject dominates either side.
pub fn relative_improvement(
    trials: &TrialSet,
    affordance: Affordance,
    best_members: &[u32],
    worst_members: &[u32],
    metric: Metric,
) -> Result<Improvement> {
    let best = subject_means(trials, affordance, best_members, metric);
    let worst = subject_means(trials, affordance, worst_members, metric);
    let shared: Vec<u32> = best
        .keys()
        .filter(|s| worst.contains_key(s))
        .copied()
        .collect();
    if shared.is_empty() {
        return Err(Error::Stats(format!(
            "{affordance}: no subject has trials in both manifolds, improvement \
             undefined"
        )));
    }
    let best_side: Vec<f64> = shared.iter().map(|s| best[s]).collect();
    let worst_side: Vec<f64> = shared.iter().map(|s| worst[s]).collect();
    let best_side_mean = mean(&best_side);
    let worst_side_mean = mean(&worst_side);
    Ok(Improvement {
        metric,
        best_side_mean,
        worst_side_mean,
        improvement: improvement_from_means(best_side_mean, worst_side_mean)?,
        n_subjects: shared.len(),
    })
}

/// Result slot that records a failed computation instead of aborting the
/// whole report.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Outcome<T> {
    Ok(T),
    Err { error: String },
}

impl<T> Outcome<T> {
    pub fn from_result(r: Result<T>) -> Self {
        match r {
            Result::Ok(v) => Outcome::Ok(v),
            Result::Err(e) => Outcome::Err {
                error: e.to_string(),
            },
        }
    }

    pub fn as_ok(&self) -> Option<&T> {
        match self {
            Outcome::Ok(v) => Some(v),
            Outcome::Err { .. } => None,
        }
    }
}

/// One side of the best-versus-worst manifold comparison. `substituted` is
/// set when the nominal extreme lacked enough samples and a neighbor in rank
/// took its place.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtremeSide {
    pub rank: u32,
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub substituted: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtremeComparison {
    pub best: ExtremeSide,
    pub worst: ExtremeSide,
    pub test: TestResult,
    pub effect_size: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImprovementReport {
    #[serde(flatten)]
    pub result: Improvement,
    pub best_rank: u32,
    pub worst_rank: u32,
    /// True when the nominal worst manifold shared no subjects with the best
    /// and a better-ranked manifold stood in for it.
    pub substituted_worst: bool,
}

/// Per-affordance slice of the validation report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AffordanceStats {
    pub n_manifolds: usize,
    pub n_samples: usize,
    /// Performance sample count per manifold, in rank order.
    pub manifold_sample_counts: Vec<usize>,
    /// One-way ANOVA of normalized performance across manifolds.
    pub manifold_anova: Outcome<TestResult>,
    pub extremes: Outcome<ExtremeComparison>,
    pub time_improvement: Outcome<ImprovementReport>,
    pub error_improvement: Outcome<ImprovementReport>,
}

/// Full statistical validation of a set of manifold models.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatsReport {
    pub alpha: f64,
    pub per_affordance: BTreeMap<Affordance, AffordanceStats>,
    /// Interaction of affordance and viewpoint on normalized performance:
    /// significance here means viewpoint effects genuinely differ by
    /// affordance, justifying separate models.
    pub affordance_viewpoint_interaction: Outcome<TestResult>,
    /// Interaction of robot and viewpoint: non-significance supports pooling
    /// robots into one model per affordance.
    pub robot_viewpoint_interaction: Outcome<TestResult>,
}

/// Runs the whole validation battery. Individual test failures are recorded
/// in place; only an invalid `alpha` fails the call.
pub fn validate_model(
    sets: &BTreeMap<Affordance, ManifoldSet>,
    samples: &[PerformanceSample],
    trials: &TrialSet,
    alpha: f64,
) -> Result<StatsReport> {
    if !(alpha.is_finite() && 0.0 < alpha && alpha < 1.0) {
        return Err(Error::BadConfig(format!(
            "significance level {alpha} outside (0, 1)"
        )));
    }

    // Normalize per affordance; a failure poisons only the tests that need
    // that affordance.
    let mut normalized: BTreeMap<Affordance, Result<Vec<PerformanceSample>>> = BTreeMap::new();
    for a in Affordance::ALL {
        let subset: Vec<PerformanceSample> = samples
            .iter()
            .filter(|s| s.affordance == a)
            .cloned()
            .collect();
        if subset.is_empty() {
            continue;
        }
        normalized.insert(a, normalize_within_affordance(&subset));
    }

    let mut per_affordance = BTreeMap::new();
    for (a, set) in sets {
        per_affordance.insert(*a, affordance_stats(*a, set, &normalized, trials, alpha));
    }

    let pool: Result<Vec<PerformanceSample>> = normalized
        .iter()
        .map(|(a, r)| match r {
            Result::Ok(v) => Result::Ok(v.clone()),
            Result::Err(e) => Result::Err(Error::Stats(format!("{a}: {e}"))),
        })
        .collect::<Result<Vec<Vec<PerformanceSample>>>>()
        .map(|vs| vs.into_iter().flatten().collect());

    let (av_interaction, rv_interaction) = match &pool {
        Result::Ok(pool) => {
            let av: Vec<(f64, &'static str, u32)> = pool
                .iter()
                .map(|s| (s.performance, s.affordance.as_str(), s.viewpoint))
                .collect();
            let rv: Vec<(f64, String, u32)> = pool
                .iter()
                .map(|s| (s.performance, s.robot.clone(), s.viewpoint))
                .collect();
            (
                Outcome::from_result(two_way_interaction_anova(&av, "affordance", "viewpoint")),
                Outcome::from_result(two_way_interaction_anova(&rv, "robot", "viewpoint")),
            )
        }
        Result::Err(e) => {
            let msg = e.to_string();
            (
                Outcome::Err { error: msg.clone() },
                Outcome::Err { error: msg },
            )
        }
    };

    Ok(StatsReport {
        alpha,
        per_affordance,
        affordance_viewpoint_interaction: av_interaction,
        robot_viewpoint_interaction: rv_interaction,
    })
}

fn affordance_stats(
    affordance: Affordance,
    set: &ManifoldSet,
    normalized: &BTreeMap<Affordance, Result<Vec<PerformanceSample>>>,
    trials: &TrialSet,
    alpha: f64,
) -> AffordanceStats {
    let k = set.manifolds().len();
    let fail = |msg: String| AffordanceStats {
        n_manifolds: k,
        n_samples: 0,
        manifold_sample_counts: vec![0; k],
        manifold_anova: Outcome::Err { error: msg.clone() },
        extremes: Outcome::Err { error: msg.clone() },
        time_improvement: Outcome::Err { error: msg.clone() },
        error_improvement: Outcome::Err { error: msg },
    };

    let samples = match normalized.get(&affordance) {
        Some(Result::Ok(s)) => s,
        Some(Result::Err(e)) => return fail(e.to_string()),
        None => return fail(format!("{affordance}: no performance samples")),
    };

    // Per-manifold normalized performance values, in rank order.
    let mut member_rank: BTreeMap<u32, usize> = BTreeMap::new();
    for (i, m) in set.manifolds().iter().enumerate() {
        for &vp in &m.members {
            member_rank.insert(vp, i);
        }
    }
    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); k];
    for s in samples {
        if let Some(&i) = member_rank.get(&s.viewpoint) {
            groups[i].push(s.performance);
        }
    }
    let counts: Vec<usize> = groups.iter().map(Vec::len).collect();

    let anova_groups: Vec<Vec<f64>> = groups.iter().filter(|g| !g.is_empty()).cloned().collect();
    let manifold_anova = Outcome::from_result(one_way_anova(&anova_groups));

    let extremes = Outcome::from_result(extreme_comparison(set, &groups, alpha));

    let (time_improvement, error_improvement) = improvements(affordance, set, trials);

    AffordanceStats {
        n_manifolds: k,
        n_samples: samples.len(),
        manifold_sample_counts: counts,
        manifold_anova,
        extremes,
        time_improvement,
        error_improvement,
    }
}

/// Best and worst manifolds with at least two samples each, compared by
/// Welch's left-tailed t-test and Cohen's d. When a nominal extreme has
/// fewer than two samples its rank neighbor substitutes, and the side is
/// flagged.
fn extreme_comparison(
    set: &ManifoldSet,
    groups: &[Vec<f64>],
    alpha: f64,
) -> Result<ExtremeComparison> {
    let k = groups.len();
    let best_idx = (0..k)
        .find(|&i| groups[i].len() >= 2)
        .ok_or_else(|| Error::Stats("no manifold has two or more samples".into()))?;
    let worst_idx = (0..k)
        .rev()
        .find(|&i| groups[i].len() >= 2)
        .ok_or_else(|| Error::Stats("no manifold has two or more samples".into()))?;
    if best_idx >= worst_idx {
        return Err(Error::Stats(
            "fewer than two manifolds have enough samples to compare".into(),
        ));
    }
    let best = GroupSummary::from_samples(&groups[best_idx])?;
    let worst = GroupSummary::from_samples(&groups[worst_idx])?;
    let test = welch_t_left(&best, &worst)?;
    let effect_size = cohens_d(&best, &worst)?;
    let significant = test.p_value < alpha;
    let rank = |i: usize| set.manifolds()[i].rank;
    Ok(ExtremeComparison {
        best: ExtremeSide {
            rank: rank(best_idx),
            n: best.n,
            mean: best.mean,
            std: best.std,
            substituted: best_idx != 0,
        },
        worst: ExtremeSide {
            rank: rank(worst_idx),
            n: worst.n,
            mean: worst.mean,
            std: worst.std,
            substituted: worst_idx != k - 1,
        },
        test,
        effect_size,
        significant,
    })
}

/// Raw-measure improvements best-versus-worst. The worst side walks up the
/// ranking until some subject overlaps the best manifold; time and errors
/// share that choice since they come from the same trials.
fn improvements(
    affordance: Affordance,
    set: &ManifoldSet,
    trials: &TrialSet,
) -> (Outcome<ImprovementReport>, Outcome<ImprovementReport>) {
    let manifolds = set.manifolds();
    let k = manifolds.len();
    if k < 2 {
        let err = Outcome::Err {
            error: format!("{affordance}: need at least two manifolds, got {k}"),
        };
        return (err.clone(), err);
    }
    let best_members = &manifolds[0].members;
    let best_subjects: BTreeSet<u32> =
        subject_means(trials, affordance, best_members, Metric::Time)
            .into_keys()
            .collect();
    let worst_idx = (1..k).rev().find(|&i| {
        subject_means(trials, affordance, &manifolds[i].members, Metric::Time)
            .keys()
            .any(|s| best_subjects.contains(s))
    });
    let Some(worst_idx) = worst_idx else {
        let err = Outcome::Err {
            error: format!("{affordance}: no manifold shares subjects with the best one"),
        };
        return (err.clone(), err);
    };
    let report = |metric: Metric| {
        Outcome::from_result(
            relative_improvement(
                trials,
                affordance,
                best_members,
                &manifolds[worst_idx].members,
                metric,
            )
            .map(|result| ImprovementReport {
                result,
                best_rank: manifolds[0].rank,
                worst_rank: manifolds[worst_idx].rank,
                substituted_worst: worst_idx != k - 1,
            }),
        )
    };
    (report(Metric::Time), report(Metric::Errors))
}
