//! Reference best-versus-worst manifold summaries from the original user
//! study, shipped so an installation can verify its statistics engine
//! against the published numbers at any time.

use serde::{Deserialize, Serialize};

use crate::affordance::Affordance;
use crate::error::Result;
use crate::stats::{cohens_d, welch_t_left, GroupSummary};

/// Published per-affordance summaries of normalized performance in the best
/// and worst manifolds, with the expected test outcomes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaselineComparison {
    pub affordance: Affordance,
    pub best: GroupSummary,
    pub worst: GroupSummary,
    pub expected_t: f64,
    pub expected_p: f64,
    pub expected_d: f64,
}

/// The four reference rows, in canonical affordance order.
pub fn comparisons() -> Vec<BaselineComparison> {
    fn g(n: usize, mean: f64, std: f64) -> GroupSummary {
        GroupSummary { n, mean, std }
    }
    vec![
        BaselineComparison {
            affordance: Affordance::Reachability,
            best: g(109, 0.51582, 0.25781),
            worst: g(33, 0.093026, 0.65474),
            expected_t: -3.6254,
            expected_p: 4.5367e-4,
            expected_d: 1.0943,
        },
        BaselineComparison {
            affordance: Affordance::Passability,
            best: g(34, 0.50487, 0.13714),
            worst: g(12, -0.49656, 0.84357),
            expected_t: -4.0933,
            expected_p: 8.565e-4,
            expected_d: 2.2854,
        },
        BaselineComparison {
            affordance: Affordance::Manipulability,
            best: g(5, 0.27369, 0.097376),
            worst: g(6, -1.5455, 1.4138),
            expected_t: -3.1429,
            expected_p: 1.2595e-2,
            expected_d: 1.7231,
        },
        BaselineComparison {
            affordance: Affordance::Traversability,
            best: g(29, 0.25833, 0.2644),
            worst: g(14, -0.96995, 1.2145),
            expected_t: -3.7416,
            expected_p: 1.1469e-3,
            expected_d: 1.7109,
        },
    ]
}

/// One recomputed row diffed against its expectations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaselineCheckRow {
    pub affordance: Affordance,
    pub t: f64,
    pub p: f64,
    pub d: f64,
    pub delta_t: f64,
    pub delta_d: f64,
    pub rel_delta_p: f64,
    pub ok: bool,
}

/// Recomputes t, p, and d from the stored summaries and flags any row whose
/// deviation exceeds the given tolerances (absolute for t and d, relative
/// for p).
pub fn check(
    rows: &[BaselineComparison],
    tol_t: f64,
    tol_d: f64,
    rel_tol_p: f64,
) -> Result<Vec<BaselineCheckRow>> {
    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        let test = welch_t_left(&row.best, &row.worst)?;
        let d = cohens_d(&row.best, &row.worst)?;
        let delta_t = (test.statistic - row.expected_t).abs();
        let delta_d = (d - row.expected_d).abs();
        let rel_delta_p = (test.p_value - row.expected_p).abs() / row.expected_p;
        out.push(BaselineCheckRow {
            affordance: row.affordance,
            t: test.statistic,
            p: test.p_value,
            d,
            delta_t,
            delta_d,
            rel_delta_p,
            ok: delta_t <= tol_t && delta_d <= tol_d && rel_delta_p <= rel_tol_p,
        });
    }
    Ok(out)
}
