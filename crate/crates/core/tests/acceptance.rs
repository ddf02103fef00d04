//! Acceptance gate: one test per shipped criterion. Every test prints a
//! single `criterion NN PASS` line with the measured figures on success; a
//! failing assertion is the corresponding FAIL record. Tolerances are pinned
//! in the assertions, not configurable.

// Index loops fill triangular matrices throughout; iterator forms obscure them.
#![allow(clippy::needless_range_loop)]

mod common;

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::process::Command;
use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{LogNormal, StandardNormal};
use vantage::clustering::{
    calinski_harabasz, cluster_value_field, upgma_tree, DissimilarityMatrix,
};
use vantage::geometry::{area_fraction, default_lattice, orthodromic_distance};
use vantage::pipeline::{self, PipelineConfig};
use vantage::stats::{
    cohens_d, improvement_from_means, one_way_anova, two_way_interaction_anova, welch_t_left,
    GroupSummary,
};
use vantage::synth::SyntheticSpec;
use vantage::trials::{TrialRecord, TrialSet, Weights};
use vantage::valuation::{make_sample_points, ViewpointValue};
use vantage::Affordance;

const RADIUS_M: f64 = 1.5;

/// Published per-affordance best/worst group summaries with the expected
/// left-tailed Welch statistics and pooled effect sizes.
struct PublishedCase {
    name: &'static str,
    best: GroupSummary,
    worst: GroupSummary,
    t: f64,
    p: f64,
    d: f64,
}

fn published_cases() -> [PublishedCase; 4] {
    [
        PublishedCase {
            name: "reachability",
            best: GroupSummary {
                n: 109,
                mean: 0.51582,
                std: 0.25781,
            },
            worst: GroupSummary {
                n: 33,
                mean: 0.093026,
                std: 0.65474,
            },
            t: -3.6254,
            p: 4.5367e-4,
            d: 1.0943,
        },
        PublishedCase {
            name: "passability",
            best: GroupSummary {
                n: 34,
                mean: 0.50487,
                std: 0.13714,
            },
            worst: GroupSummary {
                n: 12,
                mean: -0.49656,
                std: 0.84357,
            },
            t: -4.0933,
            p: 8.565e-4,
            d: 2.2854,
        },
        PublishedCase {
            name: "manipulability",
            best: GroupSummary {
                n: 5,
                mean: 0.27369,
                std: 0.097376,
            },
            worst: GroupSummary {
                n: 6,
                mean: -1.5455,
                std: 1.4138,
            },
            t: -3.1429,
            p: 1.2595e-2,
            d: 1.7231,
        },
        PublishedCase {
            name: "traversability",
            best: GroupSummary {
                n: 29,
                mean: 0.25833,
                std: 0.2644,
            },
            worst: GroupSummary {
                n: 14,
                mean: -0.96995,
                std: 1.2145,
            },
            t: -3.7416,
            p: 1.1469e-3,
            d: 1.7109,
        },
    ]
}

#[test]
fn criterion_01_best_worst_statistics_rederive() {
    let start = Instant::now();
    let mut max_dt = 0f64;
    let mut max_dd = 0f64;
    let mut max_rp = 0f64;
    for case in published_cases() {
        let test = welch_t_left(&case.best, &case.worst)
            .unwrap_or_else(|e| panic!("criterion 01 FAIL: welch on {}: {e}", case.name));
        let d = cohens_d(&case.best, &case.worst)
            .unwrap_or_else(|e| panic!("criterion 01 FAIL: cohen on {}: {e}", case.name));
        let dt = (test.statistic - case.t).abs();
        let dd = (d - case.d).abs();
        let rp = (test.p_value - case.p).abs() / case.p;
        assert!(
            dt <= 1e-3,
            "criterion 01 FAIL: {} t {} vs {} (|delta| {dt:.2e} > 1e-3)",
            case.name,
            test.statistic,
            case.t
        );
        assert!(
            dd <= 1e-3,
            "criterion 01 FAIL: {} d {d} vs {} (|delta| {dd:.2e} > 1e-3)",
            case.name,
            case.d
        );
        assert!(
            rp <= 0.02,
            "criterion 01 FAIL: {} p {} vs {} (rel {rp:.2e} > 2%)",
            case.name,
            test.p_value,
            case.p
        );
        max_dt = max_dt.max(dt);
        max_dd = max_dd.max(dd);
        max_rp = max_rp.max(rp);
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 1.0,
        "criterion 01 FAIL: took {elapsed:?}, budget 1 s"
    );
    println!(
        "criterion 01 PASS: 4 affordances, max |dt| {max_dt:.1e}, max |dd| {max_dd:.1e}, \
         max rel dp {max_rp:.1e}, {elapsed:?}"
    );
}

#[test]
fn criterion_02_improvement_percentages() {
    let time_pairs = [
        (21.11, 24.58),
        (20.53, 26.74),
        (29.57, 48.84),
        (23.47, 57.02),
    ];
    let time_expected = [14.0, 23.0, 39.0, 59.0];
    let error_pairs = [(0.08, 0.613), (0.0, 1.2), (0.0, 0.5), (0.0, 5.0)];
    let error_expected = [87.0, 100.0, 100.0, 100.0];
    let check = |pairs: &[(f64, f64)], expected: &[f64], what: &str| {
        for ((best, worst), want) in pairs.iter().zip(expected) {
            let pct = improvement_from_means(*best, *worst)
                .unwrap_or_else(|e| panic!("criterion 02 FAIL: {what} ({best}, {worst}): {e}"))
                * 100.0;
            let rounded = pct.round();
            assert!(
                (rounded - want).abs() <= 1.0,
                "criterion 02 FAIL: {what} ({best}, {worst}) gives {rounded}%, expected {want}%"
            );
        }
    };
    check(&time_pairs, &time_expected, "time");
    check(&error_pairs, &error_expected, "errors");
    println!(
        "criterion 02 PASS: time improvements {{14, 23, 39, 59}}%, \
         error improvements {{87, 100, 100, 100}}% within 1 pp"
    );
}

#[test]
fn criterion_03_area_fractions_round_as_published() {
    let vs = default_lattice(RADIUS_M).expect("criterion 03 FAIL: lattice");
    let members_of = |ids: std::ops::RangeInclusive<u32>| ids.collect::<Vec<u32>>();
    let cases: [(Vec<u32>, f64); 4] = [
        (members_of(1..=23), 77.0),
        (members_of(24..=30), 23.0),
        (vec![5, 17], 7.0),
        (members_of(25..=30), 20.0),
    ];
    for (members, want) in &cases {
        let pct = (area_fraction(members, &vs) * 100.0).round();
        assert_eq!(
            pct,
            *want,
            "criterion 03 FAIL: {} of 30 members rounds to {pct}%, expected {want}%",
            members.len()
        );
    }
    println!("criterion 03 PASS: 23/7/2/6 members give 77/23/7/20 percent");
}

#[test]
fn criterion_04_linkage_matches_naive_oracle() {
    let start = Instant::now();
    let n = 30usize;
    let ids: Vec<u32> = (1..=n as u32).collect();
    let mut max_dh = 0f64;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut square = vec![vec![0.0f64; n]; n];
        let mut condensed = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                let d = rng.gen_range(0.1..10.0);
                square[i][j] = d;
                square[j][i] = d;
                condensed.push(d);
            }
        }
        let m = DissimilarityMatrix::from_condensed(ids.clone(), condensed)
            .expect("criterion 04 FAIL: matrix construction");
        let tree = upgma_tree(&m);
        let oracle = common::naive_upgma(&ids, &square);
        assert_eq!(
            tree.steps().len(),
            oracle.len(),
            "criterion 04 FAIL: seed {seed} step count"
        );
        for (step, want) in tree.steps().iter().zip(&oracle) {
            assert_eq!(
                (step.left, step.right, step.id, step.size),
                (want.left, want.right, want.id, want.size),
                "criterion 04 FAIL: seed {seed} merge sequence diverges"
            );
            let dh = (step.height - want.height).abs();
            assert!(
                dh <= 1e-9,
                "criterion 04 FAIL: seed {seed} height {} vs {} (|delta| {dh:.2e})",
                step.height,
                want.height
            );
            max_dh = max_dh.max(dh);
        }
    }
    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 10.0,
        "criterion 04 FAIL: took {elapsed:?}, budget 10 s"
    );
    println!(
        "criterion 04 PASS: 100 random 30-point matrices, max height delta {max_dh:.1e}, \
         {elapsed:?}"
    );
}

#[test]
fn criterion_05_ch_matches_classical_form() {
    let mut max_delta = 0f64;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n: usize = rng.gen_range(10..=50);
        let points: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)))
            .collect();
        let k: usize = rng.gen_range(2..=8.min(n - 1));
        // First k points seed the clusters so none is empty.
        let mut assignment: Vec<usize> = (0..n)
            .map(|i| if i < k { i } else { rng.gen_range(0..k) })
            .collect();
        assignment.shuffle(&mut rng);
        let mut by_index: Vec<Vec<usize>> = vec![Vec::new(); k];
        for (i, &c) in assignment.iter().enumerate() {
            by_index[c].push(i);
        }
        let by_id: Vec<Vec<u32>> = by_index
            .iter()
            .map(|members| members.iter().map(|&i| i as u32 + 1).collect())
            .collect();
        let mut condensed = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                let (dx, dy) = (points[i].0 - points[j].0, points[i].1 - points[j].1);
                condensed.push(dx.hypot(dy));
            }
        }
        let m = DissimilarityMatrix::from_condensed((1..=n as u32).collect(), condensed)
            .expect("criterion 05 FAIL: matrix construction");
        let ch = calinski_harabasz(&m, &by_id)
            .unwrap_or_else(|e| panic!("criterion 05 FAIL: seed {seed}: {e}"));
        assert!(!ch.degenerate, "criterion 05 FAIL: seed {seed} degenerate");
        let classical = common::classical_ch(&points, &by_index);
        let delta = (ch.score - classical).abs();
        assert!(
            delta <= 1e-9,
            "criterion 05 FAIL: seed {seed} dissimilarity CH {} vs classical {classical} \
             (|delta| {delta:.2e})",
            ch.score
        );
        max_delta = max_delta.max(delta);
    }
    println!("criterion 05 PASS: 100 random 2-D datasets, max |delta| {max_delta:.1e}");
}

#[test]
fn criterion_06_planted_structure_recovery() {
    let start = Instant::now();
    let vs = default_lattice(RADIUS_M).expect("criterion 06 FAIL: lattice");
    let weights = Weights::default();

    // Part one: value fields with two plateaus split at the azimuth
    // half-plane, separated by eight within-plateau standard deviations.
    let high_half: BTreeSet<u32> = vs
        .viewpoints()
        .iter()
        .filter(|v| v.phi < PI)
        .map(|v| v.id)
        .collect();
    let mut field_hits = 0u32;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<ViewpointValue> = vs
            .viewpoints()
            .iter()
            .map(|v| {
                let noise: f64 = rng.sample(StandardNormal);
                let value = if v.phi < PI { 8.0 + noise } else { noise };
                ViewpointValue {
                    affordance: Affordance::Reachability,
                    viewpoint: v.id,
                    value,
                    perf_mean: value,
                    perf_std: 0.0,
                    n: 1,
                }
            })
            .collect();
        let points = make_sample_points(&values, &vs)
            .unwrap_or_else(|e| panic!("criterion 06 FAIL: seed {seed} sample points: {e}"));
        let detail = cluster_value_field(&points, &values, &vs, &weights, 10)
            .unwrap_or_else(|e| panic!("criterion 06 FAIL: seed {seed} clustering: {e}"));
        let best: BTreeSet<u32> = detail.set.best().members.iter().copied().collect();
        if detail.set.k() == 2 && best == high_half {
            field_hits += 1;
        }
    }
    assert!(
        field_hits >= 95,
        "criterion 06 FAIL: plateau fields recovered in {field_hits}/100 seeds, need 95"
    );

    // Part two: full pipeline over generated trial sets must place every
    // planted best viewpoint inside its affordance's rank-1 manifold.
    let config = PipelineConfig::default();
    let mut pipeline_hits = 0u32;
    for seed in 0..100u64 {
        let spec = SyntheticSpec::two_plateau(seed);
        let trials = spec
            .generate()
            .unwrap_or_else(|e| panic!("criterion 06 FAIL: seed {seed} generate: {e}"));
        let output = pipeline::run(&config, &trials)
            .unwrap_or_else(|e| panic!("criterion 06 FAIL: seed {seed} pipeline: {e}"));
        let sets = output.manifold_sets();
        let recovered = Affordance::ALL.iter().all(|a| {
            let planted = spec.planted_best(*a).expect("planted best exists");
            sets[a].best().members.contains(&planted)
        });
        if recovered {
            pipeline_hits += 1;
        }
    }
    assert!(
        pipeline_hits >= 90,
        "criterion 06 FAIL: pipeline recovered planted bests in {pipeline_hits}/100 seeds, \
         need 90"
    );

    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 60.0,
        "criterion 06 FAIL: took {elapsed:?}, budget 60 s"
    );
    println!(
        "criterion 06 PASS: plateau fields {field_hits}/100, pipeline recovery \
         {pipeline_hits}/100, {elapsed:?}"
    );
}

#[test]
fn criterion_07_distance_axioms_on_lattice() {
    let vs = default_lattice(RADIUS_M).expect("criterion 07 FAIL: lattice");
    let points = vs.viewpoints();
    let n = points.len();
    let mut dist = vec![vec![0.0f64; n]; n];
    let mut max_dist = 0f64;
    for i in 0..n {
        for j in 0..n {
            let dij =
                orthodromic_distance(&points[i], &points[j]).expect("criterion 07 FAIL: distance");
            dist[i][j] = dij;
            max_dist = max_dist.max(dij);
        }
    }
    for i in 0..n {
        assert_eq!(
            dist[i][i], 0.0,
            "criterion 07 FAIL: identity violated at viewpoint {}",
            points[i].id
        );
        for j in 0..n {
            assert_eq!(
                dist[i][j], dist[j][i],
                "criterion 07 FAIL: symmetry violated between viewpoints {} and {}",
                points[i].id, points[j].id
            );
        }
    }
    let mut triples = 0u32;
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                // 1e-12 covers floating-point rounding only; the axiom itself
                // must hold.
                for (a, b, c) in [(i, j, k), (j, i, k), (i, k, j)] {
                    assert!(
                        dist[b][c] <= dist[b][a] + dist[a][c] + 1e-12,
                        "criterion 07 FAIL: triangle inequality violated on \
                         viewpoints {} {} {}",
                        points[a].id,
                        points[b].id,
                        points[c].id
                    );
                }
                triples += 1;
            }
        }
    }
    assert_eq!(triples, 4060, "criterion 07 FAIL: expected C(30,3) triples");
    let want_max = PI * RADIUS_M;
    assert!(
        (max_dist - want_max).abs() <= 1e-9,
        "criterion 07 FAIL: max distance {max_dist} vs {want_max}"
    );
    println!(
        "criterion 07 PASS: symmetry and identity exact, 4060 triples obey the triangle \
         inequality, max distance {max_dist:.9} = pi*r"
    );
}

#[test]
fn criterion_08_outlier_rejection_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let base = LogNormal::new(3.0, 0.5).unwrap();
    let mut remaining = 1000usize;
    let mut row = 1u64;
    let mut total_rejected = 0usize;
    let mut groups_done = 0usize;
    while remaining > 0 {
        // A trial set holds at most one group per (affordance, viewpoint)
        // pair, so chunks of up to 120 groups map onto the 4 x 30 grid.
        let chunk = remaining.min(120);
        let mut records = Vec::new();
        let mut expected: BTreeSet<u64> = BTreeSet::new();
        for slot in 0..chunk {
            let affordance = Affordance::ALL[slot % 4];
            let viewpoint = (slot / 4) as u32 % 30 + 1;
            let size = rng.gen_range(1..=16);
            let mut values = Vec::with_capacity(size);
            for _ in 0..size {
                let mut t: f64 = rng.sample(base);
                if rng.gen_bool(0.15) {
                    t *= 6.0;
                }
                values.push(t);
            }
            let mask = common::brute_mad_mask(&values, 3.0, 1.4826);
            for (i, t) in values.iter().enumerate() {
                records.push(TrialRecord {
                    row,
                    subject: i as u32 + 1,
                    robot: "r".into(),
                    affordance,
                    viewpoint,
                    time_s: *t,
                    errors: 0,
                });
                if mask[i] {
                    expected.insert(row);
                }
                row += 1;
            }
        }
        let total = records.len();
        let ts = TrialSet::from_records(records).expect("criterion 08 FAIL: trial set");
        let (kept, rejected) = ts.reject_outliers(3.0, 1.4826);
        let got: BTreeSet<u64> = rejected.iter().map(|r| r.row).collect();
        assert_eq!(
            got,
            expected,
            "criterion 08 FAIL: rejection differs from brute force in groups \
             {groups_done}..{}",
            groups_done + chunk
        );
        assert_eq!(
            kept.len() + rejected.len(),
            total,
            "criterion 08 FAIL: kept and rejected do not partition the input"
        );
        total_rejected += rejected.len();
        groups_done += chunk;
        remaining -= chunk;
    }
    assert_eq!(groups_done, 1000);
    println!(
        "criterion 08 PASS: 1000 randomized groups match brute-force scaled-MAD exactly \
         ({total_rejected} rejections)"
    );
}

#[test]
fn criterion_09_anova_identities_and_df() {
    // F = t^2 on two groups.
    let mut max_delta_f = 0f64;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n1: usize = rng.gen_range(3..=30);
        let n2: usize = rng.gen_range(3..=30);
        let shift = rng.gen_range(-1.0..1.0);
        let draw = |rng: &mut ChaCha8Rng, n: usize, mu: f64| -> Vec<f64> {
            (0..n)
                .map(|_| mu + rng.sample::<f64, _>(StandardNormal))
                .collect()
        };
        let a = draw(&mut rng, n1, 0.0);
        let b = draw(&mut rng, n2, shift);
        let f = one_way_anova(&[a.clone(), b.clone()])
            .unwrap_or_else(|e| panic!("criterion 09 FAIL: anova seed {seed}: {e}"));
        let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
        let var = |xs: &[f64], m: f64| {
            xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
        };
        let (ma, mb) = (mean(&a), mean(&b));
        let pooled = (((n1 - 1) as f64 * var(&a, ma)) + ((n2 - 1) as f64 * var(&b, mb)))
            / (n1 + n2 - 2) as f64;
        let t = (ma - mb) / (pooled * (1.0 / n1 as f64 + 1.0 / n2 as f64)).sqrt();
        let delta = (f.statistic - t * t).abs();
        assert!(
            delta <= 1e-9,
            "criterion 09 FAIL: seed {seed} F {} vs t^2 {} (|delta| {delta:.2e})",
            f.statistic,
            t * t
        );
        assert_eq!(f.df1, 1.0, "criterion 09 FAIL: seed {seed} df1");
        assert_eq!(
            f.df2,
            Some((n1 + n2 - 2) as f64),
            "criterion 09 FAIL: seed {seed} df2"
        );
        max_delta_f = max_delta_f.max(delta);
    }

    // Balanced two-way interaction sum of squares against the closed form.
    let mut max_delta_ss = 0f64;
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let r: usize = rng.gen_range(2..=4);
        let c: usize = rng.gen_range(2..=5);
        let m: usize = rng.gen_range(2..=4);
        let row_fx: Vec<f64> = (0..r).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let col_fx: Vec<f64> = (0..c).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let int_fx: Vec<Vec<f64>> = (0..r)
            .map(|_| (0..c).map(|_| rng.gen_range(-1.5..1.5)).collect())
            .collect();
        let mut data: Vec<(f64, u32, u32)> = Vec::new();
        let mut cells = vec![vec![Vec::new(); c]; r];
        for i in 0..r {
            for j in 0..c {
                for _ in 0..m {
                    let noise: f64 = rng.sample(StandardNormal);
                    let y = row_fx[i] + col_fx[j] + int_fx[i][j] + noise;
                    data.push((y, i as u32, j as u32));
                    cells[i][j].push(y);
                }
            }
        }
        let n_total = (r * c * m) as f64;
        let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
        let cell_means: Vec<Vec<f64>> = cells
            .iter()
            .map(|row| row.iter().map(|c| mean(c)).collect())
            .collect();
        let grand = data.iter().map(|(y, _, _)| y).sum::<f64>() / n_total;
        let row_means: Vec<f64> = (0..r)
            .map(|i| cell_means[i].iter().sum::<f64>() / c as f64)
            .collect();
        let col_means: Vec<f64> = (0..c)
            .map(|j| (0..r).map(|i| cell_means[i][j]).sum::<f64>() / r as f64)
            .collect();
        let mut ss_int = 0.0;
        let mut ss_err = 0.0;
        for i in 0..r {
            for j in 0..c {
                let dev = cell_means[i][j] - row_means[i] - col_means[j] + grand;
                ss_int += m as f64 * dev * dev;
                for y in &cells[i][j] {
                    ss_err += (y - cell_means[i][j]) * (y - cell_means[i][j]);
                }
            }
        }
        let df1 = ((r - 1) * (c - 1)) as f64;
        let df2 = (r * c * m - r * c) as f64;
        let res = two_way_interaction_anova(&data, "rows", "cols")
            .unwrap_or_else(|e| panic!("criterion 09 FAIL: interaction seed {seed}: {e}"));
        assert_eq!(
            res.df1, df1,
            "criterion 09 FAIL: seed {seed} interaction df1"
        );
        assert_eq!(
            res.df2,
            Some(df2),
            "criterion 09 FAIL: seed {seed} interaction df2"
        );
        let ss_prod = res.statistic * df1 * (ss_err / df2);
        let delta = (ss_prod - ss_int).abs();
        assert!(
            delta <= 1e-8,
            "criterion 09 FAIL: seed {seed} interaction SS {ss_prod} vs closed form \
             {ss_int} (|delta| {delta:.2e})"
        );
        max_delta_ss = max_delta_ss.max(delta);
    }

    // Degrees-of-freedom pattern on a 4 x 30 grid with one empty cell:
    // 119 filled cells - 4 - 30 + 1 = 86.
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut data: Vec<(f64, u32, u32)> = Vec::new();
    for a in 0..4u32 {
        for v in 1..=30u32 {
            if a == 0 && v == 1 {
                continue;
            }
            for _ in 0..2 {
                let noise: f64 = rng.sample(StandardNormal);
                data.push((noise + a as f64 * 0.2 + v as f64 * 0.01, a, v));
            }
        }
    }
    let res = two_way_interaction_anova(&data, "affordance", "viewpoint")
        .expect("criterion 09 FAIL: unbalanced interaction");
    assert_eq!(
        res.df1, 86.0,
        "criterion 09 FAIL: one empty cell of 4 x 30 gives interaction df {}, expected 86",
        res.df1
    );
    assert_eq!(
        res.df2,
        Some(119.0),
        "criterion 09 FAIL: residual df {:?} on 238 observations over 119 cells",
        res.df2
    );

    println!(
        "criterion 09 PASS: F = t^2 within {max_delta_f:.1e} over 100 datasets, balanced \
         interaction SS within {max_delta_ss:.1e} over 50, empty-cell df1 = 86"
    );
}

#[test]
fn criterion_10_reports_identical_across_parallelism() {
    let bin = env!("CARGO_BIN_EXE_vantage");
    let dir = tempfile::tempdir().expect("criterion 10 FAIL: tempdir");
    let trials = dir.path().join("trials.csv");
    let run = |args: &[&str]| {
        let out = Command::new(bin)
            .args(args)
            .output()
            .expect("criterion 10 FAIL: spawn");
        assert!(
            out.status.success(),
            "criterion 10 FAIL: {:?} exited {:?}: {}",
            args,
            out.status.code(),
            String::from_utf8_lossy(&out.stderr)
        );
    };
    run(&["synth", "--out", trials.to_str().unwrap(), "--seed", "5"]);
    let one = dir.path().join("one");
    let four = dir.path().join("four");
    run(&[
        "run",
        "--trials",
        trials.to_str().unwrap(),
        "--out",
        one.to_str().unwrap(),
        "--threads",
        "1",
    ]);
    run(&[
        "run",
        "--trials",
        trials.to_str().unwrap(),
        "--out",
        four.to_str().unwrap(),
        "--threads",
        "4",
    ]);
    for name in ["report.json", "manifolds.json", "values.csv"] {
        let a = std::fs::read(one.join(name)).expect("criterion 10 FAIL: read");
        let b = std::fs::read(four.join(name)).expect("criterion 10 FAIL: read");
        assert_eq!(
            a, b,
            "criterion 10 FAIL: {name} differs between 1-thread and 4-thread runs"
        );
    }
    println!("criterion 10 PASS: report.json byte-identical across 1 and 4 worker threads");
}
