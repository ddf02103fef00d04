//! Deterministic synthetic study generator: a latent per-viewpoint quality
//! field drives log-normal task times and Poisson error counts, simulating
//! each subject performing every affordance once from each cardinal group.
//! Serves as the ground-truth oracle for end-to-end recovery tests.

use std::collections::BTreeMap;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{LogNormal, Poisson};
use serde::{Deserialize, Serialize};

use crate::affordance::Affordance;
use crate::error::{Error, Result};
use crate::geometry::{default_lattice, CardinalDirection, ViewpointSet, DEFAULT_RADIUS_M};
use crate::trials::{TrialRecord, TrialSet};

/// How subjects pick their viewpoint within each cardinal group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Assignment {
    /// A seeded per-group permutation cycled over subjects, guaranteeing
    /// every viewpoint at least floor(subjects/6) samples per affordance.
    Stratified,
    /// Independent uniform draws; with few subjects some viewpoints may end
    /// up unsampled and need imputation downstream.
    Random,
}

/// Generator parameters. Times follow
/// base * exp(-gain * q) * speed_subject * lognormal(sigma); error counts
/// follow Poisson(floor + base_rate * (1 - q)), with q the latent quality of
/// the drawn viewpoint.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n_subjects: u32,
    pub seed: u64,
    pub assignment: Assignment,
    pub base_time_s: f64,
    pub time_quality_gain: f64,
    pub time_noise_sigma: f64,
    pub subject_speed_sigma: f64,
    pub error_rate_base: f64,
    pub error_rate_floor: f64,
    pub robot_by_affordance: BTreeMap<Affordance, String>,
    /// Latent quality in [0, 1] per viewpoint, per affordance. Only listed
    /// affordances are simulated; each map must cover the whole lattice.
    pub quality: BTreeMap<Affordance, BTreeMap<u32, f64>>,
}

fn default_robots() -> BTreeMap<Affordance, String> {
    [
        (Affordance::Reachability, "packbot"),
        (Affordance::Manipulability, "packbot"),
        (Affordance::Passability, "talon"),
        (Affordance::Traversability, "talon"),
    ]
    .into_iter()
    .map(|(a, r)| (a, r.to_string()))
    .collect()
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_subjects: 31,
            seed: 0,
            assignment: Assignment::Stratified,
            base_time_s: 30.0,
            time_quality_gain: 1.5,
            time_noise_sigma: 0.08,
            subject_speed_sigma: 0.12,
            error_rate_base: 2.0,
            error_rate_floor: 0.05,
            robot_by_affordance: default_robots(),
            quality: BTreeMap::new(),
        }
    }
}

impl SyntheticSpec {
    /// Two quality plateaus split at an azimuth meridian, rotated a quarter
    /// turn per affordance, with a single peaked viewpoint on the mid ring
    /// of the high half marking the planted best pose.
    pub fn two_plateau(seed: u64) -> Self {
        let vs = default_lattice(DEFAULT_RADIUS_M).expect("default lattice is valid");
        let mut quality = BTreeMap::new();
        for (m, &a) in Affordance::ALL.iter().enumerate() {
            let start = m as f64 * std::f64::consts::FRAC_PI_2;
            let mut field: BTreeMap<u32, f64> = vs
                .viewpoints()
                .iter()
                .map(|v| {
                    let offset = (v.phi - start).rem_euclid(2.0 * std::f64::consts::PI);
                    let q = if offset < std::f64::consts::PI {
                        0.85
                    } else {
                        0.15
                    };
                    (v.id, q)
                })
                .collect();
            let center = start + std::f64::consts::FRAC_PI_2;
            let peak = vs
                .viewpoints()
                .iter()
                .filter(|v| field[&v.id] > 0.5 && (13..=24).contains(&v.id))
                .min_by(|a, b| {
                    let da = azimuth_gap(a.phi, center);
                    let db = azimuth_gap(b.phi, center);
                    da.partial_cmp(&db).unwrap().then(a.id.cmp(&b.id))
                })
                .expect("high half contains mid-ring viewpoints")
                .id;
            field.insert(peak, 0.95);
            quality.insert(a, field);
        }
        SyntheticSpec {
            seed,
            quality,
            ..SyntheticSpec::default()
        }
    }

    /// Uniform quality everywhere: the null model for calibration runs.
    pub fn flat(seed: u64) -> Self {
        let vs = default_lattice(DEFAULT_RADIUS_M).expect("default lattice is valid");
        let quality = Affordance::ALL
            .iter()
            .map(|&a| (a, vs.ids().map(|id| (id, 0.5)).collect()))
            .collect();
        SyntheticSpec {
            seed,
            quality,
            ..SyntheticSpec::default()
        }
    }

    /// The highest-quality viewpoint of `affordance`, ties toward the
    /// smaller id; None if the affordance is not simulated.
    pub fn planted_best(&self, affordance: Affordance) -> Option<u32> {
        let field = self.quality.get(&affordance)?;
        let mut best: Option<(u32, f64)> = None;
        for (&id, &q) in field {
            match best {
                Some((_, bq)) if q <= bq => {}
                _ => best = Some((id, q)),
            }
        }
        best.map(|(id, _)| id)
    }

    fn validate(&self, vs: &ViewpointSet) -> Result<()> {
        if self.n_subjects == 0 {
            return Err(Error::BadSyntheticSpec(
                "n_subjects must be positive".into(),
            ));
        }
        if !(self.base_time_s.is_finite() && self.base_time_s > 0.0) {
            return Err(Error::BadSyntheticSpec(format!(
                "base_time_s must be positive, got {}",
                self.base_time_s
            )));
        }
        for (name, v) in [
            ("time_quality_gain", self.time_quality_gain),
            ("time_noise_sigma", self.time_noise_sigma),
            ("subject_speed_sigma", self.subject_speed_sigma),
            ("error_rate_base", self.error_rate_base),
            ("error_rate_floor", self.error_rate_floor),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::BadSyntheticSpec(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        if self.quality.is_empty() {
            return Err(Error::BadSyntheticSpec(
                "quality field lists no affordances".into(),
            ));
        }
        for (a, field) in &self.quality {
            for id in vs.ids() {
                match field.get(&id) {
                    None => {
                        return Err(Error::BadSyntheticSpec(format!(
                            "{a} quality omits viewpoint {id}"
                        )))
                    }
                    Some(q) if !(q.is_finite() && (0.0..=1.0).contains(q)) => {
                        return Err(Error::BadSyntheticSpec(format!(
                            "{a} quality at viewpoint {id} must lie in [0, 1], got {q}"
                        )))
                    }
                    _ => {}
                }
            }
            if let Some(id) = field.keys().find(|id| !vs.contains(**id)) {
                return Err(Error::BadSyntheticSpec(format!(
                    "{a} quality names unknown viewpoint {id}"
                )));
            }
            match self.robot_by_affordance.get(a) {
                None => {
                    return Err(Error::BadSyntheticSpec(format!(
                        "{a} has no robot assigned"
                    )))
                }
                Some(r) if r.trim().is_empty() => {
                    return Err(Error::BadSyntheticSpec(format!(
                        "{a} has a blank robot name"
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Simulates the full protocol: every subject performs every simulated
    /// affordance once per cardinal group (5 groups), so n_subjects * 4 * 5
    /// records with the default affordances. Identical spec and seed give an
    /// identical TrialSet; draws happen in one fixed order from a single
    /// seeded stream.
    pub fn generate(&self) -> Result<TrialSet> {
        let vs = default_lattice(DEFAULT_RADIUS_M)?;
        self.validate(&vs)?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);

        let speed_dist = LogNormal::new(0.0, self.subject_speed_sigma)
            .map_err(|e| Error::BadSyntheticSpec(format!("speed distribution: {e}")))?;
        let noise_dist = LogNormal::new(0.0, self.time_noise_sigma)
            .map_err(|e| Error::BadSyntheticSpec(format!("time noise distribution: {e}")))?;

        let speeds: Vec<f64> = (0..self.n_subjects)
            .map(|_| speed_dist.sample(&mut rng))
            .collect();

        let affordances: Vec<Affordance> = self.quality.keys().copied().collect();
        let mut rotations: BTreeMap<(Affordance, CardinalDirection), Vec<u32>> = BTreeMap::new();
        if self.assignment == Assignment::Stratified {
            for &a in &affordances {
                for d in CardinalDirection::ALL {
                    let mut members = vs.members_of(d);
                    members.shuffle(&mut rng);
                    rotations.insert((a, d), members);
                }
            }
        }

        let mut records = Vec::new();
        for j in 0..self.n_subjects {
            let subject = j + 1;
            let speed = speeds[j as usize];
            for &a in &affordances {
                let field = &self.quality[&a];
                let robot = &self.robot_by_affordance[&a];
                for d in CardinalDirection::ALL {
                    let viewpoint = match self.assignment {
                        Assignment::Stratified => {
                            let rotation = &rotations[&(a, d)];
                            rotation[j as usize % rotation.len()]
                        }
                        Assignment::Random => {
                            let members = vs.members_of(d);
                            members[rng.gen_range(0..members.len())]
                        }
                    };
                    let q = field[&viewpoint];
                    let time_s = self.base_time_s
                        * (-self.time_quality_gain * q).exp()
                        * speed
                        * noise_dist.sample(&mut rng);
                    let rate = self.error_rate_floor + self.error_rate_base * (1.0 - q);
                    let errors = if rate > 0.0 {
                        let dist = Poisson::new(rate).map_err(|e| {
                            Error::BadSyntheticSpec(format!("error distribution: {e}"))
                        })?;
                        dist.sample(&mut rng) as u32
                    } else {
                        0
                    };
                    records.push(TrialRecord {
                        row: 0,
                        subject,
                        robot: robot.clone(),
                        affordance: a,
                        viewpoint,
                        time_s,
                        errors,
                    });
                }
            }
        }
        TrialSet::from_records(records)
    }
}

fn azimuth_gap(phi: f64, center: f64) -> f64 {
    let diff = (phi - center).rem_euclid(2.0 * std::f64::consts::PI);
    diff.min(2.0 * std::f64::consts::PI - diff)
}
