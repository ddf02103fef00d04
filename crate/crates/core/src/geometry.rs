//! Hemispherical work envelope around the task: the fixed viewpoint lattice,
//! cardinal direction groups, great-circle distances, and spherical centroids.
//!
//! Angles use elevation above the task's horizontal plane (`theta`, 0 at the
//! horizon, pi/2 at the zenith) and azimuth (`phi` in [0, 2pi), 0 facing the
//! task front). All viewpoints in a set share one radius, so every distance
//! scales linearly with it.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};
use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Work-envelope radius used when none is configured, in meters.
pub const DEFAULT_RADIUS_M: f64 = 1.5;

/// Elevation above which a viewpoint belongs to the `Top` group rather than
/// an azimuthal quadrant.
pub const DEFAULT_TOP_THRESHOLD_RAD: f64 = FRAC_PI_3;

/// Design arc length between neighboring lattice viewpoints, expressed as a
/// fraction of the radius: 0.7 m apart on the reference 1.5 m hemisphere.
const RING_SPACING: f64 = 0.7 / 1.5;

/// Camera pose on the hemisphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Viewpoint {
    pub id: u32,
    /// Elevation above the horizontal plane, in [0, pi/2].
    pub theta: f64,
    /// Azimuth, normalized to [0, 2pi).
    pub phi: f64,
    /// Distance from the task center, shared by the whole set.
    pub radius: f64,
}

impl Viewpoint {
    /// Unit direction from the task center: x toward the front (phi = 0),
    /// z toward the zenith.
    pub fn unit_vector(&self) -> [f64; 3] {
        [
            self.theta.cos() * self.phi.cos(),
            self.theta.cos() * self.phi.sin(),
            self.theta.sin(),
        ]
    }
}

/// Coarse direction label for rule extraction. Azimuthal quadrants are
/// centered on front (phi = 0), right (pi/2), back (pi), left (3pi/2); high
/// elevations form the `Top` group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CardinalDirection {
    Left,
    Right,
    Front,
    Back,
    Top,
}

impl CardinalDirection {
    pub const ALL: [CardinalDirection; 5] = [
        CardinalDirection::Left,
        CardinalDirection::Right,
        CardinalDirection::Front,
        CardinalDirection::Back,
        CardinalDirection::Top,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CardinalDirection::Left => "left",
            CardinalDirection::Right => "right",
            CardinalDirection::Front => "front",
            CardinalDirection::Back => "back",
            CardinalDirection::Top => "top",
        }
    }
}

impl fmt::Display for CardinalDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One row of a viewpoint-set definition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ViewpointSpec {
    pub id: u32,
    #[serde(rename = "theta_rad")]
    pub theta: f64,
    #[serde(rename = "phi_rad")]
    pub phi: f64,
    pub group: CardinalDirection,
}

#[derive(Serialize, Deserialize)]
struct ViewpointSetDoc {
    radius_m: f64,
    viewpoints: Vec<ViewpointSpec>,
}

/// Validated set of viewpoints sharing one radius, each assigned to a
/// cardinal group. Stored sorted by id.
#[derive(Debug, Clone)]
pub struct ViewpointSet {
    radius: f64,
    viewpoints: Vec<Viewpoint>,
    groups: BTreeMap<u32, CardinalDirection>,
}

impl ViewpointSet {
    pub fn new(radius: f64, specs: Vec<ViewpointSpec>) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidViewpointSet(format!(
                "radius must be positive and finite, got {radius}"
            )));
        }
        if specs.is_empty() {
            return Err(Error::InvalidViewpointSet("no viewpoints".into()));
        }
        let mut viewpoints = Vec::with_capacity(specs.len());
        let mut groups = BTreeMap::new();
        for spec in specs {
            if !spec.theta.is_finite() || spec.theta < 0.0 || spec.theta > FRAC_PI_2 {
                return Err(Error::ElevationOutOfRange {
                    id: spec.id,
                    theta: spec.theta,
                });
            }
            if !spec.phi.is_finite() {
                return Err(Error::InvalidViewpointSet(format!(
                    "viewpoint {}: azimuth {} is not finite",
                    spec.id, spec.phi
                )));
            }
            if groups.insert(spec.id, spec.group).is_some() {
                return Err(Error::DuplicateViewpoint(spec.id));
            }
            viewpoints.push(Viewpoint {
                id: spec.id,
                theta: spec.theta,
                phi: normalize_azimuth(spec.phi),
                radius,
            });
        }
        viewpoints.sort_by_key(|v| v.id);
        Ok(ViewpointSet {
            radius,
            viewpoints,
            groups,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.viewpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.viewpoints.is_empty()
    }

    /// Viewpoints in ascending id order.
    pub fn viewpoints(&self) -> &[Viewpoint] {
        &self.viewpoints
    }

    pub fn ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.viewpoints.iter().map(|v| v.id)
    }

    pub fn get(&self, id: u32) -> Option<&Viewpoint> {
        self.viewpoints
            .binary_search_by_key(&id, |v| v.id)
            .ok()
            .map(|i| &self.viewpoints[i])
    }

    pub fn contains(&self, id: u32) -> bool {
        self.get(id).is_some()
    }

    pub fn group_of(&self, id: u32) -> Option<CardinalDirection> {
        self.groups.get(&id).copied()
    }

    /// Ids assigned to `direction`, ascending.
    pub fn members_of(&self, direction: CardinalDirection) -> Vec<u32> {
        self.groups
            .iter()
            .filter(|(_, g)| **g == direction)
            .map(|(id, _)| *id)
            .collect()
    }

    pub fn to_writer<W: Write>(&self, w: W) -> Result<()> {
        let doc = ViewpointSetDoc {
            radius_m: self.radius,
            viewpoints: self
                .viewpoints
                .iter()
                .map(|v| ViewpointSpec {
                    id: v.id,
                    theta: v.theta,
                    phi: v.phi,
                    group: self.groups[&v.id],
                })
                .collect(),
        };
        serde_json::to_writer_pretty(w, &doc)?;
        Ok(())
    }

    pub fn from_reader<R: Read>(r: R) -> Result<Self> {
        let doc: ViewpointSetDoc = serde_json::from_reader(r)?;
        ViewpointSet::new(doc.radius_m, doc.viewpoints)
    }
}

fn normalize_azimuth(phi: f64) -> f64 {
    let wrapped = phi.rem_euclid(2.0 * PI);
    // rem_euclid can return the modulus itself when phi is a tiny negative.
    if wrapped >= 2.0 * PI {
        0.0
    } else {
        wrapped
    }
}

/// Direction label for a pose: `Top` above the elevation threshold, otherwise
/// the azimuthal quadrant containing `phi`.
pub fn group_for(theta: f64, phi: f64, top_threshold: f64) -> CardinalDirection {
    if theta > top_threshold {
        return CardinalDirection::Top;
    }
    let phi = normalize_azimuth(phi);
    if !(PI / 4.0..7.0 * PI / 4.0).contains(&phi) {
        CardinalDirection::Front
    } else if phi < 3.0 * PI / 4.0 {
        CardinalDirection::Right
    } else if phi < 5.0 * PI / 4.0 {
        CardinalDirection::Back
    } else {
        CardinalDirection::Left
    }
}

/// The standard 30-viewpoint lattice: two rings of 12 and a top ring of 6,
/// spaced so neighbors sit `RING_SPACING * radius` apart along great circles.
pub fn default_lattice(radius: f64) -> Result<ViewpointSet> {
    lattice_with_threshold(radius, DEFAULT_TOP_THRESHOLD_RAD)
}

/// Standard lattice with a custom `Top` elevation threshold.
pub fn lattice_with_threshold(radius: f64, top_threshold: f64) -> Result<ViewpointSet> {
    // Within a ring at elevation t, neighbors dphi apart subtend an arc of
    // 2*asin(cos(t)*sin(dphi/2)); solving for the design spacing gives the
    // ring elevations below.
    let ring_theta = |dphi: f64| ((RING_SPACING / 2.0).sin() / (dphi / 2.0).sin()).acos();
    let theta_mid = ring_theta(PI / 6.0);
    let theta_top = ring_theta(PI / 3.0);

    let mut specs = Vec::with_capacity(30);
    let mut push = |id: u32, theta: f64, phi: f64| {
        specs.push(ViewpointSpec {
            id,
            theta,
            phi,
            group: group_for(theta, phi, top_threshold),
        });
    };
    for k in 0..12u32 {
        push(k + 1, 0.0, f64::from(k) * PI / 6.0);
    }
    for k in 0..12u32 {
        push(k + 13, theta_mid, PI / 12.0 + f64::from(k) * PI / 6.0);
    }
    for k in 0..6u32 {
        push(k + 25, theta_top, PI / 12.0 + f64::from(k) * PI / 3.0);
    }
    ViewpointSet::new(radius, specs)
}

/// Great-circle (orthodromic) distance between two poses on the same sphere.
pub fn orthodromic_distance(a: &Viewpoint, b: &Viewpoint) -> Result<f64> {
    let scale = a.radius.abs().max(b.radius.abs());
    if (a.radius - b.radius).abs() > 1e-9 * scale {
        return Err(Error::RadiusMismatch(a.radius, b.radius));
    }
    Ok(a.radius * haversine_arc(a.theta, a.phi, b.theta, b.phi))
}

/// Central angle between two (elevation, azimuth) directions, in radians.
/// Haversine form, stable for nearby points; the atan2 keeps antipodal pairs
/// exact.
pub fn haversine_arc(theta_a: f64, phi_a: f64, theta_b: f64, phi_b: f64) -> f64 {
    let dt = (theta_b - theta_a) / 2.0;
    let dp = (phi_b - phi_a) / 2.0;
    let xi = dt.sin().powi(2) + theta_a.cos() * theta_b.cos() * dp.sin().powi(2);
    let xi = xi.clamp(0.0, 1.0);
    2.0 * xi.sqrt().atan2((1.0 - xi).sqrt())
}

/// Spherical centroid of `member_ids`: the normalized mean of their unit
/// vectors, clamped to the hemisphere (a below-horizon mean maps to the
/// horizon). The result carries id 0 and the set's radius.
pub fn manifold_centroid(member_ids: &[u32], vs: &ViewpointSet) -> Result<Viewpoint> {
    if member_ids.is_empty() {
        return Err(Error::BadPartition("centroid of empty member list".into()));
    }
    let mut sum = [0.0f64; 3];
    for &id in member_ids {
        let v = vs.get(id).ok_or(Error::UnknownViewpoint(id))?;
        let u = v.unit_vector();
        sum[0] += u[0];
        sum[1] += u[1];
        sum[2] += u[2];
    }
    let n = member_ids.len() as f64;
    let mean = [sum[0] / n, sum[1] / n, sum[2] / n];
    let norm = (mean[0] * mean[0] + mean[1] * mean[1] + mean[2] * mean[2]).sqrt();
    if norm < 1e-9 {
        return Err(Error::DegenerateCentroid);
    }
    let horizontal = (mean[0] * mean[0] + mean[1] * mean[1]).sqrt();
    let theta = if mean[2] <= 0.0 {
        0.0
    } else {
        mean[2].atan2(horizontal).min(FRAC_PI_2)
    };
    let phi = if horizontal == 0.0 {
        0.0
    } else {
        normalize_azimuth(mean[1].atan2(mean[0]))
    };
    Ok(Viewpoint {
        id: 0,
        theta,
        phi,
        radius: vs.radius(),
    })
}

/// Fraction of the set covered by `member_ids` (duplicates and unknown ids
/// are ignored).
pub fn area_fraction(member_ids: &[u32], vs: &ViewpointSet) -> f64 {
    let unique: BTreeSet<u32> = member_ids
        .iter()
        .copied()
        .filter(|&id| vs.contains(id))
        .collect();
    unique.len() as f64 / vs.len() as f64
}
