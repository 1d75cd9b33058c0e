//! Seven-link sagittal body model: forward kinematics, the consolidated
//! non-arm center of mass, and its velocity direction at a chosen frame.
//!
//! Angle convention: absolute angles are measured from world `+x`,
//! counterclockwise positive. Relative joint angles accumulate from the
//! ankle upwards. The shank angle `theta[0]` is taken against the world
//! horizontal, and the foot is held perpendicular to the shank, so a
//! rigid rotation of the whole pose is a single offset on `theta[0]`.
//! The head (`theta[3]`) and the upper arm (`theta[4]`) are both measured
//! from the trunk, and the elbow (`theta[5]`) from the upper arm.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec2;

pub const SEGMENT_COUNT: usize = 7;
pub const FOOT: usize = 0;
pub const SHANK: usize = 1;
pub const THIGH: usize = 2;
pub const TRUNK: usize = 3;
pub const HEAD: usize = 4;
pub const UPPER_ARM: usize = 5;
pub const FOREARM: usize = 6;

/// Links 0..=4 carry the consolidated non-arm mass.
pub const NONARM_LINKS: std::ops::Range<usize> = 0..5;

/// Relative tolerance on the mass closure `sum(m_i) == total_mass`.
pub const MASS_CLOSURE_RTOL: f64 = 1e-9;

/// Band for the non-arm share of body mass that the default anthropometry
/// must land in.
pub const NONARM_MASS_BAND: (f64, f64) = (0.90, 0.95);

/// Below this speed the COM direction is undefined.
pub const MIN_COM_SPEED: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkSegment {
    pub name: String,
    /// meters
    pub length: f64,
    /// kilograms
    pub mass: f64,
    /// Distance of the segment COM from the proximal joint, over `length`.
    pub com_fraction: f64,
}

impl LinkSegment {
    pub fn new(name: impl Into<String>, length: f64, mass: f64, com_fraction: f64) -> Self {
        Self {
            name: name.into(),
            length,
            mass,
            com_fraction,
        }
    }

    fn violation(&self) -> Option<String> {
        if !(self.length.is_finite() && self.length > 0.0) {
            Some(format!("length must be > 0, got {}", self.length))
        } else if !(self.mass.is_finite() && self.mass >= 0.0) {
            Some(format!("mass must be >= 0, got {}", self.mass))
        } else if !(0.0..=1.0).contains(&self.com_fraction) {
            Some(format!(
                "com_fraction must lie in [0, 1], got {}",
                self.com_fraction
            ))
        } else {
            None
        }
    }
}

/// The seven body links: foot, shank, thigh, trunk+pelvis, head+neck,
/// upper arm and forearm+hand (both arms combined in the last two).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentSet {
    pub segments: [LinkSegment; SEGMENT_COUNT],
    /// kilograms
    pub total_mass: f64,
}

/// Which mass divides the non-arm moment sum.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComDivisor {
    /// Total body mass, arms included.
    #[default]
    TotalMass,
    /// Sum of the non-arm link masses only (a true centroid).
    NonArmMass,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AnthropometryFile {
    #[allow(dead_code)]
    description: String,
    total_mass_kg: f64,
    segments: Vec<AnthropometryRow>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AnthropometryRow {
    name: String,
    length_m: f64,
    mass_fraction: f64,
    com_fraction: f64,
}

const DEFAULT_ANTHROPOMETRY: &str = include_str!("../data/default_anthropometry.json");

impl SegmentSet {
    /// Builds a validated segment set.
    pub fn new(segments: [LinkSegment; SEGMENT_COUNT], total_mass: f64) -> Result<Self> {
        let set = Self {
            segments,
            total_mass,
        };
        set.validate()?;
        Ok(set)
    }

    /// The shipped 60 kg adult anthropometry.
    pub fn default_adult() -> Self {
        let file: AnthropometryFile =
            serde_json::from_str(DEFAULT_ANTHROPOMETRY).expect("bundled anthropometry parses");
        let rows: Vec<LinkSegment> = file
            .segments
            .into_iter()
            .map(|r| {
                LinkSegment::new(
                    r.name,
                    r.length_m,
                    r.mass_fraction * file.total_mass_kg,
                    r.com_fraction,
                )
            })
            .collect();
        let segments: [LinkSegment; SEGMENT_COUNT] =
            rows.try_into().expect("bundled anthropometry has 7 rows");
        Self::new(segments, file.total_mass_kg).expect("bundled anthropometry is valid")
    }

    /// All invariant violations, in segment order; mass closure last.
    pub fn violations(&self) -> Vec<Error> {
        let mut out: Vec<Error> = self
            .segments
            .iter()
            .enumerate()
            .filter_map(|(index, s)| {
                s.violation().map(|reason| Error::InvalidSegment {
                    index,
                    name: s.name.clone(),
                    reason,
                })
            })
            .collect();
        let sum = self.mass_sum();
        if !(self.total_mass.is_finite() && self.total_mass > 0.0)
            || (sum - self.total_mass).abs() > MASS_CLOSURE_RTOL * self.total_mass.abs()
        {
            out.push(Error::MassClosure {
                sum,
                total: self.total_mass,
            });
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().into_iter().next() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }

    pub fn segment(&self, index: usize) -> &LinkSegment {
        &self.segments[index]
    }

    pub fn mass_sum(&self) -> f64 {
        self.segments.iter().map(|s| s.mass).sum()
    }

    pub fn nonarm_mass(&self) -> f64 {
        self.segments[NONARM_LINKS].iter().map(|s| s.mass).sum()
    }

    /// Non-arm share of the total mass.
    pub fn nonarm_fraction(&self) -> f64 {
        self.nonarm_mass() / self.total_mass
    }

    pub fn upper_arm_length(&self) -> f64 {
        self.segments[UPPER_ARM].length
    }

    pub fn forearm_length(&self) -> f64 {
        self.segments[FOREARM].length
    }

    /// Shoulder-to-grip distance with the elbow straight.
    pub fn arm_reach(&self) -> f64 {
        self.upper_arm_length() + self.forearm_length()
    }
}

/// Joint angles of the chain at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyPose {
    /// Ankle position, meters.
    pub base: Vec2,
    /// Shank (absolute), knee, hip, head, shoulder, elbow; radians.
    pub theta: [f64; 6],
}

impl BodyPose {
    pub fn new(base: Vec2, theta: [f64; 6]) -> Self {
        Self { base, theta }
    }

    /// The same pose rigidly rotated by `angle` about the ankle.
    pub fn rotated(&self, angle: f64) -> Self {
        let mut theta = self.theta;
        theta[0] += angle;
        Self {
            base: self.base,
            theta,
        }
    }

    /// The same pose rigidly rotated by `angle` about `pivot`.
    pub fn rotated_about(&self, pivot: Vec2, angle: f64) -> Self {
        let mut theta = self.theta;
        theta[0] += angle;
        Self {
            base: self.base.rotated_about(pivot, angle),
            theta,
        }
    }

    pub fn translated(&self, offset: Vec2) -> Self {
        Self {
            base: self.base + offset,
            theta: self.theta,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.base.is_finite() && self.theta.iter().all(|t| t.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseFrame {
    pub pose: BodyPose,
    /// seconds
    pub time: f64,
}

/// Positions produced by [`forward_kinematics`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainGeometry {
    pub ankle: Vec2,
    pub toe: Vec2,
    pub knee: Vec2,
    pub hip: Vec2,
    pub shoulder: Vec2,
    pub head_end: Vec2,
    pub elbow: Vec2,
    pub wrist: Vec2,
    /// Absolute angle of every link, indexed like the segments.
    pub link_angles: [f64; SEGMENT_COUNT],
    pub segment_coms: [Vec2; SEGMENT_COUNT],
}

impl ChainGeometry {
    /// Proximal and distal joint of link `index`.
    pub fn link_endpoints(&self, index: usize) -> (Vec2, Vec2) {
        match index {
            FOOT => (self.ankle, self.toe),
            SHANK => (self.ankle, self.knee),
            THIGH => (self.knee, self.hip),
            TRUNK => (self.hip, self.shoulder),
            HEAD => (self.shoulder, self.head_end),
            UPPER_ARM => (self.shoulder, self.elbow),
            FOREARM => (self.elbow, self.wrist),
            _ => panic!("link index {index} out of range"),
        }
    }

    /// Absolute trunk angle; the trunk frame's x axis runs hip to shoulder.
    pub fn theta_04(&self) -> f64 {
        self.link_angles[TRUNK]
    }
}

pub fn forward_kinematics(pose: &BodyPose, segments: &SegmentSet) -> ChainGeometry {
    let t = &pose.theta;
    let shank = t[0];
    let foot = shank - FRAC_PI_2;
    let thigh = shank + t[1];
    let trunk = thigh + t[2];
    let head = trunk + t[3];
    let upper = trunk + t[4];
    let fore = upper + t[5];
    let link_angles = [foot, shank, thigh, trunk, head, upper, fore];

    let step = |from: Vec2, index: usize| {
        from + Vec2::from_angle(link_angles[index]) * segments.segments[index].length
    };
    let ankle = pose.base;
    let toe = step(ankle, FOOT);
    let knee = step(ankle, SHANK);
    let hip = step(knee, THIGH);
    let shoulder = step(hip, TRUNK);
    let head_end = step(shoulder, HEAD);
    let elbow = step(shoulder, UPPER_ARM);
    let wrist = step(elbow, FOREARM);

    let mut geometry = ChainGeometry {
        ankle,
        toe,
        knee,
        hip,
        shoulder,
        head_end,
        elbow,
        wrist,
        link_angles,
        segment_coms: [Vec2::ZERO; SEGMENT_COUNT],
    };
    for index in 0..SEGMENT_COUNT {
        let (proximal, distal) = geometry.link_endpoints(index);
        geometry.segment_coms[index] =
            proximal + (distal - proximal) * segments.segments[index].com_fraction;
    }
    geometry
}

/// Mass-weighted sum of the link 0..=4 COMs divided by the total body mass.
pub fn nonarm_com(pose: &BodyPose, segments: &SegmentSet) -> Vec2 {
    nonarm_com_with(pose, segments, ComDivisor::TotalMass)
}

pub fn nonarm_com_with(pose: &BodyPose, segments: &SegmentSet, divisor: ComDivisor) -> Vec2 {
    let geometry = forward_kinematics(pose, segments);
    let moment = NONARM_LINKS.fold(Vec2::ZERO, |acc, i| {
        acc + geometry.segment_coms[i] * segments.segments[i].mass
    });
    let mass = match divisor {
        ComDivisor::TotalMass => segments.total_mass,
        ComDivisor::NonArmMass => segments.nonarm_mass(),
    };
    moment / mass
}

/// Position and normalized velocity of the non-arm COM.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComState {
    pub position: Vec2,
    /// Unit vector.
    pub direction: Vec2,
    /// Pre-normalization speed, m/s.
    pub speed: f64,
}

impl ComState {
    pub fn rotated_about(&self, pivot: Vec2, angle: f64) -> Self {
        Self {
            position: self.position.rotated_about(pivot, angle),
            direction: self.direction.rotated(angle),
            speed: self.speed,
        }
    }
}

/// COM state at `frames[index]` with a central difference over the
/// neighbouring frames.
pub fn com_velocity(frames: &[PoseFrame], segments: &SegmentSet, index: usize) -> Result<ComState> {
    com_velocity_with(frames, segments, index, ComDivisor::TotalMass)
}

pub fn com_velocity_with(
    frames: &[PoseFrame],
    segments: &SegmentSet,
    index: usize,
    divisor: ComDivisor,
) -> Result<ComState> {
    if frames.len() < 3 || index == 0 || index + 1 >= frames.len() {
        return Err(Error::IndexOutOfRange {
            index,
            len: frames.len(),
        });
    }
    let (prev, next) = (&frames[index - 1], &frames[index + 1]);
    let dt = next.time - prev.time;
    if !(frames[index].time > prev.time && next.time > frames[index].time) {
        return Err(Error::NonIncreasingTime { index });
    }
    let com = |f: &PoseFrame| nonarm_com_with(&f.pose, segments, divisor);
    let velocity = (com(next) - com(prev)) / dt;
    let speed = velocity.norm();
    if !(speed >= MIN_COM_SPEED) {
        return Err(Error::DegenerateVelocity { speed });
    }
    Ok(ComState {
        position: com(&frames[index]),
        direction: velocity / speed,
        speed,
    })
}

/// Origin and orientation of the trunk frame at the shoulder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShoulderFrame {
    pub origin: Vec2,
    /// Absolute trunk angle; adding it to a trunk-relative angle gives a
    /// world angle.
    pub theta_04: f64,
}

impl ShoulderFrame {
    pub fn rotated_about(&self, pivot: Vec2, angle: f64) -> Self {
        Self {
            origin: self.origin.rotated_about(pivot, angle),
            theta_04: self.theta_04 + angle,
        }
    }
}

pub fn shoulder_frame(pose: &BodyPose, segments: &SegmentSet) -> ShoulderFrame {
    let geometry = forward_kinematics(pose, segments);
    ShoulderFrame {
        origin: geometry.shoulder,
        theta_04: geometry.theta_04(),
    }
}
