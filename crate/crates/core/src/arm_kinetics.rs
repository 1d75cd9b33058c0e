//! Statics of the handle-anchored three-bar chain: handle joint, forearm,
//! elbow, upper arm, shoulder, and a virtual link from the shoulder to the
//! consolidated non-arm COM.
//!
//! Two routes give the endpoint force at the COM. [`arm_force_expanded`]
//! sums one term per joint, each torque divided by that joint's lever
//! distance and pointed along the perpendicular of the lever angle.
//! [`arm_force_lsq`] is the least-squares solution of `J^T F = tau`. The two
//! maps coincide only in special configurations.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::body_model::{SegmentSet, ShoulderFrame};
use crate::error::{Error, Result};
use crate::geometry::Vec2;

/// Minimum lever distance (m) and law-of-cosines denominator accepted.
pub const EPS_SINGULAR: f64 = 1e-6;

/// Largest condition number of `J J^T` accepted by [`arm_force_lsq`].
pub const MAX_CONDITION: f64 = 1e12;

/// Signed arm joint torques, N*m. `tau7` acts at the grip on the handle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorqueSet {
    pub tau5: f64,
    pub tau6: f64,
    pub tau7: f64,
}

impl TorqueSet {
    pub const fn new(tau5: f64, tau6: f64, tau7: f64) -> Self {
        Self { tau5, tau6, tau7 }
    }

    pub fn norm(&self) -> f64 {
        (self.tau5 * self.tau5 + self.tau6 * self.tau6 + self.tau7 * self.tau7).sqrt()
    }

    /// Ordered to match the Jacobian columns: (tau7, tau6, tau5).
    pub fn handle_first(&self) -> [f64; 3] {
        [self.tau7, self.tau6, self.tau5]
    }

    /// Ordered (tau5, tau6, tau7).
    pub fn shoulder_first(&self) -> [f64; 3] {
        [self.tau5, self.tau6, self.tau7]
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self::new(self.tau5 * k, self.tau6 * k, self.tau7 * k)
    }

    pub fn is_finite(&self) -> bool {
        self.shoulder_first().iter().all(|t| t.is_finite())
    }
}

impl std::ops::Add for TorqueSet {
    type Output = TorqueSet;
    fn add(self, rhs: TorqueSet) -> TorqueSet {
        TorqueSet::new(
            self.tau5 + rhs.tau5,
            self.tau6 + rhs.tau6,
            self.tau7 + rhs.tau7,
        )
    }
}

/// The three-bar chain for one choice of shoulder and elbow angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VirtualChain {
    pub shoulder: Vec2,
    pub theta_04: f64,
    pub theta5: f64,
    pub theta6: f64,
    /// shoulder -> elbow
    pub r5: Vec2,
    /// elbow -> handle
    pub r6: Vec2,
    /// shoulder -> COM
    pub r_com: Vec2,
    pub handle: Vec2,
    /// |r_com|
    pub lever5: f64,
    /// |r_com - r5|
    pub lever6: f64,
    /// |r_com - r5 - r6|
    pub lever7: f64,
    /// World angle of `r_com`.
    pub theta_com: f64,
    pub theta_6com: f64,
    pub theta_7com: f64,
}

impl VirtualChain {
    pub fn elbow(&self) -> Vec2 {
        self.shoulder + self.r5
    }

    pub fn com(&self) -> Vec2 {
        self.shoulder + self.r_com
    }

    pub fn levers(&self) -> [f64; 3] {
        [self.lever5, self.lever6, self.lever7]
    }

    /// Unit force directions of the expanded form, ordered (5, 6, 7).
    pub fn expanded_directions(&self) -> [Vec2; 3] {
        [self.theta_com, self.theta_6com, self.theta_7com].map(|a| Vec2::new(-a.sin(), a.cos()))
    }
}

/// Builds the chain from the shoulder frame, the two arm angles, the arm
/// link lengths and the COM position.
pub fn build_virtual_chain(
    frame: &ShoulderFrame,
    theta5: f64,
    theta6: f64,
    segments: &SegmentSet,
    com: Vec2,
) -> Result<VirtualChain> {
    let upper = frame.theta_04 + theta5;
    let r5 = Vec2::from_angle(upper) * segments.upper_arm_length();
    let r6 = Vec2::from_angle(upper + theta6) * segments.forearm_length();
    let r_com = com - frame.origin;

    let lever5 = r_com.norm();
    let lever6 = (r_com - r5).norm();
    let lever7 = (r_com - r5 - r6).norm();
    for (quantity, value) in [("lever5", lever5), ("lever6", lever6), ("lever7", lever7)] {
        if !(value >= EPS_SINGULAR) {
            return Err(Error::SingularChain { quantity, value });
        }
    }

    let mut chain = VirtualChain {
        shoulder: frame.origin,
        theta_04: frame.theta_04,
        theta5,
        theta6,
        r5,
        r6,
        r_com,
        handle: frame.origin + r5 + r6,
        lever5,
        lever6,
        lever7,
        theta_com: r_com.angle(),
        theta_6com: 0.0,
        theta_7com: 0.0,
    };
    let (theta_6com, theta_7com) = com_link_angles(&chain)?;
    chain.theta_6com = theta_6com;
    chain.theta_7com = theta_7com;
    Ok(chain)
}

/// Lever angles at the elbow and at the handle from the law of cosines.
pub fn com_link_angles(chain: &VirtualChain) -> Result<(f64, f64)> {
    let upper = chain.r5.norm();
    let fore = chain.r6.norm();
    let to_com = chain.r_com.norm();
    let elbow_com = (chain.r_com - chain.r5).norm();
    let handle_com = (chain.r_com - chain.r5 - chain.r6).norm();

    let elbow_den = 2.0 * upper * elbow_com;
    if !(elbow_den >= EPS_SINGULAR) {
        return Err(Error::SingularChain {
            quantity: "elbow law-of-cosines denominator",
            value: elbow_den,
        });
    }
    let handle_den = 2.0 * fore * handle_com;
    if !(handle_den >= EPS_SINGULAR) {
        return Err(Error::SingularChain {
            quantity: "handle law-of-cosines denominator",
            value: handle_den,
        });
    }

    let elbow_cos = (upper * upper + elbow_com * elbow_com - to_com * to_com) / elbow_den;
    let handle_cos = (fore * fore + handle_com * handle_com - elbow_com * elbow_com) / handle_den;

    let theta_6com = chain.theta_04 + chain.theta5 - PI - clamped_acos(elbow_cos);
    let theta_7com = chain.theta_04 + chain.theta5 + chain.theta6 - PI + clamped_acos(handle_cos);
    Ok((theta_6com, theta_7com))
}

fn clamped_acos(x: f64) -> f64 {
    x.clamp(-1.0, 1.0).acos()
}

/// Endpoint force from the per-joint expanded sum.
pub fn arm_force_expanded(chain: &VirtualChain, torques: &TorqueSet) -> Vec2 {
    let dirs = chain.expanded_directions();
    let levers = chain.levers();
    let taus = torques.shoulder_first();
    (0..3).fold(Vec2::ZERO, |acc, i| acc + dirs[i] * (taus[i] / levers[i]))
}

/// 2x3 Jacobian of the COM endpoint; columns ordered (handle, elbow,
/// shoulder) to pair with (tau7, tau6, tau5).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jacobian2x3 {
    pub columns: [Vec2; 3],
}

impl Jacobian2x3 {
    /// `J J^T` as (a, b, d) for the symmetric matrix [[a, b], [b, d]].
    pub fn gram(&self) -> (f64, f64, f64) {
        self.columns.iter().fold((0.0, 0.0, 0.0), |(a, b, d), c| {
            (a + c.x * c.x, b + c.x * c.y, d + c.y * c.y)
        })
    }

    /// `J tau` with tau ordered like the columns.
    pub fn apply(&self, tau: [f64; 3]) -> Vec2 {
        (0..3).fold(Vec2::ZERO, |acc, i| acc + self.columns[i] * tau[i])
    }

    /// `J^T F`.
    pub fn transpose_apply(&self, force: Vec2) -> [f64; 3] {
        self.columns.map(|c| c.dot(force))
    }

    /// Condition number of `J J^T` (infinite when singular).
    pub fn gram_condition(&self) -> f64 {
        let (a, b, d) = self.gram();
        let mean = 0.5 * (a + d);
        let radius = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        let (hi, lo) = (mean + radius, mean - radius);
        if lo > 0.0 {
            hi / lo
        } else {
            f64::INFINITY
        }
    }
}

pub fn arm_jacobian(chain: &VirtualChain) -> Jacobian2x3 {
    let com = chain.com();
    let joints = [chain.handle, chain.elbow(), chain.shoulder];
    Jacobian2x3 {
        columns: joints.map(|p| (com - p).perp()),
    }
}

/// `F = (J J^T)^-1 J tau`.
pub fn arm_force_lsq(chain: &VirtualChain, torques: &TorqueSet) -> Result<Vec2> {
    let jacobian = arm_jacobian(chain);
    let condition = jacobian.gram_condition();
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned { condition });
    }
    let (a, b, d) = jacobian.gram();
    let rhs = jacobian.apply(torques.handle_first());
    let det = a * d - b * b;
    Ok(Vec2::new(
        (d * rhs.x - b * rhs.y) / det,
        (a * rhs.y - b * rhs.x) / det,
    ))
}

/// `|F| / |tau|`.
pub fn mechanical_advantage(force: Vec2, torques: &TorqueSet) -> Result<f64> {
    let norm = torques.norm();
    if norm == 0.0 {
        return Err(Error::ZeroTorque);
    }
    Ok(force.norm() / norm)
}

/// Force component along the unit direction `v`.
pub fn directed_advantage(force: Vec2, v: Vec2) -> f64 {
    let value = force.dot(v);
    debug_assert!({
        let angle = force.cross(v).atan2(force.dot(v));
        (value - force.norm() * v.norm() * angle.cos()).abs() <= 1e-9 * (1.0 + force.norm())
    });
    value
}
