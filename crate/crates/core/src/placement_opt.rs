//! Exhaustive grid search for the handle placement that maximizes the arm
//! force along the COM direction, minus a penalty on `|cos theta6|` for
//! nearly straight or fully folded elbows.
//!
//! Grid points are independent; with the `parallel` feature they are
//! evaluated on the rayon pool. The reduction always runs sequentially over
//! the stored samples, so the argmax does not depend on the schedule.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::arm_kinetics::{
    arm_force_expanded, arm_force_lsq, build_virtual_chain, directed_advantage, TorqueSet,
    VirtualChain,
};
use crate::body_model::{BodyPose, ComState, SegmentSet, ShoulderFrame};
use crate::error::{Error, Result};
use crate::geometry::Vec2;

/// Minimum clearance of the elbow range from 0 and +-pi.
pub const ELBOW_CLEARANCE: f64 = 2.0 * PI / 180.0;

/// Two objective values closer than this count as a tie for uniqueness.
pub const UNIQUENESS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointLimits {
    pub theta5_min: f64,
    pub theta5_max: f64,
    pub theta6_min: f64,
    pub theta6_max: f64,
}

impl Default for JointLimits {
    /// Shoulder 5 deg of extension to 240 deg of flexion for a body facing
    /// `+x`, elbow 5..175 deg.
    fn default() -> Self {
        Self::from_degrees([-185.0, 60.0, 5.0, 175.0])
    }
}

impl JointLimits {
    /// `[theta5_min, theta5_max, theta6_min, theta6_max]` in degrees.
    pub fn from_degrees(deg: [f64; 4]) -> Self {
        let [a, b, c, d] = deg.map(f64::to_radians);
        Self {
            theta5_min: a,
            theta5_max: b,
            theta6_min: c,
            theta6_max: d,
        }
    }

    pub fn to_degrees(&self) -> [f64; 4] {
        [
            self.theta5_min,
            self.theta5_max,
            self.theta6_min,
            self.theta6_max,
        ]
        .map(f64::to_degrees)
    }

    pub fn contains(&self, theta5: f64, theta6: f64) -> bool {
        (self.theta5_min..=self.theta5_max).contains(&theta5)
            && (self.theta6_min..=self.theta6_max).contains(&theta6)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.theta5_min,
            self.theta5_max,
            self.theta6_min,
            self.theta6_max,
        ];
        if !all.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidLimits("limits must be finite".into()));
        }
        if !(self.theta5_min < self.theta5_max) {
            return Err(Error::InvalidLimits("theta5 min must be below max".into()));
        }
        if !(self.theta6_min < self.theta6_max) {
            return Err(Error::InvalidLimits("theta6 min must be below max".into()));
        }
        let tol = 1e-12;
        let first = ((self.theta6_min - ELBOW_CLEARANCE) / PI).floor() as i64;
        let last = ((self.theta6_max + ELBOW_CLEARANCE) / PI).ceil() as i64;
        for k in first..=last {
            let fold = k as f64 * PI;
            if fold > self.theta6_min - ELBOW_CLEARANCE + tol
                && fold < self.theta6_max + ELBOW_CLEARANCE - tol
            {
                return Err(Error::InvalidLimits(format!(
                    "theta6 range must stay at least 2 deg away from {} deg",
                    (k * 180)
                )));
            }
        }
        Ok(())
    }
}

/// Which endpoint-force route the objective uses.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ForceModel {
    #[default]
    #[serde(rename = "expanded")]
    Expanded,
    #[serde(rename = "lsq", alias = "least-squares")]
    LeastSquares,
}

impl ForceModel {
    pub fn as_str(&self) -> &'static str {
        match self {
            ForceModel::Expanded => "expanded",
            ForceModel::LeastSquares => "lsq",
        }
    }
}

impl std::str::FromStr for ForceModel {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "expanded" => Ok(ForceModel::Expanded),
            "lsq" | "least-squares" => Ok(ForceModel::LeastSquares),
            other => Err(format!(
                "unknown force model '{other}' (expected expanded or lsq)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveConfig {
    /// Weight of the `|cos theta6|` penalty.
    pub a: f64,
    /// (|tau5|, |tau6|, |tau7|), N*m.
    pub torque_magnitudes: [f64; 3],
    pub force_model: ForceModel,
    /// radians
    pub grid_step: f64,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        Self {
            a: 0.2,
            torque_magnitudes: [1.0; 3],
            force_model: ForceModel::Expanded,
            grid_step: 0.5_f64.to_radians(),
        }
    }
}

impl ObjectiveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.a >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "a must be >= 0, got {}",
                self.a
            )));
        }
        if !self
            .torque_magnitudes
            .iter()
            .all(|t| t.is_finite() && *t > 0.0)
        {
            return Err(Error::InvalidConfig(format!(
                "torque magnitudes must be > 0, got {:?}",
                self.torque_magnitudes
            )));
        }
        if !(self.grid_step.is_finite() && self.grid_step > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "grid step must be > 0, got {}",
                self.grid_step
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotParams {
    /// Maximum handle distance from the robot arm base point, m.
    pub reach_limit: f64,
    /// (min, max) handle height above the floor, m.
    pub handle_height_range: (f64, f64),
    pub handle_length: f64,
    pub handle_diameter: f64,
    /// Robot arm base point in world coordinates; the reach check is
    /// skipped when absent.
    pub arm_base: Option<Vec2>,
}

impl Default for RobotParams {
    fn default() -> Self {
        Self {
            reach_limit: 0.44,
            handle_height_range: (0.3, 1.3),
            handle_length: 0.46,
            handle_diameter: 0.038,
            arm_base: None,
        }
    }
}

impl RobotParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("reach_limit", self.reach_limit),
            ("handle_length", self.handle_length),
            ("handle_diameter", self.handle_diameter),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidRobot(format!("{name} must be > 0, got {v}")));
            }
        }
        let (lo, hi) = self.handle_height_range;
        if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo < hi) {
            return Err(Error::InvalidRobot(format!(
                "handle height range must satisfy 0 <= min < max, got ({lo}, {hi})"
            )));
        }
        if let Some(base) = self.arm_base {
            if !base.is_finite() {
                return Err(Error::InvalidRobot("arm base point must be finite".into()));
            }
        }
        Ok(())
    }
}

/// Everything the objective needs about the body at the max-effort frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacementContext {
    pub frame: ShoulderFrame,
    pub com: ComState,
    pub segments: SegmentSet,
}

impl PlacementContext {
    pub fn new(frame: ShoulderFrame, com: ComState, segments: SegmentSet) -> Self {
        Self {
            frame,
            com,
            segments,
        }
    }

    pub fn from_pose(pose: &BodyPose, com: ComState, segments: &SegmentSet) -> Self {
        Self::new(
            crate::body_model::shoulder_frame(pose, segments),
            com,
            segments.clone(),
        )
    }

    /// The whole context rotated rigidly by `angle` about `pivot`.
    pub fn rotated_about(&self, pivot: Vec2, angle: f64) -> Self {
        Self {
            frame: self.frame.rotated_about(pivot, angle),
            com: self.com.rotated_about(pivot, angle),
            segments: self.segments.clone(),
        }
    }

    pub fn chain(&self, theta5: f64, theta6: f64) -> Result<VirtualChain> {
        build_virtual_chain(
            &self.frame,
            theta5,
            theta6,
            &self.segments,
            self.com.position,
        )
    }
}

/// Signs each torque so its expanded-form force term has a non-negative
/// component along `v`.
pub fn torque_signs(chain: &VirtualChain, v: Vec2, magnitudes: [f64; 3]) -> TorqueSet {
    let dirs = chain.expanded_directions();
    let signed = |i: usize| {
        if dirs[i].dot(v) >= 0.0 {
            magnitudes[i]
        } else {
            -magnitudes[i]
        }
    };
    TorqueSet::new(signed(0), signed(1), signed(2))
}

/// Signs of (tau5, tau6, tau7) as +-1.
pub fn sign_vector(torques: &TorqueSet) -> [i8; 3] {
    torques
        .shoulder_first()
        .map(|t| if t.is_sign_negative() { -1 } else { 1 })
}

/// One objective evaluation with its intermediate quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    /// `F_arm . v`
    pub directed: f64,
    /// `a |cos theta6|`
    pub penalty: f64,
    pub f_arm: Vec2,
    pub torques: TorqueSet,
    pub chain: VirtualChain,
}

pub fn evaluate(
    theta5: f64,
    theta6: f64,
    context: &PlacementContext,
    config: &ObjectiveConfig,
) -> Result<Evaluation> {
    let chain = context.chain(theta5, theta6)?;
    let v = context.com.direction;
    let torques = torque_signs(&chain, v, config.torque_magnitudes);
    let f_arm = match config.force_model {
        ForceModel::Expanded => arm_force_expanded(&chain, &torques),
        ForceModel::LeastSquares => arm_force_lsq(&chain, &torques)?,
    };
    let directed = directed_advantage(f_arm, v);
    let penalty = config.a * theta6.cos().abs();
    Ok(Evaluation {
        value: directed - penalty,
        directed,
        penalty,
        f_arm,
        torques,
        chain,
    })
}

/// `F_arm . v - a |cos theta6|` at one arm configuration.
pub fn objective(
    theta5: f64,
    theta6: f64,
    context: &PlacementContext,
    config: &ObjectiveConfig,
) -> Result<f64> {
    evaluate(theta5, theta6, context, config).map(|e| e.value)
}

/// Grip position for the given shoulder frame and arm angles.
pub fn handle_position(
    shoulder: Vec2,
    theta_04: f64,
    theta5: f64,
    theta6: f64,
    segments: &SegmentSet,
) -> Vec2 {
    let upper = theta_04 + theta5;
    shoulder
        + Vec2::from_angle(upper) * segments.upper_arm_length()
        + Vec2::from_angle(upper + theta6) * segments.forearm_length()
}

/// A geometric limit the handle placement breaks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// Handle farther from the robot arm base than the tipping limit.
    RobotReach {
        distance: f64,
        limit: f64,
    },
    BelowFloor {
        height: f64,
    },
    HeightRange {
        height: f64,
        min: f64,
        max: f64,
    },
    /// Handle farther from the shoulder than the arm can reach.
    ArmReach {
        distance: f64,
        reach: f64,
    },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::RobotReach { distance, limit } => write!(
                f,
                "handle is {distance:.4} m from the robot arm base, beyond the {limit:.2} m reach limit"
            ),
            Violation::BelowFloor { height } => {
                write!(f, "handle is {:.4} m below the floor", -height)
            }
            Violation::HeightRange { height, min, max } => write!(
                f,
                "handle height {height:.4} m is outside [{min:.2}, {max:.2}] m"
            ),
            Violation::ArmReach { distance, reach } => write!(
                f,
                "handle is {distance:.4} m from the shoulder, beyond the {reach:.4} m arm reach"
            ),
        }
    }
}

/// Robot and arm limits broken by a handle at `handle`.
pub fn handle_violations(
    handle: Vec2,
    shoulder: Vec2,
    arm_reach: f64,
    robot: &RobotParams,
    floor_y: f64,
) -> Vec<Violation> {
    let mut out = Vec::new();
    if let Some(base) = robot.arm_base {
        let distance = handle.distance(base);
        if distance > robot.reach_limit {
            out.push(Violation::RobotReach {
                distance,
                limit: robot.reach_limit,
            });
        }
    }
    let height = handle.y - floor_y;
    let (min, max) = robot.handle_height_range;
    if height < 0.0 {
        out.push(Violation::BelowFloor { height });
    } else if height < min || height > max {
        out.push(Violation::HeightRange { height, min, max });
    }
    let distance = handle.distance(shoulder);
    if distance > arm_reach + 1e-12 {
        out.push(Violation::ArmReach {
            distance,
            reach: arm_reach,
        });
    }
    out
}

pub fn feasibility_check(
    placement: &Placement,
    robot: &RobotParams,
    floor_y: f64,
) -> Vec<Violation> {
    handle_violations(
        placement.handle,
        placement.shoulder,
        placement.arm_reach,
        robot,
        floor_y,
    )
}

/// Evenly spaced samples `min + i * step`, `i = 0..count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub min: f64,
    pub step: f64,
    pub count: usize,
}

impl GridAxis {
    /// Samples from `min` up to and including `max` where it falls on the grid.
    pub fn spanning(min: f64, max: f64, step: f64) -> Self {
        let count = ((max - min) / step + 1e-9).floor() as usize + 1;
        Self { min, step, count }
    }

    pub fn value(&self, index: usize) -> f64 {
        self.min + index as f64 * self.step
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(|i| self.value(i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSample {
    pub theta5: f64,
    pub theta6: f64,
    /// `None` where the chain is singular or ill-conditioned.
    pub objective: Option<f64>,
    /// Evaluable and inside every robot limit.
    pub feasible: bool,
}

/// The objective over the whole search grid, `theta5` outer and `theta6`
/// inner.
#[derive(Debug, Clone, PartialEq)]
pub struct Landscape {
    pub theta5_axis: GridAxis,
    pub theta6_axis: GridAxis,
    pub samples: Vec<GridSample>,
    /// Index of the returned optimum in `samples`.
    pub argmax: usize,
}

impl Landscape {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn max_objective(&self) -> Option<f64> {
        self.samples[self.argmax].objective
    }

    /// Finite objective range over the grid.
    pub fn objective_range(&self) -> Option<(f64, f64)> {
        self.samples
            .iter()
            .filter_map(|s| s.objective)
            .fold(None, |acc, v| match acc {
                None => Some((v, v)),
                Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
            })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Falls back to sequential when built without the `parallel` feature.
    #[default]
    Parallel,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub execution: Execution,
    /// Exclude grid points that break a robot limit from the argmax.
    pub constrained: bool,
    pub floor_y: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            execution: Execution::default(),
            constrained: false,
            floor_y: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub theta5_opt: f64,
    pub theta6_opt: f64,
    pub handle: Vec2,
    pub objective_value: f64,
    pub f_arm: Vec2,
    pub torques: TorqueSet,
    /// (s5, s6, s7)
    pub torque_signs: [i8; 3],
    pub feasibility: Vec<Violation>,
    pub shoulder: Vec2,
    pub arm_reach: f64,
    /// Best value minus the best value at any other grid point.
    pub runner_up_gap: Option<f64>,
    pub evaluated_points: usize,
    pub singular_points: usize,
}

impl Placement {
    /// True when no other grid point comes within [`UNIQUENESS_TOL`].
    pub fn is_unique(&self) -> bool {
        self.runner_up_gap.is_none_or(|gap| gap > UNIQUENESS_TOL)
    }
}

pub fn optimize_placement(
    context: &PlacementContext,
    limits: &JointLimits,
    config: &ObjectiveConfig,
    robot: &RobotParams,
    options: &SearchOptions,
) -> Result<Placement> {
    search(context, limits, config, robot, options).map(|(p, _)| p)
}

/// Grid search returning the optimum and the full landscape.
pub fn search(
    context: &PlacementContext,
    limits: &JointLimits,
    config: &ObjectiveConfig,
    robot: &RobotParams,
    options: &SearchOptions,
) -> Result<(Placement, Landscape)> {
    limits.validate()?;
    config.validate()?;
    robot.validate()?;

    let t5_axis = GridAxis::spanning(limits.theta5_min, limits.theta5_max, config.grid_step);
    let t6_axis = GridAxis::spanning(limits.theta6_min, limits.theta6_max, config.grid_step);
    let arm_reach = context.segments.arm_reach();
    let shoulder = context.frame.origin;

    let sample = |k: usize| {
        let theta5 = t5_axis.value(k / t6_axis.count);
        let theta6 = t6_axis.value(k % t6_axis.count);
        let objective = objective(theta5, theta6, context, config).ok();
        let feasible = objective.is_some() && {
            let handle = handle_position(
                shoulder,
                context.frame.theta_04,
                theta5,
                theta6,
                &context.segments,
            );
            handle_violations(handle, shoulder, arm_reach, robot, options.floor_y).is_empty()
        };
        GridSample {
            theta5,
            theta6,
            objective,
            feasible,
        }
    };
    let total = t5_axis.count * t6_axis.count;
    let samples = evaluate_grid(total, options.execution, sample);

    let eligible = |s: &GridSample| s.objective.is_some() && (!options.constrained || s.feasible);
    let argmax = select_argmax(&samples, eligible).ok_or(Error::NoFeasiblePoint)?;
    let best = samples[argmax];
    let best_value = best.objective.expect("argmax is evaluable");
    let runner_up = samples
        .iter()
        .enumerate()
        .filter(|(k, s)| *k != argmax && eligible(s))
        .filter_map(|(_, s)| s.objective)
        .fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |a| a.max(v)))
        });

    let eval = evaluate(best.theta5, best.theta6, context, config)?;
    let mut placement = Placement {
        theta5_opt: best.theta5,
        theta6_opt: best.theta6,
        handle: eval.chain.handle,
        objective_value: best_value,
        f_arm: eval.f_arm,
        torques: eval.torques,
        torque_signs: sign_vector(&eval.torques),
        feasibility: Vec::new(),
        shoulder,
        arm_reach,
        runner_up_gap: runner_up.map(|r| best_value - r),
        evaluated_points: total,
        singular_points: samples.iter().filter(|s| s.objective.is_none()).count(),
    };
    placement.feasibility = feasibility_check(&placement, robot, options.floor_y);

    let landscape = Landscape {
        theta5_axis: t5_axis,
        theta6_axis: t6_axis,
        samples,
        argmax,
    };
    Ok((placement, landscape))
}

fn evaluate_grid<F>(total: usize, execution: Execution, sample: F) -> Vec<GridSample>
where
    F: Fn(usize) -> GridSample + Sync + Send,
{
    match execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..total).into_par_iter().map(sample).collect()
        }
        _ => (0..total).map(sample).collect(),
    }
}

/// Index of the largest objective among eligible samples; ties go to the
/// smaller theta6, then the smaller theta5.
pub fn select_argmax<P>(samples: &[GridSample], eligible: P) -> Option<usize>
where
    P: Fn(&GridSample) -> bool,
{
    let mut best: Option<(usize, f64)> = None;
    for (k, s) in samples.iter().enumerate() {
        if !eligible(s) {
            continue;
        }
        let Some(value) = s.objective else { continue };
        if value.is_nan() {
            continue;
        }
        let better = match best {
            None => true,
            Some((j, bv)) => {
                let b = &samples[j];
                value > bv
                    || (value == bv
                        && (s.theta6 < b.theta6 || (s.theta6 == b.theta6 && s.theta5 < b.theta5)))
            }
        };
        if better {
            best = Some((k, value));
        }
    }
    best.map(|(k, _)| k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body_model::SegmentSet;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::FRAC_PI_2;

    fn context(com: Vec2, v: Vec2) -> PlacementContext {
        PlacementContext::new(
            ShoulderFrame {
                origin: Vec2::ZERO,
                theta_04: FRAC_PI_2,
            },
            ComState {
                position: com,
                direction: v,
                speed: 0.2,
            },
            SegmentSet::default_adult(),
        )
    }

    fn unit_arm() -> SegmentSet {
        let mut segments = SegmentSet::default_adult().segments;
        segments[5].length = 1.0;
        segments[6].length = 1.0;
        SegmentSet::new(segments, 60.0).unwrap()
    }

    #[test]
    fn handle_straight_and_bent() {
        let set = unit_arm();
        let s = Vec2::new(0.3, 1.2);
        let straight = handle_position(s, 0.0, 0.0, 0.0, &set);
        assert!((straight - (s + Vec2::new(2.0, 0.0))).norm() < 1e-15);
        let bent = handle_position(s, 0.0, 0.0, FRAC_PI_2, &set);
        assert!((bent - (s + Vec2::new(1.0, 1.0))).norm() < 1e-15);
    }

    #[test]
    fn handle_matches_chain() {
        let ctx = context(Vec2::new(0.05, -0.45), Vec2::new(0.0, 1.0));
        let chain = ctx.chain(-2.5, 1.1).unwrap();
        let h = handle_position(
            ctx.frame.origin,
            ctx.frame.theta_04,
            -2.5,
            1.1,
            &ctx.segments,
        );
        assert_eq!(h, chain.handle);
    }

    #[test]
    fn signs_follow_direction() {
        let ctx = context(Vec2::new(0.05, -0.45), Vec2::new(0.0, 1.0));
        let chain = ctx.chain(-2.5, 1.1).unwrap();
        let dirs = chain.expanded_directions();
        // a direction with positive dot against all three terms
        let v = (dirs[0] + dirs[1] + dirs[2]).try_normalize().unwrap();
        if dirs.iter().all(|d| d.dot(v) > 0.0) {
            assert_eq!(sign_vector(&torque_signs(&chain, v, [1.0; 3])), [1, 1, 1]);
            assert_eq!(
                sign_vector(&torque_signs(&chain, -v, [1.0; 3])),
                [-1, -1, -1]
            );
        }
        let mut rng = StdRng::seed_from_u64(17);
        for _ in 0..200 {
            let v = Vec2::from_angle(rng.random_range(-PI..PI));
            let a = torque_signs(&chain, v, [1.0; 3]);
            let b = torque_signs(&chain, -v, [1.0; 3]);
            let flipped = sign_vector(&b);
            let orig = sign_vector(&a);
            for i in 0..3 {
                // ties at exactly zero dot keep +1 in both directions
                if dirs[i].dot(v) != 0.0 {
                    assert_eq!(orig[i], -flipped[i]);
                }
            }
        }
    }

    #[test]
    fn signs_beat_brute_force() {
        let mut rng = StdRng::seed_from_u64(23);
        let mut checked = 0;
        while checked < 200 {
            let com = Vec2::from_angle(rng.random_range(-PI..PI)) * rng.random_range(0.1..0.9);
            let ctx = context(com, Vec2::from_angle(rng.random_range(-PI..PI)));
            let Ok(chain) = ctx.chain(rng.random_range(-PI..PI), rng.random_range(0.1..3.0)) else {
                continue;
            };
            let mags = [
                rng.random_range(0.5..3.0),
                rng.random_range(0.5..3.0),
                rng.random_range(0.5..3.0),
            ];
            let v = ctx.com.direction;
            let chosen = arm_force_expanded(&chain, &torque_signs(&chain, v, mags)).dot(v);
            for mask in 0..8u32 {
                let s = |bit: u32, m: f64| if mask & (1 << bit) != 0 { -m } else { m };
                let t = TorqueSet::new(s(0, mags[0]), s(1, mags[1]), s(2, mags[2]));
                assert!(chosen >= arm_force_expanded(&chain, &t).dot(v) - 1e-12);
            }
            checked += 1;
        }
    }

    #[test]
    fn penalty_vanishes_at_right_angle() {
        let ctx = context(Vec2::new(0.05, -0.45), Vec2::new(0.0, 1.0));
        let config = ObjectiveConfig::default();
        let e = evaluate(-2.0, FRAC_PI_2, &ctx, &config).unwrap();
        assert!(e.penalty < 1e-16);
        assert!((e.value - e.directed).abs() < 1e-16);
    }

    #[test]
    fn pure_penalty_at_straight_elbow() {
        // v perpendicular to every force term: F . v = 0. With the COM on
        // the straight arm line every lever angle is the line direction, so
        // all perpendiculars are the same vector.
        let ctx = context(Vec2::new(1.0, 0.0), Vec2::new(1.0, 0.0));
        let chain = ctx.chain(-FRAC_PI_2, 0.0).unwrap();
        let config = ObjectiveConfig::default();
        let e = evaluate(-FRAC_PI_2, 0.0, &ctx, &config).unwrap();
        for d in chain.expanded_directions() {
            assert!(d.dot(ctx.com.direction).abs() < 1e-15);
        }
        assert!((e.value - (-0.2)).abs() < 1e-15, "{}", e.value);
    }

    #[test]
    fn single_point_domain() {
        let ctx = context(Vec2::new(0.05, -0.45), Vec2::new(0.0, 1.0));
        let limits = JointLimits::from_degrees([-120.0, -119.8, 90.0, 90.3]);
        let config = ObjectiveConfig::default();
        let (p, land) = search(
            &ctx,
            &limits,
            &config,
            &RobotParams::default(),
            &SearchOptions::default(),
        )
        .unwrap();
        assert_eq!(land.len(), 1);
        assert_eq!(p.theta5_opt, limits.theta5_min);
        assert_eq!(p.theta6_opt, limits.theta6_min);
        assert_eq!(
            p.objective_value,
            objective(p.theta5_opt, p.theta6_opt, &ctx, &config).unwrap()
        );
        assert!(p.runner_up_gap.is_none() && p.is_unique());
    }

    #[test]
    fn all_singular_is_reported() {
        // COM exactly at the handle for the only grid point
        let set = SegmentSet::default_adult();
        let frame = ShoulderFrame {
            origin: Vec2::ZERO,
            theta_04: 0.0,
        };
        let t6 = 1.0;
        let handle = handle_position(Vec2::ZERO, 0.0, 0.0, t6, &set);
        let ctx = PlacementContext::new(
            frame,
            ComState {
                position: handle,
                direction: Vec2::new(1.0, 0.0),
                speed: 1.0,
            },
            set,
        );
        let limits = JointLimits {
            theta5_min: 0.0,
            theta5_max: 1e-3,
            theta6_min: t6,
            theta6_max: t6 + 1e-3,
        };
        let err = optimize_placement(
            &ctx,
            &limits,
            &ObjectiveConfig::default(),
            &RobotParams::default(),
            &SearchOptions::default(),
        )
        .unwrap_err();
        assert_eq!(err, Error::NoFeasiblePoint);
    }

    #[test]
    fn limits_validation() {
        assert!(JointLimits::default().validate().is_ok());
        assert!(JointLimits::from_degrees([0.0, 10.0, 1.0, 90.0])
            .validate()
            .is_err());
        assert!(JointLimits::from_degrees([0.0, 10.0, 5.0, 179.0])
            .validate()
            .is_err());
        assert!(JointLimits::from_degrees([0.0, 10.0, -175.0, -5.0])
            .validate()
            .is_ok());
        assert!(JointLimits::from_degrees([10.0, 0.0, 5.0, 175.0])
            .validate()
            .is_err());
        assert!(JointLimits::from_degrees([0.0, 10.0, 2.0, 178.0])
            .validate()
            .is_ok());
    }

    #[test]
    fn tie_break_is_lexicographic() {
        let s = |t5: f64, t6: f64, v: f64| GridSample {
            theta5: t5,
            theta6: t6,
            objective: Some(v),
            feasible: true,
        };
        let samples = vec![
            s(0.0, 0.5, 1.0),
            s(0.2, 0.3, 1.0),
            s(0.1, 0.3, 1.0),
            s(0.3, 0.9, 0.5),
        ];
        assert_eq!(select_argmax(&samples, |_| true), Some(2));
        let samples = vec![s(0.0, 0.5, 1.0), s(0.0, 0.4, f64::NAN)];
        assert_eq!(select_argmax(&samples, |_| true), Some(0));
    }

    #[test]
    fn feasibility_flags() {
        let robot = RobotParams {
            arm_base: Some(Vec2::new(0.0, 0.9)),
            handle_height_range: (0.4, 1.2),
            ..RobotParams::default()
        };
        let at = |handle: Vec2| handle_violations(handle, Vec2::new(0.0, 1.2), 0.62, &robot, 0.0);
        assert!(at(Vec2::new(0.3, 0.9)).is_empty());
        assert_eq!(
            at(Vec2::new(0.5, 0.9)),
            vec![Violation::RobotReach {
                distance: 0.5,
                limit: 0.44
            }]
        );
        assert!(matches!(
            at(Vec2::new(0.0, -0.05)).as_slice(),
            [
                Violation::RobotReach { .. },
                Violation::BelowFloor { .. },
                Violation::ArmReach { .. }
            ]
        ));
        assert!(matches!(
            at(Vec2::new(0.1, 1.3)).as_slice(),
            [Violation::HeightRange { .. }]
        ));
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let ctx = context(
            Vec2::new(0.05, -0.45),
            Vec2::new(0.3, 0.95).try_normalize().unwrap(),
        );
        let config = ObjectiveConfig {
            grid_step: 2f64.to_radians(),
            ..ObjectiveConfig::default()
        };
        let run = |execution| {
            search(
                &ctx,
                &JointLimits::default(),
                &config,
                &RobotParams::default(),
                &SearchOptions {
                    execution,
                    ..SearchOptions::default()
                },
            )
            .unwrap()
        };
        let (a, la) = run(Execution::Sequential);
        let (b, lb) = run(Execution::Parallel);
        assert_eq!(a, b);
        assert_eq!(la, lb);
    }

    #[test]
    fn argmax_dominates_grid() {
        let ctx = context(Vec2::new(0.1, -0.5), Vec2::new(0.0, 1.0));
        let config = ObjectiveConfig {
            grid_step: 1f64.to_radians(),
            ..ObjectiveConfig::default()
        };
        let (p, land) = search(
            &ctx,
            &JointLimits::default(),
            &config,
            &RobotParams::default(),
            &SearchOptions::default(),
        )
        .unwrap();
        for s in &land.samples {
            if let Some(v) = s.objective {
                assert!(p.objective_value >= v);
            }
        }
        assert!(p.handle.distance(p.shoulder) <= p.arm_reach + 1e-12);
        assert_eq!(land.len(), land.theta5_axis.count * land.theta6_axis.count);
    }

    #[test]
    fn constrained_mode_respects_robot_limits() {
        let ctx = context(Vec2::new(0.1, -0.5), Vec2::new(0.0, 1.0));
        let config = ObjectiveConfig {
            grid_step: 1f64.to_radians(),
            ..ObjectiveConfig::default()
        };
        let robot = RobotParams {
            arm_base: Some(Vec2::new(0.6, -0.2)),
            handle_height_range: (0.0, 3.0),
            ..RobotParams::default()
        };
        let options = SearchOptions {
            constrained: true,
            floor_y: -2.0,
            ..SearchOptions::default()
        };
        let (p, land) = search(&ctx, &JointLimits::default(), &config, &robot, &options).unwrap();
        assert!(p.feasibility.is_empty());
        assert!(land.samples[land.argmax].feasible);
        for s in land.samples.iter().filter(|s| s.feasible) {
            assert!(p.objective_value >= s.objective.unwrap());
        }
    }

    #[test]
    fn halving_step_never_loses_objective() {
        let ctx = context(Vec2::new(-0.1, -0.5), Vec2::new(0.6, 0.8));
        let mut config = ObjectiveConfig {
            grid_step: 2f64.to_radians(),
            ..ObjectiveConfig::default()
        };
        let run = |c: &ObjectiveConfig| {
            optimize_placement(
                &ctx,
                &JointLimits::default(),
                c,
                &RobotParams::default(),
                &SearchOptions::default(),
            )
            .unwrap()
        };
        let coarse = run(&config);
        config.grid_step /= 2.0;
        let fine = run(&config);
        assert!(fine.objective_value >= coarse.objective_value);
    }

    #[test]
    fn torque_scaling_is_linear_in_force_term() {
        let ctx = context(Vec2::new(0.1, -0.5), Vec2::new(0.0, 1.0));
        let base = ObjectiveConfig::default();
        let k = 3.5;
        let scaled = ObjectiveConfig {
            torque_magnitudes: [k; 3],
            ..base
        };
        let mut rng = StdRng::seed_from_u64(31);
        for _ in 0..100 {
            let (t5, t6) = (rng.random_range(-3.0..1.0), rng.random_range(0.1..3.0));
            let (Ok(a), Ok(b)) = (
                evaluate(t5, t6, &ctx, &base),
                evaluate(t5, t6, &ctx, &scaled),
            ) else {
                continue;
            };
            assert!((b.directed - k * a.directed).abs() < 1e-12 * (1.0 + b.directed.abs()));
        }
        // with no penalty the argmax ignores the magnitude
        let cfg0 = ObjectiveConfig {
            a: 0.0,
            grid_step: 1f64.to_radians(),
            ..base
        };
        let cfg0k = ObjectiveConfig {
            torque_magnitudes: [k; 3],
            ..cfg0
        };
        let run = |c: &ObjectiveConfig| {
            optimize_placement(
                &ctx,
                &JointLimits::default(),
                c,
                &RobotParams::default(),
                &SearchOptions::default(),
            )
            .unwrap()
        };
        let (p, q) = (run(&cfg0), run(&cfg0k));
        assert_eq!((p.theta5_opt, p.theta6_opt), (q.theta5_opt, q.theta6_opt));
    }
}
