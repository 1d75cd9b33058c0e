//! Scenario files: strict JSON documents with degrees and meters at the
//! boundary, converted to radians on load.

mod report;

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::body_model::{
    com_velocity, shoulder_frame, BodyPose, ComState, LinkSegment, PoseFrame, SegmentSet,
    NONARM_MASS_BAND, SEGMENT_COUNT,
};
use crate::error::Error;
use crate::geometry::Vec2;
use crate::placement_opt::{JointLimits, ObjectiveConfig, PlacementContext, RobotParams};

pub use report::{
    build_report, landscape_csv, read_report, write_placement_report, ForceModelValues,
    GridSummary, OptimumReport, PlacementReport, ReportPaths, LANDSCAPE_FILE, REPORT_FILE,
};

pub const SCHEMA_VERSION: &str = "1";

/// Max-effort COM speeds below this draw a warning, m/s.
pub const SLOW_COM_SPEED: f64 = 1e-3;

/// Nominal non-arm share of body mass that the warning band surrounds.
pub const NOMINAL_NONARM_FRACTION: f64 = 0.93;

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("schema: {0}")]
    Schema(String),

    /// The first error-severity finding; `code` names the invariant.
    #[error("{code}: {message}")]
    Validation { code: &'static str, message: String },
}

impl ScenarioError {
    fn from_json(err: serde_json::Error) -> Self {
        use serde_json::error::Category;
        match err.classify() {
            Category::Syntax | Category::Eof => ScenarioError::Parse {
                line: err.line(),
                column: err.column(),
                message: err.to_string(),
            },
            Category::Data => ScenarioError::Schema(err.to_string()),
            Category::Io => ScenarioError::Schema(err.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Finding {
    pub severity: Severity,
    pub code: &'static str,
    pub message: String,
}

impl Finding {
    fn error(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Error,
            code,
            message: message.into(),
        }
    }

    fn warning(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Warning,
            code,
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{tag}[{}]: {}", self.code, self.message)
    }
}

/// A body motion, its max-effort frame and the search settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub segments: SegmentSet,
    pub frames: Vec<PoseFrame>,
    pub max_effort_index: usize,
    pub limits: JointLimits,
    pub objective: ObjectiveConfig,
    pub robot: RobotParams,
    /// meters
    pub floor_y: f64,
}

impl Scenario {
    pub fn max_effort_pose(&self) -> &BodyPose {
        &self.frames[self.max_effort_index].pose
    }

    pub fn com_state(&self) -> Result<ComState, Error> {
        com_velocity(&self.frames, &self.segments, self.max_effort_index)
    }

    /// Shoulder frame and COM state at the max-effort frame.
    pub fn context(&self) -> Result<PlacementContext, Error> {
        let com = self.com_state()?;
        Ok(PlacementContext::new(
            shoulder_frame(self.max_effort_pose(), &self.segments),
            com,
            self.segments.clone(),
        ))
    }

    pub fn to_json(&self) -> String {
        let mut text =
            serde_json::to_string_pretty(&ScenarioFile::from(self)).expect("scenario serializes");
        text.push('\n');
        text
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scenario(&text)
}

/// Parses and validates; warnings do not fail the load.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let scenario = parse_scenario_unvalidated(text)?;
    if let Some(first) = validate_scenario(&scenario)
        .into_iter()
        .find(Finding::is_error)
    {
        return Err(ScenarioError::Validation {
            code: first.code,
            message: first.message,
        });
    }
    Ok(scenario)
}

/// Schema checks and unit conversion only.
pub fn parse_scenario_unvalidated(text: &str) -> Result<Scenario, ScenarioError> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(|err| {
        // a type mismatch can surface before a later syntax error
        match serde_json::from_str::<serde_json::Value>(text) {
            Err(syntax) => ScenarioError::from_json(syntax),
            Ok(_) => ScenarioError::from_json(err),
        }
    })?;
    file.into_scenario()
}

pub fn save_scenario(scenario: &Scenario, path: impl AsRef<Path>) -> Result<(), ScenarioError> {
    let path = path.as_ref();
    std::fs::write(path, scenario.to_json()).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Every invariant breach as an error finding, plus advisory warnings.
pub fn validate_scenario(scenario: &Scenario) -> Vec<Finding> {
    let mut out = Vec::new();

    for err in scenario.segments.violations() {
        let code = match err {
            Error::MassClosure { .. } => "E_MASS_CLOSURE",
            _ => "E_SEGMENT",
        };
        out.push(Finding::error(code, err.to_string()));
    }
    let fraction = scenario.segments.nonarm_fraction();
    let (lo, hi) = NONARM_MASS_BAND;
    if fraction.is_finite() && !(lo..=hi).contains(&fraction) {
        out.push(Finding::warning(
            "W_NONARM_MASS",
            format!(
                "non-arm links carry {:.1}% of body mass, outside the {:.0}-{:.0}% band around the nominal {:.0}%",
                100.0 * fraction,
                100.0 * lo,
                100.0 * hi,
                100.0 * NOMINAL_NONARM_FRACTION
            ),
        ));
    }

    let frames = &scenario.frames;
    for (i, f) in frames.iter().enumerate() {
        if !(f.pose.is_finite() && f.time.is_finite()) {
            out.push(Finding::error(
                "E_FRAME",
                format!("frame {i} has a non-finite value"),
            ));
        }
    }
    for i in 1..frames.len() {
        if !(frames[i].time > frames[i - 1].time) {
            out.push(Finding::error(
                "E_TIME_ORDER",
                format!(
                    "frame {i} time {} s does not follow {} s",
                    frames[i].time,
                    frames[i - 1].time
                ),
            ));
        }
    }
    let index = scenario.max_effort_index;
    let index_ok = frames.len() >= 3 && index > 0 && index + 1 < frames.len();
    if !index_ok {
        out.push(Finding::error(
            "E_MAX_EFFORT_INDEX",
            format!(
                "max_effort_index {index} must satisfy 0 < index < {} so the central difference has a frame on each side",
                frames.len().saturating_sub(1)
            ),
        ));
    }

    if index_ok && !out.iter().any(Finding::is_error) {
        match scenario.com_state() {
            Ok(com) if com.speed < SLOW_COM_SPEED => out.push(Finding::warning(
                "W_SLOW_COM",
                format!(
                    "COM speed at the max-effort frame is {:e} m/s; its direction is poorly determined",
                    com.speed
                ),
            )),
            Ok(_) => {}
            Err(err @ Error::DegenerateVelocity { .. }) => {
                out.push(Finding::error("E_DEGENERATE_VELOCITY", err.to_string()))
            }
            Err(err) => out.push(Finding::error("E_FRAME", err.to_string())),
        }
    }

    if let Err(e) = scenario.limits.validate() {
        out.push(Finding::error("E_LIMITS", e.to_string()));
    }
    if let Err(e) = scenario.objective.validate() {
        out.push(Finding::error("E_OBJECTIVE", e.to_string()));
    }
    if let Err(e) = scenario.robot.validate() {
        out.push(Finding::error("E_ROBOT", e.to_string()));
    }
    if !scenario.floor_y.is_finite() {
        out.push(Finding::error("E_FLOOR", "floor_y_m must be finite"));
    }
    out
}

// On-disk schema. Field names carry their units.

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    schema_version: String,
    name: String,
    total_mass_kg: f64,
    segments: Vec<SegmentRow>,
    frames: Vec<FrameRow>,
    max_effort_index: usize,
    joint_limits_deg: [f64; 4],
    objective: ObjectiveRow,
    robot: RobotRow,
    floor_y_m: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SegmentRow {
    name: String,
    length_m: f64,
    mass_kg: f64,
    com_fraction: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameRow {
    time_s: f64,
    base_xy_m: [f64; 2],
    theta_deg: [f64; 6],
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectiveRow {
    a: f64,
    torque_magnitudes_nm: [f64; 3],
    force_model: crate::placement_opt::ForceModel,
    grid_step_deg: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RobotRow {
    reach_limit_m: f64,
    handle_height_range_m: [f64; 2],
    handle_length_m: f64,
    handle_diameter_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    arm_base_xy_m: Option<[f64; 2]>,
}

impl ScenarioFile {
    fn into_scenario(self) -> Result<Scenario, ScenarioError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ScenarioError::Schema(format!(
                "unsupported schema_version \"{}\" (expected \"{SCHEMA_VERSION}\")",
                self.schema_version
            )));
        }
        let count = self.segments.len();
        let segments: [LinkSegment; SEGMENT_COUNT] = self
            .segments
            .into_iter()
            .map(|r| LinkSegment::new(r.name, r.length_m, r.mass_kg, r.com_fraction))
            .collect::<Vec<_>>()
            .try_into()
            .map_err(|_| {
                ScenarioError::Schema(format!("expected {SEGMENT_COUNT} segments, found {count}"))
            })?;
        let frames = self
            .frames
            .into_iter()
            .map(|f| PoseFrame {
                pose: BodyPose::new(Vec2::from(f.base_xy_m), f.theta_deg.map(f64::to_radians)),
                time: f.time_s,
            })
            .collect();
        let [h0, h1] = self.robot.handle_height_range_m;
        Ok(Scenario {
            name: self.name,
            segments: SegmentSet {
                segments,
                total_mass: self.total_mass_kg,
            },
            frames,
            max_effort_index: self.max_effort_index,
            limits: JointLimits::from_degrees(self.joint_limits_deg),
            objective: ObjectiveConfig {
                a: self.objective.a,
                torque_magnitudes: self.objective.torque_magnitudes_nm,
                force_model: self.objective.force_model,
                grid_step: self.objective.grid_step_deg.to_radians(),
            },
            robot: RobotParams {
                reach_limit: self.robot.reach_limit_m,
                handle_height_range: (h0, h1),
                handle_length: self.robot.handle_length_m,
                handle_diameter: self.robot.handle_diameter_m,
                arm_base: self.robot.arm_base_xy_m.map(Vec2::from),
            },
            floor_y: self.floor_y_m,
        })
    }
}

impl From<&Scenario> for ScenarioFile {
    fn from(s: &Scenario) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            name: s.name.clone(),
            total_mass_kg: s.segments.total_mass,
            segments: s
                .segments
                .segments
                .iter()
                .map(|seg| SegmentRow {
                    name: seg.name.clone(),
                    length_m: seg.length,
                    mass_kg: seg.mass,
                    com_fraction: seg.com_fraction,
                })
                .collect(),
            frames: s
                .frames
                .iter()
                .map(|f| FrameRow {
                    time_s: f.time,
                    base_xy_m: f.pose.base.into(),
                    theta_deg: f.pose.theta.map(f64::to_degrees),
                })
                .collect(),
            max_effort_index: s.max_effort_index,
            joint_limits_deg: s.limits.to_degrees(),
            objective: ObjectiveRow {
                a: s.objective.a,
                torque_magnitudes_nm: s.objective.torque_magnitudes,
                force_model: s.objective.force_model,
                grid_step_deg: s.objective.grid_step.to_degrees(),
            },
            robot: RobotRow {
                reach_limit_m: s.robot.reach_limit,
                handle_height_range_m: [
                    s.robot.handle_height_range.0,
                    s.robot.handle_height_range.1,
                ],
                handle_length_m: s.robot.handle_length,
                handle_diameter_m: s.robot.handle_diameter,
                arm_base_xy_m: s.robot.arm_base.map(Into::into),
            },
            floor_y_m: s.floor_y,
        }
    }
}
