//! Placement report (JSON) and objective landscape (CSV).
//!
//! Floats are written in shortest round-trip form, so re-reading a report
//! reproduces every number bit for bit.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Scenario, ScenarioError, SCHEMA_VERSION};
use crate::error::Error;
use crate::geometry::Vec2;
use crate::placement_opt::{
    evaluate, ForceModel, Landscape, ObjectiveConfig, Placement, PlacementContext, Violation,
};

pub const REPORT_FILE: &str = "placement_report.json";
pub const LANDSCAPE_FILE: &str = "landscape.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlacementReport {
    pub schema_version: String,
    pub scenario: String,
    pub max_effort_index: usize,
    pub a: f64,
    pub torque_magnitudes_nm: [f64; 3],
    pub force_model: ForceModel,
    pub grid_step_deg: f64,
    pub joint_limits_deg: [f64; 4],
    pub com_m: Vec2,
    pub com_direction: Vec2,
    pub com_speed_mps: f64,
    pub shoulder_m: Vec2,
    pub trunk_angle_deg: f64,
    pub optimum: OptimumReport,
    /// Both force routes at the optimum, whichever one drove the search.
    pub force_models: Vec<ForceModelValues>,
    pub feasible: bool,
    pub feasibility: Vec<Violation>,
    pub grid: GridSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimumReport {
    pub theta5_deg: f64,
    pub theta6_deg: f64,
    pub handle_m: Vec2,
    pub objective: f64,
    pub f_arm_n: Vec2,
    /// (s5, s6, s7)
    pub torque_signs: [i8; 3],
    /// Best objective minus the best at any other eligible grid point.
    pub runner_up_gap: Option<f64>,
    pub unique: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForceModelValues {
    pub force_model: ForceModel,
    pub f_arm_n: Option<Vec2>,
    pub directed_n: Option<f64>,
    pub objective: Option<f64>,
    /// Why the model could not be evaluated at the optimum.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSummary {
    pub theta5_points: usize,
    pub theta6_points: usize,
    pub evaluated: usize,
    pub singular: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportPaths {
    pub report: PathBuf,
    pub landscape: PathBuf,
}

pub fn build_report(
    scenario: &Scenario,
    context: &PlacementContext,
    placement: &Placement,
    landscape: &Landscape,
) -> PlacementReport {
    let force_models = [ForceModel::Expanded, ForceModel::LeastSquares]
        .into_iter()
        .map(|model| {
            let config = ObjectiveConfig {
                force_model: model,
                ..scenario.objective
            };
            match evaluate(placement.theta5_opt, placement.theta6_opt, context, &config) {
                Ok(e) => ForceModelValues {
                    force_model: model,
                    f_arm_n: Some(e.f_arm),
                    directed_n: Some(e.directed),
                    objective: Some(e.value),
                    error: None,
                },
                Err(err) => ForceModelValues {
                    force_model: model,
                    f_arm_n: None,
                    directed_n: None,
                    objective: None,
                    error: Some(err.to_string()),
                },
            }
        })
        .collect();

    PlacementReport {
        schema_version: SCHEMA_VERSION.to_string(),
        scenario: scenario.name.clone(),
        max_effort_index: scenario.max_effort_index,
        a: scenario.objective.a,
        torque_magnitudes_nm: scenario.objective.torque_magnitudes,
        force_model: scenario.objective.force_model,
        grid_step_deg: scenario.objective.grid_step.to_degrees(),
        joint_limits_deg: scenario.limits.to_degrees(),
        com_m: context.com.position,
        com_direction: context.com.direction,
        com_speed_mps: context.com.speed,
        shoulder_m: context.frame.origin,
        trunk_angle_deg: context.frame.theta_04.to_degrees(),
        optimum: OptimumReport {
            theta5_deg: placement.theta5_opt.to_degrees(),
            theta6_deg: placement.theta6_opt.to_degrees(),
            handle_m: placement.handle,
            objective: placement.objective_value,
            f_arm_n: placement.f_arm,
            torque_signs: placement.torque_signs,
            runner_up_gap: placement.runner_up_gap,
            unique: placement.is_unique(),
        },
        force_models,
        feasible: placement.feasibility.is_empty(),
        feasibility: placement.feasibility.clone(),
        grid: GridSummary {
            theta5_points: landscape.theta5_axis.count,
            theta6_points: landscape.theta6_axis.count,
            evaluated: placement.evaluated_points,
            singular: placement.singular_points,
        },
    }
}

/// One row per grid point, `theta5` outer. Singular points leave the
/// objective column empty.
pub fn landscape_csv(landscape: &Landscape) -> String {
    let mut out = String::with_capacity(48 * landscape.len() + 40);
    out.push_str("theta5_deg,theta6_deg,objective,feasible\n");
    for s in &landscape.samples {
        let objective = s.objective.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{}",
            s.theta5.to_degrees(),
            s.theta6.to_degrees(),
            objective,
            s.feasible
        );
    }
    out
}

/// Writes the report and landscape into `out_dir`, creating it if needed.
pub fn write_placement_report(
    scenario: &Scenario,
    placement: &Placement,
    landscape: &Landscape,
    out_dir: impl AsRef<Path>,
) -> Result<ReportPaths, ScenarioError> {
    let out_dir = out_dir.as_ref();
    let context = scenario
        .context()
        .map_err(|e: Error| ScenarioError::Validation {
            code: "E_DEGENERATE_VELOCITY",
            message: e.to_string(),
        })?;
    let report = build_report(scenario, &context, placement, landscape);
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| ScenarioError::Io { path, source }
    };
    std::fs::create_dir_all(out_dir).map_err(io(out_dir))?;
    let paths = ReportPaths {
        report: out_dir.join(REPORT_FILE),
        landscape: out_dir.join(LANDSCAPE_FILE),
    };
    let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
    json.push('\n');
    std::fs::write(&paths.report, json).map_err(io(&paths.report))?;
    std::fs::write(&paths.landscape, landscape_csv(landscape)).map_err(io(&paths.landscape))?;
    Ok(paths)
}

pub fn read_report(path: impl AsRef<Path>) -> Result<PlacementReport, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(ScenarioError::from_json)
}
