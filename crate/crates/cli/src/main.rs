//! `handlebar`: validate scenario files, inspect the COM trajectory, find
//! the optimal handle placement and render the result.
//!
//! Exit status: 0 success, 1 validation failure, 2 I/O or parse failure,
//! 3 numerical failure. Every failure prints one `error[CODE]: ...` line.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use handlebar_core::body_model::{com_velocity, forward_kinematics, nonarm_com};
use handlebar_core::placement_opt::{
    search, ForceModel, JointLimits, Landscape, Placement, SearchOptions,
};
use handlebar_core::reporting::{
    render_heatmap, render_landscape, render_scene, HeatMap, RenderStyle,
};
use handlebar_core::scenario_io::{
    load_scenario, parse_scenario_unvalidated, validate_scenario, write_placement_report, Finding,
    Scenario, ScenarioError,
};
use handlebar_core::Error;

#[derive(Parser, Debug)]
#[command(
    name = "handlebar",
    version,
    about = "Optimal support-handle placement for a planar body model"
)]
#[command(args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List every finding in a scenario file; exit 1 if any is an error.
    Validate(Common),
    /// Print the per-frame COM table and the max-effort COM state.
    Analyze(Common),
    /// Grid-search the arm angles; write the report and landscape.
    Optimize(Common),
    /// Re-run the search over a range of one parameter.
    Sweep(SweepArgs),
    /// Draw one frame as SVG, optionally with the optimal arm and handle.
    Render(RenderArgs),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Scenario JSON file.
    #[arg(long, value_name = "PATH")]
    scenario: PathBuf,

    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,

    #[command(flatten)]
    overrides: Overrides,

    /// More detail on stderr.
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Args, Debug, Clone, Default)]
struct Overrides {
    /// Grid spacing for both arm angles, degrees.
    #[arg(long, value_name = "F", allow_negative_numbers = true)]
    grid_step_deg: Option<f64>,

    /// Weight of the |cos(elbow)| penalty.
    #[arg(long, value_name = "F", allow_negative_numbers = true)]
    a: Option<f64>,

    #[arg(long, value_name = "MODEL")]
    force_model: Option<ForceModelArg>,

    /// Torque magnitudes tau5,tau6,tau7 in N*m.
    #[arg(long, value_name = "F,F,F", value_parser = parse_list::<3>, allow_hyphen_values = true)]
    tau: Option<[f64; 3]>,

    /// theta5_min,theta5_max,theta6_min,theta6_max in degrees.
    #[arg(long, value_name = "F,F,F,F", value_parser = parse_list::<4>, allow_hyphen_values = true)]
    limits_deg: Option<[f64; 4]>,

    /// Exclude placements that break a robot limit from the search.
    #[arg(long)]
    constrained: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum ForceModelArg {
    Expanded,
    Lsq,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq)]
enum SweepParam {
    /// Penalty weight.
    A,
    /// Common factor on all three torque magnitudes.
    TauScale,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,

    #[arg(long, value_enum, default_value = "a")]
    param: SweepParam,

    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    from: f64,

    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    to: f64,

    /// Number of parameter values, ends included.
    #[arg(long, default_value_t = 11)]
    steps: usize,
}

#[derive(Args, Debug)]
struct RenderArgs {
    #[command(flatten)]
    common: Common,

    /// Frame to draw; defaults to the max-effort frame.
    #[arg(long, value_name = "N")]
    frame: Option<usize>,

    /// Overlay the optimal arm and handle.
    #[arg(long)]
    placement: bool,

    /// Also write the objective heat map.
    #[arg(long)]
    landscape: bool,
}

fn parse_list<const N: usize>(text: &str) -> Result<[f64; N], String> {
    let values: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| format!("'{s}': {e}")))
        .collect::<Result<_, _>>()?;
    values
        .try_into()
        .map_err(|v: Vec<f64>| format!("expected {N} comma-separated numbers, got {}", v.len()))
}

/// A failure with its exit class and machine-greppable code.
#[derive(Debug)]
struct Failure {
    exit: u8,
    code: String,
    message: String,
}

impl Failure {
    fn validation(code: &str, message: impl Into<String>) -> Self {
        Self {
            exit: 1,
            code: code.into(),
            message: message.into(),
        }
    }

    fn io(code: &str, message: impl Into<String>) -> Self {
        Self {
            exit: 2,
            code: code.into(),
            message: message.into(),
        }
    }

    fn numeric(err: &Error) -> Self {
        let code = match err {
            Error::NoFeasiblePoint => "E_NO_FEASIBLE_POINT",
            Error::DegenerateVelocity { .. } => "E_DEGENERATE_VELOCITY",
            Error::SingularChain { .. } => "E_SINGULAR_CHAIN",
            Error::IllConditioned { .. } => "E_ILL_CONDITIONED",
            Error::ZeroTorque => "E_ZERO_TORQUE",
            Error::IndexOutOfRange { .. } => "E_INDEX",
            Error::NonIncreasingTime { .. } => "E_TIME_ORDER",
            Error::InvalidSegment { .. } | Error::MassClosure { .. } => "E_SEGMENT",
            Error::InvalidLimits(_) | Error::InvalidConfig(_) | Error::InvalidRobot(_) => {
                return Self::validation("E_CONFIG", err.to_string())
            }
        };
        Self {
            exit: 3,
            code: code.into(),
            message: err.to_string(),
        }
    }
}

impl From<ScenarioError> for Failure {
    fn from(err: ScenarioError) -> Self {
        match &err {
            ScenarioError::Io { .. } => Failure::io("E_IO", err.to_string()),
            ScenarioError::Parse { .. } => Failure::io("E_PARSE", err.to_string()),
            ScenarioError::Schema(m) => Failure::io("E_SCHEMA", m.clone()),
            ScenarioError::Validation { code, message } => {
                Failure::validation(code, message.clone())
            }
        }
    }
}

fn io_failure(path: &Path, err: std::io::Error) -> Failure {
    Failure::io("E_IO", format!("{}: {err}", path.display()))
}

/// `x` with 9 significant digits: fixed notation for moderate magnitudes,
/// scientific otherwise.
fn sig9(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.8e}");
    let exponent: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    if (-5..9).contains(&exponent) {
        format!("{:.*}", (8 - exponent) as usize, x)
    } else {
        sci
    }
}

fn apply_overrides(scenario: &mut Scenario, o: &Overrides) {
    if let Some(step) = o.grid_step_deg {
        scenario.objective.grid_step = step.to_radians();
    }
    if let Some(a) = o.a {
        scenario.objective.a = a;
    }
    if let Some(model) = o.force_model {
        scenario.objective.force_model = match model {
            ForceModelArg::Expanded => ForceModel::Expanded,
            ForceModelArg::Lsq => ForceModel::LeastSquares,
        };
    }
    if let Some(tau) = o.tau {
        scenario.objective.torque_magnitudes = tau;
    }
    if let Some(limits) = o.limits_deg {
        scenario.limits = JointLimits::from_degrees(limits);
    }
}

fn first_error(findings: &[Finding]) -> Option<Failure> {
    findings
        .iter()
        .find(|f| f.is_error())
        .map(|f| Failure::validation(f.code, f.message.clone()))
}

fn warn(findings: &[Finding]) {
    for f in findings.iter().filter(|f| !f.is_error()) {
        eprintln!("{f}");
    }
}

/// Loads the file, applies overrides and re-validates the result the same
/// way file values are validated.
fn prepare(common: &Common) -> Result<Scenario, Failure> {
    let mut scenario = load_scenario(&common.scenario)?;
    apply_overrides(&mut scenario, &common.overrides);
    let findings = validate_scenario(&scenario);
    if let Some(f) = first_error(&findings) {
        return Err(f);
    }
    warn(&findings);
    Ok(scenario)
}

fn options(common: &Common) -> SearchOptions {
    SearchOptions {
        constrained: common.overrides.constrained,
        ..SearchOptions::default()
    }
}

fn optimize(scenario: &Scenario, common: &Common) -> Result<(Placement, Landscape), Failure> {
    let context = scenario.context().map_err(|e| Failure::numeric(&e))?;
    let start = Instant::now();
    let result = search(
        &context,
        &scenario.limits,
        &scenario.objective,
        &scenario.robot,
        &options(common),
    )
    .map_err(|e| Failure::numeric(&e))?;
    if common.verbose > 0 {
        eprintln!(
            "searched {} grid points ({} singular) in {:.3} s",
            result.0.evaluated_points,
            result.0.singular_points,
            start.elapsed().as_secs_f64()
        );
    }
    Ok(result)
}

fn create_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| io_failure(path, e))
}

fn run_validate(common: &Common) -> Result<(), Failure> {
    let text =
        std::fs::read_to_string(&common.scenario).map_err(|e| io_failure(&common.scenario, e))?;
    let mut scenario = parse_scenario_unvalidated(&text)?;
    apply_overrides(&mut scenario, &common.overrides);
    let findings = validate_scenario(&scenario);
    for f in &findings {
        println!("{f}");
    }
    let errors = findings.iter().filter(|f| f.is_error()).count();
    println!(
        "{}: {errors} error(s), {} warning(s)",
        scenario.name,
        findings.len() - errors
    );
    match first_error(&findings) {
        Some(f) => Err(f),
        None => Ok(()),
    }
}

fn run_analyze(common: &Common) -> Result<(), Failure> {
    let scenario = prepare(common)?;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>5} {:>16} {:>16} {:>16}",
        "frame", "time_s", "com_x_m", "com_y_m"
    );
    for (i, f) in scenario.frames.iter().enumerate() {
        let com = nonarm_com(&f.pose, &scenario.segments);
        let mark = if i == scenario.max_effort_index {
            " *"
        } else {
            ""
        };
        let _ = writeln!(
            out,
            "{i:>5} {:>16} {:>16} {:>16}{mark}",
            sig9(f.time),
            sig9(com.x),
            sig9(com.y)
        );
    }
    let state = com_velocity(
        &scenario.frames,
        &scenario.segments,
        scenario.max_effort_index,
    )
    .map_err(|e| Failure::numeric(&e))?;
    let geometry = forward_kinematics(scenario.max_effort_pose(), &scenario.segments);
    let _ = writeln!(out, "max_effort_index  {}", scenario.max_effort_index);
    let _ = writeln!(
        out,
        "com_m             {} {}",
        sig9(state.position.x),
        sig9(state.position.y)
    );
    let _ = writeln!(
        out,
        "com_direction     {} {}",
        sig9(state.direction.x),
        sig9(state.direction.y)
    );
    let _ = writeln!(out, "com_speed_mps     {}", sig9(state.speed));
    let _ = writeln!(
        out,
        "shoulder_m        {} {}",
        sig9(geometry.shoulder.x),
        sig9(geometry.shoulder.y)
    );
    let _ = writeln!(
        out,
        "trunk_angle_deg   {}",
        sig9(geometry.theta_04().to_degrees())
    );
    let _ = writeln!(
        out,
        "nonarm_fraction   {}",
        sig9(scenario.segments.nonarm_fraction())
    );
    print!("{out}");
    Ok(())
}

fn run_optimize(common: &Common) -> Result<(), Failure> {
    let scenario = prepare(common)?;
    let (placement, landscape) = optimize(&scenario, common)?;
    let paths = write_placement_report(&scenario, &placement, &landscape, &common.out)?;
    let p = &placement;
    println!("scenario          {}", scenario.name);
    println!("theta5_deg        {}", sig9(p.theta5_opt.to_degrees()));
    println!("theta6_deg        {}", sig9(p.theta6_opt.to_degrees()));
    println!(
        "handle_m          {} {}",
        sig9(p.handle.x),
        sig9(p.handle.y)
    );
    println!("objective         {}", sig9(p.objective_value));
    println!("f_arm_n           {} {}", sig9(p.f_arm.x), sig9(p.f_arm.y));
    println!(
        "torque_signs      {} {} {}",
        p.torque_signs[0], p.torque_signs[1], p.torque_signs[2]
    );
    match p.runner_up_gap {
        Some(gap) => println!("runner_up_gap     {}", sig9(gap)),
        None => println!("runner_up_gap     none"),
    }
    println!("unique            {}", p.is_unique());
    println!("feasible          {}", p.feasibility.is_empty());
    for v in &p.feasibility {
        println!("violation         {v}");
    }
    println!("report            {}", paths.report.display());
    println!("landscape         {}", paths.landscape.display());
    Ok(())
}

fn run_sweep(args: &SweepArgs) -> Result<(), Failure> {
    let common = &args.common;
    let base = prepare(common)?;
    if args.steps == 0 || !args.from.is_finite() || !args.to.is_finite() {
        return Err(Failure::validation(
            "E_SWEEP",
            "sweep needs finite --from/--to and --steps >= 1",
        ));
    }
    let values: Vec<f64> = (0..args.steps)
        .map(|i| match args.steps {
            1 => args.from,
            n => args.from + (args.to - args.from) * i as f64 / (n - 1) as f64,
        })
        .collect();
    let name = match args.param {
        SweepParam::A => "a",
        SweepParam::TauScale => "tau_scale",
    };

    let mut csv = format!("{name},theta5_deg,theta6_deg,objective,feasible\n");
    let mut y_axis: Vec<f64> = Vec::new();
    let mut cells = Vec::new();
    let mut best_cells = Vec::new();
    for (row, &value) in values.iter().enumerate() {
        let mut scenario = base.clone();
        match args.param {
            SweepParam::A => scenario.objective.a = value,
            SweepParam::TauScale => {
                scenario.objective.torque_magnitudes =
                    base.objective.torque_magnitudes.map(|t| t * value)
            }
        }
        if let Some(f) = first_error(&validate_scenario(&scenario)) {
            return Err(f);
        }
        let (p, land) = optimize(&scenario, common)?;
        let _ = writeln!(
            csv,
            "{value},{},{},{},{}",
            p.theta5_opt.to_degrees(),
            p.theta6_opt.to_degrees(),
            p.objective_value,
            p.feasibility.is_empty()
        );
        println!(
            "{name} = {:>16}  theta5_deg {:>16}  theta6_deg {:>16}  objective {:>16}",
            sig9(value),
            sig9(p.theta5_opt.to_degrees()),
            sig9(p.theta6_opt.to_degrees()),
            sig9(p.objective_value)
        );
        // best objective over theta5 for each elbow angle
        let n6 = land.theta6_axis.count;
        if row == 0 {
            y_axis = land.theta6_axis.values().map(f64::to_degrees).collect();
        }
        let mut profile = vec![None::<f64>; n6];
        for (k, s) in land.samples.iter().enumerate() {
            if let Some(v) = s.objective {
                let slot = &mut profile[k % n6];
                *slot = Some(slot.map_or(v, |b| b.max(v)));
            }
        }
        best_cells.push(row * n6 + land.argmax % n6);
        cells.extend(profile);
    }
    create_dir(&common.out)?;
    let csv_path = common.out.join("sweep.csv");
    write(&csv_path, &csv)?;
    let map = HeatMap {
        title: format!("best objective over shoulder angle, by {name}"),
        x_label: name.to_string(),
        y_label: "elbow angle (deg)".into(),
        x: values,
        y: y_axis,
        cells,
        highlight: best_cells.last().copied(),
    };
    let svg = render_heatmap(&map).map_err(|e| Failure::numeric(&e))?;
    let svg_path = common.out.join("sweep.svg");
    write(&svg_path, &svg)?;
    println!("sweep             {}", csv_path.display());
    println!("heatmap           {}", svg_path.display());
    Ok(())
}

fn run_render(args: &RenderArgs) -> Result<(), Failure> {
    let common = &args.common;
    let scenario = prepare(common)?;
    let frame = args.frame.unwrap_or(scenario.max_effort_index);
    if frame >= scenario.frames.len() {
        return Err(Failure::validation(
            "E_FRAME_INDEX",
            format!(
                "--frame {frame} is out of range for {} frames",
                scenario.frames.len()
            ),
        ));
    }
    let solved = if args.placement || args.landscape {
        Some(optimize(&scenario, common)?)
    } else {
        None
    };
    let svg = render_scene(
        &scenario,
        frame,
        solved.as_ref().filter(|_| args.placement).map(|(p, _)| p),
        &RenderStyle::default(),
    )
    .map_err(|e| Failure::numeric(&e))?;
    create_dir(&common.out)?;
    let scene_path = common.out.join("scene.svg");
    write(&scene_path, &svg)?;
    println!("scene             {}", scene_path.display());
    if let (true, Some((_, land))) = (args.landscape, &solved) {
        let path = common.out.join("landscape.svg");
        write(
            &path,
            &render_landscape(land).map_err(|e| Failure::numeric(&e))?,
        )?;
        println!("heatmap           {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate(c) => run_validate(c),
        Command::Analyze(c) => run_analyze(c),
        Command::Optimize(c) => run_optimize(c),
        Command::Sweep(s) => run_sweep(s),
        Command::Render(r) => run_render(r),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let message = f.message.replace('\n', " ");
            eprintln!("error[{}]: {message}", f.code);
            ExitCode::from(f.exit)
        }
    }
}
