use std::f64::consts::PI;

use handlebar_core::arm_kinetics::{
    arm_force_expanded, arm_force_lsq, arm_jacobian, build_virtual_chain, mechanical_advantage,
    TorqueSet, VirtualChain,
};
use handlebar_core::body_model::{ComState, SegmentSet, ShoulderFrame};
use handlebar_core::placement_opt::{
    search, JointLimits, ObjectiveConfig, PlacementContext, RobotParams, SearchOptions,
};
use handlebar_core::scenario_io::{parse_scenario, validate_scenario};
use handlebar_core::Vec2;
use proptest::prelude::*;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn chain(frame: ShoulderFrame, t5: f64, t6: f64, com: Vec2) -> Option<VirtualChain> {
    build_virtual_chain(&frame, t5, t6, &SegmentSet::default_adult(), com)
        .ok()
        .filter(|c| c.levers().iter().all(|&l| l > 0.05))
}

fn arb_frame() -> impl Strategy<Value = ShoulderFrame> {
    (-1.0..1.0f64, 0.5..1.5f64, -PI..PI).prop_map(|(x, y, t)| ShoulderFrame {
        origin: Vec2::new(x, y),
        theta_04: t,
    })
}

fn arb_offset() -> impl Strategy<Value = Vec2> {
    (-PI..PI, 0.05..0.9f64).prop_map(|(a, r)| Vec2::from_angle(a) * r)
}

fn arb_torque() -> impl Strategy<Value = TorqueSet> {
    proptest::array::uniform3(-5.0..5.0f64).prop_map(|[a, b, c]| TorqueSet::new(a, b, c))
}

fn close(a: Vec2, b: Vec2, tol: f64) -> bool {
    (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm()))
}

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn expanded_force_is_linear(
        frame in arb_frame(), off in arb_offset(), t5 in -PI..PI, t6 in 0.1..3.0f64,
        ta in arb_torque(), tb in arb_torque(), a in -3.0..3.0f64, b in -3.0..3.0f64,
    ) {
        let Some(c) = chain(frame, t5, t6, frame.origin + off) else { return Ok(()) };
        let mixed = TorqueSet::new(
            a * ta.tau5 + b * tb.tau5,
            a * ta.tau6 + b * tb.tau6,
            a * ta.tau7 + b * tb.tau7,
        );
        let lhs = arm_force_expanded(&c, &mixed);
        let rhs = arm_force_expanded(&c, &ta) * a + arm_force_expanded(&c, &tb) * b;
        prop_assert!((lhs - rhs).norm() < 1e-12, "{lhs:?} {rhs:?}");
        if let (Ok(l), Ok(x), Ok(y)) = (arm_force_lsq(&c, &mixed), arm_force_lsq(&c, &ta), arm_force_lsq(&c, &tb)) {
            prop_assert!(close(l, x * a + y * b, 1e-9));
        }
    }

    #[test]
    fn jacobian_columns_are_joint_distances(
        frame in arb_frame(), off in arb_offset(), t5 in -PI..PI, t6 in 0.1..3.0f64,
    ) {
        let Some(c) = chain(frame, t5, t6, frame.origin + off) else { return Ok(()) };
        let j = arm_jacobian(&c);
        let joints = [c.handle, c.elbow(), c.shoulder];
        for (col, joint) in j.columns.iter().zip(joints) {
            prop_assert!((col.norm() - c.com().distance(joint)).abs() < 1e-12);
        }
    }

    #[test]
    fn arm_forces_rotate_with_the_chain(
        frame in arb_frame(), off in arb_offset(), t5 in -PI..PI, t6 in 0.1..3.0f64,
        tau in arb_torque(), phi in -PI..PI,
    ) {
        let Some(c) = chain(frame, t5, t6, frame.origin + off) else { return Ok(()) };
        let turned = ShoulderFrame { origin: frame.origin.rotated(phi), theta_04: frame.theta_04 + phi };
        let Some(r) = chain(turned, t5, t6, (frame.origin + off).rotated(phi)) else { return Ok(()) };
        let f = arm_force_expanded(&c, &tau);
        let g = arm_force_expanded(&r, &tau);
        prop_assert!(close(g, f.rotated(phi), 1e-9), "{g:?} vs {:?}", f.rotated(phi));
        if tau.norm() > 1e-3 {
            let ma = mechanical_advantage(f, &tau).unwrap();
            let mb = mechanical_advantage(g, &tau).unwrap();
            prop_assert!((ma - mb).abs() < 1e-9 * (1.0 + ma));
        }
        if let (Ok(f), Ok(g)) = (arm_force_lsq(&c, &tau), arm_force_lsq(&r, &tau)) {
            prop_assert!(close(g, f.rotated(phi), 1e-8));
        }
    }
}

/// The two force routes differ in general; record how much over a fixed
/// sample instead of asserting agreement.
#[test]
fn expanded_versus_lsq_audit() {
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    let mut rng = StdRng::seed_from_u64(41);
    let mut ratios = Vec::new();
    let mut cosines = Vec::new();
    while ratios.len() < 500 {
        let frame = ShoulderFrame {
            origin: Vec2::new(rng.random_range(-1.0..1.0), 1.0),
            theta_04: rng.random_range(-PI..PI),
        };
        let com = frame.origin
            + Vec2::from_angle(rng.random_range(-PI..PI)) * rng.random_range(0.05..0.9);
        let Some(c) = chain(
            frame,
            rng.random_range(-PI..PI),
            rng.random_range(0.1..3.0),
            com,
        ) else {
            continue;
        };
        let tau = TorqueSet::new(1.0, 1.0, 1.0);
        let Ok(lsq) = arm_force_lsq(&c, &tau) else {
            continue;
        };
        let exp = arm_force_expanded(&c, &tau);
        ratios.push(exp.norm() / lsq.norm());
        cosines.push(exp.dot(lsq) / (exp.norm() * lsq.norm()));
    }
    ratios.sort_by(f64::total_cmp);
    cosines.sort_by(f64::total_cmp);
    let q = |v: &[f64], p: f64| v[((v.len() - 1) as f64 * p) as usize];
    println!(
        "|F_exp|/|F_lsq| quartiles {:.3} {:.3} {:.3}; direction cosine quartiles {:.3} {:.3} {:.3}",
        q(&ratios, 0.25),
        q(&ratios, 0.5),
        q(&ratios, 0.75),
        q(&cosines, 0.25),
        q(&cosines, 0.5),
        q(&cosines, 0.75)
    );
    assert!(ratios.iter().all(|r| r.is_finite() && *r > 0.0));
}

fn small_context(com: Vec2, v_angle: f64, theta_04: f64) -> PlacementContext {
    PlacementContext::new(
        ShoulderFrame {
            origin: Vec2::new(0.1, 1.2),
            theta_04,
        },
        ComState {
            position: Vec2::new(0.1, 1.2) + com,
            direction: Vec2::from_angle(v_angle),
            speed: 0.2,
        },
        SegmentSet::default_adult(),
    )
}

fn coarse(step_deg: f64, a: f64, k: f64) -> ObjectiveConfig {
    ObjectiveConfig {
        a,
        torque_magnitudes: [k; 3],
        grid_step: step_deg.to_radians(),
        ..ObjectiveConfig::default()
    }
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn placement_rotates_with_context(
        com in arb_offset(), v in -PI..PI, t04 in 1.0..2.2f64, phi in -PI..PI,
    ) {
        let ctx = small_context(com, v, t04);
        let run = |c: &PlacementContext| {
            search(c, &JointLimits::default(), &coarse(5.0, 0.2, 1.0), &RobotParams::default(), &SearchOptions::default())
        };
        let (Ok((p, land)), Ok((q, _))) = (run(&ctx), run(&ctx.rotated_about(Vec2::ZERO, phi))) else { return Ok(()) };
        // skip draws where a near tie could legitimately flip under rounding
        prop_assume!(p.runner_up_gap.is_none_or(|g| g > 1e-9));
        prop_assert_eq!((p.theta5_opt, p.theta6_opt), (q.theta5_opt, q.theta6_opt));
        prop_assert!((p.objective_value - q.objective_value).abs() < 1e-9);
        prop_assert!(q.handle.distance(p.handle.rotated_about(Vec2::ZERO, phi)) < 1e-9);
        prop_assert!(land.samples.iter().filter_map(|s| s.objective).all(|o| o <= p.objective_value));
        prop_assert!(p.handle.distance(p.shoulder) <= p.arm_reach + 1e-12);
    }

    #[test]
    fn zero_penalty_argmax_ignores_torque_scale(
        com in arb_offset(), v in -PI..PI, k in 0.1..10.0f64,
    ) {
        let ctx = small_context(com, v, 1.57);
        let run = |c: ObjectiveConfig| {
            search(&ctx, &JointLimits::default(), &c, &RobotParams::default(), &SearchOptions::default())
        };
        let (Ok((p, _)), Ok((q, _))) = (run(coarse(5.0, 0.0, 1.0)), run(coarse(5.0, 0.0, k))) else { return Ok(()) };
        prop_assume!(p.runner_up_gap.is_none_or(|g| g > 1e-9 * (1.0 + p.objective_value.abs())));
        prop_assert_eq!((p.theta5_opt, p.theta6_opt), (q.theta5_opt, q.theta6_opt));
        prop_assert!((q.objective_value - k * p.objective_value).abs() < 1e-9 * (1.0 + q.objective_value.abs()));
    }

    #[test]
    fn halving_the_step_never_loses(
        com in arb_offset(), v in -PI..PI, step in 2.0..8.0f64,
    ) {
        let ctx = small_context(com, v, 1.57);
        let run = |s: f64| {
            search(&ctx, &JointLimits::default(), &coarse(s, 0.2, 1.0), &RobotParams::default(), &SearchOptions::default())
        };
        let (Ok((c, _)), Ok((f, _))) = (run(step), run(step / 2.0)) else { return Ok(()) };
        prop_assert!(c.objective_value <= f.objective_value);
    }
}

fn scenario_text(masses: [f64; 7], knee: [f64; 3], index: usize) -> String {
    let names = [
        "foot",
        "shank",
        "thigh",
        "trunk_pelvis",
        "head_neck",
        "upper_arm",
        "forearm_hand",
    ];
    let lengths = [0.15, 0.42, 0.42, 0.52, 0.26, 0.29, 0.33];
    let total: f64 = masses.iter().sum();
    let segments: Vec<String> = (0..7)
        .map(|i| {
            format!(
                r#"{{"name":"{}","length_m":{},"mass_kg":{:?},"com_fraction":0.5}}"#,
                names[i], lengths[i], masses[i]
            )
        })
        .collect();
    let frames: Vec<String> = knee
        .iter()
        .enumerate()
        .map(|(i, k)| {
            format!(
                r#"{{"time_s":{},"base_xy_m":[0,0],"theta_deg":[80,{k:?},-90,10,-160,20]}}"#,
                i as f64 * 0.1
            )
        })
        .collect();
    format!(
        r#"{{"schema_version":"1","name":"p","total_mass_kg":{total:?},"segments":[{}],"frames":[{}],"max_effort_index":{index},
        "joint_limits_deg":[-185,60,5,175],"objective":{{"a":0.2,"torque_magnitudes_nm":[1,1,1],"force_model":"lsq","grid_step_deg":0.5}},
        "robot":{{"reach_limit_m":0.44,"handle_height_range_m":[0.3,1.3],"handle_length_m":0.46,"handle_diameter_m":0.038,"arm_base_xy_m":[0.5,0.9]}},"floor_y_m":0}}"#,
        segments.join(","),
        frames.join(",")
    )
}

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn accepted_files_validate_and_round_trip(
        masses in proptest::array::uniform7(0.5..30.0f64),
        knee in proptest::array::uniform3(0.0..150.0f64),
        index in 0usize..4,
    ) {
        let text = scenario_text(masses, knee, index);
        if let Ok(s) = parse_scenario(&text) {
            prop_assert!(validate_scenario(&s).iter().all(|f| !f.is_error()));
            let again = parse_scenario(&s.to_json()).unwrap();
            prop_assert_eq!(&again.segments, &s.segments);
            prop_assert_eq!(again.max_effort_index, s.max_effort_index);
            prop_assert_eq!(again.objective.force_model, s.objective.force_model);
            prop_assert_eq!(again.robot.arm_base, s.robot.arm_base);
            for (a, b) in again.frames.iter().zip(&s.frames) {
                prop_assert_eq!(a.time, b.time);
                prop_assert_eq!(a.pose.base, b.pose.base);
                for (x, y) in a.pose.theta.iter().zip(&b.pose.theta) {
                    prop_assert!((x - y).abs() < 1e-15);
                }
            }
            prop_assert_eq!(again.to_json(), s.to_json());
        } else {
            prop_assert!(index == 0 || index >= 2 || knee[0] == knee[2]);
        }
    }
}
