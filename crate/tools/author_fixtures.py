#!/usr/bin/env python3
"""Generates the shipped scenario fixtures and their expected-value sidecars.

The four scenarios are reconstructions of the filmed postures (lie-to-sit in
bed, sit-to-stand from a bed edge, standing up in a bathtub, sit-to-stand from
a toilet). Each sequence eases between a start and an end pose; the middle
frame is the max-effort pose. Expected COM values are computed here with a
plain per-segment sum that shares no code with the Rust crate.

Usage: python3 tools/author_fixtures.py crates/core/fixtures
"""
import json
import math
import sys
from pathlib import Path

TOTAL_MASS = 60.0
# name, length_m, mass_kg, com_fraction (from proximal joint)
SEGMENTS = [
    ("foot", 0.15, 1.644, 0.44),
    ("shank", 0.42, 5.196, 0.5541),
    ("thigh", 0.42, 16.992, 0.5905),
    ("trunk_pelvis", 0.52, 26.076, 0.5514),
    ("head_neck", 0.26, 4.164, 0.55),
    ("upper_arm", 0.29, 3.252, 0.5772),
    ("forearm_hand", 0.33, 2.676, 0.5215),
]
FRAMES = 25
DT = 1.0 / 15.0
MAX_EFFORT = 12

# start/end joint angles in degrees: ankle(shank absolute), knee, hip, head, shoulder, elbow
SCENARIOS = {
    "lie_to_sit_bed": dict(
        base=(1.10, 0.55),
        start=[180.0, 0.0, 5.0, 10.0, -150.0, 20.0],
        end=[180.0, 0.0, -55.0, 5.0, -120.0, 30.0],
        limits=[-185.0, 60.0, 5.0, 175.0],
        height=[0.5, 1.4],
        robot_base=(0.35, 0.55),
        label="Lie-to-sit in bed: trunk rises about the hips with the legs flat on the mattress.",
    ),
    "sit_to_stand_bed": dict(
        base=(0.0, 0.08),
        start=[85.0, 95.0, -110.0, 10.0, -165.0, 15.0],
        end=[75.0, 75.0, -95.0, 15.0, -170.0, 10.0],
        limits=[-185.0, 60.0, 5.0, 175.0],
        height=[0.4, 1.3],
        robot_base=(0.65, 0.9),
        label="Sit-to-stand from the edge of a bed at seat-off.",
    ),
    "bathtub_stand": dict(
        base=(0.0, 0.08),
        start=[55.0, 150.0, -150.0, 15.0, -150.0, 30.0],
        end=[65.0, 115.0, -100.0, 15.0, -150.0, 25.0],
        limits=[-185.0, 60.0, 5.0, 175.0],
        height=[0.3, 1.2],
        robot_base=(0.75, 0.6),
        label="Standing up from the floor of a bathtub with knees deeply flexed.",
    ),
    "toilet_sit_to_stand": dict(
        base=(0.0, 0.08),
        start=[85.0, 100.0, -110.0, 15.0, -160.0, 15.0],
        end=[72.0, 78.0, -100.0, 15.0, -165.0, 10.0],
        limits=[-185.0, 60.0, 5.0, 175.0],
        height=[0.4, 1.2],
        robot_base=(0.7, 0.8),
        label="Sit-to-stand from a toilet seat with a forward trunk lean.",
    ),
}


def ease(s):
    return 0.5 - 0.5 * math.cos(math.pi * s)


def segment_coms(base, theta_deg):
    """Per-segment COM points, computed link by link from absolute angles."""
    t = [math.radians(v) for v in theta_deg]
    shank = t[0]
    foot = shank - math.pi / 2.0
    thigh = shank + t[1]
    trunk = thigh + t[2]
    head = trunk + t[3]
    upper = trunk + t[4]
    fore = upper + t[5]
    L = [s[1] for s in SEGMENTS]
    f = [s[3] for s in SEGMENTS]
    ax, ay = base
    out = []
    # foot: proximal at the ankle
    out.append((ax + f[0] * L[0] * math.cos(foot), ay + f[0] * L[0] * math.sin(foot)))
    out.append((ax + f[1] * L[1] * math.cos(shank), ay + f[1] * L[1] * math.sin(shank)))
    kx, ky = ax + L[1] * math.cos(shank), ay + L[1] * math.sin(shank)
    out.append((kx + f[2] * L[2] * math.cos(thigh), ky + f[2] * L[2] * math.sin(thigh)))
    hx, hy = kx + L[2] * math.cos(thigh), ky + L[2] * math.sin(thigh)
    out.append((hx + f[3] * L[3] * math.cos(trunk), hy + f[3] * L[3] * math.sin(trunk)))
    sx, sy = hx + L[3] * math.cos(trunk), hy + L[3] * math.sin(trunk)
    out.append((sx + f[4] * L[4] * math.cos(head), sy + f[4] * L[4] * math.sin(head)))
    out.append((sx + f[5] * L[5] * math.cos(upper), sy + f[5] * L[5] * math.sin(upper)))
    ex, ey = sx + L[5] * math.cos(upper), sy + L[5] * math.sin(upper)
    out.append((ex + f[6] * L[6] * math.cos(fore), ey + f[6] * L[6] * math.sin(fore)))
    return out, (sx, sy), trunk


def nonarm_com(base, theta_deg):
    coms, _, _ = segment_coms(base, theta_deg)
    sx = sum(SEGMENTS[i][2] * coms[i][0] for i in range(5))
    sy = sum(SEGMENTS[i][2] * coms[i][1] for i in range(5))
    return sx / TOTAL_MASS, sy / TOTAL_MASS


def frames_for(case):
    out = []
    for k in range(FRAMES):
        s = ease(k / (FRAMES - 1))
        theta = [a + (b - a) * s for a, b in zip(case["start"], case["end"])]
        theta = [round(v, 6) for v in theta]
        out.append(dict(time_s=round(k * DT, 9), base_xy_m=list(case["base"]), theta_deg=theta))
    return out


def main(outdir):
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    for name, case in SCENARIOS.items():
        frames = frames_for(case)
        doc = dict(
            schema_version="1",
            name=name,
            total_mass_kg=TOTAL_MASS,
            segments=[dict(name=n, length_m=l, mass_kg=m, com_fraction=c) for n, l, m, c in SEGMENTS],
            frames=frames,
            max_effort_index=MAX_EFFORT,
            joint_limits_deg=case["limits"],
            objective=dict(a=0.2, torque_magnitudes_nm=[1.0, 1.0, 1.0], force_model="expanded", grid_step_deg=0.5),
            robot=dict(
                reach_limit_m=0.44,
                handle_height_range_m=case["height"],
                handle_length_m=0.46,
                handle_diameter_m=0.038,
                arm_base_xy_m=list(case["robot_base"]),
            ),
            floor_y_m=0.0,
        )
        (outdir / f"{name}.json").write_text(json.dumps(doc, indent=2) + "\n")

        f = frames[MAX_EFFORT]
        com = nonarm_com(f["base_xy_m"], f["theta_deg"])
        before = nonarm_com(frames[MAX_EFFORT - 1]["base_xy_m"], frames[MAX_EFFORT - 1]["theta_deg"])
        after = nonarm_com(frames[MAX_EFFORT + 1]["base_xy_m"], frames[MAX_EFFORT + 1]["theta_deg"])
        dt = frames[MAX_EFFORT + 1]["time_s"] - frames[MAX_EFFORT - 1]["time_s"]
        vx, vy = (after[0] - before[0]) / dt, (after[1] - before[1]) / dt
        speed = math.hypot(vx, vy)
        _, shoulder, trunk = segment_coms(f["base_xy_m"], f["theta_deg"])
        expected = dict(
            description=case["label"] + " Reconstructed posture, not measured data.",
            max_effort_index=MAX_EFFORT,
            nonarm_com_m=[com[0], com[1]],
            com_direction=[vx / speed, vy / speed],
            com_speed_mps=speed,
            shoulder_m=[shoulder[0], shoulder[1]],
            theta_04_rad=trunk,
        )
        (outdir / f"{name}.expected.json").write_text(json.dumps(expected, indent=2) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "crates/core/fixtures")
