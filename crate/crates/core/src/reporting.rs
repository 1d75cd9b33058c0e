//! SVG output: a side-view scene of one frame with the COM, its direction
//! of motion and optionally the optimal arm and handle, plus heat maps of
//! gridded objective values.
//!
//! World `+y` is up and canvas `+y` is down; [`CanvasTransform`] is the only
//! place the flip happens.

use std::fmt::Write as _;

use crate::body_model::{forward_kinematics, nonarm_com, ChainGeometry};
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::placement_opt::{GridAxis, Landscape, Placement};
use crate::scenario_io::Scenario;

#[derive(Debug, Clone, PartialEq)]
pub struct RenderStyle {
    /// Canvas pixels per world meter.
    pub scale: f64,
    /// Blank border around the content, px.
    pub margin: f64,
    pub body_stroke: f64,
    pub arm_stroke: f64,
    pub joint_radius: f64,
    pub com_radius: f64,
    /// Drawn length of the unit velocity arrow, px.
    pub arrow_length: f64,
    pub font_size: f64,
    pub body_color: &'static str,
    pub pose_arm_color: &'static str,
    pub arm_color: &'static str,
    pub com_color: &'static str,
    pub velocity_color: &'static str,
    pub handle_color: &'static str,
    pub floor_color: &'static str,
}

impl Default for RenderStyle {
    fn default() -> Self {
        Self {
            scale: 400.0,
            margin: 40.0,
            body_stroke: 6.0,
            arm_stroke: 4.0,
            joint_radius: 4.0,
            com_radius: 7.0,
            arrow_length: 80.0,
            font_size: 14.0,
            body_color: "#3b4a5a",
            pose_arm_color: "#9aa5b1",
            arm_color: "#d9480f",
            com_color: "#1864ab",
            velocity_color: "#1864ab",
            handle_color: "#2b8a3e",
            floor_color: "#868e96",
        }
    }
}

impl RenderStyle {
    pub fn validate(&self) -> Result<()> {
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "render scale must be > 0, got {}",
                self.scale
            )));
        }
        if !(self.margin.is_finite() && self.margin >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "render margin must be >= 0, got {}",
                self.margin
            )));
        }
        Ok(())
    }
}

/// Affine world-to-canvas map: `cx = scale x + ox`, `cy = -scale y + oy`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanvasTransform {
    pub scale: f64,
    pub offset: Vec2,
}

impl CanvasTransform {
    /// Places the world box `[min, max]` inside `margin` px of border.
    pub fn fitting(min: Vec2, max: Vec2, scale: f64, margin: f64) -> Self {
        Self {
            scale,
            offset: Vec2::new(margin - scale * min.x, margin + scale * max.y),
        }
    }

    pub fn to_canvas(&self, world: Vec2) -> Vec2 {
        Vec2::new(
            self.scale * world.x + self.offset.x,
            -self.scale * world.y + self.offset.y,
        )
    }

    pub fn to_world(&self, canvas: Vec2) -> Vec2 {
        Vec2::new(
            (canvas.x - self.offset.x) / self.scale,
            (self.offset.y - canvas.y) / self.scale,
        )
    }

    /// A world direction as a canvas direction.
    pub fn direction(&self, world: Vec2) -> Vec2 {
        Vec2::new(world.x, -world.y)
    }
}

/// Canvas coordinate text: 9 decimals, trailing zeros dropped.
pub fn fmt_px(v: f64) -> String {
    let s = format!("{v:.9}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn points_attr(points: &[Vec2]) -> String {
    points
        .iter()
        .map(|p| format!("{},{}", fmt_px(p.x), fmt_px(p.y)))
        .collect::<Vec<_>>()
        .join(" ")
}

fn svg_open(out: &mut String, width: f64, height: f64) {
    let mm = |px: f64| fmt_px(px * 25.4 / 96.0);
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}mm" height="{}mm" viewBox="0 0 {} {}">"#,
        mm(width),
        mm(height),
        fmt_px(width),
        fmt_px(height)
    );
}

struct Bounds {
    min: Vec2,
    max: Vec2,
}

impl Bounds {
    fn new(p: Vec2) -> Self {
        Self { min: p, max: p }
    }

    fn include(&mut self, p: Vec2) {
        self.min = Vec2::new(self.min.x.min(p.x), self.min.y.min(p.y));
        self.max = Vec2::new(self.max.x.max(p.x), self.max.y.max(p.y));
    }

    fn include_disk(&mut self, c: Vec2, r: f64) {
        self.include(c - Vec2::new(r, r));
        self.include(c + Vec2::new(r, r));
    }
}

fn chain_points(g: &ChainGeometry) -> [Vec2; 8] {
    [
        g.toe, g.ankle, g.knee, g.hip, g.shoulder, g.head_end, g.elbow, g.wrist,
    ]
}

/// Side view of `scenario.frames[frame_index]`. The canvas bounds do not
/// depend on `placement`, so the documents with and without it differ only
/// by the trailing placement group.
pub fn render_scene(
    scenario: &Scenario,
    frame_index: usize,
    placement: Option<&Placement>,
    style: &RenderStyle,
) -> Result<String> {
    style.validate()?;
    let frame = scenario
        .frames
        .get(frame_index)
        .ok_or(Error::IndexOutOfRange {
            index: frame_index,
            len: scenario.frames.len(),
        })?;
    let segments = &scenario.segments;
    let g = forward_kinematics(&frame.pose, segments);
    let com = nonarm_com(&frame.pose, segments);
    let direction = crate::body_model::com_velocity(&scenario.frames, segments, frame_index).ok();

    let mut bounds = Bounds::new(com);
    for p in chain_points(&g) {
        bounds.include(p);
    }
    bounds.include_disk(
        g.shoulder,
        segments.arm_reach() + 0.5 * scenario.robot.handle_length,
    );
    bounds.include(Vec2::new(bounds.min.x, scenario.floor_y));
    let t = CanvasTransform::fitting(bounds.min, bounds.max, style.scale, style.margin);
    let width = style.scale * (bounds.max.x - bounds.min.x) + 2.0 * style.margin;
    let height = style.scale * (bounds.max.y - bounds.min.y) + 2.0 * style.margin;

    let mut out = String::new();
    svg_open(&mut out, width, height);
    let _ = writeln!(
        out,
        "<title>{} frame {}</title>",
        xml_escape(&scenario.name),
        frame_index
    );

    let floor_y = t.to_canvas(Vec2::new(0.0, scenario.floor_y)).y;
    let _ = writeln!(
        out,
        r#"<line id="floor" x1="0" y1="{y}" x2="{}" y2="{y}" stroke="{}" stroke-width="2"/>"#,
        fmt_px(width),
        style.floor_color,
        y = fmt_px(floor_y)
    );

    let c = |p: Vec2| t.to_canvas(p);
    let _ = writeln!(out, r#"<g id="body">"#);
    let _ = writeln!(
        out,
        r#"<polyline id="pose-arm" points="{}" fill="none" stroke="{}" stroke-width="{}" stroke-linecap="round" stroke-linejoin="round"/>"#,
        points_attr(&[c(g.shoulder), c(g.elbow), c(g.wrist)]),
        style.pose_arm_color,
        fmt_px(style.arm_stroke)
    );
    let _ = writeln!(
        out,
        r#"<polyline id="body-links" points="{}" fill="none" stroke="{}" stroke-width="{}" stroke-linecap="round" stroke-linejoin="round"/>"#,
        points_attr(&[
            c(g.toe),
            c(g.ankle),
            c(g.knee),
            c(g.hip),
            c(g.shoulder),
            c(g.head_end)
        ]),
        style.body_color,
        fmt_px(style.body_stroke)
    );
    for (name, p) in [
        ("ankle", g.ankle),
        ("knee", g.knee),
        ("hip", g.hip),
        ("shoulder", g.shoulder),
        ("elbow", g.elbow),
        ("wrist", g.wrist),
    ] {
        let p = c(p);
        let _ = writeln!(
            out,
            r#"<circle class="joint" id="joint-{name}" cx="{}" cy="{}" r="{}" fill="{}"/>"#,
            fmt_px(p.x),
            fmt_px(p.y),
            fmt_px(style.joint_radius),
            style.body_color
        );
    }
    let _ = writeln!(out, "</g>");

    let pc = c(com);
    let _ = writeln!(out, r#"<g id="com-state">"#);
    let _ = writeln!(
        out,
        r#"<circle id="com" cx="{}" cy="{}" r="{}" fill="{}"/>"#,
        fmt_px(pc.x),
        fmt_px(pc.y),
        fmt_px(style.com_radius),
        style.com_color
    );
    if let Some(state) = direction {
        let d = t.direction(state.direction);
        let tip = pc + d * style.arrow_length;
        let head = style.arrow_length * 0.15;
        let side = d.perp() * (0.5 * head);
        let _ = writeln!(
            out,
            r#"<line id="velocity" x1="{}" y1="{}" x2="{}" y2="{}" stroke="{}" stroke-width="2"/>"#,
            fmt_px(pc.x),
            fmt_px(pc.y),
            fmt_px(tip.x),
            fmt_px(tip.y),
            style.velocity_color
        );
        let base = tip - d * head;
        let _ = writeln!(
            out,
            r#"<polygon id="velocity-head" points="{}" fill="{}"/>"#,
            points_attr(&[tip, base + side, base - side]),
            style.velocity_color
        );
        let _ = writeln!(
            out,
            r#"<text id="speed" x="{}" y="{}" font-family="sans-serif" font-size="{}" fill="{}">|v| = {:.4} m/s</text>"#,
            fmt_px(pc.x + style.com_radius + 4.0),
            fmt_px(pc.y + style.font_size + style.com_radius),
            fmt_px(style.font_size),
            style.velocity_color,
            state.speed
        );
    }
    let _ = writeln!(out, "</g>");

    if let Some(p) = placement {
        let upper = Vec2::from_angle(g.theta_04() + p.theta5_opt) * segments.upper_arm_length();
        let elbow = g.shoulder + upper;
        let hw = 0.5 * scenario.robot.handle_length;
        let hh = 0.5 * scenario.robot.handle_diameter;
        let corner = c(p.handle + Vec2::new(-hw, hh));
        let _ = writeln!(out, r#"<g id="placement">"#);
        let _ = writeln!(
            out,
            r#"<polyline id="arm" points="{}" fill="none" stroke="{}" stroke-width="{}" stroke-linecap="round" stroke-linejoin="round"/>"#,
            points_attr(&[c(g.shoulder), c(elbow), c(p.handle)]),
            style.arm_color,
            fmt_px(style.arm_stroke)
        );
        let _ = writeln!(
            out,
            r#"<rect id="handle" x="{}" y="{}" width="{}" height="{}" fill="{}"/>"#,
            fmt_px(corner.x),
            fmt_px(corner.y),
            fmt_px(2.0 * hw * style.scale),
            fmt_px(2.0 * hh * style.scale),
            style.handle_color
        );
        let _ = writeln!(
            out,
            r#"<text id="angles" x="{}" y="{}" font-family="sans-serif" font-size="{}" fill="{}">shoulder {:.1} deg, elbow {:.1} deg</text>"#,
            fmt_px(style.margin),
            fmt_px(style.margin),
            fmt_px(style.font_size),
            style.arm_color,
            p.theta5_opt.to_degrees(),
            p.theta6_opt.to_degrees()
        );
        let _ = writeln!(out, "</g>");
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Values on a regular grid, `x` outer: `cells[ix * y.len() + iy]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatMap {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub cells: Vec<Option<f64>>,
    /// Outlined cell.
    pub highlight: Option<usize>,
}

impl HeatMap {
    pub fn from_landscape(landscape: &Landscape) -> Self {
        let deg = |axis: &GridAxis| axis.values().map(f64::to_degrees).collect::<Vec<_>>();
        Self {
            title: "objective landscape".into(),
            x_label: "shoulder angle (deg)".into(),
            y_label: "elbow angle (deg)".into(),
            x: deg(&landscape.theta5_axis),
            y: deg(&landscape.theta6_axis),
            cells: landscape.samples.iter().map(|s| s.objective).collect(),
            highlight: Some(landscape.argmax),
        }
    }

    pub fn range(&self) -> Option<(f64, f64)> {
        self.cells.iter().flatten().fold(None, |acc, &v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
    }
}

const PALETTE: [(u8, u8, u8); 5] = [
    (68, 1, 84),
    (59, 82, 139),
    (33, 145, 140),
    (94, 201, 98),
    (253, 231, 37),
];

/// Color for `t` in [0, 1] along a perceptually ordered ramp.
pub fn ramp(t: f64) -> String {
    let t = if t.is_finite() {
        t.clamp(0.0, 1.0)
    } else {
        0.0
    };
    let pos = t * (PALETTE.len() - 1) as f64;
    let i = (pos.floor() as usize).min(PALETTE.len() - 2);
    let f = pos - i as f64;
    let (a, b) = (PALETTE[i], PALETTE[i + 1]);
    let mix = |x: u8, y: u8| (x as f64 + f * (y as f64 - x as f64)).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(a.0, b.0),
        mix(a.1, b.1),
        mix(a.2, b.2)
    )
}

/// Heat map of `map` with the highlighted cell outlined and the color
/// scale annotated with the finite min and max.
pub fn render_heatmap(map: &HeatMap) -> Result<String> {
    let (nx, ny) = (map.x.len(), map.y.len());
    if nx == 0 || ny == 0 || map.cells.len() != nx * ny {
        return Err(Error::InvalidConfig(format!(
            "heat map needs {nx} x {ny} = {} cells, got {}",
            nx * ny,
            map.cells.len()
        )));
    }
    let plot = 600.0;
    let (cw, ch) = (plot / nx as f64, plot / ny as f64);
    let (left, top) = (90.0, 40.0);
    let legend_x = left + plot + 30.0;
    let width = legend_x + 110.0;
    let height = top + plot + 60.0;
    let (lo, hi) = map.range().unwrap_or((0.0, 0.0));
    let span = hi - lo;

    let mut out = String::new();
    svg_open(&mut out, width, height);
    let _ = writeln!(out, "<title>{}</title>", xml_escape(&map.title));
    let _ = writeln!(out, r#"<g id="cells" shape-rendering="crispEdges">"#);
    for ix in 0..nx {
        for iy in 0..ny {
            let k = ix * ny + iy;
            let fill = match map.cells[k] {
                Some(v) if span > 0.0 => ramp((v - lo) / span),
                Some(_) => ramp(1.0),
                None => "#bfbfbf".to_string(),
            };
            // y grows upward on the plot
            let x = left + ix as f64 * cw;
            let y = top + (ny - 1 - iy) as f64 * ch;
            let _ = writeln!(
                out,
                r#"<rect class="cell" x="{}" y="{}" width="{}" height="{}" fill="{fill}"/>"#,
                fmt_px(x),
                fmt_px(y),
                fmt_px(cw),
                fmt_px(ch)
            );
        }
    }
    let _ = writeln!(out, "</g>");
    if let Some(k) = map.highlight.filter(|&k| k < map.cells.len()) {
        let (ix, iy) = (k / ny, k % ny);
        let _ = writeln!(
            out,
            r##"<rect id="argmax" data-x="{}" data-y="{}" x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#e03131" stroke-width="2"/>"##,
            map.x[ix],
            map.y[iy],
            fmt_px(left + ix as f64 * cw),
            fmt_px(top + (ny - 1 - iy) as f64 * ch),
            fmt_px(cw),
            fmt_px(ch)
        );
    }

    let text = |out: &mut String, id: &str, x: f64, y: f64, anchor: &str, body: String| {
        let _ = writeln!(
            out,
            r#"<text id="{id}" x="{}" y="{}" text-anchor="{anchor}" font-family="sans-serif" font-size="12">{}</text>"#,
            fmt_px(x),
            fmt_px(y),
            xml_escape(&body)
        );
    };
    text(
        &mut out,
        "title",
        left,
        top - 15.0,
        "start",
        map.title.clone(),
    );
    text(
        &mut out,
        "x-label",
        left + 0.5 * plot,
        top + plot + 45.0,
        "middle",
        map.x_label.clone(),
    );
    text(
        &mut out,
        "x-min",
        left,
        top + plot + 18.0,
        "start",
        fmt_px(map.x[0]),
    );
    text(
        &mut out,
        "x-max",
        left + plot,
        top + plot + 18.0,
        "end",
        fmt_px(map.x[nx - 1]),
    );
    let _ = writeln!(
        out,
        r#"<text id="y-label" x="20" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 20 {})">{}</text>"#,
        fmt_px(top + 0.5 * plot),
        fmt_px(top + 0.5 * plot),
        xml_escape(&map.y_label)
    );
    text(
        &mut out,
        "y-min",
        left - 6.0,
        top + plot,
        "end",
        fmt_px(map.y[0]),
    );
    text(
        &mut out,
        "y-max",
        left - 6.0,
        top + 12.0,
        "end",
        fmt_px(map.y[ny - 1]),
    );

    let _ = writeln!(out, r#"<g id="color-scale">"#);
    let steps = 32;
    let bar_h = plot / steps as f64;
    for i in 0..steps {
        let t = (steps - 1 - i) as f64 / (steps - 1) as f64;
        let _ = writeln!(
            out,
            r#"<rect x="{}" y="{}" width="20" height="{}" fill="{}"/>"#,
            fmt_px(legend_x),
            fmt_px(top + i as f64 * bar_h),
            fmt_px(bar_h),
            ramp(t)
        );
    }
    let _ = writeln!(out, "</g>");
    text(
        &mut out,
        "scale-max",
        legend_x + 26.0,
        top + 10.0,
        "start",
        format!("{hi:.6}"),
    );
    text(
        &mut out,
        "scale-min",
        legend_x + 26.0,
        top + plot,
        "start",
        format!("{lo:.6}"),
    );
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn render_landscape(landscape: &Landscape) -> Result<String> {
    render_heatmap(&HeatMap::from_landscape(landscape))
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}
