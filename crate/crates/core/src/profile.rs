//! Rotationally symmetric profiles `f: [0, T] -> [0, inf)` realizing
//! `g = dt^2 + f(t)^2 g_{S^{n-1}}` on the n-sphere, including the
//! Pinocchio family (fixed body, quintic taper, thin neck, small nose cap).

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::format::fmt_f64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProfileError {
    #[error("dimension n = {0} must be at least 2")]
    Dimension(usize),
    #[error("neck radius r = {r} must satisfy 0 < r < {bound}")]
    NeckRadius { r: f64, bound: f64 },
    #[error("neck length must be finite and nonnegative, got {0}")]
    NeckLength(f64),
    #[error("body extent t_body = {0} must lie in (0, pi)")]
    BodyExtent(f64),
    #[error("taper width must be positive, got {0}")]
    TaperWidth(f64),
    #[error("blend width {w} must lie in [0, {max}]")]
    BlendWidth { w: f64, max: f64 },
    #[error("resolution N = {0} must be at least 16")]
    Resolution(usize),
    #[error("radius must be positive, got {0}")]
    Radius(f64),
    #[error("taper blend not strictly positive (min {0})")]
    TaperNotPositive(f64),
    #[error("taper blend rises above sin(t_body) = {bound} (max {max})")]
    TaperOvershoot { max: f64, bound: f64 },
}

/// Labeled piece of the profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    Body,
    Taper,
    Neck,
    NoseCap,
}

impl Region {
    pub fn name(self) -> &'static str {
        match self {
            Region::Body => "body",
            Region::Taper => "taper",
            Region::Neck => "neck",
            Region::NoseCap => "nose_cap",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSpan {
    pub region: Region,
    pub start: f64,
    pub end: f64,
    /// Index of the node at `start`.
    pub first_node: usize,
    /// Index of the node at `end`; equals `first_node` for an empty region.
    pub last_node: usize,
}

impl RegionSpan {
    pub fn length(&self) -> f64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.first_node == self.last_node
    }

    pub fn cells(&self) -> usize {
        self.last_node - self.first_node
    }
}

/// Parameters of one Pinocchio metric `g_{r,L}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSpec {
    pub n: usize,
    pub r: f64,
    pub neck_length: f64,
    pub t_body: f64,
    pub w_taper: f64,
    pub w_blend: f64,
    pub resolution: usize,
}

pub const DEFAULT_T_BODY: f64 = 2.0;
pub const DEFAULT_W_TAPER: f64 = 1.0;
pub const DEFAULT_RESOLUTION: usize = 64;

impl ProfileSpec {
    /// Defaults: `t_body = 2`, `w_taper = 1`, `w_blend = 0.1 r`, `N = 64`.
    pub fn new(n: usize, r: f64, neck_length: f64) -> Self {
        Self {
            n,
            r,
            neck_length,
            t_body: DEFAULT_T_BODY,
            w_taper: DEFAULT_W_TAPER,
            w_blend: 0.1 * r,
            resolution: DEFAULT_RESOLUTION,
        }
    }

    pub fn with_resolution(mut self, resolution: usize) -> Self {
        self.resolution = resolution;
        self
    }

    pub fn with_body(mut self, t_body: f64, w_taper: f64) -> Self {
        self.t_body = t_body;
        self.w_taper = w_taper;
        self
    }

    pub fn with_blend(mut self, w_blend: f64) -> Self {
        self.w_blend = w_blend;
        self
    }

    pub fn validate(&self) -> Result<(), ProfileError> {
        if self.n < 2 {
            return Err(ProfileError::Dimension(self.n));
        }
        if !(self.t_body > 0.0 && self.t_body < PI) {
            return Err(ProfileError::BodyExtent(self.t_body));
        }
        let bound = 0.9f64.min(self.t_body.sin());
        if !(self.r > 0.0 && self.r < bound) {
            return Err(ProfileError::NeckRadius { r: self.r, bound });
        }
        if !(self.neck_length >= 0.0 && self.neck_length.is_finite()) {
            return Err(ProfileError::NeckLength(self.neck_length));
        }
        if !(self.w_taper > 0.0 && self.w_taper.is_finite()) {
            return Err(ProfileError::TaperWidth(self.w_taper));
        }
        let max_blend = 0.25 * PI * self.r;
        if !(self.w_blend >= 0.0 && self.w_blend <= max_blend) {
            return Err(ProfileError::BlendWidth {
                w: self.w_blend,
                max: max_blend,
            });
        }
        if self.resolution < 16 {
            return Err(ProfileError::Resolution(self.resolution));
        }
        Ok(())
    }

    pub fn neck_start(&self) -> f64 {
        self.t_body + self.w_taper
    }

    pub fn cap_start(&self) -> f64 {
        self.neck_start() + self.neck_length
    }

    pub fn total_length(&self) -> f64 {
        self.cap_start() + self.r * PI / 2.0
    }
}

/// How a grid was built, so it can be rebuilt at another resolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ProfileRecipe {
    Round {
        n: usize,
        radius: f64,
        resolution: usize,
    },
    Pinocchio(ProfileSpec),
}

impl ProfileRecipe {
    pub fn resolution(&self) -> usize {
        match self {
            ProfileRecipe::Round { resolution, .. } => *resolution,
            ProfileRecipe::Pinocchio(spec) => spec.resolution,
        }
    }

    pub fn with_resolution(&self, resolution: usize) -> Self {
        match *self {
            ProfileRecipe::Round { n, radius, .. } => ProfileRecipe::Round {
                n,
                radius,
                resolution,
            },
            ProfileRecipe::Pinocchio(spec) => ProfileRecipe::Pinocchio(spec.with_resolution(resolution)),
        }
    }

    pub fn build(&self) -> Result<ProfileGrid, ProfileError> {
        match *self {
            ProfileRecipe::Round {
                n,
                radius,
                resolution,
            } => build_round_profile(n, radius, resolution),
            ProfileRecipe::Pinocchio(spec) => build_pinocchio_profile(&spec),
        }
    }
}

/// Analytic piece of the profile.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Piece {
    /// `f = R sin(dir (t - anchor) / R)`.
    Sine { radius: f64, anchor: f64, dir: f64 },
    /// Polynomial in `s = (t - start) / width`.
    Quintic { start: f64, width: f64, c: [f64; 6] },
    Constant(f64),
}

impl Piece {
    fn eval(&self, t: f64) -> [f64; 3] {
        match *self {
            Piece::Sine { radius, anchor, dir } => {
                let x = dir * (t - anchor) / radius;
                let (s, c) = x.sin_cos();
                [radius * s, dir * c, -s / radius]
            }
            Piece::Quintic { start, width, c } => {
                let s = (t - start) / width;
                let p = c[0] + s * (c[1] + s * (c[2] + s * (c[3] + s * (c[4] + s * c[5]))));
                let dp = c[1] + s * (2.0 * c[2] + s * (3.0 * c[3] + s * (4.0 * c[4] + s * 5.0 * c[5])));
                let ddp = 2.0 * c[2] + s * (6.0 * c[3] + s * (12.0 * c[4] + s * 20.0 * c[5]));
                [p, dp / width, ddp / (width * width)]
            }
            Piece::Constant(v) => [v, 0.0, 0.0],
        }
    }

    /// Quintic matching `(f, f', f'')` at both ends of `[start, start + width]`.
    fn hermite(start: f64, width: f64, left: [f64; 3], right: [f64; 3]) -> Self {
        let w = width;
        let c0 = left[0];
        let c1 = w * left[1];
        let c2 = 0.5 * w * w * left[2];
        let r0 = right[0] - (c0 + c1 + c2);
        let r1 = w * right[1] - (c1 + 2.0 * c2);
        let r2 = w * w * right[2] - 2.0 * c2;
        let c3 = 10.0 * r0 - 4.0 * r1 + 0.5 * r2;
        let c4 = -15.0 * r0 + 7.0 * r1 - r2;
        let c5 = 6.0 * r0 - 3.0 * r1 + 0.5 * r2;
        Piece::Quintic {
            start,
            width,
            c: [c0, c1, c2, c3, c4, c5],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Segment {
    start: f64,
    end: f64,
    piece: Piece,
}

/// Discretized profile. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileGrid {
    pub n: usize,
    pub t: Vec<f64>,
    pub f: Vec<f64>,
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    pub regions: Vec<RegionSpan>,
    pub total_length: f64,
    segments: Vec<Segment>,
    recipe: ProfileRecipe,
}

struct RegionPlan {
    region: Region,
    start: f64,
    end: f64,
    /// Pieces covering `[start, end]` in order.
    segments: Vec<Segment>,
}

/// Cells in a region of the given length: `N * ceil(length)`, so every cell
/// is at most `1/N` long and doubling `N` bisects every cell.
fn region_cells(length: f64, resolution: usize) -> usize {
    if length <= 0.0 {
        0
    } else {
        resolution * (length.ceil() as usize).max(1)
    }
}

fn assemble_grid(n: usize, plans: Vec<RegionPlan>, resolution: usize, recipe: ProfileRecipe) -> ProfileGrid {
    let mut t = vec![0.0];
    let mut regions = Vec::with_capacity(plans.len());
    let mut segments = Vec::new();
    for plan in &plans {
        let length = plan.end - plan.start;
        let cells = region_cells(length, resolution);
        let first_node = t.len() - 1;
        for i in 1..=cells {
            let ti = if i == cells {
                plan.end
            } else {
                plan.start + length * (i as f64) / (cells as f64)
            };
            t.push(ti);
        }
        regions.push(RegionSpan {
            region: plan.region,
            start: plan.start,
            end: plan.end,
            first_node,
            last_node: t.len() - 1,
        });
        segments.extend(plan.segments.iter().copied());
    }
    let mut grid = ProfileGrid {
        n,
        f: Vec::with_capacity(t.len()),
        f1: Vec::with_capacity(t.len()),
        f2: Vec::with_capacity(t.len()),
        total_length: *t.last().unwrap(),
        t,
        regions,
        segments,
        recipe,
    };
    for i in 0..grid.t.len() {
        let [f, f1, f2] = grid.eval(grid.t[i]);
        grid.f.push(f);
        grid.f1.push(f1);
        grid.f2.push(f2);
    }
    grid
}

/// Round sphere `S^n(R)`: `f(t) = R sin(t / R)` on `[0, pi R]`.
pub fn build_round_profile(n: usize, radius: f64, resolution: usize) -> Result<ProfileGrid, ProfileError> {
    if n < 2 {
        return Err(ProfileError::Dimension(n));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(ProfileError::Radius(radius));
    }
    if resolution < 16 {
        return Err(ProfileError::Resolution(resolution));
    }
    let end = PI * radius;
    let plans = vec![RegionPlan {
        region: Region::Body,
        start: 0.0,
        end,
        segments: vec![Segment {
            start: 0.0,
            end,
            piece: Piece::Sine {
                radius,
                anchor: 0.0,
                dir: 1.0,
            },
        }],
    }];
    let recipe = ProfileRecipe::Round {
        n,
        radius,
        resolution,
    };
    Ok(assemble_grid(n, plans, resolution, recipe))
}

/// Pinocchio profile: `sin t` on the body, quintic taper down to `r`, a neck
/// of constant radius `r` and length `L`, and a hemispherical nose cap of
/// radius `r`, C^2-blended into the neck over `w_blend`.
pub fn build_pinocchio_profile(spec: &ProfileSpec) -> Result<ProfileGrid, ProfileError> {
    spec.validate()?;
    let r = spec.r;
    let t_body = spec.t_body;
    let neck_start = spec.neck_start();
    let cap_start = spec.cap_start();
    let total = spec.total_length();

    let body = Piece::Sine {
        radius: 1.0,
        anchor: 0.0,
        dir: 1.0,
    };
    let taper = Piece::hermite(t_body, spec.w_taper, body.eval(t_body), [r, 0.0, 0.0]);
    check_taper(&taper, t_body, spec.w_taper)?;
    let cap = Piece::Sine {
        radius: r,
        anchor: total,
        dir: -1.0,
    };

    let mut cap_segments = Vec::new();
    if spec.w_blend > 0.0 {
        let blend_end = cap_start + spec.w_blend;
        cap_segments.push(Segment {
            start: cap_start,
            end: blend_end,
            piece: Piece::hermite(cap_start, spec.w_blend, [r, 0.0, 0.0], cap.eval(blend_end)),
        });
        cap_segments.push(Segment {
            start: blend_end,
            end: total,
            piece: cap,
        });
    } else {
        cap_segments.push(Segment {
            start: cap_start,
            end: total,
            piece: cap,
        });
    }

    let plans = vec![
        RegionPlan {
            region: Region::Body,
            start: 0.0,
            end: t_body,
            segments: vec![Segment {
                start: 0.0,
                end: t_body,
                piece: body,
            }],
        },
        RegionPlan {
            region: Region::Taper,
            start: t_body,
            end: neck_start,
            segments: vec![Segment {
                start: t_body,
                end: neck_start,
                piece: taper,
            }],
        },
        RegionPlan {
            region: Region::Neck,
            start: neck_start,
            end: cap_start,
            segments: if spec.neck_length > 0.0 {
                vec![Segment {
                    start: neck_start,
                    end: cap_start,
                    piece: Piece::Constant(r),
                }]
            } else {
                Vec::new()
            },
        },
        RegionPlan {
            region: Region::NoseCap,
            start: cap_start,
            end: total,
            segments: cap_segments,
        },
    ];
    Ok(assemble_grid(spec.n, plans, spec.resolution, ProfileRecipe::Pinocchio(*spec)))
}

fn check_taper(taper: &Piece, start: f64, width: f64) -> Result<(), ProfileError> {
    let bound = start.sin();
    let samples = 2048;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for i in 0..=samples {
        let [f, _, _] = taper.eval(start + width * i as f64 / samples as f64);
        min = min.min(f);
        max = max.max(f);
    }
    if !(min > 0.0) {
        return Err(ProfileError::TaperNotPositive(min));
    }
    if max > bound * (1.0 + 1e-12) {
        return Err(ProfileError::TaperOvershoot { max, bound });
    }
    Ok(())
}

impl ProfileGrid {
    pub fn recipe(&self) -> &ProfileRecipe {
        &self.recipe
    }

    pub fn resolution(&self) -> usize {
        self.recipe.resolution()
    }

    pub fn node_count(&self) -> usize {
        self.t.len()
    }

    pub fn cell_count(&self) -> usize {
        self.t.len() - 1
    }

    /// Length of cell `i` (between nodes `i` and `i + 1`).
    pub fn spacing(&self, i: usize) -> f64 {
        self.t[i + 1] - self.t[i]
    }

    pub fn max_spacing(&self) -> f64 {
        (0..self.cell_count()).map(|i| self.spacing(i)).fold(0.0, f64::max)
    }

    pub fn midpoint(&self, i: usize) -> f64 {
        0.5 * (self.t[i] + self.t[i + 1])
    }

    pub fn region(&self, region: Region) -> Option<&RegionSpan> {
        self.regions.iter().find(|s| s.region == region)
    }

    /// Profile value and derivatives at an arbitrary point. At a joint the
    /// piece on the right is used, since every piece reproduces its own left
    /// end data exactly.
    pub fn eval(&self, t: f64) -> [f64; 3] {
        let idx = self
            .segments
            .partition_point(|s| s.end <= t)
            .min(self.segments.len() - 1);
        self.segments[idx].piece.eval(t)
    }

    /// Rebuilds the same geometry at another resolution.
    pub fn with_resolution(&self, resolution: usize) -> Result<ProfileGrid, ProfileError> {
        self.recipe.with_resolution(resolution).build()
    }

    /// Rebuilds with every cell bisected.
    pub fn refined(&self) -> Result<ProfileGrid, ProfileError> {
        self.with_resolution(2 * self.resolution())
    }

    pub fn region_of_node(&self, i: usize) -> Region {
        self.regions
            .iter()
            .find(|s| !s.is_empty() && i >= s.first_node && i <= s.last_node)
            .map(|s| s.region)
            .unwrap_or(Region::Body)
    }

    /// Index of a node located exactly at `t`, if any.
    pub fn node_at(&self, t: f64) -> Option<usize> {
        self.t.binary_search_by(|x| x.partial_cmp(&t).unwrap()).ok()
    }

    /// CSV with columns `t,f,f1,f2,region`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,f,f1,f2,region\n");
        for i in 0..self.node_count() {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                fmt_f64(self.t[i]),
                fmt_f64(self.f[i]),
                fmt_f64(self.f1[i]),
                fmt_f64(self.f2[i]),
                self.region_of_node(i).name()
            );
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JointJump {
    pub t: f64,
    pub left: Region,
    pub right: Region,
    /// `|f''_left - f''_right|` from one-sided second-order finite differences
    /// of the profile, with a step no longer than the grid spacing.
    pub jump: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub joints: Vec<JointJump>,
    pub max_joint_jump: f64,
    /// Minimum of `f` over interior nodes.
    pub positivity_margin: f64,
    /// `|f'(0) - 1|`.
    pub pole_residual_start: f64,
    /// `|f'(T) + 1|`.
    pub pole_residual_end: f64,
    pub tol: f64,
    pub passed: bool,
}

fn one_sided_second_derivative(p: &ProfileGrid, t: f64, step: f64) -> f64 {
    let f = |k: f64| p.eval(t + k * step)[0];
    (2.0 * f(0.0) - 5.0 * f(1.0) + 4.0 * f(2.0) - f(3.0)) / (step * step)
}

/// Report-only check of smoothness, positivity and pole closure.
pub fn validate_profile(p: &ProfileGrid, tol: f64) -> ValidationReport {
    let nonempty: Vec<&RegionSpan> = p.regions.iter().filter(|s| !s.is_empty()).collect();
    // the stencil must resolve the narrowest analytic piece (the blend)
    let narrowest = p.segments.iter().map(|s| s.end - s.start).fold(f64::INFINITY, f64::min);
    let step = p.max_spacing().min(narrowest / 256.0);
    let mut joints = Vec::new();
    for pair in nonempty.windows(2) {
        let (left, right) = (pair[0], pair[1]);
        let j = left.last_node;
        if left.cells() < 3 || right.cells() < 3 {
            continue;
        }
        let fl = one_sided_second_derivative(p, p.t[j], -step);
        let fr = one_sided_second_derivative(p, p.t[j], step);
        joints.push(JointJump {
            t: p.t[j],
            left: left.region,
            right: right.region,
            jump: (fl - fr).abs(),
        });
    }
    let max_joint_jump = joints.iter().map(|j| j.jump).fold(0.0, f64::max);
    let last = p.node_count() - 1;
    let positivity_margin = p.f[1..last].iter().copied().fold(f64::INFINITY, f64::min);
    let pole_residual_start = (p.f1[0] - 1.0).abs();
    let pole_residual_end = (p.f1[last] + 1.0).abs();
    let passed = max_joint_jump <= tol
        && positivity_margin > 0.0
        && pole_residual_start <= tol
        && pole_residual_end <= tol;
    ValidationReport {
        joints,
        max_joint_jump,
        positivity_margin,
        pole_residual_start,
        pole_residual_end,
        tol,
        passed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_neck_layout() {
        let p = build_pinocchio_profile(&ProfileSpec::new(3, 0.1, 10.0)).unwrap();
        let neck = p.region(Region::Neck).unwrap();
        assert_eq!(neck.start, 3.0);
        assert_eq!(neck.end, 13.0);
        for i in neck.first_node..=neck.last_node {
            assert_eq!(p.f[i], 0.1);
        }
        assert!((neck.length() - 10.0).abs() < 1e-15);
    }

    #[test]
    fn empty_neck_when_length_zero() {
        let p = build_pinocchio_profile(&ProfileSpec::new(3, 0.1, 0.0)).unwrap();
        let neck = p.region(Region::Neck).unwrap();
        assert!(neck.is_empty());
        let taper = p.region(Region::Taper).unwrap();
        let cap = p.region(Region::NoseCap).unwrap();
        assert_eq!(taper.last_node, cap.first_node);
        assert_eq!(taper.end, cap.start);
    }

    #[test]
    fn body_identical_across_parameters() {
        let a = build_pinocchio_profile(&ProfileSpec::new(3, 0.1, 1.0)).unwrap();
        let b = build_pinocchio_profile(&ProfileSpec::new(3, 0.5, 100.0)).unwrap();
        let ea = a.region(Region::Body).unwrap().last_node;
        let eb = b.region(Region::Body).unwrap().last_node;
        assert_eq!(ea, eb);
        assert_eq!(a.t[..=ea], b.t[..=eb]);
        assert_eq!(a.f[..=ea], b.f[..=eb]);
        for i in 0..=ea {
            assert_eq!(a.f[i], a.t[i].sin());
        }
    }

    #[test]
    fn pole_closure_and_positivity() {
        let p = build_pinocchio_profile(&ProfileSpec::new(4, 0.2, 3.0)).unwrap();
        let last = p.node_count() - 1;
        assert_eq!(p.f[0], 0.0);
        assert!(p.f[last].abs() < 1e-15);
        assert_eq!(p.f1[0], 1.0);
        assert!((p.f1[last] + 1.0).abs() < 1e-15);
        assert!(p.f[1..last].iter().all(|&f| f > 0.0));
        assert!(p.t.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn round_profile_basics() {
        let p = build_round_profile(3, 1.0, 32).unwrap();
        assert!((p.total_length - PI).abs() < 1e-15);
        let [f, _, _] = p.eval(PI / 2.0);
        assert!((f - 1.0).abs() < 1e-15);
        let report = validate_profile(&p, 1e-12);
        assert!(report.passed);
        assert!(report.pole_residual_start < 1e-15);
        assert!(report.pole_residual_end < 1e-15);
    }

    #[test]
    fn unblended_cap_reports_curvature_jump() {
        let r = 0.1;
        let spec = ProfileSpec::new(3, r, 2.0).with_blend(0.0).with_resolution(256);
        let p = build_pinocchio_profile(&spec).unwrap();
        let report = validate_profile(&p, 1e-2);
        let joint = report
            .joints
            .iter()
            .find(|j| j.left == Region::Neck && j.right == Region::NoseCap)
            .unwrap();
        assert!((joint.jump - 1.0 / r).abs() < 1e-3 / r, "jump {}", joint.jump);
        assert!(!report.passed);
    }

    #[test]
    fn blended_profile_has_small_joint_jumps() {
        let spec = ProfileSpec::new(3, 0.1, 2.0).with_resolution(256);
        let p = build_pinocchio_profile(&spec).unwrap();
        let report = validate_profile(&p, 0.05);
        assert!(report.passed, "{report:?}");
    }

    #[test]
    fn doubling_resolution_keeps_boundaries_and_values() {
        let spec = ProfileSpec::new(3, 0.3, 2.5);
        let a = build_pinocchio_profile(&spec).unwrap();
        let b = a.refined().unwrap();
        for (ra, rb) in a.regions.iter().zip(&b.regions) {
            assert_eq!(ra.start, rb.start);
            assert_eq!(ra.end, rb.end);
            assert_eq!(2 * ra.cells(), rb.cells());
        }
        for i in 0..a.node_count() {
            let j = b.node_at(a.t[i]).expect("coincident node");
            assert_eq!(a.f[i], b.f[j]);
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(matches!(
            build_pinocchio_profile(&ProfileSpec::new(3, 0.95, 1.0)),
            Err(ProfileError::NeckRadius { .. })
        ));
        assert!(matches!(
            build_pinocchio_profile(&ProfileSpec::new(3, 0.1, -1.0)),
            Err(ProfileError::NeckLength(_))
        ));
        assert!(matches!(
            build_pinocchio_profile(&ProfileSpec::new(3, 0.1, 1.0).with_resolution(8)),
            Err(ProfileError::Resolution(8))
        ));
        // neck thicker than taper start
        assert!(matches!(
            build_pinocchio_profile(&ProfileSpec::new(3, 0.5, 1.0).with_body(0.4, 1.0)),
            Err(ProfileError::NeckRadius { .. })
        ));
        // rising taper overshoots sin(t_body)
        assert!(matches!(
            build_pinocchio_profile(&ProfileSpec::new(3, 0.1, 1.0).with_body(1.0, 1.0)),
            Err(ProfileError::TaperOvershoot { .. })
        ));
        assert!(matches!(build_round_profile(1, 1.0, 32), Err(ProfileError::Dimension(1))));
    }

    #[test]
    fn csv_header_and_rows() {
        let p = build_round_profile(2, 1.0, 16).unwrap();
        let csv = p.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,f,f1,f2,region"));
        assert_eq!(csv.lines().count(), p.node_count() + 1);
    }
}
