//! Manifold spectra assembled from per-mode radial problems.
//!
//! Every spectrum is found in two passes. Sturm counts on the reduced
//! pencils locate a shift `sigma` below which at least `k` eigenvalues
//! (with multiplicity) lie, visiting modes in order until a certified
//! per-mode lower bound shows that no later mode can contribute. Then every
//! contributing mode is solved for exactly the eigenvalues below `sigma`,
//! in parallel.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigensolve::{EigenError, Selection, SymmetricPencil, DEFAULT_TOL};
use crate::format::{fmt_f64, fmt_opt};
use crate::geometry::{scalar_curvature_field, CurvatureField, GeometryError};
use crate::modes::{DiracMode, LaplaceMode};
use crate::profile::{ProfileError, ProfileGrid, ProfileRecipe};
use crate::radial_operators::{
    assemble_dirac_radial, assemble_laplace_radial, assemble_yamabe_radial, yamabe_coefficient, RadialError,
    RadialOperator,
};

/// Largest `lambda h^2` accepted for scalar operators.
pub const SCALAR_RESOLUTION_LIMIT: f64 = 0.1;
/// Largest `|lambda| h` accepted for the Dirac operator.
pub const DIRAC_RESOLUTION_LIMIT: f64 = 0.3;
/// Relative safety factor applied to the analytic Dirac mode bound.
const DIRAC_BOUND_SAFETY: f64 = 0.99;
/// Fallback stopping rule: this many consecutive empty modes...
const EMPIRICAL_EMPTY_MODES: usize = 3;
/// ...counted below this multiple of the running shift.
const EMPIRICAL_FACTOR: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpectrumError {
    #[error("requested count must be at least 1")]
    EmptyRequest,
    #[error(
        "grid too coarse: {quantity} = {product:.3} exceeds {limit} for eigenvalue {value:.6}; try N >= {suggested_n}"
    )]
    Resolution {
        quantity: &'static str,
        value: f64,
        product: f64,
        limit: f64,
        suggested_n: usize,
    },
    #[error("grid exhausted before {requested} eigenvalues were found (found {found}); try N >= {suggested_n}")]
    Exhausted {
        requested: usize,
        found: usize,
        suggested_n: usize,
    },
    #[error(transparent)]
    Radial(#[from] RadialError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    Dirac,
    LaplaceFunctions,
    Yamabe,
}

impl OperatorKind {
    pub fn name(self) -> &'static str {
        match self {
            OperatorKind::Dirac => "dirac",
            OperatorKind::LaplaceFunctions => "laplace",
            OperatorKind::Yamabe => "yamabe",
        }
    }
}

/// Angular mode an eigenvalue came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModeTag {
    Scalar { ell: usize },
    Dirac { k: usize, mu: f64 },
}

impl ModeTag {
    pub fn index(&self) -> usize {
        match *self {
            ModeTag::Scalar { ell } => ell,
            ModeTag::Dirac { k, .. } => k,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            ModeTag::Scalar { ell } => format!("ell={ell}"),
            ModeTag::Dirac { k, .. } => format!("k={k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub value: f64,
    pub multiplicity: u64,
    pub mode: ModeTag,
    /// Position of the eigenvalue within its radial problem (for the Dirac
    /// operator, among the nonnegative eigenvalues).
    pub radial_index: usize,
    /// Estimated discretization error of `value` itself, `(4/3) |lambda_h - lambda_{h/2}|`
    /// for a second-order scheme, when computed.
    pub err: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub operator: OperatorKind,
    pub n: usize,
    pub requested: usize,
    /// Sorted by `|value|` for the Dirac operator, by value otherwise.
    pub entries: Vec<SpectrumEntry>,
    /// Every eigenvalue below this (in `|value|` for the Dirac operator) is listed.
    pub truncation_floor: f64,
    /// False when the fallback stopping rule ended the mode walk.
    pub certified: bool,
    pub resolution: usize,
    pub h: f64,
}

/// Cluster of numerically equal eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct DistinctValue {
    pub value: f64,
    pub multiplicity: u64,
    pub spread: f64,
}

impl Spectrum {
    /// Eigenvalues repeated according to multiplicity, in listing order.
    pub fn values_with_multiplicity(&self) -> Vec<f64> {
        self.entries
            .iter()
            .flat_map(|e| std::iter::repeat_n(e.value, e.multiplicity as usize))
            .collect()
    }

    /// The `k`-th eigenvalue (1-based) counted with multiplicity.
    pub fn kth(&self, k: usize) -> Option<f64> {
        let mut seen = 0u64;
        for e in &self.entries {
            seen += e.multiplicity;
            if seen >= k as u64 {
                return Some(e.value);
            }
        }
        None
    }

    pub fn total_multiplicity(&self) -> u64 {
        self.entries.iter().map(|e| e.multiplicity).sum()
    }

    /// Smallest `|value|`.
    pub fn lambda1(&self) -> Option<f64> {
        self.entries.first().map(|e| e.value.abs())
    }

    /// Error estimate of the first listed entry.
    pub fn lambda1_err(&self) -> Option<f64> {
        self.entries.first().and_then(|e| e.err)
    }

    /// Groups consecutive entries whose values agree to `rel_tol`
    /// (relative to `max(1, |value|)`).
    pub fn distinct(&self, rel_tol: f64) -> Vec<DistinctValue> {
        let mut out: Vec<(f64, f64, u64, f64, f64)> = Vec::new();
        for e in &self.entries {
            if let Some(last) = out.last_mut() {
                if (e.value - last.3).abs() <= rel_tol * e.value.abs().max(1.0) {
                    last.0 += e.value * e.multiplicity as f64;
                    last.2 += e.multiplicity;
                    last.3 = e.value;
                    last.4 = last.4.max((e.value - last.1).abs());
                    continue;
                }
            }
            out.push((e.value * e.multiplicity as f64, e.value, e.multiplicity, e.value, 0.0));
        }
        out.into_iter()
            .map(|(sum, _, mult, _, spread)| DistinctValue {
                value: sum / mult as f64,
                multiplicity: mult,
                spread,
            })
            .collect()
    }

    /// Header `value,multiplicity,operator,mode,err`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("value,multiplicity,operator,mode,err\n");
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                fmt_f64(e.value),
                e.multiplicity,
                self.operator.name(),
                e.mode.label(),
                fmt_opt(e.err)
            );
        }
        out
    }

    /// Metadata block for the JSON artifact.
    pub fn metadata(&self, recipe: &ProfileRecipe) -> SpectrumMetadata {
        let (r, l) = match recipe {
            ProfileRecipe::Round { radius, .. } => (Some(*radius), None),
            ProfileRecipe::Pinocchio(spec) => (Some(spec.r), Some(spec.neck_length)),
        };
        SpectrumMetadata {
            operator: self.operator,
            n: self.n,
            r,
            l,
            resolution: self.resolution,
            requested: self.requested,
            truncation_floor: self.truncation_floor,
            certified: self.certified,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMetadata {
    pub operator: OperatorKind,
    pub n: usize,
    /// Neck radius, or the radius of a round sphere.
    pub r: Option<f64>,
    #[serde(rename = "L")]
    pub l: Option<f64>,
    #[serde(rename = "N")]
    pub resolution: usize,
    pub requested: usize,
    pub truncation_floor: f64,
    pub certified: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumOptions {
    pub tol: f64,
    /// Reject results whose largest eigenvalue is under-resolved.
    pub check_resolution: bool,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            check_resolution: true,
        }
    }
}

/// One angular mode: its radial pencil and how many copies it has.
struct ModeProblem {
    tag: ModeTag,
    multiplicity: u64,
    pencil: SymmetricPencil,
    /// Negative eigenvalues of the Dirac chain (mirror images of the positive ones).
    negative: usize,
}

impl ModeProblem {
    fn new(op: RadialOperator, tag: ModeTag, dirac: bool) -> Result<Self, SpectrumError> {
        let multiplicity = op.multiplicity;
        let pencil = SymmetricPencil::new(op.a, op.b)?;
        let negative = if dirac { pencil.count_below(0.0) } else { 0 };
        Ok(Self {
            tag,
            multiplicity,
            pencil,
            negative,
        })
    }

    /// Radial eigenvalues below `sigma` (nonnegative ones for the Dirac chain).
    fn count(&self, sigma: f64) -> usize {
        self.pencil.count_below(sigma).saturating_sub(self.negative)
    }

    /// Contribution to the total count with multiplicity; Dirac values come in `+-` pairs.
    fn weight(&self, dirac: bool) -> u64 {
        if dirac {
            2 * self.multiplicity
        } else {
            self.multiplicity
        }
    }

    fn solve(&self, count: usize, tol: f64) -> Result<Vec<f64>, EigenError> {
        let start = self.negative;
        Ok(self
            .pencil
            .solve(Selection::Indices(start..start + count), tol, false)?
            .values)
    }
}

/// Lazily assembled modes `0, 1, 2, ...` plus a rule for when to stop.
struct ModeFamily<'a> {
    problems: Vec<ModeProblem>,
    build: Box<dyn Fn(usize) -> Result<ModeProblem, SpectrumError> + Sync + 'a>,
    /// Certified lower bound on every eigenvalue (in `|.|` for Dirac) of mode `m`
    /// and all later modes, if one is available.
    floor: Box<dyn Fn(usize) -> Option<f64> + Sync + 'a>,
    dirac: bool,
}

/// Outcome of one walk over the modes at a fixed shift.
struct Census {
    /// Per visited mode, radial eigenvalues below the shift.
    counts: Vec<usize>,
    total: u64,
    certified: bool,
}

impl<'a> ModeFamily<'a> {
    fn mode(&mut self, m: usize) -> Result<&ModeProblem, SpectrumError> {
        while self.problems.len() <= m {
            let next = (self.build)(self.problems.len())?;
            self.problems.push(next);
        }
        Ok(&self.problems[m])
    }

    fn census(&mut self, sigma: f64) -> Result<Census, SpectrumError> {
        let mut counts = Vec::new();
        let mut total = 0u64;
        let mut empty_run = 0;
        let dirac = self.dirac;
        for m in 0.. {
            if let Some(bound) = (self.floor)(m) {
                if bound >= sigma {
                    return Ok(Census {
                        counts,
                        total,
                        certified: true,
                    });
                }
            }
            let problem = self.mode(m)?;
            let c = problem.count(sigma);
            let weight = problem.weight(dirac);
            if dirac {
                // fallback rule when the analytic bound is unavailable
                if problem.count(EMPIRICAL_FACTOR * sigma) == 0 {
                    empty_run += 1;
                } else {
                    empty_run = 0;
                }
                counts.push(c);
                total += weight * c as u64;
                if empty_run >= EMPIRICAL_EMPTY_MODES {
                    return Ok(Census {
                        counts,
                        total,
                        certified: false,
                    });
                }
            } else {
                if c == 0 {
                    // mode minima are nondecreasing, so no later mode contributes
                    return Ok(Census {
                        counts,
                        total,
                        certified: true,
                    });
                }
                counts.push(c);
                total += weight * c as u64;
            }
        }
        unreachable!()
    }
}

fn suggested_resolution(current: usize, product: f64, limit: f64, power: f64) -> usize {
    let factor = (product / limit).powf(1.0 / power).max(1.0) * 1.25;
    (current as f64 * factor).ceil() as usize
}

/// Shared two-pass driver; returns entries sorted by value and the final shift.
fn collect(
    family: &mut ModeFamily<'_>,
    k: usize,
    tol: f64,
    resolution: usize,
) -> Result<(Vec<SpectrumEntry>, f64, bool), SpectrumError> {
    if k == 0 {
        return Err(SpectrumError::EmptyRequest);
    }
    let dirac = family.dirac;
    let mode0 = family.mode(0)?;
    let (lo0, hi0) = mode0.pencil.tridiagonal().gershgorin();
    let base = if dirac { 0.0 } else { lo0 };
    let span = (hi0 - lo0).abs().max(1.0);
    // grow the shift until the census reaches k
    let mut step = span * 1e-6;
    let mut lower = base;
    let mut upper;
    let mut exhausted_at = None;
    loop {
        upper = base + step;
        let census = family.census(upper)?;
        if census.total >= k as u64 {
            break;
        }
        if step > 4.0 * span {
            exhausted_at = Some(census.total);
            break;
        }
        lower = upper;
        step *= 2.0;
    }
    if let Some(found) = exhausted_at {
        return Err(SpectrumError::Exhausted {
            requested: k,
            found: found as usize,
            suggested_n: resolution * 2,
        });
    }
    // tighten the bracket so only a few extra eigenvalues get computed
    for _ in 0..60 {
        if upper - lower <= 1e-3 * upper.abs().max(1e-12) {
            break;
        }
        let mid = 0.5 * (lower + upper);
        if family.census(mid)?.total >= k as u64 {
            upper = mid;
        } else {
            lower = mid;
        }
    }
    let census = family.census(upper)?;
    let solved: Vec<Result<Vec<SpectrumEntry>, EigenError>> = family.problems[..census.counts.len()]
        .par_iter()
        .zip(census.counts.par_iter())
        .map(|(problem, &count)| {
            let values = problem.solve(count, tol)?;
            Ok(values
                .into_iter()
                .enumerate()
                .map(|(radial_index, value)| SpectrumEntry {
                    value,
                    multiplicity: problem.multiplicity,
                    mode: problem.tag,
                    radial_index,
                    err: None,
                })
                .collect())
        })
        .collect();
    let mut entries = Vec::new();
    for s in solved {
        entries.extend(s?);
    }
    entries.sort_by(|a, b| {
        a.value
            .total_cmp(&b.value)
            .then(a.mode.index().cmp(&b.mode.index()))
            .then(a.radial_index.cmp(&b.radial_index))
    });
    Ok((entries, upper, census.certified))
}

fn scalar_spectrum(
    p: &ProfileGrid,
    k: usize,
    operator: OperatorKind,
    c: Option<&CurvatureField>,
    opts: &SpectrumOptions,
) -> Result<Spectrum, SpectrumError> {
    let n = p.n;
    let build = move |ell: usize| -> Result<ModeProblem, SpectrumError> {
        let mode = LaplaceMode::new(n, ell);
        let op = match c {
            Some(c) => assemble_yamabe_radial(p, c, &mode)?,
            None => assemble_laplace_radial(p, &mode)?,
        };
        ModeProblem::new(op, ModeTag::Scalar { ell }, false)
    };
    let mut family = ModeFamily {
        problems: Vec::new(),
        build: Box::new(build),
        floor: Box::new(|_| None),
        dirac: false,
    };
    if operator == OperatorKind::Yamabe && n < 3 {
        return Err(RadialError::YamabeDimension(n).into());
    }
    let (entries, floor, certified) = collect(&mut family, k, opts.tol, p.resolution())?;
    let h = p.max_spacing();
    let spectrum = Spectrum {
        operator,
        n,
        requested: k,
        entries,
        truncation_floor: floor,
        certified,
        resolution: p.resolution(),
        h,
    };
    if opts.check_resolution {
        if let Some(top) = spectrum.kth(k) {
            let scaled = match c {
                Some(c) => (top - c.s_min).max(0.0) / yamabe_coefficient(n),
                None => top,
            };
            let product = scaled * h * h;
            if product > SCALAR_RESOLUTION_LIMIT {
                return Err(SpectrumError::Resolution {
                    quantity: "lambda h^2",
                    value: top,
                    product,
                    limit: SCALAR_RESOLUTION_LIMIT,
                    suggested_n: suggested_resolution(p.resolution(), product, SCALAR_RESOLUTION_LIMIT, 2.0),
                });
            }
        }
    }
    Ok(spectrum)
}

/// Lowest `k` eigenvalues (with multiplicity) of the Laplacian on functions.
pub fn laplace_spectrum(p: &ProfileGrid, k: usize) -> Result<Spectrum, SpectrumError> {
    laplace_spectrum_with(p, k, &SpectrumOptions::default())
}

pub fn laplace_spectrum_with(p: &ProfileGrid, k: usize, opts: &SpectrumOptions) -> Result<Spectrum, SpectrumError> {
    scalar_spectrum(p, k, OperatorKind::LaplaceFunctions, None, opts)
}

/// Lowest `k` eigenvalues (with multiplicity) of the Yamabe operator.
pub fn yamabe_spectrum(p: &ProfileGrid, c: &CurvatureField, k: usize) -> Result<Spectrum, SpectrumError> {
    yamabe_spectrum_with(p, c, k, &SpectrumOptions::default())
}

pub fn yamabe_spectrum_with(
    p: &ProfileGrid,
    c: &CurvatureField,
    k: usize,
    opts: &SpectrumOptions,
) -> Result<Spectrum, SpectrumError> {
    scalar_spectrum(p, k, OperatorKind::Yamabe, Some(c), opts)
}

/// Lower bound `min_t (mu^2 - mu |f'|) / f^2` for `lambda^2` over the radial
/// Dirac problem with parameter `mu`, from the quadratic form of `A^* A`.
/// Sampled at nodes and midpoints; `None` when not positive.
pub fn dirac_mode_floor(p: &ProfileGrid, mu: f64) -> Option<f64> {
    let mut least = f64::INFINITY;
    let last = p.node_count() - 1;
    let mut visit = |t: f64| {
        let [f, f1, _] = p.eval(t);
        if f > 0.0 {
            least = least.min((mu * mu - mu * f1.abs()) / (f * f));
        }
    };
    for i in 0..last {
        if i > 0 {
            visit(p.t[i]);
        }
        visit(p.midpoint(i));
    }
    (least > 0.0).then(|| least.sqrt())
}

/// Lowest `k` eigenvalues of the Dirac operator in `|value|`, with multiplicity.
/// Both signs are listed; entries are sorted by `|value|`, negative first on ties.
pub fn dirac_spectrum(p: &ProfileGrid, k: usize) -> Result<Spectrum, SpectrumError> {
    dirac_spectrum_with(p, k, &SpectrumOptions::default())
}

pub fn dirac_spectrum_with(p: &ProfileGrid, k: usize, opts: &SpectrumOptions) -> Result<Spectrum, SpectrumError> {
    let n = p.n;
    let build = move |m: usize| -> Result<ModeProblem, SpectrumError> {
        let mode = DiracMode::new(n, m);
        let op = assemble_dirac_radial(p, &mode)?;
        ModeProblem::new(op, ModeTag::Dirac { k: m, mu: mode.mu }, true)
    };
    let floor = move |m: usize| {
        let mu = DiracMode::new(n, m).mu;
        dirac_mode_floor(p, mu).map(|b| (DIRAC_BOUND_SAFETY * b * b).sqrt())
    };
    let mut family = ModeFamily {
        problems: Vec::new(),
        build: Box::new(build),
        floor: Box::new(floor),
        dirac: true,
    };
    let (positive, sigma, certified) = collect(&mut family, k, opts.tol, p.resolution())?;
    let mut entries = Vec::with_capacity(2 * positive.len());
    for e in positive {
        if e.value != 0.0 {
            entries.push(SpectrumEntry {
                value: -e.value,
                ..e.clone()
            });
        }
        entries.push(e);
    }
    entries.sort_by(|a, b| {
        a.value
            .abs()
            .total_cmp(&b.value.abs())
            .then(a.value.total_cmp(&b.value))
            .then(a.mode.index().cmp(&b.mode.index()))
            .then(a.radial_index.cmp(&b.radial_index))
    });
    let truncation_floor = if certified {
        sigma
    } else {
        // only the part below the last analytic bound is guaranteed
        let visited = family.problems.len();
        floor(visited).unwrap_or(0.0).min(sigma)
    };
    let h = p.max_spacing();
    let spectrum = Spectrum {
        operator: OperatorKind::Dirac,
        n,
        requested: k,
        entries,
        truncation_floor,
        certified,
        resolution: p.resolution(),
        h,
    };
    if opts.check_resolution {
        if let Some(top) = spectrum.kth(k) {
            let product = top.abs() * h;
            if product > DIRAC_RESOLUTION_LIMIT {
                return Err(SpectrumError::Resolution {
                    quantity: "|lambda| h",
                    value: top,
                    product,
                    limit: DIRAC_RESOLUTION_LIMIT,
                    suggested_n: suggested_resolution(p.resolution(), product, DIRAC_RESOLUTION_LIMIT, 1.0),
                });
            }
        }
    }
    Ok(spectrum)
}

/// Radial problem identified by operator, mode index and radial index.
fn radial_value(
    p: &ProfileGrid,
    kind: OperatorKind,
    mode: usize,
    radial_index: usize,
    tol: f64,
) -> Result<f64, SpectrumError> {
    let n = p.n;
    let problem = match kind {
        OperatorKind::LaplaceFunctions => ModeProblem::new(
            assemble_laplace_radial(p, &LaplaceMode::new(n, mode))?,
            ModeTag::Scalar { ell: mode },
            false,
        )?,
        OperatorKind::Yamabe => {
            let c = scalar_curvature_field(p)?;
            ModeProblem::new(
                assemble_yamabe_radial(p, &c, &LaplaceMode::new(n, mode))?,
                ModeTag::Scalar { ell: mode },
                false,
            )?
        }
        OperatorKind::Dirac => {
            let dm = DiracMode::new(n, mode);
            ModeProblem::new(
                assemble_dirac_radial(p, &dm)?,
                ModeTag::Dirac { k: mode, mu: dm.mu },
                true,
            )?
        }
    };
    let start = problem.negative + radial_index;
    let values = problem
        .pencil
        .solve(Selection::Indices(start..start + 1), tol, false)?
        .values;
    Ok(values[0])
}

/// Richardson data from solves at `N`, `2N` and `4N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceEstimate {
    pub values: [f64; 3],
    /// `|lambda_h - lambda_{h/2}| / 3`.
    pub err: f64,
    /// `log2(|lambda_h - lambda_{h/2}| / |lambda_{h/2} - lambda_{h/4}|)`;
    /// `None` when the differences vanish.
    pub order: Option<f64>,
}

pub fn convergence_estimate(
    p: &ProfileGrid,
    kind: OperatorKind,
    mode: usize,
    radial_index: usize,
) -> Result<ConvergenceEstimate, SpectrumError> {
    let n0 = p.resolution();
    let grids = [p.clone(), p.with_resolution(2 * n0)?, p.with_resolution(4 * n0)?];
    let tol = 1e-13;
    let mut values = [0.0; 3];
    for (v, g) in values.iter_mut().zip(&grids) {
        *v = radial_value(g, kind, mode, radial_index, tol)?;
    }
    let d1 = (values[0] - values[1]).abs();
    let d2 = (values[1] - values[2]).abs();
    let scale = values[2].abs().max(1.0);
    let order = (d1 > 1e-11 * scale && d2 > 1e-11 * scale).then(|| (d1 / d2).log2());
    let err = if d1 <= 1e-11 * scale { 0.0 } else { d1 / 3.0 };
    Ok(ConvergenceEstimate { values, err, order })
}

/// Fills `err` for every entry by re-solving its radial problem at `2N`.
/// The refined value's own error would be a quarter of this.
pub fn attach_errors(spectrum: &mut Spectrum, p: &ProfileGrid) -> Result<(), SpectrumError> {
    let fine = p.refined()?;
    let kind = spectrum.operator;
    let mut keys: Vec<(usize, usize)> = spectrum
        .entries
        .iter()
        .filter(|e| e.value >= 0.0 || kind != OperatorKind::Dirac)
        .map(|e| (e.mode.index(), e.radial_index))
        .collect();
    keys.sort_unstable();
    keys.dedup();
    let curvature = match kind {
        OperatorKind::Yamabe => {
            Some(scalar_curvature_field(&fine)?)
        }
        _ => None,
    };
    // group by mode so each refined pencil is built once
    let mut modes: Vec<usize> = keys.iter().map(|k| k.0).collect();
    modes.dedup();
    let refined: Vec<Result<Vec<(usize, usize, f64)>, SpectrumError>> = modes
        .par_iter()
        .map(|&m| {
            let highest = keys.iter().filter(|k| k.0 == m).map(|k| k.1).max().unwrap_or(0);
            let problem = match kind {
                OperatorKind::LaplaceFunctions => ModeProblem::new(
                    assemble_laplace_radial(&fine, &LaplaceMode::new(p.n, m))?,
                    ModeTag::Scalar { ell: m },
                    false,
                )?,
                OperatorKind::Yamabe => ModeProblem::new(
                    assemble_yamabe_radial(&fine, curvature.as_ref().unwrap(), &LaplaceMode::new(p.n, m))?,
                    ModeTag::Scalar { ell: m },
                    false,
                )?,
                OperatorKind::Dirac => {
                    let dm = DiracMode::new(p.n, m);
                    ModeProblem::new(
                        assemble_dirac_radial(&fine, &dm)?,
                        ModeTag::Dirac { k: m, mu: dm.mu },
                        true,
                    )?
                }
            };
            let values = problem.solve(highest + 1, DEFAULT_TOL.min(1e-12))?;
            Ok(values.into_iter().enumerate().map(|(i, v)| (m, i, v)).collect())
        })
        .collect();
    let mut table = Vec::new();
    for r in refined {
        table.extend(r?);
    }
    for e in &mut spectrum.entries {
        let key = (e.mode.index(), e.radial_index);
        if let Some(&(_, _, fine_value)) = table.iter().find(|(m, i, _)| (*m, *i) == key) {
            let coarse = e.value.abs();
            e.err = Some(4.0 * (coarse - fine_value).abs() / 3.0);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::{round_dirac_multiplicity, round_laplace_multiplicity};
    use crate::profile::{build_pinocchio_profile, build_round_profile, ProfileSpec};

    #[test]
    fn round_two_sphere_laplace() {
        let p = build_round_profile(2, 1.0, 200).unwrap();
        let s = laplace_spectrum(&p, 4).unwrap();
        let v = s.values_with_multiplicity();
        assert!(v[0].abs() < 1e-9);
        for x in &v[1..4] {
            assert!((x - 2.0).abs() < 1e-3, "{v:?}");
        }
        assert!(s.certified);
    }

    #[test]
    fn round_three_sphere_laplace_table() {
        let p = build_round_profile(3, 1.0, 100).unwrap();
        let s = laplace_spectrum(&p, 1 + 4 + 9 + 16 + 25).unwrap();
        let d = s.distinct(1e-3);
        for (ell, dv) in d.iter().take(5).enumerate() {
            let exact = (ell * (ell + 2)) as f64;
            assert!((dv.value - exact).abs() <= 1e-3 * exact.max(1.0), "{dv:?}");
            assert_eq!(dv.multiplicity, round_laplace_multiplicity(3, ell));
        }
    }

    #[test]
    fn lowest_laplace_is_simple_zero() {
        let p = build_pinocchio_profile(&ProfileSpec::new(3, 0.2, 2.0)).unwrap();
        let s = laplace_spectrum(&p, 1).unwrap();
        assert!(s.entries[0].value.abs() < 1e-9);
        assert_eq!(s.entries[0].multiplicity, 1);
        assert!(s.entries.get(1).map_or(true, |e| e.value > 1e-6));
    }

    #[test]
    fn round_three_sphere_dirac() {
        let p = build_round_profile(3, 1.0, 100).unwrap();
        let s = dirac_spectrum(&p, 4).unwrap();
        let v = s.values_with_multiplicity();
        assert_eq!(&v.iter().map(|x| x.signum()).collect::<Vec<_>>()[..4], &[-1.0, -1.0, 1.0, 1.0]);
        for x in &v[..4] {
            assert!((x.abs() - 1.5).abs() < 1e-3);
        }
        assert!(s.certified);
    }

    #[test]
    fn round_dirac_tables() {
        for n in [2usize, 3, 4] {
            let p = build_round_profile(n, 1.0, 100).unwrap();
            let want: u64 = (0..4).map(|k| 2 * round_dirac_multiplicity(n, k)).sum();
            let s = dirac_spectrum(&p, want as usize).unwrap();
            let positive = Spectrum {
                entries: s.entries.iter().filter(|e| e.value > 0.0).cloned().collect(),
                ..s.clone()
            };
            let d = positive.distinct(1e-3);
            for (k, dv) in d.iter().take(4).enumerate() {
                let exact = n as f64 / 2.0 + k as f64;
                assert!((dv.value - exact).abs() < 1e-3 * exact, "n={n} {dv:?}");
                assert_eq!(dv.multiplicity, round_dirac_multiplicity(n, k), "n={n} k={k}");
            }
        }
    }

    #[test]
    fn dirac_spectrum_is_symmetric() {
        let p = build_pinocchio_profile(&ProfileSpec::new(3, 0.1, 5.0)).unwrap();
        let s = dirac_spectrum(&p, 10).unwrap();
        let pos: Vec<_> = s.entries.iter().filter(|e| e.value > 0.0).collect();
        let neg: Vec<_> = s.entries.iter().filter(|e| e.value < 0.0).collect();
        assert_eq!(pos.len(), neg.len());
        for (a, b) in pos.iter().zip(&neg) {
            assert_eq!(a.value, -b.value);
            assert_eq!(a.multiplicity, b.multiplicity);
        }
    }

    #[test]
    fn yamabe_round_three_sphere() {
        let p = build_round_profile(3, 1.0, 100).unwrap();
        let c = scalar_curvature_field(&p).unwrap();
        let s = yamabe_spectrum(&p, &c, 5).unwrap();
        let v = s.values_with_multiplicity();
        assert!((v[0] - 6.0).abs() < 1e-4);
        for x in &v[1..5] {
            assert!((x - 30.0).abs() < 1e-2, "{v:?}");
        }
    }

    #[test]
    fn coarse_grid_is_rejected() {
        let p = build_round_profile(3, 1.0, 16).unwrap();
        assert!(matches!(
            laplace_spectrum(&p, 2000),
            Err(SpectrumError::Resolution { .. }) | Err(SpectrumError::Exhausted { .. })
        ));
    }

    #[test]
    fn convergence_of_round_dirac_is_second_order() {
        let p = build_round_profile(3, 1.0, 32).unwrap();
        let est = convergence_estimate(&p, OperatorKind::Dirac, 0, 0).unwrap();
        let order = est.order.unwrap();
        assert!((1.8..=2.2).contains(&order), "{est:?}");
    }

    #[test]
    fn constant_mode_has_zero_error() {
        let p = build_round_profile(3, 1.0, 32).unwrap();
        let est = convergence_estimate(&p, OperatorKind::LaplaceFunctions, 0, 0).unwrap();
        assert_eq!(est.err, 0.0);
        assert!(est.order.is_none());
    }

    #[test]
    fn errors_attach_to_every_entry() {
        let p = build_round_profile(3, 1.0, 32).unwrap();
        let mut s = dirac_spectrum(&p, 10).unwrap();
        attach_errors(&mut s, &p).unwrap();
        assert!(s.entries.iter().all(|e| e.err.is_some()));
        let csv = s.to_csv();
        assert!(csv.starts_with("value,multiplicity,operator,mode,err\n"));
        assert_eq!(csv.lines().count(), s.entries.len() + 1);
    }
}
