//! Discretized commutative unitary dilation on
//! K = L²(ℝ₋,ℰ) ⊕ H ⊕ L²(ℝ₊,ℰ): the embedding ι, the representation ρ(t)
//! of ℝ^d, the dilation identity P_Hρ(t)ιh = e^{it·A}h and minimality
//! diagnostics.
//!
//! Everything runs in normalized coordinates t′ = T⁻¹t in which the chosen
//! cone direction is e₁ and σ₁ = I. A vector of K is sampled on the e₁ axis.
//! ρ(t) extends the boundary triple to a full-line trajectory (ũ, x, ỹ),
//! transports ũ with the input pencil and ỹ with the output pencil by
//! π(t′), re-splits at 0, and takes the state x(t) from the Duhamel formula
//! along the segment 0 → t′ fed with Λ(t′,0)ũ.

use serde::Serialize;
use thiserror::Error;

use crate::linalg::{c, expm, kernel_basis, lambda_max, lambda_min, op_norm, to_complex, CMat, CVec, RMat};
use crate::report::ConditionReport;
use crate::spectral::{apply_pi, lambda_at, lambda_op, padding_factor, GridSpec, SampledSignal, SpectralError};
use crate::system::{
    bump_with_jet, extend_trajectory_with, one_sided_jet, propagate_state_jump, propagate_state_with, BoundaryTriple, DuhamelIntegrator, Jet,
    LineTrajectory, SystemError, DEFAULT_POINTS,
};
use crate::vessel::{
    check_vr, normalize, normalizing_transform, pos_cone_margin, weakly_strict_report, Direction, NormalizedPencil, Vessel,
    VesselError,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DilationError {
    #[error("VR conditions fail: {0}")]
    NotVr(String),
    #[error("direction is not in the positivity cone (margin {margin:e})")]
    NotInCone { margin: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Vessel(#[from] VesselError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

pub type Result<T> = std::result::Result<T, DilationError>;

/// Residual thresholds used by the checks of this module.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DilationTolerances {
    pub vr: f64,
    /// Relative threshold of the kernel extractions in the minimality
    /// iteration.
    pub kernel: f64,
    pub identity: f64,
    pub isometry: f64,
    pub group_law: f64,
}

impl Default for DilationTolerances {
    fn default() -> Self {
        DilationTolerances { vr: 1e-10, kernel: 1e-8, identity: 5e-3, isometry: 1e-4, group_law: 1e-4 }
    }
}

/// An element (y_past, h, u_future) of the sampled space K.
#[derive(Debug, Clone, PartialEq)]
pub struct DilationVector {
    pub triple: BoundaryTriple,
}

/// ∫₀^∞ g from samples g(0), g(Δ), … by the trapezoid rule with the
/// Euler–Maclaurin endpoint terms Δ²/12·g′(0) − Δ⁴/720·g‴(0).
fn half_line_integral(g: &[f64], step: f64) -> f64 {
    let plain = step * (g.iter().sum::<f64>() - 0.5 * g.first().copied().unwrap_or(0.0));
    if g.len() < 5 {
        return plain;
    }
    let d1 = (-25.0 * g[0] + 48.0 * g[1] - 36.0 * g[2] + 16.0 * g[3] - 3.0 * g[4]) / (12.0 * step);
    let d3 = (-5.0 * g[0] + 18.0 * g[1] - 24.0 * g[2] + 14.0 * g[3] - 3.0 * g[4]) / (2.0 * step.powi(3));
    plain + step * step / 12.0 * d1 - step.powi(4) / 720.0 * d3
}

impl DilationVector {
    pub fn new(triple: BoundaryTriple) -> Self {
        DilationVector { triple }
    }

    pub fn zeros(grid: GridSpec, m: usize, n: usize) -> Self {
        DilationVector { triple: BoundaryTriple::zeros(grid, m, n) }
    }

    pub fn grid(&self) -> GridSpec {
        self.triple.grid
    }

    pub fn state(&self) -> &CVec {
        &self.triple.h
    }

    /// ‖h‖² + ∫‖y‖² + ∫‖u‖² with endpoint-corrected half-line quadrature.
    pub fn norm_sq(&self) -> f64 {
        let step = self.grid().step();
        let past: Vec<f64> = self.triple.y_past.iter().rev().map(|v| v.norm_squared()).collect();
        let future: Vec<f64> = self.triple.u_future.iter().map(|v| v.norm_squared()).collect();
        self.triple.h.norm_squared() + half_line_integral(&past, step) + half_line_integral(&future, step)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().max(0.0).sqrt()
    }

    /// The plain rule: half weight on the samples at t = 0.
    pub fn plain_norm_sq(&self) -> f64 {
        self.triple.norm_sq()
    }

    pub fn sub(&self, other: &DilationVector) -> DilationVector {
        DilationVector { triple: self.triple.add(&other.triple.scaled(-1.0)) }
    }

    pub fn distance(&self, other: &DilationVector) -> f64 {
        self.sub(other).norm()
    }
}

/// ι(h) = (0, h, 0).
pub fn embed(h: &CVec, grid: GridSpec, dim_e: usize) -> DilationVector {
    let mut v = DilationVector::zeros(grid, dim_e, h.len());
    v.triple.h = h.clone();
    v
}

/// P_H.
pub fn project(v: &DilationVector) -> CVec {
    v.triple.h.clone()
}

/// The vessel in normalized coordinates with its input and output pencils.
#[derive(Debug, Clone)]
pub struct DilationConfig {
    pub vessel: Vessel,
    pub normalized: Vessel,
    pub pencil: NormalizedPencil,
    pub output_pencil: NormalizedPencil,
    /// Original times are t = T·t′.
    pub transform: RMat,
    pub inverse: RMat,
    pub grid: GridSpec,
    /// Cone direction mapped to e₁, with its margin λ_min(σ(ξ₀)).
    pub direction: Vec<f64>,
    pub margin: f64,
    pub tol: DilationTolerances,
    pub points: usize,
    /// Segment nodes per unit of ‖α(t′)‖/Δ.
    pub oversampling: f64,
    pub signals: SignalChoice,
    pub vr: ConditionReport,
}

/// Which full-line signals feed the transports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SignalChoice {
    /// For t in the closed cone (or its negative) only the future (past)
    /// half of ũ and ỹ can reach the points involved; that half is continued
    /// smoothly across 0 so no jump enters the transform.
    Causal,
    /// ũ and ỹ on the whole axis with the mean value at the jump.
    FullLine,
}

impl DilationConfig {
    pub fn new(v: &Vessel, direction: &[f64], grid: GridSpec) -> Result<Self> {
        Self::with_tolerances(v, direction, grid, DilationTolerances::default())
    }

    pub fn with_tolerances(v: &Vessel, direction: &[f64], grid: GridSpec, tol: DilationTolerances) -> Result<Self> {
        v.check_dimensions()?;
        if direction.len() != v.d() {
            return Err(DilationError::DimensionMismatch(format!(
                "direction has {} entries, expected {}",
                direction.len(),
                v.d()
            )));
        }
        let margin = pos_cone_margin(v, direction);
        if !(margin > 0.0) {
            return Err(DilationError::NotInCone { margin });
        }
        let vr = check_vr(v, &Direction::Vector(direction.to_vec()), tol.vr)?;
        if !vr.pass {
            let names: Vec<String> = vr.failures().iter().map(|e| e.name.clone()).collect();
            return Err(DilationError::NotVr(names.join(", ")));
        }
        let (normalized, pencil) = normalize(v, direction, tol.vr)?;
        let mut output_pencil = NormalizedPencil::output_of(&normalized);
        output_pencil.origin_direction = direction.to_vec();
        let transform = normalizing_transform(direction);
        let inverse = transform.clone().try_inverse().ok_or(VesselError::SingularTransform { det: 0.0 })?;
        Ok(DilationConfig {
            vessel: v.clone(),
            normalized,
            pencil,
            output_pencil,
            transform,
            inverse,
            grid,
            direction: direction.to_vec(),
            margin,
            tol,
            points: DEFAULT_POINTS,
            oversampling: 2.0,
            signals: SignalChoice::Causal,
            vr,
        })
    }

    /// Uses (1,…,1) when it lies in the cone, otherwise the first axis that
    /// does.
    pub fn with_default_direction(v: &Vessel, grid: GridSpec) -> Result<Self> {
        Self::new(v, &default_direction(v), grid)
    }

    pub fn d(&self) -> usize {
        self.vessel.d()
    }

    pub fn dim_e(&self) -> usize {
        self.normalized.dim_e()
    }

    pub fn dim_h(&self) -> usize {
        self.normalized.dim_h()
    }

    pub fn with_grid(&self, grid: GridSpec) -> Self {
        DilationConfig { grid, ..self.clone() }
    }

    /// t′ = T⁻¹t.
    pub fn to_normalized(&self, t: &[f64]) -> Vec<f64> {
        (0..t.len()).map(|i| (0..t.len()).map(|j| self.inverse[(i, j)] * t[j]).sum()).collect()
    }

    /// t = T·t′.
    pub fn to_original(&self, tn: &[f64]) -> Vec<f64> {
        (0..tn.len()).map(|i| (0..tn.len()).map(|j| self.transform[(i, j)] * tn[j]).sum()).collect()
    }

    pub fn embed(&self, h: &CVec) -> DilationVector {
        embed(h, self.grid, self.dim_e())
    }

    /// e^{it·A}h with t in original coordinates.
    pub fn semigroup(&self, t: &[f64], h: &CVec) -> CVec {
        expm(&(self.vessel.a_at(t) * c(0.0, 1.0))) * h
    }

    fn check_vector(&self, v: &DilationVector) -> Result<()> {
        if v.grid() != self.grid || v.triple.h.len() != self.dim_h() || v.triple.dim_e() != self.dim_e() {
            return Err(DilationError::DimensionMismatch("vector does not live on the configured space".into()));
        }
        Ok(())
    }
}

pub fn default_direction(v: &Vessel) -> Vec<f64> {
    let d = v.d();
    let ones = vec![1.0; d];
    if pos_cone_margin(v, &ones) > 0.0 {
        return ones;
    }
    for j in 0..d {
        let e = Direction::Axis(j).vector(d);
        if pos_cone_margin(v, &e) > 0.0 {
            return e;
        }
    }
    ones
}

/// Where t sits relative to the cone: σ(t) ⪰ 0 or ⪯ 0 (closure of
/// Pos ∪ −Pos) up to `tol`·‖σ(t)‖.
pub fn in_cone_closure(v: &Vessel, t: &[f64], tol: f64) -> bool {
    if v.dim_e() == 0 {
        return true;
    }
    let s = v.sigma_at(t);
    let scale = op_norm(&s).max(1.0);
    lambda_min(&s) >= -tol * scale || lambda_max(&s) <= tol * scale
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct RhoFlags {
    /// t along the axis is not a multiple of the grid step; the spectral
    /// path was used.
    pub off_grid_shift: bool,
    /// t is outside the closure of Pos ∪ −Pos, where isometry is not claimed.
    pub cone_warning: bool,
    /// Nodes on the segment 0 → t′ used for the state.
    pub segment_nodes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RhoOutput {
    pub vector: DilationVector,
    pub flags: RhoFlags,
}

fn extended(cfg: &DilationConfig, v: &DilationVector) -> Result<LineTrajectory> {
    Ok(extend_trajectory_with(&cfg.normalized, &v.triple, cfg.points)?)
}

/// ũ and ỹ on the full axis with the mean of the one-sided limits at the
/// jump node.
fn full_line_signals(traj: &LineTrajectory) -> (SampledSignal, SampledSignal) {
    let mut u = traj.u.clone();
    let mut y = traj.y.clone();
    if let Some(j) = &traj.jump {
        u.values[j.index] = (&u.values[j.index] + &j.u_left) * c(0.5, 0.0);
        y.values[j.index] = (&y.values[j.index] + &j.y_left) * c(0.5, 0.0);
    }
    (u, y)
}

/// Width of the Gaussian that continues a one-sided signal across 0.
const CONTINUATION_WIDTH: f64 = 1.0;

/// Signal equal to `side` (samples at nodes k₀.. when `future`, at nodes
/// 0..=k₀ otherwise) and continued across 0 by the bump with the same
/// value, first and second derivative.
fn continued(grid: GridSpec, side: &[CVec], future: bool) -> SampledSignal {
    let k0 = grid.zero_index();
    let step = grid.step();
    let m = side[0].len();
    let mut values = vec![CVec::zeros(m); grid.n];
    let jet = if future {
        values[k0..].clone_from_slice(side);
        one_sided_jet(&side[..6], step, 1.0)
    } else {
        values[..=k0].clone_from_slice(side);
        let rev: Vec<CVec> = side.iter().rev().take(6).cloned().collect();
        one_sided_jet(&rev, step, -1.0)
    };
    let range = if future { 0..k0 } else { k0 + 1..grid.n };
    for k in range {
        values[k] = bump_with_jet(&jet, CONTINUATION_WIDTH, grid.node(k));
    }
    SampledSignal { grid, domain: crate::spectral::Domain::Time, values }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ConeSide {
    Future,
    Past,
    Neither,
}

fn cone_side(cfg: &DilationConfig, tn: &[f64]) -> ConeSide {
    let s = cfg.normalized.sigma_at(tn);
    let scale = op_norm(&s).max(1.0);
    if cfg.signals == SignalChoice::FullLine || s.nrows() == 0 {
        ConeSide::Neither
    } else if lambda_min(&s) >= -1e-12 * scale {
        ConeSide::Future
    } else if lambda_max(&s) <= 1e-12 * scale {
        ConeSide::Past
    } else {
        ConeSide::Neither
    }
}

/// Signals whose transports by t′ agree with those of ũ and ỹ wherever ρ(t′)
/// reads them: (input for the new future part and the segment, output for
/// the new past part).
fn transport_sources(cfg: &DilationConfig, traj: &LineTrajectory, tn: &[f64]) -> (SampledSignal, SampledSignal, SampledSignal) {
    let (u_mean, y_mean) = full_line_signals(traj);
    let grid = traj.grid;
    let k0 = grid.zero_index();
    match cone_side(cfg, tn) {
        ConeSide::Future => {
            let u_plus = continued(grid, &traj.u.values[k0..], true);
            (u_plus.clone(), u_plus, y_mean)
        }
        ConeSide::Past => {
            let jump = traj.jump.as_ref();
            let mut u_minus = traj.u.values[..=k0].to_vec();
            let mut y_minus = traj.y.values[..=k0].to_vec();
            if let Some(j) = jump {
                u_minus[k0] = j.u_left.clone();
                y_minus[k0] = j.y_left.clone();
            }
            (u_mean, continued(grid, &u_minus, false), continued(grid, &y_minus, false))
        }
        ConeSide::Neither => (u_mean.clone(), u_mean, y_mean),
    }
}

/// Shift by `m` grid nodes along the axis: the exact one-dimensional ρ.
fn shifted(traj: &LineTrajectory, m: i64) -> DilationVector {
    let grid = traj.grid;
    let n = grid.n as i64;
    let k0 = grid.zero_index() as i64;
    let (u_mid, y_mid) = full_line_signals(traj);
    let dim_e = traj.u.dim();
    let pick = |s: &SampledSignal, k: i64| {
        if (0..n).contains(&k) {
            s.values[k as usize].clone()
        } else {
            CVec::zeros(dim_e)
        }
    };
    let y_past = (0..=k0).map(|j| pick(&y_mid, j + m)).collect();
    let u_future = (k0..n).map(|j| pick(&u_mid, j + m)).collect();
    let h = traj.x[(k0 + m).clamp(0, n - 1) as usize].clone();
    DilationVector { triple: BoundaryTriple { grid, y_past, h, u_future } }
}

/// ρ along the axis: the trajectory through (y, h, u) shifted by `t`
/// (normalized axis time) and re-split at 0.
pub fn rho_one_dim(cfg: &DilationConfig, t: f64, v: &DilationVector) -> Result<RhoOutput> {
    cfg.check_vector(v)?;
    let flags = RhoFlags::default();
    if t == 0.0 {
        return Ok(RhoOutput { vector: v.clone(), flags });
    }
    let step = cfg.grid.step();
    let m = (t / step).round();
    if (t / step - m).abs() <= 1e-9 {
        if m.abs() >= cfg.grid.n as f64 / 2.0 {
            return Err(DilationError::DimensionMismatch(format!("shift {t} leaves the grid")));
        }
        let traj = extended(cfg, v)?;
        return Ok(RhoOutput { vector: shifted(&traj, m as i64), flags });
    }
    let mut tn = vec![0.0; cfg.d()];
    tn[0] = t;
    let mut out = rho_normalized(cfg, &tn, v)?;
    out.flags.off_grid_shift = true;
    Ok(out)
}

/// π(t′)f on the axis grid, computed on a zero-padded copy so that nothing
/// wraps around.
fn transport_axis(pencil: &NormalizedPencil, tn: &[f64], f: &SampledSignal) -> Result<SampledSignal> {
    let grid = f.grid;
    let reach = grid.half_width + op_norm(&pencil.alpha_at(tn));
    let factor = padding_factor(reach, grid.half_width);
    let out = apply_pi(pencil, tn, &f.zero_padded(factor))?.signal;
    let offset = (factor - 1) * grid.n / 2;
    Ok(SampledSignal { grid, domain: f.domain, values: out.values[offset..offset + grid.n].to_vec() })
}

fn segment_nodes(cfg: &DilationConfig, tn: &[f64]) -> usize {
    let speed = op_norm(&cfg.pencil.alpha_at(tn)).max(1e-3);
    ((cfg.oversampling * speed / cfg.grid.step()).ceil() as usize).max(8)
}

/// x(t′) = e^{it′·A}(h − i∫₀¹e^{−iwt′·A}Φ*σ(t′)u†(wt′)dw) with u†(wt′) =
/// (Λ(t′,0)ũ)(w).
fn segment_state(cfg: &DilationConfig, u_full: &SampledSignal, h: &CVec, tn: &[f64]) -> Result<(CVec, usize)> {
    let nodes = segment_nodes(cfg, tn);
    let ws: Vec<f64> = (0..=nodes).map(|k| k as f64 / nodes as f64).collect();
    let inputs = lambda_at(&cfg.pencil, tn, &vec![0.0; tn.len()], u_full, &ws)?;
    let v = &cfg.normalized;
    let generator = v.a_at(tn);
    let input_map = v.phi.adjoint() * v.sigma_at(tn);
    let xs = DuhamelIntegrator::new(&generator, &input_map, 1.0 / nodes as f64, cfg.points).march(h, &inputs);
    Ok((xs[nodes].clone(), nodes))
}

fn is_axis(tn: &[f64]) -> bool {
    tn[1..].iter().all(|&x| x.abs() <= 1e-12 * tn[0].abs().max(1.0))
}

fn rho_normalized(cfg: &DilationConfig, tn: &[f64], v: &DilationVector) -> Result<RhoOutput> {
    let traj = extended(cfg, v)?;
    let (u_src, seg_src, y_src) = transport_sources(cfg, &traj, tn);
    let u_new = transport_axis(&cfg.pencil, tn, &u_src)?;
    let y_new = transport_axis(&cfg.output_pencil, tn, &y_src)?;
    let (h, nodes) = segment_state(cfg, &seg_src, &v.triple.h, tn)?;
    let k0 = cfg.grid.zero_index();
    let triple = BoundaryTriple {
        grid: cfg.grid,
        y_past: y_new.values[..=k0].to_vec(),
        h,
        u_future: u_new.values[k0..].to_vec(),
    };
    let t = cfg.to_original(tn);
    let flags = RhoFlags {
        off_grid_shift: false,
        cone_warning: !in_cone_closure(&cfg.vessel, &t, 1e-12),
        segment_nodes: nodes,
    };
    Ok(RhoOutput { vector: DilationVector { triple }, flags })
}

/// ρ(t) with t in original coordinates. Times on the normalized axis take
/// the exact one-dimensional path when grid-aligned.
pub fn rho(cfg: &DilationConfig, t: &[f64], v: &DilationVector) -> Result<RhoOutput> {
    cfg.check_vector(v)?;
    if t.len() != cfg.d() {
        return Err(DilationError::DimensionMismatch(format!("time has {} entries, expected {}", t.len(), cfg.d())));
    }
    let tn = cfg.to_normalized(t);
    let cone_warning = !in_cone_closure(&cfg.vessel, t, 1e-12);
    if is_axis(&tn) {
        let mut out = rho_one_dim(cfg, tn[0], v)?;
        out.flags.cone_warning = cone_warning;
        return Ok(out);
    }
    rho_normalized(cfg, &tn, v)
}

/// P_Hρ(t)v without transporting the signal parts.
pub fn rho_state(cfg: &DilationConfig, t: &[f64], v: &DilationVector) -> Result<CVec> {
    cfg.check_vector(v)?;
    let tn = cfg.to_normalized(t);
    let step = cfg.grid.step();
    if is_axis(&tn) && ((tn[0] / step) - (tn[0] / step).round()).abs() <= 1e-9 {
        return Ok(project(&rho_one_dim(cfg, tn[0], v)?.vector));
    }
    let traj = extended(cfg, v)?;
    let (_, seg_src, _) = transport_sources(cfg, &traj, &tn);
    Ok(segment_state(cfg, &seg_src, &v.triple.h, &tn)?.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeError {
    pub t: Vec<f64>,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DilationCheck {
    pub per_time: Vec<TimeError>,
    pub max_error: f64,
}

/// max over times and basis vectors of ‖P_Hρ(t)ιh − e^{it·A}h‖/‖h‖.
pub fn dilation_check(cfg: &DilationConfig, times: &[Vec<f64>], basis: &[CVec]) -> Result<DilationCheck> {
    let mut per_time = Vec::with_capacity(times.len());
    for t in times {
        let mut worst: f64 = 0.0;
        for h in basis {
            let got = rho_state(cfg, t, &cfg.embed(h))?;
            let want = cfg.semigroup(t, h);
            worst = worst.max((got - want).norm() / h.norm().max(f64::MIN_POSITIVE));
        }
        per_time.push(TimeError { t: t.clone(), error: worst });
    }
    let max_error = per_time.iter().map(|e| e.error).fold(0.0, f64::max);
    Ok(DilationCheck { per_time, max_error })
}

pub fn standard_basis(n: usize) -> Vec<CVec> {
    (0..n)
        .map(|i| {
            let mut e = CVec::zeros(n);
            e[i] = c(1.0, 0.0);
            e
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinementRow {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
    pub error: f64,
}

/// Dilation-identity errors over a sequence of grids; `ratios[i]` is
/// e(grid i)/e(grid i+1).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinementTable {
    pub rows: Vec<RefinementRow>,
    pub ratios: Vec<f64>,
}

/// Errors at or below this are rounding noise; their ratios carry no order.
pub const ROUNDOFF_FLOOR: f64 = 1e-10;

impl RefinementTable {
    pub fn min_ratio(&self) -> f64 {
        self.ratios.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Every refinement step either divides the error by at least `ratio`
    /// or starts from an error already at the rounding floor.
    pub fn refines_by(&self, ratio: f64) -> bool {
        self.rows.windows(2).all(|w| w[0].error <= ROUNDOFF_FLOOR || w[0].error / w[1].error >= ratio)
    }
}

pub fn dilation_refinement(
    cfg: &DilationConfig,
    grids: &[GridSpec],
    times: &[Vec<f64>],
    basis: &[CVec],
) -> Result<RefinementTable> {
    let mut rows = Vec::with_capacity(grids.len());
    for g in grids {
        let e = dilation_check(&cfg.with_grid(*g), times, basis)?.max_error;
        rows.push(RefinementRow { n: g.n, half_width: g.half_width, error: e });
    }
    let ratios = rows.windows(2).map(|w| w[0].error / w[1].error).collect();
    Ok(RefinementTable { rows, ratios })
}

/// A smooth vector of K₀: y is a bump with the given jet on t ≤ 0 and u the
/// bump whose jet satisfies the matching conditions for h.
pub fn smooth_vector(cfg: &DilationConfig, h: &CVec, past: &Jet, width: f64) -> DilationVector {
    DilationVector { triple: crate::system::matched_triple(&cfg.normalized, cfg.grid, h, past, width) }
}

/// |‖ρ(t)v‖ − ‖v‖| / ‖v‖.
pub fn isometry_residual(cfg: &DilationConfig, t: &[f64], v: &DilationVector) -> Result<f64> {
    let out = rho(cfg, t, v)?.vector;
    Ok((out.norm() - v.norm()).abs() / v.norm().max(f64::MIN_POSITIVE))
}

/// ‖ρ(t)ρ(s)v − ρ(t+s)v‖ / ‖v‖.
pub fn group_law_residual(cfg: &DilationConfig, t: &[f64], s: &[f64], v: &DilationVector) -> Result<f64> {
    let ts: Vec<f64> = t.iter().zip(s).map(|(a, b)| a + b).collect();
    let both = rho(cfg, t, &rho(cfg, s, v)?.vector)?.vector;
    let direct = rho(cfg, &ts, v)?.vector;
    Ok(both.distance(&direct) / v.norm().max(f64::MIN_POSITIVE))
}

/// ‖ρ(t)ρ(s)v − ρ(s)ρ(t)v‖ / ‖v‖.
pub fn commutativity_residual(cfg: &DilationConfig, t: &[f64], s: &[f64], v: &DilationVector) -> Result<f64> {
    let ts = rho(cfg, t, &rho(cfg, s, v)?.vector)?.vector;
    let st = rho(cfg, s, &rho(cfg, t, v)?.vector)?.vector;
    Ok(ts.distance(&st) / v.norm().max(f64::MIN_POSITIVE))
}

/// The state x(ξs + η) along a line (original coordinates) through the
/// point η: the input is Λ(ξ′,η′)ũ sampled on `line_grid`, the base state
/// x(η) = P_Hρ(η)v, and x follows from the Duhamel formula. The returned
/// trajectory carries the normalized direction and offset.
pub fn state_on_lines(
    cfg: &DilationConfig,
    v: &DilationVector,
    xi: &[f64],
    eta: &[f64],
    line_grid: GridSpec,
) -> Result<LineTrajectory> {
    cfg.check_vector(v)?;
    let d = cfg.d();
    if xi.len() != d || eta.len() != d {
        return Err(DilationError::DimensionMismatch(format!("line data must have {d} coordinates")));
    }
    let xn = cfg.to_normalized(xi);
    let en = cfg.to_normalized(eta);
    let traj = extended(cfg, v)?;
    let base = if en.iter().all(|&x| x == 0.0) {
        v.triple.h.clone()
    } else {
        rho_state(cfg, eta, v)?
    };
    let back: Vec<f64> = xn.iter().map(|x| -x).collect();
    let right = half_line_source(cfg, &traj, &xn, &en);
    let left = half_line_source(cfg, &traj, &back, &en);
    let u_right = lambda_op(&cfg.pencil, &xn, &en, &right, &line_grid)?.signal;
    if left == right {
        return Ok(propagate_state_with(&cfg.normalized, &base, &u_right, &xn, &en, cfg.points)?);
    }
    let u_left = lambda_op(&cfg.pencil, &xn, &en, &left, &line_grid)?.signal;
    let mut u_line = u_right;
    let k0 = line_grid.zero_index();
    u_line.values[..k0].clone_from_slice(&u_left.values[..k0]);
    let left_limit = u_left.values[k0].clone();
    Ok(propagate_state_jump(&cfg.normalized, &base, &u_line, &left_limit, &xn, &en, cfg.points)?)
}

/// Input source for the half-line η′ + s·dir, s ≥ 0: the causal
/// continuation when the whole half-line lies in one closed cone.
fn half_line_source(cfg: &DilationConfig, traj: &LineTrajectory, dir: &[f64], en: &[f64]) -> SampledSignal {
    let along = cone_side(cfg, dir);
    let start = if en.iter().all(|&x| x == 0.0) { along } else { cone_side(cfg, en) };
    if along == start && along != ConeSide::Neither {
        transport_sources(cfg, traj, dir).1
    } else {
        full_line_signals(traj).0
    }
}

/// Largest subspace of span(W) invariant under every α_j and β_j, by the
/// iteration V₀ = W, V_{k+1} = {v ∈ V_k : α_jv, β_jv ∈ V_k}.
#[derive(Debug, Clone)]
pub struct InvariantSubspace {
    /// Orthonormal columns.
    pub basis: CMat,
    pub iterations: usize,
    /// max_j ‖(I − QQ*)α_jQ‖, ‖(I − QQ*)β_jQ‖ on the result.
    pub invariance_residual: f64,
    /// max over sampled s of ‖(I − QQ*)(sα_j + β_j)Q‖.
    pub pencil_residual: f64,
}

fn leakage(q: &CMat, ops: &[&CMat]) -> f64 {
    let m = q.nrows();
    let proj = crate::linalg::identity(m) - q * q.adjoint();
    ops.iter().map(|a| op_norm(&(&proj * *a * q))).fold(0.0, f64::max)
}

pub fn largest_invariant_subspace(pencil: &NormalizedPencil, w: &CMat, tol: f64) -> InvariantSubspace {
    let m = pencil.dim_e();
    let ops: Vec<&CMat> = pencil.alpha.iter().chain(pencil.beta.iter()).collect();
    let scale = ops.iter().map(|a| op_norm(a)).fold(1.0, f64::max);
    let mut q = w.clone();
    let mut iterations = 0;
    while q.ncols() > 0 {
        iterations += 1;
        let proj = crate::linalg::identity(m) - &q * q.adjoint();
        let r = q.ncols();
        let mut stacked = CMat::zeros(ops.len() * m, r);
        for (i, a) in ops.iter().enumerate() {
            stacked.view_mut((i * m, 0), (m, r)).copy_from(&(&proj * *a * &q));
        }
        let k = kernel_basis(&stacked, tol, scale);
        if k.ncols() == r {
            break;
        }
        q = &q * k;
        if iterations > m {
            break;
        }
    }
    let samples = [-2.0, -0.5, 0.0, 0.7, 3.0];
    let pencil_residual = if q.ncols() == 0 {
        0.0
    } else {
        samples
            .iter()
            .flat_map(|&s| (0..pencil.d()).map(move |j| (s, j)))
            .map(|(s, j)| leakage(&q, &[&pencil.at(s, &Direction::Axis(j).vector(pencil.d()))]))
            .fold(0.0, f64::max)
    };
    let invariance_residual = if q.ncols() == 0 { 0.0 } else { leakage(&q, &ops) };
    InvariantSubspace { basis: q, iterations, invariance_residual, pencil_residual }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Minimality {
    /// Weakly strict vessel: the dilation is minimal.
    Minimal,
    /// A nonzero pencil-invariant subspace of W exists: not minimal.
    NonMinimal,
    /// W ≠ 0 without an invariant witness; not decided either way.
    Undetermined,
}

#[derive(Debug, Clone)]
pub struct MinimalityReport {
    pub verdict: Minimality,
    pub kernel_dim: usize,
    /// Witness subspace in the normalized signal space, when one exists.
    pub witness: Option<CMat>,
    pub iterations: usize,
    pub invariance_residual: f64,
    pub pencil_residual: f64,
    pub message: String,
}

pub fn minimality_diagnostics(cfg: &DilationConfig) -> MinimalityReport {
    let ws = weakly_strict_report(&cfg.normalized, cfg.tol.kernel);
    if ws.weakly_strict {
        return MinimalityReport {
            verdict: Minimality::Minimal,
            kernel_dim: 0,
            witness: None,
            iterations: 0,
            invariance_residual: 0.0,
            pencil_residual: 0.0,
            message: "weakly strict: minimal (sufficient condition)".into(),
        };
    }
    let kernel_dim = ws.kernel.ncols();
    let inv = largest_invariant_subspace(&cfg.pencil, &ws.kernel, cfg.tol.kernel);
    let (verdict, witness, message) = if inv.basis.ncols() > 0 {
        let msg = format!("non-minimal: witness subspace of dimension {} inside W", inv.basis.ncols());
        (Minimality::NonMinimal, Some(inv.basis.clone()), msg)
    } else {
        let msg = format!("W has dimension {kernel_dim} but no invariant witness; minimality undetermined");
        (Minimality::Undetermined, None, msg)
    };
    MinimalityReport {
        verdict,
        kernel_dim,
        witness,
        iterations: inv.iterations,
        invariance_residual: inv.invariance_residual,
        pencil_residual: inv.pencil_residual,
        message,
    }
}

/// (ũ|₋, 0, ũ|₊) for the wave packet ũ(τ) = w·e^{iκτ}e^{−τ²/(2ω²)}, whose
/// spectrum is concentrated near κ.
pub fn witness_vector(cfg: &DilationConfig, w: &CVec, center_freq: f64, width: f64) -> DilationVector {
    let packet = |t: f64| w * (c(0.0, center_freq * t).exp() * c((-t * t / (2.0 * width * width)).exp(), 0.0));
    let triple = BoundaryTriple::from_fns(cfg.grid, packet, CVec::zeros(cfg.dim_h()), packet);
    DilationVector { triple }
}

/// max over the given times of ‖P_Hρ(t)v‖ / ‖v‖.
pub fn orbit_state_size(cfg: &DilationConfig, v: &DilationVector, times: &[Vec<f64>]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for t in times {
        worst = worst.max(rho_state(cfg, t, v)?.norm());
    }
    Ok(worst / v.norm().max(f64::MIN_POSITIVE))
}

/// The original-coordinate axis e_j as a time vector scaled by `s`.
pub fn axis_time(d: usize, j: usize, s: f64) -> Vec<f64> {
    let mut t = vec![0.0; d];
    t[j] = s;
    t
}

/// Matrix T as a complex matrix, for reports.
pub fn transform_matrix(cfg: &DilationConfig) -> CMat {
    to_complex(&cfg.transform)
}
