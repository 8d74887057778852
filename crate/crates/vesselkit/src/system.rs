//! The conservative input/state/output system along lines:
//!
//!   i ∂x/∂t_k + A_k x = Φ*σ_k u,   y = u − iΦx,
//!
//! its adjoint, trajectory extension from boundary data, and the energy and
//! smoothness bookkeeping used by the dilation.

use std::collections::HashMap;

use thiserror::Error;

use crate::linalg::{c, fro, lagrange_coefficients, phi_functions, CMat, CVec, I};
use crate::spectral::{GridSpec, SampledSignal};
use crate::vessel::{adjoint_vessel, check_vessel, Vessel};

/// Interpolation points of the Duhamel quadrature.
pub const DEFAULT_POINTS: usize = 6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SystemError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

pub type Result<T> = std::result::Result<T, SystemError>;

/// Node window of the interpolant used on the cell [k, k+1]: centered on
/// the cell, shifted to stay inside the admissible nodes [a, b].
pub fn cell_window(k: usize, a: usize, b: usize, points: usize) -> (usize, usize) {
    let avail = b - a + 1;
    if avail <= points {
        return (a, avail);
    }
    let want = (k + 1) as i64 - (points / 2) as i64;
    let start = want.clamp(a as i64, (b + 1 - points) as i64) as usize;
    (start, points)
}

fn window_nodes(start: usize, len: usize, k: usize) -> Vec<f64> {
    (0..len).map(|p| (start + p) as f64 - k as f64).collect()
}

/// ∫₀¹ ℓ_p(ρ)dρ for the Lagrange basis on the given offsets.
pub fn cell_quadrature_weights(offsets: &[f64]) -> Vec<f64> {
    lagrange_coefficients(offsets)
        .into_iter()
        .map(|cp| cp.iter().enumerate().map(|(j, a)| a / (j + 1) as f64).sum())
        .collect()
}

/// Running integral of samples on a uniform grid, exact for polynomials of
/// degree < `points` on every window.
pub fn cumulative_integral(values: &[f64], step: f64, points: usize) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    let mut cache: HashMap<(i64, usize), Vec<f64>> = HashMap::new();
    for k in 0..n - 1 {
        let (start, len) = cell_window(k, 0, n - 1, points);
        let w = cache
            .entry((start as i64 - k as i64, len))
            .or_insert_with(|| cell_quadrature_weights(&window_nodes(start, len, k)));
        let cell: f64 = w.iter().enumerate().map(|(p, q)| q * values[start + p]).sum();
        out[k + 1] = out[k] + step * cell;
    }
    out
}

/// Exponential integrator for x′ = iMx − iBg on a uniform grid: the input is
/// replaced by its Lagrange interpolant and the convolution with e^{i(Δ−r)M}
/// is integrated exactly through φ-functions,
///
///   x_{k+1} = e^{iΔM}x_k − i Σ_p W_p B g_{k+o_p},  W_p = Σ_j c_pj Δ j! φ_{j+1}(iΔM).
pub struct DuhamelIntegrator {
    step: f64,
    points: usize,
    propagator: CMat,
    phis: Vec<CMat>,
    input_map: CMat,
    cache: HashMap<(i64, usize), Vec<CMat>>,
}

impl DuhamelIntegrator {
    pub fn new(generator: &CMat, input_map: &CMat, step: f64, points: usize) -> Self {
        let points = points.max(2);
        let (propagator, phis) = phi_functions(&(generator * c(0.0, step)), points);
        DuhamelIntegrator { step, points, propagator, phis, input_map: input_map.clone(), cache: HashMap::new() }
    }

    pub fn propagator(&self) -> &CMat {
        &self.propagator
    }

    fn weights(&mut self, start: usize, len: usize, k: usize) -> Vec<CMat> {
        let key = (start as i64 - k as i64, len);
        if let Some(w) = self.cache.get(&key) {
            return w.clone();
        }
        let coeffs = lagrange_coefficients(&window_nodes(start, len, k));
        let n = self.propagator.nrows();
        let w: Vec<CMat> = coeffs
            .iter()
            .map(|cp| {
                let mut acc = CMat::zeros(n, n);
                let mut fact = 1.0;
                for (j, &a) in cp.iter().enumerate() {
                    if j > 0 {
                        fact *= j as f64;
                    }
                    acc += &self.phis[j] * c(a * self.step * fact, 0.0);
                }
                acc * &self.input_map * c(0.0, -1.0)
            })
            .collect();
        self.cache.insert(key, w.clone());
        w
    }

    /// States at every input node, starting from `x0` at the first node.
    pub fn march(&mut self, x0: &CVec, inputs: &[CVec]) -> Vec<CVec> {
        let n = inputs.len();
        let mut out = Vec::with_capacity(n.max(1));
        out.push(x0.clone());
        for k in 0..n.saturating_sub(1) {
            let (start, len) = cell_window(k, 0, n - 1, self.points);
            let w = self.weights(start, len, k);
            let mut next = &self.propagator * &out[k];
            for (p, wp) in w.iter().enumerate() {
                next += wp * &inputs[start + p];
            }
            out.push(next);
        }
        out
    }
}

/// Left limits at the node where boundary data meet.
#[derive(Debug, Clone, PartialEq)]
pub struct Jump {
    pub index: usize,
    pub u_left: CVec,
    pub y_left: CVec,
}

/// Input, state and output sampled along τ ↦ ξτ + η. Signals hold right
/// limits at a jump node; the left limits live in `jump`.
#[derive(Debug, Clone, PartialEq)]
pub struct LineTrajectory {
    pub direction: Vec<f64>,
    pub offset: Vec<f64>,
    pub grid: GridSpec,
    pub u: SampledSignal,
    pub y: SampledSignal,
    pub x: Vec<CVec>,
    pub jump: Option<Jump>,
    pub points: usize,
}

impl LineTrajectory {
    /// Index ranges of the smooth pieces, with the samples to use on each.
    fn pieces(&self) -> Vec<(usize, usize, Vec<CVec>, Vec<CVec>)> {
        let n = self.grid.n;
        match &self.jump {
            None => vec![(0, n - 1, self.u.values.clone(), self.y.values.clone())],
            Some(j) => {
                let mut ul = self.u.values[..=j.index].to_vec();
                let mut yl = self.y.values[..=j.index].to_vec();
                ul[j.index] = j.u_left.clone();
                yl[j.index] = j.y_left.clone();
                vec![
                    (0, j.index, ul, yl),
                    (j.index, n - 1, self.u.values[j.index..].to_vec(), self.y.values[j.index..].to_vec()),
                ]
            }
        }
    }
}

fn input_map(v: &Vessel, xi: &[f64]) -> CMat {
    v.phi.adjoint() * v.sigma_at(xi)
}

fn outputs(v: &Vessel, u: &[CVec], x: &[CVec]) -> Vec<CVec> {
    u.iter().zip(x).map(|(uk, xk)| uk - &v.phi * xk * I).collect()
}

fn check_line(v: &Vessel, h: &CVec, u: &SampledSignal, xi: &[f64], eta: &[f64]) -> Result<()> {
    let d = v.d();
    if xi.len() != d || eta.len() != d {
        return Err(SystemError::DimensionMismatch(format!("line data must have {d} coordinates")));
    }
    if h.len() != v.dim_h() {
        return Err(SystemError::DimensionMismatch(format!("state has dimension {}, H has {}", h.len(), v.dim_h())));
    }
    if u.dim() != v.dim_e() {
        return Err(SystemError::DimensionMismatch(format!("input has dimension {}, E has {}", u.dim(), v.dim_e())));
    }
    Ok(())
}

/// Marches x′ = iMx − iBg from node `k0` to both ends of the sampled input.
fn march_both_ways(
    generator: &CMat,
    input_map: &CMat,
    step: f64,
    points: usize,
    x0: &CVec,
    forward_inputs: &[CVec],
    backward_inputs: &[CVec],
) -> (Vec<CVec>, Vec<CVec>) {
    let fwd = DuhamelIntegrator::new(generator, input_map, step, points).march(x0, forward_inputs);
    // z(r) = x(−r) solves z′ = −iMz + iBg(−r)
    let bwd = DuhamelIntegrator::new(&-generator.clone(), &-input_map.clone(), step, points).march(x0, backward_inputs);
    (fwd, bwd)
}

/// State along τ ↦ ξτ + η from the state `h` at the base point η:
/// x(ξs + η) = e^{isξ·A}(h − i∫₀^s e^{−iwξ·A}Φ*σ(ξ)u(w)dw), marched in both
/// directions from τ = 0. The output follows from y = u − iΦx.
pub fn propagate_state_with(
    v: &Vessel,
    h: &CVec,
    u_line: &SampledSignal,
    xi: &[f64],
    eta: &[f64],
    points: usize,
) -> Result<LineTrajectory> {
    check_line(v, h, u_line, xi, eta)?;
    let grid = u_line.grid;
    let k0 = grid.zero_index();
    let fwd_in = &u_line.values[k0..];
    let bwd_in: Vec<CVec> = u_line.values[..=k0].iter().rev().cloned().collect();
    let (fwd, bwd) = march_both_ways(&v.a_at(xi), &input_map(v, xi), grid.step(), points, h, fwd_in, &bwd_in);
    let mut x: Vec<CVec> = bwd.into_iter().rev().collect();
    x.extend(fwd.into_iter().skip(1));
    let y = outputs(v, &u_line.values, &x);
    Ok(LineTrajectory {
        direction: xi.to_vec(),
        offset: eta.to_vec(),
        grid,
        u: u_line.clone(),
        y: SampledSignal { grid, domain: u_line.domain, values: y },
        x,
        jump: None,
        points,
    })
}

/// As `propagate_state_with`, with the input jumping at τ = 0: `u_line`
/// holds the right limit there and `u_left` the left limit.
pub fn propagate_state_jump(
    v: &Vessel,
    h: &CVec,
    u_line: &SampledSignal,
    u_left: &CVec,
    xi: &[f64],
    eta: &[f64],
    points: usize,
) -> Result<LineTrajectory> {
    check_line(v, h, u_line, xi, eta)?;
    if u_left.len() != u_line.dim() {
        return Err(SystemError::DimensionMismatch("left limit has the wrong dimension".into()));
    }
    let grid = u_line.grid;
    let k0 = grid.zero_index();
    let fwd_in = &u_line.values[k0..];
    let mut bwd_in: Vec<CVec> = u_line.values[..=k0].iter().rev().cloned().collect();
    bwd_in[0] = u_left.clone();
    let (fwd, bwd) = march_both_ways(&v.a_at(xi), &input_map(v, xi), grid.step(), points, h, fwd_in, &bwd_in);
    let mut x: Vec<CVec> = bwd.into_iter().rev().collect();
    x.extend(fwd.into_iter().skip(1));
    let y = outputs(v, &u_line.values, &x);
    let y_left = u_left - &v.phi * &x[k0] * I;
    Ok(LineTrajectory {
        direction: xi.to_vec(),
        offset: eta.to_vec(),
        grid,
        u: u_line.clone(),
        y: SampledSignal { grid, domain: u_line.domain, values: y },
        x,
        jump: Some(Jump { index: k0, u_left: u_left.clone(), y_left }),
        points,
    })
}

pub fn propagate_state(v: &Vessel, h: &CVec, u_line: &SampledSignal, xi: &[f64], eta: &[f64]) -> Result<LineTrajectory> {
    propagate_state_with(v, h, u_line, xi, eta, DEFAULT_POINTS)
}

/// (y_past, h, u_future) on a full-line grid: y at nodes 0..=k₀ (t ≤ 0) and
/// u at nodes k₀..N−1 (t ≥ 0), k₀ the node of t = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTriple {
    pub grid: GridSpec,
    pub y_past: Vec<CVec>,
    pub h: CVec,
    pub u_future: Vec<CVec>,
}

impl BoundaryTriple {
    pub fn new(grid: GridSpec, y_past: Vec<CVec>, h: CVec, u_future: Vec<CVec>) -> Result<Self> {
        let k0 = grid.zero_index();
        if y_past.len() != k0 + 1 || u_future.len() != grid.n - k0 {
            return Err(SystemError::DimensionMismatch(format!(
                "past/future lengths {}/{} do not split a grid of {} nodes at {k0}",
                y_past.len(),
                u_future.len(),
                grid.n
            )));
        }
        Ok(BoundaryTriple { grid, y_past, h, u_future })
    }

    pub fn zeros(grid: GridSpec, m: usize, n: usize) -> Self {
        let k0 = grid.zero_index();
        BoundaryTriple {
            grid,
            y_past: vec![CVec::zeros(m); k0 + 1],
            h: CVec::zeros(n),
            u_future: vec![CVec::zeros(m); grid.n - k0],
        }
    }

    /// Signals sampled from functions of t on each half-line.
    pub fn from_fns(grid: GridSpec, y: impl Fn(f64) -> CVec, h: CVec, u: impl Fn(f64) -> CVec) -> Self {
        let k0 = grid.zero_index();
        BoundaryTriple {
            grid,
            y_past: (0..=k0).map(|k| y(grid.node(k))).collect(),
            h,
            u_future: (k0..grid.n).map(|k| u(grid.node(k))).collect(),
        }
    }

    pub fn dim_e(&self) -> usize {
        self.u_future.first().map(|v| v.len()).unwrap_or(0)
    }

    /// ‖h‖² + Δ·Σ‖y‖² + Δ·Σ‖u‖² with half weight on the two split samples.
    pub fn norm_sq(&self) -> f64 {
        let dt = self.grid.step();
        let half = |v: &[CVec], split_last: bool| {
            let s: f64 = v.iter().map(|z| z.norm_squared()).sum();
            let edge = if split_last { v.last() } else { v.first() };
            dt * (s - 0.5 * edge.map(|z| z.norm_squared()).unwrap_or(0.0))
        };
        self.h.norm_squared() + half(&self.y_past, true) + half(&self.u_future, false)
    }

    pub fn scaled(&self, a: f64) -> BoundaryTriple {
        let s = c(a, 0.0);
        BoundaryTriple {
            grid: self.grid,
            y_past: self.y_past.iter().map(|v| v * s).collect(),
            h: &self.h * s,
            u_future: self.u_future.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &BoundaryTriple) -> BoundaryTriple {
        BoundaryTriple {
            grid: self.grid,
            y_past: self.y_past.iter().zip(&other.y_past).map(|(a, b)| a + b).collect(),
            h: &self.h + &other.h,
            u_future: self.u_future.iter().zip(&other.u_future).map(|(a, b)| a + b).collect(),
        }
    }
}

/// The full-line trajectory through a boundary triple along t₁: the forward
/// system with input u for t > 0, the adjoint system i x′ + A₁*x = Φ*σ₁y run
/// backwards with input y for t < 0. Then ỹ = u − iΦx on t > 0 and
/// ũ = y + iΦx on t < 0; the returned signals are ũ and ỹ.
pub fn extend_trajectory_with(v: &Vessel, triple: &BoundaryTriple, points: usize) -> Result<LineTrajectory> {
    let grid = triple.grid;
    let k0 = grid.zero_index();
    let d = v.d();
    if triple.h.len() != v.dim_h() || triple.dim_e() != v.dim_e() {
        return Err(SystemError::DimensionMismatch("boundary triple does not match the vessel".into()));
    }
    BoundaryTriple::new(grid, triple.y_past.clone(), triple.h.clone(), triple.u_future.clone())?;
    let mut e1 = vec![0.0; d];
    e1[0] = 1.0;
    let b = input_map(v, &e1);
    let step = grid.step();
    let fwd = DuhamelIntegrator::new(&v.a[0], &b, step, points).march(&triple.h, &triple.u_future);
    let back_in: Vec<CVec> = triple.y_past.iter().rev().cloned().collect();
    let a_star = v.a[0].adjoint();
    let bwd = DuhamelIntegrator::new(&-a_star, &-b, step, points).march(&triple.h, &back_in);
    let mut x: Vec<CVec> = bwd.into_iter().rev().collect();
    x.extend(fwd.into_iter().skip(1));

    let phi = &v.phi;
    let mut u = Vec::with_capacity(grid.n);
    let mut y = Vec::with_capacity(grid.n);
    for k in 0..k0 {
        u.push(&triple.y_past[k] + phi * &x[k] * I);
        y.push(triple.y_past[k].clone());
    }
    for k in k0..grid.n {
        let uk = triple.u_future[k - k0].clone();
        y.push(&uk - phi * &x[k] * I);
        u.push(uk);
    }
    let jump = Jump {
        index: k0,
        u_left: &triple.y_past[k0] + phi * &triple.h * I,
        y_left: triple.y_past[k0].clone(),
    };
    Ok(LineTrajectory {
        direction: e1,
        offset: vec![0.0; d],
        grid,
        u: SampledSignal { grid, domain: crate::spectral::Domain::Time, values: u },
        y: SampledSignal { grid, domain: crate::spectral::Domain::Time, values: y },
        x,
        jump: Some(jump),
        points,
    })
}

pub fn extend_trajectory(v: &Vessel, triple: &BoundaryTriple) -> Result<LineTrajectory> {
    extend_trajectory_with(v, triple, DEFAULT_POINTS)
}

/// Cumulative energies along a trajectory: ‖x_k‖², ∫⟨σ(ξ)u,u⟩ and
/// ∫⟨σ(ξ)y,y⟩ from the first node to node k.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyProfile {
    pub state: Vec<f64>,
    pub input: Vec<f64>,
    pub output: Vec<f64>,
}

impl EnergyProfile {
    /// Spread of ‖x_k‖² − sign·(input − output) relative to max ‖x‖².
    fn spread(&self, output_sign: f64) -> f64 {
        let e: Vec<f64> = (0..self.state.len())
            .map(|k| self.state[k] - self.input[k] + output_sign * self.output[k])
            .collect();
        let hi = e.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = e.iter().cloned().fold(f64::INFINITY, f64::min);
        let scale = self.state.iter().cloned().fold(0.0, f64::max);
        (hi - lo) / if scale > 0.0 { scale } else { 1.0 }
    }

    pub fn residual(&self) -> f64 {
        self.spread(1.0)
    }

    /// The same spread with the output term entering with the wrong sign.
    pub fn flipped_residual(&self) -> f64 {
        self.spread(-1.0)
    }
}

fn quadratic(v: &CVec, w: &CMat) -> f64 {
    (v.adjoint() * w * v)[(0, 0)].re
}

pub fn energy_profile(traj: &LineTrajectory, v: &Vessel) -> EnergyProfile {
    let sigma = v.sigma_at(&traj.direction);
    let step = traj.grid.step();
    let n = traj.grid.n;
    let mut input = vec![0.0; n];
    let mut output = vec![0.0; n];
    for (a, b, u, y) in traj.pieces() {
        let gu: Vec<f64> = u.iter().map(|z| quadratic(z, &sigma)).collect();
        let gy: Vec<f64> = y.iter().map(|z| quadratic(z, &sigma)).collect();
        let iu = cumulative_integral(&gu, step, traj.points);
        let iy = cumulative_integral(&gy, step, traj.points);
        let (base_u, base_y) = (input[a], output[a]);
        for k in a..=b {
            input[k] = base_u + iu[k - a];
            output[k] = base_y + iy[k - a];
        }
    }
    EnergyProfile { state: traj.x.iter().map(|x| x.norm_squared()).collect(), input, output }
}

/// max over node pairs of |‖x(t+s)‖² − ‖x(t)‖² − ∫⟨σu,u⟩ + ∫⟨σy,y⟩|,
/// relative to max ‖x‖².
pub fn energy_balance_residual(traj: &LineTrajectory, v: &Vessel) -> f64 {
    energy_profile(traj, v).residual()
}

/// ∫₀^L⟨σ₁ỹ,ỹ⟩ and ∫₀^L⟨σ₁ũ,ũ⟩ + ‖h‖² of an extended trajectory.
pub fn future_output_bound(traj: &LineTrajectory, v: &Vessel) -> (f64, f64) {
    let k0 = traj.grid.zero_index();
    let p = energy_profile(traj, v);
    let last = traj.grid.n - 1;
    (p.output[last] - p.output[k0], p.input[last] - p.input[k0] + p.state[k0])
}

/// Centered first-derivative stencils of order 2, 4 and 6 (right half;
/// the left half is antisymmetric).
fn centered_stencil(order: usize) -> &'static [f64] {
    match order {
        0..=2 => &[0.5],
        3 | 4 => &[8.0 / 12.0, -1.0 / 12.0],
        _ => &[45.0 / 60.0, -9.0 / 60.0, 1.0 / 60.0],
    }
}

/// Centered-difference residual of x′ = iMx − iBg over interior nodes of
/// each smooth piece, relative to the size of the terms.
fn equation_residual(
    x: &[CVec],
    g: &[(usize, usize, Vec<CVec>)],
    m: &CMat,
    b: &CMat,
    step: f64,
    order: usize,
) -> f64 {
    let st = centered_stencil(order);
    let r = st.len();
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (a, e, inputs) in g {
        for k in a + r..(e + 1).saturating_sub(r) {
            let mut dx = CVec::zeros(x[k].len());
            for (i, w) in st.iter().enumerate() {
                dx += (&x[k + i + 1] - &x[k - i - 1]) * c(w / step, 0.0);
            }
            let mx = m * &x[k] * I;
            let bg = b * &inputs[k - a] * I;
            scale = scale.max(mx.norm()).max(bg.norm()).max(dx.norm());
            worst = worst.max((dx - mx + bg).norm());
        }
    }
    worst / if scale > 0.0 { scale } else { 1.0 }
}

/// Relative second-order centered-difference residual of
/// i x′ + (ξ·A)x = Φ*σ(ξ)u.
pub fn state_residual(traj: &LineTrajectory, v: &Vessel) -> f64 {
    state_residual_order(traj, v, 2)
}

/// The state residual with a centered difference of order 2, 4 or 6.
pub fn state_residual_order(traj: &LineTrajectory, v: &Vessel, order: usize) -> f64 {
    let pieces: Vec<(usize, usize, Vec<CVec>)> = traj.pieces().into_iter().map(|(a, b, u, _)| (a, b, u)).collect();
    equation_residual(
        &traj.x,
        &pieces,
        &v.a_at(&traj.direction),
        &input_map(v, &traj.direction),
        traj.grid.step(),
        order,
    )
}

/// max_k ‖y_k − u_k + iΦx_k‖.
pub fn output_residual(traj: &LineTrajectory, v: &Vessel) -> f64 {
    let mut worst = outputs(v, &traj.u.values, &traj.x)
        .iter()
        .zip(&traj.y.values)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    if let Some(j) = &traj.jump {
        worst = worst.max((&j.u_left - &v.phi * &traj.x[j.index] * I - &j.y_left).norm());
    }
    worst
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdjointCheck {
    /// Residual of the adjoint state and output equations on (y, x, u).
    pub equation_residual: f64,
    /// Largest vessel-condition residual of the adjoint vessel.
    pub vessel_residual: f64,
    pub total: f64,
}

/// Reads (y, x, u) as a trajectory of the adjoint vessel (−Φ, A*, −σ):
/// i x′ + (ξ·A*)x = Φ*σ(ξ)y and u = y + iΦx. The state equation is
/// differenced at sixth order, matching `state_residual_order(.., 6)`.
pub fn adjoint_trajectory_check(traj: &LineTrajectory, v: &Vessel) -> AdjointCheck {
    let adj = adjoint_vessel(v);
    let xi = &traj.direction;
    let pieces: Vec<(usize, usize, Vec<CVec>)> = traj.pieces().into_iter().map(|(a, b, _, y)| (a, b, y)).collect();
    let b = adj.phi.adjoint() * adj.sigma_at(xi);
    let state = equation_residual(&traj.x, &pieces, &adj.a_at(xi), &b, traj.grid.step(), 6);
    let out = traj
        .y
        .values
        .iter()
        .zip(&traj.x)
        .zip(&traj.u.values)
        .map(|((y, x), u)| (y - &adj.phi * x * I - u).norm())
        .fold(0.0, f64::max);
    let vessel_residual = check_vessel(&adj, 1e-10).map(|r| r.max_residual()).unwrap_or(f64::INFINITY);
    let equation_residual = state.max(out);
    AdjointCheck { equation_residual, vessel_residual, total: equation_residual + vessel_residual }
}

/// Value, first and second derivative of a signal at one side of t = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub value: CVec,
    pub d1: CVec,
    pub d2: CVec,
}

/// Jets of u at 0⁺ and y at 0⁻.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryJets {
    pub u: Jet,
    pub y: Jet,
}

/// One-sided fourth-order differences from samples f(0), f(±Δ), …, ordered
/// away from the boundary; `sign` is −1 for samples taken at −kΔ.
pub fn one_sided_jet(samples: &[CVec], step: f64, sign: f64) -> Jet {
    let f = |k: usize| &samples[k];
    let d1 = (f(0) * c(-25.0, 0.0) + f(1) * c(48.0, 0.0) - f(2) * c(36.0, 0.0) + f(3) * c(16.0, 0.0)
        - f(4) * c(3.0, 0.0))
        / c(12.0 * step * sign, 0.0);
    let d2 = (f(0) * c(45.0, 0.0) - f(1) * c(154.0, 0.0) + f(2) * c(214.0, 0.0) - f(3) * c(156.0, 0.0)
        + f(4) * c(61.0, 0.0)
        - f(5) * c(10.0, 0.0))
        / c(12.0 * step * step, 0.0);
    Jet { value: f(0).clone(), d1, d2 }
}

/// Jets of a boundary triple by one-sided differences on its grid.
pub fn triple_jets(triple: &BoundaryTriple) -> BoundaryJets {
    let step = triple.grid.step();
    let past: Vec<CVec> = triple.y_past.iter().rev().take(6).cloned().collect();
    BoundaryJets { u: one_sided_jet(&triple.u_future[..6], step, 1.0), y: one_sided_jet(&past, step, -1.0) }
}

/// Residuals of the three matching conditions at t = 0 (σ = σ₁, A = A₁):
///
///   ũ(0) − ỹ(0) = iΦh
///   ũ′(0) − ỹ′(0) = ΦΦ*σũ(0) − ΦAh
///   ũ″(0) − ỹ″(0) = ΦΦ*σũ′(0) − iΦA²h + iΦAΦ*σũ(0)
///
/// with ũ the future input and ỹ the past output.
pub fn k0_matching_residual(v: &Vessel, h: &CVec, jets: &BoundaryJets) -> [f64; 3] {
    let phi = &v.phi;
    let a = &v.a[0];
    let pps = phi * phi.adjoint() * &v.sigma[0];
    let (u, y) = (&jets.u, &jets.y);
    let r0 = &u.value - &y.value - phi * h * I;
    let r1 = &u.d1 - &y.d1 - &pps * &u.value + phi * a * h;
    let r2 = &u.d2 - &y.d2 - &pps * &u.d1 + phi * a * a * h * I - phi * a * phi.adjoint() * &v.sigma[0] * &u.value * I;
    [r0.norm(), r1.norm(), r2.norm()]
}

/// Jets of u at 0⁺ that satisfy the matching conditions for the given h
/// and past jets.
pub fn matching_future_jet(v: &Vessel, h: &CVec, past: &Jet) -> Jet {
    let phi = &v.phi;
    let a = &v.a[0];
    let pps = phi * phi.adjoint() * &v.sigma[0];
    let value = &past.value + phi * h * I;
    let d1 = &past.d1 + &pps * &value - phi * a * h;
    let d2 = &past.d2 + &pps * &d1 - phi * a * a * h * I + phi * a * phi.adjoint() * &v.sigma[0] * &value * I;
    Jet { value, d1, d2 }
}

/// (c₀ + c₁t + (c₂/2 + c₀/(2w²))t²)e^{−t²/(2w²)}, whose jet at 0 is (c₀, c₁, c₂).
pub fn bump_with_jet(jet: &Jet, width: f64, t: f64) -> CVec {
    let w2 = width * width;
    let quad = &jet.d2 * c(0.5, 0.0) + &jet.value * c(0.5 / w2, 0.0);
    (&jet.value + &jet.d1 * c(t, 0.0) + quad * c(t * t, 0.0)) * c((-t * t / (2.0 * w2)).exp(), 0.0)
}

/// Smooth boundary triple satisfying the matching conditions: y on t ≤ 0 is
/// a bump with the given jet, u on t ≥ 0 a bump with the matched jet.
pub fn matched_triple(v: &Vessel, grid: GridSpec, h: &CVec, past: &Jet, width: f64) -> BoundaryTriple {
    let future = matching_future_jet(v, h, past);
    BoundaryTriple::from_fns(grid, |t| bump_with_jet(past, width, t), h.clone(), |t| bump_with_jet(&future, width, t))
}

/// Frobenius size of the largest vessel operator, for scaling residuals.
pub fn vessel_scale(v: &Vessel) -> f64 {
    v.a.iter().map(fro).chain(std::iter::once(fro(&v.phi))).fold(1.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn windows_stay_inside_the_range() {
        assert_eq!(cell_window(0, 0, 100, 6), (0, 6));
        assert_eq!(cell_window(50, 0, 100, 6), (48, 6));
        assert_eq!(cell_window(99, 0, 100, 6), (95, 6));
        assert_eq!(cell_window(3, 0, 4, 6), (0, 5));
        assert_eq!(cell_window(7, 0, 100, 2), (7, 2));
    }

    #[test]
    fn cell_quadrature_is_exact_on_polynomials() {
        let w = cell_quadrature_weights(&[-2.0, -1.0, 0.0, 1.0, 2.0, 3.0]);
        // ∫₀¹ ρ⁵ dρ = 1/6
        let got: f64 = w.iter().zip([-2.0f64, -1.0, 0.0, 1.0, 2.0, 3.0]).map(|(q, x)| q * x.powi(5)).sum();
        assert!((got - 1.0 / 6.0).abs() < 1e-13);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cumulative_integral_of_cosine() {
        let step = 0.01;
        let v: Vec<f64> = (0..300).map(|k| (k as f64 * step).cos()).collect();
        let i = cumulative_integral(&v, step, 6);
        for k in [1, 150, 299] {
            assert!((i[k] - (k as f64 * step).sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn one_sided_jet_of_polynomial() {
        let step = 0.1;
        let f = |t: f64| CVec::from_vec(vec![c(1.0 + 2.0 * t - 3.0 * t * t + 0.5 * t * t * t, 0.0)]);
        let right: Vec<CVec> = (0..6).map(|k| f(k as f64 * step)).collect();
        let left: Vec<CVec> = (0..6).map(|k| f(-(k as f64) * step)).collect();
        for (s, sign) in [(right, 1.0), (left, -1.0)] {
            let j = one_sided_jet(&s, step, sign);
            assert!((j.d1[0].re - 2.0).abs() < 1e-10);
            assert!((j.d2[0].re + 6.0).abs() < 1e-9);
        }
    }
}
