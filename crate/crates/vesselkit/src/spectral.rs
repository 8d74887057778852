//! Frequency-domain solution of the compatibility system on uniform grids:
//! the translation representation π(t), transport Λ(x, y) along lines, full
//! field evaluation and the half-line energy identities.

use std::f64::consts::PI;

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{c, fro, hermitian_eigen, identity, lambda_max, lambda_min, op_norm, CMat, CVec, C64, ZERO};
use crate::vessel::NormalizedPencil;

/// Spectral energy fraction above half the Nyquist frequency (and signal
/// energy beyond |t| > L/2) below which a signal counts as clean.
pub const CLEAN_FRACTION: f64 = 1e-8;

/// Frequency components whose weight is below this fraction of the largest
/// one are dropped from direct quadratures.
const NEGLIGIBLE: f64 = 1e-14;

const MAX_OUT_NODES: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite sample at node {0}")]
    NonFinite(usize),
}

pub type Result<T> = std::result::Result<T, SpectralError>;

/// Uniform grid t_k = −L + kΔ on [−L, L) with centered frequency nodes
/// s_k = π(k − N/2)/L.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
}

impl GridSpec {
    pub fn new(n: usize, half_width: f64) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return Err(SpectralError::InvalidGrid(format!("N = {n} is not a power of two ≥ 2")));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(SpectralError::InvalidGrid(format!("L = {half_width} must be positive")));
        }
        Ok(GridSpec { n, half_width })
    }

    pub fn step(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        -self.half_width + k as f64 * self.step()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.node(k)).collect()
    }

    pub fn freq_step(&self) -> f64 {
        PI / self.half_width
    }

    pub fn freq(&self, k: usize) -> f64 {
        PI * (k as f64 - (self.n / 2) as f64) / self.half_width
    }

    pub fn freqs(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.freq(k)).collect()
    }

    /// Index of t = 0.
    pub fn zero_index(&self) -> usize {
        self.n / 2
    }

    pub fn nearest_index(&self, t: f64) -> usize {
        let k = ((t + self.half_width) / self.step()).round();
        k.clamp(0.0, (self.n - 1) as f64) as usize
    }

    /// Index of `t` when it lies on the grid up to 1e−9 of a step.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let x = (t + self.half_width) / self.step();
        let k = x.round();
        if (x - k).abs() <= 1e-9 && k >= 0.0 && k < self.n as f64 {
            Some(k as usize)
        } else {
            None
        }
    }

    /// Same step, `factor` times as many nodes, nodes of `self` embedded at
    /// offset `(factor − 1)·N/2`.
    pub fn padded(&self, factor: usize) -> GridSpec {
        GridSpec { n: self.n * factor, half_width: self.half_width * factor as f64 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    Time,
    Frequency,
}

/// N samples in ℂ^m on a grid, either of a time signal or of its transform.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSignal {
    pub grid: GridSpec,
    pub domain: Domain,
    pub values: Vec<CVec>,
}

impl SampledSignal {
    pub fn new(grid: GridSpec, values: Vec<CVec>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(SpectralError::DimensionMismatch(format!(
                "{} samples on a grid of {} nodes",
                values.len(),
                grid.n
            )));
        }
        let m = values[0].len();
        for (k, v) in values.iter().enumerate() {
            if v.len() != m {
                return Err(SpectralError::DimensionMismatch(format!("sample {k} has dimension {}", v.len())));
            }
            if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(SpectralError::NonFinite(k));
            }
        }
        Ok(SampledSignal { grid, domain: Domain::Time, values })
    }

    pub fn zeros(grid: GridSpec, m: usize) -> Self {
        SampledSignal { grid, domain: Domain::Time, values: vec![CVec::zeros(m); grid.n] }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> CVec) -> Self {
        SampledSignal { grid, domain: Domain::Time, values: grid.nodes().into_iter().map(f).collect() }
    }

    /// ξ·e^{−(t − center)²/(2w²)}.
    pub fn gaussian(grid: GridSpec, xi: &CVec, center: f64, width: f64) -> Self {
        Self::from_fn(grid, |t| xi * c((-(t - center).powi(2) / (2.0 * width * width)).exp(), 0.0))
    }

    pub fn dim(&self) -> usize {
        self.values.first().map(|v| v.len()).unwrap_or(0)
    }

    /// Step of the variable the samples live on.
    pub fn spacing(&self) -> f64 {
        match self.domain {
            Domain::Time => self.grid.step(),
            Domain::Frequency => self.grid.freq_step(),
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.spacing() * self.values.iter().map(|v| v.norm_squared()).sum::<f64>()
    }

    pub fn max_diff(&self, other: &SampledSignal) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// L² distance on the shared grid.
    pub fn l2_diff(&self, other: &SampledSignal) -> f64 {
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm_squared()).sum();
        (self.spacing() * s).sqrt()
    }

    /// Zero-extension to the padded grid with the same step.
    pub fn zero_padded(&self, factor: usize) -> SampledSignal {
        if factor == 1 {
            return self.clone();
        }
        let grid = self.grid.padded(factor);
        let offset = (factor - 1) * self.grid.n / 2;
        let mut values = vec![CVec::zeros(self.dim()); grid.n];
        for (k, v) in self.values.iter().enumerate() {
            values[offset + k] = v.clone();
        }
        SampledSignal { grid, domain: self.domain, values }
    }
}

/// Coverage flags of a time signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignalFlags {
    /// Spectral energy fraction at |s| > s_max/2.
    pub spectral_tail: f64,
    /// Energy fraction at |t| > L/2.
    pub decay_tail: f64,
}

impl SignalFlags {
    pub fn nyquist(&self) -> bool {
        self.spectral_tail <= CLEAN_FRACTION
    }

    pub fn decayed(&self) -> bool {
        self.decay_tail <= CLEAN_FRACTION
    }

    pub fn clean(&self) -> bool {
        self.nyquist() && self.decayed()
    }
}

pub fn signal_flags(f: &SampledSignal) -> SignalFlags {
    let total_t: f64 = f.values.iter().map(|v| v.norm_squared()).sum();
    if total_t == 0.0 {
        return SignalFlags { spectral_tail: 0.0, decay_tail: 0.0 };
    }
    let l = f.grid.half_width;
    let far: f64 = f
        .values
        .iter()
        .enumerate()
        .filter(|(k, _)| f.grid.node(*k).abs() > 0.5 * l)
        .map(|(_, v)| v.norm_squared())
        .sum();
    let fh = forward_fft(f);
    let s_max = PI * f.grid.n as f64 / (2.0 * l);
    let total_s: f64 = fh.values.iter().map(|v| v.norm_squared()).sum();
    let high: f64 = fh
        .values
        .iter()
        .enumerate()
        .filter(|(k, _)| f.grid.freq(*k).abs() > 0.5 * s_max)
        .map(|(_, v)| v.norm_squared())
        .sum();
    SignalFlags { spectral_tail: high / total_s, decay_tail: far / total_t }
}

/// Diagnostic flags attached to transported signals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransportFlags {
    /// Input not band- and space-limited: periodization may be visible.
    pub aliasing_risk: bool,
    /// α(x) is not positive definite, so isometry claims do not apply.
    pub alpha_not_positive: bool,
    /// Zero-padding factor of the frequency quadrature.
    pub padding: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transported {
    pub signal: SampledSignal,
    pub flags: TransportFlags,
}

fn sign_of(k: usize) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn transform(values: &[CVec], m: usize, inverse: bool) -> Vec<CVec> {
    let n = values.len();
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    let mut out = vec![CVec::zeros(m); n];
    let mut buf = vec![ZERO; n];
    let half = n / 2;
    for i in 0..m {
        // (−1)^k modulation moves the centered nodes onto the DFT layout
        for (k, v) in values.iter().enumerate() {
            buf[k] = v[i] * sign_of(k);
        }
        fft.process(&mut buf);
        for (k, z) in buf.iter().enumerate() {
            out[k][i] = *z * sign_of(k + half);
        }
    }
    out
}

/// f̂(s_k) = (Δ/√2π)·Σ_n f(t_n)e^{−is_k t_n}.
pub fn forward_fft(f: &SampledSignal) -> SampledSignal {
    let scale = f.grid.step() / (2.0 * PI).sqrt();
    let mut values = transform(&f.values, f.dim(), false);
    for v in &mut values {
        *v *= c(scale, 0.0);
    }
    SampledSignal { grid: f.grid, domain: Domain::Frequency, values }
}

/// f(t_n) = (Δs/√2π)·Σ_k f̂(s_k)e^{is_k t_n}.
pub fn inverse_fft(fh: &SampledSignal) -> SampledSignal {
    let scale = fh.grid.freq_step() / (2.0 * PI).sqrt();
    // the inverse needs (−1)^{k−N/2} before and (−1)^n after the DFT; the
    // modulation in `transform` differs from that by (−1)^{N/2} twice
    let mut values = transform(&fh.values, fh.dim(), true);
    for v in &mut values {
        *v *= c(scale, 0.0);
    }
    SampledSignal { grid: fh.grid, domain: Domain::Time, values }
}

/// U·diag(e^{iθλ})·U* for a Hermitian matrix with eigenpairs (λ, U).
pub fn phase_matrix(values: &[f64], vectors: &CMat, theta: f64) -> CMat {
    let m = values.len();
    let mut scaled = vectors.clone();
    for j in 0..m {
        let p = C64::from_polar(1.0, theta * values[j]);
        for i in 0..m {
            scaled[(i, j)] *= p;
        }
    }
    &scaled * vectors.adjoint()
}

/// e^{iM} for Hermitian M.
pub fn unitary_exp(m: &CMat) -> CMat {
    let (w, v) = hermitian_eigen(m);
    phase_matrix(&w, &v, 1.0)
}

/// Per-frequency eigendecompositions of s_k·α(x) + β(x).
#[derive(Debug, Clone)]
pub struct SpectrumCache {
    pub freqs: Vec<f64>,
    pub direction: Vec<f64>,
    pub eigenvalues: Vec<Vec<f64>>,
    pub eigenvectors: Vec<CMat>,
    alpha: CMat,
    beta: CMat,
}

impl SpectrumCache {
    pub fn build(pencil: &NormalizedPencil, x: &[f64], freqs: &[f64]) -> Self {
        let alpha = pencil.alpha_at(x);
        let beta = pencil.beta_at(x);
        let mut eigenvalues = Vec::with_capacity(freqs.len());
        let mut eigenvectors = Vec::with_capacity(freqs.len());
        for &s in freqs {
            let (w, v) = hermitian_eigen(&(&alpha * c(s, 0.0) + &beta));
            eigenvalues.push(w);
            eigenvectors.push(v);
        }
        SpectrumCache { freqs: freqs.to_vec(), direction: x.to_vec(), eigenvalues, eigenvectors, alpha, beta }
    }

    pub fn matrix(&self, k: usize) -> CMat {
        &self.alpha * c(self.freqs[k], 0.0) + &self.beta
    }

    /// max_k ‖U_kΛ_kU_k* − M(s_k)‖ / ‖M(s_k)‖.
    pub fn reconstruction_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..self.freqs.len() {
            let m = self.matrix(k);
            let u = &self.eigenvectors[k];
            let lam = CMat::from_diagonal(&CVec::from_iterator(
                self.eigenvalues[k].len(),
                self.eigenvalues[k].iter().map(|&x| c(x, 0.0)),
            ));
            let rec = u * lam * u.adjoint();
            let scale = fro(&m).max(f64::MIN_POSITIVE);
            worst = worst.max(fro(&(rec - &m)) / scale);
        }
        worst
    }

    /// e^{iθM(s_k)}.
    pub fn phase(&self, k: usize, theta: f64) -> CMat {
        phase_matrix(&self.eigenvalues[k], &self.eigenvectors[k], theta)
    }
}

fn pencil_check(pencil: &NormalizedPencil, f: &SampledSignal, x: &[f64]) -> Result<()> {
    if pencil.dim_e() != f.dim() {
        return Err(SpectralError::DimensionMismatch(format!(
            "signal has dimension {}, pencil has {}",
            f.dim(),
            pencil.dim_e()
        )));
    }
    if x.len() != pencil.d() {
        return Err(SpectralError::DimensionMismatch(format!(
            "point has {} coordinates, pencil has {}",
            x.len(),
            pencil.d()
        )));
    }
    Ok(())
}

/// (π(t)f) = F⁻¹(e^{iΣ_j t_j(sα_j + β_j)}·Ff) on the grid of f. Content moved
/// past ±L wraps around.
pub fn apply_pi(pencil: &NormalizedPencil, t: &[f64], f: &SampledSignal) -> Result<Transported> {
    pencil_check(pencil, f, t)?;
    let mut fh = forward_fft(f);
    let alpha = pencil.alpha_at(t);
    let beta = pencil.beta_at(t);
    for (k, v) in fh.values.iter_mut().enumerate() {
        let e = unitary_exp(&(&alpha * c(f.grid.freq(k), 0.0) + &beta));
        *v = e * &*v;
    }
    let flags = TransportFlags {
        aliasing_risk: !signal_flags(f).clean(),
        alpha_not_positive: false,
        padding: 1,
    };
    Ok(Transported { signal: inverse_fft(&fh), flags })
}

/// Smallest power of two P with 2PL ≥ reach + 1.5L, so that the periodic
/// copies of a signal confined to |t| < L/2 stay clear of every position the
/// quadrature reaches.
pub fn padding_factor(reach: f64, half_width: f64) -> usize {
    let need = ((reach + 1.5 * half_width) / (2.0 * half_width)).ceil().max(1.0) as usize;
    need.next_power_of_two()
}

fn is_identity_transport(pencil: &NormalizedPencil, x: &[f64]) -> bool {
    let m = pencil.dim_e();
    fro(&(pencil.alpha_at(x) - identity(m))) == 0.0 && fro(&pencil.beta_at(x)) == 0.0
}

/// (Λ(x,y)f)(τ) = (1/√2π)∫e^{iτ(sα(x)+β(x))}e^{i(sα(y)+β(y))}f̂(s)ds at the
/// nodes of `out_grid`. When α(x) = I, β(x) = 0 and the output grid is the
/// input grid this is π(y)f computed by FFT; otherwise the frequency integral
/// is a Riemann sum over the zero-padded transform.
pub fn lambda_op(
    pencil: &NormalizedPencil,
    x: &[f64],
    y: &[f64],
    f: &SampledSignal,
    out_grid: &GridSpec,
) -> Result<Transported> {
    pencil_check(pencil, f, x)?;
    pencil_check(pencil, f, y)?;
    let alpha_x = pencil.alpha_at(x);
    let alpha_not_positive = !(lambda_min(&alpha_x) > 0.0);
    if *out_grid == f.grid && is_identity_transport(pencil, x) {
        return apply_pi(pencil, y, f);
    }
    let reach = op_norm(&alpha_x) * out_grid.half_width + op_norm(&pencil.alpha_at(y));
    let padding = padding_factor(reach, f.grid.half_width);
    let values = transport_quadrature(pencil, x, y, f, padding, &out_grid.nodes());
    let flags = TransportFlags { aliasing_risk: !signal_flags(f).clean(), alpha_not_positive, padding };
    Ok(Transported { signal: SampledSignal { grid: *out_grid, domain: Domain::Time, values }, flags })
}

/// (Λ(x,y)f)(τ) at arbitrary points τ by the same frequency quadrature as
/// [`lambda_op`].
pub fn lambda_at(pencil: &NormalizedPencil, x: &[f64], y: &[f64], f: &SampledSignal, taus: &[f64]) -> Result<Vec<CVec>> {
    pencil_check(pencil, f, x)?;
    pencil_check(pencil, f, y)?;
    let far = taus.iter().fold(0.0_f64, |a, t| a.max(t.abs()));
    let reach = op_norm(&pencil.alpha_at(x)) * far + op_norm(&pencil.alpha_at(y));
    let padding = padding_factor(reach, f.grid.half_width);
    Ok(transport_quadrature(pencil, x, y, f, padding, taus))
}

fn transport_quadrature(
    pencil: &NormalizedPencil,
    x: &[f64],
    y: &[f64],
    f: &SampledSignal,
    padding: usize,
    taus: &[f64],
) -> Vec<CVec> {
    let m = f.dim();
    let padded = f.zero_padded(padding);
    let fh = forward_fft(&padded);
    let freqs = padded.grid.freqs();
    let cache = SpectrumCache::build(pencil, x, &freqs);
    let alpha_y = pencil.alpha_at(y);
    let beta_y = pencil.beta_at(y);
    let y_is_zero = y.iter().all(|&v| v == 0.0);
    // w_k = U_k*·e^{iM_y(s_k)}·f̂_k
    let mut weights: Vec<CVec> = Vec::with_capacity(freqs.len());
    for (k, &s) in freqs.iter().enumerate() {
        let g = if y_is_zero {
            fh.values[k].clone()
        } else {
            unitary_exp(&(&alpha_y * c(s, 0.0) + &beta_y)) * &fh.values[k]
        };
        weights.push(cache.eigenvectors[k].adjoint() * g);
    }
    let top = weights.iter().map(|w| w.norm()).fold(0.0, f64::max);
    let active: Vec<usize> = (0..freqs.len()).filter(|&k| weights[k].norm() > NEGLIGIBLE * top).collect();
    let scale = c(padded.grid.freq_step() / (2.0 * PI).sqrt(), 0.0);
    let mut values = Vec::with_capacity(taus.len());
    for &tau in taus {
        let mut acc = vec![ZERO; m];
        for &k in &active {
            let lam = &cache.eigenvalues[k];
            let u = &cache.eigenvectors[k];
            let w = &weights[k];
            for j in 0..m {
                let p = w[j] * C64::from_polar(1.0, tau * lam[j]);
                for (i, a) in acc.iter_mut().enumerate() {
                    *a += u[(i, j)] * p;
                }
            }
        }
        values.push(CVec::from_vec(acc) * scale);
    }
    values
}

/// Output grid able to hold Λ(x,y)f for a signal living on `grid`: it widens
/// by 1/λ_min(α(x)) to hold the slowest transported content and refines by
/// λ_max(α(x)) to resolve the fastest oscillation.
pub fn transport_grid(pencil: &NormalizedPencil, x: &[f64], y: &[f64], grid: &GridSpec) -> GridSpec {
    let a = pencil.alpha_at(x);
    let lo = lambda_min(&a);
    let hi = lambda_max(&a).max(1.0);
    let l = grid.half_width;
    let width = if lo > 0.0 {
        l.max((op_norm(&pencil.alpha_at(y)) + l) / lo)
    } else {
        l
    };
    let step = grid.step() / hi;
    let n = ((2.0 * width / step).ceil() as usize).next_power_of_two().clamp(grid.n, MAX_OUT_NODES);
    GridSpec { n, half_width: width }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightedNorms {
    pub full: f64,
    pub left: f64,
    pub right: f64,
}

fn weighted_density(f: &SampledSignal, weight: &CMat) -> Vec<f64> {
    f.values.iter().map(|v| (v.adjoint() * weight * v)[(0, 0)].re).collect()
}

/// Riemann sums of ⟨W f, f⟩ over the whole grid and the two sides of
/// `split_at`; the node nearest the split contributes half to each side.
pub fn weighted_norms(f: &SampledSignal, weight: &CMat, split_at: f64) -> WeightedNorms {
    let g = weighted_density(f, weight);
    let h = f.spacing();
    let s = f.grid.nearest_index(split_at);
    let left = h * (g[..s].iter().sum::<f64>() + 0.5 * g[s]);
    let right = h * (0.5 * g[s] + g[s + 1..].iter().sum::<f64>());
    WeightedNorms { full: left + right, left, right }
}

/// Half-line integrals of ⟨W f, f⟩ split at node `s`, with the
/// Euler–Maclaurin endpoint terms h²/12·g′ − h⁴/720·g‴ estimated by
/// centered differences. The two halves still add up to the full sum.
pub fn corrected_half_norms(f: &SampledSignal, weight: &CMat, s: usize) -> WeightedNorms {
    let plain = weighted_norms(f, weight, f.grid.node(s));
    let g = weighted_density(f, weight);
    let h = f.spacing();
    if s < 3 || s + 3 >= g.len() {
        return plain;
    }
    let d1 = (-g[s + 2] + 8.0 * g[s + 1] - 8.0 * g[s - 1] + g[s - 2]) / (12.0 * h);
    let d3 = (-g[s + 3] + 8.0 * g[s + 2] - 13.0 * g[s + 1] + 13.0 * g[s - 1] - 8.0 * g[s - 2] + g[s - 3])
        / (8.0 * h * h * h);
    let corr = h * h / 12.0 * d1 - h.powi(4) / 720.0 * d3;
    WeightedNorms { full: plain.full, left: plain.left - corr, right: plain.right + corr }
}

/// ‖f‖²_{α(x)} on the left and right half-lines of the output of Λ(x,y).
fn transported_half_norms(
    pencil: &NormalizedPencil,
    x: &[f64],
    y: &[f64],
    f: &SampledSignal,
) -> Result<(WeightedNorms, TransportFlags)> {
    let grid = transport_grid(pencil, x, y, &f.grid);
    let out = lambda_op(pencil, x, y, f, &grid)?;
    let norms = corrected_half_norms(&out.signal, &pencil.alpha_at(x), grid.zero_index());
    Ok((norms, out.flags))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CausalResidual {
    /// Relative mismatch of the (−∞, 0] integrals.
    pub left: f64,
    /// Relative mismatch of the [0, ∞) integrals.
    pub right: f64,
    pub flags: TransportFlags,
}

impl CausalResidual {
    pub fn max(&self) -> f64 {
        self.left.max(self.right)
    }
}

/// Compares the α-weighted half-line energies of Λ(x,y)f and Λ(x′,y)f,
/// relative to ‖f‖².
pub fn causal_isometry_check(
    pencil: &NormalizedPencil,
    x: &[f64],
    x2: &[f64],
    y: &[f64],
    f: &SampledSignal,
) -> Result<CausalResidual> {
    let total = f.norm_sq();
    let (a, fa) = transported_half_norms(pencil, x, y, f)?;
    let (b, fb) = transported_half_norms(pencil, x2, y, f)?;
    let scale = if total > 0.0 { total } else { 1.0 };
    let flags = TransportFlags {
        aliasing_risk: fa.aliasing_risk || fb.aliasing_risk,
        alpha_not_positive: fa.alpha_not_positive || fb.alpha_not_positive,
        padding: fa.padding.max(fb.padding),
    };
    Ok(CausalResidual { left: (a.left - b.left).abs() / scale, right: (a.right - b.right).abs() / scale, flags })
}

/// |‖Λ(x,0)f‖²_{α(x)} − ‖f‖²| / ‖f‖².
pub fn transport_isometry_residual(pencil: &NormalizedPencil, x: &[f64], f: &SampledSignal) -> Result<f64> {
    let zero = vec![0.0; pencil.d()];
    let (n, _) = transported_half_norms(pencil, x, &zero, f)?;
    let total = f.norm_sq();
    Ok((n.full - total).abs() / if total > 0.0 { total } else { 1.0 })
}

/// u_f(t) = (1/√2π)·Σ_k Δs·e^{iΣ_j t_j(s_kα_j + β_j)}f̂(s_k), with the
/// transform zero-padded far enough that no periodic copy reaches t.
pub fn evaluate_field(pencil: &NormalizedPencil, f: &SampledSignal, t: &[f64]) -> Result<CVec> {
    pencil_check(pencil, f, t)?;
    let alpha = pencil.alpha_at(t);
    let beta = pencil.beta_at(t);
    let padded = f.zero_padded(padding_factor(op_norm(&alpha), f.grid.half_width));
    let fh = forward_fft(&padded);
    let mut acc = CVec::zeros(f.dim());
    for (k, v) in fh.values.iter().enumerate() {
        if v.iter().all(|z| *z == ZERO) {
            continue;
        }
        let e = unitary_exp(&(&alpha * c(padded.grid.freq(k), 0.0) + &beta));
        acc += e * v;
    }
    Ok(acc * c(padded.grid.freq_step() / (2.0 * PI).sqrt(), 0.0))
}

/// Batch field evaluation for commuting pencils: per frequency the
/// exponential factors as e^{it₁s}·Π_{j≥2} e^{it_j(sα_j+β_j)}, so one
/// eigendecomposition per coordinate serves every point.
pub struct FieldEvaluator {
    freqs: Vec<f64>,
    scale: f64,
    spectrum: Vec<CVec>,
    factors: Vec<Vec<(Vec<f64>, CMat)>>,
    active: Vec<usize>,
}

impl FieldEvaluator {
    /// `reach` bounds ‖α(t)‖ over the points that will be evaluated.
    pub fn new(pencil: &NormalizedPencil, f: &SampledSignal, reach: f64) -> Result<Self> {
        if pencil.dim_e() != f.dim() {
            return Err(SpectralError::DimensionMismatch(format!(
                "signal has dimension {}, pencil has {}",
                f.dim(),
                pencil.dim_e()
            )));
        }
        let padded = f.zero_padded(padding_factor(reach, f.grid.half_width));
        let fh = forward_fft(&padded);
        let freqs = padded.grid.freqs();
        let top = fh.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let active: Vec<usize> = (0..freqs.len()).filter(|&k| fh.values[k].norm() > NEGLIGIBLE * top).collect();
        let factors = active
            .iter()
            .map(|&k| {
                (1..pencil.d())
                    .map(|j| hermitian_eigen(&(&pencil.alpha[j] * c(freqs[k], 0.0) + &pencil.beta[j])))
                    .collect()
            })
            .collect();
        Ok(FieldEvaluator {
            freqs,
            scale: padded.grid.freq_step() / (2.0 * PI).sqrt(),
            spectrum: fh.values,
            factors,
            active,
        })
    }

    pub fn eval(&self, t: &[f64]) -> CVec {
        let m = self.spectrum.first().map(|v| v.len()).unwrap_or(0);
        let mut acc = CVec::zeros(m);
        for (slot, &k) in self.active.iter().enumerate() {
            let mut v = self.spectrum[k].clone() * C64::from_polar(1.0, t[0] * self.freqs[k]);
            for (j, (w, u)) in self.factors[slot].iter().enumerate() {
                let tj = t[j + 1];
                if tj == 0.0 {
                    continue;
                }
                let mut p = u.adjoint() * v;
                for (i, z) in p.iter_mut().enumerate() {
                    *z *= C64::from_polar(1.0, tj * w[i]);
                }
                v = u * p;
            }
            acc += v;
        }
        acc * c(self.scale, 0.0)
    }
}

/// Centered-difference residual max_j ‖D_j u − α_j D_1 u − iβ_j u‖ of the
/// field at `t0` with step `h`, relative to max(‖u(t0)‖, ‖f‖_∞).
pub fn field_pde_residual(pencil: &NormalizedPencil, f: &SampledSignal, t0: &[f64], h: f64) -> Result<f64> {
    let d = pencil.d();
    let reach: f64 = (0..d).map(|j| (t0[j].abs() + h) * op_norm(&pencil.alpha[j])).sum();
    let field = FieldEvaluator::new(pencil, f, reach)?;
    let at = |j: usize, sign: f64| {
        let mut p = t0.to_vec();
        p[j] += sign * h;
        field.eval(&p)
    };
    let u0 = field.eval(t0);
    let d1 = (at(0, 1.0) - at(0, -1.0)) / c(2.0 * h, 0.0);
    let mut worst: f64 = 0.0;
    for j in 1..d {
        let dj = (at(j, 1.0) - at(j, -1.0)) / c(2.0 * h, 0.0);
        let r = dj - &pencil.alpha[j] * &d1 - &pencil.beta[j] * &u0 * c(0.0, 1.0);
        worst = worst.max(r.norm());
    }
    let scale = f.values.iter().map(|v| v.norm()).fold(u0.norm(), f64::max);
    Ok(worst / if scale > 0.0 { scale } else { 1.0 })
}

/// Box and resolution of the slice pairing quadratures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceOptions {
    /// The test field must be negligible outside [−B, B]^d.
    pub half_width: f64,
    /// Nodes per axis of the box quadrature.
    pub points: usize,
}

impl Default for SliceOptions {
    fn default() -> Self {
        SliceOptions { half_width: 6.0, points: 64 }
    }
}

fn orthonormal_complement(xi: &[f64]) -> Vec<Vec<f64>> {
    let d = xi.len();
    let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut basis: Vec<Vec<f64>> = vec![xi.iter().map(|v| v / norm).collect()];
    for e in 0..d {
        if basis.len() == d {
            break;
        }
        let mut v = vec![0.0; d];
        v[e] = 1.0;
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(p, q)| p * q).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= dot * bi;
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-8 {
            basis.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    basis.remove(0);
    basis
}

fn midpoints(half_width: f64, count: usize) -> (Vec<f64>, f64) {
    let h = 2.0 * half_width / count as f64;
    ((0..count).map(|i| -half_width + (i as f64 + 0.5) * h).collect(), h)
}

fn lattice(axes: usize, nodes: &[f64]) -> Vec<Vec<f64>> {
    let mut out = vec![vec![]];
    for _ in 0..axes {
        out = out
            .into_iter()
            .flat_map(|p| {
                nodes.iter().map(move |&x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    out
}

fn inner(u: &CVec, psi: &CVec) -> C64 {
    psi.iter().zip(u.iter()).map(|(p, v)| p.conj() * v).sum()
}

/// Compares ⟨u_f, ψ⟩ computed by box quadrature of the field against the
/// iterated integral over offsets y ∈ ξ^⊥ of ∫⟨(Λ(ξ,y)f)(τ), ψ(τξ + y)⟩|ξ|dτ.
/// Returns the difference relative to ‖ψ‖.
pub fn slice_pairing_check(
    pencil: &NormalizedPencil,
    f: &SampledSignal,
    xi: &[f64],
    psi: &dyn Fn(&[f64]) -> CVec,
    opts: &SliceOptions,
) -> Result<f64> {
    let d = pencil.d();
    pencil_check(pencil, f, xi)?;
    let b = opts.half_width;
    let (box_nodes, h) = midpoints(b, opts.points);
    let reach: f64 = pencil.alpha.iter().map(|a| b * op_norm(a)).sum();
    let field = FieldEvaluator::new(pencil, f, reach)?;
    let mut direct = ZERO;
    let mut psi_sq = 0.0;
    for p in lattice(d, &box_nodes) {
        let q = psi(&p);
        psi_sq += q.norm_squared();
        if q.norm() == 0.0 {
            continue;
        }
        direct += inner(&field.eval(&p), &q);
    }
    let cell = h.powi(d as i32);
    direct *= cell;
    let psi_norm = (psi_sq * cell).sqrt();
    if psi_norm == 0.0 {
        return Ok(0.0);
    }

    let xi_norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    let radius = b * (d as f64).sqrt();
    let perp = orthonormal_complement(xi);
    let per_axis = ((2.0 * radius / h).ceil() as usize).max(1);
    let (offsets, hy) = midpoints(radius, per_axis);
    let tau_grid = GridSpec {
        n: ((2.0 * radius / h).ceil() as usize).next_power_of_two().max(2),
        half_width: radius / xi_norm,
    };
    let mut iterated = ZERO;
    for coords in lattice(d - 1, &offsets) {
        let mut y = vec![0.0; d];
        for (cq, e) in coords.iter().zip(&perp) {
            for (yi, ei) in y.iter_mut().zip(e) {
                *yi += cq * ei;
            }
        }
        let on_line: Vec<(usize, CVec)> = tau_grid
            .nodes()
            .into_iter()
            .enumerate()
            .filter_map(|(k, tau)| {
                let p: Vec<f64> = xi.iter().zip(&y).map(|(a, o)| tau * a + o).collect();
                let q = psi(&p);
                (q.norm() > 0.0).then_some((k, q))
            })
            .collect();
        if on_line.is_empty() {
            continue;
        }
        let line = lambda_op(pencil, xi, &y, f, &tau_grid)?;
        for (k, q) in on_line {
            iterated += inner(&line.signal.values[k], &q);
        }
    }
    iterated *= tau_grid.step() * xi_norm * hy.powi(d as i32 - 1);
    Ok((direct - iterated).norm() / psi_norm)
}
