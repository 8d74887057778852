//! Commutative operator vessels: construction, condition checks, coordinate
//! changes, the positivity cone, normalization and the Cayley cogenerator.

use thiserror::Error;

use crate::linalg::{
    c, commutator, fro, hermitian_defect, hermitian_eigen, hermitian_function, identity,
    inverse, kernel_basis, lambda_min, range_basis, real_combination, skew_part_over_i,
    smallest_singular_value, symmetrize, zeros, CMat, RMat, I,
};
use crate::report::ConditionReport;

/// Default tolerance for identity residuals.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Default slack for positive semidefiniteness.
pub const DEFAULT_PSD_TOL: f64 = 1e-12;
/// Default rank threshold for the non-Hermitian subspace.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VesselError {
    #[error("operators {j} and {k} do not commute (residual {residual:e})")]
    NonCommuting { j: usize, k: usize, residual: f64 },
    #[error("operator {j} is not dissipative (smallest eigenvalue of its imaginary part {lambda_min:e})")]
    NonDissipative { j: usize, lambda_min: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("sigma in the chosen direction is singular (smallest singular value {smallest:e}, norm {scale:e})")]
    SingularSigma { smallest: f64, scale: f64 },
    #[error("coordinate change is singular (det {det:e})")]
    SingularTransform { det: f64 },
    #[error("direction is not in the positivity cone (margin {margin:e})")]
    NotInCone { margin: f64 },
    #[error("precondition `{condition}` violated (residual {residual:e})")]
    PreconditionResidual { condition: String, residual: f64 },
    #[error("A + iI is numerically singular")]
    SingularShift,
}

pub type Result<T> = std::result::Result<T, VesselError>;

/// Antisymmetric table of matrices indexed by pairs; only j < k is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct PairTable {
    d: usize,
    m: usize,
    upper: Vec<CMat>,
}

impl PairTable {
    pub fn zeros(d: usize, m: usize) -> Self {
        let count = d * d.saturating_sub(1) / 2;
        PairTable { d, m, upper: vec![zeros(m, m); count] }
    }

    fn slot(&self, j: usize, k: usize) -> usize {
        debug_assert!(j < k && k < self.d);
        j * (2 * self.d - j - 1) / 2 + (k - j - 1)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    /// Entry (j, k); the diagonal is zero and the lower triangle is the
    /// negated upper entry.
    pub fn get(&self, j: usize, k: usize) -> CMat {
        use std::cmp::Ordering::*;
        match j.cmp(&k) {
            Equal => zeros(self.m, self.m),
            Less => self.upper[self.slot(j, k)].clone(),
            Greater => -self.upper[self.slot(k, j)].clone(),
        }
    }

    pub fn upper(&self, j: usize, k: usize) -> &CMat {
        &self.upper[self.slot(j, k)]
    }

    /// Sets entry (j, k) (and implicitly (k, j) = −value).
    pub fn set(&mut self, j: usize, k: usize, value: CMat) {
        assert_ne!(j, k, "diagonal of an antisymmetric table is fixed at zero");
        if j < k {
            let s = self.slot(j, k);
            self.upper[s] = value;
        } else {
            let s = self.slot(k, j);
            self.upper[s] = -value;
        }
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let d = self.d;
        (0..d).flat_map(move |j| (j + 1..d).map(move |k| (j, k)))
    }

    pub fn map(&self, f: impl Fn(&CMat) -> CMat) -> PairTable {
        PairTable { d: self.d, m: self.m, upper: self.upper.iter().map(f).collect() }
    }
}

/// A tuple of commuting matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct CommutingTuple {
    pub a: Vec<CMat>,
}

impl CommutingTuple {
    pub fn new(a: Vec<CMat>) -> Result<Self> {
        if a.is_empty() {
            return Err(VesselError::DimensionMismatch("empty operator tuple".into()));
        }
        let n = a[0].nrows();
        for (j, m) in a.iter().enumerate() {
            if m.nrows() != n || m.ncols() != n {
                return Err(VesselError::DimensionMismatch(format!(
                    "A[{}] is {}x{}, expected {n}x{n}",
                    j + 1,
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        Ok(CommutingTuple { a })
    }

    pub fn d(&self) -> usize {
        self.a.len()
    }

    pub fn dim_h(&self) -> usize {
        self.a[0].nrows()
    }

    /// Checks pairwise commutativity and dissipativity.
    pub fn validate(&self, tol_commute: f64, tol_psd: f64) -> Result<()> {
        let d = self.d();
        for j in 0..d {
            for k in j + 1..d {
                let r = fro(&commutator(&self.a[j], &self.a[k]));
                if r > tol_commute * f64::max(1.0, fro(&self.a[j]) * fro(&self.a[k])) {
                    return Err(VesselError::NonCommuting { j: j + 1, k: k + 1, residual: r });
                }
            }
        }
        for (j, a) in self.a.iter().enumerate() {
            let lm = lambda_min(&skew_part_over_i(a));
            if lm < -tol_psd * f64::max(1.0, fro(a)) {
                return Err(VesselError::NonDissipative { j: j + 1, lambda_min: lm });
            }
        }
        Ok(())
    }

    pub fn combination(&self, xi: &[f64]) -> CMat {
        let n = self.dim_h();
        real_combination(xi, &self.a, n, n)
    }
}

/// Vessel data (A_j, Φ, σ_j, γ_jk, γ*_jk) on finite-dimensional spaces.
#[derive(Debug, Clone, PartialEq)]
pub struct Vessel {
    pub a: Vec<CMat>,
    /// Φ : H → ℰ, an m×n matrix.
    pub phi: CMat,
    pub sigma: Vec<CMat>,
    pub gamma: PairTable,
    pub gamma_star: PairTable,
    /// Set when the signal space is empty (every A_j selfadjoint).
    pub degenerate: bool,
}

impl Vessel {
    pub fn d(&self) -> usize {
        self.a.len()
    }

    pub fn dim_h(&self) -> usize {
        self.phi.ncols()
    }

    pub fn dim_e(&self) -> usize {
        self.phi.nrows()
    }

    pub fn sigma_at(&self, xi: &[f64]) -> CMat {
        let m = self.dim_e();
        real_combination(xi, &self.sigma, m, m)
    }

    pub fn a_at(&self, xi: &[f64]) -> CMat {
        let n = self.dim_h();
        real_combination(xi, &self.a, n, n)
    }

    pub fn tuple(&self) -> CommutingTuple {
        CommutingTuple { a: self.a.clone() }
    }

    pub fn check_dimensions(&self) -> Result<()> {
        let d = self.d();
        let n = self.dim_h();
        let m = self.dim_e();
        let bad = |what: String| Err(VesselError::DimensionMismatch(what));
        if d == 0 {
            return bad("vessel without operators".into());
        }
        if self.sigma.len() != d {
            return bad(format!("{} sigma matrices for d = {d}", self.sigma.len()));
        }
        for (j, a) in self.a.iter().enumerate() {
            if a.shape() != (n, n) {
                return bad(format!("A[{}] has shape {:?}, expected ({n}, {n})", j + 1, a.shape()));
            }
        }
        for (j, s) in self.sigma.iter().enumerate() {
            if s.shape() != (m, m) {
                return bad(format!("sigma[{}] has shape {:?}, expected ({m}, {m})", j + 1, s.shape()));
            }
        }
        for table in [&self.gamma, &self.gamma_star] {
            if table.d() != d || table.dim() != m {
                return bad("gamma table size does not match".into());
            }
            for (j, k) in table.pairs() {
                if table.upper(j, k).shape() != (m, m) {
                    return bad(format!("gamma({},{}) has the wrong shape", j + 1, k + 1));
                }
            }
        }
        Ok(())
    }
}

/// σ₁-normalized pencil data α_j, β_j with α_1 = I and β_1 = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedPencil {
    pub alpha: Vec<CMat>,
    pub beta: Vec<CMat>,
    pub origin_direction: Vec<f64>,
}

impl NormalizedPencil {
    /// Builds a pencil from α_2.., β_2.. and inserts α_1 = I, β_1 = 0.
    pub fn from_tail(m: usize, alpha_tail: Vec<CMat>, beta_tail: Vec<CMat>) -> Self {
        assert_eq!(alpha_tail.len(), beta_tail.len());
        let mut alpha = vec![identity(m)];
        alpha.extend(alpha_tail);
        let mut beta = vec![zeros(m, m)];
        beta.extend(beta_tail);
        let d = alpha.len();
        let mut origin = vec![0.0; d];
        origin[0] = 1.0;
        NormalizedPencil { alpha, beta, origin_direction: origin }
    }

    /// Input pencil of a vessel whose σ₁ is the identity: β_j = γ_1j.
    pub fn input_of(v: &Vessel) -> Self {
        Self::of_table(v, &v.gamma)
    }

    /// Output pencil of a vessel whose σ₁ is the identity: β*_j = γ*_1j.
    pub fn output_of(v: &Vessel) -> Self {
        Self::of_table(v, &v.gamma_star)
    }

    fn of_table(v: &Vessel, table: &PairTable) -> Self {
        let d = v.d();
        let m = v.dim_e();
        let mut alpha = vec![identity(m)];
        let mut beta = vec![zeros(m, m)];
        for j in 1..d {
            alpha.push(v.sigma[j].clone());
            beta.push(table.upper(0, j).clone());
        }
        let mut origin = vec![0.0; d];
        origin[0] = 1.0;
        NormalizedPencil { alpha, beta, origin_direction: origin }
    }

    pub fn d(&self) -> usize {
        self.alpha.len()
    }

    pub fn dim_e(&self) -> usize {
        self.alpha.first().map(|a| a.nrows()).unwrap_or(0)
    }

    pub fn alpha_at(&self, x: &[f64]) -> CMat {
        let m = self.dim_e();
        real_combination(x, &self.alpha, m, m)
    }

    pub fn beta_at(&self, x: &[f64]) -> CMat {
        let m = self.dim_e();
        real_combination(x, &self.beta, m, m)
    }

    /// s·α(x) + β(x).
    pub fn at(&self, s: f64, x: &[f64]) -> CMat {
        self.alpha_at(x) * c(s, 0.0) + self.beta_at(x)
    }

    /// Largest commutator norm ‖[sα_j + β_j, sα_k + β_k]‖ over sampled s.
    pub fn commutativity_residual(&self) -> f64 {
        let d = self.d();
        let mut worst: f64 = 0.0;
        for &s in &[0.0, 1.0, -1.0, 0.618_033_988_749_895] {
            for j in 0..d {
                for k in j + 1..d {
                    let pj = &self.alpha[j] * c(s, 0.0) + &self.beta[j];
                    let pk = &self.alpha[k] * c(s, 0.0) + &self.beta[k];
                    worst = worst.max(fro(&commutator(&pj, &pk)));
                }
            }
        }
        worst
    }

    /// Invariant checks: exact α_1 = I and β_1 = 0, Hermiticity, and
    /// commutativity of the pencils.
    pub fn validate(&self, tol: f64) -> ConditionReport {
        let m = self.dim_e();
        let mut report = ConditionReport::new();
        let head = fro(&(&self.alpha[0] - identity(m))) + fro(&self.beta[0]);
        report.push("normalized first coefficients", head, 0.0);
        for j in 0..self.d() {
            report.push(
                format!("hermitian alpha[{}]", j + 1),
                hermitian_defect(&self.alpha[j]),
                tol * f64::max(1.0, fro(&self.alpha[j])),
            );
            report.push(
                format!("hermitian beta[{}]", j + 1),
                hermitian_defect(&self.beta[j]),
                tol * f64::max(1.0, fro(&self.beta[j])),
            );
        }
        let scale = self
            .alpha
            .iter()
            .chain(self.beta.iter())
            .map(fro)
            .fold(1.0, f64::max);
        report.push("pencil commutativity", self.commutativity_residual(), tol * scale * scale);
        report
    }
}

/// Strict embedding of a commuting dissipative tuple: ℰ is the span of the
/// ranges of (A_j − A_j*)/i.
pub fn make_strict_vessel(tuple: &CommutingTuple, rank_tol: f64) -> Result<Vessel> {
    tuple.validate(DEFAULT_TOL, DEFAULT_PSD_TOL)?;
    let d = tuple.d();
    let n = tuple.dim_h();
    let parts: Vec<CMat> = tuple.a.iter().map(skew_part_over_i).collect();
    let mut stacked = zeros(n, d * n);
    for (j, p) in parts.iter().enumerate() {
        stacked.view_mut((0, j * n), (n, n)).copy_from(p);
    }
    let mut basis = range_basis(&stacked, rank_tol);
    if basis.ncols() == n {
        basis = identity(n);
    }
    let m = basis.ncols();
    let phi = basis.adjoint();
    let compress = |x: &CMat| symmetrize(&(&phi * x * &basis));
    let sigma: Vec<CMat> = parts.iter().map(compress).collect();
    let mut gamma = PairTable::zeros(d, m);
    let mut gamma_star = PairTable::zeros(d, m);
    for j in 0..d {
        for k in j + 1..d {
            let (aj, ak) = (&tuple.a[j], &tuple.a[k]);
            let g = (aj * ak.adjoint() - ak * aj.adjoint()) * (-I);
            let gs = (ak.adjoint() * aj - aj.adjoint() * ak) * (-I);
            gamma.set(j, k, compress(&g));
            gamma_star.set(j, k, compress(&gs));
        }
    }
    Ok(Vessel {
        a: tuple.a.clone(),
        phi,
        sigma,
        gamma,
        gamma_star,
        degenerate: m == 0,
    })
}

/// Residuals of all vessel identities.
pub fn check_vessel(v: &Vessel, tol: f64) -> Result<ConditionReport> {
    v.check_dimensions()?;
    let d = v.d();
    let phi = &v.phi;
    let phi_adj = phi.adjoint();
    let nphi = fro(phi);
    let mut report = ConditionReport::new();
    if v.degenerate {
        report.note("empty signal space: vessel conditions hold vacuously");
    }
    for j in 0..d {
        report.push(
            format!("hermitian sigma[{}]", j + 1),
            hermitian_defect(&v.sigma[j]),
            tol * f64::max(1.0, fro(&v.sigma[j])),
        );
    }
    for (j, k) in v.gamma.pairs() {
        let g = v.gamma.upper(j, k);
        let gs = v.gamma_star.upper(j, k);
        report.push(
            format!("hermitian gamma({},{})", j + 1, k + 1),
            hermitian_defect(g),
            tol * f64::max(1.0, fro(g)),
        );
        report.push(
            format!("hermitian gamma_star({},{})", j + 1, k + 1),
            hermitian_defect(gs),
            tol * f64::max(1.0, fro(gs)),
        );
    }
    report.push_with_note("antisymmetry", 0.0, tol, "exact by storage");
    for j in 0..d {
        for k in j + 1..d {
            report.push(
                format!("commutativity ({},{})", j + 1, k + 1),
                fro(&commutator(&v.a[j], &v.a[k])),
                tol * f64::max(1.0, fro(&v.a[j]) * fro(&v.a[k])),
            );
        }
    }
    for j in 0..d {
        let a = &v.a[j];
        let r = a - a.adjoint() - &phi_adj * &v.sigma[j] * phi * I;
        report.push(
            format!("colligation[{}]", j + 1),
            fro(&r),
            tol * f64::max(1.0, 2.0 * fro(a) + nphi * nphi * fro(&v.sigma[j])),
        );
    }
    for (j, k) in v.gamma.pairs() {
        let (sj, sk) = (&v.sigma[j], &v.sigma[k]);
        let (aj, ak) = (&v.a[j], &v.a[k]);
        let g = v.gamma.upper(j, k);
        let gs = v.gamma_star.upper(j, k);
        let base = nphi * (fro(sj) * fro(ak) + fro(sk) * fro(aj));
        let input = sj * phi * ak.adjoint() - sk * phi * aj.adjoint() - g * phi;
        report.push(
            format!("input vessel condition ({},{})", j + 1, k + 1),
            fro(&input),
            tol * f64::max(1.0, base + fro(g) * nphi),
        );
        let output = sj * phi * ak - sk * phi * aj - gs * phi;
        report.push(
            format!("output vessel condition ({},{})", j + 1, k + 1),
            fro(&output),
            tol * f64::max(1.0, base + fro(gs) * nphi),
        );
        let cross = sj * phi * &phi_adj * sk - sk * phi * &phi_adj * sj;
        let link = gs - g - cross * I;
        report.push(
            format!("linkage ({},{})", j + 1, k + 1),
            fro(&link),
            tol * f64::max(1.0, fro(g) + fro(gs) + 2.0 * nphi * nphi * fro(sj) * fro(sk)),
        );
    }
    Ok(report)
}

/// Direction selector for VR checks.
#[derive(Debug, Clone, PartialEq)]
pub enum Direction {
    /// Coordinate axis, zero-based.
    Axis(usize),
    Vector(Vec<f64>),
}

impl Direction {
    pub fn vector(&self, d: usize) -> Vec<f64> {
        match self {
            Direction::Axis(j) => {
                let mut e = vec![0.0; d];
                e[*j] = 1.0;
                e
            }
            Direction::Vector(x) => x.clone(),
        }
    }
}

/// Invertible T whose first column is ξ; the other columns are standard
/// basis vectors, omitting the one where |ξ_p| is largest.
pub fn direction_transform(xi: &[f64]) -> RMat {
    let d = xi.len();
    let mut p = 0;
    for (q, x) in xi.iter().enumerate() {
        if x.abs() > xi[p].abs() {
            p = q;
        }
    }
    let mut t = RMat::zeros(d, d);
    for (q, x) in xi.iter().enumerate() {
        t[(q, 0)] = *x;
    }
    let mut col = 1;
    for q in 0..d {
        if q != p {
            t[(q, col)] = 1.0;
            col += 1;
        }
    }
    t
}

fn is_identity(t: &RMat) -> bool {
    t.is_square() && (0..t.nrows()).all(|i| (0..t.ncols()).all(|j| t[(i, j)] == if i == j { 1.0 } else { 0.0 }))
}

/// The coordinate-changed vessel 𝔙^T.
pub fn coordinate_change(v: &Vessel, t: &RMat) -> Result<Vessel> {
    let d = v.d();
    if t.shape() != (d, d) {
        return Err(VesselError::DimensionMismatch(format!(
            "transform is {:?}, expected ({d}, {d})",
            t.shape()
        )));
    }
    let det = t.determinant();
    if !(det.abs() > 1e-12) {
        return Err(VesselError::SingularTransform { det });
    }
    if is_identity(t) {
        return Ok(v.clone());
    }
    let n = v.dim_h();
    let m = v.dim_e();
    let col = |j: usize| (0..d).map(|i| t[(i, j)]).collect::<Vec<f64>>();
    let a = (0..d).map(|j| real_combination(&col(j), &v.a, n, n)).collect();
    let sigma = (0..d).map(|j| real_combination(&col(j), &v.sigma, m, m)).collect();
    let wedge = |table: &PairTable| {
        let mut out = PairTable::zeros(d, m);
        for (j, k) in table.pairs() {
            let mut acc = zeros(m, m);
            for (p, q) in table.pairs() {
                let w = t[(p, j)] * t[(q, k)] - t[(p, k)] * t[(q, j)];
                if w != 0.0 {
                    acc += table.upper(p, q) * c(w, 0.0);
                }
            }
            out.set(j, k, acc);
        }
        out
    };
    Ok(Vessel {
        a,
        phi: v.phi.clone(),
        sigma,
        gamma: wedge(&v.gamma),
        gamma_star: wedge(&v.gamma_star),
        degenerate: v.degenerate,
    })
}

/// The adjoint vessel (−Φ, A*, −σ) with γ and γ* exchanged and negated.
pub fn adjoint_vessel(v: &Vessel) -> Vessel {
    Vessel {
        a: v.a.iter().map(|a| a.adjoint()).collect(),
        phi: -v.phi.clone(),
        sigma: v.sigma.iter().map(|s| -s.clone()).collect(),
        gamma: v.gamma_star.map(|g| -g.clone()),
        gamma_star: v.gamma.map(|g| -g.clone()),
        degenerate: v.degenerate,
    }
}

fn oriented(v: &Vessel, dir: &Direction) -> Result<Vessel> {
    let d = v.d();
    match dir {
        Direction::Axis(0) => Ok(v.clone()),
        Direction::Axis(j) if *j >= d => Err(VesselError::DimensionMismatch(format!(
            "axis {} out of range for d = {d}",
            j + 1
        ))),
        Direction::Vector(x) if x.len() != d => Err(VesselError::DimensionMismatch(format!(
            "direction has {} entries, expected {d}",
            x.len()
        ))),
        _ => coordinate_change(v, &direction_transform(&dir.vector(d))),
    }
}

fn vr_report(v: &Vessel, dir: &Direction, tol: f64, output_side: bool) -> Result<ConditionReport> {
    v.check_dimensions()?;
    let w = oriented(v, dir)?;
    let d = w.d();
    let m = w.dim_e();
    let mut report = ConditionReport::new();
    if m == 0 {
        report.note("empty signal space: conditions hold vacuously");
        return Ok(report);
    }
    let s1 = &w.sigma[0];
    let scale = fro(s1);
    let smallest = smallest_singular_value(s1);
    if !(smallest > tol * scale) || scale == 0.0 {
        return Err(VesselError::SingularSigma { smallest, scale });
    }
    if d <= 2 {
        report.note("no index pairs j,k >= 2: conditions hold vacuously");
        return Ok(report);
    }
    let inv = inverse(s1).ok_or(VesselError::SingularSigma { smallest, scale })?;
    let ninv = fro(&inv);
    let table = if output_side { &w.gamma_star } else { &w.gamma };
    let tag = if output_side { "VR*" } else { "VR" };
    let alpha: Vec<CMat> = w.sigma.iter().map(|s| &inv * s).collect();
    let beta: Vec<CMat> = (0..d).map(|j| if j == 0 { zeros(m, m) } else { &inv * table.upper(0, j) }).collect();
    for j in 1..d {
        for k in j + 1..d {
            let label = format!("({},{})", j + 1, k + 1);
            let (aj, ak, bj, bk) = (&alpha[j], &alpha[k], &beta[j], &beta[k]);
            report.push(
                format!("{tag} alpha commutation {label}"),
                fro(&commutator(aj, ak)),
                tol * f64::max(1.0, fro(aj) * fro(ak)),
            );
            report.push(
                format!("{tag} beta commutation {label}"),
                fro(&commutator(bj, bk)),
                tol * f64::max(1.0, fro(bj) * fro(bk)),
            );
            let mixed = commutator(ak, bj) - commutator(aj, bk);
            let mixed_scale = 2.0 * (fro(ak) * fro(bj) + fro(aj) * fro(bk));
            let (sj, sk) = (&w.sigma[j], &w.sigma[k]);
            let (g1j, g1k) = (table.upper(0, j), table.upper(0, k));
            let gjk = table.upper(j, k);
            let elim = gjk - (sj * &inv * g1k - sk * &inv * g1j);
            let elim_tol = tol * f64::max(1.0, fro(gjk) + ninv * (fro(sj) * fro(g1k) + fro(sk) * fro(g1j)));
            let elim_res = fro(&elim);
            let mixed_note = if elim_res <= elim_tol {
                Some("redundant: implied by the elimination condition".to_string())
            } else {
                None
            };
            report.push_entry(
                format!("{tag} mixed commutation {label}"),
                fro(&mixed),
                tol * f64::max(1.0, mixed_scale),
                mixed_note,
            );
            report.push(format!("{tag} elimination {label}"), elim_res, elim_tol);
        }
    }
    Ok(report)
}

/// VR conditions in the given direction.
pub fn check_vr(v: &Vessel, dir: &Direction, tol: f64) -> Result<ConditionReport> {
    vr_report(v, dir, tol, false)
}

/// Output-side VR conditions (γ replaced by γ*), direction e₁.
pub fn check_vr_star(v: &Vessel, tol: f64) -> Result<ConditionReport> {
    vr_report(v, &Direction::Axis(0), tol, true)
}

/// Output-side VR conditions in a chosen direction.
pub fn check_vr_star_in(v: &Vessel, dir: &Direction, tol: f64) -> Result<ConditionReport> {
    vr_report(v, dir, tol, true)
}

/// λ_min(σ(ξ)); ξ lies in the positivity cone iff the result is positive.
pub fn pos_cone_margin(v: &Vessel, xi: &[f64]) -> f64 {
    if v.dim_e() == 0 {
        return f64::INFINITY;
    }
    lambda_min(&v.sigma_at(xi))
}

/// Reports the VR conditions together with cone membership of 𝟙 and
/// closure membership of each coordinate axis.
pub fn dissipative_embedding_report(v: &Vessel, tol: f64) -> ConditionReport {
    let d = v.d();
    let mut report = ConditionReport::new();
    let ones = vec![1.0; d];
    let direction = if v.dim_e() > 0 && smallest_singular_value(&v.sigma_at(&ones)) > tol * fro(&v.sigma_at(&ones)) {
        Direction::Vector(ones.clone())
    } else {
        Direction::Axis(0)
    };
    match check_vr(v, &direction, tol) {
        Ok(vr) => report.extend(vr),
        Err(e) => report.push_entry("VR", f64::INFINITY, tol, Some(e.to_string())),
    }
    let scale = v.sigma.iter().map(fro).fold(1.0, f64::max);
    let margin = pos_cone_margin(v, &ones);
    report.push_entry(
        "cone margin at (1,...,1)",
        -margin,
        -tol * scale,
        Some(format!("margin {margin:e}")),
    );
    for j in 0..d {
        let mut worst = f64::INFINITY;
        let mut ratios = Vec::new();
        for eps in [1e-2, 1e-4, 1e-6] {
            let mut xi = vec![eps; d];
            xi[j] += 1.0;
            let mg = pos_cone_margin(v, &xi);
            worst = worst.min(mg);
            ratios.push(mg / eps);
        }
        let boundary = ratios.windows(2).all(|w| (w[0] - w[1]).abs() <= 1e-3 * w[0].abs().max(1e-300))
            && ratios.iter().all(|r| *r > 0.0);
        let note = if worst > 0.0 && boundary {
            format!("margin vanishes linearly in eps: e{} lies on the cone boundary", j + 1)
        } else if worst > 0.0 {
            format!("e{} lies in the closure of the cone", j + 1)
        } else {
            format!("e{} is not in the closure of the cone (margin {worst:e})", j + 1)
        };
        report.push_entry(
            format!("e{} in closure of cone", j + 1),
            -worst,
            -1e-6 * tol * scale,
            Some(note),
        );
    }
    report
}

/// Moves ξ0 to e₁ and rescales ℰ so that σ₁ becomes the identity.
/// The coordinate change applied is [`normalizing_transform`] (original
/// times t relate to normalized ones by t = T·t′).
pub fn normalize(v: &Vessel, xi0: &[f64], tol: f64) -> Result<(Vessel, NormalizedPencil)> {
    v.check_dimensions()?;
    let d = v.d();
    if xi0.len() != d {
        return Err(VesselError::DimensionMismatch(format!(
            "direction has {} entries, expected {d}",
            xi0.len()
        )));
    }
    let g0 = v.sigma_at(xi0);
    let margin = pos_cone_margin(v, xi0);
    if !(margin > tol * f64::max(1.0, fro(&g0))) {
        return Err(VesselError::NotInCone { margin });
    }
    let t = direction_transform(xi0);
    let w = coordinate_change(v, &t)?;
    let m = w.dim_e();
    let g = &w.sigma[0];
    let floor = tol * f64::max(1.0, fro(g));
    let half = hermitian_function(g, |x| x.max(floor).sqrt());
    let inv_half = hermitian_function(g, |x| 1.0 / x.max(floor).sqrt());
    let conj = |x: &CMat| symmetrize(&(&inv_half * x * &inv_half));
    let mut sigma: Vec<CMat> = w.sigma.iter().map(conj).collect();
    sigma[0] = identity(m);
    let out = Vessel {
        a: w.a.clone(),
        phi: &half * &w.phi,
        sigma,
        gamma: w.gamma.map(conj),
        gamma_star: w.gamma_star.map(conj),
        degenerate: w.degenerate,
    };
    let mut pencil = NormalizedPencil::input_of(&out);
    pencil.origin_direction = xi0.to_vec();
    Ok((out, pencil))
}

/// The coordinate change used by [`normalize`] for the direction ξ0.
pub fn normalizing_transform(xi0: &[f64]) -> RMat {
    direction_transform(xi0)
}

/// Fills γ_jk from the elimination identity and γ*_jk from the linkage
/// condition, given A, Φ, σ and γ_1j.
pub fn complete_partial_vessel(
    tuple: &CommutingTuple,
    phi: &CMat,
    sigma: &[CMat],
    gamma_1j: &[CMat],
    tol: f64,
) -> Result<Vessel> {
    let d = tuple.d();
    let n = tuple.dim_h();
    let m = phi.nrows();
    if phi.ncols() != n || sigma.len() != d || gamma_1j.len() + 1 != d {
        return Err(VesselError::DimensionMismatch("partial vessel data sizes do not match".into()));
    }
    let s1 = &sigma[0];
    let scale = fro(s1);
    let smallest = smallest_singular_value(s1);
    if m == 0 || !(smallest > tol * scale) {
        return Err(VesselError::SingularSigma { smallest, scale });
    }
    let inv = inverse(s1).ok_or(VesselError::SingularSigma { smallest, scale })?;
    let phi_adj = phi.adjoint();
    let nphi = fro(phi);
    let fail = |condition: String, residual: f64| Err(VesselError::PreconditionResidual { condition, residual });
    for j in 0..d {
        let a = &tuple.a[j];
        let r = fro(&(a - a.adjoint() - &phi_adj * &sigma[j] * phi * I));
        if r > tol * f64::max(1.0, 2.0 * fro(a) + nphi * nphi * fro(&sigma[j])) {
            return fail(format!("colligation[{}]", j + 1), r);
        }
    }
    for j in 1..d {
        let g = &gamma_1j[j - 1];
        let (a1, aj) = (&tuple.a[0], &tuple.a[j]);
        let r = fro(&(&sigma[0] * phi * aj.adjoint() - &sigma[j] * phi * a1.adjoint() - g * phi));
        let base = nphi * (fro(&sigma[0]) * fro(aj) + fro(&sigma[j]) * fro(a1) + fro(g));
        if r > tol * f64::max(1.0, base) {
            return fail(format!("input vessel condition (1,{})", j + 1), r);
        }
    }
    let alpha: Vec<CMat> = sigma.iter().map(|s| &inv * s).collect();
    let beta: Vec<CMat> = gamma_1j.iter().map(|g| &inv * g).collect();
    for j in 1..d {
        for k in j + 1..d {
            let (aj, ak, bj, bk) = (&alpha[j], &alpha[k], &beta[j - 1], &beta[k - 1]);
            let checks = [
                ("alpha commutation", fro(&commutator(aj, ak)), fro(aj) * fro(ak)),
                ("beta commutation", fro(&commutator(bj, bk)), fro(bj) * fro(bk)),
                (
                    "mixed commutation",
                    fro(&(commutator(ak, bj) - commutator(aj, bk))),
                    2.0 * (fro(ak) * fro(bj) + fro(aj) * fro(bk)),
                ),
            ];
            for (name, r, s) in checks {
                if r > tol * f64::max(1.0, s) {
                    return fail(format!("{name} ({},{})", j + 1, k + 1), r);
                }
            }
        }
    }
    let mut gamma = PairTable::zeros(d, m);
    for j in 1..d {
        gamma.set(0, j, gamma_1j[j - 1].clone());
    }
    for j in 1..d {
        for k in j + 1..d {
            let g = &sigma[j] * &inv * &gamma_1j[k - 1] - &sigma[k] * &inv * &gamma_1j[j - 1];
            gamma.set(j, k, symmetrize(&g));
        }
    }
    let mut gamma_star = PairTable::zeros(d, m);
    for (j, k) in gamma.pairs() {
        let cross = &sigma[j] * phi * &phi_adj * &sigma[k] - &sigma[k] * phi * &phi_adj * &sigma[j];
        gamma_star.set(j, k, gamma.upper(j, k) + cross * I);
    }
    Ok(Vessel {
        a: tuple.a.clone(),
        phi: phi.clone(),
        sigma: sigma.to_vec(),
        gamma,
        gamma_star,
        degenerate: false,
    })
}

/// Common kernel W of Φ*σ_j.
#[derive(Debug, Clone)]
pub struct WeakStrictness {
    pub weakly_strict: bool,
    /// Orthonormal basis of W as columns (m × dim W).
    pub kernel: CMat,
}

pub fn weakly_strict_report(v: &Vessel, tol: f64) -> WeakStrictness {
    let d = v.d();
    let n = v.dim_h();
    let m = v.dim_e();
    let phi_adj = v.phi.adjoint();
    let mut stacked = zeros(d * n, m);
    for j in 0..d {
        stacked.view_mut((j * n, 0), (n, m)).copy_from(&(&phi_adj * &v.sigma[j]));
    }
    let kernel = kernel_basis(&stacked, tol, 0.0);
    WeakStrictness { weakly_strict: kernel.ncols() == 0, kernel }
}

/// Cayley transform T = (A − iI)(A + iI)⁻¹.
pub fn cayley_cogenerator(a: &CMat) -> Result<CMat> {
    let n = a.nrows();
    let shifted = a + identity(n) * I;
    if smallest_singular_value(&shifted) <= 1e-14 * f64::max(1.0, fro(a)) {
        return Err(VesselError::SingularShift);
    }
    let inv = inverse(&shifted).ok_or(VesselError::SingularShift)?;
    Ok((a - identity(n) * I) * inv)
}

/// φ_s(C) = (C − (1 − s)I)(C − (1 + s)I)⁻¹.
pub fn cayley_phi(cmat: &CMat, s: f64) -> Option<CMat> {
    let n = cmat.nrows();
    let num = cmat - identity(n) * c(1.0 - s, 0.0);
    let den = cmat - identity(n) * c(1.0 + s, 0.0);
    inverse(&den).map(|inv| num * inv)
}

/// Distance ‖φ_s(e^{isA}) − T‖₂.
pub fn cayley_diagnostic(a: &CMat, s: f64) -> Result<f64> {
    let t = cayley_cogenerator(a)?;
    let semigroup = crate::linalg::expm(&(a * c(0.0, s)));
    let approx = cayley_phi(&semigroup, s).ok_or(VesselError::SingularShift)?;
    Ok(crate::linalg::op_norm(&(approx - t)))
}

/// Eigenvalues of the Hermitian matrix σ(ξ), ascending.
pub fn sigma_spectrum(v: &Vessel, xi: &[f64]) -> Vec<f64> {
    hermitian_eigen(&v.sigma_at(xi)).0
}
