//! Power-series solutions of the input compatibility system.
//!
//! Coefficients are stored as derivative data, a(n) = ∂ⁿu(0), so that the
//! compatibility system becomes the exact recurrence
//! σ_k a(n+e_j) − σ_j a(n+e_k) + iγ_jk a(n) = 0 and the solution is
//! evaluated as Σ a(n) tⁿ / n!.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::linalg::{c, op_norm, zeros, CMat, CVec, I};
use crate::vessel::{NormalizedPencil, Vessel};

pub type MultiIndex = Vec<usize>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeriesError {
    #[error("degree {degree} needs initial coefficients b(0..={degree}), only {available} given")]
    InsufficientInitialData { degree: usize, available: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("point outside the safe evaluation box (coordinate {index}: |t| = {value:e} > {limit:e})")]
    OutsideDomain { index: usize, value: f64, limit: f64 },
}

pub type Result<T> = std::result::Result<T, SeriesError>;

/// All multi-indices of length `d` with |n| ≤ `max_total`, ordered by total
/// degree then lexicographically.
pub fn multi_indices(d: usize, max_total: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for total in 0..=max_total {
        let mut current = vec![0; d];
        fill(&mut out, &mut current, 0, total);
    }
    out
}

fn fill(out: &mut Vec<MultiIndex>, current: &mut MultiIndex, pos: usize, remaining: usize) {
    let d = current.len();
    if d == 0 {
        if remaining == 0 {
            out.push(current.clone());
        }
        return;
    }
    if pos == d - 1 {
        current[pos] = remaining;
        out.push(current.clone());
        current[pos] = 0;
        return;
    }
    for k in (0..=remaining).rev() {
        current[pos] = k;
        fill(out, current, pos + 1, remaining - k);
    }
    current[pos] = 0;
}

pub fn key(n: &[usize]) -> String {
    n.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(",")
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Axis data b(k) = ∂^k f(0) with optional analytic witnesses: radius R and
/// a bound M with ‖b(k)‖ ≤ M r^{−k}.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticInitialData {
    pub b: Vec<CVec>,
    pub radius: Option<f64>,
    pub bound: Option<f64>,
}

impl AnalyticInitialData {
    pub fn new(b: Vec<CVec>) -> Self {
        AnalyticInitialData { b, radius: None, bound: None }
    }

    /// b(k) = ξ / ρ^k, which obeys ‖b(k)‖ ≤ ‖ξ‖ r^{−k} for every r ≤ ρ.
    pub fn geometric(xi: &CVec, ratio: f64, count: usize) -> Self {
        let b = (0..count).map(|k| xi * c(ratio.powi(-(k as i32)), 0.0)).collect();
        AnalyticInitialData { b, radius: Some(ratio), bound: Some(xi.norm()) }
    }

    pub fn dim_e(&self) -> usize {
        self.b.first().map(|v| v.len()).unwrap_or(0)
    }

    /// Largest ratio ‖b(k)‖ r^k / M over the table.
    pub fn bound_ratio(&self, r: f64, m: f64) -> f64 {
        self.b
            .iter()
            .enumerate()
            .map(|(k, v)| v.norm() * r.powi(k as i32) / m)
            .fold(0.0, f64::max)
    }
}

/// Dense table of coefficients a(n), |n| ≤ degree.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSeriesSolution {
    pub d: usize,
    pub degree: usize,
    pub dim_e: usize,
    pub coeffs: BTreeMap<MultiIndex, CVec>,
}

impl PowerSeriesSolution {
    pub fn get(&self, n: &[usize]) -> Option<&CVec> {
        self.coeffs.get(n)
    }

    pub fn max_norm(&self) -> f64 {
        self.coeffs.values().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// a(n) = (α₂d₁ + iβ₂)^{n₂} ⋯ (α_d d₁ + iβ_d)^{n_d} b(n₁), where d₁ shifts the
/// axis index. Operators are applied innermost (highest index) first.
pub fn solve_discrete(pencil: &NormalizedPencil, init: &AnalyticInitialData, degree: usize) -> Result<PowerSeriesSolution> {
    let d = pencil.d();
    let m = pencil.dim_e();
    if init.b.len() < degree + 1 {
        return Err(SeriesError::InsufficientInitialData { degree, available: init.b.len() });
    }
    if init.dim_e() != m {
        return Err(SeriesError::DimensionMismatch(format!(
            "initial data has dimension {}, pencil has {m}",
            init.dim_e()
        )));
    }
    let ib: Vec<CMat> = pencil.beta.iter().map(|b| b * I).collect();
    let mut coeffs = BTreeMap::new();
    for n in multi_indices(d, degree) {
        let total: usize = n.iter().sum();
        let mut seq: Vec<CVec> = (n[0]..=total).map(|k| init.b[k].clone()).collect();
        for j in (1..d).rev() {
            for _ in 0..n[j] {
                seq = (0..seq.len() - 1)
                    .map(|p| &pencil.alpha[j] * &seq[p + 1] + &ib[j] * &seq[p])
                    .collect();
            }
        }
        debug_assert_eq!(seq.len(), 1);
        coeffs.insert(n, seq.pop().unwrap());
    }
    Ok(PowerSeriesSolution { d, degree, dim_e: m, coeffs })
}

fn unit(d: usize, j: usize) -> MultiIndex {
    let mut e = vec![0; d];
    e[j] = 1;
    e
}

fn add(a: &[usize], b: &[usize]) -> MultiIndex {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn compat_residual(
    sol: &PowerSeriesSolution,
    sigma: &[CMat],
    gamma: &dyn Fn(usize, usize) -> CMat,
) -> f64 {
    let d = sol.d;
    let scale = sol.max_norm();
    if scale == 0.0 {
        return 0.0;
    }
    let mut worst: f64 = 0.0;
    for n in multi_indices(d, sol.degree.saturating_sub(1)) {
        for j in 0..d {
            for k in j + 1..d {
                let g = gamma(j, k);
                let r = &sigma[k] * &sol.coeffs[&add(&n, &unit(d, j))]
                    - &sigma[j] * &sol.coeffs[&add(&n, &unit(d, k))]
                    + (g * I) * &sol.coeffs[&n];
                worst = worst.max(r.norm());
            }
        }
    }
    worst / scale
}

/// Largest residual of the vessel difference equations over the table,
/// normalized by the largest coefficient norm.
pub fn check_discrete_compat(sol: &PowerSeriesSolution, v: &Vessel) -> Result<f64> {
    if v.d() != sol.d || v.dim_e() != sol.dim_e {
        return Err(SeriesError::DimensionMismatch("vessel and table sizes differ".into()));
    }
    Ok(compat_residual(sol, &v.sigma, &|j, k| v.gamma.get(j, k)))
}

/// Same check for a bare pencil, using σ_j = α_j, γ_1j = β_j and
/// γ_jk = α_jβ_k − α_kβ_j for j, k ≥ 2.
pub fn check_discrete_compat_pencil(sol: &PowerSeriesSolution, pencil: &NormalizedPencil) -> Result<f64> {
    if pencil.d() != sol.d || pencil.dim_e() != sol.dim_e {
        return Err(SeriesError::DimensionMismatch("pencil and table sizes differ".into()));
    }
    let g = pencil_gamma(pencil);
    Ok(compat_residual(sol, &pencil.alpha, &g))
}

fn pencil_gamma(pencil: &NormalizedPencil) -> impl Fn(usize, usize) -> CMat + '_ {
    move |j: usize, k: usize| {
        if j == 0 {
            pencil.beta[k].clone()
        } else {
            &pencil.alpha[j] * &pencil.beta[k] - &pencil.alpha[k] * &pencil.beta[j]
        }
    }
}

/// C = max_{j ≥ 2} max(‖α_j‖, ‖β_j‖) in operator 2-norm.
pub fn pencil_norm_constant(pencil: &NormalizedPencil) -> f64 {
    (1..pencil.d())
        .map(|j| op_norm(&pencil.alpha[j]).max(op_norm(&pencil.beta[j])))
        .fold(0.0, f64::max)
}

/// Polyradius (R, R/(C(R+1)), …); infinite when C vanishes.
pub fn analytic_polyradius(r: f64, pencil: &NormalizedPencil) -> Vec<f64> {
    let c_norm = pencil_norm_constant(pencil);
    let rest = if c_norm < 1e-14 { f64::INFINITY } else { r / (c_norm * (r + 1.0)) };
    (0..pencil.d()).map(|j| if j == 0 { r } else { rest }).collect()
}

/// C^N M r^{−n₁} (1 + 1/r)^N with N = |n| − n₁.
pub fn growth_bound(n: &[usize], c_norm: f64, m: f64, r: f64) -> f64 {
    let n1 = n[0] as i32;
    let rest: usize = n[1..].iter().sum();
    c_norm.powi(rest as i32) * m * r.powi(-n1) * (1.0 + 1.0 / r).powi(rest as i32)
}

/// Value of a truncated series with an optional tail estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesValue {
    pub value: CVec,
    pub tail_estimate: Option<f64>,
}

/// Majorant data (M, r, C) for the tail estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Majorant {
    pub m: f64,
    pub r: f64,
    pub c: f64,
}

/// Σ_{|n| ≤ D} a(n) tⁿ / n!. When a polyradius is supplied, t must lie in
/// the box scaled by 1/2. The tail estimate sums the growth-bound majorant
/// beyond degree D in closed form.
pub fn evaluate_series(
    sol: &PowerSeriesSolution,
    t: &[f64],
    polyradius: Option<&[f64]>,
    majorant: Option<Majorant>,
) -> Result<SeriesValue> {
    if t.len() != sol.d {
        return Err(SeriesError::DimensionMismatch(format!("point has {} entries, expected {}", t.len(), sol.d)));
    }
    if let Some(pr) = polyradius {
        for (index, (&x, &r)) in t.iter().zip(pr).enumerate() {
            if x.abs() > 0.5 * r {
                return Err(SeriesError::OutsideDomain { index, value: x.abs(), limit: 0.5 * r });
            }
        }
    }
    let weight = |n: &[usize]| -> f64 {
        n.iter()
            .zip(t)
            .map(|(&k, &x)| x.powi(k as i32) / factorial(k))
            .product()
    };
    let mut value = CVec::zeros(sol.dim_e);
    for (n, a) in &sol.coeffs {
        value += a * c(weight(n), 0.0);
    }
    let tail_estimate = majorant.map(|mj| {
        let s = mj.c * (1.0 + 1.0 / mj.r);
        let total = mj.m * (t[0].abs() / mj.r).exp() * t[1..].iter().map(|x| (s * x.abs()).exp()).product::<f64>();
        let partial: f64 = sol
            .coeffs
            .keys()
            .map(|n| {
                let abs_w: f64 = n.iter().zip(t).map(|(&k, &x)| x.abs().powi(k as i32) / factorial(k)).product();
                growth_bound(n, mj.c, mj.m, mj.r) * abs_w
            })
            .sum();
        (total - partial).max(0.0)
    });
    Ok(SeriesValue { value, tail_estimate })
}

/// Least-squares infeasibility of the level-≤2 difference equations when
/// a(0), a(e₁), a(2e₁) are prescribed and every other coefficient with
/// |n| ≤ 2 is free. Zero (to rounding) for commuting pencils; bounded
/// below by the commutator defect otherwise.
pub fn necessity_infeasibility(pencil: &NormalizedPencil, a0: &CVec, a1: &CVec, a2: &CVec) -> f64 {
    let d = pencil.d();
    let m = pencil.dim_e();
    let gamma = pencil_gamma(pencil);
    let known: BTreeMap<MultiIndex, CVec> = [
        (vec![0; d], a0.clone()),
        (unit(d, 0), a1.clone()),
        (add(&unit(d, 0), &unit(d, 0)), a2.clone()),
    ]
    .into_iter()
    .collect();
    let unknowns: Vec<MultiIndex> = multi_indices(d, 2).into_iter().filter(|n| !known.contains_key(n)).collect();
    let position: BTreeMap<&MultiIndex, usize> = unknowns.iter().enumerate().map(|(i, n)| (n, i)).collect();
    let mut rows: Vec<(Vec<(usize, CMat)>, CVec)> = Vec::new();
    for n in multi_indices(d, 1) {
        for j in 0..d {
            for k in j + 1..d {
                let terms = [
                    (add(&n, &unit(d, j)), pencil.alpha[k].clone()),
                    (add(&n, &unit(d, k)), -pencil.alpha[j].clone()),
                    (n.clone(), gamma(j, k) * I),
                ];
                let mut blocks = Vec::new();
                let mut rhs = CVec::zeros(m);
                for (idx, coef) in terms {
                    if let Some(v) = known.get(&idx) {
                        rhs -= &coef * v;
                    } else {
                        blocks.push((position[&idx], coef));
                    }
                }
                rows.push((blocks, rhs));
            }
        }
    }
    let mut mat = zeros(rows.len() * m, unknowns.len() * m);
    let mut rhs = CVec::zeros(rows.len() * m);
    for (r, (blocks, b)) in rows.iter().enumerate() {
        for (col, coef) in blocks {
            let mut view = mat.view_mut((r * m, col * m), (m, m));
            view += coef;
        }
        rhs.rows_mut(r * m, m).copy_from(b);
    }
    let svd = mat.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let z = svd.solve(&rhs, 1e-10 * smax.max(1e-300)).expect("SVD factors were computed");
    (&mat * z - rhs).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multi_index_enumeration_counts() {
        // number of monomials of degree ≤ D in d variables is C(D + d, d)
        assert_eq!(multi_indices(3, 4).len(), 35);
        assert_eq!(multi_indices(1, 5).len(), 6);
        assert_eq!(multi_indices(2, 0), vec![vec![0, 0]]);
        assert_eq!(key(&[1, 0, 2]), "1,0,2");
    }
}
