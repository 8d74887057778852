//! Seeded generators for commuting dissipative tuples, pencils and vessels.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::linalg::{c, direct_sum, identity, lambda_min, op_norm, skew_part_over_i, zeros, CMat, CVec, I};
use crate::vessel::{make_strict_vessel, CommutingTuple, NormalizedPencil, PairTable, Vessel, DEFAULT_RANK_TOL};

pub type FixtureRng = ChaCha8Rng;

pub fn rng(seed: u64) -> FixtureRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FixtureError {
    #[error("no admissible draw after {0} attempts")]
    RetryExhausted(usize),
    #[error("invalid fixture parameters: {0}")]
    InvalidParameters(String),
}

pub const MAX_TRIES: usize = 100;

pub fn uniform(rng: &mut FixtureRng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Entries with real and imaginary parts uniform in [−1, 1].
pub fn complex_matrix(rng: &mut FixtureRng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| c(uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0)))
}

pub fn complex_vector(rng: &mut FixtureRng, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| c(uniform(rng, -1.0, 1.0), uniform(rng, -1.0, 1.0)))
}

pub fn hermitian(rng: &mut FixtureRng, n: usize, scale: f64) -> CMat {
    let x = complex_matrix(rng, n, n);
    (&x + x.adjoint()) * c(0.5 * scale, 0.0)
}

/// Positive definite matrix with spectrum inside [lo, hi].
pub fn positive_definite(rng: &mut FixtureRng, n: usize, lo: f64, hi: f64) -> CMat {
    let x = complex_matrix(rng, n, n);
    let g = &x * x.adjoint();
    let top = op_norm(&g).max(1e-300);
    identity(n) * c(lo, 0.0) + g * c((hi - lo) / top, 0.0)
}

/// H + iP with Hermitian H of norm about `real_scale` and P ⪰ lo·I.
pub fn dissipative(rng: &mut FixtureRng, n: usize, real_scale: f64, lo: f64, hi: f64) -> CMat {
    hermitian(rng, n, real_scale) + positive_definite(rng, n, lo, hi) * I
}

fn kron_chain(factors: &[CMat]) -> CMat {
    factors
        .iter()
        .skip(1)
        .fold(factors[0].clone(), |acc, f| acc.kronecker(f))
}

/// Doubly commuting tuple A_j = I ⊗ … ⊗ B_j ⊗ … ⊗ I built from random
/// dissipative factors of the given sizes.
pub fn tensor_tuple(rng: &mut FixtureRng, dims: &[usize]) -> CommutingTuple {
    let factors: Vec<CMat> = dims.iter().map(|&k| dissipative(rng, k, 1.0, 0.5, 0.75)).collect();
    tensor_from_factors(&factors)
}

pub fn tensor_from_factors(factors: &[CMat]) -> CommutingTuple {
    let d = factors.len();
    let a = (0..d)
        .map(|j| {
            let parts: Vec<CMat> = (0..d)
                .map(|q| if q == j { factors[q].clone() } else { identity(factors[q].nrows()) })
                .collect();
            kron_chain(&parts)
        })
        .collect();
    CommutingTuple { a }
}

/// Single Jordan block with a dissipative correction i·P.
pub fn jordan_tuple(rng: &mut FixtureRng, n: usize) -> Result<CommutingTuple, FixtureError> {
    for _ in 0..MAX_TRIES {
        let lambda = uniform(rng, -1.0, 1.0);
        let mut j = identity(n) * c(lambda, 0.0);
        for k in 0..n.saturating_sub(1) {
            j[(k, k + 1)] = c(1.0, 0.0);
        }
        let p = positive_definite(rng, n, 0.0, 0.5) + identity(n) * c(uniform(rng, 0.5, 1.5), 0.0);
        let a = j + p * I;
        if lambda_min(&skew_part_over_i(&a)) > 0.0 {
            return Ok(CommutingTuple { a: vec![a] });
        }
    }
    Err(FixtureError::RetryExhausted(MAX_TRIES))
}

/// Commuting tuple p_j(M) + i c_j I from a shared random source M, retried
/// until every member is dissipative.
pub fn polynomial_tuple(rng: &mut FixtureRng, n: usize, d: usize) -> Result<CommutingTuple, FixtureError> {
    for _ in 0..MAX_TRIES {
        let m = complex_matrix(rng, n, n) * c(0.6, 0.0);
        let m2 = &m * &m;
        let mut a = Vec::with_capacity(d);
        for _ in 0..d {
            let p = identity(n) * c(uniform(rng, -1.0, 1.0), 0.0)
                + &m * c(uniform(rng, -1.0, 1.0), 0.0)
                + &m2 * c(uniform(rng, -0.5, 0.5), 0.0);
            let shift = uniform(rng, 0.3, 1.2) * op_norm(&p).max(0.1);
            a.push(p + identity(n) * c(0.0, shift));
        }
        if a.iter().all(|x| lambda_min(&skew_part_over_i(x)) > 1e-9) {
            return Ok(CommutingTuple { a });
        }
    }
    Err(FixtureError::RetryExhausted(MAX_TRIES))
}

/// Vessel with an extra signal direction decoupled from H: Φ gains a zero
/// row and every σ_j, γ_jk, γ*_jk a scalar block. The extra line spans the
/// common kernel W and is invariant under the pencil.
pub fn decoupled_w_vessel(rng: &mut FixtureRng, base: &Vessel) -> Vessel {
    let d = base.d();
    let n = base.dim_h();
    let m = base.dim_e();
    let mut phi = zeros(m + 1, n);
    phi.view_mut((0, 0), (m, n)).copy_from(&base.phi);
    let s: Vec<f64> = (0..d).map(|j| if j == 0 { 1.0 } else { uniform(rng, 0.5, 1.5) }).collect();
    let g1: Vec<f64> = (0..d).map(|j| if j == 0 { 0.0 } else { uniform(rng, -1.0, 1.0) }).collect();
    let scalar = |x: f64| CMat::from_element(1, 1, c(x, 0.0));
    let sigma = base
        .sigma
        .iter()
        .zip(&s)
        .map(|(sj, &x)| direct_sum(sj, &scalar(x)))
        .collect();
    let mut gamma = PairTable::zeros(d, m + 1);
    let mut gamma_star = PairTable::zeros(d, m + 1);
    for (j, k) in base.gamma.pairs() {
        // elimination identity with σ₁ = 1 on the extra line
        let g = if j == 0 { g1[k] } else { s[j] * g1[k] - s[k] * g1[j] };
        gamma.set(j, k, direct_sum(base.gamma.upper(j, k), &scalar(g)));
        gamma_star.set(j, k, direct_sum(base.gamma_star.upper(j, k), &scalar(g)));
    }
    Vessel { a: base.a.clone(), phi, sigma, gamma, gamma_star, degenerate: false }
}

/// Strict vessel of a tensor tuple.
pub fn tensor_vessel(seed: u64, dims: &[usize]) -> Vessel {
    let mut r = rng(seed);
    let tuple = tensor_tuple(&mut r, dims);
    make_strict_vessel(&tuple, DEFAULT_RANK_TOL).expect("tensor fixtures are commuting and dissipative")
}

/// Commuting Hermitian pencil sharing one eigenbasis.
pub fn commuting_pencil(rng: &mut FixtureRng, m: usize, d: usize, alpha_range: (f64, f64), beta_scale: f64) -> NormalizedPencil {
    let q = complex_matrix(rng, m, m);
    let u = q.qr().q();
    let diag = |vals: Vec<f64>| {
        let dm = CMat::from_diagonal(&CVec::from_iterator(m, vals.into_iter().map(|x| c(x, 0.0))));
        &u * dm * u.adjoint()
    };
    let mut alpha_tail = Vec::new();
    let mut beta_tail = Vec::new();
    for _ in 1..d {
        alpha_tail.push(diag((0..m).map(|_| uniform(rng, alpha_range.0, alpha_range.1)).collect()));
        beta_tail.push(diag((0..m).map(|_| uniform(rng, -beta_scale, beta_scale)).collect()));
    }
    NormalizedPencil::from_tail(m, alpha_tail, beta_tail)
}
