//! Dense complex linear algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;
pub type RMat = DMatrix<f64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn zeros(r: usize, c: usize) -> CMat {
    CMat::zeros(r, c)
}

/// Frobenius norm.
pub fn fro(m: &CMat) -> f64 {
    m.norm()
}

/// Spectral norm (largest singular value).
pub fn op_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

pub fn one_norm(m: &CMat) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// Frobenius distance of `m` from its adjoint.
pub fn hermitian_defect(m: &CMat) -> f64 {
    fro(&(m - m.adjoint()))
}

/// (M − M*)/i, the Hermitian "imaginary part" scaled by two.
pub fn skew_part_over_i(m: &CMat) -> CMat {
    (m - m.adjoint()) * (-I)
}

pub fn symmetrize(m: &CMat) -> CMat {
    (m + m.adjoint()) * c(0.5, 0.0)
}

pub fn real_combination(coeffs: &[f64], mats: &[CMat], rows: usize, cols: usize) -> CMat {
    let mut out = zeros(rows, cols);
    for (w, m) in coeffs.iter().zip(mats) {
        if *w != 0.0 {
            out += m * c(*w, 0.0);
        }
    }
    out
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    if n == 0 {
        return (vec![], zeros(0, 0));
    }
    let eig = symmetrize(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

pub fn lambda_min(m: &CMat) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    hermitian_eigen(m).0[0]
}

pub fn lambda_max(m: &CMat) -> f64 {
    if m.nrows() == 0 {
        return f64::NEG_INFINITY;
    }
    *hermitian_eigen(m).0.last().unwrap()
}

/// Applies a real function to the spectrum of a Hermitian matrix.
pub fn hermitian_function(m: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (w, v) = hermitian_eigen(m);
    let n = w.len();
    let mut scaled = v.clone();
    for j in 0..n {
        let fj = c(f(w[j]), 0.0);
        for i in 0..n {
            scaled[(i, j)] *= fj;
        }
    }
    &scaled * v.adjoint()
}

pub fn smallest_singular_value(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

pub fn inverse(m: &CMat) -> Option<CMat> {
    if m.nrows() == 0 {
        return Some(zeros(0, 0));
    }
    m.clone().try_inverse()
}

/// Orthonormal basis (as columns) of the range of `m`, rank decided by
/// singular values above `rel_tol · σ_max`.
pub fn range_basis(m: &CMat, rel_tol: f64) -> CMat {
    let rows = m.nrows();
    if m.is_empty() {
        return zeros(rows, 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.unwrap();
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return zeros(rows, 0);
    }
    let mut idx: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] > rel_tol * smax)
        .collect();
    idx.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let mut out = zeros(rows, idx.len());
    for (dst, &src) in idx.iter().enumerate() {
        out.set_column(dst, &u.column(src));
    }
    out
}

/// Orthonormal basis (as columns) of the kernel of `m`. A singular value
/// counts as zero when it is at most `rel_tol · max(σ_max, floor)`.
pub fn kernel_basis(m: &CMat, rel_tol: f64, floor: f64) -> CMat {
    let cols = m.ncols();
    if cols == 0 {
        return zeros(0, 0);
    }
    // pad so that the full right singular basis is returned
    let rows = m.nrows().max(cols);
    let mut padded = zeros(rows, cols);
    padded.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.unwrap();
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let thr = rel_tol * smax.max(floor);
    let idx: Vec<usize> = (0..cols)
        .filter(|&k| svd.singular_values[k] <= thr)
        .collect();
    let mut out = zeros(cols, idx.len());
    for (dst, &src) in idx.iter().enumerate() {
        let row = vt.row(src).adjoint();
        out.set_column(dst, &row);
    }
    out
}

/// Matrix exponential by scaling and squaring with a degree-13 Padé
/// approximant.
pub fn expm(a: &CMat) -> CMat {
    let n = a.nrows();
    if n == 0 {
        return zeros(0, 0);
    }
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    const THETA13: f64 = 5.371920351148152;
    let norm = one_norm(a);
    let mut s = 0i32;
    if norm > THETA13 {
        s = (norm / THETA13).log2().ceil() as i32;
        s = s.max(0);
    }
    let scaled = a * c(0.5f64.powi(s), 0.0);
    let id = identity(n);
    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let r = |x: f64| c(x, 0.0);
    let u_inner = &a6 * (&a6 * r(B[13]) + &a4 * r(B[11]) + &a2 * r(B[9]))
        + &a6 * r(B[7])
        + &a4 * r(B[5])
        + &a2 * r(B[3])
        + &id * r(B[1]);
    let u = &scaled * u_inner;
    let v = &a6 * (&a6 * r(B[12]) + &a4 * r(B[10]) + &a2 * r(B[8]))
        + &a6 * r(B[6])
        + &a4 * r(B[4])
        + &a2 * r(B[2])
        + &id * r(B[0]);
    let p = &v + &u;
    let q = &v - &u;
    let mut result = q.lu().solve(&p).expect("Padé denominator is singular");
    for _ in 0..s {
        result = &result * &result;
    }
    result
}

/// e^{Z} together with φ_1(Z), …, φ_k(Z), where φ_ℓ(Z) = Σ_j Z^j/(j+ℓ)!,
/// read off the exponential of a block upper-triangular augmented matrix.
pub fn phi_functions(z: &CMat, k: usize) -> (CMat, Vec<CMat>) {
    let n = z.nrows();
    let size = (k + 1) * n;
    let mut aug = zeros(size, size);
    aug.view_mut((0, 0), (n, n)).copy_from(z);
    for b in 0..k {
        for i in 0..n {
            aug[(b * n + i, (b + 1) * n + i)] = ONE;
        }
    }
    let e = expm(&aug);
    let exp_z = e.view((0, 0), (n, n)).into_owned();
    let phis = (1..=k)
        .map(|b| e.view((0, b * n), (n, n)).into_owned())
        .collect();
    (exp_z, phis)
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn to_complex(m: &RMat) -> CMat {
    m.map(|x| c(x, 0.0))
}

/// Block diagonal direct sum.
pub fn direct_sum(a: &CMat, b: &CMat) -> CMat {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = zeros(ra + rb, ca + cb);
    out.view_mut((0, 0), (ra, ca)).copy_from(a);
    out.view_mut((ra, ca), (rb, cb)).copy_from(b);
    out
}

/// Monomial coefficients of the Lagrange basis polynomials on `nodes`:
/// entry `[p][j]` is the coefficient of x^j in ℓ_p(x).
pub fn lagrange_coefficients(nodes: &[f64]) -> Vec<Vec<f64>> {
    let k = nodes.len();
    (0..k)
        .map(|p| {
            let mut poly = vec![1.0];
            let mut denom = 1.0;
            for (q, &xq) in nodes.iter().enumerate() {
                if q == p {
                    continue;
                }
                let mut next = vec![0.0; poly.len() + 1];
                for (j, &a) in poly.iter().enumerate() {
                    next[j] -= a * xq;
                    next[j + 1] += a;
                }
                poly = next;
                denom *= nodes[p] - xq;
            }
            poly.iter().map(|a| a / denom).collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, seed: u64) -> CMat {
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        CMat::from_fn(n, n, |_, _| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let a = ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let b = ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
            c(a, b)
        })
    }

    #[test]
    fn expm_of_diagonal_matches_scalar_exponentials() {
        let d = CMat::from_diagonal(&CVec::from_vec(vec![c(0.3, 1.0), c(-2.0, 0.5), c(7.0, -3.0)]));
        let e = expm(&d);
        for k in 0..3 {
            assert!((e[(k, k)] - d[(k, k)].exp()).norm() <= 1e-12 * d[(k, k)].exp().norm());
        }
        assert!(e[(0, 1)].norm() < 1e-14);
    }

    #[test]
    fn expm_of_nilpotent_is_polynomial() {
        let mut n = zeros(3, 3);
        n[(0, 1)] = c(2.0, 0.0);
        n[(1, 2)] = c(0.0, 1.0);
        let e = expm(&n);
        let expected = identity(3) + &n + &n * &n * c(0.5, 0.0);
        assert!(max_abs_diff(&e, &expected) < 1e-14);
    }

    #[test]
    fn expm_group_property_for_large_norm() {
        let a = sample(4, 7) * c(6.0, 0.0);
        let full = expm(&a);
        let half = expm(&(&a * c(0.5, 0.0)));
        assert!(max_abs_diff(&full, &(&half * &half)) <= 1e-10 * fro(&full));
    }

    #[test]
    fn phi_functions_satisfy_recurrence() {
        // φ_{ℓ}(Z) = Z φ_{ℓ+1}(Z) + I/ℓ!
        let z = sample(3, 11);
        let (e, phis) = phi_functions(&z, 3);
        assert!(max_abs_diff(&e, &(&z * &phis[0] + identity(3))) < 1e-13);
        assert!(max_abs_diff(&phis[0], &(&z * &phis[1] + identity(3))) < 1e-13);
        assert!(max_abs_diff(&phis[1], &(&z * &phis[2] + identity(3) * c(0.5, 0.0))) < 1e-13);
    }

    #[test]
    fn hermitian_eigen_reconstructs() {
        let a = sample(5, 3);
        let h = &a + a.adjoint();
        let (w, v) = hermitian_eigen(&h);
        assert!(w.windows(2).all(|p| p[0] <= p[1]));
        let rebuilt = &v * CMat::from_diagonal(&CVec::from_iterator(5, w.iter().map(|x| c(*x, 0.0)))) * v.adjoint();
        assert!(max_abs_diff(&rebuilt, &h) < 1e-12);
    }

    #[test]
    fn kernel_and_range_are_complementary() {
        let a = sample(4, 5);
        let b = sample(4, 9);
        // rank-2 product of 4×2 and 2×4 factors
        let low = a.columns(0, 2) * b.rows(0, 2);
        let r = range_basis(&low, 1e-10);
        let k = kernel_basis(&low, 1e-10, 0.0);
        assert_eq!(r.ncols(), 2);
        assert_eq!(k.ncols(), 2);
        assert!(fro(&(&low * &k)) < 1e-12);
    }

    #[test]
    fn lagrange_basis_is_cardinal() {
        let nodes = [-1.0, 0.0, 1.0, 2.0];
        let coeffs = lagrange_coefficients(&nodes);
        for (p, cp) in coeffs.iter().enumerate() {
            for (q, &x) in nodes.iter().enumerate() {
                let v: f64 = cp.iter().enumerate().map(|(j, a)| a * x.powi(j as i32)).sum();
                let expected = if p == q { 1.0 } else { 0.0 };
                assert!((v - expected).abs() < 1e-12);
            }
        }
    }
}
