use proptest::prelude::*;
use vesselkit::fixtures::{self, rng};
use vesselkit::linalg::{c, commutator, expm, fro, identity, lambda_min, op_norm, zeros, CMat, RMat, I};
use vesselkit::vessel::*;

fn m1(z: vesselkit::C64) -> CMat {
    CMat::from_element(1, 1, z)
}

fn mat(rows: usize, cols: usize, entries: &[(f64, f64)]) -> CMat {
    CMat::from_row_iterator(rows, cols, entries.iter().map(|&(a, b)| c(a, b)))
}

/// Independent recomputation of the four vessel identities.
fn oracle_vessel_residual(v: &Vessel) -> f64 {
    let d = v.d();
    let phi = &v.phi;
    let mut worst: f64 = 0.0;
    for j in 0..d {
        let lhs = &v.a[j] - v.a[j].adjoint();
        let rhs = phi.adjoint() * &v.sigma[j] * phi * I;
        worst = worst.max((lhs - rhs).norm());
        for k in 0..d {
            if j == k {
                continue;
            }
            let g = v.gamma.get(j, k);
            let gs = v.gamma_star.get(j, k);
            let inp = &v.sigma[j] * phi * v.a[k].adjoint() - &v.sigma[k] * phi * v.a[j].adjoint() - &g * phi;
            let out = &v.sigma[j] * phi * &v.a[k] - &v.sigma[k] * phi * &v.a[j] - &gs * phi;
            let link = &gs - &g
                - (&v.sigma[j] * phi * phi.adjoint() * &v.sigma[k] - &v.sigma[k] * phi * phi.adjoint() * &v.sigma[j]) * I;
            worst = worst.max(inp.norm()).max(out.norm()).max(link.norm());
        }
    }
    worst
}

#[test]
fn scalar_strict_embedding() {
    let t = CommutingTuple::new(vec![m1(c(0.0, 0.5))]).unwrap();
    let v = make_strict_vessel(&t, DEFAULT_RANK_TOL).unwrap();
    assert_eq!(v.dim_e(), 1);
    assert_eq!(v.phi[(0, 0)], c(1.0, 0.0));
    assert!((v.sigma[0][(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
    let r = check_vessel(&v, 1e-12).unwrap();
    assert!(r.get("colligation[1]").unwrap().residual < 1e-15);
}

#[test]
fn identical_pair_has_vanishing_gammas() {
    let a = m1(c(0.0, 0.5));
    let t = CommutingTuple::new(vec![a.clone(), a]).unwrap();
    let v = make_strict_vessel(&t, DEFAULT_RANK_TOL).unwrap();
    assert!((v.sigma[1][(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
    assert!(v.gamma.upper(0, 1).norm() < 1e-15);
    assert!(v.gamma_star.upper(0, 1).norm() < 1e-15);
}

#[test]
fn jordan_like_block_embeds_in_standard_basis() {
    let a = mat(2, 2, &[(0.0, 1.0), (1.0, 0.0), (0.0, 0.0), (0.0, 1.0)]);
    let v = make_strict_vessel(&CommutingTuple::new(vec![a]).unwrap(), DEFAULT_RANK_TOL).unwrap();
    assert_eq!(v.dim_e(), 2);
    assert!((&v.phi - identity(2)).norm() < 1e-15);
    let expected = mat(2, 2, &[(2.0, 0.0), (0.0, -1.0), (0.0, 1.0), (2.0, 0.0)]);
    assert!((&v.sigma[0] - expected).norm() < 1e-14);
}

#[test]
fn selfadjoint_tuple_gives_degenerate_vessel() {
    let h = mat(2, 2, &[(1.0, 0.0), (0.5, 0.5), (0.5, -0.5), (-1.0, 0.0)]);
    let v = make_strict_vessel(&CommutingTuple::new(vec![h]).unwrap(), DEFAULT_RANK_TOL).unwrap();
    assert!(v.degenerate);
    assert_eq!(v.dim_e(), 0);
    assert!(check_vessel(&v, 1e-12).unwrap().pass);
    assert!(check_vr(&v, &Direction::Axis(0), 1e-10).unwrap().pass);
    assert_eq!(pos_cone_margin(&v, &[1.0]), f64::INFINITY);
}

#[test]
fn non_commuting_and_non_dissipative_inputs_are_rejected() {
    let a = mat(2, 2, &[(0.0, 1.0), (1.0, 0.0), (0.0, 0.0), (0.0, 1.0)]);
    let b = mat(2, 2, &[(0.0, 1.0), (0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]);
    let err = make_strict_vessel(&CommutingTuple::new(vec![a, b]).unwrap(), DEFAULT_RANK_TOL).unwrap_err();
    assert!(matches!(err, VesselError::NonCommuting { .. }));
    let err = make_strict_vessel(&CommutingTuple::new(vec![m1(c(0.0, -1.0))]).unwrap(), DEFAULT_RANK_TOL).unwrap_err();
    assert!(matches!(err, VesselError::NonDissipative { .. }));
}

#[test]
fn strict_vessels_satisfy_identities_per_oracle() {
    let mut r = rng(17);
    for trial in 0..12 {
        let tuple = match trial % 3 {
            0 => fixtures::tensor_tuple(&mut r, &[2, 2, 2]),
            1 => fixtures::polynomial_tuple(&mut r, 5, 3).unwrap(),
            _ => fixtures::jordan_tuple(&mut r, 4).unwrap(),
        };
        let v = make_strict_vessel(&tuple, DEFAULT_RANK_TOL).unwrap();
        assert!(oracle_vessel_residual(&v) < 1e-12, "trial {trial}");
        let report = check_vessel(&v, 1e-12).unwrap();
        assert!(report.pass, "trial {trial}: {:?}", report.failures());
        let ws = weakly_strict_report(&v, 1e-10);
        assert!(ws.weakly_strict || v.sigma.iter().all(|s| lambda_min(s) < 1e-10));
    }
}

#[test]
fn gamma_perturbation_is_pinpointed() {
    let v = fixtures::tensor_vessel(3, &[2, 2]);
    let mut bad = v.clone();
    let m = v.dim_e();
    bad.gamma.set(0, 1, v.gamma.upper(0, 1) + identity(m));
    let r = check_vessel(&bad, 1e-10).unwrap();
    assert!(!r.pass);
    let entry = r.get("input vessel condition (1,2)").unwrap();
    assert!(!entry.pass);
    assert!(entry.residual >= fro(&v.phi) * (1.0 - 1e-10));
}

#[test]
fn dimension_mismatch_is_reported() {
    let mut v = fixtures::tensor_vessel(3, &[2, 2]);
    v.sigma.pop();
    assert!(matches!(check_vessel(&v, 1e-10), Err(VesselError::DimensionMismatch(_))));
}

#[test]
fn vr_is_vacuous_for_pairs() {
    let mut r = rng(2);
    let tuple = fixtures::polynomial_tuple(&mut r, 3, 2).unwrap();
    let v = make_strict_vessel(&tuple, DEFAULT_RANK_TOL).unwrap();
    let rep = check_vr(&v, &Direction::Axis(0), 1e-10).unwrap();
    assert!(rep.pass);
    assert!(rep.entries.is_empty());
    assert!(check_vr_star(&v, 1e-10).unwrap().pass);
}

fn scalar_vessel(sigma: [f64; 3], g12: f64, g13: f64, g23: f64) -> Vessel {
    let mut gamma = PairTable::zeros(3, 1);
    gamma.set(0, 1, m1(c(g12, 0.0)));
    gamma.set(0, 2, m1(c(g13, 0.0)));
    gamma.set(1, 2, m1(c(g23, 0.0)));
    Vessel {
        a: vec![zeros(1, 1); 3],
        phi: zeros(1, 1),
        sigma: sigma.iter().map(|s| m1(c(*s, 0.0))).collect(),
        gamma: gamma.clone(),
        gamma_star: gamma,
        degenerate: false,
    }
}

#[test]
fn scalar_elimination_condition() {
    // forced value σ₂σ₁⁻¹γ₁₃ − σ₃σ₁⁻¹γ₁₂ = 2 − 1 = 1
    let good = scalar_vessel([1.0, 1.0, 1.0], 1.0, 2.0, 1.0);
    let rep = check_vr(&good, &Direction::Axis(0), 1e-12).unwrap();
    assert!(rep.pass, "{:?}", rep.failures());
    let bad = scalar_vessel([1.0, 1.0, 1.0], 1.0, 2.0, 2.0);
    let rep = check_vr(&bad, &Direction::Axis(0), 1e-12).unwrap();
    assert!(!rep.pass);
    assert!((rep.get("VR elimination (2,3)").unwrap().residual - 1.0).abs() < 1e-15);
}

#[test]
fn singular_sigma_is_an_error() {
    let v = scalar_vessel([0.0, 1.0, 1.0], 1.0, 2.0, 1.0);
    assert!(matches!(check_vr(&v, &Direction::Axis(0), 1e-10), Err(VesselError::SingularSigma { .. })));
    assert!(check_vr(&v, &Direction::Axis(1), 1e-10).is_ok());
}

#[test]
fn doubly_commuting_fixtures_pass_vr_in_every_invertible_direction() {
    for seed in 0..5 {
        let v = fixtures::tensor_vessel(seed, &[2, 2, 2]);
        for dir in [Direction::Axis(0), Direction::Axis(1), Direction::Axis(2), Direction::Vector(vec![1.0, 0.5, 2.0])] {
            let rep = check_vr(&v, &dir, 1e-10).unwrap();
            assert!(rep.pass, "seed {seed} {dir:?}: {:?}", rep.failures());
            let rep = check_vr_star_in(&v, &dir, 1e-10).unwrap();
            assert!(rep.pass, "seed {seed} {dir:?}: {:?}", rep.failures());
        }
    }
}

#[test]
fn vr_failure_is_shared_by_output_side() {
    let v = fixtures::tensor_vessel(4, &[2, 2, 2]);
    let mut bad = v.clone();
    let m = v.dim_e();
    let bump = identity(m) * c(1e-3, 0.0);
    bad.gamma.set(1, 2, v.gamma.upper(1, 2) + &bump);
    bad.gamma_star.set(1, 2, v.gamma_star.upper(1, 2) + &bump);
    let vr = check_vr(&bad, &Direction::Axis(0), 1e-10).unwrap();
    let vrs = check_vr_star(&bad, 1e-10).unwrap();
    assert!(!vr.get("VR elimination (2,3)").unwrap().pass);
    assert!(!vrs.get("VR* elimination (2,3)").unwrap().pass);
}

#[test]
fn redundancy_of_mixed_condition() {
    for seed in 0..6 {
        let v = fixtures::tensor_vessel(100 + seed, &[2, 2, 2]);
        let rep = check_vr(&v, &Direction::Axis(0), 1e-10).unwrap();
        let inv = v.sigma[0].clone().try_inverse().unwrap();
        let bound = 2.0 * op_norm(&inv);
        let elim = rep.get("VR elimination (2,3)").unwrap();
        let mixed = rep.get("VR mixed commutation (2,3)").unwrap();
        assert!(elim.pass);
        assert!(mixed.residual <= bound * elim.residual + 1e-13);
        assert!(mixed.note.is_some());
    }
}

#[test]
fn adjoint_is_an_involution_and_a_vessel() {
    let v = fixtures::tensor_vessel(8, &[2, 2, 2]);
    let adj = adjoint_vessel(&v);
    assert_eq!(adjoint_vessel(&adj), v);
    assert!(check_vessel(&adj, 1e-10).unwrap().pass);
    assert!(oracle_vessel_residual(&adj) < 1e-12);
    let s = make_strict_vessel(&CommutingTuple::new(vec![m1(c(0.0, 0.5))]).unwrap(), 1e-10).unwrap();
    let sa = adjoint_vessel(&s);
    assert_eq!(sa.a[0][(0, 0)], c(0.0, -0.5));
    assert!((sa.sigma[0][(0, 0)] - c(-1.0, 0.0)).norm() < 1e-15);
    assert!(check_vessel(&sa, 1e-14).unwrap().get("colligation[1]").unwrap().residual < 1e-15);
}

#[test]
fn coordinate_change_cases() {
    let v = fixtures::tensor_vessel(12, &[2, 2, 2]);
    assert_eq!(coordinate_change(&v, &RMat::identity(3, 3)).unwrap(), v);
    let swap = RMat::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
    let w = coordinate_change(&v, &swap).unwrap();
    assert_eq!(w.a[0], v.a[1]);
    assert_eq!(w.a[1], v.a[0]);
    assert_eq!(*w.gamma.upper(0, 1), -v.gamma.upper(0, 1).clone());
    let t = RMat::from_row_slice(3, 3, &[1.0, 0.3, -0.2, 0.4, 1.1, 0.5, -0.7, 0.2, 0.9]);
    let w = coordinate_change(&v, &t).unwrap();
    assert!(check_vessel(&w, 1e-9).unwrap().pass);
    assert!(oracle_vessel_residual(&w) < 1e-10);
    let singular = RMat::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
    assert!(matches!(coordinate_change(&v, &singular), Err(VesselError::SingularTransform { .. })));
}

#[test]
fn cone_margin_examples() {
    let mut v = scalar_vessel([1.0, 1.0, 1.0], 0.0, 0.0, 0.0);
    v.sigma.truncate(2);
    v.a.truncate(2);
    v.gamma = PairTable::zeros(2, 1);
    v.gamma_star = PairTable::zeros(2, 1);
    assert!((pos_cone_margin(&v, &[1.0, 1.0]) - 2.0).abs() < 1e-15);
    let diag = |a: f64, b: f64| mat(2, 2, &[(a, 0.0), (0.0, 0.0), (0.0, 0.0), (b, 0.0)]);
    let w = Vessel {
        a: vec![zeros(2, 2); 2],
        phi: zeros(2, 2),
        sigma: vec![diag(1.0, 0.0), diag(0.0, 1.0)],
        gamma: PairTable::zeros(2, 2),
        gamma_star: PairTable::zeros(2, 2),
        degenerate: false,
    };
    assert!(pos_cone_margin(&w, &[1.0, 0.0]).abs() < 1e-15);
    assert!((pos_cone_margin(&w, &[1.0, 1.0]) - 1.0).abs() < 1e-15);
    let rep = dissipative_embedding_report(&w, 1e-10);
    assert!(rep.get("e1 in closure of cone").unwrap().pass);
    assert!(rep.get("cone margin at (1,...,1)").unwrap().pass);
}

#[test]
fn negative_sigma_direction_fails_closure_test() {
    let diag = |a: f64, b: f64| mat(2, 2, &[(a, 0.0), (0.0, 0.0), (0.0, 0.0), (b, 0.0)]);
    let w = Vessel {
        a: vec![zeros(2, 2); 2],
        phi: zeros(2, 2),
        sigma: vec![diag(2.0, 2.0), diag(1.0, -1.0)],
        gamma: PairTable::zeros(2, 2),
        gamma_star: PairTable::zeros(2, 2),
        degenerate: false,
    };
    let rep = dissipative_embedding_report(&w, 1e-10);
    assert!(!rep.pass);
    let e2 = rep.get("e2 in closure of cone").unwrap();
    assert!(!e2.pass);
    assert!(e2.note.as_ref().unwrap().contains("not in the closure"));
    // oracle: scan along the ray e2 + s·1
    for s in [1e-3, 1e-2, 1e-1] {
        assert!(pos_cone_margin(&w, &[s, 1.0 + s]) < 0.0);
    }
}

#[test]
fn weak_ando_pairs_have_the_dissipative_embedding_property() {
    for seed in 0..4 {
        let mut r = rng(seed);
        let tuple = fixtures::polynomial_tuple(&mut r, 3, 2).unwrap();
        let v = make_strict_vessel(&tuple, DEFAULT_RANK_TOL).unwrap();
        let rep = dissipative_embedding_report(&v, 1e-10);
        assert!(rep.pass, "seed {seed}: {:?}", rep.failures());
    }
}

#[test]
fn normalize_examples() {
    let v = fixtures::tensor_vessel(21, &[2, 2]);
    let (w, pencil) = normalize(&v, &[1.0, 0.0], 1e-10).unwrap();
    assert!((&w.sigma[0] - identity(w.dim_e())).norm() == 0.0);
    assert!(check_vessel(&w, 1e-9).unwrap().pass);
    assert!(pencil.validate(1e-10).pass);
    assert_eq!(pencil.alpha[1], w.sigma[1]);

    let mut s = make_strict_vessel(&CommutingTuple::new(vec![m1(c(0.0, 2.0))]).unwrap(), 1e-10).unwrap();
    assert!((s.sigma[0][(0, 0)] - c(4.0, 0.0)).norm() < 1e-15);
    s.phi = m1(c(1.0, 0.0));
    let (w, _) = normalize(&s, &[1.0], 1e-10).unwrap();
    assert!((w.phi[(0, 0)] - c(2.0, 0.0)).norm() < 1e-14);
    assert_eq!(w.sigma[0][(0, 0)], c(1.0, 0.0));

    let n1 = make_strict_vessel(&CommutingTuple::new(vec![m1(c(0.0, 0.5))]).unwrap(), 1e-10).unwrap();
    let (w, _) = normalize(&n1, &[1.0], 1e-10).unwrap();
    assert!((&w.phi - &n1.phi).norm() < 1e-14);

    let err = normalize(&v, &[-1.0, 0.0], 1e-10).unwrap_err();
    assert!(matches!(err, VesselError::NotInCone { .. }));
}

#[test]
fn normalize_in_a_generic_direction() {
    let v = fixtures::tensor_vessel(22, &[2, 2, 2]);
    let (w, pencil) = normalize(&v, &[0.6, 0.3, 0.8], 1e-10).unwrap();
    assert!(check_vessel(&w, 1e-9).unwrap().pass);
    assert!(check_vr(&w, &Direction::Axis(0), 1e-9).unwrap().pass);
    assert!(pencil.commutativity_residual() < 1e-10);
}

#[test]
fn partial_vessel_completion_reproduces_strict_vessel() {
    let v = fixtures::tensor_vessel(30, &[2, 2, 2]);
    let g1: Vec<CMat> = (1..3).map(|j| v.gamma.upper(0, j).clone()).collect();
    let w = complete_partial_vessel(&v.tuple(), &v.phi, &v.sigma, &g1, 1e-10).unwrap();
    for (j, k) in v.gamma.pairs() {
        assert!((w.gamma.upper(j, k) - v.gamma.upper(j, k)).norm() < 1e-10);
        assert!((w.gamma_star.upper(j, k) - v.gamma_star.upper(j, k)).norm() < 1e-10);
    }
    assert!(check_vessel(&w, 1e-10).unwrap().pass);
    assert!(check_vr(&w, &Direction::Axis(0), 1e-10).unwrap().pass);
}

#[test]
fn partial_completion_for_a_pair_uses_linkage() {
    let mut r = rng(5);
    let v = make_strict_vessel(&fixtures::polynomial_tuple(&mut r, 3, 2).unwrap(), 1e-10).unwrap();
    let w = complete_partial_vessel(&v.tuple(), &v.phi, &v.sigma, &[v.gamma.upper(0, 1).clone()], 1e-10).unwrap();
    let p = &v.phi;
    let expected = v.gamma.upper(0, 1)
        + (&v.sigma[0] * p * p.adjoint() * &v.sigma[1] - &v.sigma[1] * p * p.adjoint() * &v.sigma[0]) * I;
    assert!((w.gamma_star.upper(0, 1) - expected).norm() < 1e-13);
}

#[test]
fn partial_completion_rejects_broken_data() {
    let v = fixtures::tensor_vessel(31, &[2, 2, 2]);
    let g1: Vec<CMat> = (1..3)
        .map(|j| v.gamma.upper(0, j) + identity(v.dim_e()) * c(0.1 * j as f64, 0.0))
        .collect();
    match complete_partial_vessel(&v.tuple(), &v.phi, &v.sigma, &g1, 1e-10) {
        Err(VesselError::PreconditionResidual { condition, .. }) => assert!(condition.starts_with("input vessel condition")),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn weak_strictness_cases() {
    let v = fixtures::tensor_vessel(40, &[2, 2]);
    let ws = weakly_strict_report(&v, 1e-10);
    assert!(ws.weakly_strict);
    let mut z = v.clone();
    z.phi = zeros(v.dim_e(), v.dim_h());
    let ws = weakly_strict_report(&z, 1e-10);
    assert_eq!(ws.kernel.ncols(), v.dim_e());
    let dw = fixtures::decoupled_w_vessel(&mut rng(1), &v);
    assert!(check_vessel(&dw, 1e-10).unwrap().pass);
    let ws = weakly_strict_report(&dw, 1e-10);
    assert_eq!(ws.kernel.ncols(), 1);
    // oracle: the extra coordinate vector spans W
    assert!((ws.kernel[(dw.dim_e() - 1, 0)].norm() - 1.0).abs() < 1e-12);
}

#[test]
fn cayley_examples() {
    assert!(cayley_cogenerator(&m1(c(0.0, 1.0))).unwrap().norm() < 1e-15);
    let t = cayley_cogenerator(&m1(c(0.0, 0.0))).unwrap();
    assert!((t[(0, 0)] - c(-1.0, 0.0)).norm() < 1e-15);
    assert!(matches!(cayley_cogenerator(&m1(c(0.0, -1.0))), Err(VesselError::SingularShift)));
    let mut r = rng(3);
    let a = fixtures::dissipative(&mut r, 2, 1.0, 0.1, 1.0);
    let t = cayley_cogenerator(&a).unwrap();
    assert!(op_norm(&t) <= 1.0 + 1e-12);
    // oracle: direct Möbius evaluation of φ_s at the semigroup
    let s = 0.01;
    let cs = expm(&(&a * c(0.0, s)));
    let num = &cs - identity(2) * c(1.0 - s, 0.0);
    let den = &cs - identity(2) * c(1.0 + s, 0.0);
    let phi = num * den.try_inverse().unwrap();
    assert!(op_norm(&(phi - &t)) < 1e-2);
    assert!(cayley_diagnostic(&a, s).unwrap() < 1e-2);
}

#[test]
fn cayley_eigenvalues_are_mobius_images() {
    let mut r = rng(4);
    let a = fixtures::dissipative(&mut r, 3, 1.0, 0.2, 1.0);
    let t = cayley_cogenerator(&a).unwrap();
    let ea = a.clone().complex_eigenvalues_fallback();
    let et = t.clone().complex_eigenvalues_fallback();
    for lam in ea.iter() {
        let mu = (lam - I) / (lam + I);
        assert!(et.iter().any(|x| (x - mu).norm() < 1e-9), "{mu} not in {et:?}");
    }
}

trait Eig {
    fn complex_eigenvalues_fallback(self) -> Vec<vesselkit::C64>;
}

impl Eig for CMat {
    // eigenvalues via the Schur form
    fn complex_eigenvalues_fallback(self) -> Vec<vesselkit::C64> {
        let s = nalgebra::Schur::new(self);
        let (_, t) = s.unpack();
        (0..t.nrows()).map(|k| t[(k, k)]).collect()
    }
}

#[test]
fn commuting_pencil_validates() {
    let p = fixtures::commuting_pencil(&mut rng(1), 3, 4, (0.5, 2.0), 1.0);
    assert!(p.validate(1e-12).pass);
    let mut bad = p.clone();
    bad.alpha[1][(0, 1)] += c(0.1, 0.0);
    bad.alpha[1][(1, 0)] += c(0.1, 0.0);
    assert!(!bad.validate(1e-12).pass);
    assert!(fro(&commutator(&bad.alpha[1], &bad.alpha[2])) > 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn strict_embedding_sound_for_random_tuples(seed in 0u64..10_000, n in 2usize..6, d in 1usize..4) {
        let mut r = rng(seed);
        let tuple = fixtures::polynomial_tuple(&mut r, n, d).unwrap();
        let v = make_strict_vessel(&tuple, DEFAULT_RANK_TOL).unwrap();
        prop_assert!(check_vessel(&v, 1e-10).unwrap().pass);
    }

    #[test]
    fn vr_and_vr_star_agree(seed in 0u64..10_000, broken in any::<bool>()) {
        let mut v = fixtures::tensor_vessel(seed, &[2, 2, 2]);
        if broken {
            let mut r = rng(seed ^ 0xabc);
            let m = v.dim_e();
            let h = fixtures::hermitian(&mut r, m, 0.1);
            v.gamma.set(1, 2, v.gamma.upper(1, 2) + &h);
            v.gamma_star.set(1, 2, v.gamma_star.upper(1, 2) + &h);
        }
        let a = check_vr(&v, &Direction::Axis(0), 1e-10).unwrap().pass;
        let b = check_vr_star(&v, 1e-10).unwrap().pass;
        prop_assert_eq!(a, b);
        prop_assert_eq!(a, !broken);
    }

    #[test]
    fn cone_margin_is_concave(seed in 0u64..10_000, lam in 0.0f64..1.0) {
        let v = fixtures::tensor_vessel(seed, &[2, 2]);
        let mut r = rng(seed + 1);
        let x = [fixtures::uniform(&mut r, -1.0, 1.0), fixtures::uniform(&mut r, -1.0, 1.0)];
        let y = [fixtures::uniform(&mut r, -1.0, 1.0), fixtures::uniform(&mut r, -1.0, 1.0)];
        let z = [lam * x[0] + (1.0 - lam) * y[0], lam * x[1] + (1.0 - lam) * y[1]];
        let lhs = pos_cone_margin(&v, &z);
        let rhs = lam * pos_cone_margin(&v, &x) + (1.0 - lam) * pos_cone_margin(&v, &y);
        prop_assert!(lhs >= rhs - 1e-12);
    }

    #[test]
    fn cayley_cogenerators_are_contractions(seed in 0u64..10_000, n in 1usize..5) {
        let mut r = rng(seed);
        let a = fixtures::dissipative(&mut r, n, 2.0, 0.0, 1.0);
        let t = cayley_cogenerator(&a).unwrap();
        prop_assert!(op_norm(&t) <= 1.0 + 1e-10);
    }
}
