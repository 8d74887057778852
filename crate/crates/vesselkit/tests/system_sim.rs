use proptest::prelude::*;
use vesselkit::fixtures::{self, rng};
use vesselkit::linalg::{c, expm, zeros, CMat, CVec, I};
use vesselkit::spectral::{GridSpec, SampledSignal};
use vesselkit::system::*;
use vesselkit::vessel::{make_strict_vessel, CommutingTuple, PairTable, Vessel, DEFAULT_RANK_TOL};

fn grid() -> GridSpec {
    GridSpec::new(1024, 20.0).unwrap()
}

fn one_dim_vessel(seed: u64, n: usize) -> Vessel {
    let mut r = rng(seed);
    let a = fixtures::dissipative(&mut r, n, 1.0, 0.3, 0.8);
    make_strict_vessel(&CommutingTuple::new(vec![a]).unwrap(), DEFAULT_RANK_TOL).unwrap()
}

/// Φ = 0, A Hermitian: a closed system.
fn closed_vessel(seed: u64, n: usize) -> Vessel {
    let h = fixtures::hermitian(&mut rng(seed), n, 1.0);
    Vessel {
        a: vec![h],
        phi: zeros(1, n),
        sigma: vec![CMat::identity(1, 1)],
        gamma: PairTable::zeros(1, 1),
        gamma_star: PairTable::zeros(1, 1),
        degenerate: false,
    }
}

fn gaussian_input(seed: u64, m: usize, g: GridSpec, center: f64) -> (CVec, SampledSignal) {
    let xi = fixtures::complex_vector(&mut rng(seed + 500), m);
    let s = SampledSignal::gaussian(g, &xi, center, 1.0);
    (xi, s)
}

/// Classical RK4 on x′ = iAx − iBu(t) with `sub` steps per grid cell.
fn rk4_oracle(a: &CMat, b: &CMat, h: &CVec, u: impl Fn(f64) -> CVec, t_end: f64, steps: usize) -> CVec {
    let dt = t_end / steps as f64;
    let f = |t: f64, x: &CVec| a * x * I - b * u(t) * I;
    let mut x = h.clone();
    let mut t = 0.0;
    for _ in 0..steps {
        let k1 = f(t, &x);
        let k2 = f(t + dt / 2.0, &(&x + &k1 * c(dt / 2.0, 0.0)));
        let k3 = f(t + dt / 2.0, &(&x + &k2 * c(dt / 2.0, 0.0)));
        let k4 = f(t + dt, &(&x + &k3 * c(dt, 0.0)));
        x += (k1 + k2 * c(2.0, 0.0) + k3 * c(2.0, 0.0) + k4) * c(dt / 6.0, 0.0);
        t += dt;
    }
    x
}

#[test]
fn closed_system_evolves_unitarily() {
    let v = closed_vessel(1, 3);
    let h = fixtures::complex_vector(&mut rng(2), 3);
    let u = SampledSignal::zeros(grid(), 1);
    let traj = propagate_state(&v, &h, &u, &[1.0], &[0.0]).unwrap();
    for x in &traj.x {
        assert!((x.norm() - h.norm()).abs() < 1e-10);
    }
    assert!(energy_balance_residual(&traj, &v) < 1e-10);
    let adj = adjoint_trajectory_check(&traj, &v);
    assert_eq!(adj.equation_residual, state_residual_order(&traj, &v, 6).max(output_residual(&traj, &v)));
    assert_eq!(adj.vessel_residual, 0.0);
}

#[test]
fn free_evolution_is_the_semigroup() {
    let v = one_dim_vessel(3, 3);
    let h = fixtures::complex_vector(&mut rng(4), 3);
    let g = grid();
    let traj = propagate_state(&v, &h, &SampledSignal::zeros(g, v.dim_e()), &[1.0], &[0.0]).unwrap();
    for k in [g.zero_index() + 37, g.zero_index() + 300, g.zero_index() - 50] {
        let t = g.node(k);
        let want = expm(&(&v.a[0] * c(0.0, t))) * &h;
        assert!((&traj.x[k] - &want).norm() < 1e-10 * want.norm().max(1.0), "t = {t}");
    }
}

#[test]
fn forced_state_matches_rk4() {
    let v = one_dim_vessel(5, 3);
    let g = grid();
    let (xi, u) = gaussian_input(5, v.dim_e(), g, 0.5);
    let h = fixtures::complex_vector(&mut rng(6), 3);
    let traj = propagate_state(&v, &h, &u, &[1.0], &[0.0]).unwrap();
    let b = v.phi.adjoint() * &v.sigma[0];
    let uf = |t: f64| &xi * c((-(t - 0.5f64).powi(2) / 2.0).exp(), 0.0);
    for k in [g.zero_index() + 64, g.zero_index() + 256, g.zero_index() - 128] {
        let t = g.node(k);
        let steps = ((t.abs() / g.step()).round() as usize) * 8;
        let want = rk4_oracle(&v.a[0], &b, &h, uf, t, steps);
        // relative: backwards in time the dissipative state grows like e^{|t|·λ}
        assert!((&traj.x[k] - &want).norm() < 1e-8 * want.norm().max(1.0), "t = {t}");
    }
}

#[test]
fn trapezoid_stencil_converges_at_second_order() {
    let v = one_dim_vessel(7, 3);
    let h = fixtures::complex_vector(&mut rng(8), 3);
    let b = v.phi.adjoint() * &v.sigma[0];
    let mut errs = Vec::new();
    for n in [256, 512, 1024] {
        let g = GridSpec::new(n, 4.0).unwrap();
        let (xi, u) = gaussian_input(7, v.dim_e(), g, 0.0);
        let traj = propagate_state_with(&v, &h, &u, &[1.0], &[0.0], 2).unwrap();
        let k = g.nearest_index(2.0);
        let uf = |t: f64| &xi * c((-t * t / 2.0).exp(), 0.0);
        let want = rk4_oracle(&v.a[0], &b, &h, uf, 2.0, 4000);
        errs.push((&traj.x[k] - want).norm());
    }
    for w in errs.windows(2) {
        assert!((w[0] / w[1]).log2() >= 1.9, "{errs:?}");
    }
}

#[test]
fn energy_balance_on_smooth_input() {
    let v = one_dim_vessel(9, 3);
    let h = fixtures::complex_vector(&mut rng(10), 3);
    let g = grid();
    let (_, u) = gaussian_input(9, v.dim_e(), g, 0.0);
    let traj = propagate_state(&v, &h, &u, &[1.0], &[0.0]).unwrap();
    let r = energy_balance_residual(&traj, &v);
    assert!(r <= 1e-6, "{r}");
    let mut res = Vec::new();
    for n in [256, 512] {
        let gn = GridSpec::new(n, 20.0).unwrap();
        let (_, un) = gaussian_input(9, v.dim_e(), gn, 0.0);
        res.push(energy_balance_residual(&propagate_state(&v, &h, &un, &[1.0], &[0.0]).unwrap(), &v));
    }
    res.push(r);
    for w in res.windows(2) {
        assert!((w[0] / w[1]).log2() >= 2.0, "{res:?}");
    }
}

#[test]
fn flipped_output_sign_is_detected() {
    let v = one_dim_vessel(11, 3);
    let h = fixtures::complex_vector(&mut rng(12), 3);
    let (_, u) = gaussian_input(11, v.dim_e(), grid(), 0.0);
    let traj = propagate_state(&v, &h, &u, &[1.0], &[0.0]).unwrap();
    let p = energy_profile(&traj, &v);
    let scale = p.state.iter().cloned().fold(0.0, f64::max);
    let y_energy = p.output.last().unwrap() - p.output[0];
    assert!(y_energy > 0.0);
    assert!(p.flipped_residual() * scale >= y_energy);
}

#[test]
fn energy_balance_along_a_cone_direction() {
    let v = fixtures::tensor_vessel(13, &[2, 2]);
    let h = fixtures::complex_vector(&mut rng(14), 4);
    let (_, u) = gaussian_input(13, v.dim_e(), grid(), 0.0);
    let xi = [1.0, 0.6];
    let traj = propagate_state(&v, &h, &u, &xi, &[0.0, 0.0]).unwrap();
    assert!(energy_balance_residual(&traj, &v) <= 1e-6);
    assert!(output_residual(&traj, &v) < 1e-12);
}

#[test]
fn state_residual_is_second_order() {
    let v = one_dim_vessel(15, 3);
    let h = fixtures::complex_vector(&mut rng(16), 3);
    let mut r = Vec::new();
    for n in [256, 512, 1024] {
        let g = GridSpec::new(n, 20.0).unwrap();
        let (_, u) = gaussian_input(15, v.dim_e(), g, 0.0);
        r.push(state_residual(&propagate_state(&v, &h, &u, &[1.0], &[0.0]).unwrap(), &v));
    }
    for w in r.windows(2) {
        assert!((w[0] / w[1]).log2() >= 1.9, "{r:?}");
    }
}

#[test]
fn extension_of_a_pure_state() {
    let v = one_dim_vessel(17, 3);
    let g = grid();
    let h = fixtures::complex_vector(&mut rng(18), 3);
    let mut triple = BoundaryTriple::zeros(g, v.dim_e(), 3);
    triple.h = h.clone();
    let traj = extend_trajectory(&v, &triple).unwrap();
    let k0 = g.zero_index();
    for k in [k0 + 100, k0 + 400, k0 - 100, k0 - 400] {
        let t = g.node(k);
        let gen = if t > 0.0 { v.a[0].clone() } else { v.a[0].adjoint() };
        let want = expm(&(gen * c(0.0, t))) * &h;
        assert!((&traj.x[k] - &want).norm() < 1e-10, "t = {t}");
        if t < 0.0 {
            assert!((&traj.u.values[k] - &v.phi * &want * I).norm() < 1e-10);
        }
    }
    let jump = traj.jump.as_ref().unwrap();
    assert!((&jump.u_left - &v.phi * &h * I).norm() < 1e-14);
}

#[test]
fn zero_triple_gives_zero_trajectory() {
    let v = one_dim_vessel(19, 3);
    let traj = extend_trajectory(&v, &BoundaryTriple::zeros(grid(), v.dim_e(), 3)).unwrap();
    assert!(traj.x.iter().chain(&traj.u.values).chain(&traj.y.values).all(|z| z.norm() == 0.0));
}

fn random_triple(seed: u64, v: &Vessel, g: GridSpec) -> BoundaryTriple {
    let mut r = rng(seed);
    let m = v.dim_e();
    let a = fixtures::complex_vector(&mut r, m);
    let b = fixtures::complex_vector(&mut r, m);
    let h = fixtures::complex_vector(&mut r, v.dim_h());
    let ca = fixtures::uniform(&mut r, -2.0, -0.5);
    let cb = fixtures::uniform(&mut r, 0.5, 2.0);
    BoundaryTriple::from_fns(
        g,
        move |t| &a * c((-(t - ca).powi(2) / 2.0).exp(), 0.0),
        h,
        move |t| &b * c((-(t - cb).powi(2) / 2.0).exp(), 0.0),
    )
}

#[test]
fn extension_obeys_output_bound_and_energy_balance() {
    let v = one_dim_vessel(20, 3);
    let triple = random_triple(20, &v, grid());
    let traj = extend_trajectory(&v, &triple).unwrap();
    let (lhs, rhs) = future_output_bound(&traj, &v);
    assert!(lhs <= rhs, "{lhs} > {rhs}");
    assert!(energy_balance_residual(&traj, &v) <= 1e-6);
    assert!(output_residual(&traj, &v) < 1e-12);
    assert!(state_residual(&traj, &v) < 1e-3);
}

#[test]
fn extension_is_linear() {
    let v = one_dim_vessel(21, 3);
    let g = grid();
    let a = random_triple(21, &v, g);
    let b = random_triple(22, &v, g);
    let combo = a.scaled(0.7).add(&b.scaled(-1.3));
    let ta = extend_trajectory(&v, &a).unwrap();
    let tb = extend_trajectory(&v, &b).unwrap();
    let tc = extend_trajectory(&v, &combo).unwrap();
    for k in 0..g.n {
        let x = &ta.x[k] * c(0.7, 0.0) - &tb.x[k] * c(1.3, 0.0);
        let u = &ta.u.values[k] * c(0.7, 0.0) - &tb.u.values[k] * c(1.3, 0.0);
        assert!((x - &tc.x[k]).norm() < 1e-10);
        assert!((u - &tc.u.values[k]).norm() < 1e-10);
    }
}

#[test]
fn perturbed_state_breaks_the_equations() {
    let v = one_dim_vessel(23, 3);
    let traj = extend_trajectory(&v, &random_triple(23, &v, grid())).unwrap();
    let base = state_residual_order(&traj, &v, 6) + output_residual(&traj, &v);
    let mut bad = traj.clone();
    let delta = CVec::from_vec(vec![c(1e-3, 0.0), c(0.0, 1e-3), c(1e-3, 1e-3)]);
    for x in &mut bad.x {
        *x += &delta;
    }
    let perturbed = state_residual_order(&bad, &v, 6) + output_residual(&bad, &v);
    assert!(perturbed > 10.0 * base, "{base} vs {perturbed}");
}

#[test]
fn pure_state_jets_match() {
    let v = one_dim_vessel(24, 3);
    let g = GridSpec::new(2048, 1.0).unwrap();
    let h = fixtures::complex_vector(&mut rng(25), 3);
    let mut triple = BoundaryTriple::zeros(g, v.dim_e(), 3);
    triple.h = h.clone();
    let traj = extend_trajectory(&v, &triple).unwrap();
    // both jets from the t < 0 side, where ũ and ỹ are the trajectory signals
    let k0 = g.zero_index();
    let left = |s: &SampledSignal| -> Vec<CVec> { (0..6).map(|i| s.values[k0 - i].clone()).collect() };
    let jump = traj.jump.as_ref().unwrap();
    let mut u_side = left(&traj.u);
    u_side[0] = jump.u_left.clone();
    let mut y_side = left(&traj.y);
    y_side[0] = jump.y_left.clone();
    let jets = BoundaryJets {
        u: one_sided_jet(&u_side, g.step(), -1.0),
        y: one_sided_jet(&y_side, g.step(), -1.0),
    };
    for r in k0_matching_residual(&v, &h, &jets) {
        assert!(r <= 1e-8, "{r}");
    }
}

#[test]
fn injected_gap_shows_in_first_condition() {
    let v = one_dim_vessel(26, 3);
    let m = v.dim_e();
    let zero = Jet { value: CVec::zeros(m), d1: CVec::zeros(m), d2: CVec::zeros(m) };
    let h = CVec::zeros(3);
    let future = matching_future_jet(&v, &h, &zero);
    let gap = fixtures::complex_vector(&mut rng(27), m) * c(1e-2, 0.0);
    let past = Jet { value: gap.clone(), ..zero };
    let r = k0_matching_residual(&v, &h, &BoundaryJets { u: future, y: past });
    assert!((r[0] - gap.norm()).abs() < 1e-15);
}

#[test]
fn matched_bump_family_has_small_residuals() {
    let v = one_dim_vessel(28, 3);
    let g = GridSpec::new(4096, 2.0).unwrap();
    assert!(g.step() <= 1e-3);
    for seed in 0..5 {
        let mut r = rng(100 + seed);
        let m = v.dim_e();
        let h = fixtures::complex_vector(&mut r, 3);
        let past = Jet {
            value: fixtures::complex_vector(&mut r, m),
            d1: fixtures::complex_vector(&mut r, m),
            d2: fixtures::complex_vector(&mut r, m),
        };
        let triple = matched_triple(&v, g, &h, &past, 0.5);
        for res in k0_matching_residual(&v, &h, &triple_jets(&triple)) {
            assert!(res <= 1e-6, "seed {seed}: {res}");
        }
    }
}

#[test]
fn adjoint_reading_of_a_trajectory() {
    let v = one_dim_vessel(29, 3);
    let (_, u) = gaussian_input(29, v.dim_e(), grid(), 0.0);
    let h = fixtures::complex_vector(&mut rng(30), 3);
    let traj = propagate_state(&v, &h, &u, &[1.0], &[0.0]).unwrap();
    let primal = state_residual_order(&traj, &v, 6).max(output_residual(&traj, &v));
    let adj = adjoint_trajectory_check(&traj, &v);
    assert!(adj.total <= 1e-6, "{adj:?}");
    assert!(adj.equation_residual <= 2.0 * primal, "{adj:?} vs {primal}");
}

#[test]
fn broken_linkage_shows_in_adjoint_check() {
    let base = fixtures::tensor_vessel(31, &[2, 2]);
    let h = fixtures::complex_vector(&mut rng(32), 4);
    let (_, u) = gaussian_input(31, base.dim_e(), GridSpec::new(256, 20.0).unwrap(), 0.0);
    let mut totals = Vec::new();
    for eps in [1e-4, 1e-3, 1e-2] {
        let mut v = base.clone();
        let m = v.dim_e();
        let g = v.gamma_star.upper(0, 1) + CMat::identity(m, m) * c(eps, 0.0);
        v.gamma_star.set(0, 1, g);
        let traj = propagate_state(&v, &h, &u, &[1.0, 0.5], &[0.0, 0.0]).unwrap();
        totals.push(adjoint_trajectory_check(&traj, &v).vessel_residual);
    }
    for w in totals.windows(2) {
        let ratio = w[1] / w[0];
        assert!((ratio - 10.0).abs() < 0.5, "{totals:?}");
    }
}

#[test]
fn mismatched_dimensions_are_rejected() {
    let v = one_dim_vessel(33, 3);
    let u = SampledSignal::zeros(grid(), v.dim_e() + 1);
    assert!(matches!(
        propagate_state(&v, &CVec::zeros(3), &u, &[1.0], &[0.0]),
        Err(SystemError::DimensionMismatch(_))
    ));
    let bad = BoundaryTriple::new(grid(), vec![], CVec::zeros(3), vec![]);
    assert!(bad.is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn propagation_is_linear(seed in 0u64..500, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let v = one_dim_vessel(seed, 2);
        let g = GridSpec::new(256, 10.0).unwrap();
        let (_, u1) = gaussian_input(seed, v.dim_e(), g, -1.0);
        let (_, u2) = gaussian_input(seed + 1, v.dim_e(), g, 1.0);
        let h1 = fixtures::complex_vector(&mut rng(seed + 2), 2);
        let h2 = fixtures::complex_vector(&mut rng(seed + 3), 2);
        let mix = |p: &CVec, q: &CVec| p * c(a, 0.0) + q * c(b, 0.0);
        let u = SampledSignal { values: u1.values.iter().zip(&u2.values).map(|(p, q)| mix(p, q)).collect(), ..u1.clone() };
        let t1 = propagate_state(&v, &h1, &u1, &[1.0], &[0.0]).unwrap();
        let t2 = propagate_state(&v, &h2, &u2, &[1.0], &[0.0]).unwrap();
        let t = propagate_state(&v, &mix(&h1, &h2), &u, &[1.0], &[0.0]).unwrap();
        for k in 0..g.n {
            prop_assert!((mix(&t1.x[k], &t2.x[k]) - &t.x[k]).norm() <= 1e-10);
            prop_assert!((mix(&t1.y.values[k], &t2.y.values[k]) - &t.y.values[k]).norm() <= 1e-10);
        }
    }
}
