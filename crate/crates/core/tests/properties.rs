use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4, SQRT_2};

use cascade_core::cascade::{chsh_first_observer_exact, state_sequence};
use cascade_core::measurements::parity_block;
use cascade_core::{
    alice_povms_bipartite, bob_povms_bipartite, chsh_lower_bound, gamma_schedule_chsh,
    gamma_schedule_svetlichny, kron, run_cascade, svetlichny_closed_form, trace, tripartite_povms,
    CascadeConfig, ComplexMatrix, GhzState, InitialState, SchmidtState, Sharpness,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn complex_matrix(dim: usize) -> impl Strategy<Value = ComplexMatrix> {
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim * dim).prop_map(move |v| {
        ComplexMatrix::new(dim, v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect()).unwrap()
    })
}

fn any_matrix(max_dim: usize) -> impl Strategy<Value = ComplexMatrix> {
    (1..=max_dim).prop_flat_map(complex_matrix)
}

/// `B B†` with a random number of zeroed columns, so rank-deficient inputs
/// show up too.
fn psd_matrix(max_dim: usize) -> impl Strategy<Value = ComplexMatrix> {
    (1..=max_dim)
        .prop_flat_map(|d| (complex_matrix(d), 0..d))
        .prop_map(|(b, drop)| {
            let d = b.dim();
            let b = ComplexMatrix::from_fn(d, |i, j| if j < drop { Complex64::new(0.0, 0.0) } else { b[(i, j)] });
            &b * &b.adjoint()
        })
}

/// Hermitian involution `U diag(±1) U†`.
fn involution(max_dim: usize) -> impl Strategy<Value = ComplexMatrix> {
    (2..=max_dim)
        .prop_flat_map(|d| (complex_matrix(d), proptest::collection::vec(any::<bool>(), d)))
        .prop_map(|(m, signs)| {
            let h = (&m + &m.adjoint()).scale(0.5);
            let eig = h.eigen_hermitian().unwrap();
            let spectrum: Vec<f64> = signs.iter().map(|&s| if s { 1.0 } else { -1.0 }).collect();
            eig.reconstruct_with(&spectrum)
        })
}

fn schmidt(max_s: usize) -> impl Strategy<Value = SchmidtState> {
    (1..=max_s)
        .prop_flat_map(|s| (proptest::collection::vec(0.0f64..1.0, s), 0..3usize))
        .prop_filter_map("zero vector", |(mut c, extra)| {
            c.sort_by(|a, b| b.total_cmp(a));
            let t = c.len() + extra;
            SchmidtState::normalized(c, t).ok().map(|(st, _)| st)
        })
}

fn entangled_schmidt(min_s: usize, max_s: usize) -> impl Strategy<Value = SchmidtState> {
    (min_s..=max_s, 0..3usize)
        .prop_flat_map(|(s, extra)| (proptest::collection::vec(0.05f64..1.0, s), Just(extra)))
        .prop_map(|(mut c, extra)| {
            c.sort_by(|a, b| b.total_cmp(a));
            let t = c.len() + extra;
            SchmidtState::normalized(c, t).unwrap().0
        })
}

fn theta() -> impl Strategy<Value = f64> {
    1e-3..=FRAC_PI_4
}

fn gammas(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.01f64..=1.0, 1..=n)
}

fn closed_form_root(p: &ComplexMatrix, gamma: f64, sign: f64) -> ComplexMatrix {
    let (u, v) = ((1.0 + gamma).sqrt(), (1.0 - gamma).sqrt());
    let c = 1.0 / (2.0 * SQRT_2);
    &ComplexMatrix::identity(p.dim()).scale(c * (u + v)) + &p.scale(sign * c * (u - v))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn psd_sqrt_squares_back(a in psd_matrix(16)) {
        let r = a.psd_sqrt().unwrap();
        prop_assert!((&r * &r).max_abs_diff(&a) < 1e-9 * a.max_abs().max(1.0));
        prop_assert!(r.hermiticity_error() < 1e-12);
    }

    #[test]
    fn kron_is_associative(a in any_matrix(4), b in any_matrix(4), c in any_matrix(3)) {
        let left = kron(&kron(&a, &b), &c);
        let right = kron(&a, &kron(&b, &c));
        prop_assert!(left.max_abs_diff(&right) < 1e-12);
    }

    #[test]
    fn kron_is_bilinear(
        (a1, a2) in (1..=4usize).prop_flat_map(|d| (complex_matrix(d), complex_matrix(d))),
        b in any_matrix(4),
        s in -2.0f64..2.0,
    ) {
        let lhs = kron(&(&a1 + &a2.scale(s)), &b);
        let rhs = &kron(&a1, &b) + &kron(&a2, &b).scale(s);
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        let lhs = kron(&b, &(&a1 + &a2.scale(s)));
        let rhs = &kron(&b, &a1) + &kron(&b, &a2).scale(s);
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn trace_is_multiplicative(a in any_matrix(5), b in any_matrix(5)) {
        prop_assert!((trace(&kron(&a, &b)) - trace(&a) * trace(&b)).norm() < 1e-10);
    }

    #[test]
    fn unsharp_roots_match_closed_form(p in involution(8), gamma in 0.0f64..=1.0) {
        let id = ComplexMatrix::identity(p.dim());
        for sign in [1.0, -1.0] {
            let effect = (&id + &p.scale(sign * gamma)).scale(0.5);
            let root = effect.psd_sqrt().unwrap();
            prop_assert!(root.max_abs_diff(&closed_form_root(&p, gamma, sign)) < 1e-10);
        }
    }

    #[test]
    fn densities_are_pure_states(st in schmidt(6)) {
        let rho = st.density();
        prop_assert!(rho.hermiticity_error() < 1e-12);
        prop_assert!((rho.trace().re - 1.0).abs() < 1e-12);
        prop_assert!(((&rho * &rho).trace().re - 1.0).abs() < 1e-10);
        prop_assert!(rho.min_eigenvalue().unwrap() > -1e-10);
    }

    #[test]
    fn l_is_at_most_one(st in schmidt(7)) {
        let l = st.l_value();
        let c = st.coeffs();
        prop_assert!(l <= 1.0 + 1e-12);
        let c2 = c.get(1).copied().unwrap_or(0.0);
        prop_assert_eq!(l > 0.0, c2 > 0.0);
        let bell_like = c.len() >= 2
            && (c[0] - FRAC_1_SQRT_2).abs() < 1e-6
            && (c[1] - FRAC_1_SQRT_2).abs() < 1e-6;
        if (l - 1.0).abs() < 1e-12 {
            prop_assert!(bell_like);
        }
    }

    #[test]
    fn ghz_densities_are_pure(alpha in 1e-3f64..(std::f64::consts::FRAC_PI_2 - 1e-3)) {
        let rho = GhzState::new(alpha).unwrap().density();
        prop_assert!(((&rho * &rho).trace().re - 1.0).abs() < 1e-10);
        prop_assert!((rho.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn builders_produce_valid_measurements(d in 2..=7usize, th in theta(), g in 0.01f64..=1.0) {
        let bip = alice_povms_bipartite(d, th).unwrap().into_iter().chain(bob_povms_bipartite(d, g).unwrap());
        let tri = tripartite_povms(th, g).unwrap();
        let all: Vec<_> = bip.chain(tri.alice).chain(tri.bob).chain(tri.charlie).collect();
        for pair in &all {
            prop_assert!(pair.validate().is_ok());
            let eig = pair.observable().matrix().eigen_hermitian().unwrap();
            prop_assert!(eig.values.iter().all(|v| v.abs() <= 1.0 + 1e-10));
        }
    }

    #[test]
    fn bob_roots_match_closed_form(d in 2..=7usize, g in 0.01f64..=1.0) {
        let [_, b1] = bob_povms_bipartite(d, g).unwrap();
        let p = parity_block(d, &ComplexMatrix::pauli_x());
        prop_assert!(b1.sqrt_effect(0).max_abs_diff(&closed_form_root(&p, g, 1.0)) < 1e-10);
        prop_assert!(b1.sqrt_effect(1).max_abs_diff(&closed_form_root(&p, g, -1.0)) < 1e-10);
    }

    #[test]
    fn first_gamma_increases_with_theta(l in 0.05f64..=1.0, eps in 1e-6f64..0.1) {
        let grid: Vec<f64> = (1..=200).map(|i| FRAC_PI_4 * i as f64 / 200.0).collect();
        let g: Vec<f64> = grid
            .iter()
            .filter_map(|&t| gamma_schedule_chsh(l, eps, t, 1).gammas()[0].value())
            .collect();
        prop_assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn chsh_schedule_satisfies_recursion(
        l in 0.3f64..=1.0, eps in 1e-4f64..0.1, th in 0.05f64..=FRAC_PI_4,
    ) {
        let sched = gamma_schedule_chsh(l, eps, th, 8);
        let g = sched.finite();
        prop_assert!(g.windows(2).all(|w| w[1] > w[0]));
        let (s, c) = th.sin_cos();
        let mut product = 1.0;
        for (k, &gk) in g.iter().enumerate() {
            let rhs = (1.0 + eps) * (2f64.powi(k as i32) - c * product) / (l * s);
            prop_assert!((gk - rhs).abs() < 1e-12, "k={} gamma={} rhs={}", k + 1, gk, rhs);
            product *= 1.0 + (1.0 - gk * gk).sqrt();
        }
        // Everything after the first value outside (0, 1) is unbounded.
        let gs = sched.gammas();
        if let Some(i) = gs.iter().position(|x| !x.is_feasible()) {
            prop_assert!(gs[i + 1..].iter().all(|x| *x == Sharpness::Unbounded));
        }
    }

    #[test]
    fn svetlichny_schedule_more_than_doubles(sin2 in 0.5f64..=1.0, eps in 1e-6f64..0.1, th in theta()) {
        let sin_2alpha = sin2.sqrt();
        let sched = gamma_schedule_svetlichny(sin_2alpha, eps, th, 6);
        let g = sched.finite();
        let (s, c) = th.sin_cos();
        let mut product = 1.0;
        for (k, &gk) in g.iter().enumerate() {
            let rhs = (1.0 + eps) * (2f64.powi(k as i32 + 1) / (sin_2alpha * (c + s)) - product);
            prop_assert!((gk - rhs).abs() < 1e-12);
            product *= 1.0 + (1.0 - gk * gk).sqrt();
        }
        let feasible = sched.feasible_len();
        for j in 1..feasible {
            prop_assert!(g[j] / g[j - 1] > 2.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn even_dimension_cascades_match_theorem(
        half in 1..=3usize, th in theta(), gs in gammas(5),
        raw in proptest::collection::vec(0.05f64..1.0, 6),
    ) {
        let s = 2 * half;
        let mut c = raw[..s].to_vec();
        c.sort_by(|a, b| b.total_cmp(a));
        let (st, _) = SchmidtState::normalized(c, s).unwrap();
        let l = st.l_value();
        let cfg = CascadeConfig::new(InitialState::Bipartite(st), th, gs.clone()).unwrap();
        let res = run_cascade(&cfg).unwrap();
        for step in &res.steps {
            prop_assert!((step.simulated - chsh_lower_bound(step.k, l, th, &gs)).abs() < 1e-10);
            prop_assert!(step.simulated.abs() <= 2.0 * SQRT_2 + 1e-9);
        }
    }

    #[test]
    fn bound_never_exceeds_value(st in entangled_schmidt(2, 5), th in theta(), gs in gammas(4)) {
        let first_exact = chsh_first_observer_exact(&st, th, gs[0]);
        let cfg = CascadeConfig::new(InitialState::Bipartite(st), th, gs).unwrap();
        let res = run_cascade(&cfg).unwrap();
        prop_assert!((res.steps[0].simulated - first_exact).abs() < 1e-10);
        for step in &res.steps {
            prop_assert!(step.gap() >= -1e-10, "k={} gap={}", step.k, step.gap());
            prop_assert!(step.simulated.abs() <= 2.0 * SQRT_2 + 1e-9);
        }
    }

    #[test]
    fn channel_preserves_states(st in entangled_schmidt(2, 5), th in theta(), gs in gammas(5)) {
        let cfg = CascadeConfig::new(InitialState::Bipartite(st), th, gs).unwrap();
        for rho in state_sequence(&cfg).unwrap() {
            prop_assert!((rho.trace().re - 1.0).abs() < 1e-10);
            prop_assert!(rho.hermiticity_error() < 1e-10);
            prop_assert!(rho.min_eigenvalue().unwrap() > -1e-10);
        }
    }

    #[test]
    fn x_correlator_halves_each_step(half in 1..=3usize, th in theta(), gs in gammas(5)) {
        let s = 2 * half;
        let c: Vec<f64> = (0..s).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let (st, _) = SchmidtState::normalized(c, s).unwrap();
        let x = parity_block(s, &ComplexMatrix::pauli_x());
        let xx = kron(&x, &x);
        let cfg = CascadeConfig::new(InitialState::Bipartite(st), th, gs).unwrap();
        let values: Vec<f64> = state_sequence(&cfg)
            .unwrap()
            .iter()
            .enumerate()
            .map(|(k, rho)| 2f64.powi(k as i32) * (rho * &xx).trace().re)
            .collect();
        for v in &values {
            prop_assert!((v - values[0]).abs() < 1e-10);
        }
    }

    #[test]
    fn svetlichny_cascades_match_closed_form(
        alpha in 0.01f64..1.56, th in theta(), gs in gammas(4),
    ) {
        let ghz = GhzState::new(alpha).unwrap();
        let cfg = CascadeConfig::new(InitialState::Ghz(ghz), th, gs.clone()).unwrap();
        for step in run_cascade(&cfg).unwrap().steps {
            let exact = svetlichny_closed_form(step.k, ghz.sin_2alpha(), th, &gs);
            prop_assert!((step.simulated - exact).abs() < 1e-10);
            prop_assert!(step.simulated.abs() <= 4.0 * SQRT_2 + 1e-9);
        }
    }
}
