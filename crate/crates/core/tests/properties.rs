use std::sync::Arc;

use proptest::prelude::*;

use delab_core::grid::{make_grid, sample, Jet, Point, ScalarField, SymMat};
use delab_core::operators::{
    eval_H, eval_operator, fd_jet, DegeneracyForm, DegeneracySpec, EllipticityParams, OperatorSpec,
    ScalarFn,
};
use delab_core::regularity::{best_affine_fit, dyadic_decay, least_squares_affine_fit};
use delab_core::scaling::{scale_problem, verify_conjugation, ScalingParams};
use delab_core::solver::{solve_dirichlet, ProblemSpec, SolveConfig};

/// Independent minimax oracle for 1D data: `phi(b) = (max - min)/2` of
/// `u - b x` is convex in `b`, so ternary search finds its minimum.
fn ternary_minimax(xs: &[f64], us: &[f64]) -> f64 {
    let phi = |b: f64| {
        let (lo, hi) = xs.iter().zip(us).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (x, u)| {
            let r = u - b * x;
            (lo.min(r), hi.max(r))
        });
        0.5 * (hi - lo)
    };
    let (mut a, mut b) = (-1e3, 1e3);
    for _ in 0..300 {
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        if phi(m1) <= phi(m2) {
            b = m2;
        } else {
            a = m1;
        }
    }
    phi(0.5 * (a + b))
}

fn problem_1d(n: usize, gamma: f64, f: ScalarFn, bc: ScalarFn) -> ProblemSpec {
    ProblemSpec {
        operator: OperatorSpec::Trace,
        degeneracy: DegeneracySpec::pure_power(gamma).unwrap(),
        rhs: f,
        boundary: bc,
        domain: make_grid(1, n, -1.0, 1.0).unwrap(),
    }
}

fn sym2() -> impl Strategy<Value = SymMat> {
    (-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64).prop_map(|(a, b, c)| {
        let mut m = SymMat::diag(&[a, c]);
        m.set(0, 1, b);
        m
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn minimax_matches_ternary_oracle(
        coeffs in prop::collection::vec(-2.0..2.0f64, 4),
        kink in -0.5..0.5f64,
        radius in 0.1..1.0f64,
    ) {
        let g = make_grid(1, 257, -1.0, 1.0).unwrap();
        let f = |x: &[f64]| coeffs[0] * x[0] + coeffs[1] * x[0] * x[0] + coeffs[2] * (3.0 * x[0]).sin()
            + coeffs[3] * (x[0] - kink).abs().powf(1.5);
        let u = sample(&g, f).unwrap();
        let (_, e) = best_affine_fit(&u, &[0.0], radius).unwrap();
        let idx = g.ball_indices(&[0.0], radius);
        let xs: Vec<f64> = idx.iter().map(|&i| g.coord(i)[0]).collect();
        let us: Vec<f64> = idx.iter().map(|&i| u.value_at(i)).collect();
        let reference = ternary_minimax(&xs, &us);
        prop_assert!((e - reference).abs() <= 1e-9 * (1.0 + reference), "{} vs {}", e, reference);
    }

    #[test]
    fn minimax_never_exceeds_least_squares(
        coeffs in prop::collection::vec(-2.0..2.0f64, 5),
        cx in -0.3..0.3f64,
        cy in -0.3..0.3f64,
    ) {
        let g = make_grid(2, 33, -1.0, 1.0).unwrap();
        let u = sample(&g, |x| coeffs[0] * x[0] * x[1] + coeffs[1] * (2.0 * x[0]).cos()
            + coeffs[2] * x[1].abs().powf(1.2) + coeffs[3] * x[0] + coeffs[4]).unwrap();
        let (_, e) = best_affine_fit(&u, &[cx, cy], 0.6).unwrap();
        let (_, e_ls) = least_squares_affine_fit(&u, &[cx, cy], 0.6).unwrap();
        prop_assert!(e <= e_ls + 1e-14);
    }

    #[test]
    fn decay_scales_with_data(tau in 0.01..100.0f64, a in 0.2..0.9f64) {
        let g = make_grid(1, 1025, -1.0, 1.0).unwrap();
        let u = sample(&g, |x| x[0].abs().powf(1.0 + a) + 0.3 * x[0]).unwrap();
        let v = u.map(|t| t / tau).unwrap();
        let r1 = dyadic_decay(&u, &[0.0], 0.5, 6).unwrap();
        let r2 = dyadic_decay(&v, &[0.0], 0.5, 6).unwrap();
        for (l1, l2) in r1.levels.iter().zip(&r2.levels) {
            prop_assert!((l1.e / tau - l2.e).abs() <= 1e-10 * l2.e.max(1e-300) + 1e-15);
        }
        prop_assert!((r1.alpha_hat.unwrap() - r2.alpha_hat.unwrap()).abs() <= 1e-8);
    }

    #[test]
    fn csv_round_trip_is_bit_exact(values in prop::collection::vec(-1e300..1e300f64, 9)) {
        let g = make_grid(2, 3, -1.0, 1.0).unwrap();
        let u = ScalarField::new(g, values).unwrap();
        let back = ScalarField::from_csv_str(&u.to_csv_string()).unwrap();
        for (a, b) in u.values().iter().zip(back.values()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn flat_index_round_trip(n in 3usize..40, seed in 0usize..10_000) {
        let g = make_grid(2, n, -1.0, 1.0).unwrap();
        let i = seed % g.len();
        let [ix, iy] = g.multi_index(i);
        prop_assert_eq!(g.flat_index(ix, iy), i);
        prop_assert_eq!(g.nearest_index(&g.coord(i)), i);
    }

    #[test]
    fn equation_is_degenerate_elliptic(
        m in sym2(),
        d1 in 0.0..2.0f64,
        d2 in 0.0..2.0f64,
        theta in 0.0..6.3f64,
        px in -2.0..2.0f64,
        py in -2.0..2.0f64,
        gamma in 0.0..3.0f64,
    ) {
        let (c, s) = (theta.cos(), theta.sin());
        let q = [Point::new(&[c, s]), Point::new(&[-s, c])];
        let pmat = SymMat::conjugate_diag(&q, &[d1, d2]);
        let params = EllipticityParams::new(0.5, 2.0).unwrap();
        let h = DegeneracySpec::pure_power(gamma).unwrap();
        let p = Point::new(&[px, py]);
        for op in [OperatorSpec::Trace, OperatorSpec::PucciMinus(params), OperatorSpec::PucciPlus(params),
                   OperatorSpec::Infinity, OperatorSpec::p_nondiv(3.0).unwrap()] {
            let jet = |hess: SymMat| Jet::new(0.0, p, hess);
            let hv = eval_H(&h, &[0.0, 0.0], &p);
            let lo = hv * eval_operator(&op, &[0.0, 0.0], &jet(m)).unwrap();
            let hi = hv * eval_operator(&op, &[0.0, 0.0], &jet(m.add(&pmat))).unwrap();
            prop_assert!(hi >= lo - 1e-12 * (1.0 + lo.abs()), "{:?}: {} < {}", op, hi, lo);
        }
    }

    #[test]
    fn conjugation_identity_holds(
        eta in 0.05..1.0f64,
        tau in 1.0..50.0f64,
        gamma in 0.0..4.0f64,
        seed in 0u64..1000,
    ) {
        let params = EllipticityParams::new(0.5, 2.0).unwrap();
        let c: ScalarFn = Arc::new(|x: &[f64]| 1.5 + 0.5 * x[0].sin());
        let problem = ProblemSpec {
            operator: OperatorSpec::PucciMinus(params),
            degeneracy: DegeneracySpec::new(gamma, 1.0, 2.0, DegeneracyForm::Modulated(c)).unwrap(),
            rhs: Arc::new(|x: &[f64]| 2.0 + x[0] * x[1]),
            boundary: Arc::new(|_: &[f64]| 0.0),
            domain: make_grid(2, 9, -1.0, 1.0).unwrap(),
        };
        let sp = ScalingParams::new(eta, tau, &[0.5 * (1.0 - eta), 0.0]).unwrap();
        let scaled = scale_problem(&problem, &sp).unwrap();
        let rep = verify_conjugation(&problem, &scaled, &sp, 20, seed).unwrap();
        prop_assert_eq!(rep.failures, 0);
    }

    #[test]
    fn scaling_composes(
        e1 in 0.1..1.0f64, e2 in 0.1..1.0f64,
        t1 in 1.0..5.0f64, t2 in 1.0..5.0f64,
        s1 in -1.0..1.0f64, s2 in -1.0..1.0f64,
        x in -1.0..1.0f64, y in -1.0..1.0f64,
    ) {
        let coeff = Arc::new(|z: &[f64]| SymMat::diag(&[1.5 + 0.5 * z[0].sin(), 1.0 + 0.5 * z[1] * z[1]]));
        let problem = ProblemSpec {
            operator: OperatorSpec::LinearCoeff { coeff, params: EllipticityParams::new(0.5, 2.0).unwrap() },
            degeneracy: DegeneracySpec::pure_power(1.0).unwrap(),
            rhs: Arc::new(|z: &[f64]| (z[0] + 2.0 * z[1]).cos()),
            boundary: Arc::new(|z: &[f64]| z[0] * z[1]),
            domain: make_grid(2, 9, -1.0, 1.0).unwrap(),
        };
        let p1 = ScalingParams::new(e1, t1, &[s1 * (1.0 - e1), 0.0]).unwrap();
        let p2 = ScalingParams::new(e2, t2, &[0.0, s2 * (1.0 - e2)]).unwrap();
        let nested = scale_problem(&scale_problem(&problem, &p1).unwrap(), &p2).unwrap();
        let direct = scale_problem(&problem, &p1.compose(&p2)).unwrap();
        let z = [x, y];
        let m = SymMat::from_rows(&[&[1.0, 0.3], &[0.3, -2.0]]).unwrap();
        let jet = Jet::new(0.0, Point::new(&[0.2, -0.4]), m);
        let a = eval_operator(&nested.operator, &z, &jet).unwrap();
        let b = eval_operator(&direct.operator, &z, &jet).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        prop_assert!(((nested.rhs)(&z) - (direct.rhs)(&z)).abs() <= 1e-12);
        prop_assert!(((nested.boundary)(&z) - (direct.boundary)(&z)).abs() <= 1e-12);
    }

    #[test]
    fn fd_jet_is_exact_on_quadratics(a in -2.0..2.0f64, b in -2.0..2.0f64, c in -2.0..2.0f64, d in -2.0..2.0f64) {
        let g = make_grid(2, 17, -1.0, 1.0).unwrap();
        let u = sample(&g, |x| a * x[0] * x[0] + b * x[0] * x[1] + c * x[1] * x[1] + d * x[0]).unwrap();
        let i = g.flat_index(5, 9);
        let x = g.coord(i);
        let j = fd_jet(&u, i).unwrap();
        prop_assert!((j.hessian.get(0, 0) - 2.0 * a).abs() < 1e-9);
        prop_assert!((j.hessian.get(0, 1) - b).abs() < 1e-9);
        prop_assert!((j.hessian.get(1, 1) - 2.0 * c).abs() < 1e-9);
        prop_assert!((j.gradient[0] - (2.0 * a * x[0] + b * x[1] + d)).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn comparison_principle_1d(
        gamma in 0.0..2.5f64,
        base in 0.2..2.0f64,
        bump in 0.0..1.5f64,
        slope in -1.0..1.0f64,
    ) {
        let bc: ScalarFn = Arc::new(move |x: &[f64]| slope * x[0]);
        let f2: ScalarFn = Arc::new(move |x: &[f64]| base * (1.0 + 0.2 * x[0]));
        let f1: ScalarFn = Arc::new(move |x: &[f64]| (base + bump) * (1.0 + 0.2 * x[0]));
        let cfg = SolveConfig::default_for_dim(1);
        let (u1, _) = solve_dirichlet(&problem_1d(33, gamma, f1, bc.clone()), &cfg).unwrap();
        let (u2, _) = solve_dirichlet(&problem_1d(33, gamma, f2, bc), &cfg).unwrap();
        for (a, b) in u1.values().iter().zip(u2.values()) {
            prop_assert!(*a <= b + 10.0 * cfg.tol);
        }
    }

    #[test]
    fn boundary_values_are_exact(gamma in 0.0..2.0f64, k in 0.5..3.0f64) {
        let bc: ScalarFn = Arc::new(move |x: &[f64]| (k * x[0]).sin() + 0.1 * x[1] * x[1]);
        let problem = ProblemSpec {
            operator: OperatorSpec::Trace,
            degeneracy: DegeneracySpec::pure_power(gamma).unwrap(),
            rhs: Arc::new(|_: &[f64]| 1.0),
            boundary: bc.clone(),
            domain: make_grid(2, 17, -1.0, 1.0).unwrap(),
        };
        let (u, _) = solve_dirichlet(&problem, &SolveConfig::default_for_dim(2)).unwrap();
        let g = u.grid();
        for i in 0..g.len() {
            if g.is_boundary(i) {
                prop_assert_eq!(u.value_at(i).to_bits(), bc(&g.coord(i)).to_bits());
            }
        }
    }
}
