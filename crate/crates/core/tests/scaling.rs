use std::sync::Arc;

use delab_core::grid::{make_grid, SymMat};
use delab_core::operators::{
    check_ellipticity, omega_norm_estimate, DegeneracyForm, DegeneracySpec, EllipticityParams,
    ModulusOfContinuity, OperatorSpec, ScalarFn,
};
use delab_core::scaling::{scale_problem, verify_conjugation, verify_scaling, ScalingParams};
use delab_core::solver::ProblemSpec;

fn variable_problem(gamma: f64) -> ProblemSpec {
    let coeff = Arc::new(|x: &[f64]| {
        let mut a = SymMat::diag(&[1.25 + 0.25 * x[0], 1.25 - 0.25 * x[1]]);
        a.set(0, 1, 0.1 * x[0] * x[1]);
        a
    });
    let c: ScalarFn = Arc::new(|x: &[f64]| 1.5 + 0.3 * x[1]);
    ProblemSpec {
        operator: OperatorSpec::LinearCoeff {
            coeff,
            params: EllipticityParams::new(0.5, 2.0).unwrap(),
        },
        degeneracy: DegeneracySpec::new(gamma, 1.0, 2.0, DegeneracyForm::Modulated(c)).unwrap(),
        rhs: Arc::new(|x: &[f64]| 1.0 + x[0] * x[0]),
        boundary: Arc::new(|_: &[f64]| 0.0),
        domain: make_grid(2, 9, -1.0, 1.0).unwrap(),
    }
}

#[test]
fn structure_is_preserved_for_every_hessian_operator() {
    let params = EllipticityParams::new(0.5, 2.0).unwrap();
    let sp = ScalingParams::new(0.3, 4.0, &[0.2, -0.3]).unwrap();
    let mut problem = variable_problem(1.5);
    for op in [
        OperatorSpec::Trace,
        OperatorSpec::PucciMinus(params),
        OperatorSpec::PucciPlus(params),
        OperatorSpec::min_of_linears(vec![SymMat::diag(&[0.5, 2.0]), SymMat::diag(&[2.0, 0.5])], params).unwrap(),
        variable_problem(1.5).operator,
    ] {
        problem.operator = op;
        let rep = verify_scaling(&problem, &sp, 2000, 11).unwrap();
        assert!(rep.pass, "{:?}: {rep:?}", problem.operator);
        let original = check_ellipticity(&problem.operator, 2, 10, 0).declared;
        assert_eq!(rep.ellipticity.declared, original);
    }
}

#[test]
fn domain_contraction_shrinks_oscillation() {
    let problem = variable_problem(1.0);
    let omega = ModulusOfContinuity::Power(1.0);
    let sp = ScalingParams::new(0.5, 1.0, &[0.0, 0.0]).unwrap();
    let scaled = scale_problem(&problem, &sp).unwrap();
    let before = omega_norm_estimate(&problem.operator, 2, &omega, 20_000, 1).unwrap();
    let after = omega_norm_estimate(&scaled.operator, 2, &omega, 20_000, 1).unwrap();
    assert!(after <= before, "{after} > {before}");
    assert!(after <= 0.5 * before * 1.05, "{after} vs {before}");
}

#[test]
fn wrong_rhs_exponent_is_caught() {
    let problem = variable_problem(2.0);
    let sp = ScalingParams::new(0.4, 3.0, &[0.1, 0.1]).unwrap();
    let mut mutated = scale_problem(&problem, &sp).unwrap();
    let rhs = problem.rhs.clone();
    let p = sp.clone();
    // eta^{gamma+1} instead of eta^{gamma+2}
    let wrong = sp.eta.powf(3.0) / sp.tau.powf(3.0);
    mutated.rhs = Arc::new(move |x: &[f64]| wrong * rhs(&p.map_point(x)));
    let rep = verify_conjugation(&problem, &mutated, &sp, 200, 3).unwrap();
    assert!(rep.failures > 0);
    assert!(rep.max_defect > 1e-6);
    let honest = scale_problem(&problem, &sp).unwrap();
    assert_eq!(verify_conjugation(&problem, &honest, &sp, 200, 3).unwrap().failures, 0);
}
