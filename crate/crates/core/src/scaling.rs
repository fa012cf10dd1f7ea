//! Rescaling a problem into the small-data regime.
//!
//! With `u(X) = v(eta X + Y0) / tau` the data transform as
//! `F' (X, M) = (tau/eta^2) F(eta X + Y0, (eta^2/tau) M)`,
//! `H' (X, p) = (tau/eta)^gamma H(eta X + Y0, (eta/tau) p)` and
//! `f' (X) = eta^{gamma+2}/tau^{gamma+1} f(eta X + Y0)`.
//! For operators that are positively 1-homogeneous in `M` (every
//! Hessian-only kind here) `u` then solves the transformed equation
//! whenever `v` solves the original one.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{Jet, Point, ScalarField};
use crate::operators::{
    check_ellipticity, eval_H, eval_operator, omega_norm_estimate, random_symmetric,
    DegeneracyForm, DegeneracySpec, EllipticityReport, ModulusOfContinuity, OperatorSpec, ScalarFn,
};
use crate::solver::ProblemSpec;

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingParams {
    pub eta: f64,
    pub tau: f64,
    pub y0: Point,
}

impl ScalingParams {
    pub fn new(eta: f64, tau: f64, y0: &[f64]) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::Domain(format!("eta must lie in (0, 1], got {eta}")));
        }
        if !(tau >= 1.0 && tau.is_finite()) {
            return Err(Error::Domain(format!("tau must be >= 1, got {tau}")));
        }
        if y0.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("Y0 must be finite".into()));
        }
        Ok(Self {
            eta,
            tau,
            y0: Point::new(y0),
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            eta: 1.0,
            tau: 1.0,
            y0: Point::zeros(dim),
        }
    }

    /// Scaling by `self` and then by `next` equals scaling by the result.
    pub fn compose(&self, next: &ScalingParams) -> ScalingParams {
        ScalingParams {
            eta: self.eta * next.eta,
            tau: self.tau * next.tau,
            y0: self.y0.axpy(self.eta, &next.y0),
        }
    }

    #[inline]
    pub fn map_point(&self, x: &[f64]) -> Point {
        self.y0.axpy(self.eta, x)
    }

    /// `eta^{gamma+2} / tau^{gamma+1}`
    pub fn rhs_factor(&self, gamma: f64) -> f64 {
        self.eta.powf(gamma + 2.0) / self.tau.powf(gamma + 1.0)
    }
}

fn scale_operator(op: &OperatorSpec, params: &ScalingParams) -> OperatorSpec {
    match op {
        // X-independent and 1-homogeneous: the conjugation cancels exactly
        OperatorSpec::Trace
        | OperatorSpec::PucciMinus(_)
        | OperatorSpec::PucciPlus(_)
        | OperatorSpec::MinOfLinears { .. } => op.clone(),
        _ => OperatorSpec::Rescaled {
            inner: Box::new(op.clone()),
            eta: params.eta,
            tau: params.tau,
            y0: params.y0,
        },
    }
}

fn scale_degeneracy(h: &DegeneracySpec, params: &ScalingParams) -> DegeneracySpec {
    // (tau/eta)^gamma |(eta/tau) p|^gamma = |p|^gamma, so only c(X) moves
    let form = match &h.form {
        DegeneracyForm::PurePower => DegeneracyForm::PurePower,
        DegeneracyForm::Modulated(c) => {
            let c = c.clone();
            let p = params.clone();
            DegeneracyForm::Modulated(Arc::new(move |x: &[f64]| c(&p.map_point(x))))
        }
    };
    DegeneracySpec {
        gamma: h.gamma,
        lambda: h.lambda,
        big_lambda: h.big_lambda,
        form,
    }
}

/// Transformed problem on the same grid. The image `eta X + Y0` of the
/// grid box must stay inside it.
pub fn scale_problem(problem: &ProblemSpec, params: &ScalingParams) -> Result<ProblemSpec> {
    let g = problem.domain;
    if params.y0.dim() != g.dim() {
        return Err(Error::Domain(format!(
            "Y0 has {} coordinates, domain is {}-dimensional",
            params.y0.dim(),
            g.dim()
        )));
    }
    if problem.operator.needs_gradient() {
        return Err(Error::Domain(format!(
            "{:?} depends on the gradient; scaling applies to F(X, M)",
            problem.operator
        )));
    }
    let slack = 1e-12 * (g.hi() - g.lo());
    for d in 0..g.dim() {
        let lo = params.eta * g.lo() + params.y0[d];
        let hi = params.eta * g.hi() + params.y0[d];
        if lo < g.lo() - slack || hi > g.hi() + slack {
            return Err(Error::DomainMapping(format!(
                "axis {d} maps to [{lo}, {hi}], outside [{}, {}]",
                g.lo(),
                g.hi()
            )));
        }
    }
    let factor = params.rhs_factor(problem.degeneracy.gamma);
    let rhs = problem.rhs.clone();
    let p_rhs = params.clone();
    let scaled_rhs: ScalarFn = Arc::new(move |x: &[f64]| factor * rhs(&p_rhs.map_point(x)));
    let boundary = problem.boundary.clone();
    let p_bd = params.clone();
    let tau = params.tau;
    let scaled_boundary: ScalarFn = Arc::new(move |x: &[f64]| boundary(&p_bd.map_point(x)) / tau);
    Ok(ProblemSpec {
        operator: scale_operator(&problem.operator, params),
        degeneracy: scale_degeneracy(&problem.degeneracy, params),
        rhs: scaled_rhs,
        boundary: scaled_boundary,
        domain: g,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Normalization {
    pub params: ScalingParams,
    /// Grid sup-norms used for `tau` and the `f` term.
    pub v_sup: f64,
    pub f_sup: f64,
    pub omega_norm: f64,
    /// Which candidate produced `eta`: `"one"`, `"rhs"` or `"omega"`.
    pub eta_source: &'static str,
    pub notes: Vec<String>,
}

/// `tau = max(1, sup |v|)` over the unit ball around the grid center and
/// `eta = min(1, lambda (eps0 / sup|f|)^{1/(gamma+2)}, omega^{-1}(eps0 / ||F||_omega))`,
/// with `lambda` the lower degeneracy constant and `Y0 = (1 - eta) c` for
/// the box center `c`, which keeps the image inside the box. A vanishing
/// `f` or an `X`-independent operator drops the respective term.
pub fn normalization_params(
    problem: &ProblemSpec,
    v: &ScalarField,
    eps0: f64,
    omega: &ModulusOfContinuity,
    rng_seed: u64,
) -> Result<Normalization> {
    if !(eps0 > 0.0 && eps0.is_finite()) {
        return Err(Error::Domain(format!("eps0 must be positive, got {eps0}")));
    }
    let g = problem.domain;
    let c = g.center();
    let v_sup = g
        .ball_indices(&c, 1.0)
        .iter()
        .map(|&i| v.value_at(i).abs())
        .fold(0.0_f64, f64::max);
    let f_sup = (0..g.len())
        .map(|i| (problem.rhs)(&g.coord(i)).abs())
        .fold(0.0_f64, f64::max);
    let mut notes = vec!["grid sup-norms stand in for L-infinity norms".to_string()];
    let tau = v_sup.max(1.0);
    let gamma = problem.degeneracy.gamma;
    let (mut eta, mut eta_source) = (1.0_f64, "one");
    if f_sup > 0.0 {
        let cand = problem.degeneracy.lambda * (eps0 / f_sup).powf(1.0 / (gamma + 2.0));
        if cand < eta {
            eta = cand;
            eta_source = "rhs";
        }
    } else {
        notes.push("f vanishes on the grid: rhs term omitted".into());
    }
    let omega_norm = if problem.operator.depends_on_x() {
        omega_norm_estimate(&problem.operator, g.dim(), omega, 4096, rng_seed)?
    } else {
        0.0
    };
    if omega_norm > 0.0 {
        notes.push("omega term reads its constant as the sampled ||F||_omega".into());
        let cand = omega.inverse(eps0 / omega_norm);
        if cand < eta {
            eta = cand;
            eta_source = "omega";
        }
    } else {
        notes.push("constant coefficients: omega term omitted".into());
    }
    let y0 = c.scale(1.0 - eta);
    Ok(Normalization {
        params: ScalingParams::new(eta, tau, &y0)?,
        v_sup,
        f_sup,
        omega_norm,
        eta_source,
        notes,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConjugationReport {
    pub samples: usize,
    pub max_defect: f64,
    pub failures: usize,
}

const CONJUGATION_TOL: f64 = 1e-10;

fn random_in_box(dim: usize, lo: f64, hi: f64, rng: &mut impl Rng) -> Point {
    let raw: Vec<f64> = (0..dim).map(|_| rng.gen_range(lo..=hi)).collect();
    Point::new(&raw)
}

/// Checks `R'(u, X) = eta^{gamma+2}/tau^{gamma+1} R(v, eta X + Y0)` on random
/// jets of `v`, where `u = v(eta X + Y0)/tau` and `R` is `H F - f`.
/// `transformed` is taken as given, so mutated problems can be audited.
pub fn verify_conjugation(
    original: &ProblemSpec,
    transformed: &ProblemSpec,
    params: &ScalingParams,
    sample_count: usize,
    rng_seed: u64,
) -> Result<ConjugationReport> {
    let g = original.domain;
    let dim = g.dim();
    let gamma = original.degeneracy.gamma;
    let factor = params.rhs_factor(gamma);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let (mut max_defect, mut failures) = (0.0_f64, 0usize);
    for _ in 0..sample_count {
        let x = random_in_box(dim, g.lo(), g.hi(), &mut rng);
        let y = params.map_point(&x);
        let jv = Jet::new(
            rng.gen_range(-1.0..1.0),
            random_in_box(dim, -2.0, 2.0, &mut rng),
            random_symmetric(dim, 2.0, &mut rng),
        );
        let ju = Jet::new(
            jv.value / params.tau,
            jv.gradient.scale(params.eta / params.tau),
            jv.hessian.scale(params.eta * params.eta / params.tau),
        );
        let r_orig = eval_H(&original.degeneracy, &y, &jv.gradient)
            * eval_operator(&original.operator, &y, &jv)?
            - (original.rhs)(&y);
        let r_new = eval_H(&transformed.degeneracy, &x, &ju.gradient)
            * eval_operator(&transformed.operator, &x, &ju)?
            - (transformed.rhs)(&x);
        let expected = factor * r_orig;
        let defect = (r_new - expected).abs() / expected.abs().max(1.0);
        max_defect = max_defect.max(defect);
        if !(defect <= CONJUGATION_TOL) {
            failures += 1;
        }
    }
    Ok(ConjugationReport {
        samples: sample_count,
        max_defect,
        failures,
    })
}

/// Counts violations of `lambda |p|^gamma <= H(X, p) <= Lambda |p|^gamma`
/// over random `X` in the domain and `|p|` spread over six decades.
pub fn degeneracy_violations(
    h: &DegeneracySpec,
    dim: usize,
    lo: f64,
    hi: f64,
    sample_count: usize,
    rng_seed: u64,
) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut bad = 0;
    for _ in 0..sample_count {
        let x = random_in_box(dim, lo, hi, &mut rng);
        let dir = random_in_box(dim, -1.0, 1.0, &mut rng);
        let n = dir.norm();
        if n < 1e-12 {
            continue;
        }
        let mag = 10f64.powf(rng.gen_range(-3.0..3.0));
        let p = dir.scale(mag / n);
        let base = p.norm().powf(h.gamma);
        let val = eval_H(h, &x, &p);
        let tol = 1e-12 * base;
        if !(val >= h.lambda * base - tol && val <= h.big_lambda * base + tol) {
            bad += 1;
        }
    }
    bad
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingReport {
    pub ellipticity: EllipticityReport,
    pub degeneracy_samples: usize,
    pub degeneracy_violations: usize,
    pub conjugation: ConjugationReport,
    pub pass: bool,
}

/// Structure audit of `scale_problem(problem, params)`: ellipticity with the
/// original constants, the degeneracy bounds, and the conjugation identity.
pub fn verify_scaling(
    problem: &ProblemSpec,
    params: &ScalingParams,
    sample_count: usize,
    rng_seed: u64,
) -> Result<ScalingReport> {
    let scaled = scale_problem(problem, params)?;
    let g = problem.domain;
    let ellipticity = check_ellipticity(&scaled.operator, g.dim(), sample_count, rng_seed);
    let degeneracy_violations = degeneracy_violations(
        &scaled.degeneracy,
        g.dim(),
        g.lo(),
        g.hi(),
        sample_count,
        rng_seed.wrapping_add(1),
    );
    let conjugation =
        verify_conjugation(problem, &scaled, params, sample_count, rng_seed.wrapping_add(2))?;
    let pass = ellipticity.pass && degeneracy_violations == 0 && conjugation.failures == 0;
    Ok(ScalingReport {
        ellipticity,
        degeneracy_samples: sample_count,
        degeneracy_violations,
        conjugation,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, sample};
    use crate::grid::SymMat;
    use crate::operators::{eval_F, EllipticityParams};

    fn problem(op: OperatorSpec, gamma: f64, f: f64) -> ProblemSpec {
        ProblemSpec {
            operator: op,
            degeneracy: DegeneracySpec::pure_power(gamma).unwrap(),
            rhs: Arc::new(move |_: &[f64]| f),
            boundary: Arc::new(|_: &[f64]| 0.0),
            domain: make_grid(2, 17, -1.0, 1.0).unwrap(),
        }
    }

    #[test]
    fn trace_stays_trace() {
        let p = problem(OperatorSpec::Trace, 1.0, 1.0);
        let s = scale_problem(&p, &ScalingParams::new(0.3, 7.0, &[0.1, -0.2]).unwrap()).unwrap();
        assert!(matches!(s.operator, OperatorSpec::Trace));
        let m = SymMat::from_rows(&[&[1.5, 0.2], &[0.2, -3.0]]).unwrap();
        assert_eq!(eval_F(&s.operator, &[0.3, 0.3], &m).unwrap(), m.trace());
    }

    #[test]
    fn pure_power_is_invariant() {
        let p = problem(OperatorSpec::Trace, 1.5, 1.0);
        let params = ScalingParams::new(0.25, 3.0, &[0.0, 0.0]).unwrap();
        let s = scale_problem(&p, &params).unwrap();
        for q in [[0.3, -0.1], [2.0, 5.0], [0.0, 0.0]] {
            assert_eq!(eval_H(&s.degeneracy, &[0.1, 0.1], &q), eval_H(&p.degeneracy, &[0.1, 0.1], &q));
        }
    }

    #[test]
    fn rhs_factor_example() {
        let p = problem(OperatorSpec::Trace, 1.0, 1.0);
        let s = scale_problem(&p, &ScalingParams::new(0.5, 2.0, &[0.0, 0.0]).unwrap()).unwrap();
        assert!(((s.rhs)(&[0.2, 0.4]) - 1.0 / 32.0).abs() < 1e-15);
    }

    #[test]
    fn escaping_image_is_rejected() {
        let p = problem(OperatorSpec::Trace, 1.0, 1.0);
        let err = scale_problem(&p, &ScalingParams::new(0.5, 1.0, &[0.8, 0.0]).unwrap());
        assert!(matches!(err, Err(Error::DomainMapping(_))));
        assert!(ScalingParams::new(1.5, 1.0, &[0.0]).is_err());
        assert!(ScalingParams::new(0.5, 0.5, &[0.0]).is_err());
        assert!(scale_problem(&problem(OperatorSpec::Infinity, 1.0, 1.0), &ScalingParams::identity(2)).is_err());
    }

    #[test]
    fn normalization_examples() {
        let p = problem(OperatorSpec::Trace, 1.0, 1.0);
        let g = p.domain;
        let omega = ModulusOfContinuity::Power(1.0);
        let small = sample(&g, |x| 0.5 * x[0]).unwrap();
        let n = normalization_params(&p, &small, 1e-3, &omega, 1).unwrap();
        assert_eq!(n.params.tau, 1.0);

        let big = sample(&g, |x| 3.0 * x[0]).unwrap();
        let n = normalization_params(&p, &big, 1e-3, &omega, 1).unwrap();
        assert_eq!(n.params.tau, 3.0);
        assert!((n.params.eta - 0.1).abs() < 1e-12);
        assert_eq!(n.eta_source, "rhs");

        let zero_f = problem(OperatorSpec::Trace, 1.0, 0.0);
        let n = normalization_params(&zero_f, &big, 1e-3, &omega, 1).unwrap();
        assert_eq!(n.params.eta, 1.0);
        assert!(n.notes.iter().any(|s| s.contains("rhs term omitted")));
        assert!(normalization_params(&p, &big, 0.0, &omega, 1).is_err());
    }

    #[test]
    fn omega_term_for_variable_coefficients() {
        let coeff = Arc::new(|x: &[f64]| SymMat::diag(&[1.5 + 0.5 * x[0], 1.5]));
        let op = OperatorSpec::LinearCoeff {
            coeff,
            params: EllipticityParams::new(1.0, 2.0).unwrap(),
        };
        let p = problem(op, 1.0, 0.0);
        let v = sample(&p.domain, |_| 0.0).unwrap();
        let n = normalization_params(&p, &v, 0.1, &ModulusOfContinuity::Power(1.0), 3).unwrap();
        assert_eq!(n.eta_source, "omega");
        assert!(n.params.eta > 0.0 && n.params.eta < 1.0);
        let s = scale_problem(&p, &n.params).unwrap();
        let w = omega_norm_estimate(&s.operator, 2, &ModulusOfContinuity::Power(1.0), 4096, 4).unwrap();
        // sampled norms are lower bounds, so allow a few percent
        assert!(w <= 0.1 * 1.05, "{w}");
    }

    #[test]
    fn trace_pure_power_audit_passes() {
        let p = problem(OperatorSpec::Trace, 2.0, 1.3);
        let params = ScalingParams::new(0.4, 5.0, &[0.2, -0.1]).unwrap();
        let rep = verify_scaling(&p, &params, 500, 9).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.conjugation.max_defect < 1e-13);
    }
}
