//! Diffusion operators `F(X, M)`, degeneracy laws `H(X, p)`, the composite
//! residual `H F - f`, and sampled audits of ellipticity and coefficient
//! oscillation.
//!
//! Matrix norms are spectral norms throughout. Under that convention an
//! operator declared `(lambda, Lambda)`-elliptic has effective constants
//! `(lambda, d * Lambda)`: for `P >= 0`, `||P|| <= tr P <= d ||P||`.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{Jet, Point, ScalarField, SymMat};
use crate::solver::ProblemSpec;

pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type CoeffFn = Arc<dyn Fn(&[f64]) -> SymMat + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EllipticityParams {
    pub lambda: f64,
    pub big_lambda: f64,
}

impl EllipticityParams {
    pub fn new(lambda: f64, big_lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= big_lambda && big_lambda.is_finite()) {
            return Err(Error::Domain(format!(
                "ellipticity constants need 0 < lambda <= Lambda, got ({lambda}, {big_lambda})"
            )));
        }
        Ok(Self { lambda, big_lambda })
    }

    pub fn unit() -> Self {
        Self {
            lambda: 1.0,
            big_lambda: 1.0,
        }
    }
}

#[derive(Clone)]
pub enum OperatorSpec {
    /// Laplacian, `tr M`.
    Trace,
    PucciMinus(EllipticityParams),
    PucciPlus(EllipticityParams),
    /// `sum_ij a_ij(X) M_ij` with `a(X)` having spectrum in `[lambda, Lambda]`.
    LinearCoeff {
        coeff: CoeffFn,
        params: EllipticityParams,
    },
    /// `min_k tr(A_k M)` over a nonempty family of constant matrices; concave.
    MinOfLinears {
        family: Vec<SymMat>,
        params: EllipticityParams,
    },
    /// `grad^T D^2u grad`; needs the gradient, so only usable through jets.
    Infinity,
    /// Non-divergence p-Laplacian, `p >= 2`; needs the gradient.
    PNonDiv { p: f64 },
    /// `(tau / eta^2) F(eta X + y0, (eta^2 / tau) M)`.
    Rescaled {
        inner: Box<OperatorSpec>,
        eta: f64,
        tau: f64,
        y0: Point,
    },
}

impl fmt::Debug for OperatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Trace => write!(f, "Trace"),
            Self::PucciMinus(p) => write!(f, "PucciMinus({p:?})"),
            Self::PucciPlus(p) => write!(f, "PucciPlus({p:?})"),
            Self::LinearCoeff { params, .. } => write!(f, "LinearCoeff({params:?})"),
            Self::MinOfLinears { family, params } => {
                write!(f, "MinOfLinears({} members, {params:?})", family.len())
            }
            Self::Infinity => write!(f, "Infinity"),
            Self::PNonDiv { p } => write!(f, "PNonDiv(p={p})"),
            Self::Rescaled {
                inner,
                eta,
                tau,
                y0,
            } => write!(f, "Rescaled({inner:?}, eta={eta}, tau={tau}, y0={:?})", &**y0),
        }
    }
}

impl OperatorSpec {
    pub fn min_of_linears(family: Vec<SymMat>, params: EllipticityParams) -> Result<Self> {
        if family.is_empty() {
            return Err(Error::Domain("min-of-linears family is empty".into()));
        }
        for (k, a) in family.iter().enumerate() {
            let e = a.eigenvalues();
            let tol = 1e-12 * params.big_lambda;
            if e[0] < params.lambda - tol || e[e.dim() - 1] > params.big_lambda + tol {
                return Err(Error::Domain(format!(
                    "member {k} has spectrum [{}, {}] outside [{}, {}]",
                    e[0],
                    e[e.dim() - 1],
                    params.lambda,
                    params.big_lambda
                )));
            }
        }
        Ok(Self::MinOfLinears { family, params })
    }

    pub fn p_nondiv(p: f64) -> Result<Self> {
        if !(p >= 2.0 && p.is_finite()) {
            return Err(Error::Domain(format!("p-Laplacian needs p >= 2, got {p}")));
        }
        Ok(Self::PNonDiv { p })
    }

    /// Whether the operator depends on the gradient as well as the Hessian.
    pub fn needs_gradient(&self) -> bool {
        match self {
            Self::Infinity | Self::PNonDiv { .. } => true,
            Self::Rescaled { inner, .. } => inner.needs_gradient(),
            _ => false,
        }
    }

    /// Whether `F(X, M)` varies with `X`.
    pub fn depends_on_x(&self) -> bool {
        match self {
            Self::LinearCoeff { .. } => true,
            Self::Rescaled { inner, .. } => inner.depends_on_x(),
            _ => false,
        }
    }

    /// Upper ellipticity constant used by stability bounds.
    pub fn upper_constant(&self) -> f64 {
        match self {
            Self::Trace | Self::Infinity => 1.0,
            Self::PucciMinus(p) | Self::PucciPlus(p) => p.big_lambda,
            Self::LinearCoeff { params, .. } | Self::MinOfLinears { params, .. } => {
                params.big_lambda
            }
            Self::PNonDiv { p } => p - 1.0,
            Self::Rescaled { inner, .. } => inner.upper_constant(),
        }
    }

    /// Effective `(lambda, Lambda)` under the spectral-norm convention in
    /// dimension `dim`, or `None` for degenerate (gradient-dependent) kinds.
    pub fn effective_constants(&self, dim: usize) -> Option<(f64, f64)> {
        let d = dim as f64;
        match self {
            Self::Trace => Some((1.0, d)),
            Self::PucciMinus(p) | Self::PucciPlus(p) => Some((p.lambda, d * p.big_lambda)),
            Self::LinearCoeff { params, .. } | Self::MinOfLinears { params, .. } => {
                Some((params.lambda, d * params.big_lambda))
            }
            Self::Infinity | Self::PNonDiv { .. } => None,
            Self::Rescaled { inner, .. } => inner.effective_constants(dim),
        }
    }
}

fn pucci(m: &SymMat, up: f64, down: f64) -> f64 {
    m.eigenvalues()
        .iter()
        .map(|&e| if e > 0.0 { up * e } else { down * e })
        .sum()
}

/// `F(X, M)` for operators that depend on the Hessian only.
#[allow(non_snake_case)]
pub fn eval_F(spec: &OperatorSpec, x: &[f64], m: &SymMat) -> Result<f64> {
    Ok(match spec {
        OperatorSpec::Trace => m.trace(),
        OperatorSpec::PucciMinus(p) => pucci(m, p.lambda, p.big_lambda),
        OperatorSpec::PucciPlus(p) => pucci(m, p.big_lambda, p.lambda),
        OperatorSpec::LinearCoeff { coeff, .. } => coeff(x).frobenius_dot(m),
        OperatorSpec::MinOfLinears { family, .. } => family
            .iter()
            .map(|a| a.frobenius_dot(m))
            .fold(f64::INFINITY, f64::min),
        OperatorSpec::Infinity | OperatorSpec::PNonDiv { .. } => {
            return Err(Error::Domain(format!(
                "{spec:?} depends on the gradient; evaluate it on a jet"
            )))
        }
        OperatorSpec::Rescaled {
            inner,
            eta,
            tau,
            y0,
        } => {
            let y = y0.axpy(*eta, x);
            tau / (eta * eta) * eval_F(inner, &y, &m.scale(eta * eta / tau))?
        }
    })
}

/// Full operator value on a jet; handles the gradient-dependent kinds too.
pub fn eval_operator(spec: &OperatorSpec, x: &[f64], jet: &Jet) -> Result<f64> {
    match spec {
        OperatorSpec::Infinity => Ok(infinity_laplacian(jet)),
        OperatorSpec::PNonDiv { p } => p_laplacian_nondiv(jet, *p),
        OperatorSpec::Rescaled {
            inner,
            eta,
            tau,
            y0,
        } if inner.needs_gradient() => {
            // conjugate the whole jet so the gradient is rescaled consistently
            let y = y0.axpy(*eta, x);
            let scaled = Jet::new(
                jet.value,
                jet.gradient.scale(*eta / tau),
                jet.hessian.scale(eta * eta / tau),
            );
            Ok(tau / (eta * eta) * eval_operator(inner, &y, &scaled)?)
        }
        _ => eval_F(spec, x, &jet.hessian),
    }
}

#[derive(Clone)]
pub enum DegeneracyForm {
    /// `H(X, p) = |p|^gamma`
    PurePower,
    /// `H(X, p) = c(X) |p|^gamma` with `lambda <= c <= Lambda`.
    Modulated(ScalarFn),
}

#[derive(Clone)]
pub struct DegeneracySpec {
    pub gamma: f64,
    pub lambda: f64,
    pub big_lambda: f64,
    pub form: DegeneracyForm,
}

impl fmt::Debug for DegeneracySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let form = match self.form {
            DegeneracyForm::PurePower => "pure-power",
            DegeneracyForm::Modulated(_) => "modulated",
        };
        write!(
            f,
            "DegeneracySpec({form}, gamma={}, lambda={}, Lambda={})",
            self.gamma, self.lambda, self.big_lambda
        )
    }
}

impl DegeneracySpec {
    pub fn new(gamma: f64, lambda: f64, big_lambda: f64, form: DegeneracyForm) -> Result<Self> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::Domain(format!("degeneracy exponent must be >= 0, got {gamma}")));
        }
        EllipticityParams::new(lambda, big_lambda)?;
        if matches!(form, DegeneracyForm::PurePower) && !(lambda <= 1.0 && 1.0 <= big_lambda) {
            return Err(Error::Domain(
                "pure-power law needs lambda <= 1 <= Lambda".into(),
            ));
        }
        Ok(Self {
            gamma,
            lambda,
            big_lambda,
            form,
        })
    }

    /// `|p|^gamma` with unit bounds.
    pub fn pure_power(gamma: f64) -> Result<Self> {
        Self::new(gamma, 1.0, 1.0, DegeneracyForm::PurePower)
    }

    #[inline]
    pub fn coefficient(&self, x: &[f64]) -> f64 {
        match &self.form {
            DegeneracyForm::PurePower => 1.0,
            DegeneracyForm::Modulated(c) => c(x),
        }
    }

    /// `c(X) * (|p|^2)^(gamma/2)`; `gamma = 0` gives `c(X)` even at `p = 0`.
    #[inline]
    pub fn eval_from_norm_sq(&self, x: &[f64], norm_sq: f64) -> f64 {
        let c = self.coefficient(x);
        if self.gamma == 0.0 {
            c
        } else if self.gamma == 2.0 {
            c * norm_sq
        } else {
            c * norm_sq.sqrt().powf(self.gamma)
        }
    }
}

#[allow(non_snake_case)]
pub fn eval_H(spec: &DegeneracySpec, x: &[f64], p: &[f64]) -> f64 {
    eval_H_eps(spec, x, p, 0.0)
}

/// `H` with `|p|` replaced by `sqrt(eps^2 + |p|^2)`.
#[allow(non_snake_case)]
pub fn eval_H_eps(spec: &DegeneracySpec, x: &[f64], p: &[f64], eps: f64) -> f64 {
    let norm_sq: f64 = p.iter().map(|v| v * v).sum();
    spec.eval_from_norm_sq(x, eps * eps + norm_sq)
}

/// `H_eps(X, grad u) F(X, D^2 u) - f(X)` on a jet.
pub fn equation_residual(problem: &ProblemSpec, jet: &Jet, x: &[f64], eps: f64) -> Result<f64> {
    let h = eval_H_eps(&problem.degeneracy, x, &jet.gradient, eps);
    Ok(h * eval_operator(&problem.operator, x, jet)? - (problem.rhs)(x))
}

/// `sum_ij u_i u_j u_ij`
pub fn infinity_laplacian(jet: &Jet) -> f64 {
    jet.hessian.bilinear(&jet.gradient, &jet.gradient)
}

/// `|grad u|^(p-2) Lap u + (p-2) |grad u|^(p-4) Lap_inf u`, with value 0 at
/// zero gradient for `p > 2`.
pub fn p_laplacian_nondiv(jet: &Jet, p: f64) -> Result<f64> {
    if !(p >= 2.0) {
        return Err(Error::Domain(format!("p-Laplacian needs p >= 2, got {p}")));
    }
    let lap = jet.hessian.trace();
    if p == 2.0 {
        return Ok(lap);
    }
    let g2 = jet.gradient.iter().map(|v| v * v).sum::<f64>();
    if g2 == 0.0 {
        return Ok(0.0);
    }
    let g = g2.sqrt();
    Ok(g.powf(p - 4.0) * (g2 * lap + (p - 2.0) * infinity_laplacian(jet)))
}

/// Random orthogonal matrix (columns) from Gram-Schmidt on uniform samples.
pub fn random_rotation(dim: usize, rng: &mut impl Rng) -> Vec<Point> {
    loop {
        let mut cols: Vec<Point> = Vec::with_capacity(dim);
        let mut ok = true;
        for _ in 0..dim {
            let raw: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut v = Point::new(&raw);
            for c in &cols {
                v = v.axpy(-c.dot(&v), c);
            }
            let n = v.norm();
            if n < 1e-3 {
                ok = false;
                break;
            }
            cols.push(v.scale(1.0 / n));
        }
        if ok {
            return cols;
        }
    }
}

/// Uniform symmetric matrix with entries in `[-scale, scale]`.
pub fn random_symmetric(dim: usize, scale: f64, rng: &mut impl Rng) -> SymMat {
    SymMat::from_fn(dim, |_, _| rng.gen_range(-scale..scale))
}

fn random_point(dim: usize, rng: &mut impl Rng) -> Point {
    let raw: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Point::new(&raw)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EllipticityReport {
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub declared: Option<(f64, f64)>,
    pub trials_used: usize,
    pub pass: bool,
}

/// Samples `(F(X, M + P) - F(X, M)) / ||P||` over random `X`, `M` and
/// `P = Q D Q^T >= 0`, and compares the extremes with the declared effective
/// constants. Trials with `P = 0` are skipped.
pub fn check_ellipticity(
    spec: &OperatorSpec,
    dim: usize,
    trial_count: usize,
    rng_seed: u64,
) -> EllipticityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let declared = spec.effective_constants(dim);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut used = 0;
    let mut eval_failed = false;
    for _ in 0..trial_count {
        let x = random_point(dim, &mut rng);
        let m = random_symmetric(dim, 2.0, &mut rng);
        let q = random_rotation(dim, &mut rng);
        // occasionally zero some directions to probe rank-deficient P
        let d: Vec<f64> = (0..dim)
            .map(|_| {
                if rng.gen_bool(0.2) {
                    0.0
                } else {
                    rng.gen_range(0.0..1.5)
                }
            })
            .collect();
        let p = SymMat::conjugate_diag(&q, &d);
        let norm = p.spectral_norm();
        if norm < 1e-14 {
            continue;
        }
        let grad = random_point(dim, &mut rng);
        let jet = |h: SymMat| Jet::new(0.0, grad, h);
        let ratio = match (
            eval_operator(spec, &x, &jet(m.add(&p))),
            eval_operator(spec, &x, &jet(m)),
        ) {
            (Ok(a), Ok(b)) => (a - b) / norm,
            _ => {
                eval_failed = true;
                continue;
            }
        };
        lo = lo.min(ratio);
        hi = hi.max(ratio);
        used += 1;
    }
    let pass = match declared {
        Some((l, u)) => !eval_failed && used > 0 && lo >= l - 1e-9 && hi <= u + 1e-9,
        None => false,
    };
    EllipticityReport {
        min_ratio: lo,
        max_ratio: hi,
        declared,
        trials_used: used,
        pass,
    }
}

/// Normalized modulus of continuity, `omega(1) = 1`.
#[derive(Clone)]
pub enum ModulusOfContinuity {
    /// `t^s`, `s > 0`
    Power(f64),
    Custom(ScalarFn),
}

impl fmt::Debug for ModulusOfContinuity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Power(s) => write!(f, "Power({s})"),
            Self::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl ModulusOfContinuity {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Self::Power(s) => t.powf(*s),
            Self::Custom(w) => w(&[t]),
        }
    }

    /// Smallest `t` in `[0, 1]` with `omega(t) >= y`, by bisection to 1e-12.
    pub fn inverse(&self, y: f64) -> f64 {
        if y >= self.eval(1.0) {
            return 1.0;
        }
        if y <= 0.0 {
            return 0.0;
        }
        let (mut a, mut b) = (0.0_f64, 1.0_f64);
        while b - a > 1e-12 {
            let mid = 0.5 * (a + b);
            if self.eval(mid) < y {
                a = mid;
            } else {
                b = mid;
            }
        }
        b
    }

    /// Monotonicity and `omega(1) = 1` on `samples` evenly spaced points.
    pub fn is_normalized(&self, samples: usize) -> bool {
        let ts: Vec<f64> = (0..=samples).map(|i| i as f64 / samples as f64).collect();
        let vals: Vec<f64> = ts.iter().map(|&t| self.eval(t)).collect();
        (self.eval(1.0) - 1.0).abs() < 1e-12
            && vals.windows(2).all(|w| w[0] <= w[1])
            && vals[0].abs() < 1e-12
    }
}

/// Sampled lower bound on `||F||_omega`: the supremum over random `X != Y`
/// and `||M|| = 1` of `|F(X, M) - F(Y, M)| / omega(|X - Y|)`.
pub fn omega_norm_estimate(
    spec: &OperatorSpec,
    dim: usize,
    omega: &ModulusOfContinuity,
    sample_count: usize,
    rng_seed: u64,
) -> Result<f64> {
    if spec.needs_gradient() {
        return Err(Error::Domain(format!("{spec:?} is not a Hessian-only operator")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut best = 0.0_f64;
    for _ in 0..sample_count {
        let x = random_point(dim, &mut rng);
        let y = if rng.gen_bool(0.5) {
            let dir = random_point(dim, &mut rng);
            let step = rng.gen_range(1e-3..0.5);
            let n = dir.norm();
            if n < 1e-9 {
                continue;
            }
            x.axpy(step / n, &dir)
        } else {
            random_point(dim, &mut rng)
        };
        let dist = x.distance(&y);
        if dist == 0.0 {
            continue;
        }
        let q = random_rotation(dim, &mut rng);
        let e: Vec<f64> = if rng.gen_bool(0.5) {
            (0..dim).map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect()
        } else {
            (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
        };
        let m = SymMat::conjugate_diag(&q, &e);
        let norm = m.spectral_norm();
        if norm < 1e-12 {
            continue;
        }
        let w = omega.eval(dist);
        if w <= 0.0 {
            continue;
        }
        let diff = (eval_F(spec, &x, &m)? - eval_F(spec, &y, &m)?).abs();
        best = best.max(diff / (norm * w));
    }
    Ok(best)
}

/// Central second-order finite-difference jet at an interior grid point.
pub fn fd_jet(field: &ScalarField, index: usize) -> Result<Jet> {
    let g = field.grid();
    let n = g.n();
    let h = g.h();
    let u = field.values();
    let [ix, iy] = g.multi_index(index);
    let inner = |i: usize| i >= 1 && i + 1 < n;
    if index >= g.len() || !inner(ix) || (g.dim() == 2 && !inner(iy)) {
        return Err(Error::StencilOutOfRange(index));
    }
    let c = u[index];
    match g.dim() {
        1 => {
            let (l, r) = (u[index - 1], u[index + 1]);
            Ok(Jet::new(
                c,
                Point::new(&[(r - l) / (2.0 * h)]),
                SymMat::diag(&[(r - 2.0 * c + l) / (h * h)]),
            ))
        }
        _ => {
            let at = |dx: isize, dy: isize| {
                u[g.flat_index((ix as isize + dx) as usize, (iy as isize + dy) as usize)]
            };
            let (e, w, no, s) = (at(1, 0), at(-1, 0), at(0, 1), at(0, -1));
            let uxx = (e - 2.0 * c + w) / (h * h);
            let uyy = (no - 2.0 * c + s) / (h * h);
            let uxy = (at(1, 1) + at(-1, -1) - at(1, -1) - at(-1, 1)) / (4.0 * h * h);
            let mut hess = SymMat::diag(&[uxx, uyy]);
            hess.set(0, 1, uxy);
            Ok(Jet::new(
                c,
                Point::new(&[(e - w) / (2.0 * h), (no - s) / (2.0 * h)]),
                hess,
            ))
        }
    }
}
