//! Closed-form solutions with analytic jets.
//!
//! Fractional powers follow one convention throughout: `t^{4/3}` means
//! `|t|^{4/3}`, whose derivative is `(4/3) cbrt(t)`. This keeps the separable
//! infinity-harmonic factors real and makes `|x|^{4/3} - |y|^{4/3}`
//! infinity-harmonic in every quadrant.
//!
//! Radial constants are derived from substitution formulas at construction
//! and every oracle re-checks its own defining equation before it is handed
//! out.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Grid, Jet, Point, ScalarField, SymMat};
use crate::operators::{infinity_laplacian, p_laplacian_nondiv};

type EvalFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&[f64]) -> Option<Point> + Send + Sync>;
type JetFn = Arc<dyn Fn(&[f64]) -> Option<Jet> + Send + Sync>;
type ResidualFn = Arc<dyn Fn(&Jet) -> f64 + Send + Sync>;

/// Where derivatives of an oracle degenerate.
#[derive(Clone, Debug, PartialEq)]
pub enum SingularSet {
    None,
    Points(Vec<Point>),
    /// Hyperplanes `x[axis] = value`.
    Planes(Vec<(usize, f64)>),
}

impl SingularSet {
    pub fn distance(&self, x: &[f64]) -> f64 {
        match self {
            SingularSet::None => f64::INFINITY,
            SingularSet::Points(ps) => ps.iter().map(|p| p.distance(x)).fold(f64::INFINITY, f64::min),
            SingularSet::Planes(ps) => ps
                .iter()
                .map(|&(axis, v)| (x[axis] - v).abs())
                .fold(f64::INFINITY, f64::min),
        }
    }
}

#[derive(Clone)]
pub struct ExactSolution {
    pub name: String,
    pub params: Vec<(String, f64)>,
    pub dim: usize,
    /// Expected Hoelder exponent of the gradient at the singular set.
    pub alpha_expected: f64,
    pub singular: SingularSet,
    eval: EvalFn,
    gradient: GradFn,
    jet: JetFn,
    residual: Option<ResidualFn>,
}

impl fmt::Debug for ExactSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExactSolution")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("dim", &self.dim)
            .field("alpha_expected", &self.alpha_expected)
            .field("singular", &self.singular)
            .finish()
    }
}

impl ExactSolution {
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    /// Analytic gradient; `None` only where the function is not C^1.
    pub fn gradient(&self, x: &[f64]) -> Option<Point> {
        (self.gradient)(x)
    }

    /// Analytic jet; `None` on the singular set, where the Hessian degenerates.
    pub fn jet(&self, x: &[f64]) -> Option<Jet> {
        (self.jet)(x)
    }

    /// Residual of the oracle's defining equation at `x`, if it has one and
    /// the jet exists there.
    pub fn residual(&self, x: &[f64]) -> Option<f64> {
        let r = self.residual.as_ref()?;
        self.jet(x).map(|j| r(&j))
    }

    pub fn has_equation(&self) -> bool {
        self.residual.is_some()
    }

    pub fn sample(&self, grid: &Grid) -> Result<ScalarField> {
        if grid.dim() != self.dim {
            return Err(Error::Domain(format!(
                "{} is {}-dimensional, grid is {}-dimensional",
                self.name,
                self.dim,
                grid.dim()
            )));
        }
        crate::grid::sample(grid, |x| self.eval(x))
    }

    fn self_check(self, probes: &[&[f64]]) -> Result<Self> {
        for x in probes {
            if let Some(r) = self.residual(x) {
                if !(r.abs() <= 1e-10) {
                    return Err(Error::Domain(format!(
                        "{} fails its own equation at {:?}: residual {r:e}",
                        self.name, x
                    )));
                }
            }
        }
        Ok(self)
    }
}

/// Jet of `psi(|X|)` away from the origin.
fn radial_jet(x: &[f64], psi: f64, d1: f64, d2: f64) -> Jet {
    let dim = x.len();
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let unit = Point::new(x).scale(1.0 / r);
    let hess = SymMat::from_fn(dim, |i, j| {
        let outer = unit[i] * unit[j];
        let id = if i == j { 1.0 } else { 0.0 };
        d2 * outer + d1 / r * (id - outer)
    });
    Jet::new(psi, unit.scale(d1), hess)
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `c |X|^beta` with derivative data; shared by every radial power oracle.
fn power_radial(
    name: &str,
    params: Vec<(String, f64)>,
    dim: usize,
    c: f64,
    beta: f64,
    alpha_expected: f64,
    residual: ResidualFn,
) -> ExactSolution {
    let origin = Point::zeros(dim);
    let grad: GradFn = Arc::new(move |x: &[f64]| {
        let r = norm(x);
        if r == 0.0 {
            return Some(Point::zeros(x.len()));
        }
        Some(Point::new(x).scale(c * beta * r.powf(beta - 2.0)))
    });
    let smooth = beta == 2.0;
    ExactSolution {
        name: name.into(),
        params,
        dim,
        alpha_expected,
        singular: if smooth {
            SingularSet::None
        } else {
            SingularSet::Points(vec![origin])
        },
        eval: Arc::new(move |x: &[f64]| c * norm(x).powf(beta)),
        gradient: grad,
        jet: Arc::new(move |x: &[f64]| {
            let r = norm(x);
            if r == 0.0 {
                return smooth.then(|| {
                    Jet::new(0.0, Point::zeros(x.len()), SymMat::identity(x.len()).scale(2.0 * c))
                });
            }
            Some(radial_jet(
                x,
                c * r.powf(beta),
                c * beta * r.powf(beta - 1.0),
                c * beta * (beta - 1.0) * r.powf(beta - 2.0),
            ))
        }),
        residual: Some(residual),
    }
}

fn gamma_residual(gamma: f64) -> ResidualFn {
    Arc::new(move |j: &Jet| {
        let g = j.gradient.norm();
        let h = if gamma == 0.0 { 1.0 } else { g.powf(gamma) };
        h * j.hessian.trace() - 1.0
    })
}

/// `u(t) = c |t|^beta`, `beta = (2+delta)/(1+delta)`, solving
/// `|u'|^delta u'' = 1` for `t != 0`; exponent `1/(1+delta)`.
pub fn ode_profile(delta: f64) -> Result<ExactSolution> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::Domain(format!("ode profile needs delta >= 0, got {delta}")));
    }
    let beta = (2.0 + delta) / (1.0 + delta);
    let c = (beta - 1.0).powf(-1.0 / (1.0 + delta)) / beta;
    power_radial(
        "ode",
        vec![("delta".into(), delta)],
        1,
        c,
        beta,
        1.0 / (1.0 + delta),
        gamma_residual(delta),
    )
    .self_check(&[&[0.25], &[-0.7]])
}

/// `u = c |X|^beta` solving `|grad u|^gamma Lap u = 1` off the origin.
pub fn radial_profile(gamma: f64, d: usize) -> Result<ExactSolution> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::Domain(format!("radial profile needs gamma >= 0, got {gamma}")));
    }
    if !(1..=2).contains(&d) {
        return Err(Error::Domain(format!("radial profile needs d in {{1, 2}}, got {d}")));
    }
    let beta = (2.0 + gamma) / (1.0 + gamma);
    let c = (beta + d as f64 - 2.0).powf(-1.0 / (1.0 + gamma)) / beta;
    let probes: [&[f64]; 2] = if d == 1 { [&[0.3], &[-0.8]] } else { [&[0.3, 0.0], &[-0.4, 0.55]] };
    power_radial(
        "radial",
        vec![("gamma".into(), gamma), ("d".into(), d as f64)],
        d,
        c,
        beta,
        1.0 / (1.0 + gamma),
        gamma_residual(gamma),
    )
    .self_check(&probes)
}

/// `|x|^{4/3} - |y|^{4/3}`: infinity-harmonic, exactly C^{1,1/3}.
pub fn aronsson() -> ExactSolution {
    let sep = separable_infinity_harmonic(&[64.0 / 81.0, -64.0 / 81.0], &[0.0, 0.0])
        .expect("Aronsson's taus sum to zero");
    ExactSolution {
        name: "aronsson".into(),
        params: vec![],
        // the closed form is evaluated directly rather than through the factors
        eval: Arc::new(|x: &[f64]| x[0].abs().powf(4.0 / 3.0) - x[1].abs().powf(4.0 / 3.0)),
        gradient: Arc::new(|x: &[f64]| {
            Some(Point::new(&[4.0 / 3.0 * x[0].cbrt(), -4.0 / 3.0 * x[1].cbrt()]))
        }),
        ..sep
    }
}

/// `u = sum_i sigma_i(x_i)` with `|sigma_i'|^2 sigma_i'' = tau_i` and
/// `sum tau_i = 0`; `sigma_i(t) = |3 tau_i t + c_i|^{4/3} / (4 tau_i)` for
/// `tau_i != 0`, and `c_i t` otherwise.
pub fn separable_infinity_harmonic(taus: &[f64], consts: &[f64]) -> Result<ExactSolution> {
    let d = taus.len();
    if d == 0 || d > 3 || consts.len() != d {
        return Err(Error::Domain(format!(
            "need 1..=3 taus with matching constants, got {} and {}",
            d,
            consts.len()
        )));
    }
    let sum: f64 = taus.iter().sum();
    if sum.abs() > 1e-12 {
        return Err(Error::Constraint(format!("taus sum to {sum:e}, not 0")));
    }
    let factors: Vec<(f64, f64)> = taus.iter().copied().zip(consts.iter().copied()).collect();
    let planes: Vec<(usize, f64)> = factors
        .iter()
        .enumerate()
        .filter(|(_, (t, _))| *t != 0.0)
        .map(|(i, (t, c))| (i, -c / (3.0 * t)))
        .collect();
    let all_affine = planes.is_empty();

    let f_eval = factors.clone();
    let f_grad = factors.clone();
    let f_jet = factors.clone();
    let sol = ExactSolution {
        name: "separable".into(),
        params: taus
            .iter()
            .enumerate()
            .map(|(i, t)| (format!("tau{i}"), *t))
            .chain(consts.iter().enumerate().map(|(i, c)| (format!("c{i}"), *c)))
            .collect(),
        dim: d,
        alpha_expected: if all_affine { 1.0 } else { 1.0 / 3.0 },
        singular: if all_affine {
            SingularSet::None
        } else {
            SingularSet::Planes(planes)
        },
        eval: Arc::new(move |x: &[f64]| {
            f_eval
                .iter()
                .zip(x)
                .map(|(&(tau, c), &t)| {
                    if tau == 0.0 {
                        c * t
                    } else {
                        (3.0 * tau * t + c).abs().powf(4.0 / 3.0) / (4.0 * tau)
                    }
                })
                .sum()
        }),
        gradient: Arc::new(move |x: &[f64]| {
            let g: Vec<f64> = f_grad
                .iter()
                .zip(x)
                .map(|(&(tau, c), &t)| if tau == 0.0 { c } else { (3.0 * tau * t + c).cbrt() })
                .collect();
            Some(Point::new(&g))
        }),
        jet: Arc::new(move |x: &[f64]| {
            let mut value = 0.0;
            let mut grad = Vec::with_capacity(x.len());
            let mut diag = Vec::with_capacity(x.len());
            for (&(tau, c), &t) in f_jet.iter().zip(x) {
                if tau == 0.0 {
                    value += c * t;
                    grad.push(c);
                    diag.push(0.0);
                } else {
                    let z = 3.0 * tau * t + c;
                    if z == 0.0 {
                        return None;
                    }
                    value += z.abs().powf(4.0 / 3.0) / (4.0 * tau);
                    grad.push(z.cbrt());
                    diag.push(tau * z.abs().powf(-2.0 / 3.0));
                }
            }
            Some(Jet::new(value, Point::new(&grad), SymMat::diag(&diag)))
        }),
        residual: Some(Arc::new(infinity_laplacian)),
    };
    let probe: Vec<f64> = (0..d).map(|i| 0.37 + 0.21 * i as f64).collect();
    sol.self_check(&[&probe])
}

/// Polynomial in up to three variables.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    pub dim: usize,
    /// `(coefficient, exponents)` pairs.
    pub terms: Vec<(f64, [u32; 3])>,
}

impl Polynomial {
    pub fn new(dim: usize, terms: Vec<(f64, [u32; 3])>) -> Self {
        Self { dim, terms }
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(dim, vec![])
    }

    /// Lowest total degree among terms with nonzero coefficient.
    pub fn order(&self) -> Option<u32> {
        self.terms
            .iter()
            .filter(|(c, _)| *c != 0.0)
            .map(|(_, e)| e.iter().sum())
            .min()
    }

    fn mono(x: &[f64], e: &[u32; 3], dx: [u32; 3]) -> f64 {
        let mut v = 1.0;
        for i in 0..x.len() {
            if e[i] < dx[i] {
                return 0.0;
            }
            let mut coef = 1.0;
            for k in 0..dx[i] {
                coef *= (e[i] - k) as f64;
            }
            v *= coef * x[i].powi((e[i] - dx[i]) as i32);
        }
        v
    }

    fn derivative(&self, x: &[f64], dx: [u32; 3]) -> f64 {
        self.terms.iter().map(|(c, e)| c * Self::mono(x, e, dx)).sum()
    }

    pub fn jet(&self, x: &[f64]) -> Jet {
        let d = self.dim;
        let unit = |i: usize, k: u32| {
            let mut a = [0u32; 3];
            a[i] += k;
            a
        };
        let grad: Vec<f64> = (0..d).map(|i| self.derivative(x, unit(i, 1))).collect();
        let hess = SymMat::from_fn(d, |i, j| {
            let mut a = unit(i, 1);
            a[j] += 1;
            self.derivative(x, a)
        });
        Jet::new(self.derivative(x, [0; 3]), Point::new(&grad), hess)
    }
}

/// `phi(X) + |X|^q` with `phi = O(|X|^2)` at the origin and `q in (1, 2]`.
pub fn radial_plus_smooth(phi: Polynomial, psi_power: f64) -> Result<ExactSolution> {
    if !(psi_power > 1.0 && psi_power <= 2.0) {
        return Err(Error::Domain(format!("psi power must lie in (1, 2], got {psi_power}")));
    }
    if !(1..=3).contains(&phi.dim) {
        return Err(Error::Domain(format!("polynomial dimension {} not in 1..=3", phi.dim)));
    }
    if phi.order().is_some_and(|o| o < 2) {
        return Err(Error::Domain(
            "smooth part must vanish to second order at the singular point".into(),
        ));
    }
    let q = psi_power;
    let dim = phi.dim;
    let smooth = q == 2.0;
    let phi_is_zero = phi.order().is_none();
    let (pe, pg, pj) = (phi.clone(), phi.clone(), phi);
    // with phi = 0 the function solves Lap_inf u = const off the origin
    let const_inf = q * q * q * (q - 1.0);
    let residual: Option<ResidualFn> = (phi_is_zero && q == 4.0 / 3.0).then(|| {
        let r: ResidualFn = Arc::new(move |j: &Jet| infinity_laplacian(j) - const_inf);
        r
    });
    let _ = const_inf;
    let sol = ExactSolution {
        name: "radial_plus_smooth".into(),
        params: vec![("psi_power".into(), q)],
        dim,
        alpha_expected: q - 1.0,
        singular: if smooth {
            SingularSet::None
        } else {
            SingularSet::Points(vec![Point::zeros(dim)])
        },
        eval: Arc::new(move |x: &[f64]| pe.jet(x).value + norm(x).powf(q)),
        gradient: Arc::new(move |x: &[f64]| {
            let r = norm(x);
            let base = pg.jet(x).gradient;
            if r == 0.0 {
                return Some(base);
            }
            Some(base.axpy(q * r.powf(q - 2.0), x))
        }),
        jet: Arc::new(move |x: &[f64]| {
            let r = norm(x);
            let pj_x = pj.jet(x);
            let radial = if r == 0.0 {
                if !smooth {
                    return None;
                }
                Jet::new(0.0, Point::zeros(x.len()), SymMat::identity(x.len()).scale(2.0))
            } else {
                radial_jet(x, r.powf(q), q * r.powf(q - 1.0), q * (q - 1.0) * r.powf(q - 2.0))
            };
            Some(Jet::new(
                pj_x.value + radial.value,
                pj_x.gradient.axpy(1.0, &radial.gradient),
                pj_x.hessian.add(&radial.hessian),
            ))
        }),
        residual,
    };
    let probe: Vec<f64> = (0..dim).map(|i| 0.3 + 0.1 * i as f64).collect();
    sol.self_check(&[&probe])
}

/// `u = c |X|^{p'}`, `p' = p/(p-1)`, with `c` chosen so that the
/// non-divergence p-Laplacian equals 1 off the origin.
pub fn p_radial_profile(p: f64, d: usize) -> Result<ExactSolution> {
    if !(p >= 2.0 && p.is_finite()) {
        return Err(Error::Domain(format!("p-radial profile needs p >= 2, got {p}")));
    }
    if !(1..=3).contains(&d) {
        return Err(Error::Domain(format!("p-radial profile needs d in 1..=3, got {d}")));
    }
    let q = p / (p - 1.0);
    // radial substitution gives (c q)^{p-1} d = 1
    let c = (1.0 / d as f64).powf(1.0 / (p - 1.0)) / q;
    let residual: ResidualFn =
        Arc::new(move |j: &Jet| p_laplacian_nondiv(j, p).unwrap_or(f64::NAN) - 1.0);
    let probe: Vec<f64> = (0..d).map(|i| 0.5 - 0.2 * i as f64).collect();
    power_radial(
        "p_radial",
        vec![("p".into(), p), ("d".into(), d as f64)],
        d,
        c,
        q,
        1.0 / (p - 1.0),
        residual,
    )
    .self_check(&[&probe])
}

/// Looks an oracle up by its CLI name.
pub fn by_name(name: &str, gamma: f64, d: usize, p: f64) -> Result<ExactSolution> {
    match name {
        "ode" => ode_profile(gamma),
        "radial" => radial_profile(gamma, d),
        "aronsson" => Ok(aronsson()),
        "p_radial" | "p-radial" => p_radial_profile(p, d),
        "radial_plus_smooth" => radial_plus_smooth(Polynomial::zero(d), 4.0 / 3.0),
        _ => Err(Error::Domain(format!("unknown oracle '{name}'"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ode_profile_constants() {
        let u = ode_profile(0.0).unwrap();
        assert!((u.eval(&[0.6]) - 0.18).abs() < 1e-15);
        assert!((u.jet(&[0.6]).unwrap().hessian.get(0, 0) - 1.0).abs() < 1e-14);

        let u = ode_profile(1.0).unwrap();
        let c = 2.0 / 3.0 * 2.0_f64.sqrt();
        assert!((u.eval(&[1.0]) - c).abs() < 1e-15);
        let j = u.jet(&[0.25]).unwrap();
        assert!((j.gradient[0] * j.hessian.get(0, 0) - 1.0).abs() < 1e-14);
        assert_eq!(u.alpha_expected, 0.5);
        assert!(ode_profile(-0.1).is_err());
        assert!(u.jet(&[0.0]).is_none());
    }

    #[test]
    fn radial_profile_constants() {
        let u = radial_profile(0.0, 2).unwrap();
        assert!((u.eval(&[0.6, 0.8]) - 0.25).abs() < 1e-15);

        let u = radial_profile(1.0, 2).unwrap();
        let c = 2.0 / 3.0 / 1.5_f64.sqrt();
        assert!((u.eval(&[1.0, 0.0]) - c).abs() < 1e-15);
        assert!(u.residual(&[0.3, 0.0]).unwrap().abs() < 1e-12);

        let u = radial_profile(2.0, 1).unwrap();
        assert!((u.alpha_expected - 1.0 / 3.0).abs() < 1e-15);
        assert!(radial_profile(1.0, 3).is_err());
    }

    #[test]
    fn aronsson_properties() {
        let a = aronsson();
        assert!(infinity_laplacian(&a.jet(&[1.0, 1.0]).unwrap()).abs() < 1e-12);
        assert!(infinity_laplacian(&a.jet(&[0.7, -0.2]).unwrap()).abs() < 1e-12);
        let g = a.gradient(&[1.0, 0.0]).unwrap();
        assert!((g[0] - 4.0 / 3.0).abs() < 1e-15 && g[1] == 0.0);
        assert!(a.jet(&[1.0, 0.0]).is_none());
        assert!((a.alpha_expected - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn separable_recovers_aronsson() {
        let s = separable_infinity_harmonic(&[64.0 / 81.0, -64.0 / 81.0], &[0.0, 0.0]).unwrap();
        let a = aronsson();
        for x in [[0.3, -0.9], [-0.5, 0.25], [1.0, 1.0]] {
            assert!((s.eval(&x) - a.eval(&x)).abs() < 1e-14);
        }
        let aff = separable_infinity_harmonic(&[0.0, 0.0], &[1.0, 2.0]).unwrap();
        assert_eq!(aff.eval(&[0.5, 0.25]), 1.0);
        assert_eq!(infinity_laplacian(&aff.jet(&[0.5, 0.25]).unwrap()), 0.0);

        let s3 = separable_infinity_harmonic(&[1.0, -0.5, -0.5], &[0.1, 0.2, -0.3]).unwrap();
        assert!(s3.residual(&[0.31, -0.42, 0.77]).unwrap().abs() < 1e-12);
        assert!(matches!(
            separable_infinity_harmonic(&[1.0, 0.5], &[0.0, 0.0]),
            Err(Error::Constraint(_))
        ));
    }

    #[test]
    fn radial_plus_smooth_cases() {
        let u = radial_plus_smooth(Polynomial::zero(2), 4.0 / 3.0).unwrap();
        for x in [[0.1, 0.2], [-0.7, 0.3], [0.05, -0.01]] {
            let v = infinity_laplacian(&u.jet(&x).unwrap());
            assert!((v - 64.0 / 81.0).abs() < 1e-12, "{v}");
        }
        let phi = Polynomial::new(2, vec![(1.0, [2, 0, 0]), (1.0, [0, 2, 0])]);
        let u = radial_plus_smooth(phi, 4.0 / 3.0).unwrap();
        assert!(u.jet(&[0.3, 0.1]).is_some());
        // bounded by 20 on B_{3/4}; near the unit circle it reaches about 27
        for i in 1..=200 {
            let t = i as f64 * 0.0314;
            let r = 0.75 * (i as f64 / 200.0);
            let v = infinity_laplacian(&u.jet(&[r * t.cos(), r * t.sin()]).unwrap());
            assert!(v.is_finite() && v < 20.0, "{r}: {v}");
        }
        assert!(infinity_laplacian(&u.jet(&[1.0, 0.0]).unwrap()) > 20.0);

        let sq = radial_plus_smooth(Polynomial::zero(2), 2.0).unwrap();
        assert_eq!(sq.alpha_expected, 1.0);
        assert!(sq.jet(&[0.0, 0.0]).is_some());

        let bad = Polynomial::new(2, vec![(1.0, [1, 0, 0])]);
        assert!(radial_plus_smooth(bad, 4.0 / 3.0).is_err());
        assert!(radial_plus_smooth(Polynomial::zero(2), 2.5).is_err());
    }

    #[test]
    fn p_radial_cases() {
        let u = p_radial_profile(2.0, 2).unwrap();
        assert!((u.eval(&[0.6, 0.8]) - 0.25).abs() < 1e-15);
        let u = p_radial_profile(4.0, 2).unwrap();
        assert!((u.alpha_expected - 1.0 / 3.0).abs() < 1e-15);
        let u = p_radial_profile(3.0, 1).unwrap();
        let j = u.jet(&[0.5]).unwrap();
        let one_d = 2.0 * j.gradient[0].abs() * j.hessian.get(0, 0);
        assert!((one_d - 1.0).abs() < 1e-10);
        assert!(p_radial_profile(1.9, 2).is_err());
    }
}
