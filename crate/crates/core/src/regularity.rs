//! Measuring gradient Hölder exponents of grid fields.
//!
//! The instrument is dyadic affine approximation: on balls `B_{rho0^k}` the
//! best sup-norm affine fit has error `E_k`, and for a `C^{1,alpha}` point
//! `E_k ~ rho0^{k(1+alpha)}`. The slope of `log E_k` against `k log rho0`
//! estimates `1 + alpha`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit;
use crate::grid::{AffineFn, Grid, Point, ScalarField};
use crate::operators::{fd_jet, DegeneracySpec, OperatorSpec, ScalarFn};
use crate::oracle;
use crate::solver::{solve_dirichlet, ProblemSpec, SolveConfig};

/// Best sup-norm affine approximation of `field` on its grid points in
/// `B_radius(center)`. Returns the fit and the achieved sup-norm error.
pub fn best_affine_fit(field: &ScalarField, center: &[f64], radius: f64) -> Result<(AffineFn, f64)> {
    let g = field.grid();
    let dim = g.dim();
    let idx = g.ball_indices(center, radius);
    if idx.len() < dim + 2 {
        return Err(Error::Underdetermined {
            needed: dim + 2,
            found: idx.len(),
        });
    }
    let scale_x = radius.max(g.h());
    let xs: Vec<[f64; 2]> = idx
        .iter()
        .map(|&i| {
            let x = g.coord(i);
            let mut p = [0.0; 2];
            for d in 0..dim {
                p[d] = (x[d] - center[d]) / scale_x;
            }
            p
        })
        .collect();
    let raw: Vec<f64> = idx.iter().map(|&i| field.value_at(i)).collect();
    let mean = raw.iter().sum::<f64>() / raw.len() as f64;
    let spread = raw.iter().fold(0.0_f64, |s, v| s.max((v - mean).abs()));
    if spread == 0.0 {
        return Ok((AffineFn::new(mean, &Point::zeros(dim)), 0.0));
    }
    let u: Vec<f64> = raw.iter().map(|v| (v - mean) / spread).collect();
    let (a_s, b_s, _) = fit::minimax(&xs, dim, &u)?;
    // back to original units: l(X) = mean + spread (a_s + b_s.(X - c)/scale_x)
    let mut b = Point::zeros(dim);
    for d in 0..dim {
        b.set(d, spread * b_s[d] / scale_x);
    }
    let a = mean + spread * a_s - b.dot(center);
    let ell = AffineFn::new(a, &b);
    let e = idx
        .iter()
        .map(|&i| (field.value_at(i) - ell.eval(&g.coord(i))).abs())
        .fold(0.0_f64, f64::max);
    Ok((ell, e))
}

/// Least-squares affine fit on the same ball; the minimax error never
/// exceeds this fit's sup-norm error.
pub fn least_squares_affine_fit(
    field: &ScalarField,
    center: &[f64],
    radius: f64,
) -> Result<(AffineFn, f64)> {
    let g = field.grid();
    let dim = g.dim();
    let idx = g.ball_indices(center, radius);
    if idx.len() < dim + 1 {
        return Err(Error::Underdetermined {
            needed: dim + 1,
            found: idx.len(),
        });
    }
    let scale_x = radius.max(g.h());
    let xs: Vec<[f64; 2]> = idx
        .iter()
        .map(|&i| {
            let x = g.coord(i);
            let mut p = [0.0; 2];
            for d in 0..dim {
                p[d] = (x[d] - center[d]) / scale_x;
            }
            p
        })
        .collect();
    let u: Vec<f64> = idx.iter().map(|&i| field.value_at(i)).collect();
    let (a_s, b_s) = fit::least_squares(&xs, dim, &u)?;
    let mut b = Point::zeros(dim);
    for d in 0..dim {
        b.set(d, b_s[d] / scale_x);
    }
    let ell = AffineFn::new(a_s - b.dot(center), &b);
    let e = idx
        .iter()
        .map(|&i| (field.value_at(i) - ell.eval(&g.coord(i))).abs())
        .fold(0.0_f64, f64::max);
    Ok((ell, e))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayLevel {
    pub k: usize,
    pub radius: f64,
    /// Value of the fit at the center, `l_k(center)`.
    pub a: f64,
    pub b: Vec<f64>,
    #[serde(rename = "E")]
    pub e: f64,
    /// Whether `E` clears the noise floor and enters the regression.
    pub used: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayReport {
    pub center: Vec<f64>,
    pub rho0: f64,
    pub k_requested: usize,
    pub levels: Vec<DecayLevel>,
    /// `None` when saturated.
    pub alpha_hat: Option<f64>,
    /// Regression slope minus one before capping.
    pub alpha_raw: Option<f64>,
    #[serde(rename = "C0_hat")]
    pub c0_hat: Option<f64>,
    /// RMS residual of the log-log regression.
    pub fit_residual: f64,
    pub noise_floor: f64,
    pub flags: Vec<String>,
}

impl DecayReport {
    pub fn is_saturated(&self) -> bool {
        self.alpha_hat.is_none()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Dyadic estimator cannot resolve beyond `C^{1,1}`.
pub const ALPHA_CAP: f64 = 1.0;
const CAP_MARGIN: f64 = 0.02;

/// Affine fits on `B_{rho0^k}(center)` for `k = 0..=K` and the decay
/// exponent they imply. Levels whose ball is too small to fit are dropped
/// and the truncation is flagged.
pub fn dyadic_decay(field: &ScalarField, center: &[f64], rho0: f64, k_max: usize) -> Result<DecayReport> {
    if !(rho0 > 0.0 && rho0 <= 0.5) {
        return Err(Error::Domain(format!("rho0 must lie in (0, 1/2], got {rho0}")));
    }
    let g = field.grid();
    if center.len() != g.dim() {
        return Err(Error::Domain(format!(
            "center has {} coordinates, grid is {}-dimensional",
            center.len(),
            g.dim()
        )));
    }
    let mut flags = Vec::new();
    let ball0 = g.ball_indices(center, 1.0);
    if ball0.is_empty() {
        return Err(Error::EmptyBall {
            center: center.to_vec(),
            radius: 1.0,
        });
    }
    let sup0 = ball0.iter().map(|&i| field.value_at(i).abs()).fold(0.0_f64, f64::max);
    // round-off level of a sup-norm fit to data of size sup0
    let noise_floor = 10.0 * 8.0 * f64::EPSILON * sup0;

    let mut levels = Vec::new();
    for k in 0..=k_max {
        let radius = rho0.powi(k as i32);
        if g.ball_indices(center, radius).len() < g.dim() + 2 {
            flags.push(format!("truncated_K:{}", k.saturating_sub(1)));
            break;
        }
        let (ell, e) = best_affine_fit(field, center, radius)?;
        levels.push(DecayLevel {
            k,
            radius,
            a: ell.eval(center),
            b: ell.b.to_vec(),
            e,
            used: e > noise_floor,
        });
    }
    if levels.is_empty() {
        return Err(Error::Underdetermined {
            needed: g.dim() + 2,
            found: g.ball_indices(center, 1.0).len(),
        });
    }

    let pts: Vec<(f64, f64)> = levels
        .iter()
        .filter(|l| l.used)
        .map(|l| (l.k as f64 * rho0.ln(), l.e.ln()))
        .collect();
    let (mut alpha_hat, mut alpha_raw, mut fit_residual) = (None, None, 0.0);
    if pts.len() >= 2 {
        let nn = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / nn;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / nn;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let slope = sxy / sxx;
        let icpt = my - slope * mx;
        fit_residual = (pts.iter().map(|p| (p.1 - icpt - slope * p.0).powi(2)).sum::<f64>() / nn).sqrt();
        let raw = slope - 1.0;
        alpha_raw = Some(raw);
        alpha_hat = Some(if raw > ALPHA_CAP + CAP_MARGIN {
            flags.push("capped".into());
            ALPHA_CAP
        } else {
            raw
        });
        if pts.len() < levels.len() {
            flags.push(format!("noise_floor_levels:{}", levels.len() - pts.len()));
        }
    } else {
        flags.push("saturated".into());
    }

    let c0_hat = alpha_hat.map(|alpha| {
        levels
            .windows(2)
            .map(|w| {
                let db: f64 = w[1].b.iter().zip(&w[0].b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
                let num = (w[1].a - w[0].a).abs() + w[0].radius * db;
                num / w[0].radius.powf(1.0 + alpha)
            })
            .fold(0.0_f64, f64::max)
    });

    Ok(DecayReport {
        center: center.to_vec(),
        rho0,
        k_requested: k_max,
        levels,
        alpha_hat,
        alpha_raw,
        c0_hat,
        fit_residual,
        noise_floor,
        flags,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TableRow {
    pub gamma: f64,
    pub alpha_hat: Option<f64>,
    pub alpha_theory: f64,
    pub abs_err: Option<f64>,
    pub solver_residual: Option<f64>,
    pub error: Option<String>,
}

/// Radial Dirichlet problem for `|grad u|^gamma Delta u = 1` on `grid`,
/// with the exact radial profile as boundary data.
pub fn radial_problem(gamma: f64, grid: Grid) -> Result<ProblemSpec> {
    let exact = oracle::radial_profile(gamma, grid.dim())?;
    let boundary: ScalarFn = std::sync::Arc::new(move |x: &[f64]| exact.eval(x));
    Ok(ProblemSpec {
        operator: OperatorSpec::Trace,
        degeneracy: DegeneracySpec::pure_power(gamma)?,
        rhs: std::sync::Arc::new(|_: &[f64]| 1.0),
        boundary,
        domain: grid,
    })
}

/// One row per `gamma`: solve the radial problem, measure the decay
/// exponent at the grid center. Rows run in parallel; failures are kept in
/// the row.
pub fn exponent_vs_gamma_table(
    gammas: &[f64],
    config: &SolveConfig,
    grid: Grid,
    rho0: f64,
    k_max: usize,
) -> Result<Vec<TableRow>> {
    if gammas.is_empty() {
        return Err(Error::Domain("gamma list is empty".into()));
    }
    Ok(gammas
        .par_iter()
        .map(|&gamma| {
            let alpha_theory = 1.0 / (1.0 + gamma);
            let run = || -> Result<(f64, Option<f64>)> {
                let problem = radial_problem(gamma, grid)?;
                let (u, diag) = solve_dirichlet(&problem, config)?;
                let report = dyadic_decay(&u, &grid.center(), rho0, k_max)?;
                Ok((diag.final_residual, report.alpha_hat))
            };
            match run() {
                Ok((res, alpha_hat)) => TableRow {
                    gamma,
                    alpha_hat,
                    alpha_theory,
                    abs_err: alpha_hat.map(|a| (a - alpha_theory).abs()),
                    solver_residual: Some(res),
                    error: alpha_hat.is_none().then(|| "saturated".to_string()),
                },
                Err(e) => TableRow {
                    gamma,
                    alpha_hat: None,
                    alpha_theory,
                    abs_err: None,
                    solver_residual: match &e {
                        Error::ConvergenceFailure(d) => Some(d.final_residual),
                        _ => None,
                    },
                    error: Some(e.to_string()),
                },
            }
        })
        .collect())
}

/// CSV with columns `gamma,alpha_hat,alpha_theory,abs_err,solver_residual,error`;
/// missing values are empty.
pub fn table_to_csv(rows: &[TableRow]) -> String {
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
    let mut out = String::from("gamma,alpha_hat,alpha_theory,abs_err,solver_residual,error\n");
    for r in rows {
        let err = r.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
        out.push_str(&format!(
            "{:.16e},{},{:.16e},{},{},{}\n",
            r.gamma,
            opt(r.alpha_hat),
            r.alpha_theory,
            opt(r.abs_err),
            opt(r.solver_residual),
            err
        ));
    }
    out
}

/// Interior indices where the central-difference gradient has norm at most
/// `threshold` (default `h`).
pub fn singular_set(field: &ScalarField, threshold: Option<f64>) -> Result<Vec<usize>> {
    let g = field.grid();
    let t = threshold.unwrap_or(g.h());
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("threshold must be >= 0, got {t}")));
    }
    let mut out = Vec::new();
    for i in 0..g.len() {
        if g.is_boundary(i) {
            continue;
        }
        if fd_jet(field, i)?.gradient.norm() <= t {
            out.push(i);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProofConstants {
    #[serde(rename = "C_univ")]
    pub c_univ: f64,
    pub alpha0: f64,
    pub alpha: f64,
    #[serde(rename = "C0")]
    pub c0: f64,
    pub rho0: f64,
    pub delta: f64,
    #[serde(rename = "C_final")]
    pub c_final: f64,
    /// The formula gave `rho0 >= 1/2` and it was replaced by `1/2`.
    pub rho0_capped: bool,
}

/// `rho0 = (1/(2C))^{1/(alpha0-alpha)}`, `delta = (1/2)(1/(2C))^{(1+alpha)/(alpha0-alpha)}`,
/// `C_final = rho0^{-(1+alpha)} (1 + C0/(1-rho0))`.
pub fn proof_constants(c_univ: f64, alpha0: f64, alpha: f64, c0: f64) -> Result<ProofConstants> {
    if !(alpha > 0.0 && alpha < alpha0) {
        return Err(Error::Domain(format!(
            "need 0 < alpha < alpha0, got alpha = {alpha}, alpha0 = {alpha0}"
        )));
    }
    if !(c_univ > 0.5 && c_univ.is_finite()) {
        return Err(Error::Domain(format!("universal constant must exceed 1/2, got {c_univ}")));
    }
    if !(c0 >= 0.0 && c0.is_finite()) {
        return Err(Error::Domain(format!("C0 must be >= 0, got {c0}")));
    }
    let base = 1.0 / (2.0 * c_univ);
    let gap = alpha0 - alpha;
    let mut rho0 = base.powf(1.0 / gap);
    let delta = 0.5 * base.powf((1.0 + alpha) / gap);
    let rho0_capped = rho0 >= 0.5;
    if rho0_capped {
        rho0 = 0.5;
    }
    let c_final = rho0.powf(-(1.0 + alpha)) * (1.0 + c0 / (1.0 - rho0));
    Ok(ProofConstants {
        c_univ,
        alpha0,
        alpha,
        c0,
        rho0,
        delta,
        c_final,
        rho0_capped,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlatnessReport {
    pub radius: f64,
    #[serde(rename = "E")]
    pub e: f64,
    pub bound: f64,
    /// Fit value at the center.
    pub a: f64,
    pub b: Vec<f64>,
    pub coeff_norm: f64,
    pub flat: bool,
    pub bounded_coefficients: bool,
    pub pass: bool,
    pub flags: Vec<String>,
}

/// Audits the flatness conclusion on one ball: `E <= rho0^{1+alpha}` on
/// `B_{rho0}(center)` and `|a| + |b| <= C_univ`, with `a` taken at the center.
pub fn flatness_check(field: &ScalarField, center: &[f64], constants: &ProofConstants) -> Result<FlatnessReport> {
    let g = field.grid();
    let mut flags = Vec::new();
    let sup = g
        .ball_indices(center, 1.0)
        .iter()
        .map(|&i| field.value_at(i).abs())
        .fold(0.0_f64, f64::max);
    if sup > 1.0 + 1e-12 {
        flags.push(format!("missing_normalization: sup|u| = {sup:.6e} on the unit ball"));
    }
    let radius = constants.rho0;
    let (ell, e) = best_affine_fit(field, center, radius)?;
    let bound = radius.powf(1.0 + constants.alpha);
    let a = ell.eval(center);
    let coeff_norm = a.abs() + ell.b.norm();
    let flat = e <= bound;
    let bounded_coefficients = coeff_norm <= constants.c_univ;
    Ok(FlatnessReport {
        radius,
        e,
        bound,
        a,
        b: ell.b.to_vec(),
        coeff_norm,
        flat,
        bounded_coefficients,
        pass: flat && bounded_coefficients,
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_grid, sample};

    #[test]
    fn affine_field_is_fit_exactly() {
        let g = make_grid(2, 33, -1.0, 1.0).unwrap();
        let u = sample(&g, |x| 1.0 + 0.5 * x[0] - 0.25 * x[1]).unwrap();
        let (ell, e) = best_affine_fit(&u, &[0.1, -0.2], 0.5).unwrap();
        assert!(e < 1e-13);
        assert!((ell.a - 1.0).abs() < 1e-13);
        assert!((ell.b[0] - 0.5).abs() < 1e-13 && (ell.b[1] + 0.25).abs() < 1e-13);
    }

    #[test]
    fn parabola_fit_is_chebyshev() {
        let g = make_grid(1, 4097, -1.0, 1.0).unwrap();
        let u = sample(&g, |x| x[0] * x[0]).unwrap();
        let r = 0.25;
        let (ell, e) = best_affine_fit(&u, &[0.0], r).unwrap();
        assert!((e - r * r / 2.0).abs() <= 0.02 * r * r / 2.0);
        assert!((ell.a - r * r / 2.0).abs() <= 0.02 * r * r / 2.0);
        assert!(ell.b[0].abs() < 1e-12);
    }

    #[test]
    fn radial_profile_fit_is_symmetric() {
        let g = make_grid(2, 65, -1.0, 1.0).unwrap();
        let u = oracle::radial_profile(1.0, 2).unwrap().sample(&g).unwrap();
        let (ell, e) = best_affine_fit(&u, &[0.0, 0.0], 0.5).unwrap();
        assert!(e > 0.0);
        assert!(ell.b.norm() < 1e-10);
    }

    #[test]
    fn underdetermined_ball() {
        let g = make_grid(1, 11, -1.0, 1.0).unwrap();
        let u = sample(&g, |x| x[0]).unwrap();
        assert!(matches!(
            best_affine_fit(&u, &[0.0], 0.1),
            Err(Error::Underdetermined { .. })
        ));
    }

    #[test]
    fn decay_of_power_profile() {
        let g = make_grid(1, 4097, -1.0, 1.0).unwrap();
        let u = sample(&g, |x| x[0].abs().powf(1.5)).unwrap();
        let rep = dyadic_decay(&u, &[0.0], 0.5, 8).unwrap();
        assert_eq!(rep.levels.len(), 9);
        assert!((rep.alpha_hat.unwrap() - 0.5).abs() <= 0.02, "{:?}", rep.alpha_hat);
        assert!(rep.c0_hat.unwrap().is_finite());
    }

    #[test]
    fn affine_field_saturates() {
        let g = make_grid(1, 257, -1.0, 1.0).unwrap();
        let u = sample(&g, |x| 0.3 - 0.7 * x[0]).unwrap();
        let rep = dyadic_decay(&u, &[0.0], 0.5, 6).unwrap();
        assert!(rep.is_saturated());
        assert!(rep.flags.iter().any(|f| f == "saturated"));
        assert!(rep.to_json().contains("\"alpha_hat\": null"));
    }

    #[test]
    fn decay_truncates_small_balls() {
        let g = make_grid(1, 65, -1.0, 1.0).unwrap();
        let u = sample(&g, |x| x[0].abs().powf(1.5)).unwrap();
        let rep = dyadic_decay(&u, &[0.0], 0.5, 12).unwrap();
        assert!(rep.levels.len() < 13);
        assert!(rep.flags.iter().any(|f| f.starts_with("truncated_K")));
        assert!(dyadic_decay(&u, &[0.0], 0.75, 3).is_err());
    }

    #[test]
    fn singular_set_examples() {
        let g = make_grid(2, 41, -1.0, 1.0).unwrap();
        let u = sample(&g, |x| x[0] * x[0] + x[1] * x[1]).unwrap();
        assert_eq!(singular_set(&u, None).unwrap(), vec![g.nearest_index(&[0.0, 0.0])]);
        let v = sample(&g, |x| 2.0 * x[0] + x[1]).unwrap();
        assert!(singular_set(&v, None).unwrap().is_empty());
        assert!(singular_set(&v, Some(-1.0)).is_err());
    }

    #[test]
    fn proof_constant_examples() {
        let pc = proof_constants(2.0, 0.5, 0.25, 1.0).unwrap();
        assert!((pc.rho0 - 0.00390625).abs() < 1e-12);
        assert!((pc.delta - 0.5 * 0.25_f64.powi(5)).abs() < 1e-12);
        let expect = pc.rho0.powf(-1.25) * (1.0 + 1.0 / (1.0 - pc.rho0));
        assert!((pc.c_final - expect).abs() <= 1e-12 * expect);
        assert!(!pc.rho0_capped);
        assert!(proof_constants(2.0, 0.5, 0.5, 1.0).is_err());
        assert!(proof_constants(0.5, 0.5, 0.25, 1.0).is_err());
        let capped = proof_constants(0.6, 2.0, 0.1, 0.0).unwrap();
        assert!(capped.rho0_capped && capped.rho0 == 0.5);
    }

    #[test]
    fn flatness_zero_and_unnormalized() {
        let g = make_grid(2, 65, -1.0, 1.0).unwrap();
        let pc = proof_constants(1.0, 1.0, 0.4, 0.0).unwrap();
        let zero = sample(&g, |_| 0.0).unwrap();
        let rep = flatness_check(&zero, &[0.0, 0.0], &pc).unwrap();
        assert!(rep.pass && rep.e == 0.0 && rep.coeff_norm == 0.0);
        let big = sample(&g, |x| 10.0 * (1.0 + x[0] * x[0])).unwrap();
        let rep = flatness_check(&big, &[0.0, 0.0], &pc).unwrap();
        assert!(rep.flags.iter().any(|f| f.starts_with("missing_normalization")));
    }
}
