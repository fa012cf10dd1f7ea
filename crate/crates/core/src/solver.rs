//! Grid solutions of `H(X, grad u) F(X, D^2 u) = f` with Dirichlet data.
//!
//! The PDE solver is a pseudo-time relaxation
//! `u <- u + dt (H_eps(grad u) F(D^2 u) - f)` at interior points, with an
//! adaptive step `dt = dt_factor h^2 / (2 d Lambda H_max)` recomputed every
//! sweep, run through a decreasing schedule of regularizations `eps`.
//! By default the sweeps carry Nesterov momentum with gradient-based
//! restart; the fixed point is the same as the plain iteration.
//!
//! Inside `H` the gradient magnitude is taken per axis as
//! `sqrt((D+ u)^2 + (D- u)^2) / sqrt(2)`. It is second-order consistent like
//! the central difference but does not vanish at a symmetric critical grid
//! point, where the central difference is exactly zero and would force a
//! spurious spike of depth `h^2 eps^-gamma`.
//!
//! The central-difference Hessian is monotone only for the trace operator;
//! the Pucci kinds are accepted but experimental.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Grid, Jet, Point, ScalarField, SymMat};
use crate::operators::{
    equation_residual, eval_operator, fd_jet, DegeneracySpec, OperatorSpec, ScalarFn,
};

#[derive(Clone)]
pub struct ProblemSpec {
    pub operator: OperatorSpec,
    pub degeneracy: DegeneracySpec,
    /// Right-hand side `f`.
    pub rhs: ScalarFn,
    /// Dirichlet data on the box boundary.
    pub boundary: ScalarFn,
    pub domain: Grid,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("operator", &self.operator)
            .field("degeneracy", &self.degeneracy)
            .field("domain", &self.domain)
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    /// Sampled checks: finite data on the grid and `F(X, 0) = 0`.
    pub fn validate(&self) -> Result<()> {
        let g = &self.domain;
        let stride = (g.len() / 4096).max(1);
        for i in (0..g.len()).step_by(stride) {
            let x = g.coord(i);
            let f = (self.rhs)(&x);
            if !f.is_finite() {
                return Err(Error::Domain(format!("right-hand side is {f} at {:?}", &*x)));
            }
            if g.is_boundary(i) {
                let b = (self.boundary)(&x);
                if !b.is_finite() {
                    return Err(Error::Domain(format!("boundary data is {b} at {:?}", &*x)));
                }
            }
            let zero = Jet::new(0.0, Point::zeros(g.dim()), SymMat::zeros(g.dim()));
            let f0 = eval_operator(&self.operator, &x, &zero)?;
            if f0 != 0.0 {
                return Err(Error::Domain(format!("operator is not normalized: F(X, 0) = {f0}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveConfig {
    /// Strictly decreasing positive regularizations; the last is `eps_min`.
    pub eps_schedule: Vec<f64>,
    /// Fraction of the stability bound, in `(0, 1]`.
    pub dt_factor: f64,
    /// Target for the interior residual sup-norm.
    pub tol: f64,
    /// Sweep budget per stage.
    pub max_iters: usize,
    /// Nesterov momentum with restart; `false` gives the plain iteration.
    pub accelerate: bool,
}

pub const DEFAULT_EPS_SCHEDULE: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

impl SolveConfig {
    pub fn default_for_dim(dim: usize) -> Self {
        Self {
            eps_schedule: DEFAULT_EPS_SCHEDULE.to_vec(),
            dt_factor: 0.5,
            tol: if dim == 1 { 1e-6 } else { 1e-5 },
            max_iters: 2_000_000,
            accelerate: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps_schedule.is_empty()
            || self.eps_schedule.iter().any(|e| !(*e > 0.0 && e.is_finite()))
            || self.eps_schedule.windows(2).any(|w| w[1] >= w[0])
        {
            return Err(Error::Domain(format!(
                "eps schedule must be positive and strictly decreasing, got {:?}",
                self.eps_schedule
            )));
        }
        if !(self.dt_factor > 0.0 && self.dt_factor <= 1.0) {
            return Err(Error::Domain(format!("dt factor {} not in (0, 1]", self.dt_factor)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Domain(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.max_iters == 0 {
            return Err(Error::Domain("max_iters must be at least 1".into()));
        }
        Ok(())
    }

    /// Replaces the tail of the schedule so that it ends exactly at `eps_min`.
    pub fn with_eps_min(mut self, eps_min: f64) -> Self {
        self.eps_schedule.retain(|&e| e > eps_min);
        self.eps_schedule.push(eps_min);
        self
    }

    /// Parses flat `key=value` lines on top of `base`. Keys: `eps_schedule`
    /// (comma list), `eps_min`, `dt_factor`, `tol`, `max_iters`, `accelerate`.
    pub fn from_kv_str(text: &str, base: SolveConfig) -> Result<Self> {
        let mut cfg = base;
        let mut eps_min = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key=value", lineno + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("line {}: bad number '{s}'", lineno + 1)))
            };
            match k {
                "eps_schedule" => {
                    cfg.eps_schedule = v.split(',').map(|s| num(s.trim())).collect::<Result<_>>()?
                }
                "eps_min" => eps_min = Some(num(v)?),
                "dt_factor" => cfg.dt_factor = num(v)?,
                "tol" => cfg.tol = num(v)?,
                "max_iters" => {
                    cfg.max_iters = v
                        .parse()
                        .map_err(|_| Error::Parse(format!("line {}: bad integer '{v}'", lineno + 1)))?
                }
                "accelerate" => {
                    cfg.accelerate = v
                        .parse()
                        .map_err(|_| Error::Parse(format!("line {}: bad bool '{v}'", lineno + 1)))?
                }
                _ => return Err(Error::Parse(format!("line {}: unknown key '{k}'", lineno + 1))),
            }
        }
        if let Some(e) = eps_min {
            cfg = cfg.with_eps_min(e);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SolveDiagnostics {
    /// Interior residual sup-norm of the returned field at the last eps.
    pub final_residual: f64,
    pub stage_eps: Vec<f64>,
    pub stage_iterations: Vec<usize>,
    pub stage_residuals: Vec<f64>,
    pub dt_last: f64,
    pub dt_min: f64,
    /// Sweeps whose residual sup-norm exceeded the previous sweep's.
    pub monotone_violations: usize,
    pub restarts: usize,
}

impl SolveDiagnostics {
    pub fn total_iterations(&self) -> usize {
        self.stage_iterations.iter().sum()
    }
}

/// Gradient used inside `H`: per axis `sign(D+ + D-) sqrt((D+^2 + D-^2)/2)`.
#[inline]
fn axis_gradient(dp: f64, dm: f64) -> f64 {
    let mag = (0.5 * (dp * dp + dm * dm)).sqrt();
    if dp + dm < 0.0 {
        -mag
    } else {
        mag
    }
}

/// The jet the scheme evaluates: central Hessian from [`fd_jet`] with the
/// gradient replaced by the one-sided symmetric magnitudes.
pub fn scheme_jet(field: &ScalarField, index: usize) -> Result<Jet> {
    let mut jet = fd_jet(field, index)?;
    let g = field.grid();
    let u = field.values();
    let h = g.h();
    let [ix, iy] = g.multi_index(index);
    let mut grad = Point::zeros(g.dim());
    for axis in 0..g.dim() {
        let (fwd, bwd) = match axis {
            0 => (u[index + 1], u[index - 1]),
            _ => (u[g.flat_index(ix, iy + 1)], u[g.flat_index(ix, iy - 1)]),
        };
        let c = u[index];
        grad.set(axis, axis_gradient((fwd - c) / h, (c - bwd) / h));
    }
    jet.gradient = grad;
    Ok(jet)
}

/// Interior residual of the scheme at `eps`, recomputed from scratch through
/// the public operator API. Boundary entries are zero.
pub fn residual_field(problem: &ProblemSpec, field: &ScalarField, eps: f64) -> Result<ScalarField> {
    let g = field.grid();
    let mut out = vec![0.0; g.len()];
    for (i, o) in out.iter_mut().enumerate() {
        if g.is_boundary(i) {
            continue;
        }
        let jet = scheme_jet(field, i)?;
        *o = equation_residual(problem, &jet, &g.coord(i), eps)?;
    }
    ScalarField::new(*g, out)
}

struct Workspace<'a> {
    problem: &'a ProblemSpec,
    grid: Grid,
    rhs: Vec<f64>,
    interior: Vec<usize>,
    fast_trace: bool,
}

impl<'a> Workspace<'a> {
    fn new(problem: &'a ProblemSpec) -> Self {
        let grid = problem.domain;
        let interior: Vec<usize> = (0..grid.len()).filter(|&i| !grid.is_boundary(i)).collect();
        let rhs = (0..grid.len())
            .map(|i| if grid.is_boundary(i) { 0.0 } else { (problem.rhs)(&grid.coord(i)) })
            .collect();
        Self {
            problem,
            grid,
            rhs,
            interior,
            fast_trace: matches!(problem.operator, OperatorSpec::Trace),
        }
    }

    /// Fills `r` at interior points; returns `(sup |r|, sup H)`.
    fn residual(&self, u: &[f64], eps: f64, r: &mut [f64]) -> Result<(f64, f64)> {
        let g = &self.grid;
        let h = g.h();
        let inv_h = 1.0 / h;
        let inv_h2 = inv_h * inv_h;
        let n = g.n();
        let deg = &self.problem.degeneracy;
        let modulated = !matches!(deg.form, crate::operators::DegeneracyForm::PurePower);
        let eps2 = eps * eps;
        let (mut sup, mut hmax) = (0.0_f64, 0.0_f64);
        for &i in &self.interior {
            let c = u[i];
            let (ex, wx) = (u[i + 1], u[i - 1]);
            let dpx = (ex - c) * inv_h;
            let dmx = (c - wx) * inv_h;
            let uxx = (dpx - dmx) * inv_h;
            let mut g2 = 0.5 * (dpx * dpx + dmx * dmx);
            let (mut uyy, mut uxy, mut gy) = (0.0, 0.0, 0.0);
            if g.dim() == 2 {
                let (no, so) = (u[i + n], u[i - n]);
                let dpy = (no - c) * inv_h;
                let dmy = (c - so) * inv_h;
                uyy = (dpy - dmy) * inv_h;
                g2 += 0.5 * (dpy * dpy + dmy * dmy);
                if !self.fast_trace {
                    uxy = (u[i + n + 1] + u[i - n - 1] - u[i - n + 1] - u[i + n - 1]) * 0.25 * inv_h2;
                    gy = axis_gradient(dpy, dmy);
                }
            }
            let x = if modulated || !self.fast_trace { g.coord(i) } else { Point::zeros(g.dim()) };
            let hval = match (modulated, deg.gamma) {
                (false, gm) if gm == 1.0 => (eps2 + g2).sqrt(),
                _ => deg.eval_from_norm_sq(&x, eps2 + g2),
            };
            let fval = if self.fast_trace {
                uxx + uyy
            } else {
                let (grad, hess) = if g.dim() == 1 {
                    (Point::new(&[axis_gradient(dpx, dmx)]), SymMat::diag(&[uxx]))
                } else {
                    let mut m = SymMat::diag(&[uxx, uyy]);
                    m.set(0, 1, uxy);
                    (Point::new(&[axis_gradient(dpx, dmx), gy]), m)
                };
                eval_operator(&self.problem.operator, &x, &Jet::new(c, grad, hess))?
            };
            let ri = hval * fval - self.rhs[i];
            r[i] = ri;
            sup = sup.max(ri.abs());
            hmax = hmax.max(hval);
            if !ri.is_finite() {
                sup = f64::NAN;
            }
        }
        Ok((sup, hmax))
    }
}

/// Transfinite interpolation of the boundary trace; reproduces affine data.
fn initial_field(problem: &ProblemSpec) -> Vec<f64> {
    let g = problem.domain;
    let n = g.n();
    let b = |i: usize| (problem.boundary)(&g.coord(i));
    match g.dim() {
        1 => {
            let (l, r) = (b(0), b(n - 1));
            (0..n)
                .map(|i| {
                    if i == 0 {
                        l
                    } else if i == n - 1 {
                        r
                    } else {
                        let s = i as f64 / (n - 1) as f64;
                        (1.0 - s) * l + s * r
                    }
                })
                .collect()
        }
        _ => {
            let at = |ix: usize, iy: usize| b(g.flat_index(ix, iy));
            let south: Vec<f64> = (0..n).map(|i| at(i, 0)).collect();
            let north: Vec<f64> = (0..n).map(|i| at(i, n - 1)).collect();
            let west: Vec<f64> = (0..n).map(|j| at(0, j)).collect();
            let east: Vec<f64> = (0..n).map(|j| at(n - 1, j)).collect();
            let mut u = vec![0.0; g.len()];
            for iy in 0..n {
                for ix in 0..n {
                    let idx = g.flat_index(ix, iy);
                    if g.is_boundary(idx) {
                        u[idx] = b(idx);
                        continue;
                    }
                    let s = ix as f64 / (n - 1) as f64;
                    let t = iy as f64 / (n - 1) as f64;
                    u[idx] = (1.0 - s) * west[iy] + s * east[iy] + (1.0 - t) * south[ix]
                        + t * north[ix]
                        - ((1.0 - s) * (1.0 - t) * south[0]
                            + s * (1.0 - t) * south[n - 1]
                            + (1.0 - s) * t * north[0]
                            + s * t * north[n - 1]);
                }
            }
            u
        }
    }
}

/// Solves the Dirichlet problem through the eps schedule.
pub fn solve_dirichlet(
    problem: &ProblemSpec,
    config: &SolveConfig,
) -> Result<(ScalarField, SolveDiagnostics)> {
    problem.validate()?;
    config.validate()?;
    let ws = Workspace::new(problem);
    let g = problem.domain;
    let d = g.dim() as f64;
    let big_lambda = problem.operator.upper_constant();
    let dt_base = config.dt_factor * g.h() * g.h() / (2.0 * d * big_lambda);

    let mut u = initial_field(problem);
    let mut prev = u.clone();
    let mut y = u.clone();
    let mut r = vec![0.0; g.len()];
    let mut diag = SolveDiagnostics {
        dt_min: f64::INFINITY,
        ..Default::default()
    };
    let mut sweep = 0usize;

    for &eps in &config.eps_schedule {
        let mut t_k = 1.0_f64;
        let mut last_sup = f64::INFINITY;
        let mut converged = false;
        let mut iters = 0;
        prev.copy_from_slice(&u);
        while iters < config.max_iters {
            let beta = if config.accelerate {
                let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t_k * t_k).sqrt());
                let b = (t_k - 1.0) / t_next;
                t_k = t_next;
                b
            } else {
                0.0
            };
            for &i in &ws.interior {
                y[i] = u[i] + beta * (u[i] - prev[i]);
            }
            for (i, yi) in y.iter_mut().enumerate() {
                if g.is_boundary(i) {
                    *yi = u[i];
                }
            }
            let (sup, hmax) = ws.residual(&y, eps, &mut r)?;
            iters += 1;
            sweep += 1;
            if !sup.is_finite() {
                return Err(Error::NumericalBlowup { sweep });
            }
            if sup > last_sup {
                diag.monotone_violations += 1;
            }
            last_sup = sup;
            if sup <= config.tol {
                u.copy_from_slice(&y);
                diag.final_residual = sup;
                converged = true;
                break;
            }
            let dt = dt_base / hmax.max(f64::MIN_POSITIVE);
            diag.dt_last = dt;
            diag.dt_min = diag.dt_min.min(dt);
            let mut dot = 0.0;
            for &i in &ws.interior {
                let new = y[i] + dt * r[i];
                dot += r[i] * (new - u[i]);
                prev[i] = u[i];
                u[i] = new;
            }
            if config.accelerate && dot < 0.0 {
                t_k = 1.0;
                diag.restarts += 1;
            }
        }
        diag.stage_eps.push(eps);
        diag.stage_iterations.push(iters);
        diag.stage_residuals.push(last_sup);
        if !converged {
            diag.final_residual = last_sup;
            return Err(Error::ConvergenceFailure(Box::new(diag)));
        }
    }
    if diag.dt_min == f64::INFINITY {
        diag.dt_min = 0.0;
    }
    Ok((ScalarField::new(g, u)?, diag))
}

/// Solves `|u'|^gamma u'' = f` on `[a, b]` with `u(a) = ua`, `u(b) = ub`.
///
/// Works with the flux `w = |u'|^gamma u'`, which satisfies the regular
/// system `w' = (1 + gamma) f`, `u' = sign(w) |w|^{1/(1+gamma)}`; RK4 with
/// sub-steps integrates it and bisection on `w(a)` matches `u(b)`.
pub fn solve_ode_bvp(
    gamma: f64,
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    ua: f64,
    ub: f64,
    n: usize,
) -> Result<ScalarField> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::Domain(format!("gamma must be >= 0, got {gamma}")));
    }
    let grid = Grid::new(1, n, a, b)?;
    const SUBSTEPS: usize = 16;
    let dt = grid.h() / SUBSTEPS as f64;
    for k in 0..=(n - 1) * SUBSTEPS {
        let t = a + k as f64 * dt;
        let v = f(t);
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Domain(format!("right-hand side must be positive, f({t}) = {v}")));
        }
    }
    let p = 1.0 / (1.0 + gamma);
    let speed = |w: f64| w.signum() * w.abs().powf(p);
    let k_w = 1.0 + gamma;

    let integrate = |w0: f64, out: Option<&mut Vec<f64>>| -> f64 {
        let (mut u, mut w) = (ua, w0);
        let mut out = out;
        if let Some(o) = out.as_deref_mut() {
            o.push(u);
        }
        for cell in 0..n - 1 {
            for s in 0..SUBSTEPS {
                let t = grid.axis_coord(cell) + s as f64 * dt;
                let f0 = k_w * f(t);
                let fm = k_w * f(t + 0.5 * dt);
                let f1 = k_w * f(t + dt);
                let k1 = speed(w);
                let k2 = speed(w + 0.5 * dt * f0);
                let k3 = speed(w + 0.5 * dt * fm);
                let k4 = speed(w + dt * fm);
                u += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                w += dt / 6.0 * (f0 + 4.0 * fm + f1);
            }
            if let Some(o) = out.as_deref_mut() {
                o.push(u);
            }
        }
        u
    };

    let miss = |w0: f64| integrate(w0, None) - ub;
    let slope = (ub - ua) / (b - a);
    let s0 = slope.signum() * slope.abs().powf(1.0 + gamma);
    let mut width = 1.0 + s0.abs();
    let (mut lo, mut hi) = (s0 - width, s0 + width);
    let mut expansions = 0;
    while !(miss(lo) <= 0.0 && miss(hi) >= 0.0) {
        width *= 2.0;
        lo = s0 - width;
        hi = s0 + width;
        expansions += 1;
        if expansions > 100 || !width.is_finite() {
            return Err(Error::Shooting(format!(
                "could not bracket the initial flux around {s0}"
            )));
        }
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let m = miss(mid);
        if !m.is_finite() {
            return Err(Error::Shooting(format!("non-finite terminal value at flux {mid}")));
        }
        if m < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let w0 = if miss(lo).abs() <= miss(hi).abs() { lo } else { hi };
    let mut values = Vec::with_capacity(n);
    integrate(w0, Some(&mut values));
    values[0] = ua;
    values[n - 1] = ub;
    ScalarField::new(grid, values)
}

/// One member of the small-delta family.
#[derive(Debug)]
pub struct ScMember {
    pub delta: f64,
    pub result: Result<(ScalarField, SolveDiagnostics)>,
}

/// Solves `|grad u|^delta F(D^2 u) = g(X)` for each `delta` with shared
/// boundary data. Members run in parallel; failures stay per member.
pub fn sc_limit_family(
    operator: &OperatorSpec,
    g: ScalarFn,
    deltas: &[f64],
    grid: Grid,
    boundary: ScalarFn,
    config: &SolveConfig,
) -> Result<Vec<ScMember>> {
    if deltas.iter().any(|d| !(*d >= 0.0 && d.is_finite()))
        || deltas.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(Error::Domain(format!(
            "deltas must be nonnegative and strictly decreasing, got {deltas:?}"
        )));
    }
    Ok(deltas
        .par_iter()
        .map(|&delta| {
            let result = DegeneracySpec::pure_power(delta).and_then(|degeneracy| {
                let problem = ProblemSpec {
                    operator: operator.clone(),
                    degeneracy,
                    rhs: g.clone(),
                    boundary: boundary.clone(),
                    domain: grid,
                };
                solve_dirichlet(&problem, config)
            });
            ScMember { delta, result }
        })
        .collect())
}

/// `sup |u - v| + sup |grad u - grad v|` over interior points in
/// `B_radius(center)`, gradients by central differences.
pub fn interior_c1_distance(
    u: &ScalarField,
    v: &ScalarField,
    center: &[f64],
    radius: f64,
) -> Result<f64> {
    if u.grid() != v.grid() {
        return Err(Error::InvalidGrid("fields live on different grids".into()));
    }
    let g = u.grid();
    let (mut d0, mut d1) = (0.0_f64, 0.0_f64);
    for i in g.ball_indices(center, radius) {
        if g.is_boundary(i) {
            continue;
        }
        let (ju, jv) = (fd_jet(u, i)?, fd_jet(v, i)?);
        d0 = d0.max((ju.value - jv.value).abs());
        d1 = d1.max(ju.gradient.distance(&jv.gradient));
    }
    Ok(d0 + d1)
}
