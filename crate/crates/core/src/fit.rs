//! Discrete Chebyshev (minimax) affine fitting.
//!
//! Minimizing `max_i |u_i - a - b.x_i|` is the LP `min E` subject to
//! `a + b.x_i + E >= u_i` and `-a - b.x_i + E >= -u_i`. Its dual has only
//! `dim + 2` equality rows, so a revised simplex on the dual with a dense
//! basis inverse is cheap; the optimal simplex multipliers are `(a, b, E)`.

use crate::error::{Error, Result};

/// Least-squares affine fit, `(a, b)` with `b` of length `dim`.
pub(crate) fn least_squares(xs: &[[f64; 2]], dim: usize, u: &[f64]) -> Result<(f64, [f64; 2])> {
    let m = dim + 1;
    let mut ata = [[0.0; 3]; 3];
    let mut atu = [0.0; 3];
    for (x, &v) in xs.iter().zip(u) {
        let row = [1.0, x[0], x[1]];
        for i in 0..m {
            atu[i] += row[i] * v;
            for j in 0..m {
                ata[i][j] += row[i] * row[j];
            }
        }
    }
    let mut mat = vec![vec![0.0; m]; m];
    for i in 0..m {
        mat[i].copy_from_slice(&ata[i][..m]);
    }
    let sol = solve_dense(mat, atu[..m].to_vec())
        .ok_or_else(|| Error::Domain("ball points are affinely degenerate".into()))?;
    let mut b = [0.0; 2];
    b[..dim].copy_from_slice(&sol[1..]);
    Ok((sol[0], b))
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve_dense(mut a: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    let scale = a.iter().flatten().fold(0.0_f64, |s, v| s.max(v.abs())).max(f64::MIN_POSITIVE);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-13 * scale {
            return None;
        }
        a.swap(col, piv);
        rhs.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (rhs[r] - s) / a[r][r];
    }
    Some(x)
}

fn invert(b: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let m = b.len();
    let mut inv = vec![vec![0.0; m]; m];
    for k in 0..m {
        let mut e = vec![0.0; m];
        e[k] = 1.0;
        let col = solve_dense(b.to_vec(), e)?;
        for r in 0..m {
            inv[r][k] = col[r];
        }
    }
    Some(inv)
}

/// Minimax affine fit on points `xs` (first `dim` entries used), which
/// should be centered and scaled to `O(1)`; `u` should be `O(1)` too.
/// Returns `(a, b, E)` with `E` recomputed from the data.
pub(crate) fn minimax(xs: &[[f64; 2]], dim: usize, u: &[f64]) -> Result<(f64, [f64; 2], f64)> {
    let n = xs.len();
    let m = dim + 2;
    if n < m {
        return Err(Error::Underdetermined { needed: m, found: n });
    }
    let (a_ls, b_ls) = least_squares(xs, dim, u)?;
    let eval = |a: f64, b: &[f64; 2], i: usize| a + b[0] * xs[i][0] + b[1] * xs[i][1];
    let sup_err = |a: f64, b: &[f64; 2]| {
        (0..n).map(|i| (u[i] - eval(a, b, i)).abs()).fold(0.0_f64, f64::max)
    };
    let e_ls = sup_err(a_ls, &b_ls);

    // Column j < n is y_j^+ with A = (1, x_j, 1), c = u_j;
    // column n + j is y_j^- with A = (-1, -x_j, 1), c = -u_j.
    let column = |j: usize| -> [f64; 4] {
        let (i, s) = if j < n { (j, 1.0) } else { (j - n, -1.0) };
        let mut col = [0.0; 4];
        col[0] = s;
        for d in 0..dim {
            col[1 + d] = s * xs[i][d];
        }
        col[m - 1] = 1.0;
        col
    };
    let cost = |j: usize| if j < n { u[j] } else { -u[j - n] };

    // Feasible start: y_j^+ = y_j^- = 1/2 at the worst least-squares point,
    // plus zero-valued columns at points completing an affine frame.
    let j0 = (0..n)
        .max_by(|&i, &k| (u[i] - eval(a_ls, &b_ls, i)).abs().total_cmp(&(u[k] - eval(a_ls, &b_ls, k)).abs()))
        .unwrap_or(0);
    let mut basis = vec![j0, n + j0];
    let mut frame: Vec<[f64; 2]> = Vec::new();
    for _ in 0..dim {
        let mut best = None;
        let mut best_score = 0.0;
        for i in 0..n {
            let dx = [xs[i][0] - xs[j0][0], xs[i][1] - xs[j0][1]];
            let score = match frame.first() {
                None => dx[0] * dx[0] + dx[1] * dx[1],
                Some(f) => (dx[0] * f[1] - dx[1] * f[0]).abs(),
            };
            if score > best_score {
                best_score = score;
                best = Some((i, dx));
            }
        }
        let (i, dx) = best.ok_or_else(|| Error::Domain("ball points are affinely degenerate".into()))?;
        if best_score <= 1e-12 {
            return Err(Error::Domain("ball points are affinely degenerate".into()));
        }
        frame.push(dx);
        basis.push(i);
    }
    let build = |basis: &[usize]| -> Vec<Vec<f64>> {
        let mut b = vec![vec![0.0; m]; m];
        for (c, &j) in basis.iter().enumerate() {
            let col = column(j);
            for r in 0..m {
                b[r][c] = col[r];
            }
        }
        b
    };
    let mut binv =
        invert(&build(&basis)).ok_or_else(|| Error::Domain("singular starting basis".into()))?;
    let mut xb = vec![0.0; m];
    xb[0] = 0.5;
    xb[1] = 0.5;

    let tol = 1e-14 * (1.0 + u.iter().fold(0.0_f64, |s, v| s.max(v.abs())));
    let mut degenerate_run = 0usize;
    let max_pivots = 50 * n + 1000;
    for pivot in 0..max_pivots {
        if pivot % 64 == 63 {
            if let Some(inv) = invert(&build(&basis)) {
                binv = inv;
                // basic values are B^-1 e_m
                xb = (0..m).map(|r| binv[r][m - 1].max(0.0)).collect();
            }
        }
        // multipliers pi = c_B^T B^-1
        let mut pi = [0.0; 4];
        for c in 0..m {
            let cb = cost(basis[c]);
            for r in 0..m {
                pi[r] += cb * binv[c][r];
            }
        }
        let reduced = |j: usize| {
            let col = column(j);
            cost(j) - (0..m).map(|r| pi[r] * col[r]).sum::<f64>()
        };
        let bland = degenerate_run > 50;
        let mut entering = None;
        let mut best = tol;
        for j in 0..2 * n {
            let d = reduced(j);
            if d > best {
                entering = Some(j);
                if bland {
                    break;
                }
                best = d;
            }
        }
        let Some(q) = entering else { break };
        let col = column(q);
        let w: Vec<f64> = (0..m).map(|r| (0..m).map(|c| binv[r][c] * col[c]).sum()).collect();
        let mut leave = None;
        let mut ratio = f64::INFINITY;
        for r in 0..m {
            if w[r] > 1e-12 {
                let t = xb[r] / w[r];
                let better = match leave {
                    None => true,
                    Some(l) => t < ratio - 1e-15 || (t <= ratio + 1e-15 && basis[r] < basis[l]),
                };
                if better {
                    ratio = t;
                    leave = Some(r);
                }
            }
        }
        // The dual is bounded by max |u|, so a missing ratio is round-off.
        let Some(r) = leave else { break };
        degenerate_run = if ratio <= 1e-15 { degenerate_run + 1 } else { 0 };
        for i in 0..m {
            if i != r {
                xb[i] -= ratio * w[i];
                xb[i] = xb[i].max(0.0);
            }
        }
        xb[r] = ratio;
        let piv = w[r];
        let row_r: Vec<f64> = binv[r].iter().map(|v| v / piv).collect();
        for i in 0..m {
            if i == r {
                continue;
            }
            let f = w[i];
            for c in 0..m {
                binv[i][c] -= f * row_r[c];
            }
        }
        binv[r] = row_r;
        basis[r] = q;
    }

    let mut pi = [0.0; 4];
    for c in 0..m {
        let cb = cost(basis[c]);
        for r in 0..m {
            pi[r] += cb * binv[c][r];
        }
    }
    let a = pi[0];
    let mut b = [0.0; 2];
    b[..dim].copy_from_slice(&pi[1..1 + dim]);
    let e = sup_err(a, &b);
    if e <= e_ls {
        Ok((a, b, e))
    } else {
        Ok((a_ls, b_ls, e_ls))
    }
}
