//! Discrete Chebyshev fit of an affine function `a + b·x` to scattered
//! samples, as the dual linear program
//!
//! ```text
//! max Σ y_k σ_k u_k   s.t.  Σ y_k σ_k (1, x_k) = 0,  Σ y_k = 1,  y >= 0
//! ```
//!
//! solved by a revised simplex on a basis of `d + 2` reference points (the
//! exchange iteration). The optimal multipliers give the fit.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine {
    pub a: f64,
    pub b: [f64; 2],
}

impl Affine {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.a + self.b.iter().zip(x).map(|(b, x)| b * x).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimaxFit {
    pub affine: Affine,
    pub error: f64,
    pub iterations: usize,
    /// The exchange hit its cap and the least-squares fit was used instead.
    pub fallback: bool,
}

const PIVOT_TOL: f64 = 1e-12;

/// Fits over points `xs` (first `dim` coordinates used) with values `us`.
pub fn minimax_affine(xs: &[[f64; 2]], us: &[f64], dim: usize) -> Result<MinimaxFit> {
    let n = xs.len();
    if n < dim + 2 || us.len() != n {
        return Err(Error::Resolution(format!(
            "affine minimax fit in dimension {dim} needs at least {} samples, got {n}",
            dim + 2
        )));
    }
    // Recenter and rescale coordinates and values for conditioning.
    let mut center = [0.0; 2];
    for x in xs {
        for k in 0..dim {
            center[k] += x[k] / n as f64;
        }
    }
    let spread = xs
        .iter()
        .flat_map(|x| (0..dim).map(move |k| (x[k] - center[k]).abs()))
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let uscale = us.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if uscale == 0.0 {
        return Ok(MinimaxFit {
            affine: Affine { a: 0.0, b: [0.0; 2] },
            error: 0.0,
            iterations: 0,
            fallback: false,
        });
    }
    let rows: Vec<[f64; 3]> = xs
        .iter()
        .map(|x| {
            let mut r = [1.0, 0.0, 0.0];
            for k in 0..dim {
                r[k + 1] = (x[k] - center[k]) / spread;
            }
            r
        })
        .collect();
    let vals: Vec<f64> = us.iter().map(|u| u / uscale).collect();

    let (scaled, iterations, fallback) = match dual_simplex(&rows, &vals, dim) {
        Some((coef, it)) => (coef, it, false),
        None => (least_squares(&rows, &vals, dim)?, 0, true),
    };
    // Undo the scaling: u ≈ uscale·(c0 + Σ c_k (x_k - center_k)/spread).
    let mut b = [0.0; 2];
    let mut a = scaled[0] * uscale;
    for k in 0..dim {
        b[k] = scaled[k + 1] * uscale / spread;
        a -= b[k] * center[k];
    }
    let affine = Affine { a, b };
    let error = xs
        .iter()
        .zip(us)
        .map(|(x, u)| (u - affine.eval(&x[..dim])).abs())
        .fold(0.0, f64::max);
    Ok(MinimaxFit {
        affine,
        error,
        iterations,
        fallback,
    })
}

/// Column `k` of the dual constraint matrix: point `k / 2` with sign
/// `+1` for even `k`, `-1` for odd.
fn column(rows: &[[f64; 3]], k: usize, q: usize) -> [f64; 4] {
    let sigma = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    let r = &rows[k / 2];
    let mut c = [0.0; 4];
    for j in 0..q - 1 {
        c[j] = sigma * r[j];
    }
    c[q - 1] = 1.0;
    c
}

fn cost(vals: &[f64], k: usize) -> f64 {
    let sigma = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    -sigma * vals[k / 2]
}

/// Solves `m z = rhs` (or `mᵀ z = rhs`) for a `q × q` matrix by Gaussian
/// elimination with partial pivoting.
fn solve_dense(m: &[[f64; 4]; 4], rhs: &[f64; 4], q: usize, transpose: bool) -> Option<[f64; 4]> {
    let mut a = [[0.0; 5]; 4];
    for i in 0..q {
        for j in 0..q {
            a[i][j] = if transpose { m[j][i] } else { m[i][j] };
        }
        a[i][q] = rhs[i];
    }
    for col in 0..q {
        let piv = (col..q).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-14 {
            return None;
        }
        a.swap(col, piv);
        for i in col + 1..q {
            let f = a[i][col] / a[col][col];
            for j in col..=q {
                a[i][j] -= f * a[col][j];
            }
        }
    }
    let mut z = [0.0; 4];
    for i in (0..q).rev() {
        let mut s = a[i][q];
        for j in i + 1..q {
            s -= a[i][j] * z[j];
        }
        z[i] = s / a[i][i];
    }
    Some(z)
}

/// Two-phase revised simplex with Bland's rule. Artificial columns carry
/// indices `>= 2n`. Returns the scaled coefficients `(c0, c1, c2)`.
fn dual_simplex(rows: &[[f64; 3]], vals: &[f64], dim: usize) -> Option<([f64; 3], usize)> {
    let q = dim + 2;
    let ncols = 2 * rows.len();
    let mut rhs = [0.0; 4];
    rhs[q - 1] = 1.0;
    let col_of = |k: usize| -> [f64; 4] {
        if k >= ncols {
            let mut e = [0.0; 4];
            e[k - ncols] = 1.0;
            e
        } else {
            column(rows, k, q)
        }
    };
    let mut basis: Vec<usize> = (0..q).map(|j| ncols + j).collect();
    let max_iter = 50 * ncols + 100;
    let mut iterations = 0;

    for phase in 0..2 {
        let phase_cost = |k: usize| -> f64 {
            match (phase, k >= ncols) {
                (0, true) => 1.0,
                (0, false) => 0.0,
                (_, true) => f64::INFINITY,
                (_, false) => cost(vals, k),
            }
        };
        loop {
            iterations += 1;
            if iterations > max_iter {
                return None;
            }
            let mut bm = [[0.0; 4]; 4];
            for (j, &k) in basis.iter().enumerate() {
                let c = col_of(k);
                for i in 0..q {
                    bm[i][j] = c[i];
                }
            }
            let mut cb = [0.0; 4];
            for (j, &k) in basis.iter().enumerate() {
                let c = phase_cost(k);
                cb[j] = if c.is_finite() { c } else { 0.0 };
            }
            let prices = solve_dense(&bm, &cb, q, true)?;
            let xb = solve_dense(&bm, &rhs, q, false)?;

            let entering = (0..ncols).find(|&k| {
                if basis.contains(&k) {
                    return false;
                }
                let c = col_of(k);
                let reduced = phase_cost(k) - (0..q).map(|i| prices[i] * c[i]).sum::<f64>();
                reduced < -PIVOT_TOL
            });
            let Some(k) = entering else {
                if phase == 0 {
                    let infeasible: f64 = basis
                        .iter()
                        .zip(xb.iter())
                        .filter(|(&k, _)| k >= ncols)
                        .map(|(_, x)| *x)
                        .sum();
                    if infeasible > 1e-9 {
                        return None;
                    }
                    // Artificials left at zero level in the basis are
                    // exchanged for any column with a usable pivot.
                    for j in 0..q {
                        if basis[j] < ncols {
                            continue;
                        }
                        let swapped = (0..ncols).filter(|k| !basis.contains(k)).find(|&k| {
                            let d = solve_dense(&bm, &col_of(k), q, false);
                            d.is_some_and(|d| d[j].abs() > 1e-9)
                        });
                        basis[j] = swapped?;
                        for (jj, &kb) in basis.iter().enumerate() {
                            let c = col_of(kb);
                            for i in 0..q {
                                bm[i][jj] = c[i];
                            }
                        }
                    }
                    break;
                }
                let mut coef = [0.0; 3];
                for j in 0..q - 1 {
                    coef[j] = -prices[j];
                }
                return Some((coef, iterations));
            };
            let d = solve_dense(&bm, &col_of(k), q, false)?;
            let mut leave: Option<(usize, f64)> = None;
            for j in 0..q {
                if d[j] > PIVOT_TOL {
                    let ratio = xb[j].max(0.0) / d[j];
                    let better = match leave {
                        None => true,
                        Some((lj, lr)) => ratio < lr - 1e-15 || (ratio <= lr + 1e-15 && basis[j] < basis[lj]),
                    };
                    if better {
                        leave = Some((j, ratio));
                    }
                }
            }
            let (j, _) = leave?;
            basis[j] = k;
        }
    }
    None
}

fn least_squares(rows: &[[f64; 3]], vals: &[f64], dim: usize) -> Result<[f64; 3]> {
    let p = dim + 1;
    let mut normal = [[0.0; 4]; 4];
    let mut rhs = [0.0; 4];
    for (r, v) in rows.iter().zip(vals) {
        for i in 0..p {
            rhs[i] += r[i] * v;
            for j in 0..p {
                normal[i][j] += r[i] * r[j];
            }
        }
    }
    let z = solve_dense(&normal, &rhs, p, false)
        .ok_or_else(|| Error::NumericalFailure("degenerate sample geometry in affine fit".into()))?;
    Ok([z[0], z[1], z[2]])
}
