//! Small least-squares routines shared by rate extraction and calibration.

use crate::error::{Error, Result};

/// Ordinary least-squares line `y = slope·x + intercept`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub intercept_stderr: f64,
    /// Covariance of (slope, intercept).
    pub covariance: f64,
    pub residuals: Vec<f64>,
}

impl LinearFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }

    /// Solves `predict(x) = y` and propagates the fit covariance into the
    /// standard error of `x`.
    pub fn solve_for_x(&self, y: f64) -> (f64, f64) {
        let x = (y - self.intercept) / self.slope;
        // ∂x/∂intercept = −1/slope, ∂x/∂slope = −x/slope
        let di = -1.0 / self.slope;
        let ds = -x / self.slope;
        let var = di * di * self.intercept_stderr.powi(2)
            + ds * ds * self.slope_stderr.powi(2)
            + 2.0 * di * ds * self.covariance;
        (x, var.max(0.0).sqrt())
    }
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::Argument("x and y lengths differ".into()));
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::Argument("a line needs at least two points".into()));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Argument("all x values coincide".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = x.iter().zip(y).map(|(a, b)| b - (slope * a + intercept)).collect();
    let s2 = if n > 2 {
        residuals.iter().map(|r| r * r).sum::<f64>() / (nf - 2.0)
    } else {
        0.0
    };
    let slope_var = s2 / sxx;
    let intercept_var = s2 * (1.0 / nf + mx * mx / sxx);
    Ok(LinearFit {
        slope,
        intercept,
        slope_stderr: slope_var.sqrt(),
        intercept_stderr: intercept_var.sqrt(),
        covariance: -mx * slope_var,
        residuals,
    })
}

/// Weighted fit of `y = slope·x` through the origin. Returns the slope, its
/// standard error and the weighted residual sum of squares.
pub fn fit_through_origin(x: &[f64], y: &[f64], weights: &[f64]) -> Result<(f64, f64, f64)> {
    let sxx: f64 = x.iter().zip(weights).map(|(a, w)| w * a * a).sum();
    if sxx <= 0.0 {
        return Err(Error::Argument("degenerate design for a through-origin fit".into()));
    }
    let sxy: f64 = x.iter().zip(y).zip(weights).map(|((a, b), w)| w * a * b).sum();
    let slope = sxy / sxx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .zip(weights)
        .map(|((a, b), w)| w * (b - slope * a).powi(2))
        .sum();
    Ok((slope, (1.0 / sxx).sqrt(), rss))
}

/// Result of a nonlinear least-squares fit.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveFit {
    pub params: Vec<f64>,
    pub stderr: Vec<f64>,
    pub rss: f64,
    pub iterations: usize,
}

/// Levenberg–Marquardt with a forward-difference Jacobian.
///
/// `model(params, x)` evaluates the curve. Parameter errors come from
/// `s²·(JᵀJ)⁻¹` at the optimum.
pub fn levenberg_marquardt<F>(model: F, x: &[f64], y: &[f64], initial: &[f64]) -> Result<CurveFit>
where
    F: Fn(&[f64], f64) -> f64,
{
    let n = x.len();
    let m = initial.len();
    if n <= m {
        return Err(Error::Argument(format!("{n} points cannot determine {m} parameters")));
    }
    let rss_of = |p: &[f64]| -> f64 { x.iter().zip(y).map(|(xi, yi)| (yi - model(p, *xi)).powi(2)).sum() };

    let mut params = initial.to_vec();
    let mut rss = rss_of(&params);
    let mut damping = 1e-3;
    let mut iterations = 0;

    let jacobian = |p: &[f64]| -> Vec<Vec<f64>> {
        x.iter()
            .map(|&xi| {
                let base = model(p, xi);
                (0..m)
                    .map(|k| {
                        let h = 1e-7 * p[k].abs().max(1e-3);
                        let mut q = p.to_vec();
                        q[k] += h;
                        (model(&q, xi) - base) / h
                    })
                    .collect()
            })
            .collect()
    };

    for iter in 0..500 {
        iterations = iter + 1;
        let jac = jacobian(&params);
        let resid: Vec<f64> = x.iter().zip(y).map(|(xi, yi)| yi - model(&params, *xi)).collect();
        let mut jtj = vec![vec![0.0; m]; m];
        let mut jtr = vec![0.0; m];
        for (row, r) in jac.iter().zip(&resid) {
            for a in 0..m {
                jtr[a] += row[a] * r;
                for b in 0..m {
                    jtj[a][b] += row[a] * row[b];
                }
            }
        }

        let mut improved = false;
        while damping < 1e12 {
            let mut lhs = jtj.clone();
            for (a, row) in lhs.iter_mut().enumerate() {
                row[a] += damping * jtj[a][a].max(1e-12);
            }
            let Some(step) = solve_dense(lhs, jtr.clone()) else {
                damping *= 10.0;
                continue;
            };
            let trial: Vec<f64> = params.iter().zip(&step).map(|(p, s)| p + s).collect();
            let trial_rss = rss_of(&trial);
            if trial_rss < rss {
                let rel = (rss - trial_rss) / rss.max(1e-300);
                params = trial;
                rss = trial_rss;
                damping = (damping / 10.0).max(1e-12);
                improved = true;
                if rel < 1e-15 {
                    damping = 1e12;
                }
                break;
            }
            damping *= 10.0;
        }
        if !improved || damping >= 1e12 {
            break;
        }
    }

    let jac = jacobian(&params);
    let mut jtj = vec![vec![0.0; m]; m];
    for row in &jac {
        for a in 0..m {
            for b in 0..m {
                jtj[a][b] += row[a] * row[b];
            }
        }
    }
    let s2 = rss / (n - m) as f64;
    let stderr = (0..m)
        .map(|k| {
            let mut e = vec![0.0; m];
            e[k] = 1.0;
            solve_dense(jtj.clone(), e)
                .map(|col| (s2 * col[k]).max(0.0).sqrt())
                .unwrap_or(f64::NAN)
        })
        .collect();
    Ok(CurveFit {
        params,
        stderr,
        rss,
        iterations,
    })
}

/// Gaussian elimination with partial pivoting for tiny systems.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut out = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * out[k]).sum();
        out[row] = (b[row] - s) / a[row][row];
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.5 * v - 1.0).collect();
        let f = linear_fit(&x, &y).unwrap();
        assert_abs_diff_eq!(f.slope, 2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(f.intercept, -1.0, epsilon = 1e-12);
        let (x0, _) = f.solve_for_x(4.0);
        assert_abs_diff_eq!(x0, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn origin_fit() {
        let x = [1.0, 2.0, 3.0];
        let y = [-0.1, -0.2, -0.3];
        let (s, _, rss) = fit_through_origin(&x, &y, &[1.0; 3]).unwrap();
        assert_abs_diff_eq!(s, -0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(rss, 0.0, epsilon = 1e-25);
    }

    #[test]
    fn lm_recovers_gaussian() {
        let model = |p: &[f64], x: f64| p[0] * (-(x - p[1]).powi(2) / 2.0).exp();
        let x: Vec<f64> = (0..30).map(|i| -3.0 + 0.25 * i as f64).collect();
        let y: Vec<f64> = x.iter().map(|&v| model(&[1.7, 0.4], v)).collect();
        let fit = levenberg_marquardt(model, &x, &y, &[1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(fit.params[0], 1.7, epsilon = 1e-8);
        assert_abs_diff_eq!(fit.params[1], 0.4, epsilon = 1e-8);
    }
}
