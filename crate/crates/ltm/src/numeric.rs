//! Small numerical routines shared by the solver and the fitting modules:
//! bracketing root finder, golden-section and Nelder–Mead minimizers, linear
//! regression, and a damped least-squares optimizer.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Brent's method on a bracketing interval `[a, b]` with `f(a)·f(b) ≤ 0`.
/// Converges to a relative x-tolerance near machine precision plus `xtol_abs`.
pub fn brent_root<F: FnMut(f64) -> f64>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    mut fb: f64,
    xtol_abs: f64,
    max_iter: usize,
) -> Result<f64> {
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    assert!(
        fa.signum() != fb.signum(),
        "brent_root requires a sign change on the bracket"
    );
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol_abs;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            // inverse quadratic interpolation / secant step
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let q0 = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * q0 * (q0 - r) - (b - a) * (r - 1.0));
                q = (q0 - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        if d.abs() > tol1 {
            b += d;
        } else {
            b += tol1.copysign(xm);
        }
        fb = f(b);
    }
    Err(Error::OptimizerDidNotConverge {
        iterations: max_iter,
    })
}

/// Golden-section minimization of a unimodal function on `[lo, hi]`.
pub fn golden_section<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    xtol_abs: f64,
    max_iter: usize,
) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut a = lo;
    let mut b = hi;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..max_iter {
        if (b - a).abs() <= xtol_abs {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Nelder–Mead simplex minimization. Converges when both the simplex extent
/// and the function spread fall below `rel_tol` relative to the best vertex.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    start: &[f64],
    initial_step: &[f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, f64, usize)> {
    let n = start.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(start.to_vec());
    for i in 0..n {
        let mut v = start.to_vec();
        v[i] += initial_step[i];
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    let mut evals = n + 1;

    for iter in 0..max_iter {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n - 1];

        let x_scale: f64 = simplex[best]
            .iter()
            .map(|x| x.abs())
            .fold(1.0_f64, f64::max);
        let extent: f64 = (0..n)
            .map(|i| {
                simplex
                    .iter()
                    .map(|v| v[i])
                    .fold(f64::NEG_INFINITY, f64::max)
                    - simplex.iter().map(|v| v[i]).fold(f64::INFINITY, f64::min)
            })
            .fold(0.0_f64, f64::max);
        if extent <= rel_tol * x_scale {
            return Ok((simplex[best].clone(), values[best], evals));
        }

        // centroid of all vertices except the worst
        let mut centroid = vec![0.0; n];
        for (k, v) in simplex.iter().enumerate() {
            if k == worst {
                continue;
            }
            for i in 0..n {
                centroid[i] += v[i] / n as f64;
            }
        }

        let reflect: Vec<f64> = (0..n)
            .map(|i| centroid[i] + (centroid[i] - simplex[worst][i]))
            .collect();
        let f_reflect = f(&reflect);
        evals += 1;

        if f_reflect < values[best] {
            let expand: Vec<f64> = (0..n)
                .map(|i| centroid[i] + 2.0 * (centroid[i] - simplex[worst][i]))
                .collect();
            let f_expand = f(&expand);
            evals += 1;
            if f_expand < f_reflect {
                simplex[worst] = expand;
                values[worst] = f_expand;
            } else {
                simplex[worst] = reflect;
                values[worst] = f_reflect;
            }
        } else if f_reflect < values[second_worst] {
            simplex[worst] = reflect;
            values[worst] = f_reflect;
        } else {
            let contract: Vec<f64> = (0..n)
                .map(|i| centroid[i] + 0.5 * (simplex[worst][i] - centroid[i]))
                .collect();
            let f_contract = f(&contract);
            evals += 1;
            if f_contract < values[worst] {
                simplex[worst] = contract;
                values[worst] = f_contract;
            } else {
                // shrink toward the best vertex
                let best_vertex = simplex[best].clone();
                for (k, v) in simplex.iter_mut().enumerate() {
                    if k == best {
                        continue;
                    }
                    for i in 0..n {
                        v[i] = best_vertex[i] + 0.5 * (v[i] - best_vertex[i]);
                    }
                    values[k] = f(v);
                    evals += 1;
                }
            }
        }
        let _ = iter;
    }
    Err(Error::OptimizerDidNotConverge {
        iterations: max_iter,
    })
}

/// Ordinary least-squares line `y = slope·x + intercept`.
/// Returns `(slope, intercept, rms)`.
pub fn fit_line(points: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return Err(Error::DegenerateThresholdFit);
    }
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateThresholdFit);
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let rms = (points
        .iter()
        .map(|p| (p.1 - slope * p.0 - intercept).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok((slope, intercept, rms))
}

/// Outcome of a damped least-squares run.
pub struct LeastSquaresFit {
    /// Optimal parameter vector (in the caller's parameterization).
    pub params: Vec<f64>,
    /// Final cost, ½·Σr².
    pub cost: f64,
    pub iterations: usize,
}

/// Levenberg–Marquardt with a forward-difference Jacobian (relative step
/// 1e-7). `residuals(θ, out)` fills `out` with the residual vector.
pub fn levenberg_marquardt<F>(
    mut residuals: F,
    start: &[f64],
    n_residuals: usize,
    max_iter: usize,
) -> Result<LeastSquaresFit>
where
    F: FnMut(&[f64], &mut [f64]),
{
    const REL_STEP: f64 = 1e-7;
    const STEP_TOL: f64 = 1e-8;
    const COST_TOL: f64 = 1e-12;

    let p = start.len();
    let mut theta = start.to_vec();
    let mut r = vec![0.0; n_residuals];
    residuals(&theta, &mut r);
    let mut cost = 0.5 * r.iter().map(|v| v * v).sum::<f64>();
    let mut lambda = 1e-3;
    let mut scratch = vec![0.0; n_residuals];

    for iter in 0..max_iter {
        // forward-difference Jacobian
        let mut jac = DMatrix::<f64>::zeros(n_residuals, p);
        for j in 0..p {
            let h = REL_STEP * theta[j].abs().max(1.0);
            let mut shifted = theta.clone();
            shifted[j] += h;
            residuals(&shifted, &mut scratch);
            for i in 0..n_residuals {
                jac[(i, j)] = (scratch[i] - r[i]) / h;
            }
        }
        let r_vec = DVector::from_column_slice(&r);
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * &r_vec;

        let mut accepted = false;
        for _ in 0..25 {
            let mut damped = jtj.clone();
            for j in 0..p {
                let d = jtj[(j, j)].max(1e-300);
                damped[(j, j)] = jtj[(j, j)] + lambda * d;
            }
            let step = match damped.lu().solve(&(-&jtr)) {
                Some(s) => s,
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let candidate: Vec<f64> = theta.iter().zip(step.iter()).map(|(t, s)| t + s).collect();
            residuals(&candidate, &mut scratch);
            let new_cost = 0.5 * scratch.iter().map(|v| v * v).sum::<f64>();
            if new_cost.is_finite() && new_cost <= cost {
                let rel_step = theta
                    .iter()
                    .zip(step.iter())
                    .map(|(t, s)| s.abs() / t.abs().max(1.0))
                    .fold(0.0_f64, f64::max);
                let rel_cost_change = (cost - new_cost) / cost.max(1e-300);
                theta = candidate;
                r.copy_from_slice(&scratch);
                cost = new_cost;
                lambda = (lambda * 0.1).max(1e-14);
                accepted = true;
                if rel_step < STEP_TOL || rel_cost_change < COST_TOL {
                    return Ok(LeastSquaresFit {
                        params: theta,
                        cost,
                        iterations: iter + 1,
                    });
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // no downhill step found at any damping: local optimum
            return Ok(LeastSquaresFit {
                params: theta,
                cost,
                iterations: iter + 1,
            });
        }
    }
    Err(Error::FitDidNotConverge {
        iterations: max_iter,
    })
}
