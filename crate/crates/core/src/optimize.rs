//! Box-constrained quasi-Newton descent (projected BFGS with backtracking).

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

#[derive(Clone, Copy, Debug)]
pub(crate) struct DescentOptions {
    pub grad_tol: f64,
    pub max_iters: usize,
}

#[derive(Clone, Debug)]
pub(crate) struct DescentResult {
    pub x: Vec<f64>,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gradient components that can still move, zero where a bound blocks descent.
fn projected(x: &[f64], g: &[f64], lower: &[f64], upper: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(g)
        .zip(lower.iter().zip(upper))
        .map(|((&xi, &gi), (&lo, &hi))| {
            if (xi <= lo && gi > 0.0) || (xi >= hi && gi < 0.0) {
                0.0
            } else {
                gi
            }
        })
        .collect()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Minimizes `f` over the box `[lower, upper]` starting from `x0` (clamped into the box).
///
/// `f` returns the value and gradient, or `None` where it cannot be evaluated; such points
/// are rejected by the line search. The returned point never has a larger value than the
/// start.
pub(crate) fn minimize<F>(f: F, x0: &[f64], lower: &[f64], upper: &[f64], opts: DescentOptions) -> Option<DescentResult>
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    minimize_until(f, |_| false, x0, lower, upper, opts)
}

/// [`minimize`], stopping early (unconverged) once `halt` holds at an accepted iterate.
pub(crate) fn minimize_until<F, H>(
    mut f: F,
    mut halt: H,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: DescentOptions,
) -> Option<DescentResult>
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
    H: FnMut(&[f64]) -> bool,
{
    let n = x0.len();
    let clamp = |x: &mut [f64]| {
        for i in 0..n {
            x[i] = x[i].max(lower[i]).min(upper[i]);
        }
    };
    let mut x = x0.to_vec();
    clamp(&mut x);
    let (mut fx, mut g) = f(&x)?;
    let mut h = vec![0.0; n * n];
    let reset = |h: &mut [f64]| {
        h.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            h[i * n + i] = 1.0;
        }
    };
    reset(&mut h);
    let mut first = true;
    let mut iterations = 0;
    let mut pg = projected(&x, &g, lower, upper);
    while iterations < opts.max_iters {
        if inf_norm(&pg) <= opts.grad_tol {
            return Some(DescentResult {
                grad_norm: inf_norm(&pg),
                x,
                iterations,
                converged: true,
            });
        }
        iterations += 1;
        let free: Vec<bool> = (0..n).map(|i| pg[i] != 0.0 || g[i] == 0.0).collect();
        let mut d: Vec<f64> = (0..n)
            .map(|i| {
                if !free[i] {
                    return 0.0;
                }
                -(0..n).filter(|&j| free[j]).map(|j| h[i * n + j] * g[j]).sum::<f64>()
            })
            .collect();
        if !(dot(&d, &pg) < 0.0) {
            reset(&mut h);
            d = pg.iter().map(|v| -v).collect();
        }
        // First step: unit length in the sup norm.
        let mut t = if first { 1.0 / inf_norm(&d).max(1e-300) } else { 1.0 };
        first = false;
        let mut accepted = None;
        for _ in 0..60 {
            let mut xn: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            clamp(&mut xn);
            let step: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
            let slope = dot(&g, &step);
            if slope < 0.0 {
                if let Some((fnew, gnew)) = f(&xn) {
                    if fnew <= fx + 1e-4 * slope {
                        accepted = Some((xn, fnew, gnew, step));
                        break;
                    }
                }
            }
            t *= 0.5;
        }
        let Some((xn, fnew, gnew, s)) = accepted else {
            if h.iter().enumerate().all(|(k, v)| *v == if k % (n + 1) == 0 { 1.0 } else { 0.0 }) {
                break;
            }
            reset(&mut h);
            continue;
        };
        let yv: Vec<f64> = gnew.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yv);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&yv, &yv).sqrt() {
            // H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ
            let rho = 1.0 / sy;
            let hy: Vec<f64> = (0..n).map(|i| (0..n).map(|j| h[i * n + j] * yv[j]).sum()).collect();
            let yhy = dot(&yv, &hy);
            for i in 0..n {
                for j in 0..n {
                    h[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
        }
        let decrease = fx - fnew;
        x = xn;
        fx = fnew;
        g = gnew;
        pg = projected(&x, &g, lower, upper);
        if halt(&x) {
            return Some(DescentResult {
                grad_norm: inf_norm(&pg),
                x,
                iterations,
                converged: false,
            });
        }
        if decrease <= f64::EPSILON * fx.abs().max(1e-300) && inf_norm(&s) <= f64::EPSILON * inf_norm(&x).max(1.0) {
            break;
        }
    }
    Some(DescentResult {
        grad_norm: inf_norm(&pg),
        converged: inf_norm(&pg) <= opts.grad_tol,
        x,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> Option<(f64, Vec<f64>)> {
        let (a, b) = (x[0], x[1]);
        let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
        let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
        Some((f, g))
    }

    #[test]
    fn unconstrained_rosenbrock() {
        let inf = f64::INFINITY;
        let r = minimize(rosenbrock, &[-1.2, 1.0], &[-inf; 2], &[inf; 2], DescentOptions { grad_tol: 1e-8, max_iters: 500 }).unwrap();
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn active_bound() {
        // min (x - 2)² + (y + 1)² on [0, 1]²: solution (1, 0).
        let f = |x: &[f64]| Some(((x[0] - 2.0).powi(2) + (x[1] + 1.0).powi(2), vec![2.0 * (x[0] - 2.0), 2.0 * (x[1] + 1.0)]));
        let r = minimize(f, &[0.5, 0.5], &[0.0; 2], &[1.0; 2], DescentOptions { grad_tol: 1e-10, max_iters: 100 }).unwrap();
        assert!(r.converged);
        assert_eq!(r.x, vec![1.0, 0.0]);
    }
}
