//! The nonlinear step: local descent of `J^f(a, x) = ½‖Φ^f_x a − y‖² + λ‖a‖₁`.
//!
//! Gradients go through the Foldy system by the adjoint method. With `A = Id − κ²T`,
//! `A u = u_in` and `F = vᵀu`, `v_i = κ²/(4π√m) a_i e^{−iκx̂·x_i}`, one transposed solve
//! `Aᵀz = v` per direction gives all derivatives.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::Float;

use crate::blasso::{prune_and_merge, sfw_solve, DiscreteMeasure, SfwOptions, SfwTrace};
use crate::geometry::{BoxDomain, Dim, Point};
use crate::linalg::{CMatrix, Lu};
use crate::optimize::{minimize_until, DescentOptions, DescentResult};
use crate::sampling::{norm2, MeasurementPlan};
use crate::scatter::{apply_foldy_at, cis, green_with_derivative, raw_sample_scale};
use crate::{Error, Result};

/// Smoothing of the modulus in `√(re² + im² + δ²)` during descent.
pub const L1_SMOOTHING: f64 = 1e-12;
/// Initial amplitude of every atom in [`grid_initialization`].
pub const GRID_INIT_AMPLITUDE: f64 = 1e-2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RefineOptions {
    pub lambda_f: f64,
    pub grad_tol: f64,
    pub max_iters: usize,
    /// Atoms with modulus at or below this are removed at exit.
    pub amplitude_floor: f64,
    /// Atoms closer than this are merged during descent; `None` uses the linear step's
    /// default merge radius.
    pub collision_radius: Option<f64>,
}

impl RefineOptions {
    pub fn new(lambda_f: f64) -> Self {
        RefineOptions {
            lambda_f,
            grad_tol: 1e-8,
            max_iters: 1000,
            amplitude_floor: 1e-4,
            collision_radius: None,
        }
    }

    pub fn collision_radius_for(&self, domain: &BoxDomain, kappa: f64) -> f64 {
        self.collision_radius.unwrap_or(1e-2 * domain.side / kappa.max(1.0))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_f >= 0.0 && self.lambda_f.is_finite()) {
            return Err(Error::invalid("lambda_f must be nonnegative"));
        }
        if !(self.grad_tol > 0.0) || self.max_iters == 0 || !(self.amplitude_floor >= 0.0) || self.collision_radius.is_some_and(|r| !(r >= 0.0)) {
            return Err(Error::invalid("refine tolerances must be positive"));
        }
        Ok(())
    }
}

/// Gradient of `J^f`: per atom, `(∂/∂Re a, ∂/∂Im a)` and the position gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct FoldyGradient {
    pub amplitude: Vec<[f64; 2]>,
    pub position: Vec<Point>,
}

/// `½‖Φ^f_x a − y‖² + λ‖a‖₁`.
pub fn objective_foldy(
    amplitudes: &[Complex64],
    locations: &[Point],
    plan: &MeasurementPlan,
    y: &[Complex64],
    lambda_f: f64,
) -> Result<f64> {
    let f = apply_foldy_at(plan.dim(), amplitudes, locations, plan)?;
    let r: Vec<Complex64> = f.iter().zip(y).map(|(a, b)| a - b).collect();
    let n = norm2(&r);
    Ok(0.5 * n * n + lambda_f * amplitudes.iter().map(|a| a.norm()).sum::<f64>())
}

struct Evaluation {
    data: f64,
    /// `∂(½‖r‖²)/∂a_j` as the complex number `∂/∂Re + i ∂/∂Im`.
    amp_grad: Vec<Complex64>,
    pos_grad: Vec<Point>,
}

/// Data term and its gradient; fails on a singular Foldy system.
fn evaluate(dim: Dim, amps: &[Complex64], locs: &[Point], plan: &MeasurementPlan, y: &[Complex64]) -> Result<Evaluation> {
    let s = amps.len();
    let kappa = plan.kappa();
    let k2 = kappa * kappa;
    let scale = raw_sample_scale(kappa, plan.m());
    let mut green = CMatrix::zeros(s);
    let mut dgreen = CMatrix::zeros(s);
    let mut system = CMatrix::identity(s);
    for i in 0..s {
        for j in 0..i {
            let t = locs[i].dist(&locs[j]);
            if !(t > 0.0) {
                return Err(Error::invalid("two atoms share a location"));
            }
            let (g, dg) = green_with_derivative(t, kappa, dim);
            green[(i, j)] = g;
            green[(j, i)] = g;
            dgreen[(i, j)] = dg / t;
            dgreen[(j, i)] = dg / t;
            system[(i, j)] = -k2 * g * amps[j];
            system[(j, i)] = -k2 * g * amps[i];
        }
    }
    let lu = Lu::factor(&system)?;
    let mut data = 0.0;
    let mut amp_grad = vec![Complex64::new(0.0, 0.0); s];
    let mut pos_grad = vec![Point::ORIGIN; s];
    let i_unit = Complex64::new(0.0, 1.0);
    for (pair, yk) in plan.pairs().iter().zip(y) {
        let b: Vec<Complex64> = locs.iter().map(|x| cis(kappa * pair.incident.dot(x))).collect();
        let w: Vec<Complex64> = locs.iter().map(|x| cis(-kappa * pair.observation.dot(x))).collect();
        let u = lu.solve(&b);
        let v: Vec<Complex64> = (0..s).map(|i| amps[i] * w[i] * scale).collect();
        let f: Complex64 = v.iter().zip(&u).map(|(a, b)| a * b).sum();
        let r = f - yk;
        data += 0.5 * r.norm_sqr();
        let z = lu.solve_transpose(&v);
        let rc = r.conj();
        for j in 0..s {
            // ∂F/∂a_j
            let mut zg = Complex64::new(0.0, 0.0);
            for i in 0..s {
                if i != j {
                    zg += z[i] * green[(i, j)];
                }
            }
            let h = scale * w[j] * u[j] + k2 * u[j] * zg;
            let rh = rc * h;
            amp_grad[j] += Complex64::new(rh.re, -rh.im);
            // ∂F/∂x_j
            let own_out = scale * amps[j] * w[j] * u[j];
            let own_in = z[j] * b[j];
            let mut grad = Point::ORIGIN;
            for a in 0..dim.get() {
                let mut dfa = own_out * (-i_unit * kappa * pair.observation.0[a]) + own_in * (i_unit * kappa * pair.incident.0[a]);
                for l in 0..s {
                    if l == j {
                        continue;
                    }
                    let dir = locs[j].0[a] - locs[l].0[a];
                    dfa += k2 * dgreen[(j, l)] * dir * (z[j] * amps[l] * u[l] + z[l] * amps[j] * u[j]);
                }
                grad.0[a] = (rc * dfa).re;
            }
            pos_grad[j] = pos_grad[j] + grad;
        }
    }
    Ok(Evaluation { data, amp_grad, pos_grad })
}

/// Exact gradient of [`objective_foldy`] (all amplitudes must be nonzero).
pub fn gradient_foldy(
    amplitudes: &[Complex64],
    locations: &[Point],
    plan: &MeasurementPlan,
    y: &[Complex64],
    lambda_f: f64,
) -> Result<FoldyGradient> {
    if amplitudes.iter().any(|a| a.norm() == 0.0) {
        return Err(Error::invalid("the l1 term is not differentiable at a zero amplitude"));
    }
    let e = evaluate(plan.dim(), amplitudes, locations, plan, y)?;
    Ok(FoldyGradient {
        amplitude: e
            .amp_grad
            .iter()
            .zip(amplitudes)
            .map(|(g, a)| {
                let u = a / a.norm();
                [g.re + lambda_f * u.re, g.im + lambda_f * u.im]
            })
            .collect(),
        position: e.pos_grad,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RefineReport {
    pub initial_objective: f64,
    pub final_objective: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    /// The gradient tolerance was met.
    pub converged: bool,
    /// Descent failed or did not improve; the input was returned.
    pub unchanged: bool,
    /// Atoms absorbed by collision merges.
    pub merged_atoms: usize,
    /// Atoms removed by the amplitude floor.
    pub removed_atoms: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefineOutput {
    pub measure: DiscreteMeasure,
    pub report: RefineReport,
}

fn domain_bounds(domain: &BoxDomain) -> (Vec<f64>, Vec<f64>) {
    let h = domain.half() * (1.0 - 1e-9);
    (vec![-h; domain.dim.get()], vec![h; domain.dim.get()])
}

/// One quasi-Newton run on the smoothed objective (scaled by `1/norm`).
fn descend(
    measure: &DiscreteMeasure,
    plan: &MeasurementPlan,
    y: &[Complex64],
    domain: &BoxDomain,
    opts: &RefineOptions,
    norm: f64,
    collision: f64,
) -> Option<(DiscreteMeasure, DescentResult)> {
    let dim = measure.dim;
    let d = dim.get();
    let per = 2 + d;
    let s = measure.len();
    let lambda = opts.lambda_f;
    let unpack = |v: &[f64]| -> (Vec<Complex64>, Vec<Point>) {
        (0..s)
            .map(|i| {
                let p = &v[i * per..(i + 1) * per];
                let mut q = Point::ORIGIN;
                q.0[..d].copy_from_slice(&p[2..]);
                (Complex64::new(p[0], p[1]), q)
            })
            .unzip()
    };
    let mut x0 = Vec::with_capacity(s * per);
    let (mut lo, mut hi) = (Vec::new(), Vec::new());
    let (blo, bhi) = domain_bounds(domain);
    for atom in &measure.atoms {
        x0.extend([atom.amplitude.re, atom.amplitude.im]);
        x0.extend_from_slice(atom.location.coords(dim));
        lo.extend([f64::NEG_INFINITY; 2]);
        hi.extend([f64::INFINITY; 2]);
        lo.extend_from_slice(&blo);
        hi.extend_from_slice(&bhi);
    }
    let f = |v: &[f64]| {
        let (a, x) = unpack(v);
        let e = evaluate(dim, &a, &x, plan, y).ok()?;
        let mut val = e.data;
        let mut grad = vec![0.0; v.len()];
        for i in 0..s {
            let smooth = (a[i].norm_sqr() + L1_SMOOTHING * L1_SMOOTHING).sqrt();
            val += lambda * smooth;
            grad[i * per] = (e.amp_grad[i].re + lambda * a[i].re / smooth) / norm;
            grad[i * per + 1] = (e.amp_grad[i].im + lambda * a[i].im / smooth) / norm;
            for c in 0..d {
                grad[i * per + 2 + c] = e.pos_grad[i].0[c] / norm;
            }
        }
        Some((val / norm, grad))
    };
    let collided = |v: &[f64]| {
        let (_, x) = unpack(v);
        (0..s).any(|i| (0..i).any(|j| x[i].dist(&x[j]) <= collision))
    };
    let r = minimize_until(f, collided, &x0, &lo, &hi, DescentOptions { grad_tol: opts.grad_tol, max_iters: opts.max_iters })?;
    let (a, x) = unpack(&r.x);
    Some((DiscreteMeasure::from_parts(dim, &a, &x), r))
}

/// Local descent of `J^f` from `measure`.
///
/// Atoms that collide (come within the collision radius) are merged and the descent is
/// restarted: near coincidence the interaction blows up and a tight pair can mimic a single
/// scatterer at a smaller `ℓ₁` cost, a configuration outside the model's validity. Atoms
/// whose modulus ends at or below the floor are removed. The output never has a larger
/// `J^f` than the input; when descent fails the input is returned, flagged `unchanged`.
pub fn refine_measure(
    measure: &DiscreteMeasure,
    plan: &MeasurementPlan,
    y: &[Complex64],
    domain: &BoxDomain,
    opts: &RefineOptions,
) -> Result<RefineOutput> {
    opts.validate()?;
    if measure.is_empty() {
        return Err(Error::invalid("refinement needs a nonempty measure"));
    }
    if y.len() != plan.m() || measure.dim != plan.dim() || domain.dim != plan.dim() {
        return Err(Error::invalid("measure, plan, domain and observations disagree"));
    }
    let lambda = opts.lambda_f;
    let initial = objective_foldy(&measure.amplitudes(), &measure.locations(), plan, y, lambda)?;
    let norm = {
        let n = norm2(y);
        if n > 0.0 { 0.5 * n * n } else { 1.0 }
    };
    let collision = opts.collision_radius_for(domain, plan.kappa());
    let unchanged = |iterations| RefineOutput {
        measure: measure.clone(),
        report: RefineReport {
            initial_objective: initial,
            final_objective: initial,
            iterations,
            grad_norm: f64::NAN,
            converged: false,
            unchanged: true,
            merged_atoms: 0,
            removed_atoms: 0,
        },
    };
    // Atoms already within the radius are merged first; every round then either ends
    // without a collision or removes at least one atom.
    let mut current = prune_and_merge(measure, 0.0, collision);
    let mut merged = measure.len() - current.len();
    let mut iterations = 0;
    let mut last = None;
    let mut collided = false;
    while !current.is_empty() {
        let Some((next, r)) = descend(&current, plan, y, domain, opts, norm, collision) else {
            break;
        };
        iterations += r.iterations;
        let joined = prune_and_merge(&next, 0.0, collision);
        collided = joined.len() < next.len();
        merged += next.len() - joined.len();
        current = joined;
        last = Some(r);
        if !collided {
            break;
        }
    }
    let Some(last) = last else {
        return Ok(unchanged(iterations));
    };
    let before_floor = current.len();
    current.atoms.retain(|a| a.amplitude.norm() > opts.amplitude_floor);
    let value = if current.is_empty() {
        0.5 * norm2(y).powi(2)
    } else {
        match objective_foldy(&current.amplitudes(), &current.locations(), plan, y, lambda) {
            Ok(v) => v,
            Err(_) => return Ok(unchanged(iterations)),
        }
    };
    if !(value <= initial) {
        return Ok(unchanged(iterations));
    }
    let removed = before_floor - current.len();
    Ok(RefineOutput {
        measure: current,
        report: RefineReport {
            initial_objective: initial,
            final_objective: value,
            iterations,
            grad_norm: last.grad_norm,
            // a merge in the last round leaves the descent unfinished
            converged: last.converged && !collided,
            unchanged: false,
            merged_atoms: merged,
            removed_atoms: removed,
        },
    })
}

/// Refinement started from atoms of amplitude [`GRID_INIT_AMPLITUDE`] on the cell-centred
/// grid with `grid_side` nodes per axis.
pub fn grid_initialization(
    plan: &MeasurementPlan,
    y: &[Complex64],
    grid_side: usize,
    domain: &BoxDomain,
    opts: &RefineOptions,
) -> Result<RefineOutput> {
    if grid_side < 2 {
        return Err(Error::invalid("grid_side must be at least 2"));
    }
    let nodes = domain.grid(grid_side);
    let amps = vec![Complex64::new(GRID_INIT_AMPLITUDE, 0.0); nodes.len()];
    refine_measure(&DiscreteMeasure::from_parts(domain.dim, &amps, &nodes), plan, y, domain, opts)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineOutput {
    pub linear: DiscreteMeasure,
    pub nonlinear: DiscreteMeasure,
    pub sfw_trace: SfwTrace,
    pub refine_report: Option<RefineReport>,
}

/// Linear step (sliding Frank-Wolfe on the Born model), then the nonlinear refinement
/// started from its output.
pub fn run_pipeline(
    plan: &MeasurementPlan,
    y: &[Complex64],
    domain: &BoxDomain,
    sfw_opts: &SfwOptions,
    refine_opts: &RefineOptions,
) -> Result<PipelineOutput> {
    refine_opts.validate()?;
    let lin = sfw_solve(plan, y, domain, sfw_opts)?;
    if lin.measure.is_empty() {
        return Ok(PipelineOutput {
            nonlinear: lin.measure.clone(),
            linear: lin.measure,
            sfw_trace: lin.trace,
            refine_report: None,
        });
    }
    let refined = refine_measure(&lin.measure, plan, y, domain, refine_opts)?;
    Ok(PipelineOutput {
        linear: lin.measure,
        nonlinear: refined.measure,
        sfw_trace: lin.trace,
        refine_report: Some(refined.report),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::build_plan;

    #[test]
    fn objective_trivial_values() {
        let plan = build_plan(10, 1.0, Dim::Two, 0).unwrap();
        let y: Vec<Complex64> = (0..10).map(|k| Complex64::new(k as f64, 1.0)).collect();
        let tiny = [Complex64::new(0.0, 0.0)];
        let v = objective_foldy(&tiny, &[Point::ORIGIN], &plan, &y, 0.5).unwrap();
        assert!((v - 0.5 * norm2(&y).powi(2)).abs() < 1e-12);
        let a = [Complex64::new(1.0, 1.0), Complex64::new(-0.5, 0.0)];
        let x = [Point::new2(0.0, 0.0), Point::new2(1.0, 1.0)];
        let clean = apply_foldy_at(Dim::Two, &a, &x, &plan).unwrap();
        let v = objective_foldy(&a, &x, &plan, &clean, 0.3).unwrap();
        assert!((v - 0.3 * (2f64.sqrt() + 0.5)).abs() < 1e-14);
    }
}
