//! The linear step: Beurling LASSO on the Born operator, solved by sliding Frank-Wolfe.
//!
//! The objective is `½‖Φ^b μ − y‖² + λ |μ|(𝒳)`. The certificate is
//! `η(x) = Σ_k r_k conj(c_k(x))` with `c_k(x) = κ²/(4π√m) e^{−iω_k·x}`, so that
//! `Σ_k conj(r_k) (Φ^b μ)_k = Σ_i a_i conj(η(x_i))` for every discrete `μ`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use num_traits::{Float, Zero};

use crate::geometry::{BoxDomain, Dim, Point};
use crate::optimize::{minimize, DescentOptions};
use crate::sampling::{norm2, MeasurementPlan};
use crate::scatter::{apply_born_at, cis, raw_sample_scale};
pub use crate::scatter::{Atom, DiscreteMeasure};
use crate::{Error, Result};

/// Smallest modulus kept during sliding.
pub const AMPLITUDE_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct SfwOptions {
    pub lambda_b: f64,
    /// Stopping tolerance: stop once `max |η| ≤ λ(1 + ε)`.
    pub epsilon: f64,
    /// Atom-finding grid size per axis; by default spacing `min(side/64, π/(8κ))`.
    pub grid_points_per_axis: Option<usize>,
    pub max_outer_iters: usize,
    pub lasso_tol: f64,
    pub lasso_max_iters: usize,
    pub slide_tol: f64,
    pub slide_max_iters: usize,
    /// Default `1e-8 ‖y‖`.
    pub prune_threshold: Option<f64>,
    /// Default `1e-2 side / max(1, κ)`.
    pub merge_radius: Option<f64>,
    /// Number of grid local maxima refined by ascent.
    pub ascent_starts: usize,
}

impl SfwOptions {
    pub fn new(lambda_b: f64) -> Self {
        SfwOptions {
            lambda_b,
            epsilon: 1e-2,
            grid_points_per_axis: None,
            max_outer_iters: 100,
            lasso_tol: 1e-13,
            lasso_max_iters: 20_000,
            slide_tol: 1e-8,
            slide_max_iters: 500,
            prune_threshold: None,
            merge_radius: None,
            ascent_starts: 5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !pos(self.lambda_b) || !pos(self.epsilon) || !pos(self.lasso_tol) || !pos(self.slide_tol) {
            return Err(Error::invalid("lambda_b, epsilon and tolerances must be positive"));
        }
        if self.max_outer_iters == 0 || self.lasso_max_iters == 0 || self.slide_max_iters == 0 || self.ascent_starts == 0 {
            return Err(Error::invalid("iteration counts must be positive"));
        }
        if self.grid_points_per_axis == Some(0) {
            return Err(Error::invalid("grid_points_per_axis must be positive"));
        }
        for v in [self.prune_threshold, self.merge_radius].into_iter().flatten() {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid("prune threshold and merge radius must be nonnegative"));
            }
        }
        Ok(())
    }

    fn grid_size(&self, domain: &BoxDomain, kappa: f64) -> usize {
        self.grid_points_per_axis.unwrap_or_else(|| {
            let h = (domain.side / 64.0).min(PI / (8.0 * kappa));
            (domain.side / h).ceil() as usize
        })
    }

    fn merge_radius_for(&self, domain: &BoxDomain, kappa: f64) -> f64 {
        self.merge_radius.unwrap_or(1e-2 * domain.side / kappa.max(1.0))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SfwRecord {
    pub objective: f64,
    /// `|η|` at the atom found in this iteration.
    pub eta_max: f64,
    pub atoms: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SfwTrace {
    pub records: Vec<SfwRecord>,
    /// The certificate test fired (as opposed to the iteration cap).
    pub converged: bool,
    /// Some weight update hit its iteration cap.
    pub lasso_capped: bool,
}

/// `½‖Φ^b μ − y‖² + λ |μ|(𝒳)`.
pub fn objective(measure: &DiscreteMeasure, plan: &MeasurementPlan, y: &[Complex64], lambda: f64) -> f64 {
    objective_parts(&measure.amplitudes(), &measure.locations(), plan, y, lambda)
}

fn objective_parts(amps: &[Complex64], locs: &[Point], plan: &MeasurementPlan, y: &[Complex64], lambda: f64) -> f64 {
    let r: Vec<Complex64> = apply_born_at(amps, locs, plan).iter().zip(y).map(|(a, b)| a - b).collect();
    let n = norm2(&r);
    0.5 * n * n + lambda * amps.iter().map(|a| a.norm()).sum::<f64>()
}

/// `y − Φ^b μ`.
pub fn residual(measure: &DiscreteMeasure, plan: &MeasurementPlan, y: &[Complex64]) -> Vec<Complex64> {
    apply_born_operator_residual(&measure.amplitudes(), &measure.locations(), plan, y)
}

fn apply_born_operator_residual(amps: &[Complex64], locs: &[Point], plan: &MeasurementPlan, y: &[Complex64]) -> Vec<Complex64> {
    apply_born_at(amps, locs, plan).iter().zip(y).map(|(a, b)| b - a).collect()
}

/// Column `c(x)` of the Born operator.
fn column(plan: &MeasurementPlan, x: &Point) -> Vec<Complex64> {
    let c = raw_sample_scale(plan.kappa(), plan.m());
    plan.frequencies().iter().map(|w| cis(-w.dot(x)) * c).collect()
}

/// `η(x) = (Φ^b)* r` evaluated at `x`.
pub fn certificate_eval(plan: &MeasurementPlan, residual: &[Complex64], x: &Point) -> Complex64 {
    let c = raw_sample_scale(plan.kappa(), plan.m());
    let s: Complex64 = plan
        .frequencies()
        .iter()
        .zip(residual)
        .map(|(w, r)| r * cis(w.dot(x)))
        .sum();
    s * c
}

/// `η(x)` and its gradient (one complex number per coordinate).
fn certificate_with_gradient(plan: &MeasurementPlan, residual: &[Complex64], x: &Point) -> (Complex64, [Complex64; 3]) {
    let c = raw_sample_scale(plan.kappa(), plan.m());
    let mut eta = Complex64::zero();
    let mut grad = [Complex64::zero(); 3];
    for (w, r) in plan.frequencies().iter().zip(residual) {
        let t = r * cis(w.dot(x));
        eta += t;
        for d in 0..3 {
            grad[d] += t * Complex64::new(0.0, w.0[d]);
        }
    }
    (eta * c, grad.map(|g| g * c))
}

/// `|η|` on the cell-centred grid with `n` nodes per axis (lexicographic order, as
/// [`BoxDomain::grid`]).
pub fn certificate_on_grid(plan: &MeasurementPlan, residual: &[Complex64], domain: &BoxDomain, n: usize) -> Vec<f64> {
    let c = raw_sample_scale(plan.kappa(), plan.m());
    let h = domain.side / n as f64;
    let axis: Vec<f64> = (0..n).map(|i| -domain.half() + h * (i as f64 + 0.5)).collect();
    let d = domain.dim.get();
    // tables[a][k * n + i] = e^{iω_k[a] g_i}
    let tables: Vec<Vec<Complex64>> = (0..d)
        .map(|a| {
            plan.frequencies()
                .iter()
                .flat_map(|w| axis.iter().map(move |g| cis(w.0[a] * g)))
                .collect()
        })
        .collect();
    let m = plan.m();
    let mut out = Vec::with_capacity(n.pow(d as u32));
    let mut v = vec![Complex64::zero(); m];
    match domain.dim {
        Dim::Two => {
            for i in 0..n {
                for k in 0..m {
                    v[k] = residual[k] * tables[0][k * n + i];
                }
                for j in 0..n {
                    let s: Complex64 = (0..m).map(|k| v[k] * tables[1][k * n + j]).sum();
                    out.push((s * c).norm());
                }
            }
        }
        Dim::Three => {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..m {
                        v[k] = residual[k] * tables[0][k * n + i] * tables[1][k * n + j];
                    }
                    for l in 0..n {
                        let s: Complex64 = (0..m).map(|k| v[k] * tables[2][k * n + l]).sum();
                        out.push((s * c).norm());
                    }
                }
            }
        }
    }
    out
}

/// Indices of grid nodes that are not beaten by any axis neighbour, best first.
fn grid_local_maxima(values: &[f64], n: usize, dim: Dim, count: usize) -> Vec<usize> {
    let d = dim.get();
    let strides: Vec<usize> = (0..d).map(|a| n.pow((d - 1 - a) as u32)).collect();
    let mut peaks: Vec<usize> = (0..values.len())
        .filter(|&idx| {
            (0..d).all(|a| {
                let coord = (idx / strides[a]) % n;
                let left = coord > 0 && values[idx - strides[a]] > values[idx];
                let right = coord + 1 < n && values[idx + strides[a]] > values[idx];
                !left && !right
            })
        })
        .collect();
    peaks.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    peaks.truncate(count);
    peaks
}

fn domain_bounds(domain: &BoxDomain) -> (Vec<f64>, Vec<f64>) {
    let h = domain.half() * (1.0 - 1e-9);
    let d = domain.dim.get();
    (vec![-h; d], vec![h; d])
}

/// Approximate maximizer of `|η|` over the domain and the value there.
pub fn find_new_atom_with_value(
    plan: &MeasurementPlan,
    residual: &[Complex64],
    domain: &BoxDomain,
    opts: &SfwOptions,
) -> (Point, f64) {
    let n = opts.grid_size(domain, plan.kappa());
    let values = certificate_on_grid(plan, residual, domain, n);
    let nodes = domain.grid(n);
    let starts = grid_local_maxima(&values, n, domain.dim, opts.ascent_starts);
    let d = domain.dim.get();
    let first = starts.first().copied().unwrap_or(0);
    let mut best = (nodes[first], values[first]);
    let scale = values[first] * values[first];
    if !(scale > 0.0) {
        return best;
    }
    let (lo, hi) = domain_bounds(domain);
    for idx in starts {
        let f = |v: &[f64]| {
            let mut p = Point::ORIGIN;
            p.0[..d].copy_from_slice(v);
            let (eta, g) = certificate_with_gradient(plan, residual, &p);
            // minimize −|η|²
            let grad: Vec<f64> = (0..d).map(|a| -2.0 * (eta.conj() * g[a]).re / scale).collect();
            Some((-eta.norm_sqr() / scale, grad))
        };
        let x0 = nodes[idx].coords(domain.dim).to_vec();
        if let Some(r) = minimize(f, &x0, &lo, &hi, DescentOptions { grad_tol: opts.slide_tol, max_iters: opts.slide_max_iters }) {
            let mut p = Point::ORIGIN;
            p.0[..d].copy_from_slice(&r.x);
            let val = certificate_eval(plan, residual, &p).norm();
            if val > best.1 {
                best = (p, val);
            }
        }
    }
    best
}

/// Approximate maximizer of `|η|`: grid search, then ascent from the best grid peaks.
pub fn find_new_atom(plan: &MeasurementPlan, residual: &[Complex64], domain: &BoxDomain, opts: &SfwOptions) -> Point {
    find_new_atom_with_value(plan, residual, domain, opts).0
}

/// Complex soft-threshold `z max(0, 1 − t/|z|)`.
#[inline]
pub fn soft_threshold(z: Complex64, t: f64) -> Complex64 {
    let n = z.norm();
    if n <= t {
        Complex64::zero()
    } else {
        z * (1.0 - t / n)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LassoResult {
    pub amplitudes: Vec<Complex64>,
    pub iterations: usize,
    /// The iteration cap was reached before the tolerance.
    pub capped: bool,
}

/// Amplitudes minimizing `½‖Φ^b_x a − y‖² + λ‖a‖₁` on a fixed support.
pub fn lasso_weights(plan: &MeasurementPlan, locations: &[Point], y: &[Complex64], lambda: f64, opts: &SfwOptions) -> LassoResult {
    let start = vec![Complex64::zero(); locations.len()];
    lasso_from(plan, locations, y, lambda, &start, opts.lasso_tol, opts.lasso_max_iters)
}

/// Accelerated proximal gradient with adaptive restart, warm-started at `start`. Returns the
/// best iterate seen, so the objective never exceeds its value at `start`.
fn lasso_from(
    plan: &MeasurementPlan,
    locations: &[Point],
    y: &[Complex64],
    lambda: f64,
    start: &[Complex64],
    tol: f64,
    max_iters: usize,
) -> LassoResult {
    let s = locations.len();
    let cols: Vec<Vec<Complex64>> = locations.iter().map(|x| column(plan, x)).collect();
    let inner = |u: &[Complex64], v: &[Complex64]| -> Complex64 { u.iter().zip(v).map(|(a, b)| a.conj() * b).sum() };
    let mut gram = vec![Complex64::zero(); s * s];
    for i in 0..s {
        for j in 0..s {
            gram[i * s + j] = inner(&cols[i], &cols[j]);
        }
    }
    let b: Vec<Complex64> = cols.iter().map(|c| inner(c, y)).collect();
    let yy = norm2(y).powi(2);
    let obj = |a: &[Complex64]| -> f64 {
        let mut quad = 0.0;
        for i in 0..s {
            let gi: Complex64 = (0..s).map(|j| gram[i * s + j] * a[j]).sum();
            quad += (a[i].conj() * gi).re;
        }
        let lin: f64 = (0..s).map(|i| (b[i].conj() * a[i]).re).sum();
        (0.5 * quad - lin + 0.5 * yy).max(0.0) + lambda * a.iter().map(|z| z.norm()).sum::<f64>()
    };
    let gersh = (0..s).map(|i| (0..s).map(|j| gram[i * s + j].norm()).sum::<f64>()).fold(0.0, f64::max);
    let frob = gram.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let lip = gersh.min(frob);
    let mut x = start.to_vec();
    let mut fx = obj(&x);
    let mut best = (fx, x.clone());
    if !(lip > 0.0) || s == 0 {
        return LassoResult { amplitudes: x, iterations: 0, capped: false };
    }
    let mut z = x.clone();
    let mut t = 1.0;
    for it in 0..max_iters {
        let xn: Vec<Complex64> = (0..s)
            .map(|i| {
                let g: Complex64 = (0..s).map(|j| gram[i * s + j] * z[j]).sum::<Complex64>() - b[i];
                soft_threshold(z[i] - g / lip, lambda / lip)
            })
            .collect();
        let fnew = obj(&xn);
        if fnew > fx && t > 1.0 {
            // Restart from the last iterate.
            z = x.clone();
            t = 1.0;
            continue;
        }
        let tn = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        z = (0..s).map(|i| xn[i] + (xn[i] - x[i]) * ((t - 1.0) / tn)).collect();
        t = tn;
        let change = (fx - fnew).abs();
        x = xn;
        fx = fnew;
        if fx < best.0 {
            best = (fx, x.clone());
        }
        if change <= tol * fx.abs().max(f64::MIN_POSITIVE) {
            return LassoResult { amplitudes: best.1, iterations: it + 1, capped: false };
        }
    }
    LassoResult { amplitudes: best.1, iterations: max_iters, capped: true }
}

/// Joint local descent of amplitudes and positions with `a_i = m_i e^{iφ_i}`,
/// `m_i ≥` [`AMPLITUDE_FLOOR`]. Returns the input when no decrease is found.
pub fn slide_linear(
    amplitudes: &[Complex64],
    locations: &[Point],
    plan: &MeasurementPlan,
    y: &[Complex64],
    lambda: f64,
    domain: &BoxDomain,
    opts: &SfwOptions,
) -> (Vec<Complex64>, Vec<Point>) {
    let s = amplitudes.len();
    let d = domain.dim.get();
    let per = 2 + d;
    let scale = {
        let n = norm2(y);
        if n > 0.0 { 0.5 * n * n } else { 1.0 }
    };
    let unpack = |v: &[f64]| -> (Vec<Complex64>, Vec<Point>) {
        let mut a = Vec::with_capacity(s);
        let mut x = Vec::with_capacity(s);
        for i in 0..s {
            let p = &v[i * per..(i + 1) * per];
            a.push(Complex64::from_polar(p[0], p[1]));
            let mut q = Point::ORIGIN;
            q.0[..d].copy_from_slice(&p[2..]);
            x.push(q);
        }
        (a, x)
    };
    let mut x0 = Vec::with_capacity(s * per);
    let (mut lo, mut hi) = (Vec::new(), Vec::new());
    let (blo, bhi) = domain_bounds(domain);
    for (a, x) in amplitudes.iter().zip(locations) {
        x0.push(a.norm());
        x0.push(a.arg());
        x0.extend_from_slice(x.coords(domain.dim));
        lo.extend([AMPLITUDE_FLOOR, f64::NEG_INFINITY]);
        hi.extend([f64::INFINITY, f64::INFINITY]);
        lo.extend_from_slice(&blo);
        hi.extend_from_slice(&bhi);
    }
    let f = |v: &[f64]| {
        let (a, x) = unpack(v);
        let cols: Vec<Vec<Complex64>> = x.iter().map(|p| column(plan, p)).collect();
        let mut res: Vec<Complex64> = y.iter().map(|v| -v).collect();
        for (ai, col) in a.iter().zip(&cols) {
            for (r, ck) in res.iter_mut().zip(col) {
                *r += ai * ck;
            }
        }
        let rn = norm2(&res);
        let val = 0.5 * rn * rn + lambda * (0..s).map(|i| v[i * per]).sum::<f64>();
        let mut grad = vec![0.0; v.len()];
        for i in 0..s {
            let e = cis(v[i * per + 1]);
            let m = v[i * per];
            let g: Complex64 = cols[i].iter().zip(&res).map(|(ck, r)| ck.conj() * r).sum();
            grad[i * per] = (g.conj() * e).re + lambda;
            grad[i * per + 1] = -m * (g.conj() * e).im;
            for a_ in 0..d {
                let t: Complex64 = res
                    .iter()
                    .zip(&cols[i])
                    .zip(plan.frequencies())
                    .map(|((r, ck), w)| r.conj() * ck * Complex64::new(0.0, -w.0[a_]))
                    .sum();
                grad[i * per + 2 + a_] = (a[i] * t).re;
            }
        }
        Some((val / scale, grad.into_iter().map(|g| g / scale).collect()))
    };
    let start_value = objective_parts(amplitudes, locations, plan, y, lambda);
    match minimize(f, &x0, &lo, &hi, DescentOptions { grad_tol: opts.slide_tol, max_iters: opts.slide_max_iters }) {
        Some(r) => {
            let (a, x) = unpack(&r.x);
            if objective_parts(&a, &x, plan, y, lambda) <= start_value {
                (a, x)
            } else {
                (amplitudes.to_vec(), locations.to_vec())
            }
        }
        None => (amplitudes.to_vec(), locations.to_vec()),
    }
}

/// Merges atoms closer than `merge_radius` (single linkage; amplitudes summed, location
/// the modulus-weighted centroid), then drops atoms with `|a| ≤ prune_threshold`.
pub fn prune_and_merge(measure: &DiscreteMeasure, prune_threshold: f64, merge_radius: f64) -> DiscreteMeasure {
    let n = measure.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in 0..i {
            if measure.atoms[i].location.dist(&measure.atoms[j].location) <= merge_radius {
                let (ri, rj) = (root(&mut parent, i), root(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut atoms = Vec::new();
    for r in 0..n {
        if root(&mut parent, r) != r {
            continue;
        }
        let members: Vec<&Atom> = (0..n)
            .filter(|&i| root(&mut parent, i) == r)
            .map(|i| &measure.atoms[i])
            .collect();
        let amplitude: Complex64 = members.iter().map(|a| a.amplitude).sum();
        let w: f64 = members.iter().map(|a| a.amplitude.norm()).sum();
        let location = if members.len() == 1 {
            members[0].location
        } else if w > 0.0 {
            members.iter().fold(Point::ORIGIN, |acc, a| acc + a.location * (a.amplitude.norm() / w))
        } else {
            members.iter().fold(Point::ORIGIN, |acc, a| acc + a.location) * (1.0 / members.len() as f64)
        };
        if amplitude.norm() > prune_threshold {
            atoms.push(Atom { amplitude, location });
        }
    }
    DiscreteMeasure { dim: measure.dim, atoms }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SfwOutput {
    pub measure: DiscreteMeasure,
    pub trace: SfwTrace,
}

/// Sliding Frank-Wolfe for the BLASSO: certificate, new atom, weights update, linear
/// slide, prune and merge, until `max |η| ≤ λ(1 + ε)` or the iteration cap.
pub fn sfw_solve(plan: &MeasurementPlan, y: &[Complex64], domain: &BoxDomain, opts: &SfwOptions) -> Result<SfwOutput> {
    opts.validate()?;
    if y.len() != plan.m() {
        return Err(Error::invalid("observation length differs from the plan size"));
    }
    if domain.dim != plan.dim() {
        return Err(Error::invalid("domain and plan dimensions differ"));
    }
    let lambda = opts.lambda_b;
    let prune = opts.prune_threshold.unwrap_or(1e-8 * norm2(y));
    let merge = opts.merge_radius_for(domain, plan.kappa());
    let mut amps: Vec<Complex64> = Vec::new();
    let mut locs: Vec<Point> = Vec::new();
    let mut value = objective_parts(&amps, &locs, plan, y, lambda);
    let mut trace = SfwTrace::default();
    for _ in 0..opts.max_outer_iters {
        let res = apply_born_operator_residual(&amps, &locs, plan, y);
        let (x_new, eta) = find_new_atom_with_value(plan, &res, domain, opts);
        if eta <= lambda * (1.0 + opts.epsilon) {
            trace.records.push(SfwRecord { objective: value, eta_max: eta, atoms: amps.len() });
            trace.converged = true;
            break;
        }
        let mut cand_locs = locs.clone();
        cand_locs.push(x_new);
        let mut start = amps.clone();
        start.push(Complex64::zero());
        let lasso = lasso_from(plan, &cand_locs, y, lambda, &start, opts.lasso_tol, opts.lasso_max_iters);
        trace.lasso_capped |= lasso.capped;
        let (mut a, mut x): (Vec<Complex64>, Vec<Point>) = lasso
            .amplitudes
            .iter()
            .zip(&cand_locs)
            .filter(|(a, _)| !a.is_zero())
            .map(|(a, x)| (*a, *x))
            .unzip();
        let mut v = objective_parts(&a, &x, plan, y, lambda);
        if !a.is_empty() {
            let (sa, sx) = slide_linear(&a, &x, plan, y, lambda, domain, opts);
            let sv = objective_parts(&sa, &sx, plan, y, lambda);
            if sv <= v {
                a = sa;
                x = sx;
                v = sv;
            }
        }
        let merged = prune_and_merge(&DiscreteMeasure::from_parts(domain.dim, &a, &x), prune, merge);
        let mv = objective(&merged, plan, y, lambda);
        if mv <= v {
            a = merged.amplitudes();
            x = merged.locations();
            v = mv;
        }
        if v <= value {
            amps = a;
            locs = x;
            value = v;
        }
        trace.records.push(SfwRecord { objective: value, eta_max: eta, atoms: amps.len() });
    }
    Ok(SfwOutput {
        measure: DiscreteMeasure::from_parts(domain.dim, &amps, &locs),
        trace,
    })
}
