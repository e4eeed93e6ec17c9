//! Forward models: Green functions, the Foldy-Lax system and the far-field operators.
//!
//! Every far-field quantity carries the factor `κ²/(4π)`, and the measurement operators
//! additionally carry `1/√m`. With this single convention the Born operator on a discrete
//! measure and the Born operator on a fixed support agree exactly.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use num_traits::{Float, Zero};

use crate::geometry::{BoxDomain, Dim, Point};
use crate::linalg::{CMatrix, Lu};
use crate::sampling::MeasurementPlan;
use crate::specialfn::{hankel1_01, EULER_GAMMA};
use crate::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `e^{iφ}`.
#[inline]
pub(crate) fn cis(phase: f64) -> Complex64 {
    let (s, c) = phase.sin_cos();
    Complex64::new(c, s)
}

/// `κ²/(4π)`, the far-field prefactor.
#[inline]
pub fn far_field_prefactor(kappa: f64) -> f64 {
    kappa * kappa / (4.0 * PI)
}

/// `κ²/(4π√m)`: the factor relating one raw far-field sample (with the prefactor removed)
/// to one entry of a measurement vector.
#[inline]
pub fn raw_sample_scale(kappa: f64, m: usize) -> f64 {
    far_field_prefactor(kappa) / (m as f64).sqrt()
}

/// A point scatterer (or an atom of an estimate): complex amplitude and location.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Atom {
    pub amplitude: Complex64,
    pub location: Point,
}

/// A finite sum of weighted Dirac masses.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure {
    pub dim: Dim,
    pub atoms: Vec<Atom>,
}

impl DiscreteMeasure {
    pub fn empty(dim: Dim) -> Self {
        DiscreteMeasure {
            dim,
            atoms: Vec::new(),
        }
    }

    pub fn from_parts(dim: Dim, amplitudes: &[Complex64], locations: &[Point]) -> Self {
        DiscreteMeasure {
            dim,
            atoms: amplitudes
                .iter()
                .zip(locations)
                .map(|(&amplitude, &location)| Atom {
                    amplitude,
                    location,
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn amplitudes(&self) -> Vec<Complex64> {
        self.atoms.iter().map(|a| a.amplitude).collect()
    }

    pub fn locations(&self) -> Vec<Point> {
        self.atoms.iter().map(|a| a.location).collect()
    }

    /// Total variation `Σ |a_i|`.
    pub fn total_variation(&self) -> f64 {
        self.atoms.iter().map(|a| a.amplitude.norm()).sum()
    }
}

/// Ground-truth scatterers: nonzero amplitudes at pairwise distinct locations.
#[derive(Clone, Debug, PartialEq)]
pub struct ScattererConfig {
    dim: Dim,
    amplitudes: Vec<Complex64>,
    locations: Vec<Point>,
}

impl ScattererConfig {
    pub fn new(dim: Dim, amplitudes: Vec<Complex64>, locations: Vec<Point>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::invalid("a configuration needs at least one scatterer"));
        }
        if amplitudes.len() != locations.len() {
            return Err(Error::invalid("amplitude and location counts differ"));
        }
        if amplitudes.iter().any(|a| !(a.norm() > 0.0) || !a.is_finite()) {
            return Err(Error::invalid("scatterer amplitudes must be nonzero and finite"));
        }
        for (i, p) in locations.iter().enumerate() {
            if !p.fits(dim) || p.0.iter().any(|c| !c.is_finite()) {
                return Err(Error::invalid(alloc::format!("location #{i} is not a finite point of R^{}", dim.get())));
            }
            if locations[..i].iter().any(|q| q == p) {
                return Err(Error::invalid(alloc::format!("location #{i} repeats an earlier location")));
            }
        }
        Ok(ScattererConfig {
            dim,
            amplitudes,
            locations,
        })
    }

    pub fn from_measure(measure: &DiscreteMeasure) -> Result<Self> {
        Self::new(measure.dim, measure.amplitudes(), measure.locations())
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn locations(&self) -> &[Point] {
        &self.locations
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn to_measure(&self) -> DiscreteMeasure {
        DiscreteMeasure::from_parts(self.dim, &self.amplitudes, &self.locations)
    }

    /// Smallest pairwise distance, `+∞` for a single scatterer.
    pub fn min_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, p) in self.locations.iter().enumerate() {
            for q in &self.locations[..i] {
                best = best.min(p.dist(q));
            }
        }
        best
    }

    pub fn check_domain(&self, domain: &BoxDomain) -> Result<()> {
        if domain.dim != self.dim {
            return Err(Error::invalid("domain and configuration dimensions differ"));
        }
        match self.locations.iter().position(|p| !domain.contains(p)) {
            Some(i) => Err(Error::invalid(alloc::format!(
                "location #{i} lies outside the domain of side {}",
                domain.side
            ))),
            None => Ok(()),
        }
    }
}

/// Incident direction `θ` and observation direction `x̂`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DirectionPair {
    pub incident: Point,
    pub observation: Point,
}

impl DirectionPair {
    pub fn new(incident: Point, observation: Point) -> Result<Self> {
        for v in [&incident, &observation] {
            if (v.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::invalid("direction vectors must have unit length"));
            }
        }
        Ok(DirectionPair {
            incident,
            observation,
        })
    }

    /// `κ(x̂ − θ)`.
    pub fn frequency(&self, kappa: f64) -> Point {
        (self.observation - self.incident) * kappa
    }
}

/// Excitations `u_i` solving the Foldy-Lax system.
#[derive(Clone, Debug, PartialEq)]
pub struct FoldySolution {
    pub values: Vec<Complex64>,
}

/// Green function at distance `t > 0` (no argument checks).
#[inline]
pub(crate) fn green_at(t: f64, kappa: f64, dim: Dim) -> Complex64 {
    match dim {
        Dim::Two => I * 0.25 * hankel1_01(kappa * t).0,
        Dim::Three => cis(kappa * t) / (4.0 * PI * t),
    }
}

/// Green function and its radial derivative `dG/dt` at distance `t > 0`.
#[inline]
pub(crate) fn green_with_derivative(t: f64, kappa: f64, dim: Dim) -> (Complex64, Complex64) {
    match dim {
        Dim::Two => {
            let (h0, h1) = hankel1_01(kappa * t);
            (I * 0.25 * h0, -I * 0.25 * kappa * h1)
        }
        Dim::Three => {
            let g = cis(kappa * t) / (4.0 * PI * t);
            (g, g * Complex64::new(-1.0 / t, kappa))
        }
    }
}

fn check_wavenumber(kappa: f64) -> Result<()> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::invalid("wavenumber must be positive and finite"));
    }
    Ok(())
}

/// Outgoing Green function of the Helmholtz operator between `p` and `q`.
pub fn green(p: &Point, q: &Point, kappa: f64, dim: Dim) -> Result<Complex64> {
    check_wavenumber(kappa)?;
    let t = p.dist(q);
    if !(t > 0.0) {
        return Err(Error::invalid("Green function is singular at coincident points"));
    }
    Ok(green_at(t, kappa, dim))
}

/// Non-increasing envelope `φ` with `|G(p, q)| ≤ φ(|p − q|)`.
pub fn phi_envelope(t: f64, kappa: f64, dim: Dim) -> Result<f64> {
    check_wavenumber(kappa)?;
    if !(t > 0.0) {
        return Err(Error::invalid("envelope needs a positive distance"));
    }
    Ok(phi_at(t, kappa, dim))
}

pub(crate) fn phi_at(t: f64, kappa: f64, dim: Dim) -> f64 {
    match dim {
        Dim::Two => {
            let lg = EULER_GAMMA + (0.5 * kappa * t).ln();
            let near = (1.0 + 4.0 / (PI * PI) * lg * lg).sqrt();
            let far = (2.0 / (PI * kappa * t)).sqrt();
            0.25 * near.min(far)
        }
        Dim::Three => 1.0 / (4.0 * PI * t),
    }
}

/// Foldy matrix: `T_ij = G(x_i, x_j) a_j` off the diagonal, zero on it.
pub fn foldy_matrix(cfg: &ScattererConfig, kappa: f64) -> Result<CMatrix> {
    check_wavenumber(kappa)?;
    foldy_matrix_parts(cfg.dim, cfg.amplitudes(), cfg.locations(), kappa)
}

pub(crate) fn foldy_matrix_parts(
    dim: Dim,
    amplitudes: &[Complex64],
    locations: &[Point],
    kappa: f64,
) -> Result<CMatrix> {
    let s = amplitudes.len();
    let mut t = CMatrix::zeros(s);
    for i in 0..s {
        for j in 0..i {
            let r = locations[i].dist(&locations[j]);
            if !(r > 0.0) {
                return Err(Error::invalid("two scatterers share a location"));
            }
            let g = green_at(r, kappa, dim);
            t[(i, j)] = g * amplitudes[j];
            t[(j, i)] = g * amplitudes[i];
        }
    }
    Ok(t)
}

/// Factorized `Id − κ²T`, reusable across incident directions.
#[derive(Clone, Debug)]
pub struct FoldySystem {
    lu: Lu,
    interaction: CMatrix,
    kappa: f64,
    locations: Vec<Point>,
}

impl FoldySystem {
    pub fn new(cfg: &ScattererConfig, kappa: f64) -> Result<Self> {
        check_wavenumber(kappa)?;
        Self::from_parts(cfg.dim, cfg.amplitudes(), cfg.locations(), kappa)
    }

    pub(crate) fn from_parts(
        dim: Dim,
        amplitudes: &[Complex64],
        locations: &[Point],
        kappa: f64,
    ) -> Result<Self> {
        let interaction = foldy_matrix_parts(dim, amplitudes, locations, kappa)?;
        let mut a = interaction.clone();
        let k2 = kappa * kappa;
        for i in 0..a.size() {
            for j in 0..a.size() {
                let v = -k2 * a[(i, j)];
                a[(i, j)] = if i == j { v + 1.0 } else { v };
            }
        }
        Ok(FoldySystem {
            lu: Lu::factor(&a)?,
            interaction,
            kappa,
            locations: locations.to_vec(),
        })
    }

    /// Incident field `e^{iκθ·x_i}` at every scatterer.
    pub fn incident(&self, theta: &Point) -> Vec<Complex64> {
        self.locations
            .iter()
            .map(|x| cis(self.kappa * theta.dot(x)))
            .collect()
    }

    pub fn solve(&self, theta: &Point) -> FoldySolution {
        FoldySolution {
            values: self.lu.solve(&self.incident(theta)),
        }
    }

    /// Scattered part `u − u_in`, solving `(Id − κ²T) w = κ²T u_in`. It vanishes exactly
    /// when `T = 0`.
    pub fn scattered(&self, theta: &Point) -> Vec<Complex64> {
        let u_in = self.incident(theta);
        let rhs: Vec<Complex64> = self
            .interaction
            .mul_vec(&u_in)
            .into_iter()
            .map(|z| z * (self.kappa * self.kappa))
            .collect();
        self.lu.solve(&rhs)
    }

    pub fn condition(&self) -> f64 {
        self.lu.condition()
    }
}

/// Solves `(Id − κ²T) u = u_in` for the plane wave with direction `theta`.
pub fn foldy_solve(cfg: &ScattererConfig, kappa: f64, theta: &Point) -> Result<FoldySolution> {
    Ok(FoldySystem::new(cfg, kappa)?.solve(theta))
}

fn far_field_sum(
    amplitudes: &[Complex64],
    locations: &[Point],
    excitations: impl Iterator<Item = Complex64>,
    kappa: f64,
    xhat: &Point,
) -> Complex64 {
    let s: Complex64 = amplitudes
        .iter()
        .zip(locations)
        .zip(excitations)
        .map(|((a, x), u)| a * u * cis(-kappa * xhat.dot(x)))
        .sum();
    s * far_field_prefactor(kappa)
}

/// Far-field pattern of the Foldy-Lax model.
///
/// Evaluated as the Born far field plus the contribution of `u − u_in`.
pub fn far_field_foldy(cfg: &ScattererConfig, kappa: f64, pair: &DirectionPair) -> Result<Complex64> {
    let w = FoldySystem::new(cfg, kappa)?.scattered(&pair.incident);
    Ok(far_field_born(cfg, kappa, pair)
        + far_field_sum(cfg.amplitudes(), cfg.locations(), w.into_iter(), kappa, &pair.observation))
}

/// Far-field pattern of the Born approximation.
pub fn far_field_born(cfg: &ScattererConfig, kappa: f64, pair: &DirectionPair) -> Complex64 {
    let omega = pair.frequency(kappa);
    let s: Complex64 = cfg
        .amplitudes()
        .iter()
        .zip(cfg.locations())
        .map(|(a, x)| a * cis(-omega.dot(x)))
        .sum();
    s * far_field_prefactor(kappa)
}

/// Born measurement vector of a discrete measure, entry `k` being
/// `κ²/(4π√m) Σ a_i e^{−iω_k·x_i}`.
pub fn apply_born_operator(measure: &DiscreteMeasure, plan: &MeasurementPlan) -> Vec<Complex64> {
    apply_born_at(&measure.amplitudes(), &measure.locations(), plan)
}

/// Born operator on a fixed support applied to amplitudes `a`.
pub fn apply_born_at(amplitudes: &[Complex64], locations: &[Point], plan: &MeasurementPlan) -> Vec<Complex64> {
    let c = raw_sample_scale(plan.kappa(), plan.m());
    plan.frequencies()
        .iter()
        .map(|w| {
            let s: Complex64 = amplitudes
                .iter()
                .zip(locations)
                .map(|(a, x)| a * cis(-w.dot(x)))
                .sum();
            s * c
        })
        .collect()
}

/// Foldy measurement vector, entry `k` being `u∞(x̂_k, θ_k)/√m`.
pub fn apply_foldy_operator(cfg: &ScattererConfig, plan: &MeasurementPlan) -> Result<Vec<Complex64>> {
    apply_foldy_at(cfg.dim, cfg.amplitudes(), cfg.locations(), plan)
}

pub(crate) fn apply_foldy_at(
    dim: Dim,
    amplitudes: &[Complex64],
    locations: &[Point],
    plan: &MeasurementPlan,
) -> Result<Vec<Complex64>> {
    let kappa = plan.kappa();
    if amplitudes.is_empty() {
        return Ok(alloc::vec![Complex64::zero(); plan.m()]);
    }
    let sys = FoldySystem::from_parts(dim, amplitudes, locations, kappa).map_err(|e| e.at_direction(0))?;
    let norm = 1.0 / (plan.m() as f64).sqrt();
    let born = apply_born_at(amplitudes, locations, plan);
    Ok(plan
        .pairs()
        .iter()
        .zip(born)
        .map(|(p, b)| {
            let w = sys.scattered(&p.incident);
            b + far_field_sum(amplitudes, locations, w.into_iter(), kappa, &p.observation) * norm
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn green_trivial_values() {
        let p = Point::new3(0.0, 0.0, 0.0);
        let q = Point::new3(0.0, 1.0, 0.0);
        let g = green(&p, &q, 2.0 * PI, Dim::Three).unwrap();
        assert!((g - c(1.0 / (4.0 * PI), 0.0)).norm() < 1e-15);
        assert!(green(&p, &p, 1.0, Dim::Three).is_err());
        let a = Point::new2(0.3, -1.2);
        let b = Point::new2(-0.7, 0.4);
        assert_eq!(green(&a, &b, 1.3, Dim::Two).unwrap(), green(&b, &a, 1.3, Dim::Two).unwrap());
    }

    #[test]
    fn envelope_trivial_values() {
        assert!((phi_envelope(1.0, 3.0, Dim::Three).unwrap() - 1.0 / (4.0 * PI)).abs() < 1e-16);
        let v = phi_envelope(2.0, 1.0, Dim::Two).unwrap();
        let want = 0.25 * (1.0 + 4.0 * EULER_GAMMA * EULER_GAMMA / (PI * PI)).sqrt().min((1.0 / PI).sqrt());
        assert!((v - want).abs() < 1e-16);
        assert!(phi_envelope(0.0, 1.0, Dim::Two).is_err());
    }

    #[test]
    fn derivative_matches_finite_difference() {
        for dim in [Dim::Two, Dim::Three] {
            for &t in &[0.05, 0.7, 3.0, 17.0] {
                let h = 1e-6 * t;
                let fd = (green_at(t + h, 1.7, dim) - green_at(t - h, 1.7, dim)) / (2.0 * h);
                let (_, d) = green_with_derivative(t, 1.7, dim);
                assert!((fd - d).norm() <= 1e-6 * d.norm().max(1.0), "{dim:?} {t}");
            }
        }
    }

    #[test]
    fn config_validation() {
        let d = Dim::Two;
        let p = Point::new2(0.0, 0.0);
        assert!(ScattererConfig::new(d, vec![], vec![]).is_err());
        assert!(ScattererConfig::new(d, vec![c(0.0, 0.0)], vec![p]).is_err());
        assert!(ScattererConfig::new(d, vec![c(1.0, 0.0); 2], vec![p, p]).is_err());
        assert!(ScattererConfig::new(d, vec![c(1.0, 0.0)], vec![Point::new3(0.0, 0.0, 1.0)]).is_err());
        let cfg = ScattererConfig::new(d, vec![c(1.0, 0.0)], vec![Point::new2(3.0, 0.0)]).unwrap();
        assert!(cfg.check_domain(&BoxDomain::new(d, 5.0).unwrap()).is_err());
        assert!(cfg.check_domain(&BoxDomain::new(d, 10.0).unwrap()).is_ok());
    }

    #[test]
    fn single_scatterer_has_zero_interaction() {
        let cfg = ScattererConfig::new(Dim::Three, vec![c(0.4, -1.0)], vec![Point::new3(0.1, 0.2, 0.3)]).unwrap();
        let t = foldy_matrix(&cfg, 2.0).unwrap();
        assert_eq!(t[(0, 0)], Complex64::zero());
        let theta = Point::new3(0.0, 0.6, 0.8);
        let u = foldy_solve(&cfg, 2.0, &theta).unwrap();
        assert!((u.values[0] - cis(2.0 * theta.dot(&cfg.locations()[0]))).norm() < 1e-15);
        let origin = ScattererConfig::new(Dim::Two, vec![c(1.0, 0.0)], vec![Point::new2(0.0, 0.0)]).unwrap();
        let pair = DirectionPair::new(Point::new2(1.0, 0.0), Point::new2(0.0, 1.0)).unwrap();
        let want = far_field_prefactor(1.5);
        assert!((far_field_foldy(&origin, 1.5, &pair).unwrap() - want).norm() < 1e-15);
        assert!((far_field_born(&origin, 1.5, &pair) - want).norm() < 1e-15);
    }

    #[test]
    fn column_scaling() {
        let locs = vec![Point::new2(0.0, 0.0), Point::new2(1.0, 0.0), Point::new2(0.0, 2.0)];
        let amps = vec![c(1.0, 0.0), c(0.5, 0.5), c(-1.0, 0.2)];
        let base = foldy_matrix(&ScattererConfig::new(Dim::Two, amps.clone(), locs.clone()).unwrap(), 1.0).unwrap();
        let mut scaled = amps;
        scaled[1] *= 3.0;
        let t = foldy_matrix(&ScattererConfig::new(Dim::Two, scaled, locs).unwrap(), 1.0).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let f = if j == 1 { 3.0 } else { 1.0 };
                assert!((t[(i, j)] - base[(i, j)] * f).norm() < 1e-15);
            }
        }
    }
}
