//! Measurement design: frequencies uniform in the ball of radius `2κ`, the matching
//! direction pairs, and Gaussian noise.
//!
//! Random streams come from `ChaCha8Rng::seed_from_u64`, so a seed fixes a plan on every
//! platform.

use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::geometry::{Dim, Point};
use crate::scatter::DirectionPair;
use crate::{Error, Result};

/// Absolute tolerance on `κ(x̂ − θ) = ω`.
pub const PUSHFORWARD_TOL: f64 = 1e-12;

/// Frequencies `ω_k` with their direction pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementPlan {
    dim: Dim,
    kappa: f64,
    seed: u64,
    frequencies: Vec<Point>,
    pairs: Vec<DirectionPair>,
}

impl MeasurementPlan {
    /// Assembles a plan, checking `|ω_k| ≤ 2κ`, unit directions and `κ(x̂_k − θ_k) = ω_k`.
    pub fn new(dim: Dim, kappa: f64, seed: u64, frequencies: Vec<Point>, pairs: Vec<DirectionPair>) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::invalid("wavenumber must be positive and finite"));
        }
        if frequencies.is_empty() || frequencies.len() != pairs.len() {
            return Err(Error::invalid("a plan needs m >= 1 frequencies, one per direction pair"));
        }
        for (k, (w, p)) in frequencies.iter().zip(&pairs).enumerate() {
            let unit = |v: &Point| (v.norm() - 1.0).abs() <= 1e-12;
            if !w.fits(dim) || !p.incident.fits(dim) || !p.observation.fits(dim) {
                return Err(Error::invalid(alloc::format!("entry #{k} does not live in R^{}", dim.get())));
            }
            if !unit(&p.incident) || !unit(&p.observation) {
                return Err(Error::invalid(alloc::format!("entry #{k} has a non-unit direction")));
            }
            if w.norm() > 2.0 * kappa * (1.0 + 1e-12) {
                return Err(Error::invalid(alloc::format!("frequency #{k} lies outside B(0, 2kappa)")));
            }
            if (p.frequency(kappa) - *w).norm() > PUSHFORWARD_TOL * kappa.max(1.0) {
                return Err(Error::invalid(alloc::format!(
                    "entry #{k}: kappa (xhat - theta) differs from the frequency"
                )));
            }
        }
        Ok(MeasurementPlan {
            dim,
            kappa,
            seed,
            frequencies,
            pairs,
        })
    }

    /// Plan whose frequencies are `κ(x̂_k − θ_k)` for the given pairs.
    pub fn from_pairs(dim: Dim, kappa: f64, seed: u64, pairs: Vec<DirectionPair>) -> Result<Self> {
        let freqs = pairs.iter().map(|p| p.frequency(kappa)).collect();
        Self::new(dim, kappa, seed, freqs, pairs)
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn m(&self) -> usize {
        self.frequencies.len()
    }

    pub fn frequencies(&self) -> &[Point] {
        &self.frequencies
    }

    pub fn pairs(&self) -> &[DirectionPair] {
        &self.pairs
    }
}

/// Complex measurement vector `y`.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationVector {
    pub values: Vec<Complex64>,
    pub noise_std: f64,
}

impl ObservationVector {
    pub fn clean(values: Vec<Complex64>) -> Self {
        ObservationVector {
            values,
            noise_std: 0.0,
        }
    }

    pub fn norm(&self) -> f64 {
        norm2(&self.values)
    }
}

pub(crate) fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_point(rng: &mut ChaCha8Rng, dim: Dim) -> Point {
    let mut p = Point::ORIGIN;
    for c in &mut p.0[..dim.get()] {
        *c = rng.sample(StandardNormal);
    }
    p
}

fn unit_vector(rng: &mut ChaCha8Rng, dim: Dim) -> Point {
    loop {
        let g = gaussian_point(rng, dim);
        let n = g.norm();
        if n > 1e-300 {
            return g * (1.0 / n);
        }
    }
}

/// `m` i.i.d. points uniform in the open ball of radius `2κ`.
pub fn sample_ball(m: usize, kappa: f64, dim: Dim, seed: u64) -> Vec<Point> {
    let mut rng = rng_for(seed);
    let inv_d = 1.0 / dim.as_f64();
    (0..m)
        .map(|_| {
            let dir = unit_vector(&mut rng, dim);
            let u: f64 = rng.random();
            dir * (2.0 * kappa * u.powf(inv_d))
        })
        .collect()
}

/// Deterministic unit vector orthogonal to `u` (a unit vector): `u` rotated by +90° in the
/// plane, Gram-Schmidt of the basis vector least aligned with `u` in space.
fn orthogonal_unit(u: &Point, dim: Dim) -> Point {
    match dim {
        Dim::Two => Point::new2(-u.0[1], u.0[0]),
        Dim::Three => {
            let j = (0..3)
                .min_by(|&a, &b| u.0[a].abs().total_cmp(&u.0[b].abs()))
                .unwrap_or(0);
            let mut e = Point::ORIGIN;
            e.0[j] = 1.0;
            let v = e - *u * u.0[j];
            v * (1.0 / v.norm())
        }
    }
}

/// Direction pair with `κ(x̂ − θ) = ω`.
///
/// Writing `c = |ω|/(2κ)`, `s = √(1 − c²)` and `e` for the orthogonal completion of
/// `ω̂`, the pair is `x̂ = c ω̂ + s e` and `θ = −c ω̂ + s e`. For `ω = 0` the angle is 0,
/// so `ω̂` is the first basis vector and `x̂ = θ`.
pub fn directions_from_frequency(omega: &Point, kappa: f64, dim: Dim) -> Result<DirectionPair> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::invalid("wavenumber must be positive and finite"));
    }
    if !omega.fits(dim) {
        return Err(Error::invalid("frequency has the wrong dimension"));
    }
    let r = omega.norm();
    if !(r <= 2.0 * kappa * (1.0 + 1e-12)) {
        return Err(Error::invalid("frequency lies outside B(0, 2kappa)"));
    }
    let w_hat = if r > 0.0 {
        *omega * (1.0 / r)
    } else {
        Point([1.0, 0.0, 0.0])
    };
    let e = orthogonal_unit(&w_hat, dim);
    let c = (r / (2.0 * kappa)).min(1.0);
    let s = (1.0 - c * c).max(0.0).sqrt();
    Ok(DirectionPair {
        observation: w_hat * c + e * s,
        incident: w_hat * (-c) + e * s,
    })
}

/// Frequencies uniform in `B(0, 2κ)` and their direction pairs.
pub fn build_plan(m: usize, kappa: f64, dim: Dim, seed: u64) -> Result<MeasurementPlan> {
    if m == 0 {
        return Err(Error::invalid("m must be at least 1"));
    }
    let freqs = sample_ball(m, kappa, dim, seed);
    let pairs = freqs
        .iter()
        .map(|w| directions_from_frequency(w, kappa, dim))
        .collect::<Result<Vec<_>>>()?;
    MeasurementPlan::new(dim, kappa, seed, freqs, pairs)
}

/// Plan with `n` incident and observation directions drawn i.i.d. uniform on the sphere.
pub fn uniform_direction_plan(n: usize, kappa: f64, dim: Dim, seed: u64) -> Result<MeasurementPlan> {
    if n == 0 {
        return Err(Error::invalid("need at least one direction pair"));
    }
    let mut rng = rng_for(seed);
    let pairs = (0..n)
        .map(|_| {
            let incident = unit_vector(&mut rng, dim);
            let observation = unit_vector(&mut rng, dim);
            DirectionPair {
                incident,
                observation,
            }
        })
        .collect();
    MeasurementPlan::from_pairs(dim, kappa, seed, pairs)
}

/// Adds i.i.d. `N(0, σ²)` noise to the real and to the imaginary part of every entry.
pub fn add_noise(y: &ObservationVector, sigma: f64, seed: u64) -> Result<ObservationVector> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::invalid("noise level must be nonnegative"));
    }
    if sigma == 0.0 {
        return Ok(y.clone());
    }
    let mut rng = rng_for(seed);
    let values = y
        .values
        .iter()
        .map(|z| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            z + Complex64::new(re, im) * sigma
        })
        .collect();
    Ok(ObservationVector {
        values,
        noise_std: (y.noise_std * y.noise_std + sigma * sigma).sqrt(),
    })
}

/// `‖noisy − clean‖ / ‖clean‖`.
pub fn relative_noise_level(clean: &ObservationVector, noisy: &ObservationVector) -> f64 {
    let diff: Vec<Complex64> = noisy.values.iter().zip(&clean.values).map(|(a, b)| a - b).collect();
    norm2(&diff) / clean.norm()
}
