//! Points, ambient dimension and the box-shaped domain.

use core::ops::{Add, Mul, Neg, Sub};

use num_traits::Float;

use crate::{Error, Result};

/// Ambient dimension, `d ∈ {2, 3}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Dim {
    Two,
    Three,
}

impl Dim {
    pub fn new(d: usize) -> Result<Self> {
        match d {
            2 => Ok(Dim::Two),
            3 => Ok(Dim::Three),
            _ => Err(Error::invalid(alloc::format!("dimension must be 2 or 3, got {d}"))),
        }
    }

    #[inline]
    pub fn get(self) -> usize {
        match self {
            Dim::Two => 2,
            Dim::Three => 3,
        }
    }

    #[inline]
    pub fn as_f64(self) -> f64 {
        self.get() as f64
    }
}

/// A point (or vector) of `ℝ^d`, stored with three coordinates.
///
/// In dimension 2 the third coordinate is kept at zero, so dot products and norms are the
/// same in both dimensions.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point(pub [f64; 3]);

impl Point {
    pub const ORIGIN: Point = Point([0.0; 3]);

    #[inline]
    pub fn new2(x: f64, y: f64) -> Self {
        Point([x, y, 0.0])
    }

    #[inline]
    pub fn new3(x: f64, y: f64, z: f64) -> Self {
        Point([x, y, z])
    }

    /// Builds a point from exactly `d` coordinates.
    pub fn from_slice(dim: Dim, coords: &[f64]) -> Result<Self> {
        if coords.len() != dim.get() {
            return Err(Error::invalid(alloc::format!(
                "expected {} coordinates, got {}",
                dim.get(),
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("non-finite coordinate"));
        }
        let mut p = [0.0; 3];
        p[..coords.len()].copy_from_slice(coords);
        Ok(Point(p))
    }

    /// The first `d` coordinates.
    #[inline]
    pub fn coords(&self, dim: Dim) -> &[f64] {
        &self.0[..dim.get()]
    }

    #[inline]
    pub fn dot(&self, other: &Point) -> f64 {
        self.0[0] * other.0[0] + self.0[1] * other.0[1] + self.0[2] * other.0[2]
    }

    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    #[inline]
    pub fn dist(&self, other: &Point) -> f64 {
        (*self - *other).norm()
    }

    /// Whether the point only uses the first `d` coordinates.
    #[inline]
    pub fn fits(&self, dim: Dim) -> bool {
        dim == Dim::Three || self.0[2] == 0.0
    }
}

impl Add for Point {
    type Output = Point;
    #[inline]
    fn add(self, o: Point) -> Point {
        Point([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl Sub for Point {
    type Output = Point;
    #[inline]
    fn sub(self, o: Point) -> Point {
        Point([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl Neg for Point {
    type Output = Point;
    #[inline]
    fn neg(self) -> Point {
        Point([-self.0[0], -self.0[1], -self.0[2]])
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    #[inline]
    fn mul(self, s: f64) -> Point {
        Point([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}

impl Mul<Point> for f64 {
    type Output = Point;
    #[inline]
    fn mul(self, p: Point) -> Point {
        p * self
    }
}

/// The open box `(-side/2, side/2)^d`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxDomain {
    pub dim: Dim,
    pub side: f64,
}

impl BoxDomain {
    pub fn new(dim: Dim, side: f64) -> Result<Self> {
        if !(side.is_finite() && side > 0.0) {
            return Err(Error::invalid("domain side must be positive and finite"));
        }
        Ok(BoxDomain { dim, side })
    }

    #[inline]
    pub fn half(&self) -> f64 {
        0.5 * self.side
    }

    pub fn contains(&self, p: &Point) -> bool {
        let h = self.half();
        p.fits(self.dim) && p.coords(self.dim).iter().all(|c| c.abs() < h)
    }

    /// Clamps every coordinate into the closed box shrunk by `margin`.
    pub fn clamp(&self, p: &mut Point, margin: f64) {
        let h = self.half() - margin;
        for c in &mut p.0[..self.dim.get()] {
            *c = c.clamp(-h, h);
        }
    }

    /// Cell-centred grid with `n` nodes per axis, in lexicographic order.
    pub fn grid(&self, n: usize) -> alloc::vec::Vec<Point> {
        let n = n.max(1);
        let h = self.side / n as f64;
        let lo = -self.half() + 0.5 * h;
        let axis = |i: usize| lo + h * i as f64;
        let mut out = alloc::vec::Vec::with_capacity(n.pow(self.dim.get() as u32));
        match self.dim {
            Dim::Two => {
                for i in 0..n {
                    for j in 0..n {
                        out.push(Point::new2(axis(i), axis(j)));
                    }
                }
            }
            Dim::Three => {
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            out.push(Point::new3(axis(i), axis(j), axis(k)));
                        }
                    }
                }
            }
        }
        out
    }
}
