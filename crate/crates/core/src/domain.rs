//! Spatial domains with exact distance-to-boundary functions.
//!
//! Every supported domain has a piecewise-smooth distance function that we
//! can evaluate and differentiate exactly, so no regularized distance is
//! needed: all boundary-layer quantities are built from `delta` and
//! `grad_delta` directly.

use serde::Serialize;

use crate::error::{Error, Result};

/// A point in R^d, d <= 3. Unused coordinates are zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    coords: [f64; 3],
    dim: usize,
}

impl Point {
    pub fn new_1d(x: f64) -> Self {
        Point { coords: [x, 0.0, 0.0], dim: 1 }
    }

    pub fn new_2d(x: f64, y: f64) -> Self {
        Point { coords: [x, y, 0.0], dim: 2 }
    }

    pub fn new_3d(x: f64, y: f64, z: f64) -> Self {
        Point { coords: [x, y, z], dim: 3 }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim]
    }

    pub fn coord(&self, j: usize) -> f64 {
        self.coords[j]
    }

    pub fn norm(&self) -> f64 {
        self.coords()
            .iter()
            .map(|c| c * c)
            .sum::<f64>()
            .sqrt()
    }

    /// Shift one coordinate; used by finite-difference gradients.
    pub fn shifted(&self, j: usize, h: f64) -> Self {
        let mut p = *self;
        p.coords[j] += h;
        p
    }
}

/// One side of a 1D interval (the `Upper` side may sit at +infinity).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum EndpointSide {
    Lower,
    Upper,
}

impl EndpointSide {
    pub fn other(self) -> Self {
        match self {
            EndpointSide::Lower => EndpointSide::Upper,
            EndpointSide::Upper => EndpointSide::Lower,
        }
    }
}

impl std::fmt::Display for EndpointSide {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EndpointSide::Lower => write!(f, "lower"),
            EndpointSide::Upper => write!(f, "upper"),
        }
    }
}

/// A 1D base interval, either finite or a half-line extending to +infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Interval1D {
    Finite { a: f64, b: f64 },
    HalfLine { a: f64 },
}

impl Interval1D {
    pub fn unit() -> Self {
        Interval1D::Finite { a: 0.0, b: 1.0 }
    }

    pub fn lower(&self) -> f64 {
        match self {
            Interval1D::Finite { a, .. } | Interval1D::HalfLine { a } => *a,
        }
    }

    /// Finite upper endpoint, if any.
    pub fn upper(&self) -> Option<f64> {
        match self {
            Interval1D::Finite { b, .. } => Some(*b),
            Interval1D::HalfLine { .. } => None,
        }
    }

    pub fn length(&self) -> Option<f64> {
        match self {
            Interval1D::Finite { a, b } => Some(b - a),
            Interval1D::HalfLine { .. } => None,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        match self {
            Interval1D::Finite { a, b } => *a < x && x < *b,
            Interval1D::HalfLine { a } => *a < x,
        }
    }

    pub fn midpoint(&self) -> f64 {
        match self {
            Interval1D::Finite { a, b } => 0.5 * (a + b),
            Interval1D::HalfLine { a } => a + 1.0,
        }
    }

    /// Distance to the boundary: min(x - a, b - x) on a finite interval,
    /// x - a on a half-line (infinity is not a boundary point).
    pub fn delta(&self, x: f64) -> f64 {
        match self {
            Interval1D::Finite { a, b } => (x - a).min(b - x),
            Interval1D::HalfLine { a } => x - a,
        }
    }

    /// Distance to one specific endpoint. Infinite for the upper end of a
    /// half-line.
    pub fn delta_to(&self, x: f64, side: EndpointSide) -> f64 {
        match (self, side) {
            (Interval1D::Finite { a, .. }, EndpointSide::Lower) => x - a,
            (Interval1D::Finite { b, .. }, EndpointSide::Upper) => b - x,
            (Interval1D::HalfLine { a }, EndpointSide::Lower) => x - a,
            (Interval1D::HalfLine { .. }, EndpointSide::Upper) => f64::INFINITY,
        }
    }

    pub fn endpoint_is_infinite(&self, side: EndpointSide) -> bool {
        matches!((self, side), (Interval1D::HalfLine { .. }, EndpointSide::Upper))
    }
}

/// Supported spatial domains. The distance function is exact and piecewise
/// smooth on each variant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Interval { a: f64, b: f64 },
    UnitDisk,
    PuncturedUnitDisk,
    Annulus { r0: f64 },
    HalfLinePlusInfinity { a: f64 },
    /// Unit ball in R^3; the 3D analog of `UnitDisk`, used by the d = 3
    /// scalar-potential certificates.
    UnitBall,
}

impl Domain {
    pub fn new_interval(a: f64, b: f64) -> Result<Self> {
        if a < b {
            Ok(Domain::Interval { a, b })
        } else {
            Err(Error::InvalidParameter(format!("interval requires a < b, got [{a}, {b}]")))
        }
    }

    pub fn new_annulus(r0: f64) -> Result<Self> {
        if r0 > 0.0 && r0 < 1.0 {
            Ok(Domain::Annulus { r0 })
        } else {
            Err(Error::InvalidParameter(format!("annulus requires 0 < r0 < 1, got {r0}")))
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Interval { .. } | Domain::HalfLinePlusInfinity { .. } => 1,
            Domain::UnitDisk | Domain::PuncturedUnitDisk | Domain::Annulus { .. } => 2,
            Domain::UnitBall => 3,
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        match self {
            Domain::Interval { a, b } => {
                let x = p.coord(0);
                *a < x && x < *b
            }
            Domain::HalfLinePlusInfinity { a } => p.coord(0) > *a,
            Domain::UnitDisk | Domain::UnitBall => p.norm() < 1.0,
            Domain::PuncturedUnitDisk => {
                let r = p.norm();
                r > 0.0 && r < 1.0
            }
            Domain::Annulus { r0 } => {
                let r = p.norm();
                *r0 < r && r < 1.0
            }
        }
    }

    /// Exact distance to the boundary.
    pub fn delta(&self, p: &Point) -> f64 {
        match self {
            Domain::Interval { a, b } => (p.coord(0) - a).min(b - p.coord(0)),
            Domain::HalfLinePlusInfinity { a } => p.coord(0) - a,
            Domain::UnitDisk | Domain::UnitBall => 1.0 - p.norm(),
            Domain::PuncturedUnitDisk => {
                let r = p.norm();
                r.min(1.0 - r)
            }
            Domain::Annulus { r0 } => {
                let r = p.norm();
                (r - r0).min(1.0 - r)
            }
        }
    }

    /// Gradient of the distance function where it is smooth (away from the
    /// ridge set). `|grad delta| = 1` on every variant.
    pub fn grad_delta(&self, p: &Point) -> [f64; 3] {
        match self {
            Domain::Interval { a, b } => {
                let x = p.coord(0);
                if x - a <= b - x {
                    [1.0, 0.0, 0.0]
                } else {
                    [-1.0, 0.0, 0.0]
                }
            }
            Domain::HalfLinePlusInfinity { .. } => [1.0, 0.0, 0.0],
            Domain::UnitDisk | Domain::UnitBall => {
                let r = p.norm().max(1e-300);
                let mut g = [0.0; 3];
                for j in 0..p.dim() {
                    g[j] = -p.coord(j) / r;
                }
                g
            }
            Domain::PuncturedUnitDisk => {
                let r = p.norm().max(1e-300);
                let sign = if r <= 1.0 - r { 1.0 } else { -1.0 };
                let mut g = [0.0; 3];
                for j in 0..p.dim() {
                    g[j] = sign * p.coord(j) / r;
                }
                g
            }
            Domain::Annulus { r0 } => {
                let r = p.norm().max(1e-300);
                let sign = if r - r0 <= 1.0 - r { 1.0 } else { -1.0 };
                let mut g = [0.0; 3];
                for j in 0..p.dim() {
                    g[j] = sign * p.coord(j) / r;
                }
                g
            }
        }
    }

    pub fn as_interval(&self) -> Option<Interval1D> {
        match self {
            Domain::Interval { a, b } => Some(Interval1D::Finite { a: *a, b: *b }),
            Domain::HalfLinePlusInfinity { a } => Some(Interval1D::HalfLine { a: *a }),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn interval_distance_is_min_to_endpoints() {
        let d = Domain::new_interval(0.0, 1.0).unwrap();
        assert_relative_eq!(d.delta(&Point::new_1d(0.25)), 0.25);
        assert_relative_eq!(d.delta(&Point::new_1d(0.75)), 0.25);
        assert_relative_eq!(d.delta(&Point::new_1d(0.5)), 0.5);
    }

    #[test]
    fn disk_distance_and_gradient() {
        let d = Domain::UnitDisk;
        let p = Point::new_2d(0.6, 0.0);
        assert_relative_eq!(d.delta(&p), 0.4);
        let g = d.grad_delta(&p);
        assert_relative_eq!(g[0], -1.0);
        assert_relative_eq!(g[1], 0.0);
    }

    #[test]
    fn punctured_disk_sees_the_origin() {
        let d = Domain::PuncturedUnitDisk;
        assert_relative_eq!(d.delta(&Point::new_2d(0.1, 0.0)), 0.1);
        assert_relative_eq!(d.delta(&Point::new_2d(0.9, 0.0)), 0.1 - f64::EPSILON, epsilon = 1e-12);
        assert!(!d.contains(&Point::new_2d(0.0, 0.0)));
    }

    #[test]
    fn annulus_distance() {
        let d = Domain::new_annulus(0.25).unwrap();
        assert_relative_eq!(d.delta(&Point::new_2d(0.3, 0.0)), 0.05, epsilon = 1e-15);
        assert_relative_eq!(d.delta(&Point::new_2d(0.9, 0.0)), 0.1, epsilon = 1e-15);
    }

    #[test]
    fn ball_gradient_is_unit() {
        let d = Domain::UnitBall;
        let p = Point::new_3d(0.3, 0.4, 0.0);
        let g = d.grad_delta(&p);
        let n = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
        assert_relative_eq!(n, 1.0, epsilon = 1e-14);
    }
}
