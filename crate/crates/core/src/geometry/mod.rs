//! Plane models, points, segments and region measures.
//!
//! Two planes are supported. The Euclidean model places points in the unit
//! square and joins pairs at distance `<= r`. The hyperbolic model places
//! points in a disk of radius `R = 2 ln n + C` with radial density
//! `alpha sinh(alpha r) / (cosh(alpha R) - 1)` and joins pairs at hyperbolic
//! distance `<= R`.

pub mod euclid;
pub mod hyperbolic;

use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use thiserror::Error;

pub use euclid::Vec2;
pub use hyperbolic::Polar;

/// Absolute tolerance for Euclidean comparisons.
pub const EUCLID_TOL: f64 = 1e-12;
/// Absolute tolerance for hyperbolic comparisons.
pub const HYPERBOLIC_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("connection radius must lie in (0, 1), got {0}")]
    InvalidRadius(f64),
    #[error("power-law exponent must lie in (2, 3), got {0}")]
    InvalidGamma(f64),
    #[error("disk radius 2 ln n + C must be positive (n = {n}, C = {c})")]
    NonPositiveDiskRadius { n: usize, c: f64 },
    #[error("point kind does not match the plane model")]
    PointKindMismatch,
    #[error("region leaves the support of the model")]
    OutOfDomain,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("segments share an endpoint")]
    EndpointCollision,
    #[error("segments are not independent")]
    NotIndependent,
    #[error("independent segments do not intersect")]
    NoIntersection,
    #[error("collinear configuration (measure-zero event)")]
    NumericalDegeneracy,
}

/// Euclidean random geometric graph parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EuclidModel {
    pub n: usize,
    pub r: f64,
}

/// Hyperbolic random graph parameters; `radius` and `alpha` are derived.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicModel {
    pub n: usize,
    pub gamma: f64,
    pub c: f64,
    pub radius: f64,
    pub alpha: f64,
}

impl HyperbolicModel {
    pub fn new(n: usize, gamma: f64, c: f64) -> Result<Self, ModelError> {
        if !(gamma > 2.0 && gamma < 3.0) {
            return Err(ModelError::InvalidGamma(gamma));
        }
        let radius = 2.0 * (n as f64).ln() + c;
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(ModelError::NonPositiveDiskRadius { n, c });
        }
        Ok(Self {
            n,
            gamma,
            c,
            radius,
            alpha: (gamma - 1.0) / 2.0,
        })
    }

    /// `cosh(alpha R) - 1`, the normaliser of the radial density.
    pub fn normaliser(&self) -> f64 {
        cosh_minus_one(self.alpha * self.radius)
    }

    /// Angular-integrated radial density `f(r)` times `2 pi`; integrates to 1 over `[0, R]`.
    pub fn radial_density(&self, r: f64) -> f64 {
        if r < 0.0 || r > self.radius {
            return 0.0;
        }
        self.alpha * (self.alpha * r).sinh() / self.normaliser()
    }

    /// `P[radius <= r]` for one sampled point.
    pub fn radial_cdf(&self, r: f64) -> f64 {
        let r = r.clamp(0.0, self.radius);
        cosh_minus_one(self.alpha * r) / self.normaliser()
    }

    /// Inverse of [`radial_cdf`](Self::radial_cdf).
    pub fn radial_quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let r = (1.0 + u * self.normaliser()).acosh() / self.alpha;
        r.min(self.radius)
    }

    /// Density of points per unit hyperbolic area at radius `r`.
    pub fn rho(&self, r: f64) -> f64 {
        self.radial_density(r) / (TAU * r.sinh())
    }
}

/// The plane a graph lives in, with its connection threshold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum PlaneModel {
    Euclidean(EuclidModel),
    Hyperbolic(HyperbolicModel),
}

impl PlaneModel {
    pub fn euclidean(n: usize, r: f64) -> Result<Self, ModelError> {
        if !(r > 0.0 && r < 1.0) {
            return Err(ModelError::InvalidRadius(r));
        }
        Ok(PlaneModel::Euclidean(EuclidModel { n, r }))
    }

    pub fn hyperbolic(n: usize, gamma: f64, c: f64) -> Result<Self, ModelError> {
        HyperbolicModel::new(n, gamma, c).map(PlaneModel::Hyperbolic)
    }

    pub fn n(&self) -> usize {
        match self {
            PlaneModel::Euclidean(m) => m.n,
            PlaneModel::Hyperbolic(m) => m.n,
        }
    }

    /// Connection threshold: `r` or `R`.
    pub fn threshold(&self) -> f64 {
        match self {
            PlaneModel::Euclidean(m) => m.r,
            PlaneModel::Hyperbolic(m) => m.radius,
        }
    }

    pub fn with_n(&self, n: usize) -> Result<Self, ModelError> {
        match *self {
            PlaneModel::Euclidean(m) => PlaneModel::euclidean(n, m.r),
            PlaneModel::Hyperbolic(m) => PlaneModel::hyperbolic(n, m.gamma, m.c),
        }
    }

    pub fn distance(&self, p: Point, q: Point) -> Result<f64, ModelError> {
        match (self, p, q) {
            (PlaneModel::Euclidean(_), Point::Cartesian(a), Point::Cartesian(b)) => {
                Ok(euclid::distance(a, b))
            }
            (PlaneModel::Hyperbolic(_), Point::Polar(a), Point::Polar(b)) => {
                Ok(hyperbolic::distance(a, b))
            }
            _ => Err(ModelError::PointKindMismatch),
        }
    }
}

/// A vertex position in either plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Point {
    Cartesian(Vec2),
    Polar(Polar),
}

/// `pi - |pi - |phi_u - phi_v||`, the angle between two polar directions.
pub fn angular_difference(phi_u: f64, phi_v: f64) -> f64 {
    let d = (phi_u - phi_v).abs() % TAU;
    PI - (PI - d).abs()
}

/// Normalises an angle to `[0, 2 pi)`.
pub fn wrap_angle(phi: f64) -> f64 {
    let w = phi.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// `cosh(x) - 1` without cancellation for small `x`.
pub fn cosh_minus_one(x: f64) -> f64 {
    let s = (0.5 * x).sinh();
    2.0 * s * s
}

/// Slack term `ln(2 (1 + e^{-2R}) / (1 + cos theta))` of the hyperbolic
/// segment bounds.
pub fn delta(theta: f64, radius: f64) -> f64 {
    let half_cos = (0.5 * theta).cos();
    // 1 + cos(theta) = 2 cos^2(theta/2)
    (-2.0 * radius).exp().ln_1p() - 2.0 * half_cos.ln()
}

/// `rho(r) = f(r) / sinh r` for the hyperbolic model.
pub fn rho(model: &HyperbolicModel, r: f64) -> f64 {
    model.rho(r)
}

/// Two endpoints and the plane distance between them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment<P> {
    pub start: P,
    pub end: P,
    pub length: f64,
}

impl Segment<Vec2> {
    pub fn euclid(start: Vec2, end: Vec2) -> Self {
        Self {
            start,
            end,
            length: euclid::distance(start, end),
        }
    }
}

impl Segment<Polar> {
    pub fn hyperbolic(start: Polar, end: Polar) -> Self {
        Self {
            start,
            end,
            length: hyperbolic::distance(start, end),
        }
    }
}

impl<P: Copy> Segment<P> {
    pub fn endpoints(&self) -> [P; 2] {
        [self.start, self.end]
    }

    pub fn reversed(&self) -> Self {
        Self {
            start: self.end,
            end: self.start,
            length: self.length,
        }
    }
}

/// Geometry of two independent segments `s = v1 v2` and `s' = w1 w2`.
///
/// Labels follow the counter-clockwise order `v1 w1 v2 w2` of the four
/// endpoints, with `v1` the first stored endpoint of `s`. `q` is the
/// intersection point and `m` the midpoint of `s`; `(r0, phi)` are the
/// polar coordinates of `w1` about `m` with polar axis `m -> v1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentPair<P> {
    pub v1: P,
    pub v2: P,
    pub w1: P,
    pub w2: P,
    /// Directed angle `angle(s, s') = angle w1 q v1`, in `(0, pi)`.
    pub theta: f64,
    /// Length of `s`.
    pub a: f64,
    /// Length of `s'`.
    pub b: f64,
    /// Distance `v1 -> q`.
    pub c: f64,
    /// Distance `w1 -> q`.
    pub d: f64,
    pub r0: f64,
    pub phi: f64,
    /// Polar coordinates of `w2` about `m` with the same axis; angle in `(pi, 2 pi)`.
    pub w2_r: f64,
    pub w2_phi: f64,
}

/// An annular sector `{(rho, psi) : r_lo <= rho <= r_hi, phi_lo <= psi <= phi_hi}`
/// in polar coordinates about `center`, with angles measured from `axis`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnulusSector {
    pub r_lo: f64,
    pub r_hi: f64,
    pub phi_lo: f64,
    pub phi_hi: f64,
    pub center: Point,
    pub axis: f64,
}

impl AnnulusSector {
    pub fn contains_polar(&self, rho: f64, psi: f64) -> bool {
        if rho < self.r_lo || rho > self.r_hi {
            return false;
        }
        let rel = wrap_angle(psi - self.axis - self.phi_lo);
        rel <= self.phi_hi - self.phi_lo
    }
}

/// Probability that one sampled vertex lands in `sector`.
pub fn region_probability(model: &PlaneModel, sector: &AnnulusSector) -> Result<f64, ModelError> {
    if !(sector.r_lo >= 0.0 && sector.r_lo <= sector.r_hi && sector.phi_lo <= sector.phi_hi) {
        return Err(ModelError::OutOfDomain);
    }
    let span = sector.phi_hi - sector.phi_lo;
    if span > TAU + EUCLID_TOL {
        return Err(ModelError::OutOfDomain);
    }
    match (model, sector.center) {
        (PlaneModel::Euclidean(_), Point::Cartesian(c)) => {
            let fits = c.x - sector.r_hi >= 0.0
                && c.x + sector.r_hi <= 1.0
                && c.y - sector.r_hi >= 0.0
                && c.y + sector.r_hi <= 1.0;
            if !fits {
                return Err(ModelError::OutOfDomain);
            }
            Ok(0.5 * (sector.r_hi * sector.r_hi - sector.r_lo * sector.r_lo) * span)
        }
        (PlaneModel::Hyperbolic(m), Point::Polar(c)) => {
            if c.r != 0.0 || sector.r_hi > m.radius * (1.0 + f64::EPSILON) {
                return Err(ModelError::OutOfDomain);
            }
            let upper = cosh_minus_one(m.alpha * sector.r_hi.min(m.radius));
            let lower = cosh_minus_one(m.alpha * sector.r_lo);
            Ok(span / TAU * (upper - lower) / m.normaliser())
        }
        _ => Err(ModelError::PointKindMismatch),
    }
}
