//! Hyperbolic plane in native polar coordinates.
//!
//! Distances are evaluated through `sinh^2(d/2)`, which stays accurate both
//! for nearby points and near the rim of a disk of radius `2 ln n + C`.
//! Segment intersections are solved in a Poincaré-disk chart centred at the
//! midpoint of the first segment; lengths and angles of the resulting
//! triangles are then recomputed from native coordinates.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use super::{wrap_angle, GeometryError, Segment, SegmentPair};

/// Chart coordinates closer than this to the axis count as collinear.
const CHART_TOL: f64 = 1e-13;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Polar {
    pub r: f64,
    pub phi: f64,
}

impl Polar {
    pub const ORIGIN: Polar = Polar { r: 0.0, phi: 0.0 };

    pub const fn new(r: f64, phi: f64) -> Self {
        Self { r, phi }
    }

    /// Position in the Poincaré disk centred at the origin.
    pub fn to_poincare(self) -> Complex64 {
        Complex64::from_polar((0.5 * self.r).tanh(), self.phi)
    }
}

/// `sinh^2(d/2)` for the hyperbolic distance `d` between `p` and `q`.
#[inline]
pub fn sinh_half_sq(p: Polar, q: Polar) -> f64 {
    let dr = (0.5 * (p.r - q.r)).sinh();
    let dt = (0.5 * (p.phi - q.phi)).sin();
    dr * dr + p.r.sinh() * q.r.sinh() * dt * dt
}

/// Hyperbolic distance; equal to `arccosh(cosh r_u cosh r_v - sinh r_u sinh r_v cos theta)`.
pub fn distance(p: Polar, q: Polar) -> f64 {
    2.0 * sinh_half_sq(p, q).sqrt().asinh()
}

/// `sinh^2(R/2)`, the threshold matching [`sinh_half_sq`].
#[inline]
pub fn threshold_key(radius: f64) -> f64 {
    let s = (0.5 * radius).sinh();
    s * s
}

/// Edge predicate `dist(p, q) <= radius`.
#[inline]
pub fn within(p: Polar, q: Polar, radius: f64) -> bool {
    sinh_half_sq(p, q) <= threshold_key(radius)
}

/// Edge predicate with precomputed `sinh` of both radii.
#[inline]
pub(crate) fn within_cached(p: Polar, sinh_p: f64, q: Polar, sinh_q: f64, key: f64) -> bool {
    let dr = (0.5 * (p.r - q.r)).sinh();
    let dt = (0.5 * (p.phi - q.phi)).sin();
    dr * dr + sinh_p * sinh_q * dt * dt <= key
}

/// Largest angular separation at which points of radii `ru` and `rv` can be
/// within `radius`; `pi` when every separation qualifies, `None` when none does.
pub fn max_angle(ru: f64, rv: f64, radius: f64) -> Option<f64> {
    if ru + rv <= radius {
        return Some(PI);
    }
    if (ru - rv).abs() > radius {
        return None;
    }
    // sinh^2(d/2) = sinh^2((ru - rv)/2) + sinh ru sinh rv sin^2(theta/2)
    let dr = (0.5 * (ru - rv)).sinh();
    let s2 = (threshold_key(radius) - dr * dr) / (ru.sinh() * rv.sinh());
    if s2 >= 1.0 {
        return Some(PI);
    }
    Some(2.0 * s2.max(0.0).sqrt().asin())
}

/// Angle opposite side `x` in a hyperbolic triangle with sides `x, y, z`,
/// via the half-angle formula.
pub fn triangle_angle(x: f64, y: f64, z: f64) -> f64 {
    let s = 0.5 * (x + y + z);
    let num = ((s - y).max(0.0).sinh() * (s - z).max(0.0).sinh()).max(0.0);
    let den = (s.sinh() * (s - x).max(0.0).sinh()).max(0.0);
    2.0 * num.sqrt().atan2(den.sqrt())
}

/// Point at distance `t` from `p` along the geodesic towards `q`.
pub fn point_along(p: Polar, q: Polar, t: f64) -> Polar {
    if t == 0.0 {
        return p;
    }
    let dphi = q.phi - p.phi;
    if p.r == 0.0 {
        return Polar::new(t, q.phi);
    }
    let sin_d = dphi.sin();
    if q.r == 0.0 || sin_d == 0.0 {
        // Both points on one diameter: move along the signed line coordinate.
        let uq = if q.r == 0.0 {
            0.0
        } else {
            q.r * dphi.cos().signum()
        };
        let u = p.r + t * (uq - p.r).signum();
        return if u >= 0.0 {
            Polar::new(u, p.phi)
        } else {
            Polar::new(-u, wrap_angle(p.phi + PI))
        };
    }
    let d = distance(p, q);
    // Angle at p between p -> origin and p -> q.
    let at_p = triangle_angle(q.r, p.r, d);
    let half = (0.5 * at_p).sin();
    let sh = (0.5 * (p.r - t)).sinh();
    let r = 2.0
        * (sh * sh + p.r.sinh() * t.sinh() * half * half)
            .sqrt()
            .asinh();
    if r == 0.0 {
        return Polar::ORIGIN;
    }
    let at_o = triangle_angle(t, p.r, r);
    Polar::new(r, wrap_angle(p.phi + at_o * sin_d.signum()))
}

/// Point reached from `p` by travelling `t` along the geodesic whose
/// direction at `p` makes angle `bearing` (counter-clockwise) with the
/// outward radial direction. At the origin the outward direction is `p.phi`.
pub fn travel(p: Polar, bearing: f64, t: f64) -> Polar {
    if t == 0.0 {
        return p;
    }
    if p.r == 0.0 {
        return Polar::new(t, wrap_angle(p.phi + bearing));
    }
    let b = wrap_angle(bearing);
    // Angle at p between p -> origin and the travel direction.
    let at_p = PI - (PI - b).abs();
    let inner = PI - at_p;
    let half = (0.5 * inner).sin();
    let sh = (0.5 * (p.r - t)).sinh();
    let r = 2.0
        * (sh * sh + p.r.sinh() * t.sinh() * half * half)
            .sqrt()
            .asinh();
    if r == 0.0 {
        return Polar::ORIGIN;
    }
    let at_o = triangle_angle(t, p.r, r);
    let sign = if b < PI { 1.0 } else { -1.0 };
    Polar::new(r, wrap_angle(p.phi + sign * at_o))
}

/// Poincaré-disk chart centred at `center`, orientation preserving. The
/// reference direction is arbitrary but fixed per chart.
struct Chart {
    center: Polar,
    mobius_center: Option<Complex64>,
}

impl Chart {
    fn new(center: Polar) -> Self {
        // Near the origin the Möbius shift is well conditioned; farther out
        // the triangle with the origin is.
        let mobius_center = (center.r < 1.0).then(|| center.to_poincare());
        Self {
            center,
            mobius_center,
        }
    }

    fn coord(&self, p: Polar) -> Complex64 {
        if let Some(m) = self.mobius_center {
            let z = p.to_poincare();
            return (z - m) / (Complex64::new(1.0, 0.0) - m.conj() * z);
        }
        let c = self.center;
        let d = distance(c, p);
        if d == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let beta = if p.r == 0.0 {
            0.0
        } else {
            let ang = triangle_angle(p.r, c.r, d);
            if (p.phi - c.phi).sin() < 0.0 {
                ang
            } else {
                -ang
            }
        };
        Complex64::from_polar((0.5 * d).tanh(), beta)
    }
}

fn shares_endpoint(s: &Segment<Polar>, t: &Segment<Polar>) -> bool {
    s.endpoints()
        .iter()
        .any(|p| t.endpoints().iter().any(|q| p == q))
}

/// Both segments longer than `radius` and all four cross pairs within it.
pub fn is_independent(
    radius: f64,
    s: &Segment<Polar>,
    t: &Segment<Polar>,
) -> Result<bool, GeometryError> {
    if shares_endpoint(s, t) {
        return Err(GeometryError::EndpointCollision);
    }
    if s.length <= radius || t.length <= radius {
        return Ok(false);
    }
    Ok(s.endpoints()
        .iter()
        .all(|&p| t.endpoints().iter().all(|&q| within(p, q, radius))))
}

pub fn intersection_and_angle(
    radius: f64,
    s: &Segment<Polar>,
    t: &Segment<Polar>,
) -> Result<SegmentPair<Polar>, GeometryError> {
    if !is_independent(radius, s, t)? {
        return Err(GeometryError::NotIndependent);
    }
    pair_geometry(s, t)
}

/// Geometry of two crossing geodesic segments without the independence check.
pub(crate) fn pair_geometry(
    s: &Segment<Polar>,
    t: &Segment<Polar>,
) -> Result<SegmentPair<Polar>, GeometryError> {
    let (v1, v2) = (s.start, s.end);
    let a = s.length;
    let m = point_along(v1, v2, 0.5 * a);
    let chart = Chart::new(m);
    let zv = chart.coord(v1);
    if zv.norm() == 0.0 {
        return Err(GeometryError::NumericalDegeneracy);
    }
    // Rotate so that m -> v1 is the positive real axis.
    let rot = zv.conj() / zv.norm();
    let local = |p: Polar| chart.coord(p) * rot;
    let (za, zb) = (local(t.start), local(t.end));
    if za.im.abs() <= CHART_TOL || zb.im.abs() <= CHART_TOL {
        return Err(GeometryError::NumericalDegeneracy);
    }
    if (za.im > 0.0) == (zb.im > 0.0) {
        return Err(GeometryError::NoIntersection);
    }
    let (w1, w2, z1, z2) = if za.im > 0.0 {
        (t.start, t.end, za, zb)
    } else {
        (t.end, t.start, zb, za)
    };
    // Geodesics are straight chords in the Klein model of the same chart.
    let klein = |z: Complex64| z * (2.0 / (1.0 + z.norm_sqr()));
    let (k1, k2) = (klein(z1), klein(z2));
    let xk = k1.re - k1.im * (k2.re - k1.re) / (k2.im - k1.im);
    let half = 0.5 * a;
    // Signed hyperbolic coordinate of q along the axis, v1 at +a/2.
    let uq = xk.clamp(-1.0, 1.0).atanh();
    if uq.abs() > half {
        return Err(GeometryError::NoIntersection);
    }
    let c = half - uq;
    let q = point_along(v1, v2, c);
    let d = distance(q, w1);
    let e11 = distance(v1, w1);
    let r0 = distance(m, w1);
    let w2_r = distance(m, w2);
    let theta = triangle_angle(e11, c, d);
    let phi = triangle_angle(e11, half, r0);
    let w2_phi = TAU - triangle_angle(distance(v1, w2), half, w2_r);
    Ok(SegmentPair {
        v1,
        v2,
        w1,
        w2,
        theta,
        a,
        b: t.length,
        c,
        d,
        r0,
        phi,
        w2_r,
        w2_phi,
    })
}
