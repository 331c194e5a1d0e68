use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};

use super::{GeometryError, Segment, SegmentPair, EUCLID_TOL};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 2D cross product.
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn from_polar(rho: f64, psi: f64) -> Self {
        Self::new(rho * psi.cos(), rho * psi.sin())
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

pub fn distance(p: Vec2, q: Vec2) -> f64 {
    (p - q).norm()
}

/// Edge predicate `dist(p, q) <= r`, evaluated on squared lengths.
#[inline]
pub fn within(p: Vec2, q: Vec2, r: f64) -> bool {
    let dx = p.x - q.x;
    let dy = p.y - q.y;
    dx * dx + dy * dy <= r * r
}

fn shares_endpoint(s: &Segment<Vec2>, t: &Segment<Vec2>) -> bool {
    s.endpoints()
        .iter()
        .any(|p| t.endpoints().iter().any(|q| p == q))
}

/// Both segments longer than `r` and all four cross pairs within `r`.
pub fn is_independent(r: f64, s: &Segment<Vec2>, t: &Segment<Vec2>) -> Result<bool, GeometryError> {
    if shares_endpoint(s, t) {
        return Err(GeometryError::EndpointCollision);
    }
    if s.length <= r || t.length <= r {
        return Ok(false);
    }
    Ok(s.endpoints()
        .iter()
        .all(|&p| t.endpoints().iter().all(|&q| within(p, q, r))))
}

/// Computes the intersection record of two independent segments.
pub fn intersection_and_angle(
    r: f64,
    s: &Segment<Vec2>,
    t: &Segment<Vec2>,
) -> Result<SegmentPair<Vec2>, GeometryError> {
    if !is_independent(r, s, t)? {
        return Err(GeometryError::NotIndependent);
    }
    pair_geometry(s, t)
}

/// Geometry of two crossing segments without the independence check.
pub(crate) fn pair_geometry(
    s: &Segment<Vec2>,
    t: &Segment<Vec2>,
) -> Result<SegmentPair<Vec2>, GeometryError> {
    let (v1, v2) = (s.start, s.end);
    let a = s.length;
    let m = (v1 + v2) * 0.5;
    // Frame at m with x-axis along m -> v1.
    let ux = (v1 - m) * (1.0 / (v1 - m).norm());
    let local = |p: Vec2| {
        let rel = p - m;
        Vec2::new(rel.dot(ux), ux.cross(rel))
    };
    let scale = a.max(t.length);
    let (pa, pb) = (local(t.start), local(t.end));
    if pa.y.abs() <= EUCLID_TOL * scale || pb.y.abs() <= EUCLID_TOL * scale {
        return Err(GeometryError::NumericalDegeneracy);
    }
    if (pa.y > 0.0) == (pb.y > 0.0) {
        return Err(GeometryError::NoIntersection);
    }
    let (w1, w2, l1, l2) = if pa.y > 0.0 {
        (t.start, t.end, pa, pb)
    } else {
        (t.end, t.start, pb, pa)
    };
    let qx = l1.x - l1.y * (l2.x - l1.x) / (l2.y - l1.y);
    if qx.abs() > a / 2.0 {
        return Err(GeometryError::NoIntersection);
    }
    let to_w1 = Vec2::new(l1.x - qx, l1.y);
    let theta = to_w1.y.atan2(to_w1.x);
    let w2_phi = l2.y.atan2(l2.x).rem_euclid(std::f64::consts::TAU);
    Ok(SegmentPair {
        v1,
        v2,
        w1,
        w2,
        theta,
        a,
        b: t.length,
        c: a / 2.0 - qx,
        d: to_w1.norm(),
        r0: l1.norm(),
        phi: l1.y.atan2(l1.x),
        w2_r: l2.norm(),
        w2_phi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn seg(a: (f64, f64), b: (f64, f64)) -> Segment<Vec2> {
        Segment::euclid(Vec2::new(a.0, a.1), Vec2::new(b.0, b.1))
    }

    #[test]
    fn three_four_five() {
        assert!((distance(Vec2::new(0.0, 0.0), Vec2::new(0.3, 0.4)) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn independence_examples() {
        let s = seg((0.0, 0.0), (1.2, 0.0));
        let t = seg((0.6, 0.5), (0.6, -0.6));
        // |v1 w1|^2 = 0.61, |v1 w2|^2 = 0.72, lengths 1.2 and 1.1.
        assert_eq!(is_independent(1.0, &s, &t), Ok(true));
        assert_eq!(
            is_independent(1.0, &s, &s),
            Err(GeometryError::EndpointCollision)
        );
        let far = seg((0.0, 5.0), (1.5, 5.0));
        assert_eq!(is_independent(1.0, &s, &far), Ok(false));
        assert_eq!(
            intersection_and_angle(1.0, &s, &far),
            Err(GeometryError::NotIndependent)
        );
    }

    #[test]
    fn perpendicular_through_origin() {
        let s = seg((-0.6, 0.0), (0.6, 0.0));
        let t = seg((0.0, -0.6), (0.0, 0.6));
        let p = intersection_and_angle(1.0, &s, &t).unwrap();
        assert!((p.theta - FRAC_PI_2).abs() < 1e-12);
        assert!((p.c - 0.6).abs() < 1e-12);
        assert!((p.d - 0.6).abs() < 1e-12);
        // v1 = (-0.6, 0); counter-clockwise next is (0, -0.6).
        assert_eq!(p.w1, Vec2::new(0.0, -0.6));
    }

    #[test]
    fn reversed_order_gives_supplement() {
        let s = seg((0.1, 0.2), (0.9, 0.5));
        let t = seg((0.3, 0.7), (0.6, 0.05));
        let st = pair_geometry(&s, &t).unwrap();
        let ts = pair_geometry(&t, &s).unwrap();
        assert!((st.theta + ts.theta - PI).abs() < 1e-12);
        // Swapping the stored endpoints of s leaves the directed angle unchanged.
        let rs = pair_geometry(&s.reversed(), &t).unwrap();
        assert!((rs.theta - st.theta).abs() < 1e-12);
    }

    #[test]
    fn collinear_is_degenerate() {
        let s = seg((0.0, 0.0), (1.0, 0.0));
        let t = seg((0.5, 0.0), (0.5, 1.0));
        assert_eq!(
            pair_geometry(&s, &t),
            Err(GeometryError::NumericalDegeneracy)
        );
    }
}
