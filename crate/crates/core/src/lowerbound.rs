//! Sector families that force an induced `O_t`.
//!
//! Around a centre (the middle of the unit square, or the hyperbolic origin)
//! take `2k` annular sectors of angular width `theta0 = pi / (3k)`, sector
//! `i` starting at angle `3 i theta0`. Radii `r1 <= rho <= r2` are chosen so
//! that points in sectors `i` and `i + k` (opposite each other) are never
//! adjacent while points in any other two sectors always are. One vertex
//! from each of `t` occupied opposite pairs then induces `O_t`.
//!
//! Sectors are half-open in angle, `[3 i theta0, (3 i + 1) theta0)`; with the
//! Euclidean inner radius below, the closed version would allow two
//! opposite boundary points at distance exactly `r`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use thiserror::Error;

use crate::generators::PointSet;
use crate::geometry::{
    cosh_minus_one, euclid, hyperbolic, region_probability, wrap_angle, AnnulusSector, PlaneModel,
    Point, Polar, Vec2,
};
use crate::octahedron::OtWitness;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstructionError {
    #[error("sector families need k >= 4, got {0}")]
    TooFewSectors(usize),
    #[error("invalid construction: {0}")]
    InvalidConstruction(String),
}

/// `2k` sectors with the separation property.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionFamily {
    pub k: usize,
    pub theta0: f64,
    pub r1: f64,
    pub r2: f64,
    pub sectors: Vec<AnnulusSector>,
    pub model: PlaneModel,
}

/// `max(4, ceil(n^(1/3)))` in the Euclidean plane and
/// `max(4, ceil(n^((1 - alpha) / 3)))` in the hyperbolic one.
pub fn default_k(model: &PlaneModel) -> usize {
    let n = model.n().max(1) as f64;
    let e = match model {
        PlaneModel::Euclidean(_) => 1.0 / 3.0,
        PlaneModel::Hyperbolic(m) => (1.0 - m.alpha) / 3.0,
    };
    // Guard against n^(1/3) landing a hair above an integer.
    let k = (n.powf(e) - 1e-9).ceil() as usize;
    k.max(4)
}

/// Inner and outer radius for `theta0`.
///
/// Euclidean: `r1 = r / sqrt(2 + 2 cos theta0)`, `r2 = r / sqrt(2 + 2 cos 2 theta0)`.
/// Hyperbolic: `cosh 2 r1 = cosh R / cos^2(theta0 / 2)`, `cosh 2 r2 = (cosh R - 1) / cos^2 theta0`.
pub fn radii(model: &PlaneModel, theta0: f64) -> (f64, f64) {
    match model {
        PlaneModel::Euclidean(m) => (
            m.r / (2.0 + 2.0 * theta0.cos()).sqrt(),
            m.r / (2.0 + 2.0 * (2.0 * theta0).cos()).sqrt(),
        ),
        PlaneModel::Hyperbolic(m) => {
            let big = m.radius;
            // Work with cosh(2x) - 1 = 2 sinh^2 x to keep precision for large R.
            let c1 = (cosh_minus_one(big) + 1.0 - (0.5 * theta0).cos().powi(2))
                / (0.5 * theta0).cos().powi(2);
            let c2 = (cosh_minus_one(big) - theta0.cos().powi(2)) / theta0.cos().powi(2);
            (0.5 * acosh_1p(c1), 0.5 * acosh_1p(c2))
        }
    }
}

/// `acosh(1 + x)` without cancellation for small `x`.
fn acosh_1p(x: f64) -> f64 {
    let x = x.max(0.0);
    (x + (x * (x + 2.0)).sqrt()).ln_1p()
}

pub fn build_regions(model: &PlaneModel, k: usize) -> Result<RegionFamily, ConstructionError> {
    if k < 4 {
        return Err(ConstructionError::TooFewSectors(k));
    }
    let theta0 = PI / (3 * k) as f64;
    let (r1, r2) = radii(model, theta0);
    if !(r1 < r2) {
        return Err(ConstructionError::InvalidConstruction(format!(
            "r1 = {r1} is not below r2 = {r2}"
        )));
    }
    let center = match model {
        PlaneModel::Euclidean(_) => {
            if r2 >= 0.5 {
                return Err(ConstructionError::InvalidConstruction(format!(
                    "r2 = {r2} does not fit in the unit square"
                )));
            }
            Point::Cartesian(Vec2::new(0.5, 0.5))
        }
        PlaneModel::Hyperbolic(m) => {
            if r2 > m.radius {
                return Err(ConstructionError::InvalidConstruction(format!(
                    "r2 = {r2} exceeds the disk radius {}",
                    m.radius
                )));
            }
            Point::Polar(Polar::ORIGIN)
        }
    };
    let sectors = (0..2 * k)
        .map(|i| AnnulusSector {
            r_lo: r1,
            r_hi: r2,
            phi_lo: 3.0 * i as f64 * theta0,
            phi_hi: (3 * i + 1) as f64 * theta0,
            center,
            axis: 0.0,
        })
        .collect();
    Ok(RegionFamily {
        k,
        theta0,
        r1,
        r2,
        sectors,
        model: *model,
    })
}

impl RegionFamily {
    /// Polar coordinates of `p` about the family centre.
    fn polar(&self, p: Point) -> Option<(f64, f64)> {
        match p {
            Point::Cartesian(v) => {
                let rel = v - Vec2::new(0.5, 0.5);
                Some((rel.norm(), wrap_angle(rel.y.atan2(rel.x))))
            }
            Point::Polar(q) => Some((q.r, wrap_angle(q.phi))),
        }
    }

    /// Index of the sector containing `p`, if any.
    pub fn sector_of(&self, p: Point) -> Option<usize> {
        let (rho, psi) = self.polar(p)?;
        if rho < self.r1 || rho > self.r2 {
            return None;
        }
        let slot = (psi / self.theta0).floor() as usize;
        (slot.is_multiple_of(3) && slot / 3 < 2 * self.k).then_some(slot / 3)
    }

    /// Probability that one sampled vertex lands in a given sector.
    pub fn sector_probability(&self) -> f64 {
        region_probability(&self.model, &self.sectors[0]).expect("sectors fit the model")
    }

    /// Probability that a sector is nonempty when the vertex count is Poisson(n).
    pub fn occupancy_probability(&self) -> f64 {
        -(-(self.model.n() as f64) * self.sector_probability()).exp_m1()
    }

    /// A point drawn from the model density restricted to sector `i`.
    pub fn sample_in(&self, i: usize, rng: &mut impl Rng) -> Point {
        let psi = (3 * i) as f64 * self.theta0 + rng.random::<f64>() * self.theta0;
        match self.model {
            PlaneModel::Euclidean(_) => {
                let (a, b) = (self.r1 * self.r1, self.r2 * self.r2);
                let rho = (a + rng.random::<f64>() * (b - a)).sqrt();
                Point::Cartesian(Vec2::new(0.5, 0.5) + Vec2::from_polar(rho, psi))
            }
            PlaneModel::Hyperbolic(m) => {
                let (a, b) = (m.radial_cdf(self.r1), m.radial_cdf(self.r2));
                let rho = m
                    .radial_quantile(a + rng.random::<f64>() * (b - a))
                    .clamp(self.r1, self.r2);
                Point::Polar(Polar::new(rho, psi))
            }
        }
    }

    fn adjacent(&self, p: Point, q: Point) -> bool {
        match (self.model, p, q) {
            (PlaneModel::Euclidean(m), Point::Cartesian(a), Point::Cartesian(b)) => {
                euclid::within(a, b, m.r)
            }
            (PlaneModel::Hyperbolic(m), Point::Polar(a), Point::Polar(b)) => {
                hyperbolic::within(a, b, m.radius)
            }
            _ => unreachable!("family points match the model"),
        }
    }
}

/// Outcome of [`check_separation`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub samples: usize,
    pub violations: usize,
    /// Smallest `|dist - threshold|` seen, in the plane's distance units.
    pub worst_margin: f64,
}

/// Draws `samples` point pairs from random sector pairs `(i, j)`, `i < k`,
/// and counts pairs that are adjacent when `j = i + k` or non-adjacent
/// otherwise.
pub fn check_separation(family: &RegionFamily, samples: usize, seed: u64) -> SeparationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = family.k;
    let mut report = SeparationReport {
        samples,
        violations: 0,
        worst_margin: f64::INFINITY,
    };
    for s in 0..samples {
        let i = rng.random_range(0..k);
        // Every other sample tests the opposite pair, which is the rarer case.
        let j = if s % 2 == 0 {
            i + k
        } else {
            rng.random_range(0..2 * k)
        };
        let p = family.sample_in(i, &mut rng);
        let q = family.sample_in(j, &mut rng);
        let d = family
            .model
            .distance(p, q)
            .expect("family points match the model");
        let far = j == i + k;
        if far == family.adjacent(p, q) {
            report.violations += 1;
        }
        report.worst_margin = report
            .worst_margin
            .min((d - family.model.threshold()).abs());
    }
    report
}

/// Counts opposite sector pairs that both hold a point and returns the
/// induced `O_t` they force, taking the lowest-index point of each sector.
pub fn occupied_pairs(points: &PointSet, family: &RegionFamily) -> (usize, OtWitness) {
    let mut first = vec![None::<u32>; 2 * family.k];
    for i in 0..points.len() {
        if let Some(s) = family.sector_of(points.get(i)) {
            first[s].get_or_insert(i as u32);
        }
    }
    let pairs: Vec<(u32, u32)> = (0..family.k)
        .filter_map(|i| Some((first[i]?, first[i + family.k]?)))
        .collect();
    (pairs.len(), OtWitness { pairs })
}

/// Sector probability of the family's leading-order term: `(3/32) r^2 theta0^3`
/// in the Euclidean plane.
pub fn euclid_leading_term(r: f64, theta0: f64) -> f64 {
    3.0 / 32.0 * r * r * theta0.powi(3)
}

/// Full angle span check: sectors are disjoint and lie within one turn.
pub fn sectors_disjoint(family: &RegionFamily) -> bool {
    family.sectors.windows(2).all(|w| w[0].phi_hi < w[1].phi_lo)
        && family.sectors.last().is_none_or(|s| s.phi_hi <= TAU)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::build_graph;
    use crate::octahedron::verify_witness;
    use crate::Execution;

    #[test]
    fn euclid_family_radii() {
        let model = PlaneModel::euclidean(1000, 0.5).unwrap();
        let f = build_regions(&model, 4).unwrap();
        assert!((f.theta0 - PI / 12.0).abs() < 1e-15);
        let r1 = 0.5 / (2.0 + 2.0 * (PI / 12.0).cos()).sqrt();
        let r2 = 0.5 / (2.0 + 2.0 * (PI / 6.0).cos()).sqrt();
        assert!((f.r1 - r1).abs() < 1e-15 && (f.r2 - r2).abs() < 1e-15);
        assert!(f.r1 < f.r2);
        assert!(sectors_disjoint(&f));
        assert_eq!(f.sectors.len(), 8);
    }

    #[test]
    fn hyperbolic_radii_solve_their_equations() {
        let model = PlaneModel::hyperbolic(10_000, 2.5, 0.0).unwrap();
        let PlaneModel::Hyperbolic(m) = model else {
            unreachable!()
        };
        let f = build_regions(&model, default_k(&model)).unwrap();
        let c = (f.theta0 / 2.0).cos().powi(2);
        assert!(((2.0 * f.r1).cosh() * c / m.radius.cosh() - 1.0).abs() < 1e-12);
        let c = f.theta0.cos().powi(2);
        assert!(((2.0 * f.r2).cosh() * c / (m.radius.cosh() - 1.0) - 1.0).abs() < 1e-12);
        assert!(f.r1 < f.r2 && f.r2 <= m.radius);
    }

    #[test]
    fn small_k_rejected() {
        let model = PlaneModel::euclidean(10, 0.3).unwrap();
        assert_eq!(
            build_regions(&model, 3),
            Err(ConstructionError::TooFewSectors(3))
        );
        // r = 0.99 pushes r2 past the square.
        let model = PlaneModel::euclidean(10, 0.99).unwrap();
        assert!(matches!(
            build_regions(&model, 4),
            Err(ConstructionError::InvalidConstruction(_))
        ));
    }

    #[test]
    fn worst_case_corners() {
        let model = PlaneModel::euclidean(100, 0.5).unwrap();
        let f = build_regions(&model, 4).unwrap();
        let o = Vec2::new(0.5, 0.5);
        // Opposite sectors, both at the inner radius, angular gap just above pi - theta0.
        let eps = 1e-9;
        let p = o + Vec2::from_polar(f.r1, f.theta0 - eps);
        let q = o + Vec2::from_polar(f.r1, PI);
        assert!(euclid::distance(p, q) > 0.5);
        // Neighbouring sectors at the outer radius, gap pi - 2 theta0.
        let p = o + Vec2::from_polar(f.r2, 0.0);
        let q = o + Vec2::from_polar(f.r2, PI - 2.0 * f.theta0);
        assert!(euclid::distance(p, q) <= 0.5 + 1e-15);
    }

    #[test]
    fn separation_holds() {
        let e = build_regions(&PlaneModel::euclidean(100, 0.5).unwrap(), 4).unwrap();
        assert_eq!(check_separation(&e, 10_000, 1).violations, 0);
        for gamma in [2.2, 2.5, 2.8] {
            let model = PlaneModel::hyperbolic(10_000, gamma, 0.0).unwrap();
            let h = build_regions(&model, default_k(&model)).unwrap();
            assert_eq!(check_separation(&h, 10_000, 2).violations, 0);
        }
    }

    #[test]
    fn occupied_pairs_examples() {
        let model = PlaneModel::euclidean(2, 0.5).unwrap();
        let f = build_regions(&model, 4).unwrap();
        let (t, w) = occupied_pairs(&PointSet::Cartesian(vec![]), &f);
        assert_eq!((t, w.t()), (0, 0));
        let mid = (f.r1 + f.r2) / 2.0;
        let o = Vec2::new(0.5, 0.5);
        let pts = PointSet::Cartesian(vec![
            o + Vec2::from_polar(mid, f.theta0 / 2.0),
            o + Vec2::from_polar(mid, PI + f.theta0 / 2.0),
        ]);
        let (t, w) = occupied_pairs(&pts, &f);
        assert_eq!(t, 1);
        let g = build_graph(pts, &model, Execution::Sequential).unwrap();
        assert!(verify_witness(&g.graph, &w));
    }

    #[test]
    fn sector_membership_is_half_open() {
        let f = build_regions(&PlaneModel::euclidean(2, 0.5).unwrap(), 4).unwrap();
        let mid = (f.r1 + f.r2) / 2.0;
        let o = Vec2::new(0.5, 0.5);
        assert_eq!(
            f.sector_of(Point::Cartesian(o + Vec2::from_polar(mid, 0.0))),
            Some(0)
        );
        assert_eq!(
            f.sector_of(Point::Cartesian(o + Vec2::from_polar(mid, 1.5 * f.theta0))),
            None
        );
        assert_eq!(
            f.sector_of(Point::Cartesian(o + Vec2::from_polar(mid, 3.5 * f.theta0))),
            Some(1)
        );
        assert_eq!(f.sector_of(Point::Cartesian(o)), None);
    }

    #[test]
    fn euclid_sector_probability_approaches_leading_term() {
        let mut prev = f64::INFINITY;
        for theta0 in [0.1, 0.05, 0.01] {
            let model = PlaneModel::euclidean(10, 0.4).unwrap();
            let (r1, r2) = radii(&model, theta0);
            let exact = 0.5 * (r2 * r2 - r1 * r1) * theta0;
            let gap = (exact / euclid_leading_term(0.4, theta0) - 1.0).abs();
            assert!(gap < prev);
            prev = gap;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn hyperbolic_sector_probability_scale() {
        // F(U1) n^alpha / theta0^3 stays bounded away from zero.
        let mut lo = f64::INFINITY;
        for n in [1_000usize, 10_000, 100_000, 1_000_000] {
            for gamma in [2.2, 2.5, 2.8] {
                let model = PlaneModel::hyperbolic(n, gamma, 0.0).unwrap();
                let PlaneModel::Hyperbolic(m) = model else {
                    unreachable!()
                };
                for k in 4..40 {
                    let Ok(f) = build_regions(&model, k) else {
                        continue;
                    };
                    if f.theta0 <= 1.0 / (n as f64).sqrt() {
                        continue;
                    }
                    let scaled =
                        f.sector_probability() * (n as f64).powf(m.alpha) / f.theta0.powi(3);
                    lo = lo.min(scaled);
                }
            }
        }
        assert!(lo > 1e-3, "{lo}");
    }
}
