//! Monte-Carlo checks of the segment lemmas.
//!
//! Every check draws random configurations, keeps those that meet the
//! statement's hypotheses (the admissible ones) and records violations
//! together with the smallest slack seen; a positive slack means the
//! inequality held with room to spare. Work is cut into fixed chunks, each
//! with its own ChaCha8 stream, so a report does not depend on the number
//! of threads.
//!
//! [`sample_independent_pair`] rejects over four uniform points. The suites
//! use a cheaper proposal with the same support: two segments through a
//! random crossing point at a random angle, with random arm lengths, kept
//! when all four endpoints lie in the domain and the pair is independent.
//! In the hyperbolic plane this is the only practical option, since plain
//! rejection accepts about one draw in `10^5`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, PI, TAU};
use thiserror::Error;

use crate::exec::{map_range, Execution};
use crate::geometry::{
    delta, euclid, hyperbolic, GeometryError, HyperbolicModel, PlaneModel, Point, Polar, Segment,
    SegmentPair, Vec2,
};
use crate::lowerbound::{build_regions, check_separation, RegionFamily};

/// Rejection attempts before a sampler gives up.
pub const MAX_ATTEMPTS: u64 = 1_000_000;
/// Slack below `-TOL` counts as a violation.
pub const TOL: f64 = 1e-9;
/// Chunks evaluated per round of the driver.
const ROUND: usize = 32;
/// Sector count of the planted sets used by the set-based checks.
const PLANTED_K: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LemmaError {
    #[error("no independent pair found in {0} attempts")]
    RejectionExhausted(u64),
    #[error("segments {0} and {1} are not independent")]
    NotPairwiseIndependent(usize, usize),
    #[error("{0} does not apply to this plane")]
    WrongPlane(&'static str),
    #[error("construction failed: {0}")]
    Construction(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// The checked statements.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LemmaId {
    /// Opposite planted sectors are non-adjacent, all others adjacent.
    EuclidSeparation,
    /// Independent segments cross, and `angle(s, s') + angle(s', s) = pi`.
    EuclidCrossing,
    /// `r0` stays in the annulus when the directed angle is at most `theta0`.
    EuclidAnnulus,
    /// `w1` or `w2` lies in one of the two sectors of that annulus.
    EuclidRegion,
    /// `r0^2 = (a/2 - c)^2 + d^2 + 2 (a/2 - c) d cos theta`.
    EuclidLawOfCosines,
    /// Bucketing by angle finds a large set with pairwise angles `<= pi / k`.
    EuclidPigeonhole,
    /// `angle(s', s'') = angle(s0, s'') - angle(s0, s')` on ordered triples.
    EuclidAngleSum,
    HypSeparation,
    HypCrossing,
    /// `R < a, b <= R + 2 Delta(theta)`.
    HypLength,
    /// `e^c, e^d >= (sin theta / 2) e^{R/2} / (1 + e^{-2R})`.
    HypSplit,
    /// `cosh(R/2 - Delta)(1 + cos theta)/2 <= cosh r0`.
    HypMidpointLower,
    /// `cosh r0 <= cosh(R/2 + 2 Delta)`. Fails when the crossing point lies
    /// past the midpoint of `s` as seen from `v1`.
    HypMidpointUpper,
    /// The angle-free version of the midpoint bound, with `Delta(pi/2)`.
    HypMidpointCoarse,
    /// `cosh r0 > cosh(R/2) / 8` and `r0 > R/2 - 3 ln 2`.
    HypMidpointFloor,
    /// `sin phi >= sin^2 theta / 9` for `theta > 1/sqrt(n)`.
    HypPolarSine,
    /// A steep crossing keeps the other segment out of `B_0(R/2)`.
    HypCoreExclusion,
    HypPigeonhole,
    /// Three-way bucketing around a segment that reaches into the core.
    HypTrichotomy,
    /// `angle(s', s'') <= angle(s0, s'') - angle(s0, s')`.
    HypAngleSum,
}

impl LemmaId {
    pub const ALL: [LemmaId; 20] = [
        LemmaId::EuclidSeparation,
        LemmaId::EuclidCrossing,
        LemmaId::EuclidAnnulus,
        LemmaId::EuclidRegion,
        LemmaId::EuclidLawOfCosines,
        LemmaId::EuclidPigeonhole,
        LemmaId::EuclidAngleSum,
        LemmaId::HypSeparation,
        LemmaId::HypCrossing,
        LemmaId::HypLength,
        LemmaId::HypSplit,
        LemmaId::HypMidpointLower,
        LemmaId::HypMidpointUpper,
        LemmaId::HypMidpointCoarse,
        LemmaId::HypMidpointFloor,
        LemmaId::HypPolarSine,
        LemmaId::HypCoreExclusion,
        LemmaId::HypPigeonhole,
        LemmaId::HypTrichotomy,
        LemmaId::HypAngleSum,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LemmaId::EuclidSeparation => "euclid-separation",
            LemmaId::EuclidCrossing => "euclid-crossing",
            LemmaId::EuclidAnnulus => "euclid-annulus",
            LemmaId::EuclidRegion => "euclid-region",
            LemmaId::EuclidLawOfCosines => "euclid-law-of-cosines",
            LemmaId::EuclidPigeonhole => "euclid-pigeonhole",
            LemmaId::EuclidAngleSum => "euclid-angle-sum",
            LemmaId::HypSeparation => "hyp-separation",
            LemmaId::HypCrossing => "hyp-crossing",
            LemmaId::HypLength => "hyp-length",
            LemmaId::HypSplit => "hyp-split",
            LemmaId::HypMidpointLower => "hyp-midpoint-lower",
            LemmaId::HypMidpointUpper => "hyp-midpoint-upper",
            LemmaId::HypMidpointCoarse => "hyp-midpoint-coarse",
            LemmaId::HypMidpointFloor => "hyp-midpoint-floor",
            LemmaId::HypPolarSine => "hyp-polar-sine",
            LemmaId::HypCoreExclusion => "hyp-core-exclusion",
            LemmaId::HypPigeonhole => "hyp-pigeonhole",
            LemmaId::HypTrichotomy => "hyp-trichotomy",
            LemmaId::HypAngleSum => "hyp-angle-sum",
        }
    }

    pub fn parse(s: &str) -> Option<LemmaId> {
        LemmaId::ALL.into_iter().find(|id| id.name() == s)
    }

    pub fn is_euclidean(self) -> bool {
        self.name().starts_with("euclid")
    }

    /// Statements that only hold for "sufficiently large" `n` with no
    /// stated threshold; their violations are reported, not failed.
    pub fn informational(self) -> bool {
        matches!(self, LemmaId::HypMidpointCoarse | LemmaId::HypMidpointFloor)
    }

    fn salt(self) -> u64 {
        let i = LemmaId::ALL
            .iter()
            .position(|&x| x == self)
            .expect("listed") as u64;
        (i + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
    }
}

impl std::fmt::Display for LemmaId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub id: LemmaId,
    pub attempted: u64,
    pub admissible: u64,
    pub violations: u64,
    /// Smallest slack over admissible samples; `inf` when none were admissible.
    pub worst_margin: f64,
    pub informational: bool,
}

impl LemmaReport {
    /// No violations and at least `target` admissible samples.
    pub fn passes(&self, target: u64) -> bool {
        self.violations == 0 && self.admissible >= target
    }
}

/// Sample budget and parameters shared by the checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    /// Admissible samples wanted per statement.
    pub target: u64,
    /// Give up after `attempt_factor * target` draws.
    pub attempt_factor: u64,
    pub seed: u64,
    /// Angle bound of the Euclidean annulus checks.
    pub theta0: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            target: 100_000,
            attempt_factor: 4,
            seed: 0,
            theta0: PI / 3.0,
        }
    }
}

/// Geometry record of a sampled independent pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SampledPair {
    Euclid(SegmentPair<Vec2>),
    Hyperbolic(SegmentPair<Polar>),
}

/// Plane-specific primitives used by the generic checks.
trait PlanePoint: Copy + PartialEq + Send + Sync + 'static {
    fn segment(a: Self, b: Self) -> Segment<Self>;
    fn independent(
        threshold: f64,
        s: &Segment<Self>,
        t: &Segment<Self>,
    ) -> Result<bool, GeometryError>;
    fn geometry(s: &Segment<Self>, t: &Segment<Self>) -> Result<SegmentPair<Self>, GeometryError>;
}

impl PlanePoint for Vec2 {
    fn segment(a: Self, b: Self) -> Segment<Self> {
        Segment::euclid(a, b)
    }
    fn independent(
        threshold: f64,
        s: &Segment<Self>,
        t: &Segment<Self>,
    ) -> Result<bool, GeometryError> {
        euclid::is_independent(threshold, s, t)
    }
    fn geometry(s: &Segment<Self>, t: &Segment<Self>) -> Result<SegmentPair<Self>, GeometryError> {
        euclid::pair_geometry(s, t)
    }
}

impl PlanePoint for Polar {
    fn segment(a: Self, b: Self) -> Segment<Self> {
        Segment::hyperbolic(a, b)
    }
    fn independent(
        threshold: f64,
        s: &Segment<Self>,
        t: &Segment<Self>,
    ) -> Result<bool, GeometryError> {
        hyperbolic::is_independent(threshold, s, t)
    }
    fn geometry(s: &Segment<Self>, t: &Segment<Self>) -> Result<SegmentPair<Self>, GeometryError> {
        hyperbolic::pair_geometry(s, t)
    }
}

// ---------------------------------------------------------------------------
// Samplers

fn draw_euclid(r: f64, rng: &mut impl Rng) -> Result<(Segment<Vec2>, Segment<Vec2>), LemmaError> {
    for _ in 0..MAX_ATTEMPTS {
        let mut p = || Vec2::new(rng.random(), rng.random());
        let (v1, v2, w1, w2) = (p(), p(), p(), p());
        let (s, t) = (Segment::euclid(v1, v2), Segment::euclid(w1, w2));
        if euclid::is_independent(r, &s, &t)? {
            return Ok((s, t));
        }
    }
    Err(LemmaError::RejectionExhausted(MAX_ATTEMPTS))
}

/// Arm lengths `[c, d, a - c, b - d]` of two segments crossing at angle
/// `theta`, drawn one after another from the interval the earlier arms
/// leave open. The rays sit at bearings `0, theta, pi, pi + theta`, so
/// neighbouring rays meet at `theta` and `pi - theta` alternately.
///
/// `reach(x, beta)` is the longest arm that keeps its endpoint within the
/// threshold of the endpoint of an arm of length `x` at angle `beta`, and
/// `sum(beta)` bounds the total of two such arms. `room[i]` is the longest
/// arm along ray `i` that stays in the domain. Returns `None` when some
/// interval is empty.
fn draw_arms(
    rng: &mut impl Rng,
    theta: f64,
    threshold: f64,
    room: [f64; 4],
    reach: impl Fn(f64, f64) -> f64,
    sum: impl Fn(f64) -> f64,
) -> Option<[f64; 4]> {
    // Two opposite arms add up to more than the threshold and each arm has
    // two neighbours, so every arm lies in (threshold - h, h).
    let h = 0.5 * (sum(theta) + sum(PI - theta) - threshold);
    let lo = (threshold - h).max(0.0);
    let mut pick = |lo: f64, hi: f64| (lo < hi).then(|| hi - (hi - lo) * rng.random::<f64>());
    let x1 = pick(lo, room[0].min(h))?;
    let x2 = pick(lo, room[1].min(h).min(reach(x1, theta)))?;
    let x3 = pick(
        (threshold - x1).max(lo),
        room[2].min(h).min(reach(x2, PI - theta)),
    )?;
    let x4 = pick(
        (threshold - x2).max(lo),
        room[3]
            .min(h)
            .min(reach(x3, theta))
            .min(reach(x1, PI - theta)),
    )?;
    Some([x1, x2, x3, x4])
}

/// Longest `t >= 0` with `t^2 + x^2 - 2 t x cos beta <= r^2`, padded outward.
fn euclid_reach(r: f64, x: f64, beta: f64) -> f64 {
    let disc = r * r - (x * beta.sin()).powi(2);
    if disc < 0.0 {
        return -1.0;
    }
    x * beta.cos() + disc.sqrt() + 1e-12
}

/// Longest `t >= 0` with `cosh x cosh t - sinh x sinh t cos beta <= cosh R`.
fn hyperbolic_reach(cosh_big: f64, x: f64, beta: f64) -> f64 {
    // A cosh t - B sinh t = sqrt(A^2 - B^2) cosh(t - atanh(B/A))
    let (a, b) = (x.cosh(), x.sinh() * beta.cos());
    let norm = (1.0 + (x.sinh() * beta.sin()).powi(2)).sqrt();
    (b / a).atanh() + (cosh_big / norm).acosh() + 1e-9
}

/// Distance from `q` to the boundary of the unit square along `bearing`.
fn square_room(q: Vec2, bearing: f64) -> f64 {
    let (dx, dy) = (bearing.cos(), bearing.sin());
    let along = |p: f64, d: f64| {
        if d > 0.0 {
            (1.0 - p) / d
        } else if d < 0.0 {
            -p / d
        } else {
            f64::INFINITY
        }
    };
    along(q.x, dx).min(along(q.y, dy))
}

/// Independent Euclidean pair built around a random crossing point at
/// directed angle `theta` drawn uniformly from `angles`.
fn draw_euclid_crossing(
    r: f64,
    angles: (f64, f64),
    rng: &mut impl Rng,
) -> Result<(Segment<Vec2>, Segment<Vec2>), LemmaError> {
    for _ in 0..MAX_ATTEMPTS {
        let q = Vec2::new(rng.random(), rng.random());
        let psi = rng.random::<f64>() * TAU;
        let theta = angles.0 + rng.random::<f64>() * (angles.1 - angles.0);
        if theta <= 0.0 || theta >= PI {
            continue;
        }
        let bearings = [psi, psi + theta, psi + PI, psi + theta + PI];
        let room = bearings.map(|b| square_room(q, b));
        let Some(x) = draw_arms(
            rng,
            theta,
            r,
            room,
            |x, beta| euclid_reach(r, x, beta),
            // |p - q|^2 >= (x + y)^2 sin^2(beta / 2)
            |beta| r / (0.5 * beta).sin() + 1e-12,
        ) else {
            continue;
        };
        let end = |i: usize| {
            let p = q + Vec2::from_polar(x[i], bearings[i]);
            Vec2::new(p.x.clamp(0.0, 1.0), p.y.clamp(0.0, 1.0))
        };
        let (s, t) = (
            Segment::euclid(end(0), end(2)),
            Segment::euclid(end(1), end(3)),
        );
        if euclid::is_independent(r, &s, &t)? {
            return Ok((s, t));
        }
    }
    Err(LemmaError::RejectionExhausted(MAX_ATTEMPTS))
}

/// Independent hyperbolic pair built around a random crossing point. With
/// `core`, `s` must have an endpoint in `B_0(R/2)`.
fn draw_hyperbolic(
    m: &HyperbolicModel,
    core: bool,
    rng: &mut impl Rng,
) -> Result<(Segment<Polar>, Segment<Polar>), LemmaError> {
    let big = m.radius;
    let cosh_big = big.cosh();
    for _ in 0..MAX_ATTEMPTS {
        let theta = rng.random::<f64>() * PI;
        if theta <= 0.0 {
            continue;
        }
        let q = Polar::new(rng.random::<f64>() * big, rng.random::<f64>() * TAU);
        let psi = rng.random::<f64>() * TAU;
        let bearings = [psi, psi + theta, psi + PI, psi + theta + PI];
        // The ray at bearing b makes angle pi - b with the direction to the origin.
        let room = bearings.map(|b| hyperbolic_reach(cosh_big, q.r, PI - b));
        let Some(x) = draw_arms(
            rng,
            theta,
            big,
            room,
            |x, beta| hyperbolic_reach(cosh_big, x, beta),
            // cosh dist >= cosh(x + y) (1 - cos beta) / 2
            |beta| (cosh_big / (0.5 * beta).sin().powi(2)).acosh() + 1e-9,
        ) else {
            continue;
        };
        let end = |i: usize| {
            let p = hyperbolic::travel(q, bearings[i], x[i]);
            Polar::new(p.r.min(big), p.phi)
        };
        let (v1, w1, v2, w2) = (end(0), end(1), end(2), end(3));
        if core && v1.r >= 0.5 * big && v2.r >= 0.5 * big {
            continue;
        }
        let (s, t) = (Segment::hyperbolic(v1, v2), Segment::hyperbolic(w1, w2));
        if hyperbolic::is_independent(big, &s, &t)? {
            return Ok((s, t));
        }
    }
    Err(LemmaError::RejectionExhausted(MAX_ATTEMPTS))
}

/// Rejection-samples one independent pair and returns its geometry.
pub fn sample_independent_pair(model: &PlaneModel, seed: u64) -> Result<SampledPair, LemmaError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match model {
        PlaneModel::Euclidean(m) => {
            let (s, t) = draw_euclid(m.r, &mut rng)?;
            Ok(SampledPair::Euclid(euclid::pair_geometry(&s, &t)?))
        }
        PlaneModel::Hyperbolic(m) => {
            let (s, t) = draw_hyperbolic(m, false, &mut rng)?;
            Ok(SampledPair::Hyperbolic(hyperbolic::pair_geometry(&s, &t)?))
        }
    }
}

/// `t` pairwise independent segments from a planted family, moved by a
/// random rigid motion. Returns `None` when the moved set leaves the
/// domain or rounding broke independence.
fn draw_planted_set<P: PlanePoint>(
    family: &RegionFamily,
    t: usize,
    place: impl Fn(f64, f64) -> Option<P>,
    rng: &mut impl Rng,
) -> Option<Vec<Segment<P>>> {
    let k = family.k;
    let mut chosen: Vec<usize> = (0..k).collect();
    for i in 0..t {
        let j = rng.random_range(i..k);
        chosen.swap(i, j);
    }
    let mut point_in = |i: usize| {
        let psi = (3 * i) as f64 * family.theta0 + rng.random::<f64>() * family.theta0;
        let rho = family.r1 + rng.random::<f64>() * (family.r2 - family.r1);
        place(rho, psi)
    };
    let mut segs = Vec::with_capacity(t);
    for &i in &chosen[..t] {
        let a = point_in(i)?;
        let b = point_in(i + k)?;
        segs.push(P::segment(a, b));
    }
    let thr = family.model.threshold();
    for i in 0..t {
        for j in i + 1..t {
            if !P::independent(thr, &segs[i], &segs[j]).ok()? {
                return None;
            }
        }
    }
    Some(segs)
}

fn planted_euclid(
    family: &RegionFamily,
    t: usize,
    rng: &mut impl Rng,
) -> Option<Vec<Segment<Vec2>>> {
    let spare = 1.0 - 2.0 * family.r2;
    let c = Vec2::new(
        family.r2 + rng.random::<f64>() * spare,
        family.r2 + rng.random::<f64>() * spare,
    );
    let turn = rng.random::<f64>() * TAU;
    draw_planted_set(
        family,
        t,
        |rho, psi| Some(c + Vec2::from_polar(rho, psi + turn)),
        rng,
    )
}

fn planted_hyperbolic(
    family: &RegionFamily,
    t: usize,
    rng: &mut impl Rng,
) -> Option<Vec<Segment<Polar>>> {
    let big = family.model.threshold();
    let c = Polar::new(rng.random::<f64>() * 0.5 * big, rng.random::<f64>() * TAU);
    let turn = rng.random::<f64>() * TAU;
    draw_planted_set(
        family,
        t,
        |rho, psi| {
            let p = hyperbolic::travel(c, psi + turn, rho);
            (p.r <= big).then_some(p)
        },
        rng,
    )
}

// ---------------------------------------------------------------------------
// Single-configuration checks

/// Margins of the Euclidean annulus statements for one pair; positive
/// means the statement held.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnulusVerdict {
    /// `angle(s, s') <= theta0 <= pi / 3`.
    pub admissible: bool,
    /// `min(r0 - r1, r2 - r0) / r`.
    pub annulus_margin: f64,
    /// Largest margin of `w1` in the first sector or `w2` in the second.
    pub region_margin: f64,
}

/// Inner and outer radius of the Euclidean annulus for `theta0`.
pub fn euclid_annulus_radii(r: f64, theta0: f64) -> (f64, f64) {
    let c = theta0.cos();
    ((c - 0.5) * c.sqrt() * r, (1.5 - c) * r)
}

pub fn check_euclid_annulus(pair: &SegmentPair<Vec2>, r: f64, theta0: f64) -> AnnulusVerdict {
    let admissible = theta0 <= PI / 3.0 + TOL && pair.theta <= theta0;
    let (r1, r2) = euclid_annulus_radii(r, theta0);
    let annulus_margin = (pair.r0 - r1).min(r2 - pair.r0) / r;
    let in_first = ((pair.r0 - r1) / r)
        .min((r2 - pair.r0) / r)
        .min(pair.phi)
        .min(theta0 - pair.phi);
    let in_second = ((pair.w2_r - r1) / r)
        .min((r2 - pair.w2_r) / r)
        .min(pair.w2_phi - PI)
        .min(PI + theta0 - pair.w2_phi);
    AnnulusVerdict {
        admissible,
        annulus_margin,
        region_margin: in_first.max(in_second),
    }
}

/// `ln cosh x` without overflow.
fn ln_cosh(x: f64) -> f64 {
    let x = x.abs();
    x + (-2.0 * x).exp().ln_1p() - LN_2
}

/// Margins of the three hyperbolic segment bounds for one pair, in log units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentBoundsVerdict {
    pub length_margin: f64,
    pub split_margin: f64,
    pub midpoint_lower_margin: f64,
    pub midpoint_upper_margin: f64,
}

pub fn check_hyp_segment_bounds(pair: &SegmentPair<Polar>, radius: f64) -> SegmentBoundsVerdict {
    let big = radius;
    let th = pair.theta;
    let dl = delta(th, big);
    let length_margin = (pair.a - big)
        .min(pair.b - big)
        .min(big + 2.0 * dl - pair.a)
        .min(big + 2.0 * dl - pair.b);
    let split_floor = (0.5 * th.sin()).ln() + 0.5 * big - (-2.0 * big).exp().ln_1p();
    let split_margin = pair.c.min(pair.d) - split_floor;
    let lower = ln_cosh(0.5 * big - dl) + (0.5 * (1.0 + th.cos())).ln();
    SegmentBoundsVerdict {
        length_margin,
        split_margin,
        midpoint_lower_margin: ln_cosh(pair.r0) - lower,
        midpoint_upper_margin: 0.5 * big + 2.0 * dl - pair.r0,
    }
}

/// Margins of the angle-free midpoint bounds.
pub fn check_hyp_midpoint_coarse(pair: &SegmentPair<Polar>, radius: f64) -> (f64, f64) {
    let big = radius;
    let dl = delta(PI / 2.0, big);
    let coarse =
        (ln_cosh(pair.r0) - (ln_cosh(0.5 * big - dl) - LN_2)).min(0.5 * big + 2.0 * dl - pair.r0);
    let floor = (ln_cosh(pair.r0) - (ln_cosh(0.5 * big) - 3.0 * LN_2))
        .min(pair.r0 - (0.5 * big - 3.0 * LN_2));
    (coarse, floor)
}

/// Polar-sine and core-exclusion statements for one pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarVerdict {
    /// `theta > 1/sqrt(n)`.
    pub polar_admissible: bool,
    /// `sin phi - sin^2 theta / 9`.
    pub polar_margin: f64,
    /// An endpoint of `s` lies in `B_0(R/2)` and `sin theta >= 12 e^{-h/4}`.
    pub exclusion_admissible: bool,
    /// `min(r_w1, r_w2) - R/2`.
    pub exclusion_margin: f64,
    /// Distance from the origin to the midpoint of `s`.
    pub h: f64,
}

pub fn check_polar_and_exclusion(
    pair: &SegmentPair<Polar>,
    model: &HyperbolicModel,
) -> PolarVerdict {
    let big = model.radius;
    let th = pair.theta;
    let polar_admissible = th > 1.0 / (model.n as f64).sqrt();
    let polar_margin = pair.phi.sin() - th.sin().powi(2) / 9.0;
    let h = hyperbolic::point_along(pair.v1, pair.v2, 0.5 * pair.a).r;
    let core = pair.v1.r < 0.5 * big || pair.v2.r < 0.5 * big;
    let exclusion_admissible = core && th.sin() >= 12.0 * (-0.25 * h).exp();
    PolarVerdict {
        polar_admissible,
        polar_margin,
        exclusion_admissible,
        exclusion_margin: pair.w1.r.min(pair.w2.r) - 0.5 * big,
        h,
    }
}

/// Which bucket family the pigeonhole selection came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Bucket {
    /// `k` equal slices of `[0, pi)`.
    Plain,
    /// Angles within `theta_s` of `0` or `pi`.
    Narrow,
    /// Angles in the middle band.
    Wide,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PigeonholeVerdict {
    pub t: usize,
    pub k: usize,
    /// Index of the reference segment `s0`.
    pub reference: usize,
    /// Index of the selected `s'`.
    pub chosen: usize,
    /// Indices of `S'`.
    pub members: Vec<usize>,
    /// Lower bound on `|S'|`.
    pub required: usize,
    pub bucket: Bucket,
    /// Angle bound every member satisfies.
    pub angle_bound: f64,
    /// Radius every member endpoint stays at or beyond (hyperbolic only).
    pub radius_floor: f64,
    /// Smallest slack over the angle and radius conditions.
    pub margin: f64,
}

impl PigeonholeVerdict {
    pub fn holds(&self) -> bool {
        self.members.len() >= self.required
            && self.members.contains(&self.chosen)
            && self.margin >= -TOL
    }
}

fn directed_angle<P: PlanePoint>(s: &Segment<P>, t: &Segment<P>) -> Result<f64, LemmaError> {
    if s == t {
        return Ok(0.0);
    }
    Ok(P::geometry(s, t)?.theta)
}

fn check_independent_set<P: PlanePoint>(
    threshold: f64,
    segs: &[Segment<P>],
) -> Result<(), LemmaError> {
    for i in 0..segs.len() {
        for j in i + 1..segs.len() {
            if !P::independent(threshold, &segs[i], &segs[j])? {
                return Err(LemmaError::NotPairwiseIndependent(i, j));
            }
        }
    }
    Ok(())
}

/// Buckets `segs` by their angle from `segs[reference]` with `bucket_of`,
/// takes the largest bucket and its smallest-angle member.
fn select<P: PlanePoint>(
    segs: &[Segment<P>],
    reference: usize,
    buckets: usize,
    bucket_of: impl Fn(f64) -> usize,
) -> Result<(Vec<f64>, usize, Vec<usize>), LemmaError> {
    let s0 = &segs[reference];
    let angles = segs
        .iter()
        .map(|s| directed_angle(s0, s))
        .collect::<Result<Vec<_>, _>>()?;
    let mut groups = vec![Vec::new(); buckets];
    for (i, &x) in angles.iter().enumerate() {
        groups[bucket_of(x).min(buckets - 1)].push(i);
    }
    let mut best = 0;
    for (i, g) in groups.iter().enumerate() {
        if g.len() > groups[best].len() {
            best = i;
        }
    }
    let members = std::mem::take(&mut groups[best]);
    let chosen = *members
        .iter()
        .min_by(|&&a, &&b| angles[a].total_cmp(&angles[b]).then(a.cmp(&b)))
        .expect("largest bucket is nonempty");
    Ok((angles, chosen, members))
}

fn angle_margin<P: PlanePoint>(
    segs: &[Segment<P>],
    chosen: usize,
    members: &[usize],
    bound: f64,
) -> Result<f64, LemmaError> {
    let mut margin = f64::INFINITY;
    for &i in members {
        let x = directed_angle(&segs[chosen], &segs[i])?;
        margin = margin.min(bound - x);
    }
    Ok(margin)
}

fn plain_pigeonhole<P: PlanePoint>(
    segs: &[Segment<P>],
    k: usize,
) -> Result<PigeonholeVerdict, LemmaError> {
    let t = segs.len();
    let (_, chosen, members) = select(segs, 0, k, |x| (x * k as f64 / PI).floor() as usize)?;
    let bound = PI / k as f64;
    let margin = angle_margin(segs, chosen, &members, bound)?;
    Ok(PigeonholeVerdict {
        t,
        k,
        reference: 0,
        chosen,
        members,
        required: t.div_ceil(k),
        bucket: Bucket::Plain,
        angle_bound: bound,
        radius_floor: 0.0,
        margin,
    })
}

fn trichotomy(
    segs: &[Segment<Polar>],
    k: usize,
    radius: f64,
) -> Result<PigeonholeVerdict, LemmaError> {
    let half = 0.5 * radius;
    let Some(reference) = segs.iter().position(|s| s.start.r < half || s.end.r < half) else {
        return plain_pigeonhole(segs, k);
    };
    let t = segs.len();
    let s0 = &segs[reference];
    let h = hyperbolic::point_along(s0.start, s0.end, 0.5 * s0.length).r;
    let ratio = 12.0 * (-0.25 * h).exp();
    let theta_s = ratio.min(1.0).asin();
    let kf = k as f64;
    let (_, chosen, members) = select(segs, reference, 3 * k, |x| {
        if x < theta_s {
            (x * kf / theta_s).floor() as usize
        } else if x < PI - theta_s {
            k + ((x - theta_s) * kf / (PI - 2.0 * theta_s))
                .floor()
                .min(kf - 1.0) as usize
        } else {
            2 * k + ((x - (PI - theta_s)) * kf / theta_s).floor().min(kf - 1.0) as usize
        }
    })?;
    let x_chosen = directed_angle(s0, &segs[chosen])?;
    let wide = x_chosen >= theta_s && x_chosen < PI - theta_s;
    let (bucket, angle_bound, radius_floor) = if wide {
        (Bucket::Wide, PI / kf, half)
    } else {
        (
            Bucket::Narrow,
            ratio * PI / kf,
            (half - 3.0 * LN_2 - h).max(0.0),
        )
    };
    let mut margin = angle_margin(segs, chosen, &members, angle_bound)?;
    for &i in &members {
        margin = margin.min(segs[i].start.r.min(segs[i].end.r) - radius_floor);
    }
    Ok(PigeonholeVerdict {
        t,
        k,
        reference,
        chosen,
        members,
        required: t.div_ceil(3 * k),
        bucket,
        angle_bound,
        radius_floor,
        margin,
    })
}

/// Runs the constructive pigeonhole selection on pairwise independent
/// segments. In the hyperbolic plane the three-way version is used when a
/// segment reaches into `B_0(R/2)`.
pub fn check_pigeonhole(
    model: &PlaneModel,
    segments: &[(Point, Point)],
    k: usize,
) -> Result<PigeonholeVerdict, LemmaError> {
    assert!(
        k >= 1 && !segments.is_empty(),
        "need k >= 1 and at least one segment"
    );
    match model {
        PlaneModel::Euclidean(m) => {
            let segs = segments
                .iter()
                .map(|&(a, b)| match (a, b) {
                    (Point::Cartesian(a), Point::Cartesian(b)) => Ok(Segment::euclid(a, b)),
                    _ => Err(LemmaError::WrongPlane("polar points")),
                })
                .collect::<Result<Vec<_>, _>>()?;
            check_independent_set(m.r, &segs)?;
            plain_pigeonhole(&segs, k)
        }
        PlaneModel::Hyperbolic(m) => {
            let segs = segments
                .iter()
                .map(|&(a, b)| match (a, b) {
                    (Point::Polar(a), Point::Polar(b)) => Ok(Segment::hyperbolic(a, b)),
                    _ => Err(LemmaError::WrongPlane("cartesian points")),
                })
                .collect::<Result<Vec<_>, _>>()?;
            check_independent_set(m.radius, &segs)?;
            trichotomy(&segs, k, m.radius)
        }
    }
}

/// Slack of the angle-difference relation on the triple `(s0, s', s'')`
/// with `angle(s0, s') <= angle(s0, s'')`. Euclidean triples must match
/// exactly, so the slack is `-|error|`; hyperbolic ones only need `<=`.
fn angle_sum_slack<P: PlanePoint>(
    s0: &Segment<P>,
    s1: &Segment<P>,
    s2: &Segment<P>,
    exact: bool,
) -> Result<f64, LemmaError> {
    let (mut x1, mut x2) = (directed_angle(s0, s1)?, directed_angle(s0, s2)?);
    let (mut a, mut b) = (s1, s2);
    if x1 > x2 {
        std::mem::swap(&mut x1, &mut x2);
        std::mem::swap(&mut a, &mut b);
    }
    let lhs = directed_angle(a, b)?;
    let rhs = x2 - x1;
    Ok(if exact { -(lhs - rhs).abs() } else { rhs - lhs })
}

// ---------------------------------------------------------------------------
// Driver

#[derive(Clone, Copy, Debug)]
struct Tally {
    attempted: u64,
    admissible: u64,
    violations: u64,
    worst: f64,
}

impl Tally {
    fn new() -> Self {
        Self {
            attempted: 0,
            admissible: 0,
            violations: 0,
            worst: f64::INFINITY,
        }
    }

    fn record(&mut self, slack: f64) {
        self.admissible += 1;
        // NaN slack is a failed evaluation and counts against the statement.
        if !(slack >= -TOL) {
            self.violations += 1;
        }
        self.worst = if slack.is_nan() {
            f64::NEG_INFINITY
        } else {
            self.worst.min(slack)
        };
    }

    fn merge(&mut self, o: &Tally) {
        self.attempted += o.attempted;
        self.admissible += o.admissible;
        self.violations += o.violations;
        self.worst = self.worst.min(o.worst);
    }
}

fn drive<F>(id: LemmaId, cfg: &SuiteConfig, exec: Execution, step: F) -> LemmaReport
where
    F: Fn(&mut ChaCha8Rng, &mut Tally) + Sync + Send,
{
    let chunk = (cfg.target / 64).clamp(16, 1024);
    let cap = cfg.target.saturating_mul(cfg.attempt_factor).max(1);
    let base = cfg.seed ^ id.salt();
    let mut total = Tally::new();
    let mut next = 0u64;
    while total.admissible < cfg.target && total.attempted < cap {
        let parts = map_range(exec, ROUND, |j| {
            let mut rng = ChaCha8Rng::seed_from_u64(base);
            rng.set_stream(next + j as u64);
            let mut t = Tally::new();
            for _ in 0..chunk {
                t.attempted += 1;
                step(&mut rng, &mut t);
            }
            t
        });
        for p in &parts {
            total.merge(p);
        }
        next += ROUND as u64;
    }
    LemmaReport {
        id,
        attempted: total.attempted,
        admissible: total.admissible,
        violations: total.violations,
        worst_margin: total.worst,
        informational: id.informational(),
    }
}

/// Both orientations of a drawn pair, skipping degenerate geometry.
fn oriented<P: PlanePoint>(s: &Segment<P>, t: &Segment<P>) -> Option<[SegmentPair<P>; 2]> {
    Some([P::geometry(s, t).ok()?, P::geometry(t, s).ok()?])
}

/// The orientation with the acute directed angle.
fn acute<P: PlanePoint>(s: &Segment<P>, t: &Segment<P>) -> Option<SegmentPair<P>> {
    let [p, q] = oriented(s, t)?;
    Some(if p.theta <= q.theta { p } else { q })
}

fn crossing_step<P: PlanePoint>(s: &Segment<P>, t: &Segment<P>, tally: &mut Tally) {
    match (P::geometry(s, t), P::geometry(t, s)) {
        (Ok(p), Ok(q)) => {
            let inside =
                p.c.min(p.a - p.c)
                    .min(p.d)
                    .min(p.b - p.d)
                    .min(p.theta)
                    .min(PI - p.theta);
            let reversal = -(p.theta + q.theta - PI).abs();
            tally.record(inside.min(reversal));
        }
        (Err(GeometryError::NumericalDegeneracy), _)
        | (_, Err(GeometryError::NumericalDegeneracy)) => {}
        _ => tally.record(f64::NEG_INFINITY),
    }
}

fn set_size(rng: &mut impl Rng) -> (usize, usize) {
    let t = rng.random_range(1..=PLANTED_K);
    let k = if rng.random::<bool>() {
        (t as f64).sqrt().ceil() as usize
    } else {
        rng.random_range(1..=t)
    };
    (t, k)
}

/// Runs one statement at `cfg`'s sample budget.
pub fn check_lemma(
    id: LemmaId,
    model: &PlaneModel,
    cfg: &SuiteConfig,
    exec: Execution,
) -> Result<LemmaReport, LemmaError> {
    match (id.is_euclidean(), model) {
        (true, PlaneModel::Euclidean(m)) => Ok(euclid_lemma(id, m.r, model, cfg, exec)?),
        (false, PlaneModel::Hyperbolic(m)) => Ok(hyperbolic_lemma(id, m, model, cfg, exec)?),
        _ => Err(LemmaError::WrongPlane(id.name())),
    }
}

fn planted_family(model: &PlaneModel) -> Result<RegionFamily, LemmaError> {
    build_regions(model, PLANTED_K).map_err(|e| LemmaError::Construction(e.to_string()))
}

fn separation_report(
    id: LemmaId,
    model: &PlaneModel,
    cfg: &SuiteConfig,
) -> Result<LemmaReport, LemmaError> {
    let k = crate::lowerbound::default_k(model);
    let family = build_regions(model, k).map_err(|e| LemmaError::Construction(e.to_string()))?;
    let rep = check_separation(&family, cfg.target as usize, cfg.seed ^ id.salt());
    Ok(LemmaReport {
        id,
        attempted: rep.samples as u64,
        admissible: rep.samples as u64,
        violations: rep.violations as u64,
        worst_margin: if rep.violations == 0 {
            rep.worst_margin
        } else {
            -rep.worst_margin
        },
        informational: false,
    })
}

fn euclid_lemma(
    id: LemmaId,
    r: f64,
    model: &PlaneModel,
    cfg: &SuiteConfig,
    exec: Execution,
) -> Result<LemmaReport, LemmaError> {
    let theta0 = cfg.theta0;
    let report = match id {
        LemmaId::EuclidSeparation => return separation_report(id, model, cfg),
        LemmaId::EuclidCrossing => drive(id, cfg, exec, |rng, tally| {
            if let Ok((s, t)) = draw_euclid_crossing(r, (0.0, PI), rng) {
                crossing_step(&s, &t, tally);
            }
        }),
        LemmaId::EuclidAnnulus | LemmaId::EuclidRegion => drive(id, cfg, exec, |rng, tally| {
            let Ok((s, t)) = draw_euclid_crossing(r, (0.0, theta0), rng) else {
                return;
            };
            let Some(pair) = acute(&s, &t) else { return };
            let v = check_euclid_annulus(&pair, r, theta0);
            if v.admissible {
                tally.record(if id == LemmaId::EuclidAnnulus {
                    v.annulus_margin
                } else {
                    v.region_margin
                });
            }
        }),
        LemmaId::EuclidLawOfCosines => drive(id, cfg, exec, |rng, tally| {
            let Ok((s, t)) = draw_euclid_crossing(r, (0.0, PI), rng) else {
                return;
            };
            let Ok(p) = euclid::pair_geometry(&s, &t) else {
                return;
            };
            let x = 0.5 * p.a - p.c;
            let rhs = x * x + p.d * p.d + 2.0 * x * p.d * p.theta.cos();
            tally.record(-(p.r0 * p.r0 - rhs).abs());
        }),
        LemmaId::EuclidPigeonhole | LemmaId::EuclidAngleSum => {
            let family = planted_family(model)?;
            drive(id, cfg, exec, |rng, tally| {
                let (t, k) = set_size(rng);
                let Some(segs) = planted_euclid(&family, t, rng) else {
                    return;
                };
                if id == LemmaId::EuclidPigeonhole {
                    match plain_pigeonhole(&segs, k) {
                        Ok(v) => tally.record(if v.holds() {
                            v.margin
                        } else {
                            f64::NEG_INFINITY
                        }),
                        Err(LemmaError::Geometry(GeometryError::NumericalDegeneracy)) => {}
                        Err(_) => tally.record(f64::NEG_INFINITY),
                    }
                } else if t >= 3 {
                    if let Ok(slack) = angle_sum_slack(&segs[0], &segs[1], &segs[2], true) {
                        tally.record(slack);
                    }
                }
            })
        }
        _ => unreachable!("hyperbolic statement"),
    };
    Ok(report)
}

fn hyperbolic_lemma(
    id: LemmaId,
    m: &HyperbolicModel,
    model: &PlaneModel,
    cfg: &SuiteConfig,
    exec: Execution,
) -> Result<LemmaReport, LemmaError> {
    let big = m.radius;
    let report = match id {
        LemmaId::HypSeparation => return separation_report(id, model, cfg),
        LemmaId::HypCrossing => drive(id, cfg, exec, |rng, tally| {
            if let Ok((s, t)) = draw_hyperbolic(m, false, rng) {
                crossing_step(&s, &t, tally);
            }
        }),
        LemmaId::HypLength
        | LemmaId::HypSplit
        | LemmaId::HypMidpointLower
        | LemmaId::HypMidpointUpper
        | LemmaId::HypMidpointCoarse
        | LemmaId::HypMidpointFloor
        | LemmaId::HypPolarSine => drive(id, cfg, exec, |rng, tally| {
            let Ok((s, t)) = draw_hyperbolic(m, false, rng) else {
                return;
            };
            let Ok(p) = hyperbolic::pair_geometry(&s, &t) else {
                return;
            };
            match id {
                LemmaId::HypLength => tally.record(check_hyp_segment_bounds(&p, big).length_margin),
                LemmaId::HypSplit => tally.record(check_hyp_segment_bounds(&p, big).split_margin),
                LemmaId::HypMidpointLower => {
                    tally.record(check_hyp_segment_bounds(&p, big).midpoint_lower_margin)
                }
                LemmaId::HypMidpointUpper => {
                    tally.record(check_hyp_segment_bounds(&p, big).midpoint_upper_margin)
                }
                LemmaId::HypMidpointCoarse => tally.record(check_hyp_midpoint_coarse(&p, big).0),
                LemmaId::HypMidpointFloor => tally.record(check_hyp_midpoint_coarse(&p, big).1),
                _ => {
                    let v = check_polar_and_exclusion(&p, m);
                    if v.polar_admissible {
                        tally.record(v.polar_margin);
                    }
                }
            }
        }),
        LemmaId::HypCoreExclusion => drive(id, cfg, exec, |rng, tally| {
            let Ok((s, t)) = draw_hyperbolic(m, true, rng) else {
                return;
            };
            let Ok(p) = hyperbolic::pair_geometry(&s, &t) else {
                return;
            };
            let v = check_polar_and_exclusion(&p, m);
            if v.exclusion_admissible {
                tally.record(v.exclusion_margin);
            }
        }),
        LemmaId::HypPigeonhole | LemmaId::HypTrichotomy | LemmaId::HypAngleSum => {
            let family = planted_family(model)?;
            drive(id, cfg, exec, |rng, tally| {
                let (t, k) = set_size(rng);
                let Some(segs) = planted_hyperbolic(&family, t, rng) else {
                    return;
                };
                let verdict = match id {
                    LemmaId::HypPigeonhole => plain_pigeonhole(&segs, k),
                    LemmaId::HypTrichotomy => trichotomy(&segs, k, big),
                    _ => {
                        if t >= 3 {
                            if let Ok(slack) = angle_sum_slack(&segs[0], &segs[1], &segs[2], false)
                            {
                                tally.record(slack);
                            }
                        }
                        return;
                    }
                };
                match verdict {
                    Ok(v) => tally.record(if v.holds() {
                        v.margin
                    } else {
                        f64::NEG_INFINITY
                    }),
                    Err(LemmaError::Geometry(GeometryError::NumericalDegeneracy)) => {}
                    Err(_) => tally.record(f64::NEG_INFINITY),
                }
            })
        }
        _ => unreachable!("euclidean statement"),
    };
    Ok(report)
}

/// All statements for the plane of `model`.
pub fn run_all(
    model: &PlaneModel,
    cfg: &SuiteConfig,
    exec: Execution,
) -> Result<Vec<LemmaReport>, LemmaError> {
    let euclidean = matches!(model, PlaneModel::Euclidean(_));
    LemmaId::ALL
        .into_iter()
        .filter(|id| id.is_euclidean() == euclidean)
        .map(|id| check_lemma(id, model, cfg, exec))
        .collect()
}

/// First `n` in `ns` (ascending) from which `id` shows no violations at
/// every later `n` as well.
pub fn smallest_clean_n(
    id: LemmaId,
    gamma: f64,
    c: f64,
    ns: &[usize],
    cfg: &SuiteConfig,
    exec: Execution,
) -> Result<Option<usize>, LemmaError> {
    let mut answer = None;
    for &n in ns {
        let model = PlaneModel::hyperbolic(n, gamma, c)
            .map_err(|e| LemmaError::Construction(e.to_string()))?;
        let rep = check_lemma(id, &model, cfg, exec)?;
        if rep.violations == 0 {
            answer.get_or_insert(n);
        } else {
            answer = None;
        }
    }
    Ok(answer)
}
