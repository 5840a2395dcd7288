//! Deterministic synthetic ground truth.
//!
//! A scene is a bundle of parallel roads that share one reference centerline
//! (a straight line or a circular arc). Each road contributes two boundaries
//! and `lanes - 1` dividers as lateral offsets of the reference, so offsets of
//! distinct elements never cross. Crossings are rectangles laid across a road.
//! Everything is sampled densely, clipped to the perception range and then
//! simplified with RDP.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{arc_length, rdp_simplify, Point2, Polyline, MIN_VERTEX_SEPARATION};
use crate::hsmr::{ElementCategory, MapElement};
use crate::math;
use crate::matching::GroundTruthSet;
use crate::{Error, Result};

pub const LANE_WIDTH: f64 = 3.5;
pub const MEDIAN_WIDTH: f64 = 2.0;
pub const MAX_CURVATURE: f64 = 0.05;
pub const MIN_FRAGMENT_LENGTH: f64 = 1.0;
pub const SIMPLIFY_EPSILON: f64 = 0.05;
const SAMPLE_SPACING: f64 = 0.5;

/// Seeds of the pinned 20-scene standard suite.
pub const STANDARD_SUITE_SEEDS: [u64; 20] =
    [11, 23, 37, 41, 53, 67, 79, 83, 97, 101, 113, 127, 131, 149, 151, 163, 173, 181, 191, 199];

/// Axis-aligned BEV window, in meters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerceptionRange {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl PerceptionRange {
    pub const REGULAR: PerceptionRange = PerceptionRange { x_min: -15.0, x_max: 15.0, y_min: -30.0, y_max: 30.0 };
    pub const LONG: PerceptionRange = PerceptionRange { x_min: -15.0, x_max: 15.0, y_min: -60.0, y_max: 60.0 };

    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        let r = Self { x_min, x_max, y_min, y_max };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = [self.x_min, self.x_max, self.y_min, self.y_max].iter().all(|v| v.is_finite())
            && self.x_min < self.x_max
            && self.y_min < self.y_max;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter { name: "range", reason: "need finite min < max on both axes".into() })
        }
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn center(&self) -> Point2 {
        Point2::new(0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))
    }

    pub fn contains(&self, p: Point2, tol: f64) -> bool {
        p.x >= self.x_min - tol && p.x <= self.x_max + tol && p.y >= self.y_min - tol && p.y <= self.y_max + tol
    }

    /// The range shrunk by `margin` on every side (never inverted).
    pub fn shrunk(&self, margin: f64) -> Self {
        let mx = margin.min(0.5 * self.width() - 1e-6);
        let my = margin.min(0.5 * self.height() - 1e-6);
        Self { x_min: self.x_min + mx, x_max: self.x_max - mx, y_min: self.y_min + my, y_max: self.y_max - my }
    }

    pub fn uniform_point<R: Rng>(&self, rng: &mut R) -> Point2 {
        Point2::new(rng.gen_range(self.x_min..=self.x_max), rng.gen_range(self.y_min..=self.y_max))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneSpec {
    pub seed: u64,
    pub road_count: usize,
    pub lanes_per_road: usize,
    /// Curvature magnitude is drawn uniformly from this interval; the sign is random.
    pub curvature: (f64, f64),
    pub crossing_count: usize,
    /// Amplitude of a slow sinusoidal lateral wobble applied per element.
    pub jitter: f64,
}

impl SceneSpec {
    /// Randomized spec of the standard suite: 1-2 roads, 1-3 lanes,
    /// curvature up to 0.02, 0-2 crossings.
    pub fn standard(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5ce_9e9e);
        Self {
            seed,
            road_count: rng.gen_range(1..=2),
            lanes_per_road: rng.gen_range(1..=3),
            curvature: (0.0, 0.02),
            crossing_count: rng.gen_range(0..=2),
            jitter: 0.01,
        }
    }

    pub fn straight(seed: u64, roads: usize, lanes: usize) -> Self {
        Self { seed, road_count: roads, lanes_per_road: lanes, curvature: (0.0, 0.0), crossing_count: 0, jitter: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.curvature;
        if !(0.0 <= lo && lo <= hi && hi <= MAX_CURVATURE) {
            return Err(Error::InvalidParameter {
                name: "curvature",
                reason: alloc::format!("need 0 <= min <= max <= {MAX_CURVATURE}, got ({lo}, {hi})"),
            });
        }
        if !(self.jitter >= 0.0 && self.jitter <= 0.25 * LANE_WIDTH) {
            return Err(Error::InvalidParameter {
                name: "jitter",
                reason: alloc::format!("need 0 <= jitter <= {}, got {}", 0.25 * LANE_WIDTH, self.jitter),
            });
        }
        if self.road_count > 0 && self.lanes_per_road == 0 {
            return Err(Error::InvalidParameter { name: "lanes_per_road", reason: "roads need at least one lane".into() });
        }
        Ok(())
    }
}

/// Reference centerline: passes through `origin` with heading `heading` at
/// arclength 0 and has constant curvature `kappa`.
#[derive(Clone, Copy, Debug)]
struct Centerline {
    origin: Point2,
    heading: f64,
    kappa: f64,
}

impl Centerline {
    fn point(&self, s: f64) -> Point2 {
        if self.kappa == 0.0 {
            return self.origin + Point2::new(math::cos(self.heading), math::sin(self.heading)) * s;
        }
        let h = self.heading + self.kappa * s;
        let dx = (math::sin(h) - math::sin(self.heading)) / self.kappa;
        let dy = (math::cos(self.heading) - math::cos(h)) / self.kappa;
        self.origin + Point2::new(dx, dy)
    }

    fn normal(&self, s: f64) -> Point2 {
        let h = self.heading + self.kappa * s;
        Point2::new(-math::sin(h), math::cos(h))
    }

    fn tangent(&self, s: f64) -> Point2 {
        let h = self.heading + self.kappa * s;
        Point2::new(math::cos(h), math::sin(h))
    }

    fn offset_point(&self, s: f64, offset: f64) -> Point2 {
        self.point(s) + self.normal(s) * offset
    }
}

#[derive(Clone, Copy, Debug)]
struct Wobble {
    amplitude: f64,
    wavelength: f64,
    phase: f64,
}

impl Wobble {
    fn at(&self, s: f64) -> f64 {
        self.amplitude * math::sin(2.0 * PI * s / self.wavelength + self.phase)
    }
}

struct Road {
    center_offset: f64,
    half_width: f64,
}

/// Generate the ground truth of one scene. Pure in `(spec, range)`.
pub fn generate_scene(spec: &SceneSpec, range: &PerceptionRange) -> Result<GroundTruthSet> {
    spec.validate()?;
    range.validate()?;
    if spec.road_count == 0 {
        return Ok(GroundTruthSet::default());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let c = range.center();
    let origin = Point2::new(
        c.x + rng.gen_range(-0.1..=0.1) * range.width(),
        c.y + rng.gen_range(-0.1..=0.1) * range.height(),
    );
    let heading = PI / 2.0 + rng.gen_range(-0.2..=0.2);
    let (lo, hi) = spec.curvature;
    let magnitude = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
    let kappa = if rng.gen_bool(0.5) { magnitude } else { -magnitude };
    let center = Centerline { origin, heading, kappa };

    let road_width = spec.lanes_per_road as f64 * LANE_WIDTH;
    let total = spec.road_count as f64 * road_width + (spec.road_count - 1) as f64 * MEDIAN_WIDTH;
    let roads: Vec<Road> = (0..spec.road_count)
        .map(|j| Road {
            center_offset: -0.5 * total + j as f64 * (road_width + MEDIAN_WIDTH) + 0.5 * road_width,
            half_width: 0.5 * road_width,
        })
        .collect();
    let max_offset = 0.5 * total + spec.jitter;
    if kappa != 0.0 && max_offset * kappa.abs() >= 0.5 {
        return Err(Error::InvalidParameter {
            name: "curvature",
            reason: alloc::format!("radius {} too tight for a {total} m wide road bundle", 1.0 / kappa.abs()),
        });
    }

    // long enough to leave the window, but never turning more than half a circle
    let mut reach = 0.5 * math::sqrt(range.width() * range.width() + range.height() * range.height())
        + origin.distance(c)
        + max_offset
        + 5.0;
    if kappa != 0.0 {
        reach = reach.min(0.5 * PI / kappa.abs());
    }
    let steps = math::ceil(2.0 * reach / SAMPLE_SPACING) as usize;
    let stations: Vec<f64> = (0..=steps).map(|i| -reach + 2.0 * reach * i as f64 / steps as f64).collect();

    let mut lines: Vec<(ElementCategory, f64)> = Vec::new();
    for road in &roads {
        let left = road.center_offset - road.half_width;
        lines.push((ElementCategory::Boundary, left));
        for k in 1..spec.lanes_per_road {
            lines.push((ElementCategory::Divider, left + k as f64 * LANE_WIDTH));
        }
        lines.push((ElementCategory::Boundary, road.center_offset + road.half_width));
    }

    let mut raw = Vec::new();
    for (category, offset) in lines {
        let wobble = Wobble {
            amplitude: spec.jitter,
            wavelength: rng.gen_range(20.0..=40.0),
            phase: rng.gen_range(0.0..2.0 * PI),
        };
        let pts: Vec<Point2> = stations.iter().map(|&s| center.offset_point(s, offset + wobble.at(s))).collect();
        raw.push(MapElement::new(category, Polyline::open(pts)?)?);
    }

    let inner = range.shrunk(3.0);
    let mut placed: Vec<f64> = Vec::new();
    for _ in 0..spec.crossing_count {
        let road = &roads[rng.gen_range(0..roads.len())];
        let half_depth = rng.gen_range(1.5..=2.5);
        let mut station = None;
        for _ in 0..100 {
            let s = rng.gen_range(-reach..=reach);
            let p = center.offset_point(s, road.center_offset);
            if inner.contains(p, 0.0) && placed.iter().all(|&q| (q - s).abs() > 2.0 * half_depth + 4.0) {
                station = Some(s);
                break;
            }
        }
        let Some(s) = station else { continue };
        placed.push(s);
        let p = center.offset_point(s, road.center_offset);
        let n = center.normal(s) * (road.half_width + 0.5);
        let t = center.tangent(s) * half_depth;
        let corners = vec![p - n - t, p - n + t, p + n + t, p + n - t];
        raw.push(MapElement::new(ElementCategory::PedCrossing, Polyline::closed(corners)?)?);
    }

    let clipped = clip_to_range(&GroundTruthSet::new(raw), range);
    let mut out = Vec::with_capacity(clipped.len());
    for e in clipped.elements {
        let simple = rdp_simplify(e.shape(), SIMPLIFY_EPSILON)?;
        out.push(e.with_shape(simple)?);
    }
    Ok(GroundTruthSet::new(out))
}

/// Which side of the window a clip parameter came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Side {
    XMin,
    XMax,
    YMin,
    YMax,
}

fn snap(p: Point2, side: Option<Side>, r: &PerceptionRange) -> Point2 {
    let mut q = Point2::new(p.x.clamp(r.x_min, r.x_max), p.y.clamp(r.y_min, r.y_max));
    match side {
        Some(Side::XMin) => q.x = r.x_min,
        Some(Side::XMax) => q.x = r.x_max,
        Some(Side::YMin) => q.y = r.y_min,
        Some(Side::YMax) => q.y = r.y_max,
        None => {}
    }
    q
}

/// Liang-Barsky: the visible parameter interval of segment `a -> b`, with the
/// side each end was cut at (`None` when the end lies inside).
fn clip_segment(a: Point2, b: Point2, r: &PerceptionRange) -> Option<((f64, Option<Side>), (f64, Option<Side>))> {
    let d = b - a;
    let mut t0 = (0.0, None);
    let mut t1 = (1.0, None);
    let checks = [
        (-d.x, a.x - r.x_min, Side::XMin),
        (d.x, r.x_max - a.x, Side::XMax),
        (-d.y, a.y - r.y_min, Side::YMin),
        (d.y, r.y_max - a.y, Side::YMax),
    ];
    for (p, q, side) in checks {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
            continue;
        }
        let t = q / p;
        if p < 0.0 {
            if t > t1.0 {
                return None;
            }
            if t > t0.0 {
                t0 = (t, Some(side));
            }
        } else {
            if t < t0.0 {
                return None;
            }
            if t < t1.0 {
                t1 = (t, Some(side));
            }
        }
    }
    Some((t0, t1))
}

fn push_distinct(v: &mut Vec<Point2>, p: Point2) {
    if v.last().is_none_or(|&q| q.distance(p) > MIN_VERTEX_SEPARATION) {
        v.push(p);
    }
}

fn clip_open(p: &Polyline, r: &PerceptionRange) -> Vec<Vec<Point2>> {
    let mut fragments = Vec::new();
    let mut current: Vec<Point2> = Vec::new();
    let v = p.vertices();
    for i in 0..v.len() - 1 {
        let (a, b) = (v[i], v[i + 1]);
        match clip_segment(a, b, r) {
            None => {
                if !current.is_empty() {
                    fragments.push(core::mem::take(&mut current));
                }
            }
            Some(((t0, s0), (t1, s1))) => {
                if t0 > 0.0 && !current.is_empty() {
                    fragments.push(core::mem::take(&mut current));
                }
                let start = if t0 > 0.0 { snap(a.lerp(b, t0), s0, r) } else { snap(a, None, r) };
                push_distinct(&mut current, start);
                let end = if t1 < 1.0 { snap(a.lerp(b, t1), s1, r) } else { snap(b, None, r) };
                push_distinct(&mut current, end);
                if t1 < 1.0 {
                    fragments.push(core::mem::take(&mut current));
                }
            }
        }
    }
    if !current.is_empty() {
        fragments.push(current);
    }
    fragments
}

fn clip_closed(p: &Polyline, r: &PerceptionRange) -> Vec<Point2> {
    let planes: [(Side, fn(Point2, &PerceptionRange) -> f64); 4] = [
        (Side::XMin, |p, r| p.x - r.x_min),
        (Side::XMax, |p, r| r.x_max - p.x),
        (Side::YMin, |p, r| p.y - r.y_min),
        (Side::YMax, |p, r| r.y_max - p.y),
    ];
    let mut poly = p.vertices().to_vec();
    for (side, inside) in planes {
        if poly.is_empty() {
            break;
        }
        let mut next = Vec::with_capacity(poly.len() + 2);
        for i in 0..poly.len() {
            let a = poly[i];
            let b = poly[(i + 1) % poly.len()];
            let (da, db) = (inside(a, r), inside(b, r));
            if da >= 0.0 {
                next.push(a);
            }
            if (da >= 0.0) != (db >= 0.0) {
                let t = da / (da - db);
                next.push(snap(a.lerp(b, t), Some(side), r));
            }
        }
        poly = next;
    }
    let mut out: Vec<Point2> = Vec::with_capacity(poly.len());
    for q in poly {
        push_distinct(&mut out, snap(q, None, r));
    }
    while out.len() > 1 && out[0].distance(out[out.len() - 1]) <= MIN_VERTEX_SEPARATION {
        out.pop();
    }
    out
}

/// Restrict every element to `range`. Open elements may split into several
/// fragments; closed ones are clipped as polygons. Fragments shorter than
/// [`MIN_FRAGMENT_LENGTH`] are dropped.
pub fn clip_to_range(gts: &GroundTruthSet, range: &PerceptionRange) -> GroundTruthSet {
    let mut out = Vec::new();
    for e in &gts.elements {
        let shape = e.shape();
        if shape.vertices().iter().all(|&v| range.contains(v, 0.0)) {
            out.push(e.clone());
            continue;
        }
        let pieces = if e.is_closed() { vec![clip_closed(shape, range)] } else { clip_open(shape, range) };
        for pts in pieces {
            let Ok(poly) = Polyline::new(pts, e.is_closed()) else { continue };
            if arc_length(&poly) < MIN_FRAGMENT_LENGTH {
                continue;
            }
            if let Ok(el) = MapElement::new(e.category(), poly) {
                out.push(el);
            }
        }
    }
    GroundTruthSet::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Segment;

    fn segments_cross(a: &Polyline, b: &Polyline) -> bool {
        for (p0, p1) in a.edges() {
            for (q0, q1) in b.edges() {
                let d1 = (p1 - p0).cross(q0 - p0);
                let d2 = (p1 - p0).cross(q1 - p0);
                let d3 = (q1 - q0).cross(p0 - q0);
                let d4 = (q1 - q0).cross(p1 - q0);
                if d1 * d2 <= 0.0 && d3 * d4 <= 0.0 {
                    return true;
                }
            }
        }
        false
    }

    #[test]
    fn deterministic() {
        for seed in STANDARD_SUITE_SEEDS {
            let spec = SceneSpec::standard(seed);
            let a = generate_scene(&spec, &PerceptionRange::REGULAR).unwrap();
            let b = generate_scene(&spec, &PerceptionRange::REGULAR).unwrap();
            assert_eq!(a, b);
        }
        let a = generate_scene(&SceneSpec::standard(1), &PerceptionRange::REGULAR).unwrap();
        let b = generate_scene(&SceneSpec::standard(2), &PerceptionRange::REGULAR).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn one_straight_road_two_lanes() {
        for seed in 0..20 {
            let g = generate_scene(&SceneSpec::straight(seed, 1, 2), &PerceptionRange::REGULAR).unwrap();
            assert_eq!(g.count(ElementCategory::Boundary), 2, "seed {seed}");
            assert_eq!(g.count(ElementCategory::Divider), 1, "seed {seed}");
            assert_eq!(g.count(ElementCategory::PedCrossing), 0);
            for e in &g.elements {
                assert_eq!(e.shape().len(), 2, "a straight element simplifies to its endpoints");
            }
        }
    }

    #[test]
    fn empty_spec_gives_empty_scene() {
        let spec = SceneSpec { crossing_count: 3, ..SceneSpec::straight(5, 0, 2) };
        assert!(generate_scene(&spec, &PerceptionRange::REGULAR).unwrap().is_empty());
    }

    #[test]
    fn arc_boundaries_have_moderate_vertex_counts() {
        for seed in 0..10 {
            let spec = SceneSpec { curvature: (0.02, 0.02), ..SceneSpec::straight(seed, 1, 2) };
            let g = generate_scene(&spec, &PerceptionRange::LONG).unwrap();
            let boundaries: Vec<_> = g.elements.iter().filter(|e| e.category() == ElementCategory::Boundary).collect();
            assert!(!boundaries.is_empty());
            for b in boundaries {
                if arc_length(b.shape()) > 30.0 {
                    let n = b.shape().len();
                    assert!((8..=64).contains(&n), "seed {seed}: {n} vertices");
                }
            }
        }
    }

    #[test]
    fn rejects_bad_specs() {
        let mut s = SceneSpec::standard(1);
        s.curvature = (0.0, 0.06);
        assert!(generate_scene(&s, &PerceptionRange::REGULAR).is_err());
        assert!(PerceptionRange::new(1.0, -1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn suite_scenes_are_inside_and_dividers_clear_of_boundaries() {
        for range in [PerceptionRange::REGULAR, PerceptionRange::LONG] {
            for seed in STANDARD_SUITE_SEEDS {
                let g = generate_scene(&SceneSpec::standard(seed), &range).unwrap();
                assert!(!g.is_empty());
                for e in &g.elements {
                    assert!(e.shape().vertices().iter().all(|&v| range.contains(v, 1e-9)));
                    assert!(arc_length(e.shape()) >= MIN_FRAGMENT_LENGTH);
                }
                for d in g.elements.iter().filter(|e| e.category() == ElementCategory::Divider) {
                    for b in g.elements.iter().filter(|e| e.category() == ElementCategory::Boundary) {
                        assert!(!segments_cross(d.shape(), b.shape()), "seed {seed}");
                    }
                }
            }
        }
    }

    #[test]
    fn clip_inside_is_unchanged() {
        let e = MapElement::new(ElementCategory::Divider, Polyline::from_xy(&[(0.0, 0.0), (1.0, 5.0)], false).unwrap())
            .unwrap();
        let g = GroundTruthSet::new(vec![e]);
        assert_eq!(clip_to_range(&g, &PerceptionRange::REGULAR), g);
    }

    #[test]
    fn clip_snaps_to_x_borders() {
        let e = MapElement::new(ElementCategory::Divider, Polyline::from_xy(&[(-20.0, 3.3), (20.0, 3.3)], false).unwrap())
            .unwrap();
        let g = clip_to_range(&GroundTruthSet::new(vec![e]), &PerceptionRange::REGULAR);
        assert_eq!(g.len(), 1);
        let v = g.elements[0].shape().vertices();
        assert_eq!(v, &[Point2::new(-15.0, 3.3), Point2::new(15.0, 3.3)]);

        let slanted = MapElement::new(
            ElementCategory::Boundary,
            Polyline::from_xy(&[(-17.3, -1.1), (16.9, 2.7)], false).unwrap(),
        )
        .unwrap();
        let g = clip_to_range(&GroundTruthSet::new(vec![slanted]), &PerceptionRange::REGULAR);
        let v = g.elements[0].shape().vertices();
        assert_eq!(v[0].x, -15.0);
        assert_eq!(v[v.len() - 1].x, 15.0);
    }

    #[test]
    fn u_shape_splits_in_two() {
        let u = Polyline::from_xy(&[(0.0, -10.0), (0.0, 40.0), (5.0, 40.0), (5.0, -10.0)], false).unwrap();
        let e = MapElement::new(ElementCategory::Boundary, u).unwrap();
        let g = clip_to_range(&GroundTruthSet::new(vec![e]), &PerceptionRange::REGULAR);
        assert_eq!(g.len(), 2);
        // segment-rectangle oracle: both legs end on the top border
        let a = g.elements[0].shape().vertices();
        let b = g.elements[1].shape().vertices();
        assert_eq!(a, &[Point2::new(0.0, -10.0), Point2::new(0.0, 30.0)]);
        assert_eq!(b, &[Point2::new(5.0, 30.0), Point2::new(5.0, -10.0)]);
    }

    #[test]
    fn short_fragments_are_dropped_and_outside_removed() {
        let corner = Polyline::from_xy(&[(14.6, 40.0), (14.6, 29.5), (20.0, 29.5)], false).unwrap();
        let outside = Polyline::from_xy(&[(20.0, 0.0), (25.0, 0.0)], false).unwrap();
        let g = GroundTruthSet::new(vec![
            MapElement::new(ElementCategory::Divider, corner).unwrap(),
            MapElement::new(ElementCategory::Divider, outside).unwrap(),
        ]);
        assert!(clip_to_range(&g, &PerceptionRange::REGULAR).is_empty());
    }

    #[test]
    fn closed_clip_is_polygon_intersection() {
        let sq = Polyline::from_xy(&[(13.0, 0.0), (17.0, 0.0), (17.0, 4.0), (13.0, 4.0)], true).unwrap();
        let e = MapElement::new(ElementCategory::PedCrossing, sq).unwrap();
        let g = clip_to_range(&GroundTruthSet::new(vec![e]), &PerceptionRange::REGULAR);
        assert_eq!(g.len(), 1);
        let s = g.elements[0].shape();
        assert!(s.is_closed());
        let mut v: Vec<(f64, f64)> = s.vertices().iter().map(|p| (p.x, p.y)).collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(v, vec![(13.0, 0.0), (13.0, 4.0), (15.0, 0.0), (15.0, 4.0)]);
        let seg = Segment::new(s.vertices()[0], s.vertices()[1]).unwrap();
        assert!(seg.length() > 0.0);
    }
}
