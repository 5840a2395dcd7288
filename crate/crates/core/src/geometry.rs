//! Polyline and point primitives.
//!
//! Everything here is a pure function of its inputs. Simplification,
//! resampling and densification produce new [`Polyline`]s; the distance and
//! direction kernels are the building blocks of the supervision losses.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use crate::math;
use crate::{Error, Result};

/// Two vertices closer than this are considered identical.
pub const MIN_VERTEX_SEPARATION: f64 = 1e-9;

/// A point in the vehicle-frame BEV plane, in meters.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ZERO: Point2 = Point2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    #[inline]
    pub fn cross(self, other: Self) -> f64 {
        self.x * other.y - self.y * other.x
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        math::sqrt(self.norm_sq())
    }

    #[inline]
    pub fn distance(self, other: Self) -> f64 {
        (self - other).norm()
    }

    #[inline]
    pub fn l1_distance(self, other: Self) -> f64 {
        let d = self - other;
        d.x.abs() + d.y.abs()
    }

    /// Counter-clockwise perpendicular.
    #[inline]
    pub fn perp(self) -> Self {
        Self::new(-self.y, self.x)
    }

    #[inline]
    pub fn lerp(self, other: Self, t: f64) -> Self {
        self + (other - self) * t
    }

    #[inline]
    pub fn midpoint(self, other: Self) -> Self {
        Self::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Point2;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    #[inline]
    fn mul(self, rhs: f64) -> Self {
        Self::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

impl From<[f64; 2]> for Point2 {
    fn from([x, y]: [f64; 2]) -> Self {
        Self::new(x, y)
    }
}

impl From<(f64, f64)> for Point2 {
    fn from((x, y): (f64, f64)) -> Self {
        Self::new(x, y)
    }
}

/// An ordered vertex chain, optionally closed.
///
/// Construction enforces: at least two vertices (three when closed), finite
/// coordinates, no two consecutive vertices within [`MIN_VERTEX_SEPARATION`],
/// and for closed polylines the closing edge is implicit (`first != last`).
#[derive(Clone, Debug, PartialEq)]
pub struct Polyline {
    vertices: Vec<Point2>,
    closed: bool,
}

impl Polyline {
    pub fn new(vertices: Vec<Point2>, closed: bool) -> Result<Self> {
        let min = if closed { 3 } else { 2 };
        if vertices.len() < min {
            return Err(Error::InvalidPolyline(format!(
                "{} vertices, need at least {min}",
                vertices.len()
            )));
        }
        if let Some(i) = vertices.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidPolyline(format!("vertex {i} is not finite")));
        }
        for (i, w) in vertices.windows(2).enumerate() {
            if w[0].distance(w[1]) <= MIN_VERTEX_SEPARATION {
                return Err(Error::InvalidPolyline(format!(
                    "vertices {i} and {} coincide",
                    i + 1
                )));
            }
        }
        if closed && vertices[0].distance(vertices[vertices.len() - 1]) <= MIN_VERTEX_SEPARATION {
            return Err(Error::InvalidPolyline(
                "closed polyline repeats its first vertex at the end".into(),
            ));
        }
        Ok(Self { vertices, closed })
    }

    pub fn open(vertices: Vec<Point2>) -> Result<Self> {
        Self::new(vertices, false)
    }

    pub fn closed(vertices: Vec<Point2>) -> Result<Self> {
        Self::new(vertices, true)
    }

    /// Builds an open polyline from `(x, y)` pairs.
    pub fn from_xy(coords: &[(f64, f64)], closed: bool) -> Result<Self> {
        Self::new(coords.iter().map(|&c| c.into()).collect(), closed)
    }

    #[inline]
    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    #[inline]
    pub fn into_vertices(self) -> Vec<Point2> {
        self.vertices
    }

    #[inline]
    pub fn is_closed(&self) -> bool {
        self.closed
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Number of edges, counting the wrap edge of a closed polyline.
    pub fn edge_count(&self) -> usize {
        if self.closed {
            self.vertices.len()
        } else {
            self.vertices.len() - 1
        }
    }

    /// Edge `i` as `(start, end)`; for closed polylines edge `len-1` wraps.
    pub fn edge(&self, i: usize) -> (Point2, Point2) {
        let n = self.vertices.len();
        (self.vertices[i], self.vertices[(i + 1) % n])
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        (0..self.edge_count()).map(move |i| self.edge(i))
    }

    /// Same shape, vertex order reversed.
    pub fn reversed(&self) -> Self {
        let mut vertices = self.vertices.clone();
        vertices.reverse();
        Self { vertices, closed: self.closed }
    }

    /// Reorders vertices so that `out[i] = self[order[i]]`.
    ///
    /// `order` must be a permutation of `0..len`; the result is validated
    /// again since a reordering can place coincident vertices side by side.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.vertices.len() {
            return Err(Error::DensityMismatch { expected: self.vertices.len(), actual: order.len() });
        }
        Self::new(order.iter().map(|&i| self.vertices[i]).collect(), self.closed)
    }

    pub fn translated(&self, offset: Point2) -> Self {
        Self {
            vertices: self.vertices.iter().map(|&v| v + offset).collect(),
            closed: self.closed,
        }
    }
}

/// A non-degenerate directed segment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    a: Point2,
    b: Point2,
}

impl Segment {
    pub fn new(a: Point2, b: Point2) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidParameter { name: "segment", reason: "non-finite endpoint".into() });
        }
        if a.distance(b) <= MIN_VERTEX_SEPARATION {
            return Err(Error::DegenerateSegment);
        }
        Ok(Self { a, b })
    }

    #[inline]
    pub fn a(&self) -> Point2 {
        self.a
    }

    #[inline]
    pub fn b(&self) -> Point2 {
        self.b
    }

    #[inline]
    pub fn direction(&self) -> Point2 {
        self.b - self.a
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.direction().norm()
    }
}

/// Total length, including the wrap edge of a closed polyline.
pub fn arc_length(p: &Polyline) -> f64 {
    p.edges().map(|(a, b)| a.distance(b)).sum()
}

/// Parameter of the projection of `v` onto the line through `a`,`b`, clamped to
/// `[0, 1]`, together with the closest point on the closed segment.
#[inline]
pub(crate) fn project_onto_segment(v: Point2, a: Point2, b: Point2) -> (f64, Point2) {
    let ab = b - a;
    let len_sq = ab.norm_sq();
    if len_sq == 0.0 {
        return (0.0, a);
    }
    let t = ((v - a).dot(ab) / len_sq).clamp(0.0, 1.0);
    (t, a + ab * t)
}

#[inline]
pub(crate) fn point_to_segment(v: Point2, a: Point2, b: Point2) -> f64 {
    let (_, q) = project_onto_segment(v, a, b);
    v.distance(q)
}

/// Euclidean distance from `v` to the closed segment `e`.
pub fn point_segment_distance(v: Point2, e: &Segment) -> f64 {
    point_to_segment(v, e.a, e.b)
}

/// Cosine of the angle between the directions of two segments.
pub fn direction_cosine(e1: &Segment, e2: &Segment) -> f64 {
    let d1 = e1.direction();
    let d2 = e2.direction();
    (d1.dot(d2) / (d1.norm() * d2.norm())).clamp(-1.0, 1.0)
}

/// Cosine of the turning angle at the vertex shared by `prev` and `next`.
pub fn turning_cosine(prev: &Segment, next: &Segment) -> Result<f64> {
    if prev.b.distance(next.a) > MIN_VERTEX_SEPARATION {
        return Err(Error::NotAdjacent);
    }
    Ok(direction_cosine(prev, next))
}

/// Ramer–Douglas–Peucker simplification.
///
/// Open polylines keep both endpoints. Closed polylines are split at vertex 0
/// and the vertex farthest from it, and each half is simplified as an open
/// chain; at least three vertices are kept.
pub fn rdp_simplify(p: &Polyline, epsilon: f64) -> Result<Polyline> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidParameter { name: "epsilon", reason: format!("{epsilon} is not a positive finite distance") });
    }
    let v = p.vertices();
    let n = v.len();
    if (!p.is_closed() && n <= 2) || (p.is_closed() && n <= 3) {
        return Ok(p.clone());
    }

    let mut keep = vec![false; n];
    if !p.is_closed() {
        keep[0] = true;
        keep[n - 1] = true;
        rdp_mark(v, 0, n - 1, epsilon, &mut keep);
    } else {
        // Chain 0..=n where index n stands for vertex 0 again.
        let ring: Vec<Point2> = v.iter().copied().chain(core::iter::once(v[0])).collect();
        let far = farthest_from(v, v[0]);
        keep[0] = true;
        keep[far] = true;
        let mut ring_keep = vec![false; n + 1];
        rdp_mark(&ring, 0, far, epsilon, &mut ring_keep);
        rdp_mark(&ring, far, n, epsilon, &mut ring_keep);
        for i in 1..n {
            keep[i] |= ring_keep[i];
        }
        if keep.iter().filter(|&&k| k).count() < 3 {
            // Everything collapsed onto the 0..far chord; keep the widest vertex.
            let (a, b) = (v[0], v[far]);
            let mut best = None;
            let mut best_d = -1.0;
            for (i, &q) in v.iter().enumerate() {
                if keep[i] {
                    continue;
                }
                let d = point_to_segment(q, a, b);
                if d > best_d {
                    best_d = d;
                    best = Some(i);
                }
            }
            if let Some(i) = best {
                keep[i] = true;
            }
        }
    }

    let out: Vec<Point2> = v.iter().zip(&keep).filter(|(_, &k)| k).map(|(&q, _)| q).collect();
    Polyline::new(out, p.is_closed())
}

fn farthest_from(v: &[Point2], origin: Point2) -> usize {
    let mut best = 0;
    let mut best_d = -1.0;
    for (i, &q) in v.iter().enumerate() {
        let d = q.distance(origin);
        if d > best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

fn rdp_mark(v: &[Point2], first: usize, last: usize, epsilon: f64, keep: &mut [bool]) {
    let mut stack = vec![(first, last)];
    while let Some((lo, hi)) = stack.pop() {
        if hi <= lo + 1 {
            continue;
        }
        let (a, b) = (v[lo], v[hi]);
        let mut split = lo;
        let mut max_d = -1.0;
        for (i, &q) in v.iter().enumerate().take(hi).skip(lo + 1) {
            let d = point_to_segment(q, a, b);
            if d > max_d {
                max_d = d;
                split = i;
            }
        }
        if max_d > epsilon {
            keep[split] = true;
            stack.push((split, hi));
            stack.push((lo, split));
        }
    }
}

/// Cumulative arclength at each vertex, plus the total (wrap edge included
/// for closed polylines) as the last entry.
fn cumulative_lengths(p: &Polyline) -> Vec<f64> {
    let mut cum = Vec::with_capacity(p.edge_count() + 1);
    let mut acc = 0.0;
    cum.push(0.0);
    for (a, b) in p.edges() {
        acc += a.distance(b);
        cum.push(acc);
    }
    cum
}

/// Point at arclength `s` along the edge chain described by `cum`.
/// `cursor` is advanced monotonically so repeated queries walk the chain once.
fn point_at(p: &Polyline, cum: &[f64], s: f64, cursor: &mut usize) -> Point2 {
    let edges = cum.len() - 1;
    while *cursor + 1 < edges && cum[*cursor + 1] < s {
        *cursor += 1;
    }
    let (a, b) = p.edge(*cursor);
    let len = cum[*cursor + 1] - cum[*cursor];
    let t = if len > 0.0 { ((s - cum[*cursor]) / len).clamp(0.0, 1.0) } else { 0.0 };
    a.lerp(b, t)
}

/// Resamples to `n` vertices at equal arclength spacing.
///
/// Open polylines keep both endpoints exactly. Closed polylines keep vertex 0
/// exactly and space `n` vertices around the full perimeter.
pub fn resample_uniform(p: &Polyline, n: usize) -> Result<Polyline> {
    let min = if p.is_closed() { 3 } else { 2 };
    if n < min {
        return Err(Error::InvalidDensity { density: n, min });
    }
    let cum = cumulative_lengths(p);
    let total = cum[cum.len() - 1];
    let v = p.vertices();
    let mut out = Vec::with_capacity(n);
    let mut cursor = 0;
    out.push(v[0]);
    if p.is_closed() {
        for k in 1..n {
            let s = total * k as f64 / n as f64;
            out.push(point_at(p, &cum, s, &mut cursor));
        }
    } else {
        for k in 1..n - 1 {
            let s = total * k as f64 / (n - 1) as f64;
            out.push(point_at(p, &cum, s, &mut cursor));
        }
        out.push(v[v.len() - 1]);
    }
    Polyline::new(out, p.is_closed())
}

/// Raises the vertex count to `n` by subdividing edges.
///
/// Original vertices are kept in order. New vertices go, one at a time, to the
/// edge whose current sub-edge spacing is largest (lowest index on ties), and
/// end up evenly spaced within each chosen edge.
pub fn insert_by_edge_length(p: &Polyline, n: usize) -> Result<Polyline> {
    let m = p.len();
    if n <= m {
        return Err(Error::InvalidParameter {
            name: "n",
            reason: format!("target count {n} must exceed the current {m} vertices"),
        });
    }
    let lengths: Vec<f64> = p.edges().map(|(a, b)| a.distance(b)).collect();
    let mut counts = vec![0usize; lengths.len()];
    for _ in 0..n - m {
        let mut best = 0;
        let mut best_gap = f64::NEG_INFINITY;
        for (j, (&len, &k)) in lengths.iter().zip(&counts).enumerate() {
            let gap = len / (k + 1) as f64;
            if gap > best_gap {
                best_gap = gap;
                best = j;
            }
        }
        counts[best] += 1;
    }

    let mut out = Vec::with_capacity(n);
    for (j, &k) in counts.iter().enumerate() {
        let (a, b) = p.edge(j);
        out.push(a);
        for i in 1..=k {
            out.push(a.lerp(b, i as f64 / (k + 1) as f64));
        }
    }
    if !p.is_closed() {
        out.push(p.vertices()[m - 1]);
    }
    Polyline::new(out, p.is_closed())
}

/// Inserts the midpoint of every edge.
///
/// Open: `d` vertices become `2d - 1`, originals at even indices.
/// Closed: `d` become `2d`, the wrap-edge midpoint last.
pub fn midpoint_densify(p: &Polyline) -> Polyline {
    Polyline { vertices: midpoint_densify_points(p.vertices(), p.is_closed()), closed: p.is_closed() }
}

/// [`midpoint_densify`] on a bare vertex chain.
pub fn midpoint_densify_points(v: &[Point2], closed: bool) -> Vec<Point2> {
    let n = v.len();
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        out.push(v[i]);
        if i + 1 < n {
            out.push(v[i].midpoint(v[i + 1]));
        } else if closed {
            out.push(v[i].midpoint(v[0]));
        }
    }
    out
}
