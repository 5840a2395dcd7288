//! Progressive polyline supervision.
//!
//! A predicted element at layer density `d` has two kinds of vertices:
//! *original* ones carried over from the previous layer, and *inserted* ones
//! created by densification. Originals are pulled onto their matched target
//! vertices with an L1 vertex loss. The edge loss constrains inserted vertices
//! to lie on the ground-truth edge they subdivide and aligns the slopes of
//! original edges and the turning angles between them. Category logits are
//! supervised with a softmax focal loss.
//!
//! Every term returns its analytic gradient with respect to the predicted
//! vertex coordinates (or logits); [`crate::gradcheck`] compares them against
//! central finite differences.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::geometry::{project_onto_segment, Point2, MIN_VERTEX_SEPARATION};
use crate::hsmr::{ElementCategory, CATEGORY_COUNT};
use crate::math;
use crate::{Error, Result};

/// Category logits in [`ElementCategory::ALL`] order.
pub type Logits = [f64; CATEGORY_COUNT];

/// Loss scales.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights {
    pub lambda_cls: f64,
    pub lambda_v: f64,
    pub lambda_p: f64,
    pub lambda_s: f64,
    pub lambda_a: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { lambda_cls: 2.0, lambda_v: 5.0, lambda_p: 5.0, lambda_s: 5e-3, lambda_a: 5e-3 }
    }
}

impl LossWeights {
    /// Same weights with the edge loss switched off.
    pub fn without_edge_loss(self) -> Self {
        Self { lambda_p: 0.0, lambda_s: 0.0, lambda_a: 0.0, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.lambda_cls, self.lambda_v, self.lambda_p, self.lambda_s, self.lambda_a];
        if all.iter().all(|w| *w >= 0.0 && w.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidParameter { name: "weights", reason: "loss weights must be finite and >= 0".into() })
        }
    }
}

/// Focal-loss constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FocalParams {
    pub alpha: f64,
    pub gamma: f64,
}

impl Default for FocalParams {
    fn default() -> Self {
        Self { alpha: 0.25, gamma: 2.0 }
    }
}

/// Which vertices of a prediction are originals and which were inserted,
/// grouped by the original edge they subdivide.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VertexRoleMask {
    len: usize,
    closed: bool,
    original: Vec<usize>,
    inserted: Vec<Vec<usize>>,
}

impl VertexRoleMask {
    /// No inserted vertices: first layer, or a layer whose density did not grow.
    pub fn all_original(len: usize, closed: bool) -> Self {
        let original: Vec<usize> = (0..len).collect();
        let edges = if closed { len } else { len.saturating_sub(1) };
        Self { len, closed, original, inserted: vec![Vec::new(); edges] }
    }

    /// Roles after midpoint densification of a `prev`-vertex chain: originals
    /// at even indices, one inserted vertex per original edge.
    pub fn after_midpoint(prev: usize, closed: bool) -> Self {
        let len = if closed { 2 * prev } else { 2 * prev - 1 };
        let flags: Vec<bool> = (0..len).map(|i| i % 2 == 0).collect();
        Self::from_flags(&flags, closed).expect("midpoint layout is always valid")
    }

    /// Builds a mask from per-vertex `is_original` flags. The first vertex must
    /// be original, and the last too for open chains.
    pub fn from_flags(flags: &[bool], closed: bool) -> Result<Self> {
        let len = flags.len();
        if len == 0 || !flags[0] || (!closed && !flags[len - 1]) {
            return Err(Error::InvalidParameter {
                name: "mask",
                reason: "chain must start (and, when open, end) with an original vertex".into(),
            });
        }
        let original: Vec<usize> = (0..len).filter(|&i| flags[i]).collect();
        let edges = if closed { original.len() } else { original.len() - 1 };
        let mut inserted = vec![Vec::new(); edges];
        let mut edge = 0;
        for (i, &is_orig) in flags.iter().enumerate().skip(1) {
            if is_orig {
                edge += 1;
            } else {
                inserted[edge].push(i);
            }
        }
        Ok(Self { len, closed, original, inserted })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn is_closed(&self) -> bool {
        self.closed
    }

    #[inline]
    pub fn original(&self) -> &[usize] {
        &self.original
    }

    /// Inserted vertex indices on original edge `j`.
    #[inline]
    pub fn inserted_on(&self, j: usize) -> &[usize] {
        &self.inserted[j]
    }

    pub fn is_original(&self, i: usize) -> bool {
        self.original.binary_search(&i).is_ok()
    }

    /// Number of original edges (the wrap edge counts for closed chains).
    #[inline]
    pub fn original_edge_count(&self) -> usize {
        self.inserted.len()
    }

    pub fn inserted_count(&self) -> usize {
        self.inserted.iter().map(Vec::len).sum()
    }

    /// Endpoint indices of original edge `j`.
    #[inline]
    fn edge(&self, j: usize) -> (usize, usize) {
        let n = self.original.len();
        (self.original[j], self.original[(j + 1) % n])
    }
}

/// A loss value with its gradient per predicted vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct LossTerm {
    pub value: f64,
    pub gradient: Vec<Point2>,
}

/// All supervision terms for one matched pair.
#[derive(Clone, Debug, PartialEq)]
pub struct LossBreakdown {
    pub vertex: f64,
    pub edge_point: f64,
    pub edge_slope: f64,
    pub edge_angle: f64,
    pub classification: f64,
    /// Weighted sum of the terms above.
    pub total: f64,
    pub vertex_grad: Vec<Point2>,
    pub logit_grad: Logits,
}

fn check_shapes(pred: &[Point2], target: &[Point2], mask: &VertexRoleMask) -> Result<()> {
    if pred.len() != target.len() {
        return Err(Error::DensityMismatch { expected: target.len(), actual: pred.len() });
    }
    if mask.len() != pred.len() {
        return Err(Error::DensityMismatch { expected: mask.len(), actual: pred.len() });
    }
    Ok(())
}

fn vertex_term(pred: &[Point2], target: &[Point2], mask: &VertexRoleMask, scale: f64, grad: Option<&mut [Point2]>) -> f64 {
    let mut value = 0.0;
    match grad {
        Some(g) => {
            for &i in mask.original() {
                let d = pred[i] - target[i];
                value += d.x.abs() + d.y.abs();
                g[i] = g[i] + Point2::new(math::sign(d.x), math::sign(d.y)) * scale;
            }
        }
        None => {
            for &i in mask.original() {
                value += pred[i].l1_distance(target[i]);
            }
        }
    }
    value
}

fn edge_point_term(pred: &[Point2], target: &[Point2], mask: &VertexRoleMask, scale: f64, mut grad: Option<&mut [Point2]>) -> f64 {
    let mut value = 0.0;
    for j in 0..mask.original_edge_count() {
        let (a, b) = mask.edge(j);
        let (ta, tb) = (target[a], target[b]);
        for &k in mask.inserted_on(j) {
            let (_, q) = project_onto_segment(pred[k], ta, tb);
            let off = pred[k] - q;
            let d = off.norm();
            value += d;
            if let Some(g) = grad.as_deref_mut() {
                if d > 0.0 {
                    g[k] = g[k] + off * (scale / d);
                }
            }
        }
    }
    value
}

fn slope_term(pred: &[Point2], target: &[Point2], mask: &VertexRoleMask, scale: f64, mut grad: Option<&mut [Point2]>) -> Result<f64> {
    let mut value = 0.0;
    for j in 0..mask.original_edge_count() {
        let (a, b) = mask.edge(j);
        let e_hat = pred[b] - pred[a];
        let e = target[b] - target[a];
        let (len_hat, len) = (e_hat.norm(), e.norm());
        if len_hat < MIN_VERTEX_SEPARATION {
            return Err(Error::DegenerateEdge { edge: j });
        }
        if len < MIN_VERTEX_SEPARATION {
            return Err(Error::InvalidParameter { name: "target", reason: format!("target edge {j} is degenerate") });
        }
        let u = e_hat * (1.0 / len_hat);
        let t = e * (1.0 / len);
        // 1 - cos written as half the squared chord between unit vectors, exact at zero
        value += 0.5 * (u - t).norm_sq();
        if let Some(g) = grad.as_deref_mut() {
            // projection of (u - t) orthogonal to u, over |e_hat|; vanishes exactly when u == t
            let r = u - t;
            let ge = (r - u * u.dot(r)) * (scale / len_hat);
            g[b] = g[b] + ge;
            g[a] = g[a] - ge;
        }
    }
    Ok(value)
}

#[inline]
fn turning_angle(prev: Point2, next: Point2) -> f64 {
    math::atan2(prev.cross(next), prev.dot(next))
}

fn angle_term(pred: &[Point2], target: &[Point2], mask: &VertexRoleMask, scale: f64, mut grad: Option<&mut [Point2]>) -> Result<f64> {
    let n_edges = mask.original_edge_count();
    let n_orig = mask.original().len();
    // (incoming edge, outgoing edge) around each interior original vertex
    let corners: Vec<(usize, usize)> = if mask.is_closed() {
        (0..n_orig).map(|j| ((j + n_edges - 1) % n_edges, j)).collect()
    } else {
        (1..n_orig.saturating_sub(1)).map(|j| (j - 1, j)).collect()
    };
    let mut value = 0.0;
    for (p, q) in corners {
        let (pa, pb) = mask.edge(p);
        let (qa, qb) = mask.edge(q);
        let (ep_hat, eq_hat) = (pred[pb] - pred[pa], pred[qb] - pred[qa]);
        let (ep, eq) = (target[pb] - target[pa], target[qb] - target[qa]);
        for (edge, v) in [(p, ep_hat), (q, eq_hat)] {
            if v.norm() < MIN_VERTEX_SEPARATION {
                return Err(Error::DegenerateEdge { edge });
            }
        }
        if ep.norm() < MIN_VERTEX_SEPARATION || eq.norm() < MIN_VERTEX_SEPARATION {
            return Err(Error::InvalidParameter { name: "target", reason: "degenerate target edge".into() });
        }
        let diff = turning_angle(ep_hat, eq_hat) - turning_angle(ep, eq);
        value += 1.0 - math::cos(diff);
        if let Some(g) = grad.as_deref_mut() {
            // d(1 - cos(diff))/d diff = sin(diff); d atan2-direction/d e = perp(e) / |e|^2
            let s = math::sin(diff) * scale;
            let gq = eq_hat.perp() * (s / eq_hat.norm_sq());
            let gp = ep_hat.perp() * (-s / ep_hat.norm_sq());
            g[qb] = g[qb] + gq;
            g[qa] = g[qa] - gq;
            g[pb] = g[pb] + gp;
            g[pa] = g[pa] - gp;
        }
    }
    Ok(value)
}

fn term(value: f64, gradient: Vec<Point2>) -> LossTerm {
    LossTerm { value, gradient }
}

/// Sum of L1 distances between original predicted vertices and their targets.
///
/// `target` must already be in the matched vertex order.
pub fn vertex_loss(pred: &[Point2], target: &[Point2], mask: &VertexRoleMask) -> Result<LossTerm> {
    check_shapes(pred, target, mask)?;
    let mut g = vec![Point2::ZERO; pred.len()];
    let v = vertex_term(pred, target, mask, 1.0, Some(&mut g));
    Ok(term(v, g))
}

/// Distance of each inserted vertex to the ground-truth edge spanned by the
/// target's original vertices around it.
pub fn edge_point_loss(pred: &[Point2], target: &[Point2], mask: &VertexRoleMask) -> Result<LossTerm> {
    check_shapes(pred, target, mask)?;
    let mut g = vec![Point2::ZERO; pred.len()];
    let v = edge_point_term(pred, target, mask, 1.0, Some(&mut g));
    Ok(term(v, g))
}

/// `sum_j (1 - cos)` between predicted and target original edges.
pub fn edge_slope_loss(pred: &[Point2], target: &[Point2], mask: &VertexRoleMask) -> Result<LossTerm> {
    check_shapes(pred, target, mask)?;
    let mut g = vec![Point2::ZERO; pred.len()];
    let v = slope_term(pred, target, mask, 1.0, Some(&mut g))?;
    Ok(term(v, g))
}

/// `sum (1 - cos(turn_pred - turn_target))` over turning angles at original
/// vertices (interior ones for open chains, all of them for closed).
pub fn edge_angle_loss(pred: &[Point2], target: &[Point2], mask: &VertexRoleMask) -> Result<LossTerm> {
    check_shapes(pred, target, mask)?;
    if pred.len() < 3 {
        return Err(Error::InvalidDensity { density: pred.len(), min: 3 });
    }
    let mut g = vec![Point2::ZERO; pred.len()];
    let v = angle_term(pred, target, mask, 1.0, Some(&mut g))?;
    Ok(term(v, g))
}

/// Softmax probabilities.
pub fn softmax(logits: &Logits) -> Logits {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = [0.0; CATEGORY_COUNT];
    let mut sum = 0.0;
    for (o, &z) in out.iter_mut().zip(logits) {
        *o = math::exp(z - m);
        sum += *o;
    }
    for o in &mut out {
        *o /= sum;
    }
    out
}

fn log_sum_exp(logits: &Logits) -> f64 {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + math::ln(logits.iter().map(|&z| math::exp(z - m)).sum::<f64>())
}

/// Softmax focal loss `-alpha (1 - p_t)^gamma ln p_t` and its logit gradient.
pub fn focal_loss(logits: &Logits, category: ElementCategory, params: FocalParams) -> (f64, Logits) {
    let t = category.index();
    let lse = log_sum_exp(logits);
    let log_p = logits[t] - lse;
    let p = math::exp(log_p);
    let q = 1.0 - p;
    let FocalParams { alpha, gamma } = params;
    let modulating = libm::pow(q, gamma);
    let value = -alpha * modulating * log_p;

    // dL/dz_k = alpha * [gamma q^(gamma-1) p ln p - q^gamma] * (delta_kt - p_k)
    let lead = if q > 0.0 { gamma * libm::pow(q, gamma - 1.0) * p * log_p } else { 0.0 };
    let coef = alpha * (lead - modulating);
    let mut grad = [0.0; CATEGORY_COUNT];
    for (k, g) in grad.iter_mut().enumerate() {
        let p_k = math::exp(logits[k] - lse);
        let delta = if k == t { 1.0 } else { 0.0 };
        *g = coef * (delta - p_k);
    }
    (value, grad)
}

fn polyline_terms(pred: &[Point2], target: &[Point2], mask: &VertexRoleMask, w: &LossWeights, grad: Option<&mut [Point2]>) -> Result<[f64; 4]> {
    check_shapes(pred, target, mask)?;
    let mut grad = grad;
    let v = vertex_term(pred, target, mask, w.lambda_v, grad.as_deref_mut());
    let p = edge_point_term(pred, target, mask, w.lambda_p, grad.as_deref_mut());
    let s = slope_term(pred, target, mask, w.lambda_s, grad.as_deref_mut())?;
    let a = if pred.len() >= 3 { angle_term(pred, target, mask, w.lambda_a, grad)? } else { 0.0 };
    Ok([v, p, s, a])
}

#[inline]
fn weighted(terms: &[f64; 4], w: &LossWeights) -> f64 {
    w.lambda_v * terms[0] + w.lambda_p * terms[1] + w.lambda_s * terms[2] + w.lambda_a * terms[3]
}

/// Weighted vertex + edge loss for one matched pair.
pub fn polyline_loss(pred: &[Point2], target: &[Point2], mask: &VertexRoleMask, w: &LossWeights) -> Result<LossBreakdown> {
    let mut g = vec![Point2::ZERO; pred.len()];
    let terms = polyline_terms(pred, target, mask, w, Some(&mut g))?;
    Ok(LossBreakdown {
        vertex: terms[0],
        edge_point: terms[1],
        edge_slope: terms[2],
        edge_angle: terms[3],
        classification: 0.0,
        total: weighted(&terms, w),
        vertex_grad: g,
        logit_grad: [0.0; CATEGORY_COUNT],
    })
}

/// Value of [`polyline_loss`] without the gradient.
pub fn polyline_loss_value(pred: &[Point2], target: &[Point2], mask: &VertexRoleMask, w: &LossWeights) -> Result<f64> {
    polyline_terms(pred, target, mask, w, None).map(|t| weighted(&t, w))
}

/// [`polyline_loss`] plus the weighted focal classification term.
pub fn element_loss(
    pred: &[Point2],
    logits: &Logits,
    target: &[Point2],
    category: ElementCategory,
    mask: &VertexRoleMask,
    w: &LossWeights,
    focal: FocalParams,
) -> Result<LossBreakdown> {
    let mut out = polyline_loss(pred, target, mask, w)?;
    let (cls, g) = focal_loss(logits, category, focal);
    out.classification = cls;
    out.total += w.lambda_cls * cls;
    out.logit_grad = g.map(|x| x * w.lambda_cls);
    Ok(out)
}
