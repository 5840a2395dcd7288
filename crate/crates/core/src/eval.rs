//! Chamfer-distance average precision.
//!
//! Instances are compared by symmetric Chamfer distance between densely
//! resampled copies. Predictions are matched greedily in descending
//! confidence, each ground truth at most once; AP is the area under the
//! precision envelope, averaged over distance thresholds per category and then
//! over categories.

use alloc::vec;
use alloc::vec::Vec;

use crate::geometry::{resample_uniform, Point2, Polyline};
use crate::hsmr::{ElementCategory, MapElement};
use crate::math;
use crate::matching::GroundTruthSet;
use crate::{Error, Result};

/// Default distance thresholds in meters.
pub const DEFAULT_THRESHOLDS: [f64; 3] = [0.5, 1.0, 1.5];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChamferParams {
    pub sample_count: usize,
}

impl Default for ChamferParams {
    fn default() -> Self {
        Self { sample_count: 100 }
    }
}

/// One predicted map element with its confidence.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoredElement {
    pub element: MapElement,
    pub confidence: f64,
}

/// Direction along which the start vertex of a closed polyline is chosen.
/// Oblique, so that corners sharing an axis-aligned clip border do not tie.
const RING_ANCHOR: Point2 = Point2::new(0.6, 0.8);

/// A closed polyline relabeled to start at its extreme vertex along
/// [`RING_ANCHOR`] and run counter-clockwise, so its samples depend on the
/// shape only.
fn canonical_ring(p: &Polyline) -> Result<Polyline> {
    let v = p.vertices();
    let n = v.len();
    let area2: f64 = (0..n).map(|i| v[i].cross(v[(i + 1) % n])).sum();
    let start = (0..n).min_by(|&a, &b| v[a].dot(RING_ANCHOR).total_cmp(&v[b].dot(RING_ANCHOR))).unwrap_or(0);
    let order: Vec<usize> = if area2 >= 0.0 {
        (0..n).map(|k| (start + k) % n).collect()
    } else {
        (0..n).map(|k| (start + n - k) % n).collect()
    };
    p.permuted(&order)
}

fn samples(p: &Polyline, n: usize) -> Result<Vec<Point2>> {
    if p.is_closed() {
        return resample_uniform(&canonical_ring(p)?, n).map(Polyline::into_vertices);
    }
    resample_uniform(p, n).map(Polyline::into_vertices)
}

fn mean_nearest(from: &[Point2], to: &[Point2]) -> f64 {
    let total: f64 = from
        .iter()
        .map(|&a| to.iter().map(|&b| (a - b).norm_sq()).fold(f64::INFINITY, f64::min))
        .map(math::sqrt)
        .sum();
    total / from.len() as f64
}

/// Symmetric Chamfer distance between two polylines resampled to
/// `sample_count` points each. Closed polylines are sampled from a canonical
/// start vertex, which makes the distance independent of cyclic relabeling.
pub fn chamfer_distance(a: &Polyline, b: &Polyline, p: ChamferParams) -> Result<f64> {
    let min = if a.is_closed() || b.is_closed() { 3 } else { 2 };
    if p.sample_count < min {
        return Err(Error::InvalidDensity { density: p.sample_count, min });
    }
    let sa = samples(a, p.sample_count)?;
    let sb = samples(b, p.sample_count)?;
    Ok(0.5 * (mean_nearest(&sa, &sb) + mean_nearest(&sb, &sa)))
}

/// A prediction's outcome after greedy matching.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatchLabel {
    pub confidence: f64,
    pub true_positive: bool,
}

/// Indices of `preds` of `category`, sorted by descending confidence (stable).
fn ranked(preds: &[ScoredElement], category: ElementCategory) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..preds.len()).filter(|&i| preds[i].element.category() == category).collect();
    idx.sort_by(|&a, &b| preds[b].confidence.total_cmp(&preds[a].confidence));
    idx
}

/// Chamfer distances between every ranked prediction and every ground truth
/// of one category: `(ranked prediction confidences, distances[p][g])`.
fn distance_table(
    preds: &[ScoredElement],
    gts: &[MapElement],
    category: ElementCategory,
    params: ChamferParams,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let order = ranked(preds, category);
    let gt_shapes: Vec<&Polyline> = gts.iter().filter(|g| g.category() == category).map(MapElement::shape).collect();
    let mut conf = Vec::with_capacity(order.len());
    let mut dist = Vec::with_capacity(order.len());
    for i in order {
        conf.push(preds[i].confidence);
        let row: Result<Vec<f64>> =
            gt_shapes.iter().map(|g| chamfer_distance(preds[i].element.shape(), g, params)).collect();
        dist.push(row?);
    }
    Ok((conf, dist))
}

fn greedy_labels(conf: &[f64], dist: &[Vec<f64>], threshold: f64) -> Vec<MatchLabel> {
    let n_gt = dist.first().map_or(0, Vec::len);
    let mut taken = vec![false; n_gt];
    conf.iter()
        .zip(dist)
        .map(|(&confidence, row)| {
            let mut best: Option<usize> = None;
            for (g, &d) in row.iter().enumerate() {
                if !taken[g] && d < threshold && best.is_none_or(|b| d < row[b]) {
                    best = Some(g);
                }
            }
            if let Some(g) = best {
                taken[g] = true;
            }
            MatchLabel { confidence, true_positive: best.is_some() }
        })
        .collect()
}

/// Greedy one-to-one matching of the predictions of `category` in one scene.
///
/// Predictions are visited by descending confidence; each becomes a true
/// positive if some still-unmatched ground truth of the same category lies
/// closer than `threshold` (the nearest such one is consumed).
pub fn match_instances(
    preds: &[ScoredElement],
    gts: &[MapElement],
    category: ElementCategory,
    threshold: f64,
    params: ChamferParams,
) -> Result<Vec<MatchLabel>> {
    let (conf, dist) = distance_table(preds, gts, category, params)?;
    Ok(greedy_labels(&conf, &dist, threshold))
}

/// Precision/recall point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrPoint {
    pub recall: f64,
    pub precision: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ApResult {
    pub category: ElementCategory,
    pub threshold: f64,
    /// `None` when the category has no ground truth.
    pub ap: Option<f64>,
    pub curve: Vec<PrPoint>,
    pub true_positives: usize,
    pub false_positives: usize,
    pub gt_count: usize,
}

/// All-point interpolated AP over labels pooled across scenes.
///
/// Labels are re-sorted by descending confidence (stable, so callers that pass
/// them pre-sorted keep their order among ties).
pub fn average_precision(labels: &[MatchLabel], gt_count: usize, category: ElementCategory, threshold: f64) -> ApResult {
    let mut sorted = labels.to_vec();
    sorted.sort_by(|a, b| b.confidence.total_cmp(&a.confidence));
    let mut curve = Vec::with_capacity(sorted.len());
    let (mut tp, mut fp) = (0usize, 0usize);
    for l in &sorted {
        if l.true_positive {
            tp += 1;
        } else {
            fp += 1;
        }
        let recall = if gt_count == 0 { 0.0 } else { tp as f64 / gt_count as f64 };
        curve.push(PrPoint { recall, precision: tp as f64 / (tp + fp) as f64 });
    }
    let ap = if gt_count == 0 {
        None
    } else {
        // precision envelope: running max from the right
        let mut envelope: Vec<f64> = curve.iter().map(|p| p.precision).collect();
        for i in (0..envelope.len().saturating_sub(1)).rev() {
            envelope[i] = envelope[i].max(envelope[i + 1]);
        }
        let mut area = 0.0;
        let mut prev_recall = 0.0;
        for (pt, env) in curve.iter().zip(&envelope) {
            area += (pt.recall - prev_recall) * env;
            prev_recall = pt.recall;
        }
        Some(area.clamp(0.0, 1.0))
    };
    ApResult { category, threshold, ap, curve, true_positives: tp, false_positives: fp, gt_count }
}

/// AP of one category across thresholds.
#[derive(Clone, Debug, PartialEq)]
pub struct CategoryScore {
    pub category: ElementCategory,
    pub per_threshold: Vec<ApResult>,
    /// Mean AP over thresholds; `None` if the category has no ground truth.
    pub mean_ap: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MapScore {
    pub thresholds: Vec<f64>,
    pub categories: Vec<CategoryScore>,
    /// Mean of the per-category means over categories present in the ground truth.
    pub map: f64,
    /// Categories left out of the mean because no scene contains them.
    pub excluded: Vec<ElementCategory>,
}

impl MapScore {
    pub fn category(&self, c: ElementCategory) -> Option<&CategoryScore> {
        self.categories.iter().find(|s| s.category == c)
    }

    pub fn ap(&self, c: ElementCategory, threshold: f64) -> Option<f64> {
        self.category(c)?.per_threshold.iter().find(|r| r.threshold == threshold)?.ap
    }
}

/// Per-category AP at each threshold, pooled over aligned scene lists.
pub fn map_score(
    pred_scenes: &[Vec<ScoredElement>],
    gt_scenes: &[GroundTruthSet],
    thresholds: &[f64],
    params: ChamferParams,
) -> Result<MapScore> {
    if pred_scenes.len() != gt_scenes.len() {
        return Err(Error::SizeMismatch(alloc::format!(
            "{} prediction scenes vs {} ground-truth scenes",
            pred_scenes.len(),
            gt_scenes.len()
        )));
    }
    if thresholds.is_empty() || thresholds.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::InvalidParameter { name: "thresholds", reason: "need at least one positive threshold".into() });
    }
    let mut categories = Vec::new();
    let mut excluded = Vec::new();
    let mut means = Vec::new();
    for category in ElementCategory::REAL {
        let tables: Vec<(Vec<f64>, Vec<Vec<f64>>)> = pred_scenes
            .iter()
            .zip(gt_scenes)
            .map(|(p, g)| distance_table(p, &g.elements, category, params))
            .collect::<Result<_>>()?;
        let gt_count: usize = gt_scenes.iter().map(|g| g.count(category)).sum();
        let per_threshold: Vec<ApResult> = thresholds
            .iter()
            .map(|&t| {
                let labels: Vec<MatchLabel> =
                    tables.iter().flat_map(|(conf, dist)| greedy_labels(conf, dist, t)).collect();
                average_precision(&labels, gt_count, category, t)
            })
            .collect();
        let mean_ap = if gt_count == 0 {
            excluded.push(category);
            None
        } else {
            let m = per_threshold.iter().filter_map(|r| r.ap).sum::<f64>() / thresholds.len() as f64;
            means.push(m);
            Some(m)
        };
        categories.push(CategoryScore { category, per_threshold, mean_ap });
    }
    let map = if means.is_empty() { 0.0 } else { means.iter().sum::<f64>() / means.len() as f64 };
    Ok(MapScore { thresholds: thresholds.to_vec(), categories, map, excluded })
}
