//! Set matching between predicted and ground-truth elements.
//!
//! Ground truth is padded to the prediction count with empty slots. The cost
//! of assigning prediction `k` to a real slot `i` is the negated class
//! probability of the slot's category plus the mean L1 vertex distance,
//! minimized over the slot's equivalent vertex orderings. Padded slots cost
//! nothing. The optimal one-to-one assignment comes from the Hungarian method.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::geometry::{Point2, Polyline};
use crate::hsmr::{element_at_density, equivalent_permutations, ElementCategory, MapElement, PermutationSet};
use crate::losses::{softmax, Logits};
use crate::{Error, Result};

/// A candidate element: free vertex coordinates plus category logits.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictedElement {
    pub vertices: Vec<Point2>,
    pub logits: Logits,
}

impl PredictedElement {
    pub fn new(vertices: Vec<Point2>, logits: Logits) -> Self {
        Self { vertices, logits }
    }

    pub fn probabilities(&self) -> Logits {
        softmax(&self.logits)
    }

    pub fn density(&self) -> usize {
        self.vertices.len()
    }
}

/// The `M` real ground-truth elements of one scene.
///
/// Padding to `N` slots is implicit: matching treats slots `M..N` as empty.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GroundTruthSet {
    pub elements: Vec<MapElement>,
}

impl GroundTruthSet {
    pub fn new(elements: Vec<MapElement>) -> Self {
        Self { elements }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Every element rendered at density `d` with its equivalence set.
    pub fn match_targets(&self, d: usize) -> Result<Vec<MatchTarget>> {
        self.elements.iter().map(|e| MatchTarget::from_element(e, d)).collect()
    }

    pub fn count(&self, category: ElementCategory) -> usize {
        self.elements.iter().filter(|e| e.category() == category).count()
    }
}

/// A ground-truth element prepared for matching at one density.
#[derive(Clone, Debug, PartialEq)]
pub struct MatchTarget {
    pub category: ElementCategory,
    pub shape: Polyline,
    pub perms: PermutationSet,
}

impl MatchTarget {
    pub fn from_element(e: &MapElement, d: usize) -> Result<Self> {
        Ok(Self {
            category: e.category(),
            shape: element_at_density(e, d)?,
            perms: equivalent_permutations(e, d),
        })
    }

    /// Target vertices re-indexed so that `out[pi[j]] = shape[j]`, i.e. aligned
    /// with the prediction's own vertex order under ordering `pi`.
    pub fn aligned(&self, ordering: &[usize]) -> Vec<Point2> {
        let v = self.shape.vertices();
        let mut out = vec![Point2::ZERO; v.len()];
        for (j, &i) in ordering.iter().enumerate() {
            out[i] = v[j];
        }
        out
    }
}

/// Square cost matrix; rows are ground-truth slots, columns predictions.
#[derive(Clone, Debug, PartialEq)]
pub struct CostMatrix {
    n: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::NonSquare { rows: n, cols: if n == 0 { data.len() } else { data.len() / n } });
        }
        Ok(Self { n, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(r) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::NonSquare { rows: n, cols: r.len() });
        }
        Ok(Self { n, data: rows.iter().flatten().copied().collect() })
    }

    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.n + col] = value;
    }

    /// Total cost of assigning column `sigma[i]` to each row `i`.
    pub fn cost_of(&self, sigma: &[usize]) -> f64 {
        sigma.iter().enumerate().map(|(i, &k)| self.get(i, k)).sum()
    }
}

/// Optimal matching result.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    /// Prediction index for each ground-truth slot.
    pub sigma: Vec<usize>,
    /// Best vertex ordering for each real slot; `None` for padding.
    pub orderings: Vec<Option<Vec<usize>>>,
    pub total_cost: f64,
}

impl Assignment {
    /// The ground-truth slot matched to each prediction.
    pub fn slot_of_prediction(&self) -> Vec<usize> {
        let mut inv = vec![0; self.sigma.len()];
        for (i, &k) in self.sigma.iter().enumerate() {
            inv[k] = i;
        }
        inv
    }
}

/// Minimum over `perms` of the mean L1 distance between `pred[pi[j]]` and
/// `target[j]`. Returns the cost and the index of the minimizing ordering
/// (first one on ties, so identity wins when it is optimal).
pub fn polyline_match_cost(pred: &[Point2], target: &Polyline, perms: &PermutationSet) -> Result<(f64, usize)> {
    let d = target.len();
    if pred.len() != d {
        return Err(Error::DensityMismatch { expected: d, actual: pred.len() });
    }
    if perms.density() != d {
        return Err(Error::DensityMismatch { expected: d, actual: perms.density() });
    }
    let t = target.vertices();
    let mut best = f64::INFINITY;
    let mut best_idx = 0;
    for (idx, pi) in perms.orderings().iter().enumerate() {
        let mut sum = 0.0;
        for (j, &i) in pi.iter().enumerate() {
            sum += pred[i].l1_distance(t[j]);
            if sum >= best * d as f64 {
                break;
            }
        }
        let cost = sum / d as f64;
        if cost < best {
            best = cost;
            best_idx = idx;
        }
    }
    Ok((best, best_idx))
}

/// Cost matrix plus the best ordering index for every real (slot, prediction)
/// cell, stored row-major over the `M` real slots.
#[derive(Clone, Debug, PartialEq)]
pub struct MatchCosts {
    pub costs: CostMatrix,
    pub best_ordering: Vec<usize>,
    pub real_slots: usize,
}

/// Builds the padded `N x N` matching cost matrix, `N = preds.len()`.
pub fn build_cost_matrix(preds: &[PredictedElement], targets: &[MatchTarget]) -> Result<MatchCosts> {
    let n = preds.len();
    let m = targets.len();
    if m > n {
        return Err(Error::SizeMismatch(format!("{m} ground-truth elements exceed {n} predictions")));
    }
    let probs: Vec<Logits> = preds.iter().map(PredictedElement::probabilities).collect();
    let mut costs = CostMatrix::zeros(n);
    let mut best_ordering = vec![0; m * n];
    for (i, t) in targets.iter().enumerate() {
        let c = t.category.index();
        for (k, p) in preds.iter().enumerate() {
            let (match_cost, ord) = polyline_match_cost(&p.vertices, &t.shape, &t.perms)?;
            costs.set(i, k, -probs[k][c] + match_cost);
            best_ordering[i * n + k] = ord;
        }
    }
    Ok(MatchCosts { costs, best_ordering, real_slots: m })
}

/// Minimum-cost perfect assignment (Kuhn–Munkres with potentials, O(n^3)).
///
/// Ties resolve toward the lowest column index, so results are reproducible.
/// The returned assignment has no orderings; see [`match_sets`].
pub fn hungarian(costs: &CostMatrix) -> Result<Assignment> {
    let n = costs.size();
    for r in 0..n {
        for c in 0..n {
            if !costs.get(r, c).is_finite() {
                return Err(Error::NonFinite { row: r, col: c });
            }
        }
    }
    // 1-based arrays: column 0 is the virtual root of each augmenting search.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of_col = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        row_of_col[0] = row;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of_col[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = costs.get(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of_col[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of_col[j0] = row_of_col[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut sigma = vec![0; n];
    for j in 1..=n {
        sigma[row_of_col[j] - 1] = j - 1;
    }
    let total_cost = costs.cost_of(&sigma);
    Ok(Assignment { sigma, orderings: vec![None; n], total_cost })
}

/// Builds the cost matrix, solves it, and attaches each real slot's best
/// vertex ordering.
pub fn match_sets(preds: &[PredictedElement], targets: &[MatchTarget]) -> Result<Assignment> {
    let mc = build_cost_matrix(preds, targets)?;
    let mut a = hungarian(&mc.costs)?;
    let n = preds.len();
    for (i, t) in targets.iter().enumerate() {
        let k = a.sigma[i];
        a.orderings[i] = Some(t.perms.get(mc.best_ordering[i * n + k]).to_vec());
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn divider(c: &[(f64, f64)]) -> MapElement {
        MapElement::new(ElementCategory::Divider, Polyline::from_xy(c, false).unwrap()).unwrap()
    }

    fn confident(cat: ElementCategory) -> Logits {
        let mut l = [0.0; 4];
        l[cat.index()] = 50.0;
        l
    }

    #[test]
    fn match_cost_examples() {
        let e = divider(&[(0.0, 0.0), (1.0, 1.0), (2.0, 0.0)]);
        let t = MatchTarget::from_element(&e, 3).unwrap();
        let pred = t.shape.vertices().to_vec();
        assert_eq!(polyline_match_cost(&pred, &t.shape, &t.perms).unwrap(), (0.0, 0));
        let rev: Vec<Point2> = pred.iter().rev().copied().collect();
        let (c, idx) = polyline_match_cost(&rev, &t.shape, &t.perms).unwrap();
        assert_eq!(c, 0.0);
        assert_eq!(t.perms.get(idx), &[2, 1, 0]);
        assert!(polyline_match_cost(&pred[..2], &t.shape, &t.perms).is_err());
        let aligned = t.aligned(t.perms.get(idx));
        assert_eq!(aligned, rev);
    }

    #[test]
    fn cost_matrix_entries() {
        let e = divider(&[(0.0, 0.0), (2.0, 0.0)]);
        let targets = vec![MatchTarget::from_element(&e, 3).unwrap()];
        let pred0 = PredictedElement::new(targets[0].shape.vertices().to_vec(), confident(ElementCategory::Divider));
        let pred1 = PredictedElement::new(
            vec![Point2::new(0.0, 1.0), Point2::new(1.0, 1.5), Point2::new(2.0, 1.0)],
            [0.5, -0.3, 1.0, 0.0],
        );
        let preds = vec![pred0, pred1];
        let mc = build_cost_matrix(&preds, &targets).unwrap();
        assert!((mc.costs.get(0, 0) + 1.0).abs() < 1e-15);
        // direct formula: -softmax(logits)[divider] + mean L1 distance
        let z: [f64; 4] = [0.5, -0.3, 1.0, 0.0];
        let denom: f64 = z.iter().map(|x| x.exp()).sum();
        let p_div = (-0.3f64).exp() / denom;
        let l1 = (1.0 + 1.5 + 1.0) / 3.0;
        assert!((mc.costs.get(0, 1) - (-p_div + l1)).abs() < 1e-12);
        assert_eq!(mc.costs.get(1, 0), 0.0);
        assert_eq!(mc.costs.get(1, 1), 0.0);

        let empty = build_cost_matrix(&preds, &[]).unwrap();
        assert_eq!(empty.costs, CostMatrix::zeros(2));
    }

    #[test]
    fn hungarian_small_cases() {
        let diag = CostMatrix::from_rows(&[vec![0.0, 5.0, 5.0], vec![5.0, 0.0, 5.0], vec![5.0, 5.0, 0.0]]).unwrap();
        assert_eq!(hungarian(&diag).unwrap().sigma, vec![0, 1, 2]);
        let anti = CostMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let a = hungarian(&anti).unwrap();
        assert_eq!(a.sigma, vec![1, 0]);
        assert_eq!(a.total_cost, 0.0);
        assert!(CostMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0]]).is_err());
        let bad = CostMatrix::from_rows(&[vec![f64::NAN]]).unwrap();
        assert!(matches!(hungarian(&bad), Err(Error::NonFinite { .. })));
        assert!(hungarian(&CostMatrix::zeros(0)).unwrap().sigma.is_empty());
        // all ties: lowest-index choice gives the identity
        assert_eq!(hungarian(&CostMatrix::zeros(4)).unwrap().sigma, vec![0, 1, 2, 3]);
    }

    #[test]
    fn match_sets_examples() {
        let gts = [
            divider(&[(0.0, 0.0), (0.0, 10.0)]),
            divider(&[(5.0, 0.0), (5.0, 10.0)]),
            divider(&[(10.0, 0.0), (12.0, 10.0)]),
        ];
        let targets: Vec<MatchTarget> = gts.iter().map(|e| MatchTarget::from_element(e, 3).unwrap()).collect();
        let preds: Vec<PredictedElement> = targets
            .iter()
            .map(|t| PredictedElement::new(t.shape.vertices().to_vec(), confident(ElementCategory::Divider)))
            .collect();
        let a = match_sets(&preds, &targets).unwrap();
        assert_eq!(a.sigma, vec![0, 1, 2]);
        assert!((a.total_cost + 3.0).abs() < 1e-12);

        let shuffle = [2usize, 0, 1];
        let shuffled: Vec<PredictedElement> = shuffle.iter().map(|&i| preds[i].clone()).collect();
        let a = match_sets(&shuffled, &targets).unwrap();
        for (slot, &k) in a.sigma.iter().enumerate() {
            assert_eq!(shuffle[k], slot);
        }

        // N = 10, M = 4: padded slots take the rest at zero cost
        let mut many = preds.clone();
        many.push(PredictedElement::new(targets[0].shape.vertices().to_vec(), [0.0; 4]));
        while many.len() < 10 {
            many.push(PredictedElement::new(vec![Point2::new(50.0, 50.0), Point2::new(51.0, 50.0), Point2::new(52.0, 50.0)], [0.0; 4]));
        }
        let mut four = targets.clone();
        four.push(targets[0].clone());
        let a = match_sets(&many, &four).unwrap();
        let mc = build_cost_matrix(&many, &four).unwrap();
        assert_eq!(a.sigma.len(), 10);
        for slot in 4..10 {
            assert_eq!(mc.costs.get(slot, a.sigma[slot]), 0.0);
            assert!(a.orderings[slot].is_none());
        }
        // three confident matches plus the uniform-logit duplicate at p = 1/4
        assert!((a.total_cost + 3.25).abs() < 1e-9);
    }
}
