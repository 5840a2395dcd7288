//! Coarse-to-fine fitting harness.
//!
//! `N` candidate elements carry free vertex coordinates and category logits.
//! Each layer of the density schedule runs a fixed number of descent steps:
//! candidates are (re)matched to the ground truth rendered at the layer's
//! density, matched candidates follow the polyline loss and the focal loss of
//! their slot's category, and unmatched ones only learn the `none` class.
//! Between layers whose density grows every candidate is midpoint-densified,
//! so earlier vertices stay where they were.
//!
//! The update is a per-coordinate descent with adaptive step lengths: each
//! vertex coordinate moves by its own step length against the sign of its
//! partial derivative, and the move is kept only if the candidate's loss
//! strictly drops. Kept moves lengthen that coordinate's step, rejected ones
//! halve it. The L1 vertex term has a constant gradient magnitude, so a fixed
//! step would orbit the target instead of landing on it, and moving whole
//! vertices along the gradient stalls once one coordinate sits on its kink.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eval::{chamfer_distance, ChamferParams, ScoredElement};
use crate::geometry::{midpoint_densify_points, Point2, Polyline, MIN_VERTEX_SEPARATION};
use crate::hsmr::{element_at_density, DensitySchedule, ElementCategory, MapElement, CATEGORY_COUNT};
use crate::losses::{
    element_loss, focal_loss, polyline_loss_value, FocalParams, Logits, LossWeights, VertexRoleMask,
};
use crate::math;
use crate::matching::{match_sets, Assignment, GroundTruthSet, MatchTarget, PredictedElement};
use crate::scenegen::PerceptionRange;
use crate::{Error, Result};

const STEP_GROWTH: f64 = 1.2;
const STEP_SHRINK: f64 = 0.5;
/// Longest vertex step, as a multiple of `step_size`.
const MAX_STEP_FACTOR: f64 = 40.0;
const MIN_STEP: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct FitConfig {
    pub schedule: DensitySchedule,
    pub n_candidates: usize,
    pub steps_per_layer: usize,
    /// Initial vertex step length in meters.
    pub step_size: f64,
    /// Initial logit step length.
    pub logit_step: f64,
    pub seed: u64,
    pub rematch_every: usize,
    pub weights: LossWeights,
    pub focal: FocalParams,
    /// Window the candidates are initialized in.
    pub range: PerceptionRange,
    /// Length of the initial candidate chords, meters.
    pub init_chord: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            schedule: DensitySchedule::default(),
            n_candidates: 50,
            steps_per_layer: 200,
            step_size: 0.05,
            logit_step: 0.5,
            seed: 0,
            rematch_every: 1,
            weights: LossWeights::default(),
            focal: FocalParams::default(),
            range: PerceptionRange::REGULAR,
            init_chord: 2.0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, reason: &str| Err(Error::InvalidParameter { name, reason: reason.into() });
        if self.n_candidates == 0 {
            return bad("n_candidates", "must be at least 1");
        }
        if self.steps_per_layer == 0 {
            return bad("steps_per_layer", "must be at least 1");
        }
        if self.rematch_every == 0 {
            return bad("rematch_every", "must be at least 1");
        }
        // zero steps are accepted: they freeze the state
        if !(self.step_size >= 0.0 && self.step_size.is_finite()) {
            return bad("step_size", "must be finite and non-negative");
        }
        if !(self.logit_step >= 0.0 && self.logit_step.is_finite()) {
            return bad("logit_step", "must be finite and non-negative");
        }
        if !(self.init_chord > 0.0 && self.init_chord.is_finite()) {
            return bad("init_chord", "must be positive");
        }
        self.weights.validate()?;
        self.range.validate()
    }
}

/// Loss components of one step, summed over candidates (unweighted), plus the
/// weighted total that the step descends on.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub layer: usize,
    pub vertex: f64,
    pub edge_point: f64,
    pub edge_slope: f64,
    pub edge_angle: f64,
    pub cls: f64,
    pub total: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitState {
    pub candidates: Vec<PredictedElement>,
    pub layer: usize,
    pub trajectory: Vec<StepRecord>,
    pub assignment: Option<Assignment>,
    /// Current step length of every candidate vertex coordinate.
    pub vertex_steps: Vec<Vec<[f64; 2]>>,
    pub logit_steps: Vec<f64>,
}

impl FitState {
    pub fn new(candidates: Vec<PredictedElement>, config: &FitConfig) -> Self {
        let vertex_steps = candidates.iter().map(|c| vec![[config.step_size; 2]; c.density()]).collect();
        let logit_steps = vec![config.logit_step; candidates.len()];
        Self { candidates, layer: 0, trajectory: Vec::new(), assignment: None, vertex_steps, logit_steps }
    }

    pub fn density(&self) -> Option<usize> {
        self.candidates.first().map(PredictedElement::density)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerResult {
    pub layer: usize,
    pub density: usize,
    pub candidates: Vec<PredictedElement>,
    pub assignment: Assignment,
    /// Losses at the end of the layer.
    pub final_loss: StepRecord,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitOutcome {
    pub layers: Vec<LayerResult>,
    pub trajectory: Vec<StepRecord>,
    /// Candidates whose `none` probability is below one half.
    pub predictions: Vec<ScoredElement>,
}

/// Random short chords at the schedule's first density with uniform logits.
pub fn init_candidates(seed: u64, n: usize, density: usize, range: &PerceptionRange, chord: f64) -> Vec<PredictedElement> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inner = range.shrunk(0.5 * chord);
    (0..n)
        .map(|_| {
            let c = inner.uniform_point(&mut rng);
            let theta = rng.gen_range(0.0..core::f64::consts::TAU);
            let half = Point2::new(math::cos(theta), math::sin(theta)) * (0.5 * chord);
            let vertices = (0..density)
                .map(|i| {
                    let t = if density > 1 { i as f64 / (density - 1) as f64 } else { 0.5 };
                    let p = (c - half).lerp(c + half, t);
                    Point2::new(p.x.clamp(range.x_min, range.x_max), p.y.clamp(range.y_min, range.y_max))
                })
                .collect();
            PredictedElement::new(vertices, [0.0; CATEGORY_COUNT])
        })
        .collect()
}

/// Everything one layer supervises against.
pub struct LayerTargets {
    /// Elements rendered at the layer density, used for matching.
    pub matching: Vec<MatchTarget>,
    /// Per element, the chain the losses compare against. Open elements on a
    /// layer whose density grew use the previous layer's rendering, midpoint
    /// densified, so original vertices keep their coarse targets and inserted
    /// ones are pulled onto the coarse edges they split.
    pub loss_shapes: Vec<Vec<Point2>>,
    pub open_mask: VertexRoleMask,
    pub closed_mask: VertexRoleMask,
}

impl LayerTargets {
    pub fn new(scene: &GroundTruthSet, schedule: &DensitySchedule, layer: usize) -> Result<Self> {
        let d = schedule.density(layer);
        let matching = scene.match_targets(d)?;
        let grown = layer > 0 && schedule.grows_at(layer);
        let open_mask = if grown {
            VertexRoleMask::after_midpoint(schedule.density(layer - 1), false)
        } else {
            VertexRoleMask::all_original(d, false)
        };
        let mut loss_shapes = Vec::with_capacity(matching.len());
        for (e, t) in scene.elements.iter().zip(&matching) {
            if grown && !e.is_closed() {
                let coarse = element_at_density(e, schedule.density(layer - 1))?;
                loss_shapes.push(midpoint_densify_points(coarse.vertices(), false));
            } else {
                loss_shapes.push(t.shape.vertices().to_vec());
            }
        }
        Ok(Self { matching, loss_shapes, open_mask, closed_mask: VertexRoleMask::all_original(d, true) })
    }

    /// Target chain, category and mask for whatever `slot` holds, or `None`
    /// for a padded slot.
    fn supervision(&self, assignment: &Assignment, slot: usize) -> Option<(Vec<Point2>, ElementCategory, &VertexRoleMask)> {
        let t = self.matching.get(slot)?;
        let ordering = assignment.orderings[slot].as_deref().expect("real slots carry an ordering");
        let mask = if t.shape.is_closed() { &self.closed_mask } else { &self.open_mask };
        Some((align(&self.loss_shapes[slot], ordering), t.category, mask))
    }
}

/// `out[pi[j]] = shape[j]`: the chain re-indexed into the prediction's order.
fn align(shape: &[Point2], ordering: &[usize]) -> Vec<Point2> {
    let mut out = vec![Point2::ZERO; shape.len()];
    for (j, &i) in ordering.iter().enumerate() {
        out[i] = shape[j];
    }
    out
}

fn none_loss(logits: &Logits, focal: FocalParams) -> (f64, Logits) {
    focal_loss(logits, ElementCategory::None, focal)
}

fn shape_value(v: &[Point2], target: &[Point2], mask: &VertexRoleMask, w: &LossWeights) -> f64 {
    polyline_loss_value(v, target, mask, w).unwrap_or(f64::INFINITY)
}

/// Loss record for `candidates` under `assignment` without updating anything.
fn evaluate(
    candidates: &[PredictedElement],
    assignment: &Assignment,
    targets: &LayerTargets,
    config: &FitConfig,
) -> Result<StepRecord> {
    let mut rec = StepRecord::default();
    let slots = assignment.slot_of_prediction();
    for (k, cand) in candidates.iter().enumerate() {
        match targets.supervision(assignment, slots[k]) {
            Some((target, category, mask)) => {
                let b = element_loss(&cand.vertices, &cand.logits, &target, category, mask, &config.weights, config.focal)?;
                rec.vertex += b.vertex;
                rec.edge_point += b.edge_point;
                rec.edge_slope += b.edge_slope;
                rec.edge_angle += b.edge_angle;
                rec.cls += b.classification;
                rec.total += b.total;
            }
            None => {
                let (f, _) = none_loss(&cand.logits, config.focal);
                rec.cls += f;
                rec.total += config.weights.lambda_cls * f;
            }
        }
    }
    Ok(rec)
}

fn descend_logits(logits: &mut Logits, grad: &Logits, step: &mut f64, loss: impl Fn(&Logits) -> f64, start: f64) {
    let norm = math::sqrt(grad.iter().map(|g| g * g).sum());
    if norm == 0.0 || *step == 0.0 {
        return;
    }
    let mut trial = *logits;
    for (t, g) in trial.iter_mut().zip(grad) {
        *t -= *step * g / norm;
    }
    if loss(&trial) < start {
        *logits = trial;
        *step *= STEP_GROWTH;
    } else {
        *step = (*step * STEP_SHRINK).max(MIN_STEP);
    }
}

/// Runs `config.steps_per_layer` descent steps on the layer `state.layer`.
pub fn fit_layer(mut state: FitState, scene: &GroundTruthSet, config: &FitConfig) -> Result<FitState> {
    let layer = state.layer;
    if layer >= config.schedule.layers() {
        return Err(Error::InvalidParameter { name: "layer", reason: alloc::format!("layer {layer} is past the schedule") });
    }
    let d = config.schedule.density(layer);
    for c in &state.candidates {
        if c.density() != d {
            return Err(Error::DensityMismatch { expected: d, actual: c.density() });
        }
    }
    let targets = LayerTargets::new(scene, &config.schedule, layer)?;
    let max_step = MAX_STEP_FACTOR * config.step_size;
    let frozen = config.step_size == 0.0 && config.logit_step == 0.0;

    for i in 0..config.steps_per_layer {
        if state.assignment.is_none() || i % config.rematch_every == 0 {
            state.assignment = Some(match_sets(&state.candidates, &targets.matching)?);
        }
        let assignment = state.assignment.as_ref().expect("assigned above");
        let mut rec = evaluate(&state.candidates, assignment, &targets, config)?;
        rec.step = state.trajectory.len();
        rec.layer = layer;
        if !rec.total.is_finite() {
            let step = rec.step;
            state.trajectory.push(rec);
            return Err(Error::Diverged { layer, step, trajectory: alloc::boxed::Box::new(state.trajectory) });
        }
        state.trajectory.push(rec);
        if frozen {
            continue;
        }

        let slots = assignment.slot_of_prediction();
        for k in 0..state.candidates.len() {
            let sup = targets.supervision(assignment, slots[k]);
            let cand = &mut state.candidates[k];
            match sup {
                Some((target, category, mask)) => {
                    let b = element_loss(&cand.vertices, &cand.logits, &target, category, mask, &config.weights, config.focal)?;
                    let mut current = shape_value(&cand.vertices, &target, mask, &config.weights);
                    let steps = &mut state.vertex_steps[k];
                    for v in 0..d {
                        let g = b.vertex_grad[v];
                        for (axis, gi) in [g.x, g.y].into_iter().enumerate() {
                            let step = &mut steps[v][axis];
                            if gi == 0.0 || *step == 0.0 {
                                continue;
                            }
                            let old = cand.vertices[v];
                            let delta = -math::sign(gi) * *step;
                            if axis == 0 {
                                cand.vertices[v].x += delta;
                            } else {
                                cand.vertices[v].y += delta;
                            }
                            let trial = shape_value(&cand.vertices, &target, mask, &config.weights);
                            if trial < current {
                                current = trial;
                                *step = (*step * STEP_GROWTH).min(max_step);
                            } else {
                                cand.vertices[v] = old;
                                *step = (*step * STEP_SHRINK).max(MIN_STEP);
                            }
                        }
                    }
                    let focal = config.focal;
                    let (start, _) = focal_loss(&cand.logits, category, focal);
                    descend_logits(&mut cand.logits, &b.logit_grad, &mut state.logit_steps[k], |l| focal_loss(l, category, focal).0, start);
                }
                None => {
                    let (start, grad) = none_loss(&cand.logits, config.focal);
                    let focal = config.focal;
                    descend_logits(&mut cand.logits, &grad, &mut state.logit_steps[k], |l| none_loss(l, focal).0, start);
                }
            }
        }
    }
    Ok(state)
}

/// Midpoint-densify every candidate to `next` vertices; `next` must equal the
/// current density or follow the `d -> 2d - 1` rule.
pub fn densify_candidates(mut state: FitState, next: usize, config: &FitConfig) -> Result<FitState> {
    let Some(d) = state.density() else { return Ok(state) };
    if next == d {
        return Ok(state);
    }
    if next != 2 * d - 1 {
        return Err(Error::ScheduleViolation { from: d, to: next });
    }
    for (k, c) in state.candidates.iter_mut().enumerate() {
        c.vertices = midpoint_densify_points(&c.vertices, false);
        state.vertex_steps[k] = vec![[config.step_size; 2]; next];
    }
    Ok(state)
}

fn final_predictions(candidates: &[PredictedElement]) -> Vec<ScoredElement> {
    let mut out = Vec::new();
    for c in candidates {
        let p = c.probabilities();
        if p[ElementCategory::None.index()] >= 0.5 {
            continue;
        }
        let (category, confidence) = ElementCategory::REAL
            .iter()
            .map(|&cat| (cat, p[cat.index()]))
            .fold((ElementCategory::Divider, f64::NEG_INFINITY), |best, x| if x.1 > best.1 { x } else { best });
        let mut vertices: Vec<Point2> = Vec::with_capacity(c.vertices.len());
        for &v in &c.vertices {
            if vertices.last().is_none_or(|&q| q.distance(v) > MIN_VERTEX_SEPARATION) {
                vertices.push(v);
            }
        }
        let closed = category.is_closed();
        if closed {
            while vertices.len() > 1 && vertices[0].distance(vertices[vertices.len() - 1]) <= MIN_VERTEX_SEPARATION {
                vertices.pop();
            }
        }
        let Ok(shape) = Polyline::new(vertices, closed) else { continue };
        if let Ok(element) = MapElement::new(category, shape) {
            out.push(ScoredElement { element, confidence });
        }
    }
    out
}

/// Fits the whole schedule to `scene` from a seeded initialization.
pub fn progressive_fit(scene: &GroundTruthSet, config: &FitConfig) -> Result<FitOutcome> {
    config.validate()?;
    let d0 = config.schedule.density(0);
    let candidates = init_candidates(config.seed, config.n_candidates, d0, &config.range, config.init_chord);
    let mut state = FitState::new(candidates, config);
    let mut layers = Vec::with_capacity(config.schedule.layers());
    for layer in 0..config.schedule.layers() {
        if layer > 0 {
            state = densify_candidates(state, config.schedule.density(layer), config)?;
        }
        state.layer = layer;
        state.assignment = None;
        state = fit_layer(state, scene, config)?;

        let d = config.schedule.density(layer);
        let targets = LayerTargets::new(scene, &config.schedule, layer)?;
        let assignment = match_sets(&state.candidates, &targets.matching)?;
        let mut final_loss = evaluate(&state.candidates, &assignment, &targets, config)?;
        final_loss.step = state.trajectory.len();
        final_loss.layer = layer;
        layers.push(LayerResult { layer, density: d, candidates: state.candidates.clone(), assignment, final_loss });
    }
    let predictions = final_predictions(&state.candidates);
    Ok(FitOutcome { layers, trajectory: state.trajectory, predictions })
}

/// Chamfer distance from every ground-truth element to the candidate assigned
/// to it in `result`, in scene order.
pub fn assigned_chamfer(result: &LayerResult, scene: &GroundTruthSet, params: ChamferParams) -> Result<Vec<f64>> {
    let sigma = &result.assignment.sigma;
    scene
        .elements
        .iter()
        .enumerate()
        .map(|(i, gt)| {
            let cand = &result.candidates[sigma[i]];
            let shape = Polyline::new(cand.vertices.clone(), gt.is_closed());
            match shape {
                Ok(s) => chamfer_distance(&s, gt.shape(), params),
                Err(_) => Ok(f64::INFINITY),
            }
        })
        .collect()
}

/// Mean of [`assigned_chamfer`]; zero for an empty scene.
pub fn mean_assigned_chamfer(result: &LayerResult, scene: &GroundTruthSet, params: ChamferParams) -> Result<f64> {
    let d = assigned_chamfer(result, scene, params)?;
    Ok(if d.is_empty() { 0.0 } else { d.iter().sum::<f64>() / d.len() as f64 })
}
