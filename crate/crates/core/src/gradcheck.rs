//! Finite-difference verification of the analytic loss gradients.
//!
//! Each trial draws a random target chain, a perturbed prediction, a random
//! vertex-role mask and random logits, then compares every analytic gradient
//! with central differences. Samples that land near a kink of a term (an L1
//! coordinate difference or an inserted vertex lying on its edge) are skipped
//! for that term only.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{project_onto_segment, Point2};
use crate::hsmr::{ElementCategory, CATEGORY_COUNT};
use crate::losses::{
    edge_angle_loss, edge_point_loss, edge_slope_loss, focal_loss, vertex_loss, FocalParams, Logits, LossTerm,
    VertexRoleMask,
};
use crate::math;
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Component {
    Vertex,
    EdgePoint,
    EdgeSlope,
    EdgeAngle,
    Focal,
}

impl Component {
    pub const ALL: [Component; 5] =
        [Component::Vertex, Component::EdgePoint, Component::EdgeSlope, Component::EdgeAngle, Component::Focal];

    pub fn name(self) -> &'static str {
        match self {
            Component::Vertex => "vertex",
            Component::EdgePoint => "edge_point",
            Component::EdgeSlope => "edge_slope",
            Component::EdgeAngle => "edge_angle",
            Component::Focal => "focal",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckConfig {
    pub trials: usize,
    pub densities: Vec<usize>,
    pub step: f64,
    pub tolerance: f64,
    /// Distance to a non-smooth locus below which a sample is skipped.
    pub kink_margin: f64,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self { trials: 200, densities: vec![3, 5, 9, 17], step: 1e-6, tolerance: 1e-4, kink_margin: 1e-5, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComponentReport {
    pub component: Component,
    pub density: usize,
    pub checked: usize,
    pub skipped: usize,
    pub max_relative_error: f64,
}

impl ComponentReport {
    pub fn passed(&self, tolerance: f64) -> bool {
        self.max_relative_error < tolerance
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub tolerance: f64,
    pub components: Vec<ComponentReport>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.components.iter().all(|c| c.passed(self.tolerance))
    }
}

/// `|a - n| / max(|a|, |n|)` over the flattened vectors; zero when both vanish.
pub fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let norm = |v: &[f64]| math::sqrt(v.iter().map(|x| x * x).sum());
    let diff: Vec<f64> = analytic.iter().zip(numeric).map(|(a, n)| a - n).collect();
    let scale = norm(analytic).max(norm(numeric));
    if scale < 1e-12 {
        norm(&diff)
    } else {
        norm(&diff) / scale
    }
}

fn flatten(v: &[Point2]) -> Vec<f64> {
    v.iter().flat_map(|p| [p.x, p.y]).collect()
}

fn numeric_gradient(f: impl Fn(&[Point2]) -> Result<f64>, x: &[Point2], h: f64) -> Result<Vec<f64>> {
    let mut probe = x.to_vec();
    let mut out = Vec::with_capacity(2 * x.len());
    for i in 0..x.len() {
        for axis in 0..2 {
            let orig = probe[i];
            let bump = if axis == 0 { Point2::new(h, 0.0) } else { Point2::new(0.0, h) };
            probe[i] = orig + bump;
            let up = f(&probe)?;
            probe[i] = orig - bump;
            let down = f(&probe)?;
            probe[i] = orig;
            out.push((up - down) / (2.0 * h));
        }
    }
    Ok(out)
}

struct Sample {
    pred: Vec<Point2>,
    target: Vec<Point2>,
    mask: VertexRoleMask,
    logits: Logits,
    category: ElementCategory,
}

fn random_target<R: Rng>(rng: &mut R, d: usize, closed: bool) -> Vec<Point2> {
    if closed {
        let c = Point2::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
        let r = rng.gen_range(2.0..6.0);
        let phase = rng.gen_range(0.0..TAU);
        return (0..d)
            .map(|i| {
                let a = phase + TAU * (i as f64 + rng.gen_range(-0.3..0.3)) / d as f64;
                let rr = r * rng.gen_range(0.8..1.2);
                c + Point2::new(math::cos(a), math::sin(a)) * rr
            })
            .collect();
    }
    let mut p = Point2::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
    let mut heading = rng.gen_range(0.0..TAU);
    let mut out = Vec::with_capacity(d);
    out.push(p);
    for _ in 1..d {
        heading += rng.gen_range(-0.8..0.8);
        p = p + Point2::new(math::cos(heading), math::sin(heading)) * rng.gen_range(1.0..3.0);
        out.push(p);
    }
    out
}

fn random_mask<R: Rng>(rng: &mut R, d: usize, closed: bool) -> VertexRoleMask {
    if closed {
        return VertexRoleMask::all_original(d, true);
    }
    match rng.gen_range(0..3) {
        0 => VertexRoleMask::all_original(d, false),
        1 if d >= 5 && d % 2 == 1 => VertexRoleMask::after_midpoint(d.div_ceil(2), false),
        _ => {
            let mut flags: Vec<bool> = (0..d).map(|_| rng.gen_bool(0.5)).collect();
            flags[0] = true;
            flags[d - 1] = true;
            VertexRoleMask::from_flags(&flags, false).expect("ends are original")
        }
    }
}

fn random_sample<R: Rng>(rng: &mut R, d: usize) -> Sample {
    let closed = rng.gen_bool(0.3);
    let target = random_target(rng, d, closed);
    let pred = target
        .iter()
        .map(|&t| t + Point2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let mask = random_mask(rng, d, closed);
    let mut logits = [0.0; CATEGORY_COUNT];
    for z in &mut logits {
        *z = rng.gen_range(-3.0..3.0);
    }
    let category = ElementCategory::ALL[rng.gen_range(0..CATEGORY_COUNT)];
    Sample { pred, target, mask, logits, category }
}

fn near_kink(component: Component, s: &Sample, margin: f64) -> bool {
    match component {
        Component::Vertex => s.mask.original().iter().any(|&i| {
            let d = s.pred[i] - s.target[i];
            d.x.abs() < margin || d.y.abs() < margin
        }),
        Component::EdgePoint => {
            let n = s.mask.original().len();
            (0..s.mask.original_edge_count()).any(|j| {
                let a = s.mask.original()[j];
                let b = s.mask.original()[(j + 1) % n];
                s.mask.inserted_on(j).iter().any(|&k| {
                    let (_, q) = project_onto_segment(s.pred[k], s.target[a], s.target[b]);
                    s.pred[k].distance(q) < margin
                })
            })
        }
        Component::EdgeSlope | Component::EdgeAngle => {
            let o = s.mask.original();
            let edges = s.mask.original_edge_count();
            (0..edges).any(|j| s.pred[o[(j + 1) % o.len()]].distance(s.pred[o[j]]) < margin)
        }
        Component::Focal => false,
    }
}

type TermFn = fn(&[Point2], &[Point2], &VertexRoleMask) -> Result<LossTerm>;

fn term_fn(c: Component) -> TermFn {
    match c {
        Component::Vertex => vertex_loss,
        Component::EdgePoint => edge_point_loss,
        Component::EdgeSlope => edge_slope_loss,
        Component::EdgeAngle => edge_angle_loss,
        Component::Focal => unreachable!("focal acts on logits"),
    }
}

/// Relative error of one component on one sample, or `None` when skipped.
fn check_sample(c: Component, s: &Sample, cfg: &GradCheckConfig) -> Result<Option<f64>> {
    if near_kink(c, s, cfg.kink_margin) {
        return Ok(None);
    }
    if c == Component::Focal {
        let focal = FocalParams::default();
        let (_, analytic) = focal_loss(&s.logits, s.category, focal);
        let mut numeric = [0.0; CATEGORY_COUNT];
        for (k, n) in numeric.iter_mut().enumerate() {
            let mut up = s.logits;
            let mut down = s.logits;
            up[k] += cfg.step;
            down[k] -= cfg.step;
            *n = (focal_loss(&up, s.category, focal).0 - focal_loss(&down, s.category, focal).0) / (2.0 * cfg.step);
        }
        return Ok(Some(relative_error(&analytic, &numeric)));
    }
    let f = term_fn(c);
    let analytic = flatten(&f(&s.pred, &s.target, &s.mask)?.gradient);
    let numeric = numeric_gradient(|p| f(p, &s.target, &s.mask).map(|t| t.value), &s.pred, cfg.step)?;
    Ok(Some(relative_error(&analytic, &numeric)))
}

/// Runs `trials` random samples per density and reports the worst relative
/// error of each component.
pub fn run(cfg: &GradCheckConfig) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut components = Vec::new();
    for &d in &cfg.densities {
        let mut reports: Vec<ComponentReport> = Component::ALL
            .iter()
            .map(|&component| ComponentReport { component, density: d, checked: 0, skipped: 0, max_relative_error: 0.0 })
            .collect();
        for _ in 0..cfg.trials {
            let s = random_sample(&mut rng, d);
            for r in &mut reports {
                match check_sample(r.component, &s, cfg)? {
                    Some(e) => {
                        r.checked += 1;
                        r.max_relative_error = r.max_relative_error.max(e);
                    }
                    None => r.skipped += 1,
                }
            }
        }
        components.extend(reports);
    }
    Ok(GradCheckReport { tolerance: cfg.tolerance, components })
}
