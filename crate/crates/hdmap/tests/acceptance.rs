//! End-to-end acceptance checks. Runs without the libtest harness so that the
//! one-line verdict of every check is always printed.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use hdmap_core::eval::{chamfer_distance, map_score, ChamferParams, MatchLabel, ScoredElement, DEFAULT_THRESHOLDS};
use hdmap_core::geometry::midpoint_densify;
use hdmap_core::gradcheck::{self, GradCheckConfig};
use hdmap_core::hsmr::element_at_density;
use hdmap_core::losses::LossWeights;
use hdmap_core::matching::{build_cost_matrix, hungarian, match_sets};
use hdmap_core::refine::{assigned_chamfer, init_candidates, mean_assigned_chamfer, progressive_fit, FitConfig, FitOutcome};
use hdmap_core::scenegen::{generate_scene, PerceptionRange, SceneSpec, STANDARD_SUITE_SEEDS};
use hdmap_core::{
    CostMatrix, DensitySchedule, ElementCategory, GroundTruthSet, MapElement, MatchTarget, Point2, Polyline,
    PredictedElement,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Two mean Chamfer distances closer than this count as equal.
const CHAMFER_TIE: f64 = 1e-9;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict { passed, detail: detail.into() }
}

fn suite(range: PerceptionRange) -> Vec<GroundTruthSet> {
    STANDARD_SUITE_SEEDS.iter().map(|&s| generate_scene(&SceneSpec::standard(s), &range).unwrap()).collect()
}

fn fit_suite(scenes: &[GroundTruthSet], config: &FitConfig) -> Vec<FitOutcome> {
    scenes.iter().map(|s| progressive_fit(s, config).unwrap()).collect()
}

fn final_mean_chamfer(outcomes: &[FitOutcome], scenes: &[GroundTruthSet]) -> Vec<f64> {
    outcomes
        .iter()
        .zip(scenes)
        .map(|(o, s)| mean_assigned_chamfer(o.layers.last().unwrap(), s, ChamferParams::default()).unwrap())
        .collect()
}

fn gradient_oracle() -> Verdict {
    let start = Instant::now();
    let report = gradcheck::run(&GradCheckConfig::default()).unwrap();
    let elapsed = start.elapsed();
    let worst = report.components.iter().map(|c| c.max_relative_error).fold(0.0, f64::max);
    let checked: usize = report.components.iter().map(|c| c.checked).sum();
    let skipped: usize = report.components.iter().map(|c| c.skipped).sum();
    verdict(
        report.passed() && elapsed < Duration::from_secs(60),
        format!("worst relative error {worst:.2e} over {checked} checks ({skipped} skipped), {elapsed:.1?}"),
    )
}

fn brute_force_min(costs: &CostMatrix) -> f64 {
    fn go(costs: &CostMatrix, row: usize, used: &mut Vec<bool>, sigma: &mut Vec<usize>, best: &mut f64) {
        let n = costs.size();
        if row == n {
            *best = best.min(costs.cost_of(sigma));
            return;
        }
        for k in 0..n {
            if !used[k] {
                used[k] = true;
                sigma.push(k);
                go(costs, row + 1, used, sigma, best);
                sigma.pop();
                used[k] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    go(costs, 0, &mut vec![false; costs.size()], &mut Vec::new(), &mut best);
    best
}

fn assignment_oracle() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut mismatches = 0;
    let mut cases = 0;
    for n in 2..=7 {
        for trial in 0..100 {
            let data: Vec<f64> = (0..n * n)
                .map(|_| if trial % 2 == 0 { rng.gen_range(-5.0..5.0) } else { rng.gen_range(0..4) as f64 })
                .collect();
            let costs = CostMatrix::new(n, data).unwrap();
            let a = hungarian(&costs).unwrap();
            cases += 1;
            if costs.cost_of(&a.sigma) != brute_force_min(&costs) || a.total_cost != costs.cost_of(&a.sigma) {
                mismatches += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    verdict(mismatches == 0 && elapsed < Duration::from_secs(60), format!("{mismatches}/{cases} mismatches, {elapsed:.1?}"))
}

fn jittered_predictions(rng: &mut ChaCha8Rng, targets: &[MatchTarget], extra: usize, d: usize) -> Vec<PredictedElement> {
    let mut preds: Vec<PredictedElement> = targets
        .iter()
        .map(|t| {
            let v = t.shape.vertices().iter().map(|&p| p + Point2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
            let mut v: Vec<Point2> = v.collect();
            if rng.gen_bool(0.5) {
                v.reverse();
            }
            let logits = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            PredictedElement::new(v, logits)
        })
        .collect();
    let seed = rng.gen();
    preds.extend(init_candidates(seed, extra, d, &PerceptionRange::REGULAR, 2.0));
    let mut order: Vec<usize> = (0..preds.len()).collect();
    for i in (1..order.len()).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    order.into_iter().map(|i| preds[i].clone()).collect()
}

fn equivalence_invariance() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    let mut sigma_changes = 0;
    let mut scenes = 0;
    while scenes < 50 {
        let scene = generate_scene(&SceneSpec::standard(1000 + scenes as u64), &PerceptionRange::REGULAR).unwrap();
        scenes += 1;
        let d = [3, 5, 9, 17][rng.gen_range(0..4)];
        let targets = scene.match_targets(d).unwrap();
        let extra = rng.gen_range(0..6);
        let preds = jittered_predictions(&mut rng, &targets, extra, d);
        let base = match_sets(&preds, &targets).unwrap();
        let transformed: Vec<MatchTarget> = targets
            .iter()
            .map(|t| {
                let mut v = t.shape.vertices().to_vec();
                if t.shape.is_closed() {
                    v.rotate_left(rng.gen_range(1..d));
                } else {
                    v.reverse();
                }
                let e = MapElement::new(t.category, Polyline::new(v, t.shape.is_closed()).unwrap()).unwrap();
                MatchTarget::from_element(&e, d).unwrap()
            })
            .collect();
        let moved = match_sets(&preds, &transformed).unwrap();
        worst = worst.max((moved.total_cost - base.total_cost).abs());
        if moved.sigma != base.sigma {
            sigma_changes += 1;
        }
        // the cost matrix itself must agree too, entry by entry
        let a = build_cost_matrix(&preds, &targets).unwrap();
        let b = build_cost_matrix(&preds, &transformed).unwrap();
        let n = a.costs.size();
        for i in 0..n {
            for k in 0..n {
                worst = worst.max((a.costs.get(i, k) - b.costs.get(i, k)).abs());
            }
        }
    }
    verdict(
        worst < 1e-9 && sigma_changes == 0,
        format!("{scenes} scenes, max cost change {worst:.1e}, {sigma_changes} assignment changes"),
    )
}

fn random_chain(rng: &mut ChaCha8Rng, n: usize) -> Polyline {
    let mut p = Point2::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
    let mut heading: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let mut v = vec![p];
    for _ in 1..n {
        heading += rng.gen_range(-1.0..1.0);
        p = p + Point2::new(heading.cos(), heading.sin()) * rng.gen_range(0.5..5.0);
        v.push(p);
    }
    Polyline::open(v).unwrap()
}

fn random_arc(rng: &mut ChaCha8Rng) -> MapElement {
    let kappa: f64 = rng.gen_range(0.001..0.02);
    let length: f64 = rng.gen_range(10.0..60.0);
    let r = 1.0 / kappa;
    let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let v = (0..400)
        .map(|i| {
            let a = phase + length * kappa * i as f64 / 399.0;
            Point2::new(r * a.cos(), r * a.sin())
        })
        .collect();
    MapElement::new(ElementCategory::Divider, Polyline::open(v).unwrap()).unwrap()
}

fn hsmr_structure() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut broken = 0;
    for _ in 0..200 {
        let mut layer = random_chain(&mut rng, 3);
        for _ in 0..3 {
            let next = midpoint_densify(&layer);
            let kept = layer.vertices().iter().enumerate().all(|(i, p)| {
                let q = next.vertices()[2 * i];
                p.x.to_bits() == q.x.to_bits() && p.y.to_bits() == q.y.to_bits()
            });
            if !kept || next.len() != 2 * layer.len() - 1 {
                broken += 1;
            }
            layer = next;
        }
        if layer.len() != 17 {
            broken += 1;
        }
    }
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let arc = random_arc(&mut rng);
        let coarse = element_at_density(&arc, 17).unwrap();
        let fine = element_at_density(&arc, 65).unwrap();
        worst = worst.max(chamfer_distance(&coarse, &fine, ChamferParams::default()).unwrap());
    }
    verdict(
        broken == 0 && worst < 0.05,
        format!("{broken} non-exact layers over 3->5->9->17; worst d=17 vs d=65 arc Chamfer {worst:.4} m"),
    )
}

fn self_evaluated_map(outcomes: &[FitOutcome], scenes: &[GroundTruthSet]) -> f64 {
    let preds: Vec<Vec<ScoredElement>> = outcomes.iter().map(|o| o.predictions.clone()).collect();
    map_score(&preds, scenes, &DEFAULT_THRESHOLDS, ChamferParams::default()).unwrap().map
}

fn convergence(scenes: &[GroundTruthSet], outcomes: &[FitOutcome], elapsed: Duration) -> Verdict {
    let mut close = 0;
    let mut total = 0;
    for (o, s) in outcomes.iter().zip(scenes) {
        let d = assigned_chamfer(o.layers.last().unwrap(), s, ChamferParams::default()).unwrap();
        total += d.len();
        close += d.iter().filter(|&&x| x < 0.1).count();
    }
    let map = self_evaluated_map(outcomes, scenes);
    let frac = close as f64 / total as f64;
    verdict(
        frac >= 0.95 && map >= 0.95 && elapsed < Duration::from_secs(600),
        format!("{close}/{total} elements under 0.1 m ({:.1}%), mAP {map:.4}, {elapsed:.1?}", 100.0 * frac),
    )
}

fn paired_comparison(label: &str, ours: &[f64], baseline: &[f64], need: f64) -> Verdict {
    let strict = ours.iter().zip(baseline).filter(|(a, b)| a < b).count();
    let within = ours.iter().zip(baseline).filter(|(a, b)| **a <= **b + CHAMFER_TIE).count();
    let frac = within as f64 / ours.len() as f64;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    verdict(
        frac >= need,
        format!(
            "{label}: {within}/{} seeds at or below baseline ({strict} strictly), mean {:.6} vs {:.6} m",
            ours.len(),
            mean(ours),
            mean(baseline)
        ),
    )
}

fn long_range_progressive() -> Verdict {
    let range = PerceptionRange::LONG;
    let scenes = suite(range);
    let progressive = FitConfig { range, ..FitConfig::default() };
    let fixed = FitConfig { schedule: DensitySchedule::fixed(17, 6).unwrap(), ..progressive.clone() };
    let ours = final_mean_chamfer(&fit_suite(&scenes, &progressive), &scenes);
    let baseline = final_mean_chamfer(&fit_suite(&scenes, &fixed), &scenes);
    paired_comparison("progressive vs fixed 17", &ours, &baseline, 0.8)
}

fn edge_loss_ablation(scenes: &[GroundTruthSet], full: &[FitOutcome]) -> Verdict {
    let ablated = FitConfig { weights: LossWeights::default().without_edge_loss(), ..FitConfig::default() };
    let ours = final_mean_chamfer(full, scenes);
    let baseline = final_mean_chamfer(&fit_suite(scenes, &ablated), scenes);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let v = paired_comparison("full vs no edge loss", &ours, &baseline, 0.0);
    verdict(mean(&ours) <= mean(&baseline) + CHAMFER_TIE, v.detail)
}

fn as_predictions(scene: &GroundTruthSet, offset: Point2) -> Vec<ScoredElement> {
    scene
        .elements
        .iter()
        .map(|e| ScoredElement { element: e.with_shape(e.shape().translated(offset)).unwrap(), confidence: 1.0 })
        .collect()
}

fn evaluator_sanity(scenes: &[GroundTruthSet]) -> Verdict {
    let identity: Vec<Vec<ScoredElement>> = scenes.iter().map(|s| as_predictions(s, Point2::ZERO)).collect();
    let perfect = map_score(&identity, scenes, &DEFAULT_THRESHOLDS, ChamferParams::default()).unwrap().map;

    // separated north-south lines and a small crossing; a 2 m eastward shift
    // moves every sample at least 1.5 m from its source
    let line = |x: f64, c| MapElement::new(c, Polyline::from_xy(&[(x, -20.0), (x, 20.0)], false).unwrap()).unwrap();
    let hand = GroundTruthSet::new(vec![
        line(-12.0, ElementCategory::Boundary),
        line(-4.0, ElementCategory::Divider),
        line(4.0, ElementCategory::Divider),
        line(12.0, ElementCategory::Boundary),
        MapElement::new(
            ElementCategory::PedCrossing,
            Polyline::from_xy(&[(0.0, 25.0), (0.5, 25.0), (0.5, 25.5), (0.0, 25.5)], true).unwrap(),
        )
        .unwrap(),
    ]);
    let shifted = [as_predictions(&hand, Point2::new(2.0, 0.0))];
    let score = map_score(&shifted, std::slice::from_ref(&hand), &DEFAULT_THRESHOLDS, ChamferParams::default()).unwrap();
    let aps = |t| ElementCategory::REAL.map(|c| score.ap(c, t).unwrap());
    let shifted_zero = aps(0.5).iter().chain(aps(1.5).iter()).all(|&a| a == 0.0);

    let labels = [
        MatchLabel { confidence: 0.9, true_positive: true },
        MatchLabel { confidence: 0.8, true_positive: false },
        MatchLabel { confidence: 0.7, true_positive: true },
    ];
    let ap = hdmap_core::eval::average_precision(&labels, 2, ElementCategory::Divider, 1.0).ap.unwrap();
    let hand_ok = (ap - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-9;
    verdict(
        perfect == 1.0 && shifted_zero && hand_ok,
        format!("identity mAP {perfect}, shifted AP@0.5 {:?} AP@1.5 {:?}, PR example AP {ap:.10}", aps(0.5), aps(1.5)),
    )
}

fn cli_fit(gt: &Path, out: &Path, traj: &Path) {
    let status = Command::new(env!("CARGO_BIN_EXE_hdmap"))
        .args(["fit", gt.to_str().unwrap(), "-o", out.to_str().unwrap(), "--trajectory", traj.to_str().unwrap()])
        .args(["--seed", "7"])
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let gt = dir.path().join("gt.json");
    let generated = Command::new(env!("CARGO_BIN_EXE_hdmap"))
        .args(["generate", "--seed", "23", "-o", gt.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(generated.status.success());
    let paths = |tag: &str| (dir.path().join(format!("pred_{tag}.json")), dir.path().join(format!("traj_{tag}.csv")));
    let (p1, t1) = paths("a");
    let (p2, t2) = paths("b");
    cli_fit(&gt, &p1, &t1);
    cli_fit(&gt, &p2, &t2);
    let read = |p: &Path| std::fs::read(p).unwrap();
    let same_map = read(&p1) == read(&p2);
    let same_traj = read(&t1) == read(&t2);
    verdict(
        same_map && same_traj,
        format!("map files identical: {same_map}, trajectories identical: {same_traj} ({} bytes)", read(&t1).len()),
    )
}

fn main() {
    let mut results: Vec<(usize, &str, Verdict)> = Vec::new();
    let mut report = |n, name, v: Verdict| {
        println!("criterion {n} [{}] {name}: {}", if v.passed { "PASS" } else { "FAIL" }, v.detail);
        results.push((n, name, v));
    };
    report(1, "gradient oracle", gradient_oracle());
    report(2, "assignment oracle", assignment_oracle());
    report(3, "equivalence invariance", equivalence_invariance());
    report(4, "density pyramid structure", hsmr_structure());

    let regular = suite(PerceptionRange::REGULAR);
    let start = Instant::now();
    let full = fit_suite(&regular, &FitConfig::default());
    let elapsed = start.elapsed();
    report(5, "progressive fit convergence", convergence(&regular, &full, elapsed));
    report(6, "long-range progressive vs fixed density", long_range_progressive());
    report(7, "edge loss ablation", edge_loss_ablation(&regular, &full));
    report(8, "evaluator sanity", evaluator_sanity(&regular));
    report(9, "fit determinism", determinism());

    let failed: Vec<usize> = results.iter().filter(|r| !r.2.passed).map(|r| r.0).collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", results.len());
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
