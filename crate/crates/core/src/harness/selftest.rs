//! Structural property checks and a determinism check, run by `aol selftest`
//! and by the acceptance suite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{run_experiment, ExperimentConfig};
use crate::aggregate::star_aggregate;
use crate::domain::{Dataset, FiniteList, FunctionSpec, Predictor};
use crate::empirical::{emp_metric, emp_risk, EmpiricalMetricContext, QuadraticRisk, COVER_TOL};
use crate::netpart::build_partition;
use crate::solvers::simplex_least_squares;
use crate::worlds::{sample_world, World};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Check {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

fn random_class(rng: &mut ChaCha8Rng, members: usize, support: usize) -> Vec<Predictor> {
    (0..members)
        .map(|_| Predictor::member((0..support).map(|_| rng.gen::<f64>()).collect()).unwrap())
        .collect()
}

fn random_sample(rng: &mut ChaCha8Rng, n: usize, support: usize) -> Dataset {
    let pairs: Vec<(usize, f64)> = (0..n)
        .map(|_| (rng.gen_range(0..support), rng.gen::<f64>()))
        .collect();
    Dataset::from_slots(&pairs).unwrap()
}

/// Nets cover, centers are members and pairwise separated, cells are a
/// nearest-center partition.
fn net_check(rng: &mut ChaCha8Rng) -> Check {
    let mut worst = String::new();
    let mut ok = true;
    for trial in 0..40 {
        let support = rng.gen_range(2..8);
        let m = rng.gen_range(1..60);
        let members = random_class(rng, m, support);
        let n = rng.gen_range(1..30);
        let s = random_sample(rng, n, support);
        let ctx = EmpiricalMetricContext::new(&s);
        let eps = rng.gen_range(0.02..0.6);
        let part = build_partition(&members, eps, &ctx).unwrap();
        let dist = |a: usize, b: usize| emp_metric(&members[a], &members[b], &ctx).unwrap();
        let centers = &part.net.center_ids;
        let mut fail = |msg: String| {
            ok = false;
            worst = format!("trial {trial}: {msg}");
        };
        if centers.iter().any(|&c| c >= members.len()) {
            fail("center outside the class".into());
        }
        for (i, &a) in centers.iter().enumerate() {
            for &b in &centers[..i] {
                if dist(a, b) <= eps {
                    fail(format!("centers {a},{b} closer than eps"));
                }
            }
        }
        if part.assignment.len() != members.len() {
            fail("assignment is not exhaustive".into());
        }
        for (m, &cell) in part.assignment.iter().enumerate() {
            let own = dist(m, centers[cell]);
            if own > eps + COVER_TOL {
                fail(format!("member {m} not covered"));
            }
            if centers.iter().any(|&c| dist(m, c) < own - COVER_TOL) {
                fail(format!("member {m} not assigned to a nearest center"));
            }
        }
        for (cell, &c) in centers.iter().enumerate() {
            if part.assignment[c] != cell {
                fail(format!("center {c} outside its own cell"));
            }
        }
    }
    Check::new("net cover / separation / partition", ok, worst)
}

/// Star aggregate's empirical risk never exceeds the best candidate's.
fn star_check(rng: &mut ChaCha8Rng) -> Check {
    let mut ok = true;
    let mut detail = String::new();
    for trial in 0..200 {
        let support = rng.gen_range(1..6);
        let m = rng.gen_range(1..12);
        let cands = random_class(rng, m, support);
        let n = rng.gen_range(1..40);
        let d = random_sample(rng, n, support);
        let star = emp_risk(&star_aggregate(&cands, &d).unwrap(), &d).unwrap();
        let best = cands
            .iter()
            .map(|c| emp_risk(c, &d).unwrap())
            .fold(f64::INFINITY, f64::min);
        if star > best {
            ok = false;
            detail = format!("trial {trial}: star {star} > best {best}");
        }
    }
    Check::new("star risk <= best candidate risk", ok, detail)
}

/// Frank–Wolfe on 3-vertex hulls: monotone, certified, and within 2e-4 of a
/// 0.01 grid search.
fn frank_wolfe_check(rng: &mut ChaCha8Rng) -> Check {
    let mut ok = true;
    let mut detail = String::new();
    let mut worst_gap: f64 = 0.0;
    for trial in 0..30 {
        let support = rng.gen_range(2..6);
        let dictionary: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..support).map(|_| rng.gen::<f64>()).collect())
            .collect();
        let n = rng.gen_range(5..40);
        let d = random_sample(rng, n, support);
        let q = QuadraticRisk::from_dataset(&d);
        let sol = simplex_least_squares(&dictionary, &[0, 1, 2], &q, 1e-6, 10_000).unwrap();
        let monotone = sol.trace.windows(2).all(|w| w[1] <= w[0] + 1e-15);
        let mut grid_best = f64::INFINITY;
        for i in 0..=100 {
            for j in 0..=(100 - i) {
                let w = [i as f64 / 100.0, j as f64 / 100.0, (100 - i - j) as f64 / 100.0];
                let f: Vec<f64> = (0..support)
                    .map(|x| (0..3).map(|k| w[k] * dictionary[k][x]).sum())
                    .collect();
                grid_best = grid_best.min(q.risk(&f));
            }
        }
        let diff = (sol.risk - grid_best).abs();
        worst_gap = worst_gap.max(sol.gap);
        if !monotone || !sol.converged || sol.gap > 1e-6 || sol.gap < 0.0 || diff > 2e-4 {
            ok = false;
            detail = format!(
                "trial {trial}: monotone={monotone} gap={} grid diff={diff}",
                sol.gap
            );
        }
    }
    if ok {
        detail = format!("max gap {worst_gap:.2e}");
    }
    Check::new("Frank-Wolfe monotone, gap <= 1e-6, matches grid", ok, detail)
}

/// Exact risk within 4 standard errors of a 1e5-sample Monte Carlo estimate.
fn monte_carlo_check(rng: &mut ChaCha8Rng) -> Check {
    let mut ok = true;
    let mut detail = String::new();
    for trial in 0..5 {
        let k = rng.gen_range(2..10);
        let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let mut mu: Vec<f64> = raw.iter().map(|r| r / total).collect();
        let drift: f64 = 1.0 - mu.iter().sum::<f64>();
        mu[0] += drift;
        let eta: Vec<f64> = (0..k).map(|_| rng.gen::<f64>()).collect();
        let f: Vec<f64> = (0..k).map(|_| rng.gen::<f64>()).collect();
        let class = FunctionSpec::FiniteList(FiniteList {
            members: vec![f.clone()],
        });
        let world = World::new(mu, eta, class).unwrap();
        let pred = Predictor::member(f.clone()).unwrap();
        let exact = world.exact_risk(&pred).unwrap();
        let n = 100_000;
        let data = sample_world(&world, n, rng).unwrap();
        let losses: Vec<f64> = data.iter().map(|p| (f[p.x.slot()] - p.y).powi(2)).collect();
        let mean = losses.iter().sum::<f64>() / n as f64;
        let var = losses.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        let se = (var / n as f64).sqrt();
        if (mean - exact).abs() > 4.0 * se {
            ok = false;
            detail = format!("trial {trial}: exact {exact} vs MC {mean} ± {se}");
        }
    }
    Check::new("exact risk vs Monte Carlo (4 stderr)", ok, detail)
}

/// Net, partition, star, Frank–Wolfe and risk-oracle properties on seeded
/// random instances.
pub fn structural_suite(seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    vec![
        net_check(&mut rng),
        star_check(&mut rng),
        frank_wolfe_check(&mut rng),
        monte_carlo_check(&mut rng),
    ]
}

/// Small finite-class rate experiment used for the determinism check.
pub fn miniature_config() -> ExperimentConfig {
    ExperimentConfig::from_json(
        r#"{
            "world": {"kind": "random-constants", "members": 16},
            "world_id": "mini-constants",
            "world_seed": 2024,
            "estimators": [
                {"kind": "aol", "epsilon": {"rule": "vc"}, "target": {"setting": "finite-aggregate"}},
                {"kind": "skeleton", "epsilon": {"rule": "vc"}, "target": {"setting": "finite-aggregate"}}
            ],
            "n_grid": [64, 128, 256, 512],
            "replications": 30,
            "base_seed": 7
        }"#,
    )
    .expect("built-in config is valid")
}

/// Runs the miniature experiment twice (serially, then on four workers) and
/// compares the CSV bytes.
pub fn determinism_check() -> Check {
    let mut cfg = miniature_config();
    cfg.jobs = Some(1);
    let first = run_experiment(&cfg).map(|r| r.csv());
    cfg.jobs = Some(4);
    let second = run_experiment(&cfg).map(|r| r.csv());
    match (first, second) {
        (Ok(a), Ok(b)) => Check::new(
            "identical CSV bytes across reruns",
            a == b,
            format!("{} bytes, {} rows", a.len(), a.lines().count() - 1),
        ),
        (Err(e), _) | (_, Err(e)) => Check::new("identical CSV bytes across reruns", false, e.to_string()),
    }
}

pub fn selftest() -> Vec<Check> {
    let mut checks = structural_suite(20_240_601);
    checks.push(determinism_check());
    checks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structural_suite_passes() {
        for check in structural_suite(1) {
            assert!(check.passed, "{}: {}", check.name, check.detail);
        }
    }
}
