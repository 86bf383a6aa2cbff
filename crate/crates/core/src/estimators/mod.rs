//! Composed estimators: aggregation-of-leaders, skeleton aggregation, global
//! ERM and sparse convex aggregation.
//!
//! Finite lists go through the explicit path (member list, greedy net,
//! enumeration). Box sequences and indicator classes are far too large to
//! enumerate at useful scales and use structured backends with the same
//! three-stage semantics; see [`grid`] and `indicator`.

pub mod grid;
mod indicator;

use std::time::Instant;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::aggregate::{ms_aggregate, AggregatorSpec};
use crate::domain::{
    enumerate_members, split_threeway, BoxSequence, Dataset, DictionaryHull, FunctionSpec,
    Predictor, VcIndicator,
};
use crate::empirical::{EmpiricalMetricContext, QuadraticRisk};
use crate::error::{Error, Result};
use crate::netpart::{build_partition, cell_members};
use crate::solvers::{
    default_max_iter, dictionary_mixture, erm_cell, erm_enumerate, simplex_least_squares,
};

use grid::{box_erm, product_aggregate, BoxPartition};
use indicator::{indicator_erm, IndicatorPartition};

pub const DEFAULT_MEMBER_BUDGET: usize = 1_000_000;
pub const DEFAULT_FW_TOL: f64 = 1e-6;

/// How the net radius is chosen from the per-block sample size `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum EpsilonRegime {
    /// `n^{-1/(2+p)}`, balancing bias and variance for entropy `rho^{-p}`.
    Poly { p: f64 },
    /// `n^{-1/2}`.
    Vc,
    Explicit { value: f64 },
}

pub fn epsilon_rule(regime: EpsilonRegime, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("epsilon rule needs n >= 1"));
    }
    let n = n as f64;
    match regime {
        EpsilonRegime::Poly { p } if p > 0.0 => Ok(n.powf(-1.0 / (2.0 + p))),
        EpsilonRegime::Poly { p } => Err(Error::invalid(format!("entropy exponent p={p} must be > 0"))),
        EpsilonRegime::Vc => Ok(n.powf(-0.5)),
        EpsilonRegime::Explicit { value } if value > 0.0 => Ok(value),
        EpsilonRegime::Explicit { value } => Err(Error::invalid(format!("epsilon {value} must be > 0"))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AolConfig {
    pub epsilon: EpsilonRegime,
    #[serde(default)]
    pub aggregator: AggregatorSpec,
    #[serde(default = "default_budget")]
    pub member_budget: usize,
    /// Grid step of box classes; defaults to `epsilon / 2`.
    #[serde(default)]
    pub grid_step: Option<f64>,
}

fn default_budget() -> usize {
    DEFAULT_MEMBER_BUDGET
}

impl AolConfig {
    pub fn new(epsilon: EpsilonRegime) -> Self {
        AolConfig {
            epsilon,
            aggregator: AggregatorSpec::default(),
            member_budget: DEFAULT_MEMBER_BUDGET,
            grid_step: None,
        }
    }

    pub fn with_aggregator(mut self, aggregator: AggregatorSpec) -> Self {
        self.aggregator = aggregator;
        self
    }
}

/// A named intermediate predictor (sparse convex aggregation exposes its two
/// stage candidates).
#[derive(Debug, Clone, PartialEq)]
pub struct StageCandidate {
    pub name: &'static str,
    pub predictor: Predictor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitRecord {
    pub predictor: Predictor,
    /// Number of cells (saturating for product partitions).
    pub n_cells: u64,
    pub epsilon: f64,
    /// Empirical risk of each cell leader on `S'`, when cells are explicit.
    pub cell_risks: Vec<f64>,
    pub wall_ms: f64,
    pub stages: Vec<StageCandidate>,
}

impl FitRecord {
    fn new(predictor: Predictor, n_cells: u64, epsilon: f64, started: Instant) -> Self {
        debug_assert!(predictor
            .values()
            .iter()
            .all(|v| (-1e-12..=1.0 + 1e-12).contains(v)));
        FitRecord {
            predictor,
            n_cells,
            epsilon,
            cell_risks: Vec::new(),
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
            stages: Vec::new(),
        }
    }
}

/// Box class with the grid step used by the estimator.
fn effective_box(b: &BoxSequence, epsilon: f64, grid_step: Option<f64>) -> BoxSequence {
    BoxSequence {
        grid_step: grid_step.unwrap_or(epsilon / 2.0),
        ..b.clone()
    }
}

fn indicator_member(v: &VcIndicator, set: &[usize]) -> Result<Predictor> {
    Predictor::member(v.member_values(set))
}

fn block_size(d: &Dataset) -> Result<usize> {
    if d.len() % 3 != 0 {
        return Err(Error::NotDivisibleByThree(d.len()));
    }
    Ok(d.len() / 3)
}

/// Aggregation of leaders: net on `S`, least squares per cell on `S'`,
/// sharp aggregation of the cell leaders on `S''`.
pub fn aol_fit(spec: &FunctionSpec, d: &Dataset, cfg: &AolConfig) -> Result<FitRecord> {
    let started = Instant::now();
    spec.validate()?;
    let split = split_threeway(d)?;
    let eps = epsilon_rule(cfg.epsilon, block_size(d)?)?;
    match spec {
        FunctionSpec::FiniteList(_) => {
            let members = enumerate_members(spec, cfg.member_budget)?;
            let part = build_partition(&members, eps, &EmpiricalMetricContext::new(&split.s))?;
            let mut leaders = Vec::with_capacity(part.n_cells());
            let mut risks = Vec::with_capacity(part.n_cells());
            for i in 0..part.n_cells() {
                let r = erm_cell(&members, &cell_members(&part, i)?, &split.s_prime, 0.0)?;
                risks.push(r.empirical_risk);
                leaders.push(r.predictor);
            }
            let predictor = ms_aggregate(&cfg.aggregator, &leaders, &split.s_dprime)?;
            let mut rec = FitRecord::new(predictor, part.n_cells() as u64, eps, started);
            rec.cell_risks = risks;
            Ok(rec)
        }
        FunctionSpec::BoxSequence(b) => {
            let class = effective_box(b, eps, cfg.grid_step);
            let part = BoxPartition::build(&class, eps, &QuadraticRisk::from_dataset(&split.s))?;
            let leaders = part.leaders(&QuadraticRisk::from_dataset(&split.s_prime))?;
            let predictor = product_aggregate(
                &cfg.aggregator,
                &leaders,
                &QuadraticRisk::from_dataset(&split.s_dprime),
            )?;
            Ok(FitRecord::new(predictor, part.n_cells(), eps, started))
        }
        FunctionSpec::VcIndicator(v) => {
            let part = IndicatorPartition::build(
                v,
                eps,
                &QuadraticRisk::from_dataset(&split.s),
                cfg.member_budget,
            )?;
            let cells = part.leaders(v, &QuadraticRisk::from_dataset(&split.s_prime))?;
            let leaders = cells
                .iter()
                .map(|(set, _)| indicator_member(v, set))
                .collect::<Result<Vec<_>>>()?;
            let predictor = ms_aggregate(&cfg.aggregator, &leaders, &split.s_dprime)?;
            let mut rec = FitRecord::new(predictor, part.n_cells() as u64, eps, started);
            rec.cell_risks = cells.into_iter().map(|(_, r)| r).collect();
            Ok(rec)
        }
        FunctionSpec::DictionaryHull(_) => Err(Error::NotEnumerable("dictionary-hull")),
    }
}

/// Skeleton aggregation: aggregate the net centers on `S''`; `S'` is unused.
pub fn skeleton_fit(
    spec: &FunctionSpec,
    d: &Dataset,
    epsilon: EpsilonRegime,
    aggregator: &AggregatorSpec,
    member_budget: usize,
) -> Result<FitRecord> {
    let started = Instant::now();
    spec.validate()?;
    let split = split_threeway(d)?;
    let eps = epsilon_rule(epsilon, block_size(d)?)?;
    match spec {
        FunctionSpec::FiniteList(_) => {
            let members = enumerate_members(spec, member_budget)?;
            let part = build_partition(&members, eps, &EmpiricalMetricContext::new(&split.s))?;
            let centers: Vec<Predictor> = part
                .net
                .center_ids
                .iter()
                .map(|&i| members[i].clone())
                .collect();
            let predictor = ms_aggregate(aggregator, &centers, &split.s_dprime)?;
            Ok(FitRecord::new(predictor, part.n_cells() as u64, eps, started))
        }
        FunctionSpec::BoxSequence(b) => {
            let class = effective_box(b, eps, None);
            let part = BoxPartition::build(&class, eps, &QuadraticRisk::from_dataset(&split.s))?;
            let predictor = product_aggregate(
                aggregator,
                &part.centers(),
                &QuadraticRisk::from_dataset(&split.s_dprime),
            )?;
            Ok(FitRecord::new(predictor, part.n_cells(), eps, started))
        }
        FunctionSpec::VcIndicator(v) => {
            let part = IndicatorPartition::build(
                v,
                eps,
                &QuadraticRisk::from_dataset(&split.s),
                member_budget,
            )?;
            let centers = part
                .centers
                .iter()
                .map(|set| indicator_member(v, set))
                .collect::<Result<Vec<_>>>()?;
            let predictor = ms_aggregate(aggregator, &centers, &split.s_dprime)?;
            Ok(FitRecord::new(predictor, part.n_cells() as u64, eps, started))
        }
        FunctionSpec::DictionaryHull(_) => Err(Error::NotEnumerable("dictionary-hull")),
    }
}

/// Least squares over the whole class on the given sample. `grid_step` sets
/// the resolution of box classes (defaults to the class's own step).
pub fn global_erm_fit(
    spec: &FunctionSpec,
    d: &Dataset,
    member_budget: usize,
    grid_step: Option<f64>,
) -> Result<FitRecord> {
    let started = Instant::now();
    spec.validate()?;
    let q = QuadraticRisk::from_dataset(d);
    let predictor = match spec {
        FunctionSpec::FiniteList(_) => {
            erm_enumerate(&enumerate_members(spec, member_budget)?, d)?.predictor
        }
        FunctionSpec::BoxSequence(b) => {
            let class = BoxSequence {
                grid_step: grid_step.unwrap_or(b.grid_step),
                ..b.clone()
            };
            Predictor::member(box_erm(&class, &q)?)?
        }
        FunctionSpec::VcIndicator(v) => indicator_member(v, &indicator_erm(v, &q)?)?,
        FunctionSpec::DictionaryHull(h) => {
            let patterns = sparsity_patterns(h, member_budget)?;
            let mut best: Option<(f64, Predictor)> = None;
            for nu in &patterns {
                let (p, r) = simplex_fit(h, nu, &q)?;
                if best.as_ref().map_or(true, |(b, _)| r < *b) {
                    best = Some((r, p));
                }
            }
            best.expect("at least one pattern").1
        }
    };
    Ok(FitRecord::new(predictor, 1, 0.0, started))
}

/// Supports with `1 <= |nu| <= s`, by cardinality then lexicographically.
pub fn sparsity_patterns(h: &DictionaryHull, member_budget: usize) -> Result<Vec<Vec<usize>>> {
    h.validate()?;
    let count = h.pattern_count();
    if count > member_budget as u128 {
        return Err(Error::BudgetExceeded {
            required: count,
            budget: member_budget as u128,
        });
    }
    let m = h.dictionary.len();
    Ok((1..=h.sparsity)
        .flat_map(|k| (0..m).combinations(k))
        .collect())
}

fn simplex_fit(h: &DictionaryHull, nu: &[usize], q: &QuadraticRisk) -> Result<(Predictor, f64)> {
    let sol = simplex_least_squares(
        &h.dictionary,
        nu,
        q,
        DEFAULT_FW_TOL,
        default_max_iter(nu.len(), q.sample_size()),
    )?;
    let p = dictionary_mixture(&h.dictionary, nu, &sol.weights)?;
    let r = q.risk_of(&p)?;
    Ok((p, r))
}

/// Sparse convex aggregation over deterministic cells.
///
/// Stage A fits least squares on `S'` over the hull of every support with at
/// most `s` elements and aggregates those fits on `S''`; stage B fits least
/// squares over the full simplex on `S'`; the two are aggregated on `S`.
pub fn sparse_convex_fit(
    h: &DictionaryHull,
    d: &Dataset,
    aggregator: &AggregatorSpec,
    tol: f64,
    member_budget: usize,
) -> Result<FitRecord> {
    let started = Instant::now();
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let split = split_threeway(d)?;
    let patterns = sparsity_patterns(h, member_budget)?;
    let q_prime = QuadraticRisk::from_dataset(&split.s_prime);
    let n = q_prime.sample_size();
    let mut candidates = Vec::with_capacity(patterns.len());
    let mut risks = Vec::with_capacity(patterns.len());
    for nu in &patterns {
        let sol = simplex_least_squares(&h.dictionary, nu, &q_prime, tol, default_max_iter(nu.len(), n))?;
        let p = dictionary_mixture(&h.dictionary, nu, &sol.weights)?;
        risks.push(q_prime.risk_of(&p)?);
        candidates.push(p);
    }
    let tilde = ms_aggregate(aggregator, &candidates, &split.s_dprime)?;
    let all: Vec<usize> = (0..h.dictionary.len()).collect();
    let sol = simplex_least_squares(&h.dictionary, &all, &q_prime, tol, default_max_iter(all.len(), n))?;
    let hull = dictionary_mixture(&h.dictionary, &all, &sol.weights)?;
    let predictor = ms_aggregate(aggregator, &[tilde.clone(), hull.clone()], &split.s)?;
    let mut rec = FitRecord::new(predictor, patterns.len() as u64, 0.0, started);
    rec.cell_risks = risks;
    rec.stages = vec![
        StageCandidate {
            name: "sparse",
            predictor: tilde,
        },
        StageCandidate {
            name: "hull",
            predictor: hull,
        },
    ];
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::FiniteList;
    use crate::empirical::emp_risk;

    fn finite(values: &[f64]) -> FunctionSpec {
        FunctionSpec::FiniteList(FiniteList {
            members: values.iter().map(|v| vec![*v, *v]).collect(),
        })
    }

    fn flat(y: f64, n: usize) -> Dataset {
        Dataset::from_slots(&(0..n).map(|i| (i % 2, y)).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn epsilon_rule_examples() {
        assert!((epsilon_rule(EpsilonRegime::Poly { p: 2.0 }, 16).unwrap() - 0.5).abs() < 1e-15);
        assert!((epsilon_rule(EpsilonRegime::Vc, 100).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(epsilon_rule(EpsilonRegime::Explicit { value: 0.3 }, 7).unwrap(), 0.3);
        assert!(epsilon_rule(EpsilonRegime::Poly { p: 0.0 }, 7).is_err());
        assert!(epsilon_rule(EpsilonRegime::Poly { p: -1.0 }, 7).is_err());
    }

    #[test]
    fn one_cell_aol_is_global_erm_on_s_prime() {
        let spec = finite(&[0.1, 0.35, 0.8]);
        let d = Dataset::from_slots(&[
            (0, 1.0),
            (1, 0.0),
            (0, 0.0),
            (1, 1.0),
            (0, 0.0),
            (1, 0.0),
        ])
        .unwrap();
        let fit = aol_fit(&spec, &d, &AolConfig::new(EpsilonRegime::Explicit { value: 5.0 })).unwrap();
        assert_eq!(fit.n_cells, 1);
        let split = split_threeway(&d).unwrap();
        let erm = global_erm_fit(&spec, &split.s_prime, 100, None).unwrap();
        assert_eq!(fit.predictor, erm.predictor);
    }

    #[test]
    fn two_constants_star_property() {
        let spec = finite(&[0.0, 1.0]);
        let d = flat(0.3, 9);
        let cfg = AolConfig::new(EpsilonRegime::Explicit { value: 0.5 });
        let fit = aol_fit(&spec, &d, &cfg).unwrap();
        assert_eq!(fit.n_cells, 2);
        let s2 = split_threeway(&d).unwrap().s_dprime;
        assert!(emp_risk(&fit.predictor, &s2).unwrap() <= 0.09);
        let erm = global_erm_fit(&spec, &flat(0.3, 4), 10, None).unwrap();
        assert_eq!(erm.predictor.values(), vec![0.0, 0.0]);
    }

    #[test]
    fn skeleton_examples() {
        let spec = finite(&[0.2, 0.6]);
        let d = flat(0.5, 6);
        let one = skeleton_fit(&spec, &d, EpsilonRegime::Explicit { value: 1.0 }, &AggregatorSpec::star(), 10)
            .unwrap();
        assert_eq!(one.n_cells, 1);
        assert_eq!(one.predictor.values(), vec![0.2, 0.2]);
        let all = skeleton_fit(&spec, &d, EpsilonRegime::Explicit { value: 0.01 }, &AggregatorSpec::star(), 10)
            .unwrap();
        let members = enumerate_members(&spec, 10).unwrap();
        let s2 = split_threeway(&d).unwrap().s_dprime;
        assert_eq!(
            all.predictor,
            ms_aggregate(&AggregatorSpec::star(), &members, &s2).unwrap()
        );
    }

    #[test]
    fn global_erm_examples() {
        let spec = FunctionSpec::FiniteList(FiniteList {
            members: vec![vec![0.5, 0.5], vec![1.0, 0.0]],
        });
        let d = Dataset::from_slots(&[(0, 1.0), (1, 0.0)]).unwrap();
        let fit = global_erm_fit(&spec, &d, 10, None).unwrap();
        assert_eq!(fit.predictor.values(), vec![1.0, 0.0]);
        assert_eq!(emp_risk(&fit.predictor, &d).unwrap(), 0.0);
        let single = finite(&[0.7]);
        assert_eq!(global_erm_fit(&single, &d, 10, None).unwrap().predictor.values(), vec![0.7, 0.7]);
    }

    #[test]
    fn sparse_convex_examples() {
        let one = DictionaryHull {
            dictionary: vec![vec![0.4, 0.6]],
            sparsity: 1,
        };
        let d = flat(0.3, 9);
        let fit = sparse_convex_fit(&one, &d, &AggregatorSpec::star(), 1e-6, 100).unwrap();
        assert_eq!(fit.predictor.values(), vec![0.4, 0.6]);

        let two = DictionaryHull {
            dictionary: vec![vec![0.0, 0.0], vec![1.0, 1.0]],
            sparsity: 1,
        };
        let fit = sparse_convex_fit(&two, &d, &AggregatorSpec::star(), 1e-6, 100).unwrap();
        let hull = &fit.stages[1].predictor;
        for v in hull.values() {
            assert!((v - 0.3).abs() < 1e-9);
        }
        let s = split_threeway(&d).unwrap().s;
        assert!(emp_risk(&fit.predictor, &s).unwrap() <= emp_risk(hull, &s).unwrap());
        assert!(emp_risk(&fit.predictor, &s).unwrap() < 1e-12);

        let full = DictionaryHull {
            dictionary: vec![vec![0.1, 0.9], vec![0.8, 0.2], vec![0.5, 0.5]],
            sparsity: 3,
        };
        let d = Dataset::from_slots(&[(0, 1.0), (1, 0.0), (0, 0.0), (1, 1.0), (0, 1.0), (1, 0.0)])
            .unwrap();
        let fit = sparse_convex_fit(&full, &d, &AggregatorSpec::star(), 1e-9, 100).unwrap();
        let q = QuadraticRisk::from_dataset(&split_threeway(&d).unwrap().s_prime);
        let best_pattern = fit.cell_risks.iter().copied().fold(f64::INFINITY, f64::min);
        let hull_risk = q.risk_of(&fit.stages[1].predictor).unwrap();
        assert!((best_pattern - hull_risk).abs() < 1e-6);
    }

    #[test]
    fn pattern_order_and_budget() {
        let h = DictionaryHull {
            dictionary: vec![vec![0.1], vec![0.2], vec![0.3]],
            sparsity: 2,
        };
        assert_eq!(
            sparsity_patterns(&h, 100).unwrap(),
            vec![vec![0], vec![1], vec![2], vec![0, 1], vec![0, 2], vec![1, 2]]
        );
        assert_eq!(
            sparsity_patterns(&h, 5).unwrap_err(),
            Error::BudgetExceeded {
                required: 6,
                budget: 5
            }
        );
    }
}
