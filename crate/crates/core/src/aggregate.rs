//! Sharp model-selection aggregation of a finite list of fixed predictors.

use serde::{Deserialize, Serialize};

use crate::domain::{Dataset, Predictor};
use crate::empirical::QuadraticRisk;
use crate::error::{Error, Result};

/// A star mixture must beat the global ERM by more than this to replace it;
/// keeps "aggregate risk <= best candidate risk" exact under rounding.
const STAR_IMPROVEMENT: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum AggregatorKind {
    #[default]
    Star,
    ExpWeights,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregatorSpec {
    pub kind: AggregatorKind,
    /// Inverse temperature of the exponential weights; unused by the star.
    #[serde(default = "default_temperature")]
    pub temperature: f64,
}

fn default_temperature() -> f64 {
    4.0
}

impl Default for AggregatorSpec {
    fn default() -> Self {
        AggregatorSpec {
            kind: AggregatorKind::Star,
            temperature: default_temperature(),
        }
    }
}

impl AggregatorSpec {
    pub fn star() -> Self {
        Self::default()
    }

    pub fn exp_weights(temperature: f64) -> Self {
        AggregatorSpec {
            kind: AggregatorKind::ExpWeights,
            temperature,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::invalid("aggregation temperature must be positive"));
        }
        Ok(())
    }
}

/// Minimizer over `[0,1]` of `sum_a w_a ((1-l) a + l b - t)^2`.
pub(crate) fn segment_minimizer(q: &QuadraticRisk, a: &[f64], b: &[f64]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for t in q.terms() {
        let d = b[t.slot] - a[t.slot];
        num += t.weight * (t.target - a[t.slot]) * d;
        den += t.weight * d * d;
    }
    if den > 0.0 {
        (num / den).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

/// Least-squares position on the segment from `g_a` (λ = 0) to `g_b` (λ = 1).
pub fn segment_ls(g_a: &Predictor, g_b: &Predictor, d: &Dataset) -> Result<f64> {
    let q = QuadraticRisk::from_dataset(d);
    q.risk_of(g_a)?;
    q.risk_of(g_b)?;
    Ok(segment_minimizer(&q, &g_a.values(), &g_b.values()))
}

fn two_point(a: &Predictor, b: &Predictor, lambda: f64) -> Result<Predictor> {
    if lambda <= 0.0 {
        Ok(a.clone())
    } else if lambda >= 1.0 {
        Ok(b.clone())
    } else {
        Predictor::mixture(vec![a.clone(), b.clone()], vec![1.0 - lambda, lambda])
    }
}

fn check_candidates(candidates: &[Predictor]) -> Result<()> {
    if candidates.is_empty() {
        return Err(Error::invalid("aggregation needs at least one candidate"));
    }
    Ok(())
}

/// Star aggregate: the best point on the segments joining the empirical risk
/// minimizer to every other candidate.
pub fn star_aggregate(candidates: &[Predictor], d: &Dataset) -> Result<Predictor> {
    check_candidates(candidates)?;
    let q = QuadraticRisk::from_dataset(d);
    let tables: Vec<Vec<f64>> = candidates
        .iter()
        .map(|c| q.risk_of(c).map(|_| c.values()))
        .collect::<Result<_>>()?;
    star_from_tables(candidates, &tables, &q)
}

fn star_from_tables(
    candidates: &[Predictor],
    tables: &[Vec<f64>],
    q: &QuadraticRisk,
) -> Result<Predictor> {
    let risks: Vec<f64> = tables.iter().map(|t| q.risk(t)).collect();
    let hat = (0..risks.len())
        .fold(0, |best, i| if risks[i] < risks[best] { i } else { best });
    let mut best = (risks[hat], hat, 0.0);
    let mut mixed = vec![0.0; tables[hat].len()];
    for (j, table) in tables.iter().enumerate() {
        if j == hat {
            continue;
        }
        let lambda = segment_minimizer(q, &tables[hat], table);
        if lambda == 0.0 {
            continue;
        }
        for ((m, a), b) in mixed.iter_mut().zip(&tables[hat]).zip(table) {
            *m = (1.0 - lambda) * a + lambda * b;
        }
        let r = q.risk(&mixed);
        if r < best.0 - STAR_IMPROVEMENT {
            best = (r, j, lambda);
        }
    }
    two_point(&candidates[hat], &candidates[best.1], best.2)
}

/// Softmax weights `exp(-beta * n * risk_j)`, normalized; shift invariant.
pub fn ew_weights(risks: &[f64], n: usize, beta: f64) -> Vec<f64> {
    let min = risks.iter().copied().fold(f64::INFINITY, f64::min);
    let raw: Vec<f64> = risks
        .iter()
        .map(|r| (-beta * n as f64 * (r - min)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Exponentially weighted mixture with weights `exp(-beta * n * R_n(g_j))`.
pub fn ew_aggregate(candidates: &[Predictor], d: &Dataset, beta: f64) -> Result<Predictor> {
    check_candidates(candidates)?;
    if !(beta > 0.0) {
        return Err(Error::invalid("temperature must be positive"));
    }
    let q = QuadraticRisk::from_dataset(d);
    let risks = candidates
        .iter()
        .map(|c| q.risk_of(c))
        .collect::<Result<Vec<_>>>()?;
    Predictor::mixture(candidates.to_vec(), ew_weights(&risks, d.len(), beta))
}

pub fn ms_aggregate(
    spec: &AggregatorSpec,
    candidates: &[Predictor],
    d: &Dataset,
) -> Result<Predictor> {
    spec.validate()?;
    match spec.kind {
        AggregatorKind::Star => star_aggregate(candidates, d),
        AggregatorKind::ExpWeights => ew_aggregate(candidates, d, spec.temperature),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::empirical::emp_risk;

    fn c(v: f64) -> Predictor {
        Predictor::constant(v, 2).unwrap()
    }

    fn flat(y: f64, n: usize) -> Dataset {
        Dataset::from_slots(&(0..n).map(|i| (i % 2, y)).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn segment_examples() {
        let d = flat(0.3, 4);
        assert!((segment_ls(&c(0.0), &c(1.0), &d).unwrap() - 0.3).abs() < 1e-15);
        assert_eq!(segment_ls(&c(0.4), &c(0.4), &d).unwrap(), 0.0);
        let g_b = Predictor::member(vec![0.4, 0.45]).unwrap();
        let ys = Dataset::from_slots(&[(0, 0.8), (1, 0.9)]).unwrap();
        assert_eq!(segment_ls(&c(0.0), &g_b, &ys).unwrap(), 1.0);
    }

    #[test]
    fn segment_matches_grid_search() {
        let d = Dataset::from_slots(&[(0, 0.0), (1, 1.0), (0, 1.0), (1, 1.0)]).unwrap();
        let a = Predictor::member(vec![0.1, 0.2]).unwrap();
        let b = Predictor::member(vec![0.9, 0.7]).unwrap();
        let lambda = segment_ls(&a, &b, &d).unwrap();
        let risk_at = |l: f64| {
            emp_risk(
                &Predictor::mixture(vec![a.clone(), b.clone()], vec![1.0 - l, l]).unwrap(),
                &d,
            )
            .unwrap()
        };
        let grid_best = (0..=10_000)
            .map(|i| i as f64 * 1e-4)
            .min_by(|x, y| risk_at(*x).total_cmp(&risk_at(*y)))
            .unwrap();
        assert!((lambda - grid_best).abs() <= 1e-4);
    }

    #[test]
    fn star_examples() {
        let d = flat(0.3, 4);
        assert_eq!(star_aggregate(&[c(0.6)], &d).unwrap(), c(0.6));
        let s = star_aggregate(&[c(0.0), c(1.0)], &d).unwrap();
        assert!(emp_risk(&s, &d).unwrap() < 1e-15);
        // the ERM already sits at the labels: nothing to gain on any segment
        let s = star_aggregate(&[c(0.3), c(0.9), c(0.0)], &d).unwrap();
        assert_eq!(s, c(0.3));
        assert!(star_aggregate(&[], &d).is_err());
    }

    #[test]
    fn ew_examples() {
        let d = flat(0.5, 4);
        let w = ew_weights(&[0.2, 0.2, 0.2], 4, 4.0);
        for x in w {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
        let sharp = ew_weights(&[0.1, 0.3], 100, 1e9);
        assert!(sharp[0] >= 1.0 - 1e-6);
        let n = 10;
        let w = ew_weights(&[0.2, 0.2 + 1.0 / n as f64], n, 1.0);
        assert!((w[0] - 1.0 / (1.0 + (-1.0f64).exp())).abs() < 1e-12);
        assert!((w[0] - 0.7311).abs() < 1e-4);

        let mix = ew_aggregate(&[c(0.2), c(0.8)], &d, 4.0).unwrap();
        assert!((mix.values()[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ew_shift_invariant() {
        let a = ew_weights(&[0.1, 0.15, 0.4], 50, 4.0);
        let b = ew_weights(&[1.1, 1.15, 1.4], 50, 4.0);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn dispatch() {
        let d = flat(0.3, 4);
        let cands = [c(0.0), c(1.0)];
        assert_eq!(
            ms_aggregate(&AggregatorSpec::star(), &cands, &d).unwrap(),
            star_aggregate(&cands, &d).unwrap()
        );
        assert_eq!(
            ms_aggregate(&AggregatorSpec::exp_weights(2.0), &cands, &d).unwrap(),
            ew_aggregate(&cands, &d, 2.0).unwrap()
        );
        assert!(ms_aggregate(&AggregatorSpec::star(), &[], &d).is_err());
        assert!(serde_json::from_str::<AggregatorSpec>(r#"{"kind":"exp-weights"}"#)
            .unwrap()
            .temperature
            == 4.0);
    }
}
