//! Empirical pseudo-metrics, empirical risks, greedy covers and Monte Carlo
//! Rademacher averages.

use rand::Rng;

use crate::domain::{Dataset, Predictor};
use crate::error::{Error, Result};
use crate::netpart::EpsilonNet;

/// Slack used for every "within epsilon" comparison.
pub const COVER_TOL: f64 = 1e-12;

/// Squared loss of a fixed function in sufficient-statistic form:
/// `R(f) = sum_a w_a (f_a - t_a)^2 + offset`.
///
/// Built from a sample (`w_a` = frequency of atom a, `t_a` = mean label on a,
/// `offset` = within-atom label variance) it is the empirical risk; built from
/// a world (`w = mu`, `t = eta`, `offset = sum mu eta (1-eta)`) it is the
/// population risk.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticRisk {
    terms: Vec<RiskTerm>,
    offset: f64,
    sample_size: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskTerm {
    pub slot: usize,
    pub weight: f64,
    pub target: f64,
    /// Number of sample points on this atom (0 for population objectives).
    pub count: usize,
}

impl QuadraticRisk {
    pub fn from_dataset(d: &Dataset) -> Self {
        let n = d.len();
        let mut pts: Vec<(usize, f64)> = d.iter().map(|p| (p.x.slot(), p.y)).collect();
        pts.sort_by_key(|&(s, _)| s);
        let mut terms = Vec::new();
        let mut offset = 0.0;
        let mut i = 0;
        while i < pts.len() {
            let slot = pts[i].0;
            let mut j = i;
            let (mut sum, mut sumsq) = (0.0, 0.0);
            while j < pts.len() && pts[j].0 == slot {
                sum += pts[j].1;
                sumsq += pts[j].1 * pts[j].1;
                j += 1;
            }
            let count = j - i;
            let mean = sum / count as f64;
            offset += (sumsq - sum * mean).max(0.0);
            terms.push(RiskTerm {
                slot,
                weight: count as f64 / n as f64,
                target: mean,
                count,
            });
            i = j;
        }
        QuadraticRisk {
            terms,
            offset: offset / n as f64,
            sample_size: n,
        }
    }

    /// Population objective of a discrete world.
    pub fn population(mu: &[f64], eta: &[f64]) -> Self {
        let mut terms = Vec::new();
        let mut offset = 0.0;
        for (slot, (&w, &t)) in mu.iter().zip(eta).enumerate() {
            if w > 0.0 {
                terms.push(RiskTerm {
                    slot,
                    weight: w,
                    target: t,
                    count: 0,
                });
                offset += w * t * (1.0 - t);
            }
        }
        QuadraticRisk {
            terms,
            offset,
            sample_size: 0,
        }
    }

    pub fn terms(&self) -> &[RiskTerm] {
        &self.terms
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Size of the sample this objective was built from (0 for populations).
    pub fn sample_size(&self) -> usize {
        self.sample_size
    }

    /// Largest slot carrying weight, plus one.
    pub fn min_support(&self) -> usize {
        self.terms.last().map_or(0, |t| t.slot + 1)
    }

    pub fn risk(&self, values: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let r = values[t.slot] - t.target;
                t.weight * r * r
            })
            .sum::<f64>()
            + self.offset
    }

    pub fn risk_of(&self, f: &Predictor) -> Result<f64> {
        let support = f.support_size();
        if self.min_support() > support {
            return Err(Error::UnknownDesignPoint {
                index: self.min_support(),
                support,
            });
        }
        Ok(self.risk(&f.values()))
    }

    /// Dense per-slot weights over a support of the given size.
    pub fn dense_weights(&self, support: usize) -> Vec<f64> {
        let mut w = vec![0.0; support];
        for t in &self.terms {
            w[t.slot] = t.weight;
        }
        w
    }
}

/// Empirical l2 pseudo-metric `d_S` of a sample, stored as atom frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMetricContext {
    weights: Vec<(usize, f64)>,
    sample_size: usize,
}

impl EmpiricalMetricContext {
    pub fn new(sample: &Dataset) -> Self {
        let q = QuadraticRisk::from_dataset(sample);
        EmpiricalMetricContext {
            weights: q.terms.iter().map(|t| (t.slot, t.weight)).collect(),
            sample_size: sample.len(),
        }
    }

    pub fn weights(&self) -> &[(usize, f64)] {
        &self.weights
    }

    pub fn sample_size(&self) -> usize {
        self.sample_size
    }

    fn check_support(&self, f: &Predictor) -> Result<()> {
        if let Some(&(slot, _)) = self.weights.last() {
            if slot >= f.support_size() {
                return Err(Error::UnknownDesignPoint {
                    index: slot + 1,
                    support: f.support_size(),
                });
            }
        }
        Ok(())
    }

    /// Values of `f` on the observed atoms, in context order.
    pub(crate) fn restrict(&self, f: &Predictor) -> Result<Vec<f64>> {
        self.check_support(f)?;
        let table = f.table();
        Ok(self.weights.iter().map(|&(s, _)| table[s]).collect())
    }

    pub(crate) fn dist_restricted(&self, a: &[f64], b: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(a.iter().zip(b))
            .map(|(&(_, w), (x, y))| w * (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }
}

/// `sqrt((1/n) sum_{x in S} (f(x) - g(x))^2)`.
pub fn emp_metric(f: &Predictor, g: &Predictor, ctx: &EmpiricalMetricContext) -> Result<f64> {
    let a = ctx.restrict(f)?;
    let b = ctx.restrict(g)?;
    Ok(ctx.dist_restricted(&a, &b))
}

/// `(1/n) sum (f(x) - y)^2` over the sample, evaluated through the same
/// sufficient statistics the solvers use so that risk comparisons agree
/// bitwise.
pub fn emp_risk(f: &Predictor, d: &Dataset) -> Result<f64> {
    QuadraticRisk::from_dataset(d).risk_of(f)
}

/// Output of the farthest-point construction: the net plus the nearest-center
/// assignment it maintains along the way.
pub(crate) struct CoverRun {
    pub centers: Vec<usize>,
    pub assignment: Vec<usize>,
}

pub(crate) fn farthest_point_cover(
    members: &[Predictor],
    epsilon: f64,
    ctx: &EmpiricalMetricContext,
) -> Result<CoverRun> {
    if members.is_empty() {
        return Err(Error::invalid("cannot cover an empty class"));
    }
    if !(epsilon > 0.0) {
        return Err(Error::invalid("epsilon must be positive"));
    }
    let table = members
        .iter()
        .map(|m| ctx.restrict(m))
        .collect::<Result<Vec<_>>>()?;
    let mut centers = vec![0usize];
    let mut assignment = vec![0usize; members.len()];
    let mut distance: Vec<f64> = table
        .iter()
        .map(|row| ctx.dist_restricted(row, &table[0]))
        .collect();
    loop {
        // farthest member, lowest index on ties
        let (far, far_d) = distance
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &d)| {
                if d > best.1 {
                    (i, d)
                } else {
                    best
                }
            });
        if far_d <= epsilon + COVER_TOL {
            break;
        }
        let cell = centers.len();
        centers.push(far);
        for (i, row) in table.iter().enumerate() {
            let d = ctx.dist_restricted(row, &table[far]);
            if d < distance[i] {
                distance[i] = d;
                assignment[i] = cell;
            }
        }
    }
    Ok(CoverRun {
        centers,
        assignment,
    })
}

/// Farthest-point greedy proper epsilon-net under `d_S`, seeded at member 0.
pub fn greedy_cover(
    members: &[Predictor],
    epsilon: f64,
    ctx: &EmpiricalMetricContext,
) -> Result<EpsilonNet> {
    let run = farthest_point_cover(members, epsilon, ctx)?;
    Ok(EpsilonNet {
        epsilon,
        center_ids: run.centers,
        sample_size: ctx.sample_size(),
    })
}

/// Member values at each sample point, one row per member.
pub fn value_table(members: &[Predictor], d: &Dataset) -> Result<Vec<Vec<f64>>> {
    members
        .iter()
        .map(|m| d.iter().map(|p| m.evaluate(p.x)).collect())
        .collect()
}

/// Squared losses `(f(x_i) - y_i)^2`, one row per member.
pub fn loss_table(members: &[Predictor], d: &Dataset) -> Result<Vec<Vec<f64>>> {
    members
        .iter()
        .map(|m| {
            d.iter()
                .map(|p| m.evaluate(p.x).map(|v| (v - p.y) * (v - p.y)))
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RademacherEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub reps: usize,
}

/// Monte Carlo estimate of `E_sigma sup_g (1/n) sum sigma_i g(z_i)` over a
/// class given by its value table (rows = functions, columns = sample points).
pub fn rademacher_mc<R: Rng + ?Sized>(
    table: &[Vec<f64>],
    reps: usize,
    rng: &mut R,
) -> Result<RademacherEstimate> {
    if reps == 0 {
        return Err(Error::invalid("rademacher_mc needs reps >= 1"));
    }
    let n = table.first().map_or(0, Vec::len);
    if n == 0 || table.iter().any(|r| r.len() != n) {
        return Err(Error::invalid("value table must be non-empty and rectangular"));
    }
    let mut sigma = vec![0.0; n];
    let mut sups = Vec::with_capacity(reps);
    for _ in 0..reps {
        for s in sigma.iter_mut() {
            *s = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        }
        let sup = table
            .iter()
            .map(|row| row.iter().zip(&sigma).map(|(g, s)| g * s).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max);
        sups.push(sup / n as f64);
    }
    let mean = sups.iter().sum::<f64>() / reps as f64;
    let stderr = if reps > 1 {
        let var = sups.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        (var / reps as f64).sqrt()
    } else {
        0.0
    };
    Ok(RademacherEstimate { mean, stderr, reps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn four_points() -> Dataset {
        Dataset::from_slots(&[(0, 1.0), (1, 0.0), (2, 0.0), (3, 1.0)]).unwrap()
    }

    fn c(v: f64) -> Predictor {
        Predictor::constant(v, 4).unwrap()
    }

    #[test]
    fn metric_examples() {
        let ctx = EmpiricalMetricContext::new(&four_points());
        assert_eq!(emp_metric(&c(0.3), &c(0.3), &ctx).unwrap(), 0.0);
        assert!((emp_metric(&c(0.0), &c(1.0), &ctx).unwrap() - 1.0).abs() < 1e-15);
        let g = Predictor::member(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((emp_metric(&c(0.0), &g, &ctx).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn risk_examples() {
        let d = four_points();
        let interp = Predictor::member(vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(emp_risk(&interp, &d).unwrap(), 0.0);
        let ones = Dataset::from_slots(&[(0, 1.0), (2, 1.0)]).unwrap();
        assert_eq!(emp_risk(&c(0.0), &ones).unwrap(), 1.0);
        let two = Dataset::from_slots(&[(0, 0.0), (1, 1.0)]).unwrap();
        assert!((emp_risk(&c(0.5), &two).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn quadratic_form_matches_direct_risk() {
        let d = Dataset::from_slots(&[(0, 1.0), (0, 0.0), (2, 1.0), (2, 1.0), (1, 0.0)]).unwrap();
        let q = QuadraticRisk::from_dataset(&d);
        let f = Predictor::member(vec![0.2, 0.7, 0.9, 0.1]).unwrap();
        assert!((q.risk(&f.values()) - emp_risk(&f, &d).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn cover_of_three_constants() {
        let ctx = EmpiricalMetricContext::new(&four_points());
        let members = vec![c(0.0), c(0.4), c(1.0)];
        let net = greedy_cover(&members, 0.5, &ctx).unwrap();
        assert_eq!(net.center_ids, vec![0, 2]);
        let wide = greedy_cover(&members, 1.0, &ctx).unwrap();
        assert_eq!(wide.center_ids, vec![0]);
        let fine = greedy_cover(&members, 0.1, &ctx).unwrap();
        assert_eq!(fine.center_ids.len(), 3);
    }

    #[test]
    fn rademacher_rejects_zero_reps() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(rademacher_mc(&[vec![1.0]], 0, &mut rng).is_err());
    }

    #[test]
    fn rademacher_plus_minus_one_n1_is_exactly_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let est = rademacher_mc(&[vec![1.0], vec![-1.0]], 200, &mut rng).unwrap();
        assert_eq!(est.mean, 1.0);
        assert_eq!(est.stderr, 0.0);
    }
}
