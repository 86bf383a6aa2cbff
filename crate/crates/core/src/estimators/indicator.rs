//! Structured backend for indicator classes `b + a 1{W}`, `|W| <= d`.
//!
//! Let `U` be the union of the current centers. For `W = sigma + R` with
//! `sigma` inside `U` and `R` outside it, the squared distance to any center
//! is `a^2 (D(sigma, c) + w(R))`. So the nearest center depends on `sigma`
//! only, the farthest member fills `R` with the heaviest atoms outside `U`,
//! and least squares inside a cell adds the most helpful atoms outside `U`.
//! Only the subsets of `U` are enumerated.

use itertools::Itertools;

use crate::domain::{binomial, VcIndicator};
use crate::empirical::{QuadraticRisk, COVER_TOL};
use crate::error::{Error, Result};

/// `sum_{x in a xor b} w_x` for sorted sets.
fn sym_diff_weight(a: &[usize], b: &[usize], w: &[f64]) -> f64 {
    let (mut i, mut j, mut acc) = (0, 0, 0.0);
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i] < b[j]) {
            acc += w[a[i]];
            i += 1;
        } else if i == a.len() || b[j] < a[i] {
            acc += w[b[j]];
            j += 1;
        } else {
            i += 1;
            j += 1;
        }
    }
    acc
}

fn check_support(v: &VcIndicator, q: &QuadraticRisk) -> Result<()> {
    if q.min_support() > v.universe_size {
        return Err(Error::UnknownDesignPoint {
            index: q.min_support(),
            support: v.universe_size,
        });
    }
    Ok(())
}

/// Per-atom risk change `w_x [(b + a - t_x)^2 - (b - t_x)^2]` from adding `x` to `W`.
pub(crate) fn gains(v: &VcIndicator, q: &QuadraticRisk) -> Vec<f64> {
    let mut g = vec![0.0; v.universe_size];
    for t in q.terms() {
        let lo = v.baseline - t.target;
        let hi = lo + v.amplitude;
        g[t.slot] = t.weight * (hi * hi - lo * lo);
    }
    g
}

/// Atoms with negative gain, most helpful first (ties by index), skipping
/// `excluded`, at most `limit` of them.
fn best_additions(gain: &[f64], excluded: &[usize], limit: usize) -> Vec<usize> {
    let mut neg: Vec<usize> = (0..gain.len())
        .filter(|&x| gain[x] < 0.0 && excluded.binary_search(&x).is_err())
        .collect();
    neg.sort_by(|&a, &b| gain[a].total_cmp(&gain[b]).then(a.cmp(&b)));
    neg.truncate(limit);
    neg.sort_unstable();
    neg
}

/// Least-squares support: the (at most `d`) atoms with negative gain, most
/// helpful first.
pub(crate) fn indicator_erm(v: &VcIndicator, q: &QuadraticRisk) -> Result<Vec<usize>> {
    v.validate()?;
    check_support(v, q)?;
    Ok(best_additions(&gains(v, q), &[], v.d))
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct IndicatorPartition {
    /// Center supports in insertion order; center 0 is the empty set.
    pub centers: Vec<Vec<usize>>,
    /// Union of the center supports, sorted.
    pub universe: Vec<usize>,
    /// Every `sigma` inside the universe with `|sigma| <= d` and its cell.
    pub subsets: Vec<(Vec<usize>, usize)>,
}

fn subsets_of(universe: &[usize], d: usize, budget: usize) -> Result<Vec<Vec<usize>>> {
    let u = universe.len() as u128;
    let count = (0..=d.min(universe.len()) as u128)
        .fold(0u128, |acc, m| acc.saturating_add(binomial(u, m)));
    if count > budget as u128 {
        return Err(Error::BudgetExceeded {
            required: count,
            budget: budget as u128,
        });
    }
    Ok((0..=d.min(universe.len()))
        .flat_map(|m| universe.iter().copied().combinations(m))
        .collect())
}

impl IndicatorPartition {
    /// Farthest-point net seeded at the empty set, under `d_S`, then
    /// nearest-center cells (ties to the lower center).
    pub(crate) fn build(
        v: &VcIndicator,
        epsilon: f64,
        q_s: &QuadraticRisk,
        budget: usize,
    ) -> Result<Self> {
        v.validate()?;
        check_support(v, q_s)?;
        if !(epsilon > 0.0) {
            return Err(Error::invalid("epsilon must be positive"));
        }
        let w = q_s.dense_weights(v.universe_size);
        let mut heavy: Vec<usize> = (0..w.len()).filter(|&x| w[x] > 0.0).collect();
        heavy.sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(a.cmp(&b)));
        let a2 = v.amplitude * v.amplitude;
        let limit = epsilon * epsilon + COVER_TOL;

        let mut centers: Vec<Vec<usize>> = vec![Vec::new()];
        let mut universe: Vec<usize> = Vec::new();
        loop {
            let outside: Vec<usize> = heavy
                .iter()
                .copied()
                .filter(|x| universe.binary_search(x).is_err())
                .take(v.d)
                .collect();
            let mut best: Option<(f64, Vec<usize>)> = None;
            for sigma in subsets_of(&universe, v.d, budget)? {
                let near = centers
                    .iter()
                    .map(|c| sym_diff_weight(&sigma, c, &w))
                    .fold(f64::INFINITY, f64::min);
                let fill = &outside[..outside.len().min(v.d - sigma.len())];
                let dist = near + fill.iter().map(|&x| w[x]).sum::<f64>();
                let mut set: Vec<usize> = sigma.iter().chain(fill).copied().collect();
                set.sort_unstable();
                let better = match &best {
                    None => true,
                    Some((bd, bs)) => {
                        dist > *bd
                            || (dist == *bd
                                && (set.len() < bs.len() || (set.len() == bs.len() && set < *bs)))
                    }
                };
                if better {
                    best = Some((dist, set));
                }
            }
            let (dist, set) = best.expect("the empty subset is always present");
            if a2 * dist <= limit {
                break;
            }
            for &x in &set {
                if let Err(pos) = universe.binary_search(&x) {
                    universe.insert(pos, x);
                }
            }
            centers.push(set);
        }

        let subsets = subsets_of(&universe, v.d, budget)?
            .into_iter()
            .map(|sigma| {
                let cell = (0..centers.len()).fold(0, |best, i| {
                    if sym_diff_weight(&sigma, &centers[i], &w)
                        < sym_diff_weight(&sigma, &centers[best], &w)
                    {
                        i
                    } else {
                        best
                    }
                });
                (sigma, cell)
            })
            .collect();
        Ok(IndicatorPartition {
            centers,
            universe,
            subsets,
        })
    }

    pub(crate) fn n_cells(&self) -> usize {
        self.centers.len()
    }

    /// Least-squares member of every cell on `S'`: supports and their risks.
    pub(crate) fn leaders(
        &self,
        v: &VcIndicator,
        q_prime: &QuadraticRisk,
    ) -> Result<Vec<(Vec<usize>, f64)>> {
        check_support(v, q_prime)?;
        let gain = gains(v, q_prime);
        let extra = best_additions(&gain, &self.universe, v.d);
        let mut extra_by_gain = extra.clone();
        extra_by_gain.sort_by(|&a, &b| gain[a].total_cmp(&gain[b]).then(a.cmp(&b)));
        let mut best: Vec<Option<(f64, Vec<usize>)>> = vec![None; self.n_cells()];
        for (sigma, cell) in &self.subsets {
            let add = &extra_by_gain[..extra_by_gain.len().min(v.d - sigma.len())];
            let delta: f64 = sigma.iter().chain(add).map(|&x| gain[x]).sum();
            if best[*cell].as_ref().map_or(true, |(r, _)| delta < *r) {
                let mut set: Vec<usize> = sigma.iter().chain(add).copied().collect();
                set.sort_unstable();
                best[*cell] = Some((delta, set));
            }
        }
        Ok(best
            .into_iter()
            .map(|b| {
                let (_, set) = b.expect("every cell holds its center");
                let r = q_prime.risk(&v.member_values(&set));
                (set, r)
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{enumerate_members, Dataset, FunctionSpec};
    use crate::empirical::{emp_metric, EmpiricalMetricContext};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn class(a: f64, b: f64) -> VcIndicator {
        VcIndicator {
            amplitude: a,
            d: 2,
            universe_size: 6,
            baseline: b,
        }
    }

    fn data(rng: &mut ChaCha8Rng, n: usize) -> Dataset {
        let pairs: Vec<(usize, f64)> = (0..n)
            .map(|_| (rng.gen_range(0..6), if rng.gen::<f64>() < 0.5 { 1.0 } else { 0.0 }))
            .collect();
        Dataset::from_slots(&pairs).unwrap()
    }

    fn sets(v: &VcIndicator) -> Vec<Vec<usize>> {
        (0..=v.d)
            .flat_map(|m| (0..v.universe_size).combinations(m))
            .collect()
    }

    #[test]
    fn erm_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (a, b) in [(0.75, 0.0), (0.25, 0.5)] {
            let v = class(a, b);
            let members = enumerate_members(&FunctionSpec::VcIndicator(v.clone()), 100).unwrap();
            for _ in 0..20 {
                let d = data(&mut rng, 10);
                let q = QuadraticRisk::from_dataset(&d);
                let fast = q.risk(&v.member_values(&indicator_erm(&v, &q).unwrap()));
                let brute = members
                    .iter()
                    .map(|m| q.risk(&m.values()))
                    .fold(f64::INFINITY, f64::min);
                assert!((fast - brute).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn net_covers_and_cells_are_voronoi() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v = class(0.75, 0.0);
        let all = sets(&v);
        for eps in [0.2, 0.35, 0.6] {
            let s = data(&mut rng, 8);
            let ctx = EmpiricalMetricContext::new(&s);
            let q_s = QuadraticRisk::from_dataset(&s);
            let part = IndicatorPartition::build(&v, eps, &q_s, 10_000).unwrap();
            let pred = |set: &[usize]| crate::domain::Predictor::member(v.member_values(set)).unwrap();
            let centers: Vec<_> = part.centers.iter().map(|c| pred(c)).collect();
            for w in &all {
                let m = pred(w);
                let dists: Vec<f64> = centers.iter().map(|c| emp_metric(&m, c, &ctx).unwrap()).collect();
                let min = dists.iter().copied().fold(f64::INFINITY, f64::min);
                assert!(min <= eps + 1e-12, "member {w:?} not covered at eps {eps}");
            }
            // centers are pairwise separated
            for i in 0..centers.len() {
                for j in 0..i {
                    assert!(emp_metric(&centers[i], &centers[j], &ctx).unwrap() > eps);
                }
            }
        }
    }

    #[test]
    fn leaders_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (a, b) in [(0.75, 0.0), (0.25, 0.5)] {
            let v = class(a, b);
            let all = sets(&v);
            for _ in 0..15 {
                let s = data(&mut rng, 8);
                let s_prime = data(&mut rng, 8);
                let q_s = QuadraticRisk::from_dataset(&s);
                let q_p = QuadraticRisk::from_dataset(&s_prime);
                let w = q_s.dense_weights(6);
                let part = IndicatorPartition::build(&v, 0.3, &q_s, 10_000).unwrap();
                let leaders = part.leaders(&v, &q_p).unwrap();
                let mut best = vec![f64::INFINITY; part.n_cells()];
                for set in &all {
                    let cell = (0..part.n_cells()).fold(0, |b, i| {
                        if sym_diff_weight(set, &part.centers[i], &w)
                            < sym_diff_weight(set, &part.centers[b], &w)
                        {
                            i
                        } else {
                            b
                        }
                    });
                    best[cell] = best[cell].min(q_p.risk(&v.member_values(set)));
                }
                for (cell, (_, r)) in leaders.iter().enumerate() {
                    assert!((r - best[cell]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn tiny_amplitude_gives_one_cell() {
        let v = class(0.01, 0.5);
        let d = Dataset::from_slots(&[(0, 1.0), (1, 0.0), (2, 1.0)]).unwrap();
        let part = IndicatorPartition::build(&v, 0.1, &QuadraticRisk::from_dataset(&d), 100).unwrap();
        assert_eq!(part.n_cells(), 1);
        assert_eq!(part.centers[0], Vec::<usize>::new());
    }
}
