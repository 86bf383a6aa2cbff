//! Product-structured backend for box-sequence classes.
//!
//! The class is a product of per-coordinate grids and the empirical metric is
//! a weighted sum over coordinates, so a product of per-coordinate covers of
//! radius epsilon is an epsilon-net, Voronoi cells are products of
//! per-coordinate segments, and least squares over a cell separates by
//! coordinate. Nothing here materializes the (astronomically many) members.

use crate::aggregate::{AggregatorKind, AggregatorSpec};
use crate::domain::{BoxSequence, Predictor};
use crate::empirical::{QuadraticRisk, COVER_TOL};
use crate::error::{Error, Result};

/// Value every coordinate takes when nothing distinguishes the grid points.
const CENTER: f64 = 0.5;

/// Improvement a star mixture must achieve over the ERM to be returned.
const STAR_IMPROVEMENT: f64 = 1e-13;

/// Nearest entry to `target`; ties go to the entry listed first.
fn nearest(values: &[f64], target: f64) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if (v - target).abs() < (values[best] - target).abs() {
            best = i;
        }
    }
    best
}

/// One-dimensional cover of a coordinate grid.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct SlotCover {
    /// Center values, ascending.
    pub centers: Vec<f64>,
    /// Grid values of every segment, in center-out grid order.
    pub segments: Vec<Vec<f64>>,
}

impl SlotCover {
    pub(crate) fn build(grid_center_out: &[f64], epsilon: f64) -> SlotCover {
        let mut sorted: Vec<f64> = grid_center_out.to_vec();
        sorted.sort_by(f64::total_cmp);
        let reach = epsilon + COVER_TOL;
        let mut centers = Vec::new();
        let mut i = 0;
        while i < sorted.len() {
            let mut k = i;
            while k + 1 < sorted.len() && sorted[k + 1] - sorted[i] <= reach {
                k += 1;
            }
            centers.push(sorted[k]);
            i = k + 1;
            while i < sorted.len() && sorted[i] - sorted[k] <= reach {
                i += 1;
            }
        }
        let mut segments = vec![Vec::new(); centers.len()];
        for &v in grid_center_out {
            segments[nearest(&centers, v)].push(v);
        }
        SlotCover { centers, segments }
    }

    /// The whole grid as a single cell around `f = 1/2`.
    fn single(grid_center_out: &[f64]) -> SlotCover {
        SlotCover {
            centers: vec![CENTER],
            segments: vec![grid_center_out.to_vec()],
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.centers.len()
    }
}

/// Per-coordinate value lists whose product is a candidate set. Coordinates
/// not listed carry the single value `1/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductCandidates {
    pub support: usize,
    /// `(slot, values)` sorted by slot.
    pub per_slot: Vec<(usize, Vec<f64>)>,
}

const DEFAULT_LIST: [f64; 1] = [CENTER];

impl ProductCandidates {
    pub fn list(&self, slot: usize) -> &[f64] {
        match self.per_slot.binary_search_by_key(&slot, |(s, _)| *s) {
            Ok(i) => &self.per_slot[i].1,
            Err(_) => &DEFAULT_LIST,
        }
    }

    /// Number of product candidates (saturating).
    pub fn count(&self) -> u64 {
        self.per_slot
            .iter()
            .fold(1u64, |acc, (_, l)| acc.saturating_mul(l.len() as u64))
    }

    fn table(&self, pick: impl Fn(usize, &[f64]) -> f64) -> Vec<f64> {
        let mut out = vec![CENTER; self.support];
        for (slot, list) in &self.per_slot {
            out[*slot] = pick(*slot, list);
        }
        out
    }

    /// Every candidate as an explicit predictor, first listed slot most
    /// significant. Only for small products (tests and cross-checks).
    pub fn expand(&self) -> Vec<Predictor> {
        let mut out = vec![vec![CENTER; self.support]];
        for (slot, list) in &self.per_slot {
            out = out
                .into_iter()
                .flat_map(|t| {
                    list.iter().map(move |&v| {
                        let mut t = t.clone();
                        t[*slot] = v;
                        t
                    })
                })
                .collect();
        }
        out.into_iter().map(|t| Predictor::Member(t.into())).collect()
    }
}

fn check_support(c: &ProductCandidates, q: &QuadraticRisk) -> Result<()> {
    if q.min_support() > c.support {
        return Err(Error::UnknownDesignPoint {
            index: q.min_support(),
            support: c.support,
        });
    }
    Ok(())
}

/// Coordinatewise least squares over the product: the lowest-index minimizer
/// of the separable risk.
pub fn product_erm(c: &ProductCandidates, q: &QuadraticRisk) -> Result<Vec<f64>> {
    check_support(c, q)?;
    let mut table = c.table(|_, list| list[0]);
    for t in q.terms() {
        let list = c.list(t.slot);
        table[t.slot] = list[nearest(list, t.target)];
    }
    Ok(table)
}

struct StarSlot {
    weight: f64,
    u: f64,
    deltas: Vec<f64>,
    choice: usize,
}

impl StarSlot {
    fn cost(&self, c: usize, lambda: f64) -> f64 {
        let r = lambda * self.deltas[c] - self.u;
        r * r
    }

    fn best_at(&self, lambda: f64) -> usize {
        let mut best = 0;
        for c in 1..self.deltas.len() {
            if self.cost(c, lambda) < self.cost(best, lambda) {
                best = c;
            }
        }
        best
    }

    /// Contribution `(A, B, C)` to `A l^2 - 2 B l + C` for the current choice.
    fn coefficients(&self) -> (f64, f64, f64) {
        let d = self.deltas[self.choice];
        (
            self.weight * d * d,
            self.weight * d * self.u,
            self.weight * self.u * self.u,
        )
    }
}

/// Exact star aggregate over a product candidate set.
///
/// With `f` the coordinatewise ERM, the star objective
/// `min_{l, g} R((1-l) f + l g)` separates into
/// `sum_j w_j min_c (l delta_{j,c} - u_j)^2`; it is piecewise quadratic in `l`
/// with breakpoints `2 u_j / (delta_{j,c} + delta_{j,c'})`, and is minimized
/// exactly by sweeping the pieces.
pub fn product_star(c: &ProductCandidates, q: &QuadraticRisk) -> Result<Predictor> {
    let hat = product_erm(c, q)?;
    let mut slots: Vec<StarSlot> = Vec::new();
    let mut events: Vec<(f64, usize)> = Vec::new();
    for t in q.terms() {
        let list = c.list(t.slot);
        if list.len() < 2 {
            continue;
        }
        let u = t.target - hat[t.slot];
        let deltas: Vec<f64> = list.iter().map(|v| v - hat[t.slot]).collect();
        let idx = slots.len();
        for a in 0..deltas.len() {
            for b in a + 1..deltas.len() {
                let s = deltas[a] + deltas[b];
                if s != 0.0 && deltas[a] != deltas[b] {
                    let l = 2.0 * u / s;
                    if l > 0.0 && l < 1.0 {
                        events.push((l, idx));
                    }
                }
            }
        }
        slots.push(StarSlot {
            weight: t.weight,
            u,
            deltas,
            choice: 0,
        });
    }
    if slots.is_empty() {
        return Ok(Predictor::Member(hat.into()));
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut bounds: Vec<f64> = vec![0.0];
    bounds.extend(events.iter().map(|e| e.0));
    bounds.push(1.0);
    bounds.dedup();

    let first_hi = bounds[1];
    let (mut a, mut b, mut cc) = (0.0, 0.0, 0.0);
    for s in slots.iter_mut() {
        s.choice = s.best_at(0.5 * first_hi);
        let (x, y, z) = s.coefficients();
        a += x;
        b += y;
        cc += z;
    }
    let mut best: Option<(f64, f64)> = None;
    let mut e = 0;
    for w in bounds.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        // slots whose envelope switched at `lo`
        while e < events.len() && events[e].0 <= lo {
            let s = &mut slots[events[e].1];
            let mid = 0.5 * (lo + hi);
            let choice = s.best_at(mid);
            if choice != s.choice {
                let (x, y, z) = s.coefficients();
                s.choice = choice;
                let (x2, y2, z2) = s.coefficients();
                a += x2 - x;
                b += y2 - y;
                cc += z2 - z;
            }
            e += 1;
        }
        let l = if a > 0.0 { (b / a).clamp(lo, hi) } else { lo };
        let value = a * l * l - 2.0 * b * l + cc;
        if best.map_or(true, |(_, v)| value < v) {
            best = Some((l, value));
        }
    }
    let (lambda, _) = best.expect("at least one interval");
    if lambda <= 0.0 {
        return Ok(Predictor::Member(hat.into()));
    }

    let mut g = hat.clone();
    let mut k = 0;
    for t in q.terms() {
        let list = c.list(t.slot);
        if list.len() < 2 {
            continue;
        }
        g[t.slot] = list[slots[k].best_at(lambda)];
        k += 1;
    }
    let mixed: Vec<f64> = hat
        .iter()
        .zip(&g)
        .map(|(h, v)| (1.0 - lambda) * h + lambda * v)
        .collect();
    if q.risk(&mixed) < q.risk(&hat) - STAR_IMPROVEMENT {
        let hat = Predictor::Member(hat.into());
        let g = Predictor::Member(g.into());
        if lambda >= 1.0 {
            return Ok(g);
        }
        Predictor::mixture(vec![hat, g], vec![1.0 - lambda, lambda])
    } else {
        Ok(Predictor::Member(hat.into()))
    }
}

/// Exponential weights over a product, in closed form: the softmax of
/// `-beta * n * R(g)` factorizes into per-coordinate softmaxes of
/// `-beta * count_j * (v - t_j)^2`.
pub fn product_ew(c: &ProductCandidates, q: &QuadraticRisk, beta: f64) -> Result<Predictor> {
    check_support(c, q)?;
    if !(beta > 0.0) {
        return Err(Error::invalid("temperature must be positive"));
    }
    let mut table = c.table(|_, list| list.iter().sum::<f64>() / list.len() as f64);
    for t in q.terms() {
        let list = c.list(t.slot);
        let scores: Vec<f64> = list
            .iter()
            .map(|v| -beta * t.count as f64 * (v - t.target).powi(2))
            .collect();
        let top = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = scores.iter().map(|s| (s - top).exp()).collect();
        let total: f64 = w.iter().sum();
        let v = list.iter().zip(&w).map(|(v, w)| v * w).sum::<f64>() / total;
        table[t.slot] = v.clamp(0.0, 1.0);
    }
    Predictor::member(table)
}

pub fn product_aggregate(
    spec: &AggregatorSpec,
    c: &ProductCandidates,
    q: &QuadraticRisk,
) -> Result<Predictor> {
    spec.validate()?;
    match spec.kind {
        AggregatorKind::Star => product_star(c, q),
        AggregatorKind::ExpWeights => product_ew(c, q, spec.temperature),
    }
}

/// Net, Voronoi cells and cell leaders of a box class.
#[derive(Debug, Clone)]
pub(crate) struct BoxPartition {
    pub class: BoxSequence,
    /// Covers of the coordinates observed in `S`; all others form one cell.
    pub covers: Vec<(usize, SlotCover)>,
}

impl BoxPartition {
    pub(crate) fn build(class: &BoxSequence, epsilon: f64, q_s: &QuadraticRisk) -> Result<Self> {
        class.validate()?;
        if q_s.min_support() > class.truncation {
            return Err(Error::UnknownDesignPoint {
                index: q_s.min_support(),
                support: class.truncation,
            });
        }
        let covers = q_s
            .terms()
            .iter()
            .map(|t| (t.slot, SlotCover::build(&class.grid_values(t.slot), epsilon)))
            .collect();
        Ok(BoxPartition {
            class: class.clone(),
            covers,
        })
    }

    pub(crate) fn n_cells(&self) -> u64 {
        self.covers
            .iter()
            .fold(1u64, |acc, (_, c)| acc.saturating_mul(c.len() as u64))
    }

    fn cover(&self, slot: usize) -> Option<&SlotCover> {
        self.covers
            .binary_search_by_key(&slot, |(s, _)| *s)
            .ok()
            .map(|i| &self.covers[i].1)
    }

    /// Net centers as a product candidate set.
    pub(crate) fn centers(&self) -> ProductCandidates {
        ProductCandidates {
            support: self.class.truncation,
            per_slot: self
                .covers
                .iter()
                .filter(|(_, c)| c.len() > 1)
                .map(|(s, c)| (*s, c.centers.clone()))
                .collect(),
        }
    }

    /// Least-squares leader of every cell on `S'`, as a product set.
    pub(crate) fn leaders(&self, q_prime: &QuadraticRisk) -> Result<ProductCandidates> {
        if q_prime.min_support() > self.class.truncation {
            return Err(Error::UnknownDesignPoint {
                index: q_prime.min_support(),
                support: self.class.truncation,
            });
        }
        let targets = q_prime.terms();
        let target_of = |slot: usize| {
            targets
                .binary_search_by_key(&slot, |t| t.slot)
                .ok()
                .map(|i| targets[i].target)
        };
        let mut slots: Vec<usize> = self
            .covers
            .iter()
            .map(|(s, _)| *s)
            .chain(targets.iter().map(|t| t.slot))
            .collect();
        slots.sort_unstable();
        slots.dedup();
        let mut per_slot = Vec::new();
        for slot in slots {
            let owned;
            let cover = match self.cover(slot) {
                Some(c) => c,
                None => {
                    owned = SlotCover::single(&self.class.grid_values(slot));
                    &owned
                }
            };
            let list: Vec<f64> = cover
                .segments
                .iter()
                .map(|seg| match target_of(slot) {
                    Some(t) => seg[nearest(seg, t)],
                    None => seg[0],
                })
                .collect();
            if list != [CENTER] {
                per_slot.push((slot, list));
            }
        }
        Ok(ProductCandidates {
            support: self.class.truncation,
            per_slot,
        })
    }
}

/// Coordinatewise least squares over the full grid of a box class.
pub(crate) fn box_erm(class: &BoxSequence, q: &QuadraticRisk) -> Result<Vec<f64>> {
    class.validate()?;
    let full = ProductCandidates {
        support: class.truncation,
        per_slot: q
            .terms()
            .iter()
            .filter(|t| t.slot < class.truncation)
            .map(|t| (t.slot, class.grid_values(t.slot)))
            .collect(),
    };
    product_erm(&full, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregate::{ew_aggregate, star_aggregate};
    use crate::domain::{enumerate_members, Dataset, FunctionSpec};
    use crate::empirical::{emp_metric, EmpiricalMetricContext};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_data(rng: &mut ChaCha8Rng, k: usize, n: usize) -> Dataset {
        let pairs: Vec<(usize, f64)> = (0..n)
            .map(|_| (rng.gen_range(0..k), if rng.gen::<f64>() < 0.6 { 1.0 } else { 0.0 }))
            .collect();
        Dataset::from_slots(&pairs).unwrap()
    }

    fn small_box() -> BoxSequence {
        BoxSequence {
            p: 2.0,
            truncation: 3,
            grid_step: 0.25,
        }
    }

    #[test]
    fn slot_cover_is_proper_and_covering() {
        let b = small_box();
        for eps in [0.05, 0.13, 0.3, 2.0] {
            let grid = b.grid_values(0);
            let cover = SlotCover::build(&grid, eps);
            for c in &cover.centers {
                assert!(grid.contains(c));
            }
            for (seg, c) in cover.segments.iter().zip(&cover.centers) {
                for v in seg {
                    assert!((v - c).abs() <= eps + COVER_TOL);
                }
            }
            assert_eq!(cover.segments.iter().map(Vec::len).sum::<usize>(), grid.len());
        }
    }

    #[test]
    fn product_net_covers_enumerated_class() {
        let b = small_box();
        let spec = FunctionSpec::BoxSequence(b.clone());
        let members = enumerate_members(&spec, 10_000).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = random_data(&mut rng, 3, 12);
        let ctx = EmpiricalMetricContext::new(&d);
        let part = BoxPartition::build(&b, 0.2, &QuadraticRisk::from_dataset(&d)).unwrap();
        let centers = part.centers().expand();
        assert_eq!(centers.len() as u64, part.n_cells());
        for m in &members {
            let nearest = centers
                .iter()
                .map(|c| emp_metric(m, c, &ctx).unwrap())
                .fold(f64::INFINITY, f64::min);
            assert!(nearest <= 0.2 + 1e-12);
        }
    }

    #[test]
    fn single_cell_matches_explicit_erm() {
        let b = small_box();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = random_data(&mut rng, 3, 30);
        let q = QuadraticRisk::from_dataset(&d);
        let erm = box_erm(&b, &q).unwrap();
        let members = enumerate_members(&FunctionSpec::BoxSequence(b), 10_000).unwrap();
        let brute = members
            .iter()
            .map(|m| q.risk(&m.values()))
            .fold(f64::INFINITY, f64::min);
        assert!((q.risk(&erm) - brute).abs() < 1e-14);
    }

    #[test]
    fn cell_leaders_match_brute_force() {
        let b = small_box();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..5 {
            let s = random_data(&mut rng, 3, 9);
            let s_prime = random_data(&mut rng, 3, 9 + trial);
            let ctx = EmpiricalMetricContext::new(&s);
            let q_s = QuadraticRisk::from_dataset(&s);
            let q_p = QuadraticRisk::from_dataset(&s_prime);
            let part = BoxPartition::build(&b, 0.2, &q_s).unwrap();
            let centers = part.centers().expand();
            let leaders = part.leaders(&q_p).unwrap().expand();
            assert_eq!(centers.len(), leaders.len());
            let members = enumerate_members(&FunctionSpec::BoxSequence(b.clone()), 10_000).unwrap();
            // brute force: assign each member to its nearest product center
            let mut best = vec![f64::INFINITY; centers.len()];
            for m in &members {
                let dists: Vec<f64> = centers
                    .iter()
                    .map(|c| emp_metric(m, c, &ctx).unwrap())
                    .collect();
                let min = dists.iter().copied().fold(f64::INFINITY, f64::min);
                let cell = dists.iter().position(|&x| x == min).unwrap();
                best[cell] = best[cell].min(q_p.risk(&m.values()));
            }
            for (cell, leader) in leaders.iter().enumerate() {
                assert!((q_p.risk(&leader.values()) - best[cell]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn product_star_matches_explicit_star() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..40 {
            let per_slot: Vec<(usize, Vec<f64>)> = (0..3)
                .map(|s| (s, (0..rng.gen_range(1..4)).map(|_| rng.gen::<f64>()).collect()))
                .collect();
            let c = ProductCandidates {
                support: 4,
                per_slot,
            };
            let d = random_data(&mut rng, 4, 15);
            let q = QuadraticRisk::from_dataset(&d);
            let fast = product_star(&c, &q).unwrap();
            let explicit = star_aggregate(&c.expand(), &d).unwrap();
            assert!((q.risk(&fast.values()) - q.risk(&explicit.values())).abs() < 1e-12);
            let erm = product_erm(&c, &q).unwrap();
            assert!(q.risk(&fast.values()) <= q.risk(&erm));
        }
    }

    #[test]
    fn product_ew_matches_explicit_ew() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let per_slot: Vec<(usize, Vec<f64>)> = (0..3)
                .map(|s| (s, (0..rng.gen_range(1..4)).map(|_| rng.gen::<f64>()).collect()))
                .collect();
            let c = ProductCandidates {
                support: 4,
                per_slot,
            };
            let d = random_data(&mut rng, 4, 15);
            let q = QuadraticRisk::from_dataset(&d);
            let fast = product_ew(&c, &q, 4.0).unwrap().values();
            let explicit = ew_aggregate(&c.expand(), &d, 4.0).unwrap().values();
            for (a, b) in fast.iter().zip(&explicit) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
