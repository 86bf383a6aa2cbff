//! Core data types: design points, samples, function classes and predictors.
//!
//! The design space is always a finite set of atoms `1..=K`; a function is
//! stored as its value table over those atoms. Everything here is immutable
//! after construction and cheap to clone (value tables are reference counted).

use std::sync::Arc;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A 1-based atom of the discrete design space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PointIndex(usize);

impl PointIndex {
    pub fn new(index: usize) -> Result<Self> {
        if index == 0 {
            return Err(Error::invalid("point indices start at 1"));
        }
        Ok(PointIndex(index))
    }

    /// Build from a 0-based slot into a value table.
    pub fn from_slot(slot: usize) -> Self {
        PointIndex(slot + 1)
    }

    pub fn get(self) -> usize {
        self.0
    }

    /// 0-based position in value tables.
    pub fn slot(self) -> usize {
        self.0 - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledPair {
    pub x: PointIndex,
    pub y: f64,
}

impl LabeledPair {
    pub fn new(x: PointIndex, y: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&y) {
            return Err(Error::invalid(format!("label {y} outside [0,1]")));
        }
        Ok(LabeledPair { x, y })
    }
}

/// An ordered, non-empty sample. Order is the sampling order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pairs: Vec<LabeledPair>,
}

impl Dataset {
    pub fn new(pairs: Vec<LabeledPair>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::invalid("dataset must be non-empty"));
        }
        Ok(Dataset { pairs })
    }

    /// Convenience constructor from `(0-based slot, label)` pairs.
    pub fn from_slots(pairs: &[(usize, f64)]) -> Result<Self> {
        let pairs = pairs
            .iter()
            .map(|&(slot, y)| LabeledPair::new(PointIndex::from_slot(slot), y))
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(pairs)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[LabeledPair] {
        &self.pairs
    }

    pub fn iter(&self) -> impl Iterator<Item = &LabeledPair> {
        self.pairs.iter()
    }

    /// Largest 0-based slot referenced by the sample.
    pub fn max_slot(&self) -> usize {
        self.pairs.iter().map(|p| p.x.slot()).max().unwrap_or(0)
    }

    fn block(&self, range: std::ops::Range<usize>) -> Dataset {
        Dataset {
            pairs: self.pairs[range].to_vec(),
        }
    }
}

/// The three consecutive blocks S, S', S'' of a sample of size 3n.
#[derive(Debug, Clone, PartialEq)]
pub struct ThreeWaySplit {
    /// Builds the net and the partition.
    pub s: Dataset,
    /// Fits the least-squares leaders inside each cell.
    pub s_prime: Dataset,
    /// Aggregates the leaders.
    pub s_dprime: Dataset,
}

pub fn split_threeway(d: &Dataset) -> Result<ThreeWaySplit> {
    let total = d.len();
    if total % 3 != 0 {
        return Err(Error::NotDivisibleByThree(total));
    }
    let n = total / 3;
    Ok(ThreeWaySplit {
        s: d.block(0..n),
        s_prime: d.block(n..2 * n),
        s_dprime: d.block(2 * n..total),
    })
}

/// A finite class given by explicit value tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteList {
    pub members: Vec<Vec<f64>>,
}

/// Discretized box class `f_j = (1+g_j)/2`, `|g_j| <= j^{-1/p}`.
///
/// Coordinates `j <= truncation` take values on the grid `g = k * grid_step`
/// inside `[-j^{-1/p}, j^{-1/p}]`; the support of the class is `1..=truncation`.
/// Grid values are ordered center-out (`0, -h, +h, -2h, +2h, ...`) so that the
/// lowest-index value on every coordinate is `f_j = 1/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSequence {
    pub p: f64,
    pub truncation: usize,
    pub grid_step: f64,
}

/// Indicator class `f = baseline + amplitude * 1{x in W}` with `|W| <= d`.
///
/// `baseline = 0` is the raw class of the VC lower-bound construction;
/// `baseline = 1/2, amplitude = 1/4` is the shifted family that contains the
/// regression functions of that construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VcIndicator {
    pub amplitude: f64,
    pub d: usize,
    pub universe_size: usize,
    #[serde(default)]
    pub baseline: f64,
}

/// s-sparse convex combinations of a dictionary of M functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DictionaryHull {
    pub dictionary: Vec<Vec<f64>>,
    pub sparsity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case")]
pub enum FunctionSpec {
    FiniteList(FiniteList),
    BoxSequence(BoxSequence),
    VcIndicator(VcIndicator),
    DictionaryHull(DictionaryHull),
}

fn check_unit_table(values: &[f64], what: &str) -> Result<()> {
    if values.is_empty() {
        return Err(Error::invalid(format!("{what}: empty value table")));
    }
    if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::invalid(format!("{what}: value {v} outside [0,1]")));
    }
    Ok(())
}

impl BoxSequence {
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0) {
            return Err(Error::invalid("box sequence needs p > 0"));
        }
        if self.truncation == 0 {
            return Err(Error::invalid("box sequence needs truncation >= 1"));
        }
        if !(self.grid_step > 0.0) {
            return Err(Error::invalid("box sequence needs grid_step > 0"));
        }
        Ok(())
    }

    /// Half-width `j^{-1/p}` of the g-range on 0-based slot `slot`.
    pub fn radius(&self, slot: usize) -> f64 {
        ((slot + 1) as f64).powf(-1.0 / self.p)
    }

    /// Continuous f-range `[1/2 - r/2, 1/2 + r/2]` on a slot.
    pub fn f_range(&self, slot: usize) -> (f64, f64) {
        let r = self.radius(slot);
        (0.5 - 0.5 * r, 0.5 + 0.5 * r)
    }

    /// Number of grid steps `K` with `K * h <= r` on a slot.
    fn half_count(&self, slot: usize) -> usize {
        let r = self.radius(slot);
        (r / self.grid_step + 1e-9).floor() as usize
    }

    /// Grid f-values on a slot in center-out order.
    pub fn grid_values(&self, slot: usize) -> Vec<f64> {
        let k = self.half_count(slot);
        let mut out = Vec::with_capacity(2 * k + 1);
        out.push(0.5);
        for i in 1..=k {
            let g = i as f64 * self.grid_step;
            out.push((1.0 - g) / 2.0);
            out.push((1.0 + g) / 2.0);
        }
        out
    }

    pub fn grid_len(&self, slot: usize) -> usize {
        2 * self.half_count(slot) + 1
    }
}

impl VcIndicator {
    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude > 0.0 && self.amplitude <= 1.0) {
            return Err(Error::invalid("indicator amplitude must lie in (0,1]"));
        }
        if !(0.0..=1.0).contains(&self.baseline) || self.baseline + self.amplitude > 1.0 + 1e-12 {
            return Err(Error::invalid("indicator class must take values in [0,1]"));
        }
        if self.universe_size == 0 {
            return Err(Error::invalid("indicator universe must be non-empty"));
        }
        Ok(())
    }

    /// Value table of `baseline + amplitude * 1{W}`.
    pub fn member_values(&self, set: &[usize]) -> Vec<f64> {
        let mut v = vec![self.baseline; self.universe_size];
        for &x in set {
            v[x] = self.baseline + self.amplitude;
        }
        v
    }
}

impl DictionaryHull {
    pub fn validate(&self) -> Result<()> {
        let m = self.dictionary.len();
        if m == 0 {
            return Err(Error::invalid("dictionary must be non-empty"));
        }
        if self.sparsity == 0 || self.sparsity > m {
            return Err(Error::invalid(format!(
                "sparsity {} must lie in 1..={m}",
                self.sparsity
            )));
        }
        let k = self.dictionary[0].len();
        for f in &self.dictionary {
            check_unit_table(f, "dictionary")?;
            if f.len() != k {
                return Err(Error::invalid("dictionary functions differ in support size"));
            }
        }
        Ok(())
    }

    /// Number of supports `nu` with `1 <= |nu| <= s`.
    pub fn pattern_count(&self) -> u128 {
        let m = self.dictionary.len() as u128;
        (1..=self.sparsity as u128).fold(0u128, |acc, k| acc.saturating_add(binomial(m, k)))
    }
}

impl FunctionSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            FunctionSpec::FiniteList(f) => {
                if f.members.is_empty() {
                    return Err(Error::invalid("finite class must be non-empty"));
                }
                let k = f.members[0].len();
                for m in &f.members {
                    check_unit_table(m, "finite class")?;
                    if m.len() != k {
                        return Err(Error::invalid("finite class members differ in support size"));
                    }
                }
                Ok(())
            }
            FunctionSpec::BoxSequence(b) => b.validate(),
            FunctionSpec::VcIndicator(v) => v.validate(),
            FunctionSpec::DictionaryHull(h) => h.validate(),
        }
    }

    /// Number of atoms the class is defined on.
    pub fn support_size(&self) -> usize {
        match self {
            FunctionSpec::FiniteList(f) => f.members.first().map_or(0, Vec::len),
            FunctionSpec::BoxSequence(b) => b.truncation,
            FunctionSpec::VcIndicator(v) => v.universe_size,
            FunctionSpec::DictionaryHull(h) => h.dictionary.first().map_or(0, Vec::len),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FunctionSpec::FiniteList(_) => "finite-list",
            FunctionSpec::BoxSequence(_) => "box-sequence",
            FunctionSpec::VcIndicator(_) => "vc-indicator",
            FunctionSpec::DictionaryHull(_) => "dictionary-hull",
        }
    }

    /// Number of members `enumerate_members` would produce.
    pub fn member_count(&self) -> Result<u128> {
        match self {
            FunctionSpec::FiniteList(f) => Ok(f.members.len() as u128),
            FunctionSpec::BoxSequence(b) => Ok((0..b.truncation)
                .fold(1u128, |acc, j| acc.saturating_mul(b.grid_len(j) as u128))),
            FunctionSpec::VcIndicator(v) => {
                let k = v.universe_size as u128;
                Ok((0..=v.d.min(v.universe_size) as u128)
                    .fold(0u128, |acc, m| acc.saturating_add(binomial(k, m))))
            }
            FunctionSpec::DictionaryHull(_) => Err(Error::NotEnumerable("dictionary-hull")),
        }
    }
}

pub(crate) fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul(n - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// A function over the design support: a fixed value table or a finite
/// convex mixture of other predictors.
#[derive(Debug, Clone, PartialEq)]
pub enum Predictor {
    Member(Arc<[f64]>),
    Mixture {
        components: Vec<Predictor>,
        weights: Vec<f64>,
    },
}

impl Predictor {
    pub fn member(values: Vec<f64>) -> Result<Self> {
        check_unit_table(&values, "predictor")?;
        Ok(Predictor::Member(values.into()))
    }

    pub fn constant(value: f64, support: usize) -> Result<Self> {
        Predictor::member(vec![value; support])
    }

    /// A convex mixture. Weights must be non-negative and sum to one within 1e-12.
    pub fn mixture(components: Vec<Predictor>, weights: Vec<f64>) -> Result<Self> {
        if components.is_empty() || components.len() != weights.len() {
            return Err(Error::invalid("mixture needs one weight per component"));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::invalid("mixture weights must be non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("mixture weights sum to {total}")));
        }
        let k = components[0].support_size();
        if components.iter().any(|c| c.support_size() != k) {
            return Err(Error::invalid("mixture components differ in support size"));
        }
        Ok(Predictor::Mixture {
            components,
            weights,
        })
    }

    pub fn support_size(&self) -> usize {
        match self {
            Predictor::Member(v) => v.len(),
            Predictor::Mixture { components, .. } => components[0].support_size(),
        }
    }

    pub fn evaluate(&self, x: PointIndex) -> Result<f64> {
        let support = self.support_size();
        if x.slot() >= support {
            return Err(Error::UnknownDesignPoint {
                index: x.get(),
                support,
            });
        }
        Ok(self.value_at(x.slot()))
    }

    /// Value on a 0-based slot already known to lie in the support.
    pub(crate) fn value_at(&self, slot: usize) -> f64 {
        match self {
            Predictor::Member(v) => v[slot],
            Predictor::Mixture {
                components,
                weights,
            } => components
                .iter()
                .zip(weights)
                .map(|(c, w)| w * c.value_at(slot))
                .sum(),
        }
    }

    /// Full value table over the support.
    pub fn values(&self) -> Vec<f64> {
        match self {
            Predictor::Member(v) => v.to_vec(),
            Predictor::Mixture {
                components,
                weights,
            } => {
                let mut out = vec![0.0; self.support_size()];
                for (c, w) in components.iter().zip(weights) {
                    for (o, v) in out.iter_mut().zip(c.values()) {
                        *o += w * v;
                    }
                }
                out
            }
        }
    }

    /// Value table shared without copying when this is already a member.
    pub fn table(&self) -> Arc<[f64]> {
        match self {
            Predictor::Member(v) => Arc::clone(v),
            Predictor::Mixture { .. } => self.values().into(),
        }
    }
}

/// Explicit member list of an enumerable class, in lexicographic order.
///
/// Box sequences enumerate the grid product with the first coordinate most
/// significant and each coordinate in center-out order; indicator classes
/// enumerate supports by cardinality, then lexicographically.
pub fn enumerate_members(spec: &FunctionSpec, budget: usize) -> Result<Vec<Predictor>> {
    spec.validate()?;
    let required = spec.member_count()?;
    if required > budget as u128 {
        return Err(Error::BudgetExceeded {
            required,
            budget: budget as u128,
        });
    }
    match spec {
        FunctionSpec::FiniteList(f) => f
            .members
            .iter()
            .map(|m| Predictor::member(m.clone()))
            .collect(),
        FunctionSpec::BoxSequence(b) => {
            let axes: Vec<Vec<f64>> = (0..b.truncation).map(|j| b.grid_values(j)).collect();
            Ok(axes
                .iter()
                .map(|a| a.iter().copied())
                .multi_cartesian_product()
                .map(|v| Predictor::Member(v.into()))
                .collect())
        }
        FunctionSpec::VcIndicator(v) => {
            let mut out = Vec::with_capacity(required as usize);
            for m in 0..=v.d.min(v.universe_size) {
                for set in (0..v.universe_size).combinations(m) {
                    out.push(Predictor::Member(v.member_values(&set).into()));
                }
            }
            Ok(out)
        }
        FunctionSpec::DictionaryHull(_) => Err(Error::NotEnumerable("dictionary-hull")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: f64) -> Predictor {
        Predictor::constant(v, 4).unwrap()
    }

    #[test]
    fn evaluate_member_and_mixture() {
        let f = Predictor::member(vec![0.1, 0.2, 0.4, 0.9]).unwrap();
        assert_eq!(f.evaluate(PointIndex::new(3).unwrap()).unwrap(), 0.4);

        let mix = Predictor::mixture(vec![c(0.0), c(1.0)], vec![0.7, 0.3]).unwrap();
        for i in 1..=4 {
            let v = mix.evaluate(PointIndex::new(i).unwrap()).unwrap();
            assert!((v - 0.3).abs() < 1e-15);
        }

        let single = Predictor::mixture(vec![f.clone()], vec![1.0]).unwrap();
        assert_eq!(single.values(), f.values());
    }

    #[test]
    fn evaluate_rejects_unknown_point() {
        let f = c(0.5);
        let err = f.evaluate(PointIndex::new(5).unwrap()).unwrap_err();
        assert!(matches!(err, Error::UnknownDesignPoint { index: 5, support: 4 }));
        assert!(err.to_string().contains("unknown design point"));
        assert!(PointIndex::new(0).is_err());
    }

    #[test]
    fn mixture_weights_validated() {
        assert!(Predictor::mixture(vec![c(0.0), c(1.0)], vec![0.5, 0.6]).is_err());
        assert!(Predictor::mixture(vec![c(0.0), c(1.0)], vec![-0.5, 1.5]).is_err());
        assert!(Predictor::mixture(vec![c(0.0)], vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn split_blocks_in_order() {
        let d = Dataset::from_slots(&[(0, 0.0), (1, 0.1), (2, 0.2), (3, 0.3), (4, 0.4), (5, 0.5)])
            .unwrap();
        let s = split_threeway(&d).unwrap();
        let ys = |d: &Dataset| d.iter().map(|p| p.y).collect::<Vec<_>>();
        assert_eq!(ys(&s.s), vec![0.0, 0.1]);
        assert_eq!(ys(&s.s_prime), vec![0.2, 0.3]);
        assert_eq!(ys(&s.s_dprime), vec![0.4, 0.5]);

        let d3 = Dataset::from_slots(&[(0, 1.0), (0, 0.0), (1, 1.0)]).unwrap();
        let s3 = split_threeway(&d3).unwrap();
        assert_eq!((s3.s.len(), s3.s_prime.len(), s3.s_dprime.len()), (1, 1, 1));

        let d7 = Dataset::from_slots(&[(0, 0.0); 7]).unwrap();
        assert_eq!(split_threeway(&d7).unwrap_err(), Error::NotDivisibleByThree(7));
    }

    #[test]
    fn labels_must_be_in_unit_interval() {
        assert!(Dataset::from_slots(&[(0, 1.5)]).is_err());
        assert!(Dataset::new(vec![]).is_err());
    }

    #[test]
    fn enumerate_finite_list_keeps_order() {
        let spec = FunctionSpec::FiniteList(FiniteList {
            members: vec![vec![0.3], vec![0.1], vec![0.2]],
        });
        let m = enumerate_members(&spec, 10).unwrap();
        let vals: Vec<f64> = m.iter().map(|p| p.values()[0]).collect();
        assert_eq!(vals, vec![0.3, 0.1, 0.2]);
    }

    #[test]
    fn enumerate_box_single_coordinate() {
        let spec = FunctionSpec::BoxSequence(BoxSequence {
            p: 2.0,
            truncation: 1,
            grid_step: 1.0,
        });
        let m = enumerate_members(&spec, 10).unwrap();
        let mut vals: Vec<f64> = m.iter().map(|p| p.values()[0]).collect();
        assert_eq!(vals, vec![0.5, 0.0, 1.0]);
        vals.sort_by(f64::total_cmp);
        assert_eq!(vals, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn enumerate_box_budget_reports_count() {
        let spec = FunctionSpec::BoxSequence(BoxSequence {
            p: 2.0,
            truncation: 2,
            grid_step: 0.5,
        });
        // coordinate 1: r=1 -> 5 values; coordinate 2: r=0.707 -> 3 values
        assert_eq!(spec.member_count().unwrap(), 15);
        let err = enumerate_members(&spec, 14).unwrap_err();
        assert_eq!(
            err,
            Error::BudgetExceeded {
                required: 15,
                budget: 14
            }
        );
    }

    #[test]
    fn enumerate_indicator_counts_supports() {
        let spec = FunctionSpec::VcIndicator(VcIndicator {
            amplitude: 0.75,
            d: 1,
            universe_size: 3,
            baseline: 0.0,
        });
        let m = enumerate_members(&spec, 100).unwrap();
        assert_eq!(m.len(), 4);
        assert_eq!(m[0].values(), vec![0.0, 0.0, 0.0]);
        assert_eq!(m[1].values(), vec![0.75, 0.0, 0.0]);
        assert_eq!(m[3].values(), vec![0.0, 0.0, 0.75]);
    }

    #[test]
    fn dictionary_hull_not_enumerable() {
        let spec = FunctionSpec::DictionaryHull(DictionaryHull {
            dictionary: vec![vec![0.0], vec![1.0]],
            sparsity: 1,
        });
        assert!(matches!(
            enumerate_members(&spec, 100),
            Err(Error::NotEnumerable(_))
        ));
    }

    #[test]
    fn binomial_small_values() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(20, 2), 190);
        assert_eq!(binomial(3, 4), 0);
    }
}
