//! Discrete data-generating distributions with exact risk oracles, including
//! the lower-bound constructions (indicator packings, hypercubes) and
//! misspecified variants.

use std::sync::OnceLock;

use itertools::Itertools;
use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{
    binomial, BoxSequence, Dataset, DictionaryHull, FiniteList, FunctionSpec, LabeledPair,
    PointIndex, Predictor, VcIndicator,
};
use crate::empirical::QuadraticRisk;
use crate::error::{Error, Result};
use crate::estimators::sparsity_patterns;
use crate::solvers::simplex_least_squares;

/// Above this many candidate vectors the packing samples instead of enumerating.
const PACKING_ENUMERATION_LIMIT: u128 = 1_000_000;
/// Number of random candidates tried when sampling.
const PACKING_SAMPLES: usize = 4_000;
/// Duality-gap tolerance of the dictionary-hull oracle.
const HULL_ORACLE_TOL: f64 = 1e-8;

/// Minimal integer strictly greater than `x`.
pub fn strict_ceil(x: f64) -> usize {
    x.floor() as usize + 1
}

#[derive(Debug, Clone)]
pub struct World {
    mu: Vec<f64>,
    eta: Vec<f64>,
    class: FunctionSpec,
    /// Fixed comparator replacing the class infimum (regret constructions
    /// compare against a specific member).
    comparator: Option<Vec<f64>>,
    sampler: WeightedIndex<f64>,
    best: OnceLock<std::result::Result<f64, Error>>,
}

impl PartialEq for World {
    fn eq(&self, other: &Self) -> bool {
        self.mu == other.mu
            && self.eta == other.eta
            && self.class == other.class
            && self.comparator == other.comparator
    }
}

impl World {
    pub fn new(mu: Vec<f64>, eta: Vec<f64>, class: FunctionSpec) -> Result<Self> {
        if mu.is_empty() || mu.len() != eta.len() {
            return Err(Error::invalid("mu and eta must have the same non-zero length"));
        }
        if mu.iter().any(|m| !(*m >= 0.0)) {
            return Err(Error::invalid("mu must be non-negative"));
        }
        let total: f64 = mu.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("mu sums to {total}")));
        }
        if eta.iter().any(|e| !(0.0..=1.0).contains(e)) {
            return Err(Error::invalid("eta must take values in [0,1]"));
        }
        class.validate()?;
        if class.support_size() != mu.len() {
            return Err(Error::invalid(format!(
                "class support {} differs from world support {}",
                class.support_size(),
                mu.len()
            )));
        }
        let sampler = WeightedIndex::new(&mu).map_err(|e| Error::invalid(e.to_string()))?;
        Ok(World {
            mu,
            eta,
            class,
            comparator: None,
            sampler,
            best: OnceLock::new(),
        })
    }

    /// Measure excess risk against a fixed comparator instead of the class
    /// infimum.
    pub fn with_comparator(mut self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.mu.len() {
            return Err(Error::invalid("comparator support differs from world support"));
        }
        self.comparator = Some(values);
        self.best = OnceLock::new();
        Ok(self)
    }

    pub fn support_size(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn class(&self) -> &FunctionSpec {
        &self.class
    }

    pub fn comparator(&self) -> Option<&[f64]> {
        self.comparator.as_deref()
    }

    pub fn population(&self) -> QuadraticRisk {
        QuadraticRisk::population(&self.mu, &self.eta)
    }

    /// `L(f) = sum_x mu(x) [(f(x) - eta(x))^2 + eta(x)(1 - eta(x))]`.
    pub fn exact_risk(&self, pred: &Predictor) -> Result<f64> {
        if pred.support_size() < self.support_size() {
            return Err(Error::UnknownDesignPoint {
                index: self.support_size(),
                support: pred.support_size(),
            });
        }
        Ok(self.population().risk(&pred.values()))
    }

    /// `inf_{f in F} L(f)`, or the comparator's risk when one is set.
    pub fn best_risk(&self) -> Result<f64> {
        self.best
            .get_or_init(|| {
                let q = self.population();
                match &self.comparator {
                    Some(c) => Ok(q.risk(c)),
                    None => class_minimizer(&self.class, &q).map(|(_, r)| r),
                }
            })
            .clone()
    }

    pub fn excess_risk(&self, pred: &Predictor) -> Result<f64> {
        Ok(self.exact_risk(pred)? - self.best_risk()?)
    }

    /// `inf_{f in F} ||f - eta||` in `L2(mu)`.
    pub fn misspecification(&self) -> Result<f64> {
        let q = self.population();
        let (_, r) = class_minimizer(&self.class, &q)?;
        Ok((r - q.offset()).max(0.0).sqrt())
    }
}

/// Population minimizer of a class and its risk.
fn class_minimizer(class: &FunctionSpec, q: &QuadraticRisk) -> Result<(Vec<f64>, f64)> {
    let best = match class {
        FunctionSpec::FiniteList(f) => f
            .members
            .iter()
            .map(|m| (m.clone(), q.risk(m)))
            .fold(None::<(Vec<f64>, f64)>, |b, (m, r)| match b {
                Some((_, br)) if br <= r => b,
                _ => Some((m, r)),
            })
            .expect("non-empty class"),
        FunctionSpec::BoxSequence(b) => {
            let mut f = vec![0.5; b.truncation];
            for t in q.terms() {
                let (lo, hi) = b.f_range(t.slot);
                f[t.slot] = t.target.clamp(lo, hi);
            }
            let r = q.risk(&f);
            (f, r)
        }
        FunctionSpec::VcIndicator(v) => {
            let gains: Vec<(usize, f64)> = q
                .terms()
                .iter()
                .map(|t| {
                    let lo = v.baseline - t.target;
                    let hi = lo + v.amplitude;
                    (t.slot, t.weight * (hi * hi - lo * lo))
                })
                .filter(|(_, g)| *g < 0.0)
                .sorted_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
                .take(v.d)
                .collect();
            let set: Vec<usize> = gains.iter().map(|(x, _)| *x).collect();
            let f = v.member_values(&set);
            let r = q.risk(&f);
            (f, r)
        }
        FunctionSpec::DictionaryHull(h) => {
            let mut best: Option<(Vec<f64>, f64)> = None;
            for nu in sparsity_patterns(h, usize::MAX)? {
                let sol = simplex_least_squares(&h.dictionary, &nu, q, HULL_ORACLE_TOL, 100_000)?;
                let mut f = vec![0.0; h.dictionary[0].len()];
                for (&j, &w) in nu.iter().zip(&sol.weights) {
                    for (o, v) in f.iter_mut().zip(&h.dictionary[j]) {
                        *o += w * v;
                    }
                }
                let r = q.risk(&f);
                if best.as_ref().map_or(true, |(_, b)| r < *b) {
                    best = Some((f, r));
                }
            }
            best.expect("at least one pattern")
        }
    };
    Ok(best)
}

/// `n` i.i.d. draws: `x ~ mu`, `y ~ Bernoulli(eta(x))`.
pub fn sample_world<R: Rng + ?Sized>(w: &World, n: usize, rng: &mut R) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::invalid("sample size must be >= 1"));
    }
    let pairs = (0..n)
        .map(|_| {
            let slot = w.sampler.sample(rng);
            let y = if rng.gen::<f64>() < w.eta[slot] { 1.0 } else { 0.0 };
            LabeledPair {
                x: PointIndex::from_slot(slot),
                y,
            }
        })
        .collect();
    Dataset::new(pairs)
}

/// Sparse binary vectors (stored as sorted supports) with pairwise Hamming
/// distance at least `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HammingCode {
    pub k: usize,
    pub d: usize,
    pub sequences: Vec<Vec<usize>>,
    /// Whether `ln |C| >= (d/4) ln(k / (6d))`.
    pub meets_cardinality_bound: bool,
}

impl HammingCode {
    pub fn vector(&self, i: usize) -> Vec<u8> {
        let mut v = vec![0u8; self.k];
        for &x in &self.sequences[i] {
            v[x] = 1;
        }
        v
    }
}

/// Hamming distance between sorted supports.
pub fn hamming(a: &[usize], b: &[usize]) -> usize {
    let common = a.iter().filter(|x| b.binary_search(x).is_ok()).count();
    a.len() + b.len() - 2 * common
}

/// Greedy packing of vectors with at most `d` ones: candidates in
/// cardinality-then-lexicographic order (or a random sample when there are
/// more than a million), kept when at distance `>= d` from everything kept.
pub fn d_selection_pack<R: Rng + ?Sized>(k: usize, d: usize, rng: &mut R) -> Result<HammingCode> {
    if d == 0 || k < 2 * d {
        return Err(Error::invalid(format!("packing needs k >= 2d >= 2 (k={k}, d={d})")));
    }
    let total = (0..=d as u128).fold(0u128, |acc, m| acc.saturating_add(binomial(k as u128, m)));
    let candidates: Box<dyn Iterator<Item = Vec<usize>>> = if total <= PACKING_ENUMERATION_LIMIT {
        Box::new((0..=d).flat_map(move |m| (0..k).combinations(m)))
    } else {
        let mut sample: Vec<Vec<usize>> = vec![Vec::new()];
        let atoms: Vec<usize> = (0..k).collect();
        for _ in 0..PACKING_SAMPLES {
            let mut s: Vec<usize> = atoms.choose_multiple(rng, d).copied().collect();
            s.sort_unstable();
            sample.push(s);
        }
        sample.sort();
        sample.dedup();
        Box::new(sample.into_iter())
    };
    let mut kept: Vec<Vec<usize>> = Vec::new();
    for c in candidates {
        if kept.iter().all(|s| hamming(s, &c) >= d) {
            kept.push(c);
        }
    }
    let bound = (d as f64 / 4.0) * (k as f64 / (6.0 * d as f64)).ln();
    Ok(HammingCode {
        k,
        d,
        meets_cardinality_bound: (kept.len() as f64).ln() >= bound,
        sequences: kept,
    })
}

/// `alpha = (1/16) (d/n) ln((4/3) n / d)` and `k = ceil(d / alpha)` (strict).
pub fn vc_world_size(n: usize, d: usize) -> Result<(f64, usize)> {
    if d == 0 || n < d {
        return Err(Error::invalid(format!("indicator world needs n >= d >= 1 (n={n}, d={d})")));
    }
    let (n, d) = (n as f64, d as f64);
    let alpha = d / (16.0 * n) * ((4.0 / 3.0) * n / d).ln();
    Ok((alpha, strict_ceil(d / alpha)))
}

/// Indicator lower-bound world: uniform design on `k` atoms and
/// `eta = 1/2 + omega/4` for a support `omega` with at most `d` atoms.
///
/// `shifted` selects the reference class: `1/2 + (1/4) 1{W}` (contains every
/// `eta_omega`) or the raw `(3/4) 1{W}`.
pub fn make_vc_world<R: Rng + ?Sized>(
    n: usize,
    d: usize,
    omega: Option<Vec<usize>>,
    shifted: bool,
    rng: &mut R,
) -> Result<World> {
    let (_, k) = vc_world_size(n, d)?;
    let omega = match omega {
        Some(mut w) => {
            w.sort_unstable();
            w.dedup();
            if w.len() > d || w.iter().any(|&x| x >= k) {
                return Err(Error::invalid("omega must pick at most d atoms of the universe"));
            }
            w
        }
        None => {
            let code = d_selection_pack(k, d, rng)?;
            code.sequences
                .choose(rng)
                .expect("packing is never empty")
                .clone()
        }
    };
    let mut eta = vec![0.5; k];
    for &x in &omega {
        eta[x] = 0.75;
    }
    let class = if shifted {
        VcIndicator {
            amplitude: 0.25,
            d,
            universe_size: k,
            baseline: 0.5,
        }
    } else {
        VcIndicator {
            amplitude: 0.75,
            d,
            universe_size: k,
            baseline: 0.0,
        }
    };
    World::new(vec![1.0 / k as f64; k], eta, FunctionSpec::VcIndicator(class))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HypercubeVariant {
    /// Well-specified: `eta = 1/2 + omega_j / (4 d^{1/p})`, `omega in {0,1}^d`.
    Risk,
    /// `eta = 1/2 + omega_j / 4`, `omega in {-1,1}^d`, compared against
    /// `f_omega = 1/2 + omega_j / (4 d^{1/p})`.
    Regret,
}

pub fn hypercube_dimension(n: usize, p: f64, variant: HypercubeVariant) -> Result<usize> {
    let n = n as f64;
    match variant {
        HypercubeVariant::Risk if p > 0.0 => Ok(strict_ceil(n.powf(p / (2.0 + p)))),
        HypercubeVariant::Regret if p >= 2.0 => Ok(2 * strict_ceil(n.powf(p / (p - 1.0)))),
        _ => Err(Error::invalid(format!("invalid exponent p={p} for this hypercube"))),
    }
}

/// Hypercube world on the unit vectors `e_1..e_d` with uniform design.
/// `omega` entries are 0/1 for the risk variant and -1/+1 for regret.
pub fn make_hypercube_world<R: Rng + ?Sized>(
    n: usize,
    p: f64,
    variant: HypercubeVariant,
    omega: Option<Vec<i8>>,
    rng: &mut R,
) -> Result<World> {
    let d = hypercube_dimension(n, p, variant)?;
    let omega = match omega {
        Some(w) => {
            let ok = match variant {
                HypercubeVariant::Risk => w.iter().all(|&x| x == 0 || x == 1),
                HypercubeVariant::Regret => w.iter().all(|&x| x == -1 || x == 1),
            };
            if w.len() != d || !ok {
                return Err(Error::invalid(format!("omega must have {d} admissible entries")));
            }
            w
        }
        None => (0..d)
            .map(|_| match (variant, rng.gen::<bool>()) {
                (HypercubeVariant::Risk, b) => b as i8,
                (HypercubeVariant::Regret, true) => 1,
                (HypercubeVariant::Regret, false) => -1,
            })
            .collect(),
    };
    let amp = 1.0 / (4.0 * (d as f64).powf(1.0 / p));
    let class = FunctionSpec::BoxSequence(BoxSequence {
        p,
        truncation: d,
        grid_step: 2.0 * amp,
    });
    let mu = vec![1.0 / d as f64; d];
    match variant {
        HypercubeVariant::Risk => {
            let eta = omega.iter().map(|&w| 0.5 + w as f64 * amp).collect();
            World::new(mu, eta, class)
        }
        HypercubeVariant::Regret => {
            let eta = omega.iter().map(|&w| 0.5 + w as f64 / 4.0).collect();
            let f_omega = omega.iter().map(|&w| 0.5 + w as f64 * amp).collect();
            World::new(mu, eta, class)?.with_comparator(f_omega)
        }
    }
}

/// Push `eta` away from the class until `inf_f ||f - eta|| = delta`.
///
/// Every atom moves by the same amount `t` away from `1/2` (clipped to
/// `[0,1]`); `t` is found by bisection against the class oracle.
pub fn make_delta_world(delta: f64, base: &World) -> Result<World> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::invalid("delta must lie in [0,1]"));
    }
    if delta == 0.0 {
        return Ok(base.clone());
    }
    let shifted = |t: f64| -> Vec<f64> {
        base.eta
            .iter()
            .map(|&e| {
                let s = if e >= 0.5 { 1.0 } else { -1.0 };
                (e + s * t).clamp(0.0, 1.0)
            })
            .collect()
    };
    let dist = |t: f64| -> Result<f64> {
        World::new(base.mu.clone(), shifted(t), base.class.clone())?.misspecification()
    };
    let max = dist(1.0)?;
    if max < delta {
        return Err(Error::DeltaUnreachable {
            requested: delta,
            max,
        });
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if dist(mid)? < delta {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    World::new(base.mu.clone(), shifted(hi), base.class.clone())
}

/// Finite class of `m` random constants on `k` atoms with a non-constant
/// `eta` whose mean is the constant closest to 1/2: the best member is known
/// and every mixture of members stays a constant, so excess risk is exactly
/// `(c - c*)^2`.
pub fn make_random_constants_world<R: Rng + ?Sized>(
    m: usize,
    k: usize,
    amplitude: f64,
    rng: &mut R,
) -> Result<World> {
    if m == 0 || k < 2 {
        return Err(Error::invalid("need at least one constant and two atoms"));
    }
    let constants: Vec<f64> = (0..m).map(|_| rng.gen::<f64>()).collect();
    let target = constants
        .iter()
        .copied()
        .min_by(|a, b| (a - 0.5).abs().total_cmp(&(b - 0.5).abs()))
        .expect("m >= 1");
    let a = amplitude.min(target).min(1.0 - target);
    // zero-mean pattern under the uniform design
    let eta: Vec<f64> = (0..k)
        .map(|x| {
            let z = if k % 2 == 1 && x == k - 1 {
                0.0
            } else if x % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            target + a * z
        })
        .collect();
    let class = FunctionSpec::FiniteList(FiniteList {
        members: constants.iter().map(|&c| vec![c; k]).collect(),
    });
    World::new(vec![1.0 / k as f64; k], eta, class)
}

/// Single atom with `eta = 1/2 + c / (2 sqrt(n))` and the class `{0, 1}`:
/// the two members' risks differ by `c / sqrt(n)`, the regime in which
/// picking a single member costs order `n^{-1/2}`.
pub fn make_gap_pair_world(n: usize, scale: f64) -> Result<World> {
    if n == 0 || !(scale > 0.0) {
        return Err(Error::invalid("gap pair needs n >= 1 and scale > 0"));
    }
    let eta = (0.5 + scale / (2.0 * (n as f64).sqrt())).min(1.0);
    let class = FunctionSpec::FiniteList(FiniteList {
        members: vec![vec![0.0], vec![1.0]],
    });
    World::new(vec![1.0], vec![eta], class)
}

/// Random dictionary of `m` vectors in `[0.2, 0.8]` on `k` atoms, an
/// `s`-sparse target `f*` and `eta = f* + r` with `r` orthogonal to the
/// constants and to every dictionary element, `max |r| = residual`. The best
/// element of the whole hull is then `f*` itself.
pub fn make_dictionary_world<R: Rng + ?Sized>(
    m: usize,
    k: usize,
    s: usize,
    residual: f64,
    rng: &mut R,
) -> Result<World> {
    if s == 0 || s > m || k <= m + 1 {
        return Err(Error::invalid("dictionary world needs 1 <= s <= m < k - 1"));
    }
    if !(0.0..=0.2).contains(&residual) {
        return Err(Error::invalid("residual must lie in [0, 0.2]"));
    }
    let dictionary: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..k).map(|_| rng.gen_range(0.2..0.8)).collect())
        .collect();
    let support: Vec<usize> = {
        let mut idx: Vec<usize> = (0..m).collect();
        idx.shuffle(rng);
        idx.truncate(s);
        idx
    };
    let raw: Vec<f64> = (0..s).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut target = vec![0.0; k];
    for (&j, &w) in support.iter().zip(&raw) {
        for (t, v) in target.iter_mut().zip(&dictionary[j]) {
            *t += w / total * v;
        }
    }
    // orthonormal basis of span{1, f_1..f_m}
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in std::iter::once(vec![1.0; k]).chain(dictionary.iter().cloned()) {
        let mut u = v;
        for b in &basis {
            let dot: f64 = u.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in u.iter_mut().zip(b) {
                *x -= dot * y;
            }
        }
        let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-10 {
            basis.push(u.into_iter().map(|x| x / norm).collect());
        }
    }
    let mut r: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
    for _ in 0..2 {
        for b in &basis {
            let dot: f64 = r.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in r.iter_mut().zip(b) {
                *x -= dot * y;
            }
        }
    }
    let peak = r.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let scale = if peak > 0.0 { residual / peak } else { 0.0 };
    let eta: Vec<f64> = target
        .iter()
        .zip(&r)
        .map(|(t, x)| (t + scale * x).clamp(0.0, 1.0))
        .collect();
    let class = FunctionSpec::DictionaryHull(DictionaryHull {
        dictionary,
        sparsity: s,
    });
    World::new(vec![1.0 / k as f64; k], eta, class)
}

/// Serializable world description; `realize` builds the world for a given
/// per-block sample size (several constructions scale with `n`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WorldSpec {
    Finite {
        members: Vec<Vec<f64>>,
        mu: Vec<f64>,
        eta: Vec<f64>,
    },
    BoxSequence {
        p: f64,
        eta: Vec<f64>,
        #[serde(default)]
        mu: Option<Vec<f64>>,
    },
    Vc {
        d: usize,
        #[serde(default = "yes")]
        shifted: bool,
        #[serde(default)]
        omega: Option<Vec<usize>>,
    },
    HypercubeRisk {
        p: f64,
        #[serde(default)]
        omega: Option<Vec<i8>>,
    },
    HypercubeRegret {
        p: f64,
        #[serde(default)]
        omega: Option<Vec<i8>>,
    },
    Delta {
        delta: f64,
        base: Box<WorldSpec>,
    },
    RandomConstants {
        #[serde(default = "sixteen")]
        members: usize,
        #[serde(default = "eight")]
        atoms: usize,
        #[serde(default = "amplitude")]
        amplitude: f64,
    },
    GapPair {
        #[serde(default = "one")]
        scale: f64,
    },
    Dictionary {
        m: usize,
        atoms: usize,
        s: usize,
        #[serde(default = "residual")]
        residual: f64,
    },
}

fn yes() -> bool {
    true
}
fn sixteen() -> usize {
    16
}
fn eight() -> usize {
    8
}
fn amplitude() -> f64 {
    0.2
}
fn one() -> f64 {
    1.0
}
fn residual() -> f64 {
    0.15
}

impl WorldSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            WorldSpec::Finite { .. } => "finite",
            WorldSpec::BoxSequence { .. } => "box-sequence",
            WorldSpec::Vc { .. } => "vc",
            WorldSpec::HypercubeRisk { .. } => "hypercube-risk",
            WorldSpec::HypercubeRegret { .. } => "hypercube-regret",
            WorldSpec::Delta { .. } => "delta",
            WorldSpec::RandomConstants { .. } => "random-constants",
            WorldSpec::GapPair { .. } => "gap-pair",
            WorldSpec::Dictionary { .. } => "dictionary",
        }
    }

    /// Build the world used at per-block sample size `n`.
    pub fn realize<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<World> {
        match self {
            WorldSpec::Finite { members, mu, eta } => World::new(
                mu.clone(),
                eta.clone(),
                FunctionSpec::FiniteList(FiniteList {
                    members: members.clone(),
                }),
            ),
            WorldSpec::BoxSequence { p, eta, mu } => {
                let k = eta.len();
                let mu = mu.clone().unwrap_or_else(|| vec![1.0 / k as f64; k]);
                let class = FunctionSpec::BoxSequence(BoxSequence {
                    p: *p,
                    truncation: k,
                    grid_step: 0.05,
                });
                World::new(mu, eta.clone(), class)
            }
            WorldSpec::Vc { d, shifted, omega } => {
                make_vc_world(n, *d, omega.clone(), *shifted, rng)
            }
            WorldSpec::HypercubeRisk { p, omega } => {
                make_hypercube_world(n, *p, HypercubeVariant::Risk, omega.clone(), rng)
            }
            WorldSpec::HypercubeRegret { p, omega } => {
                make_hypercube_world(n, *p, HypercubeVariant::Regret, omega.clone(), rng)
            }
            WorldSpec::Delta { delta, base } => make_delta_world(*delta, &base.realize(n, rng)?),
            WorldSpec::RandomConstants {
                members,
                atoms,
                amplitude,
            } => make_random_constants_world(*members, *atoms, *amplitude, rng),
            WorldSpec::GapPair { scale } => make_gap_pair_world(n, *scale),
            WorldSpec::Dictionary {
                m,
                atoms,
                s,
                residual,
            } => make_dictionary_world(*m, *atoms, *s, *residual, rng),
        }
    }
}
