//! Closed-form theoretical quantities: localization radii, entropy integrals,
//! the oracle-inequality remainder and the minimax rate functions.
//!
//! Natural logarithms throughout.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};

/// Constant of the Rademacher route to the localization radius.
pub const RAD_RADIUS_CONSTANT: f64 = 12.0 * 42.0 * 42.0;
/// Constant of the finite-class localization radius.
pub const FINITE_RADIUS_CONSTANT: f64 = 144.0;
/// Constant of the VC-type localization radius `C (v/n) ln(en/v)`.
pub const VC_RADIUS_CONSTANT: f64 = 576.0;
/// Minimal ratio `n / v` for the VC-type radius.
pub const VC_MIN_RATIO: f64 = 2.0;

/// Empirical entropy model `H_2(F, rho)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EntropyModel {
    /// `H = A rho^{-p}`.
    Poly { a: f64, p: f64 },
    /// `N <= max(1, (A/rho)^v)`.
    Vc { a: f64, v: f64 },
    /// `H = ln M`.
    Finite { m: f64 },
}

impl EntropyModel {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            EntropyModel::Poly { a, p } => a > 0.0 && p > 0.0 && a.is_finite() && p.is_finite(),
            EntropyModel::Vc { a, v } => a > 0.0 && v > 0.0 && a.is_finite() && v.is_finite(),
            EntropyModel::Finite { m } => m >= 2.0 && m.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid entropy model {self:?}")))
        }
    }

    /// `H_2(F, rho)`.
    pub fn entropy(&self, rho: f64) -> f64 {
        match *self {
            EntropyModel::Poly { a, p } => a * rho.powf(-p),
            EntropyModel::Vc { a, v } => v * (a / rho).ln().max(0.0),
            EntropyModel::Finite { m } => m.ln(),
        }
    }

    /// `int_lo^hi sqrt(H(rho)) d rho` in closed form.
    pub fn entropy_integral(&self, lo: f64, hi: f64) -> Result<f64> {
        self.validate()?;
        if !(lo >= 0.0) || !(hi >= lo) {
            return Err(Error::invalid(format!("invalid integration range [{lo}, {hi}]")));
        }
        if hi == lo {
            return Ok(0.0);
        }
        Ok(match *self {
            EntropyModel::Finite { m } => (hi - lo) * m.ln().sqrt(),
            EntropyModel::Poly { a, p } => {
                let e = 1.0 - p / 2.0;
                if lo == 0.0 && e <= 0.0 {
                    return Err(Error::DivergentIntegral);
                }
                if e == 0.0 {
                    a.sqrt() * (hi / lo).ln()
                } else {
                    a.sqrt() * (hi.powf(e) - lo.powf(e)) / e
                }
            }
            EntropyModel::Vc { a, v } => {
                // rho = A e^{-u}: integral = A sqrt(v) [G(u(hi)) - G(u(lo))],
                // G the upper incomplete gamma function of order 3/2
                let hi = hi.min(a);
                if hi <= lo {
                    return Ok(0.0);
                }
                let u_hi = (a / hi).ln();
                let g_lo = if lo == 0.0 {
                    0.0
                } else {
                    upper_gamma_three_halves((a / lo).ln())
                };
                a * v.sqrt() * (upper_gamma_three_halves(u_hi) - g_lo)
            }
        })
    }
}

/// `Gamma(3/2, x) = sqrt(x) e^{-x} + (sqrt(pi)/2) erfc(sqrt(x))`.
fn upper_gamma_three_halves(x: f64) -> f64 {
    let s = x.max(0.0).sqrt();
    s * (-x).exp() + 0.5 * std::f64::consts::PI.sqrt() * libm::erfc(s)
}

/// What the localization radius is computed from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "from", rename_all = "kebab-case")]
pub enum RadiusSource {
    /// A Rademacher-average estimate.
    Rademacher { rad: f64 },
    Model { model: EntropyModel },
}

/// Localization radius `r*`:
/// `12 * 42^2 ln^3(64 n) Rad^2`, `C (v/n) ln(en/v)` or `144 ln M / n`.
pub fn loc_radius(source: &RadiusSource, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::invalid("localization radius needs n >= 2"));
    }
    let nf = n as f64;
    match *source {
        RadiusSource::Rademacher { rad } => {
            if !(rad >= 0.0) {
                return Err(Error::invalid("Rademacher average must be non-negative"));
            }
            Ok(RAD_RADIUS_CONSTANT * (64.0 * nf).ln().powi(3) * rad * rad)
        }
        RadiusSource::Model { model } => {
            model.validate()?;
            match model {
                EntropyModel::Finite { m } => Ok(FINITE_RADIUS_CONSTANT * m.ln() / nf),
                EntropyModel::Vc { v, .. } => {
                    if nf < VC_MIN_RATIO * v {
                        return Err(Error::invalid(format!(
                            "VC radius needs n >= {VC_MIN_RATIO} v (n={n}, v={v})"
                        )));
                    }
                    Ok(VC_RADIUS_CONSTANT * v / nf * (std::f64::consts::E * nf / v).ln())
                }
                EntropyModel::Poly { .. } => Err(Error::invalid(
                    "polynomial entropy has no closed-form radius; pass a Rademacher estimate",
                )),
            }
        }
    }
}

/// `4 alpha + (12 / sqrt n) int_alpha^1 sqrt(H)`.
pub fn dudley_bound(model: &EntropyModel, n: usize, alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha) || n == 0 {
        return Err(Error::invalid("dudley bound needs alpha in [0,1] and n >= 1"));
    }
    Ok(4.0 * alpha + 12.0 / (n as f64).sqrt() * model.entropy_integral(alpha, 1.0)?)
}

/// Scale balancing the two terms of the Dudley bound for polynomial entropy
/// with `p > 2`: `alpha = n^{-1/p}`.
pub fn dudley_alpha(model: &EntropyModel, n: usize) -> Result<f64> {
    match *model {
        EntropyModel::Poly { p, .. } if p > 2.0 && n >= 1 => Ok((n as f64).powf(-1.0 / p)),
        _ => Err(Error::invalid("closed-form alpha exists for polynomial entropy with p > 2")),
    }
}

/// Exact minimizer and value of the Dudley bound over `alpha in [0,1]`. The
/// bracket is convex in `alpha`, so the stationary point `H(alpha) = n/9`
/// (when it exists) is the minimum, otherwise an endpoint.
pub fn dudley_inf(model: &EntropyModel, n: usize) -> Result<(f64, f64)> {
    model.validate()?;
    let nf = n as f64;
    let mut candidates = vec![1.0];
    match *model {
        EntropyModel::Poly { a, p } => candidates.push((9.0 * a / nf).powf(1.0 / p).min(1.0)),
        EntropyModel::Vc { a, v } => candidates.push((a * (-nf / (9.0 * v)).exp()).min(1.0)),
        EntropyModel::Finite { .. } => candidates.push(0.0),
    }
    let mut best: Option<(f64, f64)> = None;
    for alpha in candidates {
        match dudley_bound(model, n, alpha) {
            Ok(v) if best.map_or(true, |(_, b)| v < b) => best = Some((alpha, v)),
            Ok(_) | Err(Error::DivergentIntegral) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(best.expect("alpha = 1 always converges"))
}

/// Inputs of the oracle-inequality remainder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub n: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub r_star: f64,
    /// Multiplier of the entropy-integral upper limit.
    #[serde(default = "unit")]
    pub c: f64,
}

fn unit() -> f64 {
    1.0
}

impl BoundInputs {
    pub fn new(n: usize, epsilon: f64, delta: f64, r_star: f64) -> Self {
        BoundInputs {
            n,
            epsilon,
            delta,
            r_star,
            c: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 5 {
            return Err(Error::invalid("bounds assume n >= 5"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::invalid("delta must lie in (0,1)"));
        }
        if !(self.epsilon >= 0.0 && self.r_star >= 0.0 && self.c > 0.0) {
            return Err(Error::invalid("epsilon, r* must be >= 0 and c > 0"));
        }
        Ok(())
    }

    /// `(ln(1/delta) + ln ln n) / n`.
    pub fn beta(&self) -> f64 {
        let n = self.n as f64;
        ((1.0 / self.delta).ln() + n.ln().ln()) / n
    }

    /// `sqrt(eps^2 + r* + beta)`.
    pub fn gamma(&self) -> f64 {
        (self.epsilon * self.epsilon + self.r_star + self.beta()).sqrt()
    }
}

/// `gamma sqrt(r*) + (1/sqrt n) int_0^{C gamma} sqrt(H)`; for polynomial
/// entropy with `p >= 2` the integral starts at `1/n`.
pub fn xi_bound(model: &EntropyModel, inputs: &BoundInputs) -> Result<f64> {
    model.validate()?;
    inputs.validate()?;
    let n = inputs.n as f64;
    let gamma = inputs.gamma();
    let lo = match *model {
        EntropyModel::Poly { p, .. } if p >= 2.0 => 1.0 / n,
        _ => 0.0,
    };
    let hi = inputs.c * gamma;
    let integral = if hi > lo {
        model.entropy_integral(lo, hi)?
    } else {
        0.0
    };
    Ok(gamma * inputs.r_star.sqrt() + integral / n.sqrt())
}

/// `(s/n) ln(eM/s) ∧ sqrt(ln(1 + M/sqrt n) / n) ∧ 1`.
pub fn psi_nms(n: usize, m: usize, s: usize) -> Result<f64> {
    if n == 0 || s == 0 || s > m {
        return Err(Error::invalid(format!("psi needs n >= 1 and 1 <= s <= M (s={s}, M={m})")));
    }
    let (n, m, s) = (n as f64, m as f64, s as f64);
    let sparse = s / n * (std::f64::consts::E * m / s).ln();
    let convex = ((1.0 + m / n.sqrt()).ln() / n).sqrt();
    Ok(sparse.min(convex).min(1.0))
}

/// `m/n ∧ sqrt(ln(1 + m/sqrt n) / n)`.
pub fn tilde_psi(m: usize, n: usize) -> Result<f64> {
    if m == 0 || n == 0 {
        return Err(Error::invalid("tilde psi needs m, n >= 1"));
    }
    let (m, n) = (m as f64, n as f64);
    Ok((m / n).min(((1.0 + m / n.sqrt()).ln() / n).sqrt()))
}

/// `n^{-e}`, snapped to `1/k` when that is an integer reciprocal so that
/// breakpoints such as `4096^{-1/3} = 1/16` come out exact.
fn snapped_pow(n: f64, e: f64) -> f64 {
    let x = n.powf(-e);
    let k = (1.0 / x).round();
    if k >= 1.0 && ((1.0 / x) - k).abs() <= 1e-9 * k {
        1.0 / k
    } else {
        x
    }
}

/// Adaptive rate under misspecification `Delta^2` for `p > 2`:
/// `n^{-2/(2+p)}`, then `Delta^2`, then `n^{-1/p}`.
pub fn barpsi(n: usize, p: f64, delta2: f64) -> Result<f64> {
    if !(p > 2.0) {
        return Err(Error::invalid("the adaptive rate is defined for p > 2"));
    }
    if !(0.0..=1.0).contains(&delta2) || n == 0 {
        return Err(Error::invalid("need n >= 1 and Delta^2 in [0,1]"));
    }
    let (low, high) = barpsi_breakpoints(n, p);
    Ok(delta2.clamp(low, high))
}

/// `(n^{-2/(2+p)}, n^{-1/p})`.
pub fn barpsi_breakpoints(n: usize, p: f64) -> (f64, f64) {
    let n = n as f64;
    (snapped_pow(n, 2.0 / (2.0 + p)), snapped_pow(n, 1.0 / p))
}

/// Regimes with a known polynomial rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "setting", rename_all = "kebab-case")]
pub enum Setting {
    RegretPoly { p: f64 },
    RiskPoly { p: f64 },
    Vc,
    FiniteAggregate,
    FiniteErm,
    SkeletonPoly { p: f64 },
    RegretLower { p: f64 },
}

/// Exponent `a` of the rate `n^a` (up to logarithms).
pub fn rate_exponent(setting: &Setting) -> Result<f64> {
    let positive = |p: f64| {
        if p > 0.0 && p.is_finite() {
            Ok(p)
        } else {
            Err(Error::invalid(format!("entropy exponent must be positive, got {p}")))
        }
    };
    match *setting {
        Setting::RegretPoly { p } => {
            let p = positive(p)?;
            Ok(if p <= 2.0 { -2.0 / (2.0 + p) } else { -1.0 / p })
        }
        Setting::RiskPoly { p } => Ok(-2.0 / (2.0 + positive(p)?)),
        Setting::Vc | Setting::FiniteAggregate => Ok(-1.0),
        Setting::FiniteErm => Ok(-0.5),
        Setting::SkeletonPoly { p } => Ok(-1.0 / (positive(p)? + 1.0)),
        Setting::RegretLower { p } => {
            if p >= 2.0 && p.is_finite() {
                Ok(-1.0 / (p - 1.0))
            } else {
                Err(Error::invalid("the regret lower bound needs p >= 2"))
            }
        }
    }
}

/// One bound evaluation, as accepted by the `bounds` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case")]
pub enum BoundQuery {
    PsiNms { n: usize, m: usize, s: usize },
    TildePsi { m: usize, n: usize },
    Barpsi { n: usize, p: f64, delta2: f64 },
    LocRadius { source: RadiusSource, n: usize },
    Dudley {
        model: EntropyModel,
        n: usize,
        #[serde(default)]
        alpha: Option<f64>,
    },
    Xi { model: EntropyModel, inputs: BoundInputs },
    RateExponent { setting: Setting },
}

impl BoundQuery {
    pub fn evaluate(&self) -> Result<Value> {
        Ok(match self {
            BoundQuery::PsiNms { n, m, s } => json!({ "psi_nms": psi_nms(*n, *m, *s)? }),
            BoundQuery::TildePsi { m, n } => json!({ "tilde_psi": tilde_psi(*m, *n)? }),
            BoundQuery::Barpsi { n, p, delta2 } => {
                let (low, high) = barpsi_breakpoints(*n, *p);
                json!({ "barpsi": barpsi(*n, *p, *delta2)?, "breakpoints": [low, high] })
            }
            BoundQuery::LocRadius { source, n } => json!({ "r_star": loc_radius(source, *n)? }),
            BoundQuery::Dudley { model, n, alpha } => match alpha {
                Some(a) => json!({ "alpha": a, "dudley": dudley_bound(model, *n, *a)? }),
                None => {
                    let (a, v) = dudley_inf(model, *n)?;
                    json!({ "alpha": a, "dudley": v })
                }
            },
            BoundQuery::Xi { model, inputs } => json!({
                "xi": xi_bound(model, inputs)?,
                "beta": inputs.beta(),
                "gamma": inputs.gamma(),
            }),
            BoundQuery::RateExponent { setting } => {
                json!({ "rate_exponent": rate_exponent(setting)? })
            }
        })
    }
}

/// Evaluate a single query object or an array of them.
pub fn evaluate_queries(query: &Value) -> Result<Value> {
    let parse = |v: &Value| {
        serde_json::from_value::<BoundQuery>(v.clone()).map_err(|e| Error::Config(e.to_string()))
    };
    match query {
        Value::Array(items) => Ok(Value::Array(
            items
                .iter()
                .map(|v| parse(v)?.evaluate())
                .collect::<Result<_>>()?,
        )),
        v => parse(v)?.evaluate(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Midpoint rule, independent of the closed forms.
    fn numeric_integral(model: &EntropyModel, lo: f64, hi: f64) -> f64 {
        let steps = 200_000;
        let h = (hi - lo) / steps as f64;
        (0..steps)
            .map(|i| model.entropy(lo + (i as f64 + 0.5) * h).sqrt() * h)
            .sum()
    }

    #[test]
    fn loc_radius_examples() {
        let finite = RadiusSource::Model {
            model: EntropyModel::Finite { m: 8.0 },
        };
        let r = loc_radius(&finite, 1000).unwrap();
        assert!((r - 144.0 * 8f64.ln() / 1000.0).abs() < 1e-15);
        assert!((r - 0.2994396).abs() < 1e-7);
        assert_eq!(
            loc_radius(&RadiusSource::Rademacher { rad: 0.0 }, 50).unwrap(),
            0.0
        );
        let rad = loc_radius(&RadiusSource::Rademacher { rad: 0.1 }, 100).unwrap();
        assert!((rad - 12.0 * 1764.0 * 6400f64.ln().powi(3) * 0.01).abs() < 1e-9);

        let vc = |v: f64| RadiusSource::Model {
            model: EntropyModel::Vc { a: 1.0, v },
        };
        assert!(loc_radius(&vc(100.0), 100).is_err());
        assert!(loc_radius(&vc(50.0), 100).is_ok());
        assert!(loc_radius(&finite, 1).is_err());
    }

    #[test]
    fn finite_and_vc_radii_agree_in_order() {
        let (n, v) = (1000usize, 3.0f64);
        let m = (std::f64::consts::E * n as f64 / v).powf(v);
        let finite = loc_radius(&RadiusSource::Model { model: EntropyModel::Finite { m } }, n).unwrap();
        let vc = loc_radius(&RadiusSource::Model { model: EntropyModel::Vc { a: 1.0, v } }, n).unwrap();
        assert!((finite / vc - FINITE_RADIUS_CONSTANT / VC_RADIUS_CONSTANT).abs() < 1e-12);
    }

    #[test]
    fn dudley_examples() {
        let e = EntropyModel::Finite {
            m: std::f64::consts::E,
        };
        assert!((dudley_bound(&e, 144, 0.0).unwrap() - 1.0).abs() < 1e-15);
        let poly = EntropyModel::Poly { a: 1.0, p: 1.0 };
        assert!((dudley_bound(&poly, 100, 0.0).unwrap() - 2.4).abs() < 1e-14);
        let rough = EntropyModel::Poly { a: 1.0, p: 4.0 };
        assert_eq!(dudley_bound(&rough, 100, 0.0), Err(Error::DivergentIntegral));
        assert!((dudley_alpha(&rough, 10_000).unwrap() - 0.1).abs() < 1e-15);
        assert!(dudley_bound(&rough, 100, 0.1).unwrap().is_finite());
    }

    #[test]
    fn closed_form_integrals_match_quadrature() {
        let models = [
            EntropyModel::Poly { a: 2.0, p: 1.5 },
            EntropyModel::Poly { a: 1.0, p: 2.0 },
            EntropyModel::Poly { a: 0.5, p: 3.0 },
            EntropyModel::Vc { a: 1.0, v: 3.0 },
            EntropyModel::Vc { a: 0.4, v: 2.0 },
            EntropyModel::Vc { a: 2.0, v: 1.0 },
            EntropyModel::Finite { m: 10.0 },
        ];
        for model in models {
            for (lo, hi) in [(0.01, 1.0), (0.2, 0.7), (0.05, 0.3)] {
                let exact = model.entropy_integral(lo, hi).unwrap();
                let numeric = numeric_integral(&model, lo, hi);
                assert!((exact - numeric).abs() < 1e-6, "{model:?} {lo} {hi}: {exact} vs {numeric}");
            }
        }
    }

    #[test]
    fn dudley_inf_is_minimal_over_grid() {
        for model in [
            EntropyModel::Poly { a: 1.0, p: 3.0 },
            EntropyModel::Poly { a: 1.0, p: 1.0 },
            EntropyModel::Vc { a: 1.0, v: 2.0 },
            EntropyModel::Finite { m: 5.0 },
        ] {
            let (alpha, value) = dudley_inf(&model, 400).unwrap();
            assert!((dudley_bound(&model, 400, alpha).unwrap() - value).abs() < 1e-12);
            for i in 1..=1000 {
                let a = i as f64 / 1000.0;
                assert!(value <= dudley_bound(&model, 400, a).unwrap() + 1e-12);
            }
        }
    }

    #[test]
    fn xi_examples() {
        let g = 0.3;
        let m = 20.0;
        let inputs = |n: usize| {
            let mut i = BoundInputs::new(n, 0.0, 0.5, 0.0);
            i.c = g / i.gamma();
            i
        };
        let x = xi_bound(&EntropyModel::Finite { m }, &inputs(400)).unwrap();
        assert!((x - g * m.ln().sqrt() / 20.0).abs() < 1e-12);
        let x = xi_bound(&EntropyModel::Poly { a: 1.0, p: 1.0 }, &inputs(400)).unwrap();
        assert!((x - 2.0 * g.sqrt() / 20.0).abs() < 1e-12);

        // all terms vanish as n grows with eps = r* = 0 and delta -> 1
        let near = |n| BoundInputs::new(n, 0.0, 1.0 - 1e-12, 0.0);
        let small = xi_bound(&EntropyModel::Finite { m: 2.0 }, &near(1 << 40)).unwrap();
        assert!(small < 1e-6);
        assert!(xi_bound(&EntropyModel::Finite { m: 2.0 }, &near(4)).is_err());
    }

    #[test]
    fn xi_monotone_in_epsilon_and_radius() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let models = [
            EntropyModel::Finite { m: 50.0 },
            EntropyModel::Poly { a: 1.0, p: 3.0 },
            EntropyModel::Vc { a: 1.0, v: 2.0 },
        ];
        for _ in 0..500 {
            let model = models[rng.gen_range(0..3)];
            let n = rng.gen_range(5..10_000);
            let (e1, e2): (f64, f64) = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
            let (r1, r2): (f64, f64) = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
            let base = BoundInputs::new(n, e1.min(e2), 0.1, r1.min(r2));
            let more_eps = BoundInputs::new(n, e1.max(e2), 0.1, r1.min(r2));
            let more_r = BoundInputs::new(n, e1.min(e2), 0.1, r1.max(r2));
            let x = xi_bound(&model, &base).unwrap();
            assert!(xi_bound(&model, &more_eps).unwrap() >= x - 1e-12);
            assert!(xi_bound(&model, &more_r).unwrap() >= x - 1e-12);
        }
    }

    #[test]
    fn psi_examples() {
        let v = psi_nms(100, 10, 1).unwrap();
        let sparse = (10.0 * std::f64::consts::E).ln() / 100.0;
        assert!((v - sparse).abs() < 1e-15);
        assert!((v - 0.0330259).abs() < 1e-6);
        assert!((((1.0f64 + 1.0).ln() / 100.0).sqrt() - 0.0832555).abs() < 1e-6);
        assert_eq!(psi_nms(1, 1000, 1000).unwrap(), 1.0);
        assert!(psi_nms(10, 3, 4).is_err());
    }

    #[test]
    fn psi_monotonicity() {
        for n in [1usize, 10, 100, 10_000] {
            for m in 1..40usize {
                for s in 1..=m {
                    let v = psi_nms(n, m, s).unwrap();
                    assert!(v <= 1.0);
                    if s < m {
                        assert!(psi_nms(n, m, s + 1).unwrap() >= v - 1e-15);
                    }
                    assert!(psi_nms(n, m + 1, s).unwrap() >= v - 1e-15);
                    assert!(psi_nms(n + 1, m, s).unwrap() <= v + 1e-15);
                }
            }
        }
    }

    #[test]
    fn tilde_psi_examples() {
        assert_eq!(tilde_psi(1, 100).unwrap(), 0.01);
        let mut prev = 0.0;
        for m in 1..500 {
            let v = tilde_psi(m, 100).unwrap();
            assert!(v >= prev);
            prev = v;
        }
        let big = tilde_psi(1000, 100).unwrap();
        assert!(big < 1.0 && big == ((1.0f64 + 100.0).ln() / 100.0).sqrt());
    }

    #[test]
    fn barpsi_examples() {
        assert_eq!(barpsi_breakpoints(4096, 4.0), (1.0 / 16.0, 1.0 / 8.0));
        assert_eq!(barpsi(4096, 4.0, 0.01).unwrap(), 0.0625);
        assert_eq!(barpsi(4096, 4.0, 0.09).unwrap(), 0.09);
        assert_eq!(barpsi(4096, 4.0, 0.5).unwrap(), 0.125);
        assert!(barpsi(4096, 2.0, 0.1).is_err());
    }

    #[test]
    fn barpsi_continuous_and_monotone() {
        for (n, p) in [(4096usize, 4.0), (1000, 3.0), (77, 5.5)] {
            let (low, high) = barpsi_breakpoints(n, p);
            for b in [low, high] {
                let below = barpsi(n, p, b - 1e-15).unwrap();
                let at = barpsi(n, p, b).unwrap();
                let above = barpsi(n, p, (b + 1e-15).min(1.0)).unwrap();
                assert!((at - below).abs() <= 1e-12 && (above - at).abs() <= 1e-12);
            }
            let mut prev = 0.0;
            for i in 0..=1000 {
                let v = barpsi(n, p, i as f64 / 1000.0).unwrap();
                assert!(v >= prev);
                prev = v;
            }
        }
    }

    #[test]
    fn rate_exponent_examples() {
        assert_eq!(rate_exponent(&Setting::RegretPoly { p: 2.0 }).unwrap(), -0.5);
        assert_eq!(rate_exponent(&Setting::RegretPoly { p: 4.0 }).unwrap(), -0.25);
        assert_eq!(rate_exponent(&Setting::SkeletonPoly { p: 1.0 }).unwrap(), -0.5);
        assert_eq!(rate_exponent(&Setting::RegretLower { p: 2.0 }).unwrap(), -1.0);
        assert_eq!(rate_exponent(&Setting::FiniteErm).unwrap(), -0.5);
        assert!(rate_exponent(&Setting::RegretLower { p: 1.5 }).is_err());
    }

    #[test]
    fn queries() {
        let q: Value = serde_json::from_str(
            r#"[{"op":"psi-nms","n":100,"m":10,"s":1},
                {"op":"loc-radius","n":1000,"source":{"from":"model","model":{"kind":"finite","m":8}}},
                {"op":"rate-exponent","setting":{"setting":"regret-poly","p":4}}]"#,
        )
        .unwrap();
        let out = evaluate_queries(&q).unwrap();
        assert!((out[0]["psi_nms"].as_f64().unwrap() - 0.0330259).abs() < 1e-6);
        assert!((out[1]["r_star"].as_f64().unwrap() - 0.2994396).abs() < 1e-6);
        assert_eq!(out[2]["rate_exponent"].as_f64().unwrap(), -0.25);
        let bad = serde_json::json!({"op": "nope"});
        assert!(matches!(evaluate_queries(&bad), Err(Error::Config(_))));
    }
}
