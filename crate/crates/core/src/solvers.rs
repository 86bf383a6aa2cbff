//! Least-squares minimizers: exact enumeration, cell-restricted ERM and
//! simplex-constrained least squares (Frank-Wolfe with away steps).

use crate::domain::{Dataset, Predictor};
use crate::empirical::QuadraticRisk;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Certificate {
    ExactEnumeration,
    /// Final Frank-Wolfe duality gap; an upper bound on the suboptimality.
    FwGap(f64),
    /// Minimizer over a finite proxy whose grid resolution is `delta`.
    RefinementNet { delta: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErmResult {
    pub predictor: Predictor,
    pub empirical_risk: f64,
    pub certificate: Certificate,
    /// Index of the winning candidate, for enumeration-based solvers.
    pub index: Option<usize>,
    /// False when an iterative solver stopped at `max_iter` above tolerance.
    pub converged: bool,
}

fn argmin_lowest(values: impl Iterator<Item = f64>) -> Option<(usize, f64)> {
    values.enumerate().fold(None, |best, (i, v)| match best {
        Some((_, b)) if v >= b => best,
        _ => Some((i, v)),
    })
}

/// Candidate with minimal empirical risk; ties go to the lowest index.
pub fn erm_enumerate(candidates: &[Predictor], d: &Dataset) -> Result<ErmResult> {
    let q = QuadraticRisk::from_dataset(d);
    let risks = candidates
        .iter()
        .map(|c| q.risk_of(c))
        .collect::<Result<Vec<_>>>()?;
    let (i, r) = argmin_lowest(risks.into_iter())
        .ok_or_else(|| Error::invalid("erm over an empty candidate list"))?;
    Ok(ErmResult {
        predictor: candidates[i].clone(),
        empirical_risk: r,
        certificate: Certificate::ExactEnumeration,
        index: Some(i),
        converged: true,
    })
}

/// ERM restricted to the members of one cell. `delta` is the resolution of
/// the finite proxy the members were drawn from.
pub fn erm_cell(
    members: &[Predictor],
    cell: &[usize],
    d: &Dataset,
    delta: f64,
) -> Result<ErmResult> {
    if cell.is_empty() {
        return Err(Error::invalid("erm over an empty cell"));
    }
    let q = QuadraticRisk::from_dataset(d);
    let mut best: Option<(usize, f64)> = None;
    for &m in cell {
        let member = members
            .get(m)
            .ok_or_else(|| Error::invalid(format!("cell references member {m}")))?;
        let r = q.risk_of(member)?;
        if best.map_or(true, |(_, b)| r < b) {
            best = Some((m, r));
        }
    }
    let (m, r) = best.expect("non-empty cell");
    Ok(ErmResult {
        predictor: members[m].clone(),
        empirical_risk: r,
        certificate: Certificate::RefinementNet { delta },
        index: Some(m),
        converged: true,
    })
}

/// Result of simplex-constrained least squares.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexSolution {
    /// Weights over the supplied support, in support order.
    pub weights: Vec<f64>,
    pub risk: f64,
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective value before every iteration, plus the final value.
    pub trace: Vec<f64>,
}

pub fn default_max_iter(support_len: usize, n: usize) -> usize {
    (10.0 * support_len as f64 * (n.max(2) as f64).ln()).ceil() as usize + 100
}

/// Minimize `objective(sum_k theta_k f_{nu_k})` over the simplex.
///
/// Starts at the best vertex; every iteration takes either a Frank-Wolfe step
/// toward the vertex minimizing the linearized objective or an away step from
/// the worst active vertex, both with exact line search. Stops once the
/// Frank-Wolfe duality gap is at most `tol`.
pub fn simplex_least_squares(
    dictionary: &[Vec<f64>],
    support: &[usize],
    objective: &QuadraticRisk,
    tol: f64,
    max_iter: usize,
) -> Result<SimplexSolution> {
    if support.is_empty() {
        return Err(Error::invalid("simplex support must be non-empty"));
    }
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let terms = objective.terms();
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(support.len());
    for &j in support {
        let f = dictionary
            .get(j)
            .ok_or_else(|| Error::invalid(format!("dictionary has no element {j}")))?;
        if objective.min_support() > f.len() {
            return Err(Error::UnknownDesignPoint {
                index: objective.min_support(),
                support: f.len(),
            });
        }
        cols.push(terms.iter().map(|t| f[t.slot]).collect());
    }
    let risk_of = |v: &[f64]| -> f64 {
        terms
            .iter()
            .zip(v)
            .map(|(t, x)| t.weight * (x - t.target).powi(2))
            .sum::<f64>()
            + objective.offset()
    };

    let k = support.len();
    let (start, _) = argmin_lowest(cols.iter().map(|c| risk_of(c))).expect("non-empty support");
    let mut theta = vec![0.0; k];
    theta[start] = 1.0;
    let mut v = cols[start].clone();
    let mut risk = risk_of(&v);
    let mut trace = Vec::new();
    let mut gap;
    let mut iterations = 0;
    let mut dv = vec![0.0; v.len()];
    loop {
        let resid: Vec<f64> = terms
            .iter()
            .zip(&v)
            .map(|(t, x)| 2.0 * t.weight * (x - t.target))
            .collect();
        let grad: Vec<f64> = cols
            .iter()
            .map(|c| c.iter().zip(&resid).map(|(a, b)| a * b).sum())
            .collect();
        let at_theta: f64 = theta.iter().zip(&grad).map(|(t, g)| t * g).sum();
        let (s, gs) = argmin_lowest(grad.iter().copied()).expect("non-empty");
        gap = (at_theta - gs).max(0.0);
        trace.push(risk);
        if gap <= tol || iterations >= max_iter {
            break;
        }
        iterations += 1;
        let away = theta
            .iter()
            .enumerate()
            .filter(|(_, &t)| t > 0.0)
            .map(|(i, _)| i)
            .fold(None::<usize>, |best, i| match best {
                Some(b) if grad[b] >= grad[i] => Some(b),
                _ => Some(i),
            })
            .expect("active vertex");
        let away_gap = grad[away] - at_theta;
        let fw_step = gap >= away_gap || theta[away] >= 1.0;
        let gamma_max = if fw_step {
            for ((d, c), x) in dv.iter_mut().zip(&cols[s]).zip(&v) {
                *d = c - x;
            }
            1.0
        } else {
            for ((d, c), x) in dv.iter_mut().zip(&cols[away]).zip(&v) {
                *d = x - c;
            }
            theta[away] / (1.0 - theta[away])
        };
        let num: f64 = terms
            .iter()
            .zip(v.iter().zip(&dv))
            .map(|(t, (x, d))| t.weight * (t.target - x) * d)
            .sum();
        let den: f64 = terms
            .iter()
            .zip(&dv)
            .map(|(t, d)| t.weight * d * d)
            .sum();
        let gamma = if den > 0.0 {
            (num / den).clamp(0.0, gamma_max)
        } else {
            0.0
        };
        if gamma == 0.0 {
            // no descent along the chosen direction; the gap is numerically exhausted
            break;
        }
        let candidate: Vec<f64> = v.iter().zip(&dv).map(|(x, d)| x + gamma * d).collect();
        let new_risk = risk_of(&candidate);
        if new_risk > risk {
            break;
        }
        v = candidate;
        risk = new_risk;
        if fw_step {
            for t in theta.iter_mut() {
                *t *= 1.0 - gamma;
            }
            theta[s] += gamma;
        } else {
            for t in theta.iter_mut() {
                *t *= 1.0 + gamma;
            }
            theta[away] -= gamma;
            if gamma >= gamma_max {
                theta[away] = 0.0;
            }
        }
        for t in theta.iter_mut() {
            if *t < 0.0 {
                *t = 0.0;
            }
        }
    }
    trace.push(risk);
    let total: f64 = theta.iter().sum();
    for t in theta.iter_mut() {
        *t /= total;
    }
    Ok(SimplexSolution {
        weights: theta,
        risk,
        gap,
        iterations,
        converged: gap <= tol,
        trace,
    })
}

/// Mixture of the supported dictionary elements with the given weights,
/// dropping zero-weight components.
pub(crate) fn dictionary_mixture(
    dictionary: &[Vec<f64>],
    support: &[usize],
    weights: &[f64],
) -> Result<Predictor> {
    let active: Vec<(usize, f64)> = support
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(&j, &w)| (j, w))
        .collect();
    if active.len() == 1 {
        return Predictor::member(dictionary[active[0].0].clone());
    }
    let total: f64 = active.iter().map(|(_, w)| w).sum();
    let components = active
        .iter()
        .map(|(j, _)| Predictor::member(dictionary[*j].clone()))
        .collect::<Result<Vec<_>>>()?;
    Predictor::mixture(components, active.iter().map(|(_, w)| w / total).collect())
}

/// Least squares over the convex hull of `{f_j : j in support}` on a sample.
pub fn erm_simplex(
    dictionary: &[Vec<f64>],
    support: &[usize],
    d: &Dataset,
    tol: f64,
    max_iter: Option<usize>,
) -> Result<ErmResult> {
    let q = QuadraticRisk::from_dataset(d);
    let max_iter = max_iter.unwrap_or_else(|| default_max_iter(support.len(), d.len()));
    let sol = simplex_least_squares(dictionary, support, &q, tol, max_iter)?;
    let predictor = dictionary_mixture(dictionary, support, &sol.weights)?;
    let empirical_risk = q.risk_of(&predictor)?;
    Ok(ErmResult {
        predictor,
        empirical_risk,
        certificate: Certificate::FwGap(sol.gap),
        index: None,
        converged: sol.converged,
    })
}
