//! Acquisition maximizers: a steady-state (mu + 1) evolution strategy for
//! continuous criteria and an exhaustive scan for candidate-based ones.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::doe::{lhs, LhsConfig};
use crate::domain::{DesignDomain, RngSeed};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EsConfig {
    /// Parent population size.
    pub mu: usize,
    /// Total objective evaluations, including the initial population.
    pub max_evals: usize,
    /// Initial mutation step as a fraction of each domain width.
    pub mutation_sigma: f64,
    /// Step multiplier applied after `stagnation_window` offspring in a row
    /// fail to improve the incumbent.
    pub step_decay: f64,
    pub stagnation_window: usize,
    pub seed: RngSeed,
}

impl EsConfig {
    pub fn for_dim(n: usize, seed: RngSeed) -> Self {
        Self {
            mu: 20,
            max_evals: 2000 * n,
            mutation_sigma: 0.1,
            step_decay: 0.85,
            stagnation_window: 50 * n,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.mu < 2 || self.max_evals < self.mu {
            return Err(Error::Argument(format!(
                "ES needs mu >= 2 and max_evals >= mu (mu = {}, max_evals = {})",
                self.mu, self.max_evals
            )));
        }
        if !(self.mutation_sigma > 0.0) || !(self.step_decay > 0.0 && self.step_decay <= 1.0) {
            return Err(Error::Argument("invalid ES step settings".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EsResult {
    pub x: Vec<f64>,
    pub value: f64,
    /// Incumbent value after every evaluation.
    pub trace: Vec<f64>,
}

/// Maximize `objective` over `domain` with a (mu + 1) evolution strategy.
///
/// The population starts from a Latin hypercube. Each generation mutates one
/// uniformly chosen parent with isotropic Gaussian noise (clipped to the box)
/// and the child replaces the worst parent when it is better. Non-finite
/// objective values are skipped.
pub fn maximize_continuous<F>(mut objective: F, domain: &DesignDomain, config: &EsConfig) -> Result<EsResult>
where
    F: FnMut(&[f64]) -> f64,
{
    config.validate()?;
    let n = domain.dim();
    let mut rng = config.seed.derive("es-mutation").rng();
    let init = lhs(domain, &LhsConfig::plain(config.mu, config.seed.derive("es-init")))?;

    let mut pop: Vec<(Vec<f64>, f64)> = Vec::with_capacity(config.mu);
    let mut trace = Vec::with_capacity(config.max_evals);
    let mut best: Option<(Vec<f64>, f64)> = None;
    let consider = |x: &Vec<f64>, v: f64, best: &mut Option<(Vec<f64>, f64)>| -> bool {
        if v.is_finite() && best.as_ref().is_none_or(|(_, b)| v > *b) {
            *best = Some((x.clone(), v));
            return true;
        }
        false
    };
    for x in init {
        let v = objective(&x);
        consider(&x, v, &mut best);
        trace.push(best.as_ref().map_or(f64::NEG_INFINITY, |b| b.1));
        pop.push((x, if v.is_finite() { v } else { f64::NEG_INFINITY }));
    }

    let mut sigma = config.mutation_sigma;
    let mut stagnant = 0usize;
    for _ in config.mu..config.max_evals {
        let parent = &pop[rng.random_range(0..pop.len())].0;
        let mut child: Vec<f64> = (0..n)
            .map(|d| {
                let z: f64 = StandardNormal.sample(&mut rng);
                parent[d] + sigma * domain.width(d) * z
            })
            .collect();
        domain.clip(&mut child);
        let v = objective(&child);
        let improved = consider(&child, v, &mut best);
        trace.push(best.as_ref().map_or(f64::NEG_INFINITY, |b| b.1));
        if v.is_finite() {
            let worst = (0..pop.len())
                .min_by(|a, b| pop[*a].1.total_cmp(&pop[*b].1))
                .expect("population is non-empty");
            if v > pop[worst].1 {
                pop[worst] = (child, v);
            }
        }
        if improved {
            stagnant = 0;
        } else {
            stagnant += 1;
            if stagnant >= config.stagnation_window {
                sigma *= config.step_decay;
                stagnant = 0;
            }
        }
    }

    let (x, value) = best.ok_or_else(|| {
        Error::Optimizer("objective was non-finite at every evaluated point".into())
    })?;
    Ok(EsResult { x, value, trace })
}

/// Index of the largest finite value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, v) in values.iter().enumerate() {
        if v.is_finite() && best.is_none_or(|b| *v > values[b]) {
            best = Some(i);
        }
    }
    best
}

/// Indices sorted by decreasing value, ties by increasing index; non-finite
/// values go last.
pub fn ranked_indices(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    let key = |v: f64| if v.is_finite() { v } else { f64::NEG_INFINITY };
    idx.sort_by(|a, b| key(values[*b]).total_cmp(&key(values[*a])).then(a.cmp(b)));
    idx
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateMax {
    pub x: Vec<f64>,
    pub value: f64,
    pub index: usize,
}

/// Exhaustive argmax of `objective` over `candidates`.
pub fn maximize_over_candidates<F>(mut objective: F, candidates: &[Vec<f64>]) -> Result<CandidateMax>
where
    F: FnMut(&[f64]) -> f64,
{
    if candidates.is_empty() {
        return Err(Error::Argument("candidate set is empty".into()));
    }
    let values: Vec<f64> = candidates.iter().map(|c| objective(c)).collect();
    let index = argmax(&values)
        .ok_or_else(|| Error::Optimizer("acquisition is non-finite on every candidate".into()))?;
    Ok(CandidateMax {
        x: candidates[index].clone(),
        value: values[index],
        index,
    })
}
