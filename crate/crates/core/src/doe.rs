//! Space-filling designs: Latin hypercubes, candidate sets and box corners.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{distance, DesignDomain, RngSeed};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LhsCriterion {
    /// Best of several random hypercubes by minimum pairwise distance.
    Maximin,
    /// A single random hypercube.
    Plain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LhsConfig {
    pub m: usize,
    pub criterion: LhsCriterion,
    pub n_candidates_internal: usize,
    pub seed: RngSeed,
}

impl LhsConfig {
    pub fn maximin(m: usize, seed: RngSeed) -> Self {
        Self {
            m,
            criterion: LhsCriterion::Maximin,
            n_candidates_internal: 20,
            seed,
        }
    }

    pub fn plain(m: usize, seed: RngSeed) -> Self {
        Self {
            m,
            criterion: LhsCriterion::Plain,
            n_candidates_internal: 1,
            seed,
        }
    }
}

/// One random Latin hypercube in `[0, 1]^n`: every axis gets a fresh
/// permutation of the `m` strata and a uniform offset inside each stratum.
fn unit_hypercube<R: Rng>(m: usize, n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut pts = vec![vec![0.0; n]; m];
    let mut perm: Vec<usize> = (0..m).collect();
    for d in 0..n {
        perm.shuffle(rng);
        for (i, p) in pts.iter_mut().enumerate() {
            let u: f64 = rng.random();
            p[d] = ((perm[i] as f64 + u) / m as f64).min(1.0);
        }
    }
    pts
}

/// Smallest pairwise Euclidean distance (infinite for fewer than two points).
pub fn min_pairwise_distance(pts: &[Vec<f64>]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..pts.len() {
        for j in 0..i {
            best = best.min(distance(&pts[i], &pts[j]));
        }
    }
    best
}

/// All internal draws of a maximin search, in draw order, in unit space.
pub(crate) fn lhs_draws(m: usize, n: usize, draws: usize, seed: RngSeed) -> Vec<Vec<Vec<f64>>> {
    let mut rng = seed.rng();
    (0..draws.max(1)).map(|_| unit_hypercube(m, n, &mut rng)).collect()
}

fn to_domain(domain: &DesignDomain, unit: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    unit.into_iter()
        .map(|u| {
            u.iter()
                .enumerate()
                .map(|(d, v)| domain.lower()[d] + v * domain.width(d))
                .collect()
        })
        .collect()
}

/// Latin hypercube design of `config.m` points inside `domain`.
pub fn lhs(domain: &DesignDomain, config: &LhsConfig) -> Result<Vec<Vec<f64>>> {
    if config.m == 0 {
        return Err(Error::Argument("LHS needs at least one point".into()));
    }
    let n = domain.dim();
    let unit = match config.criterion {
        LhsCriterion::Plain => lhs_draws(config.m, n, 1, config.seed).remove(0),
        LhsCriterion::Maximin => {
            let mut best: Option<(f64, Vec<Vec<f64>>)> = None;
            for design in lhs_draws(config.m, n, config.n_candidates_internal, config.seed) {
                let score = min_pairwise_distance(&design);
                if best.as_ref().is_none_or(|(s, _)| score > *s) {
                    best = Some((score, design));
                }
            }
            best.expect("at least one draw").1
        }
    };
    Ok(to_domain(domain, unit))
}

/// Fresh plain-LHS candidate set.
pub fn candidate_set(domain: &DesignDomain, m_cand: usize, seed: RngSeed) -> Result<Vec<Vec<f64>>> {
    lhs(domain, &LhsConfig::plain(m_cand, seed))
}

/// Largest dimension for which corners are enumerated.
pub const MAX_CORNER_DIM: usize = 20;

/// All `2^n` vertices of the box; row `i` takes the upper bound on axis `d`
/// when bit `n - 1 - d` of `i` is set.
pub fn corner_points(domain: &DesignDomain) -> Result<Vec<Vec<f64>>> {
    let n = domain.dim();
    if n > MAX_CORNER_DIM {
        return Err(Error::Capacity(format!(
            "{} corners requested for n = {n}; limit is n <= {MAX_CORNER_DIM}",
            "2^n"
        )));
    }
    Ok((0..1usize << n)
        .map(|i| {
            (0..n)
                .map(|d| {
                    if (i >> (n - 1 - d)) & 1 == 1 {
                        domain.upper()[d]
                    } else {
                        domain.lower()[d]
                    }
                })
                .collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn strata_counts(pts: &[Vec<f64>], domain: &DesignDomain, d: usize) -> Vec<usize> {
        let m = pts.len();
        let mut c = vec![0; m];
        for p in pts {
            let u = (p[d] - domain.lower()[d]) / domain.width(d);
            c[((u * m as f64).floor() as usize).min(m - 1)] += 1;
        }
        c
    }

    #[test]
    fn quartile_strata_in_1d() {
        let d = DesignDomain::unit(1);
        let mut pts = lhs(&d, &LhsConfig::maximin(4, RngSeed(1))).unwrap();
        pts.sort_by(|a, b| a[0].total_cmp(&b[0]));
        for (j, p) in pts.iter().enumerate() {
            assert!(p[0] >= j as f64 / 4.0 && p[0] < (j + 1) as f64 / 4.0);
        }
    }

    #[test]
    fn two_points_in_two_dimensions_take_opposite_strata() {
        let d = DesignDomain::unit(2);
        let cfg = LhsConfig::maximin(2, RngSeed(8));
        let pts = lhs(&d, &cfg).unwrap();
        let s = |p: &Vec<f64>| ((p[0] >= 0.5) as u8, (p[1] >= 0.5) as u8);
        let (a, b) = (s(&pts[0]), s(&pts[1]));
        assert_ne!(a.0, b.0);
        assert_ne!(a.1, b.1);
        // selected draw dominates every competitor
        let chosen = min_pairwise_distance(&pts);
        for draw in lhs_draws(2, 2, cfg.n_candidates_internal, cfg.seed) {
            assert!(chosen >= min_pairwise_distance(&draw));
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let d = DesignDomain::uniform(3, -5.0, 10.0).unwrap();
        let cfg = LhsConfig::maximin(17, RngSeed(99));
        assert_eq!(lhs(&d, &cfg).unwrap(), lhs(&d, &cfg).unwrap());
        assert_ne!(lhs(&d, &cfg).unwrap(), lhs(&d, &LhsConfig::maximin(17, RngSeed(98))).unwrap());
    }

    #[test]
    fn corners() {
        let d = DesignDomain::unit(1);
        assert_eq!(corner_points(&d).unwrap(), vec![vec![0.0], vec![1.0]]);
        let d = DesignDomain::unit(2);
        assert_eq!(
            corner_points(&d).unwrap(),
            vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]]
        );
        let d = DesignDomain::uniform(3, -1.0, 2.0).unwrap();
        let c = corner_points(&d).unwrap();
        assert_eq!(c.len(), 8);
        assert!(c.iter().flatten().all(|v| *v == -1.0 || *v == 2.0));
        assert!(matches!(
            corner_points(&DesignDomain::unit(21)),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn candidate_sets_stay_inside() {
        let d = DesignDomain::new(vec![-5.0, 0.0], vec![10.0, 15.0]).unwrap();
        let c = candidate_set(&d, 10_000, RngSeed(5)).unwrap();
        assert_eq!(c.len(), 10_000);
        assert!(c.iter().all(|p| d.contains(p)));
        for dim in 0..2 {
            assert!(strata_counts(&c, &d, dim).iter().all(|k| *k == 1));
        }
    }

    #[test]
    fn zero_points_is_an_error() {
        assert!(lhs(&DesignDomain::unit(2), &LhsConfig::plain(0, RngSeed(0))).is_err());
    }

    proptest! {
        #[test]
        fn one_point_per_stratum(m in 1usize..60, n in 1usize..6, seed in any::<u64>()) {
            let d = DesignDomain::uniform(n, -2.0, 3.0).unwrap();
            let pts = lhs(&d, &LhsConfig::maximin(m, RngSeed(seed))).unwrap();
            prop_assert_eq!(pts.len(), m);
            for dim in 0..n {
                prop_assert!(strata_counts(&pts, &d, dim).iter().all(|k| *k == 1));
            }
        }
    }
}
