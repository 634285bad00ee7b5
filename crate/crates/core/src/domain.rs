//! Shared domain types: the design box, evaluated datasets, target
//! normalization and seed plumbing.
//!
//! Everything downstream of the harness works in the unit-scaled box
//! `[0, 1]^n`; benchmark functions are the only consumers of raw coordinates.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box with per-dimension bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl DesignDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::Argument("domain needs at least one dimension".into()));
        }
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        for (d, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Argument(format!(
                    "dimension {d}: lower bound {lo} must be below upper bound {hi}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The unit hypercube `[0, 1]^n`.
    pub fn unit(n: usize) -> Self {
        assert!(n >= 1, "unit domain needs n >= 1");
        Self {
            lower: vec![0.0; n],
            upper: vec![1.0; n],
        }
    }

    /// Same bounds on every axis.
    pub fn uniform(n: usize, lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower; n], vec![upper; n])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, d: usize) -> f64 {
        self.upper[d] - self.lower[d]
    }

    /// Length of the box diagonal, the largest distance between two points.
    pub fn diagonal(&self) -> f64 {
        (0..self.dim())
            .map(|d| self.width(d).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    pub fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if !self.contains(x) {
            return Err(Error::DomainViolation { point: x.to_vec() });
        }
        Ok(())
    }

    /// Clamp each coordinate into the box.
    pub fn clip(&self, x: &mut [f64]) {
        for (d, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lower[d], self.upper[d]);
        }
    }

    /// Map a point of this box onto `[0, 1]^n`.
    pub fn to_unit(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        Ok(x
            .iter()
            .enumerate()
            .map(|(d, v)| (v - self.lower[d]) / self.width(d))
            .collect())
    }

    /// Inverse of [`DesignDomain::to_unit`].
    pub fn from_unit(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: u.len(),
            });
        }
        if u.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::DomainViolation { point: u.to_vec() });
        }
        Ok(u.iter()
            .enumerate()
            .map(|(d, v)| {
                // pin the endpoints so the round trip is exact on the boundary
                if *v == 1.0 {
                    self.upper[d]
                } else {
                    self.lower[d] + v * self.width(d)
                }
            })
            .collect())
    }
}

/// Evaluated design points with their responses.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    domain: DesignDomain,
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
}

impl Dataset {
    pub fn empty(domain: DesignDomain) -> Self {
        Self {
            domain,
            x: Vec::new(),
            y: Vec::new(),
        }
    }

    pub fn new(domain: DesignDomain, x: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        let mut data = Self::empty(domain);
        for (xi, yi) in x.into_iter().zip(y) {
            data.push(xi, yi)?;
        }
        Ok(data)
    }

    /// Append one observation, rejecting out-of-domain and duplicate inputs.
    pub fn push(&mut self, x: Vec<f64>, y: f64) -> Result<()> {
        self.domain.check(&x)?;
        if !y.is_finite() {
            return Err(Error::Argument(format!("response {y} is not finite")));
        }
        if self.x.iter().any(|row| row == &x) {
            return Err(Error::DuplicateInput { index: self.x.len() });
        }
        self.x.push(x);
        self.y.push(y);
        Ok(())
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        self.x.iter().any(|row| row.as_slice() == x)
    }

    pub fn domain(&self) -> &DesignDomain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn x(&self) -> &[Vec<f64>] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Copy without row `i` (used by brute-force cross validation).
    pub fn without(&self, i: usize) -> Self {
        let mut out = self.clone();
        out.x.remove(i);
        out.y.remove(i);
        out
    }
}

/// Mean and standard deviation used to standardize responses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub y_mu: f64,
    pub y_sigma: f64,
}

impl NormalizationStats {
    pub const IDENTITY: Self = Self {
        y_mu: 0.0,
        y_sigma: 1.0,
    };

    /// Statistics of `y` with population standard deviation; a constant
    /// vector gets `y_sigma = 1`.
    pub fn from_values(y: &[f64]) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::Argument("cannot normalize an empty vector".into()));
        }
        let m = y.len() as f64;
        let mu = y.iter().sum::<f64>() / m;
        let var = y.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / m;
        let sigma = var.sqrt();
        let sigma = if sigma > 0.0 && sigma.is_finite() {
            sigma
        } else {
            1.0
        };
        Ok(Self {
            y_mu: mu,
            y_sigma: sigma,
        })
    }

    pub fn normalize(&self, v: f64) -> f64 {
        (v - self.y_mu) / self.y_sigma
    }

    pub fn denormalize(&self, v: f64) -> f64 {
        v * self.y_sigma + self.y_mu
    }
}

/// Standardize `y`, returning the normalized vector and its statistics.
pub fn normalize_targets(y: &[f64]) -> Result<(Vec<f64>, NormalizationStats)> {
    let stats = NormalizationStats::from_values(y)?;
    Ok((y.iter().map(|v| stats.normalize(*v)).collect(), stats))
}

pub fn denormalize_targets(y_norm: &[f64], stats: &NormalizationStats) -> Vec<f64> {
    y_norm.iter().map(|v| stats.denormalize(*v)).collect()
}

/// Deterministic seed from which every random stream of a run is derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed(pub u64);

impl RngSeed {
    /// Child seed keyed by a label; stable across platforms and releases.
    pub fn derive(self, label: &str) -> RngSeed {
        let mut h = fnv1a(FNV_OFFSET, &self.0.to_le_bytes());
        h = fnv1a(h, label.as_bytes());
        RngSeed(splitmix64(h))
    }

    pub fn derive_index(self, index: u64) -> RngSeed {
        let h = fnv1a(fnv1a(FNV_OFFSET, &self.0.to_le_bytes()), &index.to_le_bytes());
        RngSeed(splitmix64(h ^ 0x9e37_79b9_7f4a_7c15))
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;

fn fnv1a(mut h: u64, bytes: &[u8]) -> u64 {
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Euclidean distance.
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}
