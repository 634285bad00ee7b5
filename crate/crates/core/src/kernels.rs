//! Covariance functions.
//!
//! Stationary families are written in terms of the scaled distance
//! `rho = ||(x - x') / l||`, which covers both the isotropic and the
//! per-dimension length-scale case with one code path.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SQRT3: f64 = 1.732_050_807_568_877_2;
const SQRT5: f64 = 2.236_067_977_499_79;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KernelFamily {
    Matern32,
    Matern52,
    SquaredExponential,
    AbsoluteExponential,
    /// Scale mixture of squared exponentials with mixture parameter `alpha`.
    RationalQuadratic { alpha: f64 },
    /// Linear kernel `sigma0_sq + x . x'`.
    DotProduct { sigma0_sq: f64 },
}

impl KernelFamily {
    pub fn name(&self) -> &'static str {
        match self {
            KernelFamily::Matern32 => "matern32",
            KernelFamily::Matern52 => "matern52",
            KernelFamily::SquaredExponential => "squared_exponential",
            KernelFamily::AbsoluteExponential => "absolute_exponential",
            KernelFamily::RationalQuadratic { .. } => "rational_quadratic",
            KernelFamily::DotProduct { .. } => "dot_product",
        }
    }

    pub fn is_stationary(&self) -> bool {
        !matches!(self, KernelFamily::DotProduct { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LengthScale {
    Isotropic(f64),
    PerDimension(Vec<f64>),
}

impl LengthScale {
    fn values(&self) -> Vec<f64> {
        match self {
            LengthScale::Isotropic(l) => vec![*l],
            LengthScale::PerDimension(v) => v.clone(),
        }
    }

    #[inline]
    fn at(&self, d: usize) -> f64 {
        match self {
            LengthScale::Isotropic(l) => *l,
            LengthScale::PerDimension(v) => v[d],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub length_scale: LengthScale,
    pub signal_variance: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, length_scale: f64, signal_variance: f64) -> Result<Self> {
        let spec = Self {
            family,
            length_scale: LengthScale::Isotropic(length_scale),
            signal_variance,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn matern32(length_scale: f64) -> Self {
        Self {
            family: KernelFamily::Matern32,
            length_scale: LengthScale::Isotropic(length_scale),
            signal_variance: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.signal_variance) {
            return Err(Error::Argument(format!(
                "signal variance must be positive, got {}",
                self.signal_variance
            )));
        }
        if self.length_scale.values().iter().any(|l| !positive(*l)) {
            return Err(Error::Argument("length scales must be positive".into()));
        }
        match self.family {
            KernelFamily::RationalQuadratic { alpha } if !positive(alpha) => Err(
                Error::Argument(format!("rational quadratic alpha must be positive, got {alpha}")),
            ),
            KernelFamily::DotProduct { sigma0_sq } if !(sigma0_sq >= 0.0) => Err(Error::Argument(
                format!("dot product offset must be non-negative, got {sigma0_sq}"),
            )),
            _ => Ok(()),
        }
    }

    /// Covariance between `x` and `x2`.
    pub fn eval(&self, x: &[f64], x2: &[f64]) -> Result<f64> {
        if x.len() != x2.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: x2.len(),
            });
        }
        if let LengthScale::PerDimension(v) = &self.length_scale {
            if v.len() != x.len() {
                return Err(Error::DimensionMismatch {
                    expected: v.len(),
                    got: x.len(),
                });
            }
        }
        Ok(self.k(x, x2))
    }

    #[inline]
    pub(crate) fn k(&self, x: &[f64], x2: &[f64]) -> f64 {
        if let KernelFamily::DotProduct { sigma0_sq } = self.family {
            return sigma0_sq + x.iter().zip(x2).map(|(a, b)| a * b).sum::<f64>();
        }
        let rho2 = self.scaled_sq_dist(x, x2);
        self.signal_variance * self.radial(rho2)
    }

    /// Prior variance `k(x, x)`.
    #[inline]
    pub(crate) fn diag(&self, x: &[f64]) -> f64 {
        match self.family {
            KernelFamily::DotProduct { sigma0_sq } => {
                sigma0_sq + x.iter().map(|a| a * a).sum::<f64>()
            }
            _ => self.signal_variance,
        }
    }

    #[inline]
    fn scaled_sq_dist(&self, x: &[f64], x2: &[f64]) -> f64 {
        match &self.length_scale {
            LengthScale::Isotropic(l) => {
                x.iter().zip(x2).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / (l * l)
            }
            LengthScale::PerDimension(ls) => x
                .iter()
                .zip(x2)
                .zip(ls)
                .map(|((a, b), l)| ((a - b) / l).powi(2))
                .sum(),
        }
    }

    /// Unit-variance stationary profile as a function of `rho^2`.
    #[inline]
    fn radial(&self, rho2: f64) -> f64 {
        match self.family {
            KernelFamily::Matern32 => {
                let a = SQRT3 * rho2.sqrt();
                (1.0 + a) * (-a).exp()
            }
            KernelFamily::Matern52 => {
                let a = SQRT5 * rho2.sqrt();
                (1.0 + a + 5.0 * rho2 / 3.0) * (-a).exp()
            }
            KernelFamily::SquaredExponential => (-0.5 * rho2).exp(),
            KernelFamily::AbsoluteExponential => (-rho2.sqrt()).exp(),
            KernelFamily::RationalQuadratic { alpha } => (1.0 + rho2 / (2.0 * alpha)).powf(-alpha),
            KernelFamily::DotProduct { .. } => unreachable!("dot product is not stationary"),
        }
    }

    /// `w(rho)` such that `dk / dlog l_d = sigma_f^2 * w * ((x_d - x'_d) / l_d)^2`.
    #[inline]
    fn length_weight(&self, rho2: f64) -> f64 {
        match self.family {
            KernelFamily::Matern32 => 3.0 * (-SQRT3 * rho2.sqrt()).exp(),
            KernelFamily::Matern52 => {
                let a = SQRT5 * rho2.sqrt();
                5.0 / 3.0 * (1.0 + a) * (-a).exp()
            }
            KernelFamily::SquaredExponential => (-0.5 * rho2).exp(),
            KernelFamily::AbsoluteExponential => {
                if rho2 > 0.0 {
                    let rho = rho2.sqrt();
                    (-rho).exp() / rho
                } else {
                    0.0
                }
            }
            KernelFamily::RationalQuadratic { alpha } => {
                (1.0 + rho2 / (2.0 * alpha)).powf(-alpha - 1.0)
            }
            KernelFamily::DotProduct { .. } => 0.0,
        }
    }

    /// Number of trainable log-parameters (length scales plus family extras).
    pub fn n_params(&self) -> usize {
        match self.family {
            KernelFamily::DotProduct { .. } => 1,
            KernelFamily::RationalQuadratic { .. } => self.length_scale.values().len() + 1,
            _ => self.length_scale.values().len(),
        }
    }

    /// Trainable parameters on log scale: length scales first, then the
    /// family-specific parameter. The dot-product kernel trains only its offset.
    pub fn log_params(&self) -> Vec<f64> {
        match self.family {
            KernelFamily::DotProduct { sigma0_sq } => vec![sigma0_sq.ln()],
            KernelFamily::RationalQuadratic { alpha } => {
                let mut p: Vec<f64> = self.length_scale.values().iter().map(|l| l.ln()).collect();
                p.push(alpha.ln());
                p
            }
            _ => self.length_scale.values().iter().map(|l| l.ln()).collect(),
        }
    }

    pub fn with_log_params(&self, p: &[f64]) -> Self {
        assert_eq!(p.len(), self.n_params());
        let mut out = self.clone();
        let n_ls = self.length_scale.values().len();
        if let KernelFamily::DotProduct { .. } = self.family {
            out.family = KernelFamily::DotProduct {
                sigma0_sq: p[0].exp(),
            };
            return out;
        }
        out.length_scale = match &self.length_scale {
            LengthScale::Isotropic(_) => LengthScale::Isotropic(p[0].exp()),
            LengthScale::PerDimension(_) => {
                LengthScale::PerDimension(p[..n_ls].iter().map(|v| v.exp()).collect())
            }
        };
        if let KernelFamily::RationalQuadratic { .. } = self.family {
            out.family = KernelFamily::RationalQuadratic {
                alpha: p[n_ls].exp(),
            };
        }
        out
    }

    /// Which log-parameters are length scales (as opposed to family extras).
    pub(crate) fn length_param_mask(&self) -> Vec<bool> {
        match self.family {
            KernelFamily::DotProduct { .. } => vec![false],
            KernelFamily::RationalQuadratic { .. } => {
                let mut m = vec![true; self.length_scale.values().len()];
                m.push(false);
                m
            }
            _ => vec![true; self.length_scale.values().len()],
        }
    }

    /// Partial derivatives of `k(x, x2)` with respect to each log-parameter.
    pub(crate) fn grad_log_params(&self, x: &[f64], x2: &[f64], out: &mut [f64]) {
        if let KernelFamily::DotProduct { sigma0_sq } = self.family {
            out[0] = sigma0_sq;
            return;
        }
        let rho2 = self.scaled_sq_dist(x, x2);
        let w = self.signal_variance * self.length_weight(rho2);
        match &self.length_scale {
            LengthScale::Isotropic(_) => out[0] = w * rho2,
            LengthScale::PerDimension(ls) => {
                for d in 0..ls.len() {
                    out[d] = w * ((x[d] - x2[d]) / self.length_scale.at(d)).powi(2);
                }
            }
        }
        if let KernelFamily::RationalQuadratic { alpha } = self.family {
            let u = rho2 / (2.0 * alpha);
            let k = self.signal_variance * (1.0 + u).powf(-alpha);
            out[self.length_scale.values().len()] = alpha * k * (u / (1.0 + u) - u.ln_1p());
        }
    }

    /// Covariance matrix between the rows of `a` and `b`.
    pub fn matrix(&self, a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<DMatrix<f64>> {
        if let (Some(ra), Some(rb)) = (a.first(), b.first()) {
            self.eval(ra, rb)?;
        }
        let n = a.first().or(b.first()).map_or(0, Vec::len);
        if let Some(bad) = a.iter().chain(b).find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: bad.len(),
            });
        }
        Ok(DMatrix::from_fn(a.len(), b.len(), |i, j| self.k(&a[i], &b[j])))
    }

    /// Symmetric covariance of a point set with itself.
    pub fn gram(&self, a: &[Vec<f64>]) -> Result<DMatrix<f64>> {
        if let Some(first) = a.first() {
            self.eval(first, first)?;
            if let Some(bad) = a.iter().find(|r| r.len() != first.len()) {
                return Err(Error::DimensionMismatch {
                    expected: first.len(),
                    got: bad.len(),
                });
            }
        }
        let m = a.len();
        let mut k = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..=i {
                let v = self.k(&a[i], &a[j]);
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        Ok(k)
    }
}
