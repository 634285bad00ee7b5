//! Gaussian-process regression with a zero prior mean.
//!
//! Responses are standardized before fitting; the cached Cholesky factor and
//! weight vector live in normalized units. Public prediction methods come in
//! two flavours: `predict*` returns original units, `*_normalized` returns
//! the standardized quantities the acquisition functions work with.

mod bounded_bfgs;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{Dataset, NormalizationStats, RngSeed};
use crate::error::{Error, Result};
use crate::kernels::{KernelFamily, KernelSpec};

/// Base diagonal jitter.
pub const DEFAULT_JITTER: f64 = 1e-10;
/// Largest jitter tried before giving up on a factorization.
pub const MAX_JITTER: f64 = 1e-4;

/// Hyperparameter search settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Family and starting shape of the kernel; only the family and the
    /// length-scale layout matter, values are replaced by the search.
    pub kernel: KernelSpec,
    pub n_restarts: usize,
    pub length_scale_bounds: (f64, f64),
    pub noise_bounds: (f64, f64),
    /// Bounds for the family parameter (rational-quadratic alpha,
    /// dot-product offset).
    pub extra_bounds: (f64, f64),
    /// Quasi-Newton iterations per restart.
    pub max_iter: usize,
    /// Freeze the noise variance instead of training it.
    pub fixed_noise: Option<f64>,
    pub jitter: f64,
    pub seed: RngSeed,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            kernel: KernelSpec::matern32(1.0),
            n_restarts: 10,
            length_scale_bounds: (1e-2, 1e2),
            noise_bounds: (1e-10, 1.0),
            extra_bounds: (1e-5, 1e5),
            max_iter: 100,
            fixed_noise: None,
            jitter: DEFAULT_JITTER,
            seed: RngSeed(0),
        }
    }
}

impl FitOptions {
    pub fn with_kernel(mut self, kernel: KernelSpec) -> Self {
        self.kernel = kernel;
        self
    }

    pub fn with_seed(mut self, seed: RngSeed) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<()> {
        let ok = |(lo, hi): (f64, f64)| lo > 0.0 && hi.is_finite() && lo < hi;
        if self.n_restarts == 0 {
            return Err(Error::Argument("n_restarts must be at least 1".into()));
        }
        if !ok(self.length_scale_bounds) || !ok(self.noise_bounds) || !ok(self.extra_bounds) {
            return Err(Error::Argument("hyperparameter bounds must satisfy 0 < lower < upper < inf".into()));
        }
        if let Some(v) = self.fixed_noise {
            if !(v >= 0.0) {
                return Err(Error::Argument(format!("fixed noise must be non-negative, got {v}")));
            }
        }
        Ok(())
    }

    fn log_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        for is_length in self.kernel.length_param_mask() {
            let (a, b) = if is_length {
                self.length_scale_bounds
            } else {
                self.extra_bounds
            };
            lo.push(a.ln());
            hi.push(b.ln());
        }
        if self.fixed_noise.is_none() {
            lo.push(self.noise_bounds.0.ln());
            hi.push(self.noise_bounds.1.ln());
        }
        (lo, hi)
    }
}

/// Factor `K + (noise + jitter) I`, escalating the jitter tenfold on failure.
pub(crate) fn factorize(
    kernel: &KernelSpec,
    noise: f64,
    x: &[Vec<f64>],
    base_jitter: f64,
) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let k = kernel.gram(x)?;
    factorize_matrix(k, noise, base_jitter)
}

fn factorize_matrix(k: DMatrix<f64>, noise: f64, base_jitter: f64) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let mut tried = Vec::new();
    let mut jitter = base_jitter;
    loop {
        let mut kn = k.clone();
        for i in 0..kn.nrows() {
            kn[(i, i)] += noise + jitter;
        }
        tried.push(jitter);
        if let Some(ch) = Cholesky::new(kn) {
            if ch.l_dirty().diagonal().iter().all(|d| *d > 0.0 && d.is_finite()) {
                return Ok((ch, jitter));
            }
        }
        if jitter >= MAX_JITTER * (1.0 - 1e-12) {
            return Err(Error::Factorization { jitter_levels: tried });
        }
        jitter = (jitter * 10.0).min(MAX_JITTER);
    }
}

fn lml_from_factor(ch: &Cholesky<f64, Dyn>, y: &DVector<f64>, alpha: &DVector<f64>) -> f64 {
    let m = y.len() as f64;
    let log_det: f64 = 2.0 * ch.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    -0.5 * m * (2.0 * std::f64::consts::PI).ln() - 0.5 * log_det - 0.5 * y.dot(alpha)
}

/// Log marginal likelihood of `y` (already normalized) under the given
/// hyperparameters.
pub fn log_marginal_likelihood(
    kernel: &KernelSpec,
    noise_variance: f64,
    x: &[Vec<f64>],
    y: &[f64],
) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let (ch, _) = factorize(kernel, noise_variance, x, DEFAULT_JITTER)?;
    let yv = DVector::from_column_slice(y);
    let alpha = ch.solve(&yv);
    Ok(lml_from_factor(&ch, &yv, &alpha))
}

/// Negative log marginal likelihood and its gradient with respect to the
/// log-parameters `[kernel params.., log noise]`.
fn neg_lml_and_grad(
    kernel: &KernelSpec,
    noise: f64,
    train_noise: bool,
    x: &[Vec<f64>],
    y: &DVector<f64>,
    jitter: f64,
) -> Option<(f64, Vec<f64>)> {
    let (ch, used) = factorize(kernel, noise, x, jitter).ok()?;
    let alpha = ch.solve(y);
    let lml = lml_from_factor(&ch, y, &alpha);
    let kinv = ch.inverse();
    let m = x.len();
    let np = kernel.n_params();
    let mut grad = vec![0.0; np + usize::from(train_noise)];
    let mut dk = vec![0.0; np];
    for i in 0..m {
        for j in 0..=i {
            let w = alpha[i] * alpha[j] - kinv[(i, j)];
            let w = if i == j { 0.5 * w } else { w };
            kernel.grad_log_params(&x[i], &x[j], &mut dk);
            for p in 0..np {
                grad[p] += w * dk[p];
            }
        }
    }
    if train_noise {
        let tr: f64 = (0..m).map(|i| alpha[i] * alpha[i] - kinv[(i, i)]).sum();
        grad[np] = 0.5 * noise * tr;
    }
    // effective jitter changes the objective; penalize escalation so the
    // search does not drift into the numerically degenerate region
    let penalty = if used > jitter { 1.0 } else { 0.0 };
    Some((-lml + penalty, grad.iter().map(|g| -g).collect()))
}

/// A GP conditioned on a dataset with fixed hyperparameters.
#[derive(Debug, Clone)]
pub struct GpModel {
    kernel: KernelSpec,
    noise_variance: f64,
    jitter: f64,
    train_x: Vec<Vec<f64>>,
    train_y_norm: DVector<f64>,
    stats: NormalizationStats,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    log_likelihood: f64,
}

/// Fast leave-one-out residuals, kept in normalized units.
#[derive(Debug, Clone, PartialEq)]
pub struct LooErrors {
    pub normalized: Vec<f64>,
    pub y_sigma: f64,
}

impl LooErrors {
    pub fn denormalized(&self) -> Vec<f64> {
        self.normalized.iter().map(|e| e * self.y_sigma).collect()
    }

    pub fn squared(&self) -> Vec<f64> {
        self.normalized.iter().map(|e| e * e).collect()
    }
}

impl GpModel {
    /// Condition on `data` with the given hyperparameters, standardizing y
    /// from the data itself.
    pub fn condition(kernel: KernelSpec, noise_variance: f64, data: &Dataset) -> Result<Self> {
        let stats = NormalizationStats::from_values(data.y())?;
        Self::condition_with_stats(kernel, noise_variance, data.x().to_vec(), data.y(), stats)
    }

    /// Condition with externally supplied normalization statistics.
    pub fn condition_with_stats(
        kernel: KernelSpec,
        noise_variance: f64,
        x: Vec<Vec<f64>>,
        y: &[f64],
        stats: NormalizationStats,
    ) -> Result<Self> {
        kernel.validate()?;
        if x.is_empty() {
            return Err(Error::Argument("cannot condition on an empty dataset".into()));
        }
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        if !(noise_variance >= 0.0) {
            return Err(Error::Argument(format!("noise variance must be >= 0, got {noise_variance}")));
        }
        let y_norm = DVector::from_iterator(y.len(), y.iter().map(|v| stats.normalize(*v)));
        let (chol, jitter) = factorize(&kernel, noise_variance, &x, DEFAULT_JITTER)?;
        let alpha = chol.solve(&y_norm);
        let log_likelihood = lml_from_factor(&chol, &y_norm, &alpha);
        Ok(Self {
            kernel,
            noise_variance,
            jitter,
            train_x: x,
            train_y_norm: y_norm,
            stats,
            chol,
            alpha,
            log_likelihood,
        })
    }

    /// Fit hyperparameters by maximizing the marginal likelihood from
    /// `n_restarts` log-uniform random starts, then condition on `data`.
    pub fn fit(data: &Dataset, options: &FitOptions) -> Result<Self> {
        options.validate()?;
        if data.len() < 2 {
            return Err(Error::Argument("fitting needs at least two observations".into()));
        }
        let stats = NormalizationStats::from_values(data.y())?;
        let y = DVector::from_iterator(data.len(), data.y().iter().map(|v| stats.normalize(*v)));
        let x = data.x();
        let template = options.kernel.clone();
        let np = template.n_params();
        let train_noise = options.fixed_noise.is_none();
        let (lo, hi) = options.log_bounds();

        let unpack = |p: &[f64]| -> (KernelSpec, f64) {
            let kernel = template.with_log_params(&p[..np]);
            let noise = match options.fixed_noise {
                Some(v) => v,
                None => p[np].exp(),
            };
            (kernel, noise)
        };

        let settings = bounded_bfgs::Settings {
            max_iter: options.max_iter,
            ..Default::default()
        };
        let mut best: Option<(f64, Vec<f64>)> = None;
        for restart in 0..options.n_restarts {
            let mut rng = options.seed.derive_index(restart as u64).rng();
            let start: Vec<f64> = lo
                .iter()
                .zip(&hi)
                .map(|(a, b)| a + (b - a) * rng.random::<f64>())
                .collect();
            let objective = |p: &[f64]| {
                let (k, noise) = unpack(p);
                neg_lml_and_grad(&k, noise, train_noise, x, &y, options.jitter)
            };
            let Some(found) = bounded_bfgs::minimize(objective, &start, &lo, &hi, &settings) else {
                continue;
            };
            // strict improvement keeps the lowest restart index on ties
            if best.as_ref().is_none_or(|(f, _)| found.f < *f) {
                best = Some((found.f, found.x));
            }
        }
        let Some((_, p)) = best else {
            return Err(Error::Fit(format!(
                "no finite likelihood in {} restarts",
                options.n_restarts
            )));
        };
        let (kernel, noise) = unpack(&p);
        Self::condition_with_stats(kernel, noise, x.to_vec(), data.y(), stats)
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    /// Jitter actually added to the diagonal (after any escalation).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn stats(&self) -> NormalizationStats {
        self.stats
    }

    pub fn train_x(&self) -> &[Vec<f64>] {
        &self.train_x
    }

    pub fn train_y_normalized(&self) -> &[f64] {
        self.train_y_norm.as_slice()
    }

    pub fn alpha(&self) -> &[f64] {
        self.alpha.as_slice()
    }

    pub fn log_likelihood(&self) -> f64 {
        self.log_likelihood
    }

    pub fn len(&self) -> usize {
        self.train_x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.train_x.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.train_x[0].len()
    }

    /// Lower-triangular factor of `K_N`.
    pub fn cholesky_factor(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    fn cross(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.train_x.iter().map(|t| self.kernel.k(x, t)))
    }

    /// Posterior mean in normalized units.
    pub fn mean_normalized(&self, x: &[f64]) -> f64 {
        self.train_x
            .iter()
            .zip(self.alpha.iter())
            .map(|(t, a)| self.kernel.k(x, t) * a)
            .sum()
    }

    /// Posterior mean and variance in normalized units; the variance is
    /// clamped at zero.
    pub fn predict_normalized(&self, x: &[f64]) -> (f64, f64) {
        let k = self.cross(x);
        let mean = k.dot(&self.alpha);
        let v = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&k)
            .expect("cholesky factor has a positive diagonal");
        let var = self.kernel.diag(x) - v.norm_squared();
        (mean, var.max(0.0))
    }

    /// Variance before clamping, for diagnostics.
    pub fn raw_variance_normalized(&self, x: &[f64]) -> f64 {
        let k = self.cross(x);
        let v = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&k)
            .expect("cholesky factor has a positive diagonal");
        self.kernel.diag(x) - v.norm_squared()
    }

    /// Posterior mean and variance in original units.
    pub fn predict(&self, x: &[f64]) -> Result<(f64, f64)> {
        self.check_dim(x)?;
        let (m, v) = self.predict_normalized(x);
        Ok((self.stats.denormalize(m), v * self.stats.y_sigma.powi(2)))
    }

    /// Batch posterior in normalized units, one triangular solve per block.
    pub fn predict_batch_normalized(&self, xs: &[Vec<f64>]) -> Vec<(f64, f64)> {
        const BLOCK: usize = 512;
        let mut out = Vec::with_capacity(xs.len());
        for chunk in xs.chunks(BLOCK) {
            let ks = DMatrix::from_fn(self.len(), chunk.len(), |i, j| {
                self.kernel.k(&chunk[j], &self.train_x[i])
            });
            let means = ks.tr_mul(&self.alpha);
            let v = self
                .chol
                .l_dirty()
                .solve_lower_triangular(&ks)
                .expect("cholesky factor has a positive diagonal");
            for (j, x) in chunk.iter().enumerate() {
                let var = self.kernel.diag(x) - v.column(j).norm_squared();
                out.push((means[j], var.max(0.0)));
            }
        }
        out
    }

    pub fn predict_batch(&self, xs: &[Vec<f64>]) -> Result<Vec<(f64, f64)>> {
        for x in xs {
            self.check_dim(x)?;
        }
        let s2 = self.stats.y_sigma.powi(2);
        Ok(self
            .predict_batch_normalized(xs)
            .into_iter()
            .map(|(m, v)| (self.stats.denormalize(m), v * s2))
            .collect())
    }

    /// Posterior means in original units (no variance).
    pub fn predict_mean_batch(&self, xs: &[Vec<f64>]) -> Result<Vec<f64>> {
        for x in xs {
            self.check_dim(x)?;
        }
        Ok(xs
            .iter()
            .map(|x| self.stats.denormalize(self.mean_normalized(x)))
            .collect())
    }

    /// Closed-form leave-one-out residuals `alpha_i / [K_N^-1]_ii`.
    pub fn loocv_errors_fast(&self) -> LooErrors {
        let kinv = self.chol.inverse();
        let normalized = (0..self.len())
            .map(|i| self.alpha[i] / kinv[(i, i)])
            .collect();
        LooErrors {
            normalized,
            y_sigma: self.stats.y_sigma,
        }
    }

    /// Forward-difference gradient of the normalized posterior mean. The step
    /// is `1e-6` times the domain width; it is taken backwards where a
    /// forward step would leave the box.
    pub fn mean_gradient_normalized(&self, x: &[f64], lower: &[f64], upper: &[f64]) -> Vec<f64> {
        let f0 = self.mean_normalized(x);
        let mut probe = x.to_vec();
        (0..x.len())
            .map(|d| {
                let mut h = 1e-6 * (upper[d] - lower[d]);
                if x[d] + h > upper[d] {
                    h = -h;
                }
                probe[d] = x[d] + h;
                let f1 = self.mean_normalized(&probe);
                probe[d] = x[d];
                (f1 - f0) / h
            })
            .collect()
    }

    /// Gradient of the posterior mean in original response units.
    pub fn mean_gradient(&self, x: &[f64], lower: &[f64], upper: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok(self
            .mean_gradient_normalized(x, lower, upper)
            .into_iter()
            .map(|g| g * self.stats.y_sigma)
            .collect())
    }
}

/// Leave-one-out residuals by refitting on every reduced dataset with frozen
/// hyperparameters and frozen full-data normalization. Entry `i` is
/// `prediction_full(x_i) - prediction_without_i(x_i)` in normalized units.
pub fn loocv_errors_bruteforce(
    data: &Dataset,
    kernel: &KernelSpec,
    noise_variance: f64,
) -> Result<Vec<f64>> {
    if data.len() < 3 {
        return Err(Error::Argument("brute-force LOOCV needs at least three points".into()));
    }
    let stats = NormalizationStats::from_values(data.y())?;
    let full = GpModel::condition_with_stats(
        kernel.clone(),
        noise_variance,
        data.x().to_vec(),
        data.y(),
        stats,
    )?;
    (0..data.len())
        .map(|i| {
            let reduced = data.without(i);
            let model = GpModel::condition_with_stats(
                kernel.clone(),
                noise_variance,
                reduced.x().to_vec(),
                reduced.y(),
                stats,
            )?;
            let xi = &data.x()[i];
            Ok(full.mean_normalized(xi) - model.mean_normalized(xi))
        })
        .collect()
}

/// Default kernel template for a family: isotropic, unit scale, unit variance.
pub fn kernel_template(family: KernelFamily) -> KernelSpec {
    KernelSpec {
        family,
        length_scale: crate::kernels::LengthScale::Isotropic(1.0),
        signal_variance: 1.0,
    }
}

#[cfg(test)]
mod tests;
