//! Sampling strategies as acquisition functions over the current model and
//! dataset.
//!
//! Every model quantity (posterior mean and variance, leave-one-out residual,
//! Taylor remainder) is taken in normalized response units. Criteria that
//! divide by a maximum over the candidate set are scale-free; the others are
//! only ever used through their argmax.

mod delaunay;

use std::cell::OnceCell;

use serde::{Deserialize, Serialize};

pub use delaunay::{simplex_volume, Delaunay, MAX_DELAUNAY_DIM, MIN_SIMPLEX_VOLUME};

use crate::domain::{distance, Dataset, DesignDomain, RngSeed};
use crate::error::{Error, Result};
use crate::gp::{kernel_template, FitOptions, GpModel};
use crate::kernels::KernelFamily;
use crate::optimize::{maximize_continuous, ranked_indices, EsConfig};

/// Index of the nearest row of `x_obs` and its distance; ties go to the
/// lowest index.
pub fn voronoi_nearest(x: &[f64], x_obs: &[Vec<f64>]) -> Result<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in x_obs.iter().enumerate() {
        if p.len() != x.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: p.len(),
            });
        }
        let d = distance(x, p);
        if best.is_none_or(|(_, b)| d < b) {
            best = Some((i, d));
        }
    }
    best.ok_or_else(|| Error::Argument("no observed points".into()))
}

fn nearest(x: &[f64], x_obs: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, p) in x_obs.iter().enumerate() {
        let d = distance(x, p);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// What the previous iteration leaves behind for the adaptive weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrevIterState {
    /// Iteration counter; zero before the first proposal.
    pub t: usize,
    /// Point added in the previous iteration.
    pub last_point: Option<Vec<f64>>,
    /// Squared error of the previous model at `last_point`, in that model's
    /// normalized units.
    pub e2_true: f64,
    /// Previous squared leave-one-out residual carried to `last_point` by
    /// nearest-neighbour assignment, same units as `e2_true`.
    pub e2_loo_hat: f64,
    /// Sum of the previous squared leave-one-out residuals, original units.
    pub prev_loocv_sq_sum: f64,
    /// Previous residual surrogate at `last_point`, original units.
    pub prev_eloo_at_last: Option<f64>,
}

impl PrevIterState {
    pub fn initial() -> Self {
        Self {
            t: 0,
            last_point: None,
            e2_true: 0.0,
            e2_loo_hat: 0.0,
            prev_loocv_sq_sum: 0.0,
            prev_eloo_at_last: None,
        }
    }

    /// State for the next iteration, recorded from the context that proposed
    /// `x_new` before the model is refit on `(x_new, y_new)`.
    pub fn advance(ctx: &AcquisitionContext, x_new: &[f64], y_new: f64) -> Self {
        let stats = ctx.model.stats();
        let e = stats.normalize(y_new) - ctx.model.mean_normalized(x_new);
        let sigma = stats.y_sigma;
        Self {
            t: ctx.prev.t + 1,
            last_point: Some(x_new.to_vec()),
            e2_true: e * e,
            e2_loo_hat: ctx.gamma(x_new),
            prev_loocv_sq_sum: ctx.loocv.iter().map(|e| (e * sigma).powi(2)).sum(),
            prev_eloo_at_last: ctx
                .eloo_surrogate
                .as_ref()
                .map(|g| g.stats().denormalize(g.mean_normalized(x_new)).max(0.0)),
        }
    }
}

/// Everything an acquisition function may read.
pub struct AcquisitionContext {
    model: GpModel,
    data: Dataset,
    candidates: Vec<Vec<f64>>,
    loocv: Vec<f64>,
    prev: PrevIterState,
    committee: Option<Vec<GpModel>>,
    eloo_surrogate: Option<GpModel>,
    y_norm: Vec<f64>,
    mean_obs: Vec<f64>,
    grad_obs: Vec<Vec<f64>>,
    triangulation: OnceCell<Option<Delaunay>>,
    tead_norm: OnceCell<[f64; 2]>,
    masa_norm: OnceCell<[f64; 2]>,
    dlased_norm: OnceCell<[f64; 2]>,
}

impl AcquisitionContext {
    /// Context for `model`, which must have been fitted on exactly `data`.
    pub fn new(
        model: GpModel,
        data: Dataset,
        candidates: Vec<Vec<f64>>,
        prev: PrevIterState,
    ) -> Result<Self> {
        if model.len() != data.len() || model.train_x() != data.x() {
            return Err(Error::Argument("model was not fitted on the given dataset".into()));
        }
        if data.is_empty() {
            return Err(Error::Argument("acquisition needs observed data".into()));
        }
        let n = data.dim();
        if let Some(c) = candidates.iter().find(|c| c.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: c.len(),
            });
        }
        let stats = model.stats();
        let y_norm = data.y().iter().map(|y| stats.normalize(*y)).collect();
        let loocv = model.loocv_errors_fast().normalized;
        let dom = data.domain();
        let mean_obs = data.x().iter().map(|x| model.mean_normalized(x)).collect();
        let grad_obs = data
            .x()
            .iter()
            .map(|x| model.mean_gradient_normalized(x, dom.lower(), dom.upper()))
            .collect();
        Ok(Self {
            model,
            data,
            candidates,
            loocv,
            prev,
            committee: None,
            eloo_surrogate: None,
            y_norm,
            mean_obs,
            grad_obs,
            triangulation: OnceCell::new(),
            tead_norm: OnceCell::new(),
            masa_norm: OnceCell::new(),
            dlased_norm: OnceCell::new(),
        })
    }

    pub fn with_committee(mut self, committee: Vec<GpModel>) -> Result<Self> {
        if committee.iter().any(|m| m.train_x() != self.data.x()) {
            return Err(Error::Argument("committee members must share the dataset".into()));
        }
        self.committee = Some(committee);
        Ok(self)
    }

    pub fn with_eloo_surrogate(mut self, surrogate: GpModel) -> Result<Self> {
        if surrogate.dim() != self.data.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.data.dim(),
                got: surrogate.dim(),
            });
        }
        self.eloo_surrogate = Some(surrogate);
        Ok(self)
    }

    pub fn model(&self) -> &GpModel {
        &self.model
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn domain(&self) -> &DesignDomain {
        self.data.domain()
    }

    pub fn candidates(&self) -> &[Vec<f64>] {
        &self.candidates
    }

    /// Fast leave-one-out residuals, normalized units.
    pub fn observed_loocv(&self) -> &[f64] {
        &self.loocv
    }

    pub fn prev_state(&self) -> &PrevIterState {
        &self.prev
    }

    pub fn into_parts(self) -> (GpModel, Dataset) {
        (self.model, self.data)
    }

    fn nearest(&self, x: &[f64]) -> (usize, f64) {
        nearest(x, self.data.x())
    }

    /// Squared leave-one-out residual of the nearest observed point.
    pub fn gamma(&self, x: &[f64]) -> f64 {
        self.loocv[self.nearest(x).0].powi(2)
    }

    fn candidates_required(&self) -> Result<()> {
        if self.candidates.is_empty() {
            Err(Error::Argument("this criterion needs a candidate set".into()))
        } else {
            Ok(())
        }
    }

    fn committee_required(&self) -> Result<&[GpModel]> {
        self.committee
            .as_deref()
            .filter(|c| !c.is_empty())
            .ok_or_else(|| Error::Argument("committee models are missing".into()))
    }

    fn surrogate_required(&self) -> Result<&GpModel> {
        self.eloo_surrogate
            .as_ref()
            .ok_or_else(|| Error::Argument("leave-one-out surrogate is missing".into()))
    }

    fn triangulation(&self) -> Option<&Delaunay> {
        self.triangulation
            .get_or_init(|| {
                let dom = self.data.domain();
                let unit: Vec<Vec<f64>> = self
                    .data
                    .x()
                    .iter()
                    .map(|x| dom.to_unit(x).expect("observed points lie in the domain"))
                    .collect();
                Delaunay::new(&unit).ok()
            })
            .as_ref()
    }
}

fn dot_diff(g: &[f64], a: &[f64], b: &[f64]) -> f64 {
    g.iter().zip(a.iter().zip(b)).map(|(g, (a, b))| g * (a - b)).sum()
}

pub fn acq_mmse(ctx: &AcquisitionContext, x: &[f64]) -> f64 {
    ctx.model.predict_normalized(x).1
}

pub fn acq_wmmse(ctx: &AcquisitionContext, x: &[f64], alpha_wm: f64) -> f64 {
    ctx.gamma(x).powf(alpha_wm) * acq_mmse(ctx, x)
}

/// Adaptive balance between the leave-one-out and the variance term.
pub fn balance_factor_mepe(ctx: &AcquisitionContext) -> f64 {
    let p = &ctx.prev;
    if p.t == 0 {
        0.5
    } else if p.e2_loo_hat < 1e-16 {
        0.99
    } else {
        0.99 * (0.5 * p.e2_true / p.e2_loo_hat).min(1.0)
    }
}

pub fn acq_mepe(ctx: &AcquisitionContext, x: &[f64]) -> f64 {
    let a = balance_factor_mepe(ctx);
    a * ctx.gamma(x) + (1.0 - a) * acq_mmse(ctx, x)
}

pub fn acq_eigf(ctx: &AcquisitionContext, x: &[f64]) -> f64 {
    let (o, _) = ctx.nearest(x);
    let (mu, var) = ctx.model.predict_normalized(x);
    (mu - ctx.y_norm[o]).powi(2) + var
}

pub fn acq_ggess(ctx: &AcquisitionContext, x: &[f64]) -> f64 {
    let (o, _) = ctx.nearest(x);
    let dom = ctx.domain();
    let (mu, var) = ctx.model.predict_normalized(x);
    let g = ctx.model.mean_gradient_normalized(x, dom.lower(), dom.upper());
    let xo = &ctx.data.x()[o];
    (ctx.y_norm[o] - mu - dot_diff(&g, xo, x)).powi(2) + var
}

fn taylor_at(ctx: &AcquisitionContext, x: &[f64], mu: f64, o: usize) -> f64 {
    let xo = &ctx.data.x()[o];
    (mu - ctx.mean_obs[o] - dot_diff(&ctx.grad_obs[o], x, xo)).abs()
}

/// Second- and higher-order remainder of the first-order expansion of the
/// posterior mean around the nearest observed point.
pub fn taylor_remainder(ctx: &AcquisitionContext, x: &[f64]) -> f64 {
    let (o, _) = ctx.nearest(x);
    taylor_at(ctx, x, ctx.model.mean_normalized(x), o)
}

fn ratio(v: f64, max: f64) -> f64 {
    if max > 0.0 {
        v / max
    } else {
        0.0
    }
}

fn column_max(terms: &[[f64; 2]]) -> [f64; 2] {
    terms.iter().fold([0.0, 0.0], |m, t| [m[0].max(t[0]), m[1].max(t[1])])
}

fn tead_terms(ctx: &AcquisitionContext, x: &[f64]) -> [f64; 2] {
    let (o, d) = ctx.nearest(x);
    [d, taylor_at(ctx, x, ctx.model.mean_normalized(x), o)]
}

fn tead_combine(ctx: &AcquisitionContext, t: [f64; 2], norm: [f64; 2]) -> f64 {
    let a = 1.0 - t[0] / ctx.domain().diagonal();
    ratio(t[0], norm[0]) + a * ratio(t[1], norm[1])
}

fn normalizers(
    ctx: &AcquisitionContext,
    cell: &OnceCell<[f64; 2]>,
    terms: fn(&AcquisitionContext, &[f64]) -> [f64; 2],
) -> [f64; 2] {
    *cell.get_or_init(|| {
        column_max(&ctx.candidates.iter().map(|c| terms(ctx, c)).collect::<Vec<_>>())
    })
}

pub fn acq_tead(ctx: &AcquisitionContext, x: &[f64]) -> Result<f64> {
    ctx.candidates_required()?;
    let norm = normalizers(ctx, &ctx.tead_norm, tead_terms);
    Ok(tead_combine(ctx, tead_terms(ctx, x), norm))
}

/// Query-by-committee disagreement: population variance of the predictions.
pub fn f_qbc(predictions: &[f64]) -> f64 {
    if predictions.windows(2).all(|w| w[0] == w[1]) {
        return 0.0;
    }
    let k = predictions.len() as f64;
    let mean = predictions.iter().sum::<f64>() / k;
    predictions.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / k
}

fn masa_terms(ctx: &AcquisitionContext, x: &[f64]) -> [f64; 2] {
    let committee = ctx.committee.as_deref().unwrap_or_default();
    let preds: Vec<f64> = committee.iter().map(|m| m.mean_normalized(x)).collect();
    [f_qbc(&preds), ctx.nearest(x).1]
}

fn masa_combine(t: [f64; 2], norm: [f64; 2]) -> f64 {
    ratio(t[0], norm[0]) + ratio(t[1], norm[1])
}

pub fn acq_masa(ctx: &AcquisitionContext, x: &[f64]) -> Result<f64> {
    ctx.candidates_required()?;
    ctx.committee_required()?;
    let norm = normalizers(ctx, &ctx.masa_norm, masa_terms);
    Ok(masa_combine(masa_terms(ctx, x), norm))
}

/// Committee kernels used by MASA.
pub const COMMITTEE_FAMILIES: [KernelFamily; 5] = [
    KernelFamily::SquaredExponential,
    KernelFamily::Matern32,
    KernelFamily::Matern52,
    KernelFamily::DotProduct { sigma0_sq: 1.0 },
    KernelFamily::RationalQuadratic { alpha: 1.0 },
];

/// Fit one model per committee kernel on `data`.
pub fn committee_fit(data: &Dataset, base: &FitOptions) -> Result<Vec<GpModel>> {
    COMMITTEE_FAMILIES
        .iter()
        .map(|f| {
            let opts = base
                .clone()
                .with_kernel(kernel_template(*f))
                .with_seed(base.seed.derive(f.name()));
            GpModel::fit(data, &opts)
        })
        .collect()
}

/// Surrogate of leave-one-out residual magnitudes (original units) over the
/// observed points.
pub fn eloo_surrogate_fit(model: &GpModel, data: &Dataset, base: &FitOptions) -> Result<GpModel> {
    let e = model.loocv_errors_fast().denormalized();
    let target = Dataset::new(
        data.domain().clone(),
        data.x().to_vec(),
        e.iter().map(|v| v.abs()).collect(),
    )?;
    let opts = base
        .clone()
        .with_kernel(kernel_template(KernelFamily::Matern32))
        .with_seed(base.seed.derive("eloo"));
    GpModel::fit(&target, &opts)
}

/// Support simplex of `x`: indices into the observed points and the simplex
/// volume. Falls back to the `n + 1` nearest points when no non-degenerate
/// Delaunay simplex contains `x`.
fn support_indices(ctx: &AcquisitionContext, x: &[f64]) -> (Vec<usize>, f64) {
    let obs = ctx.data.x();
    let dom = ctx.domain();
    let volume = |idx: &[usize]| {
        simplex_volume(&idx.iter().map(|i| obs[*i].as_slice()).collect::<Vec<_>>())
    };
    if let (Some(tri), Ok(u)) = (ctx.triangulation(), dom.to_unit(x)) {
        if let Some(s) = tri.locate(&u) {
            let v = volume(s);
            if v >= MIN_SIMPLEX_VOLUME {
                return (s.to_vec(), v);
            }
        }
    }
    let idx = nearest_k(x, obs, dom.dim() + 1);
    let v = volume(&idx);
    (idx, v)
}

fn nearest_k(x: &[f64], obs: &[Vec<f64>], k: usize) -> Vec<usize> {
    let mut order: Vec<(f64, usize)> = obs.iter().map(|p| distance(x, p)).zip(0..).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    order.into_iter().take(k).map(|(_, i)| i).collect()
}

/// Support points of `x` among `x_obs` (Delaunay simplex containing `x`, or
/// the `n + 1` nearest points when there is none).
pub fn support_points(x: &[f64], x_obs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = x.len();
    let tri = Delaunay::new(x_obs)?;
    let idx = match tri.locate(x) {
        Some(s)
            if simplex_volume(&s.iter().map(|i| x_obs[*i].as_slice()).collect::<Vec<_>>())
                >= MIN_SIMPLEX_VOLUME =>
        {
            s.to_vec()
        }
        _ => nearest_k(x, x_obs, n + 1),
    };
    Ok(idx.into_iter().map(|i| x_obs[i].clone()).collect())
}

/// Distance- and response-weighted exploration criterion (`p = 1`).
pub fn dlased_exploration(ctx: &AcquisitionContext, x: &[f64]) -> f64 {
    let mu = ctx.model.mean_normalized(x);
    let (idx, v) = support_indices(ctx, x);
    idx.iter().fold(v, |acc, i| {
        acc * distance(x, &ctx.data.x()[*i]) * (mu - ctx.y_norm[*i]).abs()
    })
}

fn dlased_terms(ctx: &AcquisitionContext, x: &[f64]) -> [f64; 2] {
    let e = ctx
        .eloo_surrogate
        .as_ref()
        .map_or(0.0, |g| g.mean_normalized(x) * g.stats().y_sigma + g.stats().y_mu);
    [dlased_exploration(ctx, x), e.max(0.0)]
}

/// Adaptive weight of the leave-one-out term.
pub fn dlased_weight(ctx: &AcquisitionContext) -> f64 {
    let p = &ctx.prev;
    if p.t == 0 {
        return 0.5;
    }
    let sigma = ctx.model.stats().y_sigma;
    let e2: Vec<f64> = ctx.loocv.iter().map(|e| (e * sigma).powi(2)).collect();
    let global = if p.prev_loocv_sq_sum > 0.0 {
        e2.iter().sum::<f64>() / p.prev_loocv_sq_sum
    } else {
        0.0
    };
    let last = p
        .last_point
        .as_ref()
        .and_then(|x| ctx.data.x().iter().position(|o| o == x));
    let prev_local = p.prev_eloo_at_last.map(|e| e * e).unwrap_or(0.0);
    match last {
        Some(i) if global > 0.0 && prev_local > 0.0 => {
            (0.5 * (e2[i] / prev_local) / global).min(1.0)
        }
        _ => 1.0,
    }
}

fn dlased_combine(alpha: f64, t: [f64; 2], norm: [f64; 2]) -> f64 {
    (1.0 - alpha) * ratio(t[0], norm[0]) + alpha * ratio(t[1], norm[1])
}

pub fn acq_dlased(ctx: &AcquisitionContext, x: &[f64]) -> Result<f64> {
    ctx.candidates_required()?;
    ctx.surrogate_required()?;
    let norm = normalizers(ctx, &ctx.dlased_norm, dlased_terms);
    Ok(dlased_combine(dlased_weight(ctx), dlased_terms(ctx, x), norm))
}

pub fn acq_guess(ctx: &AcquisitionContext, x: &[f64], alpha_gs: f64) -> f64 {
    let (o, _) = ctx.nearest(x);
    let (mu, var) = ctx.model.predict_normalized(x);
    (taylor_at(ctx, x, mu, o).powf(alpha_gs) + 1.0) * var.sqrt()
}

/// How a strategy turns its criterion into a proposal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Maximizer {
    /// Non-adaptive: the design is fixed up front.
    None,
    Continuous,
    Candidates,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Lhs,
    Mmse,
    Wmmse,
    Mepe,
    Eigf,
    Ggess,
    Tead,
    Masa,
    Dlased,
    Guess,
}

impl Strategy {
    pub const ALL: [Strategy; 10] = [
        Strategy::Lhs,
        Strategy::Mmse,
        Strategy::Wmmse,
        Strategy::Mepe,
        Strategy::Eigf,
        Strategy::Ggess,
        Strategy::Tead,
        Strategy::Masa,
        Strategy::Dlased,
        Strategy::Guess,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Lhs => "lhs",
            Strategy::Mmse => "mmse",
            Strategy::Wmmse => "wmmse",
            Strategy::Mepe => "mepe",
            Strategy::Eigf => "eigf",
            Strategy::Ggess => "ggess",
            Strategy::Tead => "tead",
            Strategy::Masa => "masa",
            Strategy::Dlased => "dlased",
            Strategy::Guess => "guess",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        let key = name.trim().to_ascii_lowercase().replace(['-', '_'], "");
        Self::ALL
            .into_iter()
            .find(|s| s.name() == key)
            .ok_or_else(|| Error::UnknownStrategy(name.to_string()))
    }

    pub fn maximizer(self) -> Maximizer {
        match self {
            Strategy::Lhs => Maximizer::None,
            Strategy::Mmse | Strategy::Mepe | Strategy::Eigf => Maximizer::Continuous,
            _ => Maximizer::Candidates,
        }
    }

    pub fn is_adaptive(self) -> bool {
        self != Strategy::Lhs
    }

    /// Largest supported input dimension, if limited.
    pub fn max_dim(self) -> Option<usize> {
        match self {
            Strategy::Dlased => Some(MAX_DELAUNAY_DIM),
            _ => None,
        }
    }

    /// Whether the box corners must be sampled before the first proposal.
    pub fn needs_corners(self) -> bool {
        self == Strategy::Dlased
    }

    pub fn needs_committee(self) -> bool {
        self == Strategy::Masa
    }

    pub fn needs_eloo_surrogate(self) -> bool {
        self == Strategy::Dlased
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategyParams {
    pub alpha_wm: f64,
    pub alpha_gs: f64,
}

impl Default for StrategyParams {
    fn default() -> Self {
        Self {
            alpha_wm: 1.0,
            alpha_gs: 1.0,
        }
    }
}

/// Build the context a strategy needs, fitting auxiliary models if required.
pub fn prepare_context(
    strategy: Strategy,
    model: GpModel,
    data: Dataset,
    candidates: Vec<Vec<f64>>,
    prev: PrevIterState,
    fit: &FitOptions,
) -> Result<AcquisitionContext> {
    if let Some(max) = strategy.max_dim() {
        if data.dim() > max {
            return Err(Error::Capacity(format!(
                "{strategy} supports n <= {max}, got n = {}",
                data.dim()
            )));
        }
    }
    let committee = if strategy.needs_committee() {
        Some(committee_fit(&data, fit)?)
    } else {
        None
    };
    let surrogate = if strategy.needs_eloo_surrogate() {
        Some(eloo_surrogate_fit(&model, &data, fit)?)
    } else {
        None
    };
    let mut ctx = AcquisitionContext::new(model, data, candidates, prev)?;
    if let Some(c) = committee {
        ctx = ctx.with_committee(c)?;
    }
    if let Some(s) = surrogate {
        ctx = ctx.with_eloo_surrogate(s)?;
    }
    Ok(ctx)
}

/// Criterion value of `strategy` at one point.
pub fn acquisition_value(
    strategy: Strategy,
    ctx: &AcquisitionContext,
    x: &[f64],
    params: &StrategyParams,
) -> Result<f64> {
    if x.len() != ctx.data.dim() {
        return Err(Error::DimensionMismatch {
            expected: ctx.data.dim(),
            got: x.len(),
        });
    }
    Ok(match strategy {
        Strategy::Lhs => {
            return Err(Error::Argument("lhs has no acquisition function".into()));
        }
        Strategy::Mmse => acq_mmse(ctx, x),
        Strategy::Wmmse => acq_wmmse(ctx, x, params.alpha_wm),
        Strategy::Mepe => acq_mepe(ctx, x),
        Strategy::Eigf => acq_eigf(ctx, x),
        Strategy::Ggess => acq_ggess(ctx, x),
        Strategy::Tead => acq_tead(ctx, x)?,
        Strategy::Masa => acq_masa(ctx, x)?,
        Strategy::Dlased => acq_dlased(ctx, x)?,
        Strategy::Guess => acq_guess(ctx, x, params.alpha_gs),
    })
}

/// Criterion values over many points. Normalizers of the scale-free criteria
/// always come from the context's candidate set.
pub fn acquisition_batch(
    strategy: Strategy,
    ctx: &AcquisitionContext,
    xs: &[Vec<f64>],
    params: &StrategyParams,
) -> Result<Vec<f64>> {
    let same_as_candidates = std::ptr::eq(xs, ctx.candidates.as_slice());
    let normalized = |cell: &OnceCell<[f64; 2]>,
                      terms: fn(&AcquisitionContext, &[f64]) -> [f64; 2],
                      combine: &dyn Fn([f64; 2], [f64; 2]) -> f64|
     -> Result<Vec<f64>> {
        ctx.candidates_required()?;
        let t: Vec<[f64; 2]> = xs.iter().map(|x| terms(ctx, x)).collect();
        let norm = if same_as_candidates {
            *cell.get_or_init(|| column_max(&t))
        } else {
            normalizers(ctx, cell, terms)
        };
        Ok(t.into_iter().map(|t| combine(t, norm)).collect())
    };
    match strategy {
        Strategy::Tead => normalized(&ctx.tead_norm, tead_terms, &|t, n| tead_combine(ctx, t, n)),
        Strategy::Masa => {
            ctx.committee_required()?;
            normalized(&ctx.masa_norm, masa_terms, &masa_combine)
        }
        Strategy::Dlased => {
            ctx.surrogate_required()?;
            let alpha = dlased_weight(ctx);
            normalized(&ctx.dlased_norm, dlased_terms, &|t, n| dlased_combine(alpha, t, n))
        }
        _ => xs
            .iter()
            .map(|x| acquisition_value(strategy, ctx, x, params))
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub x: Vec<f64>,
    pub value: f64,
    /// Candidate index for candidate-based strategies.
    pub candidate: Option<usize>,
}

/// Next design point of `strategy`. Candidate-based strategies skip
/// candidates that were already observed.
pub fn propose(
    strategy: Strategy,
    ctx: &AcquisitionContext,
    params: &StrategyParams,
    es_seed: RngSeed,
) -> Result<Proposal> {
    match strategy.maximizer() {
        Maximizer::None => Err(Error::Argument(format!("{strategy} does not propose points"))),
        Maximizer::Continuous => {
            let cfg = EsConfig::for_dim(ctx.data.dim(), es_seed);
            let r = maximize_continuous(
                |x| acquisition_value(strategy, ctx, x, params).unwrap_or(f64::NAN),
                ctx.domain(),
                &cfg,
            )?;
            if ctx.data.contains_point(&r.x) {
                return Err(Error::Optimizer(format!(
                    "{strategy} converged onto an observed point"
                )));
            }
            Ok(Proposal {
                x: r.x,
                value: r.value,
                candidate: None,
            })
        }
        Maximizer::Candidates => {
            let values = acquisition_batch(strategy, ctx, &ctx.candidates, params)?;
            ranked_indices(&values)
                .into_iter()
                .find(|i| values[*i].is_finite() && !ctx.data.contains_point(&ctx.candidates[*i]))
                .map(|i| Proposal {
                    x: ctx.candidates[i].clone(),
                    value: values[i],
                    candidate: Some(i),
                })
                .ok_or_else(|| Error::Optimizer(format!("{strategy} found no usable candidate")))
        }
    }
}
