//! Experiment runner: initial design, the propose/evaluate/refit loop, the
//! one-shot LHS baseline, result files and the command line.

pub mod cli;
mod results;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use results::{read_results, read_results_from, write_results, write_results_to, SCHEMA_VERSION};

use crate::acquisition::{prepare_context, propose, Maximizer, PrevIterState, Strategy, StrategyParams};
use crate::benchmarks::BenchmarkFunction;
use crate::doe::{candidate_set, corner_points, lhs, LhsConfig};
use crate::domain::{Dataset, DesignDomain, RngSeed};
use crate::error::{Error, Result};
use crate::gp::{FitOptions, GpModel};
use crate::metrics::{r2, r2_area, RunScores};

/// Default sample sizes `(m_init, m_max, m_cand)` per input dimension.
pub fn default_sizes(n: usize) -> (usize, usize, usize) {
    match n {
        1 => (10, 40, 5000),
        2 => (20, 140, 10000),
        3 => (30, 180, 15000),
        4 => (40, 250, 20000),
        6 => (60, 250, 30000),
        8 => (80, 250, 40000),
        _ => (10 * n, 250.max(10 * n + 50), 5000 * n),
    }
}

pub const DEFAULT_M_TEST: usize = 100_000;
pub const DEFAULT_REPS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Benchmark name as accepted by [`BenchmarkFunction::by_name`].
    pub function: String,
    pub strategy: Strategy,
    pub m_init: usize,
    pub m_max: usize,
    pub m_cand: usize,
    pub m_test: usize,
    pub reps: usize,
    pub seed: u64,
    /// Hyperparameters are refit every this many iterations and only
    /// conditioned on the grown dataset in between.
    pub refit_every: usize,
    pub params: StrategyParams,
    /// Store wall-clock timings; off by default so that result files are
    /// reproducible byte for byte.
    pub record_timing: bool,
}

impl ExperimentConfig {
    /// Configuration with the default sizes for the function's dimension.
    pub fn new(function: &str, strategy: Strategy) -> Result<Self> {
        let f = BenchmarkFunction::by_name(function)?;
        let (m_init, m_max, m_cand) = default_sizes(f.dim());
        Ok(Self {
            function: f.name(),
            strategy,
            m_init,
            m_max,
            m_cand,
            m_test: DEFAULT_M_TEST,
            reps: DEFAULT_REPS,
            seed: 0,
            refit_every: 1,
            params: StrategyParams::default(),
            record_timing: false,
        })
    }

    /// Validate sizes and strategy/function compatibility before any
    /// evaluation happens.
    pub fn preflight(&self) -> Result<BenchmarkFunction> {
        let f = BenchmarkFunction::by_name(&self.function)?;
        let n = f.dim();
        if self.m_init < 2 || self.m_init >= self.m_max {
            return Err(Error::Argument(format!(
                "need 2 <= m_init < m_max (m_init = {}, m_max = {})",
                self.m_init, self.m_max
            )));
        }
        if self.m_cand == 0 || self.m_test < 2 || self.reps == 0 || self.refit_every == 0 {
            return Err(Error::Argument(
                "m_cand, reps and refit_every must be at least 1 and m_test at least 2".into(),
            ));
        }
        let incompatible = |reason: String| Error::Incompatible {
            strategy: self.strategy.name().into(),
            function: f.name(),
            reason,
        };
        if let Some(max) = self.strategy.max_dim() {
            if n > max {
                return Err(incompatible(format!("input dimension {n} exceeds {max}")));
            }
        }
        if self.strategy.needs_corners() && self.m_init + (1usize << n) >= self.m_max {
            return Err(incompatible(format!(
                "m_init + 2^{n} corner points leaves no adaptive budget below m_max = {}",
                self.m_max
            )));
        }
        Ok(f)
    }
}

/// Seed of one repetition. The strategy is deliberately not part of it, so
/// every strategy sees the same initial design and test set.
pub fn run_seed(base: u64, function: &str, rep: usize) -> RngSeed {
    RngSeed(base).derive(function).derive_index(rep as u64)
}

/// Everything that identifies a run, plus its initial design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHeader {
    pub schema_version: u32,
    pub run_id: String,
    pub function: String,
    pub dim: usize,
    pub strategy: Strategy,
    pub rep: usize,
    pub seed: u64,
    pub base_seed: u64,
    pub m_init: usize,
    pub m_max: usize,
    pub m_cand: usize,
    pub m_test: usize,
    pub refit_every: usize,
    pub alpha_wm: f64,
    pub alpha_gs: f64,
    pub initial_x: Vec<Vec<f64>>,
    pub initial_y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    /// Samples evaluated so far, including this one.
    pub m: usize,
    /// New point in original coordinates.
    pub x: Vec<f64>,
    pub y: f64,
    /// Best clamped test R² so far.
    pub r2: f64,
    pub t_fit_s: Option<f64>,
    pub t_propose_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub header: RunHeader,
    pub records: Vec<IterationRecord>,
}

impl RunResult {
    pub fn history(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.r2).collect()
    }

    pub fn best_r2(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.r2)
    }

    pub fn r2_area(&self) -> Result<f64> {
        r2_area(&self.history())
    }

    pub fn scores(&self) -> RunScores {
        RunScores {
            function: self.header.function.clone(),
            dim: self.header.dim,
            strategy: self.header.strategy.name().into(),
            rep: self.header.rep,
            history: self.history(),
        }
    }
}

/// Rolling best of the clamped test R².
pub fn score_iteration(model: &GpModel, test_x: &[Vec<f64>], test_y: &[f64], prev_best: f64) -> Result<f64> {
    let pred = model.predict_mean_batch(test_x)?;
    Ok(prev_best.max(r2(test_y, &pred)?.max(0.0)))
}

/// Shared per-repetition setup: benchmark, unit-box inputs and test set.
struct Problem {
    f: BenchmarkFunction,
    unit: DesignDomain,
    test_x: Vec<Vec<f64>>,
    test_y: Vec<f64>,
    seed: RngSeed,
}

impl Problem {
    fn new(config: &ExperimentConfig, f: BenchmarkFunction, rep: usize) -> Result<Self> {
        let seed = run_seed(config.seed, &f.name(), rep);
        let unit = DesignDomain::unit(f.dim());
        let test_x = lhs(&unit, &LhsConfig::plain(config.m_test, seed.derive("test")))?;
        let test_y = test_x
            .iter()
            .map(|u| f.evaluate(&f.domain().from_unit(u)?))
            .collect::<Result<_>>()?;
        Ok(Self {
            f,
            unit,
            test_x,
            test_y,
            seed,
        })
    }

    fn evaluate(&self, u: &[f64]) -> Result<(Vec<f64>, f64)> {
        let x = self.f.domain().from_unit(u)?;
        let y = self.f.evaluate(&x)?;
        Ok((x, y))
    }

    fn header(&self, config: &ExperimentConfig, rep: usize, initial: &[(Vec<f64>, f64)]) -> RunHeader {
        let name = self.f.name();
        RunHeader {
            schema_version: SCHEMA_VERSION,
            run_id: format!("{name}/{}/rep{rep}/seed{}", config.strategy, config.seed),
            function: name,
            dim: self.f.dim(),
            strategy: config.strategy,
            rep,
            seed: self.seed.0,
            base_seed: config.seed,
            m_init: config.m_init,
            m_max: config.m_max,
            m_cand: config.m_cand,
            m_test: config.m_test,
            refit_every: config.refit_every,
            alpha_wm: config.params.alpha_wm,
            alpha_gs: config.params.alpha_gs,
            initial_x: initial.iter().map(|p| p.0.clone()).collect(),
            initial_y: initial.iter().map(|p| p.1).collect(),
        }
    }

    fn score(&self, model: &GpModel, best: f64) -> Result<f64> {
        score_iteration(model, &self.test_x, &self.test_y, best)
    }
}

fn fit_options(seed: RngSeed) -> FitOptions {
    FitOptions::default().with_seed(seed)
}

fn timed<T>(on: bool, f: impl FnOnce() -> Result<T>) -> Result<(T, Option<f64>)> {
    let start = Instant::now();
    let out = f()?;
    Ok((out, on.then(|| start.elapsed().as_secs_f64())))
}

/// One seeded adaptive run; the `lhs` strategy is handed to
/// [`run_lhs_baseline`].
pub fn run_adaptive(config: &ExperimentConfig, rep: usize) -> Result<RunResult> {
    let f = config.preflight()?;
    if !config.strategy.is_adaptive() {
        return run_lhs_baseline(config, rep);
    }
    let p = Problem::new(config, f, rep)?;
    let stream = p.seed.derive(config.strategy.name());

    let init_u = lhs(&p.unit, &LhsConfig::maximin(config.m_init, p.seed.derive("initial")))?;
    let initial: Vec<(Vec<f64>, f64)> = init_u.iter().map(|u| p.evaluate(u)).collect::<Result<_>>()?;
    let header = p.header(config, rep, &initial);
    let mut data = Dataset::new(p.unit.clone(), init_u, initial.iter().map(|v| v.1).collect())?;
    let mut model = GpModel::fit(&data, &fit_options(p.seed.derive("fit-initial")))?;

    let mut corners: Vec<Vec<f64>> = if config.strategy.needs_corners() {
        corner_points(&p.unit)?
            .into_iter()
            .filter(|c| !data.contains_point(c))
            .rev()
            .collect()
    } else {
        Vec::new()
    };
    let mut prev = PrevIterState::initial();
    let mut best = 0.0;
    let mut records = Vec::with_capacity(config.m_max - config.m_init);
    for t in 0..config.m_max - config.m_init {
        let step = stream.derive_index(t as u64);
        let ((u, y), t_propose) = timed(config.record_timing, || {
            if let Some(c) = corners.pop() {
                let (_, y) = p.evaluate(&c)?;
                return Ok((c, y));
            }
            let candidates = if config.strategy.maximizer() == Maximizer::Candidates {
                candidate_set(&p.unit, config.m_cand, step.derive("candidates"))?
            } else {
                Vec::new()
            };
            let ctx = prepare_context(
                config.strategy,
                model.clone(),
                data.clone(),
                candidates,
                prev.clone(),
                &fit_options(step.derive("aux-fit")),
            )?;
            let proposal = propose(config.strategy, &ctx, &config.params, step.derive("es"))?;
            let (_, y) = p.evaluate(&proposal.x)?;
            prev = PrevIterState::advance(&ctx, &proposal.x, y);
            Ok((proposal.x, y))
        })?;
        data.push(u.clone(), y)?;
        let (next, t_fit) = timed(config.record_timing, || {
            if (t + 1) % config.refit_every == 0 {
                GpModel::fit(&data, &fit_options(step.derive("fit")))
            } else {
                GpModel::condition(model.kernel().clone(), model.noise_variance(), &data)
            }
        })?;
        model = next;
        best = p.score(&model, best)?;
        records.push(IterationRecord {
            iter: t,
            m: data.len(),
            x: p.f.domain().from_unit(&u)?,
            y,
            r2: best,
            t_fit_s: t_fit,
            t_propose_s: t_propose,
        });
    }
    Ok(RunResult { header, records })
}

/// One-shot baseline: a single `m_max`-point maximin LHS revealed one point
/// at a time after its first `m_init` points, scored like an adaptive run.
pub fn run_lhs_baseline(config: &ExperimentConfig, rep: usize) -> Result<RunResult> {
    let f = config.preflight()?;
    let p = Problem::new(config, f, rep)?;
    let stream = p.seed.derive(Strategy::Lhs.name());
    let design = lhs(&p.unit, &LhsConfig::maximin(config.m_max, stream.derive("design")))?;
    let evaluated: Vec<(Vec<f64>, f64)> = design.iter().map(|u| p.evaluate(u)).collect::<Result<_>>()?;
    let header = p.header(config, rep, &evaluated[..config.m_init]);
    let mut data = Dataset::new(
        p.unit.clone(),
        design[..config.m_init].to_vec(),
        evaluated[..config.m_init].iter().map(|v| v.1).collect(),
    )?;
    let mut model: Option<GpModel> = None;
    let mut best = 0.0;
    let mut records = Vec::with_capacity(config.m_max - config.m_init);
    for t in 0..config.m_max - config.m_init {
        let i = config.m_init + t;
        let step = stream.derive_index(t as u64);
        data.push(design[i].clone(), evaluated[i].1)?;
        let (next, t_fit) = timed(config.record_timing, || match &model {
            Some(m) if (t + 1) % config.refit_every != 0 => {
                GpModel::condition(m.kernel().clone(), m.noise_variance(), &data)
            }
            _ => GpModel::fit(&data, &fit_options(step.derive("fit"))),
        })?;
        best = p.score(&next, best)?;
        model = Some(next);
        records.push(IterationRecord {
            iter: t,
            m: data.len(),
            x: evaluated[i].0.clone(),
            y: evaluated[i].1,
            r2: best,
            t_fit_s: t_fit,
            t_propose_s: config.record_timing.then_some(0.0),
        });
    }
    Ok(RunResult { header, records })
}

/// All repetitions of a configuration, in order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunResult>> {
    config.preflight()?;
    (0..config.reps).map(|rep| run_adaptive(config, rep)).collect()
}
