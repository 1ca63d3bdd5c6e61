//! Parameter estimation and likelihood evaluation.
//!
//! Fixed-structure EM uses an exact E-step: the posterior given a partial
//! ranking factors over the prior's hierarchy, so each record's posterior
//! tables are its expected sufficient statistics. Structural EM instead
//! samples completions from the posterior and refits structure and tables
//! on them.

use std::collections::HashMap;
use std::sync::Arc;

use rand::distributions::WeightedIndex;
use rand::prelude::Distribution;
use rand::seq::SliceRandom;

use crate::condition::pr_condition;
use crate::dataset::{Dataset, Record};
use crate::error::{domain, Error, Result};
use crate::exec::Exec;
use crate::hierarchy::Hierarchy;
use crate::items::ItemUniverse;
use crate::model::{seeded_rng, RiffleModel};
use crate::ranking::{PartialRanking, Ranking};
use crate::structure::{learn_structure_weighted, StructureConfig};

pub const DEFAULT_LAMBDA: f64 = 0.1;
pub const DEFAULT_LOGLIK_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITERS: usize = 100;
pub const DEFAULT_SAMPLES_PER_OBS: usize = 10;

/// Records processed per parallel batch in the E-step.
const E_STEP_BATCH: usize = 512;

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return domain(format!("smoothing {lambda} must be a nonnegative number"));
    }
    Ok(())
}

/// Normalizes `(stats + λ)` per table into a model over `shape`'s structure.
fn tables_from_stats(shape: &RiffleModel, stats: Vec<Vec<f64>>, lambda: f64) -> Result<RiffleModel> {
    let mut tables = Vec::with_capacity(stats.len());
    for (t, node) in stats.into_iter().zip(shape.nodes()) {
        let z: f64 = t.iter().sum::<f64>() + lambda * t.len() as f64;
        if z <= 0.0 {
            return domain(format!("no data reaches node {} and smoothing is zero", node.path));
        }
        tables.push(t.into_iter().map(|c| (c + lambda) / z).collect());
    }
    Ok(shape.with_tables_unchecked(tables))
}

/// Frequency estimates with `λ` pseudo-counts per table entry.
pub fn mle_full(h: &Hierarchy, data: &Dataset, lambda: f64) -> Result<RiffleModel> {
    let full =
        data.full_rankings().ok_or_else(|| Error::Domain("maximum likelihood fit needs full rankings".into()))?;
    let weighted: Vec<(Ranking, f64)> = full.into_iter().map(|(r, c)| (r, c as f64)).collect();
    mle_weighted(h, data.universe().clone(), &weighted, lambda)
}

/// Frequency estimates from weighted full rankings.
pub fn mle_weighted(
    h: &Hierarchy,
    universe: Arc<ItemUniverse>,
    data: &[(Ranking, f64)],
    lambda: f64,
) -> Result<RiffleModel> {
    check_lambda(lambda)?;
    if data.is_empty() && lambda == 0.0 {
        return domain("empty dataset with zero smoothing");
    }
    let shape = RiffleModel::uniform(universe, h.clone())?;
    let mut stats: Vec<Vec<f64>> = shape.tables().iter().map(|t| vec![0.0; t.len()]).collect();
    for (sigma, weight) in data {
        for (k, idx) in shape.factor_indices(sigma)?.into_iter().enumerate() {
            stats[k][idx] += weight;
        }
    }
    tables_from_stats(&shape, stats, lambda)
}

/// Per-dataset log-likelihood with the records that got zero mass.
#[derive(Clone, Debug, PartialEq)]
pub struct LoglikReport {
    /// `Σ count·ln(mass)`, or `-∞` when some record has zero mass.
    pub value: f64,
    pub zero_mass_records: Vec<usize>,
}

pub fn loglik(model: &RiffleModel, data: &Dataset) -> Result<LoglikReport> {
    loglik_with(model, data, Exec::default())
}

pub fn loglik_with(model: &RiffleModel, data: &Dataset, exec: Exec) -> Result<LoglikReport> {
    if model.universe() != data.universe() {
        return domain("model and dataset are over different universes");
    }
    let masses = exec.map(data.records(), |r| model.partial_ranking_mass(&r.observation));
    let mut value = 0.0;
    let mut zero = Vec::new();
    for (k, (m, r)) in masses.into_iter().zip(data.records()).enumerate() {
        let m = m?;
        if m > 0.0 {
            value += r.count as f64 * m.ln();
        } else {
            zero.push(k);
        }
    }
    if !zero.is_empty() {
        value = f64::NEG_INFINITY;
    }
    Ok(LoglikReport { value, zero_mass_records: zero })
}

/// Top-k censoring: the first `k` items of `sigma`, the rest tied behind.
pub fn censor(sigma: &Ranking, k: usize) -> Result<PartialRanking> {
    if k == 0 || k > sigma.len() {
        return domain(format!("censoring depth {k} outside 1..={}", sigma.len()));
    }
    PartialRanking::top_k(&sigma.order()[..k], sigma.items())
}

/// Censors every unit of count independently, drawing `k` with probability
/// proportional to `k_weights[k − 1]`.
pub fn censor_dataset(data: &Dataset, k_weights: &[f64], seed: u64) -> Result<Dataset> {
    let n = data.universe().len();
    if k_weights.is_empty() || k_weights.len() > n {
        return domain(format!("censoring weights must list between 1 and {n} depths"));
    }
    let dist = WeightedIndex::new(k_weights).map_err(|e| Error::Domain(format!("censoring weights: {e}")))?;
    let full = data.full_rankings().ok_or_else(|| Error::Domain("censoring needs full rankings".into()))?;
    let mut rng = seeded_rng(seed);
    let mut out = Dataset::new(data.universe().clone());
    for (sigma, count) in full {
        for _ in 0..count {
            out.push(censor(&sigma, dist.sample(&mut rng) + 1)?, 1)?;
        }
    }
    Ok(out)
}

/// Uniformly random completions: every block of every record shuffled
/// independently, `per_record` times, each carrying the record's count.
pub fn random_completions(data: &Dataset, per_record: usize, seed: u64) -> Result<Dataset> {
    if per_record == 0 {
        return domain("at least one completion per record is needed");
    }
    let mut rng = seeded_rng(seed);
    let mut out = Dataset::new(data.universe().clone());
    for r in data.records() {
        for _ in 0..per_record {
            let mut order = Vec::with_capacity(r.observation.len());
            for b in r.observation.blocks() {
                let mut v = b.to_vec();
                v.shuffle(&mut rng);
                order.extend(v);
            }
            out.push(PartialRanking::from_ranking(&Ranking::new(order)?), r.count)?;
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EmMode {
    /// Exact E-step, hierarchy held fixed.
    #[default]
    Fixed,
    /// Sampled completions, structure relearned each iteration.
    Structural,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmConfig {
    pub max_iters: usize,
    pub loglik_tol: f64,
    pub samples_per_obs: usize,
    pub lambda: f64,
    pub seed: u64,
    pub mode: EmMode,
    pub structure: StructureConfig,
    pub exec: Exec,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            max_iters: DEFAULT_MAX_ITERS,
            loglik_tol: DEFAULT_LOGLIK_TOL,
            samples_per_obs: DEFAULT_SAMPLES_PER_OBS,
            lambda: DEFAULT_LAMBDA,
            seed: 0,
            mode: EmMode::Fixed,
            structure: StructureConfig::default(),
            exec: Exec::default(),
        }
    }
}

impl EmConfig {
    fn validate(&self) -> Result<()> {
        check_lambda(self.lambda)?;
        if self.max_iters == 0 {
            return domain("max_iters must be at least 1");
        }
        if !(self.loglik_tol.is_finite() && self.loglik_tol >= 0.0) {
            return domain("loglik_tol must be a nonnegative number");
        }
        if self.mode == EmMode::Structural && self.samples_per_obs == 0 {
            return domain("samples_per_obs must be at least 1 in structural mode");
        }
        Ok(())
    }
}

/// One row of the run log.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationLog {
    pub iteration: usize,
    pub loglik: f64,
    pub structure: Hierarchy,
}

#[derive(Clone, Debug)]
pub struct FitResult {
    pub model: RiffleModel,
    /// Training log-likelihood of the initial model followed by that of each
    /// iterate.
    pub loglik_trace: Vec<f64>,
    /// `loglik + λ·Σ ln θ` over all table entries: the quantity smoothed EM
    /// increases monotonically. Equals `loglik_trace` when `λ = 0`.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub log: Vec<IterationLog>,
    /// Set when a structure search saw fewer observations than parameters.
    pub insufficient_data: bool,
}

impl FitResult {
    /// Delimiter-separated run log: iteration, loglik, canonical structure
    /// with item labels.
    pub fn log_tsv(&self) -> String {
        let mut s = String::from("iteration\tloglik\tstructure\n");
        for row in &self.log {
            s.push_str(&format!(
                "{}\t{}\t{}\n",
                row.iteration,
                row.loglik,
                row.structure.canonical().render(self.model.universe())
            ));
        }
        s
    }
}

fn log_prior(model: &RiffleModel, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    lambda * model.tables().iter().flatten().map(|p| p.ln()).sum::<f64>()
}

/// Expected sufficient statistics and training log-likelihood.
fn e_step(model: &RiffleModel, data: &Dataset, exec: Exec) -> Result<(Vec<Vec<f64>>, f64)> {
    let mut stats: Vec<Vec<f64>> = model.tables().iter().map(|t| vec![0.0; t.len()]).collect();
    let mut ll = 0.0;
    let records = data.records();
    for (b, batch) in records.chunks(E_STEP_BATCH).enumerate() {
        let posts = exec.map(batch, |r: &Record| pr_condition(model, &r.observation));
        for (j, (post, r)) in posts.into_iter().zip(batch).enumerate() {
            let post = post.map_err(|e| match e {
                Error::ImpossibleEvidence { node } => Error::Domain(format!(
                    "record {} ({}) has zero probability under the current model at node {node}",
                    b * E_STEP_BATCH + j,
                    data.universe().render_partial(&r.observation)
                )),
                other => other,
            })?;
            let c = r.count as f64;
            ll += c * post.evidence_mass.ln();
            for (acc, t) in stats.iter_mut().zip(post.posterior.tables()) {
                for (a, p) in acc.iter_mut().zip(t) {
                    *a += c * p;
                }
            }
        }
    }
    Ok((stats, ll))
}

/// Fits `init`'s parameters (and, in structural mode, its hierarchy) to
/// partially ranked data.
pub fn em_fit(data: &Dataset, init: &RiffleModel, cfg: &EmConfig) -> Result<FitResult> {
    cfg.validate()?;
    if init.universe() != data.universe() {
        return domain("initial model and dataset are over different universes");
    }
    if data.is_empty() {
        return domain("EM needs at least one record");
    }
    match cfg.mode {
        EmMode::Fixed => em_fixed(data, init, cfg),
        EmMode::Structural => em_structural(data, init, cfg),
    }
}

fn em_fixed(data: &Dataset, init: &RiffleModel, cfg: &EmConfig) -> Result<FitResult> {
    let structure = init.hierarchy().clone();
    let (mut stats, mut ll) = e_step(init, data, cfg.exec)?;
    let mut model = init.clone();
    let mut loglik_trace = vec![ll];
    let mut objective_trace = vec![ll + log_prior(&model, cfg.lambda)];
    let mut log = vec![IterationLog { iteration: 0, loglik: ll, structure: structure.clone() }];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        iterations += 1;
        model = tables_from_stats(&model, stats, cfg.lambda)?;
        let prev = ll;
        (stats, ll) = e_step(&model, data, cfg.exec)?;
        loglik_trace.push(ll);
        objective_trace.push(ll + log_prior(&model, cfg.lambda));
        log.push(IterationLog { iteration: iterations, loglik: ll, structure: structure.clone() });
        if (ll - prev).abs() < cfg.loglik_tol {
            converged = true;
            break;
        }
    }
    Ok(FitResult { model, loglik_trace, objective_trace, iterations, converged, log, insufficient_data: false })
}

/// Seed for one record's completions. It depends only on the run seed and
/// the record index, so draws do not depend on scheduling, and successive
/// iterations reuse the same random stream per record, which keeps structure
/// changes driven by the model rather than by sampling noise.
pub fn derive_seed(seed: u64, record: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    mix(mix(seed) ^ record)
}

/// Per-record cap on posterior draws, so huge counts stay tractable.
pub const MAX_DRAWS_PER_RECORD: u64 = 100_000;

/// Posterior completions of every record, `samples` per unit of count (up
/// to [`MAX_DRAWS_PER_RECORD`]), weighted so the total weight equals the
/// record count. Equal completions are merged in first-seen order.
fn sampled_completions(
    model: &RiffleModel,
    data: &Dataset,
    samples: usize,
    seed: u64,
    exec: Exec,
) -> Result<Vec<(Ranking, f64)>> {
    let indexed: Vec<(usize, &Record)> = data.records().iter().enumerate().collect();
    let draws_for = |r: &Record| (samples as u64).saturating_mul(r.count).min(MAX_DRAWS_PER_RECORD) as usize;
    let draws = exec.map(&indexed, |(i, r)| -> Result<Vec<Ranking>> {
        let post = pr_condition(model, &r.observation)?.posterior;
        Ok(post.sample_many(draws_for(r), derive_seed(seed, *i as u64)))
    });
    let mut out: Vec<(Ranking, f64)> = Vec::new();
    let mut index: HashMap<Ranking, usize> = HashMap::new();
    for (d, r) in draws.into_iter().zip(data.records()) {
        let w = r.count as f64 / draws_for(r) as f64;
        for sigma in d? {
            match index.get(&sigma) {
                Some(&k) => out[k].1 += w,
                None => {
                    index.insert(sigma.clone(), out.len());
                    out.push((sigma, w));
                }
            }
        }
    }
    Ok(out)
}

fn em_structural(data: &Dataset, init: &RiffleModel, cfg: &EmConfig) -> Result<FitResult> {
    let mut model = init.clone();
    let ll0 = loglik_with(&model, data, cfg.exec)?.value;
    let mut loglik_trace = vec![ll0];
    let mut objective_trace = vec![ll0 + log_prior(&model, cfg.lambda)];
    let mut log = vec![IterationLog { iteration: 0, loglik: ll0, structure: model.hierarchy().clone() }];
    let mut converged = false;
    let mut insufficient_data = false;
    let mut iterations = 0;
    while iterations < cfg.max_iters {
        iterations += 1;
        let completions = sampled_completions(&model, data, cfg.samples_per_obs, cfg.seed, cfg.exec)?;
        let learned = learn_structure_weighted(&completions, data.universe().all(), &cfg.structure)?;
        insufficient_data |= learned.insufficient_data;
        let unchanged = learned.hierarchy.canonical() == model.hierarchy().canonical();
        model = mle_weighted(&learned.hierarchy, data.universe().clone(), &completions, cfg.lambda)?;
        let ll = loglik_with(&model, data, cfg.exec)?.value;
        loglik_trace.push(ll);
        objective_trace.push(ll + log_prior(&model, cfg.lambda));
        log.push(IterationLog { iteration: iterations, loglik: ll, structure: model.hierarchy().clone() });
        if unchanged {
            converged = true;
            break;
        }
    }
    Ok(FitResult { model, loglik_trace, objective_trace, iterations, converged, log, insufficient_data })
}

/// One EM step from the uniform model: each partial ranking counts as a
/// uniform spread over its completions.
pub fn uniform_fillin(data: &Dataset, h: &Hierarchy, lambda: f64) -> Result<RiffleModel> {
    let init = RiffleModel::uniform(data.universe().clone(), h.clone())?;
    let cfg = EmConfig { max_iters: 1, lambda, mode: EmMode::Fixed, ..Default::default() };
    Ok(em_fit(data, &init, &cfg)?.model)
}
