//! Seeded synthetic studies: rank against data fit over a regularization
//! grid, fit and ground-truth distance against noise level, and the
//! entrywise bias of the fixed-rank envelope and nuclear estimators.
//!
//! Every study builds its operator from stream 0 of the seed, the ground
//! truth from stream 1 and noise from stream 2 onwards, solves on the
//! normalized instance, and reports parameters and data fits in the units
//! of the original instance. Independent solves run in parallel; output
//! order is fixed by grid index.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::certificates::{self, DeltaEstimate};
use crate::envelopes::Regularizer;
use crate::error::{Error, Result};
use crate::problem::{self, LinearOp, NoiseSpec, ProblemInstance, RngSeed};
use crate::solvers::{self, SolveConfig, SolveResult};
use crate::spectral::{self, Matrix};

pub const DEFAULT_SEED: u64 = 20240001;
/// Restarts of the isometry-defect search attached to every sweep.
pub const DELTA_RESTARTS: usize = 5;

pub const RESULT_HEADER: [&str; 10] = [
    "reg_kind",
    "reg_param",
    "noise_norm",
    "seed",
    "rank",
    "data_fit",
    "gt_dist",
    "iters",
    "converged",
    "verdict",
];
pub const BIAS_HEADER: [&str; 6] = ["row", "col", "mean_env", "sd_env", "mean_nuc", "sd_nuc"];

/// Verdict column for solves no theorem applies to.
pub const VERDICT_NA: &str = "na";
/// Verdict column when the nuclear bisection could not bracket the rank.
pub const VERDICT_BRACKET_FAILURE: &str = "bracket_failure";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// `m = 75`, `10×10`, `K₀ = 2`.
    Desk,
    /// `m = 300`, `20×20`, `K₀ = 4`.
    Paper,
}

impl Scale {
    /// Multiplier on the noise norms of the noise and bias studies; keeps
    /// the noise-to-signal ratio of the smaller desk instance comparable.
    pub fn noise_scale(self) -> f64 {
        match self {
            Scale::Desk => 0.5,
            Scale::Paper => 1.0,
        }
    }
}

/// Shape of the random instances.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceSpec {
    pub m: usize,
    pub n1: usize,
    pub n2: usize,
    /// Standard deviation of the operator entries.
    pub op_std: f64,
    /// Rank of the ground truth.
    pub k0: usize,
    /// Standard deviation of the ground-truth factor entries.
    pub x0_std: f64,
}

impl InstanceSpec {
    pub fn for_scale(scale: Scale) -> Self {
        let (m, n, k0) = match scale {
            Scale::Desk => (75, 10, 2),
            Scale::Paper => (300, 20, 4),
        };
        InstanceSpec {
            m,
            n1: n,
            n2: n,
            op_std: 1.0 / (m as f64).sqrt(),
            k0,
            x0_std: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("m", self.m), ("n1", self.n1), ("n2", self.n2), ("k0", self.k0)] {
            if v == 0 {
                return Err(Error::param(name, "must be positive"));
            }
        }
        if self.k0 > self.n1.min(self.n2) {
            return Err(Error::param("k0", format!("must not exceed {}", self.n1.min(self.n2))));
        }
        for (name, v) in [("op_std", self.op_std), ("x0_std", self.x0_std)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn operator(&self, seed: u64) -> Result<LinearOp> {
        problem::gen_gaussian_op(self.m, self.n1, self.n2, self.op_std, RngSeed::new(seed, 0))
    }

    pub fn ground_truth(&self, seed: u64) -> Result<Matrix> {
        problem::gen_low_rank(self.n1, self.n2, self.k0, self.x0_std, RngSeed::new(seed, 1))
    }

    /// Instance whose noise is drawn from stream `noise_stream`.
    pub fn instance(&self, seed: u64, noise: NoiseSpec, noise_stream: u64) -> Result<ProblemInstance> {
        problem::gen_instance(
            self.operator(seed)?,
            self.ground_truth(seed)?,
            noise,
            RngSeed::new(seed, noise_stream),
        )
    }
}

/// Regularizers visited by [`run_rank_vs_fit`].
#[derive(Debug, Clone, PartialEq)]
pub enum RegGrid {
    /// `points` log-spaced factors over `[lo, hi]`, applied as `μ = f·s²`
    /// and `λ = f·s` with `s = ‖𝒜*b‖₂` of the normalized instance; runs
    /// both the rank penalty and the nuclear norm.
    Relative { points: usize, lo: f64, hi: f64 },
    /// Rank-penalty weights in original units.
    Mu(Vec<f64>),
    /// Nuclear weights in original units.
    Lambda(Vec<f64>),
    /// Fixed-rank constraints.
    Ranks(Vec<usize>),
}

impl Default for RegGrid {
    fn default() -> Self {
        RegGrid::Relative {
            points: 100,
            lo: 1e-3,
            hi: 1e2,
        }
    }
}

/// Rank-against-fit study.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub instance: InstanceSpec,
    pub noise: NoiseSpec,
    pub grid: RegGrid,
    pub seed: u64,
    pub solve: SolveConfig,
}

impl SweepSpec {
    pub fn preset(scale: Scale, seed: u64) -> Self {
        SweepSpec {
            instance: InstanceSpec::for_scale(scale),
            noise: NoiseSpec::Std(0.1),
            grid: RegGrid::default(),
            seed,
            solve: SolveConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.instance.validate()?;
        self.solve.validate()?;
        let positive = |v: &[f64]| v.iter().all(|x| *x > 0.0 && x.is_finite());
        let ok = match &self.grid {
            RegGrid::Relative { points, lo, hi } => *points > 0 && *lo > 0.0 && hi >= lo && hi.is_finite(),
            RegGrid::Mu(v) | RegGrid::Lambda(v) => !v.is_empty() && positive(v),
            RegGrid::Ranks(v) => !v.is_empty() && v.iter().all(|&k| k >= 1 && k <= self.instance.n1.min(self.instance.n2)),
        };
        if !ok {
            return Err(Error::param("grid", "must be non-empty with positive entries"));
        }
        Ok(())
    }
}

/// Noise-level study.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSweepSpec {
    pub instance: InstanceSpec,
    /// Exact noise norms, original units.
    pub levels: Vec<f64>,
    /// Rank constraint of the envelope and target rank of the bisection.
    pub k: usize,
    pub seed: u64,
    pub solve: SolveConfig,
}

impl NoiseSweepSpec {
    /// Levels `{0, 0.5, …, 5}` times the scale's noise multiplier.
    pub fn preset(scale: Scale, seed: u64) -> Self {
        let instance = InstanceSpec::for_scale(scale);
        NoiseSweepSpec {
            k: instance.k0,
            instance,
            levels: (0..=10).map(|i| 0.5 * i as f64 * scale.noise_scale()).collect(),
            seed,
            solve: SolveConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.instance.validate()?;
        self.solve.validate()?;
        if self.levels.is_empty() || self.levels.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
            return Err(Error::param("levels", "must be non-empty and non-negative"));
        }
        if self.k == 0 || self.k > self.instance.n1.min(self.instance.n2) {
            return Err(Error::param("k", "must lie between 1 and min(n1, n2)"));
        }
        Ok(())
    }
}

/// Bias study: one operator and ground truth, `instances` noise draws of a
/// fixed norm.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasSpec {
    pub instance: InstanceSpec,
    pub instances: usize,
    pub noise_norm: f64,
    pub k: usize,
    pub seed: u64,
    pub solve: SolveConfig,
}

impl BiasSpec {
    /// 100 draws at `‖ε‖ = 1` times the scale's noise multiplier.
    pub fn preset(scale: Scale, seed: u64) -> Self {
        let instance = InstanceSpec::for_scale(scale);
        BiasSpec {
            k: instance.k0,
            instance,
            instances: 100,
            noise_norm: scale.noise_scale(),
            seed,
            solve: SolveConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.instance.validate()?;
        self.solve.validate()?;
        if self.instances == 0 {
            return Err(Error::param("instances", "must be positive"));
        }
        if !(self.noise_norm >= 0.0 && self.noise_norm.is_finite()) {
            return Err(Error::param("noise_norm", "must be non-negative"));
        }
        if self.k == 0 || self.k > self.instance.n1.min(self.instance.n2) {
            return Err(Error::param("k", "must lie between 1 and min(n1, n2)"));
        }
        Ok(())
    }
}

/// One solve.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    /// `murank`, `fixedrank` or `nuclear`.
    pub reg_kind: String,
    /// `μ`, `K` or `λ` in original units.
    pub reg_param: f64,
    pub noise_norm: f64,
    pub seed: u64,
    pub rank: usize,
    /// `‖𝒜X − b‖²` in original units.
    pub data_fit: f64,
    /// `‖X − X₀‖`.
    pub gt_dist: f64,
    pub iters: usize,
    pub converged: bool,
    pub verdict: String,
}

/// Normalized instance plus the factor converting its weights back.
struct Prepared {
    original: ProblemInstance,
    normalized: ProblemInstance,
    /// `c²`: normalized weight = `c²`·original weight.
    weight_scale: f64,
}

fn prepare(inst: ProblemInstance) -> Result<Prepared> {
    let (normalized, _) = problem::normalize(&inst, &Regularizer::FixedRank { k: 1 })?;
    let c = normalized.normalization().scale;
    Ok(Prepared {
        original: inst,
        normalized,
        weight_scale: c * c,
    })
}

fn delta_for(op: &LinearOp, k0: usize, seed: u64) -> Result<DeltaEstimate> {
    let (n1, n2) = op.shape();
    certificates::estimate_delta(op, (2 * k0).min(n1.min(n2)), DELTA_RESTARTS, seed)
}

fn verdict_for(inst: &ProblemInstance, x: &Matrix, reg: &Regularizer, delta: DeltaEstimate) -> Result<String> {
    Ok(match *reg {
        Regularizer::MuRank { mu } => certificates::check_theorem_murank(inst, x, mu, delta)?.verdict.to_string(),
        Regularizer::FixedRank { k } => certificates::check_theorem_fixedrank(inst, x, k, delta)?.verdict.to_string(),
        Regularizer::Nuclear { .. } => VERDICT_NA.to_string(),
    })
}

fn record(p: &Prepared, reg: &Regularizer, r: &SolveResult, seed: u64, verdict: String) -> Result<RunRecord> {
    let g = p.original.ground_truth().ok_or(Error::MissingGroundTruth)?;
    let reg_param = match *reg {
        Regularizer::FixedRank { k } => k as f64,
        other => other.param() / p.weight_scale,
    };
    Ok(RunRecord {
        reg_kind: reg.kind().to_string(),
        reg_param,
        noise_norm: g.eps.norm(),
        seed,
        rank: r.rank,
        data_fit: p.original.data_fit(&r.x)?,
        gt_dist: (&r.x - &g.x0).norm(),
        iters: r.iterations,
        converged: r.converged,
        verdict,
    })
}

fn solve_and_record(p: &Prepared, reg: &Regularizer, cfg: &SolveConfig, delta: DeltaEstimate, seed: u64) -> Result<RunRecord> {
    let r = solvers::solve_fbs(&p.normalized, reg, cfg)?;
    let verdict = verdict_for(&p.normalized, &r.x, reg, delta)?;
    record(p, reg, &r, seed, verdict)
}

/// Nuclear solve at the smallest weight giving rank at most `k`.
fn bisect_and_record(p: &Prepared, k: usize, cfg: &SolveConfig, seed: u64) -> Result<RunRecord> {
    let hi = 1.01 * solvers::nuclear_zero_threshold(&p.normalized)?;
    match solvers::solve_nuclear_bisection(&p.normalized, k, (0.0, hi.max(f64::MIN_POSITIVE)), cfg) {
        Ok(b) => record(p, &Regularizer::Nuclear { lambda: b.lambda }, &b.result, seed, VERDICT_NA.to_string()),
        Err(Error::Bracket { lambda_hi, rank, probes, .. }) => {
            let g = p.original.ground_truth().ok_or(Error::MissingGroundTruth)?;
            Ok(RunRecord {
                reg_kind: "nuclear".into(),
                reg_param: lambda_hi / p.weight_scale,
                noise_norm: g.eps.norm(),
                seed,
                rank,
                data_fit: f64::NAN,
                gt_dist: f64::NAN,
                iters: probes.len(),
                converged: false,
                verdict: VERDICT_BRACKET_FAILURE.to_string(),
            })
        }
        Err(e) => Err(e),
    }
}

/// `points` log-spaced values over `[lo, hi]`.
pub fn log_grid(points: usize, lo: f64, hi: f64) -> Vec<f64> {
    if points == 1 {
        return vec![lo];
    }
    let ratio = hi / lo;
    (0..points)
        .map(|i| lo * ratio.powf(i as f64 / (points - 1) as f64))
        .collect()
}

/// Regularizers of the grid, in normalized units.
fn grid_regularizers(spec: &SweepSpec, p: &Prepared) -> Result<Vec<Regularizer>> {
    let c2 = p.weight_scale;
    Ok(match &spec.grid {
        RegGrid::Relative { points, lo, hi } => {
            let atb = p.normalized.op().adjoint(p.normalized.b())?;
            let s = spectral::singular_values(&atb)?.first().copied().unwrap_or(0.0);
            let factors = log_grid(*points, *lo, *hi);
            let mus = factors.iter().map(|f| Regularizer::MuRank { mu: f * s * s });
            let lambdas = factors.iter().map(|f| Regularizer::Nuclear { lambda: f * s });
            mus.chain(lambdas).collect()
        }
        RegGrid::Mu(v) => v.iter().map(|mu| Regularizer::MuRank { mu: mu * c2 }).collect(),
        RegGrid::Lambda(v) => v.iter().map(|l| Regularizer::Nuclear { lambda: l * c2 }).collect(),
        RegGrid::Ranks(v) => v.iter().map(|&k| Regularizer::FixedRank { k }).collect(),
    })
}

/// One solve from zero per grid point; under [`RegGrid::Relative`] all
/// rank-penalty records precede all nuclear records. Failed solves are
/// recorded unconverged, never dropped.
pub fn run_rank_vs_fit(spec: &SweepSpec) -> Result<Vec<RunRecord>> {
    spec.validate()?;
    let p = prepare(spec.instance.instance(spec.seed, spec.noise, 2)?)?;
    let regs = grid_regularizers(spec, &p)?;
    let delta = delta_for(p.normalized.op(), spec.instance.k0, spec.seed)?;
    let cfg = SolveConfig {
        init: None,
        ..spec.solve.clone()
    };
    regs.par_iter()
        .map(|reg| solve_and_record(&p, reg, &cfg, delta, spec.seed))
        .collect()
}

/// Per level, a fixed-rank envelope record followed by a nuclear record at
/// the bisected weight. All levels share one noise direction.
pub fn run_noise_sweep(spec: &NoiseSweepSpec) -> Result<Vec<RunRecord>> {
    spec.validate()?;
    let cfg = SolveConfig {
        init: None,
        ..spec.solve.clone()
    };
    let first = prepare(spec.instance.instance(spec.seed, NoiseSpec::None, 2)?)?;
    let delta = delta_for(first.normalized.op(), spec.k, spec.seed)?;
    let reg = Regularizer::FixedRank { k: spec.k };
    let per_level: Vec<Vec<RunRecord>> = spec
        .levels
        .par_iter()
        .map(|&level| {
            let p = prepare(spec.instance.instance(spec.seed, NoiseSpec::Norm(level), 2)?)?;
            Ok(vec![
                solve_and_record(&p, &reg, &cfg, delta, spec.seed)?,
                bisect_and_record(&p, spec.k, &cfg, spec.seed)?,
            ])
        })
        .collect::<Result<_>>()?;
    Ok(per_level.into_iter().flatten().collect())
}

/// Entrywise statistics of `X − X₀` at one position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasEntry {
    pub row: usize,
    pub col: usize,
    pub mean_env: f64,
    pub sd_env: f64,
    pub mean_nuc: f64,
    pub sd_nuc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasSummary {
    /// Column-major over the matrix positions.
    pub entries: Vec<BiasEntry>,
    pub instances: usize,
    pub noise_norm: f64,
    /// Fraction of entries with `|mean| ≤ 2·sd/√n`.
    pub coverage_env: f64,
    pub coverage_nuc: f64,
    /// Average of `|mean|` over entries.
    pub mean_abs_bias_env: f64,
    pub mean_abs_bias_nuc: f64,
    pub unconverged_env: usize,
    /// Draws where the nuclear bisection failed; excluded from its
    /// statistics.
    pub nuclear_failures: usize,
}

impl BiasSummary {
    /// `key=value` lines of the aggregate statistics.
    pub fn aggregate_lines(&self) -> Vec<String> {
        vec![
            format!("instances={}", self.instances),
            format!("noise_norm={}", self.noise_norm),
            format!("coverage_env={}", self.coverage_env),
            format!("coverage_nuc={}", self.coverage_nuc),
            format!("mean_abs_bias_env={}", self.mean_abs_bias_env),
            format!("mean_abs_bias_nuc={}", self.mean_abs_bias_nuc),
            format!("unconverged_env={}", self.unconverged_env),
            format!("nuclear_failures={}", self.nuclear_failures),
        ]
    }
}

/// Sample mean and standard deviation (`n − 1` denominator; 0 below two
/// samples).
fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = v.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

fn covered(mean: f64, sd: f64, n: usize) -> bool {
    mean.abs() <= 2.0 * sd / (n as f64).sqrt()
}

pub fn run_bias_experiment(spec: &BiasSpec) -> Result<BiasSummary> {
    spec.validate()?;
    let cfg = SolveConfig {
        init: None,
        ..spec.solve.clone()
    };
    let reg = Regularizer::FixedRank { k: spec.k };
    let x0 = spec.instance.ground_truth(spec.seed)?;
    type Draw = (Matrix, bool, Option<Matrix>);
    let draws: Vec<Draw> = (0..spec.instances)
        .into_par_iter()
        .map(|i| {
            let inst = spec.instance.instance(spec.seed, NoiseSpec::Norm(spec.noise_norm), 2 + i as u64)?;
            let p = prepare(inst)?;
            let env = solvers::solve_fbs(&p.normalized, &reg, &cfg)?;
            let hi = 1.01 * solvers::nuclear_zero_threshold(&p.normalized)?;
            let nuc = match solvers::solve_nuclear_bisection(&p.normalized, spec.k, (0.0, hi.max(f64::MIN_POSITIVE)), &cfg) {
                Ok(b) => Some(&b.result.x - &x0),
                Err(Error::Bracket { .. }) => None,
                Err(e) => return Err(e),
            };
            Ok((&env.x - &x0, env.converged, nuc))
        })
        .collect::<Result<_>>()?;

    let (n1, n2) = (spec.instance.n1, spec.instance.n2);
    let nuc: Vec<&Matrix> = draws.iter().filter_map(|d| d.2.as_ref()).collect();
    let mut entries = Vec::with_capacity(n1 * n2);
    for col in 0..n2 {
        for row in 0..n1 {
            let env_vals: Vec<f64> = draws.iter().map(|d| d.0[(row, col)]).collect();
            let nuc_vals: Vec<f64> = nuc.iter().map(|d| d[(row, col)]).collect();
            let (mean_env, sd_env) = mean_sd(&env_vals);
            let (mean_nuc, sd_nuc) = mean_sd(&nuc_vals);
            entries.push(BiasEntry {
                row,
                col,
                mean_env,
                sd_env,
                mean_nuc,
                sd_nuc,
            });
        }
    }
    let count = entries.len() as f64;
    let frac = |f: &dyn Fn(&BiasEntry) -> bool| entries.iter().filter(|e| f(e)).count() as f64 / count;
    let n_env = draws.len();
    let n_nuc = nuc.len();
    Ok(BiasSummary {
        coverage_env: frac(&|e| covered(e.mean_env, e.sd_env, n_env)),
        coverage_nuc: frac(&|e| covered(e.mean_nuc, e.sd_nuc, n_nuc)),
        mean_abs_bias_env: entries.iter().map(|e| e.mean_env.abs()).sum::<f64>() / count,
        mean_abs_bias_nuc: entries.iter().map(|e| e.mean_nuc.abs()).sum::<f64>() / count,
        unconverged_env: draws.iter().filter(|d| !d.1).count(),
        nuclear_failures: n_env - n_nuc,
        entries,
        instances: spec.instances,
        noise_norm: spec.noise_norm,
    })
}

/// Writes the results CSV.
pub fn write_records<W: Write>(records: &[RunRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULT_HEADER)?;
    for r in records {
        w.write_record([
            r.reg_kind.clone(),
            r.reg_param.to_string(),
            r.noise_norm.to_string(),
            r.seed.to_string(),
            r.rank.to_string(),
            r.data_fit.to_string(),
            r.gt_dist.to_string(),
            r.iters.to_string(),
            r.converged.to_string(),
            r.verdict.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(records: &[RunRecord], path: &Path) -> Result<()> {
    write_records(records, BufWriter::new(File::create(path)?))
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: usize) -> Result<T> {
    let raw = rec.get(i).unwrap_or("");
    raw.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("invalid {} `{raw}`", RESULT_HEADER[i]),
    })
}

/// Parses a results CSV written by [`write_records`].
pub fn parse_records<R: Read>(input: R) -> Result<Vec<RunRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    if header.iter().ne(RESULT_HEADER.iter().copied()) {
        return Err(Error::Parse {
            line: 1,
            msg: format!("expected header `{}`", RESULT_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        out.push(RunRecord {
            reg_kind: field(&rec, 0, line)?,
            reg_param: field(&rec, 1, line)?,
            noise_norm: field(&rec, 2, line)?,
            seed: field(&rec, 3, line)?,
            rank: field(&rec, 4, line)?,
            data_fit: field(&rec, 5, line)?,
            gt_dist: field(&rec, 6, line)?,
            iters: field(&rec, 7, line)?,
            converged: field(&rec, 8, line)?,
            verdict: field(&rec, 9, line)?,
        });
    }
    Ok(out)
}

pub fn read_csv(path: &Path) -> Result<Vec<RunRecord>> {
    parse_records(File::open(path)?)
}

pub fn write_bias<W: Write>(summary: &BiasSummary, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(BIAS_HEADER)?;
    for e in &summary.entries {
        w.write_record([
            e.row.to_string(),
            e.col.to_string(),
            e.mean_env.to_string(),
            e.sd_env.to_string(),
            e.mean_nuc.to_string(),
            e.sd_nuc.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_bias_csv(summary: &BiasSummary, path: &Path) -> Result<()> {
    write_bias(summary, BufWriter::new(File::create(path)?))
}

/// Wide layout for plotting: one column group `<kind>.reg_param`,
/// `<kind>.noise_norm`, `<kind>.rank`, `<kind>.data_fit`, `<kind>.gt_dist`
/// per regularizer kind, in order of first appearance; row `j` holds the
/// `j`-th record of every curve, shorter curves padded with empty cells.
pub fn write_plot_data<W: Write>(records: &[RunRecord], out: W) -> Result<()> {
    let mut kinds: Vec<&str> = Vec::new();
    for r in records {
        if !kinds.contains(&r.reg_kind.as_str()) {
            kinds.push(&r.reg_kind);
        }
    }
    let curves: Vec<Vec<&RunRecord>> = kinds
        .iter()
        .map(|k| records.iter().filter(|r| r.reg_kind == *k).collect())
        .collect();
    let mut w = csv::Writer::from_writer(out);
    let cols = ["reg_param", "noise_norm", "rank", "data_fit", "gt_dist"];
    let header: Vec<String> = kinds
        .iter()
        .flat_map(|k| cols.iter().map(move |c| format!("{k}.{c}")))
        .collect();
    w.write_record(&header)?;
    let rows = curves.iter().map(Vec::len).max().unwrap_or(0);
    for j in 0..rows {
        let mut row = Vec::with_capacity(header.len());
        for c in &curves {
            match c.get(j) {
                Some(r) => row.extend([
                    r.reg_param.to_string(),
                    r.noise_norm.to_string(),
                    r.rank.to_string(),
                    r.data_fit.to_string(),
                    r.gt_dist.to_string(),
                ]),
                None => row.extend(std::iter::repeat_n(String::new(), cols.len())),
            }
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_plot_data(records: &[RunRecord], path: &Path) -> Result<()> {
    write_plot_data(records, BufWriter::new(File::create(path)?))
}

/// Smallest data fit per achieved rank among records of `kind`, ascending
/// in rank.
pub fn min_fit_by_rank(records: &[RunRecord], kind: &str) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = Vec::new();
    for r in records.iter().filter(|r| r.reg_kind == kind && r.data_fit.is_finite()) {
        match out.iter_mut().find(|(k, _)| *k == r.rank) {
            Some(e) => e.1 = e.1.min(r.data_fit),
            None => out.push((r.rank, r.data_fit)),
        }
    }
    out.sort_by_key(|e| e.0);
    out
}

/// Largest spread of data fit among `kind` records sharing a rank.
pub fn max_fit_spread_within_rank(records: &[RunRecord], kind: &str) -> f64 {
    let mut spread = 0.0f64;
    for (rank, _) in min_fit_by_rank(records, kind) {
        let fits: Vec<f64> = records
            .iter()
            .filter(|r| r.reg_kind == kind && r.rank == rank && r.data_fit.is_finite())
            .map(|r| r.data_fit)
            .collect();
        let lo = fits.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = fits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        spread = spread.max(hi - lo);
    }
    spread
}
