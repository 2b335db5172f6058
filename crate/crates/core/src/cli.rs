//! The `lowrank` command line.
//!
//! Every subcommand takes its settings from built-in defaults, then an
//! optional `--config` file of `key = value` lines, then flags; later
//! sources win. The resolved settings are printed first, in config-file
//! syntax, so any run can be replayed from its log.
//!
//! Exit codes: 0 success, 1 usage error, 2 numerical failure (including
//! non-convergence under `--strict`).

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::certificates::{self, NoiseTarget};
use crate::envelopes::Regularizer;
use crate::error::Error;
use crate::experiments::{self, BiasSpec, NoiseSweepSpec, Scale, SweepSpec, DEFAULT_SEED};
use crate::io;
use crate::problem::{self, NoiseSpec, RngSeed};
use crate::solvers::{self, SolveConfig, SolveResult};
use crate::spectral::{self, Matrix};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegKind {
    MuRank,
    FixedRank,
    Nuclear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    PaperFig1,
    PaperFig2,
    PaperFig3,
}

impl Preset {
    fn name(self) -> &'static str {
        match self {
            Preset::PaperFig1 => "paper-fig1",
            Preset::PaperFig2 => "paper-fig2",
            Preset::PaperFig3 => "paper-fig3",
        }
    }
}

/// All settings a run can take. `None` means neither the config file nor a
/// flag supplied the key and no default applies.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    pub instance: Option<PathBuf>,
    pub op: Option<PathBuf>,
    pub x0: Option<PathBuf>,
    pub x: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub plot: Option<PathBuf>,
    pub reg: Option<RegKind>,
    pub mu: Option<f64>,
    pub k: Option<usize>,
    pub lambda: Option<f64>,
    pub rho: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub restarts: Option<usize>,
    pub seed: Option<u64>,
    pub preset: Option<Preset>,
    pub scale: Option<Scale>,
    pub strict: Option<bool>,
    pub noise_std: Option<f64>,
    pub noise_norm: Option<f64>,
    pub instances: Option<usize>,
}

/// Keys accepted in config files, in print order.
pub const KEYS: [&str; 21] = [
    "instance", "op", "x0", "x", "reg", "mu", "k", "lambda", "rho", "tol", "max_iter", "restarts", "seed", "preset",
    "scale", "noise_std", "noise_norm", "instances", "out", "plot", "strict",
];

fn parse_num<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T, String> {
    raw.parse().map_err(|_| format!("`{key}` expects a number, got `{raw}`"))
}

fn positive(key: &str, raw: &str) -> Result<f64, String> {
    let v: f64 = parse_num(key, raw)?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{key}` must be positive, got {raw}"))
    }
}

fn non_negative(key: &str, raw: &str) -> Result<f64, String> {
    let v: f64 = parse_num(key, raw)?;
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{key}` must be non-negative, got {raw}"))
    }
}

fn at_least_one(key: &str, raw: &str) -> Result<usize, String> {
    match parse_num::<usize>(key, raw)? {
        0 => Err(format!("`{key}` must be at least 1")),
        v => Ok(v),
    }
}

fn path(key: &str, raw: &str) -> Result<PathBuf, String> {
    if raw.is_empty() {
        Err(format!("`{key}` needs a path"))
    } else {
        Ok(PathBuf::from(raw))
    }
}

impl Settings {
    /// Parses and range-checks one value.
    pub fn set(&mut self, key: &str, raw: &str) -> Result<(), String> {
        let raw = raw.trim();
        match key {
            "instance" => self.instance = Some(path(key, raw)?),
            "op" => self.op = Some(path(key, raw)?),
            "x0" => self.x0 = Some(path(key, raw)?),
            "x" => self.x = Some(path(key, raw)?),
            "out" => self.out = Some(path(key, raw)?),
            "plot" => self.plot = Some(path(key, raw)?),
            "reg" => {
                self.reg = Some(match raw {
                    "murank" => RegKind::MuRank,
                    "fixedrank" => RegKind::FixedRank,
                    "nuclear" => RegKind::Nuclear,
                    _ => return Err(format!("`reg` must be murank, fixedrank or nuclear, got `{raw}`")),
                })
            }
            "mu" => self.mu = Some(positive(key, raw)?),
            "k" => self.k = Some(at_least_one(key, raw)?),
            "lambda" => self.lambda = Some(positive(key, raw)?),
            "rho" => {
                let v: f64 = parse_num(key, raw)?;
                if !(v > 2.0 && v.is_finite()) {
                    return Err(format!("`rho` must exceed 2, got {raw}"));
                }
                self.rho = Some(v);
            }
            "tol" => self.tol = Some(positive(key, raw)?),
            "max_iter" => self.max_iter = Some(at_least_one(key, raw)?),
            "restarts" => self.restarts = Some(at_least_one(key, raw)?),
            "seed" => self.seed = Some(parse_num(key, raw)?),
            "preset" => {
                self.preset = Some(match raw {
                    "paper-fig1" => Preset::PaperFig1,
                    "paper-fig2" => Preset::PaperFig2,
                    "paper-fig3" => Preset::PaperFig3,
                    _ => return Err(format!("`preset` must be paper-fig1, paper-fig2 or paper-fig3, got `{raw}`")),
                })
            }
            "scale" => {
                self.scale = Some(match raw {
                    "desk" => Scale::Desk,
                    "paper" => Scale::Paper,
                    _ => return Err(format!("`scale` must be desk or paper, got `{raw}`")),
                })
            }
            "strict" => {
                self.strict = Some(match raw {
                    "true" | "1" | "yes" => true,
                    "false" | "0" | "no" => false,
                    _ => return Err(format!("`strict` must be true or false, got `{raw}`")),
                })
            }
            "noise_std" => self.noise_std = Some(non_negative(key, raw)?),
            "noise_norm" => self.noise_norm = Some(non_negative(key, raw)?),
            "instances" => self.instances = Some(at_least_one(key, raw)?),
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Value of `key` in config-file syntax.
    pub fn get(&self, key: &str) -> Option<String> {
        let p = |v: &Option<PathBuf>| v.as_ref().map(|p| p.display().to_string());
        let n = |v: Option<f64>| v.map(|x| x.to_string());
        let u = |v: Option<usize>| v.map(|x| x.to_string());
        match key {
            "instance" => p(&self.instance),
            "op" => p(&self.op),
            "x0" => p(&self.x0),
            "x" => p(&self.x),
            "out" => p(&self.out),
            "plot" => p(&self.plot),
            "reg" => self.reg.map(|r| {
                match r {
                    RegKind::MuRank => "murank",
                    RegKind::FixedRank => "fixedrank",
                    RegKind::Nuclear => "nuclear",
                }
                .to_string()
            }),
            "mu" => n(self.mu),
            "k" => u(self.k),
            "lambda" => n(self.lambda),
            "rho" => n(self.rho),
            "tol" => n(self.tol),
            "max_iter" => u(self.max_iter),
            "restarts" => u(self.restarts),
            "seed" => self.seed.map(|s| s.to_string()),
            "preset" => self.preset.map(|p| p.name().to_string()),
            "scale" => self.scale.map(|s| match s {
                Scale::Desk => "desk".to_string(),
                Scale::Paper => "paper".to_string(),
            }),
            "strict" => self.strict.map(|s| s.to_string()),
            "noise_std" => n(self.noise_std),
            "noise_norm" => n(self.noise_norm),
            "instances" => u(self.instances),
            _ => None,
        }
    }
}

/// Failure of a config file line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: usize,
    pub msg: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config line {}: {}", self.line, self.msg)
    }
}

/// Parses `key = value` lines; `#` starts a comment, blank lines are
/// skipped, a repeated key replaces the earlier value. Dashes in keys are
/// read as underscores.
pub fn parse_config(text: &str) -> Result<Settings, ConfigError> {
    let mut s = Settings::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body.split_once('=').ok_or_else(|| ConfigError {
            line,
            msg: format!("expected `key = value`, found `{body}`"),
        })?;
        let key = key.trim().replace('-', "_");
        s.set(&key, value).map_err(|msg| ConfigError { line, msg })?;
    }
    Ok(s)
}

fn key_help(key: &str) -> &'static str {
    match key {
        "instance" => "Instance file (operator, data, optional ground truth)",
        "op" => "Operator file",
        "x0" => "Ground-truth matrix file",
        "x" => "Candidate solution matrix file",
        "reg" => "Regularizer: murank, fixedrank or nuclear",
        "mu" => "Rank-penalty weight",
        "k" => "Rank",
        "lambda" => "Nuclear-norm weight",
        "rho" => "Prox weight of the splitting step (> 2)",
        "tol" => "Relative fixed-point tolerance",
        "max_iter" => "Iteration cap",
        "restarts" => "Number of starts",
        "seed" => "Random seed",
        "out" => "Output path",
        "plot" => "Path for per-curve plot data",
        "preset" => "Study preset: paper-fig1, paper-fig2 or paper-fig3",
        "scale" => "Study size: desk or paper",
        "noise_std" => "Entrywise noise standard deviation",
        "noise_norm" => "Exact noise norm",
        "instances" => "Number of noise draws",
        _ => "",
    }
}

macro_rules! flag_set {
    ($name:ident, strict: $strict:tt, [$($field:ident),*]) => {
        #[derive(Args, Debug)]
        pub struct $name {
            $(
                #[arg(long, value_name = "VALUE", help = key_help(stringify!($field)))]
                $field: Option<String>,
            )*
            /// Treat non-convergence as an error (exit code 2).
            #[arg(long, hide = !$strict)]
            strict: bool,
        }

        impl $name {
            fn pairs(&self) -> Vec<(&'static str, &str)> {
                let mut v = Vec::new();
                $( if let Some(s) = &self.$field { v.push((stringify!($field), s.as_str())); } )*
                if self.strict { v.push(("strict", "true")); }
                v
            }

            fn keys() -> Vec<&'static str> {
                let mut v = vec![$(stringify!($field)),*];
                if $strict { v.push("strict"); }
                v
            }
        }
    };
}

flag_set!(SolveFlags, strict: true, [instance, reg, mu, k, lambda, rho, tol, max_iter, restarts, seed, out]);
flag_set!(CertifyFlags, strict: false, [instance, x, reg, mu, k, restarts, seed]);
flag_set!(LripFlags, strict: false, [op, instance, k, restarts, seed]);
flag_set!(GenFlags, strict: false, [op, x0, scale, k, noise_std, noise_norm, seed, out]);
flag_set!(SweepRankFlags, strict: true, [preset, scale, seed, noise_std, rho, tol, max_iter, out, plot]);
flag_set!(SweepNoiseFlags, strict: true, [preset, scale, seed, rho, tol, max_iter, out, plot]);
flag_set!(BiasFlags, strict: true, [preset, scale, seed, noise_norm, instances, rho, tol, max_iter, out]);

#[derive(Parser, Debug)]
#[command(name = "lowrank", version, about = "Low-rank recovery with quadratic-envelope regularizers")]
struct Cli {
    /// File of `key = value` settings; flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one instance and write the solution matrix.
    Solve(SolveFlags),
    /// Check stationarity and the optimality conditions of a solution.
    Certify(CertifyFlags),
    /// Estimate the lower restricted isometry defect of an operator.
    Lrip(LripFlags),
    /// Rank against data fit over a weight grid.
    SweepRank(SweepRankFlags),
    /// Data fit and ground-truth distance against noise level.
    SweepNoise(SweepNoiseFlags),
    /// Entrywise bias over repeated noise draws.
    Bias(BiasFlags),
    /// Generate a random instance file.
    Gen(GenFlags),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Solve(_) => "solve",
            Command::Certify(_) => "certify",
            Command::Lrip(_) => "lrip",
            Command::SweepRank(_) => "sweep-rank",
            Command::SweepNoise(_) => "sweep-noise",
            Command::Bias(_) => "bias",
            Command::Gen(_) => "gen",
        }
    }

    fn pairs(&self) -> Vec<(&'static str, &str)> {
        match self {
            Command::Solve(f) => f.pairs(),
            Command::Certify(f) => f.pairs(),
            Command::Lrip(f) => f.pairs(),
            Command::SweepRank(f) => f.pairs(),
            Command::SweepNoise(f) => f.pairs(),
            Command::Bias(f) => f.pairs(),
            Command::Gen(f) => f.pairs(),
        }
    }

    fn keys(&self) -> Vec<&'static str> {
        match self {
            Command::Solve(_) => SolveFlags::keys(),
            Command::Certify(_) => CertifyFlags::keys(),
            Command::Lrip(_) => LripFlags::keys(),
            Command::SweepRank(_) => SweepRankFlags::keys(),
            Command::SweepNoise(_) => SweepNoiseFlags::keys(),
            Command::Bias(_) => BiasFlags::keys(),
            Command::Gen(_) => GenFlags::keys(),
        }
    }

    /// Fills keys no source supplied.
    fn apply_defaults(&self, s: &mut Settings) {
        let scale = *s.scale.get_or_insert(Scale::Desk);
        s.seed.get_or_insert(DEFAULT_SEED);
        let solve = SolveConfig::default();
        s.rho.get_or_insert(solve.rho);
        s.tol.get_or_insert(solve.tol);
        s.max_iter.get_or_insert(solve.max_iter);
        s.strict.get_or_insert(false);
        match self {
            Command::Solve(_) => {
                s.restarts.get_or_insert(1);
            }
            Command::Certify(_) => {
                s.restarts.get_or_insert(experiments::DELTA_RESTARTS);
            }
            Command::Lrip(_) => {
                s.restarts.get_or_insert(20);
            }
            Command::Gen(_) => {
                if s.noise_norm.is_none() {
                    s.noise_std.get_or_insert(0.1);
                }
            }
            Command::SweepRank(_) => {
                s.preset.get_or_insert(Preset::PaperFig1);
                s.noise_std.get_or_insert(0.1);
            }
            Command::SweepNoise(_) => {
                s.preset.get_or_insert(Preset::PaperFig2);
            }
            Command::Bias(_) => {
                s.preset.get_or_insert(Preset::PaperFig3);
                s.noise_norm.get_or_insert(scale.noise_scale());
                s.instances.get_or_insert(100);
            }
        }
    }
}

/// Failure classified by exit code.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Numerical(String),
}

fn flag_name(key: &str) -> String {
    format!("--{}", key.replace('_', "-"))
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parameter { name, reason } => Failure::Usage(format!("{}: {reason}", flag_name(name))),
            Error::NonFinite
            | Error::SvdNoConvergence
            | Error::Singular
            | Error::Bracket { .. }
            | Error::SpectralLength { .. }
            | Error::OracleDimension(_) => Failure::Numerical(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn io_err(key: &str, p: &Path, e: Error) -> Failure {
    match e {
        Error::Io(_) | Error::Parse { .. } | Error::Shape { .. } => usage(format!("{} {}: {e}", flag_name(key), p.display())),
        other => other.into(),
    }
}

fn require<'a, T>(v: &'a Option<T>, key: &str, cmd: &str) -> Result<&'a T, Failure> {
    v.as_ref().ok_or_else(|| usage(format!("{} is required by `{cmd}`", flag_name(key))))
}

type Run = Result<i32, Failure>;

/// Runs the command line with diagnostics on standard error.
pub fn run(args: &[String], out: &mut dyn Write) -> i32 {
    let mut err = std::io::stderr().lock();
    run_with(args, out, &mut err)
}

/// Runs the command line; `args[0]` is the program name.
pub fn run_with(args: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return EXIT_OK;
            }
            let text = e.to_string();
            let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("usage error");
            let _ = writeln!(err, "{first}");
            return EXIT_USAGE;
        }
    };
    match execute(&cli, out, err) {
        Ok(code) => code,
        Err(Failure::Usage(m)) => {
            let _ = writeln!(err, "error: {m}");
            EXIT_USAGE
        }
        Err(Failure::Numerical(m)) => {
            let _ = writeln!(err, "error: {m}");
            EXIT_NUMERICAL
        }
    }
}

fn resolve(cli: &Cli) -> Result<Settings, Failure> {
    let mut s = match &cli.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| usage(format!("--config {}: {e}", p.display())))?;
            parse_config(&text).map_err(|e| usage(format!("--config {}: {e}", p.display())))?
        }
        None => Settings::default(),
    };
    for (key, raw) in cli.command.pairs() {
        s.set(key, raw).map_err(|m| usage(format!("{}: {m}", flag_name(key))))?;
    }
    cli.command.apply_defaults(&mut s);
    Ok(s)
}

fn print_settings(out: &mut dyn Write, cmd: &Command, s: &Settings) -> std::io::Result<()> {
    writeln!(out, "# lowrank {}", cmd.name())?;
    let keys = cmd.keys();
    for key in KEYS.iter().filter(|k| keys.contains(k)) {
        if let Some(v) = s.get(key) {
            writeln!(out, "{key} = {v}")?;
        }
    }
    Ok(())
}

fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Run {
    let s = resolve(cli)?;
    print_settings(out, &cli.command, &s).map_err(Error::from)?;
    let code = match &cli.command {
        Command::Solve(_) => cmd_solve(&s, out, err),
        Command::Certify(_) => cmd_certify(&s, out),
        Command::Lrip(_) => cmd_lrip(&s, out),
        Command::Gen(_) => cmd_gen(&s, out),
        Command::SweepRank(_) => cmd_sweep_rank(&s, out, err),
        Command::SweepNoise(_) => cmd_sweep_noise(&s, out, err),
        Command::Bias(_) => cmd_bias(&s, out, err),
    }?;
    out.flush().map_err(Error::from)?;
    Ok(code)
}

fn regularizer(s: &Settings, cmd: &str) -> Result<Regularizer, Failure> {
    Ok(match require(&s.reg, "reg", cmd)? {
        RegKind::MuRank => Regularizer::mu_rank(*require(&s.mu, "mu", cmd)?)?,
        RegKind::FixedRank => Regularizer::fixed_rank(*require(&s.k, "k", cmd)?)?,
        RegKind::Nuclear => Regularizer::nuclear(*require(&s.lambda, "lambda", cmd)?)?,
    })
}

fn solve_config(s: &Settings) -> SolveConfig {
    let d = SolveConfig::default();
    SolveConfig {
        rho: s.rho.unwrap_or(d.rho),
        tol: s.tol.unwrap_or(d.tol),
        max_iter: s.max_iter.unwrap_or(d.max_iter),
        ..d
    }
}

fn load_instance(s: &Settings, cmd: &str) -> Result<problem::ProblemInstance, Failure> {
    let p = require(&s.instance, "instance", cmd)?;
    io::read_instance(p).map_err(|e| io_err("instance", p, e))
}

/// Reports non-convergence; an error under `strict`.
fn convergence_gate(s: &Settings, unconverged: usize, what: &str, err: &mut dyn Write) -> Run {
    if unconverged == 0 {
        return Ok(EXIT_OK);
    }
    let msg = format!("{unconverged} {what} did not converge within {} iterations", s.max_iter.unwrap_or(0));
    if s.strict == Some(true) {
        return Err(Failure::Numerical(msg));
    }
    let _ = writeln!(err, "warning: {msg}");
    Ok(EXIT_OK)
}

fn cmd_solve(s: &Settings, out: &mut dyn Write, err: &mut dyn Write) -> Run {
    let inst = load_instance(s, "solve")?;
    let reg = regularizer(s, "solve")?;
    let (n1, n2) = inst.shape();
    reg.validate(n1.min(n2))?;
    let (norm_inst, norm_reg) = problem::normalize(&inst, &reg)?;
    let cfg = solve_config(s);
    let mut result = solvers::solve(&norm_inst, &norm_reg, &cfg)?;
    let restarts = s.restarts.unwrap_or(1);
    if restarts > 1 {
        let seed = s.seed.unwrap_or(DEFAULT_SEED);
        let init_std = inst.b().norm() / ((n1 * n2) as f64).sqrt();
        let others = solvers::solve_multistart(&norm_inst, &norm_reg, &cfg, restarts - 1, init_std.max(1e-3), seed)?;
        for r in others {
            if r.objective() < result.objective() {
                result = r;
            }
        }
    }
    let scale = norm_inst.normalization().scale;
    let w = |out: &mut dyn Write, r: &SolveResult| -> std::io::Result<()> {
        writeln!(out, "normalization_scale={scale}")?;
        writeln!(out, "converged={}", r.converged)?;
        writeln!(out, "iterations={}", r.iterations)?;
        writeln!(out, "rank={}", r.rank)?;
        writeln!(out, "objective={}", r.objective() / (scale * scale))?;
        writeln!(out, "fixed_point_residual={}", r.fixed_point_residual)?;
        Ok(())
    };
    w(out, &result).map_err(Error::from)?;
    writeln!(out, "data_fit={}", inst.data_fit(&result.x)?).map_err(Error::from)?;
    if let Some(g) = inst.ground_truth() {
        writeln!(out, "gt_dist={}", (&result.x - &g.x0).norm()).map_err(Error::from)?;
    }
    if let Some(p) = &s.out {
        io::write_matrix(p, &result.x).map_err(|e| io_err("out", p, e))?;
        writeln!(out, "wrote={}", p.display()).map_err(Error::from)?;
    }
    convergence_gate(s, usize::from(!result.converged), "solve", err)
}

/// Order at which the isometry defect enters the certificate: twice the
/// rank bound of the candidate.
fn delta_order(reg: &Regularizer, x: &Matrix, n: usize) -> Result<usize, Failure> {
    let r = match reg {
        Regularizer::FixedRank { k } => *k,
        _ => spectral::numerical_rank(&spectral::singular_values(x)?).max(1),
    };
    Ok((2 * r).min(n))
}

fn cmd_certify(s: &Settings, out: &mut dyn Write) -> Run {
    let inst = load_instance(s, "certify")?;
    let xp = require(&s.x, "x", "certify")?;
    let x = io::read_matrix(xp).map_err(|e| io_err("x", xp, e))?;
    if x.shape() != inst.shape() {
        return Err(usage(format!("--x {}: matrix is {}x{}, instance expects {:?}", xp.display(), x.nrows(), x.ncols(), inst.shape())));
    }
    let reg = regularizer(s, "certify")?;
    if let Regularizer::Nuclear { .. } = reg {
        return Err(usage("--reg: certificates exist for murank and fixedrank only"));
    }
    let (n1, n2) = inst.shape();
    reg.validate(n1.min(n2))?;
    let (norm_inst, norm_reg) = problem::normalize(&inst, &reg)?;
    let order = delta_order(&reg, &x, n1.min(n2))?;
    let delta = certificates::estimate_delta(
        norm_inst.op(),
        order,
        s.restarts.unwrap_or(experiments::DELTA_RESTARTS),
        s.seed.unwrap_or(DEFAULT_SEED),
    )?;
    let (report, target) = match norm_reg {
        Regularizer::MuRank { mu } => (certificates::check_theorem_murank(&norm_inst, &x, mu, delta)?, NoiseTarget::Penalty { mu }),
        Regularizer::FixedRank { k } => (certificates::check_theorem_fixedrank(&norm_inst, &x, k, delta)?, NoiseTarget::FixedRank { k }),
        Regularizer::Nuclear { .. } => unreachable!("rejected above"),
    };
    let mut text = format!("normalization_scale={}\ndelta_order={order}\n{report}", norm_inst.normalization().scale);
    if norm_inst.ground_truth().is_some() {
        let noise = certificates::check_noise_regime(&norm_inst, target, delta.delta, Some(&x))?;
        for line in noise.to_string().lines() {
            text.push_str(&format!("noise.{line}\n"));
        }
    }
    out.write_all(text.as_bytes()).map_err(Error::from)?;
    Ok(EXIT_OK)
}

fn cmd_lrip(s: &Settings, out: &mut dyn Write) -> Run {
    let op = match (&s.op, &s.instance) {
        (Some(p), None) => io::read_operator(p).map_err(|e| io_err("op", p, e))?,
        (None, Some(p)) => io::read_instance(p).map_err(|e| io_err("instance", p, e))?.op().clone(),
        (Some(_), Some(_)) => return Err(usage("--op and --instance are mutually exclusive")),
        (None, None) => return Err(usage("--op or --instance is required by `lrip`")),
    };
    let k = *require(&s.k, "k", "lrip")?;
    let d = certificates::estimate_delta(&op, k, s.restarts.unwrap_or(20), s.seed.unwrap_or(DEFAULT_SEED))?;
    writeln!(out, "operator_norm={}\nk={k}\ndelta={}\nprovenance={}", op.norm(), d.delta, d.provenance).map_err(Error::from)?;
    Ok(EXIT_OK)
}

fn cmd_gen(s: &Settings, out: &mut dyn Write) -> Run {
    let scale = s.scale.unwrap_or(Scale::Desk);
    let seed = s.seed.unwrap_or(DEFAULT_SEED);
    let dest = require(&s.out, "out", "gen")?;
    let spec = experiments::InstanceSpec::for_scale(scale);
    let op = match &s.op {
        Some(p) => io::read_operator(p).map_err(|e| io_err("op", p, e))?,
        None => spec.operator(seed)?,
    };
    let (n1, n2) = op.shape();
    let x0 = match &s.x0 {
        Some(p) => {
            let x = io::read_matrix(p).map_err(|e| io_err("x0", p, e))?;
            if x.shape() != (n1, n2) {
                return Err(usage(format!("--x0 {}: matrix is {}x{}, operator expects {n1}x{n2}", p.display(), x.nrows(), x.ncols())));
            }
            x
        }
        None => {
            let k = s.k.unwrap_or(spec.k0.min(n1.min(n2)));
            problem::gen_low_rank(n1, n2, k, spec.x0_std, RngSeed::new(seed, 1))?
        }
    };
    let noise = match (s.noise_std, s.noise_norm) {
        (Some(_), Some(_)) => return Err(usage("--noise-std and --noise-norm are mutually exclusive")),
        (_, Some(n)) => NoiseSpec::Norm(n),
        (Some(v), None) => NoiseSpec::Std(v),
        (None, None) => NoiseSpec::None,
    };
    let inst = problem::gen_instance(op, x0, noise, RngSeed::new(seed, 2))?;
    io::write_instance(dest, &inst).map_err(|e| io_err("out", dest, e))?;
    let g = inst.ground_truth().expect("generated with ground truth");
    writeln!(
        out,
        "m={}\nn1={n1}\nn2={n2}\nrank={}\nnoise_norm={}\noperator_norm={}\nwrote={}",
        inst.op().m(),
        g.k0,
        g.eps.norm(),
        inst.op().norm(),
        dest.display()
    )
    .map_err(Error::from)?;
    Ok(EXIT_OK)
}

fn check_preset(s: &Settings, want: Preset, cmd: &str) -> Result<(), Failure> {
    match s.preset {
        Some(p) if p != want => Err(usage(format!("--preset: {} does not apply to `{cmd}` (use {})", p.name(), want.name()))),
        _ => Ok(()),
    }
}

fn emit_records(s: &Settings, records: &[experiments::RunRecord], out: &mut dyn Write) -> Result<(), Failure> {
    match &s.out {
        Some(p) => {
            experiments::emit_csv(records, p).map_err(|e| io_err("out", p, e))?;
            writeln!(out, "wrote={}", p.display()).map_err(Error::from)?;
        }
        None => experiments::write_records(records, &mut *out)?,
    }
    if let Some(p) = &s.plot {
        experiments::emit_plot_data(records, p).map_err(|e| io_err("plot", p, e))?;
        writeln!(out, "wrote={}", p.display()).map_err(Error::from)?;
    }
    Ok(())
}

fn summarize(records: &[experiments::RunRecord], out: &mut dyn Write) -> Result<usize, Failure> {
    let mut kinds: Vec<&str> = records.iter().map(|r| r.reg_kind.as_str()).collect();
    kinds.dedup();
    kinds.sort_unstable();
    kinds.dedup();
    for kind in kinds {
        for (rank, fit) in experiments::min_fit_by_rank(records, kind) {
            writeln!(out, "min_fit.{kind}.rank{rank}={fit}").map_err(Error::from)?;
        }
    }
    let unconverged = records.iter().filter(|r| !r.converged).count();
    writeln!(out, "records={}\nunconverged={unconverged}", records.len()).map_err(Error::from)?;
    Ok(unconverged)
}

fn cmd_sweep_rank(s: &Settings, out: &mut dyn Write, err: &mut dyn Write) -> Run {
    check_preset(s, Preset::PaperFig1, "sweep-rank")?;
    let mut spec = SweepSpec::preset(s.scale.unwrap_or(Scale::Desk), s.seed.unwrap_or(DEFAULT_SEED));
    spec.noise = NoiseSpec::Std(s.noise_std.unwrap_or(0.1));
    spec.solve = solve_config(s);
    let records = experiments::run_rank_vs_fit(&spec)?;
    emit_records(s, &records, out)?;
    let n = summarize(&records, out)?;
    convergence_gate(s, n, "solves", err)
}

fn cmd_sweep_noise(s: &Settings, out: &mut dyn Write, err: &mut dyn Write) -> Run {
    check_preset(s, Preset::PaperFig2, "sweep-noise")?;
    let mut spec = NoiseSweepSpec::preset(s.scale.unwrap_or(Scale::Desk), s.seed.unwrap_or(DEFAULT_SEED));
    spec.solve = solve_config(s);
    let records = experiments::run_noise_sweep(&spec)?;
    emit_records(s, &records, out)?;
    let n = summarize(&records, out)?;
    convergence_gate(s, n, "solves", err)
}

fn cmd_bias(s: &Settings, out: &mut dyn Write, err: &mut dyn Write) -> Run {
    check_preset(s, Preset::PaperFig3, "bias")?;
    let scale = s.scale.unwrap_or(Scale::Desk);
    let mut spec = BiasSpec::preset(scale, s.seed.unwrap_or(DEFAULT_SEED));
    spec.noise_norm = s.noise_norm.unwrap_or(spec.noise_norm);
    spec.instances = s.instances.unwrap_or(spec.instances);
    spec.solve = solve_config(s);
    let summary = experiments::run_bias_experiment(&spec)?;
    match &s.out {
        Some(p) => {
            experiments::emit_bias_csv(&summary, p).map_err(|e| io_err("out", p, e))?;
            writeln!(out, "wrote={}", p.display()).map_err(Error::from)?;
        }
        None => experiments::write_bias(&summary, &mut *out)?,
    }
    for line in summary.aggregate_lines() {
        writeln!(out, "{line}").map_err(Error::from)?;
    }
    convergence_gate(s, summary.unconverged_env, "envelope solves", err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parsing() {
        assert_eq!(parse_config("").unwrap(), Settings::default());
        assert_eq!(parse_config("# only a comment\n\n").unwrap(), Settings::default());
        let s = parse_config("mu = 1\nmu = 2.5 # later wins\nmax-iter = 7\nreg=murank\n").unwrap();
        assert_eq!(s.mu, Some(2.5));
        assert_eq!(s.max_iter, Some(7));
        assert_eq!(s.reg, Some(RegKind::MuRank));
        let e = parse_config("rho = 3\nmu = -1\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(e.msg.contains("mu"));
        let e = parse_config("\nbogus = 1\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(e.msg.contains("bogus"));
        assert_eq!(parse_config("just words").unwrap_err().line, 1);
        assert!(parse_config("rho = 2").is_err());
    }

    #[test]
    fn settings_print_round_trip() {
        let s = parse_config("reg = fixedrank\nk = 3\nscale = paper\npreset = paper-fig2\nstrict = true\nout = a b.csv\n").unwrap();
        let text: String = KEYS.iter().filter_map(|k| s.get(k).map(|v| format!("{k} = {v}\n"))).collect();
        assert_eq!(parse_config(&text).unwrap(), s);
    }

    #[test]
    fn exit_codes() {
        let run = |args: &[&str]| {
            let argv: Vec<String> = std::iter::once("lowrank").chain(args.iter().copied()).map(String::from).collect();
            let (mut o, mut e) = (Vec::new(), Vec::new());
            let code = run_with(&argv, &mut o, &mut e);
            (code, String::from_utf8(o).unwrap(), String::from_utf8(e).unwrap())
        };
        assert_eq!(run(&["--help"]).0, EXIT_OK);
        let (code, _, err) = run(&["solve", "--frobnicate"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("--frobnicate"));
        let (code, _, err) = run(&["solve", "--reg", "murank", "--mu", "1"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("--instance"), "{err}");
        let (code, _, err) = run(&["lrip", "--k", "0", "--op", "x"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("--k"));
        let (code, _, err) = run(&["sweep-rank", "--preset", "paper-fig3"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("--preset"));
    }
}
