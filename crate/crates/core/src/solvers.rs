//! Minimization of `h(X) + ‖𝒜X − b‖²` for the three regularizers.
//!
//! [`solve_fbs`] is forward-backward splitting from a fixed start,
//! [`solve_admm`] the split `X = Y` with the penalty on `Y`. Both require a
//! normalized instance. [`solve_nuclear_bisection`] searches the smallest
//! nuclear weight reaching a target rank, and [`best_rank_k_oracle`] is an
//! independent reference for `min_{rank X ≤ K} ‖𝒜X − b‖`.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::envelopes::{self, ProxParams, Regularizer};
use crate::error::{Error, Result};
use crate::problem::{ProblemInstance, RngSeed};
use crate::spectral::{self, Matrix};

/// Which splitting scheme to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Fbs,
    Admm,
}

/// Solver settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    /// Prox weight of the FBS step, `> max(2, 2‖𝒜‖²)`.
    pub rho: f64,
    pub max_iter: usize,
    /// Relative fixed-point tolerance.
    pub tol: f64,
    /// Starting point; zero when `None`.
    pub init: Option<Matrix>,
    pub algorithm: Algorithm,
    /// ADMM penalty `β`, used as the prox weight of the `Y` step.
    pub admm_penalty: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            rho: 2.1,
            max_iter: 10_000,
            tol: 1e-9,
            init: None,
            algorithm: Algorithm::Fbs,
            admm_penalty: 3.0,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        ProxParams::new(self.rho)?;
        if self.max_iter == 0 {
            return Err(Error::param("max_iter", "must be at least 1"));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::param("tol", format!("must be positive, got {}", self.tol)));
        }
        if self.algorithm == Algorithm::Admm {
            ProxParams::new(self.admm_penalty).map_err(|_| {
                Error::param(
                    "admm_penalty",
                    format!("must exceed 2, got {}", self.admm_penalty),
                )
            })?;
        }
        Ok(())
    }
}

/// Output of a solve. Non-convergence is reported here, never raised.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub x: Matrix,
    /// `(I − 𝒜*𝒜)X + 𝒜*b` at the returned `x`.
    pub z: Matrix,
    pub iterations: usize,
    pub converged: bool,
    /// Objective at the start point and after every iteration.
    pub objective_trace: Vec<f64>,
    /// `‖X_{k+1} − X_k‖` of the last iteration (ADMM: primal residual).
    pub fixed_point_residual: f64,
    pub rank: usize,
}

impl SolveResult {
    pub fn objective(&self) -> f64 {
        *self.objective_trace.last().unwrap_or(&f64::NAN)
    }
}

fn check_ready(inst: &ProblemInstance, reg: &Regularizer, cfg: &SolveConfig) -> Result<()> {
    cfg.validate()?;
    let (n1, n2) = inst.shape();
    reg.validate(n1.min(n2))?;
    let norm = inst.op().norm();
    if norm >= 1.0 {
        return Err(Error::Unnormalized { norm });
    }
    if cfg.rho <= 2.0 * norm * norm {
        return Err(Error::param("rho", "must exceed 2‖A‖²"));
    }
    if let Some(x) = &cfg.init {
        if x.shape() != (n1, n2) {
            return Err(Error::shape(
                format!("{n1}x{n2} initial point"),
                format!("{}x{}", x.nrows(), x.ncols()),
            ));
        }
    }
    Ok(())
}

/// `h(X) + ‖𝒜X − b‖²` with `h` the (relaxed) regularizer.
pub fn objective_value(inst: &ProblemInstance, reg: &Regularizer, x: &Matrix) -> Result<f64> {
    Ok(envelopes::reg_value_matrix(x, reg)? + inst.data_fit(x)?)
}

/// The unrelaxed objective: `μ·rank(X)`, the rank-`K` indicator (`+∞`
/// outside) or `λ‖X‖_*`, plus the data fit.
pub fn unrelaxed_objective(inst: &ProblemInstance, reg: &Regularizer, x: &Matrix) -> Result<f64> {
    let sigma = spectral::singular_values(x)?;
    Ok(envelopes::unrelaxed_value_vec(&sigma, reg) + inst.data_fit(x)?)
}

fn finish(
    inst: &ProblemInstance,
    x: Matrix,
    iterations: usize,
    converged: bool,
    objective_trace: Vec<f64>,
    fixed_point_residual: f64,
) -> Result<SolveResult> {
    let z = inst.z_point(&x)?;
    let rank = spectral::numerical_rank(&spectral::singular_values(&x)?);
    Ok(SolveResult {
        x,
        z,
        iterations,
        converged,
        objective_trace,
        fixed_point_residual,
        rank,
    })
}

/// One forward-backward step `prox(X − 2𝒜*(𝒜X − b)/ρ)`.
pub fn fbs_step(inst: &ProblemInstance, reg: &Regularizer, x: &Matrix, p: ProxParams) -> Result<Matrix> {
    let grad = inst.fit_gradient(x)?;
    let xhat = x - grad / p.rho();
    envelopes::reg_prox_matrix(&xhat, reg, p)
}

/// Forward-backward splitting.
///
/// Stops when `‖X_{k+1} − X_k‖ ≤ tol·max(1, ‖X_k‖)` or after `max_iter`
/// steps. The objective never increases because `ρ > 2‖𝒜‖²`.
pub fn solve_fbs(inst: &ProblemInstance, reg: &Regularizer, cfg: &SolveConfig) -> Result<SolveResult> {
    check_ready(inst, reg, cfg)?;
    let (n1, n2) = inst.shape();
    let p = ProxParams::new(cfg.rho)?;
    let mut x = cfg.init.clone().unwrap_or_else(|| Matrix::zeros(n1, n2));
    let mut trace = vec![objective_value(inst, reg, &x)?];
    let mut delta = f64::INFINITY;
    for it in 1..=cfg.max_iter {
        let next = fbs_step(inst, reg, &x, p)?;
        delta = (&next - &x).norm();
        let scale = x.norm().max(1.0);
        x = next;
        trace.push(objective_value(inst, reg, &x)?);
        if delta <= cfg.tol * scale {
            return finish(inst, x, it, true, trace, delta);
        }
    }
    finish(inst, x, cfg.max_iter, false, trace, delta)
}

/// ADMM on `min h(Y) + ‖𝒜X − b‖²` subject to `X = Y`, scaled dual `U`.
///
/// The `X` step solves `(2𝒜*𝒜 + βI) x = 2𝒜*b + β(y − u)` with a Cholesky
/// factor computed once; the `Y` step is the prox with weight `β`. Stops
/// when the primal residual `‖X − Y‖` and the dual residual `β‖Y − Y_prev‖`
/// are both below `tol·max(1, ‖Y‖)`. Returns `Y`.
pub fn solve_admm(inst: &ProblemInstance, reg: &Regularizer, cfg: &SolveConfig) -> Result<SolveResult> {
    check_ready(inst, reg, &SolveConfig {
        algorithm: Algorithm::Admm,
        ..cfg.clone()
    })?;
    let (n1, n2) = inst.shape();
    let beta = cfg.admm_penalty;
    let p = ProxParams::new(beta)?;
    let a = inst.op().dense();
    let n = n1 * n2;
    let system = a.tr_mul(a) * 2.0 + DMatrix::identity(n, n) * beta;
    let chol = Cholesky::new(system).ok_or(Error::Singular)?;
    let atb2 = a.tr_mul(inst.b()) * 2.0;

    let mut y = cfg.init.clone().unwrap_or_else(|| Matrix::zeros(n1, n2));
    let mut u = Matrix::zeros(n1, n2);
    let mut trace = vec![objective_value(inst, reg, &y)?];
    let mut primal = f64::INFINITY;
    for it in 1..=cfg.max_iter {
        let rhs = &atb2 + DVector::from_column_slice((&y - &u).as_slice()) * beta;
        let xv = chol.solve(&rhs);
        let x = Matrix::from_column_slice(n1, n2, xv.as_slice());
        let y_prev = y;
        y = envelopes::reg_prox_matrix(&(&x + &u), reg, p)?;
        u += &x - &y;
        primal = (&x - &y).norm();
        let dual = beta * (&y - &y_prev).norm();
        trace.push(objective_value(inst, reg, &y)?);
        let scale = y.norm().max(1.0);
        if primal <= cfg.tol * scale && dual <= cfg.tol * scale {
            return finish(inst, y, it, true, trace, primal);
        }
    }
    finish(inst, y, cfg.max_iter, false, trace, primal)
}

/// Dispatches on `cfg.algorithm`.
pub fn solve(inst: &ProblemInstance, reg: &Regularizer, cfg: &SolveConfig) -> Result<SolveResult> {
    match cfg.algorithm {
        Algorithm::Fbs => solve_fbs(inst, reg, cfg),
        Algorithm::Admm => solve_admm(inst, reg, cfg),
    }
}

/// Runs `starts` solves from Gaussian initial points (entries of standard
/// deviation `init_std`) in parallel; start `i` draws from stream `i` of
/// `seed`. Results are in start order.
pub fn solve_multistart(
    inst: &ProblemInstance,
    reg: &Regularizer,
    cfg: &SolveConfig,
    starts: usize,
    init_std: f64,
    seed: u64,
) -> Result<Vec<SolveResult>> {
    let (n1, n2) = inst.shape();
    (0..starts)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngSeed::new(seed, i as u64).rng();
            let init = Matrix::from_fn(n1, n2, |_, _| init_std * rng.sample::<f64, _>(StandardNormal));
            solve(inst, reg, &SolveConfig {
                init: Some(init),
                ..cfg.clone()
            })
        })
        .collect()
}

/// Outcome of [`solve_nuclear_bisection`].
#[derive(Debug, Clone, PartialEq)]
pub struct BisectionResult {
    /// Smallest weight found whose solution has rank at most the target.
    pub lambda: f64,
    pub result: SolveResult,
    /// Every `(λ, rank)` pair evaluated, in evaluation order.
    pub probes: Vec<(f64, usize)>,
}

/// `2‖𝒜*b‖₂`: at or above this weight the nuclear solution is zero.
pub fn nuclear_zero_threshold(inst: &ProblemInstance) -> Result<f64> {
    let atb = inst.op().adjoint(inst.b())?;
    Ok(2.0 * spectral::singular_values(&atb)?.first().copied().unwrap_or(0.0))
}

/// Bisection on the nuclear weight for the smallest `λ` whose solution has
/// rank at most `k_target`, down to a bracket width of `1e-3·λ_hi`.
///
/// Rank need not be monotone in `λ`, so every probe is logged and the
/// returned solution is the one actually verified at the returned weight.
pub fn solve_nuclear_bisection(
    inst: &ProblemInstance,
    k_target: usize,
    bracket: (f64, f64),
    cfg: &SolveConfig,
) -> Result<BisectionResult> {
    let (mut lo, mut hi) = bracket;
    if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::param(
            "bracket",
            format!("need 0 ≤ lo < hi, got ({lo}, {hi})"),
        ));
    }
    let (n1, n2) = inst.shape();
    let mut probes = Vec::new();
    let run = |lambda: f64, probes: &mut Vec<(f64, usize)>| -> Result<SolveResult> {
        let r = solve(inst, &Regularizer::Nuclear { lambda }, cfg)?;
        probes.push((lambda, r.rank));
        Ok(r)
    };
    if k_target >= n1.min(n2) {
        let result = run(lo, &mut probes)?;
        return Ok(BisectionResult {
            lambda: lo,
            result,
            probes,
        });
    }
    let mut best = run(hi, &mut probes)?;
    if best.rank > k_target {
        return Err(Error::Bracket {
            lambda_hi: hi,
            rank: best.rank,
            target: k_target,
            probes,
        });
    }
    let width = 1e-3 * hi;
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        let r = run(mid, &mut probes)?;
        if r.rank <= k_target {
            hi = mid;
            best = r;
        } else {
            lo = mid;
        }
    }
    Ok(BisectionResult {
        lambda: hi,
        result: best,
        probes,
    })
}

/// Output of [`best_rank_k_oracle`].
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub x: Matrix,
    /// `‖𝒜X − b‖₂` (not squared).
    pub residual: f64,
    /// `‖X‖_F` exceeded `1e6` during the search: the infimum is likely not
    /// attained.
    pub norm_blowup: bool,
    /// Closed form (scaled-identity operator) rather than a heuristic.
    pub exact: bool,
    pub iterations: usize,
}

const ORACLE_MAX_ITER: usize = 5000;
const BLOWUP_NORM: f64 = 1e6;

/// Best rank-`K` fit `argmin_{rank X ≤ K} ‖𝒜X − b‖`.
///
/// For `𝒜 = c·vec` this is the truncated SVD of `reshape(b)/c`. Otherwise
/// alternating least squares on `X = LR`, with an extrapolation search on
/// `L` after each sweep, from `restarts` Gaussian starts; the best restart
/// is kept. The heuristic result only upper-bounds the true minimum.
pub fn best_rank_k_oracle(inst: &ProblemInstance, k: usize, restarts: usize, seed: u64) -> Result<OracleResult> {
    let (n1, n2) = inst.shape();
    if k == 0 || k > n1.min(n2) {
        return Err(Error::param("k", format!("must lie in 1..={}, got {k}", n1.min(n2))));
    }
    if let Some(c) = inst.op().identity_scale() {
        let bm = Matrix::from_column_slice(n1, n2, inst.b().as_slice()) / c;
        let s = spectral::svd(&bm)?;
        let mut sigma = s.sigma.as_slice().to_vec();
        sigma[k..].iter_mut().for_each(|v| *v = 0.0);
        let x = s.compose(&sigma);
        let residual = inst.residual(&x)?.norm();
        return Ok(OracleResult {
            x,
            residual,
            norm_blowup: false,
            exact: true,
            iterations: 0,
        });
    }
    let runs: Vec<OracleResult> = (0..restarts.max(1))
        .into_par_iter()
        .map(|r| als_run(inst, k, RngSeed::new(seed, r as u64)))
        .collect::<Result<_>>()?;
    let blowup = runs.iter().any(|r| r.norm_blowup);
    let mut best = runs
        .into_iter()
        .min_by(|a, b| a.residual.total_cmp(&b.residual))
        .expect("at least one restart");
    best.norm_blowup = blowup;
    Ok(best)
}

/// `R ↦ ‖𝒜(LR) − b‖` minimizer for fixed `L`.
fn solve_right(inst: &ProblemInstance, l: &Matrix) -> Result<Matrix> {
    let (_, n2) = inst.shape();
    let r = spectral::lstsq(&inst.op().design_fixed_left(l), inst.b())?;
    Ok(Matrix::from_column_slice(l.ncols(), n2, r.as_slice()))
}

/// `L ↦ ‖𝒜(LR) − b‖` minimizer for fixed `R`.
fn solve_left(inst: &ProblemInstance, r: &Matrix) -> Result<Matrix> {
    let (n1, _) = inst.shape();
    let l = spectral::lstsq(&inst.op().design_fixed_right(r), inst.b())?;
    Ok(Matrix::from_column_slice(n1, r.nrows(), l.as_slice()))
}

fn als_run(inst: &ProblemInstance, k: usize, seed: RngSeed) -> Result<OracleResult> {
    let (n1, _) = inst.shape();
    let bnorm = inst.b().norm();
    let mut rng = seed.rng();
    let mut l = Matrix::from_fn(n1, k, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut r = solve_right(inst, &l)?;
    let mut x = &l * &r;
    let mut fit = inst.data_fit(&x)?;
    let mut blowup = false;
    let mut iterations = 0;
    for it in 1..=ORACLE_MAX_ITER {
        iterations = it;
        let l_old = l.clone();
        l = solve_left(inst, &r)?;
        r = solve_right(inst, &l)?;
        x = &l * &r;
        let mut cur = inst.data_fit(&x)?;
        // variable projection: push L further along the sweep direction and
        // re-solve R while the fit keeps improving
        let dl = &l - &l_old;
        let mut step = 2.0;
        while step <= 1e12 {
            let le = &l_old + &dl * step;
            let re = solve_right(inst, &le)?;
            let xe = &le * &re;
            let fe = inst.data_fit(&xe)?;
            if fe < cur {
                l = le;
                r = re;
                x = xe;
                cur = fe;
                step *= 2.0;
            } else {
                break;
            }
        }
        // keep factors balanced; X is unchanged
        let (lq, rq) = rebalance(&l, &r);
        l = lq;
        r = rq;
        let prev = fit;
        fit = cur;
        if x.norm() > BLOWUP_NORM {
            blowup = true;
            break;
        }
        if fit.sqrt() < 1e-14 * bnorm.max(f64::MIN_POSITIVE) || (prev - fit).abs() < 1e-12 * prev {
            break;
        }
    }
    Ok(OracleResult {
        residual: fit.sqrt(),
        x,
        norm_blowup: blowup,
        exact: false,
        iterations,
    })
}

/// Rescales each rank-one component so that `L` and `R` carry equal norms.
fn rebalance(l: &Matrix, r: &Matrix) -> (Matrix, Matrix) {
    let mut l = l.clone();
    let mut r = r.clone();
    for p in 0..l.ncols() {
        let a = l.column(p).norm();
        let b = r.row(p).norm();
        if a > 0.0 && b > 0.0 {
            let s = (b / a).sqrt();
            l.column_mut(p).scale_mut(s);
            r.row_mut(p).scale_mut(1.0 / s);
        }
    }
    (l, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{gen_gaussian_op, gen_instance, gen_low_rank, normalize, pathological_instance, LinearOp, NoiseSpec};

    fn small_instance(seed: u64, noise: f64) -> ProblemInstance {
        let op = gen_gaussian_op(30, 5, 5, 1.0 / 30f64.sqrt(), RngSeed::new(seed, 0)).unwrap();
        let x0 = gen_low_rank(5, 5, 2, 1.0, RngSeed::new(seed, 1)).unwrap();
        let inst = gen_instance(op, x0, NoiseSpec::Norm(noise), RngSeed::new(seed, 2)).unwrap();
        normalize(&inst, &Regularizer::FixedRank { k: 2 }).unwrap().0
    }

    #[test]
    fn zero_data_stays_at_origin() {
        let op = LinearOp::scaled_identity(0.9, 3, 3).unwrap();
        let inst = ProblemInstance::new(op, DVector::zeros(9)).unwrap();
        for reg in [
            Regularizer::MuRank { mu: 1.0 },
            Regularizer::FixedRank { k: 1 },
            Regularizer::Nuclear { lambda: 0.5 },
        ] {
            let r = solve_fbs(&inst, &reg, &SolveConfig::default()).unwrap();
            assert_eq!(r.iterations, 1);
            assert!(r.converged);
            assert_eq!(r.x, Matrix::zeros(3, 3));
            let a = solve_admm(&inst, &reg, &SolveConfig::default()).unwrap();
            assert_eq!(a.x, Matrix::zeros(3, 3));
        }
    }

    #[test]
    fn refuses_unnormalized_and_bad_config() {
        let op = LinearOp::scaled_identity(1.0, 2, 2).unwrap();
        let inst = ProblemInstance::new(op, DVector::zeros(4)).unwrap();
        let reg = Regularizer::MuRank { mu: 1.0 };
        assert!(matches!(
            solve_fbs(&inst, &reg, &SolveConfig::default()),
            Err(Error::Unnormalized { .. })
        ));
        let inst = small_instance(1, 0.0);
        let bad = SolveConfig {
            rho: 2.0,
            ..SolveConfig::default()
        };
        assert!(solve_fbs(&inst, &reg, &bad).is_err());
    }

    #[test]
    fn fbs_descends_and_is_a_fixed_point() {
        for seed in 0..5 {
            let inst = small_instance(seed, 0.3);
            for reg in [
                Regularizer::MuRank { mu: 0.3 },
                Regularizer::FixedRank { k: 2 },
                Regularizer::Nuclear { lambda: 0.4 },
            ] {
                let cfg = SolveConfig::default();
                let r = solve_fbs(&inst, &reg, &cfg).unwrap();
                assert!(r.converged, "{reg}");
                for w in r.objective_trace.windows(2) {
                    assert!(w[1] <= w[0] + 1e-12);
                }
                let p = ProxParams::new(cfg.rho).unwrap();
                let again = fbs_step(&inst, &reg, &r.x, p).unwrap();
                assert!((again - &r.x).norm() <= 10.0 * cfg.tol * r.x.norm().max(1.0));
                assert_eq!(r.z, inst.z_point(&r.x).unwrap());
            }
        }
    }

    #[test]
    fn relaxed_equals_unrelaxed_at_envelope_solutions() {
        let inst = small_instance(3, 0.2);
        for reg in [Regularizer::MuRank { mu: 0.2 }, Regularizer::FixedRank { k: 2 }] {
            let r = solve_fbs(&inst, &reg, &SolveConfig::default()).unwrap();
            let relaxed = objective_value(&inst, &reg, &r.x).unwrap();
            let plain = unrelaxed_objective(&inst, &reg, &r.x).unwrap();
            assert!((relaxed - plain).abs() < 1e-8, "{reg}: {relaxed} vs {plain}");
        }
        let big = Matrix::from_diagonal(&DVector::from_vec(vec![3.0, 2.0, 0.0, 0.0, 0.0]));
        let reg = Regularizer::MuRank { mu: 1.0 };
        let a = objective_value(&inst, &reg, &big).unwrap();
        let b = unrelaxed_objective(&inst, &reg, &big).unwrap();
        assert!((a - b).abs() < 1e-12);
        let full = Matrix::identity(5, 5);
        assert_eq!(
            unrelaxed_objective(&inst, &Regularizer::FixedRank { k: 2 }, &full).unwrap(),
            f64::INFINITY
        );
    }

    #[test]
    fn nuclear_fbs_matches_halved_step_and_admm() {
        let inst = small_instance(7, 0.5);
        let reg = Regularizer::Nuclear { lambda: 0.3 };
        let cfg = SolveConfig {
            tol: 1e-12,
            max_iter: 100_000,
            ..SolveConfig::default()
        };
        let a = solve_fbs(&inst, &reg, &cfg).unwrap();
        let b = solve_fbs(&inst, &reg, &SolveConfig { rho: 4.2, ..cfg.clone() }).unwrap();
        assert!((a.objective() - b.objective()).abs() < 1e-8);
        let c = solve_admm(&inst, &reg, &cfg).unwrap();
        assert!(c.converged);
        assert!((a.x.clone() - c.x).norm() < 1e-6);
    }

    #[test]
    fn admm_and_fbs_agree_on_murank() {
        let mut agree = 0;
        let trials = 50;
        for seed in 0..trials {
            let inst = small_instance(100 + seed, 0.2);
            let reg = Regularizer::MuRank { mu: 0.2 };
            let cfg = SolveConfig {
                max_iter: 50_000,
                ..SolveConfig::default()
            };
            let f = solve_fbs(&inst, &reg, &cfg).unwrap();
            let a = solve_admm(&inst, &reg, &cfg).unwrap();
            if (f.objective() - a.objective()).abs() < 1e-6 {
                agree += 1;
            }
        }
        assert!(agree * 10 >= trials * 9, "{agree}/{trials}");
    }

    #[test]
    fn multistart_is_ordered_and_deterministic() {
        let inst = small_instance(9, 0.1);
        let reg = Regularizer::FixedRank { k: 2 };
        let a = solve_multistart(&inst, &reg, &SolveConfig::default(), 4, 1.0, 5).unwrap();
        let b = solve_multistart(&inst, &reg, &SolveConfig::default(), 4, 1.0, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 4);
    }

    #[test]
    fn bisection_on_scaled_identity() {
        // 𝒜 = 0.9·vec: the nuclear solution soft-thresholds σ(b̃)/0.9 where
        // the closed form gives σ_i(X) = max(σ_i(M) − λ/(2c²), 0), M = B/c
        let c = 0.9;
        let op = LinearOp::scaled_identity(c, 4, 4).unwrap();
        let x0 = gen_low_rank(4, 4, 4, 1.0, RngSeed::new(8, 0)).unwrap();
        let inst = gen_instance(op, x0, NoiseSpec::None, RngSeed::new(8, 1)).unwrap();
        let m = Matrix::from_column_slice(4, 4, inst.b().as_slice()) / c;
        let sm = spectral::singular_values(&m).unwrap();
        let hi = nuclear_zero_threshold(&inst).unwrap() * 1.01;
        let cfg = SolveConfig::default();
        for (k, &s_next) in sm.iter().enumerate().take(4).skip(1) {
            let out = solve_nuclear_bisection(&inst, k, (0.0, hi), &cfg).unwrap();
            assert!(out.result.rank <= k);
            let transition = 2.0 * c * c * s_next;
            assert!((out.lambda - transition).abs() <= 1e-3 * hi + 1e-9, "k={k}");
            assert!(!out.probes.is_empty());
        }
        let full = solve_nuclear_bisection(&inst, 4, (0.0, hi), &cfg).unwrap();
        assert_eq!(full.lambda, 0.0);
        assert!(matches!(
            solve_nuclear_bisection(&inst, 1, (0.0, 1e-3), &cfg),
            Err(Error::Bracket { .. })
        ));
    }

    #[test]
    fn oracle_exact_on_scaled_identity() {
        let op = LinearOp::scaled_identity(0.5, 3, 4).unwrap();
        let x0 = gen_low_rank(3, 4, 3, 1.0, RngSeed::new(2, 0)).unwrap();
        let inst = gen_instance(op, x0, NoiseSpec::None, RngSeed::new(2, 1)).unwrap();
        let o = best_rank_k_oracle(&inst, 1, 1, 0).unwrap();
        assert!(o.exact);
        let m = Matrix::from_column_slice(3, 4, inst.b().as_slice()) / 0.5;
        let s = spectral::svd(&m).unwrap();
        let want = s.compose(&[s.sigma[0], 0.0, 0.0]);
        assert!((o.x - want).norm() < 1e-12);
    }

    #[test]
    fn oracle_recovers_noise_free_low_rank() {
        let op = gen_gaussian_op(40, 5, 5, 1.0, RngSeed::new(3, 0)).unwrap();
        let x0 = gen_low_rank(5, 5, 2, 1.0, RngSeed::new(3, 1)).unwrap();
        let inst = gen_instance(op, x0.clone(), NoiseSpec::None, RngSeed::new(3, 2)).unwrap();
        let o = best_rank_k_oracle(&inst, 2, 3, 11).unwrap();
        assert!(!o.exact && !o.norm_blowup);
        assert!((o.x - x0).norm() < 1e-8, "residual {}", o.residual);
    }

    #[test]
    fn oracle_flags_pathological_blowup() {
        let inst = pathological_instance();
        let o = best_rank_k_oracle(&inst, 1, 3, 1).unwrap();
        assert!(o.norm_blowup);
        assert!(o.residual < 1e-3);
    }

    #[test]
    fn oracle_dominates_solver_fit() {
        let inst = small_instance(21, 0.5);
        let r = solve_fbs(&inst, &Regularizer::FixedRank { k: 2 }, &SolveConfig::default()).unwrap();
        let o = best_rank_k_oracle(&inst, r.rank, 5, 2).unwrap();
        assert!(inst.data_fit(&r.x).unwrap() >= o.residual.powi(2) - 1e-8);
    }
}
