//! Stationarity checks, restricted-isometry estimates, and the sufficient
//! conditions for uniqueness and global optimality of a stationary point.
//!
//! `X` is stationary for `h(X) + ‖𝒜X − b‖²` exactly when
//! `Z = (I − 𝒜*𝒜)X + 𝒜*b` lies in `∂G(X)`, `G = ½h + ½‖·‖²`. Every
//! certifying condition gets harder to satisfy as the isometry defect `δ`
//! grows, so a heuristic `δ̂` (a lower bound) can never certify.

use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::envelopes::{self, ProxParams, Regularizer, SubdiffProfile};
use crate::error::{Error, Result};
use crate::problem::{LinearOp, ProblemInstance, RngSeed};
use crate::solvers;
use crate::spectral::{self, Matrix};

/// Relative tolerance of the certificate stationarity test.
pub const CERT_TOL: f64 = 1e-7;
/// Prox weight of the fixed-point residual.
pub const CHECK_RHO: f64 = 2.1;
/// Slack on the off-support bound of the subdifferential.
pub const CAP_SLACK: f64 = 1e-9;

/// `(I − 𝒜*𝒜)X + 𝒜*b`.
pub fn compute_z(inst: &ProblemInstance, x: &Matrix) -> Result<Matrix> {
    inst.z_point(x)
}

/// How [`in_subdiff_g`] compares `W` with `∂G(X)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MembershipMode {
    /// `W` must share the singular frame of `X` and carry admissible
    /// values in it.
    Aligned,
    /// Only the singular values of `W` and `X` are compared.
    ValuesOnly,
}

/// A candidate subgradient `w` at `x`.
#[derive(Debug, Clone, Copy)]
pub struct SubgradientQuery<'a> {
    pub x: &'a Matrix,
    pub w: &'a Matrix,
    pub reg: Regularizer,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Membership {
    pub member: bool,
    pub residual: f64,
    pub tolerance: f64,
}

/// Tests `W ∈ ∂G(X)` at tolerance `1e-7·max(1, ‖X‖)`.
///
/// In aligned mode, with `X = U_r Σ V_rᵀ` on its numerical support and
/// `A = U_rᵀ W V_r`, the residual collects: the mismatch of `diag(A)` with
/// the required support values, the off-diagonal of `A`, the parts of `W`
/// mixing the support with its complement, and the excess of the singular
/// values of the complementary block over the admissible cap.
pub fn in_subdiff_g(q: SubgradientQuery<'_>, mode: MembershipMode) -> Result<Membership> {
    if q.x.shape() != q.w.shape() {
        return Err(Error::shape(
            format!("{}x{}", q.x.nrows(), q.x.ncols()),
            format!("{}x{}", q.w.nrows(), q.w.ncols()),
        ));
    }
    let tolerance = 1e-7 * q.x.norm().max(1.0);
    let residual = match mode {
        MembershipMode::Aligned => aligned_residual(q.x, q.w, &q.reg)?,
        MembershipMode::ValuesOnly => {
            let sx = spectral::singular_values(q.x)?;
            let sw = spectral::singular_values(q.w)?;
            let zero_tol = spectral::RANK_TOL * sx.first().copied().unwrap_or(0.0).max(1.0);
            envelopes::subdiff_distance_vec(&sx, &sw, &q.reg, zero_tol, CAP_SLACK)
        }
    };
    Ok(Membership {
        member: residual <= tolerance,
        residual,
        tolerance,
    })
}

fn aligned_residual(x: &Matrix, w: &Matrix, reg: &Regularizer) -> Result<f64> {
    let s = spectral::svd(x)?;
    let sigma = spectral::clean_spectrum(s.sigma.as_slice());
    let r = s.rank();
    let profile = SubdiffProfile::new(&sigma, reg);
    let ur = s.u.columns(0, r).into_owned();
    let vr = s.v.columns(0, r).into_owned();
    let a = ur.transpose() * w * &vr;

    let mut acc = 0.0;
    for i in 0..r {
        for j in 0..r {
            let want = if i == j { profile.support(sigma[i]) } else { 0.0 };
            acc += (a[(i, j)] - want).powi(2);
        }
    }
    let ut_w = ur.transpose() * w;
    let w_v = w * &vr;
    acc += (&ut_w - &a * vr.transpose()).norm_squared();
    acc += (&w_v - &ur * &a).norm_squared();
    let null = w - &ur * &ut_w - &w_v * vr.transpose() + &ur * &a * vr.transpose();
    for sv in spectral::singular_values(&null)? {
        acc += (sv - profile.cap - CAP_SLACK).max(0.0).powi(2);
    }
    Ok(acc.sqrt())
}

/// The two stationarity residuals of a candidate point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationarityReport {
    /// Aligned residual of `Z ∈ ∂G(X)`.
    pub subdiff_residual: f64,
    /// `‖X − prox(X − 2𝒜*(𝒜X − b)/ρ)‖` at `ρ = 2.1`.
    pub fixed_point_residual: f64,
    /// Threshold applied to both residuals.
    pub threshold: f64,
    pub pass: bool,
}

/// Checks stationarity of `x`; both residuals must be at most
/// `tol·max(1, ‖X‖)`.
pub fn check_stationary(inst: &ProblemInstance, x: &Matrix, reg: &Regularizer, tol: f64) -> Result<StationarityReport> {
    let z = compute_z(inst, x)?;
    let m = in_subdiff_g(
        SubgradientQuery {
            x,
            w: &z,
            reg: *reg,
        },
        MembershipMode::Aligned,
    )?;
    let p = ProxParams::new(CHECK_RHO)?;
    let step = solvers::fbs_step(inst, reg, x, p)?;
    let fixed_point_residual = (step - x).norm();
    let threshold = tol * x.norm().max(1.0);
    Ok(StationarityReport {
        subdiff_residual: m.residual,
        fixed_point_residual,
        threshold,
        pass: m.residual <= threshold && fixed_point_residual <= threshold,
    })
}

/// Where a `δ` value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Closed form for a scaled-identity operator.
    Exact,
    /// Best ratio found by search; never above the true constant.
    LowerBound,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Exact => "exact",
            Provenance::LowerBound => "lower_bound",
        })
    }
}

/// Lower restricted isometry defect: `1 − δ_K = inf ‖𝒜X‖²/‖X‖²` over
/// nonzero `X` of rank at most `K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaEstimate {
    pub delta: f64,
    pub provenance: Provenance,
}

impl DeltaEstimate {
    pub fn exact(delta: f64) -> Self {
        DeltaEstimate {
            delta,
            provenance: Provenance::Exact,
        }
    }
}

const DELTA_MAX_SWEEPS: usize = 500;

/// Estimates the lower restricted isometry defect of order `k`.
///
/// Exact for `c·vec` (`δ = 1 − c²`). Otherwise the ratio
/// `‖𝒜(LR)‖²/‖LR‖²` is minimized by alternating exact minimizations: with
/// one factor orthonormal the ratio is a Rayleigh quotient in the other,
/// whose minimum is the smallest eigenvalue of the restricted Gram matrix.
/// The best of `restarts` random starts gives `δ̂ = 1 − ratio`.
pub fn estimate_delta(op: &LinearOp, k: usize, restarts: usize, seed: u64) -> Result<DeltaEstimate> {
    if k == 0 {
        return Err(Error::param("k", "must be at least 1"));
    }
    if let Some(c) = op.identity_scale() {
        return Ok(DeltaEstimate::exact(1.0 - c * c));
    }
    let (n1, n2) = op.shape();
    let k = k.min(n1.min(n2));
    let mut best = f64::INFINITY;
    for r in 0..restarts.max(1) {
        let mut rng = RngSeed::new(seed, r as u64).rng();
        let mut right = Matrix::from_fn(k, n2, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mut prev = f64::INFINITY;
        for _ in 0..DELTA_MAX_SWEEPS {
            let rq = orthonormal_columns(&right.transpose()).transpose();
            let (ratio_l, vl) = smallest_eigenpair(&op.design_fixed_right(&rq));
            let left = Matrix::from_column_slice(n1, k, vl.as_slice());
            let lq = orthonormal_columns(&left);
            let (ratio, vr) = smallest_eigenpair(&op.design_fixed_left(&lq));
            right = Matrix::from_column_slice(k, n2, vr.as_slice());
            let ratio = ratio.min(ratio_l).max(0.0);
            best = best.min(ratio);
            if prev - ratio <= 1e-12 * prev.max(1e-300) || ratio < 1e-14 {
                break;
            }
            prev = ratio;
        }
    }
    Ok(DeltaEstimate {
        delta: 1.0 - best,
        provenance: Provenance::LowerBound,
    })
}

fn orthonormal_columns(m: &Matrix) -> Matrix {
    let q = m.clone().qr().q();
    q.columns(0, m.ncols()).into_owned()
}

/// Smallest eigenvalue and a unit eigenvector of `dᵀd`.
fn smallest_eigenpair(d: &DMatrix<f64>) -> (f64, nalgebra::DVector<f64>) {
    let eig = SymmetricEigen::new(d.tr_mul(d));
    let (i, &val) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    (val, eig.eigenvectors.column(i).into_owned())
}

/// `[(1 − δ)√μ, √μ/(1 − δ)]`, the band the singular values of `Z` must
/// avoid; `None` when `δ ≥ 1`.
pub fn murank_interval(mu: f64, delta: f64) -> Option<(f64, f64)> {
    if delta >= 1.0 {
        return None;
    }
    let t = mu.sqrt();
    Some(((1.0 - delta) * t, t / (1.0 - delta)))
}

/// No singular value of `Z` falls in the closed band of [`murank_interval`].
pub fn interval_clear(sigma_z: &[f64], mu: f64, delta: f64) -> bool {
    match murank_interval(mu, delta) {
        None => false,
        Some((lo, hi)) => sigma_z.iter().all(|&s| s < lo || s > hi),
    }
}

/// `σ_{K+1}(Z) < (1 − 2δ)σ_K(Z)`; `None` when `δ ≥ 1/2` makes the
/// condition unusable.
pub fn fixed_rank_gap(sigma_z: &[f64], k: usize, delta: f64) -> Option<bool> {
    if delta >= 0.5 || k == 0 {
        return None;
    }
    let sk = sigma_z.get(k - 1).copied().unwrap_or(0.0);
    let sk1 = sigma_z.get(k).copied().unwrap_or(0.0);
    Some(sk1 < (1.0 - 2.0 * delta) * sk)
}

/// `2/√(1 − δ)`, the error constant of the best rank-`K` solution.
pub fn error_bound_constant(delta: f64) -> f64 {
    2.0 / (1.0 - delta).sqrt()
}

/// `(1 − δ)^{3/2}√μ/3`, the admissible noise norm under the rank penalty.
pub fn noise_bound_murank(mu: f64, delta: f64) -> f64 {
    (1.0 - delta).powf(1.5) * mu.sqrt() / 3.0
}

/// `(1/(1 − δ) + (1 − δ))√μ`, the required `σ_K(X₀)` under the penalty.
pub fn sigma_k_bound_murank(mu: f64, delta: f64) -> f64 {
    (1.0 / (1.0 - delta) + (1.0 - delta)) * mu.sqrt()
}

/// `5‖ε‖/(1 − 2δ)^{3/2}`, the required `σ_K(X₀)` under the rank
/// constraint; infinite when `δ ≥ 1/2`.
pub fn sigma_k_bound_fixed_rank(eps_norm: f64, delta: f64) -> f64 {
    if delta >= 0.5 {
        return f64::INFINITY;
    }
    5.0 * eps_norm / (1.0 - 2.0 * delta).powf(1.5)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Verdict {
    Refuted,
    Inconclusive,
    /// Unique minimizer among matrices of rank at most `K`.
    CertifiedUniqueLowrank,
    /// Additionally a global minimizer of the relaxed and unrelaxed
    /// objectives.
    CertifiedGlobal,
}

impl Verdict {
    pub fn is_certified(&self) -> bool {
        matches!(self, Verdict::CertifiedUniqueLowrank | Verdict::CertifiedGlobal)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Refuted => "refuted",
            Verdict::Inconclusive => "inconclusive",
            Verdict::CertifiedUniqueLowrank => "certified_unique_lowrank",
            Verdict::CertifiedGlobal => "certified_global",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Result of a theorem check.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    pub stationarity: StationarityReport,
    pub sigma_z: Vec<f64>,
    pub delta: DeltaEstimate,
    /// Named conditions in evaluation order.
    pub conditions: Vec<(&'static str, bool)>,
    pub verdict: Verdict,
}

impl CertificateReport {
    pub fn condition(&self, name: &str) -> Option<bool> {
        self.conditions.iter().find(|(n, _)| *n == name).map(|c| c.1)
    }
}

impl fmt::Display for CertificateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "stationarity_residual={:e}", self.stationarity.subdiff_residual)?;
        writeln!(f, "fixed_point_residual={:e}", self.stationarity.fixed_point_residual)?;
        writeln!(f, "stationary={}", self.stationarity.pass)?;
        let sz: Vec<String> = self.sigma_z.iter().map(|s| format!("{s:e}")).collect();
        writeln!(f, "sigma_z={}", sz.join(";"))?;
        writeln!(f, "delta={}", self.delta.delta)?;
        writeln!(f, "delta_provenance={}", self.delta.provenance)?;
        for (name, ok) in &self.conditions {
            writeln!(f, "condition.{name}={ok}")?;
        }
        writeln!(f, "verdict={}", self.verdict)
    }
}

/// Uniqueness and global optimality of a stationary point of the
/// rank-penalty envelope objective.
///
/// Conditions: `interval_clearance` (no `σ_i(Z)` in the band of
/// [`murank_interval`]), `fit_within_mu` (`‖𝒜X − b‖² ≤ μ`) and
/// `operator_contractive` (`‖𝒜‖ < 1`). An exact `δ` with a clear band
/// certifies uniqueness among rank-`K` matrices, and with the other two
/// conditions global optimality.
pub fn check_theorem_murank(inst: &ProblemInstance, x: &Matrix, mu: f64, delta: DeltaEstimate) -> Result<CertificateReport> {
    let reg = Regularizer::mu_rank(mu)?;
    let stationarity = check_stationary(inst, x, &reg, CERT_TOL)?;
    let sigma_z = spectral::singular_values(&compute_z(inst, x)?)?;
    let clear = interval_clear(&sigma_z, mu, delta.delta);
    let fit_ok = inst.data_fit(x)? <= mu;
    let contractive = inst.op().norm() < 1.0;
    let verdict = if !stationarity.pass {
        Verdict::Refuted
    } else if delta.provenance != Provenance::Exact || !clear {
        Verdict::Inconclusive
    } else if fit_ok && contractive {
        Verdict::CertifiedGlobal
    } else {
        Verdict::CertifiedUniqueLowrank
    };
    Ok(CertificateReport {
        stationarity,
        sigma_z,
        delta,
        conditions: vec![
            ("interval_clearance", clear),
            ("fit_within_mu", fit_ok),
            ("operator_contractive", contractive),
        ],
        verdict,
    })
}

/// Uniqueness of a stationary point of the fixed-rank envelope objective.
///
/// Conditions: `rank_within_k`, `spectral_gap`
/// (`σ_{K+1}(Z) < (1 − 2δ)σ_K(Z)`, false when `δ ≥ 1/2`) and
/// `operator_contractive`. With an exact `δ` and all three, the point is
/// the unique global minimizer and no other local minimizer exists.
pub fn check_theorem_fixedrank(inst: &ProblemInstance, x: &Matrix, k: usize, delta: DeltaEstimate) -> Result<CertificateReport> {
    let reg = Regularizer::fixed_rank(k)?;
    let stationarity = check_stationary(inst, x, &reg, CERT_TOL)?;
    let sigma_z = spectral::singular_values(&compute_z(inst, x)?)?;
    let rank_ok = spectral::numerical_rank(&spectral::singular_values(x)?) <= k;
    let gap = fixed_rank_gap(&sigma_z, k, delta.delta);
    let contractive = inst.op().norm() < 1.0;
    let verdict = if !stationarity.pass {
        Verdict::Refuted
    } else if delta.provenance != Provenance::Exact || !rank_ok || gap != Some(true) {
        Verdict::Inconclusive
    } else if contractive {
        Verdict::CertifiedGlobal
    } else {
        Verdict::CertifiedUniqueLowrank
    };
    Ok(CertificateReport {
        stationarity,
        sigma_z,
        delta,
        conditions: vec![
            ("rank_within_k", rank_ok),
            ("spectral_gap", gap == Some(true)),
            ("operator_contractive", contractive),
        ],
        verdict,
    })
}

/// Which a-priori recovery guarantee [`check_noise_regime`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseTarget {
    Penalty { mu: f64 },
    FixedRank { k: usize },
}

/// One inequality `lhs < rhs` (strict) or `lhs ≤ rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Inequality {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub strict: bool,
}

impl Inequality {
    pub fn holds(&self) -> bool {
        if self.strict {
            self.lhs < self.rhs
        } else {
            self.lhs <= self.rhs
        }
    }

    pub fn margin(&self) -> f64 {
        self.rhs - self.lhs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRegimeReport {
    pub inequalities: Vec<Inequality>,
}

impl NoiseRegimeReport {
    pub fn get(&self, name: &str) -> Option<&Inequality> {
        self.inequalities.iter().find(|i| i.name == name)
    }

    pub fn all_hold(&self) -> bool {
        self.inequalities.iter().all(Inequality::holds)
    }
}

impl fmt::Display for NoiseRegimeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in &self.inequalities {
            writeln!(f, "{}.lhs={}", i.name, i.lhs)?;
            writeln!(f, "{}.rhs={}", i.name, i.rhs)?;
            writeln!(f, "{}.margin={}", i.name, i.margin())?;
            writeln!(f, "{}.holds={}", i.name, i.holds())?;
        }
        Ok(())
    }
}

/// Evaluates the hypotheses of the noisy recovery guarantees against the
/// ground truth and, when a solution is given, the promised error bound
/// `‖X − X₀‖ ≤ 2‖ε‖/√(1 − δ)`.
///
/// Penalty: `noise_level_bound` (`‖ε‖ ≤ (1 − δ)^{3/2}√μ/3`) and
/// `sigma_k_bound_penalty` (`σ_K(X₀) > (1/(1 − δ) + 1 − δ)√μ`, `K` the
/// rank of `X₀`). Fixed rank: `sigma_k_bound_fixed_rank`
/// (`σ_K(X₀) > 5‖ε‖/(1 − 2δ)^{3/2}`).
pub fn check_noise_regime(
    inst: &ProblemInstance,
    target: NoiseTarget,
    delta: f64,
    solution: Option<&Matrix>,
) -> Result<NoiseRegimeReport> {
    let g = inst.ground_truth().ok_or(Error::MissingGroundTruth)?;
    let eps = g.eps.norm();
    let s0 = spectral::singular_values(&g.x0)?;
    let sigma_k = |k: usize| if k == 0 { f64::INFINITY } else { s0.get(k - 1).copied().unwrap_or(0.0) };
    let mut inequalities = Vec::new();
    match target {
        NoiseTarget::Penalty { mu } => {
            inequalities.push(Inequality {
                name: "noise_level_bound",
                lhs: eps,
                rhs: noise_bound_murank(mu, delta),
                strict: false,
            });
            inequalities.push(Inequality {
                name: "sigma_k_bound_penalty",
                lhs: sigma_k_bound_murank(mu, delta),
                rhs: sigma_k(g.k0),
                strict: true,
            });
        }
        NoiseTarget::FixedRank { k } => {
            inequalities.push(Inequality {
                name: "sigma_k_bound_fixed_rank",
                lhs: sigma_k_bound_fixed_rank(eps, delta),
                rhs: sigma_k(k),
                strict: true,
            });
        }
    }
    if let Some(x) = solution {
        inequalities.push(Inequality {
            name: "error_bound",
            lhs: (x - &g.x0).norm(),
            rhs: error_bound_constant(delta) * eps,
            strict: false,
        });
    }
    Ok(NoiseRegimeReport { inequalities })
}
