//! Quadratic envelopes of the rank penalty and of the fixed-rank indicator,
//! the nuclear norm, and their proximal maps.
//!
//! Vector functions act on singular-value vectors; the matrix versions lift
//! them through [`crate::spectral`]. All proximal maps use the convention
//! `prox(y) = argmin_x h(x) + (ρ/2)‖x − y‖²` and require `ρ > 2`, which makes
//! the envelope prox objectives strongly convex.

use std::fmt;

use crate::error::{Error, Result};
use crate::spectral::{self, sort_abs, Matrix};

/// Penalty applied to the singular values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regularizer {
    /// Envelope of `μ · rank(X)`.
    MuRank { mu: f64 },
    /// Envelope of the indicator of `rank(X) ≤ k`.
    FixedRank { k: usize },
    /// `λ ‖X‖_*`.
    Nuclear { lambda: f64 },
}

impl Regularizer {
    pub fn mu_rank(mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::param("mu", format!("must be positive, got {mu}")));
        }
        Ok(Regularizer::MuRank { mu })
    }

    pub fn fixed_rank(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::param("k", "must be at least 1"));
        }
        Ok(Regularizer::FixedRank { k })
    }

    pub fn nuclear(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::param(
                "lambda",
                format!("must be positive, got {lambda}"),
            ));
        }
        Ok(Regularizer::Nuclear { lambda })
    }

    /// Checks the parameter against a spectrum length `n = min(n1, n2)`.
    /// Solvers accept `Nuclear` with `λ = 0`; the constructor does not.
    pub fn validate(&self, n: usize) -> Result<()> {
        match *self {
            Regularizer::MuRank { mu } => Regularizer::mu_rank(mu).map(|_| ()),
            // λ = 0 is plain least squares, reachable as a bisection endpoint
            Regularizer::Nuclear { lambda } => {
                if lambda >= 0.0 && lambda.is_finite() {
                    Ok(())
                } else {
                    Err(Error::param("lambda", format!("must be non-negative, got {lambda}")))
                }
            }
            Regularizer::FixedRank { k } => {
                if k == 0 || k > n {
                    Err(Error::param("k", format!("must lie in 1..={n}, got {k}")))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Regularizer::MuRank { .. } => "murank",
            Regularizer::FixedRank { .. } => "fixedrank",
            Regularizer::Nuclear { .. } => "nuclear",
        }
    }

    /// The scalar parameter (`μ`, `k` or `λ`).
    pub fn param(&self) -> f64 {
        match *self {
            Regularizer::MuRank { mu } => mu,
            Regularizer::FixedRank { k } => k as f64,
            Regularizer::Nuclear { lambda } => lambda,
        }
    }

    /// True for the non-convex envelope penalties.
    pub fn is_envelope(&self) -> bool {
        !matches!(self, Regularizer::Nuclear { .. })
    }
}

impl fmt::Display for Regularizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regularizer::MuRank { mu } => write!(f, "murank(mu={mu})"),
            Regularizer::FixedRank { k } => write!(f, "fixedrank(k={k})"),
            Regularizer::Nuclear { lambda } => write!(f, "nuclear(lambda={lambda})"),
        }
    }
}

/// Curvature weight of a proximal step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxParams {
    rho: f64,
}

impl ProxParams {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho > 2.0 && rho.is_finite()) {
            return Err(Error::param("rho", format!("must exceed 2, got {rho}")));
        }
        Ok(ProxParams { rho })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }
}

/// `μ − max(√μ − σ, 0)²`.
pub fn r_mu(sigma: f64, mu: f64) -> f64 {
    let gap = (mu.sqrt() - sigma).max(0.0);
    mu - gap * gap
}

/// Envelope of `μ · card` at `x`.
pub fn q2_mucard_value(x: &[f64], mu: f64) -> f64 {
    x.iter().map(|&v| r_mu(v.abs(), mu)).sum()
}

/// Maximizer `s*` and value of the concave sweep function defining the
/// envelope of the `k`-sparse indicator, for `z` sorted non-increasing and
/// non-negative.
///
/// `g(s) = −Σ_{i<k} (max(z_i, s) − z_i)² + Σ_{i≥k} (2 s z_i − z_i²)`.
/// Returns `None` for `s*` when the tail vanishes (then every `s ≤ z_{k−1}`
/// is optimal and the value is 0).
fn iotak_level(z: &[f64], k: usize) -> (Option<f64>, f64) {
    let n = z.len();
    if k >= n {
        return (None, 0.0);
    }
    let tail: f64 = z[k..].iter().sum();
    if tail <= 0.0 {
        return (None, 0.0);
    }
    // the m smallest head entries are active: z[k-m..k] < s
    let mut active_sum = 0.0;
    let mut s = 0.0;
    for m in 1..=k {
        active_sum += z[k - m];
        s = (tail + active_sum) / m as f64;
        let upper_ok = m == k || s <= z[k - m - 1];
        if upper_ok {
            break;
        }
    }
    let head: f64 = z[..k]
        .iter()
        .map(|&zi| {
            let d = (s - zi).max(0.0);
            -d * d
        })
        .sum();
    let tail_val: f64 = z[k..].iter().map(|&zi| 2.0 * s * zi - zi * zi).sum();
    (Some(s), head + tail_val)
}

/// Envelope of the indicator of `card(x) ≤ k`.
pub fn q2_iotak_value(x: &[f64], k: usize) -> f64 {
    let z = sort_abs(x).values;
    iotak_level(&z, k).1
}

/// Per-coordinate map shared by the two envelope proxes: identity above
/// `t`, affine shrink on `[2t/ρ, t]`, zero below.
fn envelope_shrink(y: f64, t: f64, rho: f64) -> f64 {
    let a = y.abs();
    if a >= t {
        y
    } else if a >= 2.0 * t / rho {
        (rho * y - 2.0 * t * y.signum()) / (rho - 2.0)
    } else {
        0.0
    }
}

/// Proximal map of the `μ · card` envelope.
pub fn prox_q2_mucard(y: &[f64], mu: f64, p: ProxParams) -> Vec<f64> {
    let t = mu.sqrt();
    y.iter()
        .map(|&v| envelope_shrink(v, t, p.rho()))
        .collect()
}

/// Level `t*` of the fixed-rank prox for `z` sorted non-increasing,
/// non-negative. Solves
/// `Σ_{i<k, z_i<t} (t − x_i(t)) = Σ_{i≥k} x_i(t)` with `x_i(t)` the shrink
/// map at level `t`. The left side minus the right side is continuous,
/// non-decreasing and piecewise linear with kinks at `z_i` and `ρ z_i / 2`.
fn iotak_prox_level(z: &[f64], k: usize, rho: f64) -> f64 {
    let phi = |t: f64| -> f64 {
        let mut head = 0.0;
        for &zi in &z[..k] {
            if zi < t {
                head += t - envelope_shrink(zi, t, rho);
            }
        }
        let tail: f64 = z[k..].iter().map(|&zi| envelope_shrink(zi, t, rho)).sum();
        head - tail
    };
    let mut knots: Vec<f64> = z
        .iter()
        .flat_map(|&zi| [zi, 0.5 * rho * zi])
        .filter(|&t| t > 0.0)
        .collect();
    knots.push(0.0);
    knots.sort_by(f64::total_cmp);
    knots.dedup();

    let mut prev_t = knots[0];
    let mut prev_phi = phi(prev_t);
    if prev_phi >= 0.0 {
        return prev_t;
    }
    for &t in &knots[1..] {
        let cur = phi(t);
        if cur >= 0.0 {
            return prev_t + (-prev_phi) * (t - prev_t) / (cur - prev_phi);
        }
        prev_t = t;
        prev_phi = cur;
    }
    // beyond the last knot every coordinate is zero and phi(t) = k t
    prev_t
}

/// Proximal map of the envelope of the `k`-sparse indicator.
pub fn prox_q2_iotak(y: &[f64], k: usize, p: ProxParams) -> Vec<f64> {
    let n = y.len();
    if k >= n {
        return y.to_vec();
    }
    let sorted = sort_abs(y);
    let z = &sorted.values;
    if z[k..].iter().all(|&v| v == 0.0) {
        return y.to_vec();
    }
    let t = iotak_prox_level(z, k, p.rho());
    let x: Vec<f64> = z.iter().map(|&zi| envelope_shrink(zi, t, p.rho())).collect();
    sorted.restore(&x)
}

/// Soft thresholding, the prox of `τ‖·‖₁` under unit weight.
pub fn prox_nuclear_vec(y: &[f64], tau: f64) -> Vec<f64> {
    y.iter()
        .map(|&v| v.signum() * (v.abs() - tau).max(0.0))
        .collect()
}

/// Output of [`hard_threshold_vec`].
#[derive(Debug, Clone, PartialEq)]
pub struct HardThreshold {
    pub values: Vec<f64>,
    /// Some entry sat within 1e-12 of the threshold; any value in
    /// `[0, thr]` would have been optimal there and 0 was picked.
    pub ambiguous: bool,
}

/// Keeps entries strictly above `thr` in magnitude.
pub fn hard_threshold_vec(y: &[f64], thr: f64) -> HardThreshold {
    let mut ambiguous = false;
    let values = y
        .iter()
        .map(|&v| {
            if (v.abs() - thr).abs() <= 1e-12 {
                ambiguous = true;
                0.0
            } else if v.abs() > thr {
                v
            } else {
                0.0
            }
        })
        .collect();
    HardThreshold { values, ambiguous }
}

/// Vector prox matching a regularizer.
pub fn reg_prox_vec(y: &[f64], reg: &Regularizer, p: ProxParams) -> Vec<f64> {
    match *reg {
        Regularizer::MuRank { mu } => prox_q2_mucard(y, mu, p),
        Regularizer::FixedRank { k } => prox_q2_iotak(y, k, p),
        Regularizer::Nuclear { lambda } => prox_nuclear_vec(y, lambda / p.rho()),
    }
}

/// Regularizer value on a vector (envelope for the rank penalties).
pub fn reg_value_vec(x: &[f64], reg: &Regularizer) -> f64 {
    match *reg {
        Regularizer::MuRank { mu } => q2_mucard_value(x, mu),
        Regularizer::FixedRank { k } => q2_iotak_value(x, k),
        Regularizer::Nuclear { lambda } => lambda * x.iter().map(|v| v.abs()).sum::<f64>(),
    }
}

/// Unrelaxed penalty on a singular-value vector: `μ · rank`, the rank
/// indicator (`+∞` outside), or `λ ‖·‖₁`. Rank uses the numerical cutoff.
pub fn unrelaxed_value_vec(sigma: &[f64], reg: &Regularizer) -> f64 {
    match *reg {
        Regularizer::MuRank { mu } => mu * spectral::numerical_rank(sigma) as f64,
        Regularizer::FixedRank { k } => {
            if spectral::numerical_rank(sigma) <= k {
                0.0
            } else {
                f64::INFINITY
            }
        }
        Regularizer::Nuclear { lambda } => lambda * sigma.iter().sum::<f64>(),
    }
}

/// SVD-lifted prox.
pub fn reg_prox_matrix(x: &Matrix, reg: &Regularizer, p: ProxParams) -> Result<Matrix> {
    spectral::lift_spectral_map(|s| reg_prox_vec(s, reg, p), x)
}

/// SVD-lifted regularizer value.
pub fn reg_value_matrix(x: &Matrix, reg: &Regularizer) -> Result<f64> {
    spectral::lift_spectral(|s| reg_value_vec(s, reg), x)
}

/// Shape of the subdifferential of `G = ½ h + ½ ‖·‖²` at a non-negative,
/// non-increasing point `x` (`h` the regularizer). For every regularizer
/// here the admissible `w` is a product set: on the support `w_i` is a
/// single value [`SubdiffProfile::support`], off the support `|w_i| ≤ cap`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubdiffProfile {
    kind: ProfileKind,
    /// Bound on `|w_i|` where `x_i = 0`.
    pub cap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum ProfileKind {
    /// `w = max(x, level)`
    Floor(f64),
    /// `w = x + shift`
    Shift(f64),
}

impl SubdiffProfile {
    /// Builds the profile for sorted, non-negative `x` whose negligible
    /// entries have already been set to zero.
    pub fn new(x_sorted: &[f64], reg: &Regularizer) -> Self {
        match *reg {
            Regularizer::MuRank { mu } => {
                let t = mu.sqrt();
                SubdiffProfile {
                    kind: ProfileKind::Floor(t),
                    cap: t,
                }
            }
            Regularizer::FixedRank { k } => {
                let level = match iotak_level(x_sorted, k).0 {
                    Some(s) => s,
                    None => x_sorted.get(k - 1).copied().unwrap_or(0.0),
                };
                SubdiffProfile {
                    kind: ProfileKind::Floor(level),
                    cap: level,
                }
            }
            Regularizer::Nuclear { lambda } => SubdiffProfile {
                kind: ProfileKind::Shift(0.5 * lambda),
                cap: 0.5 * lambda,
            },
        }
    }

    /// The required `w_i` at a support coordinate with value `x_i > 0`.
    pub fn support(&self, x: f64) -> f64 {
        match self.kind {
            ProfileKind::Floor(t) => x.max(t),
            ProfileKind::Shift(s) => x + s,
        }
    }
}

/// Euclidean distance from `w` to `∂G(x)` for vectors, with
/// `G = ½ h + ½ ‖·‖²`. Entries of `x` with magnitude at most `zero_tol`
/// count as zero; `cap_slack` widens the off-support bound.
pub fn subdiff_distance_vec(
    x: &[f64],
    w: &[f64],
    reg: &Regularizer,
    zero_tol: f64,
    cap_slack: f64,
) -> f64 {
    let sorted = sort_abs(x);
    let cleaned: Vec<f64> = sorted
        .values
        .iter()
        .map(|&v| if v <= zero_tol { 0.0 } else { v })
        .collect();
    let profile = SubdiffProfile::new(&cleaned, reg);
    let mut acc = 0.0;
    for (i, &p) in sorted.permutation.iter().enumerate() {
        let xi = cleaned[i];
        let wi = w[p] * sorted.signs[i];
        let d = if xi > 0.0 {
            wi - profile.support(xi)
        } else {
            (wi.abs() - profile.cap - cap_slack).max(0.0)
        };
        acc += d * d;
    }
    acc.sqrt()
}
