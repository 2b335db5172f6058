//! Measurement operators, problem instances, seeded generators and the
//! rescaling that brings an instance to `‖𝒜‖ < 1`.
//!
//! Matrices are vectorized column-major, which is also nalgebra's storage
//! order, so `vec(X)` is `X.as_slice()`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::envelopes::Regularizer;
use crate::error::{Error, Result};
use crate::spectral::{self, Matrix};

/// Target operator norm after rescaling.
pub const NORMALIZED_NORM: f64 = 0.99;

/// Deterministic seed derivation: stream `i` of base `s` seeds its generator
/// with `s ⊕ splitmix64(i)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngSeed {
    pub base: u64,
    pub stream: u64,
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngSeed {
    pub fn new(base: u64, stream: u64) -> Self {
        RngSeed { base, stream }
    }

    pub fn seed(&self) -> u64 {
        self.base ^ splitmix64(self.stream)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed())
    }

    /// A sibling stream under the same base.
    pub fn with_stream(&self, stream: u64) -> Self {
        RngSeed::new(self.base, stream)
    }
}

/// Dense linear map `ℝ^{n1×n2} → ℝ^m` acting on `vec(X)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOp {
    dense: DMatrix<f64>,
    n1: usize,
    n2: usize,
    norm: f64,
    identity_scale: Option<f64>,
}

impl LinearOp {
    /// Wraps an `m × (n1·n2)` matrix; caches its spectral norm.
    pub fn new(dense: DMatrix<f64>, n1: usize, n2: usize) -> Result<Self> {
        if n1 == 0 || n2 == 0 || dense.nrows() == 0 {
            return Err(Error::param("shape", "operator dimensions must be positive"));
        }
        if dense.ncols() != n1 * n2 {
            return Err(Error::shape(
                format!("{} columns", n1 * n2),
                format!("{} columns", dense.ncols()),
            ));
        }
        if dense.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let identity_scale = detect_identity_scale(&dense);
        let norm = match identity_scale {
            Some(c) => c.abs(),
            None => spectral::singular_values(&dense)?.first().copied().unwrap_or(0.0),
        };
        Ok(LinearOp {
            dense,
            n1,
            n2,
            norm,
            identity_scale,
        })
    }

    /// `c · vec`, with `m = n1·n2`.
    pub fn scaled_identity(c: f64, n1: usize, n2: usize) -> Result<Self> {
        let n = n1 * n2;
        LinearOp::new(DMatrix::from_diagonal_element(n, n, c), n1, n2)
    }

    pub fn m(&self) -> usize {
        self.dense.nrows()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    pub fn dense(&self) -> &DMatrix<f64> {
        &self.dense
    }

    /// Spectral norm `‖𝒜‖`.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// `Some(c)` when the operator is exactly `c · vec`.
    pub fn identity_scale(&self) -> Option<f64> {
        self.identity_scale
    }

    fn check_shape(&self, x: &Matrix) -> Result<()> {
        if x.shape() != (self.n1, self.n2) {
            return Err(Error::shape(
                format!("{}x{} matrix", self.n1, self.n2),
                format!("{}x{}", x.nrows(), x.ncols()),
            ));
        }
        Ok(())
    }

    /// `𝒜X`.
    pub fn apply(&self, x: &Matrix) -> Result<DVector<f64>> {
        self.check_shape(x)?;
        let v = DVector::from_column_slice(x.as_slice());
        Ok(&self.dense * v)
    }

    /// `𝒜*y`.
    pub fn adjoint(&self, y: &DVector<f64>) -> Result<Matrix> {
        if y.len() != self.m() {
            return Err(Error::shape(
                format!("{} measurements", self.m()),
                y.len().to_string(),
            ));
        }
        let v = self.dense.tr_mul(y);
        Ok(Matrix::from_column_slice(self.n1, self.n2, v.as_slice()))
    }

    /// `c · 𝒜`.
    pub fn scaled(&self, c: f64) -> LinearOp {
        LinearOp {
            dense: &self.dense * c,
            n1: self.n1,
            n2: self.n2,
            norm: self.norm * c.abs(),
            identity_scale: self.identity_scale.map(|s| s * c),
        }
    }

    /// Matrix of `vec(R) ↦ 𝒜(LR)` for a fixed `n1×K` factor `L`, i.e.
    /// `𝒜(I ⊗ L)`.
    pub fn design_fixed_left(&self, l: &Matrix) -> DMatrix<f64> {
        let k = l.ncols();
        let mut design = DMatrix::zeros(self.m(), k * self.n2);
        for j in 0..self.n2 {
            let block = self.dense.columns(j * self.n1, self.n1) * l;
            design.columns_mut(j * k, k).copy_from(&block);
        }
        design
    }

    /// Matrix of `vec(L) ↦ 𝒜(LR)` for a fixed `K×n2` factor `R`, i.e.
    /// `𝒜(Rᵀ ⊗ I)`.
    pub fn design_fixed_right(&self, r: &Matrix) -> DMatrix<f64> {
        let k = r.nrows();
        let mut design = DMatrix::zeros(self.m(), self.n1 * k);
        for p in 0..k {
            let mut col = DMatrix::zeros(self.m(), self.n1);
            for j in 0..self.n2 {
                col += self.dense.columns(j * self.n1, self.n1) * r[(p, j)];
            }
            design.columns_mut(p * self.n1, self.n1).copy_from(&col);
        }
        design
    }

    /// Appends measurement rows.
    pub fn stack(&self, rows: &DMatrix<f64>) -> Result<LinearOp> {
        if rows.ncols() != self.dense.ncols() {
            return Err(Error::shape(
                format!("{} columns", self.dense.ncols()),
                format!("{} columns", rows.ncols()),
            ));
        }
        let mut dense = DMatrix::zeros(self.m() + rows.nrows(), self.dense.ncols());
        dense.rows_mut(0, self.m()).copy_from(&self.dense);
        dense.rows_mut(self.m(), rows.nrows()).copy_from(rows);
        LinearOp::new(dense, self.n1, self.n2)
    }
}

fn detect_identity_scale(dense: &DMatrix<f64>) -> Option<f64> {
    if dense.nrows() != dense.ncols() {
        return None;
    }
    let c = dense[(0, 0)];
    if c == 0.0 {
        return None;
    }
    for j in 0..dense.ncols() {
        for i in 0..dense.nrows() {
            let want = if i == j { c } else { 0.0 };
            if dense[(i, j)] != want {
                return None;
            }
        }
    }
    Some(c)
}

/// Ground truth of a synthetic instance: `b = 𝒜X₀ + ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub x0: Matrix,
    pub eps: DVector<f64>,
    /// Numerical rank of `x0`.
    pub k0: usize,
}

/// Record of the rescaling applied by [`normalize`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    /// Factor multiplying the original operator and data.
    pub scale: f64,
    /// Regularizer before rescaling, when one was supplied.
    pub original_reg: Option<Regularizer>,
}

impl Default for Normalization {
    fn default() -> Self {
        Normalization {
            scale: 1.0,
            original_reg: None,
        }
    }
}

impl Normalization {
    /// Converts a squared data fit back to the original units.
    pub fn original_fit(&self, fit: f64) -> f64 {
        fit / (self.scale * self.scale)
    }
}

/// Operator, data and optional ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    op: LinearOp,
    b: DVector<f64>,
    ground_truth: Option<GroundTruth>,
    normalization: Normalization,
}

impl ProblemInstance {
    pub fn new(op: LinearOp, b: DVector<f64>) -> Result<Self> {
        if b.len() != op.m() {
            return Err(Error::shape(
                format!("{} measurements", op.m()),
                b.len().to_string(),
            ));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(ProblemInstance {
            op,
            b,
            ground_truth: None,
            normalization: Normalization::default(),
        })
    }

    /// Builds `b = 𝒜X₀ + ε`.
    pub fn with_ground_truth(op: LinearOp, x0: Matrix, eps: DVector<f64>) -> Result<Self> {
        let b = op.apply(&x0)? + &eps;
        let mut inst = ProblemInstance::new(op, b)?;
        let k0 = spectral::numerical_rank(&spectral::singular_values(&x0)?);
        inst.ground_truth = Some(GroundTruth { x0, eps, k0 });
        Ok(inst)
    }

    pub fn op(&self) -> &LinearOp {
        &self.op
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn shape(&self) -> (usize, usize) {
        self.op.shape()
    }

    pub fn ground_truth(&self) -> Option<&GroundTruth> {
        self.ground_truth.as_ref()
    }

    pub fn normalization(&self) -> &Normalization {
        &self.normalization
    }

    /// `𝒜X − b`.
    pub fn residual(&self, x: &Matrix) -> Result<DVector<f64>> {
        Ok(self.op.apply(x)? - &self.b)
    }

    /// `‖𝒜X − b‖²`.
    pub fn data_fit(&self, x: &Matrix) -> Result<f64> {
        Ok(self.residual(x)?.norm_squared())
    }

    /// `(I − 𝒜*𝒜)X + 𝒜*b`.
    pub fn z_point(&self, x: &Matrix) -> Result<Matrix> {
        let r = self.residual(x)?;
        Ok(x - self.op.adjoint(&r)?)
    }

    /// `2𝒜*(𝒜X − b)`, the gradient of the data fit.
    pub fn fit_gradient(&self, x: &Matrix) -> Result<Matrix> {
        Ok(self.op.adjoint(&self.residual(x)?)? * 2.0)
    }
}

/// Rescales an instance so that `‖𝒜‖ = 0.99` whenever `‖𝒜‖ ≥ 1`.
///
/// Operator, data and noise are multiplied by `c = 0.99/‖𝒜‖`; `μ` and `λ`
/// by `c²`. Minimizers are unchanged and objective values scale by `c²`.
pub fn normalize(inst: &ProblemInstance, reg: &Regularizer) -> Result<(ProblemInstance, Regularizer)> {
    let norm = inst.op.norm();
    if norm == 0.0 {
        return Err(Error::ZeroOperator);
    }
    if norm < 1.0 {
        return Ok((inst.clone(), *reg));
    }
    let c = NORMALIZED_NORM / norm;
    let reg2 = match *reg {
        Regularizer::MuRank { mu } => Regularizer::MuRank { mu: mu * c * c },
        Regularizer::Nuclear { lambda } => Regularizer::Nuclear {
            lambda: lambda * c * c,
        },
        fixed @ Regularizer::FixedRank { .. } => fixed,
    };
    let ground_truth = inst.ground_truth.as_ref().map(|g| GroundTruth {
        x0: g.x0.clone(),
        eps: &g.eps * c,
        k0: g.k0,
    });
    let out = ProblemInstance {
        op: inst.op.scaled(c),
        b: &inst.b * c,
        ground_truth,
        normalization: Normalization {
            scale: inst.normalization.scale * c,
            original_reg: Some(inst.normalization.original_reg.unwrap_or(*reg)),
        },
    };
    Ok((out, reg2))
}

fn gaussian_matrix(rows: usize, cols: usize, std: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| std * rng.sample::<f64, _>(StandardNormal))
}

/// Operator with i.i.d. `N(0, std²)` entries.
pub fn gen_gaussian_op(m: usize, n1: usize, n2: usize, std: f64, seed: RngSeed) -> Result<LinearOp> {
    if !(std >= 0.0 && std.is_finite()) {
        return Err(Error::param("std", format!("must be non-negative, got {std}")));
    }
    let mut rng = seed.rng();
    LinearOp::new(gaussian_matrix(m, n1 * n2, std, &mut rng), n1, n2)
}

/// Product of `n1×K` and `K×n2` Gaussian factors.
pub fn gen_low_rank(n1: usize, n2: usize, k: usize, std: f64, seed: RngSeed) -> Result<Matrix> {
    if k == 0 || k > n1.min(n2) {
        return Err(Error::param("k", format!("must lie in 1..={}, got {k}", n1.min(n2))));
    }
    let mut rng = seed.rng();
    let l = gaussian_matrix(n1, k, std, &mut rng);
    let r = gaussian_matrix(k, n2, std, &mut rng);
    Ok(l * r)
}

/// Noise convention for [`gen_instance`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSpec {
    None,
    /// I.i.d. entries with this standard deviation.
    Std(f64),
    /// Gaussian direction rescaled to this exact Euclidean norm.
    Norm(f64),
}

/// Draws `ε` and builds `b = 𝒜X₀ + ε`.
pub fn gen_instance(op: LinearOp, x0: Matrix, noise: NoiseSpec, seed: RngSeed) -> Result<ProblemInstance> {
    let m = op.m();
    let mut rng = seed.rng();
    let eps = match noise {
        NoiseSpec::None => DVector::zeros(m),
        NoiseSpec::Std(s) => {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::param("noise_std", format!("must be non-negative, got {s}")));
            }
            DVector::from_fn(m, |_, _| s * rng.sample::<f64, _>(StandardNormal))
        }
        NoiseSpec::Norm(n) => {
            if !(n >= 0.0 && n.is_finite()) {
                return Err(Error::param("noise_norm", format!("must be non-negative, got {n}")));
            }
            if n == 0.0 {
                DVector::zeros(m)
            } else {
                let g = DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
                &g * (n / g.norm())
            }
        }
    };
    ProblemInstance::with_ground_truth(op, x0, eps)
}

/// Least-squares solution restricted to `Ran X₀`: minimizes `‖𝒜(QC) − b‖`
/// over `C`, with `Q` an orthonormal basis of the column space of `X₀`.
pub fn range_oracle_solution(op: &LinearOp, b: &DVector<f64>, x0: &Matrix) -> Result<Matrix> {
    let (n1, n2) = op.shape();
    let s = spectral::svd(x0)?;
    let k = s.rank();
    if k == 0 {
        return Ok(Matrix::zeros(n1, n2));
    }
    let q = s.u.columns(0, k).into_owned();
    let design = op.design_fixed_left(&q);
    let c = spectral::lstsq(&design, b)?;
    Ok(q * Matrix::from_column_slice(k, n2, c.as_slice()))
}

/// The 2×2 instance `𝒜(X) = (x₁₂, x₂₁, x₂₂)`, `b = (1, 1, 0)`, on which no
/// best rank-1 solution exists.
pub fn pathological_instance() -> ProblemInstance {
    // column-major: x11 → 0, x21 → 1, x12 → 2, x22 → 3
    let dense = DMatrix::from_row_slice(
        3,
        4,
        &[
            0.0, 0.0, 1.0, 0.0, //
            0.0, 1.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, 1.0,
        ],
    );
    let op = LinearOp::new(dense, 2, 2).expect("fixed operator is valid");
    ProblemInstance::new(op, DVector::from_vec(vec![1.0, 1.0, 0.0])).expect("fixed data is valid")
}
