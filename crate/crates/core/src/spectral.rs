//! Dense spectral primitives.
//!
//! Every other module goes through [`svd`] so that singular values come out
//! sorted non-increasing and singular vectors carry a fixed sign convention.
//! The decomposition is stored thin: `u` is `n1 × n` and `v` is `n2 × n` with
//! `n = min(n1, n2)`. Callers never see the complementary columns; the
//! non-square diagonal of the full decomposition only ever multiplies them by
//! zero.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Dense real matrix. Storage is column-major, which is also the
/// vectorization order used by [`crate::problem::LinearOp`].
pub type Matrix = DMatrix<f64>;

/// Relative cutoff for the numerical rank.
pub const RANK_TOL: f64 = 1e-6;

/// Thin singular value decomposition `x = u · diag(sigma) · vᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Svd {
    pub u: Matrix,
    pub sigma: DVector<f64>,
    pub v: Matrix,
}

impl Svd {
    pub fn reconstruct(&self) -> Matrix {
        self.compose(self.sigma.as_slice())
    }

    /// `u · diag(values) · vᵀ` in the frame of this decomposition.
    pub fn compose(&self, values: &[f64]) -> Matrix {
        let mut us = self.u.clone();
        for (j, &s) in values.iter().enumerate() {
            us.column_mut(j).scale_mut(s);
        }
        us * self.v.transpose()
    }

    pub fn rank(&self) -> usize {
        numerical_rank(self.sigma.as_slice())
    }
}

/// Singular value decomposition with sorted singular values and a
/// deterministic sign convention: in every left singular vector the entry of
/// largest magnitude (lowest index on ties) is positive.
pub fn svd(x: &Matrix) -> Result<Svd> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let (n1, n2) = x.shape();
    let n = n1.min(n2);
    if n == 0 {
        return Ok(Svd {
            u: Matrix::zeros(n1, 0),
            sigma: DVector::zeros(0),
            v: Matrix::zeros(n2, 0),
        });
    }
    let xf = faer::Mat::<f64>::from_fn(n1, n2, |i, j| x[(i, j)]);
    let raw = xf.thin_svd().map_err(|_| Error::SvdNoConvergence)?;
    let (u_raw, v_raw) = (raw.U(), raw.V());
    let sv = raw.S().column_vector();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]).then(a.cmp(&b)));

    let mut u = Matrix::zeros(n1, n);
    let mut v = Matrix::zeros(n2, n);
    let mut sigma = DVector::zeros(n);
    for (dst, &src) in order.iter().enumerate() {
        sigma[dst] = sv[src].max(0.0);
        let mut ucol = DVector::from_fn(n1, |i, _| u_raw[(i, src)]);
        let mut vcol = DVector::from_fn(n2, |i, _| v_raw[(i, src)]);
        let mut pivot = 0;
        for i in 1..n1 {
            if ucol[i].abs() > ucol[pivot].abs() {
                pivot = i;
            }
        }
        if ucol[pivot] < 0.0 {
            ucol.neg_mut();
            vcol.neg_mut();
        }
        u.set_column(dst, &ucol);
        v.set_column(dst, &vcol);
    }
    Ok(Svd { u, sigma, v })
}

/// Singular values only, sorted non-increasing.
pub fn singular_values(x: &Matrix) -> Result<Vec<f64>> {
    Ok(svd(x)?.sigma.as_slice().to_vec())
}

/// `#{i : sigma_i > RANK_TOL · max(sigma_1, 1)}` for a non-increasing `sigma`.
pub fn numerical_rank(sigma: &[f64]) -> usize {
    let top = sigma.first().copied().unwrap_or(0.0).max(1.0);
    sigma.iter().filter(|&&s| s > RANK_TOL * top).count()
}

/// Zeroes singular values that fall under the rank cutoff.
pub(crate) fn clean_spectrum(sigma: &[f64]) -> Vec<f64> {
    let r = numerical_rank(sigma);
    sigma
        .iter()
        .enumerate()
        .map(|(i, &s)| if i < r { s } else { 0.0 })
        .collect()
}

/// Evaluates an absolutely symmetric vector function on the singular values.
pub fn lift_spectral<F>(f: F, x: &Matrix) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let s = svd(x)?;
    Ok(f(s.sigma.as_slice()))
}

/// Applies a vector map to the singular values and recomposes with the
/// singular vectors of `x`.
pub fn lift_spectral_map<G>(g: G, x: &Matrix) -> Result<Matrix>
where
    G: Fn(&[f64]) -> Vec<f64>,
{
    let s = svd(x)?;
    let mapped = g(s.sigma.as_slice());
    if mapped.len() != s.sigma.len() {
        return Err(Error::SpectralLength {
            expected: s.sigma.len(),
            got: mapped.len(),
        });
    }
    Ok(s.compose(&mapped))
}

/// Minimum-norm least-squares solution of `m · x ≈ rhs`.
pub(crate) fn lstsq(m: &Matrix, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    if m.nrows() != rhs.len() {
        return Err(Error::shape(
            format!("{} right-hand side entries", m.nrows()),
            rhs.len().to_string(),
        ));
    }
    if m.iter().chain(rhs.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let dec = svd(m)?;
    let top = dec.sigma.as_slice().first().copied().unwrap_or(0.0);
    let cutoff = 1e-13 * (m.nrows().max(m.ncols()) as f64) * top;
    let mut coef = dec.u.transpose() * rhs;
    for (c, &s) in coef.iter_mut().zip(dec.sigma.iter()) {
        *c = if s > cutoff { *c / s } else { 0.0 };
    }
    Ok(&dec.v * coef)
}

/// A vector sorted by absolute value, with enough bookkeeping to undo the
/// sort.
#[derive(Debug, Clone, PartialEq)]
pub struct SortedAbsVector {
    /// `|x|` sorted non-increasing.
    pub values: Vec<f64>,
    /// `values[i] = |x[permutation[i]]|`.
    pub permutation: Vec<usize>,
    /// Sign of `x[permutation[i]]`; zero entries get `+1`.
    pub signs: Vec<f64>,
}

impl SortedAbsVector {
    /// Recovers the original vector.
    pub fn reconstruct(&self) -> Vec<f64> {
        self.restore(&self.values)
    }

    /// Maps a vector expressed in sorted coordinates back to the original
    /// order and signs.
    pub fn restore(&self, sorted: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; sorted.len()];
        for (i, &p) in self.permutation.iter().enumerate() {
            out[p] = self.signs[i] * sorted[i];
        }
        out
    }
}

/// Stable sort by decreasing magnitude.
pub fn sort_abs(x: &[f64]) -> SortedAbsVector {
    let mut permutation: Vec<usize> = (0..x.len()).collect();
    permutation.sort_by(|&a, &b| x[b].abs().total_cmp(&x[a].abs()));
    let values = permutation.iter().map(|&p| x[p].abs()).collect();
    let signs = permutation
        .iter()
        .map(|&p| if x[p] < 0.0 { -1.0 } else { 1.0 })
        .collect();
    SortedAbsVector {
        values,
        permutation,
        signs,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::RngSeed;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn random_matrix(n1: usize, n2: usize, stream: u64) -> Matrix {
        let mut rng = RngSeed::new(7, stream).rng();
        Matrix::from_fn(n1, n2, |_, _| rng.sample(StandardNormal))
    }

    #[test]
    fn identity_has_unit_spectrum() {
        let s = svd(&Matrix::identity(3, 3)).unwrap();
        assert_eq!(s.sigma.as_slice(), &[1.0, 1.0, 1.0]);
        assert!((s.reconstruct() - Matrix::identity(3, 3)).norm() < 1e-14);
    }

    #[test]
    fn diagonal_with_negative_entry() {
        let x = Matrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, -3.0]);
        let s = svd(&x).unwrap();
        assert!((s.sigma[0] - 3.0).abs() < 1e-14);
        assert!((s.sigma[1] - 2.0).abs() < 1e-14);
        assert!((s.reconstruct() - x).norm() < 1e-14);
    }

    #[test]
    fn random_reconstruction_and_orthogonality() {
        for (n1, n2) in [(5, 4), (4, 5), (6, 6), (1, 3)] {
            let x = random_matrix(n1, n2, (n1 * 10 + n2) as u64);
            let s = svd(&x).unwrap();
            let err = (s.reconstruct() - &x).norm();
            assert!(err < 1e-10 * s.sigma[0], "{n1}x{n2}: {err}");
            let n = n1.min(n2);
            assert!((s.u.transpose() * &s.u - Matrix::identity(n, n)).norm() < 1e-10);
            assert!((s.v.transpose() * &s.v - Matrix::identity(n, n)).norm() < 1e-10);
            assert!(s.sigma.as_slice().windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn sign_convention_and_determinism() {
        let x = random_matrix(5, 4, 3);
        let a = svd(&x).unwrap();
        let b = svd(&x).unwrap();
        assert_eq!(a, b);
        for j in 0..4 {
            let col = a.u.column(j);
            let imax = col.iamax();
            assert!(col[imax] > 0.0);
        }
    }

    #[test]
    fn rejects_non_finite() {
        let mut x = Matrix::zeros(2, 2);
        x[(0, 1)] = f64::NAN;
        assert!(matches!(svd(&x), Err(Error::NonFinite)));
    }

    #[test]
    fn lift_card_and_constant() {
        let x = Matrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0, 2.0]));
        let card = lift_spectral(|s| s.iter().filter(|&&v| v > 1e-12).count() as f64, &x).unwrap();
        assert_eq!(card, 2.0);
        assert_eq!(lift_spectral(|_| 0.0, &random_matrix(3, 4, 1)).unwrap(), 0.0);
    }

    #[test]
    fn lift_l1_is_trace_of_sqrt_gram() {
        let x = random_matrix(4, 4, 11);
        let nuc = lift_spectral(|s| s.iter().sum(), &x).unwrap();
        // independent route: eigenvalues of XᵀX
        let gram = x.transpose() * &x;
        let eig = nalgebra::SymmetricEigen::new(gram);
        let trace_sqrt: f64 = eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).sum();
        assert!((nuc - trace_sqrt).abs() < 1e-10);
    }

    #[test]
    fn lift_map_identity_and_thresholds() {
        let x = random_matrix(5, 3, 5);
        let same = lift_spectral_map(|s| s.to_vec(), &x).unwrap();
        assert!((same - &x).norm() < 1e-10);

        let d = Matrix::from_diagonal(&DVector::from_vec(vec![3.0, 0.5, 1.5]));
        let hard = lift_spectral_map(
            |s| s.iter().map(|&v| if v > 1.0 { v } else { 0.0 }).collect(),
            &d,
        )
        .unwrap();
        let expect = Matrix::from_diagonal(&DVector::from_vec(vec![3.0, 0.0, 1.5]));
        assert!((hard - expect).norm() < 1e-12);

        let soft = lift_spectral_map(|s| s.iter().map(|&v| (v - 0.7).max(0.0)).collect(), &x)
            .unwrap();
        let got = singular_values(&soft).unwrap();
        let want: Vec<f64> = singular_values(&x)
            .unwrap()
            .iter()
            .map(|&v| (v - 0.7).max(0.0))
            .collect();
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-10);
        }
    }

    #[test]
    fn lift_map_length_mismatch() {
        let x = random_matrix(3, 3, 2);
        let err = lift_spectral_map(|s| s[..1].to_vec(), &x).unwrap_err();
        assert!(matches!(err, Error::SpectralLength { expected: 3, got: 1 }));
    }

    #[test]
    fn sort_abs_examples() {
        let s = sort_abs(&[-3.0, 1.0, 2.0]);
        assert_eq!(s.values, vec![3.0, 2.0, 1.0]);
        assert_eq!(s.signs, vec![-1.0, 1.0, 1.0]);
        assert_eq!(s.reconstruct(), vec![-3.0, 1.0, 2.0]);

        let z = sort_abs(&[0.0, 0.0]);
        assert_eq!(z.values, vec![0.0, 0.0]);
        assert_eq!(z.permutation, vec![0, 1]);
    }

    #[test]
    fn rank_cutoff() {
        assert_eq!(numerical_rank(&[5.0, 1e-3, 1e-7]), 2);
        assert_eq!(numerical_rank(&[0.5, 1e-7]), 1);
        assert_eq!(numerical_rank(&[]), 0);
    }

    proptest::proptest! {
        #[test]
        fn sort_abs_round_trip(x in proptest::collection::vec(-10.0f64..10.0, 0..12)) {
            let s = sort_abs(&x);
            proptest::prop_assert_eq!(s.reconstruct(), x);
            proptest::prop_assert!(s.values.windows(2).all(|w| w[0] >= w[1]));
            proptest::prop_assert!(s.values.iter().all(|&v| v >= 0.0));
        }
    }
}
