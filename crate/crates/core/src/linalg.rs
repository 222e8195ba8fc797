//! Small dense linear-algebra helpers shared by the estimators.
//!
//! Everything here works on symmetric positive (semi)definite matrices of
//! modest size (p up to a few hundred), so dense factorizations are fine.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result, Subject};

/// Reciprocal condition numbers below this are treated as singular.
pub const RCOND_FLOOR: f64 = 1e-12;

/// Cholesky factor of a symmetric positive-definite matrix together with a
/// 1-norm reciprocal condition estimate.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    chol: Cholesky<f64, Dyn>,
    rcond: f64,
}

impl SpdFactor {
    /// Factor `g`, rejecting matrices that are indefinite or whose
    /// reciprocal condition estimate falls below [`RCOND_FLOOR`].
    pub fn new(g: &DMatrix<f64>, subject: Subject) -> Result<Self> {
        if !g.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "Gram matrix of {subject} is {}x{}",
                g.nrows(),
                g.ncols()
            )));
        }
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite entry in Gram matrix of {subject}")));
        }
        let chol = Cholesky::new(g.clone()).ok_or(Error::RankDeficient { subject, rcond: 0.0 })?;
        let mut factor = SpdFactor { chol, rcond: 0.0 };
        let norm = one_norm(g);
        factor.rcond = if norm == 0.0 {
            0.0
        } else {
            1.0 / (norm * factor.inverse_one_norm_estimate())
        };
        if !(factor.rcond >= RCOND_FLOOR) {
            return Err(Error::RankDeficient { subject, rcond: factor.rcond });
        }
        Ok(factor)
    }

    pub fn rcond(&self) -> f64 {
        self.rcond
    }

    pub fn dim(&self) -> usize {
        self.chol.l_dirty().nrows()
    }

    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(rhs)
    }

    pub fn solve_matrix(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(rhs)
    }

    /// `tr(G⁻¹ B)` via a factor solve against the columns of `B`.
    pub fn trace_solve(&self, b: &DMatrix<f64>) -> f64 {
        self.solve_matrix(b).trace()
    }

    /// Hager–Higham estimate of `‖G⁻¹‖₁`. `G⁻¹` is symmetric, so the
    /// transposed solves reuse the same factor.
    fn inverse_one_norm_estimate(&self) -> f64 {
        let n = self.dim();
        if n == 0 {
            return 0.0;
        }
        let mut x = DVector::from_element(n, 1.0 / n as f64);
        let mut estimate = 0.0;
        let mut last_j = usize::MAX;
        for _ in 0..5 {
            let y = self.solve(&x);
            estimate = y.iter().map(|v| v.abs()).sum::<f64>();
            let sign = y.map(|v| if v >= 0.0 { 1.0 } else { -1.0 });
            let z = self.solve(&sign);
            let (j, zmax) = z
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v.abs() > acc.1 { (i, v.abs()) } else { acc });
            if zmax <= z.dot(&x) || j == last_j {
                break;
            }
            x.fill(0.0);
            x[j] = 1.0;
            last_j = j;
        }
        // Higham's alternating test vector guards against Hager's worst cases.
        let alt = DVector::from_fn(n, |i, _| {
            let s = if i % 2 == 0 { 1.0 } else { -1.0 };
            let t = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
            s * (1.0 + t)
        });
        let alt_est = 2.0 * self.solve(&alt).iter().map(|v| v.abs()).sum::<f64>() / (3.0 * n as f64);
        estimate.max(alt_est)
    }
}

pub fn one_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Largest absolute asymmetry relative to the largest absolute entry.
pub fn relative_asymmetry(a: &DMatrix<f64>) -> f64 {
    let scale = a.amax();
    if scale == 0.0 {
        return 0.0;
    }
    let mut worst = 0.0_f64;
    for i in 0..a.nrows() {
        for j in (i + 1)..a.ncols() {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst / scale
}

/// `(A + Aᵀ)/2`.
pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Smallest and largest eigenvalues of a symmetric matrix.
pub fn eigen_range(a: &DMatrix<f64>) -> (f64, f64) {
    let eig = symmetrize(a).symmetric_eigenvalues();
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let max = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (min, max)
}
