//! Convex quadratic programs over the probability simplex.
//!
//! All three weight-selection criteria reduce to minimizing
//! `f(w) = wᵀAw + bᵀw + c` over `{w ≥ 0, Σw = 1}` with `A` PSD. The solver
//! runs accelerated projected gradient (FISTA with adaptive restart) and
//! periodically polishes the iterate by solving the equality-constrained
//! problem on its support. Termination is certified by the Frank–Wolfe
//! duality gap `⟨∇f(w), w⟩ − minᵢ ∇f(w)ᵢ`, which bounds `f(w) − f*`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg::{eigen_range, relative_asymmetry};

/// Negative entries down to this magnitude are treated as rounding noise.
const CLAMP_TOL: f64 = 1e-12;
const MAX_ITER: usize = 100_000;
const GAP_TOL: f64 = 1e-10;
const POLISH_EVERY: usize = 20;

/// Nonnegative weights summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexWeights(Vec<f64>);

impl SimplexWeights {
    /// Validate `values`, zeroing entries in `(−1e-12, 0)` and renormalizing.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("empty weight vector".into()));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < -CLAMP_TOL) {
            return Err(Error::InvalidInput(format!("weight {v} is outside the simplex")));
        }
        for v in values.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let total: f64 = values.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidInput(format!("weights sum to {total}, not 1")));
        }
        if total != 1.0 {
            values.iter_mut().for_each(|v| *v /= total);
        }
        Ok(SimplexWeights(values))
    }

    pub fn uniform(k: usize) -> Self {
        SimplexWeights(vec![1.0 / k as f64; k])
    }

    pub fn vertex(k: usize, i: usize) -> Self {
        let mut w = vec![0.0; k];
        w[i] = 1.0;
        SimplexWeights(w)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Index of the largest weight; the lowest index wins ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.0.iter().enumerate() {
            if v > self.0[best] {
                best = i;
            }
        }
        best
    }

    /// Scatter into a length-`k` vector at positions `index`.
    pub fn expand(&self, index: &[usize], k: usize) -> Self {
        let mut full = vec![0.0; k];
        for (&i, &v) in index.iter().zip(&self.0) {
            full[i] = v;
        }
        SimplexWeights(full)
    }
}

/// `wᵀAw + bᵀw + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexQP {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: f64,
}

impl SimplexQP {
    /// Checks symmetry (1e-10 relative) and the PSD eigenvalue floor
    /// (`λmin ≥ −1e-8·λmax`); `A` is stored symmetrized.
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, c: f64) -> Result<Self> {
        let k = b.len();
        if a.nrows() != k || a.ncols() != k {
            return Err(Error::DimensionMismatch(format!(
                "QP matrix is {}x{} but linear term has length {k}",
                a.nrows(),
                a.ncols()
            )));
        }
        if k == 0 {
            return Err(Error::InvalidInput("QP over an empty simplex".into()));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) || !c.is_finite() {
            return Err(Error::InvalidInput("non-finite QP coefficients".into()));
        }
        if relative_asymmetry(&a) > 1e-10 {
            return Err(Error::InvalidInput("QP matrix is not symmetric".into()));
        }
        let a = (&a + a.transpose()) * 0.5;
        let (min, max) = eigen_range(&a);
        if min < -1e-8 * max.max(0.0) {
            return Err(Error::NotPsd { min_eigenvalue: min });
        }
        Ok(SimplexQP { a, b, c })
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn evaluate(&self, w: &[f64]) -> f64 {
        let w = DVector::from_column_slice(w);
        w.dot(&(&self.a * &w)) + self.b.dot(&w) + self.c
    }

    pub fn gradient(&self, w: &[f64]) -> DVector<f64> {
        let w = DVector::from_column_slice(w);
        &self.a * &w * 2.0 + &self.b
    }

    /// Frank–Wolfe gap `⟨∇f(w), w⟩ − minᵢ ∇f(w)ᵢ`, an upper bound on
    /// `f(w) − min f` for convex `f`.
    pub fn duality_gap(&self, w: &[f64]) -> f64 {
        let g = self.gradient(w);
        let inner: f64 = g.iter().zip(w).map(|(g, w)| g * w).sum();
        inner - g.min()
    }

    /// Largest KKT stationarity violation at a simplex point `w`.
    pub fn kkt_residual(&self, w: &[f64]) -> f64 {
        let g = self.gradient(w);
        let support: Vec<usize> = (0..w.len()).filter(|&i| w[i] > 0.0).collect();
        if support.is_empty() {
            return f64::INFINITY;
        }
        let lambda = support.iter().map(|&i| g[i]).sum::<f64>() / support.len() as f64;
        (0..w.len())
            .map(|i| if w[i] > 0.0 { (g[i] - lambda).abs() } else { (lambda - g[i]).max(0.0) })
            .fold(0.0, f64::max)
    }
}

/// Euclidean projection onto the probability simplex (sort-based).
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cumsum += ui;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Result of a simplex QP solve with its optimality certificate.
#[derive(Debug, Clone)]
pub struct QpSolution {
    pub weights: SimplexWeights,
    pub objective: f64,
    pub gap: f64,
    pub iterations: usize,
}

pub fn solve_simplex_qp(qp: &SimplexQP) -> Result<SimplexWeights> {
    solve_simplex_qp_detailed(qp).map(|s| s.weights)
}

pub fn solve_simplex_qp_detailed(qp: &SimplexQP) -> Result<QpSolution> {
    let k = qp.dim();
    let tol = |f: f64| GAP_TOL * (1.0 + f.abs());
    let finish = |w: Vec<f64>, iterations: usize| -> Result<QpSolution> {
        let weights = SimplexWeights::new(w)?;
        let objective = qp.evaluate(weights.values());
        let gap = qp.duality_gap(weights.values());
        Ok(QpSolution { weights, objective, gap, iterations })
    };
    if k == 1 {
        return finish(vec![1.0], 0);
    }

    let (_, lmax) = eigen_range(&qp.a);
    // Gradient Lipschitz constant is 2·λmax(A); floor it so linear problems
    // still take finite steps.
    let lipschitz = (2.0 * lmax).max(1e-12 * (1.0 + qp.b.amax()));
    let step = 1.0 / lipschitz;

    let mut x = vec![1.0 / k as f64; k];
    let mut fx = qp.evaluate(&x);
    let mut y = x.clone();
    let mut t = 1.0_f64;
    let mut best = (x.clone(), fx, qp.duality_gap(&x));

    for iter in 1..=MAX_ITER {
        let g = qp.gradient(&y);
        let trial: Vec<f64> = y.iter().zip(g.iter()).map(|(yi, gi)| yi - step * gi).collect();
        let x_new = project_simplex(&trial);
        let f_new = qp.evaluate(&x_new);
        if f_new > fx {
            // Restart momentum from the last accepted iterate.
            y.clone_from(&x);
            t = 1.0;
        } else {
            let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = (t - 1.0) / t_new;
            y = x_new.iter().zip(&x).map(|(a, b)| a + beta * (a - b)).collect();
            x = x_new;
            fx = f_new;
            t = t_new;
        }

        let gap = qp.duality_gap(&x);
        if fx < best.1 || (fx == best.1 && gap < best.2) {
            best = (x.clone(), fx, gap);
        }
        if gap <= tol(fx) {
            // Snap to the exact face minimizer when it is at least as good.
            if let Some(p) = polish(qp, &x) {
                let fp = qp.evaluate(&p);
                if fp <= fx + tol(fx) && qp.duality_gap(&p) <= gap {
                    return finish(p, iter);
                }
            }
            return finish(x, iter);
        }
        if iter % POLISH_EVERY == 0 {
            if let Some(p) = polish(qp, &x) {
                let fp = qp.evaluate(&p);
                let gp = qp.duality_gap(&p);
                if fp <= fx + tol(fx) && gp <= tol(fp) {
                    return finish(p, iter);
                }
                if fp < fx {
                    x = p;
                    fx = fp;
                    y.clone_from(&x);
                    t = 1.0;
                }
            }
        }
    }
    Err(Error::NotConverged { best: best.0, gap: best.2, iterations: MAX_ITER })
}

/// Primal active-set refinement started at `w`. Each step minimizes over
/// the affine hull of the current support (minimum-norm displacement, so
/// flat optimal faces keep the nearest optimum), steps back to the simplex
/// boundary when the minimizer leaves it, and adds the most violating
/// index once the face is optimal. Returns `None` if a face problem is
/// unbounded or the step budget runs out.
fn polish(qp: &SimplexQP, w: &[f64]) -> Option<Vec<f64>> {
    let k = w.len();
    let mut current = w.to_vec();
    let mut support: Vec<usize> = (0..k).filter(|&i| w[i] > 0.0).collect();
    for _ in 0..(4 * k + 8) {
        let s = support.len();
        let g = qp.gradient(&current);
        let mut kkt = DMatrix::zeros(s + 1, s + 1);
        let mut rhs = DVector::zeros(s + 1);
        for (r, &i) in support.iter().enumerate() {
            for (c, &j) in support.iter().enumerate() {
                kkt[(r, c)] = 2.0 * qp.a[(i, j)];
            }
            kkt[(r, s)] = 1.0;
            kkt[(s, r)] = 1.0;
            rhs[r] = -g[i];
        }
        // Symmetric (indefinite) KKT matrix: pseudo-inverse through its
        // eigendecomposition; eigenvectors of ~0 eigenvalues span the flat
        // directions of the face.
        let cutoff = 1e-13 * kkt.amax().max(1.0);
        let eig = SymmetricEigen::new(kkt.clone());
        let mut sol = DVector::<f64>::zeros(s + 1);
        for (i, &l) in eig.eigenvalues.iter().enumerate() {
            if l.abs() > cutoff {
                let q = eig.eigenvectors.column(i);
                sol += q * (q.dot(&rhs) / l);
            }
        }
        if sol.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let target: Vec<f64> = if (&kkt * &sol - &rhs).amax() <= 1e-9 * (1.0 + g.amax()) {
            support.iter().enumerate().map(|(r, &i)| current[i] + sol[r]).collect()
        } else {
            // Inconsistent system: the objective is linear and decreasing
            // along a null direction of the face. Follow that ray.
            let mut d = DVector::<f64>::zeros(s);
            for (i, &l) in eig.eigenvalues.iter().enumerate() {
                if l.abs() <= cutoff {
                    let n = eig.eigenvectors.column(i).rows(0, s).into_owned();
                    let along: f64 = support.iter().enumerate().map(|(r, &j)| n[r] * g[j]).sum();
                    d -= n * along;
                }
            }
            if !d.iter().any(|&x| x < 0.0) {
                return None;
            }
            // far enough that some coordinate must block
            let reach = 2.0 / d.iter().filter(|&&x| x < 0.0).fold(f64::INFINITY, |m, &x| m.min(-x));
            support.iter().enumerate().map(|(r, &i)| current[i] + reach * d[r]).collect()
        };

        if target.iter().all(|&v| v >= 0.0) {
            for (r, &i) in support.iter().enumerate() {
                current[i] = target[r];
            }
            let total: f64 = current.iter().sum();
            current.iter_mut().for_each(|v| *v /= total);
            let g = qp.gradient(&current);
            let lambda = support.iter().map(|&i| g[i]).sum::<f64>() / s as f64;
            let entering = (0..k)
                .filter(|i| !support.contains(i))
                .map(|i| (i, g[i]))
                .filter(|&(_, gi)| gi < lambda - 1e-12 * (1.0 + g.amax()))
                .min_by(|a, b| a.1.total_cmp(&b.1));
            match entering {
                None => return Some(current),
                Some((i, _)) => {
                    support.push(i);
                    support.sort_unstable();
                }
            }
            continue;
        }

        // Move toward the face minimizer until the first weight hits zero.
        let mut alpha = 1.0_f64;
        let mut blocking = None;
        for (r, &i) in support.iter().enumerate() {
            let d = target[r] - current[i];
            if target[r] < 0.0 && d < 0.0 {
                let a = -current[i] / d;
                if a < alpha {
                    alpha = a;
                    blocking = Some(i);
                }
            }
        }
        let blocking = blocking?;
        for (r, &i) in support.iter().enumerate() {
            current[i] = (current[i] + alpha * (target[r] - current[i])).max(0.0);
        }
        current[blocking] = 0.0;
        support.retain(|&i| i != blocking && current[i] > 0.0);
        if support.is_empty() {
            return None;
        }
        let total: f64 = support.iter().map(|&i| current[i]).sum();
        for &i in &support {
            current[i] /= total;
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qp(a: &[f64], b: &[f64]) -> SimplexQP {
        let k = b.len();
        SimplexQP::new(DMatrix::from_row_slice(k, k, a), DVector::from_row_slice(b), 0.0).unwrap()
    }

    #[test]
    fn symmetric_identity_splits_evenly() {
        let w = solve_simplex_qp(&qp(&[1.0, 0.0, 0.0, 1.0], &[0.0, 0.0])).unwrap();
        assert!((w.values()[0] - 0.5).abs() < 1e-12 && (w.values()[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn shifted_identity_hits_a_vertex() {
        let w = solve_simplex_qp(&qp(&[1.0, 0.0, 0.0, 1.0], &[-2.0, 0.0])).unwrap();
        assert_eq!(w.values(), &[1.0, 0.0]);
    }

    #[test]
    fn linear_objective_picks_smallest_coefficient() {
        let w = solve_simplex_qp(&qp(&[0.0; 9], &[3.0, -1.0, 2.0])).unwrap();
        assert_eq!(w.values(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn single_point_simplex() {
        let w = solve_simplex_qp(&qp(&[5.0], &[-3.0])).unwrap();
        assert_eq!(w.values(), &[1.0]);
    }

    #[test]
    fn projection_examples() {
        assert_eq!(project_simplex(&[0.5, 0.5]), vec![0.5, 0.5]);
        assert_eq!(project_simplex(&[2.0, 0.0]), vec![1.0, 0.0]);
        let p = project_simplex(&[0.3, 0.3, -5.0]);
        assert!((p[0] - 0.5).abs() < 1e-15 && p[2] == 0.0);
    }

    #[test]
    fn rejects_indefinite_and_asymmetric() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 3.0, 3.0, 1.0]);
        assert!(matches!(SimplexQP::new(a, DVector::zeros(2), 0.0), Err(Error::NotPsd { .. })));
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(SimplexQP::new(a, DVector::zeros(2), 0.0).is_err());
    }

    #[test]
    fn weights_clamp_tiny_negatives() {
        let w = SimplexWeights::new(vec![1.0 + 5e-13, -5e-13]).unwrap();
        assert_eq!(w.values()[1], 0.0);
        assert!((w.values().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(SimplexWeights::new(vec![1.1, -0.1]).is_err());
        assert!(SimplexWeights::new(vec![0.5, 0.4]).is_err());
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(SimplexWeights::new(vec![0.25, 0.375, 0.375]).unwrap().argmax(), 1);
        assert_eq!(SimplexWeights::uniform(4).argmax(), 0);
    }

    #[test]
    fn degenerate_rank_one_problem_is_certified() {
        // Identical columns: the loss part cannot distinguish candidates.
        let a = DMatrix::from_element(3, 3, 4.0);
        let b = DVector::from_vec(vec![-8.0 + 0.3, -8.0 + 0.1, -8.0 + 0.2]);
        let s = solve_simplex_qp_detailed(&SimplexQP::new(a, b, 0.0).unwrap()).unwrap();
        assert_eq!(s.weights.argmax(), 1);
        assert!(s.gap <= 1e-10 * (1.0 + s.objective.abs()));
    }
}
