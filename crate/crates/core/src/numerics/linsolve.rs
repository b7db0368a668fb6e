use crate::error::{Error, Result};
use faer::prelude::*;
use faer::sparse::SparseColMat;

/// Sparse square system in triplet form. Duplicate entries are summed.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub n: usize,
    pub triplets: Vec<(usize, usize, f64)>,
    pub rhs: Vec<f64>,
    pub tol: f64,
}

impl LinearSystem {
    pub fn new(n: usize, tol: f64) -> Self {
        Self { n, triplets: Vec::new(), rhs: vec![0.0; n], tol }
    }

    pub fn push(&mut self, row: usize, col: usize, v: f64) {
        if v != 0.0 {
            self.triplets.push((row, col, v));
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for &(r, c, v) in &self.triplets {
            y[r] += v * x[c];
        }
        y
    }

    fn residual(&self, x: &[f64]) -> Vec<f64> {
        let ax = self.matvec(x);
        self.rhs.iter().zip(ax).map(|(b, a)| b - a).collect()
    }
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Thread budget of the factorizations: `None` runs them sequentially.
pub fn set_solver_threads(threads: Option<usize>) {
    faer::set_global_parallelism(match threads {
        None => faer::Parallelism::None,
        Some(n) => faer::Parallelism::Rayon(n),
    });
}

/// Direct sparse LU solve with one step of iterative refinement.
/// Returns an error unless ||Ax - b|| <= tol (1 + ||b||).
pub fn solve_linear(sys: &LinearSystem) -> Result<Vec<f64>> {
    let n = sys.n;
    if sys.rhs.len() != n {
        return Err(Error::Dimension(format!("matrix is {n}x{n} but rhs has {} entries", sys.rhs.len())));
    }
    if !(sys.tol > 0.0) {
        return Err(Error::Dimension("solve tolerance must be positive".into()));
    }
    let mut row_nnz = vec![false; n];
    for &(r, c, v) in &sys.triplets {
        if r >= n || c >= n {
            return Err(Error::Dimension(format!("entry ({r},{c}) outside {n}x{n}")));
        }
        if v != 0.0 {
            row_nnz[r] = true;
        }
    }
    if row_nnz.iter().any(|&b| !b) {
        return Err(Error::SolverFailure { residual: f64::INFINITY });
    }
    let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &sys.triplets)
        .map_err(|_| Error::SolverFailure { residual: f64::INFINITY })?;
    let factored = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
        let lu = mat.sp_lu().ok()?;
        let b = Col::<f64>::from_fn(n, |i| sys.rhs[i]);
        let sol = lu.solve(&b);
        Some((lu, sol))
    }));
    let (lu, sol) = match factored {
        Ok(Some(v)) => v,
        _ => return Err(Error::SolverFailure { residual: f64::INFINITY }),
    };
    let mut x: Vec<f64> = (0..n).map(|i| sol[i]).collect();
    let bnorm = norm2(&sys.rhs);
    let bound = sys.tol * (1.0 + bnorm);
    let mut r = sys.residual(&x);
    let mut rn = norm2(&r);
    if rn.is_finite() && rn > 0.0 {
        let rc = Col::<f64>::from_fn(n, |i| r[i]);
        let dx = match std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| lu.solve(&rc))) {
            Ok(d) => d,
            Err(_) => return Err(Error::SolverFailure { residual: rn }),
        };
        let cand: Vec<f64> = (0..n).map(|i| x[i] + dx[i]).collect();
        let r2 = sys.residual(&cand);
        let rn2 = norm2(&r2);
        if rn2 < rn {
            x = cand;
            r = r2;
            rn = rn2;
        }
    }
    let _ = r;
    if !rn.is_finite() || rn > bound || x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SolverFailure { residual: rn });
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_returns_rhs() {
        let mut s = LinearSystem::new(5, 1e-12);
        for i in 0..5 {
            s.push(i, i, 1.0);
            s.rhs[i] = i as f64 * 1.5 - 2.0;
        }
        assert_eq!(solve_linear(&s).unwrap(), s.rhs);
    }

    #[test]
    fn dirichlet_laplacian_recovers_solution() {
        let xs = [1.0, -2.0, 0.5, 3.0];
        let mut s = LinearSystem::new(4, 1e-14);
        for i in 0..4 {
            s.push(i, i, 2.0);
            if i > 0 {
                s.push(i, i - 1, -1.0);
            }
            if i < 3 {
                s.push(i, i + 1, -1.0);
            }
        }
        // b = A x* by hand
        s.rhs = vec![4.0, -5.5, 0.0, 5.5];
        let x = solve_linear(&s).unwrap();
        for (a, b) in x.iter().zip(xs) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_row_is_solver_failure() {
        let mut s = LinearSystem::new(3, 1e-10);
        s.push(0, 0, 1.0);
        s.push(2, 2, 1.0);
        s.push(2, 1, 0.0);
        assert!(matches!(solve_linear(&s), Err(Error::SolverFailure { .. })));
    }

    #[test]
    fn dependent_rows_fail() {
        let mut s = LinearSystem::new(2, 1e-10);
        s.push(0, 0, 1.0);
        s.push(0, 1, 1.0);
        s.push(1, 0, 2.0);
        s.push(1, 1, 2.0);
        s.rhs = vec![1.0, 3.0];
        assert!(matches!(solve_linear(&s), Err(Error::SolverFailure { .. })));
    }
}
