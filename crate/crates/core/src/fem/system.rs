//! Dense symmetric system with symmetric Dirichlet elimination and a
//! Cholesky solve.

use std::collections::BTreeMap;

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::llt;
use faer::{MatMut, MatRef, Par};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct StiffnessSystem {
    n: usize,
    /// Row-major n × n.
    k: Vec<f64>,
    f: Vec<f64>,
    constrained: BTreeMap<usize, f64>,
}

/// Displacements and the relative residual ‖Ku − F‖ / ‖F‖ of the
/// constrained system.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub u: Vec<f64>,
    pub relative_residual: f64,
}

impl StiffnessSystem {
    pub fn new(n: usize, k: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        if k.len() != n * n || f.len() != n {
            return Err(Error::InvalidArgument(format!(
                "system of size {n} needs {} matrix and {n} load entries, got {} and {}",
                n * n,
                k.len(),
                f.len()
            )));
        }
        Ok(Self { n, k, f, constrained: BTreeMap::new() })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn k(&self, i: usize, j: usize) -> f64 {
        self.k[i * self.n + j]
    }

    pub fn matrix(&self) -> &[f64] {
        &self.k
    }

    pub fn load(&self) -> &[f64] {
        &self.f
    }

    pub fn constrained(&self) -> &BTreeMap<usize, f64> {
        &self.constrained
    }

    pub fn add_load(&mut self, dof: usize, value: f64) {
        self.f[dof] += value;
    }

    /// max|K − Kᵀ| / max|K|.
    pub fn relative_asymmetry(&self) -> f64 {
        let n = self.n;
        let scale = self.k.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                worst = worst.max((self.k[i * n + j] - self.k[j * n + i]).abs());
            }
        }
        worst / scale
    }

    /// Prescribes `u[dof] = value` by symmetric elimination: the other loads
    /// absorb the column, the row and column are cleared, and the diagonal
    /// keeps its value (or 1 if it is not positive).
    pub fn apply_dirichlet(&mut self, constraints: &[(usize, f64)]) -> Result<()> {
        let n = self.n;
        for &(dof, value) in constraints {
            if dof >= n {
                return Err(Error::InvalidArgument(format!("constraint on dof {dof} of {n}")));
            }
            if let Some(&first) = self.constrained.get(&dof) {
                if first != value {
                    return Err(Error::ConflictingConstraint { dof, first, second: value });
                }
                continue;
            }
            self.constrained.insert(dof, value);
            if value != 0.0 {
                for i in 0..n {
                    if i != dof {
                        self.f[i] -= self.k[i * n + dof] * value;
                    }
                }
            }
            let diag = self.k[dof * n + dof];
            let diag = if diag > 0.0 { diag } else { 1.0 };
            for j in 0..n {
                self.k[dof * n + j] = 0.0;
                self.k[j * n + dof] = 0.0;
            }
            self.k[dof * n + dof] = diag;
            self.f[dof] = diag * value;
        }
        Ok(())
    }

    fn residual(&self, u: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|i| {
                let row = &self.k[i * n..(i + 1) * n];
                self.f[i] - row.iter().zip(u).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect()
    }

    /// Cholesky solve with one step of iterative refinement.
    pub fn solve(&self) -> Result<Solution> {
        let n = self.n;
        if n == 0 {
            return Ok(Solution { u: Vec::new(), relative_residual: 0.0 });
        }
        // K is symmetric, so its row-major storage is also its column-major storage.
        let mut factor = self.k.clone();
        let par = Par::Seq;
        let mut buf = MemBuffer::new(llt::factor::cholesky_in_place_scratch::<f64>(n, par, Default::default()));
        let stack = MemStack::new(&mut buf);
        llt::factor::cholesky_in_place(
            MatMut::from_column_major_slice_mut(&mut factor, n, n),
            Default::default(),
            par,
            stack,
            Default::default(),
        )
        .map_err(|e| match e {
            llt::factor::LltError::NonPositivePivot { index } => Error::NotPositiveDefinite { dof: index },
        })?;
        let l = MatRef::from_column_major_slice(&factor, n, n);
        let solve = |rhs: &mut [f64]| {
            let mut sbuf = MemBuffer::new(llt::solve::solve_in_place_scratch::<f64>(n, 1, par));
            llt::solve::solve_in_place(l, MatMut::from_column_major_slice_mut(rhs, n, 1), par, MemStack::new(&mut sbuf));
        };
        let mut u = self.f.clone();
        solve(&mut u);
        let mut r = self.residual(&u);
        solve(&mut r);
        for (ui, di) in u.iter_mut().zip(&r) {
            *ui += di;
        }
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let f_norm = norm(&self.f);
        let res_norm = norm(&self.residual(&u));
        let relative_residual = if f_norm == 0.0 { res_norm } else { res_norm / f_norm };
        Ok(Solution { u, relative_residual })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd(n: usize) -> Vec<f64> {
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            k[i * n + i] = 4.0;
            if i + 1 < n {
                k[i * n + i + 1] = -1.0;
                k[(i + 1) * n + i] = -1.0;
            }
        }
        k
    }

    #[test]
    fn identity_solve() {
        let mut id = vec![0.0; 9];
        for i in 0..3 {
            id[i * 3 + i] = 1.0;
        }
        let s = StiffnessSystem::new(3, id, vec![1.0, 0.0, 0.0]).unwrap();
        let sol = s.solve().unwrap();
        assert_eq!(sol.u, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn residual_is_small() {
        let n = 50;
        let f: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let sol = StiffnessSystem::new(n, spd(n), f).unwrap().solve().unwrap();
        assert!(sol.relative_residual < 1e-14);
    }

    #[test]
    fn no_constraints_leave_system_unchanged() {
        let mut s = StiffnessSystem::new(4, spd(4), vec![1.0; 4]).unwrap();
        let before = s.clone();
        s.apply_dirichlet(&[]).unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn all_dofs_constrained_to_zero() {
        let mut s = StiffnessSystem::new(4, spd(4), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        s.apply_dirichlet(&[(0, 0.0), (1, 0.0), (2, 0.0), (3, 0.0)]).unwrap();
        assert!(s.solve().unwrap().u.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn conflicting_constraints_are_rejected() {
        let mut s = StiffnessSystem::new(3, spd(3), vec![0.0; 3]).unwrap();
        s.apply_dirichlet(&[(1, 0.5), (1, 0.5)]).unwrap();
        assert_eq!(
            s.apply_dirichlet(&[(1, 0.25)]),
            Err(Error::ConflictingConstraint { dof: 1, first: 0.5, second: 0.25 })
        );
    }

    #[test]
    fn singular_system_names_the_pivot() {
        let mut k = spd(3);
        k[8] = 0.25;
        let s = StiffnessSystem::new(3, k, vec![1.0; 3]).unwrap();
        assert!(matches!(s.solve(), Err(Error::NotPositiveDefinite { dof: 2 })));
    }

    /// Saddle-point solve of [K Cᵀ; C 0][u; λ] = [F; g] by Gaussian
    /// elimination with partial pivoting.
    fn lagrange_solve(k: &[f64], f: &[f64], cons: &[(usize, f64)]) -> Vec<f64> {
        let n = f.len();
        let m = n + cons.len();
        let mut a = vec![vec![0.0; m + 1]; m];
        for i in 0..n {
            a[i][..n].copy_from_slice(&k[i * n..(i + 1) * n]);
            a[i][m] = f[i];
        }
        for (c, &(dof, g)) in cons.iter().enumerate() {
            a[n + c][dof] = 1.0;
            a[dof][n + c] = 1.0;
            a[n + c][m] = g;
        }
        for col in 0..m {
            let p = (col..m).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).unwrap();
            a.swap(col, p);
            for r in 0..m {
                if r != col {
                    let factor = a[r][col] / a[col][col];
                    for c in col..=m {
                        a[r][c] -= factor * a[col][c];
                    }
                }
            }
        }
        (0..n).map(|i| a[i][m] / a[i][i]).collect()
    }

    #[test]
    fn elimination_matches_lagrange_multipliers() {
        let n = 8;
        let mut k = spd(n);
        for i in 0..n {
            for j in 0..n {
                k[i * n + j] += 0.1 / (1.0 + (i + j) as f64);
            }
        }
        let f: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
        let cons = [(0, 0.3), (5, -1.2), (7, 0.0)];
        let want = lagrange_solve(&k, &f, &cons);
        let mut s = StiffnessSystem::new(n, k, f).unwrap();
        s.apply_dirichlet(&cons).unwrap();
        let got = s.solve().unwrap().u;
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-10 * b.abs().max(1.0), "{a} vs {b}");
        }
    }
}
