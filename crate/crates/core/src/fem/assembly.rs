//! Stiffness assembly K = Σ_g w_g B̄_gᵀ C B̄_g from sparse strain rows.
//!
//! Every entry of K is accumulated over terms and points in one fixed order,
//! whichever rayon worker owns its row, so the result is bitwise identical
//! for any thread count.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// One strain component as a sparse linear functional of the DOFs.
pub type SparseRow = Vec<(usize, f64)>;

/// Strain components at one integration point, with the quadrature weight
/// already multiplied by any through-thickness factor.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationPoint {
    pub weight: f64,
    pub strains: Vec<SparseRow>,
}

/// An energy density ½ εᵀCε integrated over a set of points.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTerm {
    /// Row-major symmetric m × m constitutive matrix.
    pub material: Vec<f64>,
    pub points: Vec<IntegrationPoint>,
}

impl EnergyTerm {
    pub fn n_strains(&self) -> usize {
        (self.material.len() as f64).sqrt().round() as usize
    }
}

/// Dense strain matrix of one point over its sorted local DOFs.
struct LocalPoint {
    dofs: Vec<usize>,
    /// m × n_loc, row-major.
    b: Vec<f64>,
    /// C·B, m × n_loc, row-major, pre-scaled by the weight.
    cb: Vec<f64>,
}

fn localize(point: &IntegrationPoint, material: &[f64], m: usize) -> LocalPoint {
    let mut dofs: Vec<usize> = point.strains.iter().flat_map(|r| r.iter().map(|e| e.0)).collect();
    dofs.sort_unstable();
    dofs.dedup();
    let n = dofs.len();
    let mut b = vec![0.0; m * n];
    for (a, row) in point.strains.iter().enumerate() {
        for &(dof, v) in row {
            let j = dofs.binary_search(&dof).expect("dof collected above");
            b[a * n + j] += v;
        }
    }
    let mut cb = vec![0.0; m * n];
    for a in 0..m {
        for c in 0..m {
            let coeff = point.weight * material[a * m + c];
            if coeff == 0.0 {
                continue;
            }
            for j in 0..n {
                cb[a * n + j] += coeff * b[c * n + j];
            }
        }
    }
    LocalPoint { dofs, b, cb }
}

fn validate(n_dofs: usize, terms: &[EnergyTerm]) -> Result<()> {
    for t in terms {
        let m = t.n_strains();
        if m * m != t.material.len() {
            return Err(Error::InvalidArgument("constitutive matrix must be square".into()));
        }
        for p in &t.points {
            if p.strains.len() != m {
                return Err(Error::InvalidArgument(format!(
                    "integration point has {} strains, material expects {m}",
                    p.strains.len()
                )));
            }
            if let Some(&(dof, _)) = p.strains.iter().flatten().find(|e| e.0 >= n_dofs) {
                return Err(Error::InvalidArgument(format!("dof {dof} out of range for {n_dofs} dofs")));
            }
        }
    }
    Ok(())
}

/// Dense row-major stiffness matrix from the energy terms.
pub fn assemble_stiffness(n_dofs: usize, terms: &[EnergyTerm]) -> Result<Vec<f64>> {
    validate(n_dofs, terms)?;
    let mut k = vec![0.0; n_dofs * n_dofs];
    if n_dofs == 0 {
        return Ok(k);
    }
    let blocks = (rayon::current_num_threads() * 4).clamp(1, n_dofs);
    let rows_per_block = n_dofs.div_ceil(blocks);
    k.par_chunks_mut(rows_per_block * n_dofs).enumerate().for_each(|(block, chunk)| {
        let first = block * rows_per_block;
        let last = first + chunk.len() / n_dofs;
        for term in terms {
            let m = term.n_strains();
            for point in &term.points {
                let touches = point.strains.iter().flatten().any(|&(d, _)| d >= first && d < last);
                if !touches {
                    continue;
                }
                let lp = localize(point, &term.material, m);
                let n = lp.dofs.len();
                for (i, &gi) in lp.dofs.iter().enumerate() {
                    if gi < first || gi >= last {
                        continue;
                    }
                    let row = &mut chunk[(gi - first) * n_dofs..(gi - first + 1) * n_dofs];
                    for (j, &gj) in lp.dofs.iter().enumerate() {
                        let mut s = 0.0;
                        for a in 0..m {
                            s += lp.b[a * n + i] * lp.cb[a * n + j];
                        }
                        row[gj] += s;
                    }
                }
            }
        }
    });
    Ok(k)
}

/// Number of structurally nonzero entries in each row.
pub fn row_nonzeros(k: &[f64], n: usize) -> Vec<usize> {
    k.chunks(n).map(|r| r.iter().filter(|v| **v != 0.0).count()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bar_term() -> EnergyTerm {
        // Two linear bar elements of unit length, EA = 2, one-point rule.
        let p = |a: usize, b: usize| IntegrationPoint { weight: 1.0, strains: vec![vec![(a, -1.0), (b, 1.0)]] };
        EnergyTerm { material: vec![2.0], points: vec![p(0, 1), p(1, 2)] }
    }

    #[test]
    fn bar_stiffness() {
        let k = assemble_stiffness(3, &[bar_term()]).unwrap();
        assert_eq!(k, vec![2.0, -2.0, 0.0, -2.0, 4.0, -2.0, 0.0, -2.0, 2.0]);
    }

    #[test]
    fn thread_count_does_not_change_bits() {
        let mut t = bar_term();
        for i in 0..40 {
            let x = i as f64 * 0.37;
            t.points.push(IntegrationPoint {
                weight: 0.1 + x.sin().abs(),
                strains: vec![vec![(i % 7, x.cos()), ((i * 3) % 11, 1.0 / (1.0 + x)), (i % 5, -0.3)]],
            });
        }
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| assemble_stiffness(11, &[t.clone()]).unwrap())
        };
        let one = run(1);
        for threads in [2, 3, 4] {
            let other = run(threads);
            assert!(one.iter().zip(&other).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }

    #[test]
    fn rejects_bad_terms() {
        let mut t = bar_term();
        t.points[0].strains[0].push((9, 1.0));
        assert!(assemble_stiffness(3, &[t]).is_err());
        let mut t = bar_term();
        t.material = vec![1.0, 0.0];
        assert!(assemble_stiffness(3, &[t]).is_err());
    }
}
