//! Linear matrix inequalities in free variables.
//!
//! `maximize c'y  s.t.  F0_k + sum_i y_i F_ik  PSD  for every block k`
//! is the dual standard form with `C = F0` and `A_i = -F_i`.

use nalgebra::{DMatrix, DVector};

use super::{solve, BlockKind, Blk, SdpProblem, SdpSolution, SdpStatus, SparseSym};
use crate::error::{Error, Result};
use crate::herm::{derealify, realify, HermMatrix};

#[derive(Clone, Debug)]
enum LmiBlock {
    Psd {
        f0: DMatrix<f64>,
        fi: Vec<(usize, DMatrix<f64>)>,
        /// Block is the realification of a complex Hermitian LMI.
        complex: bool,
    },
    Nonneg {
        f0: DVector<f64>,
        fi: Vec<(usize, DVector<f64>)>,
    },
}

/// Builder for an LMI problem.
#[derive(Clone, Debug)]
pub struct Lmi {
    nvars: usize,
    blocks: Vec<LmiBlock>,
    objective: DVector<f64>,
}

/// Solution of an [`Lmi`].
#[derive(Clone, Debug)]
pub struct LmiSolution {
    pub status: SdpStatus,
    pub y: DVector<f64>,
    /// `c'y`.
    pub value: f64,
    /// Upper bound on the optimum certified by the dual matrices.
    pub dual_bound: f64,
    pub sdp: SdpSolution,
    complex: Vec<bool>,
}

impl LmiSolution {
    /// Dual matrix of block `k`, mapped back to a Hermitian matrix when the
    /// block was realified.
    pub fn dual_herm(&self, k: usize) -> Option<HermMatrix> {
        match &self.sdp.x.get(k)? {
            Blk::M(m) if self.complex[k] => Some(derealify(m)),
            Blk::M(m) => HermMatrix::from_real(m).ok(),
            Blk::V(_) => None,
        }
    }

    pub fn dual_block(&self, k: usize) -> Option<&Blk> {
        self.sdp.x.get(k)
    }
}

impl Lmi {
    pub fn new(nvars: usize) -> Self {
        Self {
            nvars,
            blocks: Vec::new(),
            objective: DVector::zeros(nvars),
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn set_objective(&mut self, c: DVector<f64>) {
        assert_eq!(c.len(), self.nvars, "objective length");
        self.objective = c;
    }

    pub fn add_psd(&mut self, f0: DMatrix<f64>, fi: Vec<(usize, DMatrix<f64>)>) {
        self.blocks.push(LmiBlock::Psd { f0, fi, complex: false });
    }

    pub fn add_nonneg(&mut self, f0: DVector<f64>, fi: Vec<(usize, DVector<f64>)>) {
        self.blocks.push(LmiBlock::Nonneg { f0, fi });
    }

    /// Adds `H0 + sum y_i H_i` PSD for Hermitian data. Real data stays real;
    /// complex data is realified.
    pub fn add_herm(&mut self, h0: &HermMatrix, hi: &[(usize, HermMatrix)]) {
        let complex = !h0.is_real() || hi.iter().any(|(_, h)| !h.is_real());
        let conv = |h: &HermMatrix| if complex { realify(h) } else { h.real_part() };
        let f0 = conv(h0);
        let fi = hi.iter().map(|(i, h)| (*i, conv(h))).collect();
        self.blocks.push(LmiBlock::Psd { f0, fi, complex });
    }

    pub fn to_problem(&self) -> Result<SdpProblem> {
        let kinds: Vec<BlockKind> = self
            .blocks
            .iter()
            .map(|b| match b {
                LmiBlock::Psd { f0, .. } => BlockKind::Psd(f0.nrows()),
                LmiBlock::Nonneg { f0, .. } => BlockKind::Nonneg(f0.len()),
            })
            .collect();
        let mut p = SdpProblem::new(kinds);
        let mut rows: Vec<Vec<(usize, SparseSym)>> = vec![Vec::new(); self.nvars];
        for (k, b) in self.blocks.iter().enumerate() {
            match b {
                LmiBlock::Psd { f0, fi, .. } => {
                    p.objective[k] = SparseSym::from_dense(f0);
                    for (i, f) in fi {
                        if *i >= self.nvars || f.shape() != f0.shape() {
                            return Err(Error::Shape(format!("LMI term for variable {i} in block {k}")));
                        }
                        let s = SparseSym::from_dense(&(-f));
                        if !s.is_empty() {
                            rows[*i].push((k, s));
                        }
                    }
                }
                LmiBlock::Nonneg { f0, fi } => {
                    p.objective[k] = SparseSym::from_diag(f0);
                    for (i, f) in fi {
                        if *i >= self.nvars || f.len() != f0.len() {
                            return Err(Error::Shape(format!("LMI term for variable {i} in block {k}")));
                        }
                        let s = SparseSym::from_diag(&(-f));
                        if !s.is_empty() {
                            rows[*i].push((k, s));
                        }
                    }
                }
            }
        }
        for (i, terms) in rows.into_iter().enumerate() {
            if terms.is_empty() {
                return Err(Error::InvalidInput(format!("LMI variable {i} appears in no block")));
            }
            p.add_constraint(terms, self.objective[i]);
        }
        Ok(p)
    }

    pub fn solve(&self) -> Result<LmiSolution> {
        let p = self.to_problem()?;
        let sdp = solve(&p)?;
        let y = DVector::from_column_slice(&sdp.y);
        Ok(LmiSolution {
            status: sdp.status,
            value: self.objective.dot(&y),
            dual_bound: sdp.primal_objective,
            y,
            complex: self
                .blocks
                .iter()
                .map(|b| matches!(b, LmiBlock::Psd { complex: true, .. }))
                .collect(),
            sdp,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn max_min_eig_of_affine_family() {
        // max lambda s.t. diag(1, 2) + w [[0,1],[1,0]] - lambda I PSD -> w = 0, lambda = 1
        let mut lmi = Lmi::new(2);
        lmi.set_objective(DVector::from_vec(vec![0.0, 1.0]));
        lmi.add_psd(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]),
            vec![
                (0, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])),
                (1, -DMatrix::identity(2, 2)),
            ],
        );
        let sol = lmi.solve().unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.value - 1.0).abs() < 1e-7);
        assert!(sol.y[0].abs() < 1e-5);
    }

    #[test]
    fn unused_variable_is_rejected() {
        let mut lmi = Lmi::new(2);
        lmi.add_psd(DMatrix::identity(1, 1), vec![(0, DMatrix::identity(1, 1))]);
        assert!(lmi.to_problem().is_err());
    }
}
