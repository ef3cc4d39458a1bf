//! Hermitian LMIs with linear equality constraints.
//!
//! Equalities `E w = f` are removed by parametrizing `w = w0 + N u` over the
//! nullspace of `E`, so the interior-point kernel only ever sees free
//! variables and PSD blocks. Directions of `N` that do not move any block are
//! dropped before solving.

use nalgebra::{DMatrix, DVector};

use super::{Lmi, SdpSolution, SdpStatus};
use crate::error::{Error, Result};
use crate::herm::{herm_coords, HermMatrix};
use crate::linalg;

#[derive(Clone, Debug)]
struct Block {
    h0: HermMatrix,
    terms: Vec<(usize, HermMatrix)>,
    shifted: bool,
}

#[derive(Clone, Debug)]
struct Scalar {
    a0: f64,
    terms: Vec<(usize, f64)>,
}

/// What to maximize.
#[derive(Clone, Debug, PartialEq)]
pub enum Goal {
    /// `lambda` subtracted as `lambda I` from every shifted block, with an
    /// optional upper cap.
    MinEig { cap: Option<f64> },
    /// A linear functional of the variables.
    Linear(DVector<f64>),
}

/// Builder for `max goal s.t. E w = f, H0_k + sum_i w_i H_ik (- lambda I) PSD`.
#[derive(Clone, Debug)]
pub struct HermLmi {
    nvars: usize,
    eq: Vec<(Vec<(usize, f64)>, f64)>,
    blocks: Vec<Block>,
    scalars: Vec<Scalar>,
    goal: Goal,
}

/// Solution of a [`HermLmi`].
#[derive(Clone, Debug)]
pub struct HermLmiSolution {
    pub status: SdpStatus,
    pub w: DVector<f64>,
    /// Achieved objective (`lambda` for [`Goal::MinEig`]).
    pub value: f64,
    /// Upper bound on the optimum from the dual side.
    pub dual_bound: f64,
    /// Dual matrices of the Hermitian blocks.
    pub block_duals: Vec<HermMatrix>,
    /// Dual multipliers of the scalar inequalities.
    pub scalar_duals: Vec<f64>,
    /// Multipliers of the equality rows, from stationarity.
    pub eq_multipliers: DVector<f64>,
    /// `||E w0 - f||` of the eliminated system.
    pub eq_residual: f64,
    pub sdp: Option<SdpSolution>,
}

impl HermLmi {
    pub fn new(nvars: usize, goal: Goal) -> Self {
        Self {
            nvars,
            eq: Vec::new(),
            blocks: Vec::new(),
            scalars: Vec::new(),
            goal,
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn add_eq(&mut self, row: Vec<(usize, f64)>, rhs: f64) {
        self.eq.push((row, rhs));
    }

    pub fn num_eq(&self) -> usize {
        self.eq.len()
    }

    /// `H0 + sum w_i H_i` PSD; `shifted` blocks take part in the min-eig goal.
    pub fn add_block(&mut self, h0: HermMatrix, terms: Vec<(usize, HermMatrix)>, shifted: bool) {
        self.blocks.push(Block { h0, terms, shifted });
    }

    /// `a0 + sum w_i a_i >= 0`.
    pub fn add_scalar(&mut self, a0: f64, terms: Vec<(usize, f64)>) {
        self.scalars.push(Scalar { a0, terms });
    }

    fn eq_system(&self) -> (DMatrix<f64>, DVector<f64>) {
        let mut e = DMatrix::zeros(self.eq.len(), self.nvars);
        let mut f = DVector::zeros(self.eq.len());
        for (r, (row, rhs)) in self.eq.iter().enumerate() {
            for &(i, v) in row {
                e[(r, i)] += v;
            }
            f[r] = *rhs;
        }
        (e, f)
    }

    /// Images of unit variable steps in every block, stacked as columns.
    fn block_image(&self) -> DMatrix<f64> {
        let mut rows = 0;
        let mut offsets = Vec::new();
        for b in &self.blocks {
            offsets.push(rows);
            rows += b.h0.dim() * b.h0.dim();
        }
        let scal0 = rows;
        rows += self.scalars.len();
        let mut m = DMatrix::zeros(rows, self.nvars);
        for (b, off) in self.blocks.iter().zip(&offsets) {
            for (i, h) in &b.terms {
                let c = herm_coords(h);
                for (k, v) in c.iter().enumerate() {
                    m[(off + k, *i)] += v;
                }
            }
        }
        for (r, s) in self.scalars.iter().enumerate() {
            for &(i, v) in &s.terms {
                m[(scal0 + r, i)] += v;
            }
        }
        m
    }

    /// Solves the problem. An inconsistent equality system yields status
    /// [`SdpStatus::Infeasible`] with `eq_residual` set and no SDP solution.
    pub fn solve(&self, rel_tol: f64) -> Result<HermLmiSolution> {
        for b in &self.blocks {
            if b.terms.iter().any(|(i, h)| *i >= self.nvars || h.dim() != b.h0.dim()) {
                return Err(Error::Shape("LMI block term out of range".into()));
            }
        }
        let (e, f) = self.eq_system();
        let aff = linalg::affine_solve(&e, &f, rel_tol);
        let scale = 1.0 + f.norm();
        if aff.residual > 1e3 * rel_tol * scale {
            return Ok(HermLmiSolution {
                status: SdpStatus::Infeasible,
                w: aff.particular,
                value: f64::NEG_INFINITY,
                dual_bound: f64::NEG_INFINITY,
                block_duals: Vec::new(),
                scalar_duals: Vec::new(),
                eq_multipliers: DVector::zeros(self.eq.len()),
                eq_residual: aff.residual,
                sdp: None,
            });
        }
        // keep only nullspace directions that move some block
        let img = self.block_image();
        let moved = &img * &aff.directions;
        let dirs = if moved.ncols() == 0 || moved.nrows() == 0 {
            DMatrix::zeros(self.nvars, 0)
        } else {
            let svd = linalg::svd(&moved);
            let smax = svd.s.max();
            let cols: Vec<DVector<f64>> = (0..svd.s.len())
                .filter(|&k| svd.s[k] > rel_tol * smax.max(1.0))
                .map(|k| &aff.directions * svd.v.column(k))
                .collect();
            if cols.is_empty() {
                DMatrix::zeros(self.nvars, 0)
            } else {
                DMatrix::from_columns(&cols)
            }
        };
        let w0 = aff.particular.clone();
        let nu = dirs.ncols();
        let with_lambda = matches!(self.goal, Goal::MinEig { .. });
        let nv = nu + usize::from(with_lambda);
        if nv == 0 {
            return self.trivial(w0, aff.residual);
        }
        let mut lmi = Lmi::new(nv);
        let mut c = DVector::zeros(nv);
        match &self.goal {
            Goal::MinEig { .. } => c[nu] = 1.0,
            Goal::Linear(g) => {
                for k in 0..nu {
                    c[k] = g.dot(&dirs.column(k));
                }
            }
        }
        lmi.set_objective(c);
        for b in &self.blocks {
            let d = b.h0.dim();
            let mut h0 = b.h0.clone();
            for (i, h) in &b.terms {
                if w0[*i] != 0.0 {
                    h0 += &h.scale(w0[*i]);
                }
            }
            let mut hs: Vec<(usize, HermMatrix)> = Vec::new();
            for k in 0..nu {
                let mut acc = HermMatrix::zeros(d);
                for (i, h) in &b.terms {
                    let x = dirs[(*i, k)];
                    if x != 0.0 {
                        acc += &h.scale(x);
                    }
                }
                if acc.norm() > 0.0 {
                    hs.push((k, acc));
                }
            }
            if with_lambda && b.shifted {
                hs.push((nu, -HermMatrix::identity(d)));
            }
            lmi.add_herm(&h0, &hs);
        }
        let cap = match self.goal {
            Goal::MinEig { cap } => cap,
            Goal::Linear(_) => None,
        };
        let mut nonneg0 = Vec::new();
        let mut nonneg_terms: Vec<(usize, Vec<f64>)> = vec![(0, Vec::new()); nv];
        for (k, t) in nonneg_terms.iter_mut().enumerate() {
            t.0 = k;
        }
        for s in &self.scalars {
            let mut a0 = s.a0;
            for &(i, v) in &s.terms {
                a0 += v * w0[i];
            }
            nonneg0.push(a0);
            for k in 0..nu {
                let x: f64 = s.terms.iter().map(|&(i, v)| v * dirs[(i, k)]).sum();
                nonneg_terms[k].1.push(x);
            }
            if with_lambda {
                nonneg_terms[nu].1.push(0.0);
            }
        }
        if let Some(cap) = cap {
            nonneg0.push(cap);
            for k in 0..nu {
                nonneg_terms[k].1.push(0.0);
            }
            nonneg_terms[nu].1.push(-1.0);
        }
        if !nonneg0.is_empty() {
            let fi = nonneg_terms
                .into_iter()
                .filter(|(_, v)| v.iter().any(|&x| x != 0.0))
                .map(|(k, v)| (k, DVector::from_vec(v)))
                .collect();
            lmi.add_nonneg(DVector::from_vec(nonneg0), fi);
        }
        let sol = lmi.solve()?;
        let u = sol.y.rows(0, nu).into_owned();
        let w = &w0 + &dirs * &u;
        let block_duals: Vec<HermMatrix> = (0..self.blocks.len())
            .map(|k| sol.dual_herm(k).unwrap_or_else(|| HermMatrix::zeros(self.blocks[k].h0.dim())))
            .collect();
        let scalar_duals: Vec<f64> = match sol.dual_block(self.blocks.len()) {
            Some(super::Blk::V(v)) => v.iter().take(self.scalars.len()).copied().collect(),
            _ => Vec::new(),
        };
        // stationarity: E' mu = grad_w of the dual pairing
        let mut g = DVector::zeros(self.nvars);
        for (b, x) in self.blocks.iter().zip(&block_duals) {
            for (i, h) in &b.terms {
                g[*i] += h.inner(x);
            }
        }
        for (s, &x) in self.scalars.iter().zip(&scalar_duals) {
            for &(i, v) in &s.terms {
                g[i] += v * x;
            }
        }
        if let Goal::Linear(obj) = &self.goal {
            g += obj;
        }
        let mu = if self.eq.is_empty() {
            DVector::zeros(0)
        } else {
            linalg::pinv(&e.transpose(), rel_tol) * &g
        };
        // the eliminated point is exactly feasible, so its margin is a valid bound
        let (value, status) = match self.goal {
            Goal::MinEig { cap } => {
                let lam = self.shifted_min_eig(&w);
                let lam = cap.map_or(lam, |c| lam.min(c));
                let status = match sol.status {
                    SdpStatus::Inconclusive => SdpStatus::Feasible,
                    s => s,
                };
                (lam, status)
            }
            Goal::Linear(ref obj) => (obj.dot(&w), sol.status),
        };
        let offset = match &self.goal {
            Goal::Linear(obj) => obj.dot(&w0),
            Goal::MinEig { .. } => 0.0,
        };
        Ok(HermLmiSolution {
            status,
            w,
            value,
            dual_bound: sol.dual_bound + offset,
            block_duals,
            scalar_duals,
            eq_multipliers: mu,
            eq_residual: aff.residual,
            sdp: Some(sol.sdp),
        })
    }

    fn shifted_min_eig(&self, w: &DVector<f64>) -> f64 {
        let mut lam = f64::INFINITY;
        for b in self.blocks.iter().filter(|b| b.shifted) {
            let mut h = b.h0.clone();
            for (i, t) in &b.terms {
                h += &t.scale(w[*i]);
            }
            lam = lam.min(h.min_eig());
        }
        lam
    }

    /// No free direction: evaluate the unique point.
    fn trivial(&self, w: DVector<f64>, residual: f64) -> Result<HermLmiSolution> {
        let mut ok = true;
        let mut lam = f64::INFINITY;
        for b in &self.blocks {
            let mut h = b.h0.clone();
            for (i, t) in &b.terms {
                h += &t.scale(w[*i]);
            }
            let m = h.min_eig();
            if b.shifted {
                lam = lam.min(m);
            }
            ok &= m >= -1e-12 * (1.0 + h.norm());
        }
        for s in &self.scalars {
            let v = s.a0 + s.terms.iter().map(|&(i, a)| a * w[i]).sum::<f64>();
            ok &= v >= -1e-12;
        }
        let value = match &self.goal {
            Goal::MinEig { cap } => cap.map_or(lam, |c| lam.min(c)),
            Goal::Linear(obj) => obj.dot(&w),
        };
        Ok(HermLmiSolution {
            status: if ok || matches!(self.goal, Goal::MinEig { .. }) {
                SdpStatus::Optimal
            } else {
                SdpStatus::Infeasible
            },
            w,
            value,
            dual_bound: value,
            block_duals: self.blocks.iter().map(|b| HermMatrix::zeros(b.h0.dim())).collect(),
            scalar_duals: vec![0.0; self.scalars.len()],
            eq_multipliers: DVector::zeros(self.eq.len()),
            eq_residual: residual,
            sdp: None,
        })
    }
}
