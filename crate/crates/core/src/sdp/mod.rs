//! Small dense semidefinite programming.
//!
//! Problems are stated in the primal standard form
//!
//! ```text
//!   minimize   <C, X>
//!   subject to <A_i, X> = b_i,   i = 1..m
//!              X = diag(X_1, ..., X_k),  every X_j PSD (or a nonnegative vector)
//! ```
//!
//! paired with the dual
//!
//! ```text
//!   maximize   b' y
//!   subject to Z = C - sum_i y_i A_i,  Z PSD.
//! ```
//!
//! The solver is an infeasible-start primal-dual path-following method with
//! the HKM search direction and Mehrotra predictor-corrector steps, using a
//! dense Schur complement. Infeasibility is reported only with a Farkas ray
//! that has been re-verified by direct arithmetic; anything that fails to
//! converge is returned as [`SdpStatus::Inconclusive`].

mod herm_lmi;
mod lmi;
mod sdpa;

pub use herm_lmi::{Goal, HermLmi, HermLmiSolution};
pub use lmi::{Lmi, LmiSolution};
pub use sdpa::to_sdpa;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of one diagonal block of the variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    /// A real symmetric PSD block of the given order.
    Psd(usize),
    /// A nonnegative vector of the given length (LP block).
    Nonneg(usize),
}

impl BlockKind {
    pub fn size(&self) -> usize {
        match *self {
            BlockKind::Psd(n) | BlockKind::Nonneg(n) => n,
        }
    }
}

/// Sparse symmetric matrix stored as upper-triangular triplets.
///
/// An entry `(i, j, v)` with `i < j` sets both `A_ij` and `A_ji` to `v`.
/// Repeated coordinates are summed.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseSym {
    pub entries: Vec<(usize, usize, f64)>,
}

impl SparseSym {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, i: usize, j: usize, v: f64) {
        if v != 0.0 {
            let (i, j) = if i <= j { (i, j) } else { (j, i) };
            self.entries.push((i, j, v));
        }
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut s = Self::new();
        for j in 0..m.ncols() {
            for i in 0..=j.min(m.nrows().saturating_sub(1)) {
                let v = if i == j { m[(i, i)] } else { 0.5 * (m[(i, j)] + m[(j, i)]) };
                s.push(i, j, v);
            }
        }
        s
    }

    pub fn from_diag(v: &DVector<f64>) -> Self {
        let mut s = Self::new();
        for (i, &x) in v.iter().enumerate() {
            s.push(i, i, x);
        }
        s
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_dense(&self, n: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(n, n);
        for &(i, j, v) in &self.entries {
            m[(i, j)] += v;
            if i != j {
                m[(j, i)] += v;
            }
        }
        m
    }

    fn to_diag(&self, n: usize) -> DVector<f64> {
        let mut d = DVector::zeros(n);
        for &(i, _, v) in &self.entries {
            d[i] += v;
        }
        d
    }

    fn inner_dense(&self, d: &DMatrix<f64>) -> f64 {
        self.entries
            .iter()
            .map(|&(i, j, v)| if i == j { v * d[(i, i)] } else { v * (d[(i, j)] + d[(j, i)]) })
            .sum()
    }

    fn inner_diag(&self, d: &DVector<f64>) -> f64 {
        self.entries.iter().map(|&(i, _, v)| v * d[i]).sum()
    }

    /// `A X` for a dense `X`.
    fn mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(x.nrows(), x.ncols());
        for &(i, j, v) in &self.entries {
            for c in 0..x.ncols() {
                out[(i, c)] += v * x[(j, c)];
            }
            if i != j {
                for c in 0..x.ncols() {
                    out[(j, c)] += v * x[(i, c)];
                }
            }
        }
        out
    }

    fn add_to(&self, target: &mut Blk, scale: f64) {
        match target {
            Blk::M(m) => {
                for &(i, j, v) in &self.entries {
                    m[(i, j)] += scale * v;
                    if i != j {
                        m[(j, i)] += scale * v;
                    }
                }
            }
            Blk::V(d) => {
                for &(i, _, v) in &self.entries {
                    d[i] += scale * v;
                }
            }
        }
    }

    fn frob_sq(&self, n: usize, diag: bool) -> f64 {
        if diag {
            self.to_diag(n).norm_squared()
        } else {
            self.to_dense(n).norm_squared()
        }
    }
}

/// One equality constraint `sum_blocks <A_block, X_block> = rhs`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub terms: Vec<(usize, SparseSym)>,
    pub rhs: f64,
}

/// A semidefinite program in primal standard form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdpProblem {
    pub blocks: Vec<BlockKind>,
    /// Objective matrix `C`, one sparse part per block.
    pub objective: Vec<SparseSym>,
    pub constraints: Vec<Constraint>,
}

impl SdpProblem {
    pub fn new(blocks: Vec<BlockKind>) -> Self {
        let objective = vec![SparseSym::new(); blocks.len()];
        Self {
            blocks,
            objective,
            constraints: Vec::new(),
        }
    }

    pub fn add_constraint(&mut self, terms: Vec<(usize, SparseSym)>, rhs: f64) {
        self.constraints.push(Constraint { terms, rhs });
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.blocks.is_empty() {
            return Err(Error::InvalidInput("SDP needs at least one block".into()));
        }
        if self.objective.len() != self.blocks.len() {
            return Err(Error::Shape("objective must have one part per block".into()));
        }
        let check = |b: usize, s: &SparseSym| -> Result<()> {
            let kind = self
                .blocks
                .get(b)
                .ok_or_else(|| Error::Shape(format!("block index {b} out of range")))?;
            let n = kind.size();
            for &(i, j, v) in &s.entries {
                if i >= n || j >= n {
                    return Err(Error::Shape(format!("entry ({i},{j}) outside block {b} of size {n}")));
                }
                if matches!(kind, BlockKind::Nonneg(_)) && i != j {
                    return Err(Error::Shape(format!("off-diagonal entry in LP block {b}")));
                }
                if !v.is_finite() {
                    return Err(Error::InvalidInput("non-finite SDP data".into()));
                }
            }
            Ok(())
        };
        for (b, c) in self.objective.iter().enumerate() {
            check(b, c)?;
        }
        for con in &self.constraints {
            if !con.rhs.is_finite() {
                return Err(Error::InvalidInput("non-finite right-hand side".into()));
            }
            for (b, a) in &con.terms {
                check(*b, a)?;
            }
        }
        Ok(())
    }

    /// Multiplies every constraint row (matrix and right-hand side) by `s`.
    pub fn scaled_constraints(&self, s: f64) -> SdpProblem {
        let mut p = self.clone();
        for con in &mut p.constraints {
            con.rhs *= s;
            for (_, a) in &mut con.terms {
                for e in &mut a.entries {
                    e.2 *= s;
                }
            }
        }
        p
    }
}

/// Dense value of one block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Blk {
    M(DMatrix<f64>),
    V(DVector<f64>),
}

impl Blk {
    fn zeros(kind: BlockKind) -> Blk {
        match kind {
            BlockKind::Psd(n) => Blk::M(DMatrix::zeros(n, n)),
            BlockKind::Nonneg(n) => Blk::V(DVector::zeros(n)),
        }
    }

    fn scaled_identity(kind: BlockKind, s: f64) -> Blk {
        match kind {
            BlockKind::Psd(n) => Blk::M(DMatrix::identity(n, n) * s),
            BlockKind::Nonneg(n) => Blk::V(DVector::from_element(n, s)),
        }
    }

    fn dot(&self, other: &Blk) -> f64 {
        match (self, other) {
            (Blk::M(a), Blk::M(b)) => a.dot(b),
            (Blk::V(a), Blk::V(b)) => a.dot(b),
            _ => unreachable!("block kinds always agree"),
        }
    }

    fn norm_sq(&self) -> f64 {
        match self {
            Blk::M(a) => a.norm_squared(),
            Blk::V(a) => a.norm_squared(),
        }
    }

    fn axpy(&mut self, s: f64, other: &Blk) {
        match (self, other) {
            (Blk::M(a), Blk::M(b)) => *a += b * s,
            (Blk::V(a), Blk::V(b)) => *a += b * s,
            _ => unreachable!("block kinds always agree"),
        }
    }

    /// Smallest eigenvalue (smallest entry for LP blocks).
    pub fn min_eig(&self) -> f64 {
        match self {
            Blk::M(a) if a.nrows() == 0 => f64::INFINITY,
            Blk::M(a) => a.clone().symmetric_eigenvalues().min(),
            Blk::V(v) if v.is_empty() => f64::INFINITY,
            Blk::V(v) => v.min(),
        }
    }

    pub fn as_matrix(&self) -> DMatrix<f64> {
        match self {
            Blk::M(a) => a.clone(),
            Blk::V(v) => DMatrix::from_diagonal(v),
        }
    }
}

fn blocks_dot(a: &[Blk], b: &[Blk]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn blocks_norm(a: &[Blk]) -> f64 {
    a.iter().map(Blk::norm_sq).sum::<f64>().sqrt()
}

fn blocks_min_eig(a: &[Blk]) -> f64 {
    a.iter().map(Blk::min_eig).fold(f64::INFINITY, f64::min)
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Solver outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SdpStatus {
    /// Primal and dual feasible with a closed duality gap.
    Optimal,
    /// Feasible iterates found but the gap did not close within the cap.
    Feasible,
    /// A verified Farkas ray was found (see [`Certificate`]).
    Infeasible,
    Inconclusive,
}

/// Infeasibility certificate. Both variants are verified by
/// [`verify_certificate`] before being returned.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Certificate {
    /// `y` with `b'y = 1` and `-sum y_i A_i` PSD: no `X >= 0` satisfies the constraints.
    PrimalInfeasible { y: Vec<f64> },
    /// `X >= 0` with `A(X) = 0` and `<C, X> = -1`: the dual has no feasible point.
    DualInfeasible { x: Vec<Blk> },
}

/// Residual diagnostics recomputed from the returned iterates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// `||b - A(X)||`.
    pub primal: f64,
    /// `||C - A'y - Z||`.
    pub dual: f64,
    /// `|<C,X> - b'y| / (1 + |<C,X>| + |b'y|)`.
    pub rel_gap: f64,
    pub min_eig_x: f64,
    pub min_eig_z: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub x: Vec<Blk>,
    pub y: Vec<f64>,
    pub z: Vec<Blk>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// For optimal solutions the duality gap; for infeasible ones the
    /// re-verified certificate margin (negative means certified).
    pub margin: f64,
    pub iterations: usize,
    pub residuals: Residuals,
    pub certificate: Option<Certificate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdpOptions {
    pub max_iter: usize,
    /// Relative primal/dual residual target.
    pub tol_feas: f64,
    /// Relative duality gap target.
    pub tol_gap: f64,
    /// Tolerance of the Farkas-ray tests.
    pub tol_infeas: f64,
    /// Fraction of the distance to the boundary taken per step.
    pub step_fraction: f64,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol_feas: 1e-10,
            tol_gap: 1e-10,
            tol_infeas: 1e-9,
            step_fraction: 0.95,
        }
    }
}

/// Acceptance thresholds of the independent re-check.
const RECHECK_PRIMAL: f64 = 1e-8;
const RECHECK_GAP: f64 = 1e-7;
const RECHECK_EIG: f64 = 1e-8;

struct Data<'a> {
    p: &'a SdpProblem,
    b: DVector<f64>,
    c: Vec<Blk>,
    /// Constraint terms grouped per constraint (block, matrix).
    a: Vec<&'a [(usize, SparseSym)]>,
}

impl<'a> Data<'a> {
    fn new(p: &'a SdpProblem) -> Self {
        let b = DVector::from_iterator(p.constraints.len(), p.constraints.iter().map(|c| c.rhs));
        let c = p
            .blocks
            .iter()
            .zip(&p.objective)
            .map(|(&k, s)| {
                let mut blk = Blk::zeros(k);
                s.add_to(&mut blk, 1.0);
                blk
            })
            .collect();
        let a = p.constraints.iter().map(|c| c.terms.as_slice()).collect();
        Self { p, b, c, a }
    }

    fn m(&self) -> usize {
        self.a.len()
    }

    /// `A(X)`.
    fn apply(&self, x: &[Blk]) -> DVector<f64> {
        DVector::from_iterator(
            self.m(),
            self.a.iter().map(|terms| {
                terms
                    .iter()
                    .map(|(b, s)| match &x[*b] {
                        Blk::M(m) => s.inner_dense(m),
                        Blk::V(v) => s.inner_diag(v),
                    })
                    .sum::<f64>()
            }),
        )
    }

    /// `sum_i y_i A_i`.
    fn adjoint(&self, y: &DVector<f64>) -> Vec<Blk> {
        let mut out: Vec<Blk> = self.p.blocks.iter().map(|&k| Blk::zeros(k)).collect();
        for (i, terms) in self.a.iter().enumerate() {
            if y[i] == 0.0 {
                continue;
            }
            for (b, s) in terms.iter() {
                s.add_to(&mut out[*b], y[i]);
            }
        }
        out
    }

    fn dual_residual(&self, y: &DVector<f64>, z: &[Blk]) -> Vec<Blk> {
        let aty = self.adjoint(y);
        self.c
            .iter()
            .zip(aty.iter().zip(z))
            .map(|(c, (a, zz))| {
                let mut r = c.clone();
                r.axpy(-1.0, a);
                r.axpy(-1.0, zz);
                r
            })
            .collect()
    }

    fn data_norm(&self) -> f64 {
        let mut mx: f64 = 0.0;
        for terms in &self.a {
            let s: f64 = terms
                .iter()
                .map(|(b, a)| a.frob_sq(self.p.blocks[*b].size(), matches!(self.p.blocks[*b], BlockKind::Nonneg(_))))
                .sum();
            mx = mx.max(s.sqrt());
        }
        mx
    }
}

/// Verifies a certificate by direct arithmetic and returns its margin.
///
/// The ray is normalized so that its pairing with the data is exactly one.
/// Its conic violation `v` (negative eigenvalue mass, plus the equality
/// residual for dual rays) is scaled by the data norm, and the margin is
/// `v * scale - 1`. A margin near `-1` is a clean certificate; anything at or
/// above `-1 + tol` is rejected by the solver.
pub fn verify_certificate(problem: &SdpProblem, cert: &Certificate) -> f64 {
    let d = Data::new(problem);
    match cert {
        Certificate::PrimalInfeasible { y } => {
            let y = DVector::from_column_slice(y);
            let pairing = d.b.dot(&y);
            let aty = d.adjoint(&y);
            let neg: Vec<Blk> = aty
                .iter()
                .map(|b| {
                    let mut n = b.clone();
                    match &mut n {
                        Blk::M(m) => m.neg_mut(),
                        Blk::V(v) => v.neg_mut(),
                    }
                    n
                })
                .collect();
            let lam = blocks_min_eig(&neg);
            if pairing <= 0.0 {
                return f64::INFINITY;
            }
            // normalized so that b'y = 1
            let viol = (-lam).max(0.0) / pairing;
            -1.0 + viol * (1.0 + blocks_norm(&aty) / pairing)
        }
        Certificate::DualInfeasible { x } => {
            if x.len() != problem.blocks.len() {
                return f64::INFINITY;
            }
            let cx = blocks_dot(&d.c, x);
            if cx >= 0.0 {
                return f64::INFINITY;
            }
            let scale = -cx;
            let viol = (-blocks_min_eig(x)).max(0.0) / scale;
            let res = d.apply(x).norm() / scale;
            -1.0 + (viol + res) * (1.0 + d.data_norm() + blocks_norm(&d.c))
        }
    }
}

/// Recomputes residuals of a solution independently of the iteration.
pub fn recheck(problem: &SdpProblem, sol: &SdpSolution) -> Residuals {
    let d = Data::new(problem);
    let y = DVector::from_column_slice(&sol.y);
    let pobj = blocks_dot(&d.c, &sol.x);
    let dobj = d.b.dot(&y);
    Residuals {
        primal: (&d.b - d.apply(&sol.x)).norm(),
        dual: blocks_norm(&d.dual_residual(&y, &sol.z)),
        rel_gap: (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs()),
        min_eig_x: blocks_min_eig(&sol.x),
        min_eig_z: blocks_min_eig(&sol.z),
    }
}

/// Precomputed per-block factors of an iterate.
struct Factors {
    zinv: Vec<Blk>,
}

fn invert_blocks(z: &[Blk]) -> Option<Factors> {
    let mut zinv = Vec::with_capacity(z.len());
    for b in z {
        zinv.push(match b {
            Blk::M(m) => {
                let ch = m.clone().cholesky()?;
                Blk::M(sym(&ch.inverse()))
            }
            Blk::V(v) => {
                if v.iter().any(|&x| x <= 0.0) {
                    return None;
                }
                Blk::V(v.map(|x| 1.0 / x))
            }
        });
    }
    Some(Factors { zinv })
}

/// Largest step `alpha <= cap` keeping `X + alpha dX` positive definite.
fn max_step(x: &[Blk], dx: &[Blk]) -> Option<f64> {
    let mut alpha = f64::INFINITY;
    for (b, db) in x.iter().zip(dx) {
        match (b, db) {
            (Blk::M(m), Blk::M(dm)) => {
                if m.nrows() == 0 {
                    continue;
                }
                let l = m.clone().cholesky()?.unpack();
                let t = l.solve_lower_triangular(dm)?;
                let s = l.solve_lower_triangular(&t.transpose())?;
                let lmin = sym(&s).symmetric_eigenvalues().min();
                if lmin < 0.0 {
                    alpha = alpha.min(-1.0 / lmin);
                }
            }
            (Blk::V(v), Blk::V(dv)) => {
                for (xi, di) in v.iter().zip(dv.iter()) {
                    if *di < 0.0 {
                        alpha = alpha.min(-xi / di);
                    }
                }
            }
            _ => unreachable!(),
        }
    }
    Some(alpha)
}

/// Solves `problem` with the given options.
pub fn solve_with(problem: &SdpProblem, opts: &SdpOptions) -> Result<SdpSolution> {
    problem.validate()?;
    let d = Data::new(problem);
    let m = d.m();
    let nsum: usize = problem.blocks.iter().map(BlockKind::size).sum();
    if nsum == 0 {
        return Err(Error::InvalidInput("SDP with empty blocks".into()));
    }

    // Starting point after Toh-Todd-Tutuncu.
    let anorm = d.data_norm();
    let cnorm = blocks_norm(&d.c);
    let bmax = d.b.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    let mut x: Vec<Blk> = Vec::new();
    let mut z: Vec<Blk> = Vec::new();
    for &k in &problem.blocks {
        let n = k.size() as f64;
        let xi = 10f64.max(n.sqrt()).max(n * (1.0 + bmax) / (1.0 + anorm));
        let eta = 10f64.max(n.sqrt()).max((1.0 + anorm.max(cnorm)) / n.sqrt());
        x.push(Blk::scaled_identity(k, xi));
        z.push(Blk::scaled_identity(k, eta));
    }
    let mut y = DVector::zeros(m);
    let bnorm = d.b.norm();

    let mut residuals = Residuals::default();
    let mut iterations = 0;
    let mut status = SdpStatus::Inconclusive;
    let mut certificate = None;
    let mut message = None;

    for iter in 0..opts.max_iter {
        iterations = iter;
        let rp = &d.b - d.apply(&x);
        let rd = d.dual_residual(&y, &z);
        let pobj = blocks_dot(&d.c, &x);
        let dobj = d.b.dot(&y);
        let mu = blocks_dot(&x, &z) / nsum as f64;
        let relp = rp.norm() / (1.0 + bnorm);
        let reld = blocks_norm(&rd) / (1.0 + cnorm);
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        residuals = Residuals {
            primal: rp.norm(),
            dual: blocks_norm(&rd),
            rel_gap: gap,
            min_eig_x: f64::NAN,
            min_eig_z: f64::NAN,
        };

        if relp <= opts.tol_feas && reld <= opts.tol_feas && gap <= opts.tol_gap {
            status = SdpStatus::Optimal;
            break;
        }

        // Farkas tests on the normalized iterates.
        if dobj > 0.0 && m > 0 {
            let cert = Certificate::PrimalInfeasible {
                y: (&y / dobj).iter().copied().collect(),
            };
            if verify_certificate(problem, &cert) < -1.0 + opts.tol_infeas {
                status = SdpStatus::Infeasible;
                certificate = Some(cert);
                break;
            }
        }
        if pobj < 0.0 {
            let xr: Vec<Blk> = x
                .iter()
                .map(|b| {
                    let mut c = b.clone();
                    match &mut c {
                        Blk::M(mm) => *mm /= -pobj,
                        Blk::V(v) => *v /= -pobj,
                    }
                    c
                })
                .collect();
            let cert = Certificate::DualInfeasible { x: xr };
            if verify_certificate(problem, &cert) < -1.0 + opts.tol_infeas {
                status = SdpStatus::Infeasible;
                certificate = Some(cert);
                break;
            }
        }

        let Some(f) = invert_blocks(&z) else {
            message = Some("dual slack lost definiteness".into());
            break;
        };

        // Schur complement M_ij = <A_i, Z^-1 A_j X>.
        let mut g: Vec<Vec<(usize, Blk)>> = Vec::with_capacity(m);
        for terms in &d.a {
            let mut gj = Vec::with_capacity(terms.len());
            for (b, a) in terms.iter() {
                let blk = match (&f.zinv[*b], &x[*b]) {
                    (Blk::M(zi), Blk::M(xm)) => Blk::M(zi * a.mul_dense(xm)),
                    (Blk::V(zi), Blk::V(xv)) => Blk::V(a.to_diag(xv.len()).component_mul(xv).component_mul(zi)),
                    _ => unreachable!(),
                };
                gj.push((*b, blk));
            }
            g.push(gj);
        }
        let mut schur = DMatrix::zeros(m, m);
        for j in 0..m {
            for i in 0..=j {
                let mut v = 0.0;
                for (bi, ai) in d.a[i].iter() {
                    for (bj, gj) in &g[j] {
                        if bi == bj {
                            v += match gj {
                                Blk::M(gm) => ai.inner_dense(gm),
                                Blk::V(gv) => ai.inner_diag(gv),
                            };
                        }
                    }
                }
                schur[(i, j)] = v;
                schur[(j, i)] = v;
            }
        }
        let schur = (&schur + schur.transpose()) * 0.5;
        let chol = schur.clone().cholesky().or_else(|| {
            let reg = 1e-13 * schur.diagonal().amax().max(1e-300);
            (schur.clone() + DMatrix::identity(m, m) * reg).cholesky()
        });
        let Some(chol) = chol else {
            message = Some("Schur complement is singular (dependent constraints?)".into());
            break;
        };

        // Direction for a complementarity right-hand side R:
        //   dX = Z^-1 R - X - Z^-1 Rd X + sum_j dy_j G_j
        //   M dy = rp - A(Z^-1 R - X - Z^-1 Rd X)
        let direction = |rhs_c: &[Blk]| -> (DVector<f64>, Vec<Blk>, Vec<Blk>) {
            let mut t: Vec<Blk> = Vec::with_capacity(x.len());
            for bi in 0..x.len() {
                t.push(match (&f.zinv[bi], &x[bi], &rd[bi], &rhs_c[bi]) {
                    (Blk::M(zi), Blk::M(xm), Blk::M(r), Blk::M(rc)) => Blk::M(zi * rc - xm - zi * r * xm),
                    (Blk::V(zi), Blk::V(xv), Blk::V(r), Blk::V(rc)) => {
                        Blk::V(zi.component_mul(rc) - xv - zi.component_mul(r).component_mul(xv))
                    }
                    _ => unreachable!(),
                });
            }
            let rhs = &rp - d.apply(&t);
            let dy = chol.solve(&rhs);
            for (j, gj) in g.iter().enumerate() {
                for (b, blk) in gj {
                    t[*b].axpy(dy[j], blk);
                }
            }
            let dx: Vec<Blk> = t
                .into_iter()
                .map(|b| match b {
                    Blk::M(mm) => Blk::M(sym(&mm)),
                    v => v,
                })
                .collect();
            let aty = d.adjoint(&dy);
            let dz: Vec<Blk> = rd
                .iter()
                .zip(&aty)
                .map(|(r, a)| {
                    let mut o = r.clone();
                    o.axpy(-1.0, a);
                    o
                })
                .collect();
            (dy, dx, dz)
        };

        // Predictor.
        let zero: Vec<Blk> = problem.blocks.iter().map(|&k| Blk::zeros(k)).collect();
        let (_, dx_a, dz_a) = direction(&zero);
        let (Some(ap), Some(ad)) = (max_step(&x, &dx_a), max_step(&z, &dz_a)) else {
            message = Some("iterate lost definiteness".into());
            break;
        };
        let ap = ap.min(1.0);
        let ad = ad.min(1.0);
        let mut mu_aff = 0.0;
        for bi in 0..x.len() {
            let mut xa = x[bi].clone();
            xa.axpy(ap, &dx_a[bi]);
            let mut za = z[bi].clone();
            za.axpy(ad, &dz_a[bi]);
            mu_aff += xa.dot(&za);
        }
        mu_aff /= nsum as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // Corrector: R = sigma mu I - dZ_a dX_a.
        let rc: Vec<Blk> = problem
            .blocks
            .iter()
            .enumerate()
            .map(|(bi, &k)| {
                let mut r = Blk::scaled_identity(k, sigma * mu);
                match (&mut r, &dz_a[bi], &dx_a[bi]) {
                    (Blk::M(rm), Blk::M(dzm), Blk::M(dxm)) => *rm -= dzm * dxm,
                    (Blk::V(rv), Blk::V(dzv), Blk::V(dxv)) => *rv -= dzv.component_mul(dxv),
                    _ => unreachable!(),
                }
                r
            })
            .collect();
        let (dy, dx, dz) = direction(&rc);
        let (Some(ap), Some(ad)) = (max_step(&x, &dx), max_step(&z, &dz)) else {
            message = Some("iterate lost definiteness".into());
            break;
        };
        let ap = (opts.step_fraction * ap).min(1.0);
        let ad = (opts.step_fraction * ad).min(1.0);
        if ap < 1e-12 && ad < 1e-12 {
            message = Some("step length collapsed".into());
            break;
        }
        for bi in 0..x.len() {
            x[bi].axpy(ap, &dx[bi]);
            z[bi].axpy(ad, &dz[bi]);
            if let Blk::M(mm) = &mut x[bi] {
                *mm = sym(mm);
            }
            if let Blk::M(mm) = &mut z[bi] {
                *mm = sym(mm);
            }
        }
        y += dy * ad;
        iterations = iter + 1;
    }

    let pobj = blocks_dot(&d.c, &x);
    let dobj = d.b.dot(&y);
    let mut sol = SdpSolution {
        status,
        x,
        y: y.iter().copied().collect(),
        z,
        primal_objective: pobj,
        dual_objective: dobj,
        margin: (pobj - dobj).abs(),
        iterations,
        residuals,
        certificate,
        message,
    };

    match sol.status {
        SdpStatus::Infeasible => {
            sol.margin = verify_certificate(problem, sol.certificate.as_ref().expect("set with status"));
        }
        SdpStatus::Optimal | SdpStatus::Inconclusive => {
            let r = recheck(problem, &sol);
            sol.residuals = r;
            let primal_ok = r.primal <= RECHECK_PRIMAL * (1.0 + bnorm) && r.min_eig_x >= -RECHECK_EIG;
            let dual_ok = r.dual <= RECHECK_PRIMAL * (1.0 + cnorm) && r.min_eig_z >= -RECHECK_EIG;
            let gap_ok = (pobj - dobj).abs() <= RECHECK_GAP * (1.0 + pobj.abs());
            sol.status = if primal_ok && dual_ok && gap_ok {
                SdpStatus::Optimal
            } else if primal_ok && dual_ok {
                SdpStatus::Feasible
            } else {
                if sol.status == SdpStatus::Optimal {
                    sol.message = Some("independent residual re-check failed".into());
                }
                if sol.message.is_none() {
                    sol.message = Some(format!("iteration cap {} reached", opts.max_iter));
                }
                SdpStatus::Inconclusive
            };
        }
        SdpStatus::Feasible => {}
    }
    Ok(sol)
}

/// Solves with default options.
pub fn solve(problem: &SdpProblem) -> Result<SdpSolution> {
    solve_with(problem, &SdpOptions::default())
}

/// Linear programming entry point: every block must be an LP block.
pub fn lp_solve(problem: &SdpProblem) -> Result<SdpSolution> {
    if problem.blocks.iter().any(|b| matches!(b, BlockKind::Psd(n) if *n != 1)) {
        return Err(Error::InvalidInput("lp_solve requires LP (or 1x1) blocks".into()));
    }
    solve(problem)
}
