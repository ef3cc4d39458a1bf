//! Real dense helpers: rank, nullspaces and affine solution sets.

use nalgebra::{DMatrix, DVector};

/// Relative singular-value cutoff used when none is given.
pub const RANK_TOL: f64 = 1e-9;

/// Full SVD `a = U diag(s) V^T` with `U` of size `m x m` and `V` of size `n x n`.
///
/// Computed with faer; nalgebra's SVD fails to converge on some of the sparse
/// coefficient-matching systems built here.
pub struct Svd {
    pub u: DMatrix<f64>,
    /// Nonincreasing, of length `min(m, n)`.
    pub s: DVector<f64>,
    pub v: DMatrix<f64>,
}

pub fn svd(a: &DMatrix<f64>) -> Svd {
    let (m, n) = a.shape();
    let k = m.min(n);
    if k == 0 {
        return Svd {
            u: DMatrix::identity(m, m),
            s: DVector::zeros(0),
            v: DMatrix::identity(n, n),
        };
    }
    let fa = faer::Mat::from_fn(m, n, |i, j| a[(i, j)]);
    let d = fa.svd().expect("SVD of a finite matrix");
    let (u, sv, v) = (d.U(), d.S().column_vector(), d.V());
    Svd {
        u: DMatrix::from_fn(m, m, |i, j| u[(i, j)]),
        s: DVector::from_fn(k, |i, _| sv[i]),
        v: DMatrix::from_fn(n, n, |i, j| v[(i, j)]),
    }
}

/// Singular values above the cutoff, their singular vectors, and an
/// orthonormal nullspace basis.
struct Split {
    values: Vec<f64>,
    left: Vec<DVector<f64>>,
    right: Vec<DVector<f64>>,
    null: DMatrix<f64>,
}

fn split(a: &DMatrix<f64>, rel_tol: f64) -> Split {
    let n = a.ncols();
    let d = svd(a);
    let c = cutoff(&d.s, rel_tol);
    let r = d.s.iter().take_while(|&&x| x > c).count();
    Split {
        values: d.s.iter().take(r).copied().collect(),
        left: (0..r).map(|i| d.u.column(i).into_owned()).collect(),
        right: (0..r).map(|i| d.v.column(i).into_owned()).collect(),
        null: d.v.columns(r, n - r).into_owned(),
    }
}

fn cutoff(sv: &DVector<f64>, rel_tol: f64) -> f64 {
    let smax = sv.iter().copied().fold(0.0, f64::max);
    rel_tol * smax.max(1.0)
}

/// Numerical rank with singular values below `rel_tol * max(1, sigma_max)` dropped.
pub fn rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    if a.is_empty() {
        return 0;
    }
    let sv = svd(a).s;
    let c = cutoff(&sv, rel_tol);
    sv.iter().filter(|&&s| s > c).count()
}

/// Orthonormal basis of the nullspace of `a`, as columns.
pub fn nullspace(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let n = a.ncols();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    if a.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    split(a, rel_tol).null
}

/// The solution set `{x0 + N w}` of `A x = b`.
#[derive(Clone, Debug)]
pub struct AffineSolution {
    pub particular: DVector<f64>,
    /// Orthonormal nullspace basis (columns).
    pub directions: DMatrix<f64>,
    /// `||A x0 - b||`, the least-squares residual.
    pub residual: f64,
}

impl AffineSolution {
    pub fn point(&self, w: &DVector<f64>) -> DVector<f64> {
        &self.particular + &self.directions * w
    }

    pub fn dim(&self) -> usize {
        self.directions.ncols()
    }
}

/// Minimum-norm least-squares solution plus the nullspace.
pub fn affine_solve(a: &DMatrix<f64>, b: &DVector<f64>, rel_tol: f64) -> AffineSolution {
    let n = a.ncols();
    if a.nrows() == 0 {
        return AffineSolution {
            particular: DVector::zeros(n),
            directions: DMatrix::identity(n, n),
            residual: 0.0,
        };
    }
    let sp = split(a, rel_tol);
    let mut x = DVector::zeros(n);
    for ((s, u), v) in sp.values.iter().zip(&sp.left).zip(&sp.right) {
        x += v * (u.dot(b) / s);
    }
    let residual = (a * &x - b).norm();
    let directions = sp.null;
    AffineSolution {
        particular: x,
        directions,
        residual,
    }
}

/// Moore-Penrose pseudo-inverse.
pub fn pinv(a: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return DMatrix::zeros(n, m);
    }
    let sp = split(a, rel_tol);
    let mut out = DMatrix::zeros(n, m);
    for ((s, u), v) in sp.values.iter().zip(&sp.left).zip(&sp.right) {
        out += v * u.transpose() / *s;
    }
    out
}

/// Serde adapter writing a real matrix as a list of rows.
pub mod rows {
    use nalgebra::DMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        use serde::de::Error;
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(D::Error::custom("ragged matrix rows"));
        }
        Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
    }
}
