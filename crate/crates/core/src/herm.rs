//! Dense complex Hermitian linear algebra.
//!
//! Everything in the toolkit is ultimately a statement about Hermitian
//! matrices: cone levels, Choi matrices, Gram matrices and the values of
//! completely positive maps. This module provides the value type
//! [`HermMatrix`] together with the spectral primitives the other modules
//! need (PSD tests, square roots, rank-one decompositions), tensor
//! products, congruences and the real-symmetric embedding consumed by the
//! SDP kernel.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Default absolute eigenvalue tolerance.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Relative asymmetry above which construction is rejected.
const ASYMMETRY_LIMIT: f64 = 1e-6;

/// A complex Hermitian matrix.
///
/// Construction symmetrizes the input, `(H + H*) / 2`, and rejects inputs
/// whose anti-Hermitian part exceeds `1e-6 * ||H||_F`.
#[derive(Clone, PartialEq)]
pub struct HermMatrix {
    m: DMatrix<C64>,
}

impl HermMatrix {
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Shape(format!(
                "Hermitian matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidInput("Hermitian matrix of dimension 0".into()));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("non-finite matrix entry".into()));
        }
        let adj = m.adjoint();
        let asym = (&m - &adj).norm();
        let scale = m.norm();
        if asym > ASYMMETRY_LIMIT * scale {
            return Err(Error::InvalidInput(format!(
                "matrix is not Hermitian (||H - H*|| = {asym:.3e}, ||H|| = {scale:.3e})"
            )));
        }
        Ok(Self {
            m: (m + adj) * C64::new(0.5, 0.0),
        })
    }

    /// Wraps a matrix that is Hermitian by construction; only symmetrizes.
    pub(crate) fn from_hermitian_unchecked(m: DMatrix<C64>) -> Self {
        let adj = m.adjoint();
        Self {
            m: (m + adj) * C64::new(0.5, 0.0),
        }
    }

    pub fn from_real(re: &DMatrix<f64>) -> Result<Self> {
        Self::new(re.map(|x| C64::new(x, 0.0)))
    }

    pub fn from_parts(re: &DMatrix<f64>, im: &DMatrix<f64>) -> Result<Self> {
        if re.shape() != im.shape() {
            return Err(Error::Shape("real and imaginary parts differ in shape".into()));
        }
        Self::new(re.zip_map(im, C64::new))
    }

    /// Builds from row-major real entries.
    pub fn from_row_slice(dim: usize, re: &[f64]) -> Result<Self> {
        if re.len() != dim * dim {
            return Err(Error::Shape(format!("expected {} entries, got {}", dim * dim, re.len())));
        }
        Self::from_real(&DMatrix::from_row_slice(dim, dim, re))
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            m: DMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            m: DMatrix::identity(dim, dim),
        }
    }

    pub fn diag(values: &[f64]) -> Self {
        let v = DVector::from_iterator(values.len(), values.iter().map(|&x| C64::new(x, 0.0)));
        Self {
            m: DMatrix::from_diagonal(&v),
        }
    }

    /// The matrix unit `E_ii`.
    pub fn unit(dim: usize, i: usize) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        m[(i, i)] = C64::new(1.0, 0.0);
        Self { m }
    }

    /// `v v*`.
    pub fn outer(v: &DVector<C64>) -> Self {
        Self::from_hermitian_unchecked(v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.m
    }

    pub fn real_part(&self) -> DMatrix<f64> {
        self.m.map(|z| z.re)
    }

    pub fn imag_part(&self) -> DMatrix<f64> {
        self.m.map(|z| z.im)
    }

    pub fn is_real(&self) -> bool {
        self.m.iter().all(|z| z.im == 0.0)
    }

    pub fn trace(&self) -> f64 {
        self.m.diagonal().iter().map(|z| z.re).sum()
    }

    /// Trace inner product `tr(A B)`, real for Hermitian arguments.
    pub fn inner(&self, other: &HermMatrix) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        // tr(A B) = sum_ij A_ij B_ji = sum_ij A_ij conj(B_ij)
        self.m
            .iter()
            .zip(other.m.iter())
            .map(|(a, b)| (a * b.conj()).re)
            .sum()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.m.norm()
    }

    pub fn scale(&self, s: f64) -> HermMatrix {
        Self {
            m: &self.m * C64::new(s, 0.0),
        }
    }

    /// Eigenvalues in ascending order with matching orthonormal eigenvectors
    /// as columns.
    pub fn eigh(&self) -> (Vec<f64>, DMatrix<C64>) {
        let eig = self.m.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = DMatrix::from_fn(self.dim(), self.dim(), |r, c| eig.eigenvectors[(r, order[c])]);
        (values, vectors)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.m.clone().symmetric_eigenvalues().iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn min_eig(&self) -> f64 {
        self.m
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Rebuilds `U diag(f(lambda)) U*` from the spectral decomposition.
    pub fn spectral_map(&self, f: impl Fn(f64) -> f64) -> HermMatrix {
        let (vals, vecs) = self.eigh();
        let mut scaled = vecs.clone();
        for (j, &l) in vals.iter().enumerate() {
            let fl = C64::new(f(l), 0.0);
            for r in 0..scaled.nrows() {
                scaled[(r, j)] *= fl;
            }
        }
        Self::from_hermitian_unchecked(scaled * vecs.adjoint())
    }

    /// Block-diagonal direct sum.
    pub fn direct_sum(&self, other: &HermMatrix) -> HermMatrix {
        let (a, b) = (self.dim(), other.dim());
        let mut m = DMatrix::zeros(a + b, a + b);
        m.view_mut((0, 0), (a, a)).copy_from(&self.m);
        m.view_mut((a, a), (b, b)).copy_from(&other.m);
        Self { m }
    }
}

impl fmt::Debug for HermMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HermMatrix({}x{}) ", self.dim(), self.dim())?;
        let rows: Vec<String> = (0..self.dim())
            .map(|i| {
                let cells: Vec<String> = (0..self.dim())
                    .map(|j| {
                        let z = self.m[(i, j)];
                        if z.im == 0.0 {
                            format!("{:.4}", z.re)
                        } else {
                            format!("{:.4}{:+.4}i", z.re, z.im)
                        }
                    })
                    .collect();
                cells.join(", ")
            })
            .collect();
        write!(f, "[{}]", rows.join("; "))
    }
}

impl Add for &HermMatrix {
    type Output = HermMatrix;
    fn add(self, rhs: &HermMatrix) -> HermMatrix {
        HermMatrix { m: &self.m + &rhs.m }
    }
}

impl Add for HermMatrix {
    type Output = HermMatrix;
    fn add(self, rhs: HermMatrix) -> HermMatrix {
        HermMatrix { m: self.m + rhs.m }
    }
}

impl AddAssign<&HermMatrix> for HermMatrix {
    fn add_assign(&mut self, rhs: &HermMatrix) {
        self.m += &rhs.m;
    }
}

impl Sub for &HermMatrix {
    type Output = HermMatrix;
    fn sub(self, rhs: &HermMatrix) -> HermMatrix {
        HermMatrix { m: &self.m - &rhs.m }
    }
}

impl Sub for HermMatrix {
    type Output = HermMatrix;
    fn sub(self, rhs: HermMatrix) -> HermMatrix {
        HermMatrix { m: self.m - rhs.m }
    }
}

impl Neg for HermMatrix {
    type Output = HermMatrix;
    fn neg(self) -> HermMatrix {
        HermMatrix { m: -self.m }
    }
}

impl Mul<f64> for &HermMatrix {
    type Output = HermMatrix;
    fn mul(self, s: f64) -> HermMatrix {
        self.scale(s)
    }
}

impl Mul<f64> for HermMatrix {
    type Output = HermMatrix;
    fn mul(self, s: f64) -> HermMatrix {
        self.scale(s)
    }
}

/// Result of [`psd_check`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsdCheck {
    pub is_psd: bool,
    pub min_eig: f64,
}

pub fn psd_check(h: &HermMatrix, tol: f64) -> PsdCheck {
    let min_eig = h.min_eig();
    PsdCheck {
        is_psd: min_eig >= -tol,
        min_eig,
    }
}

/// The unique PSD square root. Eigenvalues in `[-tol, 0)` are clipped.
pub fn psd_sqrt(h: &HermMatrix, tol: f64) -> Result<HermMatrix> {
    let (vals, _) = h.eigh();
    let min_eig = vals.first().copied().unwrap_or(0.0);
    if min_eig < -tol {
        return Err(Error::NotPsd { min_eig });
    }
    // eigenvalues at rounding level are treated as exact zeros
    let floor = 4.0 * f64::EPSILON * h.dim() as f64 * vals.iter().fold(0.0f64, |a, l| a.max(l.abs()));
    Ok(h.spectral_map(|l| if l <= floor { 0.0 } else { l.sqrt() }))
}

/// Writes `P = sum_k q_k q_k*` with one vector per eigenvalue above `tol`.
///
/// Each vector is `sqrt(lambda) u` for a unit eigenvector `u`, with its
/// largest-modulus entry rotated to be real and positive so the output is
/// reproducible.
pub fn rank1_decompose(p: &HermMatrix, tol: f64) -> Result<Vec<DVector<C64>>> {
    let (vals, vecs) = p.eigh();
    let min_eig = vals.first().copied().unwrap_or(0.0);
    if min_eig < -tol {
        return Err(Error::NotPsd { min_eig });
    }
    let mut out = Vec::new();
    for (j, &l) in vals.iter().enumerate().rev() {
        if l <= tol {
            continue;
        }
        let mut u: DVector<C64> = vecs.column(j).into_owned();
        normalize_phase(&mut u);
        out.push(u * C64::new(l.sqrt(), 0.0));
    }
    Ok(out)
}

/// Rotates `v` so that its largest-modulus entry is real and positive.
pub fn normalize_phase(v: &mut DVector<C64>) {
    let mut best = 0;
    let mut best_abs = -1.0;
    for (i, z) in v.iter().enumerate() {
        // ties resolved toward the lowest index
        if z.norm() > best_abs + 1e-12 {
            best = i;
            best_abs = z.norm();
        }
    }
    if best_abs > 0.0 {
        let phase = v[best].conj() / best_abs;
        for z in v.iter_mut() {
            *z *= phase;
        }
    }
}

/// Kronecker product `A ⊗ B`.
pub fn kron(a: &HermMatrix, b: &HermMatrix) -> HermMatrix {
    HermMatrix {
        m: a.m.kronecker(&b.m),
    }
}

/// Congruence `V* X V` for a rectangular `V` with `dim(X)` rows.
pub fn conjugate(v: &DMatrix<C64>, x: &HermMatrix) -> Result<HermMatrix> {
    if v.nrows() != x.dim() {
        return Err(Error::Shape(format!(
            "congruence needs {} rows, V has {}",
            x.dim(),
            v.nrows()
        )));
    }
    if v.ncols() == 0 {
        return Err(Error::Shape("congruence with zero columns".into()));
    }
    Ok(HermMatrix::from_hermitian_unchecked(v.adjoint() * &x.m * v))
}

/// Real symmetric embedding `[[A, -B], [B, A]]` of `H = A + iB`.
pub fn realify(h: &HermMatrix) -> DMatrix<f64> {
    let d = h.dim();
    let mut r = DMatrix::zeros(2 * d, 2 * d);
    for i in 0..d {
        for j in 0..d {
            let z = h.m[(i, j)];
            r[(i, j)] = z.re;
            r[(i + d, j + d)] = z.re;
            r[(i, j + d)] = -z.im;
            r[(i + d, j)] = z.im;
        }
    }
    r
}

/// Adjoint of [`realify`] under the trace pairing: the Hermitian `Y` with
/// `tr(H Y) = <realify(H), X>` for every Hermitian `H`. PSD `X` gives PSD `Y`.
pub fn derealify(x: &DMatrix<f64>) -> HermMatrix {
    let d = x.nrows() / 2;
    let m = DMatrix::from_fn(d, d, |i, j| {
        C64::new(
            x[(i, j)] + x[(i + d, j + d)],
            x[(i + d, j)] - x[(i, j + d)],
        )
    });
    HermMatrix::from_hermitian_unchecked(m)
}

/// Number of real coordinates of `Her_s`.
pub fn herm_real_dim(s: usize) -> usize {
    s * s
}

/// Coordinates of `H` in the canonical trace-orthonormal basis of `Her_s`.
///
/// Ordering: the diagonal units `E_ii` first, then for each `i < j` in
/// lexicographic order the pair `(E_ij + E_ji)/sqrt2`, `(iE_ij - iE_ji)/sqrt2`.
pub fn herm_coords(h: &HermMatrix) -> DVector<f64> {
    let s = h.dim();
    let mut out = DVector::zeros(s * s);
    for i in 0..s {
        out[i] = h.m[(i, i)].re;
    }
    let mut k = s;
    for i in 0..s {
        for j in (i + 1)..s {
            let z = h.m[(i, j)];
            out[k] = std::f64::consts::SQRT_2 * z.re;
            out[k + 1] = std::f64::consts::SQRT_2 * z.im;
            k += 2;
        }
    }
    out
}

/// Inverse of [`herm_coords`].
pub fn herm_from_coords(s: usize, coords: &[f64]) -> Result<HermMatrix> {
    if coords.len() != s * s {
        return Err(Error::Shape(format!(
            "Her_{s} has {} coordinates, got {}",
            s * s,
            coords.len()
        )));
    }
    let mut m = DMatrix::zeros(s, s);
    for i in 0..s {
        m[(i, i)] = C64::new(coords[i], 0.0);
    }
    let mut k = s;
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..s {
        for j in (i + 1)..s {
            let z = C64::new(coords[k] * r, coords[k + 1] * r);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
            k += 2;
        }
    }
    Ok(HermMatrix { m })
}

/// A trace-orthonormal basis of `Her_s` or of its real symmetric part.
#[derive(Clone, Debug)]
pub struct HermBasis {
    pub level: usize,
    pub elements: Vec<HermMatrix>,
}

impl HermBasis {
    pub fn canonical(s: usize) -> Self {
        let elements = (0..s * s)
            .map(|k| {
                let mut c = vec![0.0; s * s];
                c[k] = 1.0;
                herm_from_coords(s, &c).expect("coordinate count matches")
            })
            .collect();
        Self { level: s, elements }
    }

    /// Trace-orthonormal basis of the real symmetric matrices in `Her_s`:
    /// the canonical basis with the imaginary pair elements left out.
    pub fn symmetric(s: usize) -> Self {
        let full = Self::canonical(s);
        let keep = |k: usize| k < s || (k - s) % 2 == 0;
        let elements = full
            .elements
            .into_iter()
            .enumerate()
            .filter(|&(k, _)| keep(k))
            .map(|(_, e)| e)
            .collect();
        Self { level: s, elements }
    }

    /// The canonical basis, or its symmetric part when `real` is set.
    pub fn for_data(s: usize, real: bool) -> Self {
        if real {
            Self::symmetric(s)
        } else {
            Self::canonical(s)
        }
    }

    /// `sum_k w_k B_k`.
    pub fn combine(&self, w: &[f64]) -> HermMatrix {
        let mut m = DMatrix::zeros(self.level, self.level);
        for (e, &x) in self.elements.iter().zip(w) {
            if x != 0.0 {
                m += e.matrix() * C64::new(x, 0.0);
            }
        }
        HermMatrix { m }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Trace inner products with the basis elements.
    pub fn coords(&self, h: &HermMatrix) -> DVector<f64> {
        if self.elements.len() == self.level * self.level {
            return herm_coords(h);
        }
        DVector::from_iterator(self.elements.len(), self.elements.iter().map(|e| e.inner(h)))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Entries {
    Flat(Vec<f64>),
    Nested(Vec<Vec<f64>>),
}

impl Entries {
    fn flatten(self, dim: usize, what: &str) -> std::result::Result<Vec<f64>, String> {
        let flat = match self {
            Entries::Flat(v) => v,
            Entries::Nested(rows) => {
                if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                    return Err(format!("{what}: expected {dim} rows of length {dim}"));
                }
                rows.into_iter().flatten().collect()
            }
        };
        if flat.len() != dim * dim {
            return Err(format!("{what}: expected {} entries, got {}", dim * dim, flat.len()));
        }
        Ok(flat)
    }
}

#[derive(Serialize, Deserialize)]
struct HermJson {
    dim: usize,
    re: Entries,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    im: Option<Entries>,
}

impl Serialize for HermMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let d = self.dim();
        let re: Vec<f64> = (0..d * d).map(|k| self.m[(k / d, k % d)].re).collect();
        let im = if self.is_real() {
            None
        } else {
            Some(Entries::Flat((0..d * d).map(|k| self.m[(k / d, k % d)].im).collect()))
        };
        HermJson {
            dim: d,
            re: Entries::Flat(re),
            im,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for HermMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = HermJson::deserialize(deserializer)?;
        let d = j.dim;
        let re = j.re.flatten(d, "re").map_err(D::Error::custom)?;
        let im = match j.im {
            Some(e) => e.flatten(d, "im").map_err(D::Error::custom)?,
            None => vec![0.0; d * d],
        };
        let m = DMatrix::from_fn(d, d, |i, k| C64::new(re[i * d + k], im[i * d + k]));
        HermMatrix::new(m).map_err(D::Error::custom)
    }
}
