//! Hermitian matrix polynomials and Gram-matrix sum-of-squares certificates.
//!
//! `H = sum_k P_k* P_k` is decided by searching for a PSD Gram matrix `G`
//! with `H = (m(x) (x) I)* G (m(x) (x) I)` for a monomial vector `m`. Failure is
//! certified by a moment functional: Hermitian `Y_g` whose moment matrix is
//! PSD but which pairs negatively with `H`.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cones::PolyhedralCone;
use crate::cpmaps::{choi_kraus, cp_extend, CpMap, ExtensionStatus, KrausDecomposition};
use crate::error::{Error, Result};
use crate::herm::{herm_coords, psd_sqrt, HermBasis, HermMatrix, C64};
use crate::lift::{lift_from_factorization, LiftData, VERIFY_TOL};
use crate::linalg;
use crate::opsys::{fiber_search, interior_margin, MatrixElement, OperatorSystem};
use crate::sample::gaussian_vector;
use crate::sdp::{Goal, HermLmi, SdpStatus};
use crate::slack::{dual_generators, is_canonical_pencil, verify_factorization, Beta, BetaEntry, Factorization};

/// Exponent multi-index.
pub type Exponent = Vec<u32>;

/// Solver tolerance used by [`sos_certify`].
pub const SOLVER_TOL: f64 = 1e-9;

/// A NotSos verdict needs a margin beyond this multiple of [`SOLVER_TOL`].
pub const NOT_SOS_FACTOR: f64 = 1e3;

fn add_exp(a: &[u32], b: &[u32]) -> Exponent {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn degree_of(e: &[u32]) -> u32 {
    e.iter().sum()
}

fn monomial(e: &[u32], x: &[f64]) -> f64 {
    e.iter().zip(x).map(|(&k, &v)| v.powi(k as i32)).product()
}

/// Monomials of total degree exactly `deg` in `n` variables, graded
/// lexicographic (`x_0` first).
pub fn monomials_of_degree(n: usize, deg: u32) -> Vec<Exponent> {
    fn rec(n: usize, deg: u32, prefix: &mut Exponent, out: &mut Vec<Exponent>) {
        if prefix.len() + 1 == n {
            prefix.push(deg);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in (0..=deg).rev() {
            prefix.push(k);
            rec(n, deg - k, prefix, out);
            prefix.pop();
        }
    }
    if n == 0 {
        return if deg == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    rec(n, deg, &mut Vec::with_capacity(n), &mut out);
    out
}

/// Monomials of total degree at most `deg`.
pub fn monomials_up_to(n: usize, deg: u32) -> Vec<Exponent> {
    (0..=deg).flat_map(|k| monomials_of_degree(n, k)).collect()
}

/// A polynomial `sum_e x^e H_e` with Hermitian `t x t` coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolyJson", into = "PolyJson")]
pub struct HermMatrixPoly {
    n_vars: usize,
    t: usize,
    terms: BTreeMap<Exponent, HermMatrix>,
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    exp: Exponent,
    coeff: HermMatrix,
}

#[derive(Serialize, Deserialize)]
struct PolyJson {
    n: usize,
    t: usize,
    terms: Vec<TermJson>,
}

impl TryFrom<PolyJson> for HermMatrixPoly {
    type Error = Error;
    fn try_from(j: PolyJson) -> Result<Self> {
        let mut p = HermMatrixPoly::zero(j.n, j.t);
        for term in j.terms {
            p.add_term(term.exp, &term.coeff)?;
        }
        Ok(p)
    }
}

impl From<HermMatrixPoly> for PolyJson {
    fn from(p: HermMatrixPoly) -> Self {
        PolyJson {
            n: p.n_vars,
            t: p.t,
            terms: p.terms.into_iter().map(|(exp, coeff)| TermJson { exp, coeff }).collect(),
        }
    }
}

impl HermMatrixPoly {
    pub fn zero(n_vars: usize, t: usize) -> Self {
        Self {
            n_vars,
            t,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n_vars: usize, c: HermMatrix) -> Self {
        let mut p = Self::zero(n_vars, c.dim());
        p.add_term(vec![0; n_vars], &c).expect("shapes match");
        p
    }

    pub fn from_terms(n_vars: usize, t: usize, terms: impl IntoIterator<Item = (Exponent, HermMatrix)>) -> Result<Self> {
        let mut p = Self::zero(n_vars, t);
        for (e, c) in terms {
            p.add_term(e, &c)?;
        }
        Ok(p)
    }

    /// Adds `x^exp coeff`, dropping terms that cancel exactly.
    pub fn add_term(&mut self, exp: Exponent, coeff: &HermMatrix) -> Result<()> {
        if exp.len() != self.n_vars {
            return Err(Error::Shape(format!("exponent of length {}, expected {}", exp.len(), self.n_vars)));
        }
        if coeff.dim() != self.t {
            return Err(Error::Shape(format!("coefficient of size {}, expected {}", coeff.dim(), self.t)));
        }
        let entry = self.terms.entry(exp).or_insert_with(|| HermMatrix::zeros(coeff.dim()));
        *entry += coeff;
        self.terms.retain(|_, c| c.norm() > 0.0);
        Ok(())
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn terms(&self) -> &BTreeMap<Exponent, HermMatrix> {
        &self.terms
    }

    pub fn coeff(&self, exp: &[u32]) -> HermMatrix {
        self.terms.get(exp).cloned().unwrap_or_else(|| HermMatrix::zeros(self.t))
    }

    /// Total degree; zero for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| degree_of(e)).max().unwrap_or(0)
    }

    pub fn is_homogeneous(&self) -> bool {
        let d = self.degree();
        self.terms.keys().all(|e| degree_of(e) == d)
    }

    pub fn is_real(&self) -> bool {
        self.terms.values().all(HermMatrix::is_real)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn max_coeff_norm(&self) -> f64 {
        self.terms.values().map(HermMatrix::norm).fold(0.0, f64::max)
    }

    pub fn eval(&self, x: &[f64]) -> Result<HermMatrix> {
        if x.len() != self.n_vars {
            return Err(Error::Shape(format!("point of length {}, expected {}", x.len(), self.n_vars)));
        }
        let mut out = HermMatrix::zeros(self.t);
        for (e, c) in &self.terms {
            out += &c.scale(monomial(e, x));
        }
        Ok(out)
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut p = Self::zero(self.n_vars, self.t);
        for (e, c) in &self.terms {
            p.add_term(e.clone(), &c.scale(s)).expect("same shape");
        }
        p
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let mut p = self.clone();
        for (e, c) in &other.terms {
            p.add_term(e.clone(), c)?;
        }
        Ok(p)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    /// `H(x - u)`, expanded binomially.
    pub fn translate(&self, u: &[f64]) -> Result<Self> {
        if u.len() != self.n_vars {
            return Err(Error::Shape("translation of the wrong length".into()));
        }
        let mut p = Self::zero(self.n_vars, self.t);
        for (e, c) in &self.terms {
            // prod_i (x_i - u_i)^{e_i} = prod_i sum_k binom(e_i,k) x_i^k (-u_i)^{e_i-k}
            let mut parts: Vec<(Exponent, f64)> = vec![(vec![], 1.0)];
            for (i, &ei) in e.iter().enumerate() {
                let mut next = Vec::new();
                for (pre, w) in &parts {
                    for k in 0..=ei {
                        let coef = binom(ei, k) * (-u[i]).powi((ei - k) as i32);
                        if coef != 0.0 {
                            let mut ex = pre.clone();
                            ex.push(k);
                            next.push((ex, w * coef));
                        }
                    }
                }
                parts = next;
            }
            for (ex, w) in parts {
                p.add_term(ex, &c.scale(w))?;
            }
        }
        Ok(p)
    }

    /// Coordinates of all coefficients against `monomials` (canonical
    /// `Her_t` coordinates, monomial-major).
    fn coeff_vector(&self, monomials: &[Exponent]) -> DVector<f64> {
        let tt = self.t * self.t;
        let mut v = DVector::zeros(monomials.len() * tt);
        for (i, e) in monomials.iter().enumerate() {
            if let Some(c) = self.terms.get(e) {
                v.rows_mut(i * tt, tt).copy_from(&herm_coords(c));
            }
        }
        v
    }
}

fn binom(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

/// `H(point)`.
pub fn eval_poly(h: &HermMatrixPoly, point: &[f64]) -> Result<HermMatrix> {
    h.eval(point)
}

/// A polynomial with `rows x cols` complex matrix coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixPoly {
    pub n_vars: usize,
    pub rows: usize,
    pub cols: usize,
    pub terms: BTreeMap<Exponent, DMatrix<C64>>,
}

#[derive(Serialize, Deserialize)]
struct MatrixTermJson {
    exp: Exponent,
    re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    im: Option<Vec<Vec<f64>>>,
}

#[derive(Serialize, Deserialize)]
struct MatrixPolyJson {
    n: usize,
    rows: usize,
    cols: usize,
    terms: Vec<MatrixTermJson>,
}

impl Serialize for MatrixPoly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let grid = |m: &DMatrix<C64>, f: fn(&C64) -> f64| -> Vec<Vec<f64>> {
            (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect()).collect()
        };
        MatrixPolyJson {
            n: self.n_vars,
            rows: self.rows,
            cols: self.cols,
            terms: self
                .terms
                .iter()
                .map(|(e, m)| MatrixTermJson {
                    exp: e.clone(),
                    re: grid(m, |z| z.re),
                    im: m.iter().any(|z| z.im != 0.0).then(|| grid(m, |z| z.im)),
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MatrixPoly {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = MatrixPolyJson::deserialize(d)?;
        let mut terms = BTreeMap::new();
        for t in j.terms {
            if t.exp.len() != j.n || t.re.len() != j.rows || t.re.iter().any(|r| r.len() != j.cols) {
                return Err(D::Error::custom("matrix polynomial term of the wrong shape"));
            }
            let im = t.im.unwrap_or_else(|| vec![vec![0.0; j.cols]; j.rows]);
            if im.len() != j.rows || im.iter().any(|r| r.len() != j.cols) {
                return Err(D::Error::custom("imaginary part of the wrong shape"));
            }
            terms.insert(t.exp, DMatrix::from_fn(j.rows, j.cols, |r, c| C64::new(t.re[r][c], im[r][c])));
        }
        Ok(MatrixPoly {
            n_vars: j.n,
            rows: j.rows,
            cols: j.cols,
            terms,
        })
    }
}

impl MatrixPoly {
    pub fn eval(&self, x: &[f64]) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(self.rows, self.cols);
        for (e, c) in &self.terms {
            out += c * C64::new(monomial(e, x), 0.0);
        }
        out
    }

    /// `P* P` expanded.
    pub fn gram(&self) -> HermMatrixPoly {
        let mut acc: BTreeMap<Exponent, DMatrix<C64>> = BTreeMap::new();
        for (ea, a) in &self.terms {
            for (eb, b) in &self.terms {
                let e = add_exp(ea, eb);
                let prod = a.adjoint() * b;
                acc.entry(e)
                    .and_modify(|m| *m += &prod)
                    .or_insert(prod);
            }
        }
        let mut p = HermMatrixPoly::zero(self.n_vars, self.cols);
        for (e, m) in acc {
            p.add_term(e, &HermMatrix::new(m).expect("symmetric sum")).expect("same shape");
        }
        p
    }
}

/// `sum_k P_k* P_k`.
pub fn sum_of_squares(factors: &[MatrixPoly], n_vars: usize, t: usize) -> HermMatrixPoly {
    let mut p = HermMatrixPoly::zero(n_vars, t);
    for f in factors {
        p = p.add(&f.gram()).expect("same shape");
    }
    p
}

/// A verified sum-of-squares decomposition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SosCertificate {
    pub basis: Vec<Exponent>,
    /// PSD Gram matrix of size `N t`.
    pub gram: HermMatrix,
    /// Row factors `P_k = sqrt(mu_k) g_k* (m(x) (x) I)`.
    pub factors: Vec<MatrixPoly>,
    /// Smallest eigenvalue margin found by the solver (normalized units).
    pub lambda: f64,
    /// Largest coefficient deviation of `sum_k P_k* P_k` from `H`.
    pub reassembly_error: f64,
}

/// A moment functional separating `H` from the sums of squares.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NotSosCertificate {
    /// Optimal Gram margin found by the solver (normalized units).
    pub lambda: f64,
    /// `L(H) / tr M(Y)` for the normalized `H`: negative.
    pub margin: f64,
    /// `Y_g` for every `g` in `basis + basis`.
    pub moments: Vec<(Exponent, HermMatrix)>,
    pub basis: Vec<Exponent>,
    /// Smallest eigenvalue of the repaired moment matrix.
    pub moment_min_eig: f64,
}

/// Outcome of [`sos_certify`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SosVerdict {
    Certificate(SosCertificate),
    NotSos(NotSosCertificate),
    /// A monomial of `H` is not a sum of two basis monomials.
    StructuralNotSos { monomial: Exponent },
    Inconclusive { lambda: f64, dual_bound: f64 },
}

impl SosVerdict {
    pub fn name(&self) -> &'static str {
        match self {
            SosVerdict::Certificate(_) => "certificate",
            SosVerdict::NotSos(_) => "not_sos",
            SosVerdict::StructuralNotSos { .. } => "structural_not_sos",
            SosVerdict::Inconclusive { .. } => "inconclusive",
        }
    }

    pub fn is_not_sos(&self) -> bool {
        matches!(self, SosVerdict::NotSos(_) | SosVerdict::StructuralNotSos { .. })
    }
}

/// Degree `deg/2` monomials for even homogeneous `H`, else degree at most
/// `ceil(deg/2)`.
pub fn default_basis(h: &HermMatrixPoly) -> Vec<Exponent> {
    let d = h.degree();
    if h.is_homogeneous() && d % 2 == 0 {
        monomials_of_degree(h.n_vars, d / 2)
    } else {
        monomials_up_to(h.n_vars, d.div_ceil(2))
    }
}

/// Gaussian moments `E[x^g]`.
fn gaussian_moment(e: &[u32]) -> f64 {
    e.iter()
        .map(|&k| {
            if k % 2 == 1 {
                0.0
            } else {
                (1..k).step_by(2).map(f64::from).product()
            }
        })
        .product()
}

/// `M(Y)` with block `(i, j)` equal to `Y_{b_i + b_j}`.
pub fn moment_matrix(basis: &[Exponent], moments: &[(Exponent, HermMatrix)], t: usize) -> Result<HermMatrix> {
    let lookup: HashMap<&Exponent, &HermMatrix> = moments.iter().map(|(e, y)| (e, y)).collect();
    let n = basis.len();
    let mut m = DMatrix::zeros(n * t, n * t);
    for (i, a) in basis.iter().enumerate() {
        for (j, b) in basis.iter().enumerate() {
            let g = add_exp(a, b);
            let y = lookup
                .get(&g)
                .ok_or_else(|| Error::InvalidInput(format!("no moment for monomial {g:?}")))?;
            m.view_mut((i * t, j * t), (t, t)).copy_from(y.matrix());
        }
    }
    HermMatrix::new(m)
}

/// `L(H) = sum_g <Y_g, H_g>`; errors if `H` has a monomial without a moment.
pub fn moment_pairing(h: &HermMatrixPoly, moments: &[(Exponent, HermMatrix)]) -> Result<f64> {
    let lookup: HashMap<&Exponent, &HermMatrix> = moments.iter().map(|(e, y)| (e, y)).collect();
    h.terms
        .iter()
        .map(|(e, c)| {
            lookup
                .get(e)
                .map(|y| y.inner(c))
                .ok_or_else(|| Error::InvalidInput(format!("no moment for monomial {e:?}")))
        })
        .sum()
}

/// Recomputes a NotSos certificate from scratch: returns
/// `(moment matrix min eigenvalue, L(H) / tr M(Y))`.
pub fn recheck_not_sos(h: &HermMatrixPoly, cert: &NotSosCertificate) -> Result<(f64, f64)> {
    let m = moment_matrix(&cert.basis, &cert.moments, h.t)?;
    let scale = h.max_coeff_norm();
    let pairing = moment_pairing(h, &cert.moments)? / scale.max(f64::MIN_POSITIVE);
    Ok((m.min_eig(), pairing / m.trace()))
}

/// Decides whether `H` is a sum of Hermitian squares over `basis`.
pub fn sos_certify(h: &HermMatrixPoly, basis: Option<&[Exponent]>, tol: f64) -> Result<SosVerdict> {
    let basis: Vec<Exponent> = match basis {
        Some(b) => b.to_vec(),
        None => default_basis(h),
    };
    let t = h.t;
    if basis.iter().any(|e| e.len() != h.n_vars) {
        return Err(Error::Shape("basis monomials have the wrong number of variables".into()));
    }
    if h.is_zero() {
        return Ok(SosVerdict::Certificate(SosCertificate {
            gram: HermMatrix::zeros(basis.len() * t),
            basis,
            factors: vec![],
            lambda: 0.0,
            reassembly_error: 0.0,
        }));
    }
    // S = basis + basis, in first-seen order
    let mut sums: Vec<Exponent> = Vec::new();
    let mut index: HashMap<Exponent, usize> = HashMap::new();
    for a in &basis {
        for b in &basis {
            let g = add_exp(a, b);
            if !index.contains_key(&g) {
                index.insert(g.clone(), sums.len());
                sums.push(g);
            }
        }
    }
    if let Some(e) = h.terms.keys().find(|e| !index.contains_key(*e)) {
        return Ok(SosVerdict::StructuralNotSos { monomial: e.clone() });
    }
    let scale = h.max_coeff_norm();
    let hn = h.scale(1.0 / scale);
    let real = hn.is_real();
    let size = basis.len() * t;
    let gb = HermBasis::for_data(size, real);
    let tb = HermBasis::for_data(t, real);
    let kt = tb.len();
    let mut rows = gram_rows(&basis, t, &gb, &tb, &index);
    let mut lmi = HermLmi::new(gb.len(), Goal::MinEig { cap: Some(1.0) });
    for (g, e) in sums.iter().enumerate() {
        let rhs = tb.coords(&hn.coeff(e));
        for r in 0..kt {
            lmi.add_eq(std::mem::take(&mut rows[g * kt + r]), rhs[r]);
        }
    }
    lmi.add_block(HermMatrix::zeros(size), gb.elements.iter().cloned().enumerate().collect(), true);
    let sol = lmi.solve(SOLVER_TOL * 0.1)?;
    if sol.sdp.is_none() && sol.status == SdpStatus::Infeasible {
        // coefficient matching alone is inconsistent
        return Ok(SosVerdict::Inconclusive {
            lambda: f64::NEG_INFINITY,
            dual_bound: f64::NEG_INFINITY,
        });
    }
    let solved = matches!(sol.status, SdpStatus::Optimal | SdpStatus::Feasible);
    if solved && sol.value >= -tol {
        let g = gb.combine(sol.w.as_slice()).scale(scale);
        if let Some(cert) = extract_certificate(h, &basis, g, sol.value) {
            return Ok(SosVerdict::Certificate(cert));
        }
    }
    if solved && sol.dual_bound < -tol {
        let moments: Vec<(Exponent, HermMatrix)> = sums
            .iter()
            .enumerate()
            .map(|(g, e)| {
                let c: Vec<f64> = (0..kt).map(|r| sol.eq_multipliers[g * kt + r]).collect();
                (e.clone(), tb.combine(&c))
            })
            .collect();
        if let Some(cert) = repair_moments(&hn, &basis, moments, sol.value)? {
            if cert.margin <= -NOT_SOS_FACTOR * SOLVER_TOL {
                return Ok(SosVerdict::NotSos(cert));
            }
        }
    }
    Ok(SosVerdict::Inconclusive {
        lambda: sol.value,
        dual_bound: sol.dual_bound,
    })
}

/// `rows[g * kt + r]`: coordinate `r` of the `x^g` coefficient of
/// `(m(x) (x) I)* G (m(x) (x) I)` as a functional on the coordinates of `G`.
fn gram_rows(
    basis: &[Exponent],
    t: usize,
    gb: &HermBasis,
    tb: &HermBasis,
    index: &HashMap<Exponent, usize>,
) -> Vec<Vec<(usize, f64)>> {
    let size = basis.len() * t;
    let kt = tb.len();
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); index.len() * kt];
    for (v, b) in gb.elements.iter().enumerate() {
        let mut touched: HashMap<usize, DMatrix<C64>> = HashMap::new();
        let m = b.matrix();
        for p in 0..size {
            for q in 0..size {
                let z = m[(p, q)];
                if z == C64::new(0.0, 0.0) {
                    continue;
                }
                let g = index[&add_exp(&basis[p / t], &basis[q / t])];
                touched.entry(g).or_insert_with(|| DMatrix::zeros(t, t))[(p % t, q % t)] += z;
            }
        }
        for (g, c) in touched {
            let coords = tb.coords(&HermMatrix::new(c).expect("paired entries"));
            for r in 0..kt {
                if coords[r].abs() > 1e-15 {
                    rows[g * kt + r].push((v, coords[r]));
                }
            }
        }
    }
    rows
}

/// Clips `G` to the PSD cone, factors it and checks reassembly.
fn extract_certificate(h: &HermMatrixPoly, basis: &[Exponent], g: HermMatrix, lambda: f64) -> Option<SosCertificate> {
    let t = h.t;
    let g = g.spectral_map(|x| x.max(0.0));
    let (vals, vecs) = g.eigh();
    let top = vals.iter().cloned().fold(0.0, f64::max);
    let mut factors = Vec::new();
    for (k, &mu) in vals.iter().enumerate() {
        if mu <= 1e-9 * top.max(f64::MIN_POSITIVE) {
            continue;
        }
        let s = mu.sqrt();
        let mut terms = BTreeMap::new();
        for (i, e) in basis.iter().enumerate() {
            let row = DMatrix::from_fn(1, t, |_, a| vecs[(i * t + a, k)].conj() * C64::new(s, 0.0));
            if row.iter().any(|z| z.norm() > 0.0) {
                terms.insert(e.clone(), row);
            }
        }
        factors.push(MatrixPoly {
            n_vars: h.n_vars,
            rows: 1,
            cols: t,
            terms,
        });
    }
    let back = sum_of_squares(&factors, h.n_vars, t);
    let diff = back.sub(h).ok()?;
    let reassembly_error = diff.max_coeff_norm();
    (reassembly_error <= 1e-7).then(|| SosCertificate {
        basis: basis.to_vec(),
        gram: g,
        factors,
        lambda,
        reassembly_error,
    })
}

/// Adds a multiple of the Gaussian moments so that `M(Y)` is PSD, then
/// normalizes by its trace.
fn repair_moments(
    hn: &HermMatrixPoly,
    basis: &[Exponent],
    mut moments: Vec<(Exponent, HermMatrix)>,
    lambda: f64,
) -> Result<Option<NotSosCertificate>> {
    let t = hn.t;
    let m = moment_matrix(basis, &moments, t)?;
    let gauss: Vec<(Exponent, HermMatrix)> = moments
        .iter()
        .map(|(e, _)| (e.clone(), HermMatrix::identity(t).scale(gaussian_moment(e))))
        .collect();
    let m0 = moment_matrix(basis, &gauss, t)?;
    let low = m.min_eig();
    if low < 0.0 {
        let floor = m0.min_eig();
        if floor <= 0.0 {
            return Ok(None);
        }
        let delta = -low / floor * (1.0 + 1e-9) + 1e-15;
        for ((_, y), (_, y0)) in moments.iter_mut().zip(&gauss) {
            *y += &y0.scale(delta);
        }
    }
    let m = moment_matrix(basis, &moments, t)?;
    let tr = m.trace();
    if tr <= 0.0 {
        return Ok(None);
    }
    for (_, y) in moments.iter_mut() {
        *y = y.scale(1.0 / tr);
    }
    let m = moment_matrix(basis, &moments, t)?;
    let moment_min_eig = m.min_eig();
    if moment_min_eig < 0.0 {
        return Ok(None);
    }
    let margin = moment_pairing(hn, &moments)?;
    Ok(Some(NotSosCertificate {
        lambda,
        margin,
        moments,
        basis: basis.to_vec(),
        moment_min_eig,
    }))
}

/// A real polynomial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarPoly {
    pub n_vars: usize,
    pub terms: BTreeMap<Exponent, f64>,
}

impl ScalarPoly {
    pub fn zero(n_vars: usize) -> Self {
        Self {
            n_vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn monomial(exp: Exponent, c: f64) -> Self {
        let mut p = Self::zero(exp.len());
        p.add_term(exp, c);
        p
    }

    pub fn add_term(&mut self, exp: Exponent, c: f64) {
        *self.terms.entry(exp).or_insert(0.0) += c;
        self.terms.retain(|_, v| *v != 0.0);
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(e, c)| c * monomial(e, x)).sum()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| degree_of(e)).max().unwrap_or(0)
    }

    /// As a `1 x 1` matrix polynomial.
    pub fn to_matrix_poly(&self) -> HermMatrixPoly {
        HermMatrixPoly::from_terms(
            self.n_vars,
            1,
            self.terms.iter().map(|(e, &c)| (e.clone(), HermMatrix::diag(&[c]))),
        )
        .expect("scalar terms")
    }
}

/// `v* H(x) v` as a polynomial in `x` and real auxiliary variables.
///
/// Real `H` uses `t` auxiliary variables. Complex `H` uses `2t`, writing
/// `v = a + ib` so that `v* H v = [a; b]^T [[Re H, -Im H], [Im H, Re H]] [a; b]`.
pub fn scalar_compress(h: &HermMatrixPoly) -> ScalarPoly {
    let n = h.n_vars;
    let t = h.t;
    let aux = if h.is_real() { t } else { 2 * t };
    let mut p = ScalarPoly::zero(n + aux);
    for (e, c) in &h.terms {
        let m = if h.is_real() {
            c.real_part()
        } else {
            crate::herm::realify(c)
        };
        for i in 0..aux {
            for j in 0..aux {
                let v = m[(i, j)];
                if v != 0.0 {
                    let mut ex = e.clone();
                    ex.extend(std::iter::repeat_n(0, aux));
                    ex[n + i] += 1;
                    ex[n + j] += 1;
                    p.add_term(ex, v);
                }
            }
        }
    }
    p
}

/// Monomials `x^e v_a` for `|e| = deg`, the natural basis for compressed
/// matrix squares.
pub fn bilinear_basis(n: usize, deg: u32, aux: usize) -> Vec<Exponent> {
    let mut out = Vec::new();
    for e in monomials_of_degree(n, deg) {
        for a in 0..aux {
            let mut ex = e.clone();
            ex.extend(std::iter::repeat_n(0, aux));
            ex[n + a] = 1;
            out.push(ex);
        }
    }
    out
}

/// Smallest eigenvalue observed by [`positivity_sample`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositivitySample {
    pub min_observed: f64,
    pub argmin: Vec<f64>,
    pub samples: usize,
}

/// `min_eig H(x)` over random points of the sphere of the given radius.
pub fn positivity_sample<R: Rng + ?Sized>(
    h: &HermMatrixPoly,
    n_samples: usize,
    radius: f64,
    rng: &mut R,
) -> PositivitySample {
    let mut best = PositivitySample {
        min_observed: f64::INFINITY,
        argmin: vec![0.0; h.n_vars],
        samples: n_samples,
    };
    for _ in 0..n_samples {
        let mut x = gaussian_vector(rng, h.n_vars);
        let norm = x.norm();
        if norm > 0.0 {
            x *= radius / norm;
        }
        let e = h.eval(x.as_slice()).expect("point of the right length").min_eig();
        if e < best.min_observed {
            best.min_observed = e;
            best.argmin = x.as_slice().to_vec();
        }
    }
    best
}

/// The 3x3 quartic form that is PSD everywhere but not a sum of squares.
pub fn choi_example() -> HermMatrixPoly {
    // entries as (row, col, exponent, value), upper triangle
    let entries: &[(usize, usize, [u32; 3], f64)] = &[
        (0, 0, [0, 0, 2], 2.0),
        (0, 0, [2, 0, 0], 1.0),
        (0, 1, [1, 1, 0], -1.0),
        (0, 2, [1, 0, 1], -1.0),
        (1, 1, [2, 0, 0], 2.0),
        (1, 1, [0, 2, 0], 1.0),
        (1, 2, [0, 1, 1], -1.0),
        (2, 2, [0, 0, 2], 1.0),
        (2, 2, [0, 2, 0], 2.0),
    ];
    let mut h = HermMatrixPoly::zero(3, 3);
    for &(i, j, e, v) in entries {
        let mut m = DMatrix::<f64>::zeros(3, 3);
        m[(i, j)] = v;
        m[(j, i)] = v;
        h.add_term(e.to_vec(), &HermMatrix::from_real(&m).expect("symmetric"))
            .expect("3 variables, 3x3");
    }
    h
}

/// Factors `P_k(c_j)` at every generator for one dual map: `[k][j]`.
pub type GeneratorFactors = Vec<Vec<DMatrix<C64>>>;

/// Builds a lift from sum-of-squares data on the generators.
///
/// `f` holds `f(c_j)` as rows (`m x d`); `factors[i]` are the factors for the
/// `i`-th map of `dual_generators(cone, t_max)`, with entries in the span of
/// the columns of `f`.
pub fn lift_from_sos(
    cone: &PolyhedralCone,
    f: &DMatrix<C64>,
    factors: &[GeneratorFactors],
    t_max: usize,
    tol: f64,
) -> Result<LiftData> {
    let m = cone.num_generators();
    let d = f.ncols();
    if f.nrows() != m {
        return Err(Error::Shape(format!("{} basis function rows for {m} generators", f.nrows())));
    }
    let duals = dual_generators(cone, t_max)?;
    if factors.len() != duals.len() {
        return Err(Error::IncompleteFactorization(format!(
            "{} factor sets for {} dual generators",
            factors.len(),
            duals.len()
        )));
    }
    let alpha: Vec<DVector<f64>> = (0..m)
        .map(|j| {
            let row = f.row(j).transpose();
            herm_coords(&HermMatrix::outer(&row.map(|z| z.conj())))
        })
        .collect();
    let pinv = complex_pinv(f);
    let mut entries = Vec::with_capacity(duals.len());
    for (i, (phi, fac)) in duals.iter().zip(factors).enumerate() {
        let t = phi.t();
        let mut ops = Vec::new();
        for (k, pk) in fac.iter().enumerate() {
            if pk.len() != m {
                return Err(Error::IncompleteFactorization(format!(
                    "factor {k} of dual {i} has {} generator values",
                    pk.len()
                )));
            }
            let rows = pk[0].nrows();
            for r in 0..rows {
                // b_krs solves F b = (P_k(c_j)_rs)_j
                let mut v = DMatrix::zeros(d, t);
                for s in 0..t {
                    let p = DVector::from_iterator(m, pk.iter().map(|pj| pj[(r, s)]));
                    let b = &pinv * &p;
                    let resid = (f * &b - &p).norm();
                    if resid > tol * (1.0 + p.norm()) {
                        return Err(Error::Coefficient(format!(
                            "factor {k} row {r} of dual {i} is outside the span of the basis functions (residual {resid:.3e})"
                        )));
                    }
                    v.set_column(s, &b);
                }
                ops.push(v);
            }
        }
        let kraus = KrausDecomposition::new(d, t, ops)?;
        entries.push(BetaEntry {
            dual: phi.clone(),
            value: kraus.linear_map(),
        });
    }
    let fact = Factorization {
        cone: cone.clone(),
        target: OperatorSystem::psd(d),
        alpha,
        beta: Beta::Table { entries },
        linear_alpha: None,
    };
    let report = verify_factorization(&fact, &duals, tol.max(VERIFY_TOL))?;
    if !report.pass {
        return Err(Error::Construction(format!(
            "sum-of-squares data does not factor the slack (deviation {:.3e} at pair {:?})",
            report.max_dev, report.worst_pair
        )));
    }
    lift_from_factorization(&fact, t_max)
}

fn complex_pinv(f: &DMatrix<C64>) -> DMatrix<C64> {
    let svd = f.clone().svd(true, true);
    let top = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cut = linalg::RANK_TOL * top.max(f64::MIN_POSITIVE);
    let inv = svd.singular_values.map(|s| if s > cut { 1.0 / s } else { 0.0 });
    let u = svd.u.expect("requested");
    let vt = svd.v_t.expect("requested");
    vt.adjoint() * DMatrix::from_diagonal(&inv.map(|x| C64::new(x, 0.0))) * u.adjoint()
}

/// Factor values at one point from [`sos_from_lift`].
#[derive(Clone, Debug, PartialEq)]
pub struct PointFactors {
    pub point: DVector<f64>,
    /// `P_k(c) = Q(iota(c)) V_k`, each `d x t`.
    pub factors: Vec<DMatrix<C64>>,
    /// `||phi(c) - sum_k P_k(c)* P_k(c)||_F`.
    pub deviation: f64,
}

/// Pointwise sum-of-squares values `P_k(c)` from a lift into `P^d`.
pub fn sos_from_lift(l: &LiftData, phi: &CpMap, points: &[DVector<f64>], tol: f64) -> Result<Vec<PointFactors>> {
    let OperatorSystem::FreeSpectrahedron { a: pencil } = &l.target else {
        return Err(Error::Capability("sum-of-squares values need the target P^d".into()));
    };
    if !is_canonical_pencil(pencil) {
        return Err(Error::Capability("sum-of-squares values need the target P^d".into()));
    }
    let d = pencil[0].dim();
    let t = phi.t();
    let images: Vec<HermMatrix> = (0..l.dim())
        .map(|q| crate::herm::herm_from_coords(d, l.gamma.matrix.column(q).as_slice()).expect("Her_d coordinates"))
        .collect();
    if interior_margin(&images)? <= tol {
        return Err(Error::Properness("gamma(Z) contains no positive definite matrix".into()));
    }
    let values = (0..l.dim())
        .map(|q| phi.eval_vector(&l.pi.matrix.column(q).into_owned()))
        .collect::<Result<Vec<_>>>()?;
    let ext = cp_extend(&CpMap::on_subspace(d, images, values)?, tol)?;
    let ext_map = match (ext.status, ext.map) {
        (ExtensionStatus::Extended, Some(m)) => m,
        (status, _) => {
            return Err(Error::Properness(format!(
                "dual map has no CP extension from gamma(Z) ({status:?})"
            )))
        }
    };
    let kraus = choi_kraus(&ext_map, 1e-8)?;
    let mut out = Vec::with_capacity(points.len());
    for c in points {
        let target = phi.eval_vector(c)?;
        if c.norm() == 0.0 {
            out.push(PointFactors {
                point: c.clone(),
                factors: vec![DMatrix::zeros(d, t); kraus.operators.len()],
                deviation: target.norm(),
            });
            continue;
        }
        let fib = fiber_search(&l.pi, &l.gamma, &l.target, &MatrixElement::from_vector(c))?;
        if !matches!(fib.status, SdpStatus::Optimal | SdpStatus::Feasible) || fib.value < -tol {
            return Err(Error::Construction(format!("point {c} is not in the cone (no fiber point)")));
        }
        let z = DVector::from_iterator(l.dim(), fib.z.iter().map(|h| h.matrix()[(0, 0)].re));
        let y = crate::herm::herm_from_coords(d, l.gamma.apply(&z).as_slice())?;
        let q = psd_sqrt(&y.spectral_map(|x| x.max(0.0)), 1e-12)?;
        let factors: Vec<DMatrix<C64>> = kraus.operators.iter().map(|v| q.matrix() * v).collect();
        let mut sum = DMatrix::zeros(t, t);
        for p in &factors {
            sum += p.adjoint() * p;
        }
        let deviation = (target.matrix() - sum).norm();
        if deviation > tol.max(1e-7) * (1.0 + target.norm()) {
            return Err(Error::Construction(format!(
                "pointwise identity fails at {c} (deviation {deviation:.3e})"
            )));
        }
        out.push(PointFactors {
            point: c.clone(),
            factors,
            deviation,
        });
    }
    Ok(out)
}

/// Which hypotheses of the lift obstruction hold for `H`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObstructionReport {
    /// `H` lies in `V_t = span{q_i A : A Hermitian}`.
    pub in_span: bool,
    pub homogeneous: bool,
    /// Per translation sample, whether `H(x - u)` lies in `V_t`.
    pub translates_in_span: Vec<bool>,
    /// Verdict name of [`sos_certify`] on `H`.
    pub certifier: String,
    pub not_sos: bool,
}

impl ObstructionReport {
    pub fn all_hold(&self) -> bool {
        self.in_span && self.homogeneous && self.translates_in_span.iter().all(|&b| b) && self.not_sos
    }
}

fn in_span_of(h: &HermMatrixPoly, q_list: &[ScalarPoly], tol: f64) -> bool {
    let mut monos: Vec<Exponent> = h.terms.keys().cloned().collect();
    for q in q_list {
        monos.extend(q.terms.keys().cloned());
    }
    monos.sort();
    monos.dedup();
    let pos: HashMap<&Exponent, usize> = monos.iter().enumerate().map(|(i, e)| (e, i)).collect();
    let mut qm = DMatrix::zeros(monos.len(), q_list.len());
    for (j, q) in q_list.iter().enumerate() {
        for (e, &c) in &q.terms {
            qm[(pos[e], j)] = c;
        }
    }
    let pinv = linalg::pinv(&qm, linalg::RANK_TOL);
    // each Her_t coordinate of H is a scalar polynomial that must lie in span(q)
    let tt = h.t * h.t;
    let coeffs = h.coeff_vector(&monos);
    (0..tt).all(|r| {
        let v = DVector::from_iterator(monos.len(), (0..monos.len()).map(|i| coeffs[i * tt + r]));
        let fit = &qm * (&pinv * &v);
        (fit - &v).norm() <= tol * (1.0 + v.norm())
    })
}

/// Checks the hypotheses of the obstruction: membership of `H` and its
/// translates in `V_t`, homogeneity, and the certifier's verdict.
pub fn obstruction_hypothesis_check(
    h: &HermMatrixPoly,
    q_list: &[ScalarPoly],
    u_samples: &[DVector<f64>],
    tol: f64,
) -> Result<ObstructionReport> {
    if q_list.iter().any(|q| q.n_vars != h.n_vars) {
        return Err(Error::Shape("span polynomials have the wrong number of variables".into()));
    }
    let translates = u_samples
        .iter()
        .map(|u| Ok(in_span_of(&h.translate(u.as_slice())?, q_list, tol)))
        .collect::<Result<Vec<_>>>()?;
    let verdict = sos_certify(h, None, tol)?;
    Ok(ObstructionReport {
        in_span: in_span_of(h, q_list, tol),
        homogeneous: h.is_homogeneous(),
        translates_in_span: translates,
        certifier: verdict.name().to_string(),
        not_sos: verdict.is_not_sos(),
    })
}

/// Every monomial of degree at most `deg`, as scalar polynomials.
pub fn monomial_span(n: usize, deg: u32) -> Vec<ScalarPoly> {
    monomials_up_to(n, deg).into_iter().map(|e| ScalarPoly::monomial(e, 1.0)).collect()
}

/// The linear matrix polynomial `x -> sum_i x_i L_i`.
pub fn linear_matrix_poly(coeffs: &[DMatrix<C64>]) -> MatrixPoly {
    let n = coeffs.len();
    let (rows, cols) = coeffs.first().map_or((0, 0), DMatrix::shape);
    let mut terms = BTreeMap::new();
    for (i, c) in coeffs.iter().enumerate() {
        let mut e = vec![0; n];
        e[i] = 1;
        terms.insert(e, c.clone());
    }
    MatrixPoly {
        n_vars: n,
        rows,
        cols,
        terms,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gram_rows_match_expansion() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for (n, deg, t) in [(2, 2, 2), (3, 2, 2), (3, 1, 3)] {
            let basis = monomials_of_degree(n, deg);
            let mut index = HashMap::new();
            for a in &basis {
                for b in &basis {
                    let g = add_exp(a, b);
                    let len = index.len();
                    index.entry(g).or_insert(len);
                }
            }
            let size = basis.len() * t;
            let gb = HermBasis::for_data(size, false);
            let tb = HermBasis::for_data(t, false);
            let g = crate::sample::random_herm(&mut rng, size);
            let w = gb.coords(&g);
            let rows = gram_rows(&basis, t, &gb, &tb, &index);
            for (e, &k) in &index {
                let mut direct = DMatrix::<C64>::zeros(t, t);
                for (i, a) in basis.iter().enumerate() {
                    for (j, b) in basis.iter().enumerate() {
                        if add_exp(a, b) == *e {
                            direct += g.matrix().view((i * t, j * t), (t, t));
                        }
                    }
                }
                let want = tb.coords(&HermMatrix::new(direct).unwrap());
                for r in 0..tb.len() {
                    let got: f64 = rows[k * tb.len() + r].iter().map(|&(v, c)| c * w[v]).sum();
                    assert!((got - want[r]).abs() < 1e-10, "n={n} deg={deg} t={t} {e:?} r={r}: {got} vs {}", want[r]);
                }
            }
        }
    }

    fn square_example() -> HermMatrixPoly {
        // [[x^2, xy], [xy, y^2]] = (x, y)^T (x, y)
        let m = |a: f64, b: f64, c: f64| HermMatrix::from_row_slice(2, &[a, b, b, c]).unwrap();
        HermMatrixPoly::from_terms(
            2,
            2,
            [
                (vec![2, 0], m(1.0, 0.0, 0.0)),
                (vec![1, 1], m(0.0, 1.0, 0.0)),
                (vec![0, 2], m(0.0, 0.0, 1.0)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn monomial_counts() {
        assert_eq!(monomials_of_degree(3, 2).len(), 6);
        assert_eq!(monomials_up_to(3, 2).len(), 10);
        assert_eq!(monomials_of_degree(2, 1), vec![vec![1, 0], vec![0, 1]]);
    }

    #[test]
    fn choi_evaluations() {
        let h = choi_example();
        let v = h.eval(&[1.0, 0.0, 0.0]).unwrap();
        assert!((&v - &HermMatrix::diag(&[1.0, 2.0, 0.0])).norm() < 1e-15);
        let v = h.eval(&[1.0, 1.0, 1.0]).unwrap();
        let want = HermMatrix::from_row_slice(3, &[3.0, -1.0, -1.0, -1.0, 3.0, -1.0, -1.0, -1.0, 3.0]).unwrap();
        assert!((&v - &want).norm() < 1e-15);
        assert!(h.eval(&[0.0; 3]).unwrap().norm() == 0.0);
        assert_eq!(h.degree(), 2);
        let x = [0.3, -1.2, 0.7];
        let neg = [-0.3, 1.2, -0.7];
        assert!((&h.eval(&x).unwrap() - &h.eval(&neg).unwrap()).norm() < 1e-15);
    }

    #[test]
    fn choi_coefficients() {
        let h = choi_example();
        assert_eq!(h.coeff(&[2, 0, 0]), HermMatrix::diag(&[1.0, 2.0, 0.0]));
        let xy = h.coeff(&[1, 1, 0]);
        assert_eq!(xy.matrix()[(0, 1)].re, -1.0);
        assert_eq!(xy.matrix()[(1, 0)].re, -1.0);
    }

    #[test]
    fn square_certifies_with_one_factor() {
        let h = square_example();
        match sos_certify(&h, None, 1e-8).unwrap() {
            SosVerdict::Certificate(c) => {
                assert_eq!(c.factors.len(), 1);
                assert!(c.reassembly_error < 1e-7);
                assert!(c.gram.min_eig() >= -1e-8);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn scalar_square_compress() {
        // t = 1: compression is H times v^2
        let h = HermMatrixPoly::from_terms(1, 1, [(vec![2], HermMatrix::diag(&[3.0]))]).unwrap();
        let s = scalar_compress(&h);
        assert_eq!(s.terms.len(), 1);
        assert_eq!(s.terms[&vec![2, 2]], 3.0);
    }

    #[test]
    fn compression_matches_evaluation() {
        let h = choi_example();
        let s = scalar_compress(&h);
        assert_eq!(s.n_vars, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let x = gaussian_vector(&mut rng, 3);
            let v = gaussian_vector(&mut rng, 3);
            let hv = h.eval(x.as_slice()).unwrap().real_part();
            let direct = (v.transpose() * hv * &v)[(0, 0)];
            let pt: Vec<f64> = x.iter().chain(v.iter()).cloned().collect();
            assert!((s.eval(&pt) - direct).abs() < 1e-10 * (1.0 + direct.abs()));
        }
    }

    #[test]
    fn translation_is_exact() {
        let h = choi_example();
        let u = [0.5, -1.0, 2.0];
        let hu = h.translate(&u).unwrap();
        let x = [0.1, 0.2, 0.3];
        let shifted = [x[0] - u[0], x[1] - u[1], x[2] - u[2]];
        assert!((&hu.eval(&x).unwrap() - &h.eval(&shifted).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn negative_constant_sample() {
        let h = HermMatrixPoly::constant(2, HermMatrix::identity(2).scale(-1.0));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = positivity_sample(&h, 10, 1.0, &mut rng);
        assert!((s.min_observed + 1.0).abs() < 1e-15);
    }

    #[test]
    fn structural_failure_names_monomial() {
        // x^3 cannot come from degree-one monomials
        let h = HermMatrixPoly::from_terms(1, 1, [(vec![3], HermMatrix::diag(&[1.0]))]).unwrap();
        let v = sos_certify(&h, Some(&[vec![1]]), 1e-8).unwrap();
        assert_eq!(v, SosVerdict::StructuralNotSos { monomial: vec![3] });
    }

    #[test]
    fn negative_constant_is_not_sos() {
        let h = HermMatrixPoly::constant(1, HermMatrix::diag(&[-1.0]));
        match sos_certify(&h, None, 1e-8).unwrap() {
            SosVerdict::NotSos(c) => {
                let (eig, margin) = recheck_not_sos(&h, &c).unwrap();
                assert!(eig >= 0.0);
                assert!(margin < 0.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn json_round_trip() {
        let h = choi_example();
        let s = serde_json::to_string(&h).unwrap();
        assert!(s.starts_with(r#"{"n":3,"t":3,"terms":[{"exp":"#));
        let back: HermMatrixPoly = serde_json::from_str(&s).unwrap();
        assert_eq!(back, h);
    }
}
