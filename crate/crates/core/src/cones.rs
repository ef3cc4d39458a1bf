//! Polyhedral convex cones in `R^n`.
//!
//! A cone is given by a finite generator list. The dual cone is computed by
//! the double description method, exactly over the rationals when every
//! input coordinate is a short dyadic number and in floating point
//! otherwise.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg;

/// Largest ambient dimension accepted by [`dual_generators`].
pub const MAX_DUAL_DIM: usize = 8;

/// A finitely generated cone `cc(generators)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyhedralCone {
    n: usize,
    generators: Vec<DVector<f64>>,
}

impl PolyhedralCone {
    pub fn new(n: usize, generators: Vec<DVector<f64>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("cone ambient dimension must be positive".into()));
        }
        for (i, g) in generators.iter().enumerate() {
            if g.len() != n {
                return Err(Error::Shape(format!("generator {i} has length {}, expected {n}", g.len())));
            }
            if g.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!("generator {i} has non-finite entries")));
            }
            if g.iter().all(|&x| x == 0.0) {
                return Err(Error::InvalidInput(format!("generator {i} is the zero vector")));
            }
        }
        Ok(Self { n, generators })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::InvalidInput("cone needs at least one generator".into()))?;
        Self::new(n, rows.iter().map(|r| DVector::from_column_slice(r)).collect())
    }

    /// The nonnegative orthant `R_+^n`, generated by the unit vectors.
    pub fn orthant(n: usize) -> Self {
        let gens = (0..n)
            .map(|i| {
                let mut v = DVector::zeros(n);
                v[i] = 1.0;
                v
            })
            .collect();
        Self { n, generators: gens }
    }

    /// The cone over a square: generators `(+-1, +-1, 1)`.
    pub fn square() -> Self {
        Self::from_rows(&[
            vec![1.0, 1.0, 1.0],
            vec![-1.0, 1.0, 1.0],
            vec![-1.0, -1.0, 1.0],
            vec![1.0, -1.0, 1.0],
        ])
        .expect("valid generators")
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn generators(&self) -> &[DVector<f64>] {
        &self.generators
    }

    pub fn num_generators(&self) -> usize {
        self.generators.len()
    }

    /// Generators as the columns of an `n x m` matrix.
    pub fn generator_matrix(&self) -> DMatrix<f64> {
        if self.generators.is_empty() {
            return DMatrix::zeros(self.n, 0);
        }
        DMatrix::from_columns(&self.generators)
    }

    /// A copy with generators permuted by `order`.
    pub fn reordered(&self, order: &[usize]) -> Self {
        Self {
            n: self.n,
            generators: order.iter().map(|&i| self.generators[i].clone()).collect(),
        }
    }

    /// A minimal generating set: parallel duplicates and generators that lie
    /// in the cone of the remaining ones are dropped. The input order of the
    /// survivors is kept.
    pub fn minimal_generators(&self, tol: f64) -> Self {
        let mut keep: Vec<DVector<f64>> = Vec::new();
        for g in &self.generators {
            let u = g.normalize();
            if !keep.iter().any(|k| (k.normalize() - &u).norm() <= tol) {
                keep.push(g.clone());
            }
        }
        let mut i = 0;
        while i < keep.len() {
            let others: Vec<DVector<f64>> = keep
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, v)| v.clone())
                .collect();
            let redundant = !others.is_empty() && {
                let sub = Self {
                    n: self.n,
                    generators: others,
                };
                membership(&sub, &keep[i], tol)
            };
            if redundant {
                keep.remove(i);
            } else {
                i += 1;
            }
        }
        Self {
            n: self.n,
            generators: keep,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ConeJson {
    n: usize,
    generators: Vec<Vec<f64>>,
}

impl Serialize for PolyhedralCone {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ConeJson {
            n: self.n,
            generators: self.generators.iter().map(|g| g.iter().copied().collect()).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PolyhedralCone {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = ConeJson::deserialize(d)?;
        PolyhedralCone::new(j.n, j.generators.iter().map(|g| DVector::from_column_slice(g)).collect())
            .map_err(D::Error::custom)
    }
}

/// Generators of the dual cone `C^v = { l : <l, c> >= 0 for all c in C }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualDescription {
    pub facets: Vec<DVector<f64>>,
    /// Whether the exact rational path produced the facets.
    pub exact: bool,
}

impl DualDescription {
    /// The dual cone as a [`PolyhedralCone`].
    pub fn as_cone(&self, n: usize) -> Result<PolyhedralCone> {
        PolyhedralCone::new(n, self.facets.clone())
    }
}

/// Arithmetic needed by the double description method.
trait Field: Clone + std::fmt::Debug {
    fn zero() -> Self;
    fn from_f64(x: f64) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    /// Sign with a magnitude reference for tolerance-based types.
    fn sign(&self, scale: f64) -> Ordering;
    fn magnitude(&self) -> f64;
}

const FLOAT_ZERO: f64 = 1e-10;

impl Field for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn sign(&self, scale: f64) -> Ordering {
        if self.abs() <= FLOAT_ZERO * scale.max(1e-300) {
            Ordering::Equal
        } else if *self > 0.0 {
            Ordering::Greater
        } else {
            Ordering::Less
        }
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl Field for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("finite input")
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn sign(&self, _scale: f64) -> Ordering {
        if self.is_zero() {
            Ordering::Equal
        } else if self.is_positive() {
            Ordering::Greater
        } else {
            Ordering::Less
        }
    }
    fn magnitude(&self) -> f64 {
        self.abs().to_f64().unwrap_or(f64::INFINITY)
    }
}

fn dot<F: Field>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).fold(F::zero(), |acc, (x, y)| acc.add(&x.mul(y)))
}

fn vec_scale<F: Field>(v: &[F]) -> f64 {
    v.iter().map(Field::magnitude).fold(0.0, f64::max)
}

/// Row echelon rank.
fn rank_of<F: Field>(rows: &[Vec<F>]) -> usize {
    let mut m: Vec<Vec<F>> = rows.to_vec();
    if m.is_empty() {
        return 0;
    }
    let cols = m[0].len();
    let scale = m.iter().map(|r| vec_scale(r)).fold(0.0, f64::max);
    let mut r = 0;
    for c in 0..cols {
        // partial pivoting by magnitude
        let pivot = (r..m.len())
            .filter(|&i| m[i][c].sign(scale) != Ordering::Equal)
            .max_by(|&a, &b| m[a][c].magnitude().total_cmp(&m[b][c].magnitude()));
        let Some(p) = pivot else { continue };
        m.swap(r, p);
        for i in (r + 1)..m.len() {
            if m[i][c].sign(scale) == Ordering::Equal {
                continue;
            }
            let f = m[i][c].div(&m[r][c]);
            for k in c..cols {
                let t = m[r][k].mul(&f);
                m[i][k] = m[i][k].sub(&t);
            }
        }
        r += 1;
        if r == m.len() {
            break;
        }
    }
    r
}

/// Solves `K x = e_j` for every `j` (columns of the inverse).
fn inverse_columns<F: Field>(k: &[Vec<F>]) -> Option<Vec<Vec<F>>> {
    let n = k.len();
    let scale = k.iter().map(|r| vec_scale(r)).fold(0.0, f64::max);
    let mut aug: Vec<Vec<F>> = k
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            for j in 0..n {
                r.push(if i == j { F::from_f64(1.0) } else { F::zero() });
            }
            r
        })
        .collect();
    for c in 0..n {
        let p = (c..n)
            .filter(|&i| aug[i][c].sign(scale) != Ordering::Equal)
            .max_by(|&a, &b| aug[a][c].magnitude().total_cmp(&aug[b][c].magnitude()))?;
        aug.swap(c, p);
        let piv = aug[c][c].clone();
        for v in aug[c].iter_mut() {
            *v = v.div(&piv);
        }
        for i in 0..n {
            if i != c {
                let f = aug[i][c].clone();
                for k2 in 0..2 * n {
                    let t = aug[c][k2].mul(&f);
                    aug[i][k2] = aug[i][k2].sub(&t);
                }
            }
        }
    }
    Some((0..n).map(|j| (0..n).map(|i| aug[i][n + j].clone()).collect()).collect())
}

/// Extreme rays of the pointed cone `{u : a_i . u >= 0}` whose first `k`
/// rows are linearly independent.
fn double_description<F: Field>(rows: &[Vec<F>], k: usize) -> Option<Vec<Vec<F>>> {
    let init = inverse_columns(&rows[..k])?;
    // each ray carries its tight set over processed rows
    let mut rays: Vec<(Vec<F>, Vec<usize>)> = init
        .into_iter()
        .enumerate()
        .map(|(j, r)| ((r), (0..k).filter(|&i| i != j).collect()))
        .collect();
    for (idx, a) in rows.iter().enumerate().skip(k) {
        let ascale = vec_scale(a);
        let vals: Vec<F> = rays.iter().map(|(r, _)| dot(a, r)).collect();
        let signs: Vec<Ordering> = vals
            .iter()
            .zip(&rays)
            .map(|(v, (r, _))| v.sign(ascale * vec_scale(r)))
            .collect();
        let pos: Vec<usize> = (0..rays.len()).filter(|&i| signs[i] == Ordering::Greater).collect();
        let neg: Vec<usize> = (0..rays.len()).filter(|&i| signs[i] == Ordering::Less).collect();
        let mut next: Vec<(Vec<F>, Vec<usize>)> = Vec::new();
        for (i, (r, z)) in rays.iter().enumerate() {
            match signs[i] {
                Ordering::Greater => next.push((r.clone(), z.clone())),
                Ordering::Equal => {
                    let mut z = z.clone();
                    z.push(idx);
                    next.push((r.clone(), z));
                }
                Ordering::Less => {}
            }
        }
        for &p in &pos {
            for &q in &neg {
                let common: Vec<usize> = rays[p].1.iter().copied().filter(|i| rays[q].1.contains(i)).collect();
                if common.len() + 2 < k {
                    continue;
                }
                let tight: Vec<Vec<F>> = common.iter().map(|&i| rows[i].clone()).collect();
                if k >= 2 && rank_of(&tight) != k - 2 {
                    continue;
                }
                let (rp, rq) = (&rays[p].0, &rays[q].0);
                let (vp, vq) = (&vals[p], &vals[q]);
                let mut new: Vec<F> = rq.iter().zip(rp).map(|(x, y)| x.mul(vp).sub(&y.mul(vq))).collect();
                let s = vec_scale(&new);
                if s == 0.0 {
                    continue;
                }
                // keep floating rays at unit scale
                if std::any::type_name::<F>() == "f64" {
                    let inv = F::from_f64(1.0 / s);
                    new = new.iter().map(|x| x.mul(&inv)).collect();
                }
                let mut z = common;
                z.push(idx);
                next.push((new, z));
            }
        }
        rays = next;
    }
    Some(rays.into_iter().map(|(r, _)| r).collect())
}

/// Nullspace basis of the rows (vectors orthogonal to every row).
fn orthogonal_complement<F: Field>(rows: &[Vec<F>], n: usize) -> Vec<Vec<F>> {
    let mut m: Vec<Vec<F>> = rows.to_vec();
    let scale = m.iter().map(|r| vec_scale(r)).fold(0.0, f64::max);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..n {
        let p = (r..m.len())
            .filter(|&i| m[i][c].sign(scale) != Ordering::Equal)
            .max_by(|&a, &b| m[a][c].magnitude().total_cmp(&m[b][c].magnitude()));
        let Some(p) = p else { continue };
        m.swap(r, p);
        let piv = m[r][c].clone();
        for v in m[r].iter_mut() {
            *v = v.div(&piv);
        }
        for i in 0..m.len() {
            if i != r {
                let f = m[i][c].clone();
                for k in 0..n {
                    let t = m[r][k].mul(&f);
                    m[i][k] = m[i][k].sub(&t);
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == m.len() {
            break;
        }
    }
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![F::zero(); n];
            v[f] = F::from_f64(1.0);
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = F::zero().sub(&m[row][f]);
            }
            v
        })
        .collect()
}

/// Facet normals of `C` (generators of the dual cone) over the field `F`.
fn dual_over<F: Field>(cone: &PolyhedralCone) -> Option<Vec<Vec<F>>> {
    let n = cone.n;
    let gens: Vec<Vec<F>> = cone
        .generators
        .iter()
        .map(|g| g.iter().map(|&x| F::from_f64(x)).collect())
        .collect();
    // pick a maximal independent subset of generators as basis B of span(C)
    let mut basis: Vec<usize> = Vec::new();
    for i in 0..gens.len() {
        let mut trial: Vec<Vec<F>> = basis.iter().map(|&b| gens[b].clone()).collect();
        trial.push(gens[i].clone());
        if rank_of(&trial) == trial.len() {
            basis.push(i);
        }
        if basis.len() == n {
            break;
        }
    }
    let k = basis.len();
    let mut out: Vec<Vec<F>> = Vec::new();
    if k > 0 {
        // a_i = B' c_i, with the basis rows first
        let order: Vec<usize> = basis
            .iter()
            .copied()
            .chain((0..gens.len()).filter(|i| !basis.contains(i)))
            .collect();
        let rows: Vec<Vec<F>> = order
            .iter()
            .map(|&i| basis.iter().map(|&b| dot(&gens[b], &gens[i])).collect())
            .collect();
        for u in double_description(&rows, k)? {
            // l = B u
            let mut l = vec![F::zero(); n];
            for (j, &b) in basis.iter().enumerate() {
                for (t, x) in gens[b].iter().enumerate() {
                    l[t] = l[t].add(&x.mul(&u[j]));
                }
            }
            out.push(l);
        }
    }
    // lineality of the dual: the orthogonal complement of span(C), both signs
    for v in orthogonal_complement(&gens, n) {
        let neg: Vec<F> = v.iter().map(|x| F::zero().sub(x)).collect();
        out.push(v);
        out.push(neg);
    }
    Some(out)
}

/// Whether every coordinate converts to a short exact rational.
fn is_short_dyadic(cone: &PolyhedralCone) -> bool {
    const SHIFT: f64 = 1048576.0; // 2^20
    cone.generators.iter().flatten().all(|&x| {
        let s = x * SHIFT;
        x.abs() <= 2147483648.0 && s == s.trunc()
    })
}

fn primitive_integer(v: &[BigRational]) -> Vec<f64> {
    let mut lcm = BigInt::one();
    for x in v {
        let d = x.denom().clone();
        let g = num_integer_gcd(&lcm, &d);
        lcm = &lcm / &g * &d;
    }
    let ints: Vec<BigInt> = v.iter().map(|x| (x * BigRational::from_integer(lcm.clone())).to_integer()).collect();
    let mut g = BigInt::zero();
    for x in &ints {
        g = num_integer_gcd(&g, &x.abs());
    }
    if g.is_zero() {
        g = BigInt::one();
    }
    ints.iter().map(|x| (x / &g).to_f64().unwrap_or(f64::NAN)).collect()
}

fn num_integer_gcd(a: &BigInt, b: &BigInt) -> BigInt {
    let (mut a, mut b) = (a.abs(), b.abs());
    while !b.is_zero() {
        let r = &a % &b;
        a = b;
        b = r;
    }
    a
}

fn sort_facets(facets: &mut [DVector<f64>]) {
    facets.sort_by(|a, b| {
        for (x, y) in a.iter().zip(b.iter()) {
            match y.total_cmp(x) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        Ordering::Equal
    });
}

/// Generators of the dual cone by the double description method.
///
/// Fails with a capability error for `n > 8`.
pub fn dual_generators(cone: &PolyhedralCone) -> Result<DualDescription> {
    if cone.n > MAX_DUAL_DIM {
        return Err(Error::Capability(format!(
            "dual description limited to n <= {MAX_DUAL_DIM}, got n = {}",
            cone.n
        )));
    }
    let (mut facets, exact) = if is_short_dyadic(cone) {
        let rays = dual_over::<BigRational>(cone)
            .ok_or_else(|| Error::Construction("singular basis in exact double description".into()))?;
        (
            rays.iter().map(|r| DVector::from_vec(primitive_integer(r))).collect::<Vec<_>>(),
            true,
        )
    } else {
        let rays = dual_over::<f64>(cone)
            .ok_or_else(|| Error::Construction("singular basis in double description".into()))?;
        (
            rays.iter()
                .map(|r| {
                    let s = r.iter().fold(0.0f64, |a, x| a.max(x.abs()));
                    DVector::from_iterator(r.len(), r.iter().map(|x| x / s))
                })
                .collect(),
            false,
        )
    };
    sort_facets(&mut facets);
    facets.dedup_by(|a, b| (&*a - &*b).norm() <= 1e-12);
    for (j, l) in facets.iter().enumerate() {
        for (i, c) in cone.generators.iter().enumerate() {
            if l.dot(c) < -1e-9 * l.norm() * c.norm() {
                return Err(Error::Construction(format!(
                    "dual generator {j} is negative on generator {i}"
                )));
            }
        }
    }
    Ok(DualDescription { facets, exact })
}

/// Nonnegative least squares `min ||A x - b||, x >= 0` (Lawson-Hanson).
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let m = a.ncols();
    let mut x = DVector::zeros(m);
    let mut passive = vec![false; m];
    let scale = a.norm().max(1.0) * b.norm().max(1.0);
    let wtol = 1e-13 * scale;
    for _ in 0..(3 * m + 3) {
        let w = a.transpose() * (b - a * &x);
        let cand = (0..m)
            .filter(|&j| !passive[j] && w[j] > wtol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = cand else { break };
        passive[j] = true;
        loop {
            let idx: Vec<usize> = (0..m).filter(|&i| passive[i]).collect();
            let ap = a.select_columns(&idx);
            let sp = linalg::pinv(&ap, 1e-13) * b;
            if sp.iter().all(|&v| v > 0.0) {
                x.fill(0.0);
                for (k, &i) in idx.iter().enumerate() {
                    x[i] = sp[k];
                }
                break;
            }
            let mut alpha = f64::INFINITY;
            for (k, &i) in idx.iter().enumerate() {
                if sp[k] <= 0.0 {
                    alpha = alpha.min(x[i] / (x[i] - sp[k]));
                }
            }
            for (k, &i) in idx.iter().enumerate() {
                x[i] += alpha * (sp[k] - x[i]);
                if x[i] <= 1e-15 {
                    x[i] = 0.0;
                    passive[i] = false;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
    x
}

/// Detailed outcome of a cone membership test.
#[derive(Clone, Debug, PartialEq)]
pub struct ConeMembership {
    pub member: bool,
    /// Conic coefficients of the best approximation.
    pub coefficients: DVector<f64>,
    pub residual: f64,
    /// A unit functional nonnegative on every generator and negative on `x`
    /// (present for non-members).
    pub witness: Option<DVector<f64>>,
}

pub fn membership_detail(cone: &PolyhedralCone, x: &DVector<f64>, tol: f64) -> Result<ConeMembership> {
    if x.len() != cone.n {
        return Err(Error::Shape(format!("point has length {}, cone lives in R^{}", x.len(), cone.n)));
    }
    let a = cone.generator_matrix();
    let lambda = nnls(&a, x);
    let r = x - &a * &lambda;
    let residual = r.norm();
    let member = residual <= tol * (1.0 + x.norm());
    let witness = (!member).then(|| -r / residual);
    Ok(ConeMembership {
        member,
        coefficients: lambda,
        residual,
        witness,
    })
}

/// `x in C` up to `tol * (1 + ||x||)` in the conic least-squares residual.
pub fn membership(cone: &PolyhedralCone, x: &DVector<f64>, tol: f64) -> bool {
    membership_detail(cone, x, tol).map(|m| m.member).unwrap_or(false)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Properness {
    pub pointed: bool,
    pub full_dim: bool,
}

impl Properness {
    pub fn is_proper(&self) -> bool {
        self.pointed && self.full_dim
    }
}

/// Pointedness (no convex combination of generators vanishes) and full dimension.
pub fn is_proper(cone: &PolyhedralCone) -> Properness {
    let g = cone.generator_matrix();
    let full_dim = linalg::rank(&g, linalg::RANK_TOL) == cone.n;
    let m = cone.num_generators();
    let pointed = if m == 0 {
        true
    } else {
        let mut aug = DMatrix::zeros(cone.n + 1, m);
        // normalize generators so the simplex constraint is well scaled
        for (j, c) in cone.generators.iter().enumerate() {
            let u = c / c.norm();
            aug.view_mut((0, j), (cone.n, 1)).copy_from(&u);
            aug[(cone.n, j)] = 1.0;
        }
        let mut rhs = DVector::zeros(cone.n + 1);
        rhs[cone.n] = 1.0;
        let lambda = nnls(&aug, &rhs);
        (&rhs - &aug * lambda).norm() > 1e-9
    };
    Properness { pointed, full_dim }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn orthant_is_self_dual() {
        let d = dual_generators(&PolyhedralCone::orthant(2)).unwrap();
        assert!(d.exact);
        assert_eq!(d.facets, vec![v(&[1.0, 0.0]), v(&[0.0, 1.0])]);
    }

    #[test]
    fn redundant_generator_disappears_from_dual() {
        let c = PolyhedralCone::from_rows(&[vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let d = dual_generators(&c).unwrap();
        assert_eq!(d.facets, vec![v(&[1.0, 0.0]), v(&[0.0, 1.0])]);
    }

    #[test]
    fn rotated_quadrant() {
        let c = PolyhedralCone::from_rows(&[vec![1.0, 1.0], vec![1.0, -1.0]]).unwrap();
        let d = dual_generators(&c).unwrap();
        assert_eq!(d.facets, vec![v(&[1.0, 1.0]), v(&[1.0, -1.0])]);
    }

    #[test]
    fn float_path_agrees_with_exact() {
        let third = 1.0 / 3.0;
        let c = PolyhedralCone::from_rows(&[vec![1.0, third], vec![third, 1.0]]).unwrap();
        let d = dual_generators(&c).unwrap();
        assert!(!d.exact);
        assert_eq!(d.facets.len(), 2);
        for l in &d.facets {
            let vals: Vec<f64> = c.generators().iter().map(|g| l.dot(g)).collect();
            assert!(vals.iter().all(|&x| x > -1e-12));
            assert!(vals.iter().any(|&x| x.abs() < 1e-12));
        }
    }

    #[test]
    fn lower_dimensional_cone_has_dual_lineality() {
        let c = PolyhedralCone::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        let d = dual_generators(&c).unwrap();
        assert!(d.facets.contains(&v(&[0.0, 0.0, 1.0])));
        assert!(d.facets.contains(&v(&[0.0, 0.0, -1.0])));
        assert_eq!(d.facets.len(), 4);
    }

    #[test]
    fn too_large_dimension() {
        let c = PolyhedralCone::orthant(9);
        assert!(matches!(dual_generators(&c), Err(Error::Capability(_))));
    }

    #[test]
    fn membership_examples() {
        let c = PolyhedralCone::orthant(2);
        assert!(membership(&c, &v(&[0.0, 0.0]), 1e-9));
        assert!(membership(&c, &v(&[1.0, 1.0]), 1e-9));
        let m = membership_detail(&c, &v(&[1.0, -1.0]), 1e-9).unwrap();
        assert!(!m.member);
        let w = m.witness.unwrap();
        assert!((w - v(&[0.0, 1.0])).norm() < 1e-12);
    }

    #[test]
    fn properness_examples() {
        assert_eq!(
            is_proper(&PolyhedralCone::orthant(3)),
            Properness { pointed: true, full_dim: true }
        );
        let line = PolyhedralCone::from_rows(&[vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap();
        assert_eq!(is_proper(&line), Properness { pointed: false, full_dim: false });
        let wedge = PolyhedralCone::from_rows(&[vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(is_proper(&wedge), Properness { pointed: true, full_dim: true });
    }

    #[test]
    fn zero_generator_rejected() {
        assert!(PolyhedralCone::from_rows(&[vec![0.0, 0.0]]).is_err());
    }

    #[test]
    fn minimal_generators_drop_redundancy() {
        let c = PolyhedralCone::from_rows(&[vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![2.0, 0.0]]).unwrap();
        let m = c.minimal_generators(1e-9);
        assert_eq!(m.generators(), &[v(&[1.0, 0.0]), v(&[0.0, 1.0])]);
    }

    #[test]
    fn json_round_trip() {
        let c = PolyhedralCone::square();
        let s = serde_json::to_string(&c).unwrap();
        assert!(s.starts_with(r#"{"n":3,"generators":[[1.0,1.0,1.0]"#));
        let back: PolyhedralCone = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
    }
}
