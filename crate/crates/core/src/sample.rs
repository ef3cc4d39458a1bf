//! Seeded random instances: PSD matrices, cone members and dual-witnessed
//! non-members.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::cones::PolyhedralCone;
use crate::cpmaps::CpMap;
use crate::herm::{HermMatrix, C64};
use crate::opsys::MatrixElement;

pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// Gaussian `rows x cols` matrix, complex unless `real`.
pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, real: bool) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = if real { 0.0 } else { rng.sample(StandardNormal) };
        C64::new(re, im)
    })
}

/// Unit vector uniform on the complex sphere in `C^n`.
pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<C64> {
    let v = gaussian_matrix(rng, n, 1, false).column(0).into_owned();
    let norm = v.norm();
    v / C64::new(norm, 0.0)
}

/// `G G*` with `G` of size `s x rank`.
pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, s: usize, rank: usize) -> HermMatrix {
    let g = gaussian_matrix(rng, s, rank, false);
    HermMatrix::new(&g * g.adjoint()).expect("Gram matrices are Hermitian")
}

pub fn random_herm<R: Rng + ?Sized>(rng: &mut R, s: usize) -> HermMatrix {
    let g = gaussian_matrix(rng, s, s, false);
    HermMatrix::new((&g + g.adjoint()) * C64::new(0.5, 0.0)).expect("symmetrized")
}

/// `sum_j c_j (x) Q_j` with random PSD `Q_j`, some of them singular.
pub fn random_member<R: Rng + ?Sized>(rng: &mut R, cone: &PolyhedralCone, s: usize) -> MatrixElement {
    let mut a = MatrixElement::zeros(cone.dim(), s);
    for c in cone.generators() {
        let rank = rng.random_range(0..=s);
        if rank > 0 {
            let q = random_psd(rng, s, rank);
            a = a.add(&MatrixElement::tensor(c, &q)).expect("same shape");
        }
    }
    a
}

/// An element separated from `C^min` by a facet `l` of the dual cone.
///
/// Starts from a random member `a` and subtracts `kappa (l/|l|^2) (x) vv*`
/// with `kappa = v* l[a] v + 1/2`, so that `v* l[a'] v = -1/2`.
/// Returns the element and the facet.
pub fn random_non_member<R: Rng + ?Sized>(
    rng: &mut R,
    cone: &PolyhedralCone,
    facets: &[DVector<f64>],
    s: usize,
) -> (MatrixElement, DVector<f64>) {
    let a = random_member(rng, cone, s);
    let l = facets[rng.random_range(0..facets.len())].clone();
    let v = unit_vector(rng, s);
    let mut la = HermMatrix::zeros(s);
    for (i, ai) in a.coeffs().iter().enumerate() {
        la += &ai.scale(l[i]);
    }
    let vlav = (v.adjoint() * la.matrix() * &v)[(0, 0)].re;
    let kappa = vlav + 0.5;
    let dir = &l / l.norm_squared();
    let vv = HermMatrix::outer(&v);
    let shift = MatrixElement::tensor(&(dir * kappa), &vv);
    (a.sub(&shift).expect("same shape"), l)
}

/// A random map positive on every generator, with values of size `t`.
pub fn random_positive_map<R: Rng + ?Sized>(rng: &mut R, cone: &PolyhedralCone, t: usize) -> CpMap {
    // phi = sum_f l_f (x) P_f over the dual facets
    let facets = crate::cones::dual_generators(cone).expect("small cone").facets;
    let ps: Vec<HermMatrix> = facets.iter().map(|_| random_psd(rng, t, t)).collect();
    let values = cone
        .generators()
        .iter()
        .map(|c| {
            let mut h = HermMatrix::zeros(t);
            for (f, p) in facets.iter().zip(&ps) {
                h += &p.scale(f.dot(c));
            }
            h
        })
        .collect();
    CpMap::on_generators(cone, values).expect("linear by construction")
}

/// A random CP map `Her_d -> Her_t` with `k` Kraus operators.
pub fn random_cp_map<R: Rng + ?Sized>(rng: &mut R, d: usize, t: usize, k: usize) -> CpMap {
    let ops: Vec<DMatrix<C64>> = (0..k).map(|_| gaussian_matrix(rng, d, t, false)).collect();
    CpMap::on_algebra(d, t, |x| {
        let mut out = DMatrix::zeros(t, t);
        for v in &ops {
            out += v.adjoint() * x.matrix() * v;
        }
        HermMatrix::new(out).expect("congruence sums are Hermitian")
    })
    .expect("consistent by construction")
}
