//! Operator systems as levelwise membership oracles.
//!
//! An element of level `s` over `X = R^n` is a tuple `(A_1, ..., A_n)` of
//! Hermitian `s x s` matrices standing for `sum_i e_i (x) A_i`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cones::{self, PolyhedralCone};
use crate::error::{Error, Result};
use crate::herm::{herm_coords, herm_from_coords, kron, HermBasis, HermMatrix, C64};
use crate::linalg;
use crate::sdp::{Goal, HermLmi, SdpStatus};

/// Largest matrix level accepted by the membership oracles.
pub const MAX_LEVEL: usize = 6;

/// An element of `R^n (x) Her_s`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ElementJson", into = "ElementJson")]
pub struct MatrixElement {
    coeffs: Vec<HermMatrix>,
    s: usize,
}

#[derive(Serialize, Deserialize)]
struct ElementJson {
    n: usize,
    s: usize,
    coeffs: Vec<HermMatrix>,
}

impl TryFrom<ElementJson> for MatrixElement {
    type Error = Error;
    fn try_from(j: ElementJson) -> Result<Self> {
        if j.coeffs.len() != j.n {
            return Err(Error::Shape(format!("expected {} coefficients, got {}", j.n, j.coeffs.len())));
        }
        let e = MatrixElement::new(j.coeffs)?;
        if e.s != j.s {
            return Err(Error::Shape(format!("coefficients have size {}, header says {}", e.s, j.s)));
        }
        Ok(e)
    }
}

impl From<MatrixElement> for ElementJson {
    fn from(e: MatrixElement) -> Self {
        ElementJson {
            n: e.coeffs.len(),
            s: e.s,
            coeffs: e.coeffs,
        }
    }
}

impl MatrixElement {
    pub fn new(coeffs: Vec<HermMatrix>) -> Result<Self> {
        let s = coeffs
            .first()
            .map(HermMatrix::dim)
            .ok_or_else(|| Error::InvalidInput("element needs at least one coefficient".into()))?;
        if coeffs.iter().any(|c| c.dim() != s) {
            return Err(Error::Shape("coefficient matrices differ in size".into()));
        }
        Ok(Self { coeffs, s })
    }

    pub fn zeros(n: usize, s: usize) -> Self {
        Self {
            coeffs: vec![HermMatrix::zeros(s); n],
            s,
        }
    }

    /// The level-1 element of a vector.
    pub fn from_vector(x: &DVector<f64>) -> Self {
        Self {
            coeffs: x.iter().map(|&v| HermMatrix::diag(&[v])).collect(),
            s: 1,
        }
    }

    /// `x (x) Q`.
    pub fn tensor(x: &DVector<f64>, q: &HermMatrix) -> Self {
        Self {
            coeffs: x.iter().map(|&v| q.scale(v)).collect(),
            s: q.dim(),
        }
    }

    pub fn n(&self) -> usize {
        self.coeffs.len()
    }

    pub fn level(&self) -> usize {
        self.s
    }

    pub fn coeffs(&self) -> &[HermMatrix] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> &HermMatrix {
        &self.coeffs[i]
    }

    pub fn is_real(&self) -> bool {
        self.coeffs.iter().all(HermMatrix::is_real)
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm().powi(2)).sum::<f64>().sqrt()
    }

    pub fn scale(&self, x: f64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| c.scale(x)).collect(),
            s: self.s,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
            s: self.s,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.n() != other.n() || self.s != other.s {
            return Err(Error::Shape(format!(
                "elements of shape ({}, {}) and ({}, {})",
                self.n(),
                self.s,
                other.n(),
                other.s
            )));
        }
        Ok(())
    }

    /// The level-1 vector, if `s = 1`.
    pub fn as_vector(&self) -> Option<DVector<f64>> {
        (self.s == 1).then(|| DVector::from_iterator(self.n(), self.coeffs.iter().map(|c| c.matrix()[(0, 0)].re)))
    }

    /// `(V* A_i V)_i` for an `s x t` matrix `V`.
    pub fn compress(&self, v: &DMatrix<C64>) -> Result<Self> {
        if v.nrows() != self.s {
            return Err(Error::Shape(format!("compression has {} rows, level is {}", v.nrows(), self.s)));
        }
        let coeffs = self
            .coeffs
            .iter()
            .map(|a| crate::herm::conjugate(v, a))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { coeffs, s: v.ncols() })
    }

    /// `diag(a, b)` at level `s + t`.
    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        if self.n() != other.n() {
            return Err(Error::Shape("direct sum of elements over different spaces".into()));
        }
        Ok(Self {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.direct_sum(b)).collect(),
            s: self.s + other.s,
        })
    }

    /// Concatenated canonical coordinates, `n s^2` reals.
    pub fn coords(&self) -> DVector<f64> {
        let k = self.s * self.s;
        let mut v = DVector::zeros(self.n() * k);
        for (i, c) in self.coeffs.iter().enumerate() {
            v.rows_mut(i * k, k).copy_from(&herm_coords(c));
        }
        v
    }
}

/// Codomain of a [`LinearMap`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Codomain {
    Vector(usize),
    /// `Her_d` in canonical coordinates.
    Herm(usize),
}

impl Codomain {
    pub fn real_dim(&self) -> usize {
        match *self {
            Codomain::Vector(k) => k,
            Codomain::Herm(d) => d * d,
        }
    }
}

/// A real linear map `R^domain -> codomain` in canonical coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearMap {
    pub domain: usize,
    pub codomain: Codomain,
    /// `codomain.real_dim() x domain`.
    #[serde(with = "crate::linalg::rows")]
    pub matrix: DMatrix<f64>,
}

/// Result of [`apply_levelwise`].
#[derive(Clone, Debug, PartialEq)]
pub enum Levelwise {
    Herm(HermMatrix),
    Element(MatrixElement),
}

impl Levelwise {
    pub fn into_herm(self) -> Option<HermMatrix> {
        match self {
            Levelwise::Herm(h) => Some(h),
            Levelwise::Element(_) => None,
        }
    }
}

impl LinearMap {
    pub fn new(domain: usize, codomain: Codomain, matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.shape() != (codomain.real_dim(), domain) {
            return Err(Error::Shape(format!(
                "map matrix is {:?}, expected {:?}",
                matrix.shape(),
                (codomain.real_dim(), domain)
            )));
        }
        Ok(Self {
            domain,
            codomain,
            matrix,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            domain: n,
            codomain: Codomain::Vector(n),
            matrix: DMatrix::identity(n, n),
        }
    }

    /// The map `e_i -> values[i]` into `Her_d`.
    pub fn from_herm_values(values: &[HermMatrix]) -> Result<Self> {
        let d = values
            .first()
            .map(HermMatrix::dim)
            .ok_or_else(|| Error::InvalidInput("map needs at least one value".into()))?;
        if values.iter().any(|v| v.dim() != d) {
            return Err(Error::Shape("map values differ in size".into()));
        }
        let cols: Vec<DVector<f64>> = values.iter().map(herm_coords).collect();
        Ok(Self {
            domain: values.len(),
            codomain: Codomain::Herm(d),
            matrix: DMatrix::from_columns(&cols),
        })
    }

    /// Image of the `i`-th unit vector as a Hermitian matrix (for `Herm` codomains).
    pub fn herm_value(&self, i: usize) -> Option<HermMatrix> {
        match self.codomain {
            Codomain::Herm(d) => herm_from_coords(d, self.matrix.column(i).as_slice()).ok(),
            Codomain::Vector(_) => None,
        }
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.matrix * x
    }

    /// `psi(x)` as a Hermitian matrix for `Herm` codomains.
    pub fn apply_herm(&self, x: &DVector<f64>) -> Option<HermMatrix> {
        match self.codomain {
            Codomain::Herm(d) => herm_from_coords(d, (&self.matrix * x).as_slice()).ok(),
            Codomain::Vector(_) => None,
        }
    }

    pub fn rank(&self) -> usize {
        linalg::rank(&self.matrix, linalg::RANK_TOL)
    }

    /// `self o other`.
    pub fn compose(&self, other: &LinearMap) -> Result<LinearMap> {
        if other.codomain.real_dim() != self.domain {
            return Err(Error::Shape("composition of incompatible maps".into()));
        }
        Ok(LinearMap {
            domain: other.domain,
            codomain: self.codomain,
            matrix: &self.matrix * &other.matrix,
        })
    }
}

/// `phi[a] = (phi (x) id)(a)`.
///
/// Maps into `Her_t` give `sum_i phi(e_i) (x) A_i` in `Her_{ts}`; maps into
/// `R^k` give the image element.
pub fn apply_levelwise(phi: &LinearMap, a: &MatrixElement) -> Result<Levelwise> {
    if phi.domain != a.n() {
        return Err(Error::Shape(format!("map domain {} vs element over R^{}", phi.domain, a.n())));
    }
    match phi.codomain {
        Codomain::Herm(_) => {
            let t = match phi.codomain {
                Codomain::Herm(t) => t,
                Codomain::Vector(_) => unreachable!(),
            };
            let mut out = HermMatrix::zeros(t * a.level());
            for (i, ai) in a.coeffs().iter().enumerate() {
                if let Some(v) = phi.herm_value(i) {
                    if v.norm() > 0.0 {
                        out += &kron(&v, ai);
                    }
                }
            }
            Ok(Levelwise::Herm(out))
        }
        Codomain::Vector(_) => Ok(Levelwise::Element(push_forward(phi, a)?)),
    }
}

/// `(phi (x) id)(a)` as an element over the coordinate space of the codomain.
pub fn push_forward(phi: &LinearMap, a: &MatrixElement) -> Result<MatrixElement> {
    if phi.domain != a.n() {
        return Err(Error::Shape(format!("map domain {} vs element over R^{}", phi.domain, a.n())));
    }
    let k = phi.codomain.real_dim();
    let mut coeffs = vec![HermMatrix::zeros(a.level()); k];
    for (j, c) in coeffs.iter_mut().enumerate() {
        for (i, ai) in a.coeffs().iter().enumerate() {
            let x = phi.matrix[(j, i)];
            if x != 0.0 {
                *c += &ai.scale(x);
            }
        }
    }
    Ok(MatrixElement { coeffs, s: a.level() })
}

/// An operator system with a levelwise membership oracle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum OperatorSystem {
    /// `C^min`: level `s` members are `sum_j c_j (x) Q_j` with `Q_j` PSD.
    Minimal { cone: PolyhedralCone },
    /// `{a : sum_i A_i (x) a_i PSD}`.
    FreeSpectrahedron { a: Vec<HermMatrix> },
    /// `psi^{-1}[T]`.
    InverseImage { psi: LinearMap, target: Box<OperatorSystem> },
    /// `pi[gamma^{-1}[T]]`.
    Lifted {
        pi: LinearMap,
        gamma: LinearMap,
        target: Box<OperatorSystem>,
    },
}

impl OperatorSystem {
    /// `C^min`, rejecting improper cones.
    pub fn minimal(cone: PolyhedralCone) -> Result<Self> {
        let p = cones::is_proper(&cone);
        if !p.is_proper() {
            return Err(Error::Properness(format!(
                "cone is not proper (pointed: {}, full-dimensional: {})",
                p.pointed, p.full_dim
            )));
        }
        Ok(OperatorSystem::Minimal { cone })
    }

    /// A free spectrahedron, rejecting pencils with no positive definite
    /// combination.
    pub fn free_spectrahedron(a: Vec<HermMatrix>) -> Result<Self> {
        let d = a
            .first()
            .map(HermMatrix::dim)
            .ok_or_else(|| Error::InvalidInput("free spectrahedron needs at least one matrix".into()))?;
        if a.iter().any(|m| m.dim() != d) {
            return Err(Error::Shape("pencil matrices differ in size".into()));
        }
        let margin = interior_margin(&a)?;
        if margin <= 1e-9 {
            return Err(Error::Properness(format!(
                "no positive definite combination of the pencil (margin {margin:.3e})"
            )));
        }
        Ok(OperatorSystem::FreeSpectrahedron { a })
    }

    /// `P^d` as the free spectrahedron of the canonical basis of `Her_d`.
    pub fn psd(d: usize) -> Self {
        OperatorSystem::FreeSpectrahedron {
            a: HermBasis::canonical(d).elements,
        }
    }

    pub fn inverse_image(psi: LinearMap, target: OperatorSystem) -> Result<Self> {
        if psi.codomain.real_dim() != target.ambient_dim() {
            return Err(Error::Shape(format!(
                "map codomain has dimension {}, target lives in R^{}",
                psi.codomain.real_dim(),
                target.ambient_dim()
            )));
        }
        Ok(OperatorSystem::InverseImage {
            psi,
            target: Box::new(target),
        })
    }

    pub fn lifted(pi: LinearMap, gamma: LinearMap, target: OperatorSystem) -> Result<Self> {
        if pi.domain != gamma.domain {
            return Err(Error::Shape("pi and gamma must share their domain".into()));
        }
        if gamma.codomain.real_dim() != target.ambient_dim() {
            return Err(Error::Shape("gamma codomain does not match the target".into()));
        }
        if gamma.rank() != gamma.domain {
            return Err(Error::Construction("gamma is not injective".into()));
        }
        Ok(OperatorSystem::Lifted {
            pi,
            gamma,
            target: Box::new(target),
        })
    }

    /// Dimension of the underlying real space `X`.
    pub fn ambient_dim(&self) -> usize {
        match self {
            OperatorSystem::Minimal { cone } => cone.dim(),
            OperatorSystem::FreeSpectrahedron { a } => a.len(),
            OperatorSystem::InverseImage { psi, .. } => psi.domain,
            OperatorSystem::Lifted { pi, .. } => pi.codomain.real_dim(),
        }
    }

    pub fn variant_name(&self) -> &'static str {
        match self {
            OperatorSystem::Minimal { .. } => "minimal",
            OperatorSystem::FreeSpectrahedron { .. } => "free_spectrahedron",
            OperatorSystem::InverseImage { .. } => "inverse_image",
            OperatorSystem::Lifted { .. } => "lifted",
        }
    }
}

/// Largest `lambda` with `sum x_i A_i - lambda I` PSD over `sum x_i tr A_i = 1`.
///
/// Positive exactly when the span of the pencil contains a positive definite
/// matrix.
pub fn interior_margin(a: &[HermMatrix]) -> Result<f64> {
    if a.is_empty() {
        return Ok(f64::NEG_INFINITY);
    }
    let d = a.first().map(HermMatrix::dim).unwrap_or(0);
    let mut p = HermLmi::new(a.len(), Goal::MinEig { cap: Some(1.0) });
    p.add_eq(a.iter().enumerate().map(|(i, m)| (i, m.trace())).collect(), 1.0);
    p.add_block(HermMatrix::zeros(d), a.iter().cloned().enumerate().collect(), true);
    let s = p.solve(1e-10)?;
    Ok(match s.status {
        SdpStatus::Infeasible => f64::NEG_INFINITY,
        _ => s.value,
    })
}

/// Three-valued membership verdict.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MembershipStatus {
    Member,
    NotMember,
    Inconclusive,
}

/// Evidence accompanying a membership verdict.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// PSD `Q_j` with `sum_j c_j (x) Q_j = a`.
    Decomposition { q: Vec<HermMatrix> },
    /// A linear map `phi` with `phi(c_j)` PSD for every generator and
    /// `phi[a]` not PSD, given by its values `phi(e_i)`.
    Separator { phi: Vec<HermMatrix> },
    /// A fiber point `z` with `pi[z] = a` and `gamma[z]` in the target.
    Fiber { z: Vec<HermMatrix> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MembershipResult {
    pub status: MembershipStatus,
    /// Signed distance-like margin: nonnegative for members, negative for
    /// certified non-members (after normalizing `a` to unit norm).
    pub margin: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

impl MembershipResult {
    pub fn is_member(&self) -> bool {
        self.status == MembershipStatus::Member
    }
}

fn check_level(a: &MatrixElement) -> Result<()> {
    if a.level() > MAX_LEVEL {
        return Err(Error::Capability(format!("level {} exceeds the cap {MAX_LEVEL}", a.level())));
    }
    Ok(())
}

/// Membership in `C^min`.
///
/// Level 1 reduces to conic membership. Higher levels maximize `lambda`
/// over decompositions `a = sum_j c_j (x) Q_j` with `Q_j - lambda I` PSD; the
/// dual of that program yields a separating map for non-members.
pub fn min_membership(cone: &PolyhedralCone, a: &MatrixElement, tol: f64) -> Result<MembershipResult> {
    if a.n() != cone.dim() {
        return Err(Error::Shape(format!("element over R^{}, cone in R^{}", a.n(), cone.dim())));
    }
    check_level(a)?;
    let norm = a.norm();
    if a.level() == 1 {
        let x = a.as_vector().expect("level one");
        let m = cones::membership_detail(cone, &x, tol)?;
        return Ok(if m.member {
            MembershipResult {
                status: MembershipStatus::Member,
                margin: 0.0,
                witness: Some(Witness::Decomposition {
                    q: m.coefficients.iter().map(|&l| HermMatrix::diag(&[l])).collect(),
                }),
            }
        } else {
            let l = m.witness.expect("non-members carry a witness");
            MembershipResult {
                status: MembershipStatus::NotMember,
                margin: l.dot(&x) / norm.max(f64::MIN_POSITIVE),
                witness: Some(Witness::Separator {
                    phi: l.iter().map(|&v| HermMatrix::diag(&[v])).collect(),
                }),
            }
        });
    }
    if norm == 0.0 {
        return Ok(MembershipResult {
            status: MembershipStatus::Member,
            margin: 0.0,
            witness: Some(Witness::Decomposition {
                q: vec![HermMatrix::zeros(a.level()); cone.num_generators()],
            }),
        });
    }
    let an = a.scale(1.0 / norm);
    let s = a.level();
    let basis = HermBasis::for_data(s, an.is_real());
    let k = basis.len();
    let m = cone.num_generators();
    let mut p = HermLmi::new(m * k, Goal::MinEig { cap: None });
    // sum_j c_j[i] Q_j = A_i, coordinatewise
    for i in 0..cone.dim() {
        let target = basis.coords(an.coeff(i));
        for r in 0..k {
            let row = (0..m)
                .filter(|&j| cone.generators()[j][i] != 0.0)
                .map(|j| (j * k + r, cone.generators()[j][i]))
                .collect();
            p.add_eq(row, target[r]);
        }
    }
    for j in 0..m {
        let terms = (0..k).map(|r| (j * k + r, basis.elements[r].clone())).collect();
        p.add_block(HermMatrix::zeros(s), terms, true);
    }
    let sol = p.solve(1e-10)?;
    let q: Vec<HermMatrix> = (0..m)
        .map(|j| basis.combine(&sol.w.as_slice()[j * k..(j + 1) * k]).scale(norm))
        .collect();
    let ok = matches!(sol.status, SdpStatus::Optimal | SdpStatus::Feasible);
    if ok && sol.value >= -tol {
        return Ok(MembershipResult {
            status: MembershipStatus::Member,
            margin: sol.value,
            witness: Some(Witness::Decomposition { q }),
        });
    }
    if ok && sol.dual_bound < -tol {
        // Y_i from the equality multipliers; phi(e_i) = conj(Y_i)
        let y: Vec<HermMatrix> = (0..cone.dim())
            .map(|i| {
                let c: Vec<f64> = (0..k).map(|r| sol.eq_multipliers[i * k + r]).collect();
                conj(&basis.combine(&c))
            })
            .collect();
        if let Some((phi, margin)) = certify_separator(cone, &an, y, tol) {
            return Ok(MembershipResult {
                status: MembershipStatus::NotMember,
                margin,
                witness: Some(Witness::Separator { phi }),
            });
        }
    }
    Ok(MembershipResult {
        status: MembershipStatus::Inconclusive,
        margin: sol.value,
        witness: None,
    })
}

fn conj(h: &HermMatrix) -> HermMatrix {
    HermMatrix::new(h.matrix().map(|z| z.conj())).expect("conjugate of Hermitian is Hermitian")
}

/// `phi[a]` for a map given by its values on unit vectors.
pub fn separator_image(phi: &[HermMatrix], a: &MatrixElement) -> HermMatrix {
    let t = phi[0].dim();
    let mut out = HermMatrix::zeros(t * a.level());
    for (p, ai) in phi.iter().zip(a.coeffs()) {
        out += &kron(p, ai);
    }
    out
}

/// Makes `phi` exactly positive on the generators (adding a multiple of an
/// interior functional times `I`) and checks that `phi[a]` stays non-PSD.
fn certify_separator(
    cone: &PolyhedralCone,
    a: &MatrixElement,
    mut phi: Vec<HermMatrix>,
    tol: f64,
) -> Option<(Vec<HermMatrix>, f64)> {
    let t = phi[0].dim();
    let value = |phi: &[HermMatrix], c: &DVector<f64>| {
        let mut h = HermMatrix::zeros(t);
        for (p, &x) in phi.iter().zip(c.iter()) {
            h += &p.scale(x);
        }
        h
    };
    let scale = phi.iter().map(HermMatrix::norm).fold(0.0, f64::max);
    if scale == 0.0 {
        return None;
    }
    for p in phi.iter_mut() {
        *p = p.scale(1.0 / scale);
    }
    let worst = cone
        .generators()
        .iter()
        .map(|c| value(&phi, c).min_eig() / c.norm())
        .fold(f64::INFINITY, f64::min);
    if worst < 0.0 {
        let interior = interior_functional(cone)?;
        let lo = cone
            .generators()
            .iter()
            .map(|c| interior.dot(c) / c.norm())
            .fold(f64::INFINITY, f64::min);
        let mu = -worst / lo * (1.0 + 1e-9);
        for (p, &l) in phi.iter_mut().zip(interior.iter()) {
            *p += &HermMatrix::identity(t).scale(mu * l);
        }
    }
    let margin = separator_image(&phi, a).min_eig();
    (margin < -tol).then_some((phi, margin))
}

/// A functional strictly positive on every generator (sum of unit facets).
fn interior_functional(cone: &PolyhedralCone) -> Option<DVector<f64>> {
    let d = cones::dual_generators(cone).ok()?;
    let mut l = DVector::zeros(cone.dim());
    for f in &d.facets {
        l += f / f.norm();
    }
    cone.generators().iter().all(|c| l.dot(c) > 0.0).then_some(l)
}

/// Outcome of [`fs_membership`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FsMembership {
    pub member: bool,
    pub min_eig: f64,
}

/// `a` belongs to the free spectrahedron of `pencil` iff `sum A_i (x) a_i` is PSD.
pub fn fs_membership(pencil: &[HermMatrix], a: &MatrixElement, tol: f64) -> Result<FsMembership> {
    if pencil.len() != a.n() {
        return Err(Error::Shape(format!("pencil of length {}, element over R^{}", pencil.len(), a.n())));
    }
    let min_eig = separator_image(pencil, a).min_eig();
    Ok(FsMembership {
        member: min_eig >= -tol,
        min_eig,
    })
}

/// Dispatching membership oracle.
pub fn membership(system: &OperatorSystem, a: &MatrixElement, tol: f64) -> Result<MembershipResult> {
    if a.n() != system.ambient_dim() {
        return Err(Error::Shape(format!(
            "element over R^{}, system over R^{}",
            a.n(),
            system.ambient_dim()
        )));
    }
    check_level(a)?;
    match system {
        OperatorSystem::Minimal { cone } => min_membership(cone, a, tol),
        OperatorSystem::FreeSpectrahedron { a: pencil } => {
            let r = fs_membership(pencil, a, tol)?;
            Ok(MembershipResult {
                status: if r.member {
                    MembershipStatus::Member
                } else {
                    MembershipStatus::NotMember
                },
                margin: r.min_eig / (1.0 + a.norm()),
                witness: None,
            })
        }
        OperatorSystem::InverseImage { psi, target } => membership(target, &push_forward(psi, a)?, tol),
        OperatorSystem::Lifted { pi, gamma, target } => lifted_membership(pi, gamma, target, a, tol),
    }
}

/// Fiber program of a lifted system at one element.
pub struct Fiber {
    pub status: SdpStatus,
    /// Max-min-eigenvalue of the target constraint over the fiber (for unit `a`).
    pub value: f64,
    pub dual_bound: f64,
    /// Fiber point coefficients (scaled back to `a`).
    pub z: Vec<HermMatrix>,
}

/// Maximizes the target margin over `{z : pi[z] = a}`.
///
/// Supports free spectrahedral and minimal targets. The margin is capped at
/// one so that unbounded fibers stay well posed.
pub fn fiber_search(
    pi: &LinearMap,
    gamma: &LinearMap,
    target: &OperatorSystem,
    a: &MatrixElement,
) -> Result<Fiber> {
    let p = pi.domain;
    let s = a.level();
    let norm = a.norm();
    if norm == 0.0 {
        return Ok(Fiber {
            status: SdpStatus::Optimal,
            value: 0.0,
            dual_bound: 0.0,
            z: vec![HermMatrix::zeros(s); p],
        });
    }
    let an = a.scale(1.0 / norm);
    let real = an.is_real()
        && match target {
            OperatorSystem::FreeSpectrahedron { a } => a.iter().all(HermMatrix::is_real),
            _ => true,
        };
    let basis = HermBasis::for_data(s, real);
    let k = basis.len();
    let extra = match target {
        OperatorSystem::Minimal { cone } => cone.num_generators() * k,
        OperatorSystem::FreeSpectrahedron { .. } => 0,
        _ => {
            return Err(Error::Capability(format!(
                "fiber search needs a free spectrahedral or minimal target, got {}",
                target.variant_name()
            )))
        }
    };
    let mut lmi = HermLmi::new(p * k + extra, Goal::MinEig { cap: Some(1.0) });
    // pi[z] = a
    for i in 0..pi.codomain.real_dim() {
        let rhs = basis.coords(an.coeff(i));
        for r in 0..k {
            let row = (0..p)
                .filter(|&q| pi.matrix[(i, q)] != 0.0)
                .map(|q| (q * k + r, pi.matrix[(i, q)]))
                .collect();
            lmi.add_eq(row, rhs[r]);
        }
    }
    let ydim = gamma.codomain.real_dim();
    match target {
        OperatorSystem::FreeSpectrahedron { a: pencil } => {
            // sum_l B_l (x) (gamma z)_l - lambda I
            let d = pencil[0].dim();
            let mut terms = Vec::new();
            for q in 0..p {
                for r in 0..k {
                    let mut acc = HermMatrix::zeros(d * s);
                    for l in 0..ydim {
                        let g = gamma.matrix[(l, q)];
                        if g != 0.0 {
                            acc += &kron(&pencil[l], &basis.elements[r]).scale(g);
                        }
                    }
                    if acc.norm() > 0.0 {
                        terms.push((q * k + r, acc));
                    }
                }
            }
            lmi.add_block(HermMatrix::zeros(d * s), terms, true);
        }
        OperatorSystem::Minimal { cone } => {
            // gamma[z] = sum_j c_j (x) Q_j with Q_j - lambda I PSD
            let m = cone.num_generators();
            let off = p * k;
            for l in 0..ydim {
                for r in 0..k {
                    let mut row: Vec<(usize, f64)> = (0..p)
                        .filter(|&q| gamma.matrix[(l, q)] != 0.0)
                        .map(|q| (q * k + r, gamma.matrix[(l, q)]))
                        .collect();
                    for j in 0..m {
                        let c = cone.generators()[j][l];
                        if c != 0.0 {
                            row.push((off + j * k + r, -c));
                        }
                    }
                    lmi.add_eq(row, 0.0);
                }
            }
            for j in 0..m {
                let terms = (0..k).map(|r| (off + j * k + r, basis.elements[r].clone())).collect();
                lmi.add_block(HermMatrix::zeros(s), terms, true);
            }
        }
        _ => unreachable!(),
    }
    let sol = lmi.solve(1e-10)?;
    let z = (0..p)
        .map(|q| basis.combine(&sol.w.as_slice()[q * k..(q + 1) * k]).scale(norm))
        .collect();
    Ok(Fiber {
        status: sol.status,
        value: sol.value,
        dual_bound: sol.dual_bound,
        z,
    })
}

fn lifted_membership(
    pi: &LinearMap,
    gamma: &LinearMap,
    target: &OperatorSystem,
    a: &MatrixElement,
    tol: f64,
) -> Result<MembershipResult> {
    let f = fiber_search(pi, gamma, target, a)?;
    let status = match f.status {
        SdpStatus::Infeasible => MembershipStatus::NotMember,
        SdpStatus::Optimal | SdpStatus::Feasible if f.value >= -tol => MembershipStatus::Member,
        SdpStatus::Optimal | SdpStatus::Feasible if f.dual_bound < -tol => MembershipStatus::NotMember,
        _ => MembershipStatus::Inconclusive,
    };
    Ok(MembershipResult {
        status,
        margin: if f.status == SdpStatus::Infeasible { -1.0 } else { f.value },
        witness: (status == MembershipStatus::Member).then_some(Witness::Fiber { z: f.z }),
    })
}

/// `id (x) (V* . V)` applied to an element.
pub fn compression(a: &MatrixElement, v: &DMatrix<C64>) -> Result<MatrixElement> {
    a.compress(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn el(coeffs: Vec<HermMatrix>) -> MatrixElement {
        MatrixElement::new(coeffs).unwrap()
    }

    #[test]
    fn levelwise_projection_and_identity() {
        let a = el(vec![HermMatrix::identity(2), HermMatrix::diag(&[1.0, -1.0])]);
        let proj = LinearMap::new(2, Codomain::Vector(1), DMatrix::from_row_slice(1, 2, &[1.0, 0.0])).unwrap();
        match apply_levelwise(&proj, &a).unwrap() {
            Levelwise::Element(e) => assert_eq!(e.coeffs(), &[HermMatrix::identity(2)]),
            Levelwise::Herm(_) => panic!("vector codomain"),
        }
        match apply_levelwise(&LinearMap::identity(2), &a).unwrap() {
            Levelwise::Element(e) => assert_eq!(e, a),
            Levelwise::Herm(_) => panic!("vector codomain"),
        }
    }

    #[test]
    fn levelwise_into_matrices() {
        let phi = LinearMap::from_herm_values(&[HermMatrix::unit(2, 0), HermMatrix::unit(2, 1)]).unwrap();
        let a = el(vec![HermMatrix::identity(2), HermMatrix::zeros(2)]);
        let h = apply_levelwise(&phi, &a).unwrap().into_herm().unwrap();
        assert!((&h - &HermMatrix::diag(&[1.0, 1.0, 0.0, 0.0])).norm() < 1e-15);
    }

    #[test]
    fn min_membership_examples() {
        let c = PolyhedralCone::orthant(2);
        let yes = min_membership(&c, &el(vec![HermMatrix::identity(2), HermMatrix::identity(2)]), 1e-8).unwrap();
        assert_eq!(yes.status, MembershipStatus::Member);
        let zero = min_membership(&c, &MatrixElement::zeros(2, 2), 1e-8).unwrap();
        assert_eq!(zero.status, MembershipStatus::Member);
        let a = el(vec![HermMatrix::diag(&[1.0, -1.0]), HermMatrix::zeros(2)]);
        let no = min_membership(&c, &a, 1e-8).unwrap();
        assert_eq!(no.status, MembershipStatus::NotMember);
        match no.witness {
            Some(Witness::Separator { phi }) => {
                assert!(separator_image(&phi, &a).min_eig() < -1e-8);
                for g in c.generators() {
                    let mut h = HermMatrix::zeros(2);
                    for (p, &x) in phi.iter().zip(g.iter()) {
                        h += &p.scale(x);
                    }
                    assert!(h.min_eig() >= -1e-12);
                }
            }
            other => panic!("expected separator, got {other:?}"),
        }
    }

    #[test]
    fn fs_membership_examples() {
        let pencil = vec![HermMatrix::unit(2, 0), HermMatrix::unit(2, 1)];
        let r = fs_membership(&pencil, &el(vec![HermMatrix::identity(2), HermMatrix::identity(2)]), 1e-9).unwrap();
        assert!(r.member && (r.min_eig - 1.0).abs() < 1e-12);
        let r = fs_membership(&pencil, &MatrixElement::zeros(2, 2), 1e-9).unwrap();
        assert!(r.member && r.min_eig.abs() < 1e-15);
        let r = fs_membership(&pencil, &el(vec![HermMatrix::diag(&[1.0, -1.0]), HermMatrix::zeros(2)]), 1e-9).unwrap();
        assert!(!r.member && (r.min_eig + 1.0).abs() < 1e-12);
    }

    #[test]
    fn compression_examples() {
        let a = el(vec![HermMatrix::diag(&[1.0, 2.0]), HermMatrix::diag(&[3.0, 4.0])]);
        let id = DMatrix::<C64>::identity(2, 2);
        assert_eq!(compression(&a, &id).unwrap(), a);
        let e1 = DMatrix::from_column_slice(2, 1, &[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        let c = compression(&a, &e1).unwrap();
        assert_eq!(c.as_vector().unwrap(), DVector::from_vec(vec![1.0, 3.0]));
    }

    #[test]
    fn improper_free_spectrahedron_rejected() {
        let a = vec![HermMatrix::unit(2, 0)];
        assert!(matches!(OperatorSystem::free_spectrahedron(a), Err(Error::Properness(_))));
        assert!(OperatorSystem::free_spectrahedron(vec![HermMatrix::unit(2, 0), HermMatrix::unit(2, 1)]).is_ok());
    }

    #[test]
    fn improper_cone_rejected() {
        let c = PolyhedralCone::from_rows(&[vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap();
        assert!(OperatorSystem::minimal(c).is_err());
    }

    #[test]
    fn inverse_image_dispatch() {
        // psi(e_i) = E_ii into Her_2, T = P^2
        let psi = LinearMap::from_herm_values(&[HermMatrix::unit(2, 0), HermMatrix::unit(2, 1)]).unwrap();
        let sys = OperatorSystem::inverse_image(psi, OperatorSystem::psd(2)).unwrap();
        let yes = membership(&sys, &el(vec![HermMatrix::identity(2), HermMatrix::identity(2)]), 1e-9).unwrap();
        assert!(yes.is_member());
        let no = membership(&sys, &el(vec![HermMatrix::diag(&[1.0, -1.0]), HermMatrix::zeros(2)]), 1e-9).unwrap();
        assert_eq!(no.status, MembershipStatus::NotMember);
    }

    #[test]
    fn element_json() {
        let a = el(vec![HermMatrix::identity(2), HermMatrix::diag(&[1.0, -1.0])]);
        let s = serde_json::to_string(&a).unwrap();
        assert!(s.starts_with(r#"{"n":2,"s":2,"coeffs":"#));
        let back: MatrixElement = serde_json::from_str(&s).unwrap();
        assert_eq!(back, a);
        let sys = OperatorSystem::minimal(PolyhedralCone::orthant(2)).unwrap();
        let s = serde_json::to_string(&sys).unwrap();
        assert!(s.starts_with(r#"{"variant":"minimal","cone":"#));
    }
}
