//! Completely positive maps into matrix algebras.
//!
//! A map is stored by its values on a generating set of its source: cone
//! generators, the canonical basis of `Her_d`, or a spanning list of a
//! subspace of `Her_d`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cones::PolyhedralCone;
use crate::error::{Error, Result};
use crate::herm::{herm_coords, rank1_decompose, HermBasis, HermMatrix, C64};
use crate::linalg;
use crate::opsys::{interior_margin, Codomain, LinearMap};
use crate::sdp::{Goal, HermLmi, SdpStatus};

/// Relative tolerance of the linear consistency check.
pub const CONSISTENCY_TOL: f64 = 1e-9;

/// Where a [`CpMap`] is defined.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CpSource {
    /// Values on the generators of a cone (maps out of `C^min`).
    Generators { cone: PolyhedralCone },
    /// Values on the canonical basis of `Her_d`.
    Algebra { d: usize },
    /// Values on a spanning list of a subspace of `Her_d`.
    Subspace { d: usize, spanning: Vec<HermMatrix> },
}

impl CpSource {
    fn num_values(&self) -> usize {
        match self {
            CpSource::Generators { cone } => cone.num_generators(),
            CpSource::Algebra { d } => d * d,
            CpSource::Subspace { spanning, .. } => spanning.len(),
        }
    }

    /// Real coordinates of the generating set, one column per generator.
    fn generator_coords(&self) -> DMatrix<f64> {
        match self {
            CpSource::Generators { cone } => cone.generator_matrix(),
            CpSource::Algebra { d } => DMatrix::identity(d * d, d * d),
            CpSource::Subspace { spanning, .. } => {
                let cols: Vec<DVector<f64>> = spanning.iter().map(herm_coords).collect();
                DMatrix::from_columns(&cols)
            }
        }
    }

    fn domain_dim(&self) -> usize {
        match self {
            CpSource::Generators { cone } => cone.dim(),
            CpSource::Algebra { d } | CpSource::Subspace { d, .. } => d * d,
        }
    }
}

/// A linear map into `Her_t` given by its values on a generating set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CpMapJson", into = "CpMapJson")]
pub struct CpMap {
    t: usize,
    source: CpSource,
    values: Vec<HermMatrix>,
}

#[derive(Serialize, Deserialize)]
struct ValueJson {
    gen: usize,
    value: HermMatrix,
}

#[derive(Serialize, Deserialize)]
struct CpMapJson {
    t: usize,
    source: CpSource,
    values: Vec<ValueJson>,
}

impl TryFrom<CpMapJson> for CpMap {
    type Error = Error;
    fn try_from(j: CpMapJson) -> Result<Self> {
        let n = j.source.num_values();
        let mut values: Vec<Option<HermMatrix>> = vec![None; n];
        for v in j.values {
            let slot = values
                .get_mut(v.gen)
                .ok_or_else(|| Error::InvalidInput(format!("generator index {} out of range", v.gen)))?;
            *slot = Some(v.value);
        }
        let values = values
            .into_iter()
            .enumerate()
            .map(|(i, v)| v.ok_or_else(|| Error::InvalidInput(format!("no value for generator {i}"))))
            .collect::<Result<Vec<_>>>()?;
        CpMap::new(j.t, j.source, values)
    }
}

impl From<CpMap> for CpMapJson {
    fn from(m: CpMap) -> Self {
        CpMapJson {
            t: m.t,
            source: m.source,
            values: m
                .values
                .into_iter()
                .enumerate()
                .map(|(gen, value)| ValueJson { gen, value })
                .collect(),
        }
    }
}

impl CpMap {
    /// Validates sizes and linear consistency of the values.
    pub fn new(t: usize, source: CpSource, values: Vec<HermMatrix>) -> Result<Self> {
        if values.len() != source.num_values() {
            return Err(Error::Shape(format!(
                "{} values for {} generators",
                values.len(),
                source.num_values()
            )));
        }
        if values.iter().any(|v| v.dim() != t) {
            return Err(Error::Shape(format!("map values must be {t} x {t}")));
        }
        if let CpSource::Subspace { d, spanning } = &source {
            if spanning.iter().any(|h| h.dim() != *d) {
                return Err(Error::Shape(format!("spanning matrices must be {d} x {d}")));
            }
        }
        let map = Self { t, source, values };
        map.check_consistency()?;
        Ok(map)
    }

    pub fn on_generators(cone: &PolyhedralCone, values: Vec<HermMatrix>) -> Result<Self> {
        let t = values.first().map_or(1, HermMatrix::dim);
        Self::new(t, CpSource::Generators { cone: cone.clone() }, values)
    }

    /// The map `X -> f(X)` on `Her_d`, sampled on the canonical basis.
    pub fn on_algebra(d: usize, t: usize, f: impl Fn(&HermMatrix) -> HermMatrix) -> Result<Self> {
        let values = HermBasis::canonical(d).elements.iter().map(f).collect();
        Self::new(t, CpSource::Algebra { d }, values)
    }

    pub fn on_subspace(d: usize, spanning: Vec<HermMatrix>, values: Vec<HermMatrix>) -> Result<Self> {
        let t = values.first().map_or(1, HermMatrix::dim);
        Self::new(t, CpSource::Subspace { d, spanning }, values)
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn source(&self) -> &CpSource {
        &self.source
    }

    pub fn values(&self) -> &[HermMatrix] {
        &self.values
    }

    /// Whenever `sum_i lambda_i g_i = 0`, require `sum_i lambda_i v_i = 0`.
    fn check_consistency(&self) -> Result<()> {
        let g = self.source.generator_coords();
        let rel = linalg::nullspace(&g, linalg::RANK_TOL);
        let scale = 1.0 + self.values.iter().map(HermMatrix::norm).fold(0.0, f64::max);
        for k in 0..rel.ncols() {
            let mut acc = HermMatrix::zeros(self.t);
            for (i, v) in self.values.iter().enumerate() {
                acc += &v.scale(rel[(i, k)]);
            }
            if acc.norm() > CONSISTENCY_TOL * scale {
                return Err(Error::InvalidInput(format!(
                    "values violate a linear relation among the generators (residual {:.3e})",
                    acc.norm()
                )));
            }
        }
        Ok(())
    }

    /// The map as a [`LinearMap`] on the coordinates of its source space.
    ///
    /// Subspace maps are extended by zero on the orthogonal complement.
    pub fn linear_map(&self) -> LinearMap {
        let g = self.source.generator_coords();
        let vals: Vec<DVector<f64>> = self.values.iter().map(herm_coords).collect();
        let p = DMatrix::from_columns(&vals);
        let m = match self.source {
            CpSource::Algebra { .. } => p,
            _ => p * linalg::pinv(&g, linalg::RANK_TOL),
        };
        LinearMap {
            domain: self.source.domain_dim(),
            codomain: Codomain::Herm(self.t),
            matrix: m,
        }
    }

    /// `phi(x)` for a vector in the cone's ambient space.
    pub fn eval_vector(&self, x: &DVector<f64>) -> Result<HermMatrix> {
        match &self.source {
            CpSource::Generators { cone } if cone.dim() == x.len() => {
                Ok(self.linear_map().apply_herm(x).expect("Herm codomain"))
            }
            _ => Err(Error::Shape("vector evaluation needs a cone source of matching dimension".into())),
        }
    }

    /// `phi(X)` for a Hermitian argument (algebra and subspace sources).
    pub fn eval_herm(&self, x: &HermMatrix) -> Result<HermMatrix> {
        match &self.source {
            CpSource::Algebra { d } | CpSource::Subspace { d, .. } if *d == x.dim() => {
                Ok(self.linear_map().apply_herm(&herm_coords(x)).expect("Herm codomain"))
            }
            _ => Err(Error::Shape("matrix evaluation needs a matrix source of matching size".into())),
        }
    }
}

/// `phi(E_ij)` for all `i, j`, extended complex-linearly.
fn on_matrix_units(phi: &CpMap, d: usize) -> Vec<Vec<DMatrix<C64>>> {
    let basis = HermBasis::canonical(d);
    let vals: Vec<DMatrix<C64>> = basis
        .elements
        .iter()
        .map(|e| phi.eval_herm(e).expect("algebra source").into_matrix())
        .collect();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = vec![vec![DMatrix::zeros(phi.t, phi.t); d]; d];
    for i in 0..d {
        out[i][i] = vals[i].clone();
    }
    let mut k = d;
    for i in 0..d {
        for j in (i + 1)..d {
            // E_ij = (S - iA)/sqrt2, E_ji = (S + iA)/sqrt2
            let s = &vals[k];
            let a = &vals[k + 1] * C64::new(0.0, 1.0);
            out[i][j] = (s - &a) * C64::new(r, 0.0);
            out[j][i] = (s + &a) * C64::new(r, 0.0);
            k += 2;
        }
    }
    out
}

/// The Choi matrix `sum_ij E_ij (x) phi(E_ij)` of a map on `Her_d`.
pub fn choi_matrix(phi: &CpMap) -> Result<HermMatrix> {
    let CpSource::Algebra { d } = phi.source else {
        return Err(Error::Capability("Choi matrix needs the full matrix algebra as source".into()));
    };
    let t = phi.t;
    let units = on_matrix_units(phi, d);
    let mut j = DMatrix::zeros(d * t, d * t);
    for a in 0..d {
        for b in 0..d {
            j.view_mut((a * t, b * t), (t, t)).copy_from(&units[a][b]);
        }
    }
    HermMatrix::new(j)
}

/// `phi(X) = sum_ij X_ij J_(i,j)` for a Choi matrix `J` with blocks of size `t`.
pub fn choi_apply(j: &DMatrix<C64>, x: &DMatrix<C64>, t: usize) -> DMatrix<C64> {
    let d = x.nrows();
    let mut out = DMatrix::zeros(t, t);
    for a in 0..d {
        for b in 0..d {
            let c = x[(a, b)];
            if c != C64::new(0.0, 0.0) {
                out += j.view((a * t, b * t), (t, t)) * c;
            }
        }
    }
    out
}

/// Kraus operators `V_k` (`d x t`) with `phi(X) = sum_k V_k* X V_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KrausDecomposition {
    pub d: usize,
    pub t: usize,
    pub operators: Vec<DMatrix<C64>>,
}

impl KrausDecomposition {
    pub fn new(d: usize, t: usize, operators: Vec<DMatrix<C64>>) -> Result<Self> {
        if operators.iter().any(|v| v.shape() != (d, t)) {
            return Err(Error::Shape(format!("Kraus operators must be {d} x {t}")));
        }
        Ok(Self { d, t, operators })
    }

    pub fn apply(&self, x: &HermMatrix) -> HermMatrix {
        let mut out = DMatrix::zeros(self.t, self.t);
        for v in &self.operators {
            out += v.adjoint() * x.matrix() * v;
        }
        HermMatrix::new(out).expect("congruence sums are Hermitian")
    }

    pub fn to_cp_map(&self) -> CpMap {
        CpMap::on_algebra(self.d, self.t, |x| self.apply(x)).expect("consistent by construction")
    }

    pub fn linear_map(&self) -> LinearMap {
        self.to_cp_map().linear_map()
    }
}

/// Choi-Kraus decomposition from the eigenvectors of the Choi matrix.
///
/// Eigenvalues at or below `tol * ||J||` are dropped.
pub fn choi_kraus(phi: &CpMap, tol: f64) -> Result<KrausDecomposition> {
    let CpSource::Algebra { d } = phi.source else {
        return Err(Error::Capability("Kraus decomposition needs the full matrix algebra as source".into()));
    };
    let j = choi_matrix(phi)?;
    kraus_from_choi(&j, d, phi.t, tol)
}

pub fn kraus_from_choi(j: &HermMatrix, d: usize, t: usize, tol: f64) -> Result<KrausDecomposition> {
    if j.dim() != d * t {
        return Err(Error::Shape(format!("Choi matrix of size {} for d = {d}, t = {t}", j.dim())));
    }
    let scale = j.norm().max(f64::MIN_POSITIVE);
    let min_eig = j.min_eig();
    if min_eig < -tol * scale.max(1.0) {
        return Err(Error::NotCompletelyPositive { min_eig });
    }
    let ws = rank1_decompose(j, tol * scale).map_err(|_| Error::NotCompletelyPositive { min_eig })?;
    let operators = ws
        .iter()
        .map(|w| DMatrix::from_fn(d, t, |i, a| w[i * t + a].conj()))
        .collect();
    Ok(KrausDecomposition { d, t, operators })
}

/// Verdict of [`cp_check`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CpStatus {
    Cp,
    NotCp,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CpCheck {
    pub status: CpStatus,
    /// Smallest eigenvalue of the deciding matrices.
    pub margin: f64,
}

/// Complete positivity test dispatched on the source.
///
/// On `C^min` positivity on generators suffices; on `Her_d` the Choi matrix
/// decides; on a subspace the map is CP iff it has a CP extension.
pub fn cp_check(phi: &CpMap, tol: f64) -> Result<CpCheck> {
    match &phi.source {
        CpSource::Generators { .. } => {
            let m = phi.values.iter().map(HermMatrix::min_eig).fold(f64::INFINITY, f64::min);
            Ok(CpCheck {
                status: if m >= -tol { CpStatus::Cp } else { CpStatus::NotCp },
                margin: m,
            })
        }
        CpSource::Algebra { .. } => {
            let m = choi_matrix(phi)?.min_eig();
            Ok(CpCheck {
                status: if m >= -tol { CpStatus::Cp } else { CpStatus::NotCp },
                margin: m,
            })
        }
        CpSource::Subspace { .. } => {
            let e = cp_extend(phi, tol)?;
            Ok(CpCheck {
                status: match e.status {
                    ExtensionStatus::Extended => CpStatus::Cp,
                    ExtensionStatus::Infeasible => CpStatus::NotCp,
                    ExtensionStatus::Inconclusive => CpStatus::Inconclusive,
                },
                margin: e.choi_min_eig,
            })
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtensionStatus {
    Extended,
    Infeasible,
    Inconclusive,
}

/// Outcome of [`cp_extend`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CpExtension {
    pub status: ExtensionStatus,
    /// The extension on `Her_d` (present when `Extended`).
    pub map: Option<CpMap>,
    pub choi_min_eig: f64,
    /// `max_q ||ext(H_q) - phi(H_q)||_F`.
    pub restriction_error: f64,
    /// Upper bound on the best achievable Choi min-eigenvalue (normalized).
    pub dual_bound: f64,
    /// Set when the subspace has no positive definite element.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// Extends a map on a subspace of `Her_d` to a CP map on `Her_d`.
///
/// Maximizes the smallest eigenvalue of the Choi matrix subject to the
/// restriction constraints, so the returned extension is interior whenever
/// possible.
pub fn cp_extend(phi: &CpMap, tol: f64) -> Result<CpExtension> {
    let (d, spanning) = match &phi.source {
        CpSource::Subspace { d, spanning } => (*d, spanning.clone()),
        CpSource::Algebra { d } => (*d, HermBasis::canonical(*d).elements),
        CpSource::Generators { .. } => {
            return Err(Error::Capability("CP extension needs a matrix subspace source".into()))
        }
    };
    let t = phi.t;
    let margin = interior_margin(&spanning)?;
    let warning = (margin <= 1e-9).then(|| {
        format!("subspace contains no positive definite element (margin {margin:.3e}); extension may fail")
    });
    let scale = phi.values.iter().map(HermMatrix::norm).fold(0.0, f64::max);
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let real = phi.values.iter().all(HermMatrix::is_real) && spanning.iter().all(HermMatrix::is_real);
    let jb = HermBasis::for_data(d * t, real);
    let tb = HermBasis::for_data(t, real);
    let nv = jb.len();
    let mut lmi = HermLmi::new(nv, Goal::MinEig { cap: Some(1.0) });
    // constraint rows: coords of sum_ij (H_q)_ij J_(i,j) against tb
    let images: Vec<Vec<DVector<f64>>> = spanning
        .iter()
        .map(|h| {
            jb.elements
                .iter()
                .map(|b| {
                    let y = HermMatrix::new(choi_apply(b.matrix(), h.matrix(), t)).expect("Hermitian image");
                    tb.coords(&y)
                })
                .collect()
        })
        .collect();
    for (q, v) in phi.values.iter().enumerate() {
        let rhs = tb.coords(&v.scale(1.0 / scale));
        for r in 0..tb.len() {
            let row: Vec<(usize, f64)> = (0..nv)
                .filter_map(|k| {
                    let c = images[q][k][r];
                    (c.abs() > 1e-15).then_some((k, c))
                })
                .collect();
            lmi.add_eq(row, rhs[r]);
        }
    }
    lmi.add_block(HermMatrix::zeros(d * t), jb.elements.iter().cloned().enumerate().collect(), true);
    let sol = lmi.solve(1e-10)?;
    if sol.status == SdpStatus::Infeasible && sol.sdp.is_none() {
        return Ok(CpExtension {
            status: ExtensionStatus::Infeasible,
            map: None,
            choi_min_eig: f64::NEG_INFINITY,
            restriction_error: sol.eq_residual * scale,
            dual_bound: f64::NEG_INFINITY,
            warning,
        });
    }
    let j = jb.combine(sol.w.as_slice()).scale(scale);
    let choi_min_eig = j.min_eig();
    let ext = CpMap::on_algebra(d, t, |x| {
        HermMatrix::new(choi_apply(j.matrix(), x.matrix(), t)).expect("Hermitian image")
    })?;
    let restriction_error = spanning
        .iter()
        .zip(&phi.values)
        .map(|(h, v)| (&ext.eval_herm(h).expect("algebra source") - v).norm())
        .fold(0.0, f64::max);
    let solved = matches!(sol.status, SdpStatus::Optimal | SdpStatus::Feasible);
    let status = if solved && sol.value >= -tol {
        ExtensionStatus::Extended
    } else if solved && sol.dual_bound < -tol {
        ExtensionStatus::Infeasible
    } else {
        ExtensionStatus::Inconclusive
    };
    Ok(CpExtension {
        map: (status == ExtensionStatus::Extended).then_some(ext),
        status,
        choi_min_eig,
        restriction_error,
        dual_bound: sol.dual_bound,
        warning,
    })
}

/// Outcome of [`positive_extension`].
#[derive(Clone, Debug, PartialEq)]
pub struct PositiveExtension {
    pub status: ExtensionStatus,
    /// The extension as a map `R^n -> Her_t`.
    pub map: Option<LinearMap>,
    /// Smallest eigenvalue over the extension's values on the cone generators.
    pub min_eig: f64,
}

/// Extends a map given on a subspace of `R^n` to a map positive on every
/// generator of `cone`, i.e. a CP map on `cone^min`.
pub fn positive_extension(
    cone: &PolyhedralCone,
    subspace: &[DVector<f64>],
    values: &[HermMatrix],
    tol: f64,
) -> Result<PositiveExtension> {
    let n = cone.dim();
    let t = values.first().map_or(1, HermMatrix::dim);
    if subspace.len() != values.len() || subspace.iter().any(|v| v.len() != n) {
        return Err(Error::Shape("subspace vectors and values do not match".into()));
    }
    let scale = values.iter().map(HermMatrix::norm).fold(0.0, f64::max);
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let real = values.iter().all(HermMatrix::is_real);
    let b = HermBasis::for_data(t, real);
    let k = b.len();
    let mut lmi = HermLmi::new(n * k, Goal::MinEig { cap: Some(1.0) });
    for (z, v) in subspace.iter().zip(values) {
        let rhs = b.coords(&v.scale(1.0 / scale));
        for r in 0..k {
            let row = (0..n).filter(|&l| z[l] != 0.0).map(|l| (l * k + r, z[l])).collect();
            lmi.add_eq(row, rhs[r]);
        }
    }
    for c in cone.generators() {
        let cn = c / c.norm();
        let mut terms = Vec::new();
        for l in 0..n {
            if cn[l] != 0.0 {
                for r in 0..k {
                    terms.push((l * k + r, b.elements[r].scale(cn[l])));
                }
            }
        }
        lmi.add_block(HermMatrix::zeros(t), terms, true);
    }
    let sol = lmi.solve(1e-10)?;
    if sol.sdp.is_none() && sol.status == SdpStatus::Infeasible {
        return Ok(PositiveExtension {
            status: ExtensionStatus::Infeasible,
            map: None,
            min_eig: f64::NEG_INFINITY,
        });
    }
    let vals: Vec<HermMatrix> = (0..n)
        .map(|l| b.combine(&sol.w.as_slice()[l * k..(l + 1) * k]).scale(scale))
        .collect();
    let map = LinearMap::from_herm_values(&vals)?;
    let min_eig = cone
        .generators()
        .iter()
        .map(|c| map.apply_herm(c).expect("Herm codomain").min_eig() / c.norm())
        .fold(f64::INFINITY, f64::min);
    let solved = matches!(sol.status, SdpStatus::Optimal | SdpStatus::Feasible);
    let status = if solved && sol.value >= -tol {
        ExtensionStatus::Extended
    } else if solved && sol.dual_bound < -tol {
        ExtensionStatus::Infeasible
    } else {
        ExtensionStatus::Inconclusive
    };
    Ok(PositiveExtension {
        map: (status == ExtensionStatus::Extended).then_some(map),
        status,
        min_eig,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn transpose_map() -> CpMap {
        CpMap::on_algebra(2, 2, |x| HermMatrix::new(x.matrix().transpose()).unwrap()).unwrap()
    }

    #[test]
    fn choi_of_identity_is_rank_one() {
        let id = CpMap::on_algebra(2, 2, |x| x.clone()).unwrap();
        let j = choi_matrix(&id).unwrap();
        let mut e = j.eigenvalues();
        e.sort_by(f64::total_cmp);
        assert!(e[..3].iter().all(|x| x.abs() < 1e-12));
        assert!((e[3] - 2.0).abs() < 1e-12);
        let k = choi_kraus(&id, 1e-9).unwrap();
        assert_eq!(k.operators.len(), 1);
        // V = I up to phase
        let v = &k.operators[0];
        let ph = v[(0, 0)];
        assert!((ph.norm() - 1.0).abs() < 1e-12);
        assert!((v / ph - DMatrix::<C64>::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn transpose_is_not_cp() {
        let t = transpose_map();
        let j = choi_matrix(&t).unwrap();
        assert!((j.min_eig() + 1.0).abs() < 1e-12);
        assert_eq!(cp_check(&t, 1e-9).unwrap().status, CpStatus::NotCp);
        assert!(matches!(choi_kraus(&t, 1e-9), Err(Error::NotCompletelyPositive { .. })));
    }

    #[test]
    fn diagonal_map_kraus() {
        let diag = CpMap::on_algebra(2, 2, |x| {
            HermMatrix::diag(&[x.matrix()[(0, 0)].re, x.matrix()[(1, 1)].re])
        })
        .unwrap();
        let j = choi_matrix(&diag).unwrap();
        let m = j.matrix();
        assert!((m - DMatrix::from_diagonal(&m.diagonal())).norm() < 1e-12);
        let k = choi_kraus(&diag, 1e-9).unwrap();
        assert_eq!(k.operators.len(), 2);
        for e in HermBasis::canonical(2).elements {
            assert!((&k.apply(&e) - &diag.eval_herm(&e).unwrap()).norm() < 1e-12);
        }
    }

    #[test]
    fn trace_map_has_diagonal_choi() {
        let tr = CpMap::on_algebra(2, 2, |x| HermMatrix::identity(2).scale(x.trace() / 2.0)).unwrap();
        let j = choi_matrix(&tr).unwrap();
        assert!((&j - &HermMatrix::identity(4).scale(0.5)).norm() < 1e-12);
    }

    #[test]
    fn cone_source_checks() {
        let c = PolyhedralCone::orthant(2);
        let good = CpMap::on_generators(&c, vec![HermMatrix::diag(&[1.0, 2.0]), HermMatrix::diag(&[0.5, 0.0])]).unwrap();
        assert_eq!(cp_check(&good, 1e-9).unwrap().status, CpStatus::Cp);
        let bad = CpMap::on_generators(&c, vec![HermMatrix::diag(&[1.0, -1.0]), HermMatrix::zeros(2)]).unwrap();
        assert_eq!(cp_check(&bad, 1e-9).unwrap().status, CpStatus::NotCp);
    }

    #[test]
    fn inconsistent_values_rejected() {
        let c = PolyhedralCone::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let p = vec![HermMatrix::identity(1), HermMatrix::identity(1)];
        let ok = CpMap::on_generators(&c, vec![p[0].clone(), p[1].clone(), HermMatrix::diag(&[2.0])]);
        assert!(ok.is_ok());
        let bad = CpMap::on_generators(&c, vec![p[0].clone(), p[1].clone(), HermMatrix::diag(&[3.0])]);
        assert!(bad.is_err());
    }

    #[test]
    fn extension_of_full_algebra_is_the_map() {
        let diag = CpMap::on_algebra(2, 2, |x| {
            HermMatrix::diag(&[x.matrix()[(0, 0)].re, x.matrix()[(1, 1)].re])
        })
        .unwrap();
        let e = cp_extend(&diag, 1e-8).unwrap();
        assert_eq!(e.status, ExtensionStatus::Extended);
        assert!(e.restriction_error < 1e-8);
        let ext = e.map.unwrap();
        for b in HermBasis::canonical(2).elements {
            assert!((&ext.eval_herm(&b).unwrap() - &diag.eval_herm(&b).unwrap()).norm() < 1e-7);
        }
    }

    #[test]
    fn unital_extension_from_identity() {
        let phi = CpMap::on_subspace(2, vec![HermMatrix::identity(2)], vec![HermMatrix::identity(3)]).unwrap();
        let e = cp_extend(&phi, 1e-8).unwrap();
        assert_eq!(e.status, ExtensionStatus::Extended);
        assert!(e.warning.is_none());
        assert!(e.restriction_error < 1e-8);
        assert!(e.choi_min_eig > 0.0);
    }

    #[test]
    fn diagonal_subspace_extension() {
        let p1 = HermMatrix::from_row_slice(2, &[2.0, 1.0, 1.0, 1.0]).unwrap();
        let p2 = HermMatrix::diag(&[0.0, 3.0]);
        let phi = CpMap::on_subspace(
            2,
            vec![HermMatrix::unit(2, 0), HermMatrix::unit(2, 1)],
            vec![p1.clone(), p2.clone()],
        )
        .unwrap();
        let e = cp_extend(&phi, 1e-8).unwrap();
        assert_eq!(e.status, ExtensionStatus::Extended);
        assert!(e.restriction_error < 1e-8);
        assert!(e.choi_min_eig >= -1e-8);
        // the explicit extension X -> X_11 P_1 + X_22 P_2 is CP as well
        let explicit = CpMap::on_algebra(2, 2, |x| &p1.scale(x.matrix()[(0, 0)].re) + &p2.scale(x.matrix()[(1, 1)].re)).unwrap();
        assert!(choi_matrix(&explicit).unwrap().min_eig() >= -1e-12);
    }

    #[test]
    fn improper_subspace_warns() {
        let phi = CpMap::on_subspace(2, vec![HermMatrix::unit(2, 0)], vec![HermMatrix::identity(1)]).unwrap();
        let e = cp_extend(&phi, 1e-8).unwrap();
        assert!(e.warning.is_some());
    }

    #[test]
    fn non_positive_subspace_map_has_no_extension() {
        // E_11 -> -1 cannot extend positively
        let phi = CpMap::on_subspace(
            2,
            vec![HermMatrix::unit(2, 0), HermMatrix::identity(2)],
            vec![HermMatrix::diag(&[-1.0]), HermMatrix::diag(&[1.0])],
        )
        .unwrap();
        let e = cp_extend(&phi, 1e-8).unwrap();
        assert_eq!(e.status, ExtensionStatus::Infeasible);
    }

    #[test]
    fn positive_extension_on_orthant() {
        let c = PolyhedralCone::orthant(2);
        let z = vec![DVector::from_vec(vec![1.0, 1.0])];
        let v = vec![HermMatrix::identity(2)];
        let e = positive_extension(&c, &z, &v, 1e-8).unwrap();
        assert_eq!(e.status, ExtensionStatus::Extended);
        let m = e.map.unwrap();
        assert!((&m.apply_herm(&z[0]).unwrap() - &v[0]).norm() < 1e-9);
        assert!(e.min_eig >= -1e-9);
    }

    #[test]
    fn json_round_trip() {
        let c = PolyhedralCone::orthant(2);
        let m = CpMap::on_generators(&c, vec![HermMatrix::identity(1), HermMatrix::zeros(1)]).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains(r#""values":[{"gen":0"#));
        let back: CpMap = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }
}
