//! Lifts from factorizations and factorizations from lifts.
//!
//! A lift of `C^min` is a presentation `pi[gamma^{-1}[T]]` over a subspace `Z`
//! of `X (+) Y`. From a factorization `(alpha, beta)` the subspace is cut out by
//! `phi(x) = beta(phi)(y)` over the dual generators; conversely, a proper lift
//! yields alpha through fiber points and beta through CP extension.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cones::PolyhedralCone;
use crate::cpmaps::{cp_extend, CpMap, ExtensionStatus};
use crate::error::{Error, Result};
use crate::herm::{herm_coords, HermMatrix};
use crate::linalg;
use crate::opsys::{fiber_search, interior_margin, Codomain, LinearMap, MatrixElement, OperatorSystem};
use crate::sdp::SdpStatus;
use crate::slack::{
    dual_generators, verify_factorization, verify_linear, Beta, BetaEntry, Factorization, Linearity,
};

/// Default number of dual generator levels.
pub const DEFAULT_T_MAX: usize = 2;

/// Tolerance used when a construction verifies its own output.
pub const VERIFY_TOL: f64 = 1e-7;

/// A lift `pi[gamma^{-1}[T]]` with `Z` given by a basis in `R^n (+) R^k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiftData {
    #[serde(rename = "Z_basis")]
    pub z_basis: Vec<DVector<f64>>,
    pub pi: LinearMap,
    pub gamma: LinearMap,
    pub target: OperatorSystem,
    /// Smallest dual level from which `dim Z` no longer changed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stabilization: Option<usize>,
}

impl LiftData {
    pub fn dim(&self) -> usize {
        self.pi.domain
    }

    /// The lifted operator system.
    pub fn system(&self) -> Result<OperatorSystem> {
        OperatorSystem::lifted(self.pi.clone(), self.gamma.clone(), self.target.clone())
    }
}

fn require_proper(cone: &PolyhedralCone) -> Result<()> {
    OperatorSystem::minimal(cone.clone()).map(|_| ())
}

fn slack_rows(f: &Factorization, duals: &[CpMap]) -> Result<DMatrix<f64>> {
    let n = f.cone.dim();
    let k = f.target.ambient_dim();
    let mut blocks: Vec<DMatrix<f64>> = Vec::new();
    for phi in duals {
        let p = phi.linear_map().matrix;
        let b = f.beta(phi)?.matrix;
        let mut rows = DMatrix::zeros(p.nrows(), n + k);
        rows.view_mut((0, 0), (p.nrows(), n)).copy_from(&p);
        rows.view_mut((0, n), (p.nrows(), k)).copy_from(&(-b));
        blocks.push(rows);
    }
    let total: usize = blocks.iter().map(DMatrix::nrows).sum();
    let mut out = DMatrix::zeros(total, n + k);
    let mut r = 0;
    for b in blocks {
        out.view_mut((r, 0), b.shape()).copy_from(&b);
        r += b.nrows();
    }
    Ok(out)
}

/// `Z = {(x, y) : phi(x) = beta(phi)(y)}` over the dual generators up to `t_max`.
pub fn lift_from_factorization(f: &Factorization, t_max: usize) -> Result<LiftData> {
    require_proper(&f.cone)?;
    if !matches!(
        f.target,
        OperatorSystem::FreeSpectrahedron { .. } | OperatorSystem::Minimal { .. }
    ) {
        return Err(Error::Capability(format!(
            "lifts need a free spectrahedral or minimal target, got {}",
            f.target.variant_name()
        )));
    }
    if t_max == 0 {
        return Err(Error::InvalidInput("t_max must be at least 1".into()));
    }
    let duals = dual_generators(&f.cone, t_max)?;
    let report = verify_factorization(f, &duals, VERIFY_TOL)?;
    if !report.pass {
        return Err(Error::Construction(format!(
            "factorization fails verification (deviation {:.3e} at pair {:?})",
            report.max_dev, report.worst_pair
        )));
    }
    let n = f.cone.dim();
    let k = f.target.ambient_dim();
    let mut dims = Vec::new();
    let mut z = DMatrix::zeros(n + k, 0);
    for t in 1..=t_max {
        let level: Vec<CpMap> = duals.iter().filter(|phi| phi.t() <= t).cloned().collect();
        z = linalg::nullspace(&slack_rows(f, &level)?, linalg::RANK_TOL);
        dims.push(z.ncols());
    }
    let last = *dims.last().expect("t_max >= 1");
    let stabilization = dims.iter().position(|&d| d == last).map(|i| i + 1);
    let p = z.ncols();
    let pi = LinearMap::new(p, Codomain::Vector(n), z.rows(0, n).into_owned())?;
    let gamma = LinearMap::new(p, target_codomain(&f.target), z.rows(n, k).into_owned())?;
    if gamma.rank() != p {
        return Err(Error::Construction(format!(
            "gamma has rank {} on Z of dimension {p}; some beta value is inconsistent",
            gamma.rank()
        )));
    }
    Ok(LiftData {
        z_basis: z.column_iter().map(|c| c.into_owned()).collect(),
        pi,
        gamma,
        target: f.target.clone(),
        stabilization,
    })
}

fn target_codomain(t: &OperatorSystem) -> Codomain {
    Codomain::Vector(t.ambient_dim())
}

/// The pencil map `y -> sum_l A_l y_l` in `Her_d` coordinates.
fn pencil_map(pencil: &[HermMatrix]) -> LinearMap {
    LinearMap::from_herm_values(pencil).expect("nonempty pencil")
}

/// Alpha through max-min-eigenvalue fiber points, beta through CP extension
/// of `phi o pi` from `gamma(Z)`.
///
/// Requires a free spectrahedral target whose pencil meets `gamma(Z)` in a
/// positive definite matrix.
pub fn factorization_from_lift(l: &LiftData, cone: &PolyhedralCone, t_max: usize, tol: f64) -> Result<Factorization> {
    require_proper(cone)?;
    let OperatorSystem::FreeSpectrahedron { a: pencil } = &l.target else {
        return Err(Error::Capability(format!(
            "factorization extraction needs a free spectrahedral target, got {}",
            l.target.variant_name()
        )));
    };
    if l.pi.codomain.real_dim() != cone.dim() {
        return Err(Error::Shape("lift and cone live in different spaces".into()));
    }
    let d = pencil[0].dim();
    let pm = pencil_map(pencil);
    let images: Vec<HermMatrix> = (0..l.dim())
        .map(|q| {
            pm.apply_herm(&l.gamma.matrix.column(q).into_owned())
                .expect("Herm codomain")
        })
        .collect();
    let margin = interior_margin(&images)?;
    if margin <= tol {
        return Err(Error::Properness(format!(
            "gamma(Z) contains no positive definite matrix (margin {margin:.3e})"
        )));
    }
    let mut alpha = Vec::with_capacity(cone.num_generators());
    for (j, c) in cone.generators().iter().enumerate() {
        let fib = fiber_search(&l.pi, &l.gamma, &l.target, &MatrixElement::from_vector(c))?;
        let ok = matches!(fib.status, SdpStatus::Optimal | SdpStatus::Feasible) && fib.value >= -tol;
        if !ok {
            return Err(Error::Construction(format!(
                "generator {j} has no fiber point (status {:?}, margin {:.3e}); not a lift of the cone",
                fib.status, fib.value
            )));
        }
        let z = DVector::from_iterator(l.dim(), fib.z.iter().map(|h| h.matrix()[(0, 0)].re));
        alpha.push(l.gamma.apply(&z));
    }
    let duals = dual_generators(cone, t_max)?;
    let mut entries = Vec::with_capacity(duals.len());
    for (k, phi) in duals.iter().enumerate() {
        let values = (0..l.dim())
            .map(|q| phi.eval_vector(&l.pi.matrix.column(q).into_owned()))
            .collect::<Result<Vec<_>>>()?;
        let sub = CpMap::on_subspace(d, images.clone(), values)?;
        let ext = cp_extend(&sub, tol)?;
        let map = match (ext.status, ext.map) {
            (ExtensionStatus::Extended, Some(m)) => m,
            (status, _) => {
                return Err(Error::Properness(format!(
                    "dual generator {k} has no CP extension from gamma(Z) ({status:?}, bound {:.3e})",
                    ext.dual_bound
                )))
            }
        };
        entries.push(BetaEntry {
            dual: phi.clone(),
            value: map.linear_map().compose(&pm)?,
        });
    }
    let f = Factorization {
        cone: cone.clone(),
        target: l.target.clone(),
        alpha,
        beta: Beta::Table { entries },
        linear_alpha: None,
    };
    let report = verify_factorization(&f, &duals, VERIFY_TOL.max(tol))?;
    if !report.pass {
        return Err(Error::Construction(format!(
            "extracted factorization fails verification (deviation {:.3e} at pair {:?})",
            report.max_dev, report.worst_pair
        )));
    }
    Ok(f)
}

/// `psi^{-1}[T]` for a verified linear factorization.
pub fn realization_from_linear_factorization(f: &Factorization, t_max: usize, tol: f64) -> Result<OperatorSystem> {
    require_proper(&f.cone)?;
    let Some(psi) = &f.linear_alpha else {
        return Err(Error::InvalidInput("factorization declares no linear alpha".into()));
    };
    let duals = dual_generators(&f.cone, t_max)?;
    let report = verify_factorization(f, &duals, tol)?;
    if !report.pass {
        return Err(Error::Construction(format!(
            "factorization fails verification (deviation {:.3e} at pair {:?})",
            report.max_dev, report.worst_pair
        )));
    }
    if verify_linear(f, tol)? != Linearity::Linear {
        return Err(Error::Construction("alpha is not psi (x) id for a CP psi".into()));
    }
    OperatorSystem::inverse_image(psi.clone(), f.target.clone())
}

/// Diagonal factorization of `C^min` through `Her_m`: `alpha(c_i) = E_ii` and
/// beta built from rank-one decompositions of `phi(c_i)`.
///
/// Alpha is declared linear when the generators are linearly independent.
pub fn polyhedral_factorization(cone: &PolyhedralCone) -> Result<Factorization> {
    require_proper(cone)?;
    let m = cone.num_generators();
    let alpha: Vec<DVector<f64>> = (0..m).map(|i| herm_coords(&HermMatrix::unit(m, i))).collect();
    let g = cone.generator_matrix();
    let linear_alpha = (linalg::rank(&g, linalg::RANK_TOL) == m).then(|| {
        let a = DMatrix::from_columns(&alpha);
        LinearMap::new(cone.dim(), Codomain::Herm(m), a * linalg::pinv(&g, linalg::RANK_TOL))
            .expect("shapes match")
    });
    Ok(Factorization {
        cone: cone.clone(),
        target: OperatorSystem::psd(m),
        alpha,
        beta: Beta::DiagonalKraus,
        linear_alpha,
    })
}

/// The linear factorization of `(R_+^n)^min` through `Her_n`.
pub fn simplex_factorization(n: usize) -> Result<Factorization> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be positive".into()));
    }
    polyhedral_factorization(&PolyhedralCone::orthant(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opsys::membership;

    #[test]
    fn simplex_lift_dimensions() {
        let f = simplex_factorization(2).unwrap();
        let l = lift_from_factorization(&f, 2).unwrap();
        // x = diag(Y), off-diagonal Y free
        assert_eq!(l.dim(), 4);
        assert_eq!(l.stabilization, Some(1));
        assert_eq!(l.gamma.rank(), 4);
        for b in &l.z_basis {
            let y = HermMatrix::new(
                crate::herm::herm_from_coords(2, &b.as_slice()[2..]).unwrap().into_matrix(),
            )
            .unwrap();
            for i in 0..2 {
                assert!((b[i] - y.matrix()[(i, i)].re).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn simplex_lift_membership() {
        let f = simplex_factorization(2).unwrap();
        let sys = lift_from_factorization(&f, 2).unwrap().system().unwrap();
        let inside = MatrixElement::from_vector(&DVector::from_vec(vec![1.0, 2.0]));
        let outside = MatrixElement::from_vector(&DVector::from_vec(vec![1.0, -0.1]));
        assert!(membership(&sys, &inside, 1e-8).unwrap().is_member());
        assert!(!membership(&sys, &outside, 1e-8).unwrap().is_member());
    }

    #[test]
    fn redundant_generator_lift() {
        let cone = PolyhedralCone::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let f = polyhedral_factorization(&cone).unwrap();
        assert!(f.linear_alpha.is_none());
        let l = lift_from_factorization(&f, 2).unwrap();
        assert_eq!(l.dim(), 9);
        let sys = l.system().unwrap();
        let x = MatrixElement::from_vector(&DVector::from_vec(vec![0.5, 0.25]));
        assert!(membership(&sys, &x, 1e-8).unwrap().is_member());
    }

    #[test]
    fn round_trip_simplex() {
        let f = simplex_factorization(2).unwrap();
        let l = lift_from_factorization(&f, 2).unwrap();
        let g = factorization_from_lift(&l, &f.cone, 2, 1e-8).unwrap();
        let duals = dual_generators(&f.cone, 2).unwrap();
        let r = verify_factorization(&g, &duals, 1e-7).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn identity_fs_realization() {
        // R_+^2 as the diagonal free spectrahedron with pi = id
        let pencil = vec![HermMatrix::unit(2, 0), HermMatrix::unit(2, 1)];
        let l = LiftData {
            z_basis: vec![],
            pi: LinearMap::identity(2),
            gamma: LinearMap::identity(2),
            target: OperatorSystem::free_spectrahedron(pencil).unwrap(),
            stabilization: None,
        };
        let cone = PolyhedralCone::orthant(2);
        let f = factorization_from_lift(&l, &cone, 2, 1e-8).unwrap();
        for (i, a) in f.alpha.iter().enumerate() {
            let mut e = DVector::zeros(2);
            e[i] = 1.0;
            assert!((a - e).norm() < 1e-7, "{a}");
        }
    }

    #[test]
    fn improper_lift_rejected() {
        // gamma lands in the face spanned by E_11 of P^2
        let l = LiftData {
            z_basis: vec![],
            pi: LinearMap::identity(1),
            gamma: LinearMap::new(1, Codomain::Vector(4), DMatrix::from_column_slice(4, 1, &[1.0, 0.0, 0.0, 0.0]))
                .unwrap(),
            target: OperatorSystem::psd(2),
            stabilization: None,
        };
        let cone = PolyhedralCone::orthant(1);
        assert!(matches!(
            factorization_from_lift(&l, &cone, 1, 1e-8),
            Err(Error::Properness(_))
        ));
    }

    #[test]
    fn zero_psi_rejected() {
        let mut f = simplex_factorization(2).unwrap();
        for a in &mut f.alpha {
            a.fill(0.0);
        }
        if let Some(psi) = &mut f.linear_alpha {
            psi.matrix.fill(0.0);
        }
        assert!(realization_from_linear_factorization(&f, 2, 1e-9).is_err());
    }

    #[test]
    fn simplex_realization() {
        let f = simplex_factorization(3).unwrap();
        let sys = realization_from_linear_factorization(&f, 2, 1e-9).unwrap();
        assert_eq!(sys.variant_name(), "inverse_image");
        let x = MatrixElement::from_vector(&DVector::from_vec(vec![1.0, 0.0, 2.0]));
        assert!(membership(&sys, &x, 1e-9).unwrap().is_member());
    }

    #[test]
    fn improper_cone_rejected() {
        let c = PolyhedralCone::from_rows(&[vec![1.0, 0.0]]).unwrap();
        assert!(polyhedral_factorization(&c).is_err());
    }
}
