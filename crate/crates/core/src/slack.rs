//! The slack pairing and verification of factorizations through a target
//! system.
//!
//! The source system is always `C^min` for a polyhedral cone `C`, which is
//! generated by the cone generators at level one. Its dual is generated by
//! maps `c -> l(c) qq*` with `l` a facet of `C^v` and `q` from a fixed rank-one
//! family, see [`dual_generators`].

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cones::{self, PolyhedralCone};
use crate::cpmaps::{cp_check, CpMap, CpStatus, KrausDecomposition};
use crate::error::{Error, Result};
use crate::herm::{herm_coords, rank1_decompose, HermBasis, HermMatrix, C64};
use crate::linalg;
use crate::opsys::{apply_levelwise, membership, Codomain, LinearMap, MatrixElement, OperatorSystem};

/// Tolerance for matching alpha against its declared linear map.
pub const LINEAR_TOL: f64 = 1e-9;

/// `phi[a]`, of size `s t`.
pub fn slack_eval(a: &MatrixElement, phi: &CpMap) -> Result<HermMatrix> {
    let map = phi.linear_map();
    Ok(apply_levelwise(&map, a)?.into_herm().expect("CP maps land in Her_t"))
}

/// The rank-one templates `q` spanning `Her_t`: `e_i`, `e_i + e_j`, `e_i + i e_j`.
pub fn rank_one_templates(t: usize) -> Vec<DVector<C64>> {
    let unit = |i: usize| {
        let mut v = DVector::zeros(t);
        v[i] = C64::new(1.0, 0.0);
        v
    };
    let mut out: Vec<DVector<C64>> = (0..t).map(unit).collect();
    for i in 0..t {
        for j in (i + 1)..t {
            out.push(unit(i) + unit(j));
            let mut v = unit(i);
            v[j] = C64::new(0.0, 1.0);
            out.push(v);
        }
    }
    out
}

/// Generators of the dual of `C^min` at levels `1..=t_max`.
pub fn dual_generators(cone: &PolyhedralCone, t_max: usize) -> Result<Vec<CpMap>> {
    let dd = cones::dual_generators(cone)?;
    let mut out = Vec::new();
    for t in 1..=t_max {
        for f in &dd.facets {
            let l = f / f.norm();
            for q in rank_one_templates(t) {
                let qq = HermMatrix::outer(&q);
                let values = cone.generators().iter().map(|c| qq.scale(l.dot(c))).collect();
                out.push(CpMap::on_generators(cone, values)?);
            }
        }
    }
    Ok(out)
}

/// One entry of a tabulated beta.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaEntry {
    pub dual: CpMap,
    /// `beta(dual)` as a map from the target's coordinates into `Her_t`.
    pub value: LinearMap,
}

/// How beta is evaluated on dual maps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Beta {
    /// `X -> sum_(l,k) V_lk* X V_lk` with `V_lk = e_l q_lk*` and
    /// `phi(c_l) = sum_k q_lk q_lk*`. Target is `Her_m`, one slot per generator.
    DiagonalKraus,
    /// Values given on a finite list of dual maps.
    Table { entries: Vec<BetaEntry> },
}

/// Maps `alpha` on cone generators and `beta` on dual maps through a target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Factorization {
    pub cone: PolyhedralCone,
    pub target: OperatorSystem,
    /// `alpha(c_j)` in the target's coordinates.
    pub alpha: Vec<DVector<f64>>,
    pub beta: Beta,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear_alpha: Option<LinearMap>,
}

/// The Kraus operators of [`Beta::DiagonalKraus`] at a dual map.
pub fn diagonal_kraus(cone: &PolyhedralCone, phi: &CpMap) -> Result<KrausDecomposition> {
    let m = cone.num_generators();
    let t = phi.t();
    let mut ops = Vec::new();
    for (l, c) in cone.generators().iter().enumerate() {
        let p = phi.eval_vector(c)?;
        let qs = rank1_decompose(&p, 1e-13 * (1.0 + p.norm()))?;
        for q in qs {
            let mut v = DMatrix::zeros(m, t);
            for a in 0..t {
                v[(l, a)] = q[a].conj();
            }
            ops.push(v);
        }
    }
    KrausDecomposition::new(m, t, ops)
}

fn same_map(a: &CpMap, b: &CpMap) -> bool {
    let (ma, mb) = (a.linear_map(), b.linear_map());
    ma.codomain == mb.codomain
        && ma.matrix.shape() == mb.matrix.shape()
        && (&ma.matrix - &mb.matrix).norm() <= 1e-9 * (1.0 + ma.matrix.norm())
}

impl Factorization {
    /// `beta(phi)` as a map from target coordinates into `Her_t`.
    pub fn beta(&self, phi: &CpMap) -> Result<LinearMap> {
        match &self.beta {
            Beta::DiagonalKraus => {
                let m = self.cone.num_generators();
                if self.target.ambient_dim() != m * m {
                    return Err(Error::InvalidInput("diagonal Kraus beta needs the target Her_m".into()));
                }
                Ok(diagonal_kraus(&self.cone, phi)?.linear_map())
            }
            Beta::Table { entries } => entries
                .iter()
                .find(|e| same_map(&e.dual, phi))
                .map(|e| e.value.clone())
                .ok_or_else(|| {
                    Error::IncompleteFactorization(format!(
                        "no beta value for dual map with values {:?}",
                        phi.values()
                    ))
                }),
        }
    }

    fn alpha_at(&self, j: usize) -> Result<&DVector<f64>> {
        let a = self
            .alpha
            .get(j)
            .ok_or_else(|| Error::IncompleteFactorization(format!("no alpha value for generator {j}")))?;
        if a.len() != self.target.ambient_dim() {
            return Err(Error::Shape(format!(
                "alpha value for generator {j} has length {}, target lives in R^{}",
                a.len(),
                self.target.ambient_dim()
            )));
        }
        Ok(a)
    }
}

/// Outcome of [`verify_factorization`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorizationReport {
    pub pass: bool,
    pub max_dev: f64,
    /// `(generator, dual)` indices of the largest deviation.
    pub worst_pair: Option<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Compares `phi(c_j)` with `beta(phi)[alpha(c_j)]` on every pair.
///
/// Deviations are `||lhs - rhs||_F / (1 + ||lhs||_F)`.
pub fn verify_factorization(f: &Factorization, duals: &[CpMap], tol: f64) -> Result<FactorizationReport> {
    let gens = f.cone.generators();
    if gens.is_empty() {
        return Err(Error::InvalidInput("cone has no generators".into()));
    }
    let alphas = (0..gens.len()).map(|j| f.alpha_at(j)).collect::<Result<Vec<_>>>()?;
    let mut warnings = Vec::new();
    if duals.is_empty() {
        warnings.push("no dual generators given; verification is vacuous".to_string());
    }
    for (j, a) in alphas.iter().enumerate() {
        let r = membership(&f.target, &MatrixElement::from_vector(a), tol)?;
        if !r.is_member() {
            warnings.push(format!("alpha(c_{j}) is not accepted by the target ({:?})", r.status));
        }
    }
    let mut max_dev = 0.0_f64;
    let mut worst_pair = None;
    for (k, phi) in duals.iter().enumerate() {
        let b = f.beta(phi)?;
        if b.domain != f.target.ambient_dim() {
            return Err(Error::Shape(format!("beta value for dual {k} has the wrong domain")));
        }
        for (j, (c, a)) in gens.iter().zip(&alphas).enumerate() {
            let lhs = phi.eval_vector(c)?;
            let rhs = b
                .apply_herm(a)
                .ok_or_else(|| Error::Shape("beta values must land in Her_t".into()))?;
            let dev = (&lhs - &rhs).norm() / (1.0 + lhs.norm());
            if worst_pair.is_none() || dev > max_dev {
                max_dev = dev;
                worst_pair = Some((j, k));
            }
        }
    }
    Ok(FactorizationReport {
        pass: max_dev <= tol,
        max_dev,
        worst_pair,
        warnings,
    })
}

/// Verdict of [`verify_linear`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Linearity {
    /// The declared `psi` is CP and agrees with alpha.
    Linear,
    /// The declared `psi` fails, or no linear map can agree with alpha.
    NotLinear,
    /// No `psi` declared, though alpha is consistent with some linear map.
    NotApplicable,
}

/// Checks that alpha is `psi (x) id` for a CP `psi`.
///
/// Without a declared `psi`, alpha is tested for consistency with the linear
/// relations among the generators.
pub fn verify_linear(f: &Factorization, tol: f64) -> Result<Linearity> {
    let m = f.cone.num_generators();
    let alphas = (0..m).map(|j| f.alpha_at(j).cloned()).collect::<Result<Vec<_>>>()?;
    let a = DMatrix::from_columns(&alphas);
    let g = f.cone.generator_matrix();
    let Some(psi) = &f.linear_alpha else {
        let fit = &a * linalg::pinv(&g, linalg::RANK_TOL) * &g;
        let dev = (&fit - &a).norm() / (1.0 + a.norm());
        return Ok(if dev > LINEAR_TOL.max(tol) {
            Linearity::NotLinear
        } else {
            Linearity::NotApplicable
        });
    };
    if psi.domain != f.cone.dim() || psi.codomain.real_dim() != f.target.ambient_dim() {
        return Err(Error::Shape("declared linear alpha has the wrong shape".into()));
    }
    let dev = (&psi.matrix * &g - &a).norm() / (1.0 + a.norm());
    if dev > LINEAR_TOL.max(tol) {
        return Ok(Linearity::NotLinear);
    }
    // C^min is generated at level one, so psi is CP iff it maps generators into T_1
    for c in f.cone.generators() {
        let r = membership(&f.target, &MatrixElement::from_vector(&psi.apply(c)), tol)?;
        if !r.is_member() {
            return Ok(Linearity::NotLinear);
        }
    }
    Ok(Linearity::Linear)
}

/// Whether every tabulated or constructed beta value is CP on the target.
///
/// Only `Her_d` (canonical pencil) and minimal targets are checked; others
/// are reported as `Inconclusive`.
pub fn check_beta(f: &Factorization, duals: &[CpMap], tol: f64) -> Result<CpStatus> {
    let mut status = CpStatus::Cp;
    for phi in duals {
        let b = f.beta(phi)?;
        let Codomain::Herm(t) = b.codomain else {
            return Err(Error::Shape("beta values must land in Her_t".into()));
        };
        let map = match &f.target {
            OperatorSystem::FreeSpectrahedron { a } if is_canonical_pencil(a) => {
                CpMap::on_algebra(a[0].dim(), t, |x| {
                    b.apply_herm(&herm_coords(x)).expect("Herm codomain")
                })?
            }
            OperatorSystem::Minimal { cone } => {
                let vals = cone.generators().iter().map(|c| b.apply_herm(c).expect("Herm codomain")).collect();
                CpMap::on_generators(cone, vals)?
            }
            _ => return Ok(CpStatus::Inconclusive),
        };
        match cp_check(&map, tol)?.status {
            CpStatus::Cp => {}
            CpStatus::NotCp => return Ok(CpStatus::NotCp),
            CpStatus::Inconclusive => status = CpStatus::Inconclusive,
        }
    }
    Ok(status)
}

/// Whether a pencil is the canonical basis of `Her_d`.
pub fn is_canonical_pencil(a: &[HermMatrix]) -> bool {
    let Some(d) = a.first().map(HermMatrix::dim) else {
        return false;
    };
    let basis = HermBasis::canonical(d);
    basis.len() == a.len() && basis.elements.iter().zip(a).all(|(x, y)| (x - y).norm() < 1e-14)
}
