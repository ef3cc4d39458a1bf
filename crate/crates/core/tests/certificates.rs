//! Every certificate handed out is re-checked from scratch here.

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use oplift::cones::{self, PolyhedralCone};
use oplift::opsys::{min_membership, separator_image, MatrixElement, MembershipStatus, Witness};
use oplift::sample::{gaussian_matrix, random_member, random_non_member};
use oplift::sdp::{self, BlockKind, SdpProblem, SdpStatus, SparseSym};
use oplift::sos::{monomials_up_to, recheck_not_sos, sos_certify, sum_of_squares, HermMatrixPoly, MatrixPoly, SosVerdict};
use oplift::HermMatrix;

fn check_witness(cone: &PolyhedralCone, a: &MatrixElement, w: &Witness) -> Result<(), TestCaseError> {
    match w {
        Witness::Decomposition { q } => {
            let mut back = MatrixElement::zeros(cone.dim(), a.level());
            for (c, qj) in cone.generators().iter().zip(q) {
                prop_assert!(qj.min_eig() >= -1e-8 * (1.0 + qj.norm()));
                back = back.add(&MatrixElement::tensor(c, qj)).unwrap();
            }
            prop_assert!(back.sub(a).unwrap().norm() <= 1e-7 * (1.0 + a.norm()));
        }
        Witness::Separator { phi } => {
            for c in cone.generators() {
                let img = separator_image(phi, &MatrixElement::from_vector(c));
                prop_assert!(img.min_eig() >= -1e-10);
            }
            prop_assert!(separator_image(phi, a).min_eig() < 0.0);
        }
        Witness::Fiber { .. } => prop_assert!(false, "minimal membership returned a fiber"),
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn membership_witnesses_verify(seed in any::<u64>(), square in any::<bool>(), s in 1usize..=3, member in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cone = if square { PolyhedralCone::square() } else { PolyhedralCone::orthant(3) };
        let facets = cones::dual_generators(&cone).unwrap().facets;
        let a = if member {
            random_member(&mut rng, &cone, s)
        } else {
            random_non_member(&mut rng, &cone, &facets, s).0
        };
        let r = min_membership(&cone, &a, 1e-8).unwrap();
        let want = if member { MembershipStatus::Member } else { MembershipStatus::NotMember };
        prop_assert_eq!(r.status, want);
        check_witness(&cone, &a, r.witness.as_ref().unwrap())?;
    }

    #[test]
    fn sos_certificates_reassemble(seed in any::<u64>(), n in 1usize..=2, t in 1usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let real = rng.random_bool(0.5);
        let terms = monomials_up_to(n, 1)
            .into_iter()
            .map(|e| (e, gaussian_matrix(&mut rng, t, t, real)))
            .collect();
        let h = sum_of_squares(&[MatrixPoly { n_vars: n, rows: t, cols: t, terms }], n, t);
        let SosVerdict::Certificate(cert) = sos_certify(&h, None, 1e-8).unwrap() else {
            return Err(TestCaseError::fail("a sum of squares was not certified"));
        };
        prop_assert!(cert.gram.min_eig() >= -1e-12);
        let back = sum_of_squares(&cert.factors, n, t);
        prop_assert!(back.sub(&h).unwrap().max_coeff_norm() <= 1e-7);
    }

    #[test]
    fn not_sos_certificates_recheck(seed in any::<u64>(), n in 1usize..=2, t in 1usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let terms = monomials_up_to(n, 1)
            .into_iter()
            .map(|e| (e, gaussian_matrix(&mut rng, t, t, false)))
            .collect();
        let h = sum_of_squares(&[MatrixPoly { n_vars: n, rows: t, cols: t, terms }], n, t);
        let eps = h.eval(&vec![0.0; n]).unwrap().min_eig() + 0.5;
        let bad = h.sub(&HermMatrixPoly::constant(n, HermMatrix::identity(t).scale(eps))).unwrap();
        let SosVerdict::NotSos(cert) = sos_certify(&bad, None, 1e-8).unwrap() else {
            return Err(TestCaseError::fail("negative at the origin but not rejected"));
        };
        let (eig, pairing) = recheck_not_sos(&bad, &cert).unwrap();
        prop_assert!(eig >= 0.0);
        prop_assert!(pairing < 0.0);
    }

    #[test]
    fn lp_farkas_rays_verify(seed in any::<u64>(), m in 1usize..=4, n in 1usize..=5) {
        // positive rows with a negative right-hand side cannot be met by x >= 0
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = SdpProblem::new(vec![BlockKind::Nonneg(n)]);
        let bad_row = rng.random_range(0..m);
        for i in 0..m {
            let row: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..2.0)).collect();
            let rhs = if i == bad_row { -rng.random_range(0.5..2.0) } else { rng.random_range(0.5..2.0) };
            p.add_constraint(vec![(0, SparseSym::from_diag(&nalgebra::DVector::from_vec(row)))], rhs);
        }
        let s = sdp::solve(&p).unwrap();
        prop_assert_eq!(s.status, SdpStatus::Infeasible);
        let cert = s.certificate.unwrap();
        prop_assert!(sdp::verify_certificate(&p, &cert) < 0.0);
    }
}

#[test]
fn sdp_optimum_brackets_eigenvalue() {
    // min <C, X> over tr X = 1 is the smallest eigenvalue of C
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in 2..=5 {
        let g = gaussian_matrix(&mut rng, n, n, true).map(|z| z.re);
        let c = (&g + g.transpose()) * 0.5;
        let mut p = SdpProblem::new(vec![BlockKind::Psd(n)]);
        p.objective[0] = SparseSym::from_dense(&c);
        p.add_constraint(vec![(0, SparseSym::from_dense(&DMatrix::identity(n, n)))], 1.0);
        let s = sdp::solve(&p).unwrap();
        let lmin = c.symmetric_eigenvalues().min();
        assert_eq!(s.status, SdpStatus::Optimal);
        assert!((s.primal_objective - lmin).abs() < 1e-7, "{} vs {lmin}", s.primal_objective);
        assert!(s.dual_objective <= s.primal_objective + 1e-9);
    }
}
