//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use oplift::cones::{self, PolyhedralCone};
use oplift::cpmaps::{cp_extend, CpMap, ExtensionStatus};
use oplift::herm::HermMatrix;
use oplift::lift::{
    factorization_from_lift, lift_from_factorization, polyhedral_factorization, realization_from_linear_factorization,
    simplex_factorization,
};
use oplift::opsys::{membership, min_membership, separator_image, Witness};
use oplift::sample::{
    random_cp_map, random_herm, random_member, random_non_member, random_positive_map, random_psd,
};
use oplift::sdp::{self, BlockKind, Certificate, SdpProblem, SdpStatus, SparseSym};
use oplift::slack::{diagonal_kraus, dual_generators, verify_factorization, verify_linear, Linearity};
use oplift::sos::{
    bilinear_basis, choi_example, monomials_of_degree, scalar_compress, monomials_up_to, positivity_sample, recheck_not_sos, sos_certify,
    sos_from_lift, sum_of_squares, HermMatrixPoly, MatrixPoly, SosVerdict,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, secs: u64) -> bool {
    elapsed <= Duration::from_secs(secs)
}

fn simplex_kraus() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0_f64;
    let mut verified = true;
    for n in 2..=4 {
        let f = simplex_factorization(n).unwrap();
        for t in 1..=3 {
            let mut phis = Vec::new();
            for _ in 0..20 {
                let ps: Vec<HermMatrix> = (0..n)
                    .map(|_| {
                        let r = rng.random_range(1..=t);
                        random_psd(&mut rng, t, r)
                    })
                    .collect();
                let phi = CpMap::on_generators(&f.cone, ps.clone()).unwrap();
                let kraus = diagonal_kraus(&f.cone, &phi).unwrap();
                for (i, p) in ps.iter().enumerate() {
                    let back = kraus.apply(&HermMatrix::unit(n, i));
                    worst = worst.max((&back - p).norm() / (1.0 + p.norm()));
                }
                phis.push(phi);
            }
            phis.extend(dual_generators(&f.cone, t).unwrap());
            verified &= verify_factorization(&f, &phis, 1e-9).unwrap().pass;
        }
    }
    let el = start.elapsed();
    outcome(
        worst <= 1e-9 && verified && within(el, 10),
        format!("max rel Kraus error {worst:.2e}, verification {verified}, {:.2}s", el.as_secs_f64()),
    )
}

fn polyhedral_spectrahedrop() -> Outcome {
    let start = Instant::now();
    let cone = PolyhedralCone::square();
    let f = polyhedral_factorization(&cone).unwrap();
    let duals = dual_generators(&cone, 2).unwrap();
    let report = verify_factorization(&f, &duals, 1e-9).unwrap();
    let lin = verify_linear(&f, 1e-9).unwrap();
    let lift = lift_from_factorization(&f, 2).unwrap();
    let sys = lift.system().unwrap();
    let facets = cones::dual_generators(&cone).unwrap().facets;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut disagreements = 0;
    for s in 1..=2 {
        for _ in 0..50 {
            let a = random_member(&mut rng, &cone, s);
            let lr = membership(&sys, &a, 1e-8).unwrap();
            let mr = min_membership(&cone, &a, 1e-8).unwrap();
            let (lifted, minimal) = (lr.status, mr.status);
            if lifted != minimal || !minimal_is_member(minimal) {
                eprintln!("  member s={s}: lifted {lifted:?} ({:.2e}), minimal {minimal:?} ({:.2e})", lr.margin, mr.margin);
                disagreements += 1;
            }
        }
        for _ in 0..20 {
            let (a, _) = random_non_member(&mut rng, &cone, &facets, s);
            let lifted = membership(&sys, &a, 1e-8).unwrap().status;
            let minimal = min_membership(&cone, &a, 1e-8).unwrap().status;
            if lifted != minimal || minimal_is_member(minimal) {
                eprintln!("  non-member s={s}: lifted {lifted:?}, minimal {minimal:?}");
                disagreements += 1;
            }
        }
    }
    let el = start.elapsed();
    outcome(
        report.pass && lin == Linearity::NotLinear && disagreements == 0 && within(el, 60),
        format!(
            "verify dev {:.2e}, linearity {lin:?}, dim Z {}, {disagreements} disagreements on 140 samples, {:.2}s",
            report.max_dev,
            lift.dim(),
            el.as_secs_f64()
        ),
    )
}

fn minimal_is_member(s: oplift::opsys::MembershipStatus) -> bool {
    s == oplift::opsys::MembershipStatus::Member
}

fn round_trip() -> Outcome {
    let mut details = Vec::new();
    let mut pass = true;
    for (name, cone) in [("simplex", PolyhedralCone::orthant(3)), ("square", PolyhedralCone::square())] {
        let f = polyhedral_factorization(&cone).unwrap();
        let lift = lift_from_factorization(&f, 2).unwrap();
        let injective = lift.gamma.rank() == lift.dim();
        let g = factorization_from_lift(&lift, &cone, 2, 1e-8).unwrap();
        let r = verify_factorization(&g, &dual_generators(&cone, 2).unwrap(), 1e-7).unwrap();
        pass &= r.pass && r.max_dev <= 1e-7 && injective;
        details.push(format!("{name}: dev {:.2e}, gamma injective {injective}", r.max_dev));
    }
    outcome(pass, details.join("; "))
}

fn linear_realization() -> Outcome {
    let n = 3;
    let f = simplex_factorization(n).unwrap();
    let sys = realization_from_linear_factorization(&f, 2, 1e-9).unwrap();
    let cone = f.cone.clone();
    let facets = cones::dual_generators(&cone).unwrap().facets;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut agree, mut witnessed, mut rejected) = (0, 0, 0);
    for k in 0..100 {
        let s = 1 + k % 3;
        let a = if k % 2 == 0 {
            random_member(&mut rng, &cone, s)
        } else {
            random_non_member(&mut rng, &cone, &facets, s).0
        };
        let real = membership(&sys, &a, 1e-8).unwrap();
        let min = min_membership(&cone, &a, 1e-8).unwrap();
        if real.is_member() == min.is_member() {
            agree += 1;
        }
        if !min.is_member() {
            rejected += 1;
            if let Some(Witness::Separator { phi }) = &min.witness {
                let positive = cone.generators().iter().all(|c| {
                    let mut h = HermMatrix::zeros(phi[0].dim());
                    for (p, x) in phi.iter().zip(c.iter()) {
                        h += &p.scale(*x);
                    }
                    h.min_eig() >= -1e-12
                });
                if positive && separator_image(phi, &a).min_eig() < 0.0 {
                    witnessed += 1;
                }
            }
        }
    }
    outcome(
        agree == 100 && witnessed == rejected,
        format!("{agree}/100 agree, {witnessed}/{rejected} rejections witnessed"),
    )
}

fn choi_obstruction() -> Outcome {
    let start = Instant::now();
    let h = choi_example();
    let basis = monomials_of_degree(3, 1);
    let verdict = sos_certify(&h, Some(&basis), 1e-8).unwrap();
    let (margin, recheck) = match &verdict {
        SosVerdict::NotSos(c) => (c.margin, recheck_not_sos(&h, c).ok()),
        _ => (f64::NAN, None),
    };
    // the compressed form v* H v is quartic; its Gram basis is x_i v_a
    let compressed = scalar_compress(&h).to_matrix_poly();
    let scalar = sos_certify(&compressed, Some(&bilinear_basis(3, 1, 3)), 1e-8).unwrap();
    let scalar_margin = match &scalar {
        SosVerdict::NotSos(c) if recheck_not_sos(&compressed, c).is_ok_and(|(e, p)| e >= 0.0 && p < 0.0) => c.margin,
        _ => f64::NAN,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let sample = positivity_sample(&h, 10_000, 1.0, &mut rng);
    let el = start.elapsed();
    let recheck_ok = recheck.is_some_and(|(eig, pairing)| eig >= 0.0 && pairing < 0.0 && (pairing - margin).abs() < 1e-9);
    outcome(
        margin <= -1e-4 && recheck_ok && scalar_margin <= -1e-4 && sample.min_observed >= -1e-10 && within(el, 30),
        format!(
            "verdict {}, margin {margin:.3e}, recheck {recheck:?}, compressed form margin {scalar_margin:.3e}, sampled min eig {:.3e}, {:.2}s",
            verdict.name(),
            sample.min_observed,
            el.as_secs_f64()
        ),
    )
}

fn random_factor(rng: &mut ChaCha8Rng, n: usize, t: usize, deg: u32, homogeneous: bool) -> MatrixPoly {
    let monos = if homogeneous {
        monomials_of_degree(n, deg)
    } else {
        monomials_up_to(n, deg)
    };
    let rows = rng.random_range(1..=t);
    let real = rng.random_bool(0.5);
    let terms = monos
        .into_iter()
        .map(|e| (e, oplift::sample::gaussian_matrix(rng, rows, t, real)))
        .collect();
    MatrixPoly {
        n_vars: n,
        rows,
        cols: t,
        terms,
    }
}

fn sos_soundness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut certified = 0;
    let mut worst = 0.0_f64;
    let mut rejected = 0;
    for _ in 0..50 {
        let n = rng.random_range(1..=3);
        let t = rng.random_range(1..=3);
        let half = rng.random_range(1..=2);
        let homogeneous = n == 3 || rng.random_bool(0.5);
        let k = rng.random_range(1..=2);
        let factors: Vec<MatrixPoly> = (0..k).map(|_| random_factor(&mut rng, n, t, half, homogeneous)).collect();
        let h = sum_of_squares(&factors, n, t);
        match sos_certify(&h, None, 1e-8).unwrap() {
            SosVerdict::Certificate(c) => {
                certified += 1;
                worst = worst.max(c.reassembly_error);
            }
            other => eprintln!("  random SOS not certified: n={n} t={t} half={half} hom={homogeneous} k={k} {other:?}"),
        }
        // break positivity at the origin
        let eps = h.eval(&vec![0.0; n]).unwrap().min_eig() + 0.1 * (1.0 + h.max_coeff_norm());
        let bad = h.sub(&HermMatrixPoly::constant(n, HermMatrix::identity(t).scale(eps))).unwrap();
        let v = sos_certify(&bad, None, 1e-8).unwrap();
        if v.is_not_sos() {
            rejected += 1;
        } else {
            eprintln!("  perturbation not rejected: n={n} t={t} half={half} {v:?}");
        }
    }
    let el = start.elapsed();
    outcome(
        certified == 50 && worst <= 1e-7 && rejected == 50,
        format!(
            "{certified}/50 certified (max reassembly {worst:.2e}), {rejected}/50 perturbations rejected, {:.2}s",
            el.as_secs_f64()
        ),
    )
}

fn forward_pointwise() -> Outcome {
    let f = simplex_factorization(2).unwrap();
    let lift = lift_from_factorization(&f, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0_f64;
    let mut failures = 0;
    for _ in 0..10 {
        let phi = random_positive_map(&mut rng, &f.cone, 2);
        let points: Vec<DVector<f64>> = (0..10)
            .map(|_| DVector::from_fn(2, |_, _| rng.random_range(0.0..2.0)))
            .collect();
        match sos_from_lift(&lift, &phi, &points, 1e-7) {
            Ok(vals) => {
                for v in vals {
                    worst = worst.max(v.deviation);
                }
            }
            Err(e) => {
                eprintln!("  sos_from_lift failed: {e}");
                failures += 1;
            }
        }
    }
    outcome(
        failures == 0 && worst <= 1e-7,
        format!("max deviation {worst:.2e} over 100 points, {failures} failures"),
    )
}

fn cp_extension() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst_restriction = 0.0_f64;
    let mut worst_eig = f64::INFINITY;
    let mut extended = 0;
    for _ in 0..30 {
        let d = rng.random_range(2..=4);
        let t = rng.random_range(1..=4);
        let k = rng.random_range(1..d * d);
        let mut spanning = vec![HermMatrix::identity(d)];
        spanning.extend((0..k).map(|_| random_herm(&mut rng, d)));
        let kraus_count = rng.random_range(1..=3);
        let psi = random_cp_map(&mut rng, d, t, kraus_count);
        let values = spanning.iter().map(|h| psi.eval_herm(h).unwrap()).collect();
        let phi = CpMap::on_subspace(d, spanning, values).unwrap();
        let e = cp_extend(&phi, 1e-8).unwrap();
        if e.status == ExtensionStatus::Extended {
            extended += 1;
        }
        worst_restriction = worst_restriction.max(e.restriction_error);
        worst_eig = worst_eig.min(e.choi_min_eig);
    }
    let improper = CpMap::on_subspace(2, vec![HermMatrix::unit(2, 0)], vec![HermMatrix::identity(2)]).unwrap();
    let warned = cp_extend(&improper, 1e-8).unwrap().warning.is_some();
    outcome(
        extended == 30 && worst_restriction <= 1e-8 && worst_eig >= -1e-8 && warned,
        format!(
            "{extended}/30 extended, max restriction error {worst_restriction:.2e}, min Choi eig {worst_eig:.2e}, improper warning {warned}"
        ),
    )
}

fn entry(i: usize, j: usize, v: f64) -> SparseSym {
    let mut s = SparseSym::new();
    s.push(i, j, v);
    s
}

fn diag(vals: &[f64]) -> SparseSym {
    let mut s = SparseSym::new();
    for (i, &v) in vals.iter().enumerate() {
        if v != 0.0 {
            s.push(i, i, v);
        }
    }
    s
}

fn dense(m: &[&[f64]]) -> SparseSym {
    let n = m.len();
    SparseSym::from_dense(&DMatrix::from_fn(n, n, |i, j| m[i][j]))
}

/// `(name, problem, expected status, expected optimum)`.
fn corpus() -> Vec<(&'static str, SdpProblem, SdpStatus, f64)> {
    let mut out = Vec::new();
    let psd = |n| SdpProblem::new(vec![BlockKind::Psd(n)]);
    let lp = |n| SdpProblem::new(vec![BlockKind::Nonneg(n)]);

    let mut p = psd(2);
    p.objective[0] = diag(&[1.0, 1.0]);
    p.add_constraint(vec![(0, entry(0, 0, 1.0))], 1.0);
    out.push(("min trace with X11 = 1", p.clone(), SdpStatus::Optimal, 1.0));
    out.push(("same, constraints scaled by 10", p.scaled_constraints(10.0), SdpStatus::Optimal, 1.0));

    let mut p = psd(2);
    p.objective[0] = diag(&[-1.0, -1.0]);
    p.add_constraint(vec![(0, diag(&[1.0, 1.0]))], 1.0);
    out.push(("max trace under trace bound", p, SdpStatus::Optimal, -1.0));

    let mut p = psd(2);
    p.add_constraint(vec![(0, entry(0, 0, 1.0))], -1.0);
    out.push(("X11 = -1", p, SdpStatus::Infeasible, f64::NAN));

    let mut p = lp(2);
    p.objective[0] = diag(&[1.0, 1.0]);
    p.add_constraint(vec![(0, diag(&[1.0, 1.0]))], 1.0);
    out.push(("LP x1 + x2 = 1", p, SdpStatus::Optimal, 1.0));

    let mut p = lp(2);
    p.objective[0] = diag(&[1.0, 0.0]);
    p.add_constraint(vec![(0, diag(&[1.0, -1.0]))], 1.0);
    out.push(("LP x1 - x2 = 1", p, SdpStatus::Optimal, 1.0));

    let mut p = lp(1);
    p.add_constraint(vec![(0, diag(&[1.0]))], -1.0);
    out.push(("LP x = -1", p, SdpStatus::Infeasible, f64::NAN));

    let mut p = lp(2);
    p.add_constraint(vec![(0, diag(&[1.0, 1.0]))], 1.0);
    p.add_constraint(vec![(0, diag(&[0.0, 1.0]))], 1.0);
    out.push(("conic membership of (1,1)", p, SdpStatus::Optimal, 0.0));

    let mut p = psd(2);
    p.objective[0] = entry(0, 1, 1.0);
    p.add_constraint(vec![(0, entry(0, 0, 1.0))], 1.0);
    p.add_constraint(vec![(0, entry(1, 1, 1.0))], 1.0);
    out.push(("min 2 X12 with unit diagonal", p, SdpStatus::Optimal, -2.0));

    let mut p = psd(3);
    p.objective[0] = dense(&[&[1.0, 1.0, 1.0], &[1.0, 1.0, 1.0], &[1.0, 1.0, 1.0]]);
    for i in 0..3 {
        p.add_constraint(vec![(0, entry(i, i, 1.0))], 1.0);
    }
    out.push(("all-ones objective, unit diagonal", p, SdpStatus::Optimal, 0.0));

    let mut p = psd(2);
    p.objective[0] = dense(&[&[2.0, 1.0], &[1.0, 2.0]]);
    p.add_constraint(vec![(0, diag(&[1.0, 1.0]))], 1.0);
    out.push(("smallest eigenvalue of [[2,1],[1,2]]", p, SdpStatus::Optimal, 1.0));

    let mut p = psd(3);
    p.objective[0] = diag(&[3.0, 1.0, 2.0]);
    p.add_constraint(vec![(0, diag(&[1.0, 1.0, 1.0]))], 1.0);
    out.push(("smallest eigenvalue of diag(3,1,2)", p, SdpStatus::Optimal, 1.0));

    let mut p = psd(2);
    p.objective[0] = entry(0, 0, -1.0);
    p.add_constraint(vec![(0, entry(1, 1, 1.0))], 1.0);
    out.push(("unbounded primal", p, SdpStatus::Infeasible, f64::NAN));

    let mut p = SdpProblem::new(vec![BlockKind::Psd(2), BlockKind::Nonneg(1)]);
    p.objective[0] = diag(&[1.0, 1.0]);
    p.objective[1] = diag(&[1.0]);
    p.add_constraint(vec![(0, entry(0, 0, 1.0)), (1, diag(&[1.0]))], 2.0);
    p.add_constraint(vec![(0, entry(1, 1, 1.0))], 1.0);
    out.push(("mixed PSD and LP blocks", p, SdpStatus::Optimal, 3.0));

    let mut p = lp(4);
    p.objective[0] = diag(&[-1.0, -1.0, 0.0, 0.0]);
    p.add_constraint(vec![(0, diag(&[1.0, 2.0, 1.0, 0.0]))], 4.0);
    p.add_constraint(vec![(0, diag(&[3.0, 1.0, 0.0, 1.0]))], 6.0);
    out.push(("LP with slacks", p, SdpStatus::Optimal, -2.8));

    let mut p = psd(2);
    p.objective[0] = entry(0, 0, 1.0);
    p.add_constraint(vec![(0, entry(1, 1, 1.0))], 1.0);
    p.add_constraint(vec![(0, entry(0, 1, 0.5))], 1.0);
    out.push(("min X11 with X22 = X12 = 1", p, SdpStatus::Optimal, 1.0));

    let mut p = psd(2);
    p.add_constraint(vec![(0, diag(&[1.0, 1.0]))], 1.0);
    p.add_constraint(vec![(0, entry(0, 1, 0.5))], 1.0);
    out.push(("off-diagonal beyond trace", p, SdpStatus::Infeasible, f64::NAN));

    let mut p = lp(2);
    p.add_constraint(vec![(0, diag(&[1.0, 1.0]))], 1.0);
    p.add_constraint(vec![(0, diag(&[1.0, 1.0]))], 2.0);
    out.push(("inconsistent LP", p, SdpStatus::Infeasible, f64::NAN));

    let mut p = psd(3);
    p.objective[0] = dense(&[&[1.0, 1.0, 0.0], &[1.0, 1.0, 0.0], &[0.0, 0.0, 3.0]]);
    p.add_constraint(vec![(0, diag(&[1.0, 1.0, 1.0]))], 1.0);
    out.push(("singular objective", p, SdpStatus::Optimal, 0.0));

    let mut p = lp(2);
    p.objective[0] = diag(&[2.0, 3.0]);
    p.add_constraint(vec![(0, diag(&[1.0, 1.0]))], 5.0);
    p.add_constraint(vec![(0, diag(&[1.0, -1.0]))], 1.0);
    out.push(("LP with unique point", p, SdpStatus::Optimal, 12.0));

    out
}

fn sdp_corpus() -> Outcome {
    let cases = corpus();
    let mut bad = Vec::new();
    for (name, p, want, opt) in &cases {
        let s = sdp::solve(p).unwrap();
        let ok = match want {
            SdpStatus::Optimal => {
                let r = sdp::recheck(p, &s);
                s.status == SdpStatus::Optimal
                    && r.rel_gap <= 1e-7
                    && (s.primal_objective - opt).abs() <= 1e-6 * (1.0 + opt.abs())
            }
            SdpStatus::Infeasible => {
                s.status == SdpStatus::Infeasible
                    && s.certificate.as_ref().is_some_and(|c: &Certificate| sdp::verify_certificate(p, c) < 0.0)
            }
            _ => unreachable!(),
        };
        if !ok {
            bad.push(format!("{name} ({:?}, obj {:.3e})", s.status, s.primal_objective));
        }
    }
    outcome(
        bad.is_empty(),
        format!("{}/{} instances match{}", cases.len() - bad.len(), cases.len(), if bad.is_empty() { String::new() } else { format!(": {}", bad.join(", ")) }),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("simplex free spectrahedron", simplex_kraus),
        ("polyhedral spectrahedrop", polyhedral_spectrahedrop),
        ("factorization-lift round trip", round_trip),
        ("linear factorization realization", linear_realization),
        ("Choi obstruction", choi_obstruction),
        ("SOS soundness and completeness", sos_soundness),
        ("pointwise forward SOS", forward_pointwise),
        ("CP extension", cp_extension),
        ("SDP regression corpus", sdp_corpus),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let label = format!("criterion {}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str()) || label == *f) {
            continue;
        }
        let o = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        println!("{label} [{name}]: {} - {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
