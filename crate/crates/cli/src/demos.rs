//! Self-contained scenarios with built-in data.

use rand_chacha::ChaCha8Rng;

use oplift::cones::{self, PolyhedralCone};
use oplift::cpmaps::CpMap;
use oplift::lift::{factorization_from_lift, lift_from_factorization, polyhedral_factorization, simplex_factorization};
use oplift::opsys::{membership, min_membership};
use oplift::sample::{random_member, random_non_member, random_psd};
use oplift::slack::{diagonal_kraus, dual_generators, verify_factorization, verify_linear, Linearity};
use oplift::sos::{choi_example, monomials_of_degree, positivity_sample, recheck_not_sos, sos_certify, SosVerdict};
use oplift::HermMatrix;

use crate::report::{CliError, Report, Status};

fn status(pass: bool) -> Status {
    if pass {
        Status::Pass
    } else {
        Status::Fail
    }
}

/// Kraus operators for random PSD values on the simplex generators.
pub fn simplex(n: usize, t: usize, samples: usize, tol: f64, rng: &mut ChaCha8Rng) -> Result<Report, CliError> {
    if n == 0 || t == 0 {
        return Err(CliError::Usage("--n and --t must be positive".into()));
    }
    let f = simplex_factorization(n)?;
    let mut worst = 0.0_f64;
    let mut maps = dual_generators(&f.cone, t)?;
    for _ in 0..samples {
        let ps: Vec<HermMatrix> = (0..n).map(|_| random_psd(rng, t, t)).collect();
        let phi = CpMap::on_generators(&f.cone, ps.clone())?;
        let kraus = diagonal_kraus(&f.cone, &phi)?;
        for (i, p) in ps.iter().enumerate() {
            let back = kraus.apply(&HermMatrix::unit(n, i));
            worst = worst.max((&back - p).norm() / (1.0 + p.norm()));
        }
        maps.push(phi);
    }
    let r = verify_factorization(&f, &maps, tol)?;
    let pass = r.pass && worst <= 1e-9;
    Ok(Report::new("demo simplex", status(pass))
        .metric("n", n)
        .metric("t", t)
        .metric("kraus_max_dev", worst)
        .metric("max_dev", r.max_dev)
        .metric("maps_checked", maps.len()))
}

/// Non-linear factorization and lifted membership for the square cone.
pub fn polyhedral(samples: usize, tol: f64, rng: &mut ChaCha8Rng) -> Result<Report, CliError> {
    let cone = PolyhedralCone::square();
    let f = polyhedral_factorization(&cone)?;
    let r = verify_factorization(&f, &dual_generators(&cone, 2)?, tol.max(1e-9))?;
    let linearity = verify_linear(&f, tol.max(1e-9))?;
    let lift = lift_from_factorization(&f, 2)?;
    let sys = lift.system()?;
    let facets = cones::dual_generators(&cone)?.facets;
    let mut disagreements = 0;
    let mut checked = 0;
    for s in 1..=2 {
        for k in 0..samples {
            let a = if k % 3 == 2 {
                random_non_member(rng, &cone, &facets, s).0
            } else {
                random_member(rng, &cone, s)
            };
            let lifted = membership(&sys, &a, tol)?.status;
            let minimal = min_membership(&cone, &a, tol)?.status;
            checked += 1;
            if lifted != minimal {
                disagreements += 1;
            }
        }
    }
    let pass = r.pass && linearity == Linearity::NotLinear && disagreements == 0;
    Ok(Report::new("demo polyhedral", status(pass))
        .metric("max_dev", r.max_dev)
        .metric("linearity", linearity)
        .metric("dim_z", lift.dim())
        .metric("membership_checked", checked)
        .metric("disagreements", disagreements))
}

/// The Choi form: positive everywhere yet not a sum of squares.
pub fn choi(samples: usize, tol: f64, rng: &mut ChaCha8Rng) -> Result<Report, CliError> {
    let h = choi_example();
    let basis = monomials_of_degree(3, 1);
    let verdict = sos_certify(&h, Some(&basis), tol)?;
    let sample = positivity_sample(&h, samples, 1.0, rng);
    let mut report = Report::new("demo choi", Status::Fail)
        .metric("verdict", verdict.name())
        .metric("sampled_min_eig", sample.min_observed)
        .metric("samples", sample.samples);
    if let SosVerdict::NotSos(cert) = &verdict {
        let (moment_eig, pairing) = recheck_not_sos(&h, cert)?;
        report = report
            .metric("margin", cert.margin)
            .metric("recheck_pairing", pairing)
            .metric("recheck_moment_min_eig", moment_eig);
        if pairing < 0.0 && moment_eig >= 0.0 && sample.min_observed >= -1e-10 {
            report.status = Status::Pass;
        }
    }
    Ok(report.result(&verdict))
}

/// Factorization, lift, factorization again, verified.
pub fn roundtrip(cone_name: &str, tol: f64) -> Result<Report, CliError> {
    let cone = match cone_name {
        "simplex" => PolyhedralCone::orthant(3),
        "square" => PolyhedralCone::square(),
        other => return Err(CliError::Usage(format!("unknown cone {other:?}, expected simplex or square"))),
    };
    let f = polyhedral_factorization(&cone)?;
    let lift = lift_from_factorization(&f, 2)?;
    let injective = lift.gamma.rank() == lift.dim();
    let g = factorization_from_lift(&lift, &cone, 2, tol)?;
    let r = verify_factorization(&g, &dual_generators(&cone, 2)?, tol.max(1e-7))?;
    Ok(Report::new("demo roundtrip", status(r.pass && injective))
        .metric("cone", cone_name)
        .metric("dim_z", lift.dim())
        .metric("gamma_injective", injective)
        .metric("max_dev", r.max_dev))
}
