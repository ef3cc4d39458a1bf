use std::io::Read;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use oplift::cones::PolyhedralCone;
use oplift::lift::{factorization_from_lift, lift_from_factorization, LiftData};
use oplift::opsys::{membership, MatrixElement, MembershipStatus, OperatorSystem};
use oplift::slack::{dual_generators, verify_factorization, verify_linear, Factorization};
use oplift::sos::{monomials_of_degree, monomials_up_to, sos_certify, HermMatrixPoly, SosVerdict};

use crate::report::{CliError, Report, Status};

/// Reads JSON from a file, or from standard input when `path` is `-`.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = if path == Path::new("-") {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| CliError::Usage(format!("reading standard input: {e}")))?;
        s
    } else {
        std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
    };
    serde_json::from_str(&text).map_err(|e| {
        let msg = format!("{}: {e}", path.display());
        match e.classify() {
            serde_json::error::Category::Data => CliError::Data(msg),
            _ => CliError::Usage(msg),
        }
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    std::fs::write(path, text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

pub fn cmd_membership(system: &Path, element: &Path, level: Option<usize>, tol: f64) -> Result<Report, CliError> {
    let sys: OperatorSystem = read_json(system)?;
    let a: MatrixElement = read_json(element)?;
    if let Some(s) = level {
        if s != a.level() {
            return Err(CliError::Usage(format!("--level {s} but the element has level {}", a.level())));
        }
    }
    let r = membership(&sys, &a, tol)?;
    let status = match r.status {
        MembershipStatus::Member => Status::Member,
        MembershipStatus::NotMember => Status::NotMember,
        MembershipStatus::Inconclusive => Status::Inconclusive,
    };
    Ok(Report::new("membership", status)
        .metric("system", sys.variant_name())
        .metric("level", a.level())
        .metric("margin", r.margin)
        .result(&r))
}

pub fn cmd_verify_factorization(path: &Path, t_max: usize, tol: f64) -> Result<Report, CliError> {
    let f: Factorization = read_json(path)?;
    let duals = dual_generators(&f.cone, t_max)?;
    let r = verify_factorization(&f, &duals, tol)?;
    let linearity = verify_linear(&f, tol)?;
    let mut report = Report::new("verify-factorization", if r.pass { Status::Pass } else { Status::Fail })
        .metric("max_dev", r.max_dev)
        .metric("duals", duals.len())
        .metric("t_max", t_max)
        .metric("linearity", linearity)
        .result(&r);
    report.warnings = r.warnings.clone();
    Ok(report)
}

pub fn cmd_build_lift(path: &Path, t_max: usize, out: Option<&PathBuf>) -> Result<Report, CliError> {
    let f: Factorization = read_json(path)?;
    let lift = lift_from_factorization(&f, t_max)?;
    let mut report = Report::new("build-lift", Status::Pass)
        .metric("dim_z", lift.dim())
        .metric("stabilization", lift.stabilization);
    match out {
        Some(p) => {
            write_json(p, &lift)?;
            report.artifacts.push(p.clone());
        }
        None => report = report.result(&lift),
    }
    Ok(report)
}

pub fn cmd_extract_factorization(
    path: &Path,
    cone: &Path,
    t_max: usize,
    tol: f64,
    out: Option<&PathBuf>,
) -> Result<Report, CliError> {
    let lift: LiftData = read_json(path)?;
    let cone: PolyhedralCone = read_json(cone)?;
    let f = factorization_from_lift(&lift, &cone, t_max, tol)?;
    let r = verify_factorization(&f, &dual_generators(&cone, t_max)?, tol.max(1e-7))?;
    let mut report = Report::new("extract-factorization", if r.pass { Status::Pass } else { Status::Fail })
        .metric("max_dev", r.max_dev)
        .metric("dim_z", lift.dim());
    match out {
        Some(p) => {
            write_json(p, &f)?;
            report.artifacts.push(p.clone());
        }
        None => report = report.result(&f),
    }
    Ok(report)
}

pub fn cmd_sos_certify(path: &Path, basis_degree: Option<u32>, tol: f64) -> Result<Report, CliError> {
    let h: HermMatrixPoly = read_json(path)?;
    let basis = basis_degree.map(|d| {
        if h.is_homogeneous() {
            monomials_of_degree(h.n_vars(), d)
        } else {
            monomials_up_to(h.n_vars(), d)
        }
    });
    let verdict = sos_certify(&h, basis.as_deref(), tol)?;
    Ok(sos_report("sos-certify", &h, &verdict))
}

pub fn sos_report(command: &str, h: &HermMatrixPoly, verdict: &SosVerdict) -> Report {
    let status = match verdict {
        SosVerdict::Certificate(_) => Status::Certificate,
        SosVerdict::NotSos(_) | SosVerdict::StructuralNotSos { .. } => Status::NotSos,
        SosVerdict::Inconclusive { .. } => Status::Inconclusive,
    };
    let mut report = Report::new(command, status)
        .metric("n", h.n_vars())
        .metric("t", h.t())
        .metric("degree", h.degree())
        .metric("verdict", verdict.name());
    report = match verdict {
        SosVerdict::Certificate(c) => report
            .metric("factors", c.factors.len())
            .metric("reassembly_error", c.reassembly_error),
        SosVerdict::NotSos(c) => report.metric("margin", c.margin).metric("lambda", c.lambda),
        SosVerdict::StructuralNotSos { monomial } => report.metric("monomial", monomial),
        SosVerdict::Inconclusive { lambda, dual_bound } => {
            report.metric("lambda", lambda).metric("dual_bound", dual_bound)
        }
    };
    report.result(verdict)
}
