//! Sparse SDPA text dump for cross-checking with external solvers.

use std::fmt::Write;

use super::{BlockKind, SdpProblem, SparseSym};

/// Writes `problem` in SDPA sparse format.
///
/// SDPA solves `min c'x s.t. sum F_i x_i - F_0 PSD` with the dual
/// `max <F_0, Y> s.t. <F_i, Y> = c_i`. Our primal maps onto that dual with
/// `F_0 = -C`, `F_i = A_i`, `c = b`. LP blocks are written as diagonal
/// blocks with negative size.
pub fn to_sdpa(problem: &SdpProblem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", problem.constraints.len());
    let _ = writeln!(out, "{}", problem.blocks.len());
    let sizes: Vec<String> = problem
        .blocks
        .iter()
        .map(|b| match b {
            BlockKind::Psd(n) => n.to_string(),
            BlockKind::Nonneg(n) => format!("-{n}"),
        })
        .collect();
    let _ = writeln!(out, "{}", sizes.join(" "));
    let rhs: Vec<String> = problem.constraints.iter().map(|c| format!("{:e}", c.rhs)).collect();
    let _ = writeln!(out, "{}", rhs.join(" "));
    let mut emit = |mat: usize, block: usize, s: &SparseSym, sign: f64| {
        for &(i, j, v) in &s.entries {
            let _ = writeln!(out, "{mat} {} {} {} {:e}", block + 1, i + 1, j + 1, sign * v);
        }
    };
    for (b, c) in problem.objective.iter().enumerate() {
        emit(0, b, c, -1.0);
    }
    for (k, con) in problem.constraints.iter().enumerate() {
        for (b, a) in &con.terms {
            emit(k + 1, *b, a, 1.0);
        }
    }
    out
}
