//! Comma-separated convergence traces, one row per outer iteration.

use std::io::{self, Write};

use capacity_core::nats_to_bits;
use capacity_core::solvers::{IterationRecord, SolveResult};

pub const HEADER: &str =
    "iteration,mutual_info_nats,mutual_info_bits,lower_nats,upper_nats,gap,lambda,penalty,inner_iterations";

/// 17 significant digits.
fn num(value: f64) -> String {
    format!("{value:.16e}")
}

pub fn format_row(record: &IterationRecord) -> String {
    [
        record.index.to_string(),
        num(record.mutual_info),
        num(nats_to_bits(record.mutual_info)),
        num(record.lower),
        num(record.upper),
        num(record.gap()),
        num(record.lambda),
        num(record.penalty),
        record.inner_iterations.to_string(),
    ]
    .join(",")
}

pub fn write_trace<W: Write>(mut out: W, result: &SolveResult) -> io::Result<()> {
    out.write_all(HEADER.as_bytes())?;
    out.write_all(b"\n")?;
    for record in &result.trace {
        out.write_all(format_row(record).as_bytes())?;
        out.write_all(b"\n")?;
    }
    out.flush()
}
