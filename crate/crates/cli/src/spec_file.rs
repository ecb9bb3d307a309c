//! Line-oriented channel specification files.
//!
//! ```text
//! # comments run to end of line
//! type: matrix
//! rows:
//!   0.95 0.05
//!   0.10 0.90
//! ```
//!
//! `type: bsc` takes `epsilon`. `type: bernoulli_gaussian` takes `p_impulse`,
//! `sigma_b` and `sigma_g`, plus optional `input_levels`, `output_levels`,
//! `input_range` and `output_range` (ranges are two numbers). Without
//! `output_range` the output window extends the input range by four
//! combined noise deviations on each side.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use capacity_core::channels::{self, BernoulliGaussianParams};
use capacity_core::{CapacityError, TransitionMatrix};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing field '{0}'")]
    Missing(&'static str),
    #[error("field '{field}': {message}")]
    Field { field: String, message: String },
    #[error(transparent)]
    Channel(#[from] CapacityError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelSpec {
    Matrix(Vec<Vec<f64>>),
    Bsc(f64),
    BernoulliGaussian(BernoulliGaussianParams),
}

impl ChannelSpec {
    pub fn parse(text: &str) -> Result<Self, SpecError> {
        let mut fields: BTreeMap<String, (usize, String)> = BTreeMap::new();
        let mut rows: Option<Vec<Vec<f64>>> = None;
        let mut in_rows = false;

        for (index, raw) in text.lines().enumerate() {
            let line_no = index + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some((key, value)) = line.split_once(':') {
                in_rows = false;
                let key = key.trim().to_ascii_lowercase();
                let value = value.trim().to_string();
                if key == "rows" {
                    if rows.is_some() {
                        return Err(syntax(line_no, "duplicate field 'rows'"));
                    }
                    let mut initial = Vec::new();
                    if !value.is_empty() {
                        initial.push(parse_numbers(&value).map_err(|m| syntax(line_no, m))?);
                    }
                    rows = Some(initial);
                    in_rows = true;
                    continue;
                }
                if fields.insert(key.clone(), (line_no, value)).is_some() {
                    return Err(syntax(line_no, format!("duplicate field '{key}'")));
                }
            } else if in_rows {
                let row = parse_numbers(line).map_err(|m| syntax(line_no, m))?;
                rows.as_mut().expect("rows started").push(row);
            } else {
                return Err(syntax(
                    line_no,
                    format!("expected 'key: value', found '{line}'"),
                ));
            }
        }

        let (_, kind) = fields.remove("type").ok_or(SpecError::Missing("type"))?;
        let spec = match kind.as_str() {
            "matrix" => {
                let rows = rows.ok_or(SpecError::Missing("rows"))?;
                if rows.is_empty() {
                    return Err(field_err("rows", "no rows given"));
                }
                ChannelSpec::Matrix(rows)
            }
            "bsc" => {
                reject_rows(&rows)?;
                ChannelSpec::Bsc(take_real(&mut fields, "epsilon")?)
            }
            "bernoulli_gaussian" => {
                reject_rows(&rows)?;
                let mut params = BernoulliGaussianParams::new(
                    take_real(&mut fields, "p_impulse")?,
                    take_real(&mut fields, "sigma_b")?,
                    take_real(&mut fields, "sigma_g")?,
                );
                if let Some(n) = take_optional(&mut fields, "input_levels", parse_count)? {
                    params.input_levels = n;
                }
                if let Some(n) = take_optional(&mut fields, "output_levels", parse_count)? {
                    params.output_levels = n;
                }
                let input_range = take_optional(&mut fields, "input_range", parse_range)?;
                match (
                    take_optional(&mut fields, "output_range", parse_range)?,
                    input_range,
                ) {
                    (Some(range), _) => params.output_range = range,
                    // output window follows a custom input range
                    (None, Some((lo, hi))) => {
                        let edge =
                            lo.abs().max(hi.abs()) + 4.0 * params.sigma_b.hypot(params.sigma_g);
                        params.output_range = (-edge, edge);
                    }
                    (None, None) => {}
                }
                if let Some(range) = input_range {
                    params.input_range = range;
                }
                ChannelSpec::BernoulliGaussian(params)
            }
            other => return Err(field_err(
                "type",
                format!(
                    "unknown channel type '{other}' (expected matrix, bsc or bernoulli_gaussian)"
                ),
            )),
        };
        if let Some((key, (line, _))) = fields.into_iter().next() {
            return Err(syntax(
                line,
                format!("unexpected field '{key}' for type '{kind}'"),
            ));
        }
        Ok(spec)
    }

    pub fn build(&self) -> Result<TransitionMatrix, SpecError> {
        Ok(match self {
            Self::Matrix(rows) => channels::from_matrix(rows.clone())?,
            Self::Bsc(eps) => channels::bsc(*eps)?,
            Self::BernoulliGaussian(params) => channels::bernoulli_gaussian_channel(params)?,
        })
    }
}

/// Parses and builds in one go.
pub fn load_channel(text: &str) -> Result<TransitionMatrix, SpecError> {
    ChannelSpec::parse(text)?.build()
}

/// Matrix spec with shortest round-trip number formatting.
pub fn render_matrix(channel: &TransitionMatrix) -> String {
    let mut out = String::from("type: matrix\nrows:\n");
    for row in channel.rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        let _ = writeln!(out, "{}", cells.join(" "));
    }
    out
}

fn syntax(line: usize, message: impl Into<String>) -> SpecError {
    SpecError::Syntax {
        line,
        message: message.into(),
    }
}

fn field_err(field: &str, message: impl Into<String>) -> SpecError {
    SpecError::Field {
        field: field.to_string(),
        message: message.into(),
    }
}

fn reject_rows(rows: &Option<Vec<Vec<f64>>>) -> Result<(), SpecError> {
    match rows {
        Some(_) => Err(field_err("rows", "only valid for type 'matrix'")),
        None => Ok(()),
    }
}

fn parse_numbers(text: &str) -> Result<Vec<f64>, String> {
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| format!("'{t}' is not a number"))
        })
        .collect()
}

fn parse_real(text: &str) -> Result<f64, String> {
    text.parse::<f64>()
        .map_err(|_| format!("'{text}' is not a number"))
}

fn parse_count(text: &str) -> Result<usize, String> {
    text.parse::<usize>()
        .map_err(|_| format!("'{text}' is not a non-negative integer"))
}

fn parse_range(text: &str) -> Result<(f64, f64), String> {
    match parse_numbers(text)?.as_slice() {
        [lo, hi] => Ok((*lo, *hi)),
        other => Err(format!("expected two numbers, found {}", other.len())),
    }
}

fn take_real(
    fields: &mut BTreeMap<String, (usize, String)>,
    name: &'static str,
) -> Result<f64, SpecError> {
    take_optional(fields, name, parse_real)?.ok_or(SpecError::Missing(name))
}

fn take_optional<T>(
    fields: &mut BTreeMap<String, (usize, String)>,
    name: &str,
    parse: impl Fn(&str) -> Result<T, String>,
) -> Result<Option<T>, SpecError> {
    match fields.remove(name) {
        None => Ok(None),
        Some((_, value)) => parse(&value).map(Some).map_err(|m| field_err(name, m)),
    }
}
