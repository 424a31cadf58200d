//! The `.ten` text format.
//!
//! ```text
//! # optional comments start with '#'
//! order 3 dim 2 field real
//! 1 0 0 0 0 0 0 2
//! ```
//!
//! Scalars follow the header in lexicographic index order; complex entries
//! are written as `re im` pairs. Numbers use a decimal point regardless of
//! locale.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use super::DenseTensor;
use crate::scalar::{Field, Scalar};
use crate::{Error, Result};

/// A tensor read from disk whose field is only known at runtime.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyTensor {
    Real(DenseTensor<f64>),
    Complex(DenseTensor<Complex64>),
}

impl AnyTensor {
    pub fn field(&self) -> Field {
        match self {
            AnyTensor::Real(_) => Field::Real,
            AnyTensor::Complex(_) => Field::Complex,
        }
    }

    pub fn into_real(self) -> Result<DenseTensor<f64>> {
        match self {
            AnyTensor::Real(t) => Ok(t),
            AnyTensor::Complex(_) => Err(Error::InvalidTensor(
                "expected a real tensor, found a complex one".into(),
            )),
        }
    }

    /// Real tensors are promoted.
    pub fn into_complex(self) -> DenseTensor<Complex64> {
        match self {
            AnyTensor::Real(t) => t.to_complex(),
            AnyTensor::Complex(t) => t,
        }
    }
}

pub fn to_string<T: Scalar>(t: &DenseTensor<T>) -> String {
    let mut out = format!("order {} dim {} field {}\n", t.order(), t.dim(), T::FIELD);
    for row in t.values().chunks(t.dim()) {
        let mut line = String::new();
        for (k, v) in row.iter().enumerate() {
            if k > 0 {
                line.push(' ');
            }
            match T::FIELD {
                Field::Real => write!(line, "{:e}", v.re()),
                Field::Complex => write!(line, "{:e} {:e}", v.re(), v.im()),
            }
            .expect("writing to a String");
        }
        out.push_str(&line);
        out.push('\n');
    }
    out
}

pub fn parse(text: &str) -> Result<AnyTensor> {
    let mut header: Option<(usize, usize, Field, usize)> = None;
    let mut numbers: Vec<f64> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let line_no = lineno + 1;
        if header.is_none() {
            header = Some(parse_header(line, line_no)?);
            continue;
        }
        for tok in line.split_whitespace() {
            let v: f64 = tok.parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("invalid number {tok:?}"),
            })?;
            numbers.push(v);
        }
    }
    let (order, dim, field, header_line) = header.ok_or(Error::Parse {
        line: 0,
        msg: "missing header".into(),
    })?;
    let count = dim.checked_pow(order as u32).ok_or(Error::Parse {
        line: header_line,
        msg: "tensor too large".into(),
    })?;
    let per = if field == Field::Complex { 2 } else { 1 };
    if numbers.len() != count * per {
        return Err(Error::Parse {
            line: header_line,
            msg: format!("expected {} numbers, found {}", count * per, numbers.len()),
        });
    }
    Ok(match field {
        Field::Real => AnyTensor::Real(DenseTensor::new(order, dim, numbers)?),
        Field::Complex => AnyTensor::Complex(DenseTensor::new(
            order,
            dim,
            numbers
                .chunks_exact(2)
                .map(|c| Complex64::new(c[0], c[1]))
                .collect(),
        )?),
    })
}

fn parse_header(line: &str, line_no: usize) -> Result<(usize, usize, Field, usize)> {
    let bad = |msg: &str| Error::Parse {
        line: line_no,
        msg: msg.to_string(),
    };
    let toks: Vec<&str> = line.split_whitespace().collect();
    if toks.len() != 6 || toks[0] != "order" || toks[2] != "dim" || toks[4] != "field" {
        return Err(bad(
            "header must read `order <d> dim <n> field real|complex`",
        ));
    }
    let order = toks[1].parse().map_err(|_| bad("invalid order"))?;
    let dim = toks[3].parse().map_err(|_| bad("invalid dim"))?;
    let field = match toks[5] {
        "real" => Field::Real,
        "complex" => Field::Complex,
        _ => return Err(bad("field must be real or complex")),
    };
    Ok((order, dim, field, line_no))
}

pub fn read(path: impl AsRef<Path>) -> Result<AnyTensor> {
    parse(&std::fs::read_to_string(path)?)
}

pub fn write<T: Scalar>(path: impl AsRef<Path>, t: &DenseTensor<T>) -> Result<()> {
    std::fs::write(path, to_string(t))?;
    Ok(())
}
