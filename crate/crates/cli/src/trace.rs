//! Flat per-iteration trace rows and their CSV and JSON forms.
//!
//! CSV column order is fixed: [`FIXED_COLUMNS`] followed by `x_0 … x_{n−1}`.
//! Missing values (the terminal record has no `rho`, no step and no
//! certificate) are empty cells in CSV and `null` in JSON. Floats use the
//! shortest representation that parses back to the same bits; JSON carries
//! non-finite values as the strings `"inf"`, `"-inf"` and `"NaN"`.

use std::io::{Read, Write};

use argen_core::ar_driver::{ARTrace, IterationRecord};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const FIXED_COLUMNS: [&str; 12] = [
    "k",
    "f",
    "dual_grad_norm",
    "lambda_min",
    "sigma",
    "rho",
    "step_norm",
    "accepted",
    "inner_iterations",
    "descent_ok",
    "grad_residual",
    "curvature_residual",
];

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceRow {
    pub k: usize,
    #[serde(with = "float")]
    pub f: f64,
    #[serde(with = "float")]
    pub dual_grad_norm: f64,
    #[serde(with = "opt_float")]
    pub lambda_min: Option<f64>,
    #[serde(with = "float")]
    pub sigma: f64,
    #[serde(with = "opt_float")]
    pub rho: Option<f64>,
    #[serde(with = "opt_float")]
    pub step_norm: Option<f64>,
    pub accepted: bool,
    pub inner_iterations: usize,
    pub descent_ok: Option<bool>,
    #[serde(with = "opt_float")]
    pub grad_residual: Option<f64>,
    #[serde(with = "opt_float")]
    pub curvature_residual: Option<f64>,
    #[serde(with = "float_vec")]
    pub x: Vec<f64>,
}

/// Bitwise on floats, so `NaN == NaN` and `0.0 != -0.0`.
impl PartialEq for TraceRow {
    fn eq(&self, other: &Self) -> bool {
        let same = |a: f64, b: f64| a.to_bits() == b.to_bits();
        let same_opt = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(a), Some(b)) => same(a, b),
            (None, None) => true,
            _ => false,
        };
        self.k == other.k
            && same(self.f, other.f)
            && same(self.dual_grad_norm, other.dual_grad_norm)
            && same_opt(self.lambda_min, other.lambda_min)
            && same(self.sigma, other.sigma)
            && same_opt(self.rho, other.rho)
            && same_opt(self.step_norm, other.step_norm)
            && self.accepted == other.accepted
            && self.inner_iterations == other.inner_iterations
            && self.descent_ok == other.descent_ok
            && same_opt(self.grad_residual, other.grad_residual)
            && same_opt(self.curvature_residual, other.curvature_residual)
            && self.x.len() == other.x.len()
            && self.x.iter().zip(&other.x).all(|(a, b)| same(*a, *b))
    }
}

impl From<&IterationRecord> for TraceRow {
    fn from(r: &IterationRecord) -> Self {
        TraceRow {
            k: r.k,
            f: r.f,
            dual_grad_norm: r.dual_grad_norm,
            lambda_min: r.lambda_min,
            sigma: r.sigma,
            rho: r.rho,
            step_norm: r.step_norm,
            accepted: r.accepted,
            inner_iterations: r.inner_iterations,
            descent_ok: r.certificate.map(|c| c.descent_ok),
            grad_residual: r.certificate.map(|c| c.grad_residual),
            curvature_residual: r.certificate.and_then(|c| c.curvature_residual),
            x: r.x.iter().copied().collect(),
        }
    }
}

pub fn rows(trace: &ARTrace) -> Vec<TraceRow> {
    trace.records.iter().map(TraceRow::from).collect()
}

pub fn fmt_float(v: f64) -> String {
    ryu::Buffer::new().format(v).to_string()
}

fn parse_float(s: &str) -> Result<f64, CliError> {
    s.parse().map_err(|_| CliError::Parse(format!("not a number: {s:?}")))
}

fn opt<T>(s: &str, parse: impl Fn(&str) -> Result<T, CliError>) -> Result<Option<T>, CliError> {
    if s.is_empty() {
        Ok(None)
    } else {
        parse(s).map(Some)
    }
}

pub fn write_csv<W: Write>(out: W, rows: &[TraceRow]) -> Result<(), CliError> {
    let n = rows.first().map_or(0, |r| r.x.len());
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = FIXED_COLUMNS.iter().map(|c| c.to_string()).collect();
    header.extend((0..n).map(|i| format!("x_{i}")));
    w.write_record(&header)?;
    let of = |v: Option<f64>| v.map(fmt_float).unwrap_or_default();
    for r in rows {
        let mut rec = vec![
            r.k.to_string(),
            fmt_float(r.f),
            fmt_float(r.dual_grad_norm),
            of(r.lambda_min),
            fmt_float(r.sigma),
            of(r.rho),
            of(r.step_norm),
            r.accepted.to_string(),
            r.inner_iterations.to_string(),
            r.descent_ok.map(|b| b.to_string()).unwrap_or_default(),
            of(r.grad_residual),
            of(r.curvature_residual),
        ];
        rec.extend(r.x.iter().map(|v| fmt_float(*v)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<TraceRow>, CliError> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    if header.len() < FIXED_COLUMNS.len() || header.iter().zip(FIXED_COLUMNS).any(|(a, b)| a != b) {
        return Err(CliError::Parse("unexpected trace header".into()));
    }
    let parse_bool = |s: &str| s.parse::<bool>().map_err(|_| CliError::Parse(format!("not a boolean: {s:?}")));
    let parse_usize = |s: &str| s.parse::<usize>().map_err(|_| CliError::Parse(format!("not a count: {s:?}")));
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let c = |i: usize| rec.get(i).unwrap_or("");
        rows.push(TraceRow {
            k: parse_usize(c(0))?,
            f: parse_float(c(1))?,
            dual_grad_norm: parse_float(c(2))?,
            lambda_min: opt(c(3), parse_float)?,
            sigma: parse_float(c(4))?,
            rho: opt(c(5), parse_float)?,
            step_norm: opt(c(6), parse_float)?,
            accepted: parse_bool(c(7))?,
            inner_iterations: parse_usize(c(8))?,
            descent_ok: opt(c(9), parse_bool)?,
            grad_residual: opt(c(10), parse_float)?,
            curvature_residual: opt(c(11), parse_float)?,
            x: (FIXED_COLUMNS.len()..rec.len()).map(|i| parse_float(c(i))).collect::<Result<_, _>>()?,
        });
    }
    Ok(rows)
}

pub fn write_json<W: Write>(mut out: W, rows: &[TraceRow]) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut out, rows)?;
    writeln!(out)?;
    Ok(())
}

pub fn read_json<R: Read>(input: R) -> Result<Vec<TraceRow>, CliError> {
    Ok(serde_json::from_reader(input)?)
}

/// An `f64` that survives JSON even when it is not finite.
struct Float(f64);

impl Serialize for Float {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str(&fmt_float(self.0))
        }
    }
}

impl<'de> Deserialize<'de> for Float {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = Float;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a number or one of \"inf\", \"-inf\", \"NaN\"")
            }
            fn visit_f64<E>(self, v: f64) -> Result<Float, E> {
                Ok(Float(v))
            }
            fn visit_i64<E>(self, v: i64) -> Result<Float, E> {
                Ok(Float(v as f64))
            }
            fn visit_u64<E>(self, v: u64) -> Result<Float, E> {
                Ok(Float(v as f64))
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<Float, E> {
                v.parse().map(Float).map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

mod float {
    use super::Float;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        Float(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Float::deserialize(d).map(|f| f.0)
    }
}

mod opt_float {
    use super::Float;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => s.serialize_some(&Float(*x)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Option::<Float>::deserialize(d).map(|o| o.map(|f| f.0))
    }
}

mod float_vec {
    use super::Float;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|x| Float(*x)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<Float>::deserialize(d).map(|v| v.into_iter().map(|f| f.0).collect())
    }
}
