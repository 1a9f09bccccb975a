//! The `k,value` curve format.
//!
//! ```text
//! # k_min=1
//! k,value
//! 1,10.5
//! 2,4.25
//! ```
//!
//! Indices must be consecutive. Without a `k_min` line the first row sets
//! the offset; with one, the first row must match it.

use std::fmt::Write as _;

use elbowkit::ErrorCurve;
use thiserror::Error;

pub const HEADER: &str = "k,value";

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

fn fail<T>(line: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError { line, message: message.into() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveFile {
    pub k_min: usize,
    pub values: Vec<f64>,
}

impl CurveFile {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut k_min: Option<usize> = None;
        let mut seen_header = false;
        let mut values = Vec::new();
        let mut last_k: Option<usize> = None;

        for (i, raw) in text.lines().enumerate() {
            let n = i + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(v) = comment.trim().strip_prefix("k_min=") {
                    if seen_header {
                        return fail(n, "k_min must appear before the header");
                    }
                    if k_min.is_some() {
                        return fail(n, "k_min given twice");
                    }
                    match v.trim().parse::<usize>() {
                        Ok(k) => k_min = Some(k),
                        Err(_) => return fail(n, format!("invalid k_min `{}`", v.trim())),
                    }
                }
                continue;
            }
            if !seen_header {
                let cols: Vec<&str> = line.split(',').map(str::trim).collect();
                if cols != ["k", "value"] {
                    return fail(n, format!("expected header `{HEADER}`, found `{line}`"));
                }
                seen_header = true;
                continue;
            }
            let mut cols = line.split(',').map(str::trim);
            let (k, v) = match (cols.next(), cols.next(), cols.next()) {
                (Some(k), Some(v), None) => (k, v),
                _ => return fail(n, format!("expected two columns, found `{line}`")),
            };
            let k: usize = match k.parse() {
                Ok(k) => k,
                Err(_) => return fail(n, format!("invalid index `{k}`")),
            };
            let v: f64 = match v.parse() {
                Ok(v) => v,
                Err(_) => return fail(n, format!("invalid value `{v}`")),
            };
            match last_k {
                None => {
                    if let Some(start) = k_min {
                        if k != start {
                            return fail(n, format!("first index {k} does not match k_min={start}"));
                        }
                    }
                    k_min = Some(k);
                }
                Some(prev) if k == prev => return fail(n, format!("duplicate index {k}")),
                Some(prev) if k < prev => return fail(n, format!("index {k} after {prev}; indices must increase")),
                Some(prev) if k != prev + 1 => return fail(n, format!("gap between index {prev} and {k}")),
                Some(_) => {}
            }
            last_k = Some(k);
            values.push(v);
        }
        if !seen_header {
            return fail(text.lines().count().max(1), format!("missing header `{HEADER}`"));
        }
        if values.is_empty() {
            return fail(text.lines().count().max(1), "no data rows");
        }
        Ok(Self { k_min: k_min.unwrap_or(0), values })
    }

    /// Writes a curve so that [`CurveFile::parse`] reproduces it exactly.
    pub fn render(curve: &ErrorCurve) -> String {
        let mut out = format!("# k_min={}\n{HEADER}\n", curve.offset());
        for (i, v) in curve.values().iter().enumerate() {
            let _ = writeln!(out, "{},{v:?}", i + curve.offset());
        }
        out
    }
}
