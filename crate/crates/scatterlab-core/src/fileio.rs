//! Plain-text file formats for signals, spectra, filter banks, and matrices.
//!
//! All formats are line oriented UTF-8. Floating-point values are written
//! with Rust's shortest round-trip formatting, so read-after-write reproduces
//! values exactly. Parsers validate every count against the data actually
//! present and never allocate based on unverified header claims, so they are
//! safe on untrusted input.
//!
//! Signal / spectrum:
//! ```text
//! group: 2 x 3
//! <re> <im>        one line per element, row-major order
//! ```
//!
//! Filter bank (spectral coefficients; the first filter block is the output
//! filter):
//! ```text
//! group: 8
//! filters: 3
//! support_threshold: 1e-12
//! filter chi
//! <re> <im>        one line per dual element
//! filter psi0
//! ...
//! ```
//!
//! Matrix:
//! ```text
//! matrix <rows> <cols>
//! <re> <im>        rows*cols lines, row-major
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::frames::FilterBank;
use crate::group::GroupSpec;
use crate::signal::{Signal, SpectralSignal};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

/// Lines paired with their 1-based numbers, blank lines skipped.
struct Lines<'a> {
    iter: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            iter: text.lines().enumerate(),
        }
    }

    fn next_content(&mut self) -> Option<(usize, &'a str)> {
        for (idx, raw) in self.iter.by_ref() {
            let trimmed = raw.trim();
            if !trimmed.is_empty() {
                return Some((idx + 1, trimmed));
            }
        }
        None
    }
}

fn parse_finite(token: &str, line: usize) -> Result<f64> {
    let value: f64 = token
        .parse()
        .map_err(|_| parse_err(line, format!("expected a float, got {token:?}")))?;
    if !value.is_finite() {
        return Err(parse_err(line, format!("non-finite value {token:?}")));
    }
    Ok(value)
}

fn parse_complex_line(text: &str, line: usize) -> Result<Complex64> {
    let mut tokens = text.split_whitespace();
    let re = tokens
        .next()
        .ok_or_else(|| parse_err(line, "expected `re im`"))?;
    let im = tokens
        .next()
        .ok_or_else(|| parse_err(line, "expected two floats `re im`"))?;
    if tokens.next().is_some() {
        return Err(parse_err(line, "trailing tokens after `re im`"));
    }
    Ok(Complex64::new(
        parse_finite(re, line)?,
        parse_finite(im, line)?,
    ))
}

fn parse_group_header(lines: &mut Lines<'_>) -> Result<GroupSpec> {
    let (num, text) = lines
        .next_content()
        .ok_or_else(|| parse_err(1, "empty input, expected `group: ...` header"))?;
    let spec = text
        .strip_prefix("group:")
        .ok_or_else(|| parse_err(num, "expected `group: n1 x n2 x ...` header"))?;
    GroupSpec::parse(spec).map_err(|e| parse_err(num, e.to_string()))
}

/// Reads exactly `count` coefficient lines.
fn parse_complex_block(lines: &mut Lines<'_>, count: usize, what: &str) -> Result<Vec<Complex64>> {
    let mut values = Vec::with_capacity(count.min(1 << 20));
    let mut last_line = 0;
    while values.len() < count {
        match lines.next_content() {
            Some((num, text)) => {
                values.push(parse_complex_line(text, num)?);
                last_line = num;
            }
            None => {
                return Err(parse_err(
                    last_line + 1,
                    format!("{what}: expected {count} value lines, found {}", values.len()),
                ))
            }
        }
    }
    Ok(values)
}

fn format_complex(out: &mut String, z: Complex64) {
    // `{}` on f64 is shortest-round-trip, so reading the file back restores
    // the exact bits.
    let _ = writeln!(out, "{} {}", z.re, z.im);
}

/// Serializes a signal to the text format.
pub fn format_signal(f: &Signal) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "group: {}", f.group());
    for &z in f.values() {
        format_complex(&mut out, z);
    }
    out
}

/// Parses a signal from the text format.
pub fn parse_signal(text: &str) -> Result<Signal> {
    let mut lines = Lines::new(text);
    let group = parse_group_header(&mut lines)?;
    let values = parse_complex_block(&mut lines, group.order(), "signal values")?;
    if let Some((num, _)) = lines.next_content() {
        return Err(parse_err(num, "unexpected content after signal values"));
    }
    Signal::from_values(group, values)
}

/// Serializes a spectrum; same layout as a signal, indexed by dual elements.
pub fn format_spectrum(spec: &SpectralSignal) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "group: {}", spec.group());
    for &z in spec.coeffs() {
        format_complex(&mut out, z);
    }
    out
}

/// Parses a spectrum from the text format.
pub fn parse_spectrum(text: &str) -> Result<SpectralSignal> {
    let f = parse_signal(text)?;
    SpectralSignal::from_coeffs(f.group().clone(), f.values().to_vec())
}

/// Serializes a filter bank.
pub fn format_bank(bank: &FilterBank) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "group: {}", bank.group());
    let _ = writeln!(out, "filters: {}", bank.num_high_pass() + 1);
    let _ = writeln!(out, "support_threshold: {}", bank.support_threshold());
    let _ = writeln!(out, "filter chi");
    for &z in bank.chi_hat().coeffs() {
        format_complex(&mut out, z);
    }
    for (j, psi) in bank.psi_hats().iter().enumerate() {
        let _ = writeln!(out, "filter psi{j}");
        for &z in psi.coeffs() {
            format_complex(&mut out, z);
        }
    }
    out
}

/// Parses a filter bank; the first filter block is the output filter, the
/// remaining blocks are the high-pass family.
pub fn parse_bank(text: &str) -> Result<FilterBank> {
    let mut lines = Lines::new(text);
    let group = parse_group_header(&mut lines)?;

    let (num, text_line) = lines
        .next_content()
        .ok_or_else(|| parse_err(2, "expected `filters: <count>`"))?;
    let count: usize = text_line
        .strip_prefix("filters:")
        .ok_or_else(|| parse_err(num, "expected `filters: <count>`"))?
        .trim()
        .parse()
        .map_err(|_| parse_err(num, "bad filter count"))?;
    if count == 0 {
        return Err(parse_err(num, "a bank needs at least the output filter"));
    }

    let (num, text_line) = lines
        .next_content()
        .ok_or_else(|| parse_err(num + 1, "expected `support_threshold: <float>`"))?;
    let threshold = parse_finite(
        text_line
            .strip_prefix("support_threshold:")
            .ok_or_else(|| parse_err(num, "expected `support_threshold: <float>`"))?
            .trim(),
        num,
    )?;

    let mut filters = Vec::new();
    for k in 0..count {
        let (num, text_line) = lines
            .next_content()
            .ok_or_else(|| parse_err(0, format!("missing `filter` block {k}")))?;
        if !text_line.starts_with("filter") {
            return Err(parse_err(num, "expected a `filter <name>` block header"));
        }
        let coeffs = parse_complex_block(&mut lines, group.order(), "filter coefficients")?;
        filters.push(SpectralSignal::from_coeffs(group.clone(), coeffs)?);
    }
    if let Some((num, _)) = lines.next_content() {
        return Err(parse_err(num, "unexpected content after the last filter"));
    }

    let chi_hat = filters.remove(0);
    FilterBank::new(chi_hat, filters, threshold)
}

/// Serializes a dense complex matrix.
pub fn format_matrix(m: &DMatrix<Complex64>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "matrix {} {}", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            format_complex(&mut out, m[(i, j)]);
        }
    }
    out
}

/// Parses a dense complex matrix.
pub fn parse_matrix(text: &str) -> Result<DMatrix<Complex64>> {
    let mut lines = Lines::new(text);
    let (num, header) = lines
        .next_content()
        .ok_or_else(|| parse_err(1, "empty input, expected `matrix <rows> <cols>`"))?;
    let mut tokens = header.split_whitespace();
    if tokens.next() != Some("matrix") {
        return Err(parse_err(num, "expected `matrix <rows> <cols>` header"));
    }
    let rows: usize = tokens
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| parse_err(num, "bad row count"))?;
    let cols: usize = tokens
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| parse_err(num, "bad column count"))?;
    if tokens.next().is_some() {
        return Err(parse_err(num, "trailing tokens after matrix header"));
    }
    let total = rows
        .checked_mul(cols)
        .ok_or_else(|| parse_err(num, "matrix size overflows"))?;
    if rows == 0 || cols == 0 {
        return Err(parse_err(num, "matrix dimensions must be positive"));
    }
    let entries = parse_complex_block(&mut lines, total, "matrix entries")?;
    if let Some((num, _)) = lines.next_content() {
        return Err(parse_err(num, "unexpected content after matrix entries"));
    }
    Ok(DMatrix::from_row_iterator(rows, cols, entries))
}

/// Reads and parses a signal file.
pub fn read_signal(path: &Path) -> Result<Signal> {
    parse_signal(&fs::read_to_string(path)?)
}

pub fn write_signal(path: &Path, f: &Signal) -> Result<()> {
    Ok(fs::write(path, format_signal(f))?)
}

pub fn read_bank(path: &Path) -> Result<FilterBank> {
    parse_bank(&fs::read_to_string(path)?)
}

pub fn write_bank(path: &Path, bank: &FilterBank) -> Result<()> {
    Ok(fs::write(path, format_bank(bank))?)
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<Complex64>> {
    parse_matrix(&fs::read_to_string(path)?)
}

pub fn write_matrix(path: &Path, m: &DMatrix<Complex64>) -> Result<()> {
    Ok(fs::write(path, format_matrix(m))?)
}
