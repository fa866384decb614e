//! Plain-text field files.
//!
//! ```text
//! # comment lines start with '#'
//! d K N_t T
//! t_idx k_1 .. k_d re im
//! ...
//! ```
//!
//! A single spatial field is written with `N_t = 0` and `T = 0` and every entry
//! uses `t_idx = 0`. Numbers use the shortest decimal form that parses back to
//! the same `f64`, so writing then reading is exact. Entries that are absent on
//! read are zero. The reality flag of each slice is restored from exact
//! conjugate symmetry.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{ModeSet, SpaceTimeField, SpectralField, TimeGrid};

/// Contents of a field file.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldData {
    Spatial(SpectralField),
    SpaceTime(SpaceTimeField),
}

fn write_slice(out: &mut String, t_idx: usize, f: &SpectralField) {
    for (k, c) in f.modes().modes().zip(f.coeffs()) {
        let _ = write!(out, "{t_idx}");
        for kn in k.components() {
            let _ = write!(out, " {kn}");
        }
        let _ = writeln!(out, " {} {}", c.re, c.im);
    }
}

pub fn format_spatial(f: &SpectralField) -> String {
    let mut out = format!("{} {} 0 0\n", f.dim(), f.trunc());
    write_slice(&mut out, 0, f);
    out
}

pub fn format_space_time(f: &SpaceTimeField) -> String {
    let modes = f.modes();
    let grid = f.grid();
    let mut out = format!(
        "{} {} {} {}\n",
        modes.dim(),
        modes.trunc(),
        grid.steps(),
        grid.horizon()
    );
    for (i, s) in f.slices().iter().enumerate() {
        write_slice(&mut out, i, s);
    }
    out
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| parse_err(line, format!("bad {what} '{tok}'")))
}

pub fn parse(text: &str) -> Result<FieldData> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty field file"))?;
    let mut toks = header.split_whitespace();
    let dim: usize = field(toks.next(), hline, "dimension")?;
    let trunc: usize = field(toks.next(), hline, "truncation")?;
    let steps: usize = field(toks.next(), hline, "N_t")?;
    let horizon: f64 = field(toks.next(), hline, "T")?;
    if toks.next().is_some() {
        return Err(parse_err(hline, "header has extra tokens"));
    }
    let modes = ModeSet::new(dim, trunc).map_err(|e| parse_err(hline, e.to_string()))?;
    let grid = if steps == 0 {
        None
    } else {
        Some(TimeGrid::new(horizon, steps).map_err(|e| parse_err(hline, e.to_string()))?)
    };
    let n_slices = grid.map_or(1, |g| g.len());

    let mut coeffs = vec![vec![Complex64::new(0.0, 0.0); modes.len()]; n_slices];
    let mut seen = vec![vec![false; modes.len()]; n_slices];
    let mut k = vec![0i64; dim];
    for (ln, l) in lines {
        let mut toks = l.split_whitespace();
        let t_idx: usize = field(toks.next(), ln, "time index")?;
        for kn in k.iter_mut() {
            *kn = field(toks.next(), ln, "mode component")?;
        }
        let re: f64 = field(toks.next(), ln, "real part")?;
        let im: f64 = field(toks.next(), ln, "imaginary part")?;
        if toks.next().is_some() {
            return Err(parse_err(ln, "entry has extra tokens"));
        }
        if t_idx >= n_slices {
            return Err(parse_err(ln, format!("time index {t_idx} out of range")));
        }
        let idx = modes
            .index_of(&k)
            .ok_or_else(|| parse_err(ln, format!("mode {k:?} outside |k|_inf <= {trunc}")))?;
        if std::mem::replace(&mut seen[t_idx][idx], true) {
            return Err(parse_err(
                ln,
                format!("duplicate entry for t={t_idx}, k={k:?}"),
            ));
        }
        coeffs[t_idx][idx] = Complex64::new(re, im);
    }

    let slices = coeffs
        .into_iter()
        .map(|c| SpectralField::from_coeffs_inferred(modes, c))
        .collect::<Result<Vec<_>>>()?;
    match grid {
        None => Ok(FieldData::Spatial(
            slices.into_iter().next().expect("one slice"),
        )),
        Some(g) => Ok(FieldData::SpaceTime(SpaceTimeField::from_slices(
            g, slices,
        )?)),
    }
}

pub fn write_spatial(path: &Path, f: &SpectralField) -> Result<()> {
    std::fs::write(path, format_spatial(f)).map_err(|e| Error::io(path, e))
}

pub fn write_space_time(path: &Path, f: &SpaceTimeField) -> Result<()> {
    std::fs::write(path, format_space_time(f)).map_err(|e| Error::io(path, e))
}

pub fn read(path: &Path) -> Result<FieldData> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(&text)
}
