//! Plain-text measure, coupling and grid files.
//!
//! ```text
//! dim=2 atoms=3          dim=1 pairs=2           dim=2 n=3x2 origin=0,0 spacing=0.5,0.5
//! 0.5 0 0                0.5 0 1                 0 1 0
//! 0.25 1 0               0.5 1 2                 1 2 1
//! 0.25 0 1
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Grid values are
//! row-major with the last axis fastest; they may be split across lines
//! freely.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::GridDensity;
use crate::measure::{Coupling, DiscreteMeasure};

/// Contents of any of the three file kinds.
#[derive(Debug, Clone, PartialEq)]
pub enum Loaded {
    Measure(DiscreteMeasure),
    Coupling(Coupling),
    Grid(GridDensity),
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn header_fields(line: &str) -> Result<Vec<(&str, &str)>> {
    line.split_whitespace()
        .map(|tok| tok.split_once('=').ok_or_else(|| Error::Parse(format!("header token `{tok}` is not key=value"))))
        .collect()
}

fn field<'a>(fields: &[(&str, &'a str)], key: &str) -> Result<&'a str> {
    fields
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| Error::Parse(format!("header lacks `{key}`")))
}

fn parse_usize(s: &str, what: &str) -> Result<usize> {
    s.parse().map_err(|_| Error::Parse(format!("{what} `{s}` is not a nonnegative integer")))
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    let v: f64 = s.parse().map_err(|_| Error::Parse(format!("line {line}: `{s}` is not a number")))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("line {line}: non-finite value `{s}`")));
    }
    Ok(v)
}

pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Parse(format!("`{t}` is not a number"))))
        .collect()
}

fn rows(text: &str, count: usize, width: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(count * width);
    let mut seen = 0;
    for (line, l) in content_lines(text).skip(1) {
        let vals = l.split_whitespace().map(|t| parse_f64(t, line)).collect::<Result<Vec<_>>>()?;
        if vals.len() != width {
            return Err(Error::Parse(format!("line {line}: expected {width} numbers, found {}", vals.len())));
        }
        out.extend(vals);
        seen += 1;
    }
    if seen != count {
        return Err(Error::Parse(format!("header announces {count} rows, file has {seen}")));
    }
    Ok(out)
}

pub fn parse_measure(text: &str) -> Result<DiscreteMeasure> {
    match parse_any(text)? {
        Loaded::Measure(m) => Ok(m),
        _ => Err(Error::Parse("expected a measure file (`dim=<d> atoms=<n>`)".into())),
    }
}

pub fn parse_coupling(text: &str) -> Result<Coupling> {
    match parse_any(text)? {
        Loaded::Coupling(c) => Ok(c),
        _ => Err(Error::Parse("expected a coupling file (`dim=<d> pairs=<n>`)".into())),
    }
}

pub fn parse_grid(text: &str) -> Result<GridDensity> {
    match parse_any(text)? {
        Loaded::Grid(g) => Ok(g),
        _ => Err(Error::Parse("expected a grid file (`dim=<d> n=<n1>[x<n2>] ...`)".into())),
    }
}

/// Dispatches on the header keys.
pub fn parse_any(text: &str) -> Result<Loaded> {
    let (_, header) = content_lines(text).next().ok_or_else(|| Error::Parse("empty file".into()))?;
    let fields = header_fields(header)?;
    let dim = parse_usize(field(&fields, "dim")?, "dim")?;
    if dim == 0 {
        return Err(Error::Parse("dim must be positive".into()));
    }
    if let Ok(n) = field(&fields, "atoms") {
        let n = parse_usize(n, "atoms")?;
        let data = rows(text, n, dim + 1)?;
        let (mut pts, mut w) = (Vec::with_capacity(n * dim), Vec::with_capacity(n));
        for row in data.chunks(dim + 1) {
            w.push(row[0]);
            pts.extend_from_slice(&row[1..]);
        }
        return DiscreteMeasure::from_flat(dim, pts, w).map(Loaded::Measure);
    }
    if let Ok(n) = field(&fields, "pairs") {
        let n = parse_usize(n, "pairs")?;
        let data = rows(text, n, 2 * dim + 1)?;
        let (mut xs, mut ys, mut w) = (Vec::new(), Vec::new(), Vec::new());
        for row in data.chunks(2 * dim + 1) {
            w.push(row[0]);
            xs.extend_from_slice(&row[1..=dim]);
            ys.extend_from_slice(&row[dim + 1..]);
        }
        return Coupling::from_flat(dim, xs, ys, w).map(Loaded::Coupling);
    }
    if let Ok(n) = field(&fields, "n") {
        let shape = n.split('x').map(|s| parse_usize(s, "grid size")).collect::<Result<Vec<_>>>()?;
        if shape.len() != dim {
            return Err(Error::Parse(format!("grid shape {n} does not have {dim} axes")));
        }
        let origin = parse_list(field(&fields, "origin")?)?;
        let spacing = parse_list(field(&fields, "spacing")?)?;
        let mut values = Vec::with_capacity(shape.iter().product());
        for (line, l) in content_lines(text).skip(1) {
            for t in l.split_whitespace() {
                values.push(parse_f64(t, line)?);
            }
        }
        return GridDensity::new(shape, origin, spacing, values).map(Loaded::Grid);
    }
    Err(Error::Parse("header names neither atoms, pairs nor n".into()))
}

pub fn read_any(path: &Path) -> Result<Loaded> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_any(&text).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn num(out: &mut String, v: f64) {
    let _ = write!(out, "{v:.17e}");
}

pub fn format_measure(mu: &DiscreteMeasure) -> String {
    let mut s = format!("dim={} atoms={}\n", mu.dim(), mu.len());
    for (x, w) in mu.iter() {
        num(&mut s, w);
        for v in x {
            s.push(' ');
            num(&mut s, *v);
        }
        s.push('\n');
    }
    s
}

pub fn format_coupling(g: &Coupling) -> String {
    let mut s = format!("dim={} pairs={}\n", g.dim(), g.len());
    for (x, y, w) in g.iter() {
        num(&mut s, w);
        for v in x.iter().chain(y) {
            s.push(' ');
            num(&mut s, *v);
        }
        s.push('\n');
    }
    s
}

pub fn format_grid(g: &GridDensity) -> String {
    let join = |v: &[f64]| v.iter().map(|x| format!("{x:.17e}")).collect::<Vec<_>>().join(",");
    let shape = g.shape().iter().map(|n| n.to_string()).collect::<Vec<_>>().join("x");
    let mut s = format!("dim={} n={shape} origin={} spacing={}\n", g.dim(), join(g.origin()), join(g.spacing()));
    let row = *g.shape().last().expect("nonempty shape");
    for chunk in g.values().chunks(row) {
        let line: Vec<String> = chunk.iter().map(|v| format!("{v:.17e}")).collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}
