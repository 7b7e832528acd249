//! Text formats for complexes, signals and sampling masks.
//!
//! Complex files are line oriented:
//!
//! ```text
//! # comment
//! nodes 3
//! edge 0 1
//! edge 1 2
//! edge 0 2
//! triangle 0 1 2
//! ```
//!
//! Signals are CSV with header `order,index,value`; entries not listed are
//! zero. Masks are CSV with header `order,index`.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::complex::{CochainStack, SimplicialComplex};
use crate::detector::SamplingMask;
use crate::error::{Error, Result};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

pub fn parse_complex<R: Read>(reader: R) -> Result<SimplicialComplex> {
    let mut nodes: Option<usize> = None;
    let mut edges = Vec::new();
    let mut triangles = Vec::new();
    let mut edge_set = HashSet::new();
    let mut tri_set = HashSet::new();

    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut tok = body.split_whitespace();
        let kw = tok.next().unwrap_or_default();
        let nums = tok
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| parse_err(lineno, format!("`{t}` is not a vertex index")))
            })
            .collect::<Result<Vec<_>>>()?;
        let arity = |want: usize| {
            if nums.len() != want {
                Err(parse_err(
                    lineno,
                    format!("`{kw}` expects {want} integers, found {}", nums.len()),
                ))
            } else {
                Ok(())
            }
        };
        let n = match (kw, nodes) {
            ("nodes", None) => {
                arity(1)?;
                nodes = Some(nums[0]);
                continue;
            }
            ("nodes", Some(_)) => return Err(parse_err(lineno, "`nodes` given twice")),
            (_, None) => return Err(parse_err(lineno, "`nodes` must come first")),
            (_, Some(n)) => n,
        };
        if let Some(&v) = nums.iter().find(|&&v| v >= n) {
            return Err(parse_err(
                lineno,
                format!("vertex {v} out of range for {n} nodes"),
            ));
        }
        match kw {
            "edge" => {
                arity(2)?;
                let (a, b) = (nums[0], nums[1]);
                if a == b {
                    return Err(parse_err(lineno, format!("edge {a} {b} repeats a vertex")));
                }
                if !triangles.is_empty() {
                    return Err(parse_err(lineno, "edges must precede triangles"));
                }
                if !edge_set.insert((a.min(b), a.max(b))) {
                    return Err(parse_err(lineno, format!("duplicate edge {a} {b}")));
                }
                edges.push((a, b));
            }
            "triangle" => {
                arity(3)?;
                let mut t = [nums[0], nums[1], nums[2]];
                t.sort_unstable();
                if t[0] == t[1] || t[1] == t[2] {
                    return Err(parse_err(lineno, "triangle repeats a vertex"));
                }
                for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[0], t[2])] {
                    if !edge_set.contains(&(a, b)) {
                        return Err(parse_err(
                            lineno,
                            format!("triangle {} {} {} has no edge {a} {b}", t[0], t[1], t[2]),
                        ));
                    }
                }
                if !tri_set.insert(t) {
                    return Err(parse_err(lineno, "duplicate triangle"));
                }
                triangles.push((nums[0], nums[1], nums[2]));
            }
            other => return Err(parse_err(lineno, format!("unknown keyword `{other}`"))),
        }
    }
    let n = nodes.ok_or(Error::EmptyInput)?;
    SimplicialComplex::build(n, &edges, &triangles)
}

pub fn read_complex(path: impl AsRef<Path>) -> Result<SimplicialComplex> {
    parse_complex(File::open(path)?)
}

pub fn write_complex<W: Write>(cx: &SimplicialComplex, mut w: W) -> Result<()> {
    writeln!(w, "nodes {}", cx.node_count())?;
    for [i, j] in cx.edges() {
        writeln!(w, "edge {i} {j}")?;
    }
    for [i, j, k] in cx.triangles() {
        writeln!(w, "triangle {i} {j} {k}")?;
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct SignalRow {
    order: usize,
    index: usize,
    value: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct MaskRow {
    order: usize,
    index: usize,
}

fn row_line(pos: Option<&csv::Position>, fallback: usize) -> usize {
    pos.map(|p| p.line() as usize).unwrap_or(fallback)
}

pub fn parse_signal<R: Read>(cx: &SimplicialComplex, reader: R) -> Result<CochainStack> {
    let mut out = CochainStack::zeros(cx);
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    for (i, rec) in rdr.deserialize::<SignalRow>().enumerate() {
        let fallback = i + 2;
        let row = rec.map_err(|e| parse_err(row_line(e.position(), fallback), e.to_string()))?;
        if row.order > 2 {
            return Err(parse_err(fallback, format!("order {} not supported", row.order)));
        }
        if row.index >= cx.count(row.order) {
            return Err(parse_err(
                fallback,
                format!(
                    "index {} out of range for {} simplices of order {}",
                    row.index,
                    cx.count(row.order),
                    row.order
                ),
            ));
        }
        out.slice_mut(row.order)[row.index] = row.value;
    }
    Ok(out)
}

pub fn read_signal(cx: &SimplicialComplex, path: impl AsRef<Path>) -> Result<CochainStack> {
    parse_signal(cx, File::open(path)?)
}

pub fn write_signal<W: Write>(s: &CochainStack, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for k in 0..3 {
        for (index, &value) in s.slice(k).iter().enumerate() {
            wtr.serialize(SignalRow {
                order: k,
                index,
                value,
            })?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Which coordinates a mask refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MaskScope {
    /// Entries of a single order; the mask lives in `R^{N_k}`.
    Order(usize),
    /// The stacked signal; the mask lives in `R^N`.
    Stack,
}

impl MaskScope {
    pub fn ambient_dim(self, cx: &SimplicialComplex) -> usize {
        match self {
            MaskScope::Order(k) => cx.count(k),
            MaskScope::Stack => cx.total_dim(),
        }
    }

    /// Restricts a stacked signal to the scope.
    pub fn extract(self, cx: &SimplicialComplex, s: &CochainStack) -> Vec<f64> {
        match self {
            MaskScope::Order(k) => s.slice(k).to_vec(),
            MaskScope::Stack => {
                let _ = cx;
                s.flatten()
            }
        }
    }
}

pub fn parse_mask<R: Read>(cx: &SimplicialComplex, scope: MaskScope, reader: R) -> Result<SamplingMask> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut selected = Vec::new();
    for (i, rec) in rdr.deserialize::<MaskRow>().enumerate() {
        let fallback = i + 2;
        let row = rec.map_err(|e| parse_err(row_line(e.position(), fallback), e.to_string()))?;
        if row.order > 2 || row.index >= cx.count(row.order) {
            return Err(parse_err(
                fallback,
                format!("entry ({}, {}) not in the complex", row.order, row.index),
            ));
        }
        let idx = match scope {
            MaskScope::Order(k) if k == row.order => row.index,
            MaskScope::Order(k) => {
                return Err(parse_err(
                    fallback,
                    format!("mask entry of order {} for an order-{k} signal", row.order),
                ))
            }
            MaskScope::Stack => cx.offset(row.order) + row.index,
        };
        selected.push(idx);
    }
    SamplingMask::new(scope.ambient_dim(cx), selected)
}

pub fn read_mask(cx: &SimplicialComplex, scope: MaskScope, path: impl AsRef<Path>) -> Result<SamplingMask> {
    parse_mask(cx, scope, File::open(path)?)
}

pub fn write_mask<W: Write>(cx: &SimplicialComplex, scope: MaskScope, mask: &SamplingMask, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["order", "index"])?;
    for &i in mask.selected() {
        let (order, index) = match scope {
            MaskScope::Order(k) => (k, i),
            MaskScope::Stack => {
                let k = (0..3).rev().find(|&k| i >= cx.offset(k)).unwrap_or(0);
                (k, i - cx.offset(k))
            }
        };
        wtr.serialize((order, index))?;
    }
    wtr.flush()?;
    Ok(())
}
