//! JSON and MatrixMarket serialisation.
//!
//! * graph: `{"g","n","genera","legs","edges"}`, vertices from 0;
//! * monomial: `{"graph", "kappa": [[v, i, mult]], "psi": [["e0.1", exp]]}`
//!   with half-edges named `m<marking>` or `e<edge>.<side>`;
//! * vector: list of `{"monomial": index | monomial, "coeff": "p/q"}`;
//! * matrix: MatrixMarket coordinate files, either with a `rational` field
//!   holding `p/q` entries or an `integer` field of residues mod a prime.

use std::fmt::Write as _;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dualgraph::{DualGraph, HalfEdge};
use crate::error::{Error, Result};
use crate::exactla::{RankReport, RelationMatrix, SparseRow};
use crate::field::{format_rational, parse_rational};
use crate::ideal::SpanJob;
use crate::pixton::RelationParams;
use crate::strata::{Basis, Decoration, StrataMonomial, TautVector};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphJson {
    pub g: u32,
    pub n: u32,
    pub genera: Vec<u32>,
    pub legs: Vec<Vec<u32>>,
    pub edges: Vec<[usize; 2]>,
}

impl From<&DualGraph> for GraphJson {
    fn from(gr: &DualGraph) -> Self {
        GraphJson {
            g: gr.genus(),
            n: gr.num_markings() as u32,
            genera: gr.genera().to_vec(),
            legs: gr.legs().to_vec(),
            edges: gr.edges().iter().map(|&(a, b)| [a, b]).collect(),
        }
    }
}

impl GraphJson {
    pub fn to_graph(&self) -> Result<DualGraph> {
        let gr = DualGraph::new(self.genera.clone(), self.legs.clone(), self.edges.iter().map(|e| (e[0], e[1])).collect())?;
        if (gr.genus(), gr.num_markings() as u32) != (self.g, self.n) {
            return Err(Error::Parse(format!(
                "graph has type ({}, {}) but declares ({}, {})",
                gr.genus(),
                gr.num_markings(),
                self.g,
                self.n
            )));
        }
        Ok(gr)
    }
}

pub fn graph_to_json(gr: &DualGraph) -> String {
    serde_json::to_string(&GraphJson::from(gr)).expect("graph serialises")
}

pub fn graph_from_json(s: &str) -> Result<DualGraph> {
    let gj: GraphJson = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
    gj.to_graph()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonomialJson {
    pub graph: GraphJson,
    /// `[vertex, index, multiplicity]`
    pub kappa: Vec<[u32; 3]>,
    /// `[half-edge name, exponent]`, nonzero exponents in slot order
    pub psi: Vec<(String, u32)>,
}

impl From<&StrataMonomial> for MonomialJson {
    fn from(m: &StrataMonomial) -> Self {
        let mut kappa = Vec::new();
        for (v, ks) in m.deco.kappa.iter().enumerate() {
            let mut i = 0;
            while i < ks.len() {
                let j = ks[i..].iter().take_while(|&&x| x == ks[i]).count();
                kappa.push([v as u32, ks[i], j as u32]);
                i += j;
            }
        }
        let psi = (0..m.graph.num_slots())
            .filter(|&s| m.deco.psi[s] > 0)
            .map(|s| (m.graph.half_edge(s).to_string(), m.deco.psi[s]))
            .collect();
        MonomialJson { graph: GraphJson::from(&m.graph), kappa, psi }
    }
}

fn parse_half_edge(s: &str) -> Result<HalfEdge> {
    let bad = || Error::Parse(format!("bad half-edge name {s:?}"));
    if let Some(rest) = s.strip_prefix('m') {
        return Ok(HalfEdge::Leg(rest.parse().map_err(|_| bad())?));
    }
    let rest = s.strip_prefix('e').ok_or_else(bad)?;
    let (e, side) = rest.split_once('.').ok_or_else(bad)?;
    let side: u8 = side.parse().map_err(|_| bad())?;
    if side > 1 {
        return Err(bad());
    }
    Ok(HalfEdge::Edge { edge: e.parse().map_err(|_| bad())?, side })
}

impl MonomialJson {
    pub fn to_monomial(&self) -> Result<StrataMonomial> {
        let gr = self.graph.to_graph()?;
        let mut deco = Decoration::trivial(&gr);
        for &[v, i, mult] in &self.kappa {
            let slot = deco.kappa.get_mut(v as usize).ok_or_else(|| Error::Parse(format!("no vertex {v}")))?;
            if i == 0 {
                return Err(Error::Parse("κ_0 is not a basis variable".into()));
            }
            slot.extend(std::iter::repeat_n(i, mult as usize));
            slot.sort_unstable();
        }
        for (name, exp) in &self.psi {
            let h = parse_half_edge(name)?;
            let valid = match h {
                HalfEdge::Leg(m) => m >= 1 && m as usize <= gr.num_markings(),
                HalfEdge::Edge { edge, .. } => edge < gr.num_edges(),
            };
            if !valid {
                return Err(Error::Parse(format!("half-edge {name} not in graph")));
            }
            deco.psi[gr.slot(h)] += exp;
        }
        Ok(StrataMonomial::new(gr, deco))
    }
}

pub fn monomial_to_json(m: &StrataMonomial) -> String {
    serde_json::to_string(&MonomialJson::from(m)).expect("monomial serialises")
}

pub fn monomial_from_json(s: &str) -> Result<StrataMonomial> {
    let mj: MonomialJson = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
    mj.to_monomial()
}

/// One monomial per line, in column order.
pub fn basis_to_jsonl(basis: &Basis) -> String {
    let mut out = String::new();
    for m in basis.monomials() {
        out.push_str(&monomial_to_json(m));
        out.push('\n');
    }
    out
}

pub fn basis_from_jsonl(s: &str) -> Result<Vec<StrataMonomial>> {
    s.lines().filter(|l| !l.trim().is_empty()).map(monomial_from_json).collect()
}

#[derive(Serialize, Deserialize)]
struct VectorEntry {
    monomial: Value,
    coeff: String,
}

/// Vector file. With a basis, monomials are written as column indices.
pub fn vector_to_json(v: &TautVector, basis: Option<&Basis>) -> Result<String> {
    let mut entries = Vec::new();
    let mut items: Vec<(Value, &BigRational, Option<usize>)> = Vec::new();
    for (m, c) in v.terms() {
        match basis {
            Some(b) => {
                let i = b.index_of(m).ok_or_else(|| Error::Consistency(format!("monomial not in basis: {m:?}")))?;
                items.push((Value::from(i), c, Some(i)));
            }
            None => items.push((serde_json::to_value(MonomialJson::from(m)).expect("serialises"), c, None)),
        }
    }
    items.sort_by_key(|x| x.2);
    for (monomial, c, _) in items {
        entries.push(VectorEntry { monomial, coeff: format_rational(c) });
    }
    Ok(serde_json::to_string(&entries).expect("vector serialises"))
}

pub fn vector_from_json(s: &str, g: u32, n: u32, degree: u32, basis: Option<&Basis>) -> Result<TautVector> {
    let entries: Vec<VectorEntry> = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
    let mut v = TautVector::zero(g, n, degree);
    for e in entries {
        let m = match (&e.monomial, basis) {
            (Value::Number(k), Some(b)) => {
                let i = k.as_u64().ok_or_else(|| Error::Parse(format!("bad index {k}")))? as usize;
                b.monomials().get(i).cloned().ok_or_else(|| Error::Parse(format!("index {i} out of range")))?
            }
            (Value::Number(_), None) => return Err(Error::Parse("index entries need a basis".into())),
            (obj, _) => {
                let mj: MonomialJson = serde_json::from_value(obj.clone()).map_err(|e| Error::Parse(e.to_string()))?;
                mj.to_monomial()?.canonicalize()
            }
        };
        if (m.genus(), m.num_markings(), m.degree()) != (g, n, degree) {
            return Err(Error::Parse(format!("monomial of type ({}, {}) degree {}", m.genus(), m.num_markings(), m.degree())));
        }
        v.add_term(m, parse_rational(&e.coeff)?);
    }
    Ok(v)
}

/// Exact MatrixMarket with `p/q` entries (1-based indices).
pub fn matrix_to_mtx(m: &RelationMatrix) -> String {
    let mut out = String::from("%%MatrixMarket matrix coordinate rational general\n");
    out.push_str("% entries are exact rationals written p/q\n");
    let _ = writeln!(out, "{} {} {}", m.nrows(), m.ncols, m.nnz());
    for (i, row) in m.rows.iter().enumerate() {
        for (j, v) in row {
            let _ = writeln!(out, "{} {} {}", i + 1, j + 1, format_rational(v));
        }
    }
    out
}

/// Integer MatrixMarket of residues mod `p`.
pub fn rows_to_mtx_mod_p(rows: &[SparseRow<u64>], ncols: usize, p: u64) -> String {
    let nnz: usize = rows.iter().map(Vec::len).sum();
    let mut out = String::from("%%MatrixMarket matrix coordinate integer general\n");
    let _ = writeln!(out, "% residues modulo {p}");
    let _ = writeln!(out, "{} {} {}", rows.len(), ncols, nnz);
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row {
            let _ = writeln!(out, "{} {} {}", i + 1, j + 1, v);
        }
    }
    out
}

/// Reads either flavour; integer entries are read as integers.
pub fn matrix_from_mtx(s: &str) -> Result<RelationMatrix> {
    let mut lines = s.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty matrix file".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 5 || fields[0] != "%%MatrixMarket" || fields[1] != "matrix" || fields[2] != "coordinate" {
        return Err(Error::Parse(format!("unsupported header {header:?}")));
    }
    if !matches!(fields[3], "rational" | "integer") || fields[4] != "general" {
        return Err(Error::Parse(format!("unsupported field {:?}", fields[3])));
    }
    let mut body = lines.filter(|l| !l.starts_with('%') && !l.trim().is_empty());
    let size = body.next().ok_or_else(|| Error::Parse("missing size line".into()))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad size line {size:?}"))))
        .collect::<Result<_>>()?;
    let [nrows, ncols, nnz] = dims[..] else {
        return Err(Error::Parse(format!("bad size line {size:?}")));
    };
    let mut rows: Vec<SparseRow<BigRational>> = vec![Vec::new(); nrows];
    let mut count = 0;
    for line in body {
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.len() != 3 {
            return Err(Error::Parse(format!("bad entry line {line:?}")));
        }
        let i: usize = t[0].parse().map_err(|_| Error::Parse(format!("bad row in {line:?}")))?;
        let j: usize = t[1].parse().map_err(|_| Error::Parse(format!("bad column in {line:?}")))?;
        if i == 0 || i > nrows || j == 0 || j > ncols {
            return Err(Error::Parse(format!("entry out of range: {line:?}")));
        }
        rows[i - 1].push((j - 1, parse_rational(t[2])?));
        count += 1;
    }
    if count != nnz {
        return Err(Error::Parse(format!("expected {nnz} entries, found {count}")));
    }
    let mut m = RelationMatrix::new(ncols);
    for (i, row) in rows.into_iter().enumerate() {
        m.push(row, format!("row {}", i + 1))?;
    }
    Ok(m)
}

#[derive(Serialize)]
struct JobJson<'a> {
    host: MonomialJson,
    vertex: usize,
    vertex_type: [u32; 2],
    degree: u32,
    sigma: &'a [u32],
    a: &'a [u32],
}

pub fn job_to_json(job: &SpanJob) -> String {
    let p: &RelationParams = &job.params;
    serde_json::to_string(&JobJson {
        host: MonomialJson::from(&job.host()),
        vertex: job.vertex,
        vertex_type: [p.g, p.n],
        degree: p.r,
        sigma: &p.sigma,
        a: &p.a,
    })
    .expect("job serialises")
}

/// `{"basis","rank","quotient","primes"}`, primes as `[prime, rank]`.
pub fn rank_report_json(r: &RankReport) -> String {
    serde_json::json!({
        "basis": r.basis,
        "rank": r.rank,
        "quotient": r.quotient,
        "primes": r.primes.iter().map(|(p, k)| serde_json::json!([p, k])).collect::<Vec<_>>(),
        "escalated": r.escalated,
    })
    .to_string()
}
