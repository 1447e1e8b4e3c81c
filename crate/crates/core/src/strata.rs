//! The strata algebra `S_{g,n}`.
//!
//! A basis element is a canonical dual graph `Γ` with a κψ-monomial `θ`,
//! standing for the pushforward `ξ_Γ*(θ)` (no automorphism factor). Two
//! decorations related by `Aut(Γ)` push forward to the same class, so one
//! representative per orbit is kept: the lexicographically smallest.
//!
//! Products and pushforwards are computed on fully labelled graphs and only
//! then reduced to orbit representatives.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, OnceLock, RwLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::dualgraph::{
    automorphisms, canonical_form_cached, enumerate_graphs, AutGroup, Automorphism, DualGraph, HalfEdge,
};
use crate::error::{Error, Result};
use crate::field;

/// κ and ψ exponents on a graph. `kappa[v]` is the sorted multiset of κ
/// indices (all ≥ 1) at vertex `v`; `psi[s]` is the ψ exponent at slot `s`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Decoration {
    pub kappa: Vec<Vec<u32>>,
    pub psi: Vec<u32>,
}

impl Decoration {
    pub fn trivial(graph: &DualGraph) -> Self {
        Decoration { kappa: vec![Vec::new(); graph.num_vertices()], psi: vec![0; graph.num_slots()] }
    }

    pub fn degree(&self) -> u32 {
        self.kappa.iter().flatten().sum::<u32>() + self.psi.iter().sum::<u32>()
    }

    /// κ degree at `v` plus ψ exponents on the half-edges at `v`.
    pub fn vertex_degree(&self, graph: &DualGraph, v: usize) -> u32 {
        self.kappa[v].iter().sum::<u32>()
            + graph.half_edges_at(v).iter().map(|&h| self.psi[graph.slot(h)]).sum::<u32>()
    }

    pub fn is_bare_at(&self, graph: &DualGraph, v: usize) -> bool {
        self.vertex_degree(graph, v) == 0
    }

    /// Transport along an automorphism (or any vertex/slot relabelling).
    pub fn apply(&self, vertex: &[usize], slot: &[usize]) -> Decoration {
        let mut kappa = vec![Vec::new(); self.kappa.len()];
        for (v, k) in self.kappa.iter().enumerate() {
            kappa[vertex[v]] = k.clone();
        }
        let mut psi = vec![0; self.psi.len()];
        for (s, &p) in self.psi.iter().enumerate() {
            psi[slot[s]] = p;
        }
        Decoration { kappa, psi }
    }

    pub fn times(&self, o: &Decoration) -> Decoration {
        let kappa = self
            .kappa
            .iter()
            .zip(&o.kappa)
            .map(|(a, b)| {
                let mut k: Vec<u32> = a.iter().chain(b).copied().collect();
                k.sort_unstable();
                k
            })
            .collect();
        let psi = self.psi.iter().zip(&o.psi).map(|(a, b)| a + b).collect();
        Decoration { kappa, psi }
    }
}

fn orbit_rep(deco: &Decoration, aut: &AutGroup) -> Decoration {
    let mut best = deco.clone();
    for a in aut.elements() {
        if a.is_identity() {
            continue;
        }
        let d = deco.apply(&a.vertex, &a.slot);
        if d < best {
            best = d;
        }
    }
    best
}

/// Size of the `Aut(Γ)`-orbit of a decoration.
pub fn orbit_size(deco: &Decoration, aut: &AutGroup) -> usize {
    let stab = aut.elements().iter().filter(|a: &&Automorphism| deco.apply(&a.vertex, &a.slot) == *deco).count();
    aut.order() / stab
}

/// A decorated graph. Canonical when the graph is canonical and the
/// decoration is its orbit representative; labelled otherwise.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct StrataMonomial {
    pub graph: DualGraph,
    pub deco: Decoration,
}

impl StrataMonomial {
    pub fn new(graph: DualGraph, deco: Decoration) -> Self {
        StrataMonomial { graph, deco }
    }

    pub fn undecorated(graph: DualGraph) -> Self {
        let deco = Decoration::trivial(&graph);
        StrataMonomial { graph, deco }
    }

    /// The smooth graph of type `(g, n)` with the given κ indices and
    /// per-marking ψ exponents.
    pub fn smooth(g: u32, n: u32, kappa: &[u32], psi: &[u32]) -> Self {
        let graph = DualGraph::smooth(g, n);
        let mut k = kappa.to_vec();
        k.sort_unstable();
        let mut p = psi.to_vec();
        p.resize(n as usize, 0);
        StrataMonomial { graph, deco: Decoration { kappa: vec![k], psi: p } }
    }

    pub fn degree(&self) -> u32 {
        self.graph.num_edges() as u32 + self.deco.degree()
    }

    pub fn genus(&self) -> u32 {
        self.graph.genus()
    }

    pub fn num_markings(&self) -> u32 {
        self.graph.num_markings() as u32
    }

    /// Canonical graph plus orbit-minimal decoration.
    pub fn canonicalize(&self) -> StrataMonomial {
        let cf = canonical_form_cached(&self.graph);
        let deco = self.deco.apply(&cf.relabel.vertex, &cf.relabel.slot);
        let aut = automorphisms(&cf.graph);
        StrataMonomial { graph: cf.graph.clone(), deco: orbit_rep(&deco, &aut) }
    }

    /// Relabel markings: marking `i + 1` becomes `perm[i] + 1`. The result
    /// is labelled; canonicalize it before comparing.
    pub fn permute_markings(&self, perm: &[usize]) -> StrataMonomial {
        let n = self.graph.num_markings();
        assert_eq!(perm.len(), n, "permutation size");
        let legs: Vec<Vec<u32>> = self
            .graph
            .legs()
            .iter()
            .map(|l| {
                let mut l: Vec<u32> = l.iter().map(|&x| perm[x as usize - 1] as u32 + 1).collect();
                l.sort_unstable();
                l
            })
            .collect();
        let graph = DualGraph::new_unchecked(self.graph.genera().to_vec(), legs, self.graph.edges().to_vec());
        let mut psi = self.deco.psi.clone();
        for i in 0..n {
            psi[perm[i]] = self.deco.psi[i];
        }
        StrataMonomial { graph, deco: Decoration { kappa: self.deco.kappa.clone(), psi } }
    }

    pub fn is_canonical(&self) -> bool {
        self.canonicalize() == *self
    }

    /// Largest `deg_v(θ) − (3g_v − 3 + n_v)` over vertices (≤ 0 when every
    /// vertex decoration fits its moduli dimension).
    pub fn vertex_excess(&self) -> i64 {
        (0..self.graph.num_vertices())
            .map(|v| self.deco.vertex_degree(&self.graph, v) as i64 - self.graph.vertex_dim(v))
            .max()
            .unwrap_or(0)
    }
}

/// Sparse homogeneous element of `S_{g,n}`.
#[derive(Clone, PartialEq, Debug)]
pub struct TautVector<F: field::Field = BigRational> {
    pub g: u32,
    pub n: u32,
    pub degree: u32,
    terms: BTreeMap<StrataMonomial, F>,
}

impl<F: field::Field> TautVector<F> {
    pub fn zero(g: u32, n: u32, degree: u32) -> Self {
        TautVector { g, n, degree, terms: BTreeMap::new() }
    }

    /// Add `c · m`; `m` must already be canonical.
    pub fn add_term(&mut self, m: StrataMonomial, c: F) {
        debug_assert_eq!(m.degree(), self.degree);
        debug_assert_eq!((m.genus(), m.num_markings()), (self.g, self.n));
        if field::Field::is_zero(&c) {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if field::Field::is_zero(e.get()) {
                    e.remove();
                }
            }
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
        }
    }

    pub fn terms(&self) -> &BTreeMap<StrataMonomial, F> {
        &self.terms
    }

    pub fn coeff(&self, m: &StrataMonomial) -> Option<&F> {
        self.terms.get(m)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&mut self, o: &TautVector<F>) {
        debug_assert_eq!((self.g, self.n, self.degree), (o.g, o.n, o.degree));
        for (m, c) in &o.terms {
            self.add_term(m.clone(), c.clone());
        }
    }

    pub fn scale(&self, c: &F) -> TautVector<F> {
        let mut out = TautVector::zero(self.g, self.n, self.degree);
        for (m, x) in &self.terms {
            out.add_term(m.clone(), x.clone() * c.clone());
        }
        out
    }

    pub fn into_terms(self) -> BTreeMap<StrataMonomial, F> {
        self.terms
    }
}

impl TautVector<BigRational> {
    pub fn unit(g: u32, n: u32) -> Self {
        Self::monomial(StrataMonomial::undecorated(DualGraph::smooth(g, n)))
    }

    /// A single basis element with coefficient 1 (canonicalised first).
    pub fn monomial(m: StrataMonomial) -> Self {
        let m = m.canonicalize();
        let mut v = TautVector::zero(m.genus(), m.num_markings(), m.degree());
        v.add_term(m, BigRational::one());
        v
    }

    /// Drop monomials whose decoration exceeds some vertex's dimension;
    /// those classes vanish on the vertex moduli space.
    pub fn truncated(mut self) -> TautVector {
        self.terms.retain(|m, _| m.vertex_excess() <= 0);
        self
    }

    pub fn sub(&self, o: &TautVector) -> TautVector {
        let mut out = self.clone();
        out.add(&o.scale(&-BigRational::one()));
        out
    }
}

fn q(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Partitions of `k` into positive parts, each sorted ascending.
pub fn partitions(k: u32) -> Vec<Vec<u32>> {
    fn rec(k: u32, min: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if k == 0 {
            out.push(cur.clone());
            return;
        }
        for p in min..=k {
            cur.push(p);
            rec(k - p, p, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, 1, &mut Vec::new(), &mut out);
    out
}

/// Weak compositions of `total` into `parts` pieces.
pub fn compositions(total: u32, parts: usize) -> Vec<Vec<u32>> {
    if parts == 0 {
        return if total == 0 { vec![vec![]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// κ multiset and `(slot, ψ exponent)` pairs at one vertex.
type LocalDecoration = (Vec<u32>, Vec<(usize, u32)>);

/// All labelled decorations of total degree `degree` on `graph`. With
/// `bounded`, vertices whose decoration degree exceeds `3g_v − 3 + n_v` are
/// skipped.
pub fn labelled_decorations(graph: &DualGraph, degree: u32, bounded: bool) -> Vec<Decoration> {
    let nv = graph.num_vertices();
    // per vertex and per local degree: (κ multiset, ψ on its slots)
    let local = |v: usize, b: u32| -> Vec<LocalDecoration> {
        let slots: Vec<usize> = graph.half_edges_at(v).iter().map(|&h| graph.slot(h)).collect();
        let mut out = Vec::new();
        for k in 0..=b {
            for part in partitions(k) {
                for comp in compositions(b - k, slots.len()) {
                    out.push((part.clone(), slots.iter().copied().zip(comp).collect()));
                }
            }
        }
        out
    };
    let mut result = Vec::new();
    for budget in compositions(degree, nv) {
        if bounded && (0..nv).any(|v| budget[v] as i64 > graph.vertex_dim(v)) {
            continue;
        }
        let options: Vec<_> = (0..nv).map(|v| local(v, budget[v])).collect();
        let mut idx = vec![0usize; nv];
        if options.iter().any(Vec::is_empty) {
            continue;
        }
        loop {
            let mut d = Decoration::trivial(graph);
            for v in 0..nv {
                let (k, ps) = &options[v][idx[v]];
                d.kappa[v] = k.clone();
                for &(s, e) in ps {
                    d.psi[s] = e;
                }
            }
            result.push(d);
            let mut j = 0;
            while j < nv {
                idx[j] += 1;
                if idx[j] < options[j].len() {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
            if j == nv {
                break;
            }
        }
    }
    result
}

/// Ordered basis of the degree-`r` part of `S_{g,n}`.
#[derive(Debug)]
pub struct Basis {
    pub g: u32,
    pub n: u32,
    pub degree: u32,
    pub bounded: bool,
    monomials: Vec<StrataMonomial>,
    orbit_sizes: Vec<usize>,
    index: HashMap<StrataMonomial, usize>,
}

impl Basis {
    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn monomials(&self) -> &[StrataMonomial] {
        &self.monomials
    }

    pub fn orbit_sizes(&self) -> &[usize] {
        &self.orbit_sizes
    }

    pub fn index_of(&self, m: &StrataMonomial) -> Option<usize> {
        self.index.get(m).copied()
    }
}

/// Whether basis enumeration and relation spans drop decorations exceeding
/// a vertex's moduli dimension. Such classes vanish in the tautological
/// ring. Both choices give the same quotient dimensions on every case we
/// have computed; the bounded basis is smaller and faster.
pub const DEFAULT_VERTEX_BOUND: bool = true;

type BasisCache = RwLock<HashMap<(u32, u32, u32, bool), Arc<Basis>>>;

fn basis_cache() -> &'static BasisCache {
    static CACHE: OnceLock<BasisCache> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

pub fn enumerate_basis(g: u32, n: u32, r: u32) -> Result<Arc<Basis>> {
    enumerate_basis_with(g, n, r, DEFAULT_VERTEX_BOUND)
}

/// One monomial per orbit, ordered by (graph encoding, decoration).
pub fn enumerate_basis_with(g: u32, n: u32, r: u32, bounded: bool) -> Result<Arc<Basis>> {
    let key = (g, n, r, bounded);
    if let Some(b) = basis_cache().read().expect("basis cache").get(&key) {
        return Ok(b.clone());
    }
    let graphs = enumerate_graphs(g, n, Some(r as usize))?;
    let mut keyed: Vec<(Vec<u32>, Decoration, DualGraph, usize)> = Vec::new();
    for gr in graphs.iter() {
        let e = gr.num_edges() as u32;
        if e > r {
            continue;
        }
        let aut = automorphisms(gr);
        let enc = canonical_form_cached(gr).encoding.clone();
        for d in labelled_decorations(gr, r - e, bounded) {
            if orbit_rep(&d, &aut) == d {
                let size = orbit_size(&d, &aut);
                keyed.push((enc.clone(), d, gr.clone(), size));
            }
        }
    }
    keyed.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
    let monomials: Vec<StrataMonomial> =
        keyed.iter().map(|(_, d, gr, _)| StrataMonomial::new(gr.clone(), d.clone())).collect();
    let orbit_sizes = keyed.iter().map(|k| k.3).collect();
    let index = monomials.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
    let b = Arc::new(Basis { g, n, degree: r, bounded, monomials, orbit_sizes, index });
    basis_cache().write().expect("basis cache").insert(key, b.clone());
    Ok(b)
}

/// A way of viewing `Γ` as a degeneration of a target graph: the kept edge
/// set and the induced vertex and half-edge maps.
#[derive(Clone, Debug)]
struct Structure {
    mask: u64,
    vertex: Vec<usize>,
    /// Γ slot → target slot (None on contracted edges)
    slot: Vec<Option<usize>>,
}

type StructureCache = RwLock<HashMap<(DualGraph, DualGraph), Arc<Vec<Structure>>>>;

fn structure_cache() -> &'static StructureCache {
    static CACHE: OnceLock<StructureCache> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Every edge-contraction map from `gamma` onto the canonical graph `target`.
fn structures(gamma: &DualGraph, target: &DualGraph) -> Arc<Vec<Structure>> {
    let key = (gamma.clone(), target.clone());
    if let Some(s) = structure_cache().read().expect("structure cache").get(&key) {
        return s.clone();
    }
    let ne = gamma.num_edges();
    let full: u64 = (1u64 << ne) - 1;
    let n = gamma.num_markings();
    let aut = automorphisms(target);
    let mut out = Vec::new();
    for mask in 0..=full {
        if mask.count_ones() as usize != target.num_edges() {
            continue;
        }
        let c = gamma.contract(full & !mask);
        let cf = canonical_form_cached(&c.graph);
        if cf.graph != *target {
            continue;
        }
        for a in aut.elements() {
            let vertex: Vec<usize> =
                (0..gamma.num_vertices()).map(|v| a.vertex[cf.relabel.vertex[c.vertex_map[v]]]).collect();
            let mut slot = vec![None; gamma.num_slots()];
            for (m, s) in slot.iter_mut().enumerate().take(n) {
                *s = Some(a.slot[cf.relabel.slot[m]]);
            }
            for e in 0..ne {
                if let Some(ce) = c.edge_map[e] {
                    for side in 0..2 {
                        slot[n + 2 * e + side] = Some(a.slot[cf.relabel.slot[n + 2 * ce + side]]);
                    }
                }
            }
            out.push(Structure { mask, vertex, slot });
        }
    }
    let out = Arc::new(out);
    structure_cache().write().expect("structure cache").insert(key, out.clone());
    out
}

type DecoPoly = BTreeMap<Decoration, BigRational>;

fn poly_add(p: &mut DecoPoly, d: Decoration, c: BigRational) {
    if c.is_zero() {
        return;
    }
    let e = p.entry(d.clone()).or_insert_with(BigRational::zero);
    *e += c;
    if e.is_zero() {
        p.remove(&d);
    }
}

fn poly_mul(a: &DecoPoly, b: &DecoPoly) -> DecoPoly {
    let mut out = DecoPoly::new();
    for (da, ca) in a {
        for (db, cb) in b {
            poly_add(&mut out, da.times(db), ca * cb);
        }
    }
    out
}

/// Pull a target decoration back along a structure: κ at a target vertex
/// becomes the sum over its preimages, ψ moves to the matching half-edge.
fn pull_back(gamma: &DualGraph, target_deco: &Decoration, st: &Structure) -> DecoPoly {
    let mut base = Decoration::trivial(gamma);
    for (s, t) in st.slot.iter().enumerate() {
        if let Some(t) = t {
            base.psi[s] = target_deco.psi[*t];
        }
    }
    let mut poly = DecoPoly::new();
    poly.insert(base, BigRational::one());
    for (w, ks) in target_deco.kappa.iter().enumerate() {
        let pre: Vec<usize> = (0..gamma.num_vertices()).filter(|&v| st.vertex[v] == w).collect();
        for &k in ks {
            let mut factor = DecoPoly::new();
            for &v in &pre {
                let mut d = Decoration::trivial(gamma);
                d.kappa[v].push(k);
                poly_add(&mut factor, d, BigRational::one());
            }
            poly = poly_mul(&poly, &factor);
        }
    }
    poly
}

fn check_ambient<F: field::Field>(u: &TautVector<F>, v: &TautVector<F>) -> Result<()> {
    if (u.g, u.n) != (v.g, v.n) {
        return Err(Error::Mismatch(format!("S_({},{}) vs S_({},{})", u.g, u.n, v.g, v.n)));
    }
    Ok(())
}

type ProductCache = RwLock<HashMap<(StrataMonomial, StrataMonomial), Arc<TautVector>>>;

fn product_cache() -> &'static ProductCache {
    static CACHE: OnceLock<ProductCache> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Product of two canonical basis elements in the formal algebra (no
/// dimension truncation).
pub fn multiply_monomials(a: &StrataMonomial, b: &StrataMonomial) -> Arc<TautVector> {
    let key = if a <= b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) };
    if let Some(p) = product_cache().read().expect("product cache").get(&key) {
        return p.clone();
    }
    let (a, b) = (&key.0, &key.1);
    let (g, n) = (a.genus(), a.num_markings());
    let mut out = TautVector::zero(g, n, a.degree() + b.degree());
    let (ea, eb) = (a.graph.num_edges(), b.graph.num_edges());
    let graphs = enumerate_graphs(g, n, None).expect("stable ambient");
    for gamma in graphs.iter() {
        let ne = gamma.num_edges();
        if ne < ea.max(eb) || ne > ea + eb {
            continue;
        }
        let full: u64 = (1u64 << ne) - 1;
        let sa = structures(gamma, &a.graph);
        if sa.is_empty() {
            continue;
        }
        let sb = structures(gamma, &b.graph);
        let aut_order = automorphisms(gamma).order() as i64;
        let mut labelled = DecoPoly::new();
        for x in sa.iter() {
            let pa = pull_back(gamma, &a.deco, x);
            for y in sb.iter() {
                if x.mask | y.mask != full {
                    continue;
                }
                let mut p = poly_mul(&pa, &pull_back(gamma, &b.deco, y));
                let nm = gamma.num_markings();
                for e in 0..ne {
                    if (x.mask & y.mask) >> e & 1 == 1 {
                        let mut excess = DecoPoly::new();
                        for side in 0..2 {
                            let mut d = Decoration::trivial(gamma);
                            d.psi[nm + 2 * e + side] = 1;
                            poly_add(&mut excess, d, -BigRational::one());
                        }
                        p = poly_mul(&p, &excess);
                    }
                }
                for (d, c) in p {
                    poly_add(&mut labelled, d, c);
                }
            }
        }
        let aut = automorphisms(gamma);
        for (d, c) in labelled {
            out.add_term(StrataMonomial::new(gamma.clone(), orbit_rep(&d, &aut)), c / q(aut_order));
        }
    }
    let out = Arc::new(out);
    product_cache().write().expect("product cache").insert(key, out.clone());
    out
}

/// Product in the formal algebra: every decorated graph is kept, whatever
/// its vertex degrees. Apply [`TautVector::truncated`] to pass to the
/// quotient where over-dimensional vertex decorations vanish.
pub fn multiply(u: &TautVector, v: &TautVector) -> Result<TautVector> {
    check_ambient(u, v)?;
    let mut out = TautVector::zero(u.g, u.n, u.degree + v.degree);
    for (ma, ca) in u.terms() {
        for (mb, cb) in v.terms() {
            let p = multiply_monomials(ma, mb);
            let c = ca * cb;
            for (m, x) in p.terms() {
                out.add_term(m.clone(), x * &c);
            }
        }
    }
    Ok(out)
}

/// Substitute a decorated graph for each vertex of `gamma`. The markings
/// `1..=n_v` of `parts[v]` are matched with `gamma.half_edges_at(v)`. The
/// result is labelled (not canonicalised). Edges of `gamma` keep their
/// indices; internal edges of the parts follow in vertex order.
pub fn compose(gamma: &DualGraph, parts: &[&StrataMonomial]) -> StrataMonomial {
    let n = gamma.num_markings();
    let ge = gamma.num_edges();
    let mut genera = Vec::new();
    let mut legs: Vec<Vec<u32>> = Vec::new();
    let mut edges: Vec<(usize, usize)> = gamma.edges().to_vec();
    let mut kappa = Vec::new();
    let total_internal: usize = parts.iter().map(|p| p.graph.num_edges()).sum();
    let mut psi = vec![0u32; n + 2 * (ge + total_internal)];
    let mut offset = 0;
    let mut edge_offset = ge;
    for (v, part) in parts.iter().enumerate() {
        let hs = gamma.half_edges_at(v);
        let h = &part.graph;
        let hn = h.num_markings();
        genera.extend_from_slice(h.genera());
        kappa.extend(part.deco.kappa.iter().cloned());
        for _ in 0..h.num_vertices() {
            legs.push(Vec::new());
        }
        for (u, hl) in h.legs().iter().enumerate() {
            for &j in hl {
                let he = hs[j as usize - 1];
                match he {
                    HalfEdge::Leg(m) => legs[offset + u].push(m),
                    HalfEdge::Edge { edge, side } => {
                        if side == 0 {
                            edges[edge].0 = offset + u;
                        } else {
                            edges[edge].1 = offset + u;
                        }
                    }
                }
                psi[gamma.slot(he)] = part.deco.psi[j as usize - 1];
            }
        }
        for (f, &(x, y)) in h.edges().iter().enumerate() {
            edges.push((offset + x, offset + y));
            for side in 0..2 {
                psi[n + 2 * (edge_offset + f) + side] = part.deco.psi[hn + 2 * f + side];
            }
        }
        offset += h.num_vertices();
        edge_offset += h.num_edges();
    }
    StrataMonomial::new(DualGraph::new_unchecked(genera, legs, edges), Decoration { kappa, psi })
}

/// `ξ_Γ*` of a pure tensor of classes on the vertex moduli spaces.
pub fn glue_pushforward(gamma: &DualGraph, factors: &[TautVector]) -> Result<TautVector> {
    if factors.len() != gamma.num_vertices() {
        return Err(Error::Mismatch(format!(
            "{} factors for {} vertices",
            factors.len(),
            gamma.num_vertices()
        )));
    }
    for (v, f) in factors.iter().enumerate() {
        if (f.g, f.n as usize) != (gamma.genera()[v], gamma.valence(v)) {
            return Err(Error::Mismatch(format!(
                "factor {v} lives on S_({},{}), vertex has (g, n) = ({}, {})",
                f.g,
                f.n,
                gamma.genera()[v],
                gamma.valence(v)
            )));
        }
    }
    let degree = gamma.num_edges() as u32 + factors.iter().map(|f| f.degree).sum::<u32>();
    let mut out = TautVector::zero(gamma.genus(), gamma.num_markings() as u32, degree);
    let lists: Vec<Vec<(&StrataMonomial, &BigRational)>> = factors.iter().map(|f| f.terms().iter().collect()).collect();
    if lists.iter().any(Vec::is_empty) {
        return Ok(out);
    }
    let mut idx = vec![0usize; lists.len()];
    loop {
        let parts: Vec<&StrataMonomial> = (0..lists.len()).map(|v| lists[v][idx[v]].0).collect();
        let c = (0..lists.len()).fold(BigRational::one(), |acc, v| acc * lists[v][idx[v]].1);
        out.add_term(compose(gamma, &parts).canonicalize(), c);
        let mut j = 0;
        while j < idx.len() {
            idx[j] += 1;
            if idx[j] < lists[j].len() {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
        if j == idx.len() {
            break;
        }
    }
    Ok(out)
}

/// Relabel slots after inserting a new leg `n + 1`: edge slots move up by one.
fn shift_slots_for_new_leg(psi: &[u32], n: usize) -> Vec<u32> {
    let mut out = psi[..n].to_vec();
    out.push(0);
    out.extend_from_slice(&psi[n..]);
    out
}

/// Pullback along the map forgetting marking `n + 1`.
pub fn forgetful_pullback(v: &TautVector) -> Result<TautVector> {
    let (g, n) = (v.g, v.n);
    if (2 * g as i64 - 2 + n as i64) < 0 {
        return Err(Error::invalid("target space unstable"));
    }
    let mut out = TautVector::zero(g, n + 1, v.degree);
    let nu = n as usize;
    for (m, c) in v.terms() {
        for (t, x) in pullback_monomial(m) {
            out.add_term(t.canonicalize(), x * c);
        }
    }
    let _ = nu;
    Ok(out)
}

fn pullback_monomial(m: &StrataMonomial) -> Vec<(StrataMonomial, BigRational)> {
    let gr = &m.graph;
    let n = gr.num_markings();
    let new_leg = n as u32 + 1;
    let mut out = Vec::new();
    for v in 0..gr.num_vertices() {
        let mut legs = gr.legs().to_vec();
        legs[v].push(new_leg);
        let placed = DualGraph::new_unchecked(gr.genera().to_vec(), legs, gr.edges().to_vec());
        let psi = shift_slots_for_new_leg(&m.deco.psi, n);
        // Π (κ_a − ψ_{n+1}^a) at v
        let ks = &m.deco.kappa[v];
        for mask in 0u32..(1 << ks.len()) {
            let mut kappa = m.deco.kappa.clone();
            kappa[v] = ks.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 0).map(|(_, &k)| k).collect();
            let moved: u32 = ks.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &k)| k).sum();
            let mut p = psi.clone();
            p[n] = moved;
            let sign = if mask.count_ones() % 2 == 0 { 1 } else { -1 };
            out.push((StrataMonomial::new(placed.clone(), Decoration { kappa, psi: p }), q(sign)));
        }
        // − ξ_{D_h}*(ψ_•^{p_h − 1}) for each decorated half-edge h at v
        for h in gr.half_edges_at(v) {
            let ph = m.deco.psi[gr.slot(h)];
            if ph == 0 {
                continue;
            }
            let mut genera = gr.genera().to_vec();
            genera.push(0);
            let b = genera.len() - 1;
            let mut legs = gr.legs().to_vec();
            legs.push(vec![new_leg]);
            let mut edges = gr.edges().to_vec();
            let mut psi = shift_slots_for_new_leg(&m.deco.psi, n);
            match h {
                HalfEdge::Leg(mk) => {
                    legs[v].retain(|&x| x != mk);
                    legs[b].push(mk);
                    psi[mk as usize - 1] = 0;
                }
                HalfEdge::Edge { edge, side } => {
                    if side == 0 {
                        edges[edge].0 = b;
                    } else {
                        edges[edge].1 = b;
                    }
                    psi[n + 1 + 2 * edge + side as usize] = 0;
                }
            }
            legs[b].sort_unstable();
            edges.push((v, b));
            psi.push(ph - 1);
            psi.push(0);
            let mut kappa = m.deco.kappa.clone();
            kappa.push(Vec::new());
            let bubbled = DualGraph::new_unchecked(genera, legs, edges);
            out.push((StrataMonomial::new(bubbled, Decoration { kappa, psi }), q(-1)));
        }
    }
    out
}

/// Pushforward along the map forgetting the last marking.
pub fn forgetful_pushforward(v: &TautVector) -> Result<TautVector> {
    let (g, n1) = (v.g, v.n);
    if n1 == 0 {
        return Err(Error::invalid("no marking to forget"));
    }
    let n = n1 - 1;
    if 2 * g as i64 - 2 + n as i64 <= 0 {
        return Err(Error::invalid("target space unstable"));
    }
    if v.degree == 0 {
        return Ok(TautVector::zero(g, n, 0));
    }
    let mut out = TautVector::zero(g, n, v.degree - 1);
    for (m, c) in v.terms() {
        for (t, x) in pushforward_monomial(m) {
            out.add_term(t.canonicalize(), x * c);
        }
    }
    Ok(out)
}

fn pushforward_monomial(m: &StrataMonomial) -> Vec<(StrataMonomial, BigRational)> {
    let gr = &m.graph;
    let n1 = gr.num_markings();
    let n = n1 - 1;
    let last = n1 as u32;
    let v = gr.leg_vertex(last);
    let mut out = Vec::new();
    // slots of the forgetful target: drop slot n (the last leg)
    let drop_last = |psi: &[u32]| -> Vec<u32> {
        let mut p = psi[..n].to_vec();
        p.extend_from_slice(&psi[n1..]);
        p
    };
    let stays_stable = 2 * gr.genera()[v] as i64 - 2 + gr.valence(v) as i64 - 1 > 0;
    if stays_stable {
        let mut legs = gr.legs().to_vec();
        legs[v].retain(|&x| x != last);
        let target = DualGraph::new_unchecked(gr.genera().to_vec(), legs, gr.edges().to_vec());
        let kappa0 = target.kappa0(v);
        let c = m.deco.psi[n];
        let ks = &m.deco.kappa[v];
        for mask in 0u32..(1 << ks.len()) {
            let moved: u32 = ks.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &k)| k).sum();
            let total = c + moved;
            if total == 0 {
                continue;
            }
            let mut kappa = m.deco.kappa.clone();
            kappa[v] = ks.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 0).map(|(_, &k)| k).collect();
            let mut coeff = q(1);
            if total == 1 {
                coeff = q(kappa0);
            } else {
                kappa[v].push(total - 1);
                kappa[v].sort_unstable();
            }
            out.push((StrataMonomial::new(target.clone(), Decoration { kappa, psi: drop_last(&m.deco.psi) }), coeff));
        }
        if c == 0 {
            for h in target.half_edges_at(v) {
                let s = gr.slot(match h {
                    HalfEdge::Leg(x) => HalfEdge::Leg(x),
                    e => e,
                });
                if m.deco.psi[s] == 0 {
                    continue;
                }
                let mut psi = m.deco.psi.clone();
                psi[s] -= 1;
                out.push((
                    StrataMonomial::new(target.clone(), Decoration { kappa: m.deco.kappa.clone(), psi: drop_last(&psi) }),
                    q(1),
                ));
            }
        }
        return out;
    }
    // genus-0 vertex of valence 3 disappears; only the bare stratum survives
    if !m.deco.is_bare_at(gr, v) {
        return out;
    }
    let others: Vec<HalfEdge> = gr.half_edges_at(v).into_iter().filter(|&h| h != HalfEdge::Leg(last)).collect();
    debug_assert_eq!(others.len(), 2);
    let nv = gr.num_vertices();
    let vmap: Vec<usize> = (0..nv).map(|u| if u < v { u } else { u.wrapping_sub(1) }).collect();
    let mut genera: Vec<u32> = gr.genera().to_vec();
    genera.remove(v);
    let mut legs: Vec<Vec<u32>> = gr.legs().to_vec();
    legs.remove(v);
    // far ends of the two half-edges
    let far = |h: HalfEdge| -> HalfEdge { gr.partner(h).unwrap_or(h) };
    let (h1, h2) = (others[0], others[1]);
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut psi = m.deco.psi[..n].to_vec();
    let mut edge_psi: Vec<[u32; 2]> = Vec::new();
    for (e, &(a, b)) in gr.edges().iter().enumerate() {
        if a == v || b == v {
            continue;
        }
        edges.push((vmap[a], vmap[b]));
        edge_psi.push([m.deco.psi[n1 + 2 * e], m.deco.psi[n1 + 2 * e + 1]]);
    }
    match (h1, h2) {
        (HalfEdge::Leg(_), HalfEdge::Leg(_)) => return out,
        (HalfEdge::Leg(mk), e @ HalfEdge::Edge { .. }) | (e @ HalfEdge::Edge { .. }, HalfEdge::Leg(mk)) => {
            let f = far(e);
            let u = vmap[gr.vertex_of(f)];
            legs[u].push(mk);
            legs[u].sort_unstable();
            psi[mk as usize - 1] = m.deco.psi[gr.slot(f)];
        }
        (e1, e2) => {
            let (f1, f2) = (far(e1), far(e2));
            edges.push((vmap[gr.vertex_of(f1)], vmap[gr.vertex_of(f2)]));
            edge_psi.push([m.deco.psi[gr.slot(f1)], m.deco.psi[gr.slot(f2)]]);
        }
    }
    let mut kappa = m.deco.kappa.clone();
    kappa.remove(v);
    for ep in edge_psi {
        psi.extend_from_slice(&ep);
    }
    let target = DualGraph::new_unchecked(genera, legs, edges);
    out.push((StrataMonomial::new(target, Decoration { kappa, psi }), q(1)));
    out
}

/// A raw term whose κ lists may contain `κ_0`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct RawTerm {
    pub graph: DualGraph,
    pub kappa: Vec<Vec<u32>>,
    pub psi: Vec<u32>,
}

/// Replace every `κ_0^{(v)}` by `2g_v − 2 + n_v` and collect into the basis.
pub fn kappa0_normalize(g: u32, n: u32, degree: u32, raw: &[(RawTerm, BigRational)]) -> TautVector {
    let mut out = TautVector::zero(g, n, degree);
    for (t, c) in raw {
        let mut coeff = c.clone();
        let mut kappa = Vec::with_capacity(t.kappa.len());
        for (v, ks) in t.kappa.iter().enumerate() {
            let zeros = ks.iter().filter(|&&k| k == 0).count();
            for _ in 0..zeros {
                coeff *= q(t.graph.kappa0(v));
            }
            kappa.push(ks.iter().copied().filter(|&k| k != 0).collect::<Vec<_>>());
        }
        let m = StrataMonomial::new(t.graph.clone(), Decoration { kappa, psi: t.psi.clone() });
        out.add_term(m.canonicalize(), coeff);
    }
    out
}

/// Pull a κψ polynomial `w` on the smooth graph back to the vertex moduli
/// of `gamma`, as a sum of pure tensors (one monomial per vertex).
pub fn gluing_pullback_smooth(gamma: &DualGraph, w: &TautVector) -> Vec<(BigRational, Vec<StrataMonomial>)> {
    let mut acc: BTreeMap<Vec<StrataMonomial>, BigRational> = BTreeMap::new();
    for (m, c) in w.terms() {
        assert!(m.graph.is_smooth(), "gluing pullback only of interior classes");
        let st = Structure {
            mask: 0,
            vertex: vec![0; gamma.num_vertices()],
            slot: (0..gamma.num_slots()).map(|s| if s < gamma.num_markings() { Some(s) } else { None }).collect(),
        };
        for (d, x) in pull_back(gamma, &m.deco, &st) {
            let parts: Vec<StrataMonomial> = (0..gamma.num_vertices())
                .map(|v| {
                    let hs = gamma.half_edges_at(v);
                    let gv = gamma.genera()[v];
                    let psi: Vec<u32> = hs.iter().map(|&h| d.psi[gamma.slot(h)]).collect();
                    StrataMonomial::smooth(gv, hs.len() as u32, &d.kappa[v], &psi)
                })
                .collect();
            let e = acc.entry(parts).or_insert_with(BigRational::zero);
            *e += x * c;
        }
    }
    acc.into_iter().filter(|(_, c)| !c.is_zero()).map(|(p, c)| (c, p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn graph(genera: &[u32], legs: &[&[u32]], edges: &[(usize, usize)]) -> DualGraph {
        DualGraph::new(genera.to_vec(), legs.iter().map(|l| l.to_vec()).collect(), edges.to_vec()).unwrap()
    }

    fn random_vector(g: u32, n: u32, r: u32, rng: &mut ChaCha8Rng) -> TautVector {
        let b = enumerate_basis_with(g, n, r, false).unwrap();
        let mut v = TautVector::zero(g, n, r);
        if b.is_empty() {
            return v;
        }
        for _ in 0..2 {
            let i = rng.gen_range(0..b.len());
            v.add_term(b.monomials()[i].clone(), q(rng.gen_range(-3..=3)));
        }
        v
    }

    fn mono(v: &TautVector) -> (StrataMonomial, BigRational) {
        assert_eq!(v.len(), 1, "{v:?}");
        let (m, c) = v.terms().iter().next().unwrap();
        (m.clone(), c.clone())
    }

    #[test]
    fn basis_examples() {
        assert_eq!(enumerate_basis(1, 1, 0).unwrap().len(), 1);
        assert_eq!(enumerate_basis(1, 1, 1).unwrap().len(), 3);
        assert_eq!(enumerate_basis(0, 4, 1).unwrap().len(), 8);
        assert_eq!(enumerate_basis(0, 4, 0).unwrap().len(), 1);
    }

    #[test]
    fn basis_orbit_counts_are_consistent() {
        // Σ orbit sizes over representatives = number of labelled decorations
        for &(g, n, r) in &[(1u32, 2u32, 2u32), (2, 0, 2), (0, 5, 2), (2, 1, 2)] {
            let b = enumerate_basis_with(g, n, r, false).unwrap();
            let mut expected = 0usize;
            for gr in enumerate_graphs(g, n, Some(r as usize)).unwrap().iter() {
                expected += labelled_decorations(gr, r - gr.num_edges() as u32, false).len();
            }
            assert_eq!(b.orbit_sizes().iter().sum::<usize>(), expected);
            for m in b.monomials() {
                assert!(m.is_canonical());
                assert_eq!(m.degree(), r);
            }
        }
    }

    #[test]
    fn orbit_representative_is_idempotent() {
        let loop_g = canonical_form_cached(&graph(&[1], &[&[]], &[(0, 0)])).graph.clone();
        let mut d = Decoration::trivial(&loop_g);
        d.psi[1] = 1;
        let m = StrataMonomial::new(loop_g.clone(), d).canonicalize();
        assert_eq!(m.deco.psi, vec![0, 1]);
        assert_eq!(m.canonicalize(), m);
    }

    #[test]
    fn unit_is_neutral() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for &(g, n) in &[(0u32, 4u32), (1, 2), (2, 0)] {
            let v = random_vector(g, n, 1, &mut rng);
            assert_eq!(multiply(&TautVector::unit(g, n), &v).unwrap(), v);
        }
    }

    #[test]
    fn transverse_boundary_product_vanishes() {
        let d12 = TautVector::monomial(StrataMonomial::undecorated(graph(&[0, 0], &[&[1, 2], &[3, 4]], &[(0, 1)])));
        let d13 = TautVector::monomial(StrataMonomial::undecorated(graph(&[0, 0], &[&[1, 3], &[2, 4]], &[(0, 1)])));
        assert!(multiply(&d12, &d13).unwrap().is_zero());
        // self-intersection: ξ*1 · ξ*1 = ξ*(−ψ_• − ψ_•′)
        let p = multiply(&d12, &d12).unwrap();
        assert_eq!(p.len(), 2);
    }

    #[test]
    fn irreducible_divisor_square() {
        // ξ: M̄_{0,3} → M̄_{1,1} has two gluing structures on itself, so
        // ξ^*ξ_*1 = 2(−ψ − ψ′) and ξ_*(2(−ψ − ψ′)) = −4 ξ_*(ψ).
        let lp = TautVector::monomial(StrataMonomial::undecorated(graph(&[0], &[&[1]], &[(0, 0)])));
        let (m, c) = mono(&multiply(&lp, &lp).unwrap());
        assert!(multiply(&lp, &lp).unwrap().truncated().is_zero());
        assert_eq!(c, q(-4));
        assert_eq!(m.graph.num_edges(), 1);
        assert_eq!(m.deco.psi.iter().sum::<u32>(), 1);
    }

    #[test]
    fn gluing_examples() {
        let two = graph(&[1, 1], &[&[], &[]], &[(0, 1)]);
        let u = glue_pushforward(&two, &[TautVector::unit(1, 1), TautVector::unit(1, 1)]).unwrap();
        let (m, c) = mono(&u);
        assert_eq!(c, q(1));
        assert_eq!(m.graph, canonical_form_cached(&two).graph);

        let lp = graph(&[1], &[&[]], &[(0, 0)]);
        let f = TautVector::monomial(StrataMonomial::smooth(1, 2, &[], &[1, 0]));
        let f2 = TautVector::monomial(StrataMonomial::smooth(1, 2, &[], &[0, 1]));
        let a = glue_pushforward(&lp, &[f]).unwrap();
        let b = glue_pushforward(&lp, &[f2]).unwrap();
        assert_eq!(a, b);
        assert_eq!(mono(&a).1, q(1));

        let v = TautVector::monomial(StrataMonomial::smooth(2, 1, &[1], &[1]));
        assert_eq!(glue_pushforward(&DualGraph::smooth(2, 1), std::slice::from_ref(&v)).unwrap(), v);
        assert!(glue_pushforward(&two, &[TautVector::unit(1, 2), TautVector::unit(1, 1)]).is_err());
    }

    #[test]
    fn pullback_examples() {
        let psi1 = TautVector::monomial(StrataMonomial::smooth(1, 1, &[], &[1]));
        let d12 = TautVector::monomial(StrataMonomial::undecorated(graph(&[1, 0], &[&[], &[1, 2]], &[(0, 1)])));
        let expected = TautVector::monomial(StrataMonomial::smooth(1, 2, &[], &[1, 0])).sub(&d12);
        assert_eq!(forgetful_pullback(&psi1).unwrap(), expected);

        let k1 = TautVector::monomial(StrataMonomial::smooth(1, 1, &[1], &[]));
        let expected = TautVector::monomial(StrataMonomial::smooth(1, 2, &[1], &[]))
            .sub(&TautVector::monomial(StrataMonomial::smooth(1, 2, &[], &[0, 1])));
        assert_eq!(forgetful_pullback(&k1).unwrap(), expected);

        assert_eq!(forgetful_pullback(&TautVector::unit(1, 1)).unwrap(), TautVector::unit(1, 2));
    }

    #[test]
    fn pushforward_examples() {
        let psi2 = TautVector::monomial(StrataMonomial::smooth(1, 2, &[], &[0, 1]));
        assert_eq!(forgetful_pushforward(&psi2).unwrap(), TautVector::unit(1, 1));
        let psi22 = TautVector::monomial(StrataMonomial::smooth(1, 2, &[], &[0, 2]));
        assert_eq!(
            forgetful_pushforward(&psi22).unwrap(),
            TautVector::monomial(StrataMonomial::smooth(1, 1, &[1], &[]))
        );
        assert!(forgetful_pushforward(&TautVector::unit(0, 4)).unwrap().is_zero());
        // dilaton on a boundary stratum with the forgotten leg on a stable vertex
        let d = TautVector::monomial(StrataMonomial::undecorated(graph(&[0, 0], &[&[1, 2], &[3, 4]], &[(0, 1)])));
        assert_eq!(forgetful_pushforward(&d).unwrap(), TautVector::unit(0, 3).scale(&q(1)));
    }

    #[test]
    fn kappa0_examples() {
        let raw = |g: u32, n: u32, k: Vec<u32>| {
            let gr = DualGraph::smooth(g, n);
            let psi = vec![0; n as usize];
            (RawTerm { graph: gr, kappa: vec![k], psi }, q(1))
        };
        let v = kappa0_normalize(2, 0, 0, &[raw(2, 0, vec![0])]);
        assert_eq!(v, TautVector::unit(2, 0).scale(&q(2)));
        let v = kappa0_normalize(0, 3, 0, &[raw(0, 3, vec![0])]);
        assert_eq!(v, TautVector::unit(0, 3));
        let v = kappa0_normalize(1, 1, 0, &[raw(1, 1, vec![0, 0])]);
        assert_eq!(v, TautVector::unit(1, 1));
    }

    const SPACES: [(u32, u32); 5] = [(0, 4), (0, 5), (1, 1), (1, 2), (2, 0)];

    #[test]
    fn commutative_and_associative() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for &(g, n) in &SPACES {
            for _ in 0..10 {
                let u = random_vector(g, n, 1, &mut rng);
                let v = random_vector(g, n, rng.gen_range(0..=1), &mut rng);
                let w = random_vector(g, n, 1, &mut rng);
                let uv = multiply(&u, &v).unwrap();
                assert_eq!(uv, multiply(&v, &u).unwrap());
                assert_eq!(uv.degree, u.degree + v.degree);
                let left = multiply(&uv, &w).unwrap();
                let right = multiply(&u, &multiply(&v, &w).unwrap()).unwrap();
                assert_eq!(left, right, "({g},{n})");
            }
        }
    }

    #[test]
    fn pullback_is_a_ring_homomorphism() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for &(g, n) in &[(0u32, 4u32), (0, 5), (1, 1), (1, 2), (2, 0)] {
            let dim = 3 * g + n - 3;
            for _ in 0..8 {
                let du = rng.gen_range(0..=dim);
                let dv = rng.gen_range(0..=dim - du);
                let u = random_vector(g, n, du, &mut rng);
                let v = random_vector(g, n, dv, &mut rng);
                let lhs = forgetful_pullback(&multiply(&u, &v).unwrap()).unwrap().truncated();
                let rhs = multiply(&forgetful_pullback(&u).unwrap(), &forgetful_pullback(&v).unwrap()).unwrap();
                assert_eq!(lhs, rhs.truncated(), "({g},{n})");
            }
        }
    }

    #[test]
    fn pullback_is_multiplicative_only_modulo_over_dimension_classes() {
        // π*(ψ_2^2) = ψ_2^2 − ξ_*(ψ_•) on M̄_{1,3}, while (π*ψ_2)^2 also
        // carries ψ classes on the bubble M̄_{0,3}.
        let psi2 = TautVector::monomial(StrataMonomial::smooth(1, 2, &[], &[0, 1]));
        let lhs = forgetful_pullback(&multiply(&psi2, &psi2).unwrap()).unwrap();
        let p = forgetful_pullback(&psi2).unwrap();
        let rhs = multiply(&p, &p).unwrap();
        let diff = rhs.sub(&lhs);
        assert_eq!(diff.len(), 2);
        assert!(diff.terms().keys().all(|m| m.vertex_excess() > 0));
        assert_eq!(lhs.truncated(), rhs.truncated());
    }

    #[test]
    fn forgetful_projection_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for &(g, n) in &[(0u32, 4u32), (1, 1), (1, 2), (2, 0)] {
            for _ in 0..6 {
                let u = random_vector(g, n + 1, rng.gen_range(1..=2), &mut rng);
                let w = random_vector(g, n, 1, &mut rng);
                let lhs = forgetful_pushforward(&multiply(&u, &forgetful_pullback(&w).unwrap()).unwrap()).unwrap();
                let rhs = multiply(&forgetful_pushforward(&u).unwrap(), &w).unwrap();
                assert_eq!(lhs, rhs, "({g},{n})");
            }
        }
    }

    #[test]
    fn gluing_projection_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for &(g, n) in &[(0u32, 5u32), (1, 2), (2, 0), (1, 1)] {
            let graphs = enumerate_graphs(g, n, Some(1)).unwrap();
            for gamma in graphs.iter().filter(|x| x.num_edges() == 1) {
                for _ in 0..3 {
                    let u: Vec<TautVector> = (0..gamma.num_vertices())
                        .map(|v| {
                            let (gv, nv) = (gamma.genera()[v], gamma.valence(v) as u32);
                            if rng.gen_bool(0.5) {
                                TautVector::unit(gv, nv)
                            } else {
                                random_vector(gv, nv, 1, &mut rng)
                            }
                        })
                        .collect();
                    let basis = enumerate_basis_with(g, n, 1, false).unwrap();
                    let smooth: Vec<&StrataMonomial> =
                        basis.monomials().iter().filter(|m| m.graph.is_smooth()).collect();
                    let w = TautVector::monomial(smooth[rng.gen_range(0..smooth.len())].clone());
                    let rhs = multiply(&glue_pushforward(gamma, &u).unwrap(), &w).unwrap();
                    let mut lhs = TautVector::zero(g, n, rhs.degree);
                    for (c, parts) in gluing_pullback_smooth(gamma, &w) {
                        let factors: Vec<TautVector> = u
                            .iter()
                            .zip(&parts)
                            .map(|(x, p)| multiply(x, &TautVector::monomial(p.clone())).unwrap())
                            .collect();
                        lhs.add(&glue_pushforward(gamma, &factors).unwrap().scale(&c));
                    }
                    assert_eq!(lhs, rhs, "{gamma:?}");
                }
            }
        }
    }

    #[test]
    fn push_pull_of_unit_is_euler_characteristic() {
        // π_*(ψ_{n+1} · π^*v) = (2g − 2 + n) v
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for &(g, n) in &[(0u32, 4u32), (1, 1), (1, 2), (2, 0)] {
            let v = random_vector(g, n, 1, &mut rng);
            let psi = TautVector::monomial(StrataMonomial::smooth(g, n + 1, &[], &{
                let mut p = vec![0; n as usize + 1];
                p[n as usize] = 1;
                p
            }));
            let lhs =
                forgetful_pushforward(&multiply(&psi, &forgetful_pullback(&v).unwrap()).unwrap()).unwrap();
            assert_eq!(lhs, v.scale(&q(2 * g as i64 - 2 + n as i64)));
        }
    }
}
