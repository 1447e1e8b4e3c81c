//! Stable dual graphs: validation, canonical labelling, automorphism groups,
//! enumeration up to isomorphism, and edge contraction.
//!
//! Vertices carry a genus and a set of marking labels (legs). Edges are
//! ordered pairs `(u, w)`; side 0 sits at `u`, side 1 at `w`, so both halves
//! of a loop stay distinguishable. Half-edges are addressed by slots: marking
//! `m` is slot `m − 1`, side `s` of edge `e` is slot `n + 2e + s`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};

use crate::error::{Error, Result};

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum HalfEdge {
    Leg(u32),
    Edge { edge: usize, side: u8 },
}

impl fmt::Display for HalfEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HalfEdge::Leg(m) => write!(f, "m{m}"),
            HalfEdge::Edge { edge, side } => write!(f, "e{edge}.{side}"),
        }
    }
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct DualGraph {
    genera: Vec<u32>,
    legs: Vec<Vec<u32>>,
    edges: Vec<(usize, usize)>,
}

impl DualGraph {
    /// Build and validate a stable graph.
    pub fn new(genera: Vec<u32>, legs: Vec<Vec<u32>>, edges: Vec<(usize, usize)>) -> Result<Self> {
        let g = Self::new_unchecked(genera, legs, edges);
        g.validate()?;
        Ok(g)
    }

    pub(crate) fn new_unchecked(genera: Vec<u32>, mut legs: Vec<Vec<u32>>, edges: Vec<(usize, usize)>) -> Self {
        for l in &mut legs {
            l.sort_unstable();
        }
        DualGraph { genera, legs, edges }
    }

    /// The graph with one vertex of genus `g` carrying markings `1..=n`.
    pub fn smooth(g: u32, n: u32) -> Self {
        DualGraph { genera: vec![g], legs: vec![(1..=n).collect()], edges: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        let nv = self.genera.len();
        if nv == 0 {
            return Err(Error::invalid("graph without vertices"));
        }
        if self.legs.len() != nv {
            return Err(Error::invalid("legs list length differs from vertex count"));
        }
        for &(a, b) in &self.edges {
            if a >= nv || b >= nv {
                return Err(Error::invalid(format!("edge ({a},{b}) out of range")));
            }
        }
        let mut marks: Vec<u32> = self.legs.iter().flatten().copied().collect();
        marks.sort_unstable();
        if marks.iter().enumerate().any(|(i, &m)| m != i as u32 + 1) {
            return Err(Error::invalid(format!("markings {marks:?} are not 1..n")));
        }
        if !self.is_connected() {
            return Err(Error::invalid("graph is not connected"));
        }
        for v in 0..nv {
            if 2 * self.genera[v] as i64 - 2 + self.valence(v) as i64 <= 0 {
                return Err(Error::invalid(format!("vertex {v} is unstable")));
            }
        }
        Ok(())
    }

    fn is_connected(&self) -> bool {
        let nv = self.genera.len();
        let mut uf = UnionFind::new(nv);
        for &(a, b) in &self.edges {
            uf.union(a, b);
        }
        (1..nv).all(|v| uf.find(v) == uf.find(0))
    }

    pub fn genera(&self) -> &[u32] {
        &self.genera
    }

    pub fn legs(&self) -> &[Vec<u32>] {
        &self.legs
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn num_vertices(&self) -> usize {
        self.genera.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_markings(&self) -> usize {
        self.legs.iter().map(Vec::len).sum()
    }

    /// Cycle number `|E| − |V| + 1`.
    pub fn h1(&self) -> u32 {
        (self.edges.len() + 1 - self.genera.len()) as u32
    }

    pub fn genus(&self) -> u32 {
        self.genera.iter().sum::<u32>() + self.h1()
    }

    pub fn is_smooth(&self) -> bool {
        self.edges.is_empty()
    }

    /// Legs plus edge ends at `v` (a loop counts twice).
    pub fn valence(&self, v: usize) -> usize {
        self.legs[v].len()
            + self.edges.iter().map(|&(a, b)| (a == v) as usize + (b == v) as usize).sum::<usize>()
    }

    /// `2g_v − 2 + n_v`, the value of `κ_0` at `v`.
    pub fn kappa0(&self, v: usize) -> i64 {
        2 * self.genera[v] as i64 - 2 + self.valence(v) as i64
    }

    /// Dimension `3g_v − 3 + n_v` of the vertex moduli space.
    pub fn vertex_dim(&self, v: usize) -> i64 {
        3 * self.genera[v] as i64 - 3 + self.valence(v) as i64
    }

    pub fn num_slots(&self) -> usize {
        self.num_markings() + 2 * self.edges.len()
    }

    pub fn slot(&self, h: HalfEdge) -> usize {
        match h {
            HalfEdge::Leg(m) => m as usize - 1,
            HalfEdge::Edge { edge, side } => self.num_markings() + 2 * edge + side as usize,
        }
    }

    pub fn half_edge(&self, slot: usize) -> HalfEdge {
        let n = self.num_markings();
        if slot < n {
            HalfEdge::Leg(slot as u32 + 1)
        } else {
            let k = slot - n;
            HalfEdge::Edge { edge: k / 2, side: (k % 2) as u8 }
        }
    }

    pub fn vertex_of(&self, h: HalfEdge) -> usize {
        match h {
            HalfEdge::Leg(m) => self.leg_vertex(m),
            HalfEdge::Edge { edge, side } => {
                let (a, b) = self.edges[edge];
                if side == 0 {
                    a
                } else {
                    b
                }
            }
        }
    }

    pub fn leg_vertex(&self, m: u32) -> usize {
        self.legs.iter().position(|l| l.contains(&m)).expect("marking present")
    }

    /// Slot-indexed vertex table.
    pub fn slot_vertices(&self) -> Vec<usize> {
        (0..self.num_slots()).map(|s| self.vertex_of(self.half_edge(s))).collect()
    }

    /// Half-edges at `v`: legs by marking, then edge sides by `(edge, side)`.
    /// This order identifies them with the markings `1..=n_v` of the vertex
    /// moduli space.
    pub fn half_edges_at(&self, v: usize) -> Vec<HalfEdge> {
        let mut out: Vec<HalfEdge> = self.legs[v].iter().map(|&m| HalfEdge::Leg(m)).collect();
        for (e, &(a, b)) in self.edges.iter().enumerate() {
            if a == v {
                out.push(HalfEdge::Edge { edge: e, side: 0 });
            }
            if b == v {
                out.push(HalfEdge::Edge { edge: e, side: 1 });
            }
        }
        out
    }

    /// The other half of an edge; `None` for legs.
    pub fn partner(&self, h: HalfEdge) -> Option<HalfEdge> {
        match h {
            HalfEdge::Leg(_) => None,
            HalfEdge::Edge { edge, side } => Some(HalfEdge::Edge { edge, side: 1 - side }),
        }
    }

    /// Apply a relabelling: `vperm[old] = new` on vertices, `eperm[old] = new`
    /// on edges, and flip the sides of edges where `flip[e]` holds.
    pub fn relabel(&self, vperm: &[usize], eperm: &[usize], flip: &[bool]) -> DualGraph {
        let nv = self.genera.len();
        let mut genera = vec![0; nv];
        let mut legs = vec![Vec::new(); nv];
        for v in 0..nv {
            genera[vperm[v]] = self.genera[v];
            legs[vperm[v]] = self.legs[v].clone();
        }
        let mut edges = vec![(0, 0); self.edges.len()];
        for (e, &(a, b)) in self.edges.iter().enumerate() {
            let (a, b) = (vperm[a], vperm[b]);
            edges[eperm[e]] = if flip[e] { (b, a) } else { (a, b) };
        }
        DualGraph::new_unchecked(genera, legs, edges)
    }

    /// Contract the edges in `subset` (a bitmask over edge indices).
    pub fn contract(&self, subset: u64) -> Contraction {
        let nv = self.genera.len();
        let mut uf = UnionFind::new(nv);
        for (e, &(a, b)) in self.edges.iter().enumerate() {
            if subset >> e & 1 == 1 {
                uf.union(a, b);
            }
        }
        let mut vertex_map = vec![usize::MAX; nv];
        let mut roots: Vec<usize> = Vec::new();
        for v in 0..nv {
            let r = uf.find(v);
            let idx = match roots.iter().position(|&x| x == r) {
                Some(i) => i,
                None => {
                    roots.push(r);
                    roots.len() - 1
                }
            };
            vertex_map[v] = idx;
        }
        let nnew = roots.len();
        let mut genera = vec![0u32; nnew];
        let mut counts = vec![0i64; nnew];
        let mut legs = vec![Vec::new(); nnew];
        for v in 0..nv {
            genera[vertex_map[v]] += self.genera[v];
            counts[vertex_map[v]] += 1;
            legs[vertex_map[v]].extend_from_slice(&self.legs[v]);
        }
        let mut edges = Vec::new();
        let mut edge_map = vec![None; self.edges.len()];
        for (e, &(a, b)) in self.edges.iter().enumerate() {
            if subset >> e & 1 == 1 {
                counts[vertex_map[a]] -= 1;
            } else {
                edge_map[e] = Some(edges.len());
                edges.push((vertex_map[a], vertex_map[b]));
            }
        }
        // genus of a merged vertex: Σ g_v + |E_c| − |V_c| + 1
        for (i, c) in counts.iter().enumerate() {
            genera[i] = (genera[i] as i64 - c + 1) as u32;
        }
        Contraction {
            graph: DualGraph::new_unchecked(genera, legs, edges),
            vertex_map,
            edge_map,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Contraction {
    pub graph: DualGraph,
    /// old vertex → vertex of the contracted graph
    pub vertex_map: Vec<usize>,
    /// old edge → surviving edge index (sides preserved)
    pub edge_map: Vec<Option<usize>>,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// A relabelling from an input graph to its canonical form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relabeling {
    /// input vertex → canonical vertex
    pub vertex: Vec<usize>,
    /// input slot → canonical slot
    pub slot: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct CanonicalForm {
    pub graph: DualGraph,
    pub encoding: Vec<u32>,
    pub relabel: Relabeling,
}

/// One automorphism of a canonical graph, acting on vertices and slots.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Automorphism {
    pub vertex: Vec<usize>,
    pub slot: Vec<usize>,
}

impl Automorphism {
    pub fn compose(&self, then: &Automorphism) -> Automorphism {
        Automorphism {
            vertex: self.vertex.iter().map(|&v| then.vertex[v]).collect(),
            slot: self.slot.iter().map(|&s| then.slot[s]).collect(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.vertex.iter().enumerate().all(|(i, &v)| i == v) && self.slot.iter().enumerate().all(|(i, &s)| i == s)
    }
}

/// The full automorphism group of a canonical graph, listed element by
/// element. Markings are fixed pointwise.
#[derive(Clone, Debug)]
pub struct AutGroup {
    elements: Vec<Automorphism>,
}

impl AutGroup {
    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[Automorphism] {
        &self.elements
    }

    /// A generating set found greedily: an element is kept when it lies
    /// outside the subgroup generated by those kept before it.
    pub fn generators(&self) -> Vec<Automorphism> {
        let mut gens: Vec<Automorphism> = Vec::new();
        let mut closure: BTreeSet<Automorphism> = BTreeSet::new();
        if let Some(id) = self.elements.iter().find(|a| a.is_identity()) {
            closure.insert(id.clone());
        }
        for x in &self.elements {
            if closure.contains(x) {
                continue;
            }
            gens.push(x.clone());
            closure = generated_subgroup(&gens, closure.iter().next().cloned());
        }
        gens
    }
}

pub fn generated_subgroup(gens: &[Automorphism], identity: Option<Automorphism>) -> BTreeSet<Automorphism> {
    let mut set: BTreeSet<Automorphism> = BTreeSet::new();
    let mut frontier: Vec<Automorphism> = identity.into_iter().chain(gens.iter().cloned()).collect();
    while let Some(x) = frontier.pop() {
        if !set.insert(x.clone()) {
            continue;
        }
        for g in gens {
            let y = x.compose(g);
            if !set.contains(&y) {
                frontier.push(y);
            }
        }
    }
    set
}

fn initial_colors(g: &DualGraph) -> Vec<u32> {
    let nv = g.num_vertices();
    let sigs: Vec<(u32, Vec<u32>, usize, usize)> = (0..nv)
        .map(|v| {
            let loops = g.edges.iter().filter(|&&(a, b)| a == v && b == v).count();
            (g.genera[v], g.legs[v].clone(), g.valence(v), loops)
        })
        .collect();
    rank_by(&sigs)
}

fn rank_by<T: Ord + Clone>(sigs: &[T]) -> Vec<u32> {
    let mut sorted: Vec<T> = sigs.to_vec();
    sorted.sort();
    sorted.dedup();
    sigs.iter().map(|s| sorted.binary_search(s).expect("present") as u32).collect()
}

fn refine(g: &DualGraph, adj: &[Vec<(usize, u32)>], colors: &mut Vec<u32>) {
    let mut ncolors = colors.iter().copied().collect::<BTreeSet<_>>().len();
    loop {
        let sigs: Vec<(u32, Vec<(u32, u32)>)> = (0..g.num_vertices())
            .map(|v| {
                let mut nb: Vec<(u32, u32)> = adj[v].iter().map(|&(w, m)| (colors[w], m)).collect();
                nb.sort_unstable();
                (colors[v], nb)
            })
            .collect();
        let new = rank_by(&sigs);
        let n2 = new.iter().copied().collect::<BTreeSet<_>>().len();
        *colors = new;
        if n2 == ncolors {
            return;
        }
        ncolors = n2;
    }
}

fn adjacency(g: &DualGraph) -> Vec<Vec<(usize, u32)>> {
    let nv = g.num_vertices();
    let mut mult: HashMap<(usize, usize), u32> = HashMap::new();
    for &(a, b) in &g.edges {
        if a != b {
            *mult.entry((a, b)).or_default() += 1;
            *mult.entry((b, a)).or_default() += 1;
        }
    }
    let mut adj = vec![Vec::new(); nv];
    for ((a, b), m) in mult {
        adj[a].push((b, m));
    }
    for a in &mut adj {
        a.sort_unstable();
    }
    adj
}

/// Encoding of `g` under the vertex order `order` (position → input vertex).
fn encode(g: &DualGraph, order: &[usize], inverse: &mut [usize]) -> Vec<u32> {
    for (pos, &v) in order.iter().enumerate() {
        inverse[v] = pos;
    }
    let nv = order.len();
    let mut out = Vec::with_capacity(2 + 2 * nv + g.num_markings() + 2 * g.edges.len());
    out.push(nv as u32);
    for &v in order {
        out.push(g.genera[v]);
    }
    for &v in order {
        out.push(g.legs[v].len() as u32);
        out.extend_from_slice(&g.legs[v]);
    }
    let mut es: Vec<(u32, u32)> = g
        .edges
        .iter()
        .map(|&(a, b)| {
            let (x, y) = (inverse[a] as u32, inverse[b] as u32);
            if x <= y {
                (x, y)
            } else {
                (y, x)
            }
        })
        .collect();
    es.sort_unstable();
    out.push(es.len() as u32);
    for (x, y) in es {
        out.push(x);
        out.push(y);
    }
    out
}

/// Individualisation-refinement search; collects every leaf order whose
/// encoding is minimal.
fn search(
    g: &DualGraph,
    adj: &[Vec<(usize, u32)>],
    colors: Vec<u32>,
    best: &mut Option<Vec<u32>>,
    best_orders: &mut Vec<Vec<usize>>,
    scratch: &mut Vec<usize>,
) {
    let nv = g.num_vertices();
    let mut counts = vec![0usize; nv];
    for &c in &colors {
        counts[c as usize] += 1;
    }
    let target = (0..nv).find(|&c| counts[c] > 1);
    match target {
        None => {
            let mut order = vec![0usize; nv];
            for v in 0..nv {
                order[colors[v] as usize] = v;
            }
            let enc = encode(g, &order, scratch);
            match best {
                Some(b) if enc > *b => {}
                Some(b) if enc == *b => best_orders.push(order),
                _ => {
                    *best = Some(enc);
                    best_orders.clear();
                    best_orders.push(order);
                }
            }
        }
        Some(cell) => {
            for v in 0..nv {
                if colors[v] as usize != cell {
                    continue;
                }
                let mut c2: Vec<u32> = colors.iter().map(|&c| 2 * c + 1).collect();
                c2[v] -= 1;
                let mut c2 = rank_by(&c2);
                refine(g, adj, &mut c2);
                search(g, adj, c2, best, best_orders, scratch);
            }
        }
    }
}

fn canonical_search(g: &DualGraph) -> (Vec<u32>, Vec<Vec<usize>>) {
    let adj = adjacency(g);
    let mut colors = initial_colors(g);
    refine(g, &adj, &mut colors);
    let mut best = None;
    let mut orders = Vec::new();
    let mut scratch = vec![0usize; g.num_vertices()];
    search(g, &adj, colors, &mut best, &mut orders, &mut scratch);
    (best.expect("at least one leaf"), orders)
}

fn build_canonical(g: &DualGraph, order: &[usize], encoding: Vec<u32>) -> CanonicalForm {
    let nv = g.num_vertices();
    let mut vmap = vec![0usize; nv];
    for (pos, &v) in order.iter().enumerate() {
        vmap[v] = pos;
    }
    let genera: Vec<u32> = order.iter().map(|&v| g.genera[v]).collect();
    let legs: Vec<Vec<u32>> = order.iter().map(|&v| g.legs[v].clone()).collect();
    // new edge order: by mapped (min, max), ties by input index
    let mut keyed: Vec<((usize, usize), usize, bool)> = g
        .edges
        .iter()
        .enumerate()
        .map(|(e, &(a, b))| {
            let (x, y) = (vmap[a], vmap[b]);
            if x <= y {
                ((x, y), e, false)
            } else {
                ((y, x), e, true)
            }
        })
        .collect();
    keyed.sort();
    let n = g.num_markings();
    let mut slot = vec![0usize; g.num_slots()];
    for m in 0..n {
        slot[m] = m;
    }
    let mut edges = Vec::with_capacity(keyed.len());
    for (new_e, &(pair, old_e, flipped)) in keyed.iter().enumerate() {
        edges.push(pair);
        let (s0, s1) = if flipped { (1, 0) } else { (0, 1) };
        slot[n + 2 * old_e] = n + 2 * new_e + s0;
        slot[n + 2 * old_e + 1] = n + 2 * new_e + s1;
    }
    CanonicalForm {
        graph: DualGraph::new_unchecked(genera, legs, edges),
        encoding,
        relabel: Relabeling { vertex: vmap, slot },
    }
}

/// Canonical form of `g` (no automorphism group computed).
pub fn canonical_form(g: &DualGraph) -> CanonicalForm {
    let (enc, orders) = canonical_search(g);
    build_canonical(g, &orders[0], enc)
}

type FormCache = RwLock<HashMap<DualGraph, Arc<CanonicalForm>>>;

fn form_cache() -> &'static FormCache {
    static CACHE: OnceLock<FormCache> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Memoised [`canonical_form`]; composite graphs recur constantly when
/// relations are substituted into strata.
pub fn canonical_form_cached(g: &DualGraph) -> Arc<CanonicalForm> {
    if let Some(c) = form_cache().read().expect("form cache").get(g) {
        return c.clone();
    }
    let c = Arc::new(canonical_form(g));
    form_cache().write().expect("form cache").insert(g.clone(), c.clone());
    c
}

fn compute_automorphisms(c: &DualGraph) -> AutGroup {
    let (_, orders) = canonical_search(c);
    let nv = c.num_vertices();
    // vertex automorphisms of the canonical graph: i ↦ position of orders[0][i] in orders[k]
    let mut vauts: Vec<Vec<usize>> = Vec::new();
    for o in &orders {
        let mut pos = vec![0usize; nv];
        for (p, &v) in o.iter().enumerate() {
            pos[v] = p;
        }
        let phi: Vec<usize> = orders[0].iter().map(|&v| pos[v]).collect();
        // the canonical graph is itself canonical, so orders[0] is a vertex
        // automorphism; conjugate to act on canonical labels
        vauts.push(phi);
    }
    // orders[0] relabels c to itself only up to an automorphism; compose so
    // that the identity is present
    let base = vauts[0].clone();
    let mut inv_base = vec![0usize; nv];
    for (i, &b) in base.iter().enumerate() {
        inv_base[b] = i;
    }
    let vauts: Vec<Vec<usize>> = vauts.iter().map(|p| (0..nv).map(|i| p[inv_base[i]]).collect()).collect();

    let n = c.num_markings();
    // edges grouped by unordered endpoint pair
    let mut classes: Vec<((usize, usize), Vec<usize>)> = Vec::new();
    for (e, &(a, b)) in c.edges.iter().enumerate() {
        let key = (a.min(b), a.max(b));
        match classes.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(e),
            None => classes.push((key, vec![e])),
        }
    }
    let mut elements = Vec::new();
    for phi in &vauts {
        // per class: list of (edge map, flips) options
        let mut per_class: Vec<Vec<Vec<(usize, usize, u8)>>> = Vec::new();
        let mut ok = true;
        for ((a, b), es) in &classes {
            let (fa, fb) = (phi[*a], phi[*b]);
            let tkey = (fa.min(fb), fa.max(fb));
            let targets = match classes.iter().find(|(k, _)| *k == tkey) {
                Some((_, t)) if t.len() == es.len() => t.clone(),
                _ => {
                    ok = false;
                    break;
                }
            };
            let loop_class = a == b;
            let mut opts = Vec::new();
            for perm in permutations(es.len()) {
                let nflip = if loop_class { 1usize << es.len() } else { 1 };
                for mask in 0..nflip {
                    let mut assign = Vec::with_capacity(es.len());
                    for (i, &e) in es.iter().enumerate() {
                        let te = targets[perm[i]];
                        let side_flip = if loop_class {
                            (mask >> i & 1) as u8
                        } else {
                            let (ea, _) = c.edges[e];
                            let (ta, _) = c.edges[te];
                            (phi[ea] != ta) as u8
                        };
                        assign.push((e, te, side_flip));
                    }
                    opts.push(assign);
                }
            }
            per_class.push(opts);
        }
        if !ok {
            continue;
        }
        let mut idx = vec![0usize; per_class.len()];
        loop {
            let mut slot = (0..c.num_slots()).collect::<Vec<_>>();
            for (ci, opts) in per_class.iter().enumerate() {
                for &(e, te, fl) in &opts[idx[ci]] {
                    slot[n + 2 * e] = n + 2 * te + fl as usize;
                    slot[n + 2 * e + 1] = n + 2 * te + 1 - fl as usize;
                }
            }
            elements.push(Automorphism { vertex: phi.clone(), slot });
            let mut j = 0;
            while j < idx.len() {
                idx[j] += 1;
                if idx[j] < per_class[j].len() {
                    break;
                }
                idx[j] = 0;
                j += 1;
            }
            if j == idx.len() {
                break;
            }
        }
    }
    elements.sort();
    elements.dedup();
    AutGroup { elements }
}

/// All permutations of `0..k` in lexicographic order.
pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        // next lexicographic permutation
        let Some(i) = (1..k).rev().find(|&i| cur[i - 1] < cur[i]) else { break };
        let j = (i..k).rev().find(|&j| cur[j] > cur[i - 1]).expect("successor");
        cur.swap(i - 1, j);
        cur[i..].reverse();
    }
    out
}

type AutCache = RwLock<HashMap<DualGraph, Arc<AutGroup>>>;

fn aut_cache() -> &'static AutCache {
    static CACHE: OnceLock<AutCache> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Automorphism group of a graph already in canonical form (memoised).
pub fn automorphisms(canonical: &DualGraph) -> Arc<AutGroup> {
    if let Some(a) = aut_cache().read().expect("aut cache").get(canonical) {
        return a.clone();
    }
    let a = Arc::new(compute_automorphisms(canonical));
    aut_cache().write().expect("aut cache").insert(canonical.clone(), a.clone());
    a
}

pub fn canonicalize(g: &DualGraph) -> (CanonicalForm, Arc<AutGroup>) {
    let c = canonical_form(g);
    let aut = automorphisms(&c.graph);
    (c, aut)
}

pub fn is_canonical(g: &DualGraph) -> bool {
    &canonical_form(g).graph == g
}

/// Encoding used to order canonical graphs.
pub fn encoding(g: &DualGraph) -> Vec<u32> {
    canonical_form(g).encoding
}

fn check_stable(g: u32, n: u32) -> Result<()> {
    if 2 * g as i64 - 2 + n as i64 <= 0 {
        Err(Error::invalid(format!("(g, n) = ({g}, {n}) is unstable")))
    } else {
        Ok(())
    }
}

/// All one-edge degenerations of `g` (not deduplicated).
fn degenerations(g: &DualGraph) -> Vec<DualGraph> {
    let mut out = Vec::new();
    let nv = g.num_vertices();
    for v in 0..nv {
        if g.genera[v] > 0 {
            let mut h = g.clone();
            h.genera[v] -= 1;
            h.edges.push((v, v));
            out.push(h);
        }
        let hs = g.half_edges_at(v);
        let k = hs.len();
        let gv = g.genera[v];
        for mask in 0u64..(1 << k) {
            let size1 = mask.count_ones() as i64;
            let size2 = k as i64 - size1;
            for g1 in 0..=gv {
                let g2 = gv - g1;
                if 2 * g1 as i64 - 1 + size1 <= 0 || 2 * g2 as i64 - 1 + size2 <= 0 {
                    continue;
                }
                let mut h = g.clone();
                h.genera[v] = g1;
                h.genera.push(g2);
                h.legs.push(Vec::new());
                let nw = nv;
                for (i, he) in hs.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        continue;
                    }
                    match *he {
                        HalfEdge::Leg(m) => {
                            h.legs[v].retain(|&x| x != m);
                            h.legs[nw].push(m);
                        }
                        HalfEdge::Edge { edge, side } => {
                            if side == 0 {
                                h.edges[edge].0 = nw;
                            } else {
                                h.edges[edge].1 = nw;
                            }
                        }
                    }
                }
                h.legs[nw].sort_unstable();
                h.edges.push((v, nw));
                out.push(h);
            }
        }
    }
    out
}

type GraphListCache = RwLock<HashMap<(u32, u32, usize), Arc<Vec<DualGraph>>>>;

fn graph_list_cache() -> &'static GraphListCache {
    static CACHE: OnceLock<GraphListCache> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Stable graphs of type `(g, n)` with at most `max_edges` edges (default
/// `3g − 3 + n`), one canonical representative per isomorphism class,
/// sorted by edge count and then by canonical encoding.
pub fn enumerate_graphs(g: u32, n: u32, max_edges: Option<usize>) -> Result<Arc<Vec<DualGraph>>> {
    check_stable(g, n)?;
    let dim = (3 * g as i64 - 3 + n as i64) as usize;
    let cap = max_edges.unwrap_or(dim).min(dim);
    if let Some(v) = graph_list_cache().read().expect("graph cache").get(&(g, n, cap)) {
        return Ok(v.clone());
    }
    let mut all: Vec<DualGraph> = Vec::new();
    let mut layer: Vec<DualGraph> = vec![canonical_form(&DualGraph::smooth(g, n)).graph];
    for _ in 0..=cap {
        let mut keyed: Vec<(Vec<u32>, DualGraph)> =
            layer.iter().map(|h| (encoding(h), h.clone())).collect();
        keyed.sort();
        all.extend(keyed.iter().map(|(_, h)| h.clone()));
        if all.iter().map(|h| h.num_edges()).max().unwrap_or(0) >= cap {
            break;
        }
        let mut next: BTreeSet<(Vec<u32>, DualGraph)> = BTreeSet::new();
        for h in &layer {
            for d in degenerations(h) {
                let c = canonical_form(&d);
                next.insert((c.encoding, c.graph));
            }
        }
        layer = next.into_iter().map(|(_, h)| h).collect();
        if layer.is_empty() {
            break;
        }
    }
    let all = Arc::new(all);
    graph_list_cache().write().expect("graph cache").insert((g, n, cap), all.clone());
    Ok(all)
}

/// Every nonempty edge subset together with the canonical contracted graph.
pub fn contractions(g: &DualGraph) -> Vec<(Vec<usize>, DualGraph)> {
    let e = g.num_edges();
    (1u64..(1 << e))
        .map(|mask| {
            let subset = (0..e).filter(|&i| mask >> i & 1 == 1).collect();
            (subset, canonical_form(&g.contract(mask).graph).graph)
        })
        .collect()
}
