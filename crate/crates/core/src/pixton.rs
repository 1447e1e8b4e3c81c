//! Relation vectors: the plain FZ relations in `κ` and the relations
//! `R(g, n, r; σ, a)` in the strata algebra.
//!
//! The per-graph evaluation avoids expanding `κ̂` term by term. Writing the
//! parts of `σ` as distinct values `t` with multiplicities `k_t`,
//!
//! ```text
//! κ̂(exp({1 − Ĉ_0}) Π {Ĉ_σj}) = Π k_t! · [s^k] Π_v exp(K_v[−log(1 − G)])
//! G = (1 − Ĉ_0) + Σ_t s_t Ĉ_t
//! ```
//!
//! where `K_v` sends `T^E ζ^a` to `κ_E^{(v)} ζ_v^a` (exponential formula for
//! the cycle sum). Parity extraction at `Π ζ_v^{g_v+1}` is done by averaging
//! over the characters `ζ_v = ±1`, so every series is evaluated with `ζ` a
//! plain sign.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dualgraph::{automorphisms, enumerate_graphs, DualGraph};
use crate::error::{Error, Result};
use crate::field::{factorial, Field};
use crate::fzseries::{bracket_exp, bracket_plain, chat, edge_factor, plain_c, series_a, BracketPolynomial};
use crate::kappaop::{kappa_op_poly, substitute_kappa0, KappaPoly};
use crate::strata::{labelled_decorations, Decoration, StrataMonomial, TautVector};

/// Parameters `(g, n, r; σ, a_1..a_n)` of one relation. `sigma` is kept
/// sorted in decreasing order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RelationParams {
    pub g: u32,
    pub n: u32,
    pub r: u32,
    pub sigma: Vec<u32>,
    pub a: Vec<u32>,
}

impl RelationParams {
    pub fn new(g: u32, n: u32, r: u32, mut sigma: Vec<u32>, a: Vec<u32>) -> Result<Self> {
        sigma.sort_unstable_by(|x, y| y.cmp(x));
        let p = RelationParams { g, n, r, sigma, a };
        p.validate()?;
        Ok(p)
    }

    /// `3r − (g + 1 + |σ| + Σa)`, which must be even and non-negative.
    pub fn slack(&self) -> i64 {
        3 * self.r as i64 - (self.g as i64 + 1 + self.sigma.iter().sum::<u32>() as i64 + self.a.iter().sum::<u32>() as i64)
    }

    pub fn validate(&self) -> Result<()> {
        if 2 * self.g as i64 - 2 + self.n as i64 <= 0 {
            return Err(Error::invalid(format!("(g, n) = ({}, {}) is unstable", self.g, self.n)));
        }
        if self.a.len() != self.n as usize {
            return Err(Error::invalid(format!("{} values of a for {} markings", self.a.len(), self.n)));
        }
        if let Some(x) = self.sigma.iter().find(|&&x| x == 0 || x % 3 == 2) {
            return Err(Error::invalid(format!("σ part {x} is not a positive integer ≢ 2 mod 3")));
        }
        if let Some(x) = self.a.iter().find(|&&x| x % 3 == 2) {
            return Err(Error::invalid(format!("a value {x} is ≡ 2 mod 3")));
        }
        let s = self.slack();
        if s < 0 {
            return Err(Error::invalid(format!("3r < g + 1 + |σ| + Σa for {self}")));
        }
        if s % 2 != 0 {
            return Err(Error::invalid(format!("parity condition fails for {self}")));
        }
        Ok(())
    }
}

impl std::fmt::Display for RelationParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "R({},{},{}; σ={:?}, a={:?})", self.g, self.n, self.r, self.sigma, self.a)
    }
}

/// Partitions with parts ≢ 2 mod 3 and size at most `max`, parts decreasing.
pub fn admissible_partitions(max: u32) -> Vec<Vec<u32>> {
    fn rec(rem: u32, largest: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        out.push(cur.clone());
        for p in (1..=largest.min(rem)).rev() {
            if p % 3 == 2 {
                continue;
            }
            cur.push(p);
            rec(rem - p, p, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(max, max, &mut Vec::new(), &mut out);
    out.sort();
    out
}

/// Every valid parameter set for `(g, n, r)`, sorted.
pub fn enumerate_params(g: u32, n: u32, r: u32) -> Result<Vec<RelationParams>> {
    if 2 * g as i64 - 2 + n as i64 <= 0 {
        return Err(Error::invalid(format!("(g, n) = ({g}, {n}) is unstable")));
    }
    let budget = 3 * r as i64 - g as i64 - 1;
    let mut out = Vec::new();
    if budget < 0 {
        return Ok(out);
    }
    let budget = budget as u32;
    let values: Vec<u32> = (0..=budget).filter(|x| x % 3 != 2).collect();
    let mut a = vec![0u32; n as usize];
    loop {
        let sa: u32 = a.iter().sum();
        if sa <= budget {
            for sigma in admissible_partitions(budget - sa) {
                let s = budget - sa - sigma.iter().sum::<u32>();
                if s.is_multiple_of(2) {
                    out.push(RelationParams { g, n, r, sigma, a: a.clone() });
                }
            }
        }
        // next a-tuple over `values`
        let mut j = 0;
        while j < a.len() {
            let pos = values.iter().position(|&x| x == a[j]).expect("a value in range");
            if pos + 1 < values.len() {
                a[j] = values[pos + 1];
                break;
            }
            a[j] = 0;
            j += 1;
        }
        if j == a.len() {
            break;
        }
    }
    out.sort();
    Ok(out)
}

/// `FZ(g, r; σ)` via plain series and the literal κ operator, with `κ_0`
/// replaced by `2g − 2`.
pub fn fz_relation(g: u32, r: u32, sigma: &[u32]) -> Result<KappaPoly> {
    let p = RelationParams::new(g, 0, r, sigma.to_vec(), vec![])?;
    let order = r as usize;
    let a = series_a(order).at_zeta_one();
    let one_minus_a: Vec<BigRational> =
        a.iter().enumerate().map(|(i, c)| if i == 0 { <BigRational as One>::one() - c } else { -c.clone() }).collect();
    let mut prod = bracket_exp(&bracket_plain(&one_minus_a), r)?;
    for &s in &p.sigma {
        prod = prod.mul_truncated(&bracket_plain(&plain_c(s, order)?), r);
    }
    let top: BracketPolynomial = prod.homogeneous_part(r);
    Ok(substitute_kappa0(&kappa_op_poly(&top), 2 * g as i64 - 2))
}

/// Truncated quotient of a polynomial ring in commuting nilpotents
/// `s_t^{k_t + 1} = 0`. Indices are mixed radix, so adding two indices
/// whose digits do not overflow multiplies the monomials.
struct SRing {
    size: usize,
    top: usize,
    /// (i, j) pairs whose product is nonzero
    pairs: Vec<(usize, usize)>,
    /// index of `s_t`, per distinct part
    gens: Vec<usize>,
}

impl SRing {
    fn new(ks: &[usize]) -> Self {
        let size: usize = ks.iter().map(|k| k + 1).product();
        let digits = |mut i: usize| -> Vec<usize> {
            ks.iter()
                .map(|k| {
                    let d = i % (k + 1);
                    i /= k + 1;
                    d
                })
                .collect()
        };
        let all: Vec<Vec<usize>> = (0..size).map(digits).collect();
        let mut pairs = Vec::new();
        for i in 0..size {
            for j in 0..size - i {
                if all[i].iter().zip(&all[j]).zip(ks).all(|((a, b), k)| a + b <= *k) {
                    pairs.push((i, j));
                }
            }
        }
        let mut gens = Vec::new();
        let mut stride = 1;
        for k in ks {
            gens.push(stride);
            stride *= k + 1;
        }
        SRing { size, top: size - 1, pairs, gens }
    }

    fn mul<F: Field>(&self, a: &[F], b: &[F], zero: &F) -> Vec<F> {
        let mut out = vec![zero.clone(); self.size];
        for &(i, j) in &self.pairs {
            if a[i].is_zero() || b[j].is_zero() {
                continue;
            }
            out[i + j] += a[i].clone() * b[j].clone();
        }
        out
    }

    /// Coefficient of the top monomial in `a · b`.
    fn top_of_product<F: Field>(&self, a: &[F], b: &[F], zero: &F) -> F {
        let mut acc = zero.clone();
        for i in 0..self.size {
            let j = self.top - i;
            if self.pairs_ok(i, j) && !a[i].is_zero() && !b[j].is_zero() {
                acc += a[i].clone() * b[j].clone();
            }
        }
        acc
    }

    fn pairs_ok(&self, i: usize, j: usize) -> bool {
        // i + j = top never overflows a digit, because top has every digit maximal
        i + j == self.top
    }
}

type SSeries<F> = Vec<Vec<F>>;

fn series_mul<F: Field>(ring: &SRing, a: &SSeries<F>, b: &SSeries<F>, zero: &F) -> SSeries<F> {
    let d = a.len();
    let mut out = vec![vec![zero.clone(); ring.size]; d];
    for i in 0..d {
        for j in 0..d - i {
            let p = ring.mul(&a[i], &b[j], zero);
            for (o, x) in out[i + j].iter_mut().zip(p) {
                *o += x;
            }
        }
    }
    out
}

/// Data shared by all graphs for one parameter set and one coefficient field.
struct Engine<F: Field> {
    ctx: F::Ctx,
    ring: SRing,
    order: usize,
    /// `L = −log(1 − G)` at `ζ = +1` and `ζ = −1`
    log: [SSeries<F>; 2],
    /// `[Ĉ_{a_i}]_{T^p}` at `ζ = ±1`, per marking
    legs: Vec<[Vec<F>; 2]>,
    /// `Δ[p, q]` at `(ζ_1, ζ_2)`, flattened as `[z1 + 2 z2][p][q]`
    edge: Vec<Vec<Vec<F>>>,
    prefactor: F,
}

fn to_f<F: Field>(ctx: &F::Ctx, q: &BigRational) -> Result<F> {
    F::from_rational(ctx, q)
}

impl<F: Field> Engine<F> {
    fn new(p: &RelationParams, order: usize, ctx: F::Ctx) -> Result<Self> {
        let mut parts: Vec<(u32, usize)> = Vec::new();
        for &s in &p.sigma {
            match parts.iter_mut().find(|(t, _)| *t == s) {
                Some((_, k)) => *k += 1,
                None => parts.push((s, 1)),
            }
        }
        let ks: Vec<usize> = parts.iter().map(|x| x.1).collect();
        let ring = SRing::new(&ks);
        let zero = F::zero(&ctx);
        let c0 = chat(0, order)?;
        let mut log: [SSeries<F>; 2] = [Vec::new(), Vec::new()];
        for (zi, slot) in log.iter_mut().enumerate() {
            let neg = zi == 1;
            let mut gser: SSeries<F> = vec![vec![zero.clone(); ring.size]; order + 1];
            for (k, x) in gser.iter_mut().enumerate() {
                let c = c0.coeff(k).eval(neg);
                let v = if k == 0 { <BigRational as One>::one() - c } else { -c };
                x[0] = to_f(&ctx, &v)?;
            }
            for (ti, &(t, _)) in parts.iter().enumerate() {
                let ct = chat(t, order)?;
                for (k, x) in gser.iter_mut().enumerate() {
                    x[ring.gens[ti]] += to_f(&ctx, &ct.coeff(k).eval(neg))?;
                }
            }
            // −log(1 − G) = Σ_{m ≥ 1} G^m / m; G is nilpotent modulo T^{order+1}
            let max_m = order + ks.iter().sum::<usize>();
            let mut power = gser.clone();
            let mut acc: SSeries<F> = vec![vec![zero.clone(); ring.size]; order + 1];
            for m in 1..=max_m {
                let inv = F::from_ratio(&ctx, 1, m as i64);
                for (a, pw) in acc.iter_mut().zip(&power) {
                    for (x, y) in a.iter_mut().zip(pw) {
                        *x += y.clone() * inv.clone();
                    }
                }
                if m < max_m {
                    power = series_mul(&ring, &power, &gser, &zero);
                }
            }
            *slot = acc;
        }
        let mut legs = Vec::new();
        for &ai in &p.a {
            let c = chat(ai, order)?;
            let mut pair: [Vec<F>; 2] = [Vec::new(), Vec::new()];
            for (zi, v) in pair.iter_mut().enumerate() {
                for k in 0..=order {
                    v.push(to_f(&ctx, &c.coeff(k).eval(zi == 1))?);
                }
            }
            legs.push(pair);
        }
        let delta = edge_factor(order)?;
        let mut edge = Vec::new();
        for z in 0..4 {
            let (z1, z2) = (z & 1 == 1, z & 2 == 2);
            let mut tab = vec![vec![zero.clone(); order + 1]; order + 1];
            for pp in 0..=order {
                for qq in 0..=order - pp {
                    tab[pp][qq] = to_f(&ctx, &delta.eval(pp, qq, z1, z2))?;
                }
            }
            edge.push(tab);
        }
        let kfact = ks.iter().fold(BigInt::one(), |acc, &k| acc * factorial(k as u64));
        let prefactor = to_f(&ctx, &BigRational::from_integer(kfact))?;
        Ok(Engine { ctx, ring, order, log, legs, edge, prefactor })
    }

    /// `exp(c L_0) Π_E L_E^{μ_E} / μ_E!` at one vertex.
    fn vertex_factor(&self, c: i64, neg: bool, kappa: &[u32]) -> Vec<F> {
        let zero = F::zero(&self.ctx);
        let l = &self.log[neg as usize];
        // exp(c · L_0), L_0 nilpotent
        let x0: Vec<F> = l[0].iter().map(|v| v.clone() * F::from_int(&self.ctx, c)).collect();
        let mut exp = vec![zero.clone(); self.ring.size];
        exp[0] = F::one(&self.ctx);
        let mut term = exp.clone();
        for j in 1..self.ring.size {
            term = self.ring.mul(&term, &x0, &zero);
            if term.iter().all(F::is_zero) {
                break;
            }
            let inv = F::from_ratio(&self.ctx, 1, j as i64);
            term.iter_mut().for_each(|t| *t *= inv.clone());
            for (e, t) in exp.iter_mut().zip(&term) {
                *e += t.clone();
            }
        }
        let mut out = exp;
        let mut i = 0;
        while i < kappa.len() {
            let e = kappa[i] as usize;
            let mut mu = 0;
            while i < kappa.len() && kappa[i] as usize == e {
                mu += 1;
                i += 1;
            }
            for _ in 0..mu {
                out = self.ring.mul(&out, &l[e], &zero);
            }
            let f = F::from_rational(&self.ctx, &BigRational::from_integer(factorial(mu as u64)))
                .expect("small factorial");
            let inv = f.inv().expect("factorial invertible");
            out.iter_mut().for_each(|t| *t *= inv.clone());
        }
        out
    }
}

/// `R_Γ` as labelled decorations on `gamma` (with `κ_0` already replaced by
/// its value), for graphs with at most `r` edges. With `bounded`, only
/// decorations within every vertex dimension are produced.
pub fn graph_contribution<F: Field>(
    gamma: &DualGraph,
    p: &RelationParams,
    ctx: &F::Ctx,
    bounded: bool,
) -> Result<Vec<(Decoration, F)>> {
    p.validate()?;
    if (gamma.genus(), gamma.num_markings() as u32) != (p.g, p.n) {
        return Err(Error::Mismatch(format!("graph of type ({}, {}) for {p}", gamma.genus(), gamma.num_markings())));
    }
    let ne = gamma.num_edges() as u32;
    if ne > p.r {
        return Ok(Vec::new());
    }
    let d = (p.r - ne) as usize;
    let engine = Engine::<F>::new(p, d, ctx.clone())?;
    contribution_with(&engine, gamma, d, bounded)
}

fn contribution_with<F: Field>(
    engine: &Engine<F>,
    gamma: &DualGraph,
    d: usize,
    bounded: bool,
) -> Result<Vec<(Decoration, F)>> {
    let ctx = &engine.ctx;
    let zero = F::zero(ctx);
    let nv = gamma.num_vertices();
    let n = gamma.num_markings();
    let c: Vec<i64> = (0..nv).map(|v| gamma.kappa0(v)).collect();
    let leg_vertex: Vec<usize> = (1..=n as u32).map(|m| gamma.leg_vertex(m)).collect();
    let edges = gamma.edges();
    // 2^{h1} · 2^{|V|} in the denominator
    let two_pow = F::from_int(ctx, 1i64 << (gamma.h1() as usize + nv));
    let scale = engine.prefactor.clone() * two_pow.inv().ok_or(Error::Consistency("2 not invertible".into()))?;
    let mut cache: HashMap<(usize, bool, Vec<u32>), Vec<F>> = HashMap::new();
    let mut out = Vec::new();
    for deco in labelled_decorations(gamma, d as u32, bounded) {
        let mut total = zero.clone();
        for mask in 0u64..(1 << nv) {
            let neg = |v: usize| mask >> v & 1 == 1;
            let mut scalar = F::one(ctx);
            for (v, &g) in gamma.genera().iter().enumerate() {
                if neg(v) && (g + 1) % 2 == 1 {
                    scalar = -scalar;
                }
            }
            for (i, &v) in leg_vertex.iter().enumerate() {
                scalar *= engine.legs[i][neg(v) as usize][deco.psi[i] as usize].clone();
            }
            for (e, &(a, b)) in edges.iter().enumerate() {
                let z = neg(a) as usize + 2 * neg(b) as usize;
                let (pp, qq) = (deco.psi[n + 2 * e] as usize, deco.psi[n + 2 * e + 1] as usize);
                scalar *= engine.edge[z][pp][qq].clone();
            }
            if scalar.is_zero() {
                continue;
            }
            let mut prod: Option<Vec<F>> = None;
            for v in 0..nv {
                let w = cache
                    .entry((v, neg(v), deco.kappa[v].clone()))
                    .or_insert_with(|| engine.vertex_factor(c[v], neg(v), &deco.kappa[v]));
                prod = Some(match prod {
                    None => w.clone(),
                    Some(acc) if v + 1 == nv => {
                        let t = engine.ring.top_of_product(&acc, w, &zero);
                        let mut only = vec![zero.clone(); engine.ring.size];
                        only[engine.ring.top] = t;
                        only
                    }
                    Some(acc) => engine.ring.mul(&acc, w, &zero),
                });
            }
            let top = prod.expect("at least one vertex")[engine.ring.top].clone();
            total += scalar * top;
        }
        if !total.is_zero() {
            out.push((deco, total * scale.clone()));
        }
    }
    let _ = engine.order;
    Ok(out)
}

/// `R(g, n, r; σ, a)` in the canonical basis, over any coefficient field.
pub fn relation_in<F: Field>(p: &RelationParams, ctx: &F::Ctx, bounded: bool) -> Result<TautVector<F>> {
    p.validate()?;
    let graphs = enumerate_graphs(p.g, p.n, Some(p.r as usize))?;
    let mut engines: BTreeMap<usize, Engine<F>> = BTreeMap::new();
    for gr in graphs.iter() {
        let d = p.r as usize - gr.num_edges();
        if let std::collections::btree_map::Entry::Vacant(e) = engines.entry(d) {
            e.insert(Engine::new(p, d, ctx.clone())?);
        }
    }
    let parts: Vec<Result<Vec<(StrataMonomial, F)>>> = graphs
        .par_iter()
        .map(|gr| {
            let d = p.r as usize - gr.num_edges();
            let contrib = contribution_with(&engines[&d], gr, d, bounded)?;
            let aut = automorphisms(gr);
            let inv = F::from_int(ctx, aut.order() as i64).inv().expect("|Aut| invertible");
            Ok(contrib
                .into_iter()
                .map(|(deco, c)| (StrataMonomial::new(gr.clone(), deco).canonicalize(), c * inv.clone()))
                .collect())
        })
        .collect();
    let mut out = TautVector::zero(p.g, p.n, p.r);
    for part in parts {
        for (m, c) in part? {
            out.add_term(m, c);
        }
    }
    Ok(out)
}

/// `R(g, n, r; σ, a)` with exact rational coefficients, all decorations kept.
pub fn relation(p: &RelationParams) -> Result<TautVector> {
    relation_in::<BigRational>(p, &(), false)
}

/// Smooth-graph part of a relation with `n = 0`, as a κ-polynomial.
pub fn interior_kappa_part(v: &TautVector) -> KappaPoly {
    let mut out = KappaPoly::new();
    for (m, c) in v.terms() {
        if m.graph.is_smooth() {
            out.insert(m.deco.kappa[0].clone(), c.clone());
        }
    }
    out
}

/// Smooth-graph contribution only, exact (cheap: one vertex, no edges).
pub fn interior_relation(p: &RelationParams) -> Result<KappaPoly> {
    let smooth = DualGraph::smooth(p.g, p.n);
    let mut out = KappaPoly::new();
    for (deco, c) in graph_contribution::<BigRational>(&smooth, p, &(), false)? {
        if deco.psi.iter().all(|&x| x == 0) {
            *out.entry(deco.kappa[0].clone()).or_insert_with(<BigRational as Zero>::zero) += c;
        }
    }
    out.retain(|_, c| !Zero::is_zero(c));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Fp, DEFAULT_PRIMES};
    use crate::fzseries::{bracket, chat as chat_series};
    use crate::kappaop::{kappa_hat_poly, KappaHatCache};
    use crate::strata::RawTerm;
    use num_traits::Signed;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    #[test]
    fn params_validation() {
        assert!(RelationParams::new(1, 1, 1, vec![], vec![1]).is_ok());
        assert!(RelationParams::new(1, 1, 1, vec![1], vec![0]).is_ok());
        assert!(RelationParams::new(1, 1, 1, vec![], vec![0]).is_err()); // parity
        assert!(RelationParams::new(2, 0, 1, vec![], vec![]).is_ok());
        assert!(RelationParams::new(2, 0, 2, vec![], vec![]).is_err());
        assert!(RelationParams::new(2, 0, 0, vec![], vec![]).is_err());
        assert!(RelationParams::new(1, 1, 1, vec![2], vec![0]).is_err());
        assert!(RelationParams::new(1, 1, 3, vec![], vec![2]).is_err());
    }

    #[test]
    fn enumerate_params_examples() {
        let ps = enumerate_params(1, 1, 1).unwrap();
        let got: Vec<(Vec<u32>, Vec<u32>)> = ps.iter().map(|p| (p.sigma.clone(), p.a.clone())).collect();
        assert_eq!(got, vec![(vec![], vec![1]), (vec![1], vec![0])]);
        // superset property in the same parity class
        for &(g, n) in &[(2u32, 0u32), (1, 2)] {
            let lo = enumerate_params(g, n, 2).unwrap();
            let hi = enumerate_params(g, n, 4).unwrap();
            for p in lo {
                assert!(hi.iter().any(|h| h.sigma == p.sigma && h.a == p.a));
            }
        }
        for p in enumerate_params(3, 2, 4).unwrap() {
            p.validate().unwrap();
        }
    }

    #[test]
    fn fz_precondition_and_nonzero() {
        assert!(fz_relation(4, 1, &[]).is_err());
        // smallest valid σ = ∅ relation in genus 2: 3r ≥ 3, 3r ≡ 3 mod 2 → r = 1
        let z = fz_relation(2, 1, &[]).unwrap();
        assert!(!z.is_empty());
    }

    /// `FZ` by literally expanding the κ operator over permutations.
    fn fz_by_permutations(g: u32, r: u32, sigma: &[u32]) -> KappaPoly {
        let order = r as usize;
        let a = series_a(order).at_zeta_one();
        let one_minus_a: Vec<BigRational> =
            a.iter().enumerate().map(|(i, c)| if i == 0 { q(1) - c } else { -c.clone() }).collect();
        let mut prod = bracket_exp(&bracket_plain(&one_minus_a), r).unwrap();
        for &s in sigma {
            prod = prod.mul_truncated(&bracket_plain(&plain_c(s, order).unwrap()), r);
        }
        let mut out = KappaPoly::new();
        for (m, c) in prod.homogeneous_part(r).terms() {
            let es: Vec<u32> = m.iter().map(|k| k.n).collect();
            for perm in crate::dualgraph::permutations(es.len()) {
                let mut seen = vec![false; es.len()];
                let mut key = Vec::new();
                for i in 0..es.len() {
                    if seen[i] {
                        continue;
                    }
                    let mut j = i;
                    let mut s = 0;
                    while !seen[j] {
                        seen[j] = true;
                        s += es[j];
                        j = perm[j];
                    }
                    key.push(s);
                }
                key.sort_unstable();
                *out.entry(key).or_insert_with(<BigRational as Zero>::zero) += c.clone();
            }
        }
        out.retain(|_, c| !Zero::is_zero(c));
        substitute_kappa0(&out, 2 * g as i64 - 2)
    }

    #[test]
    fn fz_dual_path() {
        for g in 0..=6u32 {
            for r in 1..=4u32 {
                for p in enumerate_params(g.max(2), 0, r).unwrap() {
                    if p.g != g.max(2) || r as usize + p.sigma.len() > 7 {
                        continue;
                    }
                    assert_eq!(fz_relation(p.g, r, &p.sigma).unwrap(), fz_by_permutations(p.g, r, &p.sigma));
                }
            }
        }
    }

    #[test]
    fn interior_matches_fz() {
        for g in 2..=6u32 {
            for r in 1..=4u32 {
                for p in enumerate_params(g, 0, r).unwrap() {
                    let fz = fz_relation(g, r, &p.sigma).unwrap();
                    assert_eq!(interior_relation(&p).unwrap(), fz, "{p}");
                }
            }
        }
    }

    /// Literal evaluation of `R_Γ`: expand the bracket exponential, apply
    /// κ̂ term by term, multiply by the leg and edge series as polynomials
    /// with parity bits, then extract.
    fn slow_contribution(gamma: &DualGraph, p: &RelationParams) -> (BTreeMap<Decoration, BigRational>, usize) {
        let ne = gamma.num_edges() as u32;
        let d = p.r - ne;
        let order = d as usize;
        let nv = gamma.num_vertices();
        let n = gamma.num_markings();
        let c0 = chat_series(0, order).unwrap();
        let one_minus = &crate::fzseries::ParitySeries::one(order) - &c0;
        let mut prod = bracket_exp(&bracket(&one_minus), d).unwrap();
        for &s in &p.sigma {
            prod = prod.mul_truncated(&bracket(&chat_series(s, order).unwrap()), d);
        }
        let cache = KappaHatCache::new();
        let kh = kappa_hat_poly(&prod, nv, &cache);
        // polynomial in (κ lists, ψ per slot, parity bits)
        type Key = (Vec<Vec<u32>>, Vec<u32>, u64);
        let mut poly: BTreeMap<Key, BigRational> = BTreeMap::new();
        for (t, c) in &kh.terms {
            poly.insert((t.kappa.clone(), vec![0; gamma.num_slots()], t.parity), c.clone());
        }
        let mul_factor = |poly: &BTreeMap<Key, BigRational>, factor: &[(usize, u32, usize, u32, u64, BigRational)]| {
            // factor terms: (slot1, exp1, slot2, exp2, parity, coeff)
            let mut out: BTreeMap<Key, BigRational> = BTreeMap::new();
            for ((k, psi, par), c) in poly {
                for (s1, e1, s2, e2, fp, fc) in factor {
                    let mut psi = psi.clone();
                    psi[*s1] += e1;
                    psi[*s2] += e2;
                    let deg: u32 = k.iter().flatten().sum::<u32>() + psi.iter().sum::<u32>();
                    if deg > d {
                        continue;
                    }
                    *out.entry((k.clone(), psi, par ^ fp)).or_insert_with(<BigRational as Zero>::zero) += c * fc;
                }
            }
            out
        };
        for i in 0..n {
            let v = gamma.leg_vertex(i as u32 + 1);
            let ch = chat_series(p.a[i], order).unwrap();
            let mut f = Vec::new();
            for k in 0..=order {
                let co = ch.coeff(k);
                for a in 0..2u8 {
                    let x = co.component(a).clone();
                    if !Zero::is_zero(&x) {
                        f.push((i, k as u32, i, 0, (a as u64) << v, x));
                    }
                }
            }
            poly = mul_factor(&poly, &f);
        }
        let delta = edge_factor(order).unwrap();
        for (e, &(a, b)) in gamma.edges().iter().enumerate() {
            let mut f = Vec::new();
            for pp in 0..=order {
                for qq in 0..=order - pp {
                    let bp = delta.coeff(pp, qq);
                    for z in 0..4usize {
                        if Zero::is_zero(&bp[z]) {
                            continue;
                        }
                        let par = ((z & 1) as u64) << a ^ (((z >> 1) & 1) as u64) << b;
                        f.push((n + 2 * e, pp as u32, n + 2 * e + 1, qq as u32, par, bp[z].clone()));
                    }
                }
            }
            poly = mul_factor(&poly, &f);
        }
        let want: u64 = (0..nv).filter(|&v| (gamma.genera()[v] + 1) % 2 == 1).map(|v| 1u64 << v).sum();
        let h = BigRational::new(1.into(), BigInt::from(1u64 << gamma.h1()));
        let mut raw = Vec::new();
        let mut discarded = 0;
        for ((k, psi, par), c) in poly {
            let deg: u32 = k.iter().flatten().sum::<u32>() + psi.iter().sum::<u32>();
            if deg == d && par == want {
                raw.push((RawTerm { graph: gamma.clone(), kappa: k, psi }, c * &h));
            } else if deg == d && !Zero::is_zero(&c) {
                discarded += 1;
            }
        }
        // normalise κ_0 on the labelled graph without orbit reduction
        let mut out = BTreeMap::new();
        for (t, c) in raw {
            let mut coeff = c;
            let mut kappa = Vec::new();
            for (v, ks) in t.kappa.iter().enumerate() {
                for _ in ks.iter().filter(|&&x| x == 0) {
                    coeff *= q(gamma.kappa0(v));
                }
                kappa.push(ks.iter().copied().filter(|&x| x != 0).collect::<Vec<_>>());
            }
            let e = out.entry(Decoration { kappa, psi: t.psi }).or_insert_with(<BigRational as Zero>::zero);
            *e += coeff;
        }
        out.retain(|_, c: &mut BigRational| !Zero::is_zero(c));
        (out, discarded)
    }

    #[test]
    fn fast_engine_matches_literal_formula() {
        let cases: Vec<(u32, u32, u32)> = vec![(1, 1, 1), (1, 2, 2), (2, 0, 2), (0, 4, 1), (1, 3, 2), (2, 1, 2), (0, 5, 2), (2, 0, 3)];
        let mut checked = 0;
        for (g, n, r) in cases {
            for p in enumerate_params(g, n, r).unwrap() {
                if p.sigma.iter().sum::<u32>() + p.a.iter().sum::<u32>() > 6 {
                    continue;
                }
                for gamma in enumerate_graphs(g, n, Some(r as usize)).unwrap().iter() {
                    let fast: BTreeMap<Decoration, BigRational> =
                        graph_contribution::<BigRational>(gamma, &p, &(), false).unwrap().into_iter().collect();
                    let (slow, _) = slow_contribution(gamma, &p);
                    assert_eq!(fast, slow, "{p} on {gamma:?}");
                    checked += 1;
                }
            }
        }
        assert!(checked > 100);
    }

    #[test]
    fn parity_extraction_discards_terms() {
        let p = RelationParams::new(2, 0, 3, vec![], vec![]).unwrap();
        let gamma = crate::dualgraph::canonical_form(&DualGraph::new(vec![1, 1], vec![vec![], vec![]], vec![(0, 1)]).unwrap()).graph;
        let (kept, discarded) = slow_contribution(&gamma, &p);
        assert!(discarded > 0);
        assert!(!kept.is_empty());
    }

    #[test]
    fn full_degeneration_uses_edge_constant() {
        // one edge, no decoration left: (1/4) Σ ζ_1 ζ_2 (84 − 60 ζ_1 ζ_2) = −60
        let p = RelationParams::new(0, 4, 1, vec![], vec![0, 0, 0, 0]).unwrap();
        let v = relation(&p).unwrap();
        for gamma in enumerate_graphs(0, 4, Some(1)).unwrap().iter().filter(|g| g.num_edges() == 1) {
            let m = StrataMonomial::undecorated(gamma.clone());
            assert_eq!(v.coeff(&m), Some(&q(-60)));
        }
    }

    #[test]
    fn relation_one_one_one() {
        for p in enumerate_params(1, 1, 1).unwrap() {
            let v = relation(&p).unwrap();
            assert!(!v.is_zero());
            assert!(v.terms().keys().all(|m| m.degree() == 1));
        }
    }

    #[test]
    fn modular_agrees_with_exact() {
        let pr = DEFAULT_PRIMES[0];
        for p in enumerate_params(1, 2, 2).unwrap().into_iter().take(6) {
            let exact = relation(&p).unwrap();
            let modular = relation_in::<Fp>(&p, &pr, false).unwrap();
            assert_eq!(exact.len(), modular.len());
            for (m, c) in exact.terms() {
                assert_eq!(Fp::from_rational(&pr, c).unwrap(), *modular.coeff(m).unwrap());
            }
        }
    }

    #[test]
    fn relations_are_symmetric_under_marking_permutations() {
        for &(g, n, r) in &[(0u32, 4u32, 1u32), (1, 2, 2), (1, 3, 2), (0, 5, 2), (2, 1, 2), (1, 4, 1)] {
            for p in enumerate_params(g, n, r).unwrap() {
                if p.a.iter().any(|&x| x != p.a[0]) {
                    continue;
                }
                let v = relation(&p).unwrap();
                for perm in crate::dualgraph::permutations(n as usize).into_iter().skip(1) {
                    let mut w = TautVector::zero(g, n, r);
                    for (m, c) in v.terms() {
                        w.add_term(m.permute_markings(&perm).canonicalize(), c.clone());
                    }
                    assert_eq!(w, v, "{p} under {perm:?}");
                }
            }
        }
    }


    #[test]
    fn degree_is_homogeneous() {
        let p = RelationParams::new(1, 2, 2, vec![1], vec![1, 0]).unwrap();
        let v = relation(&p).unwrap();
        assert!(v.terms().keys().all(|m| m.degree() == 2));
        assert!(v.terms().values().any(|c| c.is_negative()) || v.terms().values().any(|c| c.is_positive()));
    }
}
