//! The `κ` operator and its parity-aware multi-vertex form `κ̂`.
//!
//! `κ(K_{e_1}···K_{e_l})` sums over permutations `τ ∈ S_l` the product over
//! cycles `c` of `κ_{e_c}`. Grouping permutations by their cycle supports
//! gives a sum over set partitions in which a block `B` carries weight
//! `(|B| − 1)!`, the number of cyclic orders on it. That is what is
//! evaluated here.

use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::field::factorial;
use crate::fzseries::{BracketPolynomial, KSymbol};

/// Polynomial in `κ_0, κ_1, …`; keys are sorted index lists.
pub type KappaPoly = BTreeMap<Vec<u32>, BigRational>;

/// A monomial in the per-vertex symbols `κ_i^{(v)}`, `ψ_h` and `ζ_v`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct KappaPsiTerm {
    /// Sorted κ indices at each vertex.
    pub kappa: Vec<Vec<u32>>,
    /// `(half-edge slot, exponent)` with positive exponents, sorted by slot.
    pub psi: Vec<(usize, u32)>,
    /// Bit `v` holds the exponent of `ζ_v` modulo 2.
    pub parity: u64,
}

impl KappaPsiTerm {
    pub fn unit(nvertices: usize) -> Self {
        KappaPsiTerm { kappa: vec![Vec::new(); nvertices], psi: Vec::new(), parity: 0 }
    }

    pub fn t_degree(&self) -> u32 {
        self.kappa.iter().flatten().sum::<u32>() + self.psi.iter().map(|(_, e)| *e).sum::<u32>()
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct KappaPsiPoly {
    pub nvertices: usize,
    pub terms: BTreeMap<KappaPsiTerm, BigRational>,
}

impl KappaPsiPoly {
    pub fn new(nvertices: usize) -> Self {
        KappaPsiPoly { nvertices, terms: BTreeMap::new() }
    }

    pub fn add_term(&mut self, t: KappaPsiTerm, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry(t.clone()).or_insert_with(BigRational::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&t);
        }
    }

    pub fn add(&mut self, o: &KappaPsiPoly) {
        for (t, c) in &o.terms {
            self.add_term(t.clone(), c.clone());
        }
    }
}

/// Visit all set partitions of `0..l`, each as a list of blocks.
pub fn for_each_set_partition(l: usize, mut f: impl FnMut(&[Vec<usize>])) {
    fn rec(i: usize, l: usize, blocks: &mut Vec<Vec<usize>>, f: &mut dyn FnMut(&[Vec<usize>])) {
        if i == l {
            f(blocks);
            return;
        }
        for b in 0..blocks.len() {
            blocks[b].push(i);
            rec(i + 1, l, blocks, f);
            blocks[b].pop();
        }
        blocks.push(vec![i]);
        rec(i + 1, l, blocks, f);
        blocks.pop();
    }
    rec(0, l, &mut Vec::new(), &mut f);
}

fn cyclic_orders(size: usize) -> BigRational {
    BigRational::from_integer(factorial(size.saturating_sub(1) as u64))
}

/// `κ(K_{e_1}···K_{e_l})`.
///
/// Works on the multiset of exponents: the block containing one copy of the
/// smallest remaining value is chosen by multiplicities, weighted by the
/// number of index sets realising it, and the rest is handled recursively.
pub fn kappa_op(es: &[u32]) -> KappaPoly {
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for &e in es {
        *counts.entry(e).or_insert(0) += 1;
    }
    let values: Vec<u32> = counts.keys().copied().collect();
    let mult: Vec<usize> = counts.values().copied().collect();
    let mut memo = HashMap::new();
    multiset_kappa(&values, mult, &mut memo)
}

fn binomial(n: usize, k: usize) -> BigInt {
    factorial(n as u64) / (factorial(k as u64) * factorial((n - k) as u64))
}

fn multiset_kappa(values: &[u32], mult: Vec<usize>, memo: &mut HashMap<Vec<usize>, KappaPoly>) -> KappaPoly {
    if let Some(hit) = memo.get(&mult) {
        return hit.clone();
    }
    let mut out = KappaPoly::new();
    let Some(first) = mult.iter().position(|&m| m > 0) else {
        out.insert(Vec::new(), BigRational::one());
        return out;
    };
    // block = one copy of values[first] plus take[t] further copies of each value
    let mut take = vec![0usize; mult.len()];
    loop {
        let size = 1 + take.iter().sum::<usize>();
        let sum: u32 = values[first] + take.iter().zip(values).map(|(&c, &v)| c as u32 * v).sum::<u32>();
        let mut ways = BigInt::from(1);
        let mut rest = mult.clone();
        rest[first] -= 1;
        for t in 0..mult.len() {
            ways *= binomial(rest[t], take[t]);
        }
        for t in 0..mult.len() {
            rest[t] -= take[t];
        }
        let w = BigRational::from_integer(ways * factorial(size as u64 - 1));
        for (key, c) in multiset_kappa(values, rest, memo) {
            let mut key = key;
            let pos = key.partition_point(|&x| x < sum);
            key.insert(pos, sum);
            *out.entry(key).or_insert_with(BigRational::zero) += &w * c;
        }
        // next take-vector, bounded by what is left after removing `first`
        let mut j = 0;
        while j < take.len() {
            let cap = mult[j] - usize::from(j == first);
            if take[j] < cap {
                take[j] += 1;
                break;
            }
            take[j] = 0;
            j += 1;
        }
        if j == take.len() {
            break;
        }
    }
    memo.insert(mult, out.clone());
    out
}

/// `κ` by direct enumeration of set partitions; exponential in `l`, kept as a
/// reference for the multiset recursion.
pub fn kappa_op_by_set_partitions(es: &[u32]) -> KappaPoly {
    let mut out = KappaPoly::new();
    for_each_set_partition(es.len(), |blocks| {
        let mut key: Vec<u32> = blocks.iter().map(|b| b.iter().map(|&i| es[i]).sum()).collect();
        key.sort_unstable();
        let w = blocks.iter().fold(BigRational::one(), |acc, b| acc * cyclic_orders(b.len()));
        *out.entry(key).or_insert_with(BigRational::zero) += w;
    });
    out
}

/// `κ̂(K_{e_1,a_1}···K_{e_l,a_l})` over `nvertices` vertices.
pub fn kappa_hat_op(factors: &[KSymbol], nvertices: usize) -> KappaPsiPoly {
    assert!(nvertices > 0, "κ̂ needs at least one vertex");
    let mut factors = factors.to_vec();
    factors.sort_unstable();
    let mut out = KappaPsiPoly::new(nvertices);
    for_each_set_partition(factors.len(), |blocks| {
        let sums: Vec<(u32, u8)> = blocks
            .iter()
            .map(|b| {
                let e = b.iter().map(|&i| factors[i].n).sum();
                let a = b.iter().map(|&i| factors[i].a as u32).sum::<u32>() % 2;
                (e, a as u8)
            })
            .collect();
        let w = blocks.iter().fold(BigRational::one(), |acc, b| acc * cyclic_orders(b.len()));
        // distribute blocks over vertices
        let nb = sums.len();
        let mut choice = vec![0usize; nb];
        loop {
            let mut term = KappaPsiTerm::unit(nvertices);
            for (bi, &v) in choice.iter().enumerate() {
                term.kappa[v].push(sums[bi].0);
                if sums[bi].1 == 1 {
                    term.parity ^= 1 << v;
                }
            }
            for k in &mut term.kappa {
                k.sort_unstable();
            }
            out.add_term(term, w.clone());
            // next assignment
            let mut j = 0;
            while j < nb {
                choice[j] += 1;
                if choice[j] < nvertices {
                    break;
                }
                choice[j] = 0;
                j += 1;
            }
            if j == nb {
                break;
            }
        }
    });
    out
}

/// `κ̂` as the literal sum over all permutations of the factors, with each
/// cycle placed on every vertex. Factorial cost; a reference for
/// [`kappa_hat_op`].
pub fn kappa_hat_by_permutations(factors: &[KSymbol], nvertices: usize) -> KappaPsiPoly {
    fn perms(l: usize) -> Vec<Vec<usize>> {
        if l == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in perms(l - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, l - 1);
                out.push(q);
            }
        }
        out
    }
    let l = factors.len();
    let mut out = KappaPsiPoly::new(nvertices);
    for tau in perms(l) {
        let mut seen = vec![false; l];
        let mut cycles = Vec::new();
        for s in 0..l {
            if seen[s] {
                continue;
            }
            let (mut e, mut a, mut x) = (0u32, 0u32, s);
            while !seen[x] {
                seen[x] = true;
                e += factors[x].n;
                a += factors[x].a as u32;
                x = tau[x];
            }
            cycles.push((e, (a % 2) as u8));
        }
        let nc = cycles.len();
        let mut choice = vec![0usize; nc];
        loop {
            let mut t = KappaPsiTerm::unit(nvertices);
            for (ci, &v) in choice.iter().enumerate() {
                t.kappa[v].push(cycles[ci].0);
                t.parity ^= (cycles[ci].1 as u64) << v;
            }
            for k in &mut t.kappa {
                k.sort_unstable();
            }
            out.add_term(t, BigRational::one());
            let mut j = 0;
            while j < nc {
                choice[j] += 1;
                if choice[j] < nvertices {
                    break;
                }
                choice[j] = 0;
                j += 1;
            }
            if j == nc {
                break;
            }
        }
    }
    out
}

/// Memoised `κ̂` keyed by the sorted factor multiset.
#[derive(Default)]
pub struct KappaHatCache {
    memo: Mutex<HashMap<(Vec<KSymbol>, usize), KappaPsiPoly>>,
}

impl KappaHatCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn eval(&self, factors: &[KSymbol], nvertices: usize) -> KappaPsiPoly {
        let mut key = factors.to_vec();
        key.sort_unstable();
        let key = (key, nvertices);
        if let Some(v) = self.memo.lock().expect("κ̂ memo").get(&key) {
            return v.clone();
        }
        let v = kappa_hat_op(&key.0, nvertices);
        self.memo.lock().expect("κ̂ memo").insert(key, v.clone());
        v
    }

    pub fn len(&self) -> usize {
        self.memo.lock().expect("κ̂ memo").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `κ` extended linearly to a plain bracket polynomial (parities ignored).
pub fn kappa_op_poly(p: &BracketPolynomial) -> KappaPoly {
    let mut out = KappaPoly::new();
    for (m, c) in p.terms() {
        let es: Vec<u32> = m.iter().map(|k| k.n).collect();
        for (key, w) in kappa_op(&es) {
            *out.entry(key).or_insert_with(BigRational::zero) += c * w;
        }
    }
    out.retain(|_, v| !v.is_zero());
    out
}

/// `κ̂` extended linearly.
pub fn kappa_hat_poly(p: &BracketPolynomial, nvertices: usize, cache: &KappaHatCache) -> KappaPsiPoly {
    let mut out = KappaPsiPoly::new(nvertices);
    for (m, c) in p.terms() {
        for (t, w) in cache.eval(m, nvertices).terms {
            out.add_term(t, c * w);
        }
    }
    out
}

/// Replace every `κ_0` by the scalar `value` in a plain κ-polynomial.
pub fn substitute_kappa0(p: &KappaPoly, value: i64) -> KappaPoly {
    let mut out = KappaPoly::new();
    let v = BigRational::from_integer(BigInt::from(value));
    for (key, c) in p {
        let zeros = key.iter().filter(|&&i| i == 0).count();
        let rest: Vec<u32> = key.iter().copied().filter(|&i| i != 0).collect();
        let mut coeff = c.clone();
        for _ in 0..zeros {
            coeff *= &v;
        }
        *out.entry(rest).or_insert_with(BigRational::zero) += coeff;
    }
    out.retain(|_, v| !v.is_zero());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    fn k(n: u32, a: u8) -> KSymbol {
        KSymbol { n, a }
    }

    #[test]
    fn kappa_op_examples() {
        let p = kappa_op(&[2, 3]);
        assert_eq!(p.len(), 2);
        assert_eq!(p[&vec![2, 3]], r(1));
        assert_eq!(p[&vec![5]], r(1));
        let p = kappa_op(&[1, 1, 1]);
        assert_eq!(p[&vec![1, 1, 1]], r(1));
        assert_eq!(p[&vec![1, 2]], r(3));
        assert_eq!(p[&vec![3]], r(2));
        let p = kappa_op(&[]);
        assert_eq!(p.len(), 1);
        assert_eq!(p[&Vec::<u32>::new()], r(1));
    }

    #[test]
    fn kappa_hat_examples() {
        let p = kappa_hat_op(&[k(1, 1)], 2);
        assert_eq!(p.terms.len(), 2);
        let mut t = KappaPsiTerm::unit(2);
        t.kappa[0] = vec![1];
        t.parity = 1;
        assert_eq!(p.terms[&t], r(1));

        let p = kappa_hat_op(&[k(1, 1), k(1, 1)], 1);
        assert_eq!(p.terms.len(), 2);
        for (t, c) in &p.terms {
            assert_eq!(t.parity, 0);
            assert_eq!(*c, r(1));
        }
    }

    #[test]
    fn kappa_hat_single_vertex_even_reduces_to_kappa() {
        let es = [1u32, 2, 2, 4];
        let hat = kappa_hat_op(&es.map(|e| k(e, 0)), 1);
        let plain = kappa_op(&es);
        assert_eq!(hat.terms.len(), plain.len());
        for (t, c) in &hat.terms {
            assert_eq!(plain[&t.kappa[0]], *c);
        }
    }

    #[test]
    fn set_partitions_match_permutation_sums() {
        let pool = [k(0, 1), k(1, 0), k(1, 1), k(2, 0), k(3, 1), k(1, 1)];
        for l in 0..=5 {
            for start in 0..pool.len() {
                let factors: Vec<KSymbol> = (0..l).map(|i| pool[(start + 2 * i) % pool.len()]).collect();
                for nv in 1..=3 {
                    assert_eq!(kappa_hat_op(&factors, nv), kappa_hat_by_permutations(&factors, nv), "{factors:?} nv={nv}");
                }
            }
        }
    }

    #[test]
    fn symmetric_in_factor_order() {
        let a = [k(1, 1), k(2, 0), k(0, 1), k(1, 0)];
        let mut b = a;
        b.reverse();
        assert_eq!(kappa_hat_op(&a, 2), kappa_hat_op(&b, 2));
    }

    #[test]
    fn parity_is_additive() {
        let f = [k(1, 1), k(2, 1), k(0, 1), k(1, 0)];
        let total: u32 = f.iter().map(|x| x.a as u32).sum();
        for t in kappa_hat_op(&f, 3).terms.keys() {
            assert_eq!(t.parity.count_ones() % 2, total % 2);
        }
    }

    #[test]
    fn multiset_recursion_matches_set_partitions() {
        let cases: Vec<Vec<u32>> = vec![
            vec![],
            vec![3],
            vec![0, 0, 0],
            vec![1, 1, 2, 2, 2],
            vec![0, 1, 1, 1, 3, 3, 4],
            vec![2; 8],
        ];
        for es in cases {
            assert_eq!(kappa_op(&es), kappa_op_by_set_partitions(&es), "{es:?}");
        }
    }

    #[test]
    fn kappa0_substitution() {
        let mut p = KappaPoly::new();
        p.insert(vec![0, 0], r(1));
        assert_eq!(substitute_kappa0(&p, 1)[&vec![]], r(1));
        p.insert(vec![0, 2], r(3));
        let s = substitute_kappa0(&p, 2);
        assert_eq!(s[&vec![2]], r(6));
        assert_eq!(s[&vec![]], r(4));
    }
}
