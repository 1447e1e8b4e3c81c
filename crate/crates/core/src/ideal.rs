//! Spanning sets of the relation ideal in a fixed degree.
//!
//! A generator is a host basis monomial `(Γ, θ)` of degree `r_0 < r`
//! together with a vertex `v` of `Γ` on which `θ` is trivial and a relation
//! of degree `r − r_0` on the moduli space of `v`, whose markings are the
//! half-edges at `v`. The generator is `ξ_Γ*(θ · R)` with `R` substituted at
//! `v`. The smooth host with `r_0 = 0` gives the relations themselves.

use std::collections::{HashMap, HashSet};
use std::hash::Hash;
use std::sync::Arc;

use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dualgraph::DualGraph;
use crate::error::{Error, Result};
use crate::exactla::{agree_ranks, check_prime, rank_mod_p_rows, RankReport, RelationMatrix, SparseRow};
use crate::field::{Field, Fp, DEFAULT_PRIMES};
use crate::pixton::{enumerate_params, relation_in, RelationParams};
use crate::strata::{
    compose, enumerate_basis_with, forgetful_pullback, forgetful_pushforward, multiply, Basis, Decoration, StrataMonomial, TautVector,
    DEFAULT_VERTEX_BOUND,
};

/// One generator of the span.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpanJob {
    /// host monomial, canonical
    pub host_graph: DualGraph,
    pub host_deco: Decoration,
    pub vertex: usize,
    /// relation on the vertex moduli space
    pub params: RelationParams,
}

impl SpanJob {
    pub fn host(&self) -> StrataMonomial {
        StrataMonomial::new(self.host_graph.clone(), self.host_deco.clone())
    }

    pub fn is_interior(&self) -> bool {
        self.host_graph.is_smooth()
    }

    pub fn describe(&self) -> String {
        format!(
            "host={:?}/{:?} kappa={:?} psi={:?} vertex={} {}",
            self.host_graph.genera(),
            self.host_graph.edges(),
            self.host_deco.kappa,
            self.host_deco.psi,
            self.vertex,
            self.params
        )
    }
}

fn check_range(g: u32, n: u32, r: u32) -> Result<()> {
    let dim = 3 * g as i64 - 3 + n as i64;
    if 2 * g as i64 - 2 + n as i64 <= 0 {
        return Err(Error::invalid(format!("(g, n) = ({g}, {n}) is unstable")));
    }
    if r as i64 > dim {
        return Err(Error::invalid(format!("degree {r} exceeds dimension {dim}")));
    }
    Ok(())
}

/// Every generator for degree `r`, sorted.
pub fn span_jobs(g: u32, n: u32, r: u32, bounded: bool) -> Result<Vec<SpanJob>> {
    check_range(g, n, r)?;
    span_jobs_any_degree(g, n, r, bounded)
}

/// As [`span_jobs`], for any degree of the formal algebra.
fn span_jobs_any_degree(g: u32, n: u32, r: u32, bounded: bool) -> Result<Vec<SpanJob>> {
    let mut jobs = Vec::new();
    for r0 in 0..r {
        let basis = enumerate_basis_with(g, n, r0, bounded)?;
        for host in basis.monomials() {
            let gr = &host.graph;
            for v in 0..gr.num_vertices() {
                if !host.deco.is_bare_at(gr, v) {
                    continue;
                }
                let (gv, nv) = (gr.genera()[v], gr.valence(v) as u32);
                let rv = r - r0;
                // a relation above the vertex dimension vanishes once truncated
                if bounded && rv as i64 > 3 * gv as i64 - 3 + nv as i64 {
                    continue;
                }
                for params in enumerate_params(gv, nv, rv)? {
                    jobs.push(SpanJob { host_graph: gr.clone(), host_deco: host.deco.clone(), vertex: v, params });
                }
            }
        }
    }
    jobs.sort();
    Ok(jobs)
}

/// The smooth monomial that `host` induces on vertex `u`.
fn vertex_part(host: &StrataMonomial, u: usize) -> StrataMonomial {
    let gr = &host.graph;
    let psi: Vec<u32> = gr.half_edges_at(u).iter().map(|&h| host.deco.psi[gr.slot(h)]).collect();
    StrataMonomial::smooth(gr.genera()[u], gr.valence(u) as u32, &host.deco.kappa[u], &psi)
}

/// `ξ_Γ*(θ · R)` for one job, given `R` on the vertex moduli space.
pub fn evaluate_job<F: Field>(job: &SpanJob, rel: &TautVector<F>, g: u32, n: u32, r: u32) -> TautVector<F> {
    let host = job.host();
    let others: Vec<StrataMonomial> =
        (0..host.graph.num_vertices()).map(|u| vertex_part(&host, u)).collect();
    let mut out = TautVector::zero(g, n, r);
    for (m, c) in rel.terms() {
        let parts: Vec<&StrataMonomial> =
            (0..others.len()).map(|u| if u == job.vertex { m } else { &others[u] }).collect();
        out.add_term(compose(&host.graph, &parts).canonicalize(), c.clone());
    }
    out
}

type RelationCache<F> = HashMap<RelationParams, Arc<TautVector<F>>>;

fn vertex_relations<F: Field>(jobs: &[SpanJob], ctx: &F::Ctx, bounded: bool) -> Result<RelationCache<F>> {
    let mut needed: Vec<RelationParams> = jobs.iter().map(|j| j.params.clone()).collect();
    needed.sort();
    needed.dedup();
    let computed: Vec<Result<(RelationParams, Arc<TautVector<F>>)>> = needed
        .into_par_iter()
        .map(|p| Ok((p.clone(), Arc::new(relation_in::<F>(&p, ctx, bounded)?))))
        .collect();
    computed.into_iter().collect()
}

/// A sparse row scaled so that its first entry is 1.
fn normalized<F: Field>(row: &SparseRow<F>) -> SparseRow<F> {
    let Some(lead) = row.first().and_then(|e| e.1.inv()) else {
        return Vec::new();
    };
    row.iter().map(|(c, v)| (*c, v.clone() * lead.clone())).collect()
}

fn to_row<F: Field>(v: &TautVector<F>, basis: &Basis) -> Result<SparseRow<F>> {
    let mut row = Vec::with_capacity(v.len());
    for (m, c) in v.terms() {
        let idx = basis
            .index_of(m)
            .ok_or_else(|| Error::Consistency(format!("monomial {m:?} missing from the degree-{} basis", basis.degree)))?;
        row.push((idx, c.clone()));
    }
    row.sort_by_key(|e| e.0);
    Ok(row)
}

/// Span generators with their vectors, over any field. Zero vectors are
/// dropped, and of several proportional vectors only the first job's is
/// kept.
pub fn generate_span_in<F>(g: u32, n: u32, r: u32, ctx: &F::Ctx, bounded: bool) -> Result<Vec<(SpanJob, TautVector<F>)>>
where
    F: Field + Hash + Eq,
{
    check_range(g, n, r)?;
    span_any_degree(g, n, r, ctx, bounded)
}

fn span_any_degree<F>(g: u32, n: u32, r: u32, ctx: &F::Ctx, bounded: bool) -> Result<Vec<(SpanJob, TautVector<F>)>>
where
    F: Field + Hash + Eq,
{
    let jobs = span_jobs_any_degree(g, n, r, bounded)?;
    let rels = vertex_relations::<F>(&jobs, ctx, bounded)?;
    let basis = enumerate_basis_with(g, n, r, bounded)?;
    let evaluated: Vec<Result<Evaluated<F>>> = jobs
        .into_par_iter()
        .map(|job| {
            let v = evaluate_job(&job, &rels[&job.params], g, n, r);
            let key = normalized(&to_row(&v, &basis)?);
            Ok((job, v, key))
        })
        .collect();
    let mut seen: HashSet<SparseRow<F>> = HashSet::new();
    let mut out = Vec::new();
    for item in evaluated {
        let (job, v, key) = item?;
        if key.is_empty() || !seen.insert(key) {
            continue;
        }
        out.push((job, v));
    }
    Ok(out)
}

/// Exact span vectors in degree `r` with the default vertex bound.
pub fn generate_span(g: u32, n: u32, r: u32) -> Result<Vec<TautVector>> {
    Ok(generate_span_in::<BigRational>(g, n, r, &(), DEFAULT_VERTEX_BOUND)?.into_iter().map(|x| x.1).collect())
}

/// Exact relation matrix over the degree-`r` basis.
pub fn span_matrix(g: u32, n: u32, r: u32, bounded: bool) -> Result<(Arc<Basis>, RelationMatrix, Vec<SpanJob>)> {
    let basis = enumerate_basis_with(g, n, r, bounded)?;
    let span = generate_span_in::<BigRational>(g, n, r, &(), bounded)?;
    let mut m = RelationMatrix::new(basis.len());
    let mut jobs = Vec::new();
    for (job, v) in span {
        m.push(to_row(&v, &basis)?, job.describe())?;
        jobs.push(job);
    }
    Ok((basis, m, jobs))
}

/// A job with its relation vector and normalized row.
type Evaluated<F> = (SpanJob, TautVector<F>, SparseRow<F>);

/// Span rows reduced mod `p`, computed directly in `Z/p`.
pub fn span_rows_mod_p(g: u32, n: u32, r: u32, p: u64, bounded: bool) -> Result<(Arc<Basis>, Vec<SparseRow<u64>>)> {
    check_prime(p)?;
    let basis = enumerate_basis_with(g, n, r, bounded)?;
    let span = generate_span_in::<Fp>(g, n, r, &p, bounded)?;
    let rows = span
        .iter()
        .map(|(_, v)| Ok(to_row(v, &basis)?.into_iter().map(|(c, x)| (c, x.value())).collect()))
        .collect::<Result<Vec<_>>>()?;
    Ok((basis, rows))
}

/// Basis size, relation rank and quotient dimension in degree `r`, with the
/// rank confirmed at two primes.
pub fn quotient_dimension(g: u32, n: u32, r: u32) -> Result<RankReport> {
    quotient_dimension_with(g, n, r, &DEFAULT_PRIMES, DEFAULT_VERTEX_BOUND)
}

pub fn quotient_dimension_with(g: u32, n: u32, r: u32, primes: &[u64], bounded: bool) -> Result<RankReport> {
    check_range(g, n, r)?;
    primes.iter().try_for_each(|&p| check_prime(p))?;
    let basis = enumerate_basis_with(g, n, r, bounded)?;
    agree_ranks(basis.len(), primes, |p| {
        let (basis, rows) = span_rows_mod_p(g, n, r, p, bounded)?;
        rank_mod_p_rows(&rows, basis.len(), p)
    })
}

fn rank_of(vectors: &[TautVector], basis: &Basis, p: u64) -> Result<usize> {
    let mut m = RelationMatrix::new(basis.len());
    for v in vectors {
        m.push(to_row(v, basis)?, "")?;
    }
    rank_mod_p_rows(&m.reduce_mod(p)?, m.ncols, p)
}

/// Generators that come from lower strata or lower degree: boundary jobs,
/// forgetful pullbacks of the span one marking down, and products of
/// lower-degree span vectors with positive-degree basis monomials. With
/// `forgetful_pushforwards`, images of the degree `r + 1` span one marking
/// up are added as well.
///
/// Built in the untruncated algebra, because dropping over-dimension
/// decorations does not commute with forgetful pullback.
pub fn old_span(g: u32, n: u32, r: u32, forgetful_pushforwards: bool) -> Result<Vec<TautVector>> {
    let span = |g, n, r| -> Result<Vec<TautVector>> {
        Ok(generate_span_in::<BigRational>(g, n, r, &(), false)?.into_iter().map(|x| x.1).collect())
    };
    let mut out: Vec<TautVector> = generate_span_in::<BigRational>(g, n, r, &(), false)?
        .into_iter()
        .filter(|(job, _)| !job.is_interior())
        .map(|x| x.1)
        .collect();
    if n > 0 && 2 * g as i64 - 3 + n as i64 > 0 && (r as i64) <= 3 * g as i64 - 4 + n as i64 {
        for v in span(g, n - 1, r)? {
            out.push(forgetful_pullback(&v)?);
        }
    }
    for k in 1..r {
        let mons = enumerate_basis_with(g, n, k, false)?;
        for rho in span(g, n, r - k)? {
            for m in mons.monomials() {
                out.push(multiply(&rho, &TautVector::monomial(m.clone()))?);
            }
        }
    }
    if forgetful_pushforwards {
        for (_, v) in span_any_degree::<BigRational>(g, n + 1, r + 1, &(), false)? {
            out.push(forgetful_pushforward(&v)?);
        }
    }
    out.retain(|v| !v.is_zero());
    Ok(out)
}

/// Interior generators with every `a_i = 1` and every part of `σ`
/// congruent to 1 mod 3.
pub fn special_interior_generators(g: u32, n: u32, r: u32) -> Result<Vec<TautVector>> {
    Ok(generate_span_in::<BigRational>(g, n, r, &(), false)?
        .into_iter()
        .filter(|(job, _)| {
            job.is_interior() && job.params.a.iter().all(|&x| x == 1) && job.params.sigma.iter().all(|&x| x % 3 == 1)
        })
        .map(|x| x.1)
        .collect())
}

/// Ranks of the old span, of the old span plus the special generators, and
/// of the full span, all in the untruncated algebra.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OldNewReport {
    pub old: usize,
    pub old_plus_special: usize,
    pub full: usize,
}

pub fn old_new_report(g: u32, n: u32, r: u32, forgetful_pushforwards: bool) -> Result<OldNewReport> {
    let basis = enumerate_basis_with(g, n, r, false)?;
    let p = DEFAULT_PRIMES[0];
    let old = old_span(g, n, r, forgetful_pushforwards)?;
    let mut with_special = old.clone();
    with_special.extend(special_interior_generators(g, n, r)?);
    let full: Vec<TautVector> =
        generate_span_in::<BigRational>(g, n, r, &(), false)?.into_iter().map(|x| x.1).collect();
    Ok(OldNewReport {
        old: rank_of(&old, &basis, p)?,
        old_plus_special: rank_of(&with_special, &basis, p)?,
        full: rank_of(&full, &basis, p)?,
    })
}

/// Outcome of [`ideal_closure_check`].
#[derive(Clone, Debug)]
pub struct ClosureReport {
    pub samples: usize,
    /// (span generator, degree-1 monomial) pairs whose product left the span
    pub failures: Vec<(SpanJob, StrataMonomial)>,
}

impl ClosureReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks on random pairs `(ρ, m)` that `ρ · m` lies in the degree `r + 1`
/// span, by comparing ranks mod a prime. Degree `r + 1` may exceed the
/// dimension: the check then runs in the formal algebra.
pub fn ideal_closure_check(g: u32, n: u32, r: u32, samples: usize, seed: u64, bounded: bool) -> Result<ClosureReport> {
    check_range(g, n, r)?;
    let span = generate_span_in::<BigRational>(g, n, r, &(), bounded)?;
    let upper_basis = enumerate_basis_with(g, n, r + 1, bounded)?;
    let upper: Vec<TautVector> =
        span_any_degree::<BigRational>(g, n, r + 1, &(), bounded)?.into_iter().map(|x| x.1).collect();
    let deg1 = enumerate_basis_with(g, n, 1, bounded)?;
    let p = DEFAULT_PRIMES[0];
    let base_rank = rank_of(&upper, &upper_basis, p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs: Vec<(usize, usize)> =
        (0..span.len()).flat_map(|i| (0..deg1.len()).map(move |j| (i, j))).collect();
    pairs.shuffle(&mut rng);
    pairs.truncate(samples);
    pairs.sort_unstable();
    let mut failures = Vec::new();
    for &(i, j) in &pairs {
        let prod = multiply(&span[i].1, &TautVector::monomial(deg1.monomials()[j].clone()))?;
        let prod = if bounded { prod.truncated() } else { prod };
        let mut all = upper.clone();
        all.push(prod);
        if rank_of(&all, &upper_basis, p)? != base_rank {
            failures.push((span[i].0.clone(), deg1.monomials()[j].clone()));
        }
    }
    Ok(ClosureReport { samples: pairs.len(), failures })
}

/// Whether some span vector has a nonzero coefficient on a smooth-graph
/// monomial.
pub fn interior_presence(g: u32, n: u32, r: u32) -> Result<bool> {
    let span = generate_span_in::<Fp>(g, n, r, &DEFAULT_PRIMES[0], DEFAULT_VERTEX_BOUND)?;
    Ok(span.iter().any(|(_, v)| v.terms().keys().any(|m| m.graph.is_smooth())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactla::rank_exact;
    use crate::pixton::relation;

    #[test]
    fn one_one_one_span_is_the_interior_relations() {
        for bounded in [false, true] {
            let span = generate_span_in::<BigRational>(1, 1, 1, &(), bounded).unwrap();
            assert!(span.iter().all(|(j, _)| j.is_interior()));
            let params: Vec<_> = span.iter().map(|(j, _)| j.params.clone()).collect();
            assert_eq!(params, enumerate_params(1, 1, 1).unwrap());
            for (job, v) in &span {
                assert_eq!(*v, relation(&job.params).unwrap());
            }
        }
    }

    #[test]
    fn one_one_one_quotient() {
        let rep = quotient_dimension(1, 1, 1).unwrap();
        assert_eq!((rep.basis, rep.rank, rep.quotient), (3, 2, 1));
        let (_, m, _) = span_matrix(1, 1, 1, DEFAULT_VERTEX_BOUND).unwrap();
        assert_eq!(rank_exact(&m).unwrap(), 2);
    }

    #[test]
    fn span_vectors_are_homogeneous() {
        for v in generate_span(0, 5, 2).unwrap() {
            assert!(v.terms().keys().all(|m| m.degree() == 2));
        }
    }

    #[test]
    fn zero_four_quotient_matches_boundary_presentation() {
        // degree 1 of the (0,4) space: one-dimensional (three boundary points
        // are equivalent, ψ_i and κ_1 equal to a point)
        for bounded in [false, true] {
            let rep = quotient_dimension_with(0, 4, 1, &DEFAULT_PRIMES, bounded).unwrap();
            assert_eq!(rep.quotient, 1, "bounded = {bounded}");
        }
    }

    #[test]
    fn closure_under_degree_one_products() {
        for &(g, n) in &[(1u32, 1u32), (0, 4), (2, 0)] {
            for bounded in [true, false] {
                let rep = ideal_closure_check(g, n, 1, 1000, 1, bounded).unwrap();
                assert!(rep.samples > 0);
                assert!(rep.passed(), "({g},{n}) bounded={bounded}: {:?}", rep.failures);
            }
        }
    }

    #[test]
    fn new_relations_come_from_special_generators() {
        for &(g, n, r) in &[(1u32, 2u32, 2u32), (2, 0, 2), (1, 3, 2), (2, 1, 2)] {
            let rep = old_new_report(g, n, r, false).unwrap();
            assert!(rep.old <= rep.old_plus_special);
            assert_eq!(rep.old_plus_special, rep.full, "({g},{n},{r}): {rep:?}");
        }
        // special generators are genuinely needed in these cases
        assert!(old_new_report(2, 0, 2, false).unwrap().old < 6);
        assert!(old_new_report(2, 1, 2, false).unwrap().old < 12);
    }

    #[test]
    fn old_span_needs_forgetful_pushforwards_in_low_degree() {
        // the a_1 = 0 relation on (1,1) cannot be a pullback: (1,0) is unstable
        let lit = old_new_report(1, 1, 1, false).unwrap();
        assert_eq!(lit, OldNewReport { old: 0, old_plus_special: 1, full: 2 });
        assert_eq!(old_new_report(1, 2, 1, false).unwrap(), OldNewReport { old: 2, old_plus_special: 2, full: 3 });
        for &(g, n) in &[(1u32, 1u32), (1, 2)] {
            let rep = old_new_report(g, n, 1, true).unwrap();
            assert_eq!(rep.old, rep.full);
        }
    }

    #[test]
    fn interior_classes_appear_in_zero_four() {
        assert!(interior_presence(0, 4, 1).unwrap());
    }

    #[test]
    fn span_is_stable_under_marking_permutations() {
        let (g, n, r) = (1u32, 3u32, 2u32);
        let basis = enumerate_basis_with(g, n, r, true).unwrap();
        let span = generate_span(g, n, r).unwrap();
        let base = rank_of(&span, &basis, DEFAULT_PRIMES[0]).unwrap();
        for perm in crate::dualgraph::permutations(n as usize) {
            let mut all = span.clone();
            for v in &span {
                let mut w = TautVector::zero(g, n, r);
                for (m, c) in v.terms() {
                    w.add_term(m.permute_markings(&perm).canonicalize(), c.clone());
                }
                all.push(w);
            }
            assert_eq!(rank_of(&all, &basis, DEFAULT_PRIMES[0]).unwrap(), base, "{perm:?}");
        }
    }


    #[test]
    fn proportional_generators_are_merged() {
        let jobs = span_jobs(1, 3, 2, true).unwrap();
        let span = generate_span_in::<BigRational>(1, 3, 2, &(), true).unwrap();
        assert!(span.len() < jobs.len());
        let basis = enumerate_basis_with(1, 3, 2, true).unwrap();
        let (_, rows) = span_rows_mod_p(1, 3, 2, DEFAULT_PRIMES[0], true).unwrap();
        let vs: Vec<TautVector> = span.into_iter().map(|x| x.1).collect();
        assert_eq!(rank_of(&vs, &basis, DEFAULT_PRIMES[0]).unwrap(), rank_mod_p_rows(&rows, basis.len(), DEFAULT_PRIMES[0]).unwrap());
    }

    #[test]
    fn out_of_range_degree() {
        assert!(span_jobs(1, 1, 2, true).is_err());
        assert!(span_jobs(0, 2, 0, true).is_err());
    }
}
