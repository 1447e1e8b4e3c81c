//! Ranks of sparse matrices over word-size prime fields and over `Q`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::field::{bigint_mod, inv_mod, is_prime, mul_mod, primitive_integer_row, sub_mod, DEFAULT_PRIMES, ESCALATION_PRIME};

/// Sparse row: strictly increasing column indices, nonzero values.
pub type SparseRow<T> = Vec<(usize, T)>;

/// Relation vectors as sparse rows over the basis columns, with a free-form
/// description of where each row came from.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RelationMatrix {
    pub ncols: usize,
    pub rows: Vec<SparseRow<BigRational>>,
    pub provenance: Vec<String>,
}

impl RelationMatrix {
    pub fn new(ncols: usize) -> Self {
        RelationMatrix { ncols, rows: Vec::new(), provenance: Vec::new() }
    }

    pub fn push(&mut self, mut row: SparseRow<BigRational>, origin: impl Into<String>) -> Result<()> {
        row.retain(|(_, v)| !v.is_zero());
        row.sort_by_key(|e| e.0);
        if row.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::invalid("repeated column in sparse row"));
        }
        if row.last().is_some_and(|e| e.0 >= self.ncols) {
            return Err(Error::invalid("column index out of range"));
        }
        self.rows.push(row);
        self.provenance.push(origin.into());
        Ok(())
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Each row scaled to a primitive integer vector.
    pub fn integer_rows(&self) -> Vec<SparseRow<BigInt>> {
        self.rows
            .iter()
            .map(|row| {
                let vals: Vec<BigRational> = row.iter().map(|e| e.1.clone()).collect();
                row.iter().map(|e| e.0).zip(primitive_integer_row(&vals)).collect()
            })
            .collect()
    }

    /// Rows reduced mod `p`. Integer scaling happens first, so no
    /// denominator can vanish; a row that becomes zero is kept empty.
    pub fn reduce_mod(&self, p: u64) -> Result<Vec<SparseRow<u64>>> {
        check_prime(p)?;
        Ok(self
            .integer_rows()
            .into_iter()
            .map(|row| row.into_iter().map(|(c, v)| (c, bigint_mod(&v, p))).filter(|e| e.1 != 0).collect())
            .collect())
    }
}

pub(crate) fn check_prime(p: u64) -> Result<()> {
    if !(3..1 << 63).contains(&p) || !is_prime(p) {
        return Err(Error::invalid(format!("{p} is not an odd prime below 2^63")));
    }
    Ok(())
}

/// Incremental reduced row echelon form over `Z/p`.
///
/// Every stored row has a leading 1 in its pivot column and zeros in all
/// other pivot columns, so reducing a new row needs one pass over its
/// original entries.
#[derive(Clone, Debug)]
pub struct Echelon {
    p: u64,
    ncols: usize,
    pivot_row: Vec<Option<usize>>,
    rows: Vec<SparseRow<u64>>,
    /// col -> rows that may hold a nonzero there (may be stale)
    occurs: Vec<Vec<usize>>,
    scratch: Vec<u64>,
    touched: Vec<usize>,
}

impl Echelon {
    pub fn new(ncols: usize, p: u64) -> Result<Self> {
        check_prime(p)?;
        Ok(Echelon {
            p,
            ncols,
            pivot_row: vec![None; ncols],
            rows: Vec::new(),
            occurs: vec![Vec::new(); ncols],
            scratch: vec![0; ncols],
            touched: Vec::new(),
        })
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn is_full(&self) -> bool {
        self.rows.len() == self.ncols
    }

    fn touch(&mut self, c: usize) {
        if self.scratch[c] == 0 {
            self.touched.push(c);
        }
    }

    /// Reduce `row` against the stored rows; returns the remainder.
    pub fn reduce(&mut self, row: &[(usize, u64)]) -> SparseRow<u64> {
        let p = self.p;
        for &(c, v) in row {
            self.touch(c);
            self.scratch[c] = v % p;
        }
        for &(c, v) in row {
            if let Some(k) = self.pivot_row[c] {
                let v = v % p;
                if v == 0 {
                    continue;
                }
                for i in 0..self.rows[k].len() {
                    let (cc, w) = self.rows[k][i];
                    self.touch(cc);
                    self.scratch[cc] = sub_mod(self.scratch[cc], mul_mod(v, w, p), p);
                }
            }
        }
        let mut out: SparseRow<u64> = Vec::new();
        for &c in &self.touched {
            if self.scratch[c] != 0 {
                out.push((c, self.scratch[c]));
                self.scratch[c] = 0;
            }
        }
        self.touched.clear();
        out.sort_unstable_by_key(|e| e.0);
        out
    }

    /// Insert a row; returns whether the rank grew.
    pub fn insert(&mut self, row: &[(usize, u64)]) -> bool {
        if self.is_full() {
            return false;
        }
        let mut r = self.reduce(row);
        let Some(&(pc, lead)) = r.first() else {
            return false;
        };
        let p = self.p;
        let inv = inv_mod(lead, p).expect("nonzero mod prime");
        for e in r.iter_mut() {
            e.1 = mul_mod(e.1, inv, p);
        }
        // clear the new pivot column from existing rows
        let holders = std::mem::take(&mut self.occurs[pc]);
        for k in holders {
            let Ok(pos) = self.rows[k].binary_search_by_key(&pc, |e| e.0) else {
                continue;
            };
            let f = self.rows[k][pos].1;
            let merged = axpy(&self.rows[k], &r, p - f, p);
            for &(c, _) in &merged {
                if self.rows[k].binary_search_by_key(&c, |e| e.0).is_err() {
                    self.occurs[c].push(k);
                }
            }
            self.rows[k] = merged;
        }
        let k = self.rows.len();
        for &(c, _) in &r[1..] {
            self.occurs[c].push(k);
        }
        self.pivot_row[pc] = Some(k);
        self.rows.push(r);
        true
    }
}

/// `a + f·b` over `Z/p` for sorted sparse rows.
fn axpy(a: &[(usize, u64)], b: &[(usize, u64)], f: u64, p: u64) -> SparseRow<u64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let ca = a.get(i).map_or(usize::MAX, |e| e.0);
        let cb = b.get(j).map_or(usize::MAX, |e| e.0);
        let (c, v) = if ca < cb {
            i += 1;
            (ca, a[i - 1].1)
        } else if cb < ca {
            j += 1;
            (cb, mul_mod(f, b[j - 1].1, p))
        } else {
            i += 1;
            j += 1;
            (ca, (a[i - 1].1 + mul_mod(f, b[j - 1].1, p)) % p)
        };
        if v != 0 {
            out.push((c, v));
        }
    }
    out
}

/// Rank of sparse rows over `Z/p`. Rows are inserted shortest first (ties
/// by original index), which keeps fill low and the result deterministic.
pub fn rank_mod_p_rows(rows: &[SparseRow<u64>], ncols: usize, p: u64) -> Result<usize> {
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by_key(|&i| (rows[i].len(), i));
    let mut ech = Echelon::new(ncols, p)?;
    for i in order {
        ech.insert(&rows[i]);
        if ech.is_full() {
            break;
        }
    }
    Ok(ech.rank())
}

pub fn rank_mod_p(m: &RelationMatrix, p: u64) -> Result<usize> {
    rank_mod_p_rows(&m.reduce_mod(p)?, m.ncols, p)
}

/// Largest matrix (rows × columns) accepted by [`rank_exact`].
pub const EXACT_SIZE_CAP: usize = 250_000;

/// Rank over `Q` by fraction-free dense elimination.
pub fn rank_exact(m: &RelationMatrix) -> Result<usize> {
    if m.nrows() * m.ncols > EXACT_SIZE_CAP {
        return Err(Error::invalid(format!(
            "{}×{} exceeds the exact elimination cap of {EXACT_SIZE_CAP} entries",
            m.nrows(),
            m.ncols
        )));
    }
    let mut a: Vec<Vec<BigInt>> = m
        .integer_rows()
        .into_iter()
        .map(|row| {
            let mut dense = vec![BigInt::zero(); m.ncols];
            for (c, v) in row {
                dense[c] = v;
            }
            dense
        })
        .collect();
    let mut rank = 0;
    let mut prev = BigInt::one();
    for col in 0..m.ncols {
        let Some(piv) = (rank..a.len()).find(|&i| !a[i][col].is_zero()) else {
            continue;
        };
        a.swap(rank, piv);
        for i in rank + 1..a.len() {
            if a[i][col].is_zero() {
                // Bareiss step still rescales the row
                for j in col + 1..m.ncols {
                    a[i][j] = &a[i][j] * &a[rank][col] / &prev;
                }
                continue;
            }
            for j in col + 1..m.ncols {
                a[i][j] = (&a[i][j] * &a[rank][col] - &a[i][col] * &a[rank][j]) / &prev;
            }
            a[i][col] = BigInt::zero();
        }
        prev = a[rank][col].clone();
        rank += 1;
    }
    Ok(rank)
}

/// Result of a rank computation at several primes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankReport {
    pub basis: usize,
    pub rank: usize,
    pub quotient: usize,
    /// every prime used, with the rank found there
    pub primes: Vec<(u64, usize)>,
    pub escalated: bool,
}

/// Combine the ranks from two primes, asking for a third when they differ.
/// The true rank is the maximum over primes; a disagreement that the third
/// prime does not settle is a consistency failure.
pub fn agree_ranks(
    basis: usize,
    primes: &[u64],
    mut rank_at: impl FnMut(u64) -> Result<usize>,
) -> Result<RankReport> {
    let primes: Vec<u64> = if primes.is_empty() { DEFAULT_PRIMES.to_vec() } else { primes.to_vec() };
    let mut found = Vec::new();
    for &p in &primes {
        found.push((p, rank_at(p)?));
    }
    let mut escalated = false;
    if found.iter().any(|x| x.1 != found[0].1) {
        escalated = true;
        let third = [ESCALATION_PRIME, DEFAULT_PRIMES[0], DEFAULT_PRIMES[1]]
            .into_iter()
            .find(|p| !primes.contains(p))
            .ok_or_else(|| Error::Consistency("no unused prime left for escalation".into()))?;
        found.push((third, rank_at(third)?));
        let max = found.iter().map(|x| x.1).max().expect("nonempty");
        if found.iter().filter(|x| x.1 == max).count() < 2 {
            return Err(Error::Consistency(format!("ranks disagree across primes: {found:?}")));
        }
    }
    let rank = found.iter().map(|x| x.1).max().expect("nonempty");
    if rank > basis {
        return Err(Error::Consistency(format!("rank {rank} exceeds basis size {basis}")));
    }
    Ok(RankReport { basis, rank, quotient: basis - rank, primes: found, escalated })
}
