//! Truncated power series over the parity ring `Q[ζ]/(ζ² − 1)`.
//!
//! Holds the two hypergeometric-type series
//!
//! ```text
//! A(T) = Σ (6n)! / ((3n)! (2n)!) Tⁿ
//! B(T) = Σ (6n+1)/(6n−1) · (6n)! / ((3n)! (2n)!) Tⁿ
//! ```
//!
//! their parity twists `Ĉ_{3i} = T^i A(ζT)`, `Ĉ_{3i+1} = ζ T^i B(ζT)`, the
//! bracket `{F}` turning a series into a polynomial in formal symbols
//! `K_{n,a}`, and the node factor `Δ`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::RwLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::field::factorial;

fn q(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// `even + odd·ζ` with `ζ² = 1`.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct ParityScalar {
    pub even: BigRational,
    pub odd: BigRational,
}

impl fmt::Debug for ParityScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} + {}ζ)", self.even, self.odd)
    }
}

impl ParityScalar {
    pub fn new(even: BigRational, odd: BigRational) -> Self {
        ParityScalar { even, odd }
    }

    pub fn even(x: BigRational) -> Self {
        ParityScalar { even: x, odd: BigRational::zero() }
    }

    pub fn odd(x: BigRational) -> Self {
        ParityScalar { even: BigRational::zero(), odd: x }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::even(BigRational::one())
    }

    pub fn zeta() -> Self {
        Self::odd(BigRational::one())
    }

    pub fn is_zero(&self) -> bool {
        self.even.is_zero() && self.odd.is_zero()
    }

    /// Coefficient of `ζ^a`, `a ∈ {0, 1}`.
    pub fn component(&self, a: u8) -> &BigRational {
        if a.is_multiple_of(2) {
            &self.even
        } else {
            &self.odd
        }
    }

    /// Value at `ζ = ±1`.
    pub fn eval(&self, zeta_is_minus_one: bool) -> BigRational {
        if zeta_is_minus_one {
            &self.even - &self.odd
        } else {
            &self.even + &self.odd
        }
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        ParityScalar { even: &self.even * c, odd: &self.odd * c }
    }
}

impl Add for &ParityScalar {
    type Output = ParityScalar;
    fn add(self, o: &ParityScalar) -> ParityScalar {
        ParityScalar { even: &self.even + &o.even, odd: &self.odd + &o.odd }
    }
}

impl Sub for &ParityScalar {
    type Output = ParityScalar;
    fn sub(self, o: &ParityScalar) -> ParityScalar {
        ParityScalar { even: &self.even - &o.even, odd: &self.odd - &o.odd }
    }
}

impl Neg for &ParityScalar {
    type Output = ParityScalar;
    fn neg(self) -> ParityScalar {
        ParityScalar { even: -&self.even, odd: -&self.odd }
    }
}

impl Mul for &ParityScalar {
    type Output = ParityScalar;
    fn mul(self, o: &ParityScalar) -> ParityScalar {
        ParityScalar {
            even: &self.even * &o.even + &self.odd * &o.odd,
            odd: &self.even * &o.odd + &self.odd * &o.even,
        }
    }
}

/// `Σ_{k ≤ N} c_k T^k` with parity-ring coefficients.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ParitySeries {
    coeffs: Vec<ParityScalar>,
}

impl ParitySeries {
    pub fn zero(order: usize) -> Self {
        ParitySeries { coeffs: vec![ParityScalar::zero(); order + 1] }
    }

    pub fn one(order: usize) -> Self {
        let mut s = Self::zero(order);
        s.coeffs[0] = ParityScalar::one();
        s
    }

    pub fn from_coeffs(coeffs: Vec<ParityScalar>) -> Self {
        assert!(!coeffs.is_empty(), "a series needs at least the constant term");
        ParitySeries { coeffs }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, k: usize) -> ParityScalar {
        self.coeffs.get(k).cloned().unwrap_or_default()
    }

    pub fn coeffs(&self) -> &[ParityScalar] {
        &self.coeffs
    }

    pub fn truncate(&self, order: usize) -> Self {
        let mut c = self.coeffs.clone();
        c.resize(order + 1, ParityScalar::zero());
        ParitySeries { coeffs: c }
    }

    /// Specialisation `ζ = 1`, a plain rational series.
    pub fn at_zeta_one(&self) -> Vec<BigRational> {
        self.coeffs.iter().map(|c| c.eval(false)).collect()
    }

    /// `F(T) ↦ F(-T)`.
    pub fn negate_variable(&self) -> Self {
        ParitySeries {
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| if k % 2 == 1 { -c } else { c.clone() })
                .collect(),
        }
    }
}

impl Add for &ParitySeries {
    type Output = ParitySeries;
    fn add(self, o: &ParitySeries) -> ParitySeries {
        let n = self.order().min(o.order());
        ParitySeries { coeffs: (0..=n).map(|k| &self.coeffs[k] + &o.coeffs[k]).collect() }
    }
}

impl Sub for &ParitySeries {
    type Output = ParitySeries;
    fn sub(self, o: &ParitySeries) -> ParitySeries {
        let n = self.order().min(o.order());
        ParitySeries { coeffs: (0..=n).map(|k| &self.coeffs[k] - &o.coeffs[k]).collect() }
    }
}

impl Mul for &ParitySeries {
    type Output = ParitySeries;
    fn mul(self, o: &ParitySeries) -> ParitySeries {
        let n = self.order().min(o.order());
        let mut out = vec![ParityScalar::zero(); n + 1];
        for i in 0..=n {
            if self.coeffs[i].is_zero() {
                continue;
            }
            for j in 0..=(n - i) {
                out[i + j] = &out[i + j] + &(&self.coeffs[i] * &o.coeffs[j]);
            }
        }
        ParitySeries { coeffs: out }
    }
}

static A_TABLE: RwLock<Vec<BigInt>> = RwLock::new(Vec::new());

/// `(6n)! / ((3n)! (2n)!)`, memoised.
pub fn a_coeff(n: usize) -> BigInt {
    if let Some(v) = A_TABLE.read().expect("A table lock").get(n) {
        return v.clone();
    }
    let mut table = A_TABLE.write().expect("A table lock");
    while table.len() <= n {
        let m = table.len() as u64;
        table.push(factorial(6 * m) / (factorial(3 * m) * factorial(2 * m)));
    }
    table[n].clone()
}

/// `(6n+1)/(6n−1) · (6n)! / ((3n)! (2n)!)`.
pub fn b_coeff(n: usize) -> BigRational {
    let n64 = n as i64;
    BigRational::new(BigInt::from(6 * n64 + 1), BigInt::from(6 * n64 - 1))
        * BigRational::from_integer(a_coeff(n))
}

pub fn series_a(order: usize) -> ParitySeries {
    ParitySeries {
        coeffs: (0..=order)
            .map(|n| ParityScalar::even(BigRational::from_integer(a_coeff(n))))
            .collect(),
    }
}

pub fn series_b(order: usize) -> ParitySeries {
    ParitySeries { coeffs: (0..=order).map(|n| ParityScalar::even(b_coeff(n))).collect() }
}

fn check_index(i: u32) -> Result<()> {
    if i % 3 == 2 {
        Err(Error::invalid(format!("series index {i} is 2 mod 3")))
    } else {
        Ok(())
    }
}

/// `[Ĉ_i]_{T^k}`, or `None` for an invalid index.
pub fn chat_coeff(i: u32, k: usize) -> Option<ParityScalar> {
    let shift = (i / 3) as usize;
    match i % 3 {
        0 => Some(if k < shift {
            ParityScalar::zero()
        } else {
            let m = k - shift;
            let c = BigRational::from_integer(a_coeff(m));
            if m.is_multiple_of(2) {
                ParityScalar::even(c)
            } else {
                ParityScalar::odd(c)
            }
        }),
        1 => Some(if k < shift {
            ParityScalar::zero()
        } else {
            let m = k - shift;
            let c = b_coeff(m);
            if m.is_multiple_of(2) {
                ParityScalar::odd(c)
            } else {
                ParityScalar::even(c)
            }
        }),
        _ => None,
    }
}

/// The parity-twisted series `Ĉ_i(T, ζ)` truncated at `T^order`.
pub fn chat(i: u32, order: usize) -> Result<ParitySeries> {
    check_index(i)?;
    Ok(ParitySeries {
        coeffs: (0..=order).map(|k| chat_coeff(i, k).expect("checked")).collect(),
    })
}

/// The plain series `C_i` (`C_{3i} = T^i A`, `C_{3i+1} = T^i B`).
pub fn plain_c(i: u32, order: usize) -> Result<Vec<BigRational>> {
    Ok(chat(i, order)?.at_zeta_one())
}

/// A formal symbol `K_{n,a}`: `n` is its T-degree, `a ∈ Z/2` its parity.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct KSymbol {
    pub n: u32,
    pub a: u8,
}

/// A monomial in the `K` symbols, stored sorted.
pub type KMonomial = Vec<KSymbol>;

/// Polynomial in the `K_{n,a}`, graded by the T-degree `Σ n`.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct BracketPolynomial {
    terms: BTreeMap<KMonomial, BigRational>,
}

impl BracketPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        let mut p = Self::zero();
        p.terms.insert(Vec::new(), BigRational::one());
        p
    }

    pub fn terms(&self) -> &BTreeMap<KMonomial, BigRational> {
        &self.terms
    }

    pub fn coeff(&self, m: &[KSymbol]) -> BigRational {
        let mut key = m.to_vec();
        key.sort();
        self.terms.get(&key).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn add_term(&mut self, mut m: KMonomial, c: BigRational) {
        if c.is_zero() {
            return;
        }
        m.sort();
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn t_degree(m: &[KSymbol]) -> u32 {
        m.iter().map(|k| k.n).sum()
    }

    pub fn has_constant_term(&self) -> bool {
        self.terms.keys().any(|m| Self::t_degree(m) == 0)
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        let mut out = Self::zero();
        for (m, v) in &self.terms {
            out.add_term(m.clone(), v * c);
        }
        out
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (m, v) in &o.terms {
            out.add_term(m.clone(), v.clone());
        }
        out
    }

    /// Product keeping only terms of T-degree `≤ order`.
    pub fn mul_truncated(&self, o: &Self, order: u32) -> Self {
        let mut out = Self::zero();
        for (m1, c1) in &self.terms {
            let d1 = Self::t_degree(m1);
            if d1 > order {
                continue;
            }
            for (m2, c2) in &o.terms {
                if d1 + Self::t_degree(m2) > order {
                    continue;
                }
                let mut m = m1.clone();
                m.extend_from_slice(m2);
                out.add_term(m, c1 * c2);
            }
        }
        out
    }

    pub fn truncate(&self, order: u32) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| Self::t_degree(m) <= order)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// Terms of T-degree exactly `d`.
    pub fn homogeneous_part(&self, d: u32) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| Self::t_degree(m) == d)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }
}

/// `{F} = Σ [F]_{T^n ζ^a} K_{n,a} Tⁿ`.
pub fn bracket(f: &ParitySeries) -> BracketPolynomial {
    let mut out = BracketPolynomial::zero();
    for (n, c) in f.coeffs().iter().enumerate() {
        for a in 0..2u8 {
            out.add_term(vec![KSymbol { n: n as u32, a }], c.component(a).clone());
        }
    }
    out
}

/// `{F}` for a ζ-free series: only the `K_{n,0}` symbols occur.
pub fn bracket_plain(f: &[BigRational]) -> BracketPolynomial {
    let mut out = BracketPolynomial::zero();
    for (n, c) in f.iter().enumerate() {
        out.add_term(vec![KSymbol { n: n as u32, a: 0 }], c.clone());
    }
    out
}

/// Formal exponential truncated at T-degree `order`.
pub fn bracket_exp(f: &BracketPolynomial, order: u32) -> Result<BracketPolynomial> {
    if f.has_constant_term() {
        return Err(Error::invalid("exponential of a bracket polynomial with a T^0 term"));
    }
    let f = f.truncate(order);
    let mut out = BracketPolynomial::one();
    let mut power = BracketPolynomial::one();
    for m in 1..=order {
        power = power.mul_truncated(&f, order).scale(&BigRational::new(1.into(), (m as i64).into()));
        if power.terms.is_empty() {
            break;
        }
        out = out.add(&power);
    }
    Ok(out)
}

/// Coefficients graded by `(ζ₁, ζ₂)` parity, indexed by `z1 + 2·z2`.
pub type BiParity = [BigRational; 4];

fn biparity_zero() -> BiParity {
    [BigRational::zero(), BigRational::zero(), BigRational::zero(), BigRational::zero()]
}

/// Node factor, or its numerator: for each T-degree `m` a homogeneous
/// polynomial `Σ_p c_{m,p} ψ₁^p ψ₂^{m−p}` with bi-parity coefficients.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct EdgePolynomial {
    levels: Vec<Vec<BiParity>>,
}

impl EdgePolynomial {
    pub fn order(&self) -> usize {
        self.levels.len().saturating_sub(1)
    }

    /// Coefficient of `ψ₁^p ψ₂^q` (at T-degree `p + q`).
    pub fn coeff(&self, p: usize, q: usize) -> BiParity {
        self.levels
            .get(p + q)
            .map(|lvl| lvl[p].clone())
            .unwrap_or_else(biparity_zero)
    }

    /// Value of `[·]_{ψ₁^p ψ₂^q}` at `ζ₁ = s1, ζ₂ = s2` with `s = ±1`.
    pub fn eval(&self, p: usize, q: usize, z1_negative: bool, z2_negative: bool) -> BigRational {
        let c = self.coeff(p, q);
        let mut out = BigRational::zero();
        for (idx, v) in c.iter().enumerate() {
            let flip = (idx & 1 == 1 && z1_negative) ^ (idx & 2 == 2 && z2_negative);
            if flip {
                out -= v;
            } else {
                out += v;
            }
        }
        out
    }

    /// Image under `(ψ₁, ζ₁) ↔ (ψ₂, ζ₂)`.
    pub fn swapped(&self) -> Self {
        let levels = self
            .levels
            .iter()
            .map(|lvl| {
                let m = lvl.len() - 1;
                (0..=m)
                    .map(|p| {
                        let c = &lvl[m - p];
                        [c[0].clone(), c[2].clone(), c[1].clone(), c[3].clone()]
                    })
                    .collect()
            })
            .collect();
        EdgePolynomial { levels }
    }
}

/// Which term of the numerator to corrupt; used for fault injection only.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NumeratorVariant {
    Exact,
    /// Replace `+ ζ₁ + ζ₂` by `− ζ₁ − ζ₂`.
    FlippedConstant,
    /// Replace `ζ₂ B(ζ₂ψ₂T)` by `−ζ₂ B(ζ₂ψ₂T)` in the first product.
    FlippedFirstProduct,
}

/// `A(ζ₁ψ₁T)·ζ₂B(ζ₂ψ₂T) + ζ₁B(ζ₁ψ₁T)·A(ζ₂ψ₂T) + ζ₁ + ζ₂` through `T^order`.
pub fn edge_numerator(order: usize, variant: NumeratorVariant) -> EdgePolynomial {
    // ζ^k as a bi-parity index contribution
    let idx = |z1: usize, z2: usize| (z1 % 2) + 2 * (z2 % 2);
    let first_sign = if variant == NumeratorVariant::FlippedFirstProduct { -1 } else { 1 };
    let mut levels = Vec::with_capacity(order + 1);
    for k in 0..=order {
        let mut lvl = vec![biparity_zero(); k + 1];
        for p in 0..=k {
            let qd = k - p;
            let a_p = BigRational::from_integer(a_coeff(p));
            let a_q = BigRational::from_integer(a_coeff(qd));
            // A(ζ₁ψ₁T) ζ₂ B(ζ₂ψ₂T): ζ₁^p ζ₂^{q+1}
            lvl[p][idx(p, qd + 1)] += &a_p * b_coeff(qd) * q(first_sign);
            // ζ₁ B(ζ₁ψ₁T) A(ζ₂ψ₂T): ζ₁^{p+1} ζ₂^q
            lvl[p][idx(p + 1, qd)] += b_coeff(p) * &a_q;
        }
        if k == 0 {
            let c = if variant == NumeratorVariant::FlippedConstant { -1 } else { 1 };
            lvl[0][idx(1, 0)] += q(c);
            lvl[0][idx(0, 1)] += q(c);
        }
        levels.push(lvl);
    }
    EdgePolynomial { levels }
}

/// Divide a numerator by `(ψ₁ + ψ₂)T`. Each level is divided synthetically;
/// any nonzero remainder is reported as a consistency failure.
pub fn divide_by_psi_sum(numer: &EdgePolynomial) -> Result<EdgePolynomial> {
    let mut levels = Vec::new();
    for (k, lvl) in numer.levels.iter().enumerate() {
        if k == 0 {
            if lvl[0].iter().any(|c| !c.is_zero()) {
                return Err(Error::Consistency(
                    "node factor numerator has a nonzero T^0 coefficient".into(),
                ));
            }
            continue;
        }
        // lvl[p] is the coefficient of ψ₁^p ψ₂^{k−p}; quotient has degree k−1.
        let mut quot: Vec<BiParity> = Vec::with_capacity(k);
        for p in 0..k {
            let mut c = lvl[p].clone();
            if p > 0 {
                for z in 0..4 {
                    c[z] -= &quot[p - 1][z];
                }
            }
            quot.push(c);
        }
        for z in 0..4 {
            if lvl[k][z] != quot[k - 1][z] {
                return Err(Error::Consistency(format!(
                    "node factor numerator not divisible by ψ₁+ψ₂ at T^{k}"
                )));
            }
        }
        levels.push(quot);
    }
    Ok(EdgePolynomial { levels })
}

/// The node factor `Δ` through `T^order`.
pub fn edge_factor(order: usize) -> Result<EdgePolynomial> {
    divide_by_psi_sum(&edge_numerator(order + 1, NumeratorVariant::Exact))
}

/// Whether `A(T)B(−T) + A(−T)B(T) + 2` vanishes through `T^order`.
pub fn check_ab_identity(order: usize) -> bool {
    let a = series_a(order);
    let b = series_b(order);
    let lhs = &(&a * &b.negate_variable()) + &(&a.negate_variable() * &b);
    lhs.coeffs().iter().enumerate().all(|(k, c)| {
        let expected = if k == 0 { q(-2) } else { BigRational::zero() };
        c.odd.is_zero() && c.even == expected
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64) -> BigRational {
        q(n)
    }

    #[test]
    fn a_and_b_leading_coefficients() {
        let a = series_a(3);
        assert_eq!(a.coeff(0).even, r(1));
        assert_eq!(a.coeff(1).even, r(60));
        let b = series_b(3);
        assert_eq!(b.coeff(0).even, r(-1));
        assert_eq!(b.coeff(1).even, r(84));
        // (12)!/(6! 4!) = 27720
        assert_eq!(a.coeff(2).even, r(27720));
    }

    #[test]
    fn chat_examples() {
        assert_eq!(chat(0, 2).unwrap().coeff(1), ParityScalar::odd(r(60)));
        assert_eq!(chat(1, 2).unwrap().coeff(0), ParityScalar::odd(r(-1)));
        let c3 = chat(3, 2).unwrap();
        assert_eq!(c3.coeff(0), ParityScalar::zero());
        assert_eq!(c3.coeff(1), ParityScalar::one());
        assert!(chat(2, 3).is_err());
        assert!(chat(5, 3).is_err());
    }

    #[test]
    fn chat_matches_substitution_definition() {
        // Ĉ_{3i+1} = ζ T^i B(ζT) built from series arithmetic.
        let order = 6;
        let zeta_t: Vec<ParityScalar> = (0..=order)
            .map(|k| {
                let c = b_coeff(k);
                if k % 2 == 0 { ParityScalar::even(c) } else { ParityScalar::odd(c) }
            })
            .collect();
        let b_twisted = ParitySeries::from_coeffs(zeta_t);
        let mut shifted = vec![ParityScalar::zero(); 2];
        shifted.extend(b_twisted.coeffs().iter().take(order - 1).map(|c| c * &ParityScalar::zeta()));
        assert_eq!(ParitySeries::from_coeffs(shifted), chat(7, order).unwrap());
    }

    #[test]
    fn bracket_examples() {
        let one_minus_c0 = &ParitySeries::one(4) - &chat(0, 4).unwrap();
        let b = bracket(&one_minus_c0);
        assert!(!b.has_constant_term());
        let b0 = bracket(&chat(0, 4).unwrap());
        assert_eq!(b0.coeff(&[KSymbol { n: 0, a: 0 }]), r(1));
        assert_eq!(b0.coeff(&[KSymbol { n: 1, a: 1 }]), r(60));
        let b1 = bracket(&chat(1, 4).unwrap());
        assert_eq!(b1.coeff(&[KSymbol { n: 0, a: 1 }]), r(-1));
    }

    #[test]
    fn bracket_exp_examples() {
        assert_eq!(bracket_exp(&BracketPolynomial::zero(), 5).unwrap(), BracketPolynomial::one());
        let x = bracket(&(&ParitySeries::one(4) - &chat(0, 4).unwrap()));
        let e = bracket_exp(&x, 3).unwrap();
        assert_eq!(e.homogeneous_part(1).coeff(&[KSymbol { n: 1, a: 1 }]), r(-60));
        assert!(e.terms().keys().all(|m| BracketPolynomial::t_degree(m) <= 3));
        // degree 2: −A₂ K_{2,0} + A₁²/2 K_{1,1}²
        let k11 = KSymbol { n: 1, a: 1 };
        assert_eq!(e.coeff(&[k11, k11]), r(1800));
        assert_eq!(e.coeff(&[KSymbol { n: 2, a: 0 }]), r(-27720));
        assert!(bracket_exp(&BracketPolynomial::one(), 3).is_err());
    }

    #[test]
    fn edge_factor_leading_term() {
        let d = edge_factor(3).unwrap();
        let c = d.coeff(0, 0);
        // 84 − 60 ζ₁ζ₂
        assert_eq!(c[0], r(84));
        assert_eq!(c[3], r(-60));
        assert!(c[1].is_zero() && c[2].is_zero());
    }

    #[test]
    fn edge_numerator_constant_term_cancels() {
        let n = edge_numerator(0, NumeratorVariant::Exact);
        assert!(n.coeff(0, 0).iter().all(|c| c.is_zero()));
    }

    #[test]
    fn edge_factor_swap_symmetry() {
        let d = edge_factor(8).unwrap();
        assert_eq!(d.swapped(), d);
    }

    #[test]
    fn corrupted_numerators_fail_division() {
        for v in [NumeratorVariant::FlippedConstant, NumeratorVariant::FlippedFirstProduct] {
            let n = edge_numerator(5, v);
            assert!(matches!(divide_by_psi_sum(&n), Err(Error::Consistency(_))), "{v:?}");
        }
    }

    #[test]
    fn ab_identity_low_orders() {
        assert!(check_ab_identity(1));
        assert!(check_ab_identity(10));
    }

    #[test]
    fn bracket_respects_t_grading() {
        let a = bracket(&chat(4, 5).unwrap());
        let b = bracket(&chat(1, 5).unwrap());
        let prod = a.mul_truncated(&b, 5);
        for m in prod.terms().keys() {
            assert!(BracketPolynomial::t_degree(m) <= 5);
        }
        // the product of two homogeneous pieces lands in the summed degree
        let a1 = a.homogeneous_part(2);
        let b1 = b.homogeneous_part(1);
        assert!(a1.mul_truncated(&b1, 5).terms().keys().all(|m| BracketPolynomial::t_degree(m) == 3));
    }
}
