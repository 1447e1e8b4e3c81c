//! Coefficient fields used by the relation engine.
//!
//! Everything user facing is exact over `Q`. The rank pipeline evaluates the
//! same formulas directly in a prime field, which is equivalent to reducing
//! the exact rational output modulo `p` as long as `p` divides no
//! denominator (all denominators here are products of small integers).

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub trait Field:
    Clone
    + PartialEq
    + fmt::Debug
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
{
    /// Data needed to construct constants (the modulus for prime fields).
    type Ctx: Clone + fmt::Debug + Send + Sync;

    fn from_ratio(ctx: &Self::Ctx, num: i64, den: i64) -> Self;

    fn from_rational(ctx: &Self::Ctx, q: &BigRational) -> Result<Self>;

    fn inv(&self) -> Option<Self>;

    fn is_zero(&self) -> bool;

    fn zero(ctx: &Self::Ctx) -> Self {
        Self::from_ratio(ctx, 0, 1)
    }

    fn one(ctx: &Self::Ctx) -> Self {
        Self::from_ratio(ctx, 1, 1)
    }

    fn from_int(ctx: &Self::Ctx, x: i64) -> Self {
        Self::from_ratio(ctx, x, 1)
    }
}

impl Field for BigRational {
    type Ctx = ();

    fn from_ratio(_: &(), num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_rational(_: &(), q: &BigRational) -> Result<Self> {
        Ok(q.clone())
    }

    fn inv(&self) -> Option<Self> {
        if Zero::is_zero(self) {
            None
        } else {
            Some(self.recip())
        }
    }

    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
}

/// Element of `Z/pZ` for a prime `p < 2^63`. The modulus travels with the
/// value so that values from different primes never mix silently.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fp {
    v: u64,
    p: u64,
}

impl fmt::Debug for Fp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self.v, self.p)
    }
}

/// Two fixed primes just below `2^62`.
pub const DEFAULT_PRIMES: [u64; 2] = [4_611_686_018_427_387_847, 4_611_686_018_427_387_817];

/// A third prime used when the first two disagree.
pub const ESCALATION_PRIME: u64 = 4_611_686_018_427_387_787;

#[inline]
pub fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

#[inline]
pub fn add_mod(a: u64, b: u64, p: u64) -> u64 {
    let s = a + b;
    if s >= p {
        s - p
    } else {
        s
    }
}

#[inline]
pub fn sub_mod(a: u64, b: u64, p: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a + p - b
    }
}

pub fn pow_mod(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1 % p;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, a, p);
        }
        a = mul_mod(a, a, p);
        e >>= 1;
    }
    r
}

pub fn inv_mod(a: u64, p: u64) -> Option<u64> {
    if a.is_multiple_of(p) {
        None
    } else {
        Some(pow_mod(a, p - 2, p))
    }
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for small in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(small) {
            return n == small;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Reduce a big integer modulo `p`.
pub fn bigint_mod(x: &BigInt, p: u64) -> u64 {
    let r = x.mod_floor(&BigInt::from(p));
    r.to_u64().expect("residue fits in u64")
}

/// Reduce a rational modulo `p`; fails if `p` divides the denominator.
pub fn rational_mod(q: &BigRational, p: u64) -> Result<u64> {
    let num = bigint_mod(q.numer(), p);
    let den = bigint_mod(q.denom(), p);
    let inv = inv_mod(den, p).ok_or(Error::BadPrime(p))?;
    Ok(mul_mod(num, inv, p))
}

impl Fp {
    pub fn new(v: u64, p: u64) -> Self {
        Fp { v: v % p, p }
    }

    pub fn value(&self) -> u64 {
        self.v
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    /// Representative in `(-p/2, p/2]`, useful for printing small values.
    pub fn signed(&self) -> i128 {
        if self.v > self.p / 2 {
            self.v as i128 - self.p as i128
        } else {
            self.v as i128
        }
    }
}

impl Add for Fp {
    type Output = Fp;
    #[inline]
    fn add(self, o: Fp) -> Fp {
        debug_assert_eq!(self.p, o.p);
        Fp { v: add_mod(self.v, o.v, self.p), p: self.p }
    }
}

impl Sub for Fp {
    type Output = Fp;
    #[inline]
    fn sub(self, o: Fp) -> Fp {
        debug_assert_eq!(self.p, o.p);
        Fp { v: sub_mod(self.v, o.v, self.p), p: self.p }
    }
}

impl Mul for Fp {
    type Output = Fp;
    #[inline]
    fn mul(self, o: Fp) -> Fp {
        debug_assert_eq!(self.p, o.p);
        Fp { v: mul_mod(self.v, o.v, self.p), p: self.p }
    }
}

impl Neg for Fp {
    type Output = Fp;
    #[inline]
    fn neg(self) -> Fp {
        Fp { v: if self.v == 0 { 0 } else { self.p - self.v }, p: self.p }
    }
}

impl AddAssign for Fp {
    #[inline]
    fn add_assign(&mut self, o: Fp) {
        *self = *self + o;
    }
}

impl SubAssign for Fp {
    #[inline]
    fn sub_assign(&mut self, o: Fp) {
        *self = *self - o;
    }
}

impl MulAssign for Fp {
    #[inline]
    fn mul_assign(&mut self, o: Fp) {
        *self = *self * o;
    }
}

impl Field for Fp {
    type Ctx = u64;

    fn from_ratio(p: &u64, num: i64, den: i64) -> Self {
        let p = *p;
        let reduce = |x: i64| -> u64 {
            let r = (x as i128).rem_euclid(p as i128);
            r as u64
        };
        let d = inv_mod(reduce(den), p).expect("denominator invertible mod p");
        Fp { v: mul_mod(reduce(num), d, p), p }
    }

    fn from_rational(p: &u64, q: &BigRational) -> Result<Self> {
        Ok(Fp { v: rational_mod(q, *p)?, p: *p })
    }

    fn inv(&self) -> Option<Self> {
        inv_mod(self.v, self.p).map(|v| Fp { v, p: self.p })
    }

    fn is_zero(&self) -> bool {
        self.v == 0
    }
}

/// `n!` as a big integer.
pub fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// Format a rational as `p/q` (or `p` when the denominator is one).
pub fn format_rational(q: &BigRational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Parse `p/q` or `p`.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let parse_int = |t: &str| -> Result<BigInt> {
        t.trim()
            .parse::<BigInt>()
            .map_err(|e| Error::Parse(format!("bad integer {t:?}: {e}")))
    };
    match s.split_once('/') {
        Some((n, d)) => {
            let d = parse_int(d)?;
            if d.is_zero() {
                return Err(Error::Parse(format!("zero denominator in {s:?}")));
            }
            Ok(BigRational::new(parse_int(n)?, d))
        }
        None => Ok(BigRational::from_integer(parse_int(s)?)),
    }
}

/// Clear denominators and divide by the content, making the first nonzero
/// entry positive. Returns integer entries.
pub fn primitive_integer_row(entries: &[BigRational]) -> Vec<BigInt> {
    let mut lcm = BigInt::one();
    for q in entries {
        lcm = lcm.lcm(q.denom());
    }
    let mut ints: Vec<BigInt> = entries
        .iter()
        .map(|q| (q * BigRational::from_integer(lcm.clone())).to_integer())
        .collect();
    let mut content = BigInt::zero();
    for x in &ints {
        content = content.gcd(x);
    }
    if !content.is_zero() {
        let first_negative = ints
            .iter()
            .find(|x| !x.is_zero())
            .map(|x| x.sign() == Sign::Minus)
            .unwrap_or(false);
        if first_negative {
            content = -content;
        }
        for x in &mut ints {
            *x = &*x / &content;
        }
    }
    ints
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_primes_are_prime() {
        for p in DEFAULT_PRIMES.iter().chain([ESCALATION_PRIME].iter()) {
            assert!(is_prime(*p), "{p}");
            assert!(*p < (1u64 << 62));
            assert!(*p > (1u64 << 61));
        }
        assert!(!is_prime(4_611_686_018_427_387_849));
    }

    #[test]
    fn fp_arithmetic() {
        let p = 101;
        let a = Fp::from_ratio(&p, 1, 2);
        assert_eq!((a + a).value(), 1);
        let b = Fp::from_ratio(&p, -3, 1);
        assert_eq!(b.value(), 98);
        assert_eq!((b * b.inv().unwrap()).value(), 1);
        assert_eq!(b.signed(), -3);
    }

    #[test]
    fn rational_reduction_matches_fp() {
        let p = DEFAULT_PRIMES[0];
        let q = BigRational::new(BigInt::from(-7), BigInt::from(12));
        let direct = Fp::from_ratio(&p, -7, 12);
        assert_eq!(rational_mod(&q, p).unwrap(), direct.value());
        let bad = BigRational::new(BigInt::from(1), BigInt::from(p));
        assert_eq!(rational_mod(&bad, p), Err(Error::BadPrime(p)));
    }

    #[test]
    fn rational_text_round_trip() {
        for s in ["0", "5", "-3/4", "123456789012345678901234567891/2"] {
            assert_eq!(format_rational(&parse_rational(s).unwrap()), s);
        }
        assert!(parse_rational("1/0").is_err());
    }

    #[test]
    fn primitive_rows() {
        let q = |n: i64, d: i64| BigRational::new(n.into(), d.into());
        let row = primitive_integer_row(&[q(0, 1), q(-1, 2), q(3, 4)]);
        assert_eq!(row, vec![BigInt::from(0), BigInt::from(2), BigInt::from(-3)]);
    }
}
