//! Scalar types for the two coefficient regimes.
//!
//! Brown-Peterson computations use exact rationals ([`Q`]); Morava K-theory
//! computations use residues modulo the working prime ([`Fp`]).

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use super::CoefficientRing;

/// Exact rational scalar.
pub type Q = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScalarError {
    #[error("scalar {value} is not {prime}-integral")]
    NotIntegral { value: String, prime: u32 },
    #[error("scalar {0} is not invertible")]
    NotInvertible(String),
}

/// Arithmetic every series coefficient must support.
///
/// Constructors take the ring so that residue types can pick up their
/// modulus.
pub trait Coeff: Clone + PartialEq + fmt::Debug + fmt::Display + Send + Sync + 'static {
    fn from_i64(n: i64, ring: &CoefficientRing) -> Self;

    /// Reduce an exact rational into this scalar type.
    fn from_rational(q: &Q, ring: &CoefficientRing) -> Result<Self, ScalarError>;

    fn is_zero(&self) -> bool;

    fn is_one(&self) -> bool;

    fn add_assign(&mut self, other: &Self);

    fn mul(&self, other: &Self) -> Self;

    fn neg(&self) -> Self;

    fn inverse(&self) -> Result<Self, ScalarError>;

    /// Split `self = digit + p * rest` with `digit` the least non-negative
    /// residue modulo `p`. Fails when `self` has a denominator divisible by `p`.
    fn p_digit(&self, p: u32) -> Result<(Self, Self), ScalarError>;

    /// Exact rational lift (residues lift to their least non-negative
    /// representative).
    fn to_rational(&self) -> Q;

    fn zero_like(&self) -> Self;

    /// Whether the pretty printer should show this scalar with a minus sign.
    fn is_negative(&self) -> bool;

    /// JSON form of `self` times the generator monomial `gens`.
    fn scalar_json(&self, gens: &BTreeMap<String, i32>) -> Value;

    fn sub_assign(&mut self, other: &Self) {
        self.add_assign(&other.neg());
    }

    fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }
}

/// `n` as an exact rational.
pub fn q_int(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn q_frac(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Residue of an integer modulo `p`, in `0..p`.
pub fn mod_p(n: &BigInt, p: u32) -> u32 {
    let r = n.mod_floor(&BigInt::from(p));
    r.to_u32().expect("residue fits in u32")
}

/// Multiplicative inverse modulo a prime via Fermat.
pub fn inv_mod(a: u32, p: u32) -> Option<u32> {
    if a.is_multiple_of(p) {
        return None;
    }
    Some(pow_mod(a as u64, (p - 2) as u64, p as u64) as u32)
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % m;
        }
        base = base * base % m;
        exp >>= 1;
    }
    acc
}

/// `true` when the denominator of `q` is prime to `p`.
pub fn is_p_integral(q: &Q, p: u32) -> bool {
    !q.denom().is_multiple_of(&BigInt::from(p))
}

impl Coeff for Q {
    fn from_i64(n: i64, _ring: &CoefficientRing) -> Self {
        q_int(n)
    }

    fn from_rational(q: &Q, _ring: &CoefficientRing) -> Result<Self, ScalarError> {
        Ok(q.clone())
    }

    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }

    fn is_one(&self) -> bool {
        One::is_one(self)
    }

    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }

    fn mul(&self, other: &Self) -> Self {
        self * other
    }

    fn neg(&self) -> Self {
        -self
    }

    fn inverse(&self) -> Result<Self, ScalarError> {
        if Zero::is_zero(self) {
            Err(ScalarError::NotInvertible(self.to_string()))
        } else {
            Ok(self.recip())
        }
    }

    fn p_digit(&self, p: u32) -> Result<(Self, Self), ScalarError> {
        if !is_p_integral(self, p) {
            return Err(ScalarError::NotIntegral { value: self.to_string(), prime: p });
        }
        // numer * denom^{-1} mod p
        let d = mod_p(self.denom(), p);
        let n = mod_p(self.numer(), p);
        let digit = (n as u64 * inv_mod(d, p).expect("denominator prime to p") as u64 % p as u64) as i64;
        let digit = q_int(digit);
        let rest = (self - &digit) / q_int(p as i64);
        Ok((digit, rest))
    }

    fn to_rational(&self) -> Q {
        self.clone()
    }

    fn zero_like(&self) -> Self {
        Q::zero()
    }

    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }

    fn scalar_json(&self, gens: &BTreeMap<String, i32>) -> Value {
        json!({
            "num": self.numer().to_string(),
            "den": self.denom().to_string(),
            "gens": gens,
        })
    }
}

/// Residue modulo a small prime. The modulus travels with the value.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fp {
    value: u32,
    prime: u32,
}

impl Fp {
    pub fn new(value: i64, prime: u32) -> Self {
        Fp { value: value.rem_euclid(prime as i64) as u32, prime }
    }

    pub fn value(&self) -> u32 {
        self.value
    }

    pub fn prime(&self) -> u32 {
        self.prime
    }
}

impl fmt::Debug for Fp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self.value, self.prime)
    }
}

impl fmt::Display for Fp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

impl Coeff for Fp {
    fn from_i64(n: i64, ring: &CoefficientRing) -> Self {
        Fp::new(n, ring.prime())
    }

    fn from_rational(q: &Q, ring: &CoefficientRing) -> Result<Self, ScalarError> {
        let p = ring.prime();
        if !is_p_integral(q, p) {
            return Err(ScalarError::NotIntegral { value: q.to_string(), prime: p });
        }
        let n = mod_p(q.numer(), p);
        let d = inv_mod(mod_p(q.denom(), p), p).expect("checked integrality");
        Ok(Fp { value: (n as u64 * d as u64 % p as u64) as u32, prime: p })
    }

    #[inline]
    fn is_zero(&self) -> bool {
        self.value == 0
    }

    fn is_one(&self) -> bool {
        self.value == 1
    }

    #[inline]
    fn add_assign(&mut self, other: &Self) {
        debug_assert_eq!(self.prime, other.prime);
        let s = self.value + other.value;
        self.value = if s >= self.prime { s - self.prime } else { s };
    }

    #[inline]
    fn mul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.prime, other.prime);
        Fp { value: ((self.value as u64 * other.value as u64) % self.prime as u64) as u32, prime: self.prime }
    }

    fn neg(&self) -> Self {
        Fp { value: (self.prime - self.value) % self.prime, prime: self.prime }
    }

    fn inverse(&self) -> Result<Self, ScalarError> {
        inv_mod(self.value, self.prime)
            .map(|value| Fp { value, prime: self.prime })
            .ok_or_else(|| ScalarError::NotInvertible(self.to_string()))
    }

    fn p_digit(&self, _p: u32) -> Result<(Self, Self), ScalarError> {
        Ok((*self, Fp { value: 0, prime: self.prime }))
    }

    fn to_rational(&self) -> Q {
        q_int(self.value as i64)
    }

    fn zero_like(&self) -> Self {
        Fp { value: 0, prime: self.prime }
    }

    fn is_negative(&self) -> bool {
        false
    }

    fn scalar_json(&self, gens: &BTreeMap<String, i32>) -> Value {
        let v_exp: i32 = gens.values().sum();
        json!({ "mod_p": self.value, "v_exp": v_exp })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p_digit_splits_rationals() {
        let q = q_frac(7, 3); // 7/3 = 1 (mod 2) since 3^{-1} = 1
        let (d, r) = q.p_digit(2).unwrap();
        assert_eq!(d, q_int(1));
        assert_eq!(&d + &r * q_int(2), q);
        assert!(q_frac(1, 2).p_digit(2).is_err());
        let (d, r) = q_int(-1).p_digit(3).unwrap();
        assert_eq!(d, q_int(2));
        assert_eq!(r, q_int(-1));
    }

    #[test]
    fn fp_arithmetic() {
        let a = Fp::new(4, 5);
        let b = Fp::new(3, 5);
        assert_eq!(a.mul(&b).value(), 2);
        assert_eq!(a.add(&b).value(), 2);
        assert_eq!(a.inverse().unwrap().value(), 4);
        assert_eq!(Fp::new(-1, 5).value(), 4);
        assert!(Fp::new(0, 5).inverse().is_err());
    }

    #[test]
    fn fp_from_rational() {
        let ring = CoefficientRing::morava(5, 1).unwrap();
        assert_eq!(Fp::from_rational(&q_frac(1, 2), &ring).unwrap().value(), 3);
        assert!(Fp::from_rational(&q_frac(1, 5), &ring).is_err());
    }
}
