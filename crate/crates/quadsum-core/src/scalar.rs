//! Exact field elements: arbitrary-precision rationals and prime fields `F_p`.
//!
//! Every value is kept in canonical form (reduced fraction with positive
//! denominator, or residue in `[0, p)`), so equality is structural and
//! printing round-trips.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};

/// The ground field: the rationals, or `F_p` for a prime `p`.
///
/// Primes are limited to `p < 2^32` so products of residues fit in `u64`
/// intermediates without bignum round-trips; root finding scans residues
/// exhaustively, so desk-scale primes are the intended range anyway.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FieldSpec {
    Rationals,
    PrimeField(u64),
}

impl FieldSpec {
    /// Checks the `PrimeField` invariant. `Rationals` is always valid.
    pub fn validate(self) -> Result<Self, ScalarError> {
        match self {
            FieldSpec::Rationals => Ok(self),
            FieldSpec::PrimeField(p) => {
                if p >= (1 << 32) {
                    return Err(ScalarError::PrimeTooLarge(p));
                }
                if !is_prime(p) {
                    return Err(ScalarError::NotPrime(p));
                }
                Ok(self)
            }
        }
    }

    pub fn characteristic(self) -> u64 {
        match self {
            FieldSpec::Rationals => 0,
            FieldSpec::PrimeField(p) => p,
        }
    }

    pub fn zero(self) -> Scalar {
        self.from_i64(0)
    }

    pub fn one(self) -> Scalar {
        self.from_i64(1)
    }

    /// The image of the integer `n` in this field.
    pub fn from_i64(self, n: i64) -> Scalar {
        match self {
            FieldSpec::Rationals => Scalar::Rational(BigRational::from_integer(BigInt::from(n))),
            FieldSpec::PrimeField(p) => {
                // p < 2^32, so it fits in i64 and rem_euclid lands in [0, p).
                let r = n.rem_euclid(p as i64);
                Scalar::Residue {
                    value: r as u64,
                    modulus: p,
                }
            }
        }
    }

    /// Exact rational `num/den` (reduced on construction). Over `F_p` this is
    /// `num * den^{-1}`.
    pub fn fraction(self, num: i64, den: i64) -> Scalar {
        assert!(den != 0, "zero denominator");
        match self {
            FieldSpec::Rationals => {
                Scalar::Rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
            }
            FieldSpec::PrimeField(_) => {
                let d = self.from_i64(den);
                let inv = d.inv().expect("denominator divisible by p");
                &self.from_i64(num) * &inv
            }
        }
    }

    /// Parses the text form: `"a/b"` or `"a"` for the rationals, `"k mod p"`
    /// (or a bare integer) for a prime field.
    pub fn parse_scalar(self, text: &str) -> Result<Scalar, ScalarError> {
        let text = text.trim();
        match self {
            FieldSpec::Rationals => {
                if let Some((n, d)) = text.split_once('/') {
                    let n: BigInt = n.trim().parse().map_err(|_| bad(text))?;
                    let d: BigInt = d.trim().parse().map_err(|_| bad(text))?;
                    if d.is_zero() {
                        return Err(bad(text));
                    }
                    Ok(Scalar::Rational(BigRational::new(n, d)))
                } else {
                    let n: BigInt = text.parse().map_err(|_| bad(text))?;
                    Ok(Scalar::Rational(BigRational::from_integer(n)))
                }
            }
            FieldSpec::PrimeField(p) => {
                let body = match text.split_once(" mod ") {
                    Some((k, m)) => {
                        let m: u64 = m.trim().parse().map_err(|_| bad(text))?;
                        if m != p {
                            return Err(ScalarError::FieldMismatch);
                        }
                        k.trim()
                    }
                    None => text,
                };
                let k: i64 = body.parse().map_err(|_| bad(text))?;
                Ok(self.from_i64(k))
            }
        }
    }
}

fn bad(text: &str) -> ScalarError {
    ScalarError::Parse(text.to_string())
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldSpec::Rationals => write!(f, "Q"),
            FieldSpec::PrimeField(p) => write!(f, "Fp:{p}"),
        }
    }
}

/// An exact field element tagged with its field.
///
/// Canonical form is an invariant: rationals are reduced with positive
/// denominator (maintained by `BigRational`), residues lie in `[0, p)`.
/// Mixing fields in arithmetic is a programming error and panics; fallible
/// boundaries (parsing, inversion) return [`ScalarError`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Scalar {
    Rational(BigRational),
    Residue { value: u64, modulus: u64 },
}

impl Scalar {
    pub fn field(&self) -> FieldSpec {
        match self {
            Scalar::Rational(_) => FieldSpec::Rationals,
            Scalar::Residue { modulus, .. } => FieldSpec::PrimeField(*modulus),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Rational(r) => r.is_zero(),
            Scalar::Residue { value, .. } => *value == 0,
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Scalar::Rational(r) => r.is_one(),
            Scalar::Residue { value, .. } => *value == 1,
        }
    }

    /// Multiplicative inverse; `DivisionByZero` on zero.
    pub fn inv(&self) -> Result<Scalar, ScalarError> {
        if self.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        Ok(match self {
            Scalar::Rational(r) => Scalar::Rational(r.recip()),
            Scalar::Residue { value, modulus } => Scalar::Residue {
                value: mod_pow(*value, modulus - 2, *modulus),
                modulus: *modulus,
            },
        })
    }

    /// `self / rhs`; `DivisionByZero` on zero divisor.
    pub fn div(&self, rhs: &Scalar) -> Result<Scalar, ScalarError> {
        Ok(self * &rhs.inv()?)
    }

    /// Total order used for deterministic normalization: numeric over the
    /// rationals, residue order over `F_p`.
    pub fn canonical_cmp(&self, other: &Scalar) -> core::cmp::Ordering {
        match (self, other) {
            (Scalar::Rational(a), Scalar::Rational(b)) => a.cmp(b),
            (
                Scalar::Residue {
                    value: a,
                    modulus: p,
                },
                Scalar::Residue {
                    value: b,
                    modulus: q,
                },
            ) => {
                assert_eq!(p, q, "field mismatch");
                a.cmp(b)
            }
            _ => panic!("field mismatch"),
        }
    }

    /// The rational payload, if this is a rational.
    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Scalar::Rational(r) => Some(r),
            _ => None,
        }
    }

    /// The residue payload, if this is a prime-field element.
    pub fn as_residue(&self) -> Option<u64> {
        match self {
            Scalar::Residue { value, .. } => Some(*value),
            _ => None,
        }
    }
}

fn same_field(a: &Scalar, b: &Scalar) -> FieldSpec {
    let f = a.field();
    assert!(f == b.field(), "field mismatch: {} vs {}", f, b.field());
    f
}

// mul of two residues < 2^32 fits in u64? No: (2^32-1)^2 > u64::MAX is false —
// it is ~2^64, right at the edge; go through u128 to be safe.
fn mod_mul(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn mod_pow(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1 % p;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mod_mul(acc, base, p);
        }
        base = mod_mul(base, base, p);
        exp >>= 1;
    }
    acc
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for q in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31] {
        if n == q {
            return true;
        }
        if n.is_multiple_of(q) {
            return false;
        }
    }
    // Deterministic Miller-Rabin for n < 3,215,031,751 with these bases.
    let d = (n - 1) >> (n - 1).trailing_zeros();
    'witness: for a in [2u64, 3, 5, 7] {
        let mut x = mod_pow(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        let mut e = d;
        while e != n - 1 {
            x = mod_mul(x, x, n);
            e <<= 1;
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

impl core::ops::Add for &Scalar {
    type Output = Scalar;
    fn add(self, rhs: &Scalar) -> Scalar {
        match (self, rhs) {
            (Scalar::Rational(a), Scalar::Rational(b)) => {
                // Integer fast path: denominators 1 need no cross-multiplying
                // or re-reduction, and new_raw(n, 1) is already canonical.
                if a.denom().is_one() && b.denom().is_one() {
                    Scalar::Rational(BigRational::new_raw(a.numer() + b.numer(), BigInt::one()))
                } else {
                    Scalar::Rational(a + b)
                }
            }
            (
                Scalar::Residue {
                    value: a,
                    modulus: p,
                },
                Scalar::Residue { value: b, .. },
            ) => {
                same_field(self, rhs);
                Scalar::Residue {
                    value: (a + b) % p,
                    modulus: *p,
                }
            }
            _ => panic!("field mismatch"),
        }
    }
}

impl core::ops::Sub for &Scalar {
    type Output = Scalar;
    fn sub(self, rhs: &Scalar) -> Scalar {
        self + &(-rhs)
    }
}

impl core::ops::Mul for &Scalar {
    type Output = Scalar;
    fn mul(self, rhs: &Scalar) -> Scalar {
        match (self, rhs) {
            (Scalar::Rational(a), Scalar::Rational(b)) => {
                if a.denom().is_one() && b.denom().is_one() {
                    Scalar::Rational(BigRational::new_raw(a.numer() * b.numer(), BigInt::one()))
                } else {
                    Scalar::Rational(a * b)
                }
            }
            (
                Scalar::Residue {
                    value: a,
                    modulus: p,
                },
                Scalar::Residue { value: b, .. },
            ) => {
                same_field(self, rhs);
                Scalar::Residue {
                    value: mod_mul(*a, *b, *p),
                    modulus: *p,
                }
            }
            _ => panic!("field mismatch"),
        }
    }
}

impl core::ops::Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Rational(a) => Scalar::Rational(-a),
            Scalar::Residue { value, modulus } => Scalar::Residue {
                value: if *value == 0 { 0 } else { modulus - value },
                modulus: *modulus,
            },
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Rational(r) => {
                if r.denom().is_one() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
            Scalar::Residue { value, modulus } => write!(f, "{value} mod {modulus}"),
        }
    }
}

/// Errors of the exact-arithmetic boundary.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ScalarError {
    DivisionByZero,
    FieldMismatch,
    NotPrime(u64),
    PrimeTooLarge(u64),
    Parse(String),
}

impl fmt::Display for ScalarError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarError::DivisionByZero => write!(f, "division by zero"),
            ScalarError::FieldMismatch => write!(f, "field mismatch"),
            ScalarError::NotPrime(p) => write!(f, "{p} is not prime"),
            ScalarError::PrimeTooLarge(p) => write!(f, "prime {p} exceeds the 2^32 limit"),
            ScalarError::Parse(s) => write!(f, "cannot parse scalar {s:?}"),
        }
    }
}

impl core::error::Error for ScalarError {}

/// Rational from a big integer, for callers that already hold one.
pub fn rational_from_bigint(n: BigInt) -> Scalar {
    Scalar::Rational(BigRational::from_integer(n))
}

/// Signum helper for ordering rationals in tests and root normalization.
pub fn rational_is_negative(s: &Scalar) -> bool {
    match s {
        Scalar::Rational(r) => r.is_negative(),
        Scalar::Residue { .. } => false,
    }
}

/// All elements of a prime field, in residue order. Panics on the rationals.
pub fn enumerate_field(f: FieldSpec) -> Vec<Scalar> {
    match f {
        FieldSpec::PrimeField(p) => (0..p)
            .map(|v| Scalar::Residue {
                value: v,
                modulus: p,
            })
            .collect(),
        FieldSpec::Rationals => panic!("cannot enumerate the rationals"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const F5: FieldSpec = FieldSpec::PrimeField(5);
    const Q: FieldSpec = FieldSpec::Rationals;

    #[test]
    fn fraction_addition_reduces() {
        let a = Q.fraction(1, 2);
        let b = Q.fraction(1, 3);
        assert_eq!(&a + &b, Q.fraction(5, 6));
    }

    #[test]
    fn prime_field_inverse() {
        let three = F5.from_i64(3);
        assert_eq!(three.inv().unwrap(), F5.from_i64(2));
    }

    #[test]
    fn inverse_pair_multiplies_to_one() {
        let a = Q.fraction(2, 3);
        let b = Q.fraction(3, 2);
        assert!((&a * &b).is_one());
    }

    #[test]
    fn inv_of_zero_fails() {
        assert_eq!(Q.zero().inv(), Err(ScalarError::DivisionByZero));
        assert_eq!(F5.zero().inv(), Err(ScalarError::DivisionByZero));
    }

    #[test]
    #[should_panic(expected = "field mismatch")]
    fn mixed_fields_panic() {
        let _ = &Q.one() + &F5.one();
    }

    #[test]
    fn field_spec_validation() {
        assert!(FieldSpec::PrimeField(7).validate().is_ok());
        assert_eq!(
            FieldSpec::PrimeField(6).validate(),
            Err(ScalarError::NotPrime(6))
        );
        assert!(FieldSpec::PrimeField(4294967311).validate().is_err()); // > 2^32
    }

    #[test]
    fn display_forms() {
        assert_eq!(Q.fraction(-3, 4).to_string(), "-3/4");
        assert_eq!(Q.from_i64(7).to_string(), "7");
        assert_eq!(F5.from_i64(-1).to_string(), "4 mod 5");
    }

    #[test]
    fn parse_accepts_both_prime_forms() {
        assert_eq!(F5.parse_scalar("3").unwrap(), F5.from_i64(3));
        assert_eq!(F5.parse_scalar("3 mod 5").unwrap(), F5.from_i64(3));
        assert_eq!(F5.parse_scalar("3 mod 7"), Err(ScalarError::FieldMismatch));
    }

    fn arb_rational() -> impl Strategy<Value = Scalar> {
        (-50i64..50, 1i64..20).prop_map(|(n, d)| Q.fraction(n, d))
    }

    fn arb_residue() -> impl Strategy<Value = Scalar> {
        (0i64..7).prop_map(|v| FieldSpec::PrimeField(7).from_i64(v))
    }

    proptest! {
        #[test]
        fn rational_field_laws(a in arb_rational(), b in arb_rational(), c in arb_rational()) {
            prop_assert_eq!(&a + &b, &b + &a);
            prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            if !a.is_zero() {
                prop_assert!((&a * &a.inv().unwrap()).is_one());
            }
        }

        #[test]
        fn residue_field_laws(a in arb_residue(), b in arb_residue(), c in arb_residue()) {
            prop_assert_eq!(&a * &(&b * &c), &(&a * &b) * &c);
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            if !a.is_zero() {
                prop_assert!((&a * &a.inv().unwrap()).is_one());
            }
        }

        #[test]
        fn print_parse_round_trip(a in arb_rational(), b in arb_residue()) {
            prop_assert_eq!(Q.parse_scalar(&a.to_string()).unwrap(), a);
            prop_assert_eq!(FieldSpec::PrimeField(7).parse_scalar(&b.to_string()).unwrap(), b);
        }
    }
}
