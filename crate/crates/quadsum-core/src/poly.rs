//! Monic quadratic polynomials `t^2 + b t + c` and exact root extraction.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{Signed, Zero};

use crate::scalar::{FieldSpec, Scalar};

/// A monic degree-2 polynomial over a fixed field, with its ordered root
/// pair when it splits.
///
/// Root order is the deterministic normalization: numeric order over the
/// rationals, residue order over `F_p`. When roots are present,
/// `(t - x)(t - y)` reproduces the coefficients; this is checked at
/// construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadraticPoly {
    field: FieldSpec,
    linear: Scalar,
    constant: Scalar,
    roots: Option<(Scalar, Scalar)>,
}

impl QuadraticPoly {
    /// `t^2 + linear*t + constant`, without attempting to split.
    pub fn monic(linear: Scalar, constant: Scalar) -> Self {
        let field = linear.field();
        assert!(constant.field() == field, "field mismatch");
        QuadraticPoly {
            field,
            linear,
            constant,
            roots: None,
        }
    }

    /// `(t - x)(t - y)` with the ordered pair normalized.
    pub fn from_roots(x: Scalar, y: Scalar) -> Self {
        let field = x.field();
        assert!(y.field() == field, "field mismatch");
        let (x, y) = if x.canonical_cmp(&y) == core::cmp::Ordering::Greater {
            (y, x)
        } else {
            (x, y)
        };
        let linear = -&(&x + &y);
        let constant = &x * &y;
        QuadraticPoly {
            field,
            linear,
            constant,
            roots: Some((x, y)),
        }
    }

    /// `t^2`.
    pub fn square_zero(field: FieldSpec) -> Self {
        Self::from_roots(field.zero(), field.zero())
    }

    /// `t^2 - t`.
    pub fn idempotent(field: FieldSpec) -> Self {
        Self::from_roots(field.zero(), field.one())
    }

    /// The canonical form `t^2 - a t`.
    pub fn canonical(a: Scalar) -> Self {
        Self::from_roots(a.field().zero(), a)
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    /// Coefficient of `t`.
    pub fn linear(&self) -> &Scalar {
        &self.linear
    }

    /// Constant coefficient.
    pub fn constant(&self) -> &Scalar {
        &self.constant
    }

    /// Ordered roots, when known to split.
    pub fn roots(&self) -> Option<(&Scalar, &Scalar)> {
        self.roots.as_ref().map(|(x, y)| (x, y))
    }

    /// Monic coefficient triple `[1, b, c]`.
    pub fn coefficients(&self) -> [Scalar; 3] {
        [self.field.one(), self.linear.clone(), self.constant.clone()]
    }

    pub fn eval(&self, s: &Scalar) -> Scalar {
        &(&(s * s) + &(&self.linear * s)) + &self.constant
    }

    /// Finds the ordered roots in the ground field, or reports `NotSplit`.
    ///
    /// Over the rationals this is the exact discriminant-square test; over
    /// `F_p` an exhaustive residue scan (desk-scale primes only).
    pub fn split(self) -> Result<QuadraticPoly, NotSplit> {
        if self.roots.is_some() {
            return Ok(self);
        }
        match self.field {
            FieldSpec::Rationals => {
                let b = self.linear.as_rational().unwrap().clone();
                let c = self.constant.as_rational().unwrap().clone();
                let four = BigRational::from_integer(BigInt::from(4));
                let disc = &b * &b - four * &c;
                let root = rational_sqrt(&disc).ok_or(NotSplit)?;
                let two = BigRational::from_integer(BigInt::from(2));
                let x = (-&b - &root) / &two;
                let y = (-&b + &root) / &two;
                Ok(QuadraticPoly::from_roots(
                    Scalar::Rational(x),
                    Scalar::Rational(y),
                ))
            }
            FieldSpec::PrimeField(_) => {
                for x in crate::scalar::enumerate_field(self.field) {
                    if self.eval(&x).is_zero() {
                        // t^2 + bt + c = (t - x)(t - y) forces y = -b - x.
                        let y = &(-&self.linear) - &x;
                        return Ok(QuadraticPoly::from_roots(x, y));
                    }
                }
                Err(NotSplit)
            }
        }
    }
}

/// Exact square root of a non-negative rational, if it is a perfect square.
fn rational_sqrt(r: &BigRational) -> Option<BigRational> {
    if r.is_negative() {
        return None;
    }
    if r.is_zero() {
        return Some(BigRational::zero());
    }
    let ns = r.numer().sqrt();
    let ds = r.denom().sqrt();
    if &(&ns * &ns) == r.numer() && &(&ds * &ds) == r.denom() {
        Some(BigRational::new(ns, ds))
    } else {
        None
    }
}

/// The polynomial has no root in the ground field.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NotSplit;

impl fmt::Display for NotSplit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "polynomial does not split over the ground field")
    }
}

impl core::error::Error for NotSplit {}

impl fmt::Display for QuadraticPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t^2")?;
        if !self.linear.is_zero() {
            write!(f, " + ({})t", self.linear)?;
        }
        if !self.constant.is_zero() {
            write!(f, " + ({})", self.constant)?;
        }
        Ok(())
    }
}

/// Parses a coefficient triple `[lead, linear, constant]` in text form; the
/// leading coefficient must be 1.
pub fn poly_from_strings(field: FieldSpec, triple: &[String]) -> Option<QuadraticPoly> {
    if triple.len() != 3 {
        return None;
    }
    let lead = field.parse_scalar(&triple[0]).ok()?;
    if !lead.is_one() {
        return None;
    }
    let linear = field.parse_scalar(&triple[1]).ok()?;
    let constant = field.parse_scalar(&triple[2]).ok()?;
    Some(QuadraticPoly::monic(linear, constant))
}

/// The preset polynomial lists: `n` copies of `t^2` or of `t^2 - t`.
pub fn preset(field: FieldSpec, name: &str) -> Option<Vec<QuadraticPoly>> {
    let (poly, count) = match name {
        "squarezero" => (QuadraticPoly::square_zero(field), 4),
        "idempotents" => (QuadraticPoly::idempotent(field), 4),
        "squarezero-preset-2" | "squarezero-2" => (QuadraticPoly::square_zero(field), 2),
        "idempotents-preset-2" | "idempotents-2" => (QuadraticPoly::idempotent(field), 2),
        _ => return None,
    };
    Some(alloc::vec![poly; count])
}
