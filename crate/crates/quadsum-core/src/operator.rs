//! Lazy column-finite endomorphisms of `V = ⊕_{n∈ℕ} F` and the declarative
//! operator-specification language that builds them.
//!
//! An operator is a pure column rule `index -> FinVector` behind an
//! append-only memo cache. Derived operators (sums, compositions, scalings)
//! hold references to their operands and evaluate recursively, so any
//! identity can be checked exactly on any finite set of columns while the
//! operator itself stays a genuinely infinite object.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::rc::Rc;
use alloc::string::String;
use alloc::vec::Vec;
use core::cell::RefCell;
use core::fmt;

use crate::poly::QuadraticPoly;
use crate::scalar::{FieldSpec, Scalar};
use crate::vector::FinVector;

/// A structural claim about an operator, supplied by its constructor.
///
/// Certificates let the stratification machinery give certified answers;
/// they are never assumed silently in heuristic mode, where window
/// validation audits the outcome instead.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StructureCertificate {
    /// Every vector has a finite-dimensional orbit.
    LocallyAlgebraic,
    /// For all `n >= generator`, the column of `e_n` is supported in
    /// `[n+1, n+band]`: applying the operator strictly raises leading
    /// indices, so the orbit of `e_generator` is free with strictly
    /// increasing pivots.
    FreeShiftLike {
        generator: usize,
        band: usize,
    },
    /// The index set splits into residue classes, each invariant, with a
    /// per-block structure claim.
    BlockDirectSum(Vec<(BlockSpec, BlockStructure)>),
    Unknown,
}

/// A residue class of indices: `{ n : n ≡ residue (mod modulus) }`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockSpec {
    pub modulus: usize,
    pub residue: usize,
}

impl BlockSpec {
    pub fn contains(&self, n: usize) -> bool {
        n % self.modulus == self.residue
    }

    /// Ambient index of the block-local position `k`.
    pub fn embed(&self, k: usize) -> usize {
        k * self.modulus + self.residue
    }
}

/// Structure of one invariant block of a block direct sum.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockStructure {
    /// All orbits inside the block are finite.
    Torsion,
    /// Shift-like inside the block from the given ambient index on.
    ShiftFree { generator: usize },
}

impl StructureCertificate {
    /// The certificate claims every orbit is finite.
    pub fn all_orbits_finite(&self) -> bool {
        match self {
            StructureCertificate::LocallyAlgebraic => true,
            StructureCertificate::BlockDirectSum(blocks) => blocks
                .iter()
                .all(|(_, s)| matches!(s, BlockStructure::Torsion)),
            _ => false,
        }
    }

    /// The certificate guarantees that the orbit of `v` has strictly
    /// increasing leading indices (hence is free).
    pub fn raises_orbit_of(&self, v: &FinVector) -> bool {
        match self {
            StructureCertificate::FreeShiftLike { generator, .. } => {
                v.leading_index().is_some_and(|l| l >= *generator)
            }
            StructureCertificate::BlockDirectSum(blocks) => {
                let Some(lead) = v.leading_index() else {
                    return false;
                };
                // All support in one block, and that block raises.
                blocks.iter().any(|(b, s)| match s {
                    BlockStructure::ShiftFree { generator } => {
                        lead >= *generator && v.support().all(|i| b.contains(i))
                    }
                    BlockStructure::Torsion => false,
                })
            }
            _ => false,
        }
    }

    /// The certificate claims the orbit of `v` is finite.
    pub fn orbit_certainly_finite(&self, v: &FinVector) -> bool {
        match self {
            StructureCertificate::LocallyAlgebraic => true,
            StructureCertificate::BlockDirectSum(blocks) => v.support().all(|i| {
                blocks
                    .iter()
                    .any(|(b, s)| b.contains(i) && matches!(s, BlockStructure::Torsion))
            }),
            _ => false,
        }
    }
}

struct OpInner {
    field: FieldSpec,
    rule: Box<dyn Fn(usize) -> FinVector>,
    cache: RefCell<BTreeMap<usize, Rc<FinVector>>>,
    certificate: StructureCertificate,
    /// When present, the column of `e_n` is supported in `[0, n + band]`;
    /// a violating column is a hard (panic) error.
    band: Option<usize>,
    /// When present, every column with index `>= zero_columns_from` is zero:
    /// the finite-support certificate needed by trace computations.
    zero_columns_from: Option<usize>,
}

/// A lazy column-finite endomorphism. Cheap to clone (shared memo cache).
#[derive(Clone)]
pub struct Endomorphism {
    inner: Rc<OpInner>,
}

impl fmt::Debug for Endomorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Endomorphism")
            .field("field", &self.inner.field)
            .field("certificate", &self.inner.certificate)
            .field("band", &self.inner.band)
            .finish()
    }
}

impl Endomorphism {
    pub fn from_rule(
        field: FieldSpec,
        rule: impl Fn(usize) -> FinVector + 'static,
    ) -> Endomorphism {
        Endomorphism::new(
            field,
            Box::new(rule),
            StructureCertificate::Unknown,
            None,
            None,
        )
    }

    fn new(
        field: FieldSpec,
        rule: Box<dyn Fn(usize) -> FinVector>,
        certificate: StructureCertificate,
        band: Option<usize>,
        zero_columns_from: Option<usize>,
    ) -> Endomorphism {
        Endomorphism {
            inner: Rc::new(OpInner {
                field,
                rule,
                cache: RefCell::new(BTreeMap::new()),
                certificate,
                band,
                zero_columns_from,
            }),
        }
    }

    /// Same columns, different certificate. The original's memo cache keeps
    /// serving through the wrapper.
    pub fn with_certificate(&self, certificate: StructureCertificate) -> Endomorphism {
        let base = self.clone();
        Endomorphism::new(
            self.inner.field,
            Box::new(move |n| base.column(n)),
            certificate,
            self.inner.band,
            self.inner.zero_columns_from,
        )
    }

    /// Declares a band bound `b`: every column of `e_n` must be supported in
    /// `[0, n+b]` (checked on every computed column).
    pub fn with_band(&self, band: usize) -> Endomorphism {
        let base = self.clone();
        Endomorphism::new(
            self.inner.field,
            Box::new(move |n| base.column(n)),
            self.inner.certificate.clone(),
            Some(band),
            self.inner.zero_columns_from,
        )
    }

    /// Declares that all columns with index `>= from` are zero.
    pub fn with_zero_columns_from(&self, from: usize) -> Endomorphism {
        let base = self.clone();
        Endomorphism::new(
            self.inner.field,
            Box::new(move |n| base.column(n)),
            self.inner.certificate.clone(),
            self.inner.band,
            Some(from),
        )
    }

    pub fn field(&self) -> FieldSpec {
        self.inner.field
    }

    pub fn certificate(&self) -> &StructureCertificate {
        &self.inner.certificate
    }

    pub fn band(&self) -> Option<usize> {
        self.inner.band
    }

    pub fn zero_columns_from(&self) -> Option<usize> {
        self.inner.zero_columns_from
    }

    /// The image of `e_n`, memoized.
    pub fn column(&self, n: usize) -> FinVector {
        (*self.column_rc(n)).clone()
    }

    /// The image of `e_n` behind a shared handle; the clone-free access for
    /// hot paths.
    pub fn column_rc(&self, n: usize) -> Rc<FinVector> {
        if let Some(v) = self.inner.cache.borrow().get(&n) {
            return Rc::clone(v);
        }
        let v = Rc::new(self.compute_column(n));
        self.inner
            .cache
            .borrow_mut()
            .entry(n)
            .or_insert_with(|| Rc::clone(&v));
        v
    }

    /// Recomputes the column rule bypassing the memo cache (purity audits).
    pub fn column_fresh(&self, n: usize) -> FinVector {
        self.compute_column(n)
    }

    fn compute_column(&self, n: usize) -> FinVector {
        let v = (self.inner.rule)(n);
        assert!(
            v.field() == self.inner.field,
            "field mismatch in column rule"
        );
        if let Some(b) = self.inner.band {
            if let Some(m) = v.max_index() {
                assert!(
                    m <= n + b,
                    "band violation: column {n} has support at {m}, beyond n + {b}"
                );
            }
        }
        if let Some(z) = self.inner.zero_columns_from {
            if n >= z {
                assert!(
                    v.is_zero(),
                    "finite-support violation: column {n} is nonzero at or beyond {z}"
                );
            }
        }
        v
    }

    /// Linear extension of the column rule.
    pub fn apply(&self, x: &FinVector) -> FinVector {
        assert!(x.field() == self.inner.field, "field mismatch");
        let mut out = FinVector::zero(self.inner.field);
        for (i, c) in x.iter() {
            out.add_scaled(c, &self.column_rc(i));
        }
        out
    }

    pub fn zero(field: FieldSpec) -> Endomorphism {
        Endomorphism::new(
            field,
            Box::new(move |_| FinVector::zero(field)),
            StructureCertificate::LocallyAlgebraic,
            Some(0),
            Some(0),
        )
    }

    pub fn identity(field: FieldSpec) -> Endomorphism {
        Endomorphism::scalar(field.one())
    }

    /// `λ · id`.
    pub fn scalar(value: Scalar) -> Endomorphism {
        let field = value.field();
        if value.is_zero() {
            return Endomorphism::zero(field);
        }
        Endomorphism::new(
            field,
            Box::new(move |n| FinVector::basis(field, n).scale(&value)),
            StructureCertificate::LocallyAlgebraic,
            Some(0),
            None,
        )
    }

    /// `self + other`.
    pub fn add(&self, other: &Endomorphism) -> Endomorphism {
        assert!(self.field() == other.field(), "field mismatch");
        let (a, b) = (self.clone(), other.clone());
        Endomorphism::new(
            self.field(),
            Box::new(move |n| &*a.column_rc(n) + &b.column_rc(n)),
            StructureCertificate::Unknown,
            max_band(self.band(), other.band()),
            max_zero_from(self.zero_columns_from(), other.zero_columns_from()),
        )
    }

    /// `self - other`.
    pub fn sub(&self, other: &Endomorphism) -> Endomorphism {
        assert!(self.field() == other.field(), "field mismatch");
        let (a, b) = (self.clone(), other.clone());
        Endomorphism::new(
            self.field(),
            Box::new(move |n| &*a.column_rc(n) - &b.column_rc(n)),
            StructureCertificate::Unknown,
            max_band(self.band(), other.band()),
            max_zero_from(self.zero_columns_from(), other.zero_columns_from()),
        )
    }

    /// `λ · self`.
    pub fn scale(&self, factor: &Scalar) -> Endomorphism {
        assert!(factor.field() == self.field(), "field mismatch");
        if factor.is_zero() {
            return Endomorphism::zero(self.field());
        }
        let a = self.clone();
        let c = factor.clone();
        Endomorphism::new(
            self.field(),
            Box::new(move |n| a.column(n).scale(&c)),
            self.inner.certificate.clone(),
            self.band(),
            self.zero_columns_from(),
        )
    }

    /// `self ∘ other`: column `n` is `self(other(e_n))`.
    pub fn compose(&self, other: &Endomorphism) -> Endomorphism {
        assert!(self.field() == other.field(), "field mismatch");
        let (a, b) = (self.clone(), other.clone());
        Endomorphism::new(
            self.field(),
            Box::new(move |n| a.apply(&b.column_rc(n))),
            StructureCertificate::Unknown,
            sum_band(self.band(), other.band()),
            other.zero_columns_from(),
        )
    }

    /// `self - λ·id`, preserving a locally-algebraic certificate (scalar
    /// shifts do not change orbit finiteness).
    pub fn shift_by_scalar(&self, lambda: &Scalar) -> Endomorphism {
        if lambda.is_zero() {
            return self.clone();
        }
        let shifted = self.sub(&Endomorphism::scalar(lambda.clone()));
        if self.certificate().all_orbits_finite() {
            shifted.with_certificate(StructureCertificate::LocallyAlgebraic)
        } else {
            shifted
        }
    }

    /// `p(self)` for a monic quadratic `t^2 + bt + c`.
    pub fn poly_image(&self, p: &QuadraticPoly) -> Endomorphism {
        assert!(p.field() == self.field(), "field mismatch");
        let field = self.field();
        let a = self.clone();
        let (b, c) = (p.linear().clone(), p.constant().clone());
        Endomorphism::new(
            field,
            Box::new(move |n| {
                let first = a.column_rc(n);
                let mut out = a.apply(&first);
                out.add_scaled(&b, &first);
                out.add_scaled(&c, &FinVector::basis(field, n));
                out
            }),
            StructureCertificate::Unknown,
            self.band().map(|b| 2 * b),
            None,
        )
    }

    /// `p(self)` for a monic polynomial given by ascending coefficients
    /// `[c_0, ..., c_{d-1}, 1]`.
    pub fn poly_image_coeffs(&self, coeffs: &[Scalar]) -> Endomorphism {
        assert!(!coeffs.is_empty(), "empty polynomial");
        assert!(coeffs.last().unwrap().is_one(), "polynomial must be monic");
        for c in coeffs {
            assert!(c.field() == self.field(), "field mismatch");
        }
        let field = self.field();
        let a = self.clone();
        let cs: Vec<Scalar> = coeffs.to_vec();
        let deg = coeffs.len() - 1;
        Endomorphism::new(
            field,
            Box::new(move |n| {
                let mut power = FinVector::basis(field, n);
                let mut out = FinVector::zero(field);
                for (k, c) in cs.iter().enumerate() {
                    out.add_scaled(c, &power);
                    if k + 1 < cs.len() {
                        power = a.apply(&power);
                    }
                }
                out
            }),
            StructureCertificate::Unknown,
            self.band().map(|b| deg * b),
            None,
        )
    }

    /// Exact dense coordinates of the first `n` columns. Row count is
    /// `1 + max support index` over those columns (0 when all are zero).
    pub fn window_matrix(&self, n: usize) -> WindowMatrix {
        assert!(n >= 1, "window must cover at least one column");
        let cols: Vec<FinVector> = (0..n).map(|j| self.column(j)).collect();
        let rows = cols
            .iter()
            .filter_map(|c| c.max_index())
            .max()
            .map_or(0, |m| m + 1);
        let entries = cols
            .iter()
            .map(|c| (0..rows).map(|i| c.coeff(i)).collect())
            .collect();
        WindowMatrix {
            rows,
            cols: n,
            entries,
        }
    }
}

/// Column-major exact window of an operator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WindowMatrix {
    pub rows: usize,
    pub cols: usize,
    /// `entries[j][i]` is the coefficient of `e_i` in the image of `e_j`.
    pub entries: Vec<Vec<Scalar>>,
}

fn max_band(a: Option<usize>, b: Option<usize>) -> Option<usize> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.max(y)),
        _ => None,
    }
}

fn sum_band(a: Option<usize>, b: Option<usize>) -> Option<usize> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x + y),
        _ => None,
    }
}

fn max_zero_from(a: Option<usize>, b: Option<usize>) -> Option<usize> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.max(y)),
        _ => None,
    }
}

/// One Jordan block: `size` indices with `u(e_k) = λ e_k + e_{k+1}` inside
/// the block and `u(top) = λ · top`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JordanBlock {
    pub size: usize,
    pub eigenvalue: Scalar,
}

/// How Jordan blocks tile the index set. All blocks are finite, so the
/// resulting operator is locally algebraic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum JordanPattern {
    /// The listed blocks repeat forever.
    Cycle { blocks: Vec<JordanBlock> },
    /// Sizes `start_size, start_size + step, start_size + 2·step, ...`, all
    /// with one eigenvalue.
    Arithmetic {
        start_size: usize,
        step: usize,
        eigenvalue: Scalar,
    },
}

/// One band of a banded periodic operator: sends `e_n` to
/// `coeffs[n mod coeffs.len()] · e_{n+offset}` (skipped when the target
/// index would be negative).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Band {
    pub offset: isize,
    pub coeffs: Vec<Scalar>,
}

/// Declarative description of a column-finite operator: the external
/// ingestion format.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OperatorSpec {
    /// `e_n -> e_{n+1}`.
    Shift,
    /// `λ · id`.
    Scalar {
        value: Scalar,
    },
    /// Diagonal with the given entries, repeating when `periodic`, zero
    /// beyond the list otherwise.
    Diagonal {
        entries: Vec<Scalar>,
        periodic: bool,
    },
    JordanBlocks {
        pattern: JordanPattern,
    },
    BandedPeriodic {
        bands: Vec<Band>,
    },
    /// `base` with finitely many columns overridden.
    FinitePatch {
        base: Box<OperatorSpec>,
        patches: BTreeMap<usize, Vec<(usize, Scalar)>>,
    },
    Sum {
        terms: Vec<OperatorSpec>,
    },
    /// `factors[0] ∘ factors[1] ∘ …` (the last factor applies first).
    Compose {
        factors: Vec<OperatorSpec>,
    },
    Scale {
        factor: Scalar,
        inner: Box<OperatorSpec>,
    },
}

/// Errors raised when denoting an operator from a spec.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OperatorError {
    FieldMismatch,
    Malformed(String),
}

impl fmt::Display for OperatorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperatorError::FieldMismatch => {
                write!(f, "scalar does not belong to the requested field")
            }
            OperatorError::Malformed(m) => write!(f, "malformed operator spec: {m}"),
        }
    }
}

impl core::error::Error for OperatorError {}

impl OperatorSpec {
    /// Builds the operator denoted by this spec over `field`, inferring a
    /// structure certificate where the spec guarantees one.
    pub fn build(&self, field: FieldSpec) -> Result<Endomorphism, OperatorError> {
        self.check_scalars(field)?;
        Ok(self.build_unchecked(field))
    }

    fn check_scalars(&self, field: FieldSpec) -> Result<(), OperatorError> {
        let ok = |s: &Scalar| -> Result<(), OperatorError> {
            if s.field() == field {
                Ok(())
            } else {
                Err(OperatorError::FieldMismatch)
            }
        };
        match self {
            OperatorSpec::Shift => Ok(()),
            OperatorSpec::Scalar { value } => ok(value),
            OperatorSpec::Diagonal { entries, .. } => entries.iter().try_for_each(ok),
            OperatorSpec::JordanBlocks { pattern } => match pattern {
                JordanPattern::Cycle { blocks } => {
                    if blocks.is_empty() || blocks.iter().any(|b| b.size == 0) {
                        return Err(OperatorError::Malformed(String::from(
                            "jordan blocks must be nonempty with positive sizes",
                        )));
                    }
                    blocks.iter().map(|b| &b.eigenvalue).try_for_each(ok)
                }
                JordanPattern::Arithmetic {
                    start_size,
                    eigenvalue,
                    ..
                } => {
                    if *start_size == 0 {
                        return Err(OperatorError::Malformed(String::from(
                            "jordan start size must be positive",
                        )));
                    }
                    ok(eigenvalue)
                }
            },
            OperatorSpec::BandedPeriodic { bands } => {
                for band in bands {
                    if band.coeffs.is_empty() {
                        return Err(OperatorError::Malformed(String::from(
                            "banded pattern must be nonempty",
                        )));
                    }
                    band.coeffs.iter().try_for_each(ok)?;
                }
                Ok(())
            }
            OperatorSpec::FinitePatch { base, patches } => {
                base.check_scalars(field)?;
                patches
                    .values()
                    .flat_map(|col| col.iter().map(|(_, s)| s))
                    .try_for_each(ok)
            }
            OperatorSpec::Sum { terms } => {
                if terms.is_empty() {
                    return Err(OperatorError::Malformed(String::from("empty sum")));
                }
                terms.iter().try_for_each(|t| t.check_scalars(field))
            }
            OperatorSpec::Compose { factors } => {
                if factors.is_empty() {
                    return Err(OperatorError::Malformed(String::from("empty composition")));
                }
                factors.iter().try_for_each(|t| t.check_scalars(field))
            }
            OperatorSpec::Scale { factor, inner } => {
                ok(factor)?;
                inner.check_scalars(field)
            }
        }
    }

    fn build_unchecked(&self, field: FieldSpec) -> Endomorphism {
        match self {
            OperatorSpec::Shift => Endomorphism::new(
                field,
                Box::new(move |n| FinVector::basis(field, n + 1)),
                StructureCertificate::FreeShiftLike {
                    generator: 0,
                    band: 1,
                },
                Some(1),
                None,
            ),
            OperatorSpec::Scalar { value } => Endomorphism::scalar(value.clone()),
            OperatorSpec::Diagonal { entries, periodic } => {
                let entries = entries.clone();
                let periodic = *periodic;
                let zero_from = if periodic {
                    if entries.iter().all(|e| e.is_zero()) {
                        Some(0)
                    } else {
                        None
                    }
                } else {
                    Some(entries.len())
                };
                let es = entries.clone();
                Endomorphism::new(
                    field,
                    Box::new(move |n| {
                        let c = if periodic {
                            es[n % es.len()].clone()
                        } else if n < es.len() {
                            es[n].clone()
                        } else {
                            field.zero()
                        };
                        FinVector::basis(field, n).scale(&c)
                    }),
                    StructureCertificate::LocallyAlgebraic,
                    Some(0),
                    zero_from,
                )
            }
            OperatorSpec::JordanBlocks { pattern } => {
                let pattern = pattern.clone();
                Endomorphism::new(
                    field,
                    Box::new(move |n| {
                        let (top, eigenvalue) = pattern.locate(n);
                        let mut v = FinVector::basis(field, n).scale(&eigenvalue);
                        if !top {
                            v.add_scaled(&field.one(), &FinVector::basis(field, n + 1));
                        }
                        v
                    }),
                    StructureCertificate::LocallyAlgebraic,
                    Some(1),
                    None,
                )
            }
            OperatorSpec::BandedPeriodic { bands } => {
                let bands = bands.clone();
                let max_up = bands
                    .iter()
                    .map(|b| b.offset.max(0) as usize)
                    .max()
                    .unwrap_or(0);
                let cert = if bands.iter().all(|b| b.offset <= 0) {
                    // At or below the diagonal: every orbit stays inside
                    // span(e_0..e_n), so the operator is locally algebraic.
                    StructureCertificate::LocallyAlgebraic
                } else if bands.iter().all(|b| b.offset >= 1) {
                    StructureCertificate::FreeShiftLike {
                        generator: 0,
                        band: max_up,
                    }
                } else {
                    StructureCertificate::Unknown
                };
                Endomorphism::new(
                    field,
                    Box::new(move |n| {
                        let mut v = FinVector::zero(field);
                        for band in &bands {
                            let c = band.coeffs[n % band.coeffs.len()].clone();
                            let target = n as isize + band.offset;
                            if target >= 0 && !c.is_zero() {
                                let cur = v.coeff(target as usize);
                                v.set(target as usize, &cur + &c);
                            }
                        }
                        v
                    }),
                    cert,
                    Some(max_up),
                    None,
                )
            }
            OperatorSpec::FinitePatch { base, patches } => {
                let base_op = base.build_unchecked(field);
                let max_patched = patches.keys().next_back().copied();
                let patch_cols: BTreeMap<usize, FinVector> = patches
                    .iter()
                    .map(|(col, entries)| {
                        (
                            *col,
                            FinVector::from_entries(
                                field,
                                entries.iter().map(|(i, s)| (*i, s.clone())),
                            ),
                        )
                    })
                    .collect();
                let cert = match base_op.certificate() {
                    StructureCertificate::LocallyAlgebraic => {
                        // Finite-rank perturbations keep orbits inside the sum
                        // of finitely many base orbits.
                        StructureCertificate::LocallyAlgebraic
                    }
                    StructureCertificate::FreeShiftLike { generator, band } => {
                        StructureCertificate::FreeShiftLike {
                            generator: (*generator).max(max_patched.map_or(0, |m| m + 1)),
                            band: *band,
                        }
                    }
                    _ => StructureCertificate::Unknown,
                };
                let band = match (base_op.band(), max_patched) {
                    (Some(b), _) => {
                        let overshoot = patch_cols
                            .iter()
                            .filter_map(|(col, v)| v.max_index().map(|m| m.saturating_sub(*col)))
                            .max()
                            .unwrap_or(0);
                        Some(b.max(overshoot))
                    }
                    (None, _) => None,
                };
                let zero_from = base_op
                    .zero_columns_from()
                    .map(|z| z.max(max_patched.map_or(0, |m| m + 1)));
                Endomorphism::new(
                    field,
                    Box::new(move |n| match patch_cols.get(&n) {
                        Some(v) => v.clone(),
                        None => base_op.column(n),
                    }),
                    cert,
                    band,
                    zero_from,
                )
            }
            OperatorSpec::Sum { terms } => {
                let mut ops = terms.iter().map(|t| t.build_unchecked(field));
                let first = ops.next().expect("validated nonempty");
                ops.fold(first, |acc, op| acc.add(&op))
            }
            OperatorSpec::Compose { factors } => {
                let mut ops = factors.iter().map(|t| t.build_unchecked(field));
                let first = ops.next().expect("validated nonempty");
                ops.fold(first, |acc, op| acc.compose(&op))
            }
            OperatorSpec::Scale { factor, inner } => inner.build_unchecked(field).scale(factor),
        }
    }
}

impl JordanPattern {
    /// For ambient index `n`: whether `n` is the top of its block, and the
    /// block's eigenvalue.
    fn locate(&self, n: usize) -> (bool, Scalar) {
        match self {
            JordanPattern::Cycle { blocks } => {
                let total: usize = blocks.iter().map(|b| b.size).sum();
                let mut r = n % total;
                for b in blocks {
                    if r < b.size {
                        return (r == b.size - 1, b.eigenvalue.clone());
                    }
                    r -= b.size;
                }
                unreachable!("residue exhausted the cycle");
            }
            JordanPattern::Arithmetic {
                start_size,
                step,
                eigenvalue,
            } => {
                let mut size = *start_size;
                let mut offset = n;
                loop {
                    if offset < size {
                        return (offset == size - 1, eigenvalue.clone());
                    }
                    offset -= size;
                    size += step;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const Q: FieldSpec = FieldSpec::Rationals;

    fn e(n: usize) -> FinVector {
        FinVector::basis(Q, n)
    }

    fn shift() -> Endomorphism {
        OperatorSpec::Shift.build(Q).unwrap()
    }

    #[test]
    fn shift_columns() {
        let u = shift();
        for n in 0..8 {
            assert_eq!(u.column(n), e(n + 1));
        }
        assert_eq!(
            u.certificate(),
            &StructureCertificate::FreeShiftLike {
                generator: 0,
                band: 1
            }
        );
    }

    #[test]
    fn jordan_arithmetic_blocks() {
        // Sizes 1, 2, 3, ... eigenvalue 0: blocks at {0}, {1,2}, {3,4,5}, ...
        let spec = OperatorSpec::JordanBlocks {
            pattern: JordanPattern::Arithmetic {
                start_size: 1,
                step: 1,
                eigenvalue: Q.zero(),
            },
        };
        let u = spec.build(Q).unwrap();
        assert!(u.column(0).is_zero()); // block {0} top
        assert_eq!(u.column(1), e(2));
        assert!(u.column(2).is_zero()); // top of {1,2}
        assert_eq!(u.column(3), e(4));
        assert_eq!(u.column(4), e(5));
        assert!(u.column(5).is_zero());
        assert_eq!(u.certificate(), &StructureCertificate::LocallyAlgebraic);
    }

    #[test]
    fn jordan_block_size3_kills_top() {
        let spec = OperatorSpec::JordanBlocks {
            pattern: JordanPattern::Cycle {
                blocks: alloc::vec![JordanBlock {
                    size: 3,
                    eigenvalue: Q.zero()
                }],
            },
        };
        let u = spec.build(Q).unwrap();
        assert_eq!(u.apply(&e(2)), FinVector::zero(Q));
        assert_eq!(u.apply(&e(0)), e(1));
    }

    #[test]
    fn finite_patch_overrides_one_column() {
        let spec = OperatorSpec::FinitePatch {
            base: Box::new(OperatorSpec::Shift),
            patches: [(0usize, alloc::vec![])].into_iter().collect(),
        };
        let u = spec.build(Q).unwrap();
        assert!(u.column(0).is_zero());
        assert_eq!(u.column(1), e(2));
        assert_eq!(
            u.certificate(),
            &StructureCertificate::FreeShiftLike {
                generator: 1,
                band: 1
            }
        );
    }

    #[test]
    fn apply_is_linear_on_combinations() {
        let u = shift();
        let x = FinVector::from_entries(Q, [(0, Q.from_i64(2)), (4, Q.from_i64(3))]);
        let expect = FinVector::from_entries(Q, [(1, Q.from_i64(2)), (5, Q.from_i64(3))]);
        assert_eq!(u.apply(&x), expect);
    }

    #[test]
    fn combine_add_cancels() {
        let u = shift();
        let z = u.add(&u.scale(&Q.from_i64(-1)));
        for n in 0..6 {
            assert!(z.column(n).is_zero());
        }
    }

    #[test]
    fn compose_shift_twice() {
        let u = shift();
        let uu = u.compose(&u);
        assert_eq!(uu.column(0), e(2));
        assert_eq!(uu.band(), Some(2));
    }

    #[test]
    fn scalar_minus_lambda_identity_vanishes() {
        let u = Endomorphism::scalar(Q.fraction(3, 7));
        let z = u.sub(&Endomorphism::identity(Q).scale(&Q.fraction(3, 7)));
        for n in 0..5 {
            assert!(z.column(n).is_zero());
        }
    }

    #[test]
    fn poly_image_on_idempotent_diagonal() {
        // diagonal(0,1,0,1,...) is idempotent, so t^2 - t kills it.
        let spec = OperatorSpec::Diagonal {
            entries: alloc::vec![Q.zero(), Q.one()],
            periodic: true,
        };
        let u = spec.build(Q).unwrap();
        let p = QuadraticPoly::idempotent(Q);
        let pu = u.poly_image(&p);
        for n in 0..10 {
            assert!(pu.column(n).is_zero(), "column {n}");
        }
    }

    #[test]
    fn poly_image_square_on_shift_is_nonzero() {
        let u = shift();
        let pu = u.poly_image(&QuadraticPoly::square_zero(Q));
        assert_eq!(pu.column(0), e(2));
    }

    #[test]
    fn general_poly_image_matches_quadratic_path() {
        let u = shift();
        let p = QuadraticPoly::monic(Q.from_i64(-2), Q.from_i64(1));
        let via_quadratic = u.poly_image(&p);
        let via_coeffs = u.poly_image_coeffs(&[Q.from_i64(1), Q.from_i64(-2), Q.from_i64(1)]);
        for n in 0..6 {
            assert_eq!(via_quadratic.column(n), via_coeffs.column(n));
        }
    }

    #[test]
    fn window_matrix_shapes() {
        let u = shift();
        let w = u.window_matrix(3);
        assert_eq!((w.rows, w.cols), (4, 3));
        assert_eq!(w.entries[0][1], Q.one()); // column 0 = e_1

        let z = Endomorphism::zero(Q).window_matrix(5);
        assert_eq!((z.rows, z.cols), (0, 5));

        let d = OperatorSpec::Diagonal {
            entries: alloc::vec![Q.from_i64(1), Q.from_i64(2), Q.from_i64(3)],
            periodic: false,
        }
        .build(Q)
        .unwrap()
        .window_matrix(3);
        assert_eq!((d.rows, d.cols), (3, 3));
        assert_eq!(d.entries[1][1], Q.from_i64(2));
    }

    #[test]
    #[should_panic(expected = "band violation")]
    fn band_violation_is_hard_error() {
        let u = Endomorphism::from_rule(Q, |n| FinVector::basis(Q, n + 5)).with_band(1);
        let _ = u.column(0);
    }

    #[test]
    fn memoized_and_fresh_columns_agree() {
        let u = shift().add(&Endomorphism::identity(Q));
        let first = u.column(3);
        assert_eq!(u.column(3), first);
        assert_eq!(u.column_fresh(3), first);
    }

    #[test]
    fn sum_spec_requires_terms() {
        let err = OperatorSpec::Sum {
            terms: alloc::vec![],
        }
        .build(Q)
        .unwrap_err();
        assert!(matches!(err, OperatorError::Malformed(_)));
    }

    #[test]
    fn field_mismatch_detected() {
        let spec = OperatorSpec::Scalar {
            value: FieldSpec::PrimeField(5).one(),
        };
        assert_eq!(spec.build(Q).unwrap_err(), OperatorError::FieldMismatch);
    }

    proptest! {
        #[test]
        fn compose_agrees_with_nested_apply(n in 0usize..20) {
            let u = shift();
            let v = OperatorSpec::JordanBlocks {
                pattern: JordanPattern::Arithmetic {
                    start_size: 1,
                    step: 1,
                    eigenvalue: Q.zero(),
                },
            }
            .build(Q)
            .unwrap();
            let uv = u.compose(&v);
            prop_assert_eq!(uv.column(n), u.apply(&v.column(n)));
        }

        #[test]
        fn apply_linearity(
            i in 0usize..12,
            j in 0usize..12,
            a in -9i64..9,
            b in -9i64..9,
        ) {
            let u = shift().add(&Endomorphism::scalar(Q.from_i64(2)));
            let x = FinVector::basis(Q, i);
            let y = FinVector::basis(Q, j);
            let mut combo = x.scale(&Q.from_i64(a));
            combo.add_scaled(&Q.from_i64(b), &y);
            let mut rhs = u.apply(&x).scale(&Q.from_i64(a));
            rhs.add_scaled(&Q.from_i64(b), &u.apply(&y));
            prop_assert_eq!(u.apply(&combo), rhs);
        }
    }
}
