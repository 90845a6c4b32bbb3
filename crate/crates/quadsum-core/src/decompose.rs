//! Decomposition pipelines: writing an operator as a sum of quadratic
//! operators with prescribed split annihilating polynomials.
//!
//! The route: normalize the polynomials to `t² - c t` (collecting a scalar
//! shift), stratify the shifted operator, peel off two quadratic summands
//! whose removal leaves an elementary operator, split that remainder into
//! two more via an explicit model pair transported through its free module
//! structure, and re-add the collected scalars. Every produced identity is
//! exact on any column it is ever evaluated at; the attached report samples
//! a window.

use alloc::rc::Rc;
use alloc::string::String;
use alloc::vec::Vec;
use core::cell::RefCell;
use core::fmt;

use crate::config::Config;
use crate::connect::{elementary_witness, ConnectError, ElementaryWitness};
use crate::operator::{BlockSpec, Endomorphism};
use crate::poly::{NotSplit, QuadraticPoly};
use crate::scalar::Scalar;
use crate::span::{Dimension, FamilyError, FamilyMembership, FamilySpan};
use crate::stratify::{build_stratification, StratKind, Stratification, StratifyError};
use crate::vector::FinVector;
use crate::verify::{check_summands, ValidationReport};

/// Errors of the decomposition pipelines.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DecomposeError {
    NotSplit,
    PolyCount { expected: usize, got: usize },
    FieldMismatch,
    HypothesisViolated { detail: String },
    BlockOverlap { detail: String },
    PolyMismatch,
    Stratify(StratifyError),
    Connect(ConnectError),
}

impl fmt::Display for DecomposeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecomposeError::NotSplit => write!(f, "polynomial does not split"),
            DecomposeError::PolyCount { expected, got } => {
                write!(f, "expected {expected} polynomials, got {got}")
            }
            DecomposeError::FieldMismatch => write!(f, "operator and polynomial fields differ"),
            DecomposeError::HypothesisViolated { detail } => {
                write!(f, "pipeline hypothesis violated: {detail}")
            }
            DecomposeError::BlockOverlap { detail } => write!(f, "bad block partition: {detail}"),
            DecomposeError::PolyMismatch => {
                write!(f, "parts disagree on the polynomial list")
            }
            DecomposeError::Stratify(e) => write!(f, "{e}"),
            DecomposeError::Connect(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for DecomposeError {}

impl From<NotSplit> for DecomposeError {
    fn from(_: NotSplit) -> Self {
        DecomposeError::NotSplit
    }
}

impl From<StratifyError> for DecomposeError {
    fn from(e: StratifyError) -> Self {
        DecomposeError::Stratify(e)
    }
}

impl From<ConnectError> for DecomposeError {
    fn from(e: ConnectError) -> Self {
        DecomposeError::Connect(e)
    }
}

/// Serializable gist of an elementary witness: the free generators and the
/// strata each group absorbed.
#[derive(Clone, Debug)]
pub struct WitnessSummary {
    pub generators: Vec<FinVector>,
    pub groups: Vec<Vec<usize>>,
    pub window: usize,
}

impl WitnessSummary {
    fn from_witness(w: &ElementaryWitness) -> Self {
        WitnessSummary {
            generators: w.groups().iter().map(|g| g.generator.clone()).collect(),
            groups: w.groups().iter().map(|g| g.absorbed.clone()).collect(),
            window: w.window(),
        }
    }
}

/// A verified sum of quadratic operators.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub input: Endomorphism,
    /// Summand operators with their annihilating polynomials (split form).
    pub summands: Vec<(Endomorphism, QuadraticPoly)>,
    /// The scalar `Σ x_k` collected by normalization.
    pub shift: Scalar,
    pub witness: Option<WitnessSummary>,
    pub report: ValidationReport,
}

/// The model pair on a fresh space: `v(e_k) = a e_k + e_{k+1}` on even
/// indices (else 0), `w(e_k) = b e_k + e_{k+1}` on odd indices (else 0).
/// Then `v² = a v`, `w² = b w`, and `v + w` satisfies the cyclic-basis
/// hypothesis, so its module structure is free on `e_0`.
pub fn model_pair(a: &Scalar, b: &Scalar) -> (Endomorphism, Endomorphism) {
    let field = a.field();
    assert!(b.field() == field, "field mismatch");
    let va = a.clone();
    let v = Endomorphism::from_rule(field, move |k| {
        if k % 2 == 0 {
            let mut out = FinVector::basis(field, k).scale(&va);
            out.add_scaled(&field.one(), &FinVector::basis(field, k + 1));
            out
        } else {
            FinVector::zero(field)
        }
    })
    .with_band(1)
    .with_certificate(crate::operator::StructureCertificate::LocallyAlgebraic);
    let wb = b.clone();
    let w = Endomorphism::from_rule(field, move |k| {
        if k % 2 == 1 {
            let mut out = FinVector::basis(field, k).scale(&wb);
            out.add_scaled(&field.one(), &FinVector::basis(field, k + 1));
            out
        } else {
            FinVector::zero(field)
        }
    })
    .with_band(1)
    .with_certificate(crate::operator::StructureCertificate::LocallyAlgebraic);
    (v, w)
}

/// Canonical data extracted from a polynomial list: each split `p_k` with
/// ordered roots `(x_k, y_k)` becomes `t² - (y_k - x_k) t`, and the shifts
/// `x_k` accumulate.
#[derive(Clone, Debug)]
pub struct Normalized {
    /// The split polynomials, roots attached.
    pub split: Vec<QuadraticPoly>,
    /// `c_k = y_k - x_k`.
    pub canonical: Vec<Scalar>,
    /// Per-polynomial shifts `x_k`.
    pub offsets: Vec<Scalar>,
    /// `Σ x_k`.
    pub shift: Scalar,
}

pub fn normalize_polys(polys: &[QuadraticPoly]) -> Result<Normalized, DecomposeError> {
    assert!(!polys.is_empty(), "no polynomials");
    let field = polys[0].field();
    if polys.iter().any(|p| p.field() != field) {
        return Err(DecomposeError::FieldMismatch);
    }
    let mut split = Vec::new();
    let mut canonical = Vec::new();
    let mut offsets = Vec::new();
    let mut shift = field.zero();
    for p in polys {
        let sp = p.clone().split()?;
        let (x, y) = sp.roots().expect("split polynomial has roots");
        canonical.push(y - x);
        offsets.push(x.clone());
        shift = &shift + x;
        split.push(sp.clone());
    }
    Ok(Normalized {
        split,
        canonical,
        offsets,
        shift,
    })
}

/// Coordinates provider over the free module structure of an elementary
/// operator: the orbit family of the witness generators, with new
/// generators appended on demand.
struct TransportFamily {
    family: FamilySpan,
    witness: Rc<ElementaryWitness>,
    appended: usize,
    budget: usize,
}

impl TransportFamily {
    fn new(op: &Endomorphism, witness: Rc<ElementaryWitness>, budget: usize) -> Self {
        TransportFamily {
            family: FamilySpan::new(op),
            witness,
            appended: 0,
            budget,
        }
    }

    fn coords(&mut self, x: &FinVector) -> crate::span::FamilyCoords {
        loop {
            match self.family.reduce_with_extension(x, self.budget) {
                Ok(FamilyMembership::Member { coords }) => return coords,
                Ok(FamilyMembership::NotMember { .. }) => {
                    let gen = self
                        .witness
                        .generator(self.appended)
                        .unwrap_or_else(|e| panic!("transport needs one more free generator: {e}"));
                    self.family
                        .push_member(gen, Dimension::Infinite)
                        .unwrap_or_else(|e| panic!("transport family degenerate: {e}"));
                    self.appended += 1;
                }
                Err(FamilyError::HorizonExceeded { consumed }) => {
                    panic!("transport horizon exceeded after {consumed} vectors")
                }
                Err(FamilyError::DependentFamily { member, power }) => {
                    panic!("transport family dependent at generator {member}, power {power}")
                }
            }
        }
    }

    fn family_vector(&mut self, member: usize, power: usize) -> FinVector {
        self.family.family_vector(member, power)
    }
}

/// Triangular model-basis bookkeeping: the powers `C_k = (v+w)^k e_0` of
/// the model successor operator, and exact expansion over them.
struct ModelBasis {
    successor: Endomorphism,
    powers: Vec<FinVector>,
}

impl ModelBasis {
    fn new(v: &Endomorphism, w: &Endomorphism) -> Self {
        let successor = v.add(w);
        let field = successor.field();
        ModelBasis {
            successor,
            powers: alloc::vec![FinVector::basis(field, 0)],
        }
    }

    fn ensure(&mut self, k: usize) {
        while self.powers.len() <= k {
            let next = self.successor.apply(self.powers.last().unwrap());
            self.powers.push(next);
        }
    }

    fn power(&mut self, k: usize) -> FinVector {
        self.ensure(k);
        self.powers[k].clone()
    }

    /// Coefficients of `y` over `(C_k)`: back-substitution down the
    /// triangular family (`C_k = e_k + lower terms`).
    fn solve(&mut self, y: &FinVector) -> Vec<(usize, Scalar)> {
        let mut rest = y.clone();
        let mut coeffs = Vec::new();
        while let Some(top) = rest.max_index() {
            self.ensure(top);
            let c = rest.coeff(top);
            let neg = -&c;
            rest.add_scaled(&neg, &self.powers[top]);
            coeffs.push((top, c));
        }
        coeffs
    }
}

/// The conjugated action of one model operator on the witness family:
/// `m(C_k)` expanded over `(C_j)`, cached per power (the expansion is
/// generator-independent).
struct TransportAction {
    model_op: Endomorphism,
    expansions: Vec<Vec<(usize, Scalar)>>,
}

impl TransportAction {
    fn new(model_op: Endomorphism) -> Self {
        TransportAction {
            model_op,
            expansions: Vec::new(),
        }
    }

    fn expansion(&mut self, basis: &mut ModelBasis, k: usize) -> Vec<(usize, Scalar)> {
        while self.expansions.len() <= k {
            let next = self.expansions.len();
            let image = self.model_op.apply(&basis.power(next));
            self.expansions.push(basis.solve(&image));
        }
        self.expansions[k].clone()
    }
}

struct TransportState {
    family: TransportFamily,
    basis: ModelBasis,
    first: TransportAction,
    second: TransportAction,
}

/// Splits an elementary operator into two quadratic summands annihilated by
/// `p1` and `p2`, transporting the model pair through the free module
/// structure named by the witness.
pub fn two_sum_elementary(
    u: &Endomorphism,
    witness: &Rc<ElementaryWitness>,
    p1: &QuadraticPoly,
    p2: &QuadraticPoly,
    window: usize,
) -> Result<Decomposition, DecomposeError> {
    let field = u.field();
    if p1.field() != field || p2.field() != field {
        return Err(DecomposeError::FieldMismatch);
    }
    let normalized = normalize_polys(&[p1.clone(), p2.clone()])?;
    let sigma = normalized.shift.clone();
    // The free generators stay valid for u - σ·id: scalar shifts preserve
    // the module's free structure and its generators.
    let shifted = u.shift_by_scalar(&sigma);
    let (a, b) = (
        normalized.canonical[0].clone(),
        normalized.canonical[1].clone(),
    );
    let (model_v, model_w) = model_pair(&a, &b);
    let budget = 8 * window.max(8);
    let state = Rc::new(RefCell::new(TransportState {
        family: TransportFamily::new(&shifted, Rc::clone(witness), budget),
        basis: ModelBasis::new(&model_v, &model_w),
        first: TransportAction::new(model_v),
        second: TransportAction::new(model_w),
    }));

    let make_summand = |pick_first: bool| -> Endomorphism {
        let state = Rc::clone(&state);
        Endomorphism::from_rule(field, move |j| {
            let mut st = state.borrow_mut();
            let coords = st.family.coords(&FinVector::basis(field, j));
            let mut out = FinVector::zero(field);
            for ((member, power), c) in coords {
                let expansion = {
                    let st = &mut *st;
                    if pick_first {
                        st.first.expansion(&mut st.basis, power)
                    } else {
                        st.second.expansion(&mut st.basis, power)
                    }
                };
                for (target_power, d) in expansion {
                    let vec = st.family.family_vector(member, target_power);
                    out.add_scaled(&(&c * &d), &vec);
                }
            }
            out
        })
    };

    let raw_first = make_summand(true);
    let raw_second = make_summand(false);
    let first = add_scalar(&raw_first, &normalized.offsets[0]);
    let second = add_scalar(&raw_second, &normalized.offsets[1]);
    let summands = alloc::vec![
        (first, normalized.split[0].clone()),
        (second, normalized.split[1].clone()),
    ];
    let report = check_summands(u, &summands, window);
    Ok(Decomposition {
        input: u.clone(),
        summands,
        shift: sigma,
        witness: Some(WitnessSummary::from_witness(witness)),
        report,
    })
}

fn add_scalar(op: &Endomorphism, lambda: &Scalar) -> Endomorphism {
    if lambda.is_zero() {
        op.clone()
    } else {
        op.add(&Endomorphism::scalar(lambda.clone()))
    }
}

/// Which branch the elementary reduction took.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReductionCase {
    /// `ω`-indexed stratification: the connector-style summands act on
    /// every finite stratum top.
    OmegaLimit,
    /// Single infinite stratum: already elementary, both summands zero.
    FiniteElementary,
    /// Finite list with torsion on top of an infinite-dimensional base:
    /// projection rewiring plus a connector on the reordered strata.
    FiniteMixed,
}

/// Two quadratic operators whose removal leaves an elementary remainder.
pub struct ElementaryReduction {
    pub first: Endomorphism,
    pub second: Endomorphism,
    pub remainder: Endomorphism,
    pub witness: Rc<ElementaryWitness>,
    pub case: ReductionCase,
    /// The stratification the witness certifies (reordered in the mixed
    /// case).
    pub witness_stratification: Stratification,
}

impl fmt::Debug for ElementaryReduction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ElementaryReduction")
            .field("case", &self.case)
            .finish()
    }
}

/// Peels two quadratic summands (`first² = a·first`, `second² = b·second`)
/// off `u` so that `u - first - second` is elementary, following the
/// stratification's shape.
pub fn reduce_to_elementary(
    u: &Endomorphism,
    s: &Stratification,
    a: &Scalar,
    b: &Scalar,
    window: usize,
) -> Result<ElementaryReduction, DecomposeError> {
    let field = u.field();
    if a.field() != field || b.field() != field {
        return Err(DecomposeError::FieldMismatch);
    }
    match s.kind() {
        StratKind::OmegaIndexed => {
            let first = stratum_top_action(s, /*even*/ true, a);
            let second = stratum_top_action(s, /*even*/ false, b);
            let remainder = u.sub(&first).sub(&second);
            let witness = Rc::new(elementary_witness(&remainder, s, window)?);
            Ok(ElementaryReduction {
                first,
                second,
                remainder,
                witness,
                case: ReductionCase::OmegaLimit,
                witness_stratification: s.clone(),
            })
        }
        StratKind::FiniteList(m) => {
            if !s.stratum(0)?.dimension.is_infinite() {
                return Err(DecomposeError::HypothesisViolated {
                    detail: String::from(
                        "finite stratification must start with an infinite stratum",
                    ),
                });
            }
            if m == 1 {
                let zero = Endomorphism::zero(field);
                let witness = Rc::new(elementary_witness(u, s, window)?);
                return Ok(ElementaryReduction {
                    first: zero.clone(),
                    second: zero,
                    remainder: u.clone(),
                    witness,
                    case: ReductionCase::FiniteElementary,
                    witness_stratification: s.clone(),
                });
            }
            reduce_finite_mixed(u, s, m, a, b, window)
        }
    }
}

/// The limit-case summand: maps the top family vector of every finite
/// stratum of the selected parity to `coeff·top - x_{α+1}` and kills all
/// other family vectors.
fn stratum_top_action(s: &Stratification, even: bool, coeff: &Scalar) -> Endomorphism {
    let field = coeff.field();
    let strat = s.clone();
    let coeff = coeff.clone();
    Endomorphism::from_rule(field, move |j| {
        let coords = strat
            .coordinates(&FinVector::basis(field, j))
            .unwrap_or_else(|e| panic!("summand column {j}: {e}"));
        let mut out = FinVector::zero(field);
        for ((alpha, k), c) in coords {
            let dim = strat
                .stratum(alpha)
                .unwrap_or_else(|e| panic!("summand column {j}: {e}"))
                .dimension;
            let Dimension::Finite(d) = dim else { continue };
            if k != d - 1 || (alpha % 2 == 0) != even {
                continue;
            }
            let top = strat
                .family_vector(alpha, d - 1)
                .unwrap_or_else(|e| panic!("summand column {j}: {e}"));
            let mut image = top.scale(&coeff);
            let succ = strat
                .stratum(alpha + 1)
                .unwrap_or_else(|e| panic!("summand column {j}: {e}"))
                .generator;
            image.add_scaled(&field.from_i64(-1), &succ);
            out.add_scaled(&c, &image);
        }
        out
    })
}

/// The mixed finite case: rewire the part of `u` that leaks from the
/// torsion strata into the infinite-dimensional base, reorder the strata so
/// the base comes last, and split the rewiring-plus-connector into the two
/// parity summands (corrections land in the base span, which both summands
/// kill).
fn reduce_finite_mixed(
    u: &Endomorphism,
    s: &Stratification,
    m: usize,
    a: &Scalar,
    b: &Scalar,
    window: usize,
) -> Result<ElementaryReduction, DecomposeError> {
    let field = u.field();
    // Projection onto the base stratum's orbit span along the rest.
    let strat_for_pi = s.clone();
    let pi = Endomorphism::from_rule(field, move |j| {
        let coords = strat_for_pi
            .coordinates(&FinVector::basis(field, j))
            .unwrap_or_else(|e| panic!("projection column {j}: {e}"));
        let mut out = FinVector::zero(field);
        for ((alpha, k), c) in coords {
            if alpha == 0 {
                let vec = strat_for_pi
                    .family_vector(0, k)
                    .unwrap_or_else(|e| panic!("projection column {j}: {e}"));
                out.add_scaled(&c, &vec);
            }
        }
        out
    });
    let id = Endomorphism::identity(field);
    let leak = pi.compose(&u.compose(&id.sub(&pi)));
    let rewired = u.sub(&leak);

    // Reordered stratification of the rewired operator: torsion strata
    // first (original order), the infinite base last. Family vectors agree
    // with the original ones, so coordinates transfer.
    let mut reordered_strata = Vec::new();
    for alpha in 1..m {
        reordered_strata.push(s.stratum(alpha)?);
    }
    reordered_strata.push(s.stratum(0)?);
    let reordered = Stratification::from_parts(
        &rewired,
        s.config(),
        StratKind::FiniteList(m),
        reordered_strata,
    );

    // Summands act on tops of the torsion strata (positions 0..m-2 in the
    // reordered list; original indices 1..m-1): the image is
    //   coeff·top + leak(top) - x_next,
    // with x_next the next reordered generator. The leak value lands in the
    // base span, which both summands kill, so the squares stay exact.
    // Parity is taken on the original index: `a` acts on odd ones, `b` on
    // even ones.
    let summand_for = |act_on_odd: bool, coeff: &Scalar| -> Endomorphism {
        let strat = reordered.clone();
        let leak = leak.clone();
        let coeff = coeff.clone();
        Endomorphism::from_rule(field, move |j| {
            let coords = strat
                .coordinates(&FinVector::basis(field, j))
                .unwrap_or_else(|e| panic!("summand column {j}: {e}"));
            let mut out = FinVector::zero(field);
            for ((pos, k), c) in coords {
                let dim = strat
                    .stratum(pos)
                    .unwrap_or_else(|e| panic!("summand column {j}: {e}"))
                    .dimension;
                let Dimension::Finite(d) = dim else { continue };
                if k != d - 1 {
                    continue;
                }
                let original_index = pos + 1; // positions 0..m-2 hold strata 1..m-1
                if (original_index % 2 == 1) != act_on_odd {
                    continue;
                }
                let top = strat
                    .family_vector(pos, d - 1)
                    .unwrap_or_else(|e| panic!("summand column {j}: {e}"));
                let mut image = top.scale(&coeff);
                image.add_scaled(&field.one(), &leak.apply(&top));
                let succ = strat
                    .stratum(pos + 1)
                    .unwrap_or_else(|e| panic!("summand column {j}: {e}"))
                    .generator;
                image.add_scaled(&field.from_i64(-1), &succ);
                out.add_scaled(&c, &image);
            }
            out
        })
    };
    let first = summand_for(true, a);
    let second = summand_for(false, b);
    let remainder = u.sub(&first).sub(&second);
    let witness = Rc::new(elementary_witness(&remainder, &reordered, window)?);
    Ok(ElementaryReduction {
        first,
        second,
        remainder,
        witness,
        case: ReductionCase::FiniteMixed,
        witness_stratification: reordered,
    })
}

/// Decomposes `u` into four quadratic summands annihilated by the four
/// split polynomials: normalization, stratification, reduction to an
/// elementary remainder, model-pair transport, and shift restoration, with
/// an exact window report attached.
pub fn four_sum(
    u: &Endomorphism,
    polys: &[QuadraticPoly],
    config: Config,
) -> Result<Decomposition, DecomposeError> {
    if polys.len() != 4 {
        return Err(DecomposeError::PolyCount {
            expected: 4,
            got: polys.len(),
        });
    }
    let field = u.field();
    if polys.iter().any(|p| p.field() != field) {
        return Err(DecomposeError::FieldMismatch);
    }
    let window = config.window;
    let normalized = normalize_polys(polys)?;
    let sigma = normalized.shift.clone();
    let shifted = u.shift_by_scalar(&sigma);

    let s = build_stratification(&shifted, config)?;
    let reduction = reduce_to_elementary(
        &shifted,
        &s,
        &normalized.canonical[0],
        &normalized.canonical[1],
        window,
    )?;
    let tail = two_sum_elementary(
        &reduction.remainder,
        &reduction.witness,
        &QuadraticPoly::canonical(normalized.canonical[2].clone()),
        &QuadraticPoly::canonical(normalized.canonical[3].clone()),
        window,
    )?;

    let raw = [
        reduction.first.clone(),
        reduction.second.clone(),
        tail.summands[0].0.clone(),
        tail.summands[1].0.clone(),
    ];
    let mut summands = Vec::new();
    for (k, op) in raw.into_iter().enumerate() {
        let final_op = add_scalar(&op, &normalized.offsets[k]);
        summands.push((final_op, normalized.split[k].clone()));
    }
    let report = check_summands(u, &summands, window);
    Ok(Decomposition {
        input: u.clone(),
        summands,
        shift: sigma,
        witness: Some(WitnessSummary::from_witness(&reduction.witness)),
        report,
    })
}

/// Combines per-block decompositions along a residue-class partition of the
/// index set: summand `k` of the result acts blockwise as each part's
/// summand `k`.
pub fn direct_sum_decompositions(
    parts: &[(BlockSpec, Decomposition)],
) -> Result<Decomposition, DecomposeError> {
    if parts.is_empty() {
        return Err(DecomposeError::BlockOverlap {
            detail: String::from("no parts"),
        });
    }
    let modulus = parts[0].0.modulus;
    if modulus != parts.len() || parts.iter().any(|(b, _)| b.modulus != modulus) {
        return Err(DecomposeError::BlockOverlap {
            detail: String::from("block moduli must all equal the number of parts"),
        });
    }
    let mut seen = alloc::vec![false; modulus];
    for (block, _) in parts {
        if block.residue >= modulus || seen[block.residue] {
            return Err(DecomposeError::BlockOverlap {
                detail: alloc::format!("residue {} repeated or out of range", block.residue),
            });
        }
        seen[block.residue] = true;
    }
    let field = parts[0].1.input.field();
    let count = parts[0].1.summands.len();
    for (_, d) in parts {
        if d.summands.len() != count {
            return Err(DecomposeError::PolyMismatch);
        }
        for (k, (_, p)) in d.summands.iter().enumerate() {
            if p.coefficients() != parts[0].1.summands[k].1.coefficients() {
                return Err(DecomposeError::PolyMismatch);
            }
        }
    }

    // residue -> part lookup
    let mut by_residue: Vec<Option<(BlockSpec, Decomposition)>> = alloc::vec![None; modulus];
    for part in parts {
        by_residue[part.0.residue] = Some(part.clone());
    }
    let by_residue: Vec<(BlockSpec, Decomposition)> = by_residue
        .into_iter()
        .map(|p| p.expect("partition verified"))
        .collect();

    let interleave = |pick: &dyn Fn(&Decomposition) -> Endomorphism| -> Endomorphism {
        let parts_ops: Vec<(BlockSpec, Endomorphism)> = by_residue
            .iter()
            .map(|(block, dec)| (*block, pick(dec)))
            .collect();
        Endomorphism::from_rule(field, move |i| {
            let r = i % modulus;
            let local = i / modulus;
            let (block, op) = &parts_ops[r];
            op.column(local).map_indices(|idx| block.embed(idx))
        })
    };

    let input = interleave(&|d: &Decomposition| d.input.clone());
    let mut summands = Vec::new();
    for k in 0..count {
        let op = interleave(&move |d: &Decomposition| d.summands[k].0.clone());
        summands.push((op, parts[0].1.summands[k].1.clone()));
    }
    let window = parts
        .iter()
        .map(|(_, d)| d.report.window)
        .max()
        .unwrap_or(1);
    let report = check_summands(&input, &summands, window);
    Ok(Decomposition {
        input,
        summands,
        shift: parts[0].1.shift.clone(),
        witness: None,
        report,
    })
}
