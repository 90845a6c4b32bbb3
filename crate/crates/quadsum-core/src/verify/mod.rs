//! Window verification of decompositions, impossibility certificates, and
//! the brute-force finite-dimensional oracles backing them.
//!
//! Everything is exact: a check passes iff the identity holds coefficient
//! by coefficient on the window, with lazy evaluation supplying whatever
//! columns the identity touches beyond it.

pub mod dense;

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::operator::Endomorphism;
use crate::poly::QuadraticPoly;
use crate::scalar::{FieldSpec, Scalar};
use crate::span::{Membership, SpanBasis};
use crate::vector::FinVector;
use dense::DenseMatrix;

/// One failed exact identity.
#[derive(Clone, Debug)]
pub struct CheckFailure {
    /// `None`: the sum identity; `Some(k)`: annihilation of summand `k`.
    pub summand: Option<usize>,
    pub column: usize,
    pub residual: FinVector,
}

impl fmt::Display for CheckFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.summand {
            None => write!(
                f,
                "sum identity fails at column {}: residual {}",
                self.column, self.residual
            ),
            Some(k) => write!(
                f,
                "annihilation of summand {} fails at column {}: residual {}",
                k, self.column, self.residual
            ),
        }
    }
}

/// Exact window verification results.
#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub window: usize,
    pub checks_run: usize,
    pub failures: Vec<CheckFailure>,
}

impl ValidationReport {
    pub fn pass(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks `Σ summands = u` and `p_k(u_k) = 0` on every window column.
pub fn check_summands(
    u: &Endomorphism,
    summands: &[(Endomorphism, QuadraticPoly)],
    window: usize,
) -> ValidationReport {
    assert!(window >= 1, "window must be at least 1");
    let field = u.field();
    let annihilated: Vec<Endomorphism> = summands.iter().map(|(op, p)| op.poly_image(p)).collect();
    let mut failures = Vec::new();
    let mut checks_run = 0usize;
    for j in 0..window {
        let mut sum = FinVector::zero(field);
        for (op, _) in summands {
            sum.add_scaled(&field.one(), &op.column_rc(j));
        }
        let residual = &sum - &u.column_rc(j);
        checks_run += 1;
        if !residual.is_zero() {
            failures.push(CheckFailure {
                summand: None,
                column: j,
                residual,
            });
        }
        for (k, pu) in annihilated.iter().enumerate() {
            let col = pu.column(j);
            checks_run += 1;
            if !col.is_zero() {
                failures.push(CheckFailure {
                    summand: Some(k),
                    column: j,
                    residual: col,
                });
            }
        }
    }
    ValidationReport {
        window,
        checks_run,
        failures,
    }
}

/// Checks a full decomposition object against its input operator.
pub fn check_decomposition(
    u: &Endomorphism,
    d: &crate::decompose::Decomposition,
    window: usize,
) -> ValidationReport {
    check_summands(u, &d.summands, window)
}

/// Errors of the finite-rank trace computation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TraceError {
    ImageSpanInvalid { detail: String },
}

impl fmt::Display for TraceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceError::ImageSpanInvalid { detail } => {
                write!(f, "image span invalid: {detail}")
            }
        }
    }
}

impl core::error::Error for TraceError {}

/// Exact trace of a finite-rank operator, computed as the trace of the
/// induced map on a supplied spanning set of the image.
///
/// The operator must carry a finite-support certificate (all columns zero
/// from some index on); every nonzero column is validated to reduce into
/// the span.
pub fn trace_finite_rank(u: &Endomorphism, image_span: &[FinVector]) -> Result<Scalar, TraceError> {
    let field = u.field();
    let Some(bound) = u.zero_columns_from() else {
        return Err(TraceError::ImageSpanInvalid {
            detail: String::from("operator carries no finite-support certificate"),
        });
    };
    let mut basis = SpanBasis::new(field);
    for v in image_span {
        basis.insert(v);
    }
    for n in 0..bound {
        let col = u.column(n);
        if !basis.reduce(&col).is_zero() {
            return Err(TraceError::ImageSpanInvalid {
                detail: alloc::format!("column {n} escapes the image span"),
            });
        }
    }
    // Induced map on the reduced basis rows; only diagonal entries matter.
    let rows: Vec<FinVector> = basis.rows().to_vec();
    let mut trace = field.zero();
    for (i, row) in rows.iter().enumerate() {
        let image = u.apply(row);
        match basis.membership(&image) {
            Membership::Member { row_coefficients } => {
                for (slot, c) in row_coefficients {
                    if slot == i {
                        trace = &trace + &c;
                    }
                }
            }
            Membership::NotMember { .. } => {
                return Err(TraceError::ImageSpanInvalid {
                    detail: alloc::format!("image of span row {i} escapes the span"),
                });
            }
        }
    }
    Ok(trace)
}

/// A machine-checked impossibility certificate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Certificate {
    /// Nonzero trace: the operator is not a sum of three square-zero
    /// endomorphisms.
    TraceObstruction {
        trace: Scalar,
    },
    /// `α` outside `{0,1,2,3}` with `2α ≠ 3`: `α·id` is not a sum of three
    /// idempotents.
    ScalarThreeIdempotentObstruction {
        alpha: Scalar,
    },
    NotApplicable {
        reason: String,
    },
}

impl Certificate {
    pub fn is_obstruction(&self) -> bool {
        !matches!(self, Certificate::NotApplicable { .. })
    }
}

/// Issues a trace obstruction for a finite-rank operator, or
/// `NotApplicable` when the trace vanishes.
pub fn three_squarezero_obstruction(
    u: &Endomorphism,
    image_span: &[FinVector],
) -> Result<Certificate, TraceError> {
    let trace = trace_finite_rank(u, image_span)?;
    if trace.is_zero() {
        Ok(Certificate::NotApplicable {
            reason: String::from("trace is zero"),
        })
    } else {
        Ok(Certificate::TraceObstruction { trace })
    }
}

/// Checks the scalar hypotheses in the given field: `α ∉ {0,1,2,3}` and
/// `2α ≠ 3` (both computed in the field, so small characteristics shrink
/// the excluded set).
pub fn three_idempotent_scalar_obstruction(alpha: &Scalar) -> Certificate {
    let field = alpha.field();
    for k in 0..=3 {
        if *alpha == field.from_i64(k) {
            return Certificate::NotApplicable {
                reason: alloc::format!("alpha equals {k} in the field"),
            };
        }
    }
    let two_alpha = &field.from_i64(2) * alpha;
    if two_alpha == field.from_i64(3) {
        return Certificate::NotApplicable {
            reason: String::from("2*alpha equals 3 in the field"),
        };
    }
    Certificate::ScalarThreeIdempotentObstruction {
        alpha: alpha.clone(),
    }
}

/// Outcome of a brute-force oracle run.
#[derive(Clone, Debug)]
pub struct OracleReport {
    pub property: String,
    pub field: FieldSpec,
    pub dimension: usize,
    /// Trials (randomized) or triples (exhaustive) checked.
    pub cases: usize,
    pub seed: Option<u64>,
    pub counterexample: Option<String>,
    /// The hypothesis set was empty, so the run checked nothing.
    pub vacuous: bool,
    pub detail: String,
}

impl OracleReport {
    pub fn pass(&self) -> bool {
        self.counterexample.is_none()
    }
}

fn random_scalar(field: FieldSpec, rng: &mut ChaCha8Rng) -> Scalar {
    match field {
        FieldSpec::Rationals => field.from_i64(rng.gen_range(-5i64..=5)),
        FieldSpec::PrimeField(p) => field.from_i64(rng.gen_range(0..p) as i64),
    }
}

fn random_invertible(field: FieldSpec, dim: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    loop {
        let mut m = DenseMatrix::zeros(field, dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                m.set(i, j, random_scalar(field, rng));
            }
        }
        if m.inverse().is_some() {
            return m;
        }
    }
}

/// A random square-zero matrix: a strictly block-upper nilpotent
/// `[[0, R], [0, 0]]` conjugated by a random invertible matrix.
fn random_squarezero(field: FieldSpec, dim: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let split = dim / 2;
    let mut n = DenseMatrix::zeros(field, dim, dim);
    for i in 0..split {
        for j in split..dim {
            n.set(i, j, random_scalar(field, rng));
        }
    }
    let p = random_invertible(field, dim, rng);
    let p_inv = p.inverse().expect("constructed invertible");
    p.mul(&n).mul(&p_inv)
}

/// Randomized oracle: sums of three square-zero `dim × dim` matrices always
/// have trace zero. Any counterexample is a fatal library bug.
pub fn oracle_three_squarezero(
    dim: usize,
    trials: usize,
    field: FieldSpec,
    seed: u64,
) -> OracleReport {
    assert!((1..=6).contains(&dim), "oracle dimension must be in 1..=6");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counterexample = None;
    for t in 0..trials {
        let a = random_squarezero(field, dim, &mut rng);
        let b = random_squarezero(field, dim, &mut rng);
        let c = random_squarezero(field, dim, &mut rng);
        // Construction validity: the factors really are square-zero.
        debug_assert!(a.mul(&a).is_zero() && b.mul(&b).is_zero() && c.mul(&c).is_zero());
        let trace = a.add(&b).add(&c).trace();
        if !trace.is_zero() {
            counterexample = Some(alloc::format!("trial {t}: trace {trace}"));
            break;
        }
    }
    OracleReport {
        property: String::from("three-squarezero"),
        field,
        dimension: dim,
        cases: trials,
        seed: Some(seed),
        counterexample,
        vacuous: false,
        detail: alloc::format!("{trials} random square-zero triples, all traces zero"),
    }
}

/// All idempotent `dim × dim` matrices over `F_p` (`dim ≤ 2`).
pub fn enumerate_idempotents(field: FieldSpec, dim: usize) -> Vec<DenseMatrix> {
    let elements = crate::scalar::enumerate_field(field);
    let mut out = Vec::new();
    match dim {
        1 => {
            for x in &elements {
                let mut m = DenseMatrix::zeros(field, 1, 1);
                m.set(0, 0, x.clone());
                if m.mul(&m) == m {
                    out.push(m);
                }
            }
        }
        2 => {
            for a in &elements {
                for b in &elements {
                    for c in &elements {
                        for d in &elements {
                            let mut m = DenseMatrix::zeros(field, 2, 2);
                            m.set(0, 0, a.clone());
                            m.set(0, 1, b.clone());
                            m.set(1, 0, c.clone());
                            m.set(1, 1, d.clone());
                            if m.mul(&m) == m {
                                out.push(m);
                            }
                        }
                    }
                }
            }
        }
        _ => panic!("idempotent enumeration supports dimensions 1 and 2"),
    }
    out
}

/// Exhaustive oracle: over `F_p`, no triple of idempotent `dim × dim`
/// matrices sums to `α·I` for any `α` satisfying the scalar obstruction
/// hypotheses. Reports `vacuous` when no residue satisfies them.
pub fn oracle_three_idempotents(p: u64, dim: usize) -> OracleReport {
    let field = FieldSpec::PrimeField(p);
    field.validate().expect("prime field");
    let hypothesis: Vec<Scalar> = crate::scalar::enumerate_field(field)
        .into_iter()
        .filter(|alpha| three_idempotent_scalar_obstruction(alpha).is_obstruction())
        .collect();
    let idempotents = enumerate_idempotents(field, dim);
    if hypothesis.is_empty() {
        return OracleReport {
            property: String::from("three-idempotents"),
            field,
            dimension: dim,
            cases: 0,
            seed: None,
            counterexample: None,
            vacuous: true,
            detail: String::from("no residue satisfies the obstruction hypotheses"),
        };
    }
    let mut cases = 0usize;
    let mut counterexample = None;
    let n = idempotents.len();
    'outer: for i in 0..n {
        for j in i..n {
            let partial = idempotents[i].add(&idempotents[j]);
            for (k, third) in idempotents.iter().enumerate().skip(j) {
                cases += 1;
                let sum = partial.add(third);
                if let Some(alpha) = scalar_matrix_value(&sum) {
                    if hypothesis.contains(&alpha) {
                        counterexample =
                            Some(alloc::format!("idempotents ({i},{j},{k}) sum to {alpha}*I"));
                        break 'outer;
                    }
                }
            }
        }
    }
    OracleReport {
        property: String::from("three-idempotents"),
        field,
        dimension: dim,
        cases,
        seed: None,
        counterexample,
        vacuous: false,
        detail: alloc::format!(
            "{} idempotents, {cases} unordered triples, hypothesis set {{{}}}",
            n,
            hypothesis
                .iter()
                .map(|a| a.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        ),
    }
}

/// `Some(α)` when the matrix is `α·I`.
fn scalar_matrix_value(m: &DenseMatrix) -> Option<Scalar> {
    let (rows, cols) = m.shape();
    assert_eq!(rows, cols);
    let alpha = m.get(0, 0).clone();
    for i in 0..rows {
        for j in 0..cols {
            if i == j {
                if m.get(i, j) != &alpha {
                    return None;
                }
            } else if !m.get(i, j).is_zero() {
                return None;
            }
        }
    }
    Some(alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::OperatorSpec;

    const Q: FieldSpec = FieldSpec::Rationals;
    const F5: FieldSpec = FieldSpec::PrimeField(5);
    const F7: FieldSpec = FieldSpec::PrimeField(7);

    fn e(n: usize) -> FinVector {
        FinVector::basis(Q, n)
    }

    /// Rank-1 idempotent e_0 ⊗ e_0*: column 0 is e_0, everything else 0.
    fn rank_one_idempotent() -> Endomorphism {
        OperatorSpec::FinitePatch {
            base: alloc::boxed::Box::new(OperatorSpec::Scalar { value: Q.zero() }),
            patches: [(0usize, alloc::vec![(0usize, Q.one())])]
                .into_iter()
                .collect(),
        }
        .build(Q)
        .unwrap()
    }

    #[test]
    fn trace_of_rank_one_idempotent_is_one() {
        let u = rank_one_idempotent();
        let trace = trace_finite_rank(&u, &[e(0)]).unwrap();
        assert_eq!(trace, Q.one());
    }

    #[test]
    fn trace_of_zero_operator() {
        let u = Endomorphism::zero(Q);
        assert_eq!(trace_finite_rank(&u, &[]).unwrap(), Q.zero());
    }

    #[test]
    fn trace_of_embedded_nilpotent_block_is_zero() {
        // u e_0 = e_1, u e_1 = e_2, u e_2 = 0, zero beyond: trace 0.
        let u = OperatorSpec::FinitePatch {
            base: alloc::boxed::Box::new(OperatorSpec::Scalar { value: Q.zero() }),
            patches: [
                (0usize, alloc::vec![(1usize, Q.one())]),
                (1usize, alloc::vec![(2usize, Q.one())]),
            ]
            .into_iter()
            .collect(),
        }
        .build(Q)
        .unwrap();
        let trace = trace_finite_rank(&u, &[e(1), e(2)]).unwrap();
        assert_eq!(trace, Q.zero());
    }

    #[test]
    fn trace_is_basis_independent() {
        // Diagonal patch with trace 5/3; two different spanning sets.
        let u = OperatorSpec::FinitePatch {
            base: alloc::boxed::Box::new(OperatorSpec::Scalar { value: Q.zero() }),
            patches: [
                (0usize, alloc::vec![(0usize, Q.one())]),
                (1usize, alloc::vec![(1usize, Q.fraction(2, 3))]),
            ]
            .into_iter()
            .collect(),
        }
        .build(Q)
        .unwrap();
        let t1 = trace_finite_rank(&u, &[e(0), e(1)]).unwrap();
        let t2 = trace_finite_rank(&u, &[&e(0) + &e(1), &e(0) - &e(1), e(0)]).unwrap();
        assert_eq!(t1, Q.fraction(5, 3));
        assert_eq!(t1, t2);
    }

    #[test]
    fn trace_rejects_escaping_span() {
        let u = rank_one_idempotent();
        // span {e_1} does not contain the image.
        assert!(trace_finite_rank(&u, &[e(1)]).is_err());
    }

    #[test]
    fn trace_requires_finite_support_certificate() {
        let u = OperatorSpec::Shift.build(Q).unwrap();
        assert!(trace_finite_rank(&u, &[e(0)]).is_err());
    }

    #[test]
    fn squarezero_obstruction_for_rank_one_idempotent() {
        let u = rank_one_idempotent();
        let cert = three_squarezero_obstruction(&u, &[e(0)]).unwrap();
        assert_eq!(cert, Certificate::TraceObstruction { trace: Q.one() });
    }

    #[test]
    fn squarezero_obstruction_not_applicable_for_zero() {
        let cert = three_squarezero_obstruction(&Endomorphism::zero(Q), &[]).unwrap();
        assert!(!cert.is_obstruction());
    }

    #[test]
    fn scalar_obstruction_boundaries() {
        // Over Q: 5 qualifies, 0..=3 and 3/2 do not.
        assert!(three_idempotent_scalar_obstruction(&Q.from_i64(5)).is_obstruction());
        for k in 0..=3 {
            assert!(!three_idempotent_scalar_obstruction(&Q.from_i64(k)).is_obstruction());
        }
        assert!(!three_idempotent_scalar_obstruction(&Q.fraction(3, 2)).is_obstruction());
        // Over F7: 2*5 = 10 ≡ 3, so 5 is excluded there.
        assert!(!three_idempotent_scalar_obstruction(&F7.from_i64(5)).is_obstruction());
        assert!(three_idempotent_scalar_obstruction(&F7.from_i64(4)).is_obstruction());
    }

    #[test]
    fn squarezero_oracle_runs_clean() {
        let report = oracle_three_squarezero(2, 50, Q, 7);
        assert!(report.pass());
        let report = oracle_three_squarezero(4, 20, F5, 7);
        assert!(report.pass());
        // Dimension 1: the only square-zero matrix is zero.
        let report = oracle_three_squarezero(1, 5, Q, 7);
        assert!(report.pass());
    }

    #[test]
    fn idempotent_count_over_f7() {
        // 2x2 idempotents over F_p: 0, I, and p^2 + p rank-one ones.
        let idems = enumerate_idempotents(F7, 2);
        assert_eq!(idems.len(), 58);
        assert_eq!(enumerate_idempotents(F7, 1).len(), 2);
    }

    #[test]
    fn idempotent_oracle_dimension_one() {
        let report = oracle_three_idempotents(7, 1);
        assert!(report.pass());
        assert!(!report.vacuous);
        // Hypothesis residues over F7 are exactly {4, 6}.
        assert!(report.detail.contains("{4 mod 7, 6 mod 7}"));
    }

    #[test]
    fn idempotent_oracle_vacuous_for_f5_dim1() {
        // Over F5 the only candidate 4 has 2*4 = 8 ≡ 3, so nothing to test.
        let report = oracle_three_idempotents(5, 1);
        assert!(report.pass());
        assert!(report.vacuous);
    }

    #[test]
    fn check_summands_detects_tampering() {
        // u = shift = v + w with the parity split; then break one summand.
        let u = OperatorSpec::Shift.build(Q).unwrap();
        let (v, w) = crate::decompose::model_pair(&Q.zero(), &Q.zero());
        let good = check_summands(
            &u,
            &[
                (v.clone(), QuadraticPoly::square_zero(Q)),
                (w.clone(), QuadraticPoly::square_zero(Q)),
            ],
            16,
        );
        assert!(good.pass());

        // Column 2 is nonzero for the even-parity summand; zero it out.
        let tampered = Endomorphism::from_rule(Q, move |n| {
            if n == 2 {
                FinVector::zero(Q)
            } else {
                v.column(n)
            }
        });
        let bad = check_summands(
            &u,
            &[
                (tampered, QuadraticPoly::square_zero(Q)),
                (w, QuadraticPoly::square_zero(Q)),
            ],
            16,
        );
        assert!(!bad.pass());
        assert!(bad
            .failures
            .iter()
            .any(|f| f.column == 2 && f.summand.is_none()));
    }
}
