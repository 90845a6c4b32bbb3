//! Connectors, the regrouped view of a stratification, and elementary
//! witnesses.
//!
//! A *connector* for a stratification sends each finite stratum's top orbit
//! vector `u^{n_α-1} x_α` to the next generator `x_{α+1}` (up to a
//! correction inside the stratum's own span) and kills every other family
//! vector. Adding a connector to the operator makes the module structure
//! free; the *elementary witness* packages the generators of that free
//! structure — one per regrouped block of strata — together with the
//! window-level evidence.

use alloc::collections::BTreeMap;
use alloc::rc::Rc;
use alloc::string::String;
use alloc::vec::Vec;
use core::cell::RefCell;
use core::fmt;

use crate::operator::Endomorphism;
use crate::span::{Dimension, FamilyError, FamilyMembership, FamilySpan, SpanBasis};
use crate::stratify::{StratKind, Stratification, StratifyError};
use crate::vector::FinVector;

/// Errors of the connector/witness machinery.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConnectError {
    /// A finite stratification whose last stratum is finite-dimensional
    /// admits no connector (there is no next generator to point at).
    HypothesisViolated {
        detail: String,
    },
    /// Witness validation failed at a group and chain position.
    WitnessInvalid {
        group: usize,
        position: usize,
        detail: String,
    },
    /// The cyclic-basis hypothesis failed at a column.
    HypothesisFailed {
        position: usize,
    },
    /// A supplied correction does not lie in the required span.
    InvalidCorrection {
        stratum: usize,
    },
    Stratify(StratifyError),
}

impl fmt::Display for ConnectError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConnectError::HypothesisViolated { detail } => {
                write!(f, "connector hypothesis violated: {detail}")
            }
            ConnectError::WitnessInvalid {
                group,
                position,
                detail,
            } => {
                write!(
                    f,
                    "witness invalid at group {group}, position {position}: {detail}"
                )
            }
            ConnectError::HypothesisFailed { position } => {
                write!(f, "cyclic-basis hypothesis failed at column {position}")
            }
            ConnectError::InvalidCorrection { stratum } => {
                write!(f, "correction for stratum {stratum} is outside its span")
            }
            ConnectError::Stratify(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for ConnectError {}

impl From<StratifyError> for ConnectError {
    fn from(e: StratifyError) -> Self {
        ConnectError::Stratify(e)
    }
}

/// The regrouped view of a stratification: group starts are the strata with
/// no predecessor or whose predecessor is infinite-dimensional. Each group
/// runs from its start to (and including) the first infinite-dimensional
/// stratum, or forever when every later stratum is finite.
pub struct Regrouping {
    strat: Stratification,
    /// Materialized group start indices (strictly increasing).
    starts: RefCell<Vec<usize>>,
}

/// How far ahead `chain_length` and group enumeration look before declaring
/// a group endless.
const GROUP_PROBE: usize = 64;

pub fn regroup(s: &Stratification) -> Result<Regrouping, ConnectError> {
    if let StratKind::FiniteList(m) = s.kind() {
        assert!(m >= 1, "a stratification has at least one stratum");
        let last = s.stratum(m - 1)?;
        if !last.dimension.is_infinite() {
            return Err(ConnectError::HypothesisViolated {
                detail: String::from(
                    "last stratum of a finite stratification is finite-dimensional",
                ),
            });
        }
    }
    Ok(Regrouping {
        strat: s.clone(),
        starts: RefCell::new(alloc::vec![0]),
    })
}

impl Regrouping {
    pub fn stratification(&self) -> &Stratification {
        &self.strat
    }

    /// Whether stratum `alpha` opens a group.
    fn is_start(&self, alpha: usize) -> Result<bool, ConnectError> {
        if alpha == 0 {
            return Ok(true);
        }
        Ok(self.strat.stratum(alpha - 1)?.dimension.is_infinite())
    }

    /// Number of groups, when the stratification is a finite list.
    pub fn group_count(&self) -> Option<usize> {
        let StratKind::FiniteList(m) = self.strat.kind() else {
            return None;
        };
        let mut count = 0;
        for alpha in 0..m {
            if self.is_start(alpha).ok()? {
                count += 1;
            }
        }
        Some(count)
    }

    /// Stratum index opening group `g`, materializing strata as needed.
    pub fn group_start(&self, g: usize) -> Result<usize, ConnectError> {
        loop {
            {
                let starts = self.starts.borrow();
                if g < starts.len() {
                    return Ok(starts[g]);
                }
            }
            let from = *self.starts.borrow().last().unwrap() + 1;
            let mut found = None;
            let limit = from + GROUP_PROBE;
            for alpha in from..limit {
                if let StratKind::FiniteList(m) = self.strat.kind() {
                    if alpha >= m {
                        break;
                    }
                }
                if self.is_start(alpha)? {
                    found = Some(alpha);
                    break;
                }
            }
            match found {
                Some(alpha) => self.starts.borrow_mut().push(alpha),
                None => {
                    return Err(ConnectError::Stratify(StratifyError::InvalidClaim(
                        alloc::format!("no group {g} within the probe"),
                    )))
                }
            }
        }
    }

    /// `g(β)`: the group number of stratum `beta` (the largest group start
    /// at or below it).
    pub fn group_of_stratum(&self, beta: usize) -> Result<usize, ConnectError> {
        let mut group = 0;
        for alpha in 1..=beta {
            if self.is_start(alpha)? {
                group += 1;
            }
        }
        Ok(group)
    }

    /// `m_g`: how many strata group `g` absorbs — the distance to its
    /// infinite-dimensional stratum, or `Infinite` when no such stratum
    /// shows up within the probe (all-finite tail).
    pub fn chain_length(&self, g: usize) -> Result<Dimension, ConnectError> {
        let start = self.group_start(g)?;
        for k in 0..GROUP_PROBE {
            let alpha = start + k;
            if let StratKind::FiniteList(m) = self.strat.kind() {
                assert!(
                    alpha < m,
                    "finite stratification ends with an infinite stratum"
                );
            }
            if self.strat.stratum(alpha)?.dimension.is_infinite() {
                return Ok(Dimension::Finite(k + 1));
            }
        }
        Ok(Dimension::Infinite)
    }
}

/// Walks the concatenated family of one group:
/// `x_α, u x_α, …, u^{n_α-1} x_α, x_{α+1}, …`, never leaving the group
/// (an infinite stratum absorbs the whole tail).
pub(crate) struct ChainWalk {
    strat: Stratification,
    stratum: usize,
    power: usize,
}

impl ChainWalk {
    pub(crate) fn new(strat: &Stratification, start: usize) -> Self {
        ChainWalk {
            strat: strat.clone(),
            stratum: start,
            power: 0,
        }
    }

    pub(crate) fn current(&self) -> (usize, usize) {
        (self.stratum, self.power)
    }

    pub(crate) fn vector(&self) -> Result<FinVector, StratifyError> {
        self.strat.family_vector(self.stratum, self.power)
    }

    pub(crate) fn advance(&mut self) -> Result<(), StratifyError> {
        match self.strat.stratum(self.stratum)?.dimension {
            Dimension::Infinite => self.power += 1,
            Dimension::Finite(d) => {
                if self.power + 1 < d {
                    self.power += 1;
                } else {
                    self.stratum += 1;
                    self.power = 0;
                }
            }
        }
        Ok(())
    }
}

/// A connector for a stratification, realized as a lazy operator through
/// stratification coordinates.
pub struct Connector {
    op: Endomorphism,
    strat: Stratification,
    corrections: Rc<BTreeMap<usize, FinVector>>,
}

impl fmt::Debug for Connector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Connector")
            .field("corrections", &self.corrections.len())
            .finish()
    }
}

impl Connector {
    pub fn as_operator(&self) -> &Endomorphism {
        &self.op
    }

    pub fn stratification(&self) -> &Stratification {
        &self.strat
    }

    pub fn correction(&self, stratum: usize) -> Option<&FinVector> {
        self.corrections.get(&stratum)
    }
}

/// Builds the connector with the given corrections (`None` = all zero: the
/// canonical representative of the congruence class).
///
/// Column evaluation goes through stratification coordinates; coordinate
/// failures beyond the validated window surface as hard errors when the
/// column is first touched.
pub fn build_connector(
    u: &Endomorphism,
    s: &Stratification,
    corrections: Option<BTreeMap<usize, FinVector>>,
) -> Result<Connector, ConnectError> {
    let _ = regroup(s)?; // the hypothesis check
    let corrections = Rc::new(corrections.unwrap_or_default());
    for (alpha, corr) in corrections.iter() {
        // A correction must live in the span of the family through its
        // stratum.
        let coords = s
            .coordinates(corr)
            .map_err(|_| ConnectError::InvalidCorrection { stratum: *alpha })?;
        if coords.iter().any(|((m, _), _)| m > alpha) {
            return Err(ConnectError::InvalidCorrection { stratum: *alpha });
        }
    }
    let field = u.field();
    let strat = s.clone();
    let corr_map = Rc::clone(&corrections);
    let op = Endomorphism::from_rule(field, move |j| {
        let target = FinVector::basis(field, j);
        let coords = strat
            .coordinates(&target)
            .unwrap_or_else(|e| panic!("connector column {j}: {e}"));
        let mut out = FinVector::zero(field);
        for ((alpha, k), c) in coords {
            let dim = strat
                .stratum(alpha)
                .unwrap_or_else(|e| panic!("connector column {j}: {e}"))
                .dimension;
            if let Dimension::Finite(d) = dim {
                if k == d - 1 {
                    let succ = strat
                        .stratum(alpha + 1)
                        .unwrap_or_else(|e| panic!("connector column {j}: {e}"))
                        .generator;
                    out.add_scaled(&c, &succ);
                    if let Some(corr) = corr_map.get(&alpha) {
                        out.add_scaled(&c, corr);
                    }
                }
            }
        }
        out
    });
    Ok(Connector {
        op,
        strat: s.clone(),
        corrections,
    })
}

/// One regrouped block of the witness: the generator of a free summand of
/// the rewired module structure.
#[derive(Clone, Debug)]
pub struct WitnessGroup {
    pub generator: FinVector,
    pub start_stratum: usize,
    /// Strata the group absorbed within the validated window.
    pub absorbed: Vec<usize>,
    pub chain: Dimension,
}

/// Generators of the free module structure of an elementary operator,
/// with the window evidence that produced them.
pub struct ElementaryWitness {
    op: Endomorphism,
    strat: Stratification,
    groups: Vec<WitnessGroup>,
    window: usize,
    grouping: Regrouping,
}

impl fmt::Debug for ElementaryWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ElementaryWitness")
            .field("groups", &self.groups)
            .field("window", &self.window)
            .finish()
    }
}

impl ElementaryWitness {
    /// The operator the witness certifies (window-level).
    pub fn operator(&self) -> &Endomorphism {
        &self.op
    }

    pub fn stratification(&self) -> &Stratification {
        &self.strat
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Groups materialized during validation.
    pub fn groups(&self) -> &[WitnessGroup] {
        &self.groups
    }

    /// Generator of group `g`, materializing beyond the validated prefix if
    /// the module structure has more free summands.
    pub fn generator(&self, g: usize) -> Result<FinVector, ConnectError> {
        if let Some(group) = self.groups.get(g) {
            return Ok(group.generator.clone());
        }
        let start = self.grouping.group_start(g)?;
        Ok(self.strat.stratum(start)?.generator)
    }
}

/// Validates that `w` acts as a successor map along each group's chain
/// (modulo earlier strata and the chain prefix) and that the orbits of the
/// group generators under `w` are independent and span the window. Returns
/// the witness on success.
pub fn elementary_witness(
    w: &Endomorphism,
    s: &Stratification,
    window: usize,
) -> Result<ElementaryWitness, ConnectError> {
    assert!(window >= 1, "window must be at least 1");
    let grouping = regroup(s)?;
    let budget = s.config().family_horizon.max(window * 4);
    let u = s.operator();
    let field = u.field();

    // As the spanning pass discovers it needs another group, that group's
    // successor-congruence hypothesis is checked before its generator is
    // admitted into the orbit family.
    let mut orbit_family = FamilySpan::new(w);
    let mut groups: Vec<WitnessGroup> = Vec::new();
    for j in 0..window {
        let target = FinVector::basis(field, j);
        loop {
            match orbit_family.reduce_with_extension(&target, budget) {
                Ok(FamilyMembership::Member { .. }) => break,
                Ok(FamilyMembership::NotMember { .. }) => {
                    let g = groups.len();
                    let start = match grouping.group_start(g) {
                        Ok(a) => a,
                        Err(_) => {
                            return Err(ConnectError::WitnessInvalid {
                                group: g,
                                position: j,
                                detail: alloc::format!("column e_{j} not spanned by the orbits"),
                            })
                        }
                    };
                    let group =
                        check_group_hypothesis(w, s, &grouping, &u, g, start, window, budget)?;
                    orbit_family
                        .push_member(group.generator.clone(), Dimension::Infinite)
                        .map_err(|e| match e {
                            FamilyError::DependentFamily { member, power } => {
                                ConnectError::WitnessInvalid {
                                    group: member,
                                    position: power,
                                    detail: String::from("orbit family dependence"),
                                }
                            }
                            FamilyError::HorizonExceeded { consumed } => {
                                ConnectError::Stratify(StratifyError::HorizonExceeded { consumed })
                            }
                        })?;
                    groups.push(group);
                }
                Err(FamilyError::DependentFamily { member, power }) => {
                    return Err(ConnectError::WitnessInvalid {
                        group: member,
                        position: power,
                        detail: String::from("orbit family dependence"),
                    })
                }
                Err(FamilyError::HorizonExceeded { consumed }) => {
                    return Err(ConnectError::Stratify(StratifyError::HorizonExceeded {
                        consumed,
                    }))
                }
            }
        }
    }

    Ok(ElementaryWitness {
        op: w.clone(),
        strat: s.clone(),
        groups,
        window,
        grouping,
    })
}

/// Along the group's chain, `w` must map every family vector to the next
/// one modulo the earlier strata and the chain prefix.
#[allow(clippy::too_many_arguments)]
fn check_group_hypothesis(
    w: &Endomorphism,
    s: &Stratification,
    grouping: &Regrouping,
    u: &Endomorphism,
    g: usize,
    start: usize,
    window: usize,
    budget: usize,
) -> Result<WitnessGroup, ConnectError> {
    let mut span = FamilySpan::new(u);
    for beta in 0..start {
        let st = s.stratum(beta)?;
        span.push_member(st.generator, st.dimension)
            .map_err(|e| ConnectError::WitnessInvalid {
                group: g,
                position: 0,
                detail: alloc::format!("earlier strata degenerate: {e}"),
            })?;
    }
    let mut walk = ChainWalk::new(s, start);
    let mut absorbed = alloc::vec![start];
    for n in 0..window {
        let current = walk.vector()?;
        span.push_member(current.clone(), Dimension::Finite(1))
            .map_err(|_| ConnectError::WitnessInvalid {
                group: g,
                position: n,
                detail: String::from("chain vector dependent on the prefix"),
            })?;
        walk.advance()?;
        let (next_stratum, _) = walk.current();
        if absorbed.last() != Some(&next_stratum) {
            absorbed.push(next_stratum);
        }
        let next = walk.vector()?;
        let image = w.apply(&current);
        let residual = &image - &next;
        match span.reduce_with_extension(&residual, budget) {
            Ok(FamilyMembership::Member { .. }) => {}
            Ok(FamilyMembership::NotMember { .. }) => {
                return Err(ConnectError::WitnessInvalid {
                    group: g,
                    position: n,
                    detail: String::from("successor congruence fails"),
                })
            }
            Err(e) => {
                return Err(ConnectError::WitnessInvalid {
                    group: g,
                    position: n,
                    detail: alloc::format!("successor congruence check degenerate: {e}"),
                })
            }
        }
    }
    Ok(WitnessGroup {
        generator: s.stratum(start)?.generator,
        start_stratum: start,
        absorbed,
        chain: grouping.chain_length(g)?,
    })
}

/// Change-of-basis table for the cyclic family `(u^n x0)`.
#[derive(Clone, Debug)]
pub struct CyclicTable {
    /// `rows[n]` is `u^n x0` in ambient coordinates, `n < window`.
    pub rows: Vec<FinVector>,
    /// Rows are linearly independent.
    pub independent: bool,
    /// `e_0, …, e_{window-1}` all lie in the rows' span.
    pub spans_window: bool,
}

impl CyclicTable {
    pub fn valid(&self) -> bool {
        self.independent && self.spans_window
    }
}

/// Checks the triangular-successor hypothesis (`u(e_n)` has a nonzero
/// `e_{n+1}` component and nothing above it) on the window, then emits the
/// cyclic family of `x0` with independence/spanning flags.
pub fn basis_from_cyclic(
    u: &Endomorphism,
    x0: &FinVector,
    window: usize,
) -> Result<CyclicTable, ConnectError> {
    assert!(window >= 1, "window must be at least 1");
    for n in 0..window.saturating_sub(1) {
        let col = u.column(n);
        if col.coeff(n + 1).is_zero() || col.max_index().is_some_and(|m| m > n + 1) {
            return Err(ConnectError::HypothesisFailed { position: n });
        }
    }
    let mut rows = Vec::with_capacity(window);
    let mut current = x0.clone();
    for _ in 0..window {
        rows.push(current.clone());
        current = u.apply(&current);
    }
    let mut basis = SpanBasis::new(u.field());
    let mut independent = true;
    for row in &rows {
        if basis.insert(row).is_zero() {
            independent = false;
        }
    }
    let spans_window = (0..window).all(|j| basis.reduce(&FinVector::basis(u.field(), j)).is_zero());
    Ok(CyclicTable {
        rows,
        independent,
        spans_window,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;
    use crate::operator::OperatorSpec;
    use crate::scalar::FieldSpec;
    use crate::stratify::{build_stratification, StratKind, Stratum};

    const Q: FieldSpec = FieldSpec::Rationals;

    fn e(n: usize) -> FinVector {
        FinVector::basis(Q, n)
    }

    fn cfg() -> Config {
        Config::with_window(16)
    }

    fn shift() -> Endomorphism {
        OperatorSpec::Shift.build(Q).unwrap()
    }

    fn patched_shift() -> Endomorphism {
        OperatorSpec::FinitePatch {
            base: alloc::boxed::Box::new(OperatorSpec::Shift),
            patches: [(0usize, alloc::vec![])].into_iter().collect(),
        }
        .build(Q)
        .unwrap()
    }

    #[test]
    fn regroup_zero_operator() {
        let s = build_stratification(&Endomorphism::zero(Q), cfg()).unwrap();
        let r = regroup(&s).unwrap();
        assert_eq!(r.group_start(0).unwrap(), 0);
        assert_eq!(r.chain_length(0).unwrap(), Dimension::Infinite);
        for beta in 0..10 {
            assert_eq!(r.group_of_stratum(beta).unwrap(), 0);
        }
    }

    #[test]
    fn regroup_shift() {
        let s = build_stratification(&shift(), cfg()).unwrap();
        let r = regroup(&s).unwrap();
        assert_eq!(r.group_count(), Some(1));
        assert_eq!(r.chain_length(0).unwrap(), Dimension::Finite(1));
    }

    #[test]
    fn regroup_case2_reordered_dims() {
        // Reordered three-stratum list with dims (1, 1, inf): one group of
        // length 3 — only the first stratum lacks an infinite predecessor.
        let u = patched_shift();
        let strata = alloc::vec![
            Stratum {
                generator: e(0),
                dimension: Dimension::Finite(1),
                provenance: 0,
                certified: true,
            },
            Stratum {
                generator: e(2),
                dimension: Dimension::Finite(1),
                provenance: 2,
                certified: true,
            },
            Stratum {
                generator: e(1),
                dimension: Dimension::Infinite,
                provenance: 1,
                certified: true,
            },
        ];
        let s = Stratification::from_parts(&u, cfg(), StratKind::FiniteList(3), strata);
        let r = regroup(&s).unwrap();
        assert_eq!(r.group_count(), Some(1));
        assert_eq!(r.chain_length(0).unwrap(), Dimension::Finite(3));
        assert_eq!(r.group_of_stratum(2).unwrap(), 0);
    }

    #[test]
    fn regroup_rejects_finite_last_stratum() {
        let u = patched_shift();
        // Built order is (infinite, finite): the connector hypothesis fails.
        let s = build_stratification(&u, cfg()).unwrap();
        assert!(matches!(
            regroup(&s),
            Err(ConnectError::HypothesisViolated { .. })
        ));
    }

    #[test]
    fn connector_of_zero_operator_is_successor_map() {
        let z = Endomorphism::zero(Q);
        let s = build_stratification(&z, cfg()).unwrap();
        let c = build_connector(&z, &s, None).unwrap();
        for n in 0..10 {
            assert_eq!(c.as_operator().column(n), e(n + 1), "column {n}");
        }
    }

    #[test]
    fn connector_of_shift_is_zero() {
        let u = shift();
        let s = build_stratification(&u, cfg()).unwrap();
        let c = build_connector(&u, &s, None).unwrap();
        for n in 0..10 {
            assert!(c.as_operator().column(n).is_zero());
        }
    }

    #[test]
    fn connector_of_case2_reordered_strata() {
        // Strata in the order (x_1 = e_0, n = 1), (x_0 = e_1, n = inf):
        // the top of the first stratum maps to the next generator e_1.
        let u = patched_shift();
        let strata = alloc::vec![
            Stratum {
                generator: e(0),
                dimension: Dimension::Finite(1),
                provenance: 0,
                certified: true,
            },
            Stratum {
                generator: e(1),
                dimension: Dimension::Infinite,
                provenance: 1,
                certified: true,
            },
        ];
        let s = Stratification::from_parts(&u, cfg(), StratKind::FiniteList(2), strata);
        let c = build_connector(&u, &s, None).unwrap();
        assert_eq!(c.as_operator().column(0), e(1));
        for n in 1..8 {
            assert!(c.as_operator().column(n).is_zero(), "column {n}");
        }
    }

    #[test]
    fn connector_rejects_out_of_span_correction() {
        let z = Endomorphism::zero(Q);
        let s = build_stratification(&z, cfg()).unwrap();
        // Correction for stratum 0 must lie in span(e_0); e_5 does not.
        let corrections = [(0usize, e(5))].into_iter().collect();
        assert_eq!(
            build_connector(&z, &s, Some(corrections)).unwrap_err(),
            ConnectError::InvalidCorrection { stratum: 0 }
        );
    }

    #[test]
    fn connector_accepts_in_span_correction() {
        let z = Endomorphism::zero(Q);
        let s = build_stratification(&z, cfg()).unwrap();
        let corrections: BTreeMap<usize, FinVector> =
            [(0usize, e(0).scale(&Q.from_i64(3)))].into_iter().collect();
        let c = build_connector(&z, &s, Some(corrections)).unwrap();
        // v(e_0) = x_1 + 3 e_0.
        let expect = &e(1) + &e(0).scale(&Q.from_i64(3));
        assert_eq!(c.as_operator().column(0), expect);
    }

    #[test]
    fn witness_for_zero_plus_connector() {
        let z = Endomorphism::zero(Q);
        let s = build_stratification(&z, cfg()).unwrap();
        let c = build_connector(&z, &s, None).unwrap();
        let w = z.add(c.as_operator());
        let witness = elementary_witness(&w, &s, 8).unwrap();
        assert_eq!(witness.groups().len(), 1);
        assert_eq!(witness.groups()[0].generator, e(0));
        // The orbit of e_0 under the successor map is the whole basis.
        let table = basis_from_cyclic(&w, &e(0), 8).unwrap();
        assert!(table.valid());
        assert_eq!(table.rows[5], e(5));
    }

    #[test]
    fn witness_for_shift_itself() {
        let u = shift();
        let s = build_stratification(&u, cfg()).unwrap();
        let witness = elementary_witness(&u, &s, 8).unwrap();
        assert_eq!(witness.groups().len(), 1);
        assert_eq!(witness.groups()[0].generator, e(0));
        assert_eq!(witness.groups()[0].chain, Dimension::Finite(1));
    }

    #[test]
    fn corrupted_connector_fails_witness() {
        let z = Endomorphism::zero(Q);
        let s = build_stratification(&z, cfg()).unwrap();
        // A "connector" that wrongly kills the top of stratum 2.
        let bad = Endomorphism::from_rule(Q, |n| {
            if n == 2 {
                FinVector::zero(Q)
            } else {
                FinVector::basis(Q, n + 1)
            }
        });
        let w = z.add(&bad);
        let err = elementary_witness(&w, &s, 8).unwrap_err();
        match err {
            ConnectError::WitnessInvalid {
                group: 0, position, ..
            } => {
                assert_eq!(position, 2);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn cyclic_hypothesis_fails_for_zero() {
        let err = basis_from_cyclic(&Endomorphism::zero(Q), &e(0), 4).unwrap_err();
        assert_eq!(err, ConnectError::HypothesisFailed { position: 0 });
    }

    #[test]
    fn cyclic_table_for_shift_plus_identity_is_binomial() {
        // (S + I)^n e_0 = Σ_k C(n, k) e_k; check against independently
        // computed binomial coefficients.
        let u = shift().add(&Endomorphism::identity(Q));
        let table = basis_from_cyclic(&u, &e(0), 8).unwrap();
        assert!(table.valid());
        let mut binom = alloc::vec![alloc::vec![1i64]];
        for n in 1..8 {
            let prev: &Vec<i64> = &binom[n - 1];
            let mut row = alloc::vec![1i64];
            for k in 1..n {
                row.push(prev[k - 1] + prev[k]);
            }
            row.push(1);
            binom.push(row);
        }
        for (n, row) in binom.iter().enumerate() {
            let expect = FinVector::from_entries(
                Q,
                row.iter().enumerate().map(|(k, c)| (k, Q.from_i64(*c))),
            );
            assert_eq!(table.rows[n], expect, "power {n}");
        }
    }

    #[test]
    fn strata_lie_inside_their_group_span() {
        // Every stratum's family vectors reduce into the span of its
        // group's chain prefix.
        let u = OperatorSpec::JordanBlocks {
            pattern: crate::operator::JordanPattern::Arithmetic {
                start_size: 1,
                step: 1,
                eigenvalue: FieldSpec::Rationals.zero(),
            },
        }
        .build(Q)
        .unwrap();
        let s = build_stratification(&u, cfg()).unwrap();
        let r = regroup(&s).unwrap();
        // Chain prefix of group 0, long enough to absorb strata 0..4.
        let mut walk = ChainWalk::new(&s, r.group_start(0).unwrap());
        let mut span = crate::span::SpanBasis::new(Q);
        for _ in 0..20 {
            span.insert(&walk.vector().unwrap());
            walk.advance().unwrap();
        }
        for beta in 0..4 {
            assert_eq!(r.group_of_stratum(beta).unwrap(), 0);
            let st = s.stratum(beta).unwrap();
            let Dimension::Finite(d) = st.dimension else {
                panic!()
            };
            for k in 0..d {
                let v = s.family_vector(beta, k).unwrap();
                assert!(span.reduce(&v).is_zero(), "stratum {beta} power {k}");
            }
        }
    }

    #[test]
    fn witness_of_mixed_free_torsion_reordered() {
        // Patched shift, reordered strata (torsion first, free last): the
        // remainder u + v with v(e_0) = e_1 is the full shift and its
        // witness has a single group of length 2.
        let u = patched_shift();
        let strata = alloc::vec![
            Stratum {
                generator: e(0),
                dimension: Dimension::Finite(1),
                provenance: 0,
                certified: true,
            },
            Stratum {
                generator: e(1),
                dimension: Dimension::Infinite,
                provenance: 1,
                certified: true,
            },
        ];
        let s = Stratification::from_parts(&u, cfg(), StratKind::FiniteList(2), strata);
        let c = build_connector(&u, &s, None).unwrap();
        let w = u.add(c.as_operator());
        // w is the full shift.
        for n in 0..8 {
            assert_eq!(w.column(n), e(n + 1));
        }
        let witness = elementary_witness(&w, &s, 8).unwrap();
        assert_eq!(witness.groups().len(), 1);
        assert_eq!(witness.groups()[0].generator, e(0));
        assert_eq!(witness.groups()[0].chain, Dimension::Finite(2));
    }
}
