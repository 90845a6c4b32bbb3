//! Greedy construction and window validation of stratifications.
//!
//! A stratification presents the module structure of an operator as an
//! ordered sequence of strata: each stratum contributes the orbit of one
//! generator modulo everything before it, with quotient dimension
//! `n_α ∈ ℕ⁺ ∪ {∞}`. The concatenated family `(u^k x_α)_{k < n_α}` is
//! linearly independent and spans the space.
//!
//! The build follows the greedy rule: repeatedly pick the least unspanned
//! basis vector (in a configurable enumeration; by default a free vector is
//! moved to the front when one is found, so that a terminating build starts
//! with an infinite-dimensional stratum). Executable index sets are `ℕ`
//! prefixes or `ω`: a build either terminates (`FiniteList`) or keeps
//! producing strata on demand (`OmegaIndexed`).

use alloc::collections::BTreeMap;
use alloc::rc::Rc;
use alloc::string::String;
use alloc::vec::Vec;
use core::cell::RefCell;
use core::fmt;

use crate::config::{Config, Mode};
use crate::operator::Endomorphism;
use crate::span::{
    orbit_dimension, Dimension, FamilyCoords, FamilyError, FamilyMembership, FamilySpan,
    OrbitOutcome,
};
use crate::vector::FinVector;

/// One stratum: a generator, its quotient dimension over everything
/// earlier, and the ambient basis index it came from.
#[derive(Clone, Debug)]
pub struct Stratum {
    pub generator: FinVector,
    pub dimension: Dimension,
    pub provenance: usize,
    /// Whether an `Infinite` dimension is certificate-backed (finite
    /// dimensions are always exact).
    pub certified: bool,
}

/// The executable index shapes: a finite list of strata, or `ω` with strata
/// produced on demand.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StratKind {
    FiniteList(usize),
    OmegaIndexed,
}

/// Errors of the stratification machinery.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StratifyError {
    /// Certified mode requires a structure certificate other than `Unknown`.
    CertificateRequired,
    /// A certified claim failed at run time (e.g. an orbit outlived the
    /// horizon under a locally-algebraic certificate).
    CertificateViolated { detail: String },
    /// Certified mode could not decide membership for this candidate.
    UndecidableMembership { candidate: usize },
    /// The build terminated without any infinite-dimensional stratum, which
    /// would mean a finite-dimensional space.
    NotInfiniteDimensional,
    /// A freeness or independence claim broke down during use.
    InvalidClaim(String),
    /// Coordinate extraction exhausted its budget.
    HorizonExceeded { consumed: usize },
}

impl fmt::Display for StratifyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StratifyError::CertificateRequired => {
                write!(f, "certified mode requires a structure certificate")
            }
            StratifyError::CertificateViolated { detail } => {
                write!(f, "structure certificate violated: {detail}")
            }
            StratifyError::UndecidableMembership { candidate } => {
                write!(
                    f,
                    "membership of e_{candidate} undecidable under the certificate"
                )
            }
            StratifyError::NotInfiniteDimensional => {
                write!(f, "the operator's space appears finite-dimensional")
            }
            StratifyError::InvalidClaim(s) => write!(f, "invalid stratification claim: {s}"),
            StratifyError::HorizonExceeded { consumed } => {
                write!(f, "family horizon exceeded after {consumed} vectors")
            }
        }
    }
}

impl core::error::Error for StratifyError {}

impl From<FamilyError> for StratifyError {
    fn from(e: FamilyError) -> Self {
        match e {
            FamilyError::HorizonExceeded { consumed } => {
                StratifyError::HorizonExceeded { consumed }
            }
            FamilyError::DependentFamily { member, power } => StratifyError::InvalidClaim(
                alloc::format!("family vector (stratum {member}, power {power}) is dependent"),
            ),
        }
    }
}

/// A permutation of `ℕ` that optionally moves one index to the front.
#[derive(Clone, Copy, Debug)]
struct Enumeration {
    first: Option<usize>,
}

impl Enumeration {
    fn at(&self, pos: usize) -> usize {
        match self.first {
            None => pos,
            Some(f) => {
                if pos == 0 {
                    f
                } else if pos - 1 < f {
                    pos - 1
                } else {
                    pos
                }
            }
        }
    }
}

struct StratState {
    op: Endomorphism,
    config: Config,
    kind: StratKind,
    strata: Vec<Stratum>,
    family: Option<FamilySpan>,
    enumeration: Enumeration,
    cursor: usize,
    flagged: bool,
}

/// A stratification handle: strata, the accumulated family span, and the
/// lazy extension state for `ω`-indexed builds. Cheap to clone.
#[derive(Clone)]
pub struct Stratification {
    inner: Rc<RefCell<StratState>>,
}

impl fmt::Debug for Stratification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let state = self.inner.borrow();
        f.debug_struct("Stratification")
            .field("kind", &state.kind)
            .field("materialized", &state.strata.len())
            .field("flagged", &state.flagged)
            .finish()
    }
}

/// Margin added to the termination scan beyond the finite family size, so a
/// large finite stratum cannot fake a terminating build.
const SCAN_MARGIN: usize = 8;

impl Stratification {
    pub fn kind(&self) -> StratKind {
        self.inner.borrow().kind
    }

    pub fn mode(&self) -> Mode {
        self.inner.borrow().config.mode
    }

    pub fn config(&self) -> Config {
        self.inner.borrow().config
    }

    /// Whether any claim rests on horizon evidence rather than certificates.
    pub fn flagged(&self) -> bool {
        self.inner.borrow().flagged
    }

    pub fn operator(&self) -> Endomorphism {
        self.inner.borrow().op.clone()
    }

    pub fn materialized_len(&self) -> usize {
        self.inner.borrow().strata.len()
    }

    /// The stratum at `index`, materializing it first for `ω`-indexed
    /// stratifications.
    pub fn stratum(&self, index: usize) -> Result<Stratum, StratifyError> {
        self.ensure_strata(index + 1)?;
        Ok(self.inner.borrow().strata[index].clone())
    }

    pub fn strata_snapshot(&self) -> Vec<Stratum> {
        self.inner.borrow().strata.clone()
    }

    /// Makes at least `count` strata available; errors for a `FiniteList`
    /// shorter than that.
    pub fn ensure_strata(&self, count: usize) -> Result<(), StratifyError> {
        loop {
            {
                let state = self.inner.borrow();
                if state.strata.len() >= count {
                    return Ok(());
                }
                if let StratKind::FiniteList(m) = state.kind {
                    return Err(StratifyError::InvalidClaim(alloc::format!(
                        "stratum {count} requested from a {m}-stratum list"
                    )));
                }
            }
            let mut state = self.inner.borrow_mut();
            if state.strata.len() < count {
                materialize_next(&mut state)?;
            }
        }
    }

    /// Exact coordinates of `x` over the stratification family, extending
    /// orbits and (for `ω`-indexed builds) strata on demand.
    pub fn coordinates(&self, x: &FinVector) -> Result<FamilyCoords, StratifyError> {
        let mut state = self.inner.borrow_mut();
        let budget = state.config.family_horizon;
        let mut strata_budget = budget;
        loop {
            let kind = state.kind;
            let family = state_family(&mut state)?;
            match family.coordinates(x, budget) {
                Ok(coords) => return Ok(coords),
                Err(FamilyError::HorizonExceeded { consumed }) => {
                    if kind == StratKind::OmegaIndexed && strata_budget > 0 {
                        strata_budget -= 1;
                        materialize_next(&mut state)?;
                    } else {
                        return Err(StratifyError::HorizonExceeded { consumed });
                    }
                }
                Err(e) => return Err(e.into()),
            }
        }
    }

    /// The family vector `u^power x_stratum`.
    pub fn family_vector(&self, stratum: usize, power: usize) -> Result<FinVector, StratifyError> {
        self.ensure_strata(stratum + 1)?;
        let mut state = self.inner.borrow_mut();
        let family = state_family(&mut state)?;
        Ok(family.family_vector(stratum, power))
    }

    /// Assembles a stratification from explicit strata without validation;
    /// the constructor for tests, corruption experiments, and re-loading.
    pub fn from_parts(
        op: &Endomorphism,
        config: Config,
        kind: StratKind,
        strata: Vec<Stratum>,
    ) -> Stratification {
        Stratification {
            inner: Rc::new(RefCell::new(StratState {
                op: op.clone(),
                config,
                kind,
                cursor: strata.len(),
                strata,
                family: None,
                enumeration: Enumeration { first: None },
                flagged: false,
            })),
        }
    }
}

fn state_family(state: &mut StratState) -> Result<&mut FamilySpan, StratifyError> {
    if state.family.is_none() {
        let mut family = FamilySpan::new(&state.op);
        for s in &state.strata {
            family.push_member(s.generator.clone(), s.dimension)?;
        }
        state.family = Some(family);
    }
    Ok(state.family.as_mut().unwrap())
}

/// Outcome of scanning basis vectors for a free orbit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FreeScan {
    /// `e_index` has a free orbit, with `x, u x, …, u^evidence x`
    /// independent.
    Found {
        index: usize,
        evidence: usize,
    },
    NoneWithinHorizon,
}

/// Scans `e_0, e_1, …, e_{scan_count-1}` for the first vector whose orbit
/// is free up to `horizon`.
pub fn find_free_vector(u: &Endomorphism, horizon: usize, scan_count: usize) -> FreeScan {
    assert!(horizon >= 1, "horizon must be at least 1");
    for k in 0..scan_count {
        let report = orbit_dimension(u, &FinVector::basis(u.field(), k), horizon);
        if let OrbitOutcome::FreeUpTo(h) = report.outcome {
            return FreeScan::Found {
                index: k,
                evidence: h,
            };
        }
    }
    FreeScan::NoneWithinHorizon
}

/// Builds a stratification of the operator's module structure by the greedy
/// rule, placing a free generator first when one is found.
pub fn build_stratification(
    u: &Endomorphism,
    config: Config,
) -> Result<Stratification, StratifyError> {
    assert!(config.validate(), "invalid configuration");
    if config.mode == Mode::Certified
        && matches!(
            u.certificate(),
            crate::operator::StructureCertificate::Unknown
        )
    {
        return Err(StratifyError::CertificateRequired);
    }
    let mut first = free_first_index(u, &config);
    for _attempt in 0..2 {
        match build_with_enumeration(u, config, Enumeration { first }) {
            Ok(s) => return Ok(s),
            Err(BuildFailure::FirstStratumFinite { free_candidate }) => {
                // A terminating build must start with an infinite stratum;
                // retry with the discovered free generator up front.
                first = Some(free_candidate);
            }
            Err(BuildFailure::Error(e)) => return Err(e),
        }
    }
    Err(StratifyError::NotInfiniteDimensional)
}

fn free_first_index(u: &Endomorphism, config: &Config) -> Option<usize> {
    use crate::operator::{BlockStructure, StructureCertificate};
    match u.certificate() {
        StructureCertificate::LocallyAlgebraic => None,
        StructureCertificate::FreeShiftLike { generator, .. } => Some(*generator),
        StructureCertificate::BlockDirectSum(blocks) => blocks
            .iter()
            .filter_map(|(_, s)| match s {
                BlockStructure::ShiftFree { generator } => Some(*generator),
                BlockStructure::Torsion => None,
            })
            .min(),
        StructureCertificate::Unknown => {
            match find_free_vector(u, config.orbit_horizon, config.free_scan) {
                FreeScan::Found { index, .. } => Some(index),
                FreeScan::NoneWithinHorizon => None,
            }
        }
    }
}

enum BuildFailure {
    Error(StratifyError),
    FirstStratumFinite { free_candidate: usize },
}

impl From<StratifyError> for BuildFailure {
    fn from(e: StratifyError) -> Self {
        BuildFailure::Error(e)
    }
}

fn build_with_enumeration(
    u: &Endomorphism,
    config: Config,
    enumeration: Enumeration,
) -> Result<Stratification, BuildFailure> {
    let mut state = StratState {
        op: u.clone(),
        config,
        kind: StratKind::OmegaIndexed, // provisional
        strata: Vec::new(),
        family: Some(FamilySpan::new(u)),
        enumeration,
        cursor: 0,
        flagged: false,
    };
    loop {
        match next_stratum_step(&mut state)? {
            StepOutcome::Stratum => {
                if state.strata.len() >= state.config.omega_probe {
                    if !u.certificate().all_orbits_finite() {
                        state.flagged = true;
                    }
                    state.kind = StratKind::OmegaIndexed;
                    break;
                }
            }
            StepOutcome::Terminated => {
                let has_infinite = state.strata.iter().any(|s| s.dimension.is_infinite());
                if !has_infinite {
                    return Err(BuildFailure::Error(StratifyError::NotInfiniteDimensional));
                }
                if !state.strata[0].dimension.is_infinite() {
                    let free_candidate = state
                        .strata
                        .iter()
                        .find(|s| s.dimension.is_infinite())
                        .unwrap()
                        .provenance;
                    return Err(BuildFailure::FirstStratumFinite { free_candidate });
                }
                state.kind = StratKind::FiniteList(state.strata.len());
                break;
            }
        }
    }
    Ok(Stratification {
        inner: Rc::new(RefCell::new(state)),
    })
}

enum StepOutcome {
    Stratum,
    Terminated,
}

/// One greedy step: scan the enumeration from the cursor for the first
/// basis vector outside the current span and open a stratum there; report
/// termination when the scan bound is exhausted with every candidate
/// spanned.
fn next_stratum_step(state: &mut StratState) -> Result<StepOutcome, StratifyError> {
    let finite_family: usize = state
        .strata
        .iter()
        .map(|s| match s.dimension {
            Dimension::Finite(d) => d,
            Dimension::Infinite => 0,
        })
        .sum();
    let scan_target = state
        .config
        .termination_scan
        .max(finite_family + SCAN_MARGIN)
        .max(state.cursor + 1);
    let budget = state.config.family_horizon;
    let mode = state.config.mode;
    let field = state.op.field();
    let orbit_horizon = state.config.orbit_horizon;
    let enumeration = state.enumeration;
    let certificate = state.op.certificate().clone();

    let mut pos = state.cursor;
    let candidate = loop {
        if pos >= scan_target {
            state.cursor = pos;
            return Ok(StepOutcome::Terminated);
        }
        let k = enumeration.at(pos);
        let probe = FinVector::basis(field, k);
        let family = state_family(state)?;
        match family.reduce_with_extension(&probe, budget)? {
            FamilyMembership::Member { .. } => {
                pos += 1;
            }
            FamilyMembership::NotMember { certified, .. } => {
                if !certified {
                    if mode == Mode::Certified {
                        return Err(StratifyError::UndecidableMembership { candidate: k });
                    }
                    state.flagged = true;
                }
                break k;
            }
        }
    };

    let generator = FinVector::basis(field, candidate);
    let family = state_family(state)?;
    let (dim, certified) = family.discover_member(generator.clone(), orbit_horizon);
    if !certified {
        if mode == Mode::Certified {
            if certificate.orbit_certainly_finite(&generator) {
                return Err(StratifyError::CertificateViolated {
                    detail: alloc::format!(
                        "orbit of e_{candidate} exceeded the horizon under a torsion claim"
                    ),
                });
            }
            return Err(StratifyError::UndecidableMembership { candidate });
        }
        state.flagged = true;
    }
    state.strata.push(Stratum {
        generator,
        dimension: dim,
        provenance: candidate,
        certified,
    });
    state.cursor = pos + 1;
    Ok(StepOutcome::Stratum)
}

fn materialize_next(state: &mut StratState) -> Result<(), StratifyError> {
    match next_stratum_step(state)? {
        StepOutcome::Stratum => Ok(()),
        StepOutcome::Terminated => Err(StratifyError::InvalidClaim(String::from(
            "omega-indexed stratification stopped producing strata",
        ))),
    }
}

/// One problem found by window validation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StratIssue {
    /// Stratum generator already lies in the span of earlier strata.
    GeneratorInSpan { stratum: usize },
    /// A family vector depends on earlier family vectors.
    DependentFamilyVector { stratum: usize, power: usize },
    /// A window column is not spanned by the family prefix.
    ColumnNotSpanned { column: usize },
    /// The stratification could not supply the strata the window needs.
    MaterializationFailed { detail: String },
}

impl fmt::Display for StratIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StratIssue::GeneratorInSpan { stratum } => {
                write!(f, "generator of stratum {stratum} lies in the earlier span")
            }
            StratIssue::DependentFamilyVector { stratum, power } => {
                write!(
                    f,
                    "family vector (stratum {stratum}, power {power}) is dependent"
                )
            }
            StratIssue::ColumnNotSpanned { column } => {
                write!(f, "column e_{column} is not spanned by the family")
            }
            StratIssue::MaterializationFailed { detail } => {
                write!(f, "could not materialize strata: {detail}")
            }
        }
    }
}

/// Window validation report: independence, spanning, and generator checks
/// over the strata prefix needed to cover the window.
#[derive(Clone, Debug)]
pub struct StratReport {
    pub window: usize,
    pub strata_used: usize,
    pub issues: Vec<StratIssue>,
    /// Coordinates of each window column over the family, for downstream
    /// reporting.
    pub column_coords: BTreeMap<usize, FamilyCoords>,
}

impl StratReport {
    pub fn pass(&self) -> bool {
        self.issues.is_empty()
    }
}

/// Validates a stratification over the first `window` columns with fresh
/// machinery: each needed generator must avoid the earlier span, the family
/// must stay independent, and every `e_j` (`j < window`) must be spanned.
pub fn validate_stratification(u: &Endomorphism, s: &Stratification, window: usize) -> StratReport {
    let config = s.config();
    let budget = config.family_horizon.max(window * 4);
    let max_strata = window + SCAN_MARGIN;
    let mut family = FamilySpan::new(u);
    let mut issues = Vec::new();
    let mut column_coords = BTreeMap::new();
    let mut pushed = 0usize;

    'columns: for j in 0..window {
        let target = FinVector::basis(u.field(), j);
        loop {
            match family.reduce_with_extension(&target, budget) {
                Ok(FamilyMembership::Member { coords }) => {
                    column_coords.insert(j, coords);
                    continue 'columns;
                }
                Ok(FamilyMembership::NotMember { .. }) => {
                    if pushed >= max_strata {
                        issues.push(StratIssue::ColumnNotSpanned { column: j });
                        continue 'columns;
                    }
                    let stratum = match s.stratum(pushed) {
                        Ok(st) => st,
                        Err(e) => {
                            issues.push(StratIssue::MaterializationFailed {
                                detail: alloc::format!("{e}"),
                            });
                            issues.push(StratIssue::ColumnNotSpanned { column: j });
                            continue 'columns;
                        }
                    };
                    // The generator must be new relative to everything
                    // inserted so far.
                    match family.reduce_with_extension(&stratum.generator, budget) {
                        Ok(FamilyMembership::Member { .. }) => {
                            issues.push(StratIssue::GeneratorInSpan { stratum: pushed });
                            pushed += 1;
                            continue;
                        }
                        Ok(FamilyMembership::NotMember { .. }) => {}
                        Err(FamilyError::DependentFamily { member, power }) => {
                            issues.push(StratIssue::DependentFamilyVector {
                                stratum: member,
                                power,
                            });
                            break 'columns;
                        }
                        Err(FamilyError::HorizonExceeded { .. }) => {}
                    }
                    if let Err(e) = family.push_member(stratum.generator.clone(), stratum.dimension)
                    {
                        match e {
                            FamilyError::DependentFamily { member, power } => {
                                issues.push(StratIssue::DependentFamilyVector {
                                    stratum: member,
                                    power,
                                });
                            }
                            FamilyError::HorizonExceeded { .. } => {
                                issues.push(StratIssue::MaterializationFailed {
                                    detail: String::from("horizon while inserting a stratum"),
                                });
                            }
                        }
                        break 'columns;
                    }
                    pushed += 1;
                }
                Err(FamilyError::DependentFamily { member, power }) => {
                    issues.push(StratIssue::DependentFamilyVector {
                        stratum: member,
                        power,
                    });
                    break 'columns;
                }
                Err(FamilyError::HorizonExceeded { .. }) => {
                    issues.push(StratIssue::ColumnNotSpanned { column: j });
                    continue 'columns;
                }
            }
        }
    }

    StratReport {
        window,
        strata_used: pushed,
        issues,
        column_coords,
    }
}
