//! JSON artifact formats: decomposition files, strata tables, verification
//! reports, oracle reports.
//!
//! Artifacts are deterministic: fixed field order, ordered keys, canonical
//! scalar strings. A decomposition file carries summand column tables wide
//! enough that every window identity can be re-checked from the file alone.

use anyhow::{anyhow, Context, Result};
use serde::{Deserialize, Serialize};

use quadsum_core::config::{Config, Mode};
use quadsum_core::decompose::Decomposition;
use quadsum_core::operator::Endomorphism;
use quadsum_core::poly::QuadraticPoly;
use quadsum_core::scalar::FieldSpec;
use quadsum_core::stratify::{StratKind, StratReport, Stratification};
use quadsum_core::vector::FinVector;
use quadsum_core::verify::{OracleReport, ValidationReport};

use crate::spec_io::{pairs_to_vector, vector_to_pairs, OpNode};

pub type Pairs = Vec<(usize, String)>;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FailureJson {
    pub summand: Option<usize>,
    pub column: usize,
    pub residual: Pairs,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReportJson {
    pub window: usize,
    pub checks_run: usize,
    pub pass: bool,
    pub failures: Vec<FailureJson>,
}

impl ReportJson {
    pub fn from_report(r: &ValidationReport) -> Self {
        ReportJson {
            window: r.window,
            checks_run: r.checks_run,
            pass: r.pass(),
            failures: r
                .failures
                .iter()
                .map(|f| FailureJson {
                    summand: f.summand,
                    column: f.column,
                    residual: vector_to_pairs(&f.residual),
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConfigJson {
    pub window: usize,
    pub orbit_horizon: usize,
    pub family_horizon: usize,
    pub mode: String,
}

impl ConfigJson {
    pub fn from_config(c: &Config) -> Self {
        ConfigJson {
            window: c.window,
            orbit_horizon: c.orbit_horizon,
            family_horizon: c.family_horizon,
            mode: match c.mode {
                Mode::Certified => "certified".into(),
                Mode::Heuristic => "heuristic".into(),
            },
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SummandJson {
    /// Monic coefficient triple `[1, b, c]` of the annihilating polynomial.
    pub poly: Vec<String>,
    /// Column table: `columns[j]` is the sparse image of `e_j`.
    pub columns: Vec<Pairs>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WitnessJson {
    pub generators: Vec<Pairs>,
    pub groups: Vec<Vec<usize>>,
    pub window: usize,
}

/// The `dec.json` format.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecFile {
    pub version: u32,
    pub field: String,
    /// Canonical echo of the input operator: the generating rule that,
    /// with the config below, reproduces the summands beyond the window.
    pub operator: OpNode,
    pub window: usize,
    /// Columns stored per summand: enough to evaluate every annihilation
    /// identity on the window from the tables alone.
    pub table_width: usize,
    pub shift: String,
    pub seed: u64,
    pub config: ConfigJson,
    pub summands: Vec<SummandJson>,
    pub witness: Option<WitnessJson>,
    pub report: ReportJson,
}

impl DecFile {
    pub fn build(dec: &Decomposition, operator: OpNode, config: &Config, seed: u64) -> DecFile {
        let window = dec.report.window;
        // Width: every support index reachable by one more application.
        let mut width = window;
        for (op, _) in &dec.summands {
            for j in 0..window {
                if let Some(m) = op.column_rc(j).max_index() {
                    width = width.max(m + 1);
                }
            }
        }
        let summands = dec
            .summands
            .iter()
            .map(|(op, poly)| SummandJson {
                poly: poly.coefficients().iter().map(|c| c.to_string()).collect(),
                columns: (0..width)
                    .map(|j| vector_to_pairs(&op.column_rc(j)))
                    .collect(),
            })
            .collect();
        let witness = dec.witness.as_ref().map(|w| WitnessJson {
            generators: w.generators.iter().map(vector_to_pairs).collect(),
            groups: w.groups.clone(),
            window: w.window,
        });
        DecFile {
            version: 1,
            field: dec.input.field().to_string(),
            operator,
            window,
            table_width: width,
            shift: dec.shift.to_string(),
            seed,
            config: ConfigJson::from_config(config),
            summands,
            witness,
            report: ReportJson::from_report(&dec.report),
        }
    }

    /// Re-checks the stored tables against an operator: the sum identity and
    /// every annihilation identity on the window, exactly.
    pub fn reverify(
        &self,
        field: FieldSpec,
        u: &Endomorphism,
        window: usize,
    ) -> Result<ValidationReport> {
        if field.to_string() != self.field {
            return Err(anyhow!(
                "field mismatch: operator over {field}, decomposition over {}",
                self.field
            ));
        }
        let window = window.min(self.window);
        let mut tables: Vec<Vec<FinVector>> = Vec::new();
        let mut polys: Vec<QuadraticPoly> = Vec::new();
        for s in &self.summands {
            if s.poly.len() != 3 {
                return Err(anyhow!("polynomial must be a coefficient triple"));
            }
            let lead = field.parse_scalar(&s.poly[0]).map_err(|e| anyhow!("{e}"))?;
            if !lead.is_one() {
                return Err(anyhow!("polynomial must be monic"));
            }
            let linear = field.parse_scalar(&s.poly[1]).map_err(|e| anyhow!("{e}"))?;
            let constant = field.parse_scalar(&s.poly[2]).map_err(|e| anyhow!("{e}"))?;
            polys.push(QuadraticPoly::monic(linear, constant));
            let cols = s
                .columns
                .iter()
                .map(|pairs| pairs_to_vector(field, pairs))
                .collect::<Result<Vec<_>>>()
                .context("summand column table")?;
            tables.push(cols);
        }
        let apply_table = |table: &[FinVector], x: &FinVector| -> Result<FinVector> {
            let mut out = FinVector::zero(field);
            for (i, c) in x.iter() {
                let col = table
                    .get(i)
                    .ok_or_else(|| anyhow!("table too narrow: column {i} needed"))?;
                out.add_scaled(c, col);
            }
            Ok(out)
        };
        let mut failures = Vec::new();
        let mut checks_run = 0usize;
        for j in 0..window {
            let mut sum = FinVector::zero(field);
            for table in &tables {
                sum.add_scaled(&field.one(), &table[j]);
            }
            let residual = &sum - &u.column_rc(j);
            checks_run += 1;
            if !residual.is_zero() {
                failures.push(quadsum_core::verify::CheckFailure {
                    summand: None,
                    column: j,
                    residual,
                });
            }
            for (k, (table, poly)) in tables.iter().zip(&polys).enumerate() {
                checks_run += 1;
                let col = &table[j];
                let mut value = apply_table(table, col)?;
                value.add_scaled(poly.linear(), col);
                value.add_scaled(poly.constant(), &FinVector::basis(field, j));
                if !value.is_zero() {
                    failures.push(quadsum_core::verify::CheckFailure {
                        summand: Some(k),
                        column: j,
                        residual: value,
                    });
                }
            }
        }
        Ok(ValidationReport {
            window,
            checks_run,
            failures,
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StratumJson {
    pub index: usize,
    pub provenance: usize,
    /// `"inf"` or the decimal dimension.
    pub dimension: String,
    pub generator: Pairs,
    pub certified: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StratReportJson {
    pub window: usize,
    pub strata_used: usize,
    pub pass: bool,
    pub issues: Vec<String>,
}

/// The `stratify` artifact.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StrataFile {
    pub version: u32,
    pub field: String,
    /// Canonical echo of the input operator.
    pub operator: OpNode,
    pub kind: String,
    pub mode: String,
    pub flagged: bool,
    pub window: usize,
    pub strata: Vec<StratumJson>,
    pub validation: StratReportJson,
}

impl StrataFile {
    pub fn build(
        s: &Stratification,
        operator: OpNode,
        report: &StratReport,
        window: usize,
    ) -> StrataFile {
        let strata = s
            .strata_snapshot()
            .into_iter()
            .enumerate()
            .map(|(index, st)| StratumJson {
                index,
                provenance: st.provenance,
                dimension: st.dimension.to_string(),
                generator: vector_to_pairs(&st.generator),
                certified: st.certified,
            })
            .collect();
        StrataFile {
            version: 1,
            field: s.operator().field().to_string(),
            operator,
            kind: match s.kind() {
                StratKind::FiniteList(m) => format!("finite:{m}"),
                StratKind::OmegaIndexed => "omega".into(),
            },
            mode: match s.mode() {
                Mode::Certified => "certified".into(),
                Mode::Heuristic => "heuristic".into(),
            },
            flagged: s.flagged(),
            window,
            strata,
            validation: StratReportJson {
                window: report.window,
                strata_used: report.strata_used,
                pass: report.pass(),
                issues: report.issues.iter().map(|i| i.to_string()).collect(),
            },
        }
    }
}

/// The `oracle` artifact.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OracleFile {
    pub version: u32,
    pub property: String,
    pub field: String,
    pub dimension: usize,
    pub cases: usize,
    pub seed: Option<u64>,
    pub pass: bool,
    pub vacuous: bool,
    pub counterexample: Option<String>,
    pub detail: String,
}

impl OracleFile {
    pub fn from_report(r: &OracleReport) -> Self {
        OracleFile {
            version: 1,
            property: r.property.clone(),
            field: r.field.to_string(),
            dimension: r.dimension,
            cases: r.cases,
            seed: r.seed,
            pass: r.pass(),
            vacuous: r.vacuous,
            counterexample: r.counterexample.clone(),
            detail: r.detail.clone(),
        }
    }
}

pub fn to_json<T: Serialize>(value: &T, pretty: bool) -> String {
    if pretty {
        serde_json::to_string_pretty(value).expect("serializable")
    } else {
        serde_json::to_string(value).expect("serializable")
    }
}
