//! Subcommand implementations. Each returns the process exit code: 0 when
//! every check passes, 1 when a check fails or the mathematics refuses;
//! malformed inputs surface as errors (exit 2 in main).

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};

use quadsum_core::config::{Config, Mode};
use quadsum_core::connect::elementary_witness;
use quadsum_core::decompose::{four_sum, two_sum_elementary, Decomposition};
use quadsum_core::operator::Endomorphism;
use quadsum_core::poly::{poly_from_strings, preset, QuadraticPoly};
use quadsum_core::scalar::FieldSpec;
use quadsum_core::span::Dimension;
use quadsum_core::stratify::{build_stratification, validate_stratification};
use quadsum_core::verify::{
    oracle_three_idempotents, oracle_three_squarezero, three_idempotent_scalar_obstruction,
};

use crate::artifacts::{to_json, DecFile, OracleFile, StrataFile};
use crate::spec_io::{parse_field, OpFile, OpNode};

fn read_operator(path: &Path) -> Result<(FieldSpec, Endomorphism, OpNode)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let (field, spec, _) = OpFile::parse(&text)?;
    let op = spec.build(field).map_err(|e| anyhow!("{e}"))?;
    // Echo the canonical form (parse -> serialize -> parse is the identity).
    Ok((field, op, OpNode::from_spec(&spec)))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))?
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn build_config(window: usize, mode: &str) -> Result<Config> {
    if window == 0 {
        bail!("window must be at least 1");
    }
    let mut config = Config::with_window(window);
    config.mode = match mode {
        "heuristic" => Mode::Heuristic,
        "certified" => Mode::Certified,
        other => bail!("unknown mode {other:?} (expected heuristic or certified)"),
    };
    Ok(config)
}

pub fn stratify(
    input: &Path,
    window: usize,
    mode: &str,
    out: &Option<PathBuf>,
    pretty: bool,
) -> Result<i32> {
    let (_, op, node) = read_operator(input)?;
    let config = build_config(window, mode)?;
    let s = match build_stratification(&op, config) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("stratification failed: {e}");
            return Ok(1);
        }
    };
    let report = validate_stratification(&op, &s, window);
    let file = StrataFile::build(&s, node, &report, window);
    emit(out, &to_json(&file, pretty))?;
    Ok(if report.pass() { 0 } else { 1 })
}

/// Parses `--polys`: a preset name or an inline JSON list of coefficient
/// triples.
fn parse_polys(field: FieldSpec, text: &str) -> Result<Vec<QuadraticPoly>> {
    if let Some(list) = preset(field, text) {
        return Ok(list);
    }
    let triples: Vec<Vec<String>> = serde_json::from_str(text)
        .with_context(|| format!("{text:?} is neither a preset nor a JSON list of triples"))?;
    triples
        .iter()
        .map(|t| {
            poly_from_strings(field, t)
                .ok_or_else(|| anyhow!("bad coefficient triple {t:?} (must be monic)"))
        })
        .collect()
}

pub fn decompose(
    input: &Path,
    polys: &str,
    window: usize,
    mode: &str,
    seed: u64,
    out: &Option<PathBuf>,
    pretty: bool,
) -> Result<i32> {
    let (field, op, node) = read_operator(input)?;
    let config = build_config(window, mode)?;
    let polys = parse_polys(field, polys)?;
    let dec: Decomposition = match polys.len() {
        2 => {
            let s = match build_stratification(&op, config) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("stratification failed: {e}");
                    return Ok(1);
                }
            };
            let witness = match elementary_witness(&op, &s, window) {
                Ok(w) => std::rc::Rc::new(w),
                Err(e) => {
                    eprintln!("operator is not elementary at this window: {e}");
                    return Ok(1);
                }
            };
            match two_sum_elementary(&op, &witness, &polys[0], &polys[1], window) {
                Ok(d) => d,
                Err(e) => {
                    eprintln!("decomposition failed: {e}");
                    return Ok(1);
                }
            }
        }
        4 => match four_sum(&op, &polys, config) {
            Ok(d) => d,
            Err(e) => {
                eprintln!("decomposition failed: {e}");
                return Ok(1);
            }
        },
        n => bail!("expected 2 or 4 polynomials, got {n}"),
    };
    let file = DecFile::build(&dec, node, &config, seed);
    emit(out, &to_json(&file, pretty))?;
    if file.report.pass {
        Ok(0)
    } else {
        eprintln!("decomposition produced but window checks failed");
        Ok(1)
    }
}

pub fn verify(
    input: &Path,
    decomposition: &Path,
    window: Option<usize>,
    out: &Option<PathBuf>,
    pretty: bool,
) -> Result<i32> {
    let (field, op, _) = read_operator(input)?;
    let text = fs::read_to_string(decomposition)
        .with_context(|| format!("reading {}", decomposition.display()))?;
    let file: DecFile = serde_json::from_str(&text).context("decomposition JSON")?;
    let window = window.unwrap_or(file.window);
    let report = file.reverify(field, &op, window)?;
    let json = crate::artifacts::ReportJson::from_report(&report);
    emit(out, &to_json(&json, pretty))?;
    Ok(if report.pass() { 0 } else { 1 })
}

pub fn oracle(
    prop: &str,
    dim: usize,
    trials: usize,
    field: &Option<String>,
    seed: u64,
    out: &Option<PathBuf>,
    pretty: bool,
) -> Result<i32> {
    let field_text = match field {
        Some(f) => f.clone(),
        None => std::env::var("QUADSUM_FIELD").unwrap_or_else(|_| "Q".into()),
    };
    let field = parse_field(&field_text)?;
    let report = match prop {
        "3squarezero" => {
            if !(1..=6).contains(&dim) {
                bail!("3squarezero oracle supports dimensions 1..=6");
            }
            oracle_three_squarezero(dim, trials, field, seed)
        }
        "3idem" => {
            let FieldSpec::PrimeField(p) = field else {
                bail!("the 3idem oracle is exhaustive and needs a prime field (Fp:<p>)");
            };
            if !(1..=2).contains(&dim) {
                bail!("3idem oracle supports dimensions 1 and 2");
            }
            oracle_three_idempotents(p, dim)
        }
        other => bail!("unknown property {other:?} (expected 3squarezero or 3idem)"),
    };
    let file = OracleFile::from_report(&report);
    emit(out, &to_json(&file, pretty))?;
    Ok(if report.pass() { 0 } else { 1 })
}

/// Runs the canned examples end to end and prints one pass/fail line each.
pub fn demo() -> Result<i32> {
    const Q: FieldSpec = FieldSpec::Rationals;
    const F5: FieldSpec = FieldSpec::PrimeField(5);
    let mut all_pass = true;
    let mut record = |name: &str, pass: bool| {
        println!("DEMO {}: {}", name, if pass { "PASS" } else { "FAIL" });
        all_pass &= pass;
    };

    let window = 32;
    let config = Config::with_window(window);

    // Two-summand splits of the shift.
    let shift = quadsum_core::operator::OperatorSpec::Shift
        .build(Q)
        .unwrap();
    let s = build_stratification(&shift, config)?;
    let witness = std::rc::Rc::new(elementary_witness(&shift, &s, window)?);
    for (name, p) in [
        (
            "shift into two square-zero summands",
            QuadraticPoly::square_zero(Q),
        ),
        (
            "shift into two idempotent summands",
            QuadraticPoly::idempotent(Q),
        ),
    ] {
        let dec = two_sum_elementary(&shift, &witness, &p, &p, window)?;
        record(name, dec.report.pass());
    }

    // Four-summand presets.
    let zero = Endomorphism::zero(Q);
    let dec = four_sum(&zero, &vec![QuadraticPoly::square_zero(Q); 4], config)?;
    record(
        "zero operator into four square-zero summands",
        dec.report.pass(),
    );

    let one = Endomorphism::scalar(Q.one());
    let dec = four_sum(&one, &vec![QuadraticPoly::idempotent(Q); 4], config)?;
    record("identity into four idempotents", dec.report.pass());

    let patched = quadsum_core::operator::OperatorSpec::FinitePatch {
        base: Box::new(quadsum_core::operator::OperatorSpec::Shift),
        patches: [(0usize, vec![])].into_iter().collect(),
    }
    .build(F5)
    .unwrap();
    let dec = four_sum(&patched, &vec![QuadraticPoly::idempotent(F5); 4], config)?;
    record(
        "patched shift over F5 into four idempotents",
        dec.report.pass(),
    );

    // Stratification validation.
    let s = build_stratification(&patched, config)?;
    let report = validate_stratification(&patched, &s, window);
    record("patched shift stratification validates", report.pass());
    record(
        "patched shift strata are (free, torsion)",
        s.stratum(0)
            .map(|st| st.dimension == Dimension::Infinite)
            .unwrap_or(false)
            && s.stratum(1)
                .map(|st| st.dimension == Dimension::Finite(1))
                .unwrap_or(false),
    );

    // External format round trip.
    let canonical = OpFile::render(
        F5,
        &quadsum_core::operator::OperatorSpec::Scalar {
            value: F5.from_i64(7),
        },
        false,
    );
    let reparsed = OpFile::parse(&canonical)?;
    record(
        "operator spec parse/serialize round-trip",
        OpFile::render(reparsed.0, &reparsed.1, false) == canonical,
    );

    // Oracles and certificates.
    let r = oracle_three_squarezero(2, 50, Q, 0);
    record("square-zero trace oracle (dim 2, 50 trials)", r.pass());
    let r = oracle_three_idempotents(7, 1);
    record("three-idempotent oracle over F7 (dim 1)", r.pass());
    record(
        "scalar obstruction boundary (alpha = 3/2 exempt, 5 obstructed)",
        !three_idempotent_scalar_obstruction(&Q.fraction(3, 2)).is_obstruction()
            && three_idempotent_scalar_obstruction(&Q.from_i64(5)).is_obstruction(),
    );

    Ok(if all_pass { 0 } else { 1 })
}
