//! Randomized end-to-end property: whenever the four-summand pipeline
//! accepts an operator, its window report must be exactly green.

use quadsum_core::config::Config;
use quadsum_core::decompose::four_sum;
use quadsum_core::operator::{Band, JordanBlock, JordanPattern, OperatorSpec};
use quadsum_core::poly::QuadraticPoly;
use quadsum_core::scalar::FieldSpec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_spec(rng: &mut ChaCha8Rng, field: FieldSpec) -> OperatorSpec {
    let scalar = |rng: &mut ChaCha8Rng| field.from_i64(rng.gen_range(-2i64..=2));
    match rng.gen_range(0..6) {
        0 => OperatorSpec::Scalar { value: scalar(rng) },
        1 => OperatorSpec::Diagonal {
            entries: (0..rng.gen_range(1..4)).map(|_| scalar(rng)).collect(),
            periodic: true,
        },
        2 => OperatorSpec::JordanBlocks {
            pattern: JordanPattern::Cycle {
                blocks: (0..rng.gen_range(1..3))
                    .map(|_| JordanBlock {
                        size: rng.gen_range(1..4),
                        eigenvalue: scalar(rng),
                    })
                    .collect(),
            },
        },
        3 => OperatorSpec::BandedPeriodic {
            bands: vec![Band {
                offset: rng.gen_range(1..3),
                coeffs: vec![field.one()],
            }],
        },
        4 => {
            // Shift with a few random low patches: mixed free/torsion.
            let patches = (0..rng.gen_range(1..3))
                .map(|c| {
                    let entries = if rng.gen_bool(0.5) {
                        vec![]
                    } else {
                        vec![(rng.gen_range(0..4), scalar(rng))]
                    };
                    (c, entries)
                })
                .collect();
            OperatorSpec::FinitePatch {
                base: Box::new(OperatorSpec::Shift),
                patches,
            }
        }
        _ => OperatorSpec::Sum {
            terms: vec![
                OperatorSpec::Scalar { value: scalar(rng) },
                OperatorSpec::JordanBlocks {
                    pattern: JordanPattern::Cycle {
                        blocks: vec![JordanBlock {
                            size: rng.gen_range(1..4),
                            eigenvalue: scalar(rng),
                        }],
                    },
                },
            ],
        },
    }
}

fn random_split_poly(rng: &mut ChaCha8Rng, field: FieldSpec) -> QuadraticPoly {
    let x = field.from_i64(rng.gen_range(-2i64..=2));
    let y = field.from_i64(rng.gen_range(-2i64..=2));
    QuadraticPoly::from_roots(x, y)
}

#[test]
fn randomized_four_sums_verify_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xF0D5);
    let window = 16;
    let mut accepted = 0usize;
    let mut refused = 0usize;
    for field in [FieldSpec::Rationals, FieldSpec::PrimeField(5)] {
        for _ in 0..15 {
            let spec = random_spec(&mut rng, field);
            let u = spec.build(field).expect("generated specs are well-formed");
            let polys: Vec<QuadraticPoly> =
                (0..4).map(|_| random_split_poly(&mut rng, field)).collect();
            match four_sum(&u, &polys, Config::with_window(window)) {
                Ok(dec) => {
                    assert!(
                        dec.report.pass(),
                        "spec {spec:?} polys {polys:?}: {:?}",
                        dec.report.failures
                    );
                    accepted += 1;
                }
                Err(_) => {
                    // The pipeline may refuse (horizons, heuristics); it
                    // must never hand back a bad decomposition.
                    refused += 1;
                }
            }
        }
    }
    println!("randomized four-sums: {accepted} accepted, {refused} refused");
    assert!(accepted >= 20, "too many refusals: {refused}");
}
