//! Generator matrices for `τ_k = 2134…k` and `ρ_k = 234…k1`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::matrix::QMatrix;
use super::Partition;
use crate::error::{Error, Result};
use crate::perm::Permutation;
use crate::qfield::QNum;

/// Environment variable naming a JSON generator file consulted for shapes
/// without embedded tables.
pub const GENERATOR_FILE_ENV: &str = "PERMPROF_GENERATORS";

struct GeneratorLiteral {
    k: usize,
    lambda: &'static [usize],
    tau: &'static [&'static [&'static str]],
    rho: &'static [&'static [&'static str]],
}

// Trivial and alternating representations are generated, not listed.
const TABLE: &[GeneratorLiteral] = &[
    GeneratorLiteral {
        k: 3,
        lambda: &[2, 1],
        tau: &[&["-1/2", "√3/2"], &["√3/2", "1/2"]],
        rho: &[&["-1/2", "-√3/2"], &["√3/2", "-1/2"]],
    },
    GeneratorLiteral {
        k: 4,
        lambda: &[3, 1],
        tau: &[
            &["1/5", "2/(√5)", "-2/5"],
            &["2/(√5)", "0", "1/(√5)"],
            &["-2/5", "1/(√5)", "4/5"],
        ],
        rho: &[
            &["-4/5", "-1/(√5)", "-2/5"],
            &["1/(√5)", "0", "-2/(√5)"],
            &["-2/5", "2/(√5)", "-1/5"],
        ],
    },
    GeneratorLiteral {
        k: 4,
        lambda: &[2, 2],
        tau: &[&["-1", "0"], &["0", "1"]],
        rho: &[&["1/2", "√3/2"], &["√3/2", "-1/2"]],
    },
    GeneratorLiteral {
        k: 4,
        lambda: &[2, 1, 1],
        tau: &[&["0", "0", "1"], &["0", "-1", "0"], &["1", "0", "0"]],
        rho: &[&["0", "1", "0"], &["-1", "0", "0"], &["0", "0", "1"]],
    },
    GeneratorLiteral {
        k: 5,
        lambda: &[4, 1],
        tau: &[
            &["1/10", "-3/10", "3/(2√7)", "9/(2√35)"],
            &["-3/10", "9/10", "1/(2√7)", "3/(2√35)"],
            &["3/(2√7)", "1/(2√7)", "9/14", "-3√5/14"],
            &["9/(2√35)", "3/(2√35)", "-3√5/14", "5/14"],
        ],
        rho: &[
            &["-1/2", "-1/2", "3/(2√7)", "-√5/(2√7)"],
            &["-1/2", "0", "1/(2√7)", "√5/(√7)"],
            &["-3/(2√7)", "-1/(2√7)", "-11/14", "-√5/14"],
            &["√5/(2√7)", "-√5/(√7)", "-√5/14", "2/7"],
        ],
    },
    GeneratorLiteral {
        k: 5,
        lambda: &[3, 2],
        tau: &[
            &["-6/7", "0", "-1/(√7)", "0", "-√6/7"],
            &["0", "1", "0", "0", "0"],
            &["-1/(√7)", "0", "0", "0", "√6/(√7)"],
            &["0", "0", "0", "1", "0"],
            &["-√6/7", "0", "√6/(√7)", "0", "-1/7"],
        ],
        rho: &[
            &["2/7", "3/(2√7)", "-2/(√7)", "-1/(2√14)", "-√3/(14√2)"],
            &["-3/(2√7)", "-1/2", "-1/2", "-1/(2√2)", "-√3/(2√14)"],
            &["2/(√7)", "-1/2", "0", "-1/(2√2)", "-√3/(2√14)"],
            &["-1/(2√14)", "1/(2√2)", "1/(2√2)", "-1/4", "-5√3/(4√7)"],
            &[
                "-√3/(14√2)",
                "√3/(2√14)",
                "√3/(2√14)",
                "-5√3/(4√7)",
                "13/28",
            ],
        ],
    },
    GeneratorLiteral {
        k: 5,
        lambda: &[3, 1, 1],
        tau: &[
            &["2/5", "-√6/5", "√3/(√5)", "0", "0", "0"],
            &["-√6/5", "3/5", "√2/(√5)", "0", "0", "0"],
            &["√3/(√5)", "√2/(√5)", "0", "0", "0", "0"],
            &["0", "0", "0", "0", "1/(√7)", "-√6/(√7)"],
            &["0", "0", "0", "1/(√7)", "-6/7", "-√6/7"],
            &["0", "0", "0", "-√6/(√7)", "-√6/7", "-1/7"],
        ],
        rho: &[
            &["1", "0", "0", "0", "0", "0"],
            &["0", "-1/4", "-√5/(6√2)", "-5/(6√2)", "5/(2√14)", "5/(4√21)"],
            &["0", "√5/(6√2)", "1/6", "√5/6", "√5/(6√7)", "5√5/(2√42)"],
            &["0", "5/(6√2)", "√5/6", "-2/3", "-2/(3√7)", "1/(2√42)"],
            &["0", "5/(2√14)", "-√5/(6√7)", "2/(3√7)", "4/7", "-13/(14√6)"],
            &[
                "0",
                "5/(4√21)",
                "-5√5/(2√42)",
                "-1/(2√42)",
                "-13/(14√6)",
                "5/28",
            ],
        ],
    },
    GeneratorLiteral {
        k: 5,
        lambda: &[2, 2, 1],
        tau: &[
            &["-1/5", "2/5", "0", "2/(√15)", "2√2/(√15)"],
            &["2/5", "-4/5", "0", "1/(√15)", "√2/(√15)"],
            &["0", "0", "1", "0", "0"],
            &["2/(√15)", "1/(√15)", "0", "-2/3", "√2/3"],
            &["2√2/(√15)", "√2/(√15)", "0", "√2/3", "-1/3"],
        ],
        rho: &[
            &["3/10", "-1/10", "3√3/(2√10)", "√3/(2√5)", "√3/(2√10)"],
            &["-1/10", "-4/5", "-√3/(2√10)", "2/(√15)", "-1/(2√30)"],
            &["-3√3/(2√10)", "√3/(2√10)", "1/4", "1/(2√2)", "-1/4"],
            &["-√3/(2√5)", "-2/(√15)", "1/(2√2)", "-2/3", "1/(6√2)"],
            &["-√3/(2√10)", "1/(2√30)", "-1/4", "1/(6√2)", "11/12"],
        ],
    },
    GeneratorLiteral {
        k: 5,
        lambda: &[2, 1, 1, 1],
        tau: &[
            &["-1/6", "√5/(2√3)", "√5/6", "√5/(2√3)"],
            &["√5/(2√3)", "-1/2", "1/(2√3)", "1/2"],
            &["√5/6", "1/(2√3)", "-5/6", "1/(2√3)"],
            &["√5/(2√3)", "1/2", "1/(2√3)", "-1/2"],
        ],
        rho: &[
            &["-2/3", "0", "√5/6", "√5/(2√3)"],
            &["0", "0", "√3/2", "-1/2"],
            &["√5/6", "-√3/2", "1/6", "1/(2√3)"],
            &["-√5/(2√3)", "-1/2", "-1/(2√3)", "-1/2"],
        ],
    },
];

/// One entry of a generator file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeneratorFile {
    pub k: usize,
    pub lambda: Vec<usize>,
    pub tau: QMatrix,
    pub rho: QMatrix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Generators {
    pub k: usize,
    pub lambda: Partition,
    pub tau: QMatrix,
    pub rho: QMatrix,
}

/// `τ_k` as a permutation (identity for `k < 2`).
pub fn tau(k: usize) -> Permutation {
    let mut v: Vec<u32> = (1..=k as u32).collect();
    if k >= 2 {
        v.swap(0, 1);
    }
    Permutation::from_one_line(&v).expect("valid")
}

/// `ρ_k` as a permutation.
pub fn rho(k: usize) -> Permutation {
    let v: Vec<u32> = (0..k as u32).map(|i| (i + 1) % k as u32 + 1).collect();
    Permutation::from_one_line(&v).expect("valid")
}

fn literal_matrix(rows: &[&[&str]]) -> QMatrix {
    let rows = rows
        .iter()
        .map(|r| {
            r.iter()
                .map(|s| QNum::parse_radical(s).expect("embedded literal"))
                .collect()
        })
        .collect();
    QMatrix::from_rows(rows).expect("embedded literal")
}

fn scalar(v: i64) -> QMatrix {
    QMatrix::from_rows(vec![vec![QNum::from_int(v)]]).expect("1x1")
}

/// Generators from the embedded tables, then from [`GENERATOR_FILE_ENV`].
pub fn load_generators(k: usize, lambda: &Partition) -> Result<Generators> {
    match embedded(k, lambda)? {
        Some(g) => Ok(g),
        None => {
            let extra = match std::env::var_os(GENERATOR_FILE_ENV) {
                Some(path) => read_generator_file(Path::new(&path))?,
                None => Vec::new(),
            };
            load_generators_from(k, lambda, &extra)
        }
    }
}

/// Generators from the embedded tables, then from `extra`.
pub fn load_generators_from(
    k: usize,
    lambda: &Partition,
    extra: &[GeneratorFile],
) -> Result<Generators> {
    if let Some(g) = embedded(k, lambda)? {
        return Ok(g);
    }
    let entry = extra
        .iter()
        .find(|e| e.k == k && e.lambda == lambda.parts())
        .ok_or_else(|| Error::MissingGenerators {
            k,
            lambda: lambda.to_string(),
        })?;
    Ok(Generators {
        k,
        lambda: lambda.clone(),
        tau: entry.tau.clone(),
        rho: entry.rho.clone(),
    })
}

fn embedded(k: usize, lambda: &Partition) -> Result<Option<Generators>> {
    if lambda.size() != k {
        return Err(Error::InvalidParameter(format!(
            "{lambda} is not a partition of {k}"
        )));
    }
    let make = |tau, rho| Generators {
        k,
        lambda: lambda.clone(),
        tau,
        rho,
    };
    if lambda.parts().len() == 1 {
        return Ok(Some(make(scalar(1), scalar(1))));
    }
    if lambda.parts().iter().all(|&p| p == 1) {
        let rho_sign = if k % 2 == 1 { 1 } else { -1 };
        return Ok(Some(make(scalar(-1), scalar(rho_sign))));
    }
    Ok(TABLE
        .iter()
        .find(|e| e.k == k && e.lambda == lambda.parts())
        .map(|e| make(literal_matrix(e.tau), literal_matrix(e.rho))))
}

/// Reads a generator file holding one entry or an array of entries.
pub fn read_generator_file(path: &Path) -> Result<Vec<GeneratorFile>> {
    let text = std::fs::read_to_string(path)?;
    parse_generator_json(&text)
}

pub fn parse_generator_json(text: &str) -> Result<Vec<GeneratorFile>> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(GeneratorFile),
        Many(Vec<GeneratorFile>),
    }
    Ok(match serde_json::from_str(text)? {
        OneOrMany::One(g) => vec![g],
        OneOrMany::Many(v) => v,
    })
}
