use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::ProblemError;

/// One sparse example. `label` is the dense class index and feature indices
/// are 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub label: usize,
    pub features: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub rows: Vec<Row>,
    pub n_features: usize,
    pub n_classes: usize,
    /// Source label for each dense class index, ascending.
    pub labels: Vec<i64>,
}

/// Parses LIBSVM text: `label idx:val idx:val …` per line, 1-based strictly
/// increasing indices, `#` starts a comment, blank lines are skipped.
pub fn parse_libsvm(text: &str) -> Result<Dataset, ProblemError> {
    let mut raw: Vec<(i64, Vec<(usize, f64)>)> = Vec::new();
    let mut n_features = 0;
    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let err = |msg: String| ProblemError::Parse { line: line_no, msg };
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label_tok = tokens.next().unwrap_or_default();
        let label: i64 = label_tok
            .parse()
            .map_err(|_| err(format!("malformed label {label_tok:?}")))?;
        let mut features = Vec::new();
        let mut last = 0usize;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| err(format!("malformed token {tok:?}")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| err(format!("malformed feature index in {tok:?}")))?;
            if idx == 0 {
                return Err(err(format!("feature indices start at 1, got {tok:?}")));
            }
            if idx <= last {
                return Err(err(format!("feature index {idx} does not increase past {last}")));
            }
            let val: f64 = val
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| err(format!("non-numeric value in {tok:?}")))?;
            last = idx;
            features.push((idx - 1, val));
        }
        n_features = n_features.max(last);
        raw.push((label, features));
    }
    let labels: Vec<i64> = raw.iter().map(|r| r.0).collect::<BTreeSet<_>>().into_iter().collect();
    let rows = raw
        .into_iter()
        .map(|(label, features)| Row {
            label: labels.binary_search(&label).expect("label collected above"),
            features,
        })
        .collect();
    Ok(Dataset {
        rows,
        n_features,
        n_classes: labels.len(),
        labels,
    })
}

pub fn read_libsvm(path: &Path) -> Result<Dataset, ProblemError> {
    let text = std::fs::read_to_string(path).map_err(|e| ProblemError::Io(format!("{}: {e}", path.display())))?;
    parse_libsvm(&text)
}

pub const FIXTURE_SEED: u64 = 20_200_601;

/// The bundled fixture, identical to `synthetic_libsvm(160, 4, 6, FIXTURE_SEED)`.
pub const FIXTURE: &str = include_str!("../../data/svm_fixture.libsvm");

/// Deterministic synthetic multiclass data in LIBSVM format. Each class has a
/// Gaussian center with spread 1.5 and unit-variance points around it, so
/// classes overlap. A constant bias feature is appended as the last column.
pub fn synthetic_libsvm(rows: usize, classes: usize, features: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Vec<f64>> = (0..classes)
        .map(|_| {
            (0..features)
                .map(|_| 1.5 * rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect();
    let mut out = format!("# synthetic multiclass fixture: {rows} rows, {classes} classes, {features} features + bias, seed {seed}\n");
    for i in 0..rows {
        let class = i % classes;
        let _ = write!(out, "{}", class + 1);
        for (j, c) in centers[class].iter().enumerate() {
            let v = c + rng.sample::<f64, _>(StandardNormal);
            let _ = write!(out, " {}:{:.4}", j + 1, v);
        }
        let _ = writeln!(out, " {}:1", features + 1);
    }
    out
}

/// Text of the bundled fixture as produced by the generator.
pub fn fixture_text() -> String {
    synthetic_libsvm(160, 4, 6, FIXTURE_SEED)
}

/// Parsed bundled fixture.
pub fn fixture_dataset() -> Dataset {
    parse_libsvm(FIXTURE).expect("bundled fixture parses")
}


/// Rewrites the bundled fixture: `cargo test -p facpow -- --ignored regenerate_fixture`.
#[test]
#[ignore]
fn regenerate_fixture() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/svm_fixture.libsvm");
    std::fs::write(path, fixture_text()).unwrap();
}
