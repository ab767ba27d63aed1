//! The line-oriented dataset file.
//!
//! ```text
//! statcost-ds/1 {"distribution":...,"game":...,"law":"uniform","m":3,"n":4,"seed":7}
//! 5 3.0000000000000000e0
//! 0 0.0000000000000000e0
//! f 4.5000000000000000e0
//! ```
//!
//! The header carries the metadata as one JSON object with sorted keys.
//! Each record is the subset's bit mask in hex (player `i` is bit `i`)
//! followed by the cost with 17 significant digits, which round-trips every
//! double exactly.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use statcost_core::dataset::Law;
use statcost_core::{Dataset, DatasetMeta, PlayerSet, SampleRecord};

use crate::error::{CliError, CliResult};

pub const MAGIC: &str = "statcost-ds";
pub const VERSION: &str = "1";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    distribution: Value,
    game: Value,
    law: String,
    m: usize,
    n: usize,
    seed: u64,
}

/// Descriptor strings that hold JSON are embedded as JSON; anything else
/// is kept as a string, and an empty one as `null`.
fn embed(descriptor: &str) -> Value {
    if descriptor.is_empty() {
        return Value::Null;
    }
    serde_json::from_str(descriptor).unwrap_or_else(|_| Value::String(descriptor.to_owned()))
}

fn unembed(value: Value) -> String {
    match value {
        Value::Null => String::new(),
        Value::String(s) => s,
        other => other.to_string(),
    }
}

pub fn to_string(ds: &Dataset) -> String {
    let meta = ds.meta();
    let header = Header {
        distribution: embed(&meta.distribution),
        game: embed(&meta.game),
        law: meta.law.as_str().to_owned(),
        m: ds.m(),
        n: meta.n,
        seed: meta.seed,
    };
    let mut out = format!(
        "{MAGIC}/{VERSION} {}\n",
        serde_json::to_value(&header).expect("header serializes")
    );
    for r in ds.records() {
        writeln!(out, "{:x} {:.16e}", r.subset.bits(), r.cost).unwrap();
    }
    out
}

pub fn save(ds: &Dataset, path: &Path) -> CliResult<()> {
    std::fs::write(path, to_string(ds)).map_err(|e| CliError::io(path, e))
}

pub fn load(path: &Path) -> CliResult<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    read(file, path)
}

/// Parses a dataset; `path` only labels error messages.
pub fn read<R: Read>(reader: R, path: &Path) -> CliResult<Dataset> {
    let parse_err = |line: usize, message: String| CliError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = BufReader::new(reader).lines();
    let first = match lines.next() {
        Some(l) => l.map_err(|e| CliError::io(path, e))?,
        None => return Err(parse_err(1, "empty file, expected a header".into())),
    };
    let (tag, json) = first
        .split_once(' ')
        .ok_or_else(|| parse_err(1, "header must be `statcost-ds/<version> {json}`".into()))?;
    let version = tag
        .strip_prefix(MAGIC)
        .and_then(|v| v.strip_prefix('/'))
        .ok_or_else(|| parse_err(1, format!("not a dataset file (starts with {tag:?})")))?;
    if version != VERSION {
        return Err(CliError::Version {
            path: path.to_path_buf(),
            found: version.to_owned(),
            expected: VERSION,
        });
    }
    let header: Header = serde_json::from_str(json).map_err(|e| parse_err(1, format!("header: {e}")))?;
    if header.n == 0 || header.n > statcost_core::MAX_PLAYERS {
        return Err(parse_err(1, format!("n = {} outside 1..=64", header.n)));
    }
    let full = PlayerSet::full(header.n);
    let mut records = Vec::with_capacity(header.m.min(1 << 24));
    for (k, line) in lines.enumerate() {
        let lineno = k + 2;
        let line = line.map_err(|e| CliError::io(path, e))?;
        if records.len() == header.m {
            if line.trim().is_empty() {
                continue;
            }
            return Err(parse_err(lineno, format!("extra record beyond m = {}", header.m)));
        }
        let (mask, cost) = line
            .split_once(' ')
            .ok_or_else(|| parse_err(lineno, format!("expected `<hex mask> <cost>`, got {line:?}")))?;
        let bits = u64::from_str_radix(mask, 16).map_err(|e| parse_err(lineno, format!("mask {mask:?}: {e}")))?;
        let subset = PlayerSet::from_bits(bits);
        if !subset.is_subset(full) {
            return Err(parse_err(lineno, format!("mask {mask} names players beyond n = {}", header.n)));
        }
        let cost: f64 = cost
            .parse()
            .map_err(|e| parse_err(lineno, format!("cost {cost:?}: {e}")))?;
        if !(cost.is_finite() && cost >= 0.0) {
            return Err(parse_err(lineno, format!("cost {cost} is not finite and nonnegative")));
        }
        records.push(SampleRecord { subset, cost });
    }
    if records.len() < header.m {
        let lineno = records.len() + 2;
        return Err(parse_err(
            lineno,
            format!("truncated: header promises m = {} records, found {}", header.m, records.len()),
        ));
    }
    let meta = DatasetMeta {
        n: header.n,
        seed: header.seed,
        game: unembed(header.game),
        distribution: unembed(header.distribution),
        law: Law::parse(&header.law),
    };
    Ok(Dataset::new(meta, records)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use statcost_core::{Game, SetDistribution};

    fn sample() -> Dataset {
        let g = Game::additive(vec![1.0, 0.1, 1.0 / 3.0]).unwrap();
        let d = SetDistribution::uniform(3).unwrap();
        Dataset::generate(&g, &d, 50, 4)
            .unwrap()
            .with_descriptors(r#"{"family":"additive","weights":[1.0,0.1,0.3333333333333333]}"#.into(), r#"{"kind":"uniform","n":3}"#.into())
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let ds = sample();
        let text = to_string(&ds);
        let back = read(text.as_bytes(), Path::new("mem")).unwrap();
        assert_eq!(back, ds);
        assert_eq!(to_string(&back), text);
    }

    #[test]
    fn truncation_names_the_line() {
        let text = to_string(&sample());
        let cut: String = text.lines().take(11).map(|l| format!("{l}\n")).collect();
        let err = read(cut.as_bytes(), Path::new("mem")).unwrap_err().to_string();
        assert!(err.starts_with("mem:12:"), "{err}");
        assert!(err.contains("truncated"), "{err}");
    }

    #[test]
    fn malformed_record_names_the_line() {
        let mut lines: Vec<String> = to_string(&sample()).lines().map(String::from).collect();
        lines[2] = "zz 1.0".into();
        let text = lines.join("\n");
        let err = read(text.as_bytes(), Path::new("f")).unwrap_err().to_string();
        assert!(err.starts_with("f:3:"), "{err}");
    }

    #[test]
    fn empty_dataset_and_version_check() {
        let ds = read(
            r#"statcost-ds/1 {"distribution":null,"game":null,"law":"unknown","m":0,"n":4,"seed":0}"#.as_bytes(),
            Path::new("f"),
        )
        .unwrap();
        assert_eq!(ds.m(), 0);
        let err = read("statcost-ds/2 {}".as_bytes(), Path::new("f")).unwrap_err();
        assert!(matches!(err, CliError::Version { .. }));
    }
}
