//! File formats, input hashing and deterministic report emission.
//!
//! Spaces: CSV without header (one row of the distance matrix per line) or
//! JSON `{"n": .., "dist": [[..]], "labels": [..]}` with `labels` optional.
//! Measures: JSON `{"weights": [..]}` or a CSV with one weight per line.
//! Batches: JSON `{"indices": [..]}` or a CSV with one index per line.
//! The format is picked from the file extension (`.json`, anything else is CSV).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::measure::{ProbabilityMeasure, SampleBatch};
use crate::metric::{FiniteMetricSpace, Metric};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputHash {
    pub path: String,
    pub sha256: String,
}

/// Raw bytes of an input file together with their hash.
pub struct Input {
    pub path: PathBuf,
    pub bytes: Vec<u8>,
}

impl Input {
    pub fn read(path: &Path) -> Result<Self> {
        let bytes =
            fs::read(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
        Ok(Self { path: path.to_path_buf(), bytes })
    }

    pub fn hash(&self) -> InputHash {
        InputHash { path: self.path.display().to_string(), sha256: hex::encode(Sha256::digest(&self.bytes)) }
    }

    fn is_json(&self) -> bool {
        self.path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
    }

    fn text(&self) -> Result<&str> {
        std::str::from_utf8(&self.bytes).map_err(|e| Error::Parse(format!("{}: {e}", self.path.display())))
    }
}

#[derive(Serialize, Deserialize)]
struct SpaceFile {
    n: Option<usize>,
    dist: Vec<Vec<f64>>,
    #[serde(default)]
    labels: Option<Vec<String>>,
}

fn csv_rows(input: &Input) -> Result<Vec<Vec<String>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(input.bytes.as_slice());
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        rows.push(rec.iter().map(str::to_owned).collect());
    }
    Ok(rows)
}

fn parse_f64(s: &str, path: &Path, line: usize) -> Result<f64> {
    s.parse::<f64>().map_err(|_| Error::Parse(format!("{}: line {}: not a number: {s:?}", path.display(), line + 1)))
}

/// Matrix rows and optional labels.
pub type ParsedMatrix = (Vec<Vec<f64>>, Option<Vec<String>>);

/// Parses only; metric axioms are checked by the caller.
pub fn parse_matrix(input: &Input) -> Result<ParsedMatrix> {
    if input.is_json() {
        let f: SpaceFile = serde_json::from_str(input.text()?)?;
        if let Some(n) = f.n {
            if n != f.dist.len() {
                return Err(Error::Parse(format!("n = {n} but dist has {} rows", f.dist.len())));
            }
        }
        return Ok((f.dist, f.labels));
    }
    let rows = csv_rows(input)?
        .iter()
        .enumerate()
        .map(|(i, r)| r.iter().map(|s| parse_f64(s, &input.path, i)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok((rows, None))
}

pub fn read_space(input: &Input) -> Result<FiniteMetricSpace> {
    let (rows, labels) = parse_matrix(input)?;
    FiniteMetricSpace::from_rows(&rows, labels)
}

#[derive(Serialize, Deserialize)]
struct MeasureFile {
    weights: Vec<f64>,
}

pub fn read_measure(input: &Input) -> Result<ProbabilityMeasure> {
    let weights = if input.is_json() {
        serde_json::from_str::<MeasureFile>(input.text()?)?.weights
    } else {
        single_column(input)?.iter().enumerate().map(|(i, s)| parse_f64(s, &input.path, i)).collect::<Result<_>>()?
    };
    ProbabilityMeasure::from_weights(&weights)
}

#[derive(Serialize, Deserialize)]
struct BatchFile {
    indices: Vec<usize>,
}

pub fn read_batch(input: &Input, n_points: usize) -> Result<SampleBatch> {
    let indices = if input.is_json() {
        serde_json::from_str::<BatchFile>(input.text()?)?.indices
    } else {
        single_column(input)?
            .iter()
            .enumerate()
            .map(|(i, s)| {
                s.parse::<usize>()
                    .map_err(|_| Error::Parse(format!("{}: line {}: not an index: {s:?}", input.path.display(), i + 1)))
            })
            .collect::<Result<_>>()?
    };
    SampleBatch::new(indices, n_points)
}

fn single_column(input: &Input) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for (i, r) in csv_rows(input)?.into_iter().enumerate() {
        if r.len() != 1 {
            return Err(Error::Parse(format!("{}: line {}: expected one value", input.path.display(), i + 1)));
        }
        out.extend(r);
    }
    Ok(out)
}

pub fn space_to_json(space: &FiniteMetricSpace) -> serde_json::Value {
    serde_json::json!({
        "n": space.len(),
        "dist": space.rows(),
        "labels": space.labels(),
    })
}

/// Serializes with object keys sorted. Floats use the shortest
/// representation that round-trips, so equal values give equal bytes.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

/// Writes to a temporary file next to `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn emit_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    write_atomic(path, to_canonical_json(value)?.as_bytes())
}

/// Renders CSV into memory with the given writer callback, then writes atomically.
pub fn emit_csv<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut Vec<u8>) -> Result<()>,
{
    let mut buf = Vec::new();
    f(&mut buf)?;
    write_atomic(path, &buf)
}

/// Common envelope written around every subcommand's payload.
#[derive(Serialize)]
pub struct Envelope<'a, C: Serialize, R: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config: &'a C,
    pub seed: Option<u64>,
    pub inputs: Vec<InputHash>,
    pub result: &'a R,
}

impl<'a, C: Serialize, R: Serialize> Envelope<'a, C, R> {
    pub fn new(command: &'a str, config: &'a C, seed: Option<u64>, inputs: &[&Input], result: &'a R) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: TOOL_VERSION,
            command,
            config,
            seed,
            inputs: inputs.iter().map(|i| i.hash()).collect(),
            result,
        }
    }
}
