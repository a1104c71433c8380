//! Policy checkpoints on disk.
//!
//! The file is line-oriented text:
//!
//! ```text
//! imtl-checkpoint 1
//! schema 37 6845 1
//! provenance 2
//! stage 300 7 3m
//! stage 300 11 8m
//! network actor softmax 3
//! layer 256 6845
//! w <row-major weights>
//! b <bias>
//! ...
//! network critic linear 3
//! ...
//! sha256 <hex digest of every preceding byte>
//! ```
//!
//! Floats use Rust's shortest round-trip formatting, so a load reproduces
//! the saved parameters bit for bit.

use crate::influence::{state_len, Resolution, LAYOUT_VERSION};
use crate::nn::{ActorCritic, Dense, Head, Network};
use ndarray::{Array1, Array2};
use sha2::{Digest, Sha256};
use std::fmt::{self, Write as _};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "imtl-checkpoint";

/// What a policy's input vector looks like. Two checkpoints are
/// interchangeable exactly when their schemas are equal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncodingSchema {
    pub resolution: Resolution,
    pub state_len: usize,
    pub layout_version: u32,
}

impl EncodingSchema {
    pub fn for_resolution(resolution: Resolution) -> Self {
        Self {
            resolution,
            state_len: state_len(resolution),
            layout_version: LAYOUT_VERSION,
        }
    }
}

impl fmt::Display for EncodingSchema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "resolution {} (state length {}, layout v{})",
            self.resolution, self.state_len, self.layout_version
        )
    }
}

/// One training stage in a checkpoint's history.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub scenario: String,
    pub episodes: usize,
    pub rng_seed: u64,
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("cannot access checkpoint {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported checkpoint format version {found} (this build reads version {FORMAT_VERSION})")]
    UnsupportedVersion { found: u32 },
    #[error("checkpoint integrity check failed: {0}")]
    Integrity(String),
    #[error("checkpoint is inconsistent: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyCheckpoint {
    pub format_version: u32,
    pub schema: EncodingSchema,
    pub policy: ActorCritic,
    pub provenance: Vec<Provenance>,
}

impl PolicyCheckpoint {
    pub fn new(schema: EncodingSchema, policy: ActorCritic, provenance: Vec<Provenance>) -> Result<Self, CheckpointError> {
        let ck = Self {
            format_version: FORMAT_VERSION,
            schema,
            policy,
            provenance,
        };
        ck.validate()?;
        Ok(ck)
    }

    fn validate(&self) -> Result<(), CheckpointError> {
        if self.schema.state_len != state_len(self.schema.resolution) {
            return Err(CheckpointError::Invalid(format!(
                "state length {} does not belong to resolution {}",
                self.schema.state_len, self.schema.resolution
            )));
        }
        for (name, net) in [("actor", &self.policy.actor), ("critic", &self.policy.critic)] {
            if net.input_dim() != self.schema.state_len {
                return Err(CheckpointError::Invalid(format!(
                    "{name} input width {} differs from state length {}",
                    net.input_dim(),
                    self.schema.state_len
                )));
            }
        }
        if self.policy.actor.head() != Head::Softmax || self.policy.critic.head() != Head::Linear {
            return Err(CheckpointError::Invalid("actor must be softmax and critic linear".into()));
        }
        if self.policy.critic.output_dim() != 1 {
            return Err(CheckpointError::Invalid("critic must have one output".into()));
        }
        for p in &self.provenance {
            if p.scenario.is_empty() || p.scenario.contains(['\n', '\r']) {
                return Err(CheckpointError::Invalid(format!("bad scenario name {:?}", p.scenario)));
            }
        }
        Ok(())
    }

    /// Provenance chain rendered as `3m→8m→2s3z`.
    pub fn chain(&self) -> String {
        self.provenance
            .iter()
            .map(|p| p.scenario.as_str())
            .collect::<Vec<_>>()
            .join("→")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{MAGIC} {}", self.format_version);
        let _ = writeln!(
            s,
            "schema {} {} {}",
            self.schema.resolution.side(),
            self.schema.state_len,
            self.schema.layout_version
        );
        let _ = writeln!(s, "provenance {}", self.provenance.len());
        for p in &self.provenance {
            let _ = writeln!(s, "stage {} {} {}", p.episodes, p.rng_seed, p.scenario);
        }
        write_network(&mut s, "actor", &self.policy.actor);
        write_network(&mut s, "critic", &self.policy.critic);
        let digest = hex(&Sha256::digest(s.as_bytes()));
        let _ = writeln!(s, "sha256 {digest}");
        s
    }

    pub fn from_text(text: &str) -> Result<Self, CheckpointError> {
        let first = text.lines().next().unwrap_or("");
        let mut head = first.split(' ');
        if head.next() != Some(MAGIC) {
            return Err(CheckpointError::Integrity("missing checkpoint header".into()));
        }
        let found: u32 = head
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| CheckpointError::Integrity("unreadable format version".into()))?;
        if found != FORMAT_VERSION {
            return Err(CheckpointError::UnsupportedVersion { found });
        }

        let body_end = text
            .rfind("sha256 ")
            .ok_or_else(|| CheckpointError::Integrity("checksum line missing".into()))?;
        let (body, trailer) = text.split_at(body_end);
        let expected = trailer
            .strip_prefix("sha256 ")
            .and_then(|t| t.strip_suffix('\n'))
            .ok_or_else(|| CheckpointError::Integrity("malformed checksum line".into()))?;
        if hex(&Sha256::digest(body.as_bytes())) != expected {
            return Err(CheckpointError::Integrity("checksum mismatch".into()));
        }

        let mut lines = body.lines().skip(1);
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| CheckpointError::Integrity(format!("unexpected end of file reading {what}")))
        };
        let schema_line = next("schema")?;
        let nums = fields(schema_line, "schema", 3)?;
        let side: usize = parse(nums[0], "resolution")?;
        let resolution = Resolution::from_side(side)
            .ok_or_else(|| CheckpointError::Invalid(format!("unsupported resolution {side}")))?;
        let schema = EncodingSchema {
            resolution,
            state_len: parse(nums[1], "state length")?,
            layout_version: parse(nums[2], "layout version")?,
        };

        let count: usize = parse(fields(next("provenance")?, "provenance", 1)?[0], "provenance count")?;
        let mut provenance = Vec::with_capacity(count);
        for _ in 0..count {
            let line = next("stage")?;
            let rest = line
                .strip_prefix("stage ")
                .ok_or_else(|| CheckpointError::Integrity(format!("expected stage line, got {line:?}")))?;
            let mut parts = rest.splitn(3, ' ');
            let episodes = parse(parts.next().unwrap_or(""), "episodes")?;
            let rng_seed = parse(parts.next().unwrap_or(""), "rng seed")?;
            let scenario = parts.next().unwrap_or("").to_string();
            provenance.push(Provenance {
                scenario,
                episodes,
                rng_seed,
            });
        }

        let actor = read_network(&mut next, "actor", Head::Softmax)?;
        let critic = read_network(&mut next, "critic", Head::Linear)?;
        if let Ok(extra) = next("") {
            return Err(CheckpointError::Integrity(format!("trailing content {extra:?}")));
        }
        let ck = Self {
            format_version: found,
            schema,
            policy: ActorCritic { actor, critic },
            provenance,
        };
        ck.validate()?;
        Ok(ck)
    }

    /// Writes to a sibling temporary file, syncs it, then renames it over
    /// `path`. Readers never observe a half-written checkpoint.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CheckpointError> {
        let path = path.as_ref();
        let io = |source| CheckpointError::Io {
            path: path.to_path_buf(),
            source,
        };
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
        tmp.write_all(self.to_text().as_bytes()).map_err(io)?;
        tmp.as_file().sync_all().map_err(io)?;
        tmp.persist(path).map_err(|e| io(e.error))?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CheckpointError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| CheckpointError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_text(&text)
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(bytes.len() * 2), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn write_network(s: &mut String, name: &str, net: &Network) {
    let head = match net.head() {
        Head::Softmax => "softmax",
        Head::Linear => "linear",
    };
    let _ = writeln!(s, "network {name} {head} {}", net.layers().len());
    for layer in net.layers() {
        let _ = writeln!(s, "layer {} {}", layer.outputs(), layer.inputs());
        s.push('w');
        for v in layer.weights.iter() {
            let _ = write!(s, " {v}");
        }
        s.push_str("\nb");
        for v in layer.bias.iter() {
            let _ = write!(s, " {v}");
        }
        s.push('\n');
    }
}

fn fields<'a>(line: &'a str, tag: &str, n: usize) -> Result<Vec<&'a str>, CheckpointError> {
    let mut parts = line.split(' ');
    if parts.next() != Some(tag) {
        return Err(CheckpointError::Integrity(format!("expected {tag} line, got {line:?}")));
    }
    let rest: Vec<&str> = parts.collect();
    if rest.len() != n {
        return Err(CheckpointError::Integrity(format!("{tag} line should carry {n} fields")));
    }
    Ok(rest)
}

fn parse<T: std::str::FromStr>(s: &str, what: &str) -> Result<T, CheckpointError> {
    s.parse()
        .map_err(|_| CheckpointError::Integrity(format!("cannot parse {what} from {s:?}")))
}

fn floats(line: &str, tag: &str, n: usize) -> Result<Vec<f64>, CheckpointError> {
    let rest = line
        .strip_prefix(tag)
        .ok_or_else(|| CheckpointError::Integrity(format!("expected {tag} values")))?;
    let values = rest
        .split_ascii_whitespace()
        .map(|v| parse::<f64>(v, "parameter"))
        .collect::<Result<Vec<_>, _>>()?;
    if values.len() != n {
        return Err(CheckpointError::Integrity(format!(
            "{tag} line holds {} values, expected {n}",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(CheckpointError::Invalid("non-finite parameter".into()));
    }
    Ok(values)
}

fn read_network<'a, F>(next: &mut F, name: &str, head: Head) -> Result<Network, CheckpointError>
where
    F: FnMut(&str) -> Result<&'a str, CheckpointError>,
{
    let header = fields(next("network")?, "network", 3)?;
    let expected_head = match head {
        Head::Softmax => "softmax",
        Head::Linear => "linear",
    };
    if header[0] != name || header[1] != expected_head {
        return Err(CheckpointError::Integrity(format!(
            "expected network {name} {expected_head}, got {} {}",
            header[0], header[1]
        )));
    }
    let depth: usize = parse(header[2], "layer count")?;
    let mut layers = Vec::with_capacity(depth);
    for _ in 0..depth {
        let dims = fields(next("layer")?, "layer", 2)?;
        let outputs: usize = parse(dims[0], "layer outputs")?;
        let inputs: usize = parse(dims[1], "layer inputs")?;
        let w = floats(next("weights")?, "w", outputs * inputs)?;
        let b = floats(next("bias")?, "b", outputs)?;
        layers.push(Dense {
            weights: Array2::from_shape_vec((outputs, inputs), w).expect("length checked"),
            bias: Array1::from(b),
        });
    }
    Network::from_layers(layers, head).map_err(|e| CheckpointError::Invalid(e.to_string()))
}
