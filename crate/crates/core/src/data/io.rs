//! Binary trial file (`EEGB`) plus its JSON sidecar.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::set::TrialSet;
use crate::diffmodel::TrialMatrix;
use crate::error::{Error, Result};

pub const TRIAL_MAGIC: &[u8; 4] = b"EEGB";
pub const TRIAL_VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 4 + 4 + 4;

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    labels: Vec<usize>,
    subjects: Vec<u32>,
    classes: Vec<String>,
}

/// Sidecar path: the trial path with `.meta.json` appended.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Encodes the payload. Values are stored as `f32`.
pub fn encode_trials(set: &TrialSet) -> Result<Vec<u8>> {
    let (c, t) = set.shape();
    let n = set.len();
    let as_u32 = |v: usize, what: &str| {
        u32::try_from(v).map_err(|_| Error::invalid(format!("{what} {v} does not fit in u32")))
    };
    let mut buf = Vec::with_capacity(HEADER_LEN + n * c * t * 4);
    buf.extend_from_slice(TRIAL_MAGIC);
    buf.extend_from_slice(&TRIAL_VERSION.to_le_bytes());
    buf.extend_from_slice(&as_u32(c, "channels")?.to_le_bytes());
    buf.extend_from_slice(&as_u32(t, "samples")?.to_le_bytes());
    buf.extend_from_slice(&as_u32(n, "trial count")?.to_le_bytes());
    for trial in set.trials() {
        for &v in trial.as_slice() {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    Ok(buf)
}

pub fn encode_sidecar(set: &TrialSet) -> String {
    let meta = Sidecar {
        labels: set.labels().to_vec(),
        subjects: set.subjects().to_vec(),
        classes: set.class_names().to_vec(),
    };
    serde_json::to_string(&meta).expect("sidecar serializes")
}

fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"))
}

pub fn decode_trials(bytes: &[u8], sidecar: &str) -> Result<TrialSet> {
    let ctx = "trial file";
    if bytes.len() < HEADER_LEN {
        return Err(Error::format(ctx, "truncated header"));
    }
    if &bytes[..4] != TRIAL_MAGIC {
        return Err(Error::format(ctx, "bad magic"));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != TRIAL_VERSION {
        return Err(Error::format(ctx, format!("unsupported version {version}")));
    }
    let c = read_u32(bytes, 6) as usize;
    let t = read_u32(bytes, 10) as usize;
    let n = read_u32(bytes, 14) as usize;
    let per_trial = c
        .checked_mul(t)
        .ok_or_else(|| Error::format(ctx, "dimension overflow"))?;
    let expected = per_trial
        .checked_mul(n)
        .and_then(|v| v.checked_mul(4))
        .and_then(|v| v.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::format(ctx, "dimension overflow"))?;
    if bytes.len() != expected {
        return Err(Error::format(
            ctx,
            format!("expected {expected} bytes for n={n}, C={c}, T={t}, got {}", bytes.len()),
        ));
    }

    let meta: Sidecar =
        serde_json::from_str(sidecar).map_err(|e| Error::format("trial sidecar", e.to_string()))?;
    if meta.labels.len() != n || meta.subjects.len() != n {
        return Err(Error::format(
            "trial sidecar",
            format!(
                "header says n={n} but sidecar has {} labels and {} subjects",
                meta.labels.len(),
                meta.subjects.len()
            ),
        ));
    }

    let payload = &bytes[HEADER_LEN..];
    let mut trials = Vec::with_capacity(n);
    for chunk in payload.chunks_exact(per_trial * 4).take(n) {
        let values = chunk
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().expect("4 bytes")) as f64)
            .collect();
        trials.push(TrialMatrix::new(c, t, values)?);
    }
    TrialSet::new(c, t, trials, meta.labels, meta.subjects, meta.classes)
        .map_err(|e| Error::format(ctx, e.to_string()))
}

/// Writes `path` and `path.meta.json`.
pub fn write_trials(set: &TrialSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_trials(set)?).map_err(|e| Error::io(path, e))?;
    let side = sidecar_path(path);
    fs::write(&side, encode_sidecar(set)).map_err(|e| Error::io(side, e))
}

pub fn read_trials(path: impl AsRef<Path>) -> Result<TrialSet> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let side = sidecar_path(path);
    let meta = fs::read_to_string(&side).map_err(|e| Error::io(side, e))?;
    decode_trials(&bytes, &meta)
}
