//! `UAPF` binary perturbation file and CSV export.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::uap::{NormOrder, Uap, UapMode};
use crate::error::{Error, Result};

pub const UAP_MAGIC: &[u8; 4] = b"UAPF";
pub const UAP_VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 1 + 4 + 4 + 8 + 1;

fn mode_tag(mode: UapMode) -> u8 {
    match mode {
        UapMode::Full => 0,
        UapMode::ChannelInvariant => 1,
        UapMode::Mini => 2,
    }
}

fn norm_tag(norm: NormOrder) -> u8 {
    match norm {
        NormOrder::L2 => 2,
        NormOrder::Inf => 255,
    }
}

pub fn encode_uap(uap: &Uap) -> Vec<u8> {
    let (rows, cols) = uap.shape();
    let mut buf = Vec::with_capacity(HEADER_LEN + rows * cols * 8);
    buf.extend_from_slice(UAP_MAGIC);
    buf.extend_from_slice(&UAP_VERSION.to_le_bytes());
    buf.push(mode_tag(uap.mode()));
    buf.extend_from_slice(&(rows as u32).to_le_bytes());
    buf.extend_from_slice(&(cols as u32).to_le_bytes());
    buf.extend_from_slice(&uap.xi.to_le_bytes());
    buf.push(norm_tag(uap.norm));
    for v in uap.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf
}

pub fn decode_uap(bytes: &[u8]) -> Result<Uap> {
    let ctx = "perturbation file";
    if bytes.len() < HEADER_LEN {
        return Err(Error::format(ctx, "truncated header"));
    }
    if &bytes[..4] != UAP_MAGIC {
        return Err(Error::format(ctx, "bad magic"));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != UAP_VERSION {
        return Err(Error::format(ctx, format!("unsupported version {version}")));
    }
    let mode = match bytes[6] {
        0 => UapMode::Full,
        1 => UapMode::ChannelInvariant,
        2 => UapMode::Mini,
        m => return Err(Error::format(ctx, format!("unknown mode {m}"))),
    };
    let rows = u32::from_le_bytes(bytes[7..11].try_into().expect("4 bytes")) as usize;
    let cols = u32::from_le_bytes(bytes[11..15].try_into().expect("4 bytes")) as usize;
    let xi = f64::from_le_bytes(bytes[15..23].try_into().expect("8 bytes"));
    let norm = match bytes[23] {
        2 => NormOrder::L2,
        255 => NormOrder::Inf,
        n => return Err(Error::format(ctx, format!("unknown norm order {n}"))),
    };
    let count = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::format(ctx, "dimension overflow"))?;
    if bytes.len() != HEADER_LEN + count * 8 {
        return Err(Error::format(
            ctx,
            format!("expected {} value bytes, got {}", count * 8, bytes.len() - HEADER_LEN),
        ));
    }
    let values = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
        .collect();
    Uap::new(mode, rows, cols, values, xi, norm).map_err(|e| Error::format(ctx, e.to_string()))
}

pub fn save_uap(uap: &Uap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_uap(uap)).map_err(|e| Error::io(path, e))
}

pub fn load_uap(path: impl AsRef<Path>) -> Result<Uap> {
    let path = path.as_ref();
    decode_uap(&fs::read(path).map_err(|e| Error::io(path, e))?)
}

/// One line per row (channel), values comma separated.
pub fn uap_to_csv(uap: &Uap) -> String {
    let (rows, _) = uap.shape();
    let mut out = String::new();
    for r in 0..rows {
        let line: Vec<String> = uap.row(r).iter().map(|v| format!("{v}")).collect();
        let _ = writeln!(out, "{}", line.join(","));
    }
    out
}
