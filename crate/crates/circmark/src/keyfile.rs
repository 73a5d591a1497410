//! Key file: UTF-8 text, one `name = value` field per line.
//!
//! ```text
//! # circmark key
//! format_version = 1
//! alpha = 5.9999999999999998e-2
//! k = 1
//! image_side = 512
//! y_monotone_warning = false
//! s_prefix = 6.4735097513157364e4 1.0596353196839418e4 8.1748765064364253e3 6.4750152698437869e3
//! block.1 = 3.0177514060468419e0 -2.0118342706978946e0 1.0059171353489473e0 -4.0236685413957892e0
//! ```
//!
//! Reals are written with 17 significant digits, which round-trips every
//! `f64` exactly. Blank lines and lines starting with `#` are ignored; field
//! order is free. `block.N` lists the four coefficients of block `N`
//! (1-based). Detection never needs the blocks: [`parse_detection_key`]
//! skips them without reading their values.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use circmark_core::{CoefficientBlock, DetectionKey, WatermarkKey};

use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

pub fn serialize(key: &WatermarkKey) -> String {
    let mut out = String::from("# circmark key\n");
    let _ = writeln!(out, "format_version = {FORMAT_VERSION}");
    let _ = writeln!(out, "alpha = {}", real(key.alpha()));
    let _ = writeln!(out, "k = {}", key.k());
    let _ = writeln!(out, "image_side = {}", key.image_side());
    let _ = writeln!(out, "y_monotone_warning = {}", key.y_monotone_warning());
    let _ = writeln!(out, "s_prefix = {}", reals(key.s_prefix()));
    for (i, b) in key.blocks().iter().enumerate() {
        let _ = writeln!(out, "block.{} = {}", i + 1, reals(&b.coeffs()));
    }
    out
}

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn reals(vs: &[f64]) -> String {
    vs.iter().map(|&v| real(v)).collect::<Vec<_>>().join(" ")
}

struct Fields<'a> {
    map: HashMap<&'a str, (usize, &'a str)>,
}

fn key_err(line: usize, message: impl Into<String>) -> Error {
    Error::Key {
        line,
        message: message.into(),
    }
}

impl<'a> Fields<'a> {
    fn parse(text: &'a str) -> Result<Self> {
        let mut map = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (name, value) = trimmed
                .split_once('=')
                .ok_or_else(|| key_err(line, "expected `name = value`"))?;
            let name = name.trim();
            if map.insert(name, (line, value.trim())).is_some() {
                return Err(key_err(line, format!("duplicate field `{name}`")));
            }
        }
        Ok(Self { map })
    }

    fn get(&self, name: &str) -> Result<(usize, &'a str)> {
        self.map
            .get(name)
            .copied()
            .ok_or_else(|| key_err(0, format!("missing field `{name}`")))
    }

    fn scalar<T: std::str::FromStr>(&self, name: &str) -> Result<T> {
        let (line, v) = self.get(name)?;
        v.parse()
            .map_err(|_| key_err(line, format!("bad value for `{name}`: `{v}`")))
    }

    fn list(&self, name: &str) -> Result<(usize, Vec<f64>)> {
        let (line, v) = self.get(name)?;
        let vals = v
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| key_err(line, format!("bad number `{t}` in `{name}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((line, vals))
    }

    fn check_names(&self, k: usize) -> Result<()> {
        for (&name, &(line, _)) in &self.map {
            let known = matches!(
                name,
                "format_version" | "alpha" | "k" | "image_side" | "y_monotone_warning" | "s_prefix"
            ) || name
                .strip_prefix("block.")
                .and_then(|n| n.parse::<usize>().ok())
                .is_some_and(|n| (1..=k).contains(&n));
            if !known {
                return Err(key_err(line, format!("unknown field `{name}`")));
            }
        }
        Ok(())
    }

    fn detection(&self) -> Result<(usize, DetectionKey)> {
        let version: u32 = self.scalar("format_version")?;
        if version != FORMAT_VERSION {
            let (line, _) = self.get("format_version")?;
            return Err(key_err(
                line,
                format!("unsupported format_version {version}"),
            ));
        }
        let k: usize = self.scalar("k")?;
        let (line, prefix) = self.list("s_prefix")?;
        if prefix.len() != 4 * k {
            return Err(key_err(
                line,
                format!("s_prefix has {} values, expected {}", prefix.len(), 4 * k),
            ));
        }
        let key = DetectionKey::new(self.scalar("alpha")?, self.scalar("image_side")?, prefix)?;
        Ok((k, key))
    }
}

/// Full key, including the coefficient blocks.
pub fn parse_key(text: &str) -> Result<WatermarkKey> {
    let fields = Fields::parse(text)?;
    let (k, detection) = fields.detection()?;
    fields.check_names(k)?;
    let warning: bool = fields.scalar("y_monotone_warning")?;
    let mut blocks = Vec::with_capacity(k);
    for i in 1..=k {
        let name = format!("block.{i}");
        let (line, c) = fields.list(&name)?;
        let c: [f64; 4] = c
            .try_into()
            .map_err(|_| key_err(line, format!("`{name}` needs 4 values")))?;
        blocks.push(CoefficientBlock::new(c).map_err(|e| key_err(line, e.to_string()))?);
    }
    Ok(WatermarkKey::new(detection, blocks, warning)?)
}

/// Detect-only mode: `alpha`, `image_side` and `s_prefix`. Block fields are
/// neither required nor read.
pub fn parse_detection_key(text: &str) -> Result<DetectionKey> {
    let fields = Fields::parse(text)?;
    let (_, key) = fields.detection()?;
    Ok(key)
}

pub fn write_key(path: impl AsRef<Path>, key: &WatermarkKey) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, serialize(key)).map_err(|e| Error::io(path, e))
}

pub fn read_key(path: impl AsRef<Path>) -> Result<WatermarkKey> {
    parse_key(&read_text(path.as_ref())?)
}

pub fn read_detection_key(path: impl AsRef<Path>) -> Result<DetectionKey> {
    parse_detection_key(&read_text(path.as_ref())?)
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}
