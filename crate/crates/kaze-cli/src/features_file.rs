//! Versioned text format for keypoints and descriptors.
//!
//! ```text
//! KAZEFEAT 1 <count>
//! <x> <y> <sigma> <response> <octave> <sublevel> <angle>   (count lines)
//! <64 descriptor components>                               (count lines)
//! ```
//!
//! Numbers carry 9 significant digits, which round-trips f32 exactly:
//! write -> read -> write reproduces identical bytes.

use std::fmt::Write as _;

use kaze::descriptor::DESCRIPTOR_LEN;
use kaze::{Descriptor, KeyPoint};

pub const MAGIC: &str = "KAZEFEAT";
pub const VERSION: u32 = 1;

#[derive(Debug)]
pub enum FormatError {
    Io(std::io::Error),
    /// Wrong magic, version, or malformed records.
    Mismatch(String),
}

impl std::fmt::Display for FormatError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FormatError::Io(e) => write!(f, "i/o error: {e}"),
            FormatError::Mismatch(m) => write!(f, "format mismatch: {m}"),
        }
    }
}

impl std::error::Error for FormatError {}

impl From<std::io::Error> for FormatError {
    fn from(e: std::io::Error) -> Self {
        FormatError::Io(e)
    }
}

#[derive(Debug, Clone, Default)]
pub struct FeatureFile {
    pub keypoints: Vec<KeyPoint>,
    pub descriptors: Vec<Descriptor>,
}

/// 9 significant digits: one leading digit plus 8 fractional, exponent form.
fn fmt_f32(v: f32) -> String {
    format!("{v:.8e}")
}

pub fn to_string(file: &FeatureFile) -> String {
    debug_assert_eq!(file.keypoints.len(), file.descriptors.len());
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC} {VERSION} {}", file.keypoints.len());
    for kp in &file.keypoints {
        let _ = writeln!(
            out,
            "{} {} {} {} {} {} {}",
            fmt_f32(kp.x),
            fmt_f32(kp.y),
            fmt_f32(kp.sigma),
            fmt_f32(kp.response),
            kp.octave,
            kp.sublevel,
            fmt_f32(kp.angle),
        );
    }
    for d in &file.descriptors {
        let line: Vec<String> = d.values.iter().map(|&v| fmt_f32(v)).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    out
}

pub fn write(path: &std::path::Path, file: &FeatureFile) -> Result<(), FormatError> {
    std::fs::write(path, to_string(file))?;
    Ok(())
}

fn parse_f32(tok: &str) -> Result<f32, FormatError> {
    tok.parse::<f32>()
        .map_err(|_| FormatError::Mismatch(format!("bad number '{tok}'")))
}

pub fn parse(text: &str) -> Result<FeatureFile, FormatError> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| FormatError::Mismatch("empty file".into()))?;
    let mut parts = header.split_whitespace();
    let magic = parts.next().unwrap_or("");
    if magic != MAGIC {
        return Err(FormatError::Mismatch(format!("bad magic '{magic}'")));
    }
    let version: u32 = parts
        .next()
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| FormatError::Mismatch("missing version".into()))?;
    if version != VERSION {
        return Err(FormatError::Mismatch(format!(
            "unsupported version {version}, expected {VERSION}"
        )));
    }
    let count: usize = parts
        .next()
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| FormatError::Mismatch("missing count".into()))?;

    let mut keypoints = Vec::with_capacity(count);
    for _ in 0..count {
        let line = lines
            .next()
            .ok_or_else(|| FormatError::Mismatch("truncated keypoints".into()))?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 7 {
            return Err(FormatError::Mismatch(format!(
                "keypoint line has {} fields",
                toks.len()
            )));
        }
        keypoints.push(KeyPoint {
            x: parse_f32(toks[0])?,
            y: parse_f32(toks[1])?,
            sigma: parse_f32(toks[2])?,
            response: parse_f32(toks[3])?,
            octave: toks[4]
                .parse()
                .map_err(|_| FormatError::Mismatch("bad octave".into()))?,
            sublevel: toks[5]
                .parse()
                .map_err(|_| FormatError::Mismatch("bad sublevel".into()))?,
            angle: parse_f32(toks[6])?,
            level_index: 0,
        });
    }
    let mut descriptors = Vec::with_capacity(count);
    for i in 0..count {
        let line = lines
            .next()
            .ok_or_else(|| FormatError::Mismatch("truncated descriptors".into()))?;
        let mut values = [0.0f32; DESCRIPTOR_LEN];
        let mut n = 0;
        for tok in line.split_whitespace() {
            if n >= DESCRIPTOR_LEN {
                return Err(FormatError::Mismatch("descriptor line too long".into()));
            }
            values[n] = parse_f32(tok)?;
            n += 1;
        }
        if n != DESCRIPTOR_LEN {
            return Err(FormatError::Mismatch(format!(
                "descriptor line has {n} components"
            )));
        }
        descriptors.push(Descriptor {
            values,
            keypoint_ref: i,
        });
    }
    Ok(FeatureFile {
        keypoints,
        descriptors,
    })
}

pub fn read(path: &std::path::Path) -> Result<FeatureFile, FormatError> {
    parse(&std::fs::read_to_string(path)?)
}
