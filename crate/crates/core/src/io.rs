//! Depth image files and CSV formatting.
//!
//! Two carriers are supported:
//!
//! * Portable FloatMap, grayscale (`Pf`). Samples are 32-bit floats stored
//!   bottom row first; a negative scale means little-endian. Files are always
//!   written with scale `-1.0`. Depths are rounded to `f32` on write.
//! * 16-bit binary PGM (`P5`, maxval 65535, big-endian). Depths are quantised
//!   linearly over a range recorded in a `# depth_range_mm <min> <max>`
//!   header comment. Files without that comment are read as raw millimetres.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::{DepthField, Metrics};

const RANGE_TAG: &str = "depth_range_mm";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DepthFormat {
    Pfm,
    Pgm16,
}

impl DepthFormat {
    /// Guesses the format from a file extension; PFM unless it ends in `.pgm`.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
            Some("pgm") => DepthFormat::Pgm16,
            _ => DepthFormat::Pfm,
        }
    }

    pub fn sniff(bytes: &[u8]) -> Option<Self> {
        match bytes.get(..2)? {
            b"Pf" => Some(DepthFormat::Pfm),
            b"P5" => Some(DepthFormat::Pgm16),
            _ => None,
        }
    }
}

/// Reads a depth file and reports which carrier it used.
pub fn read_depth(path: &Path) -> Result<(DepthField, DepthFormat)> {
    let bytes = fs::read(path)?;
    let fmt = |message: String| Error::Format { path: path.to_path_buf(), message };
    match DepthFormat::sniff(&bytes) {
        Some(DepthFormat::Pfm) => Ok((decode_pfm(&bytes).map_err(fmt)?, DepthFormat::Pfm)),
        Some(DepthFormat::Pgm16) => Ok((decode_pgm(&bytes).map_err(fmt)?, DepthFormat::Pgm16)),
        None => Err(fmt("not a grayscale PFM (Pf) or binary PGM (P5) file".into())),
    }
}

pub fn write_depth(path: &Path, field: &DepthField, format: DepthFormat) -> Result<()> {
    let bytes = match format {
        DepthFormat::Pfm => encode_pfm(field),
        DepthFormat::Pgm16 => encode_pgm16(field, None)?,
    };
    fs::write(path, bytes)?;
    Ok(())
}

pub fn encode_pfm(field: &DepthField) -> Vec<u8> {
    let (w, h) = field.shape();
    let mut out = format!("Pf\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(4 * w * h);
    for y in (0..h).rev() {
        for x in 0..w {
            out.extend_from_slice(&(field.get(x, y) as f32).to_le_bytes());
        }
    }
    out
}

/// Header tokenizer shared by the netpbm-style formats. Comments run from `#`
/// to the end of the line and are collected separately.
struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
    comments: Vec<String>,
}

impl<'a> Header<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 2, comments: Vec::new() }
    }

    fn token(&mut self) -> std::result::Result<&'a str, String> {
        loop {
            match self.bytes.get(self.pos) {
                Some(b) if b.is_ascii_whitespace() => self.pos += 1,
                Some(b'#') => {
                    let start = self.pos + 1;
                    while self.bytes.get(self.pos).is_some_and(|&b| b != b'\n') {
                        self.pos += 1;
                    }
                    self.comments.push(String::from_utf8_lossy(&self.bytes[start..self.pos]).trim().to_string());
                }
                Some(_) => break,
                None => return Err("truncated header".into()),
            }
        }
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(|b| !b.is_ascii_whitespace()) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos]).map_err(|_| "header is not ASCII".to_string())
    }

    fn number<T: std::str::FromStr>(&mut self, what: &str) -> std::result::Result<T, String> {
        let tok = self.token()?;
        tok.parse().map_err(|_| format!("invalid {what} `{tok}`"))
    }

    /// Skips the single whitespace byte that ends the header.
    fn payload(&self) -> std::result::Result<&'a [u8], String> {
        match self.bytes.get(self.pos) {
            Some(b) if b.is_ascii_whitespace() => Ok(&self.bytes[self.pos + 1..]),
            _ => Err("missing whitespace after header".into()),
        }
    }
}

pub fn decode_pfm(bytes: &[u8]) -> std::result::Result<DepthField, String> {
    if bytes.get(..2) != Some(b"Pf") {
        return Err("expected grayscale PFM magic `Pf`".into());
    }
    let mut hdr = Header::new(bytes);
    let w: usize = hdr.number("width")?;
    let h: usize = hdr.number("height")?;
    let scale: f32 = hdr.number("scale")?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(format!("invalid scale {scale}"));
    }
    let little = scale < 0.0;
    let payload = hdr.payload()?;
    let need = w.checked_mul(h).and_then(|n| n.checked_mul(4)).ok_or("dimensions overflow")?;
    if payload.len() < need {
        return Err(format!("expected {need} bytes of samples, found {}", payload.len()));
    }
    let mut data = vec![0.0; w * h];
    for (i, chunk) in payload[..need].chunks_exact(4).enumerate() {
        let raw = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little { f32::from_le_bytes(raw) } else { f32::from_be_bytes(raw) };
        let (x, row) = (i % w, i / w);
        data[(h - 1 - row) * w + x] = v as f64;
    }
    DepthField::new(w, h, data).map_err(|e| e.to_string())
}

/// Encodes a 16-bit PGM over `range` (default: the field's own min and max).
pub fn encode_pgm16(field: &DepthField, range: Option<(f64, f64)>) -> Result<Vec<u8>> {
    let (lo, hi) = range.unwrap_or((field.min(), field.max()));
    if !(lo.is_finite() && hi.is_finite() && hi >= lo) {
        return Err(Error::param(format!("invalid depth range [{lo}, {hi}]")));
    }
    let span = if hi > lo { hi - lo } else { 1.0 };
    let (w, h) = field.shape();
    let mut out = format!("P5\n# {RANGE_TAG} {lo:?} {hi:?}\n{w} {h}\n65535\n").into_bytes();
    out.reserve(2 * w * h);
    for &v in field.data() {
        let q = ((v - lo) / span * 65535.0).round().clamp(0.0, 65535.0) as u16;
        out.extend_from_slice(&q.to_be_bytes());
    }
    Ok(out)
}

/// Width of one quantisation step for a PGM written over `[lo, hi]`.
pub fn pgm16_step(lo: f64, hi: f64) -> f64 {
    if hi > lo {
        (hi - lo) / 65535.0
    } else {
        0.0
    }
}

pub fn decode_pgm(bytes: &[u8]) -> std::result::Result<DepthField, String> {
    if bytes.get(..2) != Some(b"P5") {
        return Err("expected binary PGM magic `P5`".into());
    }
    let mut hdr = Header::new(bytes);
    let w: usize = hdr.number("width")?;
    let h: usize = hdr.number("height")?;
    let maxval: u32 = hdr.number("maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(format!("maxval {maxval} out of range"));
    }
    let payload = hdr.payload()?;
    let range = hdr.comments.iter().find_map(|c| {
        let mut it = c.split_whitespace();
        (it.next() == Some(RANGE_TAG)).then_some(())?;
        let lo: f64 = it.next()?.parse().ok()?;
        let hi: f64 = it.next()?.parse().ok()?;
        Some((lo, hi))
    });
    let wide = maxval > 255;
    let n = w.checked_mul(h).ok_or("dimensions overflow")?;
    let need = if wide { 2 * n } else { n };
    if payload.len() < need {
        return Err(format!("expected {need} bytes of samples, found {}", payload.len()));
    }
    let sample = |i: usize| -> f64 {
        if wide {
            u16::from_be_bytes([payload[2 * i], payload[2 * i + 1]]) as f64
        } else {
            payload[i] as f64
        }
    };
    let data = (0..n)
        .map(|i| match range {
            Some((lo, hi)) => {
                let span = if hi > lo { hi - lo } else { 1.0 };
                lo + sample(i) / maxval as f64 * span
            }
            None => sample(i),
        })
        .collect();
    DepthField::new(w, h, data).map_err(|e| e.to_string())
}

/// Six significant digits in the style of C's `%g`: trailing zeros are
/// dropped and very large or small magnitudes switch to exponent form.
pub fn format_g6(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let m = mantissa.trim_end_matches('0').trim_end_matches('.');
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let fixed = format!("{v:.*}", (5 - exp) as usize);
    if fixed.contains('.') {
        fixed.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        fixed
    }
}

/// Column name of a ratio threshold, `rho_1.02`, `rho_1.10` and so on: at
/// least two decimals, more when needed.
pub fn threshold_label(th: f64) -> String {
    let two = format!("{th:.2}");
    if two.parse::<f64>().ok() == Some(th) {
        format!("rho_{two}")
    } else {
        format!("rho_{th}")
    }
}

pub fn metrics_csv_header(thresholds: &[f64]) -> String {
    let mut cols = vec!["mae".to_string(), "rmse".to_string()];
    cols.extend(thresholds.iter().map(|t| threshold_label(*t)));
    cols.join(",")
}

pub fn metrics_csv_row(m: &Metrics) -> String {
    let mut cols = vec![format_g6(m.mae), format_g6(m.rmse)];
    cols.extend(m.rho.iter().map(|(_, p)| format_g6(*p)));
    cols.join(",")
}
