//! File formats: 16-bit PGM images with a metadata sidecar, and the CSV
//! tables every scenario writes.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::gem1d::{EchoTrace, SpinWave};
use crate::image::ImageField;
use crate::metrics::{ContrastCurve, MtfRow, SimilarityRow};

pub const ECHO_HEADER: [&str; 2] = ["t_seconds", "intensity"];
pub const SPIN_WAVE_HEADER: [&str; 4] = ["z_m", "re_s", "im_s", "pulse"];
pub const SIMILARITY_HEADER: [&str; 5] = ["frame_index", "t_seconds", "S_N", "S_T", "D"];
pub const CONTRAST_HEADER: [&str; 4] = ["a_m", "t_seconds", "C", "C_pred"];
pub const MTF_HEADER: [&str; 3] = ["frequency_lp_per_mm", "t_seconds", "C"];

fn format_err(kind: &'static str, path: &Path, reason: impl Into<String>) -> Error {
    Error::Format { kind, path: path.to_path_buf(), reason: reason.into() }
}

/// Path of the metadata file that accompanies `pgm`.
pub fn sidecar_path(pgm: &Path) -> PathBuf {
    let mut s = pgm.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

/// Writes `img` as a binary 16-bit PGM plus a `key=value` sidecar. Values
/// are scaled so the maximum maps to 65535; the sidecar records the scale,
/// the pitch and any `extra` entries.
pub fn write_pgm(path: &Path, img: &ImageField, extra: &BTreeMap<String, String>) -> Result<()> {
    if img.min() < 0.0 {
        return Err(Error::InvalidInput("PGM images must be non-negative".into()));
    }
    let max = img.max();
    let scale = if max > 0.0 { max / 65535.0 } else { 1.0 };
    let mut out = BufWriter::new(fs::File::create(path)?);
    write!(out, "P5\n{} {}\n65535\n", img.width(), img.height())?;
    for &v in img.values() {
        let n = (v / scale).round().clamp(0.0, 65535.0) as u16;
        out.write_all(&n.to_be_bytes())?;
    }
    out.flush()?;

    let mut meta = BTreeMap::new();
    meta.insert("width".to_string(), img.width().to_string());
    meta.insert("height".to_string(), img.height().to_string());
    meta.insert("pitch_m".to_string(), img.pitch().to_string());
    meta.insert("scale".to_string(), scale.to_string());
    for (k, v) in extra {
        meta.insert(k.clone(), v.clone());
    }
    let mut side = BufWriter::new(fs::File::create(sidecar_path(path))?);
    for (k, v) in &meta {
        writeln!(side, "{k}={v}")?;
    }
    side.flush()?;
    Ok(())
}

/// Reads a sidecar file into its key/value pairs.
pub fn read_sidecar(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path)?;
    let mut meta = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format_err("sidecar", path, format!("line {} is not key=value", i + 1)))?;
        meta.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(meta)
}

fn header_token<'a>(data: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
    loop {
        while *pos < data.len() && data[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < data.len() && data[*pos] == b'#' {
            while *pos < data.len() && data[*pos] != b'\n' {
                *pos += 1;
            }
        } else {
            break;
        }
    }
    let start = *pos;
    while *pos < data.len() && !data[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    (*pos > start).then(|| &data[start..*pos])
}

/// Reads a PGM written by [`write_pgm`] (8- or 16-bit binary PGMs without a
/// sidecar load with unit scale and unit pitch).
pub fn read_pgm(path: &Path) -> Result<(ImageField, BTreeMap<String, String>)> {
    let data = fs::read(path)?;
    let bad = |r: &str| format_err("PGM", path, r.to_string());
    let mut pos = 0;
    if header_token(&data, &mut pos) != Some(b"P5") {
        return Err(bad("missing P5 magic"));
    }
    let mut num = |what: &str| -> Result<usize> {
        header_token(&data, &mut pos)
            .and_then(|t| std::str::from_utf8(t).ok())
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad(&format!("bad {what}")))
    };
    let (w, h, maxval) = (num("width")?, num("height")?, num("maxval")?);
    if !(1..=65535).contains(&maxval) {
        return Err(bad("maxval out of range"));
    }
    pos += 1;
    let bytes = if maxval > 255 { 2 } else { 1 };
    let body = data.get(pos..).unwrap_or(&[]);
    if body.len() != w * h * bytes {
        return Err(bad(&format!("expected {} data bytes, found {}", w * h * bytes, body.len())));
    }
    let side = sidecar_path(path);
    let meta = if side.exists() { read_sidecar(&side)? } else { BTreeMap::new() };
    let get = |k: &str, default: f64| -> Result<f64> {
        match meta.get(k) {
            Some(v) => v.parse().map_err(|_| format_err("sidecar", &side, format!("bad {k}"))),
            None => Ok(default),
        }
    };
    let (scale, pitch) = (get("scale", 1.0)?, get("pitch_m", 1.0)?);
    let values = if bytes == 2 {
        body.chunks_exact(2)
            .map(|c| f64::from(u16::from_be_bytes([c[0], c[1]])) * scale)
            .collect()
    } else {
        body.iter().map(|&b| f64::from(b) * scale).collect()
    };
    Ok((ImageField::new(w, h, pitch, values)?, meta))
}

fn writer(path: &Path, header: &[&str]) -> Result<csv::Writer<fs::File>> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    Ok(w)
}

fn num(v: f64) -> String {
    v.to_string()
}

pub fn write_echo_csv(path: &Path, trace: &EchoTrace) -> Result<()> {
    let mut w = writer(path, &ECHO_HEADER)?;
    for (t, i) in trace.t_grid.iter().zip(&trace.intensity) {
        w.write_record([num(*t), num(*i)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_spin_wave_csv(path: &Path, wave: &SpinWave) -> Result<()> {
    let mut w = writer(path, &SPIN_WAVE_HEADER)?;
    for ((z, s), tag) in wave.z_grid.iter().zip(&wave.s).zip(&wave.slice_tags) {
        let tag = tag.map_or(String::new(), |k| k.to_string());
        w.write_record([num(*z), num(s.re), num(s.im), tag])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_similarity_csv(path: &Path, rows: &[SimilarityRow]) -> Result<()> {
    let mut w = writer(path, &SIMILARITY_HEADER)?;
    for r in rows {
        w.write_record([r.frame_index.to_string(), num(r.t), num(r.s_n), num(r.s_t), num(r.d)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_contrast_csv(path: &Path, curves: &[&ContrastCurve]) -> Result<()> {
    let mut w = writer(path, &CONTRAST_HEADER)?;
    for c in curves {
        for p in &c.points {
            let pred = p.c_pred.map_or(String::new(), num);
            w.write_record([num(c.a), num(p.t_storage), num(p.c), pred])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_mtf_csv(path: &Path, rows: &[MtfRow]) -> Result<()> {
    let mut w = writer(path, &MTF_HEADER)?;
    for r in rows {
        w.write_record([num(r.frequency * 1e-3), num(r.t), num(r.c)])?;
    }
    w.flush()?;
    Ok(())
}

/// A CSV table read back as columns of numbers; empty cells become NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

/// Reads a numeric CSV and checks its header against `expected`.
pub fn read_table(path: &Path, kind: &'static str, expected: &[&str]) -> Result<Table> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.is_empty() || header.iter().all(|h| h.is_empty()) {
        return Err(Error::NoData(format!("no data in {}", path.display())));
    }
    if header != expected {
        return Err(format_err(
            kind,
            path,
            format!("header {:?} does not match expected {:?}", header, expected),
        ));
    }
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|f| if f.is_empty() { Ok(f64::NAN) } else { f.parse::<f64>() })
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| format_err(kind, path, format!("row {}: {e}", i + 1)))?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::NoData(format!("no data rows in {}", path.display())));
    }
    Ok(Table { header, rows })
}

pub fn read_similarity_csv(path: &Path) -> Result<Vec<SimilarityRow>> {
    let t = read_table(path, "similarity CSV", &SIMILARITY_HEADER)?;
    Ok(t.rows
        .iter()
        .map(|r| SimilarityRow { frame_index: r[0] as usize, t: r[1], s_n: r[2], s_t: r[3], d: r[4] })
        .collect())
}

/// Contrast curves grouped by line width, in file order.
pub fn read_contrast_csv(path: &Path) -> Result<Vec<ContrastCurve>> {
    let t = read_table(path, "contrast CSV", &CONTRAST_HEADER)?;
    let mut curves: Vec<ContrastCurve> = Vec::new();
    for r in &t.rows {
        let point = crate::metrics::ContrastPoint {
            t_storage: r[1],
            c: r[2],
            c_pred: (!r[3].is_nan()).then_some(r[3]),
        };
        match curves.last_mut() {
            Some(c) if c.a == r[0] => c.points.push(point),
            _ => curves.push(ContrastCurve { a: r[0], c0: f64::NAN, points: vec![point] }),
        }
    }
    Ok(curves)
}

pub fn read_mtf_csv(path: &Path) -> Result<Vec<MtfRow>> {
    let t = read_table(path, "MTF CSV", &MTF_HEADER)?;
    Ok(t.rows.iter().map(|r| MtfRow { frequency: r[0] * 1e3, t: r[1], c: r[2] }).collect())
}

pub fn read_echo_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let t = read_table(path, "echo CSV", &ECHO_HEADER)?;
    Ok(t.rows.iter().map(|r| (r[0], r[1])).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::ContrastPoint;

    #[test]
    fn pgm_round_trip_within_quantisation() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("img.pgm");
        let img = ImageField::from_fn(7, 5, 15e-6, |x, y| (x * y) as f64 * 0.37 + 0.01).unwrap();
        let mut extra = BTreeMap::new();
        extra.insert("t_start_s".into(), "1e-7".into());
        write_pgm(&p, &img, &extra).unwrap();
        let (back, meta) = read_pgm(&p).unwrap();
        assert_eq!(back.pitch(), 15e-6);
        assert_eq!(meta["t_start_s"], "1e-7");
        let step = img.max() / 65535.0;
        for (a, b) in img.values().iter().zip(back.values()) {
            assert!((a - b).abs() <= 0.5 * step + 1e-15);
        }
        // a second trip is exact
        write_pgm(&p, &back, &extra).unwrap();
        assert_eq!(read_pgm(&p).unwrap().0, back);
    }

    #[test]
    fn pgm_rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.pgm");
        fs::write(&p, b"P2\n1 1\n255\n0").unwrap();
        assert!(matches!(read_pgm(&p), Err(Error::Format { .. })));
        fs::write(&p, b"P5\n2 2\n65535\n\0\0").unwrap();
        assert!(matches!(read_pgm(&p), Err(Error::Format { .. })));
    }

    #[test]
    fn csv_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![
            SimilarityRow { frame_index: 0, t: 1.5e-7, s_n: 0.3, s_t: 0.9, d: 0.6 },
            SimilarityRow { frame_index: 1, t: 2.5e-7, s_n: 0.1 + 0.2, s_t: 1.0 / 3.0, d: 0.0 },
        ];
        let p = dir.path().join("s.csv");
        write_similarity_csv(&p, &rows).unwrap();
        assert_eq!(read_similarity_csv(&p).unwrap(), rows);

        let curve = ContrastCurve {
            a: 375e-6,
            c0: 1.0,
            points: vec![
                ContrastPoint { t_storage: 1e-7, c: 0.99, c_pred: Some(0.98) },
                ContrastPoint { t_storage: 2e-7, c: 0.9, c_pred: None },
            ],
        };
        let p = dir.path().join("c.csv");
        write_contrast_csv(&p, &[&curve]).unwrap();
        let back = read_contrast_csv(&p).unwrap();
        assert_eq!(back[0].points, curve.points);

        let mtf = vec![MtfRow { frequency: 1333.3333333333333, t: 5e-7, c: 0.86 }];
        let p = dir.path().join("m.csv");
        write_mtf_csv(&p, &mtf).unwrap();
        let back = read_mtf_csv(&p).unwrap();
        assert!((back[0].frequency - mtf[0].frequency).abs() < 1e-9);
        assert!(matches!(read_similarity_csv(&p), Err(Error::Format { .. })));
    }

    #[test]
    fn empty_csv_is_no_data() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.csv");
        fs::write(&p, "").unwrap();
        assert!(matches!(read_mtf_csv(&p), Err(Error::NoData(_))));
        fs::write(&p, "frequency_lp_per_mm,t_seconds,C\n").unwrap();
        let err = read_mtf_csv(&p).unwrap_err();
        assert!(err.to_string().contains("no data"), "{err}");
    }
}
