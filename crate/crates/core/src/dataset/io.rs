//! CSV dataset files with a JSON metadata sidecar.
//!
//! `name.csv` holds a header `rss_dbm,x,y,z[,lx,ly]` and one row per sample;
//! `name.meta.json` holds the [`DatasetMeta`] that generated it.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::{ChannelSample, Dataset, DatasetMeta};

/// Formats a float in plain decimal notation with 17 significant digits,
/// enough for an exact round trip through text.
pub fn fmt_float(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v:.16}");
    }
    let mag = v.abs().log10().floor() as i32;
    let decimals = (16 - mag).max(0) as usize;
    format!("{v:.decimals$}")
}

/// `dir/name.csv` → `dir/name.meta.json`.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    let stem = csv_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    csv_path.with_file_name(format!("{stem}.meta.json"))
}

fn header(ds: &Dataset) -> Vec<String> {
    let mut h = vec!["rss_dbm".to_string()];
    h.extend(ds.feature_names.iter().cloned());
    h
}

/// Writes the CSV rows only.
pub fn write_csv_rows<W: std::io::Write>(ds: &Dataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(ds))?;
    for r in &ds.rows {
        let mut rec = vec![fmt_float(r.rss_dbm), fmt_float(r.x), fmt_float(r.y), fmt_float(r.z)];
        if let Some((lx, ly)) = r.room {
            rec.push(fmt_float(lx));
            rec.push(fmt_float(ly));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `path` and its metadata sidecar.
pub fn write_dataset(ds: &Dataset, path: &Path) -> Result<()> {
    let file = fs::File::create(path)?;
    write_csv_rows(ds, std::io::BufWriter::new(file))?;
    let meta = serde_json::to_string_pretty(&ds.meta).expect("metadata serializes");
    fs::write(sidecar_path(path), meta + "\n")?;
    Ok(())
}

/// Reads a dataset CSV. The sidecar is used when present; otherwise the
/// metadata is marked external.
pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let mut rdr = csv::Reader::from_path(path)?;
    let head: Vec<String> = rdr.headers()?.iter().map(|s| s.trim().to_string()).collect();
    let cols = |name: &str| head.iter().position(|h| h == name);
    let rss = cols("rss_dbm").ok_or_else(|| Error::MalformedFile("missing rss_dbm column".into()))?;
    let need = |name: &str| {
        cols(name).ok_or_else(|| Error::MalformedFile(format!("missing {name} column")))
    };
    let (cx, cy, cz) = (need("x")?, need("y")?, need("z")?);
    let room_cols = match (cols("lx"), cols("ly")) {
        (Some(a), Some(b)) => Some((a, b)),
        (None, None) => None,
        _ => return Err(Error::MalformedFile("lx and ly must appear together".into())),
    };
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let get = |c: usize| -> Result<f64> {
            rec.get(c)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::MalformedFile(format!("bad number in row {}", line + 1)))
        };
        rows.push(ChannelSample {
            rss_dbm: get(rss)?,
            x: get(cx)?,
            y: get(cy)?,
            z: get(cz)?,
            room: match room_cols {
                Some((a, b)) => Some((get(a)?, get(b)?)),
                None => None,
            },
        });
    }
    let side = sidecar_path(path);
    let meta = if side.exists() {
        serde_json::from_str::<DatasetMeta>(&fs::read_to_string(&side)?)
            .map_err(|e| Error::MalformedFile(format!("{}: {e}", side.display())))?
    } else {
        DatasetMeta::external()
    };
    Dataset::new(rows, meta)
}

/// Reads only the feature columns of a CSV (an `rss_dbm` column, if any, is
/// ignored). Returns the arity and the row-major features.
pub fn read_features(path: &Path) -> Result<(usize, Vec<f64>)> {
    let mut rdr = csv::Reader::from_path(path)?;
    let head: Vec<String> = rdr.headers()?.iter().map(|s| s.trim().to_string()).collect();
    let names: &[&str] = if head.iter().any(|h| h == "lx") {
        &super::VARIABLE_FEATURES
    } else {
        &super::FIXED_FEATURES
    };
    let idx = names
        .iter()
        .map(|n| {
            head.iter()
                .position(|h| h == n)
                .ok_or_else(|| Error::MalformedFile(format!("missing {n} column")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        for &c in &idx {
            let v = rec
                .get(c)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::MalformedFile(format!("bad number in row {}", line + 1)))?;
            out.push(v);
        }
    }
    Ok((names.len(), out))
}
