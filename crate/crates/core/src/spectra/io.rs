//! CSV and JSON encodings of spectra and maps.
//!
//! * Spectrum CSV: header `energy_eV,intensity`, one row per grid point,
//!   energies ascending. Extra named columns may follow.
//! * Map CSV: first row is the column axis (emission or transfer energies)
//!   after a blank corner cell, first column is the incident axis.
//! * Map JSON: `{"incident": {start, step, count}, "emission": {...}, "intensity": [[...]]}`.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::grid::EnergyGrid;
use super::map::{EnergyTransferMap, RixsMap};
use super::spectrum::Spectrum;

/// Relative tolerance (in units of the step) for accepting a CSV axis as uniform.
const UNIFORM_TOL: f64 = 1e-6;

pub(crate) fn fmt(v: f64) -> String {
    format!("{v}")
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::parse(line, io.to_string()),
        other => Error::parse(line, format!("{other:?}")),
    }
}

fn write_err(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e.to_string())
}

/// Write a spectrum with optional extra columns `(name, values)`.
pub fn write_spectrum_csv<W: Write>(
    w: W,
    s: &Spectrum,
    extra: &[(&str, &[f64])],
) -> std::io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["energy_eV", "intensity"];
    header.extend(extra.iter().map(|(n, _)| *n));
    out.write_record(&header).map_err(write_err)?;
    for (i, (e, v)) in s.energies().zip(s.values()).enumerate() {
        let mut rec = vec![fmt(e), fmt(*v)];
        rec.extend(extra.iter().map(|(_, col)| fmt(col[i])));
        out.write_record(&rec).map_err(write_err)?;
    }
    out.flush()
}

fn parse_f64(field: &str, line: u64, what: &str) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::parse(line, format!("cannot parse {what} `{field}` as a number")))
}

/// Build a uniform grid from axis samples or fail with the offending line.
fn uniform_axis(points: &[(f64, u64)]) -> Result<EnergyGrid> {
    if points.len() < 2 {
        let line = points.first().map(|p| p.1).unwrap_or(1);
        return Err(Error::parse(line, "need at least two samples"));
    }
    let n = points.len();
    let start = points[0].0;
    let step = (points[n - 1].0 - start) / (n - 1) as f64;
    if !(step > 0.0) {
        return Err(Error::parse(points[1].1, "energies must be strictly ascending"));
    }
    for (i, (e, line)) in points.iter().enumerate() {
        let expect = start + i as f64 * step;
        if ((e - expect) / step).abs() > UNIFORM_TOL {
            return Err(Error::parse(
                *line,
                format!("axis is not uniform: {e} where {expect} was expected"),
            ));
        }
    }
    EnergyGrid::new(start, step, n).map_err(|e| Error::parse(points[0].1, e.to_string()))
}

/// Read a spectrum CSV (first two columns); the axis must be uniform.
pub fn read_spectrum_csv<R: Read>(r: R) -> Result<Spectrum> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(r);
    let header = rdr.headers().map_err(csv_err)?.clone();
    if header.len() < 2 || header[0].trim() != "energy_eV" || header[1].trim() != "intensity" {
        return Err(Error::parse(1, "expected header `energy_eV,intensity`"));
    }
    let mut axis = Vec::new();
    let mut values = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() < 2 {
            return Err(Error::parse(line, "expected at least two columns"));
        }
        axis.push((parse_f64(&rec[0], line, "energy")?, line));
        values.push(parse_f64(&rec[1], line, "intensity")?);
    }
    let grid = uniform_axis(&axis)?;
    Spectrum::new(grid, values).map_err(|e| Error::parse(1, e.to_string()))
}

fn write_matrix_csv<W: Write>(
    w: W,
    rows: &EnergyGrid,
    cols: &EnergyGrid,
    m: &Array2<f64>,
) -> std::io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec![String::new()];
    header.extend(cols.points().map(fmt));
    out.write_record(&header).map_err(write_err)?;
    for (i, row) in m.rows().into_iter().enumerate() {
        let mut rec = Vec::with_capacity(cols.count() + 1);
        rec.push(fmt(rows.point(i)));
        rec.extend(row.iter().map(|v| fmt(*v)));
        out.write_record(&rec).map_err(write_err)?;
    }
    out.flush()
}

fn read_matrix_csv<R: Read>(r: R) -> Result<(EnergyGrid, EnergyGrid, Array2<f64>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .from_reader(r);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(h) => h.map_err(csv_err)?,
        None => return Err(Error::parse(1, "empty map file")),
    };
    if header.len() < 3 {
        return Err(Error::parse(1, "header must hold a blank corner cell and at least two column energies"));
    }
    if !header[0].trim().is_empty() {
        return Err(Error::parse(1, "corner cell (row 1, column 1) must be blank"));
    }
    let col_axis: Vec<(f64, u64)> = header
        .iter()
        .skip(1)
        .map(|f| parse_f64(f, 1, "column energy").map(|e| (e, 1)))
        .collect::<Result<_>>()?;
    let cols = uniform_axis(&col_axis)?;
    let mut row_axis = Vec::new();
    let mut data = Vec::new();
    for rec in records {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        row_axis.push((parse_f64(&rec[0], line, "incident energy")?, line));
        for f in rec.iter().skip(1) {
            let v = parse_f64(f, line, "intensity")?;
            if !v.is_finite() || v < 0.0 {
                return Err(Error::parse(line, format!("intensity {v} must be finite and >= 0")));
            }
            data.push(v);
        }
    }
    if row_axis.is_empty() {
        return Err(Error::parse(1, "map has no data rows"));
    }
    let rows = uniform_axis(&row_axis)?;
    let m = Array2::from_shape_vec((rows.count(), cols.count()), data)
        .map_err(|e| Error::parse(1, e.to_string()))?;
    Ok((rows, cols, m))
}

pub fn write_map_csv<W: Write>(w: W, m: &RixsMap) -> std::io::Result<()> {
    write_matrix_csv(w, m.incident(), m.emission(), m.intensity())
}

pub fn read_map_csv<R: Read>(r: R) -> Result<RixsMap> {
    let (inc, em, m) = read_matrix_csv(r)?;
    RixsMap::new(inc, em, m)
}

pub fn write_transfer_map_csv<W: Write>(w: W, m: &EnergyTransferMap) -> std::io::Result<()> {
    write_matrix_csv(w, m.incident(), m.transfer(), m.intensity())
}

pub fn read_transfer_map_csv<R: Read>(r: R) -> Result<EnergyTransferMap> {
    let (inc, tr, m) = read_matrix_csv(r)?;
    EnergyTransferMap::new(inc, tr, m)
}

#[derive(Serialize, Deserialize)]
struct MapJson {
    incident: EnergyGrid,
    emission: EnergyGrid,
    intensity: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct TransferMapJson {
    incident: EnergyGrid,
    transfer: EnergyGrid,
    intensity: Vec<Vec<f64>>,
}

fn rows_of(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn matrix_of(rows: Vec<Vec<f64>>, n_rows: usize, n_cols: usize) -> Result<Array2<f64>> {
    if rows.len() != n_rows || rows.iter().any(|r| r.len() != n_cols) {
        return Err(Error::invalid(
            "intensity",
            format!("expected {n_rows} rows of {n_cols} values"),
        ));
    }
    Ok(Array2::from_shape_vec((n_rows, n_cols), rows.into_iter().flatten().collect())
        .expect("shape checked above"))
}

pub fn write_map_json<W: Write>(w: W, m: &RixsMap) -> std::io::Result<()> {
    let doc = MapJson {
        incident: *m.incident(),
        emission: *m.emission(),
        intensity: rows_of(m.intensity()),
    };
    serde_json::to_writer(w, &doc).map_err(std::io::Error::other)
}

pub fn read_map_json<R: Read>(r: R) -> Result<RixsMap> {
    let doc: MapJson = serde_json::from_reader(r)
        .map_err(|e| Error::parse(e.line() as u64, e.to_string()))?;
    let m = matrix_of(doc.intensity, doc.incident.count(), doc.emission.count())?;
    RixsMap::new(doc.incident, doc.emission, m)
}

pub fn write_transfer_map_json<W: Write>(w: W, m: &EnergyTransferMap) -> std::io::Result<()> {
    let doc = TransferMapJson {
        incident: *m.incident(),
        transfer: *m.transfer(),
        intensity: rows_of(m.intensity()),
    };
    serde_json::to_writer(w, &doc).map_err(std::io::Error::other)
}

/// Create (truncate) `path` and hand a buffered writer to `f`.
pub fn write_file(path: &Path, f: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn open_file(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

/// Load a map from `.json` or CSV (anything else), chosen by extension.
pub fn load_map(path: &Path) -> Result<RixsMap> {
    let f = open_file(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => read_map_json(f),
        _ => read_map_csv(f),
    }
}
