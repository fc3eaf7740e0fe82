//! CSV and JSON writers.
//!
//! CSV uses `,` separators, a header line and 17 significant digits
//! (`{:.16e}`), which round-trips every f64. JSON numbers use the shortest
//! round-trip representation. Nothing time-dependent is written unless a
//! timestamp is passed explicitly.

use std::io::Write;

use serde::Serialize;

use crate::appendix::CrosscheckReport;
use crate::eigen::{EigenSplit, PhaseKind};
use crate::error::{Error, Result};
use crate::response::{unwrap_phase, SpectrumMeta, SpectrumTable};

pub const SPECTRUM_COLUMNS: [&str; 5] = ["delta_p", "re_t", "im_t", "T", "tau_g"];
pub const EIGEN_COLUMNS: [&str; 5] = ["omega_plus", "omega_minus", "kappa_plus", "kappa_minus", "class"];
pub const DELAY_COLUMNS: [&str; 5] = ["delta_p", "tau_g", "tau_g_coarse", "arg_t", "T"];
pub const CROSSCHECK_COLUMNS: [&str; 11] = [
    "delta_p",
    "direct_cw_re",
    "direct_cw_im",
    "appendix_cw_re",
    "appendix_cw_im",
    "deviation_cw",
    "direct_ccw_re",
    "direct_ccw_im",
    "appendix_ccw_re",
    "appendix_ccw_im",
    "deviation_ccw",
];

/// 17 significant digits in scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).from_writer(w)
}

fn finish<W: Write>(mut wtr: csv::Writer<W>) -> Result<()> {
    wtr.flush()?;
    Ok(())
}

fn spectrum_record(row: &crate::response::SpectrumRow) -> [String; 5] {
    [
        fmt_f64(row.delta_p),
        fmt_f64(row.t.re),
        fmt_f64(row.t.im),
        fmt_f64(row.transmission),
        fmt_f64(row.tau_g),
    ]
}

pub fn write_spectrum_csv<W: Write>(table: &SpectrumTable, w: W) -> Result<()> {
    let mut wtr = writer(w);
    wtr.write_record(SPECTRUM_COLUMNS).map_err(csv_error)?;
    for row in &table.rows {
        wtr.write_record(spectrum_record(row)).map_err(csv_error)?;
    }
    finish(wtr)
}

/// Long-format sweep table: the axis value followed by the spectrum columns.
pub fn write_sweep_csv<W: Write>(axis: &str, values: &[f64], tables: &[SpectrumTable], w: W) -> Result<()> {
    let mut wtr = writer(w);
    let mut header = vec![axis];
    header.extend(SPECTRUM_COLUMNS);
    wtr.write_record(&header).map_err(csv_error)?;
    for (value, table) in values.iter().zip(tables) {
        for row in &table.rows {
            let mut record = vec![fmt_f64(*value)];
            record.extend(spectrum_record(row));
            wtr.write_record(&record).map_err(csv_error)?;
        }
    }
    finish(wtr)
}

/// Group delay with the unwrapped phase of t along the grid.
pub fn write_delay_csv<W: Write>(table: &SpectrumTable, w: W) -> Result<()> {
    let phases: Vec<f64> = table.rows.iter().map(|r| r.t.arg()).collect();
    let phases = unwrap_phase(&phases);
    let mut wtr = writer(w);
    wtr.write_record(DELAY_COLUMNS).map_err(csv_error)?;
    for (row, phase) in table.rows.iter().zip(phases) {
        wtr.write_record([
            fmt_f64(row.delta_p),
            fmt_f64(row.tau_g),
            fmt_f64(row.tau_g_coarse),
            fmt_f64(phase),
            fmt_f64(row.transmission),
        ])
        .map_err(csv_error)?;
    }
    finish(wtr)
}

/// One row of an eigenvalue sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenRow {
    pub axis_value: f64,
    pub omega_plus: f64,
    pub omega_minus: f64,
    pub kappa_plus: f64,
    pub kappa_minus: f64,
    pub class: PhaseKind,
}

impl EigenRow {
    pub fn new(axis_value: f64, split: &EigenSplit, class: PhaseKind) -> Self {
        EigenRow {
            axis_value,
            omega_plus: split.omega_plus,
            omega_minus: split.omega_minus,
            kappa_plus: split.kappa_plus,
            kappa_minus: split.kappa_minus,
            class,
        }
    }
}

pub fn write_eigen_csv<W: Write>(axis: &str, rows: &[EigenRow], w: W) -> Result<()> {
    let mut wtr = writer(w);
    let mut header = vec![axis];
    header.extend(EIGEN_COLUMNS);
    wtr.write_record(&header).map_err(csv_error)?;
    for r in rows {
        wtr.write_record([
            fmt_f64(r.axis_value),
            fmt_f64(r.omega_plus),
            fmt_f64(r.omega_minus),
            fmt_f64(r.kappa_plus),
            fmt_f64(r.kappa_minus),
            r.class.label().to_string(),
        ])
        .map_err(csv_error)?;
    }
    finish(wtr)
}

pub fn write_crosscheck_csv<W: Write>(report: &CrosscheckReport, w: W) -> Result<()> {
    let mut wtr = writer(w);
    wtr.write_record(CROSSCHECK_COLUMNS).map_err(csv_error)?;
    for r in &report.rows {
        wtr.write_record([
            fmt_f64(r.delta_p),
            fmt_f64(r.direct_cw.re),
            fmt_f64(r.direct_cw.im),
            fmt_f64(r.appendix_cw.re),
            fmt_f64(r.appendix_cw.im),
            fmt_f64(r.deviation_cw),
            fmt_f64(r.direct_ccw.re),
            fmt_f64(r.direct_ccw.im),
            fmt_f64(r.appendix_ccw.re),
            fmt_f64(r.appendix_ccw.im),
            fmt_f64(r.deviation_ccw),
        ])
        .map_err(csv_error)?;
    }
    finish(wtr)
}

#[derive(Serialize)]
struct JsonMeta<'a> {
    #[serde(flatten)]
    meta: &'a SpectrumMeta,
    #[serde(skip_serializing_if = "Option::is_none")]
    timestamp: Option<&'a str>,
}

#[derive(Serialize)]
struct JsonSpectrumRow {
    delta_p: f64,
    re_t: f64,
    im_t: f64,
    #[serde(rename = "T")]
    t_rate: f64,
    tau_g: f64,
}

#[derive(Serialize)]
struct JsonSpectrum<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    axis_value: Option<f64>,
    metadata: JsonMeta<'a>,
    rows: Vec<JsonSpectrumRow>,
}

fn json_spectrum<'a>(table: &'a SpectrumTable, axis_value: Option<f64>, timestamp: Option<&'a str>) -> JsonSpectrum<'a> {
    JsonSpectrum {
        axis_value,
        metadata: JsonMeta {
            meta: &table.meta,
            timestamp,
        },
        rows: table
            .rows
            .iter()
            .map(|r| JsonSpectrumRow {
                delta_p: r.delta_p,
                re_t: r.t.re,
                im_t: r.t.im,
                t_rate: r.transmission,
                tau_g: r.tau_g,
            })
            .collect(),
    }
}

pub fn write_json<W: Write, T: Serialize + ?Sized>(value: &T, mut w: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Io(e.to_string()))?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn write_spectrum_json<W: Write>(table: &SpectrumTable, timestamp: Option<&str>, w: W) -> Result<()> {
    write_json(&json_spectrum(table, None, timestamp), w)
}

#[derive(Serialize)]
struct JsonSweep<'a> {
    axis: &'a str,
    tables: Vec<JsonSpectrum<'a>>,
}

pub fn write_sweep_json<W: Write>(axis: &str, values: &[f64], tables: &[SpectrumTable], timestamp: Option<&str>, w: W) -> Result<()> {
    let doc = JsonSweep {
        axis,
        tables: values
            .iter()
            .zip(tables)
            .map(|(v, t)| json_spectrum(t, Some(*v), timestamp))
            .collect(),
    };
    write_json(&doc, w)
}
