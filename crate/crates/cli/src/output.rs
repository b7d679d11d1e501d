//! CSV encoding and whole-file atomic writes.

use std::io::Write;
use std::path::{Path, PathBuf};

use dcform_core::analysis::IndexCurve;
use dcform_core::numfmt::sig9;
use dcform_core::sim::Trace;

use crate::error::CliError;

pub const INDEX_HEADER: [&str; 5] = ["omega_rad_s", "mag_abs", "mag_db", "phase_deg", "label"];

/// Write to a temporary file in the target directory, then rename over `path`.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Input(format!("cannot create {}: {e}", dir.display())))?;
    let mut builder = tempfile::Builder::new();
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        builder.permissions(std::fs::Permissions::from_mode(0o644));
    }
    let mut tmp = builder
        .tempfile_in(dir)
        .map_err(|e| CliError::Input(format!("cannot write in {}: {e}", dir.display())))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .map_err(|e| CliError::Input(format!("cannot write {}: {}", path.display(), e.error)))?;
    Ok(())
}

fn csv_bytes(header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::Input(e.to_string());
    w.write_record(header).map_err(fail)?;
    for r in rows {
        w.write_record(&r).map_err(fail)?;
    }
    w.into_inner().map_err(|e| CliError::Input(e.to_string()))
}

pub fn index_csv(curve: &IndexCurve) -> Result<Vec<u8>, CliError> {
    let header: Vec<String> = INDEX_HEADER.iter().map(|s| s.to_string()).collect();
    let rows = curve.samples.iter().map(|s| {
        vec![
            sig9(s.omega),
            sig9(s.value.norm()),
            sig9(s.mag_db()),
            sig9(s.phase_deg()),
            s.label.as_str().to_string(),
        ]
    });
    csv_bytes(&header, rows)
}

pub fn trace_csv(trace: &Trace) -> Result<Vec<u8>, CliError> {
    let rows = (0..trace.len()).map(|k| trace.row(k).into_iter().map(sig9).collect());
    csv_bytes(&trace.header(), rows)
}

pub fn table_csv(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>, CliError> {
    let header: Vec<String> = header.iter().map(|s| s.to_string()).collect();
    csv_bytes(&header, rows.iter().cloned())
}

pub fn out_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

/// Parsed CSV contents, for plotting.
#[derive(Clone, Debug, PartialEq)]
pub enum CsvData {
    Index {
        omega: Vec<f64>,
        mag: Vec<f64>,
        phase_deg: Vec<f64>,
    },
    Trace {
        time: Vec<f64>,
        v_dc: Vec<f64>,
    },
}

pub fn read_csv(path: &Path) -> Result<CsvData, CliError> {
    let bad = |msg: String| CliError::Input(format!("{}: {msg}", path.display()));
    let mut rd = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let header: Vec<String> = rd
        .headers()
        .map_err(|e| bad(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let is_index = header == INDEX_HEADER;
    let is_trace = header.first().map(String::as_str) == Some("time_s") && header.get(1).map(String::as_str) == Some("v_dc_V");
    if !is_index && !is_trace {
        return Err(bad(format!("unrecognized header {header:?}")));
    }
    let mut cols: [Vec<f64>; 3] = Default::default();
    for rec in rd.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let pick: &[usize] = if is_index { &[0, 1, 3] } else { &[0, 1] };
        for (slot, &i) in pick.iter().enumerate() {
            let field = rec.get(i).ok_or_else(|| bad("short row".into()))?;
            let v: f64 = field
                .parse()
                .map_err(|_| bad(format!("not a number: '{field}'")))?;
            cols[slot].push(v);
        }
    }
    if cols[0].is_empty() {
        return Err(bad("no data rows".into()));
    }
    let [a, b, c] = cols;
    Ok(if is_index {
        CsvData::Index {
            omega: a,
            mag: b,
            phase_deg: c,
        }
    } else {
        CsvData::Trace { time: a, v_dc: b }
    })
}
