use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ExperimentConfig;
use super::run::Report;
use crate::asymptotics::{PeakSign, CSV_HEADER};
use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    /// Seconds since the Unix epoch; the only time-dependent output.
    pub timestamp: u64,
    pub files: Vec<ManifestEntry>,
}

fn write_file(dir: &Path, rel: &str, bytes: &[u8], files: &mut Vec<ManifestEntry>) -> Result<()> {
    let path = dir.join(rel);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&path, e))?;
    files.push(ManifestEntry { path: rel.to_string(), bytes: bytes.len() as u64 });
    Ok(())
}

pub fn diagnostics_csv(report: &Report) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    let columns = CSV_HEADER.split(',').count();
    for e in &report.entries {
        match &e.record {
            Some(r) => out.push_str(&r.csv_row()),
            None => {
                // failed exponent: keep the row, mark every value
                let mut cols = vec![format!("{}", e.p)];
                cols.extend(std::iter::repeat_n("failed".to_string(), columns - 1));
                out.push_str(&cols.join(","));
            }
        }
        out.push('\n');
    }
    out
}

fn tag(p: f64) -> String {
    format!("p{p}")
}

/// Write every output file under `dir`. Everything except `manifest.json` is a
/// pure function of the report.
pub fn emit_outputs(report: &Report, config: Option<&ExperimentConfig>, dir: &Path) -> Result<Manifest> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    write_file(dir, "diagnostics.csv", diagnostics_csv(report).as_bytes(), &mut files)?;
    let mut json = serde_json::to_vec_pretty(report)?;
    json.push(b'\n');
    write_file(dir, "report.json", &json, &mut files)?;
    if let Some(cfg) = config {
        let mut json = serde_json::to_vec_pretty(cfg)?;
        json.push(b'\n');
        write_file(dir, "effective_config.json", &json, &mut files)?;
    }
    for prof in &report.profiles {
        let sign = match prof.sign {
            PeakSign::Plus => "plus",
            PeakSign::Minus => "minus",
        };
        let mut s = String::from("x1,x2,z_p,z,z_p_minus_z\n");
        for smp in &prof.samples {
            s.push_str(&format!("{},{},{},{},{}\n", smp.y[0], smp.y[1], smp.z_p, smp.z, smp.z_p - smp.z));
        }
        write_file(dir, &format!("profiles/{}_{sign}.csv", tag(prof.p)), s.as_bytes(), &mut files)?;
    }
    for (p, field) in &report.fields {
        let mut buf = Vec::new();
        field.write_csv(&mut buf).map_err(|e| Error::io(PathBuf::from("fields"), e))?;
        write_file(dir, &format!("fields/u_{}.csv", tag(*p)), &buf, &mut files)?;
    }
    let timestamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let manifest = Manifest { timestamp, files };
    let mut json = serde_json::to_vec_pretty(&manifest)?;
    json.push(b'\n');
    let path = dir.join("manifest.json");
    fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}
