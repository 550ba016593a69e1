use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use vqasc::xpress::ExpressibilityReport;
use vqasc::Complex64;

/// Writes `bytes` next to `path` and renames into place, so readers never
/// see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating a temporary file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_vec_pretty(value)?;
    text.push(b'\n');
    write_atomic(path, &text)
}

pub fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

/// `index, re, im, abs` for complex-plane plots of the optimised state.
pub fn statevector_csv(amps: &[Complex64]) -> Result<Vec<u8>> {
    csv_bytes(
        &["index", "re", "im", "abs"],
        amps.iter()
            .enumerate()
            .map(|(i, a)| vec![i.to_string(), a.re.to_string(), a.im.to_string(), a.norm().to_string()]),
    )
}

pub fn histogram_csv(report: &ExpressibilityReport) -> Result<Vec<u8>> {
    let h = &report.histogram;
    csv_bytes(
        &["bin_lower", "bin_upper", "count", "empirical_prob", "haar_prob"],
        (0..h.n_bins).map(|b| {
            let (lo, hi) = h.bin_edges(b);
            vec![
                lo.to_string(),
                hi.to_string(),
                h.counts[b].to_string(),
                h.empirical_probs[b].to_string(),
                report.haar_probs[b].to_string(),
            ]
        }),
    )
}
