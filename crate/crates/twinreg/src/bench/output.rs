//! Result persistence: `result.json` with the full records and
//! `result.csv` with one row per repetition and sweep value. Both files
//! are written atomically (temp file in the same directory, then rename),
//! so a crash never leaves a truncated result behind.

use std::fs;
use std::path::{Path, PathBuf};

use crate::bench::experiment::ExperimentResult;
use crate::error::Result;

pub const CSV_HEADER: &str = "seed,sweep_value,rmse,train_s,infer_s";

fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "result".to_string());
    tmp_name.push_str(".tmp");
    let tmp: PathBuf = path.with_file_name(tmp_name);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Render the per-repetition CSV. Numbers use the shortest round-trip
/// decimal form, so identical results render to identical bytes.
pub fn render_csv(results: &[ExperimentResult]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for result in results {
        let sweep = match result.sweep_value {
            Some(v) => v.to_string(),
            None => String::new(),
        };
        for rep in &result.per_repetition {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                rep.seed, sweep, rep.rmse, rep.train_s, rep.infer_s
            ));
        }
    }
    out
}

/// Write `result.json` and `result.csv` into `dir`, creating it if needed.
/// A single result is stored as one JSON object, a sweep as a JSON array.
pub fn write_results(dir: impl AsRef<Path>, results: &[ExperimentResult]) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;

    let json = if results.len() == 1 {
        serde_json::to_string_pretty(&results[0])?
    } else {
        serde_json::to_string_pretty(results)?
    };
    atomic_write(&dir.join("result.json"), json.as_bytes())?;
    atomic_write(&dir.join("result.csv"), render_csv(results).as_bytes())?;
    Ok(())
}
