//! Long-format panel CSV: `time,unit,value` plus optional `true_cluster` and
//! covariate columns. Lines starting with `#` are comments.

use crate::error::{write_error, CliError, CliResult};
use ar1dp::mixture::Dataset;
use ar1dp::simdata::ScenarioOutput;
use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

/// Provenance comment placed on the first line of every CSV output.
pub fn provenance_line(hash: &str) -> String {
    format!("# ar1dp {} config_hash={hash}\n", env!("CARGO_PKG_VERSION"))
}

/// Reads a panel, keeping times and units in order of first appearance.
pub fn read_dataset(path: &Path, covariates: &[String]) -> CliResult<Dataset> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::data(format!("cannot open data file {}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(file);
    let bad = |msg: String| CliError::data(format!("{}: {msg}", path.display()));
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| bad(format!("missing column `{name}`")))
    };
    let (ti, ui, vi) = (column("time")?, column("unit")?, column("value")?);
    let cov_idx = covariates.iter().map(|c| column(c)).collect::<CliResult<Vec<_>>>()?;

    let mut time_ids: Vec<String> = Vec::new();
    let mut unit_ids: Vec<String> = Vec::new();
    let mut time_pos = HashMap::new();
    let mut unit_pos = HashMap::new();
    let mut cells: HashMap<(usize, usize), (f64, Vec<f64>)> = HashMap::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let parse = |i: usize| -> CliResult<f64> {
            let s = rec.get(i).unwrap_or("");
            s.parse::<f64>()
                .map_err(|_| bad(format!("record {}: `{s}` is not a number", line + 1)))
        };
        let t = rec.get(ti).unwrap_or("").to_string();
        let u = rec.get(ui).unwrap_or("").to_string();
        let t_idx = *time_pos.entry(t.clone()).or_insert_with(|| {
            time_ids.push(t.clone());
            time_ids.len() - 1
        });
        let u_idx = *unit_pos.entry(u.clone()).or_insert_with(|| {
            unit_ids.push(u.clone());
            unit_ids.len() - 1
        });
        let value = parse(vi)?;
        let x = cov_idx.iter().map(|&i| parse(i)).collect::<CliResult<Vec<_>>>()?;
        if cells.insert((t_idx, u_idx), (value, x)).is_some() {
            return Err(bad(format!("duplicate observation for time `{t}`, unit `{u}`")));
        }
    }
    let (horizon, units) = (time_ids.len(), unit_ids.len());
    if horizon == 0 {
        return Err(bad("no observations".into()));
    }
    let mut y = Vec::with_capacity(horizon * units);
    let mut xs = Vec::with_capacity(horizon * units * covariates.len());
    for t in 0..horizon {
        for u in 0..units {
            let (v, x) = cells.remove(&(t, u)).ok_or_else(|| {
                bad(format!(
                    "panel is incomplete: no value for time `{}`, unit `{}`",
                    time_ids[t], unit_ids[u]
                ))
            })?;
            y.push(v);
            xs.extend(x);
        }
    }
    let mut data = Dataset::new(horizon, units, y)?.with_ids(time_ids, unit_ids)?;
    if !covariates.is_empty() {
        data = data.with_covariates(covariates.to_vec(), xs)?;
    }
    Ok(data)
}

/// Writes a simulated scenario in long format with its generating clusters.
pub fn write_scenario(path: &Path, sim: &ScenarioOutput, hash: &str) -> CliResult<()> {
    let mut out = String::with_capacity(32 * sim.dataset.values().len());
    out.push_str(&provenance_line(hash));
    out.push_str("time,unit,value,true_cluster\n");
    for t in 0..sim.dataset.horizon() {
        for j in 0..sim.dataset.units() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                t + 1,
                j + 1,
                sim.dataset.y(t, j),
                sim.true_clusters[t][j] + 1
            ));
        }
    }
    write_text(path, &out)
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| write_error(parent, e))?;
    }
    let mut f = std::fs::File::create(path).map_err(|e| write_error(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| write_error(path, e))
}
