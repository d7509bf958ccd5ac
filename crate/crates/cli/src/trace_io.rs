//! Trace storage: a columnar little-endian binary payload (or a wide CSV)
//! described by a JSON sidecar.
//!
//! Binary layout: the 8-byte magic `AR1DPTR1`, then each column stored
//! contiguously in the order listed in the sidecar, draw-major.

use crate::data::provenance_line;
use crate::error::{write_error, CliError, CliResult};
use ar1dp::inference::{Draw, McmcConfig, PriorSpec, Provenance, Trace};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const SCHEMA: &str = "ar1dp-trace";
pub const SCHEMA_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"AR1DPTR1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum TraceFormat {
    Binary,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DType {
    U64,
    U32,
    F64,
}

/// One stored field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub dtype: DType,
    /// Leading dimension is always the number of draws.
    pub shape: Vec<usize>,
    /// Byte offset in the binary payload, or first column index in the CSV.
    pub offset: u64,
    pub description: String,
}

impl Column {
    fn len(&self) -> usize {
        self.shape.iter().product()
    }

    fn width(&self) -> usize {
        self.shape[1..].iter().product()
    }
}

/// Self-describing index written next to every trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub schema: String,
    pub schema_version: u32,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub format: TraceFormat,
    pub payload: String,
    pub data_path: PathBuf,
    pub draws: usize,
    pub horizon: usize,
    pub units: usize,
    pub components: usize,
    pub covariate_dim: usize,
    pub time_ids: Vec<String>,
    pub unit_ids: Vec<String>,
    pub covariate_names: Vec<String>,
    pub psi_acceptance: f64,
    pub mass_acceptance: f64,
    pub final_psi_proposal_sd: f64,
    pub prior: PriorSpec,
    pub mcmc: McmcConfig,
    pub columns: Vec<Column>,
}

/// Panel labels carried into the sidecar.
pub struct PanelInfo {
    pub data_path: PathBuf,
    pub time_ids: Vec<String>,
    pub unit_ids: Vec<String>,
    pub covariate_names: Vec<String>,
}

fn layout(trace: &Trace, format: TraceFormat) -> Vec<Column> {
    let d = trace.len();
    let (t, n, j, p) = (trace.horizon, trace.units, trace.components, trace.covariate_dim);
    let specs: [(&str, DType, Vec<usize>, &str); 9] = [
        ("iteration", DType::U64, vec![d], "0-based sweep index of the draw"),
        ("psi", DType::F64, vec![d], "autocorrelation psi"),
        ("M", DType::F64, vec![d], "total mass M"),
        ("log_evidence", DType::F64, vec![d], "SMC estimate of log p(s | psi) from the sweep"),
        ("s", DType::U32, vec![d, t, n], "0-based component of unit j at time t"),
        ("theta_mu", DType::F64, vec![d, j], "component locations mu_h"),
        ("theta_tau", DType::F64, vec![d, j], "component precisions tau_h"),
        ("beta", DType::F64, vec![d, t, p], "regression coefficients beta_t"),
        ("weights", DType::F64, vec![d, t, j], "mixture weights w_th"),
    ];
    let mut offset = match format {
        TraceFormat::Binary => MAGIC.len() as u64,
        TraceFormat::Csv => 0,
    };
    specs
        .into_iter()
        .map(|(name, dtype, shape, description)| {
            let col = Column {
                name: name.into(),
                dtype,
                shape,
                offset,
                description: description.into(),
            };
            offset += match format {
                TraceFormat::Binary => (col.len() * if dtype == DType::U32 { 4 } else { 8 }) as u64,
                TraceFormat::Csv => col.width() as u64,
            };
            col
        })
        .collect()
}

/// Per-draw values of one column, flattened.
fn column_values(trace: &Trace, name: &str, draw: &Draw) -> Vec<f64> {
    match name {
        "iteration" => vec![draw.iteration as f64],
        "psi" => vec![draw.psi],
        "M" => vec![draw.mass],
        "log_evidence" => vec![draw.log_evidence],
        "s" => draw.alloc.iter().map(|&s| s as f64).collect(),
        "theta_mu" => draw.mu.clone(),
        "theta_tau" => draw.tau.clone(),
        "beta" => {
            let mut b = draw.beta.clone();
            b.resize(trace.horizon * trace.covariate_dim, 0.0);
            b
        }
        "weights" => draw.weights.clone(),
        _ => unreachable!("unknown column {name}"),
    }
}

fn csv_header(col: &Column) -> Vec<String> {
    match col.shape.len() {
        1 => vec![col.name.clone()],
        2 => (0..col.shape[1]).map(|h| format!("{}[{}]", col.name, h + 1)).collect(),
        _ => {
            let mut out = Vec::new();
            for a in 0..col.shape[1] {
                for b in 0..col.shape[2] {
                    out.push(format!("{}[{}][{}]", col.name, a + 1, b + 1));
                }
            }
            out
        }
    }
}

/// Writes `<stem>.json` plus `<stem>.bin` or `<stem>.csv`; returns the sidecar path.
pub fn write_trace(dir: &Path, stem: &str, trace: &Trace, format: TraceFormat, panel: &PanelInfo) -> CliResult<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| write_error(dir, e))?;
    let columns = layout(trace, format);
    let payload = match format {
        TraceFormat::Binary => format!("{stem}.bin"),
        TraceFormat::Csv => format!("{stem}.csv"),
    };
    let payload_path = dir.join(&payload);
    match format {
        TraceFormat::Binary => {
            let mut bytes = MAGIC.to_vec();
            for col in &columns {
                for draw in &trace.draws {
                    for v in column_values(trace, &col.name, draw) {
                        match col.dtype {
                            DType::U64 => bytes.extend((v as u64).to_le_bytes()),
                            DType::U32 => bytes.extend((v as u32).to_le_bytes()),
                            DType::F64 => bytes.extend(v.to_le_bytes()),
                        }
                    }
                }
            }
            std::fs::write(&payload_path, bytes).map_err(|e| write_error(&payload_path, e))?;
        }
        TraceFormat::Csv => {
            let mut text = provenance_line(&trace.provenance.config_hash);
            let header: Vec<String> = columns.iter().flat_map(csv_header).collect();
            text.push_str(&header.join(","));
            text.push('\n');
            for draw in &trace.draws {
                let row: Vec<String> = columns
                    .iter()
                    .flat_map(|c| {
                        let ints = c.dtype != DType::F64;
                        column_values(trace, &c.name, draw)
                            .into_iter()
                            .map(move |v| if ints { format!("{}", v as u64) } else { format!("{v}") })
                    })
                    .collect();
                text.push_str(&row.join(","));
                text.push('\n');
            }
            crate::data::write_text(&payload_path, &text)?;
        }
    }
    let sidecar = Sidecar {
        schema: SCHEMA.into(),
        schema_version: SCHEMA_VERSION,
        version: trace.provenance.version.clone(),
        config_hash: trace.provenance.config_hash.clone(),
        seed: trace.provenance.seed,
        format,
        payload,
        data_path: panel.data_path.clone(),
        draws: trace.len(),
        horizon: trace.horizon,
        units: trace.units,
        components: trace.components,
        covariate_dim: trace.covariate_dim,
        time_ids: panel.time_ids.clone(),
        unit_ids: panel.unit_ids.clone(),
        covariate_names: panel.covariate_names.clone(),
        psi_acceptance: trace.psi_acceptance,
        mass_acceptance: trace.mass_acceptance,
        final_psi_proposal_sd: trace.final_psi_proposal_sd,
        prior: trace.prior.clone(),
        mcmc: trace.config.clone(),
        columns,
    };
    let path = dir.join(format!("{stem}.json"));
    let json = serde_json::to_string_pretty(&sidecar).map_err(|e| write_error(&path, e))?;
    crate::data::write_text(&path, &(json + "\n"))?;
    Ok(path)
}

fn bad_trace(path: &Path, msg: impl std::fmt::Display) -> CliError {
    CliError::data(format!("invalid trace {}: {msg}", path.display()))
}

/// Reads a trace from its sidecar (`.json`) path.
pub fn read_trace(sidecar_path: &Path) -> CliResult<(Sidecar, Trace)> {
    let text = std::fs::read_to_string(sidecar_path)
        .map_err(|e| CliError::data(format!("cannot read trace {}: {e}", sidecar_path.display())))?;
    let meta: Sidecar = serde_json::from_str(&text).map_err(|e| bad_trace(sidecar_path, e))?;
    if meta.schema != SCHEMA || meta.schema_version != SCHEMA_VERSION {
        return Err(bad_trace(
            sidecar_path,
            format!("unsupported schema {} v{}", meta.schema, meta.schema_version),
        ));
    }
    let payload = sidecar_path.parent().unwrap_or(Path::new(".")).join(&meta.payload);
    let columns: Vec<Vec<f64>> = match meta.format {
        TraceFormat::Binary => read_binary(&payload, &meta)?,
        TraceFormat::Csv => read_csv(&payload, &meta)?,
    };
    let get = |name: &str| -> CliResult<(usize, &Vec<f64>)> {
        let idx = meta
            .columns
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| bad_trace(sidecar_path, format!("missing column {name}")))?;
        Ok((meta.columns[idx].width(), &columns[idx]))
    };
    let slice = |name: &str, d: usize| -> CliResult<Vec<f64>> {
        let (w, v) = get(name)?;
        Ok(v[d * w..(d + 1) * w].to_vec())
    };
    let mut draws = Vec::with_capacity(meta.draws);
    for d in 0..meta.draws {
        draws.push(Draw {
            iteration: slice("iteration", d)?[0] as usize,
            psi: slice("psi", d)?[0],
            mass: slice("M", d)?[0],
            log_evidence: slice("log_evidence", d)?[0],
            alloc: slice("s", d)?.into_iter().map(|v| v as u32).collect(),
            mu: slice("theta_mu", d)?,
            tau: slice("theta_tau", d)?,
            beta: slice("beta", d)?,
            weights: slice("weights", d)?,
        });
    }
    let trace = Trace {
        horizon: meta.horizon,
        units: meta.units,
        components: meta.components,
        covariate_dim: meta.covariate_dim,
        prior: meta.prior.clone(),
        config: meta.mcmc.clone(),
        draws,
        psi_acceptance: meta.psi_acceptance,
        mass_acceptance: meta.mass_acceptance,
        final_psi_proposal_sd: meta.final_psi_proposal_sd,
        provenance: Provenance {
            config_hash: meta.config_hash.clone(),
            seed: meta.seed,
            version: meta.version.clone(),
        },
    };
    Ok((meta, trace))
}

fn read_binary(path: &Path, meta: &Sidecar) -> CliResult<Vec<Vec<f64>>> {
    let bytes = std::fs::read(path).map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(bad_trace(path, "bad magic header"));
    }
    meta.columns
        .iter()
        .map(|c| {
            let size = if c.dtype == DType::U32 { 4 } else { 8 };
            let start = c.offset as usize;
            let end = start + c.len() * size;
            let raw = bytes.get(start..end).ok_or_else(|| bad_trace(path, format!("column {} truncated", c.name)))?;
            Ok(raw
                .chunks_exact(size)
                .map(|b| match c.dtype {
                    DType::U32 => u32::from_le_bytes(b.try_into().expect("4 bytes")) as f64,
                    DType::U64 => u64::from_le_bytes(b.try_into().expect("8 bytes")) as f64,
                    DType::F64 => f64::from_le_bytes(b.try_into().expect("8 bytes")),
                })
                .collect())
        })
        .collect()
}

fn read_csv(path: &Path, meta: &Sidecar) -> CliResult<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
    let mut cols: Vec<Vec<f64>> = meta.columns.iter().map(|c| Vec::with_capacity(c.len())).collect();
    for rec in reader.records() {
        let rec = rec.map_err(|e| bad_trace(path, e))?;
        for (k, c) in meta.columns.iter().enumerate() {
            for i in 0..c.width() {
                let s = rec.get(c.offset as usize + i).ok_or_else(|| bad_trace(path, "short row"))?;
                cols[k].push(s.parse().map_err(|_| bad_trace(path, format!("`{s}` is not a number")))?);
            }
        }
    }
    if cols.iter().zip(&meta.columns).any(|(v, c)| v.len() != c.len()) {
        return Err(bad_trace(path, "row count does not match the sidecar"));
    }
    Ok(cols)
}
