//! Implementations of the `simulate`, `fit` and `summarize` subcommands.

use crate::config::{Resolved, RunConfig};
use crate::data::{provenance_line, read_dataset, write_scenario, write_text};
use crate::error::{CliError, CliResult};
use crate::trace_io::{read_trace, write_trace, PanelInfo, Sidecar, TraceFormat};
use crate::{What, DEFAULT_OUTPUT_DIR, OUTPUT_DIR_ENV};
use ar1dp::inference::{run_mcmc_with_progress, stable_hash, Trace};
use ar1dp::mixture::Dataset;
use ar1dp::simdata::{generate_scenario, ScenarioOverrides};
use ar1dp::summaries::{
    binder_from_trace, coclustering, default_grid, label_clusters, linspace, posterior_predictive_grid, summarize_scalar,
    ScalarSummary,
};
use rayon::prelude::*;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Output directory: explicit value, then the environment, then the default.
fn output_dir(explicit: Option<PathBuf>) -> PathBuf {
    explicit
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
}

pub fn simulate(
    scenario: u8,
    seed: u64,
    out: Option<PathBuf>,
    units: Option<usize>,
    horizon: Option<usize>,
) -> CliResult<()> {
    let overrides = ScenarioOverrides { units, horizon };
    let sim = generate_scenario(scenario, seed, overrides)?;
    let hash = stable_hash(&(scenario, seed, overrides));
    let path = out.unwrap_or_else(|| output_dir(None).join(format!("scenario{scenario}_seed{seed}.csv")));
    write_scenario(&path, &sim, &hash)?;
    println!("{}", path.display());
    Ok(())
}

pub struct FitArgs {
    pub config: PathBuf,
    pub seed: Option<u64>,
    pub chains: usize,
    pub threads: usize,
    pub trace_format: TraceFormat,
    pub out_dir: Option<PathBuf>,
    pub quiet: bool,
}

/// Per-sweep acceptance record.
struct SweepLog {
    psi_accepted: bool,
    mass_accepted: bool,
    psi_proposal_sd: f64,
}

fn acceptance_csv(hash: &str, log: &[SweepLog]) -> String {
    let mut out = provenance_line(hash);
    out.push_str("iteration,psi_accepted,mass_accepted,psi_rate,mass_rate,psi_proposal_sd\n");
    let (mut psi, mut mass) = (0usize, 0usize);
    for (i, s) in log.iter().enumerate() {
        psi += s.psi_accepted as usize;
        mass += s.mass_accepted as usize;
        let n = (i + 1) as f64;
        let _ = writeln!(
            out,
            "{i},{},{},{},{},{}",
            s.psi_accepted as u8,
            s.mass_accepted as u8,
            psi as f64 / n,
            mass as f64 / n,
            s.psi_proposal_sd
        );
    }
    out
}

pub fn fit(args: &FitArgs) -> CliResult<()> {
    if args.chains == 0 {
        return Err(CliError::config("--chains must be at least 1"));
    }
    let base_dir = args.config.parent().unwrap_or(Path::new("."));
    let run = RunConfig::load(&args.config)?;
    let resolved = run.resolve(base_dir, args.seed)?;
    let data = read_dataset(&resolved.data, &resolved.covariates)?;
    let out_dir = output_dir(args.out_dir.clone().or_else(|| resolved.output_dir.clone()));
    // Reject a sampler configuration before anything is written.
    ar1dp::inference::Sampler::new(&data, &resolved.prior, &resolved.mcmc)?;

    write_text(&out_dir.join("resolved_config.toml"), &resolved.to_toml()?)?;
    let panel = PanelInfo {
        data_path: resolved.data.clone(),
        time_ids: data.time_ids().to_vec(),
        unit_ids: data.unit_ids().to_vec(),
        covariate_names: resolved.covariates.clone(),
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads)
        .build()
        .map_err(|e| CliError::runtime(format!("cannot start thread pool: {e}")))?;
    let results: Vec<CliResult<PathBuf>> = pool.install(|| {
        (0..args.chains)
            .into_par_iter()
            .map(|chain| run_chain(args, &resolved, &data, &panel, &out_dir, chain))
            .collect()
    });
    for r in results {
        let sidecar = r?;
        println!("{}", sidecar.display());
    }
    Ok(())
}

fn run_chain(
    args: &FitArgs,
    resolved: &Resolved,
    data: &Dataset,
    panel: &PanelInfo,
    out_dir: &Path,
    chain: usize,
) -> CliResult<PathBuf> {
    let mut config = resolved.mcmc.clone();
    config.seed = config.seed.wrapping_add(chain as u64);
    let suffix = if args.chains > 1 { format!("_chain{chain}") } else { String::new() };
    let total = config.iterations;
    let step = (total / 10).max(1);
    let mut log = Vec::with_capacity(total);
    let trace: Trace = run_mcmc_with_progress(data, &resolved.prior, &config, |iter, state, info| {
        log.push(SweepLog {
            psi_accepted: info.psi_accepted,
            mass_accepted: info.mass_accepted,
            psi_proposal_sd: info.psi_proposal_sd,
        });
        if !args.quiet && (iter + 1) % step == 0 {
            eprintln!(
                "chain {chain}: {}/{total} sweeps, psi = {:.3}, M = {:.3}",
                iter + 1,
                state.psi,
                state.mass
            );
        }
    })?;
    let hash = &trace.provenance.config_hash;
    write_text(&out_dir.join(format!("acceptance{suffix}.csv")), &acceptance_csv(hash, &log))?;
    write_trace(out_dir, &format!("trace{suffix}"), &trace, args.trace_format, panel)
}

#[derive(Serialize)]
struct PosteriorJson<'a> {
    version: &'a str,
    config_hash: &'a str,
    seed: u64,
    psi: ScalarSummary,
    mass: ScalarSummary,
    psi_acceptance: f64,
    mass_acceptance: f64,
}

pub fn summarize(
    trace_path: &Path,
    what: &[What],
    data_path: Option<PathBuf>,
    out_dir: Option<PathBuf>,
    grid_points: usize,
) -> CliResult<()> {
    let (meta, trace) = read_trace(trace_path)?;
    if trace.is_empty() {
        return Err(CliError::data(format!("trace {} has no draws", trace_path.display())));
    }
    let out_dir = out_dir.unwrap_or_else(|| trace_path.parent().unwrap_or(Path::new(".")).to_path_buf());
    let hash = meta.config_hash.clone();
    let needs_data = what.iter().any(|w| matches!(w, What::Binder | What::Labels | What::Predictive));
    let data = if needs_data {
        let path = data_path.unwrap_or_else(|| meta.data_path.clone());
        let d = read_dataset(&path, &meta.covariate_names)?;
        if d.horizon() != trace.horizon || d.units() != trace.units {
            return Err(CliError::data(format!(
                "{} is {}x{} but the trace is {}x{}",
                path.display(),
                d.horizon(),
                d.units(),
                trace.horizon,
                trace.units
            )));
        }
        Some(d)
    } else {
        None
    };

    for w in what {
        match w {
            What::Coclust => {
                for t in 0..trace.horizon {
                    let cc = coclustering(&trace, t)?;
                    let mut out = provenance_line(&hash);
                    for i in 0..cc.n {
                        let row: Vec<String> = cc.row(i).iter().map(|v| v.to_string()).collect();
                        out.push_str(&row.join(","));
                        out.push('\n');
                    }
                    emit(&out_dir.join(format!("coclust_t{}.csv", t + 1)), &out)?;
                }
            }
            What::Binder | What::Labels => {
                let data = data.as_ref().expect("data loaded");
                binder_outputs(&trace, &meta, data, &hash, &out_dir, *w)?;
            }
            What::Predictive => {
                let data = data.as_ref().expect("data loaded");
                let range = default_grid(data.values())?;
                let grid = linspace(range[0], range[range.len() - 1], grid_points.max(2));
                for t in 0..trace.horizon {
                    let profile = mean_covariates(data, t);
                    let dens = posterior_predictive_grid(&trace, t, &grid, profile.as_deref())?;
                    let mut out = provenance_line(&hash);
                    out.push_str("y,density\n");
                    for (y, f) in dens.grid.iter().zip(&dens.values) {
                        let _ = writeln!(out, "{y},{f}");
                    }
                    emit(&out_dir.join(format!("predictive_t{}.csv", t + 1)), &out)?;
                }
            }
            What::PsiPosterior => {
                let post = PosteriorJson {
                    version: &meta.version,
                    config_hash: &hash,
                    seed: meta.seed,
                    psi: summarize_scalar(&trace.psi())?,
                    mass: summarize_scalar(&trace.mass())?,
                    psi_acceptance: trace.psi_acceptance,
                    mass_acceptance: trace.mass_acceptance,
                };
                let json = serde_json::to_string_pretty(&post)
                    .map_err(|e| CliError::runtime(format!("cannot serialise summary: {e}")))?;
                emit(&out_dir.join("posterior.json"), &(json + "\n"))?;
            }
        }
    }
    Ok(())
}

fn emit(path: &Path, text: &str) -> CliResult<()> {
    write_text(path, text)?;
    println!("{}", path.display());
    Ok(())
}

/// Average covariate vector at time `t`, used to place the predictive density.
fn mean_covariates(data: &Dataset, t: usize) -> Option<Vec<f64>> {
    let p = data.covariate_dim();
    if p == 0 {
        return None;
    }
    let mut mean = vec![0.0; p];
    for j in 0..data.units() {
        for (m, x) in mean.iter_mut().zip(data.x(t, j)?) {
            *m += x / data.units() as f64;
        }
    }
    Some(mean)
}

fn binder_outputs(
    trace: &Trace,
    meta: &Sidecar,
    data: &Dataset,
    hash: &str,
    out_dir: &Path,
    what: What,
) -> CliResult<()> {
    let mut binder = provenance_line(hash);
    binder.push_str("time,unit,cluster,label\n");
    let mut labels = provenance_line(hash);
    labels.push_str("# mean and sd are on the scale of the value column\n");
    labels.push_str("time,cluster,size,mean,sd,label\n");
    for t in 0..trace.horizon {
        let (partition, _) = binder_from_trace(trace, t)?;
        let summaries = label_clusters(data, &partition, t)?;
        let time = &meta.time_ids[t];
        for (j, &block) in partition.labels().iter().enumerate() {
            let label = summaries[block].label.as_str();
            let _ = writeln!(binder, "{time},{},{},{label}", meta.unit_ids[j], block + 1);
        }
        for s in &summaries {
            let _ = writeln!(
                labels,
                "{time},{},{},{},{},{}",
                s.cluster + 1,
                s.size,
                s.mean,
                s.sd,
                s.label.as_str()
            );
        }
    }
    match what {
        What::Binder => emit(&out_dir.join("binder.csv"), &binder),
        _ => emit(&out_dir.join("labels.csv"), &labels),
    }
}
