use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use mec_offload::baselines::{rescore, Scheme};
use mec_offload::harness::config::{parse_schemes, ConfigFile};
use mec_offload::harness::csv::{emit_csv, emit_solution_csv, emit_summary_csv, emit_timing_csv, fmt_g, SummaryRow};
use mec_offload::harness::trend::{default_suite, trend_check};
use mec_offload::harness::{run_sweep, DEFAULT_REALIZATIONS, FULL_REALIZATIONS};
use mec_offload::model::InterferenceModel;
use mec_offload::scenario::{export_csv, generate};

#[derive(Parser)]
#[command(name = "mec-offload", version, about = "Offloading and resource allocation for multi-server MEC networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one random scenario with each scheme and print a summary.
    Run(Common),
    /// Run the sweep described by a config file and write its CSV.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Also write mean wall time per row to timing_<axis>.csv.
        #[arg(long)]
        timing: bool,
    },
    /// Run the standard trend suite and report each expectation.
    Check(Common),
}

#[derive(Args)]
struct Common {
    /// TOML config file. Missing keys keep their defaults.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    realizations: Option<usize>,
    /// Comma-separated subset of jcorams,local,offload,hoda,hjtora.
    #[arg(long, value_delimiter = ',')]
    schemes: Option<Vec<String>>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Use 100 realizations unless --realizations is given.
    #[arg(long)]
    paper_mode: bool,
    /// Report overheads with inter-cell interference removed.
    #[arg(long)]
    interference_free_scoring: bool,
}

impl Common {
    fn load(&self) -> Result<ConfigFile> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                ConfigFile::parse(&text).with_context(|| format!("in {}", path.display()))?
            }
            None => ConfigFile::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = Some(seed);
        }
        let full = self.paper_mode.then_some(FULL_REALIZATIONS);
        cfg.realizations = self.realizations.or(full).or(cfg.realizations);
        if let Some(s) = &self.schemes {
            cfg.schemes = Some(s.clone());
        }
        if self.interference_free_scoring {
            cfg.interference_free_scoring = Some(true);
        }
        Ok(cfg)
    }
}

fn out_dir(dir: &Option<PathBuf>) -> Result<Option<&Path>> {
    if let Some(d) = dir {
        fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
    }
    Ok(dir.as_deref())
}

fn run(common: &Common) -> Result<bool> {
    let cfg = common.load()?;
    let scn_cfg = cfg.scenario()?;
    let params = cfg.solver()?;
    let schemes = match &cfg.schemes {
        Some(_) => cfg.schemes()?,
        None => Scheme::ALL.to_vec(),
    };
    let scn = generate(&scn_cfg)?;
    let dir = out_dir(&common.out_dir)?;
    println!(
        "scenario: N={} M={} S={} seed={}",
        scn.num_users(),
        scn.num_servers(),
        scn.num_subchannels(),
        scn_cfg.seed
    );
    let mut summary = Vec::new();
    for scheme in schemes {
        let mut sol = scheme.run(&scn, &params)?;
        if cfg.interference_free_scoring.unwrap_or(false) {
            sol = rescore(&scn, &sol, InterferenceModel::Free)?;
        }
        println!(
            "{:<8} offloaders {:>3}/{:<3} overhead {:>10}  iterations {}",
            scheme.name(),
            sol.offloader_count,
            scn.num_users(),
            fmt_g(sol.total_overhead),
            sol.iterations
        );
        if let Some(d) = dir {
            emit_solution_csv(&scn, &sol, &d.join(format!("solution_{}.csv", scheme.name())))?;
        }
        summary.push(SummaryRow {
            scheme,
            seed: scn_cfg.seed,
            users: scn.num_users(),
            servers: scn.num_servers(),
            subchannels: scn.num_subchannels(),
            offload_frac: sol.offloader_fraction(),
            overhead: sol.total_overhead,
            iterations: sol.iterations,
        });
    }
    if let Some(d) = dir {
        emit_summary_csv(&summary, &d.join("summary.csv"))?;
        export_csv(&scn, d)?;
    }
    Ok(true)
}

fn sweep(common: &Common, timing: bool) -> Result<bool> {
    let cfg = common.load()?;
    if common.config.is_none() {
        anyhow::bail!("sweep needs --config with at least `axis` and `values` or `range`");
    }
    let spec = cfg.sweep()?;
    let out = run_sweep(&spec)?;
    let dir = common.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(format!("sweep_{}.csv", spec.axis.name()));
    emit_csv(&out.rows, &path)?;
    if timing {
        emit_timing_csv(&out.rows, &out.wall_seconds, &dir.join(format!("timing_{}.csv", spec.axis.name())))?;
    }
    println!("wrote {} rows to {}", out.rows.len(), path.display());
    Ok(true)
}

fn check(common: &Common) -> Result<bool> {
    let cfg = common.load()?;
    let base = cfg.scenario()?;
    let params = cfg.solver()?;
    let realizations = cfg.realizations.unwrap_or(DEFAULT_REALIZATIONS);
    let dir = out_dir(&common.out_dir)?;
    let mut all = true;
    for (mut spec, expectations) in default_suite(&base, &params, realizations) {
        if let Some(s) = &common.schemes {
            let extra = parse_schemes(s.iter().map(String::as_str))?;
            for k in extra {
                if !spec.schemes.contains(&k) {
                    spec.schemes.push(k);
                }
            }
            spec.schemes.sort();
        }
        spec.interference_free_scoring = cfg.interference_free_scoring.unwrap_or(false);
        let out = run_sweep(&spec)?;
        if let Some(d) = dir {
            emit_csv(&out.rows, &d.join(format!("check_{}.csv", spec.axis.name())))?;
        }
        for c in trend_check(&out.rows, &expectations).checks {
            all &= c.passed;
            println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
    }
    Ok(all)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(c) => run(c),
        Command::Sweep { common, timing } => sweep(common, *timing),
        Command::Check(c) => check(c),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
