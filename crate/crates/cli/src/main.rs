use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use bosepolaron::assembly::{build_h0f, build_hf_a, build_hf_b, build_hn, build_hn_pref, build_nplus};
use bosepolaron::basis::{excitation_sector, nbody_sector};
use bosepolaron::harness::{
    audit_inequalities, fit_level, run_convergence_sweep_with, run_cutoff_sweep, write_cutoff_csv,
    write_records_csv, write_report_json, SweepOptions,
};
use bosepolaron::model::{load_config, ExperimentConfig};

#[derive(Parser)]
#[command(name = "bosepolaron", version, about = "Impurity in a mean-field Bose gas: N-body vs Fröhlich spectra")]
struct Cli {
    /// Experiment configuration (JSON); the built-in reference model if omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the configured RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for assembly and matvec.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convergence sweep over the configured N values.
    Sweep {
        /// Record wall-clock time per N (makes the CSV non-reproducible).
        #[arg(long)]
        record_timing: bool,
    },
    /// Inequality audit on the configured sweep.
    Audit,
    /// Both Fröhlich representations at several excitation caps.
    CutoffSweep {
        #[arg(long, value_delimiter = ',', default_values_t = vec![6, 8, 10, 12])]
        caps: Vec<usize>,
    },
    /// Writes a sector basis, one state per line.
    DumpBasis {
        #[arg(long, value_enum, default_value_t = SectorKind::Nbody)]
        kind: SectorKind,
        /// Particle number (n-body) or excitation cap (excitation).
        #[arg(long)]
        n: Option<usize>,
    },
    /// Writes an operator as sorted `row col value` lines.
    DumpOperator {
        #[arg(long, value_enum)]
        op: OperatorKind,
        /// Particle number for n-body operators, cap for excitation ones.
        #[arg(long)]
        n: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SectorKind {
    Nbody,
    Excitation,
}

#[derive(Clone, Copy, ValueEnum)]
enum OperatorKind {
    Hn,
    HnPref,
    HfA,
    HfB,
    H0f,
    Nplus,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let mut cfg = match &cli.config {
        Some(p) => load_config(p)?,
        None => ExperimentConfig::reference(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    match cli.command {
        Command::Sweep { record_timing } => sweep(&cfg, &cli.out, record_timing),
        Command::Audit => audit(&cfg, &cli.out),
        Command::CutoffSweep { caps } => {
            let recs = run_cutoff_sweep(&cfg, &caps)?;
            let path = cli.out.join("cutoff.csv");
            write_cutoff_csv(&path, &recs)?;
            for r in recs.iter().filter(|r| r.level == 0) {
                println!("mexc={:>3} dim={:>6} |e0(HF_a) - e0(HF_b)| = {:.3e}", r.mexc, r.dim, r.abs_diff);
            }
            println!("wrote {}", path.display());
            Ok(())
        }
        Command::DumpBasis { kind, n } => {
            let (sector, name) = match kind {
                SectorKind::Nbody => (nbody_sector(&cfg.params_for(n.unwrap_or(cfg.params.n_particles)))?, "basis_nbody.txt"),
                SectorKind::Excitation => {
                    let cap = n.unwrap_or(cfg.params.excitation_cutoff);
                    (excitation_sector(&cfg.params.with_excitation_cutoff(cap), cap)?, "basis_excitation.txt")
                }
            };
            let path = cli.out.join(name);
            sector.write_dump(BufWriter::new(create(&path)?))?;
            println!("{} states -> {}", sector.len(), path.display());
            Ok(())
        }
        Command::DumpOperator { op, n } => dump_operator(&cfg, &cli.out, op, n),
    }
}

fn create(path: &Path) -> Result<File> {
    File::create(path).with_context(|| format!("creating {}", path.display()))
}

fn sweep(cfg: &ExperimentConfig, out: &Path, record_timing: bool) -> Result<()> {
    let opts = SweepOptions {
        record_timing,
        ..SweepOptions::default()
    };
    let recs = run_convergence_sweep_with(cfg, &opts)?;
    let path = out.join("sweep.csv");
    write_records_csv(&path, &recs)?;
    for r in &recs {
        println!(
            "N={:>3} level={} delta={:.4e} overlap={:.6} <N+>={:.4}{}",
            r.n,
            r.level,
            r.delta,
            r.overlap,
            r.nplus,
            if r.converged { "" } else { "  (unconverged)" }
        );
    }
    for level in 0..cfg.params.solver.k {
        match fit_level(&recs, level) {
            Ok(f) => println!("level {level}: delta ~ {:.3e} N^{:.4} (r^2 = {:.4})", f.amplitude, f.exponent, f.r_squared),
            Err(e) => println!("level {level}: no fit ({e})"),
        }
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn audit(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let report = audit_inequalities(cfg)?;
    let path = out.join("audit.json");
    write_report_json(&path, &report)?;
    for c in report.failures() {
        println!("FAIL {} (N={:?}): lhs={:.6e} rhs={:.6e} margin={:.3e}", c.name, c.n, c.lhs, c.rhs, c.margin);
    }
    println!(
        "shape fit: alpha={:.4e} beta={:.4e} max relative residual {:.3} ({})",
        report.shape.alpha,
        report.shape.beta,
        report.shape.max_relative_residual,
        if report.shape.pass { "ok" } else { "above tolerance" }
    );
    for t in &report.trends {
        println!("trend {}: {}", t.name, if t.pass { "ok" } else { "growing" });
    }
    println!(
        "{} checks, {} failed; wrote {}",
        report.checks.len(),
        report.failures().count(),
        path.display()
    );
    if !report.pass {
        bail!("audit failed");
    }
    Ok(())
}

fn dump_operator(cfg: &ExperimentConfig, out: &Path, op: OperatorKind, n: Option<usize>) -> Result<()> {
    let spec = &cfg.potential;
    let matrix = match op {
        OperatorKind::Hn | OperatorKind::HnPref | OperatorKind::Nplus => {
            let params = cfg.params_for(n.unwrap_or(cfg.params.n_particles));
            let sector = nbody_sector(&params)?;
            match op {
                OperatorKind::Hn => build_hn(&sector, spec, &params)?,
                OperatorKind::HnPref => build_hn_pref(&sector, spec, &params)?,
                _ => build_nplus(&sector),
            }
        }
        OperatorKind::HfA | OperatorKind::HfB | OperatorKind::H0f => {
            let cap = n.unwrap_or(cfg.params.excitation_cutoff);
            let params = cfg.params.with_excitation_cutoff(cap);
            let sector = excitation_sector(&params, cap)?;
            match op {
                OperatorKind::HfA => build_hf_a(&sector, spec, &params)?,
                OperatorKind::HfB => build_hf_b(&sector, spec, &params)?,
                _ => build_h0f(&sector, spec, &params)?,
            }
        }
    };
    let path = out.join("operator.txt");
    matrix.write_dump(BufWriter::new(create(&path)?))?;
    println!("{} x {} with {} entries -> {}", matrix.dim(), matrix.dim(), matrix.nnz(), path.display());
    Ok(())
}
