//! Command-line front end for the multiband delay-estimation toolkit.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use mbdelay::baselines::{self, GridSpec};
use mbdelay::bench::{self, Scenario};
use mbdelay::crb::{self, CrbInputs};
use mbdelay::error::MbError;
use mbdelay::estimator::{mbwde, Variant};
use mbdelay::io::{self, Config};
use mbdelay::model::generate_csi;
use mbdelay::stacking::StackConfig;

#[derive(Parser)]
#[command(name = "mbdelay", version, about = "Multiband CSI delay estimation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate multiband CSI for a configured channel and write it as CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output CSI CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Override the config's RNG seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the SNR (dB); use `inf` for noiseless.
        #[arg(long)]
        snr: Option<f64>,
    },
    /// Estimate path delays from a CSI CSV and write a result CSV.
    Estimate {
        /// CSI CSV produced by `simulate` (or converted via `ingest`).
        input: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the stacking variant (plain|fb|nr|fb-nr).
        #[arg(long)]
        variant: Option<Variant>,
        /// SNR (dB) used to attach a CRB column; omitted = no CRB column.
        #[arg(long)]
        snr: Option<f64>,
    },
    /// Compute per-path CRBs for the configured scenario.
    Crb {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the SNR sweep with a single SNR (dB).
        #[arg(long)]
        snr: Option<f64>,
    },
    /// Run a reference estimator (MUSIC or ESPRIT) on a CSI CSV.
    Baseline {
        /// CSI CSV over a contiguous spectrum.
        input: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        method: BaselineMethod,
        /// Output CSV; prints to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo RMSE benchmark over the configured SNR sweep.
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// Output directory for rmse.csv / errors.csv / plot stub.
        #[arg(long, default_value = "bench_out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long)]
        variant: Option<Variant>,
        /// Override the SNR sweep with a single SNR (dB).
        #[arg(long)]
        snr: Option<f64>,
    },
    /// 2-D position fix from configured anchors and ranges.
    Position {
        #[arg(long)]
        config: PathBuf,
    },
    /// Convert a measured CFR CSV (`freq_hz,re,im[,snapshot]`) to CSI CSV.
    Ingest {
        input: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum BaselineMethod {
    Music,
    Esprit,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                MbError::Numerical(_) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn run(cli: Cli) -> Result<(), MbError> {
    match cli.command {
        Command::Simulate { config, out, seed, snr } => {
            let cfg = Config::load(&config)?;
            let mut scenario = Scenario::from_config(&cfg)?;
            if let Some(s) = seed {
                scenario.seed = s;
            }
            let snr_db = snr.unwrap_or_else(|| scenario.snr_db[0]);
            let csi = generate_csi(
                &scenario.channel,
                &scenario.band_plan,
                scenario.m_snapshots,
                snr_db,
                true,
                scenario.seed,
            )?;
            io::save_csi(&csi, &out)?;
            println!(
                "wrote {} snapshots x {} bands to {}",
                csi.snapshots.len(),
                scenario.band_plan.n_bands(),
                out.display()
            );
            Ok(())
        }
        Command::Estimate { input, config, out, variant, snr } => {
            let cfg = Config::load(&config)?;
            let scenario = Scenario::from_config(&cfg)?;
            let csi = io::load_csi(&input, scenario.band_plan.clone())?;
            let variant = variant.unwrap_or(scenario.variant);
            let stack = StackConfig {
                p_rows: scenario.resolved_p_rows(),
                use_fb: variant.use_fb(),
                use_nr: variant.use_nr(),
            };
            let k = match scenario.k_order {
                bench::KOrderPolicy::Fixed(k) => Some(k),
                bench::KOrderPolicy::Mdl => None,
            };
            let mut est = mbwde(
                &csi,
                &stack,
                k,
                variant,
                scenario.weighted,
                scenario.max_iters,
                scenario.tol,
            )?;
            if let Some(snr_db) = snr {
                let inputs = CrbInputs::from_channel_snr(
                    &scenario.channel,
                    &scenario.band_plan,
                    csi.snapshots.len(),
                    snr_db,
                )?;
                est.crb = Some(crb::crb(&inputs)?.variances);
            }
            std::fs::write(&out, io::estimate_to_csv(&est))?;
            println!(
                "estimated {} paths (converged: {}) -> {}",
                est.delays.len(),
                est.converged,
                out.display()
            );
            Ok(())
        }
        Command::Crb { config, out, snr } => {
            let cfg = Config::load(&config)?;
            let scenario = Scenario::from_config(&cfg)?;
            let snrs = match snr {
                Some(s) => vec![s],
                None => scenario.snr_db.clone(),
            };
            let mut text = String::from("snr_db,path_index,delay_ns,crb_ns,reliable\n");
            for &snr_db in &snrs {
                let inputs = CrbInputs::from_channel_snr(
                    &scenario.channel,
                    &scenario.band_plan,
                    scenario.m_snapshots,
                    snr_db,
                )?;
                let result = crb::crb(&inputs)?;
                for (k, &v) in result.variances.iter().enumerate() {
                    use std::fmt::Write as _;
                    let _ = writeln!(
                        text,
                        "{:e},{},{:e},{:e},{}",
                        snr_db,
                        k,
                        scenario.channel.delays[k] * 1e9,
                        v.max(0.0).sqrt() * 1e9,
                        result.reliable
                    );
                }
            }
            std::fs::write(&out, text)?;
            println!("wrote per-path CRBs to {}", out.display());
            Ok(())
        }
        Command::Baseline { input, config, method, out } => {
            let cfg = Config::load(&config)?;
            let scenario = Scenario::from_config(&cfg)?;
            let csi = io::load_csi(&input, scenario.band_plan.clone())?;
            let k = match scenario.k_order {
                bench::KOrderPolicy::Fixed(k) => k,
                bench::KOrderPolicy::Mdl => scenario.channel.n_paths(),
            };
            let delays = match method {
                BaselineMethod::Music => {
                    let t_min = cfg.get_f64("grid", "t_min_ns")?.unwrap_or(0.0) * 1e-9;
                    let t_max = cfg.get_f64("grid", "t_max_ns")?.unwrap_or(50.0) * 1e-9;
                    let step = cfg.get_f64("grid", "step_ns")?.unwrap_or(0.005) * 1e-9;
                    baselines::music_delays(&csi, k, &GridSpec::new(t_min, t_max, step)?)?
                }
                BaselineMethod::Esprit => baselines::esprit_delays(&csi, k)?,
            };
            let mut text = String::from("path_index,delay_ns,range_m\n");
            for (i, &tau) in delays.iter().enumerate() {
                use std::fmt::Write as _;
                let _ = writeln!(text, "{},{:e},{:e}", i, tau * 1e9, tau * io::SPEED_OF_LIGHT);
            }
            match out {
                Some(p) => {
                    std::fs::write(&p, text)?;
                    println!("wrote {} delays to {}", delays.len(), p.display());
                }
                None => print!("{text}"),
            }
            Ok(())
        }
        Command::Bench { config, out, seed, trials, threads, variant, snr } => {
            let cfg = Config::load(&config)?;
            let mut scenario = Scenario::from_config(&cfg)?;
            if let Some(s) = seed {
                scenario.seed = s;
            }
            if let Some(t) = trials {
                scenario.trials = t;
            }
            if let Some(v) = variant {
                scenario.variant = v;
            }
            if let Some(s) = snr {
                scenario.snr_db = vec![s];
            }
            let result = bench::run_monte_carlo(&scenario, threads)?;
            bench::emit_results(&result, &out)?;
            for row in &result.rows {
                println!(
                    "SNR {:>6.1} dB: RMSE {:.4} ns, CRB {:.4} ns, {} trials ({} diverged)",
                    row.snr_db, row.rmse_ns, row.crb_ns, row.trials, row.diverged
                );
            }
            println!(
                "finished in {:.1} s -> {}",
                result.elapsed_seconds,
                out.display()
            );
            Ok(())
        }
        Command::Position { config } => {
            let cfg = Config::load(&config)?;
            let anchors = parse_points(cfg.require("position", "anchors")?)?;
            let ranges = cfg.require_f64_list("position", "ranges_m")?;
            let p = bench::trilaterate(&anchors, &ranges)?;
            println!("position: {:.6} {:.6}", p[0], p[1]);
            Ok(())
        }
        Command::Ingest { input, config, out } => {
            let cfg = Config::load(&config)?;
            let scenario = Scenario::from_config(&cfg)?;
            let csi = io::load_cfr_dataset(&input, &scenario.band_plan)?;
            io::save_csi(&csi, &out)?;
            println!(
                "ingested {} snapshots x {} bands -> {}",
                csi.snapshots.len(),
                scenario.band_plan.n_bands(),
                out.display()
            );
            Ok(())
        }
    }
}

/// Parse `x y; x y; ...` into 2-D points.
fn parse_points(text: &str) -> Result<Vec<[f64; 2]>, MbError> {
    text.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|pair| {
            let nums = io::parse_f64_list(pair)
                .map_err(|e| MbError::Config(format!("anchors: {e}")))?;
            if nums.len() != 2 {
                return Err(MbError::Config(format!(
                    "anchors: `{pair}` is not an `x y` pair"
                )));
            }
            Ok([nums[0], nums[1]])
        })
        .collect()
}
