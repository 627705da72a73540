use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use fdbackhaul::capacity::{sweep, SweepConfig};
use fdbackhaul::config::{SchedulerVariant, SimConfig};
use fdbackhaul::power::{oracle_grid, optimal_rates, solve_sp, LinkParams, PowerProblem, SolveOptions};
use fdbackhaul::radio::{sinr_table_csv, TransmissionMode, SPECTRAL_EFFICIENCY_CAP};
use fdbackhaul::sim::{self, drop_channel};
use fdbackhaul::units::{db_to_linear, dbm_to_watts, watts_to_dbm};

#[derive(Parser)]
#[command(name = "fdbackhaul", version, about = "Full-duplex self-backhauled small cell simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bufferless HD vs FD spectral-efficiency sweep.
    SweepCapacity {
        #[arg(long, default_value = "fig3")]
        preset: String,
        /// CSV output; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve one two-link power allocation problem.
    PowerOpt {
        /// fdd, fdu, fdb or fda
        #[arg(long)]
        mode: String,
        /// Serving gains of link 1 and link 2, dB.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        signal_db: Vec<f64>,
        /// Coupling from the other transmitter at each receiver, dB.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        cross_db: Vec<f64>,
        /// Receiver noise powers, dBm.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        noise_dbm: Vec<f64>,
        /// Maximum transmit powers, dBm.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        pmax_dbm: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [1.0, 1.0])]
        weights: Vec<f64>,
        /// Optimize the rate capped at the peak spectral efficiency.
        #[arg(long)]
        capped: bool,
        /// Also run the grid oracle with this many points per axis.
        #[arg(long)]
        oracle: Option<usize>,
        /// Write the iterate trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Monte Carlo run over all drops and backhaul bins of a config.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Variants to run (comma separated); defaults to the config's.
        #[arg(long, value_delimiter = ',')]
        variant: Vec<SchedulerVariant>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write the channel of one drop as CSV.
    DumpChannel {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        drop: usize,
        /// Also print every schedule's SINR at maximum power.
        #[arg(long)]
        sinr: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the default configuration.
    DefaultConfig,
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<SimConfig> {
    match path {
        Some(p) => SimConfig::from_path(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(SimConfig::default()),
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or("none".into(), |v| format!("{v:.3} dB"))
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::SweepCapacity { preset, out } => {
            let Some(cfg) = SweepConfig::preset(&preset) else { bail!("unknown preset {preset:?} (fig3, fig4)") };
            let table = sweep(&cfg);
            emit(out.as_deref(), &table.to_csv())?;
            let c = &table.crossovers;
            eprintln!(
                "crossover below HD: fd1 {}, fd2 cases {} / {} / {}",
                fmt_opt(c.fd1),
                fmt_opt(c.fd2[0]),
                fmt_opt(c.fd2[1]),
                fmt_opt(c.fd2[2])
            );
        }
        Command::PowerOpt { mode, signal_db, cross_db, noise_dbm, pmax_dbm, weights, capped, oracle, trace } => {
            let mode = match mode.to_ascii_lowercase().as_str() {
                "fdd" => TransmissionMode::Fdd { dl: 0 },
                "fdu" => TransmissionMode::Fdu { ul: 0 },
                "fdb" => TransmissionMode::Fdb,
                "fda" => TransmissionMode::Fda { ul: 0, dl: 1 },
                other => bail!("unknown FD mode {other:?}"),
            };
            for (name, v) in [("signal-db", &signal_db), ("cross-db", &cross_db), ("noise-dbm", &noise_dbm), ("pmax-dbm", &pmax_dbm), ("weights", &weights)] {
                if v.len() != 2 {
                    bail!("--{name} takes two comma-separated values, got {}", v.len());
                }
            }
            let links = [0, 1].map(|i| LinkParams {
                signal_gain: db_to_linear(signal_db[i]),
                cross_gain: db_to_linear(cross_db[i]),
                noise: dbm_to_watts(noise_dbm[i]),
                weight: weights[i],
                max_power: dbm_to_watts(pmax_dbm[i]),
            });
            let problem = PowerProblem::new(mode, links, capped.then_some(SPECTRAL_EFFICIENCY_CAP))?;
            let t0 = std::time::Instant::now();
            let sol = solve_sp(&problem, &SolveOptions::default());
            let elapsed = t0.elapsed();
            let rates = optimal_rates(&problem, &sol);
            println!("mode {mode}");
            for (i, l) in mode.links().iter().enumerate() {
                println!(
                    "  {l}: p = {:.4e} W ({:.2} dBm), SINR {:.2} dB, SE {:.4} b/s/Hz",
                    sol.p[i],
                    watts_to_dbm(sol.p[i]),
                    10.0 * rates[i].sinr.log10(),
                    rates[i].spectral_efficiency
                );
            }
            println!(
                "objective {:.6} b/s/Hz, {} iterations, converged {}, {:.1} us",
                sol.objective,
                sol.iterations,
                sol.converged,
                elapsed.as_secs_f64() * 1e6
            );
            if let Some(n) = oracle {
                let o = oracle_grid(&problem, n);
                println!(
                    "oracle {:.6} at ({:.4e}, {:.4e}) W, {} tied points; ratio {:.5}",
                    o.best.objective,
                    o.best.p[0],
                    o.best.p[1],
                    o.ties.len(),
                    sol.objective / o.best.objective
                );
            }
            if let Some(path) = trace {
                let mut s = String::from("iteration,p1_w,p2_w,objective\n");
                for (i, t) in sol.trace.iter().enumerate() {
                    s.push_str(&format!("{i},{:.6e},{:.6e},{:.9}\n", t.p[0], t.p[1], t.objective));
                }
                emit(Some(&path), &s)?;
            }
        }
        Command::Run { config, variant, out, seed } => {
            let mut cfg = load_config(config.as_deref())?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            cfg.validate()?;
            let variants = if variant.is_empty() { vec![cfg.run.variant] } else { variant };
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            let result = sim::run(&cfg, &variants)?;
            let rep = sim::report(&result.metrics)?;
            fs::write(out.join("throughput.csv"), &rep.throughput_csv)?;
            fs::write(out.join("mode_usage.csv"), &rep.mode_usage_csv)?;
            fs::write(out.join("queues.csv"), &rep.queues_csv)?;
            let mut decisions = String::new();
            for (i, (v, csv)) in result.decisions_csv.iter().enumerate() {
                // One header, variant as a leading column.
                for (j, line) in csv.lines().enumerate() {
                    if j == 0 {
                        if i == 0 {
                            decisions.push_str("variant,");
                            decisions.push_str(line);
                            decisions.push('\n');
                        }
                        continue;
                    }
                    decisions.push_str(&format!("{v},{line}\n"));
                }
            }
            fs::write(out.join("decisions.csv"), decisions)?;
            print!("{}", rep.throughput_csv);
        }
        Command::DumpChannel { config, drop, sinr, out } => {
            let cfg = load_config(config.as_deref())?;
            let placement = cfg.placements()[0];
            let ch = drop_channel(&cfg, placement, drop)?;
            let mut text = ch.to_csv();
            if sinr {
                text.push('\n');
                text.push_str(&sinr_table_csv(&ch));
            }
            emit(out.as_deref(), &text)?;
        }
        Command::DefaultConfig => print!("{}", SimConfig::default().to_toml_string()),
    }
    Ok(())
}
