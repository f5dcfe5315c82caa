use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use drive_sim::config::{self, SimConfig};
use drive_sim::scenario::ScenarioKind;
use drive_sim::OuterMode;

#[derive(Parser)]
#[command(name = "drive-sim", version, about = "Reactive power set-point adaptation scenarios for an AC drive")]
struct Cli {
    /// Print the annotated configuration reference and exit.
    #[arg(long)]
    print_schema: bool,
    #[command(subcommand)]
    cmd: Option<Cmd>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate one scenario and write trace, metrics and optionally a plot.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        mode: Option<OuterMode>,
        #[arg(long)]
        scenario: Option<ScenarioKind>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        plot: bool,
        /// Hold disturbances between OFO triggers.
        #[arg(long)]
        assumption3: bool,
    },
    /// Write the reactive power capability band over active power.
    Pqmap {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 201)]
        points: usize,
    },
    /// Run the invariant, oracle and convergence checks.
    Verify {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Estimate the inner-loop constants at the scenario's initial operating point.
    Identify {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        scenario: Option<ScenarioKind>,
    },
}

const EXIT_VALIDATION: u8 = 1;
const EXIT_DIVERGED: u8 = 2;
const EXIT_VERIFY: u8 = 3;

fn load(path: &Option<PathBuf>) -> Result<SimConfig, ExitCode> {
    match path {
        Some(p) => config::load_config(p).map_err(|e| {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_VALIDATION)
        }),
        None => Ok(SimConfig::default()),
    }
}

fn revalidate(cfg: &SimConfig) -> Result<(), ExitCode> {
    cfg.validate().map_err(|e| {
        eprintln!("error: invalid configuration: {e}");
        ExitCode::from(EXIT_VALIDATION)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.print_schema {
        print!("{}", config::schema());
        return ExitCode::SUCCESS;
    }
    let Some(cmd) = cli.cmd else {
        eprintln!("error: a subcommand is required (run, pqmap, verify, identify); see --help");
        return ExitCode::from(EXIT_VALIDATION);
    };
    match run(cmd) {
        Ok(c) | Err(c) => c,
    }
}

fn run(cmd: Cmd) -> Result<ExitCode, ExitCode> {
    match cmd {
        Cmd::Run { config, mode, scenario, out, seed, plot, assumption3 } => {
            let mut cfg = load(&config)?;
            if let Some(m) = mode {
                cfg.outer_mode = m;
            }
            if let Some(s) = scenario {
                cfg.scenario.kind = s;
            }
            if let Some(o) = out {
                cfg.output.dir = o;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            cfg.output.plot |= plot;
            cfg.scenario.assumption3 |= assumption3;
            revalidate(&cfg)?;
            let stem = format!("{:?}_{}", cfg.scenario.kind, cfg.outer_mode).to_lowercase();
            let (out, code) = match drive_sim::run_scenario(&cfg) {
                Ok((out, metrics)) => (Some((out, metrics)), ExitCode::SUCCESS),
                Err(drive_sim::SimError::Diverged { tick, source, partial }) => {
                    eprintln!("error: {source} (control tick {tick}); writing partial trace");
                    let m = drive_sim::metrics::compute_metrics(&cfg, &partial, None);
                    (Some((*partial, m)), ExitCode::from(EXIT_DIVERGED))
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    return Err(ExitCode::from(EXIT_VALIDATION));
                }
            };
            let (out, metrics) = out.expect("set above");
            match drive_sim::output::write_outputs(&out.trace, &metrics, &cfg, &stem) {
                Ok(files) => {
                    println!("trace   {}", files.trace.display());
                    println!("metrics {}", files.metrics.display());
                    if let Some(p) = files.plot {
                        println!("plot    {}", p.display());
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    return Err(ExitCode::from(EXIT_VALIDATION));
                }
            }
            print_summary(&metrics);
            Ok(code)
        }
        Cmd::Pqmap { config, out, points } => {
            let mut cfg = load(&config)?;
            if let Some(o) = out {
                cfg.output.dir = o;
            }
            let v = drive_core::DqVector::new(cfg.limits.v_g_nom, 0.0);
            let map =
                drive_sim::pqmap::pq_capability_map(&cfg.limits, &cfg.plant, cfg.v_dc_ref, v, points).map_err(|e| {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_VALIDATION)
                })?;
            let path = cfg.output.dir.join("pqmap.csv");
            std::fs::create_dir_all(&cfg.output.dir)
                .map_err(|e| e.to_string())
                .and_then(|_| drive_sim::output::write_pqmap_csv(&path, &map).map_err(|e| e.to_string()))
                .map_err(|e| {
                    eprintln!("error: {e}");
                    ExitCode::from(EXIT_VALIDATION)
                })?;
            let (lo, hi) = drive_sim::pqmap::band_extent(&map);
            println!("pqmap   {}", path.display());
            println!("capacitive reach {lo:.6e} var, inductive reach {hi:.6e} var");
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Verify { config } => {
            let cfg = load(&config)?;
            let report = drive_sim::verify::verify(&cfg);
            for c in &report {
                println!("{c}");
            }
            if report.iter().all(|c| c.pass) {
                Ok(ExitCode::SUCCESS)
            } else {
                Err(ExitCode::from(EXIT_VERIFY))
            }
        }
        Cmd::Identify { config, scenario } => {
            let mut cfg = load(&config)?;
            if let Some(s) = scenario {
                cfg.scenario.kind = s;
            }
            match drive_sim::convergence::identify(&cfg) {
                Ok(id) => {
                    println!("C1 = {:.6}", id.constants.c1);
                    println!("C2 = {:.6} per control tick", id.constants.c2);
                    println!("C3 = {:.6}", id.constants.c3);
                    println!(
                        "C1*exp(-C2*m) = {:.6}",
                        id.constants.c1 * (-id.constants.c2 * cfg.ticks_per_trigger() as f64).exp()
                    );
                    println!("fit residual {:.3e} over {} samples", id.fit.residual, id.fit.samples);
                    Ok(ExitCode::SUCCESS)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    Err(ExitCode::from(EXIT_VERIFY))
                }
            }
        }
    }
}

fn print_summary(m: &drive_sim::MetricsReport) {
    println!(
        "rows {}  max|m_raw| {:.4}  t(m sat) {:.3} s  max|i|/i_max {:.4}  t(i>max) {:.3} s",
        m.rows, m.max_m_raw_norm, m.time_modulation_saturated, m.max_i_over_limit, m.time_current_above_limit
    );
    println!(
        "v_dc [{:.1}, {:.1}] V  max|w| {:.3}  overspeed {}  trip {:?}  Q rms {:.4e} var",
        m.v_dc_min, m.v_dc_max, m.max_abs_w, m.overspeed, m.trip_time, m.q_tracking_rms
    );
    if let Some(c) = &m.convergence {
        println!(
            "convergence inequality {}/{} worst margin {:.3e}  contraction {:?}  asymptotic bound {:?} tail psi {:.3e}",
            c.theorem1_satisfied,
            c.theorem1_pairs,
            c.theorem1_worst_margin,
            c.measured_contraction,
            c.corollary1_bound,
            c.tail_sup_psi
        );
    }
}
