use clap::{Args, Parser, Subcommand};
use lsgauss::harness::{
    fresh_path, run_critical_value, run_diagnostics, run_power_table,
    run_sequential_demo, with_threads, ExperimentConfig, HarnessError,
};
use lsgauss::procgen::simulate_path;
use lsgauss::rates;
use lsgauss::rng;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

/// Locally stationary time-series toolkit: power studies, critical values,
/// diagnostics, and rate calculators.
#[derive(Parser)]
#[command(name = "lsgauss", version, about)]
struct Cli {
    /// Config file (`key = value` lines with [harness] / [procgen] sections).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker thread count (0 = automatic).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output path; existing files are never appended to (a suffixed fresh
    /// path is chosen instead). Defaults to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

/// Overrides shared by the simulation subcommands; unset flags fall back to
/// the config file, then to defaults.
#[derive(Args, Default)]
struct Overrides {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Comma-separated mean shifts.
    #[arg(long)]
    mu_grid: Option<String>,
    /// Comma-separated subset of {plain, studentized}.
    #[arg(long)]
    statistics: Option<String>,
    /// Block-length exponent; accepts decimals or fractions like 2/3.
    #[arg(long)]
    k_n_exponent: Option<String>,
    #[arg(long)]
    c_floor: Option<f64>,
    #[arg(long)]
    cv_reps: Option<usize>,
    #[arg(long)]
    cv_grid_n: Option<usize>,
    /// Critical-value curve: standard | model.
    #[arg(long)]
    cv_curve: Option<String>,
    /// Process model: exp_sine | tv_linear | het_indep.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    phi: Option<f64>,
    #[arg(long)]
    h_coef: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    diag_n: Option<usize>,
    #[arg(long)]
    diag_reps: Option<usize>,
    /// Comma-separated ladder of sample sizes for the coupling diagnostic.
    #[arg(long)]
    ladder: Option<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Monte Carlo power table over the mu grid.
    Power(Overrides),
    /// Critical value of the sup statistic.
    Critval(Overrides),
    /// Autocovariance-decay, coupling, and regularity diagnostics.
    Diagnose(Overrides),
    /// Online monitoring trace for one path.
    Sequential(Overrides),
    /// Rate exponent xi(q, beta), its case, and the block-length exponent.
    Xi {
        #[arg(long)]
        q: f64,
        #[arg(long)]
        beta: f64,
    },
    /// Dump one simulated path as CSV.
    Simulate(Overrides),
}

fn build_config(cli: &Cli, ov: &Overrides) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                HarnessError::Config(format!("cannot read {}: {e}", path.display()))
            })?;
            ExperimentConfig::parse(&text)?
        }
        None => ExperimentConfig::default(),
    };
    let mut apply = |section: &str, key: &str, value: String| -> Result<(), HarnessError> {
        cfg.apply(section, key, &value)
            .map_err(|e| HarnessError::Config(format!("flag --{key}: {e}")))
    };
    macro_rules! over {
        ($section:literal, $key:literal, $field:expr) => {
            if let Some(v) = &$field {
                apply($section, $key, v.to_string())?;
            }
        };
    }
    over!("harness", "n", ov.n);
    over!("harness", "reps", ov.reps);
    over!("harness", "alpha", ov.alpha);
    over!("harness", "mu_grid", ov.mu_grid);
    over!("harness", "statistics", ov.statistics);
    over!("harness", "k_n_exponent", ov.k_n_exponent);
    over!("harness", "c_floor", ov.c_floor);
    over!("harness", "cv_reps", ov.cv_reps);
    over!("harness", "cv_grid_n", ov.cv_grid_n);
    over!("harness", "cv_curve", ov.cv_curve);
    over!("harness", "beta", ov.beta);
    over!("harness", "q", ov.q);
    over!("harness", "diag_n", ov.diag_n);
    over!("harness", "diag_reps", ov.diag_reps);
    over!("harness", "ladder", ov.ladder);
    over!("procgen", "model", ov.model);
    over!("procgen", "phi", ov.phi);
    over!("procgen", "h_coef", ov.h_coef);
    if let Some(seed) = cli.seed {
        apply("harness", "base_seed", seed.to_string())?;
    }
    if let Some(threads) = cli.threads {
        apply("harness", "threads", threads.to_string())?;
    }
    if let Some(out) = &cli.out {
        apply("harness", "output", out.display().to_string())?;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Writes `text` to the configured output path (suffixing if it exists) or
/// stdout.
fn emit(cfg: &ExperimentConfig, text: &str) -> Result<(), HarnessError> {
    match &cfg.output_path {
        Some(path) => {
            let path = fresh_path(path);
            fs::write(&path, text)?;
            eprintln!("wrote {}", path.display());
            Ok(())
        }
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> Result<i32, HarnessError> {
    match &cli.cmd {
        Cmd::Power(ov) => {
            let cfg = build_config(cli, ov)?;
            let report = with_threads(cfg.threads, || run_power_table(&cfg))?;
            let mut buf = Vec::new();
            report.write_csv(&mut buf)?;
            emit(&cfg, &String::from_utf8(buf).expect("ascii csv"))?;
            eprintln!(
                "power table finished in {:.1}s (config digest {:016x})",
                report.wall_secs, report.config_digest
            );
            Ok(0)
        }
        Cmd::Critval(ov) => {
            let cfg = build_config(cli, ov)?;
            let est = with_threads(cfg.threads, || run_critical_value(&cfg))?;
            let mut buf = Vec::new();
            est.write_csv(&mut buf)?;
            emit(&cfg, &String::from_utf8(buf).expect("ascii csv"))?;
            Ok(0)
        }
        Cmd::Diagnose(ov) => {
            let cfg = build_config(cli, ov)?;
            let out = with_threads(cfg.threads, || run_diagnostics(&cfg))?;
            match &cfg.output_path {
                Some(path) => {
                    for (name, text) in [
                        ("decay", &out.decay_csv),
                        ("coupling", &out.coupling_csv),
                        ("regularity", &out.regularity_csv),
                    ] {
                        let mut p = path.clone();
                        let stem = p
                            .file_stem()
                            .map(|s| s.to_string_lossy().into_owned())
                            .unwrap_or_else(|| "diagnostics".into());
                        p.set_file_name(format!("{stem}-{name}.csv"));
                        let p = fresh_path(&p);
                        fs::write(&p, text)?;
                        eprintln!("wrote {}", p.display());
                    }
                }
                None => {
                    print!(
                        "{}\n{}\n{}",
                        out.decay_csv, out.coupling_csv, out.regularity_csv
                    );
                }
            }
            if out.all_pass {
                Ok(0)
            } else {
                eprintln!("diagnostics failed");
                Ok(2)
            }
        }
        Cmd::Sequential(ov) => {
            let cfg = build_config(cli, ov)?;
            let trace = with_threads(cfg.threads, || run_sequential_demo(&cfg))?;
            let mut buf = Vec::new();
            trace.write_csv(&mut buf)?;
            emit(&cfg, &String::from_utf8(buf).expect("ascii csv"))?;
            match trace.first_crossing {
                Some(t) => eprintln!("first crossing at t = {t}"),
                None => eprintln!("no crossing"),
            }
            Ok(0)
        }
        Cmd::Xi { q, beta } => {
            let (case, x, e) = rates::rate_summary(*q, *beta)
                .map_err(|err| HarnessError::Numeric(err.to_string()))?;
            println!("xi({q}, {beta}) = {x:.12}");
            println!("{}", case.label());
            println!("optimal block exponent = {e:.12}");
            Ok(0)
        }
        Cmd::Simulate(ov) => {
            let cfg = build_config(cli, ov)?;
            let mu = cfg.mu_grid.first().copied().unwrap_or(0.0);
            let spec = cfg.spec(mu);
            let path = simulate_path(&spec, cfg.n, rng::derive_seed(cfg.base_seed, 0))
                .map_err(|e| HarnessError::Numeric(e.to_string()))?;
            let d = spec.dim();
            let mut text = String::from("t,u");
            for j in 1..=d {
                text.push_str(&format!(",x_{j}"));
            }
            text.push('\n');
            for t in 1..=cfg.n {
                text.push_str(&format!("{t},{:.16e}", t as f64 / cfg.n as f64));
                for v in path.obs(t) {
                    text.push_str(&format!(",{v:.16e}"));
                }
                text.push('\n');
            }
            emit(&cfg, &text)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
