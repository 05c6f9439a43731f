//! Monte Carlo engine: experiment configuration, the power study, critical
//! value runs, diagnostics orchestration, the sequential-monitoring demo,
//! and CSV persistence. Everything is deterministic in the base seed and
//! independent of the worker thread count.

use crate::gausslim::{critical_value, CovarianceCurve, CurveInput, QuantileEstimate};
use crate::procgen::{
    regularity_report, BetaFit, GeneratorSpec, InnovationLaw, RegularityReport,
};
use crate::rates::{autocov_decay_check, coupling_diagnostic, write_coupling_csv, write_decay_csv};
use crate::rng;
use crate::sumproc::{partial_sum, studentized_process, sup_statistic};
use crate::SymMatrix64;
use rayon::prelude::*;
use std::fmt;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("diagnostic failure: {0}")]
    Diagnostic(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl HarnessError {
    /// Process exit code for the CLI: 1 config, 2 diagnostic, 3 numeric/io.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 1,
            HarnessError::Diagnostic(_) => 2,
            HarnessError::Numeric(_) | HarnessError::Io(_) => 3,
        }
    }
}

fn numeric(e: impl fmt::Display) -> HarnessError {
    HarnessError::Numeric(e.to_string())
}

/// Which test statistics to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatKind {
    Plain,
    Studentized,
}

impl StatKind {
    pub fn label(self) -> &'static str {
        match self {
            StatKind::Plain => "plain",
            StatKind::Studentized => "studentized",
        }
    }
}

/// Process model selected in the config.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    ExpSine,
    TvLinear,
    HetIndep,
}

/// Full experiment configuration with library-wide defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    /// TvLinear coefficient.
    pub phi: f64,
    /// TvLinear truncation order.
    pub h_coef: usize,
    pub n: usize,
    pub reps: usize,
    pub alpha: f64,
    pub k_n_exponent: f64,
    pub c_floor: f64,
    pub mu_grid: Vec<f64>,
    pub statistic_set: Vec<StatKind>,
    pub base_seed: u64,
    pub threads: usize,
    pub cv_reps: usize,
    pub cv_grid_n: usize,
    /// Critical-value target: the Sigma-free standard curve or the model
    /// covariance curve.
    pub cv_standard: bool,
    pub output_path: Option<PathBuf>,
    /// Decay exponent asserted by the autocovariance diagnostic.
    pub beta: f64,
    /// Moment order for regularity reports.
    pub q: f64,
    pub diag_n: usize,
    pub diag_reps: usize,
    pub ladder: Vec<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            model: ModelKind::ExpSine,
            phi: 0.5,
            h_coef: 30,
            n: 10_000,
            reps: 10_000,
            alpha: 0.05,
            k_n_exponent: 2.0 / 3.0,
            c_floor: 0.01,
            mu_grid: vec![0.0],
            statistic_set: vec![StatKind::Plain, StatKind::Studentized],
            base_seed: 1,
            threads: 0,
            cv_reps: 20_000,
            cv_grid_n: 10_000,
            cv_standard: true,
            output_path: None,
            beta: 2.0,
            q: 4.0,
            diag_n: 256,
            diag_reps: 4_000,
            ladder: vec![250, 1_000, 4_000],
        }
    }
}

/// `k_n = floor(n^e)`, evaluated with a small guard against the downward
/// rounding of `powf` at exact powers (e.g. `1000^(2/3)` must give 100).
pub fn block_length(n: usize, exponent: f64) -> usize {
    ((n as f64).powf(exponent) + 1e-9).floor() as usize
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Config(m.to_string()));
        if self.reps < 1 {
            return bad("reps must be at least 1");
        }
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return bad("alpha must lie in (0, 0.5)");
        }
        if self.mu_grid.iter().any(|m| !m.is_finite()) {
            return bad("mu_grid values must be finite");
        }
        if self.statistic_set.is_empty() {
            return bad("statistic_set must not be empty");
        }
        let k_n = self.k_n();
        if k_n < 1 || k_n >= self.n {
            return bad("k_n = floor(n^k_n_exponent) must satisfy 1 <= k_n < n");
        }
        if !(self.c_floor > 0.0) {
            return bad("c_floor must be positive");
        }
        if self.model != ModelKind::ExpSine && self.mu_grid.iter().any(|&m| m != 0.0) {
            return bad("mean shifts are only supported for the exp_sine model");
        }
        Ok(())
    }

    pub fn k_n(&self) -> usize {
        block_length(self.n, self.k_n_exponent)
    }

    /// Generator for a given mean shift.
    pub fn spec(&self, mu: f64) -> GeneratorSpec {
        match self.model {
            ModelKind::ExpSine => GeneratorSpec::exp_sine(mu),
            ModelKind::TvLinear => GeneratorSpec::TvLinear {
                phi: self.phi,
                h_coef: self.h_coef,
                noise: InnovationLaw::StandardGaussian { dim: 1 },
            },
            ModelKind::HetIndep => GeneratorSpec::HeteroskedasticIndep {
                sigma: SymMatrix64::identity(1),
                noise: InnovationLaw::StandardGaussian { dim: 1 },
                c_true: 1.0,
            },
        }
    }

    /// Model covariance curve for critical-value simulation.
    pub fn model_curve(&self) -> Result<CovarianceCurve, HarnessError> {
        let spec = self.spec(0.0);
        CovarianceCurve::sampled(self.cv_grid_n.max(100), |u| {
            crate::procgen::local_lrv(&spec, u).expect("validated spec")
        })
        .map_err(numeric)
    }

    /// FNV-1a digest of the canonical key=value rendering.
    pub fn digest(&self) -> u64 {
        let text = format!("{self:?}");
        let mut h = 0xcbf2_9ce4_8422_2325u64;
        for b in text.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100_0000_01b3);
        }
        h
    }

    /// Parses the `key = value` config format: `#` comments, `[harness]` and
    /// `[procgen]` section headers, unknown keys rejected with line context.
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut cfg = ExperimentConfig::default();
        let mut section = String::from("harness");
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = match raw.find('#') {
                Some(p) => &raw[..p],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                let name = name.trim();
                if name != "harness" && name != "procgen" {
                    return Err(HarnessError::Config(format!(
                        "line {lineno}: unknown section [{name}]"
                    )));
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                HarnessError::Config(format!("line {lineno}: expected key = value"))
            })?;
            let key = key.trim();
            let value = value.trim();
            cfg.apply(&section, key, value).map_err(|e| {
                HarnessError::Config(format!("line {lineno}: key `{key}`: {e}"))
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies one key; shared by the config parser and CLI overrides.
    pub fn apply(&mut self, section: &str, key: &str, value: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(v: &str) -> Result<T, String>
        where
            T::Err: fmt::Display,
        {
            v.parse::<T>().map_err(|e| e.to_string())
        }
        fn fraction(v: &str) -> Result<f64, String> {
            if let Some((a, b)) = v.split_once('/') {
                let a: f64 = num(a.trim())?;
                let b: f64 = num(b.trim())?;
                if b == 0.0 {
                    return Err("zero denominator".to_string());
                }
                Ok(a / b)
            } else {
                num(v)
            }
        }
        fn list<T: std::str::FromStr>(v: &str) -> Result<Vec<T>, String>
        where
            T::Err: fmt::Display,
        {
            v.split(',')
                .map(|p| num::<T>(p.trim()))
                .collect::<Result<_, _>>()
        }
        match (section, key) {
            ("harness", "n") => self.n = num(value)?,
            ("harness", "reps") => self.reps = num(value)?,
            ("harness", "alpha") => self.alpha = num(value)?,
            ("harness", "k_n_exponent") => self.k_n_exponent = fraction(value)?,
            ("harness", "c_floor") => self.c_floor = num(value)?,
            ("harness", "mu_grid") => self.mu_grid = list(value)?,
            ("harness", "statistics") => {
                self.statistic_set = value
                    .split(',')
                    .map(|p| match p.trim() {
                        "plain" => Ok(StatKind::Plain),
                        "studentized" => Ok(StatKind::Studentized),
                        other => Err(format!("unknown statistic `{other}`")),
                    })
                    .collect::<Result<_, _>>()?
            }
            ("harness", "base_seed") => self.base_seed = num(value)?,
            ("harness", "threads") => self.threads = num(value)?,
            ("harness", "cv_reps") => self.cv_reps = num(value)?,
            ("harness", "cv_grid_n") => self.cv_grid_n = num(value)?,
            ("harness", "cv_curve") => {
                self.cv_standard = match value {
                    "standard" => true,
                    "model" => false,
                    other => return Err(format!("unknown curve `{other}`")),
                }
            }
            ("harness", "output") => self.output_path = Some(PathBuf::from(value)),
            ("harness", "beta") => self.beta = num(value)?,
            ("harness", "q") => self.q = num(value)?,
            ("harness", "diag_n") => self.diag_n = num(value)?,
            ("harness", "diag_reps") => self.diag_reps = num(value)?,
            ("harness", "ladder") => self.ladder = list(value)?,
            ("procgen", "model") => {
                self.model = match value {
                    "exp_sine" => ModelKind::ExpSine,
                    "tv_linear" => ModelKind::TvLinear,
                    "het_indep" => ModelKind::HetIndep,
                    other => return Err(format!("unknown model `{other}`")),
                }
            }
            ("procgen", "phi") => self.phi = num(value)?,
            ("procgen", "h_coef") => self.h_coef = num(value)?,
            _ => return Err(format!("unknown key in section [{section}]")),
        }
        Ok(())
    }
}

/// Runs `f` on a dedicated pool with the configured thread count (0 means
/// the rayon default).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    if threads == 0 {
        return f();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool construction")
        .install(f)
}

/// One line of the power table.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerRow {
    pub mu: f64,
    pub kind: StatKind,
    pub power: f64,
    pub reps: usize,
    pub n: usize,
    pub critical_value: f64,
    pub cv_stderr: f64,
    pub binom_stderr: f64,
    pub base_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloReport {
    pub rows: Vec<PowerRow>,
    pub config_digest: u64,
    /// Wall-clock seconds; informational only, excluded from the canonical
    /// CSV so reports stay bit-identical across thread counts.
    pub wall_secs: f64,
}

impl MonteCarloReport {
    /// Canonical CSV at 6 significant digits.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(
            w,
            "mu,statistic,power,reps,n,critical_value,cv_stderr,binom_stderr,base_seed"
        )?;
        for r in &self.rows {
            writeln!(
                w,
                "{:.5e},{},{:.5e},{},{},{:.5e},{:.5e},{:.5e},{}",
                r.mu,
                r.kind.label(),
                r.power,
                r.reps,
                r.n,
                r.critical_value,
                r.cv_stderr,
                r.binom_stderr,
                r.base_seed
            )?;
        }
        Ok(())
    }
}

/// Offset separating the replication streams of distinct mu values.
const MU_STREAM: u64 = 1 << 40;

/// Rejection frequencies of the sup tests over the mu grid.
///
/// Each replication simulates one path and evaluates both statistics on it;
/// critical values are computed once up front (plain: the model covariance
/// curve; studentized: the Sigma-free standard value).
pub fn run_power_table(cfg: &ExperimentConfig) -> Result<MonteCarloReport, HarnessError> {
    cfg.validate()?;
    let start = std::time::Instant::now();
    let k_n = cfg.k_n();

    let need_plain = cfg.statistic_set.contains(&StatKind::Plain);
    let need_student = cfg.statistic_set.contains(&StatKind::Studentized);

    let plain_cv = if need_plain {
        let curve = cfg.model_curve()?;
        Some(
            critical_value(
                &CurveInput::Curve(curve),
                cfg.alpha,
                cfg.cv_reps,
                cfg.cv_grid_n,
                cfg.base_seed,
            )
            .map_err(numeric)?,
        )
    } else {
        None
    };
    let student_cv = if need_student {
        Some(
            critical_value(
                &CurveInput::Standard { dim: 1 },
                cfg.alpha,
                cfg.cv_reps,
                cfg.cv_grid_n,
                // Disjoint from the plain run so the two estimates are
                // independent.
                rng::derive_seed(cfg.base_seed, 0x6376),
            )
            .map_err(numeric)?,
        )
    } else {
        None
    };

    let mut rows = Vec::new();
    for (mu_idx, &mu) in cfg.mu_grid.iter().enumerate() {
        let spec = cfg.spec(mu);
        let stats: Vec<(f64, f64)> = (0..cfg.reps as u64)
            .into_par_iter()
            .map(|r| {
                let seed = rng::derive_seed(cfg.base_seed, mu_idx as u64 * MU_STREAM + r);
                let path = crate::procgen::simulate_path(&spec, cfg.n, seed)
                    .expect("validated spec");
                let t_plain = if need_plain {
                    sup_statistic(&partial_sum(&path))
                } else {
                    0.0
                };
                let t_student = if need_student {
                    sup_statistic(
                        &studentized_process(&path, k_n, cfg.c_floor)
                            .expect("positive floor"),
                    )
                } else {
                    0.0
                };
                (t_plain, t_student)
            })
            .collect();

        for &kind in &cfg.statistic_set {
            let (cv, values): (&QuantileEstimate, Vec<f64>) = match kind {
                StatKind::Plain => (
                    plain_cv.as_ref().expect("computed above"),
                    stats.iter().map(|s| s.0).collect(),
                ),
                StatKind::Studentized => (
                    student_cv.as_ref().expect("computed above"),
                    stats.iter().map(|s| s.1).collect(),
                ),
            };
            let rejections = values.iter().filter(|&&t| t > cv.value).count();
            let power = rejections as f64 / cfg.reps as f64;
            rows.push(PowerRow {
                mu,
                kind,
                power,
                reps: cfg.reps,
                n: cfg.n,
                critical_value: cv.value,
                cv_stderr: cv.stderr,
                binom_stderr: (power * (1.0 - power) / cfg.reps as f64).sqrt(),
                base_seed: cfg.base_seed,
            });
        }
    }
    Ok(MonteCarloReport {
        rows,
        config_digest: cfg.digest(),
        wall_secs: start.elapsed().as_secs_f64(),
    })
}

/// Thin orchestration over `gausslim::critical_value` using config fields.
pub fn run_critical_value(cfg: &ExperimentConfig) -> Result<QuantileEstimate, HarnessError> {
    cfg.validate()?;
    let input = if cfg.cv_standard {
        CurveInput::Standard { dim: 1 }
    } else {
        CurveInput::Curve(cfg.model_curve()?)
    };
    critical_value(&input, cfg.alpha, cfg.cv_reps, cfg.cv_grid_n, cfg.base_seed)
        .map_err(numeric)
}

/// Outputs of the diagnostics run.
#[derive(Debug, Clone)]
pub struct DiagnosticsOutput {
    pub decay_csv: String,
    pub coupling_csv: String,
    pub regularity_csv: String,
    pub all_pass: bool,
}

fn regularity_csv(report: &RegularityReport) -> String {
    let mut out = String::new();
    out.push_str("theta,gamma,beta_fit\n");
    let fit = match report.beta_fit {
        BetaFit::Polynomial(b) => format!("{b:.5e}"),
        BetaFit::SuperPolynomial => "super_polynomial".to_string(),
    };
    out.push_str(&format!(
        "{:.5e},{:.5e},{fit}\n",
        report.theta, report.gamma
    ));
    out.push_str("h,delta,xi_tail\n");
    for (h, (d, x)) in report
        .delta_curve
        .iter()
        .zip(&report.xi_tail)
        .enumerate()
    {
        out.push_str(&format!("{h},{d:.5e},{x:.5e}\n"));
    }
    out
}

/// Runs the three diagnostics and renders their CSV reports; `all_pass`
/// reflects the decay and coupling PASS flags (the regularity report is
/// informational).
pub fn run_diagnostics(cfg: &ExperimentConfig) -> Result<DiagnosticsOutput, HarnessError> {
    cfg.validate()?;
    let spec = cfg.spec(0.0);

    let decay = autocov_decay_check(&spec, cfg.diag_n, cfg.beta, cfg.diag_reps, cfg.base_seed)
        .map_err(numeric)?;
    let coupling = coupling_diagnostic(&spec, &cfg.ladder, cfg.diag_reps, cfg.base_seed)
        .map_err(numeric)?;
    let regularity = regularity_report(&spec, cfg.diag_n, cfg.q, 8).map_err(numeric)?;

    let mut decay_csv = Vec::new();
    write_decay_csv(&decay, &mut decay_csv)?;
    let mut coupling_csv = Vec::new();
    write_coupling_csv(&coupling, &mut coupling_csv)?;

    let all_pass = decay.pass && coupling.iter().all(|r| r.pass);
    Ok(DiagnosticsOutput {
        decay_csv: String::from_utf8(decay_csv).expect("ascii csv"),
        coupling_csv: String::from_utf8(coupling_csv).expect("ascii csv"),
        regularity_csv: regularity_csv(&regularity),
        all_pass,
    })
}

/// One step of the sequential monitoring trace.
#[derive(Debug, Clone, PartialEq)]
pub struct SequentialStep {
    pub t: usize,
    pub u: f64,
    pub norm: f64,
    pub critical_value: f64,
    pub crossed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequentialTrace {
    pub steps: Vec<SequentialStep>,
    pub first_crossing: Option<usize>,
}

impl SequentialTrace {
    /// Raw trace CSV at 17 significant digits.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "t,u,norm,critical_value,crossed")?;
        for s in &self.steps {
            writeln!(
                w,
                "{},{:.16e},{:.16e},{:.16e},{}",
                s.t, s.u, s.norm, s.critical_value, s.crossed
            )?;
        }
        Ok(())
    }
}

/// Monitors one path online: the studentized statistic is compared with the
/// Sigma-free critical value at every step, so rejection can be declared at
/// the first crossing without waiting for the full sample.
pub fn run_sequential_demo(cfg: &ExperimentConfig) -> Result<SequentialTrace, HarnessError> {
    cfg.validate()?;
    if !cfg.statistic_set.contains(&StatKind::Studentized) {
        return Err(HarnessError::Config(
            "sequential monitoring requires the studentized statistic".to_string(),
        ));
    }
    let cv = critical_value(
        &CurveInput::Standard { dim: 1 },
        cfg.alpha,
        cfg.cv_reps,
        cfg.cv_grid_n,
        rng::derive_seed(cfg.base_seed, 0x6376),
    )
    .map_err(numeric)?;

    let mu = cfg.mu_grid.first().copied().unwrap_or(0.0);
    let spec = cfg.spec(mu);
    let path = crate::procgen::simulate_path(&spec, cfg.n, rng::derive_seed(cfg.base_seed, 0))
        .map_err(numeric)?;
    let process = studentized_process(&path, cfg.k_n(), cfg.c_floor).map_err(numeric)?;

    let mut steps = Vec::with_capacity(cfg.n);
    let mut first_crossing = None;
    for t in 1..=cfg.n {
        let norm = process.row_norm(t);
        let crossed = norm > cv.value;
        if crossed && first_crossing.is_none() {
            first_crossing = Some(t);
        }
        steps.push(SequentialStep {
            t,
            u: t as f64 / cfg.n as f64,
            norm,
            critical_value: cv.value,
            crossed,
        });
    }
    Ok(SequentialTrace {
        steps,
        first_crossing,
    })
}

/// Returns a path that does not exist yet: the input itself, or the first
/// available `stem-R.ext` suffix. Never silently appends to existing output.
pub fn fresh_path(path: &Path) -> PathBuf {
    if !path.exists() {
        return path.to_path_buf();
    }
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".to_string());
    let ext = path
        .extension()
        .map(|s| format!(".{}", s.to_string_lossy()))
        .unwrap_or_default();
    let parent = path.parent().map(Path::to_path_buf).unwrap_or_default();
    for k in 1..10_000 {
        let candidate = parent.join(format!("{stem}-{k}{ext}"));
        if !candidate.exists() {
            return candidate;
        }
    }
    parent.join(format!("{stem}-overflow{ext}"))
}
