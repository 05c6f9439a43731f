//! Gaussian comparison objects: independent Gaussian sums with prescribed
//! covariances, Euler discretizations of the limit integral, and Monte Carlo
//! critical values of sup-norm functionals, with the d = 1 reflection-series
//! CDF as an analytic oracle.

use crate::matkit::{psd_sqrt, MatError};
use crate::rng;
use crate::sumproc::PartialSumProcess;
use crate::SymMatrix64;
use rayon::prelude::*;
use std::io::{self, Write};
use thiserror::Error;

/// RNG tag for Gaussian path increments; shared by every simulated path so
/// that two curves evaluated under the same seed see the same noise.
const TAG_INCREMENT: u64 = 0x6761_7573;

#[derive(Debug, Error)]
pub enum GaussError {
    #[error("bad arguments: {0}")]
    BadArgs(&'static str),
    #[error(transparent)]
    Mat(#[from] MatError),
}

/// Piecewise-constant-left covariance curve on [0, 1]: the value at `u` is
/// the matrix at the largest grid point not exceeding `u`.
#[derive(Debug, Clone)]
pub struct CovarianceCurve {
    grid: Vec<f64>,
    matrices: Vec<SymMatrix64>,
}

impl CovarianceCurve {
    pub fn new(grid: Vec<f64>, matrices: Vec<SymMatrix64>) -> Result<Self, GaussError> {
        if grid.is_empty() || grid.len() != matrices.len() {
            return Err(GaussError::BadArgs(
                "grid and matrices must be nonempty and equal-length",
            ));
        }
        if grid[0] != 0.0 {
            return Err(GaussError::BadArgs("grid must start at 0 to cover [0, 1]"));
        }
        if grid.windows(2).any(|w| !(w[0] < w[1])) || *grid.last().unwrap() > 1.0 {
            return Err(GaussError::BadArgs("grid must be strictly increasing in [0, 1]"));
        }
        let d = matrices[0].dim();
        if matrices.iter().any(|m| m.dim() != d) {
            return Err(GaussError::BadArgs("matrices must share one dimension"));
        }
        // PSD check up front so later square roots cannot fail mid-run.
        for m in &matrices {
            psd_sqrt(m)?;
        }
        Ok(CovarianceCurve { grid, matrices })
    }

    /// Constant curve `Sigma(u) = m`.
    pub fn constant(m: SymMatrix64) -> Result<Self, GaussError> {
        CovarianceCurve::new(vec![0.0], vec![m])
    }

    /// Samples `f` at `j / points` for `j = 0..points`.
    pub fn sampled(
        points: usize,
        f: impl Fn(f64) -> SymMatrix64,
    ) -> Result<Self, GaussError> {
        if points == 0 {
            return Err(GaussError::BadArgs("need at least one sample point"));
        }
        let grid: Vec<f64> = (0..points).map(|j| j as f64 / points as f64).collect();
        let matrices = grid.iter().map(|&u| f(u)).collect();
        CovarianceCurve::new(grid, matrices)
    }

    pub fn dim(&self) -> usize {
        self.matrices[0].dim()
    }

    /// Value at `u` (piecewise-constant-left).
    pub fn at(&self, u: f64) -> &SymMatrix64 {
        let idx = self.grid.partition_point(|&g| g <= u);
        &self.matrices[idx.saturating_sub(1).min(self.matrices.len() - 1)]
    }
}

/// Estimated upper quantile of a sup-norm functional.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileEstimate {
    pub alpha: f64,
    pub value: f64,
    pub reps: usize,
    pub grid_n: usize,
    pub stderr: f64,
    pub seed: u64,
}

impl QuantileEstimate {
    /// CSV export: one header row and one data row.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "alpha,value,stderr,reps,grid_n,seed")?;
        writeln!(
            w,
            "{},{:.5e},{:.5e},{},{},{}",
            self.alpha, self.value, self.stderr, self.reps, self.grid_n, self.seed
        )
    }
}

/// Partial sum of independent `N(0, Sigma_t)` vectors:
/// row `k` is `n^{-1/2} sum_{t <= k} Sigma_t^{1/2} Z_t`.
pub fn gaussian_sum_path(
    curve_t: &[SymMatrix64],
    seed: u64,
) -> Result<PartialSumProcess, GaussError> {
    if curve_t.is_empty() {
        return Err(GaussError::BadArgs("need at least one covariance"));
    }
    let n = curve_t.len();
    let d = curve_t[0].dim();
    if curve_t.iter().any(|m| m.dim() != d) {
        return Err(GaussError::BadArgs("covariances must share one dimension"));
    }
    let scale = 1.0 / (n as f64).sqrt();
    let mut out = PartialSumProcess::zeroed(n, d, 1);

    if d == 1 {
        let mut acc = 0.0f64;
        for t in 1..=n {
            let v = curve_t[t - 1].get(0, 0);
            if v < 0.0 {
                return Err(GaussError::Mat(MatError::NotPsd));
            }
            let z = rng::std_normal(seed, TAG_INCREMENT, t as i64, 0);
            acc += scale * v.sqrt() * z;
            out.row_mut(t)[0] = acc;
        }
        return Ok(out);
    }

    let mut acc = vec![0.0f64; d];
    let mut z = vec![0.0f64; d];
    let mut prev: Option<(&SymMatrix64, SymMatrix64)> = None;
    for t in 1..=n {
        // Reuse the square root across runs of identical covariances (the
        // common case when the curve is a step function in t).
        let root = match &prev {
            Some((m, r)) if *m == &curve_t[t - 1] => r.clone(),
            _ => {
                let r = psd_sqrt(&curve_t[t - 1])?;
                prev = Some((&curve_t[t - 1], r.clone()));
                r
            }
        };
        for (j, zj) in z.iter_mut().enumerate() {
            *zj = rng::std_normal(seed, TAG_INCREMENT, t as i64, j as u64);
        }
        let inc = root.apply(&z).expect("matching dimensions");
        for j in 0..d {
            acc[j] += scale * inc[j];
        }
        out.row_mut(t).copy_from_slice(&acc);
    }
    Ok(out)
}

/// Euler discretization of `int_0^u Sigma_v^{1/2} dW_v` on `grid_n` steps:
/// increment `k` is `Sigma(k / grid_n)^{1/2} sqrt(dt) Z_k`, which makes the
/// path identical in construction to `gaussian_sum_path` with the curve
/// sampled at `t / n`.
pub fn limit_process_path(
    curve: &CovarianceCurve,
    grid_n: usize,
    seed: u64,
) -> Result<PartialSumProcess, GaussError> {
    if grid_n < 100 {
        return Err(GaussError::BadArgs("grid_n must be at least 100"));
    }
    let sampled: Vec<SymMatrix64> = (1..=grid_n)
        .map(|k| curve.at(k as f64 / grid_n as f64).clone())
        .collect();
    gaussian_sum_path(&sampled, seed)
}

/// `P(sup_{[0,1]} |W| <= x)` via the reflection-principle series
/// `(4/pi) sum_k (-1)^k / (2k+1) exp(-pi^2 (2k+1)^2 / (8 x^2))`,
/// truncated when terms fall below 1e-14.
pub fn sup_abs_bm_cdf(x: f64) -> Result<f64, GaussError> {
    if !(x > 0.0) {
        return Err(GaussError::BadArgs("barrier must be positive"));
    }
    let mut acc = 0.0f64;
    let c = std::f64::consts::PI * std::f64::consts::PI / (8.0 * x * x);
    for k in 0..10_000u64 {
        let odd = (2 * k + 1) as f64;
        let term = (if k % 2 == 0 { 1.0 } else { -1.0 }) / odd * (-c * odd * odd).exp();
        acc += term;
        if term.abs() < 1e-14 {
            break;
        }
    }
    Ok((4.0 / std::f64::consts::PI) * acc)
}

/// Inverts `sup_abs_bm_cdf` by bisection; analytic oracle for the d = 1
/// critical value.
pub fn sup_abs_bm_quantile(p: f64) -> Result<f64, GaussError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(GaussError::BadArgs("probability must lie in (0, 1)"));
    }
    let (mut lo, mut hi) = (1e-3, 50.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sup_abs_bm_cdf(mid)? < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Covariance input for critical-value simulation.
#[derive(Debug, Clone)]
pub enum CurveInput {
    /// `Sigma(u) = I_d`: the standard Brownian case with the Sigma-free
    /// critical value.
    Standard { dim: usize },
    Curve(CovarianceCurve),
}

impl CurveInput {
    fn dim(&self) -> usize {
        match self {
            CurveInput::Standard { dim } => *dim,
            CurveInput::Curve(c) => c.dim(),
        }
    }
}

/// Monte Carlo `(1 - alpha)`-quantile of the sup statistic of the limit
/// process: the order statistic at `ceil((1 - alpha) reps)` without
/// interpolation, with a 200-resample bootstrap standard error.
///
/// Replication `r` draws its path from the derived seed
/// `derive_seed(seed, STREAM_CRITVAL + r)`, so the estimate is deterministic
/// in `seed` and independent of thread count.
pub fn critical_value(
    input: &CurveInput,
    alpha: f64,
    reps: usize,
    grid_n: usize,
    seed: u64,
) -> Result<QuantileEstimate, GaussError> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(GaussError::BadArgs("alpha must lie in (0, 0.5)"));
    }
    if reps < 1_000 {
        return Err(GaussError::BadArgs("need at least 1000 replications"));
    }
    if grid_n < 100 {
        return Err(GaussError::BadArgs("grid_n must be at least 100"));
    }
    let d = input.dim();
    if d == 0 {
        return Err(GaussError::BadArgs("dimension must be positive"));
    }

    // Per-step standard deviations (d = 1) or square roots (d > 1),
    // precomputed once and shared across replications.
    let scalar_sd: Option<Vec<f64>> = if d == 1 {
        Some(match input {
            CurveInput::Standard { .. } => vec![1.0; grid_n],
            CurveInput::Curve(c) => (1..=grid_n)
                .map(|k| c.at(k as f64 / grid_n as f64).get(0, 0).max(0.0).sqrt())
                .collect(),
        })
    } else {
        None
    };
    let roots: Option<Vec<SymMatrix64>> = if d == 1 {
        None
    } else {
        let mats: Vec<SymMatrix64> = match input {
            CurveInput::Standard { dim } => {
                vec![SymMatrix64::identity(*dim); grid_n]
            }
            CurveInput::Curve(c) => (1..=grid_n)
                .map(|k| c.at(k as f64 / grid_n as f64).clone())
                .collect(),
        };
        let mut out = Vec::with_capacity(grid_n);
        for m in &mats {
            out.push(psd_sqrt(m)?);
        }
        Some(out)
    };

    let scale = 1.0 / (grid_n as f64).sqrt();
    let mut sups: Vec<f64> = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let rep_seed = rng::derive_seed(seed, rng::STREAM_CRITVAL + r);
            if let Some(sd) = &scalar_sd {
                let mut acc = 0.0f64;
                let mut sup = 0.0f64;
                for (t, s) in sd.iter().enumerate() {
                    let z = rng::std_normal(rep_seed, TAG_INCREMENT, (t + 1) as i64, 0);
                    acc += scale * s * z;
                    sup = sup.max(acc.abs());
                }
                sup
            } else {
                let roots = roots.as_ref().expect("d > 1 path");
                let mut acc = vec![0.0f64; d];
                let mut z = vec![0.0f64; d];
                let mut sup = 0.0f64;
                for (t, root) in roots.iter().enumerate() {
                    for (j, zj) in z.iter_mut().enumerate() {
                        *zj = rng::std_normal(
                            rep_seed,
                            TAG_INCREMENT,
                            (t + 1) as i64,
                            j as u64,
                        );
                    }
                    let inc = root.apply(&z).expect("matching dimensions");
                    let mut norm2 = 0.0;
                    for j in 0..d {
                        acc[j] += scale * inc[j];
                        norm2 += acc[j] * acc[j];
                    }
                    sup = sup.max(norm2.sqrt());
                }
                sup
            }
        })
        .collect();
    sups.sort_by(|a, b| a.partial_cmp(b).expect("finite sup statistics"));

    let order = ((1.0 - alpha) * reps as f64).ceil() as usize;
    let order = order.clamp(1, reps);
    let value = sups[order - 1];

    // Bootstrap standard error of the order statistic.
    let boots = 200usize;
    let mut qs = Vec::with_capacity(boots);
    let mut resample = vec![0.0f64; reps];
    for b in 0..boots as u64 {
        let bseed = rng::derive_seed(seed, rng::STREAM_BOOT + b);
        for (i, slot) in resample.iter_mut().enumerate() {
            let u = rng::u01(bseed, 1, i as i64, 0);
            *slot = sups[(u * reps as f64) as usize % reps];
        }
        let (_, q, _) = resample.select_nth_unstable_by(order - 1, |a, b| {
            a.partial_cmp(b).expect("finite sup statistics")
        });
        qs.push(*q);
    }
    let mean = qs.iter().sum::<f64>() / boots as f64;
    let var = qs.iter().map(|q| (q - mean) * (q - mean)).sum::<f64>() / (boots - 1) as f64;

    Ok(QuantileEstimate {
        alpha,
        value,
        reps,
        grid_n,
        stderr: var.sqrt(),
        seed,
    })
}
