//! Rate calculus: the piecewise exponent `xi(q, beta)`, the rate-optimal
//! block-length exponents, an error-budget evaluator for the multiplier
//! bound, and empirical diagnostics (autocovariance trace-norm decay and
//! distributional coupling checks against matched Gaussian sums).

use crate::gausslim::{gaussian_sum_path, GaussError};
use crate::ks;
use crate::matkit::norms;
use crate::procgen::{lrv_sequence, simulate_path, GeneratorSpec, SpecError};
use crate::rng;
use crate::sumproc::{partial_sum, sup_statistic};
use crate::Mat64;
use num_traits::Num;
use rayon::prelude::*;
use std::io::{self, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RateError {
    #[error("bad arguments: {0}")]
    BadArgs(&'static str),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Gauss(#[from] GaussError),
    #[error(transparent)]
    Mat(#[from] crate::matkit::MatError),
}

/// The four regions of the `(q, beta)` plane, split at `beta = 3/2` and
/// `beta = 2q / (q + 2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateCase {
    /// `beta >= 3/2` and `beta > 2q/(q+2)`.
    One,
    /// `beta >= 3/2` and `beta <= 2q/(q+2)`.
    Two,
    /// `beta < 3/2` and `beta > 2q/(q+2)`.
    Three,
    /// `beta < 3/2` and `beta <= 2q/(q+2)`.
    Four,
}

impl RateCase {
    pub fn label(self) -> &'static str {
        match self {
            RateCase::One => "case 1 (beta >= 3/2, beta > 2q/(q+2))",
            RateCase::Two => "case 2 (beta >= 3/2, beta <= 2q/(q+2))",
            RateCase::Three => "case 3 (beta < 3/2, beta > 2q/(q+2))",
            RateCase::Four => "case 4 (beta < 3/2, beta <= 2q/(q+2))",
        }
    }
}

#[inline]
fn small<T: Num>(k: u32) -> T {
    let mut acc = T::zero();
    for _ in 0..k {
        acc = acc + T::one();
    }
    acc
}

fn check_domain<T: Num + PartialOrd + Clone>(q: &T, beta: &T) -> Result<(), RateError> {
    if !(*q > small::<T>(2)) {
        return Err(RateError::BadArgs("q must exceed 2"));
    }
    if !(*beta > T::one()) {
        return Err(RateError::BadArgs("beta must exceed 1"));
    }
    Ok(())
}

/// Case membership, using the products `2 beta >= 3` and
/// `beta (q + 2) > 2q` so the comparison is exact for rational scalars.
pub fn rate_case<T: Num + PartialOrd + Clone>(q: T, beta: T) -> Result<RateCase, RateError> {
    check_domain(&q, &beta)?;
    let two = small::<T>(2);
    let three = small::<T>(3);
    let upper = two.clone() * beta.clone() >= three;
    let right = beta * (q.clone() + two.clone()) > two * q;
    Ok(match (upper, right) {
        (true, true) => RateCase::One,
        (true, false) => RateCase::Two,
        (false, true) => RateCase::Three,
        (false, false) => RateCase::Four,
    })
}

/// The branch formula for `xi`, evaluated regardless of case membership
/// (used for boundary-continuity checks).
pub fn xi_branch<T: Num + Clone>(case: RateCase, q: T, beta: T) -> T {
    let one = T::one();
    let two = small::<T>(2);
    let three = small::<T>(3);
    let four = small::<T>(4);
    let six = small::<T>(6);
    match case {
        RateCase::One => (q.clone() - two.clone()) / (six * q - four),
        RateCase::Two => (beta.clone() - one) / (four * beta - two),
        RateCase::Three => {
            (beta.clone() - one) * (q.clone() - two.clone())
                / (four * q.clone() * beta - three * q - two)
        }
        RateCase::Four => {
            let bm1 = beta.clone() - one.clone();
            bm1.clone() * bm1 / (two * beta.clone() * beta.clone() - one - beta)
        }
    }
}

/// The rate exponent `xi(q, beta)`: exact for rational scalar types.
pub fn xi<T: Num + PartialOrd + Clone>(q: T, beta: T) -> Result<T, RateError> {
    let case = rate_case(q.clone(), beta.clone())?;
    Ok(xi_branch(case, q, beta))
}

/// The branch formula for the block-length exponent.
pub fn block_exponent_branch<T: Num + Clone>(case: RateCase, q: T, beta: T) -> T {
    let one = T::one();
    let two = small::<T>(2);
    let three = small::<T>(3);
    let four = small::<T>(4);
    match case {
        RateCase::One => (q.clone() - two.clone()) / (three * q - two),
        RateCase::Two => (beta.clone() - one.clone()) / (two * beta - one),
        RateCase::Three => {
            (q.clone() - two.clone()) / (four * q.clone() * beta - three * q - two)
        }
        RateCase::Four => {
            (beta.clone() - one.clone()) / (two * beta.clone() * beta.clone() - one - beta)
        }
    }
}

/// Exponent `e` of the rate-optimal block length `L* ~ (n/d)^e`.
pub fn optimal_block_exponent<T: Num + PartialOrd + Clone>(
    q: T,
    beta: T,
) -> Result<T, RateError> {
    let case = rate_case(q.clone(), beta.clone())?;
    Ok(block_exponent_branch(case, q, beta))
}

/// Inputs to the multiplier error bound.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorBudget {
    pub lambda: f64,
    pub theta: f64,
    pub xi_tail: f64,
    pub l: f64,
    pub phi: f64,
    pub psi: f64,
    pub gamma: f64,
    pub n: usize,
    pub m: usize,
    pub q: f64,
    pub beta: f64,
}

/// The four summands of the multiplier bound with all unspecified constants
/// set to 1; an order-of-magnitude planning tool, not a bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetTerms {
    pub term1: f64,
    pub term2: f64,
    pub term3: f64,
    pub term4: f64,
    pub total: f64,
}

pub fn theorem3_budget(b: &ErrorBudget) -> Result<BudgetTerms, RateError> {
    if b.n < 1 {
        return Err(RateError::BadArgs("n must be at least 1"));
    }
    for v in [
        b.lambda, b.theta, b.xi_tail, b.l, b.phi, b.psi, b.gamma,
    ] {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(RateError::BadArgs("budget functionals must be nonnegative"));
        }
    }
    let xi_exp = xi(b.q, b.beta)?;
    let n = b.n as f64;
    let term1 = n.powf(-0.5) * b.lambda * b.theta;
    let term2 = b.lambda * b.xi_tail;
    let term3 = n.powf(1.0 / b.q - 0.5) * b.l * b.phi;
    let inner = b.phi * b.theta * b.gamma + b.psi * b.theta;
    let term4 = b.phi
        * b.theta
        * inner.powf((b.beta - 1.0) / (2.0 * b.beta))
        * n.ln().max(0.0).sqrt()
        * (b.m as f64 / n).powf(xi_exp);
    Ok(BudgetTerms {
        term1,
        term2,
        term3,
        term4,
        total: term1 + term2 + term3 + term4,
    })
}

/// Per-lag entry of the autocovariance decay report.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayLag {
    pub lag: usize,
    /// Trace norm of the estimated covariance at this lag.
    pub estimate: f64,
    /// Monte Carlo standard error aggregated over matrix entries.
    pub stderr: f64,
    /// `estimate * (lag + 1)^beta`.
    pub normalized: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub beta: f64,
    pub reps: usize,
    pub lags: Vec<DecayLag>,
    /// Log-log OLS slope over lags >= 1 (None when every estimate there is
    /// statistically indistinguishable from zero).
    pub slope: Option<f64>,
    /// True when every lag >= 1 estimate is within 5 standard errors of 0.
    pub independent_like: bool,
    pub pass: bool,
}

/// Monte Carlo check of the trace-norm decay
/// `||Cov(X_t, X_{t+h})||_tr <= C (h+1)^{-beta}`.
///
/// Estimates the lag-`h` covariance at an anchor in the middle of the path,
/// reports the normalized values and the fitted log-log slope, and passes
/// when the slope is at most `-beta + 0.25` or the model is independent-like
/// (all lag >= 1 estimates within 5 standard errors of zero).
pub fn autocov_decay_check(
    spec: &GeneratorSpec,
    n: usize,
    beta: f64,
    mc_reps: usize,
    seed: u64,
) -> Result<DecayReport, RateError> {
    spec.validate()?;
    if !(beta > 1.0) {
        return Err(RateError::BadArgs("beta must exceed 1"));
    }
    if mc_reps < 100 {
        return Err(RateError::BadArgs("need at least 100 replications"));
    }
    let max_lag = 12usize.min(n / 4);
    if max_lag < 2 || n < 32 {
        return Err(RateError::BadArgs("path too short for a decay check"));
    }
    let d = spec.dim();
    // Anchors spread over the path; averaging lagged products over anchors
    // pushes the Monte Carlo noise floor well below the smallest covariance
    // that the slope fit needs to resolve.
    let stride = (2 * max_lag).max(8);
    let anchors: Vec<usize> = (max_lag + 1..=n - max_lag).step_by(stride).collect();
    let n_anchors = anchors.len();
    let blocks = max_lag + 1;

    // Per rep: observations at anchor + h, laid out [anchor][lag][coord].
    let per_rep: Vec<Vec<f64>> = (0..mc_reps as u64)
        .into_par_iter()
        .map(|r| {
            let path = simulate_path(spec, n, rng::derive_seed(seed, r))
                .expect("validated spec");
            let mut row = Vec::with_capacity(n_anchors * blocks * d);
            for &a in &anchors {
                for h in 0..=max_lag {
                    row.extend_from_slice(path.obs(a + h));
                }
            }
            row
        })
        .collect();

    let reps = mc_reps as f64;
    let mut mean = vec![0.0f64; n_anchors * blocks * d];
    for row in &per_rep {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v / reps;
        }
    }

    let mut lags = Vec::with_capacity(blocks);
    let mut products = vec![0.0f64; d * d];
    for h in 0..=max_lag {
        // Anchor-averaged demeaned product per replication; its mean over
        // replications estimates the (anchor-averaged) lag-h covariance.
        let mut cov = vec![0.0f64; d * d];
        let mut var_of_products = vec![0.0f64; d * d];
        let per_rep_products = |row: &[f64], out: &mut [f64]| {
            out.iter_mut().for_each(|v| *v = 0.0);
            for a_idx in 0..n_anchors {
                let base0 = a_idx * blocks * d;
                let base_h = base0 + h * d;
                for i in 0..d {
                    let xi = row[base0 + i] - mean[base0 + i];
                    for j in 0..d {
                        let yj = row[base_h + j] - mean[base_h + j];
                        out[i * d + j] += xi * yj / n_anchors as f64;
                    }
                }
            }
        };
        for row in &per_rep {
            per_rep_products(row, &mut products);
            for (c, p) in cov.iter_mut().zip(&products) {
                *c += p / reps;
            }
        }
        for row in &per_rep {
            per_rep_products(row, &mut products);
            for (v, (c, p)) in var_of_products.iter_mut().zip(cov.iter().zip(&products)) {
                let dev = p - c;
                *v += dev * dev / (reps - 1.0);
            }
        }
        let est = norms(&Mat64::from_rows(d, d, cov).expect("finite covariance"))?
            .trace_norm;
        let stderr = (var_of_products.iter().sum::<f64>() / reps).sqrt();
        lags.push(DecayLag {
            lag: h,
            estimate: est,
            stderr,
            normalized: est * ((h + 1) as f64).powf(beta),
        });
    }

    let independent_like = lags[1..]
        .iter()
        .all(|l| l.estimate.abs() <= 5.0 * l.stderr);

    // Log-log OLS over lags >= 1 with estimates above the noise floor.
    let points: Vec<(f64, f64)> = lags[1..]
        .iter()
        .filter(|l| l.estimate > 2.0 * l.stderr && l.estimate > 0.0)
        .map(|l| (((l.lag + 1) as f64).ln(), l.estimate.ln()))
        .collect();
    let slope = if points.len() >= 3 {
        let nx = points.len() as f64;
        let mx = points.iter().map(|p| p.0).sum::<f64>() / nx;
        let my = points.iter().map(|p| p.1).sum::<f64>() / nx;
        let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        Some(sxy / sxx)
    } else {
        None
    };

    let scale = lags[0].estimate.max(1e-12);
    let bounded = lags.iter().all(|l| l.normalized <= 10.0 * scale);
    let pass = bounded
        && (independent_like || slope.map_or(false, |s| s <= -beta + 0.25));
    Ok(DecayReport {
        beta,
        reps: mc_reps,
        lags,
        slope,
        independent_like,
        pass,
    })
}

/// One rung of the coupling-diagnostic ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingRow {
    pub n: usize,
    pub reps: usize,
    /// KS distance between sup statistics of data and Gaussian partial sums.
    pub ks_sup: f64,
    /// KS distance between the terminal values `S_n(1)`.
    pub ks_terminal: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Distributional consequence of the Gaussian coupling: compares the law of
/// `sup_u ||S_n(u)||` (and of the terminal value) under the data-generating
/// process against independent Gaussian sums with the matched covariances
/// `Sigma_{t,n}`, for a ladder of sample sizes.
pub fn coupling_diagnostic(
    spec: &GeneratorSpec,
    ladder: &[usize],
    reps: usize,
    seed: u64,
) -> Result<Vec<CouplingRow>, RateError> {
    spec.validate()?;
    if reps < 100 {
        return Err(RateError::BadArgs("need at least 100 replications"));
    }
    if ladder.is_empty() || ladder.iter().any(|&n| n < 16) {
        return Err(RateError::BadArgs("ladder entries must be at least 16"));
    }
    let threshold = 3.0 * ks::two_sample_null_quantile(0.05, reps, reps);
    let mut rows = Vec::with_capacity(ladder.len());
    for &n in ladder {
        let curve = lrv_sequence(spec, n)?;
        let stats: Vec<(f64, f64, f64, f64)> = (0..reps as u64)
            .into_par_iter()
            .map(|r| {
                let path = simulate_path(spec, n, rng::derive_seed(seed, r))
                    .expect("validated spec");
                let p = partial_sum(&path);
                let g = gaussian_sum_path(
                    &curve,
                    rng::derive_seed(seed, rng::STREAM_GAUSS + r),
                )
                .expect("PSD curve");
                (
                    sup_statistic(&p),
                    p.row(n)[0],
                    sup_statistic(&g),
                    g.row(n)[0],
                )
            })
            .collect();
        let data_sup: Vec<f64> = stats.iter().map(|s| s.0).collect();
        let data_term: Vec<f64> = stats.iter().map(|s| s.1).collect();
        let gauss_sup: Vec<f64> = stats.iter().map(|s| s.2).collect();
        let gauss_term: Vec<f64> = stats.iter().map(|s| s.3).collect();
        let ks_sup = ks::two_sample(&data_sup, &gauss_sup);
        let ks_terminal = ks::two_sample(&data_term, &gauss_term);
        rows.push(CouplingRow {
            n,
            reps,
            ks_sup,
            ks_terminal,
            threshold,
            pass: ks_sup < threshold && ks_terminal < threshold,
        });
    }
    Ok(rows)
}

/// Serializes coupling rows (and optionally a decay slope) to the report CSV
/// layout `n, reps, ks_sup, ks_terminal, slope, pass`.
pub fn write_coupling_csv<W: Write>(
    rows: &[CouplingRow],
    w: &mut W,
) -> io::Result<()> {
    writeln!(w, "n,reps,ks_sup,ks_terminal,slope,pass")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{:.5e},{:.5e},,{}",
            r.n, r.reps, r.ks_sup, r.ks_terminal, r.pass
        )?;
    }
    Ok(())
}

/// Serializes a decay report: one summary row in the shared layout followed
/// by per-lag detail rows.
pub fn write_decay_csv<W: Write>(report: &DecayReport, w: &mut W) -> io::Result<()> {
    writeln!(w, "n,reps,ks_sup,ks_terminal,slope,pass")?;
    let slope = report
        .slope
        .map_or(String::new(), |s| format!("{s:.5e}"));
    writeln!(w, ",{},,,{slope},{}", report.reps, report.pass)?;
    writeln!(w, "lag,estimate,stderr,normalized")?;
    for l in &report.lags {
        writeln!(
            w,
            "{},{:.5e},{:.5e},{:.5e}",
            l.lag, l.estimate, l.stderr, l.normalized
        )?;
    }
    Ok(())
}

/// Convenience: `xi` with its case label and block exponent, for reporting.
pub fn rate_summary(q: f64, beta: f64) -> Result<(RateCase, f64, f64), RateError> {
    let case = rate_case(q, beta)?;
    let x: f64 = xi_branch(case, q, beta);
    let e: f64 = block_exponent_branch(case, q, beta);
    Ok((case, x, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::procgen::InnovationLaw;
    use crate::SymMatrix64;
    use num_rational::Ratio;

    type R = Ratio<i64>;

    fn r(n: i64, d: i64) -> R {
        Ratio::new(n, d)
    }

    #[test]
    fn xi_reference_points_rational() {
        // q = 4, beta = 2: case 1 since 2q/(q+2) = 4/3 < 2.
        assert_eq!(rate_case(r(4, 1), r(2, 1)).unwrap(), RateCase::One);
        assert_eq!(xi(r(4, 1), r(2, 1)).unwrap(), r(1, 10));
        // q = 4, beta = 5/4: case 4.
        assert_eq!(rate_case(r(4, 1), r(5, 4)).unwrap(), RateCase::Four);
        assert_eq!(xi(r(4, 1), r(5, 4)).unwrap(), r(1, 14));
    }

    #[test]
    fn block_exponent_reference_points() {
        assert_eq!(optimal_block_exponent(r(4, 1), r(2, 1)).unwrap(), r(1, 5));
        assert_eq!(optimal_block_exponent(r(4, 1), r(5, 4)).unwrap(), r(2, 7));
    }

    #[test]
    fn domain_errors() {
        assert!(xi(2.0, 2.0).is_err());
        assert!(xi(4.0, 1.0).is_err());
        assert!(xi(1.5, 0.5).is_err());
    }

    #[test]
    fn boundary_continuity_both_seams() {
        for k in 0..50i64 {
            let q = 2.0 + 38.0 * rng::u01(11, 0, k, 0);
            // Seam beta = 3/2: cases 1|3 and 2|4 meet.
            let d13 = xi_branch(RateCase::One, q, 1.5) - xi_branch(RateCase::Three, q, 1.5);
            let d24 = xi_branch(RateCase::Two, q, 1.5) - xi_branch(RateCase::Four, q, 1.5);
            assert!(d13.abs() < 1e-12 && d24.abs() < 1e-12, "q = {q}");
            // Seam beta = 2q/(q+2): cases 1|2 and 3|4 meet.
            let b = 2.0 * q / (q + 2.0);
            let d12 = xi_branch(RateCase::One, q, b) - xi_branch(RateCase::Two, q, b);
            let d34 = xi_branch(RateCase::Three, q, b) - xi_branch(RateCase::Four, q, b);
            assert!(d12.abs() < 1e-12 && d34.abs() < 1e-12, "q = {q}");
        }
    }

    #[test]
    fn balancing_identity_exact_rationals() {
        // At the optimal block exponent e, the two competing terms balance:
        // xi = e/2 in the upper cases and xi = e (beta - 1) in the lower.
        for k in 0..100i64 {
            let q = r(5 + (rng::raw_u64(12, 0, k, 0) % 200) as i64, 2); // (2.5, 102.5)
            let beta = r(21 + (rng::raw_u64(12, 1, k, 0) % 60) as i64, 20); // (1.05, 4.05)
            let case = rate_case(q, beta).unwrap();
            let x = xi(q, beta).unwrap();
            let e = optimal_block_exponent(q, beta).unwrap();
            let expected = match case {
                RateCase::One | RateCase::Two => e / r(2, 1),
                RateCase::Three | RateCase::Four => e * (beta - r(1, 1)),
            };
            assert_eq!(x, expected, "q = {q}, beta = {beta}, {case:?}");
        }
    }

    #[test]
    fn xi_monotone_and_bounded() {
        let betas: Vec<f64> = (0..40).map(|i| 1.05 + 1.95 * i as f64 / 39.0).collect();
        for &q in &[2.5, 4.0, 8.0, 20.0] {
            let mut prev = 0.0;
            for &b in &betas {
                let x: f64 = xi(q, b).unwrap();
                assert!(x > 0.0 && x <= 0.25, "xi({q}, {b}) = {x}");
                assert!(x >= prev - 1e-15, "xi not nondecreasing at ({q}, {b})");
                prev = x;
            }
        }
        // Large-q limit of the upper branch is 1/6.
        let x: f64 = xi(1e6, 2.0).unwrap();
        assert!((x - 1.0 / 6.0).abs() < 1e-5);
    }

    #[test]
    fn budget_examples() {
        let mut b = ErrorBudget {
            lambda: 0.0,
            theta: 1.0,
            xi_tail: 7.0,
            l: 1.0,
            phi: 1.0,
            psi: 1.0,
            gamma: 1.0,
            n: 1000,
            m: 100,
            q: 4.0,
            beta: 2.0,
        };
        let t = theorem3_budget(&b).unwrap();
        assert_eq!(t.term2, 0.0);

        b.lambda = 1.0;
        let t1 = theorem3_budget(&b).unwrap();
        b.n = 4000;
        let t2 = theorem3_budget(&b).unwrap();
        let expected = t1.term3 * 4f64.powf(1.0 / b.q - 0.5);
        assert!((t2.term3 - expected).abs() < 1e-12 * expected.abs());

        // Studentized setup: Lambda = n^{1/6} makes term1 vanish as n grows.
        let term1_at = |n: usize| {
            let b = ErrorBudget {
                lambda: (n as f64).powf(1.0 / 6.0),
                n,
                ..b.clone()
            };
            theorem3_budget(&b).unwrap().term1
        };
        assert!(term1_at(1_000_000) < term1_at(10_000));
        assert!(term1_at(1_000_000) < 0.01);
    }

    #[test]
    fn budget_rejects_bad_inputs() {
        let b = ErrorBudget {
            lambda: -1.0,
            theta: 1.0,
            xi_tail: 0.0,
            l: 1.0,
            phi: 1.0,
            psi: 1.0,
            gamma: 1.0,
            n: 10,
            m: 1,
            q: 4.0,
            beta: 2.0,
        };
        assert!(theorem3_budget(&b).is_err());
    }

    #[test]
    fn decay_independent_model() {
        let spec = GeneratorSpec::HeteroskedasticIndep {
            sigma: SymMatrix64::scaled_identity(1, 2.0),
            noise: InnovationLaw::StandardGaussian { dim: 1 },
            c_true: 1.0,
        };
        let report = autocov_decay_check(&spec, 128, 2.0, 4_000, 31).unwrap();
        assert!(report.independent_like);
        assert!(report.pass);
        // Lag 0 recovers the variance.
        let lag0 = &report.lags[0];
        assert!((lag0.estimate - 2.0).abs() < 5.0 * lag0.stderr);
    }

    #[test]
    fn decay_tv_linear_geometric() {
        let spec = GeneratorSpec::TvLinear {
            phi: 0.5,
            h_coef: 30,
            noise: InnovationLaw::StandardGaussian { dim: 1 },
        };
        let report = autocov_decay_check(&spec, 256, 2.0, 10_000, 57).unwrap();
        assert!(report.pass, "report: {report:?}");
        let slope = report.slope.expect("geometric decay is estimable");
        assert!(slope <= -1.75, "slope = {slope}");
        // Oracle: lag-1 autocovariance ~ phi / (1 - phi^2) = 2/3.
        let lag1 = &report.lags[1];
        assert!(
            (lag1.estimate - 2.0 / 3.0).abs() < 6.0 * lag1.stderr,
            "lag 1 estimate {}",
            lag1.estimate
        );
    }

    #[test]
    fn coupling_gaussian_model_is_exact_in_law() {
        let spec = GeneratorSpec::HeteroskedasticIndep {
            sigma: SymMatrix64::scaled_identity(1, 1.5),
            noise: InnovationLaw::StandardGaussian { dim: 1 },
            c_true: 1.0,
        };
        let rows = coupling_diagnostic(&spec, &[64, 256], 3_000, 5).unwrap();
        for row in &rows {
            assert!(row.pass, "row: {row:?}");
            assert!(row.ks_sup < row.threshold / 2.0);
        }
    }

    #[test]
    fn coupling_exp_sine_decays() {
        let spec = GeneratorSpec::exp_sine(0.0);
        let rows = coupling_diagnostic(&spec, &[100, 1600], 4_000, 5).unwrap();
        assert!(rows[1].ks_terminal <= rows[0].ks_terminal + 0.01);
        assert!(rows[1].pass);
    }

    #[test]
    fn coupling_deterministic() {
        let spec = GeneratorSpec::exp_sine(0.0);
        let a = coupling_diagnostic(&spec, &[64], 500, 9).unwrap();
        let b = coupling_diagnostic(&spec, &[64], 500, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn csv_layouts() {
        let rows = vec![CouplingRow {
            n: 100,
            reps: 500,
            ks_sup: 0.01,
            ks_terminal: 0.02,
            threshold: 0.1,
            pass: true,
        }];
        let mut buf = Vec::new();
        write_coupling_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("n,reps,ks_sup,ks_terminal,slope,pass\n"));
        assert!(text.contains("100,500,"));
    }
}
