//! Non-stationary data-generating processes, their exact simulation from
//! counter-keyed uniform innovations, and the regularity functionals
//! (physical dependence coefficients, total-variation constants, local
//! long-run covariances) attached to each model.

use crate::matkit::{is_elliptic, psd_sqrt};
use crate::rng;
use crate::SymMatrix64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecError {
    #[error("bad generator spec: {0}")]
    BadSpec(String),
    #[error("bad arguments: {0}")]
    BadArgs(&'static str),
}

/// Number of equispaced rescaled times used when a functional is maximized
/// over `u` in `[0, 1]`.
pub const TIME_GRID: usize = 32;

const MC_SEED: u64 = 0x5eed_dc0e;

/// Innovation distribution: mean zero, unit (identity) covariance.
#[derive(Debug, Clone, PartialEq)]
pub enum InnovationLaw {
    StandardGaussian { dim: usize },
    /// `Z - 1` for `Z ~ Exp(1)`; scalar, variance one.
    CenteredExpOne,
    /// Scalar law given by an inverse-CDF table of `(p, x)` nodes with
    /// linear interpolation; the caller declares mean zero / unit variance.
    CustomIid { table: Vec<(f64, f64)> },
}

impl InnovationLaw {
    pub fn dim(&self) -> usize {
        match self {
            InnovationLaw::StandardGaussian { dim } => *dim,
            _ => 1,
        }
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        match self {
            InnovationLaw::StandardGaussian { dim } => {
                if *dim == 0 {
                    return Err(SpecError::BadSpec("innovation dimension is zero".into()));
                }
            }
            InnovationLaw::CenteredExpOne => {}
            InnovationLaw::CustomIid { table } => {
                if table.len() < 2 {
                    return Err(SpecError::BadSpec(
                        "inverse-CDF table needs at least two nodes".into(),
                    ));
                }
                for w in table.windows(2) {
                    if !(w[0].0 < w[1].0) || w[0].1 > w[1].1 {
                        return Err(SpecError::BadSpec(
                            "inverse-CDF table must be strictly increasing in p and \
                             nondecreasing in x"
                                .into(),
                        ));
                    }
                }
                if table.iter().any(|(p, x)| !(0.0..=1.0).contains(p) || !x.is_finite()) {
                    return Err(SpecError::BadSpec("inverse-CDF table out of range".into()));
                }
            }
        }
        Ok(())
    }

    /// Draws one innovation vector from the uniform stream keyed by
    /// `(seed, tag, t)`, one uniform per coordinate.
    pub fn draw_into(&self, out: &mut [f64], seed: u64, tag: u64, t: i64) {
        match self {
            InnovationLaw::StandardGaussian { dim } => {
                for (c, slot) in out.iter_mut().enumerate().take(*dim) {
                    *slot = rng::std_normal(seed, tag, t, c as u64);
                }
            }
            InnovationLaw::CenteredExpOne => {
                out[0] = rng::exp1(seed, tag, t, 0) - 1.0;
            }
            InnovationLaw::CustomIid { table } => {
                out[0] = inv_cdf_table(table, rng::u01(seed, tag, t, 0));
            }
        }
    }

    /// L2 norm of one innovation vector, `sqrt(E ||eta||^2)`.
    pub fn l2_norm(&self) -> f64 {
        match self {
            InnovationLaw::StandardGaussian { dim } => (*dim as f64).sqrt(),
            InnovationLaw::CenteredExpOne => 1.0,
            InnovationLaw::CustomIid { .. } => self.lq_moment(2.0, 100_000),
        }
    }

    /// `|| eta - eta~ ||_Lq` for an independent copy; exact for `q = 2` under
    /// identity covariance, Monte Carlo otherwise.
    pub fn lq_diff_norm(&self, q: f64, mc_reps: usize) -> f64 {
        if q == 2.0 {
            match self {
                InnovationLaw::StandardGaussian { dim } => return (2.0 * *dim as f64).sqrt(),
                InnovationLaw::CenteredExpOne => return 2f64.sqrt(),
                InnovationLaw::CustomIid { .. } => {}
            }
        }
        let d = self.dim();
        let mut a = vec![0.0; d];
        let mut b = vec![0.0; d];
        let mut acc = 0.0;
        for r in 0..mc_reps as i64 {
            self.draw_into(&mut a, MC_SEED, 0, r);
            self.draw_into(&mut b, MC_SEED, 1, r);
            let sq: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum();
            acc += sq.powf(q / 2.0);
        }
        (acc / mc_reps as f64).powf(1.0 / q)
    }

    fn lq_moment(&self, q: f64, mc_reps: usize) -> f64 {
        let d = self.dim();
        let mut a = vec![0.0; d];
        let mut acc = 0.0;
        for r in 0..mc_reps as i64 {
            self.draw_into(&mut a, MC_SEED, 2, r);
            let sq: f64 = a.iter().map(|x| x * x).sum();
            acc += sq.powf(q / 2.0);
        }
        (acc / mc_reps as f64).powf(1.0 / q)
    }
}

fn inv_cdf_table(table: &[(f64, f64)], u: f64) -> f64 {
    if u <= table[0].0 {
        return table[0].1;
    }
    if u >= table[table.len() - 1].0 {
        return table[table.len() - 1].1;
    }
    let k = table.partition_point(|(p, _)| *p <= u) - 1;
    let (p0, x0) = table[k];
    let (p1, x1) = table[k + 1];
    x0 + (x1 - x0) * (u - p0) / (p1 - p0)
}

/// Declarative description of a non-stationary data-generating process.
#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorSpec {
    /// Independent `X_t = Sigma^{1/2} eta_t` with a constant, uniformly
    /// elliptic covariance.
    HeteroskedasticIndep {
        sigma: SymMatrix64,
        noise: InnovationLaw,
        c_true: f64,
    },
    /// Scalar `X_t = sigma(t/n) (Z_t - 1) + shift` with `Z ~ Exp(1)` and
    /// `sigma(u) = base + amplitude * sin(frequency * u)`.
    ExpSineShift {
        base: f64,
        amplitude: f64,
        frequency: f64,
        shift: f64,
    },
    /// Scalar truncated linear process `X_t = sum_{i=0}^{h_coef} phi^i eta_{t-i}`.
    TvLinear {
        phi: f64,
        h_coef: usize,
        noise: InnovationLaw,
    },
}

impl GeneratorSpec {
    /// The sinusoidal-volatility model with its default parameters.
    pub fn exp_sine(shift: f64) -> Self {
        GeneratorSpec::ExpSineShift {
            base: 1.2,
            amplitude: 1.0,
            frequency: 6.0 * std::f64::consts::PI,
            shift,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            GeneratorSpec::HeteroskedasticIndep { sigma, .. } => sigma.dim(),
            GeneratorSpec::ExpSineShift { .. } => 1,
            GeneratorSpec::TvLinear { .. } => 1,
        }
    }

    pub fn validate(&self) -> Result<(), SpecError> {
        match self {
            GeneratorSpec::HeteroskedasticIndep {
                sigma,
                noise,
                c_true,
            } => {
                noise.validate()?;
                if noise.dim() != sigma.dim() {
                    return Err(SpecError::BadSpec(
                        "innovation dimension does not match sigma".into(),
                    ));
                }
                if !(*c_true > 0.0) {
                    return Err(SpecError::BadSpec("c_true must be positive".into()));
                }
                match is_elliptic(sigma, *c_true) {
                    Ok(true) => {}
                    Ok(false) => {
                        return Err(SpecError::BadSpec(
                            "sigma is not uniformly elliptic at c_true".into(),
                        ))
                    }
                    Err(e) => return Err(SpecError::BadSpec(e.to_string())),
                }
            }
            GeneratorSpec::ExpSineShift {
                base,
                amplitude,
                frequency,
                shift,
            } => {
                if ![*base, *amplitude, *frequency, *shift]
                    .iter()
                    .all(|x| x.is_finite())
                {
                    return Err(SpecError::BadSpec("non-finite ExpSine parameter".into()));
                }
                let min_sigma = (0..=4096)
                    .map(|k| self.exp_sine_sigma(k as f64 / 4096.0))
                    .fold(f64::INFINITY, f64::min);
                if !(min_sigma > 0.0) {
                    return Err(SpecError::BadSpec(
                        "sigma(u) must stay strictly positive on [0, 1]".into(),
                    ));
                }
            }
            GeneratorSpec::TvLinear { phi, noise, .. } => {
                noise.validate()?;
                if noise.dim() != 1 {
                    return Err(SpecError::BadSpec(
                        "TvLinear requires a scalar innovation law".into(),
                    ));
                }
                if !phi.is_finite() {
                    return Err(SpecError::BadSpec("non-finite phi".into()));
                }
            }
        }
        Ok(())
    }

    /// `sigma(u)` for the ExpSine model; panics on other kinds.
    pub fn exp_sine_sigma(&self, u: f64) -> f64 {
        match self {
            GeneratorSpec::ExpSineShift {
                base,
                amplitude,
                frequency,
                ..
            } => base + amplitude * (frequency * u).sin(),
            _ => panic!("exp_sine_sigma on a non-ExpSine spec"),
        }
    }

    /// Stable content hash, recorded in every simulated path.
    pub fn digest(&self) -> u64 {
        let mut h = 0xcbf2_9ce4_8422_2325u64; // FNV-1a
        let mut eat = |bytes: &[u8]| {
            for &b in bytes {
                h ^= b as u64;
                h = h.wrapping_mul(0x100_0000_01b3);
            }
        };
        match self {
            GeneratorSpec::HeteroskedasticIndep {
                sigma,
                noise,
                c_true,
            } => {
                eat(b"het");
                eat(&(sigma.dim() as u64).to_le_bytes());
                for i in 0..sigma.dim() {
                    for j in 0..sigma.dim() {
                        eat(&sigma.get(i, j).to_bits().to_le_bytes());
                    }
                }
                eat(&c_true.to_bits().to_le_bytes());
                eat(&noise_digest_bytes(noise));
            }
            GeneratorSpec::ExpSineShift {
                base,
                amplitude,
                frequency,
                shift,
            } => {
                eat(b"sine");
                for x in [base, amplitude, frequency, shift] {
                    eat(&x.to_bits().to_le_bytes());
                }
            }
            GeneratorSpec::TvLinear { phi, h_coef, noise } => {
                eat(b"tvl");
                eat(&phi.to_bits().to_le_bytes());
                eat(&(*h_coef as u64).to_le_bytes());
                eat(&noise_digest_bytes(noise));
            }
        }
        h
    }
}

fn noise_digest_bytes(noise: &InnovationLaw) -> Vec<u8> {
    let mut out = Vec::new();
    match noise {
        InnovationLaw::StandardGaussian { dim } => {
            out.extend_from_slice(b"gauss");
            out.extend_from_slice(&(*dim as u64).to_le_bytes());
        }
        InnovationLaw::CenteredExpOne => out.extend_from_slice(b"cexp"),
        InnovationLaw::CustomIid { table } => {
            out.extend_from_slice(b"custom");
            for (p, x) in table {
                out.extend_from_slice(&p.to_bits().to_le_bytes());
                out.extend_from_slice(&x.to_bits().to_le_bytes());
            }
        }
    }
    out
}

/// One simulated sample path with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct PathMatrix {
    pub n: usize,
    pub dim: usize,
    values: Vec<f64>,
    pub spec_digest: u64,
    pub seed: u64,
    /// Whether the mean was subtracted after simulation.
    pub centered: bool,
}

impl PathMatrix {
    pub fn from_values(n: usize, dim: usize, values: Vec<f64>) -> Result<Self, SpecError> {
        if values.len() != n * dim {
            return Err(SpecError::BadArgs("value length does not match n * dim"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SpecError::BadArgs("non-finite path value"));
        }
        Ok(PathMatrix {
            n,
            dim,
            values,
            spec_digest: 0,
            seed: 0,
            centered: false,
        })
    }

    /// Observation at time `t` (1-based).
    #[inline]
    pub fn obs(&self, t: usize) -> &[f64] {
        debug_assert!((1..=self.n).contains(&t));
        &self.values[(t - 1) * self.dim..t * self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
}

/// Exact simulation of the declared model; bit-deterministic in
/// `(spec, n, seed)`.
pub fn simulate_path(spec: &GeneratorSpec, n: usize, seed: u64) -> Result<PathMatrix, SpecError> {
    spec.validate()?;
    if n < 1 {
        return Err(SpecError::BadArgs("n must be at least 1"));
    }
    let d = spec.dim();
    let mut values = vec![0.0; n * d];
    match spec {
        GeneratorSpec::ExpSineShift { shift, .. } => {
            let n_f = n as f64;
            for t in 1..=n {
                let z = rng::exp1(seed, 0, t as i64, 0);
                values[t - 1] = spec.exp_sine_sigma(t as f64 / n_f) * (z - 1.0) + shift;
            }
        }
        GeneratorSpec::HeteroskedasticIndep { sigma, noise, .. } => {
            let root = psd_sqrt(sigma).map_err(|e| SpecError::BadSpec(e.to_string()))?;
            let mut eta = vec![0.0; d];
            for t in 1..=n {
                noise.draw_into(&mut eta, seed, 0, t as i64);
                let x = root.apply(&eta).expect("matching dimensions");
                values[(t - 1) * d..t * d].copy_from_slice(&x);
            }
        }
        GeneratorSpec::TvLinear { phi, h_coef, noise } => {
            let h = *h_coef;
            let powers: Vec<f64> = (0..=h).map(|i| phi.powi(i as i32)).collect();
            // Ring buffer of innovations eta_{t-h}..eta_t; burn-in covers the
            // full coefficient window before t = 1.
            let mut buf = vec![0.0; h + 1];
            let mut scratch = [0.0; 1];
            for t in -(h as i64)..=0 {
                noise.draw_into(&mut scratch, seed, 0, t);
                buf[(t.rem_euclid(h as i64 + 1)) as usize] = scratch[0];
            }
            for t in 1..=n as i64 {
                noise.draw_into(&mut scratch, seed, 0, t);
                buf[(t.rem_euclid(h as i64 + 1)) as usize] = scratch[0];
                let mut acc = 0.0;
                for (i, &p) in powers.iter().enumerate() {
                    let idx = ((t - i as i64).rem_euclid(h as i64 + 1)) as usize;
                    acc += p * buf[idx];
                }
                values[(t - 1) as usize] = acc;
            }
        }
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(SpecError::BadSpec("simulation produced non-finite values".into()));
    }
    Ok(PathMatrix {
        n,
        dim: d,
        values,
        spec_digest: spec.digest(),
        seed,
        centered: false,
    })
}

/// Local long-run covariance `Sigma(u)`, evaluated analytically.
pub fn local_lrv(spec: &GeneratorSpec, u: f64) -> Result<SymMatrix64, SpecError> {
    spec.validate()?;
    if !(0.0..=1.0).contains(&u) {
        return Err(SpecError::BadArgs("u must lie in [0, 1]"));
    }
    match spec {
        GeneratorSpec::HeteroskedasticIndep { sigma, .. } => Ok(sigma.clone()),
        GeneratorSpec::ExpSineShift { .. } => {
            let s = spec.exp_sine_sigma(u);
            Ok(SymMatrix64::scaled_identity(1, s * s))
        }
        GeneratorSpec::TvLinear { phi, h_coef, .. } => {
            let s: f64 = (0..=*h_coef).map(|i| phi.powi(i as i32)).sum();
            Ok(SymMatrix64::scaled_identity(1, s * s))
        }
    }
}

/// `Sigma_{t,n}` for `t = 1..=n`, sampled at `u = t/n`.
pub fn lrv_sequence(spec: &GeneratorSpec, n: usize) -> Result<Vec<SymMatrix64>, SpecError> {
    (1..=n)
        .map(|t| local_lrv(spec, t as f64 / n as f64))
        .collect()
}

/// Physical dependence coefficient `delta_n(h)` in the L_q norm.
///
/// Uses the analytic value where the model admits one and otherwise the
/// Monte Carlo coordinate-swap estimate.
pub fn dependence_coeff(
    spec: &GeneratorSpec,
    h: usize,
    q: f64,
    mc_reps: usize,
) -> Result<f64, SpecError> {
    spec.validate()?;
    if q < 2.0 || !q.is_finite() {
        return Err(SpecError::BadArgs("q must be at least 2"));
    }
    match spec {
        GeneratorSpec::ExpSineShift { .. } => {
            if h >= 1 {
                return Ok(0.0);
            }
            let factor = InnovationLaw::CenteredExpOne.lq_diff_norm(q, mc_reps.max(1000));
            let max_sigma = (0..TIME_GRID)
                .map(|k| spec.exp_sine_sigma(k as f64 / (TIME_GRID - 1) as f64))
                .fold(f64::NEG_INFINITY, f64::max);
            Ok(max_sigma * factor)
        }
        GeneratorSpec::HeteroskedasticIndep { sigma, noise, .. } => {
            if h >= 1 {
                return Ok(0.0);
            }
            match (noise, q == 2.0) {
                (InnovationLaw::StandardGaussian { .. }, true)
                | (InnovationLaw::CenteredExpOne, true) => Ok((2.0 * sigma.trace()).sqrt()),
                _ => dependence_coeff_mc(spec, h, q, mc_reps),
            }
        }
        GeneratorSpec::TvLinear { phi, h_coef, noise } => {
            if h > *h_coef {
                return Ok(0.0);
            }
            let factor = noise.lq_diff_norm(q, mc_reps.max(1000));
            Ok(phi.abs().powi(h as i32) * factor)
        }
    }
}

/// Brute-force Monte Carlo estimate of `delta_n(h)`: swaps the innovation
/// `h` steps back with an independent copy at the seed level and measures the
/// L_q distance, maximized over a grid of rescaled times.
pub fn dependence_coeff_mc(
    spec: &GeneratorSpec,
    h: usize,
    q: f64,
    mc_reps: usize,
) -> Result<f64, SpecError> {
    spec.validate()?;
    if q < 2.0 || !q.is_finite() {
        return Err(SpecError::BadArgs("q must be at least 2"));
    }
    if mc_reps < 1000 {
        return Err(SpecError::BadArgs("mc_reps must be at least 1000"));
    }
    let mut best = 0.0f64;
    for k in 0..TIME_GRID {
        let u = k as f64 / (TIME_GRID - 1) as f64;
        let mut acc = 0.0;
        for r in 0..mc_reps as i64 {
            let (x, x_swapped) = local_pair(spec, u, h, r);
            let sq: f64 = x
                .iter()
                .zip(&x_swapped)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            acc += sq.powf(q / 2.0);
        }
        let val = (acc / mc_reps as f64).powf(1.0 / q);
        best = best.max(val);
    }
    Ok(best)
}

/// Evaluates `G_u` on the primary seed sequence and on the copy with the
/// innovation at lag `h` swapped. `rep` indexes the replication stream.
fn local_pair(spec: &GeneratorSpec, u: f64, h: usize, rep: i64) -> (Vec<f64>, Vec<f64>) {
    // Streams: tag 2*rep for the shared sequence, 2*rep+1 for the swapped
    // coordinate. Lag index enters through the time argument.
    let shared = |lag: usize, law: &InnovationLaw, out: &mut [f64]| {
        law.draw_into(out, MC_SEED ^ 0xabcd, (rep as u64) << 1, lag as i64);
    };
    let swapped = |lag: usize, law: &InnovationLaw, out: &mut [f64]| {
        law.draw_into(out, MC_SEED ^ 0xabcd, ((rep as u64) << 1) | 1, lag as i64);
    };
    match spec {
        GeneratorSpec::ExpSineShift { shift, .. } => {
            let sigma = spec.exp_sine_sigma(u);
            let mut z = [0.0];
            let law = InnovationLaw::CenteredExpOne;
            shared(0, &law, &mut z);
            let x = sigma * z[0] + shift;
            let x2 = if h == 0 {
                swapped(0, &law, &mut z);
                sigma * z[0] + shift
            } else {
                x
            };
            (vec![x], vec![x2])
        }
        GeneratorSpec::HeteroskedasticIndep { sigma, noise, .. } => {
            let root = psd_sqrt(sigma).expect("validated spec");
            let d = sigma.dim();
            let mut eta = vec![0.0; d];
            shared(0, noise, &mut eta);
            let x = root.apply(&eta).expect("matching dimensions");
            let x2 = if h == 0 {
                swapped(0, noise, &mut eta);
                root.apply(&eta).expect("matching dimensions")
            } else {
                x.clone()
            };
            (x, x2)
        }
        GeneratorSpec::TvLinear { phi, h_coef, noise } => {
            let mut eta = [0.0];
            let mut x = 0.0;
            let mut x2 = 0.0;
            for i in 0..=*h_coef {
                shared(i, noise, &mut eta);
                let p = phi.powi(i as i32);
                x += p * eta[0];
                if i == h {
                    swapped(i, noise, &mut eta);
                }
                x2 += p * eta[0];
            }
            (vec![x], vec![x2])
        }
    }
}

/// Fitted decay of the dependence coefficients.
#[derive(Debug, Clone, PartialEq)]
pub enum BetaFit {
    /// Least-squares slope of `log delta(h)` against `log(h + 1)`, negated.
    Polynomial(f64),
    /// Decay faster than every polynomial (exponential or exactly zero tail).
    SuperPolynomial,
}

/// Empirical regularity summary for a generator spec.
#[derive(Debug, Clone)]
pub struct RegularityReport {
    pub theta: f64,
    pub gamma: f64,
    /// `delta(h)` for `h = 0..=h_report`.
    pub delta_curve: Vec<f64>,
    /// `Xi(L) = sum_{h >= L} delta(h)` for `L = 0..=h_report`, with the tail
    /// beyond `h_report` extrapolated from the fitted decay.
    pub xi_tail: Vec<f64>,
    pub beta_fit: BetaFit,
}

/// Computes the regularity report: dependence curve, fitted decay exponent,
/// minimal scale constant, and the total-variation constant.
pub fn regularity_report(
    spec: &GeneratorSpec,
    n: usize,
    q: f64,
    h_report: usize,
) -> Result<RegularityReport, SpecError> {
    spec.validate()?;
    if n < 2 {
        return Err(SpecError::BadArgs("n must be at least 2"));
    }
    let delta_curve: Vec<f64> = (0..=h_report)
        .map(|h| dependence_coeff(spec, h, q, 2000))
        .collect::<Result<_, _>>()?;

    let beta_fit = fit_decay(&delta_curve);

    let beta_ref = match beta_fit {
        BetaFit::Polynomial(b) => b,
        BetaFit::SuperPolynomial => 2.0,
    };
    let mut theta = delta_curve
        .iter()
        .enumerate()
        .map(|(h, &d)| d * ((h + 1) as f64).powf(beta_ref))
        .fold(0.0f64, f64::max);
    if theta == 0.0 {
        theta = 1.0;
    }

    let raw_gamma = total_variation_l2(spec, n);
    let gamma = raw_gamma / theta;

    let tail = extrapolated_tail(&delta_curve, &beta_fit);
    let mut xi_tail = vec![0.0; h_report + 1];
    let mut acc = tail;
    for l in (0..=h_report).rev() {
        acc += delta_curve[l];
        xi_tail[l] = acc;
    }

    Ok(RegularityReport {
        theta,
        gamma,
        delta_curve,
        xi_tail,
        beta_fit,
    })
}

/// `||G_1||_{L_2} + sum_t ||G_t - G_{t-1}||_{L_2}`, analytic per model.
fn total_variation_l2(spec: &GeneratorSpec, n: usize) -> f64 {
    match spec {
        GeneratorSpec::ExpSineShift { .. } => {
            let n_f = n as f64;
            let mut acc = spec.exp_sine_sigma(1.0 / n_f);
            for t in 2..=n {
                acc += (spec.exp_sine_sigma(t as f64 / n_f)
                    - spec.exp_sine_sigma((t - 1) as f64 / n_f))
                .abs();
            }
            acc
        }
        GeneratorSpec::HeteroskedasticIndep { sigma, .. } => sigma.trace().sqrt(),
        GeneratorSpec::TvLinear { phi, h_coef, noise } => {
            let coeff_sq: f64 = (0..=*h_coef).map(|i| phi.powi(2 * i as i32)).sum();
            (coeff_sq).sqrt() * noise.l2_norm()
        }
    }
}

fn fit_decay(delta: &[f64]) -> BetaFit {
    let pts: Vec<(f64, f64)> = delta
        .iter()
        .enumerate()
        .skip(1)
        .filter(|(_, &d)| d > 1e-12)
        .map(|(h, &d)| (h as f64, d.ln()))
        .collect();
    if pts.len() < 3 {
        return BetaFit::SuperPolynomial;
    }
    let poly: Vec<(f64, f64)> = pts.iter().map(|&(h, ld)| ((h + 1.0).ln(), ld)).collect();
    let (slope_poly, r2_poly) = least_squares(&poly);
    let (_, r2_exp) = least_squares(&pts);
    if r2_exp > r2_poly + 1e-9 {
        BetaFit::SuperPolynomial
    } else {
        BetaFit::Polynomial(-slope_poly)
    }
}

fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return (0.0, 1.0);
    }
    let slope = sxy / sxx;
    let r2 = (sxy * sxy) / (sxx * syy);
    (slope, r2)
}

fn extrapolated_tail(delta: &[f64], fit: &BetaFit) -> f64 {
    let h_max = delta.len() - 1;
    let last = delta[h_max];
    if last <= 1e-300 {
        return 0.0;
    }
    match fit {
        BetaFit::Polynomial(b) if *b > 1.0 => last * (h_max as f64 + 1.0) / (b - 1.0),
        BetaFit::Polynomial(_) => f64::INFINITY,
        BetaFit::SuperPolynomial => {
            if h_max == 0 {
                return 0.0;
            }
            let prev = delta[h_max - 1];
            if prev > 0.0 {
                let r = last / prev;
                if r < 1.0 {
                    return last * r / (1.0 - r);
                }
            }
            0.0
        }
    }
}
