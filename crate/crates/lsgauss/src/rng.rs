//! Counter-based uniform random numbers.
//!
//! Every draw is a pure function of the key `(seed, tag, t, coord)`, so
//! parallel replications need no shared state and coordinate-level seed
//! couplings (swap one innovation, keep the rest) are exact.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a path seed from a base seed and a stream index.
///
/// The harness keys replication `r` as `derive_seed(base, r)` and keeps
/// critical-value simulation in the disjoint space `derive_seed(base, (1 << 32) + r)`.
#[inline]
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    mix64(mix64(base ^ GOLDEN).wrapping_add(stream.wrapping_mul(GOLDEN)))
}

/// Stream offset reserved for critical-value replications.
pub const STREAM_CRITVAL: u64 = 1 << 32;
/// Stream offset reserved for Gaussian comparison paths in diagnostics.
pub const STREAM_GAUSS: u64 = 1 << 33;
/// Stream offset reserved for bootstrap resampling.
pub const STREAM_BOOT: u64 = 1 << 34;

#[inline]
pub fn raw_u64(seed: u64, tag: u64, t: i64, coord: u64) -> u64 {
    let mut h = mix64(seed ^ GOLDEN);
    h = mix64(h ^ tag);
    h = mix64(h ^ (t as u64));
    h = mix64(h ^ coord);
    mix64(h)
}

/// Uniform draw in the open interval (0, 1).
#[inline]
pub fn u01(seed: u64, tag: u64, t: i64, coord: u64) -> f64 {
    let x = raw_u64(seed, tag, t, coord);
    ((x >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
}

/// Standard normal draw via the inverse CDF.
#[inline]
pub fn std_normal(seed: u64, tag: u64, t: i64, coord: u64) -> f64 {
    inv_normal_cdf(u01(seed, tag, t, coord))
}

/// Exp(1) draw via the inverse CDF.
#[inline]
pub fn exp1(seed: u64, tag: u64, t: i64, coord: u64) -> f64 {
    -(1.0 - u01(seed, tag, t, coord)).ln()
}

/// Inverse of the standard normal CDF (Wichura's AS 241, double precision).
pub fn inv_normal_cdf(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q * poly7(r, &A) / poly7(r, &B);
    }
    let mut r = if q < 0.0 { p } else { 1.0 - p };
    r = (-r.ln()).sqrt();
    let x = if r <= 5.0 {
        r -= 1.6;
        poly7(r, &C) / poly7(r, &D)
    } else {
        r -= 5.0;
        poly7(r, &E) / poly7(r, &F)
    };
    if q < 0.0 {
        -x
    } else {
        x
    }
}

#[inline]
fn poly7(x: f64, c: &[f64; 8]) -> f64 {
    // Horner, highest coefficient first.
    c.iter().skip(1).fold(c[0], |acc, &ci| acc * x + ci)
}

const A: [f64; 8] = [
    2.509_080_928_730_122_7e3,
    3.343_057_558_358_813e4,
    6.726_577_092_700_87e4,
    4.592_195_393_154_987e4,
    1.373_169_376_550_946_1e4,
    1.971_590_950_306_551_3e3,
    1.331_416_678_917_843_8e2,
    3.387_132_872_796_366_5,
];
const B: [f64; 8] = [
    5.226_495_278_852_545_5e3,
    2.872_908_573_572_194_3e4,
    3.930_789_580_009_271e4,
    2.121_379_430_158_659_7e4,
    5.394_196_021_424_751e3,
    6.871_870_074_920_579e2,
    4.231_333_070_160_091e1,
    1.0,
];
const C: [f64; 8] = [
    7.745_450_142_783_414e-4,
    2.272_384_498_926_918_4e-2,
    2.417_807_251_774_506e-1,
    1.270_458_252_452_368_4,
    3.647_848_324_763_204_5,
    5.769_497_221_460_691,
    4.630_337_846_156_546,
    1.423_437_110_749_683_5,
];
const D: [f64; 8] = [
    1.050_750_071_644_416_9e-9,
    5.475_938_084_995_345e-4,
    1.519_866_656_361_645_7e-2,
    1.481_039_764_274_800_8e-1,
    6.897_673_349_851e-1,
    1.676_384_830_183_803_8,
    2.053_191_626_637_758_8,
    1.0,
];
const E: [f64; 8] = [
    2.010_334_399_292_288_1e-7,
    2.711_555_568_743_487_6e-5,
    1.242_660_947_388_078_4e-3,
    2.653_218_952_657_612_4e-2,
    2.965_605_718_285_048_9e-1,
    1.784_826_539_917_291_3,
    5.463_784_911_164_114,
    6.657_904_643_501_103,
];
const F: [f64; 8] = [
    2.044_263_103_389_939_7e-15,
    1.421_511_758_316_446e-7,
    1.846_318_317_510_054_8e-5,
    7.868_691_311_456_133e-4,
    1.487_536_129_085_061_5e-2,
    1.369_298_809_227_358e-1,
    5.998_322_065_558_88e-1,
    1.0,
];
