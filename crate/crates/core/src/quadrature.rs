//! Adaptive Gauss-Kronrod (10/21-point) integration on finite intervals.

#![allow(clippy::excessive_precision)]

use crate::error::{Error, Result};
use crate::scalar::Real;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_depth: u32,
    /// Equal-width panels each interval is split into before adapting.
    pub initial_panels: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 1e-12,
            rel: 1e-12,
            max_depth: 30,
            initial_panels: 8,
        }
    }
}

struct Panel<T> {
    lo: T,
    hi: T,
    value: T,
    error: T,
    depth: u32,
    /// Error estimate is at the rounding level of the integrand.
    settled: bool,
}

fn kronrod<T: Real, F: FnMut(T) -> T>(f: &mut F, lo: T, hi: T, depth: u32) -> Panel<T> {
    let half = (hi - lo) / T::two();
    let mid = (lo + hi) / T::two();
    let fc = f(mid);
    let mut kron = fc * T::lit(WGK[10]);
    let mut gauss = T::zero();
    let mut mass = fc.abs() * T::lit(WGK[10]);
    for i in 0..10 {
        let x = half * T::lit(XGK[i]);
        let (l, r) = (f(mid - x), f(mid + x));
        kron = kron + (l + r) * T::lit(WGK[i]);
        mass = mass + (l.abs() + r.abs()) * T::lit(WGK[i]);
        if i % 2 == 1 {
            gauss = gauss + (l + r) * T::lit(WG[i / 2]);
        }
    }
    let half = half.abs();
    let error = ((kron - gauss) * half).abs();
    let floor = T::lit(50.0) * T::epsilon() * mass * half;
    Panel {
        lo,
        hi,
        value: kron * half * (hi - lo).signum(),
        error,
        depth,
        settled: error <= floor,
    }
}

/// Integrates `f` over `[a, b]`.
///
/// The interval is first cut into `tol.initial_panels` equal panels; the
/// panel with the largest Kronrod error estimate is then bisected until the
/// summed estimate meets `max(abs, rel * |estimate|)`. Panels at
/// `tol.max_depth` bisections or at the rounding level of the integrand are
/// not split further.
pub fn integrate<T: Real, F: FnMut(T) -> T>(mut f: F, a: T, b: T, tol: &Tolerance) -> Result<T> {
    if a == b {
        return Ok(T::zero());
    }
    let n = tol.initial_panels.max(1);
    let width = (b - a) / T::from_usize(n).unwrap();
    let mut panels: Vec<Panel<T>> = (0..n)
        .map(|i| {
            let lo = a + width * T::from_usize(i).unwrap();
            let hi = if i + 1 == n { b } else { lo + width };
            kronrod(&mut f, lo, hi, 0)
        })
        .collect();
    loop {
        let total = panels.iter().fold(T::zero(), |acc, p| acc + p.value);
        let error = panels
            .iter()
            .filter(|p| !p.settled)
            .fold(T::zero(), |acc, p| acc + p.error);
        let target = T::lit(tol.abs).max(T::lit(tol.rel) * total.abs());
        if !total.is_finite() || !error.is_finite() {
            return Err(Error::Accuracy {
                achieved: f64::NAN,
                requested: target.to_f64_lossy(),
            });
        }
        if error <= target {
            return Ok(total);
        }
        let worst = panels
            .iter()
            .enumerate()
            .filter(|(_, p)| !p.settled && p.depth < tol.max_depth)
            .max_by(|x, y| x.1.error.partial_cmp(&y.1.error).unwrap())
            .map(|(i, _)| i);
        let Some(i) = worst else {
            return Err(Error::Accuracy {
                achieved: error.to_f64_lossy(),
                requested: target.to_f64_lossy(),
            });
        };
        let p = panels.swap_remove(i);
        let mid = (p.lo + p.hi) / T::two();
        panels.push(kronrod(&mut f, p.lo, mid, p.depth + 1));
        panels.push(kronrod(&mut f, mid, p.hi, p.depth + 1));
    }
}
