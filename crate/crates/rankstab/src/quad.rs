//! One-dimensional quadrature: an adaptive 21-point Gauss-Kronrod integrator
//! and Gauss-Legendre rules of arbitrary order for tensor-product grids.

use crate::error::{Error, Result};

/// Default relative tolerance for the adaptive integrator.
pub const DEFAULT_REL_TOL: f64 = 1e-8;

// 21-point Kronrod abscissae (positive half), interleaved with the embedded
// 10-point Gauss rule at the odd indices. Standard QUADPACK values.
#[allow(clippy::excessive_precision)]
const XGK21: [f64; 11] = [
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
    0.000_000_000_000_000_000_000_000_000_000_000,
];

#[allow(clippy::excessive_precision)]
const WG10: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK21: [f64; 11] = [
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

/// One Gauss-Kronrod panel: returns (integral, error estimate).
fn kronrod_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let f_center = f(center);
    let mut gauss = 0.0;
    let mut kronrod = f_center * WGK21[10];
    let mut res_abs = kronrod.abs();
    let mut fv = [0.0f64; 20];

    for (j, wg) in WG10.iter().enumerate() {
        let jtw = 2 * j + 1;
        let x = half * XGK21[jtw];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv[jtw] = f1;
        fv[10 + jtw] = f2;
        gauss += wg * (f1 + f2);
        kronrod += WGK21[jtw] * (f1 + f2);
        res_abs += WGK21[jtw] * (f1.abs() + f2.abs());
    }
    for j in 0..5 {
        let jtwm1 = 2 * j;
        let x = half * XGK21[jtwm1];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv[jtwm1] = f1;
        fv[10 + jtwm1] = f2;
        kronrod += WGK21[jtwm1] * (f1 + f2);
        res_abs += WGK21[jtwm1] * (f1.abs() + f2.abs());
    }

    let mean = kronrod * 0.5;
    let mut res_asc = WGK21[10] * (f_center - mean).abs();
    for j in 0..10 {
        res_asc += WGK21[j] * ((fv[j] - mean).abs() + (fv[10 + j] - mean).abs());
    }

    let raw_err = ((kronrod - gauss) * half).abs();
    res_abs *= half.abs();
    res_asc *= half.abs();

    // QUADPACK error rescaling
    let mut err = raw_err;
    if res_asc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / res_asc).powf(1.5);
        err = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }

    (kronrod * half, err)
}

/// Adaptive Gauss-Kronrod integration of `f` over `[a, b]`.
///
/// Bisects the interval with the largest error estimate until the summed
/// error falls below `max(abs_tol, rel_tol * |integral|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    const MAX_PANELS: usize = 4096;

    let mut panels: Vec<(f64, f64, f64, f64)> = Vec::with_capacity(64);
    let (v, e) = kronrod_panel(&f, a, b);
    panels.push((a, b, v, e));

    loop {
        let total: f64 = panels.iter().map(|p| p.2).sum();
        let err: f64 = panels.iter().map(|p| p.3).sum();
        let target = abs_tol.max(rel_tol * total.abs());
        if err <= target {
            return Ok(total);
        }
        if panels.len() >= MAX_PANELS {
            return Err(Error::QuadratureNonConvergence {
                estimate: total,
                error: err,
            });
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .unwrap();
        let (lo, hi, value, _) = panels.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // interval exhausted at machine precision: retire its error so
            // the loop cannot revisit it
            panels.push((lo, hi, value, 0.0));
            continue;
        }
        panels.push({
            let (v, e) = kronrod_panel(&f, lo, mid);
            (lo, mid, v, e)
        });
        panels.push({
            let (v, e) = kronrod_panel(&f, mid, hi);
            (mid, hi, v, e)
        });
    }
}

/// Integrate over `[a, b]` split at the given interior breakpoints.
///
/// Used when the integrand has a known sharp feature (e.g. a noise-width
/// transition) that plain adaptivity could overlook on a wide interval.
pub fn integrate_split<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    rel_tol: f64,
    abs_tol: f64,
) -> Result<f64> {
    if a >= b {
        return Ok(0.0);
    }
    let mut edges = vec![a];
    let mut sorted: Vec<f64> = breaks.iter().copied().filter(|p| *p > a && *p < b).collect();
    sorted.sort_by(f64::total_cmp);
    edges.extend(sorted);
    edges.push(b);

    let mut total = 0.0;
    for pair in edges.windows(2) {
        total += integrate(&f, pair[0], pair[1], rel_tol, abs_tol / edges.len() as f64)?;
    }
    Ok(total)
}

/// Gauss-Legendre rule of order `n` on `[-1, 1]`: (nodes, weights).
///
/// Nodes are Legendre roots found by Newton iteration on the three-term
/// recurrence; accurate to machine precision for the orders used here.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Map a `[-1, 1]` node to `[a, b]`, together with the weight scale factor.
#[inline]
pub fn scale_node(t: f64, a: f64, b: f64) -> (f64, f64) {
    (a + 0.5 * (b - a) * (t + 1.0), 0.5 * (b - a))
}
