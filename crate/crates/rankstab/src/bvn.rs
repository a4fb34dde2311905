//! Bivariate normal upper-orthant probability Pr(X > h, Y > k) for standard
//! normals with correlation rho.
//!
//! Port of the Drezner-Wesolowsky method in Genz's BVND routine: Gauss-Legendre
//! quadrature on a trigonometric substitution for |rho| <= 0.925 and a
//! near-singular expansion above. The original routine's rho < -0.925 path is
//! known to lose accuracy, so negative rho above the threshold is reduced to
//! the positive case through the reflection Pr(X>h, Y>k) = Phi(-h) - Pr(X>h, -Y>-k).

use crate::dist::normal_cdf;

// Gauss-Legendre (weight, abscissa) pairs from the BVND sources.
#[allow(clippy::excessive_precision)]
const QUAD_6: [(f64, f64); 3] = [
    (0.1713244923791705, -0.9324695142031522),
    (0.3607615730481384, -0.6612093864662647),
    (0.4679139345726904, -0.2386191860831970),
];

#[allow(clippy::excessive_precision)]
const QUAD_12: [(f64, f64); 6] = [
    (0.04717533638651177, -0.9815606342467191),
    (0.1069393259953183, -0.9041172563704750),
    (0.1600783285433464, -0.7699026741943050),
    (0.2031674267230659, -0.5873179542866171),
    (0.2334925365383547, -0.3678314989981802),
    (0.2491470458134029, -0.1252334085114692),
];

#[allow(clippy::excessive_precision)]
const QUAD_20: [(f64, f64); 10] = [
    (0.01761400713915212, -0.9931285991850949),
    (0.04060142980038694, -0.9639719272779138),
    (0.06267204833410906, -0.9122344282513259),
    (0.08327674157670475, -0.8391169718222188),
    (0.1019301198172404, -0.7463319064601508),
    (0.1181945319615184, -0.6360536807265150),
    (0.1316886384491766, -0.5108670019508271),
    (0.1420961093183821, -0.3737060887154196),
    (0.1491729864726037, -0.2277858511416451),
    (0.1527533871307259, -0.07652652113349733),
];

fn quadrature(rho_abs: f64) -> &'static [(f64, f64)] {
    if rho_abs < 0.3 {
        &QUAD_6
    } else if rho_abs < 0.75 {
        &QUAD_12
    } else {
        &QUAD_20
    }
}

/// Pr(X > h, Y > k) for standard bivariate normal (X, Y) with correlation
/// `rho` in [-1, 1].
pub fn upper_orthant(h: f64, k: f64, rho: f64) -> f64 {
    debug_assert!((-1.0..=1.0).contains(&rho), "rho = {rho}");
    if rho == 1.0 {
        return normal_cdf(-h.max(k));
    }
    if rho == -1.0 {
        return (normal_cdf(-k) - normal_cdf(h)).max(0.0);
    }
    if rho.abs() <= 0.925 {
        moderate_rho(h, k, rho)
    } else if rho > 0.0 {
        large_positive_rho(h, k, rho)
    } else {
        normal_cdf(-h) - large_positive_rho(h, -k, -rho)
    }
}

fn moderate_rho(h: f64, k: f64, rho: f64) -> f64 {
    let hk = h * k;
    let mut bvn = 0.0;
    if rho != 0.0 {
        let hs = (h * h + k * k) / 2.0;
        let asr = 0.5 * libm::asin(rho);
        for (w, x) in quadrature(rho.abs()) {
            for is in [-1.0f64, 1.0] {
                let sn = (asr * (is * x + 1.0)).sin();
                bvn += w * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
            }
        }
        bvn *= asr / (2.0 * std::f64::consts::PI);
    }
    bvn + normal_cdf(-h) * normal_cdf(-k)
}

// BVND expansion for 0.925 < rho < 1.
fn large_positive_rho(h: f64, k: f64, rho: f64) -> f64 {
    let hk = h * k;
    let mut bvn = 0.0;
    let a_s = (1.0 - rho) * (1.0 + rho);
    let mut a = a_s.sqrt();
    let b_s = (h - k) * (h - k);
    let c = (4.0 - hk) / 8.0;
    let d = (12.0 - hk) / 16.0;
    let asr = -0.5 * (b_s / a_s + hk);
    if asr > -100.0 {
        bvn = a * asr.exp() * (1.0 - c * (b_s - a_s) * (1.0 - d * b_s / 5.0) / 3.0 + c * d * a_s * a_s / 5.0);
    }
    if -hk < 100.0 {
        let b = b_s.sqrt();
        bvn -= (-0.5 * hk).exp()
            * (2.0 * std::f64::consts::PI).sqrt()
            * normal_cdf(-b / a)
            * b
            * (1.0 - c * b_s * (1.0 - d * b_s / 5.0) / 3.0);
    }
    a /= 2.0;
    for (w, x) in quadrature(rho) {
        for is in [-1.0f64, 1.0] {
            let xs = (a * (is * x + 1.0)).powi(2);
            let rs = (1.0 - xs).sqrt();
            let asr = -0.5 * (b_s / xs + hk);
            if asr > -100.0 {
                bvn += a
                    * w
                    * asr.exp()
                    * ((-hk * (1.0 - rs) / (2.0 * (1.0 + rs))).exp() / rs
                        - (1.0 + c * xs * (1.0 + d * xs)));
            }
        }
    }
    -bvn / (2.0 * std::f64::consts::PI) + normal_cdf(-h.max(k))
}
