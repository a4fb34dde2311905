//! Distribution of the Top-K-List overlap under additive Gaussian noise, via
//! the large-N saddle-point method, plus the exact finite-N overlap used by
//! the Monte-Carlo oracle.
//!
//! # Real rotation of the saddle variables
//!
//! The stationary point of the large-deviations exponent F(x, y, z, f) sits
//! at purely imaginary (y, z). The solver therefore works in the rotated
//! real coordinates u = e^{-iy} and w = e^{-i(y+z)} (equivalently eta = ln u,
//! zeta = ln w), where the three stationarity conditions become a real
//! 3-equation system in (x, u, w) with u, w > 0:
//!
//! * the tilted expected number of missed true-top objects equals alpha(1-f),
//! * the tilted expected number of missed bottom objects equals
//!   (1-alpha) - alpha(1-f),
//! * the threshold x is stationary.
//!
//! The tilted miss probability is computed as P u / (S + P u) with
//! S = 1 - P evaluated from its own erfc call, which is stable for any
//! u > 0 and avoids cancellation where P is close to 0 or 1 (the identity
//! 1 + P(u - 1) = S + P u holds exactly).
//!
//! Determinants of the second-derivative matrices in (x, eta, zeta) equal
//! those in the original (x, y, z): the coordinate change is linear with
//! Jacobian determinant -1, which squares away. They are evaluated by
//! Richardson-checked central finite differences.
//!
//! Known limitation: for Gaussian scores the quadrature support is truncated
//! at mean +- 8 standard deviations, so list fractions below roughly 1e-4
//! push the selection threshold toward the truncation edge and the segment
//! integrals lose the tail mass they are meant to balance. Fractions down to
//! 1e-4 are exercised in tests; far smaller ones are out of scope.

use crate::dist::{normal_cdf, normal_pdf, normal_sf, ScoreDistribution};
use crate::error::{Error, Result};
use crate::kendall::validate_permutation;
use crate::quad;

const REL_TOL: f64 = 1e-11;
const ABS_TOL: f64 = 1e-14;
const NEWTON_TOL: f64 = 1e-10;
const MODE_F_TOL: f64 = 1e-5;

/// A point in the rotated real saddle coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddlePoint {
    /// Selection threshold.
    pub x: f64,
    /// Tilt applied to the objects below the true top list, e^{-iy} > 0.
    pub u: f64,
    /// Tilt applied to the true top list, e^{-i(y+z)} > 0.
    pub w: f64,
}

/// A solved stationary point of the overlap exponent at fixed f.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaddleSolution {
    pub point: SaddlePoint,
    /// Overlap fraction the system was solved at.
    pub f: f64,
    /// Value of the exponent F at the saddle.
    pub exponent: f64,
    /// Determinant of the second-derivative matrix over (x, y, z).
    pub det_h: f64,
    /// Determinant of the second-derivative matrix over (x, y, z, f).
    pub det_r: f64,
    pub converged: bool,
    pub residual_norm: f64,
    pub iterations: usize,
    /// Relative agreement between the determinants at finite-difference
    /// steps h and h/2.
    pub hessian_step_check: f64,
}

/// Center and width of the Gaussian approximation to the overlap
/// distribution at one (q, sigma, alpha, N).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct OverlapMoments {
    /// Mode of the overlap distribution (minimizer of the exponent).
    pub f0: f64,
    /// Variance |H| / (N |R|).
    pub sigma2_f: f64,
    pub alpha: f64,
    pub n_objects: usize,
}

impl OverlapMoments {
    pub fn sigma_f(&self) -> f64 {
        self.sigma2_f.sqrt()
    }

    /// Mean of the [0, 1]-truncated Gaussian; differs from f0 only when the
    /// distribution presses against a boundary.
    pub fn truncated_mean(&self) -> f64 {
        let sd = self.sigma_f();
        if sd == 0.0 {
            return self.f0;
        }
        let a = (0.0 - self.f0) / sd;
        let b = (1.0 - self.f0) / sd;
        let z = normal_cdf(b) - normal_cdf(a);
        self.f0 + sd * (normal_pdf(a) - normal_pdf(b)) / z
    }
}

/// Share of the top-K lists of two rankings that coincide: a multiple of 1/K.
pub fn exact_overlap(perm_true: &[u32], perm_obs: &[u32], k: usize) -> Result<f64> {
    if perm_true.len() != perm_obs.len() {
        return Err(Error::LengthMismatch {
            left: perm_true.len(),
            right: perm_obs.len(),
        });
    }
    validate_permutation(perm_true)?;
    validate_permutation(perm_obs)?;
    let n = perm_true.len();
    if k == 0 || k > n {
        return Err(Error::KOutOfRange { k, n });
    }
    let k32 = k as u32;
    let shared = perm_true
        .iter()
        .zip(perm_obs)
        .filter(|(t, o)| **t <= k32 && **o <= k32)
        .count();
    Ok(shared as f64 / k as f64)
}

/// Smallest feasible overlap at list fraction alpha: max(0, 2 - 1/alpha)
/// (two K-subsets of N objects share at least 2K - N elements).
pub fn min_feasible_overlap(alpha: f64) -> f64 {
    (2.0 - 1.0 / alpha).max(0.0)
}

struct Context<F> {
    pdf: F,
    sigma: f64,
    alpha: f64,
    r_alpha: f64,
    a: f64,
    b: f64,
}

fn context(
    q: &ScoreDistribution,
    sigma: f64,
    alpha: f64,
) -> Result<Context<impl Fn(f64) -> f64 + '_>> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::NonPositiveSigma(sigma));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidAlpha(alpha));
    }
    let pdf = q.density_fn()?;
    let (a, b) = q.support();
    let r_alpha = q.quantile(alpha)?;
    Ok(Context {
        pdf,
        sigma,
        alpha,
        r_alpha,
        a,
        b,
    })
}

impl<F: Fn(f64) -> f64> Context<F> {
    /// Miss probability, survival and x-derivative of the miss probability
    /// at threshold x for an object of true score r.
    #[inline]
    fn kernel(&self, x: f64, r: f64) -> (f64, f64, f64) {
        let z = (x - r) / self.sigma;
        (normal_cdf(z), normal_sf(z), normal_pdf(z) / self.sigma)
    }

    fn split(&self, f: impl Fn(f64) -> f64, lo: f64, hi: f64, x: f64) -> Result<f64> {
        let s = self.sigma;
        quad::integrate_split(f, lo, hi, &[x - 8.0 * s, x, x + 8.0 * s], REL_TOL, ABS_TOL)
    }

    /// Expected tilted number (as a q-fraction) of missed objects in [lo, hi].
    fn tilted_miss(&self, x: f64, tilt: f64, lo: f64, hi: f64) -> Result<f64> {
        self.split(
            |r| {
                let (p, s, _) = self.kernel(x, r);
                (self.pdf)(r) * p * tilt / (s + p * tilt)
            },
            lo,
            hi,
            x,
        )
    }

    /// Threshold-stationarity integrand over [lo, hi].
    fn threshold_term(&self, x: f64, tilt: f64, lo: f64, hi: f64) -> Result<f64> {
        self.split(
            |r| {
                let (p, s, px) = self.kernel(x, r);
                (self.pdf)(r) * px * (tilt - 1.0) / (s + p * tilt)
            },
            lo,
            hi,
            x,
        )
    }

    /// q-mass of selected objects in [lo, hi] at threshold x (no tilt).
    fn selected_mass(&self, x: f64, lo: f64, hi: f64) -> Result<f64> {
        self.split(
            |r| {
                let (_, s, _) = self.kernel(x, r);
                (self.pdf)(r) * s
            },
            lo,
            hi,
            x,
        )
    }

    fn log_mass(&self, x: f64, tilt: f64, lo: f64, hi: f64) -> Result<f64> {
        self.split(
            |r| {
                let (p, s, _) = self.kernel(x, r);
                (self.pdf)(r) * (s + p * tilt).ln()
            },
            lo,
            hi,
            x,
        )
    }

    fn residual(&self, f: f64, x: f64, u: f64, w: f64) -> Result<[f64; 3]> {
        let m_top = self.tilted_miss(x, w, self.r_alpha, self.b)?;
        let m_bot = self.tilted_miss(x, u, self.a, self.r_alpha)?;
        let d_top = self.threshold_term(x, w, self.r_alpha, self.b)?;
        let d_bot = self.threshold_term(x, u, self.a, self.r_alpha)?;
        Ok([
            m_top - self.alpha * (1.0 - f),
            m_bot - (1.0 - self.alpha - self.alpha * (1.0 - f)),
            d_top + d_bot,
        ])
    }

    /// The exponent F in the rotated real coordinates (x, eta, zeta).
    fn exponent(&self, f: f64, x: f64, eta: f64, zeta: f64) -> Result<f64> {
        let u = eta.exp();
        let w = zeta.exp();
        let top = self.log_mass(x, w, self.r_alpha, self.b)?;
        let bot = self.log_mass(x, u, self.a, self.r_alpha)?;
        let af = self.alpha * (1.0 - f);
        Ok((1.0 - self.alpha - af) * eta + af * zeta - top - bot)
    }

    /// Threshold of the large-sigma (untilted) configuration: x with
    /// Pr(noisy score > x) = alpha, i.e. the upper-alpha quantile of the
    /// noisy marginal. Monotone bisection.
    fn noisy_threshold(&self) -> Result<f64> {
        let g = |x: f64| -> Result<f64> { Ok(self.selected_mass(x, self.a, self.b)? - self.alpha) };
        let mut lo = self.r_alpha;
        let mut hi = self.r_alpha;
        let mut step = (self.sigma + (self.b - self.a) / 64.0).max(1e-12);
        for _ in 0..80 {
            if g(lo)? > 0.0 {
                break;
            }
            lo -= step;
            step *= 1.7;
        }
        step = (self.sigma + (self.b - self.a) / 64.0).max(1e-12);
        for _ in 0..80 {
            if g(hi)? < 0.0 {
                break;
            }
            hi += step;
            step *= 1.7;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(mid)? > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Tilt-free mode: at the exponent's minimum over f the tilts coincide
    /// (z = 0) and drop to u = w = 1, leaving f0 = (selected top mass) / alpha
    /// at the noisy-marginal threshold. Used to seed and bracket the search.
    fn mode_candidate(&self) -> Result<(f64, f64)> {
        let x = self.noisy_threshold()?;
        let f0 = self.selected_mass(x, self.r_alpha, self.b)? / self.alpha;
        Ok((x, f0.clamp(0.0, 1.0)))
    }

    /// Solve the scalar monotone equation tilted_miss(x, e^eta) = target for
    /// eta over a segment, by grid bracketing plus bisection.
    fn tilt_for_target(&self, x: f64, target: f64, lo: f64, hi: f64) -> Result<f64> {
        let g = |eta: f64| -> Result<f64> { Ok(self.tilted_miss(x, eta.exp(), lo, hi)? - target) };
        let mut prev_eta = -45.0;
        let mut prev = g(prev_eta)?;
        let mut bracket = None;
        let mut eta = prev_eta;
        while eta < 45.0 {
            eta += 3.0;
            let cur = g(eta)?;
            if prev <= 0.0 && cur >= 0.0 {
                bracket = Some((prev_eta, eta));
                break;
            }
            prev_eta = eta;
            prev = cur;
        }
        let (mut elo, mut ehi) = bracket.ok_or(Error::SaddleNonConvergence {
            best_residual: prev.abs(),
            iterations: 0,
        })?;
        for _ in 0..90 {
            let mid = 0.5 * (elo + ehi);
            if g(mid)? > 0.0 {
                ehi = mid;
            } else {
                elo = mid;
            }
        }
        Ok(0.5 * (elo + ehi))
    }

    /// Damped Newton with a numerically differenced Jacobian and backtracking
    /// line search on the residual norm, in coordinates (x, eta, zeta).
    fn newton(&self, f: f64, start: [f64; 3]) -> Result<([f64; 3], f64, usize)> {
        let res = |v: &[f64; 3]| -> Result<[f64; 3]> {
            self.residual(f, v[0], v[1].exp(), v[2].exp())
        };
        let norm = |r: &[f64; 3]| (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();

        let mut v = start;
        let mut r = res(&v)?;
        let mut best = (v, norm(&r));
        for iter in 0..60 {
            let n0 = norm(&r);
            if n0 < best.1 {
                best = (v, n0);
            }
            if n0 <= NEWTON_TOL {
                return Ok((v, n0, iter));
            }
            // central-difference Jacobian
            let mut jac = [[0.0f64; 3]; 3];
            for (j, col) in jac.iter_mut().enumerate() {
                let h = 1e-6 * v[j].abs().max(1e-3);
                let mut vp = v;
                let mut vm = v;
                vp[j] += h;
                vm[j] -= h;
                let rp = res(&vp)?;
                let rm = res(&vm)?;
                for i in 0..3 {
                    col[i] = (rp[i] - rm[i]) / (2.0 * h);
                }
            }
            // jac is stored column-major above; transpose into row form
            let m = [
                [jac[0][0], jac[1][0], jac[2][0]],
                [jac[0][1], jac[1][1], jac[2][1]],
                [jac[0][2], jac[1][2], jac[2][2]],
            ];
            let step = solve3(m, [-r[0], -r[1], -r[2]]).ok_or(Error::SingularJacobian {
                residual: n0,
            })?;
            let mut t = 1.0;
            let mut advanced = false;
            for _ in 0..30 {
                let vt = [v[0] + t * step[0], v[1] + t * step[1], v[2] + t * step[2]];
                match res(&vt) {
                    Ok(rt) if norm(&rt) < (1.0 - 1e-4 * t) * n0 => {
                        v = vt;
                        r = rt;
                        advanced = true;
                        break;
                    }
                    _ => t *= 0.5,
                }
            }
            if !advanced {
                return Err(Error::SaddleNonConvergence {
                    best_residual: best.1,
                    iterations: iter,
                });
            }
        }
        let n = norm(&r);
        if n <= NEWTON_TOL {
            Ok((v, n, 60))
        } else {
            Err(Error::SaddleNonConvergence {
                best_residual: best.1.min(n),
                iterations: 60,
            })
        }
    }

    /// Full solve at fixed f: direct Newton from a constructed start, with a
    /// noise-homotopy fallback for stiff (small sigma) parameters.
    fn solve(&self, f: f64, warm: Option<[f64; 3]>) -> Result<([f64; 3], f64, usize)> {
        if let Some(start) = warm {
            if let Ok(done) = self.newton(f, start) {
                return Ok(done);
            }
        }
        match self.initial_point(f).and_then(|s| self.newton(f, s)) {
            Ok(done) => Ok(done),
            Err(first_err) => self.sigma_homotopy(f).or(Err(first_err)),
        }
    }

    fn initial_point(&self, f: f64) -> Result<[f64; 3]> {
        let x0 = self.noisy_threshold()?;
        let target_top = self.alpha * (1.0 - f);
        let target_bot = 1.0 - self.alpha - target_top;
        let zeta0 = self.tilt_for_target(x0, target_top, self.r_alpha, self.b)?;
        let eta0 = self.tilt_for_target(x0, target_bot, self.a, self.r_alpha)?;
        Ok([x0, eta0, zeta0])
    }

    fn sigma_homotopy(&self, f: f64) -> Result<([f64; 3], f64, usize)> {
        let sigma_hi = (self.b - self.a).max(2.0 * self.sigma);
        let steps = 10;
        let mut v: Option<[f64; 3]> = None;
        let mut last = Err(Error::SaddleNonConvergence {
            best_residual: f64::INFINITY,
            iterations: 0,
        });
        for k in 0..=steps {
            let sigma_k = if k == steps {
                self.sigma
            } else {
                sigma_hi * (self.sigma / sigma_hi).powf(k as f64 / steps as f64)
            };
            let stage = Context {
                pdf: &self.pdf,
                sigma: sigma_k,
                alpha: self.alpha,
                r_alpha: self.r_alpha,
                a: self.a,
                b: self.b,
            };
            let start = match v {
                Some(s) => s,
                None => stage.initial_point(f)?,
            };
            last = stage.newton(f, start);
            match &last {
                Ok((sol, _, _)) => v = Some(*sol),
                Err(_) => break,
            }
        }
        last
    }

    /// Determinants of the second-derivative matrices of the exponent over
    /// (x, eta, zeta) and (x, eta, zeta, f), by Richardson-extrapolated
    /// central differences. Returns (det_h, det_r, step_agreement).
    fn hessian_dets(&self, f: f64, v: [f64; 3]) -> Result<(f64, f64, f64)> {
        let h4_full = self.hessian4(f, v, 1e-4)?;
        let h4_half = self.hessian4(f, v, 5e-5)?;
        let mut h4_rich = [[0.0f64; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                h4_rich[i][j] = (4.0 * h4_half[i][j] - h4_full[i][j]) / 3.0;
            }
        }
        let det_h = det3([
            [h4_rich[0][0], h4_rich[0][1], h4_rich[0][2]],
            [h4_rich[1][0], h4_rich[1][1], h4_rich[1][2]],
            [h4_rich[2][0], h4_rich[2][1], h4_rich[2][2]],
        ]);
        let det_r = det4(h4_rich);
        let det_h_full = det3([
            [h4_full[0][0], h4_full[0][1], h4_full[0][2]],
            [h4_full[1][0], h4_full[1][1], h4_full[1][2]],
            [h4_full[2][0], h4_full[2][1], h4_full[2][2]],
        ]);
        let det_h_half = det3([
            [h4_half[0][0], h4_half[0][1], h4_half[0][2]],
            [h4_half[1][0], h4_half[1][1], h4_half[1][2]],
            [h4_half[2][0], h4_half[2][1], h4_half[2][2]],
        ]);
        let check_h = (det_h_full - det_h_half).abs() / det_h_half.abs().max(1e-300);
        let check_r =
            (det4(h4_full) - det4(h4_half)).abs() / det4(h4_half).abs().max(1e-300);
        Ok((det_h, det_r, check_h.max(check_r)))
    }

    fn hessian4(&self, f: f64, v: [f64; 3], rel: f64) -> Result<[[f64; 4]; 4]> {
        let p0 = [v[0], v[1], v[2], f];
        let step: Vec<f64> = p0.iter().map(|c| rel * c.abs().max(1.0)).collect();
        let eval = |p: &[f64; 4]| -> Result<f64> { self.exponent(p[3], p[0], p[1], p[2]) };
        let f0 = eval(&p0)?;
        let mut h = [[0.0f64; 4]; 4];
        for i in 0..4 {
            let mut pp = p0;
            let mut pm = p0;
            pp[i] += step[i];
            pm[i] -= step[i];
            h[i][i] = (eval(&pp)? - 2.0 * f0 + eval(&pm)?) / (step[i] * step[i]);
        }
        for i in 0..4 {
            for j in (i + 1)..4 {
                let mut pp = p0;
                pp[i] += step[i];
                pp[j] += step[j];
                let mut pm = p0;
                pm[i] += step[i];
                pm[j] -= step[j];
                let mut mp = p0;
                mp[i] -= step[i];
                mp[j] += step[j];
                let mut mm = p0;
                mm[i] -= step[i];
                mm[j] -= step[j];
                let val = (eval(&pp)? - eval(&pm)? - eval(&mp)? + eval(&mm)?)
                    / (4.0 * step[i] * step[j]);
                h[i][j] = val;
                h[j][i] = val;
            }
        }
        Ok(h)
    }
}

#[allow(clippy::needless_range_loop)]
fn solve3(m: [[f64; 3]; 3], rhs: [f64; 3]) -> Option<[f64; 3]> {
    let mut a = [
        [m[0][0], m[0][1], m[0][2], rhs[0]],
        [m[1][0], m[1][1], m[1][2], rhs[1]],
        [m[2][0], m[2][1], m[2][2], rhs[2]],
    ];
    for col in 0..3 {
        let pivot = (col..3).max_by(|i, j| a[*i][col].abs().total_cmp(&a[*j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        for row in (col + 1)..3 {
            let fac = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= fac * a[col][k];
            }
        }
    }
    let mut x = [0.0f64; 3];
    for row in (0..3).rev() {
        let mut s = a[row][3];
        for k in (row + 1)..3 {
            s -= a[row][k] * x[k];
        }
        x[row] = s / a[row][row];
    }
    if x.iter().all(|v| v.is_finite()) {
        Some(x)
    } else {
        None
    }
}

fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

#[allow(clippy::needless_range_loop)]
fn det4(m: [[f64; 4]; 4]) -> f64 {
    let mut a = m;
    let mut det = 1.0;
    for col in 0..4 {
        let pivot = (col..4)
            .max_by(|i, j| a[*i][col].abs().total_cmp(&a[*j][col].abs()))
            .unwrap();
        if a[pivot][col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            a.swap(col, pivot);
            det = -det;
        }
        det *= a[col][col];
        for row in (col + 1)..4 {
            let fac = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= fac * a[col][k];
            }
        }
    }
    det
}

fn check_inputs(sigma: f64, alpha: f64, f: Option<f64>) -> Result<()> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::NonPositiveSigma(sigma));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidAlpha(alpha));
    }
    if let Some(f) = f {
        let min = min_feasible_overlap(alpha);
        if !(f > min && f < 1.0) {
            return Err(Error::InfeasibleOverlap { f, alpha, min });
        }
    }
    Ok(())
}

/// Evaluate the three stationarity residuals at an arbitrary point.
pub fn saddle_residual(
    q: &ScoreDistribution,
    sigma: f64,
    alpha: f64,
    f: f64,
    point: SaddlePoint,
) -> Result<[f64; 3]> {
    check_inputs(sigma, alpha, Some(f))?;
    if !(point.u > 0.0) || !(point.w > 0.0) {
        return Err(Error::InvalidTilt(point.u.min(point.w)));
    }
    let ctx = context(q, sigma, alpha)?;
    ctx.residual(f, point.x, point.u, point.w)
}

/// Solve the stationarity system at fixed overlap `f` and evaluate the
/// exponent and its second-derivative determinants there.
pub fn solve_saddle(
    q: &ScoreDistribution,
    sigma: f64,
    alpha: f64,
    f: f64,
) -> Result<SaddleSolution> {
    check_inputs(sigma, alpha, Some(f))?;
    let ctx = context(q, sigma, alpha)?;
    let (v, rnorm, iters) = ctx.solve(f, None)?;
    let exponent = ctx.exponent(f, v[0], v[1], v[2])?;
    let (det_h, det_r, check) = ctx.hessian_dets(f, v)?;
    Ok(SaddleSolution {
        point: SaddlePoint {
            x: v[0],
            u: v[1].exp(),
            w: v[2].exp(),
        },
        f,
        exponent,
        det_h,
        det_r,
        converged: rnorm <= 1e-9,
        residual_norm: rnorm,
        iterations: iters,
        hessian_step_check: check,
    })
}

/// Most probable overlap f0: the minimizer of the exponent over f.
///
/// The tilt-free candidate (u = w = 1 at the noisy-marginal threshold) pins
/// the mode analytically; a golden-section minimization of the solved
/// exponent around it then confirms and polishes the value to 1e-5 in f.
pub fn mode_overlap(q: &ScoreDistribution, sigma: f64, alpha: f64) -> Result<f64> {
    check_inputs(sigma, alpha, None)?;
    let ctx = context(q, sigma, alpha)?;
    let (x_star, f_candidate) = ctx.mode_candidate()?;
    let f_min = min_feasible_overlap(alpha);

    let warm = [x_star, 0.0, 0.0];
    let mut half_width = 2e-3;
    for _ in 0..8 {
        let lo = (f_candidate - half_width).max(f_min + 1e-9);
        let hi = (f_candidate + half_width).min(1.0 - 1e-9);
        let g = |f: f64| -> Result<f64> {
            let (v, _, _) = ctx.solve(f, Some(warm))?;
            ctx.exponent(f, v[0], v[1], v[2])
        };
        let (argmin, at_edge) = golden_min(&g, lo, hi, MODE_F_TOL)?;
        if !at_edge {
            return Ok(argmin);
        }
        half_width *= 4.0;
    }
    Err(Error::SaddleNonConvergence {
        best_residual: f64::NAN,
        iterations: 0,
    })
}

/// Golden-section minimization; also reports whether the minimizer pressed
/// against a bracket edge.
fn golden_min(
    g: &impl Fn(f64) -> Result<f64>,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Result<(f64, bool)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (lo0, hi0) = (lo, hi);
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut gc = g(c)?;
    let mut gd = g(d)?;
    while hi - lo > tol {
        if gc <= gd {
            hi = d;
            d = c;
            gd = gc;
            c = hi - INV_PHI * (hi - lo);
            gc = g(c)?;
        } else {
            lo = c;
            c = d;
            gc = gd;
            d = lo + INV_PHI * (hi - lo);
            gd = g(d)?;
        }
    }
    let argmin = 0.5 * (lo + hi);
    let at_edge = argmin - lo0 < 2.0 * tol || hi0 - argmin < 2.0 * tol;
    Ok((argmin, at_edge))
}

/// Mode and saddle-point variance of the overlap at N objects.
pub fn overlap_moments(
    q: &ScoreDistribution,
    sigma: f64,
    alpha: f64,
    n_objects: usize,
) -> Result<OverlapMoments> {
    if n_objects < 2 {
        return Err(Error::TooFewObjects {
            needed: 2,
            got: n_objects,
        });
    }
    let f0 = mode_overlap(q, sigma, alpha)?;
    let ctx = context(q, sigma, alpha)?;
    let (x_star, _) = ctx.mode_candidate()?;
    let (v, _, _) = ctx.solve(f0, Some([x_star, 0.0, 0.0]))?;
    let (det_h, det_r, _) = ctx.hessian_dets(f0, v)?;

    // conditioning guard: compare against the Hadamard bound of the 4x4
    let h4 = ctx.hessian4(f0, v, 1e-4)?;
    let hadamard: f64 = h4
        .iter()
        .map(|row| row.iter().map(|x| x * x).sum::<f64>().sqrt())
        .product();
    if det_r.abs() < 1e-12 * hadamard.max(1e-300) || det_h == 0.0 {
        return Err(Error::NearSingularHessian {
            det_h,
            det_r,
            conditioning: det_r.abs() / hadamard.max(1e-300),
        });
    }
    Ok(OverlapMoments {
        f0,
        sigma2_f: det_h.abs() / (n_objects as f64 * det_r.abs()),
        alpha,
        n_objects,
    })
}

/// Variance of the overlap's Gaussian approximation, |H| / (N |R|).
pub fn overlap_variance(
    q: &ScoreDistribution,
    sigma: f64,
    alpha: f64,
    n_objects: usize,
) -> Result<f64> {
    Ok(overlap_moments(q, sigma, alpha, n_objects)?.sigma2_f)
}

fn truncated_normal_mass(f0: f64, sd: f64) -> f64 {
    normal_cdf((1.0 - f0) / sd) - normal_cdf((0.0 - f0) / sd)
}

/// Density of the overlap's Gaussian approximation, truncated to [0, 1] and
/// renormalized.
pub fn overlap_pdf(
    q: &ScoreDistribution,
    sigma: f64,
    alpha: f64,
    n_objects: usize,
    f: f64,
) -> Result<f64> {
    let m = overlap_moments(q, sigma, alpha, n_objects)?;
    Ok(overlap_pdf_from_moments(&m, f))
}

/// Same density, reusing precomputed moments.
pub fn overlap_pdf_from_moments(m: &OverlapMoments, f: f64) -> f64 {
    if !(0.0..=1.0).contains(&f) {
        return 0.0;
    }
    let sd = m.sigma_f();
    normal_pdf((f - m.f0) / sd) / (sd * truncated_normal_mass(m.f0, sd))
}

/// Pr(f >= 1 - epsilon) under the truncated Gaussian approximation.
pub fn overlap_reliability(
    q: &ScoreDistribution,
    sigma: f64,
    alpha: f64,
    n_objects: usize,
    epsilon: f64,
) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidFraction(epsilon));
    }
    if epsilon >= 1.0 {
        return Ok(1.0);
    }
    let m = overlap_moments(q, sigma, alpha, n_objects)?;
    Ok(overlap_reliability_from_moments(&m, epsilon))
}

/// Same reliability, reusing precomputed moments.
pub fn overlap_reliability_from_moments(m: &OverlapMoments, epsilon: f64) -> f64 {
    if epsilon >= 1.0 {
        return 1.0;
    }
    let threshold = 1.0 - epsilon;
    let sd = m.sigma_f();
    if sd == 0.0 {
        return if m.f0 >= threshold { 1.0 } else { 0.0 };
    }
    let z = truncated_normal_mass(m.f0, sd);
    let above = normal_cdf((1.0 - m.f0) / sd) - normal_cdf((threshold - m.f0) / sd);
    (above / z).clamp(0.0, 1.0)
}
