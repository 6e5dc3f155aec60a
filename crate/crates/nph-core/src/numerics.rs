//! Numerical kernel: standard normal CDF/quantile, relative efficiency,
//! exact step-function integration, bisection root-finding, and
//! reproducible per-stream random number generation.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};

/// Two-sided 97.5% standard normal quantile used for 95% confidence intervals.
pub const CI_Z: f64 = 1.959964;

// ── Standard normal ─────────────────────────────────────────────────────────

/// Standard normal CDF Φ(x), evaluated through `erfc` for full double
/// precision in both tails.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal density φ(x).
pub fn std_normal_pdf(x: f64) -> f64 {
    const INV_SQRT_2PI: f64 = 0.3989422804014327;
    (-0.5 * x * x).exp() * INV_SQRT_2PI
}

/// Standard normal quantile Φ⁻¹(p) for p in (0, 1).
///
/// Rational approximation (Acklam) refined with a single Newton step on
/// `std_normal_cdf`, which brings the absolute error well below 1e-9.
///
/// ```
/// use nph_core::numerics::std_normal_quantile;
///
/// assert_eq!(std_normal_quantile(0.5).unwrap(), 0.0);
/// assert!((std_normal_quantile(0.975).unwrap() - 1.959964).abs() < 1e-6);
/// ```
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "quantile probability must be in (0, 1), got {p}"
        )));
    }

    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.38357751867269e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };

    // One Newton refinement against the erfc-based CDF.
    let err = std_normal_cdf(x) - p;
    Ok(x - err / std_normal_pdf(x))
}

/// Relative efficiency of a power deficit, expressed as the sample-size
/// inflation ((Φ⁻¹(1−α) + Φ⁻¹(power_ref)) / (Φ⁻¹(1−α) + Φ⁻¹(power_alt)))².
pub fn relative_efficiency(power_ref: f64, power_alt: f64, alpha_one_sided: f64) -> Result<f64> {
    for (name, v) in [
        ("power_ref", power_ref),
        ("power_alt", power_alt),
        ("alpha_one_sided", alpha_one_sided),
    ] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "{name} must be in (0, 1), got {v}"
            )));
        }
    }
    let z_alpha = std_normal_quantile(1.0 - alpha_one_sided)?;
    let denom = z_alpha + std_normal_quantile(power_alt)?;
    if denom <= 0.0 {
        return Err(Error::PowerTooLow);
    }
    let num = z_alpha + std_normal_quantile(power_ref)?;
    Ok((num / denom).powi(2))
}

// ── Step functions ──────────────────────────────────────────────────────────

/// Borrowed view of a right-continuous piecewise-constant function.
///
/// The function equals `initial` on [0, times[0]) and `values[i]` on
/// [times[i], times[i+1]). `support_end` bounds the region where evaluation
/// and integration are meaningful.
#[derive(Debug, Clone, Copy)]
pub struct StepFunction<'a> {
    pub initial: f64,
    pub times: &'a [f64],
    pub values: &'a [f64],
    pub support_end: f64,
}

impl StepFunction<'_> {
    /// Value at `t` (right-continuous).
    pub fn value_at(&self, t: f64) -> f64 {
        match self.times.partition_point(|&x| x <= t) {
            0 => self.initial,
            i => self.values[i - 1],
        }
    }

    /// Left limit at `t`: the value just before `t`.
    pub fn value_before(&self, t: f64) -> f64 {
        match self.times.partition_point(|&x| x < t) {
            0 => self.initial,
            i => self.values[i - 1],
        }
    }

    /// Exact integral over [a, b]. Errors when the bounds leave the support.
    pub fn integrate(&self, a: f64, b: f64) -> Result<f64> {
        if !(0.0 <= a && a <= b) || b > self.support_end {
            return Err(Error::OutsideSupport {
                a,
                b,
                support_end: self.support_end,
            });
        }
        let mut total = 0.0;
        let mut left = a;
        let mut value = self.value_at(a);
        for (&t, &v) in self.times.iter().zip(self.values) {
            if t <= left {
                continue;
            }
            if t >= b {
                break;
            }
            total += value * (t - left);
            left = t;
            value = v;
        }
        total += value * (b - left);
        Ok(total)
    }
}

/// Exact area under a piecewise-constant function on [a, b].
pub fn integrate_step(f: &StepFunction<'_>, a: f64, b: f64) -> Result<f64> {
    f.integrate(a, b)
}

// ── Root finding ────────────────────────────────────────────────────────────

/// Bisection on a scalar function with a sign change over [lo, hi].
///
/// Stops when |f(x)| ≤ tol or the bracket width drops below tol.
pub fn find_root<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let (mut lo, mut hi) = (lo, hi);
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoSignChange { lo, hi });
    }
    loop {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid.abs() <= tol || hi - lo <= tol {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
}

// ── Random streams ──────────────────────────────────────────────────────────

/// Deterministic random stream identified by (seed, stream_id).
///
/// Identical identifiers reproduce identical draws on every platform, and
/// distinct stream ids give independent sequences, so simulated trial `i`
/// can own stream `i` and aggregation stays independent of execution order.
#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha12Rng,
    seed: u64,
    stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self {
            rng,
            seed,
            stream_id,
        }
    }

    /// Uniform draw on the open interval (0, 1).
    pub fn uniform_open01(&mut self) -> f64 {
        self.rng.sample(Open01)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const Z_975: f64 = 1.959964;

    /// Adaptive Simpson quadrature of the normal density, used as the
    /// independent oracle for the CDF.
    fn phi_by_quadrature(x: f64) -> f64 {
        fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
            (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
        }
        fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, eps: f64) -> f64 {
            let m = 0.5 * (a + b);
            let left = simpson(f, a, m);
            let right = simpson(f, m, b);
            if (left + right - whole).abs() < 15.0 * eps {
                left + right + (left + right - whole) / 15.0
            } else {
                adaptive(f, a, m, left, eps / 2.0) + adaptive(f, m, b, right, eps / 2.0)
            }
        }
        // φ is symmetric, so Φ(x) = 0.5 + sign(x)·∫₀^|x| φ.
        let f = |t: f64| std_normal_pdf(t);
        let tail = adaptive(&f, 0.0, x.abs(), simpson(&f, 0.0, x.abs()), 1e-13);
        0.5 + tail * x.signum()
    }

    #[test]
    fn cdf_at_zero_is_half() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
    }

    #[test]
    fn cdf_matches_quadrature_oracle() {
        // Oracle: adaptive numerical integration of the density.
        for &x in &[Z_975, -Z_975, 0.5, 1.0, -2.3, 3.7] {
            let oracle = phi_by_quadrature(x);
            assert!(
                (std_normal_cdf(x) - oracle).abs() < 1e-10,
                "x={x}: {} vs oracle {}",
                std_normal_cdf(x),
                oracle
            );
        }
        assert!((std_normal_cdf(Z_975) - 0.975).abs() < 1e-6);
        assert!((std_normal_cdf(-Z_975) - 0.025).abs() < 1e-6);
    }

    #[test]
    fn cdf_symmetry() {
        let mut stream = RngStream::new(7, 0);
        for _ in 0..1000 {
            let x = 16.0 * stream.uniform_open01() - 8.0;
            assert!((std_normal_cdf(x) + std_normal_cdf(-x) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn quantile_known_values() {
        assert_eq!(std_normal_quantile(0.5).unwrap(), 0.0);
        // Oracle values frozen from bisection on std_normal_cdf.
        assert!((std_normal_quantile(0.975).unwrap() - 1.959964).abs() < 1e-6);
        assert!((std_normal_quantile(0.90).unwrap() - 1.281552).abs() < 1e-6);
    }

    #[test]
    fn quantile_agrees_with_bisection_oracle() {
        for &p in &[0.001, 0.025, 0.1, 0.33, 0.7, 0.975, 0.999] {
            let oracle = find_root(|x| std_normal_cdf(x) - p, -10.0, 10.0, 1e-12).unwrap();
            assert!(
                (std_normal_quantile(p).unwrap() - oracle).abs() < 1e-8,
                "p={p}"
            );
        }
    }

    #[test]
    fn quantile_cdf_round_trip() {
        let mut p = 0.001;
        while p < 0.9995 {
            let x = std_normal_quantile(p).unwrap();
            assert!(
                (std_normal_cdf(x) - p).abs() < 1e-9,
                "round trip failed at p={p}"
            );
            p += 0.001;
        }
    }

    #[test]
    fn quantile_rejects_out_of_range() {
        assert!(std_normal_quantile(0.0).is_err());
        assert!(std_normal_quantile(1.0).is_err());
        assert!(std_normal_quantile(-0.2).is_err());
    }

    #[test]
    fn relative_efficiency_reference_value() {
        let re = relative_efficiency(0.90, 0.67, 0.025).unwrap();
        assert!((re - 1.82).abs() < 0.01, "got {re}");
    }

    #[test]
    fn relative_efficiency_identity() {
        assert!((relative_efficiency(0.9, 0.9, 0.025).unwrap() - 1.0).abs() < 1e-12);
        assert!((relative_efficiency(0.4, 0.4, 0.1).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn relative_efficiency_rejects_degenerate() {
        // Φ⁻¹(1−α) + Φ⁻¹(p_alt) ≤ 0 for very low alternative power.
        assert!(matches!(
            relative_efficiency(0.9, 0.001, 0.025),
            Err(Error::PowerTooLow)
        ));
    }

    #[test]
    fn step_integration_examples() {
        let constant_one = StepFunction {
            initial: 1.0,
            times: &[],
            values: &[],
            support_end: 10.0,
        };
        assert_eq!(constant_one.integrate(0.0, 5.0).unwrap(), 5.0);
        assert_eq!(constant_one.integrate(3.0, 3.0).unwrap(), 0.0);

        // 1 on [0,2), 0.5 on [2,4)
        let f = StepFunction {
            initial: 1.0,
            times: &[2.0],
            values: &[0.5],
            support_end: 4.0,
        };
        assert_eq!(f.integrate(0.0, 4.0).unwrap(), 3.0);
        assert!(f.integrate(0.0, 4.5).is_err());
    }

    #[test]
    fn step_integration_is_additive() {
        let f = StepFunction {
            initial: 1.0,
            times: &[1.0, 2.5, 3.0],
            values: &[0.75, 0.5, 0.125],
            support_end: 6.0,
        };
        let mut stream = RngStream::new(11, 3);
        for _ in 0..500 {
            let mut pts = [
                6.0 * stream.uniform_open01(),
                6.0 * stream.uniform_open01(),
                6.0 * stream.uniform_open01(),
            ];
            pts.sort_by(f64::total_cmp);
            let [a, b, c] = pts;
            let whole = f.integrate(a, c).unwrap();
            let parts = f.integrate(a, b).unwrap() + f.integrate(b, c).unwrap();
            assert!((whole - parts).abs() < 1e-12);
        }
    }

    #[test]
    fn step_value_left_and_right_limits() {
        let f = StepFunction {
            initial: 1.0,
            times: &[2.0],
            values: &[0.5],
            support_end: 4.0,
        };
        assert_eq!(f.value_at(2.0), 0.5);
        assert_eq!(f.value_before(2.0), 1.0);
        assert_eq!(f.value_before(0.0), 1.0);
        assert_eq!(f.value_at(3.9), 0.5);
    }

    #[test]
    fn find_root_examples() {
        assert!((find_root(|x| x - 2.0, 0.0, 10.0, 1e-10).unwrap() - 2.0).abs() < 1e-9);
        let sqrt2 = find_root(|x| x * x - 2.0, 0.0, 2.0, 1e-8).unwrap();
        assert!((sqrt2 - std::f64::consts::SQRT_2).abs() < 1e-7);
        let z = find_root(|x| std_normal_cdf(x) - 0.975, 0.0, 5.0, 1e-10).unwrap();
        assert!((z - std_normal_quantile(0.975).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn find_root_requires_sign_change() {
        assert!(matches!(
            find_root(|x| x * x + 1.0, -1.0, 1.0, 1e-8),
            Err(Error::NoSignChange { .. })
        ));
    }

    #[test]
    fn streams_reproduce_exactly() {
        let mut a = RngStream::new(42, 9);
        let mut b = RngStream::new(42, 9);
        for _ in 0..1_000_000 {
            assert_eq!(a.uniform_open01(), b.uniform_open01());
        }
    }

    #[test]
    fn distinct_streams_are_uncorrelated() {
        let mut a = RngStream::new(42, 0);
        let mut b = RngStream::new(42, 1);
        let n = 20_000;
        let (mut sa, mut sb, mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let x = a.uniform_open01();
            let y = b.uniform_open01();
            sa += x;
            sb += y;
            sab += x * y;
            saa += x * x;
            sbb += y * y;
        }
        let nf = n as f64;
        let cov = sab / nf - (sa / nf) * (sb / nf);
        let var_a = saa / nf - (sa / nf).powi(2);
        let var_b = sbb / nf - (sb / nf).powi(2);
        let corr = cov / (var_a * var_b).sqrt();
        assert!(corr.abs() < 0.03, "cross-stream correlation {corr}");
    }

    #[test]
    fn draws_are_in_open_unit_interval() {
        let mut s = RngStream::new(1, 2);
        for _ in 0..100_000 {
            let u = s.uniform_open01();
            assert!(u > 0.0 && u < 1.0);
        }
    }
}
