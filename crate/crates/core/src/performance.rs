//! Closed-form detector characterisation.
//!
//! Central and noncentral chi-square tails, threshold inversion, ROC area,
//! the Gaussian large-dimension approximation, subspace coherence and the
//! sampled-energy bounds for missing data.

use serde::Serialize;

use crate::detector::SamplingMask;
use crate::error::{Error, Result};
use crate::linalg::{column_space, matvec_t, norm_sq, select_rows};
use crate::spectral::SubspaceBasis;

const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;
const MAX_ITER: usize = 100_000;

const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let t = x + 7.5;
    let mut a = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut sum = 1.0 / a;
    let mut del = sum;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * EPS {
            break;
        }
    }
    (sum.ln() - x + a * x.ln() - ln_gamma(a)).exp()
}

fn gamma_q_cf(a: f64, x: f64) -> f64 {
    // Modified Lentz.
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    (h.ln() - x + a * x.ln() - ln_gamma(a)).exp()
}

/// Regularised upper incomplete gamma `Q(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        (1.0 - gamma_p_series(a, x)).clamp(0.0, 1.0)
    } else {
        gamma_q_cf(a, x).clamp(0.0, 1.0)
    }
}

/// Regularised lower incomplete gamma `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        gamma_p_series(a, x).clamp(0.0, 1.0)
    } else {
        (1.0 - gamma_q_cf(a, x)).clamp(0.0, 1.0)
    }
}

fn check_dof(k: f64) -> Result<()> {
    if !(k >= 1.0) || !k.is_finite() {
        return Err(Error::InvalidDof(k));
    }
    Ok(())
}

fn check_arg(x: f64) -> Result<()> {
    if !(x >= 0.0) {
        return Err(Error::NegativeArgument(x));
    }
    Ok(())
}

/// Right tail of the central chi-square law with `k` degrees of freedom.
pub fn chi2_sf(x: f64, k: f64) -> Result<f64> {
    check_dof(k)?;
    check_arg(x)?;
    Ok(gamma_q(k / 2.0, x / 2.0))
}

pub fn chi2_cdf(x: f64, k: f64) -> Result<f64> {
    check_dof(k)?;
    check_arg(x)?;
    Ok(gamma_p(k / 2.0, x / 2.0))
}

/// Right tail of the noncentral chi-square law, as a Poisson mixture of
/// central tails summed outward from the modal Poisson index.
pub fn noncentral_chi2_sf(x: f64, k: f64, delta: f64) -> Result<f64> {
    check_dof(k)?;
    check_arg(x)?;
    if !(delta >= 0.0) {
        return Err(Error::NegativeNoncentrality(delta));
    }
    if delta == 0.0 {
        return Ok(gamma_q(k / 2.0, x / 2.0));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    let lam = delta / 2.0;
    let y = x / 2.0;
    let a = k / 2.0;
    let j0 = lam.floor();
    let log_w0 = -lam + j0 * lam.ln() - ln_gamma(j0 + 1.0);
    let w0 = log_w0.exp();
    let mut sum = w0 * gamma_q(a + j0, y);

    // Upward: the central tails grow towards 1, so the weight bounds the rest.
    let mut w = w0;
    let mut j = j0;
    for _ in 0..MAX_ITER {
        j += 1.0;
        w *= lam / j;
        let term = w * gamma_q(a + j, y);
        sum += term;
        if w <= 1e-14 * sum || w < TINY {
            break;
        }
    }

    // Downward: both factors shrink, so stop on the term itself.
    let mut w = w0;
    let mut j = j0;
    while j > 0.0 {
        w *= j / lam;
        j -= 1.0;
        let term = w * gamma_q(a + j, y);
        sum += term;
        if term <= 1e-14 * sum || w < TINY {
            break;
        }
    }
    Ok(sum.clamp(0.0, 1.0))
}

/// False-alarm probability of an energy detector with `dof` degrees of freedom.
pub fn pfa(gamma: f64, dof: f64) -> Result<f64> {
    chi2_sf(gamma.max(0.0), dof)
}

/// Detection probability under noncentrality `delta`.
pub fn pd(gamma: f64, dof: f64, delta: f64) -> Result<f64> {
    noncentral_chi2_sf(gamma.max(0.0), dof, delta)
}

/// `γ` with `pfa(γ, dof) = target`, by bisection.
pub fn threshold_for_pfa(target: f64, dof: f64) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::InvalidTarget(target));
    }
    check_dof(dof)?;
    let mut lo = 0.0;
    let mut hi = dof.max(1.0);
    while pfa(hi, dof)? > target {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        let p = pfa(mid, dof)?;
        if (p - target).abs() < 1e-13 || hi - lo <= f64::EPSILON * hi {
            return Ok(mid);
        }
        if p > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Area under the theoretical ROC, by trapezoid over a log-spaced threshold
/// grid that is doubled until two successive estimates agree to `1e-4`.
pub fn theoretical_auc(dof: f64, delta: f64) -> Result<f64> {
    check_dof(dof)?;
    if !(delta >= 0.0) {
        return Err(Error::NegativeNoncentrality(delta));
    }
    let mut g_lo = dof;
    while chi2_cdf(g_lo, dof)? > 1e-12 {
        g_lo /= 2.0;
    }
    let mut g_hi = dof + delta + 1.0;
    while pd(g_hi, dof, delta)? > 1e-12 {
        g_hi *= 2.0;
    }
    let auc_on = |n: usize| -> Result<f64> {
        let ratio = (g_hi / g_lo).ln();
        // Walk from (1, 1) at γ = 0 to (0, 0) at γ = ∞.
        let mut prev = (1.0, 1.0);
        let mut area = 0.0;
        for i in 0..n {
            let g = g_lo * (ratio * i as f64 / (n - 1) as f64).exp();
            let cur = (pfa(g, dof)?, pd(g, dof, delta)?);
            area += (prev.0 - cur.0) * (prev.1 + cur.1) / 2.0;
            prev = cur;
        }
        area += prev.0 * prev.1 / 2.0;
        Ok(area)
    };
    let mut n = 256;
    let mut prev = auc_on(n)?;
    loop {
        n *= 2;
        let cur = auc_on(n)?;
        if (cur - prev).abs() < 1e-4 || n >= 1 << 16 {
            return Ok(cur.clamp(0.0, 1.0));
        }
        prev = cur;
    }
}

/// `erfc(x)` through `Q(1/2, x²)`.
pub fn erfc(x: f64) -> f64 {
    if x >= 0.0 {
        gamma_q(0.5, x * x)
    } else {
        2.0 - gamma_q(0.5, x * x)
    }
}

/// Standard normal right tail.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

pub fn normal_cdf(z: f64) -> f64 {
    normal_sf(-z)
}

/// Inverse of the standard normal right tail.
pub fn normal_isf(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidTarget(p));
    }
    // Acklam's rational approximation of the lower quantile at 1 - p.
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    let q = 1.0 - p;
    let tail = |r: f64| {
        let t = (-2.0 * r.ln()).sqrt();
        (((((C[0] * t + C[1]) * t + C[2]) * t + C[3]) * t + C[4]) * t + C[5])
            / ((((D[0] * t + D[1]) * t + D[2]) * t + D[3]) * t + 1.0)
    };
    let mut z = if q < 0.02425 {
        tail(q)
    } else if q > 1.0 - 0.02425 {
        -tail(p)
    } else {
        let u = q - 0.5;
        let r = u * u;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * u
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    // Two Halley steps against the tail function.
    for _ in 0..2 {
        let e = normal_sf(z) - p;
        let dens = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        if dens == 0.0 {
            break;
        }
        let u = -e / dens;
        z -= u / (1.0 + z * u / 2.0);
    }
    Ok(z)
}

/// Gaussian approximation of the detection probability for a large
/// complement dimension.
pub fn asymptotic_pd(target_pfa: f64, deflection: f64) -> Result<f64> {
    if !(deflection >= 0.0) {
        return Err(Error::NegativeArgument(deflection));
    }
    let z = normal_isf(target_pfa)?;
    Ok(normal_sf(z - deflection.sqrt()))
}

/// `d² = ratio² / (2·dof)`, with `ratio` the complement energy over `σ²`.
pub fn deflection(ratio: f64, dof: f64) -> Result<f64> {
    check_dof(dof)?;
    Ok(ratio * ratio / (2.0 * dof))
}

/// `(N/R)·maxⱼ ‖P eⱼ‖²` for an orthonormal basis with `R` columns.
pub fn coherence(basis: &SubspaceBasis, ambient_n: usize) -> Result<f64> {
    let u = basis.columns();
    let r = u.ncols();
    if r == 0 {
        return Err(Error::EmptyBasis);
    }
    if u.nrows() != ambient_n {
        return Err(Error::DimensionMismatch {
            expected: ambient_n,
            got: u.nrows(),
        });
    }
    let mut best = 0.0_f64;
    for i in 0..u.nrows() {
        let mut s = 0.0;
        for j in 0..r {
            s += u[(i, j)] * u[(i, j)];
        }
        best = best.max(s);
    }
    Ok(ambient_n as f64 / r as f64 * best)
}

/// Coherence of the line spanned by `v`.
pub fn vector_coherence(v: &[f64]) -> Result<f64> {
    let e = norm_sq(v);
    if e == 0.0 {
        return Err(Error::ZeroSignal);
    }
    let m = v.iter().map(|x| x * x).fold(0.0_f64, f64::max);
    Ok(v.len() as f64 * m / e)
}

/// Sampled-energy bounds for a missing-data projection detector.
///
/// `gamma_coh` is the coherence-dependent constant in the bound; it is
/// unrelated to the decision threshold.
#[derive(Clone, Debug, Serialize)]
pub struct CorollaryBounds {
    pub lower: f64,
    pub upper: f64,
    pub sampled_residual: f64,
    pub full_residual: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma_coh: f64,
    pub delta: f64,
    pub mu_subspace: f64,
    pub mu_residual: f64,
    pub required_observations: f64,
    pub condition_met: bool,
}

impl CorollaryBounds {
    pub fn holds(&self) -> bool {
        self.lower <= self.sampled_residual && self.sampled_residual <= self.upper
    }
}

/// Precomputed subspace quantities shared by many masks.
pub struct CorollaryContext<'a> {
    basis: &'a SubspaceBasis,
    mu: f64,
}

impl<'a> CorollaryContext<'a> {
    pub fn new(basis: &'a SubspaceBasis) -> Result<Self> {
        let mu = coherence(basis, basis.dim())?;
        Ok(Self { basis, mu })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// Smallest `N_o` meeting the sampling condition for `epsilon`.
    pub fn required_observations(&self, epsilon: f64) -> f64 {
        let r = self.basis.rank() as f64;
        8.0 / 3.0 * r * self.mu * (2.0 * r / epsilon).ln()
    }

    pub fn bounds(&self, mask: &SamplingMask, x: &[f64], epsilon: f64) -> Result<CorollaryBounds> {
        let n = self.basis.dim();
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x.len(),
            });
        }
        if mask.ambient_dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: mask.ambient_dim(),
            });
        }
        let r = self.basis.rank() as f64;
        let no = mask.len() as f64;
        let proj = self.basis.component(x)?;
        let xbar: Vec<f64> = x.iter().zip(&proj).map(|(a, b)| a - b).collect();
        let full_residual = norm_sq(&xbar);
        let mu_residual = if full_residual > 0.0 {
            vector_coherence(&xbar)?
        } else {
            0.0
        };

        let mu = self.mu;
        let log_inv = (1.0 / epsilon).ln();
        let delta = (8.0 * r * mu / (3.0 * no) * (2.0 * r / epsilon).ln()).sqrt();
        let gamma_coh = (2.0 * mu_residual * log_inv).sqrt();
        let beta = (2.0 * mu_residual * mu_residual / no * log_inv).sqrt();
        let alpha = (no * (1.0 - beta) - r * mu * (1.0 + gamma_coh).powi(2) / (1.0 - delta)) / n as f64;

        let sampled_rows = select_rows(self.basis.columns(), mask.selected());
        let (q, _) = column_space(sampled_rows.as_ref(), 1e-10)?;
        let xo = mask.apply(x)?;
        let coef = matvec_t(q.as_ref(), &xo);
        let sampled_residual = (norm_sq(&xo) - norm_sq(&coef)).max(0.0);

        let required = self.required_observations(epsilon);
        Ok(CorollaryBounds {
            lower: alpha * full_residual,
            upper: (1.0 + beta) * no / n as f64 * full_residual,
            sampled_residual,
            full_residual,
            alpha,
            beta,
            gamma_coh,
            delta,
            mu_subspace: mu,
            mu_residual,
            required_observations: required,
            condition_met: no >= required,
        })
    }
}

/// Convenience wrapper over [`CorollaryContext`].
pub fn corollary_bounds(
    basis_delta: &SubspaceBasis,
    mask: &SamplingMask,
    x: &[f64],
    epsilon: f64,
) -> Result<CorollaryBounds> {
    CorollaryContext::new(basis_delta)?.bounds(mask, x, epsilon)
}

/// Kolmogorov–Smirnov distance between a sample and a continuous CDF.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d = 0.0_f64;
    for (i, &x) in s.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    Ok(d)
}

/// Asymptotic two-sided KS critical value at level `alpha`.
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_integers() {
        let mut fact = 1.0_f64;
        for n in 1..20 {
            assert!((ln_gamma(n as f64) - fact.ln()).abs() < 1e-12, "n={n}");
            fact *= n as f64;
        }
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-13);
    }

    #[test]
    fn chi2_two_dof_is_exponential() {
        assert!((chi2_sf(2.0, 2.0).unwrap() - (-1.0_f64).exp()).abs() < 1e-14);
        for x in [0.1, 1.0, 5.0, 30.0, 100.0] {
            let want = (-x / 2.0_f64).exp();
            let got = chi2_sf(x, 2.0).unwrap();
            assert!((got - want).abs() <= 1e-13 * want.max(1e-300), "x={x}");
        }
        assert_eq!(chi2_sf(0.0, 5.0).unwrap(), 1.0);
    }

    #[test]
    fn chi2_one_dof_matches_normal() {
        // P(z² > x) = 2 Q(√x).
        for x in [0.01, 0.5, 2.0, 9.0] {
            let want = 2.0 * normal_sf(f64::sqrt(x));
            assert!((chi2_sf(x, 1.0).unwrap() - want).abs() < 1e-14);
        }
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(chi2_sf(1.0, 0.5), Err(Error::InvalidDof(_))));
        assert!(matches!(chi2_sf(-1.0, 2.0), Err(Error::NegativeArgument(_))));
        assert!(matches!(
            noncentral_chi2_sf(1.0, 2.0, -1.0),
            Err(Error::NegativeNoncentrality(_))
        ));
        assert!(matches!(threshold_for_pfa(1.0, 2.0), Err(Error::InvalidTarget(_))));
        assert!(matches!(threshold_for_pfa(0.0, 2.0), Err(Error::InvalidTarget(_))));
    }

    #[test]
    fn noncentral_two_dof_closed_form() {
        // For k = 2 the tail is the Marcum Q-function Q1(√δ, √x); check against
        // direct numerical integration of the density instead.
        let (k, delta, x) = (2.0, 3.0, 4.0);
        let dens = |t: f64| {
            let mut s = 0.0;
            let lam = delta / 2.0;
            let mut w = (-lam as f64).exp();
            for j in 0..200 {
                let a = k / 2.0 + j as f64;
                let log_f = (a - 1.0) * (t / 2.0).ln() - t / 2.0 - ln_gamma(a) - 2f64.ln();
                s += w * log_f.exp();
                w *= lam / (j as f64 + 1.0);
            }
            s
        };
        let (mut acc, h) = (0.0, 1e-3);
        let mut t = x;
        while t < 200.0 {
            acc += h * (dens(t) + 4.0 * dens(t + h / 2.0) + dens(t + h)) / 6.0;
            t += h;
        }
        assert!((noncentral_chi2_sf(x, k, delta).unwrap() - acc).abs() < 1e-8);
    }

    #[test]
    fn noncentral_reduces_and_orders() {
        for &(x, k) in &[(1.0, 1.0), (280.0, 276.0), (10.0, 4.0)] {
            assert_eq!(
                noncentral_chi2_sf(x, k, 0.0).unwrap(),
                chi2_sf(x, k).unwrap()
            );
            let mut prev = 0.0;
            for d in [0.0, 0.5, 5.0, 50.0, 500.0] {
                let p = noncentral_chi2_sf(x, k, d).unwrap();
                assert!(p >= prev - 1e-15);
                prev = p;
            }
        }
    }

    #[test]
    fn noncentral_large_delta_mean() {
        // Median of a noncentral chi-square sits close to k + δ for large δ.
        let (k, d) = (276.0, 2000.0);
        let p = noncentral_chi2_sf(k + d, k, d).unwrap();
        assert!((p - 0.5).abs() < 0.02, "{p}");
    }

    #[test]
    fn threshold_roundtrip() {
        assert!((threshold_for_pfa((-1.0_f64).exp(), 2.0).unwrap() - 2.0).abs() < 1e-9);
        for &(p, k) in &[(0.01, 276.0), (0.5, 3.0), (0.9, 64.0), (1e-6, 10.0)] {
            let g = threshold_for_pfa(p, k).unwrap();
            assert!((pfa(g, k).unwrap() - p).abs() < 1e-10);
        }
        assert!(threshold_for_pfa(1.0 - 1e-9, 4.0).unwrap() < 0.01);
    }

    #[test]
    fn auc_limits() {
        for k in [1.0, 10.0, 276.0] {
            assert!((theoretical_auc(k, 0.0).unwrap() - 0.5).abs() < 1e-4);
        }
        let mut prev = 0.5;
        for d in [1.0, 10.0, 30.0, 100.0] {
            let a = theoretical_auc(276.0, d).unwrap();
            assert!(a >= prev);
            prev = a;
        }
        assert!(theoretical_auc(10.0, 400.0).unwrap() > 0.9999);
    }

    #[test]
    fn normal_quantile_roundtrip() {
        for p in [1e-10, 0.001, 0.1, 0.5, 0.77, 0.999] {
            let z = normal_isf(p).unwrap();
            assert!((normal_sf(z) - p).abs() < 1e-14 * p.max(1e-3) + 1e-16, "p={p}");
        }
        assert!(normal_isf(0.5).unwrap().abs() < 1e-15);
    }

    #[test]
    fn asymptotic_basics() {
        assert!((asymptotic_pd(0.1, 0.0).unwrap() - 0.1).abs() < 1e-14);
        assert_eq!(deflection(10.0, 50.0).unwrap(), 1.0);
        assert!(asymptotic_pd(0.1, -1.0).is_err());
        assert!(asymptotic_pd(1.5, 1.0).is_err());
    }

    #[test]
    fn ks_against_uniform() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        let d = ks_statistic(&xs, |x| x).unwrap();
        assert!((d - 0.005).abs() < 1e-12);
        assert!((ks_critical(10_000, 0.01) - 0.016_276).abs() < 1e-5);
    }
}
