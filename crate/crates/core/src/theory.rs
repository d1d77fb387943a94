//! Closed-form constants, exponents and comparison curves for the
//! boundedness thresholds of the attraction-repulsion system.
//!
//! `s` always denotes the product `chi * ||v0||_inf`.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TheoryError {
    #[error("exponent p must exceed {min}, got {p}")]
    ExponentTooSmall { p: f64, min: f64 },
    #[error("p = {p} outside the admissible range ({lower}, inf)")]
    OutsideAdmissible { p: f64, lower: f64 },
    #[error("production exponent l must exceed 1, got {0}")]
    ProductionExponent(f64),
    #[error("dimension n = {n} not supported here (need {need})")]
    Dimension { n: u32, need: &'static str },
    #[error("no sign change of C_mu - C_xi on the search interval for n = {0}")]
    NoCrossing(u32),
}

/// Open interval `(lower, upper)`; `upper` may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpenInterval {
    pub lower: f64,
    pub upper: f64,
}

impl OpenInterval {
    pub fn contains(&self, x: f64) -> bool {
        x > self.lower && x < self.upper
    }
}

/// Coefficient `C~(p, n)` of the absorptive inequality for `l = 1`.
///
/// Zero in dimensions one and two. For `n >= 3` the closed form
/// `2^p p^(2p+1) (p-1) (4p^2+n) / (p+1)^(p+1)` is evaluated in log space so
/// that large `p` does not overflow the intermediate powers.
pub fn tilde_c(p: f64, n: u32) -> Result<f64, TheoryError> {
    if !(p > 1.0) {
        return Err(TheoryError::ExponentTooSmall { p, min: 1.0 });
    }
    if n <= 2 {
        return Ok(0.0);
    }
    Ok(ln_tilde_c(p, n).exp())
}

fn ln_tilde_c(p: f64, n: u32) -> f64 {
    p * std::f64::consts::LN_2 + (2.0 * p + 1.0) * p.ln() + (p - 1.0).ln()
        + (4.0 * p * p + f64::from(n)).ln()
        - (p + 1.0) * (p + 1.0).ln()
}

/// Lower bound on `xi` from the `L^p` estimate: `(4 C~ s^2 / p)^(1/p)`.
pub fn xi_threshold(p: f64, n: u32, s: f64) -> Result<f64, TheoryError> {
    let c = tilde_c(p, n)?;
    if c == 0.0 || s == 0.0 {
        return Ok(0.0);
    }
    let ln = 4.0_f64.ln() + ln_tilde_c(p, n) + 2.0 * s.ln() - p.ln();
    Ok((ln / p).exp())
}

/// `C(n)`: zero for `n <= 2`, otherwise `((8/n) C~(n/2, n))^(2/n)`.
pub fn big_c(n: u32) -> f64 {
    if n <= 2 {
        return 0.0;
    }
    let nf = f64::from(n);
    (2.0 / nf * ((8.0 / nf).ln() + ln_tilde_c(nf / 2.0, n))).exp()
}

/// Exponents `p` for which the `l > 1` estimate closes: `(max(l, l(nl-2)/n), inf)`.
pub fn p_admissible_range(l: f64, n: u32) -> OpenInterval {
    let nf = f64::from(n);
    OpenInterval {
        lower: l.max(l * (nf * l - 2.0) / nf),
        upper: f64::INFINITY,
    }
}

/// Gagliardo-Nirenberg exponent `(1 - 1/l) / (1 + 2/(np) - 1/p)` of the `l > 1` case.
pub fn gn_theta1(l: f64, n: u32, p: f64) -> Result<f64, TheoryError> {
    if !(l > 1.0) {
        return Err(TheoryError::ProductionExponent(l));
    }
    let range = p_admissible_range(l, n);
    if !range.contains(p) {
        return Err(TheoryError::OutsideAdmissible {
            p,
            lower: range.lower,
        });
    }
    let nf = f64::from(n);
    Ok((1.0 - 1.0 / l) / (1.0 + 2.0 / (nf * p) - 1.0 / p))
}

/// Gagliardo-Nirenberg exponent `(np/2)(1 - 1/p) / (1 - n/2 + np/2)`; needs `p > max(1, n/2)`.
pub fn gn_theta(n: u32, p: f64) -> Result<f64, TheoryError> {
    let nf = f64::from(n);
    let min = 1.0_f64.max(nf / 2.0);
    if !(p > min) {
        return Err(TheoryError::ExponentTooSmall { p, min });
    }
    Ok(nf * p / 2.0 * (1.0 - 1.0 / p) / (1.0 - nf / 2.0 + nf * p / 2.0))
}

/// Largeness condition on `mu` for the logistic-source consumption model,
/// a two-term curve in `s^(2/n)` and `s^(2n)`.
pub fn c_mu(s: f64, n: u32) -> Result<f64, TheoryError> {
    if n < 2 {
        return Err(TheoryError::Dimension { n, need: "n >= 2" });
    }
    let nf = f64::from(n);
    let q = 4.0 * nf * nf + nf;
    let first = 4.0_f64.powf(1.0 / nf) * (nf - 1.0) * nf / (nf + 1.0)
        * ((nf - 1.0) * q / (nf + 1.0)).powf(1.0 / nf)
        * s.powf(2.0 / nf);
    let second = 2.0_f64.powf((nf - 1.0) / 2.0 + nf + 1.0) * (2.0 * nf - 1.0) / (nf + 1.0)
        * ((nf - 1.0) * (2.0 * nf - 1.0) * q / (nf + 1.0)).powf((nf - 1.0) / 2.0)
        * s.powf(2.0 * nf);
    Ok(first + second)
}

/// Repulsion threshold curve `C(n) s^(4/n)`.
pub fn c_xi(s: f64, n: u32) -> Result<f64, TheoryError> {
    if n < 3 {
        return Err(TheoryError::Dimension { n, need: "n >= 3" });
    }
    Ok(big_c(n) * s.powf(4.0 / f64::from(n)))
}

/// Threshold curves of both models evaluated at `p = n/2`, for `n` in 3..=6.
///
/// Returns `(c_mu_half, c_xi_half)`. The coefficients are fixed
/// per-dimension closed forms; there is no general-`n` formula behind them.
pub fn halfp_curves(n: u32, s: f64) -> Result<(f64, f64), TheoryError> {
    let curves = match n {
        3 => (
            6.0 / 5.0 * (6.0_f64 / 5.0).powf(2.0 / 3.0) * s.powf(4.0 / 3.0)
                + 56.0 / 5.0 * (21.0_f64 / 5.0).powf(0.25) * s.powi(3),
            36.0 / 5.0 * (6.0_f64 / 5.0).powf(2.0 / 3.0) * s.powf(4.0 / 3.0),
        ),
        4 => (
            8.0 / 3.0 * (5.0_f64 / 3.0).sqrt() * s
                + 400.0 / 3.0 * (2.0_f64 / 3.0).sqrt() * s.powi(4),
            32.0 / 3.0 * (5.0_f64 / 3.0).sqrt() * s,
        ),
        5 => {
            let radical = (5.0_f64 / 7.0).powf(0.4) * 2.0_f64.powf(0.2) * 3.0_f64.powf(0.8);
            (
                15.0 / 7.0 * radical * s.powf(0.8)
                    + 624.0 / 7.0
                        * 2.0_f64.powf(0.25)
                        * 3.0_f64.sqrt()
                        * (65.0_f64 / 7.0).powf(0.75)
                        * s.powi(5),
                50.0 / 7.0 * radical * s.powf(0.8),
            )
        }
        6 => (
            3.0 * (21.0_f64 / 2.0).cbrt() * s.powf(2.0 / 3.0) + 10752.0 * s.powi(6),
            9.0 * (21.0_f64 / 2.0).cbrt() * s.powf(2.0 / 3.0),
        ),
        _ => return Err(TheoryError::Dimension { n, need: "3 <= n <= 6" }),
    };
    Ok(curves)
}

/// Abscissa where the two `p = n/2` curves cross, by bisection on `(1e-6, 1)`.
pub fn rho0(n: u32) -> Result<f64, TheoryError> {
    let gap = |s: f64| halfp_curves(n, s).map(|(mu, xi)| mu - xi);
    let (mut lo, mut hi) = (1e-6, 1.0);
    let (g_lo, g_hi) = (gap(lo)?, gap(hi)?);
    if g_lo.signum() == g_hi.signum() {
        return Err(TheoryError::NoCrossing(n));
    }
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if gap(mid)?.signum() == g_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Every closed-form quantity for one `(n, p, s)` triple.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryReport {
    pub n: u32,
    pub p: f64,
    pub tilde_c: f64,
    pub xi_star: f64,
    pub big_c: f64,
    /// Present when `l > 1` and `p` is admissible for it.
    pub theta1: Option<f64>,
    pub theta: Option<f64>,
    pub p_range: OpenInterval,
    pub alpha_range: OpenInterval,
}

pub fn report(n: u32, p: f64, s: f64, l: f64) -> Result<TheoryReport, TheoryError> {
    Ok(TheoryReport {
        n,
        p,
        tilde_c: tilde_c(p, n)?,
        xi_star: xi_threshold(p, n, s)?,
        big_c: big_c(n),
        theta1: gn_theta1(l, n, p).ok(),
        theta: gn_theta(n, p).ok(),
        p_range: p_admissible_range(l, n),
        alpha_range: alpha_range(n),
    })
}

/// Admissible consumption exponents `(0, 1/2 + 1/n) ∩ (0, 1)`.
pub fn alpha_range(n: u32) -> OpenInterval {
    OpenInterval {
        lower: 0.0,
        upper: (0.5 + 1.0 / f64::from(n)).min(1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn tilde_c_values() {
        for p in [1.1, 2.0, 7.5] {
            assert_eq!(tilde_c(p, 1).unwrap(), 0.0);
            assert_eq!(tilde_c(p, 2).unwrap(), 0.0);
        }
        assert!(rel(tilde_c(2.0, 3).unwrap(), 2432.0 / 27.0) < 1e-13);
        assert!(rel(tilde_c(1.5, 3).unwrap(), 8.693832296519181) < 1e-12);
        assert!(tilde_c(1.0, 3).is_err());
        // direct evaluation agrees where it does not overflow
        let (p, n) = (6.25, 5u32);
        let direct = 2f64.powf(p) * p.powf(2.0 * p + 1.0) * (p - 1.0) * (4.0 * p * p + 5.0)
            / (p + 1.0).powf(p + 1.0);
        assert!(rel(tilde_c(p, n).unwrap(), direct) < 1e-12);
        assert!(tilde_c(100.0, 3).unwrap().is_finite());
    }

    #[test]
    fn xi_threshold_values() {
        assert_eq!(xi_threshold(3.0, 2, 5.0).unwrap(), 0.0);
        assert_eq!(xi_threshold(3.0, 4, 0.0).unwrap(), 0.0);
        assert!(rel(xi_threshold(1.5, 3, 1.0).unwrap(), 8.130551289532084) < 1e-12);
        assert!(xi_threshold(0.9, 3, 1.0).is_err());
    }

    #[test]
    fn big_c_values() {
        assert_eq!(big_c(1), 0.0);
        assert_eq!(big_c(2), 0.0);
        assert!(rel(big_c(3), 36.0 / 5.0 * 1.2f64.powf(2.0 / 3.0)) < 1e-12);
        assert!(rel(big_c(4), 32.0 / 3.0 * (5.0f64 / 3.0).sqrt()) < 1e-12);
    }

    #[test]
    fn p_range_values() {
        assert_eq!(p_admissible_range(1.0, 2).lower, 1.0);
        assert!(rel(p_admissible_range(2.0, 3).lower, 8.0 / 3.0) < 1e-15);
        assert_eq!(p_admissible_range(1.0, 1).lower, 1.0);
        assert!(p_admissible_range(1.0, 1).upper.is_infinite());
    }

    #[test]
    fn theta_values() {
        assert!(rel(gn_theta1(2.0, 2, 4.0).unwrap(), 0.5) < 1e-15);
        assert!(rel(gn_theta1(2.0, 3, 3.0).unwrap(), 9.0 / 16.0) < 1e-15);
        assert!(gn_theta1(1.0 + 1e-9, 3, 2.0).unwrap() < 1e-8);
        assert!(gn_theta1(2.0, 3, 2.5).is_err());
        assert!(gn_theta1(1.0, 3, 2.5).is_err());

        assert!(rel(gn_theta(2, 2.0).unwrap(), 0.5) < 1e-15);
        assert!(rel(gn_theta(1, 2.0).unwrap(), 1.0 / 3.0) < 1e-15);
        assert!(gn_theta(3, 1e8).unwrap() > 1.0 - 1e-7);
        assert!(gn_theta(4, 2.0).is_err());
    }

    #[test]
    fn c_mu_matches_three_dimensional_expression() {
        assert_eq!(c_mu(0.0, 3).unwrap(), 0.0);
        assert!(rel(c_mu(0.1, 3).unwrap(), 1.384674612377383) < 1e-12);
        assert!(c_mu(0.1, 1).is_err());
    }

    #[test]
    fn c_xi_values() {
        assert_eq!(c_xi(0.0, 3).unwrap(), 0.0);
        assert!(rel(c_xi(0.3, 3).unwrap(), big_c(3) * 0.3f64.powf(4.0 / 3.0)) < 1e-15);
        assert!((c_xi(0.3, 3).unwrap() - 1.637).abs() < 5e-3);
        assert!(rel(c_xi(0.2, 4).unwrap(), 2.7541214906363854) < 1e-12);
        assert!(c_xi(0.2, 2).is_err());
    }

    #[test]
    fn halfp_curve_values() {
        let (mu, xi) = halfp_curves(3, 1e-9).unwrap();
        assert!((xi / mu - 6.0).abs() < 1e-6);
        let (_, xi) = halfp_curves(4, 0.1).unwrap();
        assert!(rel(xi, 1.3770607453181926) < 1e-12);
        assert!(halfp_curves(7, 0.1).is_err());
        for n in 3..=6 {
            let r = rho0(n).unwrap();
            let (mu, xi) = halfp_curves(n, 0.5 * r).unwrap();
            assert!(mu < xi);
            let (mu, xi) = halfp_curves(n, (2.0 * r).min(1.0)).unwrap();
            assert!(mu > xi);
        }
    }

    #[test]
    fn rho0_values() {
        let expected = [0.5964101714333852, 0.45607935965705615, 0.35145553554231124, 0.28433050421467404];
        for (n, e) in (3..=6).zip(expected) {
            assert!((rho0(n).unwrap() - e).abs() < 1e-9, "n={n}");
        }
        assert!(rho0(2).is_err());
    }

    #[test]
    fn report_fields() {
        let r = report(3, 1.5, 1.0, 1.0).unwrap();
        assert!(r.theta1.is_none());
        assert!(r.theta.is_none()); // p must exceed n/2
        let r = report(3, 2.0, 1.0, 2.0).unwrap();
        assert!(r.theta.is_some());
        assert!(r.theta1.is_none()); // 2 < 8/3
        assert!(rel(r.alpha_range.upper, 5.0 / 6.0) < 1e-15);
        assert_eq!(alpha_range(2).upper, 1.0);
    }
}
