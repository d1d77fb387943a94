//! Consumption and production rates, model parameters, and the advisory
//! check of parameters against the global-boundedness hypotheses.

use std::fmt;

use thiserror::Error;

use crate::theory::{self, OpenInterval};

#[derive(Debug, Error, PartialEq)]
pub enum ParamError {
    #[error("parameter `{name}` must be {rule}, got {value}")]
    OutOfRange {
        name: &'static str,
        rule: &'static str,
        value: f64,
    },
    #[error("rate argument must be nonnegative, got {0}")]
    NegativeArgument(f64),
}

/// Coefficients of the attraction-repulsion system.
///
/// `chi` and `xi` may be zero (pure diffusion limits); every other rate is
/// strictly positive and `l >= 1`. `n` is the dimension used for the
/// theoretical checks and may differ from the simulation grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub chi: f64,
    pub xi: f64,
    pub delta: f64,
    pub k: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub l: f64,
    pub n: u32,
}

impl ModelParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        let check = |name, value: f64, ok: bool, rule| {
            if ok && value.is_finite() {
                Ok(())
            } else {
                Err(ParamError::OutOfRange { name, rule, value })
            }
        };
        check("chi", self.chi, self.chi >= 0.0, ">= 0")?;
        check("xi", self.xi, self.xi >= 0.0, ">= 0")?;
        check("delta", self.delta, self.delta > 0.0, "> 0")?;
        check("K", self.k, self.k > 0.0, "> 0")?;
        check("gamma", self.gamma, self.gamma > 0.0, "> 0")?;
        check("alpha", self.alpha, self.alpha > 0.0, "> 0")?;
        check("l", self.l, self.l >= 1.0, ">= 1")?;
        check("n", f64::from(self.n), self.n >= 1, ">= 1")
    }

    /// Consumption rate `f(s) = K s^alpha`, with `f(0) = 0`.
    pub fn f_of(&self, s: f64) -> Result<f64, ParamError> {
        if s < 0.0 {
            return Err(ParamError::NegativeArgument(s));
        }
        Ok(self.consumption(s))
    }

    /// Production rate `g(s) = gamma s (s+1)^(l-1)`.
    pub fn g_of(&self, s: f64) -> Result<f64, ParamError> {
        if s < 0.0 {
            return Err(ParamError::NegativeArgument(s));
        }
        Ok(self.production(s))
    }

    // Unchecked variants for the stepper, which keeps u >= 0 itself.
    pub(crate) fn consumption(&self, s: f64) -> f64 {
        if s == 0.0 {
            0.0
        } else {
            self.k * s.powf(self.alpha)
        }
    }

    pub(crate) fn production(&self, s: f64) -> f64 {
        if self.l == 1.0 {
            self.gamma * s
        } else {
            self.gamma * s * (s + 1.0).powf(self.l - 1.0)
        }
    }
}

/// Which boundedness result the parameters fall under.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Linear production; a largeness condition on `xi` applies for `n >= 3`.
    LinearProduction,
    /// Superlinear production; any `xi > 0` suffices.
    SuperlinearProduction,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    pub n: u32,
    pub alpha_range: OpenInterval,
    pub alpha_admissible: bool,
    pub regime: Regime,
    /// `C(n) s^(4/n)` for the linear regime when `s = chi ||v0||_inf` is known.
    pub xi_threshold: Option<f64>,
    pub xi_sufficient: Option<bool>,
    pub warnings: Vec<String>,
}

impl HypothesisReport {
    pub fn all_satisfied(&self) -> bool {
        self.alpha_admissible && self.xi_sufficient != Some(false)
    }
}

/// Formats the upper end of the alpha range as a reduced fraction, e.g. `5/6`.
fn alpha_upper_label(n: u32) -> String {
    if n <= 2 {
        return "1".to_string();
    }
    let (mut num, mut den) = (n + 2, 2 * n);
    let g = gcd(num, den);
    num /= g;
    den /= g;
    format!("{num}/{den}")
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Advisory comparison of `params` with the boundedness hypotheses.
///
/// `chi_v0_sup` is `chi * ||v0||_inf`; without it the `xi` condition is
/// left undecided for the linear regime in `n >= 3`.
pub fn validate_hypotheses(params: &ModelParams, chi_v0_sup: Option<f64>) -> HypothesisReport {
    let n = params.n;
    let alpha_range = theory::alpha_range(n);
    let alpha_admissible = alpha_range.contains(params.alpha);
    let mut warnings = Vec::new();
    if !alpha_admissible {
        warnings.push(format!(
            "alpha outside (0, {}): alpha = {}",
            alpha_upper_label(n),
            params.alpha
        ));
    }
    let regime = if params.l > 1.0 {
        Regime::SuperlinearProduction
    } else {
        Regime::LinearProduction
    };
    let (xi_threshold, xi_sufficient) = match regime {
        Regime::SuperlinearProduction => (None, Some(params.xi > 0.0)),
        Regime::LinearProduction if n <= 2 => (Some(0.0), Some(params.xi > 0.0)),
        Regime::LinearProduction => match chi_v0_sup {
            Some(s) => {
                let t = theory::big_c(n) * s.powf(4.0 / f64::from(n));
                (Some(t), Some(params.xi > t))
            }
            None => (None, None),
        },
    };
    if xi_sufficient == Some(false) {
        match xi_threshold {
            Some(t) if t > 0.0 => warnings.push(format!(
                "xi = {} does not exceed the threshold {t:.6}",
                params.xi
            )),
            _ => warnings.push("xi must be positive".to_string()),
        }
    }
    HypothesisReport {
        n,
        alpha_range,
        alpha_admissible,
        regime,
        xi_threshold,
        xi_sufficient,
        warnings,
    }
}

impl fmt::Display for HypothesisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let regime = match self.regime {
            Regime::LinearProduction => "l = 1",
            Regime::SuperlinearProduction => "l > 1",
        };
        write!(
            f,
            "n = {}, {regime}, alpha admissible: {}",
            self.n, self.alpha_admissible
        )?;
        if let Some(t) = self.xi_threshold {
            write!(f, ", xi threshold: {t:.6}")?;
        }
        if let Some(ok) = self.xi_sufficient {
            write!(f, ", xi sufficient: {ok}")?;
        }
        Ok(())
    }
}
