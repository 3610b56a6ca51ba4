//! Closed-form bounds and thresholds.
//!
//! All functions take the dimensionless ratio `x = |V| / (gamma * eta)`.
//! The square-root expressions are evaluated in rationalized form, e.g.
//! `delta(x) = 4 pi x / (1 + sqrt(1 - 4 pi x))^2`, which is algebraically
//! identical to the textbook expression, finite at `x = 0` and free of
//! cancellation for small `x`.

use std::f64::consts::{PI, SQRT_2};

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{transmon_bandgap, transmon_perturbation_norm};

fn check_x(function: &'static str, x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() || 4.0 * PI * x >= 1.0 {
        return Err(Error::OutOfDomain { function, x });
    }
    Ok((1.0 - 4.0 * PI * x).sqrt())
}

/// Bound on `|Omega - 1|`: `(1 - sqrt(1 - 4 pi x))^2 / (4 pi x)`.
pub fn delta_of(x: f64) -> Result<f64> {
    let s = check_x("bounds::delta_of", x)?;
    Ok(4.0 * PI * x / ((1.0 + s) * (1.0 + s)))
}

/// Bound on the Bloch evolution distance: `1 / sqrt(1 - 4 pi x) - 1`.
pub fn epsilon_of(x: f64) -> Result<f64> {
    let s = check_x("bounds::epsilon_of", x)?;
    Ok(4.0 * PI * x / (s * (1.0 + s)))
}

/// `C_j = binom(2j, j) / (j + 1)`, exact.
pub fn catalan(j: u32) -> BigUint {
    // C_{i+1} = C_i * 2(2i + 1) / (i + 2), exact at every step
    let mut c = BigUint::from(1u32);
    for i in 0..j {
        c = c * BigUint::from(2 * (2 * i as u64 + 1)) / BigUint::from(i as u64 + 2);
    }
    c
}

/// `C_j` as a float, accurate to a few ulps.
pub fn catalan_f64(j: u32) -> f64 {
    let mut c = 1.0f64;
    for i in 0..j {
        c = c * (2.0 * (2.0 * i as f64 + 1.0)) / (i as f64 + 2.0);
    }
    c
}

/// Catalan generating function `G(y) = (1 - sqrt(1 - 4y)) / (2y)`, y < 1/4.
pub fn catalan_generating(y: f64) -> f64 {
    2.0 / (1.0 + (1.0 - 4.0 * y).sqrt())
}

/// Remainder `G(pi x) - sum_{j <= order} (pi x)^j C_j` of the majorant series
/// for the Bloch expansion.
pub fn catalan_tail(x: f64, order: u32) -> Result<f64> {
    check_x("bounds::catalan_tail", x)?;
    let y = PI * x;
    let mut partial = 0.0;
    let mut power = 1.0;
    for j in 0..=order {
        partial += power * catalan_f64(j);
        power *= y;
    }
    Ok((catalan_generating(y) - partial).max(0.0))
}

/// Bound on the Schrieffer-Wolff evolution distance,
/// `2 (1 / sqrt(sqrt(1 - 4 pi x) - 2 pi x) - 1)`, defined while
/// `delta(x) < sqrt(2) - 1`.
pub fn sw_distance_bound(x: f64) -> Result<f64> {
    const F: &str = "bounds::sw_distance_bound";
    let s = check_x(F, x)?;
    if !sw_condition_holds(x) {
        return Err(Error::OutOfDomain { function: F, x });
    }
    let a = s - 2.0 * PI * x;
    let one_minus_a = 4.0 * PI * x / (1.0 + s) + 2.0 * PI * x;
    let root = a.sqrt();
    Ok(2.0 * one_minus_a / (root * (1.0 + root)))
}

/// `pi x < (sqrt2 - 1) / 2`, equivalently `gamma > 2 pi/(sqrt2 - 1) |V|/eta`.
pub fn sw_condition_holds(x: f64) -> bool {
    PI * x < (SQRT_2 - 1.0) / 2.0
}

/// `|W - 1| <= (1 + delta) / sqrt(1 - 2 delta - delta^2) - 1`.
pub fn w_distance_bound(delta: f64) -> Option<f64> {
    let d = 1.0 - 2.0 * delta - delta * delta;
    (d > 0.0).then(|| (1.0 + delta) / d.sqrt() - 1.0)
}

/// Gamma above which the Bloch series converges: `4 pi |V| / eta`.
pub fn bloch_gamma_threshold(v_norm: f64, eta: f64) -> f64 {
    4.0 * PI * v_norm / eta
}

/// Gamma above which the Schrieffer-Wolff bounds apply.
pub fn sw_gamma_threshold(v_norm: f64, eta: f64) -> f64 {
    2.0 * PI / (SQRT_2 - 1.0) * v_norm / eta
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeakageBound {
    /// `epsilon(x)`, absent once `4 pi x >= 1`.
    pub sharp: Option<f64>,
    /// `9 pi x`, valid for every gamma.
    pub linear: f64,
}

/// Eternal bound on `|Q_k exp(-itH) P_k|`.
pub fn leakage_bound(v_norm: f64, gamma: f64, eta: f64) -> LeakageBound {
    let x = v_norm / (gamma * eta);
    LeakageBound {
        sharp: epsilon_of(x).ok(),
        linear: 9.0 * PI * x,
    }
}

/// Leakage bound for the harmonic chain with band gap `omega - 4g`.
pub fn harmonic_chain_bound(v0: f64, omega: f64, g: f64) -> Result<f64> {
    const F: &str = "bounds::harmonic_chain_bound";
    let eta = omega - 4.0 * g;
    if !(eta > 0.0) || !(v0 >= 0.0) {
        return Err(Error::OutOfDomain { function: F, x: v0 });
    }
    let x = v0 / eta;
    epsilon_of(x).map_err(|_| Error::OutOfDomain { function: F, x })
}

/// Leakage bound for a transmon with finite barrier transparency, in units of
/// `E_C`. Uses the first bandgap as `eta` and `E_J D / (8 (1 - D/2))` as `|V|`.
pub fn transmon_leakage_bound(ej_over_ec: f64, transparency_d: f64) -> Result<f64> {
    const F: &str = "bounds::transmon_leakage_bound";
    if !(transparency_d > 0.0 && transparency_d < 1.0) {
        return Err(Error::OutOfDomain {
            function: F,
            x: transparency_d,
        });
    }
    let eta = transmon_bandgap(1, ej_over_ec)?;
    let v_norm = transmon_perturbation_norm(ej_over_ec, transparency_d);
    let x = v_norm / eta;
    epsilon_of(x).map_err(|_| Error::OutOfDomain { function: F, x })
}

/// Every scalar bound for one `(|V|, gamma, eta)` triple.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub v_norm: f64,
    pub gamma: f64,
    pub eta: f64,
    pub x: f64,
    pub delta: Option<f64>,
    pub epsilon: Option<f64>,
    pub d_sw_bound: Option<f64>,
    pub w_distance_bound: Option<f64>,
    pub leakage_linear: f64,
    pub gamma_threshold_bloch: f64,
    pub gamma_threshold_sw: f64,
}

impl BoundReport {
    pub fn evaluate(v_norm: f64, gamma: f64, eta: f64) -> Self {
        Self::from_x(v_norm / (gamma * eta), v_norm, gamma, eta)
    }

    /// Report for a bare ratio `x` (with `|V| = x`, `gamma = eta = 1`).
    pub fn for_x(x: f64) -> Self {
        Self::from_x(x, x, 1.0, 1.0)
    }

    fn from_x(x: f64, v_norm: f64, gamma: f64, eta: f64) -> Self {
        let delta = delta_of(x).ok();
        Self {
            v_norm,
            gamma,
            eta,
            x,
            delta,
            epsilon: epsilon_of(x).ok(),
            d_sw_bound: sw_distance_bound(x).ok(),
            w_distance_bound: delta.filter(|_| sw_condition_holds(x)).and_then(w_distance_bound),
            leakage_linear: 9.0 * PI * x,
            gamma_threshold_bloch: bloch_gamma_threshold(v_norm, eta),
            gamma_threshold_sw: sw_gamma_threshold(v_norm, eta),
        }
    }

    /// Tightest available leakage bound.
    pub fn best_leakage_bound(&self) -> f64 {
        match self.epsilon {
            Some(e) => e.min(self.leakage_linear),
            None => self.leakage_linear,
        }
    }
}
