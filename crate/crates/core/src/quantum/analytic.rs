//! Small-angle model of the three-site open chain.
//!
//! Per cycle, `P' = P (1 - t^4/3) + (1 - P)(2t^2/3 - t^4/6)` from `P = 2/3`,
//! i.e. `P' = K P + Z` with `K = 1 - 2t^2/3 - t^4/6`, `Z = 2t^2/3 - t^4/6`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const P0: f64 = 2.0 / 3.0;

pub fn k_coefficient(theta: f64) -> f64 {
    1.0 - 2.0 * theta.powi(2) / 3.0 - theta.powi(4) / 6.0
}

pub fn z_coefficient(theta: f64) -> f64 {
    2.0 * theta.powi(2) / 3.0 - theta.powi(4) / 6.0
}

/// One cycle of the recursion.
pub fn recursion_step(p: f64, theta: f64) -> f64 {
    p * (1.0 - theta.powi(4) / 3.0) + (1.0 - p) * z_coefficient(theta)
}

/// `P^r` by iterating the recursion from `P^0 = 2/3`.
pub fn open_chain_recursion(theta: f64, r: usize) -> f64 {
    (0..r).fold(P0, |p, _| recursion_step(p, theta))
}

/// Closed form `P^0 K^r + Z (1 - K^r) / (1 - K)`.
pub fn open_chain_closed_form(theta: f64, r: usize) -> f64 {
    let k = k_coefficient(theta);
    let z = z_coefficient(theta);
    if theta == 0.0 {
        return P0;
    }
    let kr = k.powi(r as i32);
    P0 * kr + z * (1.0 - kr) / (1.0 - k)
}

/// `Z / (1 - K) = (4 - t^2) / (4 + t^2)`.
pub fn fixed_point(theta: f64) -> f64 {
    (4.0 - theta * theta) / (4.0 + theta * theta)
}

/// Printed asymptote `1 - t^2 / (3t^2/4 + 1)`, reported for comparison.
pub fn printed_asymptote(theta: f64) -> f64 {
    1.0 - theta * theta / (0.75 * theta * theta + 1.0)
}

/// Printed five-site asymptote `1 - t^2 / (5/16 + 147 t^2 / 160)`.
pub fn printed_five_chain_asymptote(theta: f64) -> f64 {
    1.0 - theta * theta / (5.0 / 16.0 + 147.0 / 160.0 * theta * theta)
}

/// Printed threshold angle `sqrt(4(1 - T) / (4 + 3T))`.
pub fn printed_threshold_angle(t: f64) -> f64 {
    (4.0 * (1.0 - t) / (4.0 + 3.0 * t)).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdAngle {
    /// Solution of `fixed_point(theta) = T` by bisection.
    pub theta: f64,
    /// Algebraic solution `sqrt(4(1 - T)/(1 + T))`.
    pub theta_closed_form: f64,
    pub printed: f64,
}

/// Angle at which the asymptote of the recursion equals `t`.
pub fn threshold_angle(t: f64) -> Result<ThresholdAngle> {
    if !(t > P0 - 1e-15 && t < 1.0) {
        return Err(Error::InvalidParameter(format!("threshold must lie in [2/3, 1), got {t}")));
    }
    // fixed_point is decreasing on [0, 2]; fixed_point(2) = 0.
    let (mut lo, mut hi) = (0.0f64, 2.0f64);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if fixed_point(mid) > t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ThresholdAngle {
        theta: 0.5 * (lo + hi),
        theta_closed_form: (4.0 * (1.0 - t) / (1.0 + t)).sqrt(),
        printed: printed_threshold_angle(t),
    })
}

/// Smallest `r` with `P^r > t` under the recursion, if reachable.
pub fn cycles_to_threshold(theta: f64, t: f64) -> Option<usize> {
    if P0 > t {
        return Some(0);
    }
    let inf = fixed_point(theta);
    if inf <= t || theta == 0.0 {
        return None;
    }
    let k = k_coefficient(theta);
    let bound = ((t - inf) / (P0 - inf)).ln() / k.ln();
    // Guard the floating-point edge by checking neighbors.
    let mut r = bound.floor().max(0.0) as usize;
    while open_chain_closed_form(theta, r) <= t {
        r += 1;
    }
    while r > 0 && open_chain_closed_form(theta, r - 1) > t {
        r -= 1;
    }
    Some(r)
}
