//! Error-function helpers.

use statrs::function::erf as sf;

use crate::error::{Error, Result};

pub fn erf(x: f64) -> f64 {
    sf::erf(x)
}

pub fn erfc(x: f64) -> f64 {
    sf::erfc(x)
}

/// Inverse of the complementary error function on `(0, 2)`.
///
/// Bracketed bisection followed by a few Newton steps; accurate to about
/// `1e-14` absolute, which is well below anything the window bounds need.
pub fn erfc_inv(delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 2.0) {
        return Err(Error::DomainError {
            function: "erfc_inv",
            value: delta,
        });
    }
    if delta == 1.0 {
        return Ok(0.0);
    }
    // erfc is odd about (0, 1), so solve on the positive branch.
    if delta > 1.0 {
        return erfc_inv(2.0 - delta).map(|y| -y);
    }
    // erfc(y) < 1e-300 once y > 26.5, so this bracket covers every double.
    let (mut lo, mut hi) = (0.0_f64, 27.0_f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if erfc(mid) > delta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut y = 0.5 * (lo + hi);
    let two_over_sqrt_pi = std::f64::consts::FRAC_2_SQRT_PI;
    for _ in 0..3 {
        let slope = -two_over_sqrt_pi * (-y * y).exp();
        if slope == 0.0 {
            break;
        }
        let step = (erfc(y) - delta) / slope;
        let next = y - step;
        if !(next.is_finite() && next > lo - 1e-9 && next < hi + 1e-9) {
            break;
        }
        y = next;
    }
    Ok(y)
}

/// Upper bound `sqrt(ln(1/δ) + ln(π)/2 − ln 2)` on `erfc_inv(δ)`, valid for `δ ≤ erfc(1)`.
pub fn erfc_inv_upper_bound(delta: f64) -> f64 {
    ((1.0 / delta).ln() + 0.5 * std::f64::consts::PI.ln() - 2f64.ln()).sqrt()
}
