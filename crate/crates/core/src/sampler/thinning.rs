//! Thinning densities for the compound Poisson parts of the samplers.

use std::f64::consts::LN_2;

use rand::Rng;

use crate::error::{Error, Result};

/// `φ(x) = (e^{-x} - 1 + x) / (x (1 - e^{-x})) = 1/(1 - e^{-x}) - 1/x`.
pub fn phi(x: f64) -> f64 {
    if x < 1e-2 {
        let x2 = x * x;
        0.5 + x / 12.0 - x * x2 / 720.0 + x * x2 * x2 / 30240.0
    } else {
        1.0 / -(-x).exp_m1() - 1.0 / x
    }
}

pub fn thin_accept_phi<R: Rng + ?Sized>(x: f64, rng: &mut R) -> bool {
    rng.gen::<f64>() < phi(x)
}

/// `2^{1-b} - 1`.
fn two_pow_excess(b: f64) -> f64 {
    ((1.0 - b) * LN_2).exp_m1()
}

/// Dominating density factor on `(0, 1/2]`.
pub fn psi(x: f64, b: f64) -> f64 {
    if b <= 1.0 {
        two_pow_excess(b)
    } else {
        (LN_2 - 0.5) * (b - 1.0) * (1.0 - x).powf(b)
    }
}

/// `(1-x)^{b-1} ≥ e^{-2 log 2 (b-1)⁺ x}` on `(0, 1/2]`, written as the
/// non-negative log-gap `(b-1) log(1-x) + 2 log 2 (b-1)⁺ x` for `b > 1` and
/// `(b-1) log(1-x)` otherwise.
pub fn dominance_gap(x: f64, b: f64) -> f64 {
    let log_lhs = (b - 1.0) * (-x).ln_1p();
    log_lhs + 2.0 * LN_2 * (b - 1.0).max(0.0) * x
}

/// Lévy-density ratio `ν_E / ν_{E*}` at jump size `x ∈ (0, 1)`.
pub fn e_ratio(x: f64, b: f64) -> Result<f64> {
    let ratio = if x > 0.5 {
        0.5 / x
    } else if b > 1.0 {
        // [(1-x)^{b-1} - e^{-2 log2 (b-1) x}] / (2 x ψ(x, b))
        let gap = dominance_gap(x, b);
        -(-gap).exp_m1() / (2.0 * x * (1.0 - x) * (LN_2 - 0.5) * (b - 1.0))
    } else if b == 1.0 {
        0.0
    } else {
        ((b - 1.0) * (-x).ln_1p()).exp_m1() / (2.0 * x * two_pow_excess(b))
    };
    if (0.0..=1.0 + 1e-12).contains(&ratio) {
        Ok(ratio)
    } else {
        Err(Error::ThinningRatio { x, b, ratio })
    }
}

pub fn thin_accept_e<R: Rng + ?Sized>(x: f64, b: f64, rng: &mut R) -> Result<bool> {
    Ok(rng.gen::<f64>() < e_ratio(x, b)?)
}

/// Masses of `ν_{E*}` per unit of `c dΛ₀`, below and above one half.
pub fn e_star_masses(b: f64) -> (f64, f64) {
    let lower = if b <= 1.0 {
        two_pow_excess(b)
    } else {
        2.0 * (LN_2 - 0.5) * (b - 1.0) * -(-(b + 1.0) * LN_2).exp_m1() / (b + 1.0)
    };
    let upper = (-(b - 1.0) * LN_2).exp() / b;
    (lower, upper)
}

/// Jump of `E*` below one half: uniform for `b <= 1`, otherwise with density
/// proportional to `(1-x)^b`.
pub fn sample_e_star_lower<R: Rng + ?Sized>(b: f64, rng: &mut R) -> f64 {
    let u: f64 = 1.0 - rng.gen::<f64>();
    if b <= 1.0 {
        0.5 * u
    } else {
        let scale = -(-(b + 1.0) * LN_2).exp_m1();
        -((1.0 - scale * u).ln() / (b + 1.0)).exp_m1()
    }
}

/// Jump of `E*` above one half: `1 - U^{1/b}/2`.
pub fn sample_e_star_upper<R: Rng + ?Sized>(b: f64, rng: &mut R) -> f64 {
    let u: f64 = 1.0 - rng.gen::<f64>();
    1.0 - 0.5 * u.powf(1.0 / b)
}
