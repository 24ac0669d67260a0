//! Exponential integrals.

pub use statrs::function::gamma::ln_gamma;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const MAX_TERMS: usize = 500;

/// Upper incomplete gamma `Γ(0, x) = E1(x) = ∫_x^∞ e^{-t}/t dt` for `x > 0`.
///
/// Power series below one, Lentz continued fraction above.
pub fn gamma0(x: f64) -> f64 {
    assert!(x > 0.0, "Γ(0, x) requires x > 0");
    if x < 1.0 {
        -EULER_GAMMA - x.ln() + ein_series(x)
    } else {
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..MAX_TERMS {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// `Σ_{k>=1} (-1)^{k+1} x^k / (k k!)`.
fn ein_series(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..MAX_TERMS {
        term *= x / k as f64;
        let contribution = term / k as f64;
        if k % 2 == 1 {
            sum += contribution;
        } else {
            sum -= contribution;
        }
        if contribution < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// Entire exponential integral `Ein(x) = ∫_0^x (1 - e^{-u})/u du`, `x >= 0`.
pub fn ein(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if x < 1.0 {
        ein_series(x)
    } else {
        EULER_GAMMA + x.ln() + gamma0(x)
    }
}

/// `Γ(0, μ) + log μ`, continuous at `μ = 0` where it equals `-γ`.
pub fn gamma0_plus_log(mu: f64) -> f64 {
    if mu == 0.0 {
        -EULER_GAMMA
    } else {
        gamma0(mu) + mu.ln()
    }
}
