//! Marginals of the truncated gamma subordinator, whose Lévy density is
//! `e^{-μx} x^{-1}` on `(0, 1]`.
//!
//! With `λ = max(μ, 1)` the Lévy density splits as
//! `e^{-λx}/x + (e^{-μx} - e^{-λx})/x` on `(0, 1]`. The first term is a gamma
//! process with its jumps above one removed. Over a short enough time piece
//! the whole gamma process is drawn, its jumps revealed in size-biased order
//! by stick-breaking, and the piece is rejected if any jump exceeds one. The
//! second term is compound Poisson with finite intensity `Ein(λ) - Ein(μ)`.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};

use crate::error::{Error, Result};
use crate::special::{ein, gamma0, gamma0_plus_log, ln_gamma};

pub const ITERATION_CAP: u64 = 1_000_000_000;

/// Hyperparameters of the double-rejection scheme for tempered stable
/// marginals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DassiosParams {
    pub mu: f64,
    pub vartheta: f64,
    pub delta: f64,
}

/// `ϑ = 1/(1+μ)`, `δ = 1 - 1/log(e² + μ)`.
pub fn rule_of_thumb(mu: f64) -> DassiosParams {
    assert!(mu >= 0.0, "tempering rate must be non-negative");
    DassiosParams {
        mu,
        vartheta: 1.0 / (1.0 + mu),
        delta: 1.0 - 1.0 / (std::f64::consts::E.powi(2) + mu).ln(),
    }
}

/// `log C(ϑ, δ, μ)` with `ζ = Γ(0, μ) + ϑ + log μ`.
pub fn ln_acceptance_constant(p: &DassiosParams) -> f64 {
    let zeta = gamma0_plus_log(p.mu) + p.vartheta;
    let ez = zeta.exp();
    -p.mu - 1.0 + ln_gamma(p.delta) - (1.0 - p.delta).ln() + zeta * ez - p.vartheta.ln() - ln_gamma(ez + p.delta)
}

/// Reciprocal acceptance probability `C(ϑ, δ, μ)`.
pub fn acceptance_constant(p: &DassiosParams) -> f64 {
    ln_acceptance_constant(p).exp()
}

/// Draws `L_t` for the truncated gamma subordinator with tempering `mu`.
pub fn sample_truncated_gamma<R: Rng + ?Sized>(t: f64, mu: f64, rng: &mut R) -> Result<f64> {
    if !(t >= 0.0 && t.is_finite() && mu >= 0.0 && mu.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "truncated gamma needs t >= 0, mu >= 0 (t = {t}, mu = {mu})"
        )));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let lambda = mu.max(1.0);
    let mut iterations = 0u64;
    let mut total = truncated_base(t, lambda, rng, &mut iterations)?;
    if mu < lambda {
        let rate = t * (ein(lambda) - ein(mu));
        if rate > 0.0 {
            let count = Poisson::new(rate).expect("positive finite rate").sample(rng) as u64;
            for _ in 0..count {
                total += tempering_jump(mu, lambda, rng, &mut iterations)?;
            }
        }
    }
    Ok(total)
}

/// Gamma process with rate `λ >= 1`, jumps above one removed, at time `t`.
fn truncated_base<R: Rng + ?Sized>(t: f64, lambda: f64, rng: &mut R, iterations: &mut u64) -> Result<f64> {
    let pieces = (t * gamma0(lambda)).ceil().max(1.0);
    let s = t / pieces;
    let gamma = Gamma::new(s, 1.0 / lambda).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut total = 0.0;
    for _ in 0..pieces as u64 {
        'piece: loop {
            bump(iterations)?;
            let g = gamma.sample(rng);
            let mut remaining = g;
            while remaining > 1.0 {
                bump(iterations)?;
                let u: f64 = rng.gen();
                // Beta(1, s) stick
                let v = -(u.ln() / s).exp_m1();
                let stick = remaining * v;
                if stick > 1.0 {
                    continue 'piece;
                }
                remaining -= stick;
            }
            total += g;
            break;
        }
    }
    Ok(total)
}

/// Jump with density proportional to `(e^{-μx} - e^{-λx})/x` on `(0, 1)`.
fn tempering_jump<R: Rng + ?Sized>(mu: f64, lambda: f64, rng: &mut R, iterations: &mut u64) -> Result<f64> {
    let gap = lambda - mu;
    loop {
        bump(iterations)?;
        let x: f64 = 1.0 - rng.gen::<f64>();
        let accept = (-mu * x).exp() * -(-gap * x).exp_m1() / (gap * x);
        if rng.gen::<f64>() < accept {
            return Ok(x);
        }
    }
}

fn bump(iterations: &mut u64) -> Result<()> {
    *iterations += 1;
    if *iterations > ITERATION_CAP {
        Err(Error::IterationCap(ITERATION_CAP))
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;
    use crate::quad;
    use crate::rng::RngStream;

    #[test]
    fn rule_of_thumb_values() {
        let p = rule_of_thumb(0.0);
        assert_eq!(p.vartheta, 1.0);
        assert_relative_eq!(p.delta, 0.5, max_relative = 1e-15);
        let e = std::f64::consts::E;
        assert_relative_eq!(
            rule_of_thumb(e.powi(3) - e.powi(2)).delta,
            2.0 / 3.0,
            max_relative = 1e-14
        );
        let big = rule_of_thumb(1e12);
        assert!(big.vartheta < 1e-11 && big.delta > 0.96);
    }

    /// Display evaluated with `Γ(0, μ)` from quadrature.
    fn constant_oracle(p: &DassiosParams) -> f64 {
        let g0 = quad::integrate_to_infinity(|s| (-s).exp() / s, p.mu, 1e-14);
        let zeta = g0 + p.vartheta + p.mu.ln();
        let ez = zeta.exp();
        (-p.mu - 1.0).exp() * ln_gamma(p.delta).exp() / (1.0 - p.delta) * (zeta * ez).exp()
            / (p.vartheta * ln_gamma(ez + p.delta).exp())
    }

    #[test]
    fn acceptance_constant_matches_direct_evaluation() {
        for mu in [0.1, 1.0, 10.0] {
            let p = rule_of_thumb(mu);
            assert_relative_eq!(acceptance_constant(&p), constant_oracle(&p), max_relative = 1e-10);
        }
    }

    #[test]
    fn acceptance_constant_sweep() {
        for mu in [0.0, 0.1, 1.0, 10.0, 100.0] {
            let c = acceptance_constant(&rule_of_thumb(mu));
            assert!(c >= 1.0 && 1.0 / c > 0.01, "mu = {mu}: C = {c}");
        }
        let limit = acceptance_constant(&rule_of_thumb(0.0));
        let near = acceptance_constant(&DassiosParams {
            mu: 1e-12,
            ..rule_of_thumb(0.0)
        });
        assert_relative_eq!(limit, near, max_relative = 1e-9);
    }

    #[test]
    fn mean_matches_levy_measure() {
        for (mu, t) in [(0.0, 1.0), (1.0, 2.0), (20.0, 0.5)] {
            let mut rng = RngStream::new(5, 0);
            let m = 100_000;
            let draws: Vec<f64> = (0..m)
                .map(|_| sample_truncated_gamma(t, mu, &mut rng).unwrap())
                .collect();
            let mean = draws.iter().sum::<f64>() / m as f64;
            let sd = (draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (m - 1) as f64).sqrt();
            let exact = if mu == 0.0 { t } else { t * -(-mu).exp_m1() / mu };
            assert!(
                (mean - exact).abs() < 4.0 * sd / (m as f64).sqrt(),
                "mu={mu} t={t}: {mean} vs {exact}"
            );
        }
    }

    #[test]
    fn small_time_is_small() {
        let mut rng = RngStream::new(6, 0);
        let mut draws: Vec<f64> = (0..1001)
            .map(|_| sample_truncated_gamma(1e-6, 1.0, &mut rng).unwrap())
            .collect();
        draws.sort_by(f64::total_cmp);
        assert!(draws[500] < 1e-3);
        assert_eq!(sample_truncated_gamma(0.0, 1.0, &mut rng).unwrap(), 0.0);
    }

    #[test]
    fn jumps_never_exceed_one_for_tiny_time() {
        // at tiny t, L_t is a single jump with high probability
        let mut rng = RngStream::new(7, 0);
        let over = (0..20_000)
            .filter(|_| sample_truncated_gamma(1e-3, 0.0, &mut rng).unwrap() > 1.0)
            .count();
        // P(L > 1) = O(t²) here
        assert!(over <= 2, "{over}");
    }
}
