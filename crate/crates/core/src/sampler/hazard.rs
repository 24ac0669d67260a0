//! Hazard paths `H = H^d + D + E`.
//!
//! On a piece with constant `c` and `b`, `D` is half a truncated gamma
//! subordinator run for time `c ΔΛ₀` with tempering `log 2 (b-1)⁺`, and `E` is
//! obtained by thinning a compound Poisson process `E*` whose jumps below and
//! above one half are drawn separately.

use std::f64::consts::LN_2;

use rand_distr::{Distribution, Poisson};

use super::thinning::{e_ratio, e_star_masses, sample_e_star_lower, sample_e_star_upper};
use super::truncated_gamma::sample_truncated_gamma;
use super::{gamma_draw, Cell, PathPlan, PathSample};
use crate::betastacy::{BetaStacyPosterior, PosteriorAtom};
use crate::error::Result;
use crate::rng::RngStream;
use rand::Rng;

pub fn sample_h_path(post: &BetaStacyPosterior, grid: &[f64], rng: &mut RngStream) -> Result<PathSample> {
    sample_plan(&PathPlan::new(post, grid)?, rng)
}

pub(crate) fn sample_plan(plan: &PathPlan, rng: &mut RngStream) -> Result<PathSample> {
    plan.accumulate(rng, continuous_increment, beta_jump)
}

fn continuous_increment(cell: &Cell, rng: &mut RngStream) -> Result<f64> {
    if cell.c.is_infinite() {
        return Ok(cell.mass);
    }
    let time = cell.c * cell.mass;
    let b = cell.b;
    let mu = LN_2 * (b - 1.0).max(0.0);
    let mut total = 0.5 * sample_truncated_gamma(time, mu, rng)?;

    let (lower, upper) = e_star_masses(b);
    for _ in 0..poisson(time * lower, rng) {
        let x = sample_e_star_lower(b, rng);
        if rng.gen::<f64>() < e_ratio(x, b)? {
            total += x;
        }
    }
    for _ in 0..poisson(time * upper, rng) {
        let x = sample_e_star_upper(b, rng);
        if rng.gen::<f64>() < e_ratio(x, b)? {
            total += x;
        }
    }
    Ok(total)
}

pub(crate) fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean > 0.0 {
        Poisson::new(mean).expect("finite positive mean").sample(rng) as u64
    } else {
        0
    }
}

/// `ξ ~ Beta(ΔN, b - ΔN)` as a ratio of gammas.
fn beta_jump(atom: &PosteriorAtom, rng: &mut RngStream) -> f64 {
    if atom.tuning.is_infinite() {
        return 0.0;
    }
    let g1 = gamma_draw(atom.events, 1.0, rng);
    let g2 = gamma_draw(atom.b() - atom.events, 1.0, rng);
    g1 / (g1 + g2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::betastacy::{posterior_mean, posterior_update, BetaStacyPrior};
    use crate::data::SurvivalSample;
    use crate::stepfun::{DensityForm, HazardMeasure, StepFunction};

    fn mc(post: &BetaStacyPosterior, t: f64, m: usize, seed: u64) -> (f64, f64) {
        let plan = PathPlan::new(post, &[t]).unwrap();
        let idx = plan.grid().iter().position(|&g| g == t).unwrap();
        let draws: Vec<f64> = (0..m)
            .map(|i| sample_plan(&plan, &mut RngStream::new(seed, i as u64)).unwrap().values[idx])
            .collect();
        let mean = draws.iter().sum::<f64>() / m as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
        (mean, var)
    }

    #[test]
    fn prior_mean_without_data() {
        for c in [0.3, 1.0, 4.0] {
            let prior = BetaStacyPrior::new(
                StepFunction::constant(c),
                HazardMeasure::density_from(0.0, DensityForm::Constant { rate: 1.0 }).unwrap(),
            )
            .unwrap();
            let post = posterior_update(&prior, &SurvivalSample::empty()).unwrap();
            let (mean, var) = mc(&post, 1.5, 20_000, 1);
            let se = (var / 20_000.0).sqrt();
            assert!((mean - posterior_mean(&post, 1.5)).abs() < 4.0 * se, "c={c}: {mean}");
        }
    }

    #[test]
    fn zero_weight_gives_pure_beta_jumps() {
        let prior = BetaStacyPrior::new(
            StepFunction::constant(0.0),
            HazardMeasure::density_from(0.0, DensityForm::Constant { rate: 1.0 }).unwrap(),
        )
        .unwrap();
        let s = SurvivalSample::from_pairs(&[(1.0, true), (2.0, false), (3.0, true)]).unwrap();
        let post = posterior_update(&prior, &s).unwrap();
        let path = sample_h_path(&post, &[0.5, 1.5, 2.5, 5.0], &mut RngStream::new(2, 0)).unwrap();
        assert_eq!(path.values[0], 0.0);
        let i1 = path.grid.iter().position(|&g| g == 1.0).unwrap();
        assert_eq!(path.values[i1], path.values[i1 + 1]);
        // Y = ΔN at the last event: the jump is exactly one
        let last = path.values.last().unwrap() - path.values[path.grid.iter().position(|&g| g == 2.5).unwrap()];
        assert!((last - 1.0).abs() < 1e-12, "{last}");
    }
}
