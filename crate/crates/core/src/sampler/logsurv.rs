//! Log-survival paths `A = -log F̄ = A^d + B + C`.
//!
//! On a piece with constant `c` and `b`, `B` is a gamma variable with shape
//! `c ΔΛ₀` and rate `b`, and `C` thins a compound Poisson process with
//! `Exp(b)` jumps and mean count `(c/b) ΔΛ₀`, keeping a jump of size `x` with
//! probability `φ(x)`.

use super::hazard::poisson;
use super::thinning::phi;
use super::{gamma_draw, Cell, PathPlan, PathSample};
use crate::betastacy::{BetaStacyPosterior, PosteriorAtom};
use crate::error::Result;
use crate::rng::RngStream;
use rand::Rng;
use rand_distr::Exp1;

pub fn sample_a_path(post: &BetaStacyPosterior, grid: &[f64], rng: &mut RngStream) -> Result<PathSample> {
    sample_plan(&PathPlan::new(post, grid)?, rng)
}

pub(crate) fn sample_plan(plan: &PathPlan, rng: &mut RngStream) -> Result<PathSample> {
    plan.accumulate(rng, continuous_increment, log_beta_jump)
}

fn continuous_increment(cell: &Cell, rng: &mut RngStream) -> Result<f64> {
    if cell.c.is_infinite() {
        return Ok(cell.mass);
    }
    let b = cell.b;
    let mut total = gamma_draw(cell.c * cell.mass, b, rng);
    for _ in 0..poisson(cell.c / b * cell.mass, rng) {
        let e: f64 = rng.sample(Exp1);
        let x = e / b;
        if rng.gen::<f64>() < phi(x) {
            total += x;
        }
    }
    Ok(total)
}

/// `-log(1 - ξ)` with `ξ ~ Beta(ΔN, b - ΔN)`, i.e. `log(G₁ + G₂) - log G₂`;
/// `+∞` when `b = ΔN`.
fn log_beta_jump(atom: &PosteriorAtom, rng: &mut RngStream) -> f64 {
    if atom.tuning.is_infinite() {
        return 0.0;
    }
    let g1 = gamma_draw(atom.events, 1.0, rng);
    let g2 = gamma_draw(atom.b() - atom.events, 1.0, rng);
    if g2 == 0.0 {
        f64::INFINITY
    } else {
        (g1 / g2).ln_1p()
    }
}
