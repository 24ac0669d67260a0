//! Conditional Beta-Stacy priors, their conjugate update under right
//! censoring, posterior moments, the product integral and the spliced
//! estimators.
//!
//! A prior is a pair `(c, Λ₀)` with `c >= 0` piecewise constant (possibly
//! `+∞` on intervals, meaning the hazard is frozen at `Λ₀` there) and `Λ₀` an
//! atomless hazard measure. Given a sample, the posterior has tuning
//! `b = c + Y`, continuous Lévy part `c (1-x)^{b-1} x^{-1} dx dΛ₀` and a
//! `Beta(ΔN, b - ΔN)` jump at every event time.
//!
//! Where `c = 0` the continuous part carries no weight, including where
//! `Y = 0` as well.

use serde::{Deserialize, Serialize};

use crate::data::{at_risk_cadlag, event_counting, SurvivalSample};
use crate::error::{Error, Result};
use crate::stepfun::{DensityForm, DensityPiece, HazardMeasure, PointMass, StepFunction};
use crate::tails::TailFit;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaStacyPrior {
    c: StepFunction,
    baseline: HazardMeasure,
}

impl BetaStacyPrior {
    pub fn new(c: StepFunction, baseline: HazardMeasure) -> Result<Self> {
        if c.values().iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::InvalidInput("tuning function must be non-negative".into()));
        }
        if !baseline.atoms().is_empty() {
            return Err(Error::InvalidInput("baseline hazard must be atomless".into()));
        }
        Ok(Self { c, baseline })
    }

    pub fn c(&self) -> &StepFunction {
        &self.c
    }

    pub fn baseline(&self) -> &HazardMeasure {
        &self.baseline
    }

    /// Whether the baseline has infinite total mass, which makes the prior
    /// draw a proper distribution.
    pub fn is_proper(&self) -> bool {
        self.baseline.total_mass().is_infinite()
    }
}

/// Fixed jump of the posterior at an event time: `Beta(events, b - events)`
/// with `b = c(t) + Y(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosteriorAtom {
    pub time: f64,
    pub events: f64,
    pub at_risk: f64,
    pub tuning: f64,
}

impl PosteriorAtom {
    pub fn b(&self) -> f64 {
        self.tuning + self.at_risk
    }

    /// Posterior mean jump `ΔN / b`; zero under an infinite tuning weight.
    pub fn mean_mass(&self) -> f64 {
        if self.tuning.is_infinite() {
            0.0
        } else {
            self.events / self.b()
        }
    }

    /// `ΔN (b - ΔN) / (b² (b + 1))`.
    pub fn variance(&self) -> f64 {
        if self.tuning.is_infinite() {
            0.0
        } else {
            let b = self.b();
            self.events * (b - self.events) / (b * b * (b + 1.0))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BetaStacyPosterior {
    prior: BetaStacyPrior,
    events: StepFunction,
    at_risk: StepFunction,
    n: usize,
    b: StepFunction,
    cont_scale: StepFunction,
    atoms: Vec<PosteriorAtom>,
}

/// `c / (c + y)` with the conventions `∞ ↦ 1` and `c = 0 ↦ 0`.
pub fn weight_ratio(c: f64, y: f64) -> f64 {
    if c.is_infinite() {
        1.0
    } else if c == 0.0 {
        0.0
    } else {
        c / (c + y)
    }
}

/// `c / ((c + y)(c + y + 1))`, zero for `c ∈ {0, ∞}`.
fn variance_weight(c: f64, y: f64) -> f64 {
    if c.is_infinite() || c == 0.0 {
        0.0
    } else {
        let b = c + y;
        c / (b * (b + 1.0))
    }
}

impl BetaStacyPosterior {
    fn assemble(prior: BetaStacyPrior, events: StepFunction, at_risk: StepFunction, n: usize) -> Result<Self> {
        let b = prior.c.add(&at_risk);
        let cont_scale = prior.c.zip_with(&at_risk, weight_ratio);
        let mut atoms = Vec::new();
        let mut previous = events.eval(0.0);
        for (&time, &level) in events.breakpoints().iter().zip(&events.values()[1..]) {
            let atom = PosteriorAtom {
                time,
                events: level - previous,
                at_risk: at_risk.left_limit(time),
                tuning: prior.c.eval(time),
            };
            previous = level;
            if !(atom.events >= 1.0 && atom.b() >= atom.events) {
                return Err(Error::AtomValidity {
                    time,
                    tuning: atom.b(),
                    events: atom.events,
                });
            }
            atoms.push(atom);
        }
        Ok(Self {
            prior,
            events,
            at_risk,
            n,
            b,
            cont_scale,
            atoms,
        })
    }

    /// Posterior after additionally observing `s` (same prior).
    pub fn extend(&self, s: &SurvivalSample) -> Result<Self> {
        Self::assemble(
            self.prior.clone(),
            self.events.add(&event_counting(s)),
            self.at_risk.add(&at_risk_cadlag(s)),
            self.n + s.len(),
        )
    }

    pub fn prior(&self) -> &BetaStacyPrior {
        &self.prior
    }

    pub fn c(&self) -> &StepFunction {
        &self.prior.c
    }

    pub fn baseline(&self) -> &HazardMeasure {
        &self.prior.baseline
    }

    /// Tuning `b = c + Y` (càdlàg version).
    pub fn b(&self) -> &StepFunction {
        &self.b
    }

    /// `c / b`, the weight on the baseline density.
    pub fn cont_scale(&self) -> &StepFunction {
        &self.cont_scale
    }

    /// Càdlàg at-risk counts `#{T_i > t}`.
    pub fn at_risk(&self) -> &StepFunction {
        &self.at_risk
    }

    pub fn atoms(&self) -> &[PosteriorAtom] {
        &self.atoms
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Breakpoints of `c` and `Y`; both are constant between consecutive ones.
    pub fn tuning_breaks(&self) -> Vec<f64> {
        crate::stepfun::merge_sorted(self.prior.c.breakpoints(), self.at_risk.breakpoints())
    }

    fn weighted_continuous(&self, t: f64, weight: impl Fn(f64, f64) -> f64) -> f64 {
        let mut total = 0.0;
        let mut start = 0.0;
        for end in self.tuning_breaks().into_iter().chain(std::iter::once(f64::INFINITY)) {
            if start >= t {
                break;
            }
            let mass = self.prior.baseline.continuous_mass(start, end.min(t));
            if mass > 0.0 {
                let w = weight(self.prior.c.eval(start), self.at_risk.eval(start));
                if w != 0.0 {
                    total += w * mass;
                }
            }
            start = end;
        }
        total
    }

    /// Posterior mean hazard as a measure: the baseline density scaled by
    /// `c / b` plus atoms `ΔN / b`.
    pub fn mean_measure(&self) -> HazardMeasure {
        let breaks = self.tuning_breaks();
        let mut pieces = Vec::new();
        for piece in self.prior.baseline.pieces() {
            let mut start = piece.start;
            let cuts = breaks.iter().copied().filter(|&b| b > piece.start && b < piece.end);
            for end in cuts.chain(std::iter::once(piece.end)) {
                let w = self.cont_scale.eval(start);
                if w > 0.0 {
                    pieces.push(DensityPiece::new(start, end, piece.form.scaled(w)));
                }
                start = end;
            }
        }
        let atoms = self
            .atoms
            .iter()
            .map(|a| PointMass {
                time: a.time,
                mass: a.mean_mass(),
            })
            .collect();
        HazardMeasure::new(pieces, atoms).expect("scaled pieces of a valid measure")
    }
}

pub fn posterior_update(prior: &BetaStacyPrior, s: &SurvivalSample) -> Result<BetaStacyPosterior> {
    BetaStacyPosterior::assemble(prior.clone(), event_counting(s), at_risk_cadlag(s), s.len())
}

/// `E[H(t) | data] = ∫_0^t c/b dΛ₀ + Σ_{t_i <= t} ΔN/b`.
pub fn posterior_mean(post: &BetaStacyPosterior, t: f64) -> f64 {
    let atoms: f64 = post
        .atoms
        .iter()
        .take_while(|a| a.time <= t)
        .map(PosteriorAtom::mean_mass)
        .sum();
    post.weighted_continuous(t, weight_ratio) + atoms
}

/// `Var[H(t) | data] = ∫_0^t c/(b(b+1)) dΛ₀ + Σ_{t_i <= t} ΔN(b-ΔN)/(b²(b+1))`.
pub fn posterior_variance(post: &BetaStacyPosterior, t: f64) -> f64 {
    let atoms: f64 = post
        .atoms
        .iter()
        .take_while(|a| a.time <= t)
        .map(PosteriorAtom::variance)
        .sum();
    post.weighted_continuous(t, variance_weight) + atoms
}

/// `exp(-H^c(t)) ∏_{s <= t} (1 - ΔH(s))`.
pub fn product_integral(h: &HazardMeasure, t: f64) -> Result<f64> {
    let mut product = 1.0;
    for atom in h.atoms().iter().take_while(|a| a.time <= t) {
        if atom.mass > 1.0 {
            return Err(Error::JumpExceedsOne {
                time: atom.time,
                mass: atom.mass,
            });
        }
        product *= 1.0 - atom.mass;
    }
    if product == 0.0 {
        return Ok(0.0);
    }
    Ok((-h.continuous_cumulative(t)).exp() * product)
}

/// Product integral of a purely discrete cumulative hazard given as a step
/// function.
pub fn product_integral_steps(h: &StepFunction, t: f64) -> Result<f64> {
    if !h.is_non_decreasing() || h.eval(0.0) != 0.0 {
        return Err(Error::InvalidInput(
            "cumulative hazard must start at zero and be non-decreasing".into(),
        ));
    }
    let mut product = 1.0;
    let mut previous = 0.0;
    for (&time, &level) in h.breakpoints().iter().zip(&h.values()[1..]) {
        if time > t {
            break;
        }
        let mass = level - previous;
        if mass > 1.0 {
            return Err(Error::JumpExceedsOne { time, mass });
        }
        product *= 1.0 - mass;
        previous = level;
    }
    Ok(product)
}

/// Spliced survival estimate: the product integral of the posterior mean
/// hazard.
pub fn spliced_survival(post: &BetaStacyPosterior, t: f64) -> Result<f64> {
    product_integral(&post.mean_measure(), t)
}

/// Spliced survival on a grid, building the mean measure once.
pub fn spliced_survival_curve(post: &BetaStacyPosterior, grid: &[f64]) -> Result<Vec<f64>> {
    let h = post.mean_measure();
    grid.iter().map(|&t| product_integral(&h, t)).collect()
}

/// Prior weight `a_n` above the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "value", rename_all = "snake_case")]
pub enum WeightRule {
    LogN,
    Const(f64),
    /// Exact splicing: the data are ignored above the threshold.
    Infinity,
}

impl WeightRule {
    pub fn value(&self, n: usize) -> f64 {
        match *self {
            WeightRule::LogN => (n as f64).ln(),
            WeightRule::Const(a) => a,
            WeightRule::Infinity => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpliceSpec {
    /// Constant hazard below the threshold.
    pub q: f64,
    /// Threshold; defaults to the fit's `T_{n-k,n}`.
    #[serde(default)]
    pub t0: Option<f64>,
    pub a_n: WeightRule,
    pub n: usize,
    /// Start of the tail density; defaults to `t0` for Pareto tails and to 1
    /// for Weibull tails.
    #[serde(default)]
    pub tail_from: Option<f64>,
}

/// `2^{-n}`, flushed to zero once it leaves the double range.
pub fn vanishing_weight(n: usize) -> f64 {
    if n >= 1075 {
        0.0
    } else {
        0.5f64.powi(n as i32)
    }
}

/// Prior with `c = 2^{-n}` below `t0` and `a_n` from `t0` on, and baseline
/// density `q` below `t0` plus the fitted tail density from `tail_from` on.
pub fn make_spliced_prior(fit: &TailFit, spec: &SpliceSpec) -> Result<BetaStacyPrior> {
    let t0 = spec.t0.unwrap_or(fit.threshold);
    if !(t0 > 0.0 && t0.is_finite()) {
        return Err(Error::InvalidInput(format!("threshold {t0} must be positive")));
    }
    if !(spec.q >= 0.0 && spec.q.is_finite()) {
        return Err(Error::InvalidInput(format!("q = {} must be non-negative", spec.q)));
    }
    let a_n = spec.a_n.value(spec.n);
    if !(a_n > 0.0) {
        return Err(Error::InvalidInput(format!("a_n = {a_n} must be positive")));
    }
    let tail_from = spec.tail_from.unwrap_or(if fit.is_pareto() { t0 } else { 1.0 });
    let c = StepFunction::new(vec![t0], vec![vanishing_weight(spec.n), a_n])?;
    let mut pieces = Vec::with_capacity(2);
    if spec.q > 0.0 {
        pieces.push(DensityPiece::new(0.0, t0, DensityForm::Constant { rate: spec.q }));
    }
    pieces.push(DensityPiece::new(tail_from, f64::INFINITY, fit.density_form()));
    BetaStacyPrior::new(c, HazardMeasure::new(pieces, Vec::new())?)
}
