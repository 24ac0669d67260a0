//! Exact simulation of posterior hazard and log-survival paths.
//!
//! Both processes have independent increments, so a path on a grid is built
//! from independent draws over the grid cells. Every cell is split further
//! where `c` or `Y` change, so that the tuning `b = c + Y` is constant on each
//! piece, and the fixed jumps at event times are always grid points.

mod hazard;
mod logsurv;
mod thinning;
mod truncated_gamma;

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

pub use hazard::sample_h_path;
pub use logsurv::sample_a_path;
pub use thinning::{
    dominance_gap, e_ratio, e_star_masses, phi, psi, sample_e_star_lower, sample_e_star_upper, thin_accept_e,
    thin_accept_phi,
};
pub use truncated_gamma::{
    acceptance_constant, ln_acceptance_constant, rule_of_thumb, sample_truncated_gamma, DassiosParams, ITERATION_CAP,
};

use crate::betastacy::{BetaStacyPosterior, PosteriorAtom};
use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Which functional of the posterior a path records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProcessKind {
    /// Cumulative hazard `H`.
    Hazard,
    /// `A = -log F̄`.
    LogSurvival,
    /// `F̄ = exp(-A)`.
    Survival,
}

/// One sampled path on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    /// Set when a fixed jump has `b = ΔN`, sending the log-survival to `+∞`.
    pub diverged: bool,
}

/// Piece of a grid cell on which `c` and `b` are constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Cell {
    pub c: f64,
    pub b: f64,
    /// Baseline mass `ΔΛ₀` of the piece.
    pub mass: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct Step {
    pub cells: Vec<Cell>,
    pub atoms: Vec<PosteriorAtom>,
}

/// Grid refined with the event times and the per-cell tuning values; built
/// once and shared by all paths of an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct PathPlan {
    grid: Vec<f64>,
    steps: Vec<Step>,
}

impl PathPlan {
    pub fn new(post: &BetaStacyPosterior, grid: &[f64]) -> Result<Self> {
        let grid = path_grid(post, grid)?;
        let breaks = post.tuning_breaks();
        let mut steps = Vec::with_capacity(grid.len());
        let mut atoms = post.atoms().iter().peekable();
        let mut prev = 0.0;
        for &g in &grid {
            let mut step = Step::default();
            let mut start = prev;
            let inner = breaks.iter().copied().filter(|&b| b > prev && b < g);
            for end in inner.chain(std::iter::once(g)) {
                if end > start {
                    let mass = post.baseline().continuous_mass(start, end);
                    let c = post.c().eval(start);
                    if mass > 0.0 && c > 0.0 {
                        step.cells.push(Cell {
                            c,
                            b: c + post.at_risk().eval(start),
                            mass,
                        });
                    }
                }
                start = end;
            }
            while let Some(a) = atoms.next_if(|a| a.time <= g) {
                step.atoms.push(*a);
            }
            steps.push(step);
            prev = g;
        }
        Ok(Self { grid, steps })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    #[cfg(test)]
    pub(crate) fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub(crate) fn accumulate(
        &self,
        rng: &mut RngStream,
        mut cell: impl FnMut(&Cell, &mut RngStream) -> Result<f64>,
        mut atom: impl FnMut(&PosteriorAtom, &mut RngStream) -> f64,
    ) -> Result<PathSample> {
        let mut level = 0.0;
        let mut values = Vec::with_capacity(self.grid.len());
        for step in &self.steps {
            for c in &step.cells {
                level += cell(c, rng)?;
            }
            for a in &step.atoms {
                level += atom(a, rng);
            }
            values.push(level);
        }
        Ok(PathSample {
            grid: self.grid.clone(),
            diverged: level == f64::INFINITY,
            values,
        })
    }
}

/// Sorted union of `grid` and the posterior event times.
pub fn path_grid(post: &BetaStacyPosterior, grid: &[f64]) -> Result<Vec<f64>> {
    if grid.iter().any(|&g| !(g >= 0.0 && g.is_finite())) {
        return Err(Error::InvalidInput(
            "grid points must be finite and non-negative".into(),
        ));
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput("grid must be increasing".into()));
    }
    let times: Vec<f64> = post.atoms().iter().map(|a| a.time).collect();
    let mut g = grid.to_vec();
    g.dedup();
    Ok(crate::stepfun::merge_sorted(&g, &times))
}

pub(crate) fn gamma_draw<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> f64 {
    if shape <= 0.0 {
        return 0.0;
    }
    Gamma::new(shape, 1.0 / rate)
        .expect("positive finite gamma parameters")
        .sample(rng)
}

/// A sampler of posterior paths of one [`ProcessKind`].
pub trait PathSampler: Send + Sync {
    fn name(&self) -> &'static str;
    fn kind(&self) -> ProcessKind;
    fn sample(&self, plan: &PathPlan, rng: &mut RngStream) -> Result<PathSample>;
}

pub struct HazardSampler;
pub struct LogSurvivalSampler;
pub struct SurvivalSampler;

impl PathSampler for HazardSampler {
    fn name(&self) -> &'static str {
        "hazard"
    }

    fn kind(&self) -> ProcessKind {
        ProcessKind::Hazard
    }

    fn sample(&self, plan: &PathPlan, rng: &mut RngStream) -> Result<PathSample> {
        hazard::sample_plan(plan, rng)
    }
}

impl PathSampler for LogSurvivalSampler {
    fn name(&self) -> &'static str {
        "log-survival"
    }

    fn kind(&self) -> ProcessKind {
        ProcessKind::LogSurvival
    }

    fn sample(&self, plan: &PathPlan, rng: &mut RngStream) -> Result<PathSample> {
        logsurv::sample_plan(plan, rng)
    }
}

impl PathSampler for SurvivalSampler {
    fn name(&self) -> &'static str {
        "survival"
    }

    fn kind(&self) -> ProcessKind {
        ProcessKind::Survival
    }

    fn sample(&self, plan: &PathPlan, rng: &mut RngStream) -> Result<PathSample> {
        let mut path = logsurv::sample_plan(plan, rng)?;
        for v in &mut path.values {
            *v = (-*v).exp();
        }
        Ok(path)
    }
}

/// Path samplers selectable by name.
pub struct SamplerRegistry {
    entries: BTreeMap<&'static str, Box<dyn PathSampler>>,
}

impl SamplerRegistry {
    pub fn empty() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, sampler: Box<dyn PathSampler>) {
        self.entries.insert(sampler.name(), sampler);
    }

    pub fn get(&self, name: &str) -> Option<&dyn PathSampler> {
        self.entries.get(name).map(|b| b.as_ref())
    }

    pub fn for_kind(&self, kind: ProcessKind) -> Option<&dyn PathSampler> {
        self.entries.values().find(|s| s.kind() == kind).map(|b| b.as_ref())
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }
}

impl Default for SamplerRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(HazardSampler));
        r.register(Box::new(LogSurvivalSampler));
        r.register(Box::new(SurvivalSampler));
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::betastacy::{posterior_update, BetaStacyPrior};
    use crate::data::SurvivalSample;
    use crate::stepfun::{DensityForm, HazardMeasure, StepFunction};

    fn post() -> BetaStacyPosterior {
        let prior = BetaStacyPrior::new(
            StepFunction::new(vec![1.5], vec![0.0, 2.0]).unwrap(),
            HazardMeasure::density_from(0.0, DensityForm::Constant { rate: 1.0 }).unwrap(),
        )
        .unwrap();
        let s = SurvivalSample::from_pairs(&[(1.0, true), (2.0, false), (3.0, true)]).unwrap();
        posterior_update(&prior, &s).unwrap()
    }

    #[test]
    fn plan_merges_event_times_and_splits_cells() {
        let plan = PathPlan::new(&post(), &[0.5, 2.5, 4.0]).unwrap();
        assert_eq!(plan.grid(), &[0.5, 1.0, 2.5, 3.0, 4.0]);
        // c = 0 below 1.5: no continuous cells there
        assert!(plan.steps()[0].cells.is_empty() && plan.steps()[1].cells.is_empty());
        // (1, 2.5] splits at 1.5 and 2; only the pieces with c > 0 remain
        let cells = &plan.steps()[2].cells;
        assert_eq!(cells.len(), 2);
        assert_eq!((cells[0].b, cells[0].mass), (4.0, 0.5));
        assert_eq!((cells[1].b, cells[1].mass), (3.0, 0.5));
        assert_eq!(plan.steps()[3].atoms.len(), 1);
        assert!(PathPlan::new(&post(), &[2.0, 1.0]).is_err());
    }

    #[test]
    fn samplers_are_deterministic_per_stream() {
        let plan = PathPlan::new(&post(), &[0.5, 2.5, 4.0]).unwrap();
        let reg = SamplerRegistry::default();
        for name in reg.names() {
            let s = reg.get(name).unwrap();
            let a = s.sample(&plan, &mut RngStream::new(3, 9)).unwrap();
            let b = s.sample(&plan, &mut RngStream::new(3, 9)).unwrap();
            assert_eq!(a, b);
        }
        assert_eq!(reg.for_kind(ProcessKind::Survival).unwrap().name(), "survival");
    }
}
