//! Path ensembles, pointwise summaries, empirical credible bands and the
//! synthetic experiment pipeline.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::betastacy::{
    make_spliced_prior, posterior_update, posterior_variance, BetaStacyPosterior, SpliceSpec, WeightRule,
};
use crate::data::{gen_censored_sample, CensoringLaw, Num, Observation, SurvivalSample, SyntheticLaw};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::sampler::{PathPlan, PathSampler, ProcessKind, SamplerRegistry};
use crate::tails::{default_k, TailFit, TailRegistry};

/// Sampled paths on a common grid, one row per path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    pub grid: Vec<f64>,
    pub paths: Vec<Vec<f64>>,
    pub kind: ProcessKind,
}

impl PathEnsemble {
    pub fn n_paths(&self) -> usize {
        self.paths.len()
    }

    /// Pointwise values across paths at grid index `j`.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.paths.iter().map(|p| p[j]).collect()
    }

    pub fn mean(&self) -> Vec<f64> {
        let m = self.paths.len() as f64;
        (0..self.grid.len())
            .map(|j| self.paths.iter().map(|p| p[j]).sum::<f64>() / m)
            .collect()
    }

    /// Pointwise sample standard deviation; zero for a single path.
    pub fn sd(&self) -> Vec<f64> {
        let m = self.paths.len();
        let mean = self.mean();
        (0..self.grid.len())
            .map(|j| {
                if m < 2 {
                    return 0.0;
                }
                let ss: f64 = self.paths.iter().map(|p| (p[j] - mean[j]).powi(2)).sum();
                (ss / (m - 1) as f64).sqrt()
            })
            .collect()
    }

    /// Fraction of paths flagged as diverged (`+∞` log-survival).
    pub fn diverged_fraction(&self) -> f64 {
        let last = self.grid.len().saturating_sub(1);
        let d = self
            .paths
            .iter()
            .filter(|p| p.get(last).is_some_and(|v| v.is_infinite()))
            .count();
        d as f64 / self.paths.len().max(1) as f64
    }
}

/// Draws `n_paths` independent paths, path `i` from stream `(seed, i)`.
pub fn ensemble(
    post: &BetaStacyPosterior,
    grid: &[f64],
    n_paths: usize,
    kind: ProcessKind,
    seed: u64,
) -> Result<PathEnsemble> {
    let registry = SamplerRegistry::default();
    let sampler = registry.for_kind(kind).expect("default registry covers every kind");
    ensemble_with(sampler, &PathPlan::new(post, grid)?, n_paths, seed)
}

/// [`ensemble`] with an explicit sampler and a prepared plan.
pub fn ensemble_with(sampler: &dyn PathSampler, plan: &PathPlan, n_paths: usize, seed: u64) -> Result<PathEnsemble> {
    if n_paths == 0 {
        return Err(Error::InvalidInput("n_paths must be at least 1".into()));
    }
    let paths = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            sampler
                .sample(plan, &mut RngStream::new(seed, i as u64))
                .map(|p| p.values)
                .map_err(|e| Error::Path {
                    index: i,
                    source: Box::new(e),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PathEnsemble {
        grid: plan.grid().to_vec(),
        paths,
        kind: sampler.kind(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CredibleBand {
    pub grid: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub level: f64,
}

impl CredibleBand {
    pub fn contains(&self, j: usize, v: f64) -> bool {
        self.lower[j] <= v && v <= self.upper[j]
    }

    pub fn width(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| u - l).collect()
    }
}

pub const MIN_BAND_PATHS: usize = 20;

/// Type-7 quantile of sorted values.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if frac == 0.0 || sorted[lo] == sorted[lo + 1] {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// Pointwise empirical quantiles at `(1 ∓ level)/2`.
pub fn credible_band(e: &PathEnsemble, level: f64) -> Result<CredibleBand> {
    if !(0.0..1.0).contains(&level) {
        return Err(Error::InvalidInput(format!("level {level} must lie in [0, 1)")));
    }
    if e.n_paths() < MIN_BAND_PATHS {
        return Err(Error::TooFewPaths {
            needed: MIN_BAND_PATHS,
            got: e.n_paths(),
        });
    }
    let (lo_p, hi_p) = ((1.0 - level) / 2.0, (1.0 + level) / 2.0);
    let mut lower = Vec::with_capacity(e.grid.len());
    let mut upper = Vec::with_capacity(e.grid.len());
    for j in 0..e.grid.len() {
        let mut col = e.column(j);
        col.sort_by(f64::total_cmp);
        lower.push(quantile_sorted(&col, lo_p));
        upper.push(quantile_sorted(&col, hi_p));
    }
    Ok(CredibleBand {
        grid: e.grid.clone(),
        lower,
        upper,
        level,
    })
}

/// `points` equally spaced times on `[0, extent · max T]`.
pub fn default_grid(s: &SurvivalSample, points: usize, extent: f64) -> Result<Vec<f64>> {
    let max = s.max_time().ok_or(Error::EmptySample)?;
    if points < 2 {
        return Err(Error::InvalidInput("a grid needs at least two points".into()));
    }
    let end = extent * max;
    Ok((0..points).map(|i| end * i as f64 / (points - 1) as f64).collect())
}

/// Writes `grid,mean,lower,upper` rows after `# ` comment lines.
pub fn write_band_csv(
    out: &mut impl Write,
    mean: &[f64],
    band: &CredibleBand,
    comments: &[String],
) -> std::io::Result<()> {
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    writeln!(out, "grid,mean,lower,upper")?;
    for (j, g) in band.grid.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{}",
            Num(*g),
            Num(mean[j]),
            Num(band.lower[j]),
            Num(band.upper[j])
        )?;
    }
    Ok(())
}

/// Writes one column per path.
pub fn write_paths_csv(out: &mut impl Write, e: &PathEnsemble, comments: &[String]) -> std::io::Result<()> {
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    write!(out, "grid")?;
    for i in 0..e.n_paths() {
        write!(out, ",path{i}")?;
    }
    writeln!(out)?;
    for (j, g) in e.grid.iter().enumerate() {
        write!(out, "{}", Num(*g))?;
        for p in &e.paths {
            write!(out, ",{}", Num(p[j]))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Synthetic pipeline: simulate, fit the tail, splice, update and sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSetup {
    pub law: SyntheticLaw,
    /// `None` for uncensored data.
    pub censoring: Option<CensoringLaw>,
    /// Name in the default [`TailRegistry`].
    pub estimator: String,
    /// Defaults to `⌈2√n⌉`.
    #[serde(default)]
    pub k: Option<usize>,
    pub q: f64,
    pub a_n: WeightRule,
    pub grid_points: usize,
    pub grid_extent: f64,
    pub n_paths: usize,
    pub kind: ProcessKind,
    pub level: f64,
}

impl ExperimentSetup {
    /// Shifted Pareto lifetimes with index 1.8 and Pareto-type censoring.
    pub fn pareto() -> Self {
        Self {
            law: SyntheticLaw::ShiftedPareto { alpha: 1.8 },
            censoring: Some(CensoringLaw::default()),
            estimator: "hill".into(),
            k: None,
            q: 1.0,
            a_n: WeightRule::LogN,
            grid_points: 512,
            grid_extent: 1.5,
            n_paths: 200,
            kind: ProcessKind::Hazard,
            level: 0.95,
        }
    }

    /// Weibull-tailed lifetimes with `α = 2`, `p = 1/2`.
    pub fn weibull() -> Self {
        Self {
            law: SyntheticLaw::Weibull { alpha: 2.0, p: 0.5 },
            estimator: "weibull-ls".into(),
            ..Self::pareto()
        }
    }
}

/// Stream id reserved for data generation, away from the path streams.
pub const DATA_STREAM: u64 = u64::MAX;

pub struct Prepared {
    pub sample: SurvivalSample,
    pub fit: TailFit,
    pub posterior: BetaStacyPosterior,
}

pub struct ExperimentRun {
    pub sample: SurvivalSample,
    pub fit: TailFit,
    pub posterior: BetaStacyPosterior,
    pub ensemble: PathEnsemble,
    pub band: CredibleBand,
}

impl ExperimentRun {
    /// Fraction of grid points in `(0, max T]` where `truth` lies in the band.
    pub fn coverage(&self, truth: impl Fn(f64) -> f64) -> f64 {
        let max = self.sample.max_time().unwrap_or(0.0);
        let inside: Vec<bool> = self
            .band
            .grid
            .iter()
            .enumerate()
            .filter(|(_, &t)| t > 0.0 && t <= max)
            .map(|(j, &t)| self.band.contains(j, truth(t)))
            .collect();
        inside.iter().filter(|&&b| b).count() as f64 / inside.len().max(1) as f64
    }
}

/// Simulates `n` observations from stream `(seed, DATA_STREAM)`, fits the tail
/// and updates the spliced prior.
pub fn prepare(setup: &ExperimentSetup, n: usize, seed: u64) -> Result<Prepared> {
    let mut rng = RngStream::new(seed, DATA_STREAM);
    let sample = match setup.censoring {
        Some(c) => gen_censored_sample(n, setup.law, c, &mut rng),
        None => SurvivalSample::new(
            (0..n)
                .map(|_| Observation::new(setup.law.sample(&mut rng), true))
                .collect(),
        )?,
    };
    let registry = TailRegistry::default();
    let estimator = registry
        .get(&setup.estimator)
        .ok_or_else(|| Error::InvalidInput(format!("unknown tail estimator '{}'", setup.estimator)))?;
    let fit = estimator.fit(&sample, setup.k.unwrap_or_else(|| default_k(n)))?;
    let prior = make_spliced_prior(
        &fit,
        &SpliceSpec {
            q: setup.q,
            t0: None,
            a_n: setup.a_n,
            n,
            tail_from: None,
        },
    )?;
    let posterior = posterior_update(&prior, &sample)?;
    Ok(Prepared { sample, fit, posterior })
}

/// Full pipeline on the default grid.
pub fn run_experiment(setup: &ExperimentSetup, n: usize, seed: u64) -> Result<ExperimentRun> {
    let Prepared { sample, fit, posterior } = prepare(setup, n, seed)?;
    let grid = default_grid(&sample, setup.grid_points, setup.grid_extent)?;
    let ensemble = ensemble(&posterior, &grid, setup.n_paths, setup.kind, seed)?;
    let band = credible_band(&ensemble, setup.level)?;
    Ok(ExperimentRun {
        sample,
        fit,
        posterior,
        ensemble,
        band,
    })
}

/// True-survival levels whose quantiles serve as the fixed evaluation times
/// of [`bvm_diagnostic`].
pub const BVM_SURVIVAL_LEVELS: [f64; 4] = [0.8, 0.6, 0.4, 0.25];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BvmReport {
    pub n_values: Vec<usize>,
    pub times: Vec<f64>,
    /// Monte Carlo posterior sd of `H`, per sample size and time.
    pub sd: Vec<Vec<f64>>,
    /// Closed-form posterior sd of `H`.
    pub exact_sd: Vec<Vec<f64>>,
    /// `sd[i] / sd[i + 1]`.
    pub sd_ratios: Vec<Vec<f64>>,
    /// `√(n_{i+1} / n_i)`.
    pub expected_ratios: Vec<f64>,
    pub band_widths: Vec<Vec<f64>>,
}

/// Posterior spread of `H` at fixed times for growing sample sizes; the data
/// for size `n_values[i]` come from seed `seed + i·φ64`.
pub fn bvm_diagnostic(setup: &ExperimentSetup, n_values: &[usize], seed: u64) -> Result<BvmReport> {
    if n_values.is_empty() || n_values.iter().any(|&n| n < 100) || n_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(
            "n_values must be increasing and at least 100".into(),
        ));
    }
    let times: Vec<f64> = BVM_SURVIVAL_LEVELS
        .iter()
        .map(|&l| setup.law.survival_quantile(l))
        .collect();
    let mut sd = Vec::new();
    let mut exact_sd = Vec::new();
    let mut band_widths = Vec::new();
    for (i, &n) in n_values.iter().enumerate() {
        let s = seed.wrapping_add((i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let prep = prepare(setup, n, s)?;
        let e = ensemble(&prep.posterior, &times, setup.n_paths, ProcessKind::Hazard, s)?;
        let band = credible_band(&e, setup.level)?;
        let idx: Vec<usize> = times
            .iter()
            .map(|t| e.grid.iter().position(|g| g == t).expect("grid point kept"))
            .collect();
        let all_sd = e.sd();
        let widths = band.width();
        sd.push(idx.iter().map(|&j| all_sd[j]).collect::<Vec<_>>());
        band_widths.push(idx.iter().map(|&j| widths[j]).collect::<Vec<_>>());
        exact_sd.push(
            times
                .iter()
                .map(|&t| posterior_variance(&prep.posterior, t).sqrt())
                .collect::<Vec<_>>(),
        );
    }
    let sd_ratios = sd
        .windows(2)
        .map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| a / b).collect())
        .collect();
    let expected_ratios = n_values
        .windows(2)
        .map(|w| (w[1] as f64 / w[0] as f64).sqrt())
        .collect();
    Ok(BvmReport {
        n_values: n_values.to_vec(),
        times,
        sd,
        exact_sd,
        sd_ratios,
        expected_ratios,
        band_widths,
    })
}
