//! Built-in oracle suites.

use betasplice::betastacy::{posterior_mean, posterior_update, posterior_variance, spliced_survival, BetaStacyPrior};
use betasplice::data::gen_pareto_sample;
use betasplice::montecarlo::{bvm_diagnostic, ensemble_with, ExperimentSetup, PathEnsemble};
use betasplice::quad;
use betasplice::sampler::{
    dominance_gap, e_ratio, phi, sample_truncated_gamma, HazardSampler, LogSurvivalSampler, PathPlan, PathSample,
    PathSampler, ProcessKind,
};
use betasplice::{DensityForm, HazardMeasure, RngStream, StepFunction};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::SuiteArg;
use crate::error::CliResult;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub target: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn within(name: String, value: f64, target: f64, tolerance: f64) -> Self {
        Self {
            pass: (value - target).abs() <= tolerance,
            name,
            value,
            target,
            tolerance,
        }
    }

    fn holds(name: &str, pass: bool) -> Self {
        Self {
            name: name.into(),
            value: pass as u8 as f64,
            target: 1.0,
            tolerance: 0.0,
            pass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub suite: SuiteArg,
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn failures(&self) -> Vec<String> {
        self.checks.iter().filter(|c| !c.pass).map(|c| c.name.clone()).collect()
    }
}

/// Hazard sampler inflating every path by 5%, for negative controls.
struct Biased;

impl PathSampler for Biased {
    fn name(&self) -> &'static str {
        "hazard-biased"
    }

    fn kind(&self) -> ProcessKind {
        ProcessKind::Hazard
    }

    fn sample(&self, plan: &PathPlan, rng: &mut RngStream) -> betasplice::Result<PathSample> {
        let mut p = HazardSampler.sample(plan, rng)?;
        p.values.iter_mut().for_each(|v| *v *= 1.05);
        Ok(p)
    }
}

pub fn run(suite: SuiteArg, seed: u64, corrupt: bool) -> CliResult<Report> {
    let checks = match suite {
        SuiteArg::Moments => moments(seed, corrupt)?,
        SuiteArg::Laplace => laplace(seed)?,
        SuiteArg::Thinning => thinning()?,
        SuiteArg::Bvm => bvm(seed)?,
    };
    Ok(Report { suite, seed, checks })
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let m = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / m;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, var.sqrt())
}

const MOMENT_PATHS: usize = 10_000;

fn moments(seed: u64, corrupt: bool) -> CliResult<Vec<Check>> {
    let s = gen_pareto_sample(40, 1.8, seed);
    let prior = BetaStacyPrior::new(
        StepFunction::new(vec![1.0], vec![0.5, 2.0])?,
        HazardMeasure::density_from(0.0, DensityForm::Constant { rate: 1.0 })?,
    )?;
    let post = posterior_update(&prior, &s)?;
    let max = s.max_time().unwrap_or(1.0);
    let grid: Vec<f64> = (1..=8).map(|i| max * i as f64 / 6.0).collect();
    let plan = PathPlan::new(&post, &grid)?;
    let hazard: &dyn PathSampler = if corrupt { &Biased } else { &HazardSampler };
    let h = ensemble_with(hazard, &plan, MOMENT_PATHS, seed)?;
    let a = ensemble_with(&LogSurvivalSampler, &plan, MOMENT_PATHS, seed.wrapping_add(1))?;
    let index = |e: &PathEnsemble, t: f64| e.grid.iter().position(|&g| g == t).expect("grid point kept");
    let m = MOMENT_PATHS as f64;
    let mut checks = Vec::new();
    for &t in &grid {
        let col = h.column(index(&h, t));
        let (mean, sd) = mean_sd(&col);
        checks.push(Check::within(
            format!("hazard mean at t={t}"),
            mean,
            posterior_mean(&post, t),
            4.0 * sd / m.sqrt(),
        ));
        let var = sd * sd;
        let m4 = col.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / m;
        let var_se = ((m4 - var * var).max(0.0) / m).sqrt();
        checks.push(Check::within(
            format!("hazard variance at t={t}"),
            var,
            posterior_variance(&post, t),
            5.0 * var_se,
        ));
        let surv: Vec<f64> = a.column(index(&a, t)).iter().map(|v| (-v).exp()).collect();
        let (mean, sd) = mean_sd(&surv);
        checks.push(Check::within(
            format!("survival mean at t={t}"),
            mean,
            spliced_survival(&post, t)?,
            4.0 * sd / m.sqrt(),
        ));
    }
    Ok(checks)
}

const LAPLACE_DRAWS: u64 = 100_000;

fn laplace(seed: u64) -> CliResult<Vec<Check>> {
    let mut checks = Vec::new();
    for (i, mu) in [0.0f64, 1.0, 10.0].into_iter().enumerate() {
        let t = 1.0;
        let draws = (0..LAPLACE_DRAWS)
            .into_par_iter()
            .map(|j| sample_truncated_gamma(t, mu, &mut RngStream::new(seed, i as u64 * LAPLACE_DRAWS + j)))
            .collect::<betasplice::Result<Vec<f64>>>()?;
        let m = draws.len() as f64;
        for theta in [0.5, 1.0, 2.0] {
            let integral = quad::integrate(|x: f64| -(-theta * x).exp_m1() * (-mu * x).exp() / x, 0.0, 1.0, 1e-13);
            let vals: Vec<f64> = draws.iter().map(|l| (-theta * l).exp()).collect();
            let (mean, sd) = mean_sd(&vals);
            checks.push(Check::within(
                format!("laplace transform mu={mu} theta={theta}"),
                mean,
                (-t * integral).exp(),
                4.0 * sd / m.sqrt(),
            ));
        }
        let (mean, sd) = mean_sd(&draws);
        let exact = if mu == 0.0 { t } else { t * -(-mu).exp_m1() / mu };
        checks.push(Check::within(format!("mean mu={mu}"), mean, exact, 4.0 * sd / m.sqrt()));
    }
    Ok(checks)
}

fn thinning() -> CliResult<Vec<Check>> {
    let phi_ok = (0..10_000).all(|i| {
        let x = 10f64.powf(-8.0 + 11.0 * i as f64 / 9_999.0);
        let v = phi(x);
        v > 0.5 && v < 1.0
    });
    let ratio_ok = [0.25, 0.5, 1.0, 1.5, 2.0, 5.0, 10.0]
        .iter()
        .all(|&b| (1..2000).all(|i| e_ratio(i as f64 / 2000.0, b).is_ok_and(|r| (0.0..=1.0 + 1e-12).contains(&r))));
    let dominance_ok = [1.5, 2.0, 5.0, 10.0].iter().all(|&b| {
        (1..5000).all(|i| dominance_gap(0.5 * i as f64 / 5000.0, b) > 0.0) && dominance_gap(0.5, b).abs() < 1e-14
    });
    Ok(vec![
        Check::holds("phi in (1/2, 1)", phi_ok),
        Check::holds("acceptance ratio in [0, 1]", ratio_ok),
        Check::holds("strict dominance below one half", dominance_ok),
    ])
}

fn bvm(seed: u64) -> CliResult<Vec<Check>> {
    let report = bvm_diagnostic(&ExperimentSetup::pareto(), &[500, 2000], seed)?;
    let mut ratios = report.sd_ratios[0].clone();
    ratios.sort_by(f64::total_cmp);
    let median = 0.5 * (ratios[1] + ratios[2]);
    let shrinks = report.band_widths[1]
        .iter()
        .zip(&report.band_widths[0])
        .all(|(a, b)| a < b);
    Ok(vec![
        Check::within("median sd ratio n=500 vs n=2000".into(), median, 2.0, 0.5),
        Check::holds("band width shrinks", shrinks),
    ])
}
