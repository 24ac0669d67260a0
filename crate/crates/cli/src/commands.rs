use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use betasplice::betastacy::{
    make_spliced_prior, posterior_mean, posterior_update, posterior_variance, spliced_survival_curve,
    BetaStacyPosterior, SpliceSpec, WeightRule,
};
use betasplice::classical::{kaplan_meier, nelson_aalen};
use betasplice::data::{gen_censored_sample, load_csv, write_csv, CensoringLaw, Num, Observation, SyntheticLaw};
use betasplice::montecarlo::{credible_band, ensemble_with, write_band_csv, write_paths_csv};
use betasplice::sampler::{PathPlan, ProcessKind, SamplerRegistry};
use betasplice::tails::{default_k, qq_data, FirstStep, QqKind, TailFit, TailRegistry};
use betasplice::{RngStream, SurvivalSample};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::args::{
    DataArgs, FitArgs, KindArg, PriorArgs, RunConfig, SampleArgs, SimulateArgs, SpliceArgs, TailArg, TailArgs,
};
use crate::error::{io_error, CliError, CliResult};
use crate::grid;

/// Hash and seed recorded at the top of every output file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub config_sha256: String,
    pub seed: u64,
}

impl Provenance {
    pub fn of(config: &RunConfig) -> Self {
        let canonical = serde_json::to_vec(config).expect("configs serialize");
        Self {
            config_sha256: hex::encode(Sha256::digest(&canonical)),
            seed: config.seed(),
        }
    }

    pub fn comment(&self) -> String {
        format!("config_sha256={} seed={}", self.config_sha256, self.seed)
    }
}

pub fn create(path: &Path) -> CliResult<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(io_error(path))?))
}

fn finish(mut out: BufWriter<File>, path: &Path) -> CliResult<()> {
    out.flush().map_err(io_error(path))
}

fn load(data: &DataArgs) -> CliResult<SurvivalSample> {
    Ok(load_csv(&data.input, &data.time_column, &data.event_column)?)
}

pub fn simulate(a: &SimulateArgs, prov: &Provenance) -> CliResult<()> {
    if a.n == 0 {
        return Err(CliError::Usage("n must be positive".into()));
    }
    let law = match a.kind {
        TailArg::Pareto => SyntheticLaw::ShiftedPareto {
            alpha: a.alpha.unwrap_or(1.8),
        },
        TailArg::Weibull => SyntheticLaw::Weibull {
            alpha: a.alpha.unwrap_or(2.0),
            p: a.p,
        },
    };
    let (alpha, p) = (a.alpha.unwrap_or(1.0), a.p);
    if !(alpha > 0.0 && alpha.is_finite() && p > 0.0 && p.is_finite()) {
        return Err(CliError::Usage("alpha and p must be positive".into()));
    }
    let mut rng = RngStream::new(a.seed, 0);
    let sample = if a.uncensored {
        SurvivalSample::new((0..a.n).map(|_| Observation::new(law.sample(&mut rng), true)).collect())?
    } else {
        gen_censored_sample(a.n, law, CensoringLaw::default(), &mut rng)
    };
    let mut out = create(&a.output)?;
    write_csv(&sample, &mut out, &[prov.comment()]).map_err(io_error(&a.output))?;
    finish(out, &a.output)
}

/// JSON written by `fit` and read back by `splice` and `sample`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub config_sha256: String,
    pub seed: u64,
    pub n: usize,
    pub events: usize,
    pub censoring_fraction: f64,
    pub fit: TailFit,
    pub qq_file: PathBuf,
}

fn fit_tail(s: &SurvivalSample, t: &TailArgs) -> CliResult<TailFit> {
    let n = s.len();
    let k = t.k.unwrap_or_else(|| default_k(n));
    if k == 0 || k >= n {
        return Err(CliError::Usage(format!("k = {k} must satisfy 1 <= k < n = {n}")));
    }
    let name = t.estimator.clone().unwrap_or_else(|| {
        match t.tail {
            TailArg::Pareto => "hill",
            TailArg::Weibull => "weibull-ls",
        }
        .to_string()
    });
    let registry = TailRegistry::default();
    let estimator = registry.get(&name).ok_or_else(|| {
        let known: Vec<_> = registry.names().collect();
        CliError::Usage(format!("unknown estimator '{name}' (known: {})", known.join(", ")))
    })?;
    Ok(estimator.fit(s, k)?)
}

pub fn fit(a: &FitArgs, prov: &Provenance) -> CliResult<()> {
    let s = load(&a.data)?;
    let fit = fit_tail(&s, &a.tail)?;
    let qq_path = a.qq_output.clone().unwrap_or_else(|| a.output.with_extension("qq.csv"));
    let (kind, first) = if fit.is_pareto() {
        (QqKind::Pareto, FirstStep::KaplanMeier)
    } else if fit.estimator.ends_with("-na") {
        (QqKind::Weibull, FirstStep::NelsonAalen)
    } else {
        (QqKind::Weibull, FirstStep::KaplanMeier)
    };
    let survival = first.survival(&s)?;
    let qq = qq_data(&s, kind, &survival);
    let mut out = create(&qq_path)?;
    let w = |r: std::io::Result<()>| r.map_err(io_error(&qq_path));
    w(writeln!(out, "# {}", prov.comment()))?;
    w(writeln!(out, "# dropped={}", qq.dropped))?;
    w(writeln!(out, "log_time,quantile"))?;
    for (x, y) in &qq.points {
        w(writeln!(out, "{},{}", Num(*x), Num(*y)))?;
    }
    finish(out, &qq_path)?;

    let report = FitReport {
        config_sha256: prov.config_sha256.clone(),
        seed: prov.seed,
        n: s.len(),
        events: s.event_count(),
        censoring_fraction: s.censoring_fraction(),
        fit,
        qq_file: qq_path,
    };
    let mut out = create(&a.output)?;
    serde_json::to_writer_pretty(&mut out, &report).map_err(|e| CliError::Io {
        path: a.output.clone(),
        source: e.into(),
    })?;
    writeln!(out).map_err(io_error(&a.output))?;
    finish(out, &a.output)
}

fn read_fit(path: &Path) -> CliResult<TailFit> {
    let text = std::fs::read_to_string(path).map_err(io_error(path))?;
    let report: FitReport = serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(report.fit)
}

pub fn weight_rule(p: &PriorArgs) -> CliResult<WeightRule> {
    if p.exact_splice {
        return Ok(WeightRule::Infinity);
    }
    match p.an_rule.as_str() {
        "log_n" => Ok(WeightRule::LogN),
        "infinity" => Ok(WeightRule::Infinity),
        rule => rule
            .strip_prefix("const:")
            .and_then(|v| v.parse::<f64>().ok())
            .filter(|v| *v > 0.0)
            .map(WeightRule::Const)
            .ok_or_else(|| {
                CliError::Usage(format!(
                    "bad a_n rule '{rule}'; expected log_n, const:<value> or infinity"
                ))
            }),
    }
}

fn posterior(s: &SurvivalSample, fit: &TailFit, p: &PriorArgs) -> CliResult<BetaStacyPosterior> {
    let spec = SpliceSpec {
        q: p.q,
        t0: p.t0,
        a_n: weight_rule(p)?,
        n: s.len(),
        tail_from: p.tail_from,
    };
    Ok(posterior_update(&make_spliced_prior(fit, &spec)?, s)?)
}

pub fn splice(a: &SpliceArgs, prov: &Provenance) -> CliResult<()> {
    let s = load(&a.data)?;
    let fit = read_fit(&a.fit)?;
    let post = posterior(&s, &fit, &a.prior)?;
    let grid = grid::resolve(&a.grid, &s)?;
    let survival = spliced_survival_curve(&post, &grid)?;
    let km = kaplan_meier(&s)?;
    let na = nelson_aalen(&s)?;
    let mut out = create(&a.output)?;
    let w = |r: std::io::Result<()>| r.map_err(io_error(&a.output));
    w(writeln!(out, "# {}", prov.comment()))?;
    w(writeln!(
        out,
        "time,hazard_mean,hazard_variance,survival,kaplan_meier,nelson_aalen"
    ))?;
    for (&t, sv) in grid.iter().zip(&survival) {
        w(writeln!(
            out,
            "{},{},{},{},{},{}",
            Num(t),
            Num(posterior_mean(&post, t)),
            Num(posterior_variance(&post, t)),
            Num(*sv),
            Num(km.eval(t)),
            Num(na.eval(t))
        ))?;
    }
    finish(out, &a.output)
}

fn process_kind(k: KindArg) -> ProcessKind {
    match k {
        KindArg::Hazard => ProcessKind::Hazard,
        KindArg::LogSurvival => ProcessKind::LogSurvival,
        KindArg::Survival => ProcessKind::Survival,
    }
}

pub fn sample(a: &SampleArgs, prov: &Provenance) -> CliResult<()> {
    if a.paths == 0 {
        return Err(CliError::Usage("paths must be positive".into()));
    }
    if !(0.0..1.0).contains(&a.level) {
        return Err(CliError::Usage(format!("level {} must lie in [0, 1)", a.level)));
    }
    let s = load(&a.data)?;
    let fit = match &a.fit {
        Some(path) => read_fit(path)?,
        None => fit_tail(&s, &a.tail)?,
    };
    let post = posterior(&s, &fit, &a.prior)?;
    let grid = grid::resolve(&a.grid, &s)?;
    let registry = SamplerRegistry::default();
    let sampler = registry
        .for_kind(process_kind(a.kind))
        .expect("every kind is registered");
    let e = ensemble_with(sampler, &PathPlan::new(&post, &grid)?, a.paths, a.seed)?;
    let mean = e.mean();
    let comments = [prov.comment()];
    let mut out = create(&a.output)?;
    if e.n_paths() >= betasplice::montecarlo::MIN_BAND_PATHS {
        let band = credible_band(&e, a.level)?;
        write_band_csv(&mut out, &mean, &band, &comments).map_err(io_error(&a.output))?;
    } else {
        let w = |r: std::io::Result<()>| r.map_err(io_error(&a.output));
        w(writeln!(out, "# {}", comments[0]))?;
        w(writeln!(out, "grid,mean"))?;
        for (g, m) in e.grid.iter().zip(&mean) {
            w(writeln!(out, "{},{}", Num(*g), Num(*m)))?;
        }
    }
    finish(out, &a.output)?;
    if let Some(path) = &a.paths_output {
        let mut out = create(path)?;
        write_paths_csv(&mut out, &e, &comments).map_err(io_error(path))?;
        finish(out, path)?;
    }
    Ok(())
}
