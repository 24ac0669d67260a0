//! Right-censored samples, counting processes and the synthetic generators.

use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_distr::{Exp1, Open01};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::stepfun::StepFunction;

/// One observed pair `(T, δ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub time: f64,
    pub event: bool,
}

impl Observation {
    pub fn new(time: f64, event: bool) -> Self {
        Self { time, event }
    }
}

/// Distinct observation time with its event/censoring counts and the number
/// at risk `Y(t) = #{T_i >= t}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskSetRow {
    pub time: f64,
    pub events: u32,
    pub censored: u32,
    pub at_risk: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalSample {
    records: Vec<Observation>,
    order: Vec<usize>,
}

impl SurvivalSample {
    /// Validates the records; the sort puts events before censorings at tied
    /// times and is otherwise stable.
    pub fn new(records: Vec<Observation>) -> Result<Self> {
        for (i, r) in records.iter().enumerate() {
            if !(r.time.is_finite() && r.time > 0.0) {
                return Err(Error::NonPositiveTime {
                    row: i + 1,
                    time: r.time,
                });
            }
        }
        let mut order: Vec<usize> = (0..records.len()).collect();
        order.sort_by(|&a, &b| {
            let (ra, rb) = (&records[a], &records[b]);
            ra.time.total_cmp(&rb.time).then(rb.event.cmp(&ra.event))
        });
        Ok(Self { records, order })
    }

    pub fn from_pairs(pairs: &[(f64, bool)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(t, e)| Observation::new(t, e)).collect())
    }

    pub fn empty() -> Self {
        Self {
            records: Vec::new(),
            order: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records in input order.
    pub fn records(&self) -> &[Observation] {
        &self.records
    }

    /// Records sorted by time.
    pub fn sorted(&self) -> impl Iterator<Item = &Observation> + '_ {
        self.order.iter().map(move |&i| &self.records[i])
    }

    /// `T_{1,n} <= ... <= T_{n,n}`.
    pub fn order_statistics(&self) -> Vec<f64> {
        self.sorted().map(|r| r.time).collect()
    }

    /// `δ_{[j,n]}`, the event flags aligned with [`Self::order_statistics`].
    pub fn concomitants(&self) -> Vec<bool> {
        self.sorted().map(|r| r.event).collect()
    }

    pub fn event_count(&self) -> usize {
        self.records.iter().filter(|r| r.event).count()
    }

    pub fn censoring_fraction(&self) -> f64 {
        1.0 - self.event_count() as f64 / self.len() as f64
    }

    pub fn max_time(&self) -> Option<f64> {
        self.order.last().map(|&i| self.records[i].time)
    }

    /// Distinct observation times with counts.
    pub fn risk_table(&self) -> Vec<RiskSetRow> {
        let mut rows: Vec<RiskSetRow> = Vec::new();
        let mut remaining = self.len() as u32;
        for r in self.sorted() {
            match rows.last_mut() {
                Some(row) if row.time == r.time => {
                    if r.event {
                        row.events += 1;
                    } else {
                        row.censored += 1;
                    }
                }
                _ => rows.push(RiskSetRow {
                    time: r.time,
                    events: r.event as u32,
                    censored: (!r.event) as u32,
                    at_risk: remaining,
                }),
            }
            remaining -= 1;
        }
        rows
    }

    /// Distinct event times with their risk-set rows.
    pub fn event_table(&self) -> Vec<RiskSetRow> {
        self.risk_table().into_iter().filter(|r| r.events > 0).collect()
    }

    /// Pooled sample `self ⊎ other`.
    pub fn pooled(&self, other: &SurvivalSample) -> SurvivalSample {
        let mut records = self.records.clone();
        records.extend_from_slice(&other.records);
        SurvivalSample::new(records).expect("both samples already validated")
    }
}

/// `N(t) = Σ I(T_i <= t) δ_i` together with the at-risk process.
#[derive(Debug, Clone, PartialEq)]
pub struct CountingProcesses {
    pub events: StepFunction,
    /// Càdlàg modification `#{T_i > t}` of the at-risk process.
    pub at_risk_cadlag: StepFunction,
}

impl CountingProcesses {
    pub fn events_at(&self, t: f64) -> f64 {
        self.events.eval(t)
    }

    /// `Y(t) = #{T_i >= t}`.
    pub fn at_risk(&self, t: f64) -> f64 {
        self.at_risk_cadlag.left_limit(t)
    }
}

pub fn counting_processes(s: &SurvivalSample) -> Result<CountingProcesses> {
    if s.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(CountingProcesses {
        events: event_counting(s),
        at_risk_cadlag: at_risk_cadlag(s),
    })
}

pub(crate) fn event_counting(s: &SurvivalSample) -> StepFunction {
    let jumps: Vec<(f64, f64)> = s.records().iter().filter(|r| r.event).map(|r| (r.time, 1.0)).collect();
    StepFunction::from_jumps(0.0, &jumps).expect("times validated")
}

pub(crate) fn at_risk_cadlag(s: &SurvivalSample) -> StepFunction {
    let jumps: Vec<(f64, f64)> = s.records().iter().map(|r| (r.time, -1.0)).collect();
    StepFunction::from_jumps(s.len() as f64, &jumps).expect("times validated")
}

/// Reads a headed, comma-separated file; lines starting with `#` are skipped.
pub fn load_csv(path: impl AsRef<Path>, time_column: &str, event_column: &str) -> Result<SurvivalSample> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, time_column, event_column)
}

pub fn read_csv(reader: impl std::io::Read, time_column: &str, event_column: &str) -> Result<SurvivalSample> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Csv {
            row: 1,
            message: e.to_string(),
        })?
        .clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    };
    let time_idx = column(time_column)?;
    let event_idx = column(event_column)?;

    let mut records = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Error::Csv {
            row,
            message: e.to_string(),
        })?;
        let field = |idx: usize| {
            rec.get(idx).ok_or_else(|| Error::Csv {
                row,
                message: format!("missing column {idx}"),
            })
        };
        let time_raw = field(time_idx)?;
        let time: f64 = time_raw.parse().map_err(|_| Error::Csv {
            row,
            message: format!("cannot parse time `{time_raw}`"),
        })?;
        if !(time.is_finite() && time > 0.0) {
            return Err(Error::NonPositiveTime { row, time });
        }
        let event_raw = field(event_idx)?;
        let event = match event_raw.parse::<f64>() {
            Ok(0.0) => false,
            Ok(1.0) => true,
            _ => {
                return Err(Error::Csv {
                    row,
                    message: format!("event flag must be 0 or 1, got `{event_raw}`"),
                })
            }
        };
        records.push(Observation::new(time, event));
    }
    SurvivalSample::new(records)
}

/// Writes `time,event` rows in record order, preceded by `# ` comment lines.
pub fn write_csv(s: &SurvivalSample, mut out: impl Write, comments: &[String]) -> std::io::Result<()> {
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    writeln!(out, "time,event")?;
    for r in s.records() {
        writeln!(out, "{},{}", Num(r.time), r.event as u8)?;
    }
    Ok(())
}

/// Shortest round-trip decimal, switching to exponent notation outside
/// `[1e-5, 1e16)`.
#[derive(Debug, Clone, Copy)]
pub struct Num(pub f64);

impl std::fmt::Display for Num {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let a = self.0.abs();
        if a == 0.0 || !a.is_finite() || (1e-5..1e16).contains(&a) {
            write!(f, "{}", self.0)
        } else {
            write!(f, "{:e}", self.0)
        }
    }
}

/// Tail index of the Pareto censoring variable in the synthetic protocols,
/// `0.7 × 1.8`.
pub const CENSORING_TAIL_INDEX: f64 = 0.7 * 1.8;

/// Censoring `C = scale · X' - U'` with `X'` Pareto(`tail_index`, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CensoringLaw {
    pub scale: f64,
    pub tail_index: f64,
}

impl Default for CensoringLaw {
    fn default() -> Self {
        Self {
            scale: 1.4,
            tail_index: CENSORING_TAIL_INDEX,
        }
    }
}

impl CensoringLaw {
    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        let u: f64 = rng.sample(Open01);
        let x = u.powf(-1.0 / self.tail_index);
        let v: f64 = rng.sample(Open01);
        self.scale * x - v
    }
}

/// Lifetime laws of the synthetic experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SyntheticLaw {
    /// `X - U`, `X` Pareto(α, 1), `U` uniform on (0, 1).
    ShiftedPareto { alpha: f64 },
    /// `(E/α)^{1/(p + (1 - E/α) ∨ 0)}` with `E` standard exponential; its
    /// survival is `exp(-α t^p)` for `t >= 1`.
    Weibull { alpha: f64, p: f64 },
}

impl SyntheticLaw {
    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        match *self {
            SyntheticLaw::ShiftedPareto { alpha } => {
                let u: f64 = rng.sample(Open01);
                let v: f64 = rng.sample(Open01);
                u.powf(-1.0 / alpha) - v
            }
            SyntheticLaw::Weibull { alpha, p } => {
                let e: f64 = rng.sample(Exp1);
                weibull_transform(e / alpha, p)
            }
        }
    }

    pub fn survival(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        match *self {
            SyntheticLaw::ShiftedPareto { alpha } => {
                // ∫_0^1 min(1, (t+u)^{-α}) du
                let tail = |lo: f64| {
                    if (alpha - 1.0).abs() < 1e-12 {
                        ((t + 1.0) / lo).ln()
                    } else {
                        ((t + 1.0).powf(1.0 - alpha) - lo.powf(1.0 - alpha)) / (1.0 - alpha)
                    }
                };
                if t >= 1.0 {
                    tail(t)
                } else {
                    (1.0 - t) + tail(1.0)
                }
            }
            SyntheticLaw::Weibull { alpha, p } => {
                if t >= 1.0 {
                    (-alpha * t.powf(p)).exp()
                } else {
                    (-alpha * weibull_level(t, p)).exp()
                }
            }
        }
    }

    /// `H_0(t) = -log S(t)`.
    pub fn cumulative_hazard(&self, t: f64) -> f64 {
        match *self {
            SyntheticLaw::Weibull { alpha, p } if t >= 1.0 => alpha * t.powf(p),
            SyntheticLaw::Weibull { alpha, p } if t > 0.0 => alpha * weibull_level(t, p),
            _ => -self.survival(t).ln(),
        }
    }

    /// Smallest `t` with `S(t) <= level`, by bisection.
    pub fn survival_quantile(&self, level: f64) -> f64 {
        let mut hi = 1.0;
        while self.survival(hi) > level {
            hi *= 2.0;
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.survival(mid) > level {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }
}

fn weibull_transform(v: f64, p: f64) -> f64 {
    v.powf(1.0 / (p + (1.0 - v).max(0.0)))
}

/// For `t < 1`, the `v in (0, 1)` with `v^{1/(p + 1 - v)} = t`.
fn weibull_level(t: f64, p: f64) -> f64 {
    let target = t.ln();
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid.ln() / (p + 1.0 - mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Draws `n` censored observations `(min(X, C), I(X <= C))`.
pub fn gen_censored_sample(n: usize, law: SyntheticLaw, censoring: CensoringLaw, rng: &mut impl Rng) -> SurvivalSample {
    let records = (0..n)
        .map(|_| {
            let x = law.sample(rng);
            let c = censoring.sample(rng);
            Observation::new(x.min(c), x <= c)
        })
        .collect();
    SurvivalSample::new(records).expect("generated times are positive")
}

/// Pareto-type protocol: `X - U` censored by `1.4 X' - U'`.
pub fn gen_pareto_sample(n: usize, alpha: f64, seed: u64) -> SurvivalSample {
    let mut rng = RngStream::new(seed, 0);
    gen_censored_sample(
        n,
        SyntheticLaw::ShiftedPareto { alpha },
        CensoringLaw::default(),
        &mut rng,
    )
}

/// Weibull-type protocol, with the same censoring law as the Pareto one.
pub fn gen_weibull_sample(n: usize, alpha: f64, p: f64, seed: u64) -> SurvivalSample {
    let mut rng = RngStream::new(seed, 0);
    gen_censored_sample(n, SyntheticLaw::Weibull { alpha, p }, CensoringLaw::default(), &mut rng)
}
