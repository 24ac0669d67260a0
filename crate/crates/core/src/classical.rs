//! Nelson–Aalen and Kaplan–Meier estimators with Greenwood-type pointwise
//! intervals.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::SurvivalSample;
use crate::error::{Error, Result};
use crate::stepfun::StepFunction;

/// `H_n(t) = Σ_{s <= t} ΔN(s) / Y(s)`.
pub fn nelson_aalen(s: &SurvivalSample) -> Result<StepFunction> {
    if s.is_empty() {
        return Err(Error::EmptySample);
    }
    let jumps: Vec<(f64, f64)> = s
        .event_table()
        .iter()
        .map(|r| (r.time, r.events as f64 / r.at_risk as f64))
        .collect();
    StepFunction::from_jumps(0.0, &jumps)
}

/// Product-limit estimate of the survival function.
#[derive(Debug, Clone, PartialEq)]
pub struct KaplanMeier {
    pub survival: StepFunction,
    /// Largest observation when it is censored (the estimate is undefined
    /// beyond it and only carried forward), `+∞` otherwise.
    pub defined_up_to: f64,
}

impl KaplanMeier {
    pub fn eval(&self, t: f64) -> f64 {
        self.survival.eval(t)
    }

    pub fn is_defined_at(&self, t: f64) -> bool {
        t <= self.defined_up_to
    }
}

pub fn kaplan_meier(s: &SurvivalSample) -> Result<KaplanMeier> {
    if s.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut level = 1.0;
    let mut breaks = Vec::new();
    let mut values = vec![1.0];
    for r in s.event_table() {
        level *= 1.0 - r.events as f64 / r.at_risk as f64;
        breaks.push(r.time);
        values.push(level);
    }
    let last_is_event = s.concomitants().last().copied().unwrap_or(false);
    Ok(KaplanMeier {
        survival: StepFunction::new(breaks, values)?,
        defined_up_to: if last_is_event {
            f64::INFINITY
        } else {
            s.max_time().unwrap_or(0.0)
        },
    })
}

/// Pointwise normal-approximation intervals on a grid: log scale for the
/// Kaplan–Meier estimate, plain scale for Nelson–Aalen.
#[derive(Debug, Clone, PartialEq)]
pub struct PointwiseBand {
    pub grid: Vec<f64>,
    pub level: f64,
    pub km: Vec<f64>,
    pub km_lower: Vec<f64>,
    pub km_upper: Vec<f64>,
    pub na: Vec<f64>,
    pub na_lower: Vec<f64>,
    pub na_upper: Vec<f64>,
}

pub fn greenwood_pointwise_ci(s: &SurvivalSample, level: f64, grid: &[f64]) -> Result<PointwiseBand> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidInput(format!("level {level} must lie in (0, 1)")));
    }
    if s.is_empty() {
        return Err(Error::EmptySample);
    }
    let z = Normal::new(0.0, 1.0)
        .expect("standard normal")
        .inverse_cdf(0.5 + 0.5 * level);
    let table = s.event_table();

    let mut greenwood_jumps = Vec::with_capacity(table.len());
    let mut na_var_jumps = Vec::with_capacity(table.len());
    for r in &table {
        let (d, y) = (r.events as f64, r.at_risk as f64);
        let g = if y > d { d / (y * (y - d)) } else { f64::INFINITY };
        greenwood_jumps.push((r.time, g));
        na_var_jumps.push((r.time, d / (y * y)));
    }
    let greenwood = cumulative(&greenwood_jumps);
    let na_var = cumulative(&na_var_jumps);
    let km = kaplan_meier(s)?;
    let na = nelson_aalen(s)?;

    let mut band = PointwiseBand {
        grid: grid.to_vec(),
        level,
        km: Vec::with_capacity(grid.len()),
        km_lower: Vec::with_capacity(grid.len()),
        km_upper: Vec::with_capacity(grid.len()),
        na: Vec::with_capacity(grid.len()),
        na_lower: Vec::with_capacity(grid.len()),
        na_upper: Vec::with_capacity(grid.len()),
    };
    for &t in grid {
        let sv = km.eval(t);
        let (lo, hi) = if sv == 0.0 {
            (0.0, 0.0)
        } else {
            let se = greenwood(t).sqrt();
            (sv * (-z * se).exp(), (sv * (z * se).exp()).min(1.0))
        };
        band.km.push(sv);
        band.km_lower.push(lo.clamp(0.0, 1.0));
        band.km_upper.push(hi);

        let h = na.eval(t);
        let se = na_var(t).sqrt();
        band.na.push(h);
        band.na_lower.push((h - z * se).max(0.0));
        band.na_upper.push(h + z * se);
    }
    Ok(band)
}

fn cumulative(jumps: &[(f64, f64)]) -> impl Fn(f64) -> f64 + '_ {
    move |t| jumps.iter().take_while(|j| j.0 <= t).map(|j| j.1).sum()
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;

    use super::*;
    use crate::data::gen_pareto_sample;

    fn three_point() -> SurvivalSample {
        SurvivalSample::from_pairs(&[(1.0, true), (2.0, false), (3.0, true)]).unwrap()
    }

    #[test]
    fn nelson_aalen_by_hand() {
        let h = nelson_aalen(&three_point()).unwrap();
        assert_relative_eq!(h.eval(1.0), 1.0 / 3.0);
        assert_relative_eq!(h.eval(2.0), 1.0 / 3.0);
        assert_relative_eq!(h.eval(3.0), 4.0 / 3.0);
        assert_eq!(h.eval(0.5), 0.0);
    }

    #[test]
    fn kaplan_meier_by_hand() {
        let km = kaplan_meier(&three_point()).unwrap();
        assert_relative_eq!(km.eval(1.0), 2.0 / 3.0);
        assert_relative_eq!(km.eval(2.0), 2.0 / 3.0);
        assert_eq!(km.eval(3.0), 0.0);
        assert_eq!(km.defined_up_to, f64::INFINITY);
    }

    #[test]
    fn degenerate_samples() {
        let censored = SurvivalSample::from_pairs(&[(1.0, false), (4.0, false)]).unwrap();
        assert_eq!(nelson_aalen(&censored).unwrap(), StepFunction::constant(0.0));
        let km = kaplan_meier(&censored).unwrap();
        assert_eq!(km.survival, StepFunction::constant(1.0));
        assert_eq!(km.defined_up_to, 4.0);
        assert!(!km.is_defined_at(4.5));

        let one = SurvivalSample::from_pairs(&[(2.5, true)]).unwrap();
        assert_eq!(nelson_aalen(&one).unwrap().eval(2.5), 1.0);
    }

    #[test]
    fn uncensored_km_is_one_minus_ecdf() {
        let s = gen_pareto_sample(200, 1.8, 17);
        let xs: Vec<f64> = s.records().iter().map(|r| r.time).collect();
        let uncensored = SurvivalSample::from_pairs(&xs.iter().map(|&t| (t, true)).collect::<Vec<_>>()).unwrap();
        let km = kaplan_meier(&uncensored).unwrap();
        for &t in xs.iter().chain([0.1, 100.0].iter()) {
            let ecdf = xs.iter().filter(|&&x| x <= t).count() as f64 / xs.len() as f64;
            assert!((km.eval(t) - (1.0 - ecdf)).abs() < 1e-12);
        }
    }

    #[test]
    fn tied_censorings_are_exchangeable() {
        let a =
            SurvivalSample::from_pairs(&[(1.0, true), (2.0, false), (2.0, false), (2.0, true), (3.0, true)]).unwrap();
        let b =
            SurvivalSample::from_pairs(&[(2.0, false), (3.0, true), (2.0, true), (1.0, true), (2.0, false)]).unwrap();
        assert_eq!(kaplan_meier(&a).unwrap(), kaplan_meier(&b).unwrap());
    }

    #[test]
    fn greenwood_degenerate_cases() {
        let censored = SurvivalSample::from_pairs(&[(1.0, false), (2.0, false)]).unwrap();
        let band = greenwood_pointwise_ci(&censored, 0.95, &[0.5, 1.5, 3.0]).unwrap();
        assert_eq!(band.km_lower, vec![1.0; 3]);
        assert_eq!(band.km_upper, vec![1.0; 3]);

        let one = SurvivalSample::from_pairs(&[(1.0, true)]).unwrap();
        let band = greenwood_pointwise_ci(&one, 0.95, &[0.5, 1.0, 2.0]).unwrap();
        for i in 0..3 {
            for v in [band.km_lower[i], band.km_upper[i]] {
                assert!((0.0..=1.0).contains(&v));
            }
            assert!(band.na_lower[i] >= 0.0);
        }
        assert_eq!(band.na_lower[1], 0.0);
        assert!(greenwood_pointwise_ci(&one, 1.0, &[1.0]).is_err());
    }

    #[test]
    fn greenwood_width_halves_with_four_times_the_data() {
        let width = |n: usize| {
            let mut total = 0.0;
            for seed in 0..20 {
                let s = gen_pareto_sample(n, 1.8, 1000 + seed);
                // true median of X - U sits near 1
                let band = greenwood_pointwise_ci(&s, 0.95, &[1.0]).unwrap();
                total += band.km_upper[0] - band.km_lower[0];
            }
            total / 20.0
        };
        let ratio = width(1000) / width(4000);
        assert!((ratio - 2.0).abs() < 0.3, "width ratio {ratio}");
    }
}
