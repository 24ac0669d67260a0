//! Tail fitting under right censoring: Hill-type estimators for Pareto tails
//! and Weibull QQ least squares.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::classical::{kaplan_meier, nelson_aalen};
use crate::data::SurvivalSample;
use crate::error::{Error, Result};
use crate::stepfun::DensityForm;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum TailModel {
    /// Survival `∝ t^{-α}`.
    Pareto { alpha_hat: f64 },
    /// Hazard density `α t^{p-1}` with `α = p / l^p`.
    Weibull { p_hat: f64, l_hat: f64, alpha_hat: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub estimator: String,
    pub model: TailModel,
    pub k: usize,
    pub n: usize,
    /// `T_{n-k,n}`.
    pub threshold: f64,
    /// Top-k points left out of the QQ regression because the first-step
    /// survival estimate was 0 or 1 there.
    #[serde(default)]
    pub dropped: usize,
}

impl TailFit {
    /// Baseline hazard density of the fitted tail.
    pub fn density_form(&self) -> DensityForm {
        match self.model {
            TailModel::Pareto { alpha_hat } => DensityForm::ParetoTail { alpha: alpha_hat },
            TailModel::Weibull { p_hat, l_hat, .. } => DensityForm::WeibullTail {
                alpha: l_hat.powf(-p_hat),
                p: p_hat,
            },
        }
    }

    pub fn is_pareto(&self) -> bool {
        matches!(self.model, TailModel::Pareto { .. })
    }
}

/// `k_n = ⌈2√n⌉`.
pub fn default_k(n: usize) -> usize {
    (2.0 * (n as f64).sqrt()).ceil() as usize
}

struct TopK {
    /// `T_{n-j+1,n}` for `j = 1..=k`.
    times: Vec<f64>,
    events: Vec<bool>,
    threshold: f64,
}

fn top_k(s: &SurvivalSample, k: usize) -> Result<TopK> {
    let n = s.len();
    if k < 1 || k >= n {
        return Err(Error::InvalidInput(format!("k = {k} must satisfy 1 <= k < n = {n}")));
    }
    let t = s.order_statistics();
    let d = s.concomitants();
    Ok(TopK {
        times: (1..=k).map(|j| t[n - j]).collect(),
        events: (1..=k).map(|j| d[n - j]).collect(),
        threshold: t[n - k - 1],
    })
}

fn pareto_fit(estimator: &str, s: &SurvivalSample, k: usize, threshold: f64, alpha_hat: f64) -> TailFit {
    TailFit {
        estimator: estimator.to_string(),
        model: TailModel::Pareto { alpha_hat },
        k,
        n: s.len(),
        threshold,
        dropped: 0,
    }
}

/// Censored Hill estimator: events among the top `k` over the sum of their
/// log-excesses.
pub fn hill_censored(s: &SurvivalSample, k: usize) -> Result<TailFit> {
    let top = top_k(s, k)?;
    let numerator = top.events.iter().filter(|&&e| e).count() as f64;
    let denominator: f64 = top.times.iter().map(|&t| (t / top.threshold).ln()).sum();
    if !(denominator > 0.0) {
        return Err(Error::ZeroDenominator { k });
    }
    if numerator == 0.0 {
        return Err(Error::NoTailEvents { k });
    }
    Ok(pareto_fit("hill", s, k, top.threshold, numerator / denominator))
}

/// Product-limit weights `ω_{jk} = δ_{[n-j+1]}/j ∏_{l=j+1}^k ((l-1)/l)^{δ_{[n-l+1]}}`.
pub fn hill_weights(events: &[bool]) -> Vec<f64> {
    let k = events.len();
    let mut weights = vec![0.0; k];
    let mut product = 1.0;
    for j in (1..=k).rev() {
        if events[j - 1] {
            weights[j - 1] = product / j as f64;
            if j > 1 {
                product *= (j - 1) as f64 / j as f64;
            }
        }
    }
    weights
}

pub fn hill_weighted(s: &SurvivalSample, k: usize) -> Result<TailFit> {
    let top = top_k(s, k)?;
    let w = hill_weights(&top.events);
    let total: f64 = w.iter().sum();
    if total == 0.0 {
        return Err(Error::AllWeightsZero { k });
    }
    let denominator: f64 = w
        .iter()
        .zip(&top.times)
        .map(|(&w, &t)| w * (t / top.threshold).ln())
        .sum();
    if !(denominator > 0.0) {
        return Err(Error::ZeroDenominator { k });
    }
    Ok(pareto_fit("hill-weighted", s, k, top.threshold, total / denominator))
}

/// Least-squares fit of the Weibull QQ plot above `T_{n-k,n}`.
///
/// `survival` is the first-step estimate of `1 - F_0`; points where it equals
/// 0 or 1 are dropped and counted in [`TailFit::dropped`].
pub fn weibull_ls(s: &SurvivalSample, k: usize, survival: &dyn Fn(f64) -> f64) -> Result<TailFit> {
    let top = top_k(s, k)?;
    let mut xs = Vec::with_capacity(k);
    let mut ys = Vec::with_capacity(k);
    for &t in &top.times {
        let sv = survival(t);
        if sv > 0.0 && sv < 1.0 {
            xs.push((t / top.threshold).ln());
            ys.push((-sv.ln()).ln());
        }
    }
    let (p_hat, l_hat) = weibull_regression(&xs, &ys)?;
    Ok(TailFit {
        estimator: "weibull-ls".to_string(),
        model: TailModel::Weibull {
            p_hat,
            l_hat,
            alpha_hat: p_hat / l_hat.powf(p_hat),
        },
        k,
        n: s.len(),
        threshold: top.threshold,
        dropped: k - xs.len(),
    })
}

/// `(cov(x,y)/var(x), exp(x̄ - ȳ var(x)/cov(x,y)))`.
pub fn weibull_regression(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let m = xs.len();
    if m < 2 {
        return Err(Error::DegenerateRegression(format!("{m} usable QQ points")));
    }
    let mf = m as f64;
    let xbar = xs.iter().sum::<f64>() / mf;
    let ybar = ys.iter().sum::<f64>() / mf;
    let var = xs.iter().map(|x| (x - xbar).powi(2)).sum::<f64>() / mf;
    let cov = xs.iter().zip(ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum::<f64>() / mf;
    if var == 0.0 {
        return Err(Error::DegenerateRegression("var(x) = 0".into()));
    }
    if cov == 0.0 {
        return Err(Error::DegenerateRegression("cov(x, y) = 0".into()));
    }
    Ok((cov / var, (xbar - ybar * var / cov).exp()))
}

/// First-step estimators of the survival function used by the QQ fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FirstStep {
    KaplanMeier,
    /// `exp(-H_n)` with `H_n` the Nelson–Aalen estimate.
    NelsonAalen,
}

impl FirstStep {
    pub fn survival(&self, s: &SurvivalSample) -> Result<impl Fn(f64) -> f64> {
        let (f, exponentiate) = match self {
            FirstStep::KaplanMeier => (kaplan_meier(s)?.survival, false),
            FirstStep::NelsonAalen => (nelson_aalen(s)?, true),
        };
        Ok(move |t: f64| {
            let v = f.eval(t);
            if exponentiate {
                (-v).exp()
            } else {
                v
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QqKind {
    /// `(log t, -log S(t))`.
    Pareto,
    /// `(log t, log(-log S(t)))`.
    Weibull,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QqData {
    pub points: Vec<(f64, f64)>,
    pub dropped: usize,
}

/// QQ coordinates at the distinct observed times.
pub fn qq_data(s: &SurvivalSample, kind: QqKind, survival: &dyn Fn(f64) -> f64) -> QqData {
    let mut times = s.order_statistics();
    times.dedup();
    let mut points = Vec::with_capacity(times.len());
    let mut dropped = 0;
    for t in times {
        let sv = survival(t);
        if sv > 0.0 && sv < 1.0 {
            let y = match kind {
                QqKind::Pareto => -sv.ln(),
                QqKind::Weibull => (-sv.ln()).ln(),
            };
            points.push((t.ln(), y));
        } else {
            dropped += 1;
        }
    }
    QqData { points, dropped }
}

/// A named tail estimator taking a sample and the number of upper order
/// statistics.
pub trait TailEstimator: Send + Sync {
    fn name(&self) -> &'static str;
    fn fit(&self, s: &SurvivalSample, k: usize) -> Result<TailFit>;
}

pub struct Hill;
pub struct WeightedHill;
pub struct WeibullLs(pub FirstStep);

impl TailEstimator for Hill {
    fn name(&self) -> &'static str {
        "hill"
    }

    fn fit(&self, s: &SurvivalSample, k: usize) -> Result<TailFit> {
        hill_censored(s, k)
    }
}

impl TailEstimator for WeightedHill {
    fn name(&self) -> &'static str {
        "hill-weighted"
    }

    fn fit(&self, s: &SurvivalSample, k: usize) -> Result<TailFit> {
        hill_weighted(s, k)
    }
}

impl TailEstimator for WeibullLs {
    fn name(&self) -> &'static str {
        match self.0 {
            FirstStep::KaplanMeier => "weibull-ls",
            FirstStep::NelsonAalen => "weibull-ls-na",
        }
    }

    fn fit(&self, s: &SurvivalSample, k: usize) -> Result<TailFit> {
        let survival = self.0.survival(s)?;
        let mut fit = weibull_ls(s, k, &survival)?;
        fit.estimator = self.name().to_string();
        Ok(fit)
    }
}

/// Tail estimators selectable by name.
pub struct TailRegistry {
    entries: BTreeMap<&'static str, Box<dyn TailEstimator>>,
}

impl TailRegistry {
    pub fn empty() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, estimator: Box<dyn TailEstimator>) {
        self.entries.insert(estimator.name(), estimator);
    }

    pub fn get(&self, name: &str) -> Option<&dyn TailEstimator> {
        self.entries.get(name).map(|b| b.as_ref())
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }
}

impl Default for TailRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(Hill));
        r.register(Box::new(WeightedHill));
        r.register(Box::new(WeibullLs(FirstStep::KaplanMeier)));
        r.register(Box::new(WeibullLs(FirstStep::NelsonAalen)));
        r
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::E;

    use approx::assert_relative_eq;
    use proptest::prelude::*;

    use super::*;

    fn exp_ladder(events: [bool; 4]) -> SurvivalSample {
        let times = [1.0, E, E * E, E * E * E];
        SurvivalSample::from_pairs(&times.iter().zip(events).map(|(&t, d)| (t, d)).collect::<Vec<_>>()).unwrap()
    }

    fn alpha(fit: &TailFit) -> f64 {
        match fit.model {
            TailModel::Pareto { alpha_hat } => alpha_hat,
            _ => panic!("not a Pareto fit"),
        }
    }

    /// Direct transcription of the weighted estimator, O(k^2).
    fn weighted_oracle(times: &[f64], events: &[bool], k: usize) -> f64 {
        let n = times.len();
        let t0 = times[n - k - 1];
        let delta = |j: usize| if events[n - j] { 1.0 } else { 0.0 };
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 1..=k {
            let mut w = delta(j) / j as f64;
            for l in (j + 1)..=k {
                w *= ((l as f64 - 1.0) / l as f64).powf(delta(l));
            }
            num += w;
            den += w * (times[n - j] / t0).ln();
        }
        num / den
    }

    #[test]
    fn hill_by_hand() {
        let all = exp_ladder([true; 4]);
        assert_relative_eq!(alpha(&hill_censored(&all, 3).unwrap()), 0.5, max_relative = 1e-14);
        let fit = hill_censored(&exp_ladder([true, true, true, false]), 3).unwrap();
        assert_relative_eq!(alpha(&fit), 1.0 / 3.0, max_relative = 1e-14);
        assert_eq!(fit.threshold, 1.0);
    }

    #[test]
    fn weighted_hill_by_hand() {
        let s = exp_ladder([true, true, true, false]);
        let got = alpha(&hill_weighted(&s, 3).unwrap());
        assert_relative_eq!(got, 2.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(
            got,
            weighted_oracle(&s.order_statistics(), &s.concomitants(), 3),
            max_relative = 1e-14
        );
    }

    #[test]
    fn single_term() {
        let s = SurvivalSample::from_pairs(&[(1.0, false), (2.0, true), (5.0, true)]).unwrap();
        let expected = 1.0 / (5.0f64 / 2.0).ln();
        assert_relative_eq!(alpha(&hill_censored(&s, 1).unwrap()), expected, max_relative = 1e-14);
        assert_relative_eq!(alpha(&hill_weighted(&s, 1).unwrap()), expected, max_relative = 1e-14);
    }

    #[test]
    fn error_cases() {
        let tied = SurvivalSample::from_pairs(&[(2.0, true), (2.0, true), (2.0, true)]).unwrap();
        assert!(matches!(hill_censored(&tied, 2), Err(Error::ZeroDenominator { .. })));
        let cens = SurvivalSample::from_pairs(&[(1.0, true), (2.0, false), (3.0, false)]).unwrap();
        assert!(matches!(hill_censored(&cens, 2), Err(Error::NoTailEvents { .. })));
        assert!(matches!(hill_weighted(&cens, 2), Err(Error::AllWeightsZero { .. })));
        assert!(hill_censored(&cens, 3).is_err());
        assert!(hill_censored(&cens, 0).is_err());
    }

    #[test]
    fn default_k_rule() {
        assert_eq!(default_k(1000), 64);
        assert_eq!(default_k(100_000), 633);
        assert_eq!(default_k(394), 40);
    }

    #[test]
    fn exact_linear_qq_plot() {
        let (p, l) = weibull_regression(&[0.0, 1.0, 2.0, 3.0], &[-1.0, -0.3, 0.4, 1.1]).unwrap();
        assert_relative_eq!(p, 0.7, max_relative = 1e-13);
        // intercept -p log l = -1
        assert_relative_eq!(-p * l.ln(), -1.0, max_relative = 1e-13);
        assert!(weibull_regression(&[1.0, 1.0], &[0.0, 1.0]).is_err());
        assert!(weibull_regression(&[0.0, 1.0, 2.0], &[1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn weibull_scale_conversion_of_reported_fits() {
        // α̂ = p̂ / l̂^p̂ for the simulated and diabetic fits
        assert!((1.3722 / 0.4862f64.powf(1.3722) - 3.6906).abs() < 5e-3);
        assert!((0.5144 / 5.5112f64.powf(0.5144) - 0.2138).abs() < 5e-4);
    }

    fn ss_w(xs: &[f64], ys: &[f64], p: f64, log_l: f64) -> f64 {
        xs.iter().zip(ys).map(|(x, y)| (y - p * x + p * log_l).powi(2)).sum()
    }

    /// Plain Nelder–Mead on (p, log l).
    fn nelder_mead(f: impl Fn(f64, f64) -> f64, start: [f64; 2]) -> [f64; 2] {
        let mut simplex = [start, [start[0] + 0.5, start[1]], [start[0], start[1] + 0.5]];
        let val = |p: [f64; 2]| f(p[0], p[1]);
        for _ in 0..5000 {
            simplex.sort_by(|a, b| val(*a).total_cmp(&val(*b)));
            let [best, mid, worst] = simplex;
            let centroid = [(best[0] + mid[0]) / 2.0, (best[1] + mid[1]) / 2.0];
            let along = |t: f64| {
                [
                    centroid[0] + t * (worst[0] - centroid[0]),
                    centroid[1] + t * (worst[1] - centroid[1]),
                ]
            };
            let r = along(-1.0);
            if val(r) < val(best) {
                let e = along(-2.0);
                simplex[2] = if val(e) < val(r) { e } else { r };
            } else if val(r) < val(mid) {
                simplex[2] = r;
            } else {
                let c = along(0.5);
                if val(c) < val(worst) {
                    simplex[2] = c;
                } else {
                    for p in simplex.iter_mut().skip(1) {
                        *p = [(p[0] + best[0]) / 2.0, (p[1] + best[1]) / 2.0];
                    }
                }
            }
        }
        simplex[0]
    }

    #[test]
    fn closed_form_is_the_least_squares_minimiser() {
        let s = crate::data::gen_weibull_sample(1000, 2.0, 0.5, 42);
        let k = default_k(s.len());
        let km = FirstStep::KaplanMeier.survival(&s).unwrap();
        let fit = weibull_ls(&s, k, &km).unwrap();
        let TailModel::Weibull { p_hat, l_hat, .. } = fit.model else {
            unreachable!()
        };
        let n = s.len();
        let t = s.order_statistics();
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for j in 1..=k {
            let sv = km(t[n - j]);
            if sv > 0.0 && sv < 1.0 {
                xs.push((t[n - j] / fit.threshold).ln());
                ys.push((-sv.ln()).ln());
            }
        }
        assert_eq!(fit.dropped, k - xs.len());
        let [p, log_l] = nelder_mead(|p, ll| ss_w(&xs, &ys, p, ll), [1.0, 0.0]);
        assert!((p - p_hat).abs() < 1e-6, "{p} vs {p_hat}");
        assert!((log_l - l_hat.ln()).abs() < 1e-6, "{log_l} vs {}", l_hat.ln());
        assert!(ss_w(&xs, &ys, p_hat, l_hat.ln()) <= ss_w(&xs, &ys, p, log_l) + 1e-12);
    }

    #[test]
    fn weibull_recovers_parameters_from_exact_survival() {
        let (alpha0, p0) = (2.0, 0.5);
        let survival = |t: f64| (-alpha0 * t.powf(p0)).exp();
        // 10^5 points above t = 1 with the threshold at 1
        let m = 100_000;
        let mut pairs = vec![(1.0, true)];
        pairs.extend((1..=m).map(|i| (1.0 + 60.0 * i as f64 / m as f64, true)));
        let s = SurvivalSample::from_pairs(&pairs).unwrap();
        let fit = weibull_ls(&s, m, &survival).unwrap();
        assert_eq!(fit.threshold, 1.0);
        let DensityForm::WeibullTail { alpha, p } = fit.density_form() else {
            unreachable!()
        };
        assert!((p / p0 - 1.0).abs() < 0.05);
        assert!((alpha / alpha0 - 1.0).abs() < 0.05);
    }

    #[test]
    fn qq_points() {
        let s = crate::data::gen_pareto_sample(200, 1.8, 1);
        let pareto = qq_data(&s, QqKind::Pareto, &|t: f64| t.max(1.0).powf(-1.8));
        for w in pareto.points.windows(2) {
            assert_relative_eq!((w[1].1 - w[0].1) / (w[1].0 - w[0].0), 1.8, max_relative = 1e-9);
        }
        let weib = qq_data(&s, QqKind::Weibull, &|t: f64| (-2.0 * t.powf(0.5)).exp());
        for w in weib.points.windows(2) {
            assert_relative_eq!((w[1].1 - w[0].1) / (w[1].0 - w[0].0), 0.5, max_relative = 1e-9);
        }
        let three = SurvivalSample::from_pairs(&[(1.0, true), (2.0, false), (3.0, true)]).unwrap();
        let km = FirstStep::KaplanMeier.survival(&three).unwrap();
        let q = qq_data(&three, QqKind::Pareto, &km);
        assert_eq!(q.points.len(), 2);
        assert_eq!(q.dropped, 1);
        assert!(q.points.iter().all(|p| p.1.is_finite()));
    }

    #[test]
    fn registry_lookup() {
        let r = TailRegistry::default();
        assert_eq!(
            r.names().collect::<Vec<_>>(),
            vec!["hill", "hill-weighted", "weibull-ls", "weibull-ls-na"]
        );
        let s = exp_ladder([true; 4]);
        assert_relative_eq!(
            alpha(&r.get("hill").unwrap().fit(&s, 3).unwrap()),
            0.5,
            max_relative = 1e-14
        );
        assert!(r.get("nope").is_none());
    }

    fn arb_times() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.01..100.0f64, 5..60)
    }

    proptest! {
        #[test]
        fn hill_is_scale_invariant(times in arb_times(), flags in prop::collection::vec(any::<bool>(), 60), c in 0.01..100.0f64, kf in 0.0..1.0f64) {
            let pairs: Vec<(f64, bool)> = times.iter().zip(&flags).map(|(&t, &d)| (t, d)).collect();
            let k = 1 + (kf * (pairs.len() - 2) as f64) as usize;
            let a = SurvivalSample::from_pairs(&pairs).unwrap();
            let b = SurvivalSample::from_pairs(&pairs.iter().map(|&(t, d)| (c * t, d)).collect::<Vec<_>>()).unwrap();
            match (hill_censored(&a, k), hill_censored(&b, k)) {
                (Ok(x), Ok(y)) => prop_assert!((alpha(&x) / alpha(&y) - 1.0).abs() < 1e-9),
                (Err(_), Err(_)) => {}
                (x, y) => prop_assert!(false, "{x:?} vs {y:?}"),
            }
        }

        #[test]
        fn weighted_equals_plain_without_censoring(times in arb_times(), kf in 0.0..1.0f64) {
            let s = SurvivalSample::from_pairs(&times.iter().map(|&t| (t, true)).collect::<Vec<_>>()).unwrap();
            let k = 1 + (kf * (s.len() - 2) as f64) as usize;
            if let (Ok(a), Ok(b)) = (hill_censored(&s, k), hill_weighted(&s, k)) {
                prop_assert!((alpha(&a) / alpha(&b) - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn weighted_matches_direct_formula(times in arb_times(), flags in prop::collection::vec(any::<bool>(), 60), kf in 0.0..1.0f64) {
            let pairs: Vec<(f64, bool)> = times.iter().zip(&flags).map(|(&t, &d)| (t, d)).collect();
            let s = SurvivalSample::from_pairs(&pairs).unwrap();
            let k = 1 + (kf * (s.len() - 2) as f64) as usize;
            if let Ok(fit) = hill_weighted(&s, k) {
                let oracle = weighted_oracle(&s.order_statistics(), &s.concomitants(), k);
                prop_assert!((alpha(&fit) / oracle - 1.0).abs() < 1e-12);
            }
        }
    }
}
