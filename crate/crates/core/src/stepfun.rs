//! Piecewise-constant functions on `[0, ∞)` and cumulative hazard measures with
//! closed-form integrals.
//!
//! A [`StepFunction`] is càdlàg: its value on `[b_{i-1}, b_i)` is `values[i]`,
//! with `b_{-1} = 0` and the last value extending to infinity. Left limits are
//! available through [`StepFunction::left_limit`], which is how at-risk counts
//! `Y(t) = #{T_i >= t}` are read off their right-continuous modification.
//!
//! A [`HazardMeasure`] is a sum of densities of three elementary forms on
//! intervals plus point masses. Every integral against it is evaluated exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    breaks: Vec<f64>,
    values: Vec<f64>,
}

impl StepFunction {
    pub fn constant(value: f64) -> Self {
        Self {
            breaks: Vec::new(),
            values: vec![value],
        }
    }

    /// Builds a step function from its breakpoints and the `breaks.len() + 1`
    /// values on the induced intervals.
    ///
    /// Repeated breakpoints (and a breakpoint at zero) leave an empty interval
    /// behind; the value of that interval is discarded so the later value wins.
    /// `+∞` is an admissible value; it encodes an infinite tuning weight.
    pub fn new(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != breaks.len() + 1 {
            return Err(Error::InvalidInput(format!(
                "step function needs {} values for {} breakpoints, got {}",
                breaks.len() + 1,
                breaks.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidInput("step function value is NaN".into()));
        }
        let mut kept_breaks = Vec::with_capacity(breaks.len());
        let mut kept_values = Vec::with_capacity(values.len());
        kept_values.push(values[0]);
        let mut previous = 0.0;
        for (i, &b) in breaks.iter().enumerate() {
            if !b.is_finite() || b < previous {
                return Err(Error::InvalidInput(format!(
                    "breakpoints must be finite, non-negative and non-decreasing (got {b} after {previous})"
                )));
            }
            if b == previous {
                // empty interval [previous, b): the later value replaces it
                *kept_values.last_mut().unwrap() = values[i + 1];
            } else {
                kept_breaks.push(b);
                kept_values.push(values[i + 1]);
            }
            previous = b;
        }
        Ok(Self::canonical(kept_breaks, kept_values))
    }

    /// Step function starting at `initial` and jumping by `delta` at each
    /// `(time, delta)`; equal times are aggregated.
    pub fn from_jumps(initial: f64, jumps: &[(f64, f64)]) -> Result<Self> {
        let mut sorted = jumps.to_vec();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut breaks = Vec::with_capacity(sorted.len());
        let mut values = vec![initial];
        let mut level = initial;
        for (time, delta) in sorted {
            if !(time.is_finite() && time >= 0.0) {
                return Err(Error::InvalidInput(format!("jump time {time} is invalid")));
            }
            level += delta;
            if breaks.last() == Some(&time) || (breaks.is_empty() && time == 0.0) {
                *values.last_mut().unwrap() = level;
            } else {
                breaks.push(time);
                values.push(level);
            }
        }
        Ok(Self::canonical(breaks, values))
    }

    /// Piecewise-constant projection of `f` onto `grid`: the value on each
    /// grid cell is `f` at the cell midpoint, and `f(last)` beyond the grid.
    pub fn project(f: impl Fn(f64) -> f64, grid: &[f64]) -> Result<Self> {
        let mut points: Vec<f64> = grid.iter().copied().filter(|&g| g > 0.0).collect();
        points.sort_by(f64::total_cmp);
        points.dedup();
        if points.is_empty() {
            return Err(Error::InvalidInput("projection grid has no positive point".into()));
        }
        let mut values = Vec::with_capacity(points.len() + 1);
        let mut left = 0.0;
        for &p in &points {
            values.push(f(0.5 * (left + p)));
            left = p;
        }
        values.push(f(left));
        Self::new(points, values)
    }

    fn canonical(breaks: Vec<f64>, values: Vec<f64>) -> Self {
        let mut out_b = Vec::with_capacity(breaks.len());
        let mut out_v = Vec::with_capacity(values.len());
        out_v.push(values[0]);
        for (b, v) in breaks.into_iter().zip(values.into_iter().skip(1)) {
            if *out_v.last().unwrap() != v {
                out_b.push(b);
                out_v.push(v);
            }
        }
        Self {
            breaks: out_b,
            values: out_v,
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breaks
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at `t` (right-continuous).
    pub fn eval(&self, t: f64) -> f64 {
        self.values[self.breaks.partition_point(|&b| b <= t)]
    }

    /// Left limit at `t`; equals `eval(0)` at `t = 0`.
    pub fn left_limit(&self, t: f64) -> f64 {
        self.values[self.breaks.partition_point(|&b| b < t)]
    }

    pub fn tail_value(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// Intervals `[start, end)` of constancy with their value; the last one
    /// has `end = ∞`.
    pub fn segments(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        (0..self.values.len()).map(move |i| {
            let start = if i == 0 { 0.0 } else { self.breaks[i - 1] };
            let end = self.breaks.get(i).copied().unwrap_or(f64::INFINITY);
            (start, end, self.values[i])
        })
    }

    /// Pointwise combination on the merged breakpoints.
    pub fn zip_with(&self, other: &StepFunction, f: impl Fn(f64, f64) -> f64) -> StepFunction {
        let breaks = merge_sorted(&self.breaks, &other.breaks);
        let mut values = Vec::with_capacity(breaks.len() + 1);
        values.push(f(self.values[0], other.values[0]));
        for &b in &breaks {
            values.push(f(self.eval(b), other.eval(b)));
        }
        Self::canonical(breaks, values)
    }

    pub fn add(&self, other: &StepFunction) -> StepFunction {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn is_non_decreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[0] <= w[1])
    }

    pub fn is_non_increasing(&self) -> bool {
        self.values.windows(2).all(|w| w[0] >= w[1])
    }
}

/// Sorted union of two strictly increasing sequences, with exact-equality
/// de-duplication.
pub(crate) fn merge_sorted(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) if x < y => {
                i += 1;
                x
            }
            (Some(&x), Some(&y)) if y < x => {
                j += 1;
                y
            }
            (Some(&x), Some(_)) => {
                i += 1;
                j += 1;
                x
            }
            (Some(&x), None) => {
                i += 1;
                x
            }
            (None, Some(&y)) => {
                j += 1;
                y
            }
            (None, None) => unreachable!(),
        };
        if out.last() != Some(&next) {
            out.push(next);
        }
    }
    out
}

/// Elementary hazard densities with closed-form integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum DensityForm {
    /// `q` on the interval.
    Constant { rate: f64 },
    /// `α / t`, cumulative `α log t`.
    ParetoTail { alpha: f64 },
    /// `α p t^{p-1}`, cumulative `α t^p`.
    WeibullTail { alpha: f64, p: f64 },
}

impl DensityForm {
    pub fn density(&self, t: f64) -> f64 {
        match *self {
            DensityForm::Constant { rate } => rate,
            DensityForm::ParetoTail { alpha } => alpha / t,
            DensityForm::WeibullTail { alpha, p } => alpha * p * t.powf(p - 1.0),
        }
    }

    /// `∫_s^u density`, for `s <= u`.
    pub fn mass(&self, s: f64, u: f64) -> f64 {
        if u <= s {
            return 0.0;
        }
        match *self {
            DensityForm::Constant { rate } => {
                if rate == 0.0 {
                    0.0
                } else {
                    rate * (u - s)
                }
            }
            DensityForm::ParetoTail { alpha } => {
                if alpha == 0.0 {
                    0.0
                } else {
                    alpha * (u / s).ln()
                }
            }
            DensityForm::WeibullTail { alpha, p } => {
                if alpha == 0.0 {
                    0.0
                } else {
                    alpha * (u.powf(p) - s.powf(p))
                }
            }
        }
    }

    pub fn scaled(&self, w: f64) -> DensityForm {
        match *self {
            DensityForm::Constant { rate } => DensityForm::Constant { rate: rate * w },
            DensityForm::ParetoTail { alpha } => DensityForm::ParetoTail { alpha: alpha * w },
            DensityForm::WeibullTail { alpha, p } => DensityForm::WeibullTail { alpha: alpha * w, p },
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            DensityForm::Constant { rate } => rate.is_finite() && rate >= 0.0,
            DensityForm::ParetoTail { alpha } => alpha.is_finite() && alpha >= 0.0,
            DensityForm::WeibullTail { alpha, p } => alpha.is_finite() && alpha >= 0.0 && p.is_finite() && p > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid density {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityPiece {
    pub start: f64,
    /// May be `+∞`.
    pub end: f64,
    pub form: DensityForm,
}

impl DensityPiece {
    pub fn new(start: f64, end: f64, form: DensityForm) -> Self {
        Self { start, end, form }
    }

    fn mass_over(&self, s: f64, u: f64) -> f64 {
        let lo = s.max(self.start);
        let hi = u.min(self.end);
        self.form.mass(lo, hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointMass {
    pub time: f64,
    pub mass: f64,
}

/// Cumulative hazard `Λ(t) = ∫_0^t density + Σ_{s <= t} atoms`. Pieces may
/// overlap, in which case their densities add up.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct HazardMeasure {
    pieces: Vec<DensityPiece>,
    atoms: Vec<PointMass>,
}

impl HazardMeasure {
    pub fn new(pieces: Vec<DensityPiece>, mut atoms: Vec<PointMass>) -> Result<Self> {
        for piece in &pieces {
            piece.form.validate()?;
            if !(piece.start >= 0.0 && piece.start < piece.end) || piece.start.is_infinite() {
                return Err(Error::InvalidInput(format!(
                    "density piece has invalid interval [{}, {})",
                    piece.start, piece.end
                )));
            }
            if matches!(piece.form, DensityForm::ParetoTail { .. }) && piece.start <= 0.0 {
                return Err(Error::InvalidInput(
                    "a Pareto tail piece must start at a positive time".into(),
                ));
            }
        }
        for atom in &atoms {
            if !(atom.time.is_finite() && atom.time > 0.0 && atom.mass.is_finite() && atom.mass >= 0.0) {
                return Err(Error::InvalidInput(format!("invalid atom {atom:?}")));
            }
        }
        atoms.sort_by(|a, b| a.time.total_cmp(&b.time));
        Ok(Self { pieces, atoms })
    }

    /// Atomless measure with a single density on `[start, ∞)`.
    pub fn density_from(start: f64, form: DensityForm) -> Result<Self> {
        Self::new(vec![DensityPiece::new(start, f64::INFINITY, form)], Vec::new())
    }

    pub fn atoms_only(atoms: Vec<PointMass>) -> Result<Self> {
        Self::new(Vec::new(), atoms)
    }

    pub fn pieces(&self) -> &[DensityPiece] {
        &self.pieces
    }

    pub fn atoms(&self) -> &[PointMass] {
        &self.atoms
    }

    pub fn is_atomless(&self) -> bool {
        self.atoms.iter().all(|a| a.mass == 0.0)
    }

    pub fn density(&self, t: f64) -> f64 {
        self.pieces
            .iter()
            .filter(|p| p.start <= t && t < p.end)
            .map(|p| p.form.density(t))
            .sum()
    }

    /// Mass of the continuous part over `(s, u]`.
    pub fn continuous_mass(&self, s: f64, u: f64) -> f64 {
        self.pieces.iter().map(|p| p.mass_over(s, u)).sum()
    }

    /// `Λ^c(t)`.
    pub fn continuous_cumulative(&self, t: f64) -> f64 {
        self.continuous_mass(0.0, t)
    }

    /// `Λ(t)`, including atoms at `t`.
    pub fn eval_cumulative(&self, t: f64) -> f64 {
        let atoms: f64 = self.atoms.iter().take_while(|a| a.time <= t).map(|a| a.mass).sum();
        self.continuous_cumulative(t) + atoms
    }

    /// Total mass on `(0, ∞)`; infinite for the Pareto and Weibull tails.
    pub fn total_mass(&self) -> f64 {
        self.eval_cumulative(f64::INFINITY)
    }
}

/// `∫_0^t c/(c+Y) dΛ`, evaluated exactly on intervals where `c` and `Y` are
/// both constant. Atoms of `Λ` are weighted by the ratio at the atom time.
/// An infinite `c` gives ratio one.
pub fn integrate_ratio(c: &StepFunction, y: &StepFunction, h: &HazardMeasure, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidInput(format!("t = {t} must be non-negative")));
    }
    let ratio = |a: f64, yv: f64| {
        if a.is_infinite() {
            Some(1.0)
        } else if a + yv > 0.0 {
            Some(a / (a + yv))
        } else {
            None
        }
    };
    let breaks = merge_sorted(c.breakpoints(), y.breakpoints());
    let mut total = 0.0;
    let mut start = 0.0;
    for end in breaks.iter().copied().chain(std::iter::once(f64::INFINITY)) {
        if start >= t {
            break;
        }
        let upper = end.min(t);
        let mass = h.continuous_mass(start, upper);
        if mass > 0.0 {
            let r = ratio(c.eval(start), y.eval(start)).ok_or(Error::DegenerateWeight { start, end: upper })?;
            total += r * mass;
        }
        start = end;
    }
    for atom in h.atoms().iter().take_while(|a| a.time <= t) {
        if atom.mass > 0.0 {
            let r = ratio(c.eval(atom.time), y.eval(atom.time)).ok_or(Error::DegenerateWeight {
                start: atom.time,
                end: atom.time,
            })?;
            total += r * atom.mass;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::E;

    use approx::assert_relative_eq;
    use proptest::prelude::*;

    use super::*;
    use crate::quad;

    #[test]
    fn constant_density_cumulative() {
        let h = HazardMeasure::density_from(0.0, DensityForm::Constant { rate: 1.0 }).unwrap();
        assert_eq!(h.eval_cumulative(2.0), 2.0);
    }

    #[test]
    fn pareto_cumulative_matches_quadrature() {
        let h = HazardMeasure::density_from(1.0, DensityForm::ParetoTail { alpha: 1.8 }).unwrap();
        let oracle = quad::integrate(|s| 1.8 / s, 1.0, E, 1e-13);
        assert_relative_eq!(oracle, 1.8, max_relative = 1e-12);
        assert_relative_eq!(h.eval_cumulative(E), oracle, max_relative = 1e-12);
        assert_eq!(h.eval_cumulative(0.5), 0.0);
    }

    #[test]
    fn single_atom() {
        let h = HazardMeasure::atoms_only(vec![PointMass { time: 1.0, mass: 0.5 }]).unwrap();
        assert_eq!(h.eval_cumulative(1.0), 0.5);
        assert_eq!(h.eval_cumulative(0.9), 0.0);
    }

    #[test]
    fn step_function_conventions() {
        let f = StepFunction::new(vec![1.0, 2.0], vec![3.0, 2.0, 1.0]).unwrap();
        assert_eq!(f.eval(0.5), 3.0);
        assert_eq!(f.eval(1.0), 2.0);
        assert_eq!(f.left_limit(1.0), 3.0);
        assert_eq!(f.eval(7.0), 1.0);
        assert_eq!(f.tail_value(), 1.0);
    }

    #[test]
    fn tied_breakpoints_keep_later_value() {
        let f = StepFunction::new(vec![1.0, 1.0, 2.0], vec![0.0, 5.0, 6.0, 7.0]).unwrap();
        assert_eq!(f.breakpoints(), &[1.0, 2.0]);
        assert_eq!(f.eval(1.0), 6.0);
        assert!(StepFunction::new(vec![2.0, 1.0], vec![0.0, 1.0, 2.0]).is_err());
    }

    #[test]
    fn canonical_form_drops_redundant_breaks() {
        let f = StepFunction::new(vec![1.0, 2.0], vec![1.0, 1.0, 3.0]).unwrap();
        assert_eq!(f.breakpoints(), &[2.0]);
        let g = StepFunction::constant(1.0).add(&StepFunction::constant(2.0));
        assert_eq!(g, StepFunction::constant(3.0));
    }

    #[test]
    fn projection_uses_midpoints() {
        let f = StepFunction::project(|t| 10.0 * t, &[1.0, 2.0]).unwrap();
        assert_eq!(f.values(), &[5.0, 15.0, 20.0]);
    }

    #[test]
    fn ratio_identity_and_zero_weight() {
        let h = HazardMeasure::new(
            vec![
                DensityPiece::new(0.0, 2.0, DensityForm::Constant { rate: 0.7 }),
                DensityPiece::new(2.0, f64::INFINITY, DensityForm::ParetoTail { alpha: 1.3 }),
            ],
            vec![PointMass { time: 1.5, mass: 0.2 }],
        )
        .unwrap();
        let one = StepFunction::constant(1.0);
        let zero = StepFunction::constant(0.0);
        for t in [0.3, 1.5, 2.0, 9.0] {
            assert_relative_eq!(
                integrate_ratio(&one, &zero, &h, t).unwrap(),
                h.eval_cumulative(t),
                max_relative = 1e-15
            );
        }
        // c = 0 below t0 = 3 with Y > 0
        let c = StepFunction::new(vec![3.0], vec![0.0, 1.0]).unwrap();
        let y = StepFunction::constant(4.0);
        assert_eq!(integrate_ratio(&c, &y, &h, 2.9).unwrap(), 0.0);
    }

    #[test]
    fn ratio_half_weight_pareto() {
        let h = HazardMeasure::density_from(1.0, DensityForm::ParetoTail { alpha: 2.0 }).unwrap();
        let one = StepFunction::constant(1.0);
        let got = integrate_ratio(&one, &one, &h, E).unwrap();
        let oracle = quad::integrate(|s| 0.5 * 2.0 / s, 1.0, E, 1e-13);
        assert_relative_eq!(got, 1.0, max_relative = 1e-14);
        assert_relative_eq!(got, oracle, max_relative = 1e-12);
    }

    #[test]
    fn ratio_reports_degenerate_weight() {
        let h = HazardMeasure::density_from(0.0, DensityForm::Constant { rate: 1.0 }).unwrap();
        let zero = StepFunction::constant(0.0);
        assert!(matches!(
            integrate_ratio(&zero, &zero, &h, 1.0),
            Err(Error::DegenerateWeight { .. })
        ));
    }

    #[test]
    fn infinite_weight_gives_unit_ratio() {
        let h = HazardMeasure::density_from(0.0, DensityForm::Constant { rate: 2.0 }).unwrap();
        let c = StepFunction::constant(f64::INFINITY);
        let y = StepFunction::constant(10.0);
        assert_eq!(integrate_ratio(&c, &y, &h, 1.5).unwrap(), 3.0);
    }

    fn arb_form() -> impl Strategy<Value = DensityForm> {
        prop_oneof![
            (0.0..3.0f64).prop_map(|rate| DensityForm::Constant { rate }),
            (0.0..3.0f64).prop_map(|alpha| DensityForm::ParetoTail { alpha }),
            (0.0..3.0f64, 0.2..2.5f64).prop_map(|(alpha, p)| DensityForm::WeibullTail { alpha, p }),
        ]
    }

    fn arb_measure() -> impl Strategy<Value = HazardMeasure> {
        (
            prop::collection::vec((0.05..5.0f64, 0.1..4.0f64, arb_form()), 1..4),
            prop::collection::vec((0.05..8.0f64, 0.0..1.0f64), 0..4),
        )
            .prop_map(|(pieces, atoms)| {
                let pieces = pieces
                    .into_iter()
                    .map(|(s, w, f)| DensityPiece::new(s, s + w, f))
                    .collect();
                let atoms = atoms.into_iter().map(|(time, mass)| PointMass { time, mass }).collect();
                HazardMeasure::new(pieces, atoms).unwrap()
            })
    }

    fn arb_step() -> impl Strategy<Value = StepFunction> {
        prop::collection::vec((0.05..9.0f64, 0.0..5.0f64), 0..5).prop_flat_map(|pts| {
            (Just(pts), 0.0..5.0f64).prop_map(|(mut pts, v0)| {
                pts.sort_by(|a, b| a.0.total_cmp(&b.0));
                pts.dedup_by(|a, b| a.0 == b.0);
                let breaks = pts.iter().map(|p| p.0).collect();
                let mut values = vec![v0];
                values.extend(pts.iter().map(|p| p.1));
                StepFunction::new(breaks, values).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn cumulative_is_monotone_and_right_continuous(h in arb_measure(), mut ts in prop::collection::vec(0.0..10.0f64, 2..30)) {
            ts.sort_by(f64::total_cmp);
            for w in ts.windows(2) {
                prop_assert!(h.eval_cumulative(w[0]) <= h.eval_cumulative(w[1]) + 1e-12);
            }
            for a in h.atoms() {
                let at = h.eval_cumulative(a.time);
                let after = h.eval_cumulative(a.time + 1e-12);
                prop_assert!((after - at).abs() < 1e-9);
            }
        }

        #[test]
        fn closed_form_matches_quadrature(h in arb_measure(), c in arb_step(), t in 0.1..10.0f64) {
            // strictly positive Y keeps the ratio well defined
            let y = StepFunction::new(vec![2.0, 5.0], vec![3.0, 2.0, 1.0]).unwrap();
            let got = integrate_ratio(&c, &y, &h, t).unwrap();
            let mut breaks: Vec<f64> = vec![0.0, t];
            breaks.extend(c.breakpoints().iter().chain(y.breakpoints()).copied().filter(|&b| b < t));
            for p in h.pieces() {
                breaks.extend([p.start, p.end].into_iter().filter(|&b| b < t));
            }
            breaks.sort_by(f64::total_cmp);
            breaks.dedup();
            let mut oracle = 0.0;
            for w in breaks.windows(2) {
                oracle += quad::integrate(
                    |s| {
                        let a = c.eval(s);
                        a / (a + y.eval(s)) * h.density(s)
                    },
                    w[0],
                    w[1],
                    1e-14,
                );
            }
            for a in h.atoms().iter().filter(|a| a.time <= t) {
                let cv = c.eval(a.time);
                oracle += cv / (cv + y.eval(a.time)) * a.mass;
            }
            let scale = oracle.abs().max(1e-300);
            prop_assert!((got - oracle).abs() <= 1e-10 * scale + 1e-14, "got {got} oracle {oracle}");
        }
    }
}
