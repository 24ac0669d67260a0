//! Adaptive Gauss–Kronrod quadrature, used by the validation suites.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

fn adapt(f: &impl Fn(f64) -> f64, a: f64, b: f64, whole: (f64, f64), tol: f64, depth: u32) -> f64 {
    if depth == 0 || whole.1 <= tol.max(50.0 * f64::EPSILON * whole.0.abs()) {
        return whole.0;
    }
    let mid = 0.5 * (a + b);
    if mid <= a || mid >= b {
        return whole.0;
    }
    let left = gk15(f, a, mid);
    let right = gk15(f, mid, b);
    adapt(f, a, mid, left, 0.5 * tol, depth - 1) + adapt(f, mid, b, right, 0.5 * tol, depth - 1)
}

/// `∫_a^b f` for finite `a <= b`, to roughly `tol` relative accuracy. The
/// integrand is never evaluated at the endpoints.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let whole = gk15(&f, a, b);
    let abs_tol = tol * whole.0.abs().max(1e-300);
    adapt(&f, a, b, whole, abs_tol, 50)
}

/// `∫_a^∞ f`, through the substitution `x = a + s / (1 - s)`.
pub fn integrate_to_infinity(f: impl Fn(f64) -> f64, a: f64, tol: f64) -> f64 {
    integrate(
        |s| {
            let one_minus = 1.0 - s;
            f(a + s / one_minus) / (one_minus * one_minus)
        },
        0.0,
        1.0,
        tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_exponential() {
        assert!((integrate(|x| x * x, 0.0, 3.0, 1e-14) - 9.0).abs() < 1e-12);
        assert!((integrate_to_infinity(|x| (-x).exp(), 0.0, 1e-12) - 1.0).abs() < 1e-11);
    }

    #[test]
    fn log_singularity() {
        // ∫_0^1 -ln x dx = 1
        assert!((integrate(|x| -x.ln(), 0.0, 1.0, 1e-12) - 1.0).abs() < 1e-10);
    }
}
