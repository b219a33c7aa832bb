//! Adaptive Gauss-Kronrod (7, 15) quadrature.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_3,
    0.949_107_912_342_758_524_526_189_684_047_9,
    0.864_864_423_359_769_072_789_712_788_640_9,
    0.741_531_185_599_394_439_863_864_773_280_8,
    0.586_087_235_467_691_130_294_144_845_693_0,
    0.405_845_151_377_397_166_906_606_412_076_96,
    0.207_784_955_007_898_467_600_689_403_773_24,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_97,
    0.063_092_092_629_978_553_290_700_663_189_20,
    0.104_790_010_322_250_183_839_876_322_541_5,
    0.140_653_259_715_525_918_745_189_590_510_2,
    0.169_004_726_639_267_902_826_583_426_598_6,
    0.190_350_578_064_785_409_913_256_402_421_0,
    0.204_432_940_075_298_892_414_161_999_234_6,
    0.209_482_141_084_727_828_012_999_174_891_7,
];

// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7).
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_1,
    0.279_705_391_489_276_667_901_467_771_423_8,
    0.381_830_050_505_118_944_950_369_775_489_0,
    0.417_959_183_673_469_387_755_102_040_816_3,
];

/// One G7-K15 panel on `[a, b]`; returns the Kronrod value and |K15 - G7|.
pub fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = h * x;
        let pair = f(c - dx) + f(c + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

#[derive(Debug, Clone)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    /// Panel endpoints produced by the subdivision, ascending.
    pub breakpoints: Vec<f64>,
}

/// Integrates `f` over `[a, b]` by recursive bisection until every panel
/// meets `max(abs_tol, rel_tol * |panel value|)` scaled by its share of the
/// interval.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> Integral {
    if a == b {
        return Integral { value: 0.0, error: 0.0, breakpoints: vec![a, b] };
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let whole = gk15(&f, lo, hi).0.abs();
    let mut value = 0.0;
    let mut error = 0.0;
    let mut breakpoints = vec![lo];
    let mut stack = vec![(lo, hi, 0u32)];
    let width = hi - lo;
    // Panels are popped left to right so breakpoints come out sorted.
    while let Some((x0, x1, depth)) = stack.pop() {
        let (v, e) = gk15(&f, x0, x1);
        let share = (x1 - x0) / width;
        let tol = (rel_tol * whole.max(v.abs())).max(abs_tol) * share;
        if e <= tol || depth >= 48 {
            value += v;
            error += e;
            breakpoints.push(x1);
        } else {
            let m = 0.5 * (x0 + x1);
            stack.push((m, x1, depth + 1));
            stack.push((x0, m, depth + 1));
        }
    }
    Integral { value: sign * value, error, breakpoints }
}

/// Integral of `f` over `[a, b]` to the given tolerances.
pub fn quad<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> f64 {
    integrate(f, a, b, rel_tol, abs_tol).value
}

/// Golden-section minimisation of a unimodal function on `[a, b]`.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}
