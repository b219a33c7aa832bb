//! Closed-form dispersion relation for `ρ = 1 + q e^{−y/d}`, `μ ≡ 1`.
//!
//! The decaying solution of `u'' + (Ω(1 + q e^{−y/d}) − K)u = 0` is
//! `u = J_ν(x)` with `ν = 2d√(K−Ω)` and `x = 2d√(Ωq) e^{−y/(2d)}`, so the
//! traction-free condition reads `J'_ν(2d√(Ωq)) = 0`.

use std::f64::consts::PI;

use super::{Discretization, OracleMethod, OracleResult};
use crate::error::{Error, Result};

const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Γ(z) for real z > 0.
fn gamma(z: f64) -> f64 {
    if z < 0.5 {
        return PI / ((PI * z).sin() * gamma(1.0 - z));
    }
    let z = z - 1.0;
    let mut s = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        s += c / (z + i as f64);
    }
    let t = z + 7.5;
    (2.0 * PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * s
}

/// `J_ν`, `J'_ν`, `J''_ν` from the power series, term by term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselSeries {
    pub j: f64,
    pub dj: f64,
    pub d2j: f64,
}

/// Double-double number `hi + lo`, enough to keep the alternating series
/// accurate where its terms are much larger than the sum.
#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

impl Dd {
    fn new(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    fn two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        let bb = s - a;
        Dd { hi: s, lo: (a - (s - bb)) + (b - bb) }
    }

    fn renorm(hi: f64, lo: f64) -> Self {
        let s = hi + lo;
        Dd { hi: s, lo: lo - (s - hi) }
    }

    fn add(self, o: Dd) -> Dd {
        let s = Dd::two_sum(self.hi, o.hi);
        Dd::renorm(s.hi, s.lo + self.lo + o.lo)
    }

    fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        Dd::renorm(p, e + self.hi * o.lo + self.lo * o.hi)
    }

    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.add(o.mul(Dd::new(-q1)));
        let q2 = r.hi / o.hi;
        let r = r.add(o.mul(Dd::new(-q2)));
        let q3 = r.hi / o.hi;
        Dd::renorm(q1, q2).add(Dd::new(q3))
    }

    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    fn value(self) -> f64 {
        self.hi + self.lo
    }
}

pub fn bessel_j_series(nu: f64, x: f64) -> BesselSeries {
    let h = Dd::new(0.5 * x);
    let h2 = h.mul(h).neg();
    let xd = Dd::new(x);
    let x2 = xd.mul(xd);
    let nud = Dd::new(nu);
    let lead = (0.5 * x).powf(nu) / gamma(nu + 1.0);
    let mut t = Dd::new(1.0);
    let (mut j, mut dj, mut d2j) = (Dd::new(0.0), Dd::new(0.0), Dd::new(0.0));
    for k in 0..400 {
        let p = Dd::new(2.0 * k as f64).add(nud);
        j = j.add(t);
        dj = dj.add(p.mul(t).div(xd));
        d2j = d2j.add(p.mul(p.add(Dd::new(-1.0))).mul(t).div(x2));
        let kk = Dd::new((k + 1) as f64);
        t = t.mul(h2).div(kk.mul(kk.add(nud)));
        if t.hi.abs() < 1e-34 * j.hi.abs().max(1e-300) && k > 2 {
            break;
        }
    }
    BesselSeries { j: lead * j.value(), dj: lead * dj.value(), d2j: lead * d2j.value() }
}

/// `(J_ν(x), J_{ν+1}(x))` for `ν ≥ 0`, `x > 0`: power series for small
/// arguments, Miller's backward recurrence otherwise.
pub fn bessel_j(nu: f64, x: f64) -> (f64, f64) {
    if x <= 8.0 {
        return (bessel_j_series(nu, x).j, bessel_j_series(nu + 1.0, x).j);
    }
    let n_order = nu.floor() as usize;
    let nu0 = nu - n_order as f64;
    let start = (x.max(nu) + 40.0 + 10.0 * x.max(nu).sqrt()) as usize + n_order + 2;
    let mut j = vec![0.0; start + 2];
    j[start] = 1e-30;
    for m in (1..=start).rev() {
        j[m - 1] = 2.0 * (nu0 + m as f64) / x * j[m] - j[m + 1];
        if j[m - 1].abs() > 1e250 {
            for v in j.iter_mut().skip(m - 1) {
                *v *= 1e-250;
            }
        }
    }
    // (x/2)^ν0 = Γ(ν0+1) J_ν0 + Σ_{k≥1} (ν0+2k) Γ(ν0+k)/k! J_{ν0+2k}
    let mut sum = gamma(nu0 + 1.0) * j[0];
    let mut g = gamma(nu0 + 1.0);
    let mut k = 1;
    while 2 * k <= start {
        if k > 1 {
            g *= (nu0 + k as f64 - 1.0) / k as f64;
        }
        sum += (nu0 + 2.0 * k as f64) * g * j[2 * k];
        k += 1;
    }
    let scale = (0.5 * x).powf(nu0) / sum;
    (j[n_order] * scale, j[n_order + 1] * scale)
}

/// `J'_ν(x) = (ν/x) J_ν − J_{ν+1}`.
fn bessel_dj(nu: f64, x: f64) -> f64 {
    let (a, b) = bessel_j(nu, x);
    nu / x * a - b
}

/// Accuracy checks against closed forms and tabulated zeros.
pub fn bessel_self_test() -> Result<()> {
    let fail = |what: String| Err(Error::OracleUnavailable(format!("Bessel self-test failed: {what}")));
    for x in [0.3, 2.0, 5.0, 9.5, 15.0, 30.0] {
        let exact = (2.0 / (PI * x)).sqrt() * x.sin();
        let (j, j1) = bessel_j(0.5, x);
        if (j - exact).abs() > 1e-12 {
            return fail(format!("J_1/2({x}) = {j}, expected {exact}"));
        }
        let exact1 = (2.0 / (PI * x)).sqrt() * (x.sin() / x - x.cos());
        if (j1 - exact1).abs() > 1e-12 {
            return fail(format!("J_3/2({x}) = {j1}, expected {exact1}"));
        }
    }
    if bessel_j(0.0, 2.404_825_557_695_773).0.abs() > 1e-14 {
        return fail("first zero of J_0".into());
    }
    if bessel_dj(1.0, 1.841_183_781_340_659).abs() > 1e-13 {
        return fail("first zero of J'_1".into());
    }
    if bessel_j(0.0, 14.930_917_708_487_786).0.abs() > 1e-13 {
        return fail("fifth zero of J_0".into());
    }
    for nu in [0.3, 2.7, 7.1] {
        let s = bessel_j_series(nu, 8.0).j;
        let m = {
            // force the recurrence branch just above the switch-over
            let (a, _) = bessel_j(nu, 8.0 + 1e-12);
            a
        };
        if (s - m).abs() > 1e-11 {
            return fail(format!("series and recurrence disagree at nu = {nu}: {s} vs {m}"));
        }
    }
    Ok(())
}

/// Largest `|u'' + γ_A u| / max|u|` at `ys` for `u = J_ν(x(y))`, with the
/// derivatives taken from the differentiated series.
pub fn exp_profile_residual(q: f64, d: f64, k: f64, omega: f64, ys: &[f64]) -> f64 {
    let nu = 2.0 * d * (k - omega).sqrt();
    let x0 = 2.0 * d * (omega * q).sqrt();
    let mut worst: f64 = 0.0;
    let mut umax: f64 = 0.0;
    for &y in ys {
        let x = x0 * (-y / (2.0 * d)).exp();
        let s = bessel_j_series(nu, x);
        let c = x / (2.0 * d);
        let u = s.j;
        let u2 = c * c * s.d2j + x / (4.0 * d * d) * s.dj;
        let g = omega * (1.0 + q * (-y / d).exp()) - k;
        worst = worst.max((u2 + g * u).abs());
        umax = umax.max(u.abs());
    }
    worst / umax.max(f64::MIN_POSITIVE)
}

/// Roots of `J'_ν(2d√(Ωq)) = 0` in `(K/(1+q), K)`.
pub fn bessel_mode_frequencies(q: f64, d: f64, k: f64) -> Result<OracleResult> {
    if !(q > 0.0 && d > 0.0 && k > 0.0) {
        return Err(Error::Precondition(format!("Bessel oracle needs q, d, K > 0 (q = {q}, d = {d}, K = {k})")));
    }
    bessel_self_test()?;
    let f = |omega: f64| bessel_dj(2.0 * d * (k - omega).max(0.0).sqrt(), 2.0 * d * (omega * q).sqrt());
    let lo = k / (1.0 + q);
    let hi = k;
    let n = 4000;
    let mut grid: Vec<f64> = (1..n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    let mut gap = (hi - lo) / n as f64;
    while gap > 1e-12 * hi {
        gap *= 0.5;
        grid.push(hi - gap);
    }
    grid.sort_by(f64::total_cmp);
    let values: Vec<f64> = grid.iter().map(|&w| f(w)).collect();
    let mut omegas = Vec::new();
    for i in 0..grid.len() - 1 {
        if values[i] == 0.0 {
            omegas.push(grid[i]);
            continue;
        }
        if values[i].signum() != values[i + 1].signum() && values[i + 1] != 0.0 {
            let (mut a, mut b) = (grid[i], grid[i + 1]);
            let fa = values[i];
            while b - a > 4.0 * f64::EPSILON * b {
                let m = 0.5 * (a + b);
                if f(m).signum() == fa.signum() {
                    a = m;
                } else {
                    b = m;
                }
            }
            omegas.push(0.5 * (a + b));
        }
    }
    let ys: Vec<f64> = (0..20).map(|i| 0.37 + 0.61 * i as f64).collect();
    for &w in &omegas {
        let r = exp_profile_residual(q, d, k, w, &ys);
        if r > 1e-9 {
            return Err(Error::OracleUnavailable(format!("Bessel residual {r} at Omega = {w}")));
        }
    }
    Ok(OracleResult {
        omegas,
        method: OracleMethod::Bessel,
        discretization: Discretization::Closed { scan_points: grid.len() },
        usable: true,
        stability: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn gamma_values() {
        assert!((gamma(5.0) - 24.0).abs() < 1e-12);
        assert!((gamma(0.5) - PI.sqrt()).abs() < 1e-14);
        assert!((gamma(1.3) - 0.897_470_696_306_277_2).abs() < 1e-14);
    }

    #[test]
    fn self_test_passes() {
        bessel_self_test().unwrap();
    }

    #[test]
    fn integer_order_reference_values() {
        // tabulated J_0(10), J_1(10), J_5(20)
        let (j0, j1) = bessel_j(0.0, 10.0);
        assert!((j0 - -0.245_935_764_451_348_3).abs() < 1e-14);
        assert!((j1 - 0.043_472_746_168_861_44).abs() < 1e-14);
        assert!((bessel_j(5.0, 20.0).0 - 0.151_169_767_982_394_93).abs() < 1e-13);
    }

    #[test]
    fn degenerate_contrast_has_no_roots() {
        assert!(bessel_mode_frequencies(1e-9, 1.0, 4.0).unwrap().omegas.is_empty());
    }

    #[test]
    fn reference_roots() {
        let r = bessel_mode_frequencies(5.0, 1.0, 1.0).unwrap();
        let want = [0.340_544_592_883_680_55, 0.967_074_858_713_718_7];
        assert_eq!(r.omegas.len(), 2);
        for (g, w) in r.omegas.iter().zip(want) {
            assert!((g - w).abs() < 1e-12, "{g} vs {w}");
        }
        assert_eq!(bessel_mode_frequencies(5.0, 1.0, 4.0).unwrap().omegas.len(), 3);
        assert_eq!(bessel_mode_frequencies(5.0, 1.0, 16.0).unwrap().omegas.len(), 6);
    }

    #[test]
    fn residual_at_random_depths() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for k in [1.0, 4.0, 16.0] {
            for _ in 0..5 {
                let omega = rng.gen_range(k / 6.0..k);
                let ys: Vec<f64> = (0..20).map(|_| rng.gen_range(0.0..12.0)).collect();
                let r = exp_profile_residual(5.0, 1.0, k, omega, &ys);
                assert!(r <= 1e-9, "K = {k}, Omega = {omega}: {r}");
            }
        }
    }
}
