//! Dormand-Prince 5(4) with step-size control and 4th-order dense output.
//!
//! The integrator runs in either direction: `x_end < x0` integrates backward
//! with negative steps.

// Butcher tableau (Hairer & Wanner, DOPRI5).
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Upper bound on |h|.
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for OdeSettings {
    fn default() -> Self {
        OdeSettings { rel_tol: 1e-10, abs_tol: 1e-12, max_step: f64::INFINITY, max_steps: 2_000_000 }
    }
}

/// One accepted step with its continuous extension.
#[derive(Debug, Clone)]
pub struct DenseStep<const N: usize> {
    pub x0: f64,
    pub h: f64,
    rcont: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    pub fn x1(&self) -> f64 {
        self.x0 + self.h
    }

    pub fn start(&self) -> [f64; N] {
        self.rcont[0]
    }

    pub fn end(&self) -> [f64; N] {
        std::array::from_fn(|i| self.rcont[0][i] + self.rcont[1][i])
    }

    /// Dense-output value at `x` inside the step.
    pub fn eval(&self, x: f64) -> [f64; N] {
        let t = (x - self.x0) / self.h;
        let t1 = 1.0 - t;
        let r = &self.rcont;
        std::array::from_fn(|i| r[0][i] + t * (r[1][i] + t1 * (r[2][i] + t * (r[3][i] + t1 * r[4][i]))))
    }
}

/// Accepted steps of one integration, ordered along the direction of travel.
#[derive(Debug, Clone, Default)]
pub struct Trajectory<const N: usize> {
    pub steps: Vec<DenseStep<N>>,
}

impl<const N: usize> Trajectory<N> {
    /// Dense-output value at any `x` covered by the trajectory.
    pub fn eval(&self, x: f64) -> Option<[f64; N]> {
        let first = self.steps.first()?;
        let forward = first.h > 0.0;
        let idx = self.steps.partition_point(|s| if forward { s.x1() < x } else { s.x1() > x });
        let s = self.steps.get(idx).or(self.steps.last())?;
        let (lo, hi) = if forward { (s.x0, s.x1()) } else { (s.x1(), s.x0) };
        let tol = 1e-12 * x.abs().max(1.0);
        if x < lo - tol || x > hi + tol {
            return None;
        }
        Some(s.eval(x))
    }

    /// Samples every step at `per_step` interior points plus the endpoints.
    pub fn samples(&self, per_step: usize) -> Vec<(f64, [f64; N])> {
        let mut out = Vec::with_capacity(self.steps.len() * (per_step + 1) + 1);
        for s in &self.steps {
            for j in 0..=per_step {
                let x = s.x0 + s.h * j as f64 / (per_step + 1) as f64;
                out.push((x, s.eval(x)));
            }
        }
        if let Some(s) = self.steps.last() {
            out.push((s.x1(), s.end()));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Failure<const N: usize> {
    pub reason: String,
    pub x: f64,
    pub y: [f64; N],
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + h * terms.iter().map(|(c, k)| c * k[i]).sum::<f64>())
}

fn norm<const N: usize>(v: &[f64; N], y0: &[f64; N], y1: &[f64; N], s: &OdeSettings) -> f64 {
    let sum: f64 = (0..N)
        .map(|i| {
            let sk = s.abs_tol + s.rel_tol * y0[i].abs().max(y1[i].abs());
            (v[i] / sk).powi(2)
        })
        .sum();
    (sum / N as f64).sqrt()
}

fn initial_step<const N: usize, F: FnMut(f64, &[f64; N]) -> [f64; N]>(
    f: &mut F,
    x0: f64,
    y0: &[f64; N],
    f0: &[f64; N],
    dir: f64,
    s: &OdeSettings,
) -> f64 {
    let sk = |y: &[f64; N], i: usize| s.abs_tol + s.rel_tol * y[i].abs();
    let d0 = (0..N).map(|i| (y0[i] / sk(y0, i)).powi(2)).sum::<f64>().sqrt() / (N as f64).sqrt();
    let d1 = (0..N).map(|i| (f0[i] / sk(y0, i)).powi(2)).sum::<f64>().sqrt() / (N as f64).sqrt();
    let mut h = if d0 <= 1e-10 || d1 <= 1e-10 { 1e-6 } else { 0.01 * d0 / d1 };
    h = h.min(s.max_step);
    let y1 = axpy(y0, dir * h, &[(1.0, f0)]);
    let f1 = f(x0 + dir * h, &y1);
    let d2 = (0..N).map(|i| ((f1[i] - f0[i]) / sk(y0, i)).powi(2)).sum::<f64>().sqrt() / (N as f64).sqrt() / h;
    let der = d1.max(d2);
    let h1 = if der <= 1e-15 { (h * 1e-3).max(1e-6) } else { (0.01 / der).powf(0.2) };
    (100.0 * h).min(h1).min(s.max_step)
}

/// Integrates `y' = f(x, y)` from `x0` to `x_end`. When `record` is set the
/// accepted steps are returned for dense evaluation.
pub fn integrate<const N: usize, F>(
    mut f: F,
    x0: f64,
    y0: [f64; N],
    x_end: f64,
    settings: &OdeSettings,
    record: bool,
) -> Result<([f64; N], Trajectory<N>), Failure<N>>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
{
    let mut traj = Trajectory { steps: Vec::new() };
    if x_end == x0 {
        return Ok((y0, traj));
    }
    let dir = if x_end > x0 { 1.0 } else { -1.0 };
    let span = (x_end - x0).abs();
    let mut x = x0;
    let mut y = y0;
    let mut k1 = f(x, &y);
    let mut h = initial_step(&mut f, x, &y, &k1, dir, settings).min(span);
    let mut facold: f64 = 1e-4;
    let mut last_rejected = false;
    let (beta, safe) = (0.04, 0.9);
    let expo1 = 0.2 - beta * 0.75;
    for _ in 0..settings.max_steps {
        let remaining = (x_end - x) * dir;
        if remaining <= 0.0 {
            return Ok((y, traj));
        }
        let mut last = false;
        if h >= remaining || 1.01 * h >= remaining {
            h = remaining;
            last = true;
        }
        if h < 1e-14 * x.abs().max(1.0) {
            return Err(Failure { reason: format!("step size underflow (h = {h:e})"), x, y });
        }
        let hs = dir * h;
        let k2 = f(x + C2 * hs, &axpy(&y, hs, &[(A21, &k1)]));
        let k3 = f(x + C3 * hs, &axpy(&y, hs, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(x + C4 * hs, &axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(x + C5 * hs, &axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let y6 = axpy(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
        let k6 = f(x + hs, &y6);
        let y_new = axpy(&y, hs, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f(x + hs, &y_new);
        let err_vec: [f64; N] =
            std::array::from_fn(|i| hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]));
        let err = norm(&err_vec, &y, &y_new, settings);
        if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            h *= 0.1;
            last_rejected = true;
            continue;
        }
        let fac11 = err.powf(expo1);
        if err <= 1.0 {
            let mut fac = fac11 / facold.powf(beta);
            fac = (fac / safe).clamp(0.2, 10.0);
            let mut h_new = h / fac;
            facold = err.max(1e-4);
            if record {
                let ydiff: [f64; N] = std::array::from_fn(|i| y_new[i] - y[i]);
                let bspl: [f64; N] = std::array::from_fn(|i| hs * k1[i] - ydiff[i]);
                let r4: [f64; N] = std::array::from_fn(|i| ydiff[i] - hs * k7[i] - bspl[i]);
                let r5: [f64; N] =
                    std::array::from_fn(|i| hs * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]));
                traj.steps.push(DenseStep { x0: x, h: hs, rcont: [y, ydiff, bspl, r4, r5] });
            }
            x = if last { x_end } else { x + hs };
            y = y_new;
            k1 = k7;
            if last {
                return Ok((y, traj));
            }
            h_new = h_new.min(settings.max_step);
            if last_rejected {
                h_new = h_new.min(h);
            }
            last_rejected = false;
            h = h_new;
        } else {
            h /= (fac11 / safe).min(10.0);
            last_rejected = true;
        }
    }
    Err(Failure { reason: format!("step limit {} reached", settings.max_steps), x, y })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let (y, _) = integrate(|_, y: &[f64; 1]| [y[0]], 0.0, [1.0], 2.0, &OdeSettings::default(), false).unwrap();
        assert!((y[0] - 2f64.exp()).abs() < 1e-9 * 2f64.exp());
    }

    #[test]
    fn backward_harmonic_oscillator_with_dense_output() {
        let f = |_x: f64, y: &[f64; 2]| [y[1], -y[0]];
        let (y, traj) = integrate(f, 3.0, [3f64.sin(), 3f64.cos()], 0.0, &OdeSettings::default(), true).unwrap();
        assert!(y[0].abs() < 1e-9 && (y[1] - 1.0).abs() < 1e-9);
        assert!(traj.steps.iter().all(|s| s.h < 0.0));
        for x in [0.05, 0.7, 1.9, 2.95] {
            let v = traj.eval(x).unwrap();
            assert!((v[0] - x.sin()).abs() < 1e-7, "{x}: {}", v[0] - x.sin());
        }
        assert!(traj.eval(3.5).is_none());
    }

    #[test]
    fn respects_max_step() {
        let s = OdeSettings { max_step: 0.1, ..Default::default() };
        let (_, traj) = integrate(|_, _y: &[f64; 1]| [0.0], 0.0, [1.0], 1.0, &s, true).unwrap();
        assert!(traj.steps.iter().all(|st| st.h <= 0.1 + 1e-15));
        assert!(traj.steps.len() >= 10);
    }

    #[test]
    fn reports_failure_with_last_state() {
        let s = OdeSettings { max_steps: 5, ..Default::default() };
        let err = integrate(|_, y: &[f64; 1]| [y[0].cos()], 0.0, [0.0], 1e6, &s, false).unwrap_err();
        assert!(err.x > 0.0 && err.x < 1e6);
        assert!(err.reason.contains("step limit"));
    }
}
