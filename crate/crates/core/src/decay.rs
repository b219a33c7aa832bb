//! The decaying tail solution.
//!
//! For a parameter point below the cutoff, γ_A is eventually negative and
//! the equation has a decaying solution, unique up to scale. We pick a
//! matching depth ȳ past the last sign change of γ_A, a tail start Y beyond
//! it, seed the Prüfer angle at Y from the frozen-coefficient exponential
//! `u = e^{−κy}`, and integrate backward to ȳ. Backward integration
//! contracts any seeding error at rate `2κ`, and a re-solve from a doubled
//! tail window confirms the result.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::medium::Medium;
use crate::prufer::{self, IntegratorSettings, PhaseState};
use crate::profile::ParamPoint;
use crate::quad;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TailOptions {
    /// Y must satisfy `|β(Y)| ≤ tail_rel_tol·|γ_∞|` ...
    pub tail_rel_tol: f64,
    /// ... and, when set, an estimated `∫_Y^∞ |β| ≤ tail_residual_tol`.
    pub tail_residual_tol: Option<f64>,
    /// Alternatively Y is far enough once `2∫_ȳ^Y κ ≥ contraction`.
    pub contraction: f64,
    /// Distance kept past the last sign change of γ_A.
    pub margin: f64,
    /// ȳ used when γ_A is negative everywhere.
    pub default_y_bar: f64,
    /// Relative guard band below the cutoff Ω̄.
    pub threshold_guard: f64,
    /// Allowed change of φ⁺(ȳ) when the tail window is doubled.
    pub robustness_tol: f64,
    pub max_retries: usize,
    /// Multiplier applied to the selected tail window `Y − ȳ`.
    pub window_scale: f64,
    pub max_depth: f64,
}

impl Default for TailOptions {
    fn default() -> Self {
        TailOptions {
            tail_rel_tol: 1e-8,
            tail_residual_tol: None,
            contraction: 40.0,
            margin: 0.5,
            default_y_bar: 1.0,
            threshold_guard: 1e-9,
            robustness_tol: 1e-8,
            max_retries: 6,
            window_scale: 1.0,
            max_depth: 1e14,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchingConfig {
    pub y_bar: f64,
    pub y_tail: f64,
    pub tail_rel_tol: f64,
    pub tail_residual_tol: Option<f64>,
}

/// Rejects parameter points on or above the guarded cutoff.
pub fn check_below_cutoff<M: Medium + ?Sized>(medium: &M, a: ParamPoint, opts: &TailOptions) -> Result<()> {
    let cutoff = medium.cutoff(a.k);
    if medium.gamma_inf(a) >= 0.0 || a.omega > cutoff * (1.0 - opts.threshold_guard) {
        return Err(Error::Precondition(format!(
            "Omega = {} is not below the guarded cutoff {} (K = {})",
            a.omega,
            cutoff * (1.0 - opts.threshold_guard),
            a.k
        )));
    }
    Ok(())
}

/// Scan depths: uniform over the structured part, then geometric.
struct TailScan<'m, M: Medium + ?Sized> {
    medium: &'m M,
    a: ParamPoint,
    gamma_inf: f64,
    core: f64,
    n_core: usize,
    i: usize,
    y: f64,
    calm: usize,
    max_depth: f64,
}

impl<M: Medium + ?Sized> Iterator for TailScan<'_, M> {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        if self.i < self.n_core {
            let y = self.core * self.i as f64 / (self.n_core - 1) as f64;
            self.i += 1;
            self.y = y;
            return Some(y);
        }
        if let Some(t) = self.medium.exact_tail_from() {
            if self.y >= t {
                return None;
            }
        }
        if self.calm >= 3 || self.y > self.max_depth {
            return None;
        }
        self.y *= 1.02;
        if self.medium.beta(self.a, self.y).abs() <= 0.5 * self.gamma_inf.abs() {
            self.calm += 1;
        } else {
            self.calm = 0;
        }
        Some(self.y)
    }
}

fn tail_scan<'m, M: Medium + ?Sized>(medium: &'m M, a: ParamPoint, opts: &TailOptions) -> TailScan<'m, M> {
    let core = medium.data_extent().max(medium.exact_tail_from().unwrap_or(0.0)).max(1.0);
    TailScan { medium, a, gamma_inf: medium.gamma_inf(a), core, n_core: 2048, i: 0, y: 0.0, calm: 0, max_depth: opts.max_depth }
}

fn bisect_sign_change<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    // f(lo) ≥ 0 > f(hi)
    while hi - lo > 1e-13 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if f(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Matching depth ȳ: the last sign change of γ_A plus `margin`, or
/// `default_y_bar` when γ_A < 0 everywhere. Negativity is re-verified on a
/// fine grid past ȳ.
pub fn select_matching_point<M: Medium + ?Sized>(medium: &M, a: ParamPoint, opts: &TailOptions) -> Result<f64> {
    check_below_cutoff(medium, a, opts)?;
    let g = |y: f64| medium.gamma(a, y);
    let mut prev: Option<(f64, f64)> = None;
    let mut crossing: Option<f64> = None;
    let mut last_y = 0.0;
    for y in tail_scan(medium, a, opts) {
        let gy = g(y);
        if let Some((py, pg)) = prev {
            if pg >= 0.0 && gy < 0.0 {
                crossing = Some(bisect_sign_change(g, py, y));
            }
        }
        prev = Some((y, gy));
        last_y = y;
    }
    if let Some((py, pg)) = prev {
        if pg >= 0.0 {
            return Err(Error::NoNegativeTail { k: a.k, omega: a.omega, scanned_to: py });
        }
    }
    let mut y_bar = match crossing {
        Some(c) => c + opts.margin,
        None => opts.default_y_bar,
    };
    // verification pass; moves ȳ past any sign change missed between scan points
    let spacing = (opts.margin / 10.0).min(0.01);
    for _ in 0..16 {
        let end = (y_bar + 50.0 * opts.margin).min(last_y.max(y_bar));
        let n = ((end - y_bar) / spacing).ceil() as usize;
        let bad = (0..=n).map(|j| y_bar + j as f64 * spacing).rfind(|&y| g(y) >= 0.0);
        match bad {
            None => return Ok(y_bar),
            Some(y) => y_bar = y + opts.margin,
        }
    }
    Err(Error::NoNegativeTail { k: a.k, omega: a.omega, scanned_to: y_bar })
}

/// Tail start Y ≥ ȳ.
pub fn select_tail_start<M: Medium + ?Sized>(medium: &M, a: ParamPoint, y_bar: f64, opts: &TailOptions) -> Result<f64> {
    check_below_cutoff(medium, a, opts)?;
    if let Some(t) = medium.exact_tail_from() {
        return Ok(t.max(y_bar));
    }
    let gamma_inf = medium.gamma_inf(a);
    let beta_ok = |y: f64| medium.beta(a, y).abs() <= opts.tail_rel_tol * gamma_inf.abs();
    let residual_ok = |y: f64| match opts.tail_residual_tol {
        None => true,
        Some(tol) => tail_residual(medium, a, y) <= tol,
    };
    let kappa = |y: f64| (-medium.gamma(a, y) / medium.stiffness(y)).max(0.0).sqrt();

    let mut prev = y_bar;
    if beta_ok(y_bar) && residual_ok(y_bar) {
        return Ok(y_bar);
    }
    let mut contraction = 0.0;
    let step0 = 0.25 * opts.margin.max(0.1);
    let mut y = y_bar;
    while y < opts.max_depth {
        y = (y + step0).max(y * 1.05);
        let piece = 2.0 * quad::quad(kappa, prev, y, 1e-6, 1e-12);
        if contraction + piece >= opts.contraction {
            // interpolate within the panel; contraction is monotone in Y
            let need = opts.contraction - contraction;
            let mut lo = prev;
            let mut hi = y;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if 2.0 * quad::quad(kappa, prev, mid, 1e-6, 1e-12) >= need {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let y_c = hi;
            let y_b = if beta_ok(y) { refine_beta(&beta_ok, prev, y) } else { f64::INFINITY };
            return Ok(y_c.min(y_b));
        }
        contraction += piece;
        if beta_ok(y) && residual_ok(y) {
            let y_b = refine_beta(&beta_ok, prev, y);
            return Ok(if residual_ok(y_b) { y_b } else { y });
        }
        prev = y;
    }
    Err(Error::TailNotFound { scanned_to: y })
}

fn refine_beta<B: Fn(f64) -> bool>(ok: &B, mut lo: f64, mut hi: f64) -> f64 {
    // ok(hi) holds; shrink toward the first depth where it holds
    if ok(lo) {
        return lo;
    }
    while hi - lo > 1e-12 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Estimate of `∫_Y^∞ |β|` from doubling windows.
pub fn tail_residual<M: Medium + ?Sized>(medium: &M, a: ParamPoint, y: f64) -> f64 {
    let mut total = 0.0;
    let mut lo = y.max(1e-3);
    let mut history = Vec::new();
    for _ in 0..60 {
        let w = quad::quad(|s| medium.beta(a, s).abs(), lo, 2.0 * lo, 1e-8, 1e-300);
        total += w;
        history.push(w);
        if w <= 1e-16 * total.max(1e-300) {
            return total;
        }
        let n = history.len();
        if n >= 4 && history[n - 1] * 2.0 > history[n - 4] {
            return f64::INFINITY;
        }
        lo *= 2.0;
    }
    total
}

/// Frozen-coefficient decaying angle at Y: `u = e^{−κy}`, `κ = sqrt(−γ/μ)`,
/// so `w/u = −sqrt(−γμ)` and `φ⁺ = π/2 + arctan(sqrt(−γμ)) ∈ (π/2, π)`.
pub fn decaying_phase_at_tail<M: Medium + ?Sized>(medium: &M, a: ParamPoint, y_tail: f64) -> Result<f64> {
    let g = medium.gamma(a, y_tail);
    if !(g < 0.0) {
        return Err(Error::Precondition(format!("gamma_A({y_tail}) = {g} is not negative")));
    }
    Ok(decaying_angle(g, medium.stiffness(y_tail)))
}

/// `π/2 + arctan(sqrt(−γμ))` for `γ < 0`.
pub fn decaying_angle(gamma: f64, mu: f64) -> f64 {
    FRAC_PI_2 + (-gamma * mu).sqrt().atan()
}

/// Builds a matching configuration for `a`.
pub fn matching_config<M: Medium + ?Sized>(medium: &M, a: ParamPoint, opts: &TailOptions) -> Result<MatchingConfig> {
    let y_bar = select_matching_point(medium, a, opts)?;
    matching_config_at(medium, a, y_bar, opts)
}

/// Matching configuration with a prescribed ȳ.
pub fn matching_config_at<M: Medium + ?Sized>(medium: &M, a: ParamPoint, y_bar: f64, opts: &TailOptions) -> Result<MatchingConfig> {
    let y_sel = select_tail_start(medium, a, y_bar, opts)?;
    let y_tail = y_bar + opts.window_scale * (y_sel - y_bar);
    Ok(MatchingConfig { y_bar, y_tail, tail_rel_tol: opts.tail_rel_tol, tail_residual_tol: opts.tail_residual_tol })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayOutcome {
    /// Decaying solution at ȳ (φ⁺ in `(π/2, π)`, `ln r` relative to Y).
    pub state: PhaseState,
    /// Tail start actually used after robustness retries.
    pub y_tail: f64,
    /// |Δφ⁺(ȳ)| between the last two tail windows.
    pub robustness_delta: f64,
}

fn backward_sweep<M: Medium + ?Sized>(
    medium: &M,
    a: ParamPoint,
    y_bar: f64,
    y_tail: f64,
    settings: &IntegratorSettings,
) -> Result<PhaseState> {
    let phi0 = decaying_phase_at_tail(medium, a, y_tail)?;
    let start = PhaseState { y: y_tail, phi: phi0, log_r: 0.0 };
    if y_tail <= y_bar {
        return Ok(PhaseState { y: y_bar, ..start });
    }
    let (end, traj) = prufer::integrate_state(|y| medium.gamma(a, y), |y| medium.stiffness(y), start, y_bar, settings, true)?;
    for step in &traj.steps {
        let phi = step.end()[0];
        if !(phi > FRAC_PI_2 && phi < PI) {
            return Err(Error::TailInvariant { y: step.x1(), phi_mod: phi.rem_euclid(PI) });
        }
    }
    Ok(end)
}

/// φ⁺(ȳ) by backward integration from Y, re-solved from `ȳ + 2(Y − ȳ)`
/// until two consecutive windows agree within `robustness_tol`.
pub fn decaying_phase<M: Medium + ?Sized>(
    medium: &M,
    a: ParamPoint,
    cfg: &MatchingConfig,
    settings: &IntegratorSettings,
    opts: &TailOptions,
) -> Result<DecayOutcome> {
    check_below_cutoff(medium, a, opts)?;
    let mut y_tail = cfg.y_tail;
    let mut state = backward_sweep(medium, a, cfg.y_bar, y_tail, settings)?;
    let exact = medium.exact_tail_from().is_some_and(|t| y_tail >= t);
    if exact || y_tail <= cfg.y_bar {
        return Ok(DecayOutcome { state, y_tail, robustness_delta: 0.0 });
    }
    let mut delta = f64::INFINITY;
    for _ in 0..=opts.max_retries {
        let wider = cfg.y_bar + 2.0 * (y_tail - cfg.y_bar);
        let next = backward_sweep(medium, a, cfg.y_bar, wider, settings)?;
        delta = (next.phi - state.phi).abs();
        state = next;
        y_tail = wider;
        if delta <= opts.robustness_tol {
            return Ok(DecayOutcome { state, y_tail, robustness_delta: delta });
        }
    }
    Err(Error::TailConvergence { delta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::MaterialProfile;
    use std::f64::consts::FRAC_PI_4;

    fn p(k: f64, w: f64) -> ParamPoint {
        ParamPoint::new(k, w).unwrap()
    }

    #[test]
    fn matching_point_examples() {
        let opts = TailOptions::default();
        let c = MaterialProfile::constant(1.0, 1.0).unwrap();
        assert_eq!(select_matching_point(&c, p(4.0, 1.0), &opts).unwrap(), 1.0);

        let e = MaterialProfile::exp_density(1.0, 5.0, 1.0).unwrap();
        let y_bar = select_matching_point(&e, p(1.0, 0.5), &opts).unwrap();
        assert!((y_bar - (5f64.ln() + 0.5)).abs() < 1e-10, "{y_bar}");

        assert!(matches!(select_matching_point(&c, p(1.0, 1.0), &opts), Err(Error::Precondition(_))));
        assert!(select_matching_point(&c, p(1.0, 1.0 - 1e-12), &opts).is_err());
    }

    #[test]
    fn tail_start_examples() {
        let opts = TailOptions::default();
        let t = MaterialProfile::table(&[[0.0, 2.0, 1.0], [1.0, 1.5, 1.0], [3.0, 1.0, 1.0]]).unwrap();
        assert_eq!(select_tail_start(&t, p(4.0, 1.0), 1.0, &opts).unwrap(), 3.0);

        let e = MaterialProfile::exp_density(1.0, 5.0, 1.0).unwrap();
        let a = p(1.0, 0.5);
        let y_bar = select_matching_point(&e, a, &opts).unwrap();
        let y = select_tail_start(&e, a, y_bar, &opts).unwrap();
        // |β(Y)| = 2.5e^{−Y} ≤ 1e−8·0.5
        assert!((y - (5e8f64).ln()).abs() < 1e-9, "{y}");

        let c = MaterialProfile::constant(1.0, 1.0).unwrap();
        assert_eq!(select_tail_start(&c, p(4.0, 1.0), 1.0, &opts).unwrap(), 1.0);
    }

    #[test]
    fn contraction_bound_caps_slow_tails() {
        let opts = TailOptions::default();
        let pw = MaterialProfile::power_density(1.0, 3.0, 1.5).unwrap();
        let a = p(4.0, 3.9);
        let y_bar = select_matching_point(&pw, a, &opts).unwrap();
        let y = select_tail_start(&pw, a, y_bar, &opts).unwrap();
        let kappa = |s: f64| (-pw.gamma(a, s).unwrap()).max(0.0).sqrt();
        let c = 2.0 * quad::quad(kappa, y_bar, y, 1e-10, 1e-14);
        assert!((c - opts.contraction).abs() < 1e-3, "{c}");
    }

    #[test]
    fn tail_angle_examples() {
        let c = MaterialProfile::constant(1.0, 1.0).unwrap();
        let phi = decaying_phase_at_tail(&c, p(2.0, 1.0), 5.0).unwrap();
        assert!((phi - 3.0 * FRAC_PI_4).abs() < 1e-15);
        let phi = decaying_phase_at_tail(&c, p(4.0, 1.0), 5.0).unwrap();
        assert!((phi - 5.0 * PI / 6.0).abs() < 1e-15);
        assert!((decaying_angle(-1e-14, 1.0) - FRAC_PI_2) < 1e-6);
        assert!(decaying_angle(-1e-14, 1.0) > FRAC_PI_2);
        assert!(decaying_phase_at_tail(&c, p(1.0, 1.0), 5.0).is_err());
    }

    #[test]
    fn stationary_decay_in_constant_medium() {
        let c = MaterialProfile::constant(1.0, 1.0).unwrap();
        let a = p(2.0, 1.0);
        let opts = TailOptions::default();
        let cfg = MatchingConfig { y_bar: 1.0, y_tail: 6.0, tail_rel_tol: 1e-8, tail_residual_tol: None };
        let out = decaying_phase(&c, a, &cfg, &IntegratorSettings::default(), &opts).unwrap();
        assert!((out.state.phi - 3.0 * FRAC_PI_4).abs() < 1e-13, "{}", out.state.phi - 3.0 * FRAC_PI_4);
    }

    // Raw (u, w) system integrated backward with classical RK4, independent
    // of the Prüfer form and of the adaptive integrator.
    fn uw_backward(e: &MaterialProfile, a: ParamPoint, y_from: f64, y_to: f64, u0: f64, w0: f64) -> (f64, f64) {
        let n = 200_000;
        let h = (y_to - y_from) / n as f64;
        let f = |y: f64, u: f64, w: f64| {
            let (_, mu) = e.eval(y).unwrap();
            (w / mu, -e.gamma(a, y).unwrap() * u)
        };
        let (mut u, mut w) = (u0, w0);
        for i in 0..n {
            let y = y_from + i as f64 * h;
            let (k1u, k1w) = f(y, u, w);
            let (k2u, k2w) = f(y + 0.5 * h, u + 0.5 * h * k1u, w + 0.5 * h * k1w);
            let (k3u, k3w) = f(y + 0.5 * h, u + 0.5 * h * k2u, w + 0.5 * h * k2w);
            let (k4u, k4w) = f(y + h, u + h * k3u, w + h * k3w);
            u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
            w += h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
        }
        (u, w)
    }

    #[test]
    fn decaying_phase_matches_uw_system() {
        let e = MaterialProfile::exp_density(1.0, 5.0, 1.0).unwrap();
        let a = p(1.0, 0.5);
        let opts = TailOptions::default();
        let cfg = matching_config(&e, a, &opts).unwrap();
        let out = decaying_phase(&e, a, &cfg, &IntegratorSettings::default(), &opts).unwrap();
        let g = e.gamma(a, out.y_tail).unwrap();
        let (u, w) = uw_backward(&e, a, out.y_tail, cfg.y_bar, 1.0, -(-g).sqrt());
        // second quadrant: φ = atan2(u, w) with u > 0 > w
        let oracle = u.atan2(w);
        assert!((out.state.phi - oracle).abs() < 1e-9, "{} vs {oracle}", out.state.phi);
    }

    #[test]
    fn tail_window_doubling_is_insensitive() {
        let e = MaterialProfile::exp_density(1.0, 5.0, 1.0).unwrap();
        let a = p(1.0, 0.9);
        let opts = TailOptions::default();
        let s = IntegratorSettings::default();
        let cfg = matching_config(&e, a, &opts).unwrap();
        let base = decaying_phase(&e, a, &cfg, &s, &opts).unwrap();
        let wide = MatchingConfig { y_tail: cfg.y_bar + 2.0 * (cfg.y_tail - cfg.y_bar), ..cfg };
        let other = decaying_phase(&e, a, &wide, &s, &opts).unwrap();
        assert!((base.state.phi - other.state.phi).abs() <= 1e-8);
        assert!(base.robustness_delta <= 1e-8);
    }

    #[test]
    fn decay_angle_decreases_with_omega() {
        let e = MaterialProfile::exp_density(1.0, 5.0, 1.0).unwrap();
        let opts = TailOptions::default();
        let s = IntegratorSettings::default();
        let k = 2.0;
        let omegas = [0.6, 0.9, 1.2, 1.5, 1.8, 1.95];
        let y_bar = select_matching_point(&e, p(k, 1.95), &opts).unwrap();
        let phis: Vec<f64> = omegas
            .iter()
            .map(|&w| {
                let cfg = matching_config_at(&e, p(k, w), y_bar, &opts).unwrap();
                decaying_phase(&e, p(k, w), &cfg, &s, &opts).unwrap().state.phi
            })
            .collect();
        assert!(phis.windows(2).all(|w| w[1] <= w[0]), "{phis:?}");
    }
}
