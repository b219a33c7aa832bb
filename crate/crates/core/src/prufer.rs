//! Prüfer-angle integration.
//!
//! With `w = μu'`, `u = r sin φ`, `w = r cos φ`:
//!
//! ```text
//! φ'     = γ sin²φ + μ⁻¹ cos²φ
//! (ln r)' = (μ⁻¹ − γ) sin φ cos φ
//! ```
//!
//! φ is the integrated state, so it is continuous by construction and no
//! angle unwrapping ever happens.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::decay;
use crate::dispersion::Mode;
use crate::error::{Error, Result};
use crate::medium::Medium;
use crate::ode::{self, OdeSettings, Trajectory};
use crate::profile::ParamPoint;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub y: f64,
    pub phi: f64,
    pub log_r: f64,
}

impl PhaseState {
    pub fn u(&self) -> f64 {
        self.log_r.exp() * self.phi.sin()
    }

    pub fn w(&self) -> f64 {
        self.log_r.exp() * self.phi.cos()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        IntegratorSettings { rel_tol: 1e-10, abs_tol: 1e-12, max_step: f64::INFINITY }
    }
}

impl IntegratorSettings {
    pub(crate) fn ode(&self) -> OdeSettings {
        OdeSettings { rel_tol: self.rel_tol, abs_tol: self.abs_tol, max_step: self.max_step, ..OdeSettings::default() }
    }
}

/// Phase trajectory with dense output over `(φ, ln r)`.
pub type PhaseTrajectory = Trajectory<2>;

fn rhs(gamma: f64, inv_mu: f64, phi: f64) -> [f64; 2] {
    let (s, c) = phi.sin_cos();
    [gamma * s * s + inv_mu * c * c, (inv_mu - gamma) * s * c]
}

/// Integrates the Prüfer system from `start` to `y_to` (either direction).
pub fn integrate_state<G, M>(
    gamma: G,
    mu: M,
    start: PhaseState,
    y_to: f64,
    settings: &IntegratorSettings,
    record: bool,
) -> Result<(PhaseState, PhaseTrajectory)>
where
    G: Fn(f64) -> f64,
    M: Fn(f64) -> f64,
{
    let f = |y: f64, s: &[f64; 2]| rhs(gamma(y), 1.0 / mu(y), s[0]);
    match ode::integrate(f, start.y, [start.phi, start.log_r], y_to, &settings.ode(), record) {
        Ok((end, traj)) => Ok((PhaseState { y: y_to, phi: end[0], log_r: end[1] }, traj)),
        Err(fail) => Err(Error::Integration {
            reason: fail.reason,
            last: PhaseState { y: fail.x, phi: fail.y[0], log_r: fail.y[1] },
        }),
    }
}

/// Phase at `y_to` for the solution with angle `phi0` at `y_from`.
pub fn integrate_phase<G, M>(gamma: G, mu: M, phi0: f64, y_from: f64, y_to: f64, settings: &IntegratorSettings) -> Result<PhaseState>
where
    G: Fn(f64) -> f64,
    M: Fn(f64) -> f64,
{
    let start = PhaseState { y: y_from, phi: phi0, log_r: 0.0 };
    integrate_state(gamma, mu, start, y_to, settings, false).map(|(s, _)| s)
}

/// Solution launched from the traction-free surface: `u'(0) = 0`, i.e.
/// `φ(0) = π/2`, `r(0) = 1`.
pub fn surface_phase<M: Medium + ?Sized>(medium: &M, a: ParamPoint, y_end: f64, settings: &IntegratorSettings) -> Result<PhaseState> {
    surface_trajectory(medium, a, y_end, settings, false).map(|(s, _)| s)
}

pub fn surface_trajectory<M: Medium + ?Sized>(
    medium: &M,
    a: ParamPoint,
    y_end: f64,
    settings: &IntegratorSettings,
    record: bool,
) -> Result<(PhaseState, PhaseTrajectory)> {
    if !(y_end > 0.0) {
        return Err(Error::Precondition(format!("surface integration needs y_end > 0, got {y_end}")));
    }
    let start = PhaseState { y: 0.0, phi: FRAC_PI_2, log_r: 0.0 };
    integrate_state(|y| medium.gamma(a, y), |y| medium.stiffness(y), start, y_end, settings, record)
}

/// Samples the matched solution of `mode` on `y_grid` (coordinates of
/// `medium`), normalised to `u(0) = 1`.
///
/// The surface sweep covers `[0, ȳ]`, the decaying sweep `[ȳ, Y]` and the
/// frozen exponential `e^{−κ(y−Y)}` continues past `Y`. The decaying branch
/// is joined with the sign `(−1)^{m−1}`.
pub fn reconstruct_mode_shape<M: Medium + ?Sized>(
    medium: &M,
    mode: &Mode,
    y_grid: &[f64],
    settings: &IntegratorSettings,
) -> Result<Vec<f64>> {
    let a = ParamPoint::new(mode.k, mode.omega)?;
    let y_bar = mode.y_bar;
    let y_tail = mode.y_tail;
    let (surf_end, surf) = surface_trajectory(medium, a, y_bar, settings, true)?;
    let phi_tail = decay::decaying_phase_at_tail(medium, a, y_tail)?;
    let tail_start = PhaseState { y: y_tail, phi: phi_tail, log_r: 0.0 };
    let (dec_end, dec) = if y_tail > y_bar {
        integrate_state(|y| medium.gamma(a, y), |y| medium.stiffness(y), tail_start, y_bar, settings, true)?
    } else {
        (PhaseState { y: y_bar, ..tail_start }, Trajectory::default())
    };

    let n = mode.index as i64 - 1;
    let jump = ((surf_end.phi - dec_end.phi) - n as f64 * std::f64::consts::PI).sin().abs();
    if jump > 1e-6 {
        return Err(Error::ShapeMismatch(jump));
    }
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    // Z = (−1)^n (r⁰/r⁺) Z⁺ at ȳ
    let log_scale = surf_end.log_r - dec_end.log_r;
    let kappa = (-medium.gamma(a, y_tail) / medium.stiffness(y_tail)).max(0.0).sqrt();
    let tail_u = phi_tail.sin();

    y_grid
        .iter()
        .map(|&y| {
            if y < 0.0 {
                return Err(Error::NegativeDepth(y));
            }
            let u = if y <= y_bar {
                let s = surf.eval(y).unwrap_or([surf_end.phi, surf_end.log_r]);
                s[1].exp() * s[0].sin()
            } else if y <= y_tail {
                let s = dec.eval(y).unwrap_or([dec_end.phi, dec_end.log_r]);
                sign * (s[1] + log_scale).exp() * s[0].sin()
            } else {
                sign * log_scale.exp() * tail_u * (-kappa * (y - y_tail)).exp()
            };
            Ok(u)
        })
        .collect()
}

/// Number of zeros of `u` on `(0, y]` for a surface trajectory ending at
/// lifted angle `phi`: the count of multiples of π crossed above `π/2`.
pub fn zeros_below(phi: f64) -> usize {
    if phi <= std::f64::consts::PI {
        0
    } else {
        (phi / std::f64::consts::PI).ceil() as usize - 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::MaterialProfile;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn settings() -> IntegratorSettings {
        IntegratorSettings::default()
    }

    #[test]
    fn linear_phase_for_unit_coefficients() {
        let s = integrate_phase(|_| 1.0, |_| 1.0, FRAC_PI_2, 0.0, 3.0, &settings()).unwrap();
        assert!((s.phi - (FRAC_PI_2 + 3.0)).abs() < 1e-12);
        assert!(s.log_r.abs() < 1e-12);
    }

    #[test]
    fn stationary_phase_backward() {
        let s = integrate_phase(|_| -1.0, |_| 1.0, 3.0 * FRAC_PI_4, 5.0, 0.0, &settings()).unwrap();
        assert!((s.phi - 3.0 * FRAC_PI_4).abs() < 1e-13, "{}", s.phi - 3.0 * FRAC_PI_4);
        assert_eq!(s.y, 0.0);
    }

    #[test]
    fn constant_positive_gamma_matches_cosine_solution() {
        // u'' + 4u = 0, u(0) = 1, u'(0) = 0 → u = cos 2y, w = −2 sin 2y.
        // φ = atan2-lift(u, w) starting at π/2; φ' > 0 always, so the lift is
        // φ(y) = π/2 + (continuous angle swept by (w, u)).
        let y: f64 = 1.0;
        let (u, w) = ((2.0 * y).cos(), -2.0 * (2.0 * y).sin());
        let mut oracle = u.atan2(w);
        while oracle < FRAC_PI_2 {
            oracle += 2.0 * PI;
        }
        // the sweep over [0, 1] is less than one turn
        let s = integrate_phase(|_| 4.0, |_| 1.0, FRAC_PI_2, 0.0, y, &settings()).unwrap();
        assert!((s.phi - oracle).abs() < 1e-10, "{} vs {oracle}", s.phi);
        let r_oracle = (u * u + w * w).sqrt();
        assert!((s.log_r - r_oracle.ln()).abs() < 1e-10);
    }

    #[test]
    fn surface_phase_examples() {
        let c = MaterialProfile::constant(1.0, 1.0).unwrap();
        let a = ParamPoint::new(4.0, 1.0).unwrap();
        let s = surface_phase(&c, a, 6.0, &settings()).unwrap();
        assert!(s.phi > 0.0 && s.phi < FRAC_PI_2, "{}", s.phi);

        let a = ParamPoint::new(1.0, 2.0).unwrap();
        let s = surface_phase(&c, a, PI, &settings()).unwrap();
        assert!((s.phi - 1.5 * PI).abs() < 1e-12);

        assert!(surface_phase(&c, a, 0.0, &settings()).is_err());
    }

    #[test]
    fn zero_counting() {
        assert_eq!(zeros_below(FRAC_PI_2), 0);
        assert_eq!(zeros_below(0.9 * PI), 0);
        assert_eq!(zeros_below(1.2 * PI), 1);
        assert_eq!(zeros_below(2.7 * PI), 2);
    }

    #[test]
    fn integration_failure_carries_last_state() {
        let tight = IntegratorSettings { rel_tol: 1e-10, abs_tol: 1e-12, max_step: 1e-3 };
        let start = PhaseState { y: 0.0, phi: 0.0, log_r: 0.0 };
        let f = |_: f64| 1.0;
        let s = crate::ode::OdeSettings { max_steps: 10, ..tight.ode() };
        let err = crate::ode::integrate(|_, st: &[f64; 2]| rhs(f(0.0), 1.0, st[0]), 0.0, [start.phi, 0.0], 1.0, &s, false);
        assert!(err.is_err());
        let e = integrate_state(|_| 1e308, |_| 1e-308, start, 1.0, &tight, false).unwrap_err();
        assert!(matches!(e, Error::Integration { .. }));
    }
}
