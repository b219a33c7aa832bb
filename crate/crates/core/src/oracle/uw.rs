//! Fixed-step classical RK4 for the first-order system `u' = w/μ`,
//! `w' = −γ_A u`, used to cross-check the Prüfer formulation.

use crate::profile::{MaterialProfile, ParamPoint};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UwState {
    pub y: f64,
    pub u: f64,
    pub w: f64,
}

/// Integrates from `start` to `y_to` in `steps` equal steps (either
/// direction), returning every intermediate state.
pub fn integrate_uw(profile: &MaterialProfile, a: ParamPoint, start: UwState, y_to: f64, steps: usize) -> Vec<UwState> {
    let f = |y: f64, u: f64, w: f64| {
        let (rho, mu) = profile.eval(y.max(0.0)).expect("depth within the profile");
        (w / mu, -(a.omega * rho - a.k * mu) * u)
    };
    let h = (y_to - start.y) / steps as f64;
    let mut out = Vec::with_capacity(steps + 1);
    let (mut u, mut w) = (start.u, start.w);
    out.push(start);
    for i in 0..steps {
        let y = start.y + i as f64 * h;
        let (k1u, k1w) = f(y, u, w);
        let (k2u, k2w) = f(y + 0.5 * h, u + 0.5 * h * k1u, w + 0.5 * h * k1w);
        let (k3u, k3w) = f(y + 0.5 * h, u + 0.5 * h * k2u, w + 0.5 * h * k2w);
        let (k4u, k4w) = f(y + h, u + h * k3u, w + h * k3w);
        u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        w += h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
        let y_next = if i + 1 == steps { y_to } else { start.y + (i + 1) as f64 * h };
        out.push(UwState { y: y_next, u, w });
    }
    out
}

/// Continuous lift of `atan2(u, w)` along a sampled path, anchored so the
/// first sample's angle is `phi0` (mod 2π).
pub fn lifted_angle(path: &[UwState], phi0: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(path.len());
    let mut prev = phi0;
    for (i, s) in path.iter().enumerate() {
        let raw = s.u.atan2(s.w);
        let mut phi = raw + (prev - raw).div_euclid(2.0 * std::f64::consts::PI) * 2.0 * std::f64::consts::PI;
        let two_pi = 2.0 * std::f64::consts::PI;
        while phi - prev > std::f64::consts::PI {
            phi -= two_pi;
        }
        while prev - phi > std::f64::consts::PI {
            phi += two_pi;
        }
        if i == 0 {
            phi = phi0;
        }
        out.push(phi);
        prev = phi;
    }
    out
}
