//! The substitution τ(y) = ∫₀^y μ(s)⁻¹ ds and the standard-form medium.
//!
//! In τ the equation `(μu')' + γ_A u = 0` becomes `u_ττ + μγ_A u = 0`, with
//! `w = μu' = u_τ` unchanged, so Prüfer angles agree pointwise between the
//! two coordinates.

use crate::error::{Error, Result};
use crate::interp::Hermite;
use crate::medium::Medium;
use crate::profile::{MaterialProfile, ParamPoint};
use crate::quad;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauGridSpec {
    /// Depth up to which knots are placed; linear extrapolation beyond.
    pub y_end: f64,
    pub quad_rel_tol: f64,
    pub interp_tol: f64,
}

impl TauGridSpec {
    pub fn for_profile(profile: &MaterialProfile) -> Self {
        let y_end = 2.0 * profile.y_max_data().max(profile.exact_tail_from().unwrap_or(0.0)).max(1.0);
        TauGridSpec { y_end, quad_rel_tol: 1e-10, interp_tol: 1e-9 }
    }
}

/// Monotone map between physical depth and τ.
#[derive(Debug, Clone)]
pub struct TauMap {
    forward: Hermite,
    /// `1/μ_∞`, the slope used beyond the last knot.
    pub tail_slope: f64,
}

impl TauMap {
    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.forward.knots().iter().copied().zip(self.forward.values().iter().copied())
    }

    pub fn y_last(&self) -> f64 {
        self.forward.last()
    }

    pub fn tau(&self, y: f64) -> f64 {
        let y_last = self.forward.last();
        if y <= y_last {
            self.forward.eval(y)
        } else {
            *self.forward.values().last().unwrap() + (y - y_last) * self.tail_slope
        }
    }

    pub fn y_of_tau(&self, tau: f64) -> Result<f64> {
        if !(tau >= 0.0) {
            return Err(Error::NegativeDepth(tau));
        }
        Ok(self.y_of_tau_unchecked(tau))
    }

    fn y_of_tau_unchecked(&self, tau: f64) -> f64 {
        let tau_last = *self.forward.values().last().unwrap();
        if tau <= tau_last {
            self.forward.invert_increasing(tau)
        } else {
            self.forward.last() + (tau - tau_last) / self.tail_slope
        }
    }
}

/// Builds τ on adaptively placed knots: each panel is accepted once its
/// Gauss-Kronrod estimate meets `quad_rel_tol` and the cubic Hermite
/// interpolant (slopes `1/μ`) reproduces the panel midpoint within
/// `interp_tol`.
pub fn build_tau(profile: &MaterialProfile, spec: &TauGridSpec) -> Result<TauMap> {
    if profile.mu_lower() <= 0.0 {
        return Err(Error::InvalidProfile(format!("mu lower bound {} is not positive", profile.mu_lower())));
    }
    let inv_mu = |y: f64| 1.0 / profile.eval_unchecked(y).1;
    let mut breaks = vec![0.0];
    if let Some(y0) = profile.exact_tail_from().filter(|&y| y > 0.0 && y < spec.y_end) {
        breaks.push(y0);
    }
    breaks.push(spec.y_end);

    let mut ys = vec![0.0];
    let mut taus = vec![0.0];
    for w in breaks.windows(2) {
        let mut stack = vec![(w[0], w[1])];
        while let Some((a, b)) = stack.pop() {
            let (val, err) = quad::gk15(&inv_mu, a, b);
            let t0 = *taus.last().unwrap();
            let m = 0.5 * (a + b);
            let (left, _) = quad::gk15(&inv_mu, a, m);
            let h = Hermite::with_slopes(vec![a, b], vec![t0, t0 + val], vec![inv_mu(a), inv_mu(b)]);
            let interp_err = (h.eval(m) - (t0 + left)).abs();
            let ok = err <= spec.quad_rel_tol * val.abs() && interp_err <= spec.interp_tol;
            if ok || b - a < 1e-9 * b.max(1.0) {
                ys.push(b);
                taus.push(t0 + val);
            } else {
                stack.push((m, b));
                stack.push((a, m));
            }
        }
    }
    let slopes = ys.iter().map(|&y| inv_mu(y)).collect();
    Ok(TauMap { forward: Hermite::with_slopes(ys, taus, slopes), tail_slope: 1.0 / profile.mu_inf() })
}

/// The profile in τ coordinates: `ḡ_A(τ) = μ(y(τ)) γ_A(y(τ))`, unit stiffness.
#[derive(Debug, Clone)]
pub struct StandardForm<'a> {
    pub profile: &'a MaterialProfile,
    pub map: TauMap,
}

pub fn transform<'a>(profile: &'a MaterialProfile, map: TauMap) -> StandardForm<'a> {
    StandardForm { profile, map }
}

impl StandardForm<'_> {
    pub fn new(profile: &MaterialProfile) -> Result<StandardForm<'_>> {
        let map = build_tau(profile, &TauGridSpec::for_profile(profile))?;
        Ok(StandardForm { profile, map })
    }

    /// `γ̄_A(τ)`.
    pub fn gamma_bar(&self, a: ParamPoint, tau: f64) -> Result<f64> {
        let y = self.map.y_of_tau(tau)?;
        let (rho, mu) = self.profile.eval(y)?;
        Ok(mu * (a.omega * rho - a.k * mu))
    }

    /// `(ρ̄, μ̄)·μ̄`, the standard-form material vector; its argument equals `Arg a(y)`.
    pub fn a_bar(&self, tau: f64) -> Result<(f64, f64)> {
        let y = self.map.y_of_tau(tau)?;
        let (rho, mu) = self.profile.eval(y)?;
        Ok((mu * rho, mu * mu))
    }
}

impl Medium for StandardForm<'_> {
    fn gamma(&self, a: ParamPoint, tau: f64) -> f64 {
        let y = self.map.y_of_tau_unchecked(tau.max(0.0));
        let (rho, mu) = self.profile.eval_unchecked(y);
        mu * (a.omega * rho - a.k * mu)
    }

    fn stiffness(&self, _tau: f64) -> f64 {
        1.0
    }

    fn gamma_inf(&self, a: ParamPoint) -> f64 {
        self.profile.mu_inf() * self.profile.gamma_inf(a)
    }

    fn stiffness_inf(&self) -> f64 {
        1.0
    }

    fn beta(&self, a: ParamPoint, tau: f64) -> f64 {
        // μγ − μ_∞γ_∞ = μ̂ γ_∞ + μ β
        let y = self.map.y_of_tau_unchecked(tau.max(0.0));
        let (_, dmu) = self.profile.deviation(y).unwrap_or((0.0, 0.0));
        let mu = self.profile.mu_inf() + dmu;
        dmu * self.profile.gamma_inf(a) + mu * self.profile.beta(a, y).unwrap_or(0.0)
    }

    fn exact_tail_from(&self) -> Option<f64> {
        self.profile.exact_tail_from().map(|y| self.map.tau(y))
    }

    fn data_extent(&self) -> f64 {
        self.map.tau(self.profile.y_max_data())
    }

    fn to_coordinate(&self, y: f64) -> f64 {
        self.map.tau(y)
    }

    fn limit_ratio(&self) -> f64 {
        self.profile.mu_inf() / self.profile.rho_inf()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn constant_modulus_maps() {
        let p = MaterialProfile::constant(1.0, 2.0).unwrap();
        let m = build_tau(&p, &TauGridSpec { y_end: 10.0, quad_rel_tol: 1e-10, interp_tol: 1e-9 }).unwrap();
        for (y, t) in m.knots() {
            assert!((t - y / 2.0).abs() < 1e-14);
        }
        assert!((m.y_of_tau(1.0).unwrap() - 2.0).abs() < 1e-13);
        assert!((m.tau(25.0) - 12.5).abs() < 1e-13);

        let unit = MaterialProfile::constant(3.0, 1.0).unwrap();
        let m = build_tau(&unit, &TauGridSpec::for_profile(&unit)).unwrap();
        for y in [0.0, 0.3, 1.7, 40.0] {
            assert!((m.tau(y) - y).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_is_fixed_and_negative_tau_rejected() {
        let p = MaterialProfile::exp_modulus(1.0, 1.0, 1.0).unwrap();
        let m = build_tau(&p, &TauGridSpec::for_profile(&p)).unwrap();
        assert_eq!(m.y_of_tau(0.0).unwrap(), 0.0);
        assert!(matches!(m.y_of_tau(-1e-3), Err(Error::NegativeDepth(_))));
    }

    // Composite 20-point Gauss-Legendre on 64 panels, independent of quad::gk15.
    fn gauss_legendre_oracle<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
        // nodes/weights from the Golub-Welsch construction, computed here by Newton on P_20
        let n = 20;
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for i in 1..=n {
            let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    let w = 2.0 / ((1.0 - x * x) * dp * dp);
                    nodes.push(x);
                    weights.push(w);
                    break;
                }
            }
        }
        let panels = 64;
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|j| {
                let c = a + (j as f64 + 0.5) * h;
                nodes.iter().zip(&weights).map(|(x, w)| w * f(c + 0.5 * h * x)).sum::<f64>() * 0.5 * h
            })
            .sum()
    }

    #[test]
    fn tau_matches_independent_quadrature() {
        let oracle = gauss_legendre_oracle(|y| 1.0 / (1.0 + (-y).exp()), 0.0, 1.0);
        // closed form: ln(1 + e) − ln 2
        assert!((oracle - ((1.0 + 1f64.exp()).ln() - 2f64.ln())).abs() < 1e-14);
        let p = MaterialProfile::exp_modulus(1.0, 1.0, 1.0).unwrap();
        let m = build_tau(&p, &TauGridSpec::for_profile(&p)).unwrap();
        assert!((m.tau(1.0) - oracle).abs() < 1e-9, "{}", m.tau(1.0) - oracle);
    }

    #[test]
    fn round_trip_at_random_depths() {
        let p = MaterialProfile::exp_modulus(1.0, 2.0, 0.7).unwrap();
        let m = build_tau(&p, &TauGridSpec::for_profile(&p)).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let y: f64 = rng.gen_range(0.0..60.0);
            let back = m.y_of_tau(m.tau(y)).unwrap();
            worst = worst.max((back - y).abs() / y.max(1e-300));
        }
        assert!(worst <= 1e-10, "{worst}");
    }

    #[test]
    fn transform_examples() {
        let a = ParamPoint::new(1.0, 0.5).unwrap();
        let unit = MaterialProfile::exp_density(1.0, 5.0, 1.0).unwrap();
        let sf = StandardForm::new(&unit).unwrap();
        for y in [0.0, 0.4, 3.0] {
            assert!((sf.gamma_bar(a, sf.map.tau(y)).unwrap() - unit.gamma(a, y).unwrap()).abs() < 1e-14);
        }
        assert_eq!(sf.gamma_bar(a, sf.map.tau(0.0)).unwrap(), 2.0);

        let stiff = MaterialProfile::constant(1.0, 2.0).unwrap();
        let sf = StandardForm::new(&stiff).unwrap();
        let a = ParamPoint::new(1.0, 1.0).unwrap();
        for t in [0.0, 1.0, 5.0] {
            assert!((sf.gamma_bar(a, t).unwrap() + 2.0).abs() < 1e-14);
        }
        assert_eq!(Medium::gamma_inf(&sf, a), 2.0 * 1.0 * 1.0 - 1.0 * 4.0);
    }

    #[test]
    fn pointwise_identity_and_arg_preservation() {
        let p = MaterialProfile::exp_modulus(1.5, 1.0, 0.8).unwrap();
        let sf = StandardForm::new(&p).unwrap();
        let a = ParamPoint::new(2.0, 1.3).unwrap();
        for y in [0.0, 0.2, 1.0, 2.5, 7.0, 30.0] {
            let t = sf.map.tau(y);
            let (rho, mu) = p.eval(y).unwrap();
            let lhs = sf.gamma_bar(a, t).unwrap();
            let rhs = mu * p.gamma(a, y).unwrap();
            assert!((lhs - rhs).abs() <= 1e-8 * rhs.abs().max(1.0), "{y}: {lhs} vs {rhs}");
            let (rb, mb) = sf.a_bar(t).unwrap();
            assert!((mb.atan2(rb) - mu.atan2(rho)).abs() < 1e-8);
            let beta = Medium::beta(&sf, a, t);
            assert!((beta - (lhs - Medium::gamma_inf(&sf, a))).abs() < 1e-8 * lhs.abs().max(1.0));
        }
    }

    #[test]
    fn deviation_of_transformed_coefficient_stays_integrable() {
        let p = MaterialProfile::exp_modulus(1.0, 1.0, 1.0).unwrap();
        assert!(p.check_assumptions().integrable);
        let sf = StandardForm::new(&p).unwrap();
        let a = ParamPoint::new(1.0, 0.5).unwrap();
        let windows: Vec<f64> = (0..6)
            .map(|j| {
                let t0 = 4.0 * 2f64.powi(j);
                quad::quad(|t| Medium::beta(&sf, a, t).abs(), t0, 2.0 * t0, 1e-10, 1e-300)
            })
            .collect();
        assert!(windows.windows(4).all(|w| w[3] * 2.0 <= w[0] || w[3] < 1e-14));
    }
}
