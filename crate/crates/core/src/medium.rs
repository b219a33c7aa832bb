//! Coefficient access for the shooting solver in a chosen depth coordinate.

use crate::profile::{MaterialProfile, ParamPoint};

/// Coefficients of `(m(x) u')' + g_A(x) u = 0` in some depth coordinate `x`.
///
/// [`MaterialProfile`] provides the physical coordinate `x = y`;
/// [`crate::liouville::StandardForm`] provides `x = τ(y)` with `m ≡ 1`.
/// Callers guarantee `x ≥ 0`.
pub trait Medium: Sync {
    fn gamma(&self, a: ParamPoint, x: f64) -> f64;

    /// Leading coefficient `m(x)`.
    fn stiffness(&self, x: f64) -> f64;

    fn gamma_inf(&self, a: ParamPoint) -> f64;

    fn stiffness_inf(&self) -> f64;

    /// `g_A(x) − g_A(∞)`, computed without cancellation.
    fn beta(&self, a: ParamPoint, x: f64) -> f64;

    /// Coordinate from which the coefficients are exactly constant.
    fn exact_tail_from(&self) -> Option<f64>;

    /// Coordinate span carrying the profile's structure.
    fn data_extent(&self) -> f64;

    /// Physical depth to this medium's coordinate.
    fn to_coordinate(&self, y: f64) -> f64;

    /// `μ_∞/ρ_∞`; the cutoff is `Ω̄ = K μ_∞/ρ_∞` in every coordinate.
    fn limit_ratio(&self) -> f64;

    fn cutoff(&self, k: f64) -> f64 {
        k * self.limit_ratio()
    }
}

impl Medium for MaterialProfile {
    fn gamma(&self, a: ParamPoint, y: f64) -> f64 {
        let (rho, mu) = self.eval_unchecked(y);
        a.omega * rho - a.k * mu
    }

    fn stiffness(&self, y: f64) -> f64 {
        self.eval_unchecked(y).1
    }

    fn gamma_inf(&self, a: ParamPoint) -> f64 {
        MaterialProfile::gamma_inf(self, a)
    }

    fn stiffness_inf(&self) -> f64 {
        self.mu_inf()
    }

    fn beta(&self, a: ParamPoint, y: f64) -> f64 {
        MaterialProfile::beta(self, a, y.max(0.0)).unwrap_or(0.0)
    }

    fn exact_tail_from(&self) -> Option<f64> {
        MaterialProfile::exact_tail_from(self)
    }

    fn data_extent(&self) -> f64 {
        self.y_max_data()
    }

    fn to_coordinate(&self, y: f64) -> f64 {
        y
    }

    fn limit_ratio(&self) -> f64 {
        self.mu_inf() / self.rho_inf()
    }
}
