//! Finite-difference eigenvalues of `−(μu')' + Kμu = Ωρu` on `[0, L]`.
//!
//! Central differences on a uniform grid with `u'(0) = 0` via a mirror
//! point and `u(L) = 0`. Halving the Neumann row makes the pencil
//! symmetric; after diagonal scaling it is a symmetric tridiagonal matrix
//! whose eigenvalues are located by Sturm counts and bisection.

use super::{Discretization, OracleMethod, OracleResult};
use crate::error::{Error, Result};
use crate::profile::MaterialProfile;

struct Tridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl Tridiagonal {
    /// Number of eigenvalues strictly below `x`.
    fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..self.diag.len() {
            let b2 = if i == 0 { 0.0 } else { self.off[i - 1] * self.off[i - 1] };
            d = self.diag[i] - x - if i == 0 { 0.0 } else { b2 / d };
            if d == 0.0 {
                d = -f64::EPSILON * (self.diag[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn lower_bound(&self) -> f64 {
        // Gershgorin
        (0..self.diag.len())
            .map(|i| {
                let l = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
                let r = self.off.get(i).map_or(0.0, |v| v.abs());
                self.diag[i] - l - r
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// The `j`-th smallest eigenvalue (0-based) by bisection.
    fn eigenvalue(&self, j: usize, mut lo: f64, mut hi: f64) -> f64 {
        while hi - lo > 2.0 * f64::EPSILON * hi.abs().max(lo.abs()) {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > j {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

fn assemble(profile: &MaterialProfile, k: f64, l: f64, n: usize) -> Result<Tridiagonal> {
    let h = l / n as f64;
    let at = |y: f64| profile.eval(y);
    let mut diag = Vec::with_capacity(n);
    let mut off = Vec::with_capacity(n - 1);
    let mut weight = Vec::with_capacity(n);
    for i in 0..n {
        let y = i as f64 * h;
        let (rho, mu) = at(y)?;
        let mu_r = at(y + 0.5 * h)?.1;
        if i == 0 {
            diag.push(mu_r / (h * h) + 0.5 * k * mu);
            weight.push(0.5 * rho);
        } else {
            let mu_l = at(y - 0.5 * h)?.1;
            diag.push((mu_l + mu_r) / (h * h) + k * mu);
            weight.push(rho);
        }
        if i + 1 < n {
            off.push(-mu_r / (h * h));
        }
    }
    // B^{-1/2} A B^{-1/2}
    let s: Vec<f64> = weight.iter().map(|w| 1.0 / w.sqrt()).collect();
    for i in 0..n {
        diag[i] *= s[i] * s[i];
        if i + 1 < n {
            off[i] *= s[i] * s[i + 1];
        }
    }
    Ok(Tridiagonal { diag, off })
}

/// Eigenvalues below the cutoff `Kμ_∞/ρ_∞` on one grid, ascending.
pub fn fd_raw(profile: &MaterialProfile, k: f64, l: f64, n: usize) -> Result<Vec<f64>> {
    if !(k > 0.0 && l > 0.0 && n >= 8) {
        return Err(Error::Precondition(format!("finite differences need K, L > 0 and n >= 8 (K = {k}, L = {l}, n = {n})")));
    }
    let t = assemble(profile, k, l, n)?;
    let cutoff = k * profile.mu_inf() / profile.rho_inf();
    let count = t.count_below(cutoff);
    let lo = t.lower_bound().min(0.0);
    Ok((0..count).map(|j| t.eigenvalue(j, lo, cutoff)).collect())
}

/// All eigenvalues (below `limit`) for a given grid, ascending.
pub fn fd_eigenvalues(profile: &MaterialProfile, k: f64, l: f64, n: usize, limit: f64) -> Result<Vec<f64>> {
    let t = assemble(profile, k, l, n)?;
    let count = t.count_below(limit);
    let lo = t.lower_bound().min(0.0);
    Ok((0..count).map(|j| t.eigenvalue(j, lo, limit)).collect())
}

fn richardson(coarse: &[f64], fine: &[f64]) -> Option<Vec<f64>> {
    (coarse.len() == fine.len()).then(|| coarse.iter().zip(fine).map(|(c, f)| (4.0 * f - c) / 3.0).collect())
}

fn max_rel_change(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| ((x - y) / y).abs()).fold(0.0, f64::max)
}

/// Trapped-mode frequencies by finite differences with Richardson
/// extrapolation over `(n, 2n, 4n)` on `[0, L]`, checked against the same
/// spacing on `[0, 2L]`. Marked unusable unless both checks agree to 1e-5.
pub fn fd_mode_frequencies(profile: &MaterialProfile, k: f64, l: f64, n: usize) -> Result<OracleResult> {
    let e1 = fd_raw(profile, k, l, n)?;
    let e2 = fd_raw(profile, k, l, 2 * n)?;
    let e4 = fd_raw(profile, k, l, 4 * n)?;
    let wide2 = fd_raw(profile, k, 2.0 * l, 2 * n)?;
    let wide4 = fd_raw(profile, k, 2.0 * l, 4 * n)?;
    let r_coarse = richardson(&e1, &e2);
    let r_fine = richardson(&e2, &e4);
    let r_wide = richardson(&wide2, &wide4);
    let (omegas, stability) = match (r_coarse, r_fine, r_wide) {
        (Some(c), Some(f), Some(w)) if w.len() == f.len() => {
            let s = max_rel_change(&c, &f).max(max_rel_change(&w, &c));
            (f, s)
        }
        (_, Some(f), _) => (f, f64::INFINITY),
        _ => (e4, f64::INFINITY),
    };
    Ok(OracleResult {
        omegas,
        method: OracleMethod::FiniteDifference,
        discretization: Discretization::Grid { l, n },
        usable: stability <= 1e-5,
        stability,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_half_space_has_no_trapped_modes() {
        let c = MaterialProfile::constant(1.0, 1.0).unwrap();
        assert!(fd_raw(&c, 4.0, 50.0, 2000).unwrap().is_empty());
    }

    #[test]
    fn neumann_dirichlet_box_spectrum() {
        // −u'' = λu on [0, π], u'(0) = 0, u(π) = 0 → λ = (j + 1/2)²
        let c = MaterialProfile::constant(1.0, 1.0).unwrap();
        let ev = fd_eigenvalues(&c, 1e-300, std::f64::consts::PI, 4000, 10.0).unwrap();
        let want = [0.25, 2.25, 6.25];
        assert_eq!(ev.len(), 3);
        for (g, w) in ev.iter().zip(want) {
            assert!((g - w).abs() < 1e-5 * w.max(1.0), "{g} vs {w}");
        }
    }

    #[test]
    fn exponential_profile_matches_bessel_roots() {
        let p = MaterialProfile::exp_density(1.0, 5.0, 1.0).unwrap();
        let r = fd_mode_frequencies(&p, 1.0, 160.0, 20_000).unwrap();
        let want = [0.340_544_592_883_680_55, 0.967_074_858_713_718_7];
        assert!(r.usable, "stability {}", r.stability);
        assert_eq!(r.omegas.len(), 2);
        for (g, w) in r.omegas.iter().zip(want) {
            assert!((g - w).abs() < 1e-4 * w, "{g} vs {w}");
        }
    }
}
