//! Depth-graded material profiles and the coefficient γ_A(y) = Ωρ(y) − Kμ(y).
//!
//! A [`MaterialProfile`] is either an entry of the analytic registry or a
//! sampled table. Every profile knows its limits `(ρ_∞, μ_∞)` and can return
//! the deviations `ρ̂ = ρ − ρ_∞`, `μ̂ = μ − μ_∞` directly, so tail quantities
//! such as `β(y)` and `γ̂_∞(y)` are evaluated without cancellation.

use std::f64::consts::FRAC_PI_2;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::Hermite;
use crate::quad;

/// Absolute tolerance on `Arg a(y) − Arg a_∞` used by the classifier.
pub const ANGLE_TOL: f64 = 1e-10;

/// Squared wavenumber `K = k²` and squared angular frequency `Ω = ω²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamPoint {
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "Omega")]
    pub omega: f64,
}

impl ParamPoint {
    pub fn new(k: f64, omega: f64) -> Result<Self> {
        if !(k > 0.0 && omega > 0.0 && k.is_finite() && omega.is_finite()) {
            return Err(Error::InvalidParam { k, omega });
        }
        Ok(ParamPoint { k, omega })
    }

    /// `Arg A = Arctan(Ω/K)`.
    pub fn arg(&self) -> f64 {
        self.omega.atan2(self.k)
    }
}

fn one() -> f64 {
    1.0
}

/// Serializable description of a profile, as it appears in run configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    Constant {
        rho: f64,
        mu: f64,
    },
    /// ρ = ρ_∞ + Δρ·e^{−y/d}, μ constant.
    ExpDensity {
        rho_inf: f64,
        delta_rho: f64,
        d: f64,
        #[serde(default = "one")]
        mu: f64,
    },
    /// μ = μ_∞ + Δμ·e^{−y/d}, ρ constant.
    ExpModulus {
        mu_inf: f64,
        delta_mu: f64,
        d: f64,
        #[serde(default = "one")]
        rho: f64,
    },
    /// ρ = ρ_∞ + c·(1+y)^{−p}, μ constant.
    PowerDensity {
        rho_inf: f64,
        c: f64,
        p: f64,
        #[serde(default = "one")]
        mu: f64,
    },
    /// Layer `(ρ_1, μ_1)` blended by a C¹ smoothstep of the given width into
    /// the substrate `(ρ_s, μ_s)`; exactly constant for y ≥ y_s.
    SmoothedLayer {
        rho_1: f64,
        mu_1: f64,
        rho_s: f64,
        mu_s: f64,
        y_s: f64,
        width: f64,
    },
    /// Samples `(y, ρ, μ)`, inline or read from a whitespace/comma separated
    /// file with one sample per row.
    Table {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rows: Option<Vec<[f64; 3]>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rho_inf: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        mu_inf: Option<f64>,
    },
}

#[derive(Debug, Clone)]
struct SampledTable {
    rho: Hermite,
    mu: Hermite,
}

#[derive(Debug, Clone)]
enum Kind {
    Constant,
    ExpDensity { delta: f64, d: f64 },
    ExpModulus { delta: f64, d: f64 },
    PowerDensity { c: f64, p: f64 },
    SmoothedLayer { rho_1: f64, mu_1: f64, y_s: f64, width: f64 },
    Sampled(SampledTable),
}

/// An immutable graded medium.
#[derive(Debug, Clone)]
pub struct MaterialProfile {
    spec: ProfileSpec,
    kind: Kind,
    rho_inf: f64,
    mu_inf: f64,
    y_max_data: f64,
    mu_lower: f64,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidProfile(format!("{name} must be positive and finite, got {v}")))
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidProfile(format!("{name} must be finite, got {v}")))
    }
}

// Depth at which a deviation `amp·decay(y)` drops to 1e-6 of the limit.
const DATA_EXTENT_REL: f64 = 1e-6;

impl MaterialProfile {
    pub fn constant(rho: f64, mu: f64) -> Result<Self> {
        Self::from_spec(&ProfileSpec::Constant { rho, mu })
    }

    pub fn exp_density(rho_inf: f64, delta_rho: f64, d: f64) -> Result<Self> {
        Self::from_spec(&ProfileSpec::ExpDensity { rho_inf, delta_rho, d, mu: 1.0 })
    }

    pub fn exp_modulus(mu_inf: f64, delta_mu: f64, d: f64) -> Result<Self> {
        Self::from_spec(&ProfileSpec::ExpModulus { mu_inf, delta_mu, d, rho: 1.0 })
    }

    pub fn power_density(rho_inf: f64, c: f64, p: f64) -> Result<Self> {
        Self::from_spec(&ProfileSpec::PowerDensity { rho_inf, c, p, mu: 1.0 })
    }

    pub fn smoothed_layer(rho_1: f64, mu_1: f64, rho_s: f64, mu_s: f64, y_s: f64, width: f64) -> Result<Self> {
        Self::from_spec(&ProfileSpec::SmoothedLayer { rho_1, mu_1, rho_s, mu_s, y_s, width })
    }

    /// Sampled profile with limits taken from the last row.
    pub fn table(rows: &[[f64; 3]]) -> Result<Self> {
        Self::from_spec(&ProfileSpec::Table { rows: Some(rows.to_vec()), path: None, rho_inf: None, mu_inf: None })
    }

    pub fn from_spec(spec: &ProfileSpec) -> Result<Self> {
        Self::from_spec_in(spec, Path::new("."))
    }

    /// Builds a profile, resolving relative table paths against `base_dir`.
    pub fn from_spec_in(spec: &ProfileSpec, base_dir: &Path) -> Result<Self> {
        let (kind, rho_inf, mu_inf, y_max_data, mu_lower) = match *spec {
            ProfileSpec::Constant { rho, mu } => {
                positive("rho", rho)?;
                positive("mu", mu)?;
                (Kind::Constant, rho, mu, 0.0, mu)
            }
            ProfileSpec::ExpDensity { rho_inf, delta_rho, d, mu } => {
                positive("rho_inf", rho_inf)?;
                finite("delta_rho", delta_rho)?;
                positive("d", d)?;
                positive("mu", mu)?;
                positive("rho(0)", rho_inf + delta_rho)?;
                let extent = d * (delta_rho.abs() / (DATA_EXTENT_REL * rho_inf)).ln().max(0.0);
                (Kind::ExpDensity { delta: delta_rho, d }, rho_inf, mu, extent, mu)
            }
            ProfileSpec::ExpModulus { mu_inf, delta_mu, d, rho } => {
                positive("mu_inf", mu_inf)?;
                finite("delta_mu", delta_mu)?;
                positive("d", d)?;
                positive("rho", rho)?;
                positive("mu(0)", mu_inf + delta_mu)?;
                let extent = d * (delta_mu.abs() / (DATA_EXTENT_REL * mu_inf)).ln().max(0.0);
                (Kind::ExpModulus { delta: delta_mu, d }, rho, mu_inf, extent, mu_inf.min(mu_inf + delta_mu))
            }
            ProfileSpec::PowerDensity { rho_inf, c, p, mu } => {
                positive("rho_inf", rho_inf)?;
                finite("c", c)?;
                positive("p", p)?;
                positive("mu", mu)?;
                positive("rho(0)", rho_inf + c)?;
                let extent = ((c.abs() / (DATA_EXTENT_REL * rho_inf)).powf(1.0 / p) - 1.0).max(0.0);
                (Kind::PowerDensity { c, p }, rho_inf, mu, extent, mu)
            }
            ProfileSpec::SmoothedLayer { rho_1, mu_1, rho_s, mu_s, y_s, width } => {
                for (n, v) in [("rho_1", rho_1), ("mu_1", mu_1), ("rho_s", rho_s), ("mu_s", mu_s), ("y_s", y_s), ("width", width)] {
                    positive(n, v)?;
                }
                if width > y_s {
                    return Err(Error::InvalidProfile(format!("smoothing width {width} exceeds y_s = {y_s}")));
                }
                (Kind::SmoothedLayer { rho_1, mu_1, y_s, width }, rho_s, mu_s, y_s, mu_1.min(mu_s))
            }
            ProfileSpec::Table { ref rows, ref path, rho_inf, mu_inf } => {
                let rows = match (rows, path) {
                    (Some(r), None) => r.clone(),
                    (None, Some(p)) => {
                        let full = if p.is_absolute() { p.clone() } else { base_dir.join(p) };
                        read_table(&full)?
                    }
                    _ => return Err(Error::InvalidProfile("table needs exactly one of `rows` or `path`".into())),
                };
                let (table, rho_inf, mu_inf, y_max, mu_lower) = build_table(&rows, rho_inf, mu_inf)?;
                (Kind::Sampled(table), rho_inf, mu_inf, y_max, mu_lower)
            }
        };
        Ok(MaterialProfile { spec: spec.clone(), kind, rho_inf, mu_inf, y_max_data, mu_lower })
    }

    pub fn spec(&self) -> &ProfileSpec {
        &self.spec
    }

    pub fn rho_inf(&self) -> f64 {
        self.rho_inf
    }

    pub fn mu_inf(&self) -> f64 {
        self.mu_inf
    }

    /// Largest depth carrying explicit structure. Sampled profiles are exactly
    /// constant beyond it; analytic ones have relative deviation ≤ 1e-6 there.
    pub fn y_max_data(&self) -> f64 {
        self.y_max_data
    }

    /// Positive lower bound of μ over the half-line.
    pub fn mu_lower(&self) -> f64 {
        self.mu_lower
    }

    /// Depth from which the profile is exactly `(ρ_∞, μ_∞)`, if any.
    pub fn exact_tail_from(&self) -> Option<f64> {
        match self.kind {
            Kind::Constant => Some(0.0),
            Kind::SmoothedLayer { y_s, .. } => Some(y_s),
            Kind::Sampled(_) => Some(self.y_max_data),
            _ => None,
        }
    }

    /// Deviations `(ρ̂(y), μ̂(y))` from the limits.
    pub fn deviation(&self, y: f64) -> Result<(f64, f64)> {
        if !(y >= 0.0) {
            return Err(Error::NegativeDepth(y));
        }
        Ok(self.deviation_unchecked(y))
    }

    fn deviation_unchecked(&self, y: f64) -> (f64, f64) {
        match &self.kind {
            Kind::Constant => (0.0, 0.0),
            Kind::ExpDensity { delta, d } => (delta * (-y / d).exp(), 0.0),
            Kind::ExpModulus { delta, d } => (0.0, delta * (-y / d).exp()),
            Kind::PowerDensity { c, p } => (c * (1.0 + y).powf(-p), 0.0),
            Kind::SmoothedLayer { rho_1, mu_1, y_s, width } => {
                let t = ((y - (y_s - width)) / width).clamp(0.0, 1.0);
                let keep = 1.0 - t * t * (3.0 - 2.0 * t);
                ((rho_1 - self.rho_inf) * keep, (mu_1 - self.mu_inf) * keep)
            }
            Kind::Sampled(t) => {
                if y >= self.y_max_data {
                    (0.0, 0.0)
                } else {
                    (t.rho.eval(y) - self.rho_inf, t.mu.eval(y) - self.mu_inf)
                }
            }
        }
    }

    /// `(ρ(y), μ(y))`.
    pub fn eval(&self, y: f64) -> Result<(f64, f64)> {
        if !(y >= 0.0) {
            return Err(Error::NegativeDepth(y));
        }
        Ok(self.eval_unchecked(y))
    }

    pub(crate) fn eval_unchecked(&self, y: f64) -> (f64, f64) {
        match &self.kind {
            Kind::Sampled(t) if y < self.y_max_data => (t.rho.eval(y), t.mu.eval(y)),
            _ => {
                let (dr, dm) = self.deviation_unchecked(y);
                (self.rho_inf + dr, self.mu_inf + dm)
            }
        }
    }

    /// `γ_A(y) = Ωρ(y) − Kμ(y)`.
    pub fn gamma(&self, a: ParamPoint, y: f64) -> Result<f64> {
        let (rho, mu) = self.eval(y)?;
        Ok(a.omega * rho - a.k * mu)
    }

    pub fn gamma_inf(&self, a: ParamPoint) -> f64 {
        a.omega * self.rho_inf - a.k * self.mu_inf
    }

    /// `β(y) = γ_A(y) − γ_A(∞) = Ωρ̂ − Kμ̂`.
    pub fn beta(&self, a: ParamPoint, y: f64) -> Result<f64> {
        let (dr, dm) = self.deviation(y)?;
        Ok(a.omega * dr - a.k * dm)
    }

    pub fn coefficient_field(&self, a: ParamPoint) -> CoefficientField<'_> {
        let gamma_inf = self.gamma_inf(a);
        let lambda = (gamma_inf < 0.0).then(|| (-gamma_inf * self.mu_inf).sqrt() / self.mu_inf);
        let grid = classification_grid(self, DEFAULT_GRID_POINTS);
        let mut sign_changes = Vec::new();
        let mut prev: Option<(f64, f64)> = None;
        for &y in &grid {
            let g = self.gamma(a, y).expect("grid depths are non-negative");
            if let Some((py, pg)) = prev {
                if (pg >= 0.0) != (g >= 0.0) {
                    sign_changes.push((py, y));
                }
            }
            prev = Some((y, g));
        }
        CoefficientField { profile: self, a, gamma_inf, lambda, sign_changes }
    }

    /// `Arg a(y) = Arctan(μ(y)/ρ(y))`.
    pub fn arg_a(&self, y: f64) -> Result<f64> {
        let (rho, mu) = self.eval(y)?;
        Ok(mu.atan2(rho))
    }

    pub fn arg_a_inf(&self) -> f64 {
        self.mu_inf.atan2(self.rho_inf)
    }

    /// `Arg a(y) − Arg a_∞`, evaluated from the deviations.
    pub fn arg_excess(&self, y: f64) -> Result<f64> {
        let (rho, mu) = self.eval(y)?;
        let g = self.limit_gamma_hat(y)?;
        Ok((-g).atan2(rho * self.rho_inf + mu * self.mu_inf))
    }

    /// `γ̂_∞(y) = μ_∞ρ̂(y) − ρ_∞μ̂(y)`.
    pub fn limit_gamma_hat(&self, y: f64) -> Result<f64> {
        let (dr, dm) = self.deviation(y)?;
        Ok(self.mu_inf * dr - self.rho_inf * dm)
    }

    pub fn classify(&self, scan: &ScanGrid) -> ProfileClass {
        classify(self, scan)
    }

    pub fn check_assumptions(&self) -> AssumptionReport {
        check_assumptions(self)
    }
}

fn read_table(path: &Path) -> Result<Vec<[f64; 3]>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::InvalidProfile(format!("{}: {e}", path.display())))?;
    parse_table(&text).map_err(|e| match e {
        Error::InvalidProfile(m) => Error::InvalidProfile(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Parses `y rho mu` rows; `#` starts a comment, commas count as whitespace.
pub fn parse_table(text: &str) -> Result<Vec<[f64; 3]>> {
    let mut rows: Vec<[f64; 3]> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
        if fields.len() != 3 {
            return Err(Error::InvalidProfile(format!("line {}: expected 3 columns (y rho mu), found {}", lineno + 1, fields.len())));
        }
        let mut row = [0.0; 3];
        for (slot, f) in row.iter_mut().zip(&fields) {
            *slot = f.parse().map_err(|_| Error::InvalidProfile(format!("line {}: cannot parse `{f}` as a number", lineno + 1)))?;
        }
        if let Some(prev) = rows.last() {
            if row[0] <= prev[0] {
                return Err(Error::InvalidProfile(format!(
                    "line {}: depth {} is not greater than the previous depth {}",
                    lineno + 1,
                    row[0],
                    prev[0]
                )));
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

fn build_table(rows: &[[f64; 3]], rho_inf: Option<f64>, mu_inf: Option<f64>) -> Result<(SampledTable, f64, f64, f64, f64)> {
    if rows.len() < 2 {
        return Err(Error::InvalidProfile("table needs at least two rows".into()));
    }
    if rows[0][0] != 0.0 {
        return Err(Error::InvalidProfile(format!("table must start at y = 0, first depth is {}", rows[0][0])));
    }
    for (i, r) in rows.iter().enumerate() {
        if !(r[1] > 0.0 && r[2] > 0.0 && r.iter().all(|v| v.is_finite())) {
            return Err(Error::InvalidProfile(format!("row {}: rho and mu must be positive, got ({}, {})", i + 1, r[1], r[2])));
        }
        if i > 0 && r[0] <= rows[i - 1][0] {
            return Err(Error::InvalidProfile(format!("row {}: depths must be strictly increasing", i + 1)));
        }
    }
    let last = rows[rows.len() - 1];
    let rho_inf = rho_inf.unwrap_or(last[1]);
    let mu_inf = mu_inf.unwrap_or(last[2]);
    for (name, lim, end) in [("rho_inf", rho_inf, last[1]), ("mu_inf", mu_inf, last[2])] {
        if (lim - end).abs() > 1e-12 * lim.abs().max(1.0) {
            return Err(Error::InvalidProfile(format!("{name} = {lim} differs from the last sample {end}; the clamped tail would jump")));
        }
    }
    let ys: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let rho = Hermite::monotone(ys.clone(), rows.iter().map(|r| r[1]).collect());
    let mu = Hermite::monotone(ys, rows.iter().map(|r| r[2]).collect());
    let mu_lower = rows.iter().map(|r| r[2]).fold(f64::INFINITY, f64::min);
    Ok((SampledTable { rho, mu }, rho_inf, mu_inf, last[0], mu_lower))
}

/// γ_A split into its limit and decaying part for one parameter point.
#[derive(Debug, Clone)]
pub struct CoefficientField<'a> {
    profile: &'a MaterialProfile,
    pub a: ParamPoint,
    pub gamma_inf: f64,
    /// `sqrt(−γ_∞ μ_∞)/μ_∞`; present only when `γ_∞ < 0`.
    pub lambda: Option<f64>,
    /// Grid intervals on which γ_A changes sign.
    pub sign_changes: Vec<(f64, f64)>,
}

impl CoefficientField<'_> {
    pub fn beta(&self, y: f64) -> Result<f64> {
        self.profile.beta(self.a, y)
    }

    pub fn gamma(&self, y: f64) -> Result<f64> {
        self.profile.gamma(self.a, y)
    }
}

pub const DEFAULT_GRID_POINTS: usize = 2048;

/// Probe depths for classification: uniform over the data extent, then
/// geometric out to `y_max_data + tail_window`.
#[derive(Debug, Clone)]
pub struct ScanGrid {
    pub y_grid: Vec<f64>,
    /// Depth from which points count toward the behaviour at infinity.
    pub tail_from: f64,
}

impl ScanGrid {
    pub fn for_profile(profile: &MaterialProfile) -> Self {
        let grid = classification_grid(profile, DEFAULT_GRID_POINTS);
        ScanGrid { tail_from: profile.y_max_data().max(1.0), y_grid: grid }
    }
}

fn classification_grid(profile: &MaterialProfile, n: usize) -> Vec<f64> {
    let core = profile.y_max_data().max(1.0);
    let outer = 2.0 * core;
    let mut grid: Vec<f64> = (0..n).map(|i| core * i as f64 / (n - 1) as f64).collect();
    let mut y = core;
    while y < outer {
        y = (y * 1.01).min(outer);
        grid.push(y);
    }
    grid
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailMonotonicity {
    /// `Arg a(y) < Arg a_∞` on the tail window.
    Positive,
    /// `Arg a(y) > Arg a_∞` on the tail window.
    Negative,
    /// `Arg a(y) = Arg a_∞` exactly on the tail window.
    Equal,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileClass {
    pub monotonicity_at_inf: TailMonotonicity,
    /// `Arg a(y) ≥ Arg a_∞` at every probed depth.
    pub global_negative: bool,
    /// `μ̌/ρ̌ = inf μ/ρ`, never above `μ_∞/ρ_∞`.
    pub min_mu_over_rho: f64,
    /// Depth attaining the minimum; `None` when the infimum is the limit.
    pub argmin_depth: Option<f64>,
    pub mu_over_rho_inf: f64,
    /// Largest change of `Arg a` between adjacent probe points.
    pub max_angle_step: f64,
    /// Set when the probe grid does not resolve the profile.
    pub coarse_grid_warning: bool,
}

impl ProfileClass {
    /// `(Kμ̌/ρ̌, Kμ_∞/ρ_∞)`; empty when the first bound is not below the second.
    pub fn admissible_interval(&self, k: f64) -> AdmissibleInterval {
        AdmissibleInterval { lo: k * self.min_mu_over_rho, hi: k * self.mu_over_rho_inf }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmissibleInterval {
    pub lo: f64,
    pub hi: f64,
}

impl AdmissibleInterval {
    pub fn is_empty(&self) -> bool {
        self.lo >= self.hi
    }

    pub fn contains_strictly(&self, omega: f64) -> bool {
        omega > self.lo && omega < self.hi
    }
}

pub fn admissible_interval(class: &ProfileClass, k: f64) -> AdmissibleInterval {
    class.admissible_interval(k)
}

fn classify(profile: &MaterialProfile, scan: &ScanGrid) -> ProfileClass {
    let ratio = |y: f64| {
        let (rho, mu) = profile.eval_unchecked(y);
        mu / rho
    };
    let mut global_negative = true;
    let (mut pos, mut neg, mut eq) = (false, false, false);
    let mut max_angle_step: f64 = 0.0;
    let mut prev_arg: Option<f64> = None;
    let mut best = (f64::INFINITY, 0usize);
    for (i, &y) in scan.y_grid.iter().enumerate() {
        let excess = profile.arg_excess(y).expect("grid depths are non-negative");
        if excess < -ANGLE_TOL {
            global_negative = false;
        }
        if y >= scan.tail_from {
            let g = profile.limit_gamma_hat(y).unwrap();
            match g.partial_cmp(&0.0) {
                Some(std::cmp::Ordering::Greater) => pos = true,
                Some(std::cmp::Ordering::Less) => neg = true,
                _ => eq = true,
            }
        }
        let arg = profile.arg_a(y).unwrap();
        if let Some(p) = prev_arg {
            max_angle_step = max_angle_step.max((arg - p).abs());
        }
        prev_arg = Some(arg);
        let r = ratio(y);
        if r < best.0 {
            best = (r, i);
        }
    }
    let monotonicity_at_inf = match (pos, neg, eq) {
        (true, false, false) => TailMonotonicity::Positive,
        (false, true, false) => TailMonotonicity::Negative,
        (false, false, _) => TailMonotonicity::Equal,
        _ => TailMonotonicity::Mixed,
    };
    let limit = profile.mu_inf / profile.rho_inf;
    let grid = &scan.y_grid;
    let (mut min_ratio, mut argmin) = (best.0, grid[best.1]);
    if best.1 + 1 < grid.len() {
        let lo = grid[best.1.saturating_sub(1)];
        let hi = grid[best.1 + 1];
        let (y, r) = quad::golden_min(ratio, lo, hi, 1e-12 * hi.max(1.0));
        if r < min_ratio {
            min_ratio = r;
            argmin = y;
        }
    }
    let (min_mu_over_rho, argmin_depth) = if min_ratio < limit { (min_ratio, Some(argmin)) } else { (limit, None) };
    ProfileClass {
        monotonicity_at_inf,
        global_negative,
        min_mu_over_rho,
        argmin_depth,
        mu_over_rho_inf: limit,
        max_angle_step,
        coarse_grid_warning: max_angle_step > 1e-2,
    }
}

/// Numerical evidence for the Lipschitz and integrability assumptions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    /// Largest finite-difference slope of ρ and μ over the probe grid.
    pub lipschitz_estimate: f64,
    pub lipschitz_ok: bool,
    /// `∫_0^{Y_check} (|ρ̂| + |μ̂|)`.
    pub deviation_integral: f64,
    pub y_check: f64,
    /// Integrals over the doubling windows `[Y, 2Y]` beyond `Y_check`.
    pub window_integrals: Vec<f64>,
    pub integrable: bool,
    pub positivity_floor: f64,
    pub tolerances: AssumptionTolerances,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionTolerances {
    pub quad_rel_tol: f64,
    /// Required decay factor of the window integrals over three doublings.
    pub window_decay: f64,
    pub doublings: usize,
}

fn check_assumptions(profile: &MaterialProfile) -> AssumptionReport {
    let grid = classification_grid(profile, 4 * DEFAULT_GRID_POINTS);
    let mut lip: f64 = 0.0;
    for w in grid.windows(2) {
        let (r0, m0) = profile.eval_unchecked(w[0]);
        let (r1, m1) = profile.eval_unchecked(w[1]);
        let h = w[1] - w[0];
        lip = lip.max(((r1 - r0) / h).abs()).max(((m1 - m0) / h).abs());
    }
    let abs_dev = |y: f64| {
        let (dr, dm) = profile.deviation_unchecked(y);
        dr.abs() + dm.abs()
    };
    let tol = AssumptionTolerances { quad_rel_tol: 1e-10, window_decay: 2.0, doublings: 8 };
    let y_check = profile.y_max_data().max(1.0);
    let mut breaks = vec![0.0];
    if let Some(y0) = profile.exact_tail_from().filter(|&y| y > 0.0 && y < y_check) {
        breaks.push(y0);
    }
    breaks.push(y_check);
    let deviation_integral: f64 =
        breaks.windows(2).map(|w| quad::quad(abs_dev, w[0], w[1], tol.quad_rel_tol, 1e-300)).sum();
    let mut window_integrals = Vec::with_capacity(tol.doublings);
    let mut y = y_check;
    for _ in 0..tol.doublings {
        window_integrals.push(quad::quad(abs_dev, y, 2.0 * y, tol.quad_rel_tol, 1e-300));
        y *= 2.0;
    }
    // Divergence is declared when some three consecutive doublings fail to
    // shrink the window integral by the required factor.
    let negligible = 1e-14 * deviation_integral.max(f64::MIN_POSITIVE);
    let integrable = window_integrals
        .windows(4)
        .all(|w| w[3] <= negligible || w[3] * tol.window_decay <= w[0]);
    AssumptionReport {
        lipschitz_estimate: lip,
        lipschitz_ok: lip.is_finite(),
        deviation_integral,
        y_check,
        window_integrals,
        integrable,
        positivity_floor: profile.mu_lower(),
        tolerances: tol,
    }
}

/// Angle helper: value of `Arg` for a positive pair lies in `(0, π/2)`.
pub fn arg_of(rho: f64, mu: f64) -> f64 {
    debug_assert!(rho > 0.0 && mu > 0.0);
    mu.atan2(rho).clamp(0.0, FRAC_PI_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_6};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn eval_examples() {
        let c = MaterialProfile::constant(1.0, 1.0).unwrap();
        assert_eq!(c.eval(3.0).unwrap(), (1.0, 1.0));
        let e = MaterialProfile::exp_density(1.0, 5.0, 1.0).unwrap();
        assert_eq!(e.eval(0.0).unwrap(), (6.0, 1.0));
        let t = MaterialProfile::from_spec(&ProfileSpec::Table {
            rows: Some(vec![[0.0, 2.0, 1.0], [1.0, 1.0, 1.0]]),
            path: None,
            rho_inf: Some(1.0),
            mu_inf: None,
        })
        .unwrap();
        assert_eq!(t.eval(2.0).unwrap(), (1.0, 1.0));
        assert_eq!(t.eval(0.0).unwrap(), (2.0, 1.0));
    }

    #[test]
    fn eval_rejects_negative_depth() {
        let c = MaterialProfile::constant(1.0, 1.0).unwrap();
        assert!(matches!(c.eval(-0.1), Err(Error::NegativeDepth(_))));
        assert!(matches!(c.gamma(ParamPoint { k: 1.0, omega: 1.0 }, -1.0), Err(Error::NegativeDepth(_))));
    }

    #[test]
    fn table_validation() {
        assert!(MaterialProfile::table(&[[0.0, 2.0, 1.0], [1.0, -1.0, 1.0]]).is_err());
        assert!(MaterialProfile::table(&[[0.0, 2.0, 1.0], [0.0, 1.0, 1.0]]).is_err());
        let jump = MaterialProfile::from_spec(&ProfileSpec::Table {
            rows: Some(vec![[0.0, 2.0, 1.0], [1.0, 1.5, 1.0]]),
            path: None,
            rho_inf: Some(1.0),
            mu_inf: None,
        });
        assert!(jump.is_err());
    }

    #[test]
    fn parse_table_reports_line_numbers() {
        let err = parse_table("# y rho mu\n0 2 1\n1, 1.5, 1\n0.5 1 1\n").unwrap_err();
        assert!(err.to_string().contains("line 4"), "{err}");
        let rows = parse_table("0 2 1\n\n1 1 1 # tail\n").unwrap();
        assert_eq!(rows, vec![[0.0, 2.0, 1.0], [1.0, 1.0, 1.0]]);
    }

    #[test]
    fn gamma_examples() {
        let c = MaterialProfile::constant(1.0, 1.0).unwrap();
        assert_eq!(c.gamma(ParamPoint::new(1.0, 2.0).unwrap(), 7.0).unwrap(), 1.0);
        assert_eq!(c.gamma(ParamPoint::new(1.0, 1.0).unwrap(), 0.3).unwrap(), 0.0);
        let e = MaterialProfile::exp_density(1.0, 5.0, 1.0).unwrap();
        assert_eq!(e.gamma(ParamPoint::new(1.0, 0.5).unwrap(), 0.0).unwrap(), 2.0);
    }

    #[test]
    fn coefficient_field_examples() {
        let c = MaterialProfile::constant(1.0, 1.0).unwrap();
        let f = c.coefficient_field(ParamPoint::new(4.0, 1.0).unwrap());
        assert_eq!(f.gamma_inf, -3.0);
        assert!(close(f.lambda.unwrap(), 3f64.sqrt(), 1e-15));
        assert_eq!(f.beta(2.0).unwrap(), 0.0);
        assert!(f.sign_changes.is_empty());

        let e = MaterialProfile::exp_density(1.0, 5.0, 1.0).unwrap();
        let f = e.coefficient_field(ParamPoint::new(1.0, 0.5).unwrap());
        assert_eq!(f.gamma_inf, -0.5);
        for y in [0.0, 0.7, 3.0] {
            assert!(close(f.beta(y).unwrap(), 2.5 * (-y).exp(), 1e-15));
        }
        assert_eq!(f.sign_changes.len(), 1);
        let (a, b) = f.sign_changes[0];
        assert!(a <= 5f64.ln() && 5f64.ln() <= b);

        let f = c.coefficient_field(ParamPoint::new(1.0, 2.0).unwrap());
        assert_eq!(f.gamma_inf, 1.0);
        assert!(f.lambda.is_none());
    }

    #[test]
    fn arg_examples() {
        let c = MaterialProfile::constant(1.0, 1.0).unwrap();
        assert!(close(c.arg_a(0.0).unwrap(), FRAC_PI_4, 1e-15));
        assert!(close(arg_of(3f64.sqrt(), 1.0), FRAC_PI_6, 1e-15));
        let e = MaterialProfile::exp_density(1.0, 5.0, 1.0).unwrap();
        for y in [0.0, 1.0, 10.0, 30.0] {
            assert!(e.arg_a(y).unwrap() < e.arg_a_inf());
            assert!(e.arg_excess(y).unwrap() < 0.0);
        }
    }

    #[test]
    fn classify_examples() {
        let soft = MaterialProfile::exp_density(1.0, -0.5, 1.0).unwrap();
        let c = soft.classify(&ScanGrid::for_profile(&soft));
        assert!(c.global_negative);
        assert_eq!(c.monotonicity_at_inf, TailMonotonicity::Negative);
        assert_eq!(c.min_mu_over_rho, 1.0);

        let e = MaterialProfile::exp_density(1.0, 5.0, 1.0).unwrap();
        let c = e.classify(&ScanGrid::for_profile(&e));
        assert!(!c.global_negative);
        assert_eq!(c.monotonicity_at_inf, TailMonotonicity::Positive);
        assert!(close(c.min_mu_over_rho, 1.0 / 6.0, 1e-14));
        assert!(c.argmin_depth.unwrap() < 1e-9);
        assert!(!c.coarse_grid_warning);

        let k = MaterialProfile::constant(2.0, 3.0).unwrap();
        let c = k.classify(&ScanGrid::for_profile(&k));
        assert!(c.global_negative);
        assert_eq!(c.monotonicity_at_inf, TailMonotonicity::Equal);
        assert!(c.admissible_interval(1.0).is_empty());
    }

    #[test]
    fn admissible_interval_examples() {
        let k = MaterialProfile::constant(1.0, 1.0).unwrap();
        let i = k.classify(&ScanGrid::for_profile(&k)).admissible_interval(1.0);
        assert_eq!((i.lo, i.hi), (1.0, 1.0));
        assert!(i.is_empty());

        let e = MaterialProfile::exp_density(1.0, 5.0, 1.0).unwrap();
        let i = e.classify(&ScanGrid::for_profile(&e)).admissible_interval(1.0);
        assert!(close(i.lo, 1.0 / 6.0, 1e-14) && i.hi == 1.0);

        let p = MaterialProfile::power_density(1.0, 3.0, 1.5).unwrap();
        let i = p.classify(&ScanGrid::for_profile(&p)).admissible_interval(4.0);
        assert!(close(i.lo, 1.0, 1e-14) && i.hi == 4.0);
    }

    #[test]
    fn limit_gamma_hat_examples() {
        let e = MaterialProfile::exp_density(1.0, 5.0, 1.0).unwrap();
        assert!(close(e.limit_gamma_hat(2.0).unwrap(), 5.0 * (-2f64).exp(), 1e-15));
        let c = MaterialProfile::constant(1.0, 1.0).unwrap();
        assert_eq!(c.limit_gamma_hat(2.0).unwrap(), 0.0);
        let m = MaterialProfile::exp_modulus(1.0, 1.0, 1.0).unwrap();
        assert!(close(m.limit_gamma_hat(1.5).unwrap(), -(-1.5f64).exp(), 1e-15));
    }

    #[test]
    fn assumption_examples() {
        let e = MaterialProfile::exp_density(1.0, 5.0, 1.0).unwrap();
        let r = e.check_assumptions();
        assert!(r.integrable && r.lipschitz_ok);
        let total = r.deviation_integral + r.window_integrals.iter().sum::<f64>();
        assert!(close(total, 5.0, 1e-9), "{total}");

        let h = MaterialProfile::power_density(1.0, 1.0, 1.0).unwrap();
        assert!(!h.check_assumptions().integrable);

        let p = MaterialProfile::power_density(1.0, 3.0, 1.5).unwrap();
        assert!(p.check_assumptions().integrable);

        let c = MaterialProfile::constant(1.0, 1.0).unwrap();
        let r = c.check_assumptions();
        assert!(r.integrable && r.lipschitz_ok);
        assert_eq!(r.deviation_integral, 0.0);
        assert_eq!(r.lipschitz_estimate, 0.0);
    }

    #[test]
    fn smoothed_layer_is_exactly_constant_beyond_ys() {
        let s = MaterialProfile::smoothed_layer(2.0, 1.0, 1.0, 1.0, 2.0, 0.5).unwrap();
        assert_eq!(s.eval(0.0).unwrap(), (2.0, 1.0));
        assert_eq!(s.eval(1.5).unwrap(), (2.0, 1.0));
        assert_eq!(s.eval(2.0).unwrap(), (1.0, 1.0));
        assert_eq!(s.eval(9.0).unwrap(), (1.0, 1.0));
        let (rho, _) = s.eval(1.75).unwrap();
        assert!(close(rho, 1.5, 1e-15));
        assert_eq!(s.exact_tail_from(), Some(2.0));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn any_profile() -> impl Strategy<Value = MaterialProfile> {
            prop_oneof![
                (0.5f64..2.0, -0.4f64..5.0, 0.2f64..3.0).prop_map(|(r, dr, d)| MaterialProfile::exp_density(r, dr * r, d).unwrap()),
                (0.5f64..2.0, -0.4f64..3.0, 0.2f64..3.0).prop_map(|(m, dm, d)| MaterialProfile::exp_modulus(m, dm * m, d).unwrap()),
                (0.5f64..2.0, 0.0f64..4.0, 1.1f64..3.0).prop_map(|(r, c, p)| MaterialProfile::power_density(r, c, p).unwrap()),
                (0.5f64..3.0, 0.5f64..3.0, 0.5f64..3.0, 0.5f64..3.0, 0.5f64..3.0)
                    .prop_map(|(r1, m1, rs, ms, ys)| MaterialProfile::smoothed_layer(r1, m1, rs, ms, ys, 0.5 * ys).unwrap()),
            ]
        }

        proptest! {
            #[test]
            fn gamma_identity_and_sign_rule(p in any_profile(), k in 0.1f64..50.0, w in 0.05f64..1.5, y in 0.0f64..20.0) {
                let a = ParamPoint::new(k, w * k).unwrap();
                let (rho, mu) = p.eval(y).unwrap();
                prop_assert_eq!(p.gamma(a, y).unwrap(), a.omega * rho - a.k * mu);
                let arg_a = p.arg_a(y).unwrap();
                let g = p.gamma(a, y).unwrap();
                if arg_a < a.arg() - 1e-12 { prop_assert!(g > 0.0); }
                if arg_a > a.arg() + 1e-12 { prop_assert!(g < 0.0); }
            }

            #[test]
            fn interval_scales_linearly(p in any_profile(), k in 0.1f64..10.0, c in 0.1f64..10.0) {
                let class = p.classify(&ScanGrid::for_profile(&p));
                let i1 = class.admissible_interval(k);
                let i2 = class.admissible_interval(c * k);
                prop_assert!((i2.lo - c * i1.lo).abs() <= 1e-12 * i2.lo.abs());
                prop_assert!((i2.hi - c * i1.hi).abs() <= 1e-12 * i2.hi.abs());
                prop_assert!(class.min_mu_over_rho <= class.mu_over_rho_inf);
            }

            #[test]
            fn limit_gamma_hat_vanishes(p in any_profile()) {
                let far = 1e3 * p.y_max_data().max(1.0);
                let near = p.limit_gamma_hat(0.0).unwrap().abs().max(1e-300);
                prop_assert!(p.limit_gamma_hat(far).unwrap().abs() <= 1e-6 * near.max(1.0));
            }
        }
    }
}
