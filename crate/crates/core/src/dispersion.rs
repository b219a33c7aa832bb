//! Mode search.
//!
//! `Φ(Ω) = φ⁰(ȳ; Ω) − φ⁺(ȳ; Ω)` is the lifted angle mismatch at the matching
//! depth. A mode of index `m` sits where `Φ = (m−1)π`. `Φ` increases with Ω,
//! and `Φ > −π` always, so the number of modes below Ω is
//! `N(Ω) = max(0, ⌊Φ/π⌋ + 1)`.
//!
//! Whether `Φ(Ω)` lies above or below a given multiple of π does not depend
//! on ȳ: two solutions of the phase equation never cross, and the equation
//! is π-periodic in φ. Brackets therefore stay valid when ȳ moves with Ω;
//! each bisection still uses a single ȳ, taken from its upper end.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decay::{self, TailOptions};
use crate::error::{Error, Result};
use crate::liouville::StandardForm;
use crate::medium::Medium;
use crate::profile::{AdmissibleInterval, MaterialProfile, ParamPoint, ProfileClass, ScanGrid};
use crate::prufer::{self, IntegratorSettings};
use crate::quad;

/// Reason attached to empty results for globally negative profiles.
pub const NONEXISTENCE_GLOBAL_NEGATIVE: &str =
    "nonexistence: global negative monotonicity (Arg a(y) >= Arg a_inf everywhere)";

/// Depth coordinate the shooting runs in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    #[default]
    Physical,
    /// Liouville coordinate `τ = ∫ 1/μ`, where the operator has unit stiffness.
    Standard,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub max_modes: usize,
    pub omega_grid_n: usize,
    /// Relative bisection width in Ω.
    pub root_tol: f64,
    /// Angle residual `|Φ − (m−1)π|` accepted at a root.
    pub residual_tol: f64,
    pub integrator: IntegratorSettings,
    pub tail: TailOptions,
    pub frame: Frame,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_modes: 64,
            omega_grid_n: 256,
            root_tol: 1e-10,
            residual_tol: 1e-8,
            integrator: IntegratorSettings::default(),
            tail: TailOptions::default(),
            frame: Frame::Physical,
        }
    }
}

/// A matched parameter pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "Omega")]
    pub omega: f64,
    /// 1 for the fundamental mode; the matched solution has `index − 1` zeros.
    pub index: usize,
    pub phi_surface: f64,
    pub phi_decay: f64,
    pub residual: f64,
    /// Matching depth (physical depth).
    pub y_bar: f64,
    /// Tail start used at the root (physical depth).
    pub y_tail: f64,
}

impl Mode {
    /// Wavenumber `k = √K`.
    pub fn wavenumber(&self) -> f64 {
        self.k.sqrt()
    }

    /// Angular frequency `ω = √Ω`.
    pub fn frequency(&self) -> f64 {
        self.omega.sqrt()
    }

    /// Checks the containment and angle-window invariants.
    pub fn validate(&self, interval: &AdmissibleInterval, residual_tol: f64) -> std::result::Result<(), String> {
        if !interval.contains_strictly(self.omega) {
            return Err(format!("Omega {} outside ({}, {})", self.omega, interval.lo, interval.hi));
        }
        if !(self.residual <= residual_tol) {
            return Err(format!("residual {} above {residual_tol}", self.residual));
        }
        let m = self.index as f64;
        let slack = residual_tol.max(1e-12);
        if self.phi_surface < (m - 0.5) * PI - slack || self.phi_surface > m * PI + slack {
            return Err(format!("surface angle {} outside [(m-1/2)pi, m pi] for m = {}", self.phi_surface, self.index));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSearch {
    #[serde(rename = "K")]
    pub k: f64,
    pub interval: AdmissibleInterval,
    pub modes: Vec<Mode>,
    /// Modes below the guarded cutoff, including any beyond `max_modes`.
    pub total_count: usize,
    pub truncated: bool,
    /// Why the result is empty without solving, if it is.
    pub reason: Option<String>,
    /// Numerical irregularities met during the search.
    pub flags: Vec<String>,
}

/// One evaluation of the mismatch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MismatchEval {
    #[serde(rename = "Omega")]
    pub omega: f64,
    pub phi: f64,
    pub phi_surface: f64,
    pub phi_decay: f64,
    pub y_bar: f64,
    pub y_tail: f64,
}

impl MismatchEval {
    /// `N(Ω)`, the number of modes strictly below this Ω.
    pub fn count(&self) -> usize {
        if self.phi < 0.0 {
            0
        } else {
            (self.phi / PI).floor() as usize + 1
        }
    }
}

/// `Φ(Ω)` in the coordinate of `medium`, at `y_bar` when given (it must
/// carry a negative tail for `a`), else at the selected matching depth.
pub fn mismatch_at<M: Medium + ?Sized>(
    medium: &M,
    a: ParamPoint,
    y_bar: Option<f64>,
    settings: &IntegratorSettings,
    tail: &TailOptions,
) -> Result<MismatchEval> {
    let cfg = match y_bar {
        Some(y) => decay::matching_config_at(medium, a, y, tail)?,
        None => decay::matching_config(medium, a, tail)?,
    };
    let dec = decay::decaying_phase(medium, a, &cfg, settings, tail)?;
    let surf = prufer::surface_phase(medium, a, cfg.y_bar, settings)?;
    Ok(MismatchEval {
        omega: a.omega,
        phi: surf.phi - dec.state.phi,
        phi_surface: surf.phi,
        phi_decay: dec.state.phi,
        y_bar: cfg.y_bar,
        y_tail: dec.y_tail,
    })
}

/// `Φ(Ω)` for a profile in physical depth.
pub fn mismatch(profile: &MaterialProfile, k: f64, omega: f64, opts: &SolverOptions) -> Result<f64> {
    let a = ParamPoint::new(k, omega)?;
    Ok(mismatch_at(profile, a, None, &opts.integrator, &opts.tail)?.phi)
}

/// Reusable solver for one profile: caches the classification and, for the
/// standard frame, the Liouville map.
pub struct Solver<'a> {
    profile: &'a MaterialProfile,
    class: ProfileClass,
    standard: Option<StandardForm<'a>>,
    opts: SolverOptions,
}

impl<'a> Solver<'a> {
    pub fn new(profile: &'a MaterialProfile, opts: SolverOptions) -> Result<Self> {
        let class = profile.classify(&ScanGrid::for_profile(profile));
        let standard = match opts.frame {
            Frame::Physical => None,
            Frame::Standard => Some(StandardForm::new(profile)?),
        };
        Ok(Solver { profile, class, standard, opts })
    }

    pub fn class(&self) -> &ProfileClass {
        &self.class
    }

    pub fn options(&self) -> &SolverOptions {
        &self.opts
    }

    pub fn medium(&self) -> &dyn Medium {
        match &self.standard {
            Some(s) => s,
            None => self.profile,
        }
    }

    fn physical_depth(&self, x: f64) -> f64 {
        match &self.standard {
            Some(s) => s.map.y_of_tau(x).unwrap_or(x),
            None => x,
        }
    }

    /// Upper end of the scanned range: the cutoff less the guard band.
    pub fn guarded_cutoff(&self, k: f64) -> f64 {
        k * self.class.mu_over_rho_inf * (1.0 - self.opts.tail.threshold_guard)
    }

    fn eval(&self, a: ParamPoint, y_bar: Option<f64>, settings: &IntegratorSettings) -> Result<MismatchEval> {
        mismatch_at(self.medium(), a, y_bar, settings, &self.opts.tail)
    }

    /// `Φ` at `(k, omega)` with automatic matching depth.
    pub fn mismatch(&self, k: f64, omega: f64) -> Result<MismatchEval> {
        self.eval(ParamPoint::new(k, omega)?, None, &self.opts.integrator)
    }

    /// `Φ` at `(k, omega)` matched at physical depth `y_bar`.
    pub fn mismatch_at_depth(&self, k: f64, omega: f64, y_bar: f64) -> Result<MismatchEval> {
        let x = self.medium().to_coordinate(y_bar);
        self.eval(ParamPoint::new(k, omega)?, Some(x), &self.opts.integrator)
    }

    /// `Φ` at several Ω sharing one matching depth (that of the largest Ω).
    pub fn mismatch_common(&self, k: f64, omegas: &[f64]) -> Result<Vec<MismatchEval>> {
        let top = omegas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let y_bar = decay::select_matching_point(self.medium(), ParamPoint::new(k, top)?, &self.opts.tail)?;
        omegas
            .par_iter()
            .map(|&w| self.eval(ParamPoint::new(k, w)?, Some(y_bar), &self.opts.integrator))
            .collect()
    }

    fn scan_grid(&self, interval: &AdmissibleInterval) -> Vec<f64> {
        let (lo, hi) = (interval.lo, interval.hi);
        let n = self.opts.omega_grid_n.max(2);
        let top = hi * (1.0 - self.opts.tail.threshold_guard);
        let width = hi - lo;
        let mut grid: Vec<f64> = (0..n).map(|i| lo + width * (i as f64 + 1e-6) / n as f64).collect();
        let mut gap = width / n as f64;
        while hi - gap < top {
            gap *= 0.5;
            grid.push(hi - gap);
        }
        grid.push(top);
        grid.retain(|&w| w > lo && w <= top);
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        grid
    }

    fn scan(&self, k: f64, grid: &[f64], settings: &IntegratorSettings) -> Result<Vec<MismatchEval>> {
        grid.par_iter().map(|&w| self.eval(ParamPoint::new(k, w)?, None, settings)).collect()
    }

    /// Number of modes below the guarded cutoff. Φ is monotone in Ω, so a
    /// single evaluation at the top of the range suffices.
    pub fn count_modes(&self, k: f64) -> Result<usize> {
        let interval = self.class.admissible_interval(k);
        let top = self.guarded_cutoff(k);
        if self.class.global_negative || interval.is_empty() || interval.lo >= top {
            return Ok(0);
        }
        Ok(self.eval(ParamPoint::new(k, top)?, None, &self.opts.integrator)?.count())
    }

    /// All modes for wavenumber² `k`, lowest first, at most `max_modes`.
    pub fn find_modes(&self, k: f64) -> Result<ModeSearch> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidParam { k, omega: f64::NAN });
        }
        let interval = self.class.admissible_interval(k);
        let mut search = ModeSearch {
            k,
            interval,
            modes: Vec::new(),
            total_count: 0,
            truncated: false,
            reason: None,
            flags: Vec::new(),
        };
        if self.class.global_negative {
            search.reason = Some(NONEXISTENCE_GLOBAL_NEGATIVE.to_string());
            return Ok(search);
        }
        if interval.is_empty() || interval.lo >= self.guarded_cutoff(k) {
            search.reason = Some(format!("nonexistence: empty admissible interval ({}, {})", interval.lo, interval.hi));
            return Ok(search);
        }

        let grid = self.scan_grid(&interval);
        let mut settings = self.opts.integrator;
        let mut evals = self.scan(k, &grid, &settings)?;
        if !counts_monotone(&evals) {
            settings = tighter(&settings);
            evals = self.scan(k, &grid, &settings)?;
            if !counts_monotone(&evals) {
                search.flags.push(format!("non-monotone mode count on the scan grid at K = {k}"));
            }
        }

        let total = evals.iter().map(MismatchEval::count).max().unwrap_or(0);
        search.total_count = total;
        let wanted = total.min(self.opts.max_modes);
        search.truncated = total > wanted;

        let brackets: Vec<(usize, usize)> = (1..=wanted)
            .filter_map(|m| {
                let i = evals.iter().position(|e| e.count() >= m)?;
                Some((m, i))
            })
            .collect();
        let refined: Vec<Result<(Mode, bool)>> = brackets
            .par_iter()
            .map(|&(m, i)| {
                let upper = evals[i];
                let lower = if i == 0 { None } else { Some(evals[i - 1]) };
                self.refine(k, m, lower, upper, &interval, &settings)
            })
            .collect();
        for r in refined {
            match r {
                Ok((mode, limited)) => {
                    if limited {
                        search.flags.push(format!(
                            "mode {} at K = {k}: angle residual {:e} limited by floating-point resolution in Omega",
                            mode.index, mode.residual
                        ));
                    }
                    search.modes.push(mode);
                }
                Err(e) => search.flags.push(e.to_string()),
            }
        }
        search.modes.sort_by(|a, b| a.omega.total_cmp(&b.omega));
        for pair in search.modes.windows(2) {
            if pair[1].omega <= pair[0].omega {
                search.flags.push(format!("modes {} and {} not separated", pair[0].index, pair[1].index));
            }
        }
        Ok(search)
    }

    fn refine(
        &self,
        k: f64,
        m: usize,
        lower: Option<MismatchEval>,
        upper: MismatchEval,
        interval: &AdmissibleInterval,
        settings: &IntegratorSettings,
    ) -> Result<(Mode, bool)> {
        let target = (m - 1) as f64 * PI;
        let y_bar = upper.y_bar;
        let mut lo = lower.map_or(interval.lo, |e| e.omega);
        let mut hi = upper.omega;
        let mut best: Option<MismatchEval> = None;
        let consider = |e: MismatchEval, best: &mut Option<MismatchEval>| {
            if best.is_none_or(|b| (e.phi - target).abs() < (b.phi - target).abs()) {
                *best = Some(e);
            }
        };
        // endpoints re-evaluated at the common ȳ
        let top = self.eval(ParamPoint::new(k, hi)?, Some(y_bar), settings)?;
        consider(top, &mut best);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let e = self.eval(ParamPoint::new(k, mid)?, Some(y_bar), settings)?;
            consider(e, &mut best);
            if e.phi > target {
                hi = mid;
            } else {
                lo = mid;
            }
            let b = best.unwrap();
            if hi - lo <= self.opts.root_tol * hi && (b.phi - target).abs() <= self.opts.residual_tol {
                break;
            }
        }
        let b = best.unwrap();
        let mode = Mode {
            k,
            omega: b.omega,
            index: m,
            phi_surface: b.phi_surface,
            phi_decay: b.phi_decay,
            residual: (b.phi - target).abs(),
            y_bar: self.physical_depth(b.y_bar),
            y_tail: self.physical_depth(b.y_tail),
        };
        // Near-surface modes at large K can leave Φ too steep for the angle
        // tolerance to be reachable; the bracket then closes at adjacent floats.
        Ok((mode, mode.residual > self.opts.residual_tol))
    }

    /// Runs [`Solver::find_modes`] over `k_grid` (values of k, not K) and
    /// links modes of equal index into branches.
    pub fn trace_branches(&self, k_grid: &[f64]) -> Result<BranchTrace> {
        if k_grid.is_empty() || k_grid.windows(2).any(|w| !(w[1] > w[0])) || !(k_grid[0] > 0.0) {
            return Err(Error::Precondition("k grid must be positive and strictly increasing".into()));
        }
        let searches: Vec<(f64, Result<ModeSearch>)> = k_grid.par_iter().map(|&kk| (kk, self.find_modes(kk * kk))).collect();
        Ok(assemble_branches(searches))
    }
}

fn tighter(s: &IntegratorSettings) -> IntegratorSettings {
    IntegratorSettings { rel_tol: s.rel_tol * 1e-2, abs_tol: s.abs_tol * 1e-2, ..*s }
}

fn counts_monotone(evals: &[MismatchEval]) -> bool {
    evals.windows(2).all(|w| w[1].count() >= w[0].count())
}

/// Modes of one index across the k-grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub index: usize,
    pub modes: Vec<Mode>,
    /// k-values past the branch onset where this mode was not obtained.
    pub gaps: Vec<f64>,
}

impl Branch {
    /// `(k, ω)` pairs.
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.modes.iter().map(|m| (m.wavenumber(), m.frequency())).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchTrace {
    pub branches: Vec<Branch>,
    pub searches: Vec<ModeSearch>,
    /// `(k, message)` for grid points whose search failed.
    pub failures: Vec<(f64, String)>,
}

fn assemble_branches(searches: Vec<(f64, Result<ModeSearch>)>) -> BranchTrace {
    let mut ok = Vec::new();
    let mut failures = Vec::new();
    let ks: Vec<f64> = searches.iter().map(|(k, _)| *k).collect();
    let mut per_k: Vec<Option<ModeSearch>> = Vec::new();
    for (k, r) in searches {
        match r {
            Ok(s) => {
                per_k.push(Some(s.clone()));
                ok.push(s);
            }
            Err(e) => {
                per_k.push(None);
                failures.push((k, e.to_string()));
            }
        }
    }
    let max_index = ok.iter().flat_map(|s| s.modes.iter().map(|m| m.index)).max().unwrap_or(0);
    let mut branches = Vec::new();
    for index in 1..=max_index {
        let mut modes = Vec::new();
        let mut gaps = Vec::new();
        let mut started = false;
        for (kk, s) in ks.iter().zip(&per_k) {
            let found = s.as_ref().and_then(|s| s.modes.iter().find(|m| m.index == index));
            match found {
                Some(m) => {
                    started = true;
                    modes.push(*m);
                }
                None => {
                    let missing = match s {
                        None => true,
                        Some(s) => s.truncated || !s.flags.is_empty(),
                    };
                    if started || missing {
                        gaps.push(*kk);
                    }
                }
            }
        }
        if !modes.is_empty() {
            branches.push(Branch { index, modes, gaps });
        }
    }
    BranchTrace { branches, searches: ok, failures }
}

/// Mode search for a single K.
pub fn find_modes(profile: &MaterialProfile, k: f64, opts: &SolverOptions) -> Result<ModeSearch> {
    Solver::new(profile, *opts)?.find_modes(k)
}

/// Branch tracing over a grid of wavenumbers k.
pub fn trace_branches(profile: &MaterialProfile, k_grid: &[f64], opts: &SolverOptions) -> Result<BranchTrace> {
    Solver::new(profile, *opts)?.trace_branches(k_grid)
}

/// `π⁻¹ ∫_0^∞ sqrt(max(γ_{A∞}, 0)/μ)` on the limit ray `A∞ = (K, Kμ_∞/ρ_∞)`:
/// the asymptotic mode count. Returns `+∞` when the window integrals do not
/// decay.
pub fn estimate_mode_count(profile: &MaterialProfile, k: f64) -> f64 {
    let ratio = profile.mu_inf() / profile.rho_inf();
    let f = |y: f64| {
        let (dr, dm) = profile.deviation(y).unwrap_or((0.0, 0.0));
        let (_, mu) = profile.eval_unchecked(y);
        // γ_{A∞} = K(ratio·ρ̂ − μ̂)
        let g = k * (ratio * dr - dm);
        (g.max(0.0) / mu).sqrt()
    };
    let core = profile.y_max_data().max(profile.exact_tail_from().unwrap_or(0.0)).max(1.0);
    let mut breaks = vec![0.0];
    if let Some(t) = profile.exact_tail_from().filter(|&t| t > 0.0 && t < core) {
        breaks.push(t);
    }
    breaks.push(core);
    let mut total: f64 = breaks.windows(2).map(|w| quad::quad(f, w[0], w[1], 1e-10, 1e-14)).sum();
    if profile.exact_tail_from().is_some() {
        return total / PI;
    }
    let mut windows: Vec<f64> = Vec::new();
    let mut y = core;
    for _ in 0..200 {
        let w = quad::quad(f, y, 2.0 * y, 1e-10, 1e-14);
        total += w;
        windows.push(w);
        if w <= 1e-14 * total.max(1e-300) || f(2.0 * y) < 1e-14 {
            return total / PI;
        }
        let n = windows.len();
        if n >= 4 && windows[n - 1] * 2.0 > windows[n - 4] {
            return f64::INFINITY;
        }
        y *= 2.0;
    }
    f64::INFINITY
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OscillationVerdict {
    Oscillatory,
    NonOscillatory,
    Inconclusive,
}

/// Partial integrals up to `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillationWindow {
    pub t: f64,
    /// `∫_0^t sqrt(max(γ̂_∞, 0)/μ)`.
    pub i: f64,
    /// Total variation of `ln(μγ̂_∞)` over the positive part of `[0, t]`.
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillationReport {
    pub verdict: OscillationVerdict,
    pub tail_positive: bool,
    pub windows: Vec<OscillationWindow>,
}

/// Oscillation criterion for the limit-case equation `(μu')' + γ̂_∞ u = 0`,
/// judged from doubling windows `t = 1, 2, 4, …, y_max`.
pub fn oscillation_test(profile: &MaterialProfile, y_max: f64) -> OscillationReport {
    let g = |y: f64| profile.limit_gamma_hat(y).unwrap_or(0.0);
    let mu = |y: f64| profile.eval_unchecked(y).1;
    let root = |y: f64| (g(y).max(0.0) / mu(y)).sqrt();
    let mut windows = Vec::new();
    let (mut i_acc, mut v_acc) = (0.0, 0.0);
    let mut last_log: Option<f64> = None;
    let mut lo = 0.0;
    let mut t = 1.0;
    let mut tail_positive = true;
    while t <= y_max * (1.0 + 1e-12) {
        i_acc += quad::quad(root, lo, t, 1e-10, 1e-300);
        let n = 256;
        let start = if lo == 0.0 { 0.0 } else { lo };
        let mut window_positive = true;
        for j in 0..=n {
            let y = start + (t - start) * j as f64 / n as f64;
            let gy = g(y);
            if gy > 0.0 {
                let l = (mu(y) * gy).ln();
                if let Some(p) = last_log {
                    v_acc += (l - p).abs();
                }
                last_log = Some(l);
            } else {
                window_positive = false;
                last_log = None;
            }
        }
        tail_positive = window_positive;
        windows.push(OscillationWindow { t, i: i_acc, v: v_acc });
        lo = t;
        t *= 2.0;
    }

    let n = windows.len();
    let verdict = if n < 5 {
        OscillationVerdict::Inconclusive
    } else if !tail_positive && windows[n - 1].i == windows[n - 2].i {
        OscillationVerdict::NonOscillatory
    } else {
        let inc: Vec<f64> = windows.windows(2).map(|w| w[1].i - w[0].i).collect();
        let m = inc.len();
        let decaying = inc[m - 1] <= 1e-14 * windows[n - 1].i.max(1e-300)
            || (inc[m - 1] * 2.0 <= inc[m - 2] && inc[m - 2] * 2.0 <= inc[m - 3]);
        let growing = inc[m - 1] >= 0.5 * inc[m - 2] && inc[m - 2] >= 0.5 * inc[m - 3] && inc[m - 1] > 0.0;
        let ratio = |w: &OscillationWindow| w.v / w.i;
        let ratio_falls = windows[n - 3..].windows(2).all(|w| ratio(&w[1]) < ratio(&w[0]));
        if decaying || !tail_positive {
            OscillationVerdict::NonOscillatory
        } else if growing && ratio_falls {
            OscillationVerdict::Oscillatory
        } else {
            OscillationVerdict::Inconclusive
        }
    };
    OscillationReport { verdict, tail_positive, windows }
}
