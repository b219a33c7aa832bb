//! JSON reports, CSV mode tables and SVG dispersion plots.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::dispersion::{Branch, BranchTrace, Mode, ModeSearch, OscillationReport};
use crate::error::{Error, Result};
use crate::oracle::Fixture;
use crate::profile::{AssumptionReport, ProfileClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Nonexistence,
    InvalidInput,
    SolverError,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub k: f64,
    #[serde(rename = "K")]
    pub big_k: f64,
    /// `+∞` is written as `null`.
    pub estimate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleComparison {
    pub fixture_method: crate::oracle::OracleMethod,
    #[serde(rename = "K")]
    pub k: f64,
    pub oracle_count: usize,
    pub solver_count: usize,
    /// Largest `|Ω_solver − Ω_oracle| / Ω_oracle` over paired modes.
    pub max_rel_diff: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    /// Seconds since the Unix epoch; the only field that varies between
    /// identical runs.
    pub timestamp: u64,
    pub status: Status,
    pub verdict: Option<String>,
    pub error: Option<String>,
    pub config: Option<RunConfig>,
    pub classification: Option<ProfileClass>,
    pub assumptions: Option<AssumptionReport>,
    pub modes: Vec<ModeSearch>,
    pub branches: Option<BranchTrace>,
    pub estimates: Vec<Estimate>,
    pub oscillation: Option<OscillationReport>,
    pub oracle_comparison: Vec<OracleComparison>,
}

impl Report {
    pub fn new(config: Option<RunConfig>) -> Self {
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Report {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            timestamp,
            status: Status::Ok,
            verdict: None,
            error: None,
            config,
            classification: None,
            assumptions: None,
            modes: Vec::new(),
            branches: None,
            estimates: Vec::new(),
            oscillation: None,
            oracle_comparison: Vec::new(),
        }
    }

    /// All modes in the report, sorted by `(K, index)`.
    pub fn all_modes(&self) -> Vec<Mode> {
        let mut out: Vec<Mode> = self.modes.iter().flat_map(|s| s.modes.iter().copied()).collect();
        if let Some(t) = &self.branches {
            out.extend(t.searches.iter().flat_map(|s| s.modes.iter().copied()));
        }
        out.sort_by(|a, b| a.k.total_cmp(&b.k).then(a.index.cmp(&b.index)));
        out.dedup();
        out
    }

    pub fn compare_fixtures(&mut self, fixtures: &[Fixture]) {
        let Some(cfg) = &self.config else { return };
        let mut searches: Vec<&ModeSearch> = self.modes.iter().collect();
        if let Some(t) = &self.branches {
            searches.extend(t.searches.iter());
        }
        for f in fixtures.iter().filter(|f| f.profile == cfg.profile) {
            let Some(s) = searches.iter().find(|s| (s.k - f.k).abs() <= 1e-12 * f.k) else { continue };
            let paired = s.modes.len().min(f.oracle.omegas.len());
            let max_rel_diff = (paired > 0).then(|| {
                s.modes
                    .iter()
                    .zip(&f.oracle.omegas)
                    .map(|(m, w)| ((m.omega - w) / w).abs())
                    .fold(0.0, f64::max)
            });
            self.oracle_comparison.push(OracleComparison {
                fixture_method: f.oracle.method,
                k: f.k,
                oracle_count: f.oracle.omegas.len(),
                solver_count: s.modes.len(),
                max_rel_diff,
            });
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// One CSV row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeRow {
    pub k: f64,
    pub omega: f64,
    #[serde(rename = "K")]
    pub big_k: f64,
    #[serde(rename = "Omega")]
    pub big_omega: f64,
    pub mode_index: usize,
    pub residual: f64,
    pub y_bar: f64,
    pub y_tail: f64,
}

impl From<&Mode> for ModeRow {
    fn from(m: &Mode) -> Self {
        ModeRow {
            k: m.wavenumber(),
            omega: m.frequency(),
            big_k: m.k,
            big_omega: m.omega,
            mode_index: m.index,
            residual: m.residual,
            y_bar: m.y_bar,
            y_tail: m.y_tail,
        }
    }
}

pub fn write_csv(path: &Path, modes: &[Mode]) -> Result<()> {
    let io = |e: csv::Error| Error::Config(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    if modes.is_empty() {
        w.write_record(["k", "omega", "K", "Omega", "mode_index", "residual", "y_bar", "y_tail"]).map_err(io)?;
    }
    for m in modes {
        w.serialize(ModeRow::from(m)).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub fn read_csv(path: &Path) -> Result<Vec<ModeRow>> {
    let io = |e: csv::Error| Error::Config(format!("{}: {e}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(io)?;
    r.deserialize().map(|row| row.map_err(io)).collect()
}

/// Bounds of the plot: wavenumbers and the two bounding slopes.
#[derive(Debug, Clone, Copy)]
pub struct PlotFrame {
    pub k_min: f64,
    pub k_max: f64,
    /// `√(μ̌/ρ̌)`.
    pub lower_slope: f64,
    /// `√(μ_∞/ρ_∞)`.
    pub cutoff_slope: f64,
}

const W: f64 = 640.0;
const H: f64 = 480.0;
const PAD: f64 = 60.0;

fn nice_ticks(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    let raw = span / n as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|s| s * mag).find(|&s| s >= raw).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

/// ω(k) branches with the cutoff line and the lower bound line.
pub fn render_svg(branches: &[Branch], frame: &PlotFrame) -> String {
    let x0 = 0.0;
    let x1 = frame.k_max * 1.05;
    let y0 = 0.0;
    let y1 = frame.cutoff_slope * x1 * 1.05;
    let sx = |k: f64| PAD + (k - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |w: f64| H - PAD - (w - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<g stroke="black" stroke-width="1"><line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/><line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}"/></g>"#,
        sx(x0), sy(y0), sx(x1), sy(y0), sx(x0), sy(y0), sx(x0), sy(y1)
    );
    let _ = writeln!(s, r#"<g font-family="sans-serif" font-size="11" fill="black">"#);
    for t in nice_ticks(x0, x1, 8) {
        let _ = writeln!(s, r#"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="black"/><text x="{0:.2}" y="{3:.2}" text-anchor="middle">{4}</text>"#, sx(t), sy(y0), sy(y0) + 4.0, sy(y0) + 16.0, t);
    }
    for t in nice_ticks(y0, y1, 8) {
        let _ = writeln!(s, r#"<line x1="{0:.2}" y1="{2:.2}" x2="{1:.2}" y2="{2:.2}" stroke="black"/><text x="{3:.2}" y="{4:.2}" text-anchor="end">{5}</text>"#, sx(x0) - 4.0, sx(x0), sy(t), sx(x0) - 6.0, sy(t) + 4.0, t);
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">k</text>"#, W / 2.0, H - 15.0);
    let _ = writeln!(s, r#"<text x="15" y="{:.2}" text-anchor="middle" transform="rotate(-90 15 {:.2})">omega</text>"#, H / 2.0, H / 2.0);
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r#"<line class="cutoff" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="red" stroke-dasharray="6 3"/>"#,
        sx(0.0), sy(0.0), sx(x1), sy(frame.cutoff_slope * x1)
    );
    let _ = writeln!(
        s,
        r#"<line class="lower-bound" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="2 3"/>"#,
        sx(0.0), sy(0.0), sx(x1), sy(frame.lower_slope * x1)
    );
    for b in branches {
        let pts: Vec<String> = b.points().iter().map(|&(k, w)| format!("{:.2},{:.2}", sx(k), sy(w))).collect();
        let _ = writeln!(
            s,
            r#"<polyline class="branch" data-index="{}" fill="none" stroke="steelblue" stroke-width="1.5" points="{}"/>"#,
            b.index,
            pts.join(" ")
        );
    }
    s.push_str("</svg>\n");
    s
}
