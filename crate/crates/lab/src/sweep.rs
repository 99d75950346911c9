//! Parameter sweeps over `(x1, p)` grids, their CSV table and an SVG
//! heatmap.
//!
//! Every cell reuses the sweep seed, so trial `i` of each cell draws from
//! the same stream (common random numbers across cells).

use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;
use stubborn_usd_core::engine::{
    default_max_interactions, run_indexed_trial, AbsorptionResult, BatchSummary, TimeStats, TrialSpec,
};
use stubborn_usd_core::protocol::threshold;
use stubborn_usd_core::{analytics, Configuration, ProtocolParams};

use crate::error::{LabError, Result};

pub const CSV_HEADER: [&str; 17] = [
    "x1", "x2", "u", "p", "p_s", "delta_w0", "trials", "wins1", "wins2", "frozen", "timeouts",
    "medT1", "meanT1", "p95T1", "medT2", "meanT2", "p95T2",
];

/// Undecided count of every cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UndecidedSpec {
    Count(u64),
    /// Fraction of `n`, rounded to the nearest agent.
    Fraction(f64),
}

/// Stubbornness axis.
#[derive(Debug, Clone, PartialEq)]
pub enum StubbornnessAxis {
    Absolute(Vec<f64>),
    /// Offsets from the cell's threshold `1 - x1/x2`; results are clamped
    /// into `[0, 1]`.
    Offset(Vec<f64>),
}

impl StubbornnessAxis {
    fn len(&self) -> usize {
        match self {
            StubbornnessAxis::Absolute(v) | StubbornnessAxis::Offset(v) => v.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub n: u64,
    pub x1_grid: Vec<u64>,
    pub u: UndecidedSpec,
    pub p_axis: StubbornnessAxis,
    pub trials: u64,
    pub seed: u64,
    /// `None` selects the default budget for `n`.
    pub max_interactions: Option<u64>,
}

/// Cell coordinates before running.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellPlan {
    pub config: Configuration,
    pub p: f64,
    pub p_s: Option<f64>,
}

impl SweepSpec {
    pub fn undecided(&self) -> Result<u64> {
        match self.u {
            UndecidedSpec::Count(u) => Ok(u),
            UndecidedSpec::Fraction(f) if (0.0..=1.0).contains(&f) => Ok((f * self.n as f64).round() as u64),
            UndecidedSpec::Fraction(f) => Err(LabError::Invalid(format!("undecided fraction {f} outside [0, 1]"))),
        }
    }

    /// All cells in output order: `x1` outer, stubbornness inner.
    pub fn plan(&self) -> Result<Vec<CellPlan>> {
        if self.x1_grid.is_empty() || self.p_axis.len() == 0 {
            return Err(LabError::Invalid("sweep grids must be non-empty".into()));
        }
        if self.trials == 0 {
            return Err(LabError::Invalid("trials must be at least 1".into()));
        }
        let u = self.undecided()?;
        let mut cells = Vec::with_capacity(self.x1_grid.len() * self.p_axis.len());
        for &x1 in &self.x1_grid {
            let x2 = self
                .n
                .checked_sub(x1)
                .and_then(|r| r.checked_sub(u))
                .ok_or_else(|| LabError::Invalid(format!("x1 = {x1} and u = {u} exceed n = {}", self.n)))?;
            let config = Configuration::new(x1, x2, u)?;
            let p_s = threshold(x1, x2);
            let ps: Vec<f64> = match &self.p_axis {
                StubbornnessAxis::Absolute(v) => v.clone(),
                StubbornnessAxis::Offset(v) => {
                    let base = p_s.ok_or_else(|| {
                        LabError::Invalid(format!("threshold undefined for x2 = 0 (x1 = {x1})"))
                    })?;
                    v.iter().map(|d| (base + d).clamp(0.0, 1.0)).collect()
                }
            };
            for p in ps {
                ProtocolParams::new(p)?;
                cells.push(CellPlan { config, p, p_s });
            }
        }
        Ok(cells)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub x1: u64,
    pub x2: u64,
    pub u: u64,
    pub p: f64,
    pub p_s: Option<f64>,
    pub delta_w0: f64,
    pub summary: BatchSummary,
}

impl SweepCell {
    pub fn win1_fraction(&self) -> f64 {
        self.summary.wins1 as f64 / self.summary.trials as f64
    }

    pub fn win2_fraction(&self) -> f64 {
        self.summary.wins2 as f64 / self.summary.trials as f64
    }

    fn record(&self) -> Vec<String> {
        let s = &self.summary;
        let stats = |t: &Option<TimeStats>| match t {
            Some(t) => [t.median.to_string(), t.mean.to_string(), t.p95.to_string()],
            None => [String::new(), String::new(), String::new()],
        };
        let mut row = vec![
            self.x1.to_string(),
            self.x2.to_string(),
            self.u.to_string(),
            self.p.to_string(),
            self.p_s.map(|v| v.to_string()).unwrap_or_default(),
            self.delta_w0.to_string(),
            s.trials.to_string(),
            s.wins1.to_string(),
            s.wins2.to_string(),
            s.frozen.to_string(),
            s.timeouts.to_string(),
        ];
        row.extend(stats(&s.winner1_times));
        row.extend(stats(&s.winner2_times));
        row
    }
}

/// Runs every cell on the current rayon pool.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepCell>> {
    let plan = spec.plan()?;
    let budget = spec.max_interactions.unwrap_or_else(|| default_max_interactions(spec.n));
    let specs: Vec<TrialSpec> = plan
        .iter()
        .map(|cell| TrialSpec {
            initial: cell.config,
            params: ProtocolParams { p: cell.p, self_pairs: true },
            seed: spec.seed,
            max_interactions: budget,
            record_stride: 0,
        })
        .collect();
    for s in &specs {
        s.validate()?;
    }
    let trials = spec.trials;
    let flat: Vec<AbsorptionResult> = (0..specs.len() as u64 * trials)
        .into_par_iter()
        .map(|k| {
            let s = &specs[(k / trials) as usize];
            run_indexed_trial(s, k % trials).map(|(r, _)| r)
        })
        .collect::<stubborn_usd_core::Result<_>>()?;
    Ok(plan
        .iter()
        .zip(flat.chunks(trials as usize))
        .map(|(cell, results)| SweepCell {
            x1: cell.config.x1,
            x2: cell.config.x2,
            u: cell.config.u,
            p: cell.p,
            p_s: cell.p_s,
            delta_w0: analytics::weighted_bias(&cell.config, cell.p),
            summary: BatchSummary::from_results(results),
        })
        .collect())
}

pub fn write_csv<W: Write>(cells: &[SweepCell], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for cell in cells {
        w.write_record(cell.record())?;
    }
    w.flush()?;
    Ok(())
}

const SVG_W: f64 = 640.0;
const SVG_H: f64 = 480.0;
const MARGIN: f64 = 60.0;

fn color(win1: f64) -> String {
    // red (Opinion 2) through yellow to green (Opinion 1)
    let w = win1.clamp(0.0, 1.0);
    let (r, g) = if w < 0.5 { (220.0, 40.0 + 360.0 * w) } else { (220.0 - 360.0 * (w - 0.5), 220.0) };
    format!("#{:02x}{:02x}{:02x}", r.round() as u8, g.round() as u8, 60)
}

/// Heatmap of the Opinion-1 win fraction over `(x1, p)` with the threshold
/// curve `p = 1 - x1/x2` drawn as a polyline.
pub fn render_svg(cells: &[SweepCell]) -> String {
    let mut xs: Vec<u64> = cells.iter().map(|c| c.x1).collect();
    xs.sort_unstable();
    xs.dedup();
    let cols = xs.len().max(1) as f64;
    let rows = (cells.len() as f64 / cols).max(1.0);
    let plot_w = SVG_W - 2.0 * MARGIN;
    let plot_h = SVG_H - 2.0 * MARGIN;
    let cell_w = plot_w / cols;
    let cell_h = (plot_h / rows).max(2.0);
    let col_of = |x1: u64| xs.iter().position(|&v| v == x1).unwrap_or(0) as f64;
    let px = |col: f64| MARGIN + (col + 0.5) * cell_w;
    let py = |p: f64| MARGIN + (1.0 - p) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" viewBox="0 0 {SVG_W} {SVG_H}">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(s, r#"<g class="cells">"#);
    for cell in cells {
        let cx = px(col_of(cell.x1));
        let cy = py(cell.p);
        let _ = writeln!(
            s,
            r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="{}"><title>x1={} p={} win1={}</title></rect>"#,
            cx - cell_w / 2.0,
            cy - cell_h / 2.0,
            cell_w,
            cell_h,
            color(cell.win1_fraction()),
            cell.x1,
            cell.p,
            cell.win1_fraction()
        );
    }
    let _ = writeln!(s, "</g>");
    let mut points = Vec::new();
    let mut seen = Vec::new();
    for cell in cells {
        if seen.contains(&cell.x1) {
            continue;
        }
        seen.push(cell.x1);
        if let Some(ps) = cell.p_s {
            points.push(format!("{:.3},{:.3}", px(col_of(cell.x1)), py(ps.clamp(0.0, 1.0))));
        }
    }
    let _ = writeln!(
        s,
        r#"<polyline class="threshold" points="{}" fill="none" stroke="black" stroke-width="2"/>"#,
        points.join(" ")
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">x1</text>"#,
        SVG_W / 2.0,
        SVG_H - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" font-size="14" transform="rotate(-90 15 {})">p</text>"#,
        SVG_H / 2.0,
        SVG_H / 2.0
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> SweepSpec {
        SweepSpec {
            n: 40,
            x1_grid: vec![8, 12, 16],
            u: UndecidedSpec::Count(4),
            p_axis: StubbornnessAxis::Offset(vec![-0.2, 0.0, 0.2]),
            trials: 20,
            seed: 7,
            max_interactions: None,
        }
    }

    #[test]
    fn row_count_is_grid_product() {
        let cells = rayon::ThreadPoolBuilder::new()
            .num_threads(2)
            .build()
            .unwrap()
            .install(|| run_sweep(&spec()))
            .unwrap();
        assert_eq!(cells.len(), 9);
        for c in &cells {
            let s = &c.summary;
            assert_eq!(s.wins1 + s.wins2 + s.frozen + s.timeouts, s.trials);
            assert_eq!(c.x1 + c.x2 + c.u, 40);
        }
    }

    #[test]
    fn offsets_are_relative_and_clamped() {
        let mut sp = spec();
        sp.x1_grid = vec![4];
        sp.p_axis = StubbornnessAxis::Offset(vec![-0.9, 0.1, 0.9]);
        let plan = sp.plan().unwrap();
        // x2 = 32, threshold 0.875
        assert_eq!(plan[0].p, 0.0);
        assert!((plan[1].p - 0.975).abs() < 1e-12);
        assert_eq!(plan[2].p, 1.0);
    }

    #[test]
    fn invalid_grids() {
        let mut sp = spec();
        sp.x1_grid.clear();
        assert!(sp.plan().is_err());
        let mut sp = spec();
        sp.x1_grid = vec![38];
        assert!(sp.plan().is_err());
        let mut sp = spec();
        sp.p_axis = StubbornnessAxis::Absolute(vec![1.5]);
        assert!(sp.plan().is_err());
        let mut sp = spec();
        sp.u = UndecidedSpec::Fraction(1.2);
        assert!(sp.plan().is_err());
        let mut sp = spec();
        sp.x1_grid = vec![36];
        assert!(sp.plan().is_err(), "threshold undefined at x2 = 0");
    }

    #[test]
    fn csv_header_and_rows() {
        let cells = run_sweep(&spec()).unwrap();
        let mut buf = Vec::new();
        write_csv(&cells, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "x1,x2,u,p,p_s,delta_w0,trials,wins1,wins2,frozen,timeouts,medT1,meanT1,p95T1,medT2,meanT2,p95T2"
        );
        assert_eq!(lines.count(), 9);
    }

    #[test]
    fn svg_has_threshold_polyline() {
        let cells = run_sweep(&spec()).unwrap();
        let svg = render_svg(&cells);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains(r#"<polyline class="threshold""#));
        assert_eq!(svg.matches("<title>").count(), 9);
    }
}
