//! End-to-end scenarios with their verdicts, and the catenary area oracle.

mod catenoid;
mod disk;
mod heteroclinic;
mod oracle;
mod planar;
mod puncture;

pub use catenoid::{run_catenoid, CatenoidParams};
pub use disk::{run_disk_3d, DiskParams};
pub use heteroclinic::{run_heteroclinic_1d, HeteroclinicParams};
pub use oracle::{catenary_area_oracle, catenary_area_quadrature, Catenary};
pub use planar::{run_planar_interface, PlanarParams};
pub use puncture::{run_puncture_2d, PunctureParams};

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::bundle::{GaugeSection, SeamSurface};
use crate::diagnostics::{varifold, zero_parity, Topology};
use crate::energy::EnergyReport;
use crate::error::{Error, Result};
use crate::geometry::{BoundaryManifold, GridLoop};
use crate::grid::Point;
use crate::solver::{SolveOutcome, SolveStatus};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub check: String,
    pub pass: bool,
    pub value: f64,
    /// `<=`, `>=`, `==` or `in`.
    pub relation: String,
    pub bound: Vec<f64>,
}

impl Verdict {
    pub fn at_most(check: &str, value: f64, bound: f64) -> Self {
        Self::new(check, value <= bound, value, "<=", alloc::vec![bound])
    }

    pub fn at_least(check: &str, value: f64, bound: f64) -> Self {
        Self::new(check, value >= bound, value, ">=", alloc::vec![bound])
    }

    pub fn within(check: &str, value: f64, lo: f64, hi: f64) -> Self {
        Self::new(check, value >= lo && value <= hi, value, "in", alloc::vec![lo, hi])
    }

    pub fn equals(check: &str, value: f64, want: f64) -> Self {
        Self::new(check, value == want, value, "==", alloc::vec![want])
    }

    fn new(check: &str, pass: bool, value: f64, relation: &str, bound: Vec<f64>) -> Self {
        Self {
            check: check.to_string(),
            pass,
            value,
            relation: relation.to_string(),
            bound,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub eps: f64,
    pub h: f64,
    pub status: SolveStatus,
    pub steps: usize,
    pub rejected: usize,
    pub cg_iterations: usize,
    pub energy: EnergyReport,
    pub mass: f64,
}

impl StageSummary {
    pub fn from_outcome(out: &SolveOutcome) -> Self {
        Self {
            eps: out.section.eps,
            h: out.section.grid.h,
            status: out.status,
            steps: out.trace.energy.len().saturating_sub(1),
            rejected: out.trace.rejected,
            cg_iterations: out.trace.cg_iterations,
            energy: out.report.clone(),
            mass: varifold(&out.section).total_mass(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub scenario: String,
    pub dim: usize,
    pub nodes: Vec<usize>,
    pub h: f64,
    pub eps: Vec<f64>,
    pub stages: Vec<StageSummary>,
    pub oracle_area: Option<f64>,
    pub topology: Option<Topology>,
    pub metrics: BTreeMap<String, f64>,
    pub series: BTreeMap<String, Vec<f64>>,
    pub verdicts: Vec<Verdict>,
}

impl ExperimentReport {
    fn new(scenario: &str, s: &GaugeSection, eps: &[f64]) -> Self {
        Self {
            scenario: scenario.to_string(),
            dim: s.grid.dim,
            nodes: s.grid.dims[..s.grid.dim].to_vec(),
            h: s.grid.h,
            eps: eps.to_vec(),
            stages: Vec::new(),
            oracle_area: None,
            topology: None,
            metrics: BTreeMap::new(),
            series: BTreeMap::new(),
            verdicts: Vec::new(),
        }
    }

    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn verdict(&self, check: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.check == check)
    }

    pub fn metric(&self, key: &str) -> Option<f64> {
        self.metrics.get(key).copied()
    }

    fn put(&mut self, key: &str, value: f64) {
        self.metrics.insert(key.to_string(), value);
    }

    fn put_series(&mut self, key: &str, values: Vec<f64>) {
        self.series.insert(key.to_string(), values);
    }
}

/// A finished scenario: the report plus the converged sections (one per
/// stage) and the geometry they live on.
#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub report: ExperimentReport,
    pub sections: Vec<GaugeSection>,
    pub gamma: BoundaryManifold,
    pub seam: SeamSurface,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParitySweep {
    pub tested: usize,
    pub consistent: usize,
    pub skipped: usize,
}

/// Zero parity versus mod-2 linking on `count` random loops; loops touching a
/// seam edge case are redrawn.
pub fn parity_sweep<R: rand::Rng>(s: &GaugeSection, gamma: &BoundaryManifold, rng: &mut R, count: usize, pushes: usize) -> Result<ParitySweep> {
    let mut sweep = ParitySweep {
        tested: 0,
        consistent: 0,
        skipped: 0,
    };
    while sweep.tested < count {
        let l = GridLoop::random(&s.grid, rng, pushes);
        match zero_parity(s, gamma, &l) {
            Ok(r) => {
                sweep.tested += 1;
                sweep.consistent += usize::from(r.consistent());
            }
            Err(Error::LoopTouchesSeamEdgeCase { .. }) => sweep.skipped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(sweep)
}

/// Smooth cutoff: 1 on `[0, inner]`, 0 beyond `outer`, cosine ramp between.
pub fn plateau(t: f64, inner: f64, outer: f64) -> f64 {
    let a = t.abs();
    if a <= inner {
        1.0
    } else if a >= outer {
        0.0
    } else {
        0.5 * (1.0 + libm::cos(core::f64::consts::PI * (a - inner) / (outer - inner)))
    }
}

/// `n` evenly spaced radii from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return alloc::vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Nodes outside `mask`-excluded set: free nodes of a section.
fn free_mask(s: &GaugeSection) -> Vec<bool> {
    s.grid.free_mask(s.bc)
}

fn point_of(gamma: &BoundaryManifold, component: usize) -> Point {
    gamma.components()[component].centroid()
}

/// Fraction of the box half-width excluded next to the walls when comparing
/// sublevel sets with the nodal set.
pub const HAUSDORFF_WALL_MARGIN: f64 = 0.25;

/// Hausdorff distance at `|u| ≤ 0.1` for one stage, on the box shrunk by
/// [`HAUSDORFF_WALL_MARGIN`]; `None` when no node is in the sublevel set
/// there at this resolution.
fn stage_hausdorff(s: &GaugeSection) -> Result<Option<f64>> {
    let g = &s.grid;
    let mesh = crate::diagnostics::extract_nodal_set(s);
    let margin = HAUSDORFF_WALL_MARGIN * 0.5 * (0..g.dim).map(|a| g.side(a)).fold(f64::INFINITY, f64::min);
    let inner = |p: &Point| g.distance_to_box(p) >= margin;
    match crate::diagnostics::hausdorff_sublevel(s, &mesh, 0.1, &inner) {
        Ok(r) => Ok(Some(r.distance)),
        Err(Error::EmptySublevel { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Records `(ε, distance)` for the stages with a non-empty sublevel set and,
/// when every stage has one, the log–log slope against ε.
fn hausdorff_trend(rep: &mut ExperimentReport, stages: &[(f64, Option<f64>)]) {
    let pts: Vec<(f64, f64)> = stages.iter().filter_map(|&(e, d)| d.map(|d| (e, d))).collect();
    rep.put_series("hausdorff_eps", pts.iter().map(|p| p.0).collect());
    rep.put_series("hausdorff", pts.iter().map(|p| p.1).collect());
    rep.verdicts.push(Verdict::equals("hausdorff_nonempty_stages", pts.len() as f64, stages.len() as f64));
    if pts.len() >= 2 && pts.len() == stages.len() {
        let (slope, _) = crate::diagnostics::scaling::loglog_slope(&pts);
        rep.put("hausdorff_slope", slope);
        rep.verdicts.push(Verdict::within("hausdorff_slope", slope, 0.7, 1.3));
    }
}
