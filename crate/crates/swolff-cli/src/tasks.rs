//! Task execution for the `run` subcommand. Tasks always run in the fixed
//! order exact, series, diagrams, local, linked_cluster, equivalence,
//! stability, regardless of how the config lists them; each produces one
//! report section and a verdict, and a failing task never aborts the rest.

use serde::Serialize;
use swolff_core::cluster::{
    equivalence_parts, linked_cluster_report, multivariate_heff, HeffMethod,
};
use swolff_core::diagrams::{enumerate_generator_trees, enumerate_heff_trees};
use swolff_core::exact::{exact_sw_transform, PerturbedProblem};
use swolff_core::fit::log_log_slope;
use swolff_core::lattice::SpinLattice;
use swolff_core::local_sw::{build_local_sw, garbage_norm, stability_check};
use swolff_core::operator::{operator_norm, spectral_decompose};
use swolff_core::perturbative::{convergence_radius, sw_series};
use swolff_core::series::EdgeMonomialSeries;
use swolff_core::{tol, Result, SwError};

use crate::config::{BuiltModel, RunConfig, TaskName};
use crate::report::{Provenance, TaskOutcome, to_json_line_terminated};

/// Residuals at or below this are treated as sitting on the rounding floor:
/// a scaling exponent fitted to them measures noise, not the truncation.
pub const RESIDUAL_FLOOR: f64 = 1e-12;

/// Pass/fail thresholds for one run, all multiplied by the `--tolerance-scale`
/// flag; the structural tolerances inside the core library are not affected.
#[derive(Clone, Copy)]
pub struct Thresholds {
    pub rotation: f64,
    pub floor: f64,
}

impl Thresholds {
    pub fn scaled(scale: f64) -> Self {
        Thresholds { rotation: tol::TOL_ROT * scale, floor: RESIDUAL_FLOOR * scale }
    }
}

/// Fit the scaling exponent on the points above the rounding floor; points
/// at the floor carry no information about the truncation order. Fewer than
/// two informative points means the bound holds trivially.
fn slope_passes(points: &[(f64, f64)], want: f64, floor: f64) -> (f64, bool, bool) {
    let live: Vec<(f64, f64)> = points.iter().copied().filter(|(_, r)| *r > floor).collect();
    if live.len() < 2 {
        return (0.0, true, true);
    }
    let slope = log_log_slope(&live);
    (slope, false, slope >= want)
}

#[derive(Serialize)]
pub struct SweepFit {
    /// `[epsilon, residual]` pairs, descending epsilon.
    pub points: Vec<[f64; 2]>,
    pub slope: f64,
    /// Fewer than two residuals sit above the rounding floor; the fit is
    /// then uninformative and the scaling bound holds trivially.
    pub at_floor: bool,
}

#[derive(Serialize)]
pub struct ExactPoint {
    pub epsilon: f64,
    /// `||P - P0||`.
    pub distance: f64,
    pub s_norm: f64,
    /// `2 eps ||V|| / gap`, the a-priori bound on the distance.
    pub bound_rhs: f64,
    pub bound_holds: bool,
}

#[derive(Serialize)]
pub struct ExactReport {
    pub epsilon_c: f64,
    /// Eigenvalues of the effective Hamiltonian on the low space, ascending,
    /// at the first (largest) epsilon.
    pub heff_low_spectrum: Vec<f64>,
    pub points: Vec<ExactPoint>,
    pub passed: bool,
}

fn exact_task(model: &BuiltModel, eps: &[f64], th: Thresholds) -> Result<ExactReport> {
    let (split, v) = model.split_and_v()?;
    let v_norm = operator_norm(&v);
    let gap = split.gap();
    let mut points = Vec::with_capacity(eps.len());
    let mut spectrum = Vec::new();
    let mut epsilon_c = f64::INFINITY;
    for (i, &e) in eps.iter().enumerate() {
        let prob = PerturbedProblem::new(split.clone(), v.clone(), e)?;
        epsilon_c = prob.epsilon_c();
        let sw = exact_sw_transform(&prob)?;
        let bound_rhs = 2.0 * e * v_norm / gap;
        let bound_holds = sw.distance <= bound_rhs + th.rotation;
        if i == 0 {
            spectrum = spectral_decompose(&sw.heff_low)?.values;
        }
        points.push(ExactPoint {
            epsilon: e,
            distance: sw.distance,
            s_norm: operator_norm(&sw.s),
            bound_rhs,
            bound_holds,
        });
    }
    let passed = points.iter().all(|p| p.bound_holds);
    Ok(ExactReport { epsilon_c, heff_low_spectrum: spectrum, points, passed })
}

#[derive(Serialize)]
pub struct SeriesReport {
    pub order: usize,
    pub epsilon_c: f64,
    pub convergence_radius: f64,
    pub s_coefficient_norms: Vec<f64>,
    pub heff_coefficient_norms: Vec<f64>,
    /// Exact-minus-truncated comparison across the sweep (two or more
    /// epsilons required for the fit).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation: Option<SweepFit>,
    pub passed: bool,
}

fn series_task(
    model: &BuiltModel,
    eps: &[f64],
    order: usize,
    th: Thresholds,
) -> Result<SeriesReport> {
    let (split, v) = model.split_and_v()?;
    let sw = sw_series(&split, &v, order)?;
    let prob = PerturbedProblem::new(split.clone(), v.clone(), eps[0])?;
    let epsilon_c = prob.epsilon_c();
    let radius = convergence_radius(&prob);
    let mut truncation = None;
    let mut passed = true;
    if eps.len() >= 2 {
        let mut points = Vec::with_capacity(eps.len());
        for &e in eps {
            let p = PerturbedProblem::new(split.clone(), v.clone(), e)?;
            let exact = exact_sw_transform(&p)?;
            let residual = operator_norm(&(&exact.heff - sw.heff.evaluate(e)));
            points.push((e, residual));
        }
        let (slope, at_floor, ok) = slope_passes(&points, order as f64 + 0.5, th.floor);
        passed = ok;
        truncation = Some(SweepFit {
            points: points.iter().map(|(e, r)| [*e, *r]).collect(),
            slope,
            at_floor,
        });
    }
    Ok(SeriesReport {
        order,
        epsilon_c,
        convergence_radius: radius,
        s_coefficient_norms: sw.s.norms(),
        heff_coefficient_norms: sw.heff.norms(),
        truncation,
        passed,
    })
}

#[derive(Serialize)]
pub struct DiagramRow {
    pub order: usize,
    pub generator_trees: usize,
    pub heff_trees: usize,
}

#[derive(Serialize)]
pub struct DiagramsReport {
    /// Orders above this are not enumerated by the CLI.
    pub enumerated_to: usize,
    /// Effective-Hamiltonian tree counts for orders 3 through
    /// `enumerated_to`.
    pub counts: Vec<usize>,
    pub rows: Vec<DiagramRow>,
    pub passed: bool,
}

/// Tree enumeration grows quickly; the CLI stops here.
const MAX_ENUMERATED: usize = 8;

fn diagrams_task(order: usize) -> Result<DiagramsReport> {
    let enumerated_to = order.min(MAX_ENUMERATED);
    let mut rows = Vec::new();
    let mut counts = Vec::new();
    for n in 1..=enumerated_to {
        let g = enumerate_generator_trees(n)?.len();
        // the effective-Hamiltonian expansion starts at order 2
        let h = if n >= 2 { enumerate_heff_trees(n)?.len() } else { 0 };
        rows.push(DiagramRow { order: n, generator_trees: g, heff_trees: h });
        if n >= 3 {
            counts.push(h);
        }
    }
    Ok(DiagramsReport { enumerated_to, counts, rows, passed: true })
}

#[derive(Serialize)]
pub struct LocalReport {
    pub order: usize,
    pub epsilon: f64,
    /// Support width of each generator `T_j`; `T_j` acts on at most `j + 1`
    /// sites.
    pub generator_locality: Vec<usize>,
    /// Support width of each remainder `V^(j)`; at most `j + 2` sites.
    pub remainder_locality: Vec<usize>,
    pub garbage_norm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub garbage: Option<SweepFit>,
    pub passed: bool,
}

fn local_task(
    lattice: &SpinLattice,
    eps: &[f64],
    order: usize,
    th: Thresholds,
) -> Result<LocalReport> {
    let order = order.min(tol::MAX_ORDER_LOCAL);
    let state = build_local_sw(lattice, eps[0], order)?;
    let mut generator_locality = Vec::new();
    let mut locality_ok = true;
    for (j, t_j) in state.t().iter().enumerate() {
        let k = t_j.k_locality();
        locality_ok &= k <= j + 2;
        generator_locality.push(k);
    }
    let mut remainder_locality = Vec::new();
    for (j, v_j) in state.vseq().iter().enumerate() {
        let k = v_j.k_locality();
        locality_ok &= k <= j + 2;
        remainder_locality.push(k);
    }
    let garbage_at_first = garbage_norm(&state)?;
    let mut garbage = None;
    let mut scaling_ok = true;
    if eps.len() >= 2 {
        let mut points = Vec::with_capacity(eps.len());
        for &e in eps {
            let s = build_local_sw(lattice, e, order)?;
            points.push((e, garbage_norm(&s)?));
        }
        let (slope, at_floor, ok) = slope_passes(&points, order as f64 + 0.5, th.floor);
        scaling_ok = ok;
        garbage = Some(SweepFit {
            points: points.iter().map(|(e, r)| [*e, *r]).collect(),
            slope,
            at_floor,
        });
    }
    Ok(LocalReport {
        order,
        epsilon: eps[0],
        generator_locality,
        remainder_locality,
        garbage_norm: garbage_at_first,
        garbage,
        passed: locality_ok && scaling_ok,
    })
}

#[derive(Serialize)]
pub struct MonomialRow {
    /// Multidegree over edge variables, e.g. "(1,1)".
    pub degree: String,
    pub edges: Vec<usize>,
    /// Sites touched by those edges.
    pub sites: String,
    pub connected: bool,
    pub coefficient_norm: f64,
    pub out_of_support: f64,
}

#[derive(Serialize)]
pub struct MethodClusterReport {
    pub scale: f64,
    pub tolerance: f64,
    pub max_out_of_support: f64,
    pub max_disconnected: f64,
    pub monomials: Vec<MonomialRow>,
    pub violations: Vec<String>,
    pub passed: bool,
}

#[derive(Serialize)]
pub struct LinkedClusterTaskReport {
    pub order: usize,
    pub global: MethodClusterReport,
    pub local: MethodClusterReport,
    pub passed: bool,
}

fn cluster_method_report(
    lattice: &SpinLattice,
    series: &EdgeMonomialSeries,
) -> Result<MethodClusterReport> {
    let report = linked_cluster_report(lattice, series)?;
    let monomials = report
        .entries
        .iter()
        .map(|e| MonomialRow {
            degree: e.degree.to_string(),
            edges: e.support_edges.clone(),
            sites: e.sites.to_string(),
            connected: e.connected,
            coefficient_norm: e.coefficient_norm,
            out_of_support: e.out_of_support,
        })
        .collect();
    Ok(MethodClusterReport {
        scale: report.scale,
        tolerance: report.tolerance,
        max_out_of_support: report.max_out_of_support,
        max_disconnected: report.max_disconnected,
        monomials,
        violations: report.violations,
        passed: report.passed,
    })
}

fn linked_cluster_task(lattice: &SpinLattice, order: usize) -> Result<LinkedClusterTaskReport> {
    let cap = if lattice.edges().len() == 1 {
        tol::MAX_ORDER_LOCAL
    } else {
        tol::MAX_ORDER_MULTI
    };
    let order = order.min(cap);
    let global_series = multivariate_heff(lattice, order, HeffMethod::GlobalRecursion)?;
    let local_series = multivariate_heff(lattice, order, HeffMethod::LocalSw)?;
    let global = cluster_method_report(lattice, &global_series)?;
    let local = cluster_method_report(lattice, &local_series)?;
    let passed = global.passed && local.passed;
    Ok(LinkedClusterTaskReport { order, global, local, passed })
}

#[derive(Serialize)]
pub struct EquivalenceReport {
    pub order: usize,
    pub epsilon: f64,
    /// `|| M - e^K L e^{-K} ||` at the first epsilon.
    pub residual: f64,
    pub max_block_residual: f64,
    pub k_norms: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scaling: Option<SweepFit>,
    pub passed: bool,
}

fn equivalence_task(
    lattice: &SpinLattice,
    eps: &[f64],
    order: usize,
    th: Thresholds,
) -> Result<EquivalenceReport> {
    let order = order.min(tol::MAX_ORDER_LOCAL);
    let first = equivalence_parts(lattice, eps[0], order)?;
    let max_block =
        first.block_residuals.iter().fold(0.0f64, |acc, r| acc.max(*r));
    let block_ok = max_block <= th.rotation;
    let mut scaling = None;
    let mut scaling_ok = true;
    if eps.len() >= 2 {
        let mut points = Vec::with_capacity(eps.len());
        points.push((eps[0], first.residual));
        for &e in &eps[1..] {
            points.push((e, equivalence_parts(lattice, e, order)?.residual));
        }
        let (slope, at_floor, ok) = slope_passes(&points, order as f64 + 0.5, th.floor);
        scaling_ok = ok;
        scaling = Some(SweepFit {
            points: points.iter().map(|(e, r)| [*e, *r]).collect(),
            slope,
            at_floor,
        });
    }
    Ok(EquivalenceReport {
        order,
        epsilon: eps[0],
        residual: first.residual,
        max_block_residual: max_block,
        k_norms: first.k_norms,
        scaling,
        passed: block_ok && scaling_ok,
    })
}

#[derive(Serialize)]
pub struct StabilityClassRow {
    pub sites: usize,
    pub strength: f64,
}

#[derive(Serialize)]
pub struct StabilityTaskReport {
    pub epsilon: f64,
    /// `sum_k 2^(k+2) J_k` for the scaled interaction.
    pub lhs: f64,
    pub delta: f64,
    pub stable: bool,
    pub per_class: Vec<StabilityClassRow>,
    pub passed: bool,
}

fn stability_task(lattice: &SpinLattice, eps: &[f64]) -> Result<StabilityTaskReport> {
    let scaled = lattice.v_full().scale(eps[0]);
    let dec = lattice.support_decompose(&scaled)?;
    let report = stability_check(lattice, &dec)?;
    Ok(StabilityTaskReport {
        epsilon: eps[0],
        lhs: report.lhs,
        delta: report.delta,
        stable: report.stable,
        per_class: report
            .per_class
            .iter()
            .map(|(k, j)| StabilityClassRow { sites: *k, strength: *j })
            .collect(),
        passed: true,
    })
}

#[derive(Serialize, Default)]
pub struct TaskReports {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<TaskOutcome<ExactReport>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub series: Option<TaskOutcome<SeriesReport>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagrams: Option<TaskOutcome<DiagramsReport>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub local: Option<TaskOutcome<LocalReport>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub linked_cluster: Option<TaskOutcome<LinkedClusterTaskReport>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub equivalence: Option<TaskOutcome<EquivalenceReport>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stability: Option<TaskOutcome<StabilityTaskReport>>,
}

#[derive(Serialize)]
pub struct Report {
    pub provenance: Provenance,
    pub tasks: TaskReports,
    pub passed: bool,
}

fn requires_lattice(name: TaskName) -> SwError {
    SwError::Validation(format!("task {} requires a lattice model", name.as_str()))
}

/// Execute the configured tasks and assemble the report. Never panics on a
/// failing task; the failure lands in that task's section.
pub fn run_tasks(cfg: &RunConfig, config_bytes: &[u8], tolerance_scale: f64) -> Result<Report> {
    if !(tolerance_scale.is_finite() && tolerance_scale > 0.0) {
        return Err(SwError::Validation(format!(
            "tolerance scale must be finite and positive, got {tolerance_scale}"
        )));
    }
    let th = Thresholds::scaled(tolerance_scale);
    let model = crate::config::build_model(&cfg.model)
        .map_err(|e| SwError::Validation(e.to_string()))?;
    let eps = cfg.epsilons();
    let mut sections = TaskReports::default();
    let mut all_passed = true;

    let mut record = |passed: bool| all_passed &= passed;
    // fixed execution order, independent of the config's listing order
    for task in [
        TaskName::Exact,
        TaskName::Series,
        TaskName::Diagrams,
        TaskName::Local,
        TaskName::LinkedCluster,
        TaskName::Equivalence,
        TaskName::Stability,
    ] {
        if !cfg.tasks.contains(&task) {
            continue;
        }
        match task {
            TaskName::Exact => {
                let r = exact_task(&model, &eps, th);
                record(matches!(&r, Ok(t) if t.passed));
                sections.exact = Some(TaskOutcome::from_result(r));
            }
            TaskName::Series => {
                let r = series_task(&model, &eps, cfg.order, th);
                record(matches!(&r, Ok(t) if t.passed));
                sections.series = Some(TaskOutcome::from_result(r));
            }
            TaskName::Diagrams => {
                let r = diagrams_task(cfg.order);
                record(matches!(&r, Ok(t) if t.passed));
                sections.diagrams = Some(TaskOutcome::from_result(r));
            }
            TaskName::Local => {
                let r = model
                    .lattice()
                    .ok_or_else(|| requires_lattice(task))
                    .and_then(|lat| local_task(lat, &eps, cfg.order, th));
                record(matches!(&r, Ok(t) if t.passed));
                sections.local = Some(TaskOutcome::from_result(r));
            }
            TaskName::LinkedCluster => {
                let r = model
                    .lattice()
                    .ok_or_else(|| requires_lattice(task))
                    .and_then(|lat| linked_cluster_task(lat, cfg.order));
                record(matches!(&r, Ok(t) if t.passed));
                sections.linked_cluster = Some(TaskOutcome::from_result(r));
            }
            TaskName::Equivalence => {
                let r = model
                    .lattice()
                    .ok_or_else(|| requires_lattice(task))
                    .and_then(|lat| equivalence_task(lat, &eps, cfg.order, th));
                record(matches!(&r, Ok(t) if t.passed));
                sections.equivalence = Some(TaskOutcome::from_result(r));
            }
            TaskName::Stability => {
                let r = model
                    .lattice()
                    .ok_or_else(|| requires_lattice(task))
                    .and_then(|lat| stability_task(lat, &eps));
                record(matches!(&r, Ok(t) if t.passed));
                sections.stability = Some(TaskOutcome::from_result(r));
            }
        }
    }

    Ok(Report {
        provenance: Provenance::new(config_bytes, cfg.seed, tolerance_scale),
        tasks: sections,
        passed: all_passed,
    })
}

/// Serialize a finished report.
pub fn render_report(report: &Report) -> String {
    to_json_line_terminated(report)
}
