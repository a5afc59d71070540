//! Named verification suites behind the `verify` subcommand. Each suite
//! checks one family of claims end to end on seeded random instances and
//! reports every check with a measured detail string; a failed check never
//! panics, it just lands in the report.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use swolff_core::cluster::{
    equivalence_parts, linked_cluster_report, multivariate_heff, HeffMethod,
};
use swolff_core::coefficients::bernoulli_coefficients;
use swolff_core::diagrams::{
    enumerate_generator_trees, enumerate_heff_trees, evaluate_heff_tree, generator_via_diagrams,
    heff_via_diagrams, DiagramContext,
};
use swolff_core::exact::{
    additivity_residual, exact_sw_transform, make_split, PerturbedProblem, SpectralSplit,
};
use swolff_core::fit::{halving_grid, log_log_slope};
use swolff_core::lattice::{EdgeSpec, SiteSpec, SpinLattice};
use swolff_core::local_sw::{build_local_sw, garbage_norm, stability_check};
use swolff_core::operator::{identity, kron, operator_norm, spectral_decompose};
use swolff_core::perturbative::{convergence_radius, sw_series};
use swolff_core::random::{random_gapped_hermitian, random_hermitian, random_projector_pair};
use swolff_core::rotation::{direct_rotation, rotation_generator, RotationPair};
use swolff_core::{tol, C64, CMat, Result, SwError};

use crate::tasks::RESIDUAL_FLOOR;

pub const SUITE_NAMES: &[&str] = &[
    "coefficients",
    "trees",
    "diagrams",
    "convergence",
    "closed_form",
    "rotation",
    "additivity",
    "cluster",
    "stability",
    "local",
    "equivalence",
];

#[derive(Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        CheckResult { name: name.to_string(), passed, detail }
    }
}

#[derive(Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

fn finish(suite: &str, seed: u64, checks: Vec<CheckResult>) -> SuiteReport {
    let passed = checks.iter().all(|c| c.passed);
    SuiteReport { suite: suite.to_string(), seed, checks, passed }
}

/// Run one suite by name, or every suite under "all" (concatenated checks).
pub fn run_suite(name: &str, seed: u64) -> Result<SuiteReport> {
    match name {
        "coefficients" => Ok(coefficients_suite(seed)),
        "trees" => trees_suite(seed),
        "diagrams" => diagrams_suite(seed),
        "convergence" => convergence_suite(seed),
        "closed_form" => closed_form_suite(seed),
        "rotation" => rotation_suite(seed),
        "additivity" => additivity_suite(seed),
        "cluster" => cluster_suite(seed),
        "stability" => stability_suite(seed),
        "local" => local_suite(seed),
        "equivalence" => equivalence_suite(seed),
        "all" => {
            let mut checks = Vec::new();
            for s in SUITE_NAMES {
                let mut rep = run_suite(s, seed)?;
                for c in &mut rep.checks {
                    c.name = format!("{s}/{}", c.name);
                }
                checks.extend(rep.checks);
            }
            Ok(finish("all", seed, checks))
        }
        other => Err(SwError::Validation(format!(
            "unknown suite '{other}'; expected one of {SUITE_NAMES:?} or 'all'"
        ))),
    }
}

// ---------------------------------------------------------------- helpers

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn diag_site(diagonal: &[f64], low_dim: usize) -> SiteSpec {
    let d = diagonal.len();
    let h0 = CMat::from_fn(d, d, |i, j| if i == j { c(diagonal[i]) } else { c(0.0) });
    SiteSpec { dim: d, h0, low_dim }
}

fn qubit_site(gap: f64) -> SiteSpec {
    diag_site(&[0.0, gap], 1)
}

fn qutrit_site(gap: f64) -> SiteSpec {
    diag_site(&[0.0, 0.0, gap], 2)
}

/// Random split with `low` eigenvalues near zero and the rest above a gap
/// of 2, window chosen with safe margins.
fn random_split<R: Rng>(rng: &mut R, dim: usize, low: usize) -> Result<SpectralSplit> {
    let h0 = random_gapped_hermitian(rng, dim, low, 1.0, 2.0);
    make_split(&h0, (-0.5, 1.5))
}

fn fmt_points(points: &[(f64, f64)]) -> String {
    points
        .iter()
        .map(|(e, r)| format!("({e:.4}, {r:.3e})"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Slope check with the rounding-floor escape hatch: residuals at the floor
/// carry no information about the truncation order, so the fit uses only the
/// points above it, and with fewer than two such points the bound holds
/// trivially.
fn scaling_check(name: &str, points: &[(f64, f64)], want: f64) -> CheckResult {
    let live: Vec<(f64, f64)> =
        points.iter().copied().filter(|(_, r)| *r > RESIDUAL_FLOOR).collect();
    if live.len() < 2 {
        let max = points.iter().fold(0.0f64, |a, (_, r)| a.max(*r));
        return CheckResult::new(
            name,
            true,
            format!("residuals at the rounding floor (max {max:.3e}); bound holds trivially"),
        );
    }
    let slope = log_log_slope(&live);
    CheckResult::new(
        name,
        slope >= want,
        format!(
            "fitted exponent {slope:.3} on {} of {} points (want >= {want:.1}); points {}",
            live.len(),
            points.len(),
            fmt_points(points)
        ),
    )
}

// ----------------------------------------------------- suite: coefficients

fn coefficients_suite(seed: u64) -> SuiteReport {
    let mut checks = Vec::new();
    match bernoulli_coefficients(8) {
        Ok(t) => {
            let a_want = [(0, "1"), (2, "1/3"), (4, "-1/45"), (6, "2/945")];
            let b_want = [(1, "1/2"), (3, "-1/24"), (5, "1/240"), (7, "-17/40320")];
            let a_got: Vec<String> = a_want.iter().map(|(m, _)| t.a_string(*m)).collect();
            let b_got: Vec<String> = b_want.iter().map(|(m, _)| t.b_string(*m)).collect();
            let a_ok = a_want.iter().zip(&a_got).all(|((_, w), g)| w == g);
            let b_ok = b_want.iter().zip(&b_got).all(|((_, w), g)| w == g);
            checks.push(CheckResult::new(
                "a_table_exact",
                a_ok,
                format!("a(0,2,4,6) = {a_got:?}"),
            ));
            checks.push(CheckResult::new(
                "b_table_exact",
                b_ok,
                format!("b(1,3,5,7) = {b_got:?}"),
            ));
            let odd_a_zero = (1..=7).step_by(2).all(|m| t.a_string(m) == "0");
            checks.push(CheckResult::new(
                "odd_a_vanish",
                odd_a_zero,
                "a(m) = 0 for odd m".into(),
            ));
        }
        Err(e) => checks.push(CheckResult::new("table_build", false, e.to_string())),
    }
    finish("coefficients", seed, checks)
}

// ------------------------------------------------------------ suite: trees

fn trees_suite(seed: u64) -> Result<SuiteReport> {
    let mut checks = Vec::new();
    let mut counts = Vec::new();
    for n in 3..=6 {
        counts.push(enumerate_heff_trees(n)?.len());
    }
    checks.push(CheckResult::new(
        "heff_tree_counts",
        counts == [1, 3, 7, 20],
        format!("counts for n = 3..6: {counts:?} (want [1, 3, 7, 20])"),
    ));
    let mut roundtrip_ok = true;
    for n in 1..=6 {
        let gen = enumerate_generator_trees(n)?;
        let heff = if n >= 2 { enumerate_heff_trees(n)? } else { Vec::new() };
        for t in gen.iter().chain(heff.iter()) {
            let back = swolff_core::diagrams::DiagramTree::from_encoding(&t.encoding())?;
            roundtrip_ok &= back == *t;
        }
    }
    checks.push(CheckResult::new(
        "encoding_roundtrip",
        roundtrip_ok,
        "preorder arity encodings decode to the same trees".into(),
    ));
    Ok(finish("trees", seed, checks))
}

// --------------------------------------------------------- suite: diagrams

fn diagrams_suite(seed: u64) -> Result<SuiteReport> {
    let results: Vec<Result<(f64, f64)>> = (0..50u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1000 + i));
            let dim = 2 + (i as usize % 7); // 2..=8
            let low = 1 + (i as usize) % (dim - 1).max(1);
            let split = random_split(&mut rng, dim, low.min(dim - 1))?;
            let v = random_hermitian(&mut rng, dim, 1.0);
            let sw = sw_series(&split, &v, 6)?;
            let ctx = DiagramContext::new(&split, &v)?;
            let mut worst_h = 0.0f64;
            let mut worst_s = 0.0f64;
            for q in 1..=6 {
                // the tree expansion of the effective block starts at order 2
                if q >= 2 {
                    let h_d = heff_via_diagrams(&ctx, q)?;
                    let h_r = &sw.heff.coeffs[q];
                    let scale_h = operator_norm(h_r).max(1.0);
                    worst_h = worst_h.max(operator_norm(&(&h_d - h_r)) / scale_h);
                }
                let s_d = generator_via_diagrams(&ctx, q)?;
                let s_r = &sw.s.coeffs[q];
                let scale_s = operator_norm(s_r).max(1.0);
                worst_s = worst_s.max(operator_norm(&(&s_d - s_r)) / scale_s);
            }
            Ok((worst_h, worst_s))
        })
        .collect();
    let mut worst_h = 0.0f64;
    let mut worst_s = 0.0f64;
    for r in results {
        let (h, s) = r?;
        worst_h = worst_h.max(h);
        worst_s = worst_s.max(s);
    }
    let checks = vec![
        CheckResult::new(
            "heff_diagrams_match_recursion",
            worst_h <= 1e-10,
            format!("worst relative mismatch {worst_h:.3e} over 50 instances, q <= 6"),
        ),
        CheckResult::new(
            "generator_diagrams_match_recursion",
            worst_s <= 1e-10,
            format!("worst relative mismatch {worst_s:.3e} over 50 instances, q <= 6"),
        ),
    ];
    Ok(finish("diagrams", seed, checks))
}

// ------------------------------------------------------ suite: convergence

/// Exact-minus-truncated scaling on one model for one order.
fn truncation_points(
    split: &SpectralSplit,
    v: &CMat,
    order: usize,
) -> Result<(Vec<(f64, f64)>, f64)> {
    let sw = sw_series(split, v, order)?;
    let probe = PerturbedProblem::new(split.clone(), v.clone(), 1e-3)?;
    let rho = convergence_radius(&probe);
    let grid = halving_grid(rho / 4.0, 4);
    let mut points = Vec::with_capacity(grid.len());
    let mut worst_bound_excess = f64::NEG_INFINITY;
    let v_norm = operator_norm(v);
    for e in grid {
        let prob = PerturbedProblem::new(split.clone(), v.clone(), e)?;
        let ex = exact_sw_transform(&prob)?;
        // Lemma-level a-priori bound on the projector distance
        let rhs = 2.0 * e * v_norm / split.gap();
        worst_bound_excess = worst_bound_excess.max(ex.distance - rhs);
        points.push((e, operator_norm(&(&ex.heff - sw.heff.evaluate(e)))));
    }
    Ok((points, worst_bound_excess))
}

fn convergence_suite(seed: u64) -> Result<SuiteReport> {
    let mut checks = Vec::new();

    let two_level = make_split(
        &CMat::from_fn(2, 2, |i, j| if i == 1 && j == 1 { c(2.0) } else { c(0.0) }),
        (-1.0, 1.0),
    )?;
    let sigma_x = CMat::from_fn(2, 2, |i, j| if i != j { c(1.0) } else { c(0.0) });
    for n in [2usize, 3, 4] {
        let (points, _) = truncation_points(&two_level, &sigma_x, n)?;
        checks.push(scaling_check(
            &format!("two_level_truncation_order_{n}"),
            &points,
            n as f64 + 0.5,
        ));
    }

    let per_model: Vec<Result<(Vec<(usize, f64, bool)>, f64)>> = (0..20u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(2000 + i));
            let low = 1 + (i as usize) % 4;
            let split = random_split(&mut rng, 8, low)?;
            let v = random_hermitian(&mut rng, 8, 1.0);
            let mut rows = Vec::new();
            let mut worst_excess = f64::NEG_INFINITY;
            for n in [2usize, 3, 4] {
                let (points, excess) = truncation_points(&split, &v, n)?;
                worst_excess = worst_excess.max(excess);
                let live: Vec<(f64, f64)> =
                    points.into_iter().filter(|(_, r)| *r > RESIDUAL_FLOOR).collect();
                if live.len() < 2 {
                    rows.push((n, 0.0, true));
                } else {
                    rows.push((n, log_log_slope(&live), false));
                }
            }
            Ok((rows, worst_excess))
        })
        .collect();

    let mut worst_slope = [f64::INFINITY; 3];
    let mut all_ok = true;
    let mut worst_excess = f64::NEG_INFINITY;
    for r in per_model {
        let (rows, excess) = r?;
        worst_excess = worst_excess.max(excess);
        for (n, slope, at_floor) in rows {
            let idx = n - 2;
            if !at_floor {
                worst_slope[idx] = worst_slope[idx].min(slope);
                all_ok &= slope >= n as f64 + 0.5;
            }
        }
    }
    checks.push(CheckResult::new(
        "random_dim8_truncation_orders_2_3_4",
        all_ok,
        format!(
            "worst fitted exponents over 20 models: n=2: {:.3}, n=3: {:.3}, n=4: {:.3}",
            worst_slope[0], worst_slope[1], worst_slope[2]
        ),
    ));
    checks.push(CheckResult::new(
        "projector_distance_bound",
        worst_excess <= tol::TOL_ROT,
        format!("worst (distance - 2 eps ||V|| / gap) = {worst_excess:.3e} over all instances"),
    ));
    Ok(finish("convergence", seed, checks))
}

// ------------------------------------------------------ suite: closed_form

fn closed_form_suite(seed: u64) -> Result<SuiteReport> {
    let mut checks = Vec::new();
    let h0 = CMat::from_fn(2, 2, |i, j| if i == 1 && j == 1 { c(2.0) } else { c(0.0) });
    let v = CMat::from_fn(2, 2, |i, j| if i != j { c(1.0) } else { c(0.0) });
    let split = make_split(&h0, (-1.0, 1.0))?;
    let eps = 0.2;

    let prob = PerturbedProblem::new(split.clone(), v.clone(), eps)?;
    let ex = exact_sw_transform(&prob)?;
    let low = spectral_decompose(&ex.heff_low)?.values[0];
    // 2x2 oracle: eigenvalues 1 -+ sqrt(1 + eps^2)
    let want = 1.0 - (1.0 + eps * eps).sqrt();
    checks.push(CheckResult::new(
        "exact_low_eigenvalue",
        (low - want).abs() <= 1e-12,
        format!("heff low eigenvalue {low:.17} vs oracle {want:.17}"),
    ));

    let sw = sw_series(&split, &v, 2)?;
    let coeff2 = sw.heff.coeffs[2][(0, 0)].re;
    let got = eps * eps * coeff2;
    let want2 = -eps * eps / 2.0;
    checks.push(CheckResult::new(
        "second_order_coefficient",
        (got - want2).abs() <= 1e-12,
        format!("eps^2 coefficient term {got:.17} vs -eps^2/gap = {want2:.17}"),
    ));
    Ok(finish("closed_form", seed, checks))
}

// --------------------------------------------------------- suite: rotation

fn rotation_suite(seed: u64) -> Result<SuiteReport> {
    let results: Vec<Result<[f64; 5]>> = (0..200u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(3000 + i));
            let dim = 2 + (i as usize % 11); // 2..=12
            let rank = 1 + (i as usize) % (dim - 1).max(1);
            let (p, p0, _) = random_projector_pair(&mut rng, dim, rank.min(dim - 1), 0.95);
            let pair = RotationPair::new(p.clone(), p0.clone())?;
            let u = direct_rotation(&pair)?;
            let s = rotation_generator(&pair)?;
            let eye = identity(dim);
            let unitarity = operator_norm(&(u.adjoint() * &u - &eye));
            let maps = operator_norm(&(&u * &p * u.adjoint() - &p0));
            let q0 = &eye - &p0;
            let q = &eye - &p;
            let off0 = operator_norm(&(&p0 * &s * &p0)).max(operator_norm(&(&q0 * &s * &q0)));
            let off1 = operator_norm(&(&p * &s * &p)).max(operator_norm(&(&q * &s * &q)));
            let s_norm = operator_norm(&s);
            Ok([unitarity, maps, off0, off1, s_norm])
        })
        .collect();
    let mut worst = [0.0f64; 5];
    for r in results {
        let m = r?;
        for (w, v) in worst.iter_mut().zip(m) {
            *w = w.max(v);
        }
    }
    let checks = vec![
        CheckResult::new(
            "unitary",
            worst[0] <= 1e-10,
            format!("worst ||U^dag U - I|| = {:.3e} over 200 pairs", worst[0]),
        ),
        CheckResult::new(
            "maps_p_to_p0",
            worst[1] <= 1e-9,
            format!("worst ||U P U^dag - P0|| = {:.3e}", worst[1]),
        ),
        CheckResult::new(
            "generator_off_diagonal_both_splits",
            worst[2] <= 1e-9 && worst[3] <= 1e-9,
            format!("worst diagonal block norms {:.3e} (P0 split), {:.3e} (P split)", worst[2], worst[3]),
        ),
        CheckResult::new(
            "generator_norm_below_half_pi",
            worst[4] < std::f64::consts::FRAC_PI_2,
            format!("worst ||S|| = {:.6} < pi/2 = {:.6}", worst[4], std::f64::consts::FRAC_PI_2),
        ),
    ];
    Ok(finish("rotation", seed, checks))
}

// ------------------------------------------------------- suite: additivity

fn additivity_suite(seed: u64) -> Result<SuiteReport> {
    let mut checks = Vec::new();

    let results: Vec<Result<f64>> = (0..10u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(4000 + i));
            let da = 2 + (i as usize % 3);
            let db = 2 + ((i as usize + 1) % 3);
            let split_a = {
                let h = random_gapped_hermitian(&mut rng, da, 1, 0.4, 2.0);
                make_split(&h, (-0.5, 0.9))?
            };
            let split_b = {
                let h = random_gapped_hermitian(&mut rng, db, 1, 0.4, 2.0);
                make_split(&h, (-0.5, 0.9))?
            };
            let va = random_hermitian(&mut rng, da, 1.0);
            let vb = random_hermitian(&mut rng, db, 1.0);
            let prob_a = PerturbedProblem::new(split_a, va, 0.0)?;
            let prob_b = PerturbedProblem::new(split_b, vb, 0.0)?;
            let eps = 0.3 * prob_a.epsilon_c().min(prob_b.epsilon_c());
            let prob_a = PerturbedProblem::new(prob_a.split.clone(), prob_a.v().clone(), eps)?;
            let prob_b = PerturbedProblem::new(prob_b.split.clone(), prob_b.v().clone(), eps)?;
            additivity_residual(&prob_a, &prob_b)
        })
        .collect();
    let mut worst = 0.0f64;
    for r in results {
        worst = worst.max(r?);
    }
    checks.push(CheckResult::new(
        "noninteracting_bipartite_additivity",
        worst <= 1e-9,
        format!("worst additivity residual {worst:.3e} over 10 random bipartite systems"),
    ));

    // two qutrits, each with H0 = |2><2|: the fourth-order diagrams couple
    // the factors individually even though their weighted sum is additive
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(4500));
    let h_site = CMat::from_fn(3, 3, |i, j| if i == 2 && j == 2 { c(1.0) } else { c(0.0) });
    let i3 = identity(3);
    let h0 = kron(&h_site, &i3) + kron(&i3, &h_site);
    let va = random_hermitian(&mut rng, 3, 1.0);
    let vb = random_hermitian(&mut rng, 3, 1.0);
    let v = kron(&va, &i3) + kron(&i3, &vb);
    let split = make_split(&h0, (-0.3, 0.3))?;
    let ctx = DiagramContext::new(&split, &v)?;
    let trees = enumerate_heff_trees(4)?;
    let mut elements = Vec::new();
    let mut all_couple = trees.len() == 3;
    for t in &trees {
        let o = evaluate_heff_tree(&ctx, t)?;
        // <0,0| O |1,1>: site-major indices 0 and 4
        let el = o[(0, 4)].norm();
        all_couple &= el > 1e-6;
        elements.push(el);
    }
    checks.push(CheckResult::new(
        "fourth_order_diagrams_couple_the_factors",
        all_couple,
        format!("|<0,0|O(T_i)|1,1>| = {elements:?} (each > 1e-6)"),
    ));

    let weighted = heff_via_diagrams(&ctx, 4)?;
    let split_a = make_split(&h_site, (-0.3, 0.3))?;
    let heff4_a = sw_series(&split_a, &va, 4)?.heff.coeffs[4].clone();
    let heff4_b = sw_series(&split_a, &vb, 4)?.heff.coeffs[4].clone();
    let p0_site = split_a.p0();
    let target = kron(&heff4_a, p0_site) + kron(p0_site, &heff4_b);
    let residual = operator_norm(&(&weighted - target));
    checks.push(CheckResult::new(
        "weighted_fourth_order_sum_is_additive",
        residual <= 1e-9,
        format!("||sum_i w_i O(T_i) - additive target|| = {residual:.3e}"),
    ));
    Ok(finish("additivity", seed, checks))
}

// ---------------------------------------------------------- suite: cluster

fn cluster_suite(seed: u64) -> Result<SuiteReport> {
    let mut checks = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(5000));

    // 4 sites, two disjoint edges: no mixed monomials
    let sites = (0..4).map(|_| qubit_site(2.0)).collect::<Vec<_>>();
    let edges = vec![
        EdgeSpec { u: 0, v: 1, v_uv: random_hermitian(&mut rng, 4, 1.0) },
        EdgeSpec { u: 2, v: 3, v_uv: random_hermitian(&mut rng, 4, 1.0) },
    ];
    let lat = SpinLattice::new(sites, edges)?;
    for (label, method) in
        [("global", HeffMethod::GlobalRecursion), ("local", HeffMethod::LocalSw)]
    {
        let series = multivariate_heff(&lat, 3, method)?;
        let scale =
            series.terms.values().map(operator_norm).fold(1.0f64, f64::max);
        let mut worst_mixed = 0.0f64;
        for (mu, k) in &series.terms {
            if mu.support().len() == 2 {
                worst_mixed = worst_mixed.max(operator_norm(k));
            }
        }
        checks.push(CheckResult::new(
            &format!("disjoint_edges_no_mixed_monomials_{label}"),
            worst_mixed <= 1e-10 * scale,
            format!("worst mixed-monomial coefficient norm {worst_mixed:.3e} (scale {scale:.3})"),
        ));
    }

    // 3-site path with degenerate qutrit sites: connected supports only,
    // coefficients act inside Lambda(C), and |C| <= q
    let sites = (0..3).map(|_| qutrit_site(2.0)).collect::<Vec<_>>();
    let edges = vec![
        EdgeSpec { u: 0, v: 1, v_uv: random_hermitian(&mut rng, 9, 1.0) },
        EdgeSpec { u: 1, v: 2, v_uv: random_hermitian(&mut rng, 9, 1.0) },
    ];
    let path = SpinLattice::new(sites, edges)?;
    for (label, method) in
        [("global", HeffMethod::GlobalRecursion), ("local", HeffMethod::LocalSw)]
    {
        let series = multivariate_heff(&path, 3, method)?;
        let report = linked_cluster_report(&path, &series)?;
        let size_ok =
            report.entries.iter().all(|e| e.support_edges.len() <= e.degree.total());
        checks.push(CheckResult::new(
            &format!("path_linked_cluster_{label}"),
            report.passed && size_ok,
            format!(
                "max out-of-support {:.3e}, max disconnected {:.3e}, tolerance {:.3e}, |C| <= q on {} monomials",
                report.max_out_of_support,
                report.max_disconnected,
                report.tolerance,
                report.entries.len()
            ),
        ));
    }
    Ok(finish("cluster", seed, checks))
}

// -------------------------------------------------------- suite: stability

/// Compress onto the product ground space and compare ground energies.
fn ground_energy_gap_check(lat: &SpinLattice, h: &CMat) -> Result<f64> {
    let full = spectral_decompose(h)?.values[0];
    let iso = lat.low_isometry();
    let low_block = iso.adjoint() * h * &iso;
    let low = spectral_decompose(&low_block)?.values[0];
    Ok((full - low).abs())
}

fn stability_suite(seed: u64) -> Result<SuiteReport> {
    let results: Vec<Result<(f64, bool)>> = (0..20u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(6000 + i));
            let n_sites = 2 + (i as usize % 3);
            let sites: Vec<SiteSpec> = (0..n_sites)
                .map(|u| if (u + i as usize) % 2 == 0 { qubit_site(2.0) } else { qutrit_site(2.0) })
                .collect();
            // each coupling is a product of per-site blocked traceless
            // factors, so every decomposed term commutes with P0
            let site_factor = |rng: &mut ChaCha8Rng, s: &SiteSpec| {
                let d = s.dim;
                let p = CMat::from_fn(d, d, |i, j| {
                    if i == j && i < s.low_dim { c(1.0) } else { c(0.0) }
                });
                let q = identity(d) - &p;
                let m = random_hermitian(rng, d, 1.0);
                let b = &p * &m * &p + &q * &m * &q;
                let tr = (0..d).map(|i| b[(i, i)].re).sum::<f64>() / d as f64;
                b - identity(d).scale(tr)
            };
            let mut edges = Vec::new();
            for u in 0..n_sites - 1 {
                let ou = site_factor(&mut rng, &sites[u]);
                let ov = site_factor(&mut rng, &sites[u + 1]);
                let mut blocked = kron(&ou, &ov);
                let strength = rng.gen_range(0.005..0.01);
                let norm = operator_norm(&blocked);
                if norm > 0.0 {
                    blocked = blocked.scale(strength / norm);
                }
                edges.push(EdgeSpec { u, v: u + 1, v_uv: blocked });
            }
            let lat = SpinLattice::new(sites, edges)?;
            let dec = lat.support_decompose(&lat.v_full())?;
            let report = stability_check(&lat, &dec)?;
            let h = lat.h0_full() + lat.v_full();
            let gap = ground_energy_gap_check(&lat, &h)?;
            Ok((gap, report.stable))
        })
        .collect();
    let mut worst_gap = 0.0f64;
    let mut all_stable = true;
    for r in results {
        let (gap, stable) = r?;
        worst_gap = worst_gap.max(gap);
        all_stable &= stable;
    }
    let checks = vec![
        CheckResult::new(
            "condition_holds_on_all_instances",
            all_stable,
            "sum_k 2^(k+2) J_k < gap on every scaled instance".into(),
        ),
        CheckResult::new(
            "ground_energy_stays_in_p0_block",
            worst_gap <= 1e-10,
            format!("worst |E_min(H) - E_min(P0 block)| = {worst_gap:.3e} over 20 instances"),
        ),
    ];
    Ok(finish("stability", seed, checks))
}

// ------------------------------------------------------------ suite: local

fn local_suite(seed: u64) -> Result<SuiteReport> {
    let mut checks = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(7000));

    let sites = (0..3).map(|_| qubit_site(2.0)).collect::<Vec<_>>();
    let edges = (0..2)
        .map(|u| EdgeSpec { u, v: u + 1, v_uv: random_hermitian(&mut rng, 4, 1.0) })
        .collect::<Vec<_>>();
    let lat = SpinLattice::new(sites, edges)?;

    let state = build_local_sw(&lat, 0.02, 3)?;
    let mut locality_ok = true;
    let mut detail = Vec::new();
    for j in 1..=3usize {
        let kt = state.t()[j - 1].k_locality();
        let kv = state.vseq()[j - 1].k_locality();
        locality_ok &= kt <= j + 1 && kv <= j + 1;
        detail.push(format!("j={j}: |supp T_j|={kt}, |supp V^({})|={kv} (<= {})", j - 1, j + 1));
    }
    checks.push(CheckResult::new(
        "generators_and_remainders_are_local",
        locality_ok,
        detail.join("; "),
    ));

    for n in [2usize, 3] {
        let mut points = Vec::new();
        for e in halving_grid(0.05, 4) {
            let s = build_local_sw(&lat, e, n)?;
            points.push((e, garbage_norm(&s)?));
        }
        checks.push(scaling_check(
            &format!("garbage_scaling_order_{n}"),
            &points,
            n as f64 + 0.5,
        ));
    }
    Ok(finish("local", seed, checks))
}

// ------------------------------------------------------ suite: equivalence

fn equivalence_suite(seed: u64) -> Result<SuiteReport> {
    let mut checks = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(8000));

    let pair = {
        let sites = (0..2).map(|_| qutrit_site(2.0)).collect::<Vec<_>>();
        let edges = vec![EdgeSpec { u: 0, v: 1, v_uv: random_hermitian(&mut rng, 9, 1.0) }];
        SpinLattice::new(sites, edges)?
    };
    let chain = {
        let sites = (0..3).map(|_| qutrit_site(2.0)).collect::<Vec<_>>();
        let edges = vec![
            EdgeSpec { u: 0, v: 1, v_uv: random_hermitian(&mut rng, 9, 1.0) },
            EdgeSpec { u: 1, v: 2, v_uv: random_hermitian(&mut rng, 9, 1.0) },
        ];
        SpinLattice::new(sites, edges)?
    };

    let mut worst_block = 0.0f64;
    for lat in [&pair, &chain] {
        let parts = equivalence_parts(lat, 0.04, 3)?;
        for r in &parts.block_residuals {
            worst_block = worst_block.max(*r);
        }
    }
    checks.push(CheckResult::new(
        "k_coefficients_block_diagonal",
        worst_block <= 1e-9,
        format!("worst off-diagonal block norm {worst_block:.3e} over both chains, n = 3"),
    ));

    for (label, lat) in [("pair", &pair), ("chain3", &chain)] {
        for n in [2usize, 3] {
            let mut points = Vec::new();
            for e in halving_grid(0.04, 4) {
                points.push((e, swolff_core::cluster::equivalence_residual(lat, e, n)?));
            }
            checks.push(scaling_check(
                &format!("residual_scaling_{label}_order_{n}"),
                &points,
                n as f64 + 0.5,
            ));
        }
    }
    Ok(finish("equivalence", seed, checks))
}
