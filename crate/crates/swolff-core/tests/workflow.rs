//! End-to-end flows through the public API: raw models from splitting to
//! spectra, series against the exact transform, and lattice series in both
//! the global and local variants.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use swolff_core::cluster::{multivariate_heff, HeffMethod};
use swolff_core::exact::{exact_sw_transform, make_split, PerturbedProblem};
use swolff_core::lattice::{EdgeSpec, SiteSpec, SpinLattice};
use swolff_core::operator::{kron, operator_norm, spectral_decompose};
use swolff_core::perturbative::sw_series;
use swolff_core::random::{random_gapped_hermitian, random_hermitian};
use swolff_core::{C64, CMat};

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn sigma_x() -> CMat {
    CMat::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)])
}

fn qubit_chain(n_sites: usize, gap: f64) -> SpinLattice {
    let h_site = CMat::from_row_slice(2, 2, &[c(0.0), c(0.0), c(0.0), c(gap)]);
    let sites = (0..n_sites)
        .map(|_| SiteSpec { dim: 2, h0: h_site.clone(), low_dim: 1 })
        .collect();
    let coupling = kron(&sigma_x(), &sigma_x());
    let edges = (0..n_sites - 1)
        .map(|u| EdgeSpec { u, v: u + 1, v_uv: coupling.clone() })
        .collect();
    SpinLattice::new(sites, edges).unwrap()
}

#[test]
fn exact_transform_reproduces_the_low_spectrum() {
    let mut rng = ChaCha8Rng::seed_from_u64(401);
    let h0 = random_gapped_hermitian(&mut rng, 6, 2, 1.0, 2.0);
    let v = random_hermitian(&mut rng, 6, 1.0);
    let split = make_split(&h0, (-0.5, 1.5)).unwrap();
    let prob = PerturbedProblem::new(split, v, 0.1).unwrap();
    let sw = exact_sw_transform(&prob).unwrap();

    // the effective Hamiltonian on the low basis carries exactly the
    // low-window eigenvalues of the perturbed Hamiltonian
    let low = spectral_decompose(&sw.heff_low).unwrap().values;
    let reference = sw.perturbed.low_values();
    assert_eq!(low.len(), reference.len());
    for (a, b) in low.iter().zip(&reference) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
}

#[test]
fn series_truncation_error_shrinks_with_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(402);
    let h0 = random_gapped_hermitian(&mut rng, 6, 2, 1.0, 2.0);
    let v = random_hermitian(&mut rng, 6, 1.0);
    let split = make_split(&h0, (-0.5, 1.5)).unwrap();
    let eps = 0.05;
    let prob = PerturbedProblem::new(split.clone(), v.clone(), eps).unwrap();
    let exact = exact_sw_transform(&prob).unwrap().heff;

    let mut previous = f64::INFINITY;
    for order in 1..=4 {
        let sw = sw_series(&split, &v, order).unwrap();
        let residual = operator_norm(&(&exact - sw.heff.evaluate(eps)));
        assert!(
            residual < 0.5 * previous,
            "order {order}: residual {residual:.3e} did not improve on {previous:.3e}"
        );
        previous = residual;
    }
}

#[test]
fn multivariate_series_specialize_to_the_univariate_one() {
    let lat = qubit_chain(3, 2.0);
    let split = lat.global_split().unwrap();
    let v = lat.v_full();
    let univariate = sw_series(&split, &v, 3).unwrap();
    let global = multivariate_heff(&lat, 3, HeffMethod::GlobalRecursion).unwrap();
    let collapsed = global.collapse();
    for q in 0..=3 {
        let d = operator_norm(&(&collapsed.coeffs[q] - &univariate.heff.coeffs[q]));
        assert!(d < 1e-10, "order {q}: specialization defect {d:.3e}");
    }
}

#[test]
fn local_series_heff_matches_exact_at_small_coupling() {
    let lat = qubit_chain(3, 2.0);
    let split = lat.global_split().unwrap();
    let v = lat.v_full();
    let eps = 0.01;
    let prob = PerturbedProblem::new(split, v, eps).unwrap();
    let exact = exact_sw_transform(&prob).unwrap().heff;
    let local = multivariate_heff(&lat, 3, HeffMethod::LocalSw).unwrap();
    let at_eps = local.evaluate(&vec![eps; lat.edges().len()]);
    let residual = operator_norm(&(&exact - at_eps));
    // truncated at order 3, so the defect is fourth order in the coupling
    assert!(residual < 100.0 * eps.powi(4), "residual {residual:.3e}");
}
