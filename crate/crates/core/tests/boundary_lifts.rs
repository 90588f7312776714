//! Divergence-free lifts of random boundary fluxes.

use proptest::prelude::*;

use dfstokes::assembly::BcStrategy;
use dfstokes::boundary::{cell_flux_balance, divfree_lift};
use dfstokes::{Error, SimplicialMesh};

/// Outward sign of each boundary facet's normal.
fn outward(mesh: &SimplicialMesh, f: usize) -> f64 {
    let c = mesh.facet_cells(f)[0];
    let i = mesh.cell_facets(c).iter().position(|&g| g == f).unwrap();
    mesh.cell_facet_sign(c, i)
}

/// Random boundary fluxes with zero net outflow.
fn compatible(mesh: &SimplicialMesh, raw: &[f64]) -> Vec<f64> {
    let bnd: Vec<usize> = mesh.boundary_facets().collect();
    let mut t = vec![0.0; mesh.num_facets()];
    for (i, &f) in bnd.iter().enumerate() {
        t[f] = raw[i % raw.len()];
    }
    let net: f64 = bnd.iter().map(|&f| outward(mesh, f) * t[f]).sum::<f64>() / bnd.len() as f64;
    for &f in &bnd {
        t[f] -= outward(mesh, f) * net;
    }
    t
}

fn strategies(dim: usize) -> Vec<BcStrategy> {
    let mut s = vec![BcStrategy::DarcyGlobal, BcStrategy::DarcyPatch];
    if dim == 2 {
        s.push(BcStrategy::Stream);
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lifts_match_fluxes_and_balance(dim in 2usize..=3, n in 1usize..=3, raw in prop::collection::vec(-2.0f64..2.0, 1..40)) {
        let mesh = SimplicialMesh::structured_unit(dim, n).unwrap();
        let t = compatible(&mesh, &raw);
        for s in strategies(dim) {
            let z = divfree_lift(&mesh, &t, s).unwrap();
            for f in mesh.boundary_facets() {
                prop_assert!((z[f] - t[f]).abs() < 1e-12);
            }
            for b in cell_flux_balance(&mesh, &z) {
                prop_assert!(b.abs() < 1e-11, "{s}: cell balance {b}");
            }
        }
    }

    #[test]
    fn net_outflow_is_rejected(dim in 2usize..=3, raw in prop::collection::vec(-2.0f64..2.0, 1..20), bump in 0.01f64..1.0) {
        let mesh = SimplicialMesh::structured_unit(dim, 2).unwrap();
        let mut t = compatible(&mesh, &raw);
        let f = mesh.boundary_facets().next().unwrap();
        t[f] += bump;
        for s in strategies(dim) {
            let err = divfree_lift(&mesh, &t, s).unwrap_err();
            prop_assert!(matches!(err, Error::Incompatible(_)), "{s}: {err}");
            prop_assert_eq!(err.exit_code(), 2);
        }
    }
}

#[test]
fn patch_lift_vanishes_away_from_the_boundary() {
    let mesh = SimplicialMesh::structured_unit(2, 6).unwrap();
    let t = compatible(&mesh, &[1.0, -0.5, 0.25]);
    let z = divfree_lift(&mesh, &t, BcStrategy::DarcyPatch).unwrap();
    let touches = |f: usize| mesh.facet(f).iter().any(|&v| mesh.is_boundary_vertex(v));
    for f in mesh.interior_facets().filter(|&f| !touches(f)) {
        assert_eq!(z[f], 0.0);
    }
}
