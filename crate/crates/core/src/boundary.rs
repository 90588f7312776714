//! Non-homogeneous Dirichlet data.
//!
//! The continuous part of the lift is the nodal interpolant of `g` on the
//! boundary nodes. For the decoupled scheme the lift is completed to a
//! divergence-free function by its `R` correction and an RT0 field `z`
//! with zero divergence that carries the boundary fluxes. `z` comes either
//! from a discrete stream function (2D) or from a lumped Darcy problem on
//! the whole mesh or on the layer of cells touching the boundary.

use std::collections::VecDeque;

use crate::assembly::{BcStrategy, Scheme, SchemeConfig};
use crate::error::{Error, Result};
use crate::fespace::{dof_f, VelocitySpace};
use crate::linalg::{CsrMatrix, LinearSolver, TripletBuilder};
use crate::localops::build_rt0_interpolation;
use crate::mesh::{dot, sub, CellGeometry, FacetClass, Point, SimplicialMesh};
use crate::quadrature::QuadratureRule;

/// Flux balance tolerance for boundary data.
pub const COMPATIBILITY_TOL: f64 = 1e-10;

/// A lift of the boundary data into the composite velocity space.
#[derive(Clone, Debug)]
pub struct BoundaryLift {
    /// Continuous part (`n_ct`), zero at interior nodes.
    pub ct: Vec<f64>,
    /// RT0 correction in facet coefficients (`n_facets`); zero unless the
    /// scheme needs a divergence-free lift.
    pub z: Vec<f64>,
    /// The full lift in the composite space.
    pub composite: Vec<f64>,
}

/// Nodal interpolant of `g` at the boundary Lagrange nodes.
pub fn ct_lift<G>(vs: &VelocitySpace, g: G) -> Vec<f64>
where
    G: Fn(&Point) -> [f64; 3],
{
    let mut x = vec![0.0; vs.n_ct];
    for (n, x0) in vs.nodes.coords.iter().enumerate() {
        if vs.nodes.on_boundary[n] {
            let v = g(x0);
            for j in 0..vs.dim {
                x[vs.ct_dof(n, j)] = v[j];
            }
        }
    }
    x
}

/// `int_F g . n` on boundary facets, zero on interior facets.
pub fn boundary_fluxes<G>(mesh: &SimplicialMesh, degree: usize, g: G) -> Result<Vec<f64>>
where
    G: Fn(&Point) -> [f64; 3],
{
    let mut out = vec![0.0; mesh.num_facets()];
    for f in mesh.boundary_facets() {
        out[f] = dof_f(mesh, f, degree, &g)?;
    }
    Ok(out)
}

fn tol(targets: &[f64]) -> f64 {
    COMPATIBILITY_TOL * targets.iter().map(|t| t.abs()).sum::<f64>().max(1.0)
}

/// Endpoints `(start, end)` of a 2D facet, ordered along `tau = (-n_y, n_x)`.
fn oriented_endpoints(mesh: &SimplicialMesh, f: usize) -> (usize, usize) {
    let (a, b) = (mesh.facet(f)[0], mesh.facet(f)[1]);
    let n = mesh.facet_normal(f);
    let tau = [-n[1], n[0], 0.0];
    if dot(&sub(mesh.vertex(b), mesh.vertex(a)), &tau) > 0.0 {
        (a, b)
    } else {
        (b, a)
    }
}

/// Divergence-free RT0 field with the prescribed boundary fluxes, as the
/// curl of a continuous piecewise linear stream function. `targets` holds
/// the flux for each boundary facet (interior entries are ignored).
pub fn stream_function_bc_2d(mesh: &SimplicialMesh, targets: &[f64]) -> Result<Vec<f64>> {
    if mesh.dim() != 2 {
        return Err(Error::Unsupported(
            "stream-function lift needs a 2D mesh".into(),
        ));
    }
    check_len(mesh, targets)?;
    let nv = mesh.num_vertices();
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nv];
    for f in mesh.boundary_facets() {
        let (s, e) = oriented_endpoints(mesh, f);
        adj[s].push((e, targets[f]));
        adj[e].push((s, -targets[f]));
    }
    let mut phi = vec![0.0; nv];
    let mut seen = vec![false; nv];
    for v0 in 0..nv {
        if seen[v0] || adj[v0].is_empty() {
            continue;
        }
        seen[v0] = true;
        let mut queue = VecDeque::from([v0]);
        while let Some(u) = queue.pop_front() {
            for &(w, t) in &adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    phi[w] = phi[u] + t;
                    queue.push_back(w);
                }
            }
        }
    }
    // every boundary component closes up only for compatible data
    let eps = tol(targets);
    for f in mesh.boundary_facets() {
        let (s, e) = oriented_endpoints(mesh, f);
        let gap = phi[e] - phi[s] - targets[f];
        if gap.abs() > eps {
            return Err(Error::Incompatible(format!(
                "boundary flux does not sum to zero (mismatch {gap:e} at facet {f})"
            )));
        }
    }
    Ok((0..mesh.num_facets())
        .map(|f| {
            if mesh.is_boundary_facet(f) {
                targets[f]
            } else {
                let (s, e) = oriented_endpoints(mesh, f);
                phi[e] - phi[s]
            }
        })
        .collect())
}

fn check_len(mesh: &SimplicialMesh, targets: &[f64]) -> Result<()> {
    if targets.len() != mesh.num_facets() {
        return Err(Error::Shape(format!(
            "{} facet fluxes for {} facets",
            targets.len(),
            mesh.num_facets()
        )));
    }
    Ok(())
}

/// Lumped RT0 mass `(psi_F, psi_F)` for every facet.
pub fn lumped_rt0_mass(mesh: &SimplicialMesh) -> Vec<f64> {
    let d = mesh.dim();
    let rule = QuadratureRule::simplex(d, 2);
    let rt = crate::fespace::reference::rt0_basis(d);
    let mut m = vec![0.0; mesh.num_facets()];
    for c in 0..mesh.num_cells() {
        let geo = CellGeometry::new(mesh, c);
        for (i, &f) in mesh.cell_facets(c).iter().enumerate() {
            for (x, w) in rule.points.iter().zip(&rule.weights) {
                let v = geo.piola(&crate::fespace::reference::eval_vec(&rt[i], x));
                m[f] += w * geo.det * dot(&v, &v);
            }
        }
    }
    m
}

/// Solves `D z - B^T r = 0`, `B z = 0` for the facets without a prescribed
/// value, eliminating `z` through the diagonal `D`. The Schur complement
/// in `r` is singular once per connected group of cells; one cell per group
/// is pinned.
fn darcy_solve(
    mesh: &SimplicialMesh,
    fixed: &[Option<f64>],
    solver: &LinearSolver,
) -> Result<Vec<f64>> {
    let nc = mesh.num_cells();
    let dmass = lumped_rt0_mass(mesh);
    let mut rhs = vec![0.0; nc];
    let mut t = TripletBuilder::new(nc, nc);
    for c in 0..nc {
        for (i, &f) in mesh.cell_facets(c).iter().enumerate() {
            let s = mesh.cell_facet_sign(c, i);
            match fixed[f] {
                Some(v) => rhs[c] -= s * v,
                None => {
                    for &c2 in mesh.facet_cells(f).iter().filter(|&&c2| c2 != usize::MAX) {
                        let i2 = mesh.cell_facets(c2).iter().position(|&g| g == f).unwrap();
                        let s2 = mesh.cell_facet_sign(c2, i2);
                        t.push(c, c2, s * s2 / dmass[f]);
                    }
                }
            }
        }
    }
    let schur = t.build()?;
    // groups of cells connected through free facets
    let mut group = vec![usize::MAX; nc];
    let mut pinned = Vec::new();
    for c0 in 0..nc {
        if group[c0] != usize::MAX {
            continue;
        }
        let gid = pinned.len();
        pinned.push(c0);
        group[c0] = gid;
        let mut queue = VecDeque::from([c0]);
        let mut balance = 0.0;
        let mut scale = 0.0f64;
        while let Some(c) = queue.pop_front() {
            balance += rhs[c];
            scale += rhs[c].abs();
            for &c2 in schur.row(c).0 {
                if group[c2] == usize::MAX {
                    group[c2] = gid;
                    queue.push_back(c2);
                }
            }
        }
        if balance.abs() > COMPATIBILITY_TOL * scale.max(1.0) {
            return Err(Error::Incompatible(format!(
                "net boundary flux {balance:e} on a connected region"
            )));
        }
    }
    let keep: Vec<usize> = (0..nc).filter(|c| !pinned.contains(c)).collect();
    let mut r = vec![0.0; nc];
    if !keep.is_empty() {
        let s = schur.submatrix(&keep, &keep);
        let b: Vec<f64> = keep.iter().map(|&c| rhs[c]).collect();
        let (x, _) = solver.solve(&s, &b)?;
        for (&c, v) in keep.iter().zip(x) {
            r[c] = v;
        }
    }
    let mut z = vec![0.0; mesh.num_facets()];
    for f in 0..mesh.num_facets() {
        z[f] = match fixed[f] {
            Some(v) => v,
            None => {
                let mut btr = 0.0;
                for &c in mesh.facet_cells(f).iter().filter(|&&c| c != usize::MAX) {
                    let i = mesh.cell_facets(c).iter().position(|&g| g == f).unwrap();
                    btr += mesh.cell_facet_sign(c, i) * r[c];
                }
                btr / dmass[f]
            }
        };
    }
    Ok(z)
}

/// Divergence-free RT0 field with the prescribed boundary fluxes from the
/// lumped Darcy problem on the whole mesh.
pub fn darcy_bc_global(
    mesh: &SimplicialMesh,
    targets: &[f64],
    solver: &LinearSolver,
) -> Result<Vec<f64>> {
    check_len(mesh, targets)?;
    let fixed: Vec<Option<f64>> = (0..mesh.num_facets())
        .map(|f| mesh.is_boundary_facet(f).then(|| targets[f]))
        .collect();
    darcy_solve(mesh, &fixed, solver)
}

/// Same as [`darcy_bc_global`], restricted to the cells touching the
/// boundary. The flux through the inner boundary of the layer is zero.
pub fn darcy_bc_patch(
    mesh: &SimplicialMesh,
    targets: &[f64],
    solver: &LinearSolver,
) -> Result<Vec<f64>> {
    check_len(mesh, targets)?;
    let layer = mesh.boundary_layer()?;
    let fixed: Vec<Option<f64>> = (0..layer.mesh.num_facets())
        .map(|f| match layer.facet_class[f] {
            FacetClass::Boundary => Some(layer.facet_sign[f] * targets[layer.facet_map[f]]),
            FacetClass::LayerBoundary => Some(0.0),
            FacetClass::Interior => None,
        })
        .collect();
    let zl = darcy_solve(&layer.mesh, &fixed, solver)?;
    let mut z = vec![0.0; mesh.num_facets()];
    for (f, v) in zl.into_iter().enumerate() {
        z[layer.facet_map[f]] = layer.facet_sign[f] * v;
    }
    Ok(z)
}

/// Dispatches to the configured strategy.
pub fn divfree_lift(
    mesh: &SimplicialMesh,
    targets: &[f64],
    strategy: BcStrategy,
) -> Result<Vec<f64>> {
    let solver = LinearSolver::ldlt();
    match strategy {
        BcStrategy::Stream => stream_function_bc_2d(mesh, targets),
        BcStrategy::DarcyGlobal => darcy_bc_global(mesh, targets, &solver),
        BcStrategy::DarcyPatch => darcy_bc_patch(mesh, targets, &solver),
    }
}

/// Builds the lift for the configured scheme.
///
/// * decoupled: `[I g; R I g + z]`, divergence-free with the exact boundary
///   fluxes of `g`;
/// * full: `[I g; x_b; 0]` with `x_b` the missing boundary fluxes, or
///   `[I g; 0; 0]` for the bubble-only enrichment;
/// * reduced: the continuous part followed by its prescribed bubble
///   correction, plus `x_b` when RT0 functions are present (`k < d`).
pub fn build_lift<G>(
    mesh: &SimplicialMesh,
    vs: &VelocitySpace,
    r: &CsrMatrix,
    rperp: Option<&CsrMatrix>,
    cfg: &SchemeConfig,
    g: G,
) -> Result<BoundaryLift>
where
    G: Fn(&Point) -> [f64; 3],
{
    let ct = ct_lift(vs, &g);
    let mut composite = ct.clone();
    composite.resize(vs.ndofs(), 0.0);
    let mut z = vec![0.0; vs.n_rt];
    if ct.iter().all(|&v| v == 0.0) {
        return Ok(BoundaryLift { ct, z, composite });
    }
    let gf = boundary_fluxes(mesh, cfg.rhs_degree.max(2 * cfg.k + 2), &g)?;
    let pig = build_rt0_interpolation(mesh, vs)?.spmv(&ct)?;
    let missing: Vec<f64> = (0..vs.n_rt)
        .map(|f| {
            if mesh.is_boundary_facet(f) {
                gf[f] - pig[f]
            } else {
                0.0
            }
        })
        .collect();
    let rig = r.spmv(&ct)?;
    let (rt, bub) = composite[vs.n_ct..].split_at_mut(vs.n_rt);
    match cfg.scheme {
        Scheme::Dfb => {
            let targets: Vec<f64> = (0..vs.n_rt)
                .map(|f| {
                    if mesh.is_boundary_facet(f) {
                        gf[f] - pig[f] - rig[f]
                    } else {
                        0.0
                    }
                })
                .collect();
            z = divfree_lift(mesh, &targets, cfg.bc)?;
            for (i, v) in rt.iter_mut().enumerate() {
                *v = rig[i] + z[i];
            }
            bub.copy_from_slice(&rig[vs.n_rt..]);
        }
        Scheme::Full => {
            if !cfg.full_is_original() {
                rt.copy_from_slice(&missing);
            }
        }
        Scheme::Red => {
            if vs.k >= vs.dim {
                let rp = rperp.ok_or_else(|| Error::Shape("reduced lift needs R_perp".into()))?;
                for (b, v) in bub.iter_mut().zip(rp.spmv(&ct)?) {
                    *b = -v;
                }
            } else {
                rt.copy_from_slice(&missing);
                bub.copy_from_slice(&rig[vs.n_rt..]);
            }
        }
    }
    Ok(BoundaryLift { ct, z, composite })
}

/// Net flux `sum_i sign int_F z . n` through each cell's facets.
pub fn cell_flux_balance(mesh: &SimplicialMesh, z: &[f64]) -> Vec<f64> {
    (0..mesh.num_cells())
        .map(|c| {
            mesh.cell_facets(c)
                .iter()
                .enumerate()
                .map(|(i, &f)| mesh.cell_facet_sign(c, i) * z[f])
                .sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::localops::{build_operator_r, extend_ct};
    use std::f64::consts::PI;

    fn u2(x: &Point) -> [f64; 3] {
        let (s, c) = ((2.0 * PI * x[0]).sin(), (2.0 * PI * x[0]).cos());
        let (sy, cy) = ((2.0 * PI * x[1]).sin(), (2.0 * PI * x[1]).cos());
        [-2.0 * PI * s * sy, -2.0 * PI * c * cy, 0.0]
    }

    fn u3(x: &Point) -> [f64; 3] {
        [x[2].sin(), -x[0].cos(), -x[1].cos()]
    }

    fn check_z(mesh: &SimplicialMesh, z: &[f64], targets: &[f64]) {
        assert!(cell_flux_balance(mesh, z).iter().all(|b| b.abs() < 1e-12));
        for f in mesh.boundary_facets() {
            assert!((z[f] - targets[f]).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_data_gives_zero_field() {
        let m = SimplicialMesh::structured_unit(2, 3).unwrap();
        let zero = vec![0.0; m.num_facets()];
        for s in [
            BcStrategy::Stream,
            BcStrategy::DarcyGlobal,
            BcStrategy::DarcyPatch,
        ] {
            assert!(divfree_lift(&m, &zero, s)
                .unwrap()
                .iter()
                .all(|&v| v == 0.0));
        }
    }

    #[test]
    fn strategies_reproduce_boundary_fluxes() {
        for n in [1, 2, 4] {
            let m = SimplicialMesh::structured_unit(2, n).unwrap();
            let gf = boundary_fluxes(&m, 12, u2).unwrap();
            let total: f64 = gf.iter().sum::<f64>();
            assert!(total.abs() < 1e-12);
            for s in [
                BcStrategy::Stream,
                BcStrategy::DarcyGlobal,
                BcStrategy::DarcyPatch,
            ] {
                let z = divfree_lift(&m, &gf, s).unwrap();
                check_z(&m, &z, &gf);
            }
        }
        let m = SimplicialMesh::structured_unit(3, 2).unwrap();
        let gf = boundary_fluxes(&m, 8, u3).unwrap();
        for s in [BcStrategy::DarcyGlobal, BcStrategy::DarcyPatch] {
            let z = divfree_lift(&m, &gf, s).unwrap();
            check_z(&m, &z, &gf);
        }
        assert!(divfree_lift(&m, &gf, BcStrategy::Stream).is_err());
    }

    #[test]
    fn boundary_fluxes_match_exact_integrals() {
        // on the unit square edge x = 1: int_0^1 u_1(1, y) dy = 0 for every
        // sub-interval since sin(2 pi) = 0; on y = 0: -int u_2 = 2 pi int cos(2 pi x)
        let m = SimplicialMesh::structured_unit(2, 2).unwrap();
        let gf = boundary_fluxes(&m, 12, u2).unwrap();
        for f in m.boundary_facets() {
            let fv = m.facet(f);
            let (a, b) = (m.vertex(fv[0]), m.vertex(fv[1]));
            let exact = if a[1] == 0.0 && b[1] == 0.0 {
                let (x0, x1) = (a[0].min(b[0]), a[0].max(b[0]));
                (2.0 * PI * x1).sin() - (2.0 * PI * x0).sin()
            } else if a[0] == 1.0 && b[0] == 1.0 {
                0.0
            } else {
                continue;
            };
            assert!((gf[f] - exact).abs() < 1e-12, "{} vs {exact}", gf[f]);
        }
    }

    #[test]
    fn incompatible_data_is_rejected() {
        let m = SimplicialMesh::structured_unit(2, 2).unwrap();
        let gf = boundary_fluxes(&m, 4, |_| [1.0 + 0.0, 0.0, 0.0]).unwrap();
        let mut bad = gf.clone();
        let f = m.boundary_facets().next().unwrap();
        bad[f] += 1e-3;
        for s in [
            BcStrategy::Stream,
            BcStrategy::DarcyGlobal,
            BcStrategy::DarcyPatch,
        ] {
            assert!(divfree_lift(&m, &gf, s).is_ok());
            assert!(matches!(
                divfree_lift(&m, &bad, s),
                Err(Error::Incompatible(_))
            ));
        }
    }

    #[test]
    fn dfb_lift_is_divergence_free_with_exact_fluxes() {
        for (dim, bc) in [
            (2, BcStrategy::Stream),
            (2, BcStrategy::DarcyPatch),
            (3, BcStrategy::DarcyPatch),
        ] {
            let m = SimplicialMesh::structured_unit(dim, 2).unwrap();
            let k = 2;
            let vs = VelocitySpace::new(&m, k).unwrap();
            let r = build_operator_r(&m, &vs).unwrap();
            let mut cfg = SchemeConfig::new(dim, k, -1, Scheme::Dfb);
            cfg.bc = bc;
            let g = if dim == 2 { u2 } else { u3 };
            let lift = build_lift(&m, &vs, &r, None, &cfg, g).unwrap();
            let (dv, gr) = vs.divergence_norms(&m, &lift.composite);
            assert!(dv <= 1e-10 * gr, "{dv} {gr}");
            // boundary flux of the composite lift equals int g.n
            let gf = boundary_fluxes(&m, 12, g).unwrap();
            let pig = build_rt0_interpolation(&m, &vs)
                .unwrap()
                .spmv(&lift.ct)
                .unwrap();
            for f in m.boundary_facets() {
                let flux = pig[f] + lift.composite[vs.rt_offset() + f];
                assert!((flux - gf[f]).abs() < 1e-10);
            }
            let plain = extend_ct(&r, &lift.ct).unwrap();
            assert_eq!(plain[..vs.n_ct], lift.composite[..vs.n_ct]);
        }
    }
}
