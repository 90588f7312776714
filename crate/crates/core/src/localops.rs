//! Cell-local operators: the inverse divergence into interior bubbles, the
//! lowest-order Raviart-Thomas interpolation, and the sparse matrix `R`
//! that maps a continuous velocity to the RT0 and bubble corrections
//! cancelling its divergence.
//!
//! Rows of `R` are indexed like the non-continuous part of
//! [`VelocitySpace`]: first the facets, then the bubbles cell by cell.

use crate::error::{Error, Result};
use crate::fespace::{dof_f, StokesElement, VelocitySpace};
use crate::linalg::{CsrMatrix, TripletBuilder};
use crate::mesh::{CellGeometry, Point, SimplicialMesh};
use crate::quadrature::QuadratureRule;

/// Bubble coefficients of `R q` on one cell, where `q` is a physical
/// polynomial of degree at most `k - 1`. The cell mean of `q` is ignored.
pub fn apply_inverse_divergence<F>(el: &StokesElement, geo: &CellGeometry, q: F) -> Vec<f64>
where
    F: Fn(&Point) -> f64,
{
    if el.num_bubbles() == 0 {
        return vec![];
    }
    let rule = QuadratureRule::simplex(el.dim, 2 * (el.k - 1));
    let vals: Vec<f64> = rule.points.iter().map(|x| q(&geo.map(x))).collect();
    let moments: Vec<f64> = el
        .bubbles
        .targets
        .iter()
        .map(|t| {
            rule.points
                .iter()
                .zip(&rule.weights)
                .zip(&vals)
                .map(|((x, w), v)| w * v * t.eval(x))
                .sum()
        })
        .collect();
    el.inverse_divergence(geo, &moments)
}

/// RT0 interpolation of a vector field: the flux through every facet.
pub fn rt0_interpolate<F>(mesh: &SimplicialMesh, degree: usize, field: F) -> Result<Vec<f64>>
where
    F: Fn(&Point) -> [f64; 3],
{
    (0..mesh.num_facets())
        .map(|f| dof_f(mesh, f, degree, &field))
        .collect()
}

/// Matrix of the RT0 interpolation restricted to continuous velocities
/// (`n_rt x n_ct`).
pub fn build_rt0_interpolation(mesh: &SimplicialMesh, vs: &VelocitySpace) -> Result<CsrMatrix> {
    let mut t = TripletBuilder::new(vs.n_rt, vs.n_ct);
    push_rt0(mesh, vs, &mut t, 0, 1.0);
    t.build()
}

fn push_rt0(
    mesh: &SimplicialMesh,
    vs: &VelocitySpace,
    t: &mut TripletBuilder,
    row0: usize,
    s: f64,
) {
    let d = vs.dim;
    for c in 0..mesh.num_cells() {
        let nodes = vs.nodes.cell(c);
        for (i, &f) in mesh.cell_facets(c).iter().enumerate() {
            if mesh.facet_cells(f)[0] != c {
                continue;
            }
            let area = mesh.facet_area(f);
            let n = mesh.facet_normal(f);
            for (a, &node) in nodes.iter().enumerate() {
                let m = vs.element.facet_mean[i][a];
                if m.abs() < 1e-15 {
                    continue;
                }
                for j in 0..d {
                    t.push(row0 + f, vs.ct_dof(node, j), s * area * m * n[j]);
                }
            }
        }
    }
}

fn push_inverse_div(
    mesh: &SimplicialMesh,
    vs: &VelocitySpace,
    t: &mut TripletBuilder,
    row0: usize,
    s: f64,
) {
    let d = vs.dim;
    let el = &vs.element;
    if vs.nb == 0 {
        return;
    }
    for c in 0..mesh.num_cells() {
        let geo = CellGeometry::new(mesh, c);
        for (a, &node) in vs.nodes.cell(c).iter().enumerate() {
            for j in 0..d {
                let coef = el.inverse_divergence(&geo, &el.div_target_moments(&geo, a, j));
                for (jb, v) in coef.into_iter().enumerate() {
                    t.push(row0 + vs.bubble_index(c, jb), vs.ct_dof(node, j), s * v);
                }
            }
        }
    }
}

/// `R = -R_{k-1} div - Pi^{RT0}` as a `(n_rt + n_bubble) x n_ct` matrix.
pub fn build_operator_r(mesh: &SimplicialMesh, vs: &VelocitySpace) -> Result<CsrMatrix> {
    let mut t = TripletBuilder::new(vs.n_rt + vs.n_bubble, vs.n_ct);
    push_rt0(mesh, vs, &mut t, 0, -1.0);
    push_inverse_div(mesh, vs, &mut t, vs.n_rt, -1.0);
    t.build().map(|m| m.prune(1e-14))
}

/// `R_perp = R_{k-1} div` onto the bubbles (`n_bubble x n_ct`), for the
/// reduction to piecewise constant pressures. Only defined for `k >= d`.
pub fn build_operator_rperp(mesh: &SimplicialMesh, vs: &VelocitySpace) -> Result<CsrMatrix> {
    if vs.k < vs.dim {
        return Err(Error::Unsupported(format!(
            "R_perp requires k >= d, got k = {} in {}D",
            vs.k, vs.dim
        )));
    }
    let mut t = TripletBuilder::new(vs.n_bubble, vs.n_ct);
    push_inverse_div(mesh, vs, &mut t, 0, 1.0);
    t.build().map(|m| m.prune(1e-14))
}

/// Embeds a continuous coefficient vector into the composite space,
/// including its `R` correction.
pub fn extend_ct(r: &CsrMatrix, ct: &[f64]) -> Result<Vec<f64>> {
    let mut x = ct.to_vec();
    x.extend(r.spmv(ct)?);
    Ok(x)
}
