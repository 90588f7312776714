//! Finite element spaces and global degree-of-freedom maps.
//!
//! Vector Lagrange dofs are numbered node-major: the dof of component `j`
//! at node `a` is `a * dim + j`. Raviart-Thomas functions of the lowest
//! order carry one dof per facet, normalised to unit flux through the facet
//! along its stored normal. Interior bubbles and discontinuous pressures are
//! numbered cell by cell.

pub mod element;
pub mod reference;
pub mod velocity;

use std::collections::HashMap;

pub use element::{ElementTab, StokesElement};
pub use reference::{BubbleComplement, LagrangeBasis};
pub use velocity::{CellValues, VelocitySpace};

use crate::error::{Error, Result};
use crate::mesh::{CellGeometry, Point, SimplicialMesh};
use crate::poly::dim_pk;
use crate::quadrature::QuadratureRule;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpaceKind {
    VectorLagrange(usize),
    Rt0,
    /// Interior bubble complement of the given degree.
    RtInteriorBubble(usize),
    DiscontinuousP(usize),
    ScalarLagrange(usize),
}

/// Global numbering of continuous Lagrange nodes.
#[derive(Clone, Debug)]
pub struct LagrangeNodes {
    pub k: usize,
    pub nodes_per_cell: usize,
    /// `cell_nodes[c * nodes_per_cell + a]`
    pub cell_nodes: Vec<usize>,
    pub coords: Vec<Point>,
    pub on_boundary: Vec<bool>,
}

impl LagrangeNodes {
    pub fn new(mesh: &SimplicialMesh, k: usize) -> Self {
        let dim = mesh.dim();
        let basis = LagrangeBasis::new(dim, k);
        let npc = basis.len();
        let mut index: HashMap<Vec<(usize, usize)>, usize> = HashMap::new();
        let mut cell_nodes = Vec::with_capacity(mesh.num_cells() * npc);
        let mut coords = Vec::new();
        let mut on_boundary = Vec::new();
        for c in 0..mesh.num_cells() {
            let cell = mesh.cell(c);
            let geo = CellGeometry::new(mesh, c);
            for (a, b) in basis.nodes.iter().enumerate() {
                let mut key: Vec<(usize, usize)> = (0..=dim)
                    .filter(|&i| b[i] > 0)
                    .map(|i| (cell[i], b[i]))
                    .collect();
                key.sort_unstable();
                let id = *index.entry(key).or_insert_with(|| {
                    coords.push(geo.map(&basis.node_coords[a]));
                    on_boundary.push(false);
                    coords.len() - 1
                });
                cell_nodes.push(id);
            }
            for i in 0..=dim {
                if mesh.is_boundary_facet(mesh.cell_facets(c)[i]) {
                    for a in basis.facet_nodes(i) {
                        on_boundary[cell_nodes[c * npc + a]] = true;
                    }
                }
            }
        }
        Self {
            k,
            nodes_per_cell: npc,
            cell_nodes,
            coords,
            on_boundary,
        }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        &self.cell_nodes[c * self.nodes_per_cell..(c + 1) * self.nodes_per_cell]
    }
}

/// A finite element space on a mesh: its kind and cell-to-global dof map.
#[derive(Clone, Debug)]
pub struct FESpace {
    pub kind: SpaceKind,
    pub dim: usize,
    pub ndofs: usize,
    pub dofs_per_cell: usize,
    cell_dofs: Vec<usize>,
    /// Dofs fixed by Dirichlet conditions (Lagrange spaces only).
    pub boundary_dofs: Vec<usize>,
}

impl FESpace {
    pub fn new(mesh: &SimplicialMesh, kind: SpaceKind) -> Result<Self> {
        let dim = mesh.dim();
        let nc = mesh.num_cells();
        match kind {
            SpaceKind::VectorLagrange(k) | SpaceKind::ScalarLagrange(k) => {
                if k == 0 {
                    return Err(Error::Unsupported("Lagrange degree 0".into()));
                }
                let comps = if matches!(kind, SpaceKind::VectorLagrange(_)) {
                    dim
                } else {
                    1
                };
                let nodes = LagrangeNodes::new(mesh, k);
                let npc = nodes.nodes_per_cell;
                let mut cell_dofs = Vec::with_capacity(nc * npc * comps);
                for c in 0..nc {
                    for &n in nodes.cell(c) {
                        for j in 0..comps {
                            cell_dofs.push(n * comps + j);
                        }
                    }
                }
                let boundary_dofs = (0..nodes.len())
                    .filter(|&n| nodes.on_boundary[n])
                    .flat_map(|n| (0..comps).map(move |j| n * comps + j))
                    .collect();
                Ok(Self {
                    kind,
                    dim,
                    ndofs: nodes.len() * comps,
                    dofs_per_cell: npc * comps,
                    cell_dofs,
                    boundary_dofs,
                })
            }
            SpaceKind::Rt0 => Ok(Self {
                kind,
                dim,
                ndofs: mesh.num_facets(),
                dofs_per_cell: dim + 1,
                cell_dofs: (0..nc).flat_map(|c| mesh.cell_facets(c).to_vec()).collect(),
                boundary_dofs: vec![],
            }),
            SpaceKind::RtInteriorBubble(m) => {
                let nb = BubbleComplement::expected_len(dim, m);
                Ok(Self::cellwise(kind, dim, nc, nb))
            }
            SpaceKind::DiscontinuousP(m) => Ok(Self::cellwise(kind, dim, nc, dim_pk(dim, m))),
        }
    }

    fn cellwise(kind: SpaceKind, dim: usize, nc: usize, per_cell: usize) -> Self {
        Self {
            kind,
            dim,
            ndofs: nc * per_cell,
            dofs_per_cell: per_cell,
            cell_dofs: (0..nc * per_cell).collect(),
            boundary_dofs: vec![],
        }
    }

    pub fn cell_dofs(&self, c: usize) -> &[usize] {
        &self.cell_dofs[c * self.dofs_per_cell..(c + 1) * self.dofs_per_cell]
    }
}

/// A coefficient vector bound to a space.
#[derive(Clone, Debug)]
pub struct FEFunction<'a> {
    pub space: &'a FESpace,
    pub coeffs: Vec<f64>,
}

impl<'a> FEFunction<'a> {
    pub fn new(space: &'a FESpace, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.ndofs {
            return Err(Error::Shape(format!(
                "{} coefficients for a space with {} dofs",
                coeffs.len(),
                space.ndofs
            )));
        }
        Ok(Self { space, coeffs })
    }

    pub fn zeros(space: &'a FESpace) -> Self {
        Self {
            space,
            coeffs: vec![0.0; space.ndofs],
        }
    }
}

/// Normal flux `int_F v . n` of a vector field through facet `f`, with `n`
/// the stored facet normal.
pub fn dof_f<F>(mesh: &SimplicialMesh, f: usize, degree: usize, field: F) -> Result<f64>
where
    F: Fn(&Point) -> [f64; 3],
{
    if f >= mesh.num_facets() {
        return Err(Error::Shape(format!("facet {f} out of range")));
    }
    let dim = mesh.dim();
    let verts: Vec<Point> = mesh.facet(f).iter().map(|&v| *mesh.vertex(v)).collect();
    let n = mesh.facet_normal(f);
    let rule = QuadratureRule::simplex(dim - 1, degree);
    let area = mesh.facet_area(f);
    let ref_area = if dim == 2 { 1.0 } else { 0.5 };
    let mut s = 0.0;
    for (t, w) in rule.points.iter().zip(&rule.weights) {
        let mut x = verts[0];
        for (i, v) in verts[1..].iter().enumerate() {
            for c in 0..3 {
                x[c] += t[i] * (v[c] - verts[0][c]);
            }
        }
        let val = field(&x);
        s += w * (val[0] * n[0] + val[1] * n[1] + val[2] * n[2]);
    }
    Ok(s * area / ref_area)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lagrange_dof_counts() {
        let m = SimplicialMesh::structured_unit(2, 2).unwrap();
        for k in 1..=4 {
            let nodes = LagrangeNodes::new(&m, k);
            assert_eq!(nodes.len(), (2 * k + 1) * (2 * k + 1));
            let nb = nodes.on_boundary.iter().filter(|&&b| b).count();
            assert_eq!(nb, 8 * k);
        }
        let m = SimplicialMesh::structured_unit(3, 2).unwrap();
        for k in 1..=3 {
            let nodes = LagrangeNodes::new(&m, k);
            assert_eq!(nodes.len(), (2 * k + 1).pow(3));
            let interior = nodes.on_boundary.iter().filter(|&&b| !b).count();
            assert_eq!(interior, (2 * k - 1).pow(3));
        }
        let v = FESpace::new(&m, SpaceKind::VectorLagrange(1)).unwrap();
        assert_eq!(v.ndofs, 27 * 3);
    }

    #[test]
    fn node_coordinates_agree_between_cells() {
        let m = SimplicialMesh::structured_unit(3, 1).unwrap().refine();
        let k = 3;
        let basis = LagrangeBasis::new(3, k);
        let nodes = LagrangeNodes::new(&m, k);
        for c in 0..m.num_cells() {
            let geo = CellGeometry::new(&m, c);
            for (a, &n) in nodes.cell(c).iter().enumerate() {
                let x = geo.map(&basis.node_coords[a]);
                let y = nodes.coords[n];
                assert!((0..3).all(|i| (x[i] - y[i]).abs() < 1e-14));
            }
        }
    }

    #[test]
    fn constant_flux() {
        let m = SimplicialMesh::structured_unit(2, 4).unwrap();
        for f in m.boundary_facets() {
            let flux = dof_f(&m, f, 2, |_| [1.0, 0.0, 0.0]).unwrap();
            let n = m.facet_normal(f);
            assert!((flux - n[0] * m.facet_area(f)).abs() < 1e-15);
            if n[0] > 0.5 {
                assert!((flux - 0.25).abs() < 1e-15);
            }
        }
        assert!(dof_f(&m, m.num_facets(), 2, |_| [0.0; 3]).is_err());
    }
}
