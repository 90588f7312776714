//! The composite discrete velocity space: continuous `P_k` vectors, then one
//! RT0 function per facet, then the interior bubbles cell by cell.

use super::element::{ElementTab, StokesElement};
use super::LagrangeNodes;
use crate::error::{Error, Result};
use crate::mesh::{CellGeometry, SimplicialMesh};

#[derive(Clone, Debug)]
pub struct VelocitySpace {
    pub dim: usize,
    pub k: usize,
    pub element: StokesElement,
    pub nodes: LagrangeNodes,
    pub n_ct: usize,
    pub n_rt: usize,
    /// Bubbles per cell.
    pub nb: usize,
    pub n_bubble: usize,
}

/// Composite velocity data at the quadrature points of one cell.
#[derive(Clone, Debug, Default)]
pub struct CellValues {
    pub u: Vec<[f64; 3]>,
    pub div: Vec<f64>,
    /// Gradient of the continuous part, `grad[q][r][c] = d u_r / d x_c`.
    pub grad_ct: Vec<[[f64; 3]; 3]>,
}

impl VelocitySpace {
    pub fn new(mesh: &SimplicialMesh, k: usize) -> Result<Self> {
        if k == 0 || k > 4 {
            return Err(Error::Unsupported(format!("polynomial degree {k}")));
        }
        let dim = mesh.dim();
        let element = StokesElement::new(dim, k)?;
        let nodes = LagrangeNodes::new(mesh, k);
        let nb = element.num_bubbles();
        Ok(Self {
            dim,
            k,
            n_ct: nodes.len() * dim,
            n_rt: mesh.num_facets(),
            nb,
            n_bubble: nb * mesh.num_cells(),
            element,
            nodes,
        })
    }

    pub fn ndofs(&self) -> usize {
        self.n_ct + self.n_rt + self.n_bubble
    }

    pub fn rt_offset(&self) -> usize {
        self.n_ct
    }

    pub fn bubble_offset(&self) -> usize {
        self.n_ct + self.n_rt
    }

    pub fn ct_dof(&self, node: usize, comp: usize) -> usize {
        node * self.dim + comp
    }

    /// Index of bubble `j` of cell `c` counted from the start of the bubble block.
    pub fn bubble_index(&self, c: usize, j: usize) -> usize {
        c * self.nb + j
    }

    /// Continuous dofs on the boundary, ascending.
    pub fn ct_boundary_dofs(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&n| self.nodes.on_boundary[n])
            .flat_map(|n| (0..self.dim).map(move |j| n * self.dim + j))
            .collect()
    }

    pub fn ct_free_dofs(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&n| !self.nodes.on_boundary[n])
            .flat_map(|n| (0..self.dim).map(move |j| n * self.dim + j))
            .collect()
    }

    /// Evaluates a coefficient vector of the whole space on cell `c`.
    pub fn eval_cell(
        &self,
        mesh: &SimplicialMesh,
        c: usize,
        geo: &CellGeometry,
        coeffs: &[f64],
        tab: &ElementTab,
    ) -> CellValues {
        let d = self.dim;
        let nq = tab.rule.points.len();
        let mut out = CellValues {
            u: vec![[0.0; 3]; nq],
            div: vec![0.0; nq],
            grad_ct: vec![[[0.0; 3]; 3]; nq],
        };
        let cell_nodes = self.nodes.cell(c);
        let facets = mesh.cell_facets(c);
        let rt_div = self.element.rt0_div() / geo.det;
        for q in 0..nq {
            let (u, dv, g) = (&mut out.u[q], &mut out.div[q], &mut out.grad_ct[q]);
            for (a, &n) in cell_nodes.iter().enumerate() {
                let phi = tab.lag[q][a];
                let grad = geo.grad(&tab.lag_grad[q][a]);
                for r in 0..d {
                    let coef = coeffs[n * d + r];
                    if coef == 0.0 {
                        continue;
                    }
                    u[r] += coef * phi;
                    *dv += coef * grad[r];
                    for (gc, gv) in g[r].iter_mut().zip(&grad).take(d) {
                        *gc += coef * gv;
                    }
                }
            }
            for (i, &f) in facets.iter().enumerate() {
                let coef = coeffs[self.n_ct + f] * mesh.cell_facet_sign(c, i);
                if coef == 0.0 {
                    continue;
                }
                let v = geo.piola(&tab.rt0[q][i]);
                for r in 0..d {
                    u[r] += coef * v[r];
                }
                *dv += coef * rt_div;
            }
            for j in 0..self.nb {
                let coef = coeffs[self.bubble_offset() + self.bubble_index(c, j)];
                if coef == 0.0 {
                    continue;
                }
                let v = geo.piola(&tab.bubble[q][j]);
                for r in 0..d {
                    u[r] += coef * v[r];
                }
                *dv += coef * tab.bubble_div[q][j] / geo.det;
            }
        }
        out
    }

    /// `(||div u||_{L2}, ||grad u_ct||_{L2})` of a coefficient vector.
    pub fn divergence_norms(&self, mesh: &SimplicialMesh, coeffs: &[f64]) -> (f64, f64) {
        let rule = crate::quadrature::QuadratureRule::simplex(self.dim, 2 * self.k);
        let tab = self.element.tabulate(&rule);
        let (mut sd, mut sg) = (0.0, 0.0);
        for c in 0..mesh.num_cells() {
            let geo = CellGeometry::new(mesh, c);
            let vals = self.eval_cell(mesh, c, &geo, coeffs, &tab);
            for (q, w) in rule.weights.iter().enumerate() {
                let w = w * geo.det;
                sd += w * vals.div[q] * vals.div[q];
                sg += w * vals.grad_ct[q].iter().flatten().map(|x| x * x).sum::<f64>();
            }
        }
        (sd.sqrt(), sg.sqrt())
    }
}
