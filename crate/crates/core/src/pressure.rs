//! Pressure reconstruction from the continuous part of a discrete velocity.
//!
//! With `-lap u = curl curl u` for divergence-free `u`, testing the momentum
//! equation with gradients gives the Neumann problem
//! `(grad p, grad q) = (f, grad q) + nu int_{bd} (curl u) . (n x grad q)`,
//! solved in continuous `P_l` for the mean-zero solution. In 2D the
//! boundary term reads `nu int rot u dq/dtau` with the counterclockwise
//! tangent `tau = (-n_y, n_x)`.

use crate::error::Result;
use crate::fespace::reference::{facet_point, Tabulation};
use crate::fespace::{FESpace, LagrangeBasis, LagrangeNodes, SpaceKind, VelocitySpace};
use crate::linalg::{LinearSolver, TripletBuilder};
use crate::mesh::{cross, dot, CellGeometry, Point, SimplicialMesh};
use crate::quadrature::QuadratureRule;

/// A continuous piecewise polynomial pressure of degree `l`.
#[derive(Clone, Debug)]
pub struct ReconstructedPressure {
    pub space: FESpace,
    pub basis: LagrangeBasis,
    pub coeffs: Vec<f64>,
}

impl ReconstructedPressure {
    /// Value and physical gradient at the reference point `xhat` of cell `c`.
    pub fn eval(&self, c: usize, geo: &CellGeometry, xhat: &Point) -> (f64, Point) {
        let (mut p, mut gh) = (0.0, [0.0; 3]);
        for (a, &dof) in self.space.cell_dofs(c).iter().enumerate() {
            let v = self.coeffs[dof];
            p += v * self.basis.funcs[a].eval(xhat);
            for (j, g) in gh.iter_mut().enumerate().take(geo.dim) {
                *g += v * self.basis.grads[a][j].eval(xhat);
            }
        }
        (p, geo.grad(&gh))
    }

    pub fn mean(&self, mesh: &SimplicialMesh) -> f64 {
        let rule = QuadratureRule::simplex(mesh.dim(), self.basis.k);
        let mut s = 0.0;
        let mut vol = 0.0;
        for c in 0..mesh.num_cells() {
            let geo = CellGeometry::new(mesh, c);
            for (x, w) in rule.points.iter().zip(&rule.weights) {
                s += w * geo.det * self.eval(c, &geo, x).0;
            }
            vol += mesh.cell_volume(c);
        }
        s / vol
    }
}

/// Curl of the continuous velocity part (the third entry in 2D).
fn curl(g: &[[f64; 3]; 3]) -> Point {
    [g[2][1] - g[1][2], g[0][2] - g[2][0], g[1][0] - g[0][1]]
}

/// Solves the Neumann problem for the pressure. Only the continuous part of
/// the composite velocity `u` enters.
pub fn reconstruct_pressure<F>(
    mesh: &SimplicialMesh,
    vs: &VelocitySpace,
    u: &[f64],
    f: F,
    nu: f64,
    ell: usize,
    rhs_degree: usize,
) -> Result<ReconstructedPressure>
where
    F: Fn(&Point) -> [f64; 3],
{
    let d = mesh.dim();
    let space = FESpace::new(mesh, SpaceKind::ScalarLagrange(ell))?;
    let basis = LagrangeBasis::new(d, ell);
    let n = space.ndofs;
    let vol_rule = QuadratureRule::simplex(d, rhs_degree.max(2 * ell));
    let tab = Tabulation::scalar(&basis, &vol_rule);
    let nl = basis.len();
    let mut t = TripletBuilder::new(n, n);
    let mut rhs = vec![0.0; n];
    let mut ones = vec![0.0; n];
    let mut local = vec![0.0; nl * nl];
    let mut mass = vec![0.0; nl];
    for c in 0..mesh.num_cells() {
        let geo = CellGeometry::new(mesh, c);
        let dofs = space.cell_dofs(c);
        local.iter_mut().for_each(|v| *v = 0.0);
        mass.iter_mut().for_each(|v| *v = 0.0);
        for (q, (x, w)) in vol_rule.points.iter().zip(&vol_rule.weights).enumerate() {
            let w = w * geo.det;
            let fx = f(&geo.map(x));
            let grads: Vec<Point> = tab.grads[q].iter().map(|g| geo.grad(g)).collect();
            for a in 0..nl {
                rhs[dofs[a]] += w * dot(&fx, &grads[a]);
                mass[a] += w * tab.values[q][a];
                for b in 0..nl {
                    local[a * nl + b] += w * dot(&grads[a], &grads[b]);
                }
            }
        }
        for a in 0..nl {
            ones[dofs[a]] += mass[a];
            for b in 0..nl {
                t.push(dofs[a], dofs[b], local[a * nl + b]);
            }
        }
    }
    let frule = QuadratureRule::simplex(d - 1, 2 * vs.k);
    for fct in mesh.boundary_facets() {
        let c = mesh.facet_cells(fct)[0];
        let i = mesh.cell_facets(c).iter().position(|&g| g == fct).unwrap();
        let geo = CellGeometry::new(mesh, c);
        let scale = mesh.facet_area(fct) / if d == 2 { 1.0 } else { 0.5 };
        let rule = QuadratureRule {
            dim: d,
            points: frule.points.iter().map(|t| facet_point(d, i, t)).collect(),
            weights: frule.weights.iter().map(|w| w * scale).collect(),
        };
        let vtab = vs.element.tabulate(&rule);
        let vals = vs.eval_cell(mesh, c, &geo, u, &vtab);
        let ptab = Tabulation::scalar(&basis, &rule);
        let nrm = *mesh.facet_normal(fct);
        for (q, w) in rule.weights.iter().enumerate() {
            let cu = curl(&vals.grad_ct[q]);
            for (a, &dof) in space.cell_dofs(c).iter().enumerate() {
                let g = geo.grad(&ptab.grads[q][a]);
                let term = if d == 2 {
                    cu[2] * (-nrm[1] * g[0] + nrm[0] * g[1])
                } else {
                    dot(&cu, &cross(&nrm, &g))
                };
                rhs[dof] += nu * w * term;
            }
        }
    }
    // the Neumann matrix is singular only on constants: fix the first dof,
    // solve the SPD remainder and shift to zero mean
    let k = t.build()?;
    let rest: Vec<usize> = (1..n).collect();
    let b: Vec<f64> = rest.iter().map(|&i| rhs[i]).collect();
    let (y, _) = LinearSolver::ldlt().solve(&k.submatrix(&rest, &rest), &b)?;
    let mut coeffs = vec![0.0];
    coeffs.extend(y);
    let mean = coeffs.iter().zip(&ones).map(|(x, m)| x * m).sum::<f64>() / ones.iter().sum::<f64>();
    coeffs.iter_mut().for_each(|x| *x -= mean);
    Ok(ReconstructedPressure {
        space,
        basis,
        coeffs,
    })
}

/// Nodal interpolant of a scalar function in the reconstruction space.
pub fn interpolate_pressure<P: Fn(&Point) -> f64>(
    mesh: &SimplicialMesh,
    ell: usize,
    p: P,
) -> Result<ReconstructedPressure> {
    let space = FESpace::new(mesh, SpaceKind::ScalarLagrange(ell))?;
    let nodes = LagrangeNodes::new(mesh, ell);
    let coeffs = nodes.coords.iter().map(&p).collect();
    Ok(ReconstructedPressure {
        space,
        basis: LagrangeBasis::new(mesh.dim(), ell),
        coeffs,
    })
}

/// Value and gradient of a discontinuous pressure with coefficients in the
/// monomial basis of the reference cell.
pub fn eval_discontinuous(
    vs: &VelocitySpace,
    coeffs: &[f64],
    np: usize,
    c: usize,
    geo: &CellGeometry,
    xhat: &Point,
) -> (f64, Point) {
    let (mut p, mut gh) = (0.0, [0.0; 3]);
    for r in 0..np {
        let v = coeffs[c * np + r];
        let poly = &vs.element.pressure[r];
        p += v * poly.eval(xhat);
        for (j, g) in gh.iter_mut().enumerate().take(geo.dim) {
            *g += v * poly.deriv(j).eval(xhat);
        }
    }
    (p, geo.grad(&gh))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::ct_lift;
    use crate::norms::pressure_errors;

    fn ct_of<U: Fn(&Point) -> [f64; 3]>(vs: &VelocitySpace, u: U) -> Vec<f64> {
        let mut x = vec![0.0; vs.ndofs()];
        for (n, p) in vs.nodes.coords.iter().enumerate() {
            let v = u(p);
            for j in 0..vs.dim {
                x[vs.ct_dof(n, j)] = v[j];
            }
        }
        x
    }

    #[test]
    fn gradient_data_is_reproduced() {
        // u = 0, f = grad p with p in P_2: the Neumann solution is p - mean
        for dim in [2, 3] {
            let m = SimplicialMesh::structured_unit(dim, 2).unwrap();
            let vs = VelocitySpace::new(&m, 2).unwrap();
            let p = |x: &Point| x[0] * x[1] + 0.5 * x[0] - x[1] * x[1] - (0.25 + 0.25 - 1.0 / 3.0);
            let gp = |x: &Point| [x[1] + 0.5, x[0] - 2.0 * x[1], 0.0];
            let u = vec![0.0; vs.ndofs()];
            let ph = reconstruct_pressure(&m, &vs, &u, gp, 1.0, 2, 6).unwrap();
            assert!(ph.mean(&m).abs() < 1e-12);
            let (l2, h1) = pressure_errors(&m, 6, |c, g, x| ph.eval(c, g, x), p, gp);
            assert!(l2 < 1e-11 && h1 < 1e-11, "{l2} {h1}");
        }
    }

    #[test]
    fn boundary_term_sign() {
        // u = (y^2, 0, 0) is divergence-free with -lap u = (-2, 0, 0) and p = 0
        for dim in [2, 3] {
            let m = SimplicialMesh::structured_unit(dim, 2).unwrap();
            let vs = VelocitySpace::new(&m, 2).unwrap();
            let nu = 3.0;
            let u = ct_of(&vs, |x| [x[1] * x[1], 0.0, 0.0]);
            let ph =
                reconstruct_pressure(&m, &vs, &u, |_| [-2.0 * nu, 0.0, 0.0], nu, 2, 4).unwrap();
            assert!(ph.coeffs.iter().all(|v| v.abs() < 1e-11), "{dim}D");
            // without the boundary term the result is far from zero
            let wrong = reconstruct_pressure(
                &m,
                &vs,
                &vec![0.0; vs.ndofs()],
                |_| [-2.0 * nu, 0.0, 0.0],
                nu,
                2,
                4,
            )
            .unwrap();
            assert!(wrong.coeffs.iter().any(|v| v.abs() > 0.1));
        }
    }

    #[test]
    fn boundary_term_is_linear_in_nu() {
        let m = SimplicialMesh::structured_unit(2, 2).unwrap();
        let vs = VelocitySpace::new(&m, 2).unwrap();
        let u = ct_lift(&vs, |x| [x[1] * x[1], x[0] * x[0], 0.0]);
        let mut full = u.clone();
        full.resize(vs.ndofs(), 0.0);
        let a = reconstruct_pressure(&m, &vs, &full, |_| [0.0; 3], 1.0, 2, 4).unwrap();
        let b = reconstruct_pressure(&m, &vs, &full, |_| [0.0; 3], 2.0, 2, 4).unwrap();
        for (x, y) in a.coeffs.iter().zip(&b.coeffs) {
            assert!((2.0 * x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn interpolation_and_discontinuous_evaluation() {
        let m = SimplicialMesh::structured_unit(2, 1).unwrap();
        let ip = interpolate_pressure(&m, 2, |x| x[0] * x[0]).unwrap();
        let geo = CellGeometry::new(&m, 1);
        let xh = [0.2, 0.3, 0.0];
        let y = geo.map(&xh);
        let (v, g) = ip.eval(1, &geo, &xh);
        assert!((v - y[0] * y[0]).abs() < 1e-14 && (g[0] - 2.0 * y[0]).abs() < 1e-13);
        let vs = VelocitySpace::new(&m, 2).unwrap();
        let np = vs.element.num_pressure();
        let mut coeffs = vec![0.0; 2 * np];
        coeffs[np] = 2.0;
        let (v, g) = eval_discontinuous(&vs, &coeffs, np, 1, &geo, &xh);
        assert_eq!((v, g[0]), (2.0, 0.0));
    }
}
