//! Error norms and experimental orders of convergence.

use crate::fespace::VelocitySpace;
use crate::mesh::{CellGeometry, Point, SimplicialMesh};
use crate::quadrature::QuadratureRule;

/// `||u - u_h||_{L2}` for a composite velocity.
pub fn velocity_l2_error<U>(
    mesh: &SimplicialMesh,
    vs: &VelocitySpace,
    coeffs: &[f64],
    degree: usize,
    exact: U,
) -> f64
where
    U: Fn(&Point) -> [f64; 3],
{
    let rule = QuadratureRule::simplex(vs.dim, degree);
    let tab = vs.element.tabulate(&rule);
    let mut s = 0.0;
    for c in 0..mesh.num_cells() {
        let geo = CellGeometry::new(mesh, c);
        let vals = vs.eval_cell(mesh, c, &geo, coeffs, &tab);
        for (q, (x, w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let u = exact(&geo.map(x));
            let e: f64 = (0..vs.dim).map(|j| (u[j] - vals.u[q][j]).powi(2)).sum();
            s += w * geo.det * e;
        }
    }
    s.sqrt()
}

/// `||u_h - v_h||_{L2}` between two composite velocities.
pub fn velocity_l2_difference(
    mesh: &SimplicialMesh,
    vs: &VelocitySpace,
    a: &[f64],
    b: &[f64],
) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    velocity_l2_error(mesh, vs, &diff, 2 * vs.k + 2, |_| [0.0; 3])
}

/// `(||p - p_h||_{L2}, ||grad(p - p_h)||_{L2})`, the gradient taken cell by
/// cell. `eval(c, geo, xhat)` returns the discrete value and gradient.
pub fn pressure_errors<E, P, G>(
    mesh: &SimplicialMesh,
    degree: usize,
    mut eval: E,
    p: P,
    grad_p: G,
) -> (f64, f64)
where
    E: FnMut(usize, &CellGeometry, &Point) -> (f64, Point),
    P: Fn(&Point) -> f64,
    G: Fn(&Point) -> Point,
{
    let d = mesh.dim();
    let rule = QuadratureRule::simplex(d, degree);
    let (mut l2, mut h1) = (0.0, 0.0);
    for c in 0..mesh.num_cells() {
        let geo = CellGeometry::new(mesh, c);
        for (x, w) in rule.points.iter().zip(&rule.weights) {
            let y = geo.map(x);
            let (ph, gh) = eval(c, &geo, x);
            let g = grad_p(&y);
            l2 += w * geo.det * (p(&y) - ph).powi(2);
            h1 += w * geo.det * (0..d).map(|j| (g[j] - gh[j]).powi(2)).sum::<f64>();
        }
    }
    (l2.sqrt(), h1.sqrt())
}

/// `EOC_i = log(e_{i-1} / e_i) / log(h_{i-1} / h_i)`; `None` on the first
/// level or when an error vanishes.
pub fn eoc(errors: &[f64], hs: &[f64]) -> Vec<Option<f64>> {
    (0..errors.len())
        .map(|i| {
            if i == 0 || errors[i] <= 0.0 || errors[i - 1] <= 0.0 {
                None
            } else {
                Some((errors[i - 1] / errors[i]).ln() / (hs[i - 1] / hs[i]).ln())
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eoc_of_geometric_sequences() {
        let hs = [0.5, 0.25, 0.125];
        let e: Vec<f64> = hs.iter().map(|h: &f64| 3.0 * h.powi(3)).collect();
        let r = eoc(&e, &hs);
        assert!(r[0].is_none());
        assert!(r[1..].iter().all(|v| (v.unwrap() - 3.0).abs() < 1e-12));
        assert_eq!(eoc(&[1.0, 0.0], &[1.0, 0.5])[1], None);
    }

    #[test]
    fn interpolation_error_is_small_but_nonzero() {
        let m = SimplicialMesh::structured_unit(2, 4).unwrap();
        let vs = VelocitySpace::new(&m, 2).unwrap();
        let u = |x: &Point| [(3.0 * x[0]).sin(), x[1] * x[1], 0.0];
        let mut coeffs = vec![0.0; vs.ndofs()];
        for (n, x) in vs.nodes.coords.iter().enumerate() {
            let v = u(x);
            coeffs[vs.ct_dof(n, 0)] = v[0];
            coeffs[vs.ct_dof(n, 1)] = v[1];
        }
        let e = velocity_l2_error(&m, &vs, &coeffs, 8, u);
        assert!(e > 1e-6 && e < 1e-2);
        // a quadratic field is reproduced exactly
        let quad = |x: &Point| [x[0] * x[1], x[1] * x[1] - x[0], 0.0];
        let mut coeffs2 = vec![0.0; vs.ndofs()];
        for (n, x) in vs.nodes.coords.iter().enumerate() {
            let v = quad(x);
            coeffs2[vs.ct_dof(n, 0)] = v[0];
            coeffs2[vs.ct_dof(n, 1)] = v[1];
        }
        assert!(velocity_l2_error(&m, &vs, &coeffs2, 6, quad) < 1e-13);
        assert_eq!(velocity_l2_difference(&m, &vs, &coeffs, &coeffs), 0.0);
    }

    #[test]
    fn pressure_errors_of_exact_linear() {
        let m = SimplicialMesh::structured_unit(3, 1).unwrap();
        let (l2, h1) = pressure_errors(
            &m,
            2,
            |_, geo, x| {
                let y = geo.map(x);
                (y[0] - 0.5, [1.0, 0.0, 0.0])
            },
            |y| y[0] - 0.5,
            |_| [1.0, 0.0, 0.0],
        );
        assert!(l2 < 1e-14 && h1 < 1e-14);
        let (l2, h1) = pressure_errors(
            &m,
            2,
            |_, _, _| (0.0, [0.0; 3]),
            |_| 2.0,
            |_| [0.0, 3.0, 0.0],
        );
        assert!((l2 - 2.0).abs() < 1e-13 && (h1 - 3.0).abs() < 1e-13);
    }
}
