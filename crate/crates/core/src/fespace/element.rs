//! The velocity-pressure element of degree `k`: vector Lagrange `P_k`,
//! lowest-order Raviart-Thomas, the bubble complement of degree `k - 1`, and
//! discontinuous `P_{k-1}` pressures, together with exact reference-cell
//! integrals of all products needed during assembly.

use nalgebra::DMatrix;

use super::reference::{
    div, eval_vec, facet_point, monomial_basis, rt0_basis, BubbleComplement, LagrangeBasis, VecPoly,
};
use crate::error::Result;
use crate::mesh::CellGeometry;
use crate::poly::Poly;
use crate::quadrature::QuadratureRule;

#[derive(Clone, Debug)]
pub struct StokesElement {
    pub dim: usize,
    pub k: usize,
    pub lagrange: LagrangeBasis,
    pub rt0: Vec<VecPoly>,
    pub bubbles: BubbleComplement,
    /// Monomial basis of `P_{k-1}`; the first entry is the constant 1.
    pub pressure: Vec<Poly>,
    /// `[a][b][c][e]`: `int d_c phi_a d_e phi_b`
    stiffness: Vec<f64>,
    /// `[a][c][i]`: `int d_c phi_a q_i` against the mean-zero targets
    grad_target: Vec<f64>,
    /// `[a][c][r]`: `int d_c phi_a p_r`
    grad_pressure: Vec<f64>,
    /// `[a][c][e][j][l]`: `int d_c d_e phi_a (b_j)_l`
    hess_bubble: Vec<f64>,
    /// `[a][c][e][i][l]`: `int d_c d_e phi_a (psi_i)_l`
    hess_rt0: Vec<f64>,
    /// `[j][j']`: `int div b_j div b_j'`
    pub bubble_divdiv: DMatrix<f64>,
    /// `[j][r]`: `int div b_j p_r`
    pub bubble_div_pressure: DMatrix<f64>,
    /// `[r]`: `int p_r`
    pub pressure_mass: Vec<f64>,
    /// `[i][a]`: mean of `phi_a` over the facet opposite vertex `i`
    pub facet_mean: Vec<Vec<f64>>,
}

impl StokesElement {
    pub fn new(dim: usize, k: usize) -> Result<Self> {
        let lagrange = LagrangeBasis::new(dim, k);
        let rt0 = rt0_basis(dim);
        let bubbles = BubbleComplement::new(dim, k - 1)?;
        let pressure = monomial_basis(dim, k - 1);
        let n = lagrange.len();
        let nb = bubbles.len();
        let nt = bubbles.targets.len();
        let np = pressure.len();
        let int = |p: &Poly| p.integrate_reference(dim);

        let g = &lagrange.grads;
        let mut stiffness = vec![0.0; n * n * 9];
        for a in 0..n {
            for b in 0..n {
                for c in 0..dim {
                    for e in 0..dim {
                        stiffness[((a * n + b) * 3 + c) * 3 + e] = int(&g[a][c].mul(&g[b][e]));
                    }
                }
            }
        }
        let mut grad_target = vec![0.0; n * 3 * nt];
        let mut grad_pressure = vec![0.0; n * 3 * np];
        for a in 0..n {
            for c in 0..dim {
                for (i, q) in bubbles.targets.iter().enumerate() {
                    grad_target[(a * 3 + c) * nt + i] = int(&g[a][c].mul(q));
                }
                for (r, p) in pressure.iter().enumerate() {
                    grad_pressure[(a * 3 + c) * np + r] = int(&g[a][c].mul(p));
                }
            }
        }
        let nr = dim + 1;
        let mut hess_bubble = vec![0.0; n * 9 * nb * 3];
        let mut hess_rt0 = vec![0.0; n * 9 * nr * 3];
        if k >= 2 {
            for a in 0..n {
                for c in 0..dim {
                    for e in 0..dim {
                        let h = g[a][c].deriv(e);
                        if h.is_zero() {
                            continue;
                        }
                        let base = (a * 3 + c) * 3 + e;
                        for (j, b) in bubbles.funcs.iter().enumerate() {
                            for l in 0..dim {
                                hess_bubble[(base * nb + j) * 3 + l] = int(&h.mul(&b[l]));
                            }
                        }
                        for (i, psi) in rt0.iter().enumerate() {
                            for l in 0..dim {
                                hess_rt0[(base * nr + i) * 3 + l] = int(&h.mul(&psi[l]));
                            }
                        }
                    }
                }
            }
        }
        let bubble_divdiv =
            DMatrix::from_fn(nb, nb, |i, j| int(&bubbles.divs[i].mul(&bubbles.divs[j])));
        let bubble_div_pressure =
            DMatrix::from_fn(nb, np, |j, r| int(&bubbles.divs[j].mul(&pressure[r])));
        let pressure_mass = pressure.iter().map(int).collect();

        let rule = QuadratureRule::simplex(dim - 1, k);
        let ref_measure = Poly::constant(1.0).integrate_reference(dim - 1);
        let facet_mean = (0..=dim)
            .map(|i| {
                lagrange
                    .funcs
                    .iter()
                    .map(|p| {
                        rule.points
                            .iter()
                            .zip(&rule.weights)
                            .map(|(t, w)| w * p.eval(&facet_point(dim, i, t)))
                            .sum::<f64>()
                            / ref_measure
                    })
                    .collect()
            })
            .collect();

        Ok(Self {
            dim,
            k,
            lagrange,
            rt0,
            bubbles,
            pressure,
            stiffness,
            grad_target,
            grad_pressure,
            hess_bubble,
            hess_rt0,
            bubble_divdiv,
            bubble_div_pressure,
            pressure_mass,
            facet_mean,
        })
    }

    pub fn num_lagrange(&self) -> usize {
        self.lagrange.len()
    }

    pub fn num_bubbles(&self) -> usize {
        self.bubbles.len()
    }

    pub fn num_pressure(&self) -> usize {
        self.pressure.len()
    }

    /// Scalar stiffness matrix `int grad phi_a . grad phi_b` on a cell.
    pub fn local_stiffness(&self, geo: &CellGeometry) -> DMatrix<f64> {
        let n = self.num_lagrange();
        let w = metric(geo);
        DMatrix::from_fn(n, n, |a, b| {
            let mut s = 0.0;
            for c in 0..self.dim {
                for e in 0..self.dim {
                    s += w[c][e] * self.stiffness[((a * n + b) * 3 + c) * 3 + e];
                }
            }
            s * geo.det
        })
    }

    /// `int div(phi_a e_j) q_i` on the reference cell after pulling back,
    /// for all targets `i`; the physical divergence uses `J^{-T}`.
    pub fn div_target_moments(&self, geo: &CellGeometry, a: usize, j: usize) -> Vec<f64> {
        let nt = self.bubbles.targets.len();
        (0..nt)
            .map(|i| {
                (0..self.dim)
                    .map(|c| geo.inv[c][j] * self.grad_target[(a * 3 + c) * nt + i])
                    .sum()
            })
            .collect()
    }

    /// Coefficients of the bubble whose divergence equals the mean-zero part
    /// of a polynomial `q` of degree `k - 1`, given the reference moments
    /// `int (q o F) q_i`.
    pub fn inverse_divergence(&self, geo: &CellGeometry, moments: &[f64]) -> Vec<f64> {
        let nb = self.num_bubbles();
        (0..nb)
            .map(|j| {
                geo.det
                    * (0..nb)
                        .map(|i| self.bubbles.moments_inv[(j, i)] * moments[i])
                        .sum::<f64>()
            })
            .collect()
    }

    /// `int div(phi_a e_j) p_r` over a cell.
    pub fn div_pressure(&self, geo: &CellGeometry, a: usize, j: usize, r: usize) -> f64 {
        let np = self.num_pressure();
        geo.det
            * (0..self.dim)
                .map(|c| geo.inv[c][j] * self.grad_pressure[(a * 3 + c) * np + r])
                .sum::<f64>()
    }

    /// `int_T (lap phi_a) (b)_j` for every bubble `b` (rows) and every
    /// component `j` (columns), on one cell.
    pub fn laplace_bubble(&self, geo: &CellGeometry, a: usize) -> DMatrix<f64> {
        self.laplace_against(geo, a, &self.hess_bubble, self.num_bubbles())
    }

    /// As [`Self::laplace_bubble`] for the reference RT0 functions (before
    /// the facet orientation sign).
    pub fn laplace_rt0(&self, geo: &CellGeometry, a: usize) -> DMatrix<f64> {
        self.laplace_against(geo, a, &self.hess_rt0, self.dim + 1)
    }

    fn laplace_against(
        &self,
        geo: &CellGeometry,
        a: usize,
        table: &[f64],
        nf: usize,
    ) -> DMatrix<f64> {
        let w = metric(geo);
        let d = self.dim;
        let mut out = DMatrix::zeros(nf, d);
        if self.k < 2 {
            return out;
        }
        for f in 0..nf {
            // pulled-back integral of lap(phi_a) times the reference field
            let mut l = [0.0; 3];
            for c in 0..d {
                for e in 0..d {
                    let base = (a * 3 + c) * 3 + e;
                    for (m, lm) in l.iter_mut().enumerate().take(d) {
                        *lm += w[c][e] * table[(base * nf + f) * 3 + m];
                    }
                }
            }
            // the Piola factor 1/det cancels the volume factor det
            for j in 0..d {
                out[(f, j)] = (0..d).map(|m| geo.jac[j][m] * l[m]).sum();
            }
        }
        out
    }

    /// Reference divergence of RT0 function `i` (a constant).
    pub fn rt0_div(&self) -> f64 {
        (1..=self.dim).map(|i| i as f64).product()
    }

    /// Tabulates all bases at the points of a rule.
    pub fn tabulate(&self, rule: &QuadratureRule) -> ElementTab {
        let mut tab = ElementTab {
            rule: rule.clone(),
            lag: Vec::new(),
            lag_grad: Vec::new(),
            bubble: Vec::new(),
            bubble_div: Vec::new(),
            rt0: Vec::new(),
        };
        for x in &rule.points {
            tab.lag
                .push(self.lagrange.funcs.iter().map(|p| p.eval(x)).collect());
            tab.lag_grad
                .push(self.lagrange.grads.iter().map(|g| eval_vec(g, x)).collect());
            tab.bubble
                .push(self.bubbles.funcs.iter().map(|b| eval_vec(b, x)).collect());
            tab.bubble_div
                .push(self.bubbles.divs.iter().map(|p| p.eval(x)).collect());
            tab.rt0
                .push(self.rt0.iter().map(|b| eval_vec(b, x)).collect());
        }
        tab
    }

    /// Divergence of bubble `j` on the reference cell.
    pub fn bubble_div_poly(&self, j: usize) -> &Poly {
        &self.bubbles.divs[j]
    }

    pub fn rt0_div_poly(&self, i: usize) -> Poly {
        div(&self.rt0[i], self.dim)
    }
}

/// `W = J^{-1} J^{-T}`, so that `grad u . grad v = ghat_u^T W ghat_v`.
pub fn metric(geo: &CellGeometry) -> [[f64; 3]; 3] {
    let mut w = [[0.0; 3]; 3];
    for c in 0..geo.dim {
        for e in 0..geo.dim {
            w[c][e] = (0..geo.dim).map(|r| geo.inv[c][r] * geo.inv[e][r]).sum();
        }
    }
    w
}

/// Reference bases evaluated at quadrature points.
#[derive(Clone, Debug)]
pub struct ElementTab {
    pub rule: QuadratureRule,
    /// `[q][a]`
    pub lag: Vec<Vec<f64>>,
    /// `[q][a]`
    pub lag_grad: Vec<Vec<[f64; 3]>>,
    /// `[q][j]`
    pub bubble: Vec<Vec<[f64; 3]>>,
    /// `[q][j]`
    pub bubble_div: Vec<Vec<f64>>,
    /// `[q][i]`
    pub rt0: Vec<Vec<[f64; 3]>>,
}
