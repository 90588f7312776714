//! Reference-cell bases: Lagrange `P_k`, lowest-order Raviart-Thomas, the
//! interior bubble complement, and discontinuous `P_m`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::poly::{dim_pk, exponents_up_to, homogeneous_exponents, Poly};
use crate::quadrature::QuadratureRule;

/// A polynomial vector field on the reference cell.
pub type VecPoly = [Poly; 3];

fn zero_vec() -> VecPoly {
    [Poly::zero(), Poly::zero(), Poly::zero()]
}

/// Barycentric coordinates of the reference simplex as polynomials.
pub fn barycentric(dim: usize) -> Vec<Poly> {
    let mut lambda0 = Poly::constant(1.0);
    for i in 0..dim {
        lambda0 = lambda0.sub(&Poly::var(i));
    }
    let mut out = vec![lambda0];
    out.extend((0..dim).map(Poly::var));
    out
}

/// Barycentric lattice of order `k` on the reference simplex; entry `i` of
/// each multi-index belongs to reference vertex `i`.
pub fn lattice(dim: usize, k: usize) -> Vec<[usize; 4]> {
    exponents_up_to(dim, k)
        .into_iter()
        .map(|e| {
            let mut b = [0usize; 4];
            let s: usize = e.iter().map(|&a| a as usize).sum();
            b[0] = k - s;
            for i in 0..dim {
                b[i + 1] = e[i] as usize;
            }
            b
        })
        .collect()
}

/// Reference vertex `i`.
pub fn reference_vertex(i: usize) -> [f64; 3] {
    let mut v = [0.0; 3];
    if i > 0 {
        v[i - 1] = 1.0;
    }
    v
}

/// Outward (unnormalised) normal of the reference facet opposite vertex `i`.
fn reference_normal(dim: usize, i: usize) -> [f64; 3] {
    let mut n = [0.0; 3];
    if i == 0 {
        n[..dim].iter_mut().for_each(|x| *x = 1.0);
    } else {
        n[i - 1] = -1.0;
    }
    n
}

/// Point on the reference facet opposite vertex `i` with parameters `t`
/// on the reference simplex of dimension `dim - 1`. The facet vertices are
/// taken in increasing order.
pub fn facet_point(dim: usize, i: usize, t: &[f64; 3]) -> [f64; 3] {
    let verts: Vec<usize> = (0..=dim).filter(|&v| v != i).collect();
    let base = reference_vertex(verts[0]);
    let mut x = base;
    for (s, &v) in verts[1..].iter().enumerate() {
        let e = reference_vertex(v);
        for c in 0..3 {
            x[c] += t[s] * (e[c] - base[c]);
        }
    }
    x
}

/// Measure of the reference facet opposite vertex `i`.
pub fn reference_facet_measure(dim: usize, i: usize) -> f64 {
    match (dim, i) {
        (2, 0) => 2f64.sqrt(),
        (2, _) => 1.0,
        (3, 0) => 0.5 * 3f64.sqrt(),
        _ => 0.5,
    }
}

pub(crate) fn div(v: &VecPoly, dim: usize) -> Poly {
    (0..dim).fold(Poly::zero(), |acc, c| acc.add(&v[c].deriv(c)))
}

/// Scalar Lagrange basis of degree `k` with equispaced nodes.
#[derive(Clone, Debug)]
pub struct LagrangeBasis {
    pub dim: usize,
    pub k: usize,
    /// Barycentric multi-index of each node.
    pub nodes: Vec<[usize; 4]>,
    pub node_coords: Vec<[f64; 3]>,
    pub funcs: Vec<Poly>,
    pub grads: Vec<VecPoly>,
}

impl LagrangeBasis {
    pub fn new(dim: usize, k: usize) -> Self {
        assert!(k >= 1, "Lagrange degree must be at least 1");
        let lambda = barycentric(dim);
        let nodes = lattice(dim, k);
        let mut funcs = Vec::with_capacity(nodes.len());
        for b in &nodes {
            let mut p = Poly::constant(1.0);
            for i in 0..=dim {
                for j in 0..b[i] {
                    let factor = lambda[i]
                        .scale(k as f64)
                        .sub(&Poly::constant(j as f64))
                        .scale(1.0 / (j + 1) as f64);
                    p = p.mul(&factor);
                }
            }
            funcs.push(p);
        }
        let node_coords = nodes
            .iter()
            .map(|b| {
                let mut x = [0.0; 3];
                for i in 0..dim {
                    x[i] = b[i + 1] as f64 / k as f64;
                }
                x
            })
            .collect();
        let grads = funcs
            .iter()
            .map(|p| {
                let mut g = zero_vec();
                for c in 0..dim {
                    g[c] = p.deriv(c);
                }
                g
            })
            .collect();
        Self {
            dim,
            k,
            nodes,
            node_coords,
            funcs,
            grads,
        }
    }

    pub fn len(&self) -> usize {
        self.funcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.funcs.is_empty()
    }

    /// Local nodes lying on the facet opposite reference vertex `i`.
    pub fn facet_nodes(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(move |&a| self.nodes[a][i] == 0)
    }
}

/// Lowest-order Raviart-Thomas basis on the reference cell. Function `i`
/// has unit outward flux through the facet opposite vertex `i`.
pub fn rt0_basis(dim: usize) -> Vec<VecPoly> {
    let scale = if dim == 2 { 1.0 } else { 2.0 };
    (0..=dim)
        .map(|i| {
            let v = reference_vertex(i);
            let mut f = zero_vec();
            for c in 0..dim {
                f[c] = Poly::var(c).sub(&Poly::constant(v[c])).scale(scale);
            }
            f
        })
        .collect()
}

/// Monomial basis of `RT_m`: `P_m^d` plus `x` times homogeneous degree-`m`
/// monomials.
pub fn rt_monomial_basis(dim: usize, m: usize) -> Vec<VecPoly> {
    let mut out = Vec::new();
    for e in exponents_up_to(dim, m) {
        for c in 0..dim {
            let mut f = zero_vec();
            f[c] = Poly::monomial(e, 1.0);
            out.push(f);
        }
    }
    for e in homogeneous_exponents(dim, m) {
        let mono = Poly::monomial(e, 1.0);
        let mut f = zero_vec();
        for c in 0..dim {
            f[c] = mono.mul(&Poly::var(c));
        }
        out.push(f);
    }
    out
}

/// Basis of the mean-zero polynomials of degree at most `m` on the
/// reference cell: monomials of degree `1..=m` minus their means.
pub fn mean_zero_basis(dim: usize, m: usize) -> Vec<Poly> {
    let area = Poly::constant(1.0).integrate_reference(dim);
    exponents_up_to(dim, m)
        .into_iter()
        .skip(1)
        .map(|e| {
            let p = Poly::monomial(e, 1.0);
            let mean = p.integrate_reference(dim) / area;
            p.sub(&Poly::constant(mean))
        })
        .collect()
}

/// Monomial basis of `P_m` used for discontinuous pressures.
pub fn monomial_basis(dim: usize, m: usize) -> Vec<Poly> {
    exponents_up_to(dim, m)
        .into_iter()
        .map(|e| Poly::monomial(e, 1.0))
        .collect()
}

/// A complement of the divergence-free functions inside the interior
/// Raviart-Thomas bubbles of degree `m`, on which the divergence is a
/// bijection onto the mean-zero polynomials of degree `m`.
#[derive(Clone, Debug)]
pub struct BubbleComplement {
    pub dim: usize,
    pub m: usize,
    pub funcs: Vec<VecPoly>,
    pub divs: Vec<Poly>,
    /// Basis of the mean-zero target space.
    pub targets: Vec<Poly>,
    /// `moments[(i, j)] = int div(b_j) q_i` over the reference cell.
    pub moments: DMatrix<f64>,
    pub moments_inv: DMatrix<f64>,
}

impl BubbleComplement {
    pub fn new(dim: usize, m: usize) -> Result<Self> {
        if m == 0 {
            return Ok(Self {
                dim,
                m,
                funcs: vec![],
                divs: vec![],
                targets: vec![],
                moments: DMatrix::zeros(0, 0),
                moments_inv: DMatrix::zeros(0, 0),
            });
        }
        let full = rt_monomial_basis(dim, m);
        let n = full.len();
        // v.n = 0 at a unisolvent point set on every facet
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for i in 0..=dim {
            let nrm = reference_normal(dim, i);
            for b in lattice(dim, m + 1).into_iter().filter(|b| b[i] == 0) {
                let mut x = [0.0; 3];
                for c in 0..dim {
                    x[c] = b[c + 1] as f64 / (m + 1) as f64;
                }
                rows.push(
                    full.iter()
                        .map(|f| (0..dim).map(|c| nrm[c] * f[c].eval(&x)).sum())
                        .collect(),
                );
            }
        }
        let nrows = rows.len().max(n);
        let mut cmat = DMatrix::zeros(nrows, n);
        for (r, row) in rows.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                cmat[(r, c)] = v;
            }
        }
        let svd = cmat.svd(false, true);
        let vt = svd.v_t.as_ref().expect("requested V^T");
        let smax = svd.singular_values.max();
        let null: Vec<DVector<f64>> = (0..svd.singular_values.len())
            .filter(|&i| svd.singular_values[i] <= 1e-10 * smax)
            .map(|i| vt.row(i).transpose())
            .collect();
        let interior: Vec<VecPoly> = null
            .iter()
            .map(|coef| {
                let mut f = zero_vec();
                for (j, g) in full.iter().enumerate() {
                    for c in 0..dim {
                        f[c] = f[c].axpy(coef[j], &g[c]);
                    }
                }
                f
            })
            .collect();

        let targets = mean_zero_basis(dim, m);
        let r = targets.len();
        let mut big = DMatrix::zeros(r, interior.len());
        for (j, f) in interior.iter().enumerate() {
            let d = div(f, dim);
            for (i, q) in targets.iter().enumerate() {
                big[(i, j)] = d.mul(q).integrate_reference(dim);
            }
        }
        let qr = big.clone().col_piv_qr();
        let mut order = DMatrix::from_fn(1, interior.len(), |_, j| j as f64);
        qr.p().permute_columns(&mut order);
        let chosen: Vec<usize> = (0..r).map(|j| order[(0, j)] as usize).collect();
        let funcs: Vec<VecPoly> = chosen.iter().map(|&j| interior[j].clone()).collect();
        let divs: Vec<Poly> = funcs.iter().map(|f| div(f, dim)).collect();
        let moments = DMatrix::from_fn(r, r, |i, j| big[(i, chosen[j])]);
        let moments_inv = moments
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Rank("divergence moment matrix is singular".into()))?;
        let cond = moments.norm() * moments_inv.norm();
        if !cond.is_finite() || cond > 1e12 {
            return Err(Error::Rank(format!(
                "divergence moment matrix condition {cond:e}"
            )));
        }
        Ok(Self {
            dim,
            m,
            funcs,
            divs,
            targets,
            moments,
            moments_inv,
        })
    }

    pub fn len(&self) -> usize {
        self.funcs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.funcs.is_empty()
    }

    /// Expected size `C(m + d, d) - 1`.
    pub fn expected_len(dim: usize, m: usize) -> usize {
        if m == 0 {
            0
        } else {
            dim_pk(dim, m) - 1
        }
    }
}

/// Values and derivatives of reference bases at the points of a rule.
#[derive(Clone, Debug)]
pub struct Tabulation {
    pub rule: QuadratureRule,
    /// `[q][a]`
    pub values: Vec<Vec<f64>>,
    /// `[q][a]` reference gradients
    pub grads: Vec<Vec<[f64; 3]>>,
}

impl Tabulation {
    pub fn scalar(basis: &LagrangeBasis, rule: &QuadratureRule) -> Self {
        let values = rule
            .points
            .iter()
            .map(|x| basis.funcs.iter().map(|p| p.eval(x)).collect())
            .collect();
        let grads = rule
            .points
            .iter()
            .map(|x| {
                basis
                    .grads
                    .iter()
                    .map(|g| [g[0].eval(x), g[1].eval(x), g[2].eval(x)])
                    .collect()
            })
            .collect();
        Self {
            rule: rule.clone(),
            values,
            grads,
        }
    }
}

/// Evaluates a vector polynomial at a point.
pub fn eval_vec(v: &VecPoly, x: &[f64; 3]) -> [f64; 3] {
    [v[0].eval(x), v[1].eval(x), v[2].eval(x)]
}
