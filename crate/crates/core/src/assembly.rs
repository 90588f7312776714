//! Assembly of the discrete bilinear forms and the three global systems.
//!
//! All velocity forms are assembled once in the composite space of
//! [`VelocitySpace`] (continuous part, RT0, bubbles) with rows indexing test
//! functions. Each scheme then restricts to an affine subspace
//! `u = E y + lift`: the decoupled scheme through `E = [I; R | S]`, the
//! reduced scheme through `E = [I; -R_perp]`, and the full scheme by
//! selecting free dofs. The mixed schemes add a pressure block and one
//! Lagrange multiplier for the pressure mean.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fespace::VelocitySpace;
use crate::linalg::{CsrMatrix, LinearSolver, SolveInfo, TripletBuilder};
use crate::mesh::{CellGeometry, Point, SimplicialMesh};
use crate::quadrature::QuadratureRule;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Decoupled scheme with a divergence-free velocity basis.
    Dfb,
    /// Reduced mixed scheme with piecewise constant pressure.
    Red,
    /// Full mixed scheme.
    Full,
}

/// Velocity enrichment of the full scheme for `k >= d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Enrichment {
    /// Bubbles plus zero-trace RT0; same velocity as the decoupled scheme.
    Modified,
    /// Bubbles only; same velocity as the reduced scheme.
    Original,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BcStrategy {
    Stream,
    DarcyGlobal,
    DarcyPatch,
}

macro_rules! string_enum {
    ($t:ty, $($v:path => $s:literal),*) => {
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($v => $s),* })
            }
        }
        impl FromStr for $t {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($s => Ok($v),)*
                    _ => Err(Error::Parse(format!("unknown value '{s}'"))),
                }
            }
        }
    };
}

string_enum!(Scheme, Scheme::Dfb => "dfb", Scheme::Red => "red", Scheme::Full => "full");
string_enum!(Enrichment, Enrichment::Modified => "modified", Enrichment::Original => "original");
string_enum!(
    BcStrategy,
    BcStrategy::Stream => "stream",
    BcStrategy::DarcyGlobal => "darcy-global",
    BcStrategy::DarcyPatch => "darcy-patch"
);

#[derive(Clone, Debug, PartialEq)]
pub struct SchemeConfig {
    pub dim: usize,
    pub k: usize,
    /// `+1` skew-symmetric, `-1` symmetric.
    pub delta: i32,
    pub alpha: f64,
    pub alpha0: f64,
    pub nu: f64,
    pub scheme: Scheme,
    pub enrichment: Enrichment,
    pub bc: BcStrategy,
    /// Degree of the reconstructed pressure.
    pub pressure_degree: usize,
    /// Quadrature degree for right-hand sides.
    pub rhs_degree: usize,
}

pub fn default_alpha(dim: usize, k: usize) -> f64 {
    match (dim, k) {
        (3, 3) => 300.0,
        (3, _) => 200.0,
        _ => 100.0,
    }
}

pub fn default_alpha0(dim: usize, k: usize, delta: i32) -> f64 {
    if k == 1 || (delta == 1 && dim == 3) {
        1.0
    } else {
        default_alpha(dim, k)
    }
}

impl SchemeConfig {
    pub fn new(dim: usize, k: usize, delta: i32, scheme: Scheme) -> Self {
        Self {
            dim,
            k,
            delta,
            alpha: default_alpha(dim, k),
            alpha0: default_alpha0(dim, k, delta),
            nu: 1.0,
            scheme,
            enrichment: Enrichment::Modified,
            bc: if dim == 2 {
                BcStrategy::Stream
            } else {
                BcStrategy::DarcyPatch
            },
            pressure_degree: k,
            rhs_degree: if dim == 2 { 2 * k + 10 } else { 2 * k + 4 },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dim == 2 || self.dim == 3) {
            return Err(Error::Unsupported(format!("dimension {}", self.dim)));
        }
        if self.k == 0 || self.k > 4 {
            return Err(Error::Unsupported(format!("polynomial degree {}", self.k)));
        }
        if self.delta != 1 && self.delta != -1 {
            return Err(Error::Unsupported(format!("delta = {}", self.delta)));
        }
        if !(self.nu > 0.0 && self.alpha > 0.0 && self.alpha0 > 0.0) {
            return Err(Error::Unsupported(
                "nu, alpha and alpha0 must be positive".into(),
            ));
        }
        if self.pressure_degree == 0 {
            return Err(Error::Unsupported(
                "pressure degree must be at least 1".into(),
            ));
        }
        if self.bc == BcStrategy::Stream && self.dim != 2 {
            return Err(Error::Unsupported(
                "the stream-function strategy is 2D only".into(),
            ));
        }
        Ok(())
    }

    /// Whether the full scheme uses only bubbles as enrichment.
    pub fn full_is_original(&self) -> bool {
        self.enrichment == Enrichment::Original && self.k >= self.dim
    }
}

/// `(grad u, grad v)` for vector `P_k` (unscaled), `n_ct x n_ct`.
pub fn assemble_grad_grad(mesh: &SimplicialMesh, vs: &VelocitySpace) -> Result<CsrMatrix> {
    let mut t = TripletBuilder::new(vs.n_ct, vs.n_ct);
    push_grad_grad(mesh, vs, &mut t, 1.0);
    t.build()
}

fn push_grad_grad(mesh: &SimplicialMesh, vs: &VelocitySpace, t: &mut TripletBuilder, s: f64) {
    for c in 0..mesh.num_cells() {
        let geo = CellGeometry::new(mesh, c);
        let kl = vs.element.local_stiffness(&geo);
        let nodes = vs.nodes.cell(c);
        for (a, &na) in nodes.iter().enumerate() {
            for (b, &nb) in nodes.iter().enumerate() {
                for j in 0..vs.dim {
                    t.push(vs.ct_dof(na, j), vs.ct_dof(nb, j), s * kl[(a, b)]);
                }
            }
        }
    }
}

/// Index of the non-continuous part: RT0 facets first, then bubbles.
fn r_index(vs: &VelocitySpace, c: usize, jb: usize) -> usize {
    vs.n_rt + vs.bubble_index(c, jb)
}

/// Laplacian coupling blocks `(A^{ct,R}, A^{R,ct})` with
/// `A^{ct,R}[i][j] = delta (lap phi_i, psi_j)` and
/// `A^{R,ct}[j][i] = -(lap phi_i, psi_j)`. The `R` index runs over RT0
/// facets then bubbles.
pub fn assemble_laplacian_coupling(
    mesh: &SimplicialMesh,
    vs: &VelocitySpace,
    delta: i32,
) -> Result<(CsrMatrix, CsrMatrix)> {
    let nr = vs.n_rt + vs.n_bubble;
    let mut ct_r = TripletBuilder::new(vs.n_ct, nr);
    let mut r_ct = TripletBuilder::new(nr, vs.n_ct);
    for_each_laplace(mesh, vs, |i, r, l| {
        ct_r.push(i, r, delta as f64 * l);
        r_ct.push(r, i, -l);
    });
    Ok((ct_r.build()?, r_ct.build()?))
}

/// Calls `f(ct dof, R index, (lap phi, psi))` for every cell contribution.
fn for_each_laplace<F: FnMut(usize, usize, f64)>(
    mesh: &SimplicialMesh,
    vs: &VelocitySpace,
    mut f: F,
) {
    if vs.k < 2 {
        return;
    }
    let el = &vs.element;
    for c in 0..mesh.num_cells() {
        let geo = CellGeometry::new(mesh, c);
        let facets = mesh.cell_facets(c);
        for (a, &node) in vs.nodes.cell(c).iter().enumerate() {
            let lb = el.laplace_bubble(&geo, a);
            let lr = el.laplace_rt0(&geo, a);
            for j in 0..vs.dim {
                let i = vs.ct_dof(node, j);
                for jb in 0..vs.nb {
                    f(i, r_index(vs, c, jb), lb[(jb, j)]);
                }
                for (li, &fc) in facets.iter().enumerate() {
                    f(i, fc, mesh.cell_facet_sign(c, li) * lr[(li, j)]);
                }
            }
        }
    }
}

/// Stabilisation `A^{R,R}` (unscaled): `alpha0 (div psi_F, div psi_F)` on
/// interior facets and `(1 - delta) alpha / 2 (div b, div b')` on bubbles.
pub fn assemble_stabilization(
    mesh: &SimplicialMesh,
    vs: &VelocitySpace,
    cfg: &SchemeConfig,
) -> Result<CsrMatrix> {
    let nr = vs.n_rt + vs.n_bubble;
    let mut t = TripletBuilder::new(nr, nr);
    push_stabilization(mesh, vs, cfg, &mut t, 0, 1.0);
    t.build()
}

fn push_stabilization(
    mesh: &SimplicialMesh,
    vs: &VelocitySpace,
    cfg: &SchemeConfig,
    t: &mut TripletBuilder,
    off: usize,
    s: f64,
) {
    let sb = s * (1.0 - cfg.delta as f64) * cfg.alpha / 2.0;
    for c in 0..mesh.num_cells() {
        let geo = CellGeometry::new(mesh, c);
        let vol = mesh.cell_volume(c);
        for &f in mesh.cell_facets(c) {
            if !mesh.is_boundary_facet(f) {
                t.push(off + f, off + f, s * cfg.alpha0 / vol);
            }
        }
        if sb != 0.0 {
            for i in 0..vs.nb {
                for j in 0..vs.nb {
                    let v = sb * vs.element.bubble_divdiv[(i, j)] / geo.det;
                    t.push(off + r_index(vs, c, i), off + r_index(vs, c, j), v);
                }
            }
        }
    }
}

/// `nu a_h` on the whole composite velocity space.
pub fn assemble_velocity_operator(
    mesh: &SimplicialMesh,
    vs: &VelocitySpace,
    cfg: &SchemeConfig,
) -> Result<CsrMatrix> {
    let n = vs.ndofs();
    let mut t = TripletBuilder::new(n, n);
    let nu = cfg.nu;
    push_grad_grad(mesh, vs, &mut t, nu);
    let off = vs.n_ct;
    let delta = cfg.delta as f64;
    for_each_laplace(mesh, vs, |i, r, l| {
        t.push(i, off + r, nu * delta * l);
        t.push(off + r, i, -nu * l);
    });
    push_stabilization(mesh, vs, cfg, &mut t, off, nu);
    t.build()
}

/// Load vector `(f, v)` for every basis function of the composite space.
pub fn assemble_rhs<F>(mesh: &SimplicialMesh, vs: &VelocitySpace, degree: usize, f: F) -> Vec<f64>
where
    F: Fn(&Point) -> [f64; 3],
{
    let d = vs.dim;
    let rule = QuadratureRule::simplex(d, degree);
    let tab = vs.element.tabulate(&rule);
    let mut b = vec![0.0; vs.ndofs()];
    for c in 0..mesh.num_cells() {
        let geo = CellGeometry::new(mesh, c);
        let nodes = vs.nodes.cell(c);
        let facets = mesh.cell_facets(c);
        for (q, xh) in rule.points.iter().enumerate() {
            let w = rule.weights[q] * geo.det;
            let fx = f(&geo.map(xh));
            for (a, &node) in nodes.iter().enumerate() {
                let phi = tab.lag[q][a];
                for j in 0..d {
                    b[vs.ct_dof(node, j)] += w * fx[j] * phi;
                }
            }
            for (i, &fc) in facets.iter().enumerate() {
                let v = geo.piola(&tab.rt0[q][i]);
                let s = mesh.cell_facet_sign(c, i);
                b[vs.rt_offset() + fc] += s * w * (0..d).map(|j| fx[j] * v[j]).sum::<f64>();
            }
            for jb in 0..vs.nb {
                let v = geo.piola(&tab.bubble[q][jb]);
                b[vs.bubble_offset() + vs.bubble_index(c, jb)] +=
                    w * (0..d).map(|j| fx[j] * v[j]).sum::<f64>();
            }
        }
    }
    b
}

/// `B[(c, r)][i] = -(div phi_i, p_r)_c` for the first `np` pressure monomials
/// of every cell.
pub fn assemble_divergence(
    mesh: &SimplicialMesh,
    vs: &VelocitySpace,
    np: usize,
) -> Result<CsrMatrix> {
    let el = &vs.element;
    let mut t = TripletBuilder::new(mesh.num_cells() * np, vs.ndofs());
    for c in 0..mesh.num_cells() {
        let geo = CellGeometry::new(mesh, c);
        for r in 0..np {
            let row = c * np + r;
            for (a, &node) in vs.nodes.cell(c).iter().enumerate() {
                for j in 0..vs.dim {
                    t.push(row, vs.ct_dof(node, j), -el.div_pressure(&geo, a, j, r));
                }
            }
            for (i, &f) in mesh.cell_facets(c).iter().enumerate() {
                let v = mesh.cell_facet_sign(c, i) * el.rt0_div() * el.pressure_mass[r];
                t.push(row, vs.rt_offset() + f, -v);
            }
            for jb in 0..vs.nb {
                t.push(
                    row,
                    vs.bubble_offset() + vs.bubble_index(c, jb),
                    -el.bubble_div_pressure[(jb, r)],
                );
            }
        }
    }
    t.build()
}

/// `int_T p_r` for the pressure mean constraint.
fn pressure_mean_row(mesh: &SimplicialMesh, vs: &VelocitySpace, np: usize) -> Result<CsrMatrix> {
    let mut t = TripletBuilder::new(1, mesh.num_cells() * np);
    for c in 0..mesh.num_cells() {
        let det = CellGeometry::new(mesh, c).det;
        for r in 0..np {
            t.push(0, c * np + r, det * vs.element.pressure_mass[r]);
        }
    }
    t.build()
}

/// A global linear system together with the map back to the composite
/// velocity space.
#[derive(Clone, Debug)]
pub struct AssembledSystem {
    pub scheme: Scheme,
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub n_velocity: usize,
    /// Pressure unknowns, excluding the mean multiplier.
    pub n_pressure: usize,
    pub pressure_per_cell: usize,
    /// `E`, `ndofs(V) x n_velocity`.
    pub embedding: CsrMatrix,
    pub lift: Vec<f64>,
    /// Solve by Cholesky (and thereby check positive definiteness).
    pub spd: bool,
}

impl AssembledSystem {
    pub fn ndofs(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn nnz(&self) -> usize {
        self.matrix.nnz()
    }

    pub fn solve(&self) -> Result<(Vec<f64>, SolveInfo)> {
        if self.n_pressure > 0 {
            return self.solve_bordered();
        }
        let solver = if self.spd {
            LinearSolver::ldlt()
        } else {
            LinearSolver::lu()
        };
        solver
            .solve(&self.matrix, &self.rhs)
            .map_err(|e| match (e, self.spd) {
                (Error::Factorization(m), true) => Error::Factorization(format!(
                "{m}; the symmetric velocity matrix is not positive definite (alpha too small?)"
            )),
                (e, _) => e,
            })
    }

    /// Solves the system with the mean-value multiplier without factorising
    /// its dense row. Without that row the matrix `M` is singular exactly on
    /// the constant pressure `z` (from the left and the right), so the
    /// multiplier is `lambda = z.r / z.c`; the compatible system is solved
    /// with one pressure dof fixed and the result shifted along `z` to zero
    /// mean.
    fn solve_bordered(&self) -> Result<(Vec<f64>, SolveInfo)> {
        let nv = self.n_velocity;
        let n = nv + self.n_pressure;
        let np = self.pressure_per_cell;
        let in_z = |i: usize| i >= nv && i < n && (i - nv).is_multiple_of(np);
        let (cols, vals) = self.matrix.row(n);
        let mut c = vec![0.0; n];
        for (&j, &v) in cols.iter().zip(vals) {
            c[j] = v;
        }
        let (mut zr, mut zc) = (0.0, 0.0);
        for i in (nv..n).filter(|&i| in_z(i)) {
            zr += self.rhs[i];
            zc += c[i];
        }
        let lambda = zr / zc;
        let keep: Vec<usize> = (0..n).filter(|&i| i != nv).collect();
        let b: Vec<f64> = keep.iter().map(|&i| self.rhs[i] - c[i] * lambda).collect();
        let (y, _) = LinearSolver::lu().solve(&self.matrix.submatrix(&keep, &keep), &b)?;
        let mut x = vec![0.0; n + 1];
        for (&i, v) in keep.iter().zip(y) {
            x[i] = v;
        }
        let beta = -c.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() / zc;
        for (i, v) in x.iter_mut().enumerate().take(n) {
            if in_z(i) {
                *v += beta;
            }
        }
        x[n] = lambda;
        let info = SolveInfo {
            iterations: 1,
            relative_residual: crate::linalg::relative_residual(&self.matrix, &x, &self.rhs),
        };
        if !(info.relative_residual <= 1e-8) {
            return Err(Error::Factorization(format!(
                "relative residual {:e} of the mixed system",
                info.relative_residual
            )));
        }
        Ok((x, info))
    }

    /// Composite velocity `E y + lift`.
    pub fn velocity(&self, solution: &[f64]) -> Result<Vec<f64>> {
        let mut u = self.embedding.spmv(&solution[..self.n_velocity])?;
        for (a, b) in u.iter_mut().zip(&self.lift) {
            *a += b;
        }
        Ok(u)
    }

    /// Pressure coefficients (cell-major, monomial basis of the reference
    /// cell); empty for the decoupled scheme.
    pub fn pressure<'a>(&self, solution: &'a [f64]) -> &'a [f64] {
        &solution[self.n_velocity..self.n_velocity + self.n_pressure]
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.matrix.asymmetry() <= tol
    }
}

/// Operators shared by all schemes on one mesh.
#[derive(Clone, Debug)]
pub struct Operators {
    /// `nu a_h` on the composite space.
    pub a: CsrMatrix,
    /// Load vector on the composite space.
    pub b: Vec<f64>,
    /// `R` (rows: RT0 then bubbles).
    pub r: CsrMatrix,
}

fn galerkin(
    a: &CsrMatrix,
    b: &[f64],
    e: &CsrMatrix,
    lift: &[f64],
) -> Result<(CsrMatrix, Vec<f64>)> {
    let al = a.spmv(lift)?;
    let res: Vec<f64> = b.iter().zip(&al).map(|(x, y)| x - y).collect();
    let m = CsrMatrix::triple_product(e, a)?;
    let rhs = e.transpose().spmv(&res)?;
    Ok((m, rhs))
}

/// Decoupled system in `(x^ct, x^{RT0,0})`: `E = [[I_free, 0], [R_free, S]]`.
pub fn compose_dfb_system(
    vs: &VelocitySpace,
    ops: &Operators,
    s: &CsrMatrix,
    lift: &[f64],
    cfg: &SchemeConfig,
) -> Result<AssembledSystem> {
    if s.nrows() != vs.n_rt {
        return Err(Error::Shape("S must have one row per facet".into()));
    }
    let free = vs.ct_free_dofs();
    let mut col = vec![usize::MAX; vs.n_ct];
    for (i, &d) in free.iter().enumerate() {
        col[d] = i;
    }
    let nf = free.len();
    let mut t = TripletBuilder::new(vs.ndofs(), nf + s.ncols());
    for (i, &d) in free.iter().enumerate() {
        t.push(d, i, 1.0);
    }
    for (row, c, v) in ops.r.triplets() {
        if col[c] != usize::MAX {
            t.push(vs.n_ct + row, col[c], v);
        }
    }
    for (row, c, v) in s.triplets() {
        t.push(vs.rt_offset() + row, nf + c, v);
    }
    let e = t.build()?;
    let (matrix, rhs) = galerkin(&ops.a, &ops.b, &e, lift)?;
    Ok(AssembledSystem {
        scheme: Scheme::Dfb,
        n_velocity: e.ncols(),
        n_pressure: 0,
        pressure_per_cell: 0,
        matrix,
        rhs,
        embedding: e,
        lift: lift.to_vec(),
        spd: cfg.delta == -1,
    })
}

fn compose_mixed(
    scheme: Scheme,
    mesh: &SimplicialMesh,
    vs: &VelocitySpace,
    ops: &Operators,
    e: CsrMatrix,
    lift: &[f64],
    np: usize,
) -> Result<AssembledSystem> {
    let (avv, rv) = galerkin(&ops.a, &ops.b, &e, lift)?;
    let bq = assemble_divergence(mesh, vs, np)?;
    let be = bq.matmul(&e)?.prune(1e-14);
    let bet = be.transpose();
    let mean = pressure_mean_row(mesh, vs, np)?;
    let meant = mean.transpose();
    let (nv, npr) = (e.ncols(), bq.nrows());
    let matrix = CsrMatrix::from_blocks(
        &[nv, npr, 1],
        &[nv, npr, 1],
        &[
            (0, 0, &avv),
            (0, 1, &bet),
            (1, 0, &be),
            (1, 2, &meant),
            (2, 1, &mean),
        ],
    )?;
    let mut rhs = rv;
    rhs.extend(bq.spmv(lift)?.into_iter().map(|v| -v));
    rhs.push(0.0);
    Ok(AssembledSystem {
        scheme,
        n_velocity: nv,
        n_pressure: npr,
        pressure_per_cell: np,
        matrix,
        rhs,
        embedding: e,
        lift: lift.to_vec(),
        spd: false,
    })
}

/// Full mixed system with `P_{k-1}` pressures. The free velocity dofs are
/// the interior continuous dofs, the bubbles and (unless the original
/// enrichment is requested with `k >= d`) the interior RT0 dofs.
pub fn compose_full_system(
    mesh: &SimplicialMesh,
    vs: &VelocitySpace,
    ops: &Operators,
    lift: &[f64],
    cfg: &SchemeConfig,
) -> Result<AssembledSystem> {
    let mut cols: Vec<usize> = vs.ct_free_dofs();
    if !cfg.full_is_original() {
        cols.extend(mesh.interior_facets().map(|f| vs.rt_offset() + f));
    }
    cols.extend(vs.bubble_offset()..vs.ndofs());
    let mut t = TripletBuilder::new(vs.ndofs(), cols.len());
    for (i, &d) in cols.iter().enumerate() {
        t.push(d, i, 1.0);
    }
    let np = vs.element.num_pressure();
    compose_mixed(Scheme::Full, mesh, vs, ops, t.build()?, lift, np)
}

/// Reduced mixed system with piecewise constant pressure. For `k >= d` the
/// velocity is `(u^ct, -R_perp u^ct)`; for `k < d` the interior RT0 dofs
/// stay free and the bubbles follow `-R_{k-1} div u^ct`.
pub fn compose_reduced_system(
    mesh: &SimplicialMesh,
    vs: &VelocitySpace,
    ops: &Operators,
    rperp: Option<&CsrMatrix>,
    lift: &[f64],
) -> Result<AssembledSystem> {
    let free = vs.ct_free_dofs();
    let mut col = vec![usize::MAX; vs.n_ct];
    for (i, &d) in free.iter().enumerate() {
        col[d] = i;
    }
    let nf = free.len();
    let interior: Vec<usize> = if vs.k < vs.dim {
        mesh.interior_facets().collect()
    } else {
        vec![]
    };
    let mut t = TripletBuilder::new(vs.ndofs(), nf + interior.len());
    for (i, &d) in free.iter().enumerate() {
        t.push(d, i, 1.0);
    }
    if vs.k >= vs.dim {
        let rp =
            rperp.ok_or_else(|| Error::Shape("reduced scheme needs R_perp for k >= d".into()))?;
        for (row, c, v) in rp.triplets() {
            if col[c] != usize::MAX {
                t.push(vs.bubble_offset() + row, col[c], -v);
            }
        }
    } else {
        for (row, c, v) in ops.r.triplets() {
            if row >= vs.n_rt && col[c] != usize::MAX {
                t.push(vs.n_ct + row, col[c], v);
            }
        }
        for (i, &f) in interior.iter().enumerate() {
            t.push(vs.rt_offset() + f, nf + i, 1.0);
        }
    }
    compose_mixed(Scheme::Red, mesh, vs, ops, t.build()?, lift, 1)
}
