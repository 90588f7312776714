//! Bases of divergence-free lowest-order Raviart-Thomas functions.
//!
//! In 2D the curls of the interior hat functions span the zero-trace
//! subspace. In 3D the curls of lowest-order Nedelec edge functions are used,
//! one per edge outside a spanning tree of the vertex-edge graph.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, TripletBuilder};
use crate::mesh::{cross, dot, sub, SimplicialMesh};

/// Change of basis `S` from a divergence-free basis to the RT0 facet basis.
#[derive(Clone, Debug)]
pub struct DivFreeBasis {
    /// `n_facets x n_columns`
    pub s: CsrMatrix,
    /// The interior vertex (2D) or cotree edge (3D) generating each column.
    pub generators: Vec<usize>,
}

impl DivFreeBasis {
    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }
}

/// Cell-facet incidence `B[c][F] = +-1`: the divergence of `psi_F` on `c`
/// times `|c|`.
pub fn rt0_divergence_matrix(mesh: &SimplicialMesh) -> CsrMatrix {
    let mut t = TripletBuilder::new(mesh.num_cells(), mesh.num_facets());
    for c in 0..mesh.num_cells() {
        for (i, &f) in mesh.cell_facets(c).iter().enumerate() {
            t.push(c, f, mesh.cell_facet_sign(c, i));
        }
    }
    t.build().expect("indices in range")
}

/// Zero-trace basis in 2D: one column per interior vertex.
pub fn build_divfree_basis_2d(mesh: &SimplicialMesh) -> Result<DivFreeBasis> {
    if mesh.dim() != 2 {
        return Err(Error::Unsupported(
            "2D divergence-free basis on a 3D mesh".into(),
        ));
    }
    let mut col = vec![usize::MAX; mesh.num_vertices()];
    let mut generators = Vec::new();
    for v in 0..mesh.num_vertices() {
        if !mesh.is_boundary_vertex(v) {
            col[v] = generators.len();
            generators.push(v);
        }
    }
    let mut t = TripletBuilder::new(mesh.num_facets(), generators.len());
    for f in 0..mesh.num_facets() {
        let [a, b] = [mesh.facet(f)[0], mesh.facet(f)[1]];
        // tangent obtained by rotating the normal counterclockwise
        let n = mesh.facet_normal(f);
        let tau = [-n[1], n[0], 0.0];
        let ab = sub(mesh.vertex(b), mesh.vertex(a));
        let (start, end) = if dot(&ab, &tau) > 0.0 { (a, b) } else { (b, a) };
        if col[end] != usize::MAX {
            t.push(f, col[end], 1.0);
        }
        if col[start] != usize::MAX {
            t.push(f, col[start], -1.0);
        }
    }
    let basis = DivFreeBasis {
        s: t.build()?,
        generators,
    };
    validate(mesh, &basis, true)?;
    Ok(basis)
}

/// Flux of `curl N_e` through facet `f` containing edge `p -> q`: `+1` if
/// the boundary of `f`, oriented by its normal, runs from `p` to `q`.
fn edge_facet_sign(mesh: &SimplicialMesh, f: usize, p: usize, q: usize) -> f64 {
    let fv = mesh.facet(f);
    let (a, b, c) = (fv[0], fv[1], fv[2]);
    let x = |v: usize| *mesh.vertex(v);
    let nrm = cross(&sub(&x(b), &x(a)), &sub(&x(c), &x(a)));
    let cycle = if dot(&nrm, mesh.facet_normal(f)) > 0.0 {
        [a, b, c]
    } else {
        [a, c, b]
    };
    let forward = (0..3).any(|i| cycle[i] == p && cycle[(i + 1) % 3] == q);
    if forward {
        1.0
    } else {
        -1.0
    }
}

/// Tree-cotree basis in 3D. With `zero_trace` the boundary vertices are
/// contracted into one node and only interior edges generate columns; the
/// result spans the divergence-free RT0 functions with zero normal trace.
/// Otherwise it spans all divergence-free RT0 functions.
pub fn build_divfree_basis_3d(mesh: &SimplicialMesh, zero_trace: bool) -> Result<DivFreeBasis> {
    if mesh.dim() != 3 {
        return Err(Error::Unsupported(
            "3D divergence-free basis on a 2D mesh".into(),
        ));
    }
    let nv = mesh.num_vertices();
    // graph node of each vertex; node 0 is the contracted boundary
    let mut node = vec![0usize; nv];
    let mut nn = if zero_trace { 1 } else { 0 };
    for v in 0..nv {
        if !(zero_trace && mesh.is_boundary_vertex(v)) {
            node[v] = nn;
            nn += 1;
        }
    }
    let edges = mesh.edges();
    let active: Vec<usize> = (0..edges.len())
        .filter(|&e| !(zero_trace && mesh.is_boundary_edge(e)))
        .collect();
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nn];
    for &e in &active {
        let (a, b) = (node[edges[e][0]], node[edges[e][1]]);
        if a != b {
            adj[a].push((b, e));
            adj[b].push((a, e));
        }
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    let mut in_tree = vec![false; edges.len()];
    let mut seen = vec![false; nn];
    if nn > 0 {
        seen[0] = true;
        let mut queue = VecDeque::from([0usize]);
        while let Some(u) = queue.pop_front() {
            for &(w, e) in &adj[u] {
                if !seen[w] {
                    seen[w] = true;
                    in_tree[e] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    if seen.iter().any(|&s| !s) {
        return Err(Error::InvalidMesh("edge graph is not connected".into()));
    }
    // facets around every edge
    let mut edge_facets: Vec<Vec<usize>> = vec![Vec::new(); edges.len()];
    let local = crate::mesh::local_edges(3);
    for c in 0..mesh.num_cells() {
        let cv = mesh.cell(c);
        for (le, &e) in mesh.cell_edges(c).iter().enumerate() {
            let [i, j] = local[le];
            for (lf, &f) in mesh.cell_facets(c).iter().enumerate() {
                // local facet lf is opposite vertex lf
                if lf != i && lf != j && !edge_facets[e].contains(&f) {
                    edge_facets[e].push(f);
                }
            }
            debug_assert!(edges[e].contains(&cv[i]) && edges[e].contains(&cv[j]));
        }
    }
    let generators: Vec<usize> = active.into_iter().filter(|&e| !in_tree[e]).collect();
    let mut t = TripletBuilder::new(mesh.num_facets(), generators.len());
    for (col, &e) in generators.iter().enumerate() {
        let [p, q] = edges[e];
        let (p, q) = if p < q { (p, q) } else { (q, p) };
        for &f in &edge_facets[e] {
            t.push(f, col, edge_facet_sign(mesh, f, p, q));
        }
    }
    let basis = DivFreeBasis {
        s: t.build()?,
        generators,
    };
    validate(mesh, &basis, zero_trace)?;
    Ok(basis)
}

/// Checks the per-cell flux balance of every column, zero boundary rows,
/// the expected dimension, and on small meshes full column rank.
fn validate(mesh: &SimplicialMesh, basis: &DivFreeBasis, zero_trace: bool) -> Result<()> {
    let b = rt0_divergence_matrix(mesh);
    if b.matmul(&basis.s)?.max_abs() > 1e-13 {
        return Err(Error::Rank(
            "divergence-free basis column with nonzero divergence".into(),
        ));
    }
    let expected = if zero_trace {
        mesh.num_interior_facets() + 1 - mesh.num_cells()
    } else {
        mesh.num_facets() - mesh.num_cells()
    };
    if zero_trace {
        for f in mesh.boundary_facets() {
            if !basis.s.row(f).0.is_empty() {
                return Err(Error::Rank("zero-trace basis with boundary flux".into()));
            }
        }
    }
    if basis.len() != expected {
        return Err(Error::Rank(format!(
            "{} divergence-free basis functions, expected {expected}",
            basis.len()
        )));
    }
    if mesh.num_facets() <= 1500 && !basis.is_empty() {
        let dense = basis.s.to_dense();
        let qr = dense.col_piv_qr();
        let r = qr.r();
        let rmax = r[(0, 0)].abs();
        let n = basis.len().min(r.nrows());
        if (0..n).any(|i| r[(i, i)].abs() <= 1e-10 * rmax) {
            return Err(Error::Rank(
                "divergence-free basis is rank deficient".into(),
            ));
        }
    }
    Ok(())
}
