//! Simplicial meshes in two and three dimensions.
//!
//! Cells are stored with positive orientation. Local facet `i` of a cell is
//! the facet opposite its local vertex `i`. Every facet carries a unit normal
//! that points from its lower-index cell into its higher-index cell; on the
//! boundary it points outward.

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};

/// Marker for absent entries in fixed-size index arrays.
pub const NONE: usize = usize::MAX;

pub type Point = [f64; 3];

#[derive(Clone, Debug)]
pub struct SimplicialMesh {
    dim: usize,
    vertices: Vec<Point>,
    cells: Vec<[usize; 4]>,
    refine_order: Vec<[usize; 4]>,
    facets: Vec<[usize; 3]>,
    facet_index: HashMap<[usize; 3], usize>,
    facet_cells: Vec<[usize; 2]>,
    facet_normals: Vec<Point>,
    cell_facets: Vec<[usize; 4]>,
    edges: Vec<[usize; 2]>,
    cell_edges: Vec<[usize; 6]>,
    boundary_facet: Vec<bool>,
    boundary_vertex: Vec<bool>,
    boundary_edge: Vec<bool>,
}

/// Local vertex pairs of the edges of a triangle or tetrahedron.
pub fn local_edges(dim: usize) -> &'static [[usize; 2]] {
    if dim == 2 {
        &[[1, 2], [0, 2], [0, 1]]
    } else {
        &[[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]]
    }
}

pub(crate) fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: &Point, b: &Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: &Point) -> f64 {
    dot(a, a).sqrt()
}

fn signed_volume(dim: usize, p: &[Point]) -> f64 {
    if dim == 2 {
        let a = sub(&p[1], &p[0]);
        let b = sub(&p[2], &p[0]);
        0.5 * (a[0] * b[1] - a[1] * b[0])
    } else {
        let a = sub(&p[1], &p[0]);
        let b = sub(&p[2], &p[0]);
        let c = sub(&p[3], &p[0]);
        dot(&a, &cross(&b, &c)) / 6.0
    }
}

impl SimplicialMesh {
    /// Builds a mesh from vertex coordinates and cell vertex lists.
    ///
    /// Cells with negative orientation are flipped. The given vertex order
    /// is kept separately and drives uniform refinement.
    pub fn new(dim: usize, vertices: Vec<Point>, cells: Vec<Vec<usize>>) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidMesh(format!("dimension {dim}")));
        }
        let mut order = Vec::with_capacity(cells.len());
        for (c, cell) in cells.iter().enumerate() {
            if cell.len() != dim + 1 {
                return Err(Error::InvalidMesh(format!(
                    "cell {c} has {} vertices, expected {}",
                    cell.len(),
                    dim + 1
                )));
            }
            let mut a = [NONE; 4];
            for (i, &v) in cell.iter().enumerate() {
                if v >= vertices.len() {
                    return Err(Error::InvalidMesh(format!(
                        "cell {c} references vertex {v}"
                    )));
                }
                a[i] = v;
            }
            order.push(a);
        }
        Self::from_parts(dim, vertices, order)
    }

    fn from_parts(dim: usize, vertices: Vec<Point>, refine_order: Vec<[usize; 4]>) -> Result<Self> {
        let nv = vertices.len();
        let mut cells = Vec::with_capacity(refine_order.len());
        for (c, o) in refine_order.iter().enumerate() {
            let pts: Vec<Point> = o[..=dim].iter().map(|&v| vertices[v]).collect();
            let vol = signed_volume(dim, &pts);
            let scale = pts
                .iter()
                .skip(1)
                .map(|p| norm(&sub(p, &pts[0])))
                .fold(0.0, f64::max)
                .powi(dim as i32);
            if vol.abs() <= 1e-14 * scale || scale == 0.0 {
                return Err(Error::InvalidMesh(format!("cell {c} is degenerate")));
            }
            let mut cell = *o;
            if vol < 0.0 {
                cell.swap(dim - 1, dim);
            }
            cells.push(cell);
        }

        let mut facets: Vec<[usize; 3]> = Vec::new();
        let mut facet_index = HashMap::new();
        let mut facet_cells: Vec<[usize; 2]> = Vec::new();
        let mut cell_facets = vec![[NONE; 4]; cells.len()];
        for (c, cell) in cells.iter().enumerate() {
            for i in 0..=dim {
                let key = facet_key(dim, cell, i);
                let f = *facet_index.entry(key).or_insert_with(|| {
                    facets.push(key);
                    facet_cells.push([NONE, NONE]);
                    facets.len() - 1
                });
                let fc = &mut facet_cells[f];
                if fc[0] == NONE {
                    fc[0] = c;
                } else if fc[1] == NONE {
                    fc[1] = c;
                } else {
                    return Err(Error::InvalidMesh(format!(
                        "facet {key:?} shared by more than two cells"
                    )));
                }
                cell_facets[c][i] = f;
            }
        }

        let mut facet_normals = Vec::with_capacity(facets.len());
        for (f, key) in facets.iter().enumerate() {
            let a = vertices[key[0]];
            let mut n = if dim == 2 {
                let t = sub(&vertices[key[1]], &a);
                [t[1], -t[0], 0.0]
            } else {
                cross(&sub(&vertices[key[1]], &a), &sub(&vertices[key[2]], &a))
            };
            let len = norm(&n);
            n = [n[0] / len, n[1] / len, n[2] / len];
            let c0 = facet_cells[f][0];
            let local = cell_facets[c0].iter().position(|&g| g == f).unwrap();
            let opp = vertices[cells[c0][local]];
            if dot(&sub(&opp, &a), &n) > 0.0 {
                n = [-n[0], -n[1], -n[2]];
            }
            facet_normals.push(n);
        }

        let (edges, cell_edges) = if dim == 2 {
            let edges: Vec<[usize; 2]> = facets.iter().map(|f| [f[0], f[1]]).collect();
            let ce = cell_facets
                .iter()
                .map(|cf| [cf[0], cf[1], cf[2], NONE, NONE, NONE])
                .collect();
            (edges, ce)
        } else {
            let mut edges = Vec::new();
            let mut index = HashMap::new();
            let mut ce = vec![[NONE; 6]; cells.len()];
            for (c, cell) in cells.iter().enumerate() {
                for (j, le) in local_edges(3).iter().enumerate() {
                    let mut key = [cell[le[0]], cell[le[1]]];
                    key.sort_unstable();
                    let e = *index.entry(key).or_insert_with(|| {
                        edges.push(key);
                        edges.len() - 1
                    });
                    ce[c][j] = e;
                }
            }
            (edges, ce)
        };

        let boundary_facet: Vec<bool> = facet_cells.iter().map(|fc| fc[1] == NONE).collect();
        let mut boundary_vertex = vec![false; nv];
        let mut boundary_edge = vec![false; edges.len()];
        for (f, key) in facets.iter().enumerate() {
            if boundary_facet[f] {
                for &v in &key[..dim] {
                    boundary_vertex[v] = true;
                }
                if dim == 2 {
                    boundary_edge[f] = true;
                }
            }
        }
        if dim == 3 {
            for (c, cf) in cell_facets.iter().enumerate() {
                for i in 0..4 {
                    if boundary_facet[cf[i]] {
                        for (j, le) in local_edges(3).iter().enumerate() {
                            if le[0] != i && le[1] != i {
                                boundary_edge[cell_edges[c][j]] = true;
                            }
                        }
                    }
                }
            }
        }

        Ok(Self {
            dim,
            vertices,
            cells,
            refine_order,
            facets,
            facet_index,
            facet_cells,
            facet_normals,
            cell_facets,
            edges,
            cell_edges,
            boundary_facet,
            boundary_vertex,
            boundary_edge,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }
    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }
    pub fn num_facets(&self) -> usize {
        self.facets.len()
    }
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }
    pub fn num_interior_facets(&self) -> usize {
        self.boundary_facet.iter().filter(|&&b| !b).count()
    }
    pub fn vertex(&self, v: usize) -> &Point {
        &self.vertices[v]
    }
    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }
    /// Vertex indices of cell `c`, positively oriented.
    pub fn cell(&self, c: usize) -> &[usize] {
        &self.cells[c][..=self.dim]
    }
    /// Sorted vertex indices of facet `f`.
    pub fn facet(&self, f: usize) -> &[usize] {
        &self.facets[f][..self.dim]
    }
    /// Index of the facet with the given vertices, if it exists.
    pub fn find_facet(&self, vertices: &[usize]) -> Option<usize> {
        let mut key = [NONE; 3];
        key[..vertices.len()].copy_from_slice(vertices);
        key[..vertices.len()].sort_unstable();
        self.facet_index.get(&key).copied()
    }
    /// The one or two cells adjacent to facet `f`; the second is [`NONE`] on the boundary.
    pub fn facet_cells(&self, f: usize) -> [usize; 2] {
        self.facet_cells[f]
    }
    pub fn facet_normal(&self, f: usize) -> &Point {
        &self.facet_normals[f]
    }
    pub fn cell_facets(&self, c: usize) -> &[usize] {
        &self.cell_facets[c][..=self.dim]
    }
    /// `+1` if the stored normal of local facet `i` points out of cell `c`.
    pub fn cell_facet_sign(&self, c: usize, i: usize) -> f64 {
        if self.facet_cells[self.cell_facets[c][i]][0] == c {
            1.0
        } else {
            -1.0
        }
    }
    pub fn edge(&self, e: usize) -> [usize; 2] {
        self.edges[e]
    }
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }
    pub fn cell_edges(&self, c: usize) -> &[usize] {
        &self.cell_edges[c][..if self.dim == 2 { 3 } else { 6 }]
    }
    pub fn is_boundary_facet(&self, f: usize) -> bool {
        self.boundary_facet[f]
    }
    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }
    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.boundary_edge[e]
    }
    pub fn boundary_facets(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_facets()).filter(|&f| self.boundary_facet[f])
    }
    pub fn interior_facets(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_facets()).filter(|&f| !self.boundary_facet[f])
    }

    pub fn cell_points(&self, c: usize) -> Vec<Point> {
        self.cell(c).iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn cell_volume(&self, c: usize) -> f64 {
        signed_volume(self.dim, &self.cell_points(c))
    }

    pub fn facet_area(&self, f: usize) -> f64 {
        let p: Vec<Point> = self.facet(f).iter().map(|&v| self.vertices[v]).collect();
        if self.dim == 2 {
            norm(&sub(&p[1], &p[0]))
        } else {
            0.5 * norm(&cross(&sub(&p[1], &p[0]), &sub(&p[2], &p[0])))
        }
    }

    pub fn cell_diameter(&self, c: usize) -> f64 {
        let p = self.cell_points(c);
        let mut h: f64 = 0.0;
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                h = h.max(norm(&sub(&p[i], &p[j])));
            }
        }
        h
    }

    /// Largest cell diameter.
    pub fn h(&self) -> f64 {
        (0..self.num_cells())
            .map(|c| self.cell_diameter(c))
            .fold(0.0, f64::max)
    }

    pub fn cell_barycenter(&self, c: usize) -> Point {
        let p = self.cell_points(c);
        let mut b = [0.0; 3];
        for q in &p {
            for i in 0..3 {
                b[i] += q[i] / p.len() as f64;
            }
        }
        b
    }

    /// Cells containing each vertex.
    pub fn vertex_patches(&self) -> Vec<Vec<usize>> {
        let mut patches = vec![Vec::new(); self.num_vertices()];
        for c in 0..self.num_cells() {
            for &v in self.cell(c) {
                patches[v].push(c);
            }
        }
        patches
    }

    /// Number of connected components of the cell graph (cells linked
    /// through shared facets).
    pub fn num_components(&self) -> usize {
        let n = self.num_cells();
        let mut seen = vec![false; n];
        let mut count = 0;
        for start in 0..n {
            if seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            let mut queue = VecDeque::from([start]);
            while let Some(c) = queue.pop_front() {
                for &f in self.cell_facets(c) {
                    for &d in &self.facet_cells[f] {
                        if d != NONE && !seen[d] {
                            seen[d] = true;
                            queue.push_back(d);
                        }
                    }
                }
            }
        }
        count
    }

    /// Structured mesh of the unit square (`n x n` squares, each cut into
    /// two triangles along the diagonal through its lower-left corner) or of
    /// the unit cube (`n^3` cubes, each cut into six Kuhn tetrahedra).
    pub fn structured_unit(dim: usize, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidMesh("n must be at least 1".into()));
        }
        let h = 1.0 / n as f64;
        let m = n + 1;
        match dim {
            2 => {
                let id = |i: usize, j: usize| j * m + i;
                let mut vertices = Vec::with_capacity(m * m);
                for j in 0..m {
                    for i in 0..m {
                        vertices.push([i as f64 * h, j as f64 * h, 0.0]);
                    }
                }
                let mut cells = Vec::with_capacity(2 * n * n);
                for j in 0..n {
                    for i in 0..n {
                        let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                        cells.push(vec![a, b, c]);
                        cells.push(vec![a, c, d]);
                    }
                }
                Self::new(2, vertices, cells)
            }
            3 => {
                let id = |i: usize, j: usize, k: usize| (k * m + j) * m + i;
                let mut vertices = Vec::with_capacity(m * m * m);
                for k in 0..m {
                    for j in 0..m {
                        for i in 0..m {
                            vertices.push([i as f64 * h, j as f64 * h, k as f64 * h]);
                        }
                    }
                }
                const PERMS: [[usize; 3]; 6] = [
                    [0, 1, 2],
                    [0, 2, 1],
                    [1, 0, 2],
                    [1, 2, 0],
                    [2, 0, 1],
                    [2, 1, 0],
                ];
                let mut cells = Vec::with_capacity(6 * n * n * n);
                for k in 0..n {
                    for j in 0..n {
                        for i in 0..n {
                            for p in PERMS {
                                let mut x = [i, j, k];
                                let mut cell = vec![id(x[0], x[1], x[2])];
                                for &axis in &p {
                                    x[axis] += 1;
                                    cell.push(id(x[0], x[1], x[2]));
                                }
                                cells.push(cell);
                            }
                        }
                    }
                }
                Self::new(3, vertices, cells)
            }
            _ => Err(Error::InvalidMesh(format!("dimension {dim}"))),
        }
    }

    /// Uniform refinement: triangles into four by edge midpoints,
    /// tetrahedra into eight by Bey's red refinement.
    pub fn refine(&self) -> Self {
        let mut vertices = self.vertices.clone();
        let mut mids: HashMap<[usize; 2], usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<Point>| -> usize {
            let key = if a < b { [a, b] } else { [b, a] };
            *mids.entry(key).or_insert_with(|| {
                let (p, q) = (vertices[a], vertices[b]);
                vertices.push([
                    0.5 * (p[0] + q[0]),
                    0.5 * (p[1] + q[1]),
                    0.5 * (p[2] + q[2]),
                ]);
                vertices.len() - 1
            })
        };
        let mut order = Vec::new();
        for o in &self.refine_order {
            if self.dim == 2 {
                let [x0, x1, x2, _] = *o;
                let x01 = mid(x0, x1, &mut vertices);
                let x02 = mid(x0, x2, &mut vertices);
                let x12 = mid(x1, x2, &mut vertices);
                order.push([x0, x01, x02, NONE]);
                order.push([x01, x1, x12, NONE]);
                order.push([x02, x12, x2, NONE]);
                order.push([x01, x12, x02, NONE]);
            } else {
                let [x0, x1, x2, x3] = *o;
                let x01 = mid(x0, x1, &mut vertices);
                let x02 = mid(x0, x2, &mut vertices);
                let x03 = mid(x0, x3, &mut vertices);
                let x12 = mid(x1, x2, &mut vertices);
                let x13 = mid(x1, x3, &mut vertices);
                let x23 = mid(x2, x3, &mut vertices);
                order.push([x0, x01, x02, x03]);
                order.push([x01, x1, x12, x13]);
                order.push([x02, x12, x2, x23]);
                order.push([x03, x13, x23, x3]);
                order.push([x01, x02, x03, x13]);
                order.push([x01, x02, x12, x13]);
                order.push([x02, x03, x13, x23]);
                order.push([x02, x12, x13, x23]);
            }
        }
        Self::from_parts(self.dim, vertices, order).expect("refinement of a valid mesh is valid")
    }

    /// Reads the ASCII format: a header `dim nv nc`, then `nv` lines of
    /// coordinates, then `nc` lines of 0-based vertex indices.
    pub fn read_ascii(text: &str) -> Result<Self> {
        let mut tokens = text.split_whitespace();
        let mut next = |what: &str| {
            tokens
                .next()
                .ok_or_else(|| Error::Parse(format!("unexpected end of input reading {what}")))
        };
        let parse_usize = |s: &str| {
            s.parse::<usize>()
                .map_err(|e| Error::Parse(format!("{s}: {e}")))
        };
        let dim = parse_usize(next("dim")?)?;
        let nv = parse_usize(next("nv")?)?;
        let nc = parse_usize(next("nc")?)?;
        if dim != 2 && dim != 3 {
            return Err(Error::Parse(format!("dimension {dim} not supported")));
        }
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let mut p = [0.0; 3];
            for x in p.iter_mut().take(dim) {
                let s = next("coordinate")?;
                *x = s.parse().map_err(|e| Error::Parse(format!("{s}: {e}")))?;
            }
            vertices.push(p);
        }
        let mut cells = Vec::with_capacity(nc);
        for _ in 0..nc {
            let mut cell = Vec::with_capacity(dim + 1);
            for _ in 0..=dim {
                cell.push(parse_usize(next("cell")?)?);
            }
            cells.push(cell);
        }
        Self::new(dim, vertices, cells)
    }

    pub fn write_ascii(&self) -> String {
        let mut s = format!(
            "{} {} {}\n",
            self.dim,
            self.num_vertices(),
            self.num_cells()
        );
        for p in &self.vertices {
            let coords: Vec<String> = p[..self.dim].iter().map(|x| format!("{x:.17e}")).collect();
            s.push_str(&coords.join(" "));
            s.push('\n');
        }
        for c in 0..self.num_cells() {
            let ids: Vec<String> = self.cell(c).iter().map(|v| v.to_string()).collect();
            s.push_str(&ids.join(" "));
            s.push('\n');
        }
        s
    }
}

fn facet_key(dim: usize, cell: &[usize; 4], opposite: usize) -> [usize; 3] {
    let mut key = [NONE; 3];
    let mut j = 0;
    for (i, &v) in cell[..=dim].iter().enumerate() {
        if i != opposite {
            key[j] = v;
            j += 1;
        }
    }
    key[..dim].sort_unstable();
    key
}

/// Classification of a facet of the boundary-layer submesh.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FacetClass {
    /// Lies on the boundary of the domain.
    Boundary,
    /// Lies on the inner boundary of the layer.
    LayerBoundary,
    /// Interior to the layer.
    Interior,
}

/// The layer of cells touching the boundary in at least one vertex.
#[derive(Clone, Debug)]
pub struct BoundaryLayer {
    pub mesh: SimplicialMesh,
    pub vertex_map: Vec<usize>,
    pub cell_map: Vec<usize>,
    pub facet_map: Vec<usize>,
    /// `+1` if the submesh facet normal equals the parent normal, else `-1`.
    pub facet_sign: Vec<f64>,
    pub facet_class: Vec<FacetClass>,
    pub components: usize,
}

impl SimplicialMesh {
    pub fn boundary_layer(&self) -> Result<BoundaryLayer> {
        if !self.boundary_facet.iter().any(|&b| b) {
            return Err(Error::NoBoundary);
        }
        let cell_map: Vec<usize> = (0..self.num_cells())
            .filter(|&c| self.cell(c).iter().any(|&v| self.boundary_vertex[v]))
            .collect();
        let mut local = vec![NONE; self.num_vertices()];
        let mut vertex_map = Vec::new();
        for &c in &cell_map {
            for &v in self.cell(c) {
                if local[v] == NONE {
                    local[v] = 0;
                }
            }
        }
        for v in 0..self.num_vertices() {
            if local[v] != NONE {
                local[v] = vertex_map.len();
                vertex_map.push(v);
            }
        }
        let vertices = vertex_map.iter().map(|&v| self.vertices[v]).collect();
        let order = cell_map
            .iter()
            .map(|&c| {
                let mut o = [NONE; 4];
                for (i, &v) in self.cell(c).iter().enumerate() {
                    o[i] = local[v];
                }
                o
            })
            .collect();
        let mesh = Self::from_parts(self.dim, vertices, order)?;
        let mut facet_map = Vec::with_capacity(mesh.num_facets());
        let mut facet_sign = Vec::with_capacity(mesh.num_facets());
        let mut facet_class = Vec::with_capacity(mesh.num_facets());
        for f in 0..mesh.num_facets() {
            let parent_vertices: Vec<usize> =
                mesh.facet(f).iter().map(|&v| vertex_map[v]).collect();
            let pf = self
                .find_facet(&parent_vertices)
                .ok_or_else(|| Error::InvalidMesh("submesh facet without parent".into()))?;
            facet_map.push(pf);
            facet_sign.push(dot(mesh.facet_normal(f), self.facet_normal(pf)).signum());
            facet_class.push(if !mesh.is_boundary_facet(f) {
                FacetClass::Interior
            } else if self.is_boundary_facet(pf) {
                FacetClass::Boundary
            } else {
                FacetClass::LayerBoundary
            });
        }
        let components = mesh.num_components();
        Ok(BoundaryLayer {
            mesh,
            vertex_map,
            cell_map,
            facet_map,
            facet_sign,
            facet_class,
            components,
        })
    }
}

/// Affine map `x = x0 + J xhat` from the reference simplex onto a cell.
#[derive(Clone, Copy, Debug)]
pub struct CellGeometry {
    pub dim: usize,
    pub x0: Point,
    /// `jac[r][c] = d x_r / d xhat_c`; padded with the identity in 2D.
    pub jac: [[f64; 3]; 3],
    /// Inverse of `jac`.
    pub inv: [[f64; 3]; 3],
    pub det: f64,
}

impl CellGeometry {
    pub fn new(mesh: &SimplicialMesh, c: usize) -> Self {
        let p = mesh.cell_points(c);
        let dim = mesh.dim();
        let mut jac = [[0.0; 3]; 3];
        for col in 0..3 {
            if col < dim {
                let e = sub(&p[col + 1], &p[0]);
                for r in 0..3 {
                    jac[r][col] = e[r];
                }
            } else {
                jac[col][col] = 1.0;
            }
        }
        let (det, inv) = invert3(&jac);
        Self {
            dim,
            x0: p[0],
            jac,
            inv,
            det,
        }
    }

    pub fn map(&self, xhat: &Point) -> Point {
        let mut x = self.x0;
        for r in 0..self.dim {
            for c in 0..self.dim {
                x[r] += self.jac[r][c] * xhat[c];
            }
        }
        x
    }

    pub fn map_inverse(&self, x: &Point) -> Point {
        let d = sub(x, &self.x0);
        let mut xhat = [0.0; 3];
        for r in 0..self.dim {
            for c in 0..self.dim {
                xhat[r] += self.inv[r][c] * d[c];
            }
        }
        xhat
    }

    /// Physical gradient from a reference gradient: `J^{-T} ghat`.
    pub fn grad(&self, ghat: &Point) -> Point {
        let mut g = [0.0; 3];
        for r in 0..self.dim {
            for c in 0..self.dim {
                g[r] += self.inv[c][r] * ghat[c];
            }
        }
        g
    }

    /// Contravariant Piola map of a reference vector: `J v / det J`.
    pub fn piola(&self, vhat: &Point) -> Point {
        let mut v = [0.0; 3];
        for r in 0..self.dim {
            for c in 0..self.dim {
                v[r] += self.jac[r][c] * vhat[c] / self.det;
            }
        }
        v
    }
}

fn invert3(a: &[[f64; 3]; 3]) -> (f64, [[f64; 3]; 3]) {
    let det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    let mut inv = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
            let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
            inv[i][j] = (a[r0][c0] * a[r1][c1] - a[r0][c1] * a[r1][c0]) / det;
        }
    }
    (det, inv)
}
