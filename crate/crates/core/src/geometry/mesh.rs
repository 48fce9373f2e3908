use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn dist(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn lerp(&self, other: &Point2, s: f64) -> Point2 {
        Point2::new(self.x + s * (other.x - self.x), self.y + s * (other.y - self.y))
    }
}

/// Exact Euclidean distance from `p` to the closed segment `[a, b]`.
pub fn point_segment_distance(p: &Point2, a: &Point2, b: &Point2) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return p.dist(a);
    }
    let s = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
    p.dist(&a.lerp(b, s))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeTag {
    Interior,
    DirichletBoundary,
    NeumannBoundary,
}

impl EdgeTag {
    pub fn is_boundary(self) -> bool {
        self != EdgeTag::Interior
    }
}

#[derive(Clone, Debug)]
pub struct Edge {
    /// Endpoints, sorted so that `v[0] < v[1]`.
    pub v: [usize; 2],
    pub length: f64,
    pub tag: EdgeTag,
    /// One or two incident triangles.
    pub triangles: Vec<usize>,
}

/// Selects boundary edges that carry the Dirichlet condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum EdgeSelector {
    /// Boundary edges with both endpoints inside the closed box.
    Box { xmin: f64, ymin: f64, xmax: f64, ymax: f64 },
    /// The boundary edge joining two vertices.
    Pair(usize, usize),
    /// Every boundary edge.
    All,
}

impl EdgeSelector {
    fn selects(&self, a: usize, b: usize, pa: &Point2, pb: &Point2) -> bool {
        const SLACK: f64 = 1e-12;
        match *self {
            EdgeSelector::Box { xmin, ymin, xmax, ymax } => [pa, pb].iter().all(|p| {
                p.x >= xmin - SLACK && p.x <= xmax + SLACK && p.y >= ymin - SLACK && p.y <= ymax + SLACK
            }),
            EdgeSelector::Pair(i, j) => (i == a && j == b) || (i == b && j == a),
            EdgeSelector::All => true,
        }
    }
}

/// A conforming triangulation of a polygonal domain with tagged boundary edges.
#[derive(Clone, Debug)]
pub struct Mesh {
    vertices: Vec<Point2>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<Edge>,
    triangle_edges: Vec<[usize; 3]>,
    vertex_edges: Vec<Vec<usize>>,
    vertex_triangles: Vec<Vec<usize>>,
    diameter: f64,
    area: f64,
}

/// Builds a mesh from vertices and positively oriented triangles.
///
/// Edges are enumerated as sorted vertex pairs in lexicographic order, so edge indices are
/// reproducible. Boundary edges picked by any selector are Dirichlet, the rest Neumann.
pub fn build_mesh(
    vertices: Vec<Point2>,
    triangles: Vec<[usize; 3]>,
    dirichlet: &[EdgeSelector],
) -> Result<Mesh> {
    if triangles.is_empty() {
        return Err(Error::InvalidMesh("no triangles".into()));
    }
    if let Some(p) = vertices.iter().find(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return Err(Error::InvalidMesh(format!("non-finite vertex ({}, {})", p.x, p.y)));
    }
    let nv = vertices.len();
    let mut area = 0.0;
    for (index, tri) in triangles.iter().enumerate() {
        if tri.iter().any(|&v| v >= nv) {
            return Err(Error::InvalidMesh(format!("triangle {index} references a missing vertex")));
        }
        let a = signed_area(&vertices[tri[0]], &vertices[tri[1]], &vertices[tri[2]]);
        if !(a > 0.0) {
            return Err(Error::DegenerateTriangle { index, area: a });
        }
        area += a;
    }

    // (sorted pair) -> list of (triangle, oriented pair)
    let mut pairs: BTreeMap<(usize, usize), Vec<(usize, (usize, usize))>> = BTreeMap::new();
    for (t, tri) in triangles.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            pairs.entry((a.min(b), a.max(b))).or_default().push((t, (a, b)));
        }
    }

    let mut edges = Vec::with_capacity(pairs.len());
    let mut triangle_edges = vec![[usize::MAX; 3]; triangles.len()];
    let mut vertex_edges = vec![Vec::new(); nv];
    for (&(a, b), owners) in &pairs {
        if owners.len() > 2 {
            return Err(Error::NonConforming(format!("edge ({a}, {b}) shared by {} triangles", owners.len())));
        }
        if owners.len() == 2 && owners[0].1 == owners[1].1 {
            return Err(Error::NonConforming(format!("inconsistent orientation across edge ({a}, {b})")));
        }
        let index = edges.len();
        for &(t, _) in owners {
            let slot = triangle_edges[t].iter().position(|&e| e == usize::MAX).expect("three edges");
            triangle_edges[t][slot] = index;
        }
        vertex_edges[a].push(index);
        vertex_edges[b].push(index);
        let boundary = owners.len() == 1;
        let tag = if !boundary {
            EdgeTag::Interior
        } else if dirichlet.iter().any(|s| s.selects(a, b, &vertices[a], &vertices[b])) {
            EdgeTag::DirichletBoundary
        } else {
            EdgeTag::NeumannBoundary
        };
        edges.push(Edge {
            v: [a, b],
            length: vertices[a].dist(&vertices[b]),
            tag,
            triangles: owners.iter().map(|o| o.0).collect(),
        });
    }

    // A hanging node shows up as a vertex lying inside a (spurious) boundary edge.
    for e in edges.iter().filter(|e| e.tag.is_boundary()) {
        let (pa, pb) = (&vertices[e.v[0]], &vertices[e.v[1]]);
        for (w, p) in vertices.iter().enumerate() {
            if w == e.v[0] || w == e.v[1] {
                continue;
            }
            if point_segment_distance(p, pa, pb) <= 1e-12 * e.length {
                return Err(Error::NonConforming(format!(
                    "vertex {w} lies on boundary edge ({}, {})",
                    e.v[0], e.v[1]
                )));
            }
        }
    }

    if !edges.iter().any(|e| e.tag == EdgeTag::DirichletBoundary) {
        return Err(Error::EmptyDirichlet);
    }

    let mut vertex_triangles = vec![Vec::new(); nv];
    for (t, tri) in triangles.iter().enumerate() {
        for &v in tri {
            vertex_triangles[v].push(t);
        }
    }

    let mut diameter: f64 = 0.0;
    for i in 0..nv {
        for j in (i + 1)..nv {
            diameter = diameter.max(vertices[i].dist(&vertices[j]));
        }
    }

    Ok(Mesh { vertices, triangles, edges, triangle_edges, vertex_edges, vertex_triangles, diameter, area })
}

pub(crate) fn signed_area(a: &Point2, b: &Point2, c: &Point2) -> f64 {
    0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y))
}

impl Mesh {
    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn triangle_edges(&self, t: usize) -> [usize; 3] {
        self.triangle_edges[t]
    }

    pub fn vertex_edges(&self, v: usize) -> &[usize] {
        &self.vertex_edges[v]
    }

    pub fn vertex_triangles(&self, v: usize) -> &[usize] {
        &self.vertex_triangles[v]
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        signed_area(&self.vertices[a], &self.vertices[b], &self.vertices[c])
    }

    pub fn triangle_centroid(&self, t: usize) -> Point2 {
        let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
        Point2::new((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0)
    }

    pub fn min_edge_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).fold(f64::INFINITY, f64::min)
    }

    pub fn max_edge_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).fold(0.0, f64::max)
    }

    pub fn edge_endpoints(&self, e: usize) -> (Point2, Point2) {
        let [a, b] = self.edges[e].v;
        (self.vertices[a], self.vertices[b])
    }

    /// Index of the edge joining `a` and `b`, if any.
    pub fn find_edge(&self, a: usize, b: usize) -> Option<usize> {
        self.vertex_edges[a].iter().copied().find(|&e| {
            let v = self.edges[e].v;
            (v[0] == a && v[1] == b) || (v[0] == b && v[1] == a)
        })
    }

    /// Edges lying on the closed segment `[p, q]` (both endpoints within `tol` of it).
    pub fn edges_on_segment(&self, p: Point2, q: Point2, tol: f64) -> Vec<usize> {
        (0..self.edges.len())
            .filter(|&e| {
                let (a, b) = self.edge_endpoints(e);
                point_segment_distance(&a, &p, &q) <= tol && point_segment_distance(&b, &p, &q) <= tol
            })
            .collect()
    }

    /// Edges on `[p, q]` ordered by distance of their midpoints from `p`.
    pub fn path_along_segment(&self, p: Point2, q: Point2, tol: f64) -> Vec<usize> {
        let mut edges = self.edges_on_segment(p, q, tol);
        let key = |e: usize| {
            let (a, b) = self.edge_endpoints(e);
            a.lerp(&b, 0.5).dist(&p)
        };
        edges.sort_by(|&a, &b| key(a).total_cmp(&key(b)));
        edges
    }

    /// Nearest vertex to `p`.
    pub fn nearest_vertex(&self, p: Point2) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (i, v) in self.vertices.iter().enumerate() {
            let d = v.dist(&p);
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }
}
