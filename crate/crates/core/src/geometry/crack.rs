use std::cmp::Ordering;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use petgraph::unionfind::UnionFind;

use super::mesh::{point_segment_distance, Mesh, Point2};
use crate::error::{Error, Result};

/// A crack: a set of mesh edges, stored as a bitset over the mesh's edge indices.
#[derive(Clone)]
pub struct CrackSet {
    mesh: Arc<Mesh>,
    bits: FixedBitSet,
}

impl CrackSet {
    pub fn empty(mesh: &Arc<Mesh>) -> Self {
        CrackSet { mesh: Arc::clone(mesh), bits: FixedBitSet::with_capacity(mesh.num_edges()) }
    }

    pub fn from_edges<I: IntoIterator<Item = usize>>(mesh: &Arc<Mesh>, edges: I) -> Result<Self> {
        let mut k = Self::empty(mesh);
        for e in edges {
            if e >= mesh.num_edges() {
                return Err(Error::EdgeOutOfRange { index: e, edges: mesh.num_edges() });
            }
            k.bits.insert(e);
        }
        Ok(k)
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn same_mesh(&self, other: &CrackSet) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh)
    }

    pub fn check_same_mesh(&self, other: &CrackSet) -> Result<()> {
        if self.same_mesh(other) {
            Ok(())
        } else {
            Err(Error::MeshMismatch)
        }
    }

    fn assert_same_mesh(&self, other: &CrackSet) {
        assert!(self.same_mesh(other), "crack sets live on different meshes");
    }

    pub fn contains(&self, e: usize) -> bool {
        self.bits.contains(e)
    }

    pub fn insert(&mut self, e: usize) {
        assert!(e < self.mesh.num_edges(), "edge {e} out of range");
        self.bits.insert(e);
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_clear()
    }

    /// Member edges in increasing index order.
    pub fn edges(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.ones()
    }

    pub fn edge_vec(&self) -> Vec<usize> {
        self.bits.ones().collect()
    }

    pub fn bits(&self) -> &FixedBitSet {
        &self.bits
    }

    pub fn is_subset(&self, other: &CrackSet) -> bool {
        self.assert_same_mesh(other);
        self.bits.is_subset(&other.bits)
    }

    pub fn union(&self, other: &CrackSet) -> CrackSet {
        self.assert_same_mesh(other);
        let mut bits = self.bits.clone();
        bits.union_with(&other.bits);
        CrackSet { mesh: Arc::clone(&self.mesh), bits }
    }

    pub fn with_edges<I: IntoIterator<Item = usize>>(&self, edges: I) -> CrackSet {
        let mut k = self.clone();
        for e in edges {
            k.insert(e);
        }
        k
    }

    /// `self \ other`
    pub fn difference(&self, other: &CrackSet) -> CrackSet {
        self.assert_same_mesh(other);
        let mut bits = self.bits.clone();
        bits.difference_with(&other.bits);
        CrackSet { mesh: Arc::clone(&self.mesh), bits }
    }

    pub fn symmetric_difference(&self, other: &CrackSet) -> CrackSet {
        self.assert_same_mesh(other);
        let mut bits = self.bits.clone();
        bits.symmetric_difference_with(&other.bits);
        CrackSet { mesh: Arc::clone(&self.mesh), bits }
    }

    /// Vertex incidence mask of the member edges.
    pub fn vertex_mask(&self) -> FixedBitSet {
        let mut mask = FixedBitSet::with_capacity(self.mesh.vertices().len());
        for e in self.edges() {
            let [a, b] = self.mesh.edge(e).v;
            mask.insert(a);
            mask.insert(b);
        }
        mask
    }

    /// Deterministic tie-break order: cardinality first, then the sorted edge lists
    /// compared lexicographically.
    pub fn tie_cmp(&self, other: &CrackSet) -> Ordering {
        self.len().cmp(&other.len()).then_with(|| self.bits.ones().cmp(other.bits.ones()))
    }
}

impl PartialEq for CrackSet {
    fn eq(&self, other: &Self) -> bool {
        self.same_mesh(other) && self.bits == other.bits
    }
}

impl Eq for CrackSet {}

impl Hash for CrackSet {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.bits.hash(state);
    }
}

impl std::fmt::Debug for CrackSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_set().entries(self.bits.ones()).finish()
    }
}

/// Total length of the crack. Distinct mesh edges overlap at most in endpoints.
pub fn h1_measure(k: &CrackSet) -> f64 {
    k.edges().map(|e| k.mesh.edge(e).length).sum()
}

/// Length of `K \ H`.
pub fn h1_diff(h: &CrackSet, k: &CrackSet) -> f64 {
    h.assert_same_mesh(k);
    k.edges().filter(|&e| !h.contains(e)).map(|e| k.mesh.edge(e).length).sum()
}

/// Maximal vertex-connected groups of edges, ordered by their smallest edge index.
pub fn connected_components(k: &CrackSet) -> Vec<CrackSet> {
    let mesh = &k.mesh;
    let members = k.edge_vec();
    if members.is_empty() {
        return Vec::new();
    }
    let mut uf = UnionFind::<usize>::new(mesh.vertices().len());
    for &e in &members {
        let [a, b] = mesh.edge(e).v;
        uf.union(a, b);
    }
    // Members are visited in increasing order, so groups appear ordered by smallest edge.
    let mut root_slot: Vec<(usize, usize)> = Vec::new();
    let mut groups: Vec<CrackSet> = Vec::new();
    for &e in &members {
        let root = uf.find(mesh.edge(e).v[0]);
        let slot = match root_slot.iter().find(|(r, _)| *r == root) {
            Some(&(_, s)) => s,
            None => {
                root_slot.push((root, groups.len()));
                groups.push(CrackSet::empty(mesh));
                groups.len() - 1
            }
        };
        groups[slot].bits.insert(e);
    }
    groups
}

/// Distance from a point to the crack; the domain diameter when the crack is empty.
pub fn dist_point_to_crack(x: &Point2, k: &CrackSet) -> f64 {
    let mesh = &k.mesh;
    let mut best = f64::INFINITY;
    for e in k.edges() {
        let (a, b) = mesh.edge_endpoints(e);
        best = best.min(point_segment_distance(x, &a, &b));
    }
    if best.is_finite() {
        best
    } else {
        mesh.diameter()
    }
}

/// Default Hausdorff sampling resolution: a sixteenth of the shortest edge.
pub fn default_hausdorff_resolution(mesh: &Mesh) -> f64 {
    mesh.min_edge_length() / 16.0
}

/// A sampled Hausdorff distance together with the resolution that bounds its error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HausdorffValue {
    pub value: f64,
    pub resolution: f64,
}

fn directed_sup(from: &CrackSet, to: &CrackSet, resolution: f64) -> f64 {
    let mesh = &from.mesh;
    let mut sup: f64 = 0.0;
    for e in from.edges() {
        if to.contains(e) {
            continue;
        }
        let (a, b) = mesh.edge_endpoints(e);
        let n = (a.dist(&b) / resolution).ceil().max(1.0) as usize;
        for i in 0..=n {
            let p = a.lerp(&b, i as f64 / n as f64);
            sup = sup.max(dist_point_to_crack(&p, to));
        }
    }
    sup
}

/// Hausdorff distance between two cracks, sampling every segment at spacing `resolution`
/// plus its endpoints. With `sup ∅ = 0` and `dist(x, ∅) = diam`, two empty sets are at
/// distance 0 and an empty set is at distance `diam` from any non-empty one.
pub fn hausdorff(h: &CrackSet, k: &CrackSet, resolution: f64) -> HausdorffValue {
    h.assert_same_mesh(k);
    assert!(resolution > 0.0, "Hausdorff resolution must be positive");
    let value = directed_sup(h, k, resolution).max(directed_sup(k, h, resolution));
    HausdorffValue { value, resolution }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::grid::{structured_rectangle, Diagonals};
    use crate::geometry::EdgeSelector;

    fn grid(n: usize) -> Arc<Mesh> {
        Arc::new(structured_rectangle(0., 0., 1., 1., n, n, Diagonals::Forward, &[EdgeSelector::All], None).unwrap())
    }

    fn seg(mesh: &Arc<Mesh>, p: (f64, f64), q: (f64, f64)) -> CrackSet {
        CrackSet::from_edges(mesh, mesh.edges_on_segment(Point2::new(p.0, p.1), Point2::new(q.0, q.1), 1e-9))
            .unwrap()
    }

    #[test]
    fn measure_basics() {
        let m = grid(2);
        assert_eq!(h1_measure(&CrackSet::empty(&m)), 0.0);
        let one = seg(&m, (0., 0.), (0.5, 0.));
        assert_eq!(one.len(), 1);
        assert_eq!(h1_measure(&one), 0.5);
        assert_eq!(h1_diff(&one, &one), 0.0);
        assert_eq!(h1_diff(&CrackSet::empty(&m), &one), 0.5);
    }

    #[test]
    fn three_edges_of_cell() {
        let m = grid(4);
        let k = seg(&m, (0., 0.), (0.25, 0.)).union(&seg(&m, (0., 0.), (0., 0.25))).union(&seg(
            &m,
            (0., 0.),
            (0.25, 0.25),
        ));
        assert_eq!(k.len(), 3);
        let expected = 0.25 + 0.25 + (2.0f64).sqrt() * 0.25;
        assert!((h1_measure(&k) - expected).abs() < 1e-15);
    }

    #[test]
    fn components_of_path_and_far_edge() {
        let m = grid(4);
        assert!(connected_components(&CrackSet::empty(&m)).is_empty());
        let path = seg(&m, (0., 0.), (0.5, 0.));
        assert_eq!(connected_components(&path).len(), 1);
        let far = seg(&m, (1., 0.75), (1., 1.));
        let both = path.union(&far);
        let comps = connected_components(&both);
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[0], path);
        assert_eq!(comps[1], far);
    }

    #[test]
    fn point_distance_conventions() {
        let m = grid(2);
        let empty = CrackSet::empty(&m);
        assert_eq!(dist_point_to_crack(&Point2::new(0.3, 0.3), &empty), m.diameter());
        let bottom = seg(&m, (0., 0.), (1., 0.));
        assert_eq!(dist_point_to_crack(&Point2::new(0., 1.), &bottom), 1.0);
        assert_eq!(dist_point_to_crack(&Point2::new(0.25, 0.), &bottom), 0.0);
    }

    #[test]
    fn hausdorff_conventions() {
        let m = grid(10);
        let empty = CrackSet::empty(&m);
        let eps = default_hausdorff_resolution(&m);
        assert_eq!(hausdorff(&empty, &empty, eps).value, 0.0);
        let a = seg(&m, (0., 0.2), (1., 0.2));
        assert_eq!(hausdorff(&a, &a, eps).value, 0.0);
        assert_eq!(hausdorff(&empty, &a, eps).value, m.diameter());
        let b = seg(&m, (0., 0.5), (1., 0.5));
        let h = hausdorff(&a, &b, eps);
        assert!((h.value - 0.3).abs() <= h.resolution);
    }

    #[test]
    #[should_panic(expected = "different meshes")]
    fn cross_mesh_rejected() {
        let (a, b) = (grid(2), grid(2));
        let _ = h1_diff(&CrackSet::empty(&a), &CrackSet::empty(&b));
    }
}
