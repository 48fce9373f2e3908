use std::sync::Arc;

use petgraph::unionfind::UnionFind;

use crate::geometry::{CrackSet, EdgeTag, Mesh};

/// Degrees of freedom of P1 functions on the mesh cut along a crack set.
///
/// Each vertex carries one DOF per fan of its star, fans being maximal groups of triangles
/// connected through non-crack edges incident to the vertex. DOFs are numbered by vertex,
/// then by the smallest triangle index of the fan.
#[derive(Clone, Debug)]
pub struct CrackedSpace {
    crack: CrackSet,
    dof_vertex: Vec<usize>,
    tri_dofs: Vec<[usize; 3]>,
    dirichlet: Vec<bool>,
    component: Vec<usize>,
    num_components: usize,
    pinned: Vec<usize>,
}

pub fn split_along_crack(k: &CrackSet) -> CrackedSpace {
    let mesh = k.mesh().as_ref();
    let nt = mesh.triangles().len();
    let mut tri_dofs = vec![[usize::MAX; 3]; nt];
    let mut dof_vertex = Vec::new();
    let mut dirichlet = Vec::new();

    for v in 0..mesh.vertices().len() {
        let star = mesh.vertex_triangles(v);
        let local = |t: usize| star.iter().position(|&s| s == t).unwrap();
        let mut uf = UnionFind::<usize>::new(star.len());
        for &e in mesh.vertex_edges(v) {
            let edge = mesh.edge(e);
            if edge.triangles.len() == 2 && !k.contains(e) {
                uf.union(local(edge.triangles[0]), local(edge.triangles[1]));
            }
        }
        let first = dof_vertex.len();
        let mut root_dof: Vec<(usize, usize)> = Vec::new();
        for (i, &t) in star.iter().enumerate() {
            let r = uf.find(i);
            let dof = match root_dof.iter().find(|(root, _)| *root == r) {
                Some(&(_, d)) => d,
                None => {
                    let d = first + root_dof.len();
                    root_dof.push((r, d));
                    dof_vertex.push(v);
                    dirichlet.push(false);
                    d
                }
            };
            let slot = mesh.triangles()[t].iter().position(|&w| w == v).unwrap();
            tri_dofs[t][slot] = dof;
        }
        // Dirichlet data holds on uncracked Dirichlet edges only.
        for &e in mesh.vertex_edges(v) {
            let edge = mesh.edge(e);
            if edge.tag == EdgeTag::DirichletBoundary && !k.contains(e) {
                let t = edge.triangles[0];
                let slot = mesh.triangles()[t].iter().position(|&w| w == v).unwrap();
                dirichlet[tri_dofs[t][slot]] = true;
            }
        }
    }

    let ndof = dof_vertex.len();
    let mut uf = UnionFind::<usize>::new(ndof);
    for d in &tri_dofs {
        uf.union(d[0], d[1]);
        uf.union(d[0], d[2]);
    }
    let mut label = vec![usize::MAX; ndof];
    let mut component = vec![0; ndof];
    let mut num_components = 0;
    for d in 0..ndof {
        let r = uf.find(d);
        if label[r] == usize::MAX {
            label[r] = num_components;
            num_components += 1;
        }
        component[d] = label[r];
    }
    let mut anchored = vec![false; num_components];
    for d in 0..ndof {
        anchored[component[d]] |= dirichlet[d];
    }
    let mut pinned = Vec::new();
    for d in 0..ndof {
        if !anchored[component[d]] {
            anchored[component[d]] = true;
            pinned.push(d);
        }
    }

    CrackedSpace { crack: k.clone(), dof_vertex, tri_dofs, dirichlet, component, num_components, pinned }
}

impl CrackedSpace {
    pub fn mesh(&self) -> &Arc<Mesh> {
        self.crack.mesh()
    }

    pub fn crack(&self) -> &CrackSet {
        &self.crack
    }

    pub fn num_dofs(&self) -> usize {
        self.dof_vertex.len()
    }

    pub fn dof_vertex(&self, d: usize) -> usize {
        self.dof_vertex[d]
    }

    pub fn triangle_dofs(&self, t: usize) -> [usize; 3] {
        self.tri_dofs[t]
    }

    pub fn is_dirichlet(&self, d: usize) -> bool {
        self.dirichlet[d]
    }

    pub fn component(&self, d: usize) -> usize {
        self.component[d]
    }

    pub fn num_components(&self) -> usize {
        self.num_components
    }

    /// One DOF per component without Dirichlet data, fixed at 0.
    pub fn pinned(&self) -> &[usize] {
        &self.pinned
    }

    /// DOFs attached to vertex `v`.
    pub fn vertex_dofs(&self, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.mesh().vertex_triangles(v).iter().map(|&t| {
            let slot = self.mesh().triangles()[t].iter().position(|&w| w == v).unwrap();
            self.tri_dofs[t][slot]
        }).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Centroid of the fan of triangles carrying DOF `d`.
    pub fn fan_centroid(&self, d: usize) -> crate::geometry::Point2 {
        let mesh = self.mesh();
        let v = self.dof_vertex[d];
        let (mut x, mut y, mut n) = (0.0, 0.0, 0.0);
        for &t in mesh.vertex_triangles(v) {
            if self.tri_dofs[t].contains(&d) {
                let c = mesh.triangle_centroid(t);
                x += c.x;
                y += c.y;
                n += 1.0;
            }
        }
        crate::geometry::Point2::new(x / n, y / n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::grid::{structured_rectangle, Diagonals};
    use crate::geometry::{EdgeSelector, Point2};
    use rand::{Rng, SeedableRng};

    fn grid(n: usize) -> Arc<Mesh> {
        Arc::new(
            structured_rectangle(0., 0., n as f64, n as f64, n, n, Diagonals::Forward, &[EdgeSelector::All], None)
                .unwrap(),
        )
    }

    #[test]
    fn empty_crack_is_identity() {
        let m = grid(3);
        let s = split_along_crack(&CrackSet::empty(&m));
        assert_eq!(s.num_dofs(), m.vertices().len());
        for d in 0..s.num_dofs() {
            assert_eq!(s.dof_vertex(d), d);
        }
        for t in 0..m.triangles().len() {
            assert_eq!(s.triangle_dofs(t), m.triangles()[t]);
        }
        assert_eq!(s.num_components(), 1);
        assert!(s.pinned().is_empty());
    }

    #[test]
    fn two_edge_interior_crack_adds_one_dof() {
        let m = grid(4);
        let edges = m.edges_on_segment(Point2::new(1., 2.), Point2::new(3., 2.), 1e-9);
        assert_eq!(edges.len(), 2);
        let s = split_along_crack(&CrackSet::from_edges(&m, edges).unwrap());
        assert_eq!(s.num_dofs(), m.vertices().len() + 1);
        assert_eq!(s.vertex_dofs(m.nearest_vertex(Point2::new(2., 2.))).len(), 2);
        assert_eq!(s.vertex_dofs(m.nearest_vertex(Point2::new(1., 2.))).len(), 1);
        assert_eq!(s.vertex_dofs(m.nearest_vertex(Point2::new(3., 2.))).len(), 1);
    }

    /// Fan count by walking each star as a cyclic/linear sequence of triangles around the
    /// vertex ordered by angle, counting cuts at crack edges and boundary gaps.
    fn fan_count_oracle(m: &Mesh, k: &CrackSet) -> usize {
        let mut total = 0;
        for v in 0..m.vertices().len() {
            let p = m.vertices()[v];
            let mut star: Vec<(f64, usize)> = m
                .vertex_triangles(v)
                .iter()
                .map(|&t| {
                    let c = m.triangle_centroid(t);
                    ((c.y - p.y).atan2(c.x - p.x), t)
                })
                .collect();
            star.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            let n = star.len();
            let mut breaks = 0;
            for i in 0..n {
                let (a, b) = (star[i].1, star[(i + 1) % n].1);
                let shared = m.triangle_edges(a).into_iter().find(|e| {
                    m.triangle_edges(b).contains(e) && m.edge(*e).v.contains(&v)
                });
                match shared {
                    Some(e) if !k.contains(e) => {}
                    _ => breaks += 1,
                }
            }
            total += breaks.max(1);
        }
        total
    }

    #[test]
    fn random_cracks_match_fan_oracle() {
        let m = grid(4);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let edges: Vec<usize> = (0..m.num_edges()).filter(|_| rng.gen_bool(0.25)).collect();
            let k = CrackSet::from_edges(&m, edges).unwrap();
            let s = split_along_crack(&k);
            // Boundary vertices always have one gap in their fan cycle.
            assert_eq!(s.num_dofs(), fan_count_oracle(&m, &k));
            for t in 0..m.triangles().len() {
                for (slot, &d) in s.triangle_dofs(t).iter().enumerate() {
                    assert_eq!(s.dof_vertex(d), m.triangles()[t][slot]);
                }
            }
        }
    }
}
