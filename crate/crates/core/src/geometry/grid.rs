//! Structured triangulations of rectangles, used by tests, benchmarks and the mesh generator.

use super::mesh::{build_mesh, EdgeSelector, Mesh, Point2};
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Diagonals {
    /// Every cell split along its lower-left to upper-right diagonal.
    Forward,
    /// Diagonal direction flipped per quadrant so the mesh is mirror-symmetric about both
    /// center lines of the rectangle.
    Mirrored,
}

/// An `nx × ny` cell grid on `[x0, x1] × [y0, y1]`, each cell split into two triangles.
///
/// `keep_cell(i, j)` may drop cells to carve notches; vertices left without triangles are
/// removed and the rest renumbered in row-major order.
#[allow(clippy::too_many_arguments)]
pub fn structured_rectangle(
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
    nx: usize,
    ny: usize,
    diagonals: Diagonals,
    dirichlet: &[EdgeSelector],
    keep_cell: Option<&dyn Fn(usize, usize) -> bool>,
) -> Result<Mesh> {
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            if let Some(keep) = keep_cell {
                if !keep(i, j) {
                    continue;
                }
            }
            let (v00, v10, v11, v01) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            let forward = match diagonals {
                Diagonals::Forward => true,
                Diagonals::Mirrored => (2 * i + 1 < nx) == (2 * j + 1 < ny),
            };
            if forward {
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            } else {
                triangles.push([v00, v10, v01]);
                triangles.push([v10, v11, v01]);
            }
        }
    }
    let mut used = vec![false; (nx + 1) * (ny + 1)];
    for t in &triangles {
        for &v in t {
            used[v] = true;
        }
    }
    let mut renumber = vec![usize::MAX; used.len()];
    let mut vertices = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            if used[id(i, j)] {
                renumber[id(i, j)] = vertices.len();
                let x = x0 + (x1 - x0) * i as f64 / nx as f64;
                let y = y0 + (y1 - y0) * j as f64 / ny as f64;
                vertices.push(Point2::new(x, y));
            }
        }
    }
    for t in &mut triangles {
        for v in t.iter_mut() {
            *v = renumber[*v];
        }
    }
    build_mesh(vertices, triangles, dirichlet)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Counts distinct undirected edges by walking triangles; independent of `build_mesh`.
    fn count_edges_by_enumeration(n: usize) -> usize {
        let mut set = std::collections::BTreeSet::new();
        for j in 0..n {
            for i in 0..n {
                let c = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
                for k in 0..4 {
                    let (a, b) = (c[k], c[(k + 1) % 4]);
                    set.insert((a.min(b), a.max(b)));
                }
                set.insert(((i, j), (i + 1, j + 1)));
            }
        }
        set.len()
    }

    #[test]
    fn grid_edge_count() {
        for n in 1..=6 {
            let m = structured_rectangle(0., 0., 1., 1., n, n, Diagonals::Forward, &[EdgeSelector::All], None)
                .unwrap();
            let oracle = count_edges_by_enumeration(n);
            assert_eq!(m.num_edges(), oracle);
            assert_eq!(m.num_edges(), 3 * n * n + 2 * n);
        }
    }

    #[test]
    fn mirrored_grid_is_symmetric() {
        let m = structured_rectangle(-1., -1., 1., 1., 4, 4, Diagonals::Mirrored, &[EdgeSelector::All], None)
            .unwrap();
        for e in m.edges() {
            let (a, b) = (m.vertices()[e.v[0]], m.vertices()[e.v[1]]);
            for (sx, sy) in [(-1.0, 1.0), (1.0, -1.0)] {
                let ra = m.nearest_vertex(Point2::new(sx * a.x, sy * a.y));
                let rb = m.nearest_vertex(Point2::new(sx * b.x, sy * b.y));
                assert!(m.find_edge(ra, rb).is_some());
            }
        }
    }

    #[test]
    fn notch_removes_cells_and_vertices() {
        let keep = |i: usize, j: usize| !(i == 1 && j == 1);
        let m = structured_rectangle(0., 0., 3., 2., 3, 2, Diagonals::Forward, &[EdgeSelector::All], Some(&keep))
            .unwrap();
        assert_eq!(m.triangles().len(), 10);
        assert!((m.area() - 5.0).abs() < 1e-12);
    }
}
