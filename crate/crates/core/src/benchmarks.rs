//! Built-in geometries and the shipped benchmark configurations.

use crate::error::{Error, Result};
use crate::geometry::grid::{structured_rectangle, Diagonals};
use crate::geometry::{build_mesh, EdgeSelector, Mesh, Point2};

/// Edge-cracked strip, run with a tapered shear load so that growth is stable.
pub const GRIFFITH_STRIP: &str = include_str!("../benchmarks/griffith_strip.toml");
/// Bar with a nearly completed cut near one end and a thin neck near the other.
pub const TWO_WELL: &str = include_str!("../benchmarks/two_well.toml");
/// Two-well geometry with a 12-edge candidate pool.
pub const TWO_WELL_WIDE: &str = include_str!("../benchmarks/two_well_wide.toml");

/// `(λ, μ)` pairs of the shipped VE-vs-energetic sweep.
pub const TWO_WELL_SWEEP: [(f64, f64); 3] = [(0.1, 0.1), (0.05, 0.2), (0.2, 0.05)];

/// `[0,2] × [−½,½]` on a 64 × 32 grid, mirrored diagonals, Dirichlet on top and bottom.
pub fn griffith_strip_mesh() -> Result<Mesh> {
    structured_rectangle(
        0.,
        -0.5,
        2.,
        0.5,
        64,
        32,
        Diagonals::Mirrored,
        &[
            EdgeSelector::Box { xmin: 0., ymin: -0.5, xmax: 2., ymax: -0.5 },
            EdgeSelector::Box { xmin: 0., ymin: 0.5, xmax: 2., ymax: 0.5 },
        ],
        None,
    )
}

/// `[0,3] × [0,1]` with `h = ¼`, the cells of `[2.25, 2.75] × [½, 1]` removed, Dirichlet on
/// both ends.
pub fn two_well_mesh() -> Result<Mesh> {
    let keep = |i: usize, j: usize| !((i == 9 || i == 10) && j >= 2);
    structured_rectangle(
        0.,
        0.,
        3.,
        1.,
        12,
        4,
        Diagonals::Forward,
        &[
            EdgeSelector::Box { xmin: 0., ymin: 0., xmax: 0., ymax: 1. },
            EdgeSelector::Box { xmin: 3., ymin: 0., xmax: 3., ymax: 1. },
        ],
        Some(&keep),
    )
}

/// Regular hexagon split into six triangles around its center: 12 edges.
pub fn hexagon_fan_mesh() -> Result<Mesh> {
    let mut vertices = vec![Point2::new(0., 0.)];
    for k in 0..6 {
        let a = std::f64::consts::PI / 3.0 * k as f64;
        vertices.push(Point2::new(a.cos(), a.sin()));
    }
    let triangles = (0..6).map(|k| [0, 1 + k, 1 + (k + 1) % 6]).collect();
    build_mesh(vertices, triangles, &[EdgeSelector::All])
}

/// Unit square on an `n × n` grid with Dirichlet data everywhere.
pub fn unit_square_mesh(n: usize) -> Result<Mesh> {
    structured_rectangle(0., 0., 1., 1., n, n, Diagonals::Forward, &[EdgeSelector::All], None)
}

/// Resolves `builtin:<name>` mesh references.
pub fn builtin_mesh(name: &str) -> Result<Mesh> {
    match name {
        "griffith-strip" => griffith_strip_mesh(),
        "two-well" => two_well_mesh(),
        "hexagon-fan" => hexagon_fan_mesh(),
        "unit-square" => unit_square_mesh(8),
        other => Err(Error::Config(format!("unknown builtin mesh '{other}'"))),
    }
}

/// Resolves `builtin:<name>` load profiles on a mesh.
pub fn builtin_profile(name: &str, mesh: &Mesh) -> Result<Vec<f64>> {
    let xmax = mesh.vertices().iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
    let f: Box<dyn Fn(&Point2) -> f64> = match name {
        "linear-y" => Box::new(|p| p.y),
        "linear-x" => Box::new(|p| p.x / xmax),
        "tapered-y" => Box::new(move |p| p.y * (1.0 - p.x / xmax)),
        "zero" => Box::new(|_| 0.0),
        other => return Err(Error::Config(format!("unknown builtin profile '{other}'"))),
    };
    Ok(mesh.vertices().iter().map(f).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_meshes() {
        assert_eq!(hexagon_fan_mesh().unwrap().num_edges(), 12);
        let s = griffith_strip_mesh().unwrap();
        assert_eq!(s.vertices().len(), 65 * 33);
        assert!((s.min_edge_length() - 1.0 / 32.0).abs() < 1e-12);
        let w = two_well_mesh().unwrap();
        assert!((w.area() - 2.75).abs() < 1e-12);
        let neck = w.edges_on_segment(Point2::new(2.5, 0.), Point2::new(2.5, 1.), 1e-9);
        assert_eq!(neck.len(), 2);
        assert!(builtin_mesh("nope").is_err());
    }
}
