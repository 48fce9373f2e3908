use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::EnergySolution;
use crate::error::{Error, Result};
use crate::geometry::Point2;

pub const MIN_ANNULUS_DOFS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SifFit {
    pub kappa: f64,
    pub dofs_used: usize,
    /// Root-mean-square misfit of the model over the annulus.
    pub rms: f64,
}

/// Tip-local polar coordinates with `θ ∈ (−π, π]` measured from `dir`; `θ = ±π` lies on the
/// crack line behind the tip.
fn polar(p: Point2, tip: Point2, dir: [f64; 2]) -> (f64, f64, f64, f64) {
    let (dx, dy) = (p.x - tip.x, p.y - tip.y);
    let xl = dx * dir[0] + dy * dir[1];
    let yl = -dx * dir[1] + dy * dir[0];
    (xl, yl, xl.hypot(yl), yl.atan2(xl))
}

/// Least-squares fit of `u ≈ c₀ + c₁x' + c₂(ρ/r_out)^{3/2} sin(3θ/2) + 2κ√(ρ/π) sin(θ/2)` over
/// the DOFs with `r_in ≤ ρ ≤ r_out`. Every term satisfies the free-face condition; `y'` does
/// not and is left out.
pub fn fit_sif(solution: &EnergySolution, tip: Point2, direction: [f64; 2], r_in: f64, r_out: f64) -> Result<SifFit> {
    let norm = direction[0].hypot(direction[1]);
    if !(norm > 0.0) || !(r_in >= 0.0 && r_out > r_in) {
        return Err(Error::SifFit("need a non-zero direction and 0 ≤ r_in < r_out".into()));
    }
    let dir = [direction[0] / norm, direction[1] / norm];
    let space = &solution.space;
    let mesh = space.mesh();
    let k = space.crack();

    // Crack edges in the annulus must lie behind the tip.
    for e in k.edges() {
        let (a, b) = mesh.edge_endpoints(e);
        for s in [0.0, 0.5, 1.0] {
            let (_, _, rho, theta) = polar(a.lerp(&b, s), tip, dir);
            if rho > r_in.max(1e-12) && rho < r_out && theta.abs() < 0.9 * PI {
                return Err(Error::SifFit(format!("annulus intersects another crack branch (edge {e})")));
            }
        }
    }

    let mut rows = Vec::new();
    for d in 0..space.num_dofs() {
        let p = mesh.vertices()[space.dof_vertex(d)];
        let (xl, _, rho, mut theta) = polar(p, tip, dir);
        if rho < r_in || rho > r_out {
            continue;
        }
        if theta.abs() > PI - 1e-9 {
            // On a crack face: the fan decides the side.
            let (_, _, _, side) = polar(space.fan_centroid(d), tip, dir);
            theta = PI.copysign(side);
        }
        let r = rho / r_out;
        let row = [1.0, xl, r * r.sqrt() * (1.5 * theta).sin(), 2.0 * (rho / PI).sqrt() * (theta / 2.0).sin()];
        rows.push((row, solution.u[d]));
    }
    if rows.len() < MIN_ANNULUS_DOFS {
        return Err(Error::SifFit(format!("{} DOFs in annulus, need {MIN_ANNULUS_DOFS}", rows.len())));
    }
    let a = DMatrix::from_fn(rows.len(), 4, |i, j| rows[i].0[j]);
    let b = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.1));
    let svd = a.clone().svd(true, true);
    let c = svd.solve(&b, 1e-12).map_err(|e| Error::SifFit(e.to_string()))?;
    let misfit = &a * &c - &b;
    Ok(SifFit { kappa: c[c.len() - 1], dofs_used: rows.len(), rms: (misfit.norm_squared() / rows.len() as f64).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elastic::{solve_energy, Amplitude, BoundaryLoad};
    use crate::geometry::grid::{structured_rectangle, Diagonals};
    use crate::geometry::{CrackSet, EdgeSelector};
    use std::sync::Arc;

    fn cracked_square() -> (Arc<crate::geometry::Mesh>, CrackSet) {
        let m = Arc::new(
            structured_rectangle(-1., -1., 1., 1., 16, 16, Diagonals::Mirrored, &[EdgeSelector::All], None).unwrap(),
        );
        let k = CrackSet::from_edges(&m, m.edges_on_segment(Point2::new(-1., 0.), Point2::new(0., 0.), 1e-9)).unwrap();
        (m, k)
    }

    #[test]
    fn zero_field_gives_zero() {
        let (m, k) = cracked_square();
        let load = BoundaryLoad::from_fn(&m, |_, _| 0.0, Amplitude::Linear { c0: 1.0, c1: 0.0 }, 1.0).unwrap();
        let sol = solve_energy(0.0, &k, &load).unwrap();
        let fit = fit_sif(&sol, Point2::new(0., 0.), [1., 0.], 0.25, 0.75).unwrap();
        assert_eq!(fit.kappa, 0.0);
    }

    #[test]
    fn recovers_synthetic_singular_field() {
        let (m, k) = cracked_square();
        let load = BoundaryLoad::from_fn(&m, |_, _| 0.0, Amplitude::Linear { c0: 1.0, c1: 0.0 }, 1.0).unwrap();
        let mut sol = solve_energy(0.0, &k, &load).unwrap();
        let kappa0 = 0.8;
        for d in 0..sol.u.len() {
            let p = m.vertices()[sol.space.dof_vertex(d)];
            let mut theta = p.y.atan2(p.x);
            if theta.abs() > PI - 1e-9 {
                theta = PI.copysign(sol.space.fan_centroid(d).y);
            }
            let rho = p.x.hypot(p.y);
            sol.u[d] = 0.3 - 0.1 * p.x + 2.0 * kappa0 * (rho / PI).sqrt() * (theta / 2.0).sin();
        }
        let fit = fit_sif(&sol, Point2::new(0., 0.), [1., 0.], 0.25, 0.75).unwrap();
        assert!(((fit.kappa - kappa0) / kappa0).abs() < 1e-6, "{fit:?}");
    }

    #[test]
    fn too_few_dofs() {
        let (m, k) = cracked_square();
        let load = BoundaryLoad::from_fn(&m, |_, y| y, Amplitude::Linear { c0: 1.0, c1: 0.0 }, 1.0).unwrap();
        let sol = solve_energy(0.0, &k, &load).unwrap();
        assert!(matches!(fit_sif(&sol, Point2::new(0., 0.), [1., 0.], 0.05, 0.1), Err(Error::SifFit(_))));
    }
}
