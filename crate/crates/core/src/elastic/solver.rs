use sprs::{CsMat, TriMat};

use super::space::CrackedSpace;
use crate::error::{Error, Result};
use crate::geometry::Point2;

pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Gradient of the linear interpolant of `vals` on the triangle `p`.
pub fn p1_gradient(p: &[Point2; 3], vals: [f64; 3]) -> [f64; 2] {
    let two_a = (p[1].x - p[0].x) * (p[2].y - p[0].y) - (p[2].x - p[0].x) * (p[1].y - p[0].y);
    let mut g = [0.0; 2];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        g[0] += vals[i] * (p[j].y - p[k].y);
        g[1] += vals[i] * (p[k].x - p[j].x);
    }
    [g[0] / two_a, g[1] / two_a]
}

fn element_stiffness(p: &[Point2; 3], area: f64) -> [[f64; 3]; 3] {
    let mut b = [[0.0; 2]; 3];
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        b[i] = [p[j].y - p[k].y, p[k].x - p[j].x];
    }
    let s = 1.0 / (4.0 * area);
    let mut ke = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            ke[i][j] = s * (b[i][0] * b[j][0] + b[i][1] * b[j][1]);
        }
    }
    ke
}

/// Full stiffness matrix over all DOFs of the space.
pub fn assemble(space: &CrackedSpace) -> CsMat<f64> {
    let mesh = space.mesh();
    let n = space.num_dofs();
    let mut tri = TriMat::with_capacity((n, n), 9 * mesh.triangles().len());
    for t in 0..mesh.triangles().len() {
        let p = mesh.triangles()[t].map(|v| mesh.vertices()[v]);
        let ke = element_stiffness(&p, mesh.triangle_area(t));
        let d = space.triangle_dofs(t);
        for i in 0..3 {
            for j in 0..3 {
                tri.add_triplet(d[i], d[j], ke[i][j]);
            }
        }
    }
    tri.to_csr()
}

fn mat_vec(a: &CsMat<f64>, x: &[f64], y: &mut [f64]) {
    for (i, row) in a.outer_iterator().enumerate() {
        y[i] = row.iter().map(|(j, v)| v * x[j]).sum();
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Jacobi-preconditioned conjugate gradients from a zero initial guess.
pub fn pcg(a: &CsMat<f64>, b: &[f64], tol: f64, max_iter: usize) -> Result<CgOutcome> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return Ok(CgOutcome { x, iterations: 0, relative_residual: 0.0 });
    }
    let mut diag = vec![1.0; n];
    for (i, row) in a.outer_iterator().enumerate() {
        if let Some(&v) = row.get(i) {
            if v > 0.0 {
                diag[i] = v;
            }
        }
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut rel = 1.0;
    for it in 1..=max_iter {
        mat_vec(a, &p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rel = dot(&r, &r).sqrt() / bnorm;
        if rel <= tol {
            return Ok(CgOutcome { x, iterations: it, relative_residual: rel });
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::SolverNonConvergence { iterations: max_iter, residual: rel })
}

pub struct DirichletSolve {
    pub u: Vec<f64>,
    pub energy: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Minimizes ½uᵀAu with `u[d] = fixed[d]` wherever `fixed[d]` is `Some`.
pub fn solve_constrained(space: &CrackedSpace, a: &CsMat<f64>, fixed: &[Option<f64>], tol: f64) -> Result<DirichletSolve> {
    let n = space.num_dofs();
    let mut free_index = vec![usize::MAX; n];
    let mut free = Vec::new();
    for d in 0..n {
        if fixed[d].is_none() {
            free_index[d] = free.len();
            free.push(d);
        }
    }
    let mut u: Vec<f64> = fixed.iter().map(|v| v.unwrap_or(0.0)).collect();
    let nf = free.len();
    let mut tri = TriMat::new((nf, nf));
    let mut rhs = vec![0.0; nf];
    for (i, row) in a.outer_iterator().enumerate() {
        let fi = free_index[i];
        if fi == usize::MAX {
            continue;
        }
        for (j, &v) in row.iter() {
            match fixed[j] {
                Some(g) => rhs[fi] -= v * g,
                None => tri.add_triplet(fi, free_index[j], v),
            }
        }
    }
    let aff: CsMat<f64> = tri.to_csr();
    let out = pcg(&aff, &rhs, tol, 20 * nf.max(50))?;
    for (k, &d) in free.iter().enumerate() {
        u[d] = out.x[k];
    }
    let mut au = vec![0.0; n];
    mat_vec(a, &u, &mut au);
    let energy = (0.5 * dot(&u, &au)).max(0.0);
    Ok(DirichletSolve { u, energy, residual: out.relative_residual, iterations: out.iterations })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_of_linear_function() {
        let p = [Point2::new(0.0, 0.0), Point2::new(2.0, 0.0), Point2::new(0.5, 1.0)];
        let f = |q: &Point2| 3.0 * q.x - 2.0 * q.y + 1.0;
        let g = p1_gradient(&p, [f(&p[0]), f(&p[1]), f(&p[2])]);
        assert!((g[0] - 3.0).abs() < 1e-14 && (g[1] + 2.0).abs() < 1e-14);
    }

    #[test]
    fn element_rows_sum_to_zero() {
        let p = [Point2::new(0.0, 0.0), Point2::new(1.0, 0.2), Point2::new(0.3, 0.9)];
        let ke = element_stiffness(&p, 0.5 * (1.0 * 0.9 - 0.3 * 0.2));
        for row in ke {
            assert!(row.iter().sum::<f64>().abs() < 1e-14);
        }
    }
}
