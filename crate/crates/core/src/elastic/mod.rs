//! Elastic energy of the cracked body: P1 finite elements on the mesh cut along the crack.

mod load;
mod sif;
mod solver;
mod space;

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use fixedbitset::FixedBitSet;

pub use load::{power_bound_constant, profile_gradient_norm, Amplitude, BoundaryLoad};
pub use sif::{fit_sif, SifFit};
pub use solver::{assemble, p1_gradient, pcg, solve_constrained, CgOutcome, DirichletSolve, DEFAULT_TOLERANCE};
pub use space::{split_along_crack, CrackedSpace};

use crate::error::{Error, Result};
use crate::geometry::{CrackSet, Mesh};

#[derive(Clone, Debug)]
pub struct EnergySolution {
    pub energy: f64,
    /// One value per DOF of `space`.
    pub u: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub space: Arc<CrackedSpace>,
}

fn check_load(mesh: &Mesh, load: &BoundaryLoad) -> Result<()> {
    if load.profile.len() != mesh.vertices().len() {
        return Err(Error::Config(format!(
            "load profile has {} values for {} vertices",
            load.profile.len(),
            mesh.vertices().len()
        )));
    }
    Ok(())
}

/// Dirichlet values `scale · G` on the Dirichlet DOFs, 0 on pinned DOFs.
fn fixed_values(space: &CrackedSpace, profile: &[f64], scale: f64) -> Vec<Option<f64>> {
    let mut fixed: Vec<Option<f64>> = (0..space.num_dofs())
        .map(|d| space.is_dirichlet(d).then(|| scale * profile[space.dof_vertex(d)]))
        .collect();
    for &d in space.pinned() {
        fixed[d] = Some(0.0);
    }
    fixed
}

pub fn solve_scaled(k: &CrackSet, profile: &[f64], scale: f64, tol: f64) -> Result<EnergySolution> {
    let space = Arc::new(split_along_crack(k));
    let a = assemble(&space);
    let out = solve_constrained(&space, &a, &fixed_values(&space, profile, scale), tol)?;
    Ok(EnergySolution { energy: out.energy, u: out.u, residual: out.residual, iterations: out.iterations, space })
}

/// `E(t,K) = min ½∫_{Ω∖K} |∇u|²` over `u = a(t)G` on the uncracked Dirichlet boundary.
pub fn solve_energy(t: f64, k: &CrackSet, load: &BoundaryLoad) -> Result<EnergySolution> {
    check_load(k.mesh(), load)?;
    solve_scaled(k, &load.profile, load.amplitude.value(t), DEFAULT_TOLERANCE)
}

/// `∫ ∇G·∇u` over the cracked domain, with `G` read off the profile at each DOF's vertex.
pub fn profile_coupling(solution: &EnergySolution, profile: &[f64]) -> f64 {
    let space = &solution.space;
    let mesh = space.mesh();
    let mut sum = 0.0;
    for t in 0..mesh.triangles().len() {
        let tri = mesh.triangles()[t];
        let p = tri.map(|v| mesh.vertices()[v]);
        let d = space.triangle_dofs(t);
        let gu = p1_gradient(&p, d.map(|i| solution.u[i]));
        let gg = p1_gradient(&p, tri.map(|v| profile[v]));
        sum += mesh.triangle_area(t) * (gu[0] * gg[0] + gu[1] * gg[1]);
    }
    sum
}

/// `∂ₜE(t,K) = ∫_{Ω∖K} ∇ġ(t)·∇u(t)` with `ġ = ȧ(t)G`.
pub fn power(t: f64, k: &CrackSet, load: &BoundaryLoad) -> Result<f64> {
    let rate = load.amplitude.rate(t);
    if rate == 0.0 {
        return Ok(0.0);
    }
    let sol = solve_energy(t, k, load)?;
    Ok(rate * profile_coupling(&sol, &load.profile))
}

/// Source of `E(t,K)` and `∂ₜE(t,K)` for the scheme and the audits.
pub trait EnergyModel: Send + Sync {
    fn mesh(&self) -> &Arc<Mesh>;
    fn energy(&self, t: f64, k: &CrackSet) -> Result<f64>;
    fn power(&self, t: f64, k: &CrackSet) -> Result<f64>;
    /// `C_P` in `|∂ₜE| ≤ C_P (E + 1)`.
    fn power_constant(&self) -> f64;
    /// Whether `∂ₜE` is only piecewise defined (tabulated loads).
    fn approximate_power(&self) -> bool {
        false
    }
}

#[derive(Clone, Copy, Debug)]
struct UnitResponse {
    energy: f64,
    coupling: f64,
}

/// FEM energy with a per-crack cache. The unit-amplitude solution `u₁` gives
/// `E = a² E₁` and `∂ₜE = ȧ a ∫∇G·∇u₁` for every time.
pub struct FemEnergy {
    mesh: Arc<Mesh>,
    load: BoundaryLoad,
    tol: f64,
    power_constant: f64,
    cache: Mutex<HashMap<FixedBitSet, UnitResponse>>,
    solves: AtomicUsize,
}

impl FemEnergy {
    pub fn new(mesh: Arc<Mesh>, load: BoundaryLoad) -> Result<Self> {
        check_load(&mesh, &load)?;
        load.amplitude.validate()?;
        let power_constant = power_bound_constant(&load, &mesh);
        Ok(FemEnergy { mesh, load, tol: DEFAULT_TOLERANCE, power_constant, cache: Mutex::default(), solves: AtomicUsize::new(0) })
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn load(&self) -> &BoundaryLoad {
        &self.load
    }

    /// Number of linear solves performed so far (cache misses).
    pub fn solves(&self) -> usize {
        self.solves.load(Ordering::Relaxed)
    }

    fn unit(&self, k: &CrackSet) -> Result<UnitResponse> {
        if !Arc::ptr_eq(k.mesh(), &self.mesh) {
            return Err(Error::MeshMismatch);
        }
        if let Some(r) = self.cache.lock().unwrap().get(k.bits()) {
            return Ok(*r);
        }
        let sol = solve_scaled(k, &self.load.profile, 1.0, self.tol)?;
        self.solves.fetch_add(1, Ordering::Relaxed);
        let r = UnitResponse { energy: sol.energy, coupling: profile_coupling(&sol, &self.load.profile) };
        // Concurrent inserts of the same key carry the same value.
        self.cache.lock().unwrap().entry(k.bits().clone()).or_insert(r);
        Ok(r)
    }

    /// Full solution at time `t` (not cached).
    pub fn solve(&self, t: f64, k: &CrackSet) -> Result<EnergySolution> {
        solve_scaled(k, &self.load.profile, self.load.amplitude.value(t), self.tol)
    }
}

impl EnergyModel for FemEnergy {
    fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    fn energy(&self, t: f64, k: &CrackSet) -> Result<f64> {
        let a = self.load.amplitude.value(t);
        if a == 0.0 {
            return Ok(0.0);
        }
        Ok(a * a * self.unit(k)?.energy)
    }

    fn power(&self, t: f64, k: &CrackSet) -> Result<f64> {
        let (a, rate) = (self.load.amplitude.value(t), self.load.amplitude.rate(t));
        if a == 0.0 || rate == 0.0 {
            return Ok(0.0);
        }
        Ok(rate * a * self.unit(k)?.coupling)
    }

    fn power_constant(&self) -> f64 {
        self.power_constant
    }

    fn approximate_power(&self) -> bool {
        self.load.amplitude.is_approximate()
    }
}

/// Vertices of `k` with exactly one incident crack edge.
pub fn crack_tips(k: &CrackSet) -> Vec<usize> {
    let mesh = k.mesh();
    (0..mesh.vertices().len())
        .filter(|&v| mesh.vertex_edges(v).iter().filter(|&&e| k.contains(e)).count() == 1)
        .collect()
}

/// Checks that `path` is a chain of fresh edges starting at a tip of `k`; returns the tip.
pub fn check_tip_path(k: &CrackSet, path: &[usize]) -> Result<usize> {
    let mesh = k.mesh();
    let first = *path.first().ok_or(Error::NotAtTip)?;
    if first >= mesh.num_edges() {
        return Err(Error::EdgeOutOfRange { index: first, edges: mesh.num_edges() });
    }
    let tips = crack_tips(k);
    let tip = *mesh.edge(first).v.iter().find(|v| tips.contains(v)).ok_or(Error::NotAtTip)?;
    let mut at = tip;
    for &e in path {
        if e >= mesh.num_edges() {
            return Err(Error::EdgeOutOfRange { index: e, edges: mesh.num_edges() });
        }
        let v = mesh.edge(e).v;
        if k.contains(e) || !v.contains(&at) {
            return Err(Error::NotAtTip);
        }
        at = if v[0] == at { v[1] } else { v[0] };
    }
    Ok(tip)
}

/// `G = −dE/dσ` at `σ = 0⁺` along the extension `path`: least-squares slope of
/// `E(t, K ∪ Γ(σ_j))` over the first `h_steps` extension lengths and `σ = 0`.
pub fn energy_release(model: &dyn EnergyModel, t: f64, k: &CrackSet, path: &[usize], h_steps: usize) -> Result<f64> {
    check_tip_path(k, path)?;
    let steps = h_steps.clamp(1, path.len());
    let mesh = k.mesh();
    let mut sigma = vec![0.0];
    let mut energy = vec![model.energy(t, k)?];
    let mut grown = k.clone();
    for &e in &path[..steps] {
        grown.insert(e);
        sigma.push(sigma.last().unwrap() + mesh.edge(e).length);
        energy.push(model.energy(t, &grown)?);
    }
    let n = sigma.len() as f64;
    let (sm, em) = (sigma.iter().sum::<f64>() / n, energy.iter().sum::<f64>() / n);
    let (mut num, mut den) = (0.0, 0.0);
    for (s, e) in sigma.iter().zip(&energy) {
        num += (s - sm) * (e - em);
        den += (s - sm) * (s - sm);
    }
    Ok(-num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::grid::{structured_rectangle, Diagonals};
    use crate::geometry::{EdgeSelector, Point2};

    fn square(n: usize, dirichlet: &[EdgeSelector]) -> Arc<Mesh> {
        Arc::new(structured_rectangle(0., 0., 1., 1., n, n, Diagonals::Forward, dirichlet, None).unwrap())
    }

    fn lin(c0: f64, c1: f64) -> Amplitude {
        Amplitude::Linear { c0, c1 }
    }

    #[test]
    fn linear_solution_reproduced() {
        let m = square(6, &[EdgeSelector::All]);
        let load = BoundaryLoad::from_fn(&m, |_, y| y, lin(1.0, 0.0), 1.0).unwrap();
        let sol = solve_energy(0.0, &CrackSet::empty(&m), &load).unwrap();
        assert!((sol.energy - 0.5).abs() < 1e-9);
        for d in 0..sol.u.len() {
            assert!((sol.u[d] - m.vertices()[d].y).abs() < 1e-8);
        }
    }

    #[test]
    fn constant_data_gives_zero_energy() {
        let m = square(5, &[EdgeSelector::All]);
        let load = BoundaryLoad::from_fn(&m, |_, _| 3.0, lin(1.0, 1.0), 1.0).unwrap();
        let k = CrackSet::from_edges(&m, m.edges_on_segment(Point2::new(0.2, 0.6), Point2::new(0.8, 0.6), 1e-9)).unwrap();
        assert!(solve_energy(0.5, &k, &load).unwrap().energy < 1e-18);
    }

    #[test]
    fn full_cut_releases_everything() {
        let tb = [
            EdgeSelector::Box { xmin: 0., ymin: 0., xmax: 1., ymax: 0. },
            EdgeSelector::Box { xmin: 0., ymin: 1., xmax: 1., ymax: 1. },
        ];
        let m = square(6, &tb);
        let load = BoundaryLoad::from_fn(&m, |_, y| y, lin(1.0, 0.0), 1.0).unwrap();
        let cut = CrackSet::from_edges(&m, m.edges_on_segment(Point2::new(0., 0.5), Point2::new(1., 0.5), 1e-9)).unwrap();
        let sol = solve_energy(0.0, &cut, &load).unwrap();
        assert!(sol.energy < 1e-18);
        assert_eq!(sol.space.num_components(), 2);
        assert!((solve_energy(0.0, &CrackSet::empty(&m), &load).unwrap().energy - 0.5).abs() < 1e-9);
    }

    #[test]
    fn power_examples() {
        let m = square(4, &[EdgeSelector::All]);
        let k = CrackSet::empty(&m);
        let frozen = BoundaryLoad::from_fn(&m, |_, y| y, lin(2.0, 0.0), 1.0).unwrap();
        assert_eq!(power(0.3, &k, &frozen).unwrap(), 0.0);
        let ramp = BoundaryLoad::from_fn(&m, |_, y| y, lin(0.0, 1.0), 1.0).unwrap();
        assert!((power(0.7, &k, &ramp).unwrap() - 0.7).abs() < 1e-9);
        assert!((power_bound_constant(&ramp, &m) - 1.0).abs() < 1e-12);
        assert_eq!(power_bound_constant(&frozen, &m), 0.0);
    }

    #[test]
    fn power_matches_finite_difference() {
        let m = square(8, &[EdgeSelector::Box { xmin: 0., ymin: 0., xmax: 1., ymax: 0. }, EdgeSelector::Box { xmin: 1., ymin: 0., xmax: 1., ymax: 1. }]);
        let load = BoundaryLoad::from_fn(&m, |x, y| x * x + 0.5 * y, lin(0.3, 1.7), 1.0).unwrap();
        let k = CrackSet::from_edges(&m, m.edges_on_segment(Point2::new(0.25, 0.5), Point2::new(0.75, 0.5), 1e-9)).unwrap();
        let (t, h) = (0.4, 1e-4);
        let fd = (solve_energy(t + h, &k, &load).unwrap().energy - solve_energy(t - h, &k, &load).unwrap().energy) / (2.0 * h);
        let p = power(t, &k, &load).unwrap();
        assert!(((p - fd) / fd).abs() < 1e-5, "{p} vs {fd}");
    }

    #[test]
    fn cached_model_agrees_with_direct_solve() {
        let m = square(6, &[EdgeSelector::All]);
        let load = BoundaryLoad::from_fn(&m, |x, y| x * y, lin(0.5, 2.0), 1.0).unwrap();
        let model = FemEnergy::new(m.clone(), load.clone()).unwrap();
        let k = CrackSet::from_edges(&m, m.edges_on_segment(Point2::new(0.0, 0.5), Point2::new(0.5, 0.5), 1e-9)).unwrap();
        for t in [0.0, 0.3, 1.0] {
            let direct = solve_energy(t, &k, &load).unwrap().energy;
            assert!((model.energy(t, &k).unwrap() - direct).abs() < 1e-9 * (1.0 + direct));
            let p = power(t, &k, &load).unwrap();
            assert!((model.power(t, &k).unwrap() - p).abs() < 1e-9 * (1.0 + p.abs()));
        }
        assert_eq!(model.solves(), 1);
    }

    #[test]
    fn energy_release_requires_tip() {
        let m = square(4, &[EdgeSelector::All]);
        let load = BoundaryLoad::from_fn(&m, |_, y| y, lin(0.0, 1.0), 1.0).unwrap();
        let model = FemEnergy::new(m.clone(), load).unwrap();
        let k = CrackSet::from_edges(&m, m.edges_on_segment(Point2::new(0.25, 0.5), Point2::new(0.5, 0.5), 1e-9)).unwrap();
        let far = m.edges_on_segment(Point2::new(0.75, 0.25), Point2::new(1.0, 0.25), 1e-9);
        assert!(matches!(energy_release(&model, 1.0, &k, &far, 1), Err(Error::NotAtTip)));
        let ext = m.edges_on_segment(Point2::new(0.5, 0.5), Point2::new(0.75, 0.5), 1e-9);
        assert_eq!(energy_release(&model, 0.0, &k, &ext, 1).unwrap(), 0.0);
        assert!(energy_release(&model, 1.0, &k, &ext, 1).unwrap() >= 0.0);
    }
}
