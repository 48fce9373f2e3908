//! Tip tracking along declared paths, stress intensity samples and Griffith's conditions.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dissipation::alpha;
use crate::elastic::{
    assemble, energy_release, fit_sif, solve_constrained, split_along_crack, EnergyModel, FemEnergy, DEFAULT_TOLERANCE,
};
use crate::error::{Error, Result};
use crate::evolution::DiscreteEvolution;
use crate::geometry::{build_mesh, h1_diff, CrackSet, EdgeSelector, EdgeTag, Mesh, Point2};
use crate::ve_core::RisInstance;

/// Ordered edge path `Γ` leaving the initial crack at `vertices[0]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TipPath {
    pub edges: Vec<usize>,
    /// Path vertices, one more than edges.
    pub vertices: Vec<usize>,
    /// Cumulative arclength at each path vertex.
    pub sigma: Vec<f64>,
}

impl TipPath {
    pub fn new(k0: &CrackSet, edges: Vec<usize>) -> Result<Self> {
        let mesh = k0.mesh();
        let first = *edges.first().ok_or_else(|| Error::Config("empty tip path".into()))?;
        let on_crack = k0.vertex_mask();
        let [a, b] = mesh.edge(first).v;
        let start = match (on_crack.contains(a), on_crack.contains(b)) {
            (true, false) => a,
            (false, true) => b,
            _ => return Err(Error::Config("tip path must start at exactly one vertex of the initial crack".into())),
        };
        let mut vertices = vec![start];
        let mut sigma = vec![0.0];
        for &e in &edges {
            if e >= mesh.num_edges() {
                return Err(Error::EdgeOutOfRange { index: e, edges: mesh.num_edges() });
            }
            let at = *vertices.last().unwrap();
            let v = mesh.edge(e).v;
            if !v.contains(&at) || k0.contains(e) {
                return Err(Error::Config(format!("tip path is not a chain of fresh edges at edge {e}")));
            }
            let next = if v[0] == at { v[1] } else { v[0] };
            if vertices.contains(&next) || (on_crack.contains(next)) {
                return Err(Error::Config("tip path is not simple".into()));
            }
            vertices.push(next);
            sigma.push(sigma.last().unwrap() + mesh.edge(e).length);
        }
        Ok(TipPath { edges, vertices, sigma })
    }

    /// Tip position and unit direction after `n` path edges.
    pub fn tip_frame(&self, mesh: &Mesh, n: usize) -> (Point2, [f64; 2]) {
        let p = mesh.vertices()[self.vertices[n]];
        let (a, b) = if n < self.edges.len() { (n, n + 1) } else { (n - 1, n) };
        let (pa, pb) = (mesh.vertices()[self.vertices[a]], mesh.vertices()[self.vertices[b]]);
        let len = pa.dist(&pb);
        (p, [(pb.x - pa.x) / len, (pb.y - pa.y) / len])
    }
}

/// `σ_i(tʲ)` per tip (outer) and step (inner), checking `K(t) = K(t₀) ∪ ⋃ Γ_i(σ_i(t))`.
pub fn track_tips(evo: &DiscreteEvolution, paths: &[TipPath]) -> Result<Vec<Vec<f64>>> {
    let k0 = &evo.states[0];
    let mut owner: HashMap<usize, (usize, usize)> = HashMap::new();
    for (i, p) in paths.iter().enumerate() {
        for (n, &e) in p.edges.iter().enumerate() {
            if owner.insert(e, (i, n)).is_some() {
                return Err(Error::Config(format!("tip paths overlap at edge {e}")));
            }
        }
    }
    let mut sigma = vec![Vec::with_capacity(evo.states.len()); paths.len()];
    for (j, k) in evo.states.iter().enumerate() {
        let mut count = vec![0usize; paths.len()];
        for e in k.difference(k0).edges() {
            match owner.get(&e) {
                Some(&(i, _)) => count[i] += 1,
                None => return Err(Error::OffPath { step: j, reason: format!("edge {e} lies on no declared path") }),
            }
        }
        for (i, p) in paths.iter().enumerate() {
            if !p.edges[..count[i]].iter().all(|&e| k.contains(e)) {
                return Err(Error::OffPath { step: j, reason: format!("growth on path {i} is not a prefix") });
            }
            sigma[i].push(p.sigma[count[i]]);
        }
    }
    Ok(sigma)
}

/// Number of path edges in `k` for each path (assumes prefixes).
fn prefix_len(k: &CrackSet, path: &TipPath) -> usize {
    path.edges.iter().take_while(|&&e| k.contains(e)).count()
}

/// Sample `j` describes the step into `tʲ`: growth `σ(tʲ) − σ(tʲ⁻¹)` happens under the load at
/// `tʲ` on the left limit `K(tʲ⁻¹)`, so the KKT quantities pair the backward quotient with κ²
/// of that state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GriffithSample {
    pub t: f64,
    pub tip: usize,
    pub sigma: f64,
    /// Backward difference quotient (zero at the first sample).
    pub sigmadot: f64,
    /// κ² at `(tʲ, K(tʲ⁻¹))`.
    pub kappa2: f64,
    /// κ² at `(tʲ, K(tʲ))`.
    pub kappa2_state: f64,
    /// `−dE/dσ` at `(tʲ, K(tʲ⁻¹))` by finite differences along the path; `None` at the path end.
    pub release: Option<f64>,
    /// `1 − κ²`
    pub slack: f64,
    /// `(1 − κ²)·σ̇`
    pub compl: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GriffithReport {
    pub samples: Vec<GriffithSample>,
    /// Annulus radii used for the κ fit.
    pub r_in: f64,
    pub r_out: f64,
}

fn kappa2_at(fem: &FemEnergy, t: f64, k: &CrackSet, path: &TipPath, r_in: f64, r_out: f64) -> Result<f64> {
    let sol = fem.solve(t, k)?;
    let (tip, dir) = path.tip_frame(fem.mesh(), prefix_len(k, path));
    Ok(fit_sif(&sol, tip, dir, r_in, r_out)?.kappa.powi(2))
}

/// κ² at every step and tip, fitted on an annulus `[2h, 6h]` around the tip, next to the
/// energy release over `h_steps` path edges.
pub fn griffith_report(
    evo: &DiscreteEvolution,
    paths: &[TipPath],
    fem: &FemEnergy,
    h: f64,
    h_steps: usize,
) -> Result<GriffithReport> {
    let sigma = track_tips(evo, paths)?;
    let times = evo.partition.times();
    let (r_in, r_out) = (2.0 * h, 6.0 * h);
    let mut samples = Vec::with_capacity(times.len() * paths.len());
    for (j, &t) in times.iter().enumerate() {
        let left = &evo.states[j.saturating_sub(1)];
        let state = &evo.states[j];
        for (i, p) in paths.iter().enumerate() {
            let kappa2 = kappa2_at(fem, t, left, p, r_in, r_out)?;
            let kappa2_state = if left == state { kappa2 } else { kappa2_at(fem, t, state, p, r_in, r_out)? };
            let rest = &p.edges[prefix_len(left, p)..];
            let release =
                if rest.is_empty() { None } else { Some(energy_release(fem, t, left, rest, h_steps.max(1))?) };
            let sigmadot = if j == 0 { 0.0 } else { (sigma[i][j] - sigma[i][j - 1]) / (t - times[j - 1]) };
            samples.push(GriffithSample {
                t,
                tip: i,
                sigma: sigma[i][j],
                sigmadot,
                kappa2,
                kappa2_state,
                release,
                slack: 1.0 - kappa2,
                compl: (1.0 - kappa2) * sigmadot,
            });
        }
    }
    Ok(GriffithReport { samples, r_in, r_out })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KktOutcome {
    /// `σ̇ ≥ −tol`
    pub a: bool,
    /// `1 − κ² ≥ −tol`
    pub b: bool,
    /// `|(1 − κ²)σ̇| ≤ tol`
    pub c: bool,
    pub min_sigmadot: f64,
    pub min_slack: f64,
    pub max_compl: f64,
}

pub fn check_kkt(report: &GriffithReport, tol: f64) -> KktOutcome {
    let s = &report.samples;
    let min_sigmadot = s.iter().map(|x| x.sigmadot).fold(f64::INFINITY, f64::min);
    let min_slack = s.iter().map(|x| x.slack).fold(f64::INFINITY, f64::min);
    let max_compl = s.iter().map(|x| x.compl.abs()).fold(0.0, f64::max);
    KktOutcome { a: min_sigmadot >= -tol, b: min_slack >= -tol, c: max_compl <= tol, min_sigmadot, min_slack, max_compl }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    /// Edges of `K' ∖ K`.
    pub added: Vec<usize>,
    pub energy_ball: f64,
    pub energy_ball_competitor: f64,
    /// `Ẽ(K') + H¹(K'∖K) + Δ + (λ+μ)α − Ẽ(K)`; negative values violate local stability.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub rows: Vec<ProbeRow>,
    pub min_residual: f64,
}

struct Ball {
    sub: Arc<Mesh>,
    /// Global triangle of each submesh triangle.
    tri_global: Vec<usize>,
    /// Submesh edge of each global edge inside the ball.
    edge_map: HashMap<usize, usize>,
}

fn ball_submesh(mesh: &Mesh, center: Point2, radius: f64) -> Result<Ball> {
    let inside = |v: usize| mesh.vertices()[v].dist(&center) <= radius;
    for e in mesh.edges() {
        if e.tag == EdgeTag::DirichletBoundary && (inside(e.v[0]) || inside(e.v[1])) {
            return Err(Error::UnsupportedProbe("ball reaches the Dirichlet boundary".into()));
        }
    }
    let mut renumber = vec![usize::MAX; mesh.vertices().len()];
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut tri_global = Vec::new();
    for (t, tri) in mesh.triangles().iter().enumerate() {
        if tri.iter().all(|&v| inside(v)) {
            for &v in tri {
                if renumber[v] == usize::MAX {
                    renumber[v] = vertices.len();
                    vertices.push(mesh.vertices()[v]);
                }
            }
            triangles.push(tri.map(|v| renumber[v]));
            tri_global.push(t);
        }
    }
    if triangles.is_empty() {
        return Err(Error::UnsupportedProbe("ball contains no triangle".into()));
    }
    // Cut edges (interior to Ω, on the ball boundary) carry the trace data.
    let mut count: HashMap<usize, usize> = HashMap::new();
    for &t in &tri_global {
        for e in mesh.triangle_edges(t) {
            *count.entry(e).or_default() += 1;
        }
    }
    let mut cut: Vec<usize> = count
        .iter()
        .filter(|(&e, &c)| c == 1 && mesh.edge(e).tag == EdgeTag::Interior)
        .map(|(&e, _)| e)
        .collect();
    cut.sort_unstable();
    let selectors: Vec<EdgeSelector> =
        cut.iter().map(|&e| EdgeSelector::Pair(renumber[mesh.edge(e).v[0]], renumber[mesh.edge(e).v[1]])).collect();
    let sub = Arc::new(build_mesh(vertices, triangles, &selectors)?);
    let mut edge_map = HashMap::new();
    for &e in count.keys() {
        let [a, b] = mesh.edge(e).v;
        if let Some(se) = sub.find_edge(renumber[a], renumber[b]) {
            edge_map.insert(e, se);
        }
    }
    Ok(Ball { sub, tri_global, edge_map })
}

/// Ball-restricted energy `Ẽ(B; u, K)` with trace data from the global field `u` of `k`.
fn ball_energy(ball: &Ball, global_u: &crate::elastic::EnergySolution, k: &CrackSet) -> Result<f64> {
    let sub = &ball.sub;
    let local_crack = k
        .edges()
        .filter_map(|e| ball.edge_map.get(&e).copied())
        .filter(|&se| sub.edge(se).tag == EdgeTag::Interior);
    let kb = CrackSet::from_edges(sub, local_crack)?;
    let space = split_along_crack(&kb);
    let mut fixed: Vec<Option<f64>> = vec![None; space.num_dofs()];
    for (st, &gt) in ball.tri_global.iter().enumerate() {
        let sd = space.triangle_dofs(st);
        let gd = global_u.space.triangle_dofs(gt);
        for slot in 0..3 {
            if space.is_dirichlet(sd[slot]) {
                fixed[sd[slot]] = Some(global_u.u[gd[slot]]);
            }
        }
    }
    for &d in space.pinned() {
        fixed[d] = Some(0.0);
    }
    let a = assemble(&space);
    Ok(solve_constrained(&space, &a, &fixed, DEFAULT_TOLERANCE)?.energy)
}

/// Localized stability inequality on the ball for each competitor `K' ⊇ K` whose new edges
/// lie inside the ball. With no competitors given, every single-edge extension at a tip of
/// `K` inside the ball is probed.
pub fn local_stability_probe(
    inst: &RisInstance,
    fem: &FemEnergy,
    t: f64,
    k: &CrackSet,
    center: Point2,
    radius: f64,
    competitors: &[CrackSet],
) -> Result<ProbeReport> {
    let mesh = k.mesh();
    let ball = ball_submesh(mesh, center, radius)?;
    let owned: Vec<CrackSet>;
    let competitors = if competitors.is_empty() {
        let mut out = Vec::new();
        for tip in crate::elastic::crack_tips(k) {
            for &e in mesh.vertex_edges(tip) {
                if !k.contains(e) && ball.edge_map.get(&e).is_some_and(|&se| ball.sub.edge(se).tag == EdgeTag::Interior) {
                    out.push(k.with_edges([e]));
                }
            }
        }
        owned = out;
        &owned[..]
    } else {
        competitors
    };
    let global = fem.solve(t, k)?;
    let e_k = ball_energy(&ball, &global, k)?;
    let lm = inst.params.lambda + inst.mu_eff();
    let mut rows = Vec::with_capacity(competitors.len());
    for c in competitors {
        k.check_same_mesh(c)?;
        if !k.is_subset(c) {
            return Err(Error::UnsupportedProbe("competitor does not contain K".into()));
        }
        let added = c.difference(k).edge_vec();
        if added.iter().any(|e| !ball.edge_map.get(e).is_some_and(|&se| ball.sub.edge(se).tag == EdgeTag::Interior)) {
            return Err(Error::UnsupportedProbe("competitor grows outside the ball".into()));
        }
        let e_c = ball_energy(&ball, &global, c)?;
        let residual = e_c + h1_diff(k, c) + inst.delta_term(k, c).value() + lm * alpha(k, c).value() - e_k;
        rows.push(ProbeRow { added, energy_ball: e_k, energy_ball_competitor: e_c, residual });
    }
    let min_residual = rows.iter().map(|r| r.residual).fold(f64::INFINITY, f64::min);
    Ok(ProbeReport { rows, min_residual })
}
