//! Visco-energetic machinery over a finite lattice of crack sets: residual stability,
//! the incremental step, transition and jump costs, and the balance audits.

mod audit;
mod jump;

use std::collections::HashSet;
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use itertools::Itertools;
use serde::{Deserialize, Serialize};

pub use audit::{
    audit_balance, audit_jump_conditions, jump_variation, BalanceReport, BalanceRow, JumpConditionReport,
    JumpConditionRow,
};
pub use jump::{decompose_transition, HopLedger, JumpCostResult, Segment, SegmentKind, TransitionDecomposition};

use crate::dissipation::{alpha, atw_integral, dist_d, CostValue, DissipationParams};
use crate::elastic::EnergyModel;
use crate::error::{Error, Result};
use crate::geometry::{CrackSet, Mesh};

pub const DEFAULT_BUDGET: usize = 3;
pub const DEFAULT_LATTICE_CAP: usize = 16;
pub const DEFAULT_MAX_COMPETITORS: usize = 1 << 20;
pub const DEFAULT_STABILITY_TOLERANCE: f64 = 1e-9;

/// Which supersets of `K` compete at a step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompetitorSpec {
    /// `K ∪ S` for every `S ⊆ pool ∖ K` with `|S| ≤ budget`.
    Subsets { budget: usize },
    /// Extensions of `K` by the next missing edges of each path, at most `budget` edges in total.
    PathPrefixes { paths: Vec<Vec<usize>>, budget: usize },
}

impl CompetitorSpec {
    pub fn budget(&self) -> usize {
        match self {
            CompetitorSpec::Subsets { budget } | CompetitorSpec::PathPrefixes { budget, .. } => *budget,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    Exhaustive,
    /// Best single-edge augmentation chains started from every admissible edge.
    Greedy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// `D = d + δ`.
    Ve,
    /// `δ ≡ 0`, the classical global incremental scheme.
    Energetic,
}

/// A rate-independent system on a finite crack lattice.
#[derive(Clone)]
pub struct RisInstance {
    pub model: Arc<dyn EnergyModel>,
    /// Sorted candidate edges; every crack set reachable by the scheme lies in `K₀ ∪ pool`.
    pub pool: Vec<usize>,
    pub params: DissipationParams,
    pub competitors: CompetitorSpec,
    pub search: SearchMode,
    pub mode: Mode,
    /// Relative stability tolerance: stable when `R ≤ tol·(1 + E)`.
    pub stability_tolerance: f64,
    pub max_competitors: usize,
    pub lattice_cap: usize,
}

#[derive(Clone, Debug)]
pub struct StabilityReport {
    pub residual: f64,
    pub energy: f64,
    /// `M(t,K)`, sorted by `(|K|, edges)`.
    pub minimizers: Vec<CrackSet>,
    pub examined: usize,
    pub stable: bool,
}

#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub state: CrackSet,
    /// `E(t,K) + D(K_prev,K)` of the chosen state.
    pub objective: f64,
    pub examined: usize,
}

/// Evaluated competitors of one minimization, in generation order.
struct Scan {
    entries: Vec<(CrackSet, f64)>,
}

impl Scan {
    fn argmin(&self) -> usize {
        let mut best = 0;
        for i in 1..self.entries.len() {
            let (ref k, v) = self.entries[i];
            let (ref bk, bv) = self.entries[best];
            if v < bv || (v == bv && k.tie_cmp(bk).is_lt()) {
                best = i;
            }
        }
        best
    }
}

fn binomial_sum(n: usize, b: usize) -> u128 {
    let mut total: u128 = 0;
    let mut c: u128 = 1;
    for j in 0..=b.min(n) {
        total += c;
        c = c * (n - j) as u128 / (j + 1) as u128;
    }
    total
}

impl RisInstance {
    pub fn new(model: Arc<dyn EnergyModel>, pool: Vec<usize>, params: DissipationParams, competitors: CompetitorSpec) -> Result<Self> {
        let params = params.validated()?;
        let n = model.mesh().num_edges();
        let mut pool = pool;
        if let CompetitorSpec::PathPrefixes { paths, .. } = &competitors {
            pool.extend(paths.iter().flatten());
        }
        pool.sort_unstable();
        pool.dedup();
        if let Some(&e) = pool.iter().find(|&&e| e >= n) {
            return Err(Error::EdgeOutOfRange { index: e, edges: n });
        }
        Ok(RisInstance {
            model,
            pool,
            params,
            competitors,
            search: SearchMode::Exhaustive,
            mode: Mode::Ve,
            stability_tolerance: DEFAULT_STABILITY_TOLERANCE,
            max_competitors: DEFAULT_MAX_COMPETITORS,
            lattice_cap: DEFAULT_LATTICE_CAP,
        })
    }

    pub fn with_search(mut self, search: SearchMode) -> Self {
        self.search = search;
        self
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        self.model.mesh()
    }

    pub fn energy(&self, t: f64, k: &CrackSet) -> Result<f64> {
        self.model.energy(t, k)
    }

    pub fn power(&self, t: f64, k: &CrackSet) -> Result<f64> {
        self.model.power(t, k)
    }

    /// `μ` as seen by the current mode.
    pub fn mu_eff(&self) -> f64 {
        match self.mode {
            Mode::Ve => self.params.mu,
            Mode::Energetic => 0.0,
        }
    }

    pub fn d(&self, h: &CrackSet, k: &CrackSet) -> CostValue {
        dist_d(h, k, &self.params)
    }

    /// `Δ(H,K)`, identically zero (on nested pairs) in energetic mode.
    pub fn delta_term(&self, h: &CrackSet, k: &CrackSet) -> CostValue {
        match self.mode {
            Mode::Ve => atw_integral(h, k, self.params.quadrature_order),
            Mode::Energetic if h.is_subset(k) => CostValue::Finite(0.0),
            Mode::Energetic => CostValue::Infinite,
        }
    }

    /// `δ(H,K) = Δ + μα`.
    pub fn delta(&self, h: &CrackSet, k: &CrackSet) -> CostValue {
        self.delta_term(h, k) + alpha(h, k).scale(self.mu_eff())
    }

    /// `D = d + δ`.
    pub fn big_d(&self, h: &CrackSet, k: &CrackSet) -> CostValue {
        self.d(h, k) + self.delta(h, k)
    }

    /// Per-hop transition weight `Δ + (λ+μ)α`.
    pub fn hop_weight(&self, h: &CrackSet, k: &CrackSet) -> CostValue {
        self.delta_term(h, k) + alpha(h, k).scale(self.params.lambda + self.mu_eff())
    }

    pub fn stability_threshold(&self, energy: f64) -> f64 {
        self.stability_tolerance * (1.0 + energy.abs())
    }

    /// `E(t,K') + D(base,K')`.
    pub fn objective(&self, t: f64, base: &CrackSet, k: &CrackSet) -> Result<f64> {
        Ok(self.energy(t, k)? + self.big_d(base, k).to_f64())
    }

    /// Edges that a single augmentation of `k` may add.
    fn augmentations(&self, k: &CrackSet) -> Vec<usize> {
        match &self.competitors {
            CompetitorSpec::Subsets { .. } => self.pool.iter().copied().filter(|&e| !k.contains(e)).collect(),
            CompetitorSpec::PathPrefixes { paths, .. } => {
                let mut out: Vec<usize> = paths.iter().filter_map(|p| p.iter().copied().find(|&e| !k.contains(e))).collect();
                out.sort_unstable();
                out.dedup();
                out
            }
        }
    }

    /// Every competitor of `k` (including `k`) in deterministic order.
    pub fn enumerate_competitors(&self, k: &CrackSet) -> Result<Vec<CrackSet>> {
        match &self.competitors {
            CompetitorSpec::Subsets { budget } => {
                let free: Vec<usize> = self.pool.iter().copied().filter(|&e| !k.contains(e)).collect();
                let count = binomial_sum(free.len(), *budget);
                if count > self.max_competitors as u128 {
                    return Err(Error::CompetitorOverflow { count, cap: self.max_competitors });
                }
                let mut out = Vec::with_capacity(count as usize);
                for j in 0..=(*budget).min(free.len()) {
                    for s in free.iter().copied().combinations(j) {
                        out.push(k.with_edges(s));
                    }
                }
                Ok(out)
            }
            CompetitorSpec::PathPrefixes { paths, budget } => {
                let fronts: Vec<Vec<usize>> =
                    paths.iter().map(|p| p.iter().copied().filter(|&e| !k.contains(e)).collect()).collect();
                let mut out = Vec::new();
                let mut seen = HashSet::new();
                let mut take = vec![0usize; fronts.len()];
                loop {
                    let s = fronts.iter().zip(&take).flat_map(|(f, &j)| f[..j].iter().copied());
                    let c = k.with_edges(s);
                    if seen.insert(c.bits().clone()) {
                        out.push(c);
                        if out.len() > self.max_competitors {
                            return Err(Error::CompetitorOverflow { count: out.len() as u128, cap: self.max_competitors });
                        }
                    }
                    // Odometer over (j_1, …, j_m) with Σ j ≤ budget and j_i ≤ |front_i|.
                    let mut i = 0;
                    loop {
                        if i == take.len() {
                            out.sort_by(|a, b| a.tie_cmp(b));
                            return Ok(out);
                        }
                        let used: usize = take.iter().sum();
                        if take[i] < fronts[i].len() && used < *budget {
                            take[i] += 1;
                            break;
                        }
                        take[i] = 0;
                        i += 1;
                    }
                }
            }
        }
    }

    fn scan(&self, t: f64, base: &CrackSet) -> Result<Scan> {
        match self.search {
            SearchMode::Exhaustive => {
                let states = self.enumerate_competitors(base)?;
                let mut entries = Vec::with_capacity(states.len());
                for k in states {
                    let v = self.objective(t, base, &k)?;
                    entries.push((k, v));
                }
                Ok(Scan { entries })
            }
            SearchMode::Greedy => self.greedy_scan(t, base),
        }
    }

    fn greedy_scan(&self, t: f64, base: &CrackSet) -> Result<Scan> {
        let budget = self.competitors.budget();
        let mut entries = vec![(base.clone(), self.objective(t, base, base)?)];
        let mut seen: HashSet<FixedBitSet> = HashSet::from([base.bits().clone()]);
        let mut value_of = |k: &CrackSet, entries: &mut Vec<(CrackSet, f64)>| -> Result<f64> {
            if seen.insert(k.bits().clone()) {
                let v = self.objective(t, base, k)?;
                entries.push((k.clone(), v));
                Ok(v)
            } else {
                Ok(entries.iter().find(|(s, _)| s == k).unwrap().1)
            }
        };
        if budget == 0 {
            return Ok(Scan { entries });
        }
        for seed in self.augmentations(base) {
            let mut cur = base.with_edges([seed]);
            value_of(&cur, &mut entries)?;
            for _ in 1..budget {
                let mut next: Option<(CrackSet, f64)> = None;
                for e in self.augmentations(&cur) {
                    let cand = cur.with_edges([e]);
                    let v = value_of(&cand, &mut entries)?;
                    let better = match &next {
                        None => true,
                        Some((bk, bv)) => v < *bv || (v == *bv && cand.tie_cmp(bk).is_lt()),
                    };
                    if better {
                        next = Some((cand, v));
                    }
                }
                match next {
                    Some((k, _)) => cur = k,
                    None => break,
                }
            }
        }
        Ok(Scan { entries })
    }

    /// `R(t,K) = E(t,K) − min_{K'} (E(t,K') + D(K,K'))` and the argmin set `M(t,K)`.
    pub fn residual_stability(&self, t: f64, k: &CrackSet) -> Result<StabilityReport> {
        let scan = self.scan(t, k)?;
        let energy = self.energy(t, k)?;
        let best = scan.argmin();
        let min = scan.entries[best].1;
        assert!(min <= energy, "competitor K' = K is admissible, so min ≤ E(t,K)");
        let residual = energy - min;
        let threshold = self.stability_threshold(energy);
        let mut minimizers: Vec<CrackSet> =
            scan.entries.iter().filter(|(_, v)| *v <= min + threshold).map(|(s, _)| s.clone()).collect();
        minimizers.sort_by(|a, b| a.tie_cmp(b));
        Ok(StabilityReport { residual, energy, minimizers, examined: scan.entries.len(), stable: residual <= threshold })
    }

    /// One step of the scheme: argmin of `E(t,K) + d(K_prev,K) + δ(K_prev,K)`.
    pub fn incremental_step(&self, t: f64, k_prev: &CrackSet) -> Result<StepOutcome> {
        let scan = self.scan(t, k_prev)?;
        let best = scan.argmin();
        let (state, objective) = scan.entries[best].clone();
        Ok(StepOutcome { state, objective, examined: scan.entries.len() })
    }

    /// `Trc(t, θ)` of a finite chain: `Σ_n [R(t,θ_{n−1}) + Δ(θ_{n−1},θ_n) + (λ+μ)α(θ_{n−1},θ_n)]`.
    pub fn trc_chain(&self, t: f64, chain: &[CrackSet]) -> Result<CostValue> {
        let mut acc = 0.0;
        for w in chain.windows(2) {
            let hop = self.hop_weight(&w[0], &w[1]);
            let Some(hop) = hop.finite() else { return Ok(CostValue::Infinite) };
            let r = self.residual_stability(t, &w[0])?.residual;
            acc += r + hop;
        }
        Ok(CostValue::Finite(acc))
    }

    /// `c(t,K₋,K₊)`: minimal transition cost over chains in `[K₋, K₊]`.
    pub fn jump_cost(&self, t: f64, k_minus: &CrackSet, k_plus: &CrackSet) -> Result<JumpCostResult> {
        jump::jump_cost(self, t, k_minus, k_plus, None)
    }

    /// As [`jump_cost`](Self::jump_cost) with intermediate states restricted by `allowed`.
    pub fn jump_cost_restricted(
        &self,
        t: f64,
        k_minus: &CrackSet,
        k_plus: &CrackSet,
        allowed: &dyn Fn(&CrackSet) -> bool,
    ) -> Result<JumpCostResult> {
        jump::jump_cost(self, t, k_minus, k_plus, Some(allowed))
    }
}
