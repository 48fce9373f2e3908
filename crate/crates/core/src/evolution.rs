//! Time stepping of the incremental scheme, jump detection and the a-priori bound checks.

use serde::{Deserialize, Serialize};

use crate::dissipation::alpha;
use crate::error::{Error, Result};
use crate::geometry::{connected_components, default_hausdorff_resolution, h1_diff, hausdorff, CrackSet};
use crate::ve_core::{Mode, RisInstance};

pub const DEFAULT_JUMP_THRESHOLD: f64 = 10.0;

/// `0 = t⁰ < t¹ < … < tᴺ = T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TimePartition {
    times: Vec<f64>,
}

impl TryFrom<Vec<f64>> for TimePartition {
    type Error = Error;
    fn try_from(times: Vec<f64>) -> Result<Self> {
        TimePartition::from_times(times)
    }
}

impl From<TimePartition> for Vec<f64> {
    fn from(p: TimePartition) -> Vec<f64> {
        p.times
    }
}

impl TimePartition {
    pub fn uniform(horizon: f64, steps: usize) -> Result<Self> {
        if steps == 0 || !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::Config("partition needs N ≥ 1 steps and a positive horizon".into()));
        }
        let mut times: Vec<f64> = (0..=steps).map(|i| horizon * i as f64 / steps as f64).collect();
        times[steps] = horizon;
        Self::from_times(times)
    }

    pub fn from_times(times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 || times[0] != 0.0 {
            return Err(Error::Config("partition must start at 0 and have at least two times".into()));
        }
        if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("partition times must increase strictly".into()));
        }
        Ok(TimePartition { times })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn num_steps(&self) -> usize {
        self.times.len() - 1
    }

    /// `τ`, the largest increment.
    pub fn step(&self) -> f64 {
        self.times.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Index `i` with `tⁱ ≤ t < tⁱ⁺¹` (the last index for `t ≥ T`).
    pub fn index_at(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s <= t).saturating_sub(1).min(self.num_steps())
    }
}

/// Ledger of step `i`; step 0 records the initial state with zero increments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: f64,
    /// `E(tⁱ, Kⁱ)`
    pub energy: f64,
    /// `∂ₜE(tⁱ, Kⁱ)`
    pub power: f64,
    /// `E(tⁱ, Kⁱ⁻¹)`
    pub energy_prev: f64,
    /// `∂ₜE(tⁱ, Kⁱ⁻¹)`
    pub power_prev: f64,
    /// `d(Kⁱ⁻¹, Kⁱ)`
    pub d: f64,
    /// `Δ(Kⁱ⁻¹, Kⁱ)`
    pub delta: f64,
    /// `α(Kⁱ⁻¹, Kⁱ)`
    pub alpha: usize,
    /// `R(tⁱ, Kⁱ)`
    pub residual: f64,
    pub competitors: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteEvolution {
    pub partition: TimePartition,
    pub states: Vec<CrackSet>,
    pub ledger: Vec<StepRecord>,
    pub mode: Mode,
}

impl DiscreteEvolution {
    /// Piecewise-constant interpolant: `Kⁱ` on `[tⁱ, tⁱ⁺¹)`.
    pub fn state_at(&self, t: f64) -> &CrackSet {
        &self.states[self.partition.index_at(t)]
    }

    /// Steps `i ≥ 1` with `Kⁱ ≠ Kⁱ⁻¹`.
    pub fn changing_steps(&self) -> Vec<usize> {
        (1..self.states.len()).filter(|&i| self.states[i] != self.states[i - 1]).collect()
    }

    pub fn is_monotone(&self) -> bool {
        self.states.windows(2).all(|w| w[0].is_subset(&w[1]))
    }
}

pub fn run_scheme(inst: &RisInstance, partition: &TimePartition, k0: &CrackSet) -> Result<DiscreteEvolution> {
    if !std::sync::Arc::ptr_eq(k0.mesh(), inst.mesh()) {
        return Err(Error::MeshMismatch);
    }
    let times = partition.times();
    let (e0, p0) = (inst.energy(times[0], k0)?, inst.power(times[0], k0)?);
    let rep0 = inst.residual_stability(times[0], k0)?;
    let mut ledger = vec![StepRecord {
        t: times[0],
        energy: e0,
        power: p0,
        energy_prev: e0,
        power_prev: p0,
        d: 0.0,
        delta: 0.0,
        alpha: 0,
        residual: rep0.residual,
        competitors: rep0.examined,
    }];
    let mut states = vec![k0.clone()];
    for &t in &times[1..] {
        let prev = states.last().unwrap();
        let step = inst.incremental_step(t, prev)?;
        let k = step.state;
        let rep = inst.residual_stability(t, &k)?;
        ledger.push(StepRecord {
            t,
            energy: rep.energy,
            power: inst.power(t, &k)?,
            energy_prev: inst.energy(t, prev)?,
            power_prev: inst.power(t, prev)?,
            d: inst.d(prev, &k).value(),
            delta: inst.delta_term(prev, &k).value(),
            alpha: alpha(prev, &k).value() as usize,
            residual: rep.residual,
            competitors: step.examined,
        });
        states.push(k);
    }
    Ok(DiscreteEvolution { partition: partition.clone(), states, ledger, mode: inst.mode })
}

/// The scheme with `δ ≡ 0`.
pub fn energetic_mode(inst: &RisInstance, partition: &TimePartition, k0: &CrackSet) -> Result<DiscreteEvolution> {
    run_scheme(&inst.clone().with_mode(Mode::Energetic), partition, k0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct JumpRecord {
    pub index: usize,
    pub t: f64,
    /// `K(t−)`, `K(t)`, `K(t+)`.
    pub left: CrackSet,
    pub at: CrackSet,
    pub right: CrackSet,
    /// `d` of the hop.
    pub magnitude: f64,
}

/// Jump record for step `i`: left limit `Kⁱ⁻¹`, value and right limit `Kⁱ`.
pub fn jump_record(evo: &DiscreteEvolution, i: usize) -> JumpRecord {
    JumpRecord {
        index: i,
        t: evo.ledger[i].t,
        left: evo.states[i - 1].clone(),
        at: evo.states[i].clone(),
        right: evo.states[i].clone(),
        magnitude: evo.ledger[i].d,
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Steps whose dissipation exceeds `threshold` times the median dissipation of the other
/// changing steps.
pub fn detect_jumps(evo: &DiscreteEvolution, threshold: f64) -> Vec<JumpRecord> {
    let changing = evo.changing_steps();
    changing
        .iter()
        .filter(|&&i| {
            let others: Vec<f64> = changing.iter().filter(|&&j| j != i).map(|&j| evo.ledger[j].d).collect();
            evo.ledger[i].d > threshold * median(others)
        })
        .map(|&i| jump_record(evo, i))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComponentBoundReport {
    pub initial_components: usize,
    pub bound: f64,
    /// Component count of `Kⁱ` per step.
    pub counts: Vec<usize>,
    pub min_slack: f64,
    pub violations: Vec<usize>,
}

/// `#components(K(t)) ≤ h + exp(C_P T)(E(0,K₀) + 1)/(λ+μ)`.
pub fn component_bound_check(evo: &DiscreteEvolution, inst: &RisInstance) -> ComponentBoundReport {
    let h = connected_components(&evo.states[0]).len();
    let cp = inst.model.power_constant();
    let nucleation = inst.params.lambda + inst.mu_eff();
    let bound = h as f64 + (cp * evo.partition.horizon()).exp() * (evo.ledger[0].energy + 1.0) / nucleation;
    let counts: Vec<usize> = evo.states.iter().map(|k| connected_components(k).len()).collect();
    let violations = (0..counts.len()).filter(|&i| counts[i] as f64 > bound).collect();
    let min_slack = counts.iter().map(|&c| bound - c as f64).fold(f64::INFINITY, f64::min);
    ComponentBoundReport { initial_components: h, bound, counts, min_slack, violations }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub samples: usize,
    /// Smallest `rhs − lhs` over the samples.
    pub min_slack: f64,
    pub violations: Vec<usize>,
}

/// `|∂ₜE(t,K)| ≤ C_P (E(t,K) + 1)` at every `(t,K)` in the ledger.
pub fn power_bound_check(evo: &DiscreteEvolution, inst: &RisInstance) -> BoundCheck {
    let cp = inst.model.power_constant();
    let mut out = BoundCheck { samples: 0, min_slack: f64::INFINITY, violations: Vec::new() };
    for (i, r) in evo.ledger.iter().enumerate() {
        for (p, e) in [(r.power, r.energy), (r.power_prev, r.energy_prev)] {
            let slack = cp * (e + 1.0) - p.abs();
            out.samples += 1;
            out.min_slack = out.min_slack.min(slack);
            if slack < -1e-12 * (1.0 + p.abs()) && out.violations.last() != Some(&i) {
                out.violations.push(i);
            }
        }
    }
    out
}

/// `E(tⁱ,Kⁱ) ≤ (E(0,K₀) + 1) exp(C_P tⁱ) − 1`.
pub fn gronwall_check(evo: &DiscreteEvolution, inst: &RisInstance) -> BoundCheck {
    let cp = inst.model.power_constant();
    let e0 = evo.ledger[0].energy;
    let mut out = BoundCheck { samples: evo.ledger.len(), min_slack: f64::INFINITY, violations: Vec::new() };
    for (i, r) in evo.ledger.iter().enumerate() {
        let rhs = (e0 + 1.0) * (cp * r.t).exp() - 1.0;
        let slack = rhs - r.energy;
        out.min_slack = out.min_slack.min(slack);
        if slack < -1e-9 * (1.0 + rhs.abs()) {
            out.violations.push(i);
        }
    }
    out
}

/// `E(tⁱ,Kⁱ) + d + δ ≤ E(tⁱ,Kⁱ⁻¹)` per step (`K' = Kⁱ⁻¹` is a competitor).
pub fn one_step_estimate_check(evo: &DiscreteEvolution, inst: &RisInstance) -> BoundCheck {
    let mu = inst.mu_eff();
    let mut out = BoundCheck { samples: evo.ledger.len() - 1, min_slack: f64::INFINITY, violations: Vec::new() };
    for (i, r) in evo.ledger.iter().enumerate().skip(1) {
        let slack = r.energy_prev - (r.energy + r.d + r.delta + mu * r.alpha as f64);
        out.min_slack = out.min_slack.min(slack);
        if slack < -1e-12 * (1.0 + r.energy_prev.abs()) {
            out.violations.push(i);
        }
    }
    out
}

/// `Var_d` as the sum of step dissipations, and its closed form `H¹(K(T)∖K(0)) + λ Σα`.
pub fn var_d(evo: &DiscreteEvolution, lambda: f64) -> (f64, f64) {
    let summed = evo.ledger.iter().map(|r| r.d).sum();
    let alphas: usize = evo.ledger.iter().map(|r| r.alpha).sum();
    let explicit = h1_diff(&evo.states[0], evo.states.last().unwrap()) + lambda * alphas as f64;
    (summed, explicit)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinementRow {
    pub steps_coarse: usize,
    pub steps_fine: usize,
    pub t: f64,
    pub hausdorff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinementReport {
    pub rows: Vec<RefinementRow>,
    /// Largest distance per consecutive pair of refinements.
    pub max_per_pair: Vec<f64>,
}

/// Runs the scheme on uniform partitions with the given step counts (increasing) and
/// compares interpolants pairwise at `samples` equispaced times.
pub fn refine_study(
    inst: &RisInstance,
    k0: &CrackSet,
    horizon: f64,
    step_counts: &[usize],
    samples: usize,
) -> Result<RefinementReport> {
    let runs = step_counts
        .iter()
        .map(|&n| run_scheme(inst, &TimePartition::uniform(horizon, n)?, k0))
        .collect::<Result<Vec<_>>>()?;
    let res = default_hausdorff_resolution(inst.mesh());
    let mut rows = Vec::new();
    let mut max_per_pair = Vec::new();
    for w in 0..runs.len().saturating_sub(1) {
        let mut worst: f64 = 0.0;
        for s in 0..=samples {
            let t = horizon * s as f64 / samples.max(1) as f64;
            let h = hausdorff(runs[w].state_at(t), runs[w + 1].state_at(t), res).value;
            worst = worst.max(h);
            rows.push(RefinementRow { steps_coarse: step_counts[w], steps_fine: step_counts[w + 1], t, hausdorff: h });
        }
        max_per_pair.push(worst);
    }
    Ok(RefinementReport { rows, max_per_pair })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_validation() {
        assert!(TimePartition::from_times(vec![0.0, 0.5, 0.5]).is_err());
        assert!(TimePartition::from_times(vec![0.1, 0.5]).is_err());
        let p = TimePartition::uniform(2.0, 4).unwrap();
        assert_eq!(p.times(), &[0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(p.step(), 0.5);
        assert_eq!(p.index_at(0.0), 0);
        assert_eq!(p.index_at(0.7), 1);
        assert_eq!(p.index_at(1.0), 2);
        assert_eq!(p.index_at(9.0), 4);
    }

    #[test]
    fn partition_serde_validates() {
        let p = TimePartition::uniform(1.0, 2).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, "[0.0,0.5,1.0]");
        assert_eq!(serde_json::from_str::<TimePartition>(&s).unwrap(), p);
        assert!(serde_json::from_str::<TimePartition>("[0.0,0.0]").is_err());
    }

    #[test]
    fn median_leave_one_out() {
        assert_eq!(median(vec![]), 0.0);
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
