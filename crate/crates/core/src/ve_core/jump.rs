use serde::{Deserialize, Serialize};

use super::RisInstance;
use crate::dissipation::{alpha, CostValue};
use crate::error::{Error, Result};
use crate::geometry::CrackSet;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HopLedger {
    /// `Δ` of the hop (zero in energetic mode).
    pub delta: f64,
    pub alpha: usize,
    /// `R(t,·)` at the hop's starting state.
    pub r_from: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    Sliding,
    Viscous,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub kind: SegmentKind,
    /// Chain indices of the first and last state of the segment.
    pub from: usize,
    pub to: usize,
    /// Hops `n` (from `θ_{n−1}` to `θ_n`) inside a viscous segment with `θ_n ∉ M(t,θ_{n−1})`.
    pub violations: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct TransitionDecomposition {
    /// `R(t,θ_n)` for every state of the chain.
    pub residuals: Vec<f64>,
    pub segments: Vec<Segment>,
}

#[derive(Clone, Debug)]
pub struct JumpCostResult {
    pub cost: CostValue,
    pub chain: Vec<CrackSet>,
    pub hops: Vec<HopLedger>,
}

struct Node {
    cost: f64,
    chain: Vec<u32>,
}

fn better(cost: f64, chain: &[u32], than: &Node) -> bool {
    cost < than.cost
        || (cost == than.cost && (chain.len() < than.chain.len() || (chain.len() == than.chain.len() && chain < &than.chain[..])))
}

/// Minimal-cost chain through the interval lattice `[K₋, K₊]`: a DAG over bitmasks of the gap
/// `K₊ ∖ K₋`, processed in increasing mask order so every predecessor is final before it is
/// expanded. The hop `u → v` weighs `R(t,u) + Δ(u,v) + (λ+μ)α(u,v)`.
pub(super) fn jump_cost(
    inst: &RisInstance,
    t: f64,
    k_minus: &CrackSet,
    k_plus: &CrackSet,
    allowed: Option<&dyn Fn(&CrackSet) -> bool>,
) -> Result<JumpCostResult> {
    k_minus.check_same_mesh(k_plus)?;
    if !k_minus.is_subset(k_plus) {
        return Ok(JumpCostResult { cost: CostValue::Infinite, chain: Vec::new(), hops: Vec::new() });
    }
    let gap = k_plus.difference(k_minus).edge_vec();
    if gap.len() > inst.lattice_cap {
        return Err(Error::LatticeCapExceeded { gap: gap.len(), cap: inst.lattice_cap });
    }
    let size = 1usize << gap.len();
    let full = (size - 1) as u32;
    let state = |m: u32| k_minus.with_edges(gap.iter().enumerate().filter(|(i, _)| m >> i & 1 == 1).map(|(_, &e)| e));
    let mut states: Vec<Option<CrackSet>> = vec![None; size];
    let mut residual: Vec<Option<f64>> = vec![None; size];
    let mut best: Vec<Option<Node>> = (0..size).map(|_| None).collect();
    best[0] = Some(Node { cost: 0.0, chain: vec![0] });

    for u in 0..full {
        let Some(node) = best[u as usize].take() else { continue };
        if states[u as usize].is_none() {
            states[u as usize] = Some(state(u));
        }
        let su = states[u as usize].clone().unwrap();
        if u != 0 {
            if let Some(ok) = allowed {
                if !ok(&su) {
                    best[u as usize] = Some(node);
                    continue;
                }
            }
        }
        let ru = match residual[u as usize] {
            Some(r) => r,
            None => {
                let r = inst.residual_stability(t, &su)?.residual;
                residual[u as usize] = Some(r);
                r
            }
        };
        let comp = full ^ u;
        let mut s = comp;
        while s != 0 {
            let v = u | s;
            s = (s - 1) & comp;
            if states[v as usize].is_none() {
                states[v as usize] = Some(state(v));
            }
            let sv = states[v as usize].as_ref().unwrap();
            if v != full {
                if let Some(ok) = allowed {
                    if !ok(sv) {
                        continue;
                    }
                }
            }
            let w = ru + inst.hop_weight(&su, sv).value();
            let cost = node.cost + w;
            let mut chain = node.chain.clone();
            chain.push(v);
            let replace = match &best[v as usize] {
                None => true,
                Some(cur) => better(cost, &chain, cur),
            };
            if replace {
                best[v as usize] = Some(Node { cost, chain });
            }
        }
        best[u as usize] = Some(node);
    }

    let node = best[full as usize].take().expect("the direct hop always reaches K₊");
    let chain: Vec<CrackSet> = node.chain.iter().map(|&m| states[m as usize].clone().unwrap_or_else(|| state(m))).collect();
    let hops = node
        .chain
        .windows(2)
        .zip(chain.windows(2))
        .map(|(m, s)| HopLedger {
            delta: inst.delta_term(&s[0], &s[1]).value(),
            alpha: alpha(&s[0], &s[1]).value() as usize,
            r_from: residual[m[0] as usize].unwrap(),
        })
        .collect();
    Ok(JumpCostResult { cost: CostValue::Finite(node.cost), chain, hops })
}

/// Splits a chain into sliding segments (hops between stable states) and viscous runs, and
/// checks the pure-jump recursion `θ_n ∈ M(t,θ_{n−1})` on the viscous runs. A chain with a
/// single hop is one sliding segment.
pub fn decompose_transition(inst: &RisInstance, t: f64, chain: &[CrackSet]) -> Result<TransitionDecomposition> {
    let mut residuals = Vec::with_capacity(chain.len());
    let mut stable = Vec::with_capacity(chain.len());
    for k in chain {
        let rep = inst.residual_stability(t, k)?;
        residuals.push(rep.residual);
        stable.push(rep.stable);
    }
    let hops = chain.len().saturating_sub(1);
    if hops == 0 {
        return Ok(TransitionDecomposition { residuals, segments: Vec::new() });
    }
    if hops == 1 {
        let seg = Segment { kind: SegmentKind::Sliding, from: 0, to: 1, violations: Vec::new() };
        return Ok(TransitionDecomposition { residuals, segments: vec![seg] });
    }
    let mut segments: Vec<Segment> = Vec::new();
    for n in 1..=hops {
        let kind = if stable[n - 1] && stable[n] { SegmentKind::Sliding } else { SegmentKind::Viscous };
        let mut violations = Vec::new();
        if kind == SegmentKind::Viscous {
            let prev = &chain[n - 1];
            let min = inst.energy(t, prev)? - residuals[n - 1];
            let value = inst.objective(t, prev, &chain[n])?;
            if value > min + inst.stability_threshold(inst.energy(t, prev)?) {
                violations.push(n);
            }
        }
        match segments.last_mut() {
            Some(seg) if seg.kind == kind => {
                seg.to = n;
                seg.violations.extend(violations);
            }
            _ => segments.push(Segment { kind, from: n - 1, to: n, violations }),
        }
    }
    Ok(TransitionDecomposition { residuals, segments })
}
