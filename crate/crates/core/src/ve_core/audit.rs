use serde::{Deserialize, Serialize};

use super::RisInstance;
use crate::error::{Error, Result};
use crate::evolution::{jump_record, DiscreteEvolution, JumpRecord};
use crate::geometry::{h1_diff, CrackSet};

/// `c` between two states; `None` when the lattice is over the cap.
fn cost_or_none(inst: &RisInstance, t: f64, a: &CrackSet, b: &CrackSet) -> Result<Option<f64>> {
    match inst.jump_cost(t, a, b) {
        Ok(r) => Ok(Some(r.cost.to_f64())),
        Err(Error::LatticeCapExceeded { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// `Jmp_c`: `c(t,K(t−),K(t)) + c(t,K(t),K(t+))` summed over the jump records.
pub fn jump_variation(jumps: &[JumpRecord], inst: &RisInstance) -> Result<f64> {
    let mut total = 0.0;
    for j in jumps {
        total += inst.jump_cost(j.t, &j.left, &j.at)?.cost.to_f64();
        total += inst.jump_cost(j.t, &j.at, &j.right)?.cost.to_f64();
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BalanceRow {
    pub t: f64,
    pub energy: f64,
    /// `H¹(K(t) ∖ K(0))`
    pub h1: f64,
    /// `Jmp_c(0,t)`
    pub jump_cost: f64,
    /// `Var_d(0,t)`
    pub var_d: f64,
    /// `Jmp_e(0,t)`
    pub jump_excess: f64,
    /// Trapezoid rule for `∫₀ᵗ ∂ₜE(s,K(s)) ds`.
    pub work: f64,
    /// The same integral evaluated exactly as `Σ [E(tʲ,Kʲ⁻¹) − E(tʲ⁻¹,Kʲ⁻¹)]`.
    pub work_exact: f64,
    /// `E + H¹ + Jmp_c − E₀ − work`
    pub residual: f64,
    /// `E + Var_d + Jmp_e − E₀ − work`
    pub residual_alt: f64,
    /// `Σ |work_exact − work|` over the steps so far.
    pub quadrature_error: f64,
    /// `E₀ + work − (E + H¹ + Jmp_c)`; the upper estimate asks for `≥ −quadrature_error`.
    pub upper_slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BalanceReport {
    pub rows: Vec<BalanceRow>,
    /// `c` per step (0 for steps without change; `None` where the lattice exceeded the cap).
    pub step_costs: Vec<Option<f64>>,
    pub max_abs_residual: f64,
    pub max_form_difference: f64,
    pub max_quadrature_error: f64,
    /// Smallest `upper_slack + quadrature_error`.
    pub min_upper_margin: f64,
    pub notes: Vec<String>,
}

/// Energy-dissipation balance along the run with every changing step treated as a jump.
pub fn audit_balance(evo: &DiscreteEvolution, inst: &RisInstance) -> Result<BalanceReport> {
    let lambda = inst.params.lambda;
    let k0 = &evo.states[0];
    let e0 = evo.ledger[0].energy;
    let mut rows = Vec::with_capacity(evo.ledger.len());
    let mut step_costs = vec![Some(0.0)];
    let mut notes = Vec::new();
    let (mut jmp_c, mut var_d, mut jmp_e, mut work, mut work_exact, mut quad) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for (i, r) in evo.ledger.iter().enumerate() {
        if i > 0 {
            let prev = &evo.ledger[i - 1];
            let tau = r.t - prev.t;
            let w = 0.5 * tau * (prev.power + r.power_prev);
            let we = r.energy_prev - prev.energy;
            work += w;
            work_exact += we;
            quad += (we - w).abs();
            var_d += r.d;
            let c = if evo.states[i] == evo.states[i - 1] {
                Some(0.0)
            } else {
                let c = cost_or_none(inst, r.t, &evo.states[i - 1], &evo.states[i])?;
                if c.is_none() {
                    notes.push(format!("step {i}: jump lattice over the cap, cost omitted"));
                }
                c
            };
            if let Some(c) = c {
                jmp_c += c;
                jmp_e += c - lambda * r.alpha as f64;
            }
            step_costs.push(c);
        }
        let h1 = h1_diff(k0, &evo.states[i]);
        let residual = r.energy + h1 + jmp_c - e0 - work;
        let residual_alt = r.energy + var_d + jmp_e - e0 - work;
        rows.push(BalanceRow {
            t: r.t,
            energy: r.energy,
            h1,
            jump_cost: jmp_c,
            var_d,
            jump_excess: jmp_e,
            work,
            work_exact,
            residual,
            residual_alt,
            quadrature_error: quad,
            upper_slack: -residual,
        });
    }
    let max_abs_residual = rows.iter().map(|r| r.residual.abs()).fold(0.0, f64::max);
    let max_form_difference = rows.iter().map(|r| (r.residual - r.residual_alt).abs()).fold(0.0, f64::max);
    let min_upper_margin = rows.iter().map(|r| r.upper_slack + r.quadrature_error).fold(f64::INFINITY, f64::min);
    Ok(BalanceReport { rows, step_costs, max_abs_residual, max_form_difference, max_quadrature_error: quad, min_upper_margin, notes })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpConditionRow {
    pub index: usize,
    pub t: f64,
    /// `E(t,K(t−)) − E(t,K(t)) − H¹(K(t)∖K(t−)) − c(t,K(t−),K(t))`
    pub left: f64,
    /// `E(t,K(t)) − E(t,K(t+)) − H¹(K(t+)∖K(t)) − c(t,K(t),K(t+))`
    pub right: f64,
    /// `E(t,K(t−)) − E(t,K(t+)) − H¹(K(t+)∖K(t−)) − c(t,K(t−),K(t+))`
    pub across: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpConditionReport {
    pub rows: Vec<JumpConditionRow>,
    pub max_abs: f64,
}

fn identity(inst: &RisInstance, t: f64, a: &CrackSet, b: &CrackSet) -> Result<f64> {
    let c = inst.jump_cost(t, a, b)?.cost.to_f64();
    Ok(inst.energy(t, a)? - inst.energy(t, b)? - h1_diff(a, b) - c)
}

/// Residuals of the three jump identities at the given jumps (all changing steps if `None`).
pub fn audit_jump_conditions(
    evo: &DiscreteEvolution,
    jumps: Option<&[JumpRecord]>,
    inst: &RisInstance,
) -> Result<JumpConditionReport> {
    let owned: Vec<JumpRecord>;
    let jumps = match jumps {
        Some(j) => j,
        None => {
            owned = evo.changing_steps().into_iter().map(|i| jump_record(evo, i)).collect();
            &owned
        }
    };
    let mut rows = Vec::with_capacity(jumps.len());
    for j in jumps {
        rows.push(JumpConditionRow {
            index: j.index,
            t: j.t,
            left: identity(inst, j.t, &j.left, &j.at)?,
            right: identity(inst, j.t, &j.at, &j.right)?,
            across: identity(inst, j.t, &j.left, &j.right)?,
        });
    }
    let max_abs = rows.iter().flat_map(|r| [r.left.abs(), r.right.abs(), r.across.abs()]).fold(0.0, f64::max);
    Ok(JumpConditionReport { rows, max_abs })
}
