//! JSON archive of a run: configuration echo, resolved mesh and load, per-step ledger, jumps,
//! audits and the optional Griffith report.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::config::{RunConfig, Setup, Tolerances, SCHEMA};
use crate::elastic::BoundaryLoad;
use crate::error::{Error, Result};
use crate::evolution::{
    component_bound_check, gronwall_check, one_step_estimate_check, power_bound_check, var_d, BoundCheck,
    ComponentBoundReport, DiscreteEvolution, JumpRecord, StepRecord, TimePartition,
};
use crate::geometry::{mesh_io, CrackSet};
use crate::griffith::GriffithReport;
use crate::ve_core::{audit_balance, audit_jump_conditions, BalanceReport, JumpConditionReport, Mode};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepEntry {
    pub edges: Vec<usize>,
    #[serde(flatten)]
    pub record: StepRecord,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpEntry {
    pub index: usize,
    pub t: f64,
    pub left: Vec<usize>,
    pub at: Vec<usize>,
    pub right: Vec<usize>,
    pub magnitude: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditSummary {
    pub tolerances: Tolerances,
    pub balance: BalanceReport,
    pub jump_conditions: JumpConditionReport,
    pub components: ComponentBoundReport,
    pub power_bound: BoundCheck,
    pub gronwall: BoundCheck,
    pub one_step: BoundCheck,
    /// `Var_d` summed over steps and in closed form.
    pub var_d: [f64; 2],
    /// Largest `R − ε_stab` over steps that are not detected jumps.
    pub stability_excess: f64,
    pub verdicts: Vec<Verdict>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Archive {
    pub schema: String,
    pub config: RunConfig,
    pub mesh: String,
    pub load: BoundaryLoad,
    pub partition: Vec<f64>,
    pub mode: Mode,
    pub steps: Vec<StepEntry>,
    pub jumps: Vec<JumpEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audits: Option<AuditSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub griffith: Option<GriffithReport>,
}

fn jump_entry(j: &JumpRecord) -> JumpEntry {
    JumpEntry {
        index: j.index,
        t: j.t,
        left: j.left.edge_vec(),
        at: j.at.edge_vec(),
        right: j.right.edge_vec(),
        magnitude: j.magnitude,
    }
}

impl Archive {
    /// An archive with no steps (nothing run yet).
    pub fn empty(setup: &Setup) -> Archive {
        Archive {
            schema: SCHEMA.into(),
            config: setup.config.clone(),
            mesh: mesh_io::write_mesh(&setup.mesh),
            load: setup.load.clone(),
            partition: setup.partition.times().to_vec(),
            mode: setup.instance.mode,
            steps: Vec::new(),
            jumps: Vec::new(),
            audits: None,
            griffith: None,
        }
    }

    pub fn from_run(
        setup: &Setup,
        evo: &DiscreteEvolution,
        jumps: &[JumpRecord],
        audits: Option<AuditSummary>,
        griffith: Option<GriffithReport>,
    ) -> Archive {
        let steps = evo
            .states
            .iter()
            .zip(&evo.ledger)
            .map(|(k, r)| StepEntry { edges: k.edge_vec(), record: r.clone() })
            .collect();
        Archive {
            partition: evo.partition.times().to_vec(),
            mode: evo.mode,
            steps,
            jumps: jumps.iter().map(jump_entry).collect(),
            audits,
            griffith,
            ..Archive::empty(setup)
        }
    }

    /// Rebuilds the setup from the embedded mesh and load.
    pub fn setup(&self) -> Result<Setup> {
        let mesh = Arc::new(mesh_io::parse_mesh(&self.mesh)?);
        Setup::from_parts(&self.config, mesh, self.load.clone())
    }

    pub fn evolution(&self, setup: &Setup) -> Result<DiscreteEvolution> {
        if self.steps.is_empty() {
            return Err(Error::Archive("archive holds no steps".into()));
        }
        let partition = TimePartition::from_times(self.partition.clone())?;
        if partition.times().len() != self.steps.len() {
            return Err(Error::Archive("step count does not match the partition".into()));
        }
        let states = self
            .steps
            .iter()
            .map(|s| CrackSet::from_edges(&setup.mesh, s.edges.iter().copied()))
            .collect::<Result<Vec<_>>>()?;
        let ledger = self.steps.iter().map(|s| s.record.clone()).collect();
        Ok(DiscreteEvolution { partition, states, ledger, mode: self.mode })
    }

    pub fn jump_records(&self, setup: &Setup) -> Result<Vec<JumpRecord>> {
        let set = |e: &[usize]| CrackSet::from_edges(&setup.mesh, e.iter().copied());
        self.jumps
            .iter()
            .map(|j| {
                Ok(JumpRecord { index: j.index, t: j.t, left: set(&j.left)?, at: set(&j.at)?, right: set(&j.right)?, magnitude: j.magnitude })
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| Error::Archive(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Archive> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Archive(e.to_string()))?;
        match value.get("schema").and_then(|s| s.as_str()) {
            Some(SCHEMA) => {}
            Some(other) => {
                return Err(Error::Archive(format!("schema version mismatch: found '{other}', this build reads '{SCHEMA}'")))
            }
            None => return Err(Error::Archive("missing schema tag".into())),
        }
        serde_json::from_value(value).map_err(|e| Error::Archive(e.to_string()))
    }
}

pub fn save_archive(archive: &Archive, path: &Path) -> Result<()> {
    std::fs::write(path, archive.to_json()?)?;
    Ok(())
}

pub fn load_archive(path: &Path) -> Result<Archive> {
    Archive::from_json(&std::fs::read_to_string(path)?)
}

/// All audits of a run. Failures are recorded as verdicts, never raised.
pub fn compute_audits(setup: &Setup, evo: &DiscreteEvolution, jumps: &[JumpRecord]) -> Result<AuditSummary> {
    let inst = &setup.instance;
    let tol = setup.config.tolerances.clone();
    let balance = audit_balance(evo, inst)?;
    let jump_conditions = audit_jump_conditions(evo, Some(jumps), inst)?;
    let components = component_bound_check(evo, inst);
    let power_bound = power_bound_check(evo, inst);
    let gronwall = gronwall_check(evo, inst);
    let one_step = one_step_estimate_check(evo, inst);
    let (vs, ve) = var_d(evo, inst.params.lambda);
    let jump_steps: Vec<usize> = jumps.iter().map(|j| j.index).collect();
    let stability_excess = evo
        .ledger
        .iter()
        .enumerate()
        .filter(|(i, _)| !jump_steps.contains(i))
        .map(|(_, r)| r.residual - inst.stability_threshold(r.energy))
        .fold(f64::NEG_INFINITY, f64::max);

    let v = |name: &str, pass: bool, detail: String| Verdict { name: name.into(), pass, detail };
    let verdicts = vec![
        v(
            "balance_forms",
            balance.max_form_difference < 1e-12,
            format!("max |form difference| = {:e}", balance.max_form_difference),
        ),
        v(
            "balance_residual",
            balance.max_abs_residual <= tol.balance + balance.max_quadrature_error,
            format!(
                "max |residual| = {:e}, quadrature error = {:e}, tolerance = {:e}",
                balance.max_abs_residual, balance.max_quadrature_error, tol.balance
            ),
        ),
        v(
            "upper_estimate",
            balance.min_upper_margin >= -tol.balance,
            format!("min margin over quadrature error = {:e}", balance.min_upper_margin),
        ),
        v(
            "stability_off_jumps",
            stability_excess <= 0.0,
            format!("max R - eps_stab = {:e}", stability_excess),
        ),
        v(
            "jump_conditions",
            jump_conditions.max_abs <= tol.balance,
            format!("{} jumps, max |identity residual| = {:e}", jump_conditions.rows.len(), jump_conditions.max_abs),
        ),
        v(
            "component_bound",
            components.violations.is_empty(),
            format!("bound {:.6}, min slack {:.6}", components.bound, components.min_slack),
        ),
        v(
            "power_bound",
            power_bound.violations.is_empty(),
            format!("{} samples, min slack {:e}", power_bound.samples, power_bound.min_slack),
        ),
        v("gronwall", gronwall.violations.is_empty(), format!("min slack {:e}", gronwall.min_slack)),
        v("one_step_estimate", one_step.violations.is_empty(), format!("min slack {:e}", one_step.min_slack)),
        v(
            "var_d_explicit",
            (vs - ve).abs() <= 1e-12 * (1.0 + ve.abs()),
            format!("summed {vs:.12}, closed form {ve:.12}"),
        ),
        v("irreversibility", evo.is_monotone(), String::new()),
    ];
    Ok(AuditSummary {
        tolerances: tol,
        balance,
        jump_conditions,
        components,
        power_bound,
        gronwall,
        one_step,
        var_d: [vs, ve],
        stability_excess,
        verdicts,
    })
}
