use std::str::FromStr;

use super::archive::Archive;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    Energy,
    Dissipation,
    Tips,
    Balance,
}

impl PlotKind {
    pub const ALL: [PlotKind; 4] = [PlotKind::Energy, PlotKind::Dissipation, PlotKind::Tips, PlotKind::Balance];

    pub fn name(self) -> &'static str {
        match self {
            PlotKind::Energy => "energy",
            PlotKind::Dissipation => "dissipation",
            PlotKind::Tips => "tips",
            PlotKind::Balance => "balance",
        }
    }
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PlotKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown plot kind '{s}' (energy, dissipation, tips, balance)")))
    }
}

fn csv_err(e: impl std::fmt::Display) -> Error {
    Error::Archive(format!("csv: {e}"))
}

/// CSV table for one plot kind. `energy` and `balance` need audits, `tips` a Griffith report.
pub fn emit_plot_data(archive: &Archive, kind: PlotKind) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let missing = |what: &str| Error::Archive(format!("archive has no {what}; plot kind '{}' needs it", kind.name()));
    match kind {
        PlotKind::Energy => {
            let audits = archive.audits.as_ref().ok_or_else(|| missing("audits"))?;
            w.write_record(["t", "E", "work", "balance_residual"]).map_err(csv_err)?;
            for r in &audits.balance.rows {
                w.serialize((r.t, r.energy, r.work, r.residual)).map_err(csv_err)?;
            }
        }
        PlotKind::Dissipation => {
            w.write_record(["t", "edges", "E", "power", "d", "Delta", "alpha", "R", "competitors"]).map_err(csv_err)?;
            for s in &archive.steps {
                let r = &s.record;
                w.serialize((r.t, s.edges.len(), r.energy, r.power, r.d, r.delta, r.alpha, r.residual, r.competitors))
                    .map_err(csv_err)?;
            }
        }
        PlotKind::Tips => {
            let g = archive.griffith.as_ref().ok_or_else(|| missing("Griffith report"))?;
            w.write_record(["t", "tip", "sigma", "sigmadot", "kappa2", "slack", "compl"]).map_err(csv_err)?;
            for s in &g.samples {
                w.serialize((s.t, s.tip, s.sigma, s.sigmadot, s.kappa2, s.slack, s.compl)).map_err(csv_err)?;
            }
        }
        PlotKind::Balance => {
            let audits = archive.audits.as_ref().ok_or_else(|| missing("audits"))?;
            w.write_record([
                "t",
                "E",
                "H1",
                "jump_cost",
                "var_d",
                "jump_excess",
                "work",
                "work_exact",
                "residual",
                "residual_alt",
                "quadrature_error",
                "upper_slack",
            ])
            .map_err(csv_err)?;
            for r in &audits.balance.rows {
                w.serialize((
                    r.t,
                    r.energy,
                    r.h1,
                    r.jump_cost,
                    r.var_d,
                    r.jump_excess,
                    r.work,
                    r.work_exact,
                    r.residual,
                    r.residual_alt,
                    r.quadrature_error,
                    r.upper_slack,
                ))
                .map_err(csv_err)?;
            }
        }
    }
    let bytes = w.into_inner().map_err(csv_err)?;
    String::from_utf8(bytes).map_err(csv_err)
}
