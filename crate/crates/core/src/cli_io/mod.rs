//! Configuration, archives, CSV output and the command-line surface.

pub mod archive;
pub mod config;
pub mod plot;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use archive::{compute_audits, load_archive, save_archive, Archive, AuditSummary, Verdict};
pub use config::{parse_config, read_config, RunConfig, Setup, SCHEMA};
pub use plot::{emit_plot_data, PlotKind};

use crate::error::{Error, Result};
use crate::evolution::{detect_jumps, run_scheme, DiscreteEvolution, JumpRecord};
use crate::geometry::Point2;
use crate::griffith::{check_kkt, griffith_report, GriffithReport, TipPath};
use crate::ve_core::{Mode, SearchMode};

/// Everything produced by one run of a configuration.
pub struct RunOutput {
    pub setup: Setup,
    pub evolution: DiscreteEvolution,
    pub jumps: Vec<JumpRecord>,
    pub archive: Archive,
}

/// Runs, audits and archives a configuration. Audit failures end up in the archive.
pub fn execute(config: &RunConfig, base: &Path) -> Result<RunOutput> {
    let setup = Setup::from_config(config, base)?;
    let evolution = run_scheme(&setup.instance, &setup.partition, &setup.k0)?;
    let jumps = detect_jumps(&evolution, config.tolerances.jump_threshold);
    let audits = compute_audits(&setup, &evolution, &jumps)?;
    let griffith = match &config.griffith {
        Some(g) if !setup.paths.is_empty() => {
            Some(griffith_report(&evolution, &setup.paths, &setup.fem, setup.griffith_h(), g.h_steps)?)
        }
        _ => None,
    };
    let archive = Archive::from_run(&setup, &evolution, &jumps, Some(audits), griffith);
    Ok(RunOutput { setup, evolution, jumps, archive })
}

/// Writes `archive.json` and one CSV per available plot kind.
pub fn write_outputs(archive: &Archive, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = vec![dir.join("archive.json")];
    save_archive(archive, &written[0])?;
    for kind in PlotKind::ALL {
        if kind == PlotKind::Tips && archive.griffith.is_none() {
            continue;
        }
        let path = dir.join(format!("{}.csv", kind.name()));
        std::fs::write(&path, emit_plot_data(archive, kind)?)?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Parser, Debug)]
#[command(name = "ve-fracture", version, about = "Quasistatic crack growth with viscous-energetic jumps on P1 meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a configuration and write the archive and CSV tables.
    Run {
        config: PathBuf,
        /// Output directory (overrides the config).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Recompute and print all audits of an archive.
    Audit { archive: PathBuf },
    /// Optimal transition between two archived states.
    Jumpcost {
        archive: PathBuf,
        /// Evaluation time; defaults to the time of the right step.
        #[arg(long)]
        time: Option<f64>,
        /// Step index of K₋.
        #[arg(long)]
        left: usize,
        /// Step index of K₊.
        #[arg(long)]
        right: usize,
    },
    /// Griffith report (tip positions, κ², KKT residuals).
    Griffith {
        archive: PathBuf,
        /// Tip paths `x0,y0,x1,y1` separated by `;`; defaults to the configured paths.
        #[arg(long)]
        paths: Option<String>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run two configurations and compare their first jumps.
    Compare { config_a: PathBuf, config_b: PathBuf },
    /// Run a configuration for each value of one parameter.
    Sweep {
        config: PathBuf,
        /// lambda | mu | budget | steps | mode | search
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',')]
        values: Vec<String>,
    },
}

/// Parses `argv` (including the program name), dispatches, prints the summary and returns
/// the exit code.
pub fn cli_dispatch<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(summary) => {
            print!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}

fn config_base(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn first_jump(evo: &DiscreteEvolution, jumps: &[JumpRecord]) -> Option<usize> {
    jumps.first().map(|j| j.index).or_else(|| evo.changing_steps().first().copied())
}

fn verdict_lines(out: &mut String, audits: &AuditSummary) {
    for v in &audits.verdicts {
        let _ = writeln!(out, "{} {:<20} {}", if v.pass { "PASS" } else { "FAIL" }, v.name, v.detail);
    }
}

fn run_summary(out: &mut String, run: &RunOutput) {
    let evo = &run.evolution;
    let last = evo.ledger.last().unwrap();
    let _ = writeln!(
        out,
        "steps {}  mode {:?}  final |K| {}  final E {:.10}",
        evo.partition.num_steps(),
        evo.mode,
        evo.states.last().unwrap().len(),
        last.energy
    );
    let _ = writeln!(out, "changing steps {:?}", evo.changing_steps());
    for j in &run.jumps {
        let _ = writeln!(out, "jump at step {} (t = {}): +{} edges, d = {:.6}", j.index, j.t, j.right.len() - j.left.len(), j.magnitude);
    }
    if let Some(a) = &run.archive.audits {
        verdict_lines(out, a);
    }
}

fn parse_paths(spec: &str) -> Result<Vec<[f64; 4]>> {
    spec.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            let v = s
                .split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|_| Error::Config(format!("malformed number '{x}' in --paths"))))
                .collect::<Result<Vec<_>>>()?;
            <[f64; 4]>::try_from(v).map_err(|_| Error::Config(format!("path '{s}' needs four numbers")))
        })
        .collect()
}

fn apply_param(cfg: &mut RunConfig, param: &str, value: &str) -> Result<()> {
    let num = || value.parse::<f64>().map_err(|_| Error::Config(format!("malformed number '{value}' for {param}")));
    let int = || value.parse::<usize>().map_err(|_| Error::Config(format!("malformed integer '{value}' for {param}")));
    match param {
        "lambda" => cfg.lambda = num()?,
        "mu" => cfg.mu = num()?,
        "budget" => cfg.search.budget = int()?,
        "steps" => {
            cfg.partition.steps = int()?;
            cfg.partition.times = None;
        }
        "mode" => {
            cfg.mode = match value {
                "ve" => Mode::Ve,
                "energetic" => Mode::Energetic,
                _ => return Err(Error::Config(format!("unknown mode '{value}'"))),
            }
        }
        "search" => {
            cfg.search.mode = match value {
                "exhaustive" => SearchMode::Exhaustive,
                "greedy" => SearchMode::Greedy,
                _ => return Err(Error::Config(format!("unknown search mode '{value}'"))),
            }
        }
        _ => return Err(Error::Config(format!("unknown sweep parameter '{param}'"))),
    }
    cfg.validate()
}

fn dispatch(command: Command) -> Result<String> {
    let mut out = String::new();
    match command {
        Command::Run { config, output } => {
            let cfg = read_config(&config)?;
            let run = execute(&cfg, &config_base(&config))?;
            let dir = output.unwrap_or_else(|| PathBuf::from(&cfg.output));
            let written = write_outputs(&run.archive, &dir)?;
            run_summary(&mut out, &run);
            for p in written {
                let _ = writeln!(out, "wrote {}", p.display());
            }
        }
        Command::Audit { archive } => {
            let a = load_archive(&archive)?;
            let setup = a.setup()?;
            let evo = a.evolution(&setup)?;
            let jumps = a.jump_records(&setup)?;
            let audits = compute_audits(&setup, &evo, &jumps)?;
            let b = &audits.balance;
            let _ = writeln!(
                out,
                "balance: max |residual| {:e}, form difference {:e}, quadrature error {:e}",
                b.max_abs_residual, b.max_form_difference, b.max_quadrature_error
            );
            for n in &b.notes {
                let _ = writeln!(out, "note: {n}");
            }
            verdict_lines(&mut out, &audits);
        }
        Command::Jumpcost { archive, time, left, right } => {
            let a = load_archive(&archive)?;
            let setup = a.setup()?;
            let evo = a.evolution(&setup)?;
            let n = evo.states.len();
            if left >= n || right >= n {
                return Err(Error::Config(format!("step index out of range (archive has {n} states)")));
            }
            let t = time.unwrap_or(evo.ledger[right].t);
            let (km, kp) = (&evo.states[left], &evo.states[right]);
            let res = setup.instance.jump_cost(t, km, kp)?;
            let _ = writeln!(out, "t = {t}  |K-| = {}  |K+| = {}", km.len(), kp.len());
            let _ = writeln!(out, "c = {}", res.cost.to_f64());
            for (i, (s, h)) in res.chain.iter().skip(1).zip(&res.hops).enumerate() {
                let _ = writeln!(
                    out,
                    "hop {}: R(from) {:.3e}  Delta {:.6e}  alpha {}  -> {:?}",
                    i + 1,
                    h.r_from,
                    h.delta,
                    h.alpha,
                    s.edge_vec()
                );
            }
            if !res.cost.is_infinite() && !res.chain.is_empty() {
                let dec = crate::ve_core::decompose_transition(&setup.instance, t, &res.chain)?;
                for s in &dec.segments {
                    let _ = writeln!(out, "{:?} segment: states {}..={}  violations {:?}", s.kind, s.from, s.to, s.violations);
                }
            }
        }
        Command::Griffith { archive, paths, output } => {
            let a = load_archive(&archive)?;
            let setup = a.setup()?;
            let evo = a.evolution(&setup)?;
            let tip_paths = match paths {
                Some(spec) => parse_paths(&spec)?
                    .iter()
                    .map(|s| {
                        let edges = setup.mesh.path_along_segment(Point2::new(s[0], s[1]), Point2::new(s[2], s[3]), 1e-9);
                        TipPath::new(&setup.k0, edges)
                    })
                    .collect::<Result<Vec<_>>>()?,
                None => setup.paths.clone(),
            };
            if tip_paths.is_empty() {
                return Err(Error::Config("no tip paths given or configured".into()));
            }
            let gcfg = setup.config.griffith.clone().unwrap_or_default();
            let report: GriffithReport = griffith_report(&evo, &tip_paths, &setup.fem, setup.griffith_h(), gcfg.h_steps)?;
            let tol = gcfg.kkt_tol;
            let kkt = check_kkt(&report, tol);
            let _ = writeln!(out, "annulus [{}, {}], {} samples", report.r_in, report.r_out, report.samples.len());
            let pf = |b: bool| if b { "PASS" } else { "FAIL" };
            let _ = writeln!(out, "{} sigmadot >= 0          min {:e}", pf(kkt.a), kkt.min_sigmadot);
            let _ = writeln!(out, "{} 1 - kappa^2 >= 0       min {:e}", pf(kkt.b), kkt.min_slack);
            let _ = writeln!(out, "{} complementarity       max {:e}", pf(kkt.c), kkt.max_compl);
            if let Some(dir) = output {
                let mut with = a.clone();
                with.griffith = Some(report);
                std::fs::create_dir_all(&dir)?;
                let path = dir.join("tips.csv");
                std::fs::write(&path, emit_plot_data(&with, PlotKind::Tips)?)?;
                let _ = writeln!(out, "wrote {}", path.display());
            }
        }
        Command::Compare { config_a, config_b } => {
            let mut rows = Vec::new();
            for path in [&config_a, &config_b] {
                let cfg = read_config(path)?;
                let run = execute(&cfg, &config_base(path))?;
                rows.push((path.display().to_string(), run));
            }
            for (name, run) in &rows {
                let evo = &run.evolution;
                let _ = writeln!(
                    out,
                    "{name}: mode {:?}, first change at step {:?}, {} jumps, final E {:.10}",
                    evo.mode,
                    first_jump(evo, &run.jumps),
                    run.jumps.len(),
                    evo.ledger.last().unwrap().energy
                );
            }
            let (fa, fb) = (first_jump(&rows[0].1.evolution, &rows[0].1.jumps), first_jump(&rows[1].1.evolution, &rows[1].1.jumps));
            let verdict = match (fa, fb) {
                (Some(a), Some(b)) if a < b => "first configuration changes earlier",
                (Some(a), Some(b)) if a > b => "second configuration changes earlier",
                (Some(_), Some(_)) => "both change at the same step",
                (Some(_), None) => "only the first configuration changes",
                (None, Some(_)) => "only the second configuration changes",
                (None, None) => "neither configuration changes",
            };
            let _ = writeln!(out, "{verdict}");
        }
        Command::Sweep { config, param, values } => {
            let base_cfg = read_config(&config)?;
            let _ = writeln!(out, "{param:>12} {:>10} {:>6} {:>16} {:>12}", "first", "jumps", "final E", "balance");
            for v in &values {
                let mut cfg = base_cfg.clone();
                apply_param(&mut cfg, &param, v)?;
                let run = execute(&cfg, &config_base(&config))?;
                let bal = run.archive.audits.as_ref().map_or(f64::NAN, |a| a.balance.max_abs_residual);
                let first = first_jump(&run.evolution, &run.jumps).map_or("-".to_string(), |i| i.to_string());
                let _ = writeln!(
                    out,
                    "{v:>12} {first:>10} {:>6} {:>16.10} {bal:>12.3e}",
                    run.jumps.len(),
                    run.evolution.ledger.last().unwrap().energy
                );
            }
        }
    }
    Ok(out)
}
