//! Run configuration: a TOML document with fixed sections; unknown keys are rejected.
//!
//! ```toml
//! mesh = "builtin:two-well"          # or a path to a mesh file
//! lambda = 0.1
//! mu = 0.1
//! mode = "ve"                        # or "energetic"
//!
//! [load]
//! profile = "builtin:linear-x"       # or "file:<path>", one value per vertex
//! amplitude = "linear(0, 4)"         # or "table(<path>)" with "t a" rows
//!
//! [partition]
//! steps = 50
//! horizon = 1.0
//!
//! [crack]
//! segments = [[0.5, 0.0, 0.5, 0.25]]
//!
//! [pool]
//! kind = "seeds"                     # "all-interior" | "paths" | "seeds"
//! segments = [[0.5, 0.25, 0.5, 1.0]]
//!
//! [search]
//! mode = "exhaustive"
//! budget = 3
//! ```

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::benchmarks::{builtin_mesh, builtin_profile};
use crate::dissipation::DissipationParams;
use crate::elastic::{Amplitude, BoundaryLoad, FemEnergy};
use crate::error::{Error, Result};
use crate::evolution::{TimePartition, DEFAULT_JUMP_THRESHOLD};
use crate::geometry::{mesh_io, CrackSet, EdgeTag, Mesh, Point2};
use crate::griffith::TipPath;
use crate::ve_core::{
    CompetitorSpec, Mode, RisInstance, SearchMode, DEFAULT_BUDGET, DEFAULT_LATTICE_CAP, DEFAULT_MAX_COMPETITORS,
    DEFAULT_STABILITY_TOLERANCE,
};

pub const SCHEMA: &str = "ve-fracture/1";
const SEGMENT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    #[serde(default)]
    pub mesh: Option<String>,
    pub lambda: f64,
    pub mu: f64,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default = "default_output")]
    pub output: String,
    pub load: LoadSection,
    #[serde(default)]
    pub partition: PartitionSection,
    #[serde(default)]
    pub crack: EdgeList,
    #[serde(default)]
    pub pool: PoolSection,
    #[serde(default)]
    pub search: SearchSection,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub griffith: Option<GriffithSection>,
}

fn default_mode() -> Mode {
    Mode::Ve
}

fn default_output() -> String {
    "out".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadSection {
    #[serde(default = "default_profile")]
    pub profile: String,
    pub amplitude: String,
}

fn default_profile() -> String {
    "builtin:linear-y".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PartitionSection {
    pub steps: usize,
    pub horizon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
}

impl Default for PartitionSection {
    fn default() -> Self {
        PartitionSection { steps: 50, horizon: 1.0, times: None }
    }
}

/// Edges given by index and/or as straight segments `[x0, y0, x1, y1]` of mesh edges.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EdgeList {
    pub edges: Vec<usize>,
    pub segments: Vec<[f64; 4]>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PoolKind {
    AllInterior,
    Paths,
    Seeds,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PoolSection {
    pub kind: PoolKind,
    /// Seed edges (`seeds`).
    pub edges: Vec<usize>,
    pub segments: Vec<[f64; 4]>,
    /// One segment per tip path, starting at the tip (`paths`).
    pub paths: Vec<[f64; 4]>,
}

impl Default for PoolSection {
    fn default() -> Self {
        PoolSection { kind: PoolKind::Seeds, edges: Vec::new(), segments: Vec::new(), paths: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchSection {
    pub mode: SearchMode,
    pub budget: usize,
    pub max_competitors: usize,
    pub lattice_cap: usize,
}

impl Default for SearchSection {
    fn default() -> Self {
        SearchSection {
            mode: SearchMode::Exhaustive,
            budget: DEFAULT_BUDGET,
            max_competitors: DEFAULT_MAX_COMPETITORS,
            lattice_cap: DEFAULT_LATTICE_CAP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub stability: f64,
    pub solver: f64,
    /// Hausdorff sampling resolution; `min edge / 16` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hausdorff: Option<f64>,
    pub balance: f64,
    pub jump_threshold: f64,
    pub quadrature_order: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            stability: DEFAULT_STABILITY_TOLERANCE,
            solver: crate::elastic::DEFAULT_TOLERANCE,
            hausdorff: None,
            balance: 1e-6,
            jump_threshold: DEFAULT_JUMP_THRESHOLD,
            quadrature_order: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GriffithSection {
    /// Mesh size for the annulus `[2h, 6h]`; the shortest edge when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    pub kkt_tol: f64,
    pub h_steps: usize,
}

impl Default for GriffithSection {
    fn default() -> Self {
        GriffithSection { h: None, kkt_tol: 0.2, h_steps: 1 }
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn read_config(path: &Path) -> Result<RunConfig> {
    parse_config(&std::fs::read_to_string(path)?)
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(s) = &self.schema {
            if s != SCHEMA {
                return Err(Error::Config(format!("unsupported schema '{s}', expected '{SCHEMA}'")));
            }
        }
        if self.mesh.as_deref().is_none_or(str::is_empty) {
            return Err(Error::Config("missing mesh".into()));
        }
        self.params()?;
        if self.search.budget == 0 {
            return Err(Error::Config("search budget must be at least 1".into()));
        }
        if self.search.lattice_cap > 24 {
            return Err(Error::Config("lattice_cap above 24 is not supported".into()));
        }
        let t = &self.tolerances;
        for (name, v) in [("stability", t.stability), ("solver", t.solver), ("balance", t.balance)] {
            if !(v > 0.0) {
                return Err(Error::Config(format!("tolerance '{name}' must be positive")));
            }
        }
        if !(t.jump_threshold >= 0.0) {
            return Err(Error::Config("jump_threshold must be nonnegative".into()));
        }
        self.partition()?;
        if self.pool.kind == PoolKind::Paths && self.pool.paths.is_empty() {
            return Err(Error::Config("pool kind 'paths' needs at least one path".into()));
        }
        Ok(())
    }

    pub fn params(&self) -> Result<DissipationParams> {
        DissipationParams { lambda: self.lambda, mu: self.mu, quadrature_order: self.tolerances.quadrature_order }.validated()
    }

    pub fn partition(&self) -> Result<TimePartition> {
        match &self.partition.times {
            Some(times) => TimePartition::from_times(times.clone()),
            None => TimePartition::uniform(self.partition.horizon, self.partition.steps),
        }
    }
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

pub fn load_mesh(spec: &str, base: &Path) -> Result<Mesh> {
    match spec.strip_prefix("builtin:") {
        Some(name) => builtin_mesh(name),
        None => mesh_io::read_mesh(&resolve(base, spec)),
    }
}

fn parse_numbers(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>().map_err(|_| Error::Parse { line: i + 1, message: format!("malformed number '{s}'") }))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn parse_amplitude(spec: &str, base: &Path) -> Result<Amplitude> {
    let spec = spec.trim();
    let inner = |name: &str| spec.strip_prefix(name).and_then(|s| s.trim().strip_prefix('(')).and_then(|s| s.strip_suffix(')'));
    if let Some(args) = inner("linear") {
        let v: Vec<&str> = args.split(',').map(str::trim).collect();
        if v.len() != 2 {
            return Err(Error::Config(format!("linear amplitude needs two arguments, got '{spec}'")));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| Error::Config(format!("malformed number '{s}' in amplitude")));
        let a = Amplitude::Linear { c0: num(v[0])?, c1: num(v[1])? };
        a.validate()?;
        return Ok(a);
    }
    if let Some(file) = inner("table") {
        let rows = parse_numbers(&std::fs::read_to_string(resolve(base, file.trim()))?)?;
        if rows.iter().any(|r| r.len() != 2) {
            return Err(Error::Config("amplitude table rows must be 't a'".into()));
        }
        let a = Amplitude::Table { times: rows.iter().map(|r| r[0]).collect(), values: rows.iter().map(|r| r[1]).collect() };
        a.validate()?;
        return Ok(a);
    }
    Err(Error::Config(format!("amplitude must be linear(c0, c1) or table(<file>), got '{spec}'")))
}

pub fn load_profile(spec: &str, mesh: &Mesh, base: &Path) -> Result<Vec<f64>> {
    if let Some(name) = spec.strip_prefix("builtin:") {
        return builtin_profile(name, mesh);
    }
    let file = spec.strip_prefix("file:").unwrap_or(spec);
    let rows = parse_numbers(&std::fs::read_to_string(resolve(base, file))?)?;
    Ok(rows.into_iter().flatten().collect())
}

fn segment_points(s: &[f64; 4]) -> (Point2, Point2) {
    (Point2::new(s[0], s[1]), Point2::new(s[2], s[3]))
}

fn collect_edges(mesh: &Mesh, list: &EdgeList) -> Result<Vec<usize>> {
    let mut out = list.edges.clone();
    for s in &list.segments {
        let (p, q) = segment_points(s);
        let found = mesh.edges_on_segment(p, q, SEGMENT_TOL);
        if found.is_empty() {
            return Err(Error::Config(format!("segment {s:?} contains no mesh edge")));
        }
        out.extend(found);
    }
    if let Some(&e) = out.iter().find(|&&e| e >= mesh.num_edges()) {
        return Err(Error::EdgeOutOfRange { index: e, edges: mesh.num_edges() });
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Everything needed to run and audit a configuration.
pub struct Setup {
    pub config: RunConfig,
    pub mesh: Arc<Mesh>,
    pub load: BoundaryLoad,
    pub fem: Arc<FemEnergy>,
    pub instance: RisInstance,
    pub k0: CrackSet,
    pub partition: TimePartition,
    pub paths: Vec<TipPath>,
}

impl Setup {
    /// Resolves files relative to `base`.
    pub fn from_config(config: &RunConfig, base: &Path) -> Result<Setup> {
        config.validate()?;
        let mesh = load_mesh(config.mesh.as_deref().unwrap(), base)?;
        let profile = load_profile(&config.load.profile, &mesh, base)?;
        let amplitude = parse_amplitude(&config.load.amplitude, base)?;
        let partition = config.partition()?;
        let load = BoundaryLoad::new(&mesh, profile, amplitude, partition.horizon())?;
        Self::from_parts(config, Arc::new(mesh), load)
    }

    /// Builds from an already resolved mesh and load (as stored in archives).
    pub fn from_parts(config: &RunConfig, mesh: Arc<Mesh>, load: BoundaryLoad) -> Result<Setup> {
        config.validate()?;
        let params = config.params()?;
        let partition = config.partition()?;
        let fem = Arc::new(FemEnergy::new(mesh.clone(), load.clone())?.with_tolerance(config.tolerances.solver));
        let k0 = CrackSet::from_edges(&mesh, collect_edges(&mesh, &config.crack)?)?;
        let budget = config.search.budget;
        let mut paths = Vec::new();
        let (pool, competitors) = match config.pool.kind {
            PoolKind::AllInterior => {
                let pool = (0..mesh.num_edges()).filter(|&e| mesh.edge(e).tag == EdgeTag::Interior).collect();
                (pool, CompetitorSpec::Subsets { budget })
            }
            PoolKind::Seeds => (
                collect_edges(&mesh, &EdgeList { edges: config.pool.edges.clone(), segments: config.pool.segments.clone() })?,
                CompetitorSpec::Subsets { budget },
            ),
            PoolKind::Paths => {
                for s in &config.pool.paths {
                    let (p, q) = segment_points(s);
                    paths.push(TipPath::new(&k0, mesh.path_along_segment(p, q, SEGMENT_TOL))?);
                }
                let edge_paths = paths.iter().map(|p| p.edges.clone()).collect();
                (Vec::new(), CompetitorSpec::PathPrefixes { paths: edge_paths, budget })
            }
        };
        let mut instance = RisInstance::new(fem.clone(), pool, params, competitors)?
            .with_search(config.search.mode)
            .with_mode(config.mode);
        instance.stability_tolerance = config.tolerances.stability;
        instance.max_competitors = config.search.max_competitors;
        instance.lattice_cap = config.search.lattice_cap;
        Ok(Setup { config: config.clone(), mesh, load, fem, instance, k0, partition, paths })
    }

    /// Annulus mesh size for the Griffith report.
    pub fn griffith_h(&self) -> f64 {
        self.config.griffith.as_ref().and_then(|g| g.h).unwrap_or_else(|| self.mesh.min_edge_length())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "mesh = \"builtin:unit-square\"\nlambda = 0.1\nmu = 0.2\n[load]\namplitude = \"linear(0, 1)\"\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.search.budget, 3);
        assert_eq!(c.partition.steps, 50);
        assert_eq!(c.mode, Mode::Ve);
        assert_eq!(c.load.profile, "builtin:linear-y");
        let s = Setup::from_config(&c, Path::new(".")).unwrap();
        assert_eq!(s.partition.num_steps(), 50);
        assert!(s.k0.is_empty());
    }

    #[test]
    fn rejects_bad_values() {
        let e = parse_config(&MINIMAL.replace("lambda = 0.1", "lambda = 0")).unwrap_err();
        assert!(e.to_string().contains("lambda must be positive"), "{e}");
        let e = parse_config(&MINIMAL.replace("mu = 0.2", "mu = -1")).unwrap_err();
        assert!(e.to_string().contains("mu must be positive"), "{e}");
        let e = parse_config(&MINIMAL.replace("[load]", "bogus_key = 1\n[load]")).unwrap_err();
        assert!(e.to_string().contains("bogus_key"), "{e}");
        let e = parse_config(&MINIMAL.replace("mesh = \"builtin:unit-square\"\n", "")).unwrap_err();
        assert!(e.to_string().contains("missing mesh"), "{e}");
        assert!(parse_config(&MINIMAL.replace("0.1", "0.1.2")).is_err());
    }

    #[test]
    fn amplitude_specs() {
        let base = Path::new(".");
        assert_eq!(parse_amplitude("linear(0.5, -2)", base).unwrap(), Amplitude::Linear { c0: 0.5, c1: -2.0 });
        assert!(parse_amplitude("quadratic(1)", base).is_err());
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.txt"), "# t a\n0 0\n1 2\n2 2.5\n").unwrap();
        let a = parse_amplitude("table(a.txt)", dir.path()).unwrap();
        assert_eq!(a.value(1.5), 2.25);
    }
}
