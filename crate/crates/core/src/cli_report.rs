use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::complex_pullback::{
    growth_constant, linear_growth, poincare_envelope, points_at_relative_distance, pullback_poincare_angle,
    random_monotone_chains, PoincareSample,
};
use crate::error::Error;
use crate::map_model::{AnalyticMap, Fold, Representation};
use crate::polylike_bounds::{construct_extension, julia_containment, unbranched_check, ExtensionConfig};
use crate::real_bounds::{bounds_report, BoundsReport};
use crate::renormalization::{build_tower_until, RenormLevel};

pub const EXIT_CHECKS_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NOT_RENORMALIZABLE: i32 = 3;
pub const EXIT_PRECONDITION: i32 = 4;
pub const EXIT_CONTRACTION: i32 = 5;
pub const EXIT_RUNTIME: i32 = 6;

/// Levels from which the deep-level suites apply.
pub const DEEP_LEVEL: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        CliError { code, message: message.into() }
    }

    fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::new(EXIT_RUNTIME, format!("{}: {e}", path.display()))
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::InvalidMap(_) => EXIT_CONFIG,
            Error::NotRenormalizable { .. } => EXIT_NOT_RENORMALIZABLE,
            Error::ContractionUnattainable { .. } => EXIT_CONTRACTION,
            _ => EXIT_RUNTIME,
        };
        CliError::new(code, e.to_string())
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn default_depth() -> usize {
    6
}
fn default_max_period() -> usize {
    64
}
fn default_max_ratio() -> usize {
    8
}
fn default_epsilon() -> f64 {
    0.05
}
fn default_boundary_points() -> usize {
    64
}
fn default_contraction_samples() -> usize {
    64
}
fn default_grid_nodes() -> usize {
    257
}
fn default_grid_half_width() -> f64 {
    1.5
}
fn default_julia_grid() -> usize {
    64
}
fn default_julia_horizon() -> usize {
    500
}
fn default_julia_backward() -> usize {
    2000
}
fn default_slit_offset() -> f64 {
    1e-7
}
fn default_poincare_chains() -> usize {
    100
}
fn default_poincare_samples() -> usize {
    8
}
fn default_growth_points() -> usize {
    50
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}
fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub polynomial: Option<Vec<f64>>,
    pub folds: Option<Vec<Fold>>,
    pub interval: [f64; 2],
    /// Index of the critical point the tower follows.
    #[serde(default)]
    pub p: usize,
    #[serde(default = "default_depth")]
    pub depth: usize,
    #[serde(default = "default_max_period")]
    pub max_period: usize,
    #[serde(default = "default_max_ratio")]
    pub max_ratio: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_boundary_points")]
    pub boundary_points: usize,
    #[serde(default = "default_contraction_samples")]
    pub contraction_samples: usize,
    #[serde(default = "default_grid_nodes")]
    pub grid_nodes: usize,
    #[serde(default = "default_grid_half_width")]
    pub grid_half_width: f64,
    #[serde(default = "default_julia_grid")]
    pub julia_grid: usize,
    #[serde(default = "default_julia_horizon")]
    pub julia_horizon: usize,
    #[serde(default = "default_julia_backward")]
    pub julia_backward: usize,
    #[serde(default = "default_slit_offset")]
    pub slit_offset: f64,
    #[serde(default = "default_poincare_chains")]
    pub poincare_chains: usize,
    #[serde(default = "default_poincare_samples")]
    pub poincare_samples: usize,
    #[serde(default = "default_growth_points")]
    pub growth_points: usize,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default = "yes")]
    pub cache: bool,
    /// When false, commands needing the tower only read it from the cache.
    #[serde(default = "yes")]
    pub compute: bool,
}

impl RunConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::new(EXIT_CONFIG, format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::new(EXIT_CONFIG, format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: &str| Err(CliError::new(EXIT_CONFIG, format!("config: {m}")));
        if self.polynomial.is_some() == self.folds.is_some() {
            return bad("exactly one of `polynomial` and `folds` is required");
        }
        if self.depth < 1 {
            return bad("depth must be at least 1");
        }
        if !(self.epsilon > 0.0 && self.epsilon < PI / 2.0) {
            return bad("epsilon must lie in (0, pi/2)");
        }
        if !(self.slit_offset > 0.0 && self.grid_half_width > 0.0) {
            return bad("tolerances and widths must be positive");
        }
        if self.boundary_points < 8 || self.grid_nodes < 9 || self.julia_grid < 2 || self.contraction_samples < 4 {
            return bad("sample and grid sizes are too small");
        }
        if self.max_period < 1 || self.max_ratio < 2 {
            return bad("max_period must be at least 1 and max_ratio at least 2");
        }
        Ok(())
    }

    pub fn representation(&self) -> Representation {
        match (&self.polynomial, &self.folds) {
            (Some(c), _) => Representation::Polynomial(c.clone()),
            (None, Some(f)) => Representation::Folds(f.clone()),
            (None, None) => unreachable!("validated"),
        }
    }

    pub fn map(&self) -> CliResult<AnalyticMap> {
        AnalyticMap::new(self.representation(), (self.interval[0], self.interval[1]))
            .map_err(|e| CliError::new(EXIT_CONFIG, e.to_string()))
    }

    pub fn extension_config(&self) -> ExtensionConfig {
        ExtensionConfig {
            boundary_points: self.boundary_points,
            contraction_samples: self.contraction_samples,
            disk_scale: None,
            grid_nodes: self.grid_nodes,
            grid_half_width: self.grid_half_width,
            julia_grid: self.julia_grid,
            julia_horizon: self.julia_horizon,
            slit_offset: self.slit_offset,
        }
    }

    /// Hex digest of everything the tower depends on.
    pub fn cache_key(&self) -> String {
        #[derive(Serialize)]
        struct Key<'a> {
            map: &'a Representation,
            interval: [f64; 2],
            p: usize,
            depth: usize,
            max_period: usize,
            max_ratio: usize,
        }
        let rep = self.representation();
        let key = Key {
            map: &rep,
            interval: self.interval,
            p: self.p,
            depth: self.depth,
            max_period: self.max_period,
            max_ratio: self.max_ratio,
        };
        let text = toml::to_string(&key).expect("key serializes");
        Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Decimal string with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TowerRecord {
    pub key: String,
    /// Why the tower stopped before the requested depth.
    pub stopped: Option<String>,
    pub levels: Vec<RenormLevel>,
}

pub fn cache_path(cfg: &RunConfig) -> PathBuf {
    cfg.out.join("cache").join(format!("tower-{}.toml", &cfg.cache_key()[..16]))
}

fn compute_tower(map: &AnalyticMap, cfg: &RunConfig) -> CliResult<TowerRecord> {
    let (levels, err) = build_tower_until(map, cfg.p, cfg.depth, cfg.max_period, cfg.max_ratio);
    if levels.is_empty() {
        return Err(err.map(CliError::from).unwrap_or_else(|| CliError::new(EXIT_RUNTIME, "empty tower")));
    }
    if let Some(e @ Error::PrecisionExhausted { .. }) = &err {
        return Err(CliError::from(e.clone()));
    }
    Ok(TowerRecord { key: cfg.cache_key(), stopped: err.map(|e| e.to_string()), levels })
}

/// The tower from the cache when allowed and present, otherwise computed (and cached).
pub fn load_tower(map: &AnalyticMap, cfg: &RunConfig) -> CliResult<TowerRecord> {
    let path = cache_path(cfg);
    if cfg.cache && path.exists() {
        let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        let rec: TowerRecord = toml::from_str(&text)
            .map_err(|e| CliError::new(EXIT_RUNTIME, format!("{}: corrupt cache: {e}", path.display())))?;
        if rec.key == cfg.cache_key() {
            return Ok(rec);
        }
    }
    if !cfg.compute {
        return Err(CliError::new(EXIT_PRECONDITION, format!("no cached tower at {} and computing is disabled", path.display())));
    }
    let rec = compute_tower(map, cfg)?;
    if cfg.cache {
        let text = toml::to_string(&rec).map_err(|e| CliError::new(EXIT_RUNTIME, e.to_string()))?;
        write(&path, &text)?;
    }
    Ok(rec)
}

pub fn tower_table(levels: &[RenormLevel]) -> String {
    let mut s = String::from("k,period,p_lo,p_hi,p_len,period_ratio\n");
    for (i, l) in levels.iter().enumerate() {
        let ratio = levels.get(i + 1).map(|n| num(n.period as f64 / l.period as f64)).unwrap_or_default();
        let _ = writeln!(s, "{},{},{},{},{},{}", l.k, l.period, num(l.interval.lo()), num(l.interval.hi()), num(l.interval.len()), ratio);
    }
    s
}

pub struct TowerOutcome {
    pub record: TowerRecord,
    pub table: String,
}

pub fn cmd_tower(cfg: &RunConfig) -> CliResult<TowerOutcome> {
    let map = cfg.map()?;
    let record = load_tower(&map, cfg)?;
    let table = tower_table(&record.levels);
    write(&cfg.out.join("tower.csv"), &table)?;
    Ok(TowerOutcome { record, table })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub k: usize,
    pub check: String,
    pub pass: bool,
    pub value: f64,
}

fn check(k: usize, name: &str, pass: bool, value: f64) -> CheckResult {
    CheckResult { k, check: name.to_string(), pass, value }
}

pub fn bounds_table(report: &BoundsReport) -> String {
    let mut s = String::from("k,crit,quantity,value\n");
    for (k, crit, name, v) in report.rows() {
        let crit = crit.map(|c| c.to_string()).unwrap_or_default();
        let _ = writeln!(s, "{k},{crit},{name},{}", num(v));
    }
    s
}

/// Deep-level real checks; empty when the tower is shallower than [`DEEP_LEVEL`].
pub fn real_checks(report: &BoundsReport) -> Vec<CheckResult> {
    let mut out = Vec::new();
    for s in report.slots.iter().filter(|s| s.k >= DEEP_LEVEL) {
        if let Some(r) = s.scaling_ratio {
            out.push(check(s.k, "scaling_ratio_in_unit_interval", r > 0.0 && r < 1.0, r));
        }
        out.push(check(s.k, "schwarzian_negative", s.schwarzian_max < 0.0, s.schwarzian_max));
        if let Some(m) = s.nesting_margins {
            let min = m.iter().copied().fold(f64::INFINITY, f64::min);
            out.push(check(s.k, "hierarchy_nested", min > 0.0, min));
        }
    }
    out
}

pub struct BoundsOutcome {
    pub report: BoundsReport,
    pub checks: Vec<CheckResult>,
    pub skipped_deep: bool,
}

/// Uses one level beyond `depth` so the deepest reported level has a scaling ratio.
pub fn cmd_bounds(cfg: &RunConfig) -> CliResult<BoundsOutcome> {
    let map = cfg.map()?;
    let lookahead = RunConfig { depth: cfg.depth + 1, ..cfg.clone() };
    let tower = load_tower(&map, &lookahead)?;
    let mut report = bounds_report(&map, &tower.levels);
    report.slots.retain(|s| s.k <= cfg.depth);
    let keep = report.levels.iter().filter(|l| l.k <= cfg.depth).count();
    report.levels.truncate(keep);
    report.boundary_multipliers.truncate(keep);
    write(&cfg.out.join("bounds.csv"), &bounds_table(&report))?;
    let skipped_deep = keep < DEEP_LEVEL;
    Ok(BoundsOutcome { checks: real_checks(&report), report, skipped_deep })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtensionRecord {
    pub k: usize,
    pub period: usize,
    pub disk_scale: f64,
    pub contraction: f64,
    pub verified_contraction: f64,
    pub modulus: f64,
    pub modulus_round: f64,
    pub modulus_grid: f64,
    pub diam_ratio: f64,
    pub beta: f64,
    pub sector_at_u: f64,
    pub unbranched: bool,
    pub unbranched_margin: f64,
    pub boundary_residual: f64,
    pub inner_margin: f64,
    pub modulus_refined: Option<f64>,
}

pub struct ComplexOutcome {
    pub records: Vec<ExtensionRecord>,
    pub modulus_floor: f64,
}

fn polyline_table(u: &[(f64, f64)], v: &[(f64, f64)]) -> String {
    let mut s = String::from("curve,index,x,y\n");
    for (name, pts) in [("U", u), ("V", v)] {
        for (i, (x, y)) in pts.iter().enumerate() {
            let _ = writeln!(s, "{name},{i},{},{}", num(*x), num(*y));
        }
    }
    s
}

fn points_table(pts: &[(f64, f64)]) -> String {
    let mut s = String::from("x,y\n");
    for (x, y) in pts {
        let _ = writeln!(s, "{},{}", num(*x), num(*y));
    }
    s
}

fn extension_table(records: &[ExtensionRecord]) -> String {
    let mut s = String::from(
        "k,period,disk_scale,contraction,verified_contraction,modulus,modulus_round,modulus_grid,diam_ratio,beta,sector_at_u,unbranched,unbranched_margin,boundary_residual,inner_margin,modulus_refined\n",
    );
    for r in records {
        let refined = r.modulus_refined.map(num).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.k,
            r.period,
            num(r.disk_scale),
            num(r.contraction),
            num(r.verified_contraction),
            num(r.modulus),
            num(r.modulus_round),
            num(r.modulus_grid),
            num(r.diam_ratio),
            num(r.beta),
            num(r.sector_at_u),
            r.unbranched,
            num(r.unbranched_margin),
            num(r.boundary_residual),
            num(r.inner_margin),
            refined
        );
    }
    s
}

#[derive(Serialize)]
struct ExtensionDump<'a> {
    extensions: &'a [ExtensionRecord],
}

pub fn cmd_complex_bounds(cfg: &RunConfig, refine: bool) -> CliResult<ComplexOutcome> {
    if cfg.depth < DEEP_LEVEL {
        return Err(CliError::new(EXIT_PRECONDITION, format!("complex bounds need depth >= {DEEP_LEVEL}, got {}", cfg.depth)));
    }
    let map = cfg.map()?;
    let tower = load_tower(&map, cfg)?;
    let levels = &tower.levels;
    if levels.len() < DEEP_LEVEL {
        return Err(CliError::new(
            EXIT_PRECONDITION,
            format!("tower stopped at level {} (need {DEEP_LEVEL}): {}", levels.len(), tower.stopped.clone().unwrap_or_default()),
        ));
    }
    let ext_cfg = cfg.extension_config();
    let mut records = Vec::new();
    for k in DEEP_LEVEL..=levels.len() {
        let level = &levels[k - 1];
        let ext = construct_extension(&map, levels, k, &ext_cfg).map_err(|e| match e {
            Error::ContractionUnattainable { best } => CliError::new(
                EXIT_CONTRACTION,
                format!("level {k}: no disk scale reaches contraction 1/10 (best factor {best:.6}); try more contraction samples or a shallower depth"),
            ),
            e => CliError::new(EXIT_RUNTIME, format!("level {k}: {e}")),
        })?;
        let julia = julia_containment(&map, level, &ext, cfg.julia_grid, cfg.julia_horizon, cfg.julia_backward)
            .map_err(|e| CliError::new(EXIT_RUNTIME, format!("level {k}: {e}")))?;
        let unbranched = unbranched_check(&map, level, &ext, &julia, cfg.grid_nodes)
            .map_err(|e| CliError::new(EXIT_RUNTIME, format!("level {k}: {e}")))?;
        let modulus_refined = if refine {
            let fine = ExtensionConfig { boundary_points: 2 * ext_cfg.boundary_points, disk_scale: Some(ext.disk_scale.scale), ..ext_cfg.clone() };
            let e = construct_extension(&map, levels, k, &fine).map_err(|e| CliError::new(EXIT_RUNTIME, format!("level {k} refined: {e}")))?;
            Some(e.modulus.lower_bound)
        } else {
            None
        };
        let dir = cfg.out.join("polylines");
        write(&dir.join(format!("level_{k}.csv")), &polyline_table(&ext.u.points().iter().map(|z| (z.re, z.im)).collect::<Vec<_>>(), &ext.v_boundary))?;
        write(&dir.join(format!("julia_{k}.csv")), &points_table(&julia.points))?;
        records.push(ExtensionRecord {
            k,
            period: ext.period,
            disk_scale: ext.disk_scale.scale,
            contraction: ext.disk_scale.contraction,
            verified_contraction: ext.disk_scale.verified_contraction,
            modulus: ext.modulus.lower_bound,
            modulus_round: ext.modulus.round,
            modulus_grid: ext.modulus.grid.unwrap_or(0.0),
            diam_ratio: ext.diam_ratio,
            beta: julia.beta,
            sector_at_u: julia.sector_at_u,
            unbranched: unbranched.unbranched,
            unbranched_margin: unbranched.margin,
            boundary_residual: ext.boundary_residual,
            inner_margin: ext.inner_margin,
            modulus_refined,
        });
    }
    write(&cfg.out.join("complex_bounds.csv"), &extension_table(&records))?;
    let dump = toml::to_string(&ExtensionDump { extensions: &records }).map_err(|e| CliError::new(EXIT_RUNTIME, e.to_string()))?;
    write(&cfg.out.join("extensions.toml"), &dump)?;
    let modulus_floor = records.iter().map(|r| r.modulus).fold(f64::INFINITY, f64::min);
    Ok(ComplexOutcome { records, modulus_floor })
}

pub fn complex_checks(records: &[ExtensionRecord]) -> Vec<CheckResult> {
    let mut out = Vec::new();
    for r in records {
        out.push(check(r.k, "extension_modulus_positive", r.modulus > 0.0, r.modulus));
        out.push(check(r.k, "disk_contraction", r.verified_contraction <= 0.1, r.verified_contraction));
        out.push(check(r.k, "unbranched", r.unbranched, r.unbranched_margin));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PullbackFits {
    /// Clipped Poincare pullback constant over random monotone chains of every level.
    pub poincare_k_fit: f64,
    pub poincare_envelope: f64,
    pub poincare_samples: usize,
    /// Linear growth constant of the first slot per deep level.
    pub growth: Vec<GrowthFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthFit {
    pub k: usize,
    pub c: f64,
}

pub fn pullback_fits(map: &AnalyticMap, levels: &[RenormLevel], cfg: &RunConfig) -> CliResult<PullbackFits> {
    let jobs: Vec<_> = levels
        .iter()
        .filter(|l| l.k >= 2)
        .flat_map(|l| random_monotone_chains(l, cfg.poincare_chains, 0xc4a1 + l.k as u64))
        .collect();
    let samples: Vec<PoincareSample> = jobs
        .par_iter()
        .map(|(j, n)| pullback_poincare_angle(map, j, *n, PI / 2.0, cfg.poincare_samples))
        .collect::<crate::Result<_>>()?;
    let envelope = if samples.is_empty() { 0.0 } else { poincare_envelope(&samples) };
    let mut growth = Vec::new();
    for l in levels.iter().filter(|l| l.k >= DEEP_LEVEL) {
        let zs = points_at_relative_distance(&l.involved[0].q0, 0.5, 5.0, cfg.growth_points, 0x9e0 + l.k as u64);
        let s = linear_growth(map, l, 0, &zs)?;
        growth.push(GrowthFit { k: l.k, c: growth_constant(&s) });
    }
    Ok(PullbackFits { poincare_k_fit: envelope.max(0.0), poincare_envelope: envelope, poincare_samples: samples.len(), growth })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TowerSummary {
    pub levels: usize,
    pub stopped: Option<String>,
    pub periods: Vec<usize>,
    pub lengths: Vec<f64>,
}

/// Everything one `report` run produces, serialized as the run summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportBundle {
    pub tower: TowerSummary,
    pub cycle_length_fit_ratio: Option<f64>,
    pub fits: PullbackFits,
    pub extensions: Vec<ExtensionRecord>,
    pub checks: Vec<CheckResult>,
}

impl ReportBundle {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

pub fn cmd_report(cfg: &RunConfig, refine: bool) -> CliResult<ReportBundle> {
    let tower = cmd_tower(cfg)?;
    let bounds = cmd_bounds(cfg)?;
    let complex = cmd_complex_bounds(cfg, refine)?;
    let map = cfg.map()?;
    let levels = &tower.record.levels;
    let fits = pullback_fits(&map, levels, cfg)?;
    let mut checks = bounds.checks;
    checks.extend(complex_checks(&complex.records));
    for g in &fits.growth {
        checks.push(check(g.k, "linear_growth_bounded", g.c <= 100.0, g.c));
    }
    let bundle = ReportBundle {
        tower: TowerSummary {
            levels: levels.len(),
            stopped: tower.record.stopped.clone(),
            periods: levels.iter().map(|l| l.period).collect(),
            lengths: levels.iter().map(|l| l.interval.len()).collect(),
        },
        cycle_length_fit_ratio: bounds.report.cycle_length_fit_ratio,
        fits,
        extensions: complex.records,
        checks,
    };
    let text = toml::to_string_pretty(&bundle).map_err(|e| CliError::new(EXIT_RUNTIME, e.to_string()))?;
    write(&cfg.out.join("report.toml"), &text)?;
    Ok(bundle)
}

#[cfg(test)]
mod tests {
    use super::*;

    const QUAD: &str = "polynomial = [-1.0, 0.0, 1.0]\ninterval = [-1.6180339887498949, 1.6180339887498949]\n";

    #[test]
    fn defaults_fill_in() {
        let cfg = RunConfig::parse(QUAD).unwrap();
        assert_eq!(cfg.depth, 6);
        assert_eq!(cfg.p, 0);
        assert!(cfg.cache && cfg.compute);
        assert_eq!(cfg.grid_nodes, 257);
    }

    #[test]
    fn rejects_bad_configs() {
        for text in [
            "interval = [-1.0, 1.0]\n",
            "polynomial = [0.0, 1.0]\nfolds = []\ninterval = [-1.0, 1.0]\n",
            "polynomial = [-1.0, 0.0, 1.0]\ninterval = [-2.0, 2.0]\nepsilon = 2.0\n",
            "polynomial = [-1.0, 0.0, 1.0]\ninterval = [-2.0, 2.0]\ndepth = 0\n",
            "polynomial = [-1.0, 0.0, 1.0]\ninterval = [-2.0, 2.0]\nwhat = 1\n",
            "polynomial = [-1.0, 0.0,\n",
        ] {
            assert_eq!(RunConfig::parse(text).unwrap_err().code, EXIT_CONFIG, "{text}");
        }
    }

    #[test]
    fn cache_key_tracks_the_map() {
        let a = RunConfig::parse(QUAD).unwrap();
        let mut b = a.clone();
        b.out = PathBuf::from("elsewhere");
        assert_eq!(a.cache_key(), b.cache_key());
        b.polynomial = Some(vec![-1.0000001, 0.0, 1.0]);
        assert_ne!(a.cache_key(), b.cache_key());
        b = a.clone();
        b.depth = 3;
        assert_ne!(a.cache_key(), b.cache_key());
    }

    #[test]
    fn numbers_have_seventeen_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(-2.0), "-2.0000000000000000e0");
        assert_eq!(num(0.1).parse::<f64>().unwrap(), 0.1);
    }
}
