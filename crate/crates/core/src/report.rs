//! Runs and reports: configuration, spectrum caching, analysis and output files.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::action::{Dedup, Injectivity, ProductGroupSpec};
use crate::cache;
use crate::calculus;
use crate::error::{Error, Result};
use crate::presets::Preset;
use crate::rates::{self, BoundaryPolicy, ConcavityViolation, ConditionReport, ContinuityViolation, CosSinReport,
    PositivityReport, Rate, RateEstimate, RateProfile, RegularGrowthReport, ThetaStar, Window};
use crate::specfile;
use crate::spectrum::{self, Binning, SlopeSpectrum};

/// Environment variable naming a shared cache directory.
pub const CACHE_DIR_ENV: &str = "SLOPEGROWTH_CACHE_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SpecSource {
    Preset { preset: Preset },
    File { path: PathBuf },
}

impl SpecSource {
    pub fn load(&self) -> Result<ProductGroupSpec> {
        match self {
            SpecSource::Preset { preset } => preset.spec(),
            SpecSource::File { path } => specfile::load_spec(path),
        }
    }

    pub fn preset(&self) -> Option<Preset> {
        match self {
            SpecSource::Preset { preset } => Some(*preset),
            SpecSource::File { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WindowPolicy {
    TopHalf,
    Fixed { n_lo: u32, n_hi: u32 },
}

impl WindowPolicy {
    pub fn resolve(&self, n_max: u32) -> Result<Window> {
        match *self {
            WindowPolicy::TopHalf => Window::top_half(n_max),
            WindowPolicy::Fixed { n_lo, n_hi } => Window::new(n_lo, n_hi),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CachePolicy {
    Use,
    Rebuild,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub concavity_slack: f64,
    pub cos_sin_slack: f64,
    pub condition_tolerance: f64,
    /// Allowed distance of the estimated `delta_{pi/2}` from its closed form, where one exists.
    pub endpoint_tolerance: f64,
    pub regular_growth_eps: f64,
    pub sandwich_tolerance: f64,
    /// Slope constant of the continuity audit.
    pub lipschitz: f64,
    pub boundary_policy: BoundaryPolicy,
}

impl Tolerances {
    pub fn for_source(source: &SpecSource) -> Self {
        Tolerances {
            concavity_slack: 0.1,
            cos_sin_slack: 0.2,
            condition_tolerance: 0.05,
            endpoint_tolerance: 0.15,
            regular_growth_eps: 0.1,
            sandwich_tolerance: 0.1,
            lipschitz: default_lipschitz(source.preset()),
            boundary_policy: BoundaryPolicy::Sentinel,
        }
    }
}

/// Continuity constants fitted on the reference runs, rounded up.
pub fn default_lipschitz(preset: Option<Preset>) -> f64 {
    match preset {
        Some(Preset::Example31) => 1.0,
        Some(Preset::Example41) => 1.0,
        Some(Preset::Example51 { .. }) => 6.0,
        None => 6.0,
    }
}

/// Fully resolved run parameters; enough to repeat the computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    pub source: SpecSource,
    pub l_max: u32,
    pub binning: Binning,
    pub eps_schedule: Vec<f64>,
    pub grid_points: usize,
    pub window: WindowPolicy,
    pub min_samples: u32,
    pub dedup: Dedup,
    pub jobs: usize,
    pub out_dir: PathBuf,
    pub cache: CachePolicy,
    pub tolerances: Tolerances,
}

impl RunConfig {
    /// Defaults for `source`, with preset-specific depth and schedule.
    pub fn defaults(command: &str, source: SpecSource, injectivity: Injectivity, out_dir: PathBuf) -> Self {
        let preset = source.preset();
        RunConfig {
            command: command.to_string(),
            l_max: preset.map_or(8, |p| p.default_l_max()),
            binning: Binning::default(),
            eps_schedule: preset.map_or(rates::DEFAULT_EPS_SCHEDULE.to_vec(), |p| p.default_eps_schedule()),
            grid_points: rates::DEFAULT_GRID_POINTS,
            window: WindowPolicy::TopHalf,
            min_samples: rates::DEFAULT_MIN_SAMPLES,
            dedup: match injectivity {
                Injectivity::CertifiedInjective => Dedup::Off,
                Injectivity::Unknown => Dedup::On,
            },
            jobs: std::thread::available_parallelism().map_or(1, |n| n.get()),
            out_dir,
            cache: CachePolicy::Use,
            tolerances: Tolerances::for_source(&source),
            source,
        }
    }

    pub fn grid(&self) -> Result<Vec<f64>> {
        rates::uniform_grid(self.grid_points)
    }

    pub fn validate(&self) -> Result<()> {
        self.binning.validate()?;
        rates::validate_schedule(&self.eps_schedule)?;
        self.grid()?;
        if self.l_max == 0 {
            return Err(Error::input("lmax must be positive"));
        }
        Ok(())
    }
}

/// Fails early if `dir` cannot be created or written.
pub fn ensure_writable(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let probe = dir.join(".slopegrowth-write-test");
    fs::write(&probe, b"").map_err(|e| Error::io(&probe, e))?;
    fs::remove_file(&probe).map_err(|e| Error::io(&probe, e))
}

pub fn cache_path(config: &RunConfig, fingerprint: &str) -> PathBuf {
    match std::env::var_os(CACHE_DIR_ENV) {
        Some(dir) => Path::new(&dir).join(format!("spectrum-{fingerprint}.cache")),
        None => config.out_dir.join("spectrum.cache"),
    }
}

/// Loads the cached spectrum if it was built with the same parameters, otherwise
/// computes and stores it. Returns the spectrum and whether the cache was used.
pub fn obtain_spectrum(config: &RunConfig, spec: &ProductGroupSpec) -> Result<(SlopeSpectrum, bool)> {
    let fingerprint = spec.fingerprint();
    let n_max = crate::action::completeness_horizon(spec, config.l_max)?;
    let path = cache_path(config, &fingerprint);
    if config.cache == CachePolicy::Use && path.exists() {
        match cache::load_spectrum_for(&path, &fingerprint) {
            Ok(s) if s.meta.l_max == config.l_max
                && s.binning == config.binning
                && s.n_max == n_max
                && s.meta.dedup == config.dedup =>
            {
                log::info!("using cached spectrum {}", path.display());
                return Ok((s, true));
            }
            Ok(_) => log::info!("cached spectrum {} has other parameters; rebuilding", path.display()),
            Err(e) => log::warn!("ignoring unreadable cache: {e}"),
        }
    }
    log::info!("enumerating to abstract length {} on {} workers", config.l_max, config.jobs);
    let s = spectrum::compute_spectrum(spec, config.l_max, config.binning.clone(), config.dedup, config.jobs, None)?;
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    cache::save_spectrum(&s, &path)?;
    Ok((s, false))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditSummary<T> {
    pub pass: bool,
    /// Hard audits decide the exit status.
    pub hard: bool,
    pub detail: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcavityDetail {
    pub slack: f64,
    pub violation_count: usize,
    /// At most [`MAX_LISTED`] violations, largest gap first.
    pub violations: Vec<ConcavityViolation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityDetail {
    pub lipschitz: f64,
    pub violations: Vec<ContinuityViolation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichDetail {
    pub tolerance: f64,
    pub global: Rate,
    /// Angles whose estimate exceeds the global rate by more than the tolerance plus two stderr.
    pub violations: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Audits {
    pub concavity: AuditSummary<ConcavityDetail>,
    pub continuity: AuditSummary<ContinuityDetail>,
    pub positivity: AuditSummary<PositivityReport>,
    pub regular_growth: AuditSummary<RegularGrowthReport>,
    pub cos_sin: AuditSummary<CosSinReport>,
    pub sandwich: AuditSummary<SandwichDetail>,
    /// Slope counts never decrease with the tolerance.
    pub eps_monotonicity: AuditSummary<Vec<f64>>,
}

impl Audits {
    /// `(name, pass, hard)` for each audit.
    pub fn outcomes(&self) -> Vec<(&'static str, bool, bool)> {
        vec![
            ("concavity", self.concavity.pass, self.concavity.hard),
            ("continuity", self.continuity.pass, self.continuity.hard),
            ("positivity", self.positivity.pass, self.positivity.hard),
            ("regular-growth", self.regular_growth.pass, self.regular_growth.hard),
            ("cos-sin-bound", self.cos_sin.pass, self.cos_sin.hard),
            ("sandwich", self.sandwich.pass, self.sandwich.hard),
            ("eps-monotonicity", self.eps_monotonicity.pass, self.eps_monotonicity.hard),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormulaRow {
    pub theta: f64,
    pub estimate: Rate,
    pub stderr: Option<f64>,
    pub formula: f64,
    /// Gating rows decide the exit status; the others are informational.
    pub gating: bool,
    pub within_tolerance: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormulaTable {
    pub name: String,
    pub tolerance: f64,
    pub rows: Vec<FormulaRow>,
}

impl FormulaTable {
    pub fn gate_passes(&self) -> bool {
        self.rows.iter().filter(|r| r.gating).all(|r| r.within_tolerance)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Ok,
    LowData,
    AuditFailure,
}

impl RunStatus {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunStatus::Ok => 0,
            RunStatus::LowData => 3,
            RunStatus::AuditFailure => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSummary {
    pub fingerprint: String,
    pub canonical_spec: String,
    pub l_max: u32,
    pub horizon: u32,
    pub n_max: u32,
    pub dedup: Dedup,
    pub lambda: f64,
    pub lambda_supplied: bool,
    pub binning: Binning,
    pub totals: Vec<u64>,
    pub skipped: u64,
}

/// Fixed modelling choices, recorded so a report is self-describing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conventions {
    pub base_point: String,
    pub product_metric: String,
    pub estimator_order: String,
    pub slope_condition: String,
}

impl Conventions {
    fn for_binning(b: &Binning) -> Self {
        Conventions {
            base_point: "identity vertex in both factors".into(),
            product_metric: "l2: r = sqrt(d1^2 + d2^2)".into(),
            estimator_order: "smallest usable eps first, then least-squares tail regression in n".into(),
            slope_condition: match b {
                Binning::Angular { .. } => "angular: |theta(g) - theta| <= eps".into(),
                Binning::PaperTan { .. } => {
                    "tangent: |d2/d1 - tan theta| <= eps; at theta = pi/2 the reciprocal d1/d2 <= eps".into()
                }
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: RunConfig,
    pub conventions: Conventions,
    pub spectrum: SpectrumSummary,
    pub window: Window,
    pub global: RateEstimate,
    pub profile: RateProfile,
    pub theta_star: Option<ThetaStar>,
    pub condition: ConditionReport,
    pub audits: Audits,
    pub formula: Option<FormulaTable>,
    pub status: RunStatus,
    pub failures: Vec<String>,
}

/// Maximum number of concavity violations listed in a report.
pub const MAX_LISTED: usize = 50;

/// Interval used by the regular growth check and open band of the positivity audit.
fn preset_band(preset: Option<Preset>, profile: &RateProfile) -> Option<(f64, f64)> {
    match preset {
        Some(Preset::Example31) => Some((FRAC_PI_4, FRAC_PI_4)),
        Some(Preset::Example41) => Some((FRAC_PI_4, 2f64.atan())),
        Some(Preset::Example51 { .. }) => Some((FRAC_PI_4, FRAC_PI_2)),
        None => {
            let finite: Vec<f64> = profile.points.iter().filter(|p| p.usable().is_some()).map(|p| p.theta).collect();
            Some((*finite.first()?, *finite.last()?))
        }
    }
}

fn formula_table(preset: Option<Preset>, profile: &RateProfile, tolerance: f64) -> Result<Option<FormulaTable>> {
    let Some(Preset::Example51 { n_rank }) = preset else {
        return Ok(None);
    };
    let mut rows = Vec::new();
    for p in profile.points.iter().filter(|p| p.theta >= FRAC_PI_4 - 1e-12) {
        let formula = calculus::example51_formula(n_rank as u32, p.theta)?;
        let gating = p.theta == FRAC_PI_2;
        let within_tolerance = p.usable().is_some_and(|v| (v - formula).abs() <= tolerance);
        rows.push(FormulaRow {
            theta: p.theta,
            estimate: p.effective(),
            stderr: p.stderr,
            formula,
            gating,
            within_tolerance,
        });
    }
    Ok(Some(FormulaTable { name: format!("example51(N={n_rank})"), tolerance, rows }))
}

/// Computes the profile, maximizer, condition report and audits for a built spectrum.
pub fn analyze(config: &RunConfig, spec: &ProductGroupSpec, s: &SlopeSpectrum) -> Result<Report> {
    config.validate()?;
    let tol = &config.tolerances;
    let grid = config.grid()?;
    let window = config.window.resolve(s.n_max)?;
    let global = match rates::delta_global(s, window) {
        Ok(e) => e,
        Err(Error::LowData { partial: Some(p), .. }) => *p,
        Err(e) => return Err(e),
    };
    let profile = rates::build_profile(s, &grid, &config.eps_schedule, window, config.min_samples)?;
    let theta_star = rates::find_theta_star(&profile).ok();
    let condition = rates::check_interior_condition(&profile, tol.condition_tolerance);
    let preset = config.source.preset();
    let band = preset_band(preset, &profile);

    let mut concavity = rates::concavity_audit(&profile.restricted_to_finite(), tol.concavity_slack);
    concavity.sort_by(|a, b| (b.rhs - b.lhs.to_f64()).total_cmp(&(a.rhs - a.lhs.to_f64())));
    let violation_count = concavity.len();
    concavity.truncate(MAX_LISTED);

    let continuity = rates::continuity_audit(&profile, tol.lipschitz);
    let positivity = match band {
        Some(b) => rates::positivity_audit(&profile, b),
        None => rates::positivity_audit(&profile, (0.0, 0.0)),
    };
    let regular = match band {
        Some(b) => rates::regular_growth_check(s, b, tol.regular_growth_eps, window, &grid)?,
        None => RegularGrowthReport {
            pass: false,
            interval: (0.0, 0.0),
            eps: tol.regular_growth_eps,
            tail: window.upper_half(),
            checked: Vec::new(),
            failing: Vec::new(),
        },
    };
    let cos_sin = rates::check_cos_sin_bound(&profile, tol.cos_sin_slack, tol.boundary_policy);

    let global_se = global.stderr.unwrap_or(0.0);
    let sandwich_violations: Vec<f64> = profile
        .points
        .iter()
        .filter(|p| {
            p.usable().is_some_and(|v| {
                v > global.value.to_f64() + tol.sandwich_tolerance + 2.0 * (global_se + p.stderr.unwrap_or(0.0))
            })
        })
        .map(|p| p.theta)
        .collect();

    let mut monotonicity_failures = Vec::new();
    for &theta in &grid {
        let mut prev: Option<Vec<u64>> = None;
        for &eps in config.eps_schedule.iter().rev() {
            let series = s.slope_series(eps, theta)?;
            if prev.as_ref().is_some_and(|p| p.iter().zip(&series).any(|(a, b)| a > b)) {
                monotonicity_failures.push(theta);
                break;
            }
            prev = Some(series);
        }
    }

    let audits = Audits {
        concavity: AuditSummary {
            pass: violation_count == 0,
            hard: true,
            detail: ConcavityDetail { slack: tol.concavity_slack, violation_count, violations: concavity },
        },
        continuity: AuditSummary {
            pass: continuity.is_empty(),
            hard: true,
            detail: ContinuityDetail { lipschitz: tol.lipschitz, violations: continuity },
        },
        positivity: AuditSummary { pass: positivity.pass, hard: true, detail: positivity },
        regular_growth: AuditSummary { pass: regular.pass, hard: true, detail: regular },
        cos_sin: AuditSummary { pass: cos_sin.pass, hard: true, detail: cos_sin },
        sandwich: AuditSummary {
            pass: sandwich_violations.is_empty(),
            hard: true,
            detail: SandwichDetail {
                tolerance: tol.sandwich_tolerance,
                global: global.value,
                violations: sandwich_violations,
            },
        },
        eps_monotonicity: AuditSummary {
            pass: monotonicity_failures.is_empty(),
            hard: true,
            detail: monotonicity_failures,
        },
    };
    let formula = formula_table(preset, &profile, tol.endpoint_tolerance)?;

    let mut failures: Vec<String> = audits
        .outcomes()
        .into_iter()
        .filter(|(_, pass, hard)| *hard && !pass)
        .map(|(name, _, _)| name.to_string())
        .collect();
    if formula.as_ref().is_some_and(|f| !f.gate_passes()) {
        failures.push("formula-endpoint".into());
    }
    let status = if !failures.is_empty() {
        RunStatus::AuditFailure
    } else if profile.low_data_count() > 0 || global.stderr.is_none() {
        RunStatus::LowData
    } else {
        RunStatus::Ok
    };

    Ok(Report {
        config: config.clone(),
        conventions: Conventions::for_binning(&s.binning),
        spectrum: SpectrumSummary {
            fingerprint: s.fingerprint.clone(),
            canonical_spec: spec.canonical_text(),
            l_max: s.meta.l_max,
            horizon: s.meta.horizon,
            n_max: s.n_max,
            dedup: s.meta.dedup,
            lambda: s.meta.lambda,
            lambda_supplied: s.meta.lambda_supplied,
            binning: s.binning.clone(),
            totals: s.totals.clone(),
            skipped: s.meta.skipped,
        },
        window,
        global,
        profile,
        theta_star,
        condition,
        audits,
        formula,
        status,
        failures,
    })
}

/// Outcome of a full run: the report plus timing kept out of the deterministic files.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: Report,
    pub cache_hit: bool,
    pub started_at: u64,
    pub wall_seconds: f64,
}

/// Loads the spec, obtains the spectrum and analyzes it.
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    config.validate()?;
    ensure_writable(&config.out_dir)?;
    let started_at = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let clock = Instant::now();
    let spec = config.source.load()?;
    let (s, cache_hit) = obtain_spectrum(config, &spec)?;
    let local = config.out_dir.join("spectrum.cache");
    if cache_path(config, &s.fingerprint) != local {
        cache::save_spectrum(&s, &local)?;
    }
    let report = analyze(config, &spec, &s)?;
    Ok(RunOutcome { report, cache_hit, started_at, wall_seconds: clock.elapsed().as_secs_f64() })
}

/// Runs a named preset with `config`'s parameters.
pub fn run_preset(name: &str, n_rank: Option<usize>, config: &RunConfig) -> Result<RunOutcome> {
    let preset = Preset::from_name(name, n_rank)?;
    let mut config = config.clone();
    config.source = SpecSource::Preset { preset };
    run(&config)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

pub const PROFILE_HEADER: &str = "theta,delta,stderr,neg_inf_flag,eps_used,n_lo,n_hi";

fn opt_num(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| v.to_string())
}

pub fn profile_csv(profile: &RateProfile) -> String {
    let mut out = format!("{PROFILE_HEADER}\n");
    for p in &profile.points {
        let delta = if p.low_data {
            "NaN".to_string()
        } else {
            p.value.finite().map_or("-inf".to_string(), |v| v.to_string())
        };
        let flag = u8::from(!p.low_data && !p.value.is_finite());
        let est = p.estimate.as_ref();
        let (lo, hi) = est.map_or((String::new(), String::new()), |e| {
            (e.window.n_lo.to_string(), e.window.n_hi.to_string())
        });
        writeln!(
            out,
            "{},{delta},{},{flag},{},{lo},{hi}",
            p.theta,
            opt_num(p.stderr),
            opt_num(est.and_then(|e| e.eps_used)),
        )
        .unwrap();
    }
    out
}

/// Degrees, value and a two-stderr band, plus the closed form where one exists.
pub fn plot_csv(report: &Report) -> String {
    let mut out = String::from("theta_deg,delta,lower,upper,formula\n");
    for p in &report.profile.points {
        let formula = report
            .formula
            .as_ref()
            .and_then(|f| f.rows.iter().find(|r| r.theta == p.theta))
            .map(|r| r.formula);
        let (d, lo, hi) = match (p.usable(), p.stderr) {
            (Some(v), Some(se)) => (Some(v), Some(v - 2.0 * se), Some(v + 2.0 * se)),
            (Some(v), None) => (Some(v), None, None),
            _ => (None, None, None),
        };
        writeln!(
            out,
            "{},{},{},{},{}",
            p.theta.to_degrees(),
            opt_num(d),
            opt_num(lo),
            opt_num(hi),
            opt_num(formula)
        )
        .unwrap();
    }
    out
}

pub fn report_json(report: &Report) -> Result<String> {
    serde_json::to_string_pretty(report).map_err(|e| Error::input(format!("cannot serialize report: {e}")))
}

pub fn parse_report(text: &str) -> Result<Report> {
    serde_json::from_str(text).map_err(|e| Error::input(format!("cannot parse report: {e}")))
}

fn write(path: PathBuf, body: &str) -> Result<PathBuf> {
    fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Writes `profile.csv` and `plotdata.csv` (csv) or `report.json` (json) into `out_dir`.
pub fn emit_report(report: &Report, format: OutputFormat, out_dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_writable(out_dir)?;
    match format {
        OutputFormat::Csv => Ok(vec![
            write(out_dir.join("profile.csv"), &profile_csv(&report.profile))?,
            write(out_dir.join("plotdata.csv"), &plot_csv(report))?,
        ]),
        OutputFormat::Json => Ok(vec![write(out_dir.join("report.json"), &report_json(report)?)?]),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub version: String,
    pub started_at: u64,
    pub wall_seconds: f64,
    pub cache_hit: bool,
}

/// Writes the timing sidecar `run_meta.json`.
pub fn emit_run_meta(outcome: &RunOutcome, out_dir: &Path) -> Result<PathBuf> {
    let meta = RunMeta {
        version: env!("CARGO_PKG_VERSION").to_string(),
        started_at: outcome.started_at,
        wall_seconds: outcome.wall_seconds,
        cache_hit: outcome.cache_hit,
    };
    let body = serde_json::to_string_pretty(&meta).map_err(|e| Error::input(e.to_string()))?;
    write(out_dir.join("run_meta.json"), &body)
}

/// Human-readable summary printed by the CLI.
pub fn summary_text(report: &Report) -> String {
    let mut s = String::new();
    let spec = &report.spectrum;
    writeln!(s, "spec {} (L_max {}, horizon {}, window [{}, {}])", spec.fingerprint, spec.l_max, spec.horizon, report.window.n_lo, report.window.n_hi).unwrap();
    writeln!(s, "global rate {} (stderr {})", report.global.value, opt_num(report.global.stderr)).unwrap();
    match &report.theta_star {
        Some(t) => writeln!(s, "theta* = {:.6} rad, delta = {:.6}", t.theta, t.delta).unwrap(),
        None => writeln!(s, "theta* undefined (no finite slope rate)").unwrap(),
    }
    writeln!(s, "condition: {}", report.condition.verdict).unwrap();
    for (name, pass, hard) in report.audits.outcomes() {
        writeln!(s, "audit {name}: {}{}", if pass { "pass" } else { "FAIL" }, if hard { "" } else { " (informational)" }).unwrap();
    }
    if let Some(f) = &report.formula {
        writeln!(s, "formula endpoint within {}: {}", f.tolerance, if f.gate_passes() { "pass" } else { "FAIL" }).unwrap();
    }
    writeln!(s, "status: {:?} (exit {})", report.status, report.status.exit_code()).unwrap();
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(dir: &Path, preset: Preset, l_max: u32) -> RunConfig {
        let mut c = RunConfig::defaults("preset", SpecSource::Preset { preset }, Injectivity::CertifiedInjective, dir.to_path_buf());
        c.l_max = l_max;
        c.jobs = 1;
        c
    }

    #[test]
    fn example31_report() {
        let dir = tempfile::tempdir().unwrap();
        let out = run(&config(dir.path(), Preset::Example31, 10)).unwrap();
        let r = &out.report;
        assert!(!out.cache_hit);
        assert!((r.theta_star.unwrap().theta - FRAC_PI_4).abs() < 1e-12);
        assert!(r.audits.regular_growth.pass);
        assert_eq!(r.status, RunStatus::Ok, "{:?}", r.failures);
        let again = run(&config(dir.path(), Preset::Example31, 10)).unwrap();
        assert!(again.cache_hit);
        assert_eq!(profile_csv(&again.report.profile), profile_csv(&r.profile));
    }

    #[test]
    fn json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let out = run(&config(dir.path(), Preset::Example41, 8)).unwrap();
        let text = report_json(&out.report).unwrap();
        assert_eq!(parse_report(&text).unwrap(), out.report);
    }

    #[test]
    fn csv_header_and_sentinel_rows() {
        let dir = tempfile::tempdir().unwrap();
        let out = run(&config(dir.path(), Preset::Example31, 8)).unwrap();
        let csv = profile_csv(&out.report.profile);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(PROFILE_HEADER));
        assert!(lines.next().unwrap().starts_with("0,-inf,0,1,"));
    }

    #[test]
    fn unwritable_directory_fails_first() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("plain");
        fs::write(&file, "x").unwrap();
        let c = config(&file.join("sub"), Preset::Example31, 4);
        assert!(matches!(run(&c), Err(Error::Io { .. })));
    }

    #[test]
    fn unknown_preset_is_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let c = config(dir.path(), Preset::Example31, 4);
        assert!(matches!(run_preset("example99", None, &c), Err(Error::Usage(_))));
    }
}
