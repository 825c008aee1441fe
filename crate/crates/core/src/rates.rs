//! Growth-rate estimation and the slope profile.
//!
//! A rate is the least-squares slope of `ln count[n]` against `n` over a window of
//! annuli. The slope-restricted rate at `theta` is taken at the smallest tolerance
//! of a decreasing schedule that still leaves enough nonzero annuli.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::calculus::{h_vec, SlopeVector};
use crate::error::{Error, Result};
use crate::spectrum::SlopeSpectrum;

/// Angles within this distance of a grid point are evaluated at the grid point.
const GRID_SNAP: f64 = 1e-12;

/// A growth rate, with an explicit value for empty counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rate {
    NegInfinity,
    Finite(f64),
}

impl Rate {
    pub fn is_finite(&self) -> bool {
        matches!(self, Rate::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            Rate::Finite(v) => Some(*v),
            Rate::NegInfinity => None,
        }
    }

    /// The value as a float, `-inf` for the sentinel.
    pub fn to_f64(&self) -> f64 {
        self.finite().unwrap_or(f64::NEG_INFINITY)
    }

    /// `c * self` for `c > 0`.
    pub fn scale(&self, c: f64) -> Rate {
        match self {
            Rate::Finite(v) => Rate::Finite(c * v),
            Rate::NegInfinity => Rate::NegInfinity,
        }
    }
}

impl PartialOrd for Rate {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        self.to_f64().partial_cmp(&other.to_f64())
    }
}

impl std::fmt::Display for Rate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Rate::Finite(v) => write!(f, "{v:.6}"),
            Rate::NegInfinity => f.write_str("-inf"),
        }
    }
}

/// Closed annulus range `[n_lo, n_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub n_lo: u32,
    pub n_hi: u32,
}

impl Window {
    pub fn new(n_lo: u32, n_hi: u32) -> Result<Self> {
        if n_lo == 0 || n_lo >= n_hi {
            return Err(Error::input(format!(
                "window [{n_lo}, {n_hi}] must satisfy 1 <= n_lo < n_hi"
            )));
        }
        Ok(Window { n_lo, n_hi })
    }

    /// `[ceil(n_max / 2), n_max]`.
    pub fn top_half(n_max: u32) -> Result<Self> {
        Window::new(n_max.div_ceil(2).max(1), n_max)
    }

    /// The upper half of this window, used as the "infinitely often" proxy.
    pub fn upper_half(&self) -> Window {
        Window { n_lo: self.n_lo + (self.n_hi - self.n_lo) / 2, n_hi: self.n_hi }
    }

    pub fn contains(&self, n: u32) -> bool {
        (self.n_lo..=self.n_hi).contains(&n)
    }
}

/// One point of a tolerance curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsPoint {
    pub eps: f64,
    pub value: Rate,
    pub stderr: Option<f64>,
    pub samples: u32,
    pub low_data: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub value: Rate,
    /// Regression standard error; 0 for the sentinel, `None` when undefined.
    pub stderr: Option<f64>,
    pub window: Window,
    /// Nonzero annuli used.
    pub samples: u32,
    /// `max ln(count[n]) / n` over the window.
    pub max_quotient: Rate,
    pub eps_used: Option<f64>,
    pub eps_curve: Vec<EpsPoint>,
}

impl RateEstimate {
    fn sentinel(window: Window) -> Self {
        RateEstimate {
            value: Rate::NegInfinity,
            stderr: Some(0.0),
            window,
            samples: 0,
            max_quotient: Rate::NegInfinity,
            eps_used: None,
            eps_curve: Vec::new(),
        }
    }
}

/// Fewest nonzero annuli for a regression.
pub const MIN_REGRESSION_POINTS: usize = 3;

/// Least-squares slope of `ln counts[n - 1]` against `n` over the nonzero entries of `window`.
///
/// `counts[i]` is the count of annulus `i + 1`.
pub fn estimate_rate(counts: &[u64], window: Window) -> Result<RateEstimate> {
    if window.n_lo == 0 || window.n_lo >= window.n_hi {
        return Err(Error::input(format!("invalid window [{}, {}]", window.n_lo, window.n_hi)));
    }
    if window.n_hi as usize > counts.len() {
        return Err(Error::input(format!(
            "window [{}, {}] exceeds the {} available annuli",
            window.n_lo,
            window.n_hi,
            counts.len()
        )));
    }
    let pts: Vec<(f64, f64)> = (window.n_lo..=window.n_hi)
        .filter_map(|n| {
            let c = counts[n as usize - 1];
            (c > 0).then(|| (n as f64, (c as f64).ln()))
        })
        .collect();
    if pts.is_empty() {
        return Ok(RateEstimate::sentinel(window));
    }
    let max_quotient = pts.iter().map(|(n, y)| y / n).fold(f64::NEG_INFINITY, f64::max);
    let mut est = RateEstimate {
        value: Rate::NegInfinity,
        stderr: None,
        window,
        samples: pts.len() as u32,
        max_quotient: Rate::Finite(max_quotient),
        eps_used: None,
        eps_curve: Vec::new(),
    };
    if pts.len() < MIN_REGRESSION_POINTS {
        est.value = Rate::Finite(match pts.as_slice() {
            [(n, y)] => y / n,
            [(n0, y0), (n1, y1)] => (y1 - y0) / (n1 - n0),
            _ => unreachable!(),
        });
        return Err(Error::LowData {
            reason: format!(
                "{} nonzero annuli in [{}, {}], need {MIN_REGRESSION_POINTS}",
                pts.len(),
                window.n_lo,
                window.n_hi
            ),
            partial: Some(Box::new(est)),
        });
    }
    let (slope, stderr) = least_squares(&pts);
    est.value = Rate::Finite(slope);
    est.stderr = Some(stderr);
    Ok(est)
}

/// Slope and its standard error.
fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let stderr = (ssr / (k - 2.0) / sxx).sqrt();
    (slope, stderr)
}

fn check_window(s: &SlopeSpectrum, window: Window) -> Result<()> {
    if window.n_hi > s.n_max {
        return Err(Error::input(format!(
            "window end {} beyond spectrum n_max {}",
            window.n_hi, s.n_max
        )));
    }
    if !s.is_exact(window.n_hi) {
        log::warn!(
            "window end {} is past the completeness horizon {}; counts there are lower bounds",
            window.n_hi,
            s.meta.horizon
        );
    }
    Ok(())
}

/// Rate of the full annulus counts.
pub fn delta_global(s: &SlopeSpectrum, window: Window) -> Result<RateEstimate> {
    check_window(s, window)?;
    estimate_rate(&s.totals, window)
}

/// Rate of the annulus counts restricted to slopes `eps`-close to `theta`.
pub fn delta_eps_theta(s: &SlopeSpectrum, eps: f64, theta: f64, window: Window) -> Result<RateEstimate> {
    check_window(s, window)?;
    let series = s.slope_series(eps, theta)?;
    let tag = |mut e: RateEstimate| {
        e.eps_used = Some(eps);
        e
    };
    match estimate_rate(&series, window) {
        Ok(e) => Ok(tag(e)),
        Err(Error::LowData { reason, partial }) => Err(Error::LowData {
            reason,
            partial: partial.map(|p| Box::new(tag(*p))),
        }),
        Err(e) => Err(e),
    }
}

/// Default tolerance schedule in radians.
pub const DEFAULT_EPS_SCHEDULE: [f64; 4] = [0.4, 0.2, 0.1, 0.05];
/// Default minimum number of nonzero annuli for a tolerance to be usable.
pub const DEFAULT_MIN_SAMPLES: u32 = 4;

pub fn validate_schedule(schedule: &[f64]) -> Result<()> {
    if schedule.is_empty() {
        return Err(Error::input("empty eps schedule"));
    }
    if schedule.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(Error::input("eps schedule values must be positive"));
    }
    if schedule.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Error::input("eps schedule must be strictly decreasing"));
    }
    Ok(())
}

/// Slope rate at `theta`.
///
/// If no element at the smallest tolerance reaches the window the result is the
/// sentinel. Otherwise it is the estimate at the smallest tolerance with at least
/// `min_samples` nonzero annuli. The whole tolerance curve is attached.
pub fn delta_theta(
    s: &SlopeSpectrum,
    theta: f64,
    schedule: &[f64],
    window: Window,
    min_samples: u32,
) -> Result<RateEstimate> {
    validate_schedule(schedule)?;
    let mut estimates = Vec::with_capacity(schedule.len());
    for &eps in schedule {
        let (est, low) = match delta_eps_theta(s, eps, theta, window) {
            Ok(e) => (e, false),
            Err(Error::LowData { partial: Some(p), .. }) => (*p, true),
            Err(e) => return Err(e),
        };
        estimates.push((est, low));
    }
    let curve: Vec<EpsPoint> = estimates
        .iter()
        .map(|(e, low)| EpsPoint {
            eps: e.eps_used.unwrap_or_default(),
            value: e.value,
            stderr: e.stderr,
            samples: e.samples,
            low_data: *low,
        })
        .collect();
    let attach = |mut e: RateEstimate| {
        e.eps_curve = curve.clone();
        e
    };
    let (smallest, _) = estimates.last().expect("schedule is nonempty");
    if smallest.samples == 0 {
        return Ok(attach(smallest.clone()));
    }
    if let Some((e, _)) = estimates
        .iter()
        .rev()
        .find(|(e, low)| !low && e.samples >= min_samples)
    {
        return Ok(attach(e.clone()));
    }
    Err(Error::LowData {
        reason: format!(
            "no tolerance in the schedule leaves {min_samples} nonzero annuli at theta = {theta:.6}"
        ),
        partial: Some(Box::new(attach(estimates[0].0.clone()))),
    })
}

/// `n` uniformly spaced angles over `[0, pi/2]` with exact endpoints.
pub fn uniform_grid(n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::input(format!("grid needs at least 2 points, got {n}")));
    }
    let step = FRAC_PI_2 / (n - 1) as f64;
    Ok((0..n)
        .map(|i| if i == n - 1 { FRAC_PI_2 } else { i as f64 * step })
        .collect())
}

pub const DEFAULT_GRID_POINTS: usize = 91;

pub fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 || grid[0] != 0.0 || grid[grid.len() - 1] != FRAC_PI_2 {
        return Err(Error::input("theta grid must contain both 0 and pi/2"));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::input("theta grid must be strictly increasing"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub theta: f64,
    pub value: Rate,
    /// `None` when undefined (too few annuli for a regression).
    pub stderr: Option<f64>,
    /// No tolerance had enough data; `value` is a partial estimate and is not used downstream.
    pub low_data: bool,
    pub estimate: Option<RateEstimate>,
}

impl ProfilePoint {
    /// The value when it is finite and backed by enough data.
    pub fn usable(&self) -> Option<f64> {
        if self.low_data {
            None
        } else {
            self.value.finite()
        }
    }

    /// The value as used by interpolation: low-data points count as the sentinel.
    pub fn effective(&self) -> Rate {
        if self.low_data {
            Rate::NegInfinity
        } else {
            self.value
        }
    }
}

/// Sampled `theta -> delta_theta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateProfile {
    pub points: Vec<ProfilePoint>,
    pub eps_schedule: Vec<f64>,
    pub window: Option<Window>,
    pub min_samples: u32,
    pub fingerprint: String,
}

impl RateProfile {
    /// A profile from a known function, with zero uncertainty.
    pub fn from_fn(grid: &[f64], f: impl Fn(f64) -> Rate) -> Result<Self> {
        validate_grid(grid)?;
        Ok(RateProfile {
            points: grid
                .iter()
                .map(|&theta| ProfilePoint {
                    theta,
                    value: f(theta),
                    stderr: Some(0.0),
                    low_data: false,
                    estimate: None,
                })
                .collect(),
            eps_schedule: Vec::new(),
            window: None,
            min_samples: 0,
            fingerprint: "analytic".into(),
        })
    }

    pub fn grid(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.theta).collect()
    }

    pub fn low_data_count(&self) -> usize {
        self.points.iter().filter(|p| p.low_data).count()
    }

    /// Copy keeping only finite, non-low-data points; interpolation then bridges
    /// isolated holes inside the finite band.
    pub fn restricted_to_finite(&self) -> RateProfile {
        let mut out = self.clone();
        out.points.retain(|p| p.usable().is_some());
        out
    }

    fn index_of(&self, theta: f64) -> Option<usize> {
        self.points.iter().position(|p| (p.theta - theta).abs() <= GRID_SNAP)
    }

    /// Interpolated rate at `theta`; see [`psi`].
    pub fn delta_at(&self, theta: f64) -> Result<Rate> {
        psi(self, h_vec(theta)?)
    }
}

/// Builds the profile over `grid`. Points without enough data are flagged, not fatal.
pub fn build_profile(
    s: &SlopeSpectrum,
    grid: &[f64],
    schedule: &[f64],
    window: Window,
    min_samples: u32,
) -> Result<RateProfile> {
    validate_grid(grid)?;
    validate_schedule(schedule)?;
    let mut points = Vec::with_capacity(grid.len());
    for &theta in grid {
        let point = match delta_theta(s, theta, schedule, window, min_samples) {
            Ok(e) => ProfilePoint {
                theta,
                value: e.value,
                stderr: e.stderr,
                low_data: false,
                estimate: Some(e),
            },
            Err(Error::LowData { partial, .. }) => {
                let e = partial.map(|p| *p);
                ProfilePoint {
                    theta,
                    value: e.as_ref().map_or(Rate::NegInfinity, |e| e.value),
                    stderr: e.as_ref().and_then(|e| e.stderr),
                    low_data: true,
                    estimate: e,
                }
            }
            Err(e) => return Err(e),
        };
        points.push(point);
    }
    Ok(RateProfile {
        points,
        eps_schedule: schedule.to_vec(),
        window: Some(window),
        min_samples,
        fingerprint: s.fingerprint.clone(),
    })
}

/// `||x|| delta(theta(x))`, extended from the grid linearly on each cone between
/// adjacent grid directions.
///
/// On the cone spanned by `H_a` and `H_b`, `x = p H_a + q H_b` with `p, q >= 0`
/// and the value is `p delta_a + q delta_b`. The result is the sentinel if a
/// contributing grid value is.
pub fn psi(profile: &RateProfile, x: SlopeVector) -> Result<Rate> {
    if x.is_zero() {
        return Err(Error::domain("psi is undefined at the origin"));
    }
    let phi = x.theta();
    if let Some(i) = profile.index_of(phi) {
        return Ok(profile.points[i].effective().scale(x.norm()));
    }
    let pts = &profile.points;
    let j = pts.partition_point(|p| p.theta < phi);
    if j == 0 || j == pts.len() {
        return Err(Error::domain(format!("theta {phi} outside the profile grid")));
    }
    let (pa, pb) = (&pts[j - 1], &pts[j]);
    let (sa, ca) = pa.theta.sin_cos();
    let (sb, cb) = pb.theta.sin_cos();
    let det = (pb.theta - pa.theta).sin();
    let p = (x.x1 * sb - x.x2 * cb) / det;
    let q = (x.x2 * ca - x.x1 * sa) / det;
    match (pa.effective(), pb.effective()) {
        (Rate::Finite(da), Rate::Finite(db)) => Ok(Rate::Finite(p * da + q * db)),
        _ => Ok(Rate::NegInfinity),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcavityViolation {
    pub alpha: f64,
    pub beta: f64,
    pub t: f64,
    pub lhs: Rate,
    pub rhs: f64,
}

/// Checks `psi(t x + (1 - t) y) >= t psi(x) + (1 - t) psi(y) - slack` for
/// `x = H_alpha`, `y = H_beta` over all pairs of finite grid points and `t` in `{1/4, 1/2, 3/4}`.
pub fn concavity_audit(profile: &RateProfile, slack: f64) -> Vec<ConcavityViolation> {
    let finite: Vec<(f64, SlopeVector, f64)> = profile
        .points
        .iter()
        .filter_map(|p| {
            let h = h_vec(p.theta).ok()?;
            let v = psi(profile, h).ok()?.finite()?;
            Some((p.theta, h, v))
        })
        .collect();
    let mut out = Vec::new();
    for (i, (alpha, x, px)) in finite.iter().enumerate() {
        for (beta, y, py) in &finite[i + 1..] {
            for t in [0.25, 0.5, 0.75] {
                let rhs = t * px + (1.0 - t) * py;
                let lhs = psi(profile, x.mix(y, t)).unwrap_or(Rate::NegInfinity);
                if lhs.to_f64() < rhs - slack {
                    out.push(ConcavityViolation { alpha: *alpha, beta: *beta, t, lhs, rhs });
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaStar {
    pub theta: f64,
    pub delta: f64,
    /// Grid argmax before refinement.
    pub grid_theta: f64,
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;
const REFINE_MARGIN: f64 = 1e-14;

/// Maximizer of the interpolated profile: grid argmax, refined by golden-section
/// search between its grid neighbours. Ties go to the smaller angle.
pub fn find_theta_star(profile: &RateProfile) -> Result<ThetaStar> {
    let pts = &profile.points;
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in pts.iter().enumerate() {
        if let Some(v) = p.usable() {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
    }
    let (i, grid_best) = best.ok_or_else(|| Error::domain("profile has no finite value"))?;
    let f = |theta: f64| profile.delta_at(theta).map_or(f64::NEG_INFINITY, |r| r.to_f64());
    let lo = if i > 0 && pts[i - 1].usable().is_some() { pts[i - 1].theta } else { pts[i].theta };
    let hi = if i + 1 < pts.len() && pts[i + 1].usable().is_some() { pts[i + 1].theta } else { pts[i].theta };
    let (mut theta, mut delta) = (pts[i].theta, grid_best);
    if hi > lo {
        let (mut a, mut b) = (lo, hi);
        let mut c = b - INV_PHI * (b - a);
        let mut d = a + INV_PHI * (b - a);
        let (mut fc, mut fd) = (f(c), f(d));
        while b - a > 1e-12 {
            if fc >= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - INV_PHI * (b - a);
                fc = f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + INV_PHI * (b - a);
                fd = f(d);
            }
        }
        let m = 0.5 * (a + b);
        let fm = f(m);
        // refinement must beat the grid value by more than rounding
        if fm > grid_best + REFINE_MARGIN * grid_best.abs().max(1.0) {
            theta = m;
            delta = fm;
        }
    }
    Ok(ThetaStar { theta, delta, grid_theta: pts[i].theta })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InequalityStatus {
    /// Holds with margin above tolerance at some grid angle.
    Strict,
    /// Holds with equality within tolerance somewhere, strictly nowhere.
    Sharp,
    Fails,
    /// No grid angle where both sides are defined.
    Undefined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    InteriorGuaranteed,
    BoundarySharp,
    NotSatisfied,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::InteriorGuaranteed => "interior-guaranteed",
            Verdict::BoundarySharp => "boundary-sharp",
            Verdict::NotSatisfied => "not-satisfied",
        })
    }
}

/// Both sides of the two inequalities at one interior grid angle `phi`.
///
/// First: `delta_{pi/2} / delta_phi < 1 / sin phi`. Second, with `beta = pi/2 - phi`:
/// `delta_0 / delta_phi < 1 / sin beta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionRow {
    pub theta: f64,
    pub first_ratio: Option<Rate>,
    pub first_bound: f64,
    pub second_ratio: Option<Rate>,
    pub second_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub verdict: Verdict,
    pub tolerance: f64,
    pub first: InequalityStatus,
    pub second: InequalityStatus,
    /// Angle with the largest margin in the first inequality.
    pub witness_theta: Option<f64>,
    /// `beta` with the largest margin in the second inequality.
    pub witness_beta: Option<f64>,
    /// `max |delta_{pi/2} / delta_theta - 1 / sin theta|` over rows where it is defined.
    pub max_first_deviation: Option<f64>,
    pub rows: Vec<ConditionRow>,
}

impl ConditionReport {
    /// Verdict on the first line, then one line per row.
    pub fn to_text(&self) -> String {
        let opt = |v: Option<f64>| v.map_or("undefined".to_string(), |v| format!("{v:.9}"));
        let rate = |v: Option<Rate>| v.map_or("undefined".to_string(), |v| v.finite().map_or("-inf".into(), |v| format!("{v:.9}")));
        let mut s = format!(
            "verdict: {}\ntolerance: {}\nfirst inequality: {:?}\nsecond inequality: {:?}\nwitness theta: {}\nwitness beta: {}\n",
            self.verdict,
            self.tolerance,
            self.first,
            self.second,
            opt(self.witness_theta),
            opt(self.witness_beta),
        );
        s.push_str("theta,first_ratio,first_bound,second_ratio,second_bound\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{:.9},{},{:.9},{},{:.9}\n",
                r.theta,
                rate(r.first_ratio),
                r.first_bound,
                rate(r.second_ratio),
                r.second_bound
            ));
        }
        s
    }
}

fn endpoint(profile: &RateProfile, theta: f64) -> Option<Rate> {
    let i = profile.index_of(theta)?;
    let p = &profile.points[i];
    (!p.low_data).then_some(p.value)
}

/// `numerator / denominator` for a positive denominator; the sentinel stays the sentinel.
fn ratio(numerator: Option<Rate>, denominator: f64) -> Option<Rate> {
    numerator.map(|r| r.scale(1.0 / denominator))
}

fn classify(margins: &[(f64, f64)], tol: f64) -> (InequalityStatus, Option<f64>) {
    if margins.is_empty() {
        return (InequalityStatus::Undefined, None);
    }
    let (theta, best) = margins
        .iter()
        .copied()
        .fold((f64::NAN, f64::NEG_INFINITY), |acc, m| if m.1 > acc.1 { m } else { acc });
    if best > tol {
        (InequalityStatus::Strict, Some(theta))
    } else if margins.iter().any(|(_, m)| m.abs() <= tol) {
        (InequalityStatus::Sharp, None)
    } else {
        (InequalityStatus::Fails, None)
    }
}

/// Evaluates the two-sided interior-maximizer condition on the grid.
///
/// Angles with `delta_theta <= 0` or without a usable value are skipped. A sentinel
/// at an endpoint makes its ratio `-inf`, which satisfies the inequality.
pub fn check_interior_condition(profile: &RateProfile, tolerance: f64) -> ConditionReport {
    let top = endpoint(profile, FRAC_PI_2);
    let bottom = endpoint(profile, 0.0);
    let mut rows = Vec::new();
    let mut first = Vec::new();
    let mut second = Vec::new();
    let mut deviation: Option<f64> = None;
    for p in &profile.points {
        if p.theta <= 0.0 || p.theta >= FRAC_PI_2 {
            continue;
        }
        let Some(d) = p.usable().filter(|d| *d > 0.0) else {
            continue;
        };
        let (s, c) = p.theta.sin_cos();
        let row = ConditionRow {
            theta: p.theta,
            first_ratio: ratio(top, d),
            first_bound: 1.0 / s,
            second_ratio: ratio(bottom, d),
            second_bound: 1.0 / c,
        };
        if let Some(r) = row.first_ratio {
            first.push((p.theta, row.first_bound - r.to_f64()));
            if let Some(r) = r.finite() {
                let dev = (r - row.first_bound).abs();
                deviation = Some(deviation.map_or(dev, |m| m.max(dev)));
            }
        }
        if let Some(r) = row.second_ratio {
            second.push((FRAC_PI_2 - p.theta, row.second_bound - r.to_f64()));
        }
        rows.push(row);
    }
    let (fs, witness_theta) = classify(&first, tolerance);
    let (ss, witness_beta) = classify(&second, tolerance);
    use InequalityStatus::*;
    let verdict = match (fs, ss) {
        (Strict, Strict) => Verdict::InteriorGuaranteed,
        (Fails | Undefined, _) | (_, Fails | Undefined) => Verdict::NotSatisfied,
        _ => Verdict::BoundarySharp,
    };
    ConditionReport {
        verdict,
        tolerance,
        first: fs,
        second: ss,
        witness_theta,
        witness_beta,
        max_first_deviation: deviation,
        rows,
    }
}

/// How an endpoint sentinel enters `delta_0 cos theta + delta_{pi/2} sin theta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryPolicy {
    /// A sentinel with a positive coefficient makes the bound vacuous.
    Sentinel,
    /// A sentinel endpoint counts as 0.
    TreatAsZero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CosSinReport {
    pub pass: bool,
    pub slack: f64,
    pub policy: BoundaryPolicy,
    /// Smallest `delta_theta - bound` over non-vacuous bounds, and where it occurs.
    pub worst_theta: Option<f64>,
    pub worst_margin: Option<f64>,
    pub checked: usize,
    pub note: Option<String>,
}

/// Coefficients below this are treated as exact zeros (`cos(pi/2)` in floating point).
const COEFF_ZERO: f64 = 1e-15;

/// Checks `delta_theta >= delta_0 cos theta + delta_{pi/2} sin theta - slack` on finite grid points.
pub fn check_cos_sin_bound(profile: &RateProfile, slack: f64, policy: BoundaryPolicy) -> CosSinReport {
    let mut report = CosSinReport {
        pass: true,
        slack,
        policy,
        worst_theta: None,
        worst_margin: None,
        checked: 0,
        note: None,
    };
    let (Some(d0), Some(dtop)) = (endpoint(profile, 0.0), endpoint(profile, FRAC_PI_2)) else {
        report.pass = false;
        report.note = Some("an endpoint value is missing or low-data".into());
        return report;
    };
    let term = |d: Rate, coeff: f64| -> f64 {
        if coeff <= COEFF_ZERO {
            return 0.0;
        }
        match (d, policy) {
            (Rate::Finite(v), _) => v * coeff,
            (Rate::NegInfinity, BoundaryPolicy::Sentinel) => f64::NEG_INFINITY,
            (Rate::NegInfinity, BoundaryPolicy::TreatAsZero) => 0.0,
        }
    };
    for p in &profile.points {
        let Some(v) = p.usable() else { continue };
        let (s, c) = p.theta.sin_cos();
        let bound = term(d0, c) + term(dtop, s);
        report.checked += 1;
        if bound == f64::NEG_INFINITY {
            continue;
        }
        let margin = v - bound;
        if report.worst_margin.is_none_or(|w| margin < w) {
            report.worst_margin = Some(margin);
            report.worst_theta = Some(p.theta);
        }
        if margin < -slack {
            report.pass = false;
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularGrowthReport {
    pub pass: bool,
    pub interval: (f64, f64),
    pub eps: f64,
    /// Annuli inspected.
    pub tail: Window,
    pub checked: Vec<f64>,
    pub failing: Vec<f64>,
}

/// Whether every grid angle in `[alpha1, alpha2]` (and both ends) has `eps`-close
/// elements in some annulus of the upper half of `window`.
pub fn regular_growth_check(
    s: &SlopeSpectrum,
    interval: (f64, f64),
    eps: f64,
    window: Window,
    grid: &[f64],
) -> Result<RegularGrowthReport> {
    let (a1, a2) = interval;
    if !(0.0 <= a1 && a1 <= a2 && a2 <= FRAC_PI_2) {
        return Err(Error::input(format!("interval [{a1}, {a2}] not inside [0, pi/2]")));
    }
    check_window(s, window)?;
    let tail = window.upper_half();
    let mut checked: Vec<f64> = grid.iter().copied().filter(|t| (a1..=a2).contains(t)).collect();
    checked.push(a1);
    checked.push(a2);
    checked.sort_by(f64::total_cmp);
    checked.dedup();
    let mut failing = Vec::new();
    for &theta in &checked {
        let series = s.slope_series(eps, theta)?;
        if (tail.n_lo..=tail.n_hi).all(|n| series[n as usize - 1] == 0) {
            failing.push(theta);
        }
    }
    Ok(RegularGrowthReport {
        pass: failing.is_empty(),
        interval,
        eps,
        tail,
        checked,
        failing,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityViolation {
    pub theta_a: f64,
    pub theta_b: f64,
    pub difference: f64,
    pub allowed: f64,
}

/// Adjacent finite grid values must satisfy `|d_b - d_a| <= L (theta_b - theta_a) + 2 (se_a + se_b)`.
pub fn continuity_audit(profile: &RateProfile, lipschitz: f64) -> Vec<ContinuityViolation> {
    profile
        .points
        .windows(2)
        .filter_map(|w| {
            let (a, b) = (&w[0], &w[1]);
            let (da, db) = (a.usable()?, b.usable()?);
            let se = a.stderr.unwrap_or(0.0) + b.stderr.unwrap_or(0.0);
            let allowed = lipschitz * (b.theta - a.theta) + 2.0 * se;
            let difference = (db - da).abs();
            (difference > allowed).then_some(ContinuityViolation {
                theta_a: a.theta,
                theta_b: b.theta,
                difference,
                allowed,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositivityReport {
    pub pass: bool,
    pub band: (f64, f64),
    /// Finite, resolved (stderr below `|value|`) and not positive.
    pub violations: Vec<f64>,
    /// Finite values whose stderr is at least `|value|`.
    pub unresolved: Vec<f64>,
    pub checked: usize,
}

/// Finite values on the open band `(lo, hi)` must be positive once resolved.
pub fn positivity_audit(profile: &RateProfile, band: (f64, f64)) -> PositivityReport {
    let mut report = PositivityReport {
        pass: true,
        band,
        violations: Vec::new(),
        unresolved: Vec::new(),
        checked: 0,
    };
    for p in &profile.points {
        if !(p.theta > band.0 && p.theta < band.1) {
            continue;
        }
        let Some(v) = p.usable() else { continue };
        report.checked += 1;
        let se = p.stderr.unwrap_or(f64::INFINITY);
        if se >= v.abs() && se > 0.0 {
            report.unresolved.push(p.theta);
        } else if v <= 0.0 {
            report.violations.push(p.theta);
        }
    }
    report.pass = report.violations.is_empty();
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::Dedup;
    use crate::presets;
    use crate::spectrum::{compute_spectrum, free_sphere_size, Binning};
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_4;

    fn grid() -> Vec<f64> {
        uniform_grid(DEFAULT_GRID_POINTS).unwrap()
    }

    fn ln3() -> f64 {
        3f64.ln()
    }

    #[test]
    fn geometric_counts_give_exact_rate() {
        let counts: Vec<u64> = (1..=20).map(|n| 3u64.pow(n)).collect();
        let e = estimate_rate(&counts, Window::new(5, 20).unwrap()).unwrap();
        assert!((e.value.to_f64() - ln3()).abs() < 1e-9);
        assert!(e.stderr.unwrap() < 1e-9);
        assert_eq!(e.samples, 16);
    }

    #[test]
    fn free_group_spheres_give_log3() {
        let counts: Vec<u64> = (1..=13).map(|k| free_sphere_size(2, k) as u64).collect();
        let e = estimate_rate(&counts, Window::new(5, 13).unwrap()).unwrap();
        assert!((e.value.to_f64() - ln3()).abs() < 0.01);
    }

    #[test]
    fn zero_counts_give_sentinel() {
        let e = estimate_rate(&[0; 10], Window::new(2, 10).unwrap()).unwrap();
        assert_eq!(e.value, Rate::NegInfinity);
        assert_eq!(e.stderr, Some(0.0));
        assert_eq!(e.samples, 0);
    }

    #[test]
    fn sparse_counts_are_low_data_with_partial() {
        let mut c = vec![0u64; 10];
        c[4] = 9;
        c[6] = 81;
        match estimate_rate(&c, Window::new(2, 10).unwrap()) {
            Err(Error::LowData { partial: Some(p), .. }) => {
                assert!((p.value.to_f64() - ln3()).abs() < 1e-12);
                assert_eq!(p.samples, 2);
                assert_eq!(p.stderr, None);
            }
            other => panic!("expected low data, got {other:?}"),
        }
    }

    #[test]
    fn window_validation() {
        assert!(Window::new(0, 3).is_err());
        assert!(Window::new(3, 3).is_err());
        assert!(estimate_rate(&[1, 2, 3], Window::new(1, 4).unwrap()).is_err());
        assert_eq!(Window::top_half(16).unwrap(), Window { n_lo: 8, n_hi: 16 });
        assert_eq!(Window::top_half(15).unwrap(), Window { n_lo: 8, n_hi: 15 });
        assert_eq!(Window::top_half(10).unwrap(), Window { n_lo: 5, n_hi: 10 });
    }

    #[test]
    fn schedule_validation() {
        assert!(validate_schedule(&[]).is_err());
        assert!(validate_schedule(&[0.1, 0.2]).is_err());
        assert!(validate_schedule(&[0.1, 0.0]).is_err());
        validate_schedule(&DEFAULT_EPS_SCHEDULE).unwrap();
    }

    fn ex31() -> SlopeSpectrum {
        compute_spectrum(&presets::example31(), 10, Binning::default(), Dedup::Off, 1, None).unwrap()
    }

    #[test]
    fn example31_rates() {
        let s = ex31();
        let w = Window::top_half(s.n_max).unwrap();
        let oracle = ln3() / 2f64.sqrt();
        let g = delta_global(&s, w).unwrap();
        assert!((g.value.to_f64() - oracle).abs() < 0.08);
        let e = delta_eps_theta(&s, 0.05, FRAC_PI_4, w).unwrap();
        assert!((e.value.to_f64() - oracle).abs() < 0.08);
        assert_eq!(delta_eps_theta(&s, 0.05, 0.0, w).unwrap().value, Rate::NegInfinity);
        let d = delta_theta(&s, FRAC_PI_4, &DEFAULT_EPS_SCHEDULE, w, DEFAULT_MIN_SAMPLES).unwrap();
        assert!((d.value.to_f64() - oracle).abs() < 0.08);
        assert_eq!(d.eps_used, Some(0.05));
        assert_eq!(d.eps_curve.len(), 4);
    }

    #[test]
    fn example41_low_slopes_are_sentinel() {
        let s = compute_spectrum(&presets::example41(), 9, Binning::default(), Dedup::Off, 1, None).unwrap();
        let w = Window::top_half(s.n_max).unwrap();
        assert_eq!(delta_eps_theta(&s, 0.05, 0.1, w).unwrap().value, Rate::NegInfinity);
    }

    #[test]
    fn profile_of_example31_is_single_slope() {
        let s = ex31();
        let w = Window::top_half(s.n_max).unwrap();
        let p = build_profile(&s, &grid(), &presets::Preset::Example31.default_eps_schedule(), w, 4).unwrap();
        let finite: Vec<f64> = p.points.iter().filter_map(|q| q.usable().map(|_| q.theta)).collect();
        assert_eq!(finite.len(), 1);
        assert!((finite[0] - FRAC_PI_4).abs() < 1e-12);
        assert_eq!(p.low_data_count(), 0);
        let star = find_theta_star(&p).unwrap();
        assert!((star.theta - FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn eps_monotonicity_of_counts_and_quotients() {
        let s = compute_spectrum(&presets::example41(), 9, Binning::default(), Dedup::Off, 1, None).unwrap();
        let w = Window::top_half(s.n_max).unwrap();
        for theta in grid() {
            let mut prev: Option<(Vec<u64>, Rate)> = None;
            for &eps in DEFAULT_EPS_SCHEDULE.iter().rev() {
                let series = s.slope_series(eps, theta).unwrap();
                let q = match delta_eps_theta(&s, eps, theta, w) {
                    Ok(e) => e.max_quotient,
                    Err(Error::LowData { partial: Some(p), .. }) => p.max_quotient,
                    Err(e) => panic!("{e}"),
                };
                if let Some((ps, pq)) = &prev {
                    assert!(ps.iter().zip(&series).all(|(a, b)| a <= b));
                    assert!(*pq <= q);
                }
                prev = Some((series, q));
            }
        }
    }

    #[test]
    fn sandwich_below_global_rate() {
        let s = compute_spectrum(&presets::example41(), 10, Binning::default(), Dedup::Off, 1, None).unwrap();
        let w = Window::top_half(s.n_max).unwrap();
        let global = delta_global(&s, w).unwrap();
        let p = build_profile(&s, &grid(), &DEFAULT_EPS_SCHEDULE, w, DEFAULT_MIN_SAMPLES).unwrap();
        let tol = 0.1 + 2.0 * global.stderr.unwrap();
        for q in &p.points {
            if let Some(v) = q.usable() {
                assert!(v <= global.value.to_f64() + tol + 2.0 * q.stderr.unwrap_or(0.0), "theta {}", q.theta);
            }
        }
    }

    fn sin_profile() -> RateProfile {
        RateProfile::from_fn(&grid(), |t| Rate::Finite(ln3() * t.sin())).unwrap()
    }

    fn cos_sin_profile() -> RateProfile {
        RateProfile::from_fn(&grid(), |t| Rate::Finite(t.cos() + t.sin())).unwrap()
    }

    #[test]
    fn psi_on_unit_vectors_and_axes() {
        let p = sin_profile();
        for t in [0.3, 1.0, FRAC_PI_4] {
            let v = psi(&p, h_vec(t).unwrap()).unwrap().to_f64();
            assert!((v - ln3() * t.sin()).abs() < 1e-12);
        }
        let top = psi(&p, SlopeVector::new(0.0, 1.0).unwrap()).unwrap().to_f64();
        assert!((top - ln3()).abs() < 1e-15);
        assert!(psi(&p, SlopeVector::new(0.0, 0.0).unwrap()).is_err());
    }

    #[test]
    fn psi_sentinel_propagates() {
        let p = RateProfile::from_fn(&grid(), |t| {
            if t < FRAC_PI_4 { Rate::NegInfinity } else { Rate::Finite(1.0) }
        })
        .unwrap();
        assert_eq!(psi(&p, h_vec(0.2).unwrap()).unwrap(), Rate::NegInfinity);
        assert!(psi(&p, h_vec(1.0).unwrap()).unwrap().finite().is_some());
    }

    #[test]
    fn concavity_of_analytic_profiles() {
        assert!(concavity_audit(&sin_profile(), 1e-9).is_empty());
        assert!(concavity_audit(&cos_sin_profile(), 1e-9).is_empty());
    }

    #[test]
    fn concavity_detects_a_spike() {
        let g = grid();
        let spike = g[30];
        let p = RateProfile::from_fn(&g, |t| Rate::Finite(if t == spike { 3.0 } else { 1.0 })).unwrap();
        assert!(!concavity_audit(&p, 1e-9).is_empty());
    }

    #[test]
    fn theta_star_examples() {
        let s = find_theta_star(&sin_profile()).unwrap();
        assert_eq!(s.theta, FRAC_PI_2);
        let c = find_theta_star(&cos_sin_profile()).unwrap();
        assert!((c.theta - FRAC_PI_4).abs() < 1e-6);
        let empty = RateProfile::from_fn(&grid(), |_| Rate::NegInfinity).unwrap();
        assert!(matches!(find_theta_star(&empty), Err(Error::Domain(_))));
    }

    #[test]
    fn sharpness_of_sin_profile() {
        let r = check_interior_condition(&sin_profile(), 1e-9);
        assert_eq!(r.verdict, Verdict::BoundarySharp);
        assert_eq!(r.first, InequalityStatus::Sharp);
        assert!(r.max_first_deviation.unwrap() < 1e-12);
        assert!(r.to_text().starts_with("verdict: boundary-sharp"));
    }

    #[test]
    fn constant_profile_is_interior() {
        let p = RateProfile::from_fn(&grid(), |_| Rate::Finite(1.0)).unwrap();
        let r = check_interior_condition(&p, 1e-9);
        assert_eq!(r.verdict, Verdict::InteriorGuaranteed);
        assert!(r.witness_theta.is_some() && r.witness_beta.is_some());
    }

    #[test]
    fn bump_profile_is_interior_with_interior_maximizer() {
        let p = RateProfile::from_fn(&grid(), |t| Rate::Finite(1.0 + (2.0 * t).sin())).unwrap();
        assert_eq!(check_interior_condition(&p, 1e-9).verdict, Verdict::InteriorGuaranteed);
        let star = find_theta_star(&p).unwrap();
        assert!(star.theta > 0.1 && star.theta < 1.4);
    }

    #[test]
    fn cos_sin_bound_examples() {
        let r = check_cos_sin_bound(&sin_profile(), 0.0, BoundaryPolicy::Sentinel);
        assert!(r.pass, "{r:?}");
        assert_eq!(r.checked, 91);
        let r = check_cos_sin_bound(&cos_sin_profile(), 1e-12, BoundaryPolicy::Sentinel);
        assert!(r.pass, "{r:?}");
        let dip = RateProfile::from_fn(&grid(), |t| Rate::Finite(if (t - 0.8).abs() < 0.01 { 0.1 } else { 1.0 })).unwrap();
        assert!(!check_cos_sin_bound(&dip, 1e-9, BoundaryPolicy::Sentinel).pass);
    }

    #[test]
    fn cos_sin_bound_sentinel_policies() {
        let p = RateProfile::from_fn(&grid(), |t| {
            if t < FRAC_PI_4 { Rate::NegInfinity } else { Rate::Finite(ln3() * t.sin()) }
        })
        .unwrap();
        assert!(check_cos_sin_bound(&p, 0.0, BoundaryPolicy::Sentinel).pass);
        assert!(check_cos_sin_bound(&p, 1e-12, BoundaryPolicy::TreatAsZero).pass);
    }

    #[test]
    fn regular_growth_examples() {
        let s = ex31();
        let w = Window::top_half(s.n_max).unwrap();
        assert!(!regular_growth_check(&s, (0.0, FRAC_PI_2), 0.05, w, &grid()).unwrap().pass);
        assert!(regular_growth_check(&s, (FRAC_PI_4, FRAC_PI_4), 0.05, w, &grid()).unwrap().pass);
        let s = compute_spectrum(&presets::example41(), 9, Binning::default(), Dedup::Off, 1, None).unwrap();
        let w = Window::top_half(s.n_max).unwrap();
        let r = regular_growth_check(&s, (FRAC_PI_4, 2f64.atan()), 0.05, w, &grid()).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn continuity_and_positivity_audits() {
        let p = sin_profile();
        assert!(continuity_audit(&p, 1.2).is_empty());
        assert!(!continuity_audit(&p, 0.5).is_empty());
        let pos = positivity_audit(&p, (0.0, FRAC_PI_2));
        assert!(pos.pass && pos.unresolved.is_empty() && pos.checked == 89);
        let neg = RateProfile::from_fn(&grid(), |t| Rate::Finite(t - 0.5)).unwrap();
        assert!(!positivity_audit(&neg, (0.0, FRAC_PI_2)).pass);
    }

    proptest! {
        #[test]
        fn psi_is_homogeneous(x1 in 0.0f64..10.0, x2 in 0.0f64..10.0) {
            prop_assume!(x1 > 0.0 || x2 > 0.0);
            let p = sin_profile();
            let x = SlopeVector::new(x1, x2).unwrap();
            let a = psi(&p, x).unwrap().to_f64();
            let b = psi(&p, x.scale(2.0)).unwrap().to_f64();
            prop_assert_eq!(b, 2.0 * a);
        }

        #[test]
        fn theta_star_matches_grid_scan_on_concave_profiles(peak in 0.0f64..FRAC_PI_2, height in 0.5f64..3.0) {
            let g = grid();
            let p = RateProfile::from_fn(&g, |t| Rate::Finite(height - (t - peak).abs())).unwrap();
            let star = find_theta_star(&p).unwrap();
            let scan = g.iter().map(|&t| p.delta_at(t).unwrap().to_f64()).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(star.delta >= scan - 1e-12);
        }
    }
}
