//! Annulus-by-slope count tables.
//!
//! A spectrum holds, for each annulus `n` (elements with `n - 1 <= r < n`), the
//! counts per slope bin. It also keeps the exact counts per displacement class
//! `(d1, d2)`, so slope conditions are evaluated on exact slopes rather than on
//! bin edges.

use std::collections::{BTreeMap, HashSet};
use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::action::{self, completeness_horizon, Dedup, Displacement, ElementRecord, ProductGroupSpec};
use crate::error::{Error, Result};
use crate::word::{Alphabet, Letter, ReducedWord};

/// Angles this close to pi/2 are treated as pi/2 by the tangent condition.
const HALF_PI_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Binning {
    /// `bins` equal angular bins over `[0, pi/2]`; slope conditions are `|theta(g) - theta| <= eps`.
    Angular { bins: u32 },
    /// Bins between consecutive grid slopes, ordered by `tan`; slope conditions are
    /// `|d2/d1 - tan theta| <= eps`.
    PaperTan { grid: Vec<f64> },
}

impl Default for Binning {
    fn default() -> Self {
        Binning::Angular { bins: 90 }
    }
}

impl Binning {
    pub fn validate(&self) -> Result<()> {
        match self {
            Binning::Angular { bins } if *bins < 2 => {
                Err(Error::input(format!("angular binning needs at least 2 bins, got {bins}")))
            }
            Binning::Angular { .. } => Ok(()),
            Binning::PaperTan { grid } => {
                if grid.len() < 2 {
                    return Err(Error::input("paper-tan grid needs at least 2 slopes"));
                }
                if grid.iter().any(|t| !(0.0..=FRAC_PI_2).contains(t)) {
                    return Err(Error::input("paper-tan grid values must lie in [0, pi/2]"));
                }
                if grid.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::input("paper-tan grid must be strictly increasing"));
                }
                Ok(())
            }
        }
    }

    pub fn bin_count(&self) -> usize {
        match self {
            Binning::Angular { bins } => *bins as usize,
            Binning::PaperTan { grid } => grid.len() - 1,
        }
    }

    pub fn mode_name(&self) -> &'static str {
        match self {
            Binning::Angular { .. } => "angular",
            Binning::PaperTan { .. } => "paper-tan",
        }
    }

    /// Bin of a nonidentity displacement. Values on a bin edge go to the lower bin.
    pub fn bin_of(&self, d: Displacement) -> usize {
        debug_assert!(!d.is_identity());
        match self {
            Binning::Angular { bins } => {
                let theta = (d.d2 as f64).atan2(d.d1 as f64);
                let width = FRAC_PI_2 / *bins as f64;
                let k = (theta / width).ceil() as i64 - 1;
                k.clamp(0, *bins as i64 - 1) as usize
            }
            Binning::PaperTan { grid } => {
                let q = if d.d1 == 0 {
                    f64::INFINITY
                } else {
                    d.d2 as f64 / d.d1 as f64
                };
                let last = grid.len() - 2;
                grid[1..]
                    .iter()
                    .position(|&g| q <= g.tan())
                    .unwrap_or(last)
                    .min(last)
            }
        }
    }

    /// The slope-closeness predicate of this mode.
    pub fn slope_condition(&self, d: Displacement, eps: f64, theta: f64) -> bool {
        match self {
            Binning::Angular { .. } => angular_condition(d, eps, theta),
            Binning::PaperTan { .. } => tan_condition(d, eps, theta),
        }
    }
}

/// `|theta(g) - theta| <= eps`.
pub fn angular_condition(d: Displacement, eps: f64, theta: f64) -> bool {
    if d.is_identity() {
        return false;
    }
    let slope = (d.d2 as f64).atan2(d.d1 as f64);
    (slope - theta).abs() <= eps
}

/// `|d2/d1 - tan theta| <= eps`; at `theta = pi/2` the reciprocal `d1/d2 <= eps` is used.
pub fn tan_condition(d: Displacement, eps: f64, theta: f64) -> bool {
    if d.is_identity() {
        return false;
    }
    if theta >= FRAC_PI_2 - HALF_PI_SLACK {
        return d.d2 > 0 && (d.d1 as f64 / d.d2 as f64) <= eps;
    }
    if d.d1 == 0 {
        return false;
    }
    (d.d2 as f64 / d.d1 as f64 - theta.tan()).abs() <= eps
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMeta {
    pub l_max: u32,
    pub dedup: Dedup,
    pub lambda: f64,
    pub lambda_supplied: bool,
    /// Annuli `1..=horizon` are exact; later ones are lower bounds.
    pub horizon: u32,
    /// Unix seconds.
    pub built_at: u64,
    /// Records skipped for lacking a slope (the identity).
    pub skipped: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeSpectrum {
    pub fingerprint: String,
    pub binning: Binning,
    pub n_max: u32,
    /// `counts[n - 1][bin]`.
    pub counts: Vec<Vec<u64>>,
    /// `totals[n - 1] = sum of counts[n - 1]`.
    pub totals: Vec<u64>,
    /// Exact counts per displacement class, restricted to annuli `<= n_max`.
    pub classes: BTreeMap<Displacement, u64>,
    pub meta: SpectrumMeta,
}

impl SlopeSpectrum {
    fn check_n(&self, n: u32) -> Result<()> {
        if n == 0 || n > self.n_max {
            return Err(Error::input(format!(
                "annulus {n} outside 1..={}",
                self.n_max
            )));
        }
        Ok(())
    }

    pub fn annulus_count(&self, n: u32) -> Result<u64> {
        self.check_n(n)?;
        Ok(self.totals[n as usize - 1])
    }

    /// Whether annulus `n` is a complete count rather than a lower bound.
    pub fn is_exact(&self, n: u32) -> bool {
        n <= self.meta.horizon
    }

    /// Number of annulus-`n` elements whose slope is `eps`-close to `theta` in this binning's mode.
    pub fn slope_annulus_count(&self, eps: f64, theta: f64, n: u32) -> Result<u64> {
        check_slope_args(eps, theta)?;
        self.check_n(n)?;
        Ok(self
            .classes
            .iter()
            .filter(|(d, _)| d.annulus() == n && self.binning.slope_condition(**d, eps, theta))
            .map(|(_, c)| *c)
            .sum())
    }

    /// `slope_annulus_count` for every `n` in `1..=n_max`, indexed by `n - 1`.
    pub fn slope_series(&self, eps: f64, theta: f64) -> Result<Vec<u64>> {
        check_slope_args(eps, theta)?;
        let mut out = vec![0u64; self.n_max as usize];
        for (d, c) in &self.classes {
            if self.binning.slope_condition(*d, eps, theta) {
                out[d.annulus() as usize - 1] += c;
            }
        }
        Ok(out)
    }

    pub fn total_elements(&self) -> u64 {
        self.totals.iter().sum()
    }
}

fn check_slope_args(eps: f64, theta: f64) -> Result<()> {
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::input(format!("eps must be positive, got {eps}")));
    }
    if !(0.0..=FRAC_PI_2).contains(&theta) {
        return Err(Error::input(format!("theta {theta} outside [0, pi/2]")));
    }
    Ok(())
}

/// Where a spectrum's elements came from.
#[derive(Debug, Clone, PartialEq)]
pub struct BuildContext {
    pub fingerprint: String,
    pub l_max: u32,
    pub dedup: Dedup,
    pub lambda: f64,
    pub lambda_supplied: bool,
    pub horizon: u32,
    /// Permit `n_max` beyond the completeness horizon.
    pub allow_beyond_horizon: bool,
}

impl BuildContext {
    pub fn for_spec(spec: &ProductGroupSpec, l_max: u32, dedup: Dedup) -> Result<Self> {
        Ok(BuildContext {
            fingerprint: spec.fingerprint(),
            l_max,
            dedup,
            lambda: spec.completeness().factor,
            lambda_supplied: spec.completeness().supplied,
            horizon: completeness_horizon(spec, l_max)?,
            allow_beyond_horizon: false,
        })
    }
}

/// Accumulates displacement classes; shards merge by entrywise addition.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SpectrumAccumulator {
    classes: BTreeMap<Displacement, u64>,
    skipped: u64,
}

impl SpectrumAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, d: Displacement, count: u64) -> Result<()> {
        if d.is_identity() {
            self.skipped = self.skipped.checked_add(count).ok_or(Error::Overflow("skipped"))?;
            return Ok(());
        }
        let slot = self.classes.entry(d).or_insert(0);
        *slot = slot.checked_add(count).ok_or(Error::Overflow("class count"))?;
        Ok(())
    }

    pub fn merge(&mut self, other: &SpectrumAccumulator) -> Result<()> {
        for (d, c) in &other.classes {
            self.add(*d, *c)?;
        }
        self.skipped = self
            .skipped
            .checked_add(other.skipped)
            .ok_or(Error::Overflow("skipped"))?;
        Ok(())
    }

    pub fn finish(self, binning: Binning, n_max: u32, ctx: &BuildContext) -> Result<SlopeSpectrum> {
        binning.validate()?;
        if n_max > ctx.horizon && !ctx.allow_beyond_horizon {
            return Err(Error::config(format!(
                "n_max {n_max} exceeds the completeness horizon {}; pass the override to accept lower bounds",
                ctx.horizon
            )));
        }
        let bins = binning.bin_count();
        let mut counts = vec![vec![0u64; bins]; n_max as usize];
        let mut classes = BTreeMap::new();
        for (d, c) in self.classes {
            let n = d.annulus();
            if n > n_max {
                continue;
            }
            let cell = &mut counts[n as usize - 1][binning.bin_of(d)];
            *cell = cell.checked_add(c).ok_or(Error::Overflow("annulus bin"))?;
            classes.insert(d, c);
        }
        let totals = counts
            .iter()
            .map(|row| {
                row.iter()
                    .try_fold(0u64, |acc, &c| acc.checked_add(c))
                    .ok_or(Error::Overflow("annulus total"))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SlopeSpectrum {
            fingerprint: ctx.fingerprint.clone(),
            binning,
            n_max,
            counts,
            totals,
            classes,
            meta: SpectrumMeta {
                l_max: ctx.l_max,
                dedup: ctx.dedup,
                lambda: ctx.lambda,
                lambda_supplied: ctx.lambda_supplied,
                horizon: ctx.horizon,
                built_at: now_secs(),
                skipped: self.skipped,
            },
        })
    }
}

fn now_secs() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Aggregates a record stream into a spectrum over annuli `1..=n_max`.
pub fn build_spectrum(
    records: impl IntoIterator<Item = ElementRecord>,
    binning: Binning,
    n_max: u32,
    ctx: &BuildContext,
) -> Result<SlopeSpectrum> {
    let mut acc = SpectrumAccumulator::new();
    for rec in records {
        acc.add(rec.displacement, 1)?;
    }
    acc.finish(binning, n_max, ctx)
}

/// Enumerates `spec` to abstract length `l_max` on `jobs` workers and aggregates the
/// result. `n_max` defaults to the completeness horizon.
pub fn compute_spectrum(
    spec: &ProductGroupSpec,
    l_max: u32,
    binning: Binning,
    dedup: Dedup,
    jobs: usize,
    n_max: Option<u32>,
) -> Result<SlopeSpectrum> {
    binning.validate()?;
    let ctx = BuildContext::for_spec(spec, l_max, dedup)?;
    let n_max = n_max.unwrap_or(ctx.horizon);
    let tally = action::tally(spec, l_max, dedup, jobs)?;
    let mut acc = SpectrumAccumulator::new();
    for (d, c) in tally.entries() {
        acc.add(d, c)?;
    }
    acc.finish(binning, n_max, &ctx)
}

/// Number of reduced words of length `k` in the free group of rank `m`.
pub fn free_sphere_size(m: u32, k: u32) -> u128 {
    assert!(m >= 1, "rank must be positive");
    if k == 0 {
        return 1;
    }
    2 * m as u128 * (2 * m as u128 - 1).pow(k - 1)
}

/// Sphere sizes of the Cayley graph of `F_m` for radii `0..=k_max`, by breadth-first search.
pub fn sphere_sizes_bfs(m: usize, k_max: u32) -> Result<Vec<u64>> {
    let al: Arc<Alphabet> = Alphabet::indexed("f", m)?;
    let gens: Vec<ReducedWord> = (0..m as u32)
        .flat_map(|i| [Letter::new(i, false), Letter::new(i, true)])
        .map(|l| ReducedWord::from_reduced_unchecked(&al, vec![l]))
        .collect();
    let mut visited: HashSet<ReducedWord> = HashSet::new();
    let identity = ReducedWord::identity(&al);
    visited.insert(identity.clone());
    let mut frontier = vec![identity];
    let mut sizes = vec![1u64];
    for _ in 0..k_max {
        let mut next = Vec::new();
        for w in &frontier {
            for g in &gens {
                let v = w.multiply(g)?;
                if visited.insert(v.clone()) {
                    next.push(v);
                }
            }
        }
        sizes.push(next.len() as u64);
        frontier = next;
    }
    Ok(sizes)
}
