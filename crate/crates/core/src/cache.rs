//! Plain-text spectrum cache.
//!
//! ```text
//! slopegrowth-spectrum v1
//! fingerprint=...
//! binning=angular
//! bins=90
//! ...
//! [counts]
//! n,bin_index,count
//! 2,44,4
//! [classes]
//! d1,d2,count
//! 1,1,4
//! end=<number of data rows>
//! ```
//!
//! Only nonzero rows are written. Loading rebuilds the matrix from the classes and
//! rejects files whose `[counts]` section disagrees.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::action::{Dedup, Displacement};
use crate::error::{Error, Result};
use crate::spectrum::{BuildContext, Binning, SlopeSpectrum, SpectrumAccumulator};

const MAGIC: &str = "slopegrowth-spectrum v1";

pub fn render_spectrum(s: &SlopeSpectrum) -> String {
    let mut out = String::new();
    let mut rows = 0usize;
    writeln!(out, "{MAGIC}").unwrap();
    writeln!(out, "fingerprint={}", s.fingerprint).unwrap();
    writeln!(out, "binning={}", s.binning.mode_name()).unwrap();
    match &s.binning {
        Binning::Angular { bins } => writeln!(out, "bins={bins}").unwrap(),
        Binning::PaperTan { grid } => {
            let g: Vec<String> = grid.iter().map(|v| format!("{v:?}")).collect();
            writeln!(out, "grid={}", g.join(";")).unwrap();
        }
    }
    writeln!(out, "n_max={}", s.n_max).unwrap();
    writeln!(out, "l_max={}", s.meta.l_max).unwrap();
    writeln!(out, "dedup={}", dedup_name(s.meta.dedup)).unwrap();
    writeln!(out, "lambda={:?}", s.meta.lambda).unwrap();
    writeln!(out, "lambda_supplied={}", s.meta.lambda_supplied).unwrap();
    writeln!(out, "horizon={}", s.meta.horizon).unwrap();
    writeln!(out, "built_at={}", s.meta.built_at).unwrap();
    writeln!(out, "skipped={}", s.meta.skipped).unwrap();
    writeln!(out, "[counts]\nn,bin_index,count").unwrap();
    for (i, row) in s.counts.iter().enumerate() {
        for (b, &c) in row.iter().enumerate() {
            if c > 0 {
                writeln!(out, "{},{b},{c}", i + 1).unwrap();
                rows += 1;
            }
        }
    }
    writeln!(out, "[classes]\nd1,d2,count").unwrap();
    for (d, c) in &s.classes {
        writeln!(out, "{},{},{c}", d.d1, d.d2).unwrap();
        rows += 1;
    }
    writeln!(out, "end={rows}").unwrap();
    out
}

/// Writes via a temporary file and rename so readers never see a partial cache.
pub fn save_spectrum(s: &SlopeSpectrum, path: &Path) -> Result<()> {
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(render_spectrum(s).as_bytes())
        .and_then(|_| f.sync_all())
        .map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn load_spectrum(path: &Path) -> Result<SlopeSpectrum> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_spectrum(&text).map_err(|reason| Error::format(path, reason))
}

/// Loads a cache and checks it was built for `fingerprint`.
pub fn load_spectrum_for(path: &Path, fingerprint: &str) -> Result<SlopeSpectrum> {
    let s = load_spectrum(path)?;
    if s.fingerprint != fingerprint {
        return Err(Error::format(
            path,
            format!("fingerprint {} does not match spec {fingerprint}", s.fingerprint),
        ));
    }
    Ok(s)
}

fn dedup_name(d: Dedup) -> &'static str {
    match d {
        Dedup::On => "on",
        Dedup::Off => "off",
    }
}

fn num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T, String> {
    s.trim().parse().map_err(|_| format!("bad {what} `{s}`"))
}

fn parse_spectrum(text: &str) -> Result<SlopeSpectrum, String> {
    let mut lines = text.lines();
    if lines.next() != Some(MAGIC) {
        return Err("missing header line".into());
    }
    let mut meta: HashMap<&str, &str> = HashMap::new();
    for line in lines.by_ref() {
        if line == "[counts]" {
            break;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("expected key=value, got `{line}`"))?;
        meta.insert(k, v);
    }
    let get = |k: &str| meta.get(k).copied().ok_or_else(|| format!("missing `{k}`"));
    if lines.next() != Some("n,bin_index,count") {
        return Err("missing counts header".into());
    }

    let mut rows = 0usize;
    let mut counts: BTreeMap<(u32, usize), u64> = BTreeMap::new();
    for line in lines.by_ref() {
        if line == "[classes]" {
            break;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 3 {
            return Err(format!("bad counts row `{line}`"));
        }
        counts.insert((num(f[0], "n")?, num(f[1], "bin")?), num(f[2], "count")?);
        rows += 1;
    }
    if lines.next() != Some("d1,d2,count") {
        return Err("missing classes section".into());
    }
    let mut acc = SpectrumAccumulator::new();
    let mut trailer = None;
    for line in lines.by_ref() {
        if let Some(n) = line.strip_prefix("end=") {
            trailer = Some(num::<usize>(n, "row total")?);
            break;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 3 {
            return Err(format!("bad class row `{line}`"));
        }
        let d = Displacement::new(num(f[0], "d1")?, num(f[1], "d2")?);
        acc.add(d, num(f[2], "count")?).map_err(|e| e.to_string())?;
        rows += 1;
    }
    match trailer {
        None => return Err("truncated: missing end line".into()),
        Some(n) if n != rows => return Err(format!("truncated: end line says {n} rows, found {rows}")),
        _ => {}
    }

    let binning = match get("binning")? {
        "angular" => Binning::Angular { bins: num(get("bins")?, "bins")? },
        "paper-tan" => Binning::PaperTan {
            grid: get("grid")?
                .split(';')
                .map(|v| num(v, "grid value"))
                .collect::<Result<_, _>>()?,
        },
        other => return Err(format!("unknown binning `{other}`")),
    };
    let dedup = match get("dedup")? {
        "on" => Dedup::On,
        "off" => Dedup::Off,
        other => return Err(format!("unknown dedup `{other}`")),
    };
    let ctx = BuildContext {
        fingerprint: get("fingerprint")?.to_string(),
        l_max: num(get("l_max")?, "l_max")?,
        dedup,
        lambda: num(get("lambda")?, "lambda")?,
        lambda_supplied: num(get("lambda_supplied")?, "lambda_supplied")?,
        horizon: num(get("horizon")?, "horizon")?,
        allow_beyond_horizon: true,
    };
    let skipped: u64 = num(get("skipped")?, "skipped")?;
    if skipped > 0 {
        acc.add(Displacement::new(0, 0), skipped).map_err(|e| e.to_string())?;
    }
    let mut s = acc
        .finish(binning, num(get("n_max")?, "n_max")?, &ctx)
        .map_err(|e| e.to_string())?;
    s.meta.built_at = num(get("built_at")?, "built_at")?;

    let mut rebuilt = BTreeMap::new();
    for (i, row) in s.counts.iter().enumerate() {
        for (b, &c) in row.iter().enumerate() {
            if c > 0 {
                rebuilt.insert((i as u32 + 1, b), c);
            }
        }
    }
    if rebuilt != counts {
        return Err("counts section disagrees with classes".into());
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use crate::spectrum::compute_spectrum;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn sample(binning: Binning) -> SlopeSpectrum {
        compute_spectrum(&presets::example41(), 6, binning, Dedup::Off, 1, None).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        for binning in [
            Binning::default(),
            Binning::PaperTan { grid: vec![0.0, 0.1, FRAC_PI_4, 1.1, FRAC_PI_2] },
        ] {
            let s = sample(binning);
            let path = dir.path().join("s.cache");
            save_spectrum(&s, &path).unwrap();
            let back = load_spectrum_for(&path, &s.fingerprint).unwrap();
            assert_eq!(back, s);
        }
    }

    #[test]
    fn truncation_is_detected() {
        let text = render_spectrum(&sample(Binning::default()));
        let cut: String = text.lines().take(text.lines().count() - 3).map(|l| format!("{l}\n")).collect();
        assert!(parse_spectrum(&cut).unwrap_err().contains("truncated"));
        let no_end: String = text.lines().filter(|l| !l.starts_with("end=")).map(|l| format!("{l}\n")).collect();
        assert!(parse_spectrum(&no_end).is_err());
    }

    #[test]
    fn tampering_is_detected() {
        let text = render_spectrum(&sample(Binning::default()));
        let bad = text.replacen("\n1,1,", "\n1,1,9", 1);
        assert!(parse_spectrum(&bad).is_err());
        assert!(parse_spectrum(&text.replace(MAGIC, "other v0")).is_err());
    }

    #[test]
    fn fingerprint_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.cache");
        save_spectrum(&sample(Binning::default()), &path).unwrap();
        let other = presets::example31().fingerprint();
        assert!(matches!(load_spectrum_for(&path, &other), Err(Error::Format { .. })));
    }
}
