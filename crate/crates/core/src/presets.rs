//! Built-in group specs for the worked examples.

use std::f64::consts::SQRT_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::action::{Completeness, Injectivity, ProductGroupSpec};
use crate::error::{Error, Result};
use crate::word::{Alphabet, GeneratorMap};

fn build(
    labels: &[&str],
    first_rank: usize,
    second_rank: usize,
    images: &[(&str, &str)],
    lambda: f64,
) -> ProductGroupSpec {
    let g = Alphabet::new("g", labels.iter().map(|s| s.to_string()).collect())
        .expect("preset labels are valid");
    let a = Alphabet::indexed("a", first_rank).expect("rank >= 1");
    let b = Alphabet::indexed("b", second_rank).expect("rank >= 1");
    let parse = |al: &std::sync::Arc<Alphabet>, s: &str| al.parse_word(s).expect("preset literal");
    let h1 = GeneratorMap::new(&g, &a, images.iter().map(|(x, _)| parse(&a, x)).collect())
        .expect("one image per generator");
    let h2 = GeneratorMap::new(&g, &b, images.iter().map(|(_, y)| parse(&b, y)).collect())
        .expect("one image per generator");
    ProductGroupSpec::new(
        h1,
        h2,
        Injectivity::CertifiedInjective,
        Completeness::supplied(lambda),
    )
    .expect("preset spec is consistent")
}

/// Diagonal `F_2` in `F_2 x F_2`: generated by `(a1, b1), (a2, b2)`.
///
/// Every element sits at slope pi/4 with `r = sqrt(2) |w|`.
pub fn example31() -> ProductGroupSpec {
    build(&["s1", "s2"], 2, 2, &[("a1", "b1"), ("a2", "b2")], SQRT_2)
}

/// Generated by `x = (a1, b1), y = (a2, b2^2)`; slopes fill `[pi/4, arctan 2]`.
///
/// The first projection is the identity on words, so `d1 = |w|` and `r >= sqrt(2) |w|`.
pub fn example41() -> ProductGroupSpec {
    build(&["x", "y"], 2, 2, &[("a1", "b1"), ("a2", "b2 b2")], SQRT_2)
}

/// Subgroup of `F_2 x F_N` generated by `(a1, b1), (a2, b2), (1, b3), ..., (1, bN)`.
///
/// The second projection is an isomorphism onto `F_N`, so `r >= d2 = |w|`.
pub fn example51(n_rank: usize) -> Result<ProductGroupSpec> {
    if n_rank < 3 {
        return Err(Error::input(format!(
            "example51 needs N >= 3, got {n_rank}"
        )));
    }
    let labels: Vec<String> = (1..=n_rank).map(|i| format!("g{i}")).collect();
    let labels: Vec<&str> = labels.iter().map(String::as_str).collect();
    let seconds: Vec<String> = (1..=n_rank).map(|i| format!("b{i}")).collect();
    let images: Vec<(&str, &str)> = seconds
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let a = match i {
                0 => "a1",
                1 => "a2",
                _ => "",
            };
            (a, b.as_str())
        })
        .collect();
    Ok(build(&labels, 2, n_rank, &images, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum Preset {
    Example31,
    Example41,
    Example51 { n_rank: usize },
}

pub const PRESET_NAMES: [&str; 3] = ["example31", "example41", "example51"];

impl Preset {
    pub fn from_name(name: &str, n_rank: Option<usize>) -> Result<Self> {
        match name {
            "example31" => Ok(Preset::Example31),
            "example41" => Ok(Preset::Example41),
            "example51" => {
                let n_rank = n_rank.unwrap_or(4);
                if n_rank < 3 {
                    return Err(Error::input(format!("example51 needs N >= 3, got {n_rank}")));
                }
                Ok(Preset::Example51 { n_rank })
            }
            other => Err(Error::Usage(format!(
                "unknown preset `{other}`; valid presets: {}",
                PRESET_NAMES.join(", ")
            ))),
        }
    }

    pub fn spec(&self) -> Result<ProductGroupSpec> {
        match *self {
            Preset::Example31 => Ok(example31()),
            Preset::Example41 => Ok(example41()),
            Preset::Example51 { n_rank } => example51(n_rank),
        }
    }

    /// Depth used by the reference runs.
    pub fn default_l_max(&self) -> u32 {
        match self {
            Preset::Example31 => 12,
            Preset::Example41 => 11,
            Preset::Example51 { n_rank } if *n_rank <= 4 => 10,
            Preset::Example51 { n_rank } => {
                // keep the word count near the N = 4 run
                let per_level = (2 * n_rank - 1) as f64;
                ((3.3e8f64).ln() / per_level.ln()).floor().max(4.0) as u32
            }
        }
    }

    /// Decreasing slope-tolerance schedule used by default.
    ///
    /// The single-slope example needs a smallest tolerance below the 1 degree
    /// grid step, otherwise neighbouring grid points see its mass.
    pub fn default_eps_schedule(&self) -> Vec<f64> {
        match self {
            Preset::Example31 => vec![0.4, 0.2, 0.1, 0.05, 0.01],
            _ => vec![0.4, 0.2, 0.1, 0.05],
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preset::Example31 => f.write_str("example31"),
            Preset::Example41 => f.write_str("example41"),
            Preset::Example51 { n_rank } => write!(f, "example51(N={n_rank})"),
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::from_name(s, None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_preset_lists_valid_names() {
        let err = Preset::from_name("example99", None).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Usage(_)));
        for name in PRESET_NAMES {
            assert!(msg.contains(name));
        }
    }

    #[test]
    fn example51_rank_guard() {
        assert!(example51(2).is_err());
        assert!(Preset::from_name("example51", Some(2)).is_err());
        assert_eq!(example51(3).unwrap().generators().rank(), 3);
    }

    #[test]
    fn example51_images() {
        let s = example51(5).unwrap();
        let img: Vec<String> = s.to_first().images().iter().map(|w| w.to_string()).collect();
        assert_eq!(img, ["a1", "a2", "", "", ""]);
        let img: Vec<String> = s.to_second().images().iter().map(|w| w.to_string()).collect();
        assert_eq!(img, ["b1", "b2", "b3", "b4", "b5"]);
    }
}
