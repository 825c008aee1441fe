//! TOML group-spec files.
//!
//! ```toml
//! generators = ["x", "y"]
//! injective = true   # optional, default false
//! lambda = 1.41      # optional; without it annuli past L_max are lower bounds
//!
//! [first]
//! name = "a"
//! rank = 2
//!
//! [second]
//! name = "b"
//! rank = 2
//!
//! [images]
//! x = { first = "a1", second = "b1" }
//! y = { first = "a2", second = "b2 b2" }
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::action::{Completeness, Injectivity, ProductGroupSpec};
use crate::error::{Error, Result};
use crate::word::{Alphabet, GeneratorMap};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FactorDecl {
    name: String,
    rank: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ImageDecl {
    #[serde(default)]
    first: String,
    #[serde(default)]
    second: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    generators: Vec<String>,
    #[serde(default)]
    injective: bool,
    lambda: Option<f64>,
    first: FactorDecl,
    second: FactorDecl,
    images: BTreeMap<String, ImageDecl>,
}

pub fn parse_spec(text: &str) -> Result<ProductGroupSpec> {
    let file: SpecFile =
        toml::from_str(text).map_err(|e| Error::input(format!("invalid spec file: {e}")))?;
    let g = Alphabet::new("g", file.generators.clone())?;
    let a = Alphabet::indexed(&file.first.name, file.first.rank)?;
    let b = Alphabet::indexed(&file.second.name, file.second.rank)?;
    if let Some(extra) = file.images.keys().find(|k| g.index_of(k).is_none()) {
        return Err(Error::input(format!("image given for unknown generator `{extra}`")));
    }
    let mut first = Vec::with_capacity(g.rank());
    let mut second = Vec::with_capacity(g.rank());
    for label in g.labels() {
        let decl = file
            .images
            .get(label)
            .ok_or_else(|| Error::input(format!("missing image for generator `{label}`")))?;
        first.push(a.parse_word(&decl.first)?);
        second.push(b.parse_word(&decl.second)?);
    }
    let completeness = match file.lambda {
        Some(l) => Completeness::supplied(l),
        None => Completeness::unverified_default(),
    };
    let injectivity = if file.injective {
        Injectivity::CertifiedInjective
    } else {
        Injectivity::Unknown
    };
    ProductGroupSpec::new(
        GeneratorMap::new(&g, &a, first)?,
        GeneratorMap::new(&g, &b, second)?,
        injectivity,
        completeness,
    )
}

pub fn load_spec(path: &Path) -> Result<ProductGroupSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let spec = parse_spec(&text)?;
    if !spec.completeness().supplied {
        log::warn!(
            "{}: no lambda given; annulus counts beyond floor(lambda * L_max) with lambda = 1 are lower bounds only",
            path.display()
        );
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    const EX41: &str = r#"
generators = ["x", "y"]
injective = true
lambda = 1.4142135623730951

[first]
name = "a"
rank = 2

[second]
name = "b"
rank = 2

[images]
x = { first = "a1", second = "b1" }
y = { first = "a2", second = "b2 b2" }
"#;

    #[test]
    fn file_matches_builtin_preset() {
        let s = parse_spec(EX41).unwrap();
        let p = presets::example41();
        assert_eq!(s.canonical_text(), p.canonical_text());
        assert_eq!(s.fingerprint(), p.fingerprint());
    }

    #[test]
    fn defaults_and_errors() {
        let text = EX41.replace("injective = true\n", "").replace("lambda = 1.4142135623730951\n", "");
        let s = parse_spec(&text).unwrap();
        assert_eq!(s.injectivity(), Injectivity::Unknown);
        assert!(!s.completeness().supplied);

        assert!(parse_spec(&EX41.replace("b2 b2", "b3")).is_err());
        assert!(parse_spec(&EX41.replace("y = {", "z = {")).is_err());
        assert!(parse_spec(&EX41.replace("lambda = 1.4142135623730951", "lambda = 0.0")).is_err());
        assert!(parse_spec("not toml [").is_err());
    }
}
