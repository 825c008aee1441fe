//! Free-group arithmetic on freely reduced words.
//!
//! Words are kept reduced at all times, so `len()` is always the word metric
//! distance to the identity in the Cayley graph of the free group on the
//! word's alphabet. The identity is the empty word.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A named, ordered set of free generators.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Alphabet {
    name: String,
    labels: Vec<String>,
}

impl Alphabet {
    pub fn new(name: impl Into<String>, labels: Vec<String>) -> Result<Arc<Self>> {
        let name = name.into();
        if labels.is_empty() {
            return Err(Error::input(format!("alphabet `{name}` must have rank >= 1")));
        }
        for (i, label) in labels.iter().enumerate() {
            if !is_valid_label(label) {
                return Err(Error::input(format!(
                    "alphabet `{name}`: invalid generator label `{label}`"
                )));
            }
            if labels[..i].contains(label) {
                return Err(Error::input(format!(
                    "alphabet `{name}`: duplicate generator label `{label}`"
                )));
            }
        }
        Ok(Arc::new(Alphabet { name, labels }))
    }

    /// Alphabet `name` with generators `name1, ..., name{rank}`.
    pub fn indexed(name: impl Into<String>, rank: usize) -> Result<Arc<Self>> {
        let name = name.into();
        let labels = (1..=rank).map(|i| format!("{name}{i}")).collect();
        Self::new(name, labels)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rank(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, index: u32) -> Option<&str> {
        self.labels.get(index as usize).map(String::as_str)
    }

    pub fn index_of(&self, label: &str) -> Option<u32> {
        self.labels.iter().position(|l| l == label).map(|i| i as u32)
    }

    /// Parses the whitespace-separated literal syntax (`a1 a2^-1 b3`).
    /// The empty string is the identity.
    pub fn parse_word(self: &Arc<Self>, literal: &str) -> Result<ReducedWord> {
        let mut raw = Vec::new();
        for token in literal.split_whitespace() {
            let (label, exponent) = match token.split_once('^') {
                Some((label, exp)) => {
                    let exp: i64 = exp.parse().map_err(|_| {
                        Error::input(format!("bad exponent in token `{token}`"))
                    })?;
                    if exp == 0 {
                        return Err(Error::input(format!("zero exponent in token `{token}`")));
                    }
                    (label, exp)
                }
                None => (token, 1),
            };
            let index = self.index_of(label).ok_or_else(|| {
                Error::input(format!(
                    "unknown token `{token}` for alphabet `{}`",
                    self.name
                ))
            })?;
            let letter = Letter::new(index, exponent < 0);
            for _ in 0..exponent.unsigned_abs() {
                raw.push(letter);
            }
        }
        reduce(&raw, self)
    }
}

fn is_valid_label(label: &str) -> bool {
    !label.is_empty()
        && label
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// A generator or its inverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Letter {
    pub index: u32,
    pub inverse: bool,
}

impl Letter {
    pub const fn new(index: u32, inverse: bool) -> Self {
        Letter { index, inverse }
    }

    pub const fn inv(self) -> Self {
        Letter {
            index: self.index,
            inverse: !self.inverse,
        }
    }

    /// Dense code `2 * index + inverse`; a letter and its inverse differ in the low bit.
    /// Code order is the lexicographic letter order `x1 < x1^-1 < x2 < ...`.
    pub const fn code(self) -> u32 {
        (self.index << 1) | self.inverse as u32
    }

    pub const fn from_code(code: u32) -> Self {
        Letter {
            index: code >> 1,
            inverse: code & 1 == 1,
        }
    }
}

/// A freely reduced word over an [`Alphabet`].
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ReducedWord {
    alphabet: Arc<Alphabet>,
    letters: Vec<Letter>,
}

impl ReducedWord {
    pub fn identity(alphabet: &Arc<Alphabet>) -> Self {
        ReducedWord {
            alphabet: Arc::clone(alphabet),
            letters: Vec::new(),
        }
    }

    pub fn generator(alphabet: &Arc<Alphabet>, index: u32) -> Result<Self> {
        reduce(&[Letter::new(index, false)], alphabet)
    }

    /// Trusts the caller that `letters` is reduced and valid.
    pub(crate) fn from_reduced_unchecked(alphabet: &Arc<Alphabet>, letters: Vec<Letter>) -> Self {
        debug_assert!(letters.windows(2).all(|w| w[0] != w[1].inv()));
        ReducedWord {
            alphabet: Arc::clone(alphabet),
            letters,
        }
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    /// Word length, equal to the distance from the identity in the Cayley graph.
    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn multiply(&self, other: &ReducedWord) -> Result<ReducedWord> {
        same_alphabet(&self.alphabet, &other.alphabet)?;
        let mut letters = self.letters.clone();
        for &l in &other.letters {
            push_reducing(&mut letters, l);
        }
        Ok(ReducedWord {
            alphabet: Arc::clone(&self.alphabet),
            letters,
        })
    }

    pub fn invert(&self) -> ReducedWord {
        ReducedWord {
            alphabet: Arc::clone(&self.alphabet),
            letters: self.letters.iter().rev().map(|l| l.inv()).collect(),
        }
    }
}

impl fmt::Debug for ReducedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ReducedWord({:?})", self.to_string())
    }
}

/// Renders in the literal syntax accepted by [`Alphabet::parse_word`].
impl fmt::Display for ReducedWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, l) in self.letters.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            let label = self.alphabet.label(l.index).unwrap_or("?");
            if l.inverse {
                write!(f, "{label}^-1")?;
            } else {
                f.write_str(label)?;
            }
        }
        Ok(())
    }
}

fn push_reducing(stack: &mut Vec<Letter>, l: Letter) {
    if stack.last() == Some(&l.inv()) {
        stack.pop();
    } else {
        stack.push(l);
    }
}

pub(crate) fn same_alphabet(expected: &Arc<Alphabet>, found: &Arc<Alphabet>) -> Result<()> {
    if Arc::ptr_eq(expected, found) || expected == found {
        Ok(())
    } else {
        Err(Error::AlphabetMismatch {
            expected: expected.name.clone(),
            found: found.name.clone(),
        })
    }
}

/// Free reduction in a single stack pass.
pub fn reduce(raw: &[Letter], alphabet: &Arc<Alphabet>) -> Result<ReducedWord> {
    let rank = alphabet.rank() as u32;
    let mut letters = Vec::with_capacity(raw.len());
    for &l in raw {
        if l.index >= rank {
            return Err(Error::input(format!(
                "generator index {} out of range for alphabet `{}` of rank {rank}",
                l.index, alphabet.name
            )));
        }
        push_reducing(&mut letters, l);
    }
    Ok(ReducedWord {
        alphabet: Arc::clone(alphabet),
        letters,
    })
}

/// Assignment of one image word per source generator; extends to a homomorphism.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorMap {
    source: Arc<Alphabet>,
    target: Arc<Alphabet>,
    images: Vec<ReducedWord>,
}

impl GeneratorMap {
    pub fn new(
        source: &Arc<Alphabet>,
        target: &Arc<Alphabet>,
        images: Vec<ReducedWord>,
    ) -> Result<Self> {
        if images.len() != source.rank() {
            return Err(Error::input(format!(
                "generator map from `{}` needs {} images, got {}",
                source.name,
                source.rank(),
                images.len()
            )));
        }
        for img in &images {
            same_alphabet(target, &img.alphabet)?;
        }
        Ok(GeneratorMap {
            source: Arc::clone(source),
            target: Arc::clone(target),
            images,
        })
    }

    pub fn source(&self) -> &Arc<Alphabet> {
        &self.source
    }

    pub fn target(&self) -> &Arc<Alphabet> {
        &self.target
    }

    pub fn images(&self) -> &[ReducedWord] {
        &self.images
    }

    /// Image of a single signed letter.
    pub fn letter_image(&self, l: Letter) -> ReducedWord {
        let img = &self.images[l.index as usize];
        if l.inverse {
            img.invert()
        } else {
            img.clone()
        }
    }

    /// Reduced image of `w` under the homomorphism extending this map.
    pub fn apply(&self, w: &ReducedWord) -> Result<ReducedWord> {
        same_alphabet(&self.source, &w.alphabet)?;
        let mut letters = Vec::new();
        for &l in &w.letters {
            let img = &self.images[l.index as usize];
            if l.inverse {
                for &t in img.letters.iter().rev() {
                    push_reducing(&mut letters, t.inv());
                }
            } else {
                for &t in &img.letters {
                    push_reducing(&mut letters, t);
                }
            }
        }
        Ok(ReducedWord {
            alphabet: Arc::clone(&self.target),
            letters,
        })
    }
}

/// Free-function form of [`ReducedWord::multiply`].
pub fn multiply(u: &ReducedWord, v: &ReducedWord) -> Result<ReducedWord> {
    u.multiply(v)
}

/// Free-function form of [`ReducedWord::invert`].
pub fn invert(w: &ReducedWord) -> ReducedWord {
    w.invert()
}

/// Free-function form of [`GeneratorMap::apply`].
pub fn apply_map(h: &GeneratorMap, w: &ReducedWord) -> Result<ReducedWord> {
    h.apply(w)
}
