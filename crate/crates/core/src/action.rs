//! Subgroups of `F_k x F_m` given by generator pairs, acting on the product
//! of the two Cayley trees with the l2 product metric.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::word::{same_alphabet, Alphabet, GeneratorMap, Letter, ReducedWord};

/// Whether distinct reduced abstract words are known to give distinct elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Injectivity {
    CertifiedInjective,
    Unknown,
}

/// Lower bound `lambda` on `r(g) / |w|` over nonidentity abstract words `w`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Completeness {
    pub factor: f64,
    /// False when the factor is a default rather than a proven bound.
    pub supplied: bool,
}

impl Completeness {
    pub fn supplied(factor: f64) -> Self {
        Completeness {
            factor,
            supplied: true,
        }
    }

    pub fn unverified_default() -> Self {
        Completeness {
            factor: 1.0,
            supplied: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProductGroupSpec {
    generators: Arc<Alphabet>,
    to_first: GeneratorMap,
    to_second: GeneratorMap,
    injectivity: Injectivity,
    completeness: Completeness,
}

impl ProductGroupSpec {
    pub fn new(
        to_first: GeneratorMap,
        to_second: GeneratorMap,
        injectivity: Injectivity,
        completeness: Completeness,
    ) -> Result<Self> {
        same_alphabet(to_first.source(), to_second.source())?;
        if !(completeness.factor > 0.0 && completeness.factor.is_finite()) {
            return Err(Error::config(format!(
                "completeness factor must be positive, got {}",
                completeness.factor
            )));
        }
        Ok(ProductGroupSpec {
            generators: Arc::clone(to_first.source()),
            to_first,
            to_second,
            injectivity,
            completeness,
        })
    }

    pub fn generators(&self) -> &Arc<Alphabet> {
        &self.generators
    }

    pub fn first_factor(&self) -> &Arc<Alphabet> {
        self.to_first.target()
    }

    pub fn second_factor(&self) -> &Arc<Alphabet> {
        self.to_second.target()
    }

    pub fn to_first(&self) -> &GeneratorMap {
        &self.to_first
    }

    pub fn to_second(&self) -> &GeneratorMap {
        &self.to_second
    }

    pub fn injectivity(&self) -> Injectivity {
        self.injectivity
    }

    pub fn completeness(&self) -> Completeness {
        self.completeness
    }

    /// Canonical text form; the fingerprint is a hash of this.
    pub fn canonical_text(&self) -> String {
        let mut s = String::new();
        for (tag, al) in [
            ("first", self.first_factor()),
            ("second", self.second_factor()),
            ("generators", &self.generators),
        ] {
            let _ = writeln!(s, "{tag}={}:{}", al.name(), al.labels().join(","));
        }
        for (i, label) in self.generators.labels().iter().enumerate() {
            let _ = writeln!(
                s,
                "image {label} = {} | {}",
                self.to_first.images()[i],
                self.to_second.images()[i]
            );
        }
        let _ = writeln!(
            s,
            "injective={}",
            self.injectivity == Injectivity::CertifiedInjective
        );
        let _ = writeln!(
            s,
            "lambda={}{}",
            self.completeness.factor,
            if self.completeness.supplied { "" } else { " (default)" }
        );
        s
    }

    /// First 16 hex digits of the SHA-256 of [`Self::canonical_text`].
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.canonical_text().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Displacement of the element named by the abstract word `w`.
    pub fn displacement(&self, w: &ReducedWord) -> Result<Displacement> {
        let first = self.to_first.apply(w)?;
        let second = self.to_second.apply(w)?;
        Ok(Displacement::new(first.len() as u32, second.len() as u32))
    }

    pub fn record(&self, w: ReducedWord) -> Result<ElementRecord> {
        let first = self.to_first.apply(&w)?;
        let second = self.to_second.apply(&w)?;
        let displacement = Displacement::new(first.len() as u32, second.len() as u32);
        Ok(ElementRecord {
            word: w,
            first,
            second,
            displacement,
        })
    }
}

/// Factor distances of an orbit point from the base point `(1, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Displacement {
    pub d1: u32,
    pub d2: u32,
}

impl Displacement {
    pub const fn new(d1: u32, d2: u32) -> Self {
        Displacement { d1, d2 }
    }

    pub fn is_identity(&self) -> bool {
        self.d1 == 0 && self.d2 == 0
    }

    /// `d1^2 + d2^2`, exact.
    pub fn r_squared(&self) -> u64 {
        let (a, b) = (self.d1 as u64, self.d2 as u64);
        a * a + b * b
    }

    pub fn r(&self) -> f64 {
        (self.r_squared() as f64).sqrt()
    }

    /// Annulus index `n` with `n - 1 <= r < n`, computed with an integer square root.
    pub fn annulus(&self) -> u32 {
        (self.r_squared().isqrt() + 1) as u32
    }

    /// Slope `arctan(d2 / d1)` in `[0, pi/2]`.
    pub fn theta(&self) -> Result<f64> {
        if self.is_identity() {
            return Err(Error::domain("slope of the identity element is undefined"));
        }
        Ok((self.d2 as f64).atan2(self.d1 as f64))
    }
}

/// An enumerated element: abstract word, its two projections and its displacement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElementRecord {
    pub word: ReducedWord,
    pub first: ReducedWord,
    pub second: ReducedWord,
    pub displacement: Displacement,
}

/// `floor(lambda * l_max)`: every element with `r < n_max` has an abstract word of length `<= l_max`.
pub fn completeness_horizon(spec: &ProductGroupSpec, l_max: u32) -> Result<u32> {
    horizon_for(spec.completeness.factor, l_max)
}

pub(crate) fn horizon_for(lambda: f64, l_max: u32) -> Result<u32> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::config(format!(
            "completeness factor must be positive, got {lambda}"
        )));
    }
    Ok((lambda * l_max as f64).floor() as u32)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dedup {
    On,
    Off,
}

/// Default cap on distinct image pairs held during deduplicated enumeration.
pub const DEFAULT_DEDUP_BUDGET: usize = 20_000_000;

/// Enumerates the elements named by reduced abstract words of length `1..=l_max`.
///
/// With [`Dedup::Off`] (certified-injective specs only) this streams in depth-first
/// order. With [`Dedup::On`] one record is kept per distinct image pair, the
/// representative being the shortest abstract word, ties broken lexicographically.
pub fn enumerate(spec: &ProductGroupSpec, l_max: u32, dedup: Dedup) -> Result<Enumeration<'_>> {
    enumerate_with_budget(spec, l_max, dedup, DEFAULT_DEDUP_BUDGET)
}

pub fn enumerate_with_budget(
    spec: &ProductGroupSpec,
    l_max: u32,
    dedup: Dedup,
    budget: usize,
) -> Result<Enumeration<'_>> {
    match dedup {
        Dedup::Off => {
            if spec.injectivity != Injectivity::CertifiedInjective {
                return Err(Error::config(
                    "dedup=off requires a certified-injective spec",
                ));
            }
            let engine = Engine::new(spec);
            Ok(Enumeration {
                inner: EnumerationInner::Stream {
                    walker: Box::new(Walker::new(engine, &[], l_max as usize)),
                    spec,
                },
            })
        }
        Dedup::On => {
            let records = dedup_records(spec, l_max, budget)?;
            Ok(Enumeration {
                inner: EnumerationInner::Buffered(records.into_iter()),
            })
        }
    }
}

pub struct Enumeration<'s> {
    inner: EnumerationInner<'s>,
}

enum EnumerationInner<'s> {
    Stream {
        walker: Box<Walker>,
        spec: &'s ProductGroupSpec,
    },
    Buffered(std::vec::IntoIter<ElementRecord>),
}

impl Iterator for Enumeration<'_> {
    type Item = ElementRecord;

    fn next(&mut self) -> Option<ElementRecord> {
        match &mut self.inner {
            EnumerationInner::Stream { walker, spec } => {
                if !walker.advance() {
                    return None;
                }
                Some(walker.record(spec))
            }
            EnumerationInner::Buffered(it) => it.next(),
        }
    }
}

/// Letter codes of the two projections.
type ImagePair = (Box<[u32]>, Box<[u32]>);

fn dedup_records(spec: &ProductGroupSpec, l_max: u32, budget: usize) -> Result<Vec<ElementRecord>> {
    let engine = Engine::new(spec);
    let mut seen: HashSet<ImagePair> = HashSet::new();
    // The identity pair is never emitted but still occupies its key.
    seen.insert((Box::new([]), Box::new([])));
    let mut out = Vec::new();
    for len in 1..=l_max as usize {
        let mut walker = Walker::new(engine.clone(), &[], len);
        while walker.advance() {
            if walker.word.len() != len {
                continue;
            }
            let key = (
                walker.first.clone().into_boxed_slice(),
                walker.second.clone().into_boxed_slice(),
            );
            if seen.contains(&key) {
                continue;
            }
            if seen.len() > budget {
                return Err(Error::Resource {
                    budget,
                    depth_reached: len as u32 - 1,
                });
            }
            seen.insert(key);
            out.push(walker.record(spec));
        }
    }
    Ok(out)
}

/// Commutative-monoid accumulator of element counts keyed by `(d1, d2)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DisplacementTally {
    cols: usize,
    counts: Vec<u64>,
}

impl DisplacementTally {
    pub fn new(max_d1: u32, max_d2: u32) -> Self {
        let rows = max_d1 as usize + 1;
        let cols = max_d2 as usize + 1;
        DisplacementTally {
            cols,
            counts: vec![0; rows * cols],
        }
    }

    #[inline]
    pub fn add(&mut self, d: Displacement) {
        let slot = &mut self.counts[d.d1 as usize * self.cols + d.d2 as usize];
        *slot = slot.checked_add(1).expect("element count overflowed u64");
    }

    pub fn merge(&mut self, other: &DisplacementTally) -> Result<()> {
        if self.cols != other.cols || self.counts.len() != other.counts.len() {
            return Err(Error::input("cannot merge tallies of different shapes"));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a = a.checked_add(*b).ok_or(Error::Overflow("tally merge"))?;
        }
        Ok(())
    }

    /// Nonzero `(displacement, count)` entries in `(d1, d2)` order.
    pub fn entries(&self) -> impl Iterator<Item = (Displacement, u64)> + '_ {
        let cols = self.cols;
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(move |(i, &c)| (Displacement::new((i / cols) as u32, (i % cols) as u32), c))
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Counts all elements up to abstract length `l_max`, sharded over `jobs` workers.
///
/// Deduplicated counting runs single-threaded over the buffered enumeration.
/// Results are identical for every `jobs`.
pub fn tally(spec: &ProductGroupSpec, l_max: u32, dedup: Dedup, jobs: usize) -> Result<DisplacementTally> {
    let engine = Engine::new(spec);
    let (max1, max2) = engine.max_lengths(l_max);
    match dedup {
        Dedup::On => {
            let mut t = DisplacementTally::new(max1, max2);
            for rec in enumerate(spec, l_max, Dedup::On)? {
                t.add(rec.displacement);
            }
            Ok(t)
        }
        Dedup::Off => {
            if spec.injectivity != Injectivity::CertifiedInjective {
                return Err(Error::config(
                    "dedup=off requires a certified-injective spec",
                ));
            }
            let shards = engine.shards(l_max as usize);
            let run = || {
                shards
                    .par_iter()
                    .map(|(prefix, depth)| {
                        let mut t = DisplacementTally::new(max1, max2);
                        let mut w = Walker::new(engine.clone(), prefix, *depth);
                        while w.advance() {
                            t.add(w.displacement());
                        }
                        Ok(t)
                    })
                    .try_reduce(
                        || DisplacementTally::new(max1, max2),
                        |mut a, b| {
                            a.merge(&b)?;
                            Ok(a)
                        },
                    )
            };
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs.max(1))
                .build()
                .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))?;
            pool.install(run)
        }
    }
}

/// Letter images as dense codes, indexed by abstract letter code.
#[derive(Debug, Clone)]
struct Engine {
    letters: u32,
    first: Arc<[Box<[u32]>]>,
    second: Arc<[Box<[u32]>]>,
    generators: Arc<Alphabet>,
    first_alphabet: Arc<Alphabet>,
    second_alphabet: Arc<Alphabet>,
}

impl Engine {
    fn new(spec: &ProductGroupSpec) -> Self {
        let letters = 2 * spec.generators.rank() as u32;
        let images = |h: &GeneratorMap| -> Arc<[Box<[u32]>]> {
            (0..letters)
                .map(|c| {
                    h.letter_image(Letter::from_code(c))
                        .letters()
                        .iter()
                        .map(|l| l.code())
                        .collect()
                })
                .collect()
        };
        Engine {
            letters,
            first: images(&spec.to_first),
            second: images(&spec.to_second),
            generators: Arc::clone(&spec.generators),
            first_alphabet: Arc::clone(spec.first_factor()),
            second_alphabet: Arc::clone(spec.second_factor()),
        }
    }

    fn max_lengths(&self, l_max: u32) -> (u32, u32) {
        let longest = |imgs: &[Box<[u32]>]| imgs.iter().map(|i| i.len()).max().unwrap_or(0) as u32;
        (l_max * longest(&self.first), l_max * longest(&self.second))
    }

    /// Disjoint subtrees covering every nonidentity word of length `<= l_max`.
    fn shards(&self, l_max: usize) -> Vec<(Vec<u32>, usize)> {
        if l_max == 0 {
            return Vec::new();
        }
        if l_max <= 2 {
            return (0..self.letters).map(|c| (vec![c], l_max)).collect();
        }
        // Depth-1 nodes alone, then one subtree per reduced length-2 prefix.
        let mut out: Vec<(Vec<u32>, usize)> = (0..self.letters).map(|c| (vec![c], 1)).collect();
        for a in 0..self.letters {
            for b in 0..self.letters {
                if b != a ^ 1 {
                    out.push((vec![a, b], l_max));
                }
            }
        }
        out
    }
}

const PUSHED: u32 = u32::MAX;

/// Depth-first preorder walk over reduced abstract words, carrying the reduced
/// image in each factor on a stack with an undo log.
struct Walker {
    engine: Engine,
    max_depth: usize,
    root_len: usize,
    word: Vec<u32>,
    first: Vec<u32>,
    second: Vec<u32>,
    log_first: Vec<u32>,
    log_second: Vec<u32>,
    marks: Vec<(usize, usize)>,
    cursor: Vec<u32>,
    pending: bool,
    started: bool,
}

impl Walker {
    /// Walks the subtree rooted at `prefix` (the prefix itself included, unless empty),
    /// down to words of length `max_depth`.
    fn new(engine: Engine, prefix: &[u32], max_depth: usize) -> Self {
        let mut w = Walker {
            engine,
            max_depth,
            root_len: prefix.len(),
            word: Vec::with_capacity(max_depth),
            first: Vec::new(),
            second: Vec::new(),
            log_first: Vec::new(),
            log_second: Vec::new(),
            marks: Vec::with_capacity(max_depth),
            cursor: Vec::with_capacity(max_depth),
            pending: false,
            started: false,
        };
        for &c in prefix {
            w.push(c);
        }
        w
    }

    #[inline]
    fn push(&mut self, code: u32) {
        self.marks.push((self.log_first.len(), self.log_second.len()));
        self.word.push(code);
        apply_image(&self.engine.first[code as usize], &mut self.first, &mut self.log_first);
        apply_image(&self.engine.second[code as usize], &mut self.second, &mut self.log_second);
    }

    #[inline]
    fn pop(&mut self) {
        let (m1, m2) = self.marks.pop().expect("pop on empty walker");
        self.word.pop();
        unwind(&mut self.first, &mut self.log_first, m1);
        unwind(&mut self.second, &mut self.log_second, m2);
    }

    /// Moves to the next word in preorder; false when the subtree is exhausted.
    fn advance(&mut self) -> bool {
        if !self.started {
            self.started = true;
            self.pending = true;
            if self.root_len > 0 {
                return self.root_len <= self.max_depth;
            }
        }
        if self.pending {
            self.pending = false;
            if self.word.len() < self.max_depth {
                self.cursor.push(0);
            }
        }
        loop {
            let level = self.cursor.len();
            if level == 0 {
                return false;
            }
            if self.word.len() == self.root_len + level {
                self.pop();
            }
            let forbidden = self.word.last().map(|&c| c ^ 1);
            let mut code = self.cursor[level - 1];
            if Some(code) == forbidden {
                code += 1;
            }
            if code < self.engine.letters {
                self.cursor[level - 1] = code + 1;
                self.push(code);
                self.pending = true;
                return true;
            }
            self.cursor.pop();
        }
    }

    #[inline]
    fn displacement(&self) -> Displacement {
        Displacement::new(self.first.len() as u32, self.second.len() as u32)
    }

    fn record(&self, _spec: &ProductGroupSpec) -> ElementRecord {
        let to_word = |al: &Arc<Alphabet>, codes: &[u32]| {
            ReducedWord::from_reduced_unchecked(
                al,
                codes.iter().map(|&c| Letter::from_code(c)).collect(),
            )
        };
        ElementRecord {
            word: to_word(&self.engine.generators, &self.word),
            first: to_word(&self.engine.first_alphabet, &self.first),
            second: to_word(&self.engine.second_alphabet, &self.second),
            displacement: self.displacement(),
        }
    }
}

#[inline]
fn apply_image(image: &[u32], stack: &mut Vec<u32>, log: &mut Vec<u32>) {
    for &t in image {
        if stack.last() == Some(&(t ^ 1)) {
            log.push(stack.pop().unwrap_or(PUSHED));
        } else {
            stack.push(t);
            log.push(PUSHED);
        }
    }
}

#[inline]
fn unwind(stack: &mut Vec<u32>, log: &mut Vec<u32>, mark: usize) {
    while log.len() > mark {
        match log.pop() {
            Some(PUSHED) => {
                stack.pop();
            }
            Some(popped) => stack.push(popped),
            None => unreachable!(),
        }
    }
}

/// Checks that no two reduced abstract words of length `<= depth` share an image pair.
pub fn spot_check_injective(spec: &ProductGroupSpec, depth: u32) -> bool {
    let engine = Engine::new(spec);
    let mut w = Walker::new(engine, &[], depth as usize);
    let mut seen = HashSet::new();
    while w.advance() {
        if w.first.is_empty() && w.second.is_empty() {
            return false;
        }
        if !seen.insert((w.first.clone(), w.second.clone())) {
            return false;
        }
    }
    true
}
