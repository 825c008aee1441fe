//! Slope-resolved growth rates of subgroups of products of free groups.
//!
//! Elements are enumerated as reduced words, mapped to a pair of factor words, and
//! binned by annulus `n - 1 <= sqrt(d1^2 + d2^2) < n` and slope `arctan(d2 / d1)`.
//! Rates are fitted to the resulting counts and audited for the structural
//! properties expected of slope growth profiles.

pub mod action;
pub mod cache;
pub mod calculus;
pub mod error;
pub mod presets;
pub mod rates;
pub mod report;
pub mod specfile;
pub mod spectrum;
pub mod word;

pub use action::{
    completeness_horizon, enumerate, Completeness, Dedup, Displacement, ElementRecord, Injectivity,
    ProductGroupSpec,
};
pub use error::{Error, Result};
pub use presets::Preset;
pub use rates::{Rate, RateEstimate, RateProfile, Window};
pub use spectrum::{Binning, SlopeSpectrum};
pub use word::{Alphabet, GeneratorMap, Letter, ReducedWord};
