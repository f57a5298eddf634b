//! Colorless-green treebank generation.
//!
//! Every source sentence is hollowed into a [`Template`]: function words stay,
//! content words become slots keyed by their [`FeatureKey`]. Each slot is then
//! refilled from a [`SubstitutionIndex`] of donor words with the same key,
//! after coercing the key's gender according to a [`GenderVariant`]. One
//! output sentence is produced per variant, and gender-inflected adpositions
//! are re-inflected to follow their (re-gendered) heads.
//!
//! [`FeatureKey`]: crate::schema::FeatureKey

mod adposition;
mod generate;
mod index;
mod report;

use serde::{Deserialize, Serialize};

pub use self::adposition::{adjust_adpositions, AdpositionLexicon};
pub use self::generate::{
    fill, generate_cg, generate_split, make_template, sentence_rng, write_provenance, CgSentence,
    CgTreebank, CgTriple, FillOutcome, GenerationStats, Provenance, Slot, SlotRecord,
    AdpositionChange, SourceTriple, Template,
};
pub use self::index::{build_index, DonorEntry, Origin, SubstitutionIndex};
pub use self::report::{gender_report, GenderCounts};
pub use crate::schema::GenderVariant;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DonorScope {
    /// Each output split draws donors from its own source split only.
    WithinSplit,
    /// All three source splits feed one index.
    #[default]
    WholeTreebank,
}

/// What to do with a slot whose donor pool is empty.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FallbackPolicy {
    /// Keep the original word and flag the slot.
    #[default]
    KeepOriginal,
    /// Drop the whole generated sentence.
    DropSentence,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenerationConfig {
    pub seed: u64,
    pub donor_scope: DonorScope,
    pub fallback: FallbackPolicy,
    /// Never fill a slot with a word that only occurs in the sentence being
    /// generated.
    pub exclude_same_sentence: bool,
    pub adpositions: AdpositionLexicon,
}

impl GenerationConfig {
    pub fn with_seed(seed: u64) -> Self {
        GenerationConfig {
            seed,
            donor_scope: DonorScope::default(),
            fallback: FallbackPolicy::default(),
            exclude_same_sentence: true,
            adpositions: AdpositionLexicon::hindi_default(),
        }
    }
}
