use std::collections::HashSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::adposition::adjust_adpositions;
use super::index::{build_index, DonorEntry, Origin, SubstitutionIndex};
use super::{DonorScope, FallbackPolicy, GenerationConfig};
use crate::conllu::{Sentence, Split, Treebank};
use crate::schema::{classify, feature_key, FeatureKey, Gender, GenderVariant, SchemaConfig};
use crate::{Error, Result};

/// Random probes into a pool before falling back to an exact scan.
const REJECTION_TRIES: usize = 32;

/// An open content position of a template.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Slot {
    /// 1-based token id.
    pub position: usize,
    pub key: FeatureKey,
    pub original_gender: Option<Gender>,
}

/// A source sentence with its content words marked as slots.
#[derive(Clone, Debug)]
pub struct Template<'a> {
    pub sentence: &'a Sentence,
    pub origin: Origin,
    pub slots: Vec<Slot>,
}

pub fn make_template<'a>(sentence: &'a Sentence, origin: Origin, schema: &SchemaConfig) -> Template<'a> {
    let slots = sentence
        .tokens
        .iter()
        .filter(|t| classify(t, schema).is_content())
        .map(|t| {
            let key = feature_key(t, schema).expect("content token has a key");
            Slot {
                position: t.id,
                original_gender: key.gender,
                key,
            }
        })
        .collect();
    Template {
        sentence,
        origin,
        slots,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub pos: usize,
    pub orig: String,
    pub donor: String,
    pub fallback: bool,
    #[serde(skip)]
    pub original_gender: Option<Gender>,
    #[serde(skip)]
    pub target_gender: Option<Gender>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdpositionChange {
    pub pos: usize,
    pub from: String,
    pub to: String,
}

/// One line of the provenance sidecar.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub source_sent_id: String,
    pub source_split: Split,
    pub variant: GenderVariant,
    pub slots: Vec<SlotRecord>,
    #[serde(default)]
    pub adpositions: Vec<AdpositionChange>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CgSentence {
    pub sentence: Sentence,
    pub provenance: Provenance,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FillOutcome {
    Filled(CgSentence),
    /// `DropSentence` policy hit an empty pool at `slot`.
    Dropped {
        source_sent_id: String,
        variant: GenderVariant,
        slot: usize,
    },
}

/// Deterministic per-(sentence, variant) random stream.
pub fn sentence_rng(seed: u64, split: Split, sent_id: &str, variant: GenderVariant) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(split.as_str().as_bytes());
    hasher.update([0]);
    hasher.update(sent_id.as_bytes());
    hasher.update([0]);
    hasher.update(variant.as_str().as_bytes());
    ChaCha8Rng::from_seed(hasher.finalize().into())
}

/// Uniform draw over pool entries accepted by `eligible`, preferring forms
/// not yet used in this sentence.
fn draw<'p, R: Rng>(
    pool: &'p [DonorEntry],
    eligible: impl Fn(&DonorEntry) -> bool,
    used: &HashSet<&str>,
    rng: &mut R,
) -> Option<&'p DonorEntry> {
    if pool.is_empty() {
        return None;
    }
    let fresh = |e: &DonorEntry| eligible(e) && !used.contains(e.form.as_str());
    for _ in 0..REJECTION_TRIES {
        let entry = &pool[rng.random_range(0..pool.len())];
        if fresh(entry) {
            return Some(entry);
        }
    }
    let candidates: Vec<&DonorEntry> = pool.iter().filter(|e| fresh(e)).collect();
    if !candidates.is_empty() {
        return Some(candidates[rng.random_range(0..candidates.len())]);
    }
    let candidates: Vec<&DonorEntry> = pool.iter().filter(|e| eligible(e)).collect();
    if candidates.is_empty() {
        None
    } else {
        Some(candidates[rng.random_range(0..candidates.len())])
    }
}

/// Fill every slot of `template` for one gender variant.
pub fn fill<R: Rng>(
    template: &Template<'_>,
    index: &SubstitutionIndex,
    variant: GenderVariant,
    rng: &mut R,
    config: &GenerationConfig,
) -> FillOutcome {
    let source = template.sentence;
    let mut sentence = Sentence::new(
        format!("{}-{}", source.sent_id, variant),
        source.tokens.clone(),
    );
    sentence.extra_lines = source.extra_lines.clone();

    let mut used: HashSet<&str> = HashSet::new();
    let mut records = Vec::with_capacity(template.slots.len());

    for slot in &template.slots {
        let original = &source.tokens[slot.position - 1];
        let target = slot.key.coerce_gender(variant);
        let eligible = |e: &DonorEntry| {
            e.form != original.form
                && (!config.exclude_same_sentence || e.occurs_outside(template.origin))
        };
        let donor = draw(index.pool(&target), eligible, &used, rng);

        let record = match donor {
            Some(entry) => {
                used.insert(entry.form.as_str());
                let token = &mut sentence.tokens[slot.position - 1];
                token.form = entry.form.clone();
                token.lemma = entry.lemma.clone();
                if let Some(g) = target.gender {
                    token.feats.insert("Gender", g.as_ud());
                }
                SlotRecord {
                    pos: slot.position,
                    orig: original.form.clone(),
                    donor: entry.form.clone(),
                    fallback: false,
                    original_gender: slot.original_gender,
                    target_gender: target.gender,
                }
            }
            None if config.fallback == FallbackPolicy::DropSentence => {
                return FillOutcome::Dropped {
                    source_sent_id: source.sent_id.clone(),
                    variant,
                    slot: slot.position,
                };
            }
            None => SlotRecord {
                pos: slot.position,
                orig: original.form.clone(),
                donor: original.form.clone(),
                fallback: true,
                original_gender: slot.original_gender,
                target_gender: target.gender,
            },
        };
        records.push(record);
    }

    sentence.text = Some(sentence.render_text());
    FillOutcome::Filled(CgSentence {
        sentence,
        provenance: Provenance {
            source_sent_id: source.sent_id.clone(),
            source_split: template.origin.split,
            variant,
            slots: records,
            adpositions: Vec::new(),
        },
    })
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub source_sentences: usize,
    pub generated: usize,
    pub dropped: usize,
    pub slots: usize,
    /// Slots filled with a form different from the original.
    pub substituted: usize,
    pub fallback_slots: usize,
    /// Fallback slots whose gender could not be coerced, i.e. the gender
    /// imbalance left behind by empty pools.
    pub balance_deficit: usize,
    pub adpositions_adjusted: usize,
}

impl GenerationStats {
    fn absorb(&mut self, outcome: &FillOutcome) {
        match outcome {
            FillOutcome::Dropped { .. } => self.dropped += 1,
            FillOutcome::Filled(cg) => {
                self.generated += 1;
                for slot in &cg.provenance.slots {
                    self.slots += 1;
                    if slot.fallback {
                        self.fallback_slots += 1;
                        if slot.original_gender != slot.target_gender {
                            self.balance_deficit += 1;
                        }
                    } else if slot.donor != slot.orig {
                        self.substituted += 1;
                    }
                }
                self.adpositions_adjusted += cg.provenance.adpositions.len();
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct CgTreebank {
    pub treebank: Treebank,
    pub provenance: Vec<Provenance>,
    pub stats: GenerationStats,
}

/// Generate the four variants of every sentence of `source` into a treebank
/// labelled `output_split`. Output order is source order, then variant order.
pub fn generate_split(
    source: &Treebank,
    output_split: Split,
    index: &SubstitutionIndex,
    config: &GenerationConfig,
    schema: &SchemaConfig,
) -> CgTreebank {
    let outcomes: Vec<Vec<FillOutcome>> = source
        .sentences
        .par_iter()
        .enumerate()
        .map(|(idx, sentence)| {
            let origin = Origin {
                split: source.split,
                sentence: idx,
            };
            let template = make_template(sentence, origin, schema);
            GenderVariant::ALL
                .iter()
                .map(|&variant| {
                    let mut rng = sentence_rng(config.seed, source.split, &sentence.sent_id, variant);
                    let mut outcome = fill(&template, index, variant, &mut rng, config);
                    if let FillOutcome::Filled(cg) = &mut outcome {
                        adjust_adpositions(cg, &config.adpositions);
                    }
                    outcome
                })
                .collect()
        })
        .collect();

    let mut stats = GenerationStats {
        source_sentences: source.sentences.len(),
        ..GenerationStats::default()
    };
    let mut treebank = Treebank::new(output_split);
    let mut provenance = Vec::new();
    for outcome in outcomes.into_iter().flatten() {
        stats.absorb(&outcome);
        match outcome {
            FillOutcome::Filled(cg) => {
                treebank.sentences.push(cg.sentence);
                provenance.push(cg.provenance);
            }
            FillOutcome::Dropped {
                source_sent_id,
                variant,
                slot,
            } => log::debug!("dropped {source_sent_id}/{variant}: empty pool at slot {slot}"),
        }
    }
    if stats.balance_deficit > 0 {
        log::info!(
            "{output_split}: {} fallback slots kept their original gender",
            stats.balance_deficit
        );
    }
    CgTreebank {
        treebank,
        provenance,
        stats,
    }
}

#[derive(Debug, Clone)]
pub struct SourceTriple {
    pub train: Treebank,
    pub dev: Treebank,
    pub test: Treebank,
}

pub struct CgTriple {
    pub train: CgTreebank,
    pub dev: CgTreebank,
    pub test: CgTreebank,
}

impl CgTriple {
    pub fn splits(&self) -> [(Split, &CgTreebank); 3] {
        [
            (Split::Train, &self.train),
            (Split::Dev, &self.dev),
            (Split::Test, &self.test),
        ]
    }
}

/// Generate all three colorless-green splits. Train and test are swapped:
/// the generated train split comes from the source test split and vice versa.
pub fn generate_cg(source: &SourceTriple, config: &GenerationConfig, schema: &SchemaConfig) -> Result<CgTriple> {
    for (expected, tb) in [
        (Split::Train, &source.train),
        (Split::Dev, &source.dev),
        (Split::Test, &source.test),
    ] {
        if tb.split != expected {
            return Err(Error::Contract(format!(
                "source treebank labelled {} passed as {expected}",
                tb.split
            )));
        }
    }

    let run = |from: &Treebank, to: Split, whole: Option<&SubstitutionIndex>| -> CgTreebank {
        match (config.donor_scope, whole) {
            (DonorScope::WholeTreebank, Some(index)) => generate_split(from, to, index, config, schema),
            _ => {
                let index = build_index(&[from], schema);
                generate_split(from, to, &index, config, schema)
            }
        }
    };

    let whole = match config.donor_scope {
        DonorScope::WholeTreebank => Some(build_index(&[&source.train, &source.dev, &source.test], schema)),
        DonorScope::WithinSplit => None,
    };
    let whole = whole.as_ref();

    Ok(CgTriple {
        train: run(&source.test, Split::Train, whole),
        dev: run(&source.dev, Split::Dev, whole),
        test: run(&source.train, Split::Test, whole),
    })
}

pub fn write_provenance(path: &Path, provenance: &[Provenance]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for record in provenance {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}
