//! Synthetic fixtures: small Hindi-like treebanks and embedding files whose
//! vectors carry a layer-dependent signal for every probing label.
//!
//! Used by tests, benchmarks and the FFI examples; nothing here is needed for
//! real runs.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::conllu::{MorphFeatures, Sentence, Split, Token, Treebank};
use crate::embeddings::{EmbeddingHeader, EmbeddingRecord, EmbeddingWriter};
use crate::tasks::{sva_label, tree_depth, TaskExample};
use crate::schema::{Gender, Number};
use crate::{Error, Result};

const ONSETS: [&str; 12] = ["क", "ग", "त", "द", "न", "प", "ब", "म", "र", "ल", "स", "ह"];
const VOWELS: [&str; 5] = ["", "ा", "ि", "ु", "ो"];

fn stem(index: usize) -> String {
    let mut out = String::new();
    let mut i = index;
    for _ in 0..3 {
        out.push_str(ONSETS[i % ONSETS.len()]);
        i /= ONSETS.len();
        out.push_str(VOWELS[i % VOWELS.len()]);
        i /= VOWELS.len();
    }
    out
}

/// Lexicon sizes per open class.
#[derive(Clone, Debug)]
pub struct SynthConfig {
    pub seed: u64,
    pub nouns: usize,
    pub verbs: usize,
    pub adjectives: usize,
    pub adverbs: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 7,
            nouns: 40,
            verbs: 20,
            adjectives: 15,
            adverbs: 8,
        }
    }
}

struct Builder<'a> {
    tokens: Vec<Token>,
    config: &'a SynthConfig,
}

fn feats(pairs: &[(&str, &str)]) -> MorphFeatures {
    let mut f = MorphFeatures::new();
    for (k, v) in pairs {
        f.insert(*k, *v);
    }
    f
}

fn gender_tag(g: Gender) -> &'static str {
    g.as_ud()
}

impl<'a> Builder<'a> {
    fn push(&mut self, form: String, lemma: String, upos: &str, feats: MorphFeatures, deprel: &str) -> usize {
        let id = self.tokens.len() + 1;
        self.tokens.push(Token {
            id,
            form,
            lemma,
            upos: upos.to_owned(),
            xpos: "_".to_owned(),
            feats,
            head: 0,
            deprel: deprel.to_owned(),
            deps: "_".to_owned(),
            misc: "_".to_owned(),
        });
        id
    }

    fn attach(&mut self, id: usize, head: usize) {
        self.tokens[id - 1].head = head;
    }

    /// Noun lemma `i`; even lemmas are masculine.
    fn noun(&mut self, i: usize, number: Number, case: &str, deprel: &str) -> (usize, Gender) {
        let gender = if i.is_multiple_of(2) { Gender::Masc } else { Gender::Fem };
        let lemma = format!("{}{}", stem(i), if gender == Gender::Masc { "ा" } else { "ी" });
        let suffix = match (gender, number, case) {
            (Gender::Masc, Number::Sing, "Nom") => "ा",
            (Gender::Masc, _, _) => "े",
            (Gender::Fem, Number::Sing, _) => "ी",
            (Gender::Fem, Number::Plur, "Nom") => "ियाँ",
            (Gender::Fem, Number::Plur, _) => "ियों",
        };
        let form = format!("{}{suffix}", stem(i));
        let f = feats(&[("Gender", gender_tag(gender)), ("Number", number.as_ud()), ("Case", case), ("Person", "3")]);
        (self.push(form, lemma, "NOUN", f, deprel), gender)
    }

    fn adjective(&mut self, i: usize, gender: Gender, number: Number, case: &str) -> usize {
        let i = self.config.nouns + i;
        let suffix = match (gender, number, case) {
            (Gender::Masc, Number::Sing, "Nom") => "ा",
            (Gender::Masc, _, _) => "े",
            (Gender::Fem, _, _) => "ी",
        };
        let f = feats(&[("Gender", gender_tag(gender)), ("Number", number.as_ud()), ("Case", case)]);
        self.push(format!("{}{suffix}", stem(i)), format!("{}ा", stem(i)), "ADJ", f, "amod")
    }

    fn adverb(&mut self, i: usize) -> usize {
        let form = format!("{}{}", stem(self.config.nouns + self.config.adjectives + i), "े");
        self.push(form.clone(), form, "ADV", MorphFeatures::new(), "advmod")
    }

    fn verb(&mut self, i: usize, gender: Gender, number: Number) -> usize {
        let i = self.config.nouns + self.config.adjectives + self.config.adverbs + i;
        let suffix = match (gender, number) {
            (Gender::Masc, Number::Sing) => "ता",
            (Gender::Masc, Number::Plur) => "ते",
            (Gender::Fem, Number::Sing) => "ती",
            (Gender::Fem, Number::Plur) => "तीं",
        };
        let f = feats(&[
            ("Gender", gender_tag(gender)),
            ("Number", number.as_ud()),
            ("Person", "3"),
            ("Aspect", "Hab"),
        ]);
        self.push(format!("{}{suffix}", stem(i)), format!("{}ना", stem(i)), "VERB", f, "root")
    }

    fn function(&mut self, form: &str, upos: &str, feats: MorphFeatures, deprel: &str) -> usize {
        self.push(form.to_owned(), form.to_owned(), upos, feats, deprel)
    }
}

fn genitive(possessee_gender: Gender) -> &'static str {
    match possessee_gender {
        Gender::Masc => "का",
        Gender::Fem => "की",
    }
}

fn number<R: Rng>(rng: &mut R) -> Number {
    if rng.random_bool(0.7) {
        Number::Sing
    } else {
        Number::Plur
    }
}

/// One SOV clause: `[possessor का/की] [ADJ] subject [object को] [ADV] verb [है] ।`
fn sentence<R: Rng>(sent_id: String, config: &SynthConfig, rng: &mut R) -> Sentence {
    let mut b = Builder {
        tokens: Vec::new(),
        config,
    };
    let subj_lemma = rng.random_range(0..config.nouns);
    let subj_gender = if subj_lemma % 2 == 0 { Gender::Masc } else { Gender::Fem };
    let subj_number = number(rng);

    let possessor = rng.random_bool(0.5).then(|| {
        let (id, _) = b.noun(rng.random_range(0..config.nouns), number(rng), "Acc", "nmod");
        let adp = b.function(
            genitive(subj_gender),
            "ADP",
            feats(&[("AdpType", "Post"), ("Case", "Gen")]),
            "case",
        );
        b.attach(adp, id);
        id
    });
    let adjective = rng
        .random_bool(0.4)
        .then(|| b.adjective(rng.random_range(0..config.adjectives), subj_gender, subj_number, "Nom"));
    let (subj, _) = b.noun(subj_lemma, subj_number, "Nom", "nsubj");
    if let Some(p) = possessor {
        b.attach(p, subj);
    }
    if let Some(a) = adjective {
        b.attach(a, subj);
    }
    let object = rng.random_bool(0.6).then(|| {
        let (id, _) = b.noun(rng.random_range(0..config.nouns), number(rng), "Acc", "obj");
        let adp = b.function("को", "ADP", feats(&[("AdpType", "Post"), ("Case", "Dat")]), "case");
        b.attach(adp, id);
        id
    });
    let adverb = rng
        .random_bool(0.3)
        .then(|| b.adverb(rng.random_range(0..config.adverbs)));
    let verb = b.verb(rng.random_range(0..config.verbs), subj_gender, subj_number);
    b.attach(subj, verb);
    for dep in [object, adverb].into_iter().flatten() {
        b.attach(dep, verb);
    }
    if rng.random_bool(0.5) {
        let form = if subj_number == Number::Sing { "है" } else { "हैं" };
        let aux = b.function(
            form,
            "AUX",
            feats(&[("Number", subj_number.as_ud()), ("Person", "3")]),
            "aux",
        );
        b.attach(aux, verb);
    }
    let punct = b.function("।", "PUNCT", MorphFeatures::new(), "punct");
    b.attach(punct, verb);
    Sentence::new(sent_id, b.tokens)
}

/// `count` well-formed sentences with ids `{prefix}-{n}`.
pub fn synthetic_treebank(split: Split, count: usize, config: &SynthConfig) -> Treebank {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ (split as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut tb = Treebank::new(split);
    tb.sentences = (1..=count)
        .map(|n| sentence(format!("{split}-{n}"), config, &mut rng))
        .collect();
    tb
}

/// Train/dev/test treebanks of the given sizes.
pub fn synthetic_triple(sizes: [usize; 3], config: &SynthConfig) -> [Treebank; 3] {
    [
        synthetic_treebank(Split::Train, sizes[0], config),
        synthetic_treebank(Split::Dev, sizes[1], config),
        synthetic_treebank(Split::Test, sizes[2], config),
    ]
}

/// Shape of a synthetic embedding file.
#[derive(Clone, Debug)]
pub struct SynthEmbeddings {
    pub model_name: String,
    pub num_layers: usize,
    pub hidden_dim: usize,
    /// Layer at which label signal is strongest.
    pub peak_layer: usize,
    /// Standard deviation-ish scale of the uniform noise.
    pub noise: f32,
    pub seed: u64,
}

impl Default for SynthEmbeddings {
    fn default() -> Self {
        SynthEmbeddings {
            model_name: "synthetic".into(),
            num_layers: 4,
            hidden_dim: 32,
            peak_layer: 2,
            noise: 0.5,
            seed: 11,
        }
    }
}

impl SynthEmbeddings {
    fn amplitude(&self, layer: usize) -> f32 {
        let span = self.num_layers.max(2) as f32;
        let distance = (layer as f32 - self.peak_layer as f32).abs();
        (1.0 - distance / span).max(0.1) * 2.0
    }

    fn axis(&self, feature: &str) -> usize {
        let digest = Sha256::digest(feature.as_bytes());
        u64::from_le_bytes(digest[..8].try_into().unwrap()) as usize % self.hidden_dim
    }

    fn vector<R: Rng>(&self, layer: usize, signals: &[String], rng: &mut R) -> Vec<f32> {
        let mut v: Vec<f32> = (0..self.hidden_dim)
            .map(|_| rng.random_range(-self.noise..=self.noise))
            .collect();
        for s in signals {
            v[self.axis(s)] += self.amplitude(layer);
        }
        v
    }

    fn rng(&self, key: &str) -> ChaCha8Rng {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update(key.as_bytes());
        ChaCha8Rng::from_seed(hasher.finalize().into())
    }

    fn record(&self, key: &str, sentence: &Sentence, n_tokens: usize, sentence_signals: &[String]) -> Result<EmbeddingRecord> {
        let mut rng = self.rng(key);
        let mut data = Vec::with_capacity(self.num_layers * (1 + n_tokens) * self.hidden_dim);
        for layer in 0..self.num_layers {
            data.extend(self.vector(layer, sentence_signals, &mut rng));
            for token in &sentence.tokens[..n_tokens] {
                let mut signals = vec![format!("upos:{}", token.upos)];
                if let Some(case) = token.feats.get("Case") {
                    signals.push(format!("case:{case}"));
                }
                data.extend(self.vector(layer, &signals, &mut rng));
            }
        }
        let alignment = (1..=n_tokens as u32).collect();
        EmbeddingRecord::new(key, n_tokens, alignment, self.num_layers, self.hidden_dim, data)
    }

    /// Write one record per sentence of `treebank` plus one per SVA prefix in
    /// `sva`. Sentence vectors encode tree depth; prefix vectors encode the
    /// agreement label of the verb that follows the prefix.
    pub fn write(&self, path: &Path, treebank: &Treebank, sva: &[TaskExample]) -> Result<()> {
        let mut records = Vec::new();
        for sentence in &treebank.sentences {
            let depth = tree_depth(sentence)?;
            records.push(self.record(&sentence.sent_id, sentence, sentence.len(), &[format!("depth:{depth}")])?);
        }
        let by_id: std::collections::HashMap<&str, &Sentence> =
            treebank.sentences.iter().map(|s| (s.sent_id.as_str(), s)).collect();
        for example in sva {
            let (Some(sentence), Some(k)) = (by_id.get(example.sent_id.as_str()), example.prefix_len) else {
                continue;
            };
            let verb = sentence
                .tokens
                .get(k)
                .ok_or_else(|| Error::Data(format!("prefix {k} outside `{}`", sentence.sent_id)))?;
            let label = match (
                verb.feats.get("Gender").and_then(Gender::from_ud),
                verb.feats.get("Number").and_then(Number::from_ud),
            ) {
                (Some(g), Some(n)) => sva_label(g, n),
                _ => "none",
            };
            records.push(self.record(&example.record_key(), sentence, k, &[format!("sva:{label}")])?);
        }
        let header = EmbeddingHeader {
            model_name: self.model_name.clone(),
            num_layers: self.num_layers,
            hidden_dim: self.hidden_dim,
            sentence_count: records.len(),
        };
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut writer = EmbeddingWriter::new(std::io::BufWriter::new(file), header)?;
        for r in &records {
            writer.write_record(r)?;
        }
        writer.finish()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conllu::{parse_conllu, serialize};

    #[test]
    fn treebank_is_valid_and_round_trips() {
        let tb = synthetic_treebank(Split::Dev, 200, &SynthConfig::default());
        for s in &tb.sentences {
            s.validate().unwrap();
        }
        let text = serialize(&tb);
        assert_eq!(serialize(&parse_conllu(&text, Split::Dev).unwrap()), text);
    }

    #[test]
    fn deterministic() {
        let a = synthetic_treebank(Split::Train, 30, &SynthConfig::default());
        let b = synthetic_treebank(Split::Train, 30, &SynthConfig::default());
        assert_eq!(a, b);
        let c = synthetic_treebank(Split::Test, 30, &SynthConfig::default());
        assert_ne!(a.sentences[0].tokens, c.sentences[0].tokens);
    }
}
