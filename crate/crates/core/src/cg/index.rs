use std::collections::{BTreeMap, HashMap};

use crate::conllu::{Split, Treebank};
use crate::schema::{classify, feature_key, FeatureKey, SchemaConfig};

/// Identifies a source sentence: its split and position in that split.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Origin {
    pub split: Split,
    pub sentence: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DonorEntry {
    pub form: String,
    pub lemma: String,
    first_origin: Origin,
    many_origins: bool,
}

impl DonorEntry {
    /// True if this form occurs in some sentence other than `origin`.
    pub fn occurs_outside(&self, origin: Origin) -> bool {
        self.many_origins || self.first_origin != origin
    }
}

/// Donor words grouped by feature key, deduplicated by form. Entries keep
/// first-seen order, so the index is a pure function of its inputs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SubstitutionIndex {
    pools: BTreeMap<FeatureKey, Vec<DonorEntry>>,
}

impl SubstitutionIndex {
    pub fn pool(&self, key: &FeatureKey) -> &[DonorEntry] {
        self.pools.get(key).map_or(&[], Vec::as_slice)
    }

    pub fn pool_size(&self, key: &FeatureKey) -> usize {
        self.pool(key).len()
    }

    pub fn key_count(&self) -> usize {
        self.pools.len()
    }

    pub fn entry_count(&self) -> usize {
        self.pools.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.pools.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&FeatureKey, &[DonorEntry])> {
        self.pools.iter().map(|(k, v)| (k, v.as_slice()))
    }
}

/// Index every content word of `donors` under its feature key.
pub fn build_index(donors: &[&Treebank], schema: &SchemaConfig) -> SubstitutionIndex {
    let mut pools: BTreeMap<FeatureKey, Vec<DonorEntry>> = BTreeMap::new();
    let mut positions: HashMap<FeatureKey, HashMap<String, usize>> = HashMap::new();

    for treebank in donors {
        for (sentence_idx, sentence) in treebank.sentences.iter().enumerate() {
            let origin = Origin {
                split: treebank.split,
                sentence: sentence_idx,
            };
            for token in &sentence.tokens {
                if !classify(token, schema).is_content() {
                    continue;
                }
                let key = feature_key(token, schema).expect("content token has a key");
                let pool = pools.entry(key.clone()).or_default();
                let seen = positions.entry(key).or_default();
                match seen.get(&token.form) {
                    Some(&idx) => {
                        let entry = &mut pool[idx];
                        if entry.first_origin != origin {
                            entry.many_origins = true;
                        }
                    }
                    None => {
                        seen.insert(token.form.clone(), pool.len());
                        pool.push(DonorEntry {
                            form: token.form.clone(),
                            lemma: token.lemma.clone(),
                            first_origin: origin,
                            many_origins: false,
                        });
                    }
                }
            }
        }
    }

    SubstitutionIndex { pools }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conllu::parse_conllu;
    use crate::schema::{Gender, Number};

    const DONOR: &str = "# sent_id = d1\n1\tलड़का\tलड़का\tNOUN\t_\tCase=Nom|Gender=Masc|Number=Sing|Person=3\t3\tnsubj\t_\t_\n2\tभी\tभी\tPART\t_\t_\t1\tdep\t_\t_\n3\tहै\tहै\tAUX\t_\t_\t0\troot\t_\t_\n\n";

    #[test]
    fn single_noun_gives_single_entry() {
        let tb = parse_conllu(DONOR, Split::Train).unwrap();
        let index = build_index(&[&tb], &SchemaConfig::default());
        assert_eq!(index.key_count(), 1);
        assert_eq!(index.entry_count(), 1);
        let key = FeatureKey {
            upos: "NOUN".into(),
            gender: Some(Gender::Masc),
            number: Some(Number::Sing),
            case: Some("Nom".into()),
            person: None,
        };
        assert_eq!(index.pool(&key)[0].form, "लड़का");
    }

    #[test]
    fn empty_donor_set() {
        assert!(build_index(&[], &SchemaConfig::default()).is_empty());
    }

    #[test]
    fn duplicates_collapse_and_track_origins() {
        let text = format!("{DONOR}{}", DONOR.replace("d1", "d2"));
        let tb = parse_conllu(&text, Split::Dev).unwrap();
        let index = build_index(&[&tb], &SchemaConfig::default());
        assert_eq!(index.entry_count(), 1);
        let (_, pool) = index.iter().next().unwrap();
        let origin = Origin { split: Split::Dev, sentence: 0 };
        assert!(pool[0].occurs_outside(origin));

        let single = parse_conllu(DONOR, Split::Dev).unwrap();
        let index = build_index(&[&single], &SchemaConfig::default());
        let (_, pool) = index.iter().next().unwrap();
        assert!(!pool[0].occurs_outside(origin));
        assert!(pool[0].occurs_outside(Origin { split: Split::Dev, sentence: 1 }));
    }
}
