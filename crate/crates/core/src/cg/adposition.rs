use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use super::generate::{AdpositionChange, CgSentence};
use crate::schema::Gender;
use crate::{Error, Result};

const DEFAULT_LEXICON: &str = include_str!("../../data/adpositions.tsv");

/// Gender-inflected adpositions: form -> (masculine form, feminine form).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AdpositionLexicon {
    entries: BTreeMap<String, (String, String)>,
}

impl AdpositionLexicon {
    /// The shipped Hindi genitive table (का/की).
    pub fn hindi_default() -> Self {
        Self::from_tsv(DEFAULT_LEXICON).expect("bundled adposition lexicon is valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_tsv(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Parse `form<TAB>masc_form<TAB>fem_form` rows; `#` starts a comment.
    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(Error::parse(idx + 1, "expected form, masc_form, fem_form"));
            }
            if cols[0] == "form" && idx == 0 {
                continue;
            }
            let pair = (cols[1].to_owned(), cols[2].to_owned());
            if entries.insert(cols[0].to_owned(), pair).is_some() {
                return Err(Error::parse(idx + 1, format!("duplicate form `{}`", cols[0])));
            }
        }
        let lexicon = AdpositionLexicon { entries };
        lexicon.check_involutive()?;
        Ok(lexicon)
    }

    fn check_involutive(&self) -> Result<()> {
        for (form, (masc, fem)) in &self.entries {
            if form != masc && form != fem {
                return Err(Error::Config(format!(
                    "adposition `{form}` is neither its masculine nor its feminine form"
                )));
            }
            for counterpart in [masc, fem] {
                match self.entries.get(counterpart) {
                    Some(pair) if pair == &(masc.clone(), fem.clone()) => {}
                    _ => {
                        return Err(Error::Config(format!(
                            "adposition pair {masc}/{fem} is not listed consistently for `{counterpart}`"
                        )))
                    }
                }
            }
        }
        Ok(())
    }

    pub fn inflect(&self, form: &str, gender: Gender) -> Option<&str> {
        self.entries.get(form).map(|(masc, fem)| match gender {
            Gender::Masc => masc.as_str(),
            Gender::Fem => fem.as_str(),
        })
    }

    pub fn contains(&self, form: &str) -> bool {
        self.entries.contains_key(form)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Re-inflect lexicon adpositions whose head is a filled slot that changed
/// gender. Only the dependency head is consulted.
pub fn adjust_adpositions(cg: &mut CgSentence, lexicon: &AdpositionLexicon) {
    let changed: HashMap<usize, Gender> = cg
        .provenance
        .slots
        .iter()
        .filter(|slot| !slot.fallback)
        .filter_map(|slot| match (slot.original_gender, slot.target_gender) {
            (Some(from), Some(to)) if from != to => Some((slot.pos, to)),
            _ => None,
        })
        .collect();
    if changed.is_empty() {
        return;
    }

    for token in &mut cg.sentence.tokens {
        if token.upos != "ADP" {
            continue;
        }
        let Some(&gender) = changed.get(&token.head) else {
            continue;
        };
        let Some(new_form) = lexicon.inflect(&token.form, gender) else {
            continue;
        };
        if new_form != token.form {
            cg.provenance.adpositions.push(AdpositionChange {
                pos: token.id,
                from: std::mem::replace(&mut token.form, new_form.to_owned()),
                to: new_form.to_owned(),
            });
        }
        token.feats.insert("Gender", gender.as_ud());
    }
    if !cg.provenance.adpositions.is_empty() {
        cg.sentence.text = Some(cg.sentence.render_text());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_lexicon() {
        let lex = AdpositionLexicon::hindi_default();
        assert_eq!(lex.len(), 2);
        assert_eq!(lex.inflect("का", Gender::Fem), Some("की"));
        assert_eq!(lex.inflect("की", Gender::Masc), Some("का"));
        assert_eq!(lex.inflect("की", Gender::Fem), Some("की"));
        assert_eq!(lex.inflect("में", Gender::Fem), None);
        assert!(!lex.contains("के"));
    }

    #[test]
    fn rejects_non_involutive_pairs() {
        assert!(AdpositionLexicon::from_tsv("का\tका\tकी\n").is_err());
        assert!(AdpositionLexicon::from_tsv("का\tका\tकी\nकी\tके\tकी\n").is_err());
        assert!(AdpositionLexicon::from_tsv("x\ty\tz\n").is_err());
        assert!(AdpositionLexicon::from_tsv("form\tmasc_form\tfem_form\nरा\tरा\tरी\nरी\tरा\tरी\n").is_ok());
    }
}
