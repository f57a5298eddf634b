//! Content/function word classification and the grammatical feature keys
//! that decide which words may replace each other.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::conllu::Token;
use crate::{Error, Result};

/// The 17 UD universal POS tags.
pub const UPOS_TAGS: [&str; 17] = [
    "ADJ", "ADP", "ADV", "AUX", "CCONJ", "DET", "INTJ", "NOUN", "NUM", "PART", "PRON", "PROPN",
    "PUNCT", "SCONJ", "SYM", "VERB", "X",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PosClass {
    ContentNoun,
    ContentVerb,
    ContentAdjective,
    ContentAdverb,
    Function,
}

impl PosClass {
    pub fn is_content(self) -> bool {
        self != PosClass::Function
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Gender {
    Masc,
    Fem,
}

impl Gender {
    /// Only `Masc` and `Fem` are recognized; anything else counts as absent.
    pub fn from_ud(value: &str) -> Option<Gender> {
        match value {
            "Masc" => Some(Gender::Masc),
            "Fem" => Some(Gender::Fem),
            _ => None,
        }
    }

    pub fn as_ud(self) -> &'static str {
        match self {
            Gender::Masc => "Masc",
            Gender::Fem => "Fem",
        }
    }

    pub fn opposite(self) -> Gender {
        match self {
            Gender::Masc => Gender::Fem,
            Gender::Fem => Gender::Masc,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Number {
    Sing,
    Plur,
}

impl Number {
    pub fn from_ud(value: &str) -> Option<Number> {
        match value {
            "Sing" => Some(Number::Sing),
            "Plur" => Some(Number::Plur),
            _ => None,
        }
    }

    pub fn as_ud(self) -> &'static str {
        match self {
            Number::Sing => "Sing",
            Number::Plur => "Plur",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Person {
    First,
    Second,
    Third,
}

impl Person {
    pub fn from_ud(value: &str) -> Option<Person> {
        match value {
            "1" => Some(Person::First),
            "2" => Some(Person::Second),
            "3" => Some(Person::Third),
            _ => None,
        }
    }

    pub fn as_ud(self) -> &'static str {
        match self {
            Person::First => "1",
            Person::Second => "2",
            Person::Third => "3",
        }
    }
}

/// How a generated sentence's genders relate to its source sentence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GenderVariant {
    Same,
    Opposite,
    Masculine,
    Feminine,
}

impl GenderVariant {
    /// Output order of the variants for every source sentence.
    pub const ALL: [GenderVariant; 4] = [
        GenderVariant::Same,
        GenderVariant::Opposite,
        GenderVariant::Masculine,
        GenderVariant::Feminine,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GenderVariant::Same => "same",
            GenderVariant::Opposite => "opposite",
            GenderVariant::Masculine => "masculine",
            GenderVariant::Feminine => "feminine",
        }
    }

    /// Gender a slot of original gender `original` should carry.
    pub fn apply(self, original: Gender) -> Gender {
        match self {
            GenderVariant::Same => original,
            GenderVariant::Opposite => original.opposite(),
            GenderVariant::Masculine => Gender::Masc,
            GenderVariant::Feminine => Gender::Fem,
        }
    }
}

impl fmt::Display for GenderVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which grammatical features take part in a content class's key.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct FeatureSet {
    pub gender: bool,
    pub number: bool,
    pub case: bool,
    pub person: bool,
}

impl FeatureSet {
    pub const GEN_NUM_CASE: FeatureSet = FeatureSet {
        gender: true,
        number: true,
        case: true,
        person: false,
    };
    pub const GEN_NUM_PER: FeatureSet = FeatureSet {
        gender: true,
        number: true,
        case: false,
        person: true,
    };
}

impl TryFrom<Vec<String>> for FeatureSet {
    type Error = String;

    fn try_from(names: Vec<String>) -> std::result::Result<Self, String> {
        let mut set = FeatureSet::default();
        for name in names {
            match name.as_str() {
                "Gender" => set.gender = true,
                "Number" => set.number = true,
                "Case" => set.case = true,
                "Person" => set.person = true,
                other => return Err(format!("unsupported key feature `{other}`")),
            }
        }
        Ok(set)
    }
}

impl From<FeatureSet> for Vec<String> {
    fn from(set: FeatureSet) -> Self {
        [
            (set.gender, "Gender"),
            (set.number, "Number"),
            (set.case, "Case"),
            (set.person, "Person"),
        ]
        .into_iter()
        .filter(|(on, _)| *on)
        .map(|(_, name)| name.to_owned())
        .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KeyFeatures {
    pub noun: FeatureSet,
    pub verb: FeatureSet,
    pub adjective: FeatureSet,
    pub adverb: FeatureSet,
}

impl Default for KeyFeatures {
    fn default() -> Self {
        KeyFeatures {
            noun: FeatureSet::GEN_NUM_CASE,
            verb: FeatureSet::GEN_NUM_PER,
            adjective: FeatureSet::GEN_NUM_CASE,
            adverb: FeatureSet::GEN_NUM_CASE,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemaConfig {
    /// Treat PROPN as a content noun.
    pub include_propn: bool,
    pub features: KeyFeatures,
}

impl SchemaConfig {
    fn features_for(&self, class: PosClass) -> Option<FeatureSet> {
        match class {
            PosClass::ContentNoun => Some(self.features.noun),
            PosClass::ContentVerb => Some(self.features.verb),
            PosClass::ContentAdjective => Some(self.features.adjective),
            PosClass::ContentAdverb => Some(self.features.adverb),
            PosClass::Function => None,
        }
    }
}

pub fn classify(token: &Token, config: &SchemaConfig) -> PosClass {
    match token.upos.as_str() {
        "NOUN" => PosClass::ContentNoun,
        "PROPN" if config.include_propn => PosClass::ContentNoun,
        "VERB" => PosClass::ContentVerb,
        "ADJ" => PosClass::ContentAdjective,
        "ADV" => PosClass::ContentAdverb,
        _ => PosClass::Function,
    }
}

/// Substitution-eligibility key. Two content words may replace each other
/// iff their keys are equal; an absent feature only matches absent.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FeatureKey {
    pub upos: String,
    pub gender: Option<Gender>,
    pub number: Option<Number>,
    /// Compared literally, so `Acc,Dat` is its own value.
    pub case: Option<String>,
    pub person: Option<Person>,
}

impl FeatureKey {
    pub fn coerce_gender(&self, variant: GenderVariant) -> FeatureKey {
        FeatureKey {
            gender: self.gender.map(|g| variant.apply(g)),
            ..self.clone()
        }
    }
}

impl fmt::Display for FeatureKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const NONE: &str = "—";
        write!(
            f,
            "({}, {}, {}, {}, {})",
            self.upos,
            self.gender.map_or(NONE, Gender::as_ud),
            self.number.map_or(NONE, Number::as_ud),
            self.case.as_deref().unwrap_or(NONE),
            self.person.map_or(NONE, Person::as_ud)
        )
    }
}

/// Read the key of a content token. Features outside the class's feature
/// set are dropped.
pub fn feature_key(token: &Token, config: &SchemaConfig) -> Result<FeatureKey> {
    let class = classify(token, config);
    let set = config.features_for(class).ok_or_else(|| {
        Error::Contract(format!(
            "feature_key called on function word `{}` ({})",
            token.form, token.upos
        ))
    })?;
    let feats = &token.feats;
    Ok(FeatureKey {
        upos: token.upos.clone(),
        gender: set
            .gender
            .then(|| feats.get("Gender").and_then(Gender::from_ud))
            .flatten(),
        number: set
            .number
            .then(|| feats.get("Number").and_then(Number::from_ud))
            .flatten(),
        case: set
            .case
            .then(|| feats.get("Case").map(str::to_owned))
            .flatten(),
        person: set
            .person
            .then(|| feats.get("Person").and_then(Person::from_ud))
            .flatten(),
    })
}

/// Standalone form of [`FeatureKey::coerce_gender`].
pub fn coerce_gender(key: &FeatureKey, variant: GenderVariant) -> FeatureKey {
    key.coerce_gender(variant)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::conllu::MorphFeatures;

    fn token(upos: &str, feats: &str) -> Token {
        Token {
            id: 1,
            form: "w".into(),
            lemma: "w".into(),
            upos: upos.into(),
            xpos: "_".into(),
            feats: feats.parse::<MorphFeatures>().unwrap(),
            head: 0,
            deprel: "root".into(),
            deps: "_".into(),
            misc: "_".into(),
        }
    }

    fn key(upos: &str, g: Option<Gender>, n: Option<Number>, c: Option<&str>, p: Option<Person>) -> FeatureKey {
        FeatureKey {
            upos: upos.into(),
            gender: g,
            number: n,
            case: c.map(str::to_owned),
            person: p,
        }
    }

    #[test]
    fn classification() {
        let cfg = SchemaConfig::default();
        assert_eq!(classify(&token("NOUN", "_"), &cfg), PosClass::ContentNoun);
        assert_eq!(classify(&token("ADP", "_"), &cfg), PosClass::Function);
        assert_eq!(classify(&token("PROPN", "_"), &cfg), PosClass::Function);
        let with_propn = SchemaConfig {
            include_propn: true,
            ..SchemaConfig::default()
        };
        assert_eq!(classify(&token("PROPN", "_"), &with_propn), PosClass::ContentNoun);
        let content: Vec<_> = UPOS_TAGS
            .iter()
            .filter(|t| classify(&token(t, "_"), &cfg).is_content())
            .collect();
        assert_eq!(content, [&"ADJ", &"ADV", &"NOUN", &"VERB"]);
    }

    #[test]
    fn noun_key_drops_person() {
        let k = feature_key(&token("NOUN", "Case=Nom|Gender=Masc|Number=Sing|Person=3"), &SchemaConfig::default()).unwrap();
        assert_eq!(k, key("NOUN", Some(Gender::Masc), Some(Number::Sing), Some("Nom"), None));
        assert_eq!(k.to_string(), "(NOUN, Masc, Sing, Nom, —)");
    }

    #[test]
    fn verb_key_drops_case() {
        let k = feature_key(&token("VERB", "Case=Acc|Gender=Fem|Number=Plur|Person=3"), &SchemaConfig::default()).unwrap();
        assert_eq!(k, key("VERB", Some(Gender::Fem), Some(Number::Plur), None, Some(Person::Third)));
    }

    #[test]
    fn absent_features_stay_absent() {
        let k = feature_key(&token("ADJ", "_"), &SchemaConfig::default()).unwrap();
        assert_eq!(k, key("ADJ", None, None, None, None));
    }

    #[test]
    fn non_binary_gender_is_absent() {
        let k = feature_key(&token("NOUN", "Gender=Neut"), &SchemaConfig::default()).unwrap();
        assert_eq!(k.gender, None);
    }

    #[test]
    fn compound_case_is_literal() {
        let k = feature_key(&token("NOUN", "Case=Acc,Dat"), &SchemaConfig::default()).unwrap();
        assert_eq!(k.case.as_deref(), Some("Acc,Dat"));
    }

    #[test]
    fn function_word_key_is_contract_violation() {
        let err = feature_key(&token("ADP", "Case=Acc"), &SchemaConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn coercion_examples() {
        let noun = key("NOUN", Some(Gender::Masc), Some(Number::Sing), Some("Nom"), None);
        assert_eq!(
            coerce_gender(&noun, GenderVariant::Opposite),
            key("NOUN", Some(Gender::Fem), Some(Number::Sing), Some("Nom"), None)
        );
        let adv = key("ADV", None, Some(Number::Plur), Some("Acc"), None);
        for v in GenderVariant::ALL {
            assert_eq!(coerce_gender(&adv, v), adv);
        }
        let verb = key("VERB", Some(Gender::Fem), Some(Number::Plur), None, Some(Person::Third));
        assert_eq!(
            coerce_gender(&verb, GenderVariant::Masculine),
            key("VERB", Some(Gender::Masc), Some(Number::Plur), None, Some(Person::Third))
        );
    }

    #[test]
    fn feature_table_override_from_toml() {
        let cfg: SchemaConfig = toml::from_str(
            "include_propn = true\n[features]\nverb = [\"Gender\", \"Number\"]\n",
        )
        .unwrap();
        assert!(cfg.include_propn);
        assert_eq!(cfg.features.noun, FeatureSet::GEN_NUM_CASE);
        let k = feature_key(&token("VERB", "Gender=Fem|Number=Plur|Person=3"), &cfg).unwrap();
        assert_eq!(k.person, None);
        assert!(toml::from_str::<SchemaConfig>("[features]\nnoun = [\"Tense\"]\n").is_err());
    }

    fn arb_key() -> impl Strategy<Value = FeatureKey> {
        (
            prop::sample::select(vec!["NOUN", "VERB", "ADJ", "ADV"]),
            prop::option::of(prop::sample::select(vec![Gender::Masc, Gender::Fem])),
            prop::option::of(prop::sample::select(vec![Number::Sing, Number::Plur])),
            prop::option::of(prop::sample::select(vec!["Nom", "Acc", "Acc,Dat"])),
        )
            .prop_map(|(u, g, n, c)| key(u, g, n, c, None))
    }

    proptest! {
        #[test]
        fn fixed_variants_idempotent(k in arb_key()) {
            for v in [GenderVariant::Masculine, GenderVariant::Feminine, GenderVariant::Same] {
                let once = k.coerce_gender(v);
                prop_assert_eq!(once.coerce_gender(v), once.clone());
            }
        }

        #[test]
        fn opposite_is_involution(k in arb_key()) {
            let twice = k.coerce_gender(GenderVariant::Opposite).coerce_gender(GenderVariant::Opposite);
            prop_assert_eq!(twice, k);
        }

        #[test]
        fn key_stays_within_row(
            upos in prop::sample::select(UPOS_TAGS.to_vec()),
            person in prop::option::of(prop::sample::select(vec!["1", "2", "3"])),
        ) {
            let mut t = token(upos, "Case=Acc|Gender=Fem|Number=Sing");
            if let Some(p) = person {
                t.feats.insert("Person", p);
            }
            let cfg = SchemaConfig::default();
            match classify(&t, &cfg) {
                PosClass::Function => prop_assert!(feature_key(&t, &cfg).is_err()),
                PosClass::ContentVerb => {
                    let k = feature_key(&t, &cfg).unwrap();
                    prop_assert!(k.case.is_none());
                }
                _ => {
                    let k = feature_key(&t, &cfg).unwrap();
                    prop_assert!(k.person.is_none());
                    prop_assert!(k.case.is_some());
                }
            }
        }
    }
}
