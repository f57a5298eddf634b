use std::fmt;

use serde::Serialize;

use crate::conllu::Treebank;

/// Token-level gender counts over tokens whose FEATS carry `Gender`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct GenderCounts {
    pub masc: usize,
    pub fem: usize,
}

impl GenderCounts {
    pub fn gendered(&self) -> usize {
        self.masc + self.fem
    }

    pub fn masc_share(&self) -> Option<f64> {
        let total = self.gendered();
        (total > 0).then(|| self.masc as f64 / total as f64)
    }

    pub fn fem_share(&self) -> Option<f64> {
        self.masc_share().map(|m| 1.0 - m)
    }

    /// Share of the more frequent gender.
    pub fn majority_share(&self) -> Option<f64> {
        self.masc_share().map(|m| m.max(1.0 - m))
    }
}

fn cell(count: usize, share: Option<f64>) -> String {
    match share {
        Some(s) => format!("{count} ({:.2}%)", s * 100.0),
        None => format!("{count} (n/a)"),
    }
}

impl fmt::Display for GenderCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}",
            cell(self.masc, self.masc_share()),
            cell(self.fem, self.fem_share())
        )
    }
}

pub fn gender_report(treebank: &Treebank) -> GenderCounts {
    let mut counts = GenderCounts::default();
    for token in treebank.sentences.iter().flat_map(|s| &s.tokens) {
        match token.feats.get("Gender") {
            Some("Masc") => counts.masc += 1,
            Some("Fem") => counts.fem += 1,
            _ => {}
        }
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conllu::{parse_conllu, Split};

    #[test]
    fn counts_and_format() {
        let tb = parse_conllu(
            "1\ta\ta\tNOUN\t_\tGender=Masc\t0\troot\t_\t_\n2\tb\tb\tADP\t_\tGender=Masc\t1\tcase\t_\t_\n3\tc\tc\tNOUN\t_\tGender=Fem\t1\tdep\t_\t_\n4\td\td\tNOUN\t_\t_\t1\tdep\t_\t_\n",
            Split::Train,
        )
        .unwrap();
        let counts = gender_report(&tb);
        assert_eq!(counts, GenderCounts { masc: 2, fem: 1 });
        assert_eq!(counts.to_string(), "2 (66.67%)\t1 (33.33%)");
    }

    #[test]
    fn no_gendered_tokens() {
        let counts = gender_report(&Treebank::new(Split::Dev));
        assert_eq!(counts, GenderCounts::default());
        assert_eq!(counts.masc_share(), None);
        assert_eq!(counts.to_string(), "0 (n/a)\t0 (n/a)");
    }
}
