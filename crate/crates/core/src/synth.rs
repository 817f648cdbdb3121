//! Seeded synthetic corpora with planted topic signatures.
//!
//! Every topic owns a handful of made-up signature words. A repository
//! tagged with a topic gets some of those words in its README, mixed with
//! words drawn from a shared background pool.

use std::collections::BTreeSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::RepoRecord;
use crate::textprep::{TextPreprocessor, TextTables, TokenFilterConfig};
use crate::topicnorm::TopicVocabulary;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_repos: usize,
    pub n_topics: usize,
    pub signature_tokens: usize,
    /// Signature words inserted per assigned topic.
    pub signatures_per_repo: usize,
    pub min_topics: usize,
    pub max_topics: usize,
    pub background_words: usize,
    pub readme_noise: usize,
    /// Topic 0 is assigned independently with this probability instead of
    /// being drawn with the others.
    pub rare_prevalence: Option<f64>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_repos: 500,
            n_topics: 20,
            signature_tokens: 5,
            signatures_per_repo: 3,
            min_topics: 1,
            max_topics: 3,
            background_words: 300,
            readme_noise: 40,
            rare_prevalence: None,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub records: Vec<RepoRecord>,
    pub vocab: TopicVocabulary,
    pub signatures: Vec<Vec<String>>,
}

const ONSETS: [&str; 14] = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "t", "v", "z", "j"];
const VOWELS: [&str; 4] = ["a", "i", "o", "u"];

/// Distinct pseudo-words that the text cleaner leaves untouched.
fn pseudo_words(count: usize, rng: &mut ChaCha8Rng, taken: &mut BTreeSet<String>) -> Vec<String> {
    let pre = TextPreprocessor::new(TextTables::builtin(), TokenFilterConfig::keep_all());
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let syllables = rng.random_range(2..=3);
        let word: String = (0..syllables)
            .map(|_| format!("{}{}", ONSETS.choose(rng).unwrap(), VOWELS.choose(rng).unwrap()))
            .collect();
        if taken.contains(&word) || pre.clean_text(&word) != [word.clone()] {
            continue;
        }
        taken.insert(word.clone());
        out.push(word);
    }
    out
}

pub fn topic_name(i: usize) -> String {
    format!("topic-{i:02}")
}

pub fn generate(cfg: &SynthConfig) -> SynthCorpus {
    assert!(cfg.n_topics >= 1 && cfg.min_topics >= 1 && cfg.min_topics <= cfg.max_topics);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut taken = BTreeSet::new();
    let signatures: Vec<Vec<String>> = (0..cfg.n_topics)
        .map(|_| pseudo_words(cfg.signature_tokens, &mut rng, &mut taken))
        .collect();
    let background = pseudo_words(cfg.background_words, &mut rng, &mut taken);

    let drawn: Vec<usize> = match cfg.rare_prevalence {
        Some(_) => (1..cfg.n_topics).collect(),
        None => (0..cfg.n_topics).collect(),
    };
    let max_topics = cfg.max_topics.min(drawn.len().max(1));
    let min_topics = cfg.min_topics.min(max_topics);

    let mut records = Vec::with_capacity(cfg.n_repos);
    for r in 0..cfg.n_repos {
        let k = rng.random_range(min_topics..=max_topics);
        let mut topics: Vec<usize> = drawn.choose_multiple(&mut rng, k).copied().collect();
        if let Some(p) = cfg.rare_prevalence {
            if rng.random_bool(p) {
                topics.push(0);
            }
        }
        topics.sort_unstable();

        let mut words: Vec<String> = (0..cfg.readme_noise)
            .map(|_| background.choose(&mut rng).unwrap().clone())
            .collect();
        for &t in &topics {
            words.extend(
                signatures[t]
                    .choose_multiple(&mut rng, cfg.signatures_per_repo.min(cfg.signature_tokens))
                    .cloned(),
            );
        }
        words.shuffle(&mut rng);
        let description: Vec<&str> = (0..6).map(|_| background.choose(&mut rng).unwrap().as_str()).collect();
        let name = background.choose(&mut rng).unwrap();
        let files: Vec<String> = (0..3)
            .map(|_| format!("src/{}.rs", background.choose(&mut rng).unwrap()))
            .collect();

        let mut rec = RepoRecord::new(format!("owner{r}/{name}-{r}"), 100);
        rec.description = Some(description.join(" "));
        rec.readme = Some(words.join(" "));
        rec.file_paths = files;
        rec.user_topics = topics.iter().map(|&t| topic_name(t)).collect();
        records.push(rec);
    }
    let vocab =
        TopicVocabulary::from_topics((0..cfg.n_topics).map(topic_name)).expect("generated topic names are valid");
    SynthCorpus {
        records,
        vocab,
        signatures,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_and_well_formed() {
        let a = generate(&SynthConfig::default());
        let b = generate(&SynthConfig::default());
        assert_eq!(a.records, b.records);
        assert_eq!(a.records.len(), 500);
        for r in &a.records {
            r.validate().unwrap();
            assert!((1..=3).contains(&r.user_topics.len()));
        }
        let all: BTreeSet<&String> = a.signatures.iter().flatten().collect();
        assert_eq!(all.len(), 100);
    }

    #[test]
    fn rare_topic_prevalence() {
        let c = generate(&SynthConfig {
            n_repos: 4000,
            rare_prevalence: Some(0.02),
            ..SynthConfig::default()
        });
        let rare = c
            .records
            .iter()
            .filter(|r| r.user_topics.contains(&topic_name(0)))
            .count();
        assert!((40..=120).contains(&rare), "{rare}");
    }
}
