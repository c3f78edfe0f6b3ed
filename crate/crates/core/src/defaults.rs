//! Starter lexicons compiled into the binary so the pipeline runs without any
//! user-supplied word lists.

pub const STOPWORDS: &str = include_str!("../data/stopwords.txt");
pub const SURNAMES: &str = include_str!("../data/surnames.txt");
pub const GIVEN_NAMES: &str = include_str!("../data/given_names.txt");
pub const NAME_EXCLUSIONS: &str = include_str!("../data/name_exclusions.txt");
pub const SENTIMENT_VALENCE: &str = include_str!("../data/sentiment_valence.tsv");
pub const SENTIMENT_BOOSTERS: &str = include_str!("../data/sentiment_boosters.tsv");
pub const NEGATORS: &str = include_str!("../data/negators.txt");
pub const PERSONAS: &str = include_str!("../data/personas.json");
pub const POWER_VERBS: &str = include_str!("../data/power_verbs.tsv");
