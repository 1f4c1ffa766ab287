//! Message normalisation: noise stripping, stopword removal and offline
//! dictionary transliteration of romanized code-mixed tokens.
//!
//! The stages always run in the order clean → tokenize → stopwords →
//! transliterate.
//!
//! # Cleaning rules
//!
//! [`clean_text`] applies, in order:
//!
//! 1. lowercase the whole string;
//! 2. drop URLs: `(?:https?://|www\.)\S*`;
//! 3. drop user mentions: `@\w+`;
//! 4. drop ASCII emoticons: an eye (`:` `;` `=`), an optional nose
//!    (`-` `'` `^` `o`) and one or more mouth characters from
//!    ``)(][dp/\|*03<>$@``, when not followed by a letter; also `<3` and `</3`;
//! 5. delete apostrophes (`'` and `’`) so contractions stay one word;
//! 6. replace every character that is not an alphabetic codepoint of the basic
//!    multilingual plane with a space. This removes digits, punctuation, the
//!    `#` of hashtags (the tag body is kept), symbols and emoji;
//! 7. collapse runs of whitespace to a single space and trim.

use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const SHIPPED_STOPWORDS: &str = include_str!("../resources/stopwords.txt");
const SHIPPED_DICTIONARY: &str = include_str!("../resources/hinglish_en.dict");

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("dictionary entry `{key}` -> `{target}`: {reason}")]
    Inconsistent {
        key: String,
        target: String,
        reason: &'static str,
    },
}

static URL: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?:https?://|www\.)\S*").unwrap());
static MENTION: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"@\w+").unwrap());
static EMOTICON: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?:[:;=][\-'^o]?[)(\]\[dp/\\|*03<>$@]+|</?3)(?:[^\p{L}]|$)").unwrap());

fn is_kept_letter(c: char) -> bool {
    c.is_alphabetic() && (c as u32) <= 0xFFFF
}

pub fn clean_text(raw: &str) -> String {
    let lowered = raw.to_lowercase();
    let no_urls = URL.replace_all(&lowered, " ");
    let no_mentions = MENTION.replace_all(&no_urls, " ");
    let no_emoticons = EMOTICON.replace_all(&no_mentions, " ");
    let filtered: String = no_emoticons
        .chars()
        .filter(|&c| c != '\'' && c != '\u{2019}')
        .map(|c| if is_kept_letter(c) { c } else { ' ' })
        .collect();
    filtered.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn tokenize(cleaned: &str) -> Vec<String> {
    cleaned.split_whitespace().map(str::to_string).collect()
}

fn read_resource(path: &Path) -> Result<String, PreprocessError> {
    std::fs::read_to_string(path).map_err(|source| PreprocessError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Content lines of a resource file: trimmed, with blanks and `#` comments dropped.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, line)| (i + 1, line.trim_end_matches('\r')))
        .filter(|(_, line)| {
            let t = line.trim();
            !t.is_empty() && !t.starts_with('#')
        })
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StopwordList {
    words: HashSet<String>,
}

impl StopwordList {
    pub fn new<I, S>(words: I) -> Result<Self, PreprocessError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut set = HashSet::new();
        for (i, word) in words.into_iter().enumerate() {
            let word = word.into();
            check_token(&word, i + 1)?;
            set.insert(word);
        }
        Ok(StopwordList { words: set })
    }

    /// One token per line; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self, PreprocessError> {
        let mut words = HashSet::new();
        for (line, content) in content_lines(text) {
            let word = content.trim();
            check_token(word, line)?;
            words.insert(word.to_string());
        }
        Ok(StopwordList { words })
    }

    pub fn load(path: &Path) -> Result<Self, PreprocessError> {
        Self::parse(&read_resource(path)?)
    }

    /// NLTK English list plus common romanized Hindi function words.
    pub fn shipped() -> Self {
        Self::parse(SHIPPED_STOPWORDS).expect("shipped stopword list is valid")
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }
}

fn check_token(token: &str, line: usize) -> Result<(), PreprocessError> {
    let problem = if token.is_empty() {
        Some("empty token")
    } else if token.chars().any(char::is_whitespace) {
        Some("token contains whitespace")
    } else if token.to_lowercase() != token {
        Some("token is not lowercase")
    } else {
        None
    };
    match problem {
        Some(message) => Err(PreprocessError::Parse {
            line,
            message: format!("{message}: `{token}`"),
        }),
        None => Ok(()),
    }
}

/// Romanized code-mixed token → English token sequence.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TransliterationDictionary {
    entries: HashMap<String, Vec<String>>,
}

impl TransliterationDictionary {
    pub fn new<I, K, V>(entries: I) -> Result<Self, PreprocessError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: IntoIterator,
        V::Item: Into<String>,
    {
        let mut map = HashMap::new();
        for (i, (key, targets)) in entries.into_iter().enumerate() {
            let key = key.into();
            check_token(&key, i + 1)?;
            let targets: Vec<String> = targets.into_iter().map(Into::into).collect();
            if targets.is_empty() || targets.iter().any(|t| t.trim().is_empty()) {
                return Err(PreprocessError::Parse {
                    line: i + 1,
                    message: format!("entry `{key}` has an empty target"),
                });
            }
            map.insert(key, targets);
        }
        Ok(TransliterationDictionary { entries: map })
    }

    /// `source<TAB>target tokens` per line; `#` starts a comment line. A
    /// repeated source replaces the earlier entry.
    pub fn parse(text: &str) -> Result<Self, PreprocessError> {
        let mut entries = HashMap::new();
        for (line, content) in content_lines(text) {
            let (key, target) = content.split_once('\t').ok_or_else(|| PreprocessError::Parse {
                line,
                message: "expected `source<TAB>target`".to_string(),
            })?;
            let key = key.trim();
            check_token(key, line)?;
            let targets: Vec<String> = target.split_whitespace().map(str::to_string).collect();
            if targets.is_empty() {
                return Err(PreprocessError::Parse {
                    line,
                    message: format!("entry `{key}` has an empty target"),
                });
            }
            if entries.insert(key.to_string(), targets).is_some() {
                log::warn!("dictionary line {line}: duplicate source `{key}`, later entry wins");
            }
        }
        Ok(TransliterationDictionary { entries })
    }

    pub fn load(path: &Path) -> Result<Self, PreprocessError> {
        Self::parse(&read_resource(path)?)
    }

    pub fn shipped() -> Self {
        Self::parse(SHIPPED_DICTIONARY).expect("shipped dictionary is valid")
    }

    pub fn get(&self, token: &str) -> Option<&[String]> {
        self.entries.get(token).map(Vec::as_slice)
    }

    pub fn contains_key(&self, token: &str) -> bool {
        self.entries.contains_key(token)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[String])> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }
}

pub fn remove_stopwords<S: AsRef<str>>(tokens: &[S], stoplist: &StopwordList) -> Vec<String> {
    tokens
        .iter()
        .map(AsRef::as_ref)
        .filter(|t| !stoplist.contains(t))
        .map(str::to_string)
        .collect()
}

pub fn transliterate<S: AsRef<str>>(tokens: &[S], dict: &TransliterationDictionary) -> Vec<String> {
    let mut out = Vec::with_capacity(tokens.len());
    for token in tokens {
        let token = token.as_ref();
        match dict.get(token) {
            Some(targets) => out.extend(targets.iter().cloned()),
            None => out.push(token.to_string()),
        }
    }
    out
}

/// Stopwords and dictionary, checked to be jointly closed: every dictionary
/// target token is already clean, is not a stopword and is not itself a
/// dictionary key. Under that condition the pipeline output is a fixed point.
#[derive(Debug, Clone)]
pub struct Resources {
    stopwords: StopwordList,
    dictionary: TransliterationDictionary,
}

impl Resources {
    pub fn new(stopwords: StopwordList, dictionary: TransliterationDictionary) -> Result<Self, PreprocessError> {
        let mut keys: Vec<_> = dictionary.iter().collect();
        keys.sort_by_key(|(k, _)| *k);
        for (key, targets) in keys {
            for target in targets {
                let reason = if clean_text(target) != *target {
                    Some("target is not in cleaned form")
                } else if stopwords.contains(target) {
                    Some("target is a stopword")
                } else if dictionary.contains_key(target) {
                    Some("target is itself a dictionary key")
                } else {
                    None
                };
                if let Some(reason) = reason {
                    return Err(PreprocessError::Inconsistent {
                        key: key.to_string(),
                        target: target.clone(),
                        reason,
                    });
                }
            }
        }
        Ok(Resources { stopwords, dictionary })
    }

    pub fn shipped() -> Self {
        Self::new(StopwordList::shipped(), TransliterationDictionary::shipped())
            .expect("shipped resources are consistent")
    }

    pub fn stopwords(&self) -> &StopwordList {
        &self.stopwords
    }

    pub fn dictionary(&self) -> &TransliterationDictionary {
        &self.dictionary
    }
}

/// Token counts after each stage.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageTrace {
    pub tokenized: usize,
    pub after_stopwords: usize,
    pub after_transliteration: usize,
}

impl std::ops::AddAssign for StageTrace {
    fn add_assign(&mut self, rhs: Self) {
        self.tokenized += rhs.tokenized;
        self.after_stopwords += rhs.after_stopwords;
        self.after_transliteration += rhs.after_transliteration;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProcessedMessage {
    pub tokens: Vec<String>,
    pub stage_trace: Option<StageTrace>,
}

impl ProcessedMessage {
    pub fn joined(&self) -> String {
        self.tokens.join(" ")
    }
}

pub fn preprocess_pipeline(raw: &str, resources: &Resources, audit: bool) -> ProcessedMessage {
    let tokens = tokenize(&clean_text(raw));
    let kept = remove_stopwords(&tokens, &resources.stopwords);
    let translated = transliterate(&kept, &resources.dictionary);
    let stage_trace = audit.then_some(StageTrace {
        tokenized: tokens.len(),
        after_stopwords: kept.len(),
        after_transliteration: translated.len(),
    });
    ProcessedMessage {
        tokens: translated,
        stage_trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn words(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn cleans_table_rows() {
        assert_eq!(
            clean_text("Hum sab ghumne jaa rahe hain? http://t."),
            "hum sab ghumne jaa rahe hain"
        );
        assert_eq!(clean_text("@username1 Mujhe mat sikha:/"), "mujhe mat sikha");
        assert_eq!(
            clean_text("terrorist Akbaar kill #SaveWorld"),
            "terrorist akbaar kill saveworld"
        );
        assert_eq!(clean_text(""), "");
    }

    #[test]
    fn cleans_assorted_noise() {
        assert_eq!(clean_text("lol :) :-( ;P <3 xd"), "lol xd");
        assert_eq!(clean_text("call 9876 now!!! 😂😂"), "call now");
        assert_eq!(clean_text("don't   www.example.com/a?b=1 stop"), "dont stop");
        assert_eq!(clean_text("note:Done"), "note done");
        assert_eq!(clean_text("a\t\nb"), "a b");
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("hum sab"), ["hum", "sab"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("a b  c"), ["a", "b", "c"]);
    }

    #[test]
    fn stopword_filter_examples() {
        let list = StopwordList::new(["we", "all", "are"]).unwrap();
        assert_eq!(
            remove_stopwords(&words("we all are going outside"), &list),
            ["going", "outside"]
        );
        assert!(remove_stopwords::<String>(&[], &list).is_empty());
        let shipped = StopwordList::shipped();
        assert!(!shipped.contains("kill"));
        assert!(!shipped.contains("terrorist"));
        assert_eq!(
            remove_stopwords(&words("kill terrorist"), &shipped),
            ["kill", "terrorist"]
        );
    }

    #[test]
    fn stopword_list_rejects_bad_entries() {
        assert!(StopwordList::new(["Upper"]).is_err());
        assert!(StopwordList::new(["two words"]).is_err());
        assert!(StopwordList::parse("# c\nok\n\nfine\n").unwrap().len() == 2);
    }

    #[test]
    fn transliterate_examples() {
        let dict =
            TransliterationDictionary::new([("mujhe", vec!["me"]), ("mat", vec!["not"]), ("sikha", vec!["teach"])])
                .unwrap();
        assert_eq!(transliterate(&words("mujhe mat sikha"), &dict), ["me", "not", "teach"]);
        assert_eq!(
            transliterate(&words("hello"), &TransliterationDictionary::default()),
            ["hello"]
        );
        let variants =
            TransliterationDictionary::new([("pyaar", vec!["love"]), ("pyar", vec!["love"]), ("pyr", vec!["love"])])
                .unwrap();
        assert_eq!(transliterate(&words("pyaar"), &variants), ["love"]);
        assert_eq!(transliterate(&words("pyr"), &variants), ["love"]);
    }

    #[test]
    fn multi_token_targets_expand() {
        let dict = TransliterationDictionary::parse("chup\tkeep quiet\n").unwrap();
        assert_eq!(transliterate(&words("chup raho"), &dict), ["keep", "quiet", "raho"]);
    }

    #[test]
    fn dictionary_parse_errors() {
        assert!(matches!(
            TransliterationDictionary::parse("nosep\n"),
            Err(PreprocessError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            TransliterationDictionary::parse("# x\nkey\t  \n"),
            Err(PreprocessError::Parse { line: 2, .. })
        ));
        let dict = TransliterationDictionary::parse("a\tx\na\ty\n").unwrap();
        assert_eq!(dict.get("a").unwrap(), ["y"]);
    }

    #[test]
    fn inconsistent_resources_rejected() {
        let stop = StopwordList::new(["not"]).unwrap();
        let dict = TransliterationDictionary::new([("mat", vec!["not"])]).unwrap();
        assert!(matches!(
            Resources::new(stop, dict),
            Err(PreprocessError::Inconsistent {
                reason: "target is a stopword",
                ..
            })
        ));
        let chain = TransliterationDictionary::new([("a", vec!["b"]), ("b", vec!["c"])]).unwrap();
        assert!(Resources::new(StopwordList::default(), chain).is_err());
        let dirty = TransliterationDictionary::new([("a", vec!["B!"])]).unwrap();
        assert!(Resources::new(StopwordList::default(), dirty).is_err());
    }

    #[test]
    fn shipped_pipeline_golden() {
        let resources = Resources::shipped();
        let out = preprocess_pipeline("Hum sab ghumne jaa rahe hain? http://t.", &resources, true);
        assert_eq!(out.tokens, ["roam", "go", "rahe", "hain"]);
        assert_eq!(
            out.stage_trace,
            Some(StageTrace {
                tokenized: 6,
                after_stopwords: 4,
                after_transliteration: 4
            })
        );
        let out = preprocess_pipeline("@username1 Mujhe mat sikha:/", &resources, false);
        assert_eq!(out.tokens, ["teach"]);
        assert_eq!(out.stage_trace, None);
        let out = preprocess_pipeline("terrorist Akbaar kill SaveWorld", &resources, false);
        assert_eq!(out.tokens, ["terrorist", "akbaar", "kill", "saveworld"]);
        assert_eq!(preprocess_pipeline("", &resources, false), ProcessedMessage::default());
    }

    proptest! {
        #[test]
        fn clean_is_idempotent(raw in "\\PC{0,60}") {
            let once = clean_text(&raw);
            prop_assert_eq!(clean_text(&once), once);
        }

        #[test]
        fn clean_is_idempotent_on_tweetlike(raw in "[a-zA-Z@#:;=/()'. 0-9\\-pPdD<3]{0,60}") {
            let once = clean_text(&raw);
            prop_assert_eq!(clean_text(&once), once.clone());
            prop_assert!(!once.contains(['@', '#', ':', '/']));
        }

        #[test]
        fn pipeline_output_is_closed(raw in "[a-zA-Z @#!?]{0,80}|(pyaar|sab|hum|dost|maaro|kill|the|bura|chup) {0,1}") {
            let resources = Resources::shipped();
            let out = preprocess_pipeline(&raw, &resources, false);
            for token in &out.tokens {
                prop_assert!(!token.is_empty());
                prop_assert_eq!(token.to_lowercase(), token.clone());
                prop_assert!(!resources.stopwords().contains(token));
                prop_assert!(!resources.dictionary().contains_key(token));
            }
            let again = preprocess_pipeline(&out.joined(), &resources, false);
            prop_assert_eq!(again.tokens, out.tokens);
        }

        #[test]
        fn filters_commute_with_concatenation(
            a in prop::collection::vec("(pyaar|sab|hum|dost|kill|the|chup|zz)", 0..8),
            b in prop::collection::vec("(pyaar|sab|hum|dost|kill|the|chup|zz)", 0..8),
        ) {
            let resources = Resources::shipped();
            let joined: Vec<String> = a.iter().chain(b.iter()).cloned().collect();
            let stop = |t: &[String]| remove_stopwords(t, resources.stopwords());
            let trans = |t: &[String]| transliterate(t, resources.dictionary());
            prop_assert_eq!(stop(&joined), [stop(&a), stop(&b)].concat());
            prop_assert_eq!(trans(&joined), [trans(&a), trans(&b)].concat());
        }
    }
}
