//! Tweet cleaning: entity separation, normalization, tokenization, sentence
//! splitting, syllable counting and English detection.
//!
//! Everything here is a pure function over its inputs; the only shared state
//! is the read-only word list passed to [`detect_english`].

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::resources::WordList;

/// A tweet split into its cleaned text and the entities removed from it.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeparatedTweet {
    pub clean_text: String,
    /// Lowercased, without the leading `#`.
    pub hashtags: Vec<String>,
    /// Without the leading `@`.
    pub mentions: Vec<String>,
    pub urls: Vec<String>,
    pub emojis: Vec<String>,
}

static TAG_OR_MENTION: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^([#@])(\w+)").unwrap());

/// Emoji blocks: U+1F300..=U+1FAFF and U+2600..=U+27BF.
pub fn is_emoji_base(c: char) -> bool {
    matches!(c as u32, 0x1F300..=0x1FAFF | 0x2600..=0x27BF)
}

/// Variation selector 16 and the zero-width joiner.
fn is_emoji_joiner(c: char) -> bool {
    matches!(c as u32, 0xFE0F | 0x200D)
}

fn is_url(token: &str) -> bool {
    let lower = token.to_ascii_lowercase();
    lower.starts_with("http://") || lower.starts_with("https://") || lower.starts_with("www.")
}

/// Splits a whitespace token into alternating text pieces and emoji
/// sequences. A sequence is a run of emoji codepoints glued together by
/// joiners and variation selectors.
fn split_emoji(token: &str, pieces: &mut Vec<String>, emojis: &mut Vec<String>) {
    let mut text = String::new();
    let mut emoji = String::new();
    for c in token.chars() {
        let continues_sequence = !emoji.is_empty() && (is_emoji_joiner(c) || is_emoji_base(c));
        if is_emoji_base(c) || continues_sequence || (is_emoji_joiner(c) && emoji.is_empty()) {
            // A base emoji directly after another one without a joiner starts a new sequence.
            if is_emoji_base(c) && !emoji.is_empty() && !emoji.ends_with('\u{200D}') {
                emojis.push(std::mem::take(&mut emoji));
            }
            if !text.is_empty() {
                pieces.push(std::mem::take(&mut text));
            }
            emoji.push(c);
        } else {
            if !emoji.is_empty() {
                emojis.push(std::mem::take(&mut emoji));
            }
            text.push(c);
        }
    }
    if !emoji.is_empty() {
        emojis.push(emoji);
    }
    if !text.is_empty() {
        pieces.push(text);
    }
}

/// Removes hashtags, mentions, URLs and emojis from a raw tweet.
///
/// A hashtag or mention must start a token (`a#b` is plain text). Any
/// trailing characters after the `\w+` body stay in the clean text, and are
/// themselves scanned again, so `#a#b` yields two hashtags.
pub fn separate_entities(raw: &str) -> SeparatedTweet {
    let mut out = SeparatedTweet::default();
    let mut clean: Vec<String> = Vec::new();
    for token in raw.split_whitespace() {
        if is_url(token) {
            out.urls.push(token.to_string());
            continue;
        }
        let mut pieces = Vec::new();
        split_emoji(token, &mut pieces, &mut out.emojis);
        for piece in pieces {
            if is_url(&piece) {
                out.urls.push(piece);
                continue;
            }
            let mut rest: &str = &piece;
            while let Some(caps) = TAG_OR_MENTION.captures(rest) {
                let body = caps.get(2).unwrap().as_str();
                if &caps[1] == "#" {
                    out.hashtags.push(body.to_lowercase());
                } else {
                    out.mentions.push(body.to_string());
                }
                rest = &rest[caps.get(0).unwrap().end()..];
            }
            if !rest.is_empty() {
                clean.push(rest.to_string());
            }
        }
    }
    out.clean_text = clean.join(" ");
    out
}

static NUMBER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\d+(?:[.,]\d+)*").unwrap());

/// Lowercases, replaces numbers with `<num>`, caps character repetitions at
/// three and collapses whitespace.
pub fn normalize(clean_text: &str) -> String {
    let lower = clean_text.to_lowercase();
    let numbered = NUMBER.replace_all(&lower, "<num>");
    let mut out = String::with_capacity(numbered.len());
    let mut last: Option<char> = None;
    let mut run = 0usize;
    for word in numbered.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
            last = Some(' ');
            run = 1;
        }
        for c in word.chars() {
            if Some(c) == last {
                run += 1;
            } else {
                last = Some(c);
                run = 1;
            }
            if run <= 3 {
                out.push(c);
            }
        }
    }
    out
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

fn is_token_char(c: char) -> bool {
    c.is_alphanumeric() || is_apostrophe(c)
}

/// Maximal runs of letters, digits and apostrophes. Leading and trailing
/// apostrophes are trimmed so quoting does not produce new tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !is_token_char(c))
        .map(|t| t.trim_matches(is_apostrophe))
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

fn is_sentence_end(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

/// Splits after `.`, `!` or `?` when followed by whitespace or the end of the
/// text. Runs of terminators (`?!`) stay together. Abbreviations are not
/// special-cased.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut sentences = Vec::new();
    let mut current = String::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        current.push(c);
        if is_sentence_end(c) {
            match chars.peek() {
                None => {}
                Some(n) if n.is_whitespace() => {}
                _ => continue,
            }
            let s = current.trim();
            if !s.is_empty() {
                sentences.push(s.to_string());
            }
            current.clear();
        }
    }
    let s = current.trim();
    if !s.is_empty() {
        sentences.push(s.to_string());
    }
    sentences
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

/// Vowel-group syllable estimate with the silent-`e` rule; never below 1.
pub fn count_syllables(word: &str) -> Result<usize> {
    if word.is_empty() {
        return Err(Error::validation("cannot count syllables of an empty word"));
    }
    let lower: Vec<char> = word.to_lowercase().chars().collect();
    let mut groups = 0usize;
    let mut in_group = false;
    for &c in &lower {
        if is_vowel(c) {
            if !in_group {
                groups += 1;
            }
            in_group = true;
        } else {
            in_group = false;
        }
    }
    let n = lower.len();
    if n >= 2 && lower[n - 1] == 'e' && lower[n - 2] != 'l' {
        groups = groups.saturating_sub(1);
    }
    Ok(groups.max(1))
}

pub const COMMON_WORD_FRACTION: f64 = 0.2;
pub const ASCII_LETTER_FRACTION: f64 = 0.6;

/// Uses the language tag when one is present, otherwise the common-word and
/// ASCII-letter heuristic.
pub fn detect_english(tweet: &str, lang_tag: Option<&str>, common: &WordList) -> bool {
    if let Some(tag) = lang_tag {
        return tag == "en";
    }
    let tokens = tokenize(&tweet.to_lowercase());
    if tokens.is_empty() {
        return false;
    }
    let hits = tokens.iter().filter(|t| common.contains(t)).count();
    let (letters, ascii) = tweet
        .chars()
        .filter(|c| c.is_alphabetic())
        .fold((0usize, 0usize), |(l, a), c| (l + 1, a + usize::from(c.is_ascii())));
    if letters == 0 {
        return false;
    }
    hits as f64 >= COMMON_WORD_FRACTION * tokens.len() as f64 && ascii as f64 >= ASCII_LETTER_FRACTION * letters as f64
}

/// Entity separation followed by normalization of the clean text.
pub fn clean_tweet(raw: &str) -> (SeparatedTweet, String) {
    let sep = separate_entities(raw);
    let norm = normalize(&sep.clean_text);
    (sep, norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn separates_one_of_each() {
        let s = separate_entities("go #rust @ferris https://x.yz 🎉");
        assert_eq!(s.clean_text, "go");
        assert_eq!(s.hashtags, vec!["rust"]);
        assert_eq!(s.mentions, vec!["ferris"]);
        assert_eq!(s.urls, vec!["https://x.yz"]);
        assert_eq!(s.emojis, vec!["🎉"]);
    }

    #[test]
    fn empty_input_is_empty() {
        assert_eq!(separate_entities(""), SeparatedTweet::default());
    }

    #[test]
    fn hash_inside_token_is_not_a_hashtag() {
        // Oracle: a hashtag is a whitespace-delimited token matching ^#\w+.
        let oracle = Regex::new(r"(?:^|\s)#\w+").unwrap();
        assert!(!oracle.is_match("a#b"));
        let s = separate_entities("a#b");
        assert_eq!(s.clean_text, "a#b");
        assert!(s.hashtags.is_empty());
    }

    #[test]
    fn trailing_punctuation_stays_in_text() {
        let s = separate_entities("love #Rust! and @bob's code");
        assert_eq!(s.hashtags, vec!["rust"]);
        assert_eq!(s.mentions, vec!["bob"]);
        assert_eq!(s.clean_text, "love ! and 's code");
    }

    #[test]
    fn chained_entities_are_all_extracted() {
        let s = separate_entities("#a#b@c");
        assert_eq!(s.hashtags, vec!["a", "b"]);
        assert_eq!(s.mentions, vec!["c"]);
        assert_eq!(s.clean_text, "");
    }

    #[test]
    fn www_and_mixed_case_schemes_are_urls() {
        let s = separate_entities("see www.example.com and HTTPS://A.B/c");
        assert_eq!(s.urls, vec!["www.example.com", "HTTPS://A.B/c"]);
        assert_eq!(s.clean_text, "see and");
    }

    #[test]
    fn emoji_attached_to_words_and_zwj_sequences() {
        let s = separate_entities("nice🔥🔥 family👨\u{200D}👩\u{200D}👧 ☀\u{FE0F}");
        assert_eq!(s.clean_text, "nice family");
        assert_eq!(s.emojis, vec!["🔥", "🔥", "👨\u{200D}👩\u{200D}👧", "☀\u{FE0F}"]);
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize("I LOVED it"), "i loved it");
        assert_eq!(normalize("soooooo good"), "sooo good");
        assert_eq!(normalize("call 911"), "call <num>");
        assert_eq!(normalize("pi is 3.14 and 1,000"), "pi is <num> and <num>");
        assert_eq!(normalize("  a \t b  "), "a b");
    }

    #[test]
    fn repetition_cap_oracle() {
        // Oracle: for each maximal run of a character, keep min(len, 3).
        let input = "aaaaabbbbcc!!!!!!";
        let mut expected = String::new();
        let chars: Vec<char> = input.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let mut j = i;
            while j < chars.len() && chars[j] == chars[i] {
                j += 1;
            }
            for _ in 0..(j - i).min(3) {
                expected.push(chars[i]);
            }
            i = j;
        }
        assert_eq!(normalize(input), expected);
        assert_eq!(expected, "aaabbbcc!!!");
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("don't stop"), vec!["don't", "stop"]);
        assert_eq!(tokenize("'quoted' words, here!"), vec!["quoted", "words", "here"]);
        assert_eq!(tokenize("call <num>"), vec!["call", "num"]);
        assert!(tokenize("!!! ...").is_empty());
    }

    #[test]
    fn sentence_examples() {
        assert_eq!(split_sentences("Hi. Bye!"), vec!["Hi.", "Bye!"]);
        assert_eq!(split_sentences("e.g. cats"), vec!["e.g.", "cats"]);
        assert_eq!(split_sentences("Really?! Yes"), vec!["Really?!", "Yes"]);
        assert_eq!(split_sentences("no terminator"), vec!["no terminator"]);
        assert!(split_sentences("   ").is_empty());
        assert_eq!(split_sentences("3.14 is pi."), vec!["3.14 is pi."]);
    }

    #[test]
    fn syllable_examples() {
        assert_eq!(count_syllables("cat").unwrap(), 1);
        assert_eq!(count_syllables("table").unwrap(), 2);
        assert_eq!(count_syllables("cake").unwrap(), 1);
        assert_eq!(count_syllables("the").unwrap(), 1);
        assert_eq!(count_syllables("rhythm").unwrap(), 1);
        assert_eq!(count_syllables("num").unwrap(), 1);
        assert!(count_syllables("").is_err());
    }

    #[test]
    fn syllable_vowel_group_oracle() {
        // Oracle: count positions where a vowel follows a non-vowel (or starts the word).
        fn oracle(w: &str) -> usize {
            let v: Vec<bool> = w.chars().map(|c| "aeiouy".contains(c)).collect();
            let mut n = (0..v.len()).filter(|&i| v[i] && (i == 0 || !v[i - 1])).count();
            if w.ends_with('e') && !w.ends_with("le") && w.len() >= 2 {
                n = n.saturating_sub(1);
            }
            n.max(1)
        }
        for w in ["banana", "beautiful", "queue", "strengths", "people", "apple", "you"] {
            assert_eq!(count_syllables(w).unwrap(), oracle(w), "{w}");
        }
        assert_eq!(count_syllables("banana").unwrap(), 3);
    }

    #[test]
    fn english_detection() {
        let common = WordList::english_common();
        assert!(detect_english("これは日本語です", Some("en"), &common));
        assert!(!detect_english("the quick brown fox", Some("fr"), &common));
        assert!(detect_english("the quick brown fox jumps", None, &common));
        assert!(!detect_english("これは日本語です", None, &common));
        assert!(!detect_english("123 456", None, &common));
        assert!(!detect_english("zzyzx qwrtp flurbo", None, &common));
    }

    #[test]
    fn english_detection_oracle_fractions() {
        let common: WordList = ["the"].into_iter().collect();
        // 1 of 5 tokens common = exactly 20%.
        assert!(detect_english("the aa bb cc dd", None, &common));
        // 1 of 6 < 20%.
        assert!(!detect_english("the aa bb cc dd ee", None, &common));
        // ASCII letters 3 of 5 = 60% exactly.
        assert!(detect_english("the éé", None, &common));
        assert!(!detect_english("the ééé", None, &common));
    }

    proptest! {
        #[test]
        fn separation_is_idempotent(s in "[a-z#@ 🎉.!:/w]{0,40}") {
            let once = separate_entities(&s);
            let twice = separate_entities(&once.clean_text);
            prop_assert!(twice.hashtags.is_empty());
            prop_assert!(twice.mentions.is_empty());
            prop_assert!(twice.urls.is_empty());
            prop_assert!(twice.emojis.is_empty());
            prop_assert_eq!(twice.clean_text, once.clean_text);
        }

        #[test]
        fn separation_preserves_characters(s in "[a-zA-Z#@ 🎉!_]{0,40}") {
            // Every non-whitespace character ends up in exactly one output.
            let sep = separate_entities(&s);
            let mut original: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
            let mut rebuilt: Vec<char> = sep.clean_text.chars().filter(|c| !c.is_whitespace()).collect();
            rebuilt.extend(sep.urls.concat().chars());
            rebuilt.extend(sep.emojis.concat().chars());
            for m in &sep.mentions {
                rebuilt.push('@');
                rebuilt.extend(m.chars());
            }
            for h in &sep.hashtags {
                rebuilt.push('#');
                rebuilt.extend(h.chars());
            }
            let lower = |v: &mut Vec<char>| {
                for c in v.iter_mut() {
                    *c = c.to_ascii_lowercase();
                }
                v.sort_unstable();
            };
            lower(&mut original);
            lower(&mut rebuilt);
            prop_assert_eq!(original, rebuilt);
        }

        #[test]
        fn normalize_is_idempotent(s in "[a-zA-Z0-9 .,!]{0,60}") {
            let once = normalize(&s);
            prop_assert_eq!(normalize(&once), once);
        }

        #[test]
        fn syllables_at_least_one(w in "[a-z']{1,20}") {
            prop_assert!(count_syllables(&w).unwrap() >= 1);
        }

        #[test]
        fn sentences_non_empty_and_lossless(s in "[a-z .!?]{0,60}") {
            let sents = split_sentences(&s);
            prop_assert!(sents.iter().all(|x| !x.is_empty()));
            if !s.trim().is_empty() {
                prop_assert!(!sents.is_empty());
            }
            let strip = |t: &str| t.chars().filter(|c| !c.is_whitespace() && !is_sentence_end(*c)).collect::<String>();
            prop_assert_eq!(strip(&sents.join(" ")), strip(&s));
        }
    }
}
