//! Normalization, script detection, tokenization and affix stripping.

use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Script {
    Arabic,
    Latin,
    Digit,
    Punct,
    Mixed,
    Other,
}

impl Script {
    pub fn as_str(self) -> &'static str {
        match self {
            Script::Arabic => "arabic",
            Script::Latin => "latin",
            Script::Digit => "digit",
            Script::Punct => "punct",
            Script::Mixed => "mixed",
            Script::Other => "other",
        }
    }
}

impl fmt::Display for Script {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Script {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "arabic" | "ar" => Ok(Script::Arabic),
            "latin" | "en" => Ok(Script::Latin),
            "digit" => Ok(Script::Digit),
            "punct" => Ok(Script::Punct),
            "mixed" => Ok(Script::Mixed),
            "other" => Ok(Script::Other),
            _ => Err(Error::InvalidInput(format!("unknown script `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NormalizationConfig {
    pub unify_alef: bool,
    pub unify_ya_alefmaqsura: bool,
    pub strip_diacritics: bool,
    pub strip_tatweel: bool,
    pub punctuation_removal: bool,
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        Self {
            unify_alef: true,
            unify_ya_alefmaqsura: true,
            strip_diacritics: true,
            strip_tatweel: true,
            punctuation_removal: false,
        }
    }
}

const TATWEEL: char = '\u{0640}';
const ALEF: char = '\u{0627}';
const ALEF_MAQSURA: char = '\u{0649}';
const YA: char = '\u{064A}';

/// Arabic harakat, tanween, shadda, sukun and the superscript alef.
pub fn is_arabic_diacritic(c: char) -> bool {
    matches!(c, '\u{064B}'..='\u{0652}' | '\u{0670}')
}

fn is_alef_variant(c: char) -> bool {
    // madda, hamza above, hamza below, wasla
    matches!(c, '\u{0622}' | '\u{0623}' | '\u{0625}' | '\u{0671}')
}

pub fn is_arabic_block(c: char) -> bool {
    matches!(c,
        '\u{0600}'..='\u{06FF}'
        | '\u{0750}'..='\u{077F}'
        | '\u{08A0}'..='\u{08FF}'
        | '\u{FB50}'..='\u{FDFF}'
        | '\u{FE70}'..='\u{FEFF}')
}

fn is_arabic_letter(c: char) -> bool {
    is_arabic_block(c) && c.is_alphabetic()
}

fn is_latin_letter(c: char) -> bool {
    c.is_ascii_alphabetic()
        || (c.is_alphabetic()
            && matches!(c, '\u{00C0}'..='\u{024F}' | '\u{1E00}'..='\u{1EFF}')
            && c != '\u{00D7}'
            && c != '\u{00F7}')
}

pub fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(c,
            '\u{060C}' | '\u{061B}' | '\u{061F}' | '\u{066A}'..='\u{066D}' | '\u{06D4}'
            | '\u{00A1}' | '\u{00A7}' | '\u{00AB}' | '\u{00B6}' | '\u{00B7}' | '\u{00BB}' | '\u{00BF}'
            | '\u{2010}'..='\u{2027}' | '\u{2030}'..='\u{205E}'
            | '\u{3001}'..='\u{3003}' | '\u{FD3E}' | '\u{FD3F}')
}

/// Applies the enabled character rewrites. Idempotent for every configuration.
pub fn normalize(text: &str, cfg: &NormalizationConfig) -> String {
    text.chars()
        .filter(|&c| !(cfg.strip_diacritics && is_arabic_diacritic(c)))
        .filter(|&c| !(cfg.strip_tatweel && c == TATWEEL))
        .filter(|&c| !(cfg.punctuation_removal && is_punctuation(c)))
        .map(|c| {
            if cfg.unify_alef && is_alef_variant(c) {
                ALEF
            } else if cfg.unify_ya_alefmaqsura && c == ALEF_MAQSURA {
                YA
            } else {
                c
            }
        })
        .collect()
}

pub fn strip_diacritics(text: &str) -> String {
    text.chars().filter(|&c| !is_arabic_diacritic(c)).collect()
}

/// Classifies a token by the scripts of its letters.
///
/// Digits and punctuation are ignored when letters are present, so `مصر2` is
/// Arabic. Arabizi is Latin.
pub fn detect_script(token: &str) -> Result<Script> {
    if token.is_empty() {
        return Err(Error::InvalidInput("cannot detect the script of an empty token".into()));
    }
    let (mut arabic, mut latin, mut other_letter) = (false, false, false);
    let (mut digit, mut punct, mut other) = (false, false, false);
    for c in token.chars() {
        if is_arabic_letter(c) || is_arabic_diacritic(c) {
            arabic = true;
        } else if is_latin_letter(c) {
            latin = true;
        } else if c.is_alphabetic() {
            other_letter = true;
        } else if c.is_numeric() {
            digit = true;
        } else if is_punctuation(c) {
            punct = true;
        } else {
            other = true;
        }
    }
    Ok(match (arabic, latin) {
        (true, true) => Script::Mixed,
        (true, false) => Script::Arabic,
        (false, true) => Script::Latin,
        (false, false) if other_letter || other => Script::Other,
        (false, false) if digit => Script::Digit,
        (false, false) if punct => Script::Punct,
        _ => Script::Other,
    })
}

/// Splits on whitespace and separates every punctuation character into its own token.
pub fn tokenize(sentence: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in sentence.split_whitespace() {
        let mut current = String::new();
        for c in chunk.chars() {
            if is_punctuation(c) {
                if !current.is_empty() {
                    tokens.push(std::mem::take(&mut current));
                }
                tokens.push(c.to_string());
            } else {
                current.push(c);
            }
        }
        if !current.is_empty() {
            tokens.push(current);
        }
    }
    tokens
}

/// Prefix and suffix inventories, kept longest-first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffixTable {
    prefixes: Vec<String>,
    suffixes: Vec<String>,
}

impl AffixTable {
    pub fn new<I, J, S, T>(prefixes: I, suffixes: J) -> Self
    where
        I: IntoIterator<Item = S>,
        J: IntoIterator<Item = T>,
        S: Into<String>,
        T: Into<String>,
    {
        let mut prefixes: Vec<String> = prefixes.into_iter().map(Into::into).collect();
        let mut suffixes: Vec<String> = suffixes.into_iter().map(Into::into).collect();
        for list in [&mut prefixes, &mut suffixes] {
            list.retain(|a| !a.is_empty());
            let mut seen = std::collections::HashSet::new();
            list.retain(|a| seen.insert(a.clone()));
            // stable: equal lengths keep file order
            list.sort_by_key(|a| std::cmp::Reverse(a.chars().count()));
        }
        Self { prefixes, suffixes }
    }

    /// Arabic clitics stripped by [`Stemmer`].
    pub fn stemmer_default() -> Self {
        Self::new(
            ["ال", "و", "ب", "ف", "ك", "ل", "لل", "وال"],
            ["ات", "ون", "ين", "ها", "هم", "نا", "ة"],
        )
    }

    /// Switch-point affixes observed in mixed tokens (articles, prepositional
    /// articles and the feminine plural).
    pub fn seglid_default() -> Self {
        Self::new(
            ["el", "l", "ال", "fl", "fel", "lel", "لل"],
            ["ات"],
        )
    }

    pub fn prefixes(&self) -> &[String] {
        &self.prefixes
    }

    pub fn suffixes(&self) -> &[String] {
        &self.suffixes
    }

    pub fn is_prefix(&self, s: &str) -> bool {
        self.prefixes.iter().any(|p| p == s)
    }

    pub fn is_suffix(&self, s: &str) -> bool {
        self.suffixes.iter().any(|p| p == s)
    }

    /// Reads `[prefix]` / `[suffix]` sections, one affix per line. `#` starts a comment.
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        enum Section {
            None,
            Prefix,
            Suffix,
        }
        let mut section = Section::None;
        let (mut prefixes, mut suffixes) = (Vec::new(), Vec::new());
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match line {
                "[prefix]" => section = Section::Prefix,
                "[suffix]" => section = Section::Suffix,
                _ => match section {
                    Section::Prefix => prefixes.push(line.to_string()),
                    Section::Suffix => suffixes.push(line.to_string()),
                    Section::None => {
                        return Err(Error::parse(idx + 1, "affix outside a [prefix]/[suffix] section"))
                    }
                },
            }
        }
        Ok(Self::new(prefixes, suffixes))
    }

    pub fn write<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "[prefix]")?;
        for p in &self.prefixes {
            writeln!(w, "{p}")?;
        }
        writeln!(w, "[suffix]")?;
        for s in &self.suffixes {
            writeln!(w, "{s}")?;
        }
        Ok(())
    }
}

/// Light affix-stripping stemmer for Arabic-script tokens.
#[derive(Clone, Debug)]
pub struct Stemmer {
    table: AffixTable,
    max_prefixes: usize,
    max_suffixes: usize,
    min_stem: usize,
}

impl Default for Stemmer {
    fn default() -> Self {
        Self::new(AffixTable::stemmer_default())
    }
}

impl Stemmer {
    pub fn new(table: AffixTable) -> Self {
        Self {
            table,
            max_prefixes: 2,
            max_suffixes: 2,
            min_stem: 2,
        }
    }

    pub fn table(&self) -> &AffixTable {
        &self.table
    }

    /// Strips prefixes then suffixes, longest match first, never leaving fewer
    /// than two letters. Prefix stripping stops after the definite article. Non-Arabic tokens are returned unchanged.
    pub fn stem<'a>(&self, token: &'a str) -> &'a str {
        if !matches!(detect_script(token), Ok(Script::Arabic)) {
            return token;
        }
        let mut rest = token;
        for _ in 0..self.max_prefixes {
            match self.strip_one(rest, &self.table.prefixes, true) {
                Some(r) => {
                    let stripped = &rest[..rest.len() - r.len()];
                    rest = r;
                    // the article is the innermost proclitic
                    if stripped.ends_with("ال") || stripped.ends_with("لل") {
                        break;
                    }
                }
                None => break,
            }
        }
        for _ in 0..self.max_suffixes {
            match self.strip_one(rest, &self.table.suffixes, false) {
                Some(r) => rest = r,
                None => break,
            }
        }
        rest
    }

    fn strip_one<'a>(&self, s: &'a str, affixes: &[String], prefix: bool) -> Option<&'a str> {
        let len = s.chars().count();
        affixes.iter().find_map(|a| {
            let stripped = if prefix { s.strip_prefix(a.as_str()) } else { s.strip_suffix(a.as_str()) }?;
            (len - a.chars().count() >= self.min_stem).then_some(stripped)
        })
    }
}

/// [`Stemmer::stem`] with the default affix table.
pub fn light_stem(token: &str) -> String {
    thread_local! {
        static STEMMER: Stemmer = Stemmer::default();
    }
    STEMMER.with(|s| s.stem(token).to_string())
}
