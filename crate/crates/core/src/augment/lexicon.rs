//! Synonym lexicon: `[lang=ar]` / `[lang=en]` sections of `word<TAB>syn1,syn2`.

use std::collections::HashMap;
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::textproc::{detect_script, light_stem, strip_diacritics, Script};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Lang {
    Ar,
    En,
}

impl Lang {
    /// Lexicon language of a token, from its script.
    pub fn of(token: &str) -> Option<Lang> {
        match detect_script(token) {
            Ok(Script::Arabic) => Some(Lang::Ar),
            Ok(Script::Latin) => Some(Lang::En),
            _ => None,
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            Lang::Ar => "ar",
            Lang::En => "en",
        }
    }
}

impl fmt::Display for Lang {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Lang {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ar" => Ok(Lang::Ar),
            "en" => Ok(Lang::En),
            _ => Err(Error::InvalidInput(format!("unknown lexicon language `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SynonymLexicon {
    entries: HashMap<(Lang, String), Vec<String>>,
}

impl SynonymLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds synonyms for `word`, merging with any existing entry. Diacritics are
    /// removed, duplicates and the word itself dropped.
    pub fn insert<I, S>(&mut self, lang: Lang, word: &str, synonyms: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let key = strip_diacritics(word.trim());
        if key.is_empty() {
            return;
        }
        let list = self.entries.entry((lang, key.clone())).or_default();
        for s in synonyms {
            let s = strip_diacritics(s.as_ref().trim());
            if !s.is_empty() && s != key && !list.contains(&s) {
                list.push(s);
            }
        }
        if list.is_empty() {
            self.entries.remove(&(lang, key));
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Synonyms of `word`: exact match after removing diacritics, then its stem.
    pub fn lookup(&self, lang: Lang, word: &str) -> Option<&[String]> {
        let plain = strip_diacritics(word);
        self.entries
            .get(&(lang, plain.clone()))
            .or_else(|| self.entries.get(&(lang, light_stem(&plain))))
            .map(Vec::as_slice)
    }

    /// Synonyms in the token's own language.
    pub fn synonyms(&self, word: &str) -> Option<&[String]> {
        Lang::of(word).and_then(|l| self.lookup(l, word))
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut lex = Self::new();
        let mut lang = None;
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim_end_matches(['\r', '\n']);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(code) = line.trim().strip_prefix("[lang=").and_then(|s| s.strip_suffix(']')) {
                lang = Some(code.parse().map_err(|e: Error| Error::parse(i + 1, e.to_string()))?);
                continue;
            }
            let lang = lang.ok_or_else(|| Error::parse(i + 1, "entry before any [lang=..] section"))?;
            let (word, syns) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(i + 1, "expected `word<TAB>synonyms`"))?;
            lex.insert(lang, word, syns.split(','));
        }
        Ok(lex)
    }
}
