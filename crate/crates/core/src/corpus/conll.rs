//! CoNLL-style IOB corpora: one `surface [pos] tag` line per token, blank line
//! between sentences.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use super::Scheme;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EntityType {
    Per,
    Loc,
    Org,
    Misc,
}

impl EntityType {
    pub const ALL: [EntityType; 4] = [EntityType::Per, EntityType::Loc, EntityType::Org, EntityType::Misc];

    pub fn as_str(self) -> &'static str {
        match self {
            EntityType::Per => "PER",
            EntityType::Loc => "LOC",
            EntityType::Org => "ORG",
            EntityType::Misc => "MISC",
        }
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntityType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "PER" => Ok(EntityType::Per),
            "LOC" => Ok(EntityType::Loc),
            "ORG" => Ok(EntityType::Org),
            "MISC" => Ok(EntityType::Misc),
            _ => Err(Error::InvalidInput(format!("unknown entity type `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tag {
    O,
    B(EntityType),
    I(EntityType),
}

impl Tag {
    pub fn entity_type(self) -> Option<EntityType> {
        match self {
            Tag::O => None,
            Tag::B(t) | Tag::I(t) => Some(t),
        }
    }

    pub fn is_outside(self) -> bool {
        self == Tag::O
    }

    /// Every tag of the scheme, `O` first.
    pub fn all() -> Vec<Tag> {
        let mut tags = vec![Tag::O];
        for t in EntityType::ALL {
            tags.push(Tag::B(t));
            tags.push(Tag::I(t));
        }
        tags
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::O => f.write_str("O"),
            Tag::B(t) => write!(f, "B-{t}"),
            Tag::I(t) => write!(f, "I-{t}"),
        }
    }
}

impl FromStr for Tag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "O" {
            return Ok(Tag::O);
        }
        match s.split_once('-') {
            Some(("B", t)) => Ok(Tag::B(t.parse()?)),
            Some(("I", t)) => Ok(Tag::I(t.parse()?)),
            _ => Err(Error::InvalidInput(format!("unknown tag `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub pos: Option<String>,
    pub tag: Tag,
}

impl Token {
    pub fn new(surface: impl Into<String>, tag: Tag) -> Self {
        Self {
            surface: surface.into(),
            pos: None,
            tag,
        }
    }

    pub fn with_pos(surface: impl Into<String>, pos: impl Into<String>, tag: Tag) -> Self {
        Self {
            surface: surface.into(),
            pos: Some(pos.into()),
            tag,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LabeledSentence {
    pub tokens: Vec<Token>,
}

impl LabeledSentence {
    pub fn new(tokens: Vec<Token>) -> Self {
        Self { tokens }
    }

    /// All-`O` sentence from bare surfaces.
    pub fn from_surfaces<I, S>(surfaces: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::new(surfaces.into_iter().map(|s| Token::new(s, Tag::O)).collect())
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn surfaces(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.surface.as_str())
    }

    pub fn tags(&self) -> Vec<Tag> {
        self.tokens.iter().map(|t| t.tag).collect()
    }

    pub fn has_pos(&self) -> bool {
        !self.tokens.is_empty() && self.tokens.iter().all(|t| t.pos.is_some())
    }

    pub fn with_tags(&self, tags: &[Tag]) -> Self {
        let mut out = self.clone();
        for (tok, tag) in out.tokens.iter_mut().zip(tags) {
            tok.tag = *tag;
        }
        out
    }
}

impl Scheme for LabeledSentence {
    fn scheme(items: &[Self]) -> Result<Option<&'static str>> {
        let mut with = false;
        let mut without = false;
        for tok in items.iter().flat_map(|s| &s.tokens) {
            if tok.pos.is_some() {
                with = true;
            } else {
                without = true;
            }
        }
        Ok(match (with, without) {
            (true, false) => Some("surface-pos-tag"),
            (false, true) => Some("surface-tag"),
            (false, false) => None,
            (true, true) => Some("mixed-columns"),
        })
    }
}

/// Positions `(token index, tag)` where an `I-X` follows `O`, the sentence start,
/// or a tag of a different type.
fn iob_violations(tags: &[Tag]) -> Vec<usize> {
    let mut bad = Vec::new();
    let mut prev: Option<Tag> = None;
    for (i, &tag) in tags.iter().enumerate() {
        if let Tag::I(t) = tag {
            if prev.and_then(Tag::entity_type) != Some(t) {
                bad.push(i);
            }
        }
        prev = Some(tag);
    }
    bad
}

pub fn is_well_formed(tags: &[Tag]) -> bool {
    iob_violations(tags).is_empty()
}

/// Checks IOB well-formedness across a corpus; the error lists
/// `(sentence, token)` positions.
pub fn validate_iob(corpus: &[LabeledSentence]) -> Result<()> {
    let positions: Vec<(usize, usize)> = corpus
        .iter()
        .enumerate()
        .flat_map(|(s, sent)| iob_violations(&sent.tags()).into_iter().map(move |t| (s, t)))
        .collect();
    if positions.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidIob { positions })
    }
}

/// Promotes orphan `I-X` tags to `B-X`.
pub fn repair_iob(tags: &mut [Tag]) {
    for i in iob_violations(tags) {
        if let Tag::I(t) = tags[i] {
            tags[i] = Tag::B(t);
        }
    }
}

/// Parses without IOB validation (prediction files from a tagger may contain
/// orphan `I-X` tags).
pub fn read_conll_lenient<R: BufRead>(reader: R) -> Result<Vec<LabeledSentence>> {
    let mut corpus = Vec::new();
    let mut current = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            if !current.is_empty() {
                corpus.push(LabeledSentence::new(std::mem::take(&mut current)));
            }
            continue;
        }
        if trimmed.starts_with("-DOCSTART-") {
            continue;
        }
        let cols: Vec<&str> = trimmed.split([' ', '\t']).filter(|c| !c.is_empty()).collect();
        let parse_tag = |s: &str| s.parse::<Tag>().map_err(|e| Error::parse(lineno, e.to_string()));
        let token = match cols.as_slice() {
            [surface, tag] => Token::new(*surface, parse_tag(tag)?),
            [surface, pos, tag] => Token::with_pos(*surface, *pos, parse_tag(tag)?),
            _ => {
                return Err(Error::parse(
                    lineno,
                    format!("expected 2 or 3 columns, found {}", cols.len()),
                ))
            }
        };
        current.push(token);
    }
    if !current.is_empty() {
        corpus.push(LabeledSentence::new(current));
    }
    Ok(corpus)
}

pub fn read_conll<R: BufRead>(reader: R) -> Result<Vec<LabeledSentence>> {
    let corpus = read_conll_lenient(reader)?;
    validate_iob(&corpus)?;
    Ok(corpus)
}

pub fn write_conll<W: Write>(mut w: W, corpus: &[LabeledSentence]) -> Result<()> {
    for (i, sent) in corpus.iter().enumerate() {
        if i > 0 {
            writeln!(w)?;
        }
        for tok in &sent.tokens {
            match &tok.pos {
                Some(pos) => writeln!(w, "{} {} {}", tok.surface, pos, tok.tag)?,
                None => writeln!(w, "{} {}", tok.surface, tok.tag)?,
            }
        }
    }
    Ok(())
}
