//! Segmentation records: `token ||| LABEL:len [LABEL:len ...]`, several records
//! per line, one line per sentence.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::io::{BufRead, Write};
use std::str::FromStr;

use super::Scheme;
use crate::error::{Error, Result};

pub const SEPARATOR: &str = "|||";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LidLabel {
    Ar,
    En,
    Lang3,
    Ambig,
    NeAr,
    NeEn,
    /// Language-neutral named entity, only produced by the coarse transform.
    Ne,
    Other,
}

impl LidLabel {
    /// Fine-grained default label set, in the order used for tie-breaking.
    pub const DEFAULT: [LidLabel; 7] = [
        LidLabel::Ar,
        LidLabel::En,
        LidLabel::Lang3,
        LidLabel::Ambig,
        LidLabel::NeAr,
        LidLabel::NeEn,
        LidLabel::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LidLabel::Ar => "AR",
            LidLabel::En => "EN",
            LidLabel::Lang3 => "LANG3",
            LidLabel::Ambig => "AMBIG",
            LidLabel::NeAr => "NE.AR",
            LidLabel::NeEn => "NE.EN",
            LidLabel::Ne => "NE",
            LidLabel::Other => "OTHER",
        }
    }

    pub fn coarse(self) -> Self {
        match self {
            LidLabel::NeAr | LidLabel::NeEn => LidLabel::Ne,
            l => l,
        }
    }
}

impl fmt::Display for LidLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LidLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "AR" => LidLabel::Ar,
            "EN" => LidLabel::En,
            "LANG3" => LidLabel::Lang3,
            "AMBIG" => LidLabel::Ambig,
            "NE.AR" => LidLabel::NeAr,
            "NE.EN" => LidLabel::NeEn,
            "NE" => LidLabel::Ne,
            "OTHER" => LidLabel::Other,
            _ => return Err(Error::InvalidInput(format!("unknown label `{s}`"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Segment {
    pub label: LidLabel,
    pub len: usize,
}

impl Segment {
    pub fn new(label: LidLabel, len: usize) -> Self {
        Self { label, len }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SegLidRecord {
    token: String,
    segments: Vec<Segment>,
}

impl SegLidRecord {
    /// Builds a record, checking that segment lengths are positive and cover the token.
    pub fn new(token: impl Into<String>, segments: Vec<Segment>) -> Result<Self> {
        let token = token.into();
        let n = token.chars().count();
        if n == 0 {
            return Err(Error::Segmentation {
                token,
                message: "empty token".into(),
            });
        }
        if segments.is_empty() || segments.iter().any(|s| s.len == 0) {
            return Err(Error::Segmentation {
                token,
                message: "segments must be non-empty with positive lengths".into(),
            });
        }
        let total: usize = segments.iter().map(|s| s.len).sum();
        if total != n {
            return Err(Error::Segmentation {
                token,
                message: format!("segment lengths sum to {total}, token has {n} characters"),
            });
        }
        Ok(Self { token, segments })
    }

    /// One segment spanning the whole token.
    pub fn whole(token: impl Into<String>, label: LidLabel) -> Result<Self> {
        let token = token.into();
        let n = token.chars().count();
        Self::new(token, vec![Segment::new(label, n)])
    }

    pub fn token(&self) -> &str {
        &self.token
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn char_len(&self) -> usize {
        self.segments.iter().map(|s| s.len).sum()
    }

    pub fn is_mixed(&self) -> bool {
        self.segments.len() > 1
    }

    /// Hyphen-joined segment labels, e.g. `AR-EN`.
    pub fn pattern(&self) -> String {
        let labels: Vec<&str> = self.segments.iter().map(|s| s.label.as_str()).collect();
        labels.join("-")
    }

    /// Segment label repeated over each character.
    pub fn expand_char_tags(&self) -> Vec<LidLabel> {
        self.segments
            .iter()
            .flat_map(|s| std::iter::repeat_n(s.label, s.len))
            .collect()
    }

    /// Half-open character spans `(start, end)` of the segments.
    pub fn spans(&self) -> Vec<(usize, usize)> {
        let mut start = 0;
        self.segments
            .iter()
            .map(|s| {
                let span = (start, start + s.len);
                start += s.len;
                span
            })
            .collect()
    }

    pub fn map_labels(&self, f: impl Fn(LidLabel) -> LidLabel) -> Self {
        Self {
            token: self.token.clone(),
            segments: self
                .segments
                .iter()
                .map(|s| Segment::new(f(s.label), s.len))
                .collect(),
        }
    }
}

impl fmt::Display for SegLidRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {SEPARATOR}", self.token)?;
        if let [only] = self.segments.as_slice() {
            return write!(f, " {}", only.label);
        }
        for s in &self.segments {
            write!(f, " {}:{}", s.label, s.len)?;
        }
        Ok(())
    }
}

impl Scheme for Vec<SegLidRecord> {
    fn scheme(items: &[Self]) -> Result<Option<&'static str>> {
        let labels: BTreeSet<LidLabel> = items
            .iter()
            .flatten()
            .flat_map(|r| r.segments.iter().map(|s| s.label))
            .collect();
        let fine = labels.contains(&LidLabel::NeAr) || labels.contains(&LidLabel::NeEn);
        let coarse = labels.contains(&LidLabel::Ne);
        Ok(match (fine, coarse) {
            (true, true) => {
                return Err(Error::InvalidInput(
                    "corpus mixes language-specific and coarse NE labels".into(),
                ))
            }
            (true, false) => Some("fine-ne"),
            (false, true) => Some("coarse-ne"),
            (false, false) => None,
        })
    }
}

fn parse_segment_spec(token: &str, item: &str, lineno: usize) -> Result<(LidLabel, Option<usize>)> {
    let (label, len) = match item.rsplit_once(':') {
        Some((l, n)) => {
            let n: usize = n.parse().map_err(|_| {
                Error::parse(lineno, format!("token `{token}`: bad segment length in `{item}`"))
            })?;
            (l, Some(n))
        }
        None => (item, None),
    };
    let label = label
        .parse()
        .map_err(|e: Error| Error::parse(lineno, format!("token `{token}`: {e}")))?;
    Ok((label, len))
}

fn parse_line(line: &str, lineno: usize) -> Result<Vec<SegLidRecord>> {
    let items: Vec<&str> = line.split_whitespace().collect();
    let mut records = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let token = items[i];
        if token == SEPARATOR || items.get(i + 1) != Some(&SEPARATOR) {
            return Err(Error::parse(lineno, format!("expected `token {SEPARATOR} LABEL` at `{token}`")));
        }
        let mut j = i + 2;
        let mut specs = Vec::new();
        while j < items.len() && items.get(j + 1) != Some(&SEPARATOR) {
            specs.push(parse_segment_spec(token, items[j], lineno)?);
            j += 1;
        }
        let n = token.chars().count();
        let segments = match specs.as_slice() {
            [] => return Err(Error::parse(lineno, format!("token `{token}` has no label"))),
            [(label, None)] => vec![Segment::new(*label, n)],
            _ => specs
                .iter()
                .map(|(label, len)| {
                    len.map(|l| Segment::new(*label, l)).ok_or_else(|| {
                        Error::parse(lineno, format!("token `{token}`: multi-segment labels need lengths"))
                    })
                })
                .collect::<Result<Vec<_>>>()?,
        };
        records.push(SegLidRecord::new(token, segments).map_err(|e| Error::parse(lineno, e.to_string()))?);
        i = j;
    }
    Ok(records)
}

/// Reads one sentence per non-blank line.
pub fn read_seglid<R: BufRead>(reader: R) -> Result<Vec<Vec<SegLidRecord>>> {
    let mut corpus = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        corpus.push(parse_line(&line, idx + 1)?);
    }
    Ok(corpus)
}

pub fn write_seglid<W: Write>(mut w: W, corpus: &[Vec<SegLidRecord>]) -> Result<()> {
    let mut line = String::new();
    for sentence in corpus {
        line.clear();
        for (i, record) in sentence.iter().enumerate() {
            if i > 0 {
                line.push(' ');
            }
            write!(line, "{record}").expect("writing to a String");
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Token counts per whole-token tag (`MIXED` for multi-segment records).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StatsReport {
    pub tag_counts: BTreeMap<String, usize>,
    pub unique_counts: BTreeMap<String, usize>,
    pub patterns: BTreeMap<String, usize>,
    pub sentences: usize,
    pub tokens: usize,
    pub mean_tokens_per_sentence: f64,
}

pub const MIXED: &str = "MIXED";

impl StatsReport {
    pub fn mixed(&self) -> usize {
        self.tag_counts.get(MIXED).copied().unwrap_or(0)
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<12} {:>8} {:>8}", "tag", "tokens", "unique");
        for (tag, n) in &self.tag_counts {
            let u = self.unique_counts.get(tag).copied().unwrap_or(0);
            let _ = writeln!(out, "{tag:<12} {n:>8} {u:>8}");
        }
        let _ = writeln!(out, "{:<12} {:>8}", "total", self.tokens);
        if !self.patterns.is_empty() {
            let _ = writeln!(out, "\n{:<21} {:>8}", "mixed pattern", "tokens");
            for (p, n) in &self.patterns {
                let _ = writeln!(out, "{p:<21} {n:>8}");
            }
        }
        let _ = writeln!(out, "\nsentences {}", self.sentences);
        let _ = writeln!(out, "tokens/sentence {:.4}", self.mean_tokens_per_sentence);
        out
    }

    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        for (tag, n) in &self.tag_counts {
            let _ = writeln!(out, "count.{tag}\t{n}");
        }
        for (tag, n) in &self.unique_counts {
            let _ = writeln!(out, "unique.{tag}\t{n}");
        }
        for (p, n) in &self.patterns {
            let _ = writeln!(out, "pattern.{p}\t{n}");
        }
        let _ = writeln!(out, "sentences\t{}", self.sentences);
        let _ = writeln!(out, "tokens\t{}", self.tokens);
        let _ = writeln!(out, "tokens_per_sentence\t{}", self.mean_tokens_per_sentence);
        out
    }
}

pub fn corpus_stats(corpus: &[Vec<SegLidRecord>]) -> StatsReport {
    let mut report = StatsReport {
        sentences: corpus.len(),
        ..Default::default()
    };
    let mut uniques: BTreeMap<String, BTreeSet<&str>> = BTreeMap::new();
    for record in corpus.iter().flatten() {
        let tag = if record.is_mixed() {
            *report.patterns.entry(record.pattern()).or_default() += 1;
            MIXED.to_string()
        } else {
            record.segments[0].label.to_string()
        };
        uniques.entry(tag.clone()).or_default().insert(record.token());
        *report.tag_counts.entry(tag).or_default() += 1;
        report.tokens += 1;
    }
    report.unique_counts = uniques.into_iter().map(|(k, v)| (k, v.len())).collect();
    if report.sentences > 0 {
        report.mean_tokens_per_sentence = report.tokens as f64 / report.sentences as f64;
    }
    report
}
