//! Label-independent segment features; the model conjoins each with the
//! segment label through its weight matrix.

use crate::textproc::{detect_script, AffixTable};

/// Neighbouring tokens, used only when token-context features are enabled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SegContext<'a> {
    pub prev: Option<&'a str>,
    pub next: Option<&'a str>,
}

const MAX_SURFACE: usize = 8;
const BOUNDARY: char = '▁';

fn length_bucket(len: usize) -> &'static str {
    match len {
        1 => "1",
        2 => "2",
        3 => "3",
        4 => "4",
        5 | 6 => "5-6",
        7..=10 => "7-10",
        _ => "11+",
    }
}

/// Features of the segment `chars[i..j)`. With `context` set, the neighbouring
/// tokens are visible through a boundary sentinel.
pub fn segment_features(
    chars: &[char],
    i: usize,
    j: usize,
    affixes: &AffixTable,
    context: Option<SegContext<'_>>,
) -> Vec<String> {
    let n = chars.len();
    let seg: String = chars[i..j].iter().collect();
    let len = j - i;
    let mut out = vec!["bias".to_string()];
    if len <= MAX_SURFACE {
        out.push(format!("seg={seg}"));
    }
    for k in 1..=3 {
        for w in chars[i..j].windows(k) {
            out.push(format!("g{k}={}", w.iter().collect::<String>()));
        }
    }
    out.push(format!("len={}", length_bucket(len)));
    if let Ok(script) = detect_script(&seg) {
        out.push(format!("script={script}"));
    }
    let pos = match (i == 0, j == n) {
        (true, true) => "whole",
        (true, false) => "prefix",
        (false, true) => "suffix",
        (false, false) => "inner",
    };
    out.push(format!("pos={pos}"));
    if i == 0 && j < n && affixes.is_prefix(&seg) {
        out.push("affix_hit=prefix".into());
    }
    if j == n && i > 0 && affixes.is_suffix(&seg) {
        out.push("affix_hit=suffix".into());
    }
    out.push(format!("lc={}", if i == 0 { '^' } else { chars[i - 1] }));
    out.push(format!("rc={}", chars.get(j).copied().unwrap_or('$')));
    if let Some(ctx) = context {
        if i == 0 {
            let left = ctx.prev.and_then(|p| p.chars().last()).unwrap_or('^');
            out.push(format!("ctx_l={left}{BOUNDARY}{}", chars[0]));
            out.push(format!("ctx_prev={}", ctx.prev.unwrap_or("<BOS>")));
        }
        if j == n {
            let right = ctx.next.and_then(|p| p.chars().next()).unwrap_or('$');
            out.push(format!("ctx_r={}{BOUNDARY}{right}", chars[n - 1]));
            out.push(format!("ctx_next={}", ctx.next.unwrap_or("<EOS>")));
        }
    }
    let mut seen = std::collections::HashSet::with_capacity(out.len());
    out.retain(|f| seen.insert(f.clone()));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn feats(token: &str, i: usize, j: usize) -> Vec<String> {
        let chars: Vec<char> = token.chars().collect();
        segment_features(&chars, i, j, &AffixTable::seglid_default(), None)
    }

    fn has(f: &[String], s: &str) -> bool {
        f.iter().any(|x| x == s)
    }

    #[test]
    fn prefix_el() {
        let f = feats("elgame", 0, 2);
        for s in ["seg=el", "affix_hit=prefix", "script=latin", "pos=prefix", "len=2", "g2=el", "rc=g"] {
            assert!(has(&f, s), "{s} missing from {f:?}");
        }
    }

    #[test]
    fn suffix_at() {
        let f = feats("gameات", 4, 6);
        assert!(has(&f, "affix_hit=suffix"));
        assert!(has(&f, "pos=suffix"));
        assert!(has(&f, "script=arabic"));
        // the same string at the start is not a suffix hit
        assert!(!has(&feats("اتgame", 0, 2), "affix_hit=suffix"));
    }

    #[test]
    fn whole_single_char() {
        let f = feats("x", 0, 1);
        assert!(has(&f, "pos=whole"));
        assert!(has(&f, "len=1"));
        assert!(!f.iter().any(|x| x.starts_with("affix_hit")));
    }

    #[test]
    fn long_segments_drop_surface() {
        let f = feats("internationalization", 0, 20);
        assert!(!f.iter().any(|x| x.starts_with("seg=")));
        assert!(has(&f, "len=11+"));
    }

    #[test]
    fn context_features_only_at_edges() {
        let chars: Vec<char> = "game".chars().collect();
        let ctx = SegContext {
            prev: Some("el"),
            next: None,
        };
        let f = segment_features(&chars, 0, 4, &AffixTable::seglid_default(), Some(ctx));
        assert!(has(&f, "ctx_l=l▁g"));
        assert!(has(&f, "ctx_prev=el"));
        assert!(has(&f, "ctx_next=<EOS>"));
        let f = segment_features(&chars, 1, 3, &AffixTable::seglid_default(), Some(ctx));
        assert!(!f.iter().any(|x| x.starts_with("ctx_")));
    }
}
