//! Evaluation: confusion counts, token-level and CoNLL entity-level scores, and
//! the segmentation/language-identification metric suite.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::{Display, Write as _};

use crate::corpus::{EntityType, LabeledSentence, LidLabel, SegLidRecord, Tag};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Counts {
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        f1(self.precision(), self.recall())
    }

    fn add(&mut self, other: &Counts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.tn += other.tn;
    }
}

/// `num / den`, with 0/0 defined as 0.
pub fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Harmonic mean; 0 when both inputs are 0.
pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfusionMatrix {
    pub classes: BTreeMap<String, Counts>,
    pub total: usize,
}

/// One-vs-rest counts for every class seen in either sequence.
pub fn confusion<L: Display + PartialEq>(gold: &[L], pred: &[L]) -> Result<ConfusionMatrix> {
    check_len(gold.len(), pred.len())?;
    let names: Vec<(String, String)> = gold
        .iter()
        .zip(pred)
        .map(|(g, p)| (g.to_string(), p.to_string()))
        .collect();
    let classes: BTreeSet<&String> = names.iter().flat_map(|(g, p)| [g, p]).collect();
    let mut out = ConfusionMatrix {
        classes: BTreeMap::new(),
        total: gold.len(),
    };
    for class in classes {
        let mut c = Counts::default();
        for (g, p) in &names {
            match (g == class, p == class) {
                (true, true) => c.tp += 1,
                (false, true) => c.fp += 1,
                (true, false) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        out.classes.insert(class.clone(), c);
    }
    Ok(out)
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, actual })
    }
}

/// Micro-averaged scores plus a per-class breakdown.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub counts: Counts,
    pub per_class: BTreeMap<String, Counts>,
}

impl MetricsReport {
    fn from_counts(accuracy: f64, per_class: BTreeMap<String, Counts>) -> Self {
        let mut counts = Counts::default();
        per_class.values().for_each(|c| counts.add(c));
        Self {
            accuracy,
            precision: counts.precision(),
            recall: counts.recall(),
            f1: counts.f1(),
            counts,
            per_class,
        }
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<10} {:>6} {:>6} {:>6} {:>9} {:>9} {:>9}",
            "class", "tp", "fp", "fn", "precision", "recall", "f1"
        );
        let mut row = |name: &str, c: &Counts| {
            let _ = writeln!(
                out,
                "{:<10} {:>6} {:>6} {:>6} {:>9.4} {:>9.4} {:>9.4}",
                name,
                c.tp,
                c.fp,
                c.fn_,
                c.precision(),
                c.recall(),
                c.f1()
            );
        };
        for (name, c) in &self.per_class {
            row(name, c);
        }
        row("overall", &self.counts);
        let _ = writeln!(out, "accuracy {:.4}", self.accuracy);
        out
    }

    pub fn to_kv(&self, prefix: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{prefix}accuracy\t{}", self.accuracy);
        let _ = writeln!(out, "{prefix}precision\t{}", self.precision);
        let _ = writeln!(out, "{prefix}recall\t{}", self.recall);
        let _ = writeln!(out, "{prefix}f1\t{}", self.f1);
        for (name, c) in &self.per_class {
            let _ = writeln!(out, "{prefix}{name}.precision\t{}", c.precision());
            let _ = writeln!(out, "{prefix}{name}.recall\t{}", c.recall());
            let _ = writeln!(out, "{prefix}{name}.f1\t{}", c.f1());
        }
        out
    }
}

/// Token-level scores: accuracy over all positions, micro P/R/F1 over non-`O` tags.
pub fn token_metrics(gold: &[Tag], pred: &[Tag]) -> Result<MetricsReport> {
    check_len(gold.len(), pred.len())?;
    let mut per_class: BTreeMap<String, Counts> = BTreeMap::new();
    let mut correct = 0;
    for (&g, &p) in gold.iter().zip(pred) {
        if g == p {
            correct += 1;
            if !g.is_outside() {
                per_class.entry(g.to_string()).or_default().tp += 1;
            }
            continue;
        }
        if !p.is_outside() {
            per_class.entry(p.to_string()).or_default().fp += 1;
        }
        if !g.is_outside() {
            per_class.entry(g.to_string()).or_default().fn_ += 1;
        }
    }
    Ok(MetricsReport::from_counts(ratio(correct, gold.len()), per_class))
}

/// Maximal entity spans `(start, end, type)`; an orphan `I-X` opens a new span.
pub fn entity_spans(tags: &[Tag]) -> Vec<(usize, usize, EntityType)> {
    let mut spans = Vec::new();
    let mut open: Option<(usize, EntityType)> = None;
    for (i, &tag) in tags.iter().enumerate() {
        let continues = matches!((tag, open), (Tag::I(t), Some((_, o))) if t == o);
        if continues {
            continue;
        }
        if let Some((start, t)) = open.take() {
            spans.push((start, i, t));
        }
        if let Some(t) = tag.entity_type() {
            open = Some((i, t));
        }
    }
    if let Some((start, t)) = open {
        spans.push((start, tags.len(), t));
    }
    spans
}

/// Exact-match entity scores: a predicted entity counts only when its boundaries
/// and type both equal a gold entity.
pub fn entity_f1_conll(gold: &[LabeledSentence], pred: &[Vec<Tag>]) -> Result<MetricsReport> {
    check_len(gold.len(), pred.len())?;
    let mut per_class: BTreeMap<String, Counts> = EntityType::ALL
        .iter()
        .map(|t| (t.to_string(), Counts::default()))
        .collect();
    let (mut correct, mut total) = (0, 0);
    for (i, (g, p)) in gold.iter().zip(pred).enumerate() {
        let gtags = g.tags();
        if gtags.len() != p.len() {
            return Err(Error::InvalidInput(format!(
                "sentence {i}: {} gold tokens vs {} predicted tags",
                gtags.len(),
                p.len()
            )));
        }
        correct += gtags.iter().zip(p).filter(|(a, b)| a == b).count();
        total += gtags.len();
        let gold_spans: HashSet<_> = entity_spans(&gtags).into_iter().collect();
        let pred_spans: HashSet<_> = entity_spans(p).into_iter().collect();
        for span in &pred_spans {
            let c = per_class.get_mut(span.2.as_str()).expect("all types present");
            if gold_spans.contains(span) {
                c.tp += 1;
            } else {
                c.fp += 1;
            }
        }
        for span in gold_spans.difference(&pred_spans) {
            per_class.get_mut(span.2.as_str()).expect("all types present").fn_ += 1;
        }
    }
    per_class.retain(|_, c| c.tp + c.fp + c.fn_ > 0);
    Ok(MetricsReport::from_counts(ratio(correct, total), per_class))
}

/// Language-identification scores over aligned token streams.
///
/// A token is tagged correctly only when its full labeled segmentation (labels
/// and lengths) equals gold. `tag_f1` is micro F1 over tokens with `OTHER` as the
/// negative class; `accuracy` is exact-record accuracy. The `mixed_*` fields are
/// restricted to tokens whose gold record has at least two segments and are
/// `None` when there are none.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LidReport {
    pub tokens: usize,
    pub tag_f1: f64,
    pub accuracy: f64,
    pub seg_f1: f64,
    pub char_acc: f64,
    pub mixed_tokens: usize,
    pub mixed_tag_f1: Option<f64>,
    pub mixed_seg_f1: Option<f64>,
    pub mixed_acc: Option<f64>,
    pub mixed_char_acc: Option<f64>,
}

#[derive(Default)]
struct LidCounts {
    tokens: usize,
    exact: usize,
    tag: Counts,
    seg: Counts,
    chars: usize,
    chars_correct: usize,
}

impl LidCounts {
    fn add(&mut self, gold: &SegLidRecord, pred: &SegLidRecord) {
        self.tokens += 1;
        let exact = gold.segments() == pred.segments();
        if exact {
            self.exact += 1;
        }
        let negative = |r: &SegLidRecord| !r.is_mixed() && r.segments()[0].label == LidLabel::Other;
        if !negative(pred) {
            if exact {
                self.tag.tp += 1;
            } else {
                self.tag.fp += 1;
            }
        }
        if !negative(gold) && !exact {
            self.tag.fn_ += 1;
        }
        let gs: HashSet<_> = gold.spans().into_iter().collect();
        let ps = pred.spans();
        let hits = ps.iter().filter(|s| gs.contains(s)).count();
        self.seg.tp += hits;
        self.seg.fp += ps.len() - hits;
        self.seg.fn_ += gs.len() - hits;
        let gc = gold.expand_char_tags();
        let pc = pred.expand_char_tags();
        self.chars += gc.len();
        self.chars_correct += gc.iter().zip(&pc).filter(|(a, b)| a == b).count();
    }
}

pub fn seg_metrics(gold: &[SegLidRecord], pred: &[SegLidRecord]) -> Result<LidReport> {
    check_len(gold.len(), pred.len())?;
    let mut all = LidCounts::default();
    let mut mixed = LidCounts::default();
    for (i, (g, p)) in gold.iter().zip(pred).enumerate() {
        if g.token() != p.token() {
            return Err(Error::InvalidInput(format!(
                "token {i}: gold `{}` vs predicted `{}`",
                g.token(),
                p.token()
            )));
        }
        all.add(g, p);
        if g.is_mixed() {
            mixed.add(g, p);
        }
    }
    let some = |v: f64| (mixed.tokens > 0).then_some(v);
    Ok(LidReport {
        tokens: all.tokens,
        tag_f1: all.tag.f1(),
        accuracy: ratio(all.exact, all.tokens),
        seg_f1: all.seg.f1(),
        char_acc: ratio(all.chars_correct, all.chars),
        mixed_tokens: mixed.tokens,
        mixed_tag_f1: some(mixed.tag.f1()),
        mixed_seg_f1: some(mixed.seg.f1()),
        mixed_acc: some(ratio(mixed.exact, mixed.tokens)),
        mixed_char_acc: some(ratio(mixed.chars_correct, mixed.chars)),
    })
}

impl LidReport {
    fn rows(&self) -> Vec<(&'static str, Option<f64>)> {
        vec![
            ("tag_f1", Some(self.tag_f1)),
            ("accuracy", Some(self.accuracy)),
            ("seg_f1", Some(self.seg_f1)),
            ("char_acc", Some(self.char_acc)),
            ("mixed_tag_f1", self.mixed_tag_f1),
            ("mixed_seg_f1", self.mixed_seg_f1),
            ("mixed_acc", self.mixed_acc),
            ("mixed_char_acc", self.mixed_char_acc),
        ]
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<16} {:>8}", "metric", "value");
        for (name, v) in self.rows() {
            match v {
                Some(v) => writeln!(out, "{name:<16} {v:>8.4}"),
                None => writeln!(out, "{name:<16} {:>8}", "-"),
            }
            .expect("writing to a String");
        }
        let _ = writeln!(out, "{:<16} {:>8}", "tokens", self.tokens);
        let _ = writeln!(out, "{:<16} {:>8}", "mixed_tokens", self.mixed_tokens);
        out
    }

    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        for (name, v) in self.rows() {
            if let Some(v) = v {
                let _ = writeln!(out, "{name}\t{v}");
            }
        }
        let _ = writeln!(out, "tokens\t{}", self.tokens);
        let _ = writeln!(out, "mixed_tokens\t{}", self.mixed_tokens);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Segment, Token};
    use proptest::prelude::*;

    const PER: EntityType = EntityType::Per;
    const LOC: EntityType = EntityType::Loc;

    #[test]
    fn perfect_token_prediction() {
        let g = [Tag::B(PER), Tag::I(PER), Tag::O];
        let r = token_metrics(&g, &g).unwrap();
        assert_eq!((r.accuracy, r.precision, r.recall, r.f1), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn all_outside_prediction() {
        let g = [Tag::B(PER), Tag::O];
        let r = token_metrics(&g, &[Tag::O, Tag::O]).unwrap();
        assert_eq!((r.precision, r.recall, r.f1), (0.0, 0.0, 0.0));
        assert_eq!(r.accuracy, 0.5);
    }

    #[test]
    fn tp3_fp1_fn2_fixture() {
        // 3 hits, one spurious entity tag, two missed
        let gold = [Tag::B(PER), Tag::I(PER), Tag::B(LOC), Tag::O, Tag::B(PER), Tag::B(LOC)];
        let pred = [Tag::B(PER), Tag::I(PER), Tag::B(LOC), Tag::B(LOC), Tag::O, Tag::O];
        let r = token_metrics(&gold, &pred).unwrap();
        assert_eq!((r.counts.tp, r.counts.fp, r.counts.fn_), (3, 1, 2));
        assert!((r.precision - 0.75).abs() < 1e-9);
        assert!((r.recall - 0.6).abs() < 1e-9);
        assert!((r.f1 - 2.0 * 0.75 * 0.6 / 1.35).abs() < 1e-9);
        assert!(token_metrics(&gold, &pred[..2]).is_err());
    }

    fn sent(tags: &[Tag]) -> LabeledSentence {
        LabeledSentence::new(tags.iter().enumerate().map(|(i, &t)| Token::new(format!("w{i}"), t)).collect())
    }

    #[test]
    fn entity_exact_match() {
        let g = [Tag::B(LOC), Tag::I(LOC), Tag::O];
        let r = entity_f1_conll(&[sent(&g)], &[g.to_vec()]).unwrap();
        assert_eq!(r.counts.tp, 1);
        assert_eq!(r.f1, 1.0);
    }

    #[test]
    fn entity_boundary_off_by_one() {
        let g = [Tag::B(LOC), Tag::I(LOC), Tag::O];
        let p = vec![Tag::B(LOC), Tag::O, Tag::O];
        let r = entity_f1_conll(&[sent(&g)], &[p]).unwrap();
        assert_eq!((r.counts.tp, r.counts.fp, r.counts.fn_), (0, 1, 1));
    }

    #[test]
    fn entity_two_thirds_fixture() {
        let g = [Tag::B(PER), Tag::O, Tag::B(PER), Tag::I(PER), Tag::O, Tag::B(LOC)];
        let p = vec![Tag::B(PER), Tag::O, Tag::B(PER), Tag::O, Tag::O, Tag::B(LOC)];
        let r = entity_f1_conll(&[sent(&g)], &[p]).unwrap();
        assert!((r.precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.recall - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.f1 - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(r.per_class["LOC"].tp, 1);
    }

    #[test]
    fn orphan_inside_opens_span() {
        assert_eq!(entity_spans(&[Tag::O, Tag::I(PER), Tag::I(PER)]), vec![(1, 3, PER)]);
        assert_eq!(entity_spans(&[Tag::B(PER), Tag::I(LOC)]), vec![(0, 1, PER), (1, 2, LOC)]);
        assert_eq!(entity_spans(&[Tag::B(PER), Tag::B(PER)]), vec![(0, 1, PER), (1, 2, PER)]);
    }

    #[test]
    fn confusion_fixtures() {
        let m = confusion(&["a", "b", "a"], &["a", "b", "a"]).unwrap();
        assert!(m.classes.values().all(|c| c.fp == 0 && c.fn_ == 0));
        // pos/neg binary task: two hits, one false positive, one false negative
        let m = confusion(&["pos", "pos", "neg", "pos"], &["pos", "pos", "pos", "neg"]).unwrap();
        assert_eq!(m.classes["pos"], Counts { tp: 2, fp: 1, fn_: 1, tn: 0 });
        let empty: [&str; 0] = [];
        let m = confusion(&empty, &empty).unwrap();
        assert!(m.classes.is_empty());
        assert_eq!(m.total, 0);
        assert!(confusion(&["a"], &[]).is_err());
    }

    fn rec(token: &str, segs: &[(LidLabel, usize)]) -> SegLidRecord {
        SegLidRecord::new(token, segs.iter().map(|&(l, n)| Segment::new(l, n)).collect()).unwrap()
    }

    #[test]
    fn laptopy_partial_credit() {
        let gold = rec("laptopy", &[(LidLabel::En, 6), (LidLabel::Ar, 1)]);
        let pred = rec("laptopy", &[(LidLabel::En, 5), (LidLabel::Ar, 2)]);
        let r = seg_metrics(&[gold], &[pred]).unwrap();
        assert_eq!(r.accuracy, 0.0);
        assert_eq!(r.tag_f1, 0.0);
        assert!((r.char_acc - 6.0 / 7.0).abs() < 1e-12);
        assert_eq!(r.mixed_char_acc, Some(r.char_acc));
    }

    #[test]
    fn identical_records_score_one() {
        let g = vec![
            rec("elgame", &[(LidLabel::Ar, 2), (LidLabel::En, 4)]),
            rec("مصر", &[(LidLabel::Ar, 3)]),
        ];
        let r = seg_metrics(&g, &g).unwrap();
        for v in [r.tag_f1, r.accuracy, r.seg_f1, r.char_acc] {
            assert_eq!(v, 1.0);
        }
        assert_eq!(r.mixed_acc, Some(1.0));
    }

    #[test]
    fn mixed_absent_without_gold_mixed_tokens() {
        let g = vec![rec("game", &[(LidLabel::En, 4)])];
        let r = seg_metrics(&g, &g).unwrap();
        assert_eq!(r.mixed_tokens, 0);
        assert_eq!(r.mixed_tag_f1, None);
        assert!(!r.to_kv().contains("mixed_acc"));
    }

    #[test]
    fn seg_f1_ignores_labels() {
        let g = vec![rec("elgame", &[(LidLabel::Ar, 2), (LidLabel::En, 4)])];
        let p = vec![rec("elgame", &[(LidLabel::En, 2), (LidLabel::Ar, 4)])];
        let r = seg_metrics(&g, &p).unwrap();
        assert_eq!(r.seg_f1, 1.0);
        assert_eq!(r.char_acc, 0.0);
    }

    #[test]
    fn surface_mismatch_is_error() {
        let g = vec![rec("game", &[(LidLabel::En, 4)])];
        let p = vec![rec("gama", &[(LidLabel::En, 4)])];
        assert!(seg_metrics(&g, &p).is_err());
    }

    proptest! {
        #[test]
        fn f1_between_precision_and_recall(tp in 1usize..50, fp in 0usize..50, fn_ in 0usize..50) {
            let c = Counts { tp, fp, fn_, tn: 0 };
            let (p, r, f) = (c.precision(), c.recall(), c.f1());
            prop_assert!(f <= p.max(r) + 1e-12);
            prop_assert!(f >= p.min(r) - 1e-12);
            if fp == fn_ {
                prop_assert!((f - p).abs() < 1e-12);
            }
        }

        #[test]
        fn char_acc_one_char_off(n in 2usize..12, at in 0usize..12) {
            let at = at % n;
            let token: String = "x".repeat(n);
            let gold = rec(&token, &[(LidLabel::En, n)]);
            let mut segs = vec![];
            if at > 0 { segs.push((LidLabel::En, at)); }
            segs.push((LidLabel::Ar, 1));
            if at + 1 < n { segs.push((LidLabel::En, n - at - 1)); }
            let pred = rec(&token, &segs);
            let r = seg_metrics(&[gold], &[pred]).unwrap();
            prop_assert!((r.char_acc - (n - 1) as f64 / n as f64).abs() < 1e-12);
        }

        #[test]
        fn entity_f1_sentence_order_invariant(seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let all = Tag::all();
            let mut gold = Vec::new();
            let mut pred = Vec::new();
            for _ in 0..6 {
                let n = rng.gen_range(1..6);
                let mut g: Vec<Tag> = (0..n).map(|_| all[rng.gen_range(0..all.len())]).collect();
                crate::corpus::repair_iob(&mut g);
                let p: Vec<Tag> = (0..n).map(|_| all[rng.gen_range(0..all.len())]).collect();
                gold.push(sent(&g));
                pred.push(p);
            }
            let a = entity_f1_conll(&gold, &pred).unwrap();
            gold.reverse();
            pred.reverse();
            let b = entity_f1_conll(&gold, &pred).unwrap();
            prop_assert_eq!(a.counts, b.counts);
        }
    }
}
