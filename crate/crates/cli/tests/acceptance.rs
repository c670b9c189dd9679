//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero
//! when any criterion fails.

mod common;

use std::collections::{BTreeMap, HashMap};
use std::panic::{self, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use cstk::augment::{
    back_translate, eda_augment, entity_counts, increase_factor, project_tags, DictionaryMtClient, EdaConfig, EdaOp,
    Lang, SynonymLexicon, TriggerTable, CHAIN_FR, TOTAL,
};
use cstk::corpus::{
    is_well_formed, read_conll, read_seglid, write_conll, write_seglid, EntityType, LabeledSentence, LidLabel,
    SegLidRecord, Segment, Tag, Token,
};
use cstk::crf::{
    extract_features, train_crf, viterbi, ChainScores, CrfModel, FeatureTemplates, ForwardBackward, SequenceTagger,
    TrainConfig,
};
use cstk::embeddings::{kmeans, EmbeddingTable, KMeansConfig};
use cstk::eval::{entity_f1_conll, seg_metrics, token_metrics};
use cstk::math::logsumexp;
use cstk::seglid::{
    decode_segmental, partition_segmental, segment_features, train_nb, train_seglid, NbClass, SegContext,
    SegLidModel, SegScorer, SegTrainConfig,
};
use cstk::textproc::{detect_script, AffixTable, Script};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Check = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let held: bool = $cond;
        if !held {
            return Err(format!($($fmt)+));
        }
    };
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

const PER: EntityType = EntityType::Per;
const LOC: EntityType = EntityType::Loc;
const ORG: EntityType = EntityType::Org;

// 1. Segmental decoder oracle

struct TableScorer {
    labels: Vec<LidLabel>,
    max_len: usize,
    n: usize,
    spans: Vec<f64>,
    trans: Vec<f64>,
}

impl SegScorer for TableScorer {
    fn labels(&self) -> &[LidLabel] {
        &self.labels
    }

    fn max_seg_len(&self) -> usize {
        self.max_len
    }

    fn score(&self, _: &[char], i: usize, j: usize, y: usize) -> f64 {
        self.spans[(i * (self.n + 1) + j) * self.labels.len() + y]
    }

    fn transition(&self, a: usize, b: usize) -> f64 {
        self.trans[a * self.labels.len() + b]
    }
}

fn segmentations(n: usize, m: usize, max_len: usize) -> Vec<Vec<(usize, usize, usize)>> {
    fn go(i: usize, n: usize, m: usize, l: usize, cur: &mut Vec<(usize, usize, usize)>, out: &mut Vec<Vec<(usize, usize, usize)>>) {
        if i == n {
            out.push(cur.clone());
            return;
        }
        for j in i + 1..=(i + l).min(n) {
            for y in 0..m {
                cur.push((i, j, y));
                go(j, n, m, l, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(0, n, m, max_len, &mut Vec::new(), &mut out);
    out
}

fn path_score(s: &TableScorer, path: &[(usize, usize, usize)]) -> f64 {
    let mut total = 0.0;
    for (k, &(i, j, y)) in path.iter().enumerate() {
        if k > 0 {
            total += s.transition(path[k - 1].2, y);
        }
        total += s.score(&[], i, j, y);
    }
    total
}

fn record_path(s: &TableScorer, rec: &SegLidRecord) -> Vec<(usize, usize, usize)> {
    let mut i = 0;
    rec.segments()
        .iter()
        .map(|seg| {
            let y = s.labels.iter().position(|&l| l == seg.label).expect("label in scorer");
            let span = (i, i + seg.len, y);
            i += seg.len;
            span
        })
        .collect()
}

fn segmental_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_z: f64 = 0.0;
    for case in 0..100 {
        let n = rng.gen_range(1..=10);
        let m = rng.gen_range(1..=3);
        let max_len = rng.gen_range(1..=5);
        let scorer = TableScorer {
            labels: LidLabel::DEFAULT[..m].to_vec(),
            max_len,
            n,
            spans: (0..n * (n + 1) * m).map(|_| rng.gen_range(-3.0..3.0)).collect(),
            trans: (0..m * m).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        };
        let token: String = "abcdefghij".chars().take(n).collect();
        let scores: Vec<f64> = segmentations(n, m, max_len).iter().map(|p| path_score(&scorer, p)).collect();
        let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let decoded = decode_segmental(&scorer, &token).map_err(|e| e.to_string())?;
        let got = path_score(&scorer, &record_path(&scorer, &decoded));
        ensure!(got == best, "case {case}: decoded path scores {got}, enumeration max {best}");
        let z = partition_segmental(&scorer, &token).map_err(|e| e.to_string())?;
        let brute = logsumexp(&scores);
        worst_z = worst_z.max((z - brute).abs());
        ensure!(close(z, brute, 1e-9), "case {case}: log Z {z} vs enumeration {brute}");
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    Ok(format!("100 scorers, max |dlogZ| {worst_z:.1e}, {:.2}s", elapsed.as_secs_f64()))
}

// 2. CRF inference oracle

fn random_chain(rng: &mut ChaCha8Rng, n: usize, l: usize) -> ChainScores {
    let mut draw = |k: usize| (0..k).map(|_| rng.gen_range(-2.0..2.0)).collect::<Vec<f64>>();
    ChainScores {
        n_labels: l,
        emissions: draw(n * l),
        transitions: draw(l * l),
        start: draw(l),
        end: draw(l),
    }
}

fn label_paths(n: usize, l: usize) -> Vec<Vec<usize>> {
    (0..l.pow(n as u32))
        .map(|mut code| {
            (0..n)
                .map(|_| {
                    let y = code % l;
                    code /= l;
                    y
                })
                .collect()
        })
        .collect()
}

fn chain_path_score(s: &ChainScores, path: &[usize]) -> f64 {
    let l = s.n_labels;
    let mut total = s.start[path[0]];
    for (t, &y) in path.iter().enumerate() {
        total += s.emissions[t * l + y];
        if t > 0 {
            total += s.transitions[path[t - 1] * l + y];
        }
    }
    total + s.end[path[path.len() - 1]]
}

fn crf_inference_oracle() -> Outcome {
    let (n, l) = (6, 4);
    let paths = label_paths(n, l);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for case in 0..50 {
        let s = random_chain(&mut rng, n, l);
        let scores: Vec<f64> = paths.iter().map(|p| chain_path_score(&s, p)).collect();
        let (arg, best) = scores
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        let (path, score) = viterbi(&s);
        ensure!(path == paths[arg], "case {case}: viterbi path {path:?} vs {:?}", paths[arg]);
        ensure!(close(score, best, 1e-9), "case {case}: viterbi score {score} vs {best}");
        let log_z = logsumexp(&scores);
        let fb = ForwardBackward::new(&s);
        ensure!(close(fb.log_z, log_z, 1e-9), "case {case}: log Z {} vs {log_z}", fb.log_z);
        ensure!(score <= fb.log_z, "case {case}: viterbi score above log Z");
        for t in 0..n {
            let mut row = 0.0;
            for y in 0..l {
                let brute: f64 = paths
                    .iter()
                    .zip(&scores)
                    .filter(|(p, _)| p[t] == y)
                    .map(|(_, sc)| (sc - log_z).exp())
                    .sum();
                let got = fb.node_marginal(t, y);
                worst = worst.max((got - brute).abs());
                ensure!(close(got, brute, 1e-9), "case {case}: marginal ({t},{y}) {got} vs {brute}");
                row += got;
            }
            ensure!(close(row, 1.0, 1e-9), "case {case}: marginals at {t} sum to {row}");
        }
    }
    Ok(format!("50 instances x 4096 paths, max marginal error {worst:.1e}"))
}

// 3. Gradient checks

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

fn random_word(rng: &mut ChaCha8Rng, alphabet: &[char], len: std::ops::RangeInclusive<usize>) -> String {
    let n = rng.gen_range(len);
    (0..n).map(|_| *alphabet.choose(rng).unwrap()).collect()
}

const LATIN: &[char] = &['a', 'b', 'd', 'e', 'k', 'l', 'm', 'n', 'o', 'r', 's', 't', 'y'];
const ARABIC: &[char] = &['ا', 'ب', 'ت', 'س', 'ل', 'م', 'ن', 'ه', 'و', 'ي', 'ر', 'ك'];

fn crf_gradient(seed: u64) -> Result<f64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = [Tag::O, Tag::B(PER), Tag::I(PER), Tag::B(LOC)];
    let sentence = LabeledSentence::new(
        (0..6)
            .map(|_| {
                let alphabet = if rng.gen_bool(0.5) { LATIN } else { ARABIC };
                Token::new(random_word(&mut rng, alphabet, 1..=5), *labels.choose(&mut rng).unwrap())
            })
            .collect(),
    );
    let templates = FeatureTemplates {
        next_window: 1,
        use_last_char: true,
        ..Default::default()
    };
    let mut features = Vec::new();
    for t in 0..sentence.len() {
        for f in extract_features(&sentence, t, &templates).map_err(|e| e.to_string())? {
            if !features.contains(&f) {
                features.push(f);
            }
        }
    }
    let mut model = CrfModel::new(labels.to_vec(), templates, features);
    model.params_mut().iter_mut().for_each(|p| *p = rng.gen_range(-1.0..1.0));
    let (_, grad) = model.sequence_nll_grad(&sentence).map_err(|e| e.to_string())?;
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for (k, &g) in grad.iter().enumerate() {
        let x = model.params()[k];
        model.params_mut()[k] = x + h;
        let up = model.sequence_nll_grad(&sentence).unwrap().0;
        model.params_mut()[k] = x - h;
        let down = model.sequence_nll_grad(&sentence).unwrap().0;
        model.params_mut()[k] = x;
        worst = worst.max(rel_err(g, (up - down) / (2.0 * h)));
    }
    Ok(worst)
}

fn random_record(rng: &mut ChaCha8Rng, labels: &[LidLabel], max_len: usize) -> SegLidRecord {
    let token = random_word(rng, LATIN, 2..=8);
    let n = token.chars().count();
    let mut segments = Vec::new();
    let mut left = n;
    while left > 0 {
        let len = rng.gen_range(1..=left.min(max_len));
        segments.push(Segment::new(*labels.choose(rng).unwrap(), len));
        left -= len;
    }
    SegLidRecord::new(token, segments).unwrap()
}

fn semicrf_gradient(seed: u64) -> Result<f64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = vec![LidLabel::Ar, LidLabel::En, LidLabel::NeEn];
    let max_len = 4;
    let record = random_record(&mut rng, &labels, max_len);
    let affixes = AffixTable::seglid_default();
    let chars: Vec<char> = record.token().chars().collect();
    let mut features = Vec::new();
    for i in 0..chars.len() {
        for j in i + 1..=(i + max_len).min(chars.len()) {
            for f in segment_features(&chars, i, j, &affixes, None) {
                if !features.contains(&f) {
                    features.push(f);
                }
            }
        }
    }
    let mut model = SegLidModel::new(labels, max_len, affixes, false, features);
    model.params_mut().iter_mut().for_each(|p| *p = rng.gen_range(-1.0..1.0));
    let ctx = SegContext::default();
    let (_, grad) = model.record_nll_grad(&record, ctx).map_err(|e| e.to_string())?;
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for (k, &g) in grad.iter().enumerate() {
        let x = model.params()[k];
        model.params_mut()[k] = x + h;
        let up = model.record_nll_grad(&record, ctx).unwrap().0;
        model.params_mut()[k] = x - h;
        let down = model.record_nll_grad(&record, ctx).unwrap().0;
        model.params_mut()[k] = x;
        worst = worst.max(rel_err(g, (up - down) / (2.0 * h)));
    }
    Ok(worst)
}

fn gradient_checks() -> Outcome {
    let mut crf: f64 = 0.0;
    let mut semi: f64 = 0.0;
    for seed in 0..20 {
        crf = crf.max(crf_gradient(seed)?);
        semi = semi.max(semicrf_gradient(seed)?);
    }
    ensure!(crf <= 1e-4, "CRF max relative error {crf:.2e}");
    ensure!(semi <= 1e-4, "semi-CRF max relative error {semi:.2e}");
    Ok(format!("max relative error CRF {crf:.1e}, semi-CRF {semi:.1e}"))
}

// 4. Overfit guarantees

fn separable_corpus() -> Vec<LabeledSentence> {
    let lexicon: [(&str, Tag); 10] = [
        ("sara", Tag::B(PER)),
        ("ahmed", Tag::B(PER)),
        ("ali", Tag::I(PER)),
        ("cairo", Tag::B(LOC)),
        ("القاهرة", Tag::B(LOC)),
        ("google", Tag::B(ORG)),
        ("في", Tag::O),
        ("went", Tag::O),
        ("كان", Tag::O),
        ("the", Tag::O),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let pick = |rng: &mut ChaCha8Rng, pred: &dyn Fn(Tag) -> bool| {
        let options: Vec<&(&str, Tag)> = lexicon.iter().filter(|(_, t)| pred(*t)).collect();
        let (w, t) = options.choose(rng).unwrap();
        Token::new(*w, *t)
    };
    (0..20)
        .map(|_| {
            let n = rng.gen_range(3..=7);
            let mut tokens: Vec<Token> = Vec::new();
            while tokens.len() < n {
                match rng.gen_range(0..3) {
                    0 => tokens.push(pick(&mut rng, &|t| t == Tag::O)),
                    1 => tokens.push(pick(&mut rng, &|t| matches!(t, Tag::B(_)))),
                    _ => {
                        tokens.push(pick(&mut rng, &|t| t == Tag::B(PER)));
                        tokens.push(pick(&mut rng, &|t| t == Tag::I(PER)));
                    }
                }
            }
            LabeledSentence::new(tokens)
        })
        .collect()
}

fn affix_corpus(seed: u64, n: usize) -> Vec<SegLidRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stem_letters: Vec<char> = "abcdfghkmnoprstuwyz".chars().collect();
    (0..n)
        .map(|_| {
            let prefix = if rng.gen_bool(0.5) { "el" } else { "ال" };
            let stem = random_word(&mut rng, &stem_letters, 3..=7);
            let mut segments = vec![Segment::new(LidLabel::Ar, 2), Segment::new(LidLabel::En, stem.chars().count())];
            let mut token = format!("{prefix}{stem}");
            if rng.gen_bool(0.5) {
                token.push_str("ات");
                segments.push(Segment::new(LidLabel::Ar, 2));
            }
            SegLidRecord::new(token, segments).unwrap()
        })
        .collect()
}

fn overfit() -> Outcome {
    let corpus = separable_corpus();
    let start = Instant::now();
    let (model, report) = train_crf(&corpus, &TrainConfig::default(), &FeatureTemplates::default())
        .map_err(|e| e.to_string())?;
    let crf_time = start.elapsed();
    let (mut right, mut total) = (0, 0);
    for s in &corpus {
        let pred = model.decode(s).map_err(|e| e.to_string())?;
        right += pred.iter().zip(s.tags()).filter(|(a, b)| **a == *b).count();
        total += s.len();
    }
    ensure!(right == total, "CRF training accuracy {right}/{total}");
    ensure!(report.iterations <= 200, "CRF used {} epochs", report.iterations);
    ensure!(crf_time < Duration::from_secs(30), "CRF took {crf_time:?}");

    let records = affix_corpus(7, 250);
    let (train, test) = records.split_at(125);
    let start = Instant::now();
    let sentences: Vec<Vec<SegLidRecord>> = train.iter().map(|r| vec![r.clone()]).collect();
    let (seg, _) = train_seglid(&sentences, &SegTrainConfig::default()).map_err(|e| e.to_string())?;
    let seg_time = start.elapsed();
    let pred: Vec<SegLidRecord> = test
        .iter()
        .map(|r| seg.decode(r.token(), SegContext::default()))
        .collect::<cstk::Result<_>>()
        .map_err(|e| e.to_string())?;
    let acc = seg_metrics(test, &pred).map_err(|e| e.to_string())?.accuracy;
    ensure!(acc >= 0.95, "seglid held-out exact-record accuracy {acc:.4}");
    ensure!(seg_time < Duration::from_secs(30), "seglid took {seg_time:?}");
    Ok(format!(
        "CRF {right}/{total} in {} epochs ({:.2}s); seglid held-out accuracy {acc:.4} ({:.2}s)",
        report.iterations,
        crf_time.as_secs_f64(),
        seg_time.as_secs_f64()
    ))
}

// 5. Cluster-feature trend

struct ClusterWorld {
    train: Vec<LabeledSentence>,
    test: Vec<LabeledSentence>,
    embeddings: EmbeddingTable,
}

fn cluster_world() -> ClusterWorld {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let classes: [Option<EntityType>; 4] = [None, Some(PER), Some(LOC), Some(ORG)];
    let dim = 8;
    let mut entries = Vec::new();
    let mut vocab: Vec<(Vec<String>, Vec<String>)> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for c in 0..classes.len() {
        let mut words = Vec::new();
        while words.len() < 80 {
            let w = random_word(&mut rng, &('a'..='z').collect::<Vec<_>>(), 6..=6);
            if seen.insert(w.clone()) {
                words.push(w);
            }
        }
        for w in &words {
            let v: Vec<f64> = (0..dim)
                .map(|d| if d == c { 1.0 } else { 0.0 } + rng.gen_range(-0.15..0.15))
                .collect();
            entries.push((w.clone(), v));
        }
        let test = words.split_off(40);
        vocab.push((words, test));
    }
    let sentence = |rng: &mut ChaCha8Rng, test: bool| {
        let pool = |c: usize| if test { &vocab[c].1 } else { &vocab[c].0 };
        let n = rng.gen_range(5..=9);
        let mut tokens = Vec::new();
        while tokens.len() < n {
            if rng.gen_bool(0.3) {
                let c = rng.gen_range(1..4);
                let ty = classes[c].unwrap();
                tokens.push(Token::new(pool(c).choose(rng).unwrap().clone(), Tag::B(ty)));
                if rng.gen_bool(0.3) {
                    tokens.push(Token::new(pool(c).choose(rng).unwrap().clone(), Tag::I(ty)));
                }
            } else {
                tokens.push(Token::new(pool(0).choose(rng).unwrap().clone(), Tag::O));
            }
        }
        LabeledSentence::new(tokens)
    };
    let train = (0..300).map(|_| sentence(&mut rng, false)).collect();
    let test = (0..100).map(|_| sentence(&mut rng, true)).collect();
    ClusterWorld {
        train,
        test,
        embeddings: EmbeddingTable::from_entries(entries).unwrap(),
    }
}

fn test_f1(world: &ClusterWorld, templates: &FeatureTemplates) -> Result<f64, String> {
    let (model, _) = train_crf(&world.train, &TrainConfig::default(), templates).map_err(|e| e.to_string())?;
    let pred = model.decode_batch(&world.test).map_err(|e| e.to_string())?;
    Ok(entity_f1_conll(&world.test, &pred).map_err(|e| e.to_string())?.f1)
}

fn cluster_trend() -> Outcome {
    let world = cluster_world();
    let lexical = FeatureTemplates::default();
    let clusters = kmeans(&world.embeddings, &KMeansConfig::new(4, 0)).map_err(|e| e.to_string())?;
    let with_clusters = FeatureTemplates {
        clusters: vec![("fine".into(), Arc::new(clusters.assignment))],
        ..FeatureTemplates::default()
    };
    let base = 100.0 * test_f1(&world, &lexical)?;
    let boosted = 100.0 * test_f1(&world, &with_clusters)?;
    ensure!(boosted >= base + 5.0, "F1 lexical {base:.2} vs lexical+cluster {boosted:.2}");
    Ok(format!("entity F1 lexical {base:.2} -> lexical+cluster {boosted:.2}"))
}

// 6. k-means

fn kmeans_checks() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let random = EmbeddingTable::from_entries(
        (0..300).map(|i| (format!("w{i}"), (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>())),
    )
    .unwrap();
    let mut steps = 0;
    for seed in 0..10 {
        let m = kmeans(&random, &KMeansConfig::new(6, seed)).map_err(|e| e.to_string())?;
        for (i, w) in m.history.windows(2).enumerate() {
            ensure!(w[1] <= w[0], "seed {seed}: objective rose at step {} ({} -> {})", i + 1, w[0], w[1]);
        }
        steps += m.history.len();
        let again = kmeans(&random, &KMeansConfig::new(6, seed)).map_err(|e| e.to_string())?;
        let bits = |m: &cstk::embeddings::ClusterModel| -> Vec<u64> {
            m.centroids.iter().flatten().map(|x| x.to_bits()).collect()
        };
        ensure!(again == m && bits(&again) == bits(&m), "seed {seed}: repeated run differs");
    }
    let pairs = EmbeddingTable::from_entries([
        ("a", vec![1.0, 0.05]),
        ("b", vec![0.95, -0.02]),
        ("c", vec![0.03, 1.0]),
        ("d", vec![-0.05, 0.97]),
    ])
    .unwrap();
    for seed in 0..20 {
        let m = kmeans(&pairs, &KMeansConfig::new(2, seed)).map_err(|e| e.to_string())?;
        let id = |w: &str| m.cluster_id(w);
        ensure!(
            id("a") == id("b") && id("c") == id("d") && id("a") != id("c"),
            "seed {seed}: planted partition not recovered"
        );
    }
    Ok(format!("{steps} monotone objective steps over 10 seeds; planted pairs recovered for 20 seeds"))
}

// 7. Metrics fixtures

fn metrics_fixtures() -> Outcome {
    let gold = [
        Tag::B(PER),
        Tag::B(PER),
        Tag::B(PER),
        Tag::O,
        Tag::B(LOC),
        Tag::B(LOC),
        Tag::O,
    ];
    let pred = [Tag::B(PER), Tag::B(PER), Tag::B(PER), Tag::B(LOC), Tag::O, Tag::O, Tag::O];
    let r = token_metrics(&gold, &pred).map_err(|e| e.to_string())?;
    ensure!(
        (r.counts.tp, r.counts.fp, r.counts.fn_) == (3, 1, 2),
        "counts {:?}",
        r.counts
    );
    ensure!(close(r.precision, 0.75, 1e-9), "precision {}", r.precision);
    ensure!(close(r.recall, 0.6, 1e-9), "recall {}", r.recall);
    ensure!(close(r.f1, 2.0 / 3.0, 1e-9), "f1 {}", r.f1);

    let sent = LabeledSentence::new(vec![
        Token::new("John", Tag::B(PER)),
        Token::new("Smith", Tag::I(PER)),
        Token::new("left", Tag::O),
    ]);
    let e = entity_f1_conll(&[sent], &[vec![Tag::B(PER), Tag::O, Tag::O]]).map_err(|e| e.to_string())?;
    ensure!((e.counts.fp, e.counts.fn_) == (1, 1), "boundary mismatch counts {:?}", e.counts);

    let g = SegLidRecord::new("laptopy", vec![Segment::new(LidLabel::En, 6), Segment::new(LidLabel::Ar, 1)]).unwrap();
    let p = SegLidRecord::new("laptopy", vec![Segment::new(LidLabel::En, 5), Segment::new(LidLabel::Ar, 2)]).unwrap();
    let lid = seg_metrics(&[g], &[p]).map_err(|e| e.to_string())?;
    ensure!(close(lid.char_acc, 6.0 / 7.0, 1e-12), "laptopy char accuracy {}", lid.char_acc);
    ensure!(lid.accuracy == 0.0, "laptopy exact match {}", lid.accuracy);
    Ok(format!(
        "P {:.4} R {:.4} F1 {:.4}; boundary FP=FN=1; laptopy char acc {:.4}, exact 0",
        r.precision, r.recall, r.f1, lid.char_acc
    ))
}

// 8. Naive Bayes closed form

fn naive_bayes() -> Outcome {
    let k = 0.5;
    let corpus = [
        SegLidRecord::whole("ab", LidLabel::Ar).unwrap(),
        SegLidRecord::whole("cd", LidLabel::En).unwrap(),
    ];
    let m = train_nb(&corpus, (1, 3), k).map_err(|e| e.to_string())?;
    // "ab" -> {a, b, ab}: three n-grams with equal idf, L2-normalized to 1/sqrt(3)
    let w = 1.0 / 3f64.sqrt();
    let denom = 3.0 * w + k * 6.0;
    let log_ar = 0.5f64.ln() + 3.0 * w * ((w + k) / denom).ln();
    let log_en = 0.5f64.ln() + 3.0 * w * (k / denom).ln();
    let expected = 1.0 / (1.0 + (log_en - log_ar).exp());
    let post = m.posteriors("ab").map_err(|e| e.to_string())?;
    ensure!(close(post[0], expected, 1e-9), "posterior {} vs analytic {expected}", post[0]);

    let skewed = [
        SegLidRecord::whole("ab", LidLabel::Ar).unwrap(),
        SegLidRecord::whole("cd", LidLabel::En).unwrap(),
        SegLidRecord::whole("ce", LidLabel::En).unwrap(),
    ];
    let m = train_nb(&skewed, (1, 3), 1.0).map_err(|e| e.to_string())?;
    let c = m.classify("zzz").map_err(|e| e.to_string())?;
    ensure!(c == NbClass::Label(LidLabel::En), "unseen token classified as {c}");
    Ok(format!("P(AR|ab) = {:.12} (analytic {expected:.12}); unseen -> prior argmax EN", post[0]))
}

// 9. Augmentation contracts

const AR_WORDS: &[&str] = &["كتاب", "بيت", "سافرت", "كبير", "مصر", "القاهرة", "كان", "جميل", "صعب"];
const EN_WORDS: &[&str] = &["book", "house", "big", "meeting", "exam", "lab", "cairo", "nice", "hard"];

fn random_tags(rng: &mut ChaCha8Rng, n: usize) -> Vec<Tag> {
    let mut tags: Vec<Tag> = Vec::with_capacity(n);
    for _ in 0..n {
        let prev = tags.last().and_then(|t: &Tag| t.entity_type());
        let tag = match rng.gen_range(0..4) {
            0 | 1 => Tag::O,
            2 => Tag::B(*EntityType::ALL.choose(rng).unwrap()),
            _ => match prev {
                Some(t) => Tag::I(t),
                None => Tag::O,
            },
        };
        tags.push(tag);
    }
    tags
}

fn random_cs_sentence(rng: &mut ChaCha8Rng) -> LabeledSentence {
    let n = rng.gen_range(1..=10);
    let tags = random_tags(rng, n);
    LabeledSentence::new(
        tags.into_iter()
            .map(|t| {
                let pool = if rng.gen_bool(0.4) { EN_WORDS } else { AR_WORDS };
                Token::new(*pool.choose(rng).unwrap(), t)
            })
            .collect(),
    )
}

fn augmentation_lexicon() -> SynonymLexicon {
    let mut lex = SynonymLexicon::new();
    lex.insert(Lang::En, "big", ["large", "huge"]);
    lex.insert(Lang::En, "house", ["home"]);
    lex.insert(Lang::En, "exam", ["test"]);
    lex.insert(Lang::Ar, "كبير", ["ضخم"]);
    lex.insert(Lang::Ar, "جميل", ["حلو"]);
    lex.insert(Lang::Ar, "صعب", ["عسير"]);
    lex
}

fn stub_client() -> DictionaryMtClient {
    let mut mt = DictionaryMtClient::identity();
    let pairs = [
        ("book", "كتاب"),
        ("house", "بيت"),
        ("big", "كبير"),
        ("meeting", "اجتماع"),
        ("exam", "امتحان"),
        ("lab", "معمل"),
        ("cairo", "القاهرة"),
        ("nice", "جميل"),
        ("hard", "صعب"),
        ("travelled", "سافرت"),
        ("egypt", "مصر"),
        ("was", "كان"),
    ];
    for (en, ar) in pairs {
        mt.insert("en", "ar", en, ar);
        mt.insert("ar", "en", ar, en);
    }
    mt
}

struct NoisyTagger;

impl SequenceTagger for NoisyTagger {
    fn tag(&self, sentence: &LabeledSentence) -> cstk::Result<Vec<Tag>> {
        let mut rng = ChaCha8Rng::seed_from_u64(sentence.len() as u64);
        Ok((0..sentence.len())
            .map(|_| *[Tag::O, Tag::I(PER), Tag::I(LOC), Tag::B(ORG)].choose(&mut rng).unwrap())
            .collect())
    }
}

fn latin_count(tokens: &[String]) -> usize {
    tokens.iter().filter(|t| matches!(detect_script(t), Ok(Script::Latin))).count()
}

fn augmentation_contracts() -> Outcome {
    let lex = augmentation_lexicon();
    let emb = EmbeddingTable::new();
    let mt = stub_client();
    let triggers = TriggerTable::default();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut variants = 0;
    for case in 0..1000 {
        let s = random_cs_sentence(&mut rng);
        let cfg = EdaConfig {
            alpha: rng.gen_range(0.05..0.6),
            num_aug: rng.gen_range(1..=8),
            ops: EdaOp::ALL.to_vec(),
            rd_prob: rng.gen_range(0.0..0.6),
            seed: rng.gen(),
        };
        let n = cfg.edits(s.len());
        let out = eda_augment(&s, &cfg, &lex, &emb).map_err(|e| e.to_string())?;
        ensure!(out.len() == cfg.num_aug, "case {case}: {} variants for num_aug {}", out.len(), cfg.num_aug);
        let entities = s.tags().iter().filter(|t| !t.is_outside()).count();
        let mut sorted: Vec<&str> = s.surfaces().collect();
        sorted.sort_unstable();
        for (v, op) in out.iter().zip(cfg.schedule()) {
            ensure!(is_well_formed(&v.tags()), "case {case}: {op} broke IOB");
            let kept = v.tags().iter().filter(|t| !t.is_outside()).count();
            let ok = match op {
                EdaOp::Sr => v.len() == s.len() && v.tags() == s.tags(),
                EdaOp::Ri => v.len() >= s.len() && v.len() <= s.len() + n && kept == entities,
                EdaOp::Rs => {
                    let mut got: Vec<&str> = v.surfaces().collect();
                    got.sort_unstable();
                    got == sorted && kept == entities
                }
                EdaOp::Rd => !v.is_empty() && v.len() <= s.len() && kept == entities,
            };
            ensure!(ok, "case {case}: {op} variant violates its shape law");
            variants += 1;
        }

        let tokens: Vec<String> = s.surfaces().map(str::to_string).collect();
        let bt = back_translate(&tokens, &mt, &CHAIN_FR, &triggers, rng.gen()).map_err(|e| format!("case {case}: {e}"))?;
        ensure!(
            latin_count(&bt) == latin_count(&tokens),
            "case {case}: Latin tokens {} -> {}",
            latin_count(&tokens),
            latin_count(&bt)
        );
        let mut dict = HashMap::new();
        for (tok, tag) in tokens.iter().zip(random_tags(&mut rng, tokens.len())) {
            dict.insert(tok.clone(), tag);
        }
        let projected = project_tags(&bt, &dict, None).map_err(|e| e.to_string())?;
        ensure!(is_well_formed(&projected.tags()), "case {case}: projected tags not IOB");
        let noisy = project_tags(&bt, &HashMap::new(), Some(&NoisyTagger)).map_err(|e| e.to_string())?;
        ensure!(is_well_formed(&noisy.tags()), "case {case}: fallback-projected tags not IOB");
    }

    let before = BTreeMap::from([("PER".to_string(), 10)]);
    let after = BTreeMap::from([("PER".to_string(), 15)]);
    let f = increase_factor(&before, &after);
    ensure!(f.get("PER") == Some(&Some(1.5)), "10 -> 15 gives {:?}", f.get("PER"));
    for case in 0..200 {
        let a: Vec<LabeledSentence> = (0..rng.gen_range(1..20)).map(|_| random_cs_sentence(&mut rng)).collect();
        let b: Vec<LabeledSentence> = (0..rng.gen_range(1..40)).map(|_| random_cs_sentence(&mut rng)).collect();
        let (ca, cb) = (entity_counts(&a), entity_counts(&b));
        let factors = increase_factor(&ca, &cb);
        for (k, &n) in &ca {
            if k == TOTAL {
                continue;
            }
            let expected = cb.get(k).copied().unwrap_or(0) as f64 / n as f64;
            ensure!(factors[k] == Some(expected), "case {case}: factor for {k}");
        }
        let (ta, tb): (usize, usize) = (
            ca.iter().filter(|(k, _)| *k != TOTAL).map(|(_, v)| v).sum(),
            cb.iter().filter(|(k, _)| *k != TOTAL).map(|(_, v)| v).sum(),
        );
        if ta > 0 {
            ensure!(factors[TOTAL] == Some(tb as f64 / ta as f64), "case {case}: total factor");
        }
    }
    Ok(format!("1000 sentences, {variants} EDA variants, Latin counts preserved, IOB always valid"))
}

// 10. Format round-trips

fn random_surface(rng: &mut ChaCha8Rng) -> String {
    let alphabet: Vec<char> = LATIN.iter().chain(ARABIC).copied().chain(['1', '7', '.', '-', '_']).collect();
    loop {
        let w = random_word(rng, &alphabet, 1..=9);
        if !w.starts_with("-DOCSTART-") {
            return w;
        }
    }
}

fn format_round_trips() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for case in 0..1000 {
        let with_pos = rng.gen_bool(0.3);
        let corpus: Vec<LabeledSentence> = (0..rng.gen_range(0..6))
            .map(|_| {
                let n = rng.gen_range(1..8);
                let tags = random_tags(&mut rng, n);
                LabeledSentence::new(
                    tags.into_iter()
                        .map(|t| {
                            let surface = random_surface(&mut rng);
                            if with_pos {
                                Token::with_pos(surface, ["NN", "VB", "PRP"][rng.gen_range(0..3)], t)
                            } else {
                                Token::new(surface, t)
                            }
                        })
                        .collect(),
                )
            })
            .collect();
        let mut text = Vec::new();
        write_conll(&mut text, &corpus).unwrap();
        let back = read_conll(text.as_slice()).map_err(|e| format!("case {case}: {e}"))?;
        ensure!(back == corpus, "case {case}: CoNLL corpus changed on round trip");
        let mut again = Vec::new();
        write_conll(&mut again, &back).unwrap();
        ensure!(again == text, "case {case}: CoNLL bytes changed on round trip");

        let labels: Vec<LidLabel> = LidLabel::DEFAULT.iter().copied().chain([LidLabel::Ne]).collect();
        let seg: Vec<Vec<SegLidRecord>> = (0..rng.gen_range(0..5))
            .map(|_| {
                (0..rng.gen_range(1..6))
                    .map(|_| {
                        let token = random_surface(&mut rng);
                        let mut left = token.chars().count();
                        let mut segments = Vec::new();
                        while left > 0 {
                            let len = rng.gen_range(1..=left);
                            segments.push(Segment::new(*labels.choose(&mut rng).unwrap(), len));
                            left -= len;
                        }
                        SegLidRecord::new(token, segments).unwrap()
                    })
                    .collect()
            })
            .collect();
        let mut text = Vec::new();
        write_seglid(&mut text, &seg).unwrap();
        let back = read_seglid(text.as_slice()).map_err(|e| format!("case {case}: {e}"))?;
        ensure!(back == seg, "case {case}: seglid corpus changed on round trip");
    }
    let line = "wconditional ||| AR:1 EN:11\n";
    let parsed = read_seglid(line.as_bytes()).map_err(|e| e.to_string())?;
    ensure!(
        parsed[0][0].segments() == [Segment::new(LidLabel::Ar, 1), Segment::new(LidLabel::En, 11)],
        "wconditional parsed as {:?}",
        parsed[0][0].segments()
    );
    let mut out = Vec::new();
    write_seglid(&mut out, &parsed).unwrap();
    ensure!(out == line.as_bytes(), "wconditional re-serialized as {:?}", String::from_utf8_lossy(&out));
    Ok("1000 CoNLL and 1000 seglid corpora; wconditional byte-identical".into())
}

// 11. Determinism

fn determinism() -> Outcome {
    let a = common::pipeline(1);
    let b = common::pipeline(1);
    let c = common::pipeline(4);
    for ((name, x), ((_, y), (_, z))) in a.iter().zip(b.iter().zip(&c)) {
        ensure!(x == y, "{name}: two single-thread runs differ");
        ensure!(x == z, "{name}: --threads 1 and --threads 4 differ");
    }
    Ok(format!("{} outputs identical across runs and thread counts", a.len()))
}

fn main() {
    let criteria: [Check; 11] = [
        ("segmental decoder oracle", segmental_oracle),
        ("CRF inference oracle", crf_inference_oracle),
        ("gradient checks", gradient_checks),
        ("overfit guarantees", overfit),
        ("cluster-feature trend", cluster_trend),
        ("k-means", kmeans_checks),
        ("metrics fixtures", metrics_fixtures),
        ("Naive Bayes closed form", naive_bayes),
        ("augmentation contracts", augmentation_contracts),
        ("format round-trips", format_round_trips),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.2}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why} [{secs:.2}s]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
