//! Back-translation that keeps the sentence code-switched: Latin words are
//! folded into Arabic, the sentence takes a round trip through pivot
//! languages, and the same number of words is switched back to English,
//! preferring positions after known switch triggers.

use std::collections::HashMap;
use std::io::BufRead;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::textproc::{detect_script, tokenize, Script};

/// Machine translation backend. Implementations must be usable from several
/// threads at once.
pub trait MtClient: Sync {
    fn translate(&self, text: &str, src: &str, tgt: &str) -> Result<String>;
}

/// Offline client backed by a phrase table. Whole-text entries win; otherwise
/// each token is looked up and unknown tokens pass through unchanged, so an
/// empty table is the identity.
#[derive(Clone, Debug, Default)]
pub struct DictionaryMtClient {
    table: HashMap<(String, String), HashMap<String, String>>,
}

impl DictionaryMtClient {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, src: &str, tgt: &str, source: &str, target: &str) {
        self.table
            .entry((src.into(), tgt.into()))
            .or_default()
            .insert(source.into(), target.into());
    }

    /// Reads `src<TAB>tgt<TAB>source text<TAB>target text` lines.
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut client = Self::default();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            match line.split('\t').collect::<Vec<_>>()[..] {
                [src, tgt, source, target] => client.insert(src, tgt, source, target),
                _ => return Err(Error::parse(i + 1, "expected `src<TAB>tgt<TAB>source<TAB>target`")),
            }
        }
        Ok(client)
    }
}

impl MtClient for DictionaryMtClient {
    fn translate(&self, text: &str, src: &str, tgt: &str) -> Result<String> {
        let Some(table) = self.table.get(&(src.to_string(), tgt.to_string())) else {
            return Ok(text.to_string());
        };
        if let Some(t) = table.get(text) {
            return Ok(t.clone());
        }
        let tokens = tokenize(text);
        let out: Vec<&str> = tokens
            .iter()
            .map(|tok| table.get(tok).map_or(tok.as_str(), String::as_str))
            .collect();
        Ok(out.join(" "))
    }
}

/// Single POST endpoint taking `{text, src, tgt}` and answering `{text}`.
#[cfg(feature = "http")]
pub struct HttpMtClient {
    endpoint: String,
    agent: ureq::Agent,
}

#[cfg(feature = "http")]
impl HttpMtClient {
    pub fn new(endpoint: impl Into<String>) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(std::time::Duration::from_secs(60)))
            .build();
        Self {
            endpoint: endpoint.into(),
            agent: config.into(),
        }
    }
}

#[cfg(feature = "http")]
impl MtClient for HttpMtClient {
    fn translate(&self, text: &str, src: &str, tgt: &str) -> Result<String> {
        #[derive(serde::Serialize)]
        struct Request<'a> {
            text: &'a str,
            src: &'a str,
            tgt: &'a str,
        }
        #[derive(serde::Deserialize)]
        struct Response {
            text: String,
        }
        let fail = |message: String| Error::Translation {
            src: src.into(),
            tgt: tgt.into(),
            message,
        };
        let mut resp = self
            .agent
            .post(&self.endpoint)
            .send_json(Request { text, src, tgt })
            .map_err(|e| fail(e.to_string()))?;
        let body: Response = resp.body_mut().read_json().map_err(|e| fail(e.to_string()))?;
        Ok(body.text)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trigger {
    pub form: String,
    pub weight: f64,
    /// Attached article: matches a prefix of the switched word itself rather
    /// than the preceding word.
    pub prefix: bool,
}

/// Words after which code-switching is likely, with their relative weights.
#[derive(Clone, Debug, PartialEq)]
pub struct TriggerTable {
    triggers: Vec<Trigger>,
}

impl Default for TriggerTable {
    fn default() -> Self {
        let t = |form: &str, weight, prefix| Trigger {
            form: form.into(),
            weight,
            prefix,
        };
        Self {
            triggers: vec![
                t("ال", 31.0, true),
                t("el", 31.0, true),
                t("في", 4.8, false),
                t("و", 3.4, false),
                t("يعني", 1.5, false),
                t("هو", 1.3, false),
            ],
        }
    }
}

impl TriggerTable {
    pub fn new(triggers: Vec<Trigger>) -> Result<Self> {
        if triggers.iter().any(|t| !(t.weight.is_finite() && t.weight > 0.0) || t.form.is_empty()) {
            return Err(Error::Config("trigger weights must be positive".into()));
        }
        Ok(Self { triggers })
    }

    pub fn triggers(&self) -> &[Trigger] {
        &self.triggers
    }

    /// `form<TAB>weight[<TAB>prefix]` lines.
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut triggers = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let parts: Vec<&str> = line.split('\t').collect();
            let (form, weight, prefix) = match parts[..] {
                [f, w] => (f, w, false),
                [f, w, "prefix"] => (f, w, true),
                _ => return Err(Error::parse(i + 1, "expected `form<TAB>weight[<TAB>prefix]`")),
            };
            let weight = weight
                .parse()
                .map_err(|_| Error::parse(i + 1, format!("bad weight `{weight}`")))?;
            triggers.push(Trigger {
                form: form.into(),
                weight,
                prefix,
            });
        }
        Self::new(triggers)
    }

    fn is_trigger_word(&self, token: &str) -> bool {
        self.triggers.iter().any(|t| !t.prefix && t.form == token)
    }

    /// Weight of switching `tokens[i]`, if a trigger precedes it.
    pub fn weight_at(&self, tokens: &[String], i: usize) -> Option<f64> {
        let token = tokens[i].as_str();
        self.triggers
            .iter()
            .filter(|t| {
                if t.prefix {
                    token.starts_with(&t.form) && token.chars().count() > t.form.chars().count() + 1
                } else {
                    i > 0 && tokens[i - 1] == t.form
                }
            })
            .map(|t| t.weight)
            .reduce(f64::max)
    }
}

/// Pivot chains: `ar -> fr -> ar` and `ar -> fr -> de -> ar`.
pub const CHAIN_FR: [&str; 3] = ["ar", "fr", "ar"];
pub const CHAIN_FR_DE: [&str; 4] = ["ar", "fr", "de", "ar"];

pub fn validate_chain<S: AsRef<str>>(chain: &[S]) -> Result<()> {
    let ok = chain.len() >= 2
        && chain.first().map(AsRef::as_ref) == Some("ar")
        && chain.last().map(AsRef::as_ref) == Some("ar")
        && chain.windows(2).all(|w| w[0].as_ref() != w[1].as_ref());
    if !ok {
        let shown: Vec<&str> = chain.iter().map(AsRef::as_ref).collect();
        return Err(Error::Config(format!(
            "translation chain must start and end with `ar` without repeated steps, got {}",
            shown.join("->")
        )));
    }
    Ok(())
}

fn is_latin(token: &str) -> bool {
    matches!(detect_script(token), Ok(Script::Latin))
}

/// Translates each Latin token to Arabic in place.
fn fold_latin(tokens: Vec<String>, mt: &dyn MtClient) -> Result<Vec<String>> {
    let mut out = Vec::with_capacity(tokens.len());
    for tok in tokens {
        if !is_latin(&tok) {
            out.push(tok);
            continue;
        }
        let translated = tokenize(&mt.translate(&tok, "en", "ar")?);
        if translated.iter().any(|t| is_latin(t)) || translated.is_empty() {
            return Err(Error::Translation {
                src: "en".into(),
                tgt: "ar".into(),
                message: format!("`{tok}` did not translate into Arabic script"),
            });
        }
        out.extend(translated);
    }
    Ok(out)
}

/// Candidate positions for switching back to English, most preferred first:
/// trigger-preceded words by weighted sampling without replacement, then the
/// other content words, then anything else, each group in seeded random order.
fn switch_order(tokens: &[String], triggers: &TriggerTable, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let content = |i: usize| {
        matches!(detect_script(&tokens[i]), Ok(Script::Arabic)) && !triggers.is_trigger_word(&tokens[i])
    };
    let mut keyed = Vec::new();
    let mut plain = Vec::new();
    let mut rest = Vec::new();
    for i in 0..tokens.len() {
        if !content(i) {
            rest.push(i);
        } else if let Some(w) = triggers.weight_at(tokens, i) {
            // Efraimidis-Spirakis key: larger is earlier
            let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            keyed.push((u.ln() / w, i));
        } else {
            plain.push(i);
        }
    }
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    plain.shuffle(rng);
    rest.shuffle(rng);
    keyed.into_iter().map(|(_, i)| i).chain(plain).chain(rest).collect()
}

/// Back-translates a tokenized sentence through `chain` while preserving its
/// number of Latin-script tokens.
pub fn back_translate<S: AsRef<str>>(
    tokens: &[String],
    mt: &dyn MtClient,
    chain: &[S],
    triggers: &TriggerTable,
    seed: u64,
) -> Result<Vec<String>> {
    validate_chain(chain)?;
    let k = tokens.iter().filter(|t| is_latin(t)).count();
    let folded = fold_latin(tokens.to_vec(), mt)?;
    let mut text = folded.join(" ");
    for step in chain.windows(2) {
        text = mt.translate(&text, step[0].as_ref(), step[1].as_ref())?;
    }
    let mut out = fold_latin(tokenize(&text), mt)?;
    if k == 0 {
        return Ok(out);
    }
    if k > out.len() {
        return Err(Error::Translation {
            src: "ar".into(),
            tgt: "en".into(),
            message: format!("need {k} switched words but the translation has {} tokens", out.len()),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut switched = 0;
    for i in switch_order(&out, triggers, &mut rng) {
        if switched == k {
            break;
        }
        let translated = tokenize(&mt.translate(&out[i], "ar", "en")?);
        if let [word] = translated.as_slice() {
            if is_latin(word) {
                out[i] = word.clone();
                switched += 1;
            }
        }
    }
    if switched < k {
        return Err(Error::Translation {
            src: "ar".into(),
            tgt: "en".into(),
            message: format!("only {switched} of {k} words translate to a single English word"),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        tokenize(s)
    }

    fn stub() -> DictionaryMtClient {
        let mut mt = DictionaryMtClient::identity();
        mt.insert("en", "ar", "lab", "مختبر");
        for (ar, en) in [("مختبر", "lab"), ("بكرة", "tomorrow"), ("عندي", "I-have")] {
            mt.insert("ar", "en", ar, en);
        }
        mt
    }

    #[test]
    fn monolingual_input_with_identity_is_unchanged() {
        let s = toks("انا رايح البيت");
        let out = back_translate(&s, &DictionaryMtClient::identity(), &CHAIN_FR, &TriggerTable::default(), 0).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn keeps_exactly_one_latin_token() {
        let s = toks("عندي lab بكرة");
        for seed in 0..20 {
            let out = back_translate(&s, &stub(), &CHAIN_FR_DE, &TriggerTable::default(), seed).unwrap();
            assert_eq!(out.len(), 3);
            assert_eq!(out.iter().filter(|t| is_latin(t)).count(), 1);
        }
    }

    #[test]
    fn prefers_word_after_trigger() {
        let mut mt = stub();
        mt.insert("ar", "en", "الكتاب", "book");
        mt.insert("ar", "en", "جميل", "nice");
        let s = toks("في بكرة lab جميل");
        for seed in 0..20 {
            let out = back_translate(&s, &mt, &CHAIN_FR, &TriggerTable::default(), seed).unwrap();
            assert_eq!(out, ["في", "tomorrow", "مختبر", "جميل"]);
        }
    }

    #[test]
    fn chain_must_return_to_arabic() {
        let s = toks("عندي lab");
        for chain in [&["ar", "fr"][..], &["fr", "ar"], &["ar"], &["ar", "ar"]] {
            assert!(matches!(
                back_translate(&s, &stub(), chain, &TriggerTable::default(), 0),
                Err(Error::Config(_))
            ));
        }
    }

    struct Failing;

    impl MtClient for Failing {
        fn translate(&self, _: &str, src: &str, tgt: &str) -> Result<String> {
            Err(Error::Translation {
                src: src.into(),
                tgt: tgt.into(),
                message: "offline".into(),
            })
        }
    }

    #[test]
    fn client_errors_carry_the_pair() {
        match back_translate(&toks("انا هنا"), &Failing, &CHAIN_FR, &TriggerTable::default(), 0) {
            Err(Error::Translation { src, tgt, .. }) => assert_eq!((src.as_str(), tgt.as_str()), ("ar", "fr")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn untranslatable_switch_is_an_error() {
        let mut mt = DictionaryMtClient::identity();
        mt.insert("en", "ar", "lab", "مختبر");
        assert!(back_translate(&toks("عندي lab"), &mt, &CHAIN_FR, &TriggerTable::default(), 0).is_err());
    }

    #[test]
    fn dictionary_file() {
        let mt = DictionaryMtClient::read("en\tar\tlab\tمختبر\n# comment\nar\ten\tمختبر كبير\tbig lab\n".as_bytes()).unwrap();
        assert_eq!(mt.translate("the lab", "en", "ar").unwrap(), "the مختبر");
        assert_eq!(mt.translate("مختبر كبير", "ar", "en").unwrap(), "big lab");
        assert_eq!(mt.translate("x", "fr", "de").unwrap(), "x");
        assert!(DictionaryMtClient::read("en\tar\tlab\n".as_bytes()).is_err());
    }

    #[test]
    fn trigger_weights() {
        let t = TriggerTable::default();
        let s = toks("في البيت يعني حلو");
        assert_eq!(t.weight_at(&s, 1), Some(31.0));
        assert_eq!(t.weight_at(&s, 3), Some(1.5));
        assert_eq!(t.weight_at(&s, 0), None);
        assert!(TriggerTable::read("x\t0\n".as_bytes()).is_err());
        let custom = TriggerTable::read("ال\t2\tprefix\nفي\t1\n".as_bytes()).unwrap();
        assert_eq!(custom.triggers().len(), 2);
    }
}
