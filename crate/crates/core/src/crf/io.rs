//! Plain-text CRF model files.
//!
//! ```text
//! CRF<TAB>v1
//! labels<TAB>O<TAB>B-PER<TAB>I-PER
//! templates<TAB>current=1<TAB>prev=1<TAB>...
//! clusters<TAB><name><TAB><k><TAB><count>
//! <word><TAB><id>
//! weights
//! <feature><TAB><label><TAB><weight>
//! TRANS<TAB><from><TAB><to><TAB><weight>
//! ```
//!
//! Zero weights are omitted; `<BOS>` and `<EOS>` stand for the sentence
//! boundaries in transition lines.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::sync::Arc;

use super::features::{BOS, EOS};
use super::{CrfModel, FeatureTemplates};
use crate::corpus::Tag;
use crate::embeddings::ClusterAssignment;
use crate::error::{Error, Result};

const MAGIC: &str = "CRF\tv1";

impl CrfModel {
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{MAGIC}")?;
        let labels: Vec<String> = self.labels.iter().map(Tag::to_string).collect();
        writeln!(w, "labels\t{}", labels.join("\t"))?;
        writeln!(w, "templates\t{}", self.templates.describe().join("\t"))?;
        for (name, clusters) in &self.templates.clusters {
            writeln!(w, "clusters\t{name}\t{}\t{}", clusters.k, clusters.len())?;
            for (word, id) in clusters.iter() {
                writeln!(w, "{word}\t{id}")?;
            }
        }
        writeln!(w, "weights")?;
        let l = self.n_labels();
        for (f, name) in self.features.iter().enumerate() {
            for y in 0..l {
                let v = self.params[self.state_index(f, y)];
                if v != 0.0 {
                    writeln!(w, "{name}\t{}\t{v}", labels[y])?;
                }
            }
        }
        let mut trans = |from: &str, to: &str, v: f64| -> Result<()> {
            if v != 0.0 {
                writeln!(w, "TRANS\t{from}\t{to}\t{v}")?;
            }
            Ok(())
        };
        for y in 0..l {
            trans(BOS, &labels[y], self.params[self.start_index(y)])?;
        }
        for a in 0..l {
            for b in 0..l {
                trans(&labels[a], &labels[b], self.params[self.transition_index(a, b)])?;
            }
        }
        for y in 0..l {
            trans(&labels[y], EOS, self.params[self.end_index(y)])?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((n, line)) => Ok((n, line?)),
                None => Err(Error::model(format!("unexpected end of file, expected {what}"))),
            }
        };

        let (_, magic) = next("header")?;
        if magic.trim_end() != MAGIC {
            return Err(Error::model("not a CRF model file"));
        }
        let (n, line) = next("labels")?;
        let labels = match line.split('\t').collect::<Vec<_>>().split_first() {
            Some((&"labels", rest)) if !rest.is_empty() => rest
                .iter()
                .map(|s| s.parse::<Tag>().map_err(|e| Error::parse(n, e.to_string())))
                .collect::<Result<Vec<_>>>()?,
            _ => return Err(Error::parse(n, "expected `labels` line")),
        };
        let (n, line) = next("templates")?;
        let mut templates = FeatureTemplates {
            prev_window: 0,
            use_current: false,
            ..Default::default()
        };
        let mut fields = line.split('\t');
        if fields.next() != Some("templates") {
            return Err(Error::parse(n, "expected `templates` line"));
        }
        for field in fields {
            let (k, v) = field
                .split_once('=')
                .ok_or_else(|| Error::parse(n, format!("bad template `{field}`")))?;
            templates.apply_description(k, v)?;
        }

        loop {
            let (n, line) = next("weights")?;
            if line == "weights" {
                break;
            }
            let parts: Vec<&str> = line.split('\t').collect();
            let [kw, name, k, count] = parts[..] else {
                return Err(Error::parse(n, "expected `clusters` or `weights`"));
            };
            if kw != "clusters" {
                return Err(Error::parse(n, "expected `clusters` or `weights`"));
            }
            let int = |s: &str| s.parse::<usize>().map_err(|_| Error::parse(n, format!("bad count `{s}`")));
            let mut clusters = ClusterAssignment::new(int(k)?);
            for _ in 0..int(count)? {
                let (m, entry) = next("cluster entry")?;
                let (word, id) = entry
                    .split_once('\t')
                    .ok_or_else(|| Error::parse(m, "expected `word<TAB>id`"))?;
                let id = id.parse().map_err(|_| Error::parse(m, format!("bad cluster id `{id}`")))?;
                clusters.insert(word, id);
            }
            templates.clusters.push((name.to_string(), Arc::new(clusters)));
        }
        templates.validate()?;

        let label_ix: HashMap<String, usize> = labels.iter().enumerate().map(|(i, t)| (t.to_string(), i)).collect();
        let label = |n: usize, s: &str| {
            label_ix
                .get(s)
                .copied()
                .ok_or_else(|| Error::parse(n, format!("unknown label `{s}`")))
        };
        let weight = |n: usize, s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(n, format!("bad weight `{s}`")))
        };
        let mut state = Vec::new();
        let mut trans = Vec::new();
        for (n, line) in lines {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split('\t').collect();
            match parts[..] {
                ["TRANS", from, to, v] => trans.push((n, from.to_string(), to.to_string(), weight(n, v)?)),
                [feat, y, v] => state.push((feat.to_string(), label(n, y)?, weight(n, v)?)),
                _ => return Err(Error::parse(n, "expected a weight line")),
            }
        }

        let mut features = Vec::new();
        let mut seen = HashMap::new();
        for (f, _, _) in &state {
            if !seen.contains_key(f) {
                seen.insert(f.clone(), features.len());
                features.push(f.clone());
            }
        }
        let mut model = CrfModel::new(labels, templates, features);
        for (f, y, v) in state {
            let i = model.state_index(seen[&f], y);
            model.params[i] = v;
        }
        for (n, from, to, v) in trans {
            let i = match (from.as_str(), to.as_str()) {
                (BOS, to) => model.start_index(label(n, to)?),
                (from, EOS) => model.end_index(label(n, from)?),
                (from, to) => model.transition_index(label(n, from)?, label(n, to)?),
            };
            model.params[i] = v;
        }
        Ok(model)
    }
}
