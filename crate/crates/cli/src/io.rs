use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};

/// Sentences are decoded in batches of this size while streaming.
pub const BATCH: usize = 256;

pub fn open_input(path: &Path) -> Result<Box<dyn BufRead>> {
    if path.as_os_str() == "-" {
        return Ok(Box::new(BufReader::new(io::stdin().lock())));
    }
    let f = File::open(path).with_context(|| format!("cannot open `{}`", path.display()))?;
    Ok(Box::new(BufReader::new(f)))
}

pub fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    match path {
        Some(p) => {
            let f = File::create(p).with_context(|| format!("cannot create `{}`", p.display()))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    }
}

/// Shifts the line number of a parse error raised on a chunk that started
/// after `offset` lines of the file.
pub fn shift_lines(err: cstk::Error, offset: usize) -> cstk::Error {
    match err {
        cstk::Error::Parse { line, message } => cstk::Error::Parse {
            line: line + offset,
            message,
        },
        e => e,
    }
}

/// Reads blank-line separated blocks, `batch` sentences at a time. Each chunk
/// comes with the number of lines preceding it.
pub struct Blocks<R> {
    reader: R,
    batch: usize,
    line: usize,
    done: bool,
}

impl<R: BufRead> Blocks<R> {
    pub fn new(reader: R, batch: usize) -> Self {
        Self {
            reader,
            batch,
            line: 0,
            done: false,
        }
    }
}

impl<R: BufRead> Iterator for Blocks<R> {
    type Item = Result<(usize, String)>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let start = self.line;
        let mut text = String::new();
        let mut sentences = 0;
        let mut in_sentence = false;
        let mut buf = String::new();
        loop {
            buf.clear();
            match self.reader.read_line(&mut buf) {
                Ok(0) => {
                    self.done = true;
                    break;
                }
                Ok(_) => {}
                Err(e) => return Some(Err(e.into())),
            }
            self.line += 1;
            let blank = buf.trim().is_empty();
            if blank && in_sentence {
                sentences += 1;
                in_sentence = false;
            } else if !blank {
                in_sentence = true;
            }
            text.push_str(&buf);
            if !text.ends_with('\n') {
                text.push('\n');
            }
            if sentences == self.batch {
                break;
            }
        }
        if text.trim().is_empty() {
            return None;
        }
        Some(Ok((start, text)))
    }
}

/// Reads up to `batch` lines at a time.
pub fn line_chunks<R: BufRead>(reader: R, batch: usize) -> impl Iterator<Item = Result<(usize, Vec<String>)>> {
    let mut lines = reader.lines();
    let mut line = 0;
    std::iter::from_fn(move || {
        let start = line;
        let mut chunk = Vec::with_capacity(batch);
        for l in lines.by_ref() {
            match l {
                Ok(l) => {
                    line += 1;
                    chunk.push(l);
                }
                Err(e) => return Some(Err(e.into())),
            }
            if chunk.len() == batch {
                break;
            }
        }
        (!chunk.is_empty()).then_some(Ok((start, chunk)))
    })
}
