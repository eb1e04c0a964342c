//! Line-oriented plain-text snapshot format shared by checkpoints and
//! environment snapshots.
//!
//! A document starts with a header line `<format> v<version>`, followed by
//! one `key: value...` entry per line. Values are whitespace-separated
//! tokens; floating-point numbers are written with Rust's shortest
//! round-trip representation, so a write/read cycle is bit-exact. Keys are
//! read back in the order they were written. Blank lines and lines starting
//! with `#` are ignored.

use std::fmt::Display;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Default)]
pub struct KvWriter {
    buf: String,
}

impl KvWriter {
    pub fn new(format: &str, version: u32) -> Self {
        Self {
            buf: format!("{format} v{version}\n"),
        }
    }

    pub fn put(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.buf.push_str(key);
        self.buf.push_str(": ");
        self.buf.push_str(&value.to_string());
        self.buf.push('\n');
        self
    }

    pub fn put_seq<T: Display>(&mut self, key: &str, values: &[T]) -> &mut Self {
        self.buf.push_str(key);
        self.buf.push(':');
        for v in values {
            self.buf.push(' ');
            self.buf.push_str(&v.to_string());
        }
        self.buf.push('\n');
        self
    }

    pub fn put_rng(&mut self, key: &str, rng: &ChaCha8Rng) -> &mut Self {
        let seed: String = rng.get_seed().iter().map(|b| format!("{b:02x}")).collect();
        self.put(
            key,
            format!("{seed} {} {}", rng.get_stream(), rng.get_word_pos()),
        )
    }

    /// Appends another document's entries (without its header).
    pub fn append(&mut self, other: &KvWriter) -> &mut Self {
        if let Some((_, body)) = other.buf.split_once('\n') {
            self.buf.push_str(body);
        }
        self
    }

    pub fn finish(self) -> String {
        self.buf
    }
}

#[derive(Debug)]
pub struct KvReader<'a> {
    what: &'static str,
    lines: Vec<(usize, &'a str, &'a str)>,
    pos: usize,
}

impl<'a> KvReader<'a> {
    pub fn new(text: &'a str, what: &'static str, format: &str, version: u32) -> Result<Self> {
        let mut iter = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let expected = format!("{format} v{version}");
        match iter.next() {
            Some((_, header)) if header == expected => {}
            Some((line, header)) => {
                return Err(Error::Parse {
                    what,
                    line,
                    reason: format!("expected header `{expected}`, found `{header}`"),
                })
            }
            None => {
                return Err(Error::Parse {
                    what,
                    line: 0,
                    reason: "empty document".into(),
                })
            }
        }
        let mut lines = Vec::new();
        for (line, l) in iter {
            let (key, value) = l.split_once(':').ok_or(Error::Parse {
                what,
                line,
                reason: "missing `:` separator".into(),
            })?;
            lines.push((line, key.trim(), value.trim()));
        }
        Ok(Self {
            what,
            lines,
            pos: 0,
        })
    }

    fn err(&self, line: usize, reason: impl Into<String>) -> Error {
        Error::Parse {
            what: self.what,
            line,
            reason: reason.into(),
        }
    }

    /// Returns the raw value of the next entry, which must carry `key`.
    pub fn raw(&mut self, key: &str) -> Result<(usize, &'a str)> {
        let Some(&(line, k, v)) = self.lines.get(self.pos) else {
            return Err(self.err(0, format!("unexpected end of document, expected `{key}`")));
        };
        if k != key {
            return Err(self.err(line, format!("expected key `{key}`, found `{k}`")));
        }
        self.pos += 1;
        Ok((line, v))
    }

    pub fn get<T: FromStr>(&mut self, key: &str) -> Result<T> {
        let (line, v) = self.raw(key)?;
        v.parse()
            .map_err(|_| self.err(line, format!("cannot parse `{v}` for `{key}`")))
    }

    pub fn get_seq<T: FromStr>(&mut self, key: &str) -> Result<Vec<T>> {
        let (line, v) = self.raw(key)?;
        v.split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| self.err(line, format!("cannot parse `{t}` for `{key}`")))
            })
            .collect()
    }

    pub fn get_rng(&mut self, key: &str) -> Result<ChaCha8Rng> {
        let (line, v) = self.raw(key)?;
        let parts: Vec<&str> = v.split_whitespace().collect();
        let bad = || self.err(line, format!("malformed rng state for `{key}`"));
        if parts.len() != 3 || parts[0].len() != 64 {
            return Err(bad());
        }
        let mut seed = [0u8; 32];
        for (i, byte) in seed.iter_mut().enumerate() {
            *byte = u8::from_str_radix(&parts[0][2 * i..2 * i + 2], 16).map_err(|_| bad())?;
        }
        let stream: u64 = parts[1].parse().map_err(|_| bad())?;
        let word_pos: u128 = parts[2].parse().map_err(|_| bad())?;
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(stream);
        rng.set_word_pos(word_pos);
        Ok(rng)
    }

    pub fn finish(self) -> Result<()> {
        match self.lines.get(self.pos) {
            None => Ok(()),
            Some(&(line, k, _)) => Err(self.err(line, format!("unexpected trailing key `{k}`"))),
        }
    }
}
