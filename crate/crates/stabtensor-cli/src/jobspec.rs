//! The structured-text job format.
//!
//! Statements are separated by newlines or `;`, and `#` starts a comment:
//!
//! ```text
//! ring Z/4
//! module A gens 2 rel [[2, 0], [0, 4]]   # one relation per inner list
//! map f A A [[0, 1], [1, 0]]             # image of each source generator
//! ses S f g
//! cmd asymptotic A A n=0 horizon=8
//! ```
//!
//! The ring's own name (`Z`, `Z/4`) and `R` denote the free module of rank one.

use std::collections::BTreeMap;
use std::fmt;

use stabtensor::linalg::{Int, IntMatrix};
use stabtensor::module::{FpModule, ModuleMap, Ring, ShortExact};
use thiserror::Error;

/// A 1-based line and column.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum JobError {
    #[error("parse error at {0}: {1}")]
    Parse(Pos, String),
    #[error("unknown name `{1}` at {0}")]
    UnknownName(Pos, String),
    #[error("bad matrix at {0}: {1}")]
    BadMatrix(Pos, String),
    #[error("bad ring at {0}: {1}")]
    BadRing(Pos, String),
    #[error("not a short exact sequence at {0}: {1}")]
    NotExact(Pos, String),
}

pub type JobResult<T> = std::result::Result<T, JobError>;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Word(String),
    Open,
    Close,
    Comma,
    End,
}

fn lex(text: &str) -> JobResult<Vec<(Tok, Pos)>> {
    let mut out = Vec::new();
    for (li, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        let mut chars = line.char_indices().peekable();
        while let Some(&(ci, c)) = chars.peek() {
            let pos = Pos { line: li + 1, col: line[..ci].chars().count() + 1 };
            let single = match c {
                '[' => Some(Tok::Open),
                ']' => Some(Tok::Close),
                ',' => Some(Tok::Comma),
                ';' => Some(Tok::End),
                _ => None,
            };
            if let Some(t) = single {
                out.push((t, pos));
                chars.next();
            } else if c.is_whitespace() {
                chars.next();
            } else if c.is_alphanumeric() || "_-=/.^+".contains(c) {
                let mut w = String::new();
                while let Some(&(_, c)) = chars.peek() {
                    if c.is_alphanumeric() || "_-=/.^+".contains(c) {
                        w.push(c);
                        chars.next();
                    } else {
                        break;
                    }
                }
                out.push((Tok::Word(w), pos));
            } else {
                return Err(JobError::Parse(pos, format!("unexpected character `{c}`")));
            }
        }
        out.push((Tok::End, Pos { line: li + 1, col: line.chars().count() + 1 }));
    }
    Ok(out)
}

/// The computations a job can request.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Command {
    Stabilize { a: String, b: String },
    Tor { a: String, b: String, n: usize },
    Tower { a: String, b: String, n: i64 },
    Asymptotic { a: String, b: String, n: i64 },
    Intertwine { a: String, b: String, n: i64 },
    Satellite { a: String, b: String, n: i64 },
    Omega { a: String, ses: String, n: i64 },
    VogelRoundtrip { a: String, b: String, n: i64, count: usize },
    VerifyCubes { count: usize },
    VerifyAll { a: Option<String>, b: Option<String>, count: usize },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Stabilize { .. } => "stabilize",
            Command::Tor { .. } => "tor",
            Command::Tower { .. } => "tower",
            Command::Asymptotic { .. } => "asymptotic",
            Command::Intertwine { .. } => "intertwine",
            Command::Satellite { .. } => "satellite",
            Command::Omega { .. } => "omega",
            Command::VogelRoundtrip { .. } => "vogel-roundtrip",
            Command::VerifyCubes { .. } => "verify-cubes",
            Command::VerifyAll { .. } => "verify-all",
        }
    }
}

/// Settings given in the `cmd` line; command-line flags take precedence.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Params {
    pub horizon: Option<usize>,
    pub seed: Option<u64>,
    pub truncation: Option<u32>,
}

#[derive(Clone, Debug)]
pub struct JobSpec {
    pub ring: Ring,
    pub modules: BTreeMap<String, FpModule>,
    pub maps: BTreeMap<String, ModuleMap>,
    pub sequences: BTreeMap<String, ShortExact>,
    pub command: Command,
    pub params: Params,
}

impl JobSpec {
    /// A module by name, including the free module of rank one.
    pub fn module(&self, name: &str) -> Option<FpModule> {
        if is_ring_name(name, &self.ring) {
            return Some(FpModule::free(&self.ring, 1));
        }
        self.modules.get(name).cloned()
    }
}

fn is_ring_name(name: &str, ring: &Ring) -> bool {
    name == "R" || name == ring.to_string()
}

fn parse_ring(w: &str, pos: Pos) -> JobResult<Ring> {
    if w == "Z" {
        return Ok(Ring::Integers);
    }
    let m =
        w.strip_prefix("Z/").ok_or_else(|| JobError::BadRing(pos, format!("expected `Z` or `Z/<m>`, got `{w}`")))?;
    let m: i64 = m.parse().map_err(|_| JobError::BadRing(pos, format!("bad modulus `{m}`")))?;
    if m < 2 {
        return Err(JobError::BadRing(pos, format!("modulus must be at least 2, got {m}")));
    }
    Ring::integers_mod(m).map_err(|e| JobError::BadRing(pos, e.to_string()))
}

/// Token cursor over one statement.
struct Stmt<'a> {
    toks: &'a [(Tok, Pos)],
    i: usize,
    end: Pos,
}

impl<'a> Stmt<'a> {
    fn pos(&self) -> Pos {
        self.toks.get(self.i).map_or(self.end, |t| t.1)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|t| &t.0)
    }

    fn word(&mut self, what: &str) -> JobResult<(String, Pos)> {
        let pos = self.pos();
        match self.peek() {
            Some(Tok::Word(w)) => {
                let w = w.clone();
                self.i += 1;
                Ok((w, pos))
            }
            _ => Err(JobError::Parse(pos, format!("expected {what}"))),
        }
    }

    fn expect(&mut self, t: Tok, what: &str) -> JobResult<()> {
        if self.peek() == Some(&t) {
            self.i += 1;
            Ok(())
        } else {
            Err(JobError::Parse(self.pos(), format!("expected `{what}`")))
        }
    }

    fn done(&self) -> JobResult<()> {
        match self.toks.get(self.i) {
            None => Ok(()),
            Some((_, pos)) => Err(JobError::Parse(*pos, "unexpected trailing input".into())),
        }
    }

    /// `[[a, b], [c, d]]`, possibly `[]`.
    fn matrix(&mut self) -> JobResult<(Vec<Vec<Int>>, Pos)> {
        let pos = self.pos();
        self.expect(Tok::Open, "[")?;
        let mut rows = Vec::new();
        if self.peek() == Some(&Tok::Close) {
            self.i += 1;
            return Ok((rows, pos));
        }
        loop {
            self.expect(Tok::Open, "[")?;
            let mut row = Vec::new();
            if self.peek() != Some(&Tok::Close) {
                loop {
                    let (w, p) = self.word("an integer")?;
                    row.push(w.parse::<Int>().map_err(|_| JobError::BadMatrix(p, format!("`{w}` is not an integer")))?);
                    if self.peek() == Some(&Tok::Comma) {
                        self.i += 1;
                    } else {
                        break;
                    }
                }
            }
            self.expect(Tok::Close, "]")?;
            rows.push(row);
            match self.peek() {
                Some(Tok::Comma) => self.i += 1,
                Some(Tok::Close) => {
                    self.i += 1;
                    break;
                }
                _ => return Err(JobError::Parse(self.pos(), "expected `,` or `]`".into())),
            }
        }
        if let Some(len) = rows.first().map(Vec::len) {
            if rows.iter().any(|r| r.len() != len) {
                return Err(JobError::BadMatrix(pos, "rows of different lengths".into()));
            }
        }
        Ok((rows, pos))
    }
}

#[derive(Default)]
struct Builder {
    ring: Option<Ring>,
    modules: BTreeMap<String, FpModule>,
    maps: BTreeMap<String, ModuleMap>,
    sequences: BTreeMap<String, ShortExact>,
    command: Option<(Command, Params)>,
}

impl Builder {
    fn ring(&self, pos: Pos) -> JobResult<&Ring> {
        self.ring.as_ref().ok_or_else(|| JobError::Parse(pos, "`ring` must come first".into()))
    }

    fn fresh(&self, name: &str, pos: Pos) -> JobResult<()> {
        let taken =
            self.modules.contains_key(name) || self.maps.contains_key(name) || self.sequences.contains_key(name);
        if taken || self.ring.as_ref().is_some_and(|r| is_ring_name(name, r)) {
            return Err(JobError::Parse(pos, format!("name `{name}` is already in use")));
        }
        Ok(())
    }

    fn module_ref(&self, name: &str, pos: Pos) -> JobResult<FpModule> {
        let ring = self.ring(pos)?;
        if is_ring_name(name, ring) {
            return Ok(FpModule::free(ring, 1));
        }
        self.modules.get(name).cloned().ok_or_else(|| JobError::UnknownName(pos, name.into()))
    }

    fn map_ref(&self, name: &str, pos: Pos) -> JobResult<ModuleMap> {
        self.maps.get(name).cloned().ok_or_else(|| JobError::UnknownName(pos, name.into()))
    }

    fn statement(&mut self, s: &mut Stmt) -> JobResult<()> {
        let (kw, pos) = s.word("a keyword")?;
        match kw.as_str() {
            "ring" => {
                if self.ring.is_some() {
                    return Err(JobError::Parse(pos, "ring given twice".into()));
                }
                let (w, p) = s.word("a ring")?;
                self.ring = Some(parse_ring(&w, p)?);
            }
            "module" => {
                let ring = self.ring(pos)?.clone();
                let (name, npos) = s.word("a module name")?;
                self.fresh(&name, npos)?;
                let mut gens = None;
                let mut rels = None;
                while s.peek().is_some() {
                    let (k, kpos) = s.word("`gens` or `rel`")?;
                    match k.as_str() {
                        "gens" => {
                            let (g, gpos) = s.word("a generator count")?;
                            gens = Some(
                                g.parse::<usize>().map_err(|_| JobError::Parse(gpos, format!("bad count `{g}`")))?,
                            );
                        }
                        "rel" => rels = Some(s.matrix()?),
                        _ => return Err(JobError::Parse(kpos, format!("expected `gens` or `rel`, got `{k}`"))),
                    }
                }
                let (rows, mpos) = rels.unwrap_or((Vec::new(), npos));
                let g = match (gens, rows.first()) {
                    (Some(g), Some(r)) if r.len() != g => {
                        return Err(JobError::BadMatrix(
                            mpos,
                            format!("relations have {} entries, expected {g}", r.len()),
                        ))
                    }
                    (Some(g), _) => g,
                    (None, Some(r)) => r.len(),
                    (None, None) => return Err(JobError::Parse(npos, "a module needs `gens` or `rel`".into())),
                };
                let rel = IntMatrix::from_fn(g, rows.len(), |i, j| rows[j][i].clone());
                let m = FpModule::new(ring, g, rel).map_err(|e| JobError::BadMatrix(mpos, e.to_string()))?;
                self.modules.insert(name, m);
            }
            "map" => {
                let (name, npos) = s.word("a map name")?;
                self.fresh(&name, npos)?;
                let (src, spos) = s.word("a source module")?;
                let src = self.module_ref(&src, spos)?;
                let (dst, dpos) = s.word("a target module")?;
                let dst = self.module_ref(&dst, dpos)?;
                let (rows, mpos) = s.matrix()?;
                if rows.len() != src.gens() || rows.iter().any(|r| r.len() != dst.gens()) {
                    return Err(JobError::BadMatrix(
                        mpos,
                        format!("expected {} rows of length {}", src.gens(), dst.gens()),
                    ));
                }
                let mat = IntMatrix::from_fn(dst.gens(), src.gens(), |i, j| rows[j][i].clone());
                let f = ModuleMap::new(src, dst, mat).map_err(|e| JobError::BadMatrix(mpos, e.to_string()))?;
                self.maps.insert(name, f);
            }
            "ses" => {
                let (name, npos) = s.word("a sequence name")?;
                self.fresh(&name, npos)?;
                let (f, fpos) = s.word("a map")?;
                let f = self.map_ref(&f, fpos)?;
                let (g, gpos) = s.word("a map")?;
                let g = self.map_ref(&g, gpos)?;
                let ses = ShortExact::new(f, g).map_err(|e| JobError::NotExact(npos, e.to_string()))?;
                self.sequences.insert(name, ses);
            }
            "cmd" => {
                if self.command.is_some() {
                    return Err(JobError::Parse(pos, "only one `cmd` per job".into()));
                }
                self.ring(pos)?;
                self.command = Some(self.command_line(s)?);
            }
            _ => return Err(JobError::Parse(pos, format!("unknown statement `{kw}`"))),
        }
        s.done()
    }

    fn command_line(&self, s: &mut Stmt) -> JobResult<(Command, Params)> {
        let (name, npos) = s.word("a command")?;
        let mut names = Vec::new();
        let mut keys: BTreeMap<String, (String, Pos)> = BTreeMap::new();
        while s.peek().is_some() {
            let (w, p) = s.word("an argument")?;
            match w.split_once('=') {
                Some((k, v)) => {
                    keys.insert(k.to_string(), (v.to_string(), p));
                }
                None => names.push((w, p)),
            }
        }
        let int = |k: &str| -> JobResult<Option<i64>> {
            keys.get(k)
                .map(|(v, p)| v.parse::<i64>().map_err(|_| JobError::Parse(*p, format!("`{k}` needs an integer"))))
                .transpose()
        };
        let count = |k: &str| -> JobResult<Option<usize>> {
            keys.get(k)
                .map(|(v, p)| v.parse::<usize>().map_err(|_| JobError::Parse(*p, format!("`{k}` needs a count"))))
                .transpose()
        };
        for (k, (_, p)) in &keys {
            if !["n", "horizon", "seed", "truncation", "count"].contains(&k.as_str()) {
                return Err(JobError::Parse(*p, format!("unknown parameter `{k}`")));
            }
        }
        let params = Params {
            horizon: count("horizon")?,
            seed: count("seed")?.map(|s| s as u64),
            truncation: count("truncation")?.map(|t| t as u32),
        };
        let arity = |k: usize| -> JobResult<()> {
            if names.len() == k {
                Ok(())
            } else {
                Err(JobError::Parse(npos, format!("`{name}` takes {k} names, got {}", names.len())))
            }
        };
        let module = |i: usize| -> JobResult<String> {
            let (w, p) = &names[i];
            self.module_ref(w, *p)?;
            Ok(w.clone())
        };
        let n = int("n")?.unwrap_or(0);
        let cmd = match name.as_str() {
            "stabilize" => {
                arity(2)?;
                Command::Stabilize { a: module(0)?, b: module(1)? }
            }
            "tor" => {
                arity(2)?;
                let n = usize::try_from(n).map_err(|_| JobError::Parse(npos, "`tor` needs n ≥ 0".into()))?;
                Command::Tor { a: module(0)?, b: module(1)?, n }
            }
            "tower" | "asymptotic" | "intertwine" | "satellite" => {
                arity(2)?;
                let (a, b) = (module(0)?, module(1)?);
                match name.as_str() {
                    "tower" => Command::Tower { a, b, n },
                    "asymptotic" => Command::Asymptotic { a, b, n },
                    "intertwine" => Command::Intertwine { a, b, n },
                    _ => Command::Satellite { a, b, n },
                }
            }
            "omega" => {
                arity(2)?;
                let (w, p) = &names[1];
                if !self.sequences.contains_key(w) {
                    return Err(JobError::UnknownName(*p, w.clone()));
                }
                Command::Omega { a: module(0)?, ses: w.clone(), n: int("n")?.unwrap_or(1) }
            }
            "vogel-roundtrip" => {
                arity(2)?;
                Command::VogelRoundtrip { a: module(0)?, b: module(1)?, n, count: count("count")?.unwrap_or(20) }
            }
            "verify-cubes" => {
                arity(0)?;
                Command::VerifyCubes { count: count("count")?.unwrap_or(25) }
            }
            "verify-all" => {
                let (a, b) = match names.len() {
                    0 => (None, None),
                    2 => (Some(module(0)?), Some(module(1)?)),
                    k => return Err(JobError::Parse(npos, format!("`verify-all` takes 0 or 2 names, got {k}"))),
                };
                Command::VerifyAll { a, b, count: count("count")?.unwrap_or(20) }
            }
            _ => return Err(JobError::Parse(npos, format!("unknown command `{name}`"))),
        };
        Ok((cmd, params))
    }
}

/// Parse and validate a job.
pub fn parse_jobspec(text: &str) -> JobResult<JobSpec> {
    let toks = lex(text)?;
    let mut b = Builder::default();
    let mut last = Pos { line: 1, col: 1 };
    for stmt in toks.split(|(t, _)| *t == Tok::End) {
        if let Some((_, p)) = stmt.last() {
            last = *p;
        }
        if stmt.is_empty() {
            continue;
        }
        let end = stmt.last().map(|t| Pos { line: t.1.line, col: t.1.col + 1 }).unwrap_or(last);
        b.statement(&mut Stmt { toks: stmt, i: 0, end })?;
    }
    let ring = b.ring.ok_or(JobError::Parse(last, "missing `ring`".into()))?;
    let (command, params) = b.command.ok_or(JobError::Parse(last, "missing `cmd`".into()))?;
    Ok(JobSpec { ring, modules: b.modules, maps: b.maps, sequences: b.sequences, command, params })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_line_jobs() {
        let j = parse_jobspec("ring Z; module A rel [[5]]; cmd stabilize A Z").unwrap();
        assert_eq!(j.command, Command::Stabilize { a: "A".into(), b: "Z".into() });
        assert_eq!(j.module("A").unwrap().to_string(), "Z/5");
        assert_eq!(j.module("Z").unwrap().to_string(), "Z");
        let j = parse_jobspec("ring Z/4; module A rel [[2]]; cmd asymptotic A A n=0").unwrap();
        assert_eq!(j.command, Command::Asymptotic { a: "A".into(), b: "A".into(), n: 0 });
    }

    #[test]
    fn rejects_bad_rings() {
        assert!(matches!(parse_jobspec("ring Z/1; cmd verify-cubes"), Err(JobError::BadRing(..))));
        assert!(matches!(parse_jobspec("ring Q; cmd verify-cubes"), Err(JobError::BadRing(..))));
    }

    #[test]
    fn errors_carry_positions() {
        let e = parse_jobspec("ring Z\nmodule A rel [[2]]\ncmd stabilize A B").unwrap_err();
        assert_eq!(e, JobError::UnknownName(Pos { line: 3, col: 17 }, "B".into()));
        let e = parse_jobspec("ring Z\nmodule A gens 2 rel [[1, 2], [3]]\ncmd stabilize A A").unwrap_err();
        assert!(matches!(e, JobError::BadMatrix(Pos { line: 2, .. }, _)), "{e}");
        let e = parse_jobspec("ring Z\nmodule A rel [[1 2]]").unwrap_err();
        assert!(matches!(e, JobError::Parse(Pos { line: 2, col: 18 }, _)), "{e}");
    }

    #[test]
    fn maps_must_be_well_defined() {
        let text = "ring Z; module A rel [[2]]; module B rel [[3]]; map f A B [[1]]; cmd stabilize A B";
        assert!(matches!(parse_jobspec(text), Err(JobError::BadMatrix(..))));
    }

    #[test]
    fn sequences_and_parameters() {
        let text = "ring Z/4\nmodule A rel [[2]]\nmap f A R [[2]]\nmap g R A [[1]]\nses S f g\ncmd omega A S n=1 horizon=4 seed=3";
        let j = parse_jobspec(text).unwrap();
        assert_eq!(j.command, Command::Omega { a: "A".into(), ses: "S".into(), n: 1 });
        assert_eq!(j.params, Params { horizon: Some(4), seed: Some(3), truncation: None });
        let bad = "ring Z/4\nmodule A rel [[2]]\nmap f A R [[2]]\nses S f f\ncmd verify-cubes";
        assert!(matches!(parse_jobspec(bad), Err(JobError::NotExact(..))));
    }

    #[test]
    fn presentations_with_several_relations() {
        let j = parse_jobspec("ring Z\nmodule A gens 2 rel [[2, 0], [0, 3]]   # Z/6\nmodule F gens 3\ncmd tor A F n=1")
            .unwrap();
        assert_eq!(j.module("A").unwrap().to_string(), "Z/6");
        assert_eq!(j.module("F").unwrap().to_string(), "Z^3");
    }
}
