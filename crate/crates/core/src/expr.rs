//! Player expressions.
//!
//! ```text
//! expr ::= base | "hedge" "(" expr ("," expr)+ ")"      first argument is the top
//! base ::= name ("+w")? ("+s")? ("{" key "=" number ("," key "=" number)* "}")?
//! ```
//!
//! plus the named hedges `HSUGS`, `HSUM`, `HHUMM`, `HHHUMM`, `HHUMMM` and
//! `HSSS`. Whitespace is ignored; names are case-sensitive.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::hedging::{validate_hedge_spec, DEFAULT_MAX_DEPTH};
use crate::players::{Algorithm, BaseSpec, InformationNeeds};

#[derive(Debug, Clone, PartialEq)]
pub enum PlayerSpec {
    Base(BaseSpec),
    Hedge {
        top: Box<PlayerSpec>,
        experts: Vec<PlayerSpec>,
    },
}

impl PlayerSpec {
    pub fn base(algorithm: Algorithm) -> Self {
        PlayerSpec::Base(BaseSpec::plain(algorithm))
    }

    pub fn hedge(top: PlayerSpec, experts: Vec<PlayerSpec>) -> Self {
        PlayerSpec::Hedge {
            top: Box::new(top),
            experts,
        }
    }

    /// Nesting level: 0 for a basic player, 1 for a hedge over basic
    /// players, and so on.
    pub fn depth(&self) -> usize {
        match self {
            PlayerSpec::Base(_) => 0,
            PlayerSpec::Hedge { experts, .. } => {
                1 + experts.iter().map(PlayerSpec::depth).max().unwrap_or(0)
            }
        }
    }

    /// Information the whole tree needs from the environment. The top of a
    /// hedge only ever sees rewards, so only experts contribute.
    pub fn needs(&self) -> InformationNeeds {
        match self {
            PlayerSpec::Base(b) => b.needs(),
            PlayerSpec::Hedge { experts, .. } => experts
                .iter()
                .fold(InformationNeeds::REWARD_ONLY, |acc, e| acc.union(e.needs())),
        }
    }
}

impl fmt::Display for PlayerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlayerSpec::Base(b) => {
                f.write_str(b.algorithm.name())?;
                if b.window {
                    f.write_str("+w")?;
                }
                if b.state {
                    f.write_str("+s")?;
                }
                if !b.params.is_empty() {
                    f.write_str("{")?;
                    for (i, (k, v)) in b.params.iter().enumerate() {
                        if i > 0 {
                            f.write_str(",")?;
                        }
                        write!(f, "{k}={v}")?;
                    }
                    f.write_str("}")?;
                }
                Ok(())
            }
            PlayerSpec::Hedge { top, experts } => {
                write!(f, "hedge({top}")?;
                for e in experts {
                    write!(f, ",{e}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Named hedges and the expressions they stand for.
pub const ALIASES: [(&str, &str); 6] = [
    ("HSUGS", "hedge(S,U,G,S)"),
    ("HSUM", "hedge(S,U,M3)"),
    ("HHUMM", "hedge(S,hedge(S,U,M3),M3)"),
    ("HHHUMM", "hedge(S,hedge(S,hedge(S,U,M3),M3),M3)"),
    ("HHUMMM", "hedge(S,hedge(S,U,M3),M3,M3)"),
    ("HSSS", "hedge(S,S,S)"),
];

pub fn parse_player_expr(text: &str) -> Result<PlayerSpec> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    let spec = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(spec)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected `{}`", c as char)))
        }
    }

    fn ident(&mut self) -> Result<(usize, &'a str)> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected a name"));
        }
        // ascii only, so always valid utf-8
        let src: &'a [u8] = self.src;
        Ok((start, std::str::from_utf8(&src[start..self.pos]).unwrap()))
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        let mut prev = 0u8;
        while let Some(&c) = self.src.get(self.pos) {
            let sign_ok =
                (c == b'+' || c == b'-') && (self.pos == start || matches!(prev, b'e' | b'E'));
            if c.is_ascii_digit() || c == b'.' || c == b'e' || c == b'E' || sign_ok {
                prev = c;
                self.pos += 1;
            } else {
                break;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(Error::Parse {
                pos: start,
                msg: format!("invalid number `{text}`"),
            }),
        }
    }

    fn expr(&mut self) -> Result<PlayerSpec> {
        let (start, name) = self.ident()?;
        if name == "hedge" {
            return self.hedge(start);
        }
        if let Some((_, expansion)) = ALIASES.iter().find(|(alias, _)| *alias == name) {
            if matches!(self.peek(), Some(b'+' | b'{')) {
                return Err(self.error(format!("`{name}` is a hedge and takes no modifiers")));
            }
            return parse_player_expr(expansion);
        }
        let algorithm = Algorithm::from_name(name).ok_or(Error::Parse {
            pos: start,
            msg: format!("unknown player `{name}`"),
        })?;
        let mut base = BaseSpec::plain(algorithm);
        let mut seen_state = false;
        while self.peek() == Some(b'+') {
            self.pos += 1;
            let (at, modifier) = self.ident()?;
            match modifier {
                "w" if !base.window && !seen_state => base.window = true,
                "s" if !seen_state => {
                    base.state = true;
                    seen_state = true;
                }
                _ => {
                    return Err(Error::Parse {
                        pos: at,
                        msg: format!("unexpected modifier `+{modifier}` (expected +w then +s)"),
                    })
                }
            }
        }
        if self.peek() == Some(b'{') {
            self.pos += 1;
            base.params = self.params()?;
        }
        base.validate().map_err(|e| Error::Parse {
            pos: start,
            msg: e.to_string(),
        })?;
        Ok(PlayerSpec::Base(base))
    }

    fn params(&mut self) -> Result<BTreeMap<String, f64>> {
        let mut params = BTreeMap::new();
        loop {
            let (at, key) = self.ident()?;
            let key = key.to_owned();
            self.expect(b'=')?;
            let value = self.number()?;
            if params.insert(key.clone(), value).is_some() {
                return Err(Error::Parse {
                    pos: at,
                    msg: format!("duplicate parameter `{key}`"),
                });
            }
            match self.peek() {
                Some(b',') => self.pos += 1,
                Some(b'}') => {
                    self.pos += 1;
                    return Ok(params);
                }
                _ => return Err(self.error("expected `,` or `}`")),
            }
        }
    }

    fn hedge(&mut self, start: usize) -> Result<PlayerSpec> {
        self.expect(b'(')?;
        let top = self.expr()?;
        let mut experts = Vec::new();
        loop {
            match self.peek() {
                Some(b',') => {
                    self.pos += 1;
                    experts.push(self.expr()?);
                }
                Some(b')') => {
                    self.pos += 1;
                    break;
                }
                _ => return Err(self.error("expected `,` or `)`")),
            }
        }
        let spec = PlayerSpec::hedge(top, experts);
        validate_hedge_spec(&spec, DEFAULT_MAX_DEPTH).map_err(|e| Error::Parse {
            pos: start,
            msg: e.to_string(),
        })?;
        Ok(spec)
    }
}
