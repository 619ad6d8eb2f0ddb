//! Model structure strings: `L<depth>M<width>_<act>` or `L<depth>M(<w1>,…,<wL>)_<act>`,
//! e.g. `L6M100_T` or `L3M(32,128,16)_S`. `T` is tanh, `S` sigmoid.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::activation::Activation;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Structure {
    pub widths: Vec<usize>,
    pub activation: Activation,
}

struct Cursor<'a> {
    input: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn fail(&self, message: impl Into<String>) -> Error {
        Error::Structure {
            input: self.input.to_string(),
            position: self.pos,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.input[self.pos..].chars().next()
    }

    fn expect(&mut self, c: char) -> Result<()> {
        match self.peek() {
            Some(found) if found == c => {
                self.pos += c.len_utf8();
                Ok(())
            }
            Some(found) => Err(self.fail(format!("expected '{c}', found '{found}'"))),
            None => Err(self.fail(format!("expected '{c}', found end of input"))),
        }
    }

    fn number(&mut self) -> Result<usize> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(match self.peek() {
                Some(c) => self.fail(format!("expected a number, found '{c}'")),
                None => self.fail("expected a number, found end of input"),
            });
        }
        let at = Cursor { input: self.input, pos: start };
        let value: usize = self.input[start..self.pos]
            .parse()
            .map_err(|_| at.fail("number out of range"))?;
        if value == 0 {
            return Err(at.fail("must be positive"));
        }
        Ok(value)
    }
}

impl FromStr for Structure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut cur = Cursor { input: s, pos: 0 };
        cur.expect('L')?;
        let depth_at = cur.pos;
        let depth = cur.number()?;
        cur.expect('M')?;
        let widths = if cur.peek() == Some('(') {
            cur.expect('(')?;
            let mut widths = vec![cur.number()?];
            while cur.peek() == Some(',') {
                cur.expect(',')?;
                widths.push(cur.number()?);
            }
            cur.expect(')')?;
            if widths.len() != depth {
                let at = Cursor { input: s, pos: depth_at };
                return Err(at.fail(format!("depth {depth} but {} widths listed", widths.len())));
            }
            widths
        } else {
            vec![cur.number()?; depth]
        };
        cur.expect('_')?;
        let activation = match cur.peek() {
            Some('T') => Activation::Tanh,
            Some('S') => Activation::Sigmoid,
            Some(c) => return Err(cur.fail(format!("unknown activation '{c}', expected T or S"))),
            None => return Err(cur.fail("missing activation, expected T or S")),
        };
        cur.pos += 1;
        if cur.pos != s.len() {
            return Err(cur.fail("trailing characters"));
        }
        Ok(Structure { widths, activation })
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let act = match self.activation {
            Activation::Tanh => "T",
            Activation::Sigmoid => "S",
            Activation::Identity => "I",
        };
        let depth = self.widths.len();
        if self.widths.iter().all(|&w| w == self.widths[0]) {
            write!(f, "L{depth}M{}_{act}", self.widths[0])
        } else {
            let list: Vec<String> = self.widths.iter().map(usize::to_string).collect();
            write!(f, "L{depth}M({})_{act}", list.join(","))
        }
    }
}

impl Structure {
    pub fn hidden_neurons(&self) -> usize {
        self.widths.iter().sum()
    }
}
