//! `n`-dependent rate expressions for CTMC leave rates.
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! expr  := coeff | [coeff '*'] base
//! base  := 'n' | 'sqrt(n)' | 'cbrt(n)' | 'log(n)' | 'n^' exponent
//! exponent := rational | '(' rational ')'
//! rational := number ['/' number]
//! coeff := positive decimal
//! ```
//!
//! `log` is the natural logarithm.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateBase {
    Constant,
    Linear,
    Sqrt,
    Cbrt,
    Log,
    Power(f64),
}

/// A parsed rate expression `coeff * base(n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateExpr {
    coeff: f64,
    base: RateBase,
    text: String,
}

impl RateExpr {
    pub fn constant(value: f64) -> Self {
        RateExpr {
            coeff: value,
            base: RateBase::Constant,
            text: format_number(value),
        }
    }

    pub fn coeff(&self) -> f64 {
        self.coeff
    }

    pub fn base(&self) -> RateBase {
        self.base
    }

    pub fn is_constant(&self) -> bool {
        self.base == RateBase::Constant
    }

    pub fn eval(&self, n: usize) -> f64 {
        let x = n as f64;
        let b = match self.base {
            RateBase::Constant => 1.0,
            RateBase::Linear => x,
            RateBase::Sqrt => x.sqrt(),
            RateBase::Cbrt => x.cbrt(),
            RateBase::Log => x.ln(),
            RateBase::Power(p) => x.powf(p),
        };
        self.coeff * b
    }
}

fn format_number(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

impl fmt::Display for RateExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl FromStr for RateExpr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_rate_expr(s)
    }
}

impl Serialize for RateExpr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.text)
    }
}

impl<'de> Deserialize<'de> for RateExpr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Number(f64),
        }
        let text = match Raw::deserialize(d)? {
            Raw::Text(t) => t,
            Raw::Number(v) => format_number(v),
        };
        parse_rate_expr(&text).map_err(serde::de::Error::custom)
    }
}

struct Cursor<'a> {
    input: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn err(&self, position: usize, message: impl Into<String>) -> Error {
        Error::RateExpr {
            input: self.input.to_string(),
            position,
            message: message.into(),
        }
    }

    fn rest(&self) -> &'a str {
        &self.input[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.input.len() - trimmed.len();
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(self.pos, format!("expected '{c}', found {}", self.describe_next())))
        }
    }

    fn describe_next(&self) -> String {
        match self.peek() {
            None => "end of input".to_string(),
            Some(c) if c.is_ascii_alphabetic() => format!("token {:?}", self.word()),
            Some(c) => format!("{c:?}"),
        }
    }

    fn word(&self) -> &'a str {
        let rest = self.rest();
        let end = rest
            .find(|c: char| !c.is_ascii_alphanumeric() && c != '_')
            .unwrap_or(rest.len());
        &rest[..end]
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        let rest = self.rest();
        let mut end = 0;
        for (i, c) in rest.char_indices() {
            let sign_ok = i == 0 && (c == '-' || c == '+');
            if c.is_ascii_digit() || c == '.' || sign_ok {
                end = i + 1;
            } else {
                break;
            }
        }
        let text = &rest[..end];
        let value = text
            .parse::<f64>()
            .map_err(|_| self.err(start, format!("expected a number, found {}", self.describe_next())))?;
        self.pos += end;
        Ok(value)
    }

    fn rational(&mut self) -> Result<f64> {
        let start = self.pos;
        let num = self.number()?;
        if self.eat('/') {
            let den = self.number()?;
            if den == 0.0 {
                return Err(self.err(start, "zero denominator in exponent"));
            }
            Ok(num / den)
        } else {
            Ok(num)
        }
    }

    fn base(&mut self) -> Result<RateBase> {
        self.skip_ws();
        let start = self.pos;
        let word = self.word();
        match word {
            "n" => {
                self.pos += 1;
                if self.eat('^') {
                    let exp = if self.eat('(') {
                        let e = self.rational()?;
                        self.expect(')')?;
                        e
                    } else {
                        self.rational()?
                    };
                    Ok(RateBase::Power(exp))
                } else {
                    Ok(RateBase::Linear)
                }
            }
            "sqrt" | "cbrt" | "log" => {
                self.pos += word.len();
                self.expect('(')?;
                self.skip_ws();
                if self.word() != "n" {
                    return Err(self.err(self.pos, format!("expected 'n', found {}", self.describe_next())));
                }
                self.pos += 1;
                self.expect(')')?;
                Ok(match word {
                    "sqrt" => RateBase::Sqrt,
                    "cbrt" => RateBase::Cbrt,
                    _ => RateBase::Log,
                })
            }
            "" => Err(self.err(start, format!("expected a rate base, found {}", self.describe_next()))),
            other => Err(self.err(start, format!("unknown token {other:?}"))),
        }
    }
}

/// Parses a rate expression such as `"1"`, `"sqrt(n)"` or `"2*n^(1/3)"`.
pub fn parse_rate_expr(text: &str) -> Result<RateExpr> {
    let mut cur = Cursor { input: text, pos: 0 };
    cur.skip_ws();
    let starts_numeric = matches!(cur.peek(), Some(c) if c.is_ascii_digit() || c == '.' || c == '-' || c == '+');
    let (coeff, base) = if starts_numeric {
        let start = cur.pos;
        let coeff = cur.number()?;
        if !(coeff > 0.0 && coeff.is_finite()) {
            return Err(cur.err(start, format!("coefficient must be positive, got {coeff}")));
        }
        cur.skip_ws();
        if cur.peek().is_none() {
            (coeff, RateBase::Constant)
        } else {
            cur.expect('*')?;
            (coeff, cur.base()?)
        }
    } else {
        (1.0, cur.base()?)
    };
    cur.skip_ws();
    if cur.peek().is_some() {
        return Err(cur.err(cur.pos, format!("unexpected trailing {}", cur.describe_next())));
    }
    Ok(RateExpr {
        coeff,
        base,
        text: text.trim().to_string(),
    })
}
