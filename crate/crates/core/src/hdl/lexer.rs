use super::ast::{Base, Span};
use super::error::HdlError;

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Ident(String),
    /// `$signed` and friends, without the dollar.
    System(String),
    Number {
        width: Option<u32>,
        signed: bool,
        base: Base,
        value: u64,
    },
    Sym(&'static str),
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::System(s) => format!("`${s}`"),
            Tok::Number { value, .. } => format!("number {value}"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

const SYMBOLS: &[&str] = &[
    ">>>", "<<<", "===", "!==", "~&", "~|", "~^", "^~", "==", "!=", "<=", ">=", "<<", ">>", "&&",
    "||", "+:", "-:", "[*]", "(", ")", "[", "]", "{", "}", ";", ",", ":", ".", "#", "@", "=", "<",
    ">", "?", "+", "-", "*", "/", "%", "~", "!", "&", "|", "^",
];

pub fn tokenize(src: &str) -> Result<Vec<Token>, HdlError> {
    Lexer {
        bytes: src.as_bytes(),
        src,
        pos: 0,
        line: 1,
        col: 1,
    }
    .run()
}

struct Lexer<'a> {
    bytes: &'a [u8],
    src: &'a str,
    pos: usize,
    line: u32,
    col: u32,
}

impl<'a> Lexer<'a> {
    fn peek(&self, off: usize) -> u8 {
        self.bytes.get(self.pos + off).copied().unwrap_or(0)
    }

    fn bump(&mut self) {
        if self.peek(0) == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        self.pos += 1;
    }

    fn span(&self) -> Span {
        Span::new(self.line, self.col)
    }

    fn run(mut self) -> Result<Vec<Token>, HdlError> {
        let mut out = Vec::new();
        loop {
            self.skip_trivia()?;
            let span = self.span();
            let c = self.peek(0);
            if c == 0 {
                out.push(Token { tok: Tok::Eof, span });
                return Ok(out);
            }
            let tok = if c.is_ascii_alphabetic() || c == b'_' {
                Tok::Ident(self.word())
            } else if c == b'$' {
                self.bump();
                Tok::System(self.word())
            } else if c.is_ascii_digit() || (c == b'\'' && self.peek(1) != 0) {
                self.number(span)?
            } else if c == b'`' {
                return Err(HdlError::unsupported(span, "compiler directive"));
            } else if c == b'"' {
                return Err(HdlError::unsupported(span, "string literal"));
            } else if c == b'\\' {
                return Err(HdlError::unsupported(span, "escaped identifier"));
            } else {
                let rest = &self.src[self.pos..];
                let sym = SYMBOLS
                    .iter()
                    .find(|s| rest.starts_with(**s))
                    // `[*]` is only a token in the temporal layer; `a[*]` never
                    // occurs in expressions, so lexing it eagerly is harmless
                    .ok_or_else(|| HdlError::Syntax {
                        span,
                        expected: vec!["token".into()],
                        found: format!("`{}`", c as char),
                    })?;
                for _ in 0..sym.len() {
                    self.bump();
                }
                Tok::Sym(sym)
            };
            out.push(Token { tok, span });
        }
    }

    fn skip_trivia(&mut self) -> Result<(), HdlError> {
        loop {
            match (self.peek(0), self.peek(1)) {
                (c, _) if c.is_ascii_whitespace() => self.bump(),
                (b'/', b'/') => {
                    while self.peek(0) != b'\n' && self.peek(0) != 0 {
                        self.bump();
                    }
                }
                (b'/', b'*') => {
                    let span = self.span();
                    self.bump();
                    self.bump();
                    while !(self.peek(0) == b'*' && self.peek(1) == b'/') {
                        if self.peek(0) == 0 {
                            return Err(HdlError::Syntax {
                                span,
                                expected: vec!["`*/`".into()],
                                found: "end of input".into(),
                            });
                        }
                        self.bump();
                    }
                    self.bump();
                    self.bump();
                }
                _ => return Ok(()),
            }
        }
    }

    fn word(&mut self) -> String {
        let start = self.pos;
        while matches!(self.peek(0), b'a'..=b'z' | b'A'..=b'Z' | b'0'..=b'9' | b'_' | b'$') {
            self.bump();
        }
        self.src[start..self.pos].to_string()
    }

    fn digits(&mut self, allow_hex: bool) -> String {
        let mut s = String::new();
        loop {
            let c = self.peek(0);
            let ok = c.is_ascii_digit()
                || c == b'_'
                || (allow_hex && (c.is_ascii_hexdigit() || matches!(c, b'x' | b'X' | b'z' | b'Z' | b'?')));
            if !ok {
                return s;
            }
            if c != b'_' {
                s.push(c as char);
            }
            self.bump();
        }
    }

    fn number(&mut self, span: Span) -> Result<Tok, HdlError> {
        let mut width = None;
        if self.peek(0) != b'\'' {
            let text = self.digits(false);
            if self.peek(0) != b'\'' {
                let value = text.parse::<u64>().map_err(|_| HdlError::Syntax {
                    span,
                    expected: vec!["number below 2^64".into()],
                    found: text.clone(),
                })?;
                return Ok(Tok::Number {
                    width: None,
                    signed: false,
                    base: Base::Dec,
                    value,
                });
            }
            let w: u32 = text.parse().unwrap_or(0);
            if w == 0 || w > 64 {
                return Err(HdlError::unsupported(span, format!("literal width {text}")));
            }
            width = Some(w);
        }
        self.bump(); // the quote
        let mut signed = false;
        if matches!(self.peek(0), b's' | b'S') {
            signed = true;
            self.bump();
        }
        let base = match self.peek(0).to_ascii_lowercase() {
            b'b' => Base::Bin,
            b'o' => Base::Oct,
            b'd' => Base::Dec,
            b'h' => Base::Hex,
            _ => {
                return Err(HdlError::Syntax {
                    span,
                    expected: vec!["base specifier b/o/d/h".into()],
                    found: format!("`{}`", self.peek(0) as char),
                })
            }
        };
        self.bump();
        let text = self.digits(true);
        if text.is_empty() {
            return Err(HdlError::Syntax {
                span,
                expected: vec!["digits".into()],
                found: format!("`{}`", self.peek(0) as char),
            });
        }
        if text.chars().any(|c| matches!(c, 'x' | 'X' | 'z' | 'Z' | '?')) {
            return Err(HdlError::unsupported(span, "x/z literal (two-valued semantics only)"));
        }
        let radix = match base {
            Base::Bin => 2,
            Base::Oct => 8,
            Base::Dec => 10,
            Base::Hex => 16,
        };
        let value = u64::from_str_radix(&text, radix).map_err(|_| HdlError::Syntax {
            span,
            expected: vec![format!("base-{radix} digits")],
            found: text.clone(),
        })?;
        let w = width.unwrap_or(32);
        if w < 64 && value >> w != 0 {
            return Err(HdlError::elab(span, format!("literal value {value} does not fit in {w} bits")));
        }
        Ok(Tok::Number {
            width,
            signed,
            base,
            value,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sized_literals_and_symbols() {
        let toks = tokenize("a <= 8'hF_f >>> 2; // c\n/* x */ b").unwrap();
        let kinds: Vec<Tok> = toks.into_iter().map(|t| t.tok).collect();
        assert_eq!(
            kinds,
            vec![
                Tok::Ident("a".into()),
                Tok::Sym("<="),
                Tok::Number {
                    width: Some(8),
                    signed: false,
                    base: Base::Hex,
                    value: 255
                },
                Tok::Sym(">>>"),
                Tok::Number {
                    width: None,
                    signed: false,
                    base: Base::Dec,
                    value: 2
                },
                Tok::Sym(";"),
                Tok::Ident("b".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn rejects_four_valued_literals() {
        let err = tokenize("x = 4'b10x1;").unwrap_err();
        assert!(matches!(err, HdlError::Unsupported { .. }), "{err}");
    }

    #[test]
    fn tracks_positions() {
        let toks = tokenize("a\n  b").unwrap();
        assert_eq!((toks[1].span.line, toks[1].span.col), (2, 3));
    }
}
