use super::ast::{BinaryOp, ExprAst, Node, UnaryOp};
use super::ExprError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number `{}`", v),
            Tok::Ident(s) => format!("`{}`", s),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Caret => "`^`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            src: src.as_bytes(),
            pos: 0,
        }
    }

    fn next_tok(&mut self) -> Result<(Tok, usize), ExprError> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        if self.pos >= self.src.len() {
            return Ok((Tok::Eof, start));
        }
        let c = self.src[self.pos];
        let single = |t| Ok((t, start));
        match c {
            b'+' => {
                self.pos += 1;
                single(Tok::Plus)
            }
            b'-' => {
                self.pos += 1;
                single(Tok::Minus)
            }
            b'*' => {
                self.pos += 1;
                single(Tok::Star)
            }
            b'/' => {
                self.pos += 1;
                single(Tok::Slash)
            }
            b'^' => {
                self.pos += 1;
                single(Tok::Caret)
            }
            b'(' => {
                self.pos += 1;
                single(Tok::LParen)
            }
            b')' => {
                self.pos += 1;
                single(Tok::RParen)
            }
            b'0'..=b'9' => {
                let mut end = self.pos;
                while end < self.src.len() && self.src[end].is_ascii_digit() {
                    end += 1;
                }
                if end < self.src.len() && self.src[end] == b'.' {
                    end += 1;
                    if end >= self.src.len() || !self.src[end].is_ascii_digit() {
                        return Err(ExprError::Syntax {
                            position: end,
                            expected: "digit after decimal point".into(),
                            found: "end of number".into(),
                        });
                    }
                    while end < self.src.len() && self.src[end].is_ascii_digit() {
                        end += 1;
                    }
                }
                if end < self.src.len() && (self.src[end] == b'e' || self.src[end] == b'E') {
                    let mut e = end + 1;
                    if e < self.src.len() && (self.src[e] == b'+' || self.src[e] == b'-') {
                        e += 1;
                    }
                    if e < self.src.len() && self.src[e].is_ascii_digit() {
                        while e < self.src.len() && self.src[e].is_ascii_digit() {
                            e += 1;
                        }
                        end = e;
                    }
                }
                let text = std::str::from_utf8(&self.src[self.pos..end]).unwrap();
                let value: f64 = text.parse().map_err(|_| ExprError::Syntax {
                    position: start,
                    expected: "numeric literal".into(),
                    found: format!("`{}`", text),
                })?;
                self.pos = end;
                Ok((Tok::Num(value), start))
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let mut end = self.pos;
                while end < self.src.len()
                    && (self.src[end].is_ascii_alphanumeric() || self.src[end] == b'_')
                {
                    end += 1;
                }
                let text = std::str::from_utf8(&self.src[self.pos..end]).unwrap();
                self.pos = end;
                Ok((Tok::Ident(text.to_string()), start))
            }
            other => Err(ExprError::Syntax {
                position: start,
                expected: "operand or operator".into(),
                found: format!("`{}`", other as char),
            }),
        }
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    idx: usize,
    n: usize,
    m: usize,
}

impl Parser {
    fn peek(&self) -> &(Tok, usize) {
        &self.toks[self.idx]
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.idx].clone();
        if self.idx + 1 < self.toks.len() {
            self.idx += 1;
        }
        t
    }

    fn err_here(&self, expected: &str) -> ExprError {
        let (tok, pos) = self.peek();
        ExprError::Syntax {
            position: *pos,
            expected: expected.into(),
            found: tok.describe(),
        }
    }

    // expr := term (('+' | '-') term)*
    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().0 {
                Tok::Plus => BinaryOp::Add,
                Tok::Minus => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    // term := factor (('*' | '/') factor)*
    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek().0 {
                Tok::Star => BinaryOp::Mul,
                Tok::Slash => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    // factor := '-' factor | power
    fn factor(&mut self) -> Result<Node, ExprError> {
        if matches!(self.peek().0, Tok::Minus) {
            self.bump();
            let inner = self.factor()?;
            return Ok(Node::Unary(UnaryOp::Neg, Box::new(inner)));
        }
        self.power()
    }

    // power := primary ('^' factor)?   (right-associative)
    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.primary()?;
        if matches!(self.peek().0, Tok::Caret) {
            self.bump();
            let exponent = self.factor()?;
            return Ok(Node::Binary(
                BinaryOp::Pow,
                Box::new(base),
                Box::new(exponent),
            ));
        }
        Ok(base)
    }

    // primary := NUMBER | IDENT '(' expr ')' | IDENT | '(' expr ')'
    fn primary(&mut self) -> Result<Node, ExprError> {
        match self.peek().0.clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Node::Const(v))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                if !matches!(self.peek().0, Tok::RParen) {
                    return Err(self.err_here("`)`"));
                }
                self.bump();
                Ok(inner)
            }
            Tok::Ident(name) => {
                let (_, pos) = self.bump();
                if let Some(func) = function_of(&name) {
                    if !matches!(self.peek().0, Tok::LParen) {
                        return Err(self.err_here("`(` after function name"));
                    }
                    self.bump();
                    let arg = self.expr()?;
                    if !matches!(self.peek().0, Tok::RParen) {
                        return Err(self.err_here("`)`"));
                    }
                    self.bump();
                    return Ok(Node::Unary(func, Box::new(arg)));
                }
                self.variable(&name, pos)
            }
            _ => Err(self.err_here("number, variable, function, or `(`")),
        }
    }

    fn variable(&mut self, name: &str, pos: usize) -> Result<Node, ExprError> {
        let (kind, digits) = match name.as_bytes().first() {
            Some(b'x') => ('x', &name[1..]),
            Some(b'u') => ('u', &name[1..]),
            _ => {
                return Err(ExprError::UnknownSymbol {
                    name: name.to_string(),
                    position: pos,
                })
            }
        };
        let index: usize = match digits.parse() {
            Ok(i) => i,
            Err(_) => {
                return Err(ExprError::UnknownSymbol {
                    name: name.to_string(),
                    position: pos,
                })
            }
        };
        let dim = if kind == 'x' { self.n } else { self.m };
        if index == 0 || index > dim {
            return Err(ExprError::Dimension {
                name: name.to_string(),
                index,
                dim,
            });
        }
        Ok(if kind == 'x' {
            Node::StateVar(index - 1)
        } else {
            Node::ControlVar(index - 1)
        })
    }
}

fn function_of(name: &str) -> Option<UnaryOp> {
    match name {
        "sin" => Some(UnaryOp::Sin),
        "cos" => Some(UnaryOp::Cos),
        "exp" => Some(UnaryOp::Exp),
        "tanh" => Some(UnaryOp::Tanh),
        "sqrt" => Some(UnaryOp::Sqrt),
        _ => None,
    }
}

/// Parse a single expression over `x1..xn` and `u1..um`.
///
/// The grammar admits `+ - * / ^`, parentheses, and the smooth functions
/// `sin cos exp tanh sqrt` (see docs/expressions.md). Non-smooth
/// primitives are deliberately absent.
pub fn parse_expression(source: &str, n: usize, m: usize) -> Result<ExprAst, ExprError> {
    let mut lexer = Lexer::new(source);
    let mut toks = Vec::new();
    loop {
        let t = lexer.next_tok()?;
        let done = matches!(t.0, Tok::Eof);
        toks.push(t);
        if done {
            break;
        }
    }
    let mut parser = Parser { toks, idx: 0, n, m };
    let root = parser.expr()?;
    if !matches!(parser.peek().0, Tok::Eof) {
        return Err(parser.err_here("operator or end of input"));
    }
    Ok(ExprAst { root, n, m })
}
