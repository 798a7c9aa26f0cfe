//! Tiny closed-form expression language for lapse and shift fields.
//!
//! Grammar: numeric constants, `pi`, the binary operators `+ - * /`, unary
//! minus, parentheses, the functions `sin` and `cos`, and a fixed set of
//! coordinate variables (`x` on the circle, `x1`/`x2` on tori, `z` on
//! embedded surfaces). Evaluation is generic over dual numbers so that
//! derivatives of fields come for free.

use std::fmt;

use thiserror::Error;

use crate::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("unexpected character '{ch}' at offset {pos} in `{src}`")]
    UnexpectedChar { ch: char, pos: usize, src: String },
    #[error("unexpected end of expression `{0}`")]
    UnexpectedEnd(String),
    #[error("unknown identifier `{name}` in `{src}`")]
    UnknownIdent { name: String, src: String },
    #[error("variable `{name}` is not available for this model (allowed: {allowed})")]
    VariableNotAllowed { name: String, allowed: String },
    #[error("trailing input after position {pos} in `{src}`")]
    Trailing { pos: usize, src: String },
    #[error("invalid number `{0}`")]
    BadNumber(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    X,
    X1,
    X2,
    Z,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::X1 => "x1",
            Var::X2 => "x2",
            Var::Z => "z",
        }
    }

    fn from_name(name: &str) -> Option<Var> {
        match name {
            "x" => Some(Var::X),
            "x1" => Some(Var::X1),
            "x2" => Some(Var::X2),
            "z" => Some(Var::Z),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func {
    Sin,
    Cos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Const(f64),
    Pi,
    Var(Var),
    Neg(Box<Node>),
    Call(Func, Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
}

/// A parsed closed-form scalar field.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    root: Node,
}

impl Expr {
    /// Parses `src`, accepting only the variables listed in `allowed`.
    pub fn parse(src: &str, allowed: &[Var]) -> Result<Expr, ExprError> {
        let tokens = tokenize(src)?;
        let mut parser = Parser {
            tokens: &tokens,
            pos: 0,
            src,
            allowed,
        };
        let root = parser.expr()?;
        if parser.pos != tokens.len() {
            return Err(ExprError::Trailing {
                pos: parser.pos,
                src: src.to_string(),
            });
        }
        Ok(Expr { root })
    }

    pub fn constant(value: f64) -> Expr {
        Expr {
            root: Node::Const(value),
        }
    }

    /// Evaluates with `env` supplying variable values.
    pub fn eval<T: Scalar>(&self, env: &impl Fn(Var) -> T) -> T {
        eval_node(&self.root, env)
    }

    pub fn eval_f64(&self, env: &impl Fn(Var) -> f64) -> f64 {
        self.eval(env)
    }

    /// Returns the value if the expression references no variables.
    pub fn constant_value(&self) -> Option<f64> {
        if self.uses_variables() {
            None
        } else {
            Some(self.eval_f64(&|_| 0.0))
        }
    }

    pub fn uses_variables(&self) -> bool {
        fn walk(node: &Node) -> bool {
            match node {
                Node::Const(_) | Node::Pi => false,
                Node::Var(_) => true,
                Node::Neg(a) | Node::Call(_, a) => walk(a),
                Node::Bin(_, a, b) => walk(a) || walk(b),
            }
        }
        walk(&self.root)
    }
}

fn eval_node<T: Scalar>(node: &Node, env: &impl Fn(Var) -> T) -> T {
    match node {
        Node::Const(c) => T::from(*c),
        Node::Pi => T::from(std::f64::consts::PI),
        Node::Var(v) => env(*v),
        Node::Neg(a) => -eval_node(a, env),
        Node::Call(Func::Sin, a) => eval_node(a, env).sin(),
        Node::Call(Func::Cos, a) => eval_node(a, env).cos(),
        Node::Bin(op, a, b) => {
            let a = eval_node(a, env);
            let b = eval_node(b, env);
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => a / b,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

fn tokenize(src: &str) -> Result<Vec<Token>, ExprError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            // exponent part
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let value = text
                .parse::<f64>()
                .map_err(|_| ExprError::BadNumber(text.clone()))?;
            out.push(Token::Num(value));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token::Ident(chars[start..i].iter().collect()));
        } else if "+-*/".contains(c) {
            out.push(Token::Op(c));
            i += 1;
        } else if c == '(' {
            out.push(Token::LParen);
            i += 1;
        } else if c == ')' {
            out.push(Token::RParen);
            i += 1;
        } else {
            return Err(ExprError::UnexpectedChar {
                ch: c,
                pos: i,
                src: src.to_string(),
            });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    src: &'a str,
    allowed: &'a [Var],
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Result<Token, ExprError> {
        let tok = self
            .tokens
            .get(self.pos)
            .cloned()
            .ok_or_else(|| ExprError::UnexpectedEnd(self.src.to_string()))?;
        self.pos += 1;
        Ok(tok)
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        while let Some(Token::Op(c @ ('+' | '-'))) = self.peek() {
            let op = if *c == '+' { BinOp::Add } else { BinOp::Sub };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.factor()?;
        while let Some(Token::Op(c @ ('*' | '/'))) = self.peek() {
            let op = if *c == '*' { BinOp::Mul } else { BinOp::Div };
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Node, ExprError> {
        match self.peek() {
            Some(Token::Op('-')) => {
                self.pos += 1;
                Ok(Node::Neg(Box::new(self.factor()?)))
            }
            Some(Token::Op('+')) => {
                self.pos += 1;
                self.factor()
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Node, ExprError> {
        let pos = self.pos;
        match self.next()? {
            Token::Num(v) => Ok(Node::Const(v)),
            Token::LParen => {
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Token::Ident(name) => {
                if name == "pi" {
                    return Ok(Node::Pi);
                }
                if let Some(func) = match name.as_str() {
                    "sin" => Some(Func::Sin),
                    "cos" => Some(Func::Cos),
                    _ => None,
                } {
                    match self.next()? {
                        Token::LParen => {}
                        _ => return Err(self.unexpected(pos)),
                    }
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(Node::Call(func, Box::new(arg)));
                }
                match Var::from_name(&name) {
                    Some(v) if self.allowed.contains(&v) => Ok(Node::Var(v)),
                    Some(_) => Err(ExprError::VariableNotAllowed {
                        name,
                        allowed: self
                            .allowed
                            .iter()
                            .map(|v| v.name())
                            .collect::<Vec<_>>()
                            .join(", "),
                    }),
                    None => Err(ExprError::UnknownIdent {
                        name,
                        src: self.src.to_string(),
                    }),
                }
            }
            Token::Op(c) => Err(ExprError::UnexpectedChar {
                ch: c,
                pos,
                src: self.src.to_string(),
            }),
            Token::RParen => Err(ExprError::UnexpectedChar {
                ch: ')',
                pos,
                src: self.src.to_string(),
            }),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ExprError> {
        let pos = self.pos;
        match self.next()? {
            Token::RParen => Ok(()),
            _ => Err(self.unexpected(pos)),
        }
    }

    fn unexpected(&self, pos: usize) -> ExprError {
        ExprError::Trailing {
            pos,
            src: self.src.to_string(),
        }
    }
}

fn precedence(node: &Node) -> u8 {
    match node {
        Node::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
        Node::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
        Node::Neg(_) => 3,
        _ => 4,
    }
}

fn write_node(node: &Node, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match node {
        Node::Const(c) => {
            if *c < 0.0 {
                write!(f, "({c:?})")
            } else {
                write!(f, "{c:?}")
            }
        }
        Node::Pi => write!(f, "pi"),
        Node::Var(v) => write!(f, "{}", v.name()),
        Node::Neg(a) => {
            write!(f, "-")?;
            write_operand(a, 3, false, f)
        }
        Node::Call(func, a) => {
            let name = match func {
                Func::Sin => "sin",
                Func::Cos => "cos",
            };
            write!(f, "{name}(")?;
            write_node(a, f)?;
            write!(f, ")")
        }
        Node::Bin(op, a, b) => {
            let (sym, prec) = match op {
                BinOp::Add => ("+", 1),
                BinOp::Sub => ("-", 1),
                BinOp::Mul => ("*", 2),
                BinOp::Div => ("/", 2),
            };
            write_operand(a, prec, false, f)?;
            write!(f, " {sym} ")?;
            // right operand of - and / needs parentheses at equal precedence
            let strict = matches!(op, BinOp::Sub | BinOp::Div);
            write_operand(b, prec, strict, f)
        }
    }
}

fn write_operand(node: &Node, prec: u8, strict: bool, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let p = precedence(node);
    if p < prec || (strict && p == prec) {
        write!(f, "(")?;
        write_node(node, f)?;
        write!(f, ")")
    } else {
        write_node(node, f)
    }
}

/// Canonical text form; reparsing it yields an identical tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(&self.root, f)
    }
}
