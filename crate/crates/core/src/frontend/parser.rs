//! Recursive-descent parser for the threaded-program language.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::ast::{BExp, Expr, Pos, RawProgram, RawStmt, RawThread, RelOp};
use super::lexer::{tokenize, Tok, Token};
use super::FrontendError;
use crate::ir::Prim;

struct Parser {
    toks: Vec<Token>,
    at: usize,
}

type PResult<T> = Result<T, FrontendError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.at + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn pos(&self) -> Pos {
        let t = &self.toks[self.at];
        Pos { line: t.line, col: t.col }
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.at].tok.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn error<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let p = self.pos();
        Err(FrontendError::Syntax { line: p.line, col: p.col, msg: msg.into() })
    }

    fn describe(t: &Tok) -> String {
        match t {
            Tok::Ident(s) => alloc::format!("`{}`", s),
            Tok::Int(v) => alloc::format!("`{}`", v),
            Tok::Eof => "end of input".to_string(),
            other => alloc::format!("{:?}", other),
        }
    }

    fn expect(&mut self, t: Tok, what: &str) -> PResult<()> {
        if *self.peek() == t {
            self.next();
            Ok(())
        } else {
            let found = Self::describe(self.peek());
            self.error(alloc::format!("expected {}, found {}", what, found))
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn ident(&mut self, what: &str) -> PResult<(String, Pos)> {
        let p = self.pos();
        match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => {
                self.next();
                Ok((s, p))
            }
            other => self.error(alloc::format!("expected {}, found {}", what, Self::describe(&other))),
        }
    }

    fn int_literal(&mut self) -> PResult<i64> {
        let neg = if *self.peek() == Tok::Minus {
            self.next();
            true
        } else {
            false
        };
        match self.next() {
            Tok::Int(v) => Ok(if neg { -v } else { v }),
            other => self.error(alloc::format!("expected integer, found {}", Self::describe(&other))),
        }
    }

    fn program(&mut self) -> PResult<RawProgram> {
        let mut prog = RawProgram::default();
        loop {
            let p = self.pos();
            match self.peek().clone() {
                Tok::Eof => return Ok(prog),
                Tok::Ident(kw) if kw == "global" => {
                    self.next();
                    if !self.is_kw("int") {
                        return self.error("expected `int`");
                    }
                    self.next();
                    let (name, pos) = self.ident("global name")?;
                    let init = if *self.peek() == Tok::Eq {
                        self.next();
                        self.int_literal()?
                    } else {
                        0
                    };
                    self.expect(Tok::Semi, "`;`")?;
                    prog.globals.push((name, init, pos));
                }
                Tok::Ident(kw) if kw == "event" => {
                    self.next();
                    let (name, pos) = self.ident("event name")?;
                    self.expect(Tok::Semi, "`;`")?;
                    prog.events.push((name, pos));
                }
                Tok::Ident(kw) if kw == "thread" => {
                    self.next();
                    let (name, pos) = self.ident("thread name")?;
                    let body = self.block()?;
                    prog.threads.push(RawThread { name, pos, body });
                }
                Tok::Ident(kw) if kw == "function" || kw == "fn" || kw == "void" || kw == "int" => {
                    return Err(FrontendError::Semantic {
                        line: p.line,
                        col: p.col,
                        msg: "function definitions are not supported".to_string(),
                    });
                }
                other => {
                    return self.error(alloc::format!(
                        "expected `global`, `event` or `thread`, found {}",
                        Self::describe(&other)
                    ))
                }
            }
        }
    }

    fn block(&mut self) -> PResult<Vec<RawStmt>> {
        self.expect(Tok::LBrace, "`{`")?;
        let mut out = Vec::new();
        while *self.peek() != Tok::RBrace {
            if *self.peek() == Tok::Eof {
                return self.error("unexpected end of input, expected `}`");
            }
            out.push(self.stmt()?);
        }
        self.next();
        Ok(out)
    }

    fn call_arg(&mut self, prim: Prim) -> PResult<Option<(String, Pos)>> {
        self.expect(Tok::LParen, "`(`")?;
        if prim == Prim::Cooperate {
            self.expect(Tok::RParen, "`)` (cooperate takes no argument)")?;
            return Ok(None);
        }
        let p = self.pos();
        let arg = match (self.peek().clone(), self.peek_at(1).clone()) {
            (Tok::Ident(s), Tok::RParen) if !is_keyword(&s) => {
                self.next();
                (s, p)
            }
            (Tok::RParen, _) => return self.error(alloc::format!("`{}` needs an argument", prim.name())),
            _ => {
                return Err(FrontendError::NonConstantArgument { line: p.line, col: p.col, prim: prim.name() })
            }
        };
        self.expect(Tok::RParen, "`)`")?;
        Ok(Some(arg))
    }

    fn stmt(&mut self) -> PResult<RawStmt> {
        let p = self.pos();
        let Tok::Ident(word) = self.peek().clone() else {
            let found = Self::describe(self.peek());
            return self.error(alloc::format!("expected statement, found {}", found));
        };
        match word.as_str() {
            "local" => {
                self.next();
                if !self.is_kw("int") {
                    return self.error("expected `int`");
                }
                self.next();
                let (name, pos) = self.ident("local name")?;
                let init = if *self.peek() == Tok::Eq {
                    self.next();
                    self.int_literal()?
                } else {
                    0
                };
                self.expect(Tok::Semi, "`;`")?;
                Ok(RawStmt::Local { name, pos, init })
            }
            "if" => {
                self.next();
                self.expect(Tok::LParen, "`(`")?;
                let cond = self.bexp()?;
                self.expect(Tok::RParen, "`)`")?;
                let then_branch = self.block()?;
                let else_branch = if self.is_kw("else") {
                    self.next();
                    if self.is_kw("if") {
                        alloc::vec![self.stmt()?]
                    } else {
                        self.block()?
                    }
                } else {
                    Vec::new()
                };
                Ok(RawStmt::If { cond, then_branch, else_branch })
            }
            "while" => {
                self.next();
                self.expect(Tok::LParen, "`(`")?;
                let cond = self.bexp()?;
                self.expect(Tok::RParen, "`)`")?;
                let body = self.block()?;
                Ok(RawStmt::While { cond, body })
            }
            "assert" => {
                self.next();
                self.expect(Tok::LParen, "`(`")?;
                let cond = self.bexp()?;
                self.expect(Tok::RParen, "`)`")?;
                self.expect(Tok::Semi, "`;`")?;
                Ok(RawStmt::Assert { cond, pos: p })
            }
            w => {
                if let Some(prim) = Prim::from_name(w) {
                    self.next();
                    let arg = self.call_arg(prim)?;
                    self.expect(Tok::Semi, "`;`")?;
                    return Ok(RawStmt::Call { target: None, prim, arg, pos: p });
                }
                if is_keyword(w) {
                    return self.error(alloc::format!("unexpected keyword `{}`", w));
                }
                let (name, pos) = self.ident("variable")?;
                if *self.peek() == Tok::LParen {
                    return Err(FrontendError::Semantic {
                        line: pos.line,
                        col: pos.col,
                        msg: alloc::format!("call to `{}`: only primitive calls are supported", name),
                    });
                }
                self.expect(Tok::Assign, "`:=`")?;
                if *self.peek() == Tok::Star && *self.peek_at(1) == Tok::Semi {
                    self.next();
                    self.next();
                    return Ok(RawStmt::Havoc { name, pos });
                }
                if let (Tok::Ident(f), Tok::LParen) = (self.peek().clone(), self.peek_at(1).clone()) {
                    let cp = self.pos();
                    let Some(prim) = Prim::from_name(&f) else {
                        return Err(FrontendError::Semantic {
                            line: cp.line,
                            col: cp.col,
                            msg: alloc::format!("unknown primitive `{}`", f),
                        });
                    };
                    self.next();
                    let arg = self.call_arg(prim)?;
                    self.expect(Tok::Semi, "`;`")?;
                    return Ok(RawStmt::Call { target: Some((name, pos)), prim, arg, pos: cp });
                }
                let rhs = self.expr()?;
                self.expect(Tok::Semi, "`;`")?;
                Ok(RawStmt::Assign { name, pos, rhs })
            }
        }
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.next();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.next();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut lhs = self.factor()?;
        while *self.peek() == Tok::Star {
            let p = self.pos();
            self.next();
            lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?), p);
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> PResult<Expr> {
        let p = self.pos();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.next();
                Ok(Expr::Int(v))
            }
            Tok::Minus => {
                self.next();
                Ok(Expr::Neg(Box::new(self.factor()?)))
            }
            Tok::LParen => {
                self.next();
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Star => self.error("`*` is only allowed as a whole right-hand side"),
            Tok::Ident(s) if Prim::from_name(&s).is_some() => Err(FrontendError::Semantic {
                line: p.line,
                col: p.col,
                msg: alloc::format!("primitive `{}` must be the whole right-hand side", s),
            }),
            Tok::Ident(_) => {
                let (name, pos) = self.ident("expression")?;
                if *self.peek() == Tok::LParen {
                    return Err(FrontendError::Semantic {
                        line: pos.line,
                        col: pos.col,
                        msg: alloc::format!("call to `{}`: only primitive calls are supported", name),
                    });
                }
                Ok(Expr::Ident(name, pos))
            }
            other => self.error(alloc::format!("expected expression, found {}", Self::describe(&other))),
        }
    }

    fn bexp(&mut self) -> PResult<BExp> {
        let mut lhs = self.band()?;
        while *self.peek() == Tok::OrOr {
            self.next();
            lhs = BExp::Or(Box::new(lhs), Box::new(self.band()?));
        }
        Ok(lhs)
    }

    fn band(&mut self) -> PResult<BExp> {
        let mut lhs = self.bnot()?;
        while *self.peek() == Tok::AndAnd {
            self.next();
            lhs = BExp::And(Box::new(lhs), Box::new(self.bnot()?));
        }
        Ok(lhs)
    }

    fn bnot(&mut self) -> PResult<BExp> {
        if *self.peek() == Tok::Bang {
            self.next();
            return Ok(BExp::Not(Box::new(self.bnot()?)));
        }
        self.batom()
    }

    fn batom(&mut self) -> PResult<BExp> {
        if self.is_kw("true") {
            self.next();
            return Ok(BExp::Const(true));
        }
        if self.is_kw("false") {
            self.next();
            return Ok(BExp::Const(false));
        }
        if *self.peek() == Tok::LParen {
            // Either a parenthesized condition or an arithmetic operand.
            let save = self.at;
            self.next();
            if let Ok(b) = self.bexp() {
                if *self.peek() == Tok::RParen {
                    self.next();
                    if !starts_arith_or_rel(self.peek()) {
                        return Ok(b);
                    }
                }
            }
            self.at = save;
        }
        let lhs = self.expr()?;
        let op = match self.peek() {
            Tok::Lt => RelOp::Lt,
            Tok::Le => RelOp::Le,
            Tok::Eq => RelOp::Eq,
            Tok::Ne => RelOp::Ne,
            Tok::Gt => RelOp::Gt,
            Tok::Ge => RelOp::Ge,
            other => {
                let found = Self::describe(other);
                return self.error(alloc::format!("expected comparison operator, found {}", found));
            }
        };
        self.next();
        let rhs = self.expr()?;
        Ok(BExp::Rel(lhs, op, rhs))
    }
}

fn starts_arith_or_rel(t: &Tok) -> bool {
    matches!(
        t,
        Tok::Plus | Tok::Minus | Tok::Star | Tok::Lt | Tok::Le | Tok::Eq | Tok::Ne | Tok::Gt | Tok::Ge
    )
}

pub fn is_keyword(s: &str) -> bool {
    matches!(
        s,
        "global"
            | "event"
            | "thread"
            | "local"
            | "int"
            | "if"
            | "else"
            | "while"
            | "assert"
            | "true"
            | "false"
            | "await"
            | "generate"
            | "cooperate"
            | "join"
    )
}

pub fn parse_raw(src: &str) -> Result<RawProgram, FrontendError> {
    let toks = tokenize(src)?;
    Parser { toks, at: 0 }.program()
}
