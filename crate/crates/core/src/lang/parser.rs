use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::{LangError, Span};

pub fn parse_program(source: &str) -> Result<AssetProgram, LangError> {
    let tokens = tokenize(source)?;
    let mut p = Parser { tokens, pos: 0 };
    let mut build: Option<Block> = None;
    let mut tests: Option<Block> = None;
    loop {
        let tok = p.peek().clone();
        match &tok.tok {
            Tok::Eof => break,
            Tok::Ident(k) if k == "build" => {
                if build.is_some() {
                    return Err(LangError::syntax("duplicate build block", tok.span));
                }
                if tests.is_some() {
                    return Err(LangError::syntax("build block must come before the tests block", tok.span));
                }
                p.advance();
                build = Some(p.block(false)?);
            }
            Tok::Ident(k) if k == "tests" => {
                if build.is_none() {
                    return Err(LangError::syntax("tests block appears before the build block", tok.span));
                }
                if tests.is_some() {
                    return Err(LangError::syntax("duplicate tests block", tok.span));
                }
                p.advance();
                tests = Some(p.block(true)?);
            }
            other => {
                return Err(LangError::syntax(
                    format!("expected 'build' or 'tests', found {}", other.describe()),
                    tok.span,
                ))
            }
        }
    }
    let build = build.ok_or_else(|| LangError::syntax("program has no build block", p.peek().span))?;
    Ok(AssetProgram {
        source: source.to_string(),
        build,
        tests,
    })
}

/// Parses a single expression, as used by probe queries.
pub fn parse_expression(source: &str) -> Result<Expr, LangError> {
    let tokens = tokenize(source)?;
    let mut p = Parser { tokens, pos: 0 };
    let e = p.expr()?;
    if p.peek().tok == Tok::Semi {
        p.advance();
    }
    let t = p.peek();
    if t.tok != Tok::Eof {
        return Err(LangError::syntax(
            format!("unexpected {} after expression", t.tok.describe()),
            t.span,
        ));
    }
    Ok(e)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

fn join(a: Span, b: Span) -> Span {
    Span {
        line: a.line,
        column: a.column,
        start: a.start,
        end: b.end,
    }
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.tokens[(self.pos + k).min(self.tokens.len() - 1)].tok
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn prev_span(&self) -> Span {
        self.tokens[self.pos.saturating_sub(1)].span
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<Token, LangError> {
        if self.peek().tok == want {
            Ok(self.advance())
        } else {
            let t = self.peek();
            Err(LangError::syntax(
                format!("expected {what}, found {}", t.tok.describe()),
                t.span,
            ))
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Span), LangError> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Ident(s) if !is_keyword(&s) => {
                self.advance();
                Ok((s, t.span))
            }
            other => Err(LangError::syntax(
                format!("expected {what}, found {}", other.describe()),
                t.span,
            )),
        }
    }

    fn block(&mut self, in_tests: bool) -> Result<Block, LangError> {
        let open = self.expect(Tok::LBrace, "'{'")?;
        let stmts = self.stmts(in_tests)?;
        let close = self.expect(Tok::RBrace, "'}'")?;
        Ok(Block {
            stmts,
            span: join(open.span, close.span),
        })
    }

    fn stmts(&mut self, in_tests: bool) -> Result<Vec<Stmt>, LangError> {
        let mut out = Vec::new();
        while !matches!(self.peek().tok, Tok::RBrace | Tok::Eof) {
            out.push(self.stmt(in_tests)?);
        }
        Ok(out)
    }

    fn stmt(&mut self, in_tests: bool) -> Result<Stmt, LangError> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Ident(k) if k == "let" => {
                self.advance();
                let (name, _) = self.ident("a name after 'let'")?;
                self.expect(Tok::Assign, "'='")?;
                let value = self.expr()?;
                let semi = self.expect(Tok::Semi, "';'")?;
                Ok(Stmt::Let {
                    name,
                    value,
                    span: join(t.span, semi.span),
                })
            }
            Tok::Ident(k) if k == "repeat" => {
                self.advance();
                let (var, _) = self.ident("a loop variable")?;
                match self.peek().tok.clone() {
                    Tok::Ident(k) if k == "in" => {
                        self.advance();
                    }
                    other => {
                        return Err(LangError::syntax(
                            format!("expected 'in', found {}", other.describe()),
                            self.peek().span,
                        ))
                    }
                }
                let start = self.int_literal()?;
                self.expect(Tok::DotDot, "'..'")?;
                let end = self.int_literal()?;
                self.expect(Tok::LBrace, "'{'")?;
                let body = self.stmts(in_tests)?;
                let close = self.expect(Tok::RBrace, "'}'")?;
                Ok(Stmt::Repeat {
                    var,
                    start,
                    end,
                    body,
                    span: join(t.span, close.span),
                })
            }
            Tok::Ident(k) if k == "pose" => {
                if !in_tests {
                    return Err(LangError::syntax("pose blocks are only allowed in the tests block", t.span));
                }
                self.advance();
                self.expect(Tok::LBrace, "'{'")?;
                let mut bindings = Vec::new();
                while self.peek().tok != Tok::RBrace {
                    let kt = self.peek().clone();
                    let joint = match kt.tok {
                        Tok::Ident(s) | Tok::Str(s) => {
                            self.advance();
                            s
                        }
                        other => {
                            return Err(LangError::syntax(
                                format!("expected a joint name, found {}", other.describe()),
                                kt.span,
                            ))
                        }
                    };
                    self.expect(Tok::Colon, "':'")?;
                    let value = self.expr()?;
                    let span = join(kt.span, value.span);
                    bindings.push(PoseBinding { joint, value, span });
                    if self.peek().tok == Tok::Comma {
                        self.advance();
                    } else {
                        break;
                    }
                }
                self.expect(Tok::RBrace, "'}'")?;
                self.expect(Tok::LBrace, "'{'")?;
                let body = self.stmts(true)?;
                let close = self.expect(Tok::RBrace, "'}'")?;
                Ok(Stmt::Pose {
                    bindings,
                    body,
                    span: join(t.span, close.span),
                })
            }
            Tok::Ident(_) if *self.peek_at(1) == Tok::LParen => {
                let call = self.call()?;
                self.expect(Tok::Semi, "';'")?;
                Ok(Stmt::Call(call))
            }
            other => Err(LangError::syntax(
                format!("expected a statement, found {}", other.describe()),
                t.span,
            )),
        }
    }

    fn int_literal(&mut self) -> Result<i64, LangError> {
        let neg = if self.peek().tok == Tok::Minus {
            self.advance();
            true
        } else {
            false
        };
        let t = self.peek().clone();
        match t.tok {
            Tok::Number(n) if n.fract() == 0.0 && n.abs() < 1e15 => {
                self.advance();
                Ok(if neg { -(n as i64) } else { n as i64 })
            }
            other => Err(LangError::syntax(
                format!("expected an integer loop bound, found {}", other.describe()),
                t.span,
            )),
        }
    }

    fn call(&mut self) -> Result<Call, LangError> {
        let (name, start) = match self.advance() {
            Token {
                tok: Tok::Ident(s),
                span,
            } => (s, span),
            t => return Err(LangError::syntax("expected a function name", t.span)),
        };
        self.expect(Tok::LParen, "'('")?;
        let mut args: Vec<Arg> = Vec::new();
        while self.peek().tok != Tok::RParen {
            let named = matches!(self.peek().tok, Tok::Ident(_)) && *self.peek_at(1) == Tok::Assign;
            let arg = if named {
                let t = self.advance();
                let (Tok::Ident(n), span) = (t.tok, t.span) else {
                    unreachable!("checked above")
                };
                self.advance();
                let value = self.expr()?;
                Arg {
                    name: Some(n),
                    span: join(span, value.span),
                    value,
                }
            } else {
                let value = self.expr()?;
                if args.iter().any(|a| a.name.is_some()) {
                    return Err(LangError::syntax(
                        "positional argument follows a named argument",
                        value.span,
                    ));
                }
                Arg {
                    name: None,
                    span: value.span,
                    value,
                }
            };
            args.push(arg);
            if self.peek().tok == Tok::Comma {
                self.advance();
            } else {
                break;
            }
        }
        let close = self.expect(Tok::RParen, "')'")?;
        Ok(Call {
            name,
            args,
            span: join(start, close.span),
        })
    }

    pub fn expr(&mut self) -> Result<Expr, LangError> {
        self.or_expr()
    }

    fn binary_level(
        &mut self,
        next: fn(&mut Self) -> Result<Expr, LangError>,
        ops: &[(Tok, BinOp)],
        chain: bool,
    ) -> Result<Expr, LangError> {
        let mut lhs = next(self)?;
        loop {
            let Some(op) = ops.iter().find(|(t, _)| *t == self.peek().tok).map(|(_, o)| *o) else {
                return Ok(lhs);
            };
            self.advance();
            let rhs = next(self)?;
            let span = join(lhs.span, rhs.span);
            lhs = Expr {
                kind: ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)),
                span,
            };
            if !chain {
                return Ok(lhs);
            }
        }
    }

    fn or_expr(&mut self) -> Result<Expr, LangError> {
        self.binary_level(Self::and_expr, &[(Tok::OrOr, BinOp::Or)], true)
    }

    fn and_expr(&mut self) -> Result<Expr, LangError> {
        self.binary_level(Self::cmp_expr, &[(Tok::AndAnd, BinOp::And)], true)
    }

    fn cmp_expr(&mut self) -> Result<Expr, LangError> {
        self.binary_level(
            Self::add_expr,
            &[
                (Tok::EqEq, BinOp::Eq),
                (Tok::NotEq, BinOp::Ne),
                (Tok::Lt, BinOp::Lt),
                (Tok::Le, BinOp::Le),
                (Tok::Gt, BinOp::Gt),
                (Tok::Ge, BinOp::Ge),
            ],
            false,
        )
    }

    fn add_expr(&mut self) -> Result<Expr, LangError> {
        self.binary_level(
            Self::mul_expr,
            &[(Tok::Plus, BinOp::Add), (Tok::Minus, BinOp::Sub)],
            true,
        )
    }

    fn mul_expr(&mut self) -> Result<Expr, LangError> {
        self.binary_level(
            Self::unary_expr,
            &[(Tok::Star, BinOp::Mul), (Tok::Slash, BinOp::Div)],
            true,
        )
    }

    fn unary_expr(&mut self) -> Result<Expr, LangError> {
        let op = match self.peek().tok {
            Tok::Minus => UnOp::Neg,
            Tok::Bang => UnOp::Not,
            _ => return self.postfix_expr(),
        };
        let t = self.advance();
        let inner = self.unary_expr()?;
        let span = join(t.span, inner.span);
        Ok(Expr {
            kind: ExprKind::Unary(op, Box::new(inner)),
            span,
        })
    }

    fn postfix_expr(&mut self) -> Result<Expr, LangError> {
        let mut e = self.primary()?;
        while self.peek().tok == Tok::LBracket {
            self.advance();
            let idx = self.expr()?;
            let close = self.expect(Tok::RBracket, "']'")?;
            let span = join(e.span, close.span);
            e = Expr {
                kind: ExprKind::Index(Box::new(e), Box::new(idx)),
                span,
            };
        }
        Ok(e)
    }

    fn primary(&mut self) -> Result<Expr, LangError> {
        let t = self.peek().clone();
        let kind = match t.tok {
            Tok::Number(n) => {
                self.advance();
                ExprKind::Number(n)
            }
            Tok::Str(s) => {
                self.advance();
                ExprKind::Str(s)
            }
            Tok::Ident(ref s) if *self.peek_at(1) == Tok::LParen && !is_keyword(s) => {
                let call = self.call()?;
                let span = call.span;
                return Ok(Expr {
                    kind: ExprKind::Call(call),
                    span,
                });
            }
            Tok::Ident(s) if !is_keyword(&s) => {
                self.advance();
                ExprKind::Ident(s)
            }
            Tok::LParen => {
                self.advance();
                let inner = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                return Ok(Expr {
                    kind: inner.kind,
                    span: join(t.span, self.prev_span()),
                });
            }
            Tok::LBracket => {
                self.advance();
                let mut items = Vec::new();
                while self.peek().tok != Tok::RBracket {
                    items.push(self.expr()?);
                    if self.peek().tok == Tok::Comma {
                        self.advance();
                    } else {
                        break;
                    }
                }
                self.expect(Tok::RBracket, "']'")?;
                ExprKind::List(items)
            }
            Tok::LBrace => {
                self.advance();
                let mut entries = Vec::new();
                while self.peek().tok != Tok::RBrace {
                    let kt = self.advance();
                    let key = match kt.tok {
                        Tok::Ident(s) | Tok::Str(s) => s,
                        other => {
                            return Err(LangError::syntax(
                                format!("expected a map key, found {}", other.describe()),
                                kt.span,
                            ))
                        }
                    };
                    self.expect(Tok::Colon, "':'")?;
                    entries.push((key, self.expr()?));
                    if self.peek().tok == Tok::Comma {
                        self.advance();
                    } else {
                        break;
                    }
                }
                self.expect(Tok::RBrace, "'}'")?;
                ExprKind::Map(entries)
            }
            other => {
                return Err(LangError::syntax(
                    format!("expected an expression, found {}", other.describe()),
                    t.span,
                ))
            }
        };
        Ok(Expr {
            kind,
            span: join(t.span, self.prev_span()),
        })
    }
}

fn is_keyword(s: &str) -> bool {
    matches!(s, "let" | "repeat" | "in" | "pose" | "build" | "tests")
}
