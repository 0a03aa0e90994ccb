use super::ast::*;
use super::token::{tokenize, Keyword as K, Tok, Token};
use crate::diag::{Diagnostic, Diagnostics, Pos};
use crate::types::CollectionKind;

type PResult<T> = Result<T, Diagnostic>;

struct Parser {
    toks: Vec<Token>,
    i: usize,
    end: Pos,
}

fn end_pos(text: &str) -> Pos {
    Pos::from_offset(text, text.len())
}

impl Parser {
    fn new(toks: Vec<Token>, end: Pos) -> Parser {
        Parser { toks, i: 0, end }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|t| &t.tok)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.i + k).map(|t| &t.tok)
    }

    fn pos(&self) -> Pos {
        self.toks.get(self.i).map(|t| t.pos).unwrap_or(self.end)
    }

    fn at(&self, t: &Tok) -> bool {
        self.peek() == Some(t)
    }

    fn at_kw(&self, k: K) -> bool {
        self.peek() == Some(&Tok::Kw(k))
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.at(t) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, k: K) -> bool {
        self.eat(&Tok::Kw(k))
    }

    fn unexpected(&self, wanted: &str) -> Diagnostic {
        match self.peek() {
            Some(t) => Diagnostic::error(self.pos(), format!("expected {wanted}, found {t}")),
            None => Diagnostic::error(self.pos(), format!("expected {wanted}, found end of input")),
        }
    }

    fn expect(&mut self, t: Tok) -> PResult<()> {
        if self.eat(&t) {
            Ok(())
        } else {
            Err(self.unexpected(&t.to_string()))
        }
    }

    fn expect_kw(&mut self, k: K, wanted: &str) -> PResult<()> {
        if self.eat_kw(k) {
            Ok(())
        } else {
            Err(self.unexpected(wanted))
        }
    }

    fn ident(&mut self, wanted: &str) -> PResult<(String, Pos)> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let r = (s.clone(), self.pos());
                self.i += 1;
                Ok(r)
            }
            _ => Err(self.unexpected(wanted)),
        }
    }

    // ---- types ----

    fn type_expr(&mut self) -> PResult<TypeExpr> {
        let (first, pos) = self.ident("a type")?;
        if let Some(kind) = CollectionKind::from_name(&first) {
            if self.eat(&Tok::LParen) {
                let elem = self.type_expr()?;
                self.expect(Tok::RParen)?;
                return Ok(TypeExpr::Collection(kind, Box::new(elem), pos));
            }
        }
        let mut path = vec![first];
        while self.eat(&Tok::ColonColon) {
            path.push(self.ident("a name after '::'")?.0);
        }
        Ok(TypeExpr::Named(path, pos))
    }

    // ---- expressions ----

    fn expr(&mut self) -> PResult<Expr> {
        let lhs = self.logic()?;
        if self.at_kw(K::Implies) {
            self.i += 1;
            let rhs = self.expr()?;
            let pos = lhs.pos;
            return Ok(bin(BinOp::Implies, lhs, rhs, pos));
        }
        Ok(lhs)
    }

    fn logic(&mut self) -> PResult<Expr> {
        let mut lhs = self.equality()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Kw(K::And)) => BinOp::And,
                Some(Tok::Kw(K::Or)) => BinOp::Or,
                Some(Tok::Kw(K::Xor)) => BinOp::Xor,
                _ => return Ok(lhs),
            };
            self.i += 1;
            let rhs = self.equality()?;
            let pos = lhs.pos;
            lhs = bin(op, lhs, rhs, pos);
        }
    }

    fn equality(&mut self) -> PResult<Expr> {
        let mut lhs = self.relational()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Eq) => BinOp::Eq,
                Some(Tok::EqEq) => BinOp::WeakEq,
                Some(Tok::Neq) => BinOp::Neq,
                _ => return Ok(lhs),
            };
            self.i += 1;
            let rhs = self.relational()?;
            let pos = lhs.pos;
            lhs = bin(op, lhs, rhs, pos);
        }
    }

    fn relational(&mut self) -> PResult<Expr> {
        let mut lhs = self.additive()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Lt) => BinOp::Lt,
                Some(Tok::Gt) => BinOp::Gt,
                Some(Tok::Le) => BinOp::Le,
                Some(Tok::Ge) => BinOp::Ge,
                _ => return Ok(lhs),
            };
            self.i += 1;
            let rhs = self.additive()?;
            let pos = lhs.pos;
            lhs = bin(op, lhs, rhs, pos);
        }
    }

    fn additive(&mut self) -> PResult<Expr> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => BinOp::Add,
                Some(Tok::Minus) => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.i += 1;
            let rhs = self.multiplicative()?;
            let pos = lhs.pos;
            lhs = bin(op, lhs, rhs, pos);
        }
    }

    fn multiplicative(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Star) => BinOp::Mul,
                Some(Tok::Slash) => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.i += 1;
            let rhs = self.unary()?;
            let pos = lhs.pos;
            lhs = bin(op, lhs, rhs, pos);
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        if self.eat_kw(K::Not) {
            let e = self.unary()?;
            return Ok(Expr::new(ExprKind::Not(Box::new(e)), pos));
        }
        if self.eat(&Tok::Minus) {
            let e = self.unary()?;
            return Ok(Expr::new(ExprKind::Neg(Box::new(e)), pos));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let e = self.primary()?;
        self.postfix_tail(e)
    }

    fn postfix_tail(&mut self, mut e: Expr) -> PResult<Expr> {
        loop {
            let pos = e.pos;
            match self.peek() {
                Some(Tok::Dot) => {
                    self.i += 1;
                    let (name, npos) = self.ident("a feature name after '.'")?;
                    if name == "oclType" {
                        return Err(Diagnostic::error(
                            npos,
                            "oclType is not supported; use oclIsTypeOf or oclIsKindOf",
                        ));
                    }
                    if self.at(&Tok::ColonColon) {
                        return Err(Diagnostic::error(
                            self.pos(),
                            "'::' names packages and classes only; use oclAsType to reach a redefined feature",
                        ));
                    }
                    e = if self.eat(&Tok::LParen) {
                        let args = self.args(Tok::RParen)?;
                        Expr::new(
                            ExprKind::Call {
                                source: Some(Box::new(e)),
                                name,
                                args,
                            },
                            pos,
                        )
                    } else {
                        Expr::new(
                            ExprKind::Nav {
                                source: Box::new(e),
                                name,
                            },
                            pos,
                        )
                    };
                }
                Some(Tok::Arrow) => {
                    self.i += 1;
                    let op = match self.peek() {
                        Some(Tok::Ident(s)) => s.clone(),
                        _ => return Err(self.unexpected("a collection operation after '->'")),
                    };
                    self.i += 1;
                    let (iters, args) = if self.eat(&Tok::LParen) {
                        let iters = self.try_iterators();
                        let args = self.args(Tok::RParen)?;
                        if !iters.is_empty() && args.len() != 1 {
                            return Err(Diagnostic::error(
                                pos,
                                "an iterator body must be a single expression",
                            ));
                        }
                        (iters, args)
                    } else {
                        (Vec::new(), Vec::new())
                    };
                    e = Expr::new(
                        ExprKind::Arrow {
                            source: Box::new(e),
                            op,
                            iters,
                            args,
                        },
                        pos,
                    );
                }
                Some(Tok::AtPre) => {
                    self.i += 1;
                    e = Expr::new(ExprKind::AtPre(Box::new(e)), pos);
                }
                _ => return Ok(e),
            }
        }
    }

    /// Parses `v1 [: T], v2 [: T] |` if present; otherwise consumes nothing.
    fn try_iterators(&mut self) -> Vec<IterVar> {
        let start = self.i;
        let mut vars = Vec::new();
        while let Some(Tok::Ident(name)) = self.peek().cloned() {
            self.i += 1;
            let ty = if self.eat(&Tok::Colon) {
                match self.type_expr() {
                    Ok(t) => Some(t),
                    Err(_) => break,
                }
            } else {
                None
            };
            vars.push(IterVar { name, ty });
            if self.eat(&Tok::Bar) {
                return vars;
            }
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.i = start;
        Vec::new()
    }

    fn args(&mut self, close: Tok) -> PResult<Vec<Expr>> {
        let mut args = Vec::new();
        if self.eat(&close) {
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            if self.eat(&close) {
                return Ok(args);
            }
            if !self.eat(&Tok::Comma) {
                return Err(self.unexpected(&format!("',' or {close}")));
            }
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        let Some(tok) = self.peek().cloned() else {
            return Err(self.unexpected("an expression"));
        };
        let kind = match tok {
            Tok::Int(i) => {
                self.i += 1;
                ExprKind::Lit(Literal::Int(i))
            }
            Tok::Real(r) => {
                self.i += 1;
                ExprKind::Lit(Literal::Real(r))
            }
            Tok::Str(s) => {
                self.i += 1;
                ExprKind::Lit(Literal::Str(s))
            }
            Tok::Kw(K::True) => {
                self.i += 1;
                ExprKind::Lit(Literal::Bool(true))
            }
            Tok::Kw(K::False) => {
                self.i += 1;
                ExprKind::Lit(Literal::Bool(false))
            }
            Tok::Kw(K::SelfKw) => {
                self.i += 1;
                ExprKind::SelfRef
            }
            Tok::LParen => {
                self.i += 1;
                let mut e = self.expr()?;
                self.expect(Tok::RParen)?;
                e.pos = pos;
                return Ok(e);
            }
            Tok::Kw(K::If) => {
                self.i += 1;
                let cond = self.expr()?;
                self.expect_kw(K::Then, "'then'")?;
                let then = self.expr()?;
                if !self.eat_kw(K::Else) {
                    if self.at_kw(K::Endif) {
                        return Err(Diagnostic::error(
                            self.pos(),
                            "missing 'else': an if-expression always needs an else branch",
                        ));
                    }
                    return Err(self.unexpected("'else'"));
                }
                let els = self.expr()?;
                if !self.eat_kw(K::Endif) {
                    return Err(Diagnostic::error(
                        self.pos(),
                        format!("missing 'endif' for the if-expression at {pos}"),
                    ));
                }
                ExprKind::If {
                    cond: Box::new(cond),
                    then: Box::new(then),
                    els: Box::new(els),
                }
            }
            Tok::Kw(K::Let) => {
                self.i += 1;
                let (name, _) = self.ident("a variable name after 'let'")?;
                if self.at(&Tok::LParen) {
                    return Err(Diagnostic::error(
                        self.pos(),
                        "let-defined functions are not supported",
                    ));
                }
                let ty = if self.eat(&Tok::Colon) {
                    Some(self.type_expr()?)
                } else {
                    None
                };
                self.expect(Tok::Eq)?;
                let value = self.expr()?;
                self.expect_kw(K::In, "'in'")?;
                let body = self.expr()?;
                ExprKind::Let {
                    name,
                    ty,
                    value: Box::new(value),
                    body: Box::new(body),
                }
            }
            Tok::Ident(name) => {
                self.i += 1;
                if let Some(kind) = CollectionKind::from_name(&name) {
                    if self.eat(&Tok::LBrace) {
                        let items = self.args(Tok::RBrace)?;
                        return Ok(Expr::new(ExprKind::CollLit(kind, items), pos));
                    }
                }
                if self.at(&Tok::ColonColon) {
                    let mut path = vec![name];
                    while self.eat(&Tok::ColonColon) {
                        path.push(self.ident("a name after '::'")?.0);
                    }
                    if self.at(&Tok::LParen) {
                        return Err(Diagnostic::error(
                            pos,
                            "'::' names packages and classes only; use oclAsType to reach a redefined feature",
                        ));
                    }
                    ExprKind::Path(path)
                } else if self.eat(&Tok::LParen) {
                    let args = self.args(Tok::RParen)?;
                    ExprKind::Call {
                        source: None,
                        name,
                        args,
                    }
                } else {
                    ExprKind::Name(name)
                }
            }
            _ => return Err(self.unexpected("an expression")),
        };
        Ok(Expr::new(kind, pos))
    }

    // ---- declarations ----

    fn at_decl_start(&self) -> bool {
        matches!(
            self.peek(),
            None | Some(Tok::Kw(K::Context)) | Some(Tok::Kw(K::Action)) | Some(Tok::Kw(K::Event))
        )
    }

    fn file(&mut self) -> PResult<ConstraintFile> {
        let mut decls = Vec::new();
        while self.peek().is_some() {
            let pos = self.pos();
            if self.eat_kw(K::Context) {
                if self.at_kw(K::Action) || self.at_kw(K::Event) {
                    continue;
                }
                decls.push(self.context_decl(pos)?);
            } else if self.eat_kw(K::Action) {
                decls.push(self.joint_action(pos)?);
            } else if self.eat_kw(K::Event) {
                decls.push(self.event(pos)?);
            } else {
                return Err(self.unexpected("'context', 'action' or 'event'"));
            }
            if !self.at_decl_start() {
                return Err(self.unexpected("the end of the constraint"));
            }
        }
        Ok(ConstraintFile { decls })
    }

    fn params(&mut self) -> PResult<Vec<Param>> {
        self.expect(Tok::LParen)?;
        let mut ps = Vec::new();
        if self.eat(&Tok::RParen) {
            return Ok(ps);
        }
        loop {
            let (name, pos) = self.ident("a parameter name")?;
            self.expect(Tok::Colon)?;
            let ty = self.type_expr()?;
            ps.push(Param { name, ty, pos });
            if self.eat(&Tok::RParen) {
                return Ok(ps);
            }
            self.expect(Tok::Comma)?;
        }
    }

    fn return_type(&mut self) -> PResult<Option<TypeExpr>> {
        if !self.eat(&Tok::Colon) {
            return Ok(None);
        }
        if let Some(Tok::Ident(s)) = self.peek() {
            if s == "void" || s == "OclVoid" {
                self.i += 1;
                return Ok(None);
            }
        }
        Ok(Some(self.type_expr()?))
    }

    fn context_decl(&mut self, pos: Pos) -> PResult<ConstraintDecl> {
        let self_name =
            if matches!(self.peek(), Some(Tok::Ident(_))) && self.peek_at(1) == Some(&Tok::Colon) {
                let (n, _) = self.ident("a name")?;
                self.i += 1;
                Some(n)
            } else {
                None
            };
        let (first, cpos) = self.ident("a class name")?;
        let mut path = vec![first];
        while self.eat(&Tok::ColonColon) {
            path.push(self.ident("a name after '::'")?.0);
        }
        if self.at(&Tok::LParen) {
            if path.len() < 2 {
                return Err(Diagnostic::error(
                    cpos,
                    "an operation context needs the form Class::operation(...)",
                ));
            }
            if self_name.is_some() {
                return Err(Diagnostic::error(
                    cpos,
                    "an operation context cannot name its instance",
                ));
            }
            let op = path.pop().unwrap();
            let context = ClassContext {
                class: path,
                self_name: None,
                pos,
            };
            return self.op_spec(Receivers::Class(context), op, pos);
        }
        let context = ClassContext {
            class: path,
            self_name,
            pos,
        };
        let mode = if self.eat_kw(K::Executable) {
            RecursionMode::Executable
        } else if self.eat_kw(K::Loose) {
            RecursionMode::Loose
        } else {
            RecursionMode::Default
        };
        if self.eat_kw(K::Action) {
            if mode != RecursionMode::Default {
                return Err(Diagnostic::error(
                    pos,
                    "recursion keywords apply to invariants only",
                ));
            }
            self.expect(Tok::Colon)?;
            self.expect_kw(K::On, "'on'")?;
            let condition = self.expr()?;
            self.expect_kw(K::Do, "'do'")?;
            let messages = self.message_list()?;
            return Ok(ConstraintDecl::Action(ActionConstraint {
                context,
                condition,
                messages,
            }));
        }
        if !self.eat_kw(K::Invariant) {
            return Err(match self.peek() {
                Some(Tok::Ident(s))
                    if self.peek_at(1) == Some(&Tok::Colon)
                        || self.peek_at(2) == Some(&Tok::Colon) =>
                {
                    Diagnostic::error(self.pos(), format!("unknown stereotype '{s}'"))
                }
                _ => self.unexpected("'invariant' or 'action'"),
            });
        }
        let name = if let Some(Tok::Ident(n)) = self.peek().cloned() {
            self.i += 1;
            Some(n)
        } else {
            None
        };
        self.expect(Tok::Colon)?;
        if self.at_kw(K::Constant) {
            let mut items = Vec::new();
            while self.eat_kw(K::Constant) {
                let (n, ipos) = self.ident("an attribute, query or role name after 'constant'")?;
                let query = if self.eat(&Tok::LParen) {
                    self.expect(Tok::RParen)?;
                    true
                } else {
                    false
                };
                items.push(ConstantItem {
                    name: n,
                    query,
                    pos: ipos,
                });
                self.eat(&Tok::Semi);
            }
            return Ok(ConstraintDecl::Constant(ConstantDecl {
                context,
                name,
                items,
            }));
        }
        let first = self.expr()?;
        if !self.at(&Tok::Semi) && mode == RecursionMode::Default {
            return Ok(ConstraintDecl::Invariant(Invariant {
                context,
                name,
                mode,
                body: first,
            }));
        }
        let mut defs = vec![as_definition(first)?];
        while self.eat(&Tok::Semi) {
            if self.at_decl_start() {
                break;
            }
            defs.push(as_definition(self.expr()?)?);
        }
        Ok(ConstraintDecl::Derived(DerivedBlock {
            context,
            name,
            mode,
            defs,
        }))
    }

    fn joint_action(&mut self, pos: Pos) -> PResult<ConstraintDecl> {
        let receivers = self.params()?;
        if receivers.len() < 2 {
            return Err(Diagnostic::error(
                pos,
                "a joint action names at least two receivers",
            ));
        }
        self.expect(Tok::ColonColon)?;
        let (op, _) = self.ident("an operation name")?;
        self.op_spec(Receivers::Joint(receivers), op, pos)
    }

    fn event(&mut self, pos: Pos) -> PResult<ConstraintDecl> {
        let (op, _) = self.ident("an event name")?;
        self.op_spec(Receivers::Event, op, pos)
    }

    fn op_spec(&mut self, receivers: Receivers, op: String, pos: Pos) -> PResult<ConstraintDecl> {
        let params = self.params()?;
        let returns = self.return_type()?;
        let mut spec = OperationSpec {
            receivers,
            op,
            params,
            returns,
            pre: None,
            post: None,
            called: None,
            pos,
        };
        let (mut seen_pre, mut seen_post) = (false, false);
        loop {
            let cpos = self.pos();
            if self.eat_kw(K::Pre) {
                self.expect(Tok::Colon)?;
                if std::mem::replace(&mut seen_pre, true) {
                    return Err(Diagnostic::error(cpos, "duplicate pre clause"));
                }
                spec.pre = self.clause_body()?;
            } else if self.eat_kw(K::Post) {
                self.expect(Tok::Colon)?;
                if std::mem::replace(&mut seen_post, true) {
                    return Err(Diagnostic::error(cpos, "duplicate post clause"));
                }
                spec.post = self.clause_body()?;
            } else if self.eat_kw(K::Called) {
                self.expect(Tok::Colon)?;
                if spec.called.is_some() {
                    return Err(Diagnostic::error(cpos, "duplicate called clause"));
                }
                spec.called = Some(self.message_list()?);
            } else if self.at_decl_start() {
                return Ok(ConstraintDecl::Operation(spec));
            } else {
                return Err(match self.peek() {
                    Some(Tok::Ident(s)) if self.peek_at(1) == Some(&Tok::Colon) => {
                        Diagnostic::error(cpos, format!("unknown stereotype '{s}'"))
                    }
                    _ => self.unexpected("'pre', 'post' or 'called'"),
                });
            }
        }
    }

    fn clause_body(&mut self) -> PResult<Option<Expr>> {
        if self.at_decl_start()
            || self.at_kw(K::Pre)
            || self.at_kw(K::Post)
            || self.at_kw(K::Called)
        {
            return Ok(None);
        }
        self.expr().map(Some)
    }

    fn message_list(&mut self) -> PResult<Vec<MessageItem>> {
        let mut items = vec![self.message_item()?];
        while self.eat(&Tok::Comma) {
            items.push(self.message_item()?);
        }
        Ok(items)
    }

    fn message_item(&mut self) -> PResult<MessageItem> {
        let pos = self.pos();
        if self.eat_kw(K::If) {
            let cond = self.expr()?;
            self.expect_kw(K::Then, "'then'")?;
            let then = self.message_list()?;
            let els = if self.eat_kw(K::Else) {
                self.message_list()?
            } else {
                Vec::new()
            };
            if !self.eat_kw(K::Endif) {
                return Err(Diagnostic::error(
                    self.pos(),
                    format!("missing 'endif' for the conditional message at {pos}"),
                ));
            }
            return Ok(MessageItem::If {
                cond,
                then,
                els,
                pos,
            });
        }
        let e = self.postfix()?;
        match e.kind {
            ExprKind::Call { source, name, args } => Ok(MessageItem::Send {
                target: source.map(|b| *b),
                op: name,
                args,
                pos,
            }),
            _ => Err(Diagnostic::error(
                pos,
                "a message must be an operation call such as target.op(args)",
            )),
        }
    }
}

fn bin(op: BinOp, lhs: Expr, rhs: Expr, pos: Pos) -> Expr {
    Expr::new(
        ExprKind::Binary {
            op,
            lhs: Box::new(lhs),
            rhs: Box::new(rhs),
        },
        pos,
    )
}

fn as_definition(e: Expr) -> PResult<DerivedDef> {
    let pos = e.pos;
    match e.kind {
        ExprKind::Binary {
            op: BinOp::Eq,
            lhs,
            rhs,
        } => match lhs.kind {
            ExprKind::Name(attr) => Ok(DerivedDef {
                attr,
                expr: *rhs,
                pos,
            }),
            _ => Err(Diagnostic::error(
                pos,
                "a definition must have the form attribute = expression",
            )),
        },
        _ => Err(Diagnostic::error(
            pos,
            "a definition must have the form attribute = expression",
        )),
    }
}

/// Parses one expression from tokens.
pub fn parse_expression(tokens: &[Token]) -> Result<Expr, Diagnostics> {
    let end = tokens
        .last()
        .map(|t| Pos::new(t.pos.line, t.pos.col + 1))
        .unwrap_or(Pos::new(1, 1));
    let mut p = Parser::new(tokens.to_vec(), end);
    let e = p.expr()?;
    if p.peek().is_some() {
        return Err(p.unexpected("end of expression").into());
    }
    Ok(e)
}

/// Tokenizes and parses one expression.
pub fn parse_expression_text(text: &str) -> Result<Expr, Diagnostics> {
    let toks = tokenize(text)?;
    let mut p = Parser::new(toks, end_pos(text));
    let e = p.expr()?;
    if p.peek().is_some() {
        return Err(p.unexpected("end of expression").into());
    }
    Ok(e)
}

pub fn parse_constraint_file(text: &str) -> Result<ConstraintFile, Diagnostics> {
    let toks = tokenize(text)?;
    let mut p = Parser::new(toks, end_pos(text));
    Ok(p.file()?)
}

/// Parses a type such as `Set(Hotel::Room)`.
pub fn parse_type_text(text: &str) -> Result<TypeExpr, Diagnostic> {
    let toks = tokenize(text).map_err(|mut d| d.0.remove(0))?;
    let mut p = Parser::new(toks, end_pos(text));
    let t = p.type_expr()?;
    if p.peek().is_some() {
        return Err(p.unexpected("end of type"));
    }
    Ok(t)
}
