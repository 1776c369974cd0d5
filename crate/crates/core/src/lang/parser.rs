use std::collections::{HashMap, HashSet};

use num_traits::{One, Signed};

use super::lexer::{lex, Tok, Token};
use super::*;
use crate::prob;

#[derive(Clone, Debug)]
struct STerm {
    text: String,
    line: usize,
    column: usize,
}

#[derive(Clone, Debug)]
struct SConst {
    name: String,
    args: Vec<STerm>,
    line: usize,
    column: usize,
}

#[derive(Clone, Debug)]
struct SLit {
    target: SConst,
    value: Option<STerm>,
    positive: bool,
}

#[derive(Clone, Debug)]
enum SFormula {
    True,
    False,
    Conj(Vec<SLit>),
}

#[derive(Clone, Debug)]
enum SLaw {
    Caused { head: SFormula, cond: Option<SFormula>, after: Option<SFormula> },
    PfRow { target: SConst, row: Vec<(STerm, Prob)>, cond: Option<SFormula> },
    Observed { head: SFormula, cond: Option<SFormula>, after: Option<SFormula> },
    Initially { head: SFormula, cond: Option<SFormula> },
    Reward { value: STerm, cond: Option<SFormula>, after: Option<SFormula> },
    Inertial { target: SConst },
    Default { lit: SLit, cond: Option<SFormula>, after: Option<SFormula> },
}

#[derive(Clone, Debug)]
enum Binding {
    Var { name: String, sort: String, line: usize, column: usize },
    Guard { lhs: STerm, eq: bool, rhs: STerm },
}

#[derive(Clone, Debug)]
struct SStatement {
    law: SLaw,
    unless: Option<SConst>,
    bindings: Vec<Binding>,
    line: usize,
    column: usize,
}

#[derive(Clone, Debug)]
struct SSort {
    name: String,
    members: Vec<STerm>,
    line: usize,
    column: usize,
}

#[derive(Clone, Debug)]
struct SDecl {
    kind: ConstKind,
    name: String,
    args: Vec<STerm>,
    value_sort: Option<STerm>,
    line: usize,
    column: usize,
}

#[derive(Clone, Debug)]
struct SPattern {
    name: String,
    args: Option<Vec<Option<String>>>,
    line: usize,
    column: usize,
}

#[derive(Clone, Debug)]
struct SGroup {
    name: String,
    patterns: Vec<SPattern>,
    line: usize,
    column: usize,
}

#[derive(Default)]
struct Surface {
    sorts: Vec<SSort>,
    decls: Vec<SDecl>,
    laws: Vec<SStatement>,
    groups: Vec<SGroup>,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, Diagnostic>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.column)
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let (l, c) = self.here();
        Err(Diagnostic::error(l, c, msg))
    }

    fn expect(&mut self, t: Tok) -> PResult<Token> {
        if *self.peek() == t {
            Ok(self.bump())
        } else {
            self.error(format!("expected {}, found {}", t.describe(), self.peek().describe()))
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> PResult<STerm> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let t = self.bump();
                Ok(STerm { text: s, line: t.line, column: t.column })
            }
            other => self.error(format!("expected identifier, found {}", other.describe())),
        }
    }

    /// Identifier or (optionally negative) number.
    fn term(&mut self) -> PResult<STerm> {
        let (line, column) = self.here();
        match self.peek().clone() {
            Tok::Ident(_) => self.ident(),
            Tok::Number(n) => {
                self.bump();
                Ok(STerm { text: n, line, column })
            }
            Tok::Minus => {
                self.bump();
                match self.peek().clone() {
                    Tok::Number(n) => {
                        self.bump();
                        Ok(STerm { text: format!("-{n}"), line, column })
                    }
                    other => self.error(format!("expected number after `-`, found {}", other.describe())),
                }
            }
            other => self.error(format!("expected a value, found {}", other.describe())),
        }
    }

    fn const_ref(&mut self) -> PResult<SConst> {
        let name = self.ident()?;
        let mut args = Vec::new();
        if *self.peek() == Tok::LParen {
            self.bump();
            loop {
                args.push(self.term()?);
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
            self.expect(Tok::RParen)?;
        }
        Ok(SConst { name: name.text, args, line: name.line, column: name.column })
    }

    fn literal(&mut self) -> PResult<SLit> {
        let mut positive = true;
        if *self.peek() == Tok::Tilde {
            self.bump();
            positive = false;
        }
        let target = self.const_ref()?;
        let value = match self.peek() {
            Tok::Eq => {
                self.bump();
                Some(self.term()?)
            }
            Tok::Neq => {
                self.bump();
                positive = !positive;
                Some(self.term()?)
            }
            _ => None,
        };
        Ok(SLit { target, value, positive })
    }

    fn formula(&mut self) -> PResult<SFormula> {
        if self.is_kw("true") && !matches!(self.peek_at(1), Tok::Eq | Tok::Neq | Tok::LParen) {
            self.bump();
            return Ok(SFormula::True);
        }
        if self.is_kw("false") && !matches!(self.peek_at(1), Tok::Eq | Tok::Neq | Tok::LParen) {
            self.bump();
            return Ok(SFormula::False);
        }
        let mut lits = vec![self.literal()?];
        while *self.peek() == Tok::Amp {
            self.bump();
            lits.push(self.literal()?);
        }
        Ok(SFormula::Conj(lits))
    }

    fn opt_clause(&mut self, kw: &str) -> PResult<Option<SFormula>> {
        if self.eat_kw(kw) {
            Ok(Some(self.formula()?))
        } else {
            Ok(None)
        }
    }

    fn probability(&mut self) -> PResult<Prob> {
        let (line, column) = self.here();
        let first = match self.peek().clone() {
            Tok::Number(n) => {
                self.bump();
                n
            }
            other => return self.error(format!("expected probability, found {}", other.describe())),
        };
        let text = if *self.peek() == Tok::Slash {
            self.bump();
            match self.peek().clone() {
                Tok::Number(d) => {
                    self.bump();
                    format!("{first}/{d}")
                }
                other => return self.error(format!("expected denominator, found {}", other.describe())),
            }
        } else {
            first
        };
        prob::parse(&text).ok_or_else(|| Diagnostic::error(line, column, format!("malformed probability `{text}`")))
    }

    fn tail(&mut self) -> PResult<(Option<SConst>, Vec<Binding>)> {
        let unless = if self.eat_kw("unless") { Some(self.const_ref()?) } else { None };
        let mut bindings = Vec::new();
        if self.eat_kw("where") {
            loop {
                let lhs = self.term()?;
                match self.peek() {
                    Tok::Colon => {
                        self.bump();
                        let sort = self.ident()?;
                        bindings.push(Binding::Var { name: lhs.text, sort: sort.text, line: lhs.line, column: lhs.column });
                    }
                    Tok::Eq | Tok::Neq => {
                        let eq = *self.peek() == Tok::Eq;
                        self.bump();
                        let rhs = self.term()?;
                        bindings.push(Binding::Guard { lhs, eq, rhs });
                    }
                    other => return self.error(format!("expected `:`, `=` or `!=` in where clause, found {}", other.describe())),
                }
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::Dot)?;
        Ok((unless, bindings))
    }

    fn statement(&mut self, out: &mut Surface) -> PResult<()> {
        let (line, column) = self.here();
        let kw = match self.peek().clone() {
            Tok::Ident(s) => s,
            other => return self.error(format!("expected a statement, found {}", other.describe())),
        };
        if kw == "sort" {
            self.bump();
            let name = self.ident()?;
            self.expect(Tok::Eq)?;
            self.expect(Tok::LBrace)?;
            let mut members = Vec::new();
            if *self.peek() != Tok::RBrace {
                loop {
                    members.push(self.term()?);
                    if *self.peek() == Tok::Comma {
                        self.bump();
                    } else {
                        break;
                    }
                }
            }
            self.expect(Tok::RBrace)?;
            self.expect(Tok::Dot)?;
            out.sorts.push(SSort { name: name.text, members, line, column });
            return Ok(());
        }
        if let Some(kind) = ConstKind::from_keyword(&kw) {
            self.bump();
            let name = self.ident()?;
            let mut args = Vec::new();
            if *self.peek() == Tok::LParen {
                self.bump();
                loop {
                    args.push(self.ident()?);
                    if *self.peek() == Tok::Comma {
                        self.bump();
                    } else {
                        break;
                    }
                }
                self.expect(Tok::RParen)?;
            }
            let value_sort = if *self.peek() == Tok::Colon {
                self.bump();
                Some(self.ident()?)
            } else {
                None
            };
            self.expect(Tok::Dot)?;
            out.decls.push(SDecl { kind, name: name.text, args, value_sort, line: name.line, column: name.column });
            return Ok(());
        }
        if kw == "group" {
            self.bump();
            let name = self.ident()?;
            self.expect(Tok::LBrace)?;
            let mut patterns = Vec::new();
            loop {
                let p = self.ident()?;
                let args = if *self.peek() == Tok::LParen {
                    self.bump();
                    let mut a = Vec::new();
                    loop {
                        if *self.peek() == Tok::Star {
                            self.bump();
                            a.push(None);
                        } else {
                            a.push(Some(self.term()?.text));
                        }
                        if *self.peek() == Tok::Comma {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    self.expect(Tok::RParen)?;
                    Some(a)
                } else {
                    None
                };
                patterns.push(SPattern { name: p.text, args, line: p.line, column: p.column });
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
            self.expect(Tok::RBrace)?;
            self.expect(Tok::Dot)?;
            out.groups.push(SGroup { name: name.text, patterns, line, column });
            return Ok(());
        }
        let law = match kw.as_str() {
            "caused" => {
                self.bump();
                let is_row = matches!(self.peek(), Tok::Ident(_)) && {
                    // Scan `Name(args) = {` without consuming.
                    let mut k = 1;
                    if *self.peek_at(1) == Tok::LParen {
                        let mut depth = 0;
                        loop {
                            match self.peek_at(k) {
                                Tok::LParen => depth += 1,
                                Tok::RParen => {
                                    depth -= 1;
                                    if depth == 0 {
                                        k += 1;
                                        break;
                                    }
                                }
                                Tok::Eof => break,
                                _ => {}
                            }
                            k += 1;
                        }
                    }
                    *self.peek_at(k) == Tok::Eq && *self.peek_at(k + 1) == Tok::LBrace
                };
                if is_row {
                    let target = self.const_ref()?;
                    self.expect(Tok::Eq)?;
                    self.expect(Tok::LBrace)?;
                    let mut row = Vec::new();
                    loop {
                        let v = self.term()?;
                        self.expect(Tok::Colon)?;
                        let p = self.probability()?;
                        row.push((v, p));
                        if *self.peek() == Tok::Comma {
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    self.expect(Tok::RBrace)?;
                    let cond = self.opt_clause("if")?;
                    SLaw::PfRow { target, row, cond }
                } else {
                    let head = self.formula()?;
                    let cond = self.opt_clause("if")?;
                    let after = self.opt_clause("after")?;
                    SLaw::Caused { head, cond, after }
                }
            }
            "observed" => {
                self.bump();
                let head = self.formula()?;
                let cond = self.opt_clause("if")?;
                let after = self.opt_clause("after")?;
                SLaw::Observed { head, cond, after }
            }
            "initially" => {
                self.bump();
                let head = self.formula()?;
                let cond = self.opt_clause("if")?;
                SLaw::Initially { head, cond }
            }
            "reward" => {
                self.bump();
                let mut value = self.term()?;
                if *self.peek() == Tok::Slash {
                    self.bump();
                    let d = self.term()?;
                    value.text = format!("{}/{}", value.text, d.text);
                }
                let cond = self.opt_clause("if")?;
                let after = self.opt_clause("after")?;
                SLaw::Reward { value, cond, after }
            }
            "inertial" => {
                self.bump();
                SLaw::Inertial { target: self.const_ref()? }
            }
            "default" => {
                self.bump();
                let lit = self.literal()?;
                let cond = self.opt_clause("if")?;
                let after = self.opt_clause("after")?;
                SLaw::Default { lit, cond, after }
            }
            other => return self.error(format!("unknown statement keyword `{other}`")),
        };
        let (unless, bindings) = self.tail()?;
        out.laws.push(SStatement { law, unless, bindings, line, column });
        Ok(())
    }

    fn recover(&mut self) {
        while !matches!(self.peek(), Tok::Dot | Tok::Eof) {
            self.bump();
        }
        if *self.peek() == Tok::Dot {
            self.bump();
        }
    }
}

/// Parse and ground a source text.
pub fn parse(source: &str) -> Result<ActionDescription, Diagnostics> {
    let toks = lex(source).map_err(Diagnostics)?;
    let mut p = Parser { toks, pos: 0 };
    let mut surface = Surface::default();
    let mut errors = Vec::new();
    while *p.peek() != Tok::Eof {
        if let Err(e) = p.statement(&mut surface) {
            errors.push(e);
            p.recover();
        }
    }
    if !errors.is_empty() {
        return Err(Diagnostics(errors));
    }
    let mut g = Grounder::new();
    g.declare(&surface);
    if g.errors.is_empty() && g.d.constants.is_empty() {
        g.errors.push(Diagnostic::error(1, 1, "no constants declared"));
    }
    if !g.errors.is_empty() {
        return Err(Diagnostics(g.errors));
    }
    for (i, st) in surface.laws.iter().enumerate() {
        g.ground_statement(i, st);
    }
    g.groups(&surface.groups);
    if g.errors.is_empty() {
        Ok(g.d)
    } else {
        Err(Diagnostics(g.errors))
    }
}

struct Grounder {
    d: ActionDescription,
    decl_index: HashMap<String, usize>,
    errors: Vec<Diagnostic>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Slot {
    StaticHead,
    StaticCond,
    DynamicHead,
    DynamicCond,
    DynamicAfter,
    ObsHead,
    ObsCond,
    ObsAfter,
    InitHead,
    InitCond,
    RewardCond,
    RewardAfter,
    PfCond,
}

impl Slot {
    fn allows(self, k: ConstKind) -> bool {
        use ConstKind::*;
        let fluentish = matches!(k, RegularFluent | StaticallyDeterminedFluent | Rigid);
        match self {
            Slot::StaticHead | Slot::StaticCond | Slot::DynamicCond | Slot::RewardCond => fluentish,
            Slot::DynamicHead => k == RegularFluent,
            Slot::DynamicAfter => fluentish || matches!(k, Action | Pf),
            Slot::ObsHead => k == Observation,
            Slot::ObsCond => fluentish || k == Observation,
            Slot::ObsAfter => matches!(k, Action | Pf),
            Slot::InitHead => matches!(k, RegularFluent | StaticallyDeterminedFluent),
            Slot::InitCond => fluentish || k == InitPf,
            Slot::RewardAfter => fluentish || k == Action,
            Slot::PfCond => k != Observation,
        }
    }

    fn describe(self) -> &'static str {
        match self {
            Slot::StaticHead => "head of a static law",
            Slot::StaticCond => "condition of a static law",
            Slot::DynamicHead => "head of a dynamic law",
            Slot::DynamicCond => "if-part of a dynamic law",
            Slot::DynamicAfter => "after-part of a dynamic law",
            Slot::ObsHead => "head of an observation law",
            Slot::ObsCond => "if-part of an observation law",
            Slot::ObsAfter => "after-part of an observation law",
            Slot::InitHead => "head of an initial static law",
            Slot::InitCond => "condition of an initial static law",
            Slot::RewardCond => "if-part of a reward law",
            Slot::RewardAfter => "after-part of a reward law",
            Slot::PfCond => "condition of a pf declaration",
        }
    }
}

fn kind_noun(k: ConstKind) -> &'static str {
    match k {
        ConstKind::RegularFluent => "regular fluent",
        ConstKind::StaticallyDeterminedFluent => "statically determined fluent",
        ConstKind::Rigid => "rigid constant",
        ConstKind::Action => "action constant",
        ConstKind::Pf => "pf constant",
        ConstKind::InitPf => "initpf constant",
        ConstKind::Observation => "observation constant",
    }
}

impl Grounder {
    fn new() -> Self {
        let d = ActionDescription {
            sorts: vec![Sort { name: BOOLEAN.into(), members: vec!["false".into(), "true".into()] }],
            decls: Vec::new(),
            constants: Vec::new(),
            laws: Vec::new(),
            groups: Vec::new(),
            index: HashMap::new(),
        };
        Grounder { d, decl_index: HashMap::new(), errors: Vec::new() }
    }

    fn declare(&mut self, s: &Surface) {
        for so in &s.sorts {
            if self.d.sort(&so.name).is_some() {
                self.errors.push(Diagnostic::error(so.line, so.column, format!("sort `{}` declared twice", so.name)));
                continue;
            }
            if so.members.is_empty() {
                self.errors.push(Diagnostic::error(so.line, so.column, format!("sort `{}` has no members", so.name)));
                continue;
            }
            let mut seen = HashSet::new();
            for m in &so.members {
                if !seen.insert(m.text.clone()) {
                    self.errors.push(Diagnostic::error(m.line, m.column, format!("duplicate member `{}` in sort `{}`", m.text, so.name)));
                }
            }
            self.d.sorts.push(Sort { name: so.name.clone(), members: so.members.iter().map(|m| m.text.clone()).collect() });
        }
        for de in &s.decls {
            if self.decl_index.contains_key(&de.name) {
                self.errors.push(Diagnostic::error(de.line, de.column, format!("constant `{}` declared twice", de.name)));
                continue;
            }
            let mut arg_sorts = Vec::new();
            let mut ok = true;
            for a in &de.args {
                match self.d.sort(&a.text) {
                    Some(i) => arg_sorts.push(i),
                    None => {
                        self.errors.push(Diagnostic::error(a.line, a.column, format!("undeclared sort `{}`", a.text)));
                        ok = false;
                    }
                }
            }
            let value_sort = match &de.value_sort {
                None => 0,
                Some(v) => match self.d.sort(&v.text) {
                    Some(i) => i,
                    None => {
                        self.errors.push(Diagnostic::error(v.line, v.column, format!("undeclared sort `{}`", v.text)));
                        ok = false;
                        0
                    }
                },
            };
            if !ok {
                continue;
            }
            if de.kind == ConstKind::Action && value_sort != 0 {
                self.errors.push(Diagnostic::error(de.line, de.column, format!("non-Boolean action constant `{}`", de.name)));
                continue;
            }
            let decl = self.d.decls.len();
            self.d.decls.push(ConstantDecl { name: de.name.clone(), arg_sorts: arg_sorts.clone(), kind: de.kind, value_sort });
            self.decl_index.insert(de.name.clone(), decl);
            let mut domain = self.d.sorts[value_sort].members.clone();
            if de.kind == ConstKind::Observation && !domain.iter().any(|v| v == NA) {
                domain.push(NA.to_string());
            }
            let arg_members: Vec<Vec<String>> = arg_sorts.iter().map(|&s| self.d.sorts[s].members.clone()).collect();
            for args in product(&arg_members) {
                let name = ground_name(&de.name, &args);
                self.d.add_constant(GroundConstant { name, decl, args, kind: de.kind, domain: domain.clone() });
            }
        }
    }

    fn ground_statement(&mut self, index: usize, st: &SStatement) {
        let mut vars: Vec<(String, Vec<String>)> = Vec::new();
        let mut guards = Vec::new();
        for b in &st.bindings {
            match b {
                Binding::Var { name, sort, line, column } => {
                    if vars.iter().any(|(v, _)| v == name) {
                        self.errors.push(Diagnostic::error(*line, *column, format!("variable `{name}` bound twice")));
                        return;
                    }
                    match self.d.sort(sort) {
                        Some(s) => vars.push((name.clone(), self.d.sorts[s].members.clone())),
                        None => {
                            self.errors.push(Diagnostic::error(*line, *column, format!("undeclared sort `{sort}`")));
                            return;
                        }
                    }
                }
                Binding::Guard { lhs, eq, rhs } => guards.push((lhs.clone(), *eq, rhs.clone())),
            }
        }
        let domains: Vec<Vec<String>> = vars.iter().map(|(_, d)| d.clone()).collect();
        let mut tuple = 0;
        for values in product(&domains) {
            let env: HashMap<&str, &str> = vars.iter().map(|(n, _)| n.as_str()).zip(values.iter().map(|s| s.as_str())).collect();
            let subst = |t: &STerm| env.get(t.text.as_str()).map(|s| s.to_string()).unwrap_or_else(|| t.text.clone());
            if !guards.iter().all(|(l, eq, r)| (subst(l) == subst(r)) == *eq) {
                continue;
            }
            let origin = Origin { statement: index, tuple, line: st.line, column: st.column };
            tuple += 1;
            match self.ground_law(st, &env, origin) {
                Ok(law) => self.d.laws.push(law),
                Err(e) => {
                    self.errors.push(e);
                    return;
                }
            }
        }
    }

    fn resolve_const(&self, c: &SConst, env: &HashMap<&str, &str>) -> PResult<usize> {
        let decl = match self.decl_index.get(&c.name) {
            Some(&d) => d,
            None => return Err(Diagnostic::error(c.line, c.column, format!("undeclared constant `{}`", c.name))),
        };
        let de = &self.d.decls[decl];
        if de.arg_sorts.len() != c.args.len() {
            return Err(Diagnostic::error(
                c.line,
                c.column,
                format!("constant `{}` takes {} argument(s), found {}", c.name, de.arg_sorts.len(), c.args.len()),
            ));
        }
        let mut args = Vec::new();
        for (a, &s) in c.args.iter().zip(&de.arg_sorts) {
            let v = env.get(a.text.as_str()).map(|s| s.to_string()).unwrap_or_else(|| a.text.clone());
            if !self.d.sorts[s].members.contains(&v) {
                return Err(Diagnostic::error(
                    a.line,
                    a.column,
                    format!("`{}` is not a member of sort `{}` (argument of `{}`)", v, self.d.sorts[s].name, c.name),
                ));
            }
            args.push(v);
        }
        let name = ground_name(&c.name, &args);
        Ok(self.d.constant(&name).expect("ground constant exists for every argument tuple"))
    }

    fn resolve_lit(&self, l: &SLit, env: &HashMap<&str, &str>, slot: Slot) -> PResult<Literal> {
        let c = self.resolve_const(&l.target, env)?;
        let gc = &self.d.constants[c];
        if !slot.allows(gc.kind) {
            let msg = if gc.kind == ConstKind::Observation {
                format!("observation constant `{}` used outside an observation law", gc.name)
            } else {
                format!("{} `{}` is not allowed in the {}", kind_noun(gc.kind), gc.name, slot.describe())
            };
            return Err(Diagnostic::error(l.target.line, l.target.column, msg));
        }
        let value = match &l.value {
            None => {
                if !gc.is_boolean() {
                    return Err(Diagnostic::error(
                        l.target.line,
                        l.target.column,
                        format!("`{}` is not Boolean; write `{}=value`", gc.name, gc.name),
                    ));
                }
                return Ok(Literal { atom: Atom { constant: c, value: if l.positive { 1 } else { 0 } }, positive: true });
            }
            Some(v) => env.get(v.text.as_str()).map(|s| s.to_string()).unwrap_or_else(|| v.text.clone()),
        };
        match gc.value_index(&value) {
            Some(vi) => Ok(Literal { atom: Atom { constant: c, value: vi }, positive: l.positive }),
            None => {
                let t = l.value.as_ref().unwrap();
                Err(Diagnostic::error(t.line, t.column, format!("`{}` is not in the domain of `{}`", value, gc.name)))
            }
        }
    }

    fn resolve_formula(&self, f: &Option<SFormula>, env: &HashMap<&str, &str>, slot: Slot) -> PResult<Formula> {
        match f {
            None | Some(SFormula::True) => Ok(Formula::top()),
            Some(SFormula::False) => Ok(Formula::False),
            Some(SFormula::Conj(ls)) => {
                let mut out = Vec::new();
                for l in ls {
                    let lit = self.resolve_lit(l, env, slot)?;
                    if !out.contains(&lit) {
                        out.push(lit);
                    }
                }
                Ok(Formula::Conj(out))
            }
        }
    }

    fn ground_law(&self, st: &SStatement, env: &HashMap<&str, &str>, origin: Origin) -> PResult<CausalLaw> {
        let some = |f: &SFormula| Some(f.clone());
        let kind = match &st.law {
            SLaw::Caused { head, cond, after: None } => {
                LawKind::Static { head: Head::Formula(self.resolve_formula(&some(head), env, Slot::StaticHead)?), cond: self.resolve_formula(cond, env, Slot::StaticCond)? }
            }
            SLaw::Caused { head, cond, after } => LawKind::FluentDynamic {
                head: Head::Formula(self.resolve_formula(&some(head), env, Slot::DynamicHead)?),
                cond: self.resolve_formula(cond, env, Slot::DynamicCond)?,
                after: self.resolve_formula(after, env, Slot::DynamicAfter)?,
            },
            SLaw::Default { lit, cond, after } => {
                let slot = if after.is_some() { Slot::DynamicHead } else { Slot::StaticHead };
                let l = self.resolve_lit(lit, env, slot)?;
                if !l.positive {
                    return Err(Diagnostic::error(lit.target.line, lit.target.column, "a default must name a value, not exclude one"));
                }
                match after {
                    None => LawKind::Static { head: Head::Default(l.atom), cond: self.resolve_formula(cond, env, Slot::StaticCond)? },
                    Some(_) => LawKind::FluentDynamic {
                        head: Head::Default(l.atom),
                        cond: self.resolve_formula(cond, env, Slot::DynamicCond)?,
                        after: self.resolve_formula(after, env, Slot::DynamicAfter)?,
                    },
                }
            }
            SLaw::Observed { head, cond, after: None } => LawKind::ObservationStatic {
                head: self.resolve_formula(&some(head), env, Slot::ObsHead)?,
                cond: self.resolve_formula(cond, env, Slot::ObsHead)?,
            },
            SLaw::Observed { head, cond, after } => LawKind::ObservationDynamic {
                head: self.resolve_formula(&some(head), env, Slot::ObsHead)?,
                cond: self.resolve_formula(cond, env, Slot::ObsCond)?,
                after: self.resolve_formula(after, env, Slot::ObsAfter)?,
            },
            SLaw::Initially { head, cond } => LawKind::InitStatic {
                head: self.resolve_formula(&some(head), env, Slot::InitHead)?,
                cond: self.resolve_formula(cond, env, Slot::InitCond)?,
            },
            SLaw::Reward { value, cond, after } => {
                let text = env.get(value.text.as_str()).map(|s| s.to_string()).unwrap_or_else(|| value.text.clone());
                let v = prob::parse(&text)
                    .ok_or_else(|| Diagnostic::error(value.line, value.column, format!("reward value `{text}` is not a number")))?;
                let (cond, after) = match (cond, after) {
                    (Some(c), None) => (None, Some(c.clone())),
                    (c, a) => (c.clone(), a.clone()),
                };
                LawKind::Utility {
                    value: v,
                    cond: self.resolve_formula(&cond, env, Slot::RewardCond)?,
                    after: self.resolve_formula(&after, env, Slot::RewardAfter)?,
                }
            }
            SLaw::Inertial { target } => {
                let c = self.resolve_const(target, env)?;
                if self.d.constants[c].kind != ConstKind::RegularFluent {
                    return Err(Diagnostic::error(target.line, target.column, format!("`{}` is not a regular fluent", self.d.constants[c].name)));
                }
                LawKind::Inertial { constant: c }
            }
            SLaw::PfRow { target, row, cond } => {
                let c = self.resolve_const(target, env)?;
                let gc = &self.d.constants[c];
                if !gc.kind.is_probabilistic() {
                    return Err(Diagnostic::error(target.line, target.column, format!("`{}` is not a pf or initpf constant", gc.name)));
                }
                let mut r: Vec<(usize, Prob)> = Vec::new();
                let mut total = prob::zero();
                for (v, p) in row {
                    let text = env.get(v.text.as_str()).map(|s| s.to_string()).unwrap_or_else(|| v.text.clone());
                    let vi = gc
                        .value_index(&text)
                        .ok_or_else(|| Diagnostic::error(v.line, v.column, format!("`{}` is not in the domain of `{}`", text, gc.name)))?;
                    if r.iter().any(|(x, _)| *x == vi) {
                        return Err(Diagnostic::error(v.line, v.column, format!("value `{text}` listed twice")));
                    }
                    if !p.is_positive() || *p >= Prob::one() {
                        return Err(Diagnostic::error(v.line, v.column, format!("probability of `{text}` must lie strictly between 0 and 1")));
                    }
                    total += p;
                    r.push((vi, p.clone()));
                }
                if total != Prob::one() {
                    return Err(Diagnostic::error(
                        target.line,
                        target.column,
                        format!("probability row for `{}` sums to {}, not 1", gc.name, prob::to_exact_string(&total)),
                    ));
                }
                if gc.kind == ConstKind::InitPf {
                    if cond.is_some() {
                        return Err(Diagnostic::error(target.line, target.column, "an initpf declaration takes no condition"));
                    }
                    LawKind::InitPfDecl { constant: c, row: r }
                } else {
                    LawKind::PfDecl { constant: c, row: r, cond: self.resolve_formula(cond, env, Slot::PfCond)? }
                }
            }
        };
        let unless = match &st.unless {
            None => None,
            Some(u) => {
                let mut args = Vec::new();
                for a in &u.args {
                    args.push(env.get(a.text.as_str()).map(|s| s.to_string()).unwrap_or_else(|| a.text.clone()));
                }
                Some(ground_name(&u.name, &args))
            }
        };
        if unless.is_some() && !kind.has_condition_slot() {
            return Err(Diagnostic::error(st.line, st.column, "`unless` applied to a law that has no condition"));
        }
        Ok(CausalLaw { kind, unless, origin })
    }

    fn groups(&mut self, groups: &[SGroup]) {
        let mut owner: HashMap<usize, usize> = HashMap::new();
        for (gi, g) in groups.iter().enumerate() {
            if groups[..gi].iter().any(|h| h.name == g.name) {
                self.errors.push(Diagnostic::error(g.line, g.column, format!("group `{}` declared twice", g.name)));
                continue;
            }
            let mut actions = Vec::new();
            for p in &g.patterns {
                let matched: Vec<usize> = self
                    .d
                    .constants
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| c.kind == ConstKind::Action && self.d.decls[c.decl].name == p.name)
                    .filter(|(_, c)| match &p.args {
                        None => true,
                        Some(a) => a.len() == c.args.len() && a.iter().zip(&c.args).all(|(x, y)| x.as_ref().is_none_or(|x| x == y)),
                    })
                    .map(|(i, _)| i)
                    .collect();
                if matched.is_empty() {
                    self.errors.push(Diagnostic::error(p.line, p.column, format!("pattern `{}` matches no action", p.name)));
                }
                for a in matched {
                    if let Some(&other) = owner.get(&a) {
                        if other != gi {
                            self.errors.push(Diagnostic::error(
                                p.line,
                                p.column,
                                format!("action `{}` is in groups `{}` and `{}`", self.d.constants[a].name, groups[other].name, g.name),
                            ));
                        }
                        continue;
                    }
                    owner.insert(a, gi);
                    actions.push(a);
                }
            }
            actions.sort_unstable();
            self.d.groups.push(ActionGroup { name: g.name.clone(), actions });
        }
        if !groups.is_empty() {
            for a in self.d.action_constants() {
                if !owner.contains_key(&a) {
                    let g = &groups[0];
                    self.errors.push(Diagnostic::error(g.line, g.column, format!("action `{}` belongs to no group", self.d.constants[a].name)));
                }
            }
        }
    }
}

/// Cartesian product, first list outermost.
pub(crate) fn product(lists: &[Vec<String>]) -> Vec<Vec<String>> {
    let mut out = vec![Vec::new()];
    for l in lists {
        let mut next = Vec::with_capacity(out.len() * l.len());
        for prefix in &out {
            for v in l {
                let mut p = prefix.clone();
                p.push(v.clone());
                next.push(p);
            }
        }
        out = next;
    }
    out
}
