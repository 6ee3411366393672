//! Reading and writing moded logic programs.
//!
//! The surface syntax is clause-oriented: `head :- b1, ..., bn.` with
//! facts written `head.`, `%` line comments, and bracket list sugar
//! (`[a,b|Xs]`). Three directives configure a program:
//!
//! * `:- mode append(in,in,out).` — exactly one per predicate; every
//!   predicate used in a clause or query must have one, and the
//!   declaration may appear anywhere in the file.
//! * `:- delay append(Xs,_,_) until nonvar(Xs).` — blocks selection of
//!   an atom until the named argument positions are sufficiently
//!   instantiated (`nonvar` or `ground`, at most one condition per
//!   position, conditions joined by `,`).
//! * `:- level quicksort_dl(X,_,_) is len(X).` — declares a level
//!   expression for termination checking, a sum of weighted list-length
//!   or term-size measures over input positions.
//!
//! Variables are clause-scoped; `_` is a fresh anonymous variable at
//! each occurrence. Parsing is two-pass so directives and clauses can
//! come in any order: raw clauses first, then modes resolved onto every
//! atom.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::error::ContractError;
use crate::mode::{Clause, ModedAtom, Moding, Query};
use crate::term::{Functor, Term, VarGen, VarId, VarNames};

/// Names of the comparison predicates that [`Program::materialize_comparisons`]
/// can back with ground fact tables.
pub const COMPARISON_PREDS: [&str; 2] = ["=<", ">"];

/// A syntax or consistency error, located in the source text.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("line {line}, column {col}: {message}")]
pub struct ParseError {
    /// 1-based source line.
    pub line: usize,
    /// 1-based source column.
    pub col: usize,
    /// What went wrong.
    pub message: String,
}

impl ParseError {
    fn new(line: usize, col: usize, message: impl Into<String>) -> Self {
        ParseError { line, col, message: message.into() }
    }
}

/// One instantiation requirement on an argument position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DelayCondition {
    /// The argument must not be a bare variable.
    Nonvar,
    /// The argument must contain no variables at all.
    Ground,
}

impl DelayCondition {
    /// True if the term satisfies the condition.
    pub fn satisfied(&self, t: &Term) -> bool {
        match self {
            DelayCondition::Nonvar => !t.is_var(),
            DelayCondition::Ground => t.is_ground(),
        }
    }
}

impl fmt::Display for DelayCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DelayCondition::Nonvar => "nonvar",
            DelayCondition::Ground => "ground",
        })
    }
}

/// A delay declaration: conditions that must hold before an atom of the
/// predicate may be selected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DelayDecl {
    /// Predicate the declaration applies to.
    pub pred: Functor,
    /// Its arity.
    pub arity: usize,
    /// Required condition per argument position (0-based); positions
    /// absent from the map are unconstrained.
    pub conditions: BTreeMap<usize, DelayCondition>,
}

impl DelayDecl {
    /// True if the atom may be selected: every declared condition holds
    /// on the corresponding argument.
    pub fn satisfied_by(&self, atom: &ModedAtom) -> bool {
        self.conditions
            .iter()
            .all(|(pos, cond)| cond.satisfied(&atom.args[*pos]))
    }
}

/// The measure applied to one argument in a level expression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    /// Number of list cells along the spine: `len([a,b|X])` is 2.
    Len,
    /// Number of function symbols: `size(f(a,X))` is 2.
    Size,
}

impl Norm {
    /// Evaluates the measure on a term.
    pub fn eval(&self, t: &Term) -> u64 {
        match self {
            Norm::Len => {
                let mut n = 0u64;
                let mut cur = t;
                while let Term::App(f, args) = cur {
                    if f.name() == crate::term::CONS && args.len() == 2 {
                        n += 1;
                        cur = &args[1];
                    } else {
                        break;
                    }
                }
                n
            }
            Norm::Size => match t {
                Term::Var(_) => 0,
                Term::App(_, args) => 1 + args.iter().map(|a| self.eval(a)).sum::<u64>(),
            },
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Norm::Len => "len",
            Norm::Size => "size",
        })
    }
}

/// One summand of a level expression: a constant, or a coefficient
/// times a measure of one argument position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelTerm {
    /// Multiplier (the constant itself when there is no measure).
    pub coeff: u64,
    /// Measure and 0-based argument position, if any.
    pub norm: Option<(Norm, usize)>,
}

/// A sum of [`LevelTerm`]s over a predicate's input positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelExpr {
    /// The summands, in source order.
    pub terms: Vec<LevelTerm>,
}

impl LevelExpr {
    /// Evaluates the expression on an atom's argument list.
    pub fn eval(&self, args: &[Term]) -> u64 {
        self.terms
            .iter()
            .map(|t| match t.norm {
                None => t.coeff,
                Some((norm, pos)) => t.coeff.saturating_mul(norm.eval(&args[pos])),
            })
            .sum()
    }
}

/// A level declaration for one predicate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelDecl {
    /// Predicate the declaration applies to.
    pub pred: Functor,
    /// Its arity.
    pub arity: usize,
    /// The level expression over its input positions.
    pub expr: LevelExpr,
}

/// A parsed program: clauses plus its mode, delay, and level tables.
#[derive(Debug, Clone)]
pub struct Program {
    /// Clauses in source order (materialized comparison facts, if any,
    /// come after all source clauses).
    pub clauses: Vec<Clause>,
    /// Declared moding per predicate.
    pub modes: BTreeMap<(Functor, usize), Arc<[Moding]>>,
    /// Delay declarations in source order.
    pub delays: Vec<DelayDecl>,
    /// Level declarations in source order.
    pub levels: Vec<LevelDecl>,
    /// Source names of the program's variables.
    pub var_names: VarNames,
    /// First variable identifier not used by the program.
    pub next_var: VarId,
    /// Program name, used in reports.
    pub name: String,
    /// Source line of each clause (0 for materialized facts).
    pub clause_lines: Vec<usize>,
    /// Inclusive bounds of the materialized comparison tables, if
    /// [`Program::materialize_comparisons`] has run.
    pub materialized: Option<(i64, i64)>,
}

impl Program {
    /// The delay declaration covering a predicate, if any.
    pub fn delay_for(&self, key: &(Functor, usize)) -> Option<&DelayDecl> {
        self.delays
            .iter()
            .find(|d| d.pred == key.0 && d.arity == key.1)
    }

    /// The level declaration for a predicate, if any.
    pub fn level_for(&self, key: &(Functor, usize)) -> Option<&LevelDecl> {
        self.levels
            .iter()
            .find(|l| l.pred == key.0 && l.arity == key.1)
    }

    /// The declared moding of a predicate, if any.
    pub fn mode_for(&self, key: &(Functor, usize)) -> Option<&Arc<[Moding]>> {
        self.modes.get(key)
    }

    /// Predicates that have at least one clause.
    pub fn defined_predicates(&self) -> BTreeSet<(Functor, usize)> {
        self.clauses.iter().map(|c| c.head.key()).collect()
    }

    /// The clauses whose head predicate is `key`, with their global
    /// clause indices.
    pub fn clauses_for(&self, key: &(Functor, usize)) -> Vec<(usize, &Clause)> {
        self.clauses
            .iter()
            .enumerate()
            .filter(|(_, c)| &c.head.key() == key)
            .collect()
    }

    /// Stable identifier of a clause: `pred/arity#k` with `k` counting
    /// the predicate's clauses from 1 in source order.
    pub fn clause_id(&self, index: usize) -> String {
        let key = self.clauses[index].head.key();
        let k = self.clauses[..index]
            .iter()
            .filter(|c| c.head.key() == key)
            .count()
            + 1;
        format!("{}/{}#{k}", key.0, key.1)
    }

    /// True if the predicate is a comparison backed by a materialized
    /// fact table.
    pub fn is_materialized_comparison(&self, key: &(Functor, usize)) -> bool {
        self.materialized.is_some()
            && key.1 == 2
            && COMPARISON_PREDS.contains(&key.0.name())
    }

    /// Backs the declared comparison predicates (`=<`/2 and `>`/2) with
    /// ground fact tables over the numerals `lo..=hi`. Only predicates
    /// that already have a mode declaration receive a table; predicates
    /// the program never declared stay untouched.
    pub fn materialize_comparisons(&mut self, lo: i64, hi: i64) -> Result<(), ContractError> {
        if self.materialized.is_some() {
            return Err(ContractError::Invalid(
                "comparison tables were already materialized".to_string(),
            ));
        }
        if lo > hi {
            return Err(ContractError::Invalid(format!(
                "empty comparison range {lo}..{hi}"
            )));
        }
        let mut added = false;
        for name in COMPARISON_PREDS {
            let key = (Functor::new(name), 2);
            let Some(mode) = self.modes.get(&key) else { continue };
            let mode = Arc::clone(mode);
            for x in lo..=hi {
                for y in lo..=hi {
                    let holds = match name {
                        "=<" => x <= y,
                        _ => x > y,
                    };
                    if holds {
                        let head = ModedAtom::new(
                            key.0.clone(),
                            vec![Term::int(x), Term::int(y)],
                            Arc::clone(&mode),
                        );
                        self.clauses.push(Clause::new(head, vec![]));
                        self.clause_lines.push(0);
                        added = true;
                    }
                }
            }
        }
        if added {
            self.materialized = Some((lo, hi));
        }
        Ok(())
    }

    /// Renders the program back to source text. Parsing the result
    /// reproduces the same program, and printing again reproduces the
    /// same text.
    pub fn to_source(&self) -> String {
        let mut out = String::new();
        for ((pred, arity), mode) in &self.modes {
            out.push_str(":- mode ");
            out.push_str(&pred.to_string());
            if *arity > 0 {
                out.push('(');
                for (i, m) in mode.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push_str(&m.to_string());
                }
                out.push(')');
            }
            out.push_str(".\n");
        }
        for d in &self.delays {
            out.push_str(":- delay ");
            out.push_str(&d.pred.to_string());
            if d.arity > 0 {
                out.push('(');
                for i in 0..d.arity {
                    if i > 0 {
                        out.push(',');
                    }
                    if d.conditions.contains_key(&i) {
                        out.push_str(&format!("X{}", i + 1));
                    } else {
                        out.push('_');
                    }
                }
                out.push(')');
            }
            out.push_str(" until ");
            for (i, (pos, cond)) in d.conditions.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(&format!("{cond}(X{})", pos + 1));
            }
            out.push_str(".\n");
        }
        for l in &self.levels {
            out.push_str(":- level ");
            out.push_str(&l.pred.to_string());
            if l.arity > 0 {
                out.push('(');
                let referenced: BTreeSet<usize> =
                    l.expr.terms.iter().filter_map(|t| t.norm.map(|(_, p)| p)).collect();
                for i in 0..l.arity {
                    if i > 0 {
                        out.push(',');
                    }
                    if referenced.contains(&i) {
                        out.push_str(&format!("X{}", i + 1));
                    } else {
                        out.push('_');
                    }
                }
                out.push(')');
            }
            out.push_str(" is ");
            for (i, t) in l.expr.terms.iter().enumerate() {
                if i > 0 {
                    out.push_str(" + ");
                }
                match t.norm {
                    None => out.push_str(&t.coeff.to_string()),
                    Some((norm, pos)) => {
                        if t.coeff != 1 {
                            out.push_str(&format!("{}*", t.coeff));
                        }
                        out.push_str(&format!("{norm}(X{})", pos + 1));
                    }
                }
            }
            out.push_str(".\n");
        }
        if !(self.modes.is_empty() && self.delays.is_empty() && self.levels.is_empty()) {
            out.push('\n');
        }
        for clause in &self.clauses {
            out.push_str(&self.clause_source(clause));
            out.push('\n');
        }
        out
    }

    /// Renders one clause as source text.
    pub fn clause_source(&self, clause: &Clause) -> String {
        let mut out = clause.head.display(&self.var_names).to_string();
        if !clause.body.is_empty() {
            out.push_str(" :- ");
            for (i, b) in clause.body.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(&b.display(&self.var_names).to_string());
            }
        }
        out.push('.');
        out
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_source())
    }
}

/// A parsed query, with the name table and variable budget needed to
/// run it against its program.
#[derive(Debug, Clone)]
pub struct ParsedQuery {
    /// The query itself.
    pub query: Query,
    /// Source names of the query's variables.
    pub var_names: VarNames,
    /// First variable identifier unused by both program and query.
    pub next_var: VarId,
}

// ---------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    /// Lowercase identifier, digit sequence, or symbolic name.
    Name(String),
    /// Uppercase or `_` identifier; `_` alone is anonymous.
    Var(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Bar,
    Dot,
    Turnstile,
    Plus,
    Star,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Name(n) => write!(f, "'{n}'"),
            Tok::Var(n) => write!(f, "'{n}'"),
            Tok::LParen => f.write_str("'('"),
            Tok::RParen => f.write_str("')'"),
            Tok::LBracket => f.write_str("'['"),
            Tok::RBracket => f.write_str("']'"),
            Tok::Comma => f.write_str("','"),
            Tok::Bar => f.write_str("'|'"),
            Tok::Dot => f.write_str("'.'"),
            Tok::Turnstile => f.write_str("':-'"),
            Tok::Plus => f.write_str("'+'"),
            Tok::Star => f.write_str("'*'"),
        }
    }
}

#[derive(Debug, Clone)]
struct Lexed {
    tok: Tok,
    line: usize,
    col: usize,
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn is_symbolic_char(c: char) -> bool {
    matches!(c, '=' | '<' | '>')
}

fn lex(text: &str) -> Result<Vec<Lexed>, ParseError> {
    let cs: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let (mut line, mut col) = (1usize, 1usize);
    while i < cs.len() {
        let c = cs[i];
        let (tl, tc) = (line, col);
        let mut emit = |tok: Tok| out.push(Lexed { tok, line: tl, col: tc });
        match c {
            '\n' => {
                line += 1;
                col = 1;
                i += 1;
            }
            c if c.is_whitespace() => {
                col += 1;
                i += 1;
            }
            '%' => {
                while i < cs.len() && cs[i] != '\n' {
                    i += 1;
                }
            }
            '(' | ')' | '[' | ']' | ',' | '|' | '.' | '+' | '*' => {
                emit(match c {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    '[' => Tok::LBracket,
                    ']' => Tok::RBracket,
                    ',' => Tok::Comma,
                    '|' => Tok::Bar,
                    '.' => Tok::Dot,
                    '+' => Tok::Plus,
                    _ => Tok::Star,
                });
                col += 1;
                i += 1;
            }
            ':' => {
                if cs.get(i + 1) == Some(&'-') {
                    emit(Tok::Turnstile);
                    col += 2;
                    i += 2;
                } else {
                    return Err(ParseError::new(tl, tc, "expected ':-'"));
                }
            }
            c if c.is_ascii_lowercase() || c.is_ascii_digit() => {
                let start = i;
                if c.is_ascii_digit() {
                    while i < cs.len() && cs[i].is_ascii_digit() {
                        i += 1;
                    }
                } else {
                    while i < cs.len() && is_ident_char(cs[i]) {
                        i += 1;
                    }
                }
                let name: String = cs[start..i].iter().collect();
                col += i - start;
                emit(Tok::Name(name));
            }
            c if c.is_ascii_uppercase() || c == '_' => {
                let start = i;
                while i < cs.len() && is_ident_char(cs[i]) {
                    i += 1;
                }
                let name: String = cs[start..i].iter().collect();
                col += i - start;
                emit(Tok::Var(name));
            }
            c if is_symbolic_char(c) => {
                let start = i;
                while i < cs.len() && is_symbolic_char(cs[i]) {
                    i += 1;
                }
                let name: String = cs[start..i].iter().collect();
                col += i - start;
                emit(Tok::Name(name));
            }
            other => {
                return Err(ParseError::new(tl, tc, format!("unexpected character '{other}'")));
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------

/// An atom before mode resolution.
#[derive(Debug, Clone)]
struct RawAtom {
    pred: String,
    args: Vec<Term>,
    line: usize,
    col: usize,
}

#[derive(Debug, Clone)]
struct RawClause {
    head: RawAtom,
    body: Vec<RawAtom>,
    line: usize,
}

struct Parser<'a> {
    toks: &'a [Lexed],
    pos: usize,
    gen: VarGen,
    names: VarNames,
}

impl<'a> Parser<'a> {
    fn new(toks: &'a [Lexed], gen: VarGen) -> Self {
        Parser { toks, pos: 0, gen, names: VarNames::new() }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|l| &l.tok)
    }

    fn here(&self) -> (usize, usize) {
        match self.toks.get(self.pos).or_else(|| self.toks.last()) {
            Some(l) => (l.line, l.col),
            None => (1, 1),
        }
    }

    fn fail<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        let (line, col) = self.here();
        Err(ParseError::new(line, col, message))
    }

    fn advance(&mut self) -> Option<&Lexed> {
        let l = self.toks.get(self.pos);
        if l.is_some() {
            self.pos += 1;
        }
        l
    }

    fn expect(&mut self, want: &Tok, context: &str) -> Result<(), ParseError> {
        match self.peek() {
            Some(t) if t == want => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => {
                let got = t.clone();
                self.fail(format!("expected {want} {context}, found {got}"))
            }
            None => self.fail(format!("expected {want} {context}, found end of input")),
        }
    }

    fn expect_name(&mut self, context: &str) -> Result<(String, usize, usize), ParseError> {
        let (line, col) = self.here();
        match self.peek() {
            Some(Tok::Name(n)) => {
                let n = n.clone();
                self.pos += 1;
                Ok((n, line, col))
            }
            Some(t) => {
                let got = t.clone();
                self.fail(format!("expected a name {context}, found {got}"))
            }
            None => self.fail(format!("expected a name {context}, found end of input")),
        }
    }

    fn expect_keyword(&mut self, word: &str, context: &str) -> Result<(), ParseError> {
        match self.peek() {
            Some(Tok::Name(n)) if n == word => {
                self.pos += 1;
                Ok(())
            }
            _ => self.fail(format!("expected '{word}' {context}")),
        }
    }

    /// Resolves a variable token inside one clause's scope.
    fn scoped_var(&mut self, name: &str, scope: &mut BTreeMap<String, VarId>) -> Term {
        if name == "_" {
            return Term::var(self.gen.fresh());
        }
        if let Some(v) = scope.get(name) {
            return Term::var(*v);
        }
        let v = self.gen.fresh();
        scope.insert(name.to_string(), v);
        self.names.insert(v, name.to_string());
        Term::var(v)
    }

    fn parse_term(&mut self, scope: &mut BTreeMap<String, VarId>) -> Result<Term, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Var(name)) => {
                self.pos += 1;
                Ok(self.scoped_var(&name, scope))
            }
            Some(Tok::Name(name)) => {
                self.pos += 1;
                if self.peek() == Some(&Tok::LParen) {
                    self.pos += 1;
                    let args = self.parse_term_list(scope)?;
                    self.expect(&Tok::RParen, "to close the argument list")?;
                    Ok(Term::app(&name, args))
                } else {
                    Ok(Term::constant(&name))
                }
            }
            Some(Tok::LBracket) => {
                self.pos += 1;
                if self.peek() == Some(&Tok::RBracket) {
                    self.pos += 1;
                    return Ok(Term::nil());
                }
                let items = self.parse_term_list(scope)?;
                let tail = if self.peek() == Some(&Tok::Bar) {
                    self.pos += 1;
                    self.parse_term(scope)?
                } else {
                    Term::nil()
                };
                self.expect(&Tok::RBracket, "to close the list")?;
                Ok(Term::list_with_tail(items, tail))
            }
            _ => self.fail("expected a term"),
        }
    }

    fn parse_term_list(
        &mut self,
        scope: &mut BTreeMap<String, VarId>,
    ) -> Result<Vec<Term>, ParseError> {
        let mut items = vec![self.parse_term(scope)?];
        while self.peek() == Some(&Tok::Comma) {
            self.pos += 1;
            items.push(self.parse_term(scope)?);
        }
        Ok(items)
    }

    fn parse_atom(&mut self, scope: &mut BTreeMap<String, VarId>) -> Result<RawAtom, ParseError> {
        let (pred, line, col) = self.expect_name("to start an atom")?;
        let mut args = Vec::new();
        if self.peek() == Some(&Tok::LParen) {
            self.pos += 1;
            args = self.parse_term_list(scope)?;
            self.expect(&Tok::RParen, "to close the argument list")?;
        }
        Ok(RawAtom { pred, args, line, col })
    }

    fn parse_clause(&mut self) -> Result<RawClause, ParseError> {
        let mut scope = BTreeMap::new();
        let head = self.parse_atom(&mut scope)?;
        let line = head.line;
        let mut body = Vec::new();
        if self.peek() == Some(&Tok::Turnstile) {
            self.pos += 1;
            body.push(self.parse_atom(&mut scope)?);
            while self.peek() == Some(&Tok::Comma) {
                self.pos += 1;
                body.push(self.parse_atom(&mut scope)?);
            }
        }
        self.expect(&Tok::Dot, "to end the clause")?;
        Ok(RawClause { head, body, line })
    }

    /// Parses the head pattern of a delay or level directive: variables
    /// and `_` only, returning the position of each named variable.
    fn parse_directive_head(
        &mut self,
        what: &str,
    ) -> Result<(String, usize, BTreeMap<String, usize>, usize, usize), ParseError> {
        let (pred, line, col) = self.expect_name(&format!("to start the {what} declaration"))?;
        let mut arity = 0;
        let mut positions = BTreeMap::new();
        if self.peek() == Some(&Tok::LParen) {
            self.pos += 1;
            loop {
                match self.peek().cloned() {
                    Some(Tok::Var(name)) => {
                        self.pos += 1;
                        if name != "_" && positions.insert(name.clone(), arity).is_some() {
                            return self.fail(format!(
                                "variable {name} occurs twice in the {what} declaration head"
                            ));
                        }
                        arity += 1;
                    }
                    _ => {
                        return self.fail(format!(
                            "{what} declaration heads take only variables and '_'"
                        ))
                    }
                }
                match self.peek() {
                    Some(Tok::Comma) => {
                        self.pos += 1;
                    }
                    Some(Tok::RParen) => {
                        self.pos += 1;
                        break;
                    }
                    _ => return self.fail("expected ',' or ')' in the declaration head"),
                }
            }
        }
        Ok((pred, arity, positions, line, col))
    }
}

/// Directives and clauses gathered by the first pass.
struct FirstPass {
    clauses: Vec<RawClause>,
    modes: BTreeMap<(Functor, usize), Arc<[Moding]>>,
    delays: Vec<DelayDecl>,
    levels: Vec<(LevelDecl, usize, usize)>,
}

fn first_pass(parser: &mut Parser<'_>) -> Result<FirstPass, ParseError> {
    let mut out = FirstPass {
        clauses: Vec::new(),
        modes: BTreeMap::new(),
        delays: Vec::new(),
        levels: Vec::new(),
    };
    while !parser.at_end() {
        if parser.peek() == Some(&Tok::Turnstile) {
            parser.pos += 1;
            parse_directive(parser, &mut out)?;
        } else {
            out.clauses.push(parser.parse_clause()?);
        }
    }
    Ok(out)
}

fn parse_directive(parser: &mut Parser<'_>, out: &mut FirstPass) -> Result<(), ParseError> {
    let (word, line, col) = parser.expect_name("after ':-'")?;
    match word.as_str() {
        "mode" => {
            let (pred, mline, mcol) = parser.expect_name("to start the mode declaration")?;
            let mut modings = Vec::new();
            if parser.peek() == Some(&Tok::LParen) {
                parser.pos += 1;
                loop {
                    let (m, _, _) = parser.expect_name("('in' or 'out') in the mode declaration")?;
                    match m.as_str() {
                        "in" => modings.push(Moding::In),
                        "out" => modings.push(Moding::Out),
                        other => {
                            return parser
                                .fail(format!("mode positions are 'in' or 'out', found '{other}'"))
                        }
                    }
                    match parser.peek() {
                        Some(Tok::Comma) => {
                            parser.pos += 1;
                        }
                        Some(Tok::RParen) => {
                            parser.pos += 1;
                            break;
                        }
                        _ => return parser.fail("expected ',' or ')' in the mode declaration"),
                    }
                }
            }
            parser.expect(&Tok::Dot, "to end the mode declaration")?;
            let key = (Functor::new(&pred), modings.len());
            if out.modes.insert(key, Arc::from(modings.as_slice())).is_some() {
                return Err(ParseError::new(
                    mline,
                    mcol,
                    format!("duplicate mode declaration for {pred}/{}", modings.len()),
                ));
            }
            Ok(())
        }
        "delay" => {
            let (pred, arity, positions, dline, dcol) = parser.parse_directive_head("delay")?;
            parser.expect_keyword("until", "after the delay declaration head")?;
            let mut conditions = BTreeMap::new();
            loop {
                let (cond, cline, ccol) = parser.expect_name("('nonvar' or 'ground')")?;
                let cond = match cond.as_str() {
                    "nonvar" => DelayCondition::Nonvar,
                    "ground" => DelayCondition::Ground,
                    other => {
                        return parser
                            .fail(format!("delay conditions are 'nonvar' or 'ground', found '{other}'"))
                    }
                };
                parser.expect(&Tok::LParen, "after the delay condition")?;
                let var = match parser.advance() {
                    Some(Lexed { tok: Tok::Var(name), .. }) if name != "_" => name.clone(),
                    _ => {
                        return Err(ParseError::new(
                            cline,
                            ccol,
                            "delay conditions name a variable from the declaration head".to_string(),
                        ))
                    }
                };
                parser.expect(&Tok::RParen, "to close the delay condition")?;
                let pos = match positions.get(&var) {
                    Some(p) => *p,
                    None => {
                        return Err(ParseError::new(
                            cline,
                            ccol,
                            format!("variable {var} does not occur in the delay declaration head"),
                        ))
                    }
                };
                if conditions.insert(pos, cond).is_some() {
                    return Err(ParseError::new(
                        cline,
                        ccol,
                        format!("position {} already has a delay condition", pos + 1),
                    ));
                }
                match parser.peek() {
                    Some(Tok::Comma) => {
                        parser.pos += 1;
                    }
                    _ => break,
                }
            }
            parser.expect(&Tok::Dot, "to end the delay declaration")?;
            let pred = Functor::new(&pred);
            if out.delays.iter().any(|d| d.pred == pred && d.arity == arity) {
                return Err(ParseError::new(
                    dline,
                    dcol,
                    format!("duplicate delay declaration for {pred}/{arity}"),
                ));
            }
            out.delays.push(DelayDecl { pred, arity, conditions });
            Ok(())
        }
        "level" => {
            let (pred, arity, positions, lline, lcol) = parser.parse_directive_head("level")?;
            parser.expect_keyword("is", "after the level declaration head")?;
            let mut terms = Vec::new();
            loop {
                terms.push(parse_level_term(parser, &positions)?);
                match parser.peek() {
                    Some(Tok::Plus) => {
                        parser.pos += 1;
                    }
                    _ => break,
                }
            }
            parser.expect(&Tok::Dot, "to end the level declaration")?;
            let pred = Functor::new(&pred);
            if out.levels.iter().any(|(l, _, _)| l.pred == pred && l.arity == arity) {
                return Err(ParseError::new(
                    lline,
                    lcol,
                    format!("duplicate level declaration for {pred}/{arity}"),
                ));
            }
            out.levels.push((
                LevelDecl { pred, arity, expr: LevelExpr { terms } },
                lline,
                lcol,
            ));
            Ok(())
        }
        other => Err(ParseError::new(
            line,
            col,
            format!("unknown declaration '{other}' (expected mode, delay, or level)"),
        )),
    }
}

fn parse_level_term(
    parser: &mut Parser<'_>,
    positions: &BTreeMap<String, usize>,
) -> Result<LevelTerm, ParseError> {
    // term := INT | INT '*' measure | measure, measure := (len|size)(Var)
    let coeff = match parser.peek() {
        Some(Tok::Name(n)) if n.chars().all(|c| c.is_ascii_digit()) => {
            let n = n.clone();
            parser.pos += 1;
            let value: u64 = match n.parse() {
                Ok(v) => v,
                Err(_) => return parser.fail(format!("level coefficient '{n}' is out of range")),
            };
            if parser.peek() == Some(&Tok::Star) {
                parser.pos += 1;
            } else {
                return Ok(LevelTerm { coeff: value, norm: None });
            }
            value
        }
        _ => 1,
    };
    let (measure, mline, mcol) = parser.expect_name("('len' or 'size') in the level expression")?;
    let norm = match measure.as_str() {
        "len" => Norm::Len,
        "size" => Norm::Size,
        other => {
            return Err(ParseError::new(
                mline,
                mcol,
                format!("level measures are 'len' or 'size', found '{other}'"),
            ))
        }
    };
    parser.expect(&Tok::LParen, "after the level measure")?;
    let var = match parser.advance() {
        Some(Lexed { tok: Tok::Var(name), .. }) if name != "_" => name.clone(),
        _ => {
            return Err(ParseError::new(
                mline,
                mcol,
                "level measures name a variable from the declaration head".to_string(),
            ))
        }
    };
    parser.expect(&Tok::RParen, "to close the level measure")?;
    let pos = match positions.get(&var) {
        Some(p) => *p,
        None => {
            return Err(ParseError::new(
                mline,
                mcol,
                format!("variable {var} does not occur in the level declaration head"),
            ))
        }
    };
    Ok(LevelTerm { coeff, norm: Some((norm, pos)) })
}

fn resolve_atom(
    raw: &RawAtom,
    modes: &BTreeMap<(Functor, usize), Arc<[Moding]>>,
) -> Result<ModedAtom, ParseError> {
    let key = (Functor::new(&raw.pred), raw.args.len());
    match modes.get(&key) {
        Some(mode) => Ok(ModedAtom::new(key.0, raw.args.clone(), Arc::clone(mode))),
        None => Err(ParseError::new(
            raw.line,
            raw.col,
            format!("no mode declaration for {}/{}", raw.pred, raw.args.len()),
        )),
    }
}

/// Parses a program from source text. `name` labels the program in
/// reports; callers usually pass the file stem.
pub fn parse_program(text: &str, name: &str) -> Result<Program, ParseError> {
    let toks = lex(text)?;
    let mut parser = Parser::new(&toks, VarGen::new());
    let first = first_pass(&mut parser)?;

    let mut clauses = Vec::new();
    let mut clause_lines = Vec::new();
    for raw in &first.clauses {
        let head = resolve_atom(&raw.head, &first.modes)?;
        let body = raw
            .body
            .iter()
            .map(|b| resolve_atom(b, &first.modes))
            .collect::<Result<Vec<_>, _>>()?;
        clauses.push(Clause::new(head, body));
        clause_lines.push(raw.line);
    }

    for d in &first.delays {
        let key = (d.pred.clone(), d.arity);
        if !first.modes.contains_key(&key) {
            return Err(ParseError::new(
                1,
                1,
                format!("delay declaration for {}/{} has no mode declaration", d.pred, d.arity),
            ));
        }
    }
    let mut levels = Vec::new();
    for (l, line, col) in first.levels {
        let key = (l.pred.clone(), l.arity);
        let mode = match first.modes.get(&key) {
            Some(m) => m,
            None => {
                return Err(ParseError::new(
                    line,
                    col,
                    format!("level declaration for {}/{} has no mode declaration", l.pred, l.arity),
                ))
            }
        };
        for t in &l.expr.terms {
            if let Some((_, pos)) = t.norm {
                if mode[pos] != Moding::In {
                    return Err(ParseError::new(
                        line,
                        col,
                        format!(
                            "level expression for {}/{} measures position {}, which is not an input",
                            l.pred,
                            l.arity,
                            pos + 1
                        ),
                    ));
                }
            }
        }
        levels.push(l);
    }

    Ok(Program {
        clauses,
        modes: first.modes,
        delays: first.delays,
        levels,
        next_var: parser.gen.peek(),
        var_names: parser.names,
        name: name.to_string(),
        clause_lines,
        materialized: None,
    })
}

/// Parses a query against a program: a comma-separated atom sequence
/// with an optional trailing dot. The empty string is the empty query.
/// Query variables are allocated above the program's, so the two never
/// collide.
pub fn parse_query(text: &str, program: &Program) -> Result<ParsedQuery, ParseError> {
    let toks = lex(text)?;
    let mut parser = Parser::new(&toks, VarGen::starting_at(program.next_var));
    let mut atoms = Vec::new();
    if !parser.at_end() {
        let mut scope = BTreeMap::new();
        atoms.push(parser.parse_atom(&mut scope)?);
        while parser.peek() == Some(&Tok::Comma) {
            parser.pos += 1;
            atoms.push(parser.parse_atom(&mut scope)?);
        }
        if parser.peek() == Some(&Tok::Dot) {
            parser.pos += 1;
        }
        if !parser.at_end() {
            return parser.fail("unexpected input after the query");
        }
    }
    let atoms = atoms
        .iter()
        .map(|a| resolve_atom(a, &program.modes))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ParsedQuery {
        query: Query::new(atoms),
        var_names: parser.names,
        next_var: parser.gen.peek(),
    })
}
