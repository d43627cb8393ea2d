//! A small text format for queries.
//!
//! ```text
//! # comments run to the end of the line
//! RELATION A FROM flights_a.csv
//! RELATION B FROM "flights b.csv"
//! JOIN A.dst EQ B.src, A.arr LT B.dep
//! AGG cost = SUM(A.cost, B.cost) PREF MIN
//! LOCAL A.rtg PREF MAX
//! ```
//!
//! Keywords are case-insensitive. The two RELATION declarations come first;
//! JOIN, AGG and LOCAL clauses may follow in any order, with at most one JOIN
//! clause and at least one AGG clause. Conditions and aggregate arguments may
//! name the second relation first; they are normalized so the first declared
//! relation is the left side.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{AsjqError, Result, ValidationIssue};
use crate::model::{
    AggregateFn, AggregateSpec, Column, ColumnRole, JoinCondition, JoinOp, Preference, QuerySpec,
    RelationSchema, Side,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Pos {
    line: usize,
    column: usize,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Word(String),
    Str(String),
    Punct(char),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("`{w}`"),
            Tok::Str(s) => format!("\"{s}\""),
            Tok::Punct(c) => format!("`{c}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    pos: Pos,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Self { chars: text.chars().peekable(), pos: Pos { line: 1, column: 1 } }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.pos.line += 1;
            self.pos.column = 1;
        } else {
            self.pos.column += 1;
        }
        Some(c)
    }

    fn skip_blank(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c == '#' {
                while self.chars.peek().is_some_and(|&c| c != '\n') {
                    self.bump();
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    fn quoted(&mut self, start: Pos) -> Result<String> {
        self.bump();
        let mut s = String::new();
        loop {
            match self.bump() {
                None | Some('\n') => return Err(err(start, "unterminated string")),
                Some('"') => return Ok(s),
                Some('\\') => match self.bump() {
                    Some(c @ ('"' | '\\')) => s.push(c),
                    _ => return Err(err(self.pos, "unknown escape in string")),
                },
                Some(c) => s.push(c),
            }
        }
    }

    fn next(&mut self) -> Result<(Tok, Pos)> {
        self.skip_blank();
        let start = self.pos;
        let Some(&c) = self.chars.peek() else {
            return Ok((Tok::Eof, start));
        };
        if c == '"' {
            return Ok((Tok::Str(self.quoted(start)?), start));
        }
        if c.is_alphanumeric() || c == '_' {
            let mut w = String::new();
            while let Some(&c) = self.chars.peek() {
                if c.is_alphanumeric() || c == '_' {
                    w.push(c);
                    self.bump();
                } else {
                    break;
                }
            }
            return Ok((Tok::Word(w), start));
        }
        if ".,=()".contains(c) {
            self.bump();
            return Ok((Tok::Punct(c), start));
        }
        Err(err(start, format!("unexpected character `{c}`")))
    }

    /// A quoted string or a run of non-blank characters.
    fn path(&mut self) -> Result<(String, Pos)> {
        self.skip_blank();
        let start = self.pos;
        match self.chars.peek() {
            None => Err(err(start, "expected a path, found end of input")),
            Some('"') => Ok((self.quoted(start)?, start)),
            Some(_) => {
                let mut s = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_whitespace() || c == '#' {
                        break;
                    }
                    s.push(c);
                    self.bump();
                }
                Ok((s, start))
            }
        }
    }
}

fn err(pos: Pos, message: impl Into<String>) -> AsjqError {
    AsjqError::Parse { line: pos.line, column: pos.column, message: message.into() }
}

struct Ref {
    side: Side,
    column: String,
    pos: Pos,
}

#[derive(Default)]
struct SideBuilder {
    name: String,
    source: String,
    joins: Vec<(usize, String)>,
    locals: Vec<(String, Preference)>,
    aggs: Vec<(usize, String, Preference)>,
    roles: HashMap<String, &'static str>,
}

struct Parser<'a> {
    lex: Lexer<'a>,
    peeked: Option<(Tok, Pos)>,
    sides: [SideBuilder; 2],
}

impl Parser<'_> {
    fn peek(&mut self) -> Result<&(Tok, Pos)> {
        if self.peeked.is_none() {
            self.peeked = Some(self.lex.next()?);
        }
        Ok(self.peeked.as_ref().unwrap())
    }

    fn next(&mut self) -> Result<(Tok, Pos)> {
        match self.peeked.take() {
            Some(t) => Ok(t),
            None => self.lex.next(),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<Pos> {
        let (tok, pos) = self.next()?;
        match &tok {
            Tok::Word(w) if w.eq_ignore_ascii_case(kw) => Ok(pos),
            _ => Err(err(pos, format!("expected {kw}, found {}", tok.describe()))),
        }
    }

    fn punct(&mut self, c: char) -> Result<()> {
        let (tok, pos) = self.next()?;
        if tok == Tok::Punct(c) {
            Ok(())
        } else {
            Err(err(pos, format!("expected `{c}`, found {}", tok.describe())))
        }
    }

    fn ident(&mut self, what: &str) -> Result<(String, Pos)> {
        let (tok, pos) = self.next()?;
        match tok {
            Tok::Word(w) => Ok((w, pos)),
            other => Err(err(pos, format!("expected {what}, found {}", other.describe()))),
        }
    }

    fn choice<T: Copy>(&mut self, what: &str, options: &[(&str, T)]) -> Result<T> {
        let (tok, pos) = self.next()?;
        if let Tok::Word(w) = &tok {
            if let Some(&(_, v)) = options.iter().find(|(k, _)| w.eq_ignore_ascii_case(k)) {
                return Ok(v);
            }
        }
        Err(err(pos, format!("expected {what}, found {}", tok.describe())))
    }

    fn preference(&mut self) -> Result<Preference> {
        self.keyword("PREF")?;
        self.choice("MIN or MAX", &[("MIN", Preference::Min), ("MAX", Preference::Max)])
    }

    fn reference(&mut self) -> Result<Ref> {
        let (rel, pos) = self.ident("a relation name")?;
        let side = if rel == self.sides[0].name {
            Side::Left
        } else if rel == self.sides[1].name {
            Side::Right
        } else {
            return Err(err(pos, format!("unknown relation `{rel}`")));
        };
        self.punct('.')?;
        let (column, _) = self.ident("a column name")?;
        Ok(Ref { side, column, pos })
    }

    fn claim(&mut self, r: &Ref, role: &'static str) -> Result<()> {
        let b = &mut self.sides[r.side as usize];
        if let Some(prev) = b.roles.insert(r.column.clone(), role) {
            return Err(err(
                r.pos,
                format!(
                    "column `{}.{}` is already used as a {prev} attribute",
                    b.name, r.column
                ),
            ));
        }
        Ok(())
    }

    /// Orders two references left side first.
    fn pair(&self, a: Ref, b: Ref) -> Result<(Ref, Ref, bool)> {
        match (a.side, b.side) {
            (Side::Left, Side::Right) => Ok((a, b, false)),
            (Side::Right, Side::Left) => Ok((b, a, true)),
            _ => Err(err(b.pos, "both references name the same relation")),
        }
    }

    fn relation(&mut self, k: usize) -> Result<()> {
        self.keyword("RELATION")?;
        let (name, pos) = self.ident("a relation name")?;
        if k == 1 && name == self.sides[0].name {
            return Err(err(pos, format!("relation `{name}` is declared twice")));
        }
        self.keyword("FROM")?;
        if let Some((tok, pos)) = self.peeked.take() {
            return Err(err(pos, format!("expected a path, found {}", tok.describe())));
        }
        let (path, pos) = self.lex.path()?;
        if path.is_empty() {
            return Err(err(pos, "expected a path"));
        }
        self.sides[k].name = name;
        self.sides[k].source = path;
        Ok(())
    }

    fn join_clause(&mut self, joins: &mut Vec<JoinCondition>) -> Result<()> {
        loop {
            let a = self.reference()?;
            let op = self.choice(
                "a join operator (EQ, LT, LE, GT, GE)",
                &JoinOp::ALL.map(|op| (op.keyword(), op)),
            )?;
            let b = self.reference()?;
            let (l, r, flipped) = self.pair(a, b)?;
            self.claim(&l, "join")?;
            self.claim(&r, "join")?;
            let slot = joins.len();
            self.sides[0].joins.push((slot, l.column));
            self.sides[1].joins.push((slot, r.column));
            joins.push(JoinCondition { slot, op: if flipped { op.flipped() } else { op } });
            if self.peek()?.0 != Tok::Punct(',') {
                return Ok(());
            }
            self.next()?;
        }
    }

    fn agg_clause(&mut self, aggs: &mut Vec<AggregateSpec>) -> Result<()> {
        let (name, pos) = self.ident("an aggregate name")?;
        if aggs.iter().any(|a| a.name == name) {
            return Err(err(pos, format!("aggregate `{name}` is declared twice")));
        }
        self.punct('=')?;
        let func = self.choice(
            "SUM, AVG, MIN or MAX",
            &[
                ("SUM", AggregateFn::Sum),
                ("AVG", AggregateFn::Avg),
                ("MIN", AggregateFn::Min),
                ("MAX", AggregateFn::Max),
            ],
        )?;
        self.punct('(')?;
        let a = self.reference()?;
        self.punct(',')?;
        let b = self.reference()?;
        self.punct(')')?;
        let pref = self.preference()?;
        let (l, r, _) = self.pair(a, b)?;
        self.claim(&l, "aggregate")?;
        self.claim(&r, "aggregate")?;
        let slot = aggs.len();
        self.sides[0].aggs.push((slot, l.column, pref));
        self.sides[1].aggs.push((slot, r.column, pref));
        aggs.push(AggregateSpec { name, slot, func, pref });
        Ok(())
    }

    fn local_clause(&mut self) -> Result<()> {
        let r = self.reference()?;
        let pref = self.preference()?;
        self.claim(&r, "local")?;
        self.sides[r.side as usize].locals.push((r.column, pref));
        Ok(())
    }

    fn query(mut self) -> Result<QuerySpec> {
        self.relation(0)?;
        self.relation(1)?;
        let mut joins = Vec::new();
        let mut aggs = Vec::new();
        let mut saw_join = false;
        loop {
            let (tok, pos) = self.next()?;
            let Tok::Word(w) = &tok else {
                if tok == Tok::Eof {
                    break;
                }
                return Err(err(pos, format!("expected a clause, found {}", tok.describe())));
            };
            match w.to_ascii_uppercase().as_str() {
                "JOIN" if saw_join => return Err(err(pos, "only one JOIN clause is allowed")),
                "JOIN" => {
                    saw_join = true;
                    self.join_clause(&mut joins)?;
                }
                "AGG" => self.agg_clause(&mut aggs)?,
                "LOCAL" => self.local_clause()?,
                _ => {
                    return Err(err(
                        pos,
                        format!("expected JOIN, AGG or LOCAL, found {}", tok.describe()),
                    ))
                }
            }
        }
        if !saw_join {
            return Err(err(self.lex.pos, "missing JOIN clause"));
        }
        if aggs.is_empty() {
            return Err(err(self.lex.pos, ValidationIssue::NoAggregates.to_string()));
        }
        let [left, right] = self.sides;
        Ok(QuerySpec { left: build_schema(left), right: build_schema(right), joins, aggregates: aggs })
    }
}

fn build_schema(b: SideBuilder) -> RelationSchema {
    let mut cols: Vec<Column> = b.joins.into_iter().map(|(s, n)| Column::join(n, s)).collect();
    cols.extend(b.locals.into_iter().map(|(n, p)| Column::local(n, p)));
    cols.extend(b.aggs.into_iter().map(|(s, n, p)| Column::aggregate(n, s, p)));
    RelationSchema { name: b.name, source: Some(b.source), columns: cols }
}

/// Parses query text. Column existence is checked later, when the relations
/// are loaded.
pub fn parse_query(text: &str) -> Result<QuerySpec> {
    Parser { lex: Lexer::new(text), peeked: None, sides: Default::default() }.query()
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Prints a query in the canonical form accepted by [`parse_query`].
///
/// Parsing the output yields the same query whenever its columns are in
/// canonical order (join columns by slot, locals, aggregates by slot) and
/// both relations have a source, which holds for every parsed query.
pub fn print_query(spec: &QuerySpec) -> String {
    let (l, r) = (&spec.left, &spec.right);
    let col = |s: &RelationSchema, pred: &dyn Fn(&ColumnRole) -> bool| -> String {
        s.columns.iter().find(|c| pred(&c.role)).map(|c| c.name.clone()).unwrap_or_default()
    };
    let mut out = String::new();
    for s in [l, r] {
        let src = s.source.clone().unwrap_or_else(|| format!("{}.csv", s.name));
        let _ = writeln!(out, "RELATION {} FROM {}", s.name, quote(&src));
    }
    let mut joins = spec.joins.clone();
    joins.sort_by_key(|j| j.slot);
    let conds: Vec<String> = joins
        .iter()
        .map(|j| {
            let is = |role: &ColumnRole| matches!(role, ColumnRole::Join { slot } if *slot == j.slot);
            format!("{}.{} {} {}.{}", l.name, col(l, &is), j.op.keyword(), r.name, col(r, &is))
        })
        .collect();
    let _ = writeln!(out, "JOIN {}", conds.join(", "));
    let mut aggs = spec.aggregates.clone();
    aggs.sort_by_key(|a| a.slot);
    for a in &aggs {
        let is = |role: &ColumnRole| matches!(role, ColumnRole::Aggregate { slot, .. } if *slot == a.slot);
        let _ = writeln!(
            out,
            "AGG {} = {}({}.{}, {}.{}) PREF {}",
            a.name,
            a.func.keyword(),
            l.name,
            col(l, &is),
            r.name,
            col(r, &is),
            a.pref
        );
    }
    for s in [l, r] {
        for c in &s.columns {
            if let ColumnRole::Local { pref } = c.role {
                let _ = writeln!(out, "LOCAL {}.{} PREF {pref}", s.name, c.name);
            }
        }
    }
    out
}
