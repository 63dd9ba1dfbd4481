//! Conjunctive queries: parsing, Gaifman-graph shape, matches and count answers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{is_ident, Error, Result};
use crate::index::{for_each_match, CAtom, FactIndex, Slot};
use crate::interp::{AnnotatedInterpretation, Element, Interpretation};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Const(String),
}

impl Term {
    pub fn var(name: impl Into<String>) -> Self {
        Term::Var(name.into())
    }

    pub fn constant(name: impl Into<String>) -> Self {
        Term::Const(name.into())
    }

    pub fn as_var(&self) -> Option<&str> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Const(c) => write!(f, "'{c}'"),
        }
    }
}

/// `A(t)` or `P(s,t)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub pred: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn unary(pred: impl Into<String>, t: Term) -> Self {
        Atom { pred: pred.into(), args: vec![t] }
    }

    pub fn binary(pred: impl Into<String>, s: Term, o: Term) -> Self {
        Atom { pred: pred.into(), args: vec![s, o] }
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.args.iter().filter_map(Term::as_var)
    }

    pub fn has_const(&self) -> bool {
        self.args.iter().any(|t| !t.is_var())
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.pred)?;
        for (i, t) in self.args.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{t}")?;
        }
        write!(f, ")")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Quoted(String),
    Num(u64),
    Sym(&'static str),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Quoted(s) => write!(f, "'{s}'"),
            Tok::Num(n) => write!(f, "{n}"),
            Tok::Sym(s) => write!(f, "`{s}`"),
        }
    }
}

/// Tokens paired with their line numbers.
pub(crate) struct Lexer {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Lexer {
    pub fn new(text: &str) -> Result<Self> {
        let mut toks = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("");
            let chars: Vec<char> = content.chars().collect();
            let mut i = 0;
            while i < chars.len() {
                let c = chars[i];
                if c.is_whitespace() {
                    i += 1;
                } else if c.is_ascii_alphabetic() || c == '_' {
                    let start = i;
                    while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                        i += 1;
                    }
                    toks.push((Tok::Ident(chars[start..i].iter().collect()), line));
                } else if c.is_ascii_digit() {
                    let start = i;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                    let s: String = chars[start..i].iter().collect();
                    let n = s.parse().map_err(|_| Error::parse(line, format!("number `{s}` too large")))?;
                    toks.push((Tok::Num(n), line));
                } else if c == '\'' || c == '"' {
                    let end = chars[i + 1..]
                        .iter()
                        .position(|&d| d == c)
                        .ok_or_else(|| Error::parse(line, "unterminated quote"))?;
                    let s: String = chars[i + 1..i + 1 + end].iter().collect();
                    if !is_ident(&s) {
                        return Err(Error::parse(line, format!("bad constant `{s}`")));
                    }
                    toks.push((Tok::Quoted(s), line));
                    i += end + 2;
                } else {
                    let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
                    let sym = match two.as_str() {
                        ":-" => Some(":-"),
                        _ => None,
                    };
                    if let Some(s) = sym {
                        toks.push((Tok::Sym(s), line));
                        i += 2;
                        continue;
                    }
                    let s = match c {
                        '(' => "(",
                        ')' => ")",
                        ',' => ",",
                        ':' => ":",
                        ';' => ";",
                        '.' => ".",
                        '=' => "=",
                        '*' => "*",
                        '-' => "-",
                        _ => return Err(Error::parse(line, format!("unexpected character `{c}`"))),
                    };
                    toks.push((Tok::Sym(s), line));
                    i += 1;
                }
            }
        }
        Ok(Lexer { toks, pos: 0 })
    }

    pub fn line(&self) -> usize {
        self.toks.get(self.pos).or(self.toks.last()).map_or(1, |t| t.1)
    }

    pub fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    pub fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|t| &t.0)
    }

    pub fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.0.clone());
        self.pos += 1;
        t
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    pub fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Sym(x)) if *x == s)
    }

    pub fn eat(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, s: &str) -> Result<()> {
        if self.eat(s) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{s}`")))
        }
    }

    pub fn ident(&mut self) -> Result<String> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.error("expected a name")),
        }
    }

    pub fn number(&mut self) -> Result<u64> {
        match self.peek() {
            Some(Tok::Num(n)) => {
                let n = *n;
                self.pos += 1;
                Ok(n)
            }
            _ => Err(self.error("expected a number")),
        }
    }

    pub fn error(&self, msg: impl Into<String>) -> Error {
        let found = self.peek().map_or("end of input".to_string(), |t| format!("{t}"));
        Error::parse(self.line(), format!("{}, found {found}", msg.into()))
    }

    /// A variable, a quoted constant, or a name listed in `consts`.
    pub fn term(&mut self, consts: &BTreeSet<String>) -> Result<Term> {
        match self.next() {
            Some(Tok::Ident(s)) if consts.contains(&s) => Ok(Term::Const(s)),
            Some(Tok::Ident(s)) => Ok(Term::Var(s)),
            Some(Tok::Quoted(s)) => Ok(Term::Const(s)),
            _ => {
                self.pos -= 1;
                Err(self.error("expected a term"))
            }
        }
    }

    /// `Pred(t)` or `Pred(t,t)`.
    pub fn atom(&mut self, consts: &BTreeSet<String>) -> Result<Atom> {
        let pred = self.ident()?;
        self.expect("(")?;
        let mut args = vec![self.term(consts)?];
        if self.eat(",") {
            args.push(self.term(consts)?);
        }
        self.expect(")")?;
        Ok(Atom { pred, args })
    }
}

/// `q(x) :- body`, with an ordered tuple of distinct answer variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConjunctiveQuery {
    pub name: String,
    pub head: Vec<String>,
    pub body: Vec<Atom>,
}

impl ConjunctiveQuery {
    pub fn new(head: Vec<String>, body: Vec<Atom>) -> Result<Self> {
        let q = ConjunctiveQuery { name: "q".into(), head, body };
        q.check()?;
        Ok(q)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with_constants(text, &BTreeSet::new())
    }

    /// Bare names found in `consts` are read as constants.
    pub fn parse_with_constants(text: &str, consts: &BTreeSet<String>) -> Result<Self> {
        let mut lx = Lexer::new(text)?;
        let name = lx.ident()?;
        lx.expect("(")?;
        let mut head = Vec::new();
        if !lx.eat(")") {
            loop {
                match lx.term(consts)? {
                    Term::Var(v) => head.push(v),
                    Term::Const(_) => return Err(lx.error("answer positions hold variables")),
                }
                if lx.eat(")") {
                    break;
                }
                lx.expect(",")?;
            }
        }
        lx.expect(":-")?;
        let mut body = Vec::new();
        loop {
            let line = lx.line();
            let atom = lx.atom(consts)?;
            if body.contains(&atom) {
                return Err(Error::parse(line, format!("duplicate atom {atom}")));
            }
            body.push(atom);
            if !lx.eat(",") {
                break;
            }
        }
        lx.eat(".");
        if !lx.at_end() {
            return Err(lx.error("trailing input"));
        }
        let q = ConjunctiveQuery { name, head, body };
        q.check()?;
        Ok(q)
    }

    fn check(&self) -> Result<()> {
        if self.body.is_empty() {
            return Err(Error::Invalid("a query needs at least one atom".into()));
        }
        let mut arity: BTreeMap<&str, usize> = BTreeMap::new();
        for a in &self.body {
            if !is_ident(&a.pred) || a.args.is_empty() || a.args.len() > 2 {
                return Err(Error::Invalid(format!("bad atom {a}")));
            }
            if *arity.entry(&a.pred).or_insert(a.args.len()) != a.args.len() {
                return Err(Error::Invalid(format!("`{}` used with two arities", a.pred)));
            }
            for v in a.vars() {
                if v.starts_with('_') {
                    return Err(Error::Invalid(format!("variable `{v}` may not start with `_`")));
                }
            }
        }
        let body_vars = self.variables();
        let mut seen = BTreeSet::new();
        for x in &self.head {
            if !seen.insert(x) {
                return Err(Error::Invalid(format!("answer variable `{x}` repeated")));
            }
            if !body_vars.contains(x) {
                return Err(Error::Invalid(format!("answer variable `{x}` does not occur in the body")));
            }
        }
        let distinct: BTreeSet<&Atom> = self.body.iter().collect();
        if distinct.len() != self.body.len() {
            return Err(Error::Invalid("duplicate body atom".into()));
        }
        Ok(())
    }

    pub fn is_boolean(&self) -> bool {
        self.head.is_empty()
    }

    /// Body variables in order of first occurrence.
    pub fn variables(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for a in &self.body {
            for v in a.vars() {
                if !out.iter().any(|o| o == v) {
                    out.push(v.to_string());
                }
            }
        }
        out
    }

    /// Body variables not in the head, in order of first occurrence.
    pub fn existential_variables(&self) -> Vec<String> {
        self.variables().into_iter().filter(|v| !self.head.contains(v)).collect()
    }

    pub fn constants(&self) -> BTreeSet<String> {
        self.body
            .iter()
            .flat_map(|a| a.args.iter())
            .filter_map(|t| match t {
                Term::Const(c) => Some(c.clone()),
                _ => None,
            })
            .collect()
    }

    /// Answer variables first, then the rest in order of occurrence.
    pub(crate) fn var_order(&self) -> Vec<String> {
        let mut vars = self.head.clone();
        vars.extend(self.existential_variables());
        vars
    }

    pub fn gaifman(&self) -> Gaifman {
        let mut g = Gaifman { vertices: self.variables().into_iter().collect(), edges: BTreeSet::new() };
        for a in &self.body {
            if let [Term::Var(s), Term::Var(o)] = a.args.as_slice() {
                let (x, y) = if s <= o { (s, o) } else { (o, s) };
                g.edges.insert((x.clone(), y.clone()));
            }
        }
        g
    }

    pub fn classify_shape(&self) -> ShapeReport {
        let g = self.gaifman();
        let comps = g.components();
        let connected = comps.len() <= 1;
        let linear = g.vertices.iter().all(|v| g.degree(v) <= 2);
        let has_loop = g.edges.iter().any(|(a, b)| a == b);
        let acyclic = !has_loop && g.edges.len() + comps.len() == g.vertices.len();
        let anchored: BTreeSet<&str> = self
            .body
            .iter()
            .filter(|a| a.has_const())
            .flat_map(|a| a.vars())
            .chain(self.head.iter().map(String::as_str))
            .collect();
        let rooted = comps.iter().all(|c| c.iter().any(|v| anchored.contains(v.as_str())));
        ShapeReport { connected, linear, acyclic, rooted, atomic: self.body.len() == 1 }
    }

    /// The boolean query obtained by substituting the answer variables.
    pub fn boolify(&self, binding: &BTreeMap<String, String>) -> Result<ConjunctiveQuery> {
        for x in &self.head {
            if !binding.contains_key(x) {
                return Err(Error::Invalid(format!("binding misses answer variable `{x}`")));
            }
        }
        let body = self
            .body
            .iter()
            .map(|a| Atom {
                pred: a.pred.clone(),
                args: a
                    .args
                    .iter()
                    .map(|t| match t {
                        Term::Var(v) if self.head.contains(v) => Term::Const(binding[v].clone()),
                        other => other.clone(),
                    })
                    .collect(),
            })
            .collect::<Vec<_>>();
        let mut dedup: Vec<Atom> = Vec::new();
        for a in body {
            if !dedup.contains(&a) {
                dedup.push(a);
            }
        }
        Ok(ConjunctiveQuery { name: self.name.clone(), head: Vec::new(), body: dedup })
    }

    pub(crate) fn compile(&self, idx: &FactIndex, vars: &[String]) -> Vec<CAtom> {
        compile_atoms(&self.body, idx, vars)
    }
}

pub(crate) fn compile_atoms(atoms: &[Atom], idx: &FactIndex, vars: &[String]) -> Vec<CAtom> {
    atoms
        .iter()
        .map(|a| CAtom {
            pred: a.pred.clone(),
            args: a
                .args
                .iter()
                .map(|t| match t {
                    Term::Var(v) => Slot::Var(vars.iter().position(|x| x == v).expect("variable indexed")),
                    Term::Const(c) => idx.id(&Element::named(c.clone())).map_or(Slot::Absent, Slot::Elem),
                })
                .collect(),
        })
        .collect()
}

impl fmt::Display for ConjunctiveQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}) :- ", self.name, self.head.join(","))?;
        for (i, a) in self.body.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ".")
    }
}

/// Undirected graph over body variables; a binary atom `P(x,x)` is a self-loop.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gaifman {
    pub vertices: BTreeSet<String>,
    pub edges: BTreeSet<(String, String)>,
}

impl Gaifman {
    /// Self-loops count twice.
    pub fn degree(&self, v: &str) -> usize {
        self.edges.iter().map(|(a, b)| (a == v) as usize + (b == v) as usize).sum()
    }

    pub fn components(&self) -> Vec<BTreeSet<String>> {
        let verts: Vec<&String> = self.vertices.iter().collect();
        let mut parent: Vec<usize> = (0..verts.len()).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut c = x;
            while p[c] != r {
                let n = p[c];
                p[c] = r;
                c = n;
            }
            r
        }
        let pos = |v: &str| verts.iter().position(|x| x.as_str() == v).unwrap();
        for (a, b) in &self.edges {
            let (ra, rb) = (find(&mut parent, pos(a)), find(&mut parent, pos(b)));
            parent[ra] = rb;
        }
        let mut comps: BTreeMap<usize, BTreeSet<String>> = BTreeMap::new();
        for (i, v) in verts.iter().enumerate() {
            let r = find(&mut parent, i);
            comps.entry(r).or_default().insert((*v).clone());
        }
        comps.into_values().collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ShapeReport {
    pub connected: bool,
    pub linear: bool,
    pub acyclic: bool,
    pub rooted: bool,
    pub atomic: bool,
}

impl ShapeReport {
    /// Class name such as `CQ^CLR`, listing the A/C/L/R properties that hold.
    pub fn class_label(&self) -> String {
        let mut s = String::from("CQ^");
        for (flag, ch) in [(self.acyclic, 'A'), (self.connected, 'C'), (self.linear, 'L'), (self.rooted, 'R')] {
            if flag {
                s.push(ch);
            }
        }
        s
    }

    /// The labels of every named class the query belongs to.
    pub fn class_labels(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let flags = [(self.acyclic, 'A'), (self.connected, 'C'), (self.linear, 'L'), (self.rooted, 'R')];
        for mask in 1u8..16 {
            let picked: Vec<(bool, char)> =
                flags.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, f)| *f).collect();
            if picked.iter().all(|(f, _)| *f) {
                out.insert(format!("CQ^{}", picked.iter().map(|(_, c)| c).collect::<String>()));
            }
        }
        if self.atomic {
            out.insert("AQ".into());
        }
        out
    }
}

impl fmt::Display for ShapeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let words = [
            if self.connected { "connected" } else { "disconnected" },
            if self.acyclic { "acyclic" } else { "cyclic" },
            if self.linear { "linear" } else { "branching" },
            if self.rooted { "rooted" } else { "unrooted" },
        ];
        write!(f, "{}", words.join(" "))?;
        if self.atomic {
            write!(f, " atomic")?;
        }
        Ok(())
    }
}

/// Assignment of body variables to elements.
pub type Match = BTreeMap<String, Element>;

/// A binding of the answer variables to individuals with its count.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct CountAnswer {
    pub binding: Vec<(String, String)>,
    pub count: u64,
}

impl CountAnswer {
    pub fn binding_map(&self) -> BTreeMap<String, String> {
        self.binding.iter().cloned().collect()
    }

    /// `x=a,y=b`, or `()` for the empty binding.
    pub fn binding_text(&self) -> String {
        if self.binding.is_empty() {
            "()".into()
        } else {
            self.binding.iter().map(|(v, c)| format!("{v}={c}")).collect::<Vec<_>>().join(",")
        }
    }
}

impl fmt::Display for CountAnswer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}", self.binding_text(), self.count)
    }
}

/// Every match of the body, sorted by variable order then element order.
pub fn matches(q: &ConjunctiveQuery, i: &Interpretation) -> Vec<Match> {
    let idx = FactIndex::new(i);
    let vars = q.var_order();
    let atoms = q.compile(&idx, &vars);
    let mut rows: Vec<Vec<Element>> = Vec::new();
    for_each_match(&idx, &atoms, &vec![None; vars.len()], &mut |asg| {
        rows.push(asg.iter().map(|&e| idx.elem(e).clone()).collect());
        true
    });
    rows.sort();
    rows.into_iter().map(|row| vars.iter().cloned().zip(row).collect()).collect()
}

/// Number of matches, stopping once `limit` is reached.
pub(crate) fn count_matches_indexed(q: &ConjunctiveQuery, idx: &FactIndex, limit: Option<u64>) -> u64 {
    let vars = q.var_order();
    let atoms = q.compile(idx, &vars);
    let mut n = 0u64;
    for_each_match(idx, &atoms, &vec![None; vars.len()], &mut |_| {
        n += 1;
        limit.is_none_or(|l| n < l)
    });
    n
}

pub fn count_matches(q: &ConjunctiveQuery, i: &Interpretation) -> u64 {
    count_matches_indexed(q, &FactIndex::new(i), None)
}

pub(crate) fn answers_indexed(q: &ConjunctiveQuery, idx: &FactIndex) -> Vec<CountAnswer> {
    let vars = q.var_order();
    let atoms = q.compile(idx, &vars);
    let k = q.head.len();
    let mut groups: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
    for_each_match(idx, &atoms, &vec![None; vars.len()], &mut |asg| {
        *groups.entry(asg[..k].to_vec()).or_insert(0) += 1;
        true
    });
    let mut out: Vec<CountAnswer> = groups
        .into_iter()
        .filter_map(|(key, count)| {
            let mut binding = Vec::with_capacity(k);
            for (v, e) in q.head.iter().zip(key) {
                match idx.elem(e) {
                    Element::Named(n) => binding.push((v.clone(), n.clone())),
                    Element::Anon { .. } => return None,
                }
            }
            Some(CountAnswer { binding, count })
        })
        .collect();
    out.sort();
    out
}

/// Count answers: matches grouped by the answer variables, keeping only
/// groups whose binding maps to named individuals.
pub fn answers(q: &ConjunctiveQuery, i: &Interpretation) -> Vec<CountAnswer> {
    answers_indexed(q, &FactIndex::new(i))
}

/// Count answers over an annotated interpretation, obtained by expanding
/// each annotated element into its copies.
pub fn answers_annotated(q: &ConjunctiveQuery, i: &AnnotatedInterpretation) -> Result<Vec<CountAnswer>> {
    Ok(answers(q, &i.expand()?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interp::{annotated_chase, restricted_chase};
    use crate::kb::KB;

    fn sample_query() -> ConjunctiveQuery {
        ConjunctiveQuery::parse("q(x) :- A(x), P1(x,y1), P2(y1,y2).").unwrap()
    }

    fn sample() -> KB {
        KB::parse("A sub >=2 P1\nexists P1- sub >=3 P2\n", "A(a)\nP1(a,b)\nP2(b,d)\nP2(b,e)\n").unwrap()
    }

    #[test]
    fn parse_and_print() {
        let q = ConjunctiveQuery::parse("q(x) :- A(x), P(x,'c'), R(x, y) .").unwrap();
        assert_eq!(q.head, vec!["x"]);
        assert_eq!(q.body[1].args[1], Term::constant("c"));
        assert_eq!(ConjunctiveQuery::parse(&q.to_string()).unwrap(), q);
        let consts = BTreeSet::from(["c".to_string()]);
        let q2 = ConjunctiveQuery::parse_with_constants("q(x) :- P(x,c)", &consts).unwrap();
        assert_eq!(q2.body[0].args[1], Term::constant("c"));
    }

    #[test]
    fn parse_rejections() {
        for bad in [
            "q(x) :- A(y).",
            "q() :- A(x), A(x).",
            "q() :- A(x), A(x,y).",
            "q(x,x) :- A(x).",
            "q() :- A(_x).",
            "q() :- .",
            "q() :- A(x) junk",
        ] {
            assert!(ConjunctiveQuery::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn gaifman_examples() {
        let g = ConjunctiveQuery::parse("q(x) :- A(x).").unwrap().gaifman();
        assert_eq!(g.vertices.len(), 1);
        assert!(g.edges.is_empty());
        let g = ConjunctiveQuery::parse("q() :- P(x,x).").unwrap().gaifman();
        assert_eq!(g.edges.len(), 1);
        assert_eq!(g.degree("x"), 2);
    }

    #[test]
    fn shapes() {
        let s = ConjunctiveQuery::parse("q(x) :- A(x).").unwrap().classify_shape();
        assert!(s.atomic && s.connected && s.linear && s.acyclic && s.rooted);
        assert_eq!(s.class_label(), "CQ^ACLR");
        let s = ConjunctiveQuery::parse("q() :- P(x,y), P(y,z), P(z,x).").unwrap().classify_shape();
        assert!(s.connected && s.linear && !s.acyclic && !s.rooted);
        let s = ConjunctiveQuery::parse("q() :- P(x,y), P(x,z), P(x,w), A(w).").unwrap().classify_shape();
        assert!(!s.linear && s.acyclic);
        assert_eq!(s.to_string(), "connected acyclic branching unrooted");
        let s = ConjunctiveQuery::parse("q() :- P(x,'a'), A(y).").unwrap().classify_shape();
        assert!(!s.connected && !s.rooted);
        let s = ConjunctiveQuery::parse("q() :- P(x,x).").unwrap().classify_shape();
        assert!(!s.acyclic && s.linear);
        assert!(s.class_labels().contains("CQ^CL"));
    }

    #[test]
    fn appendix_matches() {
        // phi0 of the chase-bag example: P1(y1), P2(y1,y2)
        let mut i = Interpretation::default();
        for (p, s, o) in [("P2", "a", "b"), ("P2", "a", "c"), ("P2", "d", "e")] {
            i.add_role(p, Element::named(s), Element::named(o));
        }
        i.add_concept("P1", Element::named("a"));
        i.add_concept("P1", Element::named("d"));
        let q = ConjunctiveQuery::parse("q() :- P1(y1), P2(y1,y2).").unwrap();
        let ms = matches(&q, &i);
        assert_eq!(ms.len(), 3);
        assert_eq!(ms[0]["y1"], Element::named("a"));
        let q = ConjunctiveQuery::parse("q() :- Q(y1).").unwrap();
        assert!(matches(&q, &i).is_empty());
    }

    #[test]
    fn example_answer_on_chase() {
        let ch = restricted_chase(&sample(), 2);
        let ans = answers(&sample_query(), &ch.interp);
        assert_eq!(ans, vec![CountAnswer { binding: vec![("x".into(), "a".into())], count: 6 }]);
        assert_eq!(ans[0].to_string(), "x=a\t6");
    }

    #[test]
    fn three_witnesses() {
        let kb = KB::parse("A sub >=3 P", "A(a)").unwrap();
        let ch = restricted_chase(&kb, 1);
        let q = ConjunctiveQuery::parse("q(x) :- P(x,y).").unwrap();
        assert_eq!(matches(&q, &ch.interp).len(), 3);
    }

    #[test]
    fn boolean_count() {
        let i = Interpretation::from_abox(&crate::kb::ABox::parse("A(a)\nA(b)").unwrap()).unwrap();
        let q = ConjunctiveQuery::parse("q() :- A(x).").unwrap();
        assert_eq!(answers(&q, &i), vec![CountAnswer { binding: vec![], count: 2 }]);
    }

    #[test]
    fn annotated_answers_expand() {
        let kb = KB::parse("A sub >=3 P", "A(a)\nP(a,b)").unwrap();
        let ch = annotated_chase(&kb, 1);
        let q = ConjunctiveQuery::parse("q() :- P(x,y).").unwrap();
        let ans = answers_annotated(&q, &ch.annotated_interpretation()).unwrap();
        assert_eq!(ans[0].count, 3);
    }

    #[test]
    fn boolify_substitutes() {
        let q = sample_query();
        let b = q.boolify(&BTreeMap::from([("x".to_string(), "a".to_string())])).unwrap();
        assert_eq!(b.to_string(), "q() :- A('a'), P1('a',y1), P2(y1,y2).");
        assert!(q.boolify(&BTreeMap::new()).is_err());
        let q = ConjunctiveQuery::parse("q(x) :- A(x).").unwrap();
        let b = q.boolify(&BTreeMap::from([("x".to_string(), "zz".to_string())])).unwrap();
        assert!(b.is_boolean());
    }
}
