//! Aggregate target language: rules with negation, equalities and exact
//! successor counts, grouped under a count-distinct head with a factor.
//!
//! Text form, one query per block:
//!
//! ```text
//! Q(x; count(y1) * 3)
//! q(x : y1) :- A(x), P1(x,y1), not B(y1), exists=2 z: P2(y1,z)
//! ```
//!
//! `_` is a fresh variable per occurrence; `_k` names a fresh variable shared
//! between atoms. Constants are quoted.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::cq::{Atom, ConjunctiveQuery, CountAnswer, Lexer, Term, Tok};
use crate::error::{is_ident, Error, Result};
use crate::index::{for_each_match, CAtom, FactIndex, Slot};
use crate::interp::{Element, Interpretation};
use crate::kb::{ABox, Fact, Role};

/// Exactly `count` distinct `role`-successors of `subject`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExistsAtom {
    pub count: u32,
    pub role: Role,
    pub subject: Term,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FoRule {
    pub group_by: Vec<Term>,
    pub agg: Vec<Term>,
    pub pos: Vec<Atom>,
    pub neg: Vec<Atom>,
    pub eq: Vec<(Term, Term)>,
    pub exists: Vec<ExistsAtom>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FoQuery {
    pub group_by: Vec<String>,
    pub agg: Vec<String>,
    pub factor: u64,
    pub rules: Vec<FoRule>,
}

pub(crate) fn is_fresh(v: &str) -> bool {
    v.starts_with('_')
}

impl FoRule {
    pub fn head(&self) -> impl Iterator<Item = &Term> {
        self.group_by.iter().chain(self.agg.iter())
    }

    /// Every variable name in the rule.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        let mut add = |t: &Term| {
            if let Term::Var(v) = t {
                out.insert(v.clone());
            }
        };
        self.head().for_each(&mut add);
        self.pos.iter().chain(&self.neg).flat_map(|a| a.args.iter()).for_each(&mut add);
        for (a, b) in &self.eq {
            add(a);
            add(b);
        }
        self.exists.iter().for_each(|e| add(&e.subject));
        out
    }

    /// Occurrences of `v` in positive atoms.
    pub fn pos_occurrences(&self, v: &str) -> usize {
        self.pos.iter().flat_map(|a| a.args.iter()).filter(|t| t.as_var() == Some(v)).count()
    }

    pub fn head_occurrences(&self, v: &str) -> usize {
        self.head().filter(|t| t.as_var() == Some(v)).count()
    }

    pub fn rename(&self, f: &dyn Fn(&Term) -> Term) -> FoRule {
        let atom = |a: &Atom| Atom { pred: a.pred.clone(), args: a.args.iter().map(f).collect() };
        FoRule {
            group_by: self.group_by.iter().map(f).collect(),
            agg: self.agg.iter().map(f).collect(),
            pos: self.pos.iter().map(atom).collect(),
            neg: self.neg.iter().map(atom).collect(),
            eq: self.eq.iter().map(|(a, b)| (f(a), f(b))).collect(),
            exists: self
                .exists
                .iter()
                .map(|e| ExistsAtom { count: e.count, role: e.role.clone(), subject: f(&e.subject) })
                .collect(),
        }
    }

    /// Resolves equalities into a substitution. `None` when two distinct
    /// constants are equated.
    pub(crate) fn eq_substitution(&self) -> Option<BTreeMap<String, Term>> {
        let mut classes: Vec<BTreeSet<Term>> = Vec::new();
        for (a, b) in &self.eq {
            let ia = classes.iter().position(|c| c.contains(a));
            let ib = classes.iter().position(|c| c.contains(b));
            match (ia, ib) {
                (Some(i), Some(j)) if i == j => {}
                (Some(i), Some(j)) => {
                    let (lo, hi) = (i.min(j), i.max(j));
                    let moved = classes.remove(hi);
                    classes[lo].extend(moved);
                }
                (Some(i), None) => {
                    classes[i].insert(b.clone());
                }
                (None, Some(j)) => {
                    classes[j].insert(a.clone());
                }
                (None, None) => classes.push(BTreeSet::from([a.clone(), b.clone()])),
            }
        }
        let mut sub = BTreeMap::new();
        for c in classes {
            let consts: Vec<&Term> = c.iter().filter(|t| !t.is_var()).collect();
            if consts.len() > 1 {
                return None;
            }
            let rep = consts
                .first()
                .copied()
                .or_else(|| c.iter().find(|t| t.as_var().is_some_and(|v| !is_fresh(v))))
                .or_else(|| c.iter().next())
                .unwrap()
                .clone();
            for t in c {
                if let Term::Var(v) = t {
                    if Term::Var(v.clone()) != rep {
                        sub.insert(v, rep.clone());
                    }
                }
            }
        }
        Some(sub)
    }

    /// The rule with equalities substituted away, or `None` if they clash.
    pub(crate) fn without_equalities(&self) -> Option<FoRule> {
        let sub = self.eq_substitution()?;
        let mut r = self.rename(&|t| match t {
            Term::Var(v) => sub.get(v).cloned().unwrap_or_else(|| t.clone()),
            _ => t.clone(),
        });
        r.eq.clear();
        Some(r)
    }

    /// Positive and negated copies of one atom, or two exact counts that
    /// disagree on the same successor set.
    pub fn is_trivially_unsatisfiable(&self) -> bool {
        let Some(r) = self.without_equalities() else {
            return true;
        };
        let mut bound: BTreeSet<&str> = r.pos.iter().flat_map(|a| a.vars()).collect();
        bound.extend(r.head().filter_map(Term::as_var));
        bound.extend(r.exists.iter().filter_map(|e| e.subject.as_var()));
        if r.neg.iter().any(|n| r.pos.iter().any(|p| covers(n, p, &bound))) {
            return true;
        }
        for (i, a) in r.exists.iter().enumerate() {
            for b in &r.exists[i + 1..] {
                if a.role == b.role && a.subject == b.subject && a.count != b.count {
                    return true;
                }
            }
            // a positive R(w, _) means at least one successor
            if a.count == 0 && r.pos.iter().any(|p| role_atom_from(p, &a.role, &a.subject)) {
                return true;
            }
        }
        false
    }

    fn sort_body(&mut self) {
        self.pos.sort();
        self.pos.dedup();
        self.neg.sort();
        self.neg.dedup();
        for e in &mut self.eq {
            if e.1 < e.0 {
                std::mem::swap(&mut e.0, &mut e.1);
            }
        }
        self.eq.retain(|(a, b)| a != b);
        self.eq.sort();
        self.eq.dedup();
        self.exists.sort();
        self.exists.dedup();
    }

    /// Fresh variables renamed canonically and body parts sorted, so that
    /// equal rules up to fresh-variable naming compare equal.
    pub fn canonical(&self) -> FoRule {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        let mut bump = |t: &Term| {
            if let Term::Var(v) = t {
                if is_fresh(v) {
                    *counts.entry(v.clone()).or_insert(0) += 1;
                }
            }
        };
        self.head().for_each(&mut bump);
        self.pos.iter().chain(&self.neg).flat_map(|a| a.args.iter()).for_each(&mut bump);
        for (a, b) in &self.eq {
            bump(a);
            bump(b);
        }
        self.exists.iter().for_each(|e| bump(&e.subject));
        let shared: Vec<String> = counts.iter().filter(|(_, &n)| n > 1).map(|(v, _)| v.clone()).collect();
        let single: BTreeSet<String> = counts.iter().filter(|(_, &n)| n == 1).map(|(v, _)| v.clone()).collect();

        // singletons print as `_`; shared ones get the naming with the
        // smallest rendering
        let render_with = |names: &BTreeMap<String, Term>| -> (FoRule, String) {
            let mut r = self.rename(&|t| match t {
                Term::Var(v) if single.contains(v) => Term::var("_"),
                Term::Var(v) => names.get(v).cloned().unwrap_or_else(|| t.clone()),
                _ => t.clone(),
            });
            r.sort_body();
            let s = r.body_text_raw();
            (r, s)
        };
        let best_names: BTreeMap<String, Term> = if shared.len() <= 5 {
            let mut best: Option<(String, BTreeMap<String, Term>)> = None;
            for perm in permutations(shared.len()) {
                let names: BTreeMap<String, Term> = shared
                    .iter()
                    .zip(&perm)
                    .map(|(v, &k)| (v.clone(), Term::var(format!("_{}", k + 1))))
                    .collect();
                let (_, s) = render_with(&names);
                if best.as_ref().is_none_or(|(b, _)| s < *b) {
                    best = Some((s, names));
                }
            }
            best.map(|b| b.1).unwrap_or_default()
        } else {
            shared.iter().enumerate().map(|(k, v)| (v.clone(), Term::var(format!("_{}", k + 1)))).collect()
        };
        let (mut r, _) = render_with(&best_names);
        // give the singletons distinct names after the shared ones
        let mut next = shared.len() + 1;
        let fix = |t: &Term, next: &mut usize| -> Term {
            if t.as_var() == Some("_") {
                let v = Term::var(format!("_{next}"));
                *next += 1;
                v
            } else {
                t.clone()
            }
        };
        for t in r.group_by.iter_mut().chain(r.agg.iter_mut()) {
            *t = fix(t, &mut next);
        }
        for a in r.pos.iter_mut().chain(r.neg.iter_mut()) {
            for t in &mut a.args {
                *t = fix(t, &mut next);
            }
        }
        for (a, b) in &mut r.eq {
            *a = fix(a, &mut next);
            *b = fix(b, &mut next);
        }
        for e in &mut r.exists {
            e.subject = fix(&e.subject, &mut next);
        }
        r
    }

    fn singletons(&self) -> BTreeSet<String> {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        let mut bump = |t: &Term| {
            if let Some(v) = t.as_var() {
                *counts.entry(v.to_string()).or_insert(0) += 1;
            }
        };
        self.head().for_each(&mut bump);
        self.pos.iter().chain(&self.neg).flat_map(|a| a.args.iter()).for_each(&mut bump);
        for (a, b) in &self.eq {
            bump(a);
            bump(b);
        }
        self.exists.iter().for_each(|e| bump(&e.subject));
        counts.into_iter().filter(|(v, n)| *n == 1 && is_fresh(v)).map(|(v, _)| v).collect()
    }

    fn term_text(t: &Term, single: &BTreeSet<String>) -> String {
        match t {
            Term::Var(v) if single.contains(v) => "_".into(),
            other => other.to_string(),
        }
    }

    fn body_text_with(&self, single: &BTreeSet<String>) -> String {
        let tt = |t: &Term| Self::term_text(t, single);
        let atom = |a: &Atom| format!("{}({})", a.pred, a.args.iter().map(tt).collect::<Vec<_>>().join(","));
        let mut items: Vec<String> = Vec::new();
        items.extend(self.pos.iter().map(atom));
        items.extend(self.neg.iter().map(|a| format!("not {}", atom(a))));
        items.extend(self.eq.iter().map(|(a, b)| format!("{}={}", tt(a), tt(b))));
        let used = self.variables();
        let mut z = "z".to_string();
        let mut k = 1;
        while used.contains(&z) {
            z = format!("z{k}");
            k += 1;
        }
        for e in &self.exists {
            let w = tt(&e.subject);
            let (s, o) = if e.role.inverted { (z.clone(), w) } else { (w, z.clone()) };
            items.push(format!("exists={} {z}: {}({s},{o})", e.count, e.role.name));
        }
        if items.is_empty() {
            "true".into()
        } else {
            items.join(", ")
        }
    }

    fn body_text_raw(&self) -> String {
        let head = self.head().map(|t| t.to_string()).collect::<Vec<_>>().join(",");
        format!("{head}|{}", self.body_text_with(&BTreeSet::new()))
    }
}

/// Whether the positive atom is an instance of the negated one, reading
/// variables local to the negation as wildcards.
fn covers(neg: &Atom, pos: &Atom, bound: &BTreeSet<&str>) -> bool {
    if neg.pred != pos.pred || neg.args.len() != pos.args.len() {
        return false;
    }
    let mut seen: BTreeMap<&str, &Term> = BTreeMap::new();
    neg.args.iter().zip(&pos.args).all(|(n, p)| match n.as_var() {
        Some(v) if !bound.contains(v) => *seen.entry(v).or_insert(p) == p,
        _ => n == p,
    })
}

fn role_atom_from(a: &Atom, role: &Role, subject: &Term) -> bool {
    a.pred == role.name
        && a.args.len() == 2
        && if role.inverted { a.args[1] == *subject } else { a.args[0] == *subject }
}

pub(crate) fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

impl fmt::Display for FoRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let single = self.singletons();
        let tt = |t: &Term| Self::term_text(t, &single);
        let g = self.group_by.iter().map(tt).collect::<Vec<_>>().join(",");
        let a = self.agg.iter().map(tt).collect::<Vec<_>>().join(",");
        let sep = if g.is_empty() { ":" } else { " :" };
        let a = if a.is_empty() { a } else { format!(" {a}") };
        write!(f, "q({g}{sep}{a}) :- {}", self.body_text_with(&single))
    }
}

impl FoQuery {
    /// A plain query: non-answer variables become aggregation variables.
    pub fn from_cq(q: &ConjunctiveQuery) -> FoQuery {
        let agg = q.existential_variables();
        FoQuery {
            group_by: q.head.clone(),
            agg: agg.clone(),
            factor: 1,
            rules: vec![FoRule {
                group_by: q.head.iter().map(Term::var).collect(),
                agg: agg.iter().map(Term::var).collect(),
                pos: q.body.clone(),
                ..FoRule::default()
            }],
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.factor == 0 {
            return Err(Error::Invalid("factor must be positive".into()));
        }
        let mut seen = BTreeSet::new();
        for v in self.group_by.iter().chain(&self.agg) {
            if !is_ident(v) || is_fresh(v) {
                return Err(Error::Invalid(format!("bad head variable `{v}`")));
            }
            if !seen.insert(v) {
                return Err(Error::Invalid(format!("head variable `{v}` listed twice")));
            }
        }
        for r in &self.rules {
            if r.group_by.len() != self.group_by.len() || r.agg.len() != self.agg.len() {
                return Err(Error::Invalid(format!("rule head does not fit the query header: {r}")));
            }
            for a in r.pos.iter().chain(&r.neg) {
                if a.args.is_empty() || a.args.len() > 2 {
                    return Err(Error::Invalid(format!("bad atom {a}")));
                }
            }
        }
        Ok(())
    }

    /// Rules canonicalized, sorted and deduplicated.
    pub fn canonical(&self) -> FoQuery {
        let mut rules: Vec<FoRule> = self.rules.iter().map(FoRule::canonical).collect();
        rules.sort_by_cached_key(|r| r.to_string());
        rules.dedup();
        FoQuery { rules, ..self.clone() }
    }

    /// Canonical text; equal for queries that differ only in fresh-variable
    /// naming and rule or atom order.
    pub fn fingerprint(&self) -> String {
        self.canonical().to_string()
    }

    /// Rule heads rewritten to the header variables; constants and repeated
    /// variables in a head become equalities.
    pub fn normalize(&self) -> FoQuery {
        let names: Vec<&String> = self.group_by.iter().chain(&self.agg).collect();
        let rules = self
            .rules
            .iter()
            .map(|r| {
                let mut map: BTreeMap<String, Term> = BTreeMap::new();
                let mut extra: Vec<(usize, Term)> = Vec::new();
                for (p, t) in r.head().enumerate() {
                    match t {
                        Term::Var(v) if !map.contains_key(v) => {
                            map.insert(v.clone(), Term::var(names[p].clone()));
                        }
                        _ => extra.push((p, t.clone())),
                    }
                }
                let mut k = 0;
                for v in r.variables() {
                    map.entry(v).or_insert_with(|| {
                        k += 1;
                        Term::var(format!("_{k}"))
                    });
                }
                let sub = |t: &Term| match t {
                    Term::Var(v) => map[v].clone(),
                    c => c.clone(),
                };
                let mut out = r.rename(&sub);
                for (p, t) in extra {
                    out.eq.push((Term::var(names[p].clone()), sub(&t)));
                }
                let g = self.group_by.len();
                out.group_by = names[..g].iter().map(|n| Term::var((*n).clone())).collect();
                out.agg = names[g..].iter().map(|n| Term::var((*n).clone())).collect();
                out
            })
            .collect();
        FoQuery { rules, ..self.clone() }.canonical()
    }

    pub fn parse(text: &str) -> Result<FoQuery> {
        let mut qs = parse_set(text)?;
        if qs.len() != 1 {
            return Err(Error::Invalid(format!("expected one query, found {}", qs.len())));
        }
        Ok(qs.remove(0))
    }

    /// Evaluation over an interpretation; bindings to anonymous elements are
    /// dropped.
    pub fn evaluate(&self, i: &Interpretation) -> Vec<CountAnswer> {
        evaluate(self, i)
    }
}

impl fmt::Display for FoQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Q({}; count({}) * {})", self.group_by.join(","), self.agg.join(","), self.factor)?;
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

/// Parses a sequence of queries separated by their header lines.
pub fn parse_set(text: &str) -> Result<Vec<FoQuery>> {
    let mut lx = Lexer::new(text)?;
    let mut out = Vec::new();
    let mut fresh = 0usize;
    while !lx.at_end() {
        let line = lx.line();
        let mut q = parse_header(&mut lx)?;
        while matches!(lx.peek(), Some(Tok::Ident(s)) if s == "q") && matches!(lx.peek_at(1), Some(Tok::Sym("("))) {
            q.rules.push(parse_rule(&mut lx, &mut fresh)?);
        }
        q.check().map_err(|e| Error::parse(line, e.to_string()))?;
        out.push(q.canonical());
    }
    Ok(out)
}

fn parse_header(lx: &mut Lexer) -> Result<FoQuery> {
    match lx.next() {
        Some(Tok::Ident(s)) if s == "Q" => {}
        _ => return Err(lx.error("expected a `Q(...)` header")),
    }
    lx.expect("(")?;
    let mut group_by = Vec::new();
    while !lx.is_sym(";") {
        group_by.push(lx.ident()?);
        if !lx.eat(",") {
            break;
        }
    }
    lx.expect(";")?;
    match lx.next() {
        Some(Tok::Ident(s)) if s == "count" => {}
        _ => return Err(lx.error("expected `count`")),
    }
    lx.expect("(")?;
    let mut agg = Vec::new();
    while !lx.is_sym(")") {
        agg.push(lx.ident()?);
        if !lx.eat(",") {
            break;
        }
    }
    lx.expect(")")?;
    lx.expect("*")?;
    let factor = lx.number()?;
    lx.expect(")")?;
    Ok(FoQuery { group_by, agg, factor, rules: Vec::new() })
}

fn fo_term(lx: &mut Lexer, fresh: &mut usize) -> Result<Term> {
    match lx.next() {
        Some(Tok::Ident(s)) if s == "_" => {
            *fresh += 1;
            Ok(Term::var(format!("_p{fresh}")))
        }
        Some(Tok::Ident(s)) => Ok(Term::Var(s)),
        Some(Tok::Quoted(s)) => Ok(Term::Const(s)),
        _ => Err(lx.error("expected a term")),
    }
}

fn fo_atom(lx: &mut Lexer, fresh: &mut usize) -> Result<Atom> {
    let pred = lx.ident()?;
    lx.expect("(")?;
    let mut args = vec![fo_term(lx, fresh)?];
    if lx.eat(",") {
        args.push(fo_term(lx, fresh)?);
    }
    lx.expect(")")?;
    Ok(Atom { pred, args })
}

fn parse_rule(lx: &mut Lexer, fresh: &mut usize) -> Result<FoRule> {
    lx.ident()?;
    lx.expect("(")?;
    let mut r = FoRule::default();
    let mut side = 0;
    loop {
        if lx.eat(":") {
            if side == 1 {
                return Err(lx.error("second `:` in rule head"));
            }
            side = 1;
            continue;
        }
        if lx.eat(")") {
            break;
        }
        lx.eat(",");
        if lx.is_sym(":") || lx.is_sym(")") {
            continue;
        }
        let t = fo_term(lx, fresh)?;
        if side == 0 {
            r.group_by.push(t);
        } else {
            r.agg.push(t);
        }
    }
    if side == 0 {
        return Err(lx.error("rule head needs `:`"));
    }
    lx.expect(":-")?;
    if matches!(lx.peek(), Some(Tok::Ident(s)) if s == "true") {
        lx.next();
        lx.eat(".");
        return Ok(r);
    }
    loop {
        match (lx.peek().cloned(), lx.peek_at(1).cloned()) {
            (Some(Tok::Ident(s)), Some(Tok::Ident(_))) if s == "not" => {
                lx.next();
                r.neg.push(fo_atom(lx, fresh)?);
            }
            (Some(Tok::Ident(s)), Some(Tok::Sym("="))) if s == "exists" => {
                lx.next();
                lx.next();
                let count = u32::try_from(lx.number()?).map_err(|_| lx.error("count too large"))?;
                let z = lx.ident()?;
                lx.expect(":")?;
                let line = lx.line();
                let a = fo_atom(lx, fresh)?;
                let is_z = |t: &Term| t.as_var() == Some(z.as_str());
                let (role, subject) = match a.args.as_slice() {
                    [s, o] if is_z(o) && !is_z(s) => (Role::new(a.pred.clone()), s.clone()),
                    [s, o] if is_z(s) && !is_z(o) => (Role::inverse_of(a.pred.clone()), o.clone()),
                    _ => return Err(Error::parse(line, format!("`{z}` must occur once in the counted atom"))),
                };
                r.exists.push(ExistsAtom { count, role, subject });
            }
            (Some(Tok::Ident(_)), Some(Tok::Sym("("))) => r.pos.push(fo_atom(lx, fresh)?),
            _ => {
                let a = fo_term(lx, fresh)?;
                lx.expect("=")?;
                let b = fo_term(lx, fresh)?;
                r.eq.push((a, b));
            }
        }
        if !lx.eat(",") {
            break;
        }
    }
    lx.eat(".");
    Ok(r)
}

struct CompiledRule {
    head: Vec<Slot>,
    nvars: usize,
    pos: Vec<CAtom>,
    neg: Vec<(Vec<CAtom>, usize)>,
    exists: Vec<(String, bool, Slot, u32)>,
    /// Indices and names of non-fresh variables.
    named_vars: Vec<(usize, String)>,
}

fn compile_rule(r: &FoRule, idx: &FactIndex) -> Option<CompiledRule> {
    let r = r.without_equalities()?;
    let mut vars: Vec<String> = Vec::new();
    let add = |t: &Term, vars: &mut Vec<String>| {
        if let Term::Var(v) = t {
            if !vars.contains(v) {
                vars.push(v.clone());
            }
        }
    };
    for t in r.head() {
        add(t, &mut vars);
    }
    for t in r.pos.iter().flat_map(|a| a.args.iter()) {
        add(t, &mut vars);
    }
    for e in &r.exists {
        add(&e.subject, &mut vars);
    }
    let slot = |t: &Term, vars: &[String]| match t {
        Term::Var(v) => Slot::Var(vars.iter().position(|x| x == v).unwrap()),
        Term::Const(c) => idx.id(&Element::named(c.clone())).map_or(Slot::Absent, Slot::Elem),
    };
    let head: Vec<Slot> = r.head().map(|t| slot(t, &vars)).collect();
    if head.contains(&Slot::Absent) {
        return None;
    }
    let pos = crate::cq::compile_atoms(&r.pos, idx, &vars);
    let neg = r
        .neg
        .iter()
        .map(|a| {
            let mut local = vars.clone();
            for t in &a.args {
                add(t, &mut local);
            }
            let n = local.len();
            (crate::cq::compile_atoms(std::slice::from_ref(a), idx, &local), n)
        })
        .collect();
    let exists = r
        .exists
        .iter()
        .map(|e| (e.role.name.clone(), e.role.inverted, slot(&e.subject, &vars), e.count))
        .collect();
    let named_vars = vars.iter().enumerate().filter(|(_, v)| !is_fresh(v)).map(|(i, v)| (i, v.clone())).collect();
    Some(CompiledRule { head, nvars: vars.len(), pos, neg, exists, named_vars })
}

fn for_each_rule_match(c: &CompiledRule, idx: &FactIndex, f: &mut dyn FnMut(&[u32])) {
    for_each_match(idx, &c.pos, &vec![None; c.nvars], &mut |asg| {
        for (atoms, n) in &c.neg {
            let mut init: Vec<Option<u32>> = asg.iter().map(|&e| Some(e)).collect();
            init.resize(*n, None);
            let mut hit = false;
            for_each_match(idx, atoms, &init, &mut |_| {
                hit = true;
                false
            });
            if hit {
                return true;
            }
        }
        for (pred, inv, subj, count) in &c.exists {
            let n = match subj {
                Slot::Var(v) => idx.role_succ(pred, *inv, asg[*v]).len(),
                Slot::Elem(e) => idx.role_succ(pred, *inv, *e).len(),
                Slot::Absent => 0,
            };
            if n as u32 != *count {
                return true;
            }
        }
        f(asg);
        true
    });
}

/// Matches of one rule, projected onto its non-fresh variables.
pub fn rule_matches(rule: &FoRule, i: &Interpretation) -> Vec<BTreeMap<String, Element>> {
    let idx = FactIndex::new(i);
    let Some(c) = compile_rule(rule, &idx) else {
        return Vec::new();
    };
    let mut out = BTreeSet::new();
    for_each_rule_match(&c, &idx, &mut |asg| {
        let m: BTreeMap<String, Element> =
            c.named_vars.iter().map(|(k, v)| (v.clone(), idx.elem(asg[*k]).clone())).collect();
        out.insert(m);
    });
    out.into_iter().collect()
}

/// Distinct head projections of all rules of `q`.
pub(crate) fn projections_indexed(q: &FoQuery, idx: &FactIndex) -> BTreeSet<Vec<u32>> {
    let mut out = BTreeSet::new();
    for r in &q.rules {
        let Some(c) = compile_rule(r, idx) else { continue };
        for_each_rule_match(&c, idx, &mut |asg| {
            let key: Vec<u32> = c
                .head
                .iter()
                .map(|s| match s {
                    Slot::Var(v) => asg[*v],
                    Slot::Elem(e) => *e,
                    Slot::Absent => unreachable!(),
                })
                .collect();
            out.insert(key);
        });
    }
    out
}

/// Distinct head tuples (group-by then aggregation positions) over all rules.
pub fn projections(q: &FoQuery, i: &Interpretation) -> BTreeSet<Vec<Element>> {
    let idx = FactIndex::new(i);
    projections_indexed(q, &idx).into_iter().map(|key| key.into_iter().map(|e| idx.elem(e).clone()).collect()).collect()
}

/// Cardinality per group-by key.
pub(crate) fn evaluate_indexed(q: &FoQuery, idx: &FactIndex) -> BTreeMap<Vec<u32>, u64> {
    let g = q.group_by.len();
    let mut out: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
    for key in projections_indexed(q, idx) {
        *out.entry(key[..g].to_vec()).or_insert(0) += q.factor;
    }
    out
}

fn to_answers(names: &[String], groups: BTreeMap<Vec<u32>, u64>, idx: &FactIndex) -> Vec<CountAnswer> {
    let mut out: Vec<CountAnswer> = groups
        .into_iter()
        .filter_map(|(key, count)| {
            let binding = names
                .iter()
                .zip(key)
                .map(|(v, e)| match idx.elem(e) {
                    Element::Named(n) => Some((v.clone(), n.clone())),
                    Element::Anon { .. } => None,
                })
                .collect::<Option<Vec<_>>>()?;
            Some(CountAnswer { binding, count })
        })
        .collect();
    out.sort();
    out
}

pub fn evaluate(q: &FoQuery, i: &Interpretation) -> Vec<CountAnswer> {
    let idx = FactIndex::new(i);
    to_answers(&q.group_by, evaluate_indexed(q, &idx), &idx)
}

/// Per-binding sums over a set of queries sharing group-by variables.
pub(crate) fn evaluate_set_indexed(qs: &[FoQuery], idx: &FactIndex) -> BTreeMap<Vec<u32>, u64> {
    let mut out: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
    for q in qs {
        for (k, n) in evaluate_indexed(q, idx) {
            *out.entry(k).or_insert(0) += n;
        }
    }
    out
}

/// Sums cardinalities per binding. Every query must have the same group-by
/// variables.
pub fn evaluate_set(qs: &[FoQuery], i: &Interpretation) -> Result<Vec<CountAnswer>> {
    let Some(first) = qs.first() else {
        return Ok(Vec::new());
    };
    if qs.iter().any(|q| q.group_by != first.group_by) {
        return Err(Error::Invalid("queries disagree on group-by variables".into()));
    }
    let idx = FactIndex::new(i);
    Ok(to_answers(&first.group_by, evaluate_set_indexed(qs, &idx), &idx))
}

fn sql_ident(kind: &str, name: &str) -> String {
    format!("\"{kind}_{name}\"")
}

fn sql_str(s: &str) -> String {
    format!("'{}'", s.replace('\'', "''"))
}

fn rule_sql(r: &FoRule) -> String {
    let width = r.group_by.len() + r.agg.len();
    let cols = |exprs: &[String]| -> String {
        let mut parts = vec!["1 AS k".to_string()];
        for (i, e) in exprs.iter().enumerate() {
            parts.push(format!("{e} AS c{i}"));
        }
        parts.join(", ")
    };
    let Some(r) = r.without_equalities() else {
        let nulls = vec!["NULL".to_string(); width];
        return format!("SELECT {} WHERE 1 = 0", cols(&nulls));
    };
    let mut from: Vec<String> = Vec::new();
    let mut conds: Vec<String> = Vec::new();
    let mut bound: BTreeMap<String, String> = BTreeMap::new();
    for (k, a) in r.pos.iter().enumerate() {
        let alias = format!("t{k}");
        let (kind, names) = if a.args.len() == 1 { ("concept", &["e"][..]) } else { ("role", &["s", "o"][..]) };
        from.push(format!("{} AS {alias}", sql_ident(kind, &a.pred)));
        for (t, col) in a.args.iter().zip(names) {
            let c = format!("{alias}.{col}");
            match t {
                Term::Const(v) => conds.push(format!("{c} = {}", sql_str(v))),
                Term::Var(v) => match bound.get(v) {
                    Some(prev) => conds.push(format!("{c} = {prev}")),
                    None => {
                        bound.insert(v.clone(), c);
                    }
                },
            }
        }
    }
    let mut extra = 0;
    let mut bind_domain = |v: &str, from: &mut Vec<String>, bound: &mut BTreeMap<String, String>| {
        if !bound.contains_key(v) {
            let alias = format!("d{extra}");
            extra += 1;
            from.push(format!("individual AS {alias}"));
            bound.insert(v.to_string(), format!("{alias}.e"));
        }
    };
    for t in r.head() {
        if let Term::Var(v) = t {
            bind_domain(v, &mut from, &mut bound);
        }
    }
    for e in &r.exists {
        if let Term::Var(v) = &e.subject {
            bind_domain(v, &mut from, &mut bound);
        }
    }
    let term_sql = |t: &Term, bound: &BTreeMap<String, String>| match t {
        Term::Const(c) => sql_str(c),
        Term::Var(v) => bound[v].clone(),
    };
    for (k, a) in r.neg.iter().enumerate() {
        let alias = format!("n{k}");
        let (kind, names) = if a.args.len() == 1 { ("concept", &["e"][..]) } else { ("role", &["s", "o"][..]) };
        let mut inner: Vec<String> = Vec::new();
        let mut local: BTreeMap<&str, String> = BTreeMap::new();
        for (t, col) in a.args.iter().zip(names) {
            let c = format!("{alias}.{col}");
            match t {
                Term::Var(v) if !bound.contains_key(v) => match local.get(v.as_str()) {
                    Some(prev) => inner.push(format!("{c} = {prev}")),
                    None => {
                        local.insert(v, c);
                    }
                },
                other => inner.push(format!("{c} = {}", term_sql(other, &bound))),
            }
        }
        let wh = if inner.is_empty() { String::new() } else { format!(" WHERE {}", inner.join(" AND ")) };
        conds.push(format!("NOT EXISTS (SELECT 1 FROM {} AS {alias}{wh})", sql_ident(kind, &a.pred)));
    }
    for (k, e) in r.exists.iter().enumerate() {
        let alias = format!("x{k}");
        let (me, other) = if e.role.inverted { ("o", "s") } else { ("s", "o") };
        let w = term_sql(&e.subject, &bound);
        let table = sql_ident("role", &e.role.name);
        if e.count == 0 {
            conds.push(format!("NOT EXISTS (SELECT 1 FROM {table} AS {alias} WHERE {alias}.{me} = {w})"));
        } else {
            conds.push(format!(
                "(SELECT COUNT(DISTINCT {alias}.{other}) FROM {table} AS {alias} WHERE {alias}.{me} = {w}) = {}",
                e.count
            ));
        }
    }
    let exprs: Vec<String> = r.head().map(|t| term_sql(t, &bound)).collect();
    let mut sql = format!("SELECT {}", cols(&exprs));
    if !from.is_empty() {
        sql.push_str(&format!(" FROM {}", from.join(", ")));
    }
    if !conds.is_empty() {
        sql.push_str(&format!(" WHERE {}", conds.join(" AND ")));
    }
    sql
}

/// SQL over tables `concept_A(e)`, `role_P(s,o)` and `individual(e)`.
/// Result columns are the group-by variables followed by `cnt`.
pub fn emit_sql(q: &FoQuery) -> String {
    let g = q.group_by.len();
    let width = g + q.agg.len();
    let union = if q.rules.is_empty() {
        format!(
            "SELECT 1 AS k{} WHERE 1 = 0",
            (0..width).map(|i| format!(", NULL AS c{i}")).collect::<String>()
        )
    } else {
        q.rules.iter().map(rule_sql).collect::<Vec<_>>().join("\nUNION\n")
    };
    let gcols: Vec<String> = (0..g).map(|i| format!("m.c{i} AS \"{}\"", q.group_by[i])).collect();
    if g == 0 {
        format!(
            "SELECT cnt FROM (SELECT COUNT(*) * {} AS cnt, COUNT(*) AS n FROM (\n{union}\n) AS m) AS w WHERE n > 0",
            q.factor
        )
    } else {
        let keys: Vec<String> = (0..g).map(|i| format!("m.c{i}")).collect();
        format!(
            "SELECT {}, COUNT(*) * {} AS cnt FROM (\n{union}\n) AS m GROUP BY {}",
            gcols.join(", "),
            q.factor,
            keys.join(", ")
        )
    }
}

/// Table definitions and inserts for an ABox, covering every predicate the
/// queries mention.
pub fn sql_load_script(abox: &ABox, queries: &[FoQuery]) -> String {
    let mut concepts: BTreeSet<String> = abox.concept_names();
    let mut roles: BTreeSet<String> = abox.role_names();
    for q in queries {
        for r in &q.rules {
            for a in r.pos.iter().chain(&r.neg) {
                if a.args.len() == 1 {
                    concepts.insert(a.pred.clone());
                } else {
                    roles.insert(a.pred.clone());
                }
            }
            for e in &r.exists {
                roles.insert(e.role.name.clone());
            }
        }
    }
    let mut out = String::from("CREATE TABLE individual (e TEXT PRIMARY KEY);\n");
    for a in &concepts {
        out.push_str(&format!("CREATE TABLE {} (e TEXT NOT NULL);\n", sql_ident("concept", a)));
    }
    for p in &roles {
        out.push_str(&format!("CREATE TABLE {} (s TEXT NOT NULL, o TEXT NOT NULL);\n", sql_ident("role", p)));
    }
    for i in abox.individuals() {
        out.push_str(&format!("INSERT INTO individual VALUES ({});\n", sql_str(&i)));
    }
    for f in abox.facts() {
        match f {
            Fact::Concept(a, x) => {
                out.push_str(&format!("INSERT INTO {} VALUES ({});\n", sql_ident("concept", a), sql_str(x)))
            }
            Fact::Role(p, x, y) => out.push_str(&format!(
                "INSERT INTO {} VALUES ({}, {});\n",
                sql_ident("role", p),
                sql_str(x),
                sql_str(y)
            )),
        }
    }
    out
}
