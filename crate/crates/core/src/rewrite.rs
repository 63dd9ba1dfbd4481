//! Rewriting of a connected rooted query and a TBox into a set of aggregate
//! queries whose summed answers over the bare ABox are the certain counts.
//!
//! Four rules drive the saturation. Atom rewriting and reduction add rules to
//! an existing query; the two ground-elimination rules move one aggregation
//! variable into the anonymous part, splitting on the exact number of ABox
//! successors and on which number restrictions hold at the anchor.

use std::collections::{BTreeMap, BTreeSet};

use crate::cq::{Atom, ConjunctiveQuery, Term};
use crate::error::{Error, Result};
use crate::focount::{is_fresh, ExistsAtom, FoQuery, FoRule};
use crate::kb::{entails, max_card, subsumees, validate_dialect, Axiom, BasicConcept, Dialect, Role, TBox};

/// How an output query relates to the input query's variables.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Provenance {
    /// Variables moved into the anonymous part, in elimination order.
    pub eliminated: Vec<String>,
    /// Variables dropped from the head because every rule forces them equal
    /// to another head variable or a constant.
    pub aliases: Vec<(String, Term)>,
}

impl Provenance {
    fn key(&self) -> String {
        let mut elim = self.eliminated.clone();
        elim.sort();
        let mut al: Vec<String> = self.aliases.iter().map(|(v, t)| format!("{v}={t}")).collect();
        al.sort();
        format!("elim[{}] alias[{}]", elim.join(","), al.join(","))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RewrittenQuery {
    pub query: FoQuery,
    pub provenance: Provenance,
}

/// Which ground-elimination variant to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Mode {
    /// The variable occurs in no atom other than the eliminated one.
    Alpha,
    /// Negated atoms and exact counts on the variable are allowed when they
    /// agree with the type of a fresh successor, and are dropped.
    Beta,
}

#[derive(Clone, Debug)]
struct Entry {
    query: FoQuery,
    prov: Provenance,
    closed: bool,
    expanded: bool,
}

/// Queries produced so far together with their deduplication keys.
#[derive(Clone, Debug)]
pub struct RewriteState {
    tbox: TBox,
    entries: Vec<Entry>,
    keys: BTreeSet<String>,
    fresh: usize,
    steps: usize,
    budget: usize,
}

pub const DEFAULT_STEP_BUDGET: usize = 200_000;

fn entry_key(q: &FoQuery, prov: &Provenance) -> String {
    format!("{}{}", q.fingerprint(), prov.key())
}

/// `B(w)` for an atomic concept, `R(w,_)` for an existential one.
fn xi(b: &BasicConcept, w: &Term, fresh: &mut usize) -> Atom {
    match b {
        BasicConcept::Atomic(a) => Atom::unary(a.clone(), w.clone()),
        BasicConcept::MinCard(_, r) => {
            *fresh += 1;
            let f = Term::var(format!("_f{fresh}"));
            if r.inverted {
                Atom::binary(r.name.clone(), f, w.clone())
            } else {
                Atom::binary(r.name.clone(), w.clone(), f)
            }
        }
    }
}

/// The atom read as `R(w, z)` with `z` at `z_pos`.
fn oriented(a: &Atom, z_pos: usize) -> (Role, Term, Term) {
    if z_pos == 1 {
        (Role::new(a.pred.clone()), a.args[0].clone(), a.args[1].clone())
    } else {
        (Role::inverse_of(a.pred.clone()), a.args[1].clone(), a.args[0].clone())
    }
}

fn occurrences(r: &FoRule, v: &str) -> usize {
    let mut n = r.head_occurrences(v);
    n += r.pos.iter().chain(&r.neg).flat_map(|a| a.args.iter()).filter(|t| t.as_var() == Some(v)).count();
    n += r.eq.iter().filter(|(a, b)| a.as_var() == Some(v) || b.as_var() == Some(v)).count();
    n += r.exists.iter().filter(|e| e.subject.as_var() == Some(v)).count();
    n
}

/// Basic concepts with an axiom `B sub >=n role`.
fn anchors(tbox: &TBox, role: &Role) -> BTreeSet<BasicConcept> {
    tbox.axioms()
        .iter()
        .filter_map(|ax| match ax {
            Axiom::ConceptInclusion { lhs, rhs: BasicConcept::MinCard(_, r), negated: false } if r == role => {
                Some(lhs.clone())
            }
            _ => None,
        })
        .collect()
}

/// Every split of the concepts requiring `role`-successors into those that
/// hold (non-empty) and those that do not, with the number of successors the
/// holding ones demand.
pub fn partitions(tbox: &TBox, role: &Role) -> Vec<(BTreeSet<BasicConcept>, BTreeSet<BasicConcept>, u32)> {
    let all: Vec<BasicConcept> = anchors(tbox, role).into_iter().collect();
    let mut out = Vec::new();
    for mask in 1u32..(1 << all.len()) {
        let (mut yes, mut no) = (BTreeSet::new(), BTreeSet::new());
        for (k, b) in all.iter().enumerate() {
            if mask >> k & 1 == 1 {
                yes.insert(b.clone());
            } else {
                no.insert(b.clone());
            }
        }
        let n = yes.iter().map(|b| max_card(tbox, b, role)).max().unwrap_or(0);
        out.push((yes, no, n));
    }
    out
}

fn cartesian(lists: &[Vec<BasicConcept>]) -> Vec<Vec<BasicConcept>> {
    let mut out: Vec<Vec<BasicConcept>> = vec![Vec::new()];
    for l in lists {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                l.iter().map(move |b| {
                    let mut p = prefix.clone();
                    p.push(b.clone());
                    p
                })
            })
            .collect();
    }
    out
}

/// Checks the shape and dialect requirements of the rewriting.
pub fn check_input(q: &ConjunctiveQuery, tbox: &TBox) -> Result<()> {
    let shape = q.classify_shape();
    if !shape.connected || !shape.rooted {
        return Err(Error::Precondition(format!("rewriting needs a connected rooted query, got {shape}")));
    }
    let bad = validate_dialect(tbox, &Dialect::CORE_N);
    if let Some(v) = bad.first() {
        return Err(Error::Precondition(format!("TBox is not in {}: {v}", Dialect::CORE_N)));
    }
    Ok(())
}

impl RewriteState {
    /// The single query counting all non-answer variables with factor 1.
    pub fn initialize(q: &ConjunctiveQuery, tbox: &TBox) -> Result<RewriteState> {
        check_input(q, tbox)?;
        let query = FoQuery::from_cq(q).canonical();
        let prov = Provenance::default();
        let mut keys = BTreeSet::new();
        keys.insert(entry_key(&query, &prov));
        Ok(RewriteState {
            tbox: tbox.clone(),
            entries: vec![Entry { query, prov, closed: false, expanded: false }],
            keys,
            fresh: 0,
            steps: 0,
            budget: DEFAULT_STEP_BUDGET,
        })
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    pub fn queries(&self) -> Vec<FoQuery> {
        self.entries.iter().map(|e| e.query.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn tick(&mut self) -> Result<()> {
        self.steps += 1;
        if self.steps > self.budget {
            return Err(Error::Limit(format!("rewriting exceeded {} steps", self.budget)));
        }
        Ok(())
    }

    fn atom_rewrite_rule(&mut self, r: &FoRule) -> Vec<FoRule> {
        let mut out = Vec::new();
        for (k, a) in r.pos.iter().enumerate() {
            if a.args.len() == 1 {
                for ax in self.tbox.axioms() {
                    if let Axiom::ConceptInclusion { lhs, rhs: BasicConcept::Atomic(name), negated: false } = ax {
                        if *name == a.pred {
                            let mut nr = r.clone();
                            nr.pos[k] = xi(lhs, &a.args[0], &mut self.fresh);
                            out.push(nr);
                        }
                    }
                }
                continue;
            }
            for z_pos in [1, 0] {
                let (role, w, z) = oriented(a, z_pos);
                let Some(zv) = z.as_var() else { continue };
                if !is_fresh(zv) || occurrences(r, zv) != 1 {
                    continue;
                }
                for ax in self.tbox.axioms() {
                    if let Axiom::ConceptInclusion { lhs, rhs: BasicConcept::MinCard(_, rr), negated: false } = ax {
                        if *rr == role {
                            let mut nr = r.clone();
                            nr.pos[k] = xi(lhs, &w, &mut self.fresh);
                            out.push(nr);
                        }
                    }
                }
            }
        }
        out
    }

    fn reduce_rule(r: &FoRule, group_by: &[String]) -> Vec<FoRule> {
        let rank = |t: &Term| -> (u8, String) {
            match t {
                Term::Const(c) => (0, c.clone()),
                Term::Var(v) if group_by.contains(v) => (1, v.clone()),
                Term::Var(v) if !is_fresh(v) => (2, v.clone()),
                Term::Var(v) => (3, v.clone()),
            }
        };
        let mut out = Vec::new();
        for i in 0..r.pos.len() {
            for j in i + 1..r.pos.len() {
                let (a, b) = (&r.pos[i], &r.pos[j]);
                if a.pred != b.pred || a.args.len() != b.args.len() {
                    continue;
                }
                if let Some(sigma) = unify(&a.args, &b.args, &rank) {
                    let mut base = r.clone();
                    base.pos.remove(j);
                    out.push(base.rename(&|t| match t {
                        Term::Var(v) => sigma.get(v).cloned().unwrap_or_else(|| t.clone()),
                        c => c.clone(),
                    }));
                }
            }
        }
        out
    }

    /// Adds rule successors of one kind to every query, one round.
    fn round(&mut self, ar: bool) -> Result<bool> {
        let mut changed = false;
        for idx in 0..self.entries.len() {
            let rules = self.entries[idx].query.rules.clone();
            let group_by = self.entries[idx].query.group_by.clone();
            let mut set: BTreeSet<FoRule> = rules.iter().cloned().collect();
            for r in &rules {
                let succ = if ar { self.atom_rewrite_rule(r) } else { Self::reduce_rule(r, &group_by) };
                for nr in succ {
                    let c = nr.canonical();
                    if set.insert(c) {
                        self.tick()?;
                        changed = true;
                    }
                }
            }
            let e = &mut self.entries[idx];
            e.query.rules = set.into_iter().collect();
            e.query = e.query.canonical();
        }
        Ok(changed)
    }

    /// One round of atom rewriting over all rules of all queries.
    pub fn atom_rewrite(&mut self) -> Result<bool> {
        self.round(true)
    }

    /// One round of reduction over all rules of all queries.
    pub fn reduce(&mut self) -> Result<bool> {
        self.round(false)
    }

    /// Closes one query under atom rewriting and reduction.
    fn close(&mut self, idx: usize) -> Result<()> {
        let group_by = self.entries[idx].query.group_by.clone();
        let mut set: BTreeSet<FoRule> = self.entries[idx].query.rules.iter().cloned().collect();
        let mut work: Vec<FoRule> = set.iter().cloned().collect();
        while let Some(r) = work.pop() {
            let mut succ = self.atom_rewrite_rule(&r);
            succ.extend(Self::reduce_rule(&r, &group_by));
            for nr in succ {
                let c = nr.canonical();
                if set.insert(c.clone()) {
                    self.tick()?;
                    work.push(c);
                }
            }
        }
        let e = &mut self.entries[idx];
        e.query.rules = set.into_iter().collect();
        e.query = e.query.canonical();
        e.closed = true;
        Ok(())
    }

    /// Whether `z` can be eliminated from `r` through a `role` atom; returns
    /// the anchor term `w` of that atom.
    fn eliminable(&self, r: &FoRule, z: &str, zpos: usize, role: &Role, mode: Mode) -> Option<Term> {
        let head: Vec<&Term> = r.head().collect();
        if r.head_occurrences(z) != 1 || head[zpos].as_var() != Some(z) {
            return None;
        }
        if r.pos_occurrences(z) != 1 {
            return None;
        }
        let atom = r.pos.iter().find(|a| a.vars().any(|v| v == z))?;
        if atom.args.len() != 2 {
            return None;
        }
        let z_pos = if atom.args[1].as_var() == Some(z) { 1 } else { 0 };
        let (ar, w, _) = oriented(atom, z_pos);
        if ar != *role || w.as_var() == Some(z) {
            return None;
        }
        if let Term::Var(wv) = &w {
            if !head.iter().any(|t| t.as_var() == Some(wv)) {
                return None;
            }
        }
        if r.eq.iter().any(|(a, b)| a.as_var() == Some(z) || b.as_var() == Some(z)) {
            return None;
        }
        let on_z_exists: Vec<&ExistsAtom> = r.exists.iter().filter(|e| e.subject.as_var() == Some(z)).collect();
        let on_z_neg: Vec<&Atom> = r.neg.iter().filter(|a| a.vars().any(|v| v == z)).collect();
        match mode {
            Mode::Alpha => {
                if !on_z_exists.is_empty() || !on_z_neg.is_empty() {
                    return None;
                }
            }
            Mode::Beta => {
                let back = role.inv();
                for e in on_z_exists {
                    if e.count != u32::from(e.role == back) {
                        return None;
                    }
                }
                let succ_type = BasicConcept::exists(back);
                for a in on_z_neg {
                    let negated = match a.args.as_slice() {
                        [_] => BasicConcept::atomic(a.pred.clone()),
                        [s, o] => {
                            let (zp, other) = if s.as_var() == Some(z) { (1, o) } else { (0, s) };
                            let local = other.as_var().is_some_and(|v| is_fresh(v) && occurrences(r, v) == 1);
                            if !local {
                                return None;
                            }
                            // read as S(z, _)
                            let s_role = oriented(a, zp).0;
                            BasicConcept::exists(s_role)
                        }
                        _ => return None,
                    };
                    if entails(&self.tbox, &succ_type, &negated) {
                        return None;
                    }
                }
            }
        }
        Some(w)
    }

    fn eliminate(&mut self, idx: usize, z: &str, role: &Role, mode: Mode) -> Result<Vec<Entry>> {
        let q = self.entries[idx].query.clone();
        let prov = self.entries[idx].prov.clone();
        let Some(apos) = q.agg.iter().position(|v| v == z) else {
            return Ok(Vec::new());
        };
        let zpos = q.group_by.len() + apos;
        let selected: Vec<(FoRule, Term)> = q
            .rules
            .iter()
            .filter_map(|r| self.eliminable(r, z, zpos, role, mode).map(|w| (r.clone(), w)))
            .collect();
        if selected.is_empty() {
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        for (yes, no, n) in partitions(&self.tbox, role) {
            let negated = subsumees(&self.tbox, &no);
            let choices: Vec<Vec<BasicConcept>> = yes
                .iter()
                .map(|b| {
                    subsumees(&self.tbox, &BTreeSet::from([b.clone()]))
                        .into_iter()
                        .filter(|c| !negated.contains(c))
                        .collect()
                })
                .collect();
            if choices.iter().any(Vec::is_empty) {
                continue;
            }
            let combos = cartesian(&choices);
            for i in 0..n {
                let mut rules = Vec::new();
                for (r, w) in &selected {
                    for combo in &combos {
                        let mut nr = r.clone();
                        nr.pos.retain(|a| !a.vars().any(|v| v == z));
                        for b in combo {
                            nr.pos.push(xi(b, w, &mut self.fresh));
                        }
                        nr.neg.retain(|a| !a.vars().any(|v| v == z));
                        for b in &negated {
                            nr.neg.push(xi(b, w, &mut self.fresh));
                        }
                        nr.exists.retain(|e| e.subject.as_var() != Some(z));
                        nr.exists.push(ExistsAtom { count: i, role: role.clone(), subject: w.clone() });
                        nr.agg.remove(apos);
                        rules.push(nr.canonical());
                    }
                }
                if rules.is_empty() {
                    continue;
                }
                let mut agg = q.agg.clone();
                agg.remove(apos);
                let factor = u64::from(n - i)
                    .checked_mul(q.factor)
                    .ok_or_else(|| Error::Limit("factor overflow".into()))?;
                let mut nq = FoQuery { group_by: q.group_by.clone(), agg, factor, rules };
                let mut np = prov.clone();
                np.eliminated.push(z.to_string());
                collapse(&mut nq, &mut np);
                let nq = nq.canonical();
                self.tick()?;
                out.push(Entry { query: nq, prov: np, closed: false, expanded: false });
            }
        }
        Ok(out)
    }

    fn ge(&mut self, mode: Mode) -> Result<bool> {
        let mut changed = false;
        let n = self.entries.len();
        for idx in 0..n {
            let q = self.entries[idx].query.clone();
            let mut cands: BTreeSet<(String, Role)> = BTreeSet::new();
            for r in &q.rules {
                for a in &r.pos {
                    if a.args.len() != 2 {
                        continue;
                    }
                    for z_pos in [1, 0] {
                        let (role, _, z) = oriented(a, z_pos);
                        if let Some(v) = z.as_var() {
                            if q.agg.iter().any(|x| x == v) {
                                cands.insert((v.to_string(), role));
                            }
                        }
                    }
                }
            }
            for (z, role) in cands {
                for e in self.eliminate(idx, &z, &role, mode)? {
                    if self.keys.insert(entry_key(&e.query, &e.prov)) {
                        self.entries.push(e);
                        changed = true;
                    }
                }
            }
        }
        Ok(changed)
    }

    /// One round of ground elimination restricted to variables that occur in
    /// no atom besides the eliminated one.
    pub fn ge_alpha(&mut self) -> Result<bool> {
        self.ge(Mode::Alpha)
    }

    /// One round of ground elimination that also drops negated atoms and
    /// exact counts on the eliminated variable.
    pub fn ge_beta(&mut self) -> Result<bool> {
        self.ge(Mode::Beta)
    }

    /// Runs the rules to a fixpoint, closing each query under atom rewriting
    /// and reduction before any elimination from it, then normalizes.
    pub fn saturate(mut self) -> Result<Vec<RewrittenQuery>> {
        loop {
            for idx in 0..self.entries.len() {
                if !self.entries[idx].closed {
                    self.close(idx)?;
                }
            }
            let Some(idx) = self.entries.iter().position(|e| !e.expanded) else { break };
            self.entries[idx].expanded = true;
            for mode in [Mode::Alpha, Mode::Beta] {
                let snapshot = self.entries.len();
                let mut produced = Vec::new();
                let q = self.entries[idx].query.clone();
                let mut cands: BTreeSet<(String, Role)> = BTreeSet::new();
                for r in &q.rules {
                    for a in r.pos.iter().filter(|a| a.args.len() == 2) {
                        for z_pos in [1, 0] {
                            let (role, _, z) = oriented(a, z_pos);
                            if let Some(v) = z.as_var().filter(|v| q.agg.iter().any(|x| x == v)) {
                                cands.insert((v.to_string(), role));
                            }
                        }
                    }
                }
                for (z, role) in cands {
                    produced.extend(self.eliminate(idx, &z, &role, mode)?);
                }
                for e in produced {
                    if self.keys.insert(entry_key(&e.query, &e.prov)) {
                        self.entries.push(e);
                    }
                }
                debug_assert!(self.entries.len() >= snapshot);
            }
        }
        let mut out: BTreeMap<String, RewrittenQuery> = BTreeMap::new();
        for mut e in self.entries {
            // unsatisfiable rules stay during saturation: a later elimination
            // may remove the atom that clashes
            e.query.rules.retain(|r| !r.is_trivially_unsatisfiable());
            if e.query.rules.is_empty() {
                continue;
            }
            let query = e.query.normalize();
            let key = entry_key(&query, &e.prov);
            out.entry(key).or_insert(RewrittenQuery { query, provenance: e.prov });
        }
        let mut v: Vec<RewrittenQuery> = out.into_values().collect();
        v.sort_by_cached_key(|r| r.query.fingerprint());
        Ok(v)
    }
}

/// Most general unifier of two argument lists, mapping each class to its
/// best-ranked member. `None` when two distinct constants meet.
fn unify(a: &[Term], b: &[Term], rank: &dyn Fn(&Term) -> (u8, String)) -> Option<BTreeMap<String, Term>> {
    let mut classes: Vec<BTreeSet<Term>> = Vec::new();
    for (s, t) in a.iter().zip(b) {
        let is = classes.iter().position(|c| c.contains(s));
        let it = classes.iter().position(|c| c.contains(t));
        match (is, it) {
            (Some(i), Some(j)) if i == j => {}
            (Some(i), Some(j)) => {
                let (lo, hi) = (i.min(j), i.max(j));
                let moved = classes.remove(hi);
                classes[lo].extend(moved);
            }
            (Some(i), None) => {
                classes[i].insert(t.clone());
            }
            (None, Some(j)) => {
                classes[j].insert(s.clone());
            }
            (None, None) => classes.push(BTreeSet::from([s.clone(), t.clone()])),
        }
    }
    let mut sigma = BTreeMap::new();
    for c in classes {
        if c.iter().filter(|t| !t.is_var()).count() > 1 {
            return None;
        }
        let rep = c.iter().min_by_key(|t| rank(t)).unwrap().clone();
        for t in c {
            if let Term::Var(v) = &t {
                if t != rep {
                    sigma.insert(v.clone(), rep.clone());
                }
            }
        }
    }
    Some(sigma)
}

/// Drops aggregation positions that every rule fills with the same term as
/// an earlier head position, or with one constant.
fn collapse(q: &mut FoQuery, prov: &mut Provenance) {
    let g = q.group_by.len();
    let mut p = 0;
    while p < q.agg.len() {
        let pos = g + p;
        let head_at = |r: &FoRule, k: usize| -> Term { r.head().nth(k).unwrap().clone() };
        let same_as = (0..pos).find(|&k| q.rules.iter().all(|r| head_at(r, k) == head_at(r, pos)));
        let alias = match same_as {
            Some(k) => {
                let name = if k < g { q.group_by[k].clone() } else { q.agg[k - g].clone() };
                Some(Term::var(name))
            }
            None => {
                let first = head_at(&q.rules[0], pos);
                (!first.is_var() && q.rules.iter().all(|r| head_at(r, pos) == first)).then_some(first)
            }
        };
        match alias {
            Some(t) => {
                prov.aliases.push((q.agg.remove(p), t));
                for r in &mut q.rules {
                    r.agg.remove(p);
                }
            }
            None => p += 1,
        }
    }
}

/// Saturated and normalized rewriting of `q` under `tbox`.
pub fn saturate(q: &ConjunctiveQuery, tbox: &TBox) -> Result<Vec<FoQuery>> {
    Ok(saturate_with_provenance(q, tbox)?.into_iter().map(|r| r.query).collect())
}

pub fn saturate_with_provenance(q: &ConjunctiveQuery, tbox: &TBox) -> Result<Vec<RewrittenQuery>> {
    RewriteState::initialize(q, tbox)?.saturate()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::focount::{evaluate, evaluate_set};
    use crate::interp::Interpretation;
    use crate::kb::ABox;

    fn sample_tbox() -> TBox {
        TBox::parse("A sub >=2 P1\nexists P1- sub >=3 P2\n").unwrap()
    }

    fn sample_query() -> ConjunctiveQuery {
        ConjunctiveQuery::parse("q(x) :- A(x), P1(x,y1), P2(y1,y2).").unwrap()
    }

    fn sample_abox() -> Interpretation {
        Interpretation::from_abox(&ABox::parse("A(a)\nP1(a,b)\nP2(b,d)\nP2(b,e)").unwrap()).unwrap()
    }

    fn rule_texts(q: &FoQuery) -> Vec<String> {
        q.rules.iter().map(|r| r.to_string()).collect()
    }

    #[test]
    fn initialization() {
        let st = RewriteState::initialize(&sample_query(), &sample_tbox()).unwrap();
        let qs = st.queries();
        assert_eq!(qs.len(), 1);
        assert_eq!(qs[0].agg, vec!["y1", "y2"]);
        assert_eq!(qs[0].factor, 1);
        let b = RewriteState::initialize(&ConjunctiveQuery::parse("q() :- A('a')").unwrap(), &TBox::default()).unwrap();
        assert!(b.queries()[0].group_by.is_empty() && b.queries()[0].agg.is_empty());
        let disc = ConjunctiveQuery::parse("q(x) :- A(x), B(y)").unwrap();
        assert!(matches!(RewriteState::initialize(&disc, &TBox::default()), Err(Error::Precondition(_))));
        let h = TBox::parse("role P\nrole S\nP sub S").unwrap();
        assert!(RewriteState::initialize(&sample_query(), &h).is_err());
    }

    #[test]
    fn atom_rewrite_cases() {
        let t = TBox::parse("B sub A").unwrap();
        let mut st = RewriteState::initialize(&ConjunctiveQuery::parse("q(x) :- A(x)").unwrap(), &t).unwrap();
        assert!(st.atom_rewrite().unwrap());
        assert_eq!(rule_texts(&st.queries()[0]), vec!["q(x :) :- A(x)", "q(x :) :- B(x)"]);
        // an aggregation variable in the object position blocks rewriting of the role atom
        let mut st = RewriteState::initialize(&sample_query(), &sample_tbox()).unwrap();
        assert!(!st.atom_rewrite().unwrap());
    }

    #[test]
    fn reduce_case() {
        let q = FoQuery::parse("Q(x; count(y1) * 3)\nq(x : y1) :- A(x), P1(x,y1), P1(_,y1), exists=0 z: P2(y1,z)").unwrap();
        let mut st = RewriteState::initialize(&sample_query(), &sample_tbox()).unwrap();
        st.entries = vec![Entry { query: q, prov: Provenance::default(), closed: false, expanded: false }];
        assert!(st.reduce().unwrap());
        let texts = rule_texts(&st.queries()[0]);
        assert!(texts.contains(&"q(x : y1) :- A(x), P1(x,y1), exists=0 z: P2(y1,z)".to_string()), "{texts:?}");
        let mut plain = RewriteState::initialize(&sample_query(), &sample_tbox()).unwrap();
        assert!(!plain.reduce().unwrap());
    }

    #[test]
    fn reduce_keeps_group_by_fixed() {
        let rank_q = FoQuery::parse("Q(x; count(y) * 1)\nq(x : y) :- P(x,x), P(y,y)").unwrap();
        let out = RewriteState::reduce_rule(&rank_q.rules[0], &rank_q.group_by);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].agg, vec![Term::var("x")]);
    }

    #[test]
    fn ge_alpha_example() {
        let mut st = RewriteState::initialize(&sample_query(), &sample_tbox()).unwrap();
        assert!(st.ge_alpha().unwrap());
        let mut got: Vec<(u64, Vec<String>)> =
            st.queries()[1..].iter().map(|q| (q.factor, rule_texts(q))).collect();
        got.sort();
        let body = |i: u32| vec![format!("q(x : y1) :- A(x), P1(_,y1), P1(x,y1), exists={i} z: P2(y1,z)")];
        assert_eq!(got, vec![(1, body(2)), (2, body(1)), (3, body(0))]);
    }

    #[test]
    fn partition_listing() {
        let t = TBox::parse("A1 sub >=1 R\nA2 sub >=2 R").unwrap();
        let mut ps: Vec<(Vec<String>, Vec<String>, u32)> = partitions(&t, &Role::new("R"))
            .into_iter()
            .map(|(a, b, n)| {
                (a.iter().map(|c| c.to_string()).collect(), b.iter().map(|c| c.to_string()).collect(), n)
            })
            .collect();
        ps.sort();
        assert_eq!(
            ps,
            vec![
                (vec!["A1".into()], vec!["A2".into()], 1),
                (vec!["A1".into(), "A2".into()], vec![], 2),
                (vec!["A2".into()], vec!["A1".into()], 2),
            ]
        );
        assert!(partitions(&t, &Role::new("S")).is_empty());
    }

    #[test]
    fn ge_beta_example() {
        let q = FoQuery::parse(
            "Q(x; count(y1) * 3)\nq(x : y1) :- A(x), P1(x,y1), P1(_,y1), exists=0 z: P2(y1,z)\nq(x : y1) :- A(x), P1(x,y1), exists=0 z: P2(y1,z)",
        )
        .unwrap();
        let mut st = RewriteState::initialize(&sample_query(), &sample_tbox()).unwrap();
        st.entries = vec![Entry { query: q, prov: Provenance::default(), closed: true, expanded: false }];
        assert!(st.ge_beta().unwrap());
        let found = st.queries().iter().any(|q| {
            q.factor == 3 && rule_texts(q) == vec!["q(x :) :- A(x), exists=1 z: P1(x,z)".to_string()]
        });
        assert!(found, "{:#?}", st.queries());
        // a positive count on the variable blocks
        let blocked = FoQuery::parse("Q(x; count(y1) * 1)\nq(x : y1) :- A(x), P1(x,y1), exists=2 z: P2(y1,z)").unwrap();
        st.entries = vec![Entry { query: blocked, prov: Provenance::default(), closed: true, expanded: false }];
        assert!(!st.ge_beta().unwrap());
        // group-by variables never move
        let gb = FoQuery::parse("Q(x, y1; count() * 1)\nq(x, y1 :) :- A(x), P1(x,y1)").unwrap();
        st.entries = vec![Entry { query: gb, prov: Provenance::default(), closed: true, expanded: false }];
        assert!(!st.ge_beta().unwrap());
    }

    #[test]
    fn sample_kb_total() {
        let out = saturate(&sample_query(), &sample_tbox()).unwrap();
        let total = evaluate_set(&out, &sample_abox()).unwrap();
        assert_eq!(total.len(), 1);
        assert_eq!(total[0].count, 6);
        let contributions: Vec<u64> =
            out.iter().map(|q| evaluate(q, &sample_abox()).first().map_or(0, |a| a.count)).filter(|&c| c > 0).collect();
        let mut sorted = contributions.clone();
        sorted.sort();
        assert_eq!(sorted, vec![1, 2, 3]);
    }

    #[test]
    fn empty_tbox_is_identity() {
        let q = ConjunctiveQuery::parse("q(x) :- A(x)").unwrap();
        let out = saturate(&q, &TBox::default()).unwrap();
        assert_eq!(out, vec![FoQuery::from_cq(&q).normalize()]);
    }

    #[test]
    fn three_successors() {
        let q = ConjunctiveQuery::parse("q(x) :- P(x,y)").unwrap();
        let out = saturate(&q, &TBox::parse("A sub >=3 P").unwrap()).unwrap();
        let i = Interpretation::from_abox(&ABox::parse("A(a)").unwrap()).unwrap();
        let ans = evaluate_set(&out, &i).unwrap();
        assert_eq!(ans[0].count, 3);
        assert!(out.iter().any(|q| q.factor == 3));
    }

    #[test]
    fn budget_guard() {
        let st = RewriteState::initialize(&sample_query(), &sample_tbox()).unwrap().with_budget(2);
        assert!(matches!(st.saturate(), Err(Error::Limit(_))));
    }
}
