//! Certain-answer count engines and the count decision procedure.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use crate::cq::{answers, matches, ConjunctiveQuery, CountAnswer};
use crate::error::{Error, Result};
use crate::focount::evaluate_set;
use crate::interp::{
    annotated_chase, apply_function, is_model, restricted_chase, violates_disjointness, Element, Homomorphism,
    Interpretation,
};
use crate::kb::{is_satisfiable, validate_dialect, Axiom, BasicConcept, Dialect, Role, KB};
use crate::rewrite::{check_input, RewriteState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Engine {
    Rewrite,
    Chase,
    MergeMin,
    BruteForce,
}

impl Engine {
    pub const ALL: [Engine; 4] = [Engine::Rewrite, Engine::Chase, Engine::MergeMin, Engine::BruteForce];

    pub fn name(self) -> &'static str {
        match self {
            Engine::Rewrite => "rewrite",
            Engine::Chase => "chase",
            Engine::MergeMin => "merge-min",
            Engine::BruteForce => "brute-force",
        }
    }

    /// Whether the engine computes certain counts exactly (rather than an
    /// upper bound valid only when the bounded domain holds an optimal model).
    pub fn is_exact(self) -> bool {
        self != Engine::BruteForce
    }

    /// Checks the dialect and shape requirements of the engine.
    pub fn check(self, kb: &KB, q: &ConjunctiveQuery) -> Result<()> {
        match self {
            Engine::Rewrite | Engine::Chase => check_input(q, &kb.tbox),
            Engine::MergeMin => {
                let shape = q.classify_shape();
                if !shape.connected || !shape.linear {
                    return Err(Error::Precondition(format!("merge-min needs a connected linear query, got {shape}")));
                }
                if let Some(v) = validate_dialect(&kb.tbox, &Dialect::POS_HN).first() {
                    return Err(Error::Precondition(format!("TBox is not in {}: {v}", Dialect::POS_HN)));
                }
                Ok(())
            }
            Engine::BruteForce => Ok(()),
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Engine> {
        Engine::ALL
            .into_iter()
            .find(|e| e.name() == s || (s == "mergeMin" && *e == Engine::MergeMin) || (s == "bruteForce" && *e == Engine::BruteForce))
            .ok_or_else(|| Error::Invalid(format!("unknown engine {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bounds {
    /// Chase generations; `None` picks an engine-specific default.
    pub chase_depth: Option<u32>,
    pub extra_elements: u32,
    pub step_budget: usize,
}

pub const DEFAULT_EXTRAS: u32 = 2;
pub const DEFAULT_STEP_BUDGET: usize = 2_000_000;

impl Default for Bounds {
    fn default() -> Self {
        Bounds { chase_depth: None, extra_elements: DEFAULT_EXTRAS, step_budget: DEFAULT_STEP_BUDGET }
    }
}

#[derive(Clone, Debug)]
pub struct CertainCountRequest {
    pub kb: KB,
    pub query: ConjunctiveQuery,
    pub engine: Engine,
    pub bounds: Bounds,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountResult {
    pub answers: Vec<CountAnswer>,
    pub engine: Engine,
    pub exact: bool,
}

impl CertainCountRequest {
    pub fn new(kb: KB, query: ConjunctiveQuery, engine: Engine) -> Self {
        CertainCountRequest { kb, query, engine, bounds: Bounds::default() }
    }

    pub fn run(&self) -> Result<CountResult> {
        let (kb, q, b) = (&self.kb, &self.query, &self.bounds);
        let answers = match self.engine {
            Engine::Rewrite => rewrite_with_budget(kb, q, b.step_budget)?,
            Engine::Chase => certcount_chase(kb, q, b.chase_depth)?,
            Engine::MergeMin => merge_min(kb, q, b.chase_depth, b.step_budget)?,
            Engine::BruteForce => bruteforce(kb, q, b.extra_elements, b.step_budget)?,
        };
        Ok(CountResult { answers, engine: self.engine, exact: self.engine.is_exact() })
    }
}

fn unsatisfiable() -> Error {
    Error::Precondition("the knowledge base is unsatisfiable".into())
}

/// Certain counts by evaluating the saturated rewriting over the ABox.
pub fn certcount_rewrite(kb: &KB, q: &ConjunctiveQuery) -> Result<Vec<CountAnswer>> {
    rewrite_with_budget(kb, q, crate::rewrite::DEFAULT_STEP_BUDGET)
}

fn rewrite_with_budget(kb: &KB, q: &ConjunctiveQuery, budget: usize) -> Result<Vec<CountAnswer>> {
    let st = RewriteState::initialize(q, &kb.tbox)?.with_budget(budget);
    if !is_satisfiable(kb) {
        return Err(unsatisfiable());
    }
    let qs: Vec<_> = st.saturate()?.into_iter().map(|r| r.query).collect();
    evaluate_set(&qs, &Interpretation::from_abox_or_empty(&kb.abox))
}

/// Generations a connected rooted query can reach from the named part.
pub fn default_chase_depth(q: &ConjunctiveQuery) -> u32 {
    q.body.len() as u32 + 1
}

/// Certain counts as plain counts over the restricted chase.
pub fn certcount_chase(kb: &KB, q: &ConjunctiveQuery, depth: Option<u32>) -> Result<Vec<CountAnswer>> {
    check_input(q, &kb.tbox)?;
    let need = default_chase_depth(q);
    let depth = depth.unwrap_or(need);
    let ch = restricted_chase(kb, depth);
    if !ch.saturated && depth < need {
        return Err(Error::Limit(format!(
            "chase cut at depth {depth} is reachable by the query; use a depth of at least {need}"
        )));
    }
    if violates_disjointness(&ch.interp, &kb.tbox).is_some() || !is_satisfiable(kb) {
        return Err(unsatisfiable());
    }
    Ok(answers(q, &ch.interp))
}

/// Default chase depth for merge-min: enough for the query and for a chain
/// through every basic concept.
fn merge_min_depth(kb: &KB, q: &ConjunctiveQuery) -> u32 {
    default_chase_depth(q).max(kb.tbox.basic_concepts().len() as u32 + 1)
}

/// Minimum, over maps merging the anonymous elements used by matches onto
/// the chase domain whose image stays a model, of the image's counts.
pub fn certcount_merge_min(kb: &KB, q: &ConjunctiveQuery, depth: Option<u32>) -> Result<Vec<CountAnswer>> {
    merge_min(kb, q, depth, DEFAULT_STEP_BUDGET)
}

fn merge_min(kb: &KB, q: &ConjunctiveQuery, depth: Option<u32>, budget: usize) -> Result<Vec<CountAnswer>> {
    Engine::MergeMin.check(kb, q)?;
    let depth = depth.unwrap_or_else(|| merge_min_depth(kb, q));
    let ch = annotated_chase(kb, depth);
    if !ch.saturated {
        return Err(Error::Precondition(format!("annotated chase does not saturate within depth {depth}")));
    }
    let chase = ch.expand();
    if !is_model(&chase, kb) {
        return Err(unsatisfiable());
    }
    let movable: Vec<Element> = {
        let used: BTreeSet<Element> =
            matches(q, &chase).into_iter().flat_map(|m| m.into_values()).filter(|e| !e.is_named()).collect();
        used.into_iter().collect()
    };
    let targets: Vec<Element> = chase.domain().iter().cloned().collect();
    let space = (targets.len() as f64).powi(movable.len() as i32);
    if space > budget as f64 {
        return Err(Error::Limit(format!("{space} merge maps exceed the budget of {budget}")));
    }
    let mut best: Option<BTreeMap<Vec<(String, String)>, u64>> = None;
    let mut f: Homomorphism = chase.domain().iter().map(|e| (e.clone(), e.clone())).collect();
    let mut choice = vec![0usize; movable.len()];
    loop {
        for (e, &k) in movable.iter().zip(&choice) {
            f.insert(e.clone(), targets[k].clone());
        }
        let image = apply_function(&f, &chase)?;
        if is_model(&image, kb) {
            let got: BTreeMap<_, _> = answers(q, &image).into_iter().map(|a| (a.binding, a.count)).collect();
            best = Some(match best {
                None => got,
                Some(prev) => prev
                    .into_iter()
                    .filter_map(|(b, c)| got.get(&b).map(|&g| (b, c.min(g))))
                    .collect(),
            });
        }
        // next map in lexicographic order
        let mut k = 0;
        while k < choice.len() {
            choice[k] += 1;
            if choice[k] < targets.len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
        if k == choice.len() {
            break;
        }
    }
    let best = best.unwrap_or_default();
    Ok(best.into_iter().map(|(binding, count)| CountAnswer { binding, count }).collect())
}

/// Per named binding, the least count over every model whose domain is the
/// individuals plus `extras` fresh elements. This bounds the certain count
/// from above and equals it whenever such a model is optimal.
pub fn certcount_bruteforce(kb: &KB, q: &ConjunctiveQuery, extras: u32) -> Result<Vec<CountAnswer>> {
    bruteforce(kb, q, extras, DEFAULT_STEP_BUDGET)
}

struct Repair<'a> {
    kb: &'a KB,
    q: &'a ConjunctiveQuery,
    extras: Vec<Element>,
    named: Vec<Element>,
    seen: HashSet<Interpretation>,
    best: Option<BTreeMap<Vec<(String, String)>, u64>>,
    steps: usize,
    budget: usize,
}

struct Need {
    e: Element,
    role: Role,
    missing: usize,
}

impl Repair<'_> {
    /// Closes `i` under the axioms that force a single repair. `None` when
    /// a disjointness axiom is violated.
    fn propagate(&self, mut i: Interpretation) -> Option<Interpretation> {
        let sup = crate::interp::role_closure(&self.kb.tbox);
        loop {
            let mut changed = false;
            for ax in self.kb.tbox.axioms() {
                match ax {
                    Axiom::ConceptInclusion { lhs, rhs, negated: true } => {
                        if i.domain().iter().any(|e| i.satisfies(lhs, e) && i.satisfies(rhs, e)) {
                            return None;
                        }
                    }
                    Axiom::ConceptInclusion { lhs, rhs: BasicConcept::Atomic(a), negated: false } => {
                        let add: Vec<Element> =
                            i.domain().iter().filter(|e| i.satisfies(lhs, e) && !i.has_concept(a, e)).cloned().collect();
                        for e in add {
                            changed |= i.add_concept(a, e);
                        }
                    }
                    Axiom::RoleInclusion { lhs, .. } => {
                        let pairs: Vec<(Element, Element)> =
                            i.roles().get(&lhs.name).into_iter().flatten().cloned().collect();
                        for (s, o) in pairs {
                            let (s, o) = if lhs.inverted { (o, s) } else { (s, o) };
                            for r in sup(lhs) {
                                changed |= add_edge(&mut i, &r, s.clone(), o.clone());
                            }
                        }
                    }
                    Axiom::ConceptInclusion { .. } => {}
                }
            }
            if !changed {
                return Some(i);
            }
        }
    }

    fn first_need(&self, i: &Interpretation) -> Option<Need> {
        for ax in self.kb.tbox.axioms() {
            if let Axiom::ConceptInclusion { lhs, rhs: BasicConcept::MinCard(n, r), negated: false } = ax {
                for e in i.domain() {
                    if i.satisfies(lhs, e) && i.successors(r, e).len() < *n as usize {
                        let missing = *n as usize - i.successors(r, e).len();
                        return Some(Need { e: e.clone(), role: r.clone(), missing });
                    }
                }
            }
        }
        None
    }

    /// Counts over `i` can only grow in every extension of it.
    fn hopeless(&self, i: &Interpretation) -> bool {
        let Some(best) = &self.best else { return false };
        let now: BTreeMap<_, _> = answers(self.q, i).into_iter().map(|a| (a.binding, a.count)).collect();
        best.iter().all(|(b, c)| now.get(b).is_some_and(|n| n >= c))
    }

    fn search(&mut self, i: Interpretation) -> Result<()> {
        self.steps += 1;
        if self.steps > self.budget {
            return Err(Error::Limit(format!("brute-force search exceeded {} steps", self.budget)));
        }
        let Some(i) = self.propagate(i) else { return Ok(()) };
        if !self.seen.insert(i.clone()) || self.hopeless(&i) {
            return Ok(());
        }
        match self.first_need(&i) {
            Some(Need { e, role, missing }) => {
                let current = i.successors(&role, &e);
                let used: BTreeSet<&Element> = i.domain().iter().collect();
                let mut old: Vec<Element> = self.named.iter().chain(&self.extras).filter(|x| used.contains(x)).cloned().collect();
                old.retain(|x| !current.contains(x));
                let fresh: Vec<Element> = self.extras.iter().filter(|x| !used.contains(x)).cloned().collect();
                for nfresh in 0..=missing.min(fresh.len()) {
                    if missing - nfresh > old.len() {
                        continue;
                    }
                    for pick in combinations(old.len(), missing - nfresh) {
                        let mut j = i.clone();
                        for t in pick.iter().map(|&k| &old[k]).chain(&fresh[..nfresh]) {
                            add_edge(&mut j, &role, e.clone(), t.clone());
                        }
                        self.search(j)?;
                    }
                }
                Ok(())
            }
            None => {
                let got: BTreeMap<_, _> = answers(self.q, &i).into_iter().map(|a| (a.binding, a.count)).collect();
                self.best = Some(match self.best.take() {
                    None => got,
                    Some(prev) => {
                        prev.into_iter().filter_map(|(b, c)| got.get(&b).map(|&g| (b, c.min(g)))).collect()
                    }
                });
                Ok(())
            }
        }
    }
}

fn add_edge(i: &mut Interpretation, r: &Role, s: Element, o: Element) -> bool {
    if r.inverted {
        i.add_role(&r.name, o, s)
    } else {
        i.add_role(&r.name, s, o)
    }
}

/// All `k`-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for x in start..n {
            cur.push(x);
            go(x + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

fn bruteforce(kb: &KB, q: &ConjunctiveQuery, extras: u32, budget: usize) -> Result<Vec<CountAnswer>> {
    let mut start = Interpretation::from_abox_or_empty(&kb.abox);
    let named: Vec<Element> = kb.abox.individuals().into_iter().map(Element::Named).collect();
    for e in &named {
        start.add_element(e.clone());
    }
    let mut r = Repair {
        kb,
        q,
        extras: (0..extras).map(|ord| Element::Anon { gen: 1, ord }).collect(),
        named,
        seen: HashSet::new(),
        best: None,
        steps: 0,
        budget,
    };
    r.search(start)?;
    match r.best {
        None => Err(Error::Limit(format!("no model within {extras} extra elements"))),
        Some(best) => Ok(best.into_iter().map(|(binding, count)| CountAnswer { binding, count }).collect()),
    }
}

/// Outcome of [`decide_count`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decision {
    Yes,
    No,
    /// No engine could settle the instance within its bounds.
    Unknown(String),
}

/// Certain count of a boolean query, with the engine that produced it.
pub fn certcard(kb: &KB, q: &ConjunctiveQuery, bounds: &Bounds) -> Result<(u64, Engine)> {
    if !q.is_boolean() {
        return Err(Error::Precondition("the query must be boolean; bind its answer variables first".into()));
    }
    let mut last = None;
    for engine in Engine::ALL {
        if engine.check(kb, q).is_err() {
            continue;
        }
        let req = CertainCountRequest { kb: kb.clone(), query: q.clone(), engine, bounds: *bounds };
        match req.run() {
            Ok(res) => return Ok((res.answers.first().map_or(0, |a| a.count), engine)),
            Err(e @ Error::Precondition(_)) if !is_satisfiable(kb) => return Err(e),
            Err(e) => last = Some(e),
        }
    }
    Err(last.unwrap_or_else(|| Error::Limit("no engine applies".into())))
}

/// Whether `k` is exactly the certain count of the boolean query `q`.
pub fn decide_count(kb: &KB, q: &ConjunctiveQuery, k: u64) -> Result<Decision> {
    decide_count_with(kb, q, k, &Bounds::default())
}

pub fn decide_count_with(kb: &KB, q: &ConjunctiveQuery, k: u64, bounds: &Bounds) -> Result<Decision> {
    if !q.is_boolean() {
        return Err(Error::Precondition("the query must be boolean; bind its answer variables first".into()));
    }
    if k == 0 {
        return Ok(Decision::No);
    }
    match certcard(kb, q, bounds) {
        Ok((n, _)) => Ok(if n == k { Decision::Yes } else { Decision::No }),
        Err(Error::Limit(msg)) => Ok(Decision::Unknown(msg)),
        Err(e) => Err(e),
    }
}
