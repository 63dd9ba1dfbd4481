//! Finite interpretations, homomorphisms, the restricted chase (plain and
//! cardinality-annotated) and bounded model enumeration.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::error::{Error, Result};
use crate::kb::{Axiom, BasicConcept, Fact, Role, ABox, KB, TBox};

/// A named individual or an anonymous element created by the chase.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Element {
    Named(String),
    Anon { gen: u32, ord: u32 },
}

impl Element {
    pub fn named(name: impl Into<String>) -> Self {
        Element::Named(name.into())
    }

    pub fn is_named(&self) -> bool {
        matches!(self, Element::Named(_))
    }

    pub fn generation(&self) -> u32 {
        match self {
            Element::Named(_) => 0,
            Element::Anon { gen, .. } => *gen,
        }
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::Named(n) => write!(f, "{n}"),
            Element::Anon { gen, ord } => write!(f, "_:g{gen}_{ord}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Interpretation {
    domain: BTreeSet<Element>,
    concepts: BTreeMap<String, BTreeSet<Element>>,
    roles: BTreeMap<String, BTreeSet<(Element, Element)>>,
}

impl Interpretation {
    /// The interpretation whose facts are exactly the ABox. Fails on an empty ABox.
    pub fn from_abox(abox: &ABox) -> Result<Self> {
        if abox.is_empty() {
            return Err(Error::Invalid("an empty ABox has no domain".into()));
        }
        Ok(Self::from_abox_or_empty(abox))
    }

    pub(crate) fn from_abox_or_empty(abox: &ABox) -> Self {
        let mut i = Interpretation::default();
        for f in abox.facts() {
            i.add_fact(f);
        }
        i
    }

    pub fn add_element(&mut self, e: Element) {
        self.domain.insert(e);
    }

    pub fn add_fact(&mut self, f: &Fact) {
        match f {
            Fact::Concept(a, x) => {
                self.add_concept(a, Element::named(x.clone()));
            }
            Fact::Role(p, x, y) => {
                self.add_role(p, Element::named(x.clone()), Element::named(y.clone()));
            }
        }
    }

    pub fn add_concept(&mut self, name: &str, e: Element) -> bool {
        self.domain.insert(e.clone());
        self.concepts.entry(name.to_string()).or_default().insert(e)
    }

    pub fn add_role(&mut self, name: &str, s: Element, o: Element) -> bool {
        self.domain.insert(s.clone());
        self.domain.insert(o.clone());
        self.roles.entry(name.to_string()).or_default().insert((s, o))
    }

    pub fn domain(&self) -> &BTreeSet<Element> {
        &self.domain
    }

    pub fn concepts(&self) -> &BTreeMap<String, BTreeSet<Element>> {
        &self.concepts
    }

    pub fn roles(&self) -> &BTreeMap<String, BTreeSet<(Element, Element)>> {
        &self.roles
    }

    pub fn has_concept(&self, name: &str, e: &Element) -> bool {
        self.concepts.get(name).is_some_and(|s| s.contains(e))
    }

    pub fn has_role(&self, name: &str, s: &Element, o: &Element) -> bool {
        self.roles.get(name).is_some_and(|r| r.contains(&(s.clone(), o.clone())))
    }

    pub fn fact_count(&self) -> usize {
        self.concepts.values().map(BTreeSet::len).sum::<usize>() + self.roles.values().map(BTreeSet::len).sum::<usize>()
    }

    /// Distinct `role`-successors of `e`.
    pub fn successors(&self, role: &Role, e: &Element) -> BTreeSet<Element> {
        let Some(ext) = self.roles.get(&role.name) else {
            return BTreeSet::new();
        };
        ext.iter()
            .filter_map(|(s, o)| match role.inverted {
                false if s == e => Some(o.clone()),
                true if o == e => Some(s.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn satisfies(&self, c: &BasicConcept, e: &Element) -> bool {
        match c {
            BasicConcept::Atomic(a) => self.has_concept(a, e),
            BasicConcept::MinCard(n, r) => self.successors(r, e).len() >= *n as usize,
        }
    }

    /// Every fact of `self` is a fact of `other` and the domain is included.
    pub fn is_subset_of(&self, other: &Interpretation) -> bool {
        self.domain.is_subset(&other.domain)
            && self.concepts.iter().all(|(a, ext)| ext.iter().all(|e| other.has_concept(a, e)))
            && self.roles.iter().all(|(p, ext)| ext.iter().all(|(s, o)| other.has_role(p, s, o)))
    }

    pub fn named_elements(&self) -> impl Iterator<Item = &Element> {
        self.domain.iter().filter(|e| e.is_named())
    }

    pub fn anon_elements(&self) -> impl Iterator<Item = &Element> {
        self.domain.iter().filter(|e| !e.is_named())
    }

    /// Facts over named elements only.
    pub fn named_part(&self) -> Interpretation {
        let mut out = Interpretation::default();
        for e in self.named_elements() {
            out.add_element(e.clone());
        }
        for (a, ext) in &self.concepts {
            for e in ext.iter().filter(|e| e.is_named()) {
                out.add_concept(a, e.clone());
            }
        }
        for (p, ext) in &self.roles {
            for (s, o) in ext.iter().filter(|(s, o)| s.is_named() && o.is_named()) {
                out.add_role(p, s.clone(), o.clone());
            }
        }
        out
    }

    fn write_with(&self, f: &mut fmt::Formatter<'_>, show: &dyn Fn(&Element) -> String) -> fmt::Result {
        let mut used: BTreeSet<&Element> = BTreeSet::new();
        for (a, ext) in &self.concepts {
            for e in ext {
                used.insert(e);
                writeln!(f, "{a}({})", show(e))?;
            }
        }
        for (p, ext) in &self.roles {
            for (s, o) in ext {
                used.insert(s);
                used.insert(o);
                writeln!(f, "{p}({},{})", show(s), show(o))?;
            }
        }
        for e in self.domain.iter().filter(|e| !used.contains(e)) {
            writeln!(f, "# element {}", show(e))?;
        }
        Ok(())
    }
}

impl fmt::Display for Interpretation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_with(f, &|e| e.to_string())
    }
}

/// An interpretation whose anonymous elements each stand for `card` copies.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AnnotatedInterpretation {
    pub base: Interpretation,
    card: BTreeMap<Element, u64>,
}

impl AnnotatedInterpretation {
    pub fn new(base: Interpretation, card: BTreeMap<Element, u64>) -> Self {
        AnnotatedInterpretation { base, card }
    }

    pub fn card(&self, e: &Element) -> u64 {
        if e.is_named() {
            1
        } else {
            self.card.get(e).copied().unwrap_or(1)
        }
    }

    /// Replaces each anonymous element by `card` copies. The anonymous part
    /// must be a forest hanging off named elements: every anonymous element
    /// has exactly one neighbour of lower generation and no other links
    /// except to its own children.
    pub fn expand(&self) -> Result<Interpretation> {
        let mut nbrs: BTreeMap<&Element, BTreeSet<&Element>> = BTreeMap::new();
        for ext in self.base.roles.values() {
            for (s, o) in ext {
                if s != o {
                    nbrs.entry(s).or_default().insert(o);
                    nbrs.entry(o).or_default().insert(s);
                }
            }
        }
        let mut parent = BTreeMap::new();
        for e in self.base.anon_elements() {
            let lower: Vec<&&Element> = nbrs
                .get(e)
                .into_iter()
                .flatten()
                .filter(|n| n.is_named() || n.generation() < e.generation())
                .collect();
            let higher_ok = nbrs
                .get(e)
                .into_iter()
                .flatten()
                .all(|n| n.is_named() || n.generation() != e.generation());
            if lower.len() != 1 || !higher_ok {
                return Err(Error::Precondition(format!("annotated element {e} is not in a tree-shaped part")));
            }
            parent.insert(e.clone(), (*lower[0]).clone());
        }
        for (c, p) in &parent {
            if !p.is_named() && p.generation() + 1 != c.generation() {
                return Err(Error::Precondition(format!("annotated element {c} skips a generation")));
            }
        }
        Ok(expand_tree(&self.base, &self.card, &parent))
    }

    /// `∏ card(e)` over the distinct elements of a tuple.
    pub fn tuple_card(&self, t: &[Element]) -> u64 {
        let distinct: BTreeSet<&Element> = t.iter().collect();
        distinct.into_iter().map(|e| self.card(e)).product()
    }
}

impl fmt::Display for AnnotatedInterpretation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.base.write_with(f, &|e| {
            if e.is_named() {
                e.to_string()
            } else {
                format!("{e}@card={}", self.card(e))
            }
        })
    }
}

/// Super-roles of each role under the role inclusions of a TBox, reflexive.
pub(crate) fn role_closure(tbox: &TBox) -> impl Fn(&Role) -> Vec<Role> + '_ {
    let incs: Vec<(Role, Role)> = tbox
        .axioms()
        .iter()
        .filter_map(|ax| match ax {
            Axiom::RoleInclusion { lhs, rhs } => Some((lhs.clone(), rhs.clone())),
            _ => None,
        })
        .collect();
    move |r: &Role| {
        let mut seen: Vec<Role> = vec![r.clone()];
        let mut i = 0;
        while i < seen.len() {
            let cur = seen[i].clone();
            for (l, rh) in &incs {
                for (a, b) in [(l.clone(), rh.clone()), (l.inv(), rh.inv())] {
                    if a == cur && !seen.contains(&b) {
                        seen.push(b);
                    }
                }
            }
            i += 1;
        }
        seen
    }
}

/// Result of a restricted chase run.
#[derive(Clone, Debug)]
pub struct Chase {
    pub interp: Interpretation,
    /// Cardinalities of anonymous elements (all 1 in plain mode).
    pub card: BTreeMap<Element, u64>,
    /// Each anonymous element's creator and the role leading from it.
    pub parent: BTreeMap<Element, (Element, Role)>,
    pub saturated: bool,
    pub annotated: bool,
}

impl Chase {
    pub fn annotated_interpretation(&self) -> AnnotatedInterpretation {
        AnnotatedInterpretation::new(self.interp.clone(), self.card.clone())
    }

    /// Replaces every anonymous element of card `k` by `k` copies, each with
    /// its own copy of the subtree below it.
    pub fn expand(&self) -> Interpretation {
        if !self.annotated {
            return self.interp.clone();
        }
        let parent = self.parent.iter().map(|(c, (p, _))| (c.clone(), p.clone())).collect();
        expand_tree(&self.interp, &self.card, &parent)
    }
}

fn expand_tree(
    interp: &Interpretation,
    card: &BTreeMap<Element, u64>,
    parent: &BTreeMap<Element, Element>,
) -> Interpretation {
    let mut children: BTreeMap<&Element, Vec<&Element>> = BTreeMap::new();
    for (c, p) in parent {
        children.entry(p).or_default().push(c);
    }
    let mut out = interp.named_part();
    let mut ords: BTreeMap<u32, u32> = BTreeMap::new();
    let mut stack: Vec<(&Element, Element)> = interp
        .named_elements()
        .flat_map(|n| children.get(n).into_iter().flatten().map(move |c| (*c, n.clone())))
        .collect();
    stack.reverse();
    while let Some((orig, parent_copy)) = stack.pop() {
        let orig_parent = &parent[orig];
        for _ in 0..card.get(orig).copied().unwrap_or(1) {
            let gen = orig.generation();
            let ord = ords.entry(gen).or_insert(0);
            let copy = Element::Anon { gen, ord: *ord };
            *ord += 1;
            out.add_element(copy.clone());
            for (a, ext) in &interp.concepts {
                if ext.contains(orig) {
                    out.add_concept(a, copy.clone());
                }
            }
            for (p, ext) in &interp.roles {
                if ext.contains(&(orig_parent.clone(), orig.clone())) {
                    out.add_role(p, parent_copy.clone(), copy.clone());
                }
                if ext.contains(&(orig.clone(), orig_parent.clone())) {
                    out.add_role(p, copy.clone(), parent_copy.clone());
                }
                if ext.contains(&(orig.clone(), orig.clone())) {
                    out.add_role(p, copy.clone(), copy.clone());
                }
            }
            if let Some(kids) = children.get(orig) {
                for k in kids.iter().rev() {
                    stack.push((k, copy.clone()));
                }
            }
        }
    }
    out
}

type SuperRoles<'a> = Box<dyn Fn(&Role) -> Vec<Role> + 'a>;

struct Builder<'a> {
    tbox: &'a TBox,
    supers: SuperRoles<'a>,
    elems: Vec<Element>,
    ids: HashMap<Element, usize>,
    card: Vec<u64>,
    concepts: Vec<BTreeSet<String>>,
    /// (role name, object) per subject, and (role name, subject) per object.
    out: Vec<Vec<(String, usize)>>,
    inc: Vec<Vec<(String, usize)>>,
    parent: Vec<Option<(usize, Role)>>,
    next_ord: BTreeMap<u32, u32>,
}

impl<'a> Builder<'a> {
    fn new(tbox: &'a TBox) -> Self {
        Builder {
            tbox,
            supers: Box::new(role_closure(tbox)),
            elems: Vec::new(),
            ids: HashMap::new(),
            card: Vec::new(),
            concepts: Vec::new(),
            out: Vec::new(),
            inc: Vec::new(),
            parent: Vec::new(),
            next_ord: BTreeMap::new(),
        }
    }

    fn intern(&mut self, e: Element, card: u64) -> usize {
        if let Some(&i) = self.ids.get(&e) {
            return i;
        }
        let i = self.elems.len();
        self.ids.insert(e.clone(), i);
        self.elems.push(e);
        self.card.push(card);
        self.concepts.push(BTreeSet::new());
        self.out.push(Vec::new());
        self.inc.push(Vec::new());
        self.parent.push(None);
        i
    }

    fn add_edge(&mut self, role: &Role, s: usize, o: usize) {
        for r in (self.supers)(role) {
            let (s, o) = if r.inverted { (o, s) } else { (s, o) };
            if !self.out[s].iter().any(|(p, x)| *p == r.name && *x == o) {
                self.out[s].push((r.name.clone(), o));
                self.inc[o].push((r.name.clone(), s));
            }
        }
    }

    fn successors(&self, role: &Role, e: usize) -> impl Iterator<Item = usize> + '_ {
        let list = if role.inverted { &self.inc[e] } else { &self.out[e] };
        let name = role.name.clone();
        let mut seen = BTreeSet::new();
        list.iter().filter(move |(p, _)| *p == name).map(|(_, x)| *x).filter(move |x| seen.insert(*x))
    }

    fn succ_count(&self, role: &Role, e: usize, weighted: bool) -> u64 {
        self.successors(role, e).map(|x| if weighted { self.card[x] } else { 1 }).sum()
    }

    fn member(&self, c: &BasicConcept, e: usize, weighted: bool) -> bool {
        match c {
            BasicConcept::Atomic(a) => self.concepts[e].contains(a),
            BasicConcept::MinCard(n, r) => self.succ_count(r, e, weighted) >= *n as u64,
        }
    }

    fn fresh(&mut self, gen: u32, card: u64) -> usize {
        let ord = self.next_ord.entry(gen).or_insert(0);
        let e = Element::Anon { gen, ord: *ord };
        *ord += 1;
        self.intern(e, card)
    }

    /// Runs the chase. In `block_by_role` mode an anonymous element is not
    /// expanded when another one with the same incoming role already was.
    fn run(&mut self, depth: u32, annotated: bool, block_by_role: bool) -> bool {
        let positives: Vec<(BasicConcept, BasicConcept)> = self
            .tbox
            .axioms()
            .iter()
            .filter_map(|ax| match ax {
                Axiom::ConceptInclusion { lhs, rhs, negated: false } => Some((lhs.clone(), rhs.clone())),
                _ => None,
            })
            .collect();
        let mut saturated = true;
        let mut expanded_roles: BTreeSet<Role> = BTreeSet::new();
        let mut i = 0;
        while i < self.elems.len() {
            let gen = self.elems[i].generation();
            let mut blocked = gen >= depth;
            if block_by_role {
                if let Some((_, r)) = &self.parent[i] {
                    if !expanded_roles.insert(r.clone()) {
                        blocked = true;
                    }
                }
            }
            loop {
                let mut fired = false;
                for (lhs, rhs) in &positives {
                    if !self.member(lhs, i, annotated) {
                        continue;
                    }
                    match rhs {
                        BasicConcept::Atomic(a) => {
                            if self.concepts[i].insert(a.clone()) {
                                fired = true;
                            }
                        }
                        BasicConcept::MinCard(n, r) => {
                            let m = self.succ_count(r, i, annotated);
                            let n = *n as u64;
                            if m >= n {
                                continue;
                            }
                            if blocked {
                                if !block_by_role {
                                    saturated = false;
                                }
                                continue;
                            }
                            let batches: Vec<u64> = if annotated { vec![n - m] } else { vec![1; (n - m) as usize] };
                            for c in batches {
                                let child = self.fresh(gen + 1, c);
                                self.parent[child] = Some((i, r.clone()));
                                self.add_edge(r, i, child);
                            }
                            fired = true;
                        }
                    }
                }
                if !fired {
                    break;
                }
            }
            i += 1;
        }
        saturated
    }

    fn finish(self, saturated: bool, annotated: bool) -> Chase {
        let mut interp = Interpretation::default();
        let mut card = BTreeMap::new();
        let mut parent = BTreeMap::new();
        for (i, e) in self.elems.iter().enumerate() {
            interp.add_element(e.clone());
            for a in &self.concepts[i] {
                interp.add_concept(a, e.clone());
            }
            for (p, o) in &self.out[i] {
                interp.add_role(p, e.clone(), self.elems[*o].clone());
            }
            if !e.is_named() {
                card.insert(e.clone(), self.card[i]);
            }
            if let Some((p, r)) = &self.parent[i] {
                parent.insert(e.clone(), (self.elems[*p].clone(), r.clone()));
            }
        }
        Chase { interp, card, parent, saturated, annotated }
    }
}

fn chase_impl(kb: &KB, depth: u32, annotated: bool, block_by_role: bool) -> Chase {
    let mut b = Builder::new(&kb.tbox);
    for a in kb.abox.individuals() {
        b.intern(Element::Named(a), 1);
    }
    for f in kb.abox.facts() {
        match f {
            Fact::Concept(a, x) => {
                let i = b.ids[&Element::Named(x.clone())];
                b.concepts[i].insert(a.clone());
            }
            Fact::Role(p, x, y) => {
                let (s, o) = (b.ids[&Element::Named(x.clone())], b.ids[&Element::Named(y.clone())]);
                b.add_edge(&Role::new(p.clone()), s, o);
            }
        }
    }
    let saturated = b.run(depth, annotated, block_by_role);
    b.finish(saturated, annotated)
}

/// Restricted chase up to `depth` generations of anonymous elements.
///
/// Elements are processed in creation order, axioms in TBox order. Disjointness
/// axioms are never fired; check them with [`violates_disjointness`].
pub fn restricted_chase(kb: &KB, depth: u32) -> Chase {
    chase_impl(kb, depth, false, false)
}

/// Like [`restricted_chase`], but each unmet `>=n R` obligation creates a
/// single witness carrying the missing count as its cardinality.
pub fn annotated_chase(kb: &KB, depth: u32) -> Chase {
    chase_impl(kb, depth, true, false)
}

pub(crate) fn chase_for_types(kb: &KB, depth: u32) -> Interpretation {
    chase_impl(kb, depth, true, true).interp
}

/// First disjointness axiom violated by `i`, with a witness.
pub fn violates_disjointness(i: &Interpretation, tbox: &TBox) -> Option<(Element, Axiom)> {
    for ax in tbox.axioms() {
        if let Axiom::ConceptInclusion { lhs, rhs, negated: true } = ax {
            for e in i.domain() {
                if i.satisfies(lhs, e) && i.satisfies(rhs, e) {
                    return Some((e.clone(), ax.clone()));
                }
            }
        }
    }
    None
}

/// True iff `i` contains the ABox and satisfies every axiom.
pub fn is_model(i: &Interpretation, kb: &KB) -> bool {
    let abox_in = kb.abox.facts().iter().all(|f| match f {
        Fact::Concept(a, x) => i.has_concept(a, &Element::named(x.clone())),
        Fact::Role(p, x, y) => i.has_role(p, &Element::named(x.clone()), &Element::named(y.clone())),
    });
    abox_in && satisfies_tbox(i, &kb.tbox)
}

pub(crate) fn satisfies_tbox(i: &Interpretation, tbox: &TBox) -> bool {
    for ax in tbox.axioms() {
        match ax {
            Axiom::ConceptInclusion { lhs, rhs, negated } => {
                for e in i.domain() {
                    if i.satisfies(lhs, e) && i.satisfies(rhs, e) == *negated {
                        return false;
                    }
                }
            }
            Axiom::RoleInclusion { lhs, rhs } => {
                let ext = match i.roles().get(&lhs.name) {
                    Some(ext) => ext,
                    None => continue,
                };
                for (s, o) in ext {
                    let (s, o) = if lhs.inverted { (o, s) } else { (s, o) };
                    if !i.has_role(&rhs.name, s, o) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Constant-preserving map between domains.
pub type Homomorphism = BTreeMap<Element, Element>;

fn check_function(f: &Homomorphism, i: &Interpretation) -> Result<()> {
    for e in i.domain() {
        match f.get(e) {
            None => return Err(Error::Invalid(format!("function undefined on {e}"))),
            Some(img) if e.is_named() && img != e => {
                return Err(Error::Invalid(format!("function moves the constant {e}")));
            }
            _ => {}
        }
    }
    Ok(())
}

/// The image `f(I)`.
pub fn apply_function(f: &Homomorphism, i: &Interpretation) -> Result<Interpretation> {
    check_function(f, i)?;
    let mut out = Interpretation::default();
    for e in i.domain() {
        out.add_element(f[e].clone());
    }
    for (a, ext) in i.concepts() {
        for e in ext {
            out.add_concept(a, f[e].clone());
        }
    }
    for (p, ext) in i.roles() {
        for (s, o) in ext {
            out.add_role(p, f[s].clone(), f[o].clone());
        }
    }
    Ok(out)
}

/// The image of an annotated interpretation; cardinalities merge by maximum.
pub fn apply_function_annotated(f: &Homomorphism, i: &AnnotatedInterpretation) -> Result<AnnotatedInterpretation> {
    let base = apply_function(f, &i.base)?;
    let mut card: BTreeMap<Element, u64> = BTreeMap::new();
    for e in i.base.domain() {
        let img = &f[e];
        if img.is_named() {
            continue;
        }
        let slot = card.entry(img.clone()).or_insert(1);
        *slot = (*slot).max(i.card(e));
    }
    Ok(AnnotatedInterpretation::new(base, card))
}

pub fn is_homomorphism(h: &Homomorphism, from: &Interpretation, to: &Interpretation) -> bool {
    match apply_function(h, from) {
        Ok(img) => img.is_subset_of(to),
        Err(_) => false,
    }
}

/// Some homomorphism from `from` to `to`, found by backtracking.
pub fn find_homomorphism(from: &Interpretation, to: &Interpretation) -> Option<Homomorphism> {
    let mut h = Homomorphism::new();
    for e in from.named_elements() {
        if !to.domain().contains(e) {
            return None;
        }
        h.insert(e.clone(), e.clone());
    }
    let anon: Vec<Element> = from.anon_elements().cloned().collect();
    let targets: Vec<Element> = to.domain().iter().cloned().collect();
    let consistent = |h: &Homomorphism| -> bool {
        for (a, ext) in from.concepts() {
            for e in ext {
                if let Some(img) = h.get(e) {
                    if !to.has_concept(a, img) {
                        return false;
                    }
                }
            }
        }
        for (p, ext) in from.roles() {
            for (s, o) in ext {
                if let (Some(s2), Some(o2)) = (h.get(s), h.get(o)) {
                    if !to.has_role(p, s2, o2) {
                        return false;
                    }
                }
            }
        }
        true
    };
    fn go(
        k: usize,
        anon: &[Element],
        targets: &[Element],
        h: &mut Homomorphism,
        ok: &dyn Fn(&Homomorphism) -> bool,
    ) -> bool {
        if k == anon.len() {
            return true;
        }
        for t in targets {
            h.insert(anon[k].clone(), t.clone());
            if ok(h) && go(k + 1, anon, targets, h, ok) {
                return true;
            }
        }
        h.remove(&anon[k]);
        false
    }
    if !consistent(&h) {
        return None;
    }
    go(0, &anon, &targets, &mut h, &consistent).then_some(h)
}

/// Vocabulary and domain over which bounded models are built.
pub(crate) struct Universe {
    pub elements: Vec<Element>,
    pub concepts: Vec<String>,
    pub roles: Vec<String>,
}

impl Universe {
    pub fn new(kb: &KB, extras: u32) -> Self {
        let mut elements: Vec<Element> = kb.abox.individuals().into_iter().map(Element::Named).collect();
        for k in 0..extras {
            elements.push(Element::Anon { gen: 1, ord: k });
        }
        let mut concepts: BTreeSet<String> = kb.tbox.concept_names();
        concepts.extend(kb.abox.concept_names());
        let mut roles: BTreeSet<String> = kb.tbox.role_names();
        roles.extend(kb.abox.role_names());
        Universe { elements, concepts: concepts.into_iter().collect(), roles: roles.into_iter().collect() }
    }

    pub fn candidate_facts(&self) -> Vec<CandidateFact> {
        let mut out = Vec::new();
        for a in &self.concepts {
            for e in &self.elements {
                out.push(CandidateFact::Concept(a.clone(), e.clone()));
            }
        }
        for p in &self.roles {
            for s in &self.elements {
                for o in &self.elements {
                    out.push(CandidateFact::Role(p.clone(), s.clone(), o.clone()));
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum CandidateFact {
    Concept(String, Element),
    Role(String, Element, Element),
}

impl CandidateFact {
    fn add_to(&self, i: &mut Interpretation) {
        match self {
            CandidateFact::Concept(a, e) => {
                i.add_concept(a, e.clone());
            }
            CandidateFact::Role(p, s, o) => {
                i.add_role(p, s.clone(), o.clone());
            }
        }
    }

    fn elements(&self) -> Vec<&Element> {
        match self {
            CandidateFact::Concept(_, e) => vec![e],
            CandidateFact::Role(_, s, o) => vec![s, o],
        }
    }
}

/// Largest number of free candidate facts [`enumerate_models`] accepts.
pub const MAX_ENUMERATED_FACTS: usize = 24;

/// Lazily enumerated bounded models; see [`enumerate_models`].
pub struct ModelIter {
    base: Interpretation,
    free: Vec<CandidateFact>,
    kb: KB,
    extras: u32,
    mask: u64,
    end: u64,
}

impl Iterator for ModelIter {
    type Item = Interpretation;

    fn next(&mut self) -> Option<Interpretation> {
        while self.mask < self.end {
            let mask = self.mask;
            self.mask += 1;
            let chosen: Vec<&CandidateFact> =
                self.free.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, f)| f).collect();
            if !extras_in_canonical_order(&chosen, self.extras) {
                continue;
            }
            let mut i = self.base.clone();
            for f in chosen {
                f.add_to(&mut i);
            }
            if is_model(&i, &self.kb) {
                return Some(i);
            }
        }
        None
    }
}

/// Extra elements used must be a prefix `0..k`, first used in that order.
fn extras_in_canonical_order(chosen: &[&CandidateFact], extras: u32) -> bool {
    if extras == 0 {
        return true;
    }
    let mut order: Vec<u32> = Vec::new();
    let mut facts: Vec<&CandidateFact> = chosen.to_vec();
    // first use is measured on facts sorted with extras erased, so that
    // renaming extras does not change the position of the fact
    facts.sort_by_key(|f| erased_key(f));
    for f in facts {
        for e in f.elements() {
            if let Element::Anon { ord, .. } = e {
                if !order.contains(ord) {
                    order.push(*ord);
                }
            }
        }
    }
    order.iter().enumerate().all(|(k, o)| k as u32 == *o)
}

fn erased_key(f: &CandidateFact) -> (u8, String, Option<String>, Option<String>) {
    let name = |e: &Element| match e {
        Element::Named(n) => Some(n.clone()),
        Element::Anon { .. } => None,
    };
    match f {
        CandidateFact::Concept(a, e) => (0, a.clone(), name(e), None),
        CandidateFact::Role(p, s, o) => (1, p.clone(), name(s), name(o)),
    }
}

/// Every model whose domain is the named individuals plus at most `extras`
/// anonymous elements, by literal enumeration of fact subsets. Isomorphic
/// copies differing only in the naming of extras are mostly skipped.
///
/// Fails when the number of candidate facts beyond the ABox exceeds
/// [`MAX_ENUMERATED_FACTS`].
pub fn enumerate_models(kb: &KB, extras: u32) -> Result<ModelIter> {
    let universe = Universe::new(kb, extras);
    let base = Interpretation::from_abox_or_empty(&kb.abox);
    let free: Vec<CandidateFact> = universe
        .candidate_facts()
        .into_iter()
        .filter(|f| match f {
            CandidateFact::Concept(a, e) => !base.has_concept(a, e),
            CandidateFact::Role(p, s, o) => !base.has_role(p, s, o),
        })
        .collect();
    if free.len() > MAX_ENUMERATED_FACTS {
        return Err(Error::Limit(format!(
            "{} candidate facts exceed the enumeration bound of {MAX_ENUMERATED_FACTS}",
            free.len()
        )));
    }
    let end = 1u64 << free.len();
    Ok(ModelIter { base, free, kb: kb.clone(), extras, mask: 0, end })
}
