//! DL-Lite syntax: roles, basic concepts, axioms, TBoxes, ABoxes and dialects.
//!
//! Also hosts the positive-inclusion entailment closure used by the rewriter
//! (`subsumees`), the syntactic `max_card` lookup, the encoding of number
//! restrictions into role hierarchies, and the satisfiability check.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::error::{is_ident, Error, Result};
use crate::interp;

/// `P` or `P-`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Role {
    pub name: String,
    pub inverted: bool,
}

impl Role {
    pub fn new(name: impl Into<String>) -> Self {
        Role { name: name.into(), inverted: false }
    }

    pub fn inverse_of(name: impl Into<String>) -> Self {
        Role { name: name.into(), inverted: true }
    }

    pub fn inv(&self) -> Role {
        Role { name: self.name.clone(), inverted: !self.inverted }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.inverted {
            write!(f, "{}-", self.name)
        } else {
            write!(f, "{}", self.name)
        }
    }
}

/// An atomic concept or a number restriction. `exists R` is `MinCard(1, R)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BasicConcept {
    Atomic(String),
    MinCard(u32, Role),
}

impl BasicConcept {
    pub fn atomic(name: impl Into<String>) -> Self {
        BasicConcept::Atomic(name.into())
    }

    pub fn exists(role: Role) -> Self {
        BasicConcept::MinCard(1, role)
    }

    pub fn min_card(n: u32, role: Role) -> Self {
        assert!(n >= 1, "number restrictions start at 1");
        BasicConcept::MinCard(n, role)
    }

    /// The same concept with any number weakened to 1.
    pub fn weakened(&self) -> BasicConcept {
        match self {
            BasicConcept::MinCard(_, r) => BasicConcept::MinCard(1, r.clone()),
            other => other.clone(),
        }
    }
}

impl fmt::Display for BasicConcept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasicConcept::Atomic(a) => write!(f, "{a}"),
            BasicConcept::MinCard(1, r) => write!(f, "exists {r}"),
            BasicConcept::MinCard(n, r) => write!(f, ">={n} {r}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axiom {
    /// `lhs sub rhs`, or `lhs disj rhs` when `negated`.
    ConceptInclusion { lhs: BasicConcept, rhs: BasicConcept, negated: bool },
    /// Stored with a non-inverted right-hand side.
    RoleInclusion { lhs: Role, rhs: Role },
}

impl Axiom {
    pub fn sub(lhs: BasicConcept, rhs: BasicConcept) -> Self {
        Axiom::ConceptInclusion { lhs, rhs, negated: false }
    }

    pub fn disj(lhs: BasicConcept, rhs: BasicConcept) -> Self {
        Axiom::ConceptInclusion { lhs, rhs, negated: true }
    }

    pub fn role_sub(lhs: Role, rhs: Role) -> Self {
        if rhs.inverted {
            Axiom::RoleInclusion { lhs: lhs.inv(), rhs: rhs.inv() }
        } else {
            Axiom::RoleInclusion { lhs, rhs }
        }
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axiom::ConceptInclusion { lhs, rhs, negated: false } => write!(f, "{lhs} sub {rhs}"),
            Axiom::ConceptInclusion { lhs, rhs, negated: true } => write!(f, "{lhs} disj {rhs}"),
            Axiom::RoleInclusion { lhs, rhs } => write!(f, "{lhs} sub {rhs}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TBox {
    axioms: Vec<Axiom>,
}

impl TBox {
    /// Builds a TBox, dropping duplicates but keeping first-seen order.
    pub fn new(axioms: impl IntoIterator<Item = Axiom>) -> Self {
        let mut tbox = TBox::default();
        for ax in axioms {
            tbox.push(ax);
        }
        tbox
    }

    pub fn push(&mut self, ax: Axiom) {
        let ax = match ax {
            Axiom::RoleInclusion { lhs, rhs } => Axiom::role_sub(lhs, rhs),
            other => other,
        };
        if !self.axioms.contains(&ax) {
            self.axioms.push(ax);
        }
    }

    pub fn axioms(&self) -> &[Axiom] {
        &self.axioms
    }

    pub fn len(&self) -> usize {
        self.axioms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axioms.is_empty()
    }

    pub fn concept_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for ax in &self.axioms {
            if let Axiom::ConceptInclusion { lhs, rhs, .. } = ax {
                for c in [lhs, rhs] {
                    if let BasicConcept::Atomic(a) = c {
                        out.insert(a.clone());
                    }
                }
            }
        }
        out
    }

    pub fn role_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for ax in &self.axioms {
            match ax {
                Axiom::ConceptInclusion { lhs, rhs, .. } => {
                    for c in [lhs, rhs] {
                        if let BasicConcept::MinCard(_, r) = c {
                            out.insert(r.name.clone());
                        }
                    }
                }
                Axiom::RoleInclusion { lhs, rhs } => {
                    out.insert(lhs.name.clone());
                    out.insert(rhs.name.clone());
                }
            }
        }
        out
    }

    /// Atomic concepts plus `exists P` and `exists P-` for every role name.
    pub fn basic_concepts(&self) -> BTreeSet<BasicConcept> {
        let mut out: BTreeSet<BasicConcept> =
            self.concept_names().into_iter().map(BasicConcept::Atomic).collect();
        for p in self.role_names() {
            out.insert(BasicConcept::exists(Role::new(p.clone())));
            out.insert(BasicConcept::exists(Role::inverse_of(p)));
        }
        out
    }

    pub fn parse(text: &str) -> Result<TBox> {
        parse_tbox(text, &BTreeSet::new())
    }

    /// Like [`TBox::parse`], with extra names known to be roles (for instance
    /// binary predicates of an accompanying ABox).
    pub fn parse_with_roles(text: &str, roles: &BTreeSet<String>) -> Result<TBox> {
        parse_tbox(text, roles)
    }
}

impl fmt::Display for TBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // roles only ever used bare would parse back as concepts
        let mut evident: BTreeSet<String> = BTreeSet::new();
        for ax in &self.axioms {
            match ax {
                Axiom::ConceptInclusion { lhs, rhs, .. } => {
                    for c in [lhs, rhs] {
                        if let BasicConcept::MinCard(_, r) = c {
                            evident.insert(r.name.clone());
                        }
                    }
                }
                Axiom::RoleInclusion { lhs, rhs } => {
                    if lhs.inverted || rhs.inverted {
                        evident.insert(lhs.name.clone());
                        evident.insert(rhs.name.clone());
                    }
                }
            }
        }
        loop {
            let mut grew = false;
            for ax in &self.axioms {
                if let Axiom::RoleInclusion { lhs, rhs } = ax {
                    if evident.contains(&lhs.name) != evident.contains(&rhs.name) {
                        evident.insert(lhs.name.clone());
                        evident.insert(rhs.name.clone());
                        grew = true;
                    }
                }
            }
            if !grew {
                break;
            }
        }
        for r in self.role_names() {
            if !evident.contains(&r) {
                writeln!(f, "role {r}")?;
            }
        }
        for ax in &self.axioms {
            writeln!(f, "{ax}")?;
        }
        Ok(())
    }
}

enum RawSide {
    Name(String),
    Inverse(String),
    Concept(BasicConcept),
}

fn parse_role_token(tok: &str, line: usize) -> Result<Role> {
    let (name, inverted) = match tok.strip_suffix('-') {
        Some(n) => (n, true),
        None => (tok, false),
    };
    if !is_ident(name) {
        return Err(Error::parse(line, format!("bad role name `{tok}`")));
    }
    Ok(Role { name: name.to_string(), inverted })
}

fn parse_side(tokens: &[&str], line: usize) -> Result<RawSide> {
    match tokens {
        [single] => {
            if let Some(rest) = single.strip_prefix(">=") {
                return Err(Error::parse(line, format!("missing role after `>={rest}`")));
            }
            match single.strip_suffix('-') {
                Some(n) if is_ident(n) => Ok(RawSide::Inverse(n.to_string())),
                _ if is_ident(single) => Ok(RawSide::Name(single.to_string())),
                _ => Err(Error::parse(line, format!("bad name `{single}`"))),
            }
        }
        ["exists", role] => Ok(RawSide::Concept(BasicConcept::exists(parse_role_token(role, line)?))),
        [num, role] if num.starts_with(">=") => {
            let n: u32 = num[2..]
                .parse()
                .map_err(|_| Error::parse(line, format!("bad number in `{num}`")))?;
            if n == 0 {
                return Err(Error::parse(line, "number restrictions start at 1"));
            }
            Ok(RawSide::Concept(BasicConcept::MinCard(n, parse_role_token(role, line)?)))
        }
        [">=", num, role] => parse_side(&[&format!(">={num}"), role], line),
        _ => Err(Error::parse(line, format!("cannot read `{}`", tokens.join(" ")))),
    }
}

fn parse_tbox(text: &str, hint_roles: &BTreeSet<String>) -> Result<TBox> {
    struct Raw {
        line: usize,
        lhs: RawSide,
        rhs: RawSide,
        negated: bool,
    }
    let mut raws = Vec::new();
    let mut roles: BTreeSet<String> = hint_roles.clone();
    let mut concepts: BTreeSet<String> = BTreeSet::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        if tokens[0] == "role" || tokens[0] == "concept" {
            if tokens.len() < 2 {
                return Err(Error::parse(line, "declaration needs at least one name"));
            }
            for name in &tokens[1..] {
                if !is_ident(name) {
                    return Err(Error::parse(line, format!("bad name `{name}`")));
                }
                if tokens[0] == "role" {
                    roles.insert(name.to_string());
                } else {
                    concepts.insert(name.to_string());
                }
            }
            continue;
        }
        let Some(pos) = tokens.iter().position(|t| *t == "sub" || *t == "disj") else {
            return Err(Error::parse(line, "expected `sub` or `disj`"));
        };
        let negated = tokens[pos] == "disj";
        let lhs = parse_side(&tokens[..pos], line)?;
        let rhs = parse_side(&tokens[pos + 1..], line)?;
        for side in [&lhs, &rhs] {
            match side {
                RawSide::Inverse(n) => {
                    roles.insert(n.clone());
                }
                RawSide::Concept(BasicConcept::MinCard(_, r)) => {
                    roles.insert(r.name.clone());
                }
                _ => {}
            }
        }
        raws.push(Raw { line, lhs, rhs, negated });
    }

    // bare `X sub Y` is a role inclusion iff either side is known to be a role
    loop {
        let mut grew = false;
        for raw in &raws {
            if let (RawSide::Name(a) | RawSide::Inverse(a), RawSide::Name(b) | RawSide::Inverse(b)) =
                (&raw.lhs, &raw.rhs)
            {
                if raw.negated {
                    continue;
                }
                if roles.contains(a) != roles.contains(b) {
                    roles.insert(a.clone());
                    roles.insert(b.clone());
                    grew = true;
                }
            }
        }
        if !grew {
            break;
        }
    }
    if let Some(both) = roles.intersection(&concepts).next() {
        return Err(Error::Invalid(format!("`{both}` declared as concept but used as role")));
    }

    let mut tbox = TBox::default();
    for raw in raws {
        let as_concept = |side: &RawSide| -> Result<BasicConcept> {
            match side {
                RawSide::Name(n) if !roles.contains(n) => Ok(BasicConcept::Atomic(n.clone())),
                RawSide::Concept(c) => Ok(c.clone()),
                _ => Err(Error::parse(raw.line, "role used where a concept is expected")),
            }
        };
        let as_role = |side: &RawSide| -> Option<Role> {
            match side {
                RawSide::Name(n) if roles.contains(n) => Some(Role::new(n.clone())),
                RawSide::Inverse(n) => Some(Role::inverse_of(n.clone())),
                _ => None,
            }
        };
        match (as_role(&raw.lhs), as_role(&raw.rhs)) {
            (Some(l), Some(r)) => {
                if raw.negated {
                    return Err(Error::parse(raw.line, "role disjointness is not supported"));
                }
                tbox.push(Axiom::role_sub(l, r));
            }
            (None, None) => {
                let lhs = as_concept(&raw.lhs)?;
                let rhs = as_concept(&raw.rhs)?;
                tbox.push(Axiom::ConceptInclusion { lhs, rhs, negated: raw.negated });
            }
            _ => return Err(Error::parse(raw.line, "mixes a role and a concept")),
        }
    }
    Ok(tbox)
}

/// A ground fact `A(a)` or `P(a,b)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Fact {
    Concept(String, String),
    Role(String, String, String),
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fact::Concept(a, x) => write!(f, "{a}({x})"),
            Fact::Role(p, x, y) => write!(f, "{p}({x},{y})"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ABox {
    facts: BTreeSet<Fact>,
}

impl ABox {
    pub fn new(facts: impl IntoIterator<Item = Fact>) -> Self {
        ABox { facts: facts.into_iter().collect() }
    }

    pub fn insert(&mut self, fact: Fact) -> bool {
        self.facts.insert(fact)
    }

    pub fn facts(&self) -> &BTreeSet<Fact> {
        &self.facts
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn individuals(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for f in &self.facts {
            match f {
                Fact::Concept(_, a) => {
                    out.insert(a.clone());
                }
                Fact::Role(_, a, b) => {
                    out.insert(a.clone());
                    out.insert(b.clone());
                }
            }
        }
        out
    }

    pub fn role_names(&self) -> BTreeSet<String> {
        self.facts
            .iter()
            .filter_map(|f| match f {
                Fact::Role(p, _, _) => Some(p.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn concept_names(&self) -> BTreeSet<String> {
        self.facts
            .iter()
            .filter_map(|f| match f {
                Fact::Concept(a, _) => Some(a.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn parse(text: &str) -> Result<ABox> {
        let mut abox = ABox::default();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw_line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let content = content.strip_suffix('.').unwrap_or(content).trim();
            let (pred, rest) = content
                .split_once('(')
                .ok_or_else(|| Error::parse(line, "expected `A(a)` or `P(a,b)`"))?;
            let args = rest
                .strip_suffix(')')
                .ok_or_else(|| Error::parse(line, "missing `)`"))?;
            let pred = pred.trim();
            if !is_ident(pred) {
                return Err(Error::parse(line, format!("bad predicate `{pred}`")));
            }
            let args: Vec<&str> = args.split(',').map(str::trim).collect();
            for a in &args {
                if !is_ident(a) {
                    return Err(Error::parse(line, format!("bad individual `{a}`")));
                }
            }
            let fact = match args.as_slice() {
                [a] => Fact::Concept(pred.to_string(), a.to_string()),
                [a, b] => Fact::Role(pred.to_string(), a.to_string(), b.to_string()),
                _ => return Err(Error::parse(line, "facts take one or two arguments")),
            };
            abox.insert(fact);
        }
        let clash: Vec<_> = abox.role_names().intersection(&abox.concept_names()).cloned().collect();
        if let Some(c) = clash.first() {
            return Err(Error::Invalid(format!("`{c}` used with both arities")));
        }
        Ok(abox)
    }
}

impl fmt::Display for ABox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for fact in &self.facts {
            writeln!(f, "{fact}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KB {
    pub tbox: TBox,
    pub abox: ABox,
}

impl KB {
    pub fn new(tbox: TBox, abox: ABox) -> Self {
        KB { tbox, abox }
    }

    /// Parses both parts, using ABox binary predicates to type bare TBox names.
    pub fn parse(tbox: &str, abox: &str) -> Result<KB> {
        let abox = ABox::parse(abox)?;
        let tbox = TBox::parse_with_roles(tbox, &abox.role_names())?;
        for c in abox.concept_names() {
            if tbox.role_names().contains(&c) {
                return Err(Error::Invalid(format!("`{c}` is a role in the TBox but unary in the ABox")));
            }
        }
        for r in abox.role_names() {
            if tbox.concept_names().contains(&r) {
                return Err(Error::Invalid(format!("`{r}` is a concept in the TBox but binary in the ABox")));
            }
        }
        Ok(KB { tbox, abox })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RoleHierarchy {
    None,
    /// H⁻: no number restriction above 1 on a role that has a super-role.
    Restricted,
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Dialect {
    pub allow_disjointness: bool,
    pub role_hierarchy: RoleHierarchy,
    pub number_restrictions: bool,
}

impl Dialect {
    pub const fn new(allow_disjointness: bool, role_hierarchy: RoleHierarchy, number_restrictions: bool) -> Self {
        Dialect { allow_disjointness, role_hierarchy, number_restrictions }
    }

    pub const POS: Dialect = Dialect::new(false, RoleHierarchy::None, false);
    pub const POS_H: Dialect = Dialect::new(false, RoleHierarchy::Full, false);
    pub const POS_HN: Dialect = Dialect::new(false, RoleHierarchy::Restricted, true);
    pub const CORE: Dialect = Dialect::new(true, RoleHierarchy::None, false);
    pub const CORE_N: Dialect = Dialect::new(true, RoleHierarchy::None, true);
    pub const CORE_H: Dialect = Dialect::new(true, RoleHierarchy::Full, false);
    pub const CORE_HN: Dialect = Dialect::new(true, RoleHierarchy::Full, true);

    /// True when every TBox of `self` is also a TBox of `other`.
    pub fn within(&self, other: &Dialect) -> bool {
        let rank = |h: RoleHierarchy| match h {
            RoleHierarchy::None => 0,
            RoleHierarchy::Restricted => 1,
            RoleHierarchy::Full => 2,
        };
        (!self.allow_disjointness || other.allow_disjointness)
            && (!self.number_restrictions || other.number_restrictions)
            && rank(self.role_hierarchy) <= rank(other.role_hierarchy)
    }
}

impl fmt::Display for Dialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let base = if self.allow_disjointness { "core" } else { "pos" };
        let h = match self.role_hierarchy {
            RoleHierarchy::None => "",
            RoleHierarchy::Restricted => "H-",
            RoleHierarchy::Full => "H",
        };
        let n = if self.number_restrictions { "N-" } else { "" };
        if h.is_empty() && n.is_empty() {
            write!(f, "{base}")
        } else {
            write!(f, "{base}^{h}{n}")
        }
    }
}

impl FromStr for Dialect {
    type Err = Error;

    /// Accepts forms such as `core`, `core^N-`, `pos^H-N-`, `core_hn`, `coreH`.
    fn from_str(s: &str) -> Result<Self> {
        let mut t: String = s
            .to_ascii_lowercase()
            .chars()
            .filter(|c| !matches!(c, '^' | '{' | '}' | '_' | ' '))
            .collect();
        if let Some(rest) = t.strip_prefix("dl-lite") {
            t = rest.to_string();
        }
        let (allow_disjointness, mut rest) = if let Some(r) = t.strip_prefix("core") {
            (true, r)
        } else if let Some(r) = t.strip_prefix("pos") {
            (false, r)
        } else {
            return Err(Error::Invalid(format!("unknown dialect `{s}`")));
        };
        let mut role_hierarchy = RoleHierarchy::None;
        if let Some(r) = rest.strip_prefix("h-").or_else(|| rest.strip_prefix("hm")) {
            role_hierarchy = RoleHierarchy::Restricted;
            rest = r;
        } else if let Some(r) = rest.strip_prefix('h') {
            role_hierarchy = RoleHierarchy::Full;
            rest = r;
        }
        let mut number_restrictions = false;
        if let Some(r) = rest.strip_prefix('n') {
            number_restrictions = true;
            rest = r.strip_prefix('-').or_else(|| r.strip_prefix('m')).unwrap_or(r);
        }
        if !rest.is_empty() {
            return Err(Error::Invalid(format!("unknown dialect `{s}`")));
        }
        Ok(Dialect { allow_disjointness, role_hierarchy, number_restrictions })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub index: usize,
    pub axiom: Axiom,
    pub reason: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "axiom {} `{}`: {}", self.index + 1, self.axiom, self.reason)
    }
}

/// Lists every axiom outside the grammar of `dialect`. Empty means valid.
pub fn validate_dialect(tbox: &TBox, dialect: &Dialect) -> Vec<Violation> {
    let mut out = Vec::new();
    let role_incs: Vec<(&Role, &Role)> = tbox
        .axioms()
        .iter()
        .filter_map(|ax| match ax {
            Axiom::RoleInclusion { lhs, rhs } => Some((lhs, rhs)),
            _ => None,
        })
        .collect();
    for (index, ax) in tbox.axioms().iter().enumerate() {
        let mut flag = |reason: &str| {
            out.push(Violation { index, axiom: ax.clone(), reason: reason.to_string() });
        };
        match ax {
            Axiom::ConceptInclusion { lhs, rhs, negated } => {
                if let BasicConcept::MinCard(n, _) = lhs {
                    if *n > 1 {
                        flag("number restriction above 1 on the left-hand side");
                    }
                }
                if *negated {
                    if !dialect.allow_disjointness {
                        flag("disjointness is not allowed in pos dialects");
                    }
                    if matches!(rhs, BasicConcept::MinCard(n, _) if *n > 1) {
                        flag("disjointness needs a basic concept on the right");
                    }
                    continue;
                }
                if let BasicConcept::MinCard(n, r) = rhs {
                    if *n > 1 && !dialect.number_restrictions {
                        flag("number restriction above 1 needs N-");
                    }
                    if *n > 1 && dialect.role_hierarchy == RoleHierarchy::Restricted {
                        let clash = role_incs.iter().any(|(l, _)| *l == r || l.inv() == *r);
                        if clash {
                            flag("H- forbids number restrictions on a role with a super-role");
                        }
                    }
                }
            }
            Axiom::RoleInclusion { .. } => {
                if dialect.role_hierarchy == RoleHierarchy::None {
                    flag("role inclusions need H or H-");
                }
            }
        }
    }
    out
}

/// Positive consequences of a set of basic concepts: atomic names plus the
/// largest entailed number per role.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Closure {
    pub atoms: BTreeSet<String>,
    pub counts: BTreeMap<Role, u32>,
}

impl Closure {
    pub fn contains(&self, c: &BasicConcept) -> bool {
        match c {
            BasicConcept::Atomic(a) => self.atoms.contains(a),
            BasicConcept::MinCard(n, r) => self.counts.get(r).is_some_and(|m| m >= n),
        }
    }

    fn add(&mut self, c: &BasicConcept) -> bool {
        match c {
            BasicConcept::Atomic(a) => self.atoms.insert(a.clone()),
            BasicConcept::MinCard(n, r) => {
                let slot = self.counts.entry(r.clone()).or_insert(0);
                if *slot < *n {
                    *slot = *n;
                    true
                } else {
                    false
                }
            }
        }
    }
}

/// Closes `seeds` under the positive inclusions of `tbox` (disjointness ignored).
pub fn closure<'a>(tbox: &TBox, seeds: impl IntoIterator<Item = &'a BasicConcept>) -> Closure {
    let mut cl = Closure::default();
    for s in seeds {
        cl.add(s);
    }
    loop {
        let mut grew = false;
        for ax in tbox.axioms() {
            match ax {
                Axiom::ConceptInclusion { lhs, rhs, negated: false } => {
                    if cl.contains(lhs) {
                        grew |= cl.add(rhs);
                    }
                }
                Axiom::RoleInclusion { lhs, rhs } => {
                    for (l, r) in [(lhs.clone(), rhs.clone()), (lhs.inv(), rhs.inv())] {
                        if let Some(&n) = cl.counts.get(&l) {
                            grew |= cl.add(&BasicConcept::MinCard(n, r));
                        }
                    }
                }
                _ => {}
            }
        }
        if !grew {
            return cl;
        }
    }
}

/// `sub ⊑ sup` under the positive inclusions of `tbox`.
pub fn entails(tbox: &TBox, sub: &BasicConcept, sup: &BasicConcept) -> bool {
    closure(tbox, [sub]).contains(sup)
}

/// Every basic concept of the TBox vocabulary (plus the inputs themselves)
/// that is subsumed by some member of `concepts`.
pub fn subsumees(tbox: &TBox, concepts: &BTreeSet<BasicConcept>) -> BTreeSet<BasicConcept> {
    let mut candidates = tbox.basic_concepts();
    candidates.extend(concepts.iter().cloned());
    candidates
        .into_iter()
        .filter(|cand| {
            let cl = closure(tbox, [cand]);
            concepts.iter().any(|c| cl.contains(c))
        })
        .collect()
}

/// Largest `n` with `b sub >=n r` stated in the TBox, 0 if there is none.
pub fn max_card(tbox: &TBox, b: &BasicConcept, r: &Role) -> u32 {
    tbox.axioms()
        .iter()
        .filter_map(|ax| match ax {
            Axiom::ConceptInclusion { lhs, rhs: BasicConcept::MinCard(n, role), negated: false }
                if lhs == b && role == r =>
            {
                Some(*n)
            }
            _ => None,
        })
        .max()
        .unwrap_or(0)
}

/// Prefix for names invented by the library.
pub const AUX_PREFIX: &str = "__aux_";

/// Replaces every `B sub >=n R` with `n > 1` by `n` fresh sub-roles of `R`,
/// each required once, with pairwise disjoint fillers.
pub fn encode_numbers_into_h(tbox: &TBox) -> TBox {
    let mut out = TBox::default();
    let mut next: BTreeMap<String, usize> = BTreeMap::new();
    for ax in tbox.axioms() {
        match ax {
            Axiom::ConceptInclusion { lhs, rhs: BasicConcept::MinCard(n, r), negated: false } if *n > 1 => {
                let counter = next.entry(r.name.clone()).or_insert(0);
                let fresh: Vec<Role> = (0..*n)
                    .map(|_| {
                        *counter += 1;
                        Role { name: format!("{AUX_PREFIX}{}_{}", r.name, counter), inverted: r.inverted }
                    })
                    .collect();
                for f in &fresh {
                    out.push(Axiom::sub(lhs.clone(), BasicConcept::exists(f.clone())));
                }
                for f in &fresh {
                    out.push(Axiom::role_sub(f.clone(), r.clone()));
                }
                for i in 0..fresh.len() {
                    for j in i + 1..fresh.len() {
                        out.push(Axiom::disj(
                            BasicConcept::exists(fresh[i].inv()),
                            BasicConcept::exists(fresh[j].inv()),
                        ));
                    }
                }
            }
            other => out.push(other.clone()),
        }
    }
    out
}

/// Chase depth that suffices for deciding satisfiability.
pub fn satisfiability_depth(tbox: &TBox) -> u32 {
    1 + tbox.basic_concepts().len() as u32
}

/// Satisfiability via a chase prefix of depth `1 + #basic concepts`.
pub fn is_satisfiable(kb: &KB) -> bool {
    is_satisfiable_within(kb, satisfiability_depth(&kb.tbox))
}

/// True iff the restricted chase prefix of the given depth violates no
/// disjointness axiom. Anonymous elements reached through an already expanded
/// role are not expanded again: their concepts depend on that role only.
pub fn is_satisfiable_within(kb: &KB, depth: u32) -> bool {
    if !kb.tbox.axioms().iter().any(|ax| matches!(ax, Axiom::ConceptInclusion { negated: true, .. })) {
        return true;
    }
    let prefix = interp::chase_for_types(kb, depth);
    interp::violates_disjointness(&prefix, &kb.tbox).is_none()
}
