//! Seeded generators for small knowledge bases and queries, used by the
//! randomized sweeps. The seed comes from `LITECOUNT_SEED` when set.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cq::{Atom, ConjunctiveQuery, Term};
use crate::kb::{ABox, Axiom, BasicConcept, Fact, Role, TBox, KB};

pub const SEED_VAR: &str = "LITECOUNT_SEED";
pub const DEFAULT_SEED: u64 = 20_200_907;

/// Seed from the environment, or the default when unset or malformed.
pub fn seed_from_env() -> u64 {
    std::env::var(SEED_VAR).ok().and_then(|s| s.trim().parse().ok()).unwrap_or(DEFAULT_SEED)
}

pub fn rng_from_env() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed_from_env())
}

/// Which TBox family to draw from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    /// Concept inclusions with number restrictions on the right and
    /// disjointness; no role inclusions.
    CoreN,
    /// Positive inclusions, role inclusions, and number restrictions only
    /// on roles without a super-role.
    PosHN,
}

#[derive(Clone, Debug)]
pub struct Params {
    pub family: Family,
    pub max_axioms: usize,
    pub concepts: Vec<String>,
    pub roles: Vec<String>,
    pub max_card: u32,
    pub individuals: usize,
    pub max_facts: usize,
    pub max_atoms: usize,
}

impl Params {
    pub fn small(family: Family) -> Self {
        Params {
            family,
            max_axioms: 3,
            concepts: vec!["A".into(), "B".into()],
            roles: vec!["P".into(), "S".into()],
            max_card: 3,
            individuals: 4,
            max_facts: 4,
            max_atoms: 3,
        }
    }
}

fn role<R: Rng>(rng: &mut R, p: &Params) -> Role {
    let name = p.roles.choose(rng).expect("at least one role").clone();
    if rng.gen_bool(0.5) {
        Role::inverse_of(name)
    } else {
        Role::new(name)
    }
}

fn basic<R: Rng>(rng: &mut R, p: &Params) -> BasicConcept {
    if rng.gen_bool(0.5) {
        BasicConcept::atomic(p.concepts.choose(rng).expect("at least one concept").clone())
    } else {
        BasicConcept::exists(role(rng, p))
    }
}

pub fn random_tbox<R: Rng>(rng: &mut R, p: &Params) -> TBox {
    let n = rng.gen_range(1..=p.max_axioms.max(1));
    let mut t = TBox::default();
    let mut supered: Vec<String> = Vec::new();
    let mut counted: Vec<String> = Vec::new();
    for _ in 0..n {
        let lhs = basic(rng, p);
        let kind = rng.gen_range(0..10);
        let ax = match (p.family, kind) {
            (Family::CoreN, 0..=1) => Axiom::disj(lhs, basic(rng, p)),
            (Family::PosHN, 0..=1) => {
                let (l, r) = (role(rng, p), role(rng, p));
                if l.name == r.name || counted.contains(&l.name) {
                    continue;
                }
                supered.push(l.name.clone());
                Axiom::role_sub(l, r)
            }
            (_, 2..=5) => {
                let r = role(rng, p);
                if p.family == Family::PosHN && supered.contains(&r.name) {
                    continue;
                }
                counted.push(r.name.clone());
                Axiom::sub(lhs, BasicConcept::min_card(rng.gen_range(1..=p.max_card), r))
            }
            _ => Axiom::sub(lhs, basic(rng, p)),
        };
        if !t.axioms().contains(&ax) {
            t.push(ax);
        }
    }
    t
}

pub fn individual(k: usize) -> String {
    format!("i{k}")
}

pub fn random_abox<R: Rng>(rng: &mut R, p: &Params) -> ABox {
    let n = rng.gen_range(1..=p.max_facts);
    let mut a = ABox::default();
    for _ in 0..n {
        let x = individual(rng.gen_range(0..p.individuals));
        if rng.gen_bool(0.4) {
            a.insert(Fact::Concept(p.concepts.choose(rng).unwrap().clone(), x));
        } else {
            let y = individual(rng.gen_range(0..p.individuals));
            a.insert(Fact::Role(p.roles.choose(rng).unwrap().clone(), x, y));
        }
    }
    a
}

pub fn random_kb<R: Rng>(rng: &mut R, p: &Params) -> KB {
    KB::new(random_tbox(rng, p), random_abox(rng, p))
}

/// A connected query with at most `max_atoms` atoms, grown atom by atom
/// from one variable. With `rooted`, an answer variable or a constant is
/// guaranteed; with `linear`, binary atoms only extend the ends of a path.
pub fn random_cq<R: Rng>(rng: &mut R, p: &Params, individuals: &[String], rooted: bool, linear: bool) -> ConjunctiveQuery {
    loop {
        let natoms = rng.gen_range(1..=p.max_atoms);
        let mut vars = vec!["x0".to_string()];
        let mut ends = (0usize, 0usize);
        let mut body: Vec<Atom> = Vec::new();
        for _ in 0..natoms {
            if rng.gen_bool(0.35) {
                let v = vars.choose(rng).unwrap().clone();
                body.push(Atom::unary(p.concepts.choose(rng).unwrap().clone(), Term::var(v)));
                continue;
            }
            let from = if linear {
                if rng.gen_bool(0.5) {
                    ends.0
                } else {
                    ends.1
                }
            } else {
                rng.gen_range(0..vars.len())
            };
            let to = if !linear && rng.gen_bool(0.2) {
                rng.gen_range(0..vars.len())
            } else {
                vars.push(format!("x{}", vars.len()));
                let t = vars.len() - 1;
                if linear {
                    if from == ends.0 && vars.len() > 2 {
                        ends.0 = t;
                    } else {
                        ends.1 = t;
                    }
                }
                t
            };
            let (s, o) = if rng.gen_bool(0.5) { (from, to) } else { (to, from) };
            let pred = p.roles.choose(rng).unwrap().clone();
            body.push(Atom::binary(pred, Term::var(vars[s].clone()), Term::var(vars[o].clone())));
        }
        let used: Vec<String> = vars.iter().filter(|v| body.iter().any(|a| a.vars().any(|x| x == v.as_str()))).cloned().collect();
        let mut head: Vec<String> = used.iter().filter(|_| rng.gen_bool(0.3)).cloned().collect();
        head.truncate(2);
        if rooted && head.is_empty() {
            if !individuals.is_empty() && rng.gen_bool(0.3) {
                let v = used.choose(rng).unwrap().clone();
                let c = individuals.choose(rng).unwrap().clone();
                for a in &mut body {
                    for t in &mut a.args {
                        if t.as_var() == Some(v.as_str()) {
                            *t = Term::constant(c.clone());
                        }
                    }
                }
            } else {
                head.push(used.choose(rng).unwrap().clone());
            }
        }
        body.sort();
        body.dedup();
        if let Ok(q) = ConjunctiveQuery::new(head, body) {
            let s = q.classify_shape();
            if s.connected && (!rooted || s.rooted) && (!linear || s.linear) {
                return q;
            }
        }
    }
}

/// A KB from the family plus a query over its individuals.
pub fn random_instance<R: Rng>(rng: &mut R, p: &Params, rooted: bool, linear: bool) -> (KB, ConjunctiveQuery) {
    let kb = random_kb(rng, p);
    let inds: Vec<String> = kb.abox.individuals().into_iter().collect();
    let q = random_cq(rng, p, &inds, rooted, linear);
    (kb, q)
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
