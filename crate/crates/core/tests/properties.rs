//! Property tests for the invariants of each module. Random structures come
//! from the seeded generators, so a failing case shrinks to a seed.

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use proptest::sample::subsequence;

use litecount::certain::{
    certcard, certcount_chase, certcount_merge_min, certcount_rewrite, decide_count, default_chase_depth, Bounds,
    Decision,
};
use litecount::cq::{answers, count_matches, Atom, ConjunctiveQuery, Term};
use litecount::focount::{evaluate, ExistsAtom, FoQuery};
use litecount::interp::{
    annotated_chase, enumerate_models, find_homomorphism, is_homomorphism, restricted_chase, Element, Homomorphism,
    Interpretation,
};
use litecount::kb::{
    encode_numbers_into_h, is_satisfiable, satisfiability_depth, subsumees, validate_dialect, ABox, Axiom,
    BasicConcept, Dialect, Fact, TBox, KB,
};
use litecount::random::{random_abox, random_cq, random_instance, random_tbox, seeded, Family, Params};
use litecount::reductions::{gen_3col_branching, gen_3col_disconnected, gen_nand_circuit, all_circuits, UndirectedGraph};
use litecount::rewrite::{saturate, RewriteState};

fn core() -> Params {
    Params::small(Family::CoreN)
}

fn pos() -> Params {
    let mut p = Params::small(Family::PosHN);
    p.max_card = 2;
    p
}

fn sat_instance(seed: u64, p: &Params, rooted: bool, linear: bool) -> (KB, ConjunctiveQuery) {
    let mut rng = seeded(seed);
    loop {
        let (kb, q) = random_instance(&mut rng, p, rooted, linear);
        if is_satisfiable(&kb) {
            return (kb, q);
        }
    }
}

fn abox_interp(kb: &KB) -> Interpretation {
    Interpretation::from_abox(&kb.abox).unwrap()
}

// ---- kb-core

/// ABox in which `o` is an instance of `b` and nothing more is stated about it.
fn witness(b: &BasicConcept) -> ABox {
    match b {
        BasicConcept::Atomic(a) => ABox::new([Fact::Concept(a.clone(), "o".into())]),
        BasicConcept::MinCard(n, r) => ABox::new((0..*n).map(|k| {
            let w = format!("w{k}");
            if r.inverted {
                Fact::Role(r.name.clone(), w, "o".into())
            } else {
                Fact::Role(r.name.clone(), "o".into(), w)
            }
        })),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn subsumees_idempotent_and_monotone(seed: u64, picks in subsequence((0..12usize).collect::<Vec<_>>(), 0..4)) {
        let mut rng = seeded(seed);
        let mut p = pos();
        p.max_axioms = 5;
        p.concepts.push("C".into());
        p.roles.push("R".into());
        let t = random_tbox(&mut rng, &p);
        let all: Vec<BasicConcept> = t.basic_concepts().into_iter().collect();
        prop_assume!(!all.is_empty());
        let small: BTreeSet<BasicConcept> = picks.iter().map(|k| all[k % all.len()].clone()).collect();
        let mut big = small.clone();
        big.insert(all[seed as usize % all.len()].clone());
        let s = subsumees(&t, &small);
        prop_assert_eq!(subsumees(&t, &s), s.clone());
        prop_assert!(s.is_subset(&subsumees(&t, &big)));
    }

    #[test]
    fn subsumees_agree_with_chase_and_models(seed: u64) {
        let mut rng = seeded(seed);
        let mut p = pos();
        p.max_axioms = 5;
        p.concepts.push("C".into());
        p.roles.push("R".into());
        let t = random_tbox(&mut rng, &p);
        let all: Vec<BasicConcept> = t.basic_concepts().into_iter().collect();
        for b in &all {
            let kb = KB::new(t.clone(), witness(b));
            let chase = restricted_chase(&kb, satisfiability_depth(&t) + 1);
            let o = Element::named("o");
            let subs = subsumees(&t, &BTreeSet::from([b.clone()]));
            for c in &all {
                let entailed = subsumees(&t, &BTreeSet::from([c.clone()])).contains(b);
                prop_assert_eq!(entailed, chase.interp.satisfies(c, &o), "{} sub {}\n{}", b, c, t);
                if c == b {
                    prop_assert!(subs.contains(c));
                }
            }
            // every small model agrees with the entailed memberships
            if let Ok(models) = enumerate_models(&kb, 0) {
                for m in models.take(50) {
                    for c in &all {
                        if subsumees(&t, &BTreeSet::from([c.clone()])).contains(b) {
                            prop_assert!(m.satisfies(c, &o));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn encoding_removes_counts_and_keeps_satisfiability(seed: u64) {
        let mut rng = seeded(seed);
        let mut p = core();
        p.max_axioms = 5;
        let kb = KB::new(random_tbox(&mut rng, &p), random_abox(&mut rng, &p));
        let enc = encode_numbers_into_h(&kb.tbox);
        for ax in enc.axioms() {
            if let Axiom::ConceptInclusion { lhs, rhs, .. } = ax {
                for c in [lhs, rhs] {
                    prop_assert!(!matches!(c, BasicConcept::MinCard(n, _) if *n > 1), "{}", ax);
                }
            }
        }
        prop_assert!(validate_dialect(&enc, &Dialect::CORE_H).is_empty());
        prop_assert_eq!(is_satisfiable(&kb), is_satisfiable(&KB::new(enc, kb.abox.clone())));
    }

    #[test]
    fn accepted_tboxes_round_trip(seed: u64) {
        let mut rng = seeded(seed);
        for (p, d) in [(core(), Dialect::CORE_N), (pos(), Dialect::POS_HN)] {
            let t = random_tbox(&mut rng, &p);
            prop_assert!(validate_dialect(&t, &d).is_empty());
            let back = TBox::parse(&t.to_string()).unwrap();
            prop_assert_eq!(&back, &t);
            prop_assert_eq!(back.to_string(), t.to_string());
        }
    }
}

// ---- interp

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn chase_grows_with_depth(seed: u64) {
        let mut rng = seeded(seed);
        let p = if seed % 2 == 0 { core() } else { pos() };
        let kb = KB::new(random_tbox(&mut rng, &p), random_abox(&mut rng, &p));
        let mut prev = restricted_chase(&kb, 0).interp;
        for d in 1..5 {
            let next = restricted_chase(&kb, d).interp;
            prop_assert!(prev.is_subset_of(&next), "depth {}", d);
            prev = next;
        }
    }

    #[test]
    fn chase_creates_only_missing_successors(seed: u64) {
        let mut rng = seeded(seed);
        let kb = KB::new(random_tbox(&mut rng, &core()), random_abox(&mut rng, &core()));
        let depth = 4;
        let c = restricted_chase(&kb, depth);
        for e in c.interp.domain() {
            if e.generation() >= depth {
                continue;
            }
            let mut roles: BTreeSet<_> = c.parent.values().filter(|(p, _)| p == e).map(|(_, r)| r.clone()).collect();
            for ax in kb.tbox.axioms() {
                if let Axiom::ConceptInclusion { rhs: BasicConcept::MinCard(_, r), negated: false, .. } = ax {
                    roles.insert(r.clone());
                }
            }
            for r in roles {
                let need = kb
                    .tbox
                    .axioms()
                    .iter()
                    .filter_map(|ax| match ax {
                        Axiom::ConceptInclusion { lhs, rhs: BasicConcept::MinCard(n, rr), negated: false }
                            if *rr == r && c.interp.satisfies(lhs, e) => Some(*n as usize),
                        _ => None,
                    })
                    .max()
                    .unwrap_or(0);
                let created = c.parent.values().filter(|(p, rr)| p == e && *rr == r).count();
                let others = c.interp.successors(&r, e).len() - created;
                prop_assert_eq!(created, need.saturating_sub(others), "{} via {}\n{}", e, r, kb.tbox);
            }
        }
    }

    #[test]
    fn saturated_chase_maps_into_small_models(seed: u64) {
        let mut rng = seeded(seed);
        let mut p = if seed % 2 == 0 { core() } else { pos() };
        p.individuals = 3;
        p.max_facts = 3;
        p.max_card = 2;
        let kb = KB::new(random_tbox(&mut rng, &p), random_abox(&mut rng, &p));
        prop_assume!(is_satisfiable(&kb));
        let c = restricted_chase(&kb, 6);
        prop_assume!(c.saturated);
        if let Ok(models) = enumerate_models(&kb, 1) {
            for m in models.take(200) {
                prop_assert!(find_homomorphism(&c.interp, &m).is_some(), "no homomorphism into\n{}", m);
            }
        }
    }

    #[test]
    fn annotated_expansion_counts_like_plain_chase(seed: u64) {
        let mut rng = seeded(seed);
        let p = if seed % 2 == 0 { core() } else { pos() };
        let kb = KB::new(random_tbox(&mut rng, &p), random_abox(&mut rng, &p));
        let plain = restricted_chase(&kb, 5);
        let ann = annotated_chase(&kb, 5);
        prop_assume!(plain.saturated && ann.saturated);
        let expanded = ann.expand();
        let inds: Vec<String> = kb.abox.individuals().into_iter().collect();
        for _ in 0..5 {
            let q = random_cq(&mut rng, &p, &inds, false, false);
            prop_assert_eq!(count_matches(&q, &expanded), count_matches(&q, &plain.interp), "{}", q);
            prop_assert_eq!(answers(&q, &expanded), answers(&q, &plain.interp));
        }
    }

    #[test]
    fn image_inclusion_is_homomorphism(seed: u64, picks in proptest::collection::vec(0..64usize, 16)) {
        let mut rng = seeded(seed);
        let p = core();
        let kb = KB::new(random_tbox(&mut rng, &p), random_abox(&mut rng, &p));
        let from = restricted_chase(&kb, 2).interp;
        let to = restricted_chase(&KB::new(random_tbox(&mut rng, &p), kb.abox.clone()), 2).interp;
        let targets: Vec<Element> = to.domain().iter().cloned().collect();
        let h: Homomorphism = from
            .domain()
            .iter()
            .enumerate()
            .map(|(k, e)| {
                let img = if e.is_named() { e.clone() } else { targets[picks[k % picks.len()] % targets.len()].clone() };
                (e.clone(), img)
            })
            .collect();
        // fact-by-fact check
        let direct = from.concepts().iter().all(|(a, ext)| ext.iter().all(|e| to.has_concept(a, &h[e])))
            && from.roles().iter().all(|(r, ext)| ext.iter().all(|(s, o)| to.has_role(r, &h[s], &h[o])))
            && from.domain().iter().all(|e| to.domain().contains(&h[e]));
        prop_assert_eq!(is_homomorphism(&h, &from, &to), direct);
    }
}

// ---- cq

fn renamed(q: &ConjunctiveQuery, suffix: &str, reverse: bool) -> ConjunctiveQuery {
    let rn = |t: &Term| match t.as_var() {
        Some(v) => Term::var(format!("{v}{suffix}")),
        None => t.clone(),
    };
    let mut body: Vec<Atom> =
        q.body.iter().map(|a| Atom { pred: a.pred.clone(), args: a.args.iter().map(rn).collect() }).collect();
    if reverse {
        body.reverse();
    }
    ConjunctiveQuery::new(q.head.iter().map(|v| format!("{v}{suffix}")).collect(), body).unwrap()
}

/// Connectivity by union-find and acyclicity by edge counting.
fn shape_oracle(q: &ConjunctiveQuery) -> (bool, bool) {
    let vars: Vec<String> = q.variables();
    let idx: BTreeMap<&str, usize> = vars.iter().enumerate().map(|(k, v)| (v.as_str(), k)).collect();
    let mut parent: Vec<usize> = (0..vars.len()).collect();
    fn find(p: &mut Vec<usize>, x: usize) -> usize {
        if p[x] != x {
            let r = find(p, p[x]);
            p[x] = r;
        }
        p[x]
    }
    let mut edges = BTreeSet::new();
    let mut self_loop = false;
    for a in &q.body {
        if let [Term::Var(s), Term::Var(o)] = a.args.as_slice() {
            let (x, y) = (idx[s.as_str()], idx[o.as_str()]);
            self_loop |= x == y;
            edges.insert((x.min(y), x.max(y)));
            let (rx, ry) = (find(&mut parent, x), find(&mut parent, y));
            parent[rx] = ry;
        }
    }
    let comps = (0..vars.len()).filter(|&x| find(&mut parent, x) == x).count();
    (comps <= 1, !self_loop && edges.len() + comps == vars.len())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn match_counts_ignore_names_and_order(seed: u64) {
        let mut rng = seeded(seed);
        let mut p = core();
        p.max_facts = 8;
        let abox = random_abox(&mut rng, &p);
        let i = Interpretation::from_abox(&abox).unwrap();
        let inds: Vec<String> = abox.individuals().into_iter().collect();
        let q = random_cq(&mut rng, &p, &inds, false, false);
        let r = renamed(&q, "_r", true);
        prop_assert_eq!(count_matches(&q, &i), count_matches(&r, &i));
        // every binding is named on an ABox, so the groups partition the matches
        let total: u64 = answers(&q, &i).iter().map(|a| a.count).sum();
        prop_assert_eq!(total, count_matches(&q, &i));
    }

    #[test]
    fn disjoint_union_multiplies(seed: u64) {
        let mut rng = seeded(seed);
        let mut p = core();
        p.max_facts = 8;
        let abox = random_abox(&mut rng, &p);
        let i = Interpretation::from_abox(&abox).unwrap();
        let q1 = random_cq(&mut rng, &p, &[], false, false);
        let q2 = renamed(&random_cq(&mut rng, &p, &[], false, false), "_b", false);
        let b1 = ConjunctiveQuery::new(vec![], q1.body.clone()).unwrap();
        let b2 = ConjunctiveQuery::new(vec![], q2.body.clone()).unwrap();
        let both = ConjunctiveQuery::new(vec![], q1.body.iter().chain(&q2.body).cloned().collect()).unwrap();
        prop_assert_eq!(count_matches(&both, &i), count_matches(&b1, &i) * count_matches(&b2, &i));
        prop_assert!(!both.classify_shape().connected);
    }

    #[test]
    fn shapes_match_independent_checks(seed: u64) {
        let mut rng = seeded(seed);
        let mut p = core();
        p.max_atoms = 5;
        let q = random_cq(&mut rng, &p, &[], false, false);
        let s = q.classify_shape();
        prop_assert_eq!((s.connected, s.acyclic), shape_oracle(&q), "{}", q);
        let two = ConjunctiveQuery::new(vec![], q.body.iter().chain(&renamed(&q, "_c", false).body).cloned().collect()).unwrap();
        prop_assert_eq!((two.classify_shape().connected, two.classify_shape().acyclic), shape_oracle(&two));
    }
}

// ---- focount

/// Rewritten queries of a random instance together with ABox interpretations.
fn rewritten(seed: u64) -> (Vec<FoQuery>, Vec<Interpretation>) {
    let (kb, q) = sat_instance(seed, &core(), true, false);
    let set = saturate(&q, &kb.tbox).unwrap();
    let mut rng = seeded(seed ^ 0x5eed);
    let mut p = core();
    p.max_facts = 7;
    let mut is = vec![abox_interp(&kb)];
    for _ in 0..3 {
        is.push(Interpretation::from_abox(&random_abox(&mut rng, &p)).unwrap());
    }
    (set, is)
}

fn exists_as_negation(e: &ExistsAtom, fresh: &str) -> Atom {
    let f = Term::var(fresh);
    if e.role.inverted {
        Atom::binary(e.role.name.clone(), f, e.subject.clone())
    } else {
        Atom::binary(e.role.name.clone(), e.subject.clone(), f)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn evaluation_ignores_rule_order_and_names(seed: u64) {
        let (set, is) = rewritten(seed);
        for fq in &set {
            let mut rev = fq.clone();
            rev.rules.reverse();
            let mut ren = fq.clone();
            ren.rules = fq.rules.iter().map(|r| r.rename(&|t| match t.as_var() {
                Some(v) => Term::var(format!("{v}_r")),
                None => t.clone(),
            })).collect();
            for i in &is {
                prop_assert_eq!(evaluate(&rev, i), evaluate(fq, i));
                prop_assert_eq!(evaluate(&ren, i), evaluate(fq, i), "{}", ren);
            }
        }
    }

    #[test]
    fn zero_count_equals_negated_atom(seed: u64) {
        let (set, is) = rewritten(seed);
        for fq in &set {
            let mut neg = fq.clone();
            for (k, r) in neg.rules.iter_mut().enumerate() {
                let zeros: Vec<ExistsAtom> = r.exists.iter().filter(|e| e.count == 0).cloned().collect();
                r.exists.retain(|e| e.count != 0);
                for (j, e) in zeros.iter().enumerate() {
                    r.neg.push(exists_as_negation(e, &format!("_z{k}_{j}")));
                }
            }
            for i in &is {
                prop_assert_eq!(evaluate(&neg, i), evaluate(fq, i), "{}\nvs\n{}", fq, neg);
            }
        }
    }

    #[test]
    fn normalization_keeps_answers(seed: u64) {
        let (kb, q) = sat_instance(seed, &core(), true, false);
        let mut st = RewriteState::initialize(&q, &kb.tbox).unwrap();
        st.atom_rewrite().unwrap();
        st.reduce().unwrap();
        st.ge_alpha().unwrap();
        st.ge_beta().unwrap();
        let (_, is) = rewritten(seed);
        for fq in st.queries() {
            let norm = fq.normalize();
            for i in &is {
                prop_assert_eq!(evaluate(&norm, i), evaluate(&fq, i), "{}", fq);
            }
        }
    }

    #[test]
    fn embedded_query_evaluates_like_cq(seed: u64) {
        let mut rng = seeded(seed);
        let mut p = core();
        p.max_facts = 8;
        let abox = random_abox(&mut rng, &p);
        let i = Interpretation::from_abox(&abox).unwrap();
        let inds: Vec<String> = abox.individuals().into_iter().collect();
        let q = random_cq(&mut rng, &p, &inds, false, false);
        prop_assert_eq!(evaluate(&FoQuery::from_cq(&q), &i), answers(&q, &i));
    }
}

// ---- rewrite and certain

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn chase_count_stable_past_default_depth(seed: u64) {
        let (kb, q) = sat_instance(seed, &core(), true, false);
        let d = default_chase_depth(&q);
        let base = certcount_chase(&kb, &q, Some(d)).unwrap();
        for extra in 1..3 {
            prop_assert_eq!(&certcount_chase(&kb, &q, Some(d + extra)).unwrap(), &base);
        }
    }

    #[test]
    fn merge_min_below_chase_count(seed: u64) {
        let mut rng = seeded(seed);
        let (kb, q) = random_instance(&mut rng, &pos(), false, true);
        let Ok(mm) = certcount_merge_min(&kb, &q, None) else { return Ok(()) };
        let chase = restricted_chase(&kb, 8);
        prop_assume!(chase.saturated);
        let full: BTreeMap<_, _> = answers(&q, &chase.interp).into_iter().map(|a| (a.binding, a.count)).collect();
        for a in mm {
            prop_assert!(full.get(&a.binding).is_some_and(|&n| n >= a.count), "{:?}", a);
        }
    }

    #[test]
    fn exactly_one_count_is_accepted(seed: u64) {
        let (kb, q) = sat_instance(seed, &core(), true, false);
        let ans = certcount_rewrite(&kb, &q).unwrap();
        let q = match ans.first() {
            Some(a) => q.boolify(&a.binding_map()).unwrap(),
            None => q.boolify(&q.head.iter().map(|v| (v.clone(), "i0".to_string())).collect()).unwrap(),
        };
        let (n, _) = certcard(&kb, &q, &Bounds::default()).unwrap();
        let yes: Vec<u64> = (0..=n + 2).filter(|&k| decide_count(&kb, &q, k).unwrap() == Decision::Yes).collect();
        if n == 0 {
            prop_assert!(yes.is_empty());
        } else {
            prop_assert_eq!(yes, vec![n]);
        }
    }
}

// ---- reductions

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn gadgets_are_satisfiable_and_shaped(n in 1usize..7, edges in proptest::collection::vec((0usize..7, 0usize..7), 0..12)) {
        let es: Vec<(usize, usize)> = edges.into_iter().map(|(u, v)| (u % n, v % n)).filter(|(u, v)| u != v).collect();
        let g = UndirectedGraph::numbered(n, es).unwrap();
        let d = gen_3col_disconnected(&g);
        prop_assert!(is_satisfiable(&d.kb));
        let s = d.query.classify_shape();
        prop_assert!(!s.connected && s.acyclic && s.linear);
        let b = gen_3col_branching(&g).unwrap();
        prop_assert!(is_satisfiable(&b.kb));
        let s = b.query.classify_shape();
        prop_assert!(s.connected && s.acyclic && !s.linear);
    }
}

#[test]
fn circuit_gadgets_are_satisfiable_and_atomic() {
    for c in all_circuits(2, 2) {
        for encoded in [false, true] {
            let inst = gen_nand_circuit(&c, encoded);
            assert!(is_satisfiable(&inst.kb));
            assert!(inst.query.classify_shape().atomic);
        }
    }
}
