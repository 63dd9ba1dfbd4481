//! Integer-indexed fact store and a backtracking join used by every evaluator.

use std::collections::{HashMap, HashSet};

use crate::interp::{Element, Interpretation};

#[derive(Clone, Debug, Default)]
struct Unary {
    members: Vec<u32>,
    set: HashSet<u32>,
}

#[derive(Clone, Debug, Default)]
struct Binary {
    pairs: Vec<(u32, u32)>,
    fwd: HashMap<u32, Vec<u32>>,
    bwd: HashMap<u32, Vec<u32>>,
    set: HashSet<(u32, u32)>,
}

#[derive(Clone, Debug, Default)]
pub(crate) struct FactIndex {
    elems: Vec<Element>,
    ids: HashMap<Element, u32>,
    unary: HashMap<String, Unary>,
    binary: HashMap<String, Binary>,
}

const EMPTY: &[u32] = &[];

impl FactIndex {
    pub fn new(i: &Interpretation) -> Self {
        let mut idx = FactIndex::default();
        for e in i.domain() {
            idx.intern(e);
        }
        for (a, ext) in i.concepts() {
            for e in ext {
                let id = idx.ids[e];
                idx.add_unary(a, id);
            }
        }
        for (p, ext) in i.roles() {
            for (s, o) in ext {
                let (s, o) = (idx.ids[s], idx.ids[o]);
                idx.add_binary(p, s, o);
            }
        }
        idx
    }

    pub fn intern(&mut self, e: &Element) -> u32 {
        if let Some(&id) = self.ids.get(e) {
            return id;
        }
        let id = self.elems.len() as u32;
        self.elems.push(e.clone());
        self.ids.insert(e.clone(), id);
        id
    }

    pub fn id(&self, e: &Element) -> Option<u32> {
        self.ids.get(e).copied()
    }

    pub fn elem(&self, id: u32) -> &Element {
        &self.elems[id as usize]
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn add_unary(&mut self, pred: &str, e: u32) -> bool {
        let u = self.unary.entry(pred.to_string()).or_default();
        if u.set.insert(e) {
            u.members.push(e);
            true
        } else {
            false
        }
    }

    pub fn add_binary(&mut self, pred: &str, s: u32, o: u32) -> bool {
        let b = self.binary.entry(pred.to_string()).or_default();
        if b.set.insert((s, o)) {
            b.pairs.push((s, o));
            b.fwd.entry(s).or_default().push(o);
            b.bwd.entry(o).or_default().push(s);
            true
        } else {
            false
        }
    }

    pub fn has_unary(&self, pred: &str, e: u32) -> bool {
        self.unary.get(pred).is_some_and(|u| u.set.contains(&e))
    }

    pub fn has_binary(&self, pred: &str, s: u32, o: u32) -> bool {
        self.binary.get(pred).is_some_and(|b| b.set.contains(&(s, o)))
    }

    /// Objects `o` with `pred(s, o)`.
    pub fn succ(&self, pred: &str, s: u32) -> &[u32] {
        self.binary.get(pred).and_then(|b| b.fwd.get(&s)).map_or(EMPTY, Vec::as_slice)
    }

    /// Subjects `s` with `pred(s, o)`.
    pub fn pred_of(&self, pred: &str, o: u32) -> &[u32] {
        self.binary.get(pred).and_then(|b| b.bwd.get(&o)).map_or(EMPTY, Vec::as_slice)
    }

    /// Successors along `pred` or, when `inverted`, along its inverse.
    pub fn role_succ(&self, pred: &str, inverted: bool, s: u32) -> &[u32] {
        if inverted {
            self.pred_of(pred, s)
        } else {
            self.succ(pred, s)
        }
    }

    fn unary_members(&self, pred: &str) -> &[u32] {
        self.unary.get(pred).map_or(EMPTY, |u| u.members.as_slice())
    }

    fn binary_pairs(&self, pred: &str) -> &[(u32, u32)] {
        self.binary.get(pred).map_or(&[], |b| b.pairs.as_slice())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Slot {
    Var(usize),
    Elem(u32),
    /// A constant outside the domain: the atom can never hold.
    Absent,
}

#[derive(Clone, Debug)]
pub(crate) struct CAtom {
    pub pred: String,
    pub args: Vec<Slot>,
}

impl CAtom {
    fn bound_args(&self, asg: &[Option<u32>]) -> usize {
        self.args
            .iter()
            .filter(|s| match s {
                Slot::Var(v) => asg[*v].is_some(),
                _ => true,
            })
            .count()
    }
}

fn resolve(slot: &Slot, asg: &[Option<u32>]) -> Option<Option<u32>> {
    match slot {
        Slot::Var(v) => Some(asg[*v]),
        Slot::Elem(e) => Some(Some(*e)),
        Slot::Absent => None,
    }
}

/// Enumerates assignments of `nvars` variables satisfying every atom,
/// starting from `init`. Variables touched by no atom range over the whole
/// domain. The callback returns `false` to stop the search early.
pub(crate) fn for_each_match(
    idx: &FactIndex,
    atoms: &[CAtom],
    init: &[Option<u32>],
    f: &mut dyn FnMut(&[u32]) -> bool,
) {
    let mut asg = init.to_vec();
    let mut done = vec![false; atoms.len()];
    search(idx, atoms, &mut asg, &mut done, f);
}

fn search(
    idx: &FactIndex,
    atoms: &[CAtom],
    asg: &mut Vec<Option<u32>>,
    done: &mut Vec<bool>,
    f: &mut dyn FnMut(&[u32]) -> bool,
) -> bool {
    let next = (0..atoms.len())
        .filter(|&i| !done[i])
        .max_by_key(|&i| (atoms[i].bound_args(asg), std::cmp::Reverse(i)));
    let Some(ai) = next else {
        return finish(idx, asg, 0, f);
    };
    let atom = &atoms[ai];
    done[ai] = true;
    let cont = match atom.args.as_slice() {
        [a] => match resolve(a, asg) {
            None => true,
            Some(Some(e)) => !idx.has_unary(&atom.pred, e) || search(idx, atoms, asg, done, f),
            Some(None) => {
                let Slot::Var(v) = a else { unreachable!() };
                let mut cont = true;
                for &e in idx.unary_members(&atom.pred) {
                    asg[*v] = Some(e);
                    if !search(idx, atoms, asg, done, f) {
                        cont = false;
                        break;
                    }
                }
                asg[*v] = None;
                cont
            }
        },
        [a, b] => match (resolve(a, asg), resolve(b, asg)) {
            (None, _) | (_, None) => true,
            (Some(Some(s)), Some(Some(o))) => {
                !idx.has_binary(&atom.pred, s, o) || search(idx, atoms, asg, done, f)
            }
            (Some(Some(s)), Some(None)) => {
                let Slot::Var(v) = b else { unreachable!() };
                extend(idx.succ(&atom.pred, s), *v, idx, atoms, asg, done, f)
            }
            (Some(None), Some(Some(o))) => {
                let Slot::Var(v) = a else { unreachable!() };
                extend(idx.pred_of(&atom.pred, o), *v, idx, atoms, asg, done, f)
            }
            (Some(None), Some(None)) => {
                let (Slot::Var(va), Slot::Var(vb)) = (a, b) else { unreachable!() };
                let mut cont = true;
                for &(s, o) in idx.binary_pairs(&atom.pred) {
                    if va == vb && s != o {
                        continue;
                    }
                    asg[*va] = Some(s);
                    asg[*vb] = Some(o);
                    if !search(idx, atoms, asg, done, f) {
                        cont = false;
                        break;
                    }
                }
                asg[*va] = None;
                asg[*vb] = None;
                cont
            }
        },
        _ => true,
    };
    done[ai] = false;
    cont
}

fn extend(
    cands: &[u32],
    v: usize,
    idx: &FactIndex,
    atoms: &[CAtom],
    asg: &mut Vec<Option<u32>>,
    done: &mut Vec<bool>,
    f: &mut dyn FnMut(&[u32]) -> bool,
) -> bool {
    let mut cont = true;
    for &e in cands {
        asg[v] = Some(e);
        if !search(idx, atoms, asg, done, f) {
            cont = false;
            break;
        }
    }
    asg[v] = None;
    cont
}

fn finish(idx: &FactIndex, asg: &mut Vec<Option<u32>>, from: usize, f: &mut dyn FnMut(&[u32]) -> bool) -> bool {
    match (from..asg.len()).find(|&v| asg[v].is_none()) {
        None => {
            let full: Vec<u32> = asg.iter().map(|x| x.unwrap()).collect();
            f(&full)
        }
        Some(v) => {
            let mut cont = true;
            for e in 0..idx.len() as u32 {
                asg[v] = Some(e);
                if !finish(idx, asg, v + 1, f) {
                    cont = false;
                    break;
                }
            }
            asg[v] = None;
            cont
        }
    }
}
