//! Hardness gadgets (3-colorability twice, NAND circuit evaluation) and the
//! combinatorial oracles they are checked against.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::cq::{Atom, ConjunctiveQuery, Term};
use crate::error::{is_ident, Error, Result};
use crate::kb::{encode_numbers_into_h, ABox, Axiom, BasicConcept, Fact, Role, TBox, KB};

/// Undirected graph without self-loops.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UndirectedGraph {
    pub vertices: Vec<String>,
    /// Each edge once, endpoints in vertex order.
    pub edges: BTreeSet<(usize, usize)>,
}

impl UndirectedGraph {
    pub fn new(vertices: Vec<String>, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let distinct: BTreeSet<&String> = vertices.iter().collect();
        if distinct.len() != vertices.len() {
            return Err(Error::Invalid("vertex names must be distinct".into()));
        }
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u == v {
                return Err(Error::Invalid(format!("self-loop on {}", vertices.get(u).map_or("?", |s| s))));
            }
            if u.max(v) >= vertices.len() {
                return Err(Error::Invalid("edge endpoint out of range".into()));
            }
            set.insert((u.min(v), u.max(v)));
        }
        Ok(UndirectedGraph { vertices, edges: set })
    }

    /// Vertices `0..n` with the given edges.
    pub fn numbered(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        Self::new((0..n).map(|k| format!("n{k}")).collect(), edges)
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v)));
        Self::numbered(n, edges).expect("complete graphs are simple")
    }

    pub fn cycle(n: usize) -> Self {
        Self::numbered(n, (0..n).map(|k| (k, (k + 1) % n))).expect("cycles of length 3 or more are simple")
    }

    /// Parses `u v` edge lines and an optional `# vertices:` header, either
    /// a list of names (isolated vertices included) or a count `n` standing
    /// for the names `0..n`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut vertices: Vec<String> = Vec::new();
        let mut index: BTreeMap<String, usize> = BTreeMap::new();
        let mut add = |name: &str, line: usize, vs: &mut Vec<String>| -> Result<usize> {
            if !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(Error::parse(line, format!("bad vertex name {name:?}")));
            }
            Ok(*index.entry(name.to_string()).or_insert_with(|| {
                vs.push(name.to_string());
                vs.len() - 1
            }))
        };
        let mut edges = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let t = raw.trim();
            if let Some(rest) = t.strip_prefix('#') {
                if let Some(list) = rest.trim().strip_prefix("vertices:") {
                    let names: Vec<String> = match list.trim().parse::<usize>() {
                        Ok(n) => (0..n).map(|k| k.to_string()).collect(),
                        Err(_) => list.split_whitespace().map(str::to_string).collect(),
                    };
                    for v in &names {
                        add(v, line, &mut vertices)?;
                    }
                }
                continue;
            }
            if t.is_empty() {
                continue;
            }
            let parts: Vec<&str> = t.split_whitespace().collect();
            let [u, v] = parts.as_slice() else {
                return Err(Error::parse(line, "expected two vertex names"));
            };
            let (u, v) = (add(u, line, &mut vertices)?, add(v, line, &mut vertices)?);
            if u == v {
                return Err(Error::parse(line, "self-loops are not allowed"));
            }
            edges.push((u, v));
        }
        Self::new(vertices, edges)
    }
}

impl fmt::Display for UndirectedGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.vertices.iter().enumerate().all(|(k, v)| *v == k.to_string()) {
            writeln!(f, "# vertices: {}", self.vertices.len())?;
        } else {
            writeln!(f, "# vertices: {}", self.vertices.join(" "))?;
        }
        for (u, v) in &self.edges {
            writeln!(f, "{} {}", self.vertices[*u], self.vertices[*v])?;
        }
        Ok(())
    }
}

/// Exhaustive search over all colorings with three colors.
pub fn is_3colorable(g: &UndirectedGraph) -> bool {
    let n = g.vertices.len();
    let mut color = vec![0u8; n];
    fn go(k: usize, color: &mut Vec<u8>, g: &UndirectedGraph) -> bool {
        if k == color.len() {
            return true;
        }
        for c in 0..3 {
            color[k] = c;
            let ok = g.edges.iter().all(|&(u, v)| v != k || color[u] != c);
            if ok && go(k + 1, color, g) {
                return true;
            }
        }
        false
    }
    go(0, &mut color, g)
}

/// One representative per isomorphism class of graphs on `n` vertices.
pub fn nonisomorphic_graphs(n: usize) -> Vec<UndirectedGraph> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    let perms = crate::focount::permutations(n);
    let mut seen: BTreeSet<u64> = BTreeSet::new();
    let mut out = Vec::new();
    for mask in 0u64..(1 << pairs.len()) {
        let canon = perms
            .iter()
            .map(|p| {
                let mut m = 0u64;
                for (k, &(u, v)) in pairs.iter().enumerate() {
                    if mask >> k & 1 == 1 {
                        let (a, b) = (p[u].min(p[v]), p[u].max(p[v]));
                        let j = pairs.iter().position(|&e| e == (a, b)).unwrap();
                        m |= 1 << j;
                    }
                }
                m
            })
            .min()
            .unwrap_or(0);
        if seen.insert(canon) {
            let edges = pairs.iter().enumerate().filter(|(k, _)| canon >> k & 1 == 1).map(|(_, &e)| e);
            out.push(UndirectedGraph::numbered(n, edges).expect("generated graphs are simple"));
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Polarity {
    Positive,
    Negative,
}

/// A gate input: a circuit input or an earlier gate, by index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Wire {
    Input(usize),
    Gate(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NandCircuit {
    pub inputs: Vec<(String, Polarity)>,
    pub gates: Vec<(String, [Wire; 2])>,
    pub target: usize,
}

impl NandCircuit {
    pub fn new(inputs: Vec<(String, Polarity)>, gates: Vec<(String, [Wire; 2])>, target: usize) -> Result<Self> {
        if gates.is_empty() {
            return Err(Error::Invalid("a circuit needs at least one gate".into()));
        }
        if target >= gates.len() {
            return Err(Error::Invalid("target gate out of range".into()));
        }
        let names: BTreeSet<&String> = inputs.iter().map(|(n, _)| n).chain(gates.iter().map(|(n, _)| n)).collect();
        if names.len() != inputs.len() + gates.len() {
            return Err(Error::Invalid("wire names must be distinct".into()));
        }
        for (k, (name, ws)) in gates.iter().enumerate() {
            if ws[0] == ws[1] {
                return Err(Error::Invalid(format!("gate {name} reads the same wire twice")));
            }
            for w in ws {
                let ok = match *w {
                    Wire::Input(i) => i < inputs.len(),
                    Wire::Gate(j) => j < k,
                };
                if !ok {
                    return Err(Error::Invalid(format!("gate {name} reads an undefined or later wire")));
                }
            }
        }
        Ok(NandCircuit { inputs, gates, target })
    }

    fn wire_name(&self, w: Wire) -> &str {
        match w {
            Wire::Input(i) => &self.inputs[i].0,
            Wire::Gate(j) => &self.gates[j].0,
        }
    }

    /// Parses `input NAME pos|neg`, `gate NAME = nand(A, B)` and `target NAME`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut inputs = Vec::new();
        let mut gates: Vec<(String, [Wire; 2])> = Vec::new();
        let mut target = None;
        let mut wires: BTreeMap<String, Wire> = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let t = raw.split('#').next().unwrap_or("").trim();
            if t.is_empty() {
                continue;
            }
            let (kw, rest) = t.split_once(char::is_whitespace).unwrap_or((t, ""));
            let rest = rest.trim();
            match kw {
                "input" => {
                    let parts: Vec<&str> = rest.split_whitespace().collect();
                    let [name, pol] = parts.as_slice() else {
                        return Err(Error::parse(line, "expected `input NAME pos|neg`"));
                    };
                    let pol = match *pol {
                        "pos" => Polarity::Positive,
                        "neg" => Polarity::Negative,
                        other => return Err(Error::parse(line, format!("unknown polarity {other:?}"))),
                    };
                    if !is_ident(name) || wires.contains_key(*name) {
                        return Err(Error::parse(line, format!("bad or repeated wire name {name:?}")));
                    }
                    wires.insert(name.to_string(), Wire::Input(inputs.len()));
                    inputs.push((name.to_string(), pol));
                }
                "gate" => {
                    let bad = || Error::parse(line, "expected `gate NAME = nand(A, B)`");
                    let (name, rhs) = rest.split_once('=').ok_or_else(bad)?;
                    let name = name.trim();
                    let args = rhs
                        .trim()
                        .strip_prefix("nand(")
                        .and_then(|s| s.strip_suffix(')'))
                        .ok_or_else(bad)?;
                    let args: Vec<&str> = args.split(',').map(str::trim).collect();
                    let [a, b] = args.as_slice() else { return Err(bad()) };
                    let look = |w: &str| {
                        wires.get(w).copied().ok_or_else(|| Error::parse(line, format!("unknown wire {w:?}")))
                    };
                    let ws = [look(a)?, look(b)?];
                    if !is_ident(name) || wires.contains_key(name) {
                        return Err(Error::parse(line, format!("bad or repeated wire name {name:?}")));
                    }
                    wires.insert(name.to_string(), Wire::Gate(gates.len()));
                    gates.push((name.to_string(), ws));
                }
                "target" => match wires.get(rest) {
                    Some(Wire::Gate(j)) => target = Some(*j),
                    _ => return Err(Error::parse(line, format!("target {rest:?} is not a gate"))),
                },
                other => return Err(Error::parse(line, format!("unknown keyword {other:?}"))),
            }
        }
        let target = target.ok_or_else(|| Error::Invalid("missing target".into()))?;
        NandCircuit::new(inputs, gates, target)
    }
}

impl fmt::Display for NandCircuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, pol) in &self.inputs {
            let p = if *pol == Polarity::Positive { "pos" } else { "neg" };
            writeln!(f, "input {name} {p}")?;
        }
        for (name, ws) in &self.gates {
            writeln!(f, "gate {name} = nand({}, {})", self.wire_name(ws[0]), self.wire_name(ws[1]))?;
        }
        writeln!(f, "target {}", self.gates[self.target].0)
    }
}

/// Value of every gate in order.
pub fn gate_values(c: &NandCircuit) -> Vec<bool> {
    let mut vals: Vec<bool> = Vec::with_capacity(c.gates.len());
    for (_, ws) in &c.gates {
        let v = |w: Wire| match w {
            Wire::Input(i) => c.inputs[i].1 == Polarity::Positive,
            Wire::Gate(j) => vals[j],
        };
        let out = !(v(ws[0]) && v(ws[1]));
        vals.push(out);
    }
    vals
}

/// True iff the target gate evaluates to true.
pub fn eval_circuit(c: &NandCircuit) -> bool {
    gate_values(c)[c.target]
}

/// Every circuit with `inputs` inputs and `1..=max_gates` gates whose
/// target is the last gate, over all input polarities.
pub fn all_circuits(inputs: usize, max_gates: usize) -> Vec<NandCircuit> {
    let mut shapes: Vec<Vec<[Wire; 2]>> = vec![Vec::new()];
    let mut out = Vec::new();
    for g in 0..max_gates {
        let mut next = Vec::new();
        for s in &shapes {
            let wires: Vec<Wire> = (0..inputs).map(Wire::Input).chain((0..g).map(Wire::Gate)).collect();
            for a in 0..wires.len() {
                for b in a + 1..wires.len() {
                    let mut t = s.clone();
                    t.push([wires[a], wires[b]]);
                    next.push(t);
                }
            }
        }
        for s in &next {
            for pols in 0..(1u32 << inputs) {
                let ins = (0..inputs)
                    .map(|i| {
                        let p = if pols >> i & 1 == 1 { Polarity::Negative } else { Polarity::Positive };
                        (format!("i{}", i + 1), p)
                    })
                    .collect();
                let gates = s.iter().enumerate().map(|(k, ws)| (format!("g{}", k + 1), *ws)).collect();
                out.push(NandCircuit::new(ins, gates, s.len() - 1).expect("generated circuits are well formed"));
            }
        }
        shapes = next;
    }
    out
}

/// A generated instance of the count problem with the threshold at which
/// the reduced property flips.
#[derive(Clone, Debug)]
pub struct ReductionInstance {
    pub kb: KB,
    pub query: ConjunctiveQuery,
    pub threshold: u64,
    pub claim: String,
}

impl ReductionInstance {
    /// `meta.txt` contents.
    pub fn meta(&self) -> String {
        format!("threshold: {}\nclaim: {}\n", self.threshold, self.claim)
    }
}

fn vertex(g: &UndirectedGraph, k: usize) -> String {
    format!("v_{}", g.vertices[k])
}

const A: &str = "k_a";
const B: &str = "k_b";
const G: &str = "k_g";
const R: &str = "k_r";

fn concept(a: &str, x: &str) -> Fact {
    Fact::Concept(a.into(), x.into())
}

fn role(p: &str, x: &str, y: &str) -> Fact {
    Fact::Role(p.into(), x.into(), y.into())
}

fn v(name: &str) -> Term {
    Term::var(name)
}

fn graph_facts(g: &UndirectedGraph) -> Vec<Fact> {
    let mut facts: Vec<Fact> = (0..g.vertices.len()).map(|k| concept("Vertex", &vertex(g, k))).collect();
    facts.extend(g.edges.iter().map(|&(u, w)| role("edge", &vertex(g, u), &vertex(g, w))));
    facts
}

/// Edge with both ends colored `color`, over variables with the given suffixes.
fn mono_edge(color: &str, v1: &str, v2: &str, c1: &str, c2: &str) -> Vec<Atom> {
    vec![
        Atom::binary("edge", v(v1), v(v2)),
        Atom::binary("hasColor", v(v1), v(c1)),
        Atom::binary("hasColor", v(v2), v(c2)),
        Atom::unary(color, v(c1)),
        Atom::unary(color, v(c2)),
    ]
}

fn mono_edges() -> Vec<Atom> {
    let mut body = mono_edge("Blue", "v1", "v2", "c1", "c2");
    body.extend(mono_edge("Green", "v3", "v4", "c3", "c4"));
    body.extend(mono_edge("Red", "v5", "v6", "c5", "c6"));
    body
}

/// Disconnected query over `DL-Lite_pos`; the count reaches 4 exactly when
/// the graph has no 3-coloring.
pub fn gen_3col_disconnected(g: &UndirectedGraph) -> ReductionInstance {
    let mut facts = graph_facts(g);
    facts.extend([concept("Blue", B), concept("Green", G), concept("Red", R)]);
    facts.extend([role("hasColor", A, B), role("hasColor", A, G), role("hasColor", A, R), role("edge", A, A)]);
    let hc = Role::new("hasColor");
    let tbox = TBox::new([
        Axiom::sub(BasicConcept::atomic("Vertex"), BasicConcept::exists(hc.clone())),
        Axiom::sub(BasicConcept::exists(hc.inv()), BasicConcept::atomic("Color")),
    ]);
    let mut body = vec![Atom::unary("Color", v("c"))];
    body.extend(mono_edges());
    ReductionInstance {
        kb: KB::new(tbox, ABox::new(facts)),
        query: ConjunctiveQuery::new(Vec::new(), body).expect("gadget query is well formed"),
        threshold: 4,
        claim: "certain count >= 4 iff the graph is not 3-colorable".into(),
    }
}

/// Connected tree-shaped query over `DL-Lite_pos^H`; the count reaches
/// `3|V|+1` exactly when the graph has no 3-coloring.
pub fn gen_3col_branching(g: &UndirectedGraph) -> Result<ReductionInstance> {
    if g.vertices.is_empty() {
        return Err(Error::Invalid("the graph needs at least one vertex".into()));
    }
    let mut facts = graph_facts(g);
    for k in 0..g.vertices.len() {
        let x = vertex(g, k);
        facts.push(role("conn", &x, A));
        facts.push(role("conn", A, &x));
        for c in [B, G, R] {
            facts.push(role("s", &x, c));
        }
    }
    facts.extend([role("edge", A, A), role("conn", A, A)]);
    facts.extend([role("hasColor", A, B), role("hasColor", A, G), role("hasColor", A, R)]);
    facts.extend([concept("Blue", B), concept("Green", G), concept("Red", R)]);
    let tbox = TBox::new([
        Axiom::sub(BasicConcept::atomic("Vertex"), BasicConcept::exists(Role::new("hasColor"))),
        Axiom::role_sub(Role::new("s"), Role::new("u")),
        Axiom::role_sub(Role::new("hasColor"), Role::new("u")),
    ]);
    let mut body = mono_edges();
    body.push(Atom::binary("conn", v("v1"), v("v3")));
    body.push(Atom::binary("conn", v("v3"), v("v5")));
    body.push(Atom::binary("s", v("v7"), v("c1")));
    body.push(Atom::binary("u", v("v7"), v("c7")));
    let n = g.vertices.len() as u64;
    Ok(ReductionInstance {
        kb: KB::new(tbox, ABox::new(facts)),
        query: ConjunctiveQuery::new(Vec::new(), body).expect("gadget query is well formed"),
        threshold: 3 * n + 1,
        claim: format!("certain count >= {} iff the graph is not 3-colorable", 3 * n + 1),
    })
}

/// Native TBox of the circuit gadget, with `F sub >=2 P_T-`.
fn nand_tbox() -> TBox {
    let (p, pt, pf) = (Role::new("P"), Role::new("P_T"), Role::new("P_F"));
    let at = BasicConcept::atomic;
    TBox::new([
        Axiom::role_sub(pt.clone(), p.clone()),
        Axiom::role_sub(pf.clone(), p),
        Axiom::sub(at("F_I"), at("F")),
        Axiom::sub(at("T_I"), at("T")),
        Axiom::sub(at("T_O"), at("T")),
        Axiom::disj(at("T"), at("F")),
        Axiom::sub(at("T"), BasicConcept::exists(pf.inv())),
        Axiom::sub(at("F"), BasicConcept::min_card(2, pt.inv())),
        Axiom::sub(BasicConcept::exists(pt), at("T")),
        Axiom::sub(BasicConcept::exists(pf), at("F")),
    ])
}

/// Atomic query over `DL-Lite_core^HN`; the count is one above the number
/// of `P` facts exactly when the target gate is false. With `encoded` the
/// number restriction is replaced by fresh sub-roles (`DL-Lite_core^H`).
pub fn gen_nand_circuit(c: &NandCircuit, encoded: bool) -> ReductionInstance {
    let w = |x: &str| format!("w_{x}");
    let (t1, t2, f) = ("k_t1", "k_t2", "k_f");
    let mut facts = Vec::new();
    for (name, pol) in &c.inputs {
        let x = w(name);
        match pol {
            Polarity::Positive => {
                facts.push(concept("T_I", &x));
                facts.push(role("P", f, &x));
                facts.push(role("P", t1, &x));
            }
            Polarity::Negative => {
                facts.push(concept("F_I", &x));
                facts.push(role("P", t1, &x));
                facts.push(role("P", t2, &x));
            }
        }
    }
    for (name, ws) in &c.gates {
        for wire in ws {
            facts.push(role("P", &w(c.wire_name(*wire)), &w(name)));
        }
    }
    facts.push(concept("T_O", &w(&c.gates[c.target].0)));
    for (s, o) in [(t1, f), (t2, f), (f, t1), (f, t2), (t2, t1), (t1, t2)] {
        facts.push(role("P", s, o));
    }
    let abox = ABox::new(facts);
    let p_facts = abox.facts().iter().filter(|f| matches!(f, Fact::Role(p, _, _) if p == "P")).count() as u64;
    let tbox = if encoded { encode_numbers_into_h(&nand_tbox()) } else { nand_tbox() };
    ReductionInstance {
        kb: KB::new(tbox, abox),
        query: ConjunctiveQuery::new(Vec::new(), vec![Atom::binary("P", v("x1"), v("x2"))])
            .expect("gadget query is well formed"),
        threshold: p_facts + 1,
        claim: format!("certain count = {} iff the circuit is not valid", p_facts + 1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::{is_satisfiable, validate_dialect, Dialect};

    #[test]
    fn coloring_oracle() {
        assert!(is_3colorable(&UndirectedGraph::complete(3)));
        assert!(!is_3colorable(&UndirectedGraph::complete(4)));
        assert!(is_3colorable(&UndirectedGraph::cycle(5)));
        assert!(is_3colorable(&UndirectedGraph::numbered(0, []).unwrap()));
    }

    #[test]
    fn graph_counts() {
        let counts: Vec<usize> = (1..=5).map(|n| nonisomorphic_graphs(n).len()).collect();
        assert_eq!(counts, vec![1, 2, 4, 11, 34]);
    }

    #[test]
    fn graph_text_round_trip() {
        let g = UndirectedGraph::parse("# vertices: a b c d\na b\nb c\n").unwrap();
        assert_eq!(g.vertices.len(), 4);
        assert_eq!(g.edges.len(), 2);
        assert_eq!(UndirectedGraph::parse(&g.to_string()).unwrap(), g);
        let k3 = UndirectedGraph::parse("# vertices: 4\n0 1\n1 2\n0 2\n").unwrap();
        assert_eq!(k3.vertices, ["0", "1", "2", "3"]);
        assert_eq!(UndirectedGraph::parse(&k3.to_string()).unwrap(), k3);
        assert_eq!(UndirectedGraph::parse(&UndirectedGraph::numbered(1, []).unwrap().to_string()).unwrap().vertices.len(), 1);
        assert!(UndirectedGraph::parse("a a").is_err());
        assert!(UndirectedGraph::parse("a b c").is_err());
    }

    #[test]
    fn circuit_parse_and_eval() {
        let c = NandCircuit::parse("input i1 pos\ninput i2 pos\ngate g1 = nand(i1, i2)\ntarget g1\n").unwrap();
        assert!(!eval_circuit(&c));
        assert_eq!(NandCircuit::parse(&c.to_string()).unwrap(), c);
        let c = NandCircuit::parse("input i1 pos\ninput i2 neg\ngate g1 = nand(i1, i2)\ntarget g1").unwrap();
        assert!(eval_circuit(&c));
        assert!(NandCircuit::parse("input i1 pos").is_err());
        assert!(NandCircuit::parse("input i1 pos\ngate g = nand(i1, i1)\ntarget g").is_err());
        assert!(NandCircuit::parse("input i1 pos\ngate g = nand(i1, h)\ntarget g").is_err());
        assert!(NandCircuit::new(vec![], vec![], 0).is_err());
    }

    #[test]
    fn circuit_enumeration_sizes() {
        // 1 + 3 + 18 shapes, 4 polarity choices each
        assert_eq!(all_circuits(2, 3).len(), 22 * 4);
    }

    #[test]
    fn gadget_shapes() {
        let k3 = UndirectedGraph::complete(3);
        let d = gen_3col_disconnected(&k3);
        assert_eq!(d.query.body.len(), 16);
        let s = d.query.classify_shape();
        assert!(!s.connected && s.acyclic && s.linear);
        assert!(validate_dialect(&d.kb.tbox, &Dialect::POS).is_empty());
        assert!(is_satisfiable(&d.kb));
        let b = gen_3col_branching(&k3).unwrap();
        let s = b.query.classify_shape();
        assert!(s.connected && s.acyclic && !s.linear);
        assert_eq!(b.query.variables().len(), 14);
        assert_eq!(b.threshold, 10);
        assert!(validate_dialect(&b.kb.tbox, &Dialect::POS_H).is_empty());
        assert!(gen_3col_branching(&UndirectedGraph::numbered(0, []).unwrap()).is_err());
        let c = NandCircuit::parse("input i1 pos\ninput i2 pos\ngate g1 = nand(i1, i2)\ntarget g1").unwrap();
        let n = gen_nand_circuit(&c, false);
        assert_eq!(n.threshold, 13);
        assert!(n.query.classify_shape().atomic);
        assert!(validate_dialect(&n.kb.tbox, &Dialect::CORE_HN).is_empty());
        let e = gen_nand_circuit(&c, true);
        assert!(validate_dialect(&e.kb.tbox, &Dialect::CORE_H).is_empty());
        assert_eq!(e.kb.abox, n.kb.abox);
    }

    #[test]
    fn gadget_constants_do_not_clash() {
        let g = UndirectedGraph::parse("a b\nk_a v_b").unwrap();
        let inst = gen_3col_disconnected(&g);
        let ind = inst.kb.abox.individuals();
        assert!(ind.contains("v_a") && ind.contains("v_k_a") && ind.contains("k_a"));
        assert_eq!(ind.len(), 4 + 4);
    }
}
