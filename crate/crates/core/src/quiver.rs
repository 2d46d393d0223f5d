//! Quivers, dimension vectors, paths and cycles.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One arrow in raw (string id) form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrowSpec {
    pub id: String,
    pub tail: String,
    pub head: String,
}

impl ArrowSpec {
    pub fn new(id: &str, tail: &str, head: &str) -> Self {
        ArrowSpec { id: id.into(), tail: tail.into(), head: head.into() }
    }
}

/// Unvalidated quiver description.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuiverSpec {
    pub vertices: Vec<String>,
    pub arrows: Vec<ArrowSpec>,
}

/// A structural problem found by [`validate`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Violation {
    DuplicateVertex(String),
    DuplicateArrowId(String),
    UnknownVertex { arrow: String, vertex: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateVertex(v) => write!(f, "duplicate vertex `{v}`"),
            Violation::DuplicateArrowId(a) => write!(f, "duplicate arrow id `{a}`"),
            Violation::UnknownVertex { arrow, vertex } => {
                write!(f, "arrow `{arrow}` refers to unknown vertex `{vertex}`")
            }
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum QuiverError {
    #[error("invalid quiver: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("quiver has an oriented cycle through {}", .witness.join(" -> "))]
    HasCycle { witness: Vec<String> },
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("unknown arrow `{0}`")]
    UnknownArrow(String),
    #[error("dimension vector: {0}")]
    BadDimensions(String),
}

/// Lists every structural violation in a raw quiver description.
pub fn validate(spec: &QuiverSpec) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for v in &spec.vertices {
        if !seen.insert(v.as_str()) {
            out.push(Violation::DuplicateVertex(v.clone()));
        }
    }
    let mut arrow_ids = HashSet::new();
    for a in &spec.arrows {
        if !arrow_ids.insert(a.id.as_str()) {
            out.push(Violation::DuplicateArrowId(a.id.clone()));
        }
        for end in [&a.tail, &a.head] {
            if !seen.contains(end.as_str()) {
                out.push(Violation::UnknownVertex { arrow: a.id.clone(), vertex: end.clone() });
            }
        }
    }
    out
}

/// Arrow with dense vertex indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arrow {
    pub id: String,
    pub tail: usize,
    pub head: usize,
}

/// A validated quiver. Vertices and arrows are addressed by dense indices in declaration order.
#[derive(Debug, Clone)]
pub struct Quiver {
    vertices: Vec<String>,
    arrows: Vec<Arrow>,
    vertex_index: HashMap<String, usize>,
    arrow_index: HashMap<String, usize>,
    incoming: Vec<Vec<usize>>,
    outgoing: Vec<Vec<usize>>,
}

impl PartialEq for Quiver {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices && self.arrows == other.arrows
    }
}

impl Quiver {
    pub fn new(spec: &QuiverSpec) -> Result<Self, QuiverError> {
        let violations = validate(spec);
        if !violations.is_empty() {
            return Err(QuiverError::Invalid(violations));
        }
        let vertex_index: HashMap<String, usize> =
            spec.vertices.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
        let arrows: Vec<Arrow> = spec
            .arrows
            .iter()
            .map(|a| Arrow { id: a.id.clone(), tail: vertex_index[&a.tail], head: vertex_index[&a.head] })
            .collect();
        let arrow_index = arrows.iter().enumerate().map(|(k, a)| (a.id.clone(), k)).collect();
        let nv = spec.vertices.len();
        let mut incoming = vec![Vec::new(); nv];
        let mut outgoing = vec![Vec::new(); nv];
        for (k, a) in arrows.iter().enumerate() {
            incoming[a.head].push(k);
            outgoing[a.tail].push(k);
        }
        for list in incoming.iter_mut().chain(outgoing.iter_mut()) {
            list.sort_by(|&x, &y| arrows[x].id.cmp(&arrows[y].id));
        }
        Ok(Quiver { vertices: spec.vertices.clone(), arrows, vertex_index, arrow_index, incoming, outgoing })
    }

    /// Builds a quiver from vertex ids and `(id, tail, head)` triples.
    pub fn from_parts(vertices: &[&str], arrows: &[(&str, &str, &str)]) -> Result<Self, QuiverError> {
        Quiver::new(&QuiverSpec {
            vertices: vertices.iter().map(|s| s.to_string()).collect(),
            arrows: arrows.iter().map(|(a, t, h)| ArrowSpec::new(a, t, h)).collect(),
        })
    }

    /// The chain `1 -> 2 -> ... -> len` with arrows `a1, a2, ...`.
    pub fn chain(len: usize) -> Self {
        let vertices: Vec<String> = (1..=len).map(|i| i.to_string()).collect();
        let arrows = (1..len).map(|i| ArrowSpec::new(&format!("a{i}"), &i.to_string(), &(i + 1).to_string())).collect();
        Quiver::new(&QuiverSpec { vertices, arrows }).expect("chain is valid")
    }

    /// Vertices `1..=len` with one arrow `a{i}_{j}` from `i` to `j` for every `i < j`.
    pub fn complete_chain(len: usize) -> Self {
        let vertices: Vec<String> = (1..=len).map(|i| i.to_string()).collect();
        let mut arrows = Vec::new();
        for i in 1..=len {
            for j in i + 1..=len {
                arrows.push(ArrowSpec::new(&format!("a{i}_{j}"), &i.to_string(), &j.to_string()));
            }
        }
        Quiver::new(&QuiverSpec { vertices, arrows }).expect("complete chain is valid")
    }

    /// One vertex `1` with `loops` loops named `l1, l2, ...`.
    pub fn bouquet(loops: usize) -> Self {
        let arrows = (1..=loops).map(|k| ArrowSpec::new(&format!("l{k}"), "1", "1")).collect();
        Quiver::new(&QuiverSpec { vertices: vec!["1".into()], arrows }).expect("bouquet is valid")
    }

    pub fn spec(&self) -> QuiverSpec {
        QuiverSpec {
            vertices: self.vertices.clone(),
            arrows: self
                .arrows
                .iter()
                .map(|a| ArrowSpec::new(&a.id, &self.vertices[a.tail], &self.vertices[a.head]))
                .collect(),
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_arrows(&self) -> usize {
        self.arrows.len()
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn arrows(&self) -> &[Arrow] {
        &self.arrows
    }

    pub fn arrow(&self, k: usize) -> &Arrow {
        &self.arrows[k]
    }

    pub fn vertex_id(&self, i: usize) -> &str {
        &self.vertices[i]
    }

    pub fn vertex(&self, id: &str) -> Result<usize, QuiverError> {
        self.vertex_index.get(id).copied().ok_or_else(|| QuiverError::UnknownVertex(id.into()))
    }

    pub fn arrow_by_id(&self, id: &str) -> Result<usize, QuiverError> {
        self.arrow_index.get(id).copied().ok_or_else(|| QuiverError::UnknownArrow(id.into()))
    }

    /// Arrows with head `i`, sorted by id.
    pub fn incoming(&self, i: usize) -> &[usize] {
        &self.incoming[i]
    }

    /// Arrows with tail `i`, sorted by id.
    pub fn outgoing(&self, i: usize) -> &[usize] {
        &self.outgoing[i]
    }

    pub fn is_acyclic(&self) -> bool {
        topological_order(self).is_ok()
    }
}

/// A path, stored by its start vertex and arrows in traversal order.
///
/// The empty path at `start` is the trivial path.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Path {
    pub start: usize,
    pub arrows: Vec<usize>,
}

impl Path {
    pub fn trivial(i: usize) -> Self {
        Path { start: i, arrows: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.arrows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.arrows.is_empty()
    }

    pub fn tail(&self) -> usize {
        self.start
    }

    pub fn head(&self, q: &Quiver) -> usize {
        self.arrows.last().map_or(self.start, |&a| q.arrows[a].head)
    }

    /// Arrow ids in written (composition) order, last arrow first; `e_i` for trivial paths.
    pub fn label(&self, q: &Quiver) -> String {
        if self.arrows.is_empty() {
            return format!("e_{}", q.vertices[self.start]);
        }
        self.arrows.iter().rev().map(|&a| q.arrows[a].id.as_str()).collect::<Vec<_>>().join("·")
    }
}

/// All paths ending at `i` of length at most `max_len`, by length then lexicographically
/// in written order.
pub fn paths_into(q: &Quiver, i: usize, max_len: usize) -> Vec<Path> {
    let mut out = vec![Path::trivial(i)];
    let mut frontier = 0;
    for _ in 0..max_len {
        let end = out.len();
        for k in frontier..end {
            let p = out[k].clone();
            for &a in q.incoming(p.start) {
                let mut arrows = Vec::with_capacity(p.arrows.len() + 1);
                arrows.push(a);
                arrows.extend_from_slice(&p.arrows);
                out.push(Path { start: q.arrows[a].tail, arrows });
            }
        }
        if out.len() == end {
            break;
        }
        frontier = end;
    }
    out
}

/// Simple oriented cycles of length at most `max_len`, each rooted at its smallest vertex.
/// Parallel arrows give distinct cycles.
pub fn oriented_cycles(q: &Quiver, max_len: usize) -> Vec<Path> {
    fn dfs(q: &Quiver, root: usize, at: usize, max_len: usize, stack: &mut Vec<usize>, on: &mut [bool], out: &mut Vec<Path>) {
        if stack.len() >= max_len {
            return;
        }
        for &a in q.outgoing(at) {
            let h = q.arrows[a].head;
            if h == root {
                let mut arrows = stack.clone();
                arrows.push(a);
                out.push(Path { start: root, arrows });
            } else if h > root && !on[h] {
                on[h] = true;
                stack.push(a);
                dfs(q, root, h, max_len, stack, on, out);
                stack.pop();
                on[h] = false;
            }
        }
    }
    let mut out = Vec::new();
    let mut on = vec![false; q.num_vertices()];
    for root in 0..q.num_vertices() {
        let mut stack = Vec::new();
        on[root] = true;
        dfs(q, root, root, max_len, &mut stack, &mut on, &mut out);
        on[root] = false;
    }
    out
}

/// Kahn's algorithm, preferring lower vertex indices. Fails with a cycle witness.
pub fn topological_order(q: &Quiver) -> Result<Vec<usize>, QuiverError> {
    let n = q.num_vertices();
    let mut indeg: Vec<usize> = (0..n).map(|i| q.incoming(i).len()).collect();
    let mut ready: std::collections::BTreeSet<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(&v) = ready.iter().next() {
        ready.remove(&v);
        order.push(v);
        for &a in q.outgoing(v) {
            let h = q.arrows[a].head;
            indeg[h] -= 1;
            if indeg[h] == 0 {
                ready.insert(h);
            }
        }
    }
    if order.len() == n {
        return Ok(order);
    }
    // Every remaining vertex has an incoming arrow from another remaining vertex;
    // walking backwards must revisit a vertex.
    let remaining: HashSet<usize> = (0..n).filter(|&i| indeg[i] > 0).collect();
    let mut walk = vec![*remaining.iter().min().expect("nonempty")];
    let mut pos: HashMap<usize, usize> = HashMap::from([(walk[0], 0)]);
    loop {
        let cur = *walk.last().expect("nonempty");
        let prev = q
            .incoming(cur)
            .iter()
            .map(|&a| q.arrows[a].tail)
            .find(|t| remaining.contains(t))
            .expect("remaining vertex has a remaining predecessor");
        if let Some(&p) = pos.get(&prev) {
            let mut cyc = vec![q.vertices[prev].clone()];
            cyc.extend(walk[p..].iter().rev().map(|&v| q.vertices[v].clone()));
            return Err(QuiverError::HasCycle { witness: cyc });
        }
        pos.insert(prev, walk.len());
        walk.push(prev);
    }
}

/// Dimension and framing vectors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimVectors {
    pub d: Vec<usize>,
    pub n: Vec<usize>,
}

impl DimVectors {
    pub fn new(d: Vec<usize>, n: Vec<usize>) -> Self {
        DimVectors { d, n }
    }

    /// Framing `n_i = d_i + 1`.
    pub fn plus_one(d: &[usize]) -> Self {
        DimVectors { d: d.to_vec(), n: d.iter().map(|x| x + 1).collect() }
    }
}

/// A quiver together with its dimension and framing vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct FramedQuiver {
    pub quiver: Quiver,
    pub dims: DimVectors,
}

impl FramedQuiver {
    pub fn new(quiver: Quiver, dims: DimVectors) -> Result<Self, QuiverError> {
        let nv = quiver.num_vertices();
        if dims.d.len() != nv || dims.n.len() != nv {
            return Err(QuiverError::BadDimensions(format!(
                "expected {nv} entries, got d: {}, n: {}",
                dims.d.len(),
                dims.n.len()
            )));
        }
        Ok(FramedQuiver { quiver, dims })
    }

    /// Builds from maps keyed by vertex id.
    pub fn from_maps(
        quiver: Quiver,
        d: &BTreeMap<String, usize>,
        n: &BTreeMap<String, usize>,
    ) -> Result<Self, QuiverError> {
        for key in d.keys().chain(n.keys()) {
            quiver.vertex(key)?;
        }
        let get = |m: &BTreeMap<String, usize>, v: &str, what: &str| {
            m.get(v).copied().ok_or_else(|| QuiverError::BadDimensions(format!("missing {what} for vertex `{v}`")))
        };
        let mut dv = Vec::new();
        let mut nv = Vec::new();
        for v in quiver.vertices() {
            dv.push(get(d, v, "d")?);
            nv.push(get(n, v, "n")?);
        }
        FramedQuiver::new(quiver, DimVectors::new(dv, nv))
    }

    pub fn d(&self, i: usize) -> usize {
        self.dims.d[i]
    }

    pub fn n(&self, i: usize) -> usize {
        self.dims.n[i]
    }

    pub fn num_vertices(&self) -> usize {
        self.quiver.num_vertices()
    }

    pub fn num_arrows(&self) -> usize {
        self.quiver.num_arrows()
    }

    /// `(d_head, d_tail)`, the shape of the matrix on arrow `a`.
    pub fn arrow_shape(&self, a: usize) -> (usize, usize) {
        let ar = self.quiver.arrow(a);
        (self.d(ar.head), self.d(ar.tail))
    }
}

/// Abelianization: vertex `i` becomes `d_i` vertices `(i,p)` with `d = 1` and `n` inherited;
/// each arrow `a: i -> j` becomes `d_i d_j` arrows `a(p,q): (i,p) -> (j,q)`.
pub fn abelianize(fq: &FramedQuiver) -> FramedQuiver {
    let q = &fq.quiver;
    let vid = |i: usize, p: usize| format!("({},{})", q.vertex_id(i), p + 1);
    let mut spec = QuiverSpec::default();
    let mut n = Vec::new();
    for i in 0..q.num_vertices() {
        for p in 0..fq.d(i) {
            spec.vertices.push(vid(i, p));
            n.push(fq.n(i));
        }
    }
    for a in q.arrows() {
        for p in 0..fq.d(a.tail) {
            for r in 0..fq.d(a.head) {
                spec.arrows.push(ArrowSpec {
                    id: format!("{}({},{})", a.id, p + 1, r + 1),
                    tail: vid(a.tail, p),
                    head: vid(a.head, r),
                });
            }
        }
    }
    let d = vec![1; n.len()];
    let quiver = Quiver::new(&spec).expect("abelianization is valid");
    FramedQuiver::new(quiver, DimVectors::new(d, n)).expect("dimension lengths match")
}

/// Vertices reachable from `from` by shortest paths (BFS), used to infer layer sequences.
pub fn shortest_path(q: &Quiver, from: usize, to: usize) -> Option<Vec<usize>> {
    let mut prev: Vec<Option<usize>> = vec![None; q.num_vertices()];
    let mut seen = vec![false; q.num_vertices()];
    let mut queue = VecDeque::from([from]);
    seen[from] = true;
    while let Some(v) = queue.pop_front() {
        if v == to {
            let mut out = vec![to];
            let mut cur = to;
            while let Some(a) = prev[cur] {
                cur = q.arrow(a).tail;
                out.push(cur);
            }
            out.reverse();
            return Some(out);
        }
        for &a in q.outgoing(v) {
            let h = q.arrow(a).head;
            if !seen[h] {
                seen[h] = true;
                prev[h] = Some(a);
                queue.push_back(h);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(q: &Quiver, ps: &[Path]) -> Vec<String> {
        ps.iter().map(|p| p.label(q)).collect()
    }

    #[test]
    fn validate_reports_unknown_vertex() {
        let spec = QuiverSpec { vertices: vec!["1".into()], arrows: vec![ArrowSpec::new("a", "1", "2")] };
        let v = validate(&spec);
        assert_eq!(v, vec![Violation::UnknownVertex { arrow: "a".into(), vertex: "2".into() }]);
        assert!(v[0].to_string().contains("unknown vertex"));
    }

    #[test]
    fn validate_reports_duplicates() {
        let spec = QuiverSpec {
            vertices: vec!["1".into(), "1".into()],
            arrows: vec![ArrowSpec::new("a", "1", "1"), ArrowSpec::new("a", "1", "1")],
        };
        let v = validate(&spec);
        assert!(v.contains(&Violation::DuplicateVertex("1".into())));
        assert!(v.contains(&Violation::DuplicateArrowId("a".into())));
    }

    #[test]
    fn chain_paths_into_last_vertex() {
        let q = Quiver::chain(3);
        let ps = paths_into(&q, 2, 2);
        assert_eq!(labels(&q, &ps), vec!["e_3", "a2", "a2·a1"]);
        assert_eq!(ps[2].tail(), 0);
    }

    #[test]
    fn single_loop_paths_are_powers() {
        let q = Quiver::bouquet(1);
        let ps = paths_into(&q, 0, 3);
        assert_eq!(labels(&q, &ps), vec!["e_1", "l1", "l1·l1", "l1·l1·l1"]);
    }

    #[test]
    fn parallel_arrows_give_two_cycles() {
        let q = Quiver::bouquet(2);
        assert_eq!(oriented_cycles(&q, 1).len(), 2);
        let q = Quiver::from_parts(&["x", "y"], &[("a", "x", "y"), ("b", "y", "x"), ("c", "y", "x")]).unwrap();
        assert_eq!(oriented_cycles(&q, 4).len(), 2);
    }

    #[test]
    fn topological_order_of_chain_and_cycle_witness() {
        assert_eq!(topological_order(&Quiver::chain(3)).unwrap(), vec![0, 1, 2]);
        let q = Quiver::from_parts(&["1", "2", "3"], &[("a", "1", "2"), ("b", "2", "3"), ("c", "3", "2")]).unwrap();
        match topological_order(&q) {
            Err(QuiverError::HasCycle { witness }) => {
                assert_eq!(witness.first(), witness.last());
                assert!(witness.contains(&"2".to_string()) && witness.contains(&"3".to_string()));
            }
            other => panic!("expected cycle, got {other:?}"),
        }
    }

    #[test]
    fn abelianize_a2() {
        let fq = FramedQuiver::new(Quiver::chain(2), DimVectors::new(vec![2, 3], vec![3, 4])).unwrap();
        let ab = abelianize(&fq);
        assert_eq!(ab.num_vertices(), 5);
        assert_eq!(ab.num_arrows(), 6);
        assert!(ab.dims.d.iter().all(|&x| x == 1));
        assert_eq!(ab.dims.n, vec![3, 3, 4, 4, 4]);
        let a = ab.quiver.arrow_by_id("a1(1,1)").unwrap();
        assert_eq!(ab.quiver.vertex_id(ab.quiver.arrow(a).tail), "(1,1)");
        assert_eq!(ab.quiver.vertex_id(ab.quiver.arrow(a).head), "(2,1)");
    }

    #[test]
    fn shortest_path_on_complete_chain_skips() {
        let q = Quiver::complete_chain(4);
        assert_eq!(shortest_path(&q, 0, 3), Some(vec![0, 3]));
        assert_eq!(shortest_path(&Quiver::chain(4), 3, 0), None);
    }
}
