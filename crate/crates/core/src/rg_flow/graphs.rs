//! Connected Feynman multigraphs with bulk and boundary vertices.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VertexKind {
    /// Integrated over the bulk, decorated by the interaction.
    Bulk,
    /// Pinned at `x = 0`, decorated by the boundary functional there.
    Boundary0,
    /// Pinned at `x = 1` (interval only).
    Boundary1,
}

impl VertexKind {
    pub fn is_bulk(self) -> bool {
        self == VertexKind::Bulk
    }
}

/// Size limits for graph enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphCaps {
    pub max_bulk: usize,
    pub max_boundary: usize,
    pub max_loops: usize,
}

impl GraphCaps {
    pub const LIMIT: GraphCaps = GraphCaps {
        max_bulk: 3,
        max_boundary: 2,
        max_loops: 1,
    };

    pub fn new(max_bulk: usize, max_boundary: usize, max_loops: usize) -> Result<GraphCaps> {
        let c = GraphCaps {
            max_bulk,
            max_boundary,
            max_loops,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let l = GraphCaps::LIMIT;
        if self.max_bulk == 0 || self.max_bulk > l.max_bulk || self.max_boundary > l.max_boundary || self.max_loops > l.max_loops {
            return invalid(format!(
                "graph caps ({}, {}, {}) exceed the supported ({}, {}, {})",
                self.max_bulk, self.max_boundary, self.max_loops, l.max_bulk, l.max_boundary, l.max_loops
            ));
        }
        Ok(())
    }
}

/// Allowed word lengths of the vertex functionals.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Valences {
    pub bulk: Vec<usize>,
    pub boundary: Vec<usize>,
}

/// A connected multigraph. Vertices are listed bulk first; edges are
/// normalized pairs `(u, v)` with `u ≤ v`, sorted, repeated for multi-edges.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GraphSpec {
    pub kinds: Vec<VertexKind>,
    /// External legs per vertex, evaluated on the field.
    pub legs: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
    /// `|Aut_V(Γ)| · Π_e m_e!`; the amplitude carries `1 / automorphisms`.
    pub automorphisms: u64,
}

impl GraphSpec {
    /// Builds a graph and computes its symmetry factor.
    pub fn new(kinds: Vec<VertexKind>, legs: Vec<usize>, edges: Vec<(usize, usize)>) -> Result<GraphSpec> {
        let mut edges: Vec<_> = edges.into_iter().map(|(u, v)| (u.min(v), u.max(v))).collect();
        edges.sort();
        let mut g = GraphSpec {
            kinds,
            legs,
            edges,
            automorphisms: 1,
        };
        g.validate_shape()?;
        g.automorphisms = g.count_automorphisms();
        Ok(g)
    }

    pub fn vertex_count(&self) -> usize {
        self.kinds.len()
    }

    pub fn bulk_count(&self) -> usize {
        self.kinds.iter().filter(|k| k.is_bulk()).count()
    }

    pub fn boundary_count(&self) -> usize {
        self.vertex_count() - self.bulk_count()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn loops(&self) -> usize {
        self.edges.len() + 1 - self.vertex_count()
    }

    /// Number of half-edges at `v`; a self-loop counts twice.
    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().map(|&(a, b)| (a == v) as usize + (b == v) as usize).sum()
    }

    /// Word length the vertex functional must have.
    pub fn valence(&self, v: usize) -> usize {
        self.degree(v) + self.legs[v]
    }

    pub fn is_connected(&self) -> bool {
        connected(self.vertex_count(), &self.edges)
    }

    /// Compact label such as `b2d0:e01,01:l1,1`.
    pub fn id(&self) -> String {
        let tag = |k: &VertexKind| match k {
            VertexKind::Bulk => 'b',
            VertexKind::Boundary0 => 'l',
            VertexKind::Boundary1 => 'r',
        };
        let kinds: String = self.kinds.iter().map(tag).collect();
        let edges: Vec<String> = self.edges.iter().map(|(u, v)| format!("{u}{v}")).collect();
        let legs: Vec<String> = self.legs.iter().map(|l| l.to_string()).collect();
        format!("{kinds}:e{}:l{}", edges.join(","), legs.join(","))
    }

    fn validate_shape(&self) -> Result<()> {
        let n = self.vertex_count();
        if n == 0 || self.legs.len() != n {
            return invalid("graph needs at least one vertex and one leg count per vertex");
        }
        if self.kinds[0] != VertexKind::Bulk || self.kinds.windows(2).any(|w| w[0] > w[1]) {
            return invalid("vertices must be ordered bulk first, then boundary");
        }
        for &(u, v) in &self.edges {
            if v >= n {
                return invalid(format!("edge ({u}, {v}) names a missing vertex"));
            }
            if !self.kinds[u].is_bulk() && !self.kinds[v].is_bulk() {
                return invalid(format!("edge ({u}, {v}) joins two boundary vertices"));
            }
        }
        Ok(())
    }

    /// Checks the conditions under which an amplitude is defined.
    pub fn validate(&self) -> Result<()> {
        self.validate_shape()?;
        if !self.is_connected() {
            return invalid(format!("graph {} is disconnected", self.id()));
        }
        for v in 0..self.vertex_count() {
            if self.kinds[v].is_bulk() && self.legs[v] == 0 {
                return invalid(format!("bulk vertex {v} of {} has no external leg", self.id()));
            }
        }
        if self.automorphisms != self.count_automorphisms() {
            return invalid(format!("graph {} carries a wrong symmetry factor", self.id()));
        }
        Ok(())
    }

    fn count_automorphisms(&self) -> u64 {
        let key = (self.legs.clone(), self.edges.clone());
        let mut aut = 0u64;
        for_each_class_perm(&self.kinds, &mut |p| {
            if permuted(self, p) == key {
                aut += 1;
            }
        });
        let mut mult = BTreeMap::<(usize, usize), u64>::new();
        for e in &self.edges {
            *mult.entry(*e).or_default() += 1;
        }
        aut * mult.values().map(|&m| (1..=m).product::<u64>()).product::<u64>()
    }

    fn canonical_key(&self) -> (Vec<usize>, Vec<(usize, usize)>) {
        let mut best: Option<(Vec<usize>, Vec<(usize, usize)>)> = None;
        for_each_class_perm(&self.kinds, &mut |p| {
            let k = permuted(self, p);
            if best.as_ref().is_none_or(|b| k < *b) {
                best = Some(k);
            }
        });
        best.expect("identity permutation")
    }
}

fn connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    for &(u, v) in edges {
        let (a, b) = (find(&mut parent, u), find(&mut parent, v));
        parent[a] = b;
    }
    let root = find(&mut parent, 0);
    (0..n).all(|v| find(&mut parent, v) == root)
}

/// Image of the graph data under a vertex relabeling `v ↦ p[v]`.
fn permuted(g: &GraphSpec, p: &[usize]) -> (Vec<usize>, Vec<(usize, usize)>) {
    let mut legs = vec![0; g.legs.len()];
    for (v, &l) in g.legs.iter().enumerate() {
        legs[p[v]] = l;
    }
    let mut edges: Vec<_> = g
        .edges
        .iter()
        .map(|&(u, v)| (p[u].min(p[v]), p[u].max(p[v])))
        .collect();
    edges.sort();
    (legs, edges)
}

/// Calls `f` on every permutation preserving the vertex kinds.
fn for_each_class_perm(kinds: &[VertexKind], f: &mut dyn FnMut(&[usize])) {
    let n = kinds.len();
    let mut p: Vec<usize> = (0..n).collect();
    fn rec(i: usize, p: &mut Vec<usize>, kinds: &[VertexKind], f: &mut dyn FnMut(&[usize])) {
        if i == p.len() {
            f(p);
            return;
        }
        for j in i..p.len() {
            if kinds[p[j]] != kinds[i] {
                continue;
            }
            p.swap(i, j);
            rec(i + 1, p, kinds, f);
            p.swap(i, j);
        }
    }
    rec(0, &mut p, kinds, f);
}

/// Multisets of size `k` drawn from `0..n`, nondecreasing.
fn multisets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// All connected graphs within `caps` whose vertex valences occur in
/// `valences`, up to isomorphism, in a deterministic order.
///
/// `endpoints` lists the boundary kinds available (empty for a closed
/// bulk computation, `[Boundary0]` on the half-line, both on the interval).
pub fn enumerate_graphs(caps: GraphCaps, valences: &Valences, endpoints: &[VertexKind]) -> Result<Vec<GraphSpec>> {
    caps.validate()?;
    if endpoints.iter().any(|k| k.is_bulk()) {
        return invalid("endpoint kinds must be boundary kinds");
    }
    let mut ends = endpoints.to_vec();
    ends.sort();
    ends.dedup();
    let max_boundary = if ends.is_empty() || valences.boundary.is_empty() {
        0
    } else {
        caps.max_boundary
    };
    let mut found = BTreeMap::new();
    for nb in 1..=caps.max_bulk {
        for nd in 0..=max_boundary {
            for choice in multisets(ends.len(), nd) {
                let mut kinds = vec![VertexKind::Bulk; nb];
                kinds.extend(choice.iter().map(|&i| ends[i]));
                let n = kinds.len();
                let slots: Vec<(usize, usize)> = (0..n)
                    .flat_map(|u| (u..n).map(move |v| (u, v)))
                    .filter(|&(u, v)| kinds[u].is_bulk() && (u != v || kinds[v].is_bulk()))
                    .collect();
                for e in n - 1..=n - 1 + caps.max_loops {
                    for pick in multisets(slots.len(), e) {
                        let edges: Vec<_> = pick.iter().map(|&i| slots[i]).collect();
                        if !connected(n, &edges) {
                            continue;
                        }
                        assign_legs(&kinds, &edges, valences, &mut found);
                    }
                }
            }
        }
    }
    Ok(found.into_values().collect())
}

type SortKey = (usize, usize, usize, Vec<VertexKind>, Vec<usize>, Vec<(usize, usize)>);

fn assign_legs(
    kinds: &[VertexKind],
    edges: &[(usize, usize)],
    valences: &Valences,
    found: &mut BTreeMap<SortKey, GraphSpec>,
) {
    let n = kinds.len();
    let deg: Vec<usize> = (0..n)
        .map(|v| edges.iter().map(|&(a, b)| (a == v) as usize + (b == v) as usize).sum())
        .collect();
    let options: Vec<Vec<usize>> = (0..n)
        .map(|v| {
            let (lens, min_legs) = if kinds[v].is_bulk() {
                (&valences.bulk, 1)
            } else {
                (&valences.boundary, 0)
            };
            let mut o: Vec<usize> = lens
                .iter()
                .filter(|&&l| l >= deg[v] + min_legs)
                .map(|&l| l - deg[v])
                .collect();
            o.sort();
            o.dedup();
            o
        })
        .collect();
    if options.iter().any(|o| o.is_empty()) {
        return;
    }
    let mut idx = vec![0usize; n];
    loop {
        let legs: Vec<usize> = (0..n).map(|v| options[v][idx[v]]).collect();
        let g = GraphSpec {
            kinds: kinds.to_vec(),
            legs,
            edges: edges.to_vec(),
            automorphisms: 1,
        };
        let (legs, edges) = g.canonical_key();
        let key = (
            g.bulk_count(),
            g.boundary_count(),
            edges.len(),
            kinds.to_vec(),
            legs.clone(),
            edges.clone(),
        );
        found.entry(key).or_insert_with(|| {
            let mut c = GraphSpec {
                kinds: kinds.to_vec(),
                legs,
                edges,
                automorphisms: 1,
            };
            c.automorphisms = c.count_automorphisms();
            c
        });
        let mut v = 0;
        loop {
            if v == n {
                return;
            }
            idx[v] += 1;
            if idx[v] < options[v].len() {
                break;
            }
            idx[v] = 0;
            v += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cubic() -> Valences {
        Valences {
            bulk: vec![3],
            boundary: vec![],
        }
    }

    #[test]
    fn single_vertex_with_one_leg() {
        let v = Valences {
            bulk: vec![1],
            boundary: vec![],
        };
        let gs = enumerate_graphs(GraphCaps::new(1, 0, 0).unwrap(), &v, &[]).unwrap();
        assert_eq!(gs.len(), 1);
        assert_eq!(gs[0].legs, vec![1]);
        assert!(gs[0].edges.is_empty());
        assert_eq!(gs[0].automorphisms, 1);
    }

    #[test]
    fn cubic_graphs_and_symmetry() {
        let gs = enumerate_graphs(GraphCaps::new(2, 0, 1).unwrap(), &cubic(), &[]).unwrap();
        let ids: Vec<String> = gs.iter().map(|g| g.id()).collect();
        // bare vertex, tadpole, one-edge tree, double edge
        assert_eq!(ids.len(), 4, "{ids:?}");
        assert!(gs.iter().any(|g| g.edges.is_empty() && g.legs == vec![3]));
        let tree = gs.iter().find(|g| g.edges == vec![(0, 1)]).unwrap();
        assert_eq!(tree.automorphisms, 2);
        let bubble = gs.iter().find(|g| g.edges == vec![(0, 1), (0, 1)]).unwrap();
        assert_eq!(bubble.automorphisms, 4);
        let tad = gs.iter().find(|g| g.edges == vec![(0, 0)]).unwrap();
        assert_eq!(tad.automorphisms, 1);
    }

    #[test]
    fn chain_has_reflection_symmetry() {
        let gs = enumerate_graphs(GraphCaps::new(3, 0, 0).unwrap(), &cubic(), &[]).unwrap();
        let chain = gs.iter().find(|g| g.bulk_count() == 3).unwrap();
        assert_eq!(chain.automorphisms, 2);
        assert_eq!(chain.legs.iter().sum::<usize>(), 5);
    }

    #[test]
    fn caps_are_enforced() {
        assert!(GraphCaps::new(4, 0, 0).is_err());
        assert!(GraphCaps::new(1, 0, 2).is_err());
    }

    #[test]
    fn invalid_graphs_are_rejected() {
        let g = GraphSpec::new(vec![VertexKind::Bulk, VertexKind::Bulk], vec![1, 1], vec![]).unwrap();
        assert!(g.validate().is_err());
        let g = GraphSpec::new(vec![VertexKind::Bulk], vec![0], vec![(0, 0)]).unwrap();
        assert!(g.validate().is_err());
        assert!(GraphSpec::new(
            vec![VertexKind::Bulk, VertexKind::Boundary0, VertexKind::Boundary0],
            vec![1, 0, 0],
            vec![(1, 2), (0, 1)]
        )
        .is_err());
    }

    #[test]
    fn boundary_vertices_attach_to_bulk() {
        let v = Valences {
            bulk: vec![3],
            boundary: vec![1, 2],
        };
        let gs = enumerate_graphs(GraphCaps::new(1, 2, 0).unwrap(), &v, &[VertexKind::Boundary0]).unwrap();
        for g in &gs {
            g.validate().unwrap();
            assert!(g.edges.iter().all(|&(u, _)| g.kinds[u].is_bulk()));
        }
        // single vertex, one boundary vertex with 0 or 1 legs, two boundary vertices
        assert!(gs.iter().any(|g| g.boundary_count() == 2 && g.automorphisms == 2));
    }
}
