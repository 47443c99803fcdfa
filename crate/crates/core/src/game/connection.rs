use std::collections::HashMap;

use super::ModMGame;

/// Support tuples joined when they differ in exactly one coordinate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectionGraph {
    pub vertices: Vec<Vec<usize>>,
    /// Index pairs `(a, b)` with `a < b`, sorted.
    pub edges: Vec<(usize, usize)>,
}

impl ConnectionGraph {
    /// Connected components as sorted vertex index lists, ordered by their
    /// smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.vertices.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut v: usize) -> usize {
            while parent[v] != v {
                parent[v] = parent[parent[v]];
                v = parent[v];
            }
            v
        }
        for &(a, b) in &self.edges {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut slot: HashMap<usize, usize> = HashMap::new();
        for v in 0..n {
            let r = find(&mut parent, v);
            let i = *slot.entry(r).or_insert_with(|| {
                groups.push(Vec::new());
                groups.len() - 1
            });
            groups[i].push(v);
        }
        groups
    }

    pub fn neighbours(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }
}

pub fn connection_graph(game: &ModMGame) -> ConnectionGraph {
    graph_of_tuples(game.support().iter().map(|e| e.x.clone()).collect())
}

/// Connection graph of an arbitrary list of distinct tuples.
pub fn graph_of_tuples(vertices: Vec<Vec<usize>>) -> ConnectionGraph {
    let t = vertices.first().map_or(0, |v| v.len());
    let mut edges = Vec::new();
    for c in 0..t {
        let mut groups: HashMap<Vec<usize>, Vec<usize>> = HashMap::new();
        for (i, x) in vertices.iter().enumerate() {
            let mut key = x.clone();
            key.remove(c);
            groups.entry(key).or_default().push(i);
        }
        for members in groups.values() {
            for (p, &a) in members.iter().enumerate() {
                for &b in &members[p + 1..] {
                    edges.push((a.min(b), a.max(b)));
                }
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    ConnectionGraph { vertices, edges }
}

pub fn is_connected(graph: &ConnectionGraph) -> bool {
    graph.components().len() <= 1
}

/// True when the support is the full product of the question sets.
pub fn is_total(game: &ModMGame) -> bool {
    let full = (0..game.players()).try_fold(1usize, |acc, j| acc.checked_mul(game.question_count(j)));
    full == Some(game.support().len())
}
