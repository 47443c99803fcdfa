//! Hypergraph norms of XOR game tensors and classical strategies extracted
//! from them.
//!
//! `H(t)` is the t-partite t-uniform hypergraph obtained from a single edge
//! by gluing two copies along each part in turn. Its vertices are
//! `v^i_w` with `i` a part and `w` a t-bit string; doubling along part `j`
//! copies every edge with bit `j` of `w` flipped in every column except
//! column `j`.

mod tensor;

use std::collections::HashMap;

use crate::error::{Error, Result};

pub use tensor::{
    extract_classical_strategy, hypergraph_norm, hypergraph_norm_with, strategy_bias, tensor_from_json, tensor_to_json,
    ExtractedStrategy, GameTensor, NormValue, DEFAULT_BUDGET,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hypergraph {
    /// Vertex labels of each part.
    pub parts: Vec<Vec<String>>,
    /// Each edge lists one vertex index per part.
    pub edges: Vec<Vec<usize>>,
}

impl Hypergraph {
    pub fn t(&self) -> usize {
        self.parts.len()
    }

    /// Indices of the edges containing vertex `v` of part `i`.
    pub fn edges_at(&self, i: usize, v: usize) -> Vec<usize> {
        self.edges.iter().enumerate().filter(|(_, e)| e[i] == v).map(|(k, _)| k).collect()
    }
}

fn bits(w: u32, t: usize) -> String {
    (0..t).map(|j| if w >> j & 1 == 1 { '1' } else { '0' }).collect()
}

/// Builds `H(t)` in table order: the starting edge, then the copies made by
/// doubling along parts `t, t-1, ..., 1`.
pub fn build_ht(t: usize) -> Result<Hypergraph> {
    if t < 2 {
        return Err(Error::InvalidParameter(format!("H(t) needs t >= 2, got {t}")));
    }
    if t > 20 {
        return Err(Error::InvalidParameter(format!("t = {t} is too large")));
    }
    // rows of bit strings, one per column; bit j-1 stores position j
    let mut rows: Vec<Vec<u32>> = vec![vec![0; t]];
    for j in (0..t).rev() {
        let copies: Vec<Vec<u32>> = rows
            .iter()
            .map(|r| r.iter().enumerate().map(|(i, &w)| if i == j { w } else { w ^ (1 << j) }).collect())
            .collect();
        rows.extend(copies);
    }
    let mut ids: Vec<HashMap<u32, usize>> = vec![HashMap::new(); t];
    let mut parts: Vec<Vec<String>> = vec![Vec::new(); t];
    let edges = rows
        .iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .map(|(i, &w)| {
                    *ids[i].entry(w).or_insert_with(|| {
                        parts[i].push(format!("v{}_{}", i + 1, bits(w, t)));
                        parts[i].len() - 1
                    })
                })
                .collect()
        })
        .collect();
    Ok(Hypergraph { parts, edges })
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HtReport {
    pub partite: bool,
    pub two_regular: bool,
    pub disjoint_neighbours: bool,
    pub violations: Vec<String>,
}

impl HtReport {
    pub fn all_hold(&self) -> bool {
        self.partite && self.two_regular && self.disjoint_neighbours
    }
}

/// Checks that the hypergraph is t-partite and t-uniform, that every vertex
/// lies in exactly two edges, and the disjointness property: for a vertex
/// `v` in edges `e != e'` and any other vertex `w` of `e` lying in
/// `e != e''`, the edges `e'` and `e''` share no vertex.
pub fn verify_ht_properties(h: &Hypergraph) -> HtReport {
    let t = h.t();
    let mut report = HtReport { partite: true, two_regular: true, disjoint_neighbours: true, violations: Vec::new() };
    for (k, e) in h.edges.iter().enumerate() {
        if e.len() != t || e.iter().enumerate().any(|(i, &v)| v >= h.parts[i].len()) {
            report.partite = false;
            report.violations.push(format!("edge {k} does not have one vertex in each of the {t} parts"));
        }
    }
    if !report.partite {
        report.two_regular = false;
        report.disjoint_neighbours = false;
        return report;
    }
    let incident: Vec<Vec<Vec<usize>>> =
        (0..t).map(|i| (0..h.parts[i].len()).map(|v| h.edges_at(i, v)).collect()).collect();
    for i in 0..t {
        for (v, es) in incident[i].iter().enumerate() {
            if es.len() != 2 {
                report.two_regular = false;
                report.violations.push(format!("vertex {} has degree {}", h.parts[i][v], es.len()));
            }
        }
    }
    if !report.two_regular {
        report.disjoint_neighbours = false;
        return report;
    }
    let other = |i: usize, v: usize, e: usize| -> usize {
        let es = &incident[i][v];
        if es[0] == e {
            es[1]
        } else {
            es[0]
        }
    };
    for i in 0..t {
        for (v, es) in incident[i].iter().enumerate() {
            for &e in es {
                let e1 = other(i, v, e);
                for j in (0..t).filter(|&j| j != i) {
                    let w = h.edges[e][j];
                    let e2 = other(j, w, e);
                    if (0..t).any(|k| h.edges[e1][k] == h.edges[e2][k]) {
                        report.disjoint_neighbours = false;
                        report.violations.push(format!(
                            "edges {e1} and {e2} (through {} and {}) intersect",
                            h.parts[i][v], h.parts[j][w]
                        ));
                    }
                }
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_player_table() {
        let h = build_ht(2).unwrap();
        assert_eq!(h.parts[0], vec!["v1_00", "v1_01"]);
        assert_eq!(h.parts[1], vec!["v2_00", "v2_10"]);
        assert_eq!(h.edges, vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![1, 1]]);
    }

    #[test]
    fn sizes_and_properties() {
        for t in 2..=6 {
            let h = build_ht(t).unwrap();
            assert_eq!(h.edges.len(), 1 << t);
            assert!(h.parts.iter().all(|p| p.len() == 1 << (t - 1)));
            let r = verify_ht_properties(&h);
            assert!(r.all_hold(), "t={t}: {:?}", r.violations);
        }
        assert!(build_ht(1).is_err());
    }

    #[test]
    fn detects_violations() {
        let mut h = build_ht(2).unwrap();
        h.edges.push(h.edges[0].clone());
        let r = verify_ht_properties(&h);
        assert!(r.partite && !r.two_regular);

        let single = Hypergraph { parts: vec![vec!["a".into()], vec!["b".into()]], edges: vec![vec![0, 0]] };
        let r = verify_ht_properties(&single);
        assert!(!r.two_regular);
        assert_eq!(r.violations.len(), 2);

        let bad = Hypergraph { parts: vec![vec!["a".into()], vec!["b".into()]], edges: vec![vec![0, 3]] };
        assert!(!verify_ht_properties(&bad).partite);
    }

    #[test]
    fn doubled_edge_fails_disjointness() {
        // two parallel edges: 2-regular, but the neighbouring edges coincide
        let h = Hypergraph { parts: vec![vec!["a".into()], vec!["x".into()]], edges: vec![vec![0, 0], vec![0, 0]] };
        let r = verify_ht_properties(&h);
        assert!(r.two_regular);
        assert!(!r.disjoint_neighbours);
    }
}
