//! Canonical relabeling of graph terms, so that isomorphic terms compare equal.
//! Colour refinement followed by individualization of the first tied class,
//! keeping the smallest certificate.

use std::collections::BTreeMap;

use super::{Edge, EdgeKind, IbpGraph, Vertex};

type Certificate = (Vec<Vertex>, Vec<Edge>);

fn adjacency(g: &IbpGraph) -> Vec<BTreeMap<(usize, EdgeKind), usize>> {
    let mut adj = vec![BTreeMap::new(); g.vertices.len()];
    for e in &g.edges {
        *adj[e.a].entry((e.b, e.kind)).or_insert(0) += 1;
        *adj[e.b].entry((e.a, e.kind)).or_insert(0) += 1;
    }
    adj
}

/// Replaces colours by ranks of (colour, neighbourhood multiset) until stable.
fn refine(colors: &mut Vec<usize>, adj: &[BTreeMap<(usize, EdgeKind), usize>]) {
    loop {
        let sigs: Vec<(usize, Vec<(EdgeKind, usize, usize)>)> = (0..colors.len())
            .map(|v| {
                let mut nb: Vec<_> =
                    adj[v].iter().map(|(&(w, kind), &mult)| (kind, mult, colors[w])).collect();
                nb.sort();
                (colors[v], nb)
            })
            .collect();
        let mut uniq = sigs.clone();
        uniq.sort();
        uniq.dedup();
        let new: Vec<usize> = sigs.iter().map(|s| uniq.binary_search(s).unwrap()).collect();
        let before = distinct(colors);
        *colors = new;
        if distinct(colors) == before {
            return;
        }
    }
}

fn distinct(colors: &[usize]) -> usize {
    let mut c = colors.to_vec();
    c.sort();
    c.dedup();
    c.len()
}

fn certificate(g: &IbpGraph, colors: &[usize]) -> Certificate {
    let mut order: Vec<usize> = (0..colors.len()).collect();
    order.sort_by_key(|&v| colors[v]);
    let mut pos = vec![0; colors.len()];
    for (p, &v) in order.iter().enumerate() {
        pos[v] = p;
    }
    let vertices = order.iter().map(|&v| g.vertices[v]).collect();
    let mut edges: Vec<Edge> = g.edges.iter().map(|e| Edge::new(pos[e.a], pos[e.b], e.kind)).collect();
    edges.sort();
    (vertices, edges)
}

fn search(
    g: &IbpGraph,
    adj: &[BTreeMap<(usize, EdgeKind), usize>],
    colors: Vec<usize>,
    best: &mut Option<Certificate>,
) {
    let n = colors.len();
    let mut counts = vec![0; n];
    for &c in &colors {
        counts[c] += 1;
    }
    let Some(target) = (0..n).find(|&c| counts[c] > 1) else {
        let cert = certificate(g, &colors);
        if best.as_ref().is_none_or(|b| cert < *b) {
            *best = Some(cert);
        }
        return;
    };
    for v in 0..n {
        if colors[v] != target {
            continue;
        }
        // individualize v: shift every colour above the target class up by one
        let mut c: Vec<usize> = colors.iter().map(|&x| if x > target { 2 * x + 1 } else { 2 * x }).collect();
        for w in 0..n {
            if colors[w] == target && w != v {
                c[w] = 2 * target + 1;
            }
        }
        refine(&mut c, adj);
        search(g, adj, c, best);
    }
}

/// Isomorphism-invariant relabeling; coefficient and power are kept.
pub fn canonical(g: &IbpGraph) -> IbpGraph {
    let adj = adjacency(g);
    let mut init: Vec<Vertex> = g.vertices.clone();
    init.sort();
    init.dedup();
    let mut colors: Vec<usize> = g.vertices.iter().map(|v| init.binary_search(v).unwrap()).collect();
    refine(&mut colors, &adj);
    let mut best = None;
    search(g, &adj, colors, &mut best);
    let (vertices, edges) = best.expect("search visits at least one leaf");
    IbpGraph { vertices, edges, coefficient: g.coefficient, power: g.power }
}
