//! Integration-by-parts rewrite rules.
//!
//! Pair contraction: for the two `Φ₁`-carrying vertices `x₁`, `x₂` of a class-2
//! term (insertions `A`, `B` with `m_B` extra `:Φ²:` factors),
//!
//! `E[A(x₁)B(x₂)Π] = (1 + 2m_B/N) C(x₁−x₂) E[Ā B̄ Π]
//!                  + Σ_j 2 C(x₁−y_j) E[Ā B Φ₁(y_j) Π_{≠j}]
//!                  − N⁻¹ ∫ C(x₁−z) E[Ā B Π :Φ₁Φ²:(z)] dz`,
//!
//! where bars remove one `Φ₁` leg and `y_j` runs over the `:Φ²:` vertices.
//! Square removal at a `:Φ²:` vertex `y` of a class-1 term:
//!
//! `E[:Φ²:(y)Π] = 2N Σ_j C(y−y_j) E[Φ₁(y)Φ₁(y_j)Π_{≠j}] − ∫ C(y−z) E[Φ₁(y) Π :Φ₁Φ²:(z)] dz`,
//!
//! followed by a pair contraction at `y`. One of the produced terms is
//! `−C²∗` of the input; it is moved to the left and inverted with `K`.

use super::{check, EdgeKind, IbpGraph, Insertion, ParityClass, Role};
use crate::error::{Error, Result};

/// Pair contraction with `x1` as the integration-by-parts point. The first
/// returned term is always the leading `C`-joined term.
fn contract(g: &IbpGraph, x1: usize, x2: usize) -> Vec<IbpGraph> {
    let mut out = Vec::new();
    let b_mixed = g.vertices[x2].field == Insertion::Mixed;

    let mut sigma = g.clone();
    sigma.add_edge(x1, x2, EdgeKind::C);
    sigma.vertices[x1].field = sigma.vertices[x1].field.lowered();
    sigma.vertices[x2].field = sigma.vertices[x2].field.lowered();
    if b_mixed {
        out.push(sigma.clone());
        out.push(sigma.scaled(2, 2));
    } else {
        out.push(sigma);
    }

    let mut base = g.clone();
    base.vertices[x1].field = base.vertices[x1].field.lowered();
    for v in 0..g.vertices.len() {
        if v == x1 || v == x2 || g.vertices[v].field != Insertion::Square {
            continue;
        }
        let mut t = base.clone();
        t.add_edge(x1, v, EdgeKind::C);
        t.vertices[v].field = Insertion::Phi1;
        out.push(t.scaled(2, 1));
    }

    let mut t = base;
    let z = t.add_vertex(Role::Internal, Insertion::Mixed);
    t.add_edge(x1, z, EdgeKind::C);
    out.push(t.scaled(-1, 1));
    out
}

fn distinguished_square(g: &IbpGraph) -> Option<usize> {
    let squares = |pred: &dyn Fn(Role) -> bool| {
        (0..g.vertices.len())
            .filter(|&v| g.vertices[v].field == Insertion::Square && pred(g.vertices[v].role))
            .min_by_key(|&v| (g.vertices[v].role, v))
    };
    squares(&|r| matches!(r, Role::Special(_))).or_else(|| squares(&|r| r == Role::Internal))
}

fn require_class(g: &IbpGraph, class: ParityClass) -> Result<()> {
    check(g)?;
    if g.parity_class() != Some(class) {
        return Err(Error::InvalidGraph(format!("expected {class:?}, got {}", g.signature())));
    }
    Ok(())
}

/// Right-hand side of the square-removal identity at vertex `u`, before the
/// resolvent is applied. The field at `u` is moved to a fresh resolvent vertex
/// `y` joined to `u` by a `K`-edge, and the identity is written at `y`.
/// Returns `(terms, convolution_index)`, where `terms[convolution_index]` is
/// the leading `−C²∗` term.
pub fn class1_identity(g: &IbpGraph, u: usize) -> Result<(Vec<IbpGraph>, usize)> {
    require_class(g, ParityClass::Class1)?;
    if g.vertices[u].field != Insertion::Square {
        return Err(Error::InvalidGraph(format!("vertex {u} carries no :Φ²:")));
    }
    let mut base = g.clone();
    base.vertices[u].field = Insertion::None;
    let y = base.add_vertex(Role::Resolvent, Insertion::Phi1);
    base.add_edge(u, y, EdgeKind::K);

    let mut terms = Vec::new();
    for v in 0..g.vertices.len() {
        if v == u || g.vertices[v].field != Insertion::Square {
            continue;
        }
        let mut t = base.clone();
        t.add_edge(y, v, EdgeKind::C);
        t.vertices[v].field = Insertion::Phi1;
        terms.extend(contract(&t.scaled(2, 0), y, v));
    }
    let mut t = base;
    let z = t.add_vertex(Role::Internal, Insertion::Mixed);
    t.add_edge(y, z, EdgeKind::C);
    let conv = terms.len();
    terms.extend(contract(&t.scaled(-1, 0), y, z));
    Ok((terms, conv))
}

/// Removes one `:Φ²:` from a class-1 term: the leading `−C²∗` term is inverted
/// through `K`, leaving pairings at the same order, class-2 terms with an extra
/// `N^{-1/2}` and class-1 terms with an extra `N⁻¹`.
pub fn rewrite_class1(g: &IbpGraph) -> Result<Vec<IbpGraph>> {
    require_class(g, ParityClass::Class1)?;
    let u = distinguished_square(g)
        .ok_or_else(|| Error::InvalidGraph("class-1 term without :Φ²: vertex".into()))?;
    let (mut terms, conv) = class1_identity(g, u)?;
    terms.remove(conv);
    Ok(terms)
}

/// Contracts the two odd vertices of a class-2 term.
pub fn rewrite_class2(g: &IbpGraph) -> Result<Vec<IbpGraph>> {
    require_class(g, ParityClass::Class2)?;
    let odd = g.odd_vertices();
    let (x1, x2) = if g.vertices[odd[0]].field == Insertion::Phi1 || g.vertices[odd[1]].field != Insertion::Phi1 {
        (odd[0], odd[1])
    } else {
        (odd[1], odd[0])
    };
    Ok(contract(g, x1, x2))
}

/// Replaces a lone `:Φ²:` expectation, the only remaining field of a class-1
/// term, by its integration-by-parts expression: a pair of `:Φ₁Φ²:` vertices
/// one order higher, plus a `N⁻¹` copy of the input.
pub fn tadpole_substitute(g: &IbpGraph) -> Result<Vec<IbpGraph>> {
    require_class(g, ParityClass::Class1)?;
    if g.n_phi() != 2 {
        return Err(Error::InvalidGraph(format!("no isolated :Φ²: in {}", g.signature())));
    }
    rewrite_class1(g)
}

#[cfg(test)]
mod tests {
    use super::super::{validate, Edge};
    use super::*;
    use num_rational::Rational64;

    fn r(n: i64) -> Rational64 {
        Rational64::from_integer(n)
    }

    #[test]
    fn two_point_identity_matches_limiting_recursion() {
        // n = (1,1): E + (1 + 2/N) C²∗E = 2 C² E_pair + N^{-1/2}(…)
        let g = IbpGraph::start(2);
        let (terms, conv) = class1_identity(&g, 0).unwrap();
        let c = &terms[conv];
        assert_eq!((c.coefficient, c.power), (r(-1), 0));
        let moved: Vec<_> = terms
            .iter()
            .filter(|t| t.vertices.iter().any(|v| v.role == Role::Internal && v.field == Insertion::Square))
            .map(|t| (t.coefficient, t.power))
            .collect();
        assert_eq!(moved, vec![(r(-1), 0), (r(-2), 2)]);
        let closed: Vec<_> = terms.iter().filter(|t| t.is_closed()).collect();
        assert_eq!(closed.len(), 1);
        assert_eq!((closed[0].coefficient, closed[0].power), (r(2), 0));
        for t in &terms {
            assert!(validate(t), "{t}");
            assert!(t.power == 0 || t.power == 1 || t.power == 2);
        }
    }

    #[test]
    fn pairings_of_four_points() {
        let out = rewrite_class1(&IbpGraph::start(4)).unwrap();
        let lead: Vec<_> = out.iter().filter(|t| t.power == 0).collect();
        assert_eq!(lead.len(), 3);
        for t in lead {
            assert_eq!(t.coefficient, r(2));
            assert_eq!(t.n_phi(), 4);
            assert_eq!(t.parity_class(), Some(ParityClass::Class1));
        }
    }

    #[test]
    fn parity_of_pair_count_flips_exactly_on_half_orders() {
        for k in 1..=4 {
            let g = IbpGraph::start(k);
            for t in rewrite_class1(&g).unwrap() {
                assert!(validate(&t));
                let flipped = (t.n_g() + g.n_g()) % 2 == 1;
                assert_eq!(flipped, (t.power - g.power) % 2 == 1, "{t}");
            }
        }
    }

    fn mixed_pair_graph() -> IbpGraph {
        let mut g = IbpGraph::start(1);
        g.vertices[0].field = Insertion::None;
        let z1 = g.add_vertex(Role::Internal, Insertion::Mixed);
        let z2 = g.add_vertex(Role::Internal, Insertion::Mixed);
        g.add_edge(0, z1, EdgeKind::C);
        g.add_edge(0, z2, EdgeKind::C);
        g
    }

    #[test]
    fn contraction_joins_mixed_vertices() {
        let g = mixed_pair_graph();
        let out = rewrite_class2(&g).unwrap();
        let sigma = &out[0];
        assert!(sigma.edges.contains(&Edge::new(1, 2, EdgeKind::C)));
        assert_eq!(sigma.n_phi(), g.n_phi() - 2);
        assert_eq!(sigma.parity_class(), Some(ParityClass::Class1));
        assert_eq!((sigma.coefficient, sigma.power), (r(1), 0));
        assert_eq!((out[1].coefficient, out[1].power), (r(2), 2));
        for t in &out {
            assert!(validate(t));
        }
    }

    #[test]
    fn tadpole_produces_mixed_pair_at_half_order() {
        let out = tadpole_substitute(&IbpGraph::start(1)).unwrap();
        assert!(out.iter().all(|t| t.power >= 1));
        let lead: Vec<_> = out.iter().filter(|t| t.power == 1).collect();
        assert_eq!(lead.len(), 1);
        let t = lead[0];
        assert_eq!(t.coefficient, r(1));
        // contracting the K-edge gives x joined by C to two :Φ₁Φ²: vertices
        let mixed = t.vertices.iter().filter(|v| v.field == Insertion::Mixed).count();
        assert_eq!((mixed, t.c_edges().count(), t.k_edges().count()), (2, 2, 1));
        let rest: Vec<_> = out.iter().filter(|t| t.power > 1).collect();
        assert!(rest.iter().all(|t| t.power >= 2));
        assert!(tadpole_substitute(&IbpGraph::start(2)).is_err());
    }

    #[test]
    fn wrong_class_is_rejected() {
        assert!(rewrite_class2(&IbpGraph::start(2)).is_err());
        assert!(rewrite_class1(&mixed_pair_graph()).is_err());
    }
}
