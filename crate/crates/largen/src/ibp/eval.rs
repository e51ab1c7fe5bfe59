//! Numerical evaluation of closed graph terms on the lattice.
//!
//! Integrated vertices with at most two neighbours are removed by kernel
//! composition; the few that remain are pinned site by site and the rest of
//! the graph is reduced again.

use super::{EdgeKind, IbpGraph, Role};
use crate::error::{Error, Result};
use crate::kernels::KernelSet;
use crate::lattice::{convolve, ScalarLattice};
use crate::oracle::Point;

/// Limits on the direct summation over vertices that cannot be eliminated by
/// composition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalGuard {
    pub max_residual: usize,
    pub max_side: usize,
}

impl Default for EvalGuard {
    fn default() -> Self {
        Self { max_residual: 3, max_side: 32 }
    }
}

#[derive(Clone)]
struct Work {
    /// `Some` for fixed vertices, `None` for integrated ones.
    position: Vec<Option<Point>>,
    alive: Vec<bool>,
    /// Product of the edges from an integrated vertex to fixed vertices.
    weight: Vec<Option<ScalarLattice>>,
    /// Edges between integrated vertices, plus unsettled edges to fixed ones.
    edges: Vec<(usize, usize, ScalarLattice)>,
    factor: f64,
}

fn multiply_into(slot: &mut Option<ScalarLattice>, f: ScalarLattice) {
    *slot = Some(match slot.take() {
        Some(w) => w.zip_with(&f, |p, q| p * q).expect("same lattice"),
        None => f,
    });
}

/// `z ↦ f(p − z)` for an even kernel `f`.
fn centered_at(f: &ScalarLattice, p: Point) -> ScalarLattice {
    let n = f.spec.side() as i64;
    let mut out = ScalarLattice::zeros(f.spec);
    for i in 0..n {
        for j in 0..n {
            out.values[f.spec.index(i, j)] = f.at(p.0 - i, p.1 - j);
        }
    }
    out
}

impl Work {
    fn integrated(&self) -> Vec<usize> {
        (0..self.alive.len()).filter(|&v| self.alive[v] && self.position[v].is_none()).collect()
    }

    fn merge_parallel(&mut self) {
        let mut merged: Vec<(usize, usize, ScalarLattice)> = Vec::new();
        for (a, b, f) in self.edges.drain(..) {
            let (a, b) = (a.min(b), a.max(b));
            match merged.iter_mut().find(|(x, y, _)| (*x, *y) == (a, b)) {
                Some(e) => e.2 = e.2.zip_with(&f, |p, q| p * q).expect("same lattice"),
                None => merged.push((a, b, f)),
            }
        }
        self.edges = merged;
    }

    /// Evaluates edges between fixed vertices and folds edges from fixed to
    /// integrated vertices into vertex weights.
    fn settle_fixed_edges(&mut self) {
        for (a, b, f) in std::mem::take(&mut self.edges) {
            match (self.position[a], self.position[b]) {
                (Some(p), Some(q)) => self.factor *= f.at(p.0 - q.0, p.1 - q.1),
                (Some(p), None) => multiply_into(&mut self.weight[b], centered_at(&f, p)),
                (None, Some(q)) => multiply_into(&mut self.weight[a], centered_at(&f, q)),
                (None, None) => self.edges.push((a, b, f)),
            }
        }
    }

    fn incident(&self, v: usize) -> Vec<usize> {
        (0..self.edges.len()).filter(|&e| self.edges[e].0 == v || self.edges[e].1 == v).collect()
    }

    /// Removes one integrated vertex that kernel composition can eliminate;
    /// false if there is none.
    fn eliminate_one(&mut self) -> Result<bool> {
        for v in self.integrated() {
            let incident = self.incident(v);
            let other = |e: &(usize, usize, ScalarLattice)| if e.0 == v { e.1 } else { e.0 };
            match (incident.len(), self.weight[v].is_some()) {
                (0, _) => {
                    if let Some(w) = &self.weight[v] {
                        self.factor *= w.integral();
                    }
                }
                (1, _) => {
                    let e = self.edges.remove(incident[0]);
                    let u = other(&e);
                    match self.weight[v].take() {
                        Some(w) => multiply_into(&mut self.weight[u], convolve(&e.2, &w)?),
                        None => self.factor *= e.2.integral(),
                    }
                }
                (2, false) => {
                    let e2 = self.edges.remove(incident[1]);
                    let e1 = self.edges.remove(incident[0]);
                    let h = convolve(&e1.2, &e2.2)?;
                    self.edges.push((other(&e1), other(&e2), h));
                }
                _ => continue,
            }
            self.alive[v] = false;
            self.weight[v] = None;
            return Ok(true);
        }
        Ok(false)
    }

    fn reduce(&mut self) -> Result<()> {
        loop {
            self.merge_parallel();
            self.settle_fixed_edges();
            if !self.eliminate_one()? {
                return Ok(());
            }
        }
    }

    fn value(mut self, guard: EvalGuard, side: usize) -> Result<f64> {
        self.reduce()?;
        let rest = self.integrated();
        let Some(&pin) = rest.iter().max_by_key(|&&v| (self.incident(v).len(), std::cmp::Reverse(v))) else {
            return Ok(self.factor);
        };
        if rest.len() > guard.max_residual || side > guard.max_side {
            return Err(Error::SizeGuard(format!(
                "{} vertices left for direct summation on a {side}x{side} grid",
                rest.len()
            )));
        }
        let eps2 = 1.0 / (side * side) as f64;
        let mut total = 0.0;
        for i in 0..side as i64 {
            for j in 0..side as i64 {
                let mut w = self.clone();
                w.position[pin] = Some((i, j));
                if let Some(weight) = w.weight[pin].take() {
                    w.factor *= weight.at(i, j);
                }
                total += w.value(guard, side)?;
            }
        }
        Ok(eps2 * total)
    }
}

fn integrate(g: &IbpGraph, kernels: &KernelSet, points: &[Point], guard: EvalGuard) -> Result<f64> {
    let k = kernels.k_lattice();
    let position = g
        .vertices
        .iter()
        .map(|v| match v.role {
            Role::Special(i) => Some(points[i]),
            _ => None,
        })
        .collect();
    let edges = g
        .edges
        .iter()
        .map(|e| (e.a, e.b, if e.kind == EdgeKind::C { kernels.c.clone() } else { k.clone() }))
        .collect();
    let coefficient = *g.coefficient.numer() as f64 / *g.coefficient.denom() as f64;
    let nv = g.vertices.len();
    let work = Work { position, alive: vec![true; nv], weight: vec![None; nv], edges, factor: coefficient };
    work.value(guard, kernels.spec.side())
}

/// `coefficient · ∫ Π kernels` of a closed term, with special vertex `i`
/// placed at `points[i]` and every other vertex summed with weight `ε²`.
/// The factor `N^{-power/2}` is not included.
pub fn evaluate(g: &IbpGraph, kernels: &KernelSet, points: &[Point]) -> Result<f64> {
    evaluate_with(g, kernels, points, EvalGuard::default())
}

pub fn evaluate_with(g: &IbpGraph, kernels: &KernelSet, points: &[Point], guard: EvalGuard) -> Result<f64> {
    super::check(g)?;
    if !g.is_closed() {
        return Err(Error::InvalidGraph(format!("open term {}", g.signature())));
    }
    if points.len() != g.special_count() {
        return Err(Error::InvalidGraph(format!(
            "{} points for {} special vertices",
            points.len(),
            g.special_count()
        )));
    }
    integrate(g, kernels, points, guard)
}

#[cfg(test)]
mod tests {
    use super::super::{Edge, Insertion, Vertex};
    use super::*;
    use crate::lattice::LatticeSpec;
    use num_rational::Rational64;

    fn kernels(m: u32) -> KernelSet {
        KernelSet::new(LatticeSpec::new(m, 1.0).unwrap())
    }

    fn graph(vertices: Vec<Role>, edges: &[(usize, usize, EdgeKind)]) -> IbpGraph {
        IbpGraph {
            vertices: vertices.into_iter().map(|role| Vertex { role, field: Insertion::None }).collect(),
            edges: edges.iter().map(|&(a, b, k)| Edge::new(a, b, k)).collect(),
            coefficient: Rational64::from_integer(1),
            power: 0,
        }
    }

    #[test]
    fn parallel_edges_multiply() {
        let ks = kernels(3);
        let g = graph(vec![Role::Special(0), Role::Special(1)], &[(0, 1, EdgeKind::C), (0, 1, EdgeKind::C)]);
        let v = evaluate(&g, &ks, &[(0, 0), (2, 1)]).unwrap();
        assert!((v - ks.c.at(2, 1).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn resolvent_chain_matches_double_sum() {
        // K(x−y) C(y−z)² integrated over y, the two C-edges ending on x₂
        let ks = kernels(3);
        let g = graph(
            vec![Role::Special(0), Role::Special(1), Role::Resolvent],
            &[(0, 2, EdgeKind::K), (2, 1, EdgeKind::C), (2, 1, EdgeKind::C)],
        );
        let (x, z) = ((1, 2), (5, 7));
        let k = ks.k_lattice();
        let n = 8i64;
        let mut direct = 0.0;
        for y1 in 0..n {
            for y2 in 0..n {
                direct += k.at(x.0 - y1, x.1 - y2) * ks.c.at(y1 - z.0, y2 - z.1).powi(2);
            }
        }
        direct /= (n * n) as f64;
        let v = evaluate(&g, &ks, &[x, z]).unwrap();
        assert!((v - direct).abs() <= 1e-10 * direct.abs().max(1.0));
        // 2 K∗C² = G
        assert!((2.0 * v - ks.g.at(x.0 - z.0, x.1 - z.1)).abs() < 1e-10);
    }

    #[test]
    fn pinned_triangle_matches_triple_sum() {
        // triangle of integrated vertices hanging off one special vertex
        let ks = kernels(2);
        let g = graph(
            vec![Role::Special(0), Role::Internal, Role::Internal, Role::Internal],
            &[
                (0, 1, EdgeKind::C),
                (0, 2, EdgeKind::C),
                (0, 3, EdgeKind::C),
                (1, 2, EdgeKind::C),
                (2, 3, EdgeKind::C),
                (1, 3, EdgeKind::C),
            ],
        );
        let c = &ks.c;
        let n = 4i64;
        let sites: Vec<(i64, i64)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
        let d = |p: (i64, i64), q: (i64, i64)| c.at(p.0 - q.0, p.1 - q.1);
        let x = (1, 3);
        let mut direct = 0.0;
        for &a in &sites {
            for &b in &sites {
                for &z in &sites {
                    direct += d(x, a) * d(x, b) * d(x, z) * d(a, b) * d(b, z) * d(a, z);
                }
            }
        }
        direct /= ((n * n) as f64).powi(3);
        let v = integrate(&g, &ks, &[x], EvalGuard::default()).unwrap();
        assert!((v - direct).abs() <= 1e-10 * direct.abs());
    }

    #[test]
    fn complete_internal_graph_matches_quadruple_sum() {
        // K4 on internal vertices, two of them tied to each special vertex
        let ks = kernels(2);
        let mut roles = vec![Role::Special(0), Role::Special(1)];
        roles.extend([Role::Internal; 4]);
        let mut edges = vec![(0, 2, EdgeKind::C), (0, 3, EdgeKind::C), (1, 4, EdgeKind::C), (1, 5, EdgeKind::C)];
        for a in 2..6 {
            for b in a + 1..6 {
                edges.push((a, b, EdgeKind::C));
            }
        }
        let g = graph(roles, &edges);
        assert!(super::super::validate(&g));
        let c = &ks.c;
        let n = 4i64;
        let sites: Vec<(i64, i64)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
        let d = |f: &ScalarLattice, p: (i64, i64), q: (i64, i64)| f.at(p.0 - q.0, p.1 - q.1);
        let (x, y) = ((0, 1), (3, 3));
        let mut direct = 0.0;
        for &p in &sites {
            for &q in &sites {
                for &r in &sites {
                    for &s in &sites {
                        direct += d(c, x, p) * d(c, x, q) * d(c, y, r) * d(c, y, s)
                            * d(c, p, q) * d(c, p, r) * d(c, p, s) * d(c, q, r) * d(c, q, s) * d(c, r, s);
                    }
                }
            }
        }
        direct /= ((n * n) as f64).powi(4);
        let wide = EvalGuard { max_residual: 4, max_side: 32 };
        let v = evaluate_with(&g, &ks, &[x, y], wide).unwrap();
        assert!((v - direct).abs() <= 1e-10 * direct.abs());
        assert!(matches!(evaluate(&g, &ks, &[x, y]), Err(Error::SizeGuard(_))));
    }

    #[test]
    fn guard_rejects_large_residuals() {
        let ks = kernels(2);
        let g = graph(
            vec![Role::Special(0), Role::Internal, Role::Internal, Role::Internal],
            &[(0, 1, EdgeKind::C), (0, 2, EdgeKind::C), (0, 3, EdgeKind::C), (1, 2, EdgeKind::C), (2, 3, EdgeKind::C), (1, 3, EdgeKind::C)],
        );
        let tight = EvalGuard { max_residual: 0, max_side: 32 };
        assert!(matches!(integrate(&g, &ks, &[(0, 0)], tight), Err(Error::SizeGuard(_))));
    }

    #[test]
    fn open_terms_are_rejected() {
        let ks = kernels(2);
        assert!(evaluate(&IbpGraph::start(1), &ks, &[(0, 0)]).is_err());
    }
}
