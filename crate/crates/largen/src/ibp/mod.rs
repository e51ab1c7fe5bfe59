//! Symbolic expansion of correlation functions of `N^{-1/2}:Φ²:` in powers of
//! `N^{-1/2}`.
//!
//! A term is a multigraph whose vertices carry Wick-ordered field insertions and
//! whose edges carry the kernels `C` or `K`. Its value is the kernel product
//! integrated over all non-special vertices, times the expectation of the
//! insertions under the interacting measure. Insertions are normalized so that
//! every `:Φ²:` and `:Φ₁Φ²:` carries one factor `N^{-1/2}`.
//!
//! The rewrite rules are exact identities obtained by Gaussian integration by
//! parts on the lattice, so the expansion holds at every finite `N`:
//! closed terms up to the requested order plus the unevaluated remainder add up
//! to the exact correlation function.

mod canon;
mod eval;
mod expand;
mod rewrite;

use std::fmt;

use num_rational::Rational64;
use serde::{Serialize, Serializer};

pub use eval::{evaluate, EvalGuard};
pub use expand::{expand, ExpansionResult, Term, MAX_PENDING_TERMS};
pub use rewrite::{class1_identity, rewrite_class1, rewrite_class2, tadpole_substitute};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Role {
    /// External vertex with its 0-based label.
    Special(usize),
    /// Integrated vertex created by integration by parts.
    Internal,
    /// Integrated vertex created when the resolvent `K` is applied.
    Resolvent,
}

/// Field insertion at a vertex, by number of field legs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Insertion {
    None,
    /// `Φ₁`
    Phi1,
    /// `N^{-1/2}:Φ²:`
    Square,
    /// `N^{-1/2}:Φ₁Φ²:`
    Mixed,
}

impl Insertion {
    pub fn legs(self) -> u32 {
        match self {
            Insertion::None => 0,
            Insertion::Phi1 => 1,
            Insertion::Square => 2,
            Insertion::Mixed => 3,
        }
    }

    /// Removes one `Φ₁` leg.
    fn lowered(self) -> Insertion {
        match self {
            Insertion::Mixed => Insertion::Square,
            Insertion::Square => Insertion::Phi1,
            Insertion::Phi1 | Insertion::None => Insertion::None,
        }
    }

    fn normalized(self) -> bool {
        matches!(self, Insertion::Square | Insertion::Mixed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Vertex {
    pub role: Role,
    pub field: Insertion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum EdgeKind {
    C,
    K,
}

/// Undirected edge, stored with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub kind: EdgeKind,
}

impl Edge {
    pub fn new(a: usize, b: usize, kind: EdgeKind) -> Self {
        Self { a: a.min(b), b: a.max(b), kind }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ParityClass {
    /// All vertices carry an even number of legs.
    Class1,
    /// Exactly two vertices carry an odd number of legs.
    Class2,
}

fn serialize_ratio<S: Serializer>(r: &Rational64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

/// A graph term: `coefficient · N^{-power/2} · I_G`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct IbpGraph {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
    #[serde(serialize_with = "serialize_ratio")]
    pub coefficient: Rational64,
    /// Exponent of `N^{-1/2}`.
    pub power: u32,
}

impl IbpGraph {
    /// `k` special vertices carrying `:Φ²:` and no edges.
    pub fn start(k: usize) -> Self {
        Self {
            vertices: (0..k).map(|i| Vertex { role: Role::Special(i), field: Insertion::Square }).collect(),
            edges: Vec::new(),
            coefficient: Rational64::from_integer(1),
            power: 0,
        }
    }

    pub fn special_count(&self) -> usize {
        self.vertices.iter().filter(|v| matches!(v.role, Role::Special(_))).count()
    }

    pub fn internal_count(&self) -> usize {
        self.vertices.iter().filter(|v| v.role == Role::Internal).count()
    }

    pub fn c_edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(|e| e.kind == EdgeKind::C)
    }

    pub fn k_edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(|e| e.kind == EdgeKind::K)
    }

    /// Number of field legs, `n_Φ`.
    pub fn n_phi(&self) -> u32 {
        self.vertices.iter().map(|v| v.field.legs()).sum()
    }

    pub fn is_closed(&self) -> bool {
        self.n_phi() == 0
    }

    /// Degree counted on the graph before resolvent insertion: a `K`-edge
    /// stands for the two `C`-legs it re-routes. Resolvent vertices have none.
    pub fn degree(&self, v: usize) -> u32 {
        if self.vertices[v].role == Role::Resolvent {
            return 0;
        }
        self.edges
            .iter()
            .filter(|e| e.a == v || e.b == v)
            .map(|e| match e.kind {
                EdgeKind::C => 1,
                EdgeKind::K => 2,
            })
            .sum()
    }

    pub fn parity_class(&self) -> Option<ParityClass> {
        match self.vertices.iter().filter(|v| v.field.legs() % 2 == 1).count() {
            0 => Some(ParityClass::Class1),
            2 => Some(ParityClass::Class2),
            _ => None,
        }
    }

    /// Number of Gaussian pairs still to be resolved, `n_G`.
    pub fn n_g(&self) -> u32 {
        match self.parity_class() {
            Some(ParityClass::Class2) => (self.n_phi() - 2) / 2,
            _ => self.n_phi() / 2,
        }
    }

    /// Exponent of `N` in the insertion normalization, `−½ · #(:Φ²:, :Φ₁Φ²:)`.
    pub fn normalization_exponent(&self) -> f64 {
        -0.5 * self.vertices.iter().filter(|v| v.field.normalized()).count() as f64
    }

    fn odd_vertices(&self) -> Vec<usize> {
        (0..self.vertices.len()).filter(|&v| self.vertices[v].field.legs() % 2 == 1).collect()
    }

    fn add_vertex(&mut self, role: Role, field: Insertion) -> usize {
        self.vertices.push(Vertex { role, field });
        self.vertices.len() - 1
    }

    fn add_edge(&mut self, a: usize, b: usize, kind: EdgeKind) {
        self.edges.push(Edge::new(a, b, kind));
    }

    fn scaled(mut self, factor: i64, extra_power: u32) -> Self {
        self.coefficient *= Rational64::from_integer(factor);
        self.power += extra_power;
        self
    }

    /// Compact structural description, e.g. `S0 S1 R | C(0,2)x2 K(1,2)`.
    pub fn signature(&self) -> String {
        let verts: Vec<String> = self
            .vertices
            .iter()
            .map(|v| {
                let role = match v.role {
                    Role::Special(i) => format!("S{i}"),
                    Role::Internal => "I".into(),
                    Role::Resolvent => "R".into(),
                };
                match v.field {
                    Insertion::None => role,
                    Insertion::Phi1 => format!("{role}:f"),
                    Insertion::Square => format!("{role}:ff"),
                    Insertion::Mixed => format!("{role}:fff"),
                }
            })
            .collect();
        let mut edges: Vec<String> = Vec::new();
        let mut i = 0;
        let mut sorted = self.edges.clone();
        sorted.sort();
        while i < sorted.len() {
            let mut j = i;
            while j < sorted.len() && sorted[j] == sorted[i] {
                j += 1;
            }
            let e = sorted[i];
            let kind = if e.kind == EdgeKind::C { "C" } else { "K" };
            if j - i == 1 {
                edges.push(format!("{kind}({},{})", e.a, e.b));
            } else {
                edges.push(format!("{kind}({},{})x{}", e.a, e.b, j - i));
            }
            i = j;
        }
        format!("{} | {}", verts.join(" "), edges.join(" "))
    }
}

impl fmt::Display for IbpGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} N^-{}/2 [{}]", self.coefficient, self.power, self.signature())
    }
}

/// Checks degree bounds, leg counts, resolvent structure, self-loop absence and
/// the parity class.
pub fn validate(g: &IbpGraph) -> bool {
    check(g).is_ok()
}

pub fn check(g: &IbpGraph) -> Result<()> {
    let bad = |m: String| Err(Error::InvalidGraph(m));
    let nv = g.vertices.len();
    for e in &g.edges {
        if e.a == e.b {
            return bad(format!("self-loop at vertex {}", e.a));
        }
        if e.b >= nv {
            return bad(format!("edge to missing vertex {}", e.b));
        }
    }
    let mut labels: Vec<usize> = g
        .vertices
        .iter()
        .filter_map(|v| if let Role::Special(i) = v.role { Some(i) } else { None })
        .collect();
    labels.sort();
    if labels != (0..labels.len()).collect::<Vec<_>>() {
        return bad("special labels must be 0..k".into());
    }
    for (v, vert) in g.vertices.iter().enumerate() {
        let legs = vert.field.legs();
        match vert.role {
            Role::Resolvent => {
                let c = g.edges.iter().filter(|e| e.kind == EdgeKind::C && (e.a == v || e.b == v)).count();
                let k = g.edges.iter().filter(|e| e.kind == EdgeKind::K && (e.a == v || e.b == v)).count();
                if c != 2 || k != 1 || legs != 0 {
                    return bad(format!("resolvent vertex {v} must have one K-edge, two C-edges, no field"));
                }
            }
            Role::Special(_) => {
                let d = g.degree(v);
                if d > 2 || d + legs != 2 {
                    return bad(format!("special vertex {v}: degree {d} with {legs} legs"));
                }
            }
            Role::Internal => {
                let d = g.degree(v);
                if !(1..=4).contains(&d) || d + legs != 4 {
                    return bad(format!("internal vertex {v}: degree {d} with {legs} legs"));
                }
            }
        }
    }
    for e in g.k_edges() {
        let (ra, rb) = (g.vertices[e.a].role, g.vertices[e.b].role);
        if (ra == Role::Resolvent) == (rb == Role::Resolvent) {
            return bad("K-edge must join a resolvent vertex to a non-resolvent vertex".into());
        }
    }
    if g.parity_class().is_none() {
        return bad("number of odd vertices must be 0 or 2".into());
    }
    Ok(())
}
