//! Built-in Hamiltonians, graph generators and reference groupings.

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{HfError, Result};
use crate::hamiltonian::{parse_hamiltonian, Fragment, Hamiltonian};
use crate::pauli::{parse_pauli, Letter, PauliString};
use crate::synth::Route;

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: [&str; 4] = ["H2", "LiH", "heis4", "heis6"];

const H2_TEXT: &str = include_str!("../data/H2.txt");
const LIH_TEXT: &str = include_str!("../data/LiH.txt");
const H2_GROUPING: &str = include_str!("../data/H2.grouping.json");
const LIH_GROUPING: &str = include_str!("../data/LiH.grouping.json");

/// Simple undirected graph on vertices `0..n_vertices`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    n_vertices: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Rejects self-loops, duplicates (in either orientation) and out-of-range vertices.
    pub fn new(n_vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for &(a, b) in &edges {
            if a == b {
                return Err(HfError::arg(format!("self-loop at vertex {a}")));
            }
            if a >= n_vertices || b >= n_vertices {
                return Err(HfError::arg(format!("edge ({a},{b}) out of range")));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(HfError::arg(format!("duplicate edge ({a},{b})")));
            }
        }
        Ok(Graph { n_vertices, edges })
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }
}

/// Edges `(0,1), (1,2), ..., (n-1,0)`.
pub fn cycle_graph(n: usize) -> Result<Graph> {
    if n < 3 {
        return Err(HfError::arg("cycle needs at least 3 vertices"));
    }
    Graph::new(n, (0..n).map(|i| (i, (i + 1) % n)).collect())
}

pub fn path_graph(n: usize) -> Result<Graph> {
    if n < 2 {
        return Err(HfError::arg("path needs at least 2 vertices"));
    }
    Graph::new(n, (0..n - 1).map(|i| (i, i + 1)).collect())
}

pub fn complete_graph(n: usize) -> Result<Graph> {
    if n < 2 {
        return Err(HfError::arg("complete graph needs at least 2 vertices"));
    }
    let edges = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    Graph::new(n, edges)
}

/// Open `rows x cols` grid, row-major vertex numbering.
pub fn lattice(rows: usize, cols: usize) -> Result<Graph> {
    if rows == 0 || cols == 0 || rows * cols < 2 {
        return Err(HfError::arg("lattice needs at least 2 vertices"));
    }
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let v = r * cols + c;
            if c + 1 < cols {
                edges.push((v, v + 1));
            }
            if r + 1 < rows {
                edges.push((v, v + cols));
            }
        }
    }
    Graph::new(rows * cols, edges)
}

fn two_local(n: usize, a: usize, b: usize, l: Letter) -> PauliString {
    let pa = PauliString::single(n, a, l);
    let pb = PauliString::single(n, b, l);
    pa.mul(&pb).expect("same width").unsigned()
}

fn check_graph(g: &Graph) -> Result<()> {
    if g.n_vertices < 2 || g.edges.is_empty() {
        return Err(HfError::arg("graph has no edges"));
    }
    Ok(())
}

/// `sum_E (Jx XX + Jy YY + Jz ZZ) + dh sum_V Z`.
pub fn heisenberg(g: &Graph, jx: f64, jy: f64, jz: f64, dh: f64) -> Result<Hamiltonian> {
    check_graph(g)?;
    let n = g.n_vertices;
    let mut terms = Vec::new();
    for &(a, b) in &g.edges {
        terms.push((jx, two_local(n, a, b, Letter::X)));
        terms.push((jy, two_local(n, a, b, Letter::Y)));
        terms.push((jz, two_local(n, a, b, Letter::Z)));
    }
    for v in 0..n {
        terms.push((dh, PauliString::single(n, v, Letter::Z)));
    }
    Hamiltonian::new(n, terms)
}

/// `Jz sum_E ZZ + sum_V d_i Z_i`.
pub fn ising(g: &Graph, jz: f64, di: &[f64]) -> Result<Hamiltonian> {
    check_graph(g)?;
    let n = g.n_vertices;
    if di.len() != n {
        return Err(HfError::SizeMismatch(n, di.len()));
    }
    let mut terms: Vec<(f64, PauliString)> = g
        .edges
        .iter()
        .map(|&(a, b)| (jz, two_local(n, a, b, Letter::Z)))
        .collect();
    terms.extend(
        di.iter()
            .enumerate()
            .map(|(v, &d)| (d, PauliString::single(n, v, Letter::Z))),
    );
    Hamiltonian::new(n, terms)
}

/// One row of a reference grouping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceGroup {
    pub fragment: Fragment,
    pub expected_rotations: usize,
    pub expected_toffoli_pairs: usize,
    pub route: Route,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceGrouping {
    pub model: String,
    pub groups: Vec<ReferenceGroup>,
}

impl ReferenceGrouping {
    pub fn fragments(&self) -> Vec<Fragment> {
        self.groups.iter().map(|g| g.fragment.clone()).collect()
    }

    /// Sum of all group terms.
    pub fn to_hamiltonian(&self, n: usize) -> Result<Hamiltonian> {
        Hamiltonian::new(n, self.groups.iter().flat_map(|g| g.fragment.terms()))
    }

    /// Largest per-Pauli deviation from `h` (identity excluded).
    pub fn reconstruction_error(&self, h: &Hamiltonian) -> Result<f64> {
        let sum = self.to_hamiltonian(h.n_qubits())?;
        let target = h.without_identity();
        let mut worst: f64 = 0.0;
        for t in target.terms().iter().chain(sum.terms()) {
            worst = worst.max((sum.coeff_of(&t.pauli) - target.coeff_of(&t.pauli)).abs());
        }
        Ok(worst)
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ScaleSpec {
    Value(f64),
    Sum(Vec<f64>),
}

impl ScaleSpec {
    fn value(&self) -> f64 {
        match self {
            ScaleSpec::Value(v) => *v,
            ScaleSpec::Sum(parts) => parts.iter().sum(),
        }
    }
}

#[derive(Deserialize)]
struct GroupSpec {
    label: String,
    scale: ScaleSpec,
    members: Vec<(f64, String)>,
    rotations: usize,
    toffoli_pairs: usize,
    #[serde(default)]
    route: Route,
}

#[derive(Deserialize)]
struct GroupingFile {
    schema_version: u32,
    model: String,
    groups: Vec<GroupSpec>,
}

/// Reads a grouping sidecar. Scales given as lists are summed.
pub fn parse_grouping(json: &str) -> Result<ReferenceGrouping> {
    let file: GroupingFile =
        serde_json::from_str(json).map_err(|e| HfError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
    if file.schema_version != 1 {
        return Err(HfError::arg(format!(
            "unsupported grouping schema {}",
            file.schema_version
        )));
    }
    let mut groups = Vec::with_capacity(file.groups.len());
    for g in file.groups {
        let named = |e: HfError| HfError::arg(format!("group {:?}: {e}", g.label));
        let paulis = g
            .members
            .iter()
            .map(|(u, s)| Ok((*u, parse_pauli(s)?)))
            .collect::<Result<Vec<_>>>()
            .map_err(named)?;
        groups.push(ReferenceGroup {
            fragment: Fragment::new(g.label.clone(), g.scale.value(), paulis).map_err(named)?,
            expected_rotations: g.rotations,
            expected_toffoli_pairs: g.toffoli_pairs,
            route: g.route,
        });
    }
    Ok(ReferenceGrouping {
        model: file.model,
        groups,
    })
}

/// Couplings `(Jx, Jy, Jz, dh)` drawn from N(0,1) in that order.
pub fn heisenberg_couplings(seed: u64) -> [f64; 4] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    std::array::from_fn(|_| StandardNormal.sample(&mut rng))
}

fn ring_fragment(g: &Graph, letter: Letter, scale: f64, label: &str) -> Result<Fragment> {
    let n = g.n_vertices;
    let paulis = g
        .edges
        .iter()
        .map(|&(a, b)| (1.0, two_local(n, a, b, letter)))
        .collect();
    Fragment::new(label, scale, paulis)
}

fn heisenberg_cycle(n: usize, seed: u64) -> Result<(Hamiltonian, ReferenceGrouping)> {
    let g = cycle_graph(n)?;
    let [jx, jy, jz, dh] = heisenberg_couplings(seed);
    let h = heisenberg(&g, jx, jy, jz, dh)?;
    let ring_cost = if n == 4 { (1, 1) } else { (2, 3) };
    let mut groups = Vec::new();
    for (letter, j, name) in [(Letter::X, jx, "XX"), (Letter::Y, jy, "YY"), (Letter::Z, jz, "ZZ")] {
        groups.push(ReferenceGroup {
            fragment: ring_fragment(&g, letter, j, &format!("ring {name}"))?,
            expected_rotations: ring_cost.0,
            expected_toffoli_pairs: ring_cost.1,
            route: Route::Auto,
        });
    }
    for v in 0..n {
        groups.push(ReferenceGroup {
            fragment: Fragment::single(
                format!("Z_({})", v + 1),
                dh,
                PauliString::single(n, v, Letter::Z),
            ),
            expected_rotations: 1,
            expected_toffoli_pairs: 0,
            route: Route::Auto,
        });
    }
    Ok((
        h,
        ReferenceGrouping {
            model: format!("heis{n}"),
            groups,
        },
    ))
}

/// Built-in model with its reference grouping. `seed` only affects the
/// Heisenberg models.
pub fn builtin(name: &str, seed: u64) -> Result<(Hamiltonian, ReferenceGrouping)> {
    match name {
        "H2" => Ok((parse_hamiltonian(H2_TEXT)?, parse_grouping(H2_GROUPING)?)),
        "LiH" => Ok((parse_hamiltonian(LIH_TEXT)?, parse_grouping(LIH_GROUPING)?)),
        "heis4" => heisenberg_cycle(4, seed),
        "heis6" => heisenberg_cycle(6, seed),
        other => Err(HfError::Unknown(other.to_string())),
    }
}
