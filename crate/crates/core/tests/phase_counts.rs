use hamforge::models::{complete_graph, cycle_graph, ising, Graph};
use hamforge::phase::{distinct_magnitudes, phase_table, synthesize_phase, PhaseTable, PhaseTerm};
use hamforge::structured::offset_candidates;
use hamforge::synth::{synthesize_with, Route};
use hamforge::Fragment;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn edge_terms(g: &Graph) -> Vec<PhaseTerm> {
    g.edges()
        .iter()
        .map(|&(a, b)| PhaseTerm {
            coeff: 1.0,
            z_mask: 1 << a | 1 << b,
            sign: 1,
        })
        .collect()
}

/// Distinct nonzero `|phi|` with unit edge weight.
fn raw_count(g: &Graph) -> usize {
    let pt = phase_table(g.n_vertices(), &edge_terms(g)).unwrap();
    distinct_magnitudes(&pt).len()
}

/// Fewest distinct nonzero `|phi - c|` over constant shifts `c`, which
/// only change the global phase.
fn shifted_count(g: &Graph) -> usize {
    let pt = phase_table(g.n_vertices(), &edge_terms(g)).unwrap();
    offset_candidates(pt.values())
        .into_iter()
        .map(|c| {
            let v = pt.values().iter().map(|x| x - c).collect();
            distinct_magnitudes(&PhaseTable::from_values(g.n_vertices(), v).unwrap()).len()
        })
        .min()
        .unwrap()
}

fn compiled_rotations(g: &Graph) -> usize {
    let h = ising(g, 0.7, &vec![0.0; g.n_vertices()]).unwrap();
    let frag = Fragment::new("zz", 1.0, h.terms().iter().map(|t| (t.coeff, t.pauli)).collect()).unwrap();
    synthesize_with(&frag, 0.9, Route::Auto).unwrap().cost.rotations
}

fn random_graph(rng: &mut ChaCha8Rng) -> Graph {
    loop {
        let n = rng.gen_range(3..=9);
        let edges: Vec<(usize, usize)> = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
            .filter(|_| rng.gen_bool(0.4))
            .collect();
        if !edges.is_empty() {
            return Graph::new(n, edges).unwrap();
        }
    }
}

#[test]
fn cycles_need_a_quarter_of_their_edges() {
    for n in 4..=10 {
        let g = cycle_graph(n).unwrap();
        let bound = n.div_ceil(4);
        assert!(shifted_count(&g) <= bound, "C{n}: {}", shifted_count(&g));
        if n % 2 == 0 {
            assert!(raw_count(&g) <= bound, "C{n}");
        }
        assert!(compiled_rotations(&g) <= bound, "C{n}: compiled {}", compiled_rotations(&g));
    }
    // Odd cycles only meet the bound after a global-phase shift.
    assert_eq!(raw_count(&cycle_graph(5).unwrap()), 3);
    assert_eq!(shifted_count(&cycle_graph(5).unwrap()), 1);
}

#[test]
fn complete_graphs_need_half_their_vertices() {
    for n in 3..=8 {
        let g = complete_graph(n).unwrap();
        let bound = n.div_ceil(2);
        assert!(shifted_count(&g) <= bound, "K{n}: {}", shifted_count(&g));
        assert!(compiled_rotations(&g) <= bound, "K{n}: compiled {}", compiled_rotations(&g));
    }
    assert_eq!(raw_count(&complete_graph(6).unwrap()), 4);
}

#[test]
fn random_graphs_need_half_their_edges() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for i in 0..50 {
        let g = random_graph(&mut rng);
        let bound = g.edges().len().div_ceil(2);
        assert!(raw_count(&g) <= bound, "graph {i}");
        assert!(shifted_count(&g) <= raw_count(&g));
    }
}

#[test]
fn generic_rotations_equal_distinct_magnitudes() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for _ in 0..20 {
        let g = random_graph(&mut rng);
        let terms = edge_terms(&g);
        let c = synthesize_phase(g.n_vertices(), &terms).unwrap();
        assert_eq!(c.cost_report().unwrap().rotations, raw_count(&g));
    }
}
