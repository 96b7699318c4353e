use hamforge::diag::{
    check_library_theorem, circuit_from_product, diagonalize, generic_diagonalize,
    match_library, verify_diagonalization, LibraryGroup, W1_CORRECTED, W1_PRINTED,
};
use hamforge::{Fragment, PauliString};

fn group_fragment(g: LibraryGroup) -> Fragment {
    let paulis: Vec<(f64, PauliString)> = g
        .members()
        .iter()
        .enumerate()
        .map(|(i, (_, p))| (1.0 + 0.1 * i as f64, *p))
        .collect();
    Fragment::new(g.to_string(), 1.0, paulis).unwrap()
}

#[test]
fn every_library_circuit_diagonalizes_its_members() {
    for g in LibraryGroup::ALL {
        let f = group_fragment(g);
        let blocks = diagonalize(&f).unwrap();
        let r = verify_diagonalization(&blocks, &f);
        assert!(r.ok, "{g}: {:?}", r.mismatches);
        for b in &blocks {
            assert!(b.w.is_clifford());
        }
    }
}

#[test]
fn stated_conjugation_identities_hold() {
    for g in LibraryGroup::ALL {
        let bad = check_library_theorem(g, &g.circuit()).unwrap();
        assert!(bad.is_empty(), "{g}: {bad:?}");
    }
}

#[test]
fn printed_two_overlap_product_fails_and_corrected_holds() {
    let printed = circuit_from_product(6, &W1_PRINTED);
    let corrected = circuit_from_product(6, &W1_CORRECTED);
    assert!(!check_library_theorem(LibraryGroup::G21, &printed).unwrap().is_empty());
    assert!(check_library_theorem(LibraryGroup::G21, &corrected).unwrap().is_empty());
}

#[test]
fn subsets_match_their_family() {
    for g in LibraryGroup::ALL {
        let f = group_fragment(g);
        let sub = Fragment::new("sub", 1.0, f.paulis[..2].to_vec()).unwrap();
        let m = match_library(&sub).expect("match");
        assert!(m.iter().all(|(h, _)| h.n_qubits() == g.n_qubits()));
    }
}

#[test]
fn generic_path_diagonalizes_library_members() {
    for g in LibraryGroup::ALL {
        let f = group_fragment(g);
        let d = generic_diagonalize(&f).unwrap();
        let r = verify_diagonalization(&[d], &f);
        assert!(r.ok, "{g}: {:?}", r.mismatches);
    }
}
