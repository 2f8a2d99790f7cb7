mod common;

use num_complex::Complex64;
use proptest::prelude::*;
use qutrit_synth::arith::{CycloNumber, Matrix};
use qutrit_synth::ir::{
    controlled_gate_oracle, dagger, gate_unitary, parse_circuit, serialize_circuit, t_count, DEFAULT_ORACLE_LIMIT,
};
use qutrit_synth::perm::{cycle_decompose, synthesize_permutation, TritPermutation};
use qutrit_synth::sim::{circuit_unitary, classical_action, equal_exact, ClassicalAction, Columns, Program, SparseState, Target};
use qutrit_synth::synth::{conjugate_controls, ctrl_t, ctrl_x01};
use qutrit_synth::{Circuit, ControlPattern, Gate, Perm3, Thirds};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cyclo() -> impl Strategy<Value = CycloNumber> {
    (prop::array::uniform6(-20i64..20), 0u32..3).prop_map(|(c, k)| CycloNumber::new(c, k))
}

fn perm3() -> impl Strategy<Value = Perm3> {
    prop::sample::select(Perm3::ALL.to_vec())
}

fn thirds() -> impl Strategy<Value = Thirds> {
    (0i64..9).prop_map(Thirds::new)
}

fn gate(width: usize) -> BoxedStrategy<Gate> {
    let w = 0..width;
    let single = prop_oneof![
        (perm3(), w.clone()).prop_map(|(p, w)| Gate::X(p, w)),
        w.clone().prop_map(Gate::H),
        w.clone().prop_map(Gate::Hdg),
        w.clone().prop_map(Gate::S),
        w.clone().prop_map(Gate::Sdg),
        (1u8..=8, w.clone()).prop_map(|(k, w)| Gate::T(k, w)),
        (thirds(), thirds(), w.clone()).prop_map(|(a, b, w)| Gate::Z(a, b, w)),
        (thirds(), thirds(), w.clone()).prop_map(|(a, b, w)| Gate::XPhase(a, b, w)),
    ];
    if width < 2 {
        return single.boxed();
    }
    let pair = (0..width, 1..width).prop_map(move |(c, off)| (c, (c + off) % width));
    prop_oneof![
        4 => single,
        1 => pair.clone().prop_map(|(c, t)| Gate::CX(c, t)),
        1 => pair.prop_map(|(c, t)| Gate::CXdg(c, t)),
    ]
    .boxed()
}

fn circuit(width: usize, max_len: usize) -> impl Strategy<Value = Circuit> {
    prop::collection::vec(gate(width), 0..max_len).prop_map(move |gates| Circuit { width, gates })
}

fn classical_circuit(width: usize) -> impl Strategy<Value = Circuit> {
    let g = prop_oneof![
        (perm3(), 0..width).prop_map(|(p, w)| Gate::X(p, w)),
        (0..width, 1..width).prop_map(move |(c, off)| Gate::CX(c, (c + off) % width)),
    ];
    prop::collection::vec(g, 0..30).prop_map(move |gates| Circuit { width, gates })
}

fn close(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() < 1e-9 * (1.0 + a.norm())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_ops_match_complex(a in cyclo(), b in cyclo()) {
        let (x, y) = (a.to_complex(), b.to_complex());
        prop_assert!(close((&a + &b).to_complex(), x + y));
        prop_assert!(close((&a - &b).to_complex(), x - y));
        prop_assert!(close((&a * &b).to_complex(), x * y));
        prop_assert!(close(a.conj().to_complex(), x.conj()));
        prop_assert!(close(a.mul_zeta_pow(4).to_complex(), x * CycloNumber::zeta_pow(4).to_complex()));
    }

    #[test]
    fn ring_laws(a in cyclo(), b in cyclo(), c in cyclo()) {
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert!((&a - &a).is_zero());
        prop_assert_eq!(a.conj().conj(), a.clone());
        prop_assert_eq!((&a * &b).conj(), &a.conj() * &b.conj());
    }

    #[test]
    fn gates_are_unitary(g in gate(2)) {
        prop_assert!(gate_unitary(&g).is_unitary());
    }

    #[test]
    fn phase_gates_compose(a in thirds(), b in thirds(), c in thirds(), d in thirds()) {
        let lhs = gate_unitary(&Gate::Z(a, b, 0)).matmul(&gate_unitary(&Gate::Z(c, d, 0)));
        let sum = |x: Thirds, y: Thirds| Thirds::new((x.zeta_exp() + y.zeta_exp()) as i64);
        prop_assert_eq!(lhs, gate_unitary(&Gate::Z(sum(a, c), sum(b, d), 0)));
    }

    #[test]
    fn dagger_is_involution(c in circuit(3, 40)) {
        prop_assert_eq!(dagger(&dagger(&c)), c.clone());
        prop_assert_eq!(t_count(&dagger(&c)), t_count(&c));
    }

    #[test]
    fn text_round_trip(c in circuit(4, 60)) {
        let text = serialize_circuit(&c);
        let back = parse_circuit(&text).unwrap();
        prop_assert_eq!(&back, &c);
        prop_assert_eq!(serialize_circuit(&back), text);
    }

    #[test]
    fn dagger_undoes_circuit(c in circuit(3, 25), col in 0usize..27) {
        let prog = Program::new(&c);
        let inv = Program::new(&dagger(&c));
        let mut s = SparseState::<CycloNumber>::basis(3, col);
        prog.run_sparse(&mut s);
        inv.run_sparse(&mut s);
        s.canonicalize();
        prop_assert_eq!(s.entries, vec![(col, CycloNumber::one())]);
    }

    #[test]
    fn dagger_is_conjugate_transpose(c in circuit(2, 15)) {
        let u = circuit_unitary(&c, 2).unwrap();
        prop_assert_eq!(circuit_unitary(&dagger(&c), 2).unwrap(), u.dagger());
    }

    #[test]
    fn concatenation_multiplies(a in circuit(2, 12), b in circuit(2, 12)) {
        let mut ab = a.clone();
        ab.extend(&b);
        let want = circuit_unitary(&b, 2).unwrap().matmul(&circuit_unitary(&a, 2).unwrap());
        prop_assert_eq!(circuit_unitary(&ab, 2).unwrap(), want);
    }

    #[test]
    fn classical_action_is_bijection(c in classical_circuit(3)) {
        match classical_action(&c) {
            ClassicalAction::Permutation(map) => {
                let mut seen = vec![false; map.len()];
                for &y in &map {
                    prop_assert!(!seen[y]);
                    seen[y] = true;
                }
            }
            ClassicalAction::NotClassical { witness } => prop_assert!(false, "witness {}", witness),
        }
    }

    #[test]
    fn conjugated_controls_move_the_firing_value(from in 0u8..3, to in 0u8..3) {
        let pat = |v| ControlPattern { entries: vec![Some(v), None] };
        let (p_from, p_to) = (pat(from), pat(to));
        let base = conjugate_controls(&ctrl_x01(1).unwrap().circuit, &pat(2), &p_from).unwrap();
        let c = conjugate_controls(&base, &p_from, &p_to).unwrap();
        let t = Target::Matrix(controlled_gate_oracle(&Gate::X(Perm3::Swap01, 0), &p_to, DEFAULT_ORACLE_LIMIT).unwrap());
        prop_assert!(equal_exact(&c, &t, &Columns::All).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn float_matches_exact(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = common::random_circuit(3, 200, &mut rng);
        let u = circuit_unitary(&c, 3).unwrap().to_complex();
        let prog = Program::new(&c);
        for col in 0..27 {
            let f = prog.column::<Complex64>(col).to_dense();
            for (row, a) in f.amps.iter().enumerate() {
                prop_assert!((a - u[row * 27 + col]).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn permutation_round_trip(seed in any::<u64>(), n in 1usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = TritPermutation::random(n, &mut rng);
        prop_assert!(cycle_decompose(&p).len() < p.dim());
        let mut c = synthesize_permutation(&p).unwrap().circuit;
        prop_assert_eq!(TritPermutation::of_circuit(&c).unwrap(), p.clone());
        c.extend(&synthesize_permutation(&p.inverse()).unwrap().circuit);
        prop_assert!(TritPermutation::of_circuit(&c).unwrap().is_identity());
    }
}

#[test]
fn controlled_t_dagger_is_controlled_t8() {
    for k in 1..=2 {
        let d = dagger(&ctrl_t(k).unwrap().circuit);
        let t = Target::Matrix(controlled_gate_oracle(&Gate::T(8, 0), &ControlPattern::twos(k, 1), 6).unwrap());
        assert!(equal_exact(&d, &t, &Columns::All).unwrap());
    }
}

#[test]
fn long_circuit_text_is_stable() {
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let c = common::random_circuit(5, 1000, &mut rng);
    let text = serialize_circuit(&c);
    assert_eq!(serialize_circuit(&parse_circuit(&text).unwrap()), text);
}

#[test]
fn nine_zeta_phases_are_identity() {
    let z = Matrix::identity(3).scale(&CycloNumber::zeta_pow(1));
    assert_eq!(z.pow(9), Matrix::identity(3));
}
