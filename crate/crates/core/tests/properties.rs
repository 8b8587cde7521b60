use num_complex::Complex64;
use proptest::prelude::*;

use vdd::ansatz::{encode_state, init_params, AnsatzKind, InitScheme};
use vdd::exact::{energy_of, exact_energy, exact_gradient, finite_difference, to_state_vector};
use vdd::graph::{BitString, VddGraph};
use vdd::params::{ParamMode, ParamVector};
use vdd::pauli::{build_model, ModelSpec};
use vdd::vmc::{local_estimator, log_derivatives};
use vdd::StateVector;

fn random_graph(kind: AnsatzKind, n: usize, seed: u64) -> VddGraph {
    init_params(&kind.build(n).unwrap(), &InitScheme::UniformRandom { seed }).unwrap()
}

fn kind_strategy() -> impl Strategy<Value = AnsatzKind> {
    prop::sample::select(AnsatzKind::ALL.to_vec())
}

fn model_strategy(n: usize) -> impl Strategy<Value = ModelSpec> {
    (0..3usize, -2.0..2.0f64).prop_map(move |(m, c)| match m {
        0 => ModelSpec::z1z2(n),
        1 => ModelSpec::tfim(n, c),
        _ => ModelSpec::heisenberg(n, c),
    })
}

/// Product of the edge amplitudes along the path, read straight off the
/// stored parameters.
fn path_product(g: &VddGraph, b: &BitString) -> Complex64 {
    let mut acc = Complex64::from_polar(1.0, g.global_phase());
    for (id, bit) in g.path(b).unwrap() {
        let p = g.params(id).unwrap();
        acc *= if bit == 0 {
            Complex64::from_polar(p.r, p.omega)
        } else {
            Complex64::from_polar((1.0 - p.r * p.r).sqrt(), p.phi)
        };
    }
    acc
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn states_are_normalized(kind in kind_strategy(), n in 1usize..=10, seed in any::<u64>()) {
        let g = random_graph(kind, n, seed);
        let v = to_state_vector(&g).unwrap();
        prop_assert!((v.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn amplitudes_are_path_products(
        kind in kind_strategy(),
        n in 1usize..=8,
        seed in any::<u64>(),
        phase in -7.0..7.0f64,
        x in any::<usize>(),
    ) {
        let mut g = random_graph(kind, n, seed);
        g.set_global_phase(phase);
        let b = BitString::from_index(x % (1 << n), n);
        let expected = path_product(&g, &b);
        prop_assert!((g.amplitude(&b).unwrap() - expected).norm() < 1e-14);
        prop_assert!((to_state_vector(&g).unwrap().amplitude(&b) - expected).norm() < 1e-14);
    }

    #[test]
    fn global_phase_is_unobservable(
        kind in kind_strategy(),
        (n, spec) in (2usize..=6).prop_flat_map(|n| (Just(n), model_strategy(n))),
        seed in any::<u64>(),
        phase in -7.0..7.0f64,
    ) {
        let h = build_model(&spec).unwrap();
        let g = random_graph(kind, n, seed);
        let mut shifted = g.clone();
        shifted.set_global_phase(phase);
        let a = to_state_vector(&g).unwrap();
        let b = to_state_vector(&shifted).unwrap();
        let rot = Complex64::from_polar(1.0, phase);
        for (x, y) in a.amps().iter().zip(b.amps()) {
            prop_assert!((x * rot - y).norm() < 1e-14);
        }
        prop_assert!((exact_energy(&g, &h).unwrap() - exact_energy(&shifted, &h).unwrap()).abs() < 1e-12);
        let ga = exact_gradient(&g, &h, ParamMode::Trig).unwrap();
        let gb = exact_gradient(&shifted, &h, ParamMode::Trig).unwrap();
        for (x, y) in ga.entries.iter().zip(&gb.entries) {
            prop_assert!((x - y).abs() < 1e-11);
        }
    }

    #[test]
    fn json_round_trip_is_identity(kind in kind_strategy(), n in 1usize..=7, seed in any::<u64>(), phase in -7.0..7.0f64) {
        let mut g = random_graph(kind, n, seed);
        g.set_global_phase(phase);
        let back = VddGraph::from_json(&g.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, g);
    }

    #[test]
    fn parameter_modes_describe_the_same_state(
        kind in kind_strategy(),
        n in 2usize..=6,
        seed in any::<u64>(),
        shift in -4.0..4.0f64,
    ) {
        let g = random_graph(kind, n, seed);
        let h = build_model(&ModelSpec::tfim(n, 0.7)).unwrap();
        let mut trig = ParamVector::from_graph(&g, ParamMode::Trig);
        for u in trig.values_mut().iter_mut().step_by(3) {
            *u += shift;
        }
        let mut moved = g.clone();
        trig.apply_to(&mut moved).unwrap();
        let raw = ParamVector::from_graph(&moved, ParamMode::Raw);
        let et = energy_of(&g, &trig, &h).unwrap();
        let er = energy_of(&g, &raw, &h).unwrap();
        prop_assert!((et - er).abs() < 1e-10);
    }

    #[test]
    fn analytic_gradient_matches_finite_differences(
        kind in kind_strategy(),
        (n, spec) in (2usize..=5).prop_flat_map(|n| (Just(n), model_strategy(n))),
        seed in any::<u64>(),
    ) {
        let g = random_graph(kind, n, seed);
        let h = build_model(&spec).unwrap();
        let grad = exact_gradient(&g, &h, ParamMode::Trig).unwrap();
        let fd = finite_difference(&g, &h, ParamMode::Trig, 1e-5).unwrap();
        for (a, b) in grad.entries.iter().zip(&fd.entries) {
            prop_assert!((a - b).abs() < 1e-7 * (1.0 + a.abs()), "{} vs {}", a, b);
        }
    }

    #[test]
    fn weighted_local_estimators_sum_to_energy(
        kind in kind_strategy(),
        (n, spec) in (2usize..=6).prop_flat_map(|n| (Just(n), model_strategy(n))),
        seed in any::<u64>(),
    ) {
        let g = random_graph(kind, n, seed);
        let h = build_model(&spec).unwrap();
        let v = to_state_vector(&g).unwrap();
        let mut total = Complex64::new(0.0, 0.0);
        for x in 0..1usize << n {
            let p = v.amps()[x].norm_sqr();
            if p > 0.0 {
                total += local_estimator(&g, &h, &BitString::from_index(x, n)).unwrap() * p;
            }
        }
        let e = exact_energy(&g, &h).unwrap();
        prop_assert!((total.re - e).abs() < 1e-10 * (1.0 + e.abs()));
        prop_assert!(total.im.abs() < 1e-10 * (1.0 + e.abs()));
    }

    #[test]
    fn full_basis_score_matches_exact_gradient(
        (n, spec) in (2usize..=5).prop_flat_map(|n| (Just(n), model_strategy(n))),
        seed in any::<u64>(),
    ) {
        let g = random_graph(AnsatzKind::Accordion, n, seed);
        let h = build_model(&spec).unwrap();
        let v = to_state_vector(&g).unwrap();
        let e = exact_energy(&g, &h).unwrap();
        let mut grad = vec![0.0; g.param_count()];
        for x in 0..1usize << n {
            let p = v.amps()[x].norm_sqr();
            let b = BitString::from_index(x, n);
            let a = local_estimator(&g, &h, &b).unwrap();
            let o = log_derivatives(&g, &b, ParamMode::Trig).unwrap();
            for (gj, oj) in grad.iter_mut().zip(o) {
                *gj += p * 2.0 * (oj.conj() * (a - e)).re;
            }
        }
        let exact = exact_gradient(&g, &h, ParamMode::Trig).unwrap();
        for (a, b) in grad.iter().zip(&exact.entries) {
            prop_assert!((a - b).abs() < 1e-10 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn encoding_reproduces_states(n in 1usize..=6, raw in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 64)) {
        let mut amps: Vec<Complex64> = raw[..1 << n].iter().map(|&(a, b)| Complex64::new(a, b)).collect();
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        prop_assume!(norm > 1e-3);
        amps.iter_mut().for_each(|z| *z /= norm);
        let target = StateVector::new(n, amps).unwrap();
        let g = encode_state(&target).unwrap();
        let back = to_state_vector(&g).unwrap();
        for (x, y) in target.amps().iter().zip(back.amps()) {
            prop_assert!((x - y).norm() < 1e-12);
        }
    }
}
