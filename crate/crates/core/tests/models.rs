use latticeflow::lattice_core::{hex_ball, SquareCoord, SquareDomain, TorusLattice};
use latticeflow::loop_o2::{
    height_to_spins, is_consistent, loops_of_height, loops_of_spins, sample_percolations, spins_to_height, LipschitzFn,
};
use latticeflow::random_cluster::{
    dual_config, fk_weight, p8, p8_binomial, FKConfig, FKParams, FkBoundary, FkGraph, DEFAULT_BUDGET,
};
use latticeflow::samplers::{
    decode_6v_spins, decode_loop_spins, enumerate_exact, run_chain, Chain, ChainConfig, LoopChain, ModelSpec,
};
use latticeflow::six_vertex::{
    edge_orientation, height_to_spins_6v, heights_from_orientation, out_degrees, sample_percolations_6v,
    spins_to_height_6v, GraphHom, SixVParams,
};
use latticeflow::Boundary;
use proptest::prelude::*;
use std::f64::consts::FRAC_1_SQRT_2;

#[test]
fn lipschitz_spin_loop_round_trip() {
    let d = hex_ball(2);
    let e = enumerate_exact(&ModelSpec::LoopHeights { domain: &d, x: 1.0 }, DEFAULT_BUDGET).unwrap();
    assert!(e.states.len() > 100);
    for s in &e.states {
        let h = LipschitzFn { h: s.clone() };
        let pair = height_to_spins(&h);
        assert!(is_consistent(&d, &pair));
        assert_eq!(spins_to_height(&d, &pair).unwrap(), h);
        assert_eq!(loops_of_spins(&d, &pair).unwrap(), loops_of_height(&d, &h).unwrap());
    }
}

#[test]
fn graph_hom_spin_arrow_round_trip() {
    let d = SquareDomain::diamond(SquareCoord::new(0, 0), 3);
    let p = SixVParams::new(1.0, 1.0, 1.5).unwrap();
    let e = enumerate_exact(&ModelSpec::SixVertexHeights { domain: &d, params: p }, DEFAULT_BUDGET).unwrap();
    assert!(e.states.len() > 10);
    for s in &e.states {
        let h = GraphHom { h: s.clone() };
        let pair = height_to_spins_6v(&d, &h);
        assert_eq!(spins_to_height_6v(&d, &pair).unwrap(), h);
        let arrows = edge_orientation(&d, &h);
        assert!(out_degrees(&d, &arrows).iter().all(|&k| k == 2));
        assert_eq!(heights_from_orientation(&d, &arrows, 0, h.h[0]), h);
    }
}

#[test]
fn p8_closed_form_matches_binomial_count() {
    for m in (2..=20).step_by(2) {
        let (num, den) = p8_binomial(m);
        assert_eq!(p8(m).unwrap(), num as f64 / den as f64, "m = {m}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn loop_super_duality_in_regime(pick in any::<prop::sample::Index>(), x in FRAC_1_SQRT_2..=1.0, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let d = hex_ball(2);
        let e = enumerate_exact(&ModelSpec::LoopSpins { domain: &d, x, bc: Boundary::PLUS_PLUS }, DEFAULT_BUDGET).unwrap();
        let pair = decode_loop_spins(&e.states[pick.index(e.states.len())]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let u: Vec<f64> = (0..d.num_y()).map(|_| rng.random()).collect();
        let xi = sample_percolations(&d, &pair, &u, x).unwrap();
        prop_assert!(xi.black.union(&xi.white).open.iter().all(|&o| o));
    }

    #[test]
    fn six_vertex_super_duality_in_regime(pick in any::<prop::sample::Index>(), b in 0.5f64..=1.0, t in 0.0f64..=1.0, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let d = SquareDomain::diamond(SquareCoord::new(0, 0), 3);
        let c = 1.0 + t * b;
        let p = SixVParams::new(1.0, b, c).unwrap();
        let e = enumerate_exact(&ModelSpec::SixVertexSpins { domain: &d, params: p, bc: Boundary::PLUS_PLUS }, DEFAULT_BUDGET).unwrap();
        let pair = decode_6v_spins(&e.states[pick.index(e.states.len())]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let u: Vec<f64> = (0..d.num_vertices()).map(|_| rng.random()).collect();
        let xi = sample_percolations_6v(&d, &pair, &u, p).unwrap();
        prop_assert_eq!(xi.uncovered(), 0);
    }

    #[test]
    fn fk_duality_is_an_involution(bits in proptest::collection::vec(any::<bool>(), 64)) {
        let torus = TorusLattice::new(4);
        let g = FkGraph::torus_black(&torus);
        let eta = FKConfig { open: bits[..g.num_edges()].to_vec(), bc: FkBoundary::Free };
        prop_assert_eq!(dual_config(&dual_config(&eta)), eta.clone());
        let w = fk_weight(&g, &eta, FKParams::isotropic(0.5, 2.0).unwrap());
        prop_assert!(w > 0.0);
    }

    #[test]
    fn chains_are_deterministic_per_seed(seed in any::<u64>()) {
        let config = ChainConfig::new(seed, 20, 5, 3).unwrap();
        let run = || {
            let mut chain = LoopChain::new(hex_ball(2), 0.8, Boundary::PLUS_PLUS).unwrap();
            run_chain(&mut chain, &config, |c| Ok(c.encode().iter().map(|&v| v as f64).collect())).unwrap()
        };
        prop_assert_eq!(run(), run());
    }
}
