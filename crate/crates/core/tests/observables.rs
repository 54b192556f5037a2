use std::collections::HashSet;

use latticeflow::lattice_core::{hex_ball, FaceCoord, HexDomain, SitePerc, YVertex};
use latticeflow::loop_o2::{loops_of_height, LipschitzFn};
use latticeflow::observables::{
    alpha_n, circ_event, circuit_probability, circuit_surrounds, crossing_h, crossing_v, fit_log_growth,
    height_variance, jackknife, loops_around, mean_estimate, Estimate,
};
use latticeflow::random_cluster::DEFAULT_BUDGET;
use latticeflow::samplers::{decode_loop_spins, enumerate_exact, ChainConfig, ModelSpec};
use latticeflow::{Boundary, Error};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_perc(domain: &HexDomain, density: f64, rng: &mut impl Rng) -> SitePerc {
    SitePerc { open: (0..domain.num_y()).map(|_| rng.random::<f64>() < density).collect() }
}

fn inside(poly: &[(f64, f64)], p: (f64, f64)) -> bool {
    let mut c = false;
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if (a.1 > p.1) != (b.1 > p.1) {
            let x = a.0 + (p.1 - a.1) * (b.0 - a.0) / (b.1 - a.1);
            if p.0 < x {
                c = !c;
            }
        }
    }
    c
}

/// Explicit search for an open simple cycle of Y(Λ_2n) enclosing Λ_n and every closed
/// Y-vertex touching Λ_n.
fn brute_force_circuit(domain: &HexDomain, xi: &SitePerc, n: u32) -> bool {
    let region: Vec<YVertex> = hex_ball(2 * n).interior_y().to_vec();
    let open: Vec<YVertex> = region.iter().copied().filter(|&y| xi.open[domain.y_index_of(y).unwrap()]).collect();
    let open_set: HashSet<YVertex> = open.iter().copied().collect();
    let mut targets: Vec<(f64, f64)> = hex_ball(n).faces().iter().map(|f: &FaceCoord| f.centre()).collect();
    for y in &region {
        if !xi.open[domain.y_index_of(*y).unwrap()] && y.faces().iter().any(|f| f.hex_norm() <= n as i32) {
            targets.push(y.point());
        }
    }
    let mut path = Vec::new();
    let mut on_path = HashSet::new();
    fn dfs(
        start: YVertex,
        v: YVertex,
        open: &HashSet<YVertex>,
        path: &mut Vec<YVertex>,
        on_path: &mut HashSet<YVertex>,
        targets: &[(f64, f64)],
    ) -> bool {
        for w in v.neighbors() {
            if w == start && path.len() >= 3 {
                let poly: Vec<_> = path.iter().map(|y| y.point()).collect();
                if targets.iter().all(|&t| inside(&poly, t)) {
                    return true;
                }
            }
            if w > start && open.contains(&w) && !on_path.contains(&w) {
                path.push(w);
                on_path.insert(w);
                if dfs(start, w, open, path, on_path, targets) {
                    return true;
                }
                path.pop();
                on_path.remove(&w);
            }
        }
        false
    }
    for &s in &open {
        path.clear();
        on_path.clear();
        path.push(s);
        on_path.insert(s);
        if dfs(s, s, &open_set, &mut path, &mut on_path, &targets) {
            return true;
        }
    }
    false
}

#[test]
fn circ_event_matches_explicit_circuit_search() {
    let d = hex_ball(3);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut seen = [0usize; 2];
    for _ in 0..50 {
        let xi = random_perc(&d, 0.7, &mut rng);
        let fast = circ_event(&d, &xi, 1).unwrap();
        assert_eq!(fast, brute_force_circuit(&d, &xi, 1));
        seen[fast as usize] += 1;
    }
    assert!(seen[0] > 0 && seen[1] > 0, "{seen:?}");
}

#[test]
fn variance_equals_loop_count_under_enumeration() {
    for (radius, x) in [(1u32, 0.6), (1, std::f64::consts::FRAC_1_SQRT_2), (2, 0.9), (2, 1.0)] {
        let d = hex_ball(radius);
        let centre = d.index_of(FaceCoord::ORIGIN).unwrap();
        let e = enumerate_exact(&ModelSpec::LoopHeights { domain: &d, x }, DEFAULT_BUDGET).unwrap();
        let var = e.expect(|h| (h[centre] as f64).powi(2)) - e.expect(|h| h[centre] as f64).powi(2);
        let loops = e.expect(|h| {
            let h = LipschitzFn { h: h.to_vec() };
            loops_around(&d, &loops_of_height(&d, &h).unwrap(), centre) as f64
        });
        assert!((var - loops).abs() < 1e-12, "radius {radius}, x {x}: {var} vs {loops}");
    }
}

#[test]
fn loop_count_on_unit_ball_matches_closed_form() {
    let d = hex_ball(1);
    let x = std::f64::consts::FRAC_1_SQRT_2;
    let e = enumerate_exact(&ModelSpec::LoopHeights { domain: &d, x }, DEFAULT_BUDGET).unwrap();
    let centre = d.index_of(FaceCoord::ORIGIN).unwrap();
    let var = e.expect(|h| (h[centre] as f64).powi(2));
    assert!((var - 0.2).abs() < 1e-12);
}

const R_MINUS_W_PLUS: Boundary = Boundary { black: Some(-1), white: Some(1) };

/// Exact probability that ξ^{r+} has a circuit in Λ_1 around the centre on the radius-2 ball.
fn exact_centre_circuit(x: f64, bc: Boundary) -> f64 {
    let domain = hex_ball(2);
    let exact = enumerate_exact(&ModelSpec::LoopSpins { domain: &domain, x, bc }, DEFAULT_BUDGET).unwrap();
    let region: Vec<usize> = hex_ball(1).interior_y().iter().map(|&y| domain.y_index_of(y).unwrap()).collect();
    let constant = |spins: &[i8], y: usize| {
        let f = domain.y_faces(y);
        spins[f[0]] == spins[f[1]] && spins[f[1]] == spins[f[2]]
    };
    let mut total = 0.0;
    for (state, &p) in exact.states.iter().zip(&exact.probs) {
        let pair = decode_loop_spins(state);
        let mut forced = SitePerc { open: vec![false; domain.num_y()] };
        let mut free = Vec::new();
        for &y in &region {
            if !constant(&pair.black, y) || pair.black[domain.y_faces(y)[0]] < 0 {
                continue;
            }
            if constant(&pair.white, y) {
                free.push(y);
            } else {
                forced.open[y] = true;
            }
        }
        for mask in 0u32..1 << free.len() {
            let mut xi = forced.clone();
            let mut w = 1.0;
            for (b, &y) in free.iter().enumerate() {
                let open = mask >> b & 1 == 1;
                xi.open[y] = open;
                w *= if open { x * x } else { 1.0 - x * x };
            }
            if circuit_surrounds(&domain, &xi, 0, 1).unwrap() {
                total += p * w;
            }
        }
    }
    total
}

#[test]
fn circuit_probability_matches_enumeration() {
    let cases = [
        (0.8, R_MINUS_W_PLUS, 11),
        (1.0, R_MINUS_W_PLUS, 12),
        (0.8, Boundary::PLUS_PLUS, 13),
        (1.0, Boundary::PLUS_PLUS, 14),
    ];
    for (x, bc, seed) in cases {
        let exact = exact_centre_circuit(x, bc);
        assert!(exact > 0.0 && exact < 1.0, "degenerate oracle {exact}");
        let config = ChainConfig::new(seed, 21_000, 1_000, 2).unwrap();
        let est = circuit_probability(0, 1, 2, x, bc, &config).unwrap();
        assert!(est.contains(exact, 3.0), "x = {x}, {bc:?}: exact {exact}, estimate {est:?}");
    }
}

#[test]
fn alpha_is_a_probability() {
    let config = ChainConfig::new(5, 600, 100, 1).unwrap();
    let a = alpha_n(1, 2.5, 1.0, &config).unwrap();
    assert!((0.0..=1.0).contains(&a.mean));
    assert!(matches!(alpha_n(1, 2.0, 1.0, &config), Err(Error::OutOfRange(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn crossing_duality(seed in any::<u64>(), m in 1u32..=5, density in 0.2f64..0.8) {
        let d = hex_ball(2 * m + 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xi = random_perc(&d, density, &mut rng);
        prop_assert!(crossing_h(&d, &xi, m).unwrap() ^ crossing_v(&d, &xi.dual(), m).unwrap());
    }

    #[test]
    fn crossings_are_monotone(seed in any::<u64>(), m in 1u32..=3) {
        let d = hex_ball(2 * m + 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_perc(&d, 0.5, &mut rng);
        let b = a.union(&random_perc(&d, 0.3, &mut rng));
        prop_assert!(!crossing_h(&d, &a, m).unwrap() || crossing_h(&d, &b, m).unwrap());
        prop_assert!(!circ_event(&d, &a, 1).unwrap() || circ_event(&d, &b, 1).unwrap());
    }

    #[test]
    fn jackknife_of_mean_is_nonnegative(v in proptest::collection::vec(-10.0f64..10.0, 2..300), block in 1usize..50) {
        let e = jackknife(&v, block, |s| s.iter().sum::<f64>() / s.len() as f64).unwrap();
        prop_assert!(e.std_error >= 0.0);
        prop_assert_eq!(e.n_samples, v.len());
        let m = mean_estimate(&v, block).unwrap();
        prop_assert!((m.mean - e.mean).abs() < 1e-12);
    }

    #[test]
    fn variance_is_shift_invariant(v in proptest::collection::vec(-10.0f64..10.0, 2..200), shift in -100.0f64..100.0) {
        let a = height_variance(&v, 10).unwrap();
        let w: Vec<f64> = v.iter().map(|x| x + shift).collect();
        let b = height_variance(&w, 10).unwrap();
        prop_assert!((a.mean - b.mean).abs() < 1e-6 * (1.0 + a.mean));
        prop_assert!(a.mean >= 0.0);
    }

    #[test]
    fn log_fit_recovers_exact_slope(slope in -5.0f64..5.0, intercept in -5.0f64..5.0) {
        let pts: Vec<_> = [4.0f64, 8.0, 16.0, 32.0]
            .iter()
            .map(|&n| (n, Estimate { mean: slope * n.ln() + intercept, std_error: 0.1, n_samples: 100 }))
            .collect();
        let f = fit_log_growth(&pts).unwrap();
        prop_assert!((f.slope - slope).abs() < 1e-9);
        prop_assert!((f.intercept - intercept).abs() < 1e-9);
    }
}
