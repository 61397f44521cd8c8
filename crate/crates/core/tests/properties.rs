//! Randomized checks of the structural invariants across modules.

use nalgebra::{DMatrix, Rotation3, Vector3};
use num_complex::Complex64;
use proptest::prelude::*;

use wavekit::channel::{synthesize_los, synthesize_nlos, Scatterer};
use wavekit::metrics::{assemble_hybrid, keystone_deviation, singular_values, svd_capacity};
use wavekit::power::{allocate_dc, allocate_iwf, allocate_pso, allocate_waterfill, capacity_objective};
use wavekit::*;

fn params() -> SystemParams {
    SystemParams::from_dbm(30e9, 23.0, -89.0).unwrap()
}

fn channel(nx: usize, ny: usize, distance: f64, seed: u64) -> ChannelMatrix {
    let p = params();
    let tx = ArrayGeometry::new(nx, ny, p.half_wavelength()).unwrap();
    let rx = tx.facing(nx, ny, distance).unwrap();
    let cfg = ChannelConfig {
        rng_seed: seed,
        ..Default::default()
    };
    synthesize_channel(&cfg, &tx, &rx, &p).unwrap()
}

/// Exhaustive best matching, independent of the library's search.
fn best_matching(g: &DMatrix<f64>) -> f64 {
    let (rows, cols) = g.shape();
    if rows > cols {
        return best_matching(&g.transpose());
    }
    let mut best = f64::NEG_INFINITY;
    let mut perm: Vec<usize> = (0..cols).collect();
    // Heap's algorithm over column orders; only the first `rows` matter.
    let mut c = vec![0usize; cols];
    let score = |p: &[usize]| (0..rows).map(|r| g[(r, p[r])]).sum::<f64>();
    best = best.max(score(&perm));
    let mut i = 0;
    while i < cols {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.max(score(&perm));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn centroid_and_spacing(
        nx in 1usize..12,
        ny in 1usize..6,
        spacing in 1e-3f64..0.1,
        cx in -5.0f64..5.0,
        cz in -5.0f64..5.0,
        yaw in 0.0f64..std::f64::consts::TAU,
    ) {
        let g = ArrayGeometry::new(nx, ny, spacing)
            .unwrap()
            .with_center(Vector3::new(cx, 0.3, cz))
            .with_orientation(Rotation3::from_euler_angles(0.1, yaw, 0.0));
        let pos = g.element_positions();
        let centroid = pos.iter().fold(Vector3::zeros(), |a, p| a + p) / pos.len() as f64;
        prop_assert!((centroid - g.center_position_m()).norm() < 1e-12);
        if pos.len() >= 2 {
            for (i, p) in pos.iter().enumerate() {
                let nearest = pos
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, q)| (p - q).norm())
                    .fold(f64::INFINITY, f64::min);
                prop_assert!((nearest - spacing).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn swapping_tx_and_rx_transposes(
        nx in 1usize..6,
        ny in 1usize..4,
        mx in 1usize..6,
        d in 0.2f64..20.0,
        sx in -1.0f64..1.0,
        sz in 0.5f64..3.0,
        re in -1.0f64..1.0,
        im in -1.0f64..1.0,
    ) {
        let p = params();
        let tx = ArrayGeometry::new(nx, ny, p.half_wavelength()).unwrap();
        let rx = tx.facing(mx, 2, d).unwrap();
        let scat = [Scatterer { position_m: Vector3::new(sx, 0.4, sz), complex_gain: Complex64::new(0.1, -0.05) }];
        let g0 = Complex64::new(re, im);
        let fwd = synthesize_los(&tx, &rx, &p, g0).unwrap().add(&synthesize_nlos(&tx, &rx, &p, &scat).unwrap()).unwrap();
        let rev = synthesize_los(&rx, &tx, &p, g0).unwrap().add(&synthesize_nlos(&rx, &tx, &p, &scat).unwrap()).unwrap();
        prop_assert_eq!(rev.entries(), &fwd.entries().transpose());
    }

    #[test]
    fn dictionaries_are_orthonormal_and_equal_norm(nx in 1usize..40, ny in 1usize..7, beta in 1.0f64..4.0) {
        let p = params();
        let g = ArrayGeometry::new(nx, ny, p.half_wavelength()).unwrap();
        let d = build_dictionary(&enumerate_support(&g, &p, beta).unwrap());
        let inv = 1.0 / ((nx * ny) as f64).sqrt();
        prop_assert!(d.matrix().iter().all(|z| (z.norm() - inv).abs() <= 1e-15));
        let gram = d.matrix().ad_mul(d.matrix());
        let n = gram.nrows();
        prop_assert!((gram - DMatrix::<Complex64>::identity(n, n)).iter().all(|z| z.norm() <= 1e-10));
    }

    #[test]
    fn support_grows_with_aperture(m in 1usize..40, ny in 1usize..6, beta in 1.0f64..3.0) {
        let p = params();
        let small = enumerate_support(&ArrayGeometry::new(m, ny, p.half_wavelength()).unwrap(), &p, beta).unwrap();
        let big = enumerate_support(&ArrayGeometry::new(2 * m, ny, p.half_wavelength()).unwrap(), &p, beta).unwrap();
        prop_assert!(big.len() >= small.len());
    }

    #[test]
    fn codebook_ignores_placement(nx in 1usize..16, ny in 1usize..4, d1 in 0.1f64..100.0, d2 in 0.1f64..100.0) {
        let p = params();
        let tx = ArrayGeometry::new(nx, ny, p.half_wavelength()).unwrap();
        let near = tx.facing(nx, ny, d1).unwrap();
        let far = tx.facing(nx, ny, d2).unwrap();
        let a = build_dictionary(&enumerate_support(&near, &p, 1.0).unwrap());
        let b = build_dictionary(&enumerate_support(&far, &p, 1.0).unwrap());
        prop_assert_eq!(a.matrix(), b.matrix());
    }

    #[test]
    fn transform_never_adds_energy(nx in 2usize..10, ny in 1usize..4, d in 0.3f64..30.0, seed in 0u64..1000) {
        let h = channel(nx, ny, d, seed);
        let p = params();
        let dt = build_dictionary(&enumerate_support(h.tx(), &p, 1.0).unwrap());
        let dr = build_dictionary(&enumerate_support(h.rx(), &p, 1.0).unwrap());
        let ha = to_wavenumber(&h, &dr, &dt).unwrap();
        prop_assert!(ha.entries().norm() <= h.frobenius_norm() * (1.0 + 1e-12));
    }

    #[test]
    fn assignment_matches_exhaustive_up_to_eight(
        rows in 1usize..9,
        extra in 0usize..2,
        vals in prop::collection::vec(0u8..5, 81),
        flip in any::<bool>(),
    ) {
        let cols = rows + extra;
        let mut g = DMatrix::from_fn(rows, cols, |i, j| vals[i * 9 + j] as f64);
        if flip {
            g = g.transpose();
        }
        prop_assert_eq!(select_hungarian(&g).objective_value, best_matching(&g));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn wd_stays_below_svd_and_hybrid_matches(nx in 2usize..12, ny in 1usize..4, d in 0.5f64..10.0, seed in 0u64..1000) {
        let p = params();
        let h = channel(nx, ny, d, seed);
        let svd = svd_capacity(&h, &p, None).capacity_bits;
        let sd = spatial_division_capacity(&h, &p).capacity_bits;
        let pipe = WdPipeline::new(h.tx(), h.rx(), &p, 1.0).unwrap();
        let sel = pipe.select(&h).unwrap();
        for alloc in [Allocator::Dc, Allocator::Waterfill, Allocator::Iwf, Allocator::Pso] {
            let out = pipe.allocate(&h, &sel, alloc, &SolverOptions::default()).unwrap();
            prop_assert!(out.report.capacity_bits <= svd + 1e-9, "{:?}", alloc);
            let hy = assemble_hybrid(&pipe.tx_dict, &pipe.rx_dict, &sel.assignment, &out.allocation.powers_w, &p).unwrap();
            prop_assert!(keystone_deviation(&h, &sel.h_a, &sel.assignment, &hy) <= 1e-10);
            let inv = 1.0 / ((nx * ny) as f64).sqrt();
            prop_assert!(hy.analog_tx.iter().all(|z| (z.norm() - inv).abs() <= 1e-15));
        }
        // Jensen ordering, with equality only for a single usable mode.
        prop_assert!(svd >= sd - 1e-9);
        let sv = singular_values(&h);
        if sv.len() > 1 && sv[1] > 1e-6 * sv[0] {
            prop_assert!(svd > sd);
        }
    }

    #[test]
    fn solutions_respect_budget_and_slacks(k in 2usize..7, seed in 0u64..10_000) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let a: Vec<f64> = (0..k).map(|_| 10f64.powf(rng.random_range(-2.0..4.0))).collect();
        let b = DMatrix::from_fn(k, k, |i, j| if i == j { 0.0 } else { 10f64.powf(rng.random_range(-4.0..1.0)) });
        let c = CouplingMatrix::new(a, b, 0.5, 2.0).unwrap();
        let opts = SolverOptions { seed, ..Default::default() };
        let sols = [
            allocate_dc(&c, &opts).unwrap(),
            allocate_iwf(&c, &opts).unwrap(),
            allocate_pso(&c, &opts).unwrap(),
            allocate_waterfill(&c),
        ];
        for s in &sols {
            prop_assert!(s.powers_w.iter().all(|p| *p >= 0.0));
            prop_assert!(s.powers_w.iter().sum::<f64>() <= 2.0 * (1.0 + 1e-9));
            prop_assert!((s.slack_form_objective(&c) - s.achieved_capacity_bits).abs() <= 1e-9);
            prop_assert!((capacity_objective(&c, &s.powers_w) - s.achieved_capacity_bits).abs() <= 1e-9);
        }
        let trace = &sols[0].objective_trace;
        prop_assert!(trace.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn decoupled_multiplexing_beats_single_stream(k in 1usize..8, seed in 0u64..10_000) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let a: Vec<f64> = (0..k).map(|_| rng.random_range(0.01..100.0)).collect();
        let budget = rng.random_range(0.1..10.0);
        let c = CouplingMatrix::new(a.clone(), DMatrix::zeros(k, k), 1.0, budget).unwrap();
        let multi = allocate_dc(&c, &SolverOptions::default()).unwrap().achieved_capacity_bits;
        let best = a.iter().cloned().fold(0.0, f64::max);
        prop_assert!(multi >= (1.0 + best * budget).log2() - 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn distant_los_is_rank_one(nx in 1usize..8, ny in 1usize..4, factor in 200.0f64..2000.0) {
        let p = params();
        let tx = ArrayGeometry::new(nx, ny, p.half_wavelength()).unwrap();
        let probe = tx.facing(nx, ny, 1.0).unwrap();
        let d = factor * wavekit::geometry::rayleigh_distance_m(&tx, &probe, &p).max(p.wavelength_m());
        let rx = tx.facing(nx, ny, d).unwrap();
        let sv = singular_values(&synthesize_los(&tx, &rx, &p, Complex64::new(1.0, 0.0)).unwrap());
        if sv.len() > 1 {
            prop_assert!(sv[1] / sv[0] < 1e-3);
        }
    }

    #[test]
    fn assignment_is_scale_invariant(rows in 1usize..7, cols in 1usize..7, vals in prop::collection::vec(0.0f64..10.0, 36), scale in 0.01f64..100.0) {
        let g = DMatrix::from_fn(rows, cols, |i, j| vals[i * 6 + j]);
        let a = select_hungarian(&g);
        let b = select_hungarian(&(g.clone() * scale));
        prop_assert_eq!(a.pairs, b.pairs);
    }
}

#[test]
fn long_array_at_one_metre_has_several_modes() {
    let p = params();
    let tx = ArrayGeometry::new(64, 1, p.half_wavelength()).unwrap();
    let rx = tx.facing(64, 1, 1.0).unwrap();
    let sv = singular_values(&synthesize_los(&tx, &rx, &p, Complex64::new(1.0, 0.0)).unwrap());
    assert!(sv.iter().filter(|s| **s > 0.01 * sv[0]).count() > 1);
}
