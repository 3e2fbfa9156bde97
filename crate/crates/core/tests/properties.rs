//! Property checks for the invariants each stage promises.

use nalgebra::DMatrix;
use proptest::prelude::*;

use kspectral::calibration::{empirical_f, TOL_F};
use kspectral::markov::{diffusion_matrix, symmetrize};
use kspectral::points::polygon_centers;
use kspectral::spectral::AffinityProfile;
use kspectral::clustering::Strategy as Seeding;
use kspectral::{
    affinity_profile, build_m, calibrate_beta, compose_kernel, degrees, eig_sym, extract_windows, gaussian_kernel,
    gen_blobs, gen_rings, greedy_cluster, matrix_power, select_m, squared_distances, stationary_distribution,
    stochastic_matrix, Error, GrayImage, PointSet,
};

fn point_set(max_n: usize, d: usize) -> impl Strategy<Value = PointSet> {
    prop::collection::vec(prop::collection::vec(-5.0f64..5.0, d), 2..max_n)
        .prop_map(|rows| PointSet::new(rows).unwrap())
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn distances_symmetric_zero_diagonal(ps in point_set(12, 3)) {
        let d2 = squared_distances(&ps).unwrap();
        let m = d2.matrix();
        prop_assert_eq!(m, &m.transpose());
        prop_assert!((0..ps.n()).all(|i| m[(i, i)] == 0.0));
        prop_assert!(m.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn generators_are_pure(seed in any::<u64>(), spread in 0.0f64..2.0) {
        let c = polygon_centers(4, 3.0);
        prop_assert_eq!(gen_blobs(4, 5, &c, spread, seed).unwrap(), gen_blobs(4, 5, &c, spread, seed).unwrap());
        prop_assert_eq!(gen_rings(&[1.0, 2.0], 7, spread, seed).unwrap(), gen_rings(&[1.0, 2.0], 7, spread, seed).unwrap());
    }

    #[test]
    fn window_count(w in 1usize..6, h in 1usize..6, extra_w in 0usize..8, extra_h in 0usize..8, s in 1usize..6) {
        let side = w.max(h);
        prop_assume!(s < side);
        let (iw, ih) = (side + extra_w, side + extra_h);
        let img = GrayImage::new(iw, ih, (0..iw * ih).map(|v| (v % 256) as u8).collect()).unwrap();
        let ps = extract_windows(&img, side, s).unwrap();
        prop_assert_eq!(ps.n(), ((ih - side) / s + 1) * ((iw - side) / s + 1));
        prop_assert_eq!(ps.d(), side * side);
        prop_assert!(ps.iter().flatten().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn kernel_monotone_in_beta(ps in point_set(10, 2), b1 in 0.01f64..3.0, db in 0.01f64..3.0) {
        let d2 = squared_distances(&ps).unwrap();
        let k1 = gaussian_kernel(&d2, b1).unwrap();
        let k2 = gaussian_kernel(&d2, b1 + db).unwrap();
        for i in 0..ps.n() {
            for j in 0..ps.n() {
                prop_assert!(k1.get(i, j) >= k2.get(i, j));
                if d2.get(i, j) > 0.0 && k1.get(i, j) > 0.0 {
                    prop_assert!(k1.get(i, j) > k2.get(i, j) || k1.get(i, j) < 1e-300);
                }
            }
        }
        prop_assert_eq!(k1.matrix(), &k1.matrix().transpose());
    }

    #[test]
    fn composition_closed(ps in point_set(10, 2), h in 0.02f64..0.5) {
        let d2 = squared_distances(&ps).unwrap();
        let Ok(cal) = calibrate_beta(&d2, h) else { return Ok(()) };
        let a = gaussian_kernel(&d2, cal.beta).unwrap();
        if let Ok((k, _)) = compose_kernel(&a, h) {
            for i in 0..ps.n() {
                prop_assert_eq!(k.get(i, i), 1.0);
                for j in 0..ps.n() {
                    prop_assert!((0.0..=1.0).contains(&k.get(i, j)));
                    prop_assert_eq!(k.get(i, j), k.get(j, i));
                }
            }
        }
    }

    #[test]
    fn f_strictly_decreasing(ps in point_set(10, 2), beta in 0.0f64..2.0) {
        let d2 = squared_distances(&ps).unwrap();
        prop_assume!(d2.pairs().any(|v| v > 1e-3));
        prop_assert!(empirical_f(&d2, beta + 0.1) < empirical_f(&d2, beta));
    }

    #[test]
    fn calibration_round_trip(ps in point_set(14, 3), h in 0.001f64..0.9) {
        let d2 = squared_distances(&ps).unwrap();
        match calibrate_beta(&d2, h) {
            Ok(cal) => {
                prop_assert!((empirical_f(&d2, cal.beta) - h).abs() <= TOL_F * h);
                prop_assert!(cal.beta > 0.0);
            }
            Err(Error::Unreachable { inf_f }) => prop_assert!(inf_f >= h),
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }

    #[test]
    fn m_monotone(mut eigs in prop::collection::vec(0.0f64..1.0, 3..12), z1 in 0.001f64..0.5, dz in 0.0f64..0.4) {
        eigs.push(1.0);
        eigs.sort_by(|a, b| b.total_cmp(a));
        let n = eigs.len();
        for p in 2..n {
            let (Ok(m_small_zeta), Ok(m_big_zeta)) = (select_m(&eigs, p, z1), select_m(&eigs, p, z1 + dz)) else { continue };
            prop_assert!(m_small_zeta >= m_big_zeta);
            if let Ok(m_next) = select_m(&eigs, p + 1, z1) {
                prop_assert!(m_next <= m_small_zeta);
            }
        }
    }

    #[test]
    fn perron_identity_when_unclamped(ps in point_set(25, 2), h in 0.01f64..0.5) {
        let d2 = squared_distances(&ps).unwrap();
        let Ok(cal) = calibrate_beta(&d2, h) else { return Ok(()) };
        let k = gaussian_kernel(&d2, cal.beta).unwrap();
        let d = degrees(&k, 1e-12).unwrap();
        prop_assume!(!d.any_clamped());
        let m = build_m(&k, &d);
        let root = nalgebra::DVector::from_iterator(ps.n(), d.degrees.iter().map(|v| v.sqrt()));
        prop_assert!((&m * &root - &root).amax() <= 1e-10);
        let dec = eig_sym(&m).unwrap();
        prop_assert!((dec.eigenvalues[0] - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn affinity_bounded(ps in point_set(20, 2), h in 0.01f64..0.5, m in 1usize..200) {
        let d2 = squared_distances(&ps).unwrap();
        let Ok(cal) = calibrate_beta(&d2, h) else { return Ok(()) };
        let k = gaussian_kernel(&d2, cal.beta).unwrap();
        let dec = eig_sym(&build_m(&k, &degrees(&k, 0.001).unwrap())).unwrap();
        if let Ok(c) = affinity_profile(&matrix_power(&dec, m).unwrap(), m) {
            prop_assert!(c.entries.iter().all(|v| v.abs() <= 1.0 + 1e-12));
            prop_assert!((0..ps.n()).all(|i| c.get(i, i) == 1.0));
            prop_assert_eq!(&c.entries, &c.entries.transpose());
        }
    }

    #[test]
    fn greedy_is_a_partition(vals in prop::collection::vec(-1.0f64..1.0, 36), s in 0.01f64..0.99, seed in any::<u64>()) {
        let n = 8;
        let mut e = DMatrix::identity(n, n);
        let mut it = vals.iter();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = *it.next().unwrap();
                e[(i, j)] = v;
                e[(j, i)] = v;
            }
        }
        let c = AffinityProfile { entries: e, m: 1 };
        for strategy in [Seeding::LowestIndex, Seeding::Random { seed }] {
            let cl = greedy_cluster(&c, s, strategy).unwrap();
            prop_assert_eq!(cl.labels.len(), n);
            prop_assert!(cl.labels.iter().all(|&l| l < cl.c));
            prop_assert!(cl.cluster_sizes().iter().all(|&z| z > 0));
            for (k, &i) in cl.seeds.iter().enumerate() {
                prop_assert_eq!(cl.labels[i], k);
            }
        }
        prop_assert_eq!(greedy_cluster(&c, s, Seeding::LowestIndex).unwrap(), greedy_cluster(&c, s, Seeding::LowestIndex).unwrap());
    }

    #[test]
    fn detailed_balance_and_stochastic_powers(ps in point_set(16, 2), h in 0.05f64..0.5, m in 1usize..60) {
        let d2 = squared_distances(&ps).unwrap();
        let Ok(cal) = calibrate_beta(&d2, h) else { return Ok(()) };
        let k = gaussian_kernel(&d2, cal.beta).unwrap();
        prop_assume!(k.matrix().iter().all(|&v| v > 1e-8));
        let p = stochastic_matrix(&k);
        let pi = stationary_distribution(&p).unwrap();
        prop_assert!((pi.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        let n = ps.n();
        for i in 0..n {
            for j in 0..n {
                prop_assert!((pi[i] * p.get(i, j) - pi[j] * p.get(j, i)).abs() <= 1e-10);
            }
        }
        let pm = diffusion_matrix(&p, m).unwrap();
        for row in pm.row_iter() {
            prop_assert!(row.iter().all(|&v| v >= 0.0));
            prop_assert!((row.sum() - 1.0).abs() <= 1e-10);
        }
        let s = symmetrize(&p, &pi);
        prop_assert!(max_abs(&(&s - s.transpose())) <= 1e-10);
    }
}

/// Greedy extraction on a cleanly separated affinity does not depend on the seed.
#[test]
fn strategy_stable_on_separated_blocks() {
    let sizes = [7usize, 4, 9];
    let n: usize = sizes.iter().sum();
    let truth: Vec<usize> = sizes.iter().enumerate().flat_map(|(g, &s)| std::iter::repeat_n(g, s)).collect();
    let mut e = DMatrix::identity(n, n);
    let noise = gen_blobs(1, n * n, &[vec![0.0]], 1.0, 3).unwrap();
    for i in 0..n {
        for j in (i + 1)..n {
            let u = (noise.point(i * n + j)[0].abs() * 0.05).min(0.05);
            let v = if truth[i] == truth[j] { 1.0 - u } else { u };
            e[(i, j)] = v;
            e[(j, i)] = v;
        }
    }
    let c = AffinityProfile { entries: e, m: 1 };
    let reference = greedy_cluster(&c, 0.1, Seeding::LowestIndex).unwrap();
    assert_eq!(reference.c, 3);
    for seed in 0..20 {
        let cl = greedy_cluster(&c, 0.1, Seeding::Random { seed }).unwrap();
        assert_eq!(cl.c, 3);
        assert_eq!(kspectral::clustering::label_errors(&cl.labels, &reference.labels), Some(0), "seed {seed}");
    }
}
