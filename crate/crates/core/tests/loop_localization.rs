use dirac_core::affine::{enumerate_level_weights, verlinde_classes};
use dirac_core::loopfock::{kernel_localization_loop, su2_loop_family, torus_loop_family, torus_window_covers, w0_matches_finite};

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

#[test]
fn su2_supports_match_shifted_weights() {
    for k in 1..=2i64 {
        let classes = verlinde_classes(k);
        for w in enumerate_level_weights(k) {
            let t = std::time::Instant::now();
            let fam = su2_loop_family(k, w.j2, 3).unwrap();
            let rep = kernel_localization_loop(&fam, &grid(-0.5, 0.0, 400), 1e-8).unwrap();
            assert_eq!(rep.supports.len(), 1, "k={k} 2j={}", w.j2);
            let s = &rep.supports[0];
            assert!((s.kappa_value + (w.j2 as f64 + 1.0)).abs() < 1e-9);
            assert!(s.kernel_in_w0 && s.kernel_dims[0] > 0);
            let cls = classes.iter().find(|c| c.j2 == w.j2).unwrap();
            assert!((s.angle - cls.theta).abs() < 1e-9);
            assert!(rep.gap_ok);
            assert!(w0_matches_finite(&fam, &[s.a0]).unwrap() < 1e-12);
            eprintln!("k={k} 2j={} dims={:?} {:?}", w.j2, fam.grades.iter().map(|g| g.dim).collect::<Vec<_>>(), t.elapsed());
        }
    }
}

#[test]
fn torus_supports_sit_at_orbit_points() {
    for (m, mu0) in [(1i64, 0i64), (2, 1), (3, 2)] {
        let fam = torus_loop_family(m, mu0, 3, 3).unwrap();
        torus_window_covers(&fam, 0.0, 0.999).unwrap();
        let rep = kernel_localization_loop(&fam, &grid(0.0, 0.999, 400), 1e-8).unwrap();
        let a0s: Vec<f64> = rep.supports.iter().map(|s| s.a0).collect();
        let r = mu0.rem_euclid(m) as f64 / m as f64;
        assert_eq!(a0s.len(), 1, "m={m} {a0s:?}");
        assert!((a0s[0] - r).abs() < 1e-9);
    }
    let fam = torus_loop_family(2, 1, 1, 2).unwrap();
    assert!(torus_window_covers(&fam, -1.0, 1.0).is_err());
}
