use openqmc_core::bath::{discretize_bath, BathCorrelation, Correlation};
use openqmc_core::btb::{btb_system_functional, BoldTable};
use openqmc_core::pairings::influence_functional;
use openqmc_core::sampling::{sample_shell, sample_simplex, shift_map, Phase, RngStream};
use openqmc_core::system::{bare_propagator, coefficients_a, coefficients_b, system_functional};
use openqmc_core::{BathSpec, Complex64, Mat2, PairingFamily, Spin, SystemSpec};
use proptest::prelude::*;

fn correlation() -> BathCorrelation {
    let modes = discretize_bath(&BathSpec::ohmic(2.5, 0.2, 5.0)).unwrap();
    BathCorrelation::new(&modes, 5.0).unwrap()
}

fn hermitian() -> impl Strategy<Value = Mat2> {
    (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, d, re, im)| {
        Mat2::new(Complex64::new(a, 0.0), Complex64::new(re, -im), Complex64::new(re, im), Complex64::new(d, 0.0))
    })
}

fn system() -> impl Strategy<Value = SystemSpec> {
    (-2.0..2.0f64, 0.0..2.0f64, hermitian()).prop_map(|(eps, delta, o)| {
        let mut s = SystemSpec::spin_boson(eps, delta);
        s.observable = o;
        s
    })
}

/// Sorted points in `[−t, t]`.
fn points(max: usize, t: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-t..t, 0..=max).prop_map(|mut v| {
        v.sort_by(f64::total_cmp);
        v
    })
}

fn sorted(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] <= w[1])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn correlation_conjugate_flip(t1 in -4.0..4.0f64, t2 in -4.0..4.0f64) {
        let b = correlation();
        prop_assert!((b.at(t2, t1) - b.at(t1, t2).conj()).norm() < 1e-13);
        prop_assert_eq!(b.at(t1, t2), b.at(t1.abs(), t2.abs()));
    }

    #[test]
    fn correlation_shift_and_stretch(a in -3.0..3.0f64, len in 0.0..3.0f64, dt in 0.0..1.0f64) {
        let b = correlation();
        let (si, sf) = (a, a + len);
        let moved = if sf < 0.0 {
            b.at(si - dt, sf - dt)
        } else if si >= 0.0 {
            b.at(si + dt, sf + dt)
        } else {
            b.at(si - dt, sf + dt)
        };
        prop_assert!((moved - b.at(si, sf)).norm() < 1e-12);
    }

    #[test]
    fn bare_propagator_unitary_and_mirrored(spec in system(), a in 0.0..2.0f64, len in 0.0..2.0f64) {
        let g = bare_propagator(&spec, a, a + len).unwrap();
        prop_assert!((g * g.adjoint()).dist(&Mat2::identity()) < 1e-13);
        let mirrored = bare_propagator(&spec, -a - len, -a).unwrap();
        if a > 0.0 {
            prop_assert!(mirrored.dist(&g.adjoint()) < 1e-13);
        }
    }

    #[test]
    fn basis_reconstruction(spec in system(), dt in 0.0..1.5f64) {
        let a = coefficients_a(&spec);
        let b = coefficients_b(&spec, dt).unwrap();
        let u = openqmc_core::matexp_herm(&spec.hamiltonian(), dt).unwrap();
        let mut rebuilt = Mat2::zero();
        for i in Spin::ALL {
            for j in Spin::ALL {
                rebuilt += Mat2::dyad(i, j).scale(a[i.index()][j.index()]);
                let mut rhs = Mat2::zero();
                for k in Spin::ALL {
                    for l in Spin::ALL {
                        rhs += Mat2::dyad(k, l).scale(b.0[i.index()][j.index()][k.index()][l.index()]);
                    }
                }
                prop_assert!((u * Mat2::dyad(i, j) * u.adjoint()).dist(&rhs) < 1e-14);
            }
        }
        prop_assert!(rebuilt.dist(&spec.observable) < 1e-14);
    }

    #[test]
    fn functional_basis_shift(spec in system(), pts in points(6, 1.5), dt in 0.01..0.5f64) {
        let t = 1.5;
        let b = coefficients_b(&spec, dt).unwrap();
        let shifted = shift_map(&pts, dt);
        for i in Spin::ALL {
            for j in Spin::ALL {
                let lhs = system_functional(&spec, t + dt, &shifted, Some((i, j))).unwrap();
                let mut rhs = Mat2::zero();
                for k in Spin::ALL {
                    for l in Spin::ALL {
                        rhs += system_functional(&spec, t, &pts, Some((k, l)))
                            .unwrap()
                            .scale(b.0[i.index()][j.index()][k.index()][l.index()]);
                    }
                }
                prop_assert!(lhs.dist(&rhs) < 1e-12 * (1.0 + lhs.max_abs()));
            }
        }
    }

    #[test]
    fn btb_functional_basis_shift(
        spec in system(),
        pts in points(6, 1.5),
        entries in prop::collection::vec(hermitian(), 42),
    ) {
        let dt = 0.05;
        let table = BoldTable { entries, dt, samples: vec![] };
        let t = 1.5;
        let b = coefficients_b(&spec, dt).unwrap();
        let shifted = shift_map(&pts, dt);
        for i in Spin::ALL {
            for j in Spin::ALL {
                let lhs = btb_system_functional(&table, &spec, t + dt, &shifted, (i, j)).unwrap();
                let mut rhs = Mat2::zero();
                for k in Spin::ALL {
                    for l in Spin::ALL {
                        rhs += btb_system_functional(&table, &spec, t, &pts, (k, l))
                            .unwrap()
                            .scale(b.0[i.index()][j.index()][k.index()][l.index()]);
                    }
                }
                prop_assert!(lhs.dist(&rhs) < 1e-12 * (1.0 + lhs.max_abs()));
            }
        }
    }

    #[test]
    fn influence_invariant_under_shift(pts in points(5, 2.0), dt in 0.0..0.5f64) {
        prop_assume!(pts.len() % 2 == 1);
        let corr = Correlation::Direct(correlation());
        let t = 2.0;
        let mut before = pts.clone();
        before.push(t);
        let mut after = shift_map(&pts, dt);
        after.push(t + dt);
        let m = before.len();
        let neg = pts.iter().filter(|&&s| s < 0.0).count();
        for family in [PairingFamily::all(m), PairingFamily::connected(m), PairingFamily::btb(m, neg + 1)] {
            let x = influence_functional(&before, &family, &corr).unwrap();
            let y = influence_functional(&after, &family, &corr).unwrap();
            prop_assert!((x - y).norm() < 1e-12 * (1.0 + x.norm()));
        }
    }

    #[test]
    fn shift_map_is_injective_and_leaves_the_band(pts in points(8, 2.0), dt in 0.0..0.5f64) {
        let image = shift_map(&pts, dt);
        prop_assert!(sorted(&image));
        prop_assert!(image.iter().all(|s| s.abs() >= dt && s.abs() <= 2.0 + dt));
        let back: Vec<f64> = image.iter().map(|&s| if s >= dt { s - dt } else { s + dt }).collect();
        for (a, b) in back.iter().zip(&pts) {
            prop_assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn samplers_return_sorted_points(seed in any::<u64>(), m in 1usize..9, t in 0.0..3.0f64, dt in 0.01..0.2f64) {
        let mut rng = RngStream::new(seed, Phase::DysonShell, 0, m as u64, 0);
        let mut out = vec![0.0; m];
        for _ in 0..100 {
            sample_simplex(&mut out, -t, t, &mut rng);
            prop_assert!(sorted(&out) && out.iter().all(|s| s.abs() <= t));
            sample_shell(&mut out, t, dt, &mut rng);
            prop_assert!(sorted(&out) && out.iter().all(|s| s.abs() <= t + dt));
            prop_assert!(out.iter().any(|s| s.abs() <= dt));
        }
    }
}

#[test]
fn shell_and_shifted_simplex_partition_the_next_simplex() {
    // a point of the step-(n+1) simplex is either in the shell or in the
    // image of the step-n simplex, never both
    let mut rng = RngStream::new(3, Phase::DysonFull, 0, 5, 0);
    let (t, dt) = (1.0, 0.1);
    let mut out = [0.0; 5];
    for _ in 0..100_000 {
        sample_simplex(&mut out, -t - dt, t + dt, &mut rng);
        let in_shell = out.iter().any(|s| s.abs() <= dt);
        let pre: Vec<f64> = out.iter().map(|&s| if s >= 0.0 { s - dt } else { s + dt }).collect();
        let in_image = out.iter().all(|s| s.abs() >= dt) && shift_map(&pre, dt) == out;
        assert!(in_shell != in_image || out.iter().any(|s| s.abs() == dt));
    }
}
