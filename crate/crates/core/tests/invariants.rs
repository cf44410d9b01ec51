use std::f64::consts::PI;

use proptest::prelude::*;
use waveguide_mps::model::dicke_ladder;
use waveguide_mps::mps::MpsState;
use waveguide_mps::oracle::permanent;
use waveguide_mps::scattering::spectra::{dft, momentum_grid};
use waveguide_mps::tensor::truncated_svd;
use waveguide_mps::{DenseTensor, SvdTruncation, C64};

fn reconstruct(u: &DenseTensor, s: &[f64], v: &DenseTensor) -> DenseTensor {
    let (rows, r) = u.expect_matrix().unwrap();
    let us = DenseTensor::from_fn(&[rows, r], |i| u.get(i) * s[i[1]]);
    us.matmul(v).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn svd_truncation_error_is_the_discarded_weight(rows in 1usize..9, cols in 1usize..9, keep in 1usize..9, seed in 0u64..1000) {
        let m = DenseTensor::pseudo_random(&[rows, cols], seed);
        let full = truncated_svd(&m, &SvdTruncation::exact(16)).unwrap();
        prop_assert!(reconstruct(&full.u, &full.s, &full.v).max_abs_diff(&m) < 1e-10);
        prop_assert!(full.s.windows(2).all(|w| w[0] >= w[1]));

        let cut = truncated_svd(&m, &SvdTruncation::exact(keep)).unwrap();
        let err = m.sub(&reconstruct(&cut.u, &cut.s, &cut.v)).unwrap().norm_sqr() / m.norm_sqr();
        prop_assert!((err - cut.discarded_weight).abs() < 1e-10, "{} vs {}", err, cut.discarded_weight);
    }

    #[test]
    fn momentum_grid_is_unitary(half in 1i64..20, k_ref in -3.0f64..3.0, seed in 0u64..1000) {
        let coords: Vec<i64> = (-half..=half).collect();
        let n = coords.len();
        let field = DenseTensor::pseudo_random(&[n], seed).into_data();
        let ks = momentum_grid(n, k_ref);
        prop_assert_eq!(ks.len(), n);
        prop_assert!(ks.iter().all(|&k| k > -PI && k <= PI));
        let fk = dft(&field, &coords, &ks);
        let a: f64 = field.iter().map(|z| z.norm_sqr()).sum();
        let b: f64 = fk.iter().map(|z| z.norm_sqr()).sum();
        prop_assert!((a - b).abs() < 1e-10 * a.max(1.0));
    }

    #[test]
    fn dicke_commutator(m in 1usize..12, cap in 1usize..12) {
        prop_assume!(cap <= m);
        let l = dicke_ladder(m, cap).unwrap();
        let c = l.lowering.matmul(&l.raising).unwrap().sub(&l.raising.matmul(&l.lowering).unwrap()).unwrap();
        // [b, b†] = 1 − 2n/m below the cap
        for n in 0..cap {
            let want = 1.0 - 2.0 * n as f64 / m as f64;
            prop_assert!((c.get(&[n, n]).re - want).abs() < 1e-12);
        }
        if cap == m {
            // the top of the symmetric ladder is reached exactly
            prop_assert!(l.raising.get(&[m, m - 1]).norm() > 0.0);
        }
    }

    #[test]
    fn permanent_is_row_symmetric_and_multilinear(n in 1usize..6, seed in 0u64..1000, scale in -2.0f64..2.0) {
        let m = DenseTensor::pseudo_random(&[n, n], seed).into_data();
        let p = permanent(&m, n);
        let mut swapped = m.clone();
        for j in 0..n {
            swapped.swap(j, (n - 1) * n + j);
        }
        prop_assert!((permanent(&swapped, n) - p).norm() < 1e-10);
        let mut scaled = m.clone();
        for z in scaled[..n].iter_mut() {
            *z *= C64::new(scale, 0.5);
        }
        prop_assert!((permanent(&scaled, n) - p * C64::new(scale, 0.5)).norm() < 1e-10);
    }

    #[test]
    fn mps_dense_round_trip(len in 2usize..6, d in 2usize..4, bond in 1usize..6, seed in 0u64..1000) {
        let dims = vec![d; len];
        let psi = MpsState::pseudo_random(&dims, bond, seed).unwrap();
        let v = psi.to_dense().unwrap();
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        prop_assert!((norm - 1.0).abs() < 1e-10);
        let back = MpsState::from_dense(&dims, &v, &SvdTruncation::exact(64)).unwrap();
        let w = back.to_dense().unwrap();
        let dev = v.iter().zip(&w).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(dev < 1e-10);
    }
}
