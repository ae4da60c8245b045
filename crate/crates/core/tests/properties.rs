use proptest::prelude::*;

use wegnerlab::disorder::{sample_field, site_uniform, SingleSiteDensity};
use wegnerlab::geometry::{build_cube, cross_bonds, partition_cube};
use wegnerlab::ids::{empirical_ids, free_ids_infinite, IdsRun};
use wegnerlab::operator::{build_anderson, build_decoupled, decoupling_defect, Provenance};
use wegnerlab::spectral::{count_below, full_spectrum};
use wegnerlab::wegner::{k_ell, k_limit};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn index_map_is_a_bijection(d in 1usize..=3, side in 1usize..=6) {
        let g = build_cube(d, side).unwrap();
        for x in 0..g.len() {
            let c = g.coords(x);
            prop_assert_eq!(g.index(&c), Some(x));
            for y in g.neighbors(x) {
                let dist: usize = g.coords(y).iter().zip(&c).map(|(a, b)| a.abs_diff(*b)).sum();
                prop_assert_eq!(dist, 1);
            }
        }
    }

    #[test]
    fn partitions_cover_and_cut(d in 1usize..=2, ell in 1usize..=4, k in 1usize..=3) {
        let g = build_cube(d, ell * k).unwrap();
        let p = partition_cube(&g, ell).unwrap();
        let mut seen = vec![0; g.len()];
        for cell in p.cells() {
            prop_assert_eq!(cell.len(), ell.pow(d as u32));
            for &x in cell {
                seen[x] += 1;
            }
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
        for &(x, y) in cross_bonds(&p).pairs() {
            prop_assert_ne!(p.cell_of(x), p.cell_of(y));
        }
    }

    #[test]
    fn site_values_are_pure_functions(seed in any::<u64>(), r in 0u64..1000, side in 1usize..40) {
        let density = SingleSiteDensity::uniform(-2.0, 3.0).unwrap();
        let g = build_cube(1, side).unwrap();
        let field = sample_field(&density, &g, seed, r);
        for s in 0..side {
            prop_assert_eq!(field.values()[s], density.quantile(site_uniform(seed, r, s)));
        }
    }

    #[test]
    fn decoupling_only_raises_the_spectrum(seed in any::<u64>(), ell in 1usize..=3, k in 1usize..=3) {
        let density = SingleSiteDensity::uniform(0.0, 2.0).unwrap();
        let g = build_cube(2, ell * k).unwrap();
        let p = partition_cube(&g, ell).unwrap();
        let field = sample_field(&density, &g, seed, 0);
        let (defect, _) = decoupling_defect(&g, &p, Some(&field)).unwrap();
        prop_assert!(full_spectrum(&defect).unwrap().values()[0] >= -1e-10);
        let full = full_spectrum(&build_anderson(&g, &field).unwrap()).unwrap();
        let dec = build_decoupled(&g, &p, Some(&field)).unwrap();
        let diff = dec.difference(&build_anderson(&g, &field).unwrap(), Provenance::Defect).unwrap();
        for i in 0..g.len() {
            for j in 0..g.len() {
                prop_assert!((diff.get(i, j) - defect.get(i, j)).abs() <= 1e-12);
            }
        }
        let dec = full_spectrum(&dec).unwrap();
        for (a, b) in full.values().iter().zip(dec.values()) {
            prop_assert!(*a <= b + 1e-10);
        }
    }

    #[test]
    fn counting_is_monotone_in_energy(seed in any::<u64>(), e1 in -4.0f64..4.0, de in 0.0f64..3.0) {
        let density = SingleSiteDensity::uniform(-1.0, 1.0).unwrap();
        let g = build_cube(2, 5).unwrap();
        let h = build_anderson(&g, &sample_field(&density, &g, seed, 3)).unwrap();
        prop_assert!(count_below(&h, e1).unwrap().count <= count_below(&h, e1 + de).unwrap().count);
    }

    #[test]
    fn ids_is_bounded_and_nondecreasing(seed in 0u64..1000, side in 2usize..40) {
        let density = SingleSiteDensity::uniform(0.0, 1.0).unwrap();
        let energies: Vec<f64> = (0..30).map(|k| -2.5 + 0.2 * k as f64).collect();
        let c = empirical_ids(&IdsRun {
            dim: 1, side, density: &density, energies: &energies, realizations: 3, seed, workers: 1,
        }).unwrap();
        prop_assert!(c.values.iter().all(|v| (0.0..=1.0).contains(v)));
        prop_assert!(c.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn free_ids_symmetry(d in 1usize..=3, lambda in -7.0f64..7.0) {
        let a = free_ids_infinite(d, lambda).unwrap();
        let b = free_ids_infinite(d, -lambda).unwrap();
        prop_assert!((a + b - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn k_is_monotone(e in -3.0f64..3.0, step in 0.0f64..1.0, ell in 1usize..30) {
        let (wm, wp, delta) = (0.0, 1.0, 0.2);
        let lo = k_ell(1, ell, e, 0.4, wm, wp, delta).unwrap().value;
        let hi = k_ell(1, ell, e + step, 0.4, wm, wp, delta).unwrap().value;
        prop_assert!(lo <= hi);
        let a = k_ell(1, ell, 0.4, e, wm, wp, delta).unwrap().value;
        let b = k_ell(1, ell, 0.4, e + step, wm, wp, delta).unwrap().value;
        prop_assert!(b <= a);
        prop_assert!((-1.0..=1.0).contains(&lo));
    }

    #[test]
    fn k_limit_is_positive_inside_the_window(t in 0.001f64..0.999) {
        let (d, wm, wp, delta) = (2usize, -0.5, 1.5, 0.3);
        let lo = -2.0 * d as f64 + wm + 2.0 * delta;
        let hi = 2.0 * d as f64 + wp - 2.0 * delta;
        prop_assert!(k_limit(d, lo + t * (hi - lo), wm, wp, delta).unwrap() > 0.0);
    }
}

#[test]
fn k_ell_converges_along_doubling_sides() {
    let (e0, wm, wp, delta) = (0.0, 0.0, 1.0, 0.1);
    let k = k_limit(1, e0, wm, wp, delta).unwrap();
    let gaps: Vec<f64> = [8usize, 16, 32, 64]
        .iter()
        .map(|&ell| (k_ell(1, ell, e0 - delta, e0 + delta, wm, wp, delta).unwrap().value - k).abs())
        .collect();
    assert!(gaps[3] < gaps[0], "{gaps:?}");
    assert!(gaps[3] < 0.02, "{gaps:?}");
}
