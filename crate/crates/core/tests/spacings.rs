use wegnerlab::disorder::{sample_field, SingleSiteDensity};
use wegnerlab::geometry::build_cube;
use wegnerlab::ids::{empirical_dos, empirical_ids, energy_grid, IdsRun};
use wegnerlab::levels::{collect_spacings, intensity_estimate, intensity_stderr, poisson_test, SpacingRun, SpacingSample};
use wegnerlab::operator::build_anderson;
use wegnerlab::spectral::full_spectrum;

fn strong_disorder() -> SingleSiteDensity {
    SingleSiteDensity::uniform(0.0, 10.0).unwrap()
}

fn sample(window: f64, realizations: usize) -> SpacingSample {
    collect_spacings(&SpacingRun {
        dim: 1,
        side: 1000,
        density: &strong_disorder(),
        energy: 5.0,
        window,
        realizations,
        seed: 17,
        workers: 2,
    })
    .unwrap()
}

#[test]
fn positions_are_recomputable_from_raw_spectra() {
    let s = sample(50.0, 4);
    let g = build_cube(1, 1000).unwrap();
    let spectra: Vec<Vec<f64>> = (0..4)
        .map(|r| {
            let h = build_anderson(&g, &sample_field(&strong_disorder(), &g, 17, r)).unwrap();
            full_spectrum(&h).unwrap().into_values()
        })
        .collect();
    let again = SpacingSample::from_spectra(5.0, 1000, 50.0, 17, &spectra);
    assert_eq!(again, s);
    for (xs, spec) in s.positions.iter().zip(&spectra) {
        let expected = spec.iter().filter(|&&e| (1000.0 * (e - 5.0)).abs() <= 50.0).count();
        assert_eq!(xs.len(), expected);
        assert_eq!(s.spacings[0].len() + 1, s.positions[0].len());
    }
}

#[test]
fn doubling_the_window_doubles_the_count() {
    let small = sample(100.0, 16).position_count() as f64;
    let large = sample(200.0, 16).position_count() as f64;
    let ratio = large / small;
    assert!((ratio - 2.0).abs() <= 0.4, "ratio {ratio}");
}

#[test]
fn strong_disorder_spacings_look_poissonian_with_a_wide_window() {
    // a window wide enough for well over 50 spacings per run
    let s = sample(400.0, 16);
    let rate = intensity_estimate(&s);
    let report = poisson_test(&s, rate, 0.15);
    assert!(report.spacing_count >= 50);
    assert!(report.passed, "{report:?}");
}

#[test]
fn intensity_agrees_with_the_dos() {
    let s = sample(200.0, 16);
    let intensity = intensity_estimate(&s);
    let ids = empirical_ids(&IdsRun {
        dim: 1,
        side: 1000,
        density: &strong_disorder(),
        energies: &energy_grid(4.8, 5.2, 0.01).unwrap(),
        realizations: 16,
        seed: 99,
        workers: 2,
    })
    .unwrap();
    let dos = empirical_dos(&ids, 0.2).unwrap();
    let k = dos.energies.iter().position(|e| (e - 5.0).abs() < 1e-9).unwrap();
    let se = (dos.stderr[k].powi(2) + intensity_stderr(&s).powi(2)).sqrt();
    assert!((intensity - dos.values[k]).abs() <= 3.0 * se, "{intensity} vs {}", dos.values[k]);
}
