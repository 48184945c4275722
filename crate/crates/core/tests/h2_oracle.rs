mod common;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use eiv_h2::linalg::spectral_radius;
use eiv_h2::system::{h2_norm, true_h2, example_system};

use common::{h2_by_impulse, h2_by_quadrature};

#[test]
fn gramian_matches_frequency_quadrature_on_random_systems() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..20 {
        let n = rng.random_range(1..=5);
        let m = rng.random_range(1..=3);
        let p = rng.random_range(1..=3);
        let mut r = |rows, cols| DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0));
        let mut a: DMatrix<f64> = r(n, n);
        let rho = spectral_radius(&a);
        if rho > 0.0 {
            a *= 0.8 / rho;
        }
        let (b, c, d) = (r(n, m), r(p, n), r(p, m));
        let gramian = h2_norm(&a, &b, &c, &d).unwrap();
        let quad = h2_by_quadrature(&a, &b, &c, &d, 4096);
        assert!((gramian - quad).abs() <= 1e-6 * quad, "{gramian} vs {quad}");
    }
}

#[test]
fn example_plant_agrees_with_impulse_sum() {
    let s = example_system();
    let g = true_h2(&s).unwrap();
    let i = h2_by_impulse(&s.a, &s.bp, &s.cp, &s.dp, 5000);
    assert!((g - i).abs() <= 1e-9 * i);
}

#[test]
fn unstable_system_has_no_h2_norm() {
    let a = DMatrix::from_element(1, 1, 1.1);
    let one = DMatrix::from_element(1, 1, 1.0);
    assert!(h2_norm(&a, &one, &one, &one).is_err());
}
