use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use eiv_h2::linalg::{close_feedback, min_eig};
use eiv_h2::param::{right_inverse_moore_penrose, right_inverse_weighted};
use eiv_h2::sdp::{smat, svec};
use eiv_h2::uncertainty::{
    multiplier_form, sample_delta_with, scalar_interval, spectral_ball, stack_sources, MultiplierFamily, SampleMode,
};

fn matrix(r: usize, c: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0f64..1.0, r * c).prop_map(move |v| DMatrix::from_vec(r, c, v))
}

fn symmetric(d: usize) -> impl Strategy<Value = DMatrix<f64>> {
    matrix(d, d).prop_map(|m| &m + m.transpose())
}

proptest! {
    #[test]
    fn svec_preserves_inner_product((s, t) in (1usize..12).prop_flat_map(|d| (symmetric(d), symmetric(d)))) {
        let (vs, vt) = (svec(&s).unwrap(), svec(&t).unwrap());
        let inner: f64 = vs.iter().zip(&vt).map(|(a, b)| a * b).sum();
        prop_assert!((inner - s.component_mul(&t).sum()).abs() <= 1e-10);
        prop_assert!((smat(&vs).unwrap() - &s).amax() <= 1e-14);
    }

    #[test]
    fn push_through_identity(
        (a, b, c, d, delta) in (1usize..4, 1usize..4, 1usize..4).prop_flat_map(|(n, w, z)| {
            (matrix(n, n), matrix(n, w), matrix(z, n), matrix(z, w), matrix(w, z))
        })
    ) {
        let delta = delta * 0.3;
        let d = d * 0.3;
        let closed = close_feedback(&a, &b, &c, &d, &delta).unwrap();
        let w = delta.nrows();
        let other = &a + &b * (DMatrix::identity(w, w) - &delta * &d).try_inverse().unwrap() * &delta * &c;
        prop_assert!((closed - other).amax() <= 1e-10);
    }

    #[test]
    fn right_inverses_are_exact(x in (1usize..4).prop_flat_map(|n| matrix(n, n + 5)), w in matrix(9, 9)) {
        let cols = x.ncols();
        let r = w.view((0, 0), (cols, cols)).into_owned();
        let r = &r * r.transpose() + DMatrix::identity(cols, cols) * 0.1;
        let eye = DMatrix::identity(x.nrows(), x.nrows());
        if let Ok(g) = right_inverse_moore_penrose(&x) {
            prop_assert!((&x * g - &eye).amax() <= 1e-8);
        }
        if let Ok(g) = right_inverse_weighted(&x, &r) {
            prop_assert!((&x * g - &eye).amax() <= 1e-8);
        }
    }

    #[test]
    fn multipliers_are_valid(seed in any::<u64>(), bx in 0.0f64..2.0, bd in 0.0f64..2.0, taus in prop::collection::vec(0.0f64..100.0, 3)) {
        let set = stack_sources(vec![
            spectral_ball("a", 2, 3, bx).unwrap(),
            scalar_interval("b", bd).unwrap(),
            spectral_ball("c", 1, 4, 1.0).unwrap(),
        ]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let family = MultiplierFamily::new(set.clone());
        let p = family.multiplier_matrix(&taus).unwrap();
        for mode in [SampleMode::Boundary, SampleMode::Interior] {
            let delta = sample_delta_with(&set, &mut rng, mode);
            prop_assert!(min_eig(&multiplier_form(&p, &delta)) >= -1e-9 * 100.0);
        }
    }
}
