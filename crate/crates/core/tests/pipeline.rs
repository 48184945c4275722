use nalgebra::DMatrix;

use eiv_h2::analysis::{
    assemble_analysis_lft, assemble_h2_sdp, build_analysis_regression, right_inverse, robust_h2_bound, GChoice,
    DEFAULT_EPS,
};
use eiv_h2::sdp::{ClarabelBackend, SolverOptions};
use eiv_h2::sim::{corrupt, random_experiment, NoiseBounds};
use eiv_h2::system::example_system;
use eiv_h2::uncertainty::membership;

#[test]
fn larger_noise_bounds_never_tighten_the_bound() {
    let sys = example_system();
    let small = NoiseBounds::default();
    let large = NoiseBounds {
        v_x: 1.3 * small.v_x,
        v_zp: 1.3 * small.v_zp,
        d_bar: 1.3 * small.d_bar,
    };
    let opts = SolverOptions::default();
    let mut compared = 0;
    for seed in 0..12u64 {
        let traj = random_experiment(&sys, 100, small.d_bar, seed).unwrap();
        let data = corrupt(&traj, &small, 100 + seed).unwrap();
        let mut gammas = Vec::new();
        for bounds in [small, large] {
            let ar = build_analysis_regression(&data, &sys.bd, &bounds).unwrap();
            let g = right_inverse(&ar, GChoice::MoorePenrose).unwrap().g;
            let lft = assemble_analysis_lft(&ar, &g, true).unwrap();
            let (_, cert) = robust_h2_bound(&lft, DEFAULT_EPS, &ClarabelBackend, &opts).unwrap();
            gammas.push(cert.gamma);
        }
        match (gammas[0], gammas[1]) {
            (Some(a), Some(b)) => {
                compared += 1;
                assert!(b >= a * (1.0 - 1e-5), "seed {seed}: {b} < {a}");
            }
            (None, Some(_)) => panic!("seed {seed}: larger set feasible, smaller not"),
            _ => {}
        }
    }
    assert!(compared >= 10);
}

#[test]
fn reduced_problem_size_does_not_grow_with_n() {
    let sys = example_system();
    let bounds = NoiseBounds::default();
    let size = |n| {
        let traj = random_experiment(&sys, n, bounds.d_bar, 3).unwrap();
        let data = corrupt(&traj, &bounds, 4).unwrap();
        let ar = build_analysis_regression(&data, &sys.bd, &bounds).unwrap();
        let g = right_inverse(&ar, GChoice::Weighted).unwrap().g;
        let lft = assemble_analysis_lft(&ar, &g, true).unwrap();
        let sdp = assemble_h2_sdp(&lft, DEFAULT_EPS).unwrap();
        let sides: Vec<usize> = sdp.problem.constraints.iter().map(|c| c.side()).collect();
        (lft.w_dim(), lft.z_dim(), sdp.problem.num_coordinates(), sides)
    };
    assert_eq!(size(50), size(300));
}

#[test]
fn corrupted_data_noise_is_admissible() {
    let sys = example_system();
    let bounds = NoiseBounds::default();
    for seed in 0..1000u64 {
        let n = 7 + (seed as usize % 40);
        let traj = random_experiment(&sys, n, bounds.d_bar, seed).unwrap();
        let data = corrupt(&traj, &bounds, seed + 7).unwrap();
        let ar = build_analysis_regression(&data, &sys.bd, &bounds).unwrap();
        let noise = &data.truth.as_ref().unwrap().noise;
        let blocks: [&DMatrix<f64>; 4] = [&noise.v_x, &noise.v_x_plus, &noise.v_zp, &noise.d];
        for (source, v) in ar.set.sources().iter().zip(blocks) {
            let m = membership(source, v).unwrap();
            assert!(m.ok, "seed {seed}, {}: {}", source.label(), m.min_eig);
        }
    }
}
