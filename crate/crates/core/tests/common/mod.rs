#![allow(dead_code)]

use nalgebra::{Complex, DMatrix};

/// H2 norm from the frequency response: trapezoid rule for
/// `(1 / 2pi) int tr(P(e^{jw})^* P(e^{jw})) dw` on `points` equispaced nodes.
pub fn h2_by_quadrature(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, d: &DMatrix<f64>, points: usize) -> f64 {
    let n = a.nrows();
    let to_c = |m: &DMatrix<f64>| m.map(|v| Complex::new(v, 0.0));
    let (ac, bc, cc, dc) = (to_c(a), to_c(b), to_c(c), to_c(d));
    let mut total = 0.0;
    for k in 0..points {
        let w = 2.0 * std::f64::consts::PI * k as f64 / points as f64;
        let z = Complex::new(w.cos(), w.sin());
        let resolvent = (DMatrix::<Complex<f64>>::identity(n, n) * z - &ac)
            .try_inverse()
            .expect("no poles on the unit circle");
        let p = &cc * resolvent * &bc + &dc;
        total += p.iter().map(|v| v.norm_sqr()).sum::<f64>();
    }
    (total / points as f64).sqrt()
}

/// H2 norm from the truncated impulse response `D, CB, CAB, ...`.
pub fn h2_by_impulse(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, d: &DMatrix<f64>, terms: usize) -> f64 {
    let mut energy = d.norm_squared();
    let mut ak_b = b.clone();
    for _ in 0..terms {
        energy += (c * &ak_b).norm_squared();
        ak_b = a * ak_b;
    }
    energy.sqrt()
}

/// `[A B; C D]` of a closed realization.
pub fn theta_of(a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, d: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, m) = (a.nrows(), b.ncols());
    let p = c.nrows();
    let mut t = DMatrix::zeros(n + p, n + m);
    t.view_mut((0, 0), (n, n)).copy_from(a);
    t.view_mut((0, n), (n, m)).copy_from(b);
    t.view_mut((n, 0), (p, n)).copy_from(c);
    t.view_mut((n, n), (p, m)).copy_from(d);
    t
}

pub fn report(criterion: u32, ok: bool, detail: &str) {
    println!("criterion {criterion}: {} ({detail})", if ok { "PASS" } else { "FAIL" });
}
