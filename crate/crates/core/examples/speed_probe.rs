use nalgebra::{DMatrix, Cholesky};
use num_complex::Complex;
use std::time::Instant;

fn main() {
    // real symmetric eigen, matmul, cholesky, svd at sizes used by the IPM
    for &m in &[82usize, 138, 210] {
        let a = DMatrix::<f64>::from_fn(m, m, |i, j| ((i * 31 + j * 17 + 5) % 97) as f64 / 97.0 - 0.5);
        let s = (&a * a.transpose()) + DMatrix::identity(m, m);
        let t = Instant::now();
        let n = 5;
        for _ in 0..n { let _e = s.clone().symmetric_eigenvalues(); }
        let eig_vals = t.elapsed().as_secs_f64() / n as f64;
        let t = Instant::now();
        for _ in 0..n { let _e = s.clone().symmetric_eigen(); }
        let eig_full = t.elapsed().as_secs_f64() / n as f64;
        let t = Instant::now();
        for _ in 0..n { let _c = Cholesky::new(s.clone()).unwrap(); }
        let chol = t.elapsed().as_secs_f64() / n as f64;
        let t = Instant::now();
        for _ in 0..n { let _p = &s * &s; }
        let mm = t.elapsed().as_secs_f64() / n as f64;
        let t = Instant::now();
        for _ in 0..n { let _sv = s.clone().svd(true, true); }
        let svd = t.elapsed().as_secs_f64() / n as f64;
        println!("m={m}: eigvals {:.1}ms eig {:.1}ms chol {:.2}ms matmul {:.2}ms svd {:.1}ms",
            eig_vals*1e3, eig_full*1e3, chol*1e3, mm*1e3, svd*1e3);
    }
    // complex hermitian eigen at lift sizes
    for &m in &[101usize, 290] {
        let re = DMatrix::<f64>::from_fn(m, m, |i, j| ((i * 31 + j * 17 + 5) % 97) as f64 / 97.0 - 0.5);
        let im = DMatrix::<f64>::from_fn(m, m, |i, j| ((i * 13 + j * 41 + 3) % 89) as f64 / 89.0 - 0.5);
        let a = re.map(|x| Complex::new(x, 0.0)) + im.map(|x| Complex::new(0.0, x));
        let h = (&a + a.adjoint()) * Complex::new(0.5, 0.0);
        let t = Instant::now();
        let _e = h.clone().symmetric_eigen();
        println!("complex hermitian eig m={m}: {:.1}ms", t.elapsed().as_secs_f64()*1e3);
    }
}
