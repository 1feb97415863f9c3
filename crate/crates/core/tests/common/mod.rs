#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use nextdoor::rng::rng_from;
use nextdoor::{Dataset, Family, Matrix, Scalar};

/// `n x p` standard normal design with `y = X beta + noise`.
pub fn gaussian_data(n: usize, p: usize, beta: &[f64], noise: f64, seed: u64) -> Dataset<f64> {
    let mut rng = rng_from(seed);
    let cols: Vec<Vec<f64>> = (0..p).map(|_| (0..n).map(|_| f64::standard_normal(&mut rng)).collect()).collect();
    let y: Vec<f64> = (0..n)
        .map(|i| {
            (0..p).map(|j| cols[j][i] * beta.get(j).copied().unwrap_or(0.0)).sum::<f64>()
                + noise * f64::standard_normal(&mut rng)
        })
        .collect();
    let names = (0..p).map(|j| format!("x{j}")).collect();
    Dataset::new(Matrix::from_columns(n, &cols).unwrap(), y, names, Family::Gaussian, None).unwrap()
}

/// Least squares with intercept via the normal equations: `(beta, intercept)`.
pub fn ols_oracle(d: &Dataset<f64>) -> (Vec<f64>, f64) {
    let (n, p) = (d.n(), d.p());
    let a = DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { d.x().get(i, j - 1) });
    let y = DVector::from_column_slice(d.y());
    let sol = (a.transpose() * &a).lu().solve(&(a.transpose() * y)).expect("full rank design");
    (sol.iter().skip(1).copied().collect(), sol[0])
}

/// Columns centered and orthonormalized so that `X^T X / n = I`.
pub fn orthonormal_design(n: usize, p: usize, seed: u64) -> Matrix<f64> {
    let mut rng = rng_from(seed);
    let mut a = DMatrix::from_fn(n, p, |_, _| f64::standard_normal(&mut rng));
    for mut c in a.column_iter_mut() {
        let mu = c.mean();
        c.add_scalar_mut(-mu);
    }
    let q = a.qr().q();
    let scale = (n as f64).sqrt();
    let cols: Vec<Vec<f64>> = (0..p).map(|j| q.column(j).iter().map(|v| v * scale).collect()).collect();
    Matrix::from_columns(n, &cols).unwrap()
}

/// Adaptive Simpson quadrature.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + rec(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    rec(f, a, fa, b, fb, m, fm, whole, tol, 50)
}

/// `P(Z >= x | a < Z < b)` for `Z ~ N(0, sd^2)` by quadrature of the density.
/// Each integral is scaled by the density at its lower limit so far tails stay
/// representable; the scales are recombined exactly.
pub fn truncated_sf_quadrature(x: f64, sd: f64, a: f64, b: f64) -> f64 {
    let (ta, tb, tx) = (a / sd, b / sd, x / sd);
    let scaled = |lo: f64| {
        let f = move |t: f64| (-0.5 * (t - lo) * (t + lo)).exp();
        let rough = integrate(&f, lo, tb, 1e-6);
        integrate(&f, lo, tb, 1e-15 * rough)
    };
    scaled(tx) / scaled(ta) * (-0.5 * (tx - ta) * (tx + ta)).exp()
}

/// Symmetric eigenvalues via nalgebra.
pub fn min_eigenvalue(m: &Matrix<f64>) -> f64 {
    let k = m.nrows();
    let a = DMatrix::from_fn(k, k, |i, j| m.get(i, j));
    a.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}
