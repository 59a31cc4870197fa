use nalgebra::DMatrix;

/// Default central-difference step for coordinate `x_j`.
pub fn default_step(xj: f64) -> f64 {
    1e-5f64.max(1e-5 * xj.abs())
}

fn steps(x: &[f64], h: Option<f64>) -> Vec<f64> {
    x.iter().map(|&v| h.unwrap_or_else(|| default_step(v))).collect()
}

/// Central-difference gradient. `h = None` uses [`default_step`] per coordinate.
pub fn fd_grad<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: Option<f64>) -> Vec<f64> {
    let hs = steps(x, h);
    let mut p = x.to_vec();
    (0..x.len())
        .map(|j| {
            p[j] = x[j] + hs[j];
            let fp = f(&p);
            p[j] = x[j] - hs[j];
            let fm = f(&p);
            p[j] = x[j];
            (fp - fm) / (2.0 * hs[j])
        })
        .collect()
}

/// Central-difference Hessian, symmetric by construction.
pub fn fd_hess<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: Option<f64>) -> DMatrix<f64> {
    let q = x.len();
    let hs = steps(x, h);
    let mut p = x.to_vec();
    let f0 = f(x);
    let mut hess = DMatrix::zeros(q, q);
    for j in 0..q {
        p[j] = x[j] + hs[j];
        let fp = f(&p);
        p[j] = x[j] - hs[j];
        let fm = f(&p);
        p[j] = x[j];
        hess[(j, j)] = (fp - 2.0 * f0 + fm) / (hs[j] * hs[j]);
        for k in 0..j {
            let mut corner = |sj: f64, sk: f64| {
                p[j] = x[j] + sj * hs[j];
                p[k] = x[k] + sk * hs[k];
                let v = f(&p);
                p[j] = x[j];
                p[k] = x[k];
                v
            };
            let v = (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0) + corner(-1.0, -1.0))
                / (4.0 * hs[j] * hs[k]);
            hess[(j, k)] = v;
            hess[(k, j)] = v;
        }
    }
    hess
}
