use nalgebra::DMatrix;

/// Inverse of a symmetric positive definite matrix, refined with defects `I - M X`
/// accumulated in compensated arithmetic.
pub fn refined_inverse(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut inv = m.clone().lu().try_inverse().expect("nonsingular");
    for _ in 0..2 {
        let defect = DMatrix::from_fn(n, n, |i, j| {
            let (mut hi, mut lo) = (if i == j { 1.0 } else { 0.0 }, 0.0f64);
            for k in 0..n {
                let p = -m[(i, k)] * inv[(k, j)];
                let p_err = (-m[(i, k)]).mul_add(inv[(k, j)], -p);
                let s = hi + p;
                let b = s - hi;
                lo += (hi - (s - b)) + (p - b) + p_err;
                hi = s;
            }
            hi + lo
        });
        inv += &inv * defect;
    }
    inv
}
