use std::f64::consts::PI;

use super::BoxDomain;
use crate::error::{Error, Result};

/// Nodes and positive weights of a cubature rule on a box; weights sum to its volume.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    domain: BoxDomain,
}

impl QuadratureRule {
    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(z, w)| w * f(z)).sum()
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton iteration on `P_m`.
pub fn gauss_legendre_1d(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1, "need at least one node");
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    let mf = m as f64;
    for i in 0..m.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (mf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // three-term recurrence for P_m(x) and P_{m-1}(x)
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = mf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() <= 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    (nodes, weights)
}

/// Tensor-product Gauss–Legendre rule with `m` nodes per coordinate, mapped to `domain`.
pub fn gauss_legendre(domain: &BoxDomain, m: usize) -> Result<QuadratureRule> {
    if m == 0 {
        return Err(Error::InvalidArgument("quadrature needs m >= 1".into()));
    }
    let (x1, w1) = gauss_legendre_1d(m);
    let d = domain.dim();
    let total = m
        .checked_pow(d as u32)
        .ok_or_else(|| Error::InvalidArgument(format!("{m}^{d} nodes overflow")))?;
    let mut nodes = Vec::with_capacity(total);
    let mut weights = Vec::with_capacity(total);
    let mut idx = vec![0usize; d];
    for _ in 0..total {
        let mut z = Vec::with_capacity(d);
        let mut w = 1.0;
        for (j, &k) in idx.iter().enumerate() {
            let half = 0.5 * domain.width(j);
            let mid = domain.lower()[j] + half;
            z.push(mid + half * x1[k]);
            w *= half * w1[k];
        }
        nodes.push(z);
        weights.push(w);
        for k in idx.iter_mut() {
            *k += 1;
            if *k < m {
                break;
            }
            *k = 0;
        }
    }
    Ok(QuadratureRule {
        nodes,
        weights,
        domain: domain.clone(),
    })
}

/// `∫ (f - g)^2 dz` over the rule's box, with the plain (unnormalized) measure.
pub fn l2_distance_sq<F, G>(f: F, g: G, rule: &QuadratureRule) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> f64,
{
    let mut acc = 0.0;
    for (z, w) in rule.nodes.iter().zip(&rule.weights) {
        let diff = f(z) - g(z);
        if !diff.is_finite() {
            return Err(Error::NonFinite(format!("integrand at node {z:?}")));
        }
        acc += w * diff * diff;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit() -> BoxDomain {
        BoxDomain::interval(0.0, 1.0).unwrap()
    }

    #[test]
    fn midpoint_rule() {
        let r = gauss_legendre(&unit(), 1).unwrap();
        assert_eq!(r.nodes, vec![vec![0.5]]);
        assert_relative_eq!(r.weights[0], 1.0, max_relative = 1e-15);
    }

    #[test]
    fn two_point_is_cubic_exact() {
        let r = gauss_legendre(&unit(), 2).unwrap();
        assert_relative_eq!(r.integrate(|z| z[0].powi(3)), 0.25, max_relative = 1e-15);
    }

    #[test]
    fn sin_squared_over_period() {
        let r = gauss_legendre(&BoxDomain::interval(0.0, 2.0 * PI).unwrap(), 64).unwrap();
        assert_relative_eq!(r.integrate(|z| z[0].sin().powi(2)), PI, max_relative = 1e-12);
    }

    #[test]
    fn weights_sum_to_volume_and_nodes_inside() {
        let b = BoxDomain::new(vec![0.0, -2.0], vec![2.0 * PI, 2.0]).unwrap();
        for m in [1, 2, 7, 32] {
            let r = gauss_legendre(&b, m).unwrap();
            assert_eq!(r.len(), m * m);
            let s: f64 = r.weights.iter().sum();
            assert_relative_eq!(s, b.volume(), max_relative = 1e-10);
            assert!(r.weights.iter().all(|w| *w > 0.0));
            assert!(r.nodes.iter().all(|z| b.contains(z)));
        }
    }

    #[test]
    fn polynomial_exactness_per_degree() {
        for m in 1..12usize {
            let r = gauss_legendre(&unit(), m).unwrap();
            for deg in 0..(2 * m) {
                let exact = 1.0 / (deg as f64 + 1.0);
                assert_relative_eq!(
                    r.integrate(|z| z[0].powi(deg as i32)),
                    exact,
                    max_relative = 1e-12
                );
            }
        }
    }

    #[test]
    fn doubling_nodes_converges() {
        let b = BoxDomain::interval(0.0, 2.0 * PI).unwrap();
        let f = |z: &[f64]| (z[0] / 10.0).exp() * z[0].sin() * (3.0 * z[0]).cos();
        let a = gauss_legendre(&b, 128).unwrap().integrate(f);
        let c = gauss_legendre(&b, 256).unwrap().integrate(f);
        assert!(((a - c) / c).abs() < 1e-10);
    }

    #[test]
    fn l2_distance_properties() {
        let r = gauss_legendre(&unit(), 8).unwrap();
        let f = |z: &[f64]| z[0] * z[0];
        let g = |z: &[f64]| z[0];
        assert_eq!(l2_distance_sq(f, f, &r).unwrap(), 0.0);
        let a = l2_distance_sq(f, g, &r).unwrap();
        let b = l2_distance_sq(g, f, &r).unwrap();
        assert_eq!(a, b);
        // ∫ (x^2 - x)^2 = 1/5 - 1/2 + 1/3
        assert_relative_eq!(a, 1.0 / 30.0, max_relative = 1e-13);
        let err = l2_distance_sq(|_| f64::NAN, g, &r).unwrap_err();
        assert!(err.to_string().contains("node"));
    }
}
