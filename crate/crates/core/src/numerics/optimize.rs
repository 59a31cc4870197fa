use super::BoxDomain;
use crate::error::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Settings for [`minimize`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    /// Coarse grid points per coordinate, endpoints included.
    pub grid_points: usize,
    /// Target width of the final bracket (q = 1) or simplex (q > 1).
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            grid_points: 401,
            tolerance: 1e-8,
            max_iterations: 500,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_points < 3 {
            return Err(Error::InvalidArgument(format!(
                "optimizer grid needs >= 3 points per dimension, got {}",
                self.grid_points
            )));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "optimizer tolerance must be > 0, got {}",
                self.tolerance
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub argmin: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub iterations: usize,
}

fn sanitize(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        f64::INFINITY
    }
}

/// Global grid scan over `domain` followed by a local refinement of the best cell.
///
/// One-dimensional problems are refined by golden-section search over the two
/// cells adjacent to the best grid node; higher dimensions use a box-projected
/// Nelder–Mead simplex started at that node.
pub fn minimize<F>(mut objective: F, domain: &BoxDomain, config: &OptimizerConfig) -> Result<Minimum>
where
    F: FnMut(&[f64]) -> f64,
{
    config.validate()?;
    let q = domain.dim();
    let m = config.grid_points;
    let total = (m as u128).pow(q as u32);
    if total > 50_000_000 {
        return Err(Error::InvalidArgument(format!(
            "grid of {m}^{q} points is too large; lower grid_points"
        )));
    }
    let step: Vec<f64> = (0..q).map(|j| domain.width(j) / (m - 1) as f64).collect();
    let node = |j: usize, k: usize| -> f64 {
        if k == m - 1 {
            domain.upper()[j]
        } else {
            domain.lower()[j] + k as f64 * step[j]
        }
    };

    let mut idx = vec![0usize; q];
    let mut x = vec![0.0; q];
    let mut best: Option<(Vec<f64>, f64)> = None;
    for _ in 0..total {
        for j in 0..q {
            x[j] = node(j, idx[j]);
        }
        let v = objective(&x);
        if v.is_finite() && best.as_ref().is_none_or(|(_, b)| v < *b) {
            best = Some((x.clone(), v));
        }
        for k in idx.iter_mut() {
            *k += 1;
            if *k < m {
                break;
            }
            *k = 0;
        }
    }
    let (x0, f0) = best.ok_or(Error::NoFiniteObjective)?;
    let grid_evals = total as usize;

    let refined = if q == 1 {
        let lo = (x0[0] - step[0]).max(domain.lower()[0]);
        let hi = (x0[0] + step[0]).min(domain.upper()[0]);
        let (xr, fr, evals, iters) = golden_section(
            |t| objective(&[t]),
            lo,
            hi,
            config.tolerance,
            config.max_iterations,
        );
        Minimum {
            argmin: vec![xr],
            value: fr,
            evaluations: evals,
            iterations: iters,
        }
    } else {
        nelder_mead(
            &mut objective,
            &x0,
            &step,
            domain,
            config.tolerance,
            config.max_iterations,
        )
    };

    let evaluations = grid_evals + refined.evaluations;
    if refined.value <= f0 {
        Ok(Minimum {
            evaluations,
            ..refined
        })
    } else {
        Ok(Minimum {
            argmin: x0,
            value: f0,
            evaluations,
            iterations: refined.iterations,
        })
    }
}

/// Golden-section search on `[a, b]`; returns `(x, f(x), evaluations, iterations)`.
pub fn golden_section<F>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    tol: f64,
    max_iter: usize,
) -> (f64, f64, usize, usize)
where
    F: FnMut(f64) -> f64,
{
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = sanitize(f(c));
    let mut fd = sanitize(f(d));
    let mut evals = 2;
    let mut iters = 0;
    while (b - a) > tol && iters < max_iter {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = sanitize(f(c));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = sanitize(f(d));
        }
        evals += 1;
        iters += 1;
    }
    if fc <= fd {
        (c, fc, evals, iters)
    } else {
        (d, fd, evals, iters)
    }
}

/// Nelder–Mead simplex with every trial point projected onto `domain`.
pub fn nelder_mead<F>(
    mut f: F,
    x0: &[f64],
    step: &[f64],
    domain: &BoxDomain,
    tol: f64,
    max_iter: usize,
) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let q = x0.len();
    let mut evals = 0usize;
    let mut eval = |p: &mut Vec<f64>, evals: &mut usize| -> f64 {
        domain.clamp(p);
        *evals += 1;
        sanitize(f(p))
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(q + 1);
    let mut p = x0.to_vec();
    let v = eval(&mut p, &mut evals);
    simplex.push((p, v));
    for j in 0..q {
        let mut p = x0.to_vec();
        // step away from the nearer face so the vertex is not clamped onto x0
        let up = domain.upper()[j] - x0[j];
        let down = x0[j] - domain.lower()[j];
        p[j] += if up >= down { step[j].min(up) } else { -step[j].min(down) };
        let v = eval(&mut p, &mut evals);
        simplex.push((p, v));
    }

    let mut iters = 0;
    while iters < max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let diameter = simplex[1..]
            .iter()
            .flat_map(|(p, _)| p.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if diameter <= tol {
            break;
        }
        iters += 1;

        let centroid: Vec<f64> = (0..q)
            .map(|j| simplex[..q].iter().map(|(p, _)| p[j]).sum::<f64>() / q as f64)
            .collect();
        let worst = simplex[q].clone();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };

        let mut xr = along(-1.0);
        let fr = eval(&mut xr, &mut evals);
        if fr < simplex[0].1 {
            let mut xe = along(-2.0);
            let fe = eval(&mut xe, &mut evals);
            simplex[q] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[q - 1].1 {
            simplex[q] = (xr, fr);
        } else {
            let (mut xc, outside) = if fr < worst.1 {
                (along(-0.5), true)
            } else {
                (along(0.5), false)
            };
            let fc = eval(&mut xc, &mut evals);
            if (outside && fc <= fr) || (!outside && fc < worst.1) {
                simplex[q] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let mut p: Vec<f64> = best
                        .iter()
                        .zip(&vertex.0)
                        .map(|(b, v)| b + 0.5 * (v - b))
                        .collect();
                    let v = eval(&mut p, &mut evals);
                    *vertex = (p, v);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (argmin, value) = simplex.swap_remove(0);
    Minimum {
        argmin,
        value,
        evaluations: evals,
        iterations: iters,
    }
}
