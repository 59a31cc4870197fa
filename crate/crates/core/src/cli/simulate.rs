use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;

use crate::calibrate::{fit_smoother, ko_calibrate, l2_calibrate_fitted, ols_calibrate, Method};
use crate::error::{Error, Result};
use crate::numerics::QuadratureRule;
use crate::testbed::SyntheticSystem;

use super::config::{ExampleKind, RunConfig};
use super::io::fmt_num;

/// Monte-Carlo summary for one `(method, σ²)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub method: Method,
    pub sigma2: f64,
    pub mean: f64,
    pub mse: f64,
    /// Divisor `R`, so that `mse = sd² + (mean - θ*)²`.
    pub sd: f64,
    pub reps: usize,
    pub theta_star: f64,
    pub failures: usize,
    /// Summed per-replication time spent in this method.
    pub seconds: f64,
    /// Every estimate in replication order; failures are absent.
    pub estimates: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub rows: Vec<ReportRow>,
}

impl SimulationReport {
    pub fn row(&self, method: Method, sigma2: f64) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.sigma2 == sigma2)
    }

    /// CSV with columns `method,sigma2,mean,mse,sd,reps,theta_star`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "method,sigma2,mean,mse,sd,reps,theta_star")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.method,
                fmt_num(r.sigma2),
                fmt_num(r.mean),
                fmt_num(r.mse),
                fmt_num(r.sd),
                r.reps,
                fmt_num(r.theta_star)
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii")
    }
}

type MethodOutcome = (std::result::Result<f64, String>, f64);

/// Stream index of replication `r` within noise level `sigma_index`.
fn stream_index(sigma_index: usize, r: usize) -> u64 {
    ((sigma_index as u64) << 32) | r as u64
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Runs every configured method on replication `r`; all methods see the same dataset.
fn run_replication(
    cfg: &RunConfig,
    system: &SyntheticSystem,
    rule: &QuadratureRule,
    stream: u64,
) -> Vec<MethodOutcome> {
    let fail = |e: Error| e.to_string();
    let data = match system.generate(cfg.seed, stream) {
        Ok(d) => d,
        Err(e) => {
            let msg = e.to_string();
            return cfg.methods.iter().map(|_| (Err(msg.clone()), 0.0)).collect();
        }
    };
    let model = system.model();
    let needs_smoother = cfg.methods.iter().any(|m| matches!(m, Method::L2 | Method::KO));
    let t0 = Instant::now();
    let smoother = if needs_smoother {
        Some(fit_smoother(&data, &cfg.smoother()).map_err(fail))
    } else {
        None
    };
    let smoother_secs = t0.elapsed().as_secs_f64();

    cfg.methods
        .iter()
        .map(|method| {
            let t = Instant::now();
            let result = match method {
                Method::OLS => ols_calibrate(&data, model.as_ref(), &cfg.optimizer)
                    .map(|e| e.theta_hat[0])
                    .map_err(fail),
                Method::L2 => match smoother.as_ref().expect("fitted") {
                    Ok(z) => l2_calibrate_fitted(z, model.as_ref(), rule, &cfg.optimizer)
                        .map(|e| e.theta_hat[0])
                        .map_err(fail),
                    Err(e) => Err(e.clone()),
                },
                Method::KO => match smoother.as_ref().expect("fitted") {
                    Ok(z) => {
                        let ko = cfg.ko(z.kernel().phi(), splitmix(cfg.seed ^ splitmix(stream)));
                        ko_calibrate(&data, model.as_ref(), &ko, &cfg.optimizer)
                            .map(|e| e.theta_hat[0])
                            .map_err(fail)
                    }
                    Err(e) => Err(e.clone()),
                },
            };
            let mut secs = t.elapsed().as_secs_f64();
            if *method != Method::OLS {
                secs += smoother_secs;
            }
            (result, secs)
        })
        .collect()
}

fn summarize(
    method: Method,
    sigma2: f64,
    theta_star: f64,
    outcomes: &[MethodOutcome],
) -> Result<ReportRow> {
    let total = outcomes.len();
    let estimates: Vec<f64> = outcomes.iter().filter_map(|(r, _)| r.as_ref().ok().copied()).collect();
    let failures = total - estimates.len();
    // more than 1% failed replications invalidates the cell
    if failures * 100 > total || estimates.is_empty() {
        let first_error = outcomes
            .iter()
            .find_map(|(r, _)| r.as_ref().err().cloned())
            .unwrap_or_default();
        return Err(Error::TooManyFailures {
            method: format!("{method} (sigma2 = {sigma2})"),
            failures,
            total,
            first_error,
        });
    }
    let k = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / k;
    let mse = estimates.iter().map(|t| (t - theta_star).powi(2)).sum::<f64>() / k;
    let sd = (estimates.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / k).sqrt();
    Ok(ReportRow {
        method,
        sigma2,
        mean,
        mse,
        sd,
        reps: estimates.len(),
        theta_star,
        failures,
        seconds: outcomes.iter().map(|(_, s)| s).sum(),
        estimates,
    })
}

/// Runs `cfg.replications` replications per noise level, in parallel over
/// replications, and aggregates by replication index.
pub fn run_simulation(cfg: &RunConfig) -> Result<SimulationReport> {
    cfg.validate()?;
    if cfg.example == ExampleKind::Custom {
        return Err(Error::Config("simulate supports example1 and example2 only".into()));
    }
    let rule = cfg.quadrature()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;

    let mut rows = Vec::new();
    for (si, &sigma2) in cfg.sigma2.iter().enumerate() {
        let system = cfg.system(sigma2)?;
        let theta_star = system.theta_star();
        let per_rep: Vec<Vec<MethodOutcome>> = pool.install(|| {
            (1..=cfg.replications)
                .into_par_iter()
                .map(|r| run_replication(cfg, &system, &rule, stream_index(si, r)))
                .collect()
        });
        for (mi, &method) in cfg.methods.iter().enumerate() {
            let outcomes: Vec<MethodOutcome> = per_rep.iter().map(|o| o[mi].clone()).collect();
            rows.push(summarize(method, sigma2, theta_star, &outcomes)?);
        }
    }
    Ok(SimulationReport { rows })
}

/// Runs the simulation and writes the report to `cfg.output` (or stdout).
pub fn cmd_simulate(cfg: &RunConfig) -> Result<SimulationReport> {
    let report = run_simulation(cfg)?;
    match &cfg.output {
        Some(path) => report.write_csv(std::fs::File::create(path)?)?,
        None => report.write_csv(std::io::stdout().lock())?,
    }
    Ok(report)
}

/// Statistical envelopes for the bundled examples. Returns one message per violation.
pub fn check_report(example: ExampleKind, report: &SimulationReport) -> Vec<String> {
    let mut bad = Vec::new();
    for r in &report.rows {
        let identity = r.sd * r.sd + (r.mean - r.theta_star).powi(2);
        if (identity - r.mse).abs() > 1e-10 * r.mse.max(1e-300) {
            bad.push(format!("{} sigma2={}: mse identity off", r.method, r.sigma2));
        }
    }
    let small = |r: &&ReportRow| (r.sigma2 - 0.1).abs() < 1e-12;
    match example {
        ExampleKind::Example1 => {
            for r in report.rows.iter().filter(small) {
                if (r.mean + 1.0).abs() > 0.01 || r.mse > 1e-3 {
                    bad.push(format!(
                        "example1 {}: mean {} mse {} outside |mean+1|<=0.01, mse<=1e-3",
                        r.method, r.mean, r.mse
                    ));
                }
            }
        }
        ExampleKind::Example2 => {
            for r in report.rows.iter().filter(small) {
                let bias = (r.mean - r.theta_star).abs();
                match r.method {
                    Method::L2 => {
                        if bias > 0.01 || !(1e-3..=6e-3).contains(&r.sd) {
                            bad.push(format!("example2 L2: mean {} sd {}", r.mean, r.sd));
                        }
                    }
                    Method::OLS => {
                        if bias > 0.01 {
                            bad.push(format!("example2 OLS: mean {}", r.mean));
                        }
                    }
                    Method::KO => {
                        if bias < 0.03 {
                            bad.push(format!("example2 KO: bias {bias} < 0.03"));
                        }
                    }
                }
            }
            for s2 in report.rows.iter().map(|r| r.sigma2).filter(|s| (*s - 1.0).abs() < 1e-12) {
                if let (Some(l2), Some(ols)) = (report.row(Method::L2, s2), report.row(Method::OLS, s2)) {
                    if l2.sd / ols.sd > 0.9 {
                        bad.push(format!("example2 sigma2=1: sd ratio {} > 0.9", l2.sd / ols.sd));
                    }
                }
            }
        }
        ExampleKind::Custom => {}
    }
    bad
}
