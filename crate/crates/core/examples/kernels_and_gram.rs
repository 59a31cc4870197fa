//! Evaluates the supported kernels and checks that a Gram matrix is positive semidefinite.

use l2calib::KernelSpec;

fn main() -> l2calib::Result<()> {
    let kernels = [
        ("gaussian", KernelSpec::gaussian(1.0)?),
        ("matern 3/2", KernelSpec::matern(1.5, 1.0)?),
        ("matern 5/2", KernelSpec::matern(2.5, 1.0)?),
    ];
    println!("{:<12} {:>10} {:>10} {:>10}", "kernel", "k(0)", "k(0.5)", "k(2)");
    for (name, k) in &kernels {
        println!(
            "{name:<12} {:>10.6} {:>10.6} {:>10.6}",
            k.eval(&[0.0], &[0.0]),
            k.eval(&[0.0], &[0.5]),
            k.eval(&[0.0], &[2.0])
        );
    }

    let points: Vec<Vec<f64>> = (0..30)
        .map(|i| vec![(i as f64 * 0.37).sin() * 3.0, (i as f64 * 0.91).cos() * 3.0])
        .collect();
    for (name, k) in &kernels {
        let eig = k.gram(&points).symmetric_eigenvalues();
        println!("{name:<12} gram 30x30: min eigenvalue {:.3e}, max {:.3e}", eig.min(), eig.max());
    }
    Ok(())
}
