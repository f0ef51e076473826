//! Recover the Legendre-over-Chebyshev expansion triangle from sign-stripped
//! value pairs.
//!
//! 500 grid points carry Chebyshev values T_0..T_10 against Legendre values
//! P_0..P_5, each side multiplied by an independent random sign. Selecting
//! the first 5 columns of each side recovers the exact 5x5 expansion
//! triangle; the d=4, n=5 run shows that a wide (trace-decreasing) mapping
//! is not a truncation of the square one and reaches a higher fidelity.

use unifit::experiments::{generate_poly_sample, recover_poly_mapping};
use unifit::model::SolverConfig;

fn print_matrix(m: &nalgebra::DMatrix<f64>) {
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:>10.6}", m[(i, j)])).collect();
        println!("  [{}]", row.join(" "));
    }
}

fn main() {
    let sample = generate_poly_sample(11, 6, 500, 1).unwrap();
    let config = SolverConfig::default();

    let (u55, rep55) = recover_poly_mapping(&sample, 5, 5, &config).unwrap();
    println!("d=5, n=5 (converged={}, F={:.6}):", rep55.converged, rep55.fidelity);
    print_matrix(u55.matrix());

    let (u44, rep44) = recover_poly_mapping(&sample, 4, 4, &config).unwrap();
    println!("\nd=4, n=4 (converged={}, F={:.6}):", rep44.converged, rep44.fidelity);
    print_matrix(u44.matrix());

    let (u45, rep45) = recover_poly_mapping(&sample, 4, 5, &config).unwrap();
    println!("\nd=4, n=5 (converged={}, F={:.6}):", rep45.converged, rep45.fidelity);
    print_matrix(u45.matrix());
    println!(
        "\nfidelity gain from the extra input dimension: {:.6} -> {:.6}",
        rep44.fidelity, rep45.fidelity
    );
}
