//! Amplification rate and focusing timescale across the Duffing damping range.
//!
//! Run with `cargo run --example spectrum`.

use contact_focus::spectral::{amplification_rate, duffing_regime};
use nalgebra::DMatrix;

fn main() -> contact_focus::Result<()> {
    for delta in [0.1, 0.3, 1.0, 2.0, 3.0] {
        let r = duffing_regime(delta, 1.0)?;
        println!(
            "delta = {delta:<4} sigma = {:.4}  tau_f = {:>8.4}  {:?}",
            r.sigma.unwrap_or(f64::NAN),
            r.tau_f.unwrap_or(f64::NAN),
            r.regime
        );
    }

    let shear = DMatrix::from_row_slice(2, 2, &[-0.5, 4.0, 0.0, -1.5]);
    let r = amplification_rate(&shear)?;
    println!("non-normal drift: eigenvalues {:?}, sigma {:?}", r.eigenvalues, r.sigma);
    Ok(())
}
