//! Characteristic flow of the driven Duffing oscillator and the Jacobi
//! determinant identity det Φ(t) = exp(∫ tr M).
//!
//! Run with `cargo run --release --example liouville`.

use contact_focus::drift::{DriftSystem, DuffingParams};
use contact_focus::transport::{integrate_characteristic, integrate_variational, liouville_error};

fn main() -> contact_focus::Result<()> {
    let params = DuffingParams::standard();
    let sys = DriftSystem::duffing(params)?;
    let path = integrate_characteristic(&sys, &[0.5, 0.0], 0.0, 20.0, 1e-3)?;
    let phi = integrate_variational(&sys, &path, false, None)?;

    for k in (0..path.len()).step_by(4000) {
        let t = path.times()[k];
        let y = &path.states()[k];
        let det = phi.determinants()[k];
        println!(
            "t = {t:>5.1}  y = ({:+.4}, {:+.4})  det = {det:.6e}  e^(-delta t) = {:.6e}",
            y[0],
            y[1],
            (-params.delta * t).exp()
        );
    }
    println!("max relative Liouville error: {:.2e}", liouville_error(&sys, &path, &phi)?);
    Ok(())
}
