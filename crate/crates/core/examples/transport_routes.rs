//! Second-order stiffness transported three ways: the closed form Φ H₀ Φᵀ,
//! direct integration of the Lyapunov-type flow, and the projected flow.
//!
//! Run with `cargo run --release --example transport_routes`.

use contact_focus::drift::{DriftSystem, DuffingParams};
use contact_focus::geometry::SymTensor2;
use contact_focus::transport::{h2_closed_form, h2_direct, integrate_characteristic, integrate_variational};
use nalgebra::{DMatrix, DVector};

fn main() -> contact_focus::Result<()> {
    let systems = [
        (DriftSystem::scalar_decay(1.0)?, vec![1.0], 5.0),
        (DriftSystem::linear(&DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -2.0])))?, vec![1.0, -1.0], 5.0),
        (DriftSystem::duffing(DuffingParams::standard())?, vec![0.0, 0.0], 20.0),
    ];
    for (sys, y0, t_end) in systems {
        let path = integrate_characteristic(&sys, &y0, 0.0, t_end, 1e-3)?;
        let phi = integrate_variational(&sys, &path, false, None)?;
        let h0 = SymTensor2::identity(sys.dim());
        let closed = h2_closed_form(&phi, &h0)?;
        let direct = h2_direct(&sys, &path, &h0)?;
        let last = closed.tensors.last().expect("non-empty");
        println!(
            "{:<13} |H2(T)| = {:.6e}  max |closed - direct| = {:.2e}",
            sys.name(),
            last.frobenius(),
            closed.max_distance(&direct)
        );
    }
    Ok(())
}
