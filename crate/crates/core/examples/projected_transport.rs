//! Projected transport on the harmonic oscillator. Starting from a stiffness
//! that annihilates ∇H₀, the projected flow keeps H2 ∇H₀ = 0 along the orbit.
//!
//! Run with `cargo run --release --example projected_transport`.

use contact_focus::drift::DriftSystem;
use contact_focus::geometry::SymTensor2;
use contact_focus::transport::{degeneracy_profile, h2_direct, h2_projected, integrate_characteristic};
use nalgebra::{DMatrix, DVector};

fn main() -> contact_focus::Result<()> {
    let sys = DriftSystem::harmonic();
    let grad = |_t: f64, y: &[f64]| DVector::from_column_slice(y);
    let path = integrate_characteristic(&sys, &[1.0, 0.0], 0.0, 10.0, 1e-3)?;
    let h0 = SymTensor2::new(DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]))?;

    let projected = h2_projected(&sys, &path, &h0, &grad)?;
    let direct = h2_direct(&sys, &path, &h0)?;
    let worst = |s| degeneracy_profile(s, &path, &grad).into_iter().fold(0.0, f64::max);
    println!("projected: max relative |H2 grad H0| = {:.2e}", worst(&projected));
    println!("direct:    max relative |H2 grad H0| = {:.2e}", worst(&direct));
    println!("identity-branch steps: {}", projected.identity_branch_hits);
    Ok(())
}
