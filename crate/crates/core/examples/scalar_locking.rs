//! Contact locking on ẏ = -λy: |φ| grows like e^{λt}, |H2| decays like
//! e^{-2λt} and the coupling H2 φ decays like e^{-λt}.
//!
//! Run with `cargo run --example scalar_locking`.

use contact_focus::contact::{constraint_drift, fit_decay_rate, locking_diagnostics, run_focusing, ContactConfig};

fn main() -> contact_focus::Result<()> {
    for lambda in [0.5, 1.0, 2.0] {
        let cfg = ContactConfig::scalar_decay(lambda)?;
        let rec = run_focusing(&cfg)?;
        let fit = fit_decay_rate(&rec, cfg.fit_window, false)?;
        let d = locking_diagnostics(&rec, lambda)?;
        println!(
            "lambda = {lambda}: rate {:.6}  exponents ({:+.4}, {:+.4}, {:+.4})  drift {:.1e}",
            fit.fitted_rate,
            d.phi.fitted,
            d.stiffness.fitted,
            d.coupling.fitted,
            constraint_drift(&rec)
        );
    }
    Ok(())
}
