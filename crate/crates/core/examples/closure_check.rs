//! Order-by-order closure of the contact Hamilton–Jacobi hierarchy with exact
//! rational arithmetic.
//!
//! Run with `cargo run --example closure_check`.

use contact_focus::closure::{self, default_p_max, poisson, rational, verify_closure};

fn main() -> contact_focus::Result<()> {
    let cases = [("harmonic", closure::harmonic()), ("linear, k = 1", closure::linear_const_k(rational(1, 1)))];
    for (name, data) in cases {
        let report = verify_closure(&data, default_p_max(data.order()))?;
        println!("{name}: all residuals zero = {}", report.all_residuals_zero);
        for r in &report.residuals {
            println!("  C{} = {}", r.p, r.residual.display);
        }
        println!(
            "  conditions hold = {}, {} sample points agree = {}",
            report.conditions.all_hold(),
            report.sample_check.points,
            report.sample_check.routes_agree
        );
        let h2 = data.component(2);
        println!("  H2 = {h2}, {{H2, H2}} = {}", poisson(&h2, &h2)?);
    }
    Ok(())
}
