//! Cooling and heating rates: closed forms, the resolvent and physical units.

use darkcool::model::IonParams;
use darkcool::rates::*;

pub fn run() -> darkcool::Result<()> {
    let p = IonParams::fig3();
    println!("optimal Delta_g = {}", optimal_delta_g(&p));
    println!("optimality residual = {:.3e}", optimality_residual(&p)?);

    let res = rates_resolvent(&p)?;
    println!("resolvent:  A- = {:.6e}  A+ = {:.3e}  W = {:.6e}", res.a_minus, res.a_plus, res.w);
    println!("simplified: A- = {:.6e}", a_minus_simplified(&p)?);
    println!("w_max = {:.6e}  nss = {:.6e}", w_max(&p)?, nss_analytic(&p));

    let d = discrepancy_report(&p)?;
    println!(
        "printed cubic A- = {:.4e} ({:.0}% off the simplified form)",
        d.printed_a_minus,
        100.0 * d.printed_vs_simplified
    );

    // Away from the optimum the resolvent rate falls off.
    for dg in [60.0, 70.0, 74.5, 80.0, 90.0] {
        let q = IonParams { delta_g: dg, ..p.clone() };
        println!("  Delta_g = {dg:5.1}  W = {:.4e}", rates_resolvent(&q)?.w);
    }

    let units = PhysicalUnits::from_linewidth(&p, PhysicalUnits::YB171_TWO_GAMMA_HZ);
    println!("nu = {:.3} MHz", units.nu_hz / 1e6);
    println!("w_max = {:.2} kHz", units.to_hz(w_max(&p)?) / 1e3);
    let r = offres_scatter_estimate(
        units.to_hz(p.omega_g),
        PhysicalUnits::YB171_GAP_HZ,
        PhysicalUnits::YB171_TWO_GAMMA_HZ,
    )?;
    println!("off-resonant scattering = {:.3} kHz", r / 1e3);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(darkcool::harness::exit_code(&e));
    }
}
