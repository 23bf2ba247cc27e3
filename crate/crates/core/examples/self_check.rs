//! Invariant suite, fault injection and parameter files.

use darkcool::harness::check::Fault;
use darkcool::harness::config::render_params;
use darkcool::harness::{self_check, self_check_from_config, CheckOptions};
use darkcool::model::IonParams;

pub fn run() -> darkcool::Result<()> {
    let report = self_check_from_config(&render_params(&IonParams::fig3()), CheckOptions::default())?;
    for c in &report.checks {
        println!("{:?} {} residual {:.2e}", c.status, c.name, c.residual);
    }
    println!("passed: {}", report.passed());

    let broken = self_check(&IonParams::fig3(), CheckOptions { fault: Some(Fault::HalveGamma) });
    for c in broken.failures() {
        println!("injected fault caught by {}: {}", c.name, c.detail);
    }

    match self_check_from_config("omega_g = 10\nomega_x = 1\n", CheckOptions::default()) {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => println!("unexpectedly accepted"),
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(darkcool::harness::exit_code(&e));
    }
}
