//! Sensitivity of the final phonon number to Ω_MW and Ω_g at fixed Δ_g.

use darkcool::harness::{run_robustness, RobustnessWindow};

pub fn run() -> darkcool::Result<()> {
    for name in ["fig6", "fig7"] {
        let r = run_robustness(name, None)?;
        println!(
            "{name} ({}): max {:.3e}  min {:.3e}  spread {:.3e}  minimum at {:?}",
            r.sweep.axis,
            r.max_nss.unwrap_or(f64::NAN),
            r.min_nss.unwrap_or(f64::NAN),
            r.spread.unwrap_or(f64::NAN),
            r.argmin
        );
    }
    let off = RobustnessWindow { center: -0.4, half_width: 0.2, points: 5 };
    let r = run_robustness("fig6", Some(off))?;
    println!("window around Omega_MW = -0.4: minimum at {:?}", r.argmin);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(darkcool::harness::exit_code(&e));
    }
}
