//! Final phonon number against Ω_g and Ω_r at the optimal Δ_g, plus a
//! custom sweep.

use darkcool::harness::{builtin, output, run_sweep, Scenario, SweepResult};
use darkcool::model::IonParams;

fn show(r: &SweepResult) {
    println!("{} over {}:", r.scenario, r.axis);
    for p in &r.points {
        println!(
            "  {:6.2}  nss {:.4e}  analytic {:.4e}  W {:.4e}  {}",
            p.axis_value,
            p.nss_numeric.unwrap_or(f64::NAN),
            p.nss_analytic,
            p.w_numeric.unwrap_or(f64::NAN),
            p.status
        );
    }
}

pub fn run() -> darkcool::Result<()> {
    for name in ["fig4", "fig5"] {
        let r = run_sweep(&builtin(name)?)?;
        show(&r);
        output::save(name, &output::sweep_rows(&r), true)?;
    }

    // Any float parameter can be an axis.
    let mut s = Scenario::new("eta_scan", IonParams::fig3()).with_sweep("eta1", vec![0.02, 0.05, 0.08]);
    s.params.eta2 = -0.05;
    s.sweep_cutoff = 6;
    show(&run_sweep(&s)?);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(darkcool::harness::exit_code(&e));
    }
}
