//! Master-equation cooling curve at the reference point.
//!
//! `cargo run --release --example cooling_dynamics` runs three decay times;
//! pass `--full` for the twelve-decay-time builtin used for the fitted n_ss.

use darkcool::harness::{builtin, output, run_cooling_dynamics};

pub fn run(full: bool) -> darkcool::Result<()> {
    let mut s = builtin("fig3")?;
    if !full {
        s.evolve_horizon = 3.0;
        s.samples = 61;
    }
    let r = run_cooling_dynamics(&s)?;
    for path in output::save("cooling_dynamics", &output::trajectory_rows(&r.trajectory), false)? {
        println!("wrote {}", path.display());
    }
    let c = &r.comparison;
    match &r.fit {
        Ok(f) => println!("fit: n0 = {:.4}  nss = {:.4e}  W = {:.4e}", f.n0, f.nss, f.w),
        Err(e) => println!("fit failed: {e}"),
    }
    println!("analytic: nss = {:.4e}  w_max = {:.4e}  resolvent W = {:.4e}",
        c.nss_analytic, c.w_max.unwrap_or(f64::NAN), c.w_resolvent.unwrap_or(f64::NAN));
    let d = &r.trajectory.diagnostics;
    println!("trace drift {:.1e}, min eigenvalue {:.1e}, tail {:.1e}", d.max_trace_drift, d.min_eigenvalue, d.max_tail);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    env_logger::init();
    let full = std::env::args().any(|a| a == "--full");
    if let Err(e) = run(full) {
        eprintln!("error: {e}");
        std::process::exit(darkcool::harness::exit_code(&e));
    }
}
