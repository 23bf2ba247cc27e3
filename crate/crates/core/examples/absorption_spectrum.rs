//! Absorption spectrum with its two dark resonances.

use darkcool::harness::{builtin, output, run_spectrum};

pub fn run() -> darkcool::Result<()> {
    let r = run_spectrum(&builtin("fig2")?)?;
    for path in output::save("absorption_spectrum", &output::spectrum_rows(&r.spectrum), false)? {
        println!("wrote {}", path.display());
    }
    let f = r.features?;
    println!("gamma = {:.6}", builtin("fig2")?.params.gamma());
    println!("zeros at Delta_r = {:.6} and {:.6}", f.zeros[0], f.zeros[1]);
    println!("separation = {:.6} (expected {:?})", f.separation.unwrap_or(f64::NAN), r.spectrum.expected_separation);
    if let Some(ip) = f.interior_peak {
        println!("peak between the zeros: {:.4e} at {:.4}", ip.value, ip.detuning);
    }
    println!("global peak: {:.4e} at {:.4}", f.peak.value, f.peak.detuning);
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(darkcool::harness::exit_code(&e));
    }
}
