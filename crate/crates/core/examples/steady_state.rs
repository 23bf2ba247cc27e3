//! Steady states: internal dark state and the joint cooling limit.

use darkcool::dynamics::{eigenvalue_near, internal_liouvillian, liouvillian_for, mean_phonon, steady_state};
use darkcool::linalg::DensityMatrix;
use darkcool::model::{dressed_frame, IonParams, RecoilOrder};
use darkcool::rates::{nss_analytic, rates_resolvent};
use num_complex::Complex64 as C64;

pub fn run() -> darkcool::Result<()> {
    let p = IonParams::fig3();

    let rho = steady_state(&internal_liouvillian(&p)?)?;
    let dark = DensityMatrix::pure(&dressed_frame(&p)?.state_d);
    println!("internal steady state vs |D><D|: trace distance {:.2e}", rho.trace_distance(&dark)?);

    for cutoff in [4, 6, 8] {
        let q = p.with_cutoff(cutoff);
        let l = liouvillian_for(&q, RecoilOrder::First)?;
        let nss = mean_phonon(&steady_state(&l)?, cutoff)?;
        let w = rates_resolvent(&q)?.w;
        let lam = eigenvalue_near(&l, C64::new(-w, 0.0), 64)?;
        println!("cutoff {cutoff}: nss = {nss:.5e}  relaxation rate = {:.5e} (resolvent {w:.5e})", -lam.re);
    }
    println!("analytic nss = {:.5e}", nss_analytic(&p));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(darkcool::harness::exit_code(&e));
    }
}
