//! Dressed basis, dark state and the two resonance conditions.

use darkcool::linalg::{dagger, StateVector};
use darkcool::model::{build_h_at, dressed_frame, magic_condition, IonParams, Level};

pub fn run() -> darkcool::Result<()> {
    let p = IonParams::fig3();
    let f = dressed_frame(&p)?;
    println!("Omega_B = {:.6}  Omega_+ = {:.6}  Omega_D = {:.6}", f.omega_big_b, f.omega_plus, f.omega_d);
    println!("eta_B = {:.6}  eta_D = {:.6}", f.eta_b, f.eta_d);

    let m = magic_condition(&p);
    println!("dark state exists: {}  blue sideband cancelled: {}", m.dark_state, m.blue_eit);

    // H_at|D> = -Delta_gr |D>
    let hd = build_h_at(&p).apply(&f.state_d)?;
    let shifted = hd.add(&f.state_d.scale(p.delta_gr.into()));
    println!("|H_at D + Delta_gr D| = {:.3e}", shifted.norm());

    let names = ["g", "d", "r", "e"];
    for (label, v) in [("D", &f.state_d), ("B", &f.state_b), ("+", &f.state_plus)] {
        let coeffs: Vec<String> = (0..4).map(|i| format!("{}:{:+.4}", names[i], v[i].re)).collect();
        println!("|{label}> = {}", coeffs.join(" "));
    }

    // The basis change is unitary.
    let u = f.basis_change();
    let defect = dagger(&u).matmul(&u).max_abs_diff(&darkcool::linalg::Operator::identity(4));
    println!("|U'U - 1| = {defect:.3e}");

    let e = StateVector::basis(4, Level::E.index());
    println!("<e|D> = {:.3e}", e.inner(&f.state_d).norm());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(darkcool::harness::exit_code(&e));
    }
}
