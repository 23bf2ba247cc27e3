//! Runs the quick examples so they stay in sync with the library.

#[path = "../examples/dark_state_algebra.rs"]
mod dark_state_algebra;
#[path = "../examples/rate_theory.rs"]
mod rate_theory;
#[path = "../examples/steady_state.rs"]
mod steady_state;
#[path = "../examples/absorption_spectrum.rs"]
mod absorption_spectrum;
#[path = "../examples/self_check.rs"]
mod self_check;

fn quiet_output() {
    static DIR: std::sync::OnceLock<tempfile::TempDir> = std::sync::OnceLock::new();
    let dir = DIR.get_or_init(|| tempfile::tempdir().unwrap());
    std::env::set_var(darkcool::harness::ENV_OUT_DIR, dir.path());
}

#[test]
fn dark_state_algebra_runs() {
    dark_state_algebra::run().unwrap();
}

#[test]
fn rate_theory_runs() {
    rate_theory::run().unwrap();
}

#[test]
fn steady_state_runs() {
    steady_state::run().unwrap();
}

#[test]
fn absorption_spectrum_runs() {
    quiet_output();
    absorption_spectrum::run().unwrap();
}

#[test]
fn self_check_runs() {
    self_check::run().unwrap();
}
