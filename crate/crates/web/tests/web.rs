use serde_json::Value;
use spinbath_web::{deff_curve, normal_modes, time_trace};

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn trace_starts_spin_down() {
    let t = parse(time_trace(1, 10, 0.724, 0.73, 0.0, 0.54, vec![0.8], 13.0, 50).unwrap());
    assert!((t["sigma_z"][0].as_f64().unwrap() + 1.0).abs() < 1e-12);
    assert_eq!(t["dim"], 22);
    assert_eq!(t["t_over_tau"][49].as_f64().unwrap(), 13.0);
}

#[test]
fn deff_curve_matches_core() {
    use spinbath::ed::diagonalize;
    use spinbath::ergodicity::effective_dimension;
    use spinbath::hilbert::{thermal_initial_state, MemoryBudget, Spin};
    use spinbath::model::{mhz, SystemSpec};
    let c = parse(deff_curve(2, 4, 0.707, 0.95, 0.54, vec![0.3, 1.0], 2.0, 5).unwrap());
    assert_eq!(c["omega_z_mhz"][4].as_f64().unwrap(), 2.0);
    let spec = SystemSpec {
        n_ions: 2,
        cutoff: 4,
        omega1: mhz(0.707),
        eta1: 0.54,
        rabi: mhz(0.95),
        omega_z: mhz(1.0),
        spin_ion: 1,
    };
    let sp = diagonalize(&spec.hamiltonian(MemoryBudget::default()).unwrap()).unwrap();
    let mix = thermal_initial_state(&sp.space, &[0.3, 1.0], Spin::Down, 0.0).unwrap();
    let d = effective_dimension(&sp, &mix).unwrap();
    assert_eq!(c["d_eff"][2].as_f64().unwrap(), d);
}

#[test]
fn modes_of_two_ions() {
    let m = parse(normal_modes(2, 0.7, 0.54).unwrap());
    let r = m["ratios"][1].as_f64().unwrap();
    assert!((r - 3f64.sqrt()).abs() < 1e-10);
}
