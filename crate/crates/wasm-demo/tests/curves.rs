use skfi_wasm_demo::{cw_points, objective_points, one_atom_points};

#[test]
fn cw_curve_is_even_and_peaks_at_fixed_point() {
    let c = cw_points(2.0, 0.0, 2001).unwrap();
    assert_eq!(c.len(), 4002);
    let ys: Vec<f64> = c.chunks(2).map(|p| p[1]).collect();
    for i in 0..ys.len() {
        assert!((ys[i] - ys[ys.len() - 1 - i]).abs() < 1e-12);
    }
    let (imax, _) = ys
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |b, (i, &y)| if y > b.1 { (i, y) } else { b });
    assert!((c[2 * imax].abs() - 0.9575).abs() < 1e-3);
}

#[test]
fn one_atom_scan_starts_at_replica_symmetric_zero() {
    // at q = 0 with h = 0: ln 2 + xi(1)/2
    let c = one_atom_points(0.3, 0.0, 0.0, 11).unwrap();
    assert_eq!(c[0], 0.0);
    assert!((c[1] - (std::f64::consts::LN_2 + 0.045)).abs() < 1e-12);
    assert_eq!(c[20], 1.0);
}

#[test]
fn objective_lies_above_cw_curve() {
    let o = objective_points(2.0, 0.3, 0.3, 5).unwrap();
    let c = cw_points(2.0, 0.3, 5).unwrap();
    for (a, b) in o.chunks(2).zip(c.chunks(2)) {
        assert_eq!(a[0], b[0]);
        assert!(a[1] >= b[1] - 1e-9);
    }
}

#[test]
fn bad_input_is_reported() {
    assert!(cw_points(1.0, -0.1, 10).is_err());
    assert!(cw_points(1.0, 0.1, 1).is_err());
    assert!(one_atom_points(f64::NAN, 0.0, 0.0, 10).is_err());
}
