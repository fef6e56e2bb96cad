use rixs_core::analysis::{herfd, tfy, to_energy_transfer, transfer_constant, xes_cut};
use rixs_core::beamline::io::{read_frame_csv, write_frame_csv};
use rixs_core::beamline::{elastic_scan, even_energies, noiseless_frame, render_frame, Detector, ScanSettings};
use rixs_core::calibration::{find_peak, fit_dispersion, frame_to_spectrum};
use rixs_core::kh::{simulate_rixs_map, simulate_xes_cut, ModelParams};
use rixs_core::spectra::io::{read_map_csv, read_map_json, write_map_csv, write_map_json};
use rixs_core::{EnergyGrid, Error, Spectrum};

fn default_map() -> rixs_core::RixsMap {
    let inc = EnergyGrid::new(10140.0, 1.0, 110).unwrap();
    let em = EnergyGrid::new(8310.0, 1.0, 140).unwrap();
    simulate_rixs_map(&ModelParams::wsi2_default(), &inc, &em).unwrap()
}

#[test]
fn map_round_trips_through_csv_and_json() {
    let m = default_map();
    let mut csv = Vec::new();
    write_map_csv(&mut csv, &m).unwrap();
    let back = read_map_csv(csv.as_slice()).unwrap();
    assert_eq!(back.incident(), m.incident());
    for (a, b) in back.intensity().iter().zip(m.intensity()) {
        assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
    }
    let mut json = Vec::new();
    write_map_json(&mut json, &m).unwrap();
    assert_eq!(read_map_json(json.as_slice()).unwrap(), m);
}

#[test]
fn transfer_stripe_sits_at_the_3d_binding_energy() {
    let m = default_map();
    let tm = to_energy_transfer(&m, &EnergyGrid::new(1700.0, 1.0, 180).unwrap()).unwrap();
    let t = transfer_constant(&tm, 10196.0).unwrap();
    assert!((t - 1809.0).abs() <= 1.0, "{t}");
}

#[test]
fn cut_matches_the_direct_xes_simulation() {
    let p = ModelParams::wsi2_default();
    let m = default_map();
    let cut = xes_cut(&m, 10230.0).unwrap();
    let direct = simulate_xes_cut(&p, 10230.0, m.emission()).unwrap();
    // The map adds incident broadening, so only the fluorescence position is shared.
    let peak = |s: &Spectrum| s.grid().point(s.argmax());
    assert_eq!(peak(&cut), peak(&direct));
    assert!(xes_cut(&m, 10400.0).is_err());
}

#[test]
fn herfd_is_narrower_than_tfy_and_empty_windows_fail() {
    let m = default_map();
    let t = tfy(&m);
    let h = herfd(&m, [8397.0, 8398.4]).unwrap();
    assert!(h.max() < t.max());
    assert!(matches!(herfd(&m, [8000.0, 8100.0]), Err(Error::EmptyWindow { .. })));
}

#[test]
fn frames_survive_csv_byte_for_byte() {
    let det = Detector::default();
    let spec = xes_cut(&default_map(), 10230.0).unwrap();
    let f = render_frame(&spec, &det, 1.0, 100.0, 9).unwrap();
    let mut a = Vec::new();
    write_frame_csv(&mut a, &f).unwrap();
    assert_eq!(read_frame_csv(a.as_slice()).unwrap(), f.pixels);
    let mut b = Vec::new();
    write_frame_csv(&mut b, &render_frame(&spec, &det, 1.0, 100.0, 9).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn calibrated_frame_reproduces_the_emission_spectrum() {
    let det = Detector::default();
    let energies = even_energies(8310.0, 8450.0, 8);
    let settings = ScanSettings { noiseless: true, ..ScanSettings::default() };
    let frames = elastic_scan(&energies, &det, &settings).unwrap();
    let pts: Vec<(f64, f64)> = frames.iter().zip(&energies).map(|(f, &e)| (find_peak(f).unwrap().position, e)).collect();
    let fit = fit_dispersion(&pts).unwrap();
    assert!(fit.rms_residual < 1e-3);

    let spec = xes_cut(&default_map(), 10230.0).unwrap();
    let frame = noiseless_frame(&spec, &det, 1.0, 1e6).unwrap();
    let target = EnergyGrid::new(8330.0, 1.0, 100).unwrap();
    let back = frame_to_spectrum(&frame, &fit.coeffs, &target).unwrap();
    let truth = rixs_core::spectra::resample(&spec, &target);
    let (b, t) = (back.values(), truth.values());
    let scale = b.iter().sum::<f64>() / t.iter().sum::<f64>();
    let worst = b.iter().zip(t).map(|(x, y)| (x / scale - y).abs()).fold(0.0, f64::max);
    assert!(worst < 0.03 * truth.max(), "{worst} vs {}", truth.max());
    assert_eq!(back.grid().point(back.argmax()), truth.grid().point(truth.argmax()));
}
