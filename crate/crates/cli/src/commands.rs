//! The pipeline stages behind each subcommand. Every stage validates the
//! whole configuration and loads its inputs before it writes anything.

use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rixs_core::analysis::{
    fwhm, herfd, rebin_incident, tfy, to_energy_transfer, track_peaks, transfer_constant, white_line_centroid,
    write_tracks_csv, PeakClass, PeakTracks,
};
use rixs_core::beamline::io::{write_frame_csv, FrameSidecar, ManifestEntry, ScanManifest};
use rixs_core::beamline::{child_seed, elastic_scan, noiseless_frame, render_frame, DispersionCoeffs};
use rixs_core::calibration::{find_peak, fit_dispersion, frame_to_spectrum, CalibrationReport, DispersionFit, PeakFit};
use rixs_core::heros::{reconstruct_xas, ReconstructionParams};
use rixs_core::kh::{simulate_rixs_map, ModelParams};
use rixs_core::spectra::io::{
    load_map, write_file, write_map_csv, write_map_json, write_spectrum_csv, write_transfer_map_csv,
    write_transfer_map_json,
};
use rixs_core::spectra::{EnergyGrid, EnergyTransferMap, RixsMap, Spectrum};
use rixs_core::{Error, Result};
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::plot::{heatmap, line_plot, Series};

/// Seed offset separating map-row streams from elastic-scan streams.
const MAP_STREAM: u64 = 1 << 32;

fn ensure_dir(p: &Path) -> Result<()> {
    fs::create_dir_all(p).map_err(|e| Error::io(p, e))
}

fn write_text(p: &Path, text: &str) -> Result<()> {
    fs::write(p, text).map_err(|e| Error::io(p, e))
}

fn write_json<T: Serialize>(p: &Path, v: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(v).map_err(|e| Error::Numerical(e.to_string()))?;
    text.push('\n');
    write_text(p, &text)
}

fn tag(e: f64) -> String {
    format!("{e:.1}")
}

fn map_rows(m: &RixsMap) -> Vec<Vec<f64>> {
    m.intensity().rows().into_iter().map(|r| r.to_vec()).collect()
}

fn write_spectrum(p: &Path, s: &Spectrum) -> Result<()> {
    write_file(p, |w| write_spectrum_csv(w, s, &[]))
}

fn write_map_files(dir: &Path, stem: &str, m: &RixsMap, title: &str) -> Result<()> {
    write_file(&dir.join(format!("{stem}.csv")), |w| write_map_csv(w, m))?;
    write_file(&dir.join(format!("{stem}.json")), |w| write_map_json(w, m))?;
    let xs: Vec<f64> = m.emission().points().collect();
    let ys: Vec<f64> = m.incident().points().collect();
    let svg = heatmap(title, "emission energy (eV)", "incident energy (eV)", &xs, &ys, &map_rows(m));
    write_text(&dir.join(format!("{stem}.svg")), &svg)
}

// ---------------------------------------------------------------- simulate

#[derive(Debug, Serialize)]
struct SimulationManifest<'a> {
    model: &'a ModelParams,
    incident_grid: EnergyGrid,
    emission_grid: EnergyGrid,
    map_csv: &'a str,
    map_json: &'a str,
    rows: Vec<RowEntry>,
}

#[derive(Debug, Serialize)]
struct RowEntry {
    #[serde(rename = "incident_eV")]
    incident: f64,
    file: String,
}

pub fn simulate(cfg: &PipelineConfig) -> Result<RixsMap> {
    cfg.validate()?;
    info!("simulating {}x{} map", cfg.incident().count(), cfg.emission().count());
    let map = simulate_rixs_map(&cfg.model, &cfg.incident(), &cfg.emission())?;
    let dir = cfg.output_dir.join("simulate");
    ensure_dir(&dir.join("xes"))?;
    write_map_files(&dir, "rixs_map", &map, "RIXS map")?;
    let mut rows = Vec::with_capacity(map.incident().count());
    for (i, w1) in map.incident().points().enumerate() {
        let file = format!("xes/xes_{}eV.csv", tag(w1));
        write_spectrum(&dir.join(&file), &map.row(i))?;
        rows.push(RowEntry { incident: w1, file });
    }
    write_json(
        &dir.join("manifest.json"),
        &SimulationManifest {
            model: &cfg.model,
            incident_grid: *map.incident(),
            emission_grid: *map.emission(),
            map_csv: "rixs_map.csv",
            map_json: "rixs_map.json",
            rows,
        },
    )?;
    Ok(map)
}

// --------------------------------------------------------------- calibrate

#[derive(Debug, Clone, Serialize)]
pub struct CalibrationSummary {
    #[serde(flatten)]
    pub report: CalibrationReport,
    pub true_coeffs: DispersionCoeffs,
    /// Largest |fitted − true| energy over the scan range, eV.
    #[serde(rename = "max_abs_error_eV")]
    pub max_abs_error: f64,
    pub peaks: Vec<PeakFit>,
    pub noiseless: bool,
}

pub struct Calibration {
    pub fit: DispersionFit,
    pub summary: CalibrationSummary,
}

pub fn calibrate(cfg: &PipelineConfig) -> Result<Calibration> {
    cfg.validate()?;
    let det = cfg.detector.detector()?;
    let energies = cfg.detector.scan_energies();
    let frames = elastic_scan(&energies, &det, &cfg.detector.scan_settings())?;
    let peaks = frames.iter().map(find_peak).collect::<Result<Vec<_>>>()?;
    let points: Vec<(f64, f64)> = peaks.iter().zip(&energies).map(|(p, &e)| (p.position, e)).collect();
    let fit = fit_dispersion(&points)?;

    let [lo, hi] = cfg.detector.scan_range;
    let mut max_abs_error: f64 = 0.0;
    for k in 0..=1000 {
        let e = lo + (hi - lo) * k as f64 / 1000.0;
        let x = det.dispersion.position_of_energy(e)?;
        max_abs_error = max_abs_error.max((fit.coeffs.energy(x) - e).abs());
    }
    let summary = CalibrationSummary {
        report: fit.report(&points),
        true_coeffs: det.dispersion,
        max_abs_error,
        peaks,
        noiseless: cfg.detector.noiseless,
    };
    info!("calibration rms residual {:.3e} eV", fit.rms_residual);

    let dir = cfg.output_dir.join("calibrate");
    ensure_dir(&dir.join("frames"))?;
    let mut manifest = ScanManifest::default();
    for (k, (f, &e)) in frames.iter().zip(&energies).enumerate() {
        let frame = format!("frames/frame_{k:02}.csv");
        let sidecar = format!("frames/frame_{k:02}.json");
        write_file(&dir.join(&frame), |w| write_frame_csv(w, f))?;
        write_json(&dir.join(&sidecar), &FrameSidecar::of(f))?;
        manifest.frames.push(ManifestEntry { index: k, energy: e, frame, sidecar });
    }
    write_json(&dir.join("scan_manifest.json"), &manifest)?;
    write_json(&dir.join("calibration_report.json"), &summary)?;

    let mut csv = String::from("position_px,energy_eV,fitted_eV,residual_eV\n");
    for p in &summary.report.points {
        csv.push_str(&format!("{},{},{},{}\n", p.position, p.energy, p.fitted, p.residual));
    }
    write_text(&dir.join("residuals.csv"), &csv)?;
    let xs: Vec<f64> = summary.report.points.iter().map(|p| p.position).collect();
    let ys: Vec<f64> = summary.report.points.iter().map(|p| p.residual).collect();
    let svg = line_plot(
        "Calibration residuals",
        "detector position (px)",
        "energy − fitted (eV)",
        &[Series { name: "residual".into(), xs: &xs, ys: &ys, points: true }],
    );
    write_text(&dir.join("residuals.svg"), &svg)?;
    Ok(Calibration { fit, summary })
}

// ----------------------------------------------------------------- measure

/// Render each map row through the detector, then convert it back to
/// energy with the fitted calibration. Result is in map intensity units.
pub fn measure_map(cfg: &PipelineConfig, model_map: &RixsMap, fit: &DispersionFit) -> Result<RixsMap> {
    let det = cfg.detector.detector()?;
    let d = &cfg.detector;
    let scale = 1.0 / (d.map_flux_scale * d.exposure);
    let row_seed = child_seed(d.seed, MAP_STREAM);
    let rows = (0..model_map.incident().count())
        .map(|i| {
            let s = model_map.row(i);
            let mut f = if d.noiseless {
                noiseless_frame(&s, &det, d.exposure, d.map_flux_scale)?
            } else {
                render_frame(&s, &det, d.exposure, d.map_flux_scale, child_seed(row_seed, i as u64))?
            };
            f.meta.incident_energy = Some(model_map.incident().point(i));
            frame_to_spectrum(&f, &fit.coeffs, model_map.emission())?.scaled(scale)
        })
        .collect::<Result<Vec<_>>>()?;
    let m = RixsMap::from_rows(*model_map.incident(), rows)?;
    let dir = cfg.output_dir.join("measure");
    ensure_dir(&dir)?;
    write_map_files(&dir, "measured_map", &m, "Measured RIXS map")?;
    Ok(m)
}

// ----------------------------------------------------------------- extract

#[derive(Debug, Clone, Serialize)]
pub struct CutPeak {
    #[serde(rename = "emission_eV")]
    pub emission: f64,
    pub height: f64,
    pub class: PeakClass,
}

#[derive(Debug, Clone, Serialize)]
pub struct CutSummary {
    #[serde(rename = "incident_eV")]
    pub incident: f64,
    pub file: String,
    pub peaks: Vec<CutPeak>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExtractSummary {
    pub map_shape: [usize; 2],
    #[serde(rename = "rebin_step_eV")]
    pub rebin_step: f64,
    #[serde(rename = "herfd_window_eV")]
    pub herfd_window: [f64; 2],
    #[serde(rename = "tfy_white_line_eV")]
    pub tfy_white_line: f64,
    #[serde(rename = "herfd_white_line_eV")]
    pub herfd_white_line: f64,
    #[serde(rename = "tfy_fwhm_eV")]
    pub tfy_fwhm: Option<f64>,
    #[serde(rename = "herfd_fwhm_eV")]
    pub herfd_fwhm: Option<f64>,
    /// 1 − HERFD FWHM / TFY FWHM.
    pub herfd_sharpening: Option<f64>,
    /// Median transfer at the row maximum, over rows at least 1.5 Γ_2p below the resonance.
    #[serde(rename = "transfer_constant_eV")]
    pub transfer_constant: Option<f64>,
    /// Median position of fluorescence-classified peaks.
    #[serde(rename = "fluorescence_line_eV")]
    pub fluorescence_line: Option<f64>,
    pub cuts: Vec<CutSummary>,
}

pub struct Extracted {
    pub tfy: Spectrum,
    pub herfd: Spectrum,
    pub transfer_map: EnergyTransferMap,
    pub tracks: PeakTracks,
    pub summary: ExtractSummary,
}

pub fn load_map_for(cfg: &PipelineConfig, map_path: Option<&Path>) -> Result<(PathBuf, RixsMap)> {
    let path = map_path
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.output_dir.join("simulate").join("rixs_map.csv"));
    let map = load_map(&path)?;
    Ok((path, map))
}

pub fn extract(cfg: &PipelineConfig, map: &RixsMap) -> Result<Extracted> {
    cfg.validate()?;
    let m = rebin_incident(map, cfg.rebin_step)?;
    let t = tfy(&m);
    let h = herfd(&m, cfg.herfd_window)?;
    let tm = to_energy_transfer(&m, &cfg.transfer())?;
    let tracks = track_peaks(&m, cfg.min_rel_height)?;
    let cuts = cfg
        .xes_cuts
        .iter()
        .map(|&w1| rixs_core::analysis::xes_cut(&m, w1).map(|s| (w1, s)))
        .collect::<Result<Vec<_>>>()?;

    let tfy_fwhm = fwhm(&t);
    let herfd_fwhm = fwhm(&h);
    let p = &cfg.model;
    let mut fluor: Vec<f64> = tracks
        .rows
        .iter()
        .flat_map(|r| r.peaks.iter().filter(|q| q.class == PeakClass::Fluorescence).map(|q| q.emission))
        .collect();
    fluor.sort_by(f64::total_cmp);
    let cut_summaries: Vec<CutSummary> = cuts
        .iter()
        .map(|(w1, _)| {
            let i = m.incident().nearest_index(*w1).expect("cut is inside the grid");
            CutSummary {
                incident: *w1,
                file: format!("xes_cuts/xes_{}eV.csv", tag(*w1)),
                peaks: tracks.rows[i]
                    .peaks
                    .iter()
                    .map(|q| CutPeak { emission: q.emission, height: q.height, class: q.class })
                    .collect(),
            }
        })
        .collect();
    let summary = ExtractSummary {
        map_shape: [m.incident().count(), m.emission().count()],
        rebin_step: cfg.rebin_step,
        herfd_window: cfg.herfd_window,
        tfy_white_line: t.grid().point(t.argmax()),
        herfd_white_line: h.grid().point(h.argmax()),
        tfy_fwhm,
        herfd_fwhm,
        herfd_sharpening: tfy_fwhm.zip(herfd_fwhm).map(|(a, b)| 1.0 - b / a),
        transfer_constant: transfer_constant(&tm, p.resonance() - 1.5 * p.gamma_2p),
        fluorescence_line: (!fluor.is_empty()).then(|| fluor[fluor.len() / 2]),
        cuts: cut_summaries,
    };

    let dir = cfg.output_dir.join("extract");
    ensure_dir(&dir.join("xes_cuts"))?;
    write_spectrum(&dir.join("tfy.csv"), &t)?;
    write_spectrum(&dir.join("herfd.csv"), &h)?;
    let inc: Vec<f64> = t.energies().collect();
    let tn = t.normalized_to_max();
    let hn = h.normalized_to_max();
    write_file(&dir.join("yields.csv"), |w| {
        write_spectrum_csv(w, &tn, &[("herfd", hn.values())])
    })?;
    write_text(
        &dir.join("yields.svg"),
        &line_plot(
            "TFY and HERFD (unit maximum)",
            "incident energy (eV)",
            "normalized intensity",
            &[
                Series { name: "TFY".into(), xs: &inc, ys: tn.values(), points: false },
                Series { name: "HERFD".into(), xs: &inc, ys: hn.values(), points: false },
            ],
        ),
    )?;

    write_file(&dir.join("energy_transfer_map.csv"), |w| write_transfer_map_csv(w, &tm))?;
    write_file(&dir.join("energy_transfer_map.json"), |w| write_transfer_map_json(w, &tm))?;
    let tx: Vec<f64> = tm.transfer().points().collect();
    let ty: Vec<f64> = tm.incident().points().collect();
    let trows: Vec<Vec<f64>> = tm.intensity().rows().into_iter().map(|r| r.to_vec()).collect();
    write_text(
        &dir.join("energy_transfer_map.svg"),
        &heatmap("Energy transfer map", "energy transfer (eV)", "incident energy (eV)", &tx, &ty, &trows),
    )?;

    let em: Vec<f64> = m.emission().points().collect();
    let mut wide = String::from("emission_eV");
    for (w1, s) in &cuts {
        write_spectrum(&dir.join(format!("xes_cuts/xes_{}eV.csv", tag(*w1))), s)?;
        wide.push_str(&format!(",xes_{}eV", tag(*w1)));
    }
    wide.push('\n');
    for (j, e) in em.iter().enumerate() {
        wide.push_str(&format!("{e}"));
        for (_, s) in &cuts {
            wide.push_str(&format!(",{}", s.values()[j]));
        }
        wide.push('\n');
    }
    write_text(&dir.join("xes_cuts.csv"), &wide)?;
    let series: Vec<Series> = cuts
        .iter()
        .map(|(w1, s)| Series { name: format!("{} eV", tag(*w1)), xs: &em, ys: s.values(), points: false })
        .collect();
    write_text(
        &dir.join("xes_cuts.svg"),
        &line_plot("XES cuts", "emission energy (eV)", "intensity", &series),
    )?;

    write_file(&dir.join("peak_tracks.csv"), |w| write_tracks_csv(w, &tracks))?;
    let mut by_class: Vec<(PeakClass, Vec<f64>, Vec<f64>)> = [PeakClass::Resonant, PeakClass::Fluorescence, PeakClass::Merged]
        .into_iter()
        .map(|c| (c, Vec::new(), Vec::new()))
        .collect();
    for r in &tracks.rows {
        for q in &r.peaks {
            let slot = by_class.iter_mut().find(|s| s.0 == q.class).expect("all classes listed");
            slot.1.push(r.incident);
            slot.2.push(q.emission);
        }
    }
    let series: Vec<Series> = by_class
        .iter()
        .map(|(c, xs, ys)| Series { name: c.as_str().into(), xs, ys, points: true })
        .collect();
    write_text(
        &dir.join("peak_tracks.svg"),
        &line_plot("Peak tracks", "incident energy (eV)", "emission energy (eV)", &series),
    )?;
    write_json(&dir.join("summary.json"), &summary)?;

    Ok(Extracted { tfy: t, herfd: h, transfer_map: tm, tracks, summary })
}

// ------------------------------------------------------------- reconstruct

#[derive(Debug, Clone, Serialize)]
pub struct ReconstructSummary {
    pub params: ReconstructionParams,
    #[serde(rename = "requested_w1_eV")]
    pub requested_w1: f64,
    pub energy_axis: &'static str,
    pub normalization: &'static str,
    /// The raw reconstruction was divided by this to reach unit maximum.
    pub normalization_divisor: f64,
    #[serde(rename = "white_line_eV")]
    pub white_line: f64,
    #[serde(rename = "white_line_centroid_eV")]
    pub white_line_centroid: Option<f64>,
    #[serde(rename = "white_line_fwhm_eV")]
    pub white_line_fwhm: Option<f64>,
    pub flagged_bins: usize,
    pub warnings: Vec<String>,
}

pub struct Reconstructed {
    pub heros: Spectrum,
    /// Unit-maximum absorption profile.
    pub xas: Spectrum,
    pub condition_number: Vec<f64>,
    pub summary: ReconstructSummary,
}

pub fn reconstruct(cfg: &PipelineConfig, map: &RixsMap) -> Result<Reconstructed> {
    cfg.validate()?;
    let p = &cfg.model;
    let inc = map.incident();
    let i = inc
        .nearest_index(cfg.heros_w1)
        .ok_or_else(|| Error::out_of_range("heros_w1", cfg.heros_w1, inc.start(), inc.last()))?;
    let w1 = inc.point(i);
    let mut warnings = Vec::new();
    if w1 >= p.e_2p {
        warnings.push(format!("heros_w1 = {w1} eV lies above the edge at {} eV", p.e_2p));
    } else if (p.resonance() - w1).abs() < 3.0 * p.gamma_2p {
        warnings.push(format!(
            "heros_w1 = {w1} eV is within 3 Γ_2p ({:.1} eV) of the resonance at {} eV",
            3.0 * p.gamma_2p,
            p.resonance()
        ));
    }
    for w in &warnings {
        warn!("{w}");
    }
    let heros = map.row(i);
    let params = ReconstructionParams::from_model(p, w1);
    let rec = reconstruct_xas(&heros, &params, &cfg.xas())?;
    let divisor = rec.xas.max();
    let xas = rec.xas.normalized_to_max();
    let summary = ReconstructSummary {
        params,
        requested_w1: cfg.heros_w1,
        energy_axis: "photoelectron energy E above the 2p threshold (eV); emission w2 = w1 - e_f - E",
        normalization: "unit maximum",
        normalization_divisor: divisor,
        white_line: xas.grid().point(xas.argmax()),
        white_line_centroid: white_line_centroid(&xas),
        white_line_fwhm: fwhm(&xas),
        flagged_bins: rec.flagged.iter().filter(|f| **f).count(),
        warnings,
    };

    let dir = cfg.output_dir.join("reconstruct");
    ensure_dir(&dir)?;
    write_spectrum(&dir.join("heros_cut.csv"), &heros)?;
    write_file(&dir.join("xas.csv"), |w| {
        write_spectrum_csv(w, &xas, &[("condition_number", &rec.condition_number)])
    })?;
    write_json(&dir.join("xas.json"), &summary)?;
    let ex: Vec<f64> = heros.energies().collect();
    write_text(
        &dir.join("heros_cut.svg"),
        &line_plot(
            &format!("Off-resonant emission at {} eV", tag(w1)),
            "emission energy (eV)",
            "intensity",
            &[Series { name: "HEROS".into(), xs: &ex, ys: heros.values(), points: false }],
        ),
    )?;
    let xx: Vec<f64> = xas.energies().collect();
    write_text(
        &dir.join("xas.svg"),
        &line_plot(
            "Reconstructed absorption (unit maximum)",
            "E above threshold (eV)",
            "normalized intensity",
            &[Series { name: "XAS".into(), xs: &xx, ys: xas.values(), points: false }],
        ),
    )?;
    Ok(Reconstructed { heros, xas, condition_number: rec.condition_number, summary })
}

// --------------------------------------------------------------------- all

#[derive(Debug, Serialize)]
pub struct AllSummary {
    pub calibration: CalibrationSummary,
    pub extract: ExtractSummary,
    pub reconstruct: ReconstructSummary,
}

pub fn all(cfg: &PipelineConfig) -> Result<AllSummary> {
    cfg.validate()?;
    let model_map = simulate(cfg)?;
    let cal = calibrate(cfg)?;
    let measured = measure_map(cfg, &model_map, &cal.fit)?;
    let ex = extract(cfg, &measured)?;
    let rec = reconstruct(cfg, &measured)?;
    let summary = AllSummary { calibration: cal.summary, extract: ex.summary, reconstruct: rec.summary };
    write_json(&cfg.output_dir.join("summary.json"), &summary)?;
    Ok(summary)
}

/// Process exit code for an error: 2 invalid input, 3 I/O, 4 numerical.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParameter { .. }
        | Error::Validation(_)
        | Error::OutOfRange { .. }
        | Error::EmptyWindow { .. }
        | Error::Parse { .. } => 2,
        Error::Io { .. } => 3,
        Error::NoSignal(_)
        | Error::AmbiguousPeak { .. }
        | Error::Underdetermined { .. }
        | Error::CalibrationFailed(_)
        | Error::Numerical(_) => 4,
    }
}
