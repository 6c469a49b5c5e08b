//! Scenario drivers. Each writes its tables into the output directory.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use log::info;
use qnd_core::detection::{self, displaced_state_with, DetectionReport};
use qnd_core::dynamics::{
    self, input_state, propagate_with, InteractionParams, PropagationResult, StepStats,
};
use qnd_core::hilbert::{coherent_state_eps, DensityOperator, Mode};
use qnd_core::multimode::{
    calibrate_g0, multimode_fidelity, phase_map, propagate_multimode, write_aux_csv,
    write_phase_csv, write_qndm, write_qndm_aux, write_snapshot_csv, Calibration,
};
use qnd_core::tomography::{wigner, PhaseSpaceGrid, WignerMap};
use qnd_core::C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{
    check_alpha_sq, CascadeConfig, Detector, Medium, MultimodeConfig, SingleModeConfig,
    SweepConfig, WignerConfig,
};
use crate::error::CliError;

type Result<T> = std::result::Result<T, CliError>;

struct Output {
    dir: PathBuf,
}

impl Output {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(CliError::io(dir))?;
        Ok(Self {
            dir: dir.to_path_buf(),
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>> {
        let path = self.path(name);
        let file = File::create(&path).map_err(CliError::io(&path))?;
        Ok(BufWriter::new(file))
    }

    fn csv(&self, name: &str) -> Result<csv::Writer<BufWriter<File>>> {
        Ok(csv::Writer::from_writer(self.create(name)?))
    }

    fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let path = self.path(name);
        let mut out = self.create(name)?;
        serde_json::to_writer_pretty(&mut out, value).map_err(|e| CliError::io(&path)(e.into()))?;
        writeln!(out)
            .and_then(|_| out.flush())
            .map_err(CliError::io(&path))
    }

    fn wigner(&self, name: &str, map: &WignerMap) -> Result<()> {
        map.write_csv(self.create(name)?)?;
        Ok(())
    }
}

fn csv_error(path: PathBuf) -> impl Fn(csv::Error) -> CliError {
    move |e| match e.into_kind() {
        csv::ErrorKind::Io(source) => CliError::Io {
            path: path.clone(),
            source,
        },
        other => CliError::Core(qnd_core::Error::InvalidParameter(format!("{other:?}"))),
    }
}

/// Empty cell for an unreachable cascade.
fn optional<T: ToString>(value: Option<T>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

fn amplitude(alpha_sq: f64) -> C64 {
    C64::new(alpha_sq.sqrt(), 0.0)
}

/// End-of-medium state and the full propagation record.
fn transmit(
    medium: &Medium,
    params: &InteractionParams,
    alpha_sq: f64,
    signal_photons: usize,
    samples: &[f64],
) -> Result<PropagationResult> {
    let rho0 = input_state(
        amplitude(alpha_sq),
        signal_photons,
        &params.space,
        medium.eps_trunc,
    )?;
    Ok(propagate_with(
        &rho0,
        params,
        medium.length,
        samples,
        &medium.step,
    )?)
}

fn score(
    medium: &Medium,
    params: &InteractionParams,
    detector: &Detector,
    alpha_sq: f64,
) -> Result<DetectionReport> {
    let run = transmit(medium, params, alpha_sq, 1, &[])?;
    Ok(DetectionReport::from_state_with(
        run.final_state(),
        amplitude(alpha_sq),
        detector.cascade_threshold,
        detector.beam_splitter,
    )?)
}

fn click(rho_t: &DensityOperator, alpha_sq: f64, detector: &Detector) -> Result<f64> {
    let detected = displaced_state_with(rho_t, amplitude(alpha_sq), detector.beam_splitter)?;
    Ok(1.0 - detected.population(0)?)
}

#[derive(Debug, Serialize)]
struct MapSummary {
    name: &'static str,
    min: f64,
    max: f64,
    integral: f64,
    argmax: (f64, f64),
}

impl MapSummary {
    fn of(name: &'static str, map: &WignerMap) -> Self {
        Self {
            name,
            min: map.min(),
            max: map.max(),
            integral: map.integral(),
            argmax: map.argmax(),
        }
    }
}

/// Wigner maps of the final signal, transmitted probe and detected probe.
fn final_maps(
    rho_t: &DensityOperator,
    alpha_sq: f64,
    detector: &Detector,
    grid: &PhaseSpaceGrid,
) -> Result<Vec<(&'static str, WignerMap)>> {
    let detected = displaced_state_with(rho_t, amplitude(alpha_sq), detector.beam_splitter)?;
    Ok(vec![
        (
            "signal",
            wigner(&dynamics::reduce(rho_t, Mode::Signal)?, grid)?,
        ),
        (
            "transmitted",
            wigner(&dynamics::reduce(rho_t, Mode::Probe)?, grid)?,
        ),
        ("detected", wigner(&detected, grid)?),
    ])
}

fn write_maps(out: &Output, maps: &[(&'static str, WignerMap)]) -> Result<Vec<MapSummary>> {
    maps.iter()
        .map(|(name, map)| {
            out.wigner(&format!("wigner_{name}.csv"), map)?;
            Ok(MapSummary::of(name, map))
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct SingleModeReport {
    alpha_sq: f64,
    signal_photons: usize,
    /// Click probability of the configured input.
    p_click: f64,
    /// Present for a single-photon signal.
    detection: Option<DetectionReport>,
    step_stats: StepStats,
    final_trace: f64,
    wigner: Vec<MapSummary>,
}

pub fn run_singlemode(config: &SingleModeConfig, dir: &Path) -> Result<()> {
    let params = config.medium.params()?;
    let grid = config.wigner.grid()?;
    if config.signal_photons > 1 {
        return Err(CliError::Config(format!(
            "signal_photons must be 0 or 1, got {}",
            config.signal_photons
        )));
    }
    if config.samples == 0 {
        return Err(CliError::Config("samples must be positive".into()));
    }
    check_alpha_sq(&[config.alpha_sq])?;
    let out = Output::new(dir)?;

    let length = config.medium.length;
    let samples: Vec<f64> = (1..=config.samples)
        .map(|k| length * k as f64 / config.samples as f64)
        .collect();
    let run = transmit(
        &config.medium,
        &params,
        config.alpha_sq,
        config.signal_photons,
        &samples,
    )?;
    let rho_t = run.final_state();
    info!(
        "propagated to z = {length} with {} steps",
        run.step_stats.accepted
    );

    let name = "observables.csv";
    let mut table = out.csv(name)?;
    let fail = csv_error(out.path(name));
    table
        .write_record([
            "z",
            "n_probe",
            "n_auxiliary",
            "n_signal",
            "probe_re",
            "probe_im",
        ])
        .map_err(&fail)?;
    for o in &run.observables {
        table
            .write_record([
                o.z.to_string(),
                o.n_probe.to_string(),
                o.n_auxiliary.to_string(),
                o.n_signal.to_string(),
                o.probe_amplitude.re.to_string(),
                o.probe_amplitude.im.to_string(),
            ])
            .map_err(&fail)?;
    }
    table.flush().map_err(CliError::io(out.path(name)))?;

    let p_click = click(rho_t, config.alpha_sq, &config.detector)?;
    let detection = if config.signal_photons == 1 {
        let mut report = DetectionReport::from_state_with(
            rho_t,
            amplitude(config.alpha_sq),
            config.detector.cascade_threshold,
            config.detector.beam_splitter,
        )?;
        if config.vacuum_branch {
            let vacuum = transmit(&config.medium, &params, config.alpha_sq, 0, &[])?;
            report.p_click_vacuum = Some(click(
                vacuum.final_state(),
                config.alpha_sq,
                &config.detector,
            )?);
        }
        Some(report)
    } else {
        None
    };

    let maps = final_maps(rho_t, config.alpha_sq, &config.detector, &grid)?;
    let wigner = write_maps(&out, &maps)?;
    out.json(
        "report.json",
        &SingleModeReport {
            alpha_sq: config.alpha_sq,
            signal_photons: config.signal_photons,
            p_click,
            detection,
            step_stats: run.step_stats,
            final_trace: rho_t.trace(),
            wigner,
        },
    )
}

fn reports(alpha_sq: &[f64], medium: &Medium, detector: &Detector) -> Result<Vec<DetectionReport>> {
    check_alpha_sq(alpha_sq)?;
    let params = medium.params()?;
    alpha_sq
        .par_iter()
        .map(|&a| score(medium, &params, detector, a))
        .collect()
}

pub fn run_sweep(config: &SweepConfig, dir: &Path) -> Result<()> {
    let reports = reports(&config.alpha_sq, &config.medium, &config.detector)?;
    let out = Output::new(dir)?;
    let name = "sweep.csv";
    let fail = csv_error(out.path(name));
    let mut table = out.csv(name)?;
    table
        .write_record([
            "alpha_sq",
            "p_err_numeric",
            "p_err_analytic",
            "fidelity",
            "n_cascade",
            "n_cascade_analytic",
        ])
        .map_err(&fail)?;
    for (a, r) in config.alpha_sq.iter().zip(&reports) {
        table
            .write_record([
                a.to_string(),
                r.p_err_numeric.to_string(),
                r.p_err_analytic.to_string(),
                r.signal_fidelity.to_string(),
                optional(r.cascade_n),
                optional(r.cascade_n_analytic),
            ])
            .map_err(&fail)?;
    }
    table.flush().map_err(CliError::io(out.path(name)))?;
    out.json("sweep.json", &reports)
}

#[derive(Debug, Serialize)]
struct CascadeSummary {
    alpha_sq: f64,
    p_err: f64,
    fidelity: f64,
    cascade_n: Option<u32>,
    cascade_p_err: Option<f64>,
    cascade_ratio: Option<f64>,
    cascade_n_analytic: Option<u32>,
}

pub fn run_cascade(config: &CascadeConfig, dir: &Path) -> Result<()> {
    if config.max_units == 0 {
        return Err(CliError::Config("max_units must be positive".into()));
    }
    let reports = reports(&config.alpha_sq, &config.medium, &config.detector)?;
    let out = Output::new(dir)?;
    let name = "cascade.csv";
    let fail = csv_error(out.path(name));
    let mut table = out.csv(name)?;
    table
        .write_record([
            "alpha_sq",
            "units",
            "p_err",
            "fidelity",
            "ratio",
            "below_threshold",
        ])
        .map_err(&fail)?;
    let mut summary = Vec::new();
    for (a, r) in config.alpha_sq.iter().zip(&reports) {
        for n in 1..=config.max_units {
            let p = r.p_err_numeric.powi(n as i32);
            table
                .write_record([
                    a.to_string(),
                    n.to_string(),
                    p.to_string(),
                    r.signal_fidelity.powi(n as i32).to_string(),
                    detection::cascade_efficiency_ratio(r, n).to_string(),
                    (p < r.cascade_threshold).to_string(),
                ])
                .map_err(&fail)?;
        }
        summary.push(CascadeSummary {
            alpha_sq: *a,
            p_err: r.p_err_numeric,
            fidelity: r.signal_fidelity,
            cascade_n: r.cascade_n,
            cascade_p_err: r.cascade_p_err,
            cascade_ratio: r
                .cascade_n
                .map(|n| detection::cascade_efficiency_ratio(r, n)),
            cascade_n_analytic: r.cascade_n_analytic,
        });
    }
    table.flush().map_err(CliError::io(out.path(name)))?;
    out.json("cascade.json", &summary)
}

pub fn run_wigner(config: &WignerConfig, dir: &Path) -> Result<()> {
    check_alpha_sq(&[config.alpha_sq])?;
    let params = config.medium.params()?;
    let grid = config.wigner.grid()?;
    let run = transmit(&config.medium, &params, config.alpha_sq, 1, &[])?;
    let probe_dim = params.space.dims()[Mode::Probe.index()];
    let input = coherent_state_eps(
        amplitude(config.alpha_sq),
        probe_dim,
        config.medium.eps_trunc,
    )?
    .projector();
    let mut maps = vec![("input", wigner(&input, &grid)?)];
    maps.extend(final_maps(
        run.final_state(),
        config.alpha_sq,
        &config.detector,
        &grid,
    )?);
    let out = Output::new(dir)?;
    let summary = write_maps(&out, &maps)?;
    out.json("wigner.json", &summary)
}

#[derive(Debug, Serialize)]
struct SnapshotRecord {
    index: usize,
    t: f64,
    norm: f64,
    aux_norm: f64,
}

#[derive(Debug, Serialize)]
struct MultimodeReport {
    g0: f64,
    fidelity: f64,
    t_end: f64,
    steps: usize,
    dt: f64,
    max_norm_drift: f64,
    phase_floor: f64,
    snapshots: Vec<SnapshotRecord>,
    calibration: Option<Calibration>,
}

pub fn run_multimode(config: &MultimodeConfig, dir: &Path) -> Result<()> {
    config.grid.validate().map_err(CliError::config)?;
    config.params.validate().map_err(CliError::config)?;
    if !(config.t_end > 0.0 && config.t_end.is_finite()) {
        return Err(CliError::Config(format!(
            "t_end must be positive, got {}",
            config.t_end
        )));
    }
    if !(config.phase_floor > 0.0 && config.phase_floor < 1.0) {
        return Err(CliError::Config(format!(
            "phase_floor must lie in (0, 1), got {}",
            config.phase_floor
        )));
    }
    let mut params = config.params.clone();
    let calibration = match &config.calibrate {
        Some(scan) => {
            let cal = calibrate_g0(&params, &config.grid, config.t_end, &config.settings, scan)?;
            info!("calibrated g0 = {} with F = {}", cal.g0, cal.fidelity);
            params.g0 = cal.g0;
            Some(cal)
        }
        None => None,
    };
    let run = propagate_multimode(
        &params,
        &config.grid,
        config.t_end,
        &config.snapshots,
        &config.settings,
    )?;
    let fidelity = multimode_fidelity(&run.last().ps, &params, config.t_end);

    let out = Output::new(dir)?;
    let mut snapshots = Vec::new();
    for (index, snap) in run.snapshots.iter().enumerate() {
        write_snapshot_csv(&snap.ps, out.create(&format!("pair_{index:03}.csv"))?)?;
        write_qndm(
            &snap.ps,
            snap.t,
            out.create(&format!("pair_{index:03}.qndm"))?,
        )?;
        write_aux_csv(&snap.a, out.create(&format!("aux_{index:03}.csv"))?)?;
        write_qndm_aux(
            &snap.a,
            snap.t,
            out.create(&format!("aux_{index:03}.qndm"))?,
        )?;
        let map = phase_map(&snap.ps, config.phase_floor)?;
        write_phase_csv(
            &map,
            &config.grid,
            out.create(&format!("phase_{index:03}.csv"))?,
        )?;
        snapshots.push(SnapshotRecord {
            index,
            t: snap.t,
            norm: snap.norm_sqr(),
            aux_norm: snap.a.norm_sqr(),
        });
    }
    out.json(
        "fidelity.json",
        &MultimodeReport {
            g0: params.g0,
            fidelity,
            t_end: config.t_end,
            steps: run.steps,
            dt: run.dt,
            max_norm_drift: run.max_norm_drift,
            phase_floor: config.phase_floor,
            snapshots,
            calibration,
        },
    )
}
