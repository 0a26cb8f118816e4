//! `simulate`: integrate a configured run and write its artifacts.
//!
//! Output directory layout:
//!
//! ```text
//! diagnostics.csv          one row every diag_every steps and at T
//! snapshots/snap_NNNNNNNN.bin (+ .budget.json)   every snapshot_every steps
//! final.bin (+ .budget.json)                      state at T
//! last_good.bin (+ .budget.json)                  on blow-up
//! run_meta.json
//! ```

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use mns_core::diagnostics::{DiagnosticsRecord, InitialNorms, Monitor, StepSample, CSV_COLUMNS};
use mns_core::initial::GENERATOR_NAME;
use mns_core::integrator::{from_samples, integrate, Start, StepSize};
use mns_core::{Error, Grid, Model, PhysicalVectorField, SpectralVectorField};
use serde_json::json;

use crate::config::RunConfig;
use crate::snapshot::{read_sidecar, read_snapshot, write_sidecar, write_snapshot, Sidecar, Snapshot};

pub const CSV_NAME: &str = "diagnostics.csv";
pub const META_NAME: &str = "run_meta.json";
pub const FINAL_NAME: &str = "final.bin";
pub const LAST_GOOD_NAME: &str = "last_good.bin";
pub const SNAPSHOT_DIR: &str = "snapshots";

#[derive(Clone, Debug, PartialEq)]
pub enum Status {
    Completed,
    BlowUp(String),
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub status: Status,
    pub output: PathBuf,
    /// Time and global step index of the last accepted state.
    pub t: f64,
    pub step: u64,
    pub initial: InitialNorms,
    /// One sample per accepted step of this invocation, restart point included.
    pub samples: Vec<StepSample>,
    /// Rows written to the CSV by this invocation.
    pub records: Vec<DiagnosticsRecord>,
    /// State at the last accepted step.
    pub state: Option<SpectralVectorField>,
}

impl RunOutcome {
    pub fn completed(&self) -> bool {
        self.status == Status::Completed
    }
}

pub fn snapshot_path(output: &Path, step: u64) -> PathBuf {
    output.join(SNAPSHOT_DIR).join(format!("snap_{step:08}.bin"))
}

pub fn csv_header() -> String {
    CSV_COLUMNS.join(",")
}

pub fn csv_row(record: &DiagnosticsRecord) -> String {
    record.csv_values().iter().map(|v| format!("{v:.16e}")).collect::<Vec<_>>().join(",")
}

struct Begin {
    state: SpectralVectorField,
    samples: Option<PhysicalVectorField>,
    start: Start,
    monitor: Monitor,
    restart: Option<PathBuf>,
}

fn fresh(config: &RunConfig, model: &Model) -> anyhow::Result<Begin> {
    let grid = Grid::new(config.n)?;
    let built = config.ic.build(&grid).context("building initial condition")?;
    // Start from the state a snapshot of it would restart to.
    let samples = built.inverse_transform()?;
    let state = from_samples(&samples, true);
    let monitor = Monitor::new(model.kind, config.m, config.bound_constant, &state);
    Ok(Begin { state, samples: Some(samples), start: Start::default(), monitor, restart: None })
}

fn resume(config: &RunConfig, model: &Model, path: &Path) -> anyhow::Result<Begin> {
    let snap = read_snapshot(path)?;
    let n = snap.samples.grid().n();
    if n != config.n {
        bail!("{}: grid mismatch, snapshot has n={n} but config has n={}", path.display(), config.n);
    }
    if snap.model != model.kind {
        bail!("{}: snapshot is for model {} but config has {}", path.display(), snap.model, model.kind);
    }
    if snap.sign != model.sign {
        bail!("{}: snapshot riesz_sign {} differs from config {}", path.display(), snap.sign, model.sign);
    }
    if snap.t >= config.t_final {
        bail!("{}: snapshot time {} is not before T={}", path.display(), snap.t, config.t_final);
    }
    let side = read_sidecar(path).context("restart needs the budget sidecar written with the snapshot")?;
    if side.budget.m != config.m {
        bail!("sidecar Sobolev index m={} differs from config m={}", side.budget.m, config.m);
    }
    let state = from_samples(&snap.samples, true);
    let monitor = Monitor::resume(model.kind, config.bound_constant, side.budget);
    Ok(Begin {
        state,
        samples: None,
        start: Start { t: snap.t, step: side.step },
        monitor,
        restart: Some(path.to_path_buf()),
    })
}

/// Open the CSV for writing. On restart, rows at or after the restart time
/// are dropped so the file continues seamlessly.
fn open_csv(path: &Path, restart_t: Option<f64>) -> anyhow::Result<BufWriter<fs::File>> {
    let header = csv_header();
    let mut keep = Vec::new();
    if let Some(t0) = restart_t {
        if let Ok(text) = fs::read_to_string(path) {
            let mut lines = text.lines();
            if lines.next() != Some(header.as_str()) {
                bail!("{}: existing CSV has a different header", path.display());
            }
            for line in lines {
                let t: f64 = line
                    .split(',')
                    .next()
                    .and_then(|f| f.parse().ok())
                    .with_context(|| format!("{}: malformed row '{line}'", path.display()))?;
                if t < t0 {
                    keep.push(line.to_string());
                }
            }
        }
    }
    let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{header}")?;
    for line in keep {
        writeln!(w, "{line}")?;
    }
    Ok(w)
}

fn save(path: &Path, snapshot: &Snapshot, sidecar: &Sidecar) -> anyhow::Result<()> {
    write_snapshot(path, snapshot)?;
    write_sidecar(path, sidecar)?;
    Ok(())
}

fn step_json(step: StepSize) -> serde_json::Value {
    match step {
        StepSize::Fixed(dt) => json!({ "dt": dt }),
        StepSize::Cfl { cfl, dt_max } => json!({ "cfl": cfl, "dt_max": dt_max }),
    }
}

/// Run `config`, writing artifacts under `config.output`. A blow-up is a
/// normal outcome with [`Status::BlowUp`]; other failures are errors.
pub fn simulate(config: &RunConfig) -> anyhow::Result<RunOutcome> {
    let model = Model::new(config.model, config.riesz_sign);
    let controls = config.controls();
    controls.validate()?;
    let out = config.output.clone();
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    if config.snapshot_every > 0 {
        fs::create_dir_all(out.join(SNAPSHOT_DIR))?;
    }

    let begin = match &config.restart {
        Some(path) => resume(config, &model, path)?,
        None => fresh(config, &model)?,
    };
    let Begin { state, samples: initial_samples, start, mut monitor, restart } = begin;
    let initial = monitor.initial();
    let mut csv = open_csv(&out.join(CSV_NAME), restart.as_ref().map(|_| start.t))?;

    let mut samples = Vec::new();
    let mut records = Vec::new();
    let mut io_error: Option<anyhow::Error> = None;
    let result = integrate(&model, &state, &controls, start, |view| {
        let sample = monitor.observe(view)?;
        samples.push(sample);
        let mut write = || -> anyhow::Result<()> {
            if view.step % config.diag_every == 0 || view.t == config.t_final {
                let record = monitor.record(view, &sample);
                writeln!(csv, "{}", csv_row(&record))?;
                records.push(record);
            }
            let at_start = view.step == start.step;
            if config.snapshot_every > 0 && view.step % config.snapshot_every == 0 && !(at_start && restart.is_some()) {
                let phys = match (view.samples, at_start) {
                    (Some(p), _) => p.clone(),
                    (None, true) => initial_samples.clone().expect("fresh runs keep their samples"),
                    (None, false) => view.state.inverse_transform()?,
                };
                let snap = Snapshot { model: model.kind, sign: model.sign, t: view.t, samples: phys };
                save(&snapshot_path(&out, view.step), &snap, &Sidecar { step: view.step, budget: monitor.budget() })?;
            }
            Ok(())
        };
        write().map_err(|e| {
            let msg = format!("{e:#}");
            io_error = Some(e);
            Error::Aborted(msg)
        })
    });
    csv.flush()?;
    drop(csv);
    if let Some(e) = io_error {
        return Err(e);
    }

    let last = samples.last().copied();
    let (status, state, t, step) = match result {
        Ok(done) => {
            let phys = done.state.inverse_transform()?;
            let snap = Snapshot { model: model.kind, sign: model.sign, t: done.t, samples: phys };
            let step = start.step + done.steps;
            save(&out.join(FINAL_NAME), &snap, &Sidecar { step, budget: monitor.budget() })?;
            (Status::Completed, Some(done.state), done.t, step)
        }
        Err(Error::BlowUp(b)) => {
            let reason = b.to_string();
            match &b.last_good {
                Some(good) => {
                    let phys = good.state.inverse_transform()?;
                    let snap = Snapshot { model: model.kind, sign: model.sign, t: good.t, samples: phys };
                    save(&out.join(LAST_GOOD_NAME), &snap, &Sidecar { step: good.step, budget: monitor.budget() })?;
                    (Status::BlowUp(reason), Some(good.state.clone()), good.t, good.step)
                }
                None => (Status::BlowUp(reason), None, start.t, start.step),
            }
        }
        Err(e) => return Err(e.into()),
    };

    let meta = json!({
        "tool": "mns",
        "version": env!("CARGO_PKG_VERSION"),
        "model": config.model.name(),
        "model_id": config.model.id(),
        "riesz_sign": config.riesz_sign.as_i32(),
        "n": config.n,
        "dealias_cutoff": config.n / 3,
        "T": config.t_final,
        "step": step_json(config.step),
        "ic": config.ic.to_string(),
        "generator": GENERATOR_NAME,
        "m": config.m,
        "C": config.bound_constant,
        "diag_every": config.diag_every,
        "snapshot_every": config.snapshot_every,
        "blowup_threshold": config.blowup_threshold,
        "leray_each_step": controls.leray_each_step,
        "restart": restart.as_ref().map(|p| p.display().to_string()),
        "config": config.to_text(),
        "columns": CSV_COLUMNS,
        "initial_norms": initial,
        "status": match &status { Status::Completed => "completed", Status::BlowUp(_) => "blowup" },
        "blowup": match &status { Status::BlowUp(r) => Some(r.as_str()), Status::Completed => None },
        "t_reached": t,
        "steps": step,
        "last_sample": last.map(|s| json!({
            "E_L2": s.e_l2, "E_half": s.e_half, "hm_sq": s.hm_sq, "sup_hm_sq": s.sup_hm_sq,
            "resid_half": s.resid_half, "resid_l2": s.resid_l2,
        })),
    });
    fs::write(out.join(META_NAME), serde_json::to_string_pretty(&meta)? + "\n")?;

    Ok(RunOutcome { status, output: out, t, step, initial, samples, records, state })
}

/// Parse a CSV written by [`simulate`] into its rows of values.
pub fn read_csv(path: &Path) -> anyhow::Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap_or("").split(',').map(str::to_string).collect();
    let rows = lines
        .map(|l| l.split(',').map(|f| f.parse::<f64>().with_context(|| format!("bad value '{f}'"))).collect())
        .collect::<anyhow::Result<Vec<Vec<f64>>>>()?;
    Ok((header, rows))
}
