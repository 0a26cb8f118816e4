//! Integrating-factor RK4 for `dû/dt = N̂(u) − |k|² û`.
//!
//! The heat semigroup is applied exactly, so a vanishing nonlinearity gives
//! the exact decay `û ↦ e^{−|k|² dt} û` for any step size.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::models::{Model, NonlinearTerm};
use crate::multipliers::leray_project;
use crate::spectral::{Grid, PhysicalVectorField, SpectralVectorField};

pub const DEFAULT_CFL: f64 = 0.4;
pub const DEFAULT_BLOWUP_THRESHOLD: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepSize {
    Fixed(f64),
    /// `dt = min(dt_max, cfl Δx / max|u|)`.
    Cfl {
        cfl: f64,
        dt_max: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepControls {
    pub step: StepSize,
    pub t_final: f64,
    /// Largest admissible `max_x |u(x)|` before the run is declared blown up.
    pub blowup_threshold: f64,
    /// Leray-project the state after every step, on top of dealiasing.
    pub leray_each_step: bool,
    /// Round-trip the state through physical space every this many steps, so
    /// that a run restarted from a snapshot at those steps continues bitwise
    /// identically.
    pub canonicalize_every: Option<u64>,
}

impl StepControls {
    pub fn fixed(dt: f64, t_final: f64) -> Self {
        StepControls {
            step: StepSize::Fixed(dt),
            t_final,
            blowup_threshold: DEFAULT_BLOWUP_THRESHOLD,
            leray_each_step: true,
            canonicalize_every: None,
        }
    }

    pub fn cfl(cfl: f64, dt_max: f64, t_final: f64) -> Self {
        StepControls { step: StepSize::Cfl { cfl, dt_max }, ..Self::fixed(dt_max, t_final) }
    }

    pub fn validate(&self) -> Result<()> {
        match self.step {
            StepSize::Fixed(dt) if !(dt > 0.0 && dt.is_finite()) => {
                return Err(Error::InvalidControls(format!("dt must be > 0, got {dt}")));
            }
            StepSize::Cfl { cfl, dt_max } => {
                if !(cfl > 0.0 && cfl <= 1.0) {
                    return Err(Error::InvalidControls(format!("cfl must lie in (0, 1], got {cfl}")));
                }
                if !(dt_max > 0.0 && dt_max.is_finite()) {
                    return Err(Error::InvalidControls(format!("dt_max must be > 0, got {dt_max}")));
                }
            }
            _ => {}
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::InvalidControls(format!("T must be > 0, got {}", self.t_final)));
        }
        if !(self.blowup_threshold > 0.0) {
            return Err(Error::InvalidControls(format!("blowup_threshold must be > 0, got {}", self.blowup_threshold)));
        }
        if self.canonicalize_every == Some(0) {
            return Err(Error::InvalidControls("canonicalize_every must be >= 1".into()));
        }
        Ok(())
    }
}

/// Evidence reported when a run leaves the admissible range.
#[derive(Clone, Debug)]
pub struct BlowUp {
    pub reason: String,
    /// Time of the offending state.
    pub t: f64,
    pub step: u64,
    /// `max_x |u|` of the offending state (NaN if it was not finite).
    pub max_speed: f64,
    /// L² norm of the offending state.
    pub l2_norm: f64,
    /// Last state that passed all checks; `None` if the initial state failed.
    pub last_good: Option<LastGood>,
}

#[derive(Clone, Debug)]
pub struct LastGood {
    pub state: SpectralVectorField,
    pub t: f64,
    pub step: u64,
}

impl fmt::Display for BlowUp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "blow-up at t={:.6e} (step {}): {}; max|u|={:.6e}, ||u||_L2={:.6e}",
            self.t, self.step, self.reason, self.max_speed, self.l2_norm
        )?;
        match &self.last_good {
            Some(g) => write!(f, "; last good state at t={:.6e} (step {})", g.t, g.step),
            None => write!(f, "; initial state already inadmissible"),
        }
    }
}

/// Read-only view handed to observers after each accepted step (and once for
/// the initial state, with `dt = 0`).
pub struct StepView<'a> {
    pub step: u64,
    pub t: f64,
    pub dt: f64,
    pub state: &'a SpectralVectorField,
    /// `N(state)`, already computed for the next step's first stage.
    pub nonlinear: &'a SpectralVectorField,
    pub max_speed: f64,
    /// Physical samples the state was rebuilt from, on canonicalizing steps.
    /// Writing these to a snapshot makes a restart continue bitwise.
    pub samples: Option<&'a PhysicalVectorField>,
}

/// Where an integration starts. A restart supplies the snapshot's time and step.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Start {
    pub t: f64,
    pub step: u64,
}

#[derive(Clone, Debug)]
pub struct Integration {
    pub state: SpectralVectorField,
    pub t: f64,
    pub steps: u64,
}

/// `e^{−|k|² dt}` and `e^{−|k|² dt/2}` on the dealias band (zero elsewhere).
struct HeatFactors {
    dt: f64,
    full: Vec<f64>,
    half: Vec<f64>,
}

impl HeatFactors {
    fn new(grid: &Grid, dt: f64) -> Self {
        let mut full = vec![0.0; grid.len()];
        let mut half = vec![0.0; grid.len()];
        grid.for_each_mode_in_band(|i, kk| {
            full[i] = (-kk * dt).exp();
            half[i] = (-kk * dt * 0.5).exp();
        });
        HeatFactors { dt, full, half }
    }
}

/// Advective step size `min(dt_max, cfl·(2π/n)/max_speed)`; `dt_max` when the
/// field is at rest. Fixed steps are returned unchanged.
pub fn dt_from_speed(max_speed: f64, n: usize, step: StepSize) -> f64 {
    match step {
        StepSize::Fixed(dt) => dt,
        StepSize::Cfl { cfl, dt_max } => {
            if max_speed > 0.0 {
                dt_max.min(cfl * (2.0 * std::f64::consts::PI / n as f64) / max_speed)
            } else {
                dt_max
            }
        }
    }
}

/// CFL step for the state `u`.
pub fn choose_dt(u: &SpectralVectorField, controls: &StepControls) -> Result<f64> {
    if !u.is_finite() {
        return Err(Error::NonFinite { what: "state", index: 0 });
    }
    let speed = u.to_physical().max_magnitude();
    Ok(dt_from_speed(speed, u.grid().n(), controls.step))
}

/// One IFRK4 step of size `dt` from `u`, including the per-step re-projection.
pub fn step_ifrk4(model: &Model, u: &SpectralVectorField, dt: f64) -> Result<SpectralVectorField> {
    if !(dt >= 0.0 && dt.is_finite()) {
        return Err(Error::InvalidControls(format!("dt must be >= 0, got {dt}")));
    }
    let k1 = model.rhs_nonstiff(u)?;
    let factors = HeatFactors::new(u.grid(), dt);
    let mut next = advance(model, u, &k1.term, &factors)?;
    reproject(&mut next, true);
    Ok(next)
}

/// Per-mode linear combination, zero where the full-step heat factor underflows.
fn combine(grid: &Arc<Grid>, full: &[f64], f: impl Fn(usize, usize) -> Complex64) -> SpectralVectorField {
    let zero = Complex64::new(0.0, 0.0);
    let comps =
        std::array::from_fn(|c| full.iter().enumerate().map(|(i, &e)| if e == 0.0 { zero } else { f(c, i) }).collect());
    SpectralVectorField::from_components(grid, comps).expect("grid-sized components")
}

fn advance(
    model: &Model,
    u: &SpectralVectorField,
    k1: &SpectralVectorField,
    e: &HeatFactors,
) -> Result<SpectralVectorField> {
    let h = e.dt;
    let grid = u.grid();

    let u2 = combine(grid, &e.full, |c, i| (u.component(c)[i] + k1.component(c)[i] * (0.5 * h)) * e.half[i]);
    let k2 = model.rhs_unchecked(&u2).term;
    let u3 = combine(grid, &e.full, |c, i| u.component(c)[i] * e.half[i] + k2.component(c)[i] * (0.5 * h));
    let k3 = model.rhs_unchecked(&u3).term;
    let u4 = combine(grid, &e.full, |c, i| u.component(c)[i] * e.full[i] + k3.component(c)[i] * (h * e.half[i]));
    let k4 = model.rhs_unchecked(&u4).term;
    Ok(combine(grid, &e.full, |c, i| {
        let (ef, eh) = (e.full[i], e.half[i]);
        u.component(c)[i] * ef
            + (k1.component(c)[i] * ef + (k2.component(c)[i] + k3.component(c)[i]) * (2.0 * eh) + k4.component(c)[i])
                * (h / 6.0)
    }))
}

fn reproject(u: &mut SpectralVectorField, leray: bool) {
    u.dealias_in_place();
    if leray {
        *u = leray_project(u);
    }
}

/// Physical-space round trip followed by re-projection; the fixed point a
/// snapshot restart starts from.
pub fn canonicalize(u: &SpectralVectorField, leray: bool) -> SpectralVectorField {
    from_samples(&u.to_physical(), leray)
}

/// Spectral state rebuilt from physical samples: forward transform, dealias,
/// and optionally Leray projection.
pub fn from_samples(samples: &PhysicalVectorField, leray: bool) -> SpectralVectorField {
    let mut s = samples.to_spectral(true);
    reproject(&mut s, leray);
    s
}

/// Integrate from `start` to `controls.t_final`, calling `observer` for the
/// initial state and after every accepted step.
pub fn integrate(
    model: &Model,
    u0: &SpectralVectorField,
    controls: &StepControls,
    start: Start,
    mut observer: impl FnMut(&StepView<'_>) -> Result<()>,
) -> Result<Integration> {
    controls.validate()?;
    let grid = u0.grid().clone();
    let mut u = u0.clone();
    let mut t = start.t;
    let mut step = start.step;

    let mut eval = evaluate(model, &u, controls).map_err(|reason| blowup(reason, &u, t, step, None))?;
    observer(&StepView {
        step,
        t,
        dt: 0.0,
        state: &u,
        nonlinear: &eval.term,
        max_speed: eval.max_speed,
        samples: None,
    })?;

    let mut factors: Option<HeatFactors> = None;
    let end = controls.t_final;
    loop {
        let remaining = end - t;
        let base = dt_from_speed(eval.max_speed, grid.n(), controls.step);
        if remaining <= 1e-9 * base {
            break;
        }
        let (h, last) = if remaining <= base * (1.0 + 1e-9) { (remaining, true) } else { (base, false) };
        if factors.as_ref().is_none_or(|f| f.dt != h) {
            factors = Some(HeatFactors::new(&grid, h));
        }
        let heat = factors.as_ref().expect("set above");
        let t_next = if last { end } else { t + h };
        let good = || Some(LastGood { state: u.clone(), t, step });

        let mut next = advance(model, &u, &eval.term, heat)?;
        reproject(&mut next, controls.leray_each_step);
        let mut samples = None;
        if controls.canonicalize_every.is_some_and(|every| (step + 1) % every == 0) && next.is_finite() {
            let phys = next.to_physical();
            next = from_samples(&phys, controls.leray_each_step);
            samples = Some(phys);
        }
        let next_eval =
            evaluate(model, &next, controls).map_err(|reason| blowup(reason, &next, t_next, step + 1, good()))?;

        u = next;
        eval = next_eval;
        t = t_next;
        step += 1;
        observer(&StepView {
            step,
            t,
            dt: h,
            state: &u,
            nonlinear: &eval.term,
            max_speed: eval.max_speed,
            samples: samples.as_ref(),
        })?;
        if last {
            break;
        }
    }
    Ok(Integration { state: u, t, steps: step - start.step })
}

/// Nonlinear evaluation plus the admissibility checks on the state; the error
/// is a human-readable reason for a blow-up report.
fn evaluate(
    model: &Model,
    u: &SpectralVectorField,
    controls: &StepControls,
) -> std::result::Result<NonlinearTerm, String> {
    if !u.is_finite() {
        return Err("non-finite state".into());
    }
    let eval = model.rhs_nonstiff(u).map_err(|e| e.to_string())?;
    if !eval.max_speed.is_finite() || eval.max_speed > controls.blowup_threshold {
        return Err(format!("max|u| = {:e} exceeds blowup threshold {:e}", eval.max_speed, controls.blowup_threshold));
    }
    if !eval.term.is_finite() {
        return Err("non-finite nonlinear term".into());
    }
    Ok(eval)
}

fn blowup(reason: String, bad: &SpectralVectorField, t: f64, step: u64, last_good: Option<LastGood>) -> Error {
    let max_speed = if bad.is_finite() { bad.to_physical().max_magnitude() } else { f64::NAN };
    Error::BlowUp(Box::new(BlowUp { reason, t, step, max_speed, l2_norm: bad.norm_l2(), last_good }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial::{abc_flow, taylor_green};
    use crate::models::ModelKind;
    use crate::multipliers::RieszSign;
    use crate::spectral::Grid;

    fn rel(a: &SpectralVectorField, b: &SpectralVectorField) -> f64 {
        a.sub(b).unwrap().norm_l2() / b.norm_l2()
    }

    #[test]
    fn abc_step_is_exact_decay() {
        let g = Grid::new(16).unwrap();
        let v = abc_flow(&g, 1.0, 0.7, -0.4).unwrap();
        for kind in ModelKind::ALL {
            let model = Model::new(kind, RieszSign::Plus);
            for dt in [1e-3, 0.05, 0.5] {
                let next = step_ifrk4(&model, &v, dt).unwrap();
                assert!(rel(&next, &v.scale((-dt).exp())) <= 1e-13, "{kind:?} dt={dt}");
            }
        }
    }

    #[test]
    fn zero_step_is_identity() {
        let g = Grid::new(16).unwrap();
        let v = taylor_green(&g, 1.0).unwrap();
        let model = Model::new(ModelKind::Mns, RieszSign::Plus);
        let next = step_ifrk4(&model, &v, 0.0).unwrap();
        assert!(rel(&next, &v) <= 1e-15);
        assert!(step_ifrk4(&model, &v, -1.0).is_err());
    }

    #[test]
    fn cfl_formula() {
        let step = StepSize::Cfl { cfl: 0.4, dt_max: 1.0 };
        assert_eq!(dt_from_speed(0.0, 64, step), 1.0);
        let dt = dt_from_speed(1.0, 64, step);
        assert!((dt - 0.4 * 2.0 * std::f64::consts::PI / 64.0).abs() < 1e-16);
        assert!((dt - 0.0393).abs() < 1e-4);
        assert_eq!(dt_from_speed(2.0, 64, step), dt / 2.0);
        assert_eq!(dt_from_speed(1e-9, 64, step), 1.0);
        assert_eq!(dt_from_speed(7.0, 64, StepSize::Fixed(0.01)), 0.01);
    }

    #[test]
    fn choose_dt_uses_max_speed() {
        let g = Grid::new(16).unwrap();
        let controls = StepControls::cfl(0.4, 10.0, 1.0);
        assert_eq!(choose_dt(&SpectralVectorField::zeros(&g), &controls).unwrap(), 10.0);
        // ABC(1,0,0) = (sin z, cos z, 0) has |v| = 1 everywhere.
        let v = abc_flow(&g, 1.0, 0.0, 0.0).unwrap();
        let dt = choose_dt(&v, &controls).unwrap();
        assert!((dt - 0.4 * g.spacing()).abs() < 1e-15);
        let dt2 = choose_dt(&v.scale(2.0), &controls).unwrap();
        assert!((dt2 - dt / 2.0).abs() < 1e-16);
    }

    #[test]
    fn controls_validation() {
        assert!(StepControls::fixed(0.0, 1.0).validate().is_err());
        assert!(StepControls::fixed(0.1, -1.0).validate().is_err());
        assert!(StepControls::cfl(1.5, 0.1, 1.0).validate().is_err());
        assert!(StepControls::cfl(0.4, 0.0, 1.0).validate().is_err());
        assert!(StepControls::cfl(0.4, 0.1, 1.0).validate().is_ok());
    }

    #[test]
    fn single_step_run_matches_step() {
        let g = Grid::new(16).unwrap();
        let v = taylor_green(&g, 1.0).unwrap();
        let model = Model::new(ModelKind::Mns, RieszSign::Plus);
        let out = integrate(&model, &v, &StepControls::fixed(0.01, 0.01), Start::default(), |_| Ok(())).unwrap();
        assert_eq!(out.steps, 1);
        assert_eq!(out.t, 0.01);
        let direct = step_ifrk4(&model, &v, 0.01).unwrap();
        assert_eq!(out.state.components(), direct.components());
    }

    #[test]
    fn observer_sees_every_step() {
        let g = Grid::new(16).unwrap();
        let v = taylor_green(&g, 1.0).unwrap();
        let model = Model::new(ModelKind::NsRotational, RieszSign::Plus);
        let mut times = Vec::new();
        let out = integrate(&model, &v, &StepControls::fixed(0.1, 1.0), Start::default(), |view| {
            times.push((view.step, view.t));
            Ok(())
        })
        .unwrap();
        assert_eq!(out.steps, 10);
        assert_eq!(times.len(), 11);
        assert_eq!(times[0], (0, 0.0));
        assert_eq!(times[10], (10, 1.0));
    }

    #[test]
    fn threshold_trips_immediately() {
        let g = Grid::new(16).unwrap();
        let v = taylor_green(&g, 1.0).unwrap();
        let model = Model::new(ModelKind::Mns, RieszSign::Plus);
        let mut controls = StepControls::fixed(0.01, 1.0);
        controls.blowup_threshold = 1e-9;
        match integrate(&model, &v, &controls, Start::default(), |_| Ok(())) {
            Err(Error::BlowUp(b)) => {
                assert_eq!(b.step, 0);
                assert!(b.last_good.is_none());
                assert!(b.max_speed > 1e-9);
            }
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn blowup_keeps_last_good_state() {
        let g = Grid::new(16).unwrap();
        let v = taylor_green(&g, 1.0).unwrap();
        let model = Model::new(ModelKind::Mns, RieszSign::Plus);
        // Max speed of Taylor-Green is 1 at t=0 and decays; a threshold just
        // above 1 survives step 0. Doubling the field would not, so instead
        // drive a Hall run with a huge step until it goes unstable.
        let hall = Model::new(ModelKind::Hall, RieszSign::Plus);
        let mut controls = StepControls::fixed(0.5, 50.0);
        controls.blowup_threshold = 1e3;
        let big = v.scale(20.0);
        match integrate(&hall, &big, &controls, Start::default(), |_| Ok(())) {
            Err(Error::BlowUp(b)) => {
                let good = b.last_good.expect("at least one good state");
                assert!(good.state.is_finite());
                assert!(good.t < b.t);
            }
            other => panic!("expected blow-up, got {:?}", other.map(|o| o.t)),
        }
        let _ = model;
    }

    #[test]
    fn linear_exactness_over_many_steps() {
        let g = Grid::new(16).unwrap();
        let v = abc_flow(&g, 1.0, 1.0, 1.0).unwrap();
        let model = Model::new(ModelKind::Hall, RieszSign::Plus);
        let out = integrate(&model, &v, &StepControls::fixed(0.01, 1.0), Start::default(), |_| Ok(())).unwrap();
        assert!(rel(&out.state, &v.scale((-1.0f64).exp())) <= 1e-12);
    }

    #[test]
    fn restart_from_samples_is_bitwise() {
        let g = Grid::new(16).unwrap();
        let v = taylor_green(&g, 1.0).unwrap();
        let model = Model::new(ModelKind::Mns, RieszSign::Plus);
        let mut controls = StepControls::cfl(0.4, 0.01, 0.2);
        controls.canonicalize_every = Some(5);
        let mut saved = None;
        let full = integrate(&model, &v, &controls, Start::default(), |view| {
            if view.step == 10 {
                saved = Some((view.samples.expect("canonical step").clone(), view.t));
            }
            Ok(())
        })
        .unwrap();
        let (samples, t) = saved.unwrap();
        let u = from_samples(&samples, true);
        let rest = integrate(&model, &u, &controls, Start { t, step: 10 }, |_| Ok(())).unwrap();
        assert_eq!(rest.t, full.t);
        assert_eq!(rest.steps + 10, full.steps);
        assert_eq!(rest.state.components(), full.state.components());
    }
}
