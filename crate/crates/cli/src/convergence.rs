//! `convergence`: temporal self-convergence of the integrator.
//!
//! The configured run is repeated with `dt, dt/2, …, dt/2^N`. Successive
//! final states are differenced, and the observed order is
//! `log2(e_j / e_{j+1})` for consecutive differences `e_j = ‖u_j − u_{j+1}‖`.

use std::fmt::Write as _;
use std::fs;

use anyhow::{bail, Context};
use mns_core::integrator::{from_samples, integrate, Start, StepControls, StepSize};
use mns_core::{Grid, Model};

use crate::config::RunConfig;

pub const CSV_NAME: &str = "convergence.csv";

#[derive(Clone, Debug, PartialEq)]
pub struct Level {
    pub dt: f64,
    pub steps: u64,
    /// Relative L² difference to the next finer level.
    pub diff: Option<f64>,
    /// Observed order from this level's difference and the previous one.
    pub order: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceTable {
    pub levels: Vec<Level>,
}

impl ConvergenceTable {
    pub fn orders(&self) -> Vec<f64> {
        self.levels.iter().filter_map(|l| l.order).collect()
    }

    pub fn min_order(&self) -> Option<f64> {
        self.orders().into_iter().reduce(f64::min)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("dt,steps,diff,order\n");
        let opt = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:.16e}"));
        for l in &self.levels {
            let _ = writeln!(s, "{:.16e},{},{},{}", l.dt, l.steps, opt(l.diff), opt(l.order));
        }
        s
    }
}

impl std::fmt::Display for ConvergenceTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "{:>12} {:>8} {:>14} {:>8}", "dt", "steps", "diff", "order")?;
        for l in &self.levels {
            let diff = l.diff.map_or("-".to_string(), |d| format!("{d:.6e}"));
            let order = l.order.map_or("-".to_string(), |p| format!("{p:.3}"));
            writeln!(f, "{:>12.6e} {:>8} {:>14} {:>8}", l.dt, l.steps, diff, order)?;
        }
        Ok(())
    }
}

pub fn convergence(config: &RunConfig, halvings: u32) -> anyhow::Result<ConvergenceTable> {
    let StepSize::Fixed(dt) = config.step else {
        bail!("convergence needs a fixed step: set 'dt' instead of 'cfl'");
    };
    if halvings < 2 {
        bail!("need at least 2 halvings to observe an order, got {halvings}");
    }
    let model = Model::new(config.model, config.riesz_sign);
    let grid = Grid::new(config.n)?;
    let u0 = from_samples(&config.ic.build(&grid)?.inverse_transform()?, true);

    let mut finals = Vec::new();
    let mut levels = Vec::new();
    for j in 0..=halvings {
        let h = dt / f64::from(1u32 << j);
        let mut controls = StepControls::fixed(h, config.t_final);
        controls.blowup_threshold = config.blowup_threshold;
        let run = integrate(&model, &u0, &controls, Start::default(), |_| Ok(()))
            .with_context(|| format!("run with dt={h:e}"))?;
        levels.push(Level { dt: h, steps: run.steps, diff: None, order: None });
        finals.push(run.state);
    }
    for j in 0..halvings as usize {
        let d = finals[j].sub(&finals[j + 1])?.norm_l2() / finals[j + 1].norm_l2();
        levels[j].diff = Some(d);
        if j > 0 {
            let prev = levels[j - 1].diff.expect("set above");
            levels[j].order = Some((prev / d).log2());
        }
    }
    let table = ConvergenceTable { levels };
    fs::create_dir_all(&config.output)?;
    fs::write(config.output.join(CSV_NAME), table.to_csv())?;
    Ok(table)
}
