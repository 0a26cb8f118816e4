//! `verify`: operator identities and nonlinear cancellations on seeded
//! random fields.

use std::fmt;
use std::sync::Arc;

use mns_core::diagnostics::cancellation_check;
use mns_core::initial::random_solenoidal;
use mns_core::models::{nonlinear_ns_convective, nonlinear_ns_rotational};
use mns_core::multipliers::{
    curl_vec, heat_factor, lambda_pow, leray_project, relative_divergence, riesz, riesz_cross,
};
use mns_core::spectral::PhysicalField;
use mns_core::{Grid, Model, ModelKind, RieszSign, SpectralScalarField, SpectralVectorField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub const IDENTITY_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    /// Largest relative defect over all samples.
    pub worst: f64,
    pub tolerance: f64,
    pub samples: usize,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.worst <= self.tolerance
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<40} worst {:.3e} (tol {:.0e}, {} samples)",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.worst,
            self.tolerance,
            self.samples
        )
    }
}

struct Tally {
    name: String,
    worst: f64,
    samples: usize,
}

impl Tally {
    fn new(name: impl Into<String>) -> Self {
        Tally { name: name.into(), worst: 0.0, samples: 0 }
    }

    fn add(&mut self, defect: f64) {
        // NaN must fail the check.
        self.worst = if defect.is_nan() { f64::INFINITY } else { self.worst.max(defect) };
        self.samples += 1;
    }

    fn finish(self) -> Check {
        Check { name: self.name, worst: self.worst, tolerance: IDENTITY_TOLERANCE, samples: self.samples }
    }
}

/// Dealiased, mean-free field with uniformly random point values.
pub fn random_field<const C: usize>(grid: &Arc<Grid>, rng: &mut ChaCha20Rng) -> mns_core::spectral::SpectralField<C> {
    let comps = std::array::from_fn(|_| (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect());
    let phys = PhysicalField::<C>::from_components(grid, comps).expect("grid-sized samples");
    phys.forward_transform().expect("finite samples").dealias()
}

fn rel<const C: usize>(a: &mns_core::spectral::SpectralField<C>, b: &mns_core::spectral::SpectralField<C>) -> f64 {
    a.sub(b).expect("same grid").norm_l2() / b.norm_l2()
}

/// Multiplier identities on `fields` random fields at resolution `n`.
pub fn operator_suite(n: usize, fields: usize, seed: u64) -> Vec<Check> {
    let grid = Grid::new(n).expect("valid grid");
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut riesz_sum = Tally::new("R1^2 + R2^2 + R3^2 = -I");
    let mut cross_sq = Tally::new("riesz_cross^2 = leray_project");
    let mut lambda_cross = Tally::new("Lambda riesz_cross = sign curl");
    let mut div_cross = Tally::new("div riesz_cross = 0");
    let mut lambda_comp = Tally::new("Lambda^a Lambda^b = Lambda^(a+b)");
    let mut heat = Tally::new("heat semigroup");
    let mut leray = Tally::new("leray idempotent and solenoidal");

    for i in 0..fields {
        let sign = if i % 2 == 0 { RieszSign::Plus } else { RieszSign::Minus };
        let f: SpectralScalarField = random_field(&grid, &mut rng);
        let mut sum = f.clone();
        for j in 0..3 {
            sum.axpy(1.0, &riesz(&riesz(&f, j, sign), j, sign)).expect("same grid");
        }
        riesz_sum.add(sum.norm_l2() / f.norm_l2());

        let u: SpectralVectorField = random_field(&grid, &mut rng);
        let rc = riesz_cross(&u, sign);
        cross_sq.add(rel(&riesz_cross(&rc, sign), &leray_project(&u)));
        let curl = curl_vec(&u);
        let signed_curl = curl.scale(sign.value());
        lambda_cross.add(rel(&lambda_pow(&rc, 1.0), &signed_curl));
        div_cross.add(relative_divergence(&rc));

        let a = rng.random_range(-1.0..2.0);
        let b = rng.random_range(-1.0..2.0);
        lambda_comp.add(rel(&lambda_pow(&lambda_pow(&u, a), b), &lambda_pow(&u, a + b)));

        let s = rng.random_range(0.0..0.5);
        let t = rng.random_range(0.0..0.5);
        let st = heat_factor(&heat_factor(&u, s).expect("s >= 0"), t).expect("t >= 0");
        heat.add(rel(&st, &heat_factor(&u, s + t).expect("s + t >= 0")));

        let p = leray_project(&u);
        leray.add(rel(&leray_project(&p), &p).max(relative_divergence(&p)));
    }
    vec![
        riesz_sum.finish(),
        cross_sq.finish(),
        lambda_cross.finish(),
        div_cross.finish(),
        lambda_comp.finish(),
        heat.finish(),
        leray.finish(),
    ]
}

/// Normalized pairing of each model's nonlinearity with its energy weight,
/// over `fields` random solenoidal fields at resolution `n`.
pub fn cancellation_suite(n: usize, fields: usize, seed: u64) -> Vec<Check> {
    let grid = Grid::new(n).expect("valid grid");
    let peak = (grid.cutoff() as f64 / 3.0).max(1.0);
    let mut models: Vec<Model> = ModelKind::ALL.into_iter().map(|k| Model::new(k, RieszSign::Plus)).collect();
    models.push(Model::new(ModelKind::Mns, RieszSign::Minus));
    let mut tallies: Vec<Tally> = models
        .iter()
        .map(|m| {
            let pairing = if m.kind == ModelKind::Mns { "<N, Lambda u>" } else { "<N, u>" };
            Tally::new(format!("{pairing} = 0 for {} (sign {})", m.kind, m.sign))
        })
        .collect();
    for i in 0..fields {
        let u = random_solenoidal(&grid, seed + i as u64, peak, 1.0 + i as f64).expect("valid random field");
        for (m, tally) in models.iter().zip(tallies.iter_mut()) {
            tally.add(cancellation_check(m, &u).expect("solenoidal input"));
        }
    }
    tallies.into_iter().map(Tally::finish).collect()
}

/// Rotational versus convective Navier-Stokes nonlinearity.
pub fn form_equivalence(n: usize, fields: usize, seed: u64) -> Check {
    let grid = Grid::new(n).expect("valid grid");
    let peak = (grid.cutoff() as f64 / 3.0).max(1.0);
    let mut tally = Tally::new("NS rotational = convective");
    for i in 0..fields {
        let u = random_solenoidal(&grid, seed + i as u64, peak, 1.0).expect("valid random field");
        let a = nonlinear_ns_rotational(&u).expect("solenoidal input");
        let b = nonlinear_ns_convective(&u).expect("solenoidal input");
        tally.add(rel(&a, &b));
    }
    tally.finish()
}

/// Everything `mns verify` runs.
pub fn run_all() -> Vec<Check> {
    let mut checks = operator_suite(16, 100, 1);
    checks.extend(cancellation_suite(16, 20, 100));
    checks.push(form_equivalence(32, 50, 200));
    checks
}
