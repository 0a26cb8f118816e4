//! Norms, energy budgets and runtime checks of the identities the models obey.
//!
//! Dissipation integrals are accumulated step by step with the
//! endpoint-corrected trapezoidal rule
//! `∫ f ≈ h/2 (f_a + f_b) + h²/12 (f'_a − f'_b)`, where `f'` is evaluated
//! exactly from the state and its nonlinear term. This keeps the quadrature
//! error well below the time-stepping error of the integrator.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::StepView;
use crate::models::{Model, ModelKind};
use crate::multipliers::{divergence_defect, partial};
use crate::spectral::field::inverse_real;
use crate::spectral::{PhysicalField, SpectralField, SpectralVectorField, BOX_VOLUME};

/// Smallest integer Sobolev index above 5/2.
pub const DEFAULT_SOBOLEV_INDEX: f64 = 3.0;

/// Column order of `diagnostics.csv`.
pub const CSV_COLUMNS: [&str; 16] = [
    "t",
    "E_L2",
    "E_half",
    "D_half_cum",
    "grad_sq",
    "lap_sq",
    "d3_sq",
    "hm",
    "l3",
    "l6",
    "linf",
    "grad_linf",
    "resid_en",
    "cancel",
    "div_max",
    "bound_rhs",
];

/// `‖Λ^s u‖_{L²} = ((2π)³ Σ_k |k|^{2s} |û_k|²)^{1/2}`. The mean counts only at `s = 0`.
pub fn sobolev_seminorm<const C: usize>(u: &SpectralField<C>, s: f64) -> f64 {
    weighted_sum(u, |kk| {
        if kk == 0.0 {
            if s == 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            kk.powf(s)
        }
    })
    .sqrt()
}

/// `‖u‖_{H^m} = ((2π)³ Σ_k (1+|k|²)^m |û_k|²)^{1/2}`.
pub fn hm_norm<const C: usize>(u: &SpectralField<C>, m: f64) -> f64 {
    weighted_sum(u, |kk| (1.0 + kk).powf(m)).sqrt()
}

/// `(Σ_{|α|≤m} ‖D^α u‖²)^{1/2}` over multi-indices, evaluated spectrally.
pub fn multi_index_hm_norm<const C: usize>(u: &SpectralField<C>, m: u32) -> f64 {
    let alphas = multi_indices(m);
    let grid = u.grid();
    let mut acc = 0.0;
    grid.for_each_mode(|i, k| {
        let energy: f64 = (0..C).map(|c| u.component(c)[i].norm_sqr()).sum();
        if energy == 0.0 {
            return;
        }
        let k2 = k.map(|x| x * x);
        let w: f64 =
            alphas.iter().map(|a| k2[0].powi(a[0] as i32) * k2[1].powi(a[1] as i32) * k2[2].powi(a[2] as i32)).sum();
        acc += w * energy;
    });
    (BOX_VOLUME * acc).sqrt()
}

/// Largest multinomial coefficient `m!/(j! α₁! α₂! α₃!)` with `j + |α| = m`.
/// Squared, [`hm_norm`] is at most this factor times the squared
/// [`multi_index_hm_norm`], and at least the latter.
pub fn hm_equivalence_factor(m: u32) -> f64 {
    let fact = |x: u32| (1..=x).map(f64::from).product::<f64>();
    let mut best: f64 = 1.0;
    for a in multi_indices(m) {
        let j = m - a.iter().sum::<u32>();
        best = best.max(fact(m) / (fact(j) * fact(a[0]) * fact(a[1]) * fact(a[2])));
    }
    best
}

fn multi_indices(m: u32) -> Vec<[u32; 3]> {
    let mut out = Vec::new();
    for a in 0..=m {
        for b in 0..=(m - a) {
            for c in 0..=(m - a - b) {
                out.push([a, b, c]);
            }
        }
    }
    out
}

fn weighted_sum<const C: usize>(u: &SpectralField<C>, weight: impl Fn(f64) -> f64) -> f64 {
    let mut acc = 0.0;
    u.grid().for_each_mode(|i, k| {
        let energy: f64 = (0..C).map(|c| u.component(c)[i].norm_sqr()).sum();
        if energy != 0.0 {
            acc += weight(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) * energy;
        }
    });
    BOX_VOLUME * acc
}

/// Collocation quadrature of `(∫ |u|^p dx)^{1/p}`, `|u|` Euclidean over
/// components; `p = ∞` gives the maximum over grid points.
pub fn lp_norm<const C: usize>(u: &PhysicalField<C>, p: f64) -> f64 {
    let grid = u.grid();
    let len = grid.len();
    if p.is_infinite() {
        return (0..len).fold(0.0, |m, i| m.max(u.magnitude_at(i)));
    }
    let cell = grid.spacing().powi(3);
    let sum: f64 = (0..len).map(|i| u.magnitude_at(i).powf(p)).sum();
    (sum * cell).powf(1.0 / p)
}

/// Point values of `u` together with `∇u` (`grad[j] = ∂_j u`).
pub struct PhysicalJet {
    pub value: PhysicalField<3>,
    pub grad: [PhysicalField<3>; 3],
}

impl PhysicalJet {
    pub fn new(u: &SpectralVectorField) -> Self {
        let grid = u.grid();
        let grads: Vec<SpectralVectorField> = (0..3).map(|j| partial(u, j)).collect();
        let fields: Vec<&[Complex64]> = u
            .components()
            .iter()
            .chain(grads.iter().flat_map(|g| g.components().iter()))
            .map(|c| c.as_slice())
            .collect();
        let mut phys = inverse_real(grid, &fields).into_iter();
        let mut take = || {
            let comps = std::array::from_fn(|_| phys.next().expect("twelve fields"));
            PhysicalField::from_components(grid, comps).expect("grid-sized samples")
        };
        let value = take();
        let grad = [take(), take(), take()];
        PhysicalJet { value, grad }
    }

    /// `max_x |∇u(x)|`, Frobenius norm of the velocity gradient.
    pub fn grad_linf(&self) -> f64 {
        let len = self.value.grid().len();
        (0..len).fold(0.0, |m, i| {
            let s: f64 = self.grad.iter().map(|g| (0..3).map(|c| g.component(c)[i].powi(2)).sum::<f64>()).sum();
            m.max(s.sqrt())
        })
    }

    /// `max_x |∇·u(x)|`.
    pub fn div_max(&self) -> f64 {
        let len = self.value.grid().len();
        (0..len).fold(0.0, |m, i| {
            let d = self.grad[0].component(0)[i] + self.grad[1].component(1)[i] + self.grad[2].component(2)[i];
            m.max(d.abs())
        })
    }
}

/// `max_x |∇u(x)|` of a spectral field.
pub fn gradient_linf(u: &SpectralVectorField) -> f64 {
    PhysicalJet::new(u).grad_linf()
}

/// The field each model's nonlinearity is orthogonal to: `Λu` for the
/// Riesz-modified model, `u` otherwise.
fn pairing_weight(kind: ModelKind) -> fn(f64) -> f64 {
    match kind {
        ModelKind::Mns => f64::sqrt,
        _ => |_| 1.0,
    }
}

/// `|⟨N, W⟩| / (‖N‖ ‖W‖)` for a precomputed nonlinear term `N` of `u`;
/// zero when either factor vanishes.
pub fn cancellation_with(kind: ModelKind, u: &SpectralVectorField, n: &SpectralVectorField) -> Result<f64> {
    u.grid().same_as(n.grid())?;
    let w = pairing_weight(kind);
    let (mut inner, mut nn, mut ww) = (0.0, 0.0, 0.0);
    u.grid().for_each_mode(|i, k| {
        let kk = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        let weight = if kk == 0.0 {
            if kind == ModelKind::Mns {
                0.0
            } else {
                1.0
            }
        } else {
            w(kk)
        };
        for c in 0..3 {
            let (a, b) = (n.component(c)[i], u.component(c)[i]);
            inner += weight * (a.re * b.re + a.im * b.im);
            nn += a.norm_sqr();
            ww += weight * weight * b.norm_sqr();
        }
    });
    if nn == 0.0 || ww == 0.0 {
        return Ok(0.0);
    }
    Ok(inner.abs() / (nn.sqrt() * ww.sqrt()))
}

/// Normalized pairing of the model's nonlinearity with the quantity its
/// energy law is built on.
pub fn cancellation_check(model: &Model, u: &SpectralVectorField) -> Result<f64> {
    let n = model.nonlinear(u)?;
    cancellation_with(model.kind, u, &n)
}

/// Exploratory Galilean check: with a uniform drift `U` added to `u`, an
/// invariant model satisfies `N(u+U) − N(u) = −(U·∇)u`. Returns the relative
/// L² mismatch of that identity.
pub fn boost_residual(model: &Model, u: &SpectralVectorField, drift: [f64; 3]) -> Result<f64> {
    let mut boosted = u.clone();
    for (c, d) in drift.iter().enumerate() {
        boosted.component_mut(c)[0] = Complex64::new(*d, 0.0);
    }
    let n0 = model.nonlinear(u)?;
    let n1 = model.nonlinear(&boosted)?;
    let mut advection = SpectralVectorField::zeros(u.grid());
    for (j, d) in drift.iter().enumerate() {
        advection.axpy(*d, &partial(u, j))?;
    }
    let mut mismatch = n1.sub(&n0)?;
    mismatch.axpy(1.0, &advection)?;
    let scale = advection.norm_l2();
    if scale == 0.0 {
        return Err(Error::InvalidParameter("boost residual needs a nonzero drift and a non-constant field".into()));
    }
    Ok(mismatch.norm_l2() / scale)
}

/// Squared norms of the initial data entering the a-priori bounds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InitialNorms {
    /// `‖v₀‖²_{L²}`
    pub l2_sq: f64,
    /// `‖Λ^{1/2} v₀‖²_{L²}`
    pub half_sq: f64,
    /// `‖Λ v₀‖²_{L²}`
    pub lambda_sq: f64,
    /// `‖v₀‖²_{H^m}`
    pub hm_sq: f64,
}

impl InitialNorms {
    pub fn of(u: &SpectralVectorField, m: f64) -> Self {
        InitialNorms {
            l2_sq: sobolev_seminorm(u, 0.0).powi(2),
            half_sq: sobolev_seminorm(u, 0.5).powi(2),
            lambda_sq: sobolev_seminorm(u, 1.0).powi(2),
            hm_sq: hm_norm(u, m).powi(2),
        }
    }

    fn growth(&self, c: f64) -> f64 {
        (c * self.half_sq).exp()
    }

    /// Right side of the L² estimate, `‖v₀‖² exp(C‖Λ^{1/2}v₀‖²)`.
    pub fn l2_bound(&self, c: f64) -> f64 {
        if self.l2_sq == 0.0 {
            0.0
        } else {
            self.l2_sq * self.growth(c)
        }
    }

    /// Right side of the H¹ estimate, `‖Λv₀‖² exp(C‖Λ^{1/2}v₀‖²)`.
    pub fn h1_bound(&self, c: f64) -> f64 {
        if self.lambda_sq == 0.0 {
            0.0
        } else {
            self.lambda_sq * self.growth(c)
        }
    }

    /// Right side of the H² estimate at time `t`, in its final printed form
    /// `‖Λv₀‖² exp{C t ‖v₀‖² e^{C‖Λ^{1/2}v₀‖²} ‖Λv₀‖² e^{C‖Λ^{1/2}v₀‖²}}`.
    pub fn h2_bound(&self, c: f64, t: f64) -> f64 {
        if self.lambda_sq == 0.0 {
            return 0.0;
        }
        let a = self.growth(c);
        self.lambda_sq * (c * t * self.l2_sq * a * self.lambda_sq * a).exp()
    }

    /// Natural log of the global H^m bound at time `t`; `−∞` for zero data.
    pub fn ln_hm_bound(&self, c: f64, t: f64) -> f64 {
        if self.hm_sq == 0.0 {
            return f64::NEG_INFINITY;
        }
        let a = self.growth(c);
        let first = t * self.l2_sq * a;
        let inner = c * t * self.l2_sq * a * self.lambda_sq * a;
        self.hm_sq.ln() + first + self.lambda_sq * inner.exp()
    }

    /// Global H^m bound
    /// `‖v₀‖²_{H^m} exp{t‖v₀‖² e^{C‖Λ^{1/2}v₀‖²}} · exp[‖Λv₀‖² exp{C t ‖v₀‖² e^{C‖Λ^{1/2}v₀‖²} ‖Λv₀‖² e^{C‖Λ^{1/2}v₀‖²}}]`.
    /// Overflows to `+∞` for all but small data.
    pub fn hm_bound(&self, c: f64, t: f64) -> f64 {
        self.ln_hm_bound(c, t).exp()
    }
}

/// Running integrals, all accumulated with the corrected trapezoidal rule.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Integrals {
    /// `∫ ‖Λ^{3/2} u‖²`
    pub half: f64,
    /// `∫ ‖∇u‖²`
    pub grad: f64,
    /// `∫ ‖Δu‖²`
    pub lap: f64,
    /// `∫ ‖D³u‖²`
    pub d3: f64,
    /// `∫ ‖Du‖²_{H^m}`
    pub dhm: f64,
}

/// Everything a restarted run needs to continue the budgets exactly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetState {
    pub m: f64,
    pub initial: InitialNorms,
    pub integrals: Integrals,
    /// `sup_s ‖u(s)‖²_{H^m}` so far.
    pub sup_hm_sq: f64,
}

/// Spectral quantities of one state, with time derivatives of the integrands.
#[derive(Clone, Copy, Debug, Default)]
struct Moments {
    e_l2: f64,
    e_half: f64,
    grad_sq: f64,
    lap_sq: f64,
    d3_sq: f64,
    hm_sq: f64,
    half_diss: f64,
    dhm_sq: f64,
    rates: [f64; 5],
    cancel: f64,
}

impl Moments {
    fn integrands(&self) -> [f64; 5] {
        [self.half_diss, self.grad_sq, self.lap_sq, self.d3_sq, self.dhm_sq]
    }

    /// Single pass over the dealias band. `u` and `n` must be dealiased.
    fn compute(kind: ModelKind, m: f64, u: &SpectralVectorField, n: &SpectralVectorField) -> Self {
        let grid = u.grid();
        let integer_m = (m.fract() == 0.0 && m.abs() < 64.0).then_some(m as i32);
        let mut s = [0.0f64; 8];
        let mut rates = [0.0f64; 5];
        let (mut inner, mut nn, mut ww) = (0.0, 0.0, 0.0);
        let mnsw = kind == ModelKind::Mns;
        let (u0, u1, u2) = (u.component(0), u.component(1), u.component(2));
        let (n0, n1, n2) = (n.component(0), n.component(1), n.component(2));
        grid.for_each_mode_in_band(|i, kk| {
            let a = u0[i].norm_sqr() + u1[i].norm_sqr() + u2[i].norm_sqr();
            let nu = u0[i].re * n0[i].re
                + u0[i].im * n0[i].im
                + u1[i].re * n1[i].re
                + u1[i].im * n1[i].im
                + u2[i].re * n2[i].re
                + u2[i].im * n2[i].im;
            let nsq = n0[i].norm_sqr() + n1[i].norm_sqr() + n2[i].norm_sqr();
            // Re conj(û)·(N̂ − |k|² û)
            let b = nu - kk * a;
            let k1 = kk.sqrt();
            let k3 = kk * k1;
            let hw = match integer_m {
                Some(p) => (1.0 + kk).powi(p),
                None => (1.0 + kk).powf(m),
            };
            s[0] += a;
            s[1] += k1 * a;
            s[2] += kk * a;
            s[3] += kk * kk * a;
            s[4] += kk * kk * kk * a;
            s[5] += hw * a;
            s[6] += k3 * a;
            s[7] += kk * hw * a;
            rates[0] += k3 * b;
            rates[1] += kk * b;
            rates[2] += kk * kk * b;
            rates[3] += kk * kk * kk * b;
            rates[4] += kk * hw * b;
            let w = if mnsw { k1 } else { 1.0 };
            inner += w * nu;
            nn += nsq;
            ww += w * w * a;
        });
        let v = BOX_VOLUME;
        Moments {
            e_l2: 0.5 * v * s[0],
            e_half: 0.5 * v * s[1],
            grad_sq: v * s[2],
            lap_sq: v * s[3],
            d3_sq: v * s[4],
            hm_sq: v * s[5],
            half_diss: v * s[6],
            dhm_sq: v * s[7],
            rates: rates.map(|r| 2.0 * v * r),
            cancel: if nn == 0.0 || ww == 0.0 { 0.0 } else { inner.abs() / (nn.sqrt() * ww.sqrt()) },
        }
    }
}

/// Per-step summary produced by [`Monitor::observe`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepSample {
    pub step: u64,
    pub t: f64,
    pub e_l2: f64,
    pub e_half: f64,
    pub grad_sq: f64,
    pub lap_sq: f64,
    pub d3_sq: f64,
    pub hm_sq: f64,
    pub integrals: Integrals,
    pub sup_hm_sq: f64,
    /// `E_half(t) + ∫‖Λ^{3/2}u‖² − E_half(0)`.
    pub resid_half: f64,
    /// `E_L2(t) + ∫‖∇u‖² − E_L2(0)`.
    pub resid_l2: f64,
    pub cancel: f64,
    /// `max_k |k·û_k|`.
    pub div_defect: f64,
    /// `|û_0|`, largest over components.
    pub mean_abs: f64,
    pub max_speed: f64,
}

/// One row of `diagnostics.csv` plus the budget columns behind it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub e_l2: f64,
    pub e_half: f64,
    pub d_half_cum: f64,
    pub grad_sq: f64,
    pub lap_sq: f64,
    pub d3_sq: f64,
    pub hm: f64,
    pub l3: f64,
    pub l6: f64,
    pub linf: f64,
    pub grad_linf: f64,
    /// Residual of the model's exact energy law: the H^{1/2} balance for the
    /// Riesz-modified model, the L² balance otherwise.
    pub resid_en: f64,
    pub cancel: f64,
    pub div_max: f64,
    pub bound_rhs: f64,
    pub step: u64,
    pub sample: StepSample,
}

impl DiagnosticsRecord {
    pub fn csv_values(&self) -> [f64; 16] {
        [
            self.t,
            self.e_l2,
            self.e_half,
            self.d_half_cum,
            self.grad_sq,
            self.lap_sq,
            self.d3_sq,
            self.hm,
            self.l3,
            self.l6,
            self.linf,
            self.grad_linf,
            self.resid_en,
            self.cancel,
            self.div_max,
            self.bound_rhs,
        ]
    }
}

/// Tracks energy budgets along a run; feed it every step.
#[derive(Clone, Debug)]
pub struct Monitor {
    kind: ModelKind,
    bound_constant: f64,
    e_l2_0: f64,
    e_half_0: f64,
    state: BudgetState,
    prev: Option<(f64, [f64; 5], [f64; 5])>,
}

impl Monitor {
    /// Budgets anchored at the initial state `u0`.
    pub fn new(kind: ModelKind, m: f64, bound_constant: f64, u0: &SpectralVectorField) -> Self {
        let initial = InitialNorms::of(u0, m);
        Monitor::resume(
            kind,
            bound_constant,
            BudgetState { m, initial, integrals: Integrals::default(), sup_hm_sq: initial.hm_sq },
        )
    }

    /// Continue budgets saved by [`Monitor::budget`]; the next observed state
    /// must be the one the budget was saved at.
    pub fn resume(kind: ModelKind, bound_constant: f64, state: BudgetState) -> Self {
        Monitor {
            kind,
            bound_constant,
            e_l2_0: 0.5 * state.initial.l2_sq,
            e_half_0: 0.5 * state.initial.half_sq,
            state,
            prev: None,
        }
    }

    pub fn budget(&self) -> BudgetState {
        self.state
    }

    pub fn initial(&self) -> InitialNorms {
        self.state.initial
    }

    pub fn bound_constant(&self) -> f64 {
        self.bound_constant
    }

    pub fn observe(&mut self, view: &StepView<'_>) -> Result<StepSample> {
        let mo = Moments::compute(self.kind, self.state.m, view.state, view.nonlinear);
        let f = mo.integrands();
        if let Some((t_prev, f_prev, r_prev)) = self.prev {
            let h = view.t - t_prev;
            let mut acc = [
                self.state.integrals.half,
                self.state.integrals.grad,
                self.state.integrals.lap,
                self.state.integrals.d3,
                self.state.integrals.dhm,
            ];
            for j in 0..5 {
                acc[j] += 0.5 * h * (f_prev[j] + f[j]) + h * h / 12.0 * (r_prev[j] - mo.rates[j]);
            }
            self.state.integrals = Integrals { half: acc[0], grad: acc[1], lap: acc[2], d3: acc[3], dhm: acc[4] };
        }
        self.prev = Some((view.t, f, mo.rates));
        self.state.sup_hm_sq = self.state.sup_hm_sq.max(mo.hm_sq);
        let mean_abs = (0..3).fold(0.0f64, |m, c| m.max(view.state.component(c)[0].norm()));
        Ok(StepSample {
            step: view.step,
            t: view.t,
            e_l2: mo.e_l2,
            e_half: mo.e_half,
            grad_sq: mo.grad_sq,
            lap_sq: mo.lap_sq,
            d3_sq: mo.d3_sq,
            hm_sq: mo.hm_sq,
            integrals: self.state.integrals,
            sup_hm_sq: self.state.sup_hm_sq,
            resid_half: mo.e_half + self.state.integrals.half - self.e_half_0,
            resid_l2: mo.e_l2 + self.state.integrals.grad - self.e_l2_0,
            cancel: mo.cancel,
            div_defect: divergence_defect(view.state),
            mean_abs,
            max_speed: view.max_speed,
        })
    }

    /// Full record for a state already passed to [`Monitor::observe`].
    pub fn record(&self, view: &StepView<'_>, sample: &StepSample) -> DiagnosticsRecord {
        let jet = PhysicalJet::new(view.state);
        DiagnosticsRecord {
            t: sample.t,
            e_l2: sample.e_l2,
            e_half: sample.e_half,
            d_half_cum: sample.integrals.half,
            grad_sq: sample.grad_sq,
            lap_sq: sample.lap_sq,
            d3_sq: sample.d3_sq,
            hm: sample.hm_sq.sqrt(),
            l3: lp_norm(&jet.value, 3.0),
            l6: lp_norm(&jet.value, 6.0),
            linf: lp_norm(&jet.value, f64::INFINITY),
            grad_linf: jet.grad_linf(),
            resid_en: match self.kind {
                ModelKind::Mns => sample.resid_half,
                _ => sample.resid_l2,
            },
            cancel: sample.cancel,
            div_max: jet.div_max(),
            bound_rhs: self.state.initial.hm_bound(self.bound_constant, sample.t),
            step: sample.step,
            sample: *sample,
        }
    }
}

/// Records of one run together with the initial norms they refer to.
#[derive(Clone, Debug, Default)]
pub struct DiagnosticsSeries {
    pub initial: InitialNorms,
    pub records: Vec<DiagnosticsRecord>,
}

/// `ρ(T) = E_half(T) + ∫₀ᵀ‖Λ^{3/2}u‖² − E_half(0)` at the last record.
pub fn half_energy_residual(series: &DiagnosticsSeries) -> f64 {
    series.records.last().map_or(0.0, |r| r.sample.resid_half)
}

/// Two sides of one a-priori inequality at one time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Inequality {
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`, zero when the right side is zero or infinite.
    pub ratio: f64,
    pub satisfied: bool,
}

impl Inequality {
    fn new(lhs: f64, rhs: f64) -> Self {
        let ratio = if rhs == 0.0 || rhs.is_infinite() { 0.0 } else { lhs / rhs };
        Inequality { lhs, rhs, ratio, satisfied: lhs <= rhs }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EstimateRow {
    pub t: f64,
    /// `‖v‖² + ∫‖∇v‖² ≤ ‖v₀‖² exp(C‖Λ^{1/2}v₀‖²)`
    pub l2: Inequality,
    /// `‖Λv‖² + ∫‖Δv‖² ≤ ‖Λv₀‖² exp(C‖Λ^{1/2}v₀‖²)`
    pub h1: Inequality,
    /// `‖D²v‖² + ∫‖D³v‖² ≤ ‖Λv₀‖² exp{…}`
    pub h2: Inequality,
    /// `sup‖v‖²_{H^m} + ∫‖Dv‖²_{H^m} ≤` global bound
    pub hm: Inequality,
    /// Natural log of the global bound, finite where the bound itself overflows.
    pub ln_hm_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateReport {
    pub constant: f64,
    pub rows: Vec<EstimateRow>,
}

impl EstimateReport {
    pub fn all_satisfied(&self) -> bool {
        self.rows.iter().all(|r| r.l2.satisfied && r.h1.satisfied && r.h2.satisfied && r.hm.satisfied)
    }
}

/// Evaluate both sides of each a-priori estimate at every record for the
/// user-supplied constant `C`. Reports only; nothing is asserted.
pub fn estimate_monitors(series: &DiagnosticsSeries, constant: f64) -> EstimateReport {
    let init = &series.initial;
    let rows = series
        .records
        .iter()
        .map(|r| {
            let s = &r.sample;
            EstimateRow {
                t: r.t,
                l2: Inequality::new(2.0 * s.e_l2 + s.integrals.grad, init.l2_bound(constant)),
                h1: Inequality::new(s.grad_sq + s.integrals.lap, init.h1_bound(constant)),
                h2: Inequality::new(s.lap_sq + s.integrals.d3, init.h2_bound(constant, r.t)),
                hm: Inequality::new(s.sup_hm_sq + s.integrals.dhm, init.hm_bound(constant, r.t)),
                ln_hm_bound: init.ln_hm_bound(constant, r.t),
            }
        })
        .collect();
    EstimateReport { constant, rows }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::initial::{abc_flow, random_solenoidal, taylor_green};
    use crate::integrator::{integrate, Start, StepControls};
    use crate::multipliers::RieszSign;
    use crate::spectral::{Grid, PhysicalScalarField, SpectralScalarField};

    fn sine(grid: &std::sync::Arc<Grid>, freq: i64) -> SpectralScalarField {
        let mut f = SpectralScalarField::zeros(grid);
        f.set_hermitian_pair(0, [freq, 0, 0], Complex64::new(0.0, -0.5)).unwrap();
        f
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1e-300)
    }

    fn run(model: Model, u0: &SpectralVectorField, dt: f64, t: f64) -> DiagnosticsSeries {
        let mut monitor = Monitor::new(model.kind, DEFAULT_SOBOLEV_INDEX, 1.0, u0);
        let mut records = Vec::new();
        integrate(&model, u0, &StepControls::fixed(dt, t), Start::default(), |view| {
            let sample = monitor.observe(view)?;
            records.push(monitor.record(view, &sample));
            Ok(())
        })
        .unwrap();
        DiagnosticsSeries { initial: monitor.initial(), records }
    }

    #[test]
    fn seminorms_of_a_sine() {
        let g = Grid::new(16).unwrap();
        let base = 4.0 * PI.powi(3);
        let f = sine(&g, 2);
        assert!(close(sobolev_seminorm(&f, 0.0).powi(2), base, 1e-14));
        assert!(close(sobolev_seminorm(&f, 0.5).powi(2), 2.0 * base, 1e-14));
        assert!(close(sobolev_seminorm(&f, 1.0).powi(2), 4.0 * base, 1e-14));
        assert!(close(hm_norm(&f, 3.0).powi(2), 125.0 * base, 1e-14));
        assert!(close(multi_index_hm_norm(&f, 3).powi(2), (1.0 + 4.0 + 16.0 + 64.0) * base, 1e-14));
    }

    #[test]
    fn mean_only_counts_in_l2() {
        let g = Grid::new(8).unwrap();
        let mut f = SpectralScalarField::zeros(&g);
        f.component_mut(0)[0] = Complex64::new(2.0, 0.0);
        assert!(close(sobolev_seminorm(&f, 0.0), 2.0 * BOX_VOLUME.sqrt(), 1e-15));
        assert_eq!(sobolev_seminorm(&f, 0.5), 0.0);
        assert!(close(hm_norm(&f, 3.0), 2.0 * BOX_VOLUME.sqrt(), 1e-15));
    }

    #[test]
    fn equivalence_factor_values() {
        assert_eq!(hm_equivalence_factor(0), 1.0);
        assert_eq!(hm_equivalence_factor(1), 1.0);
        assert_eq!(hm_equivalence_factor(2), 2.0);
        assert_eq!(hm_equivalence_factor(3), 6.0);
        assert_eq!(hm_equivalence_factor(4), 24.0);
    }

    #[test]
    fn hm_norms_are_equivalent() {
        let g = Grid::new(16).unwrap();
        let v = random_solenoidal(&g, 3, 3.0, 1.0).unwrap();
        for m in 0..=4u32 {
            let a = hm_norm(&v, m as f64).powi(2);
            let b = multi_index_hm_norm(&v, m).powi(2);
            assert!(b <= a * (1.0 + 1e-14), "m={m}");
            assert!(a <= hm_equivalence_factor(m) * b * (1.0 + 1e-14), "m={m}");
        }
    }

    #[test]
    fn lebesgue_norms_of_a_sine() {
        let g = Grid::new(64).unwrap();
        let f = PhysicalScalarField::from_fn(&g, |x| [x[0].sin()]);
        let l3 = lp_norm(&f, 3.0);
        assert!(close(l3.powi(3), (2.0 * PI).powi(2) * 8.0 / 3.0, 2e-6));
        let l6 = lp_norm(&f, 6.0);
        assert!(close(l6.powi(6), (2.0 * PI).powi(3) * 5.0 / 16.0, 1e-11));
        let l2 = lp_norm(&f, 2.0);
        assert!(close(l2.powi(2), 4.0 * PI.powi(3), 1e-13));
        assert!(close(lp_norm(&f, f64::INFINITY), 1.0, 1e-3));
    }

    #[test]
    fn jet_of_abc() {
        let g = Grid::new(16).unwrap();
        let v = abc_flow(&g, 1.0, 0.0, 0.0).unwrap();
        let jet = PhysicalJet::new(&v);
        assert!(jet.div_max() <= 1e-14);
        // ∇(sin z, cos z, 0) has Frobenius norm 1 everywhere.
        assert!(close(jet.grad_linf(), 1.0, 1e-13));
        assert!(close(lp_norm(&jet.value, f64::INFINITY), 1.0, 1e-13));
    }

    #[test]
    fn cancellation_of_each_model() {
        let g = Grid::new(32).unwrap();
        let v = random_solenoidal(&g, 8, 3.0, 2.0).unwrap();
        for kind in ModelKind::ALL {
            let c = cancellation_check(&Model::new(kind, RieszSign::Plus), &v).unwrap();
            assert!(c <= 1e-12, "{kind:?}: {c:e}");
        }
        // The modified model is not orthogonal to u itself.
        let n = Model::new(ModelKind::Mns, RieszSign::Plus).nonlinear(&v).unwrap();
        assert!(cancellation_with(ModelKind::NsRotational, &v, &n).unwrap() > 1e-6);
    }

    #[test]
    fn rotational_form_is_galilean_invariant() {
        let g = Grid::new(16).unwrap();
        let v = random_solenoidal(&g, 2, 2.0, 1.0).unwrap();
        let model = Model::new(ModelKind::NsRotational, RieszSign::Plus);
        let r = boost_residual(&model, &v, [0.3, -0.2, 0.5]).unwrap();
        assert!(r <= 1e-12, "{r:e}");
        assert!(boost_residual(&model, &v, [0.0; 3]).is_err());
    }

    #[test]
    fn monitor_starts_with_zero_residual() {
        let g = Grid::new(16).unwrap();
        let v = taylor_green(&g, 1.0).unwrap();
        let s = run(Model::new(ModelKind::Mns, RieszSign::Plus), &v, 0.01, 0.01);
        let first = &s.records[0];
        assert_eq!(first.resid_en, 0.0);
        assert_eq!(first.d_half_cum, 0.0);
        assert!(close(first.e_l2, 0.5 * s.initial.l2_sq, 1e-15));
        assert!(close(first.e_half, 0.5 * s.initial.half_sq, 1e-15));
        // Taylor-Green energy is |Ω| A²/8 = π³.
        assert!(close(first.e_l2, PI.powi(3), 1e-14));
        assert!(close(first.e_half, 3f64.sqrt() * PI.powi(3), 1e-14));
    }

    #[test]
    fn abc_budgets_close_to_quadrature_accuracy() {
        let g = Grid::new(16).unwrap();
        let v = abc_flow(&g, 1.0, 1.0, 1.0).unwrap();
        for kind in ModelKind::ALL {
            let s = run(Model::new(kind, RieszSign::Plus), &v, 0.01, 1.0);
            let last = s.records.last().unwrap();
            assert!(last.resid_en.abs() <= 1e-8 * s.initial.l2_sq, "{kind:?}: {:e}", last.resid_en);
            // ∫₀¹ ‖∇v‖² with ‖∇v(t)‖² = ‖v₀‖² e^{−2t}
            let exact = s.initial.l2_sq * (1.0 - (-2.0f64).exp()) / 2.0;
            assert!(close(last.sample.integrals.grad, exact, 1e-8));
        }
    }

    #[test]
    fn taylor_green_half_balance() {
        let g = Grid::new(16).unwrap();
        let v = taylor_green(&g, 1.0).unwrap();
        let s = run(Model::new(ModelKind::Mns, RieszSign::Plus), &v, 0.01, 0.2);
        let rho = half_energy_residual(&s);
        assert!(rho.abs() <= 1e-7 * s.records[0].e_half, "{rho:e}");
        for r in &s.records {
            assert!(r.cancel <= 1e-12);
            assert!(r.sample.div_defect <= 1e-14);
        }
    }

    #[test]
    fn estimates_for_zero_and_abc() {
        let g = Grid::new(16).unwrap();
        let zero = SpectralVectorField::zeros(&g);
        let s = run(Model::new(ModelKind::Mns, RieszSign::Plus), &zero, 0.1, 0.3);
        let report = estimate_monitors(&s, 1.0);
        assert!(report.all_satisfied());
        for row in &report.rows {
            assert_eq!((row.l2.lhs, row.l2.rhs, row.hm.lhs, row.hm.rhs), (0.0, 0.0, 0.0, 0.0));
        }

        let v = abc_flow(&g, 0.01, 0.01, 0.01).unwrap();
        let s = run(Model::new(ModelKind::Mns, RieszSign::Plus), &v, 0.1, 0.5);
        let report = estimate_monitors(&s, 1.0);
        for row in &report.rows {
            assert!(row.l2.satisfied && row.h1.satisfied && row.h2.satisfied);
        }
        let last = report.rows.last().unwrap();
        assert!(last.l2.ratio > 0.0 && last.l2.ratio < 1.0);
        // Pure decay: sup‖v‖²_{H^m} + ∫‖Dv‖²_{H^m} = ‖v₀‖²_{H^m} (3 − e^{−2t}) / 2, which
        // exceeds the bound with C = 1 at t = 1/2.
        let init = s.initial;
        let want = init.hm_sq * (3.0 - (-1.0f64).exp()) / 2.0;
        assert!(close(last.hm.lhs, want, 1e-6));
        assert!(!last.hm.satisfied);
        assert!(last.hm.rhs.is_finite());
        assert!(close(last.ln_hm_bound.exp(), last.hm.rhs, 1e-12));
    }

    #[test]
    fn large_data_bound_overflows() {
        let g = Grid::new(16).unwrap();
        let v = taylor_green(&g, 5.0).unwrap();
        let init = InitialNorms::of(&v, 3.0);
        assert_eq!(init.hm_bound(1.0, 0.1), f64::INFINITY);
        assert!(init.ln_hm_bound(1.0, 0.1) > 700.0);
    }

    #[test]
    fn resumed_monitor_continues_budget() {
        let g = Grid::new(16).unwrap();
        let v = taylor_green(&g, 1.0).unwrap();
        let model = Model::new(ModelKind::Mns, RieszSign::Plus);
        let full = run(model, &v, 0.01, 0.1);

        let mut monitor = Monitor::new(model.kind, 3.0, 1.0, &v);
        let first = integrate(&model, &v, &StepControls::fixed(0.01, 0.05), Start::default(), |view| {
            monitor.observe(view).map(|_| ())
        })
        .unwrap();
        let mut resumed = Monitor::resume(model.kind, 1.0, monitor.budget());
        let mut last = None;
        integrate(
            &model,
            &first.state,
            &StepControls::fixed(0.01, 0.1),
            Start { t: first.t, step: first.steps },
            |view| {
                last = Some(resumed.observe(view)?);
                Ok(())
            },
        )
        .unwrap();
        let last = last.unwrap();
        let want = full.records.last().unwrap().sample;
        assert!(close(last.integrals.half, want.integrals.half, 1e-12));
        assert!(close(last.resid_half.abs() + want.e_half, want.resid_half.abs() + want.e_half, 1e-12));
    }
}
