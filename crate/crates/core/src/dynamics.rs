//! Time stepping of the semiflow and of its linearization, and measurement
//! of m-volume growth along trajectories.
//!
//! The state equation `phi_t = -nu A_V phi - f(phi)` is advanced with the
//! IMEX scheme `(I + dt nu A_V) phi' = phi - dt f(phi)`. Tangent fields obey
//! `Phi_t = -nu A_V Phi - f'(phi) Phi` and use the same scheme with `f'(phi)`
//! frozen at the start of the step. Volumes of the tangent bundle are tracked
//! by repeated QR factorization, accumulating `log R_ii`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{dimension_bound, trace_bound, Nonlinearity, ProblemParams, Regime};
use crate::error::{Error, Result};
use crate::geometry::{Geometry, GridDomain};
use crate::spectral::linalg::pcg;
use crate::spectral::{
    assemble, lowest_eigenpairs, lowest_eigenvalues, EigenOptions, PotentialKind, SymmetricOperator,
};
use crate::CSV_SCHEMA;

const CG_TOL: f64 = 1e-10;
const RANK_GUARD: f64 = 1e-300;

/// Grid function at a time instant.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldState {
    pub values: Vec<f64>,
    pub time: f64,
    pub step: usize,
}

impl FieldState {
    pub fn new(values: Vec<f64>) -> Self {
        FieldState {
            values,
            time: 0.0,
            step: 0,
        }
    }
}

/// `m` tangent fields plus accumulated volume data.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentBundle {
    pub fields: Vec<Vec<f64>>,
    /// Sum of all accumulated `log R_ii`.
    pub log_volume: f64,
    /// Accumulated `log R_ii` per column.
    pub log_r: Vec<f64>,
    /// Diagonal of the last `R`.
    pub last_r: Vec<f64>,
}

impl TangentBundle {
    pub fn new(fields: Vec<Vec<f64>>) -> Self {
        let m = fields.len();
        TangentBundle {
            fields,
            log_volume: 0.0,
            log_r: vec![0.0; m],
            last_r: vec![1.0; m],
        }
    }

    pub fn m(&self) -> usize {
        self.fields.len()
    }

    pub fn reset_accumulators(&mut self) {
        self.log_volume = 0.0;
        self.log_r.iter_mut().for_each(|v| *v = 0.0);
    }
}

/// QR factorization in the inner product `weight * sum u v`: the fields are
/// replaced by `Q` and `sum log R_ii` is returned (and accumulated).
pub fn reorthonormalize(bundle: &mut TangentBundle, weight: f64) -> Result<f64> {
    let m = bundle.m();
    let mut increment = 0.0;
    for i in 0..m {
        let (done, rest) = bundle.fields.split_at_mut(i);
        let v = &mut rest[0];
        for _ in 0..2 {
            for q in done.iter() {
                let c = weight * dot(q, v);
                v.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let r = (weight * dot(v, v)).sqrt();
        if !(r > RANK_GUARD) {
            return Err(Error::RankDeficient { index: i, value: r });
        }
        v.iter_mut().for_each(|x| *x /= r);
        let l = r.ln();
        bundle.last_r[i] = r;
        bundle.log_r[i] += l;
        increment += l;
    }
    bundle.log_volume += increment;
    Ok(increment)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One sample of the trace of the linearization over the bundle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub time: f64,
    pub m: usize,
    pub measured: f64,
    /// Analytic upper bound, absent in the critical case.
    pub bound: Option<f64>,
    /// `-nu C_mu sum_{i<=m} lambda_i + kappa m` with discrete Laplacian
    /// eigenvalues, when they were supplied.
    pub spectral: Option<f64>,
    /// Per-field terms `-(e, nu A_V e) - (f'(phi) e, e)`.
    pub modes: Vec<f64>,
    pub log_volume: f64,
}

/// Seeded smooth random field with Dirichlet boundary values, scaled so that
/// its maximum modulus is `amplitude`.
pub fn smooth_random_field(dom: &GridDomain, amplitude: f64, seed: u64) -> Result<Vec<f64>> {
    let lap = assemble(dom, PotentialKind::None, 1.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise: Vec<f64> = (0..dom.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    // two implicit heat steps of length (2h)^2: a low-pass filter
    let eps = 4.0 * dom.h() * dom.h();
    let mut u = noise;
    for _ in 0..2 {
        u = implicit_solve(&lap, eps, &u)?;
    }
    let max = u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if max > 0.0 {
        u.iter_mut().for_each(|v| *v *= amplitude / max);
    }
    Ok(u)
}

/// Solve `(I + dt A) x = b` with Jacobi-preconditioned CG.
fn implicit_solve(a: &SymmetricOperator, dt: f64, b: &[f64]) -> Result<Vec<f64>> {
    let pre: Vec<f64> = a.diagonal().iter().map(|d| 1.0 / (1.0 + dt * d)).collect();
    let mut x = b.to_vec();
    pcg(
        |u: &[f64], y: &mut [f64]| {
            a.apply(u, y);
            y.iter_mut().zip(u).for_each(|(yi, ui)| *yi = ui + dt * *yi);
        },
        |r: &[f64], z: &mut [f64]| z.iter_mut().zip(r.iter().zip(&pre)).for_each(|(zi, (ri, pi))| *zi = ri * pi),
        b,
        &mut x,
        CG_TOL,
        10 * b.len() + 100,
    )?;
    Ok(x)
}

/// Assembled semi-discrete problem with a fixed time step.
#[derive(Clone, Debug)]
pub struct Flow {
    /// `nu A_V = nu (-Delta_h) - delta V`.
    op: SymmetricOperator,
    params: ProblemParams,
    geometry: Geometry,
    kappa: f64,
    dt: f64,
    weight: f64,
    precond: Vec<f64>,
    /// Discrete Dirichlet-Laplacian eigenvalues, for the spectral trace link.
    laplacian_eigs: Vec<f64>,
}

impl Flow {
    pub fn new(dom: &GridDomain, params: &ProblemParams, dt: f64) -> Result<Flow> {
        params.validate()?;
        if params.dim != dom.dim() {
            return Err(Error::InvalidParameter(format!(
                "parameters are for N = {} but the domain has N = {}",
                params.dim,
                dom.dim()
            )));
        }
        if let (Some(kind), Some(star)) = (params.potential, params.mu_star()) {
            if params.mu() > star {
                return Err(Error::Critical {
                    kind: kind.name(),
                    mu: params.mu(),
                    mu_star: star,
                });
            }
        }
        let kappa = params.kappa();
        let dt_max = 0.1 / kappa.max(1.0);
        if !(dt > 0.0 && dt <= dt_max) {
            return Err(Error::InvalidParameter(format!(
                "time step {dt} outside (0, {dt_max}] (0.1 / max(kappa, 1))"
            )));
        }
        let op = assemble(dom, PotentialKind::new(params.potential, params.mu()), params.nu)?;
        let precond = op.diagonal().iter().map(|d| 1.0 / (1.0 + dt * d)).collect();
        Ok(Flow {
            op,
            params: params.clone(),
            geometry: dom.geometry()?,
            kappa,
            dt,
            weight: dom.cell_volume(),
            precond,
            laplacian_eigs: Vec::new(),
        })
    }

    /// Compute the first `m` Laplacian eigenvalues used by [`TraceRecord::spectral`].
    pub fn with_laplacian_spectrum(mut self, dom: &GridDomain, m: usize) -> Result<Flow> {
        let lap = assemble(dom, PotentialKind::None, 1.0)?;
        self.laplacian_eigs = lowest_eigenvalues(&lap, m, 1e-8)?.eigenvalues;
        Ok(self)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn params(&self) -> &ProblemParams {
        &self.params
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn operator(&self) -> &SymmetricOperator {
        &self.op
    }

    /// Quadrature weight `h^N`.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        self.weight * dot(a, b)
    }

    pub fn norm(&self, a: &[f64]) -> f64 {
        self.inner(a, a).sqrt()
    }

    fn solve(&self, rhs: &[f64], guess: &[f64]) -> Result<Vec<f64>> {
        let dt = self.dt;
        let mut x = guess.to_vec();
        pcg(
            |u: &[f64], y: &mut [f64]| {
                self.op.apply(u, y);
                y.iter_mut().zip(u).for_each(|(yi, ui)| *yi = ui + dt * *yi);
            },
            |r: &[f64], z: &mut [f64]| {
                z.iter_mut()
                    .zip(r.iter().zip(&self.precond))
                    .for_each(|(zi, (ri, pi))| *zi = ri * pi)
            },
            rhs,
            &mut x,
            CG_TOL,
            10 * rhs.len() + 100,
        )?;
        Ok(x)
    }

    fn check_finite(&self, v: &[f64], step: usize, time: f64) -> Result<()> {
        if v.iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite { step, time })
        }
    }

    /// `(I + dt nu A_V) phi' = phi - dt f(phi)`.
    pub fn step(&self, state: &FieldState) -> Result<FieldState> {
        let f = &self.params.f;
        let rhs: Vec<f64> = state.values.iter().map(|&p| p - self.dt * f.eval(p)).collect();
        let values = self.solve(&rhs, &state.values)?;
        let next = FieldState {
            values,
            time: state.time + self.dt,
            step: state.step + 1,
        };
        self.check_finite(&next.values, next.step, next.time)?;
        Ok(next)
    }

    /// Advance every tangent field with `f'` frozen at `base`.
    pub fn tangent_step(&self, bundle: &mut TangentBundle, base: &FieldState) -> Result<()> {
        let fp = self.derivative_field(base);
        for field in bundle.fields.iter_mut() {
            if field.len() != fp.len() {
                return Err(Error::InvalidParameter("tangent field has the wrong length".into()));
            }
            let rhs: Vec<f64> = field.iter().zip(&fp).map(|(v, d)| v - self.dt * d * v).collect();
            *field = self.solve(&rhs, field)?;
            self.check_finite(field, base.step + 1, base.time + self.dt)?;
        }
        Ok(())
    }

    fn derivative_field(&self, base: &FieldState) -> Vec<f64> {
        let f: &Nonlinearity = &self.params.f;
        base.values.iter().map(|&p| f.derivative(p)).collect()
    }

    /// `sum_i -(e_i, nu A_V e_i) - (f'(phi) e_i, e_i)` for an orthonormal bundle.
    pub fn measured_trace(&self, bundle: &TangentBundle, base: &FieldState) -> TraceRecord {
        let fp = self.derivative_field(base);
        let mut ae = vec![0.0; fp.len()];
        let modes: Vec<f64> = bundle
            .fields
            .iter()
            .map(|e| {
                self.op.apply(e, &mut ae);
                let diffusion = self.inner(e, &ae);
                let reaction: f64 = self.weight * e.iter().zip(&fp).map(|(v, d)| d * v * v).sum::<f64>();
                -diffusion - reaction
            })
            .collect();
        let m = bundle.m();
        let bound = trace_bound(&self.params, &self.geometry, m as f64).ok();
        let spectral = (self.laplacian_eigs.len() >= m && m > 0)
            .then(|| self.params.c_mu().ok())
            .flatten()
            .map(|c_mu| {
                -self.params.nu * c_mu * self.laplacian_eigs[..m].iter().sum::<f64>() + self.kappa * m as f64
            });
        TraceRecord {
            time: base.time,
            m,
            measured: modes.iter().sum(),
            bound,
            spectral,
            modes,
            log_volume: bundle.log_volume,
        }
    }
}

/// `C (dt rate^2 + h^2 rate)` for a rate of magnitude `rate`.
pub fn tau_dyn(c: f64, dt: f64, h: f64, rate: f64) -> f64 {
    let r = rate.abs();
    c * (dt * r * r + h * h * r)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialData {
    Zero,
    /// Smooth random field with maximum modulus `amplitude`.
    Random { amplitude: f64, seed: u64 },
    /// `amplitude` times the `index`-th (1-based) discrete Laplacian mode,
    /// normalized in the weighted L2 norm.
    Mode { index: usize, amplitude: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BundleInit {
    Random,
    /// The lowest discrete Laplacian eigenmodes.
    Modes,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthConfig {
    pub m: usize,
    pub t_final: f64,
    pub dt: f64,
    pub reorth_interval: usize,
    /// Burn-in time; `None` means `10 / (nu lambda_1)`.
    pub burn_in: Option<f64>,
    pub initial: InitialData,
    pub bundle: BundleInit,
    pub bundle_seed: u64,
    /// Constant `C` in the dynamic tolerance.
    pub tau_c: f64,
}

impl GrowthConfig {
    pub fn new(m: usize, t_final: f64, dt: f64) -> Self {
        GrowthConfig {
            m,
            t_final,
            dt,
            reorth_interval: 10,
            burn_in: None,
            initial: InitialData::Zero,
            bundle: BundleInit::Random,
            bundle_seed: 1,
            tau_c: 3.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidParameter("bundle size m must be >= 1".into()));
        }
        if !(self.t_final > 0.0) {
            return Err(Error::InvalidParameter(format!("T must be > 0, got {}", self.t_final)));
        }
        if self.reorth_interval == 0 {
            return Err(Error::InvalidParameter("reorthonormalization interval must be >= 1".into()));
        }
        if let Some(b) = self.burn_in {
            if !(b >= 0.0) {
                return Err(Error::InvalidParameter(format!("burn-in must be >= 0, got {b}")));
            }
        }
        if !(self.tau_c >= 0.0) {
            return Err(Error::InvalidParameter("tolerance constant must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthSummary {
    pub m: usize,
    pub dt: f64,
    pub h: f64,
    pub burn_in: f64,
    pub window: f64,
    pub steps: usize,
    /// `(log-volume increment) / window`.
    pub growth_rate: f64,
    /// Per-direction rates `log_r[i] / window`, largest first in practice.
    pub exponents: Vec<f64>,
    /// Trapezoidal time average of the measured trace.
    pub mean_trace: f64,
    pub mean_bound: Option<f64>,
    pub tau_dyn: f64,
    /// `|growth_rate - mean_trace| <= tau_dyn`.
    pub identity_holds: bool,
    /// Largest `measured - bound` over samples.
    pub max_excess: Option<f64>,
    /// `measured <= bound + tau_dyn` at every sample.
    pub bound_holds: Option<bool>,
    pub initial: InitialData,
    pub bundle_seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthExperiment {
    pub records: Vec<TraceRecord>,
    pub summary: GrowthSummary,
}

impl GrowthExperiment {
    pub fn time_series_csv(&self) -> String {
        let mut out = format!("{CSV_SCHEMA}\nt,m,measured_trace,analytic_bound,log_volume\n");
        for r in &self.records {
            let bound = r.bound.map(|b| format!("{b:.12e}")).unwrap_or_default();
            out.push_str(&format!(
                "{:.10e},{},{:.12e},{},{:.12e}\n",
                r.time, r.m, r.measured, bound, r.log_volume
            ));
        }
        out
    }

    pub fn summary_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.summary)?)
    }
}

fn initial_state(dom: &GridDomain, init: &InitialData) -> Result<Vec<f64>> {
    Ok(match *init {
        InitialData::Zero => vec![0.0; dom.len()],
        InitialData::Random { amplitude, seed } => smooth_random_field(dom, amplitude, seed)?,
        InitialData::Mode { index, amplitude } => {
            if index == 0 {
                return Err(Error::InvalidParameter("mode index is 1-based".into()));
            }
            let lap = assemble(dom, PotentialKind::None, 1.0)?;
            let pairs = lowest_eigenpairs(&lap, index, &EigenOptions::new(1e-9))?;
            let scale = amplitude / dom.cell_volume().sqrt();
            pairs.vectors[index - 1].iter().map(|v| v * scale).collect()
        }
    })
}

fn initial_bundle(dom: &GridDomain, cfg: &GrowthConfig) -> Result<TangentBundle> {
    let fields = match cfg.bundle {
        BundleInit::Random => (0..cfg.m)
            .map(|i| smooth_random_field(dom, 1.0, cfg.bundle_seed.wrapping_add(i as u64 * 7919)))
            .collect::<Result<Vec<_>>>()?,
        BundleInit::Modes => {
            let lap = assemble(dom, PotentialKind::None, 1.0)?;
            lowest_eigenpairs(&lap, cfg.m, &EigenOptions::new(1e-9))?.vectors
        }
    };
    let mut bundle = TangentBundle::new(fields);
    reorthonormalize(&mut bundle, dom.cell_volume())?;
    bundle.reset_accumulators();
    Ok(bundle)
}

/// Default burn-in `10 / (nu lambda_1)`.
pub fn default_burn_in(dom: &GridDomain, nu: f64) -> Result<f64> {
    let lap = assemble(dom, PotentialKind::None, 1.0)?;
    let l1 = lowest_eigenvalues(&lap, 1, 1e-8)?.eigenvalues[0];
    Ok(10.0 / (nu * l1))
}

/// Evolve a trajectory and an `m`-dimensional tangent bundle: burn in, then
/// measure log-volume growth and the trace over `[0, t_final]`.
pub fn volume_growth_experiment(
    params: &ProblemParams,
    dom: &GridDomain,
    cfg: &GrowthConfig,
) -> Result<GrowthExperiment> {
    cfg.validate()?;
    let flow = Flow::new(dom, params, cfg.dt)?;
    let burn_in = match cfg.burn_in {
        Some(b) => b,
        None => default_burn_in(dom, params.nu)?,
    };
    let mut state = FieldState::new(initial_state(dom, &cfg.initial)?);
    let mut bundle = initial_bundle(dom, cfg)?;
    let w = flow.weight();

    let burn_steps = (burn_in / cfg.dt).round() as usize;
    for k in 0..burn_steps {
        flow.tangent_step(&mut bundle, &state)?;
        state = flow.step(&state)?;
        if (k + 1) % cfg.reorth_interval == 0 {
            reorthonormalize(&mut bundle, w)?;
        }
    }
    reorthonormalize(&mut bundle, w)?;
    bundle.reset_accumulators();
    let t0 = state.time;

    let steps = ((cfg.t_final / cfg.dt).round() as usize).max(1);
    let mut records = Vec::new();
    let mut sample = |bundle: &TangentBundle, state: &FieldState| {
        let mut r = flow.measured_trace(bundle, state);
        r.time = state.time - t0;
        records.push(r);
    };
    sample(&bundle, &state);
    for k in 0..steps {
        flow.tangent_step(&mut bundle, &state)?;
        state = flow.step(&state)?;
        if (k + 1) % cfg.reorth_interval == 0 || k + 1 == steps {
            reorthonormalize(&mut bundle, w)?;
            sample(&bundle, &state);
        }
    }
    let window = state.time - t0;
    let growth_rate = bundle.log_volume / window;
    let exponents = bundle.log_r.iter().map(|l| l / window).collect();
    let mean = |get: &dyn Fn(&TraceRecord) -> f64| -> f64 {
        records
            .windows(2)
            .map(|p| 0.5 * (get(&p[0]) + get(&p[1])) * (p[1].time - p[0].time))
            .sum::<f64>()
            / window
    };
    let mean_trace = mean(&|r| r.measured);
    let has_bound = records.iter().all(|r| r.bound.is_some());
    let mean_bound = has_bound.then(|| mean(&|r| r.bound.unwrap()));
    let tau = tau_dyn(cfg.tau_c, cfg.dt, dom.h(), growth_rate.abs().max(mean_trace.abs()));
    let max_excess = has_bound.then(|| {
        records
            .iter()
            .map(|r| r.measured - r.bound.unwrap())
            .fold(f64::NEG_INFINITY, f64::max)
    });
    let summary = GrowthSummary {
        m: cfg.m,
        dt: cfg.dt,
        h: dom.h(),
        burn_in,
        window,
        steps,
        growth_rate,
        exponents,
        mean_trace,
        mean_bound,
        tau_dyn: tau,
        identity_holds: (growth_rate - mean_trace).abs() <= tau,
        max_excess,
        bound_holds: has_bound.then(|| {
            records.iter().all(|r| {
                let b = r.bound.unwrap();
                r.measured <= b + tau_dyn(cfg.tau_c, cfg.dt, dom.h(), b.abs().max(r.measured.abs()))
            })
        }),
        initial: cfg.initial.clone(),
        bundle_seed: cfg.bundle_seed,
    };
    Ok(GrowthExperiment { records, summary })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    /// Smallest `m <= m_max` whose worst-case growth rate is negative.
    pub smallest_m: Option<usize>,
    /// `worst_rates[m-1]`: max over seeds of the `m`-volume growth rate.
    pub worst_rates: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Per-direction rates for each seed.
    pub exponents: Vec<Vec<f64>>,
    /// `ceil(d0)` (or 1 in the small-dimension regime) when the bound applies.
    pub bound_cap: Option<f64>,
    pub within_bound: Option<bool>,
}

/// Run one experiment per seed with `m_max` tangent fields (random initial
/// data and bundle from the seed); the `m`-volume rate is the sum of the
/// first `m` per-direction rates.
pub fn numeric_dimension_estimate(
    params: &ProblemParams,
    dom: &GridDomain,
    m_max: usize,
    seeds: &[u64],
    template: &GrowthConfig,
) -> Result<DimensionEstimate> {
    if m_max == 0 || seeds.is_empty() {
        return Err(Error::InvalidParameter("need m_max >= 1 and at least one seed".into()));
    }
    let mut worst = vec![f64::NEG_INFINITY; m_max];
    let mut exponents = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let mut cfg = template.clone();
        cfg.m = m_max;
        cfg.bundle_seed = seed;
        if let InitialData::Random { amplitude, .. } = cfg.initial {
            cfg.initial = InitialData::Random { amplitude, seed };
        }
        let run = volume_growth_experiment(params, dom, &cfg)?;
        let mut acc = 0.0;
        for (m, e) in run.summary.exponents.iter().enumerate() {
            acc += e;
            worst[m] = worst[m].max(acc);
        }
        exponents.push(run.summary.exponents);
    }
    let smallest_m = worst.iter().position(|r| *r < 0.0).map(|i| i + 1);
    let bound_cap = dimension_bound(params, &dom.geometry()?).ok().map(|r| match r.regime {
        Regime::AtMostOne => 1.0,
        Regime::AtMostD0 => r.d0.ceil().max(1.0),
    });
    let within_bound = match (smallest_m, bound_cap) {
        (Some(m), Some(cap)) => Some(m as f64 <= cap),
        (None, Some(cap)) => (m_max as f64 >= cap).then_some(false),
        _ => None,
    };
    Ok(DimensionEstimate {
        smallest_m,
        worst_rates: worst,
        seeds: seeds.to_vec(),
        exponents,
        bound_cap,
        within_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{discretize, DomainSpec};
    use crate::spectral::SingularKind;

    fn heat(dim: usize, nu: f64) -> ProblemParams {
        ProblemParams::new(dim, nu, Nonlinearity::zero())
    }

    #[test]
    fn heat_decay_of_ground_mode() {
        let dom = discretize(&DomainSpec::unit_square(1.0 / 32.0)).unwrap();
        let p = heat(2, 0.5);
        let flow = Flow::new(&dom, &p, 1e-3).unwrap();
        let phi0 = initial_state(&dom, &InitialData::Mode { index: 1, amplitude: 1.0 }).unwrap();
        assert!((flow.norm(&phi0) - 1.0).abs() < 1e-12);
        let lap = assemble(&dom, PotentialKind::None, 1.0).unwrap();
        let l1 = lowest_eigenvalues(&lap, 1, 1e-10).unwrap().eigenvalues[0];
        let mut s = FieldState::new(phi0);
        for _ in 0..100 {
            s = flow.step(&s).unwrap();
        }
        let ratio = flow.norm(&s.values);
        let exact = (-0.5 * l1 * s.time).exp();
        assert!((ratio / exact - 1.0).abs() < 0.02, "{ratio} vs {exact}");
    }

    #[test]
    fn zero_is_an_equilibrium() {
        let dom = discretize(&DomainSpec::unit_square(1.0 / 16.0)).unwrap();
        let p = ProblemParams::new(2, 0.1, Nonlinearity::allen_cahn());
        let flow = Flow::new(&dom, &p, 0.01).unwrap();
        let mut s = FieldState::new(vec![0.0; dom.len()]);
        for _ in 0..10 {
            s = flow.step(&s).unwrap();
        }
        assert!(s.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn allen_cahn_saturates() {
        let dom = discretize(&DomainSpec::unit_square(1.0 / 32.0)).unwrap();
        let p = ProblemParams::new(2, 1e-3, Nonlinearity::allen_cahn());
        let flow = Flow::new(&dom, &p, 0.05).unwrap();
        let init: Vec<f64> = smooth_random_field(&dom, 0.2, 3).unwrap().iter().map(|v| 0.3 + v).collect();
        let mut s = FieldState::new(init);
        for _ in 0..200 {
            s = flow.step(&s).unwrap();
        }
        let d = dom.distance_field();
        for (v, di) in s.values.iter().zip(d) {
            if *di > 0.2 {
                assert!((v - 1.0).abs() < 0.05, "{v}");
            }
        }
    }

    #[test]
    fn time_step_cap() {
        let dom = discretize(&DomainSpec::unit_square(1.0 / 8.0)).unwrap();
        let f = Nonlinearity::new(vec![-4.0, 0.0, 1.0]).unwrap();
        let p = ProblemParams::new(2, 1.0, f);
        assert!(Flow::new(&dom, &p, 0.03).is_err());
        assert!(Flow::new(&dom, &p, 0.025).is_ok());
    }

    #[test]
    fn tangent_linearity_and_reaction_factor() {
        let dom = discretize(&DomainSpec::unit_square(1.0 / 16.0)).unwrap();
        let base = FieldState::new(vec![0.0; dom.len()]);
        let mut zero = TangentBundle::new(vec![vec![0.0; dom.len()]]);
        let p = ProblemParams::new(2, 0.3, Nonlinearity::allen_cahn());
        let flow = Flow::new(&dom, &p, 1e-3).unwrap();
        flow.tangent_step(&mut zero, &base).unwrap();
        assert!(zero.fields[0].iter().all(|v| *v == 0.0));

        // f'(0) = -1: compared with the heat flow the field grows by 1 + dt.
        let heat_flow = Flow::new(&dom, &heat(2, 0.3), 1e-3).unwrap();
        let e = initial_state(&dom, &InitialData::Mode { index: 1, amplitude: 1.0 }).unwrap();
        let mut a = TangentBundle::new(vec![e.clone()]);
        let mut b = TangentBundle::new(vec![e]);
        flow.tangent_step(&mut a, &base).unwrap();
        heat_flow.tangent_step(&mut b, &base).unwrap();
        let r = flow.norm(&a.fields[0]) / flow.norm(&b.fields[0]);
        assert!((r - (1.0 + 1e-3)).abs() < 1e-9, "{r}");
    }

    #[test]
    fn reorthonormalization_examples() {
        let dom = discretize(&DomainSpec::unit_square(1.0 / 16.0)).unwrap();
        let w = dom.cell_volume();
        let fields: Vec<Vec<f64>> = (0..3).map(|i| smooth_random_field(&dom, 1.0, i).unwrap()).collect();
        let gram = nalgebra::DMatrix::from_fn(3, 3, |i, j| w * dot(&fields[i], &fields[j]));
        let mut b = TangentBundle::new(fields);
        let inc = reorthonormalize(&mut b, w).unwrap();
        assert!((inc - 0.5 * gram.determinant().ln()).abs() < 1e-8);
        for i in 0..3 {
            for j in 0..3 {
                let g = w * dot(&b.fields[i], &b.fields[j]);
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g - want).abs() < 1e-10);
            }
        }
        assert!(reorthonormalize(&mut b, w).unwrap().abs() < 1e-12);
        b.fields.iter_mut().for_each(|f| f.iter_mut().for_each(|v| *v *= 2.0));
        assert!((reorthonormalize(&mut b, w).unwrap() - 3.0 * 2f64.ln()).abs() < 1e-12);
        let mut dup = TangentBundle::new(vec![b.fields[0].clone(), vec![0.0; dom.len()]]);
        assert!(matches!(reorthonormalize(&mut dup, w), Err(Error::RankDeficient { index: 1, .. })));
    }

    #[test]
    fn trace_of_laplacian_modes() {
        let dom = discretize(&DomainSpec::unit_square(1.0 / 32.0)).unwrap();
        let nu = 0.7;
        let flow = Flow::new(&dom, &heat(2, nu), 1e-3).unwrap();
        let lap = assemble(&dom, PotentialKind::None, 1.0).unwrap();
        let pairs = lowest_eigenpairs(&lap, 3, &EigenOptions::new(1e-10)).unwrap();
        let mut b = TangentBundle::new(pairs.vectors.clone());
        reorthonormalize(&mut b, flow.weight()).unwrap();
        let base = FieldState::new(vec![0.0; dom.len()]);
        let rec = flow.measured_trace(&b, &base);
        let want = -nu * pairs.spectrum.eigenvalues.iter().sum::<f64>();
        assert!((rec.measured - want).abs() < 1e-7 * want.abs());

        // constant f' = -1 adds exactly m
        let ac = Flow::new(&dom, &ProblemParams::new(2, nu, Nonlinearity::allen_cahn()), 1e-3).unwrap();
        let rec2 = ac.measured_trace(&b, &base);
        assert!((rec2.measured - (want + 3.0)).abs() < 1e-9);
    }

    #[test]
    fn heat_growth_rate() {
        let dom = discretize(&DomainSpec::unit_square(1.0 / 16.0)).unwrap();
        let p = heat(2, 1.0);
        let mut cfg = GrowthConfig::new(2, 0.05, 1e-4);
        cfg.burn_in = Some(0.2);
        let run = volume_growth_experiment(&p, &dom, &cfg).unwrap();
        let lap = assemble(&dom, PotentialKind::None, 1.0).unwrap();
        let l = lowest_eigenvalues(&lap, 2, 1e-10).unwrap().eigenvalues;
        let want = -(l[0] + l[1]);
        assert!((run.summary.growth_rate / want - 1.0).abs() < 0.03);
        assert!((run.summary.growth_rate / run.summary.mean_trace - 1.0).abs() < 0.01);
        assert!(run.summary.identity_holds);
        assert_eq!(run.summary.bound_holds, Some(true));
        let csv = run.time_series_csv();
        assert!(csv.starts_with("# schema=1\nt,m,measured_trace,analytic_bound,log_volume\n"));
    }

    #[test]
    fn equilibrium_instability_matches_spectrum() {
        let dom = discretize(&DomainSpec::unit_square(1.0 / 16.0)).unwrap();
        let lap = assemble(&dom, PotentialKind::None, 1.0).unwrap();
        let l1 = lowest_eigenvalues(&lap, 1, 1e-10).unwrap().eigenvalues[0];
        for nu in [0.5 / l1, 2.0 / l1] {
            let p = ProblemParams::new(2, nu, Nonlinearity::allen_cahn());
            let mut cfg = GrowthConfig::new(1, 1.0, 0.01);
            cfg.burn_in = Some(1.0);
            let run = volume_growth_experiment(&p, &dom, &cfg).unwrap();
            assert_eq!(run.summary.growth_rate > 0.0, nu * l1 < 1.0);
        }
    }

    #[test]
    fn singular_flow_and_dimension_estimate() {
        let dom = discretize(&DomainSpec::unit_cube(1.0 / 8.0).centered()).unwrap();
        let p = ProblemParams::new(3, 0.2, Nonlinearity::allen_cahn())
            .with_potential(SingularKind::InverseSquare, 0.2 * 0.1);
        let mut cfg = GrowthConfig::new(2, 0.2, 0.01);
        cfg.burn_in = Some(0.5);
        cfg.initial = InitialData::Random { amplitude: 0.5, seed: 4 };
        let run = volume_growth_experiment(&p, &dom, &cfg).unwrap();
        assert_eq!(run.summary.bound_holds, Some(true));

        let heat = heat(3, 1.0);
        let est = numeric_dimension_estimate(&heat, &dom, 2, &[1, 2], &cfg).unwrap();
        assert_eq!(est.smallest_m, Some(1));
    }

    #[test]
    fn deterministic_runs() {
        let dom = discretize(&DomainSpec::unit_square(1.0 / 16.0)).unwrap();
        let p = ProblemParams::new(2, 0.05, Nonlinearity::allen_cahn());
        let mut cfg = GrowthConfig::new(3, 0.2, 0.01);
        cfg.burn_in = Some(0.5);
        cfg.initial = InitialData::Random { amplitude: 0.5, seed: 9 };
        let a = volume_growth_experiment(&p, &dom, &cfg).unwrap();
        let b = volume_growth_experiment(&p, &dom, &cfg).unwrap();
        assert_eq!(a.time_series_csv(), b.time_series_csv());
        assert_eq!(a.summary_json().unwrap(), b.summary_json().unwrap());
    }
}
