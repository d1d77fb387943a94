//! Explicit time integration of the coupled system
//!
//! ```text
//! u_t = Lap u - div(u grad(chi v - xi w))
//! v_t = Lap v - f(u) v
//! 0   = Lap w - delta w + g(u)
//! ```
//!
//! `u` and `v` advance by forward Euler under an adaptive step bound; `w` is
//! re-solved from the new `u` after every step.

use thiserror::Error;

use crate::diagnostics::{self, DiagRecord};
use crate::elliptic::{self, EllipticError, SolverOptions};
use crate::grid::{self, div_u_grad_phi, laplacian_neumann, FaceAverage, GridError, GridSpec, ScalarField};
use crate::kinetics::{ModelParams, ParamError};

/// Steps shorter than this are treated as a numerical breakdown.
pub const MIN_DT: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum StepError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("elliptic solve failed: {0}")]
    Elliptic(#[from] EllipticError),
    #[error("non-finite value in `{0}`")]
    NonFinite(&'static str),
    #[error("time step {0:.3e} below the underflow limit")]
    DtUnderflow(f64),
    #[error("invalid run configuration: {0}")]
    Config(String),
}

/// How negative densities are prevented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PositivityMode {
    /// Central taxis fluxes; negative values are clipped to zero and audited.
    #[default]
    Clip,
    /// Upwind taxis fluxes, with clipping kept as a backstop.
    Upwind,
}

impl PositivityMode {
    fn face_average(self) -> FaceAverage {
        match self {
            PositivityMode::Clip => FaceAverage::Central,
            PositivityMode::Upwind => FaceAverage::Upwind,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepOptions {
    pub positivity: PositivityMode,
    pub elliptic: SolverOptions,
}

/// Everything one simulation needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub params: ModelParams,
    pub u0: ScalarField,
    pub v0: ScalarField,
    pub t_end: f64,
    pub dt_safety: f64,
    pub output_interval: f64,
    pub positivity: PositivityMode,
    pub blowup_factor: f64,
    pub p_diag: f64,
    pub elliptic: SolverOptions,
}

/// Default exponent of the monitored functional: 2 up to three dimensions,
/// `n/2 + 1/2` above.
pub fn default_p_diag(n: u32) -> f64 {
    if n <= 3 {
        2.0
    } else {
        f64::from(n) / 2.0 + 0.5
    }
}

impl RunConfig {
    /// Configuration with the default controls: safety 0.4, clipping,
    /// blow-up factor 1e3 and a single output interval spanning the run.
    pub fn new(params: ModelParams, u0: ScalarField, v0: ScalarField, t_end: f64) -> Self {
        Self {
            grid: u0.spec().clone(),
            p_diag: default_p_diag(params.n),
            params,
            u0,
            v0,
            t_end,
            dt_safety: 0.4,
            output_interval: t_end,
            positivity: PositivityMode::Clip,
            blowup_factor: 1e3,
            elliptic: SolverOptions::default(),
        }
    }

    pub fn step_options(&self) -> StepOptions {
        StepOptions {
            positivity: self.positivity,
            elliptic: self.elliptic,
        }
    }

    pub fn validate(&self) -> Result<(), StepError> {
        let bad = |msg: String| Err(StepError::Config(msg));
        self.params.validate()?;
        if self.u0.spec() != &self.grid || self.v0.spec() != &self.grid {
            return Err(GridError::SpecMismatch.into());
        }
        if self.u0.min() < 0.0 || self.v0.min() < 0.0 {
            return bad("initial data must be nonnegative".into());
        }
        if self.u0.max() <= 0.0 {
            return bad("u0 must not vanish identically".into());
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if !(self.dt_safety > 0.0 && self.dt_safety <= 1.0) {
            return bad(format!("dt_safety must lie in (0, 1], got {}", self.dt_safety));
        }
        if !(self.output_interval > 0.0 && self.output_interval.is_finite()) {
            return bad(format!(
                "output_interval must be positive, got {}",
                self.output_interval
            ));
        }
        if !(self.blowup_factor >= 1.0) {
            return bad(format!(
                "blowup_factor must be at least 1, got {}",
                self.blowup_factor
            ));
        }
        if !(self.p_diag > 1.0) {
            return bad(format!("p_diag must exceed 1, got {}", self.p_diag));
        }
        if !(self.elliptic.tol > 0.0) {
            return bad(format!("elliptic tolerance must be positive, got {}", self.elliptic.tol));
        }
        Ok(())
    }
}

/// Snapshot of the evolving system.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub u: ScalarField,
    pub v: ScalarField,
    pub w: ScalarField,
    pub t: f64,
    pub step: u64,
    /// Signed mass removed from `u` by clipping (sum of the clipped negative
    /// parts, so never positive); `mass(t) + clipped_mass` equals the initial mass.
    pub clipped_mass: f64,
    /// Same audit for `v`, which carries no conservation law.
    pub clipped_v: f64,
    pub dt_last: f64,
    pub w_residual: f64,
}

impl SimState {
    pub fn initial(config: &RunConfig) -> Result<Self, StepError> {
        config.validate()?;
        let source = production_field(&config.u0, &config.params);
        let sol = elliptic::solve_w(&source, config.params.delta, config.elliptic, None)?;
        Ok(Self {
            u: config.u0.clone(),
            v: config.v0.clone(),
            w: sol.w,
            t: 0.0,
            step: 0,
            clipped_mass: 0.0,
            clipped_v: 0.0,
            dt_last: 0.0,
            w_residual: sol.residual,
        })
    }
}

fn production_field(u: &ScalarField, params: &ModelParams) -> ScalarField {
    u.map(|s| params.production(s.max(0.0)))
}

/// `chi v - xi w`, the potential whose gradient drives the taxis flux.
fn taxis_potential(state: &SimState, params: &ModelParams) -> ScalarField {
    let vals = state
        .v
        .values()
        .iter()
        .zip(state.w.values())
        .map(|(v, w)| params.chi * v - params.xi * w)
        .collect();
    ScalarField::from_raw(state.u.spec(), vals)
}

/// Largest admissible explicit step.
///
/// The minimum of the diffusion bound `h^2 / (2 dim)`, the advective CFL
/// bound `h / max|grad(chi v - xi w)|` and the consumption bound
/// `1 / max f(u)`, scaled by `dt_safety`.
pub fn stable_dt(state: &SimState, params: &ModelParams, dt_safety: f64) -> Result<f64, StepError> {
    let spec = state.u.spec();
    let h_min = spec.min_spacing();
    let diffusion = h_min * h_min / (2.0 * spec.dim() as f64);

    let psi = taxis_potential(state, params);
    let mut advective = f64::INFINITY;
    for axis in 0..spec.dim() {
        let h = spec.spacing()[axis];
        let mut g_max: f64 = 0.0;
        spec.for_each_face(axis, |l, r| {
            g_max = g_max.max((psi.values()[r] - psi.values()[l]).abs() / h);
        });
        if g_max > 0.0 {
            advective = advective.min(h / g_max);
        }
    }

    let f_max = state
        .u
        .values()
        .iter()
        .fold(0.0_f64, |m, &s| m.max(params.consumption(s)));
    let reaction = if f_max > 0.0 { 1.0 / f_max } else { f64::INFINITY };

    let dt = dt_safety * diffusion.min(advective).min(reaction);
    if !(dt >= MIN_DT) {
        return Err(StepError::DtUnderflow(dt));
    }
    Ok(dt)
}

/// Source terms added to the `u` and `v` equations, sampled at the step's start time.
#[derive(Debug, Clone, Copy)]
pub struct Forcing<'a> {
    pub u: &'a ScalarField,
    pub v: &'a ScalarField,
}

/// One explicit step of length `dt`; the caller is responsible for `dt <= stable_dt`.
pub fn step(
    state: &SimState,
    params: &ModelParams,
    dt: f64,
    opts: &StepOptions,
) -> Result<SimState, StepError> {
    step_forced(state, params, dt, opts, None)
}

pub fn step_forced(
    state: &SimState,
    params: &ModelParams,
    dt: f64,
    opts: &StepOptions,
    forcing: Option<Forcing<'_>>,
) -> Result<SimState, StepError> {
    let spec = state.u.spec();
    let vol = spec.cell_volume();

    let psi = taxis_potential(state, params);
    let taxis = div_u_grad_phi(&state.u, &psi, opts.positivity.face_average())?;
    let lap_u = laplacian_neumann(&state.u);
    let lap_v = laplacian_neumann(&state.v);

    let mut u_new: Vec<f64> = state
        .u
        .values()
        .iter()
        .zip(lap_u.values())
        .zip(taxis.values())
        .map(|((u, l), t)| u + dt * (l - t))
        .collect();
    let mut v_new: Vec<f64> = state
        .u
        .values()
        .iter()
        .zip(state.v.values())
        .zip(lap_v.values())
        .map(|((&u, &v), l)| v + dt * (l - params.consumption(u.max(0.0)) * v))
        .collect();
    if let Some(src) = forcing {
        for (x, f) in u_new.iter_mut().zip(src.u.values()) {
            *x += dt * f;
        }
        for (x, f) in v_new.iter_mut().zip(src.v.values()) {
            *x += dt * f;
        }
    }

    if !u_new.iter().all(|x| x.is_finite()) {
        return Err(StepError::NonFinite("u"));
    }
    if !v_new.iter().all(|x| x.is_finite()) {
        return Err(StepError::NonFinite("v"));
    }
    let clipped_u = clip_negative(&mut u_new) * vol;
    let clipped_v = clip_negative(&mut v_new) * vol;

    let u = ScalarField::from_raw(spec, u_new);
    let v = ScalarField::from_raw(spec, v_new);
    let sol = elliptic::solve_w(
        &production_field(&u, params),
        params.delta,
        opts.elliptic,
        Some(&state.w),
    )?;
    if !sol.w.is_finite() {
        return Err(StepError::NonFinite("w"));
    }

    Ok(SimState {
        u,
        v,
        w: sol.w,
        t: state.t + dt,
        step: state.step + 1,
        clipped_mass: state.clipped_mass + clipped_u,
        clipped_v: state.clipped_v + clipped_v,
        dt_last: dt,
        w_residual: sol.residual,
    })
}

/// Zeroes negative entries and returns their (nonpositive) sum.
fn clip_negative(values: &mut [f64]) -> f64 {
    let mut removed = 0.0;
    for x in values.iter_mut().filter(|x| **x < 0.0) {
        removed += *x;
        *x = 0.0;
    }
    removed
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    Completed,
    /// `sup u` exceeded `blowup_factor * sup u0`.
    BlowupFlagged,
    Breakdown(String),
}

impl Termination {
    pub fn label(&self) -> &'static str {
        match self {
            Termination::Completed => "completed",
            Termination::BlowupFlagged => "blowup_flagged",
            Termination::Breakdown(_) => "breakdown",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub records: Vec<DiagRecord>,
    pub final_state: SimState,
    pub termination: Termination,
}

pub fn run(config: &RunConfig) -> Result<RunOutcome, StepError> {
    run_with(config, |_, _| {})
}

/// Runs to `t_end`, calling `observer` with every emitted record.
///
/// Records are emitted at `t = 0`, at each multiple of `output_interval`,
/// at `t_end`, and at the step that trips the blow-up flag. Steps are
/// shortened so that output times are hit exactly. Invalid configuration is
/// an error; numerical failures end the run with [`Termination::Breakdown`].
pub fn run_with(
    config: &RunConfig,
    mut observer: impl FnMut(&DiagRecord, &SimState),
) -> Result<RunOutcome, StepError> {
    let mut state = SimState::initial(config)?;
    let opts = config.step_options();
    let blowup_level = config.blowup_factor * grid::sup_norm(&config.u0);
    let mut records = Vec::new();
    let mut emit = |state: &SimState, records: &mut Vec<DiagRecord>| {
        let rec = diagnostics::record(state, config);
        observer(&rec, state);
        records.push(rec);
    };
    emit(&state, &mut records);

    let mut next_index: u64 = 1;
    let termination = loop {
        if state.t >= config.t_end {
            break Termination::Completed;
        }
        let next_output = next_index as f64 * config.output_interval;
        let target = if next_output >= config.t_end * (1.0 - 1e-12) {
            config.t_end
        } else {
            next_output
        };
        let mut dt = match stable_dt(&state, &config.params, config.dt_safety) {
            Ok(dt) => dt,
            Err(e) => break Termination::Breakdown(e.to_string()),
        };
        let remaining = target - state.t;
        let hit = dt >= remaining * (1.0 - 1e-10);
        if hit {
            dt = remaining;
        }
        state = match step(&state, &config.params, dt, &opts) {
            Ok(s) => s,
            Err(e) => break Termination::Breakdown(e.to_string()),
        };
        if hit {
            state.t = target;
            while (next_index as f64) * config.output_interval <= target * (1.0 + 1e-12) {
                next_index += 1;
            }
        }
        if grid::sup_norm(&state.u) > blowup_level {
            emit(&state, &mut records);
            break Termination::BlowupFlagged;
        }
        if hit {
            emit(&state, &mut records);
        }
    };

    Ok(RunOutcome {
        records,
        final_state: state,
        termination,
    })
}
