//! Time integration of the coupled semi-discrete system.
//!
//! One step applies, per species: explicit upwind advection, a
//! positivity-preserving Patankar update for the reaction terms, a
//! conservative implicit exchange for the sorption coupling, and a backward
//! Euler diffusion solve (conjugate gradients on the volume-weighted SPD
//! system). Every stage maps nonnegative states to nonnegative states, so
//! accepted steps never leave the orthant.
//!
//! The run loop adapts the step: halve on a failed linear solve or when the
//! relative sup-norm change of a step exceeds 10%, double after five
//! consecutive accepted steps (capped by the advective CFL bound and, for
//! occupancy-limited sorption models, by a free-site bound that keeps the
//! explicit occupancy factor from overshooting). Blow-up is detected by a
//! sup-norm threshold and the blow-up time estimated by extrapolating the
//! reciprocal sup-norm, which is exactly linear for a `1/(T-t)` profile.

use crate::fv::{
    assemble_advection, bulk_flux_weights, surface_flux_weights, Grid, SparseOperator, State,
    VelocityField,
};
use crate::model::{ReactionNetwork, SorptionModel, SpeciesSystem};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StepperError {
    #[error("linear solver did not converge within {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("configuration invalid: {0}")]
    BadConfig(String),
    #[error("system assembly failed: {0}")]
    Assembly(String),
    #[error("initial state must be componentwise nonnegative (minimum {0})")]
    NegativeInitialState(f64),
}

/// Step-control and solver parameters.
#[derive(Debug, Clone)]
pub struct StepperConfig {
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub cfl: f64,
    pub lin_tol: f64,
    pub max_lin_iter: usize,
    pub blowup_threshold: f64,
    pub positivity_tol: f64,
    /// Record norm rows every this many accepted steps.
    pub output_every: usize,
    /// Keep the full per-step state history (needed by replay checks).
    pub record_snapshots: bool,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            dt_init: 1e-3,
            dt_min: 1e-12,
            dt_max: 0.1,
            cfl: 0.5,
            lin_tol: 1e-12,
            max_lin_iter: 10_000,
            blowup_threshold: 1e6,
            positivity_tol: 1e-12,
            output_every: 10,
            record_snapshots: false,
        }
    }
}

impl StepperConfig {
    pub fn validate(&self) -> Result<(), StepperError> {
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt_init && self.dt_init <= self.dt_max) {
            return Err(StepperError::BadConfig(format!(
                "need 0 < dt_min <= dt_init <= dt_max, got ({}, {}, {})",
                self.dt_min, self.dt_init, self.dt_max
            )));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(StepperError::BadConfig(format!(
                "cfl must be in (0, 1], got {}",
                self.cfl
            )));
        }
        if !(self.blowup_threshold > 0.0) {
            return Err(StepperError::BadConfig(format!(
                "blowup threshold must be positive, got {}",
                self.blowup_threshold
            )));
        }
        if !(self.lin_tol > 0.0) || self.max_lin_iter == 0 {
            return Err(StepperError::BadConfig(
                "linear solver tolerance and iteration budget must be positive".into(),
            ));
        }
        if self.output_every == 0 {
            return Err(StepperError::BadConfig("output_every must be >= 1".into()));
        }
        Ok(())
    }
}

/// A symmetric positive definite linear operator for the implicit solves.
pub trait LinearOp {
    fn dim(&self) -> usize;
    fn apply_into(&self, x: &[f64], y: &mut [f64]);
}

impl LinearOp for SparseOperator {
    fn dim(&self) -> usize {
        self.dim()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        SparseOperator::apply_into(self, x, y)
    }
}

/// The backward Euler system `diag(mass) - dt * W` for symmetric flux
/// weights `W` in difference form; SPD for any `dt >= 0`.
pub struct ImplicitDiffusion<'a> {
    pub mass: &'a [f64],
    pub weights: &'a SparseOperator,
    pub dt: f64,
}

impl LinearOp for ImplicitDiffusion<'_> {
    fn dim(&self) -> usize {
        self.mass.len()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        self.weights.apply_into(x, y);
        for k in 0..x.len() {
            y[k] = self.mass[k] * x[k] - self.dt * y[k];
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Conjugate gradients with relative residual exit `||b - Ax|| <= tol ||b||`.
pub fn solve_spd(
    op: &impl LinearOp,
    rhs: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>, StepperError> {
    let n = op.dim();
    let norm_b = dot(rhs, rhs).sqrt();
    if norm_b == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mut x = match x0 {
        Some(g) => g.to_vec(),
        None => vec![0.0; n],
    };
    let mut r = vec![0.0; n];
    op.apply_into(&x, &mut r);
    for k in 0..n {
        r[k] = rhs[k] - r[k];
    }
    let mut rr = dot(&r, &r);
    if rr.sqrt() <= tol * norm_b {
        return Ok(x);
    }
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    for _ in 0..max_iter {
        op.apply_into(&p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        let rr_new = dot(&r, &r);
        if rr_new.sqrt() <= tol * norm_b {
            return Ok(x);
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for k in 0..n {
            p[k] = r[k] + beta * p[k];
        }
    }
    Err(StepperError::NonConvergence {
        iterations: max_iter,
        residual: rr.sqrt() / norm_b,
    })
}

/// The assembled coupled system: grid, physics, and the per-species
/// operators, immutable over a run.
pub struct System {
    pub grid: Grid,
    pub species: SpeciesSystem,
    pub sorption: Option<SorptionModel>,
    pub bulk_network: ReactionNetwork,
    pub surface_network: ReactionNetwork,
    pub velocity: VelocityField,
    advection: SparseOperator,
    bulk_weights: Vec<SparseOperator>,
    surf_weights: Vec<SparseOperator>,
    bulk_mass: Vec<f64>,
    surf_mass: Vec<f64>,
    /// Advective stability bound on dt (before the cfl factor); infinite
    /// for zero velocity.
    dt_advective: f64,
}

impl System {
    pub fn new(
        grid: Grid,
        species: SpeciesSystem,
        sorption: Option<SorptionModel>,
        bulk_network: ReactionNetwork,
        surface_network: ReactionNetwork,
        velocity: VelocityField,
    ) -> Result<Self, StepperError> {
        let n = species.n_species();
        for (label, got) in [
            ("bulk network", bulk_network.n_species()),
            ("surface network", surface_network.n_species()),
        ] {
            if got != n {
                return Err(StepperError::Assembly(format!(
                    "{label} has {got} species, system has {n}"
                )));
            }
        }
        if let Some(m) = &sorption {
            if m.n_species() != n {
                return Err(StepperError::Assembly(format!(
                    "sorption model has {} species, system has {n}",
                    m.n_species()
                )));
            }
        }
        let advection = assemble_advection(&grid, &velocity)
            .map_err(|e| StepperError::Assembly(e.to_string()))?;
        let rate = advection.max_rate();
        let dt_advective = if rate > 0.0 { 1.0 / rate } else { f64::INFINITY };
        let bulk_weights = species
            .d_bulk()
            .iter()
            .map(|&d| bulk_flux_weights(&grid, d))
            .collect();
        let surf_weights = species
            .d_surf()
            .iter()
            .map(|&d| surface_flux_weights(&grid, d))
            .collect();
        let bulk_mass = vec![grid.cell_volume(); grid.n_cells()];
        let surf_mass = grid.faces().iter().map(|f| f.area).collect();
        Ok(Self {
            grid,
            species,
            sorption,
            bulk_network,
            surface_network,
            velocity,
            advection,
            bulk_weights,
            surf_weights,
            bulk_mass,
            surf_mass,
            dt_advective,
        })
    }

    pub fn n_species(&self) -> usize {
        self.species.n_species()
    }

    pub fn advection_operator(&self) -> &SparseOperator {
        &self.advection
    }

    /// Explicit upwind advection stage: `field += dt * (A field)`.
    pub fn advect_in_place(&self, field: &mut [f64], dt: f64) {
        if self.advection.nnz() == 0 {
            return;
        }
        let mut rate = vec![0.0; field.len()];
        self.advection.apply_into(field, &mut rate);
        for (v, r) in field.iter_mut().zip(rate.iter()) {
            *v += dt * r;
        }
    }

    /// Backward Euler bulk diffusion solve for one species.
    pub fn solve_bulk_diffusion(
        &self,
        species: usize,
        field: &[f64],
        dt: f64,
        config: &StepperConfig,
    ) -> Result<Vec<f64>, StepperError> {
        let rhs: Vec<f64> = field
            .iter()
            .zip(self.bulk_mass.iter())
            .map(|(c, m)| m * c)
            .collect();
        let op = ImplicitDiffusion {
            mass: &self.bulk_mass,
            weights: &self.bulk_weights[species],
            dt,
        };
        solve_spd(&op, &rhs, Some(field), config.lin_tol, config.max_lin_iter)
    }

    /// Backward Euler surface diffusion solve for one species; the identity
    /// on a zero-dimensional surface.
    pub fn solve_surface_diffusion(
        &self,
        species: usize,
        field: &[f64],
        dt: f64,
        config: &StepperConfig,
    ) -> Result<Vec<f64>, StepperError> {
        if self.surf_weights[species].nnz() == 0 {
            return Ok(field.to_vec());
        }
        let rhs: Vec<f64> = field
            .iter()
            .zip(self.surf_mass.iter())
            .map(|(c, m)| m * c)
            .collect();
        let op = ImplicitDiffusion {
            mass: &self.surf_mass,
            weights: &self.surf_weights[species],
            dt,
        };
        solve_spd(&op, &rhs, Some(field), config.lin_tol, config.max_lin_iter)
    }

    /// Stability bound for the explicit sorption occupancy factor: keeps a
    /// step from driving the occupancy past its fixed point when the model
    /// has a finite site capacity. Infinite for Henry or without sorption.
    fn dt_sorption_bound(&self, state: &State) -> f64 {
        let model = match &self.sorption {
            Some(m) if m.variant().uses_occupancy() => m,
            _ => return f64::INFINITY,
        };
        let mut worst_rate: f64 = 0.0;
        for face in self.grid.faces() {
            let rate: f64 = (0..self.n_species())
                .map(|i| model.sigma()[i] * model.k_ad()[i] * state.c[i][face.cell])
                .sum();
            worst_rate = worst_rate.max(rate);
        }
        if worst_rate > 0.0 {
            0.9 * model.capacity() / worst_rate
        } else {
            f64::INFINITY
        }
    }
}

fn clamp_rounding_negatives(field: &mut [f64], threshold: f64) {
    for v in field.iter_mut() {
        if *v < 0.0 && *v >= -threshold {
            *v = 0.0;
        }
    }
}

/// Patankar update for mass-action reactions on one set of cells:
/// `c <- (c + dt P) / (1 + dt D / c_old)`, production explicit, destruction
/// damped through the denominator so the result stays nonnegative.
pub(crate) fn patankar_reactions(net: &ReactionNetwork, fields: &mut [Vec<f64>], dt: f64) {
    if net.is_empty() {
        return;
    }
    let n = net.n_species();
    let n_cells = fields[0].len();
    let mut local = vec![0.0; n];
    for k in 0..n_cells {
        for i in 0..n {
            local[i] = fields[i][k];
        }
        let (p, d) = net.production_destruction(&local);
        for i in 0..n {
            let c_old = local[i];
            let sink = if c_old > 0.0 { d[i] / c_old } else { 0.0 };
            fields[i][k] = (c_old + dt * p[i]) / (1.0 + dt * sink);
        }
    }
}

/// One IMEX step; `state.t` advances by `dt`. Errors only on linear-solver
/// failure (the caller halves `dt` and retries).
pub fn step(
    system: &System,
    state: &State,
    dt: f64,
    config: &StepperConfig,
) -> Result<State, StepperError> {
    let n = system.n_species();
    let grid = &system.grid;
    let vol = grid.cell_volume();
    let mut c = state.c.clone();
    let mut c_surf = state.c_surf.clone();

    // (1) explicit upwind advection in the bulk
    for field in c.iter_mut() {
        system.advect_in_place(field, dt);
    }

    // (2a) reactions, Patankar form, in both phases
    patankar_reactions(&system.bulk_network, &mut c, dt);
    patankar_reactions(&system.surface_network, &mut c_surf, dt);

    // (2b) sorption exchange: an implicit two-compartment solve per face and
    // species with the occupancy frozen at the stage input. Both sides are
    // updated from one transfer amount, so the exchange conserves mass and
    // preserves signs for any dt.
    if let Some(model) = &system.sorption {
        for (f, face) in grid.faces().iter().enumerate() {
            let theta = if model.variant().uses_occupancy() {
                let local: Vec<f64> = (0..n).map(|i| c_surf[i][f]).collect();
                model.occupancy(&local).unwrap_or(f64::NAN)
            } else {
                0.0
            };
            for i in 0..n {
                let b = c[i][face.cell];
                let s = c_surf[i][f];
                let phi = model.adsorption_factor(i, theta);
                let rate = model.k_ad()[i] * b * phi - model.k_de()[i] * s;
                let lambda = face.area * model.k_ad()[i] * phi / vol;
                let mu = model.k_de()[i];
                let delta = dt * face.area * rate / (1.0 + dt * lambda + dt * mu);
                c[i][face.cell] = b - delta / vol;
                c_surf[i][f] = s + delta / face.area;
            }
        }
        for field in c.iter_mut().chain(c_surf.iter_mut()) {
            clamp_rounding_negatives(field, 1e-15);
        }
    }

    // (3) implicit backward Euler diffusion, bulk and surface
    for i in 0..n {
        c[i] = system.solve_bulk_diffusion(i, &c[i], dt, config)?;
        let scale = c[i].iter().fold(1.0f64, |m, v| m.max(v.abs()));
        clamp_rounding_negatives(&mut c[i], 1e-13 * scale);
    }
    for i in 0..n {
        if system.surf_weights[i].nnz() == 0 {
            continue;
        }
        c_surf[i] = system.solve_surface_diffusion(i, &c_surf[i], dt, config)?;
        let scale = c_surf[i].iter().fold(1.0f64, |m, v| m.max(v.abs()));
        clamp_rounding_negatives(&mut c_surf[i], 1e-13 * scale);
    }

    Ok(State {
        t: state.t + dt,
        c,
        c_surf,
    })
}

/// Volume/area weighted norms of one species at one instant, plus its total
/// (bulk + surface) mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeciesNorms {
    pub l1_bulk: f64,
    pub l2_bulk: f64,
    pub linf_bulk: f64,
    pub l1_surf: f64,
    pub l2_surf: f64,
    pub linf_surf: f64,
    pub total_mass: f64,
}

pub fn species_norms(grid: &Grid, state: &State) -> Vec<SpeciesNorms> {
    let vol = grid.cell_volume();
    (0..state.n_species())
        .map(|i| {
            let bulk = &state.c[i];
            let surf = &state.c_surf[i];
            let l1_bulk: f64 = bulk.iter().map(|v| v.abs() * vol).sum();
            let l2_bulk: f64 = bulk.iter().map(|v| v * v * vol).sum::<f64>().sqrt();
            let linf_bulk = bulk.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let mut l1_surf = 0.0;
            let mut l2_surf = 0.0;
            let mut linf_surf = 0.0f64;
            for (v, face) in surf.iter().zip(grid.faces()) {
                l1_surf += v.abs() * face.area;
                l2_surf += v * v * face.area;
                linf_surf = linf_surf.max(v.abs());
            }
            let mass_bulk: f64 = bulk.iter().map(|v| v * vol).sum();
            let mass_surf: f64 = surf
                .iter()
                .zip(grid.faces())
                .map(|(v, f)| v * f.area)
                .sum();
            SpeciesNorms {
                l1_bulk,
                l2_bulk,
                linf_bulk,
                l1_surf,
                l2_surf: l2_surf.sqrt(),
                linf_surf,
                total_mass: mass_bulk + mass_surf,
            }
        })
        .collect()
}

/// Why a run stopped.
#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    ReachedEnd,
    Blowup {
        trigger_time: f64,
        estimate: Option<f64>,
    },
    DtUnderflow,
}

/// State at the start of one accepted step, for exact replays.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub t: f64,
    pub dt: f64,
    pub state: State,
}

/// Full record of a run: sampled norm rows, the sup-norm trace, the final
/// state, optional per-step snapshots, and the termination reason.
#[derive(Debug)]
pub struct RunResult {
    pub times: Vec<f64>,
    pub norms: Vec<Vec<SpeciesNorms>>,
    pub sup_trace: Vec<(f64, f64)>,
    pub final_state: State,
    pub termination: Termination,
    pub snapshots: Option<Vec<StepRecord>>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl RunResult {
    pub fn blowup(&self) -> Option<(f64, Option<f64>)> {
        match &self.termination {
            Termination::Blowup {
                trigger_time,
                estimate,
            } => Some((*trigger_time, *estimate)),
            _ => None,
        }
    }
}

/// Extrapolates the blow-up time from a sup-norm time series: least squares
/// on the reciprocal sup-norm over the last 8 qualifying samples (sup-norm
/// at least a tenth of the threshold, at least 3 of them); the estimate is
/// the root of the fitted line, reported only for a decreasing reciprocal.
pub fn estimate_blowup(trace: &[(f64, f64)], threshold: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = trace
        .iter()
        .filter(|(_, sup)| *sup >= threshold / 10.0 && *sup > 0.0)
        .map(|&(t, sup)| (t, 1.0 / sup))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let tail = &pts[pts.len().saturating_sub(8)..];
    let n = tail.len() as f64;
    let sx: f64 = tail.iter().map(|(t, _)| t).sum();
    let sy: f64 = tail.iter().map(|(_, y)| y).sum();
    let sxx: f64 = tail.iter().map(|(t, _)| t * t).sum();
    let sxy: f64 = tail.iter().map(|(t, y)| t * y).sum();
    let denom = n * sxx - sx * sx;
    if denom == 0.0 {
        return None;
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    if slope >= 0.0 {
        return None;
    }
    Some(-intercept / slope)
}

/// Integrates from `initial` to `t_end` with adaptive step control.
pub fn run(
    system: &System,
    initial: State,
    t_end: f64,
    config: &StepperConfig,
) -> Result<RunResult, StepperError> {
    config.validate()?;
    let min0 = initial.min_value();
    if min0 < 0.0 {
        return Err(StepperError::NegativeInitialState(min0));
    }

    let mut state = initial;
    let mut dt = config.dt_init.min(config.dt_max);
    let mut consecutive_accepts = 0usize;
    let mut accepted = 0usize;
    let mut rejected = 0usize;

    let mut times = vec![state.t];
    let mut norms = vec![species_norms(&system.grid, &state)];
    let mut sup_trace = vec![(state.t, state.sup_norm())];
    let mut snapshots: Option<Vec<StepRecord>> = config.record_snapshots.then(Vec::new);
    let mut last_recorded = state.t;

    let termination = loop {
        if state.t >= t_end {
            break Termination::ReachedEnd;
        }
        let dt_stable = (config.cfl * system.dt_advective).min(system.dt_sorption_bound(&state));
        let remaining = t_end - state.t;
        let landing = remaining <= dt.min(dt_stable);
        let dt_eff = dt.min(dt_stable).min(remaining);

        match step(system, &state, dt_eff, config) {
            Ok(next) => {
                let denom = state.sup_norm().max(1e-8);
                let change = max_field_change(&state, &next) / denom;
                if change > 0.10 && !landing {
                    // too large a step; retry with half
                    if dt_eff <= config.dt_min {
                        break Termination::DtUnderflow;
                    }
                    dt = (dt_eff * 0.5).max(config.dt_min);
                    consecutive_accepts = 0;
                    rejected += 1;
                    continue;
                }
                if let Some(snaps) = snapshots.as_mut() {
                    snaps.push(StepRecord {
                        t: state.t,
                        dt: dt_eff,
                        state: state.clone(),
                    });
                }
                state = next;
                accepted += 1;
                consecutive_accepts += 1;
                sup_trace.push((state.t, state.sup_norm()));
                if accepted % config.output_every == 0 {
                    times.push(state.t);
                    norms.push(species_norms(&system.grid, &state));
                    last_recorded = state.t;
                }
                if state.sup_norm() >= config.blowup_threshold {
                    break Termination::Blowup {
                        trigger_time: state.t,
                        estimate: estimate_blowup(&sup_trace, config.blowup_threshold),
                    };
                }
                if consecutive_accepts >= 5 {
                    dt = (dt * 2.0).min(config.dt_max);
                    consecutive_accepts = 0;
                }
            }
            Err(StepperError::NonConvergence { .. }) => {
                if dt_eff <= config.dt_min {
                    break Termination::DtUnderflow;
                }
                dt = (dt_eff * 0.5).max(config.dt_min);
                consecutive_accepts = 0;
                rejected += 1;
            }
            Err(other) => return Err(other),
        }
    };

    if state.t > last_recorded {
        times.push(state.t);
        norms.push(species_norms(&system.grid, &state));
    }

    Ok(RunResult {
        times,
        norms,
        sup_trace,
        final_state: state,
        termination,
        snapshots,
        accepted_steps: accepted,
        rejected_steps: rejected,
    })
}

fn max_field_change(old: &State, new: &State) -> f64 {
    let mut worst = 0.0f64;
    for (a, b) in old.c.iter().zip(new.c.iter()) {
        for (x, y) in a.iter().zip(b.iter()) {
            worst = worst.max((y - x).abs());
        }
    }
    for (a, b) in old.c_surf.iter().zip(new.c_surf.iter()) {
        for (x, y) in a.iter().zip(b.iter()) {
            worst = worst.max((y - x).abs());
        }
    }
    worst
}
