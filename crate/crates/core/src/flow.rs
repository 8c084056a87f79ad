//! Adaptive integration of real flows `Re(μX)` of complex vector fields in
//! one variable, with event detection and Fatou-coordinate path integrals.
//!
//! The stepper is an embedded Dormand–Prince 5(4) pair with the classical
//! quartic dense output; events are localised by bisection on the
//! interpolant. Fatou increments are accumulated by independent quadrature
//! of `dw/field` along the realised path, so the unit-speed identity
//! `fatou_delta = μ · total_time` is a genuine consistency check on the
//! integration rather than a tautology.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

const PI: f64 = core::f64::consts::PI;

/// Hard limits and tolerances for one integration run.
#[derive(Clone, Copy, Debug)]
pub struct IntegrationBudget {
    pub max_time: f64,
    pub max_arc_length: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub min_step: f64,
}

impl Default for IntegrationBudget {
    fn default() -> Self {
        IntegrationBudget {
            max_time: 1.0e3,
            max_arc_length: 1.0e5,
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            min_step: 1e-14,
        }
    }
}

impl IntegrationBudget {
    pub fn with_max_time(mut self, t: f64) -> Self {
        self.max_time = t;
        self
    }

    pub fn with_tols(mut self, rel: f64, abs: f64) -> Self {
        self.rel_tol = rel;
        self.abs_tol = abs;
        self
    }
}

/// Requested stopping conditions, checked in listed priority order.
#[derive(Clone, Copy, Debug)]
pub enum EventSpec {
    /// Crossing of `|w| = radius`, outward (`true`) or inward.
    CrossRadius { radius: f64, outward: bool },
    /// First entry into the ball `|w - center| < radius`.
    EnterBall { id: usize, center: Complex64, radius: f64 },
    /// Oriented crossing of the line through `point` with normal `normal`,
    /// accepted only within `window` of `point` (Poincaré section).
    Section { id: usize, point: Complex64, normal: Complex64, window: f64 },
}

/// What stopped (or punctuated) the trajectory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EventKind {
    CrossRadius { radius: f64, outward: bool },
    EnterSingularBall { id: usize },
    SectionCross { id: usize },
    BudgetExhausted,
}

/// Adaptively sampled arc of a real flow.
#[derive(Clone, Debug)]
pub struct Trajectory {
    /// `(t, w)` at every accepted step, starting with the initial point.
    pub samples: Vec<(f64, Complex64)>,
    pub events: Vec<(f64, EventKind)>,
    pub total_time: f64,
    /// Independent quadrature of `∫ dw / field` along the realised arc.
    pub fatou_delta: Complex64,
    pub arc_length: f64,
}

impl Trajectory {
    pub fn end(&self) -> Complex64 {
        self.samples.last().map(|&(_, w)| w).unwrap_or_default()
    }

    pub fn start(&self) -> Complex64 {
        self.samples.first().map(|&(_, w)| w).unwrap_or_default()
    }

    pub fn stopped_by(&self) -> Option<EventKind> {
        self.events.last().map(|&(_, e)| e)
    }
}

// Dormand–Prince 5(4) tableau.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const C: [f64; 6] = [0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// One accepted step with its dense-output coefficients.
#[derive(Clone, Copy)]
struct DenseStep {
    t0: f64,
    h: f64,
    rcont: [Complex64; 5],
}

impl DenseStep {
    fn eval(&self, t: f64) -> Complex64 {
        let theta = ((t - self.t0) / self.h).clamp(0.0, 1.0);
        let theta1 = 1.0 - theta;
        self.rcont[0]
            + (self.rcont[1]
                + (self.rcont[2] + (self.rcont[3] + self.rcont[4] * theta1) * theta) * theta1)
                * theta
    }
}

struct Stepper<'a, F: Fn(f64, Complex64) -> Complex64> {
    rhs: &'a F,
    budget: IntegrationBudget,
}

impl<'a, F: Fn(f64, Complex64) -> Complex64> Stepper<'a, F> {
    /// One adaptive step from `(t, w)`, not exceeding `t_end`.
    fn step(
        &self,
        t: f64,
        w: Complex64,
        k1: Complex64,
        h_try: f64,
        t_end: f64,
    ) -> Result<(DenseStep, Complex64, Complex64, f64)> {
        let mut h = h_try.min(t_end - t).max(self.budget.min_step);
        loop {
            let mut k = [Complex64::default(); 7];
            k[0] = k1;
            for stage in 0..6 {
                let mut acc = Complex64::default();
                for (j, kj) in k.iter().enumerate().take(stage + 1) {
                    acc += *kj * A[stage][j];
                }
                k[stage + 1] = (self.rhs)(t + C[stage] * h, w + acc * h);
            }
            let w_new = w
                + (k[0] * A[5][0] + k[2] * A[5][2] + k[3] * A[5][3] + k[4] * A[5][4]
                    + k[5] * A[5][5])
                    * h;
            // k[6] is the FSAL stage: f at (t + h, w_new).
            let mut err_c = Complex64::default();
            for (j, kj) in k.iter().enumerate() {
                err_c += *kj * E[j];
            }
            err_c *= h;
            let scale = self.budget.abs_tol + self.budget.rel_tol * w.norm().max(w_new.norm());
            let err = err_c.norm() / scale;

            if err <= 1.0 {
                let ydiff = w_new - w;
                let bspl = k[0] * h - ydiff;
                let mut dk = Complex64::default();
                for (j, kj) in k.iter().enumerate() {
                    dk += *kj * D[j];
                }
                let rcont = [w, ydiff, bspl, ydiff - k[6] * h - bspl, dk * h];
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                let h_next = h * factor;
                return Ok((DenseStep { t0: t, h, rcont }, w_new, k[6], h_next));
            }
            let factor = (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            h *= factor;
            if h < self.budget.min_step {
                return Err(Error::StepUnderflow { t, step: h });
            }
        }
    }
}

#[derive(Clone, Copy)]
struct EventState {
    spec: EventSpec,
    armed: bool,
    prev_g: f64,
}

fn event_g(spec: &EventSpec, w: Complex64) -> f64 {
    match spec {
        EventSpec::CrossRadius { radius, .. } => w.norm() - radius,
        EventSpec::EnterBall { center, radius, .. } => (w - center).norm() - radius,
        EventSpec::Section { point, normal, .. } => (normal.conj() * (w - point)).re,
    }
}

fn armed_side(spec: &EventSpec, g: f64) -> bool {
    match spec {
        EventSpec::CrossRadius { outward: true, .. } => g < 0.0,
        EventSpec::CrossRadius { outward: false, .. } => g > 0.0,
        EventSpec::EnterBall { .. } => g > 0.0,
        EventSpec::Section { .. } => g < 0.0,
    }
}

fn event_fires(spec: &EventSpec, g_prev: f64, g_new: f64, w_new: Complex64) -> bool {
    match spec {
        EventSpec::CrossRadius { outward: true, .. } => g_prev < 0.0 && g_new >= 0.0,
        EventSpec::CrossRadius { outward: false, .. } => g_prev > 0.0 && g_new <= 0.0,
        EventSpec::EnterBall { .. } => g_prev > 0.0 && g_new <= 0.0,
        EventSpec::Section { point, window, .. } => {
            g_prev < 0.0 && g_new >= 0.0 && (w_new - point).norm() <= *window
        }
    }
}

fn event_kind(spec: &EventSpec) -> EventKind {
    match spec {
        EventSpec::CrossRadius { radius, outward } => {
            EventKind::CrossRadius { radius: *radius, outward: *outward }
        }
        EventSpec::EnterBall { id, .. } => EventKind::EnterSingularBall { id: *id },
        EventSpec::Section { id, .. } => EventKind::SectionCross { id: *id },
    }
}

/// Integrate `ẇ = μ · field(w)` from `w0` until the first requested event,
/// the time budget, or the arc-length budget. Fatou increments are
/// accumulated against the unrotated `field`.
pub fn integrate<F>(
    field: &F,
    mu: Complex64,
    w0: Complex64,
    budget: &IntegrationBudget,
    events: &[EventSpec],
) -> Result<Trajectory>
where
    F: Fn(Complex64) -> Complex64,
{
    let rhs = |_t: f64, w: Complex64| mu * field(w);
    let stepper = Stepper { rhs: &rhs, budget: *budget };

    let mut t = 0.0;
    let mut w = w0;
    let mut k1 = rhs(t, w);
    let mut h = initial_step(w0, k1, budget);

    let mut traj = Trajectory {
        samples: vec![(0.0, w0)],
        events: Vec::new(),
        total_time: 0.0,
        fatou_delta: Complex64::default(),
        arc_length: 0.0,
    };

    let mut states: Vec<EventState> = events
        .iter()
        .map(|spec| {
            let g = event_g(spec, w0);
            EventState { spec: *spec, armed: armed_side(spec, g), prev_g: g }
        })
        .collect();

    let max_samples = 4_000_000usize;
    loop {
        if t >= budget.max_time - 1e-15 * budget.max_time.abs().max(1.0) {
            traj.events.push((t, EventKind::BudgetExhausted));
            break;
        }
        let (dense, w_new, k_last, h_next) = stepper.step(t, w, k1, h, budget.max_time)?;
        let t_new = dense.t0 + dense.h;

        // Event scan over this step.
        let mut fired: Option<(f64, EventKind)> = None;
        for st in states.iter_mut() {
            let g_new = event_g(&st.spec, w_new);
            if !st.armed {
                st.armed = armed_side(&st.spec, g_new);
                st.prev_g = g_new;
                continue;
            }
            if event_fires(&st.spec, st.prev_g, g_new, w_new) {
                let t_loc = localize(&dense, &st.spec, st.prev_g, t, t_new);
                let candidate = (t_loc, event_kind(&st.spec));
                fired = match fired {
                    None => Some(candidate),
                    Some(best) if candidate.0 < best.0 - 1e-15 => Some(candidate),
                    Some(best) => Some(best),
                };
            }
            st.prev_g = g_new;
        }

        if let Some((t_ev, kind)) = fired {
            let w_ev = dense.eval(t_ev);
            traj.fatou_delta += fatou_step(field, &dense, t, t_ev);
            traj.arc_length += chord_length(&dense, t, t_ev);
            traj.samples.push((t_ev, w_ev));
            traj.events.push((t_ev, kind));
            traj.total_time = t_ev;
            return Ok(traj);
        }

        traj.fatou_delta += fatou_step(field, &dense, t, t_new);
        traj.arc_length += chord_length(&dense, t, t_new);
        t = t_new;
        w = w_new;
        k1 = k_last;
        h = h_next;
        traj.samples.push((t, w));
        traj.total_time = t;

        if traj.arc_length > budget.max_arc_length || traj.samples.len() > max_samples {
            traj.events.push((t, EventKind::BudgetExhausted));
            break;
        }
    }
    Ok(traj)
}

/// Integrate a non-autonomous complex ODE `ẇ = rhs(t, w)` from `t0` to `t1`
/// (the path-method s-flow). No events; returns the endpoint.
pub fn integrate_ode<F>(
    rhs: &F,
    t0: f64,
    t1: f64,
    w0: Complex64,
    budget: &IntegrationBudget,
) -> Result<Complex64>
where
    F: Fn(f64, Complex64) -> Complex64,
{
    if t1 <= t0 {
        return Ok(w0);
    }
    let stepper = Stepper { rhs, budget: *budget };
    let mut t = t0;
    let mut w = w0;
    let mut k1 = rhs(t, w);
    let mut h = (t1 - t0) * 0.05;
    while t < t1 - 1e-15 * t1.abs().max(1.0) {
        let (dense, w_new, k_last, h_next) = stepper.step(t, w, k1, h, t1)?;
        t = dense.t0 + dense.h;
        w = w_new;
        k1 = k_last;
        h = h_next;
    }
    Ok(w)
}

fn initial_step(w0: Complex64, k1: Complex64, budget: &IntegrationBudget) -> f64 {
    let scale = w0.norm().max(1.0);
    let rate = k1.norm().max(1e-10);
    (0.01 * scale / rate).min(budget.max_time * 0.1).max(budget.min_step * 10.0)
}

fn localize(dense: &DenseStep, spec: &EventSpec, g_lo: f64, t_lo0: f64, t_hi0: f64) -> f64 {
    let mut lo = t_lo0;
    let mut hi = t_hi0;
    let mut sign_lo = g_lo;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let g_mid = event_g(spec, dense.eval(mid));
        if (g_mid > 0.0) == (sign_lo > 0.0) {
            lo = mid;
            sign_lo = g_mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 * t_hi0.abs().max(1.0) {
            break;
        }
    }
    hi
}

/// Gauss–Legendre nodes (5-point) on [0, 1].
const GL_X: [f64; 5] = [
    0.046910077030668004,
    0.23076534494715845,
    0.5,
    0.7692346550528415,
    0.953089922969332,
];
const GL_W: [f64; 5] = [
    0.11846344252809454,
    0.23931433524968324,
    0.28444444444444444,
    0.23931433524968324,
    0.11846344252809454,
];

/// ∫ dw / field over one dense step, by chord subdivision of the interpolant.
fn fatou_step<F>(field: &F, dense: &DenseStep, t0: f64, t1: f64) -> Complex64
where
    F: Fn(Complex64) -> Complex64,
{
    let sub = 4;
    let mut acc = Complex64::default();
    let mut prev = dense.eval(t0);
    for i in 1..=sub {
        let ti = t0 + (t1 - t0) * i as f64 / sub as f64;
        let next = dense.eval(ti);
        acc += segment_quad(field, prev, next);
        prev = next;
    }
    acc
}

fn segment_quad<F>(field: &F, a: Complex64, b: Complex64) -> Complex64
where
    F: Fn(Complex64) -> Complex64,
{
    let dz = b - a;
    let mut acc = Complex64::default();
    for (x, wgt) in GL_X.iter().zip(GL_W.iter()) {
        let z = a + dz * *x;
        acc += field(z).finv() * *wgt;
    }
    acc * dz
}

fn chord_length(dense: &DenseStep, t0: f64, t1: f64) -> f64 {
    let sub = 4;
    let mut acc = 0.0;
    let mut prev = dense.eval(t0);
    for i in 1..=sub {
        let ti = t0 + (t1 - t0) * i as f64 / sub as f64;
        let next = dense.eval(ti);
        acc += (next - prev).norm();
        prev = next;
    }
    acc
}

/// Piece of a concrete integration path.
#[derive(Clone, Copy, Debug)]
pub enum PathPiece {
    Segment { from: Complex64, to: Complex64 },
    /// Circular arc `center + radius·e^{iθ}`, θ from `from_angle` to
    /// `to_angle` (traversed monotonically; may exceed 2π in magnitude).
    Arc { center: Complex64, radius: f64, from_angle: f64, to_angle: f64 },
}

/// Concrete path: a chain of segments and arcs.
#[derive(Clone, Debug, Default)]
pub struct PathSpec {
    pub pieces: Vec<PathPiece>,
}

impl PathSpec {
    pub fn polyline(points: &[Complex64]) -> Self {
        let pieces =
            points.windows(2).map(|p| PathPiece::Segment { from: p[0], to: p[1] }).collect();
        PathSpec { pieces }
    }

    pub fn push_segment(&mut self, from: Complex64, to: Complex64) {
        self.pieces.push(PathPiece::Segment { from, to });
    }

    pub fn push_arc(&mut self, center: Complex64, radius: f64, from_angle: f64, to_angle: f64) {
        self.pieces.push(PathPiece::Arc { center, radius, from_angle, to_angle });
    }

    pub fn start(&self) -> Option<Complex64> {
        self.pieces.first().map(piece_start)
    }

    pub fn end(&self) -> Option<Complex64> {
        self.pieces.last().map(piece_end)
    }

    /// Sampled points along the path (arcs discretised), for winding counts.
    pub fn sample(&self, per_piece: usize) -> Vec<Complex64> {
        let mut pts = Vec::new();
        for piece in &self.pieces {
            for i in 0..=per_piece {
                let s = i as f64 / per_piece as f64;
                pts.push(piece_point(piece, s));
            }
        }
        pts
    }

    /// Minimum distance from the sampled path to a point.
    pub fn distance_to(&self, z: Complex64, per_piece: usize) -> f64 {
        self.sample(per_piece).iter().fold(f64::INFINITY, |m, p| m.min((p - z).norm()))
    }
}

fn piece_start(p: &PathPiece) -> Complex64 {
    piece_point(p, 0.0)
}

fn piece_end(p: &PathPiece) -> Complex64 {
    piece_point(p, 1.0)
}

fn piece_point(p: &PathPiece, s: f64) -> Complex64 {
    match p {
        PathPiece::Segment { from, to } => from + (to - from) * s,
        PathPiece::Arc { center, radius, from_angle, to_angle } => {
            let theta = from_angle + (to_angle - from_angle) * s;
            center + Complex64::from_polar(*radius, theta)
        }
    }
}

/// Path integral `∫ dw / field` along the concrete path. The value is the
/// increment of the (multivalued) Fatou coordinate along that path; the
/// branch is determined by the path itself.
pub fn fatou_integral<F>(field: &F, path: &PathSpec) -> Complex64
where
    F: Fn(Complex64) -> Complex64,
{
    let mut acc = Complex64::default();
    for piece in &path.pieces {
        acc += adaptive_piece(field, piece, 0.0, 1.0, 24);
    }
    acc
}

/// As [`fatou_integral`], but rejects paths passing within `clearance` of
/// any listed pole.
pub fn fatou_integral_guarded<F>(
    field: &F,
    path: &PathSpec,
    poles: &[Complex64],
    clearance: f64,
) -> Result<Complex64>
where
    F: Fn(Complex64) -> Complex64,
{
    for pole in poles {
        let d = path.distance_to(*pole, 128);
        if d < clearance {
            return Err(Error::PoleTooClose { distance: d, clearance });
        }
    }
    Ok(fatou_integral(field, path))
}

fn piece_quad<F>(field: &F, piece: &PathPiece, s0: f64, s1: f64) -> Complex64
where
    F: Fn(Complex64) -> Complex64,
{
    match piece {
        PathPiece::Segment { .. } => {
            segment_quad(field, piece_point(piece, s0), piece_point(piece, s1))
        }
        PathPiece::Arc { center, radius, from_angle, to_angle } => {
            let th0 = from_angle + (to_angle - from_angle) * s0;
            let th1 = from_angle + (to_angle - from_angle) * s1;
            let mut acc = Complex64::default();
            for (x, wgt) in GL_X.iter().zip(GL_W.iter()) {
                let theta = th0 + (th1 - th0) * x;
                let offset = Complex64::from_polar(*radius, theta);
                // dz = i r e^{iθ} dθ
                acc += field(center + offset).finv() * offset * Complex64::new(0.0, 1.0) * *wgt;
            }
            acc * (th1 - th0)
        }
    }
}

fn adaptive_piece<F>(field: &F, piece: &PathPiece, s0: f64, s1: f64, depth: usize) -> Complex64
where
    F: Fn(Complex64) -> Complex64,
{
    let whole = piece_quad(field, piece, s0, s1);
    let mid = 0.5 * (s0 + s1);
    let left = piece_quad(field, piece, s0, mid);
    let right = piece_quad(field, piece, mid, s1);
    let sum = left + right;
    let err = (whole - sum).norm();
    if depth == 0 || err <= 1e-13 * sum.norm().max(1e-3) {
        sum
    } else {
        adaptive_piece(field, piece, s0, mid, depth - 1)
            + adaptive_piece(field, piece, mid, s1, depth - 1)
    }
}

/// Winding number of a closed polyline around `z`; `None` when the angle sum
/// is too far from an integer multiple of 2π (curve passes too close).
pub fn winding_number(curve: &[Complex64], z: Complex64) -> Option<i32> {
    if curve.len() < 3 {
        return None;
    }
    let mut total = 0.0;
    for i in 0..curve.len() {
        let a = curve[i] - z;
        let b = curve[(i + 1) % curve.len()] - z;
        if a.norm() < 1e-14 || b.norm() < 1e-14 {
            return None;
        }
        total += (b / a).arg();
    }
    let turns = total / (2.0 * PI);
    let rounded = turns.round();
    if (turns - rounded).abs() > 0.05 {
        return None;
    }
    Some(rounded as i32)
}

/// Outcome of the residue-formula verification on one crossing arc.
#[derive(Clone, Debug)]
pub struct ResidueFormulaReport {
    /// `∫_κ ω + 2πi Σ wind_k · Res_k − c`; its modulus is the check value.
    pub discrepancy: Complex64,
    /// Indices (into the supplied singularity list) enclosed by γ·κ⁻¹.
    pub enclosed: Vec<usize>,
    pub windings: Vec<i32>,
}

/// Verify `ψ₋(γ(c)) − 2πi Σ_{E₋} Res − ψ₊(γ(0)) = c` on a concrete crossing.
///
/// `crossing` is a trajectory arc from γ(0) to γ(c); `kappa` is the declared
/// boundary path from γ(0) to γ(c). The enclosed set E₋ is determined by the
/// winding numbers of the closed curve γ·κ⁻¹, with their signs folded into
/// the residue term, so either boundary orientation is accepted.
pub fn verify_residue_formula<F>(
    field: &F,
    crossing: &Trajectory,
    kappa: &PathSpec,
    singularities: &[(Complex64, Complex64)],
) -> Result<ResidueFormulaReport>
where
    F: Fn(Complex64) -> Complex64,
{
    let psi_kappa = fatou_integral(field, kappa);

    // Closed curve: trajectory forward, then κ backwards.
    let mut closed: Vec<Complex64> = crossing.samples.iter().map(|&(_, w)| w).collect();
    let mut back = kappa.sample(64);
    back.reverse();
    closed.extend(back);

    let mut windings = Vec::with_capacity(singularities.len());
    let mut enclosed = Vec::new();
    let mut residue_term = Complex64::default();
    for (k, &(loc, res)) in singularities.iter().enumerate() {
        let wind = winding_number(&closed, loc).ok_or(Error::WindingAmbiguous)?;
        if wind.abs() > 1 {
            return Err(Error::InconsistentEnclosure);
        }
        if wind != 0 {
            enclosed.push(k);
        }
        windings.push(wind);
        residue_term += res * wind as f64;
    }
    let two_pi_i = Complex64::new(0.0, 2.0 * PI);
    let discrepancy = psi_kappa + two_pi_i * residue_term - crossing.total_time;
    Ok(ResidueFormulaReport { discrepancy, enclosed, windings })
}
