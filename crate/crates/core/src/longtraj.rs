//! Long Trajectory and Long Orbit experiments: the residue-formula length
//! `T_s(x) = ψ₋ − ψ₊ − 2πi Σ_{E₋(x)} Res + is`, β-curve tracing in the
//! parameter, integration/iteration along them, and the tracking checks.
//!
//! The ψ-gap is a concrete path integral along the declared boundary path κ
//! (radial segment, counterclockwise arc at the working radius, radial
//! segment), evaluated per fiber with the normalisation `ψ₊(x, y₊) = 0` —
//! so `T` is comparable at every sample against the time-of-flight oracle,
//! not only in the `x → 0` limit.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::flow::{
    fatou_integral, integrate, verify_residue_formula, IntegrationBudget, PathSpec, Trajectory,
};
use crate::unfolding::{BiPoly, FixedCurve, UnfoldingField};

const PI: f64 = core::f64::consts::PI;
const TWO_PI_I: Complex64 = Complex64 { re: 0.0, im: 2.0 * PI };

/// Base points in an attracting/repelling petal pair with the declared
/// boundary path κ between their radial projections.
#[derive(Clone, Debug)]
pub struct FatouPair {
    pub y_plus: Complex64,
    pub y_minus: Complex64,
    /// Radius of the κ arc (the working ε').
    pub eps_working: f64,
}

impl FatouPair {
    /// Validates that the base points sit in an attracting / repelling petal
    /// of the unperturbed field respectively.
    pub fn new(
        field: &UnfoldingField,
        y_plus: Complex64,
        y_minus: Complex64,
        eps_working: f64,
    ) -> Result<Self> {
        let petals = field.petals(eps_working);
        let in_petal = |y: Complex64, attracting: bool| {
            petals.iter().any(|p| {
                p.attracting == attracting
                    && wrap_to_pi(y.arg() - p.bisecting_angle).abs()
                        < PI / field.nu as f64 * 0.95
                    && y.norm() < eps_working
            })
        };
        if !in_petal(y_plus, true) {
            return Err(Error::InvalidInput("y_plus is not in an attracting petal"));
        }
        if !in_petal(y_minus, false) {
            return Err(Error::InvalidInput("y_minus is not in a repelling petal"));
        }
        Ok(FatouPair { y_plus, y_minus, eps_working })
    }

    /// κ: radial from y₊ out to the arc radius, counterclockwise arc to the
    /// radial projection of y₋, radial in to y₋.
    pub fn kappa_path(&self) -> PathSpec {
        let mut path = PathSpec::default();
        let a_plus = self.y_plus.arg();
        let mut a_minus = self.y_minus.arg();
        while a_minus <= a_plus {
            a_minus += 2.0 * PI;
        }
        let rim_plus = Complex64::from_polar(self.eps_working, a_plus);
        let rim_minus = Complex64::from_polar(self.eps_working, a_minus);
        path.push_segment(self.y_plus, rim_plus);
        path.push_arc(Complex64::default(), self.eps_working, a_plus, a_minus);
        path.push_segment(rim_minus, self.y_minus);
        path
    }

    /// `ψ₋(x, y₋) − ψ₊(x, y₊)` along κ on the fiber `x`, with the
    /// normalisation `ψ₊(x, y₊) = 0`.
    pub fn psi_gap(&self, field: &UnfoldingField, x: Complex64) -> Complex64 {
        let f = field.fiber_field(x);
        fatou_integral(&f, &self.kappa_path())
    }
}

/// A Long Trajectory experiment: base pair, enclosed curve ids and the
/// 𝒮-coordinate s.
#[derive(Clone, Debug)]
pub struct LongTrajectorySpec {
    pub pair: FatouPair,
    /// Curve ids whose residues enter the formula (the set E₋).
    pub e_minus: Vec<usize>,
    pub s: f64,
}

impl LongTrajectorySpec {
    pub fn new(
        field: &UnfoldingField,
        curves: &[FixedCurve],
        pair: FatouPair,
        e_minus: Vec<usize>,
        s: f64,
    ) -> Result<Self> {
        if e_minus.is_empty() {
            return Err(Error::InvalidInput("E₋ must be nonempty"));
        }
        if field.n_fiber > 1 && e_minus.len() >= curves.len() {
            return Err(Error::InvalidInput("E₋ must be a proper subset when N > 1"));
        }
        if e_minus.iter().any(|&id| id >= curves.len()) {
            return Err(Error::InvalidInput("unknown curve id in E₋"));
        }
        Ok(LongTrajectorySpec { pair, e_minus, s })
    }
}

/// Evaluable `x ↦ T_s(x)`, with continuation hints for the branch values.
pub struct ResidueT<'a> {
    pub field: &'a UnfoldingField,
    pub curves: &'a [FixedCurve],
    pub spec: &'a LongTrajectorySpec,
}

impl<'a> ResidueT<'a> {
    pub fn new(
        field: &'a UnfoldingField,
        curves: &'a [FixedCurve],
        spec: &'a LongTrajectorySpec,
    ) -> Self {
        ResidueT { field, curves, spec }
    }

    /// `T_s(x)` with branch continuation from the supplied hints (one per
    /// curve in E₋, updated in place).
    pub fn eval_with_hints(
        &self,
        x: Complex64,
        hints: &mut [Option<Complex64>],
    ) -> Result<Complex64> {
        let mut acc = self.spec.pair.psi_gap(self.field, x);
        for (slot, &id) in hints.iter_mut().zip(self.spec.e_minus.iter()) {
            let curve = &self.curves[id];
            let gamma = self.field.curve_value(curve, x, *slot)?;
            *slot = Some(gamma);
            let res = self.field.residue_at(curve, x, Some(gamma))?;
            acc -= TWO_PI_I * res;
        }
        Ok(acc + Complex64::new(0.0, self.spec.s))
    }

    pub fn eval(&self, x: Complex64) -> Result<Complex64> {
        let mut hints = vec![None; self.spec.e_minus.len()];
        self.eval_with_hints(x, &mut hints)
    }

    /// True when `|T|` grows as `|x| → 0` along the ray through `x_probe`
    /// (the residue sum keeps its pole). A degenerate E₋ whose residues
    /// cancel the pole produces a bounded T and no Long Trajectory.
    pub fn diverges(&self, x_probe: Complex64) -> bool {
        let shallow = self.eval(x_probe).map(|t| t.norm()).unwrap_or(0.0);
        let deep = self.eval(x_probe * 0.0625).map(|t| t.norm()).unwrap_or(0.0);
        deep > 2.0 * shallow && deep > 10.0
    }
}

/// Window for the β-curve tracer.
#[derive(Clone, Copy, Debug)]
pub struct BetaWindow {
    pub r_start: f64,
    pub r_min: f64,
    /// Seed hint: the tracer picks the level-set root closest to this angle
    /// on the starting circle.
    pub hint_angle: f64,
    pub max_steps: usize,
}

#[derive(Clone, Debug)]
pub struct BetaCurve {
    pub samples: Vec<Complex64>,
    /// `x/|x|` at the deepest sample reached.
    pub adhered_direction: Complex64,
    pub s: f64,
}

/// Trace `{x : Im T₀(x) = −s, Re T₀ > 0}` inward by predictor–corrector.
pub fn beta_curve(t_fn: &ResidueT<'_>, s: f64, window: &BetaWindow) -> Result<BetaCurve> {
    let mut hints = vec![None; t_fn.spec.e_minus.len()];
    // T_s already contains +is, so the level set is Im T_s = 0.
    let g = |x: Complex64, hints: &mut [Option<Complex64>]| -> Result<f64> {
        Ok(t_fn.eval_with_hints(x, hints)?.im)
    };

    // Scan the starting circle for sign changes of g.
    let n_scan = 256;
    let mut best_seed: Option<(f64, f64, f64)> = None; // (angle_lo, angle_hi, dist)
    let mut prev_angle = 0.0;
    let mut prev_g: Option<f64> = None;
    for i in 0..=n_scan {
        let angle = 2.0 * PI * i as f64 / n_scan as f64;
        let x = Complex64::from_polar(window.r_start, angle);
        let mut h = hints.clone();
        let Ok(gi) = g(x, &mut h) else {
            prev_g = None;
            prev_angle = angle;
            continue;
        };
        if let Some(gp) = prev_g {
            if gp.signum() != gi.signum() {
                let mid = 0.5 * (prev_angle + angle);
                let dist = wrap_to_pi(mid - window.hint_angle).abs();
                if best_seed.map(|(_, _, d)| dist < d).unwrap_or(true) {
                    best_seed = Some((prev_angle, angle, dist));
                }
            }
        }
        prev_g = Some(gi);
        prev_angle = angle;
    }
    let Some((mut lo, mut hi, _)) = best_seed else {
        return Err(Error::LevelSetLost);
    };
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let xm = Complex64::from_polar(window.r_start, mid);
        let mut h = hints.clone();
        let gm = g(xm, &mut h)?;
        let xl = Complex64::from_polar(window.r_start, lo);
        let mut hl = hints.clone();
        let gl = g(xl, &mut hl)?;
        if (gm > 0.0) == (gl > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = Complex64::from_polar(window.r_start, 0.5 * (lo + hi));

    let mut samples = vec![x];
    for _ in 0..window.max_steps {
        // Numerical complex derivative of the (locally holomorphic) T.
        let h = 1e-5 * x.norm();
        let mut h1 = hints.clone();
        let mut h2 = hints.clone();
        let tp = t_fn.eval_with_hints(x + h, &mut h1)?;
        let tm = t_fn.eval_with_hints(x - h, &mut h2)?;
        let deriv = (tp - tm) / (2.0 * h);
        if deriv.norm() == 0.0 {
            return Err(Error::LevelSetLost);
        }
        // grad(Im T) = i · conj(T'); tangent ⟂ gradient, aimed inward.
        let grad = Complex64::new(0.0, 1.0) * deriv.conj();
        let mut tangent = Complex64::new(0.0, 1.0) * grad / grad.norm();
        if (tangent.conj() * (-x)).re < 0.0 {
            tangent = -tangent;
        }
        let step = 0.08 * x.norm();
        let mut next = x + tangent * step;
        // Newton corrector back onto the level set.
        let mut ok = false;
        for _ in 0..8 {
            let mut hh = hints.clone();
            let gv = g(next, &mut hh)?;
            let mut hd1 = hints.clone();
            let mut hd2 = hints.clone();
            let hn = 1e-5 * next.norm();
            let dp = t_fn.eval_with_hints(next + hn, &mut hd1)?;
            let dm = t_fn.eval_with_hints(next - hn, &mut hd2)?;
            let der = (dp - dm) / (2.0 * hn);
            let gr = Complex64::new(0.0, 1.0) * der.conj();
            if gr.norm() == 0.0 {
                break;
            }
            next -= gr * (gv / gr.norm_sqr());
            if gv.abs() < 1e-10 * (1.0 + der.norm() * next.norm()) {
                ok = true;
                break;
            }
        }
        if !ok {
            let mut hh = hints.clone();
            if g(next, &mut hh)?.abs() > 1e-6 {
                return Err(Error::LevelSetLost);
            }
        }
        // Keep the continuation hints warm along the curve.
        let _ = t_fn.eval_with_hints(next, &mut hints)?;
        x = next;
        samples.push(x);
        if x.norm() < window.r_min {
            break;
        }
    }
    let adhered = x / x.norm();
    Ok(BetaCurve { samples, adhered_direction: adhered, s })
}

/// One row of a Long Trajectory run.
#[derive(Clone, Debug)]
pub struct LongTrajectoryRow {
    pub x: Complex64,
    /// Full residue-formula value `T_s(x)`.
    pub t_value: Complex64,
    /// Real flow time used.
    pub t_flow: f64,
    pub endpoint: Complex64,
    /// ℂ²-distance of `(x, endpoint)` to `(0, χ(is))`.
    pub endpoint_error: f64,
    /// Residue-formula discrepancy along the realised arc.
    pub residue_discrepancy: f64,
    /// max |y| over the middle window `[M, T−M]` of the arc.
    pub mid_max_abs_y: f64,
}

#[derive(Clone, Debug)]
pub struct LongTrajectoryReport {
    pub rows: Vec<LongTrajectoryRow>,
    /// `χ(is) = exp(isX₀)(y₋)`.
    pub limit_target: Complex64,
    pub s: f64,
    pub e_minus: Vec<usize>,
    /// Set when T stays bounded toward 0 (degenerate E₋: no Long Trajectory).
    pub non_diverging: bool,
}

/// Flow `exp(z X₀)` on the fiber `x = 0` for complex time `z`.
pub fn exp_fiber0(
    field: &UnfoldingField,
    z: Complex64,
    y0: Complex64,
    budget: &IntegrationBudget,
) -> Result<Complex64> {
    let f0 = field.fiber_field(Complex64::default());
    let mut y = y0;
    if z.re.abs() > 0.0 {
        let mu = Complex64::new(z.re.signum(), 0.0);
        let traj = integrate(&f0, mu, y, &budget.with_max_time(z.re.abs()), &[])?;
        y = traj.end();
    }
    if z.im.abs() > 0.0 {
        let mu = Complex64::new(0.0, z.im.signum());
        let traj = integrate(&f0, mu, y, &budget.with_max_time(z.im.abs()), &[])?;
        y = traj.end();
    }
    Ok(y)
}

/// Integrate `Re(X)` for time `Re T_s(x_n)` from `(x_n, y₊)` and compare the
/// endpoints against `χ(is)`.
pub fn run_long_trajectory(
    field: &UnfoldingField,
    curves: &[FixedCurve],
    spec: &LongTrajectorySpec,
    x_samples: &[Complex64],
    budget: &IntegrationBudget,
) -> Result<LongTrajectoryReport> {
    let t_fn = ResidueT::new(field, curves, spec);
    let chi = exp_fiber0(
        field,
        Complex64::new(0.0, spec.s),
        spec.pair.y_minus,
        budget,
    )?;
    let mut hints = vec![None; spec.e_minus.len()];
    let mut rows = Vec::with_capacity(x_samples.len());
    for &x in x_samples {
        let t_value = t_fn.eval_with_hints(x, &mut hints)?;
        let t_flow = t_value.re;
        if t_flow <= 0.0 {
            return Err(Error::InvalidInput("nonpositive flow time: sample off β?"));
        }
        let fiber = field.fiber_field(x);
        let traj = integrate(
            &fiber,
            Complex64::new(1.0, 0.0),
            spec.pair.y_plus,
            &budget.with_max_time(t_flow),
            &[],
        )?;
        let endpoint = traj.end();
        let endpoint_error =
            (x.norm_sqr() + (endpoint - chi).norm_sqr()).sqrt();

        let residue_discrepancy =
            crossing_discrepancy(field, curves, spec, x, &traj, &mut hints)?;

        // Middle-window confinement (Def. of weak Long Trajectories).
        let m_margin = 5.0;
        let mid_max_abs_y = traj
            .samples
            .iter()
            .filter(|(t, _)| *t >= m_margin && *t <= t_flow - m_margin)
            .fold(0.0f64, |m, (_, y)| m.max(y.norm()));

        rows.push(LongTrajectoryRow {
            x,
            t_value,
            t_flow,
            endpoint,
            endpoint_error,
            residue_discrepancy,
            mid_max_abs_y,
        });
    }
    let non_diverging = x_samples
        .first()
        .map(|&x0| !t_fn.diverges(x0))
        .unwrap_or(false);
    Ok(LongTrajectoryReport {
        rows,
        limit_target: chi,
        s: spec.s,
        e_minus: spec.e_minus.clone(),
        non_diverging,
    })
}

/// Residue-formula check on the realised arc: ψ-difference along κ extended
/// to the endpoint, minus 2πi Σ Res (by measured windings), minus the flow
/// time.
fn crossing_discrepancy(
    field: &UnfoldingField,
    curves: &[FixedCurve],
    spec: &LongTrajectorySpec,
    x: Complex64,
    traj: &Trajectory,
    hints: &mut [Option<Complex64>],
) -> Result<f64> {
    let fiber = field.fiber_field(x);
    let mut kappa = spec.pair.kappa_path();
    kappa.push_segment(spec.pair.y_minus, traj.end());
    let mut sing = Vec::new();
    for (slot, &id) in hints.iter_mut().zip(spec.e_minus.iter()) {
        let gamma = field.curve_value(&curves[id], x, *slot)?;
        *slot = Some(gamma);
        let res = field.residue_at(&curves[id], x, Some(gamma))?;
        sing.push((gamma, res));
    }
    // Include the complementary branches so their windings are checked too.
    for curve in curves {
        if !spec.e_minus.contains(&curve.id) {
            if let Ok(gamma) = field.curve_value(curve, x, None) {
                if let Ok(res) = field.residue_at(curve, x, Some(gamma)) {
                    sing.push((gamma, res));
                }
            }
        }
    }
    let report = verify_residue_formula(&fiber, traj, &kappa, &sing)?;
    Ok(report.discrepancy.norm())
}

/// Discrete dynamics `φ(x, y) = (x, exp(X)(y) + perturbation)`.
///
/// The perturbation must lie in the declared power of the ideal `(f)`; for a
/// true convergent normal form that power is 3 (`Δ_φ = O(f²)`), the tracking
/// benchmark uses order 2.
pub struct DiscreteMap<'a> {
    pub field: &'a UnfoldingField,
    pub perturbation: Option<Perturbation>,
    pub declared_order: usize,
    pub step_budget: IntegrationBudget,
}

#[derive(Clone, Debug)]
pub struct Perturbation {
    pub delta: f64,
    pub num: BiPoly,
    pub den: BiPoly,
}

impl Perturbation {
    fn eval(&self, x: Complex64, y: Complex64) -> Complex64 {
        self.num.eval(x, y) / self.den.eval(x, y) * self.delta
    }
}

impl<'a> DiscreteMap<'a> {
    pub fn normal_form(field: &'a UnfoldingField, budget: IntegrationBudget) -> Self {
        DiscreteMap { field, perturbation: None, declared_order: 3, step_budget: budget }
    }

    pub fn with_perturbation(
        field: &'a UnfoldingField,
        pert: Perturbation,
        declared_order: usize,
        budget: IntegrationBudget,
    ) -> Self {
        DiscreteMap { field, perturbation: Some(pert), declared_order, step_budget: budget }
    }

    /// Time-1 map of `Re(X)` on the fiber.
    pub fn exp_step(&self, x: Complex64, y: Complex64) -> Result<Complex64> {
        let fiber = self.field.fiber_field(x);
        let traj = integrate(
            &fiber,
            Complex64::new(1.0, 0.0),
            y,
            &self.step_budget.with_max_time(1.0),
            &[],
        )?;
        Ok(traj.end())
    }

    pub fn apply(&self, x: Complex64, y: Complex64) -> Result<Complex64> {
        let base = self.exp_step(x, y)?;
        Ok(match &self.perturbation {
            Some(p) => base + p.eval(x, y),
            None => base,
        })
    }

    /// Inverse by fixed-point iteration around the backward flow.
    pub fn apply_inverse(&self, x: Complex64, z: Complex64) -> Result<Complex64> {
        let fiber = self.field.fiber_field(x);
        let back = |target: Complex64| -> Result<Complex64> {
            let traj = integrate(
                &fiber,
                Complex64::new(-1.0, 0.0),
                target,
                &self.step_budget.with_max_time(1.0),
                &[],
            )?;
            Ok(traj.end())
        };
        let mut w = back(z)?;
        for _ in 0..12 {
            let pert = self.perturbation.as_ref().map(|p| p.eval(x, w)).unwrap_or_default();
            let next = back(z - pert)?;
            if (next - w).norm() < 1e-14 * w.norm().max(1.0) {
                return Ok(next);
            }
            w = next;
        }
        Ok(w)
    }

    /// `Δ_φ` at `(x, y)`: the Fatou-time gap `ψ(φ(y)) − ψ(exp(X)(y))`,
    /// evaluated as a short path integral between the two images.
    pub fn delta_phi(&self, x: Complex64, y: Complex64) -> Result<Complex64> {
        let base = self.exp_step(x, y)?;
        let pert = self.perturbation.as_ref().map(|p| p.eval(x, y)).unwrap_or_default();
        if pert.norm() == 0.0 {
            return Ok(Complex64::default());
        }
        let fiber = self.field.fiber_field(x);
        let path = PathSpec::polyline(&[base, base + pert]);
        Ok(fatou_integral(&fiber, &path))
    }

    /// Samples `|y∘φ − y∘exp(X)| / |f|^order` near the fixed curves; the
    /// declared-ideal invariant requires this ratio to stay bounded.
    pub fn ideal_ratio_bound(
        &self,
        curves: &[FixedCurve],
        x: Complex64,
    ) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for curve in curves {
            let gamma = self.field.curve_value(curve, x, None)?;
            for k in 1..=4 {
                let y = gamma + Complex64::from_polar(0.02 * k as f64, 0.7 * k as f64);
                let f_val = self.field.eval_reduced(x, y);
                let pert = self
                    .perturbation
                    .as_ref()
                    .map(|p| p.eval(x, y))
                    .unwrap_or_default();
                let ratio = pert.norm() / f_val.norm().powi(self.declared_order as i32);
                worst = worst.max(ratio);
            }
        }
        Ok(worst)
    }
}

/// One row of a Long Orbit run.
#[derive(Clone, Debug)]
pub struct LongOrbitRow {
    pub x: Complex64,
    pub t_value: Complex64,
    /// ⌈T⌉: number of iterations performed.
    pub iterations: usize,
    /// ⌈T⌉ − T, the fractional phase.
    pub phase: f64,
    pub endpoint: Complex64,
    /// `⌈T⌉ + 2πi Σ_{E₋(x)} Res` (converges to ψᵠ₋(χ) − ψᵠ₊(y₊)).
    pub limit_value: Complex64,
    /// `sup_j |ψ_X∘φʲ − j − ψ_X|` along the orbit.
    pub tracking_sup: f64,
    /// max measured |Δ_φ| along the orbit.
    pub max_delta: f64,
}

#[derive(Clone, Debug)]
pub struct LongOrbitReport {
    pub rows: Vec<LongOrbitRow>,
    /// ψᵠ-side of the discrete residue formula, from the deepest endpoint.
    pub fatou_target: Complex64,
    pub e_minus: Vec<usize>,
}

/// Iterate φ exactly ⌈T(x_n)⌉ times from `(x_n, y₊)`; verify tracking and
/// the ψᵠ-level convergence of `⌈T⌉ + 2πi Σ Res`.
pub fn run_long_orbit(
    map: &DiscreteMap<'_>,
    curves: &[FixedCurve],
    spec: &LongTrajectorySpec,
    x_samples: &[Complex64],
    budget: &IntegrationBudget,
) -> Result<LongOrbitReport> {
    let field = map.field;
    let t_fn = ResidueT::new(field, curves, spec);
    let escape = 2.0 * field.epsilon.max(spec.pair.eps_working);
    let mut hints = vec![None; spec.e_minus.len()];
    let mut rows = Vec::with_capacity(x_samples.len());
    for &x in x_samples {
        let t_value = t_fn.eval_with_hints(x, &mut hints)?;
        let iterations = t_value.re.ceil().max(1.0) as usize;
        let phase = iterations as f64 - t_value.re;

        let fiber = field.fiber_field(x);
        let mut y = spec.pair.y_plus;
        let mut fatou_err = Complex64::default();
        let mut tracking_sup = 0.0f64;
        let mut max_delta = 0.0f64;
        for j in 0..iterations {
            let base = map.exp_step(x, y)?;
            let pert = map
                .perturbation
                .as_ref()
                .map(|p| p.eval(x, y))
                .unwrap_or_default();
            let next = base + pert;
            if next.norm() > escape {
                return Err(Error::OrbitEscaped { iterate: j });
            }
            if pert.norm() > 0.0 {
                let hop = fatou_integral(&fiber, &PathSpec::polyline(&[base, next]));
                fatou_err += hop;
                max_delta = max_delta.max(hop.norm());
                tracking_sup = tracking_sup.max(fatou_err.norm());
            }
            y = next;
        }

        // 2πi Σ Res over E₋ at this x.
        let mut res_sum = Complex64::default();
        for (slot, &id) in hints.iter_mut().zip(spec.e_minus.iter()) {
            let gamma = field.curve_value(&curves[id], x, *slot)?;
            *slot = Some(gamma);
            res_sum += field.residue_at(&curves[id], x, Some(gamma))?;
        }
        let limit_value = Complex64::new(iterations as f64, 0.0) + TWO_PI_I * res_sum;

        rows.push(LongOrbitRow {
            x,
            t_value,
            iterations,
            phase,
            endpoint: y,
            limit_value,
            tracking_sup,
            max_delta,
        });
    }

    // ψᵠ-side: ψᵠ₋(0, y_end) − ψᵠ₊(0, y₊) with the Δ-corrections of the
    // diffeomorphism Fatou coordinates summed until |Δ| < 1e-12.
    let y_end = rows.last().map(|r| r.endpoint).unwrap_or(spec.pair.y_minus);
    let fatou_target = discrete_fatou_gap(map, spec, y_end, budget)?;
    Ok(LongOrbitReport { rows, fatou_target, e_minus: spec.e_minus.clone() })
}

/// `ψᵠ₋(0, y₋) − ψᵠ₊(0, y₊)` where ψᵠ are the Fatou coordinates of φ on the
/// x = 0 petals (ψ plus the summed Δ-corrections).
pub fn discrete_fatou_gap(
    map: &DiscreteMap<'_>,
    spec: &LongTrajectorySpec,
    y_minus: Complex64,
    budget: &IntegrationBudget,
) -> Result<Complex64> {
    let x0 = Complex64::default();
    let field = map.field;
    let f0 = field.fiber_field(x0);
    // ψ₋(0, y_minus) − ψ₊(0, y₊) along κ extended to y_minus.
    let mut kappa = spec.pair.kappa_path();
    kappa.push_segment(spec.pair.y_minus, y_minus);
    let psi_gap = fatou_integral(&f0, &kappa);

    // Σ_{j≥0} Δ(φʲ(0, y₊)).
    let mut sum_plus = Complex64::default();
    let mut y = spec.pair.y_plus;
    for _ in 0..200_000 {
        let d = map.delta_phi(x0, y)?;
        sum_plus += d;
        y = map.apply(x0, y)?;
        if d.norm() < 1e-12 {
            break;
        }
    }
    // Σ_{j≥1} Δ(φ⁻ʲ(0, y₋)).
    let mut sum_minus = Complex64::default();
    let mut z = y_minus;
    for _ in 0..200_000 {
        z = map.apply_inverse(x0, z)?;
        let d = map.delta_phi(x0, z)?;
        sum_minus += d;
        if d.norm() < 1e-12 {
            break;
        }
    }
    let _ = budget;
    Ok(psi_gap - sum_minus - sum_plus)
}

/// Trim: advance `y₊` by M time units, retreat `y₋` by M; `T` drops by 2M.
pub fn trim(
    field: &UnfoldingField,
    spec: &LongTrajectorySpec,
    m_steps: usize,
    budget: &IntegrationBudget,
) -> Result<LongTrajectorySpec> {
    if m_steps == 0 {
        return Ok(spec.clone());
    }
    let m = m_steps as f64;
    let y_plus =
        exp_fiber0(field, Complex64::new(m, 0.0), spec.pair.y_plus, budget)?;
    let y_minus =
        exp_fiber0(field, Complex64::new(-m, 0.0), spec.pair.y_minus, budget)?;
    let pair = FatouPair::new(field, y_plus, y_minus, spec.pair.eps_working)
        .map_err(|_| Error::PetalExit)?;
    Ok(LongTrajectorySpec { pair, e_minus: spec.e_minus.clone(), s: spec.s })
}

fn wrap_to_pi(theta: f64) -> f64 {
    let mut t = theta % (2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    if t < -PI {
        t += 2.0 * PI;
    }
    t
}

/// The benchmark samples `x_n = −(0.1·2⁻ⁿ)²`.
pub fn benchmark_samples(count: usize) -> Vec<Complex64> {
    (0..count)
        .map(|n| {
            let t = 0.1 * 0.5f64.powi(n as i32);
            Complex64::new(-t * t, 0.0)
        })
        .collect()
}

/// Samples on the benchmark β with `T(x) = k + frac` pinned per sample, so
/// the Long Orbit limit `⌈T⌉ + 2πi Σ Res` is a genuine Cauchy sequence.
pub fn phase_locked_samples(
    t_fn: &ResidueT<'_>,
    targets: &[f64],
) -> Result<Vec<Complex64>> {
    let mut out = Vec::with_capacity(targets.len());
    for &target in targets {
        // Solve Re T(−t²) = target by secant in t.
        let mut t0 = PI / target;
        let mut t1 = t0 * 0.9;
        let f = |t: f64| -> Result<f64> {
            Ok(t_fn.eval(Complex64::new(-t * t, 0.0))?.re - target)
        };
        let mut f0 = f(t0)?;
        let mut f1 = f(t1)?;
        for _ in 0..80 {
            if (f1 - f0).abs() < 1e-300 {
                break;
            }
            let t2 = t1 - f1 * (t1 - t0) / (f1 - f0);
            t0 = t1;
            f0 = f1;
            t1 = t2;
            f1 = f(t1)?;
            if f1.abs() < 1e-10 {
                break;
            }
        }
        if f1.abs() > 1e-8 {
            return Err(Error::LevelSetLost);
        }
        out.push(Complex64::new(-t1 * t1, 0.0));
    }
    Ok(out)
}
