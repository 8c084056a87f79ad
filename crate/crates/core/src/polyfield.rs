//! Douady–Estrada–Sentenac analysis of a polynomial vector field
//! `Y = P(w) ∂/∂w` with `ν(Y) = deg P − 1 ≥ 1`: singularity classification,
//! the separatrix skeleton at infinity, α/ω-limits, homoclinic detection and
//! the instability-direction set `𝒰¹`.
//!
//! A degree-(ν+1) field has ν trajectories escaping to ∞ and ν emerging from
//! it. Each is seeded at radius `R` in its asymptotic direction (the
//! solutions of `μ·lead·wᵛ ∈ ℝ`) and integrated into the plane. Landings at
//! simple singularities are certified by a contraction ball, parabolic
//! landings by a petal-sector test in the ramified chart; a re-escape to the
//! near-∞ chart inside an adjacent angle is homoclinic evidence and must
//! reproduce the residue transit time `|2πi Σ_{E₋} Res / μ|`.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::algebra::{residue_of_dual_form, roots, ComplexPoly};
use crate::error::{Error, Result};
use crate::flow::{
    fatou_integral, integrate, winding_number, EventKind, EventSpec, IntegrationBudget, PathSpec,
    Trajectory,
};

const PI: f64 = core::f64::consts::PI;
const DEFAULT_TOL_CLUSTER: f64 = 1e-7;
const TOL_INDIFF: f64 = 1e-9;
/// Relative tolerance of the homoclinic transit-time law.
pub const TOL_RESIDUE_FORMULA: f64 = 1e-5;
/// Radius (multiple of R) of the far cut-off used for ∞-tail integrals.
const FAR_FACTOR: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SingularityKind {
    Attracting,
    Repelling,
    Indifferent,
    Parabolic,
}

/// One zero of `P` with its local data for the unrotated field.
#[derive(Clone, Debug)]
pub struct Singularity {
    pub location: Complex64,
    pub multiplicity: usize,
    pub residue: Complex64,
    /// `P'(ζ)` at simple roots, 0 otherwise.
    pub linear_part: Complex64,
    pub kind: SingularityKind,
    /// Taylor coefficients of `P` at the root (ascending).
    local: Vec<Complex64>,
}

#[derive(Clone, Debug)]
pub struct PolyVectorField {
    pub p: ComplexPoly,
    pub singularities: Vec<Singularity>,
    pub nu: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    /// Escapes to ∞ in finite forward time.
    ToInfinity,
    /// Emerges from ∞ (escapes in finite backward time).
    FromInfinity,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Landing {
    /// Certified landing at the singularity with this index
    /// (ω-limit for ←∞ separatrices, α-limit for →∞ ones).
    Sing(usize),
    /// Re-escape to the near-∞ chart (a homoclinic leg); angle at crossing.
    Infinity { exit_angle: f64 },
    Unresolved,
}

#[derive(Clone, Debug)]
pub struct SeparatrixEntry {
    pub orientation: Orientation,
    pub asymptotic_angle: f64,
    pub landing: Landing,
    pub samples: Trajectory,
}

#[derive(Clone, Debug)]
pub struct HomoclinicRecord {
    /// Index (into the diagram) of the ←∞ separatrix that re-escapes.
    pub incoming: usize,
    /// Index of the →∞ separatrix whose angle it escapes into.
    pub outgoing: usize,
    /// Indices of enclosed singularities (one side of the connection).
    pub enclosed: Vec<usize>,
    /// Measured transit time: arc time plus the ∞-tail integrals.
    pub transit_time: f64,
    /// `Re[(2πi/μ) Σ_{E₋, signed} Res]` from the measured windings.
    pub residue_transit: f64,
}

impl HomoclinicRecord {
    pub fn law_error(&self) -> f64 {
        (self.transit_time - self.residue_transit).abs() / self.residue_transit.abs().max(1e-300)
    }
}

#[derive(Clone, Debug)]
pub struct SeparatrixDiagram {
    pub direction: Complex64,
    /// 2ν entries ordered counterclockwise, alternating orientation.
    pub separatrices: Vec<SeparatrixEntry>,
    pub homoclinics: Vec<HomoclinicRecord>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum OmegaLimit {
    Sing(usize),
    Infinity,
    Periodic { period: f64 },
    Unresolved,
}

/// A confirmed instability direction with its witnesses.
#[derive(Clone, Debug)]
pub struct DirectionRecord {
    pub mu: Complex64,
    pub homoclinics: Vec<HomoclinicRecord>,
}

impl PolyVectorField {
    /// Decorate every singularity of `P(w) ∂/∂w`, `deg P ≥ 2`.
    pub fn analyze(p: &ComplexPoly) -> Result<Self> {
        if p.degree() < 2 {
            return Err(Error::InvalidInput("polynomial field needs deg >= 2"));
        }
        let clusters = roots(p, DEFAULT_TOL_CLUSTER)?;
        let mut singularities = Vec::with_capacity(clusters.len());
        for cl in &clusters {
            let res = residue_of_dual_form(p, cl)?;
            let shifted = p.compose_affine(Complex64::new(1.0, 0.0), cl.location);
            let local = shifted.coeffs().to_vec();
            let linear = if cl.multiplicity == 1 { local[1] } else { Complex64::default() };
            let kind = if cl.multiplicity >= 2 {
                SingularityKind::Parabolic
            } else if linear.re < -TOL_INDIFF * linear.norm() {
                SingularityKind::Attracting
            } else if linear.re > TOL_INDIFF * linear.norm() {
                SingularityKind::Repelling
            } else {
                SingularityKind::Indifferent
            };
            singularities.push(Singularity {
                location: cl.location,
                multiplicity: cl.multiplicity,
                residue: res.value,
                linear_part: linear,
                kind,
            local });
        }
        Ok(PolyVectorField { p: p.clone(), singularities, nu: p.degree() - 1 })
    }

    /// `2 + 2·max|root|`, the default working radius.
    pub fn default_radius(&self) -> f64 {
        2.0 + 2.0 * self.singularities.iter().fold(0.0f64, |m, s| m.max(s.location.norm()))
    }

    fn field(&self) -> impl Fn(Complex64) -> Complex64 + '_ {
        move |w| self.p.eval(w)
    }

    /// Asymptotic angles at ∞ of `Tr_{→∞}(μY)` (`outward = true`) or
    /// `Tr_{←∞}(μY)`: the rays where `μ·lead·wᵛ` is real positive/negative.
    pub fn asymptotic_angles(&self, mu: Complex64, outward: bool) -> Vec<f64> {
        let base = -(mu * self.p.leading()).arg() + if outward { 0.0 } else { PI };
        (0..self.nu)
            .map(|k| normalize_angle((base + 2.0 * PI * k as f64) / self.nu as f64))
            .map(normalize_angle)
            .collect()
    }

    /// Integrate the 2ν separatrices of `Re(μY)` and classify the landings.
    pub fn separatrix_diagram(
        &self,
        mu: Complex64,
        r: f64,
        budget: &IntegrationBudget,
    ) -> Result<SeparatrixDiagram> {
        let mut entries: Vec<SeparatrixEntry> = Vec::with_capacity(2 * self.nu);
        for k in 0..self.nu {
            let base = -(mu * self.p.leading()).arg();
            let theta_out = normalize_angle((base + 2.0 * PI * k as f64) / self.nu as f64);
            let theta_in = normalize_angle((base + PI + 2.0 * PI * k as f64) / self.nu as f64);
            for (theta, orientation) in
                [(theta_out, Orientation::ToInfinity), (theta_in, Orientation::FromInfinity)]
            {
                let seed = Complex64::from_polar(r, theta);
                let flow_mu = if orientation == Orientation::FromInfinity { mu } else { -mu };
                let fate = self.classify(flow_mu, seed, r, budget, false)?;
                let (landing, samples) = match fate {
                    Fate::Lands(idx, traj) => (Landing::Sing(idx), traj),
                    Fate::Escapes { exit_angle, traj } => {
                        (Landing::Infinity { exit_angle }, traj)
                    }
                    Fate::Periodic { traj, .. } | Fate::Unresolved(traj) => {
                        (Landing::Unresolved, traj)
                    }
                };
                entries.push(SeparatrixEntry {
                    orientation,
                    asymptotic_angle: theta,
                    landing,
                    samples,
                });
            }
        }
        entries.sort_by(|a, b| {
            a.asymptotic_angle
                .partial_cmp(&b.asymptotic_angle)
                .unwrap_or(core::cmp::Ordering::Equal)
        });
        let homoclinics = self.collect_homoclinics(mu, r, &entries)?;
        Ok(SeparatrixDiagram { direction: mu, separatrices: entries, homoclinics })
    }

    fn collect_homoclinics(
        &self,
        mu: Complex64,
        r: f64,
        entries: &[SeparatrixEntry],
    ) -> Result<Vec<HomoclinicRecord>> {
        let mut out = Vec::new();
        for (idx, entry) in entries.iter().enumerate() {
            if entry.orientation != Orientation::FromInfinity {
                continue;
            }
            let Landing::Infinity { exit_angle } = entry.landing else { continue };
            // The escape must point into an adjacent →∞ angle.
            let mut best = None;
            for (jdx, other) in entries.iter().enumerate() {
                if other.orientation != Orientation::ToInfinity {
                    continue;
                }
                let d = angle_distance(exit_angle, other.asymptotic_angle);
                match best {
                    None => best = Some((jdx, d)),
                    Some((_, bd)) if d < bd => best = Some((jdx, d)),
                    _ => {}
                }
            }
            let Some((outgoing, dist)) = best else { continue };
            if dist > 0.49 * PI / self.nu as f64 {
                continue;
            }
            let record =
                self.homoclinic_record(mu, r, idx, outgoing, entry)?;
            out.push(record);
        }
        Ok(out)
    }

    /// Winding-based enclosure and two-route transit time for one re-escape.
    fn homoclinic_record(
        &self,
        mu: Complex64,
        r: f64,
        incoming: usize,
        outgoing: usize,
        entry: &SeparatrixEntry,
    ) -> Result<HomoclinicRecord> {
        let traj = &entry.samples;
        let theta_in = entry.asymptotic_angle;
        let Landing::Infinity { exit_angle } = entry.landing else {
            return Err(Error::InvalidInput("not an escaping separatrix"));
        };
        let far = FAR_FACTOR * r;

        // Closed curve: ray ∞→seed, trajectory, ray exit→∞, far closing arc.
        let mut curve: Vec<Complex64> = Vec::new();
        for i in 0..48 {
            let rho = far * (r / far).powf(i as f64 / 47.0);
            curve.push(Complex64::from_polar(rho, theta_in));
        }
        curve.extend(traj.samples.iter().map(|&(_, w)| w));
        for i in 0..48 {
            let rho = r * (far / r).powf(i as f64 / 47.0);
            curve.push(Complex64::from_polar(rho, exit_angle));
        }
        let sweep = wrap_to_pi(theta_in - exit_angle);
        for i in 1..64 {
            let theta = exit_angle + sweep * i as f64 / 64.0;
            curve.push(Complex64::from_polar(far, theta));
        }

        let mut windings = Vec::with_capacity(self.singularities.len());
        for s in &self.singularities {
            let w = winding_number(&curve, s.location).ok_or(Error::WindingAmbiguous)?;
            windings.push(w);
        }
        let nonzero: Vec<i32> = windings.iter().copied().filter(|&w| w != 0).collect();
        if nonzero.is_empty()
            || nonzero.iter().any(|w| w.abs() > 1)
            || nonzero.iter().any(|&w| w != nonzero[0])
        {
            return Err(Error::InconsistentEnclosure);
        }
        let enclosed: Vec<usize> =
            windings.iter().enumerate().filter(|(_, &w)| w != 0).map(|(k, _)| k).collect();

        // Residue route: by the Cauchy identity along the realised closed
        // curve, tail_in + t_arc + tail_out = (2πi/μ) Σ wind_k · Res_k up to
        // the vanishing far-arc term, signs included.
        let mut res_sum = Complex64::default();
        for (k, s) in self.singularities.iter().enumerate() {
            res_sum += s.residue * windings[k] as f64;
        }
        let residue_transit = (Complex64::new(0.0, 2.0 * PI) * res_sum / mu).re;

        // Measured route: ODE time plus the quadrature tails along the rays,
        // plus the analytic remainder of the leading term beyond `far`.
        let field = self.field();
        let rotated = |w: Complex64| mu * field(w);
        let w_in = traj.start();
        let w_out = traj.end();
        let tail_in = fatou_integral(
            &rotated,
            &PathSpec::polyline(&[Complex64::from_polar(far, theta_in), w_in]),
        );
        let tail_out = fatou_integral(
            &rotated,
            &PathSpec::polyline(&[w_out, Complex64::from_polar(far, exit_angle)]),
        );
        let d = (self.nu + 1) as i32;
        let lead = mu * self.p.leading();
        let rem = |theta: f64| -> Complex64 {
            let phase = Complex64::from_polar(1.0, theta * (1 - d) as f64);
            phase / (lead * (d - 1) as f64 * far.powi(d - 1))
        };
        let transit =
            traj.total_time + (tail_in + tail_out).re - rem(theta_in).re + rem(exit_angle).re;

        Ok(HomoclinicRecord { incoming, outgoing, enclosed, transit_time: transit, residue_transit })
    }

    /// Homoclinic connections of `Re(μY)`, confirmed by shooting and the
    /// residue transit law.
    pub fn detect_homoclinics(
        &self,
        mu: Complex64,
        budget: &IntegrationBudget,
    ) -> Result<Vec<HomoclinicRecord>> {
        let diagram = self.separatrix_diagram(mu, self.default_radius(), budget)?;
        Ok(diagram.homoclinics)
    }

    /// Candidate directions `±i Σ_E Res / |Σ_E Res|` over subsets of the
    /// singularities, confirmed by shooting; sorted by argument.
    pub fn instability_directions(
        &self,
        budget: &IntegrationBudget,
    ) -> Result<Vec<DirectionRecord>> {
        let n = self.singularities.len();
        if n > 12 {
            return Err(Error::SubsetExplosion { count: n });
        }
        let mut candidates: Vec<Complex64> = Vec::new();
        for mask in 1u32..(1u32 << n) {
            let mut sum = Complex64::default();
            for (k, s) in self.singularities.iter().enumerate() {
                if mask & (1 << k) != 0 {
                    sum += s.residue;
                }
            }
            if sum.norm() < 1e-12 {
                continue;
            }
            let dir = Complex64::new(0.0, 1.0) * sum / sum.norm();
            for cand in [dir, -dir] {
                if !candidates.iter().any(|c| (c - cand).norm() < 1e-9) {
                    candidates.push(cand);
                }
            }
        }
        let mut confirmed: Vec<DirectionRecord> = Vec::new();
        for mu in candidates {
            let homs = self.detect_homoclinics(mu, budget)?;
            let passing: Vec<HomoclinicRecord> = homs
                .into_iter()
                .filter(|h| h.law_error() < TOL_RESIDUE_FORMULA.max(1e-4))
                .collect();
            if !passing.is_empty() {
                confirmed.push(DirectionRecord { mu, homoclinics: passing });
            }
        }
        confirmed.sort_by(|a, b| {
            a.mu.arg().partial_cmp(&b.mu.arg()).unwrap_or(core::cmp::Ordering::Equal)
        });
        Ok(confirmed)
    }

    /// ω-limit of the `Re(μY)` trajectory through `w0`.
    pub fn omega_limit(
        &self,
        mu: Complex64,
        w0: Complex64,
        budget: &IntegrationBudget,
    ) -> Result<OmegaLimit> {
        for s in &self.singularities {
            if (w0 - s.location).norm() < 1e-12 {
                return Err(Error::InvalidInput("w0 is a singularity"));
            }
        }
        let r = self.default_radius().max(1.5 * w0.norm());
        match self.classify(mu, w0, r, budget, true)? {
            Fate::Lands(idx, _) => Ok(OmegaLimit::Sing(idx)),
            Fate::Escapes { .. } => Ok(OmegaLimit::Infinity),
            Fate::Periodic { period, .. } => Ok(OmegaLimit::Periodic { period }),
            Fate::Unresolved(_) => Ok(OmegaLimit::Unresolved),
        }
    }

    /// Run the flow of `Re(flow_mu · Y)` from `w0` until a certified landing,
    /// a certified escape beyond `r`, a Poincaré return (if requested), or
    /// budget exhaustion. Entering a singular ball without certification
    /// resumes integration.
    fn classify(
        &self,
        flow_mu: Complex64,
        w0: Complex64,
        r: f64,
        budget: &IntegrationBudget,
        detect_periodic: bool,
    ) -> Result<Fate> {
        let field = self.field();
        let min_sep = self.min_separation();
        let mut events: Vec<EventSpec> = vec![EventSpec::CrossRadius { radius: r, outward: true }];
        let mut ball_radius = vec![0.0f64; self.singularities.len()];
        for (k, s) in self.singularities.iter().enumerate() {
            let radius = if s.multiplicity == 1 {
                let pull = (flow_mu * s.linear_part).re;
                if pull < -1e-10 * s.linear_part.norm() {
                    contraction_radius(&s.local, pull.abs(), 0.5 * min_sep)
                } else {
                    0.0
                }
            } else {
                0.5 * parabolic_radius(&s.local, s.multiplicity, 0.5 * min_sep)
            };
            if radius > 0.0 {
                ball_radius[k] = radius;
                events.push(EventSpec::EnterBall { id: k, center: s.location, radius });
            }
        }
        if detect_periodic {
            let v = flow_mu * field(w0);
            if v.norm() > 0.0 {
                let window = (0.25 * min_sep).min(0.1 * r).max(1e-6);
                events.push(EventSpec::Section {
                    id: usize::MAX,
                    point: w0,
                    normal: v / v.norm(),
                    window,
                });
            }
        }

        // Already inside a certified region?
        for (k, s) in self.singularities.iter().enumerate() {
            if ball_radius[k] > 0.0 && (w0 - s.location).norm() <= ball_radius[k] {
                let certified =
                    s.multiplicity == 1 || parabolic_sector_ok(s, flow_mu, w0);
                if certified {
                    let traj = integrate(&field, flow_mu, w0, &IntegrationBudget {
                        max_time: 0.0,
                        ..*budget
                    }, &[])?;
                    return Ok(Fate::Lands(k, traj));
                }
            }
        }

        let mut remaining = *budget;
        let mut current = w0;
        let mut merged: Option<Trajectory> = None;
        loop {
            let traj = integrate(&field, flow_mu, current, &remaining, &events)?;
            let stopped = traj.stopped_by();
            let spent = traj.total_time;
            let end = traj.end();
            let merged_traj = append_trajectory(&mut merged, traj);
            match stopped {
                Some(EventKind::CrossRadius { .. }) => {
                    let exit_angle = end.arg();
                    return Ok(Fate::Escapes { exit_angle, traj: merged_traj });
                }
                Some(EventKind::SectionCross { .. }) => {
                    let return_tol = (100.0 * budget.rel_tol * w0.norm().max(1.0)).max(1e-8);
                    if (end - w0).norm() < return_tol {
                        return Ok(Fate::Periodic { period: merged_traj.total_time, traj: merged_traj });
                    }
                    // Not a closed orbit; keep going from the crossing.
                    current = end;
                }
                Some(EventKind::EnterSingularBall { id }) => {
                    let s = &self.singularities[id];
                    if s.multiplicity == 1 {
                        return Ok(Fate::Lands(id, merged_traj));
                    }
                    // Parabolic: certify via the petal sector in the
                    // ramified chart z = −1/((s−1)·μ·a_s·(w−ζ)^{s−1}).
                    if parabolic_sector_ok(s, flow_mu, end) {
                        return Ok(Fate::Lands(id, merged_traj));
                    }
                    // Nudge forward so the ball event re-arms after exit.
                    current = end;
                }
                Some(EventKind::BudgetExhausted) | None => {
                    return Ok(Fate::Unresolved(merged_traj));
                }
            }
            remaining.max_time -= spent;
            if remaining.max_time <= 0.0 {
                return Ok(Fate::Unresolved(merged_traj));
            }
        }
    }

    fn min_separation(&self) -> f64 {
        let locs: Vec<Complex64> = self.singularities.iter().map(|s| s.location).collect();
        let mut min = f64::INFINITY;
        for i in 0..locs.len() {
            for j in i + 1..locs.len() {
                min = min.min((locs[i] - locs[j]).norm());
            }
        }
        if min.is_finite() {
            min
        } else {
            1.0
        }
    }
}

enum Fate {
    Lands(usize, Trajectory),
    Escapes { exit_angle: f64, traj: Trajectory },
    Periodic { period: f64, traj: Trajectory },
    Unresolved(Trajectory),
}

fn append_trajectory(merged: &mut Option<Trajectory>, traj: Trajectory) -> Trajectory {
    match merged.take() {
        None => {
            *merged = Some(traj);
        }
        Some(mut acc) => {
            let offset = acc.total_time;
            acc.samples.extend(traj.samples.iter().skip(1).map(|&(t, w)| (t + offset, w)));
            acc.events.extend(traj.events.iter().map(|&(t, e)| (t + offset, e)));
            acc.total_time += traj.total_time;
            acc.fatou_delta += traj.fatou_delta;
            acc.arc_length += traj.arc_length;
            *merged = Some(acc);
        }
    }
    merged.clone().unwrap()
}

/// Largest radius (≤ cap) with Σ_{j≥2} |c_j| r^{j-1} ≤ margin/2, so that the
/// nonlinear remainder cannot overcome half the radial pull `margin`.
fn contraction_radius(local: &[Complex64], margin: f64, cap: f64) -> f64 {
    let bound = |r: f64| -> f64 {
        local
            .iter()
            .enumerate()
            .skip(2)
            .map(|(j, c)| c.norm() * r.powi(j as i32 - 1))
            .sum::<f64>()
    };
    bisect_radius(|r| bound(r) <= 0.5 * margin, cap)
}

/// Largest radius (≤ cap) with Σ_{j>s} |c_j| r^{j-s} ≤ |c_s|/2.
fn parabolic_radius(local: &[Complex64], s: usize, cap: f64) -> f64 {
    let cs = local[s].norm();
    let bound = |r: f64| -> f64 {
        local
            .iter()
            .enumerate()
            .skip(s + 1)
            .map(|(j, c)| c.norm() * r.powi((j - s) as i32))
            .sum::<f64>()
    };
    bisect_radius(|r| bound(r) <= 0.5 * cs, cap)
}

fn bisect_radius<F: Fn(f64) -> bool>(ok: F, cap: f64) -> f64 {
    if cap <= 0.0 {
        return 0.0;
    }
    if ok(cap) {
        return cap;
    }
    let mut lo = 0.0;
    let mut hi = cap;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Attracting-petal sector test: in z = −1/((s−1)·μ·a_s·(w−ζ)^{s−1}) the
/// flow is ż = 1 + O(1/2), so the sector {Re z > |Im z|} is forward
/// invariant and z → ∞ there, i.e. w → ζ.
fn parabolic_sector_ok(s: &Singularity, mu: Complex64, w: Complex64) -> bool {
    let m = s.multiplicity;
    let a = s.local[m];
    let dw = w - s.location;
    if dw.norm() == 0.0 {
        return true;
    }
    let z = -((m - 1) as f64 * mu * a * dw.powi(m as i32 - 1)).finv();
    z.re > z.im.abs()
}

fn normalize_angle(theta: f64) -> f64 {
    let mut t = theta % (2.0 * PI);
    if t < 0.0 {
        t += 2.0 * PI;
    }
    t
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

fn angle_distance(a: f64, b: f64) -> f64 {
    wrap_to_pi(a - b).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;

    fn poly(re_coeffs: &[f64]) -> ComplexPoly {
        ComplexPoly::new(re_coeffs.iter().map(|&r| c64(r, 0.0)).collect())
    }

    fn w_w_minus_1() -> PolyVectorField {
        PolyVectorField::analyze(&poly(&[0.0, -1.0, 1.0])).unwrap()
    }

    #[test]
    fn analyze_quadratic() {
        let field = w_w_minus_1();
        assert_eq!(field.nu, 1);
        let s0 = &field.singularities[0];
        let s1 = &field.singularities[1];
        assert!((s0.residue - c64(-1.0, 0.0)).norm() < 1e-12);
        assert!((s0.linear_part - c64(-1.0, 0.0)).norm() < 1e-12);
        assert_eq!(s0.kind, SingularityKind::Attracting);
        assert!((s1.residue - c64(1.0, 0.0)).norm() < 1e-12);
        assert_eq!(s1.kind, SingularityKind::Repelling);
    }

    #[test]
    fn analyze_rotated_is_indifferent() {
        let p = poly(&[0.0, -1.0, 1.0]).scale(c64(0.0, 1.0));
        let field = PolyVectorField::analyze(&p).unwrap();
        for s in &field.singularities {
            assert_eq!(s.kind, SingularityKind::Indifferent);
        }
    }

    #[test]
    fn analyze_parabolic() {
        let field = PolyVectorField::analyze(&poly(&[0.0, 0.0, 1.0])).unwrap();
        assert_eq!(field.singularities.len(), 1);
        assert_eq!(field.singularities[0].kind, SingularityKind::Parabolic);
        assert!(field.singularities[0].residue.norm() < 1e-12);
    }

    #[test]
    fn separatrices_of_w_squared_land_at_origin() {
        let field = PolyVectorField::analyze(&poly(&[0.0, 0.0, 1.0])).unwrap();
        let budget = IntegrationBudget::default().with_max_time(200.0);
        let diagram = field
            .separatrix_diagram(c64(1.0, 0.0), field.default_radius(), &budget)
            .unwrap();
        assert_eq!(diagram.separatrices.len(), 2);
        for sep in &diagram.separatrices {
            assert_eq!(sep.landing, Landing::Sing(0), "angle {}", sep.asymptotic_angle);
        }
        assert!(diagram.homoclinics.is_empty());
    }

    #[test]
    fn separatrices_of_quadratic_at_mu_one() {
        let field = w_w_minus_1();
        let budget = IntegrationBudget::default().with_max_time(200.0);
        let diagram = field
            .separatrix_diagram(c64(1.0, 0.0), field.default_radius(), &budget)
            .unwrap();
        assert_eq!(diagram.separatrices.len(), 2);
        for sep in &diagram.separatrices {
            match sep.orientation {
                // ←∞ separatrix lands at the attracting point 0.
                Orientation::FromInfinity => assert_eq!(sep.landing, Landing::Sing(0)),
                // →∞ separatrix launches from the repelling point 1.
                Orientation::ToInfinity => assert_eq!(sep.landing, Landing::Sing(1)),
            }
        }
        assert!(diagram.homoclinics.is_empty());
    }

    #[test]
    fn quadratic_homoclinic_at_mu_i() {
        let field = w_w_minus_1();
        let budget = IntegrationBudget::default().with_max_time(200.0);
        let homs = field.detect_homoclinics(c64(0.0, 1.0), &budget).unwrap();
        assert_eq!(homs.len(), 1, "homoclinics: {:?}", homs);
        let h = &homs[0];
        assert_eq!(h.enclosed.len(), 1);
        assert!((h.transit_time - 2.0 * PI).abs() < 2.0 * PI * 1e-5, "transit {}", h.transit_time);
        assert!(h.law_error() < 1e-5, "law error {}", h.law_error());
    }

    #[test]
    fn quadratic_no_homoclinic_off_axis() {
        let field = w_w_minus_1();
        let budget = IntegrationBudget::default().with_max_time(200.0);
        let mu = Complex64::from_polar(1.0, PI / 4.0);
        let homs = field.detect_homoclinics(mu, &budget).unwrap();
        assert!(homs.is_empty(), "{homs:?}");
    }

    #[test]
    fn instability_directions_monomial_empty() {
        let budget = IntegrationBudget::default().with_max_time(100.0);
        for nu in 1..=3usize {
            let mut coeffs = vec![0.0; nu + 2];
            coeffs[nu + 1] = 1.0;
            let field = PolyVectorField::analyze(&poly(&coeffs)).unwrap();
            let dirs = field.instability_directions(&budget).unwrap();
            assert!(dirs.is_empty(), "nu = {nu}");
        }
    }

    #[test]
    fn instability_directions_quadratic() {
        let field = w_w_minus_1();
        let budget = IntegrationBudget::default().with_max_time(200.0);
        let dirs = field.instability_directions(&budget).unwrap();
        assert_eq!(dirs.len(), 2, "{:?}", dirs.iter().map(|d| d.mu).collect::<Vec<_>>());
        assert!((dirs[0].mu - c64(0.0, -1.0)).norm() < 1e-9);
        assert!((dirs[1].mu - c64(0.0, 1.0)).norm() < 1e-9);
    }

    #[test]
    fn instability_directions_cubic_nonempty() {
        let p = ComplexPoly::from_roots(
            c64(1.0, 0.0),
            &[(c64(0.0, 0.0), 1), (c64(1.0, 0.0), 1), (c64(2.0, 0.0), 1)],
        );
        let field = PolyVectorField::analyze(&p).unwrap();
        let budget = IntegrationBudget::default().with_max_time(300.0);
        let dirs = field.instability_directions(&budget).unwrap();
        assert!(!dirs.is_empty());
    }

    #[test]
    fn omega_limits() {
        let budget = IntegrationBudget::default().with_max_time(300.0);
        let parab = PolyVectorField::analyze(&poly(&[0.0, 0.0, 1.0])).unwrap();
        assert_eq!(
            parab.omega_limit(c64(1.0, 0.0), c64(-0.5, 0.0), &budget).unwrap(),
            OmegaLimit::Sing(0)
        );

        let field = w_w_minus_1();
        assert_eq!(
            field.omega_limit(c64(1.0, 0.0), c64(0.5, 0.0), &budget).unwrap(),
            OmegaLimit::Sing(0)
        );

        let rotated = PolyVectorField::analyze(&poly(&[0.0, -1.0, 1.0]).scale(c64(0.0, 1.0)))
            .unwrap();
        match rotated.omega_limit(c64(1.0, 0.0), c64(0.1, 0.0), &budget).unwrap() {
            OmegaLimit::Periodic { period } => {
                assert!((period - 2.0 * PI).abs() < 0.5, "period {period}");
            }
            other => panic!("expected periodic, got {other:?}"),
        }
    }

    #[test]
    fn rotation_equivariance() {
        let budget = IntegrationBudget::default().with_max_time(200.0);
        let mu = Complex64::from_polar(1.0, 0.9);
        let base = w_w_minus_1();
        let rotated = PolyVectorField::analyze(&base.p.scale(mu)).unwrap();
        let d1 = base.separatrix_diagram(mu, base.default_radius(), &budget).unwrap();
        let d2 = rotated.separatrix_diagram(c64(1.0, 0.0), base.default_radius(), &budget).unwrap();
        assert_eq!(d1.separatrices.len(), d2.separatrices.len());
        for (a, b) in d1.separatrices.iter().zip(&d2.separatrices) {
            assert!((a.asymptotic_angle - b.asymptotic_angle).abs() < 1e-12);
            assert_eq!(a.landing, b.landing);
        }
    }
}
