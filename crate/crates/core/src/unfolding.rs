//! Unfoldings `X = f(x,y) ∂/∂y` with a multiple zero at the origin:
//! fixed-curve tracking, the integer invariants `N`, `m`, `ν`, the recursive
//! dynamical splitting with its exponents and associated polynomial fields,
//! petals of the unperturbed field, and the global instability set.
//!
//! The splitting is computed by exact bivariate blow-ups: substituting
//! `t = x·w` into a polynomial is a monomial reindexing, so the associated
//! polynomial field of a compact-like set is read off a single x-row of the
//! blown-up numerator. The only numerical inputs are the cluster values
//! `S_β` (roots of that row polynomial) and the branch-to-cluster
//! assignment, which uses the tracked fixed curves.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::algebra::{roots, ComplexPoly};
use crate::error::{Error, Result};
use crate::flow::IntegrationBudget;
use crate::polyfield::PolyVectorField;

const PI: f64 = core::f64::consts::PI;
/// Cluster tolerance for S_β values (absolute), per the radii policy.
const TOL_S_CLUSTER: f64 = 1e-6;
const DEPTH_LIMIT: usize = 8;

/// Bivariate polynomial `Σ rows[i][j] · x^i y^j`.
#[derive(Clone, Debug, PartialEq)]
pub struct BiPoly {
    rows: Vec<Vec<Complex64>>,
}

impl BiPoly {
    pub fn new(rows: Vec<Vec<Complex64>>) -> Self {
        let mut p = BiPoly { rows };
        p.trim();
        p
    }

    pub fn constant(c: Complex64) -> Self {
        BiPoly::new(vec![vec![c]])
    }

    /// Polynomial in `y` alone (row 0).
    pub fn from_y_poly(p: &ComplexPoly) -> Self {
        BiPoly::new(vec![p.coeffs().to_vec()])
    }

    fn trim(&mut self) {
        for row in &mut self.rows {
            while row.last().map(|c| c.norm_sqr() == 0.0).unwrap_or(false) {
                row.pop();
            }
        }
        while self.rows.last().map(|r| r.is_empty()).unwrap_or(false) {
            self.rows.pop();
        }
    }

    pub fn rows(&self) -> &[Vec<Complex64>] {
        &self.rows
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(|r| r.is_empty())
    }

    pub fn degree_x(&self) -> usize {
        self.rows.len().saturating_sub(1)
    }

    pub fn degree_y(&self) -> usize {
        self.rows.iter().map(|r| r.len()).max().unwrap_or(0).saturating_sub(1)
    }

    pub fn eval(&self, x: Complex64, y: Complex64) -> Complex64 {
        let mut acc = Complex64::default();
        for row in self.rows.iter().rev() {
            let mut ry = Complex64::default();
            for &c in row.iter().rev() {
                ry = ry * y + c;
            }
            acc = acc * x + ry;
        }
        acc
    }

    /// Coefficients in `y` at fixed `x`.
    pub fn y_poly_at(&self, x: Complex64) -> ComplexPoly {
        let deg_y = self.degree_y();
        let mut coeffs = vec![Complex64::default(); deg_y + 1];
        for (j, slot) in coeffs.iter_mut().enumerate() {
            let mut acc = Complex64::default();
            for row in self.rows.iter().rev() {
                acc = acc * x + row.get(j).copied().unwrap_or_default();
            }
            *slot = acc;
        }
        ComplexPoly::new(coeffs)
    }

    /// Largest `k` with `x^k` dividing the polynomial (exact zero rows).
    pub fn x_valuation(&self) -> usize {
        for (i, row) in self.rows.iter().enumerate() {
            if !row.is_empty() {
                return i;
            }
        }
        0
    }

    /// Divide by `x^k` (rows below `k` must be empty).
    pub fn div_x_pow(&self, k: usize) -> Self {
        BiPoly::new(self.rows.iter().skip(k).cloned().collect())
    }

    /// Substitute `y = x·w`: exact monomial reindexing `x^i y^j → x^{i+j} w^j`.
    pub fn blowup_y(&self) -> Self {
        let mut rows = vec![Vec::new(); self.rows.len() + self.degree_y() + 1];
        for (i, row) in self.rows.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                let r = &mut rows[i + j];
                if r.len() <= j {
                    r.resize(j + 1, Complex64::default());
                }
                r[j] += c;
            }
        }
        BiPoly::new(rows)
    }

    /// Substitute `y → y + ζ` (Taylor shift of every row).
    pub fn shift_y(&self, zeta: Complex64) -> Self {
        let one = Complex64::new(1.0, 0.0);
        let rows = self
            .rows
            .iter()
            .map(|row| {
                ComplexPoly::new(row.clone()).compose_affine(one, zeta).coeffs().to_vec()
            })
            .collect();
        BiPoly::new(rows)
    }

    pub fn max_coeff_abs(&self) -> f64 {
        self.rows.iter().flatten().fold(0.0f64, |m, c| m.max(c.norm()))
    }

    /// Zero out rows whose norm is below `tol` times the coefficient scale;
    /// returns the largest dropped row norm (relative).
    pub fn cleanup_rows_below(&mut self, upto: usize, tol: f64) -> f64 {
        let scale = self.max_coeff_abs().max(1e-300);
        let mut worst = 0.0f64;
        for row in self.rows.iter_mut().take(upto) {
            let norm = row.iter().fold(0.0f64, |m, c| m.max(c.norm()));
            worst = worst.max(norm / scale);
            if norm <= tol * scale {
                row.clear();
            }
        }
        self.trim();
        worst
    }

    /// ∂/∂y.
    pub fn dy(&self) -> Self {
        let rows = self
            .rows
            .iter()
            .map(|row| ComplexPoly::new(row.clone()).derivative().coeffs().to_vec())
            .collect();
        BiPoly::new(rows)
    }
}

/// `f = numerator/denominator`, with the invariants `N`, `m`, `ν`, the
/// monodromy (ramification) order of the branches and the working polydisk.
#[derive(Clone, Debug)]
pub struct UnfoldingField {
    pub numerator: BiPoly,
    pub denominator: BiPoly,
    /// Multiplicity of `x = 0` in the singular set.
    pub m: usize,
    /// Number of singular points over a generic fiber `x = x₀ ≠ 0`.
    pub n_fiber: usize,
    /// `ν` of the unperturbed field `X₀|_{x=0}`.
    pub nu: usize,
    /// Monodromy order of the branch set around `x = 0`; 1 means the fixed
    /// curves are graphs `y = γ(x)` (transversal).
    pub ramification: usize,
    pub delta: f64,
    pub epsilon: f64,
    /// Numerator with `x^m` divided out.
    reduced: BiPoly,
}

/// One tracked branch of the fixed-point set along a ray.
#[derive(Clone, Debug)]
pub struct FixedCurve {
    pub id: usize,
    pub multiplicity: usize,
    pub ray: Complex64,
    /// `(x, γ(x))` samples, decreasing in `|x|`.
    pub samples: Vec<(Complex64, Complex64)>,
}

/// Geometric grid of sample moduli along one ray.
#[derive(Clone, Copy, Debug)]
pub struct RayGrid {
    pub ray: Complex64,
    pub r_start: f64,
    pub factor: f64,
    pub count: usize,
}

impl RayGrid {
    pub fn for_disk(delta: f64) -> Self {
        RayGrid {
            ray: Complex64::from_polar(1.0, 0.438),
            r_start: 0.5 * delta,
            factor: 0.72,
            count: 14,
        }
    }

    pub fn with_ray(mut self, ray: Complex64) -> Self {
        self.ray = ray / ray.norm();
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    Seed,
    Exterior,
    CompactLike,
}

/// The polynomial field `X_β(λ) = λ^e · P_β(w) ∂/∂w` of a compact-like set.
#[derive(Clone, Debug)]
pub struct AssociatedField {
    pub exponent: usize,
    pub poly: ComplexPoly,
}

impl AssociatedField {
    pub fn at(&self, lambda: Complex64) -> ComplexPoly {
        self.poly.scale(lambda.powi(self.exponent as i32))
    }
}

#[derive(Clone, Debug, Default)]
pub struct NodeRadii {
    pub eta: f64,
    pub rho: f64,
    /// `η_{β,ζ}` per cluster, in cluster order.
    pub eta_zeta: Vec<f64>,
}

/// One node of the dynamical splitting.
#[derive(Clone, Debug)]
pub struct SplittingNode {
    pub kind: NodeKind,
    /// Word over cluster choices: "0", "00", "01", ...
    pub label: String,
    /// Shift chain ζ₁..ζ_k: the adapted coordinate is
    /// `t = (y − Σ ζ_l x^l) / x^k`.
    pub chart: Vec<Complex64>,
    /// Exterior exponent for Seed/Exterior nodes, `e(𝒞)` for CompactLike.
    pub e: usize,
    pub nu_local: usize,
    pub radii: NodeRadii,
    pub poly_field: Option<AssociatedField>,
    pub branch_ids: Vec<usize>,
    pub terminal: bool,
    pub children: Vec<SplittingNode>,
}

impl SplittingNode {
    /// Depth-first iterator over the tree.
    pub fn walk(&self) -> Vec<&SplittingNode> {
        let mut out = vec![self];
        let mut i = 0;
        while i < out.len() {
            let node: &SplittingNode = out[i];
            for child in &node.children {
                out.push(child);
            }
            i += 1;
        }
        out
    }

    /// `y = Σ ζ_l x^l + x^k t` for this node's chart.
    pub fn chart_to_y(&self, x: Complex64, t: Complex64) -> Complex64 {
        let mut y = t;
        for &zeta in self.chart.iter().rev() {
            y = x * (y + zeta);
        }
        y
    }
}

/// An instability direction with its provenance in the splitting.
#[derive(Clone, Debug)]
pub struct TaggedDirection {
    pub lambda: Complex64,
    /// Label of the node contributing the direction.
    pub source: String,
    /// True when confirmed by shooting on the associated polynomial field;
    /// false for the closed-form non-parabolic exterior directions.
    pub shooting_confirmed: bool,
}

/// One petal of the unperturbed field at the origin.
#[derive(Clone, Copy, Debug)]
pub struct Petal {
    pub index: usize,
    pub bisecting_angle: f64,
    pub attracting: bool,
    pub radius: f64,
}

impl UnfoldingField {
    /// Validate and decorate an unfolding `numerator/denominator · ∂/∂y` on
    /// the polydisk `B(0,δ) × B(0,ε)`.
    ///
    /// Non-transversal inputs (branches with nontrivial monodromy around
    /// `x = 0`, like `y² − x`) load fine — `N`, `m`, `ν` are still defined —
    /// but carry `ramification > 1` and are rejected by the splitting until
    /// pre-ramified `x ↦ x^k`.
    pub fn load(numerator: BiPoly, denominator: BiPoly, delta: f64, epsilon: f64) -> Result<Self> {
        if numerator.is_zero() {
            return Err(Error::InvalidInput("zero numerator"));
        }
        if denominator.is_zero() {
            return Err(Error::InvalidInput("zero denominator"));
        }
        // Denominator must not vanish on the polydisk (minimum-modulus scan).
        let mut min_mod = f64::INFINITY;
        let steps = 24;
        for i in 0..=steps {
            for j in 0..=steps {
                for (pr, pa) in [(i, j), (steps - i, j)] {
                    let x = Complex64::from_polar(
                        delta * pr as f64 / steps as f64,
                        2.0 * PI * pa as f64 / steps as f64,
                    );
                    let y = Complex64::from_polar(
                        epsilon * pa as f64 / steps as f64,
                        2.0 * PI * pr as f64 / steps as f64,
                    );
                    min_mod = min_mod.min(denominator.eval(x, y).norm());
                }
            }
        }
        if min_mod < 1e-9 {
            return Err(Error::DenominatorVanishes { min_modulus: min_mod });
        }

        let m = numerator.x_valuation();
        let reduced = numerator.div_x_pow(m);
        let unperturbed = reduced.y_poly_at(Complex64::default());
        if unperturbed.is_zero() {
            return Err(Error::InvalidInput("X/x^m vanishes identically on x = 0"));
        }
        let ord = unperturbed
            .coeffs()
            .iter()
            .position(|c| c.norm() > 0.0)
            .unwrap_or(0);
        if ord < 2 {
            return Err(Error::InvalidInput(
                "unperturbed field must vanish to order >= 2 at the origin",
            ));
        }
        let nu = ord - 1;

        // Generic-fiber branch count and monodromy.
        let probe_r = 0.2 * delta;
        let probe = Complex64::from_polar(probe_r, 0.39);
        let base = local_roots(&reduced, probe, epsilon)?;
        let n_fiber = base.len();
        let ramification = monodromy_order(&reduced, probe_r, 0.39, epsilon)?;

        Ok(UnfoldingField {
            numerator,
            denominator,
            m,
            n_fiber,
            nu,
            ramification,
            delta,
            epsilon,
            reduced,
        })
    }

    pub fn is_transversal(&self) -> bool {
        self.ramification == 1
    }

    /// The reduced field value `f₀(x,y) = numerator/(x^m · denominator)`.
    pub fn eval_reduced(&self, x: Complex64, y: Complex64) -> Complex64 {
        self.reduced.eval(x, y) / self.denominator.eval(x, y)
    }

    /// Field on the fiber `x = x₀` (of `X₀ = X / x^m`), for integration.
    pub fn fiber_field(&self, x: Complex64) -> impl Fn(Complex64) -> Complex64 + '_ {
        move |y| self.reduced.eval(x, y) / self.denominator.eval(x, y)
    }

    /// Reduced numerator (`x^m` divided out).
    pub fn reduced_numerator(&self) -> &BiPoly {
        &self.reduced
    }

    /// Track the branches of the fixed set along a ray.
    pub fn fixed_curves(&self, grid: &RayGrid) -> Result<Vec<FixedCurve>> {
        let mut samples_per_branch: Vec<Vec<(Complex64, Complex64)>> = Vec::new();
        let mut mults: Vec<usize> = Vec::new();
        let mut prev: Vec<Complex64> = Vec::new();
        for i in 0..grid.count {
            let r = grid.r_start * grid.factor.powi(i as i32);
            let x = grid.ray * r;
            let here = local_roots(&self.reduced, x, self.epsilon)?;
            if i == 0 {
                for (loc, mult) in &here {
                    samples_per_branch.push(vec![(x, *loc)]);
                    mults.push(*mult);
                    prev.push(*loc);
                }
            } else {
                match match_branches(&prev, &mults, &here) {
                    Ok(matched) => {
                        for (b, loc) in matched.into_iter().enumerate() {
                            samples_per_branch[b].push((x, loc));
                            prev[b] = loc;
                        }
                    }
                    // Tangent branches eventually fall inside the root
                    // cluster tolerance; once a few levels are tracked the
                    // grid simply stops there.
                    Err(e) => {
                        if i >= 6 {
                            break;
                        }
                        return Err(e);
                    }
                }
            }
        }
        // Deterministic ids: order branches by their outermost location.
        let mut order: Vec<usize> = (0..samples_per_branch.len()).collect();
        order.sort_by(|&a, &b| {
            let za = samples_per_branch[a][0].1;
            let zb = samples_per_branch[b][0].1;
            za.re.partial_cmp(&zb.re)
                .unwrap_or(core::cmp::Ordering::Equal)
                .then(za.im.partial_cmp(&zb.im).unwrap_or(core::cmp::Ordering::Equal))
        });
        Ok(order
            .into_iter()
            .enumerate()
            .map(|(id, b)| FixedCurve {
                id,
                multiplicity: mults[b],
                ray: grid.ray,
                samples: samples_per_branch[b].clone(),
            })
            .collect())
    }

    /// γ(x) for one curve, polished from the nearest sample (or a supplied
    /// hint, for continuation off the sampled ray).
    pub fn curve_value(
        &self,
        curve: &FixedCurve,
        x: Complex64,
        hint: Option<Complex64>,
    ) -> Result<Complex64> {
        let seed = hint.unwrap_or_else(|| {
            curve
                .samples
                .iter()
                .min_by(|(xa, _), (xb, _)| {
                    let da = (xa - x).norm();
                    let db = (xb - x).norm();
                    da.partial_cmp(&db).unwrap_or(core::cmp::Ordering::Equal)
                })
                .map(|&(_, g)| g)
                .unwrap_or_default()
        });
        let p = self.reduced.y_poly_at(x);
        polish_multiple(&p, seed, curve.multiplicity)
    }

    /// `Res(X, (x, γ_j(x)))` — the residue of the dual form of the fiber
    /// field at the tracked branch.
    pub fn residue_at(
        &self,
        curve: &FixedCurve,
        x: Complex64,
        hint: Option<Complex64>,
    ) -> Result<Complex64> {
        let y0 = self.curve_value(curve, x, hint)?;
        let num = self.reduced.y_poly_at(x);
        let den = self.denominator.y_poly_at(x);
        // m > 0 contributes x^m to the 1-form; analysis applies to X₀.
        residue_rational(&den, &num, y0, curve.multiplicity)
    }

    /// Petals of `X₀|_{x=0}` on the ε-disk.
    pub fn petals(&self, eps: f64) -> Vec<Petal> {
        let p0 = self.reduced.y_poly_at(Complex64::default());
        let a = p0.coeffs()[self.nu + 1] / self.denominator.eval(Complex64::default(), Complex64::default());
        let nu = self.nu as f64;
        let mut petals = Vec::with_capacity(2 * self.nu);
        let base = -a.arg() / nu;
        for j in 0..2 * self.nu {
            let theta = normalize_angle(base + PI * j as f64 / nu);
            // attracting iff a e^{iνθ} ∈ ℝ⁻
            let phase = a * Complex64::from_polar(1.0, nu * theta);
            petals.push(Petal {
                index: j,
                bisecting_angle: theta,
                attracting: phase.re < 0.0,
                radius: eps,
            });
        }
        petals.sort_by(|p, q| {
            p.bisecting_angle
                .partial_cmp(&q.bisecting_angle)
                .unwrap_or(core::cmp::Ordering::Equal)
        });
        for (j, p) in petals.iter_mut().enumerate() {
            p.index = j;
        }
        petals
    }

    /// Build the recursive dynamical splitting. Requires a transversal
    /// input; pre-ramify `x ↦ x^k` otherwise.
    pub fn dynamical_splitting(&self, curves: &[FixedCurve]) -> Result<SplittingNode> {
        if !self.is_transversal() {
            return Err(Error::NotTransversal { ramification: self.ramification });
        }
        if self.n_fiber == 0 {
            return Err(Error::InvalidInput("no singular branches inside the polydisk"));
        }
        let den00 = self.denominator.eval(Complex64::default(), Complex64::default());
        let branches: Vec<BranchRef> = curves
            .iter()
            .map(|c| BranchRef { id: c.id, multiplicity: c.multiplicity })
            .collect();
        let ctx = NodeCtx {
            g: self.reduced.clone(),
            label: String::from("0"),
            shifts: Vec::new(),
            depth: 0,
            e_ext: self.m,
            branches,
        };
        build_node(self, ctx, den00, curves)
    }

    /// Union over compact-like nodes of the pulled-back instability
    /// directions of their polynomial fields, plus the closed-form
    /// directions of non-parabolic exterior sets.
    pub fn instability_set(
        &self,
        tree: &SplittingNode,
        budget: &IntegrationBudget,
    ) -> Result<Vec<TaggedDirection>> {
        let mut out: Vec<TaggedDirection> = Vec::new();
        let mut push = |dir: TaggedDirection, out: &mut Vec<TaggedDirection>| {
            if !out.iter().any(|d| (d.lambda - dir.lambda).norm() < 1e-9) {
                out.push(dir);
            }
        };
        for node in tree.walk() {
            match node.kind {
                NodeKind::CompactLike => {
                    let assoc = node.poly_field.as_ref().expect("compact node has a field");
                    let field = PolyVectorField::analyze(&assoc.poly)?;
                    let dirs = field.instability_directions(budget)?;
                    for rec in dirs {
                        // λ ∈ 𝒰 ⇔ λ^e ∈ 𝒰¹(P_β): pull back through λ^e.
                        for root in nth_roots(rec.mu, assoc.exponent) {
                            push(
                                TaggedDirection {
                                    lambda: root,
                                    source: node.label.clone(),
                                    shooting_confirmed: true,
                                },
                                &mut out,
                            );
                        }
                    }
                }
                NodeKind::Exterior if node.terminal && node.nu_local == 0 => {
                    // Non-parabolic exterior: λ^e h(0) ∈ iℝ.
                    let h0 = node
                        .poly_field
                        .as_ref()
                        .map(|f| f.poly.coeffs().get(1).copied().unwrap_or_default())
                        .unwrap_or_default();
                    if h0.norm() == 0.0 || node.e == 0 {
                        continue;
                    }
                    for target in [
                        Complex64::new(0.0, 1.0) * h0.conj() / h0.norm(),
                        Complex64::new(0.0, -1.0) * h0.conj() / h0.norm(),
                    ] {
                        for root in nth_roots(target, node.e) {
                            push(
                                TaggedDirection {
                                    lambda: root,
                                    source: node.label.clone(),
                                    shooting_confirmed: false,
                                },
                                &mut out,
                            );
                        }
                    }
                }
                _ => {}
            }
        }
        out.sort_by(|a, b| {
            a.lambda.arg().partial_cmp(&b.lambda.arg()).unwrap_or(core::cmp::Ordering::Equal)
        });
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug)]
struct BranchRef {
    id: usize,
    multiplicity: usize,
}

struct NodeCtx {
    /// Node numerator in adapted coordinates: `unit · Π (t − γ̃_j)^{s_j}`.
    g: BiPoly,
    label: String,
    shifts: Vec<Complex64>,
    depth: usize,
    e_ext: usize,
    branches: Vec<BranchRef>,
}

fn build_node(
    field: &UnfoldingField,
    ctx: NodeCtx,
    den00: Complex64,
    curves: &[FixedCurve],
) -> Result<SplittingNode> {
    if ctx.depth > DEPTH_LIMIT {
        return Err(Error::DepthExceeded { depth: DEPTH_LIMIT });
    }
    let sum_s: usize = ctx.branches.iter().map(|b| b.multiplicity).sum();
    let nu_local = sum_s - 1;

    let exterior_terminal = ctx.branches.len() == 1;
    let mut seed = SplittingNode {
        kind: NodeKind::Seed,
        label: ctx.label.clone(),
        chart: ctx.shifts.clone(),
        e: ctx.e_ext,
        nu_local,
        radii: NodeRadii { eta: 1.0, rho: 0.0, eta_zeta: Vec::new() },
        poly_field: None,
        branch_ids: ctx.branches.iter().map(|b| b.id).collect(),
        terminal: exterior_terminal,
        children: Vec::new(),
    };

    // Exterior node. For a terminal node with a single simple branch the
    // linear coefficient h(0) of `G(0,t) = h·t + …` feeds the closed-form
    // instability directions, so record G(0,·)/den(0,0) as its "field".
    let g0 = ctx.g.y_poly_at(Complex64::default());
    let exterior = SplittingNode {
        kind: NodeKind::Exterior,
        label: ctx.label.clone(),
        chart: ctx.shifts.clone(),
        e: ctx.e_ext,
        nu_local,
        radii: NodeRadii { eta: 1.0, rho: 0.0, eta_zeta: Vec::new() },
        poly_field: Some(AssociatedField {
            exponent: ctx.e_ext,
            poly: g0.scale(den00.finv()),
        }),
        branch_ids: seed.branch_ids.clone(),
        terminal: exterior_terminal,
        children: Vec::new(),
    };
    seed.children.push(exterior);
    if exterior_terminal {
        return Ok(seed);
    }

    // Blow up t = x·w. Rows below Σ s_j of H vanish identically up to the
    // Taylor-shift roundoff of earlier levels.
    let mut h = ctx.g.blowup_y();
    let worst = h.cleanup_rows_below(sum_s, 1e-8);
    if worst > 1e-8 {
        return Err(Error::NonConvergence { residual: worst, tolerance: 1e-8 });
    }
    if h.x_valuation() != sum_s {
        return Err(Error::InvalidInput("blow-up valuation mismatch"));
    }
    let p_row = ComplexPoly::new(h.rows()[sum_s].clone());
    if p_row.degree() != sum_s {
        return Err(Error::InvalidInput("associated polynomial degree mismatch"));
    }
    let p_beta = p_row.scale(den00.finv());
    let e_compact = ctx.e_ext + nu_local;

    // Cluster values S_β with the 1e-6 coalescing policy.
    let clusters = roots(&p_row, TOL_S_CLUSTER)?;
    let s_values: Vec<Complex64> = clusters.iter().map(|c| c.location).collect();

    // Radii policy: ρ = 4·max|S| + 4, η_ζ = ¼ · min pairwise distance.
    let rho = 4.0 * s_values.iter().fold(0.0f64, |m, z| m.max(z.norm())) + 4.0;
    let mut min_pair = f64::INFINITY;
    for i in 0..s_values.len() {
        for j in i + 1..s_values.len() {
            min_pair = min_pair.min((s_values[i] - s_values[j]).norm());
        }
    }
    let eta_zeta_val = if min_pair.is_finite() { 0.25 * min_pair } else { 1.0 };

    // Assign branches to clusters using the tracked curves at a probe x.
    let mut assignment: Vec<Vec<BranchRef>> = vec![Vec::new(); clusters.len()];
    for b in &ctx.branches {
        let curve = &curves[b.id];
        let k = assign_cluster(field, curve, &ctx.shifts, &s_values)?;
        assignment[k].push(*b);
    }
    for (k, cl) in clusters.iter().enumerate() {
        let total: usize = assignment[k].iter().map(|b| b.multiplicity).sum();
        if total != cl.multiplicity {
            return Err(Error::BranchCollision);
        }
    }

    let mut compact = SplittingNode {
        kind: NodeKind::CompactLike,
        label: ctx.label.clone(),
        chart: ctx.shifts.clone(),
        e: e_compact,
        nu_local,
        radii: NodeRadii {
            eta: 1.0,
            rho,
            eta_zeta: vec![eta_zeta_val; clusters.len()],
        },
        poly_field: Some(AssociatedField { exponent: e_compact, poly: p_beta }),
        branch_ids: seed.branch_ids.clone(),
        terminal: false,
        children: Vec::new(),
    };

    let reduced = h.div_x_pow(sum_s);
    for (k, cluster) in clusters.iter().enumerate() {
        let zeta = cluster.location;
        let g_child = reduced.shift_y(zeta);
        let mut shifts = ctx.shifts.clone();
        shifts.push(zeta);
        let child_ctx = NodeCtx {
            g: g_child,
            label: format!("{}{}", ctx.label, k),
            shifts,
            depth: ctx.depth + 1,
            e_ext: e_compact,
            branches: assignment[k].clone(),
        };
        compact.children.push(build_node(field, child_ctx, den00, curves)?);
    }
    seed.children.push(compact);
    Ok(seed)
}

/// Nearest-continuation matching of the previous branch positions onto the
/// roots of the next fiber; ambiguity or a multiplicity change is an error.
fn match_branches(
    prev: &[Complex64],
    mults: &[usize],
    here: &[(Complex64, usize)],
) -> Result<Vec<Complex64>> {
    if here.len() != prev.len() {
        return Err(Error::BranchCollision);
    }
    let mut used = vec![false; here.len()];
    let mut out = Vec::with_capacity(prev.len());
    for (b, p) in prev.iter().enumerate() {
        let mut best = usize::MAX;
        let mut best_d = f64::INFINITY;
        let mut second = f64::INFINITY;
        for (k, (loc, _)) in here.iter().enumerate() {
            let d = (loc - p).norm();
            if d < best_d {
                second = best_d;
                best_d = d;
                best = k;
            } else if d < second {
                second = d;
            }
        }
        if used[best] || (here.len() > 1 && second < 2.0 * best_d) || here[best].1 != mults[b] {
            return Err(Error::BranchCollision);
        }
        used[best] = true;
        out.push(here[best].0);
    }
    Ok(out)
}

/// Pick the cluster whose S-value matches the branch derivative at a probe.
fn assign_cluster(
    field: &UnfoldingField,
    curve: &FixedCurve,
    shifts: &[Complex64],
    s_values: &[Complex64],
) -> Result<usize> {
    if s_values.len() == 1 {
        return Ok(0);
    }
    for (x, gamma0) in curve.samples.iter().skip(2) {
        let gamma = field.curve_value(curve, *x, Some(*gamma0)).unwrap_or(*gamma0);
        // Node coordinate t = (γ − Σ ζ_l x^l)/x^k, then w = t/x.
        let mut t = gamma;
        for &z in shifts {
            t = t / *x - z;
        }
        let w = t / *x;
        let mut best = usize::MAX;
        let mut best_d = f64::INFINITY;
        let mut second = f64::INFINITY;
        for (k, s) in s_values.iter().enumerate() {
            let d = (w - s).norm();
            if d < best_d {
                second = best_d;
                best_d = d;
                best = k;
            } else if d < second {
                second = d;
            }
        }
        if best_d * 4.0 < second {
            return Ok(best);
        }
    }
    Err(Error::BranchCollision)
}

/// Roots of the reduced numerator inside the working y-disk at fixed x.
fn local_roots(
    reduced: &BiPoly,
    x: Complex64,
    epsilon: f64,
) -> Result<Vec<(Complex64, usize)>> {
    let p = reduced.y_poly_at(x);
    if p.is_zero() || p.degree() == 0 {
        return Ok(Vec::new());
    }
    let all = roots(&p, 1e-7)?;
    Ok(all
        .into_iter()
        .filter(|r| r.location.norm() <= epsilon)
        .map(|r| (r.location, r.multiplicity))
        .collect())
}

/// Monodromy order of the branch set along |x| = r.
fn monodromy_order(reduced: &BiPoly, r: f64, angle0: f64, epsilon: f64) -> Result<usize> {
    let steps = 96;
    let start = local_roots(reduced, Complex64::from_polar(r, angle0), epsilon)?;
    if start.len() <= 1 {
        return Ok(1);
    }
    let mut current: Vec<Complex64> = start.iter().map(|(z, _)| *z).collect();
    let original = current.clone();
    let mut perm: Vec<usize> = (0..current.len()).collect();
    for i in 1..=steps {
        let theta = angle0 + 2.0 * PI * i as f64 / steps as f64;
        let here = local_roots(reduced, Complex64::from_polar(r, theta), epsilon)?;
        if here.len() != current.len() {
            return Err(Error::BranchCollision);
        }
        for c in current.iter_mut() {
            let mut best = Complex64::default();
            let mut best_d = f64::INFINITY;
            for (z, _) in &here {
                let d = (z - *c).norm();
                if d < best_d {
                    best_d = d;
                    best = *z;
                }
            }
            *c = best;
        }
        let _ = &perm;
    }
    // Map final positions back to starting labels.
    let mut total_perm = vec![0usize; current.len()];
    for (i, c) in current.iter().enumerate() {
        let mut best = usize::MAX;
        let mut best_d = f64::INFINITY;
        for (j, o) in original.iter().enumerate() {
            let d = (o - c).norm();
            if d < best_d {
                best_d = d;
                best = j;
            }
        }
        total_perm[i] = best;
    }
    perm = total_perm;
    // Order of the permutation.
    let mut order = 1usize;
    let mut seen = vec![false; perm.len()];
    for i in 0..perm.len() {
        if seen[i] {
            continue;
        }
        let mut len = 0usize;
        let mut j = i;
        while !seen[j] {
            seen[j] = true;
            j = perm[j];
            len += 1;
        }
        order = lcm(order, len.max(1));
    }
    Ok(order)
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Newton polish of an s-fold root of `p` against `p^{(s−1)}`.
fn polish_multiple(p: &ComplexPoly, seed: Complex64, multiplicity: usize) -> Result<Complex64> {
    let target = p.derivative_n(multiplicity - 1);
    let mut z = seed;
    for _ in 0..100 {
        let (v, d) = target.eval_with_derivative(z);
        if d.norm() == 0.0 {
            break;
        }
        let step = v / d;
        z -= step;
        if step.norm() <= 1e-16 * z.norm().max(1.0) {
            break;
        }
    }
    let res = target.eval(z).norm();
    let bound = 1e-6 * target.max_coeff_abs().max(1e-300) * z.norm().max(1.0).powi(target.degree() as i32);
    if res > bound {
        return Err(Error::NonConvergence { residual: res, tolerance: bound });
    }
    Ok(z)
}

/// Residue of `g(y)/p(y) dy` at an s-fold root ζ of `p`: the coefficient of
/// `u^{s−1}` in `g(ζ+u) · u^s / p(ζ+u)`.
fn residue_rational(
    g: &ComplexPoly,
    p: &ComplexPoly,
    zeta: Complex64,
    multiplicity: usize,
) -> Result<Complex64> {
    let s = multiplicity;
    let one = Complex64::new(1.0, 0.0);
    let b = p.compose_affine(one, zeta);
    let bc = b.coeffs();
    if bc.len() <= s || bc[s].norm() < 1e-10 * b.max_coeff_abs() {
        return Err(Error::DegenerateDenominator);
    }
    // Invert b/u^s as a power series up to order s−1.
    let mut inv = vec![Complex64::default(); s];
    inv[0] = bc[s].finv();
    for k in 1..s {
        let mut acc = Complex64::default();
        for j in 1..=k {
            let bj = bc.get(s + j).copied().unwrap_or_default();
            acc += bj * inv[k - j];
        }
        inv[k] = -acc / bc[s];
    }
    let gs = g.compose_affine(one, zeta);
    let gc = gs.coeffs();
    let mut res = Complex64::default();
    for j in 0..s {
        let gj = gc.get(j).copied().unwrap_or_default();
        res += gj * inv[s - 1 - j];
    }
    Ok(res)
}

fn nth_roots(z: Complex64, n: usize) -> Vec<Complex64> {
    if n == 0 {
        return vec![];
    }
    let r = z.norm().powf(1.0 / n as f64);
    let base = z.arg() / n as f64;
    (0..n)
        .map(|k| Complex64::from_polar(r, base + 2.0 * PI * k as f64 / n as f64))
        .collect()
}

fn normalize_angle(theta: f64) -> f64 {
    let mut t = theta % (2.0 * PI);
    if t < 0.0 {
        t += 2.0 * PI;
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;

    /// y (y - x²) (y - x) = y³ − (x² + x) y² + x³ y
    fn example_splitting_field() -> UnfoldingField {
        let rows = vec![
            vec![c64(0.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0)],
            vec![c64(0.0, 0.0), c64(0.0, 0.0), c64(-1.0, 0.0)],
            vec![c64(0.0, 0.0), c64(0.0, 0.0), c64(-1.0, 0.0)],
            vec![c64(0.0, 0.0), c64(1.0, 0.0)],
        ];
        UnfoldingField::load(BiPoly::new(rows), BiPoly::constant(c64(1.0, 0.0)), 0.5, 0.5)
            .unwrap()
    }

    /// (y² − x)/(1 + a y)
    fn quadratic_field(a: Complex64) -> UnfoldingField {
        let num = BiPoly::new(vec![
            vec![c64(0.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0)],
            vec![c64(-1.0, 0.0)],
        ]);
        let den = BiPoly::new(vec![vec![c64(1.0, 0.0), a]]);
        UnfoldingField::load(num, den, 0.2, 0.6).unwrap()
    }

    /// y² − x² (the ramified quadratic after x ↦ x², rescaled: branches ±x)
    fn split_quadratic() -> UnfoldingField {
        let num = BiPoly::new(vec![
            vec![c64(0.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0)],
            vec![],
            vec![c64(-1.0, 0.0)],
        ]);
        UnfoldingField::load(num, BiPoly::constant(c64(1.0, 0.0)), 0.3, 0.6).unwrap()
    }

    #[test]
    fn load_invariants() {
        let f = example_splitting_field();
        assert_eq!((f.n_fiber, f.m, f.nu), (3, 0, 2));
        assert!(f.is_transversal());

        let q = quadratic_field(c64(1.0, 0.0));
        assert_eq!((q.n_fiber, q.m, q.nu), (2, 0, 1));
        assert_eq!(q.ramification, 2);

        // x·y²: N = 1, m = 1, ν = 1.
        let num = BiPoly::new(vec![vec![], vec![c64(0.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0)]]);
        let xy2 = UnfoldingField::load(num, BiPoly::constant(c64(1.0, 0.0)), 0.4, 0.5).unwrap();
        assert_eq!((xy2.n_fiber, xy2.m, xy2.nu), (1, 1, 1));
    }

    #[test]
    fn fixed_curves_of_example() {
        let f = example_splitting_field();
        let curves = f.fixed_curves(&RayGrid::for_disk(f.delta)).unwrap();
        assert_eq!(curves.len(), 3);
        assert!(curves.iter().all(|c| c.multiplicity == 1));
        // Verify the three branches are y = 0, y = x², y = x at a sample.
        let (x, _) = curves[0].samples[0];
        let mut found = [false; 3];
        for c in &curves {
            let g = f.curve_value(c, x, None).unwrap();
            if g.norm() < 1e-10 {
                found[0] = true;
            }
            if (g - x * x).norm() < 1e-10 {
                found[1] = true;
            }
            if (g - x).norm() < 1e-10 {
                found[2] = true;
            }
        }
        assert_eq!(found, [true; 3]);
    }

    #[test]
    fn fixed_curves_multiplicity() {
        // (y − x)² (y + x) = y³ − y²x − yx² + x³
        let num = BiPoly::new(vec![
            vec![c64(0.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0)],
            vec![c64(0.0, 0.0), c64(0.0, 0.0), c64(-1.0, 0.0)],
            vec![c64(0.0, 0.0), c64(-1.0, 0.0)],
            vec![c64(1.0, 0.0)],
        ]);
        let f = UnfoldingField::load(num, BiPoly::constant(c64(1.0, 0.0)), 0.3, 0.6).unwrap();
        let curves = f.fixed_curves(&RayGrid::for_disk(f.delta)).unwrap();
        assert_eq!(curves.len(), 2);
        let mults: Vec<usize> = curves.iter().map(|c| c.multiplicity).collect();
        assert!(mults.contains(&2) && mults.contains(&1));
    }

    #[test]
    fn quadratic_branches_along_negative_ray() {
        // γ_± = ±i√|x| along x ∈ −(0,δ).
        let f = quadratic_field(c64(1.0, 0.0));
        let grid = RayGrid::for_disk(f.delta).with_ray(c64(-1.0, 0.0));
        let curves = f.fixed_curves(&grid).unwrap();
        assert_eq!(curves.len(), 2);
        let (x, _) = curves[0].samples[0];
        let t = (-x.re).sqrt();
        let got: Vec<Complex64> =
            curves.iter().map(|c| f.curve_value(c, x, None).unwrap()).collect();
        assert!(got.iter().any(|g| (g - c64(0.0, t)).norm() < 1e-10));
        assert!(got.iter().any(|g| (g - c64(0.0, -t)).norm() < 1e-10));
    }

    #[test]
    fn residue_function_examples() {
        // §9 with a = 0 at x = -0.01: Res(x, 0.1i) = 1/(0.2i) = −5i.
        let f = quadratic_field(c64(0.0, 0.0));
        let grid = RayGrid::for_disk(f.delta).with_ray(c64(-1.0, 0.0));
        let curves = f.fixed_curves(&grid).unwrap();
        let x = c64(-0.01, 0.0);
        for c in &curves {
            let g = f.curve_value(c, x, None).unwrap();
            let r = f.residue_at(c, x, None).unwrap();
            let expect = (2.0 * g).finv();
            assert!((r - expect).norm() < 1e-10, "res {r} vs {expect}");
        }

        // a = 1: Res(x, ±√x) = ½(±1/√x + 1).
        let f1 = quadratic_field(c64(1.0, 0.0));
        let grid1 = RayGrid::for_disk(f1.delta).with_ray(c64(1.0, 0.0));
        let curves1 = f1.fixed_curves(&grid1).unwrap();
        let x1 = c64(0.04, 0.0);
        for c in &curves1 {
            let g = f1.curve_value(c, x1, None).unwrap();
            let r = f1.residue_at(c, x1, None).unwrap();
            let expect = 0.5 * (g.finv() + 1.0);
            assert!((r - expect).norm() < 1e-10);
        }

        // x-independent: f = y²(y−1): residue −1 at the y = 0 branch for
        // every x.
        let num = BiPoly::new(vec![vec![
            c64(0.0, 0.0),
            c64(0.0, 0.0),
            c64(-1.0, 0.0),
            c64(1.0, 0.0),
        ]]);
        let fc = UnfoldingField::load(num, BiPoly::constant(c64(1.0, 0.0)), 0.3, 0.5).unwrap();
        let curves = fc.fixed_curves(&RayGrid::for_disk(fc.delta)).unwrap();
        assert_eq!(curves.len(), 1);
        assert_eq!(curves[0].multiplicity, 2);
        let r = fc.residue_at(&curves[0], c64(0.05, 0.02), None).unwrap();
        assert!((r - c64(-1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn petal_layout() {
        // f(0,y) = y²: attracting petal bisected by ℝ⁻, repelling by ℝ⁺.
        let f = quadratic_field(c64(0.0, 0.0));
        let petals = f.petals(0.5);
        assert_eq!(petals.len(), 2);
        let attracting: Vec<&Petal> = petals.iter().filter(|p| p.attracting).collect();
        assert_eq!(attracting.len(), 1);
        assert!((attracting[0].bisecting_angle - PI).abs() < 1e-12);

        // f(0,y) = −y²: flags swapped.
        let num = BiPoly::new(vec![
            vec![c64(0.0, 0.0), c64(0.0, 0.0), c64(-1.0, 0.0)],
            vec![c64(1.0, 0.0)],
        ]);
        let g = UnfoldingField::load(num, BiPoly::constant(c64(1.0, 0.0)), 0.2, 0.6).unwrap();
        let petals = g.petals(0.5);
        let attracting: Vec<&Petal> = petals.iter().filter(|p| p.attracting).collect();
        assert_eq!(attracting.len(), 1);
        assert!(attracting[0].bisecting_angle.abs() < 1e-12);

        // f(0,y) = y³: 4 petals spaced π/2.
        let num = BiPoly::new(vec![vec![
            c64(0.0, 0.0),
            c64(0.0, 0.0),
            c64(0.0, 0.0),
            c64(1.0, 0.0),
        ]]);
        let h = UnfoldingField::load(num, BiPoly::constant(c64(1.0, 0.0)), 0.2, 0.6).unwrap();
        let petals = h.petals(0.5);
        assert_eq!(petals.len(), 4);
        for pair in petals.windows(2) {
            assert!((pair[1].bisecting_angle - pair[0].bisecting_angle - PI / 2.0).abs() < 1e-12);
        }
        // a e^{iθν} alternates sign: petals alternate attracting/repelling.
        for pair in petals.windows(2) {
            assert_ne!(pair[0].attracting, pair[1].attracting);
        }
    }

    #[test]
    fn splitting_of_reference_example() {
        let f = example_splitting_field();
        let curves = f.fixed_curves(&RayGrid::for_disk(f.delta)).unwrap();
        let tree = f.dynamical_splitting(&curves).unwrap();

        // Exponents: e(ℰ₀) = 0; e(𝒞₀) = e(ℰ₀₀) = e(ℰ₀₁) = 2;
        // e(𝒞₀₀) = e(ℰ₀₀₀) = e(ℰ₀₀₁) = 3.
        let mut ext_exponents = Vec::new();
        let mut compact_exponents = Vec::new();
        for node in tree.walk() {
            match node.kind {
                NodeKind::Exterior => ext_exponents.push(node.e),
                NodeKind::CompactLike => compact_exponents.push(node.e),
                NodeKind::Seed => {}
            }
        }
        ext_exponents.sort_unstable();
        compact_exponents.sort_unstable();
        assert_eq!(ext_exponents, vec![0, 2, 2, 3, 3]);
        assert_eq!(compact_exponents, vec![2, 3]);

        // Associated fields: λ² w²(w−1) and −λ³ w'(w'−1), exactly.
        let compacts: Vec<&SplittingNode> =
            tree.walk().into_iter().filter(|n| n.kind == NodeKind::CompactLike).collect();
        let c0 = compacts.iter().find(|n| n.label == "0").unwrap();
        let f0 = c0.poly_field.as_ref().unwrap();
        assert_eq!(f0.exponent, 2);
        let expect0 = [c64(0.0, 0.0), c64(0.0, 0.0), c64(-1.0, 0.0), c64(1.0, 0.0)];
        for (a, b) in f0.poly.coeffs().iter().zip(expect0.iter()) {
            assert!((a - b).norm() < 1e-12, "C0 field {:?}", f0.poly.coeffs());
        }
        // −λ³ w'(w'−1) = λ³ (w' − w'²): coefficients [0, 1, −1].
        let c00 = compacts.iter().find(|n| n.label == "00").unwrap();
        let f00 = c00.poly_field.as_ref().unwrap();
        assert_eq!(f00.exponent, 3);
        let expect00 = [c64(0.0, 0.0), c64(1.0, 0.0), c64(-1.0, 0.0)];
        for (a, b) in f00.poly.coeffs().iter().zip(expect00.iter()) {
            assert!((a - b).norm() < 1e-12, "C00 field {:?}", f00.poly.coeffs());
        }

        // Exponent law on every compact node: e(𝒞) = e(ℰ) + ν(ℰ).
        fn check(node: &SplittingNode) {
            let ext = node.children.iter().find(|c| c.kind == NodeKind::Exterior);
            let compact = node.children.iter().find(|c| c.kind == NodeKind::CompactLike);
            if let (Some(e), Some(c)) = (ext, compact) {
                assert_eq!(c.e, e.e + e.nu_local);
                for seed in &c.children {
                    check(seed);
                }
            }
        }
        check(&tree);
    }

    #[test]
    fn splitting_terminal_monomial() {
        // f = y^{ν+1}: terminal at level 0, no compact-like nodes.
        let num = BiPoly::new(vec![vec![
            c64(0.0, 0.0),
            c64(0.0, 0.0),
            c64(0.0, 0.0),
            c64(1.0, 0.0),
        ]]);
        let f = UnfoldingField::load(num, BiPoly::constant(c64(1.0, 0.0)), 0.3, 0.5).unwrap();
        let curves = f.fixed_curves(&RayGrid::for_disk(f.delta)).unwrap();
        let tree = f.dynamical_splitting(&curves).unwrap();
        assert!(tree.terminal);
        assert!(tree.walk().iter().all(|n| n.kind != NodeKind::CompactLike));
    }

    #[test]
    fn splitting_rejects_ramified_input() {
        let f = quadratic_field(c64(0.0, 0.0));
        let grid = RayGrid::for_disk(f.delta).with_ray(c64(-1.0, 0.0));
        let curves = f.fixed_curves(&grid).unwrap();
        let err = f.dynamical_splitting(&curves).unwrap_err();
        assert!(matches!(err, Error::NotTransversal { ramification: 2 }));
    }

    #[test]
    fn splitting_of_split_quadratic() {
        // y² − x²: one blow-up level, 𝒞₀ field λ·(w²−1).
        let f = split_quadratic();
        let curves = f.fixed_curves(&RayGrid::for_disk(f.delta)).unwrap();
        assert_eq!(curves.len(), 2);
        let tree = f.dynamical_splitting(&curves).unwrap();
        let compacts: Vec<&SplittingNode> =
            tree.walk().into_iter().filter(|n| n.kind == NodeKind::CompactLike).collect();
        assert_eq!(compacts.len(), 1);
        let assoc = compacts[0].poly_field.as_ref().unwrap();
        assert_eq!(assoc.exponent, 1);
        let expect = [c64(-1.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0)];
        for (a, b) in assoc.poly.coeffs().iter().zip(expect.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn instability_set_dichotomy() {
        let budget = IntegrationBudget::default().with_max_time(200.0);

        // N = 1 family: 𝒰 = ∅.
        let num = BiPoly::new(vec![vec![
            c64(0.0, 0.0),
            c64(0.0, 0.0),
            c64(1.0, 0.0),
        ]]);
        let f = UnfoldingField::load(num, BiPoly::constant(c64(1.0, 0.0)), 0.3, 0.5).unwrap();
        let curves = f.fixed_curves(&RayGrid::for_disk(f.delta)).unwrap();
        let tree = f.dynamical_splitting(&curves).unwrap();
        let dirs = f.instability_set(&tree, &budget).unwrap();
        assert!(dirs.is_empty(), "{dirs:?}");

        // y² − x² (the pre-ramified §5 benchmark): compact field w² − 1 with
        // residues ±1/2 gives 𝒰 = {i, −i} in the ramified parameter.
        let g = split_quadratic();
        let curves = g.fixed_curves(&RayGrid::for_disk(g.delta)).unwrap();
        let tree = g.dynamical_splitting(&curves).unwrap();
        let dirs = g.instability_set(&tree, &budget).unwrap();
        let confirmed: Vec<&TaggedDirection> =
            dirs.iter().filter(|d| d.shooting_confirmed).collect();
        assert_eq!(confirmed.len(), 2, "{dirs:?}");
        assert!(confirmed.iter().any(|d| (d.lambda - c64(0.0, 1.0)).norm() < 1e-8));
        assert!(confirmed.iter().any(|d| (d.lambda - c64(0.0, -1.0)).norm() < 1e-8));
    }

    #[test]
    fn instability_set_of_reference_example() {
        let budget = IntegrationBudget::default().with_max_time(200.0);
        let f = example_splitting_field();
        let curves = f.fixed_curves(&RayGrid::for_disk(f.delta)).unwrap();
        let tree = f.dynamical_splitting(&curves).unwrap();
        let dirs = f.instability_set(&tree, &budget).unwrap();
        assert!(!dirs.is_empty());
        assert!(dirs.iter().any(|d| d.source == "0"));
    }

    #[test]
    fn branch_sum_matches_nu() {
        for field in [example_splitting_field(), split_quadratic()] {
            let curves = field.fixed_curves(&RayGrid::for_disk(field.delta)).unwrap();
            let total: usize = curves.iter().map(|c| c.multiplicity).sum();
            assert_eq!(total, field.nu + 1);
            assert_eq!(total, field.reduced_numerator().degree_y());
        }
    }

    #[test]
    fn compact_field_convergence() {
        // |X/|x|^e − X_β(x/|x|)| shrinks by ≥ 10× per decade of |x|.
        let f = example_splitting_field();
        let curves = f.fixed_curves(&RayGrid::for_disk(f.delta)).unwrap();
        let tree = f.dynamical_splitting(&curves).unwrap();
        let compacts: Vec<&SplittingNode> =
            tree.walk().into_iter().filter(|n| n.kind == NodeKind::CompactLike).collect();
        for node in compacts {
            let assoc = node.poly_field.as_ref().unwrap();
            let k = node.chart.len();
            let lambda = Complex64::from_polar(1.0, 0.3);
            let mut prev = f64::INFINITY;
            for decade in 1..=3 {
                let r = 0.04f64.powi(1) * 0.1f64.powi(decade - 1) * 0.5;
                let x = lambda * r;
                let mut max_err = 0.0f64;
                for i in 0..12 {
                    let w = Complex64::from_polar(
                        0.3 * node.radii.rho,
                        2.0 * PI * i as f64 / 12.0,
                    );
                    let y = {
                        // y = Σ ζ_l x^l + x^{k+1} w
                        let mut yy = w;
                        for &z in node.chart.iter().rev() {
                            yy = x * (yy + z);
                        }
                        x * yy
                    };
                    // ẇ = f(x,y)/(den · x^{k+1})
                    let fw = f.eval_reduced(x, y) / x.powi(k as i32 + 1);
                    let target = assoc.at(lambda).eval(w);
                    let err = (fw / r.powi(assoc.exponent as i32) - target).norm();
                    max_err = max_err.max(err);
                }
                assert!(
                    max_err < prev / 8.0 || max_err < 1e-12,
                    "node {} decade {}: {} !<< {}",
                    node.label,
                    decade,
                    max_err,
                    prev
                );
                prev = max_err;
            }
        }
    }
}
