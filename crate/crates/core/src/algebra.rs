//! Complex polynomial arithmetic, root finding with multiplicity clustering,
//! and residues of the dual 1-form `dw/P`.
//!
//! Roots are found by simultaneous iteration (Aberth–Ehrlich) from scaled
//! roots of unity followed by a Newton polish. Multiple roots are located as
//! simple roots of the appropriate derivative, which restores machine-level
//! accuracy that plain Newton cannot reach on an s-fold zero. Residues at
//! multiple roots use truncated power-series inversion; an independent
//! contour-quadrature oracle is provided for cross-checks.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

const EPS: f64 = f64::EPSILON;

/// Polynomial with complex coefficients, stored in ascending degree.
///
/// Normalisation keeps the trailing (highest-degree) coefficient nonzero;
/// the zero polynomial is the empty coefficient list.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexPoly {
    coeffs: Vec<Complex64>,
}

impl ComplexPoly {
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while let Some(c) = coeffs.last() {
            if c.norm_sqr() == 0.0 {
                coeffs.pop();
            } else {
                break;
            }
        }
        ComplexPoly { coeffs }
    }

    pub fn zero() -> Self {
        ComplexPoly { coeffs: Vec::new() }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(vec![c])
    }

    /// `lead · Π (w − r_k)^{m_k}`.
    pub fn from_roots(lead: Complex64, roots: &[(Complex64, usize)]) -> Self {
        let mut p = Self::constant(lead);
        for &(r, m) in roots {
            let factor = Self::new(vec![-r, Complex64::new(1.0, 0.0)]);
            for _ in 0..m {
                p = p.mul(&factor);
            }
        }
        p
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree of a normalised nonzero polynomial; 0 for the zero polynomial.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn leading(&self) -> Complex64 {
        self.coeffs.last().copied().unwrap_or_default()
    }

    pub fn max_coeff_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    pub fn eval(&self, w: Complex64) -> Complex64 {
        let mut acc = Complex64::default();
        for &c in self.coeffs.iter().rev() {
            acc = acc * w + c;
        }
        acc
    }

    pub fn eval_with_derivative(&self, w: Complex64) -> (Complex64, Complex64) {
        let mut v = Complex64::default();
        let mut d = Complex64::default();
        for &c in self.coeffs.iter().rev() {
            d = d * w + v;
            v = v * w + c;
        }
        (v, d)
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| c * k as f64)
            .collect();
        Self::new(coeffs)
    }

    /// k-th derivative.
    pub fn derivative_n(&self, k: usize) -> Self {
        let mut p = self.clone();
        for _ in 0..k {
            p = p.derivative();
        }
        p
    }

    /// `λ · P`, used to form the rotated fields `μY`.
    pub fn scale(&self, lambda: Complex64) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * lambda).collect())
    }

    /// `P(αw + β)`.
    pub fn compose_affine(&self, alpha: Complex64, beta: Complex64) -> Self {
        let mut acc = Self::zero();
        let arg = Self::new(vec![beta, alpha]);
        for &c in self.coeffs.iter().rev() {
            acc = acc.mul(&arg).add(&Self::constant(c));
        }
        acc
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = vec![Complex64::default(); n];
        for (k, slot) in coeffs.iter_mut().enumerate() {
            let a = self.coeffs.get(k).copied().unwrap_or_default();
            let b = other.coeffs.get(k).copied().unwrap_or_default();
            *slot = a + b;
        }
        Self::new(coeffs)
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut coeffs = vec![Complex64::default(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Self::new(coeffs)
    }

    /// Synthetic division by `(w − r)^m`; remainder is discarded.
    fn deflate(&self, r: Complex64, m: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        for _ in 0..m {
            let mut out = vec![Complex64::default(); coeffs.len().saturating_sub(1)];
            let mut carry = Complex64::default();
            for k in (0..coeffs.len()).rev() {
                if k == 0 {
                    break;
                }
                carry = coeffs[k] + carry * r;
                out[k - 1] = carry;
            }
            coeffs = out;
        }
        Self::new(coeffs)
    }
}

/// A polished root with its numerically detected multiplicity.
#[derive(Clone, Debug, PartialEq)]
pub struct RootCluster {
    pub location: Complex64,
    pub multiplicity: usize,
    /// Residual `|P(location)|` of the polished root, coefficient-normalised.
    pub condition: f64,
}

/// Residue of the dual form `dw/P` at one root cluster, in Fatou-time units.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidueValue {
    pub at: RootCluster,
    pub value: Complex64,
}

/// All roots of `p`, with roots closer than `tol_cluster · root scale`
/// merged into a single cluster of summed multiplicity. Clusters are sorted
/// by (Re, Im) so downstream subset indices are reproducible.
pub fn roots(p: &ComplexPoly, tol_cluster: f64) -> Result<Vec<RootCluster>> {
    if p.is_zero() || p.degree() == 0 {
        return Err(Error::InvalidInput("roots() needs degree >= 1"));
    }
    let scale = p.max_coeff_abs();
    let q = p.scale(Complex64::new(1.0 / scale, 0.0));
    let n = q.degree();

    let raw = aberth(&q);
    let root_scale = raw.iter().fold(1.0f64, |m, z| m.max(z.norm()));
    let tol_abs = tol_cluster * root_scale;

    // Multiple-root sieve: an s-fold root of q is a simple root of q^{(s-1)}
    // with q^{(j)} vanishing for j < s. Candidates come from the derivative's
    // own root set; acceptance thresholds scale like tol_abs^{s-j} with a
    // floor for evaluation noise. Near-multiple configurations inside the
    // tolerance are deliberately coalesced.
    let derivs: Vec<ComplexPoly> = {
        let mut d = vec![q.clone()];
        for k in 1..=n {
            let next = d[k - 1].derivative();
            d.push(next);
        }
        d
    };
    let mut accepted: Vec<(Complex64, usize)> = Vec::new();
    for s in (2..=n).rev() {
        let ds = &derivs[s - 1];
        if ds.is_zero() || ds.degree() == 0 {
            continue;
        }
        for z0 in aberth(ds) {
            let z = newton_polish(ds, z0, 80);
            if accepted
                .iter()
                .any(|&(a, m)| (z - a).norm() < 4.0 * tol_abs.max(1e-12) * m as f64 + tol_abs)
            {
                continue;
            }
            let local = tol_abs.max(1e-12) * z.norm().max(1.0);
            let mut ok = true;
            for (j, dj) in derivs.iter().enumerate().take(s) {
                let bound = value_scale(dj, z) * local.powi((s - j) as i32).max(1e-13);
                if dj.eval(z).norm() > bound {
                    ok = false;
                    break;
                }
            }
            if ok {
                accepted.push((z, s));
            }
        }
    }
    let covered: usize = accepted.iter().map(|&(_, m)| m).sum();
    if covered > n {
        return Err(Error::NonConvergence { residual: covered as f64, tolerance: n as f64 });
    }

    // Simple roots from the deflated polynomial, re-polished against q.
    let mut clusters: Vec<(Complex64, usize)> = accepted.clone();
    if covered < n {
        let mut deflated = q.clone();
        for &(z, m) in &accepted {
            deflated = deflated.deflate(z, m);
        }
        for z0 in aberth(&deflated) {
            let z = newton_polish(&q, newton_polish(&deflated, z0, 40), 80);
            clusters.push((z, 1));
        }
    }

    // Final condensation at the user tolerance.
    clusters.sort_by(|a, b| lex_cmp(a.0, b.0));
    let mut merged: Vec<(Complex64, usize)> = Vec::new();
    'outer: for (z, m) in clusters {
        for item in merged.iter_mut() {
            if (item.0 - z).norm() <= tol_abs.max(1e4 * EPS) {
                item.1 += m;
                continue 'outer;
            }
        }
        merged.push((z, m));
    }

    let mut out = Vec::with_capacity(merged.len());
    for (z0, m) in merged {
        let loc = if m > 1 {
            newton_polish(&derivs[m - 1], z0, 80)
        } else {
            z0
        };
        let residual = q.eval(loc).norm();
        let bound = 1e-6 * value_scale(&q, loc);
        if residual > bound {
            return Err(Error::NonConvergence { residual, tolerance: bound });
        }
        out.push(RootCluster { location: loc, multiplicity: m, condition: residual });
    }
    out.sort_by(|a, b| lex_cmp(a.location, b.location));
    let total: usize = out.iter().map(|r| r.multiplicity).sum();
    debug_assert_eq!(total, n);
    Ok(out)
}

fn value_scale(p: &ComplexPoly, z: Complex64) -> f64 {
    let r = z.norm().max(1.0);
    p.max_coeff_abs().max(EPS) * r.powi(p.degree() as i32) * (p.degree() + 1) as f64
}

/// (Re, Im) lexicographic comparison with a small absolute tolerance on the
/// real parts, so that roots on a common vertical line order by imaginary
/// part even when rounding leaves ~1e-16 debris in Re.
fn lex_cmp(a: Complex64, b: Complex64) -> core::cmp::Ordering {
    let tol = 1e-9 * a.norm().max(b.norm()).max(1.0);
    if (a.re - b.re).abs() > tol {
        a.re.partial_cmp(&b.re).unwrap_or(core::cmp::Ordering::Equal)
    } else {
        a.im.partial_cmp(&b.im).unwrap_or(core::cmp::Ordering::Equal)
    }
}

/// Aberth–Ehrlich simultaneous iteration; returns unpolished approximations.
fn aberth(p: &ComplexPoly) -> Vec<Complex64> {
    let n = p.degree();
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![-p.coeffs()[0] / p.coeffs()[1]];
    }
    let lead = p.leading().norm();
    let radius = 1.0
        + p.coeffs()
            .iter()
            .take(n)
            .fold(0.0f64, |m, c| m.max(c.norm() / lead));
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            let theta = 2.0 * core::f64::consts::PI * (k as f64 + 0.25) / n as f64 + 0.431;
            Complex64::from_polar(0.7 * radius, theta)
        })
        .collect();
    let mut delta = vec![Complex64::default(); n];
    for _ in 0..400 {
        let mut max_step = 0.0f64;
        for i in 0..n {
            let (v, d) = p.eval_with_derivative(z[i]);
            if v.norm() == 0.0 {
                delta[i] = Complex64::default();
                continue;
            }
            let newton = if d.norm() > 0.0 { v / d } else { Complex64::new(EPS, EPS) };
            let mut s = Complex64::default();
            for (j, &zj) in z.iter().enumerate() {
                if j != i {
                    let dz = z[i] - zj;
                    if dz.norm() > 1e-300 {
                        s += dz.finv();
                    }
                }
            }
            let denom = Complex64::new(1.0, 0.0) - newton * s;
            delta[i] = if denom.norm() > 1e-12 { newton / denom } else { newton };
            max_step = max_step.max(delta[i].norm());
        }
        for i in 0..n {
            z[i] -= delta[i];
        }
        let zmax = z.iter().fold(1.0f64, |m, w| m.max(w.norm()));
        if max_step < 1e-13 * zmax {
            break;
        }
    }
    z
}

fn newton_polish(p: &ComplexPoly, z0: Complex64, max_iter: usize) -> Complex64 {
    let mut z = z0;
    let mut best = z0;
    let mut best_res = f64::INFINITY;
    for _ in 0..max_iter {
        let (v, d) = p.eval_with_derivative(z);
        let res = v.norm();
        if res < best_res {
            best_res = res;
            best = z;
        }
        if res == 0.0 || d.norm() == 0.0 {
            break;
        }
        let step = v / d;
        z -= step;
        if step.norm() <= EPS * z.norm().max(1.0) {
            let (v2, _) = p.eval_with_derivative(z);
            if v2.norm() < best_res {
                best = z;
            }
            break;
        }
    }
    best
}

/// Residue of `dw/P` at a root cluster of `p`.
///
/// For a simple root this is `1/P'(ζ)`; for multiplicity `s` it is the
/// coefficient of `(w−ζ)^{s−1}` in the Taylor expansion of `(w−ζ)^s / P(w)`,
/// computed by power-series inversion of order `s`.
pub fn residue_of_dual_form(p: &ComplexPoly, root: &RootCluster) -> Result<ResidueValue> {
    let s = root.multiplicity;
    if s == 0 {
        return Err(Error::InvalidInput("multiplicity must be positive"));
    }
    let shifted = p.compose_affine(Complex64::new(1.0, 0.0), root.location);
    let b = shifted.coeffs();
    if b.len() <= s {
        return Err(Error::DegenerateDenominator);
    }
    let scale = shifted.max_coeff_abs();
    if b[s].norm() < 1e-10 * scale {
        return Err(Error::DegenerateDenominator);
    }
    let mut q = vec![Complex64::default(); s];
    q[0] = b[s].finv();
    for k in 1..s {
        let mut acc = Complex64::default();
        for j in 1..=k {
            let bj = b.get(s + j).copied().unwrap_or_default();
            acc += bj * q[k - j];
        }
        q[k] = -acc / b[s];
    }
    Ok(ResidueValue { at: root.clone(), value: q[s - 1] })
}

/// Residues at every root of `p`, in cluster order.
pub fn all_residues(p: &ComplexPoly, tol_cluster: f64) -> Result<Vec<ResidueValue>> {
    let rs = roots(p, tol_cluster)?;
    rs.iter().map(|r| residue_of_dual_form(p, r)).collect()
}

/// Trapezoidal contour quadrature of `(1/2πi) ∮ f dz` on the circle of the
/// given center and radius; exponentially convergent for analytic `f`.
pub fn contour_residue_oracle<F>(f: F, center: Complex64, radius: f64, n_samples: usize) -> Complex64
where
    F: Fn(Complex64) -> Complex64,
{
    let n = n_samples.max(64);
    let mut acc = Complex64::default();
    for k in 0..n {
        let theta = 2.0 * core::f64::consts::PI * k as f64 / n as f64;
        let offset = Complex64::from_polar(radius, theta);
        acc += f(center + offset) * offset;
    }
    acc / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn poly(re_coeffs: &[f64]) -> ComplexPoly {
        ComplexPoly::new(re_coeffs.iter().map(|&r| c64(r, 0.0)).collect())
    }

    #[test]
    fn factored_cubic_roots() {
        // w^3 - w^2 = w^2 (w - 1)
        let p = poly(&[0.0, 0.0, -1.0, 1.0]);
        let rs = roots(&p, 1e-7).unwrap();
        assert_eq!(rs.len(), 2);
        assert_eq!(rs[0].multiplicity, 2);
        assert!(rs[0].location.norm() < 1e-12);
        assert_eq!(rs[1].multiplicity, 1);
        assert!((rs[1].location - c64(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn quadratic_with_parameter() {
        // w^2 - x at x = -t^2, t = 0.1: roots ±0.1i
        let p = ComplexPoly::new(vec![c64(0.01, 0.0), c64(0.0, 0.0), c64(1.0, 0.0)]);
        let rs = roots(&p, 1e-7).unwrap();
        assert_eq!(rs.len(), 2);
        assert!((rs[0].location - c64(0.0, -0.1)).norm() < 1e-12);
        assert!((rs[1].location - c64(0.0, 0.1)).norm() < 1e-12);
    }

    #[test]
    fn near_double_cluster() {
        let eps = 1e-9;
        let p = ComplexPoly::from_roots(
            c64(1.0, 0.0),
            &[(c64(1.0, 0.0), 1), (c64(1.0 + eps, 0.0), 1)],
        );
        let rs = roots(&p, 1e-6).unwrap();
        assert_eq!(rs.len(), 1);
        assert_eq!(rs[0].multiplicity, 2);
        assert!((rs[0].location - c64(1.0, 0.0)).norm() < 1e-6);
    }

    #[test]
    fn residues_match_spec_examples() {
        // P = w^2 (w - 1): residue -1 at 0 (double), +1 at 1.
        let p = poly(&[0.0, 0.0, -1.0, 1.0]);
        let rs = roots(&p, 1e-7).unwrap();
        let r0 = residue_of_dual_form(&p, &rs[0]).unwrap();
        let r1 = residue_of_dual_form(&p, &rs[1]).unwrap();
        assert!((r0.value - c64(-1.0, 0.0)).norm() < 1e-10);
        assert!((r1.value - c64(1.0, 0.0)).norm() < 1e-10);

        // P = w^2: residue 0.
        let p2 = poly(&[0.0, 0.0, 1.0]);
        let rs2 = roots(&p2, 1e-7).unwrap();
        let r = residue_of_dual_form(&p2, &rs2[0]).unwrap();
        assert!(r.value.norm() < 1e-12);

        // P = w(w-1): -1 at 0, +1 at 1.
        let p3 = poly(&[0.0, -1.0, 1.0]);
        let rs3 = roots(&p3, 1e-7).unwrap();
        let v0 = residue_of_dual_form(&p3, &rs3[0]).unwrap().value;
        let v1 = residue_of_dual_form(&p3, &rs3[1]).unwrap().value;
        assert!((v0 - c64(-1.0, 0.0)).norm() < 1e-12);
        assert!((v1 - c64(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn contour_oracle_basics() {
        let one_over_w = |z: Complex64| z.finv();
        let v = contour_residue_oracle(one_over_w, c64(0.0, 0.0), 1.0, 64);
        assert!((v - c64(1.0, 0.0)).norm() < 1e-13);

        let f = |z: Complex64| (z * z * (z - 1.0)).finv();
        let v = contour_residue_oracle(f, c64(0.0, 0.0), 0.5, 256);
        assert!((v - c64(-1.0, 0.0)).norm() < 1e-10);

        // Residue of (1+ay)/(y^2-x) at y = sqrt(x), a = 2, x = 0.04.
        let a = c64(2.0, 0.0);
        let x = c64(0.04, 0.0);
        let g = move |y: Complex64| (1.0 + a * y) / (y * y - x);
        let v = contour_residue_oracle(g, c64(0.2, 0.0), 0.1, 256);
        assert!((v - c64(3.5, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn poly_algebra_examples() {
        let p = poly(&[0.0, 0.0, -1.0, 1.0]);
        assert_eq!(p.derivative(), poly(&[0.0, -2.0, 3.0]));

        let q = poly(&[0.0, -1.0, 1.0]).scale(c64(0.0, 1.0));
        assert!((q.eval(c64(2.0, 0.0)) - c64(0.0, 2.0)).norm() < 1e-15);

        let zeta = c64(0.3, -0.2);
        let sq = poly(&[0.0, 0.0, 1.0]).compose_affine(c64(1.0, 0.0), -zeta);
        let expect = ComplexPoly::from_roots(c64(1.0, 0.0), &[(zeta, 2)]);
        for (a, b) in sq.coeffs().iter().zip(expect.coeffs()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    fn random_separated_poly(rng: &mut ChaCha8Rng, deg: usize) -> (ComplexPoly, Vec<Complex64>) {
        loop {
            let rts: Vec<Complex64> = (0..deg)
                .map(|_| c64(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)))
                .collect();
            let separated = rts
                .iter()
                .enumerate()
                .all(|(i, a)| rts.iter().skip(i + 1).all(|b| (a - b).norm() > 0.15));
            if separated {
                let pairs: Vec<(Complex64, usize)> = rts.iter().map(|&r| (r, 1)).collect();
                return (ComplexPoly::from_roots(c64(1.0, 0.0), &pairs), rts);
            }
        }
    }

    #[test]
    fn residue_sum_vanishes_and_oracle_agrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..40 {
            let deg = rng.gen_range(2..=6);
            let (p, rts) = random_separated_poly(&mut rng, deg);
            let res = all_residues(&p, 1e-7).unwrap();
            let sum: Complex64 = res.iter().map(|r| r.value).sum();
            let scale: f64 = res.iter().map(|r| r.value.norm()).fold(0.0, f64::max);
            assert!(sum.norm() <= 1e-10 * scale.max(1.0), "sum {sum}");

            // Contour cross-check on the first root.
            let min_sep = rts
                .iter()
                .skip(1)
                .map(|r| (r - rts[0]).norm())
                .fold(f64::INFINITY, f64::min);
            let target = res
                .iter()
                .find(|r| (r.at.location - rts[0]).norm() < 1e-6)
                .unwrap();
            let pc = p.clone();
            let oracle = contour_residue_oracle(
                move |z| pc.eval(z).finv(),
                target.at.location,
                (0.4 * min_sep).min(0.5),
                512,
            );
            assert!(
                (oracle - target.value).norm() <= 1e-8 * target.value.norm().max(1.0),
                "oracle {oracle} vs {}",
                target.value
            );
        }
    }

    #[test]
    fn roots_recover_factored_multiplicities() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..25 {
            let n_distinct = rng.gen_range(1..=3usize);
            let mut pairs: Vec<(Complex64, usize)> = Vec::new();
            loop {
                pairs.clear();
                for _ in 0..n_distinct {
                    pairs.push((
                        c64(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)),
                        rng.gen_range(1..=3usize),
                    ));
                }
                let ok = pairs.iter().enumerate().all(|(i, a)| {
                    pairs.iter().skip(i + 1).all(|b| (a.0 - b.0).norm() > 0.4)
                });
                if ok {
                    break;
                }
            }
            let p = ComplexPoly::from_roots(c64(1.0, 0.0), &pairs);
            let rs = roots(&p, 1e-7).unwrap();
            assert_eq!(rs.len(), pairs.len(), "poly {:?}", pairs);
            let mut sorted = pairs.clone();
            sorted.sort_by(|a, b| lex_cmp(a.0, b.0));
            for (found, truth) in rs.iter().zip(&sorted) {
                assert_eq!(found.multiplicity, truth.1);
                assert!((found.location - truth.0).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn deterministic_ordering() {
        let p = poly(&[6.0, -11.0, 6.0, -1.0]);
        let a = roots(&p, 1e-7).unwrap();
        let b = roots(&p, 1e-7).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.location.re.to_bits(), y.location.re.to_bits());
            assert_eq!(x.location.im.to_bits(), y.location.im.to_bits());
        }
    }
}
