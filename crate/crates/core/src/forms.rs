//! Ternary and binary forms with complex coefficients.
//!
//! Quadratics use the basis `x², y², z², xy, xz, yz` so that Gram matrices
//! index directly into quadratic coefficient vectors. All other degrees use
//! graded-lexicographic order with `x > y > z`.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, C64, ONE, ZERO};

pub const MAX_DEGREE: usize = 4;

/// Exponent triples of degree `d`, in the crate-wide monomial order.
pub fn exponents(degree: usize) -> &'static [[usize; 3]] {
    static TABLES: OnceLock<Vec<Vec<[usize; 3]>>> = OnceLock::new();
    let tables = TABLES.get_or_init(|| (0..=2 * MAX_DEGREE).map(build_exponents).collect());
    &tables[degree]
}

fn build_exponents(degree: usize) -> Vec<[usize; 3]> {
    if degree == 2 {
        return vec![[2, 0, 0], [0, 2, 0], [0, 0, 2], [1, 1, 0], [1, 0, 1], [0, 1, 1]];
    }
    let mut out = Vec::new();
    for a in (0..=degree).rev() {
        for b in (0..=degree - a).rev() {
            out.push([a, b, degree - a - b]);
        }
    }
    out
}

/// Position of an exponent triple within [`exponents`].
pub fn monomial_index(exp: [usize; 3]) -> usize {
    let degree = exp[0] + exp[1] + exp[2];
    exponents(degree)
        .iter()
        .position(|e| *e == exp)
        .expect("exponent of known degree")
}

pub fn num_monomials(degree: usize) -> usize {
    linalg::binomial(degree + 2, 2)
}

/// Exponent string such as `"310"` for `x³y`.
pub fn exponent_key(exp: [usize; 3]) -> String {
    format!("{}{}{}", exp[0], exp[1], exp[2])
}

/// Homogeneous polynomial in `x, y, z`.
#[derive(Debug, Clone, PartialEq)]
pub struct TernaryForm {
    degree: usize,
    coeffs: Vec<C64>,
}

impl TernaryForm {
    pub fn new(degree: usize, coeffs: Vec<C64>) -> Result<Self> {
        if degree > 2 * MAX_DEGREE {
            return Err(Error::UnsupportedDegree(degree));
        }
        if coeffs.len() != num_monomials(degree) {
            return Err(Error::BadLength { degree, found: coeffs.len() });
        }
        Ok(Self { degree, coeffs })
    }

    pub fn from_real(degree: usize, coeffs: &[f64]) -> Result<Self> {
        Self::new(degree, coeffs.iter().map(|&c| C64::new(c, 0.0)).collect())
    }

    pub fn zero(degree: usize) -> Self {
        Self { degree, coeffs: vec![ZERO; num_monomials(degree)] }
    }

    /// Builds a form from `(coefficient, exponent)` terms.
    pub fn from_terms(degree: usize, terms: &[(C64, [usize; 3])]) -> Self {
        let mut f = Self::zero(degree);
        for &(c, e) in terms {
            assert_eq!(e[0] + e[1] + e[2], degree, "term degree");
            f.coeffs[monomial_index(e)] += c;
        }
        f
    }

    pub fn linear(coeffs: [C64; 3]) -> Self {
        Self { degree: 1, coeffs: coeffs.to_vec() }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn coeff(&self, exp: [usize; 3]) -> C64 {
        self.coeffs[monomial_index(exp)]
    }

    pub fn norm(&self) -> f64 {
        linalg::vec_norm(&self.coeffs)
    }

    pub fn max_imag(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |acc, c| acc.max(c.im.abs()))
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.max_imag() <= tol
    }

    pub fn real_coeffs(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.re).collect()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::ZeroForm);
        }
        Ok(self.scale(C64::new(1.0 / n, 0.0)))
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { degree: self.degree, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn conj(&self) -> Self {
        Self { degree: self.degree, coeffs: self.coeffs.iter().map(|c| c.conj()).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.degree, other.degree);
        Self {
            degree: self.degree,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-ONE))
    }

    /// Value at the representative coordinates of `p`.
    pub fn eval(&self, p: &ProjPoint) -> C64 {
        self.eval_at(p.coords())
    }

    pub fn eval_at(&self, v: &[C64; 3]) -> C64 {
        exponents(self.degree)
            .iter()
            .zip(&self.coeffs)
            .map(|(e, c)| c * v[0].powu(e[0] as u32) * v[1].powu(e[1] as u32) * v[2].powu(e[2] as u32))
            .sum()
    }

    /// Partial derivative with respect to variable `var` (0 = x, 1 = y, 2 = z).
    pub fn derivative(&self, var: usize) -> Self {
        if self.degree == 0 {
            return Self::zero(0);
        }
        let mut out = Self::zero(self.degree - 1);
        for (e, c) in exponents(self.degree).iter().zip(&self.coeffs) {
            if e[var] == 0 {
                continue;
            }
            let mut lowered = *e;
            lowered[var] -= 1;
            out.coeffs[monomial_index(lowered)] += c * e[var] as f64;
        }
        out
    }

    pub fn gradient(&self) -> [Self; 3] {
        [self.derivative(0), self.derivative(1), self.derivative(2)]
    }

    /// Product with no degree restriction; used internally.
    pub(crate) fn product(&self, other: &Self) -> Self {
        let degree = self.degree + other.degree;
        let mut out = Self::zero(degree);
        for (ea, ca) in exponents(self.degree).iter().zip(&self.coeffs) {
            if *ca == ZERO {
                continue;
            }
            for (eb, cb) in exponents(other.degree).iter().zip(&other.coeffs) {
                let e = [ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]];
                out.coeffs[monomial_index(e)] += ca * cb;
            }
        }
        out
    }

    /// `f(M x)` for a 3×3 matrix `M`.
    pub fn compose_linear(&self, m: &[[C64; 3]; 3]) -> Self {
        let subs: Vec<Self> = (0..3).map(|i| Self::linear(m[i])).collect();
        let mut out = Self::zero(self.degree);
        for (e, c) in exponents(self.degree).iter().zip(&self.coeffs) {
            if *c == ZERO {
                continue;
            }
            let mut term = Self::from_terms(0, &[(*c, [0, 0, 0])]);
            for (var, sub) in subs.iter().enumerate() {
                for _ in 0..e[var] {
                    term = term.product(sub);
                }
            }
            out = out.add(&term);
        }
        out
    }
}

/// Product of two forms whose degrees add up to 2 or 4.
pub fn multiply(f: &TernaryForm, g: &TernaryForm) -> Result<TernaryForm> {
    let degree = f.degree + g.degree;
    if degree != 2 && degree != 4 {
        return Err(Error::UnsupportedDegree(degree));
    }
    Ok(f.product(g))
}

/// Homogeneous polynomial in `s, t`; index `k` holds the coefficient of
/// `s^k t^(degree-k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryForm {
    coeffs: Vec<C64>,
}

impl BinaryForm {
    pub fn new(coeffs: Vec<C64>) -> Self {
        assert!(!coeffs.is_empty(), "binary form needs at least one coefficient");
        Self { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| C64::new(c, 0.0)).collect())
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn norm(&self) -> f64 {
        linalg::vec_norm(&self.coeffs)
    }

    pub fn eval(&self, s: C64, t: C64) -> C64 {
        let d = self.degree() as u32;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * s.powu(k as u32) * t.powu(d - k as u32))
            .sum()
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = vec![ZERO; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self { coeffs: out }
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|x| x * c).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.coeffs.len(), other.coeffs.len());
        Self { coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect() }
    }

    /// Linear form vanishing at the point `p`.
    pub fn vanishing_at(p: &P1Point) -> Self {
        let [a, b] = *p.coords();
        // b s - a t
        Self { coeffs: vec![-a, b] }
    }

    /// `g(m00 s + m01 t, m10 s + m11 t)`.
    pub fn compose(&self, m: &[[C64; 2]; 2]) -> Self {
        let s_sub = Self { coeffs: vec![m[0][1], m[0][0]] };
        let t_sub = Self { coeffs: vec![m[1][1], m[1][0]] };
        let d = self.degree();
        let mut out = vec![ZERO; d + 1];
        for (k, c) in self.coeffs.iter().enumerate() {
            if *c == ZERO {
                continue;
            }
            let mut term = Self { coeffs: vec![*c] };
            for _ in 0..k {
                term = term.mul(&s_sub);
            }
            for _ in 0..d - k {
                term = term.mul(&t_sub);
            }
            for (o, v) in out.iter_mut().zip(&term.coeffs) {
                *o += v;
            }
        }
        Self { coeffs: out }
    }
}

pub(crate) fn normalize_projective<const N: usize>(mut v: [C64; N]) -> Option<[C64; N]> {
    let n = linalg::vec_norm(&v);
    if n == 0.0 || !n.is_finite() {
        return None;
    }
    for c in v.iter_mut() {
        *c /= n;
    }
    // Phase: first coordinate that is not negligible becomes real positive.
    let pivot = v.iter().position(|c| c.norm() > 1e-9).unwrap_or(0);
    let phase = v[pivot].conj() / v[pivot].norm();
    for c in v.iter_mut() {
        *c *= phase;
    }
    Some(v)
}

/// Point of the projective plane, stored with unit norm and a canonical phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjPoint {
    coords: [C64; 3],
}

impl ProjPoint {
    pub fn new(v: [C64; 3]) -> Result<Self> {
        normalize_projective(v).map(|coords| Self { coords }).ok_or(Error::ZeroForm)
    }

    pub fn real(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::new([C64::new(x, 0.0), C64::new(y, 0.0), C64::new(z, 0.0)])
    }

    pub fn coords(&self) -> &[C64; 3] {
        &self.coords
    }

    pub fn distance(&self, other: &Self) -> f64 {
        linalg::chordal(&self.coords, &other.coords)
    }
}

/// Point of the projective line `(s : t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct P1Point {
    coords: [C64; 2],
}

impl P1Point {
    pub fn new(v: [C64; 2]) -> Result<Self> {
        normalize_projective(v).map(|coords| Self { coords }).ok_or(Error::ZeroForm)
    }

    pub fn coords(&self) -> &[C64; 2] {
        &self.coords
    }

    /// Affine value `s / t` (infinite when `t = 0`).
    pub fn ratio(&self) -> C64 {
        self.coords[0] / self.coords[1]
    }

    pub fn distance(&self, other: &Self) -> f64 {
        linalg::chordal(&self.coords, &other.coords)
    }
}

/// `g(s, t) = f(s p + t q)`.
pub fn restrict_to_line(f: &TernaryForm, p: &[C64; 3], q: &[C64; 3]) -> Result<BinaryForm> {
    let cross = [
        p[1] * q[2] - p[2] * q[1],
        p[2] * q[0] - p[0] * q[2],
        p[0] * q[1] - p[1] * q[0],
    ];
    let scale = linalg::vec_norm(p) * linalg::vec_norm(q);
    if scale == 0.0 || linalg::vec_norm(&cross) <= 1e-12 * scale {
        return Err(Error::DependentPoints);
    }
    Ok(restrict_unchecked(f, p, q))
}

pub(crate) fn restrict_unchecked(f: &TernaryForm, p: &[C64; 3], q: &[C64; 3]) -> BinaryForm {
    let d = f.degree;
    // powers[var][k] = (p_var s + q_var t)^k
    let mut powers: Vec<Vec<BinaryForm>> = Vec::with_capacity(3);
    for var in 0..3 {
        let lin = BinaryForm { coeffs: vec![q[var], p[var]] };
        let mut row = vec![BinaryForm { coeffs: vec![ONE] }];
        for k in 1..=d {
            let next = row[k - 1].mul(&lin);
            row.push(next);
        }
        powers.push(row);
    }
    let mut out = vec![ZERO; d + 1];
    for (e, c) in exponents(d).iter().zip(&f.coeffs) {
        if *c == ZERO {
            continue;
        }
        let term = powers[0][e[0]].mul(&powers[1][e[1]]).mul(&powers[2][e[2]]);
        for (o, v) in out.iter_mut().zip(&term.coeffs) {
            *o += c * v;
        }
    }
    BinaryForm { coeffs: out }
}

/// Root of a binary form together with its multiplicity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinaryRoot {
    pub point: P1Point,
    pub multiplicity: usize,
}

/// Roots of a binary form on the projective line, clustered by chordal
/// distance `cluster_tol`.
pub fn binary_roots(g: &BinaryForm, cluster_tol: f64) -> Result<Vec<BinaryRoot>> {
    let norm = g.norm();
    if norm == 0.0 {
        return Err(Error::ZeroForm);
    }
    let d = g.degree();
    let negligible = 1e-14 * norm;
    // Dehomogenize in whichever chart has the larger end coefficient.
    let use_s_over_t = g.coeffs[d].norm() >= g.coeffs[0].norm();
    let mut poly: Vec<C64> = if use_s_over_t {
        g.coeffs.clone()
    } else {
        g.coeffs.iter().rev().copied().collect()
    };
    let mut at_other_end = 0;
    while poly.len() > 1 && poly.last().map_or(false, |c| c.norm() <= negligible) {
        poly.pop();
        at_other_end += 1;
    }
    let mut raw: Vec<P1Point> = Vec::with_capacity(d);
    for r in linalg::poly_roots(&poly) {
        let v = if use_s_over_t { [r, ONE] } else { [ONE, r] };
        raw.push(P1Point::new(v)?);
    }
    let other = if use_s_over_t { [ONE, ZERO] } else { [ZERO, ONE] };
    for _ in 0..at_other_end {
        raw.push(P1Point::new(other)?);
    }

    // Greedy clustering; representatives are averaged in the chart.
    let mut clusters: Vec<(Vec<P1Point>, P1Point)> = Vec::new();
    for p in raw {
        match clusters.iter_mut().find(|(_, rep)| rep.distance(&p) <= cluster_tol) {
            Some((members, _)) => members.push(p),
            None => clusters.push((vec![p], p)),
        }
    }
    let mut out = Vec::with_capacity(clusters.len());
    for (members, rep) in clusters {
        let point = if members.len() > 1 { average_points(&members).unwrap_or(rep) } else { rep };
        out.push(BinaryRoot { point, multiplicity: members.len() });
    }
    Ok(out)
}

fn average_points(points: &[P1Point]) -> Option<P1Point> {
    let first = points[0].coords;
    let mut acc = [ZERO, ZERO];
    for p in points {
        // align phases with the first member before summing
        let phase = linalg::hdot(p.coords(), &first);
        let phase = if phase.norm() > 0.0 { phase / phase.norm() } else { ONE };
        acc[0] += p.coords[0] * phase;
        acc[1] += p.coords[1] * phase;
    }
    P1Point::new(acc).ok()
}

/// Rotations of the projective line tried when extracting square roots.
fn chart_rotations() -> [[[C64; 2]; 2]; 4] {
    let c = |re: f64, im: f64| C64::new(re, im);
    let (a, b) = (0.8, 0.6);
    [
        [[ONE, ZERO], [ZERO, ONE]],
        [[ZERO, ONE], [ONE, ZERO]],
        [[c(a, 0.0), c(-b, 0.0)], [c(b, 0.0), c(a, 0.0)]],
        [[c(0.6, 0.0), c(0.0, 0.8)], [c(0.0, 0.8), c(0.6, 0.0)]],
    ]
}

fn invert2(m: &[[C64; 2]; 2]) -> [[C64; 2]; 2] {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]]
}

/// Gauss–Newton refinement of `q` for `q² ≈ g` (binary forms).
fn refine_binary_square(g: &BinaryForm, mut q: BinaryForm) -> BinaryForm {
    let n = q.coeffs.len();
    let m = g.coeffs.len();
    for _ in 0..8 {
        let r = q.mul(&q).sub(g);
        if r.norm() <= 1e-15 * g.norm() {
            break;
        }
        let mut jac = DMatrix::<C64>::zeros(m, n);
        for k in 0..n {
            for (i, qc) in q.coeffs.iter().enumerate() {
                jac[(i + k, k)] += qc * 2.0;
            }
        }
        let rhs = DVector::from_iterator(m, r.coeffs.iter().map(|c| -c));
        let (step, _) = linalg::lstsq(&jac, &rhs);
        for (c, s) in q.coeffs.iter_mut().zip(step.iter()) {
            *c += s;
        }
    }
    q
}

pub(crate) fn split_scale(q: BinaryForm) -> Option<(BinaryForm, C64)> {
    let n = q.norm();
    if n == 0.0 || !n.is_finite() {
        return None;
    }
    let pivot = q.coeffs.iter().position(|c| c.norm() > 1e-9 * n)?;
    let phase = q.coeffs[pivot].conj() / q.coeffs[pivot].norm();
    let unit = q.scale(phase / n);
    // q = unit * n / phase  =>  q² = unit² * (n / phase)²
    let factor = C64::new(n, 0.0) / phase;
    Some((unit, factor * factor))
}

/// Decides whether a binary quartic is `c · q²`, returning `(q, c)` with `q`
/// of unit norm.
pub fn perfect_square_binary_quartic(g: &BinaryForm, tol: f64) -> Option<(BinaryForm, C64)> {
    let (res, q) = best_binary_square(g)?;
    if res > tol {
        return None;
    }
    split_scale(q)
}

/// Best square root `q` of a binary quartic together with the relative
/// residual `‖q² − g‖ / ‖g‖`.
pub(crate) fn best_binary_square(g: &BinaryForm) -> Option<(f64, BinaryForm)> {
    if g.degree() != 4 {
        return None;
    }
    let norm = g.norm();
    if norm == 0.0 {
        return None;
    }
    let mut candidates: Vec<BinaryForm> = Vec::new();

    // Root pattern: two double roots or a single quadruple root.
    if let Ok(roots) = binary_roots(g, 1e-6) {
        let mut pattern: Vec<usize> = roots.iter().map(|r| r.multiplicity).collect();
        pattern.sort_unstable();
        if pattern == [2, 2] || pattern == [4] {
            let mut q = BinaryForm { coeffs: vec![ONE] };
            for r in &roots {
                for _ in 0..r.multiplicity / 2 {
                    q = q.mul(&BinaryForm::vanishing_at(&r.point));
                }
            }
            let q2 = q.mul(&q);
            let c = linalg::hdot(&q2.coeffs, &g.coeffs) / linalg::hdot(&q2.coeffs, &q2.coeffs);
            candidates.push(q.scale(c.sqrt()));
        }
    }

    // Coefficient square roots in a few rotated charts; quadruple roots split
    // by eps^(1/4) under root finding, so this path handles them.
    for rot in chart_rotations() {
        let gr = g.compose(&rot);
        let (g2, g3, g4) = (gr.coeffs[2], gr.coeffs[3], gr.coeffs[4]);
        if g4.norm() < 1e-3 * norm {
            continue;
        }
        let a = g4.sqrt();
        let b = g3 / (a * 2.0);
        let c = (g2 - b * b) / (a * 2.0);
        let qr = BinaryForm { coeffs: vec![c, b, a] };
        candidates.push(qr.compose(&invert2(&rot)));
    }

    let mut best: Option<(f64, BinaryForm)> = None;
    for cand in candidates {
        let q = refine_binary_square(g, cand);
        let res = q.mul(&q).sub(g).norm() / norm;
        if best.as_ref().map_or(true, |(r, _)| res < *r) {
            best = Some((res, q));
        }
    }
    best
}

/// Three generic lines, each given by two spanning points.
fn probe_lines(set: usize) -> [([C64; 3], [C64; 3]); 3] {
    let r = |x: f64| C64::new(x, 0.0);
    let base: [[f64; 6]; 5] = [
        [0.9133, -0.2871, 0.4402, 0.1358, 0.7712, -0.5319],
        [-0.3617, 0.8245, 0.1973, 0.6631, 0.2384, 0.8807],
        [0.5528, 0.4139, -0.7264, -0.8196, 0.3342, 0.2175],
        [0.2231, -0.6673, 0.9118, 0.7046, 0.5559, -0.1487],
        [-0.8182, 0.3391, 0.6027, 0.4473, -0.9054, 0.3368],
    ];
    let pick = |i: usize| -> ([C64; 3], [C64; 3]) {
        let b = base[(i + set) % base.len()];
        ([r(b[0]), r(b[1]), r(b[2])], [r(b[3]), r(b[4]), r(b[5])])
    };
    [pick(0), pick(1), pick(2)]
}

/// Matrix (3×6) sending quadratic coefficients to the coefficients of the
/// restriction `q(s p + t r)`.
pub(crate) fn quadratic_restriction_matrix(p: &[C64; 3], r: &[C64; 3]) -> DMatrix<C64> {
    let mut m = DMatrix::<C64>::zeros(3, 6);
    for k in 0..6 {
        let mut coeffs = vec![ZERO; 6];
        coeffs[k] = ONE;
        let q = TernaryForm { degree: 2, coeffs };
        let g = restrict_unchecked(&q, p, r);
        for i in 0..3 {
            m[(i, k)] = g.coeffs[i];
        }
    }
    m
}

/// Gauss–Newton refinement of a ternary quadratic `q` with `q² ≈ h`.
fn refine_ternary_square(h: &TernaryForm, mut q: TernaryForm) -> TernaryForm {
    for _ in 0..8 {
        let r = q.product(&q).sub(h);
        if r.norm() <= 1e-15 * h.norm() {
            break;
        }
        let mut jac = DMatrix::<C64>::zeros(15, 6);
        for k in 0..6 {
            let mut unit = TernaryForm::zero(2);
            unit.coeffs[k] = ONE;
            let col = unit.product(&q).scale(C64::new(2.0, 0.0));
            for i in 0..15 {
                jac[(i, k)] = col.coeffs[i];
            }
        }
        let rhs = DVector::from_iterator(15, r.coeffs.iter().map(|c| -c));
        let (step, _) = linalg::lstsq(&jac, &rhs);
        for (c, s) in q.coeffs.iter_mut().zip(step.iter()) {
            *c += s;
        }
    }
    q
}

/// Decides whether a ternary quartic is `c · q²`; returns `q` with unit norm.
pub fn perfect_square_quartic(h: &TernaryForm, tol: f64) -> Option<(TernaryForm, C64)> {
    if h.degree != 4 {
        return None;
    }
    let norm = h.norm();
    if norm == 0.0 {
        return None;
    }
    for set in 0..3 {
        let lines = probe_lines(set);
        let mut roots: Vec<BinaryForm> = Vec::with_capacity(3);
        for (p, r) in &lines {
            let g = restrict_unchecked(h, p, r);
            if g.norm() <= 1e-13 * norm {
                roots.push(BinaryForm { coeffs: vec![ZERO; 3] });
                continue;
            }
            match perfect_square_binary_quartic(&g, tol.max(1e-10)) {
                Some((q, c)) => roots.push(q.scale(c.sqrt())),
                None => break,
            }
        }
        if roots.len() < 3 {
            continue;
        }
        let mats: Vec<DMatrix<C64>> =
            lines.iter().map(|(p, r)| quadratic_restriction_matrix(p, r)).collect();
        let mut best: Option<(f64, TernaryForm)> = None;
        // The sign of each local square root is free; fix the first one.
        for signs in 0..4u32 {
            let mut a = DMatrix::<C64>::zeros(9, 6);
            let mut b = DVector::<C64>::zeros(9);
            for (k, (m, q)) in mats.iter().zip(&roots).enumerate() {
                let sign = if k > 0 && signs & (1 << (k - 1)) != 0 { -1.0 } else { 1.0 };
                a.view_mut((3 * k, 0), (3, 6)).copy_from(m);
                for i in 0..3 {
                    b[3 * k + i] = q.coeffs[i] * sign;
                }
            }
            let (sol, _) = linalg::lstsq(&a, &b);
            let q = TernaryForm { degree: 2, coeffs: sol.iter().copied().collect() };
            let res = q.product(&q).sub(h).norm() / norm;
            if best.as_ref().map_or(true, |(r, _)| res < *r) {
                best = Some((res, q));
            }
        }
        let (_, q) = best?;
        let q = refine_ternary_square(h, q);
        let res = q.product(&q).sub(h).norm() / norm;
        if res > tol {
            continue;
        }
        let qn = q.norm();
        if qn == 0.0 {
            continue;
        }
        let pivot = q.coeffs.iter().position(|c| c.norm() > 1e-9 * qn)?;
        let phase = q.coeffs[pivot].conj() / q.coeffs[pivot].norm();
        let unit = q.scale(phase / qn);
        let factor = C64::new(qn, 0.0) / phase;
        return Some((unit, factor * factor));
    }
    None
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::linalg::I;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    pub(crate) fn fermat() -> TernaryForm {
        TernaryForm::from_terms(4, &[(ONE, [4, 0, 0]), (ONE, [0, 4, 0]), (ONE, [0, 0, 4])])
    }

    #[test]
    fn monomial_orders() {
        assert_eq!(exponents(2)[3], [1, 1, 0]);
        let keys: Vec<String> = exponents(4).iter().map(|e| exponent_key(*e)).collect();
        assert_eq!(
            keys,
            ["400", "310", "301", "220", "211", "202", "130", "121", "112", "103", "040", "031", "022", "013", "004"]
        );
        assert_eq!(exponents(1), &[[1, 0, 0], [0, 1, 0], [0, 0, 1]]);
    }

    #[test]
    fn eval_examples() {
        let f = fermat();
        assert!((f.eval(&ProjPoint::real(1.0, 0.0, 0.0).unwrap()) - ONE).norm() < 1e-15);
        let xy = TernaryForm::from_terms(2, &[(ONE, [1, 1, 0])]);
        assert_eq!(xy.eval(&ProjPoint::real(0.0, 0.0, 1.0).unwrap()), ZERO);
        let v = f.eval(&ProjPoint::real(1.0, 1.0, 1.0).unwrap());
        assert!((v - c(1.0 / 3.0)).norm() < 1e-15);
    }

    #[test]
    fn multiply_examples() {
        let x = TernaryForm::linear([ONE, ZERO, ZERO]);
        let y = TernaryForm::linear([ZERO, ONE, ZERO]);
        let xy = multiply(&x, &y).unwrap();
        assert_eq!(xy, TernaryForm::from_terms(2, &[(ONE, [1, 1, 0])]));

        let p = TernaryForm::linear([ONE, I, ZERO]);
        let m = TernaryForm::linear([ONE, -I, ZERO]);
        let sum = multiply(&p, &m).unwrap();
        assert_eq!(sum, TernaryForm::from_terms(2, &[(ONE, [2, 0, 0]), (ONE, [0, 2, 0])]));

        let sq = multiply(&sum, &sum).unwrap();
        let expected =
            TernaryForm::from_terms(4, &[(ONE, [4, 0, 0]), (c(2.0), [2, 2, 0]), (ONE, [0, 4, 0])]);
        assert_eq!(sq, expected);

        assert_eq!(multiply(&x, &sum), Err(Error::UnsupportedDegree(3)));
    }

    #[test]
    fn restriction_examples() {
        let f = fermat();
        let e = |i: usize| {
            let mut v = [ZERO; 3];
            v[i] = ONE;
            v
        };
        let g = restrict_to_line(&f, &e(0), &e(1)).unwrap();
        assert_eq!(g, BinaryForm::from_real(&[1.0, 0.0, 0.0, 0.0, 1.0]));
        let g = restrict_to_line(&f, &e(1), &e(2)).unwrap();
        assert_eq!(g, BinaryForm::from_real(&[1.0, 0.0, 0.0, 0.0, 1.0]));
        let z4 = TernaryForm::from_terms(4, &[(ONE, [0, 0, 4])]);
        let g = restrict_to_line(&z4, &[ONE, c(2.0), ZERO], &[c(-1.0), ONE, ZERO]).unwrap();
        assert_eq!(g.norm(), 0.0);
        assert_eq!(restrict_to_line(&f, &e(0), &e(0)), Err(Error::DependentPoints));
    }

    #[test]
    fn roots_of_unity() {
        let g = BinaryForm::from_real(&[-1.0, 0.0, 0.0, 0.0, 1.0]);
        let roots = binary_roots(&g, 1e-6).unwrap();
        assert_eq!(roots.len(), 4);
        for expected in [ONE, -ONE, I, -I] {
            assert!(roots.iter().any(|r| (r.point.ratio() - expected).norm() < 1e-10));
            assert!(roots.iter().all(|r| r.multiplicity == 1));
        }
    }

    #[test]
    fn double_roots_cluster() {
        // (s - t)^2 (s + t)^2 = s^4 - 2 s^2 t^2 + t^4
        let g = BinaryForm::from_real(&[1.0, 0.0, -2.0, 0.0, 1.0]);
        let roots = binary_roots(&g, 1e-6).unwrap();
        assert_eq!(roots.len(), 2);
        for expected in [ONE, -ONE] {
            let r = roots.iter().find(|r| (r.point.ratio() - expected).norm() < 1e-7).unwrap();
            assert_eq!(r.multiplicity, 2);
        }
    }

    #[test]
    fn degenerate_leading_term() {
        // s^3 t: s = 0 with multiplicity 3, t = 0 (the point at infinity) once
        let g = BinaryForm::from_real(&[0.0, 0.0, 0.0, 1.0, 0.0]);
        let roots = binary_roots(&g, 1e-6).unwrap();
        let at_zero = roots.iter().find(|r| r.point.coords()[0].norm() < 1e-9).unwrap();
        let at_inf = roots.iter().find(|r| r.point.coords()[1].norm() < 1e-9).unwrap();
        assert_eq!(at_zero.multiplicity, 3);
        assert_eq!(at_inf.multiplicity, 1);
        assert_eq!(binary_roots(&BinaryForm::from_real(&[0.0; 5]), 1e-6), Err(Error::ZeroForm));
    }

    fn assert_square(g: &BinaryForm, q: &BinaryForm, c: C64) {
        let rec = q.mul(q).scale(c);
        assert!(rec.sub(g).norm() <= 1e-10 * g.norm());
    }

    #[test]
    fn binary_square_examples() {
        let g = BinaryForm::from_real(&[1.0, 0.0, 2.0, 0.0, 1.0]);
        let (q, cc) = perfect_square_binary_quartic(&g, 1e-10).unwrap();
        assert_square(&g, &q, cc);
        // q proportional to s^2 + t^2
        assert!((q.coeffs()[1]).norm() < 1e-12);
        assert!((q.coeffs()[0] - q.coeffs()[2]).norm() < 1e-12);

        // s^3 (s - t) = s^4 - s^3 t
        let triple = BinaryForm::from_real(&[0.0, 0.0, 0.0, -1.0, 1.0]);
        assert!(perfect_square_binary_quartic(&triple, 1e-8).is_none());
        let simple = BinaryForm::from_real(&[1.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(perfect_square_binary_quartic(&simple, 1e-8).is_none());
        // quadruple root: (s - 2t)^4
        let l = BinaryForm::from_real(&[-2.0, 1.0]);
        let quad = l.mul(&l).mul(&l).mul(&l);
        let (q, cc) = perfect_square_binary_quartic(&quad, 1e-10).unwrap();
        assert_square(&quad, &q, cc);
    }

    #[test]
    fn ternary_square_examples() {
        let q0 = TernaryForm::from_terms(2, &[(ONE, [2, 0, 0]), (ONE, [0, 2, 0]), (ONE, [0, 0, 2])]);
        let h = q0.product(&q0);
        let (q, cc) = perfect_square_quartic(&h, 1e-10).unwrap();
        assert!(q.product(&q).scale(cc).sub(&h).norm() < 1e-10 * h.norm());

        assert!(perfect_square_quartic(&fermat(), 1e-8).is_none());

        let h = TernaryForm::from_terms(4, &[(c(4.0), [2, 2, 0])]);
        let (q, cc) = perfect_square_quartic(&h, 1e-10).unwrap();
        assert!(q.product(&q).scale(cc).sub(&h).norm() < 1e-10 * h.norm());
        assert!((q.coeff([1, 1, 0]).norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn derivatives() {
        let f = fermat();
        let g = f.gradient();
        assert_eq!(g[0], TernaryForm::from_terms(3, &[(c(4.0), [3, 0, 0])]));
    }

    #[test]
    fn compose_swaps_variables() {
        let f = TernaryForm::from_terms(4, &[(ONE, [3, 1, 0])]);
        let swap = [[ZERO, ONE, ZERO], [ONE, ZERO, ZERO], [ZERO, ZERO, ONE]];
        let g = f.compose_linear(&swap);
        assert_eq!(g, TernaryForm::from_terms(4, &[(ONE, [1, 3, 0])]));
    }
}
