//! Steiner complexes, their rank-3 Gram tensors and the Steiner graph.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::bitangent::{self, Bitangent};
use crate::error::{Error, Result};
use crate::forms::{self, TernaryForm};
use crate::gram::{self, GramTensor, Subspace};
use crate::linalg::{self, C64};
use crate::union_find::UnionFind;

pub const COMPLEX_COUNT: usize = 63;
pub const PAIR_COUNT: usize = 378;
/// Required ratio `σ3 / σ4` for the six products of a complex.
pub const SPAN_GAP: f64 = 1e4;
/// Conjugation-stability tolerance for tensor images.
pub const CONJ_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BitPair {
    pub i: usize,
    pub j: usize,
}

impl BitPair {
    pub fn new(a: usize, b: usize) -> Self {
        assert_ne!(a, b, "a pair needs two bitangents");
        Self { i: a.min(b), j: a.max(b) }
    }

    pub fn contains(&self, k: usize) -> bool {
        self.i == k || self.j == k
    }

    pub fn overlaps(&self, other: &Self) -> bool {
        self.contains(other.i) || self.contains(other.j)
    }
}

/// All 378 pairs in lexicographic order.
pub fn all_pairs(n: usize) -> Vec<BitPair> {
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            out.push(BitPair { i, j });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteinerComplex {
    pub pairs: [BitPair; 6],
    pub tensor: GramTensor,
    pub real: bool,
    pub psd: bool,
    /// Largest conic certificate `σ6 / σ1` among the 15 pair relations.
    pub certificate: f64,
    /// `σ3 / σ4` of the six product quadratics.
    pub span_gap: f64,
    /// Relative residual `‖μ(tensor) − f‖ / ‖f‖`.
    pub residual: f64,
    pub condition: f64,
}

impl SteinerComplex {
    pub fn bitangents(&self) -> BTreeSet<usize> {
        self.pairs.iter().flat_map(|p| [p.i, p.j]).collect()
    }

    /// The pair containing bitangent `k`, if any.
    pub fn pair_of(&self, k: usize) -> Option<BitPair> {
        self.pairs.iter().copied().find(|p| p.contains(k))
    }
}

/// Per-line data for the tetrad tests: the line, the restriction matrix of
/// quadratics to it, and a square root of `f` along it.
struct LineData {
    line: TernaryForm,
    restriction: DMatrix<C64>,
    /// Rows `w^H R` with `w ⊥ q_L`: vanish iff a conic restricts to a multiple
    /// of the contact quadratic.
    conic_rows: DMatrix<C64>,
    /// `√c · q_L` where `f|_L = c q_L²`.
    root: [C64; 3],
}

fn line_data(f: &TernaryForm, b: &Bitangent) -> LineData {
    let (p, r) = bitangent::line_basis(&b.coords());
    let restriction = forms::quadratic_restriction_matrix(&p, &r);
    let qc = b.contact_form.coeffs();
    let q = DMatrix::from_row_slice(1, 3, qc).map(|c| c.conj());
    let complement = linalg::null_space(&q, 1e-12);
    let g = forms::restrict_to_line(f, &p, &r).expect("orthonormal line basis");
    let q2 = b.contact_form.mul(&b.contact_form);
    let c = linalg::hdot(q2.coeffs(), g.coeffs()) / linalg::hdot(q2.coeffs(), q2.coeffs());
    let sc = c.sqrt();
    LineData {
        line: b.line.clone(),
        conic_rows: complement.adjoint() * &restriction,
        restriction,
        root: [qc[0] * sc, qc[1] * sc, qc[2] * sc],
    }
}

fn prepare(f: &TernaryForm, bits: &[Bitangent]) -> Result<(TernaryForm, Vec<LineData>)> {
    let f = f.normalized()?;
    let data = bits.iter().map(|b| line_data(&f, b)).collect();
    Ok((f, data))
}

/// Ratio `σ6 / σ1` of the stacked conic conditions of four bitangents; small
/// when some conic restricts to each line as a multiple of its contact
/// quadratic.
fn conic_certificate(data: &[LineData], idx: [usize; 4]) -> f64 {
    let mut m = DMatrix::<C64>::zeros(8, 6);
    for (k, &i) in idx.iter().enumerate() {
        m.view_mut((2 * k, 0), (2, 6)).copy_from(&data[i].conic_rows);
    }
    let sv = linalg::singular_values(&m);
    sv[5] / sv[0]
}

/// Relative residual of the best fit `f = λ l_a l_b l_c l_d + q²`, which holds
/// exactly for syzygetic tetrads. Along each line `q` must restrict to a
/// square root of `f`, which makes `q` a linear least-squares unknown once the
/// signs of the roots are fixed.
fn tetrad_certificate(f: &TernaryForm, data: &[LineData], idx: [usize; 4]) -> f64 {
    let mut a = DMatrix::<C64>::zeros(12, 6);
    for (k, &i) in idx.iter().enumerate() {
        a.view_mut((3 * k, 0), (3, 6)).copy_from(&data[i].restriction);
    }
    let product = idx
        .iter()
        .skip(1)
        .fold(data[idx[0]].line.clone(), |acc, &i| acc.product(&data[i].line));
    let pp = linalg::hdot(product.coeffs(), product.coeffs());
    let svd = linalg::svd(&a);
    let mut best = f64::INFINITY;
    for signs in 0..8u32 {
        let mut rhs = nalgebra::DVector::<C64>::zeros(12);
        for (k, &i) in idx.iter().enumerate() {
            let sign = if k > 0 && signs & (1 << (k - 1)) != 0 { -1.0 } else { 1.0 };
            for j in 0..3 {
                rhs[3 * k + j] = data[i].root[j] * sign;
            }
        }
        let sol = svd.solve(&rhs, 1e-12 * svd.singular[0]);
        let q = TernaryForm::new(2, sol.iter().copied().collect()).expect("six coefficients");
        let h = f.sub(&q.product(&q));
        let lambda = linalg::hdot(product.coeffs(), h.coeffs()) / pp;
        let res = h.sub(&product.scale(lambda)).norm() / f.norm();
        best = best.min(res);
    }
    best
}

/// Looser cutoff for the conic prefilter; the tetrad fit decides.
const PREFILTER_TOL: f64 = 1e-6;

fn relation_certificate(f: &TernaryForm, data: &[LineData], idx: [usize; 4]) -> f64 {
    let conic = conic_certificate(data, idx);
    if conic > PREFILTER_TOL {
        return conic.max(PREFILTER_TOL);
    }
    tetrad_certificate(f, data, idx).max(conic)
}

/// Whether the pairs `p1`, `p2` lie in a common Steiner complex, i.e. their
/// four bitangents form a syzygetic tetrad; also returns the certificate.
pub fn syzygetic_pair_test(
    f: &TernaryForm,
    bits: &[Bitangent],
    p1: BitPair,
    p2: BitPair,
    tol: f64,
) -> Result<(bool, f64)> {
    if p1.overlaps(&p2) {
        return Err(Error::OverlappingPairs);
    }
    let (fnorm, data) = prepare(f, bits)?;
    let cert = relation_certificate(&fnorm, &data, [p1.i, p1.j, p2.i, p2.j]);
    Ok((cert <= tol, cert))
}

/// Same test on eight explicit points: the 8×6 matrix of quadratic monomials
/// evaluated at them.
pub fn points_on_conic(points: &[[C64; 3]; 8], tol: f64) -> (bool, f64) {
    let quad = forms::exponents(2);
    let m = DMatrix::from_fn(8, 6, |r, c| {
        let e = quad[c];
        points[r][0].powu(e[0] as u32) * points[r][1].powu(e[1] as u32) * points[r][2].powu(e[2] as u32)
    });
    let scaled = DMatrix::from_fn(8, 6, |r, c| m[(r, c)] / linalg::vec_norm(&points[r]).powi(2));
    let sv = linalg::singular_values(&scaled);
    let cert = sv[5] / sv[0];
    (cert <= tol, cert)
}

/// Options for [`assemble_complexes_with`].
#[derive(Debug, Clone, Copy)]
pub struct SteinerOptions {
    pub cert_tol: f64,
    pub rank_tol: f64,
}

impl Default for SteinerOptions {
    fn default() -> Self {
        Self { cert_tol: bitangent::CERT_TOL, rank_tol: gram::DEFAULT_RANK_TOL }
    }
}

pub fn assemble_complexes(f: &TernaryForm, bits: &[Bitangent]) -> Result<Vec<SteinerComplex>> {
    assemble_complexes_with(f, bits, SteinerOptions::default())
}

/// Partitions the 378 bitangent pairs into the 63 Steiner complexes and
/// reconstructs each complex's rank-3 Gram tensor.
pub fn assemble_complexes_with(
    f: &TernaryForm,
    bits: &[Bitangent],
    opts: SteinerOptions,
) -> Result<Vec<SteinerComplex>> {
    if bits.len() != bitangent::BITANGENT_COUNT {
        return Err(Error::CountMismatch { found: bits.len() });
    }
    let (fnorm, data) = prepare(f, bits)?;
    let pairs = all_pairs(bits.len());
    let relations: Vec<(usize, usize, f64)> = (0..pairs.len())
        .into_par_iter()
        .flat_map_iter(|a| {
            let (data, fnorm) = (&data, &fnorm);
            let pairs = &pairs;
            (a + 1..pairs.len()).filter_map(move |b| {
                let (p, q) = (pairs[a], pairs[b]);
                if p.overlaps(&q) {
                    return None;
                }
                let cert = relation_certificate(fnorm, data, [p.i, p.j, q.i, q.j]);
                (cert <= opts.cert_tol).then_some((a, b, cert))
            })
        })
        .collect();

    let mut uf = UnionFind::new(pairs.len());
    for &(a, b, _) in &relations {
        uf.union(a, b);
    }
    let classes = uf.classes();
    if classes.len() != COMPLEX_COUNT || classes.iter().any(|c| c.len() != 6) {
        let sizes: Vec<usize> = classes.iter().map(|c| c.len()).collect();
        return Err(Error::PartitionFailure(format!(
            "{} classes with sizes {:?}",
            classes.len(),
            sizes
        )));
    }
    // Every two pairs of a complex must be related directly, not only through
    // the transitive closure.
    if relations.len() != COMPLEX_COUNT * 15 {
        return Err(Error::PartitionFailure(format!("{} direct relations instead of 945", relations.len())));
    }
    let mut worst = vec![0.0_f64; pairs.len()];
    for &(a, b, cert) in &relations {
        worst[a] = worst[a].max(cert);
        worst[b] = worst[b].max(cert);
    }

    classes
        .par_iter()
        .map(|class| {
            let ps: Vec<BitPair> = class.iter().map(|&k| pairs[k]).collect();
            let distinct: BTreeSet<usize> = ps.iter().flat_map(|p| [p.i, p.j]).collect();
            if distinct.len() != 12 {
                return Err(Error::PartitionFailure("pairs of a complex overlap".into()));
            }
            let certificate = class.iter().map(|&k| worst[k]).fold(0.0, f64::max);
            let pair_array: [BitPair; 6] = ps.try_into().expect("six pairs");
            let (tensor, diag) = rank3_tensor_with(f, bits, &pair_array, opts.rank_tol)?;
            let psd = tensor.is_psd();
            Ok(SteinerComplex {
                pairs: pair_array,
                real: tensor.is_real(),
                psd,
                tensor,
                certificate,
                span_gap: diag.span_gap,
                residual: diag.residual,
                condition: diag.condition,
            })
        })
        .collect()
}

/// How two Steiner complexes meet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Syzygetic,
    Azygetic,
}

pub fn complex_relation(s1: &SteinerComplex, s2: &SteinerComplex) -> Result<Relation> {
    relation_of_pairs(&s1.pairs, &s2.pairs)
}

pub fn relation_of_pairs(s1: &[BitPair; 6], s2: &[BitPair; 6]) -> Result<Relation> {
    let b1: BTreeSet<usize> = s1.iter().flat_map(|p| [p.i, p.j]).collect();
    let b2: BTreeSet<usize> = s2.iter().flat_map(|p| [p.i, p.j]).collect();
    let shared: Vec<usize> = b1.intersection(&b2).copied().collect();
    let pair_in = |s: &[BitPair; 6], k: usize| s.iter().copied().find(|p| p.contains(k));
    let pairs_hit = |s: &[BitPair; 6]| -> BTreeSet<BitPair> {
        shared.iter().filter_map(|&k| pair_in(s, k)).collect()
    };
    match shared.len() {
        4 => {
            let (h1, h2) = (pairs_hit(s1), pairs_hit(s2));
            // two whole pairs in each complex, split differently
            if h1.len() == 2 && h2.len() == 2 && h1.is_disjoint(&h2) {
                Ok(Relation::Syzygetic)
            } else {
                Err(Error::InconsistentIntersection(4))
            }
        }
        6 => {
            if pairs_hit(s1).len() == 6 && pairs_hit(s2).len() == 6 {
                Ok(Relation::Azygetic)
            } else {
                Err(Error::InconsistentIntersection(6))
            }
        }
        n => Err(Error::InconsistentIntersection(n)),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Rank3Diagnostics {
    pub span_gap: f64,
    pub residual: f64,
    pub condition: f64,
}

pub fn rank3_tensor(f: &TernaryForm, bits: &[Bitangent], pairs: &[BitPair; 6]) -> Result<GramTensor> {
    rank3_tensor_with(f, bits, pairs, gram::DEFAULT_RANK_TOL).map(|(t, _)| t)
}

/// The Gram tensor whose image is spanned by the six products `l_i l_j`.
pub fn rank3_tensor_with(
    f: &TernaryForm,
    bits: &[Bitangent],
    pairs: &[BitPair; 6],
    rank_tol: f64,
) -> Result<(GramTensor, Rank3Diagnostics)> {
    let products: Vec<TernaryForm> = pairs
        .iter()
        .map(|p| forms::multiply(&bits[p.i].line, &bits[p.j].line))
        .collect::<Result<_>>()?;
    let m = DMatrix::from_fn(6, 6, |r, c| products[c].coeffs()[r]);
    let sv = linalg::singular_values(&m);
    let span_gap = if sv[3] > 0.0 { sv[2] / sv[3] } else { f64::INFINITY };
    if span_gap < SPAN_GAP {
        return Err(Error::SpanNotThree(linalg::numerical_rank(&sv, rank_tol)));
    }
    let mut u = Subspace::span(&m, 1e-6);
    if u.dim() != 3 {
        return Err(Error::SpanNotThree(u.dim()));
    }
    if u.is_conjugation_stable(CONJ_TOL) {
        u = u.real_form();
    }
    let solve = gram::gram_from_image_with_diagnostics(f, &u)?;
    Ok((
        solve.tensor,
        Rank3Diagnostics { span_gap, residual: solve.residual, condition: solve.condition },
    ))
}

/// Indices of the real and of the psd tensors.
pub fn classify_rank3(tensors: &[GramTensor]) -> (Vec<usize>, Vec<usize>) {
    let real = (0..tensors.len()).filter(|&k| tensors[k].is_real()).collect();
    let psd = (0..tensors.len()).filter(|&k| tensors[k].is_psd()).collect();
    (real, psd)
}

/// Pairs up non-real tensors with their conjugates; `None` if some tensor has
/// no partner.
pub fn conjugate_pairs(tensors: &[GramTensor], tol: f64) -> Option<Vec<(usize, usize)>> {
    let mut used = vec![false; tensors.len()];
    let mut out = Vec::new();
    for a in 0..tensors.len() {
        if tensors[a].is_real() || used[a] {
            continue;
        }
        let conj = tensors[a].conj();
        let scale = tensors[a].norm().max(1.0);
        let b = (0..tensors.len())
            .find(|&b| b != a && !used[b] && !tensors[b].is_real() && conj.sub(&tensors[b]).norm() <= tol * scale)?;
        used[a] = true;
        used[b] = true;
        out.push((a, b));
    }
    Some(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphEdge {
    /// Positions in the vertex list.
    pub a: usize,
    pub b: usize,
    pub rank: usize,
    pub face_dim: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteinerGraph {
    /// Indices into the complex list of the psd complexes.
    pub vertices: Vec<usize>,
    pub edges: Vec<GraphEdge>,
    /// Vertex positions of each connected component, sorted.
    pub components: Vec<Vec<usize>>,
}

impl SteinerGraph {
    pub fn edge(&self, a: usize, b: usize) -> Option<&GraphEdge> {
        let (a, b) = (a.min(b), a.max(b));
        self.edges.iter().find(|e| e.a == a && e.b == b)
    }
}

/// Graph on the psd rank-3 tensors, with an edge when the segment between
/// two of them lies on the boundary (`rank(θi + θj) ≤ 5`).
pub fn steiner_graph(complexes: &[SteinerComplex], rank_tol: f64) -> Result<SteinerGraph> {
    let vertices: Vec<usize> = (0..complexes.len()).filter(|&k| complexes[k].psd).collect();
    if vertices.len() != 8 {
        return Err(Error::GraphShape(format!("{} psd vertices instead of 8", vertices.len())));
    }
    let mut edges = Vec::new();
    let mut uf = UnionFind::new(vertices.len());
    for a in 0..vertices.len() {
        for b in a + 1..vertices.len() {
            let (s1, s2) = (&complexes[vertices[a]], &complexes[vertices[b]]);
            let sum = s1.tensor.add(&s2.tensor);
            let rank = sum.rank(rank_tol);
            let syzygetic = complex_relation(s1, s2)? == Relation::Syzygetic;
            if (rank <= 5) != syzygetic {
                return Err(Error::GraphShape(format!(
                    "vertices {a} and {b}: rank {rank} but relation is {}",
                    if syzygetic { "syzygetic" } else { "azygetic" }
                )));
            }
            if rank <= 5 {
                let face = gram::FaceDescriptor::of_image(gram::image(&sum, rank_tol));
                edges.push(GraphEdge { a, b, rank, face_dim: face.face_dim });
                uf.union(a, b);
            }
        }
    }
    let components = uf.classes();
    let complete = components.iter().all(|c| {
        c.iter().all(|&a| c.iter().all(|&b| a == b || edges.iter().any(|e| e.a == a.min(b) && e.b == a.max(b))))
    });
    if edges.len() != 12 || components.len() != 2 || components.iter().any(|c| c.len() != 4) || !complete {
        return Err(Error::GraphShape(format!(
            "{} edges, components {:?}",
            edges.len(),
            components.iter().map(|c| c.len()).collect::<Vec<_>>()
        )));
    }
    Ok(SteinerGraph { vertices, edges, components })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pairs(list: [(usize, usize); 6]) -> [BitPair; 6] {
        list.map(|(a, b)| BitPair::new(a, b))
    }

    #[test]
    fn relation_examples() {
        let s1 = pairs([(0, 1), (2, 3), (4, 5), (6, 7), (8, 9), (10, 11)]);
        // shares 0,1,2,3 split as {0,2},{1,3}
        let s2 = pairs([(0, 2), (1, 3), (12, 13), (14, 15), (16, 17), (18, 19)]);
        assert_eq!(relation_of_pairs(&s1, &s2), Ok(Relation::Syzygetic));
        // shares one bitangent from each pair of s1
        let s3 = pairs([(0, 12), (2, 13), (4, 14), (6, 15), (8, 16), (10, 17)]);
        assert_eq!(relation_of_pairs(&s1, &s3), Ok(Relation::Azygetic));
        let s4 = pairs([(0, 12), (13, 14), (15, 16), (17, 18), (19, 20), (21, 22)]);
        assert_eq!(relation_of_pairs(&s1, &s4), Err(Error::InconsistentIntersection(1)));
        // same four bitangents with the same pairing is not crosswise
        let s5 = pairs([(0, 1), (2, 3), (12, 13), (14, 15), (16, 17), (18, 19)]);
        assert_eq!(relation_of_pairs(&s1, &s5), Err(Error::InconsistentIntersection(4)));
    }

    #[test]
    fn eight_points_on_a_conic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // x² + 2y² − z² = 0 parametrized by a rational map
        let on_conic: [[C64; 3]; 8] = std::array::from_fn(|_| {
            let t: f64 = rng.random_range(-2.0..2.0);
            let (x, y, z) = (1.0 - t * t, std::f64::consts::SQRT_2 * t, 1.0 + t * t);
            [C64::new(x, 0.0), C64::new(y, 0.0), C64::new(z, 0.0)]
        });
        for p in &on_conic {
            let v = p[0] * p[0] + p[1] * p[1] * 2.0 - p[2] * p[2];
            assert!(v.norm() < 1e-9);
        }
        assert!(points_on_conic(&on_conic, 1e-8).0);
        let generic: [[C64; 3]; 8] =
            std::array::from_fn(|_| std::array::from_fn(|_| C64::new(rng.random_range(-1.0..1.0), 0.0)));
        assert!(!points_on_conic(&generic, 1e-8).0);
    }

    #[test]
    fn pairs_are_ordered() {
        let p = BitPair::new(5, 2);
        assert_eq!((p.i, p.j), (2, 5));
        assert_eq!(all_pairs(28).len(), PAIR_COUNT);
        assert!(p.overlaps(&BitPair::new(5, 7)));
    }
}
