//! Orchestration of the full analysis and its report sections.

use crate::bitangent::{self, Bitangent, SearchOptions};
use crate::error::Result;
use crate::forms::TernaryForm;
use crate::gram::GramTensor;
use crate::report::{Doc, Tolerances};
use crate::spectra::{self, ExtremeSample, OneDimFace, SampleRun};
use crate::steiner::{self, SteinerComplex, SteinerGraph, SteinerOptions};

pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_SAMPLES: usize = 50;

#[derive(Debug, Clone, Copy)]
pub struct Config {
    pub seed: u64,
    pub tol: Tolerances,
    pub samples: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self { seed: DEFAULT_SEED, tol: Tolerances::default(), samples: DEFAULT_SAMPLES }
    }
}

/// Bitangents and their concurrent quadruples.
pub struct BitangentStage {
    pub bits: Vec<Bitangent>,
    pub quadruples: Vec<[usize; 4]>,
}

pub fn bitangent_stage(f: &TernaryForm, cfg: &Config) -> Result<BitangentStage> {
    bitangent::check_smooth(f)?;
    let opts = SearchOptions { cert_tol: cfg.tol.cert, ..SearchOptions::default() };
    let bits = bitangent::compute_bitangents_with(f, cfg.seed, opts)?;
    let quadruples = bitangent::concurrent_quadruples(&bits, cfg.tol.cert)?;
    Ok(BitangentStage { bits, quadruples })
}

pub struct SteinerStage {
    pub complexes: Vec<SteinerComplex>,
    /// Complex indices of the real and of the psd tensors.
    pub real: Vec<usize>,
    pub psd: Vec<usize>,
}

pub fn steiner_stage(f: &TernaryForm, b: &BitangentStage, cfg: &Config) -> Result<SteinerStage> {
    let opts = SteinerOptions { cert_tol: cfg.tol.cert, rank_tol: cfg.tol.rank };
    let complexes = steiner::assemble_complexes_with(f, &b.bits, opts)?;
    let tensors: Vec<GramTensor> = complexes.iter().map(|c| c.tensor.clone()).collect();
    let (real, psd) = steiner::classify_rank3(&tensors);
    Ok(SteinerStage { complexes, real, psd })
}

/// Graph, one-dimensional faces and one generic extreme point per 2-dim face.
pub struct FaceStage {
    pub graph: SteinerGraph,
    pub one_dim: Vec<OneDimFace>,
    /// For each edge of rank 5, in edge order.
    pub face_samples: Vec<(usize, ExtremeSample)>,
}

pub fn graph_stage(s: &SteinerStage, cfg: &Config) -> Result<SteinerGraph> {
    steiner::steiner_graph(&s.complexes, cfg.tol.rank)
}

pub fn face_stage(f: &TernaryForm, b: &BitangentStage, s: &SteinerStage, cfg: &Config) -> Result<FaceStage> {
    let graph = graph_stage(s, cfg)?;
    let one_dim = spectra::one_dim_face_report(&s.complexes, &graph, &b.quadruples)?;
    let mut face_samples = Vec::new();
    for (k, e) in graph.edges.iter().enumerate() {
        if e.rank != 5 {
            continue;
        }
        let ti = &s.complexes[graph.vertices[e.a]].tensor;
        let tj = &s.complexes[graph.vertices[e.b]].tensor;
        let direction = spectra::sample_objective(cfg.seed, k);
        face_samples.push((k, spectra::face_extreme(f, ti, tj, &direction, spectra::DEFAULT_KKT_TOL)?));
    }
    Ok(FaceStage { graph, one_dim, face_samples })
}

pub struct Analysis {
    pub form: TernaryForm,
    pub config: Config,
    pub bitangents: BitangentStage,
    pub steiner: SteinerStage,
    pub faces: FaceStage,
    pub sampling: SampleRun,
}

pub fn analyze(f: &TernaryForm, cfg: &Config) -> Result<Analysis> {
    let bitangents = bitangent_stage(f, cfg)?;
    let steiner = steiner_stage(f, &bitangents, cfg)?;
    let faces = face_stage(f, &bitangents, &steiner, cfg)?;
    let sampling = spectra::sample_extreme_points_with(f, cfg.samples, cfg.seed, cfg.tol.solver_rank);
    Ok(Analysis { form: f.clone(), config: *cfg, bitangents, steiner, faces, sampling })
}

/// Four psd rank-3 tensors spanning a connected component of the graph.
pub fn slice_tensors(s: &SteinerStage, graph: &SteinerGraph) -> [GramTensor; 4] {
    let comp = &graph.components[0];
    [0, 1, 2, 3].map(|k| s.complexes[graph.vertices[comp[k]]].tensor.clone())
}

fn max_of(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(0.0, f64::max)
}

fn min_of(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(f64::INFINITY, f64::min)
}

fn matrix_doc(t: &GramTensor) -> Doc {
    let m = t.real_matrix();
    Doc::List((0..6).map(|i| Doc::floats(&(0..6).map(|j| m[(i, j)]).collect::<Vec<_>>())).collect())
}

pub fn form_doc(f: &TernaryForm) -> Doc {
    Doc::map(
        crate::forms::exponents(4)
            .iter()
            .zip(f.coeffs())
            .map(|(e, c)| (crate::forms::exponent_key(*e), Doc::Float(c.re))),
    )
}

pub fn bitangents_doc(b: &BitangentStage) -> Doc {
    let lines = b
        .bits
        .iter()
        .map(|bt| {
            Doc::map([
                ("index", Doc::Int(bt.index as i64)),
                ("line", Doc::complexes(&bt.coords())),
                ("contacts", Doc::List(bt.contacts.iter().map(|p| Doc::complexes(p.coords())).collect())),
                ("real", Doc::Bool(bt.real)),
                ("hyperflex", Doc::Bool(bt.hyperflex)),
                ("residual", Doc::Float(bt.residual)),
            ])
        })
        .collect();
    Doc::map([
        ("count", Doc::Int(b.bits.len() as i64)),
        ("real_count", Doc::Int(b.bits.iter().filter(|x| x.real).count() as i64)),
        ("hyperflex_count", Doc::Int(b.bits.iter().filter(|x| x.hyperflex).count() as i64)),
        ("lines", Doc::List(lines)),
        ("concurrent_quadruples", Doc::List(b.quadruples.iter().map(|q| Doc::ints(q)).collect())),
    ])
}

pub fn steiner_doc(s: &SteinerStage) -> Doc {
    let complexes = s
        .complexes
        .iter()
        .enumerate()
        .map(|(k, c)| {
            Doc::map([
                ("index", Doc::Int(k as i64)),
                ("pairs", Doc::List(c.pairs.iter().map(|p| Doc::ints(&[p.i, p.j])).collect())),
                ("real", Doc::Bool(c.real)),
                ("psd", Doc::Bool(c.psd)),
                ("certificate", Doc::Float(c.certificate)),
            ])
        })
        .collect();
    let psd_tensors = s
        .psd
        .iter()
        .map(|&k| Doc::map([("complex", Doc::Int(k as i64)), ("entries", matrix_doc(&s.complexes[k].tensor))]))
        .collect();
    Doc::map([
        ("complex_count", Doc::Int(s.complexes.len() as i64)),
        ("real_count", Doc::Int(s.real.len() as i64)),
        ("psd_count", Doc::Int(s.psd.len() as i64)),
        ("real_complexes", Doc::ints(&s.real)),
        ("psd_complexes", Doc::ints(&s.psd)),
        ("complexes", Doc::List(complexes)),
        ("psd_tensors", Doc::List(psd_tensors)),
    ])
}

pub fn graph_doc(g: &SteinerGraph) -> Doc {
    let edges = g
        .edges
        .iter()
        .map(|e| {
            Doc::map([
                ("vertices", Doc::ints(&[e.a, e.b])),
                ("rank", Doc::Int(e.rank as i64)),
                ("face_dim", Doc::Int(e.face_dim as i64)),
            ])
        })
        .collect();
    Doc::map([
        ("vertices", Doc::ints(&g.vertices)),
        ("edge_count", Doc::Int(g.edges.len() as i64)),
        ("edges", Doc::List(edges)),
        ("components", Doc::List(g.components.iter().map(|c| Doc::ints(c)).collect())),
    ])
}

fn sample_doc(s: &ExtremeSample) -> Doc {
    Doc::map([
        ("rank", Doc::Int(s.face.rank as i64)),
        ("face_dim", Doc::Int(s.face.face_dim as i64)),
        ("objective", Doc::Float(s.objective)),
        ("lambda", Doc::floats(&s.lambda)),
    ])
}

pub fn faces_doc(fs: &FaceStage) -> Doc {
    let one_dim = fs
        .one_dim
        .iter()
        .map(|o| {
            Doc::map([
                ("edge", Doc::ints(&[o.edge.0, o.edge.1])),
                ("complexes", Doc::ints(&[o.complexes.0, o.complexes.1])),
                ("concurrent_bitangents", Doc::ints(&o.quadruple)),
                ("face_dim", Doc::Int(o.face_dim as i64)),
            ])
        })
        .collect();
    let extremes = fs
        .face_samples
        .iter()
        .map(|(k, s)| {
            let mut d = sample_doc(s);
            if let Doc::Map(m) = &mut d {
                m.insert("edge".into(), Doc::Int(*k as i64));
            }
            d
        })
        .collect();
    Doc::map([("one_dim_faces", Doc::List(one_dim)), ("two_dim_face_extremes", Doc::List(extremes))])
}

pub fn sampling_doc(run: &SampleRun, seed: u64) -> Doc {
    let histogram = run
        .histogram()
        .into_iter()
        .map(|((r, d), n)| {
            Doc::map([("rank", Doc::Int(r as i64)), ("face_dim", Doc::Int(d as i64)), ("count", Doc::Int(n as i64))])
        })
        .collect();
    Doc::map([
        ("seed", Doc::Int(seed as i64)),
        ("requested", Doc::Int((run.samples.len() + run.failures.len()) as i64)),
        ("failures", Doc::List(run.failures.iter().map(|(k, e)| Doc::Str(format!("{k}: {e}"))).collect())),
        ("histogram", Doc::List(histogram)),
        ("samples", Doc::List(run.samples.iter().map(sample_doc).collect())),
    ])
}

impl Analysis {
    pub fn diagnostics(&self) -> Doc {
        let c = &self.steiner.complexes;
        Doc::map([
            ("max_bitangent_residual", Doc::Float(max_of(self.bitangents.bits.iter().map(|b| b.residual)))),
            ("max_complex_certificate", Doc::Float(max_of(c.iter().map(|x| x.certificate)))),
            ("max_tensor_residual", Doc::Float(max_of(c.iter().map(|x| x.residual)))),
            ("min_tensor_condition", Doc::Float(min_of(c.iter().map(|x| x.condition)))),
            ("min_span_gap", Doc::Float(min_of(c.iter().map(|x| x.span_gap)))),
            ("max_solver_kkt", Doc::Float(max_of(self.sampling.samples.iter().map(|s| s.kkt)))),
            ("smoothness_margin", Doc::Float(bitangent::smoothness_margin(&self.form))),
        ])
    }

    pub fn report(&self) -> Doc {
        let t = self.config.tol;
        Doc::map([
            ("form", form_doc(&self.form)),
            ("seed", Doc::Int(self.config.seed as i64)),
            (
                "tolerances",
                Doc::map([
                    ("rank", Doc::Float(t.rank)),
                    ("cert", Doc::Float(t.cert)),
                    ("solver_rank", Doc::Float(t.solver_rank)),
                ]),
            ),
            ("bitangents", bitangents_doc(&self.bitangents)),
            ("steiner", steiner_doc(&self.steiner)),
            ("graph", graph_doc(&self.faces.graph)),
            ("faces", faces_doc(&self.faces)),
            ("sampling", sampling_doc(&self.sampling, self.config.seed)),
            ("diagnostics", self.diagnostics()),
        ])
    }
}

/// Tab-separated slice table: header then `λ1 λ2 λ3 det λmin` per node.
pub fn slice_table(slice: &spectra::PencilSlice) -> String {
    use crate::report::format_float;
    let mut out = String::from("lambda1\tlambda2\tlambda3\tdet\tlambda_min\n");
    for r in &slice.rows {
        let cols = [r.lambda[0], r.lambda[1], r.lambda[2], r.det, r.min_eigenvalue];
        out.push_str(&cols.iter().map(|v| format_float(*v)).collect::<Vec<_>>().join("\t"));
        out.push('\n');
    }
    out
}
