//! Configuration and the staged pipeline: classify, check, lift, solve, sample, extend,
//! periodize, verify.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::conformal::{
    solve_jumps, solve_quadrilateral_by_scan, ConformalitySystem, SolverOptions, SolverReport, TEST_CIRCLE_RADII,
    TEST_CIRCLE_SAMPLES,
};
use crate::error::{Error, Result};
use crate::extend::{
    build_blowup, detect_shrinking_endpoints, periodize, reflection_identity_check, windowed_invariance,
    InvarianceReport, PeriodicAssembly, PeriodicMode, ShrinkingEndpointEvidence,
};
use crate::graph::MaximalGraph;
use crate::harmonic::symmetric_jumps;
use crate::lorentz::LorentzVec3;
use crate::mesh::{export_mesh, sample_graph, Mesh};
use crate::tessellate::{
    alternating_labels, assign_heights, centroid, classify, edges, generate_tiling, js_check, perimeter,
    Classification, EdgeLabel, JsReport, LabeledPolygon, Point2,
};
use crate::verify::{
    cluster_segment_check, degeneration_fit, maximal_equation_residual, CheckResult, GraphGrid, ImplicitSurface,
    VerificationReport, DEGENERATION_BAND,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    GraphOnly,
    Doubly,
    Triply,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "graph-only" => Ok(Mode::GraphOnly),
            "doubly" => Ok(Mode::Doubly),
            "triply" => Ok(Mode::Triply),
            other => Err(Error::InvalidInput(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Sampling {
    /// Rings of the fan mesh.
    pub resolution: usize,
    /// Grid size for the reflection identity check on each chart.
    pub chart_resolution: usize,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling {
            resolution: 24,
            chart_resolution: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub tol_newton: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
    pub hopf: f64,
    pub reflection: f64,
    pub chart_overlap: f64,
    pub cluster_ratio: f64,
    pub residual_ratio: f64,
    pub oracle: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tol_newton: 1e-11,
            max_iter: 100,
            max_halvings: 20,
            hopf: 1e-8,
            reflection: 1e-9,
            chart_overlap: 1e-8,
            cluster_ratio: 1e-2,
            residual_ratio: 3.5,
            oracle: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Output {
    pub dir: Option<PathBuf>,
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub polygon: Vec<[f64; 2]>,
    #[serde(default)]
    pub labels: Option<Vec<EdgeLabel>>,
    #[serde(default)]
    pub slit_tips: Vec<usize>,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default)]
    pub sampling: Sampling,
    /// Half-width of the tiled window; required for periodic modes.
    #[serde(default)]
    pub radius: Option<f64>,
    /// Upper bound on planar copies of the base sheet.
    #[serde(default)]
    pub copies: Option<usize>,
    /// Number of sheets stacked in triply periodic mode.
    #[serde(default)]
    pub sheets: Option<usize>,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Implicit surface the output is expected to lie on.
    #[serde(default)]
    pub oracle: Option<ImplicitSurface>,
    #[serde(default)]
    pub output: Output,
}

fn default_mode() -> Mode {
    Mode::GraphOnly
}

impl PipelineConfig {
    pub fn new(polygon: Vec<[f64; 2]>, mode: Mode) -> Self {
        PipelineConfig {
            polygon,
            labels: None,
            slit_tips: Vec::new(),
            mode,
            sampling: Sampling::default(),
            radius: None,
            copies: None,
            sheets: None,
            tolerances: Tolerances::default(),
            oracle: None,
            output: Output::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: PipelineConfig = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.polygon.len() < 3 {
            return Err(Error::InvalidInput("polygon needs at least 3 vertices".into()));
        }
        if self.sampling.resolution < 8 {
            return Err(Error::InvalidInput(format!(
                "resolution must be at least 8, got {}",
                self.sampling.resolution
            )));
        }
        if self.sampling.chart_resolution < 2 {
            return Err(Error::InvalidInput("chart_resolution must be at least 2".into()));
        }
        if let Some(l) = &self.labels {
            if l.len() != self.polygon.len() {
                return Err(Error::InvalidInput(format!(
                    "{} labels for {} edges",
                    l.len(),
                    self.polygon.len()
                )));
            }
        }
        if self.mode != Mode::GraphOnly {
            match self.radius {
                None => return Err(Error::InvalidInput("periodic modes require a radius".into())),
                Some(r) if !(r > 0.0) => return Err(Error::InvalidRadius(r)),
                _ => {}
            }
        }
        if self.copies == Some(0) {
            return Err(Error::InvalidInput("copies must be at least 1".into()));
        }
        if self.mode == Mode::Triply && self.sheets == Some(0) {
            return Err(Error::InvalidInput("sheets must be at least 1".into()));
        }
        Ok(())
    }

    pub fn vertices(&self) -> Vec<Point2> {
        self.polygon.iter().map(|&p| p.into()).collect()
    }

    pub fn labels_or_default(&self) -> Vec<EdgeLabel> {
        self.labels
            .clone()
            .unwrap_or_else(|| alternating_labels(self.polygon.len()))
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            tol_newton: self.tolerances.tol_newton,
            max_iter: self.tolerances.max_iter,
            max_halvings: self.tolerances.max_halvings,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Config,
    Classify,
    JsCheck,
    Heights,
    Solve,
    Sample,
    Extend,
    Periodize,
    Verify,
    Export,
}

impl Stage {
    /// Process exit code for a failure in this stage.
    pub fn exit_code(self) -> i32 {
        match self {
            Stage::Config => 2,
            Stage::Classify => 10,
            Stage::JsCheck => 11,
            Stage::Heights => 12,
            Stage::Solve => 13,
            Stage::Sample => 14,
            Stage::Extend => 15,
            Stage::Periodize => 16,
            Stage::Verify => 17,
            Stage::Export => 18,
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default();
        f.write_str(&s)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ChartSummary {
    pub jump: usize,
    pub center: f64,
    pub window: (f64, f64),
    pub reflection_deviation: f64,
}

/// Everything the pipeline produces; the graph itself is kept for further sampling.
#[derive(Debug, Clone, Serialize)]
pub struct PipelineOutput {
    pub classification: Classification,
    pub js: JsReport,
    pub polygon: LabeledPolygon,
    pub solver: SolverReport,
    pub shrinking: Vec<ShrinkingEndpointEvidence>,
    pub charts: Vec<ChartSummary>,
    pub mesh: Mesh,
    pub assembly: Option<PeriodicAssembly>,
    pub verification: VerificationReport,
    #[serde(skip)]
    pub graph: MaximalGraph,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct PartialReports {
    pub classification: Option<Classification>,
    pub js: Option<JsReport>,
    pub solver: Option<SolverReport>,
    pub verification: Option<VerificationReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineFailure {
    pub stage: Stage,
    pub message: String,
    pub reports: PartialReports,
}

impl fmt::Display for PipelineFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "stage {} failed: {}", self.stage, self.message)
    }
}

impl std::error::Error for PipelineFailure {}

fn fail(stage: Stage, message: impl Into<String>, reports: &PartialReports) -> PipelineFailure {
    PipelineFailure {
        stage,
        message: message.into(),
        reports: reports.clone(),
    }
}

/// Lifted edges of the zonogon with planar edges `e_0, e_1, e_2, -e_0, -e_1, -e_2`, alternately labelled.
fn zonogon_lifted_edges(e: &[Point2; 3], first: EdgeLabel) -> Vec<LorentzVec3> {
    let planar = [e[0], e[1], e[2], e[0].scale(-1.0), e[1].scale(-1.0), e[2].scale(-1.0)];
    let mut label = first;
    planar
        .iter()
        .map(|p| {
            let v = p.lift(label.sign() * p.norm());
            label = label.flipped();
            v
        })
        .collect()
}

/// Solves for the jump points: symmetric start, then a scan (quadrilaterals) or continuation
/// from the regular hexagon with the same first edge (hexagons).
pub fn solve_polygon(polygon: &LabeledPolygon, opts: &SolverOptions) -> Result<SolverReport> {
    let n = polygon.len();
    let lifted = polygon.lifted_edges();
    let start = symmetric_jumps(n);
    let first = solve_jumps(&lifted, &start, opts);
    if let Ok(rep) = &first {
        if rep.converged {
            return first;
        }
    }
    match n {
        4 => solve_quadrilateral_by_scan(&lifted, [start[0], start[1], start[2]], opts),
        6 => {
            let target = edges(&polygon.vertices);
            let tgt = [target[0], target[1], target[2]];
            let ang0: Vec<f64> = tgt.iter().map(|e| e.y.atan2(e.x)).collect();
            let mut ang = ang0.clone();
            for i in 1..3 {
                while ang[i] < ang[i - 1] {
                    ang[i] += 2.0 * PI;
                }
            }
            let mean_len = tgt.iter().map(|e| e.norm()).sum::<f64>() / 3.0;
            let edges_at = |lambda: f64| -> [Point2; 3] {
                let mut out = [Point2::new(0.0, 0.0); 3];
                for i in 0..3 {
                    let a = (1.0 - lambda) * (ang[0] + i as f64 * PI / 3.0) + lambda * ang[i];
                    let l = (1.0 - lambda) * mean_len + lambda * tgt[i].norm();
                    out[i] = Point2::new(a.cos(), a.sin()).scale(l);
                }
                out
            };
            let mut jumps = start.clone();
            let mut lambda: f64 = 0.0;
            let mut step: f64 = 0.1;
            let mut last = None;
            while lambda < 1.0 {
                let next = (lambda + step).min(1.0);
                let lifted_next = zonogon_lifted_edges(&edges_at(next), polygon.labels[0]);
                match solve_jumps(&lifted_next, &jumps, opts) {
                    Ok(rep) if rep.converged => {
                        jumps = rep.jumps.clone();
                        lambda = next;
                        step = (step * 1.5).min(0.25);
                        last = Some(rep);
                    }
                    _ => {
                        step *= 0.5;
                        if step < 1e-4 {
                            break;
                        }
                    }
                }
            }
            match last {
                Some(rep) if lambda >= 1.0 => {
                    // Polish on the exact input edges.
                    solve_jumps(&lifted, &rep.jumps, opts)
                }
                _ => first,
            }
        }
        _ => first,
    }
}

fn record_tolerances(report: &mut VerificationReport, cfg: &PipelineConfig) {
    let t = &cfg.tolerances;
    for (k, v) in [
        ("tol_newton", t.tol_newton),
        ("max_iter", t.max_iter as f64),
        ("max_halvings", t.max_halvings as f64),
        ("hopf", t.hopf),
        ("reflection", t.reflection),
        ("chart_overlap", t.chart_overlap),
        ("cluster_ratio", t.cluster_ratio),
        ("residual_ratio", t.residual_ratio),
        ("degeneration_min", DEGENERATION_BAND.0),
        ("degeneration_max", DEGENERATION_BAND.1),
        ("eps_causal_relative", crate::lorentz::CAUSAL_RTOL),
        ("eps_len_relative", crate::tessellate::LEN_RTOL),
        ("jump_exclusion", crate::harmonic::JUMP_EXCLUSION),
    ] {
        report.tolerances.insert(k.to_string(), v);
    }
    if cfg.oracle.is_some() {
        report.tolerances.insert("oracle".into(), t.oracle);
    }
}

/// Residual of the maximal surface equation at probe points, with steps `h` and `h/2`.
fn residual_convergence(graph: &MaximalGraph, h: f64) -> Result<(f64, f64, f64)> {
    let poly = &graph.polygon().vertices;
    let c = centroid(poly);
    let mut probes = vec![c];
    for v in poly {
        probes.push(c.add(v.sub(c).scale(0.5)));
    }
    let mut sup = [0.0f64; 2];
    let mut grad: f64 = 0.0;
    for (i, step) in [h, h / 2.0].into_iter().enumerate() {
        for p in &probes {
            let x0 = p.x - step;
            let y0 = p.y - step;
            let xs = [x0, x0 + step, x0 + 2.0 * step];
            let ys = [y0, y0 + step, y0 + 2.0 * step];
            let values = graph.sample_grid(&xs, &ys)?;
            let r = maximal_equation_residual(&GraphGrid {
                x0,
                y0,
                h: step,
                values,
            })?;
            sup[i] = sup[i].max(r.sup_residual);
            grad = grad.max(r.max_gradient_sq);
        }
    }
    Ok((sup[0], sup[1], grad))
}

pub fn run_pipeline(cfg: &PipelineConfig) -> std::result::Result<PipelineOutput, PipelineFailure> {
    let mut reports = PartialReports::default();
    cfg.validate()
        .map_err(|e| fail(Stage::Config, e.to_string(), &reports))?;
    let vertices = cfg.vertices();
    let labels = cfg.labels_or_default();

    let class = classify(&vertices).map_err(|e| fail(Stage::Classify, e.to_string(), &reports))?;
    reports.classification = Some(class.clone());
    if !class.in_class {
        return Err(fail(
            Stage::Classify,
            class.reason.clone().unwrap_or_else(|| "not in class".into()),
            &reports,
        ));
    }

    let js = js_check(&vertices, &labels).map_err(|e| fail(Stage::JsCheck, e.to_string(), &reports))?;
    reports.js = Some(js.clone());
    if !js.passes {
        return Err(fail(
            Stage::JsCheck,
            js.reason.clone().unwrap_or_else(|| "conditions fail".into()),
            &reports,
        ));
    }
    if !class.constructible {
        return Err(fail(
            Stage::Classify,
            class
                .reason
                .clone()
                .unwrap_or_else(|| "construction unsupported".into()),
            &reports,
        ));
    }

    let polygon = assign_heights(&vertices, &labels).map_err(|e| fail(Stage::Heights, e.to_string(), &reports))?;

    let opts = cfg.solver_options();
    let solver = solve_polygon(&polygon, &opts).map_err(|e| fail(Stage::Solve, e.to_string(), &reports))?;
    reports.solver = Some(solver.clone());
    if !solver.converged {
        return Err(fail(
            Stage::Solve,
            format!(
                "no convergence after {} iterations, residual {:e}",
                solver.iterations, solver.residual_norm
            ),
            &reports,
        ));
    }

    let shrinking = detect_shrinking_endpoints(&polygon, &cfg.slit_tips);
    let shrink_idx: Vec<usize> = shrinking.iter().map(|e| e.vertex).collect();
    let graph =
        MaximalGraph::new(polygon.clone(), &solver.jumps).map_err(|e| fail(Stage::Sample, e.to_string(), &reports))?;
    let mesh = sample_graph(&graph, cfg.sampling.resolution, &shrink_idx)
        .map_err(|e| fail(Stage::Sample, e.to_string(), &reports))?;

    let mut verification = VerificationReport::default();
    record_tolerances(&mut verification, cfg);
    let t = &cfg.tolerances;
    let n = polygon.len();

    // Conformality.
    verification.push(CheckResult::below("jump_residual", solver.residual_norm, t.tol_newton));
    let sys =
        ConformalitySystem::new(polygon.lifted_edges()).map_err(|e| fail(Stage::Verify, e.to_string(), &reports))?;
    let hopf = sys.hopf_sup(&solver.jumps, &TEST_CIRCLE_RADII, TEST_CIRCLE_SAMPLES);
    verification.push(CheckResult::below("hopf_sup", hopf, t.hopf));

    // Charts across every lightlike segment.
    let mut charts = Vec::new();
    let shrinking_ends = (0..n).all(|k| shrink_idx.contains(&k));
    for k in 0..n {
        let chart = build_blowup(graph.patch(), k, None).map_err(|e| fail(Stage::Extend, e.to_string(), &reports))?;
        let m = cfg.sampling.chart_resolution;
        let rep = reflection_identity_check(&chart, 1.0, (0.05 * PI, 0.95 * PI), m)
            .map_err(|e| fail(Stage::Extend, e.to_string(), &reports))?;
        verification.push(CheckResult::below(
            format!("reflection_identity[{k}]"),
            rep.max_deviation,
            t.reflection,
        ));
        charts.push(ChartSummary {
            jump: k,
            center: chart.center(),
            window: (chart.sigma, chart.tau),
            reflection_deviation: rep.max_deviation,
        });
    }
    // Adjacent charts agree where both are defined.
    for k in 0..charts.len() {
        let j = (k + 1) % charts.len();
        if charts.len() < 2 {
            break;
        }
        let c1 = build_blowup(graph.patch(), charts[k].jump, None)
            .map_err(|e| fail(Stage::Extend, e.to_string(), &reports))?;
        let c2 = build_blowup(graph.patch(), charts[j].jump, None)
            .map_err(|e| fail(Stage::Extend, e.to_string(), &reports))?;
        let mut worst: f64 = 0.0;
        for i in 0..16 {
            let g = Complex64::new(0.5 * (c1.center() + c2.center()), 0.2 + 0.1 * i as f64);
            let v1 = c1
                .eval_at(g - c1.center())
                .map_err(|e| fail(Stage::Extend, e.to_string(), &reports))?;
            let v2 = c2
                .eval_at(g - c2.center())
                .map_err(|e| fail(Stage::Extend, e.to_string(), &reports))?;
            worst = worst.max(v1.dist(&v2));
        }
        verification.push(CheckResult::below(
            format!("chart_overlap[{}-{}]", charts[k].jump, charts[j].jump),
            worst,
            t.chart_overlap,
        ));
    }

    // Boundary behaviour.
    for k in 0..n {
        let fit = degeneration_fit(&graph, k, polygon.labels[k].sign(), 10, 0.05)
            .map_err(|e| fail(Stage::Verify, e.to_string(), &reports))?;
        let mut c = CheckResult {
            name: format!("degeneration_exponent[{k}]"),
            value: fit.exponent,
            tolerance: DEGENERATION_BAND.1,
            passed: fit.accepted,
            detail: Some(format!("band [{}, {}]", DEGENERATION_BAND.0, DEGENERATION_BAND.1)),
        };
        if !fit.warnings.is_empty() {
            c.detail = Some(format!("{}; {}", c.detail.unwrap_or_default(), fit.warnings.join("; ")));
        }
        verification.push(c);
        let cl = cluster_segment_check(graph.patch(), k, &[1e-2, 1e-3, 1e-4], 64)
            .map_err(|e| fail(Stage::Verify, e.to_string(), &reports))?;
        verification.push(CheckResult::below(
            format!("cluster_segment[{k}]"),
            cl.distances[2] / cl.segment_length,
            t.cluster_ratio,
        ));
    }

    // Maximal surface equation.
    let h = 0.02 * perimeter(&polygon.vertices) / n as f64;
    let (r1, r2, grad) = residual_convergence(&graph, h).map_err(|e| fail(Stage::Verify, e.to_string(), &reports))?;
    verification.push(CheckResult::below("spacelike_gradient_sq", grad, 1.0));
    verification.push(CheckResult {
        name: "residual_order_ratio".into(),
        value: r1 / r2,
        tolerance: t.residual_ratio,
        passed: r1 / r2 >= t.residual_ratio,
        detail: Some(format!("sup residual {r1:e} at h = {h:e}, {r2:e} at h/2")),
    });
    if mesh.validate().is_err() {
        verification.push(CheckResult::below("mesh_valid", 1.0, 0.5));
    }

    let assembly = match cfg.mode {
        Mode::GraphOnly => None,
        Mode::Doubly | Mode::Triply => {
            if !shrinking_ends {
                return Err(fail(
                    Stage::Extend,
                    "not every vertex is a shrinking singularity",
                    &reports,
                ));
            }
            let radius = cfg.radius.expect("validated");
            let tiling =
                generate_tiling(&polygon, radius).map_err(|e| fail(Stage::Periodize, e.to_string(), &reports))?;
            verification.push(CheckResult::below(
                "tiling_coverage_gap",
                tiling.coverage.relative_gap,
                1e-6,
            ));
            let mode = if cfg.mode == Mode::Doubly {
                PeriodicMode::Doubly
            } else {
                PeriodicMode::Triply
            };
            let asm = periodize(
                &mesh,
                &polygon,
                &tiling,
                mode,
                cfg.copies.unwrap_or(usize::MAX),
                cfg.sheets.unwrap_or(3),
            )
            .map_err(|e| fail(Stage::Periodize, e.to_string(), &reports))?;
            let hlen = asm.base_edge_length;
            let c = tiling.window_center;
            let complete = asm.copies == tiling.copies.len();
            if !complete {
                verification
                    .tolerances
                    .insert("invariance_skipped_copies".into(), asm.copies as f64);
            }
            let sheet_of: HashMap<[u64; 3], i64> = asm
                .mesh
                .vertices
                .iter()
                .zip(&asm.sheet_of_vertex)
                .map(|(p, s)| (point_key(p), *s))
                .collect();
            let sheet = |p: &LorentzVec3| sheet_of.get(&point_key(p)).copied().unwrap_or(0);
            let top = asm.sheets.iter().copied().max().unwrap_or(0);
            let shift = asm.sheet_translation.unwrap_or(LorentzVec3::ZERO);
            // Planar region covered by sheet `j`, shrunk by one edge.
            let covered = |q: &LorentzVec3, j: i64| {
                let w = radius - hlen;
                (q.x - c.x - j as f64 * shift.x).abs() <= w && (q.y - c.y - j as f64 * shift.y).abs() <= w
            };
            let lattice_gens: &[LorentzVec3] = if complete { asm.lattice.generators() } else { &[] };
            for (i, g) in lattice_gens.iter().enumerate() {
                let g = *g;
                let rep = if asm.sheet_translation.is_some_and(|e| e.dist(&g) == 0.0) {
                    // Only sheets with a neighbour above them.
                    windowed_invariance(&asm.mesh.vertices, |p| *p + g, |p| *p + g, |p| sheet(p) < top, hlen)
                } else {
                    windowed_invariance(
                        &asm.mesh.vertices,
                        |p| *p + g,
                        |p| *p - g,
                        |p| {
                            let j = sheet(p);
                            covered(p, j) && covered(&(*p + g), j) && covered(&(*p - g), j)
                        },
                        hlen,
                    )
                };
                verification.push(invariance_check(format!("lattice_invariance[{i}]"), &rep));
            }
            let midpoints: &[LorentzVec3] = if complete { &tiling.generators } else { &[] };
            for (k, m) in midpoints.iter().enumerate() {
                let m = *m;
                // The point symmetry exchanges sheets `j` and `-j`.
                let rep = windowed_invariance(
                    &asm.mesh.vertices,
                    |p| m * 2.0 - *p,
                    |p| m * 2.0 - *p,
                    |p| {
                        let j = sheet(p);
                        asm.sheets.contains(&-j) && covered(p, j) && covered(&(m * 2.0 - *p), -j)
                    },
                    hlen,
                );
                verification.push(invariance_check(format!("midpoint_symmetry[{k}]"), &rep));
            }
            Some(asm)
        }
    };

    if let Some(surface) = cfg.oracle {
        let pts = assembly.as_ref().map_or(&mesh.vertices, |a| &a.mesh.vertices);
        let worst = pts.iter().map(|p| surface.residual(p).abs()).fold(0.0, f64::max);
        verification.push(CheckResult::below(format!("oracle_{surface}"), worst, t.oracle));
    }

    reports.verification = Some(verification.clone());
    if !verification.passed() {
        let failed: Vec<String> = verification
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.clone())
            .collect();
        return Err(fail(
            Stage::Verify,
            format!("failed checks: {}", failed.join(", ")),
            &reports,
        ));
    }

    Ok(PipelineOutput {
        classification: class,
        js,
        polygon,
        solver,
        shrinking,
        charts,
        mesh,
        assembly,
        verification,
        graph,
    })
}

fn point_key(p: &LorentzVec3) -> [u64; 3] {
    [p.x.to_bits(), p.y.to_bits(), p.t.to_bits()]
}

fn invariance_check(name: String, rep: &InvarianceReport) -> CheckResult {
    let mut c = CheckResult::below(name, rep.hausdorff, rep.threshold)
        .with_detail(format!("{} points in window", rep.points_checked));
    c.passed = rep.passes;
    c
}

/// Writes the base mesh and the periodic assembly, if any, each with its sidecar.
pub fn write_meshes(out: &PipelineOutput, dir: &Path, name: &str) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let base = dir.join(format!("{name}.obj"));
    export_mesh(&out.mesh, &base)?;
    written.push(base);
    if let Some(asm) = &out.assembly {
        let p = dir.join(format!("{name}_periodic.obj"));
        export_mesh(&asm.mesh, &p)?;
        written.push(p);
    }
    Ok(written)
}

/// [`write_meshes`] plus a JSON report of every stage.
pub fn write_outputs(out: &PipelineOutput, dir: &Path, name: &str) -> Result<Vec<PathBuf>> {
    let mut written = write_meshes(out, dir, name)?;
    let mut reports = BTreeMap::new();
    reports.insert("classification", serde_json::to_value(&out.classification)?);
    reports.insert("js", serde_json::to_value(&out.js)?);
    reports.insert("solver", serde_json::to_value(&out.solver)?);
    reports.insert("shrinking", serde_json::to_value(&out.shrinking)?);
    reports.insert("charts", serde_json::to_value(&out.charts)?);
    reports.insert("verification", serde_json::to_value(&out.verification)?);
    if let Some(asm) = &out.assembly {
        let mut lat = serde_json::Map::new();
        lat.insert("generators".into(), serde_json::to_value(asm.lattice.generators())?);
        lat.insert(
            "causal_characters".into(),
            serde_json::to_value(asm.lattice.causal_characters())?,
        );
        lat.insert("sheets".into(), serde_json::to_value(&asm.sheets)?);
        lat.insert("copies".into(), serde_json::to_value(asm.copies)?);
        reports.insert("lattice", serde_json::Value::Object(lat));
    }
    let p = dir.join(format!("{name}_report.json"));
    std::fs::write(&p, serde_json::to_string_pretty(&reports)? + "\n")?;
    written.push(p);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_config(mode: Mode) -> PipelineConfig {
        let mut c = PipelineConfig::new(vec![[0.0, 0.0], [PI, 0.0], [PI, PI], [0.0, PI]], mode);
        c.sampling.resolution = 12;
        c.sampling.chart_resolution = 20;
        if mode != Mode::GraphOnly {
            c.radius = Some(10.0);
        }
        c
    }

    fn print_failures(r: &VerificationReport) {
        for c in r.checks.iter().filter(|c| !c.passed) {
            eprintln!("{} = {:e} (tol {:e}) {:?}", c.name, c.value, c.tolerance, c.detail);
        }
    }

    #[test]
    fn square_graph_only_passes() {
        let out = match run_pipeline(&square_config(Mode::GraphOnly)) {
            Ok(o) => o,
            Err(e) => {
                if let Some(v) = &e.reports.verification {
                    print_failures(v);
                }
                panic!("{e}");
            }
        };
        assert_eq!(out.charts.len(), 4);
        assert_eq!(out.shrinking.len(), 4);
        assert!(out.assembly.is_none());
        assert!(out.verification.checks.iter().any(|c| c.name == "residual_order_ratio"));
    }

    #[test]
    fn square_triply_lies_on_catalog_surface() {
        let mut c = square_config(Mode::Triply);
        c.oracle = Some(ImplicitSurface::S3);
        let out = match run_pipeline(&c) {
            Ok(o) => o,
            Err(e) => {
                if let Some(v) = &e.reports.verification {
                    print_failures(v);
                }
                panic!("{e}");
            }
        };
        let asm = out.assembly.unwrap();
        assert_eq!(asm.lattice.rank(), 3);
        assert_eq!(asm.sheets, vec![0, 1, -1]);
    }

    #[test]
    fn doubly_periodic_square() {
        let out = run_pipeline(&square_config(Mode::Doubly)).unwrap();
        assert_eq!(out.assembly.unwrap().lattice.rank(), 2);
    }

    #[test]
    fn triangle_rejected() {
        let c = PipelineConfig::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], Mode::GraphOnly);
        let e = run_pipeline(&c).unwrap_err();
        assert_eq!(e.stage, Stage::JsCheck);
        assert_eq!(e.stage.exit_code(), 11);
        assert!(e.message.contains("α_Ω=β_Ω"), "{}", e.message);
    }

    #[test]
    fn rectangle_fails_balance() {
        let c = PipelineConfig::new(vec![[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [0.0, 1.0]], Mode::GraphOnly);
        let e = run_pipeline(&c).unwrap_err();
        assert_eq!(e.stage, Stage::JsCheck);
        assert!(e.reports.js.is_some());
    }

    #[test]
    fn config_validation() {
        let mut c = square_config(Mode::GraphOnly);
        c.sampling.resolution = 4;
        assert_eq!(run_pipeline(&c).unwrap_err().stage, Stage::Config);
        let c = PipelineConfig::new(vec![[0.0, 0.0], [PI, 0.0], [PI, PI], [0.0, PI]], Mode::Doubly);
        assert!(c.validate().is_err());
        assert!(PipelineConfig::from_json(r#"{"polygon": [[0,0],[1,0],[1,1],[0,1]], "bogus": 1}"#).is_err());
        let c = PipelineConfig::from_json(r#"{"polygon": [[0,0],[1,0],[1,1],[0,1]], "mode": "triply", "radius": 3}"#)
            .unwrap();
        assert_eq!(c.mode, Mode::Triply);
        assert_eq!(c.labels_or_default().len(), 4);
    }

    #[test]
    fn tolerances_are_recorded() {
        let out = run_pipeline(&square_config(Mode::GraphOnly)).unwrap();
        for k in [
            "tol_newton",
            "hopf",
            "reflection",
            "degeneration_min",
            "eps_causal_relative",
        ] {
            assert!(out.verification.tolerances.contains_key(k), "{k}");
        }
    }

    #[test]
    fn hexagon_solves() {
        let mut v = Vec::new();
        for k in 0..6 {
            let a = PI / 3.0 * k as f64;
            v.push([a.cos(), a.sin()]);
        }
        let mut c = PipelineConfig::new(v, Mode::GraphOnly);
        c.sampling.resolution = 10;
        c.sampling.chart_resolution = 10;
        let out = match run_pipeline(&c) {
            Ok(o) => o,
            Err(e) => {
                if let Some(v) = &e.reports.verification {
                    print_failures(v);
                }
                panic!("{e}");
            }
        };
        assert!(out.solver.converged);
    }

    #[test]
    fn regular_hexagon_triply() {
        let v = (0..6)
            .map(|k| [(PI / 3.0 * k as f64).cos(), (PI / 3.0 * k as f64).sin()])
            .collect();
        let mut c = PipelineConfig::new(v, Mode::Triply);
        c.radius = Some(5.0);
        c.sampling.resolution = 8;
        c.sampling.chart_resolution = 8;
        let out = run_pipeline(&c).unwrap();
        let asm = out.assembly.unwrap();
        assert!(asm.sheets.len() >= 2);
        assert_eq!(asm.lattice.rank(), 3);
        assert_eq!(asm.lattice.generators().len(), 3);
    }

    #[test]
    fn outputs_are_deterministic() {
        let c = square_config(Mode::Doubly);
        let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let f1 = write_outputs(&run_pipeline(&c).unwrap(), d1.path(), "s").unwrap();
        let f2 = write_outputs(&run_pipeline(&c).unwrap(), d2.path(), "s").unwrap();
        for (a, b) in f1.iter().zip(&f2) {
            assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap(), "{}", a.display());
        }
    }

    #[test]
    fn outputs_written() {
        let out = run_pipeline(&square_config(Mode::Doubly)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let files = write_outputs(&out, dir.path(), "sq").unwrap();
        assert_eq!(files.len(), 3);
        let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&files[2]).unwrap()).unwrap();
        assert!(report["lattice"]["generators"].is_array());
    }
}
