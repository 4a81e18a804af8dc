//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::f64::consts::PI;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use lightlike::conformal::{ConformalitySystem, SolverOptions, TEST_CIRCLE_RADII, TEST_CIRCLE_SAMPLES};
use lightlike::extend::{build_blowup, reflection_identity_check};
use lightlike::graph::MaximalGraph;
use lightlike::pipeline::{run_pipeline, solve_polygon, Mode, PipelineConfig};
use lightlike::tessellate::{alternating_labels, assign_heights, classify, js_check, Point2};
use lightlike::verify::{degeneration_fit, maximal_equation_residual_in, scherk_psi, GraphGrid, ImplicitSurface};

struct Outcome {
    passed: bool,
    summary: String,
}

fn outcome(passed: bool, summary: String) -> Outcome {
    Outcome { passed, summary }
}

fn square() -> Vec<[f64; 2]> {
    vec![[0.0, 0.0], [PI, 0.0], [PI, PI], [0.0, PI]]
}

fn regular_hexagon() -> Vec<Point2> {
    (0..6)
        .map(|k| Point2::new((PI / 3.0 * k as f64).cos(), (PI / 3.0 * k as f64).sin()))
        .collect()
}

/// Hexagon with edges `e_0, e_1, e_2, -e_0, -e_1, -e_2`, starting at the origin.
fn zonogon(angles: [f64; 3], lengths: [f64; 3]) -> Vec<Point2> {
    let e: Vec<Point2> = (0..3)
        .map(|i| Point2::new(angles[i].cos(), angles[i].sin()).scale(lengths[i]))
        .collect();
    let steps = [e[0], e[1], e[2], e[0].scale(-1.0), e[1].scale(-1.0), e[2].scale(-1.0)];
    let mut p = Point2::new(0.0, 0.0);
    let mut out = Vec::with_capacity(6);
    for s in steps {
        out.push(p);
        p = p.add(s);
    }
    out
}

fn graph_of(vertices: &[Point2]) -> MaximalGraph {
    let lp = assign_heights(vertices, &alternating_labels(vertices.len())).expect("heights");
    let rep = solve_polygon(&lp, &SolverOptions::default()).expect("solve");
    assert!(rep.converged, "solver did not converge");
    MaximalGraph::new(lp, &rep.jumps).expect("graph")
}

fn scherk_oracle() -> Outcome {
    let start = Instant::now();
    let mut cfg = PipelineConfig::new(square(), Mode::GraphOnly);
    cfg.sampling.resolution = 16;
    let out = match run_pipeline(&cfg) {
        Ok(o) => o,
        Err(e) => return outcome(false, e.to_string()),
    };
    let m = 100;
    let xs: Vec<f64> = (0..m).map(|i| 0.1 + (PI - 0.2) * i as f64 / (m - 1) as f64).collect();
    let grid = match out.graph.sample_grid(&xs, &xs) {
        Ok(g) => g,
        Err(e) => return outcome(false, e.to_string()),
    };
    let c = PI / 2.0;
    let shift = out.graph.psi(Point2::new(c, c)).unwrap() - scherk_psi(c, c);
    let mut worst: f64 = 0.0;
    for (j, row) in grid.iter().enumerate() {
        for (i, v) in row.iter().enumerate() {
            worst = worst.max((v - shift - scherk_psi(xs[i], xs[j])).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst < 1e-3 && secs < 30.0,
        format!("max deviation {worst:.3e} (< 1e-3), {secs:.1} s (< 30 s)"),
    )
}

fn conformality() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(7);
    let mut polygons = vec![square().into_iter().map(Point2::from).collect::<Vec<_>>()];
    let mut tried = 0;
    while polygons.len() < 21 && tried < 1000 {
        tried += 1;
        let mut angles = [0.0, PI / 3.0, 2.0 * PI / 3.0];
        let mut lengths = [1.0; 3];
        for i in 0..3 {
            angles[i] += rng.gen_range(-0.1..0.1);
            lengths[i] *= 1.0 + rng.gen_range(-0.1..0.1);
        }
        let v = zonogon(angles, lengths);
        if js_check(&v, &alternating_labels(6)).is_ok_and(|r| r.passes) {
            polygons.push(v);
        }
    }
    let mut worst_r: f64 = 0.0;
    let mut worst_q: f64 = 0.0;
    let mut failures = 0;
    for v in &polygons {
        let lp = assign_heights(v, &alternating_labels(v.len())).unwrap();
        match solve_polygon(&lp, &SolverOptions::default()) {
            Ok(rep) if rep.converged => {
                let sys = ConformalitySystem::new(lp.lifted_edges()).unwrap();
                let r = sys.residuals(&rep.jumps).iter().fold(0.0f64, |m, x| m.max(x.abs()));
                worst_r = worst_r.max(r);
                worst_q = worst_q.max(sys.hopf_sup(&rep.jumps, &TEST_CIRCLE_RADII, TEST_CIRCLE_SAMPLES));
            }
            _ => failures += 1,
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        polygons.len() == 21 && failures == 0 && worst_r < 1e-10 && worst_q < 1e-8 && secs < 10.0,
        format!(
            "{} polygons, {failures} unconverged, max|R| {worst_r:.2e} (< 1e-10), sup|Q| {worst_q:.2e} (< 1e-8), {secs:.1} s (< 10 s)",
            polygons.len()
        ),
    )
}

fn reflection() -> Outcome {
    let g = graph_of(&square().into_iter().map(Point2::from).collect::<Vec<_>>());
    let mut worst: f64 = 0.0;
    for k in 0..4 {
        let chart = build_blowup(g.patch(), k, None).unwrap();
        let rep = reflection_identity_check(&chart, 1.0, (0.05 * PI, 0.95 * PI), 50).unwrap();
        worst = worst.max(rep.max_deviation);
    }
    outcome(
        worst < 1e-9,
        format!("max deviation {worst:.2e} over 4 charts (< 1e-9)"),
    )
}

fn degeneration() -> Outcome {
    let mut exps = Vec::new();
    for v in [
        square().into_iter().map(Point2::from).collect::<Vec<_>>(),
        regular_hexagon(),
    ] {
        let g = graph_of(&v);
        for k in 0..v.len() {
            let sign = g.polygon().labels[k].sign();
            match degeneration_fit(&g, k, sign, 10, 0.05) {
                Ok(f) => exps.push(f.exponent),
                Err(_) => exps.push(f64::NAN),
            }
        }
    }
    let ok = exps.len() == 10 && exps.iter().all(|e| (1.7..=2.3).contains(e));
    let (lo, hi) = exps
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &e| (a.min(e), b.max(e)));
    outcome(
        ok,
        format!("{} exponents in [{lo:.3}, {hi:.3}] (band [1.7, 2.3])", exps.len()),
    )
}

fn classifier() -> Outcome {
    let mut rng = StdRng::seed_from_u64(11);
    let mut disagreements = 0;
    let mut passing = 0;
    for _ in 0..1000 {
        let a0 = rng.gen_range(0.0..2.0 * PI);
        let g1 = rng.gen_range(0.05..PI - 0.1);
        let g2 = rng.gen_range(0.05..PI - 0.05 - g1);
        let lengths = [
            rng.gen_range(0.2..2.0),
            rng.gen_range(0.2..2.0),
            rng.gen_range(0.2..2.0),
        ];
        let v = zonogon([a0, a0 + g1, a0 + g1 + g2], lengths);
        let r = js_check(&v, &alternating_labels(6)).unwrap();
        let hex = r.hexagon.expect("hexagon criterion");
        if !hex.agrees_with_enumeration || hex.passes != r.passes {
            disagreements += 1;
        }
        passing += r.passes as usize;
    }
    let mut triangles_accepted = 0;
    for _ in 0..200 {
        let mut v: Vec<Point2> = (0..3)
            .map(|_| Point2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let area = (v[1].sub(v[0])).cross(v[2].sub(v[0]));
        if area.abs() < 1e-3 {
            continue;
        }
        if area < 0.0 {
            v.swap(1, 2);
        }
        if js_check(&v, &alternating_labels(3)).is_ok_and(|r| r.passes) {
            triangles_accepted += 1;
        }
    }
    let mut valency_ok = true;
    for n in [3usize, 4, 6] {
        let v: Vec<Point2> = (0..n)
            .map(|k| {
                Point2::new(
                    (2.0 * PI * k as f64 / n as f64).cos(),
                    (2.0 * PI * k as f64 / n as f64).sin(),
                )
            })
            .collect();
        let j = classify(&v).unwrap().valency.unwrap_or(0) as usize;
        valency_ok &= (n - 2) * j == 2 * n;
    }
    outcome(
        disagreements == 0 && triangles_accepted == 0 && valency_ok,
        format!("{disagreements} disagreements in 1000 hexagons ({passing} pass), {triangles_accepted} triangles accepted, valency identity {}", if valency_ok { "holds" } else { "fails" }),
    )
}

fn periodicity() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (mode, expect) in [(Mode::Doubly, 2usize), (Mode::Triply, 3)] {
        let mut cfg = PipelineConfig::new(square(), mode);
        cfg.radius = Some(10.0);
        cfg.sampling.resolution = 12;
        cfg.sampling.chart_resolution = 10;
        let out = match run_pipeline(&cfg) {
            Ok(o) => o,
            Err(e) => return outcome(false, format!("{mode:?}: {e}")),
        };
        let asm = out.assembly.expect("assembly");
        let checks: Vec<_> = out
            .verification
            .checks
            .iter()
            .filter(|c| c.name.starts_with("lattice_invariance"))
            .collect();
        ok &= asm.lattice.rank() == expect && checks.len() == expect && checks.iter().all(|c| c.passed);
        let worst = checks.iter().map(|c| c.value).fold(0.0, f64::max);
        let edge = asm.base_edge_length;
        lines.push(format!(
            "{mode:?} {} generators, Hausdorff {worst:.2e} (< {:.2e})",
            checks.len(),
            2.0 * edge
        ));
        if mode == Mode::Doubly {
            let s3 = asm
                .mesh
                .vertices
                .iter()
                .map(|p| ImplicitSurface::S3.residual(p).abs())
                .fold(0.0, f64::max);
            ok &= s3 < 1e-3;
            lines.push(format!("S3 residual {s3:.2e} (< 1e-3)"));
        }
    }
    outcome(ok, lines.join("; "))
}

fn maximal_residual() -> Outcome {
    let g = graph_of(&square().into_iter().map(Point2::from).collect::<Vec<_>>());
    let a = 0.2;
    let span = PI - 2.0 * a;
    let lo = a + 4.0 * span / 64.0;
    let mut sups = Vec::new();
    let mut grad: f64 = 0.0;
    for m in [64usize, 128, 256] {
        let h = span / m as f64;
        let xs: Vec<f64> = (0..=m).map(|i| a + h * i as f64).collect();
        let values = match g.sample_grid(&xs, &xs) {
            Ok(v) => v,
            Err(e) => return outcome(false, e.to_string()),
        };
        match maximal_equation_residual_in(
            &GraphGrid {
                x0: a,
                y0: a,
                h,
                values,
            },
            [lo, PI - lo, lo, PI - lo],
        ) {
            Ok(r) => {
                sups.push(r.sup_residual);
                grad = grad.max(r.max_gradient_sq);
            }
            Err(e) => return outcome(false, e.to_string()),
        }
    }
    let ratios: Vec<f64> = sups.windows(2).map(|w| w[0] / w[1]).collect();
    outcome(
        ratios.iter().all(|r| *r >= 3.5) && grad < 1.0,
        format!(
            "ratios {:.3}, {:.3} (>= 3.5), sup|grad|^2 {grad:.4} (< 1)",
            ratios[0], ratios[1]
        ),
    )
}

fn catalog() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for s in ImplicitSurface::ALL {
        for p in s.sample_points() {
            worst = worst.max(s.residual(&p).abs());
            count += 1;
        }
        for line in s.lightlike_lines() {
            for i in 0..100 {
                let u = line.range.0 + (line.range.1 - line.range.0) * i as f64 / 99.0;
                worst = worst.max(s.residual(&(line.point + line.direction * u)).abs());
                count += 1;
            }
        }
    }
    outcome(
        worst < 1e-12,
        format!("{count} points on 5 surfaces, max |F| {worst:.2e} (< 1e-12)"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("scherk oracle", scherk_oracle),
        ("conformality", conformality),
        ("reflection identity", reflection),
        ("degeneration exponent", degeneration),
        ("classifier agreement", classifier),
        ("periodicity", periodicity),
        ("maximal equation residual", maximal_residual),
        ("catalog", catalog),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        println!(
            "{} criterion {} ({name}): {}",
            if o.passed { "PASS" } else { "FAIL" },
            i + 1,
            o.summary
        );
        failed += !o.passed as usize;
    }
    println!(
        "acceptance: {} of {} criteria pass",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
