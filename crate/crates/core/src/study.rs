//! Convergence studies: one solve per mesh level, CSV and SVG reports.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::assembly::{assemble, NitscheParams};
use crate::config::StudyConfig;
use crate::cut::{linearize, CutInfo};
use crate::deformation::{interface_distance_probe, Deformation, DeformationStats};
use crate::error::Result;
use crate::fe::{FeSpace, ScalarFEFunction};
use crate::mesh::Mesh;
use crate::postprocess::{self, ErrorNorms};
use crate::problems::Problem;
use crate::solver::SolverMethod;

#[derive(Clone, Debug)]
pub struct LevelResult {
    pub level: usize,
    pub h_max: f64,
    pub elements: usize,
    pub active_elements: usize,
    pub cut_elements: usize,
    /// Active unknowns of the linear system.
    pub ndof: usize,
    pub errors: ErrorNorms,
    pub interface_distance: f64,
    pub max_displacement: f64,
    pub deformation: DeformationStats,
    pub solver: SolverMethod,
    pub iterations: usize,
    pub residual: f64,
    pub solve_time: Duration,
    pub total_time: Duration,
}

#[derive(Clone, Debug)]
pub struct StudyReport {
    pub config: StudyConfig,
    pub levels: Vec<LevelResult>,
    /// Diagnostic of the level that aborted the study, if any.
    pub failure: Option<String>,
}

impl StudyReport {
    fn series(&self, pick: impl Fn(&LevelResult) -> f64) -> Vec<f64> {
        self.levels.iter().map(pick).collect()
    }

    pub fn eoc_l2(&self) -> Vec<Option<f64>> {
        postprocess::eoc(&self.series(|l| l.errors.l2))
    }

    pub fn eoc_h1(&self) -> Vec<Option<f64>> {
        postprocess::eoc(&self.series(|l| l.errors.h1_semi))
    }

    pub fn eoc_l2_boundary(&self) -> Vec<Option<f64>> {
        postprocess::eoc(&self.series(|l| l.errors.l2_boundary))
    }

    pub fn eoc_interface_distance(&self) -> Vec<Option<f64>> {
        postprocess::eoc(&self.series(|l| l.interface_distance))
    }

    pub fn eoc_displacement(&self) -> Vec<Option<f64>> {
        postprocess::eoc(&self.series(|l| l.max_displacement))
    }

    pub fn csv(&self) -> String {
        let mut s = String::from("level,h_max,ndof,err_l2,err_h1,err_l2_bnd,iface_dist,eoc_l2,eoc_h1,eoc_l2_bnd\n");
        let rates = [self.eoc_l2(), self.eoc_h1(), self.eoc_l2_boundary()];
        for (i, l) in self.levels.iter().enumerate() {
            write!(
                s,
                "{},{:.16e},{},{:.16e},{:.16e},{:.16e},{:.16e}",
                l.level, l.h_max, l.ndof, l.errors.l2, l.errors.h1_semi, l.errors.l2_boundary, l.interface_distance
            )
            .unwrap();
            for r in &rates {
                s.push(',');
                if i > 0 {
                    match r[i - 1] {
                        Some(v) => write!(s, "{v:.16e}").unwrap(),
                        None => s.push_str("saturated"),
                    }
                }
            }
            s.push('\n');
        }
        s
    }

    /// Log-log plot of the three errors against `h_max` with reference
    /// slopes `k` and `k + 1`.
    pub fn svg(&self) -> String {
        plot_svg(self)
    }

    /// Human-readable table.
    pub fn summary(&self) -> String {
        let mut s = format!(
            "{} k={} deformation={} lambda={} gamma_scale={}\n",
            self.config.geometry,
            self.config.order,
            if self.config.deformation { "on" } else { "off" },
            self.config.lambda_scale * (self.config.order * self.config.order) as f64,
            self.config.gamma_scale
        );
        s.push_str("  L      h_max     ndof       err_l2   eoc      err_h1   eoc  err_l2_bnd   eoc  iters   residual\n");
        let rates = [self.eoc_l2(), self.eoc_h1(), self.eoc_l2_boundary()];
        let fmt_rate = |i: usize, r: &[Option<f64>]| match i.checked_sub(1).map(|j| r[j]) {
            None => "    -".to_string(),
            Some(None) => "  sat".to_string(),
            Some(Some(v)) => format!("{v:5.2}"),
        };
        for (i, l) in self.levels.iter().enumerate() {
            writeln!(
                s,
                "{:3} {:10.4e} {:8} {:12.4e} {} {:11.4e} {} {:11.4e} {} {:6} {:10.2e}",
                l.level,
                l.h_max,
                l.ndof,
                l.errors.l2,
                fmt_rate(i, &rates[0]),
                l.errors.h1_semi,
                fmt_rate(i, &rates[1]),
                l.errors.l2_boundary,
                fmt_rate(i, &rates[2]),
                l.iterations,
                l.residual
            )
            .unwrap();
        }
        if let Some(f) = &self.failure {
            writeln!(s, "aborted: {f}").unwrap();
        }
        s
    }

    /// Write `<tag>.csv` and `<tag>.svg` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        std::fs::create_dir_all(dir)?;
        let tag = self.config.tag();
        let csv = dir.join(format!("{tag}.csv"));
        let svg = dir.join(format!("{tag}.svg"));
        std::fs::write(&csv, self.csv())?;
        std::fs::write(&svg, self.svg())?;
        Ok((csv, svg))
    }
}

/// Solve one level on `mesh`.
pub fn solve_level(problem: &Problem, config: &StudyConfig, level: usize, mesh: Arc<Mesh>) -> Result<LevelResult> {
    let start = Instant::now();
    let k = config.order;
    let space = FeSpace::new(mesh.clone(), k)?;
    let phi_h = ScalarFEFunction::interpolate(space.clone(), |x| problem.phi(x))?;
    let lin = linearize(&phi_h)?;
    let cut = CutInfo::classify(&lin)?;
    let deformation = if config.deformation {
        Deformation::build(&phi_h, &cut).map_err(|e| e.context("deformation"))?
    } else {
        Deformation::identity(space.clone())
    };
    let mut params = NitscheParams::standard(k, config.lambda_scale, config.gamma_scale);
    if let Some(q) = config.quad_order {
        params.quad_order = q;
    }
    let f = |x| problem.f(x);
    let u_d = |x| problem.u_d(x);
    let system = assemble(&cut, &deformation, &params, &f, &u_d).map_err(|e| e.context("assembly"))?;
    let report = system.solve(config.tol, config.solver).map_err(|e| e.context("linear solve"))?;
    let u_h = ScalarFEFunction::from_coefficients(space.clone(), system.dofs.expand(&report.solution))?;
    let errors = postprocess::errors(&u_h, |x| problem.u(x), |x| problem.grad_u(x), &deformation, &cut, params.quad_order)
        .map_err(|e| e.context("error evaluation"))?;
    let interface_distance =
        interface_distance_probe(&deformation, &cut, |x| problem.phi(x), |x| problem.grad_phi(x), params.quad_order);
    Ok(LevelResult {
        level,
        h_max: mesh.max_diameter(),
        elements: mesh.num_elements(),
        active_elements: cut.active_elements().len(),
        cut_elements: cut.cut_elements().len(),
        ndof: system.dofs.len(),
        errors,
        interface_distance,
        max_displacement: deformation.max_displacement(),
        deformation: deformation.stats().clone(),
        solver: report.method,
        iterations: report.iterations,
        residual: report.residual,
        solve_time: report.wall_time,
        total_time: start.elapsed(),
    })
}

/// Run all levels. A failing level stops the study; completed levels are
/// kept and the failure is recorded in the report.
pub fn run_study(config: &StudyConfig) -> Result<StudyReport> {
    config.validate()?;
    let problem = Problem::shifted(config.geometry, config.shift);
    let mut report = StudyReport { config: config.clone(), levels: Vec::new(), failure: None };
    let mut mesh = Arc::new(problem.base_mesh()?);
    for level in 0..config.levels {
        if level > 0 {
            mesh = Arc::new(mesh.refine_uniform());
        }
        match solve_level(&problem, config, level, mesh.clone()) {
            Ok(r) => report.levels.push(r),
            Err(e) => {
                report.failure = Some(format!("level {level}: {e}"));
                break;
            }
        }
    }
    if let Some(dir) = &config.out_dir {
        report.write(dir)?;
    }
    Ok(report)
}

fn plot_svg(report: &StudyReport) -> String {
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const M: f64 = 60.0;
    let k = report.config.order as f64;
    type Series<'a> = (&'a str, &'a str, Vec<(f64, f64)>);
    let series: [Series; 3] = [
        ("L2(Omega_h)", "#1f77b4", report.levels.iter().map(|l| (l.h_max, l.errors.l2)).collect()),
        ("H1-semi(Omega_h)", "#d62728", report.levels.iter().map(|l| (l.h_max, l.errors.h1_semi)).collect()),
        ("L2(Gamma_h)", "#2ca02c", report.levels.iter().map(|l| (l.h_max, l.errors.l2_boundary)).collect()),
    ];
    let pts: Vec<(f64, f64)> =
        series.iter().flat_map(|s| s.2.iter().copied()).filter(|&(h, e)| h > 0.0 && e > 0.0).map(|(h, e)| (h.log10(), e.log10())).collect();
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    );
    if pts.is_empty() {
        out.push_str("<text x=\"20\" y=\"40\">no data</text>\n</svg>\n");
        return out;
    }
    let (mut x0, mut x1, mut y0, mut y1) = pts.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |(a, b, c, d), &(x, y)| (a.min(x), b.max(x), c.min(y), d.max(y)),
    );
    x0 = x0.floor().min(x0 - 0.1);
    x1 = x1.ceil().max(x1 + 0.1);
    y0 = y0.floor();
    y1 = y1.ceil();
    let sx = |x: f64| M + (x - x0) / (x1 - x0) * (W - 2.0 * M);
    let sy = |y: f64| H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M);
    writeln!(out, "<rect x=\"{M}\" y=\"{M}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>", W - 2.0 * M, H - 2.0 * M).unwrap();
    for d in (y0 as i32)..=(y1 as i32) {
        let y = sy(d as f64);
        writeln!(out, "<line x1=\"{M}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#ddd\"/>", W - M).unwrap();
        writeln!(out, "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"end\">1e{d}</text>", M - 4.0, y + 4.0).unwrap();
    }
    for d in (x0.floor() as i32)..=(x1.ceil() as i32) {
        let x = d as f64;
        if x < x0 || x > x1 {
            continue;
        }
        writeln!(out, "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\" text-anchor=\"middle\">1e{d}</text>", sx(x), H - M + 16.0).unwrap();
    }
    writeln!(out, "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"12\" text-anchor=\"middle\">h_max</text>", W / 2.0, H - 12.0).unwrap();
    writeln!(
        out,
        "<text x=\"{:.1}\" y=\"24\" font-size=\"13\" text-anchor=\"middle\">{} k={}{}</text>",
        W / 2.0,
        report.config.geometry,
        report.config.order,
        if report.config.deformation { "" } else { " (no deformation)" }
    )
    .unwrap();
    for (i, (name, color, data)) in series.iter().enumerate() {
        let path: Vec<String> = data
            .iter()
            .filter(|&&(h, e)| h > 0.0 && e > 0.0)
            .map(|&(h, e)| format!("{:.1},{:.1}", sx(h.log10()), sy(e.log10())))
            .collect();
        writeln!(out, "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>", path.join(" ")).unwrap();
        for p in &path {
            let (x, y) = p.split_once(',').unwrap();
            writeln!(out, "<circle cx=\"{x}\" cy=\"{y}\" r=\"3\" fill=\"{color}\"/>").unwrap();
        }
        let ly = M + 16.0 + 16.0 * i as f64;
        writeln!(out, "<line x1=\"{:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{color}\" stroke-width=\"2\"/>", W - M - 150.0, W - M - 130.0).unwrap();
        writeln!(out, "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\">{name}</text>", W - M - 125.0, ly + 4.0).unwrap();
    }
    // slope triangles anchored at the finest level
    for (slope, row) in [(k, 0.0), (k + 1.0, 1.0)] {
        let hx = x0 + 0.15 * (x1 - x0);
        let w = 0.25 * (x1 - x0).min(1.0);
        let yb = y0 + (0.12 + 0.25 * row) * (y1 - y0);
        let (ax, ay) = (sx(hx), sy(yb));
        let (bx, by) = (sx(hx + w), sy(yb));
        let (cx, cy) = (sx(hx + w), sy(yb + slope * w));
        writeln!(out, "<polygon points=\"{ax:.1},{ay:.1} {bx:.1},{by:.1} {cx:.1},{cy:.1}\" fill=\"none\" stroke=\"#555\"/>").unwrap();
        writeln!(out, "<text x=\"{:.1}\" y=\"{:.1}\" font-size=\"11\">{slope}</text>", cx + 4.0, (by + cy) / 2.0 + 4.0).unwrap();
    }
    out.push_str("</svg>\n");
    out
}

