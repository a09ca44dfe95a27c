//! End-to-end experiment drivers behind the command-line tool.

use crate::analysis::{
    avg_pointwise_error, condition_number, eval_points_sphere, preconditioned_cond, write_sweep_csv, Geometry,
    PreconditionedFamily, SweepRecord,
};
use crate::cfie::{assemble_rhs, build_efie_reference, CfieSystem, DiscreteSpaces, PlaneWave};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::kernels::Wavenumber;
use crate::mesh::{make_cube_mesh, make_sphere_mesh, meshwidth, TriangleMesh};
use crate::mie::{build_mie, eval_mie};
use crate::operators::{to_complex, write_matrix, ComplexDenseMatrix};
use crate::potentials::{eval_incident, eval_scattered, write_field_csv};
use crate::spaces::SurfaceDensity;
use rayon::prelude::*;
use serde::Serialize;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    MeshInfo,
    Convergence,
    SweepH,
    SweepKappa,
    SweepEta,
    MieValidate,
    DumpMatrices,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::MeshInfo => "mesh-info",
            Command::Convergence => "convergence",
            Command::SweepH => "sweep-h",
            Command::SweepKappa => "sweep-kappa",
            Command::SweepEta => "sweep-eta",
            Command::MieValidate => "mie-validate",
            Command::DumpMatrices => "dump-matrices",
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub jobs: usize,
    pub mesh_out: Option<PathBuf>,
    pub dump_matrices: Option<PathBuf>,
}

/// Outcome of a run. Non-fatal problems (e.g. a solver that did not
/// converge at one sweep point) are listed in `warnings`; `failed` is set
/// when a mandatory stage failed.
#[derive(Clone, Debug, Default)]
pub struct RunReport {
    pub records: Vec<SweepRecord>,
    pub warnings: Vec<String>,
    pub outputs: Vec<PathBuf>,
    pub failed: bool,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    started_unix: f64,
    finished_unix: f64,
    jobs: usize,
    status: &'a str,
    warnings: &'a [String],
    outputs: Vec<String>,
    config: &'a RunConfig,
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Run a command and write its CSV output and manifest into `opts.out_dir`.
pub fn run(cmd: Command, cfg: &RunConfig, opts: &RunOptions) -> Result<RunReport> {
    cfg.validate()?;
    fs::create_dir_all(&opts.out_dir)?;
    let started = unix_now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    let result = pool.install(|| match cmd {
        Command::MeshInfo => mesh_info(cfg, opts),
        Command::Convergence => convergence(cfg, opts),
        Command::SweepH => sweep(cfg, opts, SweepAxis::H),
        Command::SweepKappa => sweep(cfg, opts, SweepAxis::Kappa),
        Command::SweepEta => sweep_eta(cfg, opts),
        Command::MieValidate => mie_validate(cfg, opts),
        Command::DumpMatrices => dump_matrices_cmd(cfg, opts),
    });
    let mut report = match result {
        Ok(r) => r,
        Err(e) => RunReport { warnings: vec![format!("fatal: {e}")], failed: true, ..Default::default() },
    };
    let manifest_path = opts.out_dir.join("manifest.toml");
    let manifest = Manifest {
        command: cmd.name(),
        version: env!("CARGO_PKG_VERSION"),
        started_unix: started,
        finished_unix: unix_now(),
        jobs: opts.jobs,
        status: if report.failed { "failed" } else { "ok" },
        warnings: &report.warnings,
        outputs: report.outputs.iter().map(|p| p.display().to_string()).collect(),
        config: cfg,
    };
    let text = toml::to_string(&manifest).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(&manifest_path, text)?;
    report.outputs.push(manifest_path);
    Ok(report)
}

pub fn build_mesh(geometry: Geometry, size: f64, h: f64) -> Result<TriangleMesh> {
    match geometry {
        Geometry::Sphere => make_sphere_mesh(size, h),
        Geometry::Cube => make_cube_mesh(size, h),
    }
}

fn indexed_path(base: &Path, idx: usize, count: usize) -> PathBuf {
    if count <= 1 {
        return base.to_path_buf();
    }
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("mesh");
    let ext = base.extension().and_then(|s| s.to_str()).unwrap_or("off");
    base.with_file_name(format!("{stem}_{idx}.{ext}"))
}

fn write_csv(path: PathBuf, records: &[SweepRecord], report: &mut RunReport) -> Result<()> {
    let mut w = BufWriter::new(File::create(&path)?);
    write_sweep_csv(records, &mut w)?;
    w.flush()?;
    report.outputs.push(path);
    Ok(())
}

fn meshes(cfg: &RunConfig, opts: &RunOptions, hs: &[f64], report: &mut RunReport) -> Result<Vec<Arc<TriangleMesh>>> {
    let geom = cfg.geometry()?;
    let mut out = Vec::new();
    for (i, &h) in hs.iter().enumerate() {
        let mesh = build_mesh(geom, cfg.geometry.size, h)?;
        if let Some(base) = &opts.mesh_out {
            let path = indexed_path(base, i, hs.len());
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    fs::create_dir_all(parent)?;
                }
            }
            mesh.write_off(BufWriter::new(File::create(&path)?))?;
            report.outputs.push(path);
        }
        out.push(Arc::new(mesh));
    }
    Ok(out)
}

fn mesh_info(cfg: &RunConfig, opts: &RunOptions) -> Result<RunReport> {
    let mut report = RunReport::default();
    let ms = meshes(cfg, opts, &cfg.mesh.h, &mut report)?;
    let path = opts.out_dir.join("mesh_info.csv");
    let mut w = BufWriter::new(File::create(&path)?);
    writeln!(w, "geom,h_target,meshwidth,vertices,edges,triangles,euler,area")?;
    for (m, h) in ms.iter().zip(&cfg.mesh.h) {
        let line = format!(
            "{},{:.12e},{:.12e},{},{},{},{},{:.12e}",
            cfg.geometry.kind,
            h,
            meshwidth(m),
            m.num_vertices(),
            m.num_edges(),
            m.num_triangles(),
            m.euler_characteristic(),
            m.total_area()
        );
        println!("{line}");
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    report.outputs.push(path);
    Ok(report)
}

fn dump_system(dir: &Path, sys: &CfieSystem) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let gt = crate::operators::assemble_pairing(&sys.spaces.bc, &sys.spaces.bc)?;
    let mats: Vec<(&str, ComplexDenseMatrix)> = vec![
        ("G", to_complex(&sys.gram)),
        ("G_tilde", to_complex(&gt)),
        ("M", sys.m()),
        ("Z", sys.z()),
        ("S", to_complex(&sys.s)),
        ("C", sys.c_delta().clone()),
        ("K", to_complex(&sys.k)),
        ("EFIE", sys.primal.efie.clone()),
    ];
    let mut out = Vec::new();
    for (name, m) in mats {
        let p = dir.join(format!("{name}.bin"));
        let mut w = BufWriter::new(File::create(&p)?);
        write_matrix(&m, &mut w)?;
        w.flush()?;
        out.push(p);
    }
    Ok(out)
}

fn dump_matrices_cmd(cfg: &RunConfig, opts: &RunOptions) -> Result<RunReport> {
    let mut report = RunReport::default();
    let ms = meshes(cfg, opts, &cfg.mesh.h[..1], &mut report)?;
    let kappa = cfg.wave.kappa[0];
    let wn = Wavenumber::new(kappa, kappa * cfg.wave.kappa_prime_ratio[0])?;
    let eta = cfg.eta_values(kappa)[0];
    let sys = CfieSystem::assemble(ms[0].clone(), wn, eta, &cfg.quadrature())?;
    let dir = opts.dump_matrices.clone().unwrap_or_else(|| opts.out_dir.join("matrices"));
    report.outputs.extend(dump_system(&dir, &sys)?);
    Ok(report)
}

fn convergence(cfg: &RunConfig, opts: &RunOptions) -> Result<RunReport> {
    if cfg.geometry()? != Geometry::Sphere {
        return Err(Error::Config("convergence study needs the sphere geometry (Mie reference)".into()));
    }
    let mut report = RunReport::default();
    let ms = meshes(cfg, opts, &cfg.mesh.h, &mut report)?;
    let kappa = cfg.wave.kappa[0];
    let eta = cfg.eta_values(kappa)[0];
    let radius = cfg.geometry.size;
    let pts = eval_points_sphere(cfg.eval.points, cfg.eval.radius * radius);
    let exact = eval_mie(&build_mie(kappa, radius)?, &pts)?;
    let wave = PlaneWave::standard(kappa)?;
    let jobs: Vec<(usize, usize)> =
        (0..ms.len()).flat_map(|i| (0..cfg.wave.kappa_prime_ratio.len()).map(move |j| (i, j))).collect();
    let results: Vec<(SweepRecord, Vec<String>)> = jobs
        .par_iter()
        .map(|&(i, j)| {
            let ratio = cfg.wave.kappa_prime_ratio[j];
            let mut rec = SweepRecord {
                geom: "sphere".into(),
                h: meshwidth(&ms[i]),
                kappa,
                kappa_prime: kappa * ratio,
                eta,
                ..Default::default()
            };
            let mut notes = Vec::new();
            let run = || -> Result<(f64, usize)> {
                let wn = Wavenumber::new(kappa, kappa * ratio)?;
                let sys = CfieSystem::assemble(ms[i].clone(), wn, eta, &cfg.quadrature())?;
                if let Some(dir) = &opts.dump_matrices {
                    dump_system(&dir.join(format!("h{i}_r{j}")), &sys)?;
                }
                let b = assemble_rhs(&wave, &sys.spaces.rt0, cfg.quad.rhs_order)?;
                let sol = sys.solve(&b, cfg.solver.tol, cfg.solver.max_iter, None)?;
                let phi = SurfaceDensity::new(sys.spaces.rt0.clone(), sol.phi)?;
                let psi = SurfaceDensity::new(sys.spaces.rt0.clone(), sol.psi)?;
                let num = eval_scattered(&phi, &psi, kappa, eta, &pts)?;
                if cfg.eval.write_fields {
                    let p = opts.out_dir.join(format!("fields_h{i}_r{j}.csv"));
                    write_field_csv(&num, BufWriter::new(File::create(&p)?))?;
                }
                Ok((avg_pointwise_error(&num, &exact)?, sol.iterations))
            };
            match run() {
                Ok((err, it)) => {
                    rec.err_h = Some(err);
                    rec.iters_cfie = Some(it);
                }
                Err(e) => notes.push(format!("h={:.4} ratio={ratio}: {e}", rec.h)),
            }
            (rec, notes)
        })
        .collect();
    for (r, n) in results {
        report.records.push(r);
        report.warnings.extend(n);
    }
    write_csv(opts.out_dir.join("convergence.csv"), &report.records.clone(), &mut report)?;
    Ok(report)
}

#[derive(Clone, Copy, PartialEq)]
enum SweepAxis {
    H,
    Kappa,
}

/// Conditioning and iteration counts of CFIE (and optionally EFIE) at one point.
pub fn conditioning_point(
    mesh: Arc<TriangleMesh>,
    geometry: Geometry,
    kappa: f64,
    ratio: f64,
    eta: f64,
    cfg: &RunConfig,
    dump: Option<&Path>,
) -> Result<(SweepRecord, Vec<String>)> {
    let h = meshwidth(&mesh);
    let mut rec = SweepRecord { geom: geometry.tag().into(), h, kappa, kappa_prime: kappa * ratio, eta, ..Default::default() };
    let mut notes = Vec::new();
    let wn = Wavenumber::new(kappa, kappa * ratio)?;
    let spaces = DiscreteSpaces::new(mesh)?;
    let sys = CfieSystem::from_spaces(spaces, wn, eta, &cfg.quadrature())?;
    if let Some(d) = dump {
        dump_system(d, &sys)?;
    }
    rec.cond_cfie = Some(preconditioned_cond(&sys)?);
    let b = assemble_rhs(&PlaneWave::standard(kappa)?, &sys.spaces.rt0, cfg.quad.rhs_order)?;
    match sys.solve(&b, cfg.solver.tol, cfg.solver.max_iter, None) {
        Ok(s) => rec.iters_cfie = Some(s.iterations),
        Err(e) => notes.push(format!("CFIE at h={h:.4} kappa={kappa}: {e}")),
    }
    if cfg.solver.efie {
        let efie = build_efie_reference(kappa, &sys.spaces.rt0, &cfg.quadrature())?;
        rec.cond_efie = Some(condition_number(&efie.matrix)?);
        match efie.solve(&b, cfg.solver.tol, cfg.solver.max_iter) {
            Ok(o) => rec.iters_efie = Some(o.iterations),
            Err(e) => notes.push(format!("EFIE at h={h:.4} kappa={kappa}: {e}")),
        }
    }
    Ok((rec, notes))
}

fn sweep(cfg: &RunConfig, opts: &RunOptions, axis: SweepAxis) -> Result<RunReport> {
    let mut report = RunReport::default();
    let geom = cfg.geometry()?;
    let hs: Vec<f64> = if axis == SweepAxis::H { cfg.mesh.h.clone() } else { vec![cfg.mesh.h[0]] };
    let ks: Vec<f64> = if axis == SweepAxis::Kappa { cfg.wave.kappa.clone() } else { vec![cfg.wave.kappa[0]] };
    let ms = meshes(cfg, opts, &hs, &mut report)?;
    let ratio = cfg.wave.kappa_prime_ratio[0];
    let points: Vec<(usize, f64)> = (0..ms.len()).flat_map(|i| ks.iter().map(move |&k| (i, k))).collect();
    let results: Vec<Result<(SweepRecord, Vec<String>)>> = points
        .par_iter()
        .enumerate()
        .map(|(idx, &(i, k))| {
            let dump = opts.dump_matrices.as_ref().map(|d| d.join(format!("point{idx}")));
            conditioning_point(ms[i].clone(), geom, k, ratio, cfg.eta_values(k)[0], cfg, dump.as_deref())
        })
        .collect();
    for (r, &(i, k)) in results.into_iter().zip(&points) {
        match r {
            Ok((rec, notes)) => {
                report.records.push(rec);
                report.warnings.extend(notes);
            }
            Err(e) => {
                report.failed = true;
                report.warnings.push(format!("h={:.4} kappa={k}: {e}", meshwidth(&ms[i])));
            }
        }
    }
    let name = if axis == SweepAxis::H { "sweep_h.csv" } else { "sweep_kappa.csv" };
    write_csv(opts.out_dir.join(name), &report.records.clone(), &mut report)?;
    Ok(report)
}

fn sweep_eta(cfg: &RunConfig, opts: &RunOptions) -> Result<RunReport> {
    let mut report = RunReport::default();
    let geom = cfg.geometry()?;
    let ms = meshes(cfg, opts, &cfg.mesh.h[..1], &mut report)?;
    let kappa = cfg.wave.kappa[0];
    let ratio = cfg.wave.kappa_prime_ratio[0];
    let etas = cfg.eta_values(kappa);
    let wn = Wavenumber::new(kappa, kappa * ratio)?;
    let mut sys = CfieSystem::assemble(ms[0].clone(), wn, etas[0], &cfg.quadrature())?;
    if let Some(d) = &opts.dump_matrices {
        dump_system(d, &sys)?;
    }
    let family = PreconditionedFamily::new(&sys);
    let b = assemble_rhs(&PlaneWave::standard(kappa)?, &sys.spaces.rt0, cfg.quad.rhs_order)?;
    let h = meshwidth(&ms[0]);
    let (cond_efie, iters_efie) = if cfg.solver.efie {
        let efie = build_efie_reference(kappa, &sys.spaces.rt0, &cfg.quadrature())?;
        let it = match efie.solve(&b, cfg.solver.tol, cfg.solver.max_iter) {
            Ok(o) => Some(o.iterations),
            Err(e) => {
                report.warnings.push(format!("EFIE: {e}"));
                None
            }
        };
        (Some(condition_number(&efie.matrix)?), it)
    } else {
        (None, None)
    };
    let conds: Vec<Result<f64>> = etas.par_iter().map(|&eta| family.cond(eta)).collect();
    for (&eta, cond) in etas.iter().zip(conds) {
        let mut rec = SweepRecord {
            geom: geom.tag().into(),
            h,
            kappa,
            kappa_prime: kappa * ratio,
            eta,
            cond_efie,
            iters_efie,
            ..Default::default()
        };
        match cond {
            Ok(c) => rec.cond_cfie = Some(c),
            Err(e) => {
                report.failed = true;
                report.warnings.push(format!("eta={eta}: {e}"));
            }
        }
        sys.set_eta(eta)?;
        match sys.solve(&b, cfg.solver.tol, cfg.solver.max_iter, None) {
            Ok(s) => rec.iters_cfie = Some(s.iterations),
            Err(e) => report.warnings.push(format!("CFIE at eta={eta}: {e}")),
        }
        report.records.push(rec);
    }
    write_csv(opts.out_dir.join("sweep_eta.csv"), &report.records.clone(), &mut report)?;
    Ok(report)
}

fn mie_validate(cfg: &RunConfig, opts: &RunOptions) -> Result<RunReport> {
    let mut report = RunReport::default();
    let radius = cfg.geometry.size;
    let path = opts.out_dir.join("mie_validate.csv");
    let mut w = BufWriter::new(File::create(&path)?);
    writeln!(w, "kappa,n_terms,max_tangential_residual")?;
    for &kappa in &cfg.wave.kappa {
        let sol = build_mie(kappa, radius)?;
        let pts = eval_points_sphere(200, radius);
        let scat = eval_mie(&sol, &pts)?;
        let inc = eval_incident(&PlaneWave::standard(kappa)?, &pts);
        let worst = scat
            .iter()
            .zip(&inc)
            .map(|(s, i)| (s.e + i.e).cross_real(s.point * (1.0 / radius)).norm())
            .fold(0.0, f64::max);
        writeln!(w, "{kappa:.12e},{},{worst:.6e}", sol.n_terms)?;
        println!("kappa={kappa}: {} terms, max |(e_s + e_in) × n| = {worst:.3e}", sol.n_terms);
        if worst > 1e-8 {
            report.failed = true;
            report.warnings.push(format!("kappa={kappa}: boundary residual {worst:.3e} exceeds 1e-8"));
        }
        if cfg.eval.write_fields {
            let ep = eval_points_sphere(cfg.eval.points, cfg.eval.radius * radius);
            let p = opts.out_dir.join(format!("mie_fields_k{kappa}.csv"));
            write_field_csv(&eval_mie(&sol, &ep)?, BufWriter::new(File::create(&p)?))?;
            report.outputs.push(p);
        }
    }
    w.flush()?;
    report.outputs.push(path);
    Ok(report)
}
