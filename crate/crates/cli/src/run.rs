//! Commands and the artifact writer.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use perfband::bands::{bands_csv, compute_bands, convergence_sweep, rate_csv, EtaGrid};
use perfband::cell::CellSolution;
use perfband::dispersion::{dispersion_csv, sorted_spectrum, FloquetPoint, TOL_MULT};
use perfband::fem::io::{eig_csv, encode_vectors, vector_key};
use perfband::fem::{assemble, solve_lowest};
use perfband::geometry::io::{read_mesh, write_mesh};
use perfband::geometry::{build_perforated_mesh, Mesh};
use perfband::quasimode::{boundary_layer_for, residual_csv, residual_report};

use crate::config::{ConfigError, RunConfig};
use crate::svg::{Plot, Series};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    /// Limit dispersion curves.
    Dispersion,
    /// Perforated cell meshes, one per hole count.
    Mesh,
    /// Eigenpairs at one `(eps, eta)`.
    Solve,
    /// Boundary-layer problem and its constants.
    Cell,
    /// Quasimode residual report.
    Quasimode,
    /// Band extents and gaps, one file per hole count.
    Bands,
    /// Convergence rates against the limit curves.
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Dispersion => "dispersion",
            Command::Mesh => "mesh",
            Command::Solve => "solve",
            Command::Cell => "cell",
            Command::Quasimode => "quasimode",
            Command::Bands => "bands",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Compute(#[from] perfband::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

/// Writes every artifact to `cache/<hash>/<name>` and `<output>/<name>`.
/// All user-visible writes go through one value of this type.
pub struct Artifacts {
    hash: String,
    out_dir: PathBuf,
    cache_dir: PathBuf,
    pub written: Vec<PathBuf>,
    pub cache_hits: Vec<String>,
}

impl Artifacts {
    pub fn new(cfg: &RunConfig) -> Self {
        let hash = cfg.hash();
        Self {
            cache_dir: cfg.cache_dir().join(&hash),
            out_dir: cfg.output_dir(),
            hash,
            written: vec![],
            cache_hits: vec![],
        }
    }

    /// `<stem>-<hash>.<ext>`.
    pub fn name(&self, stem: &str, ext: &str) -> String {
        format!("{stem}-{}.{ext}", self.hash)
    }

    fn io<T>(path: &std::path::Path, r: std::io::Result<T>) -> Result<T, CliError> {
        r.map_err(|source| CliError::Io {
            path: path.into(),
            source,
        })
    }

    fn put(&mut self, dir: PathBuf, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        Self::io(&dir, fs::create_dir_all(&dir))?;
        let path = dir.join(name);
        Self::io(&path, fs::write(&path, bytes))?;
        Ok(path)
    }

    /// Cached bytes of `name` or the result of `compute`, stored in both places.
    pub fn cached(
        &mut self,
        name: &str,
        compute: impl FnOnce() -> Result<Vec<u8>, CliError>,
    ) -> Result<Vec<u8>, CliError> {
        let cache_path = self.cache_dir.join(name);
        let bytes = match fs::read(&cache_path) {
            Ok(b) => {
                self.cache_hits.push(name.into());
                b
            }
            Err(_) => {
                let b = compute()?;
                self.put(self.cache_dir.clone(), name, &b)?;
                b
            }
        };
        let path = self.put(self.out_dir.clone(), name, &bytes)?;
        self.written.push(path);
        Ok(bytes)
    }

    /// Output-only artifact derived from cached data.
    pub fn emit(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.put(self.out_dir.clone(), name, bytes)?;
        self.written.push(path);
        Ok(())
    }

    /// Cache-only artifact.
    pub fn stash(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        self.put(self.cache_dir.clone(), name, bytes)?;
        Ok(())
    }
}

pub fn run(cmd: Command, cfg: &RunConfig) -> Result<Artifacts, CliError> {
    cfg.validate()?;
    let mut art = Artifacts::new(cfg);
    match cmd {
        Command::Dispersion => dispersion(cfg, &mut art)?,
        Command::Mesh => mesh(cfg, &mut art)?,
        Command::Solve => solve(cfg, &mut art)?,
        Command::Cell => cell(cfg, &mut art)?,
        Command::Quasimode => quasimode(cfg, &mut art)?,
        Command::Bands => bands(cfg, &mut art)?,
        Command::Sweep => sweep(cfg, &mut art)?,
    }
    Ok(art)
}

fn text(b: Vec<u8>) -> String {
    String::from_utf8(b).expect("artifacts are UTF-8 text")
}

/// Rows of a CSV as string fields, header skipped.
fn rows(csv: &str) -> impl Iterator<Item = Vec<&str>> {
    csv.lines().skip(1).map(|l| l.split(',').collect())
}

fn num(s: &str) -> f64 {
    s.parse().unwrap_or(f64::NAN)
}

fn build_mesh(cfg: &RunConfig, n: usize) -> Result<Mesh, CliError> {
    Ok(build_perforated_mesh(&cfg.cell(n)?, cfg.mesh_options())?)
}

fn dispersion(cfg: &RunConfig, art: &mut Artifacts) -> Result<(), CliError> {
    let csv = text(art.cached(&art.name("dispersion", "csv"), || {
        Ok(dispersion_csv(cfg.height, &cfg.eta_values(), cfg.bands)?.into_bytes())
    })?);
    let mut curves: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows(&csv) {
        curves
            .entry(r[1].parse().unwrap_or(0))
            .or_default()
            .push((num(r[0]), num(r[2])));
    }
    let mut plot = Plot::new(
        &format!("limit dispersion curves, H = {}", cfg.height),
        "eta",
        "Lambda0",
    );
    plot.series = curves
        .into_iter()
        .map(|(p, points)| Series {
            name: format!("p = {p}"),
            points,
            scatter: false,
        })
        .collect();
    art.emit(&art.name("dispersion", "svg"), plot.render().as_bytes())
}

fn mesh(cfg: &RunConfig, art: &mut Artifacts) -> Result<(), CliError> {
    for &n in &cfg.ns {
        let stem = format!("mesh-N{n}");
        let body = text(art.cached(&art.name(&stem, "txt"), || {
            Ok(write_mesh(&build_mesh(cfg, n)?, None).into_bytes())
        })?);
        let (m, _) = read_mesh(&body)?;
        art.emit(&art.name(&stem, "svg"), mesh_svg(&m).as_bytes())?;
    }
    Ok(())
}

fn mesh_svg(m: &Mesh) -> String {
    let mut plot = Plot::new(
        &format!("{} vertices, {} triangles", m.n_vertices(), m.triangles.len()),
        "x1",
        "x2",
    );
    plot.series = vec![Series {
        name: String::new(),
        points: m
            .triangles
            .iter()
            .flat_map(|t| {
                let v = |i: usize| (m.vertices[t[i]][0], m.vertices[t[i]][1]);
                [v(0), v(1), v(2), v(0), (f64::NAN, f64::NAN)]
            })
            .collect(),
        scatter: false,
    }];
    plot.render()
}

fn solve(cfg: &RunConfig, art: &mut Artifacts) -> Result<(), CliError> {
    let (n, eta) = (cfg.solve.n, cfg.solve.eta);
    let mut vectors = None;
    let csv = text(art.cached(&art.name("solve", "csv"), || {
        let cell = cfg.cell(n)?;
        let mesh = build_perforated_mesh(&cell, cfg.mesh_options())?;
        let res = solve_lowest(&assemble(&mesh, eta)?, cfg.bands, cfg.eigen_options())?;
        vectors = Some((vector_key(&mesh, eta, cfg.bands), encode_vectors(eta, &res)));
        Ok(eig_csv(&[(eta, cell.epsilon(), &res)]).into_bytes())
    })?);
    if let Some((key, bytes)) = vectors {
        art.stash(&format!("vectors-{key}.bin"), &bytes)?;
    }
    let exact = sorted_spectrum(FloquetPoint::new(eta, cfg.height)?, cfg.bands, TOL_MULT).values();
    let mut plot = Plot::new(&format!("eigenvalues at eta = {eta}, N = {n}"), "p", "lambda");
    plot.series = vec![
        Series {
            name: "computed".into(),
            points: rows(&csv).map(|r| (num(r[2]), num(r[3]))).collect(),
            scatter: true,
        },
        Series {
            name: "limit".into(),
            points: exact.iter().enumerate().map(|(p, v)| ((p + 1) as f64, *v)).collect(),
            scatter: false,
        },
    ];
    art.emit(&art.name("solve", "svg"), plot.render().as_bytes())
}

fn boundary_layer(cfg: &RunConfig, n: usize) -> Result<CellSolution, CliError> {
    Ok(boundary_layer_for(
        &cfg.cell(n)?,
        cfg.mesh_options(),
        cfg.strip_h(),
        cfg.strip_length,
    )?)
}

fn cell(cfg: &RunConfig, art: &mut Artifacts) -> Result<(), CliError> {
    let n = cfg.ns[0];
    let mut field = None;
    let csv = text(art.cached(&art.name("cell", "csv"), || {
        let sol = boundary_layer(cfg, n)?;
        field = Some(write_mesh(&sol.mesh, Some(&sol.w)).into_bytes());
        Ok(sol.summary_csv().into_bytes())
    })?);
    let field = text(art.cached(&art.name("cell-field", "txt"), || match field {
        Some(f) => Ok(f),
        None => {
            let sol = boundary_layer(cfg, n)?;
            Ok(write_mesh(&sol.mesh, Some(&sol.w)).into_bytes())
        }
    })?);
    let (m, w) = read_mesh(&field)?;
    let w = w.unwrap_or_default();
    let mut points: Vec<(f64, f64)> = m
        .vertices
        .iter()
        .zip(&w)
        .filter(|(v, _)| v[1] == 0.0)
        .map(|(v, x)| (v[0], *x))
        .collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let c_plus = csv.lines().nth(1).and_then(|l| l.split(',').nth(4)).unwrap_or("?");
    let mut plot = Plot::new(&format!("boundary layer on xi2 = 0, C+ = {c_plus}"), "xi1", "W");
    plot.series = vec![Series {
        name: "W".into(),
        points,
        scatter: false,
    }];
    art.emit(&art.name("cell", "svg"), plot.render().as_bytes())
}

fn quasimode(cfg: &RunConfig, art: &mut Artifacts) -> Result<(), CliError> {
    let csv = text(art.cached(&art.name("quasimode", "csv"), || {
        let mut rows = Vec::new();
        for &n in &cfg.ns {
            let cell = cfg.cell(n)?;
            let mesh = build_perforated_mesh(&cell, cfg.mesh_options())?;
            let sol = boundary_layer(cfg, n)?;
            let report = residual_report(
                &cell,
                &sol,
                &mesh,
                &cfg.quasimode.etas,
                &cfg.labels(),
                cfg.eigen_options(),
            )?;
            rows.extend(report.into_iter().map(|c| c.row));
        }
        Ok(residual_csv(&rows).into_bytes())
    })?);
    let mut series: BTreeMap<(String, String), Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows(&csv) {
        series
            .entry((r[2].to_string(), r[3].to_string()))
            .or_default()
            .push((num(r[0]), num(r[4])));
    }
    let mut plot = Plot::new("quasimode residuals", "epsilon", "delta");
    plot.log_x = true;
    plot.log_y = true;
    plot.series = series
        .into_iter()
        .map(|((s, j), points)| Series {
            name: format!("({s},{j})"),
            points,
            scatter: true,
        })
        .collect();
    art.emit(&art.name("quasimode", "svg"), plot.render().as_bytes())
}

fn bands(cfg: &RunConfig, art: &mut Artifacts) -> Result<(), CliError> {
    let grid = EtaGrid::from_points(cfg.eta_values())?;
    for &n in &cfg.ns {
        let stem = format!("bands-N{n}");
        let csv = text(art.cached(&art.name(&stem, "csv"), || {
            let (bs, _) = compute_bands(&cfg.cell(n)?, &grid, cfg.bands, cfg.mesh_options(), cfg.eigen_options())?;
            Ok(bands_csv(&bs).into_bytes())
        })?);
        let mut plot = Plot::new(&format!("bands, H = {}, N = {n}", cfg.height), "", "lambda");
        for r in rows(&csv).filter(|r| !r[0].is_empty()) {
            plot.bands.push((num(r[1]), num(r[2])));
        }
        art.emit(&art.name(&stem, "svg"), plot.render().as_bytes())?;
    }
    Ok(())
}

fn sweep(cfg: &RunConfig, art: &mut Artifacts) -> Result<(), CliError> {
    let grid = EtaGrid::from_points(cfg.eta_values())?;
    let csv = text(art.cached(&art.name("sweep", "csv"), || {
        let report = convergence_sweep(
            cfg.height,
            &cfg.hole_shape()?,
            &cfg.ns,
            &cfg.ms,
            &grid,
            cfg.mesh_options(),
            cfg.eigen_options(),
        )?;
        Ok(rate_csv(&report).into_bytes())
    })?);
    let mut series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows(&csv) {
        series.entry(r[0].to_string()).or_default().push((num(r[1]), num(r[2])));
    }
    let mut plot = Plot::new("sup error against epsilon", "epsilon", "sup error");
    plot.log_x = true;
    plot.log_y = true;
    plot.series = series
        .into_iter()
        .map(|(m, points)| Series {
            name: format!("m = {m}"),
            points,
            scatter: false,
        })
        .collect();
    art.emit(&art.name("sweep", "svg"), plot.render().as_bytes())
}
