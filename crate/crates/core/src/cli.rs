//! Command-line front end: `learn`, `infer`, `eval-density`, `version`.
//!
//! Settings come from an optional `key = value` file; a flag with the same name
//! (dashes for underscores) overrides the file.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::cloud::{load_cloud, CloudFormat};
use crate::error::{Error, Result};
use crate::geom::{Pose, UnitQuaternion, Vec3};
use crate::models::{learn_bundle, load_model, save_model, DemonstrationRecord, FormationAnchor, LearnParams, LinkDemo};
use crate::transfer::{infer, snap_to_surface, write_candidates, write_density_samples, QueryScene, TransferParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_MISMATCH: i32 = 4;
pub const EXIT_NO_FEASIBLE: i32 = 5;

/// Exit status for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. }
        | Error::Parse { .. }
        | Error::EmptyCloud
        | Error::SchemaVersion { .. }
        | Error::MissingSection(_)
        | Error::Corrupt(_) => EXIT_PARSE,
        Error::NoFeatures | Error::AllZeroWeights { .. } | Error::DimensionMismatch { .. } => EXIT_MISMATCH,
        _ => EXIT_USAGE,
    }
}

/// Every tunable setting. Defaults give the standard counts
/// (N_O = 500, N_T = 50, N_C = 500, N_i = 500, N_j = 5, N_Q = 1000).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunConfig {
    pub learn: LearnParams<f64>,
    pub transfer: TransferParams<f64>,
    pub viewpoint: Option<Vec3<f64>>,
}

/// Recognized keys, in the order `version` lists them.
pub const CONFIG_KEYS: &[&str] = &[
    "seed",
    "k_neighbors",
    "contact_radius",
    "n_o",
    "n_t",
    "n_c",
    "n_i",
    "n_j",
    "n_q",
    "sigma_s_p",
    "sigma_s_q",
    "sigma_s_r",
    "sigma_t_p",
    "sigma_t_q",
    "sigma_t_r",
    "sigma_c_p",
    "sigma_c_q",
    "sigma_c_r",
    "alpha",
    "rot_weight",
    "anchor",
    "query_sigma_p",
    "query_kappa",
    "region_radius",
    "match_floor",
    "flat_curvature",
    "t0",
    "cooling",
    "steps",
    "reanchor_prob",
    "formation_prob",
    "position_scale",
    "rotation_scale",
    "min_scale",
    "chains",
    "max_tilt",
    "min_separation",
    "ablate_task",
    "viewpoint",
];

fn bad(key: &str, value: &str) -> Error {
    Error::InvalidParameter(format!("bad value `{value}` for `{key}`"))
}

fn num<V: std::str::FromStr>(key: &str, value: &str) -> Result<V> {
    value.trim().parse().map_err(|_| bad(key, value))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let (l, t) = (&mut self.learn, &mut self.transfer);
        let f = |v: &str| num::<f64>(key, v);
        match key {
            "seed" => {
                l.seed = num(key, value)?;
                t.seed = l.seed;
            }
            "k_neighbors" => l.k_neighbors = num(key, value)?,
            "contact_radius" => {
                l.contact_radius = f(value)?;
                t.contact_radius = l.contact_radius;
            }
            "n_o" => l.n_o = num(key, value)?,
            "n_t" => l.n_t = num(key, value)?,
            "n_c" => l.n_c = num(key, value)?,
            "n_i" => t.n_i = num(key, value)?,
            "n_j" => t.n_j = num(key, value)?,
            "n_q" => t.n_q = num(key, value)?,
            "sigma_s_p" => l.surface_bw.sigma_p = f(value)?,
            "sigma_s_q" => l.surface_bw.sigma_q = f(value)?,
            "sigma_s_r" => l.surface_bw.sigma_r = f(value)?,
            "sigma_t_p" => l.task_bw.sigma_p = f(value)?,
            "sigma_t_q" => l.task_bw.sigma_q = f(value)?,
            "sigma_t_r" => l.task_bw.sigma_r = f(value)?,
            "sigma_c_p" => l.contact_bw.sigma_p = f(value)?,
            "sigma_c_q" => l.contact_bw.sigma_q = f(value)?,
            "sigma_c_r" => l.contact_bw.sigma_r = f(value)?,
            "alpha" => l.alpha = f(value)?,
            "rot_weight" => {
                l.rot_weight = f(value)?;
                t.rot_weight = l.rot_weight;
            }
            "anchor" => l.anchor = FormationAnchor::parse(value.trim()).ok_or_else(|| bad(key, value))?,
            "query_sigma_p" => t.query_sigma_p = f(value)?,
            "query_kappa" => t.query_kappa = f(value)?,
            "region_radius" => t.region_radius = f(value)?,
            "match_floor" => t.match_floor = f(value)?,
            "flat_curvature" => t.flat_curvature = f(value)?,
            "t0" => t.schedule.t0 = f(value)?,
            "cooling" => t.schedule.cooling = f(value)?,
            "steps" => t.schedule.steps = num(key, value)?,
            "reanchor_prob" => t.schedule.reanchor_prob = f(value)?,
            "formation_prob" => t.schedule.formation_prob = f(value)?,
            "position_scale" => t.schedule.position_scale = f(value)?,
            "rotation_scale" => t.schedule.rotation_scale = f(value)?,
            "min_scale" => t.schedule.min_scale = f(value)?,
            "chains" => t.min_chains = num(key, value)?,
            "max_tilt" => t.max_tilt = f(value)?.to_radians(),
            "min_separation" => t.min_separation = f(value)?,
            "ablate_task" => t.ablate_task = num(key, value)?,
            "viewpoint" => {
                let v: Vec<f64> = value.split(',').map(|c| num(key, c)).collect::<Result<_>>()?;
                if v.len() != 3 {
                    return Err(bad(key, value));
                }
                self.viewpoint = Some(Vec3::new(v[0], v[1], v[2]));
            }
            _ => return Err(Error::InvalidParameter(format!("unknown setting `{key}`"))),
        }
        Ok(())
    }

    /// Applies a `key = value` file. `#` starts a comment.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })?;
        for (no, line) in text.lines().enumerate() {
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let parse = |msg: String| Error::Parse { path: path.into(), line: no + 1, msg };
            let (k, v) = body.split_once('=').ok_or_else(|| parse("expected `key = value`".into()))?;
            self.set(k.trim(), v.trim()).map_err(|e| parse(e.to_string()))?;
        }
        Ok(())
    }
}

/// Reads a links file: one drone per line, 14 reals (drone pose then link pose,
/// each `px py pz qw qx qy qz`).
pub fn load_links(path: &Path) -> Result<Vec<LinkDemo<f64>>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })?;
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse { path: path.into(), line: no + 1, msg };
        let v: Vec<f64> = body
            .split_whitespace()
            .map(|t| t.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| err(format!("invalid number `{t}`"))))
            .collect::<Result<_>>()?;
        if v.len() != 14 {
            return Err(err(format!("expected 14 values, found {}", v.len())));
        }
        let pose = |a: &[f64]| {
            UnitQuaternion::new(a[3], a[4], a[5], a[6])
                .map(|q| Pose::new(Vec3::new(a[0], a[1], a[2]), q))
                .ok_or_else(|| err("zero quaternion".into()))
        };
        out.push(LinkDemo { drone: pose(&v[..7])?, link: pose(&v[7..])? });
    }
    Ok(out)
}

/// `x=a:b:n,y=a:b:n,z=c`: each axis is a value or an inclusive range with `n` samples.
pub fn parse_grid(spec: &str) -> Result<Vec<Vec3<f64>>> {
    let bad = || Error::InvalidParameter(format!("bad grid `{spec}`"));
    let mut axes: [Option<Vec<f64>>; 3] = [None, None, None];
    for part in spec.split(',') {
        let (name, range) = part.split_once('=').ok_or_else(bad)?;
        let slot = match name.trim() {
            "x" => 0,
            "y" => 1,
            "z" => 2,
            _ => return Err(bad()),
        };
        let f: Vec<&str> = range.split(':').collect();
        let vals = match f.as_slice() {
            [c] => vec![c.trim().parse::<f64>().map_err(|_| bad())?],
            [a, b, n] => {
                let (a, b): (f64, f64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
                let n: usize = n.trim().parse().map_err(|_| bad())?;
                match n {
                    0 => return Err(bad()),
                    1 => vec![a],
                    _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
                }
            }
            _ => return Err(bad()),
        };
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(bad());
        }
        axes[slot] = Some(vals);
    }
    let [xs, ys, zs] = axes.map(|a| a.unwrap_or_else(|| vec![0.0]));
    let mut out = Vec::with_capacity(xs.len() * ys.len() * zs.len());
    for &x in &xs {
        for &y in &ys {
            for &z in &zs {
                out.push(Vec3::new(x, y, z));
            }
        }
    }
    Ok(out)
}

#[derive(Parser, Debug)]
#[command(name = "aerocontact", about = "Learn and transfer aerial-gripper contacts from one demonstration")]
struct Cli {
    /// Worker threads (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Log progress to standard error.
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Learn a model bundle from a demonstration.
    Learn {
        #[arg(long)]
        cloud: PathBuf,
        #[arg(long)]
        links: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "demo")]
        label: String,
        #[command(flatten)]
        flags: Flags,
    },
    /// Place links on a new cloud.
    Infer {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        cloud: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(short, long, default_value_t = 5)]
        k: usize,
        #[command(flatten)]
        flags: Flags,
    },
    /// Sample log Q on a position grid for plotting.
    EvalDensity {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        cloud: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        grid: String,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Print the version and the recognized settings.
    Version,
}

/// One flag per config key; all optional.
#[derive(Args, Debug, Default)]
struct Flags {
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    k_neighbors: Option<String>,
    #[arg(long)]
    contact_radius: Option<String>,
    #[arg(long)]
    n_o: Option<String>,
    #[arg(long)]
    n_t: Option<String>,
    #[arg(long)]
    n_c: Option<String>,
    #[arg(long)]
    n_i: Option<String>,
    #[arg(long)]
    n_j: Option<String>,
    #[arg(long)]
    n_q: Option<String>,
    #[arg(long)]
    sigma_s_p: Option<String>,
    #[arg(long)]
    sigma_s_q: Option<String>,
    #[arg(long)]
    sigma_s_r: Option<String>,
    #[arg(long)]
    sigma_t_p: Option<String>,
    #[arg(long)]
    sigma_t_q: Option<String>,
    #[arg(long)]
    sigma_t_r: Option<String>,
    #[arg(long)]
    sigma_c_p: Option<String>,
    #[arg(long)]
    sigma_c_q: Option<String>,
    #[arg(long)]
    sigma_c_r: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    rot_weight: Option<String>,
    #[arg(long)]
    anchor: Option<String>,
    #[arg(long)]
    query_sigma_p: Option<String>,
    #[arg(long)]
    query_kappa: Option<String>,
    #[arg(long)]
    region_radius: Option<String>,
    #[arg(long)]
    match_floor: Option<String>,
    #[arg(long)]
    flat_curvature: Option<String>,
    #[arg(long)]
    t0: Option<String>,
    #[arg(long)]
    cooling: Option<String>,
    #[arg(long)]
    steps: Option<String>,
    #[arg(long)]
    reanchor_prob: Option<String>,
    #[arg(long)]
    formation_prob: Option<String>,
    #[arg(long)]
    position_scale: Option<String>,
    #[arg(long)]
    rotation_scale: Option<String>,
    #[arg(long)]
    min_scale: Option<String>,
    #[arg(long)]
    chains: Option<String>,
    /// Degrees.
    #[arg(long)]
    max_tilt: Option<String>,
    #[arg(long)]
    min_separation: Option<String>,
    #[arg(long)]
    ablate_task: bool,
    /// `x,y,z` of the sensor.
    #[arg(long, allow_hyphen_values = true)]
    viewpoint: Option<String>,
}

impl Flags {
    fn pairs(&self) -> Vec<(&'static str, Option<&str>)> {
        fn s(o: &Option<String>) -> Option<&str> {
            o.as_deref()
        }
        vec![
            ("seed", s(&self.seed)),
            ("k_neighbors", s(&self.k_neighbors)),
            ("contact_radius", s(&self.contact_radius)),
            ("n_o", s(&self.n_o)),
            ("n_t", s(&self.n_t)),
            ("n_c", s(&self.n_c)),
            ("n_i", s(&self.n_i)),
            ("n_j", s(&self.n_j)),
            ("n_q", s(&self.n_q)),
            ("sigma_s_p", s(&self.sigma_s_p)),
            ("sigma_s_q", s(&self.sigma_s_q)),
            ("sigma_s_r", s(&self.sigma_s_r)),
            ("sigma_t_p", s(&self.sigma_t_p)),
            ("sigma_t_q", s(&self.sigma_t_q)),
            ("sigma_t_r", s(&self.sigma_t_r)),
            ("sigma_c_p", s(&self.sigma_c_p)),
            ("sigma_c_q", s(&self.sigma_c_q)),
            ("sigma_c_r", s(&self.sigma_c_r)),
            ("alpha", s(&self.alpha)),
            ("rot_weight", s(&self.rot_weight)),
            ("anchor", s(&self.anchor)),
            ("query_sigma_p", s(&self.query_sigma_p)),
            ("query_kappa", s(&self.query_kappa)),
            ("region_radius", s(&self.region_radius)),
            ("match_floor", s(&self.match_floor)),
            ("flat_curvature", s(&self.flat_curvature)),
            ("t0", s(&self.t0)),
            ("cooling", s(&self.cooling)),
            ("steps", s(&self.steps)),
            ("reanchor_prob", s(&self.reanchor_prob)),
            ("formation_prob", s(&self.formation_prob)),
            ("position_scale", s(&self.position_scale)),
            ("rotation_scale", s(&self.rotation_scale)),
            ("min_scale", s(&self.min_scale)),
            ("chains", s(&self.chains)),
            ("max_tilt", s(&self.max_tilt)),
            ("min_separation", s(&self.min_separation)),
            ("ablate_task", self.ablate_task.then_some("true")),
            ("viewpoint", s(&self.viewpoint)),
        ]
    }
}

fn resolve(file: &Option<PathBuf>, flags: &Flags) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(p) = file {
        cfg.apply_file(p)?;
    }
    for (k, v) in flags.pairs() {
        if let Some(v) = v {
            cfg.set(k, v)?;
        }
    }
    Ok(cfg)
}

fn read_cloud(path: &Path, cfg: &RunConfig) -> Result<crate::PointCloud> {
    let mut c = load_cloud(path, CloudFormat::from_path(path))?;
    c.set_viewpoint(cfg.viewpoint);
    Ok(c)
}

fn cmd_learn(cloud: &Path, links: &Path, cfg: &RunConfig, out: &Path, label: &str) -> Result<i32> {
    let cloud = read_cloud(cloud, cfg)?;
    let links = load_links(links)?;
    let record = DemonstrationRecord::new(cloud, links, label, cfg.learn.contact_radius)?;
    let bundle = learn_bundle(&record, &cfg.learn)?;
    save_model(out, &bundle)?;
    let w: Vec<f64> = bundle.task.density.kernels().iter().map(|k| k.weight).collect();
    let (lo, hi) = w.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    println!("links          {}", bundle.contact.links.len());
    println!("object kernels {}", bundle.object.density.len());
    println!("task kernels   {} (weight min {lo:.3e} max {hi:.3e})", w.len());
    let per: Vec<String> = bundle.contact.links.iter().map(|l| l.kernels.len().to_string()).collect();
    println!("contact kernels {} per link, {} task offsets", per.join("/"), bundle.contact.task_offsets.len());
    Ok(EXIT_OK)
}

fn cmd_infer(model: &Path, cloud: &Path, cfg: &RunConfig, out: &Path, k: usize) -> Result<i32> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let bundle = load_model::<f64>(model)?;
    let cloud = read_cloud(cloud, cfg)?;
    let scene = QueryScene::new(cloud, bundle.meta.k_neighbors)?;
    let outcome = infer(&bundle, &scene, &cfg.transfer, k)?;
    let mut rows: Vec<_> =
        outcome.top_feasible(k).into_iter().map(|c| snap_to_surface(c.clone(), &scene.cloud)).collect();
    let n_feasible = rows.len();
    rows.extend(outcome.candidates.iter().filter(|c| !c.feasible).take(k).cloned());
    write_candidates(out, &rows)?;
    let mut table = String::from("rank  log_J        feasible\n");
    for (i, c) in rows.iter().enumerate() {
        let _ = writeln!(table, "{:<5} {:<12.4} {}", i + 1, c.log_j, c.feasible);
    }
    print!("{table}");
    Ok(if n_feasible == 0 { EXIT_NO_FEASIBLE } else { EXIT_OK })
}

fn cmd_eval_density(model: &Path, cloud: &Path, cfg: &RunConfig, grid: &str, out: &Path) -> Result<i32> {
    let points = parse_grid(grid)?;
    let bundle = load_model::<f64>(model)?;
    let cloud = read_cloud(cloud, cfg)?;
    let scene = QueryScene::new(cloud, bundle.meta.k_neighbors)?;
    let q = crate::transfer::build_query_density(&bundle.contact, &bundle.task, &bundle.object, &scene, &cfg.transfer)?;
    let mut rows = Vec::with_capacity(points.len() * q.links.len());
    for (n, link) in q.links.iter().enumerate() {
        // heat maps are over position; orientation is held at the heaviest kernel's
        let rot = link.best().pose.q;
        for p in &points {
            rows.push((n, *p, q.log_eval(n, &Pose::new(*p, rot))));
        }
    }
    write_density_samples(out, &rows)?;
    println!("{} samples written", rows.len());
    Ok(EXIT_OK)
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.cmd {
        Cmd::Learn { cloud, links, config, out, label, flags } => {
            let cfg = resolve(&config, &flags)?;
            cmd_learn(&cloud, &links, &cfg, &out, &label)
        }
        Cmd::Infer { model, cloud, config, out, k, flags } => {
            let cfg = resolve(&config, &flags)?;
            cmd_infer(&model, &cloud, &cfg, &out, k)
        }
        Cmd::EvalDensity { model, cloud, config, grid, out, flags } => {
            let cfg = resolve(&config, &flags)?;
            cmd_eval_density(&model, &cloud, &cfg, &grid, &out)
        }
        Cmd::Version => {
            println!("aerocontact {}", env!("CARGO_PKG_VERSION"));
            println!("model schema {}", crate::models::SCHEMA_VERSION);
            println!("settings: {}", CONFIG_KEYS.join(" "));
            Ok(EXIT_OK)
        }
    }
}

/// Runs the CLI on `args` (program name first) and returns the exit status.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let _ = env_logger::Builder::new()
        .filter_level(if cli.verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn })
        .try_init();
    let threads = cli.threads;
    let go = move || match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    };
    match threads {
        Some(0) => {
            eprintln!("error: --threads must be positive");
            EXIT_USAGE
        }
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(go),
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_USAGE
            }
        },
        None => go(),
    }
}
