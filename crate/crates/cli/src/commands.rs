//! Command-line front end. `run` returns the process exit code: 0 on success,
//! 1 for configuration or argument errors, 2 for I/O and file format errors.

use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nimbus::bench::{run_bench, BenchOptions, MIN_FRAMES};
use nimbus::corpus::{generate_corpus, write_corpus, CorpusSpec};
use nimbus::march::HdrImage;
use nimbus::scene::{load_config, preset, ConfigError};
use nimbus::textures::{bake_procedural, TextureRef};
use nimbus::volume::{write_vtex, BitDepth};
use nimbus::SceneConfig;

use crate::output::{diff_png, render_png};
use crate::service::{router, AppState, DEFAULT_QUEUE_DEPTH};

#[derive(Debug, Parser)]
#[command(name = "nimbus", version, about = "Procedural volumetric cloud renderer")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a scene to PNG, or the difference of two scenes.
    Render(RenderArgs),
    /// Time frames and count samples across sample-scale settings.
    Bench(BenchArgs),
    /// Write a seeded corpus of scene files plus a manifest.
    Corpus(CorpusArgs),
    /// Run the HTTP preview service.
    Serve(ServeArgs),
    /// Bake a procedural noise volume to a .vtex file pair.
    Bake(BakeArgs),
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Scene file; keys absent from it take default values.
    #[arg(long, conflicts_with = "preset")]
    pub scene: Option<PathBuf>,
    /// Built-in preset (its first scene).
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long, default_value = "render.png")]
    pub out: PathBuf,
    #[arg(long)]
    pub width: Option<u32>,
    #[arg(long)]
    pub height: Option<u32>,
    /// Also write raw float RGB; defaults to the PNG path with a `.raw` extension.
    #[arg(long, num_args = 0..=1, value_name = "PATH")]
    pub hdr: Option<Option<PathBuf>>,
    /// Render two scene files and write their absolute difference.
    #[arg(long, num_args = 2, value_names = ["A", "B"], conflicts_with_all = ["scene", "preset"])]
    pub diff: Option<Vec<PathBuf>>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Scene files; may repeat.
    #[arg(long)]
    pub scene: Vec<PathBuf>,
    /// Built-in presets; may repeat. Every scene of the preset is timed.
    #[arg(long)]
    pub preset: Vec<String>,
    /// Frames per setting, the first of which is a warm-up.
    #[arg(long, default_value_t = MIN_FRAMES)]
    pub frames: u32,
    /// Comma-separated sample scales; `v` sets view and shadow scale alike,
    /// `v:s` sets them separately.
    #[arg(long, value_delimiter = ',', default_value = "4.0,2.0")]
    pub scales: Vec<String>,
    /// Comma-separated sun elevations in degrees, overriding the scenes'.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub sun_elevations: Vec<f64>,
    #[arg(long)]
    pub width: Option<u32>,
    #[arg(long)]
    pub height: Option<u32>,
    /// Also write the JSON report here.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 500)]
    pub count: usize,
    /// WIDTHxHEIGHT
    #[arg(long, default_value = "512x512")]
    pub resolution: String,
    /// Fraction of scenes assigned to `train`.
    #[arg(long, default_value_t = 0.7)]
    pub split: f64,
    #[arg(long, default_value_t = 2024)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    /// Requests allowed to wait behind the active render.
    #[arg(long, default_value_t = DEFAULT_QUEUE_DEPTH)]
    pub queue_depth: usize,
    /// Directory that relative texture paths resolve against.
    #[arg(long)]
    pub base_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BakeArgs {
    /// e.g. procedural:perlin_worley:128
    #[arg(long)]
    pub texture: String,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Header path, conventionally `<name>.vtex.json`.
    #[arg(long)]
    pub out: PathBuf,
    /// Store an 8-bit PNG atlas instead of raw 32-bit floats.
    #[arg(long)]
    pub png: bool,
}

/// A failed command: message for standard error plus exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }

    fn io(path: &Path, err: std::io::Error) -> Self {
        Self { code: 2, message: format!("{}: {err}", path.display()) }
    }
}

impl From<nimbus::Error> for Failure {
    fn from(err: nimbus::Error) -> Self {
        let code = match err {
            nimbus::Error::Config(_) | nimbus::Error::Parameter { .. } => 1,
            _ => 2,
        };
        Self { code, message: err.to_string() }
    }
}

impl From<ConfigError> for Failure {
    fn from(err: ConfigError) -> Self {
        Self::config(err.to_string())
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

pub fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Render(a) => render(a),
        Command::Bench(a) => bench(a),
        Command::Corpus(a) => corpus(a),
        Command::Serve(a) => serve(a),
        Command::Bake(a) => bake(a),
    }
}

fn load_scene(path: &Path) -> Result<SceneConfig, Failure> {
    load_config(path).map_err(|e| match e {
        nimbus::Error::Io(io) => Failure::io(path, io),
        nimbus::Error::Config(c) => Failure::config(format!("{}: {c}", path.display())),
        other => other.into(),
    })
}

fn base_dir(path: &Path) -> Option<&Path> {
    path.parent().filter(|p| !p.as_os_str().is_empty())
}

fn resize(scene: &mut SceneConfig, width: Option<u32>, height: Option<u32>) -> Result<(), Failure> {
    if let Some(w) = width {
        scene.camera.width = w;
    }
    if let Some(h) = height {
        scene.camera.height = h;
    }
    scene.validate()?;
    Ok(())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| Failure::io(path, e))
}

fn write_hdr(path: &Path, hdr: &HdrImage) -> Result<(), Failure> {
    let file = fs::File::create(path).map_err(|e| Failure::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    hdr.write_raw(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Failure::io(path, e))
}

fn render(a: RenderArgs) -> Result<(), Failure> {
    let rendered = if let Some(pair) = &a.diff {
        let (pa, pb) = (&pair[0], &pair[1]);
        let mut left = load_scene(pa)?;
        let mut right = load_scene(pb)?;
        resize(&mut left, a.width, a.height)?;
        resize(&mut right, a.width, a.height)?;
        diff_png(&left, &right, base_dir(pa))?
    } else {
        let (mut scene, dir) = match (&a.scene, &a.preset) {
            (Some(path), _) => (load_scene(path)?, base_dir(path)),
            (None, Some(name)) => (preset(name)?.scenes.swap_remove(0), None),
            (None, None) => (SceneConfig::default(), None),
        };
        resize(&mut scene, a.width, a.height)?;
        render_png(&scene, dir)?
    };
    write_file(&a.out, &rendered.png)?;
    if let Some(hdr) = a.hdr {
        let path = hdr.unwrap_or_else(|| a.out.with_extension("raw"));
        write_hdr(&path, &rendered.hdr)?;
    }
    eprintln!(
        "wrote {} ({}x{}, {:.1} ms, {} extinction samples)",
        a.out.display(),
        rendered.hdr.width,
        rendered.hdr.height,
        rendered.elapsed.as_secs_f64() * 1e3,
        rendered.extinction_samples
    );
    Ok(())
}

/// `"4"` -> (4, 4), `"4:2"` -> (4, 2).
pub fn parse_scale(s: &str) -> Result<(f64, f64), String> {
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("invalid scale `{s}`"));
    match s.split_once(':') {
        Some((v, sh)) => Ok((num(v)?, num(sh)?)),
        None => {
            let v = num(s)?;
            Ok((v, v))
        }
    }
}

fn bench(a: BenchArgs) -> Result<(), Failure> {
    let scales = a
        .scales
        .iter()
        .map(|s| parse_scale(s))
        .collect::<Result<Vec<_>, _>>()
        .map_err(Failure::config)?;
    let mut scenes = Vec::new();
    for path in &a.scene {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        scenes.push((name, load_scene(path)?));
    }
    for name in &a.preset {
        let p = preset(name)?;
        let n = p.scenes.len();
        for (i, s) in p.scenes.into_iter().enumerate() {
            let label = if n == 1 { name.clone() } else { format!("{name}[{i}]") };
            scenes.push((label, s));
        }
    }
    if scenes.is_empty() {
        scenes.push(("default".to_string(), SceneConfig::default()));
    }
    for (_, s) in &mut scenes {
        resize(s, a.width, a.height)?;
    }
    let opts = BenchOptions {
        frames: a.frames,
        scales,
        sun_elevations: a.sun_elevations,
    };
    // Relative texture paths in scene files resolve against the first file.
    let dir = a.scene.first().and_then(|p| base_dir(p));
    let report = run_bench(&scenes, &opts, dir)?;
    let json = report.to_json();
    print!("{}", report.table());
    println!("{json}");
    if let Some(path) = &a.json {
        write_file(path, (json + "\n").as_bytes())?;
    }
    Ok(())
}

pub fn parse_resolution(s: &str) -> Result<(u32, u32), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("resolution must look like 512x512, got `{s}`"))?;
    let dim = |t: &str| t.trim().parse::<u32>().map_err(|_| format!("invalid resolution `{s}`"));
    Ok((dim(w)?, dim(h)?))
}

fn corpus(a: CorpusArgs) -> Result<(), Failure> {
    let (width, height) = parse_resolution(&a.resolution).map_err(Failure::config)?;
    let spec = CorpusSpec {
        count: a.count,
        width,
        height,
        split: a.split,
        seed: a.seed,
    };
    let (manifest, scenes) = generate_corpus(&spec)?;
    write_corpus(&a.out, &manifest, &scenes)?;
    eprintln!(
        "wrote {} scenes ({} train / {} test) to {}",
        manifest.count,
        manifest.train_count,
        manifest.test_count,
        a.out.display()
    );
    Ok(())
}

fn serve(a: ServeArgs) -> Result<(), Failure> {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Failure { code: 2, message: format!("starting runtime: {e}") })?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(a.bind)
            .await
            .map_err(|e| Failure { code: 2, message: format!("binding {}: {e}", a.bind) })?;
        eprintln!("listening on http://{}", a.bind);
        let app = router(AppState::new(a.queue_depth, a.base_dir));
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| Failure { code: 2, message: format!("server: {e}") })
    })
}

fn bake(a: BakeArgs) -> Result<(), Failure> {
    let reference: TextureRef = a.texture.parse().map_err(Failure::config)?;
    let TextureRef::Procedural { kind, size } = reference else {
        return Err(Failure::config(format!("expected procedural:<kind>:<size>, got `{}`", a.texture)));
    };
    let tex = bake_procedural(kind, size, a.seed)?;
    let depth = if a.png { BitDepth::Eight } else { BitDepth::ThirtyTwo };
    let generator = serde_json::json!({ "texture": a.texture });
    let data = write_vtex(&tex, &a.out, depth, a.seed, Some(generator))?;
    eprintln!("wrote {} and {}", a.out.display(), data.display());
    Ok(())
}
