use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use varlebesgue::czd::{cz_decompose, default_base, split};
use varlebesgue::experiments::config::{ExponentSpec, GridSpec, TestFunctionSpec, WeightSpec};
use varlebesgue::experiments::testfns::{test_function, test_pair};
use varlebesgue::experiments::{run_scenario, Scenario, ScenarioConfig};
use varlebesgue::grid::{dyadic_family, translated_families, CubeFamily, Grid, Translate};
use varlebesgue::norms::{luxemburg_norm, modular, NormConfig};
use varlebesgue::operators::{bilinear_maximal, bilinear_maximal_full, maximal};
use varlebesgue::sio::{check_kernel_bounds, grid_sampling, kernel_by_name, sharp_domination_test, SioConfig};
use varlebesgue::weights::{ap_constant, scalar_characterization, vec_ap_constant, VectorWeight};
use varlebesgue::Error;

#[derive(Parser)]
#[command(version, about = "Variable-exponent norms, weight constants and bilinear operators on grids")]
struct Cli {
    /// Scenario configuration (JSON), used by `verify`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for CSV and JSON output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct GridArgs {
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[arg(long, default_value_t = 2.0)]
    half_width: f64,
    #[arg(long, default_value_t = 6)]
    cell_exponent: u32,
}

impl GridArgs {
    fn build(&self) -> varlebesgue::Result<Grid> {
        GridSpec {
            dim: self.dim,
            half_width: self.half_width,
            cell_exponent: self.cell_exponent,
        }
        .build()
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Families {
    /// The standard dyadic family.
    Standard,
    /// All translated families.
    Translated,
}

impl Families {
    fn build(self, grid: &Grid) -> Vec<CubeFamily> {
        match self {
            Families::Standard => vec![dyadic_family(grid, Translate::ZERO)],
            Families::Translated => translated_families(grid),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Luxemburg norm and modular of a seeded test function.
    Norm {
        #[command(flatten)]
        grid: GridArgs,
        /// Exponent, e.g. `const:2` or `bump:2.5,0.8,1`.
        #[arg(long, default_value = "const:2")]
        p: ExponentSpec,
        /// Test-function case index.
        #[arg(long, default_value_t = 0)]
        case: usize,
    },
    /// Scalar weight constant, or the bilinear constant with `--w2`.
    Apconst {
        #[command(flatten)]
        grid: GridArgs,
        /// Weight, e.g. `power:0.25`.
        #[arg(long, default_value = "power:0.25")]
        w: WeightSpec,
        #[arg(long, default_value = "const:2")]
        p: ExponentSpec,
        /// Second weight; switches to the bilinear constant.
        #[arg(long)]
        w2: Option<WeightSpec>,
        #[arg(long, default_value = "const:2")]
        p2: ExponentSpec,
        #[arg(long, value_enum, default_value = "translated")]
        families: Families,
    },
    /// Maximal functions of seeded test functions, written as CSV.
    Maxop {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = 0)]
        case: usize,
        /// Bilinear maximal function of a seeded pair.
        #[arg(long)]
        bilinear: bool,
        /// Every grid interval (dimension one, bilinear only).
        #[arg(long)]
        all_intervals: bool,
        #[arg(long, value_enum, default_value = "translated")]
        families: Families,
    },
    /// Calderón-Zygmund decomposition of a seeded pair.
    Czd {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = 0)]
        case: usize,
        /// Base `a`; defaults to `2^(2 dim + 1)`.
        #[arg(long)]
        base: Option<f64>,
        #[arg(long)]
        json: bool,
    },
    /// Kernel bound check and sharp-domination constant.
    Sio {
        #[command(flatten)]
        grid: GridArgs,
        /// `odd`, `bump`, `zero` or `singular`.
        #[arg(long, default_value = "odd")]
        kernel: String,
        #[arg(long, default_value_t = 0.5)]
        radius: f64,
        #[arg(long, default_value_t = 0.25)]
        delta: f64,
        #[arg(long, default_value_t = 20000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        case: usize,
    },
    /// Runs a scenario and reports its verdict.
    Verify {
        /// Scenario name, e.g. `one-third`; `all` runs every scenario.
        scenario: String,
    },
}

/// Failure classes mapped to exit codes.
enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: --threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e}");
            ExitCode::from(2)
        }
    }
}

fn emit(out: Option<&Path>, name: &str, text: &str) -> Result<(), Failure> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let path = dir.join(name);
            fs::write(&path, text)?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn grid_of(args: &GridArgs) -> Result<Grid, Failure> {
    args.build().map_err(|e| Failure::Config(format!("grid: {e}")))
}

fn run(cli: &Cli) -> Result<bool, Failure> {
    let seed = cli.seed.unwrap_or(0);
    let tf = TestFunctionSpec::default();
    let norm_cfg = NormConfig::default();
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Norm { grid, p, case } => {
            let g = grid_of(grid)?;
            let p = p.build(g).map_err(|e| Failure::Config(format!("p: {e}")))?;
            let f = test_function(g, &tf, seed, *case, 0)?;
            let n = luxemburg_norm(&f, &p, &norm_cfg)?;
            let rho = modular(&f, &p)?;
            let text = json!({
                "norm": n.value,
                "modular": rho,
                "iterations": n.iterations,
                "residual": n.residual,
                "p_minus": p.p_minus(),
                "p_plus": p.p_plus(),
            });
            emit(out, "norm.json", &format!("{text:#}\n"))?;
        }
        Command::Apconst {
            grid,
            w,
            p,
            w2,
            p2,
            families,
        } => {
            let g = grid_of(grid)?;
            let fams = families.build(&g);
            let cfg_err = |f: &'static str| move |e: Error| Failure::Config(format!("{f}: {e}"));
            let w1 = w.build(g).map_err(cfg_err("w"))?;
            let p1 = p.build(g).map_err(cfg_err("p"))?;
            let text = match w2 {
                None => {
                    let c = ap_constant(&w1, &p1, &fams, &norm_cfg)?;
                    json!({ "ap_constant": c.value, "family": c.family, "cube": c.cube })
                }
                Some(w2) => {
                    let w2 = w2.build(g).map_err(cfg_err("w2"))?;
                    let p2 = p2.build(g).map_err(cfg_err("p2"))?;
                    let vw = VectorWeight::new(w1, w2, &p1, &p2)?;
                    let v = vec_ap_constant(&vw, &p1, &p2, &fams, &norm_cfg)?;
                    let sc = scalar_characterization(&vw, &p1, &p2, &fams, &norm_cfg)?;
                    json!({
                        "vec_ap_constant": v.value,
                        "c1": sc.c1.value,
                        "c2": sc.c2.value,
                        "c3": sc.c3.value,
                    })
                }
            };
            emit(out, "apconst.json", &format!("{text:#}\n"))?;
        }
        Command::Maxop {
            grid,
            case,
            bilinear,
            all_intervals,
            families,
        } => {
            let g = grid_of(grid)?;
            let fams = families.build(&g);
            let (f1, f2) = test_pair(g, &tf, seed, *case)?;
            let m = match (bilinear, all_intervals) {
                (true, true) => bilinear_maximal_full(&f1, &f2, &fams)?,
                (true, false) => bilinear_maximal(&f1, &f2, &fams)?,
                (false, _) => maximal(&f1, &fams)?,
            };
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["cell", "x", "y", "f1", "f2", "maximal"])
                .map_err(|e| Failure::Runtime(e.to_string()))?;
            for c in 0..g.cell_count() {
                let x = g.center(c);
                w.serialize((c, x[0], if g.dim() == 2 { x[1] } else { 0.0 }, f1.get(c), f2.get(c), m.values()[c]))
                    .map_err(|e| Failure::Runtime(e.to_string()))?;
            }
            let bytes = w.into_inner().map_err(|e| Failure::Runtime(e.to_string()))?;
            emit(out, "maxop.csv", &String::from_utf8_lossy(&bytes))?;
        }
        Command::Czd { grid, case, base, json } => {
            let g = grid_of(grid)?;
            let a = base.unwrap_or_else(|| default_base(g.dim()));
            let (f1, f2) = test_pair(g, &tf, seed, *case)?;
            let h = split(&f1, &f2)?;
            let d = cz_decompose(&h.h1, &h.h3, a, &dyadic_family(&g, Translate::ZERO))?;
            let chk = d.check();
            if *json {
                let text = d.dump_json().map_err(|e| Failure::Runtime(e.to_string()))?;
                emit(out, "czd.json", &format!("{text}\n"))?;
            } else {
                emit(out, "czd.txt", &d.dump_text())?;
            }
            eprintln!("{}", serde_json::to_string(&chk).expect("checks serialize"));
            return Ok(chk.structural());
        }
        Command::Sio {
            grid,
            kernel,
            radius,
            delta,
            samples,
            case,
        } => {
            let g = grid_of(grid)?;
            let k = kernel_by_name(kernel, g.dim(), *radius).map_err(|e| Failure::Config(format!("kernel: {e}")))?;
            let bounds = check_kernel_bounds(k.as_ref(), &grid_sampling(&g, *samples, seed))?;
            let (f1, f2) = test_pair(g, &tf, seed, *case)?;
            let d = sharp_domination_test(k.as_ref(), &f1, &f2, *delta, 1e-12, &SioConfig::default())?;
            let text = json!({
                "kernel": k.name(),
                "size_ratio": bounds.size_ratio,
                "smoothness_ratio": bounds.smoothness_ratio,
                "bounds_pass": bounds.pass,
                "sharp_constant": d.constant,
                "cell": d.cell,
            });
            emit(out, "sio.json", &format!("{text:#}\n"))?;
            return Ok(bounds.pass);
        }
        Command::Verify { scenario } => return verify(cli, scenario),
    }
    Ok(true)
}

fn verify(cli: &Cli, scenario: &str) -> Result<bool, Failure> {
    let mut configs = Vec::new();
    if scenario == "all" {
        if cli.config.is_some() {
            return Err(Failure::Config("--config cannot be combined with `verify all`".into()));
        }
        configs.extend(Scenario::ALL.map(ScenarioConfig::default_for));
    } else {
        let s = Scenario::parse(scenario).map_err(|e| Failure::Config(e.to_string()))?;
        let cfg = match &cli.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
                let cfg = ScenarioConfig::from_json(&text).map_err(|e| Failure::Config(e.to_string()))?;
                if cfg.scenario != s {
                    return Err(Failure::Config(format!(
                        "scenario: config is for {}, not {}",
                        cfg.scenario.name(),
                        s.name()
                    )));
                }
                cfg
            }
            None => ScenarioConfig::default_for(s),
        };
        configs.push(cfg);
    }
    let mut pass = true;
    for mut cfg in configs {
        if let Some(seed) = cli.seed {
            cfg.seed = seed;
        }
        if let Some(dir) = &cli.out {
            cfg.output.dir = Some(dir.clone());
        }
        let report = run_scenario(&cfg).map_err(|e| Failure::Config(e.to_string()))?;
        if let Some(dir) = &cfg.output.dir {
            for p in report.write_to(dir, cfg.output.csv, cfg.output.json)? {
                eprintln!("wrote {}", p.display());
            }
        }
        print!("{}", report.render());
        pass &= report.pass;
    }
    Ok(pass)
}
