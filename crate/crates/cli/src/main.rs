//! `circuit-ot`: distances, benchmarks, learning and color transfer from
//! the command line.
//!
//! Failures print one line, `error[<code>]: <message>`, and exit with 2 for
//! compatibility errors, 3 for malformed input, 4 for exceeded size caps and
//! 1 otherwise.

mod bench;
mod manifest;

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use circuit_ot::baselines::UNROLL_CAP;
use circuit_ot::compat::VariableBijection;
use circuit_ot::coupling::couple;
use circuit_ot::gen::{color_transfer, ColorTransferConfig, ImageBuffer, LeafKind};
use circuit_ot::learn::{
    bits_per_dimension, ecw, fit_em_observed, fit_wm_observed, EMConfig, LeafUpdate, WMConfig,
};
use circuit_ot::{Circuit, Dataset, Error, ErrorClass};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use manifest::RunManifest;

#[derive(Parser)]
#[command(name = "circuit-ot", version, about = "Optimal transport between probabilistic circuits")]
struct Cli {
    /// Worker threads (0 uses every core).
    #[cfg(feature = "parallel")]
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Circuit Wasserstein distance between two compatible circuits.
    Cw {
        p: PathBuf,
        q: PathBuf,
        /// JSON array mapping each P variable to a Q variable (default identity).
        #[arg(long)]
        bijection: Option<PathBuf>,
        #[arg(long = "p-order", default_value_t = 1.0)]
        order: f64,
        #[arg(long)]
        out_coupling: Option<PathBuf>,
    },
    /// Distances between random compatible pairs over a (v, k) grid.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
        v_grid: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "2")]
        k_grid: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        reps: usize,
        #[arg(long, value_delimiter = ',', default_value = "cw,mw,exact,sinkhorn")]
        methods: Vec<bench::Method>,
        #[arg(long, value_enum, default_value_t = LeafArg::Bernoulli)]
        leaf: LeafArg,
        /// Support size for categorical leaves.
        #[arg(long, default_value_t = 3)]
        categories: usize,
        #[arg(long = "p-order", default_value_t = 1.0)]
        order: f64,
        /// Samples per circuit for the Sinkhorn baseline.
        #[arg(long, default_value_t = 100)]
        sinkhorn_samples: usize,
        /// Mixture components above which MW is reported infeasible.
        #[arg(long, default_value_t = 512)]
        max_components: u128,
        /// Joint support above which exact W is reported infeasible.
        #[arg(long, default_value_t = 1024)]
        max_support: u128,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit circuit parameters to a dataset.
    Learn {
        data: PathBuf,
        structure: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::Wm)]
        method: MethodArg,
        /// Random-routing probability (wm-stochastic; default 0.1).
        #[arg(long)]
        p_route: Option<f64>,
        #[arg(long, default_value_t = 100)]
        iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "p-order", default_value_t = 2.0)]
        order: f64,
        #[arg(long, value_enum, default_value_t = LeafUpdateArg::Moment)]
        leaf_update: LeafUpdateArg,
        #[arg(long, default_value_t = 1e-6)]
        rel_tol: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Recolor `src` toward the color distribution of `dst`.
    ColorTransfer {
        src: PathBuf,
        dst: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        #[arg(long, default_value_t = 10)]
        components: usize,
        #[arg(long, default_value_t = 50_000)]
        max_pixels: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum LeafArg {
    Bernoulli,
    Categorical,
    Gaussian,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum MethodArg {
    Wm,
    WmStochastic,
    Em,
}

#[derive(Clone, Copy, ValueEnum)]
enum LeafUpdateArg {
    Moment,
    Distance,
}

fn exit_code(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::Compatibility => 2,
        ErrorClass::Format => 3,
        ErrorClass::Resource => 4,
        ErrorClass::Numeric => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    #[cfg(feature = "parallel")]
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error[threads]: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.code(), e.to_string().replace('\n', " "));
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(command: Command) -> circuit_ot::Result<()> {
    let start = Instant::now();
    match command {
        Command::Cw { p, q, bijection, order, out_coupling } => {
            let (pc, qc) = (Circuit::load(&p)?, Circuit::load(&q)?);
            let bij = match &bijection {
                Some(path) => VariableBijection::load(path)?,
                None => VariableBijection::identity(pc.num_vars()),
            };
            let result = couple(&pc, &qc, &bij, order)?;
            println!("cw_p^p {}", result.distance_p_power);
            println!("cw_p {}", result.distance());
            if let Some(out) = out_coupling {
                result.coupling.save(&out)?;
                let mut inputs = vec![path_string(&p), path_string(&q)];
                inputs.extend(bijection.as_deref().map(path_string));
                RunManifest::new("cw", json!({ "p_order": order }), None, inputs, &out, start).write_next_to(&out)?;
            }
        }
        Command::Bench {
            v_grid,
            k_grid,
            reps,
            methods,
            leaf,
            categories,
            order,
            sinkhorn_samples,
            max_components,
            max_support,
            seed,
            out,
        } => {
            if v_grid.is_empty() || k_grid.is_empty() {
                return Err(Error::Format("grids must be nonempty".into()));
            }
            let leaf_kind = match leaf {
                LeafArg::Bernoulli => LeafKind::Bernoulli,
                LeafArg::Categorical => LeafKind::Categorical { m: categories },
                LeafArg::Gaussian => LeafKind::Gaussian,
            };
            let settings = bench::Settings {
                methods: methods.clone(),
                leaf_kind,
                order,
                sinkhorn_samples,
                max_components: max_components.min(UNROLL_CAP),
                max_support,
                seed,
            };
            let rows = bench::run_grid(&v_grid, &k_grid, reps, &settings)?;
            bench::write_csv(&rows, &out)?;
            let config = json!({
                "v_grid": v_grid, "k_grid": k_grid, "reps": reps,
                "methods": methods.iter().map(|m| m.name()).collect::<Vec<_>>(),
                "leaf_kind": leaf_kind, "p_order": order, "sinkhorn_samples": sinkhorn_samples,
                "max_components": max_components, "max_support": max_support,
            });
            RunManifest::new("bench", config, Some(seed), vec![], &out, start).write_next_to(&out)?;
        }
        Command::Learn { data, structure, method, p_route, iters, seed, order, leaf_update, rel_tol, out, trace } => {
            let dataset = Dataset::read_csv(&data)?;
            let circuit = Circuit::load(&structure)?;
            if dataset.num_vars() != circuit.num_vars() {
                return Err(Error::Format(format!(
                    "data has {} columns but the structure has {} variables",
                    dataset.num_vars(),
                    circuit.num_vars()
                )));
            }
            let mut rows: Vec<(usize, f64, f64, f64)> = Vec::new();
            // WM reports its own ECW; EM states are scored here.
            let mut record = |c: &Circuit, ecw_value: Option<f64>| -> circuit_ot::Result<()> {
                let ecw_value = match ecw_value {
                    Some(v) => v,
                    None => ecw(c, &dataset, order)?,
                };
                rows.push((rows.len(), ecw_value, bits_per_dimension(c, &dataset)?, start.elapsed().as_secs_f64()));
                Ok(())
            };
            let (fitted, config) = match method {
                MethodArg::Wm | MethodArg::WmStochastic => {
                    let stochastic_p = match method {
                        MethodArg::Wm => p_route.unwrap_or(0.0),
                        _ => p_route.unwrap_or(WMConfig::stochastic().stochastic_p),
                    };
                    let cfg = WMConfig {
                        order,
                        stochastic_p,
                        max_iters: iters,
                        rel_tol,
                        seed,
                        leaf_update: match leaf_update {
                            LeafUpdateArg::Moment => LeafUpdate::MomentMatch,
                            LeafUpdateArg::Distance => LeafUpdate::DistanceMinimizing,
                        },
                        ..WMConfig::default()
                    };
                    let fit = fit_wm_observed(&circuit, &dataset, &cfg, |c, v| record(c, Some(v)))?;
                    (fit.circuit, serde_json::to_value(&cfg)?)
                }
                MethodArg::Em => {
                    let cfg = EMConfig { iters, ..EMConfig::default() };
                    let fit = fit_em_observed(&circuit, &dataset, &cfg, |c, _| record(c, None))?;
                    (fit.circuit, serde_json::to_value(&cfg)?)
                }
            };
            fitted.save(&out)?;
            let &(_, final_ecw, final_bpd, _) = rows.last().expect("initial state is always recorded");
            println!("ecw {final_ecw}");
            println!("bpd {final_bpd}");
            let mut outputs = vec![out.clone()];
            if let Some(path) = &trace {
                let mut f = File::create(path)?;
                writeln!(f, "iteration,ecw,bpd,wall_time")?;
                for (i, e, b, t) in &rows {
                    writeln!(f, "{i},{e},{b},{t:.6}")?;
                }
                outputs.push(path.clone());
            }
            let method_name = match method {
                MethodArg::Wm => "wm",
                MethodArg::WmStochastic => "wm-stochastic",
                MethodArg::Em => "em",
            };
            let config = json!({ "method": method_name, "config": config });
            let inputs = vec![path_string(&data), path_string(&structure)];
            let mut manifest = RunManifest::new("learn", config, Some(seed), inputs, &out, start);
            manifest.outputs = outputs.iter().map(|p| path_string(p)).collect();
            manifest.write_next_to(&out)?;
        }
        Command::ColorTransfer { src, dst, t, components, max_pixels, seed, out } => {
            let (s, d) = (ImageBuffer::load(&src)?, ImageBuffer::load(&dst)?);
            let cfg = ColorTransferConfig { components, t, max_pixels, seed, ..ColorTransferConfig::default() };
            let (image, report) = color_transfer(&s, &d, &cfg)?;
            image.save(&out)?;
            println!("cw_2^2 {}", report.cw);
            let config = json!({ "config": cfg, "report": report });
            RunManifest::new("color-transfer", config, Some(seed), vec![path_string(&src), path_string(&dst)], &out, start)
                .write_next_to(&out)?;
        }
    }
    Ok(())
}

fn path_string(p: &Path) -> String {
    p.display().to_string()
}
