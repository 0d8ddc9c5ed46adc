//! Command-line experiments over the `clbf` library.

mod sweep;

use std::error::Error;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use clbf::analysis::{build_c_table, expected_fp, optimize_k2_in, required_m2, FpParams, SearchMethod};
use clbf::compression::Codec;
use clbf::segment::privacy_bits;
use clbf::sim::{
    clbf_provenance_bits, dict_pfail, gps_baseline, jammer_scenario, simulate_compressed_flow, simulate_fp_curve,
    simulate_fp_rate, ArrivalModel, DictTimingConfig, JammerTopology, ScenarioConfig, GPS_BLOB_BYTES,
};
use sweep::Sweep;

type CliResult<T = ()> = Result<T, Box<dyn Error>>;

const DEFAULT_SEED: u64 = 0x5EED;
/// Upper end of the `m2` search when sizing filters for a target rate.
const MAX_M2: u64 = u16::MAX as u64;

#[derive(Parser, Debug)]
#[command(name = "clbf", version, about = "Spatial-provenance experiments with correlated linear Bloom filters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Analytical optimum of k2 for one segment-filter size
    OptimizeK2(OptimizeK2Args),
    /// Simulated and analytical false-positive rate over a k2 sweep
    FpCurve(FpCurveArgs),
    /// False-positive rate over a sweep of segment-filter sizes
    SweepM2(SweepM2Args),
    /// False-positive rate and required filter size over a sweep of segment counts
    SweepDelta(SweepDeltaArgs),
    /// Provenance size of CLBF against per-hop encrypted GPS reports
    Baseline(BaselineArgs),
    /// Sparsity and compressed size of the segment filter carried hop by hop
    CompressBench(CompressBenchArgs),
    /// Failure probability of the segment-dictionary broadcast
    Pfail(PfailArgs),
    /// Jammer localisation with one or two RSUs
    Jammer(JammerArgs),
    /// Location-privacy figures of a segment report
    Privacy(PrivacyArgs),
}

#[derive(Args, Debug)]
struct RoadArgs {
    /// Hops on the path (also the sequence length)
    #[arg(long)]
    h: usize,
    /// Number of segments in the coverage area
    #[arg(long)]
    r: u16,
    /// Largest segment change between neighbouring hops
    #[arg(long)]
    beta: u16,
}

#[derive(Args, Debug)]
struct SimArgs {
    /// Monte-Carlo trials per point
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    /// Master seed; trial t uses stream t
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Nodes including the RSU [default: h + 1]
    #[arg(long)]
    n: Option<u32>,
    /// Edge-filter size in bits
    #[arg(long, default_value_t = 256)]
    m1: u64,
}

impl SimArgs {
    fn scenario(&self, road: &RoadArgs, m2: u64, k2: usize) -> ScenarioConfig {
        let mut cfg = ScenarioConfig::new(road.h, road.r, road.beta, m2, k2);
        cfg.trials = self.trials;
        cfg.master_seed = self.seed;
        if let Some(n) = self.n {
            cfg.n = n;
        }
        cfg.m1 = self.m1;
        cfg.k1 = clbf::analysis::optimal_k1(self.m1, road.h.max(1) as u64).unwrap_or(1) as usize;
        cfg
    }

    fn describe(&self) -> String {
        let n = self.n.map_or_else(|| "h+1".to_string(), |n| n.to_string());
        format!("trials={} seed={} n={n} m1={}", self.trials, self.seed, self.m1)
    }
}

#[derive(Args, Debug)]
struct OutArgs {
    /// Write the CSV here
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Method {
    Scan,
    Descent,
}

#[derive(Args, Debug)]
struct OptimizeK2Args {
    /// Segment-filter size in bits
    #[arg(long)]
    m2: u64,
    #[command(flatten)]
    road: RoadArgs,
    /// Largest k2 considered [default: m2]
    #[arg(long)]
    k_max: Option<u64>,
    /// Full scan or descent from k2 = 1
    #[arg(long, value_enum, default_value_t = Method::Scan)]
    method: Method,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct FpCurveArgs {
    /// Segment-filter size in bits
    #[arg(long)]
    m2: u64,
    #[command(flatten)]
    road: RoadArgs,
    /// Hash counts to simulate, lo:hi:step
    #[arg(long, default_value = "1:40:1")]
    k2: Sweep<u64>,
    #[command(flatten)]
    sim: SimArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct SweepM2Args {
    /// Segment-filter sizes, lo:hi:step
    #[arg(long)]
    m2: Sweep<u64>,
    #[command(flatten)]
    road: RoadArgs,
    /// Fixed hash count [default: analytical optimum at each point]
    #[arg(long)]
    k2: Option<u64>,
    #[command(flatten)]
    sim: SimArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct SweepDeltaArgs {
    /// Segment counts, lo:hi:step
    #[arg(long)]
    r: Sweep<u64>,
    /// Hops on the path
    #[arg(long)]
    h: usize,
    /// Largest segment change between neighbouring hops
    #[arg(long)]
    beta: u16,
    /// Segment-filter size in bits
    #[arg(long)]
    m2: u64,
    /// Fixed hash count [default: analytical optimum at each point]
    #[arg(long)]
    k2: Option<u64>,
    /// False-positive target for the required-size column
    #[arg(long, default_value_t = 1e-4)]
    target: f64,
    #[command(flatten)]
    sim: SimArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct BaselineArgs {
    /// Path lengths, lo:hi:step
    #[arg(long)]
    h: Sweep<u64>,
    /// Number of segments in the coverage area
    #[arg(long)]
    r: u16,
    /// Largest segment change between neighbouring hops
    #[arg(long)]
    beta: u16,
    /// False-positive target used to size both filters
    #[arg(long, default_value_t = 1e-4)]
    target: f64,
    /// Payload bytes added to the baseline packet size
    #[arg(long, default_value_t = 0)]
    payload: u64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum CodecArg {
    Rake,
    ZeroRun,
    Raw,
    None,
}

#[derive(Args, Debug)]
struct CompressBenchArgs {
    /// Segment-filter sizes, lo:hi:step
    #[arg(long)]
    m: Sweep<u64>,
    /// Hops on the path
    #[arg(long, default_value_t = 5)]
    h: usize,
    /// Number of segments in the coverage area
    #[arg(long, default_value_t = 10)]
    r: u16,
    /// Largest segment change between neighbouring hops
    #[arg(long, default_value_t = 1)]
    beta: u16,
    /// Hash count of the segment filter
    #[arg(long, default_value_t = 8)]
    k2: usize,
    /// Codec applied at every hop
    #[arg(long, value_enum, default_value_t = CodecArg::Rake)]
    codec: CodecArg,
    /// Rake window exponent (window 2^e)
    #[arg(long, default_value_t = clbf::compression::DEFAULT_RAKE_EXP)]
    rake_exp: u8,
    /// Monte-Carlo trials per point
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    /// Master seed
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Arrival {
    Uniform,
    Poisson,
}

#[derive(Args, Debug)]
struct PfailArgs {
    /// Broadcast periods in milliseconds, lo:hi:step
    #[arg(long)]
    tau_b: Sweep<f64>,
    /// Packet rates per second, comma separated
    #[arg(long, value_delimiter = ',', default_value = "1")]
    lambda: Vec<f64>,
    /// Dictionary transmission delay in milliseconds
    #[arg(long, default_value_t = 3.0)]
    tau_t: f64,
    /// Dictionary lookup delay in milliseconds
    #[arg(long, default_value_t = 2.0)]
    tau_d: f64,
    /// Distribution of the first packet arrival
    #[arg(long, value_enum, default_value_t = Arrival::Poisson)]
    arrival: Arrival,
    /// Monte-Carlo trials per point
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    /// Master seed
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args, Debug)]
struct JammerArgs {
    /// Number of segments along the road
    #[arg(long)]
    r: u16,
    /// Jammed segment; omit for an unjammed road
    #[arg(long)]
    jam: Option<u16>,
    /// Add a second RSU at the far end of the road
    #[arg(long)]
    dual: bool,
    /// Largest segment change between neighbouring hops
    #[arg(long, default_value_t = 1)]
    beta: u16,
    /// Vehicles per segment
    #[arg(long, default_value_t = 3)]
    nodes_per_segment: u32,
    /// Seed for keys and packet ids
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Args, Debug)]
struct PrivacyArgs {
    /// GPS cells in the coverage area
    #[arg(long)]
    cells: u64,
    /// Number of segments
    #[arg(long)]
    r: u16,
    /// Largest segment change between neighbouring hops
    #[arg(long)]
    beta: u16,
    /// Hops between observer and vehicle; 0 for an external eavesdropper
    #[arg(long, default_value_t = 0)]
    hop_gap: u32,
}

/// CSV sink that starts with a `# config:` line.
fn csv_writer(out: &OutArgs, config: &str) -> CliResult<Option<csv::Writer<Box<dyn Write>>>> {
    let Some(path) = &out.out else { return Ok(None) };
    let mut sink: Box<dyn Write> = Box::new(BufWriter::new(File::create(path)?));
    writeln!(sink, "# config: {config}")?;
    Ok(Some(csv::Writer::from_writer(sink)))
}

fn write_rows(out: &OutArgs, config: &str, header: &[&str], rows: &[Vec<String>]) -> CliResult {
    if let Some(mut w) = csv_writer(out, config)? {
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        w.flush()?;
    }
    Ok(())
}

fn road_desc(road: &RoadArgs) -> String {
    format!("h={} r={} beta={}", road.h, road.r, road.beta)
}

fn optimize_k2_cmd(a: &OptimizeK2Args) -> CliResult {
    let table = build_c_table(a.road.h, a.road.beta, a.road.r)?;
    let method = match a.method {
        Method::Scan => SearchMethod::FullScan,
        Method::Descent => SearchMethod::Descent,
    };
    let opt = optimize_k2_in(a.m2, &table, 1..=a.k_max.unwrap_or(a.m2), method)?;
    println!("k2*={} expected_fp={:e}", opt.k2, opt.value);
    let rows: Vec<Vec<String>> = opt.curve.iter().map(|(k, v)| vec![k.to_string(), format!("{v:e}")]).collect();
    let config = format!("optimize-k2 m2={} {} method={:?}", a.m2, road_desc(&a.road), a.method);
    write_rows(&a.out, &config, &["k2", "expected_fp"], &rows)
}

fn fp_curve_cmd(a: &FpCurveArgs) -> CliResult {
    let table = build_c_table(a.road.h, a.road.beta, a.road.r)?;
    let ks: Vec<usize> = a.k2.points().into_iter().map(|k| k as usize).collect();
    let cfg = a.sim.scenario(&a.road, a.m2, 1);
    let reports = simulate_fp_curve(&cfg, &ks)?;
    let mut rows = Vec::new();
    let mut best: Option<(usize, f64)> = None;
    for (&k, rep) in ks.iter().zip(&reports) {
        let est = rep.fp_rate.expect("simulated reports carry a rate");
        let analytic = expected_fp(&FpParams::new(a.m2, k as u64, a.road.h, a.road.beta, a.road.r)?, &table)?.value;
        if best.is_none_or(|(_, v)| est.rate < v) {
            best = Some((k, est.rate));
        }
        rows.push(vec![
            k.to_string(),
            format!("{analytic:e}"),
            format!("{:e}", est.rate),
            format!("{:e}", est.ci_low),
            format!("{:e}", est.ci_high),
            est.trials.to_string(),
        ]);
    }
    let analytic_opt = optimize_k2_in(a.m2, &table, 1..=a.m2, SearchMethod::FullScan)?;
    let (k, v) = best.expect("sweeps are non-empty");
    println!(
        "simulated argmin k2={k} fp_rate={v:e}; analytical k2*={} expected_fp={:e}",
        analytic_opt.k2, analytic_opt.value
    );
    let config = format!("fp-curve m2={} {} k2={} {}", a.m2, road_desc(&a.road), a.k2, a.sim.describe());
    write_rows(&a.out, &config, &["k2", "analytic_fp", "sim_fp", "ci_low", "ci_high", "trials"], &rows)
}

/// Analytical value and, when trials are requested, a simulated estimate.
fn evaluate_point(road: &RoadArgs, sim: &SimArgs, m2: u64, k2: Option<u64>) -> CliResult<Vec<String>> {
    let table = build_c_table(road.h, road.beta, road.r)?;
    let (k2, analytic) = match k2 {
        Some(k) => (k, expected_fp(&FpParams::new(m2, k, road.h, road.beta, road.r)?, &table)?.value),
        None => {
            let opt = optimize_k2_in(m2, &table, 1..=m2, SearchMethod::FullScan)?;
            (opt.k2, opt.value)
        }
    };
    let mut row = vec![m2.to_string(), road.r.to_string(), k2.to_string(), format!("{analytic:e}")];
    if sim.trials > 0 {
        let est =
            simulate_fp_rate(&sim.scenario(road, m2, k2 as usize))?.fp_rate.expect("simulated reports carry a rate");
        row.extend([format!("{:e}", est.rate), format!("{:e}", est.ci_low), format!("{:e}", est.ci_high)]);
    } else {
        row.extend([String::new(), String::new(), String::new()]);
    }
    Ok(row)
}

fn print_point(row: &[String]) {
    let sim = if row[4].is_empty() { String::new() } else { format!(" sim_fp={} [{}, {}]", row[4], row[5], row[6]) };
    println!("m2={} r={} k2={} analytic_fp={}{sim}", row[0], row[1], row[2], row[3]);
}

const POINT_HEADER: [&str; 7] = ["m2", "r", "k2", "analytic_fp", "sim_fp", "ci_low", "ci_high"];

fn sweep_m2_cmd(a: &SweepM2Args) -> CliResult {
    let rows =
        a.m2.points()
            .into_par_iter()
            .map(|m2| evaluate_point(&a.road, &a.sim, m2, a.k2).map_err(|e| e.to_string()))
            .collect::<Result<Vec<_>, String>>()?;
    rows.iter().for_each(|r| print_point(r));
    let config = format!("sweep-m2 m2={} {} k2={:?} {}", a.m2, road_desc(&a.road), a.k2, a.sim.describe());
    write_rows(&a.out, &config, &POINT_HEADER, &rows)
}

fn sweep_delta_cmd(a: &SweepDeltaArgs) -> CliResult {
    let rows =
        a.r.points()
            .into_par_iter()
            .map(|r| -> Result<Vec<String>, String> {
                let r = u16::try_from(r).map_err(|_| format!("r={r} does not fit a segment index"))?;
                let road = RoadArgs { h: a.h, r, beta: a.beta };
                let mut row = evaluate_point(&road, &a.sim, a.m2, a.k2).map_err(|e| e.to_string())?;
                let table = build_c_table(a.h, a.beta, r).map_err(|e| e.to_string())?;
                let (need, _) = required_m2(a.target, &table, MAX_M2).map_err(|e| e.to_string())?;
                row.push(need.to_string());
                Ok(row)
            })
            .collect::<Result<Vec<_>, String>>()?;
    for row in &rows {
        print_point(row);
        println!("  required m2 at {:e}: {}", a.target, row[7]);
    }
    let mut header = POINT_HEADER.to_vec();
    header.push("required_m2");
    let config = format!(
        "sweep-delta r={} h={} beta={} m2={} k2={:?} target={:e} {}",
        a.r,
        a.h,
        a.beta,
        a.m2,
        a.k2,
        a.target,
        a.sim.describe()
    );
    write_rows(&a.out, &config, &header, &rows)
}

fn baseline_cmd(a: &BaselineArgs) -> CliResult {
    let rows =
        a.h.points()
            .into_par_iter()
            .map(|h| -> Result<Vec<String>, String> {
                let h = h as usize;
                let size = clbf_provenance_bits(h, a.r, a.beta, a.target).map_err(|e| e.to_string())?;
                let gps = gps_baseline(h, a.payload).map_err(|e| e.to_string())?;
                Ok(vec![
                    h.to_string(),
                    size.m1.to_string(),
                    size.k1.to_string(),
                    size.m2.to_string(),
                    size.k2.to_string(),
                    size.total_bits().to_string(),
                    (8 * GPS_BLOB_BYTES * h as u64).to_string(),
                    format!("{}", gps.avg_provenance_bits),
                ])
            })
            .collect::<Result<Vec<_>, String>>()?;
    for row in &rows {
        println!("h={} clbf_bits={} (m1={} m2={}) gps_bits={}", row[0], row[5], row[1], row[3], row[6]);
    }
    let config = format!("baseline h={} r={} beta={} target={:e} payload={}", a.h, a.r, a.beta, a.target, a.payload);
    write_rows(&a.out, &config, &["h", "m1", "k1", "m2", "k2", "clbf_bits", "gps_bits", "gps_avg_bits"], &rows)
}

fn compress_bench_cmd(a: &CompressBenchArgs) -> CliResult {
    let codec = match a.codec {
        CodecArg::Rake => Some(Codec::Rake { log2_window: a.rake_exp }),
        CodecArg::ZeroRun => Some(Codec::ZeroRun),
        CodecArg::Raw => Some(Codec::Raw),
        CodecArg::None => None,
    };
    let rows =
        a.m.points()
            .into_par_iter()
            .map(|m| -> Result<Vec<String>, String> {
                let mut cfg = ScenarioConfig::new(a.h, a.r, a.beta, m, a.k2);
                cfg.trials = a.trials;
                cfg.master_seed = a.seed;
                let rep = simulate_compressed_flow(&cfg, codec).map_err(|e| e.to_string())?;
                Ok(vec![
                    m.to_string(),
                    format!("{:.4}", 100.0 * rep.avg_sparsity),
                    format!("{:.4}", rep.avg_provenance_bits),
                    format!("{:.4}", rep.end_to_end_delay_units),
                ])
            })
            .collect::<Result<Vec<_>, String>>()?;
    for row in &rows {
        println!("m={} sparsity={}% compressed_bits={}", row[0], row[1], row[2]);
    }
    let config = format!(
        "compress-bench m={} h={} r={} beta={} k2={} codec={:?} rake_exp={} trials={} seed={}",
        a.m, a.h, a.r, a.beta, a.k2, a.codec, a.rake_exp, a.trials, a.seed
    );
    write_rows(&a.out, &config, &["m", "sparsity_pct", "compressed_bits", "delay_units"], &rows)
}

fn pfail_cmd(a: &PfailArgs) -> CliResult {
    let model = match a.arrival {
        Arrival::Uniform => ArrivalModel::Uniform,
        Arrival::Poisson => ArrivalModel::Poisson,
    };
    let points: Vec<(f64, f64)> =
        a.lambda.iter().flat_map(|&l| a.tau_b.points().into_iter().map(move |tb| (l, tb))).collect();
    let rows = points
        .into_par_iter()
        .map(|(lambda_p, tau_b_ms)| -> Result<Vec<String>, String> {
            let cfg = DictTimingConfig {
                tau_b: tau_b_ms * 1e-3,
                tau_t: a.tau_t * 1e-3,
                tau_d: a.tau_d * 1e-3,
                lambda_p,
                arrival_model: model,
                trials: a.trials,
                seed: a.seed,
            };
            let est = dict_pfail(&cfg).map_err(|e| e.to_string())?;
            Ok(vec![
                format!("{lambda_p}"),
                format!("{tau_b_ms}"),
                format!("{:e}", est.rate),
                format!("{:e}", est.ci_low),
                format!("{:e}", est.ci_high),
                cfg.in_low_failure_regime().to_string(),
            ])
        })
        .collect::<Result<Vec<_>, String>>()?;
    let worst = rows.iter().map(|r| r[2].parse::<f64>().unwrap_or(0.0)).fold(0.0, f64::max);
    println!("points={} max_p_fail={worst:e}", rows.len());
    let config = format!(
        "pfail tau_b_ms={} lambda={:?} tau_t_ms={} tau_d_ms={} arrival={:?} trials={} seed={}",
        a.tau_b, a.lambda, a.tau_t, a.tau_d, a.arrival, a.trials, a.seed
    );
    write_rows(&a.out, &config, &["lambda_p", "tau_b_ms", "p_fail", "ci_low", "ci_high", "in_regime"], &rows)
}

fn jammer_cmd(a: &JammerArgs) -> CliResult {
    let topo = JammerTopology { r: a.r, beta: a.beta, nodes_per_segment: a.nodes_per_segment, master_seed: a.seed };
    println!("{}", jammer_scenario(&topo, a.jam, a.dual)?);
    Ok(())
}

fn privacy_cmd(a: &PrivacyArgs) -> CliResult {
    let p = privacy_bits(a.cells, a.r, a.beta, a.hop_gap)?;
    println!("rsu_resolved_bits={:.4}", p.rsu_resolved);
    println!("rsu_residual_bits={:.4}", p.rsu_residual);
    println!("eavesdropper_bits={:.4}", p.eavesdropper);
    Ok(())
}

fn run(cli: &Cli) -> CliResult {
    match &cli.command {
        Command::OptimizeK2(a) => optimize_k2_cmd(a),
        Command::FpCurve(a) => fp_curve_cmd(a),
        Command::SweepM2(a) => sweep_m2_cmd(a),
        Command::SweepDelta(a) => sweep_delta_cmd(a),
        Command::Baseline(a) => baseline_cmd(a),
        Command::CompressBench(a) => compress_bench_cmd(a),
        Command::Pfail(a) => pfail_cmd(a),
        Command::Jammer(a) => jammer_cmd(a),
        Command::Privacy(a) => privacy_cmd(a),
    }
}

fn init_threads() -> Result<(), String> {
    let Ok(v) = std::env::var("CLBF_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("CLBF_THREADS must be a positive integer, got `{v}`"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("clbf: {e}");
        return ExitCode::from(2);
    }
    match run(&cli) {
        Ok(()) => {
            let _ = io::stdout().flush();
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("clbf: {e}");
            ExitCode::FAILURE
        }
    }
}
