use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};
use skfi_core::cw::{
    alpha_critical, beta_for_magnetization, cw_fixed_point, delta_u, field_condition_report,
    region_contains,
};
use skfi_core::parisi::{one_atom_value, parisi_minimize};
use skfi_core::simulator::{enumerate_exact, estimate_observables, sample_disorder};
use skfi_core::variational::skfi_free_energy;
use skfi_core::verify::{Effort, Outcome, Verifier};
use skfi_core::Error;

use crate::config::Config;
use crate::{Cli, Command};

/// A failure with its exit code: 2 for configuration problems, 1 for
/// failed verification or numerical failure.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    fn runtime(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Domain { .. }
            | Error::InvalidParameter(_)
            | Error::SizeLimit { .. }
            | Error::Bracket { .. }
            | Error::Ambiguous(_) => 2,
            Error::NonFinite { .. } | Error::NoConvergence { .. } | Error::GridTooNarrow { .. } => 1,
        };
        let mut message = e.to_string();
        if let Error::SizeLimit { .. } = e {
            message.push_str(
                "; reduce n (or the n_ladder entries), or set beta_2 = 0 to lift the quartic limits",
            );
        }
        Self { code, message }
    }
}

type Res<T> = Result<T, Failure>;

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::runtime(format!("{}: {e}", path.display()))
}

fn load_config(path: Option<&Path>) -> Res<Config> {
    match path {
        None => Ok(Config::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Failure::config(format!("{}: {e}", p.display())))?;
            Config::parse(&text).map_err(|m| Failure::config(format!("{}: {m}", p.display())))
        }
    }
}

/// Print `text` and, with `--out`, also write it to `out/name`.
fn emit(out: Option<&Path>, name: &str, text: &str) -> Res<()> {
    print!("{text}");
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| io_err(&path, e))?;
    }
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn csv_text<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Res<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Failure::runtime(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::runtime(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Failure::runtime(e.to_string()))
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn run(cli: &Cli) -> Result<ExitCode, Failure> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| Failure::config(e.to_string()))?;
    }
    let cfg = load_config(cli.config.as_deref())?;
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Cw => cw(&cfg, out),
        Command::Parisi { one_atom_scan } => parisi(&cfg, out, *one_atom_scan),
        Command::FreeEnergy => free_energy(&cfg, out),
        Command::Region => region(&cfg, out),
        Command::Simulate => simulate(&cfg, cli.seed, out),
        Command::Verify {
            suite,
            quick,
            manifest,
        } => verify(&cfg, cli.seed, out, suite, *quick, manifest.as_deref()),
        Command::Enumerate => enumerate(&cfg, cli.seed, out),
    }
}

fn cw(cfg: &Config, out: Option<&Path>) -> Res<ExitCode> {
    let h = cfg.field()?;
    let temp = cfg.temperature()?;
    let alpha = alpha_critical(h)?;
    let mu = cw_fixed_point(temp.beta, h)?;
    let mut report = json!({
        "beta": temp.beta,
        "h_std": h.std,
        "alpha": alpha,
        "mu": mu,
        "field_condition": field_condition_report(h)?,
    });
    if let Some(u) = cfg.u {
        let beta_u = beta_for_magnetization(u, h)?;
        report["u"] = json!(u);
        report["beta_u"] = json!(beta_u);
        if temp.beta >= beta_u {
            report["delta_u"] = json!(delta_u(u, temp.beta, h)?);
        }
        report["region_contains"] = json!(region_contains(u, &temp, h)?);
    }
    emit(out, "cw.json", &to_json(&report))?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct ScanRow {
    q: f64,
    #[serde(rename = "P")]
    p: f64,
}

fn parisi(cfg: &Config, out: Option<&Path>, scan: bool) -> Res<ExitCode> {
    let xi = cfg.xi()?;
    let h = cfg.field()?;
    if scan {
        let rows = (0..=100)
            .map(|i| {
                let q = i as f64 / 100.0;
                Ok(ScanRow {
                    q,
                    p: one_atom_value(&xi, h, q)?,
                })
            })
            .collect::<Result<Vec<_>, Error>>()?;
        emit(out, "one_atom_scan.csv", &csv_text(rows)?)?;
    } else {
        let r = parisi_minimize(&xi, h, cfg.k_max)?;
        emit(out, "parisi.json", &to_json(&r))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn free_energy(cfg: &Config, out: Option<&Path>) -> Res<ExitCode> {
    let r = skfi_free_energy(&cfg.temperature()?, cfg.field()?)?;
    emit(out, "free_energy.json", &to_json(&r))?;
    Ok(ExitCode::SUCCESS)
}

fn region(cfg: &Config, out: Option<&Path>) -> Res<ExitCode> {
    let u = cfg
        .u
        .ok_or_else(|| Failure::config("region needs \"u\" in the config"))?;
    let h = cfg.field()?;
    let temp = cfg.temperature()?;
    let beta_u = beta_for_magnetization(u, h)?;
    let inside = region_contains(u, &temp, h)?;
    let argmax = skfi_free_energy(&temp, h)?;
    let outside = !argmax.maximizers.is_empty() && argmax.maximizers.iter().all(|m| m.abs() > u);
    let report = json!({
        "u": u,
        "beta": temp.beta,
        "beta_u": beta_u,
        "delta_u": if temp.beta >= beta_u { Some(delta_u(u, temp.beta, h)?) } else { None },
        "xi_at_one": temp.xi.eval(1.0)?,
        "field_condition": field_condition_report(h)?,
        "region_contains": inside,
        "maximizers": argmax.maximizers,
        "maximizers_outside_u": outside,
    });
    emit(out, "region.json", &to_json(&report))?;
    Ok(ExitCode::SUCCESS)
}

/// Everything needed to reproduce a simulate run.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub command: String,
    pub config: Config,
    pub root_seed: u64,
    pub code_version: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub output: String,
    pub output_sha256: String,
}

fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn simulate_csv(cfg: &Config, seed: u64) -> Res<String> {
    let temp = cfg.temperature()?;
    let h = cfg.field()?;
    let mut rows = Vec::new();
    for &n in &cfg.simulate.n_ladder {
        let rep = estimate_observables(&temp, h, &cfg.simulate.estimate(n, seed))?;
        rows.extend(rep.rows);
    }
    csv_text(rows)
}

fn simulate(cfg: &Config, seed: u64, out: Option<&Path>) -> Res<ExitCode> {
    let started = unix_now();
    let csv = simulate_csv(cfg, seed)?;
    emit(out, "simulate.csv", &csv)?;
    let manifest = Manifest {
        command: "simulate".into(),
        config: cfg.clone(),
        root_seed: seed,
        code_version: env!("CARGO_PKG_VERSION").into(),
        started_unix: started,
        finished_unix: unix_now(),
        output: "simulate.csv".into(),
        output_sha256: sha256_hex(&csv),
    };
    let dir = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    let path = dir.join("manifest.json");
    fs::write(&path, to_json(&manifest)).map_err(|e| io_err(&path, e))?;
    eprintln!("manifest written to {}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn replay(path: &Path) -> Res<Outcome> {
    let text = fs::read_to_string(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    let m: Manifest = serde_json::from_str(&text)
        .map_err(|e| Failure::config(format!("{}: manifest: {e}", path.display())))?;
    if m.command != "simulate" {
        return Err(Failure::config(format!("cannot replay command {:?}", m.command)));
    }
    let csv = simulate_csv(&m.config, m.root_seed)?;
    let digest = sha256_hex(&csv);
    let mut passed = digest == m.output_sha256;
    let mut summary = format!("sha256 {} recorded {}", digest, m.output_sha256);
    let stored = path.parent().unwrap_or(Path::new(".")).join(&m.output);
    if let Ok(old) = fs::read_to_string(&stored) {
        let same = old == csv;
        passed &= same;
        summary.push_str(&format!("; {} byte-identical {same}", stored.display()));
    }
    Ok(Outcome {
        criterion: 13,
        suite: "manifest-replay".into(),
        passed,
        summary,
        measured: Default::default(),
        seconds: 0.0,
    })
}

fn verify(
    cfg: &Config,
    seed: u64,
    out: Option<&Path>,
    suite: &str,
    quick: bool,
    manifest: Option<&Path>,
) -> Res<ExitCode> {
    let effort = if quick { Effort::Quick } else { cfg.verify.effort };
    let mut v = Verifier::new(seed, effort);
    let outcomes = match suite {
        "manifest-replay" => {
            let m = manifest.ok_or_else(|| Failure::config("manifest-replay needs --manifest PATH"))?;
            vec![replay(m)?]
        }
        "all" => v.run_all()?,
        name => match v.run_suite(name) {
            Err(Error::InvalidParameter(msg)) if msg.starts_with("unknown suite") => {
                return Err(Failure::config(format!("{msg}, all, manifest-replay")))
            }
            r => r?,
        },
    };
    for o in &outcomes {
        eprintln!("{}", o.line());
    }
    emit(out, "verify.json", &to_json(&outcomes))?;
    if outcomes.iter().all(|o| o.passed) {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}

#[derive(Serialize)]
struct EnumRow {
    index: u32,
    n: usize,
    log_z: f64,
    free_energy: f64,
    m: f64,
    abs_m: f64,
    m2: f64,
    r2: f64,
    r4: f64,
}

fn enumerate(cfg: &Config, seed: u64, out: Option<&Path>) -> Res<ExitCode> {
    let temp = cfg.temperature()?;
    let h = cfg.field()?;
    let n = cfg.enumerate.n;
    let mut rows = Vec::new();
    for index in 0..cfg.enumerate.n_disorder as u32 {
        let d = sample_disorder(n, &temp, h, seed, index)?;
        let s = enumerate_exact(&d, &temp)?.summary();
        rows.push(EnumRow {
            index,
            n,
            log_z: s.log_z,
            free_energy: s.log_z / n as f64,
            m: s.m,
            abs_m: s.abs_m,
            m2: s.m2,
            r2: s.r2,
            r4: s.r4,
        });
    }
    emit(out, "enumerate.csv", &csv_text(rows)?)?;
    Ok(ExitCode::SUCCESS)
}
