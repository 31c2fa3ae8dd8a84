use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use repint_core::channel::{
    depolarizing_channel, pauli, pauli_channel, ChannelFile, DensityMatrix, KrausChannel, StinespringChannel,
};
use repint_core::dynamics::{
    trajectory_rows, write_trajectory_csv, CheckpointPolicy, EnvSequence, InteractionScheme, SimulationManifest,
};
use repint_core::mat::ComplexMatrix;
use repint_core::pipeline::{figure_parameter_sets, sample_batch, write_eigenvalue_csv, Ensemble, SampleManifest};
use repint_core::sampling::{haar_unitary, random_channel, EnsembleSpec, EnvLaw, RngStream};
use repint_core::selftest::run_selected;
use repint_core::spectral::{
    channel_spectrum, invariant_state, irreducibility_check, one_plus_phi_power_probe, strict_positivity_probe,
    InvariantStateConfig,
};
use repint_core::{Error, ToleranceConfig};

use crate::config::RunConfig;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(Error),
    SelftestFailed,
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::SelftestFailed => 1,
            CliError::Config(_) => 2,
            CliError::Core(e) => match e {
                Error::Drift { .. } => 4,
                Error::NoConvergence { .. }
                | Error::MaxIterationsExceeded { .. }
                | Error::RetryCapExhausted(_)
                | Error::Singular
                | Error::NonFinite
                | Error::TooManyKrausOperators { .. } => 3,
                _ => 2,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "{msg}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::SelftestFailed => write!(f, "self-test failed"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(Error::Io(e))
    }
}

type CliResult<T> = Result<T, CliError>;

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn require<T: Clone>(value: &Option<T>, flag: &str) -> CliResult<T> {
    value.clone().ok_or_else(|| config_err(format!("missing --{flag}")))
}

fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    std::fs::write(path, serde_json::to_string_pretty(value).map_err(Error::from)? + "\n")?;
    Ok(())
}

/// `value` with the resolved run configuration attached under `config`.
fn with_config(value: impl Serialize, cfg: &RunConfig) -> CliResult<Value> {
    let mut v = serde_json::to_value(value).map_err(Error::from)?;
    if let Value::Object(map) = &mut v {
        map.insert("config".into(), serde_json::to_value(cfg).map_err(Error::from)?);
    }
    Ok(v)
}

fn emit(cfg: &RunConfig, text: &str) -> CliResult<()> {
    match &cfg.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn fixture(name: &str, d: usize) -> CliResult<KrausChannel> {
    match name {
        "pauli" if d == 2 => Ok(pauli_channel()),
        "pauli" => Err(config_err("the pauli fixture has d = 2")),
        "identity" => Ok(KrausChannel::identity(d)),
        "depolarizing" => Ok(depolarizing_channel(d)),
        other => Err(config_err(format!("unknown fixture {other:?}"))),
    }
}

/// Stinespring data of a random channel, `U` from stream `(seed, 0)`.
fn random_dilation(cfg: &RunConfig, tol: &ToleranceConfig) -> CliResult<StinespringChannel> {
    let d = require(&cfg.d, "d")?;
    let b = cfg.probability_vector().map_err(CliError::Config)?.ok_or_else(|| config_err("missing --b"))?;
    let spec = EnsembleSpec::new(d, b)?;
    let st = random_channel(&spec, &mut RngStream::new(cfg.seed(), 0).rng())?;
    // re-validate against the selected tolerance profile
    Ok(StinespringChannel::new(d, st.unitary().clone(), st.beta().clone(), tol)?)
}

/// Channel from `--channel-file`, `--fixture`, or `--d/--b/--seed`, with a description.
fn resolve_channel(cfg: &RunConfig, tol: &ToleranceConfig) -> CliResult<(KrausChannel, Value)> {
    if let Some(path) = &cfg.channel_file {
        let file = ChannelFile::load(path, tol).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        let ch = file.into_kraus(tol)?;
        return Ok((ch, json!({ "channel_file": path })));
    }
    if let Some(name) = &cfg.fixture {
        let d = cfg.d.unwrap_or(2);
        return Ok((fixture(name, d)?, json!({ "fixture": name, "d": d })));
    }
    let st = random_dilation(cfg, tol)?;
    let desc = json!({ "random": { "d": st.d(), "b": cfg.probability_vector().ok().flatten(), "seed": cfg.seed() } });
    Ok((st.to_kraus(tol)?, desc))
}

pub fn check_channel(cfg: &RunConfig) -> CliResult<()> {
    let tol = cfg.tolerances();
    let (ch, source) = resolve_channel(cfg, &tol)?;
    let samples = cfg.n_samples.unwrap_or(64);
    let mut rng = RngStream::new(cfg.seed(), 1).rng();

    let spectral = channel_spectrum(&ch, &tol)?;
    let irreducibility = irreducibility_check(&ch, tol.kernel)?;
    let strict = strict_positivity_probe(&ch, samples, &mut rng, &tol)?;
    let one_plus = one_plus_phi_power_probe(&ch, samples, &mut rng, &tol)?;

    let report = json!({
        "source": source,
        "d": ch.d(),
        "kraus_count": ch.len(),
        "choi_rank": strict.choi_rank,
        "in_class_C": spectral.in_class_c,
        "irreducible": irreducibility.is_irreducible(),
        "spectral": spectral,
        "irreducibility": irreducibility,
        "strict_positivity": strict,
        "one_plus_phi": one_plus,
        "config": cfg,
    });
    emit(cfg, &(serde_json::to_string_pretty(&report).map_err(Error::from)? + "\n"))
}

fn ensemble_from(cfg: &RunConfig) -> CliResult<Ensemble> {
    let d = require(&cfg.d, "d")?;
    match cfg.ensemble.as_deref() {
        Some("asymptotic") => {
            let b = cfg.probability_vector().map_err(CliError::Config)?.ok_or_else(|| config_err("missing --b"))?;
            Ok(Ensemble::Asymptotic { d, b })
        }
        Some("induced") => Ok(Ensemble::Induced { d, d_prime: require(&cfg.d_prime, "d-prime")? }),
        Some(other) => Err(config_err(format!("unknown ensemble {other:?}"))),
        None => Err(config_err("missing --ensemble")),
    }
}

pub fn sample(cfg: &RunConfig) -> CliResult<()> {
    let tol = cfg.tolerances();
    let count = cfg.n_samples.unwrap_or(1000);
    let jobs = cfg.jobs.unwrap_or(0);
    let seed = cfg.seed();

    if cfg.figure_sets == Some(true) {
        let dir = cfg.out.clone().ok_or_else(|| config_err("--figure-sets needs --out <directory>"))?;
        std::fs::create_dir_all(&dir)?;
        for set in figure_parameter_sets() {
            let batch = sample_batch(&set, seed, count, jobs, &tol)?;
            let stem = set.label();
            let csv = dir.join(format!("{stem}.csv"));
            write_eigenvalue_csv(&batch.rows, std::io::BufWriter::new(std::fs::File::create(&csv)?))?;
            let mut run_cfg = cfg.clone();
            run_cfg.figure_sets = None;
            run_cfg.out = Some(csv.clone());
            write_json(&manifest_path(&csv), &with_config(SampleManifest::new(&set, seed, &batch, &tol), &run_cfg)?)?;
            eprintln!("wrote {} ({} rows, {} retries)", csv.display(), batch.rows.len(), batch.retry_count);
        }
        return Ok(());
    }

    let ensemble = ensemble_from(cfg)?;
    let batch = sample_batch(&ensemble, seed, count, jobs, &tol)?;
    match &cfg.out {
        Some(path) => {
            write_eigenvalue_csv(&batch.rows, std::io::BufWriter::new(std::fs::File::create(path)?))?;
            let manifest = SampleManifest::new(&ensemble, seed, &batch, &tol);
            write_json(&manifest_path(path), &with_config(manifest, cfg)?)?;
        }
        None => write_eigenvalue_csv(&batch.rows, std::io::stdout().lock())?,
    }
    Ok(())
}

fn initial_state(cfg: &RunConfig, d: usize, tol: &ToleranceConfig) -> CliResult<DensityMatrix> {
    match cfg.rho0.as_deref().unwrap_or("e0") {
        "e0" => Ok(DensityMatrix::basis_state(d, 0)),
        "mixed" => Ok(DensityMatrix::maximally_mixed(d)),
        "plus-y" if d == 2 => {
            Ok(DensityMatrix::new((&ComplexMatrix::identity(2) + &pauli(2)).scale_real(0.5), tol)?)
        }
        "plus-y" => Err(config_err("--rho0 plus-y needs d = 2")),
        other => Err(config_err(format!("unknown initial state {other:?}"))),
    }
}

/// `b` from the flags, or `(1, 0, …, 0)` of length `d'` (default 2).
fn env_spectrum(cfg: &RunConfig) -> CliResult<Vec<f64>> {
    match cfg.probability_vector().map_err(CliError::Config)? {
        Some(b) => Ok(b),
        None => {
            let mut b = vec![0.0; cfg.d_prime.unwrap_or(2).max(1)];
            b[0] = 1.0;
            Ok(b)
        }
    }
}

pub fn simulate(cfg: &RunConfig) -> CliResult<()> {
    let tol = cfg.tolerances();
    let seed = cfg.seed();
    let n_steps = cfg.n_steps.unwrap_or(1000);
    let policy = match cfg.every {
        Some(0) => return Err(config_err("--every must be positive")),
        Some(k) => CheckpointPolicy::Every(k),
        None => CheckpointPolicy::Geometric,
    };
    let scheme_name = require(&cfg.scheme, "scheme")?;

    let (scheme, target, d_prime) = match scheme_name.as_str() {
        "fixed" => {
            let (ch, _) = resolve_channel(cfg, &tol)?;
            let (target, _) = invariant_state(&ch, &InvariantStateConfig::default(), &tol)?;
            let dp = cfg.probability_vector().ok().flatten().map_or(1, |b| b.len());
            (InteractionScheme::Fixed { channel: ch }, target, dp)
        }
        "random-env" => {
            let d = cfg.d.unwrap_or(2);
            let b = env_spectrum(cfg)?;
            let dp = b.len();
            let law = match cfg.env_law.as_deref().unwrap_or("induced") {
                "induced" => EnvLaw::InducedPure { d_ancilla: dp },
                "fixed-spectrum" => EnvLaw::FixedSpectrumHaarBasis { b: b.clone() },
                "dirac" => EnvLaw::DiracAt { beta: DensityMatrix::diagonal(&b, &tol)? },
                other => return Err(config_err(format!("unknown random-env law {other:?}"))),
            };
            let u = haar_unitary(d * dp, &mut RngStream::new(seed, 0).rng());
            let mean = law.mean(dp).ok_or_else(|| config_err("law has no closed-form mean"))?;
            let averaged = StinespringChannel::new(d, u.clone(), mean, &tol)?.to_kraus(&tol)?;
            let (target, _) = invariant_state(&averaged, &InvariantStateConfig::default(), &tol)?;
            (InteractionScheme::RandomEnv { u, d_env: dp, law }, target, dp)
        }
        "iid-unitary" => {
            let d = cfg.d.unwrap_or(2);
            let b = env_spectrum(cfg)?;
            let dp = b.len();
            let env = match cfg.env_law.as_deref().unwrap_or("constant") {
                "constant" => EnvSequence::Constant { beta: DensityMatrix::diagonal(&b, &tol)? },
                "induced" => EnvSequence::Iid { law: EnvLaw::InducedPure { d_ancilla: dp } },
                "periodic" => EnvSequence::Periodic { cycle: (0..dp).map(|k| DensityMatrix::basis_state(dp, k)).collect() },
                other => return Err(config_err(format!("unknown iid-unitary law {other:?}"))),
            };
            (InteractionScheme::IidUnitary { d_env: dp, env }, DensityMatrix::maximally_mixed(d), dp)
        }
        other => return Err(config_err(format!("unknown scheme {other:?}"))),
    };

    let d = target.dim();
    let rho0 = initial_state(cfg, d, &tol)?;
    let mut rng = RngStream::new(seed, 1).rng();
    let traj = scheme.run(&rho0, n_steps, &mut rng, policy, &tol)?;
    let rows = trajectory_rows(&traj, &target)?;

    let mut buf = Vec::new();
    write_trajectory_csv(&rows, &mut buf)?;
    emit(cfg, &String::from_utf8_lossy(&buf))?;
    if let Some(out) = &cfg.out {
        let manifest = SimulationManifest { scheme: scheme.name().into(), d, d_prime, seed, n_steps };
        write_json(&manifest_path(out), &with_config(manifest, cfg)?)?;
    }
    Ok(())
}

pub fn selftest(cfg: &RunConfig) -> CliResult<()> {
    let results = run_selected(cfg.only.as_deref(), cfg.seed);
    if results.is_empty() {
        return Err(config_err(format!("no criterion matches {:?}", cfg.only.as_deref().unwrap_or(""))));
    }
    for r in &results {
        println!("{r}");
    }
    let passed = results.iter().filter(|r| r.passed).count();
    println!("{passed}/{} criteria passed", results.len());
    if let Some(out) = &cfg.out {
        write_json(out, &json!({ "results": results, "config": cfg }))?;
    }
    if passed == results.len() {
        Ok(())
    } else {
        Err(CliError::SelftestFailed)
    }
}
