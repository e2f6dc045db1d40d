//! Batch command-line front end.
//!
//! A deployment lives in a state directory written by `keygen`:
//! `deployment.conf` (public parameters), `secret` (`xs` and the shadow
//! key) and `registry` (registration records, no passwords). Passwords only
//! ever go to card files.

mod card;
mod config;

use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::attacks::{
    run_attack_matrix, run_matrix_cell, AttackError, AttackName, HandFixture, MatrixConfig,
};
use crate::encoding::OneWayFunction;
use crate::schemes::{
    login, Clock, Credential, Deployment, LoginRequest, ManualClock, PolicyKind, Registry,
    SchemeError, SchemeKind, SystemClock, SystemParams, Verdict,
};
use crate::transport::{decode_login, encode_login, send_login, serve, TransportError};

pub use card::{card_from_text, card_to_text};
pub use config::{
    parse_biguint, secret_from_text, secret_to_text, DeploymentConfig, PrimeSpec, DESK_P, DESK_XS,
};

pub const CONFIG_FILE: &str = "deployment.conf";
pub const SECRET_FILE: &str = "secret";
pub const REGISTRY_FILE: &str = "registry";

/// Process exit codes. Clap itself exits with 2 on malformed flags.
pub mod exit {
    pub const OK: i32 = 0;
    /// Login rejected, or an attack or matrix disagreed with expectation.
    pub const NEGATIVE: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const CONFIG: i32 = 3;
    pub const FILE: i32 = 4;
    pub const SEED_CONFLICT: i32 = 5;
    pub const TRANSPORT: i32 = 6;
    pub const INTERNAL: i32 = 7;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    File { path: PathBuf, source: std::io::Error },
    #[error("--seed {flag} conflicts with seed = {config} in the configuration file")]
    SeedConflict { config: u64, flag: u64 },
    #[error("transport: {0}")]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
    #[error(transparent)]
    Attack(#[from] AttackError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Config(_) => exit::CONFIG,
            CliError::File { .. } => exit::FILE,
            CliError::SeedConflict { .. } => exit::SEED_CONFLICT,
            CliError::Transport(_) => exit::TRANSPORT,
            CliError::Scheme(_) | CliError::Attack(_) => exit::INTERNAL,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ruas", version, about = "Smart-card login schemes, their attacks and a wire harness")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate parameters and a server secret into a state directory.
    Keygen {
        #[command(flatten)]
        deployment: DeploymentArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Register a user and write the card file.
    Register {
        #[arg(long)]
        state: PathBuf,
        /// Numeric identity (for SLH, its decimal string is the registration string).
        #[arg(long, conflicts_with = "j", required_unless_present = "j")]
        id: Option<u64>,
        /// SLH registration string.
        #[arg(long)]
        j: Option<String>,
        #[arg(long)]
        card: PathBuf,
        #[command(flatten)]
        time: TimeArgs,
    },
    /// Log in with a card, in-process or against a served endpoint.
    Login {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        card: PathBuf,
        #[arg(long)]
        endpoint: Option<SocketAddr>,
        /// Seed for the login nonce; defaults to the deployment seed.
        #[arg(long)]
        r_seed: Option<u64>,
        /// Also write the request frame, hex encoded.
        #[arg(long)]
        request_out: Option<PathBuf>,
        #[command(flatten)]
        time: TimeArgs,
    },
    /// Verify a hex-encoded request frame, in-process or against an endpoint.
    Verify {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        request: PathBuf,
        #[arg(long)]
        endpoint: Option<SocketAddr>,
        #[command(flatten)]
        time: TimeArgs,
    },
    /// Serve a deployment until killed.
    Serve {
        #[arg(long)]
        state: PathBuf,
        #[arg(long, default_value = "127.0.0.1:7878")]
        listen: String,
        #[command(flatten)]
        time: TimeArgs,
    },
    /// Run one attack against a fresh deployment.
    Attack {
        #[arg(long)]
        name: AttackName,
        #[command(flatten)]
        deployment: DeploymentArgs,
        /// Exponent for the power and masquerade attacks.
        #[arg(long)]
        k: Option<u64>,
    },
    /// Run every attack against every scheme under both format policies.
    Matrix {
        #[command(flatten)]
        deployment: DeploymentArgs,
        /// Write the text report here as well as to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Debug, Args, Default)]
pub struct DeploymentArgs {
    /// key = value file; flags below override it, except a differing seed.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub scheme: Option<SchemeKind>,
    /// Fixed prime modulus (decimal or 0x-hex).
    #[arg(long, value_parser = parse_biguint, conflicts_with = "bits")]
    pub p: Option<BigUint>,
    /// Generate a safe prime of this size from the seed.
    #[arg(long)]
    pub bits: Option<u32>,
    #[arg(long)]
    pub hash: Option<OneWayFunction>,
    #[arg(long)]
    pub delta_t: Option<u64>,
    #[arg(long)]
    pub policy: Option<PolicyKind>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args, Default)]
pub struct TimeArgs {
    /// Pin the clock to this Unix time instead of reading the system clock.
    #[arg(long)]
    pub at: Option<u64>,
}

impl TimeArgs {
    fn clock(&self) -> Arc<dyn Clock> {
        match self.at {
            Some(t) => Arc::new(ManualClock::new(t)),
            None => Arc::new(SystemClock),
        }
    }
}

impl DeploymentArgs {
    pub fn resolve(&self) -> Result<DeploymentConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => DeploymentConfig::from_text(&read(path)?)?,
            None => DeploymentConfig::default(),
        };
        if let Some(seed) = self.seed {
            if self.config.is_some() && seed != cfg.seed {
                return Err(CliError::SeedConflict { config: cfg.seed, flag: seed });
            }
            cfg.seed = seed;
        }
        if let Some(s) = self.scheme {
            cfg.scheme = s;
        }
        if let Some(p) = &self.p {
            cfg.prime = PrimeSpec::Fixed(p.clone());
        }
        if let Some(b) = self.bits {
            cfg.prime = PrimeSpec::Bits(b);
        }
        if let Some(h) = self.hash {
            cfg.hash = h;
        }
        if let Some(d) = self.delta_t {
            cfg.delta_t = d;
        }
        if let Some(p) = self.policy {
            cfg.policy = p;
        }
        Ok(cfg)
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::File { path: path.to_path_buf(), source })
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::File { path: path.to_path_buf(), source })
}

fn is_desk(params: &SystemParams) -> bool {
    params.p == BigUint::from(DESK_P)
}

/// A deployment loaded from a state directory.
struct State {
    dir: PathBuf,
    config: DeploymentConfig,
    deployment: Deployment,
}

impl State {
    fn load(dir: &Path, clock: Arc<dyn Clock>) -> Result<Self, CliError> {
        let config = DeploymentConfig::from_text(&read(&dir.join(CONFIG_FILE))?)?;
        let params = config.params()?;
        let secret = secret_from_text(&read(&dir.join(SECRET_FILE))?, &params)?;
        let registry_path = dir.join(REGISTRY_FILE);
        let registry = if registry_path.exists() {
            Registry::from_text(&read(&registry_path)?).map_err(SchemeError::from)?
        } else {
            Registry::new()
        };
        // each registration gets its own mu stream
        let mu_seed = config.seed ^ (registry.len() as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        let mut deployment = Deployment::with_registry(
            config.scheme,
            params,
            secret,
            config.policy,
            clock,
            Arc::new(registry),
            mu_seed,
        );
        if is_desk(&deployment.params) {
            deployment = deployment.with_mu_draws(HandFixture::desk().mu_draws);
        }
        Ok(State { dir: dir.to_path_buf(), config, deployment })
    }

    fn save_registry(&self) -> Result<(), CliError> {
        write(&self.dir.join(REGISTRY_FILE), &self.deployment.registry().to_text())
    }
}

fn verdict_code(v: Verdict) -> i32 {
    if v.accepted {
        exit::OK
    } else {
        exit::NEGATIVE
    }
}

fn matrix_config(cfg: &DeploymentConfig, params: SystemParams) -> MatrixConfig {
    if is_desk(&params) {
        MatrixConfig { params, ..MatrixConfig::desk(cfg.seed) }
    } else {
        MatrixConfig::new(params, cfg.seed)
    }
}

/// Runs one command, writing its report to `out`. Returns the exit code.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    let io = |e: std::io::Error| CliError::File { path: PathBuf::from("<stdout>"), source: e };
    match cli.command {
        Command::Keygen { deployment, out: dir } => {
            let (cfg, params) = deployment.resolve()?.resolved()?;
            let secret = cfg.secret(&params);
            fs::create_dir_all(&dir).map_err(|source| CliError::File { path: dir.clone(), source })?;
            write(&dir.join(CONFIG_FILE), &cfg.to_text())?;
            write(&dir.join(SECRET_FILE), &secret_to_text(&secret))?;
            write(&dir.join(REGISTRY_FILE), "")?;
            writeln!(out, "{} deployment, p of {} bits, written to {}", cfg.scheme, params.p.bits(), dir.display())
                .map_err(io)?;
            Ok(exit::OK)
        }
        Command::Register { state, id, j, card, time } => {
            let st = State::load(&state, time.clock())?;
            let cred = match (id, j) {
                (_, Some(j)) => st.deployment.register_string(&j)?,
                (Some(id), None) => st.deployment.register(id)?,
                (None, None) => return Err(CliError::Usage("register needs --id or --j".into())),
            };
            st.save_registry()?;
            write(&card, &card_to_text(&cred))?;
            let mu = cred.mu.map(|m| format!(" mu={m:016x}")).unwrap_or_default();
            writeln!(out, "registered {} id={:016x}{mu}; card written to {}", cred.scheme, cred.id, card.display())
                .map_err(io)?;
            Ok(exit::OK)
        }
        Command::Login { state, card, endpoint, r_seed, request_out, time } => {
            let clock = time.clock();
            let st = State::load(&state, Arc::clone(&clock))?;
            let cred: Credential = card_from_text(&read(&card)?)?;
            let params = &st.deployment.params;
            let r = params.draw_r(&mut ChaCha8Rng::seed_from_u64(r_seed.unwrap_or(st.config.seed)));
            let req = login(&cred, &r, clock.now(), params);
            if let Some(path) = request_out {
                let frame = encode_login(&req).map_err(TransportError::from)?;
                write(&path, &(hex::encode(frame) + "\n"))?;
            }
            let verdict = submit(&st, &req, endpoint)?;
            writeln!(out, "{verdict}").map_err(io)?;
            Ok(verdict_code(verdict))
        }
        Command::Verify { state, request, endpoint, time } => {
            let st = State::load(&state, time.clock())?;
            let frame = hex::decode(read(&request)?.trim())
                .map_err(|e| CliError::Config(format!("request is not hex: {e}")))?;
            let req = decode_login(&frame).map_err(TransportError::from)?;
            let verdict = submit(&st, &req, endpoint)?;
            writeln!(out, "{verdict}").map_err(io)?;
            Ok(verdict_code(verdict))
        }
        Command::Serve { state, listen, time } => {
            let st = State::load(&state, time.clock())?;
            let handle = serve(listen.as_str(), Arc::new(st.deployment))?;
            writeln!(out, "listening on {}", handle.local_addr()).map_err(io)?;
            out.flush().map_err(io)?;
            handle.wait();
            Ok(exit::OK)
        }
        Command::Attack { name, deployment, k } => {
            let cfg = deployment.resolve()?;
            let params = cfg.params()?;
            let mut mcfg = matrix_config(&cfg, params);
            if let Some(k) = k {
                mcfg.k = BigUint::from(k);
            }
            let cell = run_matrix_cell(&mcfg, cfg.scheme, cfg.policy, name)?;
            let o = &cell.outcome;
            writeln!(out, "attack {} against {} ({} policy)", name, cfg.scheme, cfg.policy).map_err(io)?;
            if let Some(c) = &o.forged_credential {
                writeln!(out, "forged identity: {:#x}", c.id).map_err(io)?;
            }
            if let (Some(rec), Some(truth)) = (&o.recovered_pw, &o.true_pw) {
                writeln!(out, "recovered pw: {rec}\nvictim pw:    {truth}").map_err(io)?;
            }
            if let Some(v) = o.server_verdict {
                writeln!(out, "server verdict: {v}").map_err(io)?;
            }
            if let Some(note) = &o.note {
                writeln!(out, "note: {note}").map_err(io)?;
            }
            let word = |b: bool| if b { "succeeded" } else { "failed" };
            writeln!(
                out,
                "result: {} ({}); expected {}",
                word(o.succeeded),
                o.reason_code(),
                word(cell.expected)
            )
            .map_err(io)?;
            Ok(if cell.matches() { exit::OK } else { exit::NEGATIVE })
        }
        Command::Matrix { deployment, out: text_path, csv } => {
            let cfg = deployment.resolve()?;
            let params = cfg.params()?;
            let matrix = run_attack_matrix(&matrix_config(&cfg, params))?;
            let text = matrix.to_text();
            out.write_all(text.as_bytes()).map_err(io)?;
            if let Some(path) = text_path {
                write(&path, &text)?;
            }
            if let Some(path) = csv {
                write(&path, &matrix.to_csv())?;
            }
            Ok(if matrix.all_match() { exit::OK } else { exit::NEGATIVE })
        }
    }
}

fn submit(st: &State, req: &LoginRequest, endpoint: Option<SocketAddr>) -> Result<Verdict, CliError> {
    match endpoint {
        Some(addr) => Ok(send_login(addr, req)?),
        None => Ok(st.deployment.verify(req)),
    }
}
