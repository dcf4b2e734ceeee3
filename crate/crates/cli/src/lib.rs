//! The `ehrnet` command line.
//!
//! Exit codes: 0 on success, 1 when the input was rejected (bad config,
//! wrong admin secret, duplicate subject, broken chain), 2 on runtime
//! failure.

use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use ehr_core::ledger::store::{read_block_log, BLOCK_LOG_FILE};
use ehr_core::ledger::validate_chain;
use ehr_core::netconfig::{Enrollment, NetError, CHANNELS_DIR, EXAMPLE_TOML};
use ehr_core::{Network, NetworkConfig, SystemClock};
use serde_json::Value;

#[derive(Debug, Parser)]
#[command(name = "ehrnet", version, about = "Permissioned EHR ledger network")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print an example network configuration.
    ExampleConfig,
    /// Create CAs, identities and channels, and deploy chaincode.
    Bootstrap {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        data_dir: PathBuf,
    },
    /// Issue a certificate. Doctors also get a directory entry and patients
    /// a record.
    Enroll {
        #[arg(long)]
        data_dir: PathBuf,
        #[arg(long, value_enum)]
        role: RoleArg,
        #[arg(long)]
        id: String,
        #[arg(long, env = "EHRNET_ADMIN_SECRET", hide_env_values = true)]
        admin_secret: Option<String>,
        #[arg(long, env = "EHRNET_PASSWORD", hide_env_values = true)]
        password: Option<String>,
        /// Doctor display name.
        #[arg(long)]
        name: Option<String>,
        /// Doctor department.
        #[arg(long)]
        department: Option<String>,
        /// Patient personal details as a JSON object.
        #[arg(long)]
        personal: Option<String>,
    },
    /// Enroll the demo doctors and patients and one grant.
    SeedDemo {
        #[arg(long)]
        data_dir: PathBuf,
        #[arg(long, env = "EHRNET_ADMIN_SECRET", hide_env_values = true)]
        admin_secret: Option<String>,
    },
    /// Run the REST gateway until interrupted.
    Serve {
        #[arg(long)]
        data_dir: PathBuf,
        /// Overrides the configured bind address.
        #[arg(long)]
        bind: Option<SocketAddr>,
    },
    /// Re-derive every block hash and link of the stored chains.
    VerifyChain {
        #[arg(long)]
        data_dir: PathBuf,
        #[arg(long)]
        channel: Option<String>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RoleArg {
    Admin,
    Doctor,
    Patient,
}

#[derive(Debug)]
pub struct CliError {
    pub validation: bool,
    pub source: anyhow::Error,
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        if self.validation {
            1
        } else {
            2
        }
    }

    fn validation(source: anyhow::Error) -> Self {
        CliError {
            validation: true,
            source,
        }
    }

    fn runtime(source: anyhow::Error) -> Self {
        CliError {
            validation: false,
            source,
        }
    }
}

impl From<NetError> for CliError {
    fn from(e: NetError) -> Self {
        CliError {
            validation: e.is_validation(),
            source: e.into(),
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::ExampleConfig => {
            print!("{EXAMPLE_TOML}");
            Ok(())
        }
        Command::Bootstrap { config, data_dir } => bootstrap(&config, &data_dir),
        Command::Enroll {
            data_dir,
            role,
            id,
            admin_secret,
            password,
            name,
            department,
            personal,
        } => {
            let enrollment = enrollment(role, id, password, name, department, personal).map_err(CliError::validation)?;
            let net = open(&data_dir)?;
            let enrolled = net.enroll(admin_secret.as_deref().unwrap_or_default(), enrollment)?;
            let cert = &enrolled.certificate;
            println!(
                "enrolled {} as {} in {} (serial {}, issuer {})",
                cert.subject_id, cert.role, cert.org, cert.serial, cert.issuer_id
            );
            if let Some(s) = enrolled.submitted {
                println!("tx {} committed in block {}", s.receipt.tx_id, s.receipt.block_num);
            }
            Ok(())
        }
        Command::SeedDemo { data_dir, admin_secret } => {
            let net = open(&data_dir)?;
            let submitted = net.seed_demo(admin_secret.as_deref().unwrap_or_default())?;
            println!("seeded {} transactions", submitted.len());
            Ok(())
        }
        Command::Serve { data_dir, bind } => serve(&data_dir, bind),
        Command::VerifyChain { data_dir, channel } => {
            let reports = verify_chain(&data_dir, channel.as_deref()).map_err(CliError::validation)?;
            let mut faulty = 0;
            for r in &reports {
                println!("{r}");
                faulty += usize::from(!r.is_ok());
            }
            if faulty > 0 {
                return Err(CliError::validation(anyhow!("{faulty} of {} chains failed verification", reports.len())));
            }
            Ok(())
        }
    }
}

fn open(data_dir: &Path) -> Result<Network, CliError> {
    Ok(Network::open(data_dir, Arc::new(SystemClock))?)
}

fn bootstrap(config: &Path, data_dir: &Path) -> Result<(), CliError> {
    let text = fs::read_to_string(config)
        .with_context(|| format!("reading {}", config.display()))
        .map_err(CliError::validation)?;
    let config = NetworkConfig::from_toml(&text).map_err(|e| CliError::validation(e.into()))?;
    let net = Network::bootstrap(config, Some(data_dir), Arc::new(SystemClock))?;
    for ch in net.channels() {
        let ledger = ch.ledger();
        println!("channel {}: height {}, head {}", ch.id(), ledger.height(), ledger.latest_hash());
    }
    println!("admin {} ready in {}", net.admin_id(), data_dir.display());
    Ok(())
}

fn enrollment(
    role: RoleArg,
    id: String,
    password: Option<String>,
    name: Option<String>,
    department: Option<String>,
    personal: Option<String>,
) -> anyhow::Result<Enrollment> {
    let password = || password.clone().ok_or_else(|| anyhow!("--password is required for {role:?}"));
    Ok(match role {
        RoleArg::Admin => Enrollment::Admin { id },
        RoleArg::Doctor => Enrollment::Doctor {
            display_name: name.ok_or_else(|| anyhow!("--name is required for doctors"))?,
            department: department.ok_or_else(|| anyhow!("--department is required for doctors"))?,
            password: password()?,
            id,
        },
        RoleArg::Patient => {
            let text = personal.ok_or_else(|| anyhow!("--personal is required for patients"))?;
            let personal: Value = serde_json::from_str(&text).context("--personal is not JSON")?;
            if !personal.is_object() {
                return Err(anyhow!("--personal must be a JSON object"));
            }
            Enrollment::Patient {
                password: password()?,
                personal,
                id,
            }
        }
    })
}

fn serve(data_dir: &Path, bind: Option<SocketAddr>) -> Result<(), CliError> {
    let net = open(data_dir)?;
    let addr = match bind {
        Some(a) => a,
        None => net
            .config()
            .gateway
            .bind
            .parse()
            .context("configured gateway bind address")
            .map_err(CliError::validation)?,
    };
    let rt = tokio::runtime::Runtime::new()
        .context("starting runtime")
        .map_err(CliError::runtime)?;
    rt.block_on(ehr_gateway::serve(Arc::new(net), addr, async {
        let _ = tokio::signal::ctrl_c().await;
        log::info!("shutting down");
    }))
    .with_context(|| format!("serving on {addr}"))
    .map_err(CliError::runtime)
}

/// Outcome of verifying one channel's block log.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainReport {
    pub channel: String,
    pub outcome: Result<ChainSummary, String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainSummary {
    pub blocks: u64,
    pub transactions: usize,
    pub head: String,
}

impl ChainReport {
    pub fn is_ok(&self) -> bool {
        self.outcome.is_ok()
    }
}

impl std::fmt::Display for ChainReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.outcome {
            Ok(s) => write!(
                f,
                "{}: ok, {} blocks, {} transactions, head {}",
                self.channel, s.blocks, s.transactions, s.head
            ),
            Err(e) => write!(f, "{}: FAILED, {e}", self.channel),
        }
    }
}

/// Reads each channel's log without opening the network, so it also works
/// while a gateway holds the data directory.
pub fn verify_chain(data_dir: &Path, only: Option<&str>) -> anyhow::Result<Vec<ChainReport>> {
    let root = data_dir.join(CHANNELS_DIR);
    let mut channels: Vec<String> = fs::read_dir(&root)
        .with_context(|| format!("{} holds no channels", data_dir.display()))?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_dir())
        .filter_map(|e| e.file_name().into_string().ok())
        .collect();
    channels.sort();
    if let Some(name) = only {
        if !channels.iter().any(|c| c == name) {
            return Err(anyhow!("no channel {name} in {}", data_dir.display()));
        }
        channels.retain(|c| c == name);
    }
    Ok(channels
        .into_iter()
        .map(|channel| {
            let outcome = verify_log(&root.join(&channel).join(BLOCK_LOG_FILE));
            ChainReport { channel, outcome }
        })
        .collect())
}

fn verify_log(path: &Path) -> Result<ChainSummary, String> {
    let blocks = read_block_log(path).map_err(|e| e.to_string())?;
    if blocks.is_empty() {
        return Err("empty block log".into());
    }
    validate_chain(&blocks).map_err(|e| e.to_string())?;
    Ok(ChainSummary {
        blocks: blocks.len() as u64,
        transactions: blocks.iter().map(|b| b.transactions.len()).sum(),
        head: blocks.last().map(|b| b.hash.to_string()).unwrap_or_default(),
    })
}
