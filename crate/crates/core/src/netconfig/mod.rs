//! Declarative network configuration, bootstrap and enrollment.

mod config;
mod network;

pub use config::{
    AdminConfig, BatchSpec, CaConfig, ChannelSpec, ConfigError, ConfigErrors, GatewayConfig, NetworkConfig, OrgConfig,
    DEPLOYABLE_CHAINCODES, EXAMPLE_TOML,
};
pub use network::{
    demo_password, expect_valid, Enrolled, Enrollment, NetError, Network, CHANNELS_DIR, CONFIG_FILE, LOCK_FILE,
    STATE_FILE,
};
