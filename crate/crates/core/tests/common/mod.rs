#![allow(dead_code)]

use std::sync::Arc;

use ehr_core::netconfig::{demo_password, NetworkConfig};
use ehr_core::txflow::Invocation;
use ehr_core::{ManualClock, Network, Timestamp};

pub const ADMIN_SECRET: &str = "change-me";
pub const GENESIS_MS: u64 = 1_767_225_600_000;

/// The example network with a fixed genesis time and a short block timeout
/// so sequential submits do not wait for the batch deadline.
pub fn config() -> NetworkConfig {
    let mut c = NetworkConfig::example();
    c.genesis_time_ms = Some(GENESIS_MS);
    for ch in &mut c.channels {
        ch.batch.timeout_ms = 5;
    }
    c
}

pub fn clock() -> Arc<ManualClock> {
    Arc::new(ManualClock::with_step(Timestamp(GENESIS_MS + 1_000), 1_000))
}

pub fn network() -> Network {
    Network::bootstrap(config(), None, clock()).expect("bootstrap")
}

pub fn seeded() -> Network {
    let net = network();
    net.seed_demo(ADMIN_SECRET).expect("seed");
    net
}

pub fn ehr(function: &str) -> Invocation {
    Invocation::new("ehr", function)
}

pub fn password(id: &str) -> String {
    demo_password(id)
}

use ehr_core::txflow::{assemble, Channel};
use ehr_core::{SigningIdentity, Transaction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub fn noop_key(i: usize) -> String {
    format!("key{i:03}")
}

/// Random put/incr/del traffic over `keys` noop keys, endorsed in groups
/// against one snapshot and ordered together, so blocks carry several
/// transactions and some MVCC conflicts. Returns the number submitted.
pub fn random_workload(ch: &Channel, signer: &SigningIdentity, total: usize, keys: usize, seed: u64) -> usize {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut sent = 0;
    while sent < total {
        let group = rng.gen_range(1..=8).min(total - sent);
        let txs: Vec<Transaction> = (0..group)
            .map(|_| {
                let key = noop_key(rng.gen_range(0..keys));
                let inv = match rng.gen_range(0..10) {
                    0 => Invocation::new("noop", "del").arg(key),
                    1..=4 => Invocation::new("noop", "incr").arg(key),
                    _ => Invocation::new("noop", "put")
                        .arg(key)
                        .arg(format!(r#"{{"v":{}}}"#, rng.gen::<u32>())),
                };
                let proposal = ch.propose(signer, inv);
                let responses = ch.endorse(&proposal).expect("endorse");
                assemble(signer, &proposal, responses)
            })
            .collect();
        for p in ch.order(txs).expect("order") {
            p.wait().expect("commit");
        }
        sent += group;
    }
    sent
}
