mod common;

use std::fs;

use common::*;
use ehr_core::ledger::store::{read_block_log, BLOCK_LOG_FILE};
use ehr_core::ledger::{validate_chain, Document, Ledger, WorldState};
use ehr_core::{Network, StateKey};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Writes to `key` by valid transactions, found by scanning every block.
fn scan_history(ledger: &Ledger, key: &StateKey) -> Vec<(String, u64, u32, Option<Document>)> {
    let mut out = Vec::new();
    for block in ledger.blocks() {
        for (i, tx) in block.transactions.iter().enumerate() {
            if !block.validity[i].is_valid() {
                continue;
            }
            for w in &tx.rwset.writes {
                if &w.key == key {
                    out.push((tx.tx_id.clone(), block.number, i as u32, w.value.clone()));
                }
            }
        }
    }
    out
}

#[test]
fn history_matches_block_scan() {
    let net = network();
    let ch = net.ehr_channel().unwrap();
    random_workload(ch, &net.admin(), 300, 40, 11);
    let ledger = ch.ledger();
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    for _ in 0..100 {
        // a few keys beyond the workload range are never written
        let key = StateKey::new("noop", noop_key(rng.gen_range(0..45)));
        let got: Vec<_> = ledger
            .history_for_key(&key)
            .into_iter()
            .map(|h| (h.tx_id, h.block_num, h.tx_index, h.value))
            .collect();
        assert_eq!(got, scan_history(&ledger, &key), "{key}");
    }
}

#[test]
fn replay_equals_live_state_and_survives_reopen() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("net");
    let live = {
        let net = Network::bootstrap(config(), Some(&dir), clock()).unwrap();
        let ch = net.ehr_channel().unwrap();
        random_workload(ch, &net.admin(), 200, 25, 3);
        let ledger = ch.ledger();
        let replayed = WorldState::replay(ledger.blocks());
        assert_eq!(replayed.canonical_bytes(), ledger.state().canonical_bytes());
        ledger.state().canonical_bytes()
    };
    let net = Network::open(&dir, clock()).unwrap();
    assert_eq!(net.ehr_channel().unwrap().ledger().state().canonical_bytes(), live);
}

#[test]
fn single_byte_mutations_of_the_log_are_detected() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("net");
    {
        let net = Network::bootstrap(config(), Some(&dir), clock()).unwrap();
        let ch = net.ehr_channel().unwrap();
        random_workload(ch, &net.admin(), 60, 10, 8);
    }
    let log = dir.join("channels").join("channel1").join(BLOCK_LOG_FILE);
    let pristine = fs::read(&log).unwrap();
    validate_chain(&read_block_log(&log).unwrap()).unwrap();

    let mut rng = ChaCha20Rng::seed_from_u64(99);
    for trial in 0..100 {
        let mut bytes = pristine.clone();
        let at = rng.gen_range(0..bytes.len());
        bytes[at] ^= rng.gen_range(1..=255u8);
        fs::write(&log, &bytes).unwrap();
        let detected = match read_block_log(&log) {
            Err(_) => true,
            Ok(blocks) => validate_chain(&blocks).is_err(),
        };
        assert!(detected, "trial {trial}: mutation at byte {at} went unnoticed");
    }
    fs::write(&log, &pristine).unwrap();
}

#[test]
fn invalid_transactions_stay_in_blocks() {
    let net = network();
    let ch = net.ehr_channel().unwrap();
    random_workload(ch, &net.admin(), 200, 5, 21);
    let ledger = ch.ledger();
    let invalid = ledger
        .blocks()
        .iter()
        .flat_map(|b| b.validity.iter())
        .filter(|v| !v.is_valid())
        .count();
    assert!(invalid > 0, "workload over few keys should produce conflicts");
    validate_chain(ledger.blocks()).unwrap();
}
