//! Single in-process ordering service.
//!
//! Transactions queue in FIFO order. A cutter thread seals a batch when it
//! holds `max_tx` transactions or when the oldest queued transaction has
//! waited `timeout`, whichever comes first, and hands the batch to the
//! committer. The queue is bounded; a full queue either blocks submitters
//! or rejects them, per [`Backpressure`].

use std::collections::VecDeque;
use std::sync::mpsc;
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use parking_lot::{Condvar, Mutex};
use serde::{Deserialize, Serialize};

use super::{CommitReceipt, SubmitError};
use crate::ledger::Transaction;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backpressure {
    Block,
    Reject,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct BatchConfig {
    pub max_tx: usize,
    pub timeout_ms: u64,
    pub queue_capacity: usize,
    pub backpressure: Backpressure,
}

impl Default for BatchConfig {
    fn default() -> Self {
        BatchConfig {
            max_tx: 10,
            timeout_ms: 500,
            queue_capacity: 1000,
            backpressure: Backpressure::Block,
        }
    }
}

impl BatchConfig {
    pub fn timeout(&self) -> Duration {
        Duration::from_millis(self.timeout_ms)
    }
}

pub type CommitResult = Result<CommitReceipt, SubmitError>;

/// Commits one ordered batch and returns a receipt per transaction, in
/// order.
pub type Committer = Box<dyn FnMut(Vec<Transaction>) -> Result<Vec<CommitReceipt>, SubmitError> + Send>;

struct Pending {
    tx: Transaction,
    arrived: Instant,
    reply: mpsc::Sender<CommitResult>,
}

struct Queue {
    pending: VecDeque<Pending>,
    shutdown: bool,
    config: BatchConfig,
}

struct Shared {
    queue: Mutex<Queue>,
    arrived: Condvar,
    drained: Condvar,
}

/// Handle on a queued transaction's eventual commit.
#[derive(Debug)]
pub struct PendingReceipt {
    tx_id: String,
    rx: mpsc::Receiver<CommitResult>,
}

impl PendingReceipt {
    pub fn tx_id(&self) -> &str {
        &self.tx_id
    }

    pub fn wait(self) -> CommitResult {
        self.rx.recv().unwrap_or(Err(SubmitError::Shutdown))
    }
}

pub(crate) struct Orderer {
    shared: Arc<Shared>,
    cutter: Option<JoinHandle<()>>,
}

impl Orderer {
    pub(crate) fn start(config: BatchConfig, committer: Committer) -> Self {
        let shared = Arc::new(Shared {
            queue: Mutex::new(Queue {
                pending: VecDeque::new(),
                shutdown: false,
                config,
            }),
            arrived: Condvar::new(),
            drained: Condvar::new(),
        });
        let cutter = {
            let shared = Arc::clone(&shared);
            thread::Builder::new()
                .name("orderer".into())
                .spawn(move || cut_loop(&shared, committer))
                .expect("spawn orderer thread")
        };
        Orderer {
            shared,
            cutter: Some(cutter),
        }
    }

    pub(crate) fn config(&self) -> BatchConfig {
        self.shared.queue.lock().config
    }

    /// Applies new batch parameters from the next cut on.
    pub(crate) fn reconfigure(&self, config: BatchConfig) {
        self.shared.queue.lock().config = config;
        self.shared.arrived.notify_all();
        self.shared.drained.notify_all();
    }

    /// Queues `txs` contiguously, so that they are cut into the same block
    /// unless a batch boundary falls between them.
    pub(crate) fn enqueue(&self, txs: Vec<Transaction>) -> Result<Vec<PendingReceipt>, SubmitError> {
        let mut q = self.shared.queue.lock();
        loop {
            let capacity = q.config.queue_capacity.max(1);
            if txs.len() > capacity {
                return Err(SubmitError::QueueFull);
            }
            if q.pending.len() + txs.len() <= capacity {
                break;
            }
            if q.shutdown {
                return Err(SubmitError::Shutdown);
            }
            match q.config.backpressure {
                Backpressure::Reject => return Err(SubmitError::QueueFull),
                Backpressure::Block => self.shared.drained.wait(&mut q),
            }
        }
        if q.shutdown {
            return Err(SubmitError::Shutdown);
        }
        let now = Instant::now();
        let receipts = txs
            .into_iter()
            .map(|tx| {
                let (reply, rx) = mpsc::channel();
                let tx_id = tx.tx_id.clone();
                q.pending.push_back(Pending { tx, arrived: now, reply });
                PendingReceipt { tx_id, rx }
            })
            .collect();
        drop(q);
        self.shared.arrived.notify_all();
        Ok(receipts)
    }
}

impl Drop for Orderer {
    fn drop(&mut self) {
        self.shared.queue.lock().shutdown = true;
        self.shared.arrived.notify_all();
        self.shared.drained.notify_all();
        if let Some(handle) = self.cutter.take() {
            let _ = handle.join();
        }
    }
}

fn cut_loop(shared: &Shared, mut committer: Committer) {
    loop {
        let batch: Vec<Pending> = {
            let mut q = shared.queue.lock();
            while q.pending.is_empty() && !q.shutdown {
                shared.arrived.wait(&mut q);
            }
            if q.pending.is_empty() {
                return;
            }
            loop {
                let max = q.config.max_tx.max(1);
                let deadline = q.pending[0].arrived + q.config.timeout();
                if q.pending.len() >= max || q.shutdown || Instant::now() >= deadline {
                    break;
                }
                shared.arrived.wait_until(&mut q, deadline);
            }
            let n = q.pending.len().min(q.config.max_tx.max(1));
            let batch = q.pending.drain(..n).collect();
            shared.drained.notify_all();
            batch
        };

        let (txs, replies): (Vec<_>, Vec<_>) = batch.into_iter().map(|p| (p.tx, p.reply)).unzip();
        match committer(txs) {
            Ok(receipts) => {
                for (reply, receipt) in replies.into_iter().zip(receipts) {
                    let _ = reply.send(Ok(receipt));
                }
            }
            Err(e) => {
                log::error!("block commit failed: {e}");
                for reply in replies {
                    let _ = reply.send(Err(e.clone()));
                }
            }
        }
    }
}
