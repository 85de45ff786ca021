use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::model::{Key, Transaction, TxnId, TxnStatus, Value};
use crate::mvstore::{MvStore, StoreError};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerBlock {
    pub number: u64,
    pub formed_tick: u64,
    pub committed_tick: u64,
    /// Transactions in block order with end timestamps and final statuses.
    pub txns: Vec<Transaction>,
}

/// A transaction dropped before it reached a block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejected {
    pub id: TxnId,
    pub status: TxnStatus,
    pub tick: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ledger {
    pub genesis: Vec<(Key, Value)>,
    pub blocks: Vec<LedgerBlock>,
    #[serde(default)]
    pub rejected: Vec<Rejected>,
    /// Every endorsed transaction in the order it reached the orderer.
    #[serde(default)]
    pub arrivals: Vec<TxnId>,
}

impl Ledger {
    /// Committed transactions in commit order.
    pub fn committed(&self) -> impl Iterator<Item = &Transaction> {
        self.blocks
            .iter()
            .flat_map(|b| b.txns.iter())
            .filter(|t| t.status == TxnStatus::Committed)
    }

    pub fn all_txns(&self) -> impl Iterator<Item = &Transaction> {
        self.blocks.iter().flat_map(|b| b.txns.iter())
    }

    /// Rebuilds the state by applying the committed write sets to a fresh
    /// store.
    pub fn replay(&self) -> Result<MvStore, StoreError> {
        let store = MvStore::new();
        store.preload(self.genesis.iter().cloned())?;
        for b in &self.blocks {
            store.apply_block(
                b.number,
                b.txns
                    .iter()
                    .enumerate()
                    .filter(|(_, t)| t.status == TxnStatus::Committed)
                    .map(|(i, t)| (i as u32 + 1, &t.writeset)),
            )?;
        }
        Ok(store)
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer(&mut w, self)?;
        w.flush()
    }

    pub fn load(path: &Path) -> std::io::Result<Ledger> {
        let r = BufReader::new(File::open(path)?);
        Ok(serde_json::from_reader(r)?)
    }
}
