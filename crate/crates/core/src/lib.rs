//! MQ-based proof of work, identity-based Rainbow signatures, a UTXO ledger
//! with segregated witnesses, and a network simulator tying them together.

pub mod codec;
pub mod consensus;
pub mod ffield;
pub mod hash;
pub mod idrainbow;
pub mod ledger;
pub mod linalg;
pub mod mqsolve;
pub mod mqsys;
pub mod netsim;

pub use consensus::{Block, BlockHeader, BlockTree, ChainParams};
pub use ffield::{FieldElement, FieldSpec};
pub use hash::Hash32;
pub use idrainbow::{MasterPublicKey, MasterSecretKey, RainbowParams, Signature, UserSecretKey};
pub use ledger::{Transaction, UtxoSet};
pub use mqsolve::{MqSolver, SolveBudget, SolveReport};
pub use mqsys::MQSystem;
