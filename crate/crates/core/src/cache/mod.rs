//! Cache state machines.
//!
//! Every model runs on one [`Cache`] type. The keyed models follow the same
//! lookup / insert / reinsert flow and differ only in division count and in
//! whether a victim cache is present and reinserts.

mod config;
mod state;
mod tag_index;
pub mod telemetry;

pub use config::{parse_kv, CacheConfig, Model, Replacement};
pub use state::{AccessOutcome, AccessRecord, Cache, HitKind, Location};
pub use telemetry::{Event, Record};

use crate::address::Address;

/// The only interface attacker code gets: access an address, learn hit or
/// miss.
pub trait Probe {
    fn access(&mut self, a: Address) -> AccessOutcome;
}

impl Probe for Cache {
    fn access(&mut self, a: Address) -> AccessOutcome {
        self.lookup(a)
    }
}

impl<P: Probe + ?Sized> Probe for &mut P {
    fn access(&mut self, a: Address) -> AccessOutcome {
        (**self).access(a)
    }
}
