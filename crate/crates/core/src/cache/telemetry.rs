//! Privileged event log. Attacker code never sees this.

use std::fmt;
use std::io::{self, Write};

use crate::address::Address;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Event {
    RscHit(Address),
    VcHit(Address),
    Miss(Address),
    /// A valid RSC line moved into the victim cache by an insertion.
    DisplaceToVc(Address),
    EvictToMemory(Address),
    /// A victim-cache line moved into the RSC; `displaced` took its slot.
    ReinsertSwap {
        inserted: Address,
        displaced: Option<Address>,
    },
}

impl Event {
    pub fn name(&self) -> &'static str {
        match self {
            Event::RscHit(_) => "RSC_HIT",
            Event::VcHit(_) => "VC_HIT",
            Event::Miss(_) => "MISS",
            Event::DisplaceToVc(_) => "DISPLACE_TO_VC",
            Event::EvictToMemory(_) => "EVICT_TO_MEMORY",
            Event::ReinsertSwap { .. } => "REINSERT_SWAP",
        }
    }

    /// Tag column: a single hex tag, or `in:out` for swaps (`-` for empty).
    pub fn tag_hex(&self) -> String {
        match *self {
            Event::RscHit(a)
            | Event::VcHit(a)
            | Event::Miss(a)
            | Event::DisplaceToVc(a)
            | Event::EvictToMemory(a) => a.to_hex(),
            Event::ReinsertSwap {
                inserted,
                displaced,
            } => format!(
                "{}:{}",
                inserted.to_hex(),
                displaced.map_or_else(|| "-".to_string(), Address::to_hex)
            ),
        }
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.name(), self.tag_hex())
    }
}

/// An event stamped with the lookup step during which it happened.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Record {
    pub step: u64,
    pub event: Event,
}

pub const CSV_HEADER: &str = "step,event,tag_hex";

pub fn write_csv<W: Write>(out: &mut W, records: &[Record]) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(out, "{},{},{}", r.step, r.event.name(), r.event.tag_hex())?;
    }
    Ok(())
}
