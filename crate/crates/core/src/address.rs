use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// A cache-line address. All cache operations work at line granularity.
///
/// `u64::MAX` is reserved as the empty-line sentinel inside the simulator and
/// is never produced by [`Address::random`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Address(pub u64);

impl Address {
    pub(crate) const EMPTY_RAW: u64 = u64::MAX;

    pub fn new(raw: u64) -> Self {
        debug_assert_ne!(raw, Self::EMPTY_RAW, "reserved address");
        Address(raw)
    }

    pub fn raw(self) -> u64 {
        self.0
    }

    /// Uniform random line address, excluding the reserved sentinel.
    pub fn random<R: rand::Rng + ?Sized>(rng: &mut R) -> Self {
        Address(rng.random_range(0..Self::EMPTY_RAW))
    }

    pub fn to_hex(self) -> String {
        format!("{:x}", self.0)
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#x}", self.0)
    }
}

impl fmt::LowerHex for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::LowerHex::fmt(&self.0, f)
    }
}

impl FromStr for Address {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let t = s.trim();
        let digits = t
            .strip_prefix("0x")
            .or_else(|| t.strip_prefix("0X"))
            .unwrap_or(t);
        let raw = u64::from_str_radix(digits, 16)
            .map_err(|e| Error::Parse(format!("bad hex address {t:?}: {e}")))?;
        if raw == Self::EMPTY_RAW {
            return Err(Error::Parse(format!("address {t} is reserved")));
        }
        Ok(Address(raw))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hex_parse() {
        assert_eq!("ff".parse::<Address>().unwrap(), Address(255));
        assert_eq!("0x10".parse::<Address>().unwrap(), Address(16));
        assert!("zz".parse::<Address>().is_err());
        assert!("ffffffffffffffff".parse::<Address>().is_err());
        assert_eq!(Address(0xabc).to_hex(), "abc");
    }
}
