use serde::{Deserialize, Serialize};

use super::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlashOp {
    PageRead,
    PageWrite,
    BlockErase,
}

/// Raw NAND operation latencies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlashTiming {
    pub page_read_us: u64,
    pub page_write_us: u64,
    pub block_erase_us: u64,
}

impl Default for FlashTiming {
    fn default() -> Self {
        Self {
            page_read_us: 25,
            page_write_us: 200,
            block_erase_us: 2_000,
        }
    }
}

impl FlashTiming {
    /// Service time for `count` back-to-back operations of one kind.
    pub fn device_latency(&self, op: FlashOp, count: u64) -> SimTime {
        let unit = match op {
            FlashOp::PageRead => self.page_read_us,
            FlashOp::PageWrite => self.page_write_us,
            FlashOp::BlockErase => self.block_erase_us,
        };
        SimTime::from_micros(unit.saturating_mul(count))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_latencies() {
        let t = FlashTiming::default();
        assert_eq!(t.device_latency(FlashOp::PageWrite, 1).as_micros(), 200);
        assert_eq!(t.device_latency(FlashOp::BlockErase, 0).as_micros(), 0);
        assert_eq!(t.device_latency(FlashOp::PageRead, 4).as_micros(), 100);
        assert_eq!(t.device_latency(FlashOp::BlockErase, 1).as_micros(), 2_000);
    }
}
