//! Block scheduling. Work is split into blocks whose boundaries and random
//! streams depend only on the block index; an executor decides where blocks
//! run but must hand results back in index order.

use alloc::vec::Vec;

pub trait BlockExecutor {
    fn map_blocks<T, F>(&self, n_blocks: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send;
}

/// Runs every block on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl BlockExecutor for Sequential {
    fn map_blocks<T, F>(&self, n_blocks: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        (0..n_blocks).map(f).collect()
    }
}

/// Half-open pulse range `[start, end)` of block `b`.
pub fn block_range(b: u64, block_len: u64, total: u64) -> (u64, u64) {
    let start = b.saturating_mul(block_len).min(total);
    let end = start.saturating_add(block_len).min(total);
    (start, end)
}

pub fn block_count(total: u64, block_len: u64) -> u64 {
    total.div_ceil(block_len)
}

/// Maps every block and folds the results left to right.
pub fn map_fold<E, T, F, M>(exec: &E, n_blocks: u64, identity: T, f: F, merge: M) -> T
where
    E: BlockExecutor + ?Sized,
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
    M: Fn(T, T) -> T,
{
    exec.map_blocks(n_blocks, f).into_iter().fold(identity, merge)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_tile_the_run() {
        let total = 1_000_003;
        let len = 1 << 12;
        let n = block_count(total, len);
        let mut next = 0;
        for b in 0..n {
            let (s, e) = block_range(b, len, total);
            assert_eq!(s, next);
            assert!(e > s);
            next = e;
        }
        assert_eq!(next, total);
        assert_eq!(block_count(0, len), 0);
    }
}
