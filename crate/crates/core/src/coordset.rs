//! Sets of coordinate indices over `[1, d]`, packed into 64-bit blocks.
//!
//! Used for the index sets `F_k` and the witness sets `J(ℓ,k) = F_k \ F_ℓ`.
//! Indices are 1-based throughout, matching the word coordinates.

use crate::{Error, Result};

const BITS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CoordSet {
    blocks: Vec<u64>,
    d: usize,
}

impl CoordSet {
    pub fn empty(d: usize) -> CoordSet {
        CoordSet {
            blocks: vec![0; d.div_ceil(BITS)],
            d,
        }
    }

    /// Builds a set from 1-based indices, rejecting out-of-range values.
    pub fn from_indices(d: usize, indices: &[u32]) -> Result<CoordSet> {
        let mut s = CoordSet::empty(d);
        for &i in indices {
            if i < 1 || i as usize > d {
                return Err(Error::InvalidArgument(format!(
                    "coordinate {i} out of range [1,{d}]"
                )));
            }
            s.insert(i);
        }
        Ok(s)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn insert(&mut self, i: u32) {
        debug_assert!(i >= 1 && i as usize <= self.d);
        let b = (i - 1) as usize;
        self.blocks[b / BITS] |= 1 << (b % BITS);
    }

    pub fn contains(&self, i: u32) -> bool {
        if i < 1 || i as usize > self.d {
            return false;
        }
        let b = (i - 1) as usize;
        self.blocks[b / BITS] & (1 << (b % BITS)) != 0
    }

    pub fn len(&self) -> usize {
        self.blocks.iter().map(|b| b.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.iter().all(|&b| b == 0)
    }

    pub fn intersection_len(&self, other: &CoordSet) -> usize {
        debug_assert_eq!(self.d, other.d);
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    /// `self \ other`.
    pub fn difference(&self, other: &CoordSet) -> CoordSet {
        debug_assert_eq!(self.d, other.d);
        CoordSet {
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a & !b)
                .collect(),
            d: self.d,
        }
    }

    pub fn union_assign(&mut self, other: &CoordSet) {
        debug_assert_eq!(self.d, other.d);
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            *a |= b;
        }
    }

    pub fn copy_from(&mut self, other: &CoordSet) {
        debug_assert_eq!(self.d, other.d);
        self.blocks.copy_from_slice(&other.blocks);
    }

    pub fn is_disjoint(&self, other: &CoordSet) -> bool {
        self.intersection_len(other) == 0
    }

    pub fn is_subset_of(&self, other: &CoordSet) -> bool {
        debug_assert_eq!(self.d, other.d);
        self.blocks.iter().zip(&other.blocks).all(|(a, b)| a & !b == 0)
    }

    /// `[1, d] \ self`.
    pub fn complement(&self) -> CoordSet {
        let mut blocks: Vec<u64> = self.blocks.iter().map(|b| !b).collect();
        let tail = self.d % BITS;
        if tail != 0 {
            if let Some(last) = blocks.last_mut() {
                *last &= (1u64 << tail) - 1;
            }
        }
        CoordSet { blocks, d: self.d }
    }

    /// Sorted 1-based indices.
    pub fn indices(&self) -> Vec<u32> {
        self.iter().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.blocks.iter().enumerate().flat_map(|(bi, &block)| {
            let mut b = block;
            std::iter::from_fn(move || {
                if b == 0 {
                    return None;
                }
                let t = b.trailing_zeros();
                b &= b - 1;
                Some((bi * BITS) as u32 + t + 1)
            })
        })
    }
}
