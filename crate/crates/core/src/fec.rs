//! Constraint-length 7 convolutional codes with a soft-input Viterbi
//! decoder, plus the bit interleaver applied per codeblock.
//!
//! Encoders start in the all-zero state and are terminated with six zero
//! tail bits. LLRs follow the demapper convention: positive favours 0.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

const MEMORY: usize = 6;
const STATES: usize = 1 << MEMORY;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Code {
    None,
    /// Rate 1/2, generators 133 and 171 (octal).
    ConvR12,
    /// Rate 1/3, generators 133, 171 and 165 (octal).
    ConvR13,
}

impl Code {
    pub fn name(&self) -> &'static str {
        match self {
            Code::None => "none",
            Code::ConvR12 => "conv-r12",
            Code::ConvR13 => "conv-r13",
        }
    }

    fn generators(&self) -> &'static [u32] {
        match self {
            Code::None => &[],
            Code::ConvR12 => &[0o133, 0o171],
            Code::ConvR13 => &[0o133, 0o171, 0o165],
        }
    }

    /// Nominal rate ignoring the tail.
    pub fn rate(&self) -> f64 {
        match self {
            Code::None => 1.0,
            Code::ConvR12 => 0.5,
            Code::ConvR13 => 1.0 / 3.0,
        }
    }

    /// Coded bits per information bit.
    pub fn outputs(&self) -> usize {
        match self {
            Code::None => 1,
            _ => self.generators().len(),
        }
    }

    /// Coded length for `info_bits` information bits, tail included.
    pub fn coded_len(&self, info_bits: usize) -> usize {
        match self {
            Code::None => info_bits,
            _ => (info_bits + MEMORY) * self.outputs(),
        }
    }

    /// Largest information block whose codeword fits in `coded_bits`.
    pub fn max_info_bits(&self, coded_bits: usize) -> usize {
        match self {
            Code::None => coded_bits,
            _ => (coded_bits / self.outputs()).saturating_sub(MEMORY),
        }
    }

    pub fn encode(&self, bits: &[u8]) -> Result<Vec<u8>> {
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::invalid("bits must be 0 or 1"));
        }
        if *self == Code::None {
            return Ok(bits.to_vec());
        }
        let gens = self.generators();
        let mut out = Vec::with_capacity(self.coded_len(bits.len()));
        let mut state = 0u32;
        for &b in bits.iter().chain(core::iter::repeat(&0u8).take(MEMORY)) {
            let reg = ((b as u32) << MEMORY) | state;
            for g in gens {
                out.push(((reg & g).count_ones() & 1) as u8);
            }
            state = reg >> 1;
        }
        Ok(out)
    }

    /// Maximum-likelihood sequence decoding of a terminated codeword.
    pub fn decode(&self, llrs: &[f64]) -> Result<Vec<u8>> {
        if *self == Code::None {
            return Ok(llrs.iter().map(|&l| (l < 0.0) as u8).collect());
        }
        let k = self.outputs();
        if llrs.len() % k != 0 || llrs.len() < MEMORY * k {
            return Err(Error::invalid(format!(
                "{} LLRs do not form a terminated {} codeword",
                llrs.len(),
                self.name()
            )));
        }
        let steps = llrs.len() / k;
        let gens = self.generators();
        // branch outputs for every 7-bit register value
        let outputs: Vec<u32> = (0..(STATES as u32) << 1)
            .map(|reg| {
                gens.iter()
                    .enumerate()
                    .fold(0, |acc, (i, g)| acc | (((reg & g).count_ones() & 1) << i))
            })
            .collect();
        let mut metric = [f64::NEG_INFINITY; STATES];
        metric[0] = 0.0;
        let mut next = [0.0f64; STATES];
        let mut decisions = vec![0u64; steps];
        let mut corr = vec![0.0f64; 1 << k];
        for (step, chunk) in llrs.chunks_exact(k).enumerate() {
            // correlation of every output pattern with the soft inputs
            for (pat, c) in corr.iter_mut().enumerate() {
                *c = chunk
                    .iter()
                    .enumerate()
                    .map(|(i, &l)| if (pat >> i) & 1 == 0 { l } else { -l })
                    .sum::<f64>();
            }
            let mut dec = 0u64;
            for (s, nm) in next.iter_mut().enumerate() {
                let input = (s >> (MEMORY - 1)) as u32 & 1;
                // predecessors share the upper five bits of s
                let base = ((s as u32) << 1) & (STATES as u32 - 1);
                let (p0, p1) = (base, base | 1);
                let r0 = (input << MEMORY) | p0;
                let r1 = (input << MEMORY) | p1;
                let m0 = metric[p0 as usize] + corr[outputs[r0 as usize] as usize];
                let m1 = metric[p1 as usize] + corr[outputs[r1 as usize] as usize];
                if m1 > m0 {
                    *nm = m1;
                    dec |= 1 << s;
                } else {
                    *nm = m0;
                }
            }
            metric = next;
            decisions[step] = dec;
        }
        let mut state = 0usize;
        let mut bits = vec![0u8; steps];
        for step in (0..steps).rev() {
            bits[step] = (state >> (MEMORY - 1)) as u8 & 1;
            let lsb = (decisions[step] >> state) & 1;
            state = ((state << 1) & (STATES - 1)) | lsb as usize;
        }
        bits.truncate(steps - MEMORY);
        Ok(bits)
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Code {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Code::None),
            "conv-r12" => Ok(Code::ConvR12),
            "conv-r13" => Ok(Code::ConvR13),
            _ => Err(Error::invalid(format!("unknown code `{s}` (expected none, conv-r12 or conv-r13)"))),
        }
    }
}

/// Pseudo-random permutation of `len` positions, fixed by `len`.
/// Coded bit `i` is sent at position `perm[i]`.
pub fn interleaver(len: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1D_5EED ^ len as u64);
    let mut perm: Vec<usize> = (0..len).collect();
    for i in (1..len).rev() {
        let j = rng.random_range(0..=i);
        perm.swap(i, j);
    }
    perm
}
