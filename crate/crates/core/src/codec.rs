//! Rate-1/2 convolutional code with generators (7, 5) octal, memory 2.
//!
//! At step `k` the encoder state is `(b[k-1], b[k-2])` and it emits
//!
//! ```text
//! c[2k]   = 2 * (b[k] ^ b[k-1] ^ b[k-2]) - 1
//! c[2k+1] = 2 * (b[k] ^ b[k-2]) - 1
//! ```
//!
//! starting from the all-zero state. The trellis is not terminated, so a
//! `K`-bit message maps to exactly `2K` symbols in `{-1, +1}`.

use std::fmt;

use crate::channel::ReceivedSignal;
use crate::error::{Error, Result};

/// Default message length used throughout the benchmark.
pub const DEFAULT_K: usize = 10;

/// Largest message length accepted by [`brute_force_ml`].
pub const MAX_ENUMERATION_K: usize = 14;

/// A binary message `b ∈ {0,1}^K`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MessageBits(Vec<u8>);

impl MessageBits {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::InvalidMessage("message must contain at least one bit".into()));
        }
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidMessage(format!("bit value {b} is not 0 or 1")));
        }
        Ok(Self(bits))
    }

    pub fn zeros(k: usize) -> Result<Self> {
        Self::new(vec![0; k])
    }

    /// Message whose bit `i` is bit `i` (LSB first) of `value`.
    pub fn from_index(value: u64, k: usize) -> Result<Self> {
        Self::new((0..k).map(|i| ((value >> i) & 1) as u8).collect())
    }

    /// Inverse of [`MessageBits::from_index`].
    pub fn to_index(&self) -> u64 {
        self.0.iter().enumerate().fold(0, |acc, (i, &b)| acc | (u64::from(b) << i))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn xor(&self, other: &Self) -> Result<Self> {
        check_len(self.len(), other.len())?;
        Ok(Self(self.0.iter().zip(&other.0).map(|(a, b)| a ^ b).collect()))
    }
}

impl fmt::Debug for MessageBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.0.iter().map(|&b| if b == 1 { '1' } else { '0' }).collect();
        write!(f, "MessageBits({s})")
    }
}

/// An encoded block `c ∈ {-1,+1}^{2K}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Codeword(Vec<i8>);

impl Codeword {
    pub fn new(symbols: Vec<i8>) -> Result<Self> {
        if symbols.is_empty() || symbols.len() % 2 != 0 {
            return Err(Error::InvalidSignal(format!(
                "codeword length {} is not a positive multiple of 2",
                symbols.len()
            )));
        }
        if symbols.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidSignal("codeword symbols must be ±1".into()));
        }
        Ok(Self(symbols))
    }

    pub fn symbols(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Message length `K` (half the codeword length).
    pub fn message_len(&self) -> usize {
        self.0.len() / 2
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&s| f64::from(s)).collect()
    }
}

/// Encoder state `(b[k-1], b[k-2])`, packed as `2*b[k-1] + b[k-2]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TrellisState(u8);

impl TrellisState {
    pub const COUNT: usize = 4;
    pub const ZERO: TrellisState = TrellisState(0);

    pub fn new(prev: u8, prev2: u8) -> Self {
        Self(((prev & 1) << 1) | (prev2 & 1))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn from_index(i: usize) -> Self {
        assert!(i < Self::COUNT, "trellis state index {i} out of range");
        Self(i as u8)
    }

    pub fn prev(self) -> u8 {
        self.0 >> 1
    }

    pub fn prev2(self) -> u8 {
        self.0 & 1
    }

    /// Output symbol pair and next state for input bit `u`.
    pub fn step(self, u: u8) -> ([i8; 2], TrellisState) {
        let (b1, b2) = (self.prev(), self.prev2());
        let p0 = u ^ b1 ^ b2;
        let p1 = u ^ b2;
        ([to_symbol(p0), to_symbol(p1)], TrellisState::new(u, b1))
    }
}

fn to_symbol(bit: u8) -> i8 {
    2 * bit as i8 - 1
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::LengthMismatch { expected, actual });
    }
    Ok(())
}

pub fn conv_encode(msg: &MessageBits) -> Codeword {
    let mut out = Vec::with_capacity(2 * msg.len());
    let mut state = TrellisState::ZERO;
    for &u in msg.bits() {
        let (pair, next) = state.step(u);
        out.extend_from_slice(&pair);
        state = next;
    }
    Codeword(out)
}

/// Soft-decision Viterbi decoding with squared-Euclidean branch metrics.
///
/// Ties are broken towards the smaller state index: on a merge the
/// predecessor with `b[k-2] = 0` wins, and at the end the survivor whose most
/// recent input bit is 0 wins.
pub fn viterbi_decode(y: &ReceivedSignal) -> Result<MessageBits> {
    let v = y.values();
    if v.is_empty() || v.len() % 2 != 0 {
        return Err(Error::InvalidSignal(format!(
            "received length {} is not a positive multiple of 2",
            v.len()
        )));
    }
    let k = v.len() / 2;
    const S: usize = TrellisState::COUNT;
    let mut metric = [f64::INFINITY; S];
    metric[0] = 0.0;
    // survivor[t][s] = predecessor state of s at step t
    let mut survivor = vec![[0u8; S]; k];

    for t in 0..k {
        let (y0, y1) = (v[2 * t], v[2 * t + 1]);
        let mut next = [f64::INFINITY; S];
        for from in 0..S {
            if !metric[from].is_finite() {
                continue;
            }
            let st = TrellisState::from_index(from);
            for u in 0..2u8 {
                let ([c0, c1], to) = st.step(u);
                let d0 = y0 - f64::from(c0);
                let d1 = y1 - f64::from(c1);
                let m = metric[from] + d0 * d0 + d1 * d1;
                // strict comparison keeps the lower-index predecessor on ties
                if m < next[to.index()] {
                    next[to.index()] = m;
                    survivor[t][to.index()] = from as u8;
                }
            }
        }
        metric = next;
    }

    let mut best = 0;
    for s in 1..S {
        if metric[s] < metric[best] {
            best = s;
        }
    }
    let mut bits = vec![0u8; k];
    let mut state = best;
    for t in (0..k).rev() {
        bits[t] = TrellisState::from_index(state).prev();
        state = survivor[t][state] as usize;
    }
    MessageBits::new(bits)
}

/// Squared Euclidean distance between a received block and a codeword.
pub fn squared_distance(y: &ReceivedSignal, c: &Codeword) -> f64 {
    y.values()
        .iter()
        .zip(c.symbols())
        .map(|(&a, &s)| {
            let d = a - f64::from(s);
            d * d
        })
        .sum()
}

/// Exhaustive maximum-likelihood decoding: the message minimizing
/// `‖y - encode(b)‖²`, lexicographically smallest among ties.
pub fn brute_force_ml(y: &ReceivedSignal) -> Result<MessageBits> {
    let n = y.len();
    if n == 0 || n % 2 != 0 {
        return Err(Error::InvalidSignal(format!(
            "received length {n} is not a positive multiple of 2"
        )));
    }
    let k = n / 2;
    if k > MAX_ENUMERATION_K {
        return Err(Error::EnumerationTooLarge(k));
    }
    let mut best: Option<(f64, MessageBits)> = None;
    for idx in 0..(1u64 << k) {
        let msg = MessageBits::from_index(idx, k)?;
        let d = squared_distance(y, &conv_encode(&msg));
        best = match best {
            Some((bd, bm)) if bd < d || (bd == d && bm <= msg) => Some((bd, bm)),
            _ => Some((d, msg)),
        };
    }
    Ok(best.expect("at least one candidate").1)
}

/// Fraction of positions where `pred` and `truth` differ.
pub fn ber(pred: &MessageBits, truth: &MessageBits) -> Result<f64> {
    check_len(truth.len(), pred.len())?;
    let errors = pred.bits().iter().zip(truth.bits()).filter(|(a, b)| a != b).count();
    Ok(errors as f64 / truth.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn msg(bits: &[u8]) -> MessageBits {
        MessageBits::new(bits.to_vec()).unwrap()
    }

    fn signal(v: Vec<f64>) -> ReceivedSignal {
        ReceivedSignal::new(v).unwrap()
    }

    fn padded(prefix: &[u8], k: usize) -> MessageBits {
        let mut b = prefix.to_vec();
        b.resize(k, 0);
        msg(&b)
    }

    #[test]
    fn all_zero_message_encodes_to_all_minus_one() {
        let c = conv_encode(&MessageBits::zeros(10).unwrap());
        assert_eq!(c.symbols(), &[-1i8; 20][..]);
    }

    #[test]
    fn impulse_response_matches_hand_trace() {
        let c = conv_encode(&padded(&[1], 10));
        let mut expected = vec![1, 1, 1, -1, 1, 1];
        expected.extend(std::iter::repeat(-1).take(14));
        assert_eq!(c.symbols(), &expected[..]);
    }

    #[test]
    fn two_leading_ones_match_hand_trace() {
        let c = conv_encode(&padded(&[1, 1], 10));
        let mut expected = vec![1, 1, -1, 1, -1, 1, 1, 1];
        expected.extend(std::iter::repeat(-1).take(12));
        assert_eq!(c.symbols(), &expected[..]);
    }

    #[test]
    fn empty_message_rejected() {
        assert!(MessageBits::new(vec![]).is_err());
        assert!(MessageBits::new(vec![0, 2]).is_err());
    }

    #[test]
    fn viterbi_rejects_odd_length() {
        assert!(viterbi_decode(&signal(vec![1.0, -1.0, 1.0])).is_err());
    }

    #[test]
    fn viterbi_inverts_encoder_exhaustively() {
        for idx in 0..1024 {
            let b = MessageBits::from_index(idx, 10).unwrap();
            let y = signal(conv_encode(&b).to_f64());
            assert_eq!(viterbi_decode(&y).unwrap(), b);
        }
    }

    #[test]
    fn viterbi_survives_sign_preserving_noise() {
        let b = msg(&[1, 0, 1, 1, 0, 0, 1, 0, 1, 1]);
        let y: Vec<f64> = conv_encode(&b)
            .to_f64()
            .iter()
            .enumerate()
            .map(|(i, &c)| c * (0.2 + 0.07 * (i % 11) as f64))
            .collect();
        assert_eq!(viterbi_decode(&signal(y)).unwrap(), b);
    }

    #[test]
    fn brute_force_two_bit_enumeration() {
        // codewords: 00 -> [-1,-1,-1,-1], 10 -> [1,1,1,-1], 01 -> [-1,-1,1,1], 11 -> [1,1,-1,1]
        let y = signal(vec![1.0, 1.0, -1.0, 1.0]);
        assert_eq!(brute_force_ml(&y).unwrap(), msg(&[1, 1]));
    }

    #[test]
    fn brute_force_guard() {
        assert!(matches!(
            brute_force_ml(&signal(vec![0.0; 30])),
            Err(Error::EnumerationTooLarge(15))
        ));
    }

    #[test]
    fn brute_force_breaks_ties_lexicographically() {
        // y = 0 is equidistant from every codeword.
        assert_eq!(brute_force_ml(&signal(vec![0.0; 6])).unwrap(), msg(&[0, 0, 0]));
    }

    #[test]
    fn ber_examples() {
        let a = msg(&[0, 1, 0, 1, 1, 0, 0, 1, 1, 0]);
        let mut flipped = a.bits().to_vec();
        flipped[3] ^= 1;
        let comp: Vec<u8> = a.bits().iter().map(|b| b ^ 1).collect();
        assert_eq!(ber(&a, &a).unwrap(), 0.0);
        assert!((ber(&msg(&flipped), &a).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(ber(&msg(&comp), &a).unwrap(), 1.0);
        assert!(ber(&msg(&[1]), &a).is_err());
    }

    #[test]
    fn trellis_state_round_trip() {
        for i in 0..4 {
            let s = TrellisState::from_index(i);
            assert_eq!(TrellisState::new(s.prev(), s.prev2()), s);
        }
    }

    fn bits_strategy(k: usize) -> impl Strategy<Value = Vec<u8>> {
        proptest::collection::vec(0u8..2, k)
    }

    proptest! {
        #[test]
        fn encoder_is_linear_in_pm1_domain(a in bits_strategy(12), b in bits_strategy(12)) {
            let (a, b) = (msg(&a), msg(&b));
            let cx = conv_encode(&a.xor(&b).unwrap());
            let (ca, cb) = (conv_encode(&a), conv_encode(&b));
            for i in 0..cx.len() {
                prop_assert_eq!(-cx.symbols()[i], ca.symbols()[i] * cb.symbols()[i]);
            }
        }

        #[test]
        fn ber_is_symmetric(a in bits_strategy(10), b in bits_strategy(10)) {
            let (a, b) = (msg(&a), msg(&b));
            prop_assert_eq!(ber(&a, &b).unwrap(), ber(&b, &a).unwrap());
        }

        #[test]
        fn viterbi_agrees_with_brute_force(bits in bits_strategy(8), noise in proptest::collection::vec(-1.5f64..1.5, 16)) {
            let b = msg(&bits);
            let y: Vec<f64> = conv_encode(&b).to_f64().iter().zip(&noise).map(|(c, n)| c + n).collect();
            let y = signal(y);
            prop_assert_eq!(viterbi_decode(&y).unwrap(), brute_force_ml(&y).unwrap());
        }
    }
}
