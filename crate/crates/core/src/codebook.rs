//! Random BPSK codebooks and their all-zero augmentation.
//!
//! A codebook maps a (message, key) pair to a length-`n` codeword. Messages
//! `0..base_messages` carry i.i.d. equiprobable `±amplitude` symbols; the
//! `zero_message_count` messages after them are the all-zero codeword under
//! every key. Codewords of seeded codebooks are a pure function of
//! `(seed, message, key)`: small codebooks are materialized at construction,
//! large ones are regenerated from their stream on every access.

use std::borrow::Cow;
use std::sync::Arc;

use rand::RngCore;

use crate::error::{domain, Error, Result};
use crate::params::{ChannelParams, CovertBudget, ScalingParams};
use crate::rng::{stream, Domain, Seed};

/// Default number of symbols kept in memory before switching to regeneration.
pub const DEFAULT_MATERIALIZE_LIMIT: usize = 1 << 24;

/// Largest number of base messages `build_lemma_code` will allocate on its own.
pub const DEFAULT_MESSAGE_CAP: u64 = 1 << 20;

const MAGIC: &[u8; 4] = b"CVCB";
const FORMAT_VERSION: u16 = 1;
/// Size of the serialized header in bytes.
pub const HEADER_LEN: usize = 56;

#[derive(Debug, Clone, PartialEq)]
enum Storage {
    /// Symbols laid out key-major: `((k * base + w) * n + i)`.
    Dense(Arc<[f64]>),
    Streamed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Origin {
    Seeded(Seed),
    Explicit,
}

/// Frozen codebook; cheap to clone and safe to share between threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    n: usize,
    base_messages: usize,
    zero_messages: usize,
    keys: usize,
    amplitude: f64,
    origin: Origin,
    storage: Storage,
}

fn fill_bpsk(seed: Seed, w: usize, k: usize, amplitude: f64, out: &mut [f64]) {
    let mut rng = stream(seed, Domain::Codeword, k as u64, w as u64);
    for chunk in out.chunks_mut(64) {
        let bits = rng.next_u64();
        for (i, x) in chunk.iter_mut().enumerate() {
            *x = if (bits >> i) & 1 == 1 { amplitude } else { -amplitude };
        }
    }
}

fn checked_symbols(n: usize, messages: usize, keys: usize) -> Result<usize> {
    n.checked_mul(messages)
        .and_then(|v| v.checked_mul(keys))
        .ok_or_else(|| Error::Capacity(format!("{n} x {messages} x {keys} symbols")))
}

impl Codebook {
    fn seeded(
        n: usize,
        messages: usize,
        keys: usize,
        amplitude: f64,
        seed: Seed,
        materialize_limit: usize,
    ) -> Result<Self> {
        if n == 0 || messages == 0 || keys == 0 {
            return Err(Error::InvalidCodebook(format!(
                "n = {n}, messages = {messages}, keys = {keys}; all must be positive"
            )));
        }
        let symbols = checked_symbols(n, messages, keys)?;
        let storage = if symbols <= materialize_limit {
            let mut data = vec![0.0; symbols];
            for k in 0..keys {
                for w in 0..messages {
                    let start = (k * messages + w) * n;
                    fill_bpsk(seed, w, k, amplitude, &mut data[start..start + n]);
                }
            }
            Storage::Dense(data.into())
        } else {
            Storage::Streamed
        };
        Ok(Self {
            n,
            base_messages: messages,
            zero_messages: 0,
            keys,
            amplitude,
            origin: Origin::Seeded(seed),
            storage,
        })
    }

    /// Random BPSK codebook, materializing at most `materialize_limit` symbols.
    pub fn generate_with_limit(
        n: usize,
        messages: usize,
        keys: usize,
        power: f64,
        seed: Seed,
        materialize_limit: usize,
    ) -> Result<Self> {
        if !(power > 0.0 && power.is_finite()) {
            return Err(domain("power", power, "0 < power < inf"));
        }
        Self::seeded(n, messages, keys, power.sqrt(), seed, materialize_limit)
    }

    /// Codebook whose every symbol is zero: the output law equals the noise.
    ///
    /// This is the zero-amplitude limit of a BPSK codebook and carries no
    /// augmented messages.
    pub fn silent(n: usize, messages: usize, keys: usize) -> Result<Self> {
        Self::seeded(n, messages, keys, 0.0, Seed(0), DEFAULT_MATERIALIZE_LIMIT)
    }

    /// Codebook from explicit codewords, indexed `by_key[k][w]`.
    ///
    /// Every symbol must be `±amplitude`. Explicit codebooks cannot be
    /// serialized since they are not regenerable from a seed.
    pub fn from_codewords(amplitude: f64, by_key: &[Vec<Vec<f64>>]) -> Result<Self> {
        let keys = by_key.len();
        let messages = by_key.first().map_or(0, Vec::len);
        let n = by_key.first().and_then(|c| c.first()).map_or(0, Vec::len);
        if keys == 0 || messages == 0 || n == 0 {
            return Err(Error::InvalidCodebook("empty codebook".into()));
        }
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(domain("amplitude", amplitude, "0 <= amplitude < inf"));
        }
        let mut data = Vec::with_capacity(checked_symbols(n, messages, keys)?);
        for (k, words) in by_key.iter().enumerate() {
            if words.len() != messages {
                return Err(Error::LengthMismatch {
                    expected: messages,
                    found: words.len(),
                });
            }
            for (w, x) in words.iter().enumerate() {
                if x.len() != n {
                    return Err(Error::LengthMismatch {
                        expected: n,
                        found: x.len(),
                    });
                }
                if let Some(bad) = x.iter().find(|v| v.abs() != amplitude) {
                    return Err(Error::InvalidCodebook(format!(
                        "symbol {bad} of codeword ({w}, {k}) is not ±{amplitude}"
                    )));
                }
                data.extend_from_slice(x);
            }
        }
        Ok(Self {
            n,
            base_messages: messages,
            zero_messages: 0,
            keys,
            amplitude,
            origin: Origin::Explicit,
            storage: Storage::Dense(data.into()),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Total message count, zero codewords included.
    pub fn num_messages(&self) -> usize {
        self.base_messages + self.zero_messages
    }

    /// Messages carrying BPSK codewords.
    pub fn base_messages(&self) -> usize {
        self.base_messages
    }

    pub fn zero_message_count(&self) -> usize {
        self.zero_messages
    }

    pub fn num_keys(&self) -> usize {
        self.keys
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// Symbol power of the BPSK codewords, `amplitude²`.
    pub fn power(&self) -> f64 {
        self.amplitude * self.amplitude
    }

    pub fn seed(&self) -> Option<Seed> {
        match self.origin {
            Origin::Seeded(s) => Some(s),
            Origin::Explicit => None,
        }
    }

    pub fn is_materialized(&self) -> bool {
        matches!(self.storage, Storage::Dense(_))
    }

    /// Number of (message, key) pairs, i.e. output-mixture components.
    pub fn components(&self) -> u64 {
        self.num_messages() as u64 * self.keys as u64
    }

    pub fn is_zero_message(&self, w: usize) -> bool {
        w >= self.base_messages
    }

    /// All BPSK codewords of key `k` as one contiguous slice, when materialized.
    pub(crate) fn key_block(&self, k: usize) -> Option<&[f64]> {
        match &self.storage {
            Storage::Dense(data) => {
                let len = self.base_messages * self.n;
                Some(&data[k * len..(k + 1) * len])
            }
            Storage::Streamed => None,
        }
    }

    /// Writes codeword `(w, k)` into `out`.
    ///
    /// Panics if `w`, `k` or `out.len()` are out of range.
    pub fn codeword_into(&self, w: usize, k: usize, out: &mut [f64]) {
        assert!(
            w < self.num_messages() && k < self.keys,
            "codeword ({w}, {k}) out of range"
        );
        assert_eq!(out.len(), self.n);
        if self.is_zero_message(w) {
            out.fill(0.0);
            return;
        }
        match (&self.storage, self.origin) {
            (Storage::Dense(data), _) => {
                let start = (k * self.base_messages + w) * self.n;
                out.copy_from_slice(&data[start..start + self.n]);
            }
            (Storage::Streamed, Origin::Seeded(seed)) => fill_bpsk(seed, w, k, self.amplitude, out),
            (Storage::Streamed, Origin::Explicit) => unreachable!("explicit codebooks are dense"),
        }
    }

    /// Codeword of message `w` under key `k`.
    pub fn codeword(&self, w: usize, k: usize) -> Cow<'_, [f64]> {
        if !self.is_zero_message(w) {
            if let Storage::Dense(data) = &self.storage {
                assert!(k < self.keys, "key {k} out of range");
                let start = (k * self.base_messages + w) * self.n;
                return Cow::Borrowed(&data[start..start + self.n]);
            }
        }
        let mut out = vec![0.0; self.n];
        self.codeword_into(w, k, &mut out);
        Cow::Owned(out)
    }

    /// Same codebook with the zero codewords dropped.
    pub fn base_code(&self) -> Codebook {
        Codebook {
            zero_messages: 0,
            ..self.clone()
        }
    }

    /// Appends `extra_messages` all-zero codewords, identical under every key.
    pub fn augment_with_zero_codewords(&self, extra_messages: usize) -> Result<Codebook> {
        if self.zero_messages > 0 {
            return Err(Error::AlreadyAugmented(self.zero_messages));
        }
        let total = self
            .base_messages
            .checked_add(extra_messages)
            .ok_or_else(|| Error::Capacity(format!("{} + {extra_messages} messages", self.base_messages)))?;
        checked_symbols(self.n, total, self.keys)?;
        Ok(Codebook {
            zero_messages: extra_messages,
            ..self.clone()
        })
    }

    /// Average symbol energy over all keys, messages and positions.
    ///
    /// Every BPSK symbol has energy `amplitude²` and every zero symbol none,
    /// so the average is `amplitude² · M / (M + M₀)`.
    pub fn average_power(&self) -> f64 {
        if self.zero_messages == 0 {
            self.power()
        } else {
            self.power() * self.base_messages as f64 / self.num_messages() as f64
        }
    }

    /// Serializes the header; codewords are regenerated from the seed on read.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let Origin::Seeded(seed) = self.origin else {
            return Err(Error::Format("explicit codebooks are not regenerable".into()));
        };
        let mut out = Vec::with_capacity(HEADER_LEN);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&0u16.to_le_bytes());
        for v in [self.n, self.num_messages(), self.keys] {
            out.extend_from_slice(&(v as u64).to_le_bytes());
        }
        out.extend_from_slice(&self.amplitude.to_bits().to_le_bytes());
        out.extend_from_slice(&(self.zero_messages as u64).to_le_bytes());
        out.extend_from_slice(&seed.0.to_le_bytes());
        debug_assert_eq!(out.len(), HEADER_LEN);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Self::from_bytes_with_limit(bytes, DEFAULT_MATERIALIZE_LIMIT)
    }

    pub fn from_bytes_with_limit(bytes: &[u8], materialize_limit: usize) -> Result<Self> {
        if bytes.len() != HEADER_LEN {
            return Err(Error::Format(format!(
                "expected {HEADER_LEN} bytes, got {}",
                bytes.len()
            )));
        }
        if &bytes[..4] != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let word = |i: usize| u64::from_le_bytes(bytes[8 + 8 * i..16 + 8 * i].try_into().unwrap());
        let to_usize = |v: u64| usize::try_from(v).map_err(|_| Error::Capacity(format!("{v}")));
        let n = to_usize(word(0))?;
        let total = to_usize(word(1))?;
        let keys = to_usize(word(2))?;
        let amplitude = f64::from_bits(word(3));
        let zero = to_usize(word(4))?;
        let seed = Seed(word(5));
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(Error::Format(format!("amplitude {amplitude}")));
        }
        if zero >= total {
            return Err(Error::Format(format!("{zero} zero messages out of {total}")));
        }
        let base = Self::seeded(n, total - zero, keys, amplitude, seed, materialize_limit)?;
        if zero == 0 {
            Ok(base)
        } else {
            base.augment_with_zero_codewords(zero)
        }
    }
}

/// Random BPSK codebook with `messages × keys` codewords of power `power`.
pub fn generate_bpsk_codebook(n: usize, messages: usize, keys: usize, power: f64, seed: Seed) -> Result<Codebook> {
    Codebook::generate_with_limit(n, messages, keys, power, seed, DEFAULT_MATERIALIZE_LIMIT)
}

pub fn augment_with_zero_codewords(base: &Codebook, extra_messages: usize) -> Result<Codebook> {
    base.augment_with_zero_codewords(extra_messages)
}

/// How many base messages `build_lemma_code` uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LemmaOptions {
    /// Fixed base message count; bypasses the size target (desk-scale runs).
    pub messages: Option<u64>,
    /// Refuse a size target above this many base messages.
    pub message_cap: u64,
}

impl Default for LemmaOptions {
    fn default() -> Self {
        Self {
            messages: None,
            message_cap: DEFAULT_MESSAGE_CAP,
        }
    }
}

impl LemmaOptions {
    pub fn with_messages(messages: u64) -> Self {
        Self {
            messages: Some(messages),
            ..Self::default()
        }
    }
}

/// Base BPSK code at power `P` plus `⌊α M⌋` zero codewords.
pub fn build_lemma_code(
    n: u64,
    budget: CovertBudget,
    channel: ChannelParams,
    keys: usize,
    seed: Seed,
    options: LemmaOptions,
) -> Result<(Codebook, ScalingParams)> {
    let params = ScalingParams::evaluate(n, budget, channel)?;
    let messages = match options.messages {
        Some(m) => m,
        None => {
            if params.log_m_target <= 0.0 {
                return Err(Error::DegenerateSize {
                    n,
                    log_m_target: params.log_m_target,
                });
            }
            if params.log_m_target > (options.message_cap as f64 + 1.0).ln() {
                return Err(Error::InfeasibleSize {
                    log_m_target: params.log_m_target,
                    cap: options.message_cap,
                });
            }
            params.log_m_target.exp().floor() as u64
        }
    };
    if messages == 0 {
        return Err(Error::InvalidCodebook("base code needs at least one message".into()));
    }
    let n_usize = usize::try_from(n).map_err(|_| Error::Capacity(format!("n = {n}")))?;
    let m_usize = usize::try_from(messages).map_err(|_| Error::Capacity(format!("M = {messages}")))?;
    let zeros =
        usize::try_from(params.zero_codewords(messages)).map_err(|_| Error::Capacity("zero codewords".into()))?;
    let base = generate_bpsk_codebook(n_usize, m_usize, keys, params.power, seed)?;
    Ok((base.augment_with_zero_codewords(zeros)?, params))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn symbols(cb: &Codebook) -> Vec<f64> {
        let mut all = Vec::new();
        for k in 0..cb.num_keys() {
            for w in 0..cb.num_messages() {
                all.extend_from_slice(&cb.codeword(w, k));
            }
        }
        all
    }

    #[test]
    fn symbols_are_bpsk() {
        let cb = generate_bpsk_codebook(4, 2, 1, 1.0, Seed(3)).unwrap();
        let s = symbols(&cb);
        assert_eq!(s.len(), 8);
        assert!(s.iter().all(|&x| x == 1.0 || x == -1.0));
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_bpsk_codebook(100, 7, 3, 0.3, Seed(11)).unwrap();
        let b = generate_bpsk_codebook(100, 7, 3, 0.3, Seed(11)).unwrap();
        assert_eq!(a, b);
        assert_eq!(symbols(&a), symbols(&b));
        let c = generate_bpsk_codebook(100, 7, 3, 0.3, Seed(12)).unwrap();
        assert_ne!(symbols(&a), symbols(&c));
    }

    #[test]
    fn streamed_matches_materialized() {
        let dense = Codebook::generate_with_limit(130, 5, 2, 0.5, Seed(9), usize::MAX).unwrap();
        let lazy = Codebook::generate_with_limit(130, 5, 2, 0.5, Seed(9), 0).unwrap();
        assert!(dense.is_materialized() && !lazy.is_materialized());
        assert_eq!(symbols(&dense), symbols(&lazy));
    }

    #[test]
    fn sign_balance() {
        let cb = generate_bpsk_codebook(64, 256, 4, 1.0, Seed(2024)).unwrap();
        let s = symbols(&cb);
        let frac = s.iter().filter(|&&x| x > 0.0).count() as f64 / s.len() as f64;
        assert!((frac - 0.5).abs() <= 3.0 * (0.25f64 / 65536.0).sqrt(), "{frac}");
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(generate_bpsk_codebook(0, 1, 1, 1.0, Seed(0)).is_err());
        assert!(generate_bpsk_codebook(1, 1, 1, 0.0, Seed(0)).is_err());
        assert!(matches!(
            generate_bpsk_codebook(usize::MAX / 2, 4, 1, 1.0, Seed(0)),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn augmentation_counts() {
        let base = generate_bpsk_codebook(8, 10, 2, 1.0, Seed(1)).unwrap();
        let aug = augment_with_zero_codewords(&base, 8).unwrap();
        assert_eq!(aug.num_messages(), 18);
        assert_eq!(aug.zero_message_count(), 8);
        for k in 0..2 {
            for w in 0..10 {
                assert_eq!(aug.codeword(w, k), base.codeword(w, k));
            }
            for w in 10..18 {
                assert!(aug.codeword(w, k).iter().all(|&x| x == 0.0));
            }
        }
        assert_eq!(augment_with_zero_codewords(&base, 0).unwrap(), base);
        assert!(matches!(
            aug.augment_with_zero_codewords(1),
            Err(Error::AlreadyAugmented(8))
        ));
        assert_eq!(aug.base_code(), base);
    }

    #[test]
    fn augmentation_reaches_target_size() {
        let budget = CovertBudget::new(0.5, 0.01).unwrap();
        let ch = ChannelParams::new(1.0).unwrap();
        let params = ScalingParams::evaluate(1_000_000, budget, ch).unwrap();
        let base = Codebook::generate_with_limit(8, 1000, 1, 1.0, Seed(0), 0).unwrap();
        let aug = base
            .augment_with_zero_codewords(params.zero_codewords(1000) as usize)
            .unwrap();
        let target = 1000.0 * (1.0 - params.epsilon_prime) / (1.0 - 0.5);
        assert_eq!(aug.num_messages(), 1800);
        assert!((aug.num_messages() as f64 - target).abs() < 1e-9);
    }

    #[test]
    fn average_power_matches_direct_sum() {
        let base = Codebook::from_codewords(
            0.5,
            &[vec![
                vec![0.5, -0.5, 0.5],
                vec![-0.5, -0.5, 0.5],
                vec![0.5, 0.5, 0.5],
                vec![-0.5, 0.5, -0.5],
            ]],
        )
        .unwrap();
        assert_eq!(base.average_power(), 0.25);
        let aug = base.augment_with_zero_codewords(3).unwrap();
        let direct: f64 = symbols(&aug).iter().map(|x| x * x).sum::<f64>() / (3.0 * 7.0);
        assert!((aug.average_power() - direct).abs() < 1e-16);
        assert!((aug.average_power() - 0.25 * 4.0 / 7.0).abs() < 1e-16);
    }

    #[test]
    fn lemma_code_shape() {
        let budget = CovertBudget::new(0.5, 0.01).unwrap();
        let ch = ChannelParams::new(1.0).unwrap();
        let (cb, params) =
            build_lemma_code(1_000_000, budget, ch, 1, Seed(5), LemmaOptions::with_messages(100)).unwrap();
        assert_eq!(cb.base_messages(), 100);
        assert_eq!(cb.zero_message_count(), 80);
        assert!(!cb.is_materialized());
        assert_eq!(cb.power(), params.power.sqrt().powi(2));

        let again = build_lemma_code(1_000_000, budget, ch, 1, Seed(5), LemmaOptions::with_messages(100)).unwrap();
        assert_eq!(cb, again.0);

        let err = build_lemma_code(1_000_000, budget, ch, 1, Seed(5), LemmaOptions::default()).unwrap_err();
        assert!(matches!(err, Error::InfeasibleSize { .. }));

        let out_of_regime = CovertBudget::new(0.1, 0.01).unwrap();
        assert!(matches!(
            build_lemma_code(1_000_000, out_of_regime, ch, 1, Seed(5), LemmaOptions::with_messages(4)),
            Err(Error::NotInRegime { .. })
        ));
        assert!(matches!(
            build_lemma_code(
                1024,
                CovertBudget::new(0.5, 0.05).unwrap(),
                ch,
                1,
                Seed(5),
                LemmaOptions::default()
            ),
            Err(Error::DegenerateSize { .. })
        ));
    }

    #[test]
    fn lemma_code_power_within_budget() {
        let budget = CovertBudget::new(0.5, 0.01).unwrap();
        let ch = ChannelParams::new(1.0).unwrap();
        let (cb, params) = build_lemma_code(10_000, budget, ch, 2, Seed(1), LemmaOptions::with_messages(50)).unwrap();
        assert!(cb.average_power() <= params.power_budget);
    }

    #[test]
    fn header_round_trip() {
        let cb = generate_bpsk_codebook(33, 6, 2, 0.7, Seed(u64::MAX))
            .unwrap()
            .augment_with_zero_codewords(4)
            .unwrap();
        let bytes = cb.to_bytes().unwrap();
        assert_eq!(bytes.len(), HEADER_LEN);
        let back = Codebook::from_bytes(&bytes).unwrap();
        assert_eq!(back, cb);
        assert_eq!(back.to_bytes().unwrap(), bytes);

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(Codebook::from_bytes(&bad).is_err());
        assert!(Codebook::from_bytes(&bytes[..40]).is_err());
        let explicit = Codebook::from_codewords(1.0, &[vec![vec![1.0]]]).unwrap();
        assert!(explicit.to_bytes().is_err());
    }

    #[test]
    fn explicit_codebook_validation() {
        assert!(Codebook::from_codewords(1.0, &[vec![vec![1.0, 0.5]]]).is_err());
        assert!(Codebook::from_codewords(1.0, &[vec![vec![1.0, 1.0], vec![1.0]]]).is_err());
        assert!(Codebook::from_codewords(1.0, &[]).is_err());
    }

    #[test]
    fn silent_codebook_is_zero() {
        let cb = Codebook::silent(5, 3, 2).unwrap();
        assert!(symbols(&cb).iter().all(|&x| x == 0.0));
        assert_eq!(cb.average_power(), 0.0);
        let back = Codebook::from_bytes(&cb.to_bytes().unwrap()).unwrap();
        assert_eq!(back, cb);
    }
}
