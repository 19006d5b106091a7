//! Discrete-event engine: a clock, a priority queue of timed events and
//! labeled random streams.
//!
//! Events dequeue in non-decreasing fire time; equal times are served in
//! insertion order. Random streams are derived from `(label, master_seed)`
//! so that independent concerns (mobility, traffic, fading, MAC backoff)
//! never share generator state.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use rand::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::SimError;

/// Identifies who an event is addressed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Target {
    Global,
    Node(usize),
}

#[derive(Debug, Clone)]
pub struct SimEvent<P> {
    pub fire_time: f64,
    pub seq: u64,
    pub target: Target,
    pub payload: P,
}

/// Returned by [`Kernel::schedule`]; pass it to [`Kernel::cancel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EventHandle(u64);

struct Queued<P>(SimEvent<P>);

impl<P> PartialEq for Queued<P> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<P> Eq for Queued<P> {}

impl<P> PartialOrd for Queued<P> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<P> Ord for Queued<P> {
    // BinaryHeap is a max-heap, so invert.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .fire_time
            .total_cmp(&self.0.fire_time)
            .then_with(|| other.0.seq.cmp(&self.0.seq))
    }
}

pub struct Kernel<P> {
    now: f64,
    next_seq: u64,
    queue: BinaryHeap<Queued<P>>,
    cancelled: HashSet<u64>,
    processed: u64,
}

impl<P> Default for Kernel<P> {
    fn default() -> Self {
        Self::new()
    }
}

impl<P> Kernel<P> {
    pub fn new() -> Self {
        Kernel {
            now: 0.0,
            next_seq: 0,
            queue: BinaryHeap::new(),
            cancelled: HashSet::new(),
            processed: 0,
        }
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    /// Total events handed to a handler since construction.
    pub fn processed(&self) -> u64 {
        self.processed
    }

    pub fn pending(&self) -> usize {
        self.queue.len() - self.cancelled.len()
    }

    pub fn schedule(&mut self, fire_time: f64, target: Target, payload: P) -> Result<EventHandle, SimError> {
        if !(fire_time >= self.now) {
            return Err(SimError::Causality { at: fire_time, now: self.now });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(Queued(SimEvent { fire_time, seq, target, payload }));
        Ok(EventHandle(seq))
    }

    /// Schedules `delay` seconds after the current clock.
    pub fn schedule_in(&mut self, delay: f64, target: Target, payload: P) -> Result<EventHandle, SimError> {
        self.schedule(self.now + delay.max(0.0), target, payload)
    }

    /// Cancelling an event that already fired is a no-op.
    pub fn cancel(&mut self, handle: EventHandle) {
        if self.queue.iter().any(|q| q.0.seq == handle.0) {
            self.cancelled.insert(handle.0);
        }
    }

    fn pop_due(&mut self, t_end: f64) -> Option<SimEvent<P>> {
        loop {
            let head = self.queue.peek()?;
            if head.0.fire_time > t_end {
                return None;
            }
            let ev = self.queue.pop()?.0;
            if self.cancelled.remove(&ev.seq) {
                continue;
            }
            return Some(ev);
        }
    }

    /// Processes every event with `fire_time <= t_end` in order, then sets
    /// the clock to `t_end`. Returns the number of events processed.
    pub fn run_until<E, F>(&mut self, t_end: f64, mut handler: F) -> Result<u64, E>
    where
        F: FnMut(&mut Self, SimEvent<P>) -> Result<(), E>,
        E: From<SimError>,
    {
        if t_end < self.now {
            return Err(SimError::Causality { at: t_end, now: self.now }.into());
        }
        let mut count = 0;
        while let Some(ev) = self.pop_due(t_end) {
            debug_assert!(ev.fire_time >= self.now);
            self.now = ev.fire_time;
            self.processed += 1;
            count += 1;
            handler(self, ev)?;
        }
        self.now = t_end;
        Ok(count)
    }
}

/// 64-bit FNV-1a over the label bytes. Offset basis 0xcbf29ce484222325,
/// prime 0x100000001b3.
fn fnv1a64(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// SplitMix64 finalizer (Steele, Lea & Flood constants).
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A labeled xoshiro256++ stream.
///
/// The 64-bit stream seed is `splitmix64(master_seed) ^ fnv1a64(label)`,
/// expanded into the 256-bit xoshiro state by SplitMix64. Both steps are
/// fixed, so sequences are stable across runs and platforms.
#[derive(Debug, Clone)]
pub struct RngStream {
    label: String,
    seed: u64,
    state: Xoshiro256PlusPlus,
}

impl RngStream {
    pub fn new(label: &str, master_seed: u64) -> Self {
        let seed = splitmix64(master_seed) ^ fnv1a64(label);
        RngStream {
            label: label.to_owned(),
            seed,
            state: Xoshiro256PlusPlus::seed_from_u64(seed),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.state.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform integer in [0, n). `n` must be non-zero.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        // Lemire's multiply-shift; the bias is < n / 2^64.
        ((u128::from(self.state.next_u64()) * u128::from(n)) >> 64) as u64
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.state.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.state.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.state.fill_bytes(dst)
    }
}

/// Derives the stream for `label` under `master_seed`.
pub fn stream(label: &str, master_seed: u64) -> RngStream {
    RngStream::new(label, master_seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn drain(k: &mut Kernel<&'static str>, t_end: f64) -> Vec<&'static str> {
        let mut seen = Vec::new();
        k.run_until::<SimError, _>(t_end, |_, ev| {
            seen.push(ev.payload);
            Ok(())
        })
        .unwrap();
        seen
    }

    #[test]
    fn dequeues_at_fire_time() {
        let mut k = Kernel::new();
        k.schedule(5.0, Target::Global, "a").unwrap();
        let mut at = None;
        k.run_until::<SimError, _>(10.0, |k, _| {
            at = Some(k.now());
            Ok(())
        })
        .unwrap();
        assert_eq!(at, Some(5.0));
        assert_eq!(k.now(), 10.0);
    }

    #[test]
    fn ties_are_fifo() {
        let mut k = Kernel::new();
        k.schedule(5.0, Target::Global, "A").unwrap();
        k.schedule(5.0, Target::Global, "B").unwrap();
        k.schedule(1.0, Target::Node(3), "first").unwrap();
        assert_eq!(drain(&mut k, 6.0), vec!["first", "A", "B"]);
    }

    #[test]
    fn past_schedule_is_causality_error() {
        let mut k: Kernel<()> = Kernel::new();
        k.run_until::<SimError, _>(2.0, |_, _| Ok(())).unwrap();
        let err = k.schedule(1.0, Target::Global, ()).unwrap_err();
        assert!(matches!(err, SimError::Causality { .. }));
    }

    #[test]
    fn empty_run_advances_clock() {
        let mut k: Kernel<()> = Kernel::new();
        let n = k.run_until::<SimError, _>(200.0, |_, _| Ok(())).unwrap();
        assert_eq!(n, 0);
        assert_eq!(k.now(), 200.0);
    }

    #[test]
    fn horizon_cut() {
        let mut k = Kernel::new();
        for (t, p) in [(1.0, "1"), (2.0, "2"), (3.0, "3")] {
            k.schedule(t, Target::Global, p).unwrap();
        }
        assert_eq!(drain(&mut k, 2.0), vec!["1", "2"]);
        assert_eq!(k.now(), 2.0);
        assert_eq!(drain(&mut k, 5.0), vec!["3"]);
    }

    #[test]
    fn cancelled_events_never_fire() {
        let mut k = Kernel::new();
        let h = k.schedule(1.0, Target::Global, "x").unwrap();
        k.schedule(2.0, Target::Global, "y").unwrap();
        k.cancel(h);
        assert_eq!(k.pending(), 1);
        assert_eq!(drain(&mut k, 3.0), vec!["y"]);
    }

    #[test]
    fn handler_can_schedule_future_events() {
        let mut k = Kernel::new();
        k.schedule(0.0, Target::Global, 0u32).unwrap();
        let mut times = Vec::new();
        k.run_until::<SimError, _>(1.0, |k, ev| {
            times.push(k.now());
            if ev.payload < 4 {
                k.schedule_in(0.25, Target::Global, ev.payload + 1)?;
            }
            Ok(())
        })
        .unwrap();
        assert_eq!(times, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn streams_are_reproducible() {
        let mut a = stream("fading", 42);
        let mut b = stream("fading", 42);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn streams_separate_by_label_and_seed() {
        let first = |label: &str, seed| {
            let mut s = stream(label, seed);
            (0..16).map(|_| s.next_u64()).collect::<Vec<_>>()
        };
        assert_ne!(first("fading", 42), first("traffic", 42));
        assert_ne!(first("fading", 42), first("fading", 43));
    }

    #[test]
    fn draws_do_not_cross_streams() {
        let mut a = stream("mobility", 7);
        let mut other = stream("traffic", 7);
        let mut reference = stream("mobility", 7);
        for _ in 0..100 {
            other.next_u64();
            assert_eq!(a.next_u64(), reference.next_u64());
        }
    }

    #[test]
    fn uniform_range() {
        let mut s = stream("x", 1);
        for _ in 0..10_000 {
            let u = s.uniform();
            assert!((0.0..1.0).contains(&u));
            assert!(s.below(7) < 7);
        }
    }
}
