//! Seeded lossy datagram link.
//!
//! Every sent datagram consumes exactly two draws from the channel RNG (loss,
//! then jitter) whether or not it survives, so a trace depends only on the
//! configuration, seed and send schedule.

use super::{DatagramChannel, TransportError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::cmp::Reverse;
use std::collections::BinaryHeap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelConfig {
    pub loss_probability: f64,
    pub mean_latency_micros: u64,
    /// Latency varies uniformly within `±jitter_micros`.
    pub jitter_micros: u64,
    pub reordering_allowed: bool,
    pub seed: u64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            loss_probability: 0.0,
            mean_latency_micros: 20_000,
            jitter_micros: 2_000,
            reordering_allowed: true,
            seed: 0,
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<(), TransportError> {
        if !(0.0..=1.0).contains(&self.loss_probability) {
            return Err(TransportError::InvalidConfig(format!(
                "loss probability {} outside [0, 1]",
                self.loss_probability
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub sent: u64,
    pub dropped: u64,
    pub delivered: u64,
}

impl ChannelStats {
    pub fn in_flight(&self) -> u64 {
        self.sent - self.dropped - self.delivered
    }
}

/// One delivered datagram with its schedule, for trace comparison.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Delivery {
    pub sequence: u64,
    pub sent_at: u64,
    pub delivered_at: u64,
    pub datagram: Vec<u8>,
}

#[derive(Debug)]
struct InFlight {
    sent_at: u64,
    datagram: Vec<u8>,
}

#[derive(Debug)]
pub struct SimChannel {
    config: ChannelConfig,
    rng: ChaCha8Rng,
    queue: BinaryHeap<Reverse<(u64, u64)>>,
    slots: std::collections::HashMap<u64, InFlight>,
    next_sequence: u64,
    latest_scheduled: u64,
    clock: u64,
    stats: ChannelStats,
}

impl SimChannel {
    pub fn new(config: ChannelConfig) -> Result<Self, TransportError> {
        config.validate()?;
        Ok(SimChannel {
            config,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            queue: BinaryHeap::new(),
            slots: Default::default(),
            next_sequence: 0,
            latest_scheduled: 0,
            clock: 0,
            stats: ChannelStats::default(),
        })
    }

    pub fn config(&self) -> &ChannelConfig {
        &self.config
    }

    pub fn stats(&self) -> ChannelStats {
        self.stats
    }

    fn advance(&mut self, now: u64) -> Result<(), TransportError> {
        if now < self.clock {
            return Err(TransportError::TimeWentBackwards { now, clock: self.clock });
        }
        self.clock = now;
        Ok(())
    }

    pub fn send_datagram(&mut self, datagram: Vec<u8>, now: u64) -> Result<(), TransportError> {
        self.advance(now)?;
        let sequence = self.next_sequence;
        self.next_sequence += 1;
        self.stats.sent += 1;
        let lost = self.rng.random::<f64>() < self.config.loss_probability;
        let j = self.config.jitter_micros as i64;
        let jitter = self.rng.random_range(-j..=j);
        if lost {
            self.stats.dropped += 1;
            return Ok(());
        }
        let latency = (self.config.mean_latency_micros as i64 + jitter).max(0) as u64;
        let mut at = now + latency;
        if !self.config.reordering_allowed {
            at = at.max(self.latest_scheduled);
        }
        self.latest_scheduled = self.latest_scheduled.max(at);
        self.queue.push(Reverse((at, sequence)));
        self.slots.insert(sequence, InFlight { sent_at: now, datagram });
        Ok(())
    }

    /// Everything due at or before `now`, in delivery order.
    pub fn poll_deliveries(&mut self, now: u64) -> Result<Vec<Delivery>, TransportError> {
        self.advance(now)?;
        let mut out = Vec::new();
        while let Some(&Reverse((at, sequence))) = self.queue.peek() {
            if at > now {
                break;
            }
            self.queue.pop();
            let slot = self.slots.remove(&sequence).expect("queued datagram has a slot");
            self.stats.delivered += 1;
            out.push(Delivery {
                sequence,
                sent_at: slot.sent_at,
                delivered_at: at,
                datagram: slot.datagram,
            });
        }
        Ok(out)
    }

    /// Time of the next pending delivery, if any.
    pub fn next_delivery_at(&self) -> Option<u64> {
        self.queue.peek().map(|Reverse((at, _))| *at)
    }
}

impl DatagramChannel for SimChannel {
    fn send(&mut self, datagram: &[u8], now_micros: u64) -> Result<(), TransportError> {
        self.send_datagram(datagram.to_vec(), now_micros)
    }

    fn poll(&mut self, now_micros: u64) -> Result<Vec<Vec<u8>>, TransportError> {
        Ok(self
            .poll_deliveries(now_micros)?
            .into_iter()
            .map(|d| d.datagram)
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(loss: f64, jitter: u64, reorder: bool) -> ChannelConfig {
        ChannelConfig {
            loss_probability: loss,
            mean_latency_micros: 1000,
            jitter_micros: jitter,
            reordering_allowed: reorder,
            seed: 42,
        }
    }

    fn run(config: ChannelConfig, count: u64) -> Vec<Delivery> {
        let mut ch = SimChannel::new(config).unwrap();
        for i in 0..count {
            ch.send_datagram(i.to_le_bytes().to_vec(), i * 100).unwrap();
        }
        ch.poll_deliveries(u64::MAX).unwrap()
    }

    #[test]
    fn lossless_fixed_latency_is_fifo() {
        let out = run(cfg(0.0, 0, true), 50);
        assert_eq!(out.len(), 50);
        for (i, d) in out.iter().enumerate() {
            assert_eq!(d.sequence, i as u64);
            assert_eq!(d.delivered_at, d.sent_at + 1000);
        }
    }

    #[test]
    fn total_loss_delivers_nothing() {
        let mut ch = SimChannel::new(cfg(1.0, 10, true)).unwrap();
        for i in 0..100 {
            ch.send(&[1, 2, 3], i).unwrap();
        }
        assert!(ch.poll(u64::MAX).unwrap().is_empty());
        assert_eq!(ch.stats(), ChannelStats { sent: 100, dropped: 100, delivered: 0 });
    }

    #[test]
    fn binomial_loss_rate() {
        let out = run(cfg(0.2, 0, true), 10_000);
        // mean 8000, sigma 40
        assert!((out.len() as i64 - 8000).abs() <= 120, "{}", out.len());
    }

    #[test]
    fn no_reordering_preserves_send_order() {
        let out = run(cfg(0.1, 900, false), 2000);
        assert!(out.windows(2).all(|w| w[0].sequence < w[1].sequence));
        assert!(out.iter().all(|d| d.delivered_at >= d.sent_at));
    }

    #[test]
    fn jitter_with_reordering_does_reorder() {
        let out = run(cfg(0.0, 900, true), 2000);
        assert!(out.windows(2).any(|w| w[0].sequence > w[1].sequence));
        assert!(out.iter().all(|d| d.delivered_at >= d.sent_at));
    }

    #[test]
    fn traces_are_deterministic() {
        assert_eq!(run(cfg(0.3, 700, true), 3000), run(cfg(0.3, 700, true), 3000));
        let mut other = cfg(0.3, 700, true);
        other.seed = 43;
        assert_ne!(run(cfg(0.3, 700, true), 3000), run(other, 3000));
    }

    #[test]
    fn poll_respects_time_and_monotonicity() {
        let mut ch = SimChannel::new(cfg(0.0, 0, true)).unwrap();
        ch.send(&[9], 0).unwrap();
        assert!(ch.poll(999).unwrap().is_empty());
        assert_eq!(ch.next_delivery_at(), Some(1000));
        assert_eq!(ch.poll(1000).unwrap(), vec![vec![9]]);
        assert!(matches!(ch.poll(10), Err(TransportError::TimeWentBackwards { .. })));
    }

    #[test]
    fn invalid_probability_is_rejected() {
        assert!(SimChannel::new(cfg(1.5, 0, true)).is_err());
    }
}
