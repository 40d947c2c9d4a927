//! Per-edge exponential meeting clocks.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;

use super::EngineError;
use crate::graph::{ContactGraph, NodeId};

/// `now + Exp(w)`, strictly after `now`.
pub fn next_meeting_time<R: Rng + ?Sized>(now: f64, w: f64, rng: &mut R) -> Result<f64, EngineError> {
    if !(w > 0.0 && w.is_finite()) {
        return Err(EngineError::InvalidRate(w));
    }
    loop {
        let u: f64 = rng.random();
        let t = now + -(1.0 - u).ln() / w;
        if t > now {
            return Ok(t);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeetingEvent {
    pub time: f64,
    pub u: NodeId,
    pub v: NodeId,
    pub edge: usize,
}

impl Eq for MeetingEvent {}

impl Ord for MeetingEvent {
    // reversed so the std max-heap pops the earliest event
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.u.cmp(&self.u))
            .then_with(|| other.v.cmp(&self.v))
    }
}

impl PartialOrd for MeetingEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// One pending firing per edge; an edge is rescheduled after it fires.
#[derive(Clone, Debug)]
pub struct MeetingQueue {
    heap: BinaryHeap<MeetingEvent>,
}

impl MeetingQueue {
    pub fn new<R: Rng + ?Sized>(g: &ContactGraph, rng: &mut R) -> Result<Self, EngineError> {
        let mut heap = BinaryHeap::with_capacity(g.edges().len());
        for (i, e) in g.edges().iter().enumerate() {
            heap.push(MeetingEvent {
                time: next_meeting_time(0.0, e.w, rng)?,
                u: e.u,
                v: e.v,
                edge: i,
            });
        }
        Ok(Self { heap })
    }

    pub fn peek_time(&self) -> Option<f64> {
        self.heap.peek().map(|e| e.time)
    }

    pub fn pop(&mut self) -> Option<MeetingEvent> {
        self.heap.pop()
    }

    pub fn schedule<R: Rng + ?Sized>(&mut self, ev: MeetingEvent, w: f64, rng: &mut R) -> Result<(), EngineError> {
        self.heap.push(MeetingEvent {
            time: next_meeting_time(ev.time, w, rng)?,
            ..ev
        });
        Ok(())
    }
}
