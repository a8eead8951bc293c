//! Streams as FIFO queues of device work, and the events placed in them.

use std::collections::VecDeque;

use crate::device::LaunchSpec;
use crate::diag::SourceLoc;
use crate::machine::Configuration;
use crate::program::ApiFn;
use crate::runtime_api::MemcpyKind;
use crate::value::Location;

#[derive(Clone, Debug, PartialEq)]
pub enum StreamItem {
    Launch(LaunchSpec),
    Memcpy {
        func: ApiFn,
        dst: Option<Location>,
        src: Option<Location>,
        n: u64,
        kind: MemcpyKind,
        loc: SourceLoc,
    },
    Memset {
        dst: Option<Location>,
        value: u8,
        n: u64,
        loc: SourceLoc,
    },
    Record(u32),
    Wait(u32),
}

impl StreamItem {
    pub fn name(&self) -> &'static str {
        match self {
            StreamItem::Launch(_) => "kernel",
            StreamItem::Memcpy { .. } => "memcpy",
            StreamItem::Memset { .. } => "memset",
            StreamItem::Record(_) => "record",
            StreamItem::Wait(_) => "wait",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Queued {
    /// Unique across all streams, in enqueue order.
    pub seq: u64,
    pub item: StreamItem,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stream {
    pub sid: u32,
    pub queue: VecDeque<Queued>,
    /// The launch item whose grid is still running.
    pub running: Option<u64>,
    pub destroyed: bool,
}

impl Stream {
    pub fn new(sid: u32) -> Self {
        Stream {
            sid,
            queue: VecDeque::new(),
            running: None,
            destroyed: false,
        }
    }

    pub fn is_idle(&self) -> bool {
        self.queue.is_empty() && self.running.is_none()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventStatus {
    Created,
    Pending,
    Recorded,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Event {
    pub eid: u32,
    pub status: EventStatus,
}

/// A stream item that finished, in completion order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Completion {
    pub sid: u32,
    pub item: u64,
    pub what: &'static str,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SyncTarget {
    Device,
    Stream(u32),
    Event(u32),
}

impl Configuration {
    /// A stream handle usable in an API call.
    pub fn valid_stream(&self, handle: i128) -> Option<u32> {
        let sid = u32::try_from(handle).ok()?;
        let s = self.streams.get(&sid)?;
        (!s.destroyed).then_some(sid)
    }

    pub fn valid_event(&self, handle: i128) -> Option<u32> {
        let eid = u32::try_from(handle).ok()?;
        self.events.contains_key(&eid).then_some(eid)
    }

    pub(crate) fn enqueue(&mut self, sid: u32, item: StreamItem) -> u64 {
        if let StreamItem::Record(eid) = item {
            if let Some(e) = self.events.get_mut(&eid) {
                if e.status == EventStatus::Created {
                    e.status = EventStatus::Pending;
                }
            }
        }
        let seq = self.next_item;
        self.next_item += 1;
        self.streams
            .get_mut(&sid)
            .expect("validated stream")
            .queue
            .push_back(Queued { seq, item });
        seq
    }

    fn event_recorded(&self, eid: u32) -> bool {
        // a destroyed event no longer holds anything back
        self.events.get(&eid).is_none_or(|e| e.status == EventStatus::Recorded)
    }

    pub fn dispatchable(&self, sid: u32) -> bool {
        let s = &self.streams[&sid];
        if s.running.is_some() {
            return false;
        }
        match s.queue.front() {
            None => false,
            Some(Queued {
                item: StreamItem::Wait(eid),
                ..
            }) => self.event_recorded(*eid),
            Some(_) => true,
        }
    }

    /// Starts the head item of a stream; everything but a launch also
    /// completes in this transition.
    pub(crate) fn dispatch(&mut self, sid: u32) {
        let stream = self.streams.get_mut(&sid).expect("stream");
        let Queued { seq, item } = stream.queue.pop_front().expect("dispatchable head");
        let what = item.name();
        match item {
            StreamItem::Launch(spec) => {
                self.streams.get_mut(&sid).expect("stream").running = Some(seq);
                let gid = self.spawn_grid(spec, seq);
                self.trace_line(|| format!("stream sid={sid} dispatch=kernel gid={gid}"));
                return;
            }
            StreamItem::Memcpy {
                func,
                dst,
                src,
                n,
                kind,
                loc,
            } => {
                if let Err(code) = self.memory.memcpy(dst, src, n, kind) {
                    self.last_error = code;
                    self.api_error(func, code, &loc);
                }
                self.trace_line(|| format!("stream sid={sid} dispatch=memcpy bytes={n} kind={}", kind.name()));
            }
            StreamItem::Memset { dst, value, n, loc } => {
                if let Err(code) = self.memory.memset(dst, value, n) {
                    self.last_error = code;
                    self.api_error(ApiFn::Memset, code, &loc);
                }
                self.trace_line(|| format!("stream sid={sid} dispatch=memset bytes={n}"));
            }
            StreamItem::Record(eid) => {
                if let Some(e) = self.events.get_mut(&eid) {
                    e.status = EventStatus::Recorded;
                }
                self.trace_line(|| format!("stream sid={sid} dispatch=record eid={eid}"));
            }
            StreamItem::Wait(eid) => {
                self.trace_line(|| format!("stream sid={sid} dispatch=wait eid={eid}"));
            }
        }
        self.completions.push(Completion { sid, item: seq, what });
    }

    pub fn sync_satisfied(&self, target: SyncTarget) -> bool {
        match target {
            SyncTarget::Device => self.grids.is_empty() && self.streams.values().all(Stream::is_idle),
            SyncTarget::Stream(sid) => self.streams.get(&sid).is_none_or(Stream::is_idle),
            SyncTarget::Event(eid) => self.event_recorded(eid),
        }
    }
}
