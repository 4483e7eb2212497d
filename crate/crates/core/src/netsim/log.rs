use std::fmt;
use std::io;

use crate::dropqueue::DropReason;
use crate::types::{Micros, Packet};

pub const EVENTS_HEADER: [&str; 7] = ["time_us", "element", "event", "stream", "msg_id", "seq", "bytes"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Element {
    Sender(usize),
    Legacy,
    Cell,
    Receiver(usize),
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::Sender(i) => write!(f, "sender{i}"),
            Element::Legacy => f.write_str("legacy"),
            Element::Cell => f.write_str("cell"),
            Element::Receiver(i) => write!(f, "receiver{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Enq,
    Deq,
    DropMsg,
    DropBitrate,
    DropTail,
    DropPurge,
    Deliver,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::Enq => "enq",
            EventKind::Deq => "deq",
            EventKind::DropMsg => "drop_msg",
            EventKind::DropBitrate => "drop_bitrate",
            EventKind::DropTail => "drop_tail",
            EventKind::DropPurge => "drop_purge",
            EventKind::Deliver => "deliver",
        }
    }

    pub fn of_drop(r: DropReason) -> Self {
        match r {
            DropReason::ByMsg => EventKind::DropMsg,
            DropReason::ByBitrate => EventKind::DropBitrate,
            DropReason::Tail => EventKind::DropTail,
            DropReason::Purge => EventKind::DropPurge,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EventRow {
    pub time_us: Micros,
    pub element: Element,
    pub event: EventKind,
    pub stream: u16,
    pub msg_id: u32,
    pub seq: u64,
    pub bytes: u32,
}

impl EventRow {
    pub fn packet(time_us: Micros, element: Element, event: EventKind, p: &Packet) -> Self {
        EventRow {
            time_us,
            element,
            event,
            stream: p.header.stream_id,
            msg_id: p.msg_id(),
            seq: p.seq,
            bytes: p.wire_size(),
        }
    }
}

pub fn write_events<W: io::Write>(w: W, rows: &[EventRow]) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(EVENTS_HEADER).map_err(io::Error::other)?;
    for r in rows {
        out.write_record([
            r.time_us.to_string(),
            r.element.to_string(),
            r.event.name().to_string(),
            r.stream.to_string(),
            r.msg_id.to_string(),
            r.seq.to_string(),
            r.bytes.to_string(),
        ])
        .map_err(io::Error::other)?;
    }
    out.flush()
}
