//! Control and data messages exchanged between nodes.
//!
//! No wire encoding is modeled; the simulator works at message granularity.
//! Byte sizes only feed the energy model and frame-duration computation, and
//! come from [`MessageSizes`] for control traffic.

use crate::seq::LollipopCounter;
use crate::time::SimTime;
use crate::topology::NodeId;

/// DODAG Information Object: periodic rank/DTSN advertisement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dio {
    pub sender: NodeId,
    pub rank: u32,
    pub dtsn: LollipopCounter,
    /// Constant in this artifact; carried for trace fidelity.
    pub version: u8,
}

/// DODAG Information Solicitation: a join request for a DIO.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dis {
    pub sender: NodeId,
}

/// Destination Advertisement Object, unicast hop-by-hop toward the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dao {
    /// Advertised address.
    pub origin: NodeId,
    /// Node transmitting this hop; rewritten at each forward.
    pub forwarder: NodeId,
    /// Origin's preferred parent, the transit information the root needs to
    /// assemble source routes in non-storing mode.
    pub parent_of_origin: NodeId,
    /// Set when the DAO was induced by an observed DTSN increment.
    pub dtsn_trigger_bit: bool,
    /// Nodes the DAO has visited so far, origin first. Trace bookkeeping
    /// only; no protocol decision reads it.
    pub hop_trail: Vec<NodeId>,
}

/// Application payload headed for the root.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DataPacket {
    pub origin: NodeId,
    pub destination: NodeId,
    pub created_at: SimTime,
    pub size_bytes: u32,
    /// Per-origin sequence number; (origin, seq) identifies the packet.
    pub seq: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Message {
    Dio(Dio),
    Dis(Dis),
    Dao(Dao),
    Data(DataPacket),
}

/// Configured byte sizes for control messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MessageSizes {
    pub dio: u32,
    pub dis: u32,
    pub dao: u32,
}

impl Default for MessageSizes {
    fn default() -> Self {
        MessageSizes {
            dio: 80,
            dis: 8,
            dao: 50,
        }
    }
}

impl Message {
    pub fn kind(&self) -> &'static str {
        match self {
            Message::Dio(_) => "DIO",
            Message::Dis(_) => "DIS",
            Message::Dao(_) => "DAO",
            Message::Data(_) => "DATA",
        }
    }

    pub fn size_bytes(&self, sizes: &MessageSizes) -> u32 {
        match self {
            Message::Dio(_) => sizes.dio,
            Message::Dis(_) => sizes.dis,
            Message::Dao(_) => sizes.dao,
            Message::Data(d) => d.size_bytes,
        }
    }

    /// Salient fields, trace-encoded as space-separated `key=value` pairs.
    pub fn trace_fields(&self) -> String {
        match self {
            Message::Dio(d) => format!("rank={} dtsn={} ver={}", d.rank, d.dtsn, d.version),
            Message::Dis(_) => String::new(),
            Message::Dao(d) => format!(
                "origin={} pparent={} trig={} trail={}",
                d.origin,
                d.parent_of_origin,
                u8::from(d.dtsn_trigger_bit),
                d.hop_trail
                    .iter()
                    .map(|n| n.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            Message::Data(d) => format!(
                "origin={} dest={} created={} bytes={} seq={}",
                d.origin, d.destination, d.created_at, d.size_bytes, d.seq
            ),
        }
    }
}
