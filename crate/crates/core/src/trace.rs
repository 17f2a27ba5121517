//! Event trace: the single source of truth a run leaves behind.
//!
//! UTF-8 text, one event per line, tab-separated fields, `#` header lines up
//! front. Every physical transmission appears exactly once (forwarding a DAO
//! produces a new `tx` line), receptions and drops are explicit, and all four
//! metrics are recomputable from the file alone — header lines carry the
//! parameters the metrics need.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use thiserror::Error;

use crate::message::{Dao, DataPacket, Dio, Dis, Message};
use crate::seq::LollipopCounter;
use crate::time::SimTime;
use crate::topology::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DropReason {
    /// Attacker policy: refusing to forward a descendant's DAO.
    AttackerPolicy,
    /// All MAC retries failed.
    MacFail,
    /// Receiver has no parent to forward through.
    Unjoined,
    /// Root has no route for the destination.
    NoRoute,
}

impl DropReason {
    fn as_str(self) -> &'static str {
        match self {
            DropReason::AttackerPolicy => "attacker-policy",
            DropReason::MacFail => "mac-fail",
            DropReason::Unjoined => "unjoined",
            DropReason::NoRoute => "no-route",
        }
    }

    fn parse(s: &str) -> Option<DropReason> {
        Some(match s {
            "attacker-policy" => DropReason::AttackerPolicy,
            "mac-fail" => DropReason::MacFail,
            "unjoined" => DropReason::Unjoined,
            "no-route" => DropReason::NoRoute,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DtsnCause {
    Attack,
    Cascade,
    Root,
}

impl DtsnCause {
    fn as_str(self) -> &'static str {
        match self {
            DtsnCause::Attack => "attack",
            DtsnCause::Cascade => "cascade",
            DtsnCause::Root => "root",
        }
    }

    fn parse(s: &str) -> Option<DtsnCause> {
        Some(match s {
            "attack" => DtsnCause::Attack,
            "cascade" => DtsnCause::Cascade,
            "root" => DtsnCause::Root,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TraceEvent {
    /// One physical transmission. `dst` is `None` for link multicast.
    Tx {
        t: SimTime,
        node: NodeId,
        dst: Option<NodeId>,
        msg: Message,
    },
    /// Successful reception.
    Rx {
        t: SimTime,
        node: NodeId,
        from: NodeId,
        msg: Message,
    },
    Drop {
        t: SimTime,
        node: NodeId,
        reason: DropReason,
        msg: Message,
    },
    /// A data packet entered the network at its origin.
    DataOrigin { t: SimTime, node: NodeId, seq: u32 },
    /// A data packet was accepted by the root.
    Deliver {
        t: SimTime,
        origin: NodeId,
        seq: u32,
        created_at: SimTime,
    },
    /// A node's own DTSN changed.
    Dtsn {
        t: SimTime,
        node: NodeId,
        old: LollipopCounter,
        new: LollipopCounter,
        cause: DtsnCause,
    },
    /// Preferred parent adopted or changed; `old` is `None` on first join.
    Parent {
        t: SimTime,
        node: NodeId,
        old: Option<NodeId>,
        new: NodeId,
        rank: u32,
    },
    /// Root detected an unsolicited trigger-bit DAO. `evidence` is the index
    /// of the offending reception in this trace.
    Alarm {
        t: SimTime,
        origin: NodeId,
        evidence: u64,
    },
}

impl TraceEvent {
    pub fn time(&self) -> SimTime {
        match self {
            TraceEvent::Tx { t, .. }
            | TraceEvent::Rx { t, .. }
            | TraceEvent::Drop { t, .. }
            | TraceEvent::DataOrigin { t, .. }
            | TraceEvent::Deliver { t, .. }
            | TraceEvent::Dtsn { t, .. }
            | TraceEvent::Parent { t, .. }
            | TraceEvent::Alarm { t, .. } => *t,
        }
    }
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceEvent::Tx { t, node, dst, msg } => {
                let dst = dst.map_or_else(|| "*".to_string(), |d| d.to_string());
                write!(f, "{t}\ttx\t{node}\t{dst}\t{}\t{}", msg.kind(), msg.trace_fields())
            }
            TraceEvent::Rx { t, node, from, msg } => {
                write!(f, "{t}\trx\t{node}\t{from}\t{}\t{}", msg.kind(), msg.trace_fields())
            }
            TraceEvent::Drop {
                t,
                node,
                reason,
                msg,
            } => write!(
                f,
                "{t}\tdrop\t{node}\t{}\t{}\t{}",
                reason.as_str(),
                msg.kind(),
                msg.trace_fields()
            ),
            TraceEvent::DataOrigin { t, node, seq } => {
                write!(f, "{t}\torigin\t{node}\tseq={seq}")
            }
            TraceEvent::Deliver {
                t,
                origin,
                seq,
                created_at,
            } => write!(f, "{t}\tdeliver\t0\torigin={origin} seq={seq} created={created_at}"),
            TraceEvent::Dtsn {
                t,
                node,
                old,
                new,
                cause,
            } => write!(
                f,
                "{t}\tdtsn\t{node}\told={old} new={new} cause={}",
                cause.as_str()
            ),
            TraceEvent::Parent {
                t,
                node,
                old,
                new,
                rank,
            } => {
                let old = old.map_or_else(|| "-".to_string(), |o| o.to_string());
                write!(f, "{t}\tparent\t{node}\told={old} new={new} rank={rank}")
            }
            TraceEvent::Alarm { t, origin, evidence } => {
                write!(f, "{t}\talarm\t0\torigin={origin} evidence={evidence}")
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("missing trace header key {0}")]
    MissingHeader(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// A complete run trace: documentation comments, `key=value` metadata, and
/// the ordered event list.
#[derive(Debug, Clone, Default)]
pub struct TraceLog {
    pub comments: Vec<String>,
    pub meta: BTreeMap<String, String>,
    pub events: Vec<TraceEvent>,
}

impl TraceLog {
    pub fn push(&mut self, ev: TraceEvent) {
        self.events.push(ev);
    }

    /// Index the next pushed event will get; used for alarm evidence refs.
    pub fn next_index(&self) -> u64 {
        self.events.len() as u64
    }

    pub fn set_meta(&mut self, key: &str, value: impl fmt::Display) {
        self.meta.insert(key.to_string(), value.to_string());
    }

    pub fn meta_f64(&self, key: &str) -> Result<f64, TraceError> {
        self.meta
            .get(key)
            .ok_or_else(|| TraceError::MissingHeader(key.to_string()))?
            .parse()
            .map_err(|e| TraceError::Malformed {
                line: 0,
                reason: format!("header {key}: {e}"),
            })
    }

    pub fn meta_u64(&self, key: &str) -> Result<u64, TraceError> {
        self.meta
            .get(key)
            .ok_or_else(|| TraceError::MissingHeader(key.to_string()))?
            .parse()
            .map_err(|e| TraceError::Malformed {
                line: 0,
                reason: format!("header {key}: {e}"),
            })
    }

    pub fn meta_str(&self, key: &str) -> Result<&str, TraceError> {
        self.meta
            .get(key)
            .map(|s| s.as_str())
            .ok_or_else(|| TraceError::MissingHeader(key.to_string()))
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for c in &self.comments {
            writeln!(w, "# {c}")?;
        }
        for (k, v) in &self.meta {
            writeln!(w, "# {k}={v}")?;
        }
        for ev in &self.events {
            writeln!(w, "{ev}")?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("write to Vec cannot fail");
        String::from_utf8(buf).expect("trace is valid UTF-8")
    }

    pub fn parse(text: &str) -> Result<TraceLog, TraceError> {
        let mut log = TraceLog::default();
        for (lineno, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("# ") {
                // header: `key=value` if the key looks like an identifier,
                // otherwise a free-text comment
                match rest.split_once('=') {
                    Some((k, v))
                        if !k.is_empty()
                            && k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') =>
                    {
                        log.meta.insert(k.to_string(), v.to_string());
                    }
                    _ => log.comments.push(rest.to_string()),
                }
                continue;
            }
            log.events.push(parse_event(line, lineno + 1)?);
        }
        Ok(log)
    }
}

fn parse_event(line: &str, lineno: usize) -> Result<TraceEvent, TraceError> {
    let err = |reason: &str| TraceError::Malformed {
        line: lineno,
        reason: reason.to_string(),
    };
    let fields: Vec<&str> = line.split('\t').collect();
    if fields.len() < 3 {
        return Err(err("too few fields"));
    }
    let t: SimTime = fields[0].parse().map_err(|_| err("bad time"))?;
    let node = parse_node(fields[2]).ok_or_else(|| err("bad node"))?;
    let kv = |s: &str| parse_kv(s);
    match fields[1] {
        "tx" => {
            if fields.len() < 6 {
                return Err(err("tx needs 6 fields"));
            }
            let dst = if fields[3] == "*" {
                None
            } else {
                Some(parse_node(fields[3]).ok_or_else(|| err("bad dst"))?)
            };
            let msg = parse_message(fields[4], fields[5], node, lineno)?;
            Ok(TraceEvent::Tx { t, node, dst, msg })
        }
        "rx" => {
            if fields.len() < 6 {
                return Err(err("rx needs 6 fields"));
            }
            let from = parse_node(fields[3]).ok_or_else(|| err("bad from"))?;
            let msg = parse_message(fields[4], fields[5], from, lineno)?;
            Ok(TraceEvent::Rx { t, node, from, msg })
        }
        "drop" => {
            if fields.len() < 6 {
                return Err(err("drop needs 6 fields"));
            }
            let reason = DropReason::parse(fields[3]).ok_or_else(|| err("bad drop reason"))?;
            let msg = parse_message(fields[4], fields[5], node, lineno)?;
            Ok(TraceEvent::Drop {
                t,
                node,
                reason,
                msg,
            })
        }
        "origin" => {
            let m = kv(fields[3]);
            Ok(TraceEvent::DataOrigin {
                t,
                node,
                seq: get(&m, "seq", lineno)?,
            })
        }
        "deliver" => {
            let m = kv(fields[3]);
            Ok(TraceEvent::Deliver {
                t,
                origin: NodeId(get(&m, "origin", lineno)?),
                seq: get(&m, "seq", lineno)?,
                created_at: m
                    .get("created")
                    .ok_or_else(|| err("missing created"))?
                    .parse()
                    .map_err(|_| err("bad created"))?,
            })
        }
        "dtsn" => {
            let m = kv(fields[3]);
            Ok(TraceEvent::Dtsn {
                t,
                node,
                old: LollipopCounter::new(get(&m, "old", lineno)?),
                new: LollipopCounter::new(get(&m, "new", lineno)?),
                cause: m
                    .get("cause")
                    .and_then(|s| DtsnCause::parse(s))
                    .ok_or_else(|| err("bad cause"))?,
            })
        }
        "parent" => {
            let m = kv(fields[3]);
            let old = match m.get("old").map(|s| s.as_str()) {
                Some("-") => None,
                Some(s) => Some(NodeId(s.parse().map_err(|_| err("bad old"))?)),
                None => return Err(err("missing old")),
            };
            Ok(TraceEvent::Parent {
                t,
                node,
                old,
                new: NodeId(get(&m, "new", lineno)?),
                rank: get(&m, "rank", lineno)?,
            })
        }
        "alarm" => {
            let m = kv(fields[3]);
            Ok(TraceEvent::Alarm {
                t,
                origin: NodeId(get(&m, "origin", lineno)?),
                evidence: get(&m, "evidence", lineno)?,
            })
        }
        other => Err(err(&format!("unknown event kind {other}"))),
    }
}

fn parse_node(s: &str) -> Option<NodeId> {
    s.parse().ok().map(NodeId)
}

fn parse_kv(s: &str) -> BTreeMap<String, String> {
    s.split(' ')
        .filter_map(|pair| pair.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn get<T: std::str::FromStr>(
    m: &BTreeMap<String, String>,
    key: &str,
    lineno: usize,
) -> Result<T, TraceError> {
    m.get(key)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| TraceError::Malformed {
            line: lineno,
            reason: format!("missing or bad field {key}"),
        })
}

fn parse_message(
    kind: &str,
    fields: &str,
    sender: NodeId,
    lineno: usize,
) -> Result<Message, TraceError> {
    let m = parse_kv(fields);
    match kind {
        "DIO" => Ok(Message::Dio(Dio {
            sender,
            rank: get(&m, "rank", lineno)?,
            dtsn: LollipopCounter::new(get(&m, "dtsn", lineno)?),
            version: get(&m, "ver", lineno)?,
        })),
        "DIS" => Ok(Message::Dis(Dis { sender })),
        "DAO" => {
            let trail: Vec<NodeId> = m
                .get("trail")
                .ok_or_else(|| TraceError::Malformed {
                    line: lineno,
                    reason: "missing trail".to_string(),
                })?
                .split(',')
                .filter(|s| !s.is_empty())
                .map(|s| s.parse().map(NodeId))
                .collect::<Result<_, _>>()
                .map_err(|_| TraceError::Malformed {
                    line: lineno,
                    reason: "bad trail".to_string(),
                })?;
            let trig: u8 = get(&m, "trig", lineno)?;
            Ok(Message::Dao(Dao {
                origin: NodeId(get(&m, "origin", lineno)?),
                forwarder: sender,
                parent_of_origin: NodeId(get(&m, "pparent", lineno)?),
                dtsn_trigger_bit: trig != 0,
                hop_trail: trail,
            }))
        }
        "DATA" => Ok(Message::Data(DataPacket {
            origin: NodeId(get(&m, "origin", lineno)?),
            destination: NodeId(get(&m, "dest", lineno)?),
            created_at: m
                .get("created")
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| TraceError::Malformed {
                    line: lineno,
                    reason: "bad created".to_string(),
                })?,
            size_bytes: get(&m, "bytes", lineno)?,
            seq: get(&m, "seq", lineno)?,
        })),
        other => Err(TraceError::Malformed {
            line: lineno,
            reason: format!("unknown message kind {other}"),
        }),
    }
}
