//! Metric extraction: every number is recomputed from the trace alone, so a
//! saved trace file replays to the identical report.

use std::collections::BTreeMap;

use crate::detection::Alarm;
use crate::message::{Message, MessageSizes};
use crate::time::SimTime;
use crate::topology::NodeId;
use crate::trace::{DtsnCause, TraceError, TraceEvent, TraceLog};

/// Radio energy model standing in for testbed power measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyModel {
    pub tx_mj_per_byte: f64,
    pub rx_mj_per_byte: f64,
    pub idle_mw: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeMetrics {
    pub node: NodeId,
    pub bytes_tx: u64,
    pub bytes_rx: u64,
    pub power_mw: f64,
    pub data_sent: u64,
    pub data_delivered: u64,
    /// None for nodes that sent no data packets.
    pub loss_ratio: Option<f64>,
}

/// Transmission counts by message kind (physical transmissions, retries
/// included).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TxCounts {
    pub dio: u64,
    pub dis: u64,
    pub dao: u64,
    pub data: u64,
}

impl TxCounts {
    pub fn total(&self) -> u64 {
        self.dio + self.dis + self.dao + self.data
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    /// Total DAO transmissions: originations plus every forwarding hop.
    pub dao_overhead: u64,
    /// Mean node power over the run, idle draw included.
    pub avg_power_mw: f64,
    /// Mean over nodes (that sent data) of 1 - delivered/sent.
    pub packet_loss_ratio: f64,
    /// Mean end-to-end delay of data packets the root received; None when
    /// nothing was delivered.
    pub avg_latency_s: Option<f64>,
    pub alarms: Vec<Alarm>,
    pub per_node: Vec<NodeMetrics>,
    pub tx_counts: TxCounts,
    pub data_sent: u64,
    pub data_delivered: u64,
    pub first_attack_increment: Option<SimTime>,
    /// First alarm relative to the first attack increment.
    pub time_to_detect: Option<SimTime>,
}

impl MetricsReport {
    pub fn detected(&self) -> bool {
        !self.alarms.is_empty()
    }
}

/// Computes the report for a trace. The trace header must carry `nodes`,
/// `duration_s`, the message byte sizes, and the energy parameters.
pub fn report_from_trace(log: &TraceLog) -> Result<MetricsReport, TraceError> {
    let nodes = log.meta_u64("nodes")? as usize;
    let duration_s = log.meta_f64("duration_s")?;
    let sizes = MessageSizes {
        dio: log.meta_u64("dio_bytes")? as u32,
        dis: log.meta_u64("dis_bytes")? as u32,
        dao: log.meta_u64("dao_bytes")? as u32,
    };
    let energy = EnergyModel {
        tx_mj_per_byte: log.meta_f64("e_tx_mj_per_byte")?,
        rx_mj_per_byte: log.meta_f64("e_rx_mj_per_byte")?,
        idle_mw: log.meta_f64("p_idle_mw")?,
    };

    let mut bytes_tx = vec![0u64; nodes];
    let mut bytes_rx = vec![0u64; nodes];
    let mut sent = vec![0u64; nodes];
    let mut delivered = vec![0u64; nodes];
    let mut tx_counts = TxCounts::default();
    let mut latency_sum = 0.0f64;
    let mut latency_count = 0u64;
    let mut alarms = Vec::new();
    let mut first_attack_increment = None;

    let index = |n: NodeId| -> Result<usize, TraceError> {
        if n.index() < nodes {
            Ok(n.index())
        } else {
            Err(TraceError::Malformed {
                line: 0,
                reason: format!("node {n} outside the {nodes}-node run"),
            })
        }
    };

    for ev in &log.events {
        match ev {
            TraceEvent::Tx { node, msg, .. } => {
                bytes_tx[index(*node)?] += u64::from(msg.size_bytes(&sizes));
                match msg {
                    Message::Dio(_) => tx_counts.dio += 1,
                    Message::Dis(_) => tx_counts.dis += 1,
                    Message::Dao(_) => tx_counts.dao += 1,
                    Message::Data(_) => tx_counts.data += 1,
                }
            }
            TraceEvent::Rx { node, msg, .. } => {
                bytes_rx[index(*node)?] += u64::from(msg.size_bytes(&sizes));
            }
            TraceEvent::DataOrigin { node, .. } => sent[index(*node)?] += 1,
            TraceEvent::Deliver {
                t,
                origin,
                created_at,
                ..
            } => {
                delivered[index(*origin)?] += 1;
                latency_sum += (*t - *created_at).as_secs_f64();
                latency_count += 1;
            }
            TraceEvent::Dtsn { t, cause, .. } => {
                if *cause == DtsnCause::Attack && first_attack_increment.is_none() {
                    first_attack_increment = Some(*t);
                }
            }
            TraceEvent::Alarm { t, origin, evidence } => alarms.push(Alarm {
                time: *t,
                reporting_origin: *origin,
                evidence: *evidence,
            }),
            TraceEvent::Drop { .. } | TraceEvent::Parent { .. } => {}
        }
    }

    let per_node: Vec<NodeMetrics> = (0..nodes)
        .map(|i| {
            let power_mw = (energy.tx_mj_per_byte * bytes_tx[i] as f64
                + energy.rx_mj_per_byte * bytes_rx[i] as f64)
                / duration_s
                + energy.idle_mw;
            NodeMetrics {
                node: NodeId(i as u16),
                bytes_tx: bytes_tx[i],
                bytes_rx: bytes_rx[i],
                power_mw,
                data_sent: sent[i],
                data_delivered: delivered[i],
                loss_ratio: if sent[i] > 0 {
                    Some(1.0 - delivered[i] as f64 / sent[i] as f64)
                } else {
                    None
                },
            }
        })
        .collect();

    let avg_power_mw = per_node.iter().map(|n| n.power_mw).sum::<f64>() / nodes as f64;
    let loss: Vec<f64> = per_node.iter().filter_map(|n| n.loss_ratio).collect();
    let packet_loss_ratio = if loss.is_empty() {
        0.0
    } else {
        loss.iter().sum::<f64>() / loss.len() as f64
    };
    let avg_latency_s = if latency_count > 0 {
        Some(latency_sum / latency_count as f64)
    } else {
        None
    };
    let time_to_detect = match (first_attack_increment, alarms.first()) {
        (Some(start), Some(alarm)) => Some(alarm.time.saturating_sub(start)),
        _ => None,
    };

    Ok(MetricsReport {
        dao_overhead: tx_counts.dao,
        avg_power_mw,
        packet_loss_ratio,
        avg_latency_s,
        alarms,
        per_node,
        tx_counts,
        data_sent: sent.iter().sum(),
        data_delivered: delivered.iter().sum(),
        first_attack_increment,
        time_to_detect,
    })
}

/// Identification of a run, echoed into CSV rows. Taken from trace headers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunMeta {
    pub mode: String,
    pub n: u64,
    pub seed: String,
    pub attack: bool,
    pub k: u64,
}

impl RunMeta {
    pub fn from_trace(log: &TraceLog) -> Result<RunMeta, TraceError> {
        Ok(RunMeta {
            mode: log.meta_str("mode")?.to_string(),
            n: log.meta_u64("nodes")?,
            seed: log.meta_str("seed")?.to_string(),
            attack: log.meta_u64("attack")? != 0,
            k: log.meta_u64("k")?,
        })
    }
}

pub fn csv_header() -> &'static str {
    "mode,n,seed,attack,k,dao_overhead,avg_power_mw,packet_loss_ratio,avg_latency_s,detected,time_to_detect_s,error"
}

pub fn csv_row(meta: &RunMeta, report: &MetricsReport) -> String {
    format!(
        "{},{},{},{},{},{},{:.6},{:.6},{},{},{},",
        meta.mode,
        meta.n,
        meta.seed,
        u8::from(meta.attack),
        meta.k,
        report.dao_overhead,
        report.avg_power_mw,
        report.packet_loss_ratio,
        report
            .avg_latency_s
            .map_or(String::new(), |l| format!("{l:.6}")),
        u8::from(report.detected()),
        report
            .time_to_detect
            .map_or(String::new(), |t| format!("{:.6}", t.as_secs_f64())),
    )
}

pub fn csv_error_row(meta: &RunMeta, error: &str) -> String {
    format!(
        "{},{},{},{},{},,,,,,,{}",
        meta.mode,
        meta.n,
        meta.seed,
        u8::from(meta.attack),
        meta.k,
        error.replace(',', ";"),
    )
}

/// Seed-averaged summary keyed by (mode, n, attack, k): the axes the
/// overhead/power/latency/loss figures plot.
pub fn summary_csv(rows: &[(RunMeta, MetricsReport)]) -> String {
    #[derive(Default)]
    struct Acc {
        runs: u64,
        dao: f64,
        power: f64,
        loss: f64,
        latency: f64,
        latency_runs: u64,
        detected: u64,
    }
    let mut groups: BTreeMap<(String, u64, bool, u64), Acc> = BTreeMap::new();
    for (meta, report) in rows {
        let acc = groups
            .entry((meta.mode.clone(), meta.n, meta.attack, meta.k))
            .or_default();
        acc.runs += 1;
        acc.dao += report.dao_overhead as f64;
        acc.power += report.avg_power_mw;
        acc.loss += report.packet_loss_ratio;
        if let Some(l) = report.avg_latency_s {
            acc.latency += l;
            acc.latency_runs += 1;
        }
        acc.detected += u64::from(report.detected());
    }
    let mut out = String::from(
        "mode,n,attack,k,runs,mean_dao_overhead,mean_avg_power_mw,mean_packet_loss_ratio,mean_avg_latency_s,detected_runs\n",
    );
    for ((mode, n, attack, k), acc) in groups {
        let runs = acc.runs as f64;
        let latency = if acc.latency_runs > 0 {
            format!("{:.6}", acc.latency / acc.latency_runs as f64)
        } else {
            String::new()
        };
        out.push_str(&format!(
            "{},{},{},{},{},{:.3},{:.6},{:.6},{},{}\n",
            mode,
            n,
            u8::from(attack),
            k,
            acc.runs,
            acc.dao / runs,
            acc.power / runs,
            acc.loss / runs,
            latency,
            acc.detected,
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::message::{Dao, DataPacket};
    use crate::seq::LollipopCounter;

    fn base_log() -> TraceLog {
        let mut log = TraceLog::default();
        log.set_meta("nodes", 3);
        log.set_meta("duration_s", "100.000000");
        log.set_meta("dio_bytes", 80);
        log.set_meta("dis_bytes", 8);
        log.set_meta("dao_bytes", 50);
        log.set_meta("e_tx_mj_per_byte", 0.000576);
        log.set_meta("e_rx_mj_per_byte", 0.000634);
        log.set_meta("p_idle_mw", 0.054);
        log
    }

    fn dao_msg(origin: u16, forwarder: u16) -> Message {
        Message::Dao(Dao {
            origin: NodeId(origin),
            forwarder: NodeId(forwarder),
            parent_of_origin: NodeId(0),
            dtsn_trigger_bit: false,
            hop_trail: vec![NodeId(origin)],
        })
    }

    #[test]
    fn zero_traffic_power_is_idle_exactly() {
        let report = report_from_trace(&base_log()).unwrap();
        assert_eq!(report.avg_power_mw, 0.054);
        assert_eq!(report.packet_loss_ratio, 0.0);
        assert_eq!(report.avg_latency_s, None);
        assert_eq!(report.dao_overhead, 0);
    }

    #[test]
    fn dao_overhead_counts_every_hop() {
        let mut log = base_log();
        // one DAO from a depth-3 node: origination plus two forwarding hops
        for sender in [2u16, 1, 2] {
            log.push(TraceEvent::Tx {
                t: SimTime::from_secs(1),
                node: NodeId(sender),
                dst: Some(NodeId(0)),
                msg: dao_msg(2, sender),
            });
        }
        let report = report_from_trace(&log).unwrap();
        assert_eq!(report.dao_overhead, 3);
    }

    #[test]
    fn tx_energy_scales_linearly() {
        let mut log = base_log();
        log.push(TraceEvent::Tx {
            t: SimTime::from_secs(1),
            node: NodeId(1),
            dst: Some(NodeId(0)),
            msg: dao_msg(1, 1),
        });
        let r1 = report_from_trace(&log).unwrap();
        let tx_component = r1.per_node[1].power_mw - 0.054;

        log.set_meta("e_tx_mj_per_byte", 0.000576 * 2.0);
        let r2 = report_from_trace(&log).unwrap();
        let doubled = r2.per_node[1].power_mw - 0.054;
        assert!((doubled - 2.0 * tx_component).abs() < 1e-12);
    }

    #[test]
    fn loss_ratio_per_node_then_averaged() {
        let mut log = base_log();
        // node 1 sends 10, 9 delivered; node 2 sends 2, 2 delivered
        for seq in 0..10u32 {
            log.push(TraceEvent::DataOrigin {
                t: SimTime::from_secs(1),
                node: NodeId(1),
                seq,
            });
        }
        for seq in 0..9u32 {
            log.push(TraceEvent::Deliver {
                t: SimTime::from_secs(2),
                origin: NodeId(1),
                seq,
                created_at: SimTime::from_secs(1),
            });
        }
        for seq in 0..2u32 {
            log.push(TraceEvent::DataOrigin {
                t: SimTime::from_secs(1),
                node: NodeId(2),
                seq,
            });
            log.push(TraceEvent::Deliver {
                t: SimTime::from_secs(3),
                origin: NodeId(2),
                seq,
                created_at: SimTime::from_secs(1),
            });
        }
        let report = report_from_trace(&log).unwrap();
        let n1 = report.per_node[1].loss_ratio.unwrap();
        assert!((n1 - 0.1).abs() < 1e-12);
        assert_eq!(report.per_node[2].loss_ratio, Some(0.0));
        assert!((report.packet_loss_ratio - 0.05).abs() < 1e-12);
        assert_eq!(report.per_node[0].loss_ratio, None);
    }

    #[test]
    fn latency_counts_only_delivered_packets() {
        let mut log = base_log();
        let created = SimTime::from_secs(10);
        log.push(TraceEvent::DataOrigin {
            t: created,
            node: NodeId(1),
            seq: 0,
        });
        log.push(TraceEvent::DataOrigin {
            t: created,
            node: NodeId(1),
            seq: 1,
        });
        // only seq 0 arrives, 300ms later; seq 1 is lost and must not skew
        log.push(TraceEvent::Deliver {
            t: created + SimTime::from_millis(300),
            origin: NodeId(1),
            seq: 0,
            created_at: created,
        });
        log.push(TraceEvent::Drop {
            t: created + SimTime::from_millis(100),
            node: NodeId(1),
            reason: crate::trace::DropReason::MacFail,
            msg: Message::Data(DataPacket {
                origin: NodeId(1),
                destination: NodeId(0),
                created_at: created,
                size_bytes: 50,
                seq: 1,
            }),
        });
        let report = report_from_trace(&log).unwrap();
        assert!((report.avg_latency_s.unwrap() - 0.3).abs() < 1e-12);
        assert!((report.packet_loss_ratio - 0.5).abs() < 1e-12);
    }

    #[test]
    fn attack_and_detection_timing() {
        let mut log = base_log();
        log.push(TraceEvent::Dtsn {
            t: SimTime::from_secs(30),
            node: NodeId(2),
            old: LollipopCounter::new(240),
            new: LollipopCounter::new(241),
            cause: DtsnCause::Attack,
        });
        log.push(TraceEvent::Alarm {
            t: SimTime::from_secs(42),
            origin: NodeId(1),
            evidence: 7,
        });
        let report = report_from_trace(&log).unwrap();
        assert!(report.detected());
        assert_eq!(report.first_attack_increment, Some(SimTime::from_secs(30)));
        assert_eq!(report.time_to_detect, Some(SimTime::from_secs(12)));
    }

    #[test]
    fn report_is_pure_function_of_trace_text() {
        let mut log = base_log();
        log.push(TraceEvent::Tx {
            t: SimTime::from_secs(1),
            node: NodeId(1),
            dst: None,
            msg: dao_msg(1, 1),
        });
        log.push(TraceEvent::DataOrigin {
            t: SimTime::from_secs(2),
            node: NodeId(2),
            seq: 0,
        });
        let direct = report_from_trace(&log).unwrap();
        let reparsed = TraceLog::parse(&log.to_text()).unwrap();
        let replayed = report_from_trace(&reparsed).unwrap();
        assert_eq!(direct, replayed);
    }
}
