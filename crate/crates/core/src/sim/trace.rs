//! Event tracing.
//!
//! Every layer of the stack records named, timestamped events. The record
//! names for the CNPU and QNPU layers are closed sets; the QDevice layer logs
//! the instruction/response message stream. Records serialize one per line as
//! `k=v` fields in a fixed order so that trace files diff cleanly.

use super::time::SimTime;
use crate::error::TraceError;
use std::fmt;
use std::io::{BufRead, Write};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Layer {
    Cnpu,
    Qnpu,
    Qdevice,
}

impl Layer {
    pub fn as_str(self) -> &'static str {
        match self {
            Layer::Cnpu => "CNPU",
            Layer::Qnpu => "QNPU",
            Layer::Qdevice => "QDEVICE",
        }
    }

    pub fn parse(s: &str) -> Option<Layer> {
        match s {
            "CNPU" => Some(Layer::Cnpu),
            "QNPU" => Some(Layer::Qnpu),
            "QDEVICE" => Some(Layer::Qdevice),
            _ => None,
        }
    }
}

/// Closed set of record names. Process-scoped subroutine events carry the
/// process id in the name itself, mirroring how the kernel logs them.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TraceName {
    // CNPU (host) events
    SubroutineSendAttempt,
    SubroutineSent,
    ResultRcvd,
    ClasMsgSent,
    ClasMsgRcvd,
    // QNPU kernel events
    SchedulerArriveUserProcess,
    SchedulerScheduleUserProcess,
    SchedulerArriveNetProcess,
    SchedulerScheduleNetProcess,
    ProcmgrSubroutineAdded(u32),
    ProcmgrSubroutineDone(u32),
    ProcessorStartUserProcess,
    ProcessorWaitUserProcess,
    ProcessorFinishUserProcess,
    ProcessorStartNetProcess,
    ProcessorFinishNetProcess,
    ProcessorAbortUserProcess,
    EmuRequestRejected,
    QdeviceProduceCmd(&'static str),
    QdeviceConsumeCmd,
    QdeviceProduceOutcome,
    ProcessorConsumeOutcome,
    QnetworkEntPull,
    EgpNeiOk,
    // QDevice message stream
    QdevInstr,
    QdevResponse,
}

impl fmt::Display for TraceName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use TraceName::*;
        match self {
            SubroutineSendAttempt => write!(f, "SUBROUTINE_SEND_ATTEMPT"),
            SubroutineSent => write!(f, "SUBROUTINE_SENT"),
            ResultRcvd => write!(f, "RESULT_RCVD"),
            ClasMsgSent => write!(f, "CLAS_MSG_SENT"),
            ClasMsgRcvd => write!(f, "CLAS_MSG_RCVD"),
            SchedulerArriveUserProcess => write!(f, "SCHEDULER_ARRIVE_USER_PROCESS"),
            SchedulerScheduleUserProcess => write!(f, "SCHEDULER_SCHEDULE_USER_PROCESS"),
            SchedulerArriveNetProcess => write!(f, "SCHEDULER_ARRIVE_NET_PROCESS"),
            SchedulerScheduleNetProcess => write!(f, "SCHEDULER_SCHEDULE_NET_PROCESS"),
            ProcmgrSubroutineAdded(pid) => write!(f, "PROCMGR_SUBROUTINE_ADDED_P{pid}"),
            ProcmgrSubroutineDone(pid) => write!(f, "PROCMGR_SUBROUTINE_DONE_P{pid}"),
            ProcessorStartUserProcess => write!(f, "PROCESSOR_START_USER_PROCESS"),
            ProcessorWaitUserProcess => write!(f, "PROCESSOR_WAIT_USER_PROCESS"),
            ProcessorFinishUserProcess => write!(f, "PROCESSOR_FINISH_USER_PROCESS"),
            ProcessorStartNetProcess => write!(f, "PROCESSOR_START_NET_PROCESS"),
            ProcessorFinishNetProcess => write!(f, "PROCESSOR_FINISH_NET_PROCESS"),
            ProcessorAbortUserProcess => write!(f, "PROCESSOR_ABORT_USER_PROCESS"),
            EmuRequestRejected => write!(f, "EMU_REQUEST_REJECTED"),
            QdeviceProduceCmd(op) => write!(f, "QDEVICE_PRODUCE_{op}_CMD"),
            QdeviceConsumeCmd => write!(f, "QDEVICE_CONSUME_CMD"),
            QdeviceProduceOutcome => write!(f, "QDEVICE_PRODUCE_OUTCOME"),
            ProcessorConsumeOutcome => write!(f, "PROCESSOR_CONSUME_OUTCOME"),
            QnetworkEntPull => write!(f, "QNETWORK_ENT_PULL"),
            EgpNeiOk => write!(f, "EGP_NEI_OK"),
            QdevInstr => write!(f, "QDEV_INSTR"),
            QdevResponse => write!(f, "QDEV_RESPONSE"),
        }
    }
}

impl TraceName {
    pub fn parse(s: &str) -> Option<TraceName> {
        use TraceName::*;
        let fixed = match s {
            "SUBROUTINE_SEND_ATTEMPT" => Some(SubroutineSendAttempt),
            "SUBROUTINE_SENT" => Some(SubroutineSent),
            "RESULT_RCVD" => Some(ResultRcvd),
            "CLAS_MSG_SENT" => Some(ClasMsgSent),
            "CLAS_MSG_RCVD" => Some(ClasMsgRcvd),
            "SCHEDULER_ARRIVE_USER_PROCESS" => Some(SchedulerArriveUserProcess),
            "SCHEDULER_SCHEDULE_USER_PROCESS" => Some(SchedulerScheduleUserProcess),
            "SCHEDULER_ARRIVE_NET_PROCESS" => Some(SchedulerArriveNetProcess),
            "SCHEDULER_SCHEDULE_NET_PROCESS" => Some(SchedulerScheduleNetProcess),
            "PROCESSOR_START_USER_PROCESS" => Some(ProcessorStartUserProcess),
            "PROCESSOR_WAIT_USER_PROCESS" => Some(ProcessorWaitUserProcess),
            "PROCESSOR_FINISH_USER_PROCESS" => Some(ProcessorFinishUserProcess),
            "PROCESSOR_START_NET_PROCESS" => Some(ProcessorStartNetProcess),
            "PROCESSOR_FINISH_NET_PROCESS" => Some(ProcessorFinishNetProcess),
            "PROCESSOR_ABORT_USER_PROCESS" => Some(ProcessorAbortUserProcess),
            "EMU_REQUEST_REJECTED" => Some(EmuRequestRejected),
            "QDEVICE_CONSUME_CMD" => Some(QdeviceConsumeCmd),
            "QDEVICE_PRODUCE_OUTCOME" => Some(QdeviceProduceOutcome),
            "PROCESSOR_CONSUME_OUTCOME" => Some(ProcessorConsumeOutcome),
            "QNETWORK_ENT_PULL" => Some(QnetworkEntPull),
            "EGP_NEI_OK" => Some(EgpNeiOk),
            "QDEV_INSTR" => Some(QdevInstr),
            "QDEV_RESPONSE" => Some(QdevResponse),
            _ => None,
        };
        if fixed.is_some() {
            return fixed;
        }
        if let Some(rest) = s.strip_prefix("PROCMGR_SUBROUTINE_ADDED_P") {
            return rest.parse().ok().map(ProcmgrSubroutineAdded);
        }
        if let Some(rest) = s.strip_prefix("PROCMGR_SUBROUTINE_DONE_P") {
            return rest.parse().ok().map(ProcmgrSubroutineDone);
        }
        if let Some(rest) = s.strip_prefix("QDEVICE_PRODUCE_") {
            if let Some(op) = rest.strip_suffix("_CMD") {
                // Leak-free static mapping for the known opcodes.
                const OPS: &[&str] = &[
                    "INI", "SQG", "TQG", "AQG", "MSR", "ENT", "ENM", "MOV", "SWP", "ESW",
                    "PMG", "NOP",
                ];
                return OPS
                    .iter()
                    .find(|o| **o == op)
                    .map(|o| QdeviceProduceCmd(o));
            }
        }
        None
    }
}

#[derive(Clone, Debug)]
pub struct TraceEvent {
    pub node: NodeId,
    pub layer: Layer,
    pub time: SimTime,
    pub name: TraceName,
    pub payload: Vec<(&'static str, String)>,
}

impl TraceEvent {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.payload
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn get_u64(&self, key: &str) -> Option<u64> {
        self.get(key).and_then(|v| v.parse().ok())
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.get(key).and_then(|v| v.parse().ok())
    }
}

/// The accumulated trace of one run, plus the resolved configuration it was
/// produced under (embedded in the file header for provenance).
#[derive(Clone, Debug, Default)]
pub struct TraceLog {
    pub node_names: Vec<String>,
    pub header: Vec<String>,
    pub events: Vec<TraceEvent>,
}

impl TraceLog {
    pub fn new(node_names: Vec<String>) -> Self {
        TraceLog { node_names, header: Vec::new(), events: Vec::new() }
    }

    pub fn node_name(&self, id: NodeId) -> &str {
        &self.node_names[id.0]
    }

    pub fn node_by_name(&self, name: &str) -> Option<NodeId> {
        self.node_names.iter().position(|n| n == name).map(NodeId)
    }

    pub fn record(
        &mut self,
        node: NodeId,
        layer: Layer,
        time: SimTime,
        name: TraceName,
        payload: Vec<(&'static str, String)>,
    ) {
        self.events.push(TraceEvent { node, layer, time, name, payload });
    }

    pub fn events_for(&self, node: NodeId) -> impl Iterator<Item = &TraceEvent> {
        self.events.iter().filter(move |e| e.node == node)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for line in &self.header {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "# nodes: {}", self.node_names.join(","))?;
        for e in &self.events {
            write!(
                w,
                "node={} layer={} time_ns={} name={}",
                self.node_names[e.node.0],
                e.layer.as_str(),
                e.time.as_ns(),
                e.name
            )?;
            for (k, v) in &e.payload {
                write!(w, " {k}={v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn to_string_lossy(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("write to vec");
        String::from_utf8(buf).expect("trace is utf-8")
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<TraceLog, TraceError> {
        let mut log = TraceLog::default();
        for (idx, line) in r.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.map_err(|e| TraceError::Io { line: lineno, source: e })?;
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("# ") {
                if let Some(names) = rest.strip_prefix("nodes: ") {
                    log.node_names = names.split(',').map(|s| s.to_string()).collect();
                } else {
                    log.header.push(rest.to_string());
                }
                continue;
            }
            log.events.push(parse_event_line(line, lineno, &mut log.node_names)?);
        }
        Ok(log)
    }
}

fn parse_event_line(
    line: &str,
    lineno: usize,
    node_names: &mut Vec<String>,
) -> Result<TraceEvent, TraceError> {
    let mut node = None;
    let mut layer = None;
    let mut time = None;
    let mut name = None;
    let mut payload = Vec::new();
    for field in line.split(' ') {
        let (k, v) = field
            .split_once('=')
            .ok_or_else(|| TraceError::Malformed { line: lineno, detail: format!("field `{field}` is not k=v") })?;
        match k {
            "node" => {
                let idx = match node_names.iter().position(|n| n == v) {
                    Some(i) => i,
                    None => {
                        node_names.push(v.to_string());
                        node_names.len() - 1
                    }
                };
                node = Some(NodeId(idx));
            }
            "layer" => {
                layer = Some(Layer::parse(v).ok_or_else(|| TraceError::Malformed {
                    line: lineno,
                    detail: format!("unknown layer `{v}`"),
                })?)
            }
            "time_ns" => {
                time = Some(SimTime::from_ns(v.parse().map_err(|_| TraceError::Malformed {
                    line: lineno,
                    detail: format!("bad time_ns `{v}`"),
                })?))
            }
            "name" => {
                name = Some(TraceName::parse(v).ok_or_else(|| TraceError::Malformed {
                    line: lineno,
                    detail: format!("unknown event name `{v}`"),
                })?)
            }
            other => {
                // Payload keys are dynamic; intern the handful we know.
                payload.push((intern_key(other), v.to_string()));
            }
        }
    }
    Ok(TraceEvent {
        node: node.ok_or(TraceError::MissingField { line: lineno, field: "node" })?,
        layer: layer.ok_or(TraceError::MissingField { line: lineno, field: "layer" })?,
        time: time.ok_or(TraceError::MissingField { line: lineno, field: "time_ns" })?,
        name: name.ok_or(TraceError::MissingField { line: lineno, field: "name" })?,
        payload,
    })
}

fn intern_key(k: &str) -> &'static str {
    const KEYS: &[&str] = &[
        "pid", "op", "kind", "outcome", "label", "clk_us", "sub", "iter", "task", "socket",
        "vq", "phys", "bin", "detail", "cr", "bell", "prog", "reason", "req", "angle_n",
        "angle_d",
    ];
    KEYS.iter().find(|x| **x == k).copied().unwrap_or("arg")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_line_format() {
        let mut log = TraceLog::new(vec!["client".into(), "server".into()]);
        log.header.push("seed = 42".into());
        log.record(
            NodeId(0),
            Layer::Qnpu,
            SimTime::from_us(120),
            TraceName::ProcmgrSubroutineAdded(0),
            vec![("sub", "C1".into())],
        );
        log.record(
            NodeId(1),
            Layer::Cnpu,
            SimTime::from_us(130),
            TraceName::ResultRcvd,
            vec![("clk_us", "130.000".into()), ("sub", "S1".into())],
        );
        let text = log.to_string_lossy();
        let parsed = TraceLog::read_from(text.as_bytes()).unwrap();
        assert_eq!(parsed.events.len(), 2);
        assert_eq!(parsed.node_names, vec!["client", "server"]);
        assert_eq!(parsed.events[0].name, TraceName::ProcmgrSubroutineAdded(0));
        assert_eq!(parsed.events[0].get("sub"), Some("C1"));
        assert_eq!(parsed.events[1].get_f64("clk_us"), Some(130.0));
        let text2 = parsed.to_string_lossy();
        assert_eq!(text, text2);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = "node=client layer=QNPU time_ns=10 name=NOT_A_REAL_EVENT\n";
        let err = TraceLog::read_from(text.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 1"), "got: {err}");
    }

    #[test]
    fn name_display_parse_round_trip() {
        let names = [
            TraceName::SubroutineSent,
            TraceName::ProcmgrSubroutineAdded(3),
            TraceName::ProcmgrSubroutineDone(9),
            TraceName::QdeviceProduceCmd("ENT"),
            TraceName::EgpNeiOk,
        ];
        for n in names {
            let s = n.to_string();
            assert_eq!(TraceName::parse(&s), Some(n), "{s}");
        }
    }
}
