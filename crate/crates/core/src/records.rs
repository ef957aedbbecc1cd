//! Per-iteration experiment results, written as a delimited table alongside
//! the trace.

use crate::angle::Angle;
use crate::qbackend::BellLabel;
use std::fmt::Write as _;
use std::io::BufRead;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RecordKind {
    /// One delegated-computation circuit execution.
    Dqc,
    /// One tomography outcome of a local-gate-tomography block.
    Lgt,
}

#[derive(Clone, Debug)]
pub struct IterationRecord {
    pub kind: RecordKind,
    pub program: String,
    pub iteration: u32,
    /// Measurement basis tag: +psi/-psi for DQC, +X..-Z for LGT.
    pub basis: String,
    pub alpha: Option<Angle>,
    pub theta: Option<Angle>,
    pub m_c: Option<u8>,
    pub delta: Option<Angle>,
    pub m_s: Option<u8>,
    pub outcome: Option<u8>,
    pub bell_label: Option<BellLabel>,
    pub t_mem_ns: Option<u64>,
    /// Exact pre-collapse probability of outcome 0 for the final
    /// measurement (simulator-only ground truth).
    pub p_zero: Option<f64>,
    pub cr_client: Option<bool>,
    pub cr_server: Option<bool>,
}

impl IterationRecord {
    pub fn empty(kind: RecordKind, program: &str, iteration: u32, basis: &str) -> IterationRecord {
        IterationRecord {
            kind,
            program: program.to_string(),
            iteration,
            basis: basis.to_string(),
            alpha: None,
            theta: None,
            m_c: None,
            delta: None,
            m_s: None,
            outcome: None,
            bell_label: None,
            t_mem_ns: None,
            p_zero: None,
            cr_client: None,
            cr_server: None,
        }
    }

    pub fn cr_pass(&self) -> bool {
        self.cr_client.unwrap_or(true) && self.cr_server.unwrap_or(true)
    }
}

const COLUMNS: &str =
    "kind\tprogram\titeration\tbasis\talpha\ttheta\tm_c\tdelta\tm_s\toutcome\tbell\tt_mem_ns\tp_zero\tcr_client\tcr_server";

fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    match v {
        Some(x) => x.to_string(),
        None => "-".to_string(),
    }
}

fn angle_field(a: &Option<Angle>) -> String {
    match a {
        Some(a) => format!("{}/{}", a.n, a.d),
        None => "-".to_string(),
    }
}

pub fn write_records(records: &[IterationRecord]) -> String {
    let mut out = String::new();
    out.push_str(COLUMNS);
    out.push('\n');
    for r in records {
        let kind = match r.kind {
            RecordKind::Dqc => "dqc",
            RecordKind::Lgt => "lgt",
        };
        let bell = match r.bell_label {
            Some(l) => l.as_str().to_string(),
            None => "-".into(),
        };
        let _ = writeln!(
            out,
            "{kind}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{bell}\t{}\t{}\t{}\t{}",
            r.program,
            r.iteration,
            r.basis,
            angle_field(&r.alpha),
            angle_field(&r.theta),
            opt(&r.m_c),
            angle_field(&r.delta),
            opt(&r.m_s),
            opt(&r.outcome),
            opt(&r.t_mem_ns),
            opt(&r.p_zero),
            opt(&r.cr_client),
            opt(&r.cr_server),
        );
    }
    out
}

fn parse_opt<T: std::str::FromStr>(s: &str) -> Option<T> {
    if s == "-" {
        None
    } else {
        s.parse().ok()
    }
}

fn parse_angle(s: &str) -> Option<Angle> {
    let (n, d) = s.split_once('/')?;
    Some(Angle::new(n.parse().ok()?, d.parse().ok()?))
}

pub fn read_records<R: BufRead>(r: R) -> std::io::Result<Vec<IterationRecord>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 15 {
            return Err(std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("results line {}: expected 15 fields, got {}", i + 1, f.len()),
            ));
        }
        out.push(IterationRecord {
            kind: if f[0] == "dqc" { RecordKind::Dqc } else { RecordKind::Lgt },
            program: f[1].to_string(),
            iteration: f[2].parse().unwrap_or(0),
            basis: f[3].to_string(),
            alpha: parse_angle(f[4]),
            theta: parse_angle(f[5]),
            m_c: parse_opt(f[6]),
            delta: parse_angle(f[7]),
            m_s: parse_opt(f[8]),
            outcome: parse_opt(f[9]),
            bell_label: match f[10] {
                "PSI_PLUS" => Some(BellLabel::PsiPlus),
                "PSI_MINUS" => Some(BellLabel::PsiMinus),
                _ => None,
            },
            t_mem_ns: parse_opt(f[11]),
            p_zero: parse_opt(f[12]),
            cr_client: parse_opt(f[13]),
            cr_server: parse_opt(f[14]),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_round_trip() {
        let mut r = IterationRecord::empty(RecordKind::Dqc, "dqc-0", 3, "+psi");
        r.alpha = Some(Angle::new(1, 1));
        r.m_c = Some(1);
        r.m_s = Some(0);
        r.bell_label = Some(BellLabel::PsiMinus);
        r.t_mem_ns = Some(4_800_000);
        r.p_zero = Some(0.729);
        r.cr_client = Some(true);
        let text = write_records(&[r.clone()]);
        let back = read_records(text.as_bytes()).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].program, "dqc-0");
        assert_eq!(back[0].alpha, r.alpha);
        assert_eq!(back[0].t_mem_ns, r.t_mem_ns);
        assert_eq!(back[0].bell_label, r.bell_label);
        assert_eq!(back[0].cr_client, Some(true));
        assert_eq!(back[0].m_s, Some(0));
    }
}
