//! CSV emission and parsing for references, footsteps and simulation logs.
//!
//! Floats are written with 17 significant digits so every file parses back
//! to the exact in-memory values.

use std::io::{Read, Write};

use crate::error::IoError;
use crate::planner::{Footstep, FootstepPlan, ReferenceSample, ReferenceTrajectory, Side};
use crate::sim::{AxisLog, LogRow};

pub const REFERENCE_COLUMNS: [&str; 13] = [
    "t", "zmp_x", "zmp_y", "com_x", "com_y", "comvel_x", "comvel_y", "dcm_x", "dcm_y", "swing_x", "swing_y",
    "swing_z", "support_idx",
];

pub const FOOTSTEP_COLUMNS: [&str; 5] = ["i", "x", "y", "side", "t_start"];

const AXIS_FIELDS: [&str; 13] = [
    "com_true",
    "dcm_true",
    "com_est",
    "dcm_est",
    "com_ref",
    "dcm_ref",
    "zmp_ref",
    "zmp_cmd",
    "zmp_sat",
    "support_center",
    "dcm_pred",
    "offset",
    "accel_ext",
];

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_f64(field: &str) -> Result<f64, IoError> {
    field
        .trim()
        .parse()
        .map_err(|_| IoError::Malformed(format!("bad number `{field}`")))
}

fn parse_usize(field: &str) -> Result<usize, IoError> {
    field
        .trim()
        .parse()
        .map_err(|_| IoError::Malformed(format!("bad index `{field}`")))
}

fn check_header<R: Read>(reader: &mut csv::Reader<R>, expected: &[String]) -> Result<(), IoError> {
    let headers = reader.headers()?;
    if headers.iter().ne(expected.iter().map(String::as_str)) {
        return Err(IoError::Malformed(format!(
            "unexpected header `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    Ok(())
}

fn owned(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|c| c.to_string()).collect()
}

pub fn write_reference_csv<W: Write>(out: W, reference: &ReferenceTrajectory) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REFERENCE_COLUMNS)?;
    for s in &reference.samples {
        let mut record: Vec<String> = [
            s.t, s.zmp[0], s.zmp[1], s.com[0], s.com[1], s.com_vel[0], s.com_vel[1], s.dcm[0], s.dcm[1], s.swing[0],
            s.swing[1], s.swing[2],
        ]
        .iter()
        .map(|&v| fmt_f64(v))
        .collect();
        record.push(s.support_idx.to_string());
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_reference_csv<R: Read>(input: R) -> Result<Vec<ReferenceSample>, IoError> {
    let mut reader = csv::Reader::from_reader(input);
    check_header(&mut reader, &owned(&REFERENCE_COLUMNS))?;
    let mut samples = Vec::new();
    for record in reader.records() {
        let record = record?;
        let v = |i: usize| parse_f64(&record[i]);
        samples.push(ReferenceSample {
            t: v(0)?,
            zmp: [v(1)?, v(2)?],
            com: [v(3)?, v(4)?],
            com_vel: [v(5)?, v(6)?],
            dcm: [v(7)?, v(8)?],
            swing: [v(9)?, v(10)?, v(11)?],
            support_idx: parse_usize(&record[12])?,
        });
    }
    Ok(samples)
}

pub fn write_footsteps_csv<W: Write>(out: W, plan: &FootstepPlan) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(FOOTSTEP_COLUMNS)?;
    for (i, step) in plan.steps.iter().enumerate() {
        w.write_record([
            i.to_string(),
            fmt_f64(step.x),
            fmt_f64(step.y),
            step.side.as_str().to_string(),
            fmt_f64(step.t_start),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_footsteps_csv<R: Read>(input: R) -> Result<Vec<Footstep>, IoError> {
    let mut reader = csv::Reader::from_reader(input);
    check_header(&mut reader, &owned(&FOOTSTEP_COLUMNS))?;
    let mut steps = Vec::new();
    for (expected, record) in reader.records().enumerate() {
        let record = record?;
        if parse_usize(&record[0])? != expected {
            return Err(IoError::Malformed(format!("footstep index out of order at row {expected}")));
        }
        let side = match &record[3] {
            "left" => Side::Left,
            "right" => Side::Right,
            other => return Err(IoError::Malformed(format!("unknown side `{other}`"))),
        };
        steps.push(Footstep {
            x: parse_f64(&record[1])?,
            y: parse_f64(&record[2])?,
            side,
            t_start: parse_f64(&record[4])?,
        });
    }
    Ok(steps)
}

pub fn log_columns() -> Vec<String> {
    let mut cols = owned(&["t", "support_idx", "falling"]);
    for suffix in ["x", "y"] {
        cols.extend(AXIS_FIELDS.iter().map(|f| format!("{f}_{suffix}")));
    }
    cols
}

fn axis_values(a: &AxisLog) -> [f64; 13] {
    [
        a.com_true,
        a.dcm_true,
        a.com_est,
        a.dcm_est,
        a.com_ref,
        a.dcm_ref,
        a.zmp_ref,
        a.zmp_cmd,
        a.zmp_sat,
        a.support_center,
        a.dcm_pred,
        a.offset,
        a.accel_ext,
    ]
}

fn axis_from(v: &[f64]) -> AxisLog {
    AxisLog {
        com_true: v[0],
        dcm_true: v[1],
        com_est: v[2],
        dcm_est: v[3],
        com_ref: v[4],
        dcm_ref: v[5],
        zmp_ref: v[6],
        zmp_cmd: v[7],
        zmp_sat: v[8],
        support_center: v[9],
        dcm_pred: v[10],
        offset: v[11],
        accel_ext: v[12],
    }
}

pub fn write_log_csv<W: Write>(out: W, log: &[LogRow]) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(log_columns())?;
    for row in log {
        let mut record = vec![fmt_f64(row.t), row.support_idx.to_string(), u8::from(row.falling).to_string()];
        for axis in &row.axes {
            record.extend(axis_values(axis).iter().map(|&v| fmt_f64(v)));
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_log_csv<R: Read>(input: R) -> Result<Vec<LogRow>, IoError> {
    let mut reader = csv::Reader::from_reader(input);
    check_header(&mut reader, &log_columns())?;
    let n = AXIS_FIELDS.len();
    let mut log = Vec::new();
    for record in reader.records() {
        let record = record?;
        let values = (3..3 + 2 * n)
            .map(|i| parse_f64(&record[i]))
            .collect::<Result<Vec<_>, _>>()?;
        let falling = match &record[2] {
            "0" => false,
            "1" => true,
            other => return Err(IoError::Malformed(format!("bad falling flag `{other}`"))),
        };
        log.push(LogRow {
            t: parse_f64(&record[0])?,
            support_idx: parse_usize(&record[1])?,
            falling,
            axes: [axis_from(&values[..n]), axis_from(&values[n..])],
        });
    }
    Ok(log)
}
