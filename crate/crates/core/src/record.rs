//! Time-series CSV and metrics JSON.
//!
//! The CSV column order is frozen; floats are written in shortest round-trip
//! form so `read_csv(write_csv(ts))` reproduces every sample bit for bit.

use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::aero::WindSample;
use crate::control::OutputVector;
use crate::machine::DqCurrents;
use crate::plant::{PlantInput, PlantState, StateVector, INPUT_DIM, STATE_DIM};
use crate::simkit::Sample;

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unexpected CSV header: {0}")]
    Header(String),
    #[error("row {row}: {reason}")]
    Row { row: usize, reason: String },
}

/// Column names, in order.
pub const COLUMNS: [&str; 49] = [
    "t",
    "beta1",
    "beta2",
    "psi",
    "psi_dot",
    "i_a1",
    "i_b1",
    "i_c1",
    "omega1",
    "i_a2",
    "i_b2",
    "i_c2",
    "omega2",
    "theta_e1",
    "theta_e2",
    "delta_beta",
    "v_an1",
    "v_bn1",
    "v_cn1",
    "v_an2",
    "v_bn2",
    "v_cn2",
    "y_yaw",
    "y_id1",
    "y_omega1",
    "y_ih1",
    "y_id2",
    "y_omega2",
    "y_ih2",
    "i_d1",
    "i_q1",
    "i_h1",
    "i_d2",
    "i_q2",
    "i_h2",
    "gamma_em1",
    "gamma_em2",
    "gamma_a1",
    "gamma_a2",
    "drag1",
    "drag2",
    "wind_speed",
    "wind_speed_dot",
    "wind_dir",
    "wind_dir_dot",
    "wind_dir_ddot",
    "wind_dir_dddot",
    "i_sum1",
    "i_sum2",
];

const COLUMN_COUNT: usize = COLUMNS.len();

fn row(s: &Sample) -> Vec<f64> {
    let mut v = Vec::with_capacity(COLUMN_COUNT);
    v.push(s.t);
    v.extend(s.state.to_vector().iter());
    v.extend(s.input.to_vector().iter());
    v.extend(s.outputs.listing_order());
    for dq in &s.dq {
        v.extend([dq.d, dq.q, dq.h]);
    }
    v.extend(s.em_torque);
    v.extend(s.aero_torque);
    v.extend(s.drag);
    let w = &s.wind;
    v.extend([
        w.speed,
        w.speed_dot,
        w.direction,
        w.direction_dot,
        w.direction_ddot,
        w.direction_dddot,
    ]);
    v.push(s.state.currents(0).sum());
    v.push(s.state.currents(1).sum());
    v
}

fn sample_from(v: &[f64]) -> Sample {
    let mut k = 0;
    let mut take = |n: usize| {
        let out = &v[k..k + n];
        k += n;
        out
    };
    let t = take(1)[0];
    let state = PlantState::from_vector(&StateVector::from_column_slice(take(STATE_DIM)));
    let input = PlantInput::from_vector(&crate::plant::InputVector::from_column_slice(take(INPUT_DIM)));
    let y = take(7);
    let outputs = OutputVector {
        yaw_error: y[0],
        i_d1: y[1],
        speed_error1: y[2],
        i_h1: y[3],
        i_d2: y[4],
        speed_error2: y[5],
        i_h2: y[6],
    };
    let dq_raw = take(6);
    let dq = [
        DqCurrents {
            d: dq_raw[0],
            q: dq_raw[1],
            h: dq_raw[2],
        },
        DqCurrents {
            d: dq_raw[3],
            q: dq_raw[4],
            h: dq_raw[5],
        },
    ];
    let em = take(2);
    let aero = take(2);
    let drag = take(2);
    let w = take(6);
    Sample {
        t,
        state,
        input,
        outputs,
        dq,
        em_torque: [em[0], em[1]],
        aero_torque: [aero[0], aero[1]],
        drag: [drag[0], drag[1]],
        wind: WindSample {
            speed: w[0],
            speed_dot: w[1],
            direction: w[2],
            direction_dot: w[3],
            direction_ddot: w[4],
            direction_dddot: w[5],
        },
    }
}

pub fn write_csv<W: Write>(samples: &[Sample], out: W) -> Result<(), RecordError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    let mut fields: Vec<String> = Vec::with_capacity(COLUMN_COUNT);
    for s in samples {
        fields.clear();
        fields.extend(row(s).iter().map(|v| v.to_string()));
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<Sample>, RecordError> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(COLUMNS) {
        return Err(RecordError::Header(header.iter().collect::<Vec<_>>().join(",")));
    }
    let mut samples = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record?;
        let values = record
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| RecordError::Row {
                row: i + 1,
                reason: e.to_string(),
            })?;
        if values.len() != COLUMN_COUNT {
            return Err(RecordError::Row {
                row: i + 1,
                reason: format!("expected {COLUMN_COUNT} fields, found {}", values.len()),
            });
        }
        samples.push(sample_from(&values));
    }
    Ok(samples)
}

pub fn write_csv_file(samples: &[Sample], path: &Path) -> Result<(), RecordError> {
    let file = std::fs::File::create(path)?;
    write_csv(samples, std::io::BufWriter::new(file))
}

pub fn read_csv_file(path: &Path) -> Result<Vec<Sample>, RecordError> {
    read_csv(std::io::BufReader::new(std::fs::File::open(path)?))
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), RecordError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
