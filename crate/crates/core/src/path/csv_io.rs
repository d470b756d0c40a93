use std::io::{Read, Write};

use super::{CadlagPath, Event, EventKind, PathError, TailFlag};

const INITIAL_KIND: &str = "INIT";

/// Writes `t,value,kind`: a `t=0` row with the initial value, then one row per event.
pub fn write_csv<W: Write>(path: &CadlagPath, writer: W) -> Result<(), PathError> {
    let mut w = csv::Writer::from_writer(writer);
    let err = |e: csv::Error| PathError::Csv(e.to_string());
    w.write_record(["t", "value", "kind"]).map_err(err)?;
    w.write_record(["0".to_string(), fmt(path.initial_value()), INITIAL_KIND.to_string()])
        .map_err(err)?;
    for e in path.events() {
        w.write_record([fmt(e.time), fmt(e.value), e.kind.as_str().to_string()])
            .map_err(err)?;
    }
    w.flush().map_err(|e| PathError::Csv(e.to_string()))
}

pub fn read_csv<R: Read>(reader: R, horizon: f64, tail: TailFlag) -> Result<CadlagPath, PathError> {
    let mut r = csv::Reader::from_reader(reader);
    let mut initial = None;
    let mut events = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| PathError::Csv(e.to_string()))?;
        let field = |i: usize| rec.get(i).ok_or_else(|| PathError::Csv(format!("missing column {i}")));
        let num = |s: &str| s.parse::<f64>().map_err(|e| PathError::Csv(e.to_string()));
        let t = num(field(0)?)?;
        let v = num(field(1)?)?;
        let kind = match field(2)? {
            INITIAL_KIND => {
                initial = Some(v);
                continue;
            }
            "JUMP" => EventKind::Jump,
            "GRID" => EventKind::Grid,
            "DRIFT" => EventKind::Drift,
            other => return Err(PathError::Csv(format!("unknown kind {other}"))),
        };
        events.push(Event::new(t, v, kind));
    }
    let initial = initial.ok_or_else(|| PathError::Csv("missing initial row".into()))?;
    CadlagPath::new(initial, events, horizon, tail)
}

// Shortest representation that parses back to the same f64.
fn fmt(x: f64) -> String {
    format!("{x:?}")
}
