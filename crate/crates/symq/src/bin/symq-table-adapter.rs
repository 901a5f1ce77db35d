//! Serves a table file over the oracle protocol.
//!
//! Usage: `symq-table-adapter TABLE.json [NAME]`. Malformed requests get an
//! `{"id": .., "error": ..}` line and the adapter keeps serving.

use std::io::{self, BufRead, Write};
use std::path::Path;
use std::process::ExitCode;

use serde_json::{json, Value};
use symq::formats::read_table;
use symq_core::SubsetMask;

fn main() -> ExitCode {
    let mut args = std::env::args().skip(1);
    let Some(path) = args.next() else {
        eprintln!("usage: symq-table-adapter TABLE.json [NAME]");
        return ExitCode::from(2);
    };
    let name = args.next().unwrap_or_else(|| "table".to_string());
    let table = match read_table(Path::new(&path)) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let n = symq_core::SetFunction::n(&table);
    let stdout = io::stdout();
    let mut out = stdout.lock();
    if writeln!(out, "{}", json!({ "n": n, "name": name })).and_then(|_| out.flush()).is_err() {
        return ExitCode::FAILURE;
    }
    for line in io::stdin().lock().lines() {
        let Ok(line) = line else { break };
        if line.trim().is_empty() {
            continue;
        }
        let reply = answer(&table, n, &line);
        if writeln!(out, "{reply}").and_then(|_| out.flush()).is_err() {
            break;
        }
    }
    ExitCode::SUCCESS
}

fn answer(table: &symq_core::TableGame, n: usize, line: &str) -> Value {
    let request: Value = match serde_json::from_str(line) {
        Ok(v) => v,
        Err(e) => return json!({ "id": null, "error": format!("malformed request: {e}") }),
    };
    let id = request.get("id").cloned().unwrap_or(Value::Null);
    let indices: Option<Vec<usize>> = request
        .get("subset")
        .and_then(Value::as_array)
        .and_then(|a| a.iter().map(|x| x.as_u64().map(|i| i as usize)).collect());
    let Some(indices) = indices else {
        return json!({ "id": id, "error": "request needs a `subset` array of indices" });
    };
    match SubsetMask::from_indices(indices, n).and_then(|s| table.raw(s)) {
        Ok(v) => json!({ "id": id, "value": v }),
        Err(e) => json!({ "id": id, "error": e.to_string() }),
    }
}
