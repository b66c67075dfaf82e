//! RunReport: the JSON record every command emits.

use std::time::Instant;

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::formats::num;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug)]
pub struct RunReport {
    command: String,
    inputs: Map<String, Value>,
    params: Map<String, Value>,
    metrics: Map<String, Value>,
    claims: Map<String, Value>,
    budget: Map<String, Value>,
    artifacts: Vec<String>,
    timings: Option<Map<String, Value>>,
    failure: Option<(String, &'static str, i32)>,
    started: Instant,
}

impl RunReport {
    pub fn new(command: &str, timings: bool) -> Self {
        Self {
            command: command.into(),
            inputs: Map::new(),
            params: Map::new(),
            metrics: Map::new(),
            claims: Map::new(),
            budget: Map::new(),
            artifacts: Vec::new(),
            timings: timings.then(Map::new),
            failure: None,
            started: Instant::now(),
        }
    }

    /// Records an input file by label, source description and content digest.
    pub fn input(&mut self, label: &str, source: &str, bytes: &[u8]) {
        self.inputs.insert(label.into(), json!({"source": source, "sha256": sha256_hex(bytes)}));
    }

    pub fn param(&mut self, key: &str, value: impl Into<Value>) {
        self.params.insert(key.into(), value.into());
    }

    pub fn metric(&mut self, key: &str, value: impl Into<Value>) {
        self.metrics.insert(key.into(), value.into());
    }

    /// `value ≤ bound`, with the origin of the bound spelled out.
    pub fn claim(&mut self, key: &str, value: f64, bound: f64, source: &str) -> bool {
        let ok = value <= bound;
        self.claims.insert(
            key.into(),
            json!({"value": num(value), "bound": num(bound), "source": source, "ok": ok}),
        );
        ok
    }

    pub fn budget(&mut self, key: &str, value: f64) {
        self.budget.insert(key.into(), num(value));
    }

    pub fn artifact(&mut self, name: &str) {
        self.artifacts.push(name.into());
    }

    /// Runs `f` and records its wall time under `phase` when timings are on.
    pub fn timed<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        if let Some(t) = &mut self.timings {
            t.insert(phase.into(), num(start.elapsed().as_secs_f64()));
        }
        out
    }

    /// First failing claim, if any.
    pub fn failed_claim(&self) -> Option<String> {
        self.claims.iter().find(|(_, c)| c["ok"] == Value::Bool(false)).map(|(k, c)| {
            format!("{k} = {} exceeds {} ({})", c["value"], c["bound"], c["source"].as_str().unwrap_or(""))
        })
    }

    pub fn fail(&mut self, reason: String, kind: &'static str, exit_code: i32) {
        self.failure = Some((reason, kind, exit_code));
    }

    pub fn to_value(&self) -> Value {
        let mut v = json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "inputs": self.inputs,
            "params": self.params,
            "metrics": self.metrics,
            "claims": self.claims,
            "error_budget": self.budget,
            "artifacts": self.artifacts,
            "passed": self.failure.is_none(),
        });
        match &self.failure {
            Some((reason, kind, code)) => {
                v["reason"] = reason.as_str().into();
                v["failure"] = (*kind).into();
                v["exit_code"] = (*code).into();
            }
            None => v["exit_code"] = 0.into(),
        }
        if let Some(t) = &self.timings {
            let mut t = t.clone();
            t.insert("total".into(), num(self.started.elapsed().as_secs_f64()));
            v["timings"] = Value::Object(t);
        }
        v
    }
}
