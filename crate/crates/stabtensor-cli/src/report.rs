//! Reports: human-readable lines plus a JSON tree with the same data.
//! Timings appear only in the text rendering, so machine output is reproducible.

use std::time::Duration;

use serde_json::{json, Map, Value};
use stabtensor::injective::Truncation;
use stabtensor::module::{image, kernel, FpModule, ModuleMap};
use stabtensor::stable::Tower;

#[derive(Clone, Debug)]
pub struct Report {
    pub lines: Vec<String>,
    pub data: Map<String, Value>,
    /// False when a requested verification failed or a certificate was inconclusive.
    pub passed: bool,
    pub elapsed: Option<Duration>,
}

impl Report {
    pub fn new(command: &str, ring: &str) -> Self {
        let mut data = Map::new();
        data.insert("command".into(), json!(command));
        data.insert("ring".into(), json!(ring));
        Report { lines: vec![format!("{command} over {ring}")], data, passed: true, elapsed: None }
    }

    pub fn line(&mut self, s: impl Into<String>) {
        self.lines.push(s.into());
    }

    pub fn set(&mut self, key: &str, v: Value) {
        self.data.insert(key.into(), v);
    }

    /// Record a named check, failing the report when it does not hold.
    pub fn check(&mut self, name: &str, ok: bool) {
        self.passed &= ok;
        self.line(format!("  [{}] {name}", if ok { "PASS" } else { "FAIL" }));
        let checks = self.data.entry("checks").or_insert_with(|| Value::Object(Map::new()));
        checks.as_object_mut().expect("checks is an object").insert(name.into(), json!(ok));
    }

    pub fn text(&self) -> String {
        let mut out = self.lines.join("\n");
        out.push_str(&format!("\nresult: {}", if self.passed { "PASS" } else { "FAIL" }));
        if let Some(t) = self.elapsed {
            out.push_str(&format!("\nelapsed: {:.3}s", t.as_secs_f64()));
        }
        out.push('\n');
        out
    }

    pub fn machine(&self) -> String {
        let mut data = self.data.clone();
        data.insert("passed".into(), json!(self.passed));
        let mut s = serde_json::to_string_pretty(&Value::Object(data)).expect("serializable");
        s.push('\n');
        s
    }
}

pub fn truncation_value(t: Option<&Truncation>, certified: Option<bool>) -> Value {
    match t {
        None => json!("exact"),
        Some(t) => json!({
            "primes": t.primes().iter().collect::<Vec<_>>(),
            "level": t.level(),
            "certified": certified,
        }),
    }
}

pub fn truncation_text(t: Option<&Truncation>, certified: Option<bool>) -> String {
    match t {
        None => "exact".into(),
        Some(t) => {
            let primes: Vec<String> = t.primes().iter().map(u64::to_string).collect();
            let status = match certified {
                Some(true) => "certified",
                Some(false) => "NOT certified",
                None => "unchecked",
            };
            format!("primes {{{}}} level {} ({status})", primes.join(", "), t.level())
        }
    }
}

/// Kernel and image of a map, with its mono/epi status.
pub fn map_summary(f: &ModuleMap) -> Value {
    json!({
        "kernel": kernel(f).0.to_string(),
        "image": image(f).0.to_string(),
        "mono": f.is_mono(),
        "epi": f.is_epi(),
    })
}

fn map_text(f: &ModuleMap) -> String {
    let kind = match (f.is_mono(), f.is_epi()) {
        (true, true) => "iso",
        (true, false) => "mono",
        (false, true) => "epi",
        _ => "",
    };
    format!("ker {}, im {} {kind}", kernel(f).0, image(f).0).trim_end().to_string()
}

pub fn module_value(m: &FpModule) -> Value {
    json!(m.to_string())
}

/// Stage table, certificate, limit and truncation of a tower.
pub fn add_tower(r: &mut Report, key: &str, t: &Tower) {
    r.line(format!("  {key} (n = {}): stages {}..={}", t.degree, t.start, t.last()));
    let mut stages = Vec::new();
    for k in t.start..=t.last() {
        let mut entry = json!({ "stage": k, "module": t.stage(k).to_string() });
        let mut row = format!("    {k:>3}  {}", t.stage(k));
        if k > t.start {
            entry["map"] = map_summary(t.map(k));
            row.push_str(&format!("   <- {}", map_text(t.map(k))));
        }
        r.line(row);
        stages.push(entry);
    }
    let limit = t.limit.as_ref().map(FpModule::to_string);
    r.line(format!("    certificate {}, limit {}", t.certificate, limit.as_deref().unwrap_or("uncertified")));
    r.line(format!("    truncation {}", truncation_text(t.truncation.as_ref(), t.truncation_certified)));
    r.set(
        key,
        json!({
            "degree": t.degree,
            "start": t.start,
            "stages": stages,
            "window": t.window.map(|(p, l)| json!({ "from": p, "period": l })),
            "certificate": t.certificate.to_string(),
            "limit": limit,
            "truncation": truncation_value(t.truncation.as_ref(), t.truncation_certified),
        }),
    );
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn machine_output_omits_timings() {
        let mut r = Report::new("stabilize", "Z");
        r.check("δ iso", true);
        r.elapsed = Some(Duration::from_millis(5));
        assert!(r.text().contains("elapsed"));
        assert!(!r.machine().contains("elapsed"));
        assert!(r.machine().contains("\"δ iso\": true"));
    }

    #[test]
    fn failed_checks_fail_the_report() {
        let mut r = Report::new("verify-cubes", "Z/4");
        r.check("a", true);
        r.check("b", false);
        assert!(!r.passed);
        assert!(r.text().contains("[FAIL] b"));
    }
}
