//! Output schemas, shipped in `schemas/` and embedded at build time.

pub const SCHEMAS: &[(&str, &str)] = &[
    ("box", include_str!("../schemas/box.json")),
    ("cc", include_str!("../schemas/cc.json")),
    ("check", include_str!("../schemas/check.json")),
    ("chsh", include_str!("../schemas/chsh.json")),
    ("circuit", include_str!("../schemas/circuit.json")),
    ("classify", include_str!("../schemas/classify.json")),
    ("compile", include_str!("../schemas/compile.json")),
    ("constraints", include_str!("../schemas/constraints.json")),
    ("decompose", include_str!("../schemas/decompose.json")),
    ("eval", include_str!("../schemas/eval.json")),
    ("local", include_str!("../schemas/local.json")),
    ("local-search", include_str!("../schemas/local-search.json")),
    ("protocol", include_str!("../schemas/protocol.json")),
    ("search", include_str!("../schemas/search.json")),
    ("simulate", include_str!("../schemas/simulate.json")),
    ("truth-table", include_str!("../schemas/truth-table.json")),
    ("verify", include_str!("../schemas/verify.json")),
    ("vertices", include_str!("../schemas/vertices.json")),
];

/// Schema name for the output of a command path such as `["box", "chsh"]`.
pub fn name_for(words: &[&str]) -> Option<&'static str> {
    Some(match words {
        ["box", "check"] => "check",
        ["box", "local"] => "local",
        ["box", "marginal"] | ["box", "make", ..] => "box",
        ["box", "chsh"] => "chsh",
        ["circuit", "synth"] => "circuit",
        ["circuit", "eval"] => "eval",
        ["circuit", "table"] => "truth-table",
        ["compile", ..] => "compile",
        ["simulate", ..] => "simulate",
        ["verify", ..] => "verify",
        ["cc", ..] => "cc",
        ["polytope", "vertices"] => "vertices",
        ["polytope", "classify", ..] => "classify",
        ["polytope", "decompose", ..] => "decompose",
        ["cluster", "constraints"] => "constraints",
        ["cluster", "ghz"] => "local-search",
        ["cluster", "search"] => "search",
        _ => return None,
    })
}

fn compact(text: &str) -> String {
    let v: serde_json::Value = serde_json::from_str(text).expect("shipped schemas are valid JSON");
    v.to_string()
}

/// One schema for a command path, or every schema keyed by name when the
/// path is empty.
pub fn lookup(words: &[&str]) -> Option<String> {
    if words.is_empty() {
        let all: serde_json::Map<String, serde_json::Value> =
            SCHEMAS.iter().map(|(k, v)| (k.to_string(), serde_json::from_str(v).expect("shipped schemas are valid JSON"))).collect();
        return Some(serde_json::Value::Object(all).to_string());
    }
    let name = name_for(words)?;
    SCHEMAS.iter().find(|(k, _)| *k == name).map(|(_, v)| compact(v))
}
