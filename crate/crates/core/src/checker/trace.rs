//! Counterexample traces: construction, human and JSON rendering, loading and replay.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use super::explore::{Stats, Verdict};
use super::ltl::FALSE;
use super::model::{GlobalState, Label, Step, SystemModel};
use crate::semantics::Fault;

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct TraceEvent {
    pub target: String,
    pub packet: BTreeMap<String, u64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub lost: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct RegisterChange {
    pub register: String,
    pub before: u64,
    pub after: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct TraceStep {
    pub idx: usize,
    pub entity: String,
    pub action: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub packet: Option<BTreeMap<String, u64>>,
    pub events: Vec<TraceEvent>,
    pub valuations: BTreeMap<String, bool>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub registers: Vec<RegisterChange>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub faults: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ReplayInfo {
    pub labels: Vec<Label>,
    pub final_state_sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Trace {
    pub verdict: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub property: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub stats: Stats,
    pub initial_valuations: BTreeMap<String, bool>,
    pub steps: Vec<TraceStep>,
    pub replay: ReplayInfo,
}

pub fn state_digest(s: &GlobalState) -> String {
    Sha256::digest(s.canonical()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Atom values keyed `rule` (single atom) or `rule#k`, plus local assertions.
pub fn valuations(model: &SystemModel, s: &GlobalState, faults: &[Fault]) -> BTreeMap<String, bool> {
    let v = model.atom_values(s);
    let mut out = BTreeMap::new();
    for p in &model.properties {
        if p.atoms.len() == 1 {
            out.insert(p.name.clone(), v[p.atoms[0]]);
        } else {
            for (k, &a) in p.atoms.iter().enumerate() {
                out.insert(format!("{}#{k}", p.name), v[a]);
            }
        }
    }
    for ((d, id), name) in &model.assert_names {
        let failed = faults.iter().any(|f| matches!(f, Fault::AssertFailed { device, id: i, .. } if *i == *id && model.aliases.get(*d) == Some(device)));
        out.insert(name.clone(), !failed);
    }
    out
}

fn action(l: &Label) -> String {
    match l {
        Label::React { lost, .. } if lost.is_empty() => "react".into(),
        Label::React { lost, .. } => format!("react, {} lost", lost.len()),
        Label::HostSend { .. } => "send".into(),
        Label::HostChoose { alt, .. } => format!("choose {alt}"),
    }
}

fn register_changes(model: &SystemModel, before: &GlobalState, l: &Label, after: &GlobalState) -> Vec<RegisterChange> {
    let Label::React { actor, .. } = l else { return vec![] };
    let prog = &model.ctxs[*actor].prog;
    let mut out = Vec::new();
    for (ri, r) in prog.registers.iter().enumerate() {
        let (b, a) = (&before.actors[*actor].registers[ri], &after.actors[*actor].registers[ri]);
        for i in 0..b.len() {
            if b[i] != a[i] {
                out.push(RegisterChange { register: format!("{}.{}[{i}]", model.aliases[*actor], r.name), before: b[i], after: a[i] });
            }
        }
    }
    out
}

impl Trace {
    pub fn from_verdict(model: &SystemModel, v: &Verdict) -> Trace {
        let mut steps = Vec::new();
        let mut prev = &v.initial;
        for (i, st) in v.path.iter().enumerate() {
            steps.push(trace_step(model, i + 1, prev, st));
            prev = &st.state;
        }
        let (property, reason) = match &v.outcome {
            super::Outcome::Pass => (None, None),
            super::Outcome::Fail { property, reason } => (Some(property.clone()), Some(reason.clone())),
            super::Outcome::Resource { kind, reason } => (Some(kind.as_str().to_string()), Some(reason.clone())),
        };
        Trace {
            verdict: v.outcome.name().to_string(),
            property,
            reason,
            stats: v.stats,
            initial_valuations: valuations(model, &v.initial, &[]),
            steps,
            replay: ReplayInfo { labels: v.path.iter().map(|s| s.label.clone()).collect(), final_state_sha256: state_digest(prev) },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("traces serialize")
    }

    pub fn from_json(text: &str) -> Result<Trace, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_human(&self) -> String {
        let mut o = String::new();
        match &self.property {
            Some(p) => writeln!(o, "verdict: {} ({p})", self.verdict),
            None => writeln!(o, "verdict: {}", self.verdict),
        }
        .unwrap();
        if let Some(r) = &self.reason {
            writeln!(o, "reason: {r}").unwrap();
        }
        writeln!(o, "stats: states={} transitions={} depth={}", self.stats.states, self.stats.transitions, self.stats.depth).unwrap();
        if self.steps.is_empty() {
            return o;
        }
        writeln!(o, "initial: {}", fmt_vals(&self.initial_valuations)).unwrap();
        for s in &self.steps {
            write!(o, "#{} {} {}", s.idx, s.entity, s.action).unwrap();
            if let Some(p) = &s.packet {
                write!(o, " {}", fmt_packet(p)).unwrap();
            }
            o.push('\n');
            for e in &s.events {
                let tag = if e.lost { " (lost)" } else { "" };
                writeln!(o, "    -> {}{tag} {}", e.target, fmt_packet(&e.packet)).unwrap();
            }
            for r in &s.registers {
                writeln!(o, "    {}: {} -> {}", r.register, r.before, r.after).unwrap();
            }
            for f in &s.faults {
                writeln!(o, "    fault: {f}").unwrap();
            }
            for n in &s.notes {
                writeln!(o, "    note: {n}").unwrap();
            }
            writeln!(o, "    {}", fmt_vals(&s.valuations)).unwrap();
        }
        o
    }
}

fn fmt_packet(p: &BTreeMap<String, u64>) -> String {
    let parts: Vec<String> = p.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!("{{{}}}", parts.join(", "))
}

fn fmt_vals(v: &BTreeMap<String, bool>) -> String {
    if v.is_empty() {
        return "(no valuations)".into();
    }
    v.iter().map(|(k, b)| format!("{k}={b}")).collect::<Vec<_>>().join(" ")
}

fn trace_step(model: &SystemModel, idx: usize, before: &GlobalState, st: &Step) -> TraceStep {
    TraceStep {
        idx,
        entity: model.entity(&st.label),
        action: action(&st.label),
        packet: st.packet.as_ref().map(|p| model.packet_fields(p)),
        events: st
            .events
            .iter()
            .map(|e| TraceEvent { target: model.aliases[e.target].clone(), packet: model.packet_fields(&e.packet), lost: e.lost })
            .collect(),
        valuations: valuations(model, &st.state, &st.faults),
        registers: register_changes(model, before, &st.label, &st.state),
        faults: st.faults.iter().map(|f| f.to_string()).collect(),
        notes: st.notes.clone(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReplayError {
    #[error("step {0}: transition `{1}` is not enabled")]
    NotEnabled(usize, String),
    #[error("final state digest differs from the trace")]
    DigestMismatch,
    #[error("unknown property `{0}`")]
    UnknownProperty(String),
    #[error("the replayed run does not violate `{0}`")]
    NotViolated(String),
}

/// States visited by following `labels` from the initial state.
pub fn replay(model: &SystemModel, labels: &[Label]) -> Result<Vec<Step>, ReplayError> {
    let mut s = model.initial_state();
    let mut out = Vec::new();
    for (i, l) in labels.iter().enumerate() {
        let st = model.apply(&s, l).ok_or_else(|| ReplayError::NotEnabled(i + 1, format!("{l:?}")))?;
        s = st.state.clone();
        out.push(st);
    }
    Ok(out)
}

/// Re-run a trace against `model`: the final state must match and, for failures, the
/// named property must be violated by the replayed run.
pub fn check_trace(model: &mut SystemModel, t: &Trace) -> Result<GlobalState, ReplayError> {
    let steps = replay(model, &t.replay.labels)?;
    let last = steps.last().map(|s| s.state.clone()).unwrap_or_else(|| model.initial_state());
    if state_digest(&last) != t.replay.final_state_sha256 {
        return Err(ReplayError::DigestMismatch);
    }
    if t.verdict != "FAIL" {
        return Ok(last);
    }
    let name = t.property.clone().unwrap_or_default();
    if let Some(last_step) = steps.last() {
        if last_step.faults.iter().any(|f| matches!(super::classify_fault(model, f), super::Outcome::Fail { ref property, .. } if *property == name)) {
            return Ok(last);
        }
    }
    let pi = model.properties.iter().position(|p| p.name == name).ok_or_else(|| ReplayError::UnknownProperty(name.clone()))?;
    let mut r = model.properties[pi].formula;
    let v0 = model.atom_values(&model.initial_state());
    r = model.arena.progress(r, &v0);
    for st in &steps {
        if r == FALSE {
            break;
        }
        let v = model.atom_values(&st.state);
        r = model.arena.progress(r, &v);
    }
    // Safety violated outright, or an obligation left open where the run stops.
    let ended = model.successors(&last).is_empty() || t.reason.as_deref().is_some_and(|x| x.contains("cyclic"));
    if r == FALSE || (ended && !model.arena.accepts_end(r)) {
        Ok(last)
    } else {
        Err(ReplayError::NotViolated(name))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checker::explore::{explore, Config};
    use crate::checker::model::tests::system;

    const FWD: &str = "device d { header h { v: bit<8>; } register seen[1]: bit<8>;
        parser { start: extract(h); accept; } deparser { emit(h); }
        ingress { seen.write(0, hdr.h.v); } }";
    const SPEC: &str = "import a from \"x\"; host h1 { send a { h.v = 1 }; } host h2 { send a { h.v = 2 }; }
        global { ltl never_two { [] { a.seen[0] != 2 } }; }";

    #[test]
    fn fail_trace_round_trips_and_replays() {
        let mut m = system(FWD, SPEC, &["a"]);
        let v = explore(&mut m, Config::default());
        let t = Trace::from_verdict(&m, &v);
        assert_eq!(t.verdict, "FAIL");
        assert_eq!(t.property.as_deref(), Some("never_two"));
        let back = Trace::from_json(&t.to_json()).unwrap();
        assert_eq!(back, t);
        let last = check_trace(&mut m, &back).unwrap();
        assert_eq!(last.actors[0].registers[0][0], 2);
        assert!(!t.steps.last().unwrap().valuations["never_two"]);
        assert_eq!(t.steps.last().unwrap().registers, vec![RegisterChange { register: "a.seen[0]".into(), before: 1, after: 2 }]);
    }

    #[test]
    fn tampered_traces_are_rejected() {
        let mut m = system(FWD, SPEC, &["a"]);
        let v = explore(&mut m, Config::default());
        let mut t = Trace::from_verdict(&m, &v);
        t.replay.final_state_sha256 = "00".into();
        assert_eq!(check_trace(&mut m, &t), Err(ReplayError::DigestMismatch));
        let mut t = Trace::from_verdict(&m, &v);
        t.replay.labels.insert(0, Label::React { actor: 0, lost: vec![] });
        assert!(matches!(check_trace(&mut m, &t), Err(ReplayError::NotEnabled(1, _))));
    }

    #[test]
    fn empty_trace_is_header_only() {
        let mut m = system(FWD, "import a from \"x\";", &["a"]);
        let v = explore(&mut m, Config::default());
        let t = Trace::from_verdict(&m, &v);
        assert_eq!(t.to_human(), "verdict: PASS\nstats: states=1 transitions=0 depth=0\n");
        let j: serde_json::Value = serde_json::from_str(&t.to_json()).unwrap();
        for k in ["verdict", "stats", "steps"] {
            assert!(j.get(k).is_some());
        }
        assert!(j.get("property").is_none());
    }

    #[test]
    fn human_rendering_lists_steps() {
        let mut m = system(FWD, SPEC, &["a"]);
        let v = explore(&mut m, Config::default());
        let text = Trace::from_verdict(&m, &v).to_human();
        assert!(text.starts_with("verdict: FAIL (never_two)\n"));
        assert!(text.contains("#1 h1 send {h.v=1}"));
        assert!(text.contains("a.seen[0]: 1 -> 2"));
    }
}
