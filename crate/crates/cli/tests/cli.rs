use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn models() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

fn pipecheck(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pipecheck")).args(args).output().expect("binary runs")
}

fn model(rel: &str) -> String {
    models().join(rel).to_string_lossy().into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn netchain_fails_and_writes_a_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trace.json");
    let o = pipecheck(&["verify", &model("netchain/netchain.spec"), "--trace", "json", "--trace-out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["verdict"], "FAIL");
    assert_eq!(v["property"], "sequence_monotonicity");
    for k in ["states", "transitions", "depth"] {
        assert!(v["stats"][k].is_u64(), "{k}");
    }
    let step = &v["steps"][0];
    for k in ["idx", "entity", "action", "events", "valuations"] {
        assert!(!step[k].is_null(), "{k}");
    }
    assert_eq!(stdout(&o), text);
}

#[test]
fn widened_netchain_passes() {
    let o = pipecheck(&["verify", &model("netchain/netchain_wide.spec")]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).starts_with("verdict: PASS"));
}

#[test]
fn unsliced_run_agrees() {
    let o = pipecheck(&["verify", "--no-slice", &model("replica/replica.spec")]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).starts_with("verdict: FAIL (replica_total_order)"));
}

#[test]
fn output_is_deterministic() {
    let args = ["verify", &model("p4xos/p4xos.spec"), "--trace", "json"];
    let a = pipecheck(&args);
    let b = pipecheck(&args);
    assert_eq!(a.stdout, b.stdout);
    let par = pipecheck(&["verify", &model("p4xos/p4xos.spec"), "--trace", "json", "--parallel"]);
    assert_eq!(a.stdout, par.stdout);
}

#[test]
fn tiny_budget_is_a_resource_verdict() {
    let o = pipecheck(&["verify", &model("netchain/netchain_wide.spec"), "--budget", "5"]);
    assert_eq!(code(&o), 2);
    assert!(stdout(&o).contains("state-budget"));
}

#[test]
fn zero_bounds_are_usage_errors() {
    for flag in ["--budget", "--qin", "--qeg", "--recirc-bound"] {
        let o = pipecheck(&["verify", &model("fig5/fig5.spec"), flag, "0"]);
        assert_eq!(code(&o), 3, "{flag}");
    }
    assert_eq!(code(&pipecheck(&[])), 3);
    assert_eq!(code(&pipecheck(&["verify", &model("fig5/fig5.spec"), "--trace", "xml"])), 3);
}

#[test]
fn missing_entries_file_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(models().join("netchain/netchain.pir"), dir.path().join("netchain.pir")).unwrap();
    let spec = dir.path().join("s.spec");
    std::fs::write(&spec, "import s0 from \"netchain.pir\" entries \"absent.entries\";\n").unwrap();
    let o = pipecheck(&["verify", spec.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("absent.entries"), "{}", stderr(&o));
}

#[test]
fn parse_errors_are_located() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("bad.spec");
    std::fs::write(&spec, "import s0 from;\n").unwrap();
    let o = pipecheck(&["verify", spec.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("bad.spec") && stderr(&o).contains("1:"), "{}", stderr(&o));
}

#[test]
fn prune_reports_the_cross_pass_edge() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let o = pipecheck(&[
        "prune",
        &model("fig5/fig5.spec"),
        "--out-dir",
        dir.path().to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let edges = v["devices"][0]["cross_edges"].as_array().unwrap();
    assert!(edges.iter().any(|e| e["symbol"].as_str().unwrap().contains("dst_ip")), "{edges:?}");
    let sliced = std::fs::read_to_string(dir.path().join("s0.pir")).unwrap();
    assert!(sliced.contains("recirculate()") && sliced.contains("else"), "{sliced}");
}

#[test]
fn prune_without_phase2_warns() {
    let o = pipecheck(&["prune", &model("fig5/fig5.spec"), "--no-phase2"]);
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("warning"));
    assert!(!stdout(&o).contains("recirculate"));
}

#[test]
fn seedless_prune_warns() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(models().join("fig5/fig5.pir"), dir.path().join("fig5.pir")).unwrap();
    let spec = dir.path().join("s.spec");
    std::fs::write(&spec, "import s0 from \"fig5.pir\";\n").unwrap();
    let o = pipecheck(&["prune", spec.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("no properties"), "{}", stderr(&o));
}

#[test]
fn prune_rejects_no_slice() {
    let o = pipecheck(&["prune", &model("fig5/fig5.spec"), "--no-slice"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("usage"));
}

#[test]
fn export_writes_one_process_per_device() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("netchain.pml");
    let o = pipecheck(&["export", &model("netchain/netchain.spec"), "-o", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.matches("proctype device_").count(), 3);
    assert!(text.contains("assert(len(my_ingress) < Q_IN)"));
    assert!(stdout(&o).contains("processes: device_s0, device_s1, device_s2"), "{}", stdout(&o));
}

#[test]
fn export_of_egress_clone_has_reinjection_branch() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("m.pir"),
        "device m { header h { n: bit<2>; } register seen[1]: bit<2>;
         parser { start: extract(h); accept; } deparser { emit(h); }
         ingress { seen.write(0, hdr.h.n); set_egress_port(1); }
         egress { if (hdr.h.n == 0) { hdr.h.n = 1; clone(E2E); } } }",
    )
    .unwrap();
    let spec = dir.path().join("m.spec");
    std::fs::write(&spec, "import a from \"m.pir\";\nhost h { send a { h.n = 0 }; }\nglobal { ltl p { [] { a.seen[0] <= 1 } }; }\n").unwrap();
    let out = dir.path().join("m.pml");
    let o = pipecheck(&["export", spec.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains(":: pe.clone_spec == E2E ->") && text.contains("reinject_q ! c"));
}

#[test]
fn export_to_unwritable_path_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("no/such/dir/x.pml");
    let o = pipecheck(&["export", &model("netchain/netchain.spec"), "-o", out.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("x.pml"));
}

#[test]
fn replay_confirms_and_rejects() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.json");
    let spec = model("atp/atp_loss.spec");
    let o = pipecheck(&["verify", &spec, "--trace", "json", "--trace-out", trace.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let o = pipecheck(&["replay", &spec, trace.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("confirmed: FAIL (completion_matches_sent)"));

    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&trace).unwrap()).unwrap();
    v["replay"]["final_state_sha256"] = "00".into();
    std::fs::write(&trace, v.to_string()).unwrap();
    let o = pipecheck(&["replay", &spec, trace.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).contains("not confirmed"));

    std::fs::write(&trace, "{").unwrap();
    assert_eq!(code(&pipecheck(&["replay", &spec, trace.to_str().unwrap()])), 3);
}
