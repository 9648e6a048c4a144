//! Randomized checks over generated systems and the bundled models.

use std::path::Path;

use pipecheck::checker::{explore, Config, Ordering, Verdict};
use pipecheck::intent::{parse_spec, resolve_spec, LoadedImport};
use pipecheck::pir::parse_device_program;
use pipecheck::workflow::{load_system, prepare, verify, VerifyOptions};
use proptest::prelude::*;

fn expr() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        (0u8..4).prop_map(|v| v.to_string()),
        Just("hdr.h.a".to_string()),
        Just("hdr.h.b".to_string()),
        (0u8..2).prop_map(|m| format!("meta.m{m}")),
    ];
    leaf.prop_recursive(2, 6, 2, |inner| (inner.clone(), inner).prop_map(|(a, b)| format!("({a} + {b})")))
}

fn stmt() -> impl Strategy<Value = String> {
    let simple = prop_oneof![
        ((0u8..3), expr()).prop_map(|(r, e)| format!("r{r}.write(0, {e});")),
        ((0u8..3), (0u8..2)).prop_map(|(r, m)| format!("r{r}.read(meta.m{m}, 0);")),
        ((0u8..2), expr()).prop_map(|(m, e)| format!("meta.m{m} = {e};")),
        (prop_oneof![Just("a"), Just("b")], expr()).prop_map(|(f, e)| format!("hdr.h.{f} = {e};")),
    ];
    simple.prop_recursive(2, 8, 3, |inner| {
        (expr(), 0u8..4, prop::collection::vec(inner.clone(), 1..3), prop::collection::vec(inner, 0..3)).prop_map(|(c, k, t, e)| {
            format!("if ({c} == {k}) {{ {} }} else {{ {} }}", t.join(" "), e.join(" "))
        })
    })
}

fn program(name: &str, body: &[String]) -> String {
    format!(
        "device {name} {{ header h {{ a: bit<2>; b: bit<2>; }} metadata {{ m0: bit<2>; m1: bit<2>; }}
         register r0[1]: bit<2>; register r1[1]: bit<2>; register r2[1]: bit<2>;
         parser {{ start: extract(h); accept; }} deparser {{ emit(h); }}
         ingress {{ {} set_egress_port(1); }} }}",
        body.join(" ")
    )
}

fn property() -> impl Strategy<Value = String> {
    (prop_oneof![Just("a"), Just("b")], 0u8..3, 0u8..4, prop_oneof![Just("[]"), Just("<>")])
        .prop_map(|(d, r, k, op)| format!("{op} {{ {d}.r{r}[0] != {k} }}"))
}

fn system(a: &[String], b: &[String], sends: &[(u8, u8)], prop: &str) -> pipecheck::intent::ResolvedSpec {
    // The first packet comes from its own host so arrivals interleave.
    let host = |ps: &[(u8, u8)]| -> String { ps.iter().map(|(x, y)| format!("send a {{ h.a = {x}, h.b = {y} }}; ")).collect() };
    let (first, rest) = sends.split_at(1);
    let spec = format!(
        "import a from \"a\"; import b from \"b\"; link a -> b ALL; host c {{ {} }} host d {{ {} }} global {{ ltl p {{ {prop} }}; }}",
        host(first),
        host(rest)
    );
    let spec = parse_spec(&spec).unwrap();
    let loaded = vec![
        LoadedImport { alias: "a".into(), program: parse_device_program(&program("a", a)).unwrap(), entries: Default::default() },
        LoadedImport { alias: "b".into(), program: parse_device_program(&program("b", b)).unwrap(), entries: Default::default() },
    ];
    resolve_spec(&spec, loaded).unwrap()
}

fn same(x: &Verdict, y: &Verdict) -> bool {
    x.outcome.name() == y.outcome.name() && x.outcome.subject() == y.outcome.subject()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, ..ProptestConfig::default() })]

    #[test]
    fn slicing_preserves_verdicts(
        a in prop::collection::vec(stmt(), 0..5),
        b in prop::collection::vec(stmt(), 0..5),
        sends in prop::collection::vec((0u8..4, 0u8..4), 1..3),
        prop in property(),
    ) {
        let rs = system(&a, &b, &sends, &prop);
        let sliced = verify(&rs, &VerifyOptions::default()).unwrap();
        let full = verify(&rs, &VerifyOptions { slice: false, ..Default::default() }).unwrap();
        prop_assert!(same(&sliced.verdict, &full.verdict), "{:?} vs {:?}", sliced.verdict.outcome, full.verdict.outcome);
        if full.verdict.outcome.name() == "PASS" {
            prop_assert!(sliced.verdict.stats.states <= full.verdict.stats.states);
        }
    }

    #[test]
    fn search_order_and_dedup_do_not_change_verdicts(
        a in prop::collection::vec(stmt(), 0..4),
        b in prop::collection::vec(stmt(), 0..4),
        sends in prop::collection::vec((0u8..4, 0u8..4), 1..3),
        prop in property(),
        seed in any::<u64>(),
    ) {
        let rs = system(&a, &b, &sends, &prop);
        let (mut m, _) = prepare(&rs, &VerifyOptions::default()).unwrap();
        let base = explore(&mut m, Config::default());
        for cfg in [
            Config { ordering: Ordering::Reversed, ..Config::default() },
            Config { ordering: Ordering::Shuffled(seed), ..Config::default() },
            Config { dedup: false, ..Config::default() },
            Config { parallel: true, ..Config::default() },
        ] {
            let v = explore(&mut m, cfg);
            prop_assert!(same(&base, &v), "{cfg:?}: {:?} vs {:?}", base.outcome, v.outcome);
        }
    }

    // Two-bit sequence numbers wrap on the fourth write.
    #[test]
    fn netchain_fails_exactly_when_the_sequence_wraps(writes in 1usize..7) {
        let dir = std::env::temp_dir().join(format!("pipecheck-netchain-{}-{writes}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let models = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models/netchain");
        for f in ["netchain.pir", "head.entries"] {
            std::fs::copy(models.join(f), dir.join(f)).unwrap();
        }
        let spec = std::fs::read_to_string(models.join("netchain.spec")).unwrap().replace("repeat 5", &format!("repeat {writes}"));
        std::fs::write(dir.join("n.spec"), spec).unwrap();
        let r = verify(&load_system(&dir.join("n.spec")).unwrap(), &VerifyOptions::default()).unwrap();
        prop_assert_eq!(r.verdict.outcome.name(), if writes >= 4 { "FAIL" } else { "PASS" });
    }
}
