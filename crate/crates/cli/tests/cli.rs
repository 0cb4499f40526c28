use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::Path;
use std::process::{Command, Output, Stdio};
use std::sync::Arc;
use std::time::{Duration, Instant};

use counterquill_core::clock::SystemClock;
use counterquill_core::corpus::Corpus;
use counterquill_core::llm::{Gateway, MockProvider, RetryPolicy};
use counterquill_core::study::{export_rows, DatasetRow, Instrument};
use counterquill_core::{Condition, Engine, EngineConfig, NewSession, Theme};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_counterquill"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn synthetic_corpus(path: &Path) {
    let mut lines = String::new();
    for theme in Theme::ALL {
        let t = serde_json::to_value(theme).unwrap();
        for k in 0..8 {
            lines.push_str(&format!(
                "{{\"id\":\"{}-{k}\",\"text\":\"those people ruin it {k}\",\"theme\":{t},\
                 \"gold_identity\":[{{\"start\":6,\"end\":12,\"kind\":\"identity\"}}],\
                 \"gold_action\":[{{\"start\":13,\"end\":17,\"kind\":\"action\"}}]}}\n",
                t.as_str().unwrap()
            ));
        }
    }
    std::fs::write(path, lines).unwrap();
}

#[test]
fn assign_prints_order_and_items() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus.jsonl");
    synthetic_corpus(&corpus);
    let args = ["study", "assign", "--participant-index", "3", "--seed", "11", "--corpus"];
    let a = stdout(&run(&[&args[..], &[corpus.to_str().unwrap()]].concat()));
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["first"], "counterquill");
    assert_eq!(v["second"], "baseline");
    assert_eq!(v["instances"].as_array().unwrap().len(), 20);
    let again = stdout(&run(&[&args[..], &[corpus.to_str().unwrap()]].concat()));
    assert_eq!(a, again);

    // the bundled corpus is too small for a full assignment
    let o = run(&["study", "assign", "--participant-index", "0", "--seed", "1"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("insufficient corpus"));
}

#[test]
fn export_reads_the_event_log() {
    let dir = tempfile::tempdir().unwrap();
    {
        let e = Engine::open(
            dir.path(),
            Corpus::bundled(),
            Gateway::new(Arc::new(MockProvider::new(0)), RetryPolicy::default()),
            Arc::new(SystemClock),
            EngineConfig::default(),
        )
        .unwrap();
        for p in ["a", "b"] {
            let s = e
                .create_session(NewSession {
                    participant_id: p.into(),
                    condition: Condition::Baseline,
                    instance_id: None,
                    demographics: Default::default(),
                })
                .unwrap();
            e.open_writing(&s.id).unwrap();
            e.capture_questionnaire(&s.id, Instrument::NasaTlx, vec![1, 2, 3, 4, 5, 6]).unwrap();
        }
    }
    let data = dir.path().to_str().unwrap();
    let csv = stdout(&run(&["study", "export", "--data-dir", data]));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("a,0,baseline,1,baseline,s0001"));
    assert!(lines[2].contains(",1,2,3,4,5,6,"));

    let out = dir.path().join("out.csv");
    stdout(&run(&["study", "export", "--data-dir", data, "--output", out.to_str().unwrap()]));
    assert_eq!(std::fs::read_to_string(out).unwrap(), csv);

    let missing = run(&["study", "export", "--data-dir", "/nonexistent/cq"]);
    assert!(!missing.status.success());
}

const BASE: [u8; 10] = [3, 4, 4, 3, 5, 4, 3, 4, 4, 5];
const CQ: [u8; 10] = [6, 7, 6, 6, 7, 6, 6, 7, 6, 6];

fn dataset(path: &Path) {
    let mut rows = Vec::new();
    for i in 0..10u32 {
        let first = if i % 2 == 0 { Condition::Baseline } else { Condition::Counterquill };
        for (cond, v) in [(Condition::Baseline, BASE[i as usize]), (Condition::Counterquill, CQ[i as usize])] {
            let mut tlx = [Some(4); 6];
            tlx[3] = Some(v);
            tlx[0] = Some(1 + ((i as u8 + v) % 7));
            rows.push(DatasetRow {
                participant_id: format!("p{i}"),
                participant_index: i,
                condition: cond,
                order_position: if cond == first { 1 } else { 2 },
                first_condition: first,
                session_id: format!("s{i}{cond}"),
                instance_id: "hs-01".into(),
                quiz_correct: None,
                tlx,
                custom: [None; 6],
                timings: [None; 7],
            });
        }
    }
    std::fs::write(path, export_rows(&rows)).unwrap();
}

fn hand_paired_t() -> f64 {
    let d: Vec<f64> = BASE.iter().zip(CQ).map(|(a, b)| *a as f64 - b as f64).collect();
    let n = d.len() as f64;
    let m = d.iter().sum::<f64>() / n;
    let sd = (d.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    m / (sd / n.sqrt())
}

#[test]
fn stats_report_text_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("data.csv");
    dataset(&input);
    let input = input.to_str().unwrap();

    let text = stdout(&run(&["stats", "report", "--input", input, "--family", "paired"]));
    let perf = text.lines().find(|l| l.starts_with("Performance")).unwrap();
    assert!(perf.contains(&format!("{:.3}", hand_paired_t())), "{perf}");
    assert!(perf.contains("3.90 ± 0.74"));
    assert!(perf.contains("<0.001***"));
    // constant items have no spread in either group and still render
    assert!(text.lines().any(|l| l.starts_with("Effort") && l.contains(" 0.000 ")));

    let csv = stdout(&run(&["stats", "report", "--input", input, "--family", "paired", "--format", "csv"]));
    let header = csv.lines().next().unwrap();
    assert!(header.starts_with("section,item,family"));
    let perf = csv.lines().find(|l| l.contains(",Performance,")).unwrap();
    let cols: Vec<&str> = perf.split(',').collect();
    let t: f64 = cols[7].parse().unwrap();
    assert!((t - hand_paired_t()).abs() < 1e-9 * t.abs());

    let welch = stdout(&run(&["stats", "report", "--input", input, "--family", "welch"]));
    assert!(welch.contains("Baseline first (Mean ± SD)"));
    assert_eq!(welch.matches("(Welch, by order)").count(), 4);

    let bad = run(&["stats", "report", "--input", input, "--family", "anova"]);
    assert!(!bad.status.success());
}

fn free_port() -> u16 {
    TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port()
}

fn http_get(port: u16, path: &str) -> Option<String> {
    let mut s = TcpStream::connect(("127.0.0.1", port)).ok()?;
    write!(s, "GET {path} HTTP/1.1\r\nhost: x\r\nconnection: close\r\n\r\n").ok()?;
    let mut out = String::new();
    s.read_to_string(&mut out).ok()?;
    Some(out)
}

#[test]
fn serve_with_mock_flag_and_live_without_key() {
    let dir = tempfile::tempdir().unwrap();
    let port = free_port();
    let cfg = dir.path().join("server.toml");
    std::fs::write(
        &cfg,
        format!(
            "bind = \"127.0.0.1:{port}\"\ndata_dir = {:?}\n[provider]\napi_key_env = \"CQ_TEST_UNSET_KEY\"\n",
            dir.path().join("data")
        ),
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();

    let live = bin()
        .args(["serve", "--config", cfg])
        .env_remove("CQ_TEST_UNSET_KEY")
        .output()
        .unwrap();
    assert!(!live.status.success());
    assert!(String::from_utf8_lossy(&live.stderr).contains("CQ_TEST_UNSET_KEY"));

    let mut child = bin()
        .args(["serve", "--config", cfg, "--mock"])
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let started = Instant::now();
    let health = loop {
        if let Some(r) = http_get(port, "/health") {
            break r;
        }
        assert!(started.elapsed() < Duration::from_secs(20), "server did not start");
        std::thread::sleep(Duration::from_millis(50));
    };
    assert!(health.starts_with("HTTP/1.1 200"), "{health}");
    assert!(health.contains("\"provider\":\"mock\""));

    #[cfg(unix)]
    {
        Command::new("kill").args(["-TERM", &child.id().to_string()]).status().unwrap();
        assert!(child.wait().unwrap().success());
    }
    #[cfg(not(unix))]
    child.kill().unwrap();
}
