//! End-to-end tests driving the `flowguard` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn flowguard(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flowguard"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_ok(dir: &Path, args: &[&str]) -> String {
    let out = flowguard(dir, args);
    assert!(
        out.status.success(),
        "`flowguard {}` failed:\n{}",
        args.join(" "),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).to_string()
}

fn build_corpus(dir: &Path) {
    run_ok(
        dir,
        &[
            "synth",
            "corpus",
            "--out-dir",
            "corpus",
            "--seed",
            "7",
            "--devices-per-category",
            "1",
            "--benign-duration",
            "2400",
            "--victims-per-kind",
            "1",
            "--attack-duration",
            "600",
            "--attack-rate",
            "30",
        ],
    );
}

#[test]
fn usage_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = flowguard(dir.path(), &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));

    let out = flowguard(dir.path(), &["--help"]);
    assert_eq!(out.status.code(), Some(0));

    let out = flowguard(dir.path(), &["no-such-command"]);
    assert_eq!(out.status.code(), Some(1));

    // Data errors exit 2: missing input file.
    let out = flowguard(
        dir.path(),
        &[
            "train",
            "--features",
            "missing.csv",
            "--out",
            "model.knn",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    build_corpus(dir);
    for name in ["benign.csv", "attack.csv", "labels.csv", "manifest.json"] {
        assert!(dir.join("corpus").join(name).exists(), "missing {name}");
    }

    // features (+ stats export)
    run_ok(
        dir,
        &[
            "features",
            "--trace",
            "corpus/benign.csv",
            "--trace",
            "corpus/attack.csv",
            "--labels",
            "corpus/labels.csv",
            "--interval",
            "24",
            "--origin-us",
            "0",
            "--out",
            "features.csv",
            "--stats-out",
            "stats.csv",
        ],
    );
    let features = fs::read_to_string(dir.join("features.csv")).unwrap();
    assert!(features.starts_with(
        "device,window_index,icmp_pct,tcp_pct,udp_pct,packet_count,mean_packet_size,\
         ip_diversity,label\n"
    ));
    let stats = fs::read_to_string(dir.join("stats.csv")).unwrap();
    assert!(stats.starts_with(
        "device,window_index,packets,bytes,icmp,tcp,udp,other,unique_dst_ips\n"
    ));
    assert!(dir.join("features.csv.manifest.json").exists());

    // train / classify
    run_ok(
        dir,
        &["train", "--features", "features.csv", "--k", "5", "--out", "model.knn"],
    );
    let model_bytes = fs::read(dir.join("model.knn")).unwrap();
    assert_eq!(&model_bytes[..4], b"KNN1");
    run_ok(
        dir,
        &[
            "classify",
            "--model",
            "model.knn",
            "--features",
            "features.csv",
            "--out",
            "preds.csv",
        ],
    );
    let preds = fs::read_to_string(dir.join("preds.csv")).unwrap();
    assert!(preds.starts_with("device,window_index,label,mean_neighbor_distance\n"));
    assert_eq!(preds.lines().count(), features.lines().count());

    // eval: the acceptance floor holds on this corpus
    run_ok(
        dir,
        &[
            "eval",
            "--benign",
            "corpus/benign.csv",
            "--attack",
            "corpus/attack.csv",
            "--labels",
            "corpus/labels.csv",
            "--interval",
            "24",
            "--seed",
            "7",
            "--out",
            "report.csv",
        ],
    );
    let report = fs::read_to_string(dir.join("report.csv")).unwrap();
    let overall: f64 = report
        .lines()
        .find(|l| l.starts_with("overall,"))
        .and_then(|l| l.split(',').nth(3))
        .unwrap()
        .parse()
        .unwrap();
    assert!(overall >= 0.95, "overall accuracy {overall} < 0.95");

    // sweep at a single interval reports the same overall accuracy as
    // eval with the same seed, byte for byte.
    run_ok(
        dir,
        &[
            "sweep",
            "--benign",
            "corpus/benign.csv",
            "--attack",
            "corpus/attack.csv",
            "--labels",
            "corpus/labels.csv",
            "--intervals",
            "24",
            "--seed",
            "7",
            "--out",
            "sweep.csv",
        ],
    );
    let sweep = fs::read_to_string(dir.join("sweep.csv")).unwrap();
    let sweep_overall = sweep
        .lines()
        .nth(1)
        .and_then(|l| l.split(',').nth(1))
        .unwrap();
    let eval_overall = report
        .lines()
        .find(|l| l.starts_with("overall,"))
        .and_then(|l| l.split(',').nth(3))
        .unwrap();
    assert_eq!(sweep_overall, eval_overall);

    // minimize
    run_ok(
        dir,
        &[
            "minimize",
            "--features",
            "features.csv",
            "--threshold",
            "0.95",
            "--seed",
            "3",
            "--out",
            "curve.csv",
            "--model-out",
            "reduced.knn",
        ],
    );
    let curve = fs::read_to_string(dir.join("curve.csv")).unwrap();
    assert!(curve.starts_with("train_size,accuracy\n"));
    assert!(curve.lines().count() > 2);
    assert!(dir.join("reduced.knn").exists());

    // importance
    run_ok(
        dir,
        &[
            "importance",
            "--features",
            "features.csv",
            "--repeats",
            "10",
            "--seed",
            "3",
            "--out",
            "importance.csv",
        ],
    );
    let importance = fs::read_to_string(dir.join("importance.csv")).unwrap();
    assert!(importance.starts_with("feature,raw_drop,relative_importance\n"));
    assert_eq!(importance.lines().count(), 7);

    // simulate: floods get removed within the deadline, benign promoted
    let stdout = run_ok(
        dir,
        &[
            "simulate",
            "--model",
            "model.knn",
            "--trace",
            "corpus/benign.csv",
            "--trace",
            "corpus/attack.csv",
            "--interval",
            "24",
            "--deadline",
            "120",
            "--out",
            "events.jsonl",
        ],
    );
    assert!(stdout.contains("met"), "no deadline met in:\n{stdout}");
    let events = fs::read_to_string(dir.join("events.jsonl")).unwrap();
    assert!(events.lines().any(|l| l.contains("\"event\":\"removed\"")));
    assert!(events.lines().any(|l| l.contains("\"event\":\"promoted\"")));
    for line in events.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v.get("t").is_some() && v.get("device").is_some() && v.get("event").is_some());
        // Only flood devices may ever be removed.
        if v["event"] == "removed" {
            assert!(v["device"].as_str().unwrap().starts_with("attacker-"));
        }
    }

    // bench
    let stdout = run_ok(
        dir,
        &[
            "bench",
            "--model",
            "model.knn",
            "--features",
            "features.csv",
            "--trials",
            "100",
        ],
    );
    assert!(stdout.contains("mean"), "bench output: {stdout}");
}

#[test]
fn corpus_generation_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    let gen = |out: &str| {
        run_ok(
            dir,
            &[
                "synth",
                "corpus",
                "--out-dir",
                out,
                "--seed",
                "11",
                "--devices-per-category",
                "1",
                "--benign-duration",
                "600",
                "--victims-per-kind",
                "1",
                "--attack-duration",
                "240",
                "--attack-rate",
                "30",
            ],
        );
    };
    gen("a");
    gen("b");
    for name in ["benign.csv", "attack.csv", "labels.csv"] {
        let a = fs::read(dir.join("a").join(name)).unwrap();
        let b = fs::read(dir.join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
}

#[test]
fn single_device_synth_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    run_ok(
        dir,
        &[
            "synth",
            "benign",
            "--category",
            "camera",
            "--device",
            "cam-7",
            "--duration",
            "600",
            "--seed",
            "5",
            "--peers",
            "3",
            "--mean-size",
            "700",
            "--out",
            "cam.csv",
            "--labels-out",
            "cam-labels.csv",
        ],
    );
    let labels = fs::read_to_string(dir.join("cam-labels.csv")).unwrap();
    assert_eq!(labels, "device,label\ncam-7,camera\n");
    let trace = fs::read_to_string(dir.join("cam.csv")).unwrap();
    assert!(trace.lines().count() > 10);
    assert!(trace.lines().skip(1).all(|l| l.contains("cam-7")));

    run_ok(
        dir,
        &[
            "synth",
            "attack",
            "--kind",
            "syn",
            "--victim",
            "10.0.0.9",
            "--rate",
            "30",
            "--duration",
            "120",
            "--seed",
            "5",
            "--out",
            "syn.csv",
        ],
    );
    let trace = fs::read_to_string(dir.join("syn.csv")).unwrap();
    assert!(trace.lines().skip(1).all(|l| l.ends_with(",true")));

    // An unknown category is a usage error.
    let out = flowguard(
        dir,
        &[
            "synth", "benign", "--category", "toaster", "--out", "t.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn ingest_golden_pcap() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();

    // Classic little-endian pcap: one 60-byte Ethernet/IPv4/TCP SYN frame.
    let mut pcap: Vec<u8> = Vec::new();
    pcap.extend_from_slice(&0xa1b2_c3d4u32.to_le_bytes());
    pcap.extend_from_slice(&2u16.to_le_bytes());
    pcap.extend_from_slice(&4u16.to_le_bytes());
    pcap.extend_from_slice(&[0; 8]);
    pcap.extend_from_slice(&65535u32.to_le_bytes());
    pcap.extend_from_slice(&1u32.to_le_bytes());
    for v in [100u32, 5, 60, 60] {
        pcap.extend_from_slice(&v.to_le_bytes());
    }
    pcap.extend_from_slice(&[0xaa, 0xbb, 0xcc, 0xdd, 0xee, 0xff]);
    pcap.extend_from_slice(&[0x02, 0x00, 0x00, 0x00, 0x00, 0x01]);
    pcap.extend_from_slice(&[0x08, 0x00]);
    pcap.extend_from_slice(&[
        0x45, 0x00, 0x00, 0x2e, 0x00, 0x00, 0x00, 0x00, 0x40, 0x06, 0x00, 0x00, 0x0a, 0x00,
        0x00, 0x02, 0x0a, 0x00, 0x00, 0x09,
    ]);
    pcap.extend_from_slice(&[
        0x30, 0x39, 0x00, 0x50, 0x00, 0x00, 0x00, 0x01, 0x00, 0x00, 0x00, 0x00, 0x50, 0x02,
        0x40, 0x00, 0x00, 0x00, 0x00, 0x00,
    ]);
    pcap.extend_from_slice(&[0; 6]);
    fs::write(dir.join("golden.pcap"), &pcap).unwrap();

    run_ok(
        dir,
        &["ingest", "--pcap", "golden.pcap", "--out", "trace.csv"],
    );
    let csv = fs::read_to_string(dir.join("trace.csv")).unwrap();
    assert_eq!(
        csv,
        "timestamp_us,device,src_ip,dst_ip,protocol,size,tcp_syn\n\
         100000005,02:00:00:00:00:01,10.0.0.2,10.0.0.9,TCP,60,true\n"
    );

    // ip attribution
    run_ok(
        dir,
        &[
            "ingest",
            "--pcap",
            "golden.pcap",
            "--attribution",
            "ip",
            "--out",
            "trace-ip.csv",
        ],
    );
    let csv = fs::read_to_string(dir.join("trace-ip.csv")).unwrap();
    assert!(csv.contains("\n100000005,10.0.0.2,"));

    // A garbage capture is a data error.
    fs::write(dir.join("junk.pcap"), b"not a pcap").unwrap();
    let out = flowguard(dir, &["ingest", "--pcap", "junk.pcap", "--out", "x.csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn manifests_record_the_invocation() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();
    build_corpus(dir);
    let manifest: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.join("corpus/manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["subcommand"], "synth-corpus");
    assert_eq!(manifest["seed"], 7);
    let argv: Vec<String> = manifest["argv"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    assert!(argv.contains(&"corpus".to_string()));
    assert!(argv.contains(&"--seed".to_string()));
    let outputs = manifest["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 3);
    for entry in outputs {
        assert!(PathBuf::from(entry.as_str().unwrap()).exists() || dir.join(entry.as_str().unwrap()).exists());
    }
}
