use std::path::Path;
use std::process::{Command, Output};

fn place(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_place")).args(args).output().unwrap()
}

/// Synthetic netlist plus config in `dir`; the config path is returned.
fn design(dir: &Path, extra: &str) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_synth"))
        .args(["--macros", "4", "--blocks", "3", "--cells-per-block", "50", "--seed", "3", "-o"])
        .arg(dir.join("d.json"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let config = dir.join("d.toml");
    std::fs::write(
        &config,
        format!("run = \"d\"\n{extra}\n[input]\nnetlist = \"d.json\"\n\n[sa]\nmoves_per_temp = 40\n"),
    )
    .unwrap();
    config.to_str().unwrap().to_string()
}

#[test]
fn stage_extract_writes_graph_only() {
    let dir = tempfile::tempdir().unwrap();
    let config = design(dir.path(), "");
    let out_dir = dir.path().join("out");
    let out = place(&[&config, "--stage", "extract", "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("d.graph.txt").exists());
    assert!(out_dir.join("d.clusters.txt").exists());
    assert!(!out_dir.join("d.placement.txt").exists());
}

#[test]
fn full_run_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = design(dir.path(), "");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let out = place(&[&config, "--seed", "5", "--out", d.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for f in ["d.placement.txt", "d.placement.json", "d.report.txt", "d.report.json", "d.svg", "d.flips.txt", "d.congestion.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let report = std::fs::read_to_string(a.join("d.report.txt")).unwrap();
    assert!(report.contains("seed 5"));
    assert_eq!(std::fs::read_to_string(a.join("d.flips.txt")).unwrap().lines().count(), 4);
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = design(dir.path(), "");
    let out_dir = dir.path().join("o");
    let out = place(&[&config, "--no-finetune", "--loss", "eq5", "--push-boundary", "0.5", "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = std::fs::read_to_string(out_dir.join("d.report.txt")).unwrap();
    assert!(report.contains("flips 0"));
    assert!(!report.contains("loss.boundary 0.000000"));
}

#[test]
fn missing_config_is_io_error() {
    let out = place(&["/nonexistent/place.toml"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/place.toml"));
}

#[test]
fn missing_netlist_names_path() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.toml");
    std::fs::write(&config, "[input]\nnetlist = \"gone.json\"\n").unwrap();
    let out = place(&[config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gone.json"));
}

#[test]
fn unknown_config_key_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = design(dir.path(), "colour = \"red\"");
    let out = place(&[&config]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_netlist_is_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), "{ \"outline\": 3 }").unwrap();
    let config = dir.path().join("c.toml");
    std::fs::write(&config, "[input]\nnetlist = \"bad.json\"\n").unwrap();
    let out = place(&[config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn bad_flag_is_usage_error() {
    let out = place(&["x.toml", "--stage", "nowhere"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verilog_input_runs() {
    let dir = tempfile::tempdir().unwrap();
    let src = r#"
module bank(input [3:0] d, output [3:0] q);
  RAM mem (.D(d), .Q(q));
endmodule
module top(input [3:0] din, output [3:0] dout);
  wire [3:0] mid;
  wire [3:0] back;
  bank b0 (.d(din), .q(mid));
  bank b1 (.d(back), .q(dout));
  INV u0 (.A(mid[0]), .Y(back[0]));
  INV u1 (.A(mid[1]), .Y(back[1]));
  INV u2 (.A(mid[2]), .Y(back[2]));
  INV u3 (.A(mid[3]), .Y(back[3]));
endmodule
"#;
    let sidecar = r#"{
  "outline": {"width": 60, "height": 60},
  "masters": [
    {"name": "INV", "width": 1, "height": 1, "kind": "cell",
     "pin_offsets": [{"name": "A", "dx": 0, "dy": 0.5}, {"name": "Y", "dx": 1, "dy": 0.5, "dir": "output"}]},
    {"name": "RAM", "width": 10, "height": 8, "kind": "macro",
     "pin_offsets": [{"name": "D", "dx": 0, "dy": 1}, {"name": "Q", "dx": 1, "dy": 0, "dir": "output"}]}
  ],
  "io_sides": {"dout": "N"}
}"#;
    std::fs::write(dir.path().join("top.v"), src).unwrap();
    std::fs::write(dir.path().join("top.json"), sidecar).unwrap();
    let config = dir.path().join("v.toml");
    std::fs::write(&config, "run = \"v\"\n[input]\nverilog = \"top.v\"\nsidecar = \"top.json\"\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = place(&[config.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let placement = std::fs::read_to_string(out_dir.join("v.placement.txt")).unwrap();
    assert!(placement.contains("b0/mem") && placement.contains("b1/mem"), "{placement}");
}
