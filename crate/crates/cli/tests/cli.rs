//! Config round-trips with explicit parameter tables, and the binary's exit codes.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use stochastic_poisson::models::sample_points;
use stochastic_poisson_cli::RunConfig;

const EXPLICIT: &[&str] = &[
    r#"
[model]
name = "algebroid_dual"
[model.parameters]
anchor_sign = "standard"
hamiltonian = { "0,0,2,0" = 0.5, "0,0,0,2" = 0.5, "1,0,0,0" = 0.1 }
sections = [[{ "0,0" = 1.0 }, { "1,0" = 0.5 }], [{ "0,1" = -1.0 }, { "0,0" = 0.25 }]]
[model.parameters.algebroid]
n = 2
r = 2
anchor = [{ "0,0" = 1.0 }, { "0,1" = 1.0 }, { "1,0" = -1.0 }, { "0,0" = 1.0 }]
structure = [{}, {}, {}, {}, {}, { "1,0" = 1.0 }, { "1,0" = -1.0 }, {}]
"#,
    r#"
[model]
name = "adjoint_bundle"
[model.parameters]
n = 2
algebra = "so3"
sign = "consistent"
connection = [{ "0,1" = 0.5 }, { "1,0" = 1.0 }, {}, { "2,0" = -1.0 }, { "1,1" = 0.3 }, {}]
[model.parameters.noise]
a = [{ "0,0" = 1.0 }, { "1,0" = 0.2 }]
d = [{}, {}, { "0,0" = 0.5 }]
"#,
    r#"
[model]
name = "gl_refinement"
[model.parameters]
n = 1
pairing = "corrected"
x_part = [{ "1,0" = 0.5 }]
q_part = [{ "0,1" = 1.0 }]
[model.parameters.curvature]
xx = [{}]
qq = [{}]
xq = [{ "0,0" = 0.2 }]
"#,
];

#[test]
fn explicit_parameter_tables_round_trip_and_rebuild_identically() {
    for text in EXPLICIT {
        let config = RunConfig::parse(text).unwrap_or_else(|e| panic!("{e}\n{text}"));
        let again = RunConfig::parse(&config.to_toml()).unwrap();
        assert_eq!(config, again);
        let (a, b) = (config.model.build().unwrap(), again.model.build().unwrap());
        for z in sample_points(a.dim(), 20, 5) {
            assert_eq!(a.structure().matrix(&z).unwrap(), b.structure().matrix(&z).unwrap());
            assert_eq!(a.hamiltonian().eval(&z).unwrap(), b.hamiltonian().eval(&z).unwrap());
        }
    }
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stochastic-poisson")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn config_errors_exit_one_and_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "initial = [1.0, 2.0]\n[model]\nname = \"so3_lie_poisson\"\n");
    let out = run(&["simulate", &cfg, "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("config field `initial`"));

    let cfg = write(dir.path(), "typo.toml", "initial = [1.0, 2.0, 3.0]\n[integrator]\nstep = 10\n[model]\nname = \"so3_lie_poisson\"\n");
    let out = run(&["simulate", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("integrator"));
}

#[test]
fn blow_up_exits_two_after_writing_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
initial = [1.0, 2.0, 3.0]
hamiltonian = { "4,0,0" = 100.0, "0,4,0" = 100.0, "0,0,4" = 100.0, "2,2,0" = 100.0 }
n_paths = 4
[model]
name = "so3_lie_poisson"
[integrator]
dt = 0.5
steps = 200
"#;
    let cfg = write(dir.path(), "boom.toml", text);
    let out = run(&["simulate", &cfg, "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("stats.json").exists());
}

#[test]
fn check_writes_report_and_audit_needs_an_expanded_model() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let cfg = write(dir.path(), "so3.toml", "initial = [1.0, 2.0, 3.0]\n[model]\nname = \"so3_lie_poisson\"\n");
    let out = run(&["check", &cfg, "--out-dir", d]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("check.json")).unwrap()).unwrap();
    assert!(report.is_object());

    let out = run(&["audit", &cfg, "--out-dir", d]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("model.name"));

    let out = run(&["list-models"]);
    assert_eq!(out.status.code(), Some(0));
    let listing = String::from_utf8_lossy(&out.stdout);
    for d in stochastic_poisson::models::registry() {
        assert!(listing.contains(d.name), "{}", d.name);
    }
}
