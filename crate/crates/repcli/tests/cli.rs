use std::fs;
use std::process::{Command, Output};

use repcli::output::read_csv;

fn repcli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_repcli")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn column(text: &str, name: &str) -> Vec<f64> {
    let (header, rows) = read_csv(text).unwrap();
    let i = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn table1_ends_in_memory_photon_pair() {
    let o = repcli(&["protocol", "table1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("0.707106781187 0.000000000000 | node0:{u} | photons:[0:H@0]"), "{out}");
    assert!(out.contains("0.707106781187 0.000000000000 | node0:{d} | photons:[0:V@0]"));
    assert!(out.contains("all 9 rows match"));
}

#[test]
fn table2_teleports_with_unit_fidelity() {
    for conv in ["table", "rabi"] {
        for outcome in ["uu", "ud", "du", "dd"] {
            let o = repcli(&[
                "protocol",
                "table2",
                "--alpha",
                "0.6",
                "--beta",
                "0.8",
                "--outcome",
                outcome,
                "--convention",
                conv,
            ]);
            assert!(o.status.success(), "{conv} {outcome}: {}", stdout(&o));
            assert!(stdout(&o).contains("fidelity: 1.000000000000"));
        }
    }
    let o = repcli(&["protocol", "table2", "--alpha", "0,0.6", "--beta", "-0.8"]);
    assert!(o.status.success(), "{}", stdout(&o));
}

#[test]
fn protocol_rejects_bad_input() {
    assert!(!repcli(&["protocol", "table2", "--outcome", "ux"]).status.success());
    assert!(!repcli(&["protocol", "table2", "--alpha", "0.6", "--beta", "0.6"]).status.success());
    assert!(!repcli(&["protocol", "table3"]).status.success());
}

#[test]
fn swap_chain_links_end_nodes() {
    let o = repcli(&["protocol", "swap-chain", "--nodes", "5", "--seed", "4"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("fidelity with end-to-end Bell pair: 1.000000000000"));
}

#[test]
fn exported_script_runs_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t1.txt");
    let p = path.to_str().unwrap();
    assert!(repcli(&["protocol", "table1", "--export", p]).status.success());
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.lines().any(|l| l.starts_with("waveplate 0")), "{text}");
    let o = repcli(&["protocol", "--script-file", p, "--nodes", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("photons:[0:H@0]"));
}

#[test]
fn conservative_generation_rate() {
    let o = repcli(&["rates", "--preset", "conservative", "--scheme", "two_node_gen"]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("rate 24.89"), "{}", stderr(&o));
    let rate = column(&stdout(&o), "rate_hz");
    assert!((rate[0] - 24.9).abs() / 24.9 < 0.02);
}

#[test]
fn rate_falls_with_step_count() {
    let o = repcli(&["rates", "--preset", "optimistic", "--sweep", "n_G=4:16"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let n = column(&out, "param_value");
    let rate = column(&out, "rate_hz");
    assert_eq!(n.first(), Some(&4.0));
    assert_eq!(n.last(), Some(&16.0));
    assert!(rate.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn rates_against_retrieval_efficiency() {
    let sweep = ["rates", "--preset", "optimistic", "--sweep", "P_R=0.5:1.0:0.1", "--fix", "P_gamma=0.8"];
    let gen = stdout(&repcli(&sweep));
    let tel = stdout(&repcli(&[&sweep[..], &["--scheme", "two_node_teleport"]].concat()));
    let pr = column(&gen, "param_value");
    let i = pr.iter().position(|&v| (v - 0.9).abs() < 1e-12).unwrap();
    let g = column(&gen, "rate_hz")[i];
    let t = column(&tel, "rate_hz")[i];
    assert!((g - 7810.0).abs() / 7810.0 < 0.03, "{g}");
    assert!((t - 3540.0).abs() / 3540.0 < 0.03, "{t}");
    assert!(column(&gen, "rate_hz").windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn usage_errors() {
    assert!(!repcli(&["rates", "--preset", "wishful"]).status.success());
    assert!(!repcli(&["rates", "--fix", "P_R=2"]).status.success());
    assert!(!repcli(&["rates", "--sweep", "n_G=4"]).status.success());
    assert!(!repcli(&["rates", "--scheme", "chain_gen(0)"]).status.success());
    assert!(!repcli(&[]).status.success());
}

#[test]
fn config_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("p.cfg");
    fs::write(&cfg, "# optimistic collection\nP_gamma=0.8\nP_R=0.5\n").unwrap();
    let c = cfg.to_str().unwrap();
    let from_file = stdout(&repcli(&["rates", "--config", c, "--fix", "P_R=0.9"]));
    let direct = stdout(&repcli(&["rates", "--preset", "optimistic"]));
    assert_eq!(column(&from_file, "rate_hz"), column(&direct, "rate_hz"));
    assert!(from_file.contains(&format!("# config: {c}")));
}

#[test]
fn outputs_are_byte_identical_on_rerun() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["mc", "--scheme", "chain_gen(2)", "--preset", "optimistic", "--trials", "2000", "--seed", "5"],
        vec!["rates", "--preset", "optimistic", "--sweep", "d=0:20000:5000"],
        vec!["emission", "--atoms", "300", "--samples", "50", "--seed", "3"],
    ] {
        let path = dir.path().join("out");
        let p = path.to_str().unwrap();
        let mut first = args.clone();
        first.extend(["--out", p]);
        assert!(repcli(&first).status.success());
        let a = fs::read(&path).unwrap();
        assert!(repcli(&first).status.success());
        assert_eq!(a, fs::read(&path).unwrap(), "{args:?}");
    }
}

#[test]
fn mc_record_fields() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mc.json");
    let manifest = dir.path().join("manifest.json");
    let o = repcli(&[
        "mc",
        "--scheme",
        "two_node_teleport",
        "--preset",
        "optimistic",
        "--trials",
        "20000",
        "--out",
        path.to_str().unwrap(),
        "--manifest-out",
        manifest.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    for key in ["scheme", "params", "trials", "seed", "mean_time_s", "std_error_s", "success_fraction", "manifest"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert_eq!(v["scheme"], "two_node_teleport");
    assert_eq!(v["pass"], true);
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(&manifest).unwrap()).unwrap();
    assert!(m["timestamp"].is_string());
    assert!(v["manifest"].get("timestamp").is_none());
}

#[test]
fn single_trial_does_not_crash() {
    let o = repcli(&["mc", "--trials", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["std_error_s"].is_null());
    assert_eq!(v["trials"], 1);
}

#[test]
fn mismatched_parameters_fail_the_comparison() {
    // Simulate n_G = 9 but compare against the n_G = 7 prediction.
    use rydrep_core::mc::{analytic, compare_to_analytic, Scheme, TrialConfig};
    use rydrep_core::rates::{EfficiencyParams, Preset};
    let p = Preset::Optimistic.params();
    let sim = EfficiencyParams { n_g: 9, ..p };
    let stats = repcli::parallel::simulate(&TrialConfig::new(sim, Scheme::TwoNodeGen, 50_000, 1)).unwrap();
    let cmp = compare_to_analytic(&stats, &analytic(&p, Scheme::TwoNodeGen).unwrap());
    assert!(!cmp.pass, "{cmp:?}");
    assert!(cmp.relative_deviation > 0.2);
}

#[test]
fn nested_swap_report() {
    let o = repcli(&["mc", "--scheme", "nested_swap(1)", "--trials", "20000"]);
    assert!(o.status.success());
    let err = stderr(&o);
    let line = err.lines().find(|l| l.contains("mean / (t_G/P_G)")).unwrap();
    let factor: f64 = line.split('=').nth(1).unwrap().split(';').next().unwrap().trim().parse().unwrap();
    assert!((1.4..=1.6).contains(&factor), "{line}");
}

#[test]
fn chain_gen_three_links_matches_recursion() {
    use rydrep_core::mc::{analytic, compare_to_analytic, Scheme, TrialConfig};
    use rydrep_core::rates::Preset;
    let p = Preset::Optimistic.params();
    let stats = repcli::parallel::simulate(&TrialConfig::new(p, Scheme::ChainGen(3), 100_000, 77)).unwrap();
    let cmp = compare_to_analytic(&stats, &analytic(&p, Scheme::ChainGen(3)).unwrap());
    assert!(cmp.pass, "{cmp:?}");
}

#[test]
fn emission_outputs() {
    let o = repcli(&["emission", "--atoms", "1", "--samples", "20"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let (header, _) = read_csv(&out).unwrap();
    assert_eq!(header, ["direction_index", "cos_angle_from_k_tot", "amplitude"]);
    assert!(column(&out, "amplitude").iter().all(|a| (a - 1.0).abs() < 1e-12));
    assert!(stderr(&o).contains("enhancement ratio 1.00"), "{}", stderr(&o));

    let o = repcli(&["emission", "--samples", "300", "--sweep-atoms", "100,500,2000", "--out", "-"]);
    let err = stderr(&o);
    let slope: f64 = err.lines().find(|l| l.contains("slope")).unwrap().rsplit(' ').next().unwrap().parse().unwrap();
    assert!((slope - 1.0).abs() < 0.15, "{err}");
}

#[test]
fn acceptance_command_passes() {
    let o = repcli(&["check-paper"]);
    let out = stdout(&o);
    assert!(o.status.success(), "{out}");
    assert_eq!(out.lines().filter(|l| l.starts_with("[PASS]")).count(), 10, "{out}");
    assert!(out.contains("145 ms"));
}
