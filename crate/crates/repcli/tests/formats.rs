use proptest::prelude::*;
use repcli::config::{parse_config, resolve_params, to_config_text};
use repcli::manifest::RunManifest;
use repcli::output::{csv_string, fmt_num, read_csv};
use rydrep_core::rates::{EfficiencyParams, Preset};
use rydrep_core::StateVector;

fn params() -> impl Strategy<Value = EfficiencyParams> {
    (0.01f64..=1.0, 0.01f64..=1.0, 0.01f64..=1.0, 1e-9f64..1e-3, 1u32..20, 1u32..20, 1u32..20, 0.0f64..1e5).prop_map(
        |(p_r, p_gamma, p_b, t_o, n_g, n_t, n_s, d)| EfficiencyParams {
            p_r,
            p_gamma,
            p_b,
            t_o,
            n_g,
            n_t,
            n_s,
            d,
            ..Preset::Conservative.params()
        },
    )
}

proptest! {
    #[test]
    fn numbers_survive_csv(v in prop::num::f64::NORMAL | prop::num::f64::ZERO) {
        prop_assert_eq!(fmt_num(v).parse::<f64>().unwrap(), v);
    }

    #[test]
    fn config_text_round_trips(p in params()) {
        let back = resolve_params(Preset::Optimistic, &parse_config(&to_config_text(&p)).unwrap(), &[]).unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn csv_rows_round_trip(rows in prop::collection::vec(prop::collection::vec(-1e9f64..1e9, 3), 0..20)) {
        let cells: Vec<Vec<String>> = rows.iter().map(|r| r.iter().map(|&v| fmt_num(v)).collect()).collect();
        let text = csv_string(&RunManifest::new("prop"), &["a", "b", "c"], &cells).unwrap();
        let (_, back) = read_csv(&text).unwrap();
        prop_assert_eq!(back, cells);
    }
}

#[test]
fn state_dump_is_stable() {
    let s = rydrep_core::protocol::run_table1(rydrep_core::state::Convention::Table).unwrap();
    let text = s.final_state().to_string();
    assert_eq!(
        text,
        "0.707106781187 0.000000000000 | node0:{u} | photons:[0:H@0]\n0.707106781187 0.000000000000 | node0:{d} | photons:[0:V@0]\n"
    );
    let back: StateVector = text.parse().unwrap();
    assert!((back.fidelity(s.final_state()).unwrap() - 1.0).abs() < 1e-10);
}
