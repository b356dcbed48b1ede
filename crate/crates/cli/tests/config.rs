use mtdpsf::RunPlan;
use mtdpsf_cli::config::{GridSize, InitialConfig, PotentialConfig};
use mtdpsf_cli::{parse_config, ConfigError};

const MINIMAL: &str = "\
# free packet
grid.N = 1024
grid.delta_x = 0.1
grid.M = 3
time.delta_t = 0.03125
time.Tmax = 5
initial.k0 = 4
initial.sigma = 2
";

#[test]
fn minimal_config_takes_defaults() {
    let cfg = parse_config(MINIMAL).unwrap();
    assert_eq!(cfg.grid.size, GridSize::Lattice { n: 1024, delta_x: 0.1 });
    assert_eq!(cfg.grid.delta1, 1e-8);
    assert_eq!(cfg.epsilon, Some(1e-8));
    assert_eq!(cfg.tstep, None);
    assert_eq!(cfg.potential, PotentialConfig::Zero);
    assert_eq!(cfg.initial, InitialConfig::Gaussian { k0: 4.0, sigma: 2.0, x0: 0.0 });

    // The filter period falls back to (L/4)/kmax, rounded down to whole steps.
    let grid = cfg.grid_spec(None).unwrap();
    let plan = RunPlan::new(&grid, cfg.delta_t, cfg.tmax, cfg.tstep).unwrap();
    let expect = ((grid.l() / 4.0 / grid.kmax()) / cfg.delta_t).floor() * cfg.delta_t;
    assert!((plan.tstep() - expect).abs() < 1e-12, "{} vs {expect}", plan.tstep());
}

#[test]
fn empty_file_is_a_parse_error() {
    let err = parse_config("").unwrap_err();
    assert!(matches!(&err, ConfigError::Parse { message, .. } if message.contains("grid.L")), "{err}");
}

#[test]
fn small_box_with_loose_epsilon_cites_spatial_margin() {
    let text = "grid.L = 1\ngrid.kmax = 2000\nfilter.epsilon = 0.5\ntime.delta_t = 0.01\ntime.Tmax = 1\ninitial.sigma = 0.1\n";
    let err = parse_config(text).unwrap_err();
    assert!(matches!(&err, ConfigError::Validation(m) if m.contains("b < L/12")), "{err}");
}

#[test]
fn unknown_key_reports_its_line() {
    let text = format!("{MINIMAL}grid.colour = blue\n");
    assert_eq!(
        parse_config(&text).unwrap_err(),
        ConfigError::Parse {
            line: 9,
            message: "unknown key \"grid.colour\"".into()
        }
    );
}

#[test]
fn malformed_lines_are_rejected() {
    for (text, line) in [
        (format!("{MINIMAL}time.Tmax\n"), 9),
        (format!("{MINIMAL}time.Tmax = 3\n"), 9),
        (MINIMAL.replace("initial.sigma = 2", "initial.sigma = two"), 0),
        (MINIMAL.replace("grid.M = 3", "grid.M ="), 4),
    ] {
        let err = parse_config(&text).unwrap_err();
        assert!(matches!(err, ConfigError::Parse { .. }), "{text:?} gave {err}");
        if line > 0 {
            assert!(matches!(err, ConfigError::Parse { line: l, .. } if l == line), "{text:?} gave {err}");
        }
    }
}

#[test]
fn comments_and_blank_lines_are_ignored() {
    let text = MINIMAL.replace("time.Tmax = 5", "\n   time.Tmax = 5   # final time\n\n");
    assert_eq!(parse_config(&text).unwrap().tmax, 5.0);
}

#[test]
fn both_grid_forms_conflict() {
    let text = format!("{MINIMAL}grid.L = 51.2\n");
    assert!(matches!(parse_config(&text), Err(ConfigError::Validation(_))));
}

#[test]
fn filter_period_must_divide_into_steps() {
    let text = format!("{MINIMAL}time.Tstep = 0.1\n");
    let err = parse_config(&text).unwrap_err();
    assert!(matches!(&err, ConfigError::Validation(m) if m.starts_with("time:")), "{err}");
}

#[test]
fn infeasible_window_is_reported() {
    let text = MINIMAL.replace("grid.N = 1024", "grid.N = 64");
    let err = parse_config(&text).unwrap_err();
    assert!(matches!(&err, ConfigError::Validation(_)), "{err}");
}

#[test]
fn long_range_preset_fills_parameters() {
    let text = format!("{MINIMAL}potential.preset = long_range\npotential.depth = 5\n");
    match parse_config(&text).unwrap().potential {
        PotentialConfig::LongRange { depth, width, .. } => {
            assert_eq!(depth, 5.0);
            assert_eq!(width, 25.6);
        }
        other => panic!("{other:?}"),
    }
    let bad = format!("{MINIMAL}potential.preset = coulomb\n");
    assert!(matches!(parse_config(&bad), Err(ConfigError::Parse { line: 9, .. })));
}

#[test]
fn disabled_filter_skips_margin_checks() {
    let text = format!("{MINIMAL}filter.enabled = false\nfilter.epsilon = 0.9\n");
    assert_eq!(parse_config(&text).unwrap().epsilon, None);
}
