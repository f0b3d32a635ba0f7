use std::io::Cursor;

use heavytail::banach::{Operator, Space};
use heavytail::config::{preset, ModelConfig, PRESETS};
use heavytail::simulate::read_path_csv;
use heavytail::summaries::{seq_identity_check, EventSpec};
use proptest::prelude::*;

fn space_strategy() -> impl Strategy<Value = Space> {
    (1usize..6, 0usize..4).prop_flat_map(|(d, kind)| {
        prop::collection::vec(0.1f64..3.0, d).prop_map(move |w| match kind {
            0 => Space::max(d),
            1 => Space::lp(d, 1.0).unwrap(),
            2 => Space::lp(d, 1.0 + w[0]).unwrap(),
            _ => {
                let mut w = w;
                w[0] = 1.0;
                Space::weighted_l1(w).unwrap()
            }
        })
    })
}

fn space_and_vectors() -> impl Strategy<Value = (Space, Vec<f64>, Vec<f64>)> {
    space_strategy().prop_flat_map(|s| {
        let d = s.dim();
        (
            Just(s),
            prop::collection::vec(-50.0f64..50.0, d),
            prop::collection::vec(-50.0f64..50.0, d),
        )
    })
}

proptest! {
    #[test]
    fn norm_is_a_norm((s, x, y) in space_and_vectors(), c in -10.0f64..10.0) {
        let sum: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
        let (nx, ny) = (s.norm_of(&x), s.norm_of(&y));
        prop_assert!(s.norm_of(&sum) <= (nx + ny) * (1.0 + 1e-12) + 1e-12);
        let scaled: Vec<f64> = x.iter().map(|v| c * v).collect();
        prop_assert!((s.norm_of(&scaled) - c.abs() * nx).abs() <= 1e-9 * (1.0 + c.abs() * nx));
    }

    #[test]
    fn projection_lands_on_the_sphere((s, x, _) in space_and_vectors()) {
        prop_assume!(s.norm_of(&x) > 1e-6);
        let t = s.project_sphere(&x).unwrap();
        prop_assert!((s.norm_of(&t) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn operators_are_linear_and_bounded(
        (s, x, y) in space_and_vectors(),
        entries in prop::collection::vec(-3.0f64..3.0, 36),
        a in -4.0f64..4.0,
    ) {
        let d = s.dim();
        let op = Operator::dense(d, d, entries[..d * d].to_vec()).unwrap();
        let comb: Vec<f64> = x.iter().zip(&y).map(|(u, v)| a * u + v).collect();
        let lhs = op.apply(&comb).unwrap();
        let (ax, ay) = (op.apply(&x).unwrap(), op.apply(&y).unwrap());
        for i in 0..d {
            prop_assert!((lhs[i] - (a * ax[i] + ay[i])).abs() <= 1e-9 * (1.0 + lhs[i].abs()));
        }
        let bound = op.norm_bound(&s, &s).unwrap().value;
        prop_assume!(s.norm_of(&x) > 1e-6);
        let theta = s.project_sphere(&x).unwrap();
        prop_assert!(s.norm_of(&op.apply(&theta).unwrap()) <= bound * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn sequence_identity_holds(a in prop::collection::vec(0.0f64..100.0, 1..60)) {
        let (lhs, rhs) = seq_identity_check(&a);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
    }

    #[test]
    fn config_parser_never_panics(text in ".{0,300}") {
        let _ = ModelConfig::parse(&text);
    }

    #[test]
    fn config_parser_survives_mutated_presets(idx in 0usize..5, cut in 0usize..400, junk in "[{}\\[\\]\",:0-9a-z ]{0,8}") {
        let text = PRESETS[idx].1;
        let cut = cut.min(text.len());
        let cut = (0..=cut).rev().find(|&i| text.is_char_boundary(i)).unwrap();
        let _ = ModelConfig::parse(&format!("{}{junk}{}", &text[..cut], &text[cut..]));
    }

    #[test]
    fn path_reader_never_panics(text in "[t,x0-9.\\-e\\n ]{0,200}") {
        let _ = read_path_csv(Cursor::new(text.as_bytes()));
    }

    #[test]
    fn event_parser_never_panics(text in ".{0,40}") {
        let _ = text.parse::<EventSpec>();
    }

    #[test]
    fn event_specs_round_trip(coeffs in prop::collection::vec(-5.0f64..5.0, 1..4), z in 0.01f64..10.0, ge in any::<bool>(), norm in any::<bool>()) {
        let cmp = if ge { ">=" } else { ">" };
        let text = if norm {
            format!("norm{cmp}{z:?}")
        } else {
            let b: Vec<String> = coeffs.iter().map(|c| format!("{c:?}")).collect();
            format!("dual[{}]{cmp}{z:?}", b.join(","))
        };
        let ev: EventSpec = text.parse().unwrap();
        prop_assert_eq!(ev.to_string().parse::<EventSpec>().unwrap(), ev);
    }
}

#[test]
fn presets_round_trip() {
    for (name, _) in PRESETS {
        let cfg = ModelConfig::parse(preset(name).unwrap()).unwrap();
        let again = ModelConfig::parse(&cfg.to_json()).unwrap();
        assert_eq!(cfg, again, "{name}");
        assert_eq!(again.to_json(), cfg.to_json());
    }
}
