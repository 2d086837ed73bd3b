use oamlat::recipe::{Component, Detector, Grating, Grid};
use oamlat::Recipe;
use proptest::prelude::*;

fn component() -> impl Strategy<Value = Component> {
    (0u32..4, -200i32..200, 1u32..5, -2.0f64..2.0, -2.0f64..2.0).prop_map(|(p, ell, n_fold, amp_re, amp_im)| Component {
        p,
        ell,
        n_fold,
        amp_re,
        amp_im,
    })
}

fn recipe() -> impl Strategy<Value = Recipe> {
    (
        proptest::option::of(1e-5f64..1e-2),
        (1usize..4096, 1usize..4096, 1e-7f64..1e-3),
        proptest::collection::vec(component(), 1..6),
        proptest::option::of((1usize..2048, 1usize..2048, 0.0f64..10.0, 0.0f64..3.0, any::<u32>())),
        proptest::option::of((2.0f64..32.0, 0.0f64..std::f64::consts::TAU, any::<bool>())),
    )
        .prop_map(|(waist_m, (width, height, pitch_m), components, det, grat)| Recipe {
            waist_m,
            grid: Grid { width, height, pitch_m },
            components,
            detector: det.map(|(width, height, mean_flux, read_noise_sigma, seed)| Detector {
                width,
                height,
                mean_flux,
                read_noise_sigma,
                seed: seed as u64,
            }),
            grating: grat.map(|(period_px, angle, shape_intensity)| Grating {
                period_px,
                orientation: [angle.cos(), angle.sin()],
                shape_intensity,
            }),
        })
}

proptest! {
    #[test]
    fn toml_round_trip_is_lossless(r in recipe()) {
        let text = r.to_toml();
        prop_assert_eq!(Recipe::parse(&text).unwrap(), r);
    }
}
