use std::sync::Arc;

use proptest::prelude::*;
use uav_outage::channel::{antenna_from_count, los_probability, ChannelParams, LinkType};
use uav_outage::geometry::{equivalent_distance, projection_region, Radius, ServingContext};
use uav_outage::interference::log_laplace;
use uav_outage::network::{
    AssociationScheme, ErrorDistribution, MisalignmentModel, NetworkConfig, Uniform,
};
use uav_outage::outage::{case_probabilities, omega};

fn uniform(lo: f64, hi: f64) -> Arc<dyn ErrorDistribution> {
    Arc::new(Uniform::new(lo, hi).unwrap())
}

fn support() -> impl Strategy<Value = (f64, f64)> {
    (0.0..1.5f64, 0.0..1.5f64)
}

fn link() -> impl Strategy<Value = LinkType> {
    prop_oneof![Just(LinkType::Los), Just(LinkType::Nlos)]
}

fn scheme() -> impl Strategy<Value = AssociationScheme> {
    prop_oneof![
        Just(AssociationScheme::Mapas),
        Just(AssociationScheme::Cdas)
    ]
}

proptest! {
    #[test]
    fn case_probabilities_form_a_distribution(
        a in support(), b in support(), c in support(), d in support(),
        n_ue in 1u32..65, n_uav in 1u32..65,
    ) {
        let model = MisalignmentModel {
            ue_azimuth: uniform(-a.0, a.1),
            ue_elevation: uniform(-b.0, b.1),
            uav_azimuth: uniform(-c.0, c.1),
            uav_elevation: uniform(-d.0, d.1),
        };
        let p = case_probabilities(&model, &antenna_from_count(n_ue).unwrap(), &antenna_from_count(n_uav).unwrap());
        for x in p {
            prop_assert!((0.0..=1.0).contains(&x));
        }
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn omega_is_a_probability_nondecreasing_in_width(lo in 0.0..1.5f64, hi in 0.0..1.5f64, w in 0.0..3.0f64, extra in 0.0..1.0f64) {
        let dist = Uniform::new(-lo, hi).unwrap();
        let narrow = omega(&dist, w);
        let wide = omega(&dist, w + extra);
        prop_assert!((0.0..=1.0).contains(&narrow));
        prop_assert!(wide >= narrow - 1e-15);
    }

    #[test]
    fn los_probability_in_unit_interval_and_ordered(z in 0.0..1e5f64, h in 1.0..1000.0f64, dz in 1e-3..1e3f64, dh in 1e-3..100.0f64) {
        let p = ChannelParams::default();
        let v = los_probability(z, h, &p);
        prop_assert!(v > 0.0 && v <= 1.0);
        prop_assert!(los_probability(z + dz, h, &p) <= v);
        prop_assert!(los_probability(z, h + dh, &p) >= v);
    }

    #[test]
    fn projection_region_is_ordered(
        h_serving in 50.0..300.0f64, excess in 0.0..3000.0f64, delta in -0.6..0.6f64,
        target in 50.0..300.0f64, n_ue in 1u32..65,
    ) {
        let ctx = ServingContext::new(0, LinkType::Los, h_serving + excess, h_serving, delta);
        let region = projection_region(&ctx, target, &antenna_from_count(n_ue).unwrap());
        match region.inner_radius {
            Radius::Finite(zin) => {
                prop_assert!(zin >= 0.0);
                prop_assert!(region.outer_radius >= region.inner_radius);
            }
            Radius::Unbounded => prop_assert!(region.is_empty()),
        }
    }

    #[test]
    fn exclusion_radius_is_nonnegative_and_grows_with_r(
        s in scheme(), serving in link(), other in link(), r in 150.0..5000.0f64, dr in 0.0..500.0f64,
    ) {
        let p = ChannelParams::default();
        let a = equivalent_distance(s, r, serving, other, 150.0, &p);
        let b = equivalent_distance(s, r + dr, serving, other, 150.0, &p);
        prop_assert!(a >= 0.0);
        prop_assert!(b >= a);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn log_laplace_nonpositive_and_nonincreasing(
        s_scheme in scheme(), serving in link(), tier in 0usize..2, excess in 0.0..800.0f64,
        delta in -0.26..0.26f64, log_s in 0.0..12.0f64, factor in 1.0..10.0f64,
    ) {
        let net = NetworkConfig::dense_urban();
        let h = net.tiers[tier].height;
        let ctx = ServingContext::new(tier, serving, h + excess, h, delta);
        let s = 10f64.powf(log_s);
        let q1 = log_laplace(s, &ctx, &net, s_scheme).value;
        let q2 = log_laplace(s * factor, &ctx, &net, s_scheme).value;
        prop_assert!(q1 <= 0.0);
        prop_assert!(q2 <= q1 + 1e-9 * q1.abs().max(1e-12));
    }
}
