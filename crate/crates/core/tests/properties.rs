use proptest::prelude::*;
use spinchain::montecarlo::SpinChain;
use spinchain::{Boundary, Kernel, KernelKind, Params64, SpinConfig};

fn config() -> impl Strategy<Value = SpinConfig> {
    (1usize..=20).prop_flat_map(|len| {
        (Just(len), 0u64..(1u64 << len)).prop_map(|(len, bits)| SpinConfig::new(len, bits).unwrap())
    })
}

fn boundary() -> impl Strategy<Value = Boundary> {
    prop_oneof![Just(Boundary::Plus), Just(Boundary::Empty)]
}

proptest! {
    #[test]
    fn flip_is_an_involution(sigma in config(), site in 1usize..=20) {
        let i = 1 + (site - 1) % sigma.len();
        let tau = sigma.flip(i).unwrap();
        prop_assert_ne!(tau, sigma);
        prop_assert_eq!(tau.flip(i).unwrap(), sigma);
        prop_assert_eq!(tau.spin(i), -sigma.spin(i));
        let diff = tau.minus_count() as i64 - sigma.minus_count() as i64;
        prop_assert_eq!(diff.abs(), 1);
    }

    #[test]
    fn kernel_rows_are_stochastic(
        sigma in config(),
        coupling in 0.0f64..6.0,
        bc in boundary(),
        glauber in any::<bool>(),
    ) {
        let kind = if glauber { KernelKind::Glauber } else { KernelKind::Irreversible };
        let params = Params64::new(sigma.len(), coupling, bc).unwrap();
        let kernel = Kernel::new(kind, &params).unwrap();
        let row = kernel.row(&sigma).unwrap();
        prop_assert!((row.sum() - 1.0).abs() < 1e-12);
        prop_assert!(row.diagonal >= -1e-15);
        for (tau, w) in &row.entries {
            prop_assert!(*w > 0.0 && *w <= 1.0 / sigma.len() as f64 + 1e-15);
            prop_assert_eq!((tau.bits() ^ sigma.bits()).count_ones(), 1);
        }
    }

    #[test]
    fn packed_chain_round_trips(sigma in config(), flips in prop::collection::vec(1usize..=20, 0..40)) {
        let mut chain = SpinChain::from_config(&sigma);
        let mut reference = sigma;
        for site in flips {
            let i = 1 + (site - 1) % sigma.len();
            chain.flip(i);
            reference = reference.flip(i).unwrap();
        }
        prop_assert_eq!(chain.to_config().unwrap(), reference);
        prop_assert_eq!(chain.minus_count() as u32, reference.minus_count());
    }
}
