use mcoal_core::bfw::{lengths_at_q, merge_history, partition_at_q};
use mcoal_core::limit::{limit_excursions, reflect, simulate_levy, ParamTriple};
use mcoal_core::uribe::{build_diagram, mass_process, run_coalescent, sample_coalescent};
use mcoal_core::{draw_clocks, simulate_direct, stream_rng, MassVector, Partition};
use proptest::prelude::*;
use rand::Rng;

fn random_masses(rng: &mut impl Rng, n: usize) -> MassVector {
    MassVector::from_unsorted((0..n).map(|_| 0.05 + 2.0 * rng.random::<f64>()).collect()).unwrap()
}

fn within(p_hat: f64, p: f64, reps: usize, z: f64) -> bool {
    (p_hat - p).abs() <= z * (p * (1.0 - p) / reps as f64).sqrt()
}

#[test]
fn two_blocks_merge_probability_all_generators() {
    let x = MassVector::new(vec![1.0, 1.0]).unwrap();
    let q = 0.7;
    let reps = 20_000;
    let (mut d, mut b, mut u) = (0, 0, 0);
    for r in 0..reps {
        let mut rng = stream_rng(100, r);
        if simulate_direct(&x, q, &mut rng).unwrap().final_partition().num_blocks() == 1 {
            d += 1;
        }
        let clocks = draw_clocks(&x, &mut rng).unwrap();
        if partition_at_q(&x, &clocks, q).unwrap().num_blocks() == 1 {
            b += 1;
        }
        let (_, uc) = sample_coalescent(&x, &mut rng).unwrap();
        if uc.partition_at(q).unwrap().num_blocks() == 1 {
            u += 1;
        }
    }
    let p = 1.0 - (-q).exp();
    for hits in [d, b, u] {
        assert!(within(hits as f64 / reps as f64, p, reps as usize, 3.5), "{hits}");
    }
}

#[test]
fn bfw_and_uribe_events_coincide() {
    for seed in 0..1000 {
        let mut rng = stream_rng(101, seed);
        let n = rng.random_range(1..=50);
        let x = random_masses(&mut rng, n);
        let clocks = draw_clocks(&x, &mut rng).unwrap();
        let uc = run_coalescent(&build_diagram(&x, &clocks).unwrap());
        assert_eq!(uc.merges, merge_history(&x, &clocks));
        let s = rng.random::<f64>() * 3.0;
        let a = mass_process(&uc, s).unwrap();
        let b = lengths_at_q(&x, &clocks, s).unwrap();
        assert_eq!(a.len(), b.len());
        for (u, v) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((u - v).abs() <= 1e-12 * x.total());
        }
    }
}

#[test]
fn direct_events_coarsen_and_conserve_mass() {
    let mut rng = stream_rng(102, 0);
    let x = random_masses(&mut rng, 30);
    let traj = simulate_direct(&x, f64::INFINITY, &mut rng).unwrap();
    assert_eq!(traj.events.len(), 29);
    let mut prev = Partition::trivial(30);
    for e in &traj.events {
        let next = traj.partition_at(e.time).unwrap();
        assert!(prev.refines(&next));
        let total: f64 = next.masses(&x).iter().sum();
        assert!((total - x.total()).abs() < 1e-9 * x.total());
        prev = next;
    }
}

#[test]
fn limit_single_jump_excursion_has_unit_length() {
    // κ = 0, c = (1), t = 0: the jump at ξ starts an excursion of length c₁/c₁² = 1
    let params = ParamTriple::new(0.0, 0.0, vec![1.0]).unwrap();
    for seed in 0..50 {
        let p = simulate_levy(&params, 0.0, 1e-3, 40.0, &mut stream_rng(103, seed)).unwrap();
        let ex = limit_excursions(&reflect(&p), 0.0);
        if p.jumps()[0].0 < 39.0 {
            assert_eq!(ex.lengths.len(), 1);
            assert!((ex.lengths.largest() - 1.0).abs() < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn bfw_partitions_are_nested(seed in any::<u64>(), n in 2usize..40, q1 in 0.0f64..3.0, dq in 0.0f64..3.0) {
        let mut rng = stream_rng(104, seed);
        let x = random_masses(&mut rng, n);
        let clocks = draw_clocks(&x, &mut rng).unwrap();
        let a = partition_at_q(&x, &clocks, q1).unwrap();
        let b = partition_at_q(&x, &clocks, q1 + dq).unwrap();
        prop_assert!(a.refines(&b));
        let total: f64 = lengths_at_q(&x, &clocks, q1).unwrap().total();
        prop_assert!((total - x.total()).abs() <= 1e-9 * x.total());
    }
}
