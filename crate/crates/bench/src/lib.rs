//! Inputs shared by the benchmarks.

use influence_core::{ChainRole, EventKind, InfluenceNetwork, NetworkBuilder, Side};

/// A particle chain emitting `n` times, alternating sides, each emission
/// received one tick later on the matching observer chain.
pub fn free_particle_network(n: usize) -> InfluenceNetwork {
    let mut b = NetworkBuilder::new();
    let pi = b.add_chain("pi", ChainRole::Particle, None).unwrap();
    let p = b.add_chain("P", ChainRole::Observer, Some(Side::P)).unwrap();
    let q = b.add_chain("Q", ChainRole::Observer, Some(Side::Q)).unwrap();
    for i in 0..n {
        let side = if i % 2 == 0 { Side::P } else { Side::Q };
        let v = i as i64 + 1;
        let e = b.add_event(pi, &format!("e{i}"), v, EventKind::Emission, Some(side)).unwrap();
        let obs = if side == Side::P { p } else { q };
        let r = b.add_event(obs, &format!("r{i}"), v + 1, EventKind::ObserverReception, Some(side)).unwrap();
        b.add_influence(e, r).unwrap();
    }
    b.build().unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn network_has_expected_shape() {
        let net = free_particle_network(10);
        assert_eq!(net.len(), 20);
        assert!(net.leq_by_name("e0", "r8").unwrap());
        assert!(!net.leq_by_name("r1", "e0").unwrap());
        assert!(net.collinearity_scan_all().unwrap().is_empty());
    }
}
