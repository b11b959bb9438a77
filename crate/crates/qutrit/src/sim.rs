//! Density-matrix execution of pulse schedules with optional decoherence.

use std::collections::hash_map::Entry;
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::kernels;
use crate::noise::device::NoiseModel;
use crate::qudit::{CMatrix, DensityState, QuditIndexing, C64, D};
use crate::synthesis::schedule::{entangler_phases, evolve_phases, item_operator, ChainCouplings, PulseSchedule, ScheduleItem};

type SparseSuperop = Vec<(usize, usize, C64)>;

/// Runs `schedule` on the density matrix `rho`. With a noise model, every
/// qutrit gets its decoherence channel after each free-evolution segment;
/// pulses and ideal entanglers are noiseless.
pub fn simulate_density(
    schedule: &PulseSchedule,
    couplings: &ChainCouplings,
    noise: Option<&NoiseModel>,
    rho: &CMatrix,
) -> Result<CMatrix> {
    schedule.validate()?;
    let n = schedule.n_sites();
    let idx = QuditIndexing::qutrits(n);
    if rho.nrows() != idx.dim() || rho.ncols() != idx.dim() {
        return Err(Error::Dimension(format!("{}x{} density matrix for {n} qutrits", rho.nrows(), rho.ncols())));
    }
    if let Some(m) = noise {
        if m.n_sites() < n {
            return Err(Error::Dimension(format!("noise model covers {} of {n} qutrits", m.n_sites())));
        }
    }
    let mut cache: HashMap<(usize, u64), SparseSuperop> = HashMap::new();
    let mut rho = rho.clone();
    for it in schedule.items() {
        match it {
            ScheduleItem::Evolve { pairs, duration_ns } => {
                kernels::diag_conjugate(&mut rho, &evolve_phases(idx, pairs, *duration_ns, couplings));
                if let (Some(m), true) = (noise, *duration_ns > 0.0) {
                    for site in 0..n {
                        let key = (site, duration_ns.to_bits());
                        if let Entry::Vacant(e) = cache.entry(key) {
                            e.insert(kernels::site_superoperator(m.channel(site, *duration_ns)?.kraus()));
                        }
                        kernels::apply_site_superoperator(&mut rho, idx, site, &cache[&key]);
                    }
                }
            }
            ScheduleItem::Entangler { sites, kind } => {
                kernels::diag_conjugate(&mut rho, &entangler_phases(idx, *sites, *kind))
            }
            other => {
                let (sites, op) = item_operator(other);
                kernels::conjugate(&mut rho, idx, &sites, &op);
            }
        }
    }
    Ok(rho)
}

/// [`simulate_density`] on a validated state.
pub fn run_schedule(
    schedule: &PulseSchedule,
    couplings: &ChainCouplings,
    noise: Option<&NoiseModel>,
    rho: &DensityState,
) -> Result<DensityState> {
    if rho.d() != D || rho.n() != schedule.n_sites() {
        return Err(Error::Dimension("state does not match schedule register".into()));
    }
    DensityState::unchecked(D, rho.n(), simulate_density(schedule, couplings, noise, rho.matrix())?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::device::DeviceConfig;
    use crate::qudit::{state_fidelity, PureState};
    use crate::synthesis::decoupling::dd_epr_prep_schedule;
    use crate::synthesis::entangling::epr_prep_schedule;

    #[test]
    fn noiseless_matches_unitary() {
        let cfg = DeviceConfig::paper();
        let couplings = cfg.couplings();
        let s = dd_epr_prep_schedule(&couplings);
        let u = s.unitary(&couplings).unwrap();
        let psi = PureState::from_digits(3, &[0, 1, 0, 2, 1]);
        let rho = psi.projector();
        let out = simulate_density(&s, &couplings, None, &rho).unwrap();
        let expect = u.matrix() * &rho * u.matrix().adjoint();
        assert!((out - expect).norm() < 1e-10);
    }

    #[test]
    fn noise_lowers_epr_fidelity() {
        let cfg = DeviceConfig::paper();
        let couplings = ChainCouplings::new();
        let s = epr_prep_schedule();
        let rho0 = PureState::basis(3, 2, 0).density();
        let clean = run_schedule(&s, &couplings, None, &rho0).unwrap();
        assert!((state_fidelity(&clean, &PureState::epr()).unwrap() - 1.0).abs() < 1e-10);
        let model = cfg.noise_model(1.0).unwrap().unwrap();
        let noisy = run_schedule(&s, &couplings, Some(&model), &rho0).unwrap();
        let f = state_fidelity(&noisy, &PureState::epr()).unwrap();
        assert!(f < 1.0 - 1e-4 && f > 0.9, "{f}");
        assert!((noisy.matrix().trace().re - 1.0).abs() < 1e-10);
    }

    #[test]
    fn superoperator_kernel_matches_kraus() {
        let cfg = DeviceConfig::paper();
        let model = cfg.noise_model(3.0).unwrap().unwrap();
        let idx = QuditIndexing::qutrits(3);
        let psi = PureState::normalized(3, 3, crate::qudit::CVector::from_fn(27, |r, _| C64::new(1.0 + r as f64, 0.5 * r as f64))).unwrap();
        let rho = psi.projector();
        let ch = model.channel(1, 400.0).unwrap();
        let expect = crate::noise::channel::apply_channel_matrix(&ch, &rho, idx, &[1]);
        let mut got = rho.clone();
        kernels::apply_site_superoperator(&mut got, idx, 1, &kernels::site_superoperator(ch.kraus()));
        assert!((got - expect).norm() < 1e-13);
    }
}
