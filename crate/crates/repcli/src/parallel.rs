//! Rayon drivers for the Monte Carlo and direction sampling.
//!
//! Every trial and every direction has its own random stream, and results
//! are collected in index order, so output does not depend on the number of
//! worker threads.

use rayon::prelude::*;
use rydrep_core::emission::{self, AtomCloud, DirectionSample, WaveVectorSet};
use rydrep_core::mc::{self, TrialConfig, TrialStats};

use crate::Error;

pub fn simulate(config: &TrialConfig) -> Result<TrialStats, Error> {
    config.validate()?;
    let outcomes: Vec<_> = (0..config.trials).into_par_iter().map(|i| mc::run_trial(config, i)).collect();
    Ok(TrialStats::from_outcomes(outcomes))
}

pub fn direction_samples(cloud: &AtomCloud, kset: &WaveVectorSet, count: u64, seed: u64) -> Vec<DirectionSample> {
    (0..count).into_par_iter().map(|i| emission::direction_sample(cloud, kset, seed, i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rydrep_core::emission::sample_cloud;
    use rydrep_core::mc::Scheme;
    use rydrep_core::rates::Preset;

    #[test]
    fn parallel_matches_sequential() {
        let c = TrialConfig::new(Preset::Optimistic.params(), Scheme::ChainGen(2), 3000, 9);
        assert_eq!(simulate(&c).unwrap(), mc::simulate(&c).unwrap());
        let cloud = sample_cloud(100, 1e-5, 1).unwrap();
        let k = WaveVectorSet::collinear();
        assert_eq!(direction_samples(&cloud, &k, 50, 2), emission::direction_samples(&cloud, &k, 50, 2));
    }
}
