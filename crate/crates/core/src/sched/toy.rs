//! Self-contained DP instances: explicit value tables, an angle matrix and a
//! toy slew model. Used by the test oracles (exhaustive enumeration) and the
//! runtime-scaling checks, and handy for driving the sweep standalone.

use super::dp::DpEnv;
use crate::acs::SlewModel;
use crate::geom::keyed_unit;

/// A fully explicit sweep instance.
#[derive(Debug, Clone)]
pub struct ToyInstance {
    pub dt: f64,
    /// values[step][gp]
    pub values: Vec<Vec<f64>>,
    /// observable gps per step
    pub nodes: Vec<Vec<u32>>,
    /// pairwise slew angles, degrees
    pub angles: Vec<Vec<f64>>,
    pub slew: SlewModel,
    pub k_sigma: f64,
    pub zero_window_s: f64,
    pub band: (usize, usize),
    /// apply the 1/n + zero-window decay to repeated in-path observations
    pub decay: bool,
}

fn toy_slew_model() -> SlewModel {
    SlewModel { c3: 0.0, c2: 0.0, c1: 0.05, c0: 4.0, sigma_s: 0.0 }
}

impl ToyInstance {
    /// Every gp visible at every step with one constant value; angles grow
    /// 10 degrees per index gap.
    pub fn uniform(n_gps: u32, n_steps: usize, dt: f64, value: f64) -> Self {
        let angles: Vec<Vec<f64>> = (0..n_gps)
            .map(|i| (0..n_gps).map(|j| 10.0 * (i as f64 - j as f64).abs()).collect())
            .collect();
        Self::from_parts(
            dt,
            vec![vec![value; n_gps as usize]; n_steps],
            angles,
            0.0,
            true,
        )
    }

    /// Seeded random instance: values in [1, 10], angles in [0, 60] degrees,
    /// zero window of two steps.
    pub fn random(seed: u64, n_gps: u32, n_steps: usize, dt: f64) -> Self {
        let values: Vec<Vec<f64>> = (0..n_steps)
            .map(|k| {
                (0..n_gps)
                    .map(|g| 1.0 + 9.0 * keyed_unit(&[seed, 0x7a1, k as u64, g as u64]))
                    .collect()
            })
            .collect();
        let mut angles = vec![vec![0.0; n_gps as usize]; n_gps as usize];
        for i in 0..n_gps as usize {
            for j in (i + 1)..n_gps as usize {
                let a = 60.0 * keyed_unit(&[seed, 0x7a2, i as u64, j as u64]);
                angles[i][j] = a;
                angles[j][i] = a;
            }
        }
        Self::from_parts(dt, values, angles, 2.0 * dt, true)
    }

    pub fn from_parts(
        dt: f64,
        values: Vec<Vec<f64>>,
        angles: Vec<Vec<f64>>,
        zero_window_s: f64,
        decay: bool,
    ) -> Self {
        let n_steps = values.len();
        let n_gps = values.first().map_or(0, Vec::len) as u32;
        let slew = toy_slew_model();
        let alpha_max = angles
            .iter()
            .flatten()
            .copied()
            .fold(0.0f64, f64::max)
            .max(1.0);
        let band = slew.slew_band(dt, alpha_max, 0.0).unwrap();
        Self {
            dt,
            values,
            nodes: vec![(0..n_gps).collect(); n_steps],
            angles,
            slew,
            k_sigma: 0.0,
            zero_window_s,
            band,
            decay,
        }
    }

    /// True optimum by exhaustive enumeration over the physical path space:
    /// any strictly increasing steps with slew-feasible gaps (idling allowed,
    /// unconstrained by the search band). Independent of the sweep.
    pub fn exhaustive_optimum(&self) -> f64 {
        fn dfs(
            toy: &ToyInstance,
            k: usize,
            last: Option<(u32, usize)>,
            value: f64,
            obs: &mut Vec<Vec<f64>>,
            best: &mut f64,
        ) {
            if value > *best {
                *best = value;
            }
            if k >= toy.n_steps() {
                return;
            }
            // skip this step
            dfs(toy, k + 1, last, value, obs, best);
            // or observe any feasible gp
            for &gp in toy.nodes_at(k) {
                let feasible = match last {
                    None => toy.start_feasible(gp, k),
                    Some((pg, pk)) => toy.slew_feasible(pg, pk, gp, k),
                };
                if !feasible {
                    continue;
                }
                let v = toy.node_value(gp, k, &obs[gp as usize]);
                obs[gp as usize].push(toy.step_time(k));
                dfs(toy, k + 1, Some((gp, k)), value + v, obs, best);
                obs[gp as usize].pop();
            }
        }
        let n_gps = self.angles.len();
        let mut best = 0.0;
        let mut obs = vec![Vec::new(); n_gps];
        dfs(self, 0, None, 0.0, &mut obs, &mut best);
        best
    }
}

impl DpEnv for ToyInstance {
    fn n_steps(&self) -> usize {
        self.values.len()
    }

    fn step_time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    fn nodes_at(&self, k: usize) -> &[u32] {
        &self.nodes[k]
    }

    fn node_value(&self, gp: u32, k: usize, path_obs: &[f64]) -> f64 {
        let raw = self.values[k][gp as usize];
        if !self.decay {
            return raw;
        }
        // informative-window scan over the in-path observations
        let mut n = 0u32;
        let mut last: Option<f64> = None;
        for &t_obs in path_obs {
            if last.is_none_or(|l| t_obs - l >= self.zero_window_s) {
                n += 1;
                last = Some(t_obs);
            }
        }
        crate::value::decay_from_history(
            raw,
            self.step_time(k),
            n,
            last,
            self.zero_window_s,
            crate::value::CountRule::NSeen,
        )
    }

    fn slew_feasible(&self, gp_from: u32, k_from: usize, gp_to: u32, k_to: usize) -> bool {
        let alpha = self.angles[gp_from as usize][gp_to as usize];
        let t = self.slew.slew_time_s(alpha, self.k_sigma).expect("angle in range");
        t <= (k_to - k_from) as f64 * self.dt + 1e-9
    }

    fn start_feasible(&self, _gp: u32, _k: usize) -> bool {
        true
    }

    fn band(&self) -> (usize, usize) {
        self.band
    }
}
