//! Canned desk-scale sweeps behind `scalinv reproduce <id>`. Sizes and
//! realization counts are far below publication scale; every run records
//! them in its manifest.

use scalinv_core::analysis::PinfMode;
use scalinv_core::models::ModelConfig;
use scalinv_core::quench::InitialFamily;

use crate::config::{CollapseSpec, Scan, SweepConfig, Task};

pub const PRESET_IDS: [&str; 8] = ["fig1", "fig2", "fig3", "figS1", "figS3", "figS4", "figS5", "figS6"];

const AA_SIZES: [usize; 4] = [250, 500, 1000, 2000];
const ANDERSON_SIZES: [usize; 3] = [8, 10, 12];
const AVALANCHE_SIZES: [usize; 3] = [6, 7, 8];

fn sweep(model: ModelConfig, sizes: &[usize], n: usize, tasks: &[Task]) -> SweepConfig {
    let mut c = SweepConfig::new(model, sizes.to_vec());
    c.n_realizations = n;
    c.tasks = tasks.to_vec();
    c
}

fn scanned(mut c: SweepConfig, parameter: &str, values: &[f64]) -> SweepConfig {
    c.scan = Some(Scan {
        parameter: parameter.into(),
        values: values.to_vec(),
    });
    c
}

fn aa(values: &[f64], n: usize, tasks: &[Task]) -> SweepConfig {
    let mut c = scanned(sweep(ModelConfig::aubry_andre(250, 2.0), &AA_SIZES, n, tasks), "lambda", values);
    c.fits.power_law_window = Some((3e-3, 3e-2));
    c
}

fn anderson(values: &[f64], n: usize, tasks: &[Task]) -> SweepConfig {
    let mut c = scanned(sweep(ModelConfig::anderson3d(8, 16.5), &ANDERSON_SIZES, n, tasks), "W", values);
    c.fits.pinf = PinfMode::Free;
    c
}

fn avalanche(values: &[f64], n: usize, tasks: &[Task]) -> SweepConfig {
    let mut c = scanned(
        sweep(ModelConfig::avalanche(5, 6, 0.716), &AVALANCHE_SIZES, n, tasks),
        "alpha",
        values,
    );
    c.realizations_per_size.insert("8".into(), (n / 5).max(5));
    c
}

const AA_REGIMES: [f64; 3] = [1.0, 2.0, 3.0];
const ANDERSON_REGIMES: [f64; 3] = [10.0, 16.5, 25.0];
const AVALANCHE_REGIMES: [f64; 3] = [0.6, 0.716, 0.85];

/// Named sweeps for a figure id, or `None` for an unknown id.
pub fn preset(id: &str) -> Option<Vec<(String, SweepConfig)>> {
    use Task::*;
    let curves = [Survival, Ipr, Heisenberg];
    let named = |items: Vec<(&str, SweepConfig)>| {
        Some(items.into_iter().map(|(n, c)| (n.to_string(), c)).collect())
    };
    match id {
        "fig1" => named(vec![
            ("aubry-andre", aa(&AA_REGIMES, 100, &curves)),
            ("anderson", anderson(&ANDERSON_REGIMES, 50, &curves)),
            ("avalanche", avalanche(&AVALANCHE_REGIMES, 50, &curves)),
        ]),
        "fig2" => named(vec![
            ("aubry-andre", aa(&[2.0], 200, &curves)),
            ("anderson", anderson(&[16.5], 100, &curves)),
            ("avalanche", avalanche(&[0.716], 100, &curves)),
        ]),
        "fig3" => named(vec![
            ("aubry-andre", aa(&AA_REGIMES, 100, &[Ipr, Heisenberg])),
            ("anderson", anderson(&ANDERSON_REGIMES, 50, &[Ipr, Heisenberg])),
            ("avalanche", avalanche(&AVALANCHE_REGIMES, 50, &[Ipr, Heisenberg])),
        ]),
        "figS1" => {
            let alphas: Vec<f64> = (0..17).map(|i| 0.55 + 0.025 * i as f64).collect();
            let mut c = scanned(sweep(ModelConfig::avalanche(5, 5, 0.716), &[5, 6, 7, 8], 100, &[Rstat]), "alpha", &alphas);
            c.realizations_per_size.insert("8".into(), 30);
            c.fits.collapse = Some(CollapseSpec {
                alpha_range: (0.55, 0.95),
                mu_range: (0.2, 2.0),
            });
            named(vec![("avalanche-rstat", c)])
        }
        "figS3" => named(vec![
            ("aubry-andre", aa(&AA_REGIMES, 100, &[Sff, Survival, Ipr])),
            ("anderson", anderson(&ANDERSON_REGIMES, 50, &[Sff, Survival, Ipr])),
        ]),
        "figS4" => named(vec![("avalanche", avalanche(&AVALANCHE_REGIMES, 50, &[Sff, Survival, Ipr]))]),
        "figS5" => {
            let mut c = aa(&[2.0], 100, &[Survival, Ipr, Heisenberg]);
            c.initial_states = InitialFamily::PlaneWave;
            named(vec![("aubry-andre-plane-wave", c)])
        }
        "figS6" => {
            let mut c = avalanche(&[0.716], 50, &[Survival, Ipr, Heisenberg]);
            c.initial_states = InitialFamily::PlaneWave;
            named(vec![("avalanche-plane-wave", c)])
        }
        _ => None,
    }
}
