//! Seeded synthetic data in World Bank layout.
//!
//! Every country shares one response surface from emission inputs to GDP per
//! capita, scaled by a country-specific level, so transfer between countries
//! is possible but imperfect.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::data::{Channel, Dataset, FeatureRow, YearWindow, FEATURE_DIM};
use crate::transfer::CountryData;

pub const FIXTURE_WINDOW: YearWindow = YearWindow::new(1960, 2014);
pub const FIXTURE_SEED: u64 = 20_180_601;

/// Linear drift between a 1960 value and a 2014 value.
#[derive(Debug, Clone, Copy)]
pub struct Drift(pub f64, pub f64);

impl Drift {
    fn at(self, t: f64) -> f64 {
        self.0 + (self.1 - self.0) * t
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CountryProfile {
    pub code: &'static str,
    pub name: &'static str,
    pub gas: Drift,
    pub liquid: Drift,
    pub solid: Drift,
    pub co2: Drift,
    /// Multiplier on the shared response surface.
    pub level: f64,
    /// Inclusive year spans with no GDP value.
    pub gdp_missing: &'static [(i32, i32)],
}

#[allow(clippy::too_many_arguments)]
const fn profile(
    code: &'static str,
    name: &'static str,
    gas: (f64, f64),
    liquid: (f64, f64),
    solid: (f64, f64),
    co2: (f64, f64),
    level: f64,
    gdp_missing: &'static [(i32, i32)],
) -> CountryProfile {
    CountryProfile {
        code,
        name,
        gas: Drift(gas.0, gas.1),
        liquid: Drift(liquid.0, liquid.1),
        solid: Drift(solid.0, solid.1),
        co2: Drift(co2.0, co2.1),
        level,
        gdp_missing,
    }
}

pub const FIXTURE_COUNTRIES: [CountryProfile; 11] = [
    profile(
        "USA",
        "United States",
        (20.0, 27.0),
        (45.0, 41.0),
        (33.0, 31.0),
        (15.0, 16.5),
        2.2,
        &[],
    ),
    profile(
        "EUU",
        "European Union",
        (4.0, 24.0),
        (36.0, 40.0),
        (57.0, 28.0),
        (6.0, 7.0),
        1.8,
        &[],
    ),
    profile(
        "IND",
        "India",
        (0.2, 8.0),
        (22.0, 30.0),
        (76.0, 58.0),
        (0.25, 1.7),
        0.45,
        &[],
    ),
    profile(
        "CMR",
        "Cameroon",
        (0.1, 2.0),
        (92.0, 85.0),
        (5.0, 0.5),
        (0.08, 0.3),
        0.7,
        &[],
    ),
    profile(
        "AFG",
        "Afghanistan",
        (1.0, 20.0),
        (85.0, 60.0),
        (12.0, 15.0),
        (0.05, 0.3),
        0.35,
        &[(1982, 2000)],
    ),
    profile(
        "IRQ",
        "Iraq",
        (10.0, 12.0),
        (80.0, 78.0),
        (0.5, 0.2),
        (1.2, 4.5),
        1.0,
        &[(1965, 1967), (1991, 2003)],
    ),
    profile(
        "MMR",
        "Myanmar",
        (2.0, 30.0),
        (85.0, 55.0),
        (10.0, 12.0),
        (0.1, 0.4),
        0.4,
        &[(1960, 1999)],
    ),
    profile(
        "SYR",
        "Syrian Arab Republic",
        (0.5, 30.0),
        (95.0, 68.0),
        (0.5, 0.1),
        (0.9, 2.0),
        0.8,
        &[(2008, 2014)],
    ),
    profile(
        "YEM",
        "Yemen, Rep.",
        (0.2, 10.0),
        (98.0, 88.0),
        (0.1, 0.1),
        (0.3, 1.0),
        0.55,
        &[(1960, 1989)],
    ),
    profile(
        "CHE",
        "Switzerland",
        (0.5, 14.0),
        (80.0, 80.0),
        (18.0, 1.0),
        (3.5, 4.8),
        3.2,
        &[(1970, 1979)],
    ),
    profile(
        "POL",
        "Poland",
        (3.0, 16.0),
        (8.0, 26.0),
        (88.0, 55.0),
        (6.0, 7.8),
        0.9,
        &[(1960, 1989)],
    ),
];

/// Shared response surface, before the country level and noise.
pub fn response(x: &FeatureRow) -> f64 {
    let [gas, liquid, solid, co2] = *x;
    900.0 + 2400.0 * co2.powf(1.1) + 35.0 * gas + 12.0 * liquid - 8.0 * solid
}

/// Yearly rows for one profile: a smooth drift plus seeded wiggle on each
/// input, and GDP = level * response * exp(AR(1) noise).
fn simulate(p: &CountryProfile, years: &[i32], rng: &mut ChaCha8Rng) -> Vec<(FeatureRow, f64)> {
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let n = years.len();
    let phase: [f64; FEATURE_DIM] =
        std::array::from_fn(|_| rng.random_range(0.0..std::f64::consts::TAU));
    let mut ar = 0.0;
    (0..n)
        .map(|i| {
            let t = if n > 1 {
                i as f64 / (n - 1) as f64
            } else {
                0.0
            };
            let wiggle = |k: usize, amp: f64, rng: &mut ChaCha8Rng| {
                amp * ((6.0 * t + phase[k]).sin() + 0.3 * unit.sample(rng))
            };
            let gas = (p.gas.at(t) + wiggle(0, 0.04 * p.gas.at(t) + 0.05, rng)).max(0.0);
            let liquid = (p.liquid.at(t) + wiggle(1, 0.03 * p.liquid.at(t) + 0.05, rng)).max(0.0);
            let solid = (p.solid.at(t) + wiggle(2, 0.04 * p.solid.at(t) + 0.05, rng)).max(0.0);
            let co2 = (p.co2.at(t) * (1.0 + wiggle(3, 0.05, rng))).max(0.01);
            let x = [gas, liquid, solid, co2];
            ar = 0.6 * ar + 0.04 * unit.sample(rng);
            (x, p.level * response(&x) * ar.exp())
        })
        .collect()
}

fn indicator_title(c: Channel) -> &'static str {
    match c {
        Channel::GasPct => "CO2 emissions from gaseous fuel consumption (% of total)",
        Channel::LiquidPct => "CO2 emissions from liquid fuel consumption (% of total)",
        Channel::SolidPct => "CO2 emissions from solid fuel consumption (% of total)",
        Channel::Co2PerCapita => "CO2 emissions (metric tons per capita)",
        Channel::GdpPerCapita => "GDP per capita (current US$)",
    }
}

fn fmt_cell(v: f64) -> String {
    format!("{}", (v * 1e6).round() / 1e6)
}

/// One World Bank CSV per channel, in `Channel::ALL` order, covering
/// [`FIXTURE_COUNTRIES`] over [`FIXTURE_WINDOW`].
pub fn worldbank_fixture(seed: u64) -> Vec<(Channel, String)> {
    let years: Vec<i32> = (FIXTURE_WINDOW.first..=FIXTURE_WINDOW.last).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let series: Vec<Vec<(FeatureRow, f64)>> = FIXTURE_COUNTRIES
        .iter()
        .map(|p| simulate(p, &years, &mut rng))
        .collect();

    Channel::ALL
        .iter()
        .enumerate()
        .map(|(k, &channel)| {
            let mut out = String::new();
            out.push_str("\"Data Source\",\"World Development Indicators\",\n\n");
            out.push_str("\"Last Updated Date\",\"2015-06-30\",\n\n");
            out.push_str(
                "\"Country Name\",\"Country Code\",\"Indicator Name\",\"Indicator Code\",",
            );
            for y in &years {
                out.push_str(&format!("\"{y}\","));
            }
            out.push('\n');
            for (p, rows) in FIXTURE_COUNTRIES.iter().zip(&series) {
                out.push_str(&format!(
                    "\"{}\",\"{}\",\"{}\",\"{}\",",
                    p.name,
                    p.code,
                    indicator_title(channel),
                    channel.default_indicator_code()
                ));
                for (&year, (x, gdp)) in years.iter().zip(rows) {
                    let missing = channel == Channel::GdpPerCapita
                        && p.gdp_missing.iter().any(|&(a, b)| (a..=b).contains(&year));
                    let cell = match (missing, p.code) {
                        // one country uses the ".." marker to exercise the parser
                        (true, "YEM") => "..".to_string(),
                        (true, _) => String::new(),
                        (false, _) if k < FEATURE_DIM => fmt_cell(x[k]),
                        (false, _) => fmt_cell(*gdp),
                    };
                    out.push_str(&format!("\"{cell}\","));
                }
                out.push('\n');
            }
            (channel, out)
        })
        .collect()
}

/// Smallest per-feature mean shift between two datasets, in pooled
/// within-dataset standard deviations: a value of 1 means every feature
/// moved by at least one standard deviation.
pub fn min_standardized_shift(a: &Dataset, b: &Dataset) -> f64 {
    let stats = |d: &Dataset, k: usize| {
        let n = d.len() as f64;
        let m = d.features().iter().map(|r| r[k]).sum::<f64>() / n;
        let v = d.features().iter().map(|r| (r[k] - m).powi(2)).sum::<f64>() / n;
        (m, v)
    };
    (0..FEATURE_DIM)
        .map(|k| {
            let ((ma, va), (mb, vb)) = (stats(a, k), stats(b, k));
            (ma - mb).abs() / (0.5 * (va + vb)).sqrt()
        })
        .fold(f64::INFINITY, f64::min)
}

const SHIFTED: [CountryProfile; 4] = [
    profile(
        "SA",
        "Synthetic A",
        (5.0, 8.0),
        (30.0, 33.0),
        (55.0, 52.0),
        (1.0, 1.5),
        1.0,
        &[],
    ),
    profile(
        "SB",
        "Synthetic B",
        (15.0, 18.0),
        (37.0, 40.0),
        (43.0, 40.0),
        (3.0, 3.5),
        1.3,
        &[],
    ),
    profile(
        "SC",
        "Synthetic C",
        (25.0, 28.0),
        (44.0, 47.0),
        (31.0, 28.0),
        (5.0, 5.5),
        0.8,
        &[],
    ),
    profile(
        "SD",
        "Synthetic D",
        (35.0, 38.0),
        (51.0, 54.0),
        (9.0, 6.0),
        (7.0, 7.5),
        1.6,
        &[],
    ),
];

/// Four 54-year countries whose inputs are pairwise shifted by at least one
/// pooled standard deviation on every feature.
///
/// # Panics
/// If the generated corpus violates the shift guarantee.
pub fn shifted_corpus(seed: u64) -> Vec<CountryData> {
    let years: Vec<i32> = (1960..2014).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let corpus: Vec<CountryData> = SHIFTED
        .iter()
        .map(|p| {
            let rows = simulate(p, &years, &mut rng);
            let (x, y): (Vec<FeatureRow>, Vec<f64>) = rows.into_iter().unzip();
            let d = Dataset::new(years.clone(), x, y, vec![p.code.to_string(); years.len()])
                .expect("simulated rows are finite");
            CountryData::new(p.code, d)
        })
        .collect();
    for a in &corpus {
        for b in corpus.iter().filter(|b| b.code != a.code) {
            let shift = min_standardized_shift(&a.dataset, &b.dataset);
            assert!(
                shift >= 1.0,
                "{} vs {}: shift {shift} below 1",
                a.code,
                b.code
            );
        }
    }
    corpus
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{build_country_series, parse_worldbank_csv, YearSpan};

    #[test]
    fn fixture_is_deterministic() {
        assert_eq!(worldbank_fixture(3), worldbank_fixture(3));
        assert_ne!(worldbank_fixture(3), worldbank_fixture(4));
    }

    #[test]
    fn fixture_round_trips_through_the_parser() {
        let files = worldbank_fixture(FIXTURE_SEED);
        let tables: Vec<_> = files
            .iter()
            .map(|(c, text)| {
                parse_worldbank_csv(text, c.default_indicator_code(), FIXTURE_WINDOW).unwrap()
            })
            .collect();
        let tables: [_; 5] = tables.try_into().unwrap();
        for p in &FIXTURE_COUNTRIES {
            let s = build_country_series(&tables, p.code).unwrap();
            assert_eq!(s.len(), 55);
            let expected: Vec<YearSpan> = p
                .gdp_missing
                .iter()
                .map(|&(start, end)| YearSpan { start, end })
                .collect();
            assert_eq!(s.missing_windows(), expected, "{}", p.code);
            for c in Channel::INPUTS {
                assert!(s.missing_spans(c).is_empty());
            }
            let gdp = s.to_training_dataset().unwrap();
            assert!(gdp.labels().iter().all(|v| *v > 0.0));
        }
    }

    #[test]
    fn shifted_corpus_holds_its_guarantee() {
        let c = shifted_corpus(7);
        assert_eq!(c.len(), 4);
        assert!(c.iter().all(|d| d.dataset.len() == 54));
    }
}
