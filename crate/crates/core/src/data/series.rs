use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Dataset, IngestError, RawIndicatorTable, FEATURE_DIM};

/// The five indicator roles, in feature order followed by the label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    /// CO2 from gaseous fuel consumption, % of total.
    GasPct,
    /// CO2 from liquid fuel consumption, % of total.
    LiquidPct,
    /// CO2 from solid fuel consumption, % of total.
    SolidPct,
    /// CO2 emissions, metric tons per capita.
    Co2PerCapita,
    /// GDP per capita, current US$.
    GdpPerCapita,
}

impl Channel {
    pub const ALL: [Channel; 5] = [
        Channel::GasPct,
        Channel::LiquidPct,
        Channel::SolidPct,
        Channel::Co2PerCapita,
        Channel::GdpPerCapita,
    ];
    pub const INPUTS: [Channel; FEATURE_DIM] = [
        Channel::GasPct,
        Channel::LiquidPct,
        Channel::SolidPct,
        Channel::Co2PerCapita,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Channel::GasPct => "gas_pct",
            Channel::LiquidPct => "liquid_pct",
            Channel::SolidPct => "solid_pct",
            Channel::Co2PerCapita => "co2_per_capita",
            Channel::GdpPerCapita => "gdp_per_capita",
        }
    }

    /// World Bank indicator code conventionally used for this role.
    pub fn default_indicator_code(self) -> &'static str {
        match self {
            Channel::GasPct => "EN.ATM.CO2E.GF.ZS",
            Channel::LiquidPct => "EN.ATM.CO2E.LF.ZS",
            Channel::SolidPct => "EN.ATM.CO2E.SF.ZS",
            Channel::Co2PerCapita => "EN.ATM.CO2E.PC",
            Channel::GdpPerCapita => "NY.GDP.PCAP.CD",
        }
    }

    fn valid(self, v: f64) -> bool {
        match self {
            Channel::GasPct | Channel::LiquidPct | Channel::SolidPct => (0.0..=110.0).contains(&v),
            Channel::Co2PerCapita | Channel::GdpPerCapita => v >= 0.0,
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-country yearly record of the four emission inputs and the GDP label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountrySeries {
    pub country_code: String,
    pub country_name: String,
    pub years: Vec<i32>,
    pub gas_pct: Vec<Option<f64>>,
    pub liquid_pct: Vec<Option<f64>>,
    pub solid_pct: Vec<Option<f64>>,
    pub co2_per_capita: Vec<Option<f64>>,
    pub gdp_per_capita: Vec<Option<f64>>,
}

/// Contiguous run of years, both ends inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearSpan {
    pub start: i32,
    pub end: i32,
}

impl fmt::Display for YearSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.start == self.end {
            write!(f, "{}", self.start)
        } else {
            write!(f, "{}-{}", self.start, self.end)
        }
    }
}

/// Groups sorted, distinct years into maximal contiguous spans.
pub fn spans(years: impl IntoIterator<Item = i32>) -> Vec<YearSpan> {
    let mut out: Vec<YearSpan> = Vec::new();
    for y in years {
        match out.last_mut() {
            Some(s) if s.end + 1 == y => s.end = y,
            _ => out.push(YearSpan { start: y, end: y }),
        }
    }
    out
}

/// Assembles one country's series from the five tables, given in
/// [`Channel::ALL`] order. Years are the union of the country's columns
/// across tables.
pub fn build_country_series(
    tables: &[RawIndicatorTable; 5],
    country_code: &str,
) -> Result<CountrySeries, IngestError> {
    if !tables.iter().any(|t| t.has_country(country_code)) {
        return Err(IngestError::UnknownCountry(country_code.to_string()));
    }
    let years: Vec<i32> = tables
        .iter()
        .filter_map(|t| t.rows.get(country_code))
        .flat_map(|row| row.keys().copied())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let country_name = tables
        .iter()
        .find_map(|t| t.country_names.get(country_code).cloned())
        .unwrap_or_default();

    let mut channels: Vec<Vec<Option<f64>>> = Vec::with_capacity(5);
    for (table, channel) in tables.iter().zip(Channel::ALL) {
        let mut values = Vec::with_capacity(years.len());
        for &year in &years {
            let v = table.value(country_code, year);
            if let Some(x) = v {
                if !channel.valid(x) {
                    return Err(IngestError::OutOfRange {
                        country: country_code.to_string(),
                        year,
                        channel,
                        value: x,
                    });
                }
            }
            values.push(v);
        }
        channels.push(values);
    }
    let mut it = channels.into_iter();
    let mut next = || it.next().unwrap();
    Ok(CountrySeries {
        country_code: country_code.to_string(),
        country_name,
        years,
        gas_pct: next(),
        liquid_pct: next(),
        solid_pct: next(),
        co2_per_capita: next(),
        gdp_per_capita: next(),
    })
}

impl CountrySeries {
    pub fn channel(&self, channel: Channel) -> &[Option<f64>] {
        match channel {
            Channel::GasPct => &self.gas_pct,
            Channel::LiquidPct => &self.liquid_pct,
            Channel::SolidPct => &self.solid_pct,
            Channel::Co2PerCapita => &self.co2_per_capita,
            Channel::GdpPerCapita => &self.gdp_per_capita,
        }
    }

    pub fn len(&self) -> usize {
        self.years.len()
    }

    pub fn is_empty(&self) -> bool {
        self.years.is_empty()
    }

    fn inputs_at(&self, i: usize) -> Option<[f64; FEATURE_DIM]> {
        Some([
            self.gas_pct[i]?,
            self.liquid_pct[i]?,
            self.solid_pct[i]?,
            self.co2_per_capita[i]?,
        ])
    }

    fn index_of(&self, year: i32) -> Option<usize> {
        self.years.binary_search(&year).ok()
    }

    /// Years where every input and the label are present.
    pub fn complete_years(&self) -> Vec<i32> {
        (0..self.len())
            .filter(|&i| self.inputs_at(i).is_some() && self.gdp_per_capita[i].is_some())
            .map(|i| self.years[i])
            .collect()
    }

    /// Years with all four inputs present but no GDP value.
    pub fn predictable_missing_years(&self) -> Vec<i32> {
        (0..self.len())
            .filter(|&i| self.inputs_at(i).is_some() && self.gdp_per_capita[i].is_none())
            .map(|i| self.years[i])
            .collect()
    }

    /// Maximal runs of years whose value in `channel` is missing.
    pub fn missing_spans(&self, channel: Channel) -> Vec<YearSpan> {
        let values = self.channel(channel);
        spans(
            self.years
                .iter()
                .zip(values)
                .filter(|(_, v)| v.is_none())
                .map(|(y, _)| *y),
        )
    }

    /// Missing GDP windows.
    pub fn missing_windows(&self) -> Vec<YearSpan> {
        self.missing_spans(Channel::GdpPerCapita)
    }

    /// Rows for every year where all five channels are present.
    pub fn to_training_dataset(&self) -> Result<Dataset, IngestError> {
        self.training_rows(|_| true)
    }

    /// Complete rows restricted to the given years.
    pub fn training_dataset_for(&self, years: &[i32]) -> Result<Dataset, IngestError> {
        let wanted: BTreeSet<i32> = years.iter().copied().collect();
        self.training_rows(|y| wanted.contains(&y))
    }

    fn training_rows(&self, keep: impl Fn(i32) -> bool) -> Result<Dataset, IngestError> {
        let mut years = Vec::new();
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for i in 0..self.len() {
            if !keep(self.years[i]) {
                continue;
            }
            if let (Some(x), Some(y)) = (self.inputs_at(i), self.gdp_per_capita[i]) {
                years.push(self.years[i]);
                features.push(x);
                labels.push(y);
            }
        }
        if years.is_empty() {
            return Err(IngestError::EmptyDataset(self.country_code.clone()));
        }
        let origin = vec![self.country_code.clone(); years.len()];
        Ok(Dataset::new(years, features, labels, origin)?)
    }

    /// Feature-only rows for `years`, used as prediction inputs.
    pub fn to_prediction_dataset(&self, years: &[i32]) -> Result<Dataset, IngestError> {
        let mut sorted = years.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let mut features = Vec::with_capacity(sorted.len());
        for &year in &sorted {
            let i = self.index_of(year).ok_or(IngestError::IncompleteFeatures {
                country: self.country_code.clone(),
                year,
                channel: None,
            })?;
            let row = self
                .inputs_at(i)
                .ok_or_else(|| IngestError::IncompleteFeatures {
                    country: self.country_code.clone(),
                    year,
                    channel: Channel::INPUTS
                        .into_iter()
                        .find(|c| self.channel(*c)[i].is_none()),
                })?;
            features.push(row);
        }
        let origin = vec![self.country_code.clone(); sorted.len()];
        Ok(Dataset::unlabeled(sorted, features, origin)?)
    }
}
