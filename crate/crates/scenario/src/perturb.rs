use netcore::{Network, OdMatrix, Scalar};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::config::DisruptionLevel;
use crate::error::ScenarioError;

/// Uniform draw converted into the working scalar type; collapses to the
/// lower bound when the range is degenerate.
fn draw_factor<T: Scalar, R: Rng>(rng: &mut R, low: f64, high: f64) -> T {
    let v = if low < high { rng.gen_range(low..high) } else { low };
    T::from_f64(v).unwrap()
}

/// Multiplies every positive demand entry by its own factor drawn from
/// U(low, high). Entry order of the draw stream follows the matrix's
/// sorted pair order.
pub fn scale_od<T: Scalar, R: Rng>(
    od: &OdMatrix<T>,
    rng: &mut R,
    low: f64,
    high: f64,
) -> Result<OdMatrix<T>, ScenarioError> {
    if !(low > 0.0 && low <= high) {
        return Err(ScenarioError::Domain(format!(
            "demand scale range ({low}, {high}) must satisfy 0 < low <= high"
        )));
    }
    let scaled = od
        .iter()
        .map(|(o, d, q)| (o, d, q * draw_factor::<T, _>(rng, low, high)))
        .collect::<Vec<_>>();
    OdMatrix::from_entries(scaled).map_err(ScenarioError::from)
}

/// Multiplies every link capacity by its own factor drawn from the level's
/// disruption range; all other attributes and the node set are unchanged.
pub fn scale_capacities<T: Scalar, R: Rng>(
    net: &Network<T>,
    rng: &mut R,
    level: DisruptionLevel,
) -> Result<Network<T>, ScenarioError> {
    let (low, high) = level.capacity_range().ok_or_else(|| {
        ScenarioError::Domain(
            "mixed-LMH is a dataset-level setting; capacity scaling needs L, M, or H".into(),
        )
    })?;
    let links = net
        .links()
        .iter()
        .map(|link| {
            let mut scaled = link.clone();
            scaled.capacity = link.capacity * draw_factor::<T, _>(rng, low, high);
            scaled
        })
        .collect();
    Network::with_first_thru(net.nodes().to_vec(), links, net.first_thru_node())
        .map_err(ScenarioError::from)
}

/// Zeroes out exactly `round(mask_ratio * positive entries)` randomly chosen
/// positive entries and reports them, sorted, as the mask.
pub fn mask_od<T: Scalar, R: Rng>(
    od: &OdMatrix<T>,
    mask_ratio: f64,
    rng: &mut R,
) -> Result<(OdMatrix<T>, Vec<(usize, usize)>), ScenarioError> {
    if !(0.0..=1.0).contains(&mask_ratio) {
        return Err(ScenarioError::Domain(format!(
            "mask ratio {mask_ratio} must lie in [0, 1]"
        )));
    }
    let mut pairs: Vec<(usize, usize)> = od.iter().map(|(o, d, _)| (o, d)).collect();
    let count = (mask_ratio * pairs.len() as f64).round() as usize;
    let (chosen, _) = pairs.partial_shuffle(rng, count);
    let mut mask: Vec<(usize, usize)> = chosen.to_vec();
    mask.sort_unstable();

    let mut observed = od.clone();
    for &(o, d) in &mask {
        observed.set(o, d, T::zero())?;
    }
    Ok((observed, mask))
}
