use betasplice::montecarlo::default_grid;
use betasplice::SurvivalSample;

use crate::error::{CliError, CliResult};

pub const DEFAULT_POINTS: usize = 512;
pub const DEFAULT_EXTENT: f64 = 1.5;

/// Resolves a grid spec and merges in the event times.
pub fn resolve(spec: &str, s: &SurvivalSample) -> CliResult<Vec<f64>> {
    let bad = || {
        CliError::Usage(format!(
            "bad grid spec '{spec}'; expected default, uniform:<points>:<max> or list:<t1>,..."
        ))
    };
    let mut grid = if spec == "default" {
        default_grid(s, DEFAULT_POINTS, DEFAULT_EXTENT)?
    } else if let Some(rest) = spec.strip_prefix("uniform:") {
        let (points, max) = rest.split_once(':').ok_or_else(bad)?;
        let points: usize = points.parse().map_err(|_| bad())?;
        let max: f64 = max.parse().map_err(|_| bad())?;
        if points < 2 || !(max > 0.0 && max.is_finite()) {
            return Err(bad());
        }
        (0..points).map(|i| max * i as f64 / (points - 1) as f64).collect()
    } else if let Some(rest) = spec.strip_prefix("list:") {
        rest.split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<CliResult<Vec<_>>>()?
    } else {
        return Err(bad());
    };
    if grid.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return Err(bad());
    }
    grid.extend(s.records().iter().filter(|o| o.event).map(|o| o.time));
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn specs() {
        let s = SurvivalSample::from_pairs(&[(1.5, true), (2.0, false)]).unwrap();
        assert_eq!(resolve("uniform:3:2", &s).unwrap(), vec![0.0, 1.0, 1.5, 2.0]);
        assert_eq!(resolve("list:0.5, 3", &s).unwrap(), vec![0.5, 1.5, 3.0]);
        assert_eq!(resolve("default", &s).unwrap().len(), 513);
        for bad in ["uniform:3", "list:a", "grid", "list:-1", "uniform:1:2"] {
            assert!(matches!(resolve(bad, &s), Err(CliError::Usage(_))), "{bad}");
        }
    }
}
