//! Plot-ready CSV emitters: monitor-trajectory curves and a histogram with
//! an overlaid fitted density scaled to the histogram's units.

use std::io::Write;
use std::path::Path;

use statlearn::lsnr::LsnrReport;
use statlearn::numerics::NoncentralChi2;

/// Trajectory curve: one row per monitored iteration.
pub fn write_trajectory(path: &Path, reports: &[(usize, LsnrReport)]) -> std::io::Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "iteration,lsnr,cdf_at_one")?;
    for (iter, r) in reports {
        writeln!(f, "{iter},{},{}", r.lsnr, r.cdf_at_one)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
pub struct HistogramBin {
    pub left: f64,
    pub right: f64,
    pub count: usize,
}

/// Equal-width bins spanning the observed range.
pub fn histogram(values: &[f64], bins: usize) -> Vec<HistogramBin> {
    assert!(bins >= 1 && !values.is_empty());
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let width = ((hi - lo) / bins as f64).max(f64::MIN_POSITIVE);
    let mut out: Vec<HistogramBin> = (0..bins)
        .map(|i| HistogramBin { left: lo + i as f64 * width, right: lo + (i + 1) as f64 * width, count: 0 })
        .collect();
    for &v in values {
        let idx = (((v - lo) / width) as usize).min(bins - 1);
        out[idx].count += 1;
    }
    out
}

pub fn write_histogram(path: &Path, bins: &[HistogramBin]) -> std::io::Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "bin_left,bin_right,count")?;
    for b in bins {
        writeln!(f, "{},{},{}", b.left, b.right, b.count)?;
    }
    Ok(())
}

/// Fitted density over a grid spanning the histogram, vertically scaled by
/// bin width times sample count so it overlays the counts directly.
pub fn write_density_grid(
    path: &Path,
    dist: &NoncentralChi2,
    bins: &[HistogramBin],
    sample_count: usize,
    grid_points: usize,
) -> std::io::Result<()> {
    let lo = bins.first().expect("nonempty").left;
    let hi = bins.last().expect("nonempty").right;
    let bin_width = bins[0].right - bins[0].left;
    let scale = bin_width * sample_count as f64;
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "x,density")?;
    for i in 0..grid_points {
        let x = lo + (hi - lo) * i as f64 / (grid_points - 1) as f64;
        writeln!(f, "{x},{}", scale * dist.lsnr_pdf(x))?;
    }
    Ok(())
}
