//! Frequency response `G(e^{iω}) = c / (e^{iω} - a)`.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodePoint {
    pub omega: f64,
    pub magnitude: f64,
    /// Radians, in `(-π, π]`.
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BodeResponse {
    pub points: Vec<BodePoint>,
    /// `false` when `|a| ≥ 1`.
    pub stable: bool,
}

pub fn transfer_function(a: f64, c: f64, omegas: &[f64]) -> BodeResponse {
    let points = omegas
        .iter()
        .map(|&omega| {
            let re = omega.cos() - a;
            let im = omega.sin();
            let den = re * re + im * im;
            // c / (re + i im) = c (re - i im) / den
            let (g_re, g_im) = (c * re / den, -c * im / den);
            BodePoint {
                omega,
                magnitude: g_re.hypot(g_im),
                phase: g_im.atan2(g_re),
            }
        })
        .collect();
    BodeResponse {
        points,
        stable: a.abs() < 1.0,
    }
}

/// `count` log-spaced frequencies from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (l0, l1) = (lo.ln(), hi.ln());
            (0..count)
                .map(|i| {
                    if i + 1 == count {
                        hi
                    } else {
                        (l0 + (l1 - l0) * i as f64 / (count - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

/// Grid used for emitted Bode data: 200 points in `[1e-2, π]`.
pub fn default_bode_grid() -> Vec<f64> {
    log_spaced(1e-2, std::f64::consts::PI, 200)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn dc_and_nyquist_gains() {
        let r = transfer_function(0.9, 1.0, &[0.0, PI]);
        assert!((r.points[0].magnitude - 10.0).abs() < 1e-12);
        assert_eq!(r.points[0].phase, 0.0);
        assert!((r.points[1].magnitude - 1.0 / 1.9).abs() < 1e-12);
        assert!((r.points[1].magnitude - 0.5263).abs() < 1e-4);
        assert!(r.stable);
    }

    #[test]
    fn zero_gain_and_unstable_flag() {
        let r = transfer_function(1.2, 0.0, &default_bode_grid());
        assert!(r.points.iter().all(|p| p.magnitude == 0.0));
        assert!(!r.stable);
    }

    #[test]
    fn grid_endpoints() {
        let g = default_bode_grid();
        assert_eq!(g.len(), 200);
        assert!((g[0] - 1e-2).abs() < 1e-15);
        assert_eq!(g[199], PI);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }
}
