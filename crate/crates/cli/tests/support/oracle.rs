//! Brute-force recomputation of a local explanation, written from the
//! definitions alone: materialize every perturbed row, score it, and apply
//! the sub-score formulas literally. Shares no code with the engine.

/// Ties between flip distances closer than this resolve to the lower level.
const TIE: f64 = 1e-12;

/// Linear-interpolation sample quantile of ascending data.
pub fn type7_quantile(sorted: &[f64], level: f64) -> f64 {
    let n = sorted.len();
    let pos = level * (n - 1) as f64;
    let k = pos.floor() as usize;
    if k + 1 >= n {
        return sorted[n - 1];
    }
    let frac = pos - k as f64;
    sorted[k] + frac * (sorted[k + 1] - sorted[k])
}

/// Levels `k / (Q - 1)` and the matching quantile values of each column.
pub struct OracleGrid {
    pub levels: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl OracleGrid {
    pub fn new(rows: &[Vec<f64>], q: usize) -> Self {
        let levels: Vec<f64> = (0..q).map(|k| k as f64 / (q - 1) as f64).collect();
        let p = rows[0].len();
        let values = (0..p)
            .map(|j| {
                let mut col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
                col.sort_by(|a, b| a.partial_cmp(b).unwrap());
                levels.iter().map(|&l| type7_quantile(&col, l)).collect()
            })
            .collect();
        Self { levels, values }
    }

    /// Empirical CDF position of `v`, linear between grid points.
    pub fn level_of(&self, j: usize, v: f64) -> f64 {
        let values = &self.values[j];
        let mut last_below = None;
        for (i, &g) in values.iter().enumerate() {
            if g <= v {
                last_below = Some(i);
            }
        }
        let Some(i) = last_below else {
            return 0.0;
        };
        if i == values.len() - 1 {
            return 1.0;
        }
        if values[i] == v {
            return self.levels[i];
        }
        let t = (v - values[i]) / (values[i + 1] - values[i]);
        (self.levels[i] + t * (self.levels[i + 1] - self.levels[i])).clamp(0.0, 1.0)
    }
}

/// The threshold-anchored piecewise-linear score map.
pub fn map_score(m: f64, lo: f64, t: f64, hi: f64) -> f64 {
    let f = if m <= t {
        0.5 * (m - lo) / (t - lo)
    } else {
        0.5 + 0.5 * (m - t) / (hi - t)
    };
    f.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleFeature {
    pub values: Vec<f64>,
    pub scores: Vec<f64>,
    pub baseline_level: f64,
    pub d: f64,
    pub r: f64,
    pub c: u8,
    pub q: f64,
}

impl OracleFeature {
    /// The weighted sum with no clamping.
    pub fn importance(&self, w: [f64; 4]) -> f64 {
        w[0] * self.d + w[1] * f64::from(self.c) + w[2] * self.q + w[3] * self.r
    }
}

pub struct OracleExplanation {
    pub baseline: f64,
    pub features: Vec<OracleFeature>,
    pub scorer_calls: usize,
}

pub fn explain(
    scorer: &dyn Fn(&[f64]) -> f64,
    grid: &OracleGrid,
    (lo, t, hi): (f64, f64, f64),
    x: &[f64],
) -> OracleExplanation {
    let mut calls = 1;
    let fx = map_score(scorer(x), lo, t, hi);
    let mut features = Vec::new();
    for j in 0..x.len() {
        let z: Vec<Vec<f64>> = grid.values[j]
            .iter()
            .map(|&v| {
                let mut row = x.to_vec();
                row[j] = v;
                row
            })
            .collect();
        calls += z.len();
        let scores: Vec<f64> = z.iter().map(|row| map_score(scorer(row), lo, t, hi)).collect();
        let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = scores.iter().cloned().fold(f64::INFINITY, f64::min);
        let d = max - min;
        let r = if d == 0.0 { 0.0 } else { ((fx - min) / d).clamp(0.0, 1.0) };
        let c = u8::from(max >= 0.5 && min < 0.5);
        let qx = grid.level_of(j, x[j]);

        let flips = |s: f64| (fx <= 0.5 && s > 0.5) || (fx >= 0.5 && s < 0.5);
        let distances: Vec<Option<f64>> = grid
            .levels
            .iter()
            .zip(&scores)
            .map(|(&l, &s)| flips(s).then(|| (l - qx).abs()))
            .collect();
        let nearest = distances.iter().flatten().cloned().fold(f64::INFINITY, f64::min);
        // Levels ascend, so the first row within tolerance is the lowest.
        let chosen = distances.iter().flatten().find(|&&dist| dist - nearest <= TIE);
        let q = match (c, chosen) {
            (1, Some(&dist)) => 1.0 - dist,
            _ => 0.0,
        };
        features.push(OracleFeature {
            values: grid.values[j].clone(),
            scores,
            baseline_level: qx,
            d,
            r,
            c,
            q,
        });
    }
    OracleExplanation {
        baseline: fx,
        features,
        scorer_calls: calls,
    }
}
