//! Posterior summaries of a trace: co-clustering, the posterior of the
//! number of clusters/groups, a partition point estimate, and effective
//! sample sizes.

use crate::mcmc::Trace;
use crate::{Error, Result};

/// Clustering level: mixture components, or shot-noise groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Component,
    Group,
}

/// Pairwise posterior co-assignment probabilities. Symmetric with unit
/// diagonal.
#[derive(Debug, Clone)]
pub struct CoclusteringMatrix {
    pub n: usize,
    values: Vec<f64>,
}

impl CoclusteringMatrix {
    fn zeros(n: usize) -> Self {
        Self {
            n,
            values: vec![0.0; n * n],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    fn add(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.n + j] += v;
        if i != j {
            self.values[j * self.n + i] += v;
        }
    }

    fn scale(&mut self, s: f64) {
        for v in &mut self.values {
            *v *= s;
        }
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n)
                .map(|j| format!("{:.6}", self.get(i, j)))
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn labels_of(trace: &Trace, idx: usize, level: Level) -> Result<Vec<usize>> {
    let r = &trace.records[idx];
    match level {
        Level::Component => Ok(r.allocations.clone()),
        Level::Group => r
            .groups
            .clone()
            .ok_or_else(|| Error::InvalidParameter("group summaries need an SNCP trace".into())),
    }
}

/// Monte Carlo frequency of co-assignment per observation pair.
pub fn coclustering(trace: &Trace, level: Level) -> Result<CoclusteringMatrix> {
    if trace.is_empty() {
        return Err(Error::InvalidParameter("empty trace".into()));
    }
    let n = trace.records[0].allocations.len();
    let mut ccm = CoclusteringMatrix::zeros(n);
    for idx in 0..trace.len() {
        let labels = labels_of(trace, idx, level)?;
        // Group indices by label to touch only co-assigned pairs.
        let mut by_label: std::collections::HashMap<usize, Vec<usize>> =
            std::collections::HashMap::new();
        for (i, &l) in labels.iter().enumerate() {
            by_label.entry(l).or_default().push(i);
        }
        for members in by_label.values() {
            for (a, &i) in members.iter().enumerate() {
                ccm.add(i, i, 1.0);
                for &j in &members[a + 1..] {
                    ccm.add(i, j, 1.0);
                }
            }
        }
    }
    ccm.scale(1.0 / trace.len() as f64);
    Ok(ccm)
}

/// Empirical pmf of the number of distinct labels; index r is the
/// probability of r clusters (index 0 unused).
pub fn kn_posterior(trace: &Trace, level: Level) -> Result<Vec<f64>> {
    if trace.is_empty() {
        return Err(Error::InvalidParameter("empty trace".into()));
    }
    let mut counts: Vec<f64> = Vec::new();
    for idx in 0..trace.len() {
        let labels = labels_of(trace, idx, level)?;
        let mut distinct: Vec<usize> = labels.clone();
        distinct.sort_unstable();
        distinct.dedup();
        let k = distinct.len();
        if counts.len() <= k {
            counts.resize(k + 1, 0.0);
        }
        counts[k] += 1.0;
    }
    let total: f64 = counts.iter().sum();
    for c in &mut counts {
        *c /= total;
    }
    Ok(counts)
}

fn canonical_partition(labels: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    let mut next = 0usize;
    labels
        .iter()
        .map(|l| {
            *map.entry(*l).or_insert_with(|| {
                let v = next;
                next += 1;
                v
            })
        })
        .collect()
}

/// Least-squares partition point estimate: among the partitions visited by
/// the trace, the one whose induced binary co-assignment matrix is closest
/// to the co-clustering matrix in squared Frobenius distance.
pub fn point_partition(
    trace: &Trace,
    ccm: &CoclusteringMatrix,
    level: Level,
) -> Result<Vec<usize>> {
    if trace.is_empty() {
        return Err(Error::InvalidParameter("empty trace".into()));
    }
    let n = ccm.n;
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut seen = std::collections::HashSet::new();
    for idx in 0..trace.len() {
        let labels = canonical_partition(&labels_of(trace, idx, level)?);
        if !seen.insert(labels.clone()) {
            continue;
        }
        let mut score = 0.0;
        for i in 0..n {
            for j in 0..n {
                let b = if labels[i] == labels[j] { 1.0 } else { 0.0 };
                let d = b - ccm.get(i, j);
                score += d * d;
            }
        }
        if best.as_ref().map(|(s, _)| score < *s).unwrap_or(true) {
            best = Some((score, labels));
        }
    }
    Ok(best.unwrap().1)
}

/// Effective sample size by the initial-positive-sequence autocorrelation
/// estimator. A constant series has no information and reports zero.
pub fn ess(series: &[f64]) -> f64 {
    let n = series.len();
    if n < 4 {
        return 0.0;
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let gamma0: f64 = series.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    if gamma0 <= 0.0 {
        return 0.0;
    }
    let acov = |t: usize| -> f64 {
        let mut s = 0.0;
        for i in 0..(n - t) {
            s += (series[i] - mean) * (series[i + t] - mean);
        }
        s / n as f64
    };
    let mut sum_pairs = 0.0;
    let mut t = 1usize;
    // Geyer pairs: rho_{2m-1} + rho_{2m} summed while positive.
    loop {
        if t + 1 >= n {
            break;
        }
        let pair = (acov(t) + acov(t + 1)) / gamma0;
        if pair <= 0.0 {
            break;
        }
        sum_pairs += pair;
        t += 2;
    }
    let denom = 1.0 + 2.0 * sum_pairs;
    (n as f64 / denom).min(n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcmc::TraceRecord;
    use crate::rngutil::substream;
    use rand::Rng;

    fn record(allocs: Vec<usize>, groups: Option<Vec<usize>>) -> TraceRecord {
        TraceRecord {
            iteration: 0,
            k_n: 0,
            allocations: allocs,
            u: 1.0,
            atoms: vec![],
            groups,
        }
    }

    #[test]
    fn coclustering_extremes() {
        let all_together = Trace {
            records: vec![record(vec![0, 0, 0], None)],
        };
        let ccm = coclustering(&all_together, Level::Component).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(ccm.get(i, j), 1.0);
            }
        }
        let singletons = Trace {
            records: vec![record(vec![0, 1, 2], None)],
        };
        let ccm = coclustering(&singletons, Level::Component).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(ccm.get(i, j), if i == j { 1.0 } else { 0.0 });
            }
        }
        let half = Trace {
            records: vec![record(vec![0, 0], None), record(vec![0, 1], None)],
        };
        let ccm = coclustering(&half, Level::Component).unwrap();
        assert_eq!(ccm.get(0, 1), 0.5);
    }

    #[test]
    fn group_level_requires_sncp() {
        let t = Trace {
            records: vec![record(vec![0, 1], None)],
        };
        assert!(coclustering(&t, Level::Group).is_err());
        let t = Trace {
            records: vec![record(vec![0, 1], Some(vec![2, 2]))],
        };
        let ccm = coclustering(&t, Level::Group).unwrap();
        assert_eq!(ccm.get(0, 1), 1.0);
    }

    #[test]
    fn kn_posterior_basics() {
        let t = Trace {
            records: vec![record(vec![0, 1, 2], None)],
        };
        let pmf = kn_posterior(&t, Level::Component).unwrap();
        assert_eq!(pmf[3], 1.0);
        let t = Trace {
            records: vec![record(vec![0, 0], None), record(vec![0, 1], None)],
        };
        let pmf = kn_posterior(&t, Level::Component).unwrap();
        assert!((pmf[1] - 0.5).abs() < 1e-12);
        assert!((pmf[2] - 0.5).abs() < 1e-12);
        assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn point_partition_extremes() {
        // Identity ccm -> singleton partition wins among visited.
        let t = Trace {
            records: vec![record(vec![0, 1, 2], None), record(vec![0, 0, 0], None)],
        };
        let ccm = coclustering(
            &Trace {
                records: vec![record(vec![0, 1, 2], None)],
            },
            Level::Component,
        )
        .unwrap();
        let part = point_partition(&t, &ccm, Level::Component).unwrap();
        assert_eq!(part, vec![0, 1, 2]);
        // All-ones ccm -> single block wins.
        let ccm = coclustering(
            &Trace {
                records: vec![record(vec![0, 0, 0], None)],
            },
            Level::Component,
        )
        .unwrap();
        let part = point_partition(&t, &ccm, Level::Component).unwrap();
        assert_eq!(part, vec![0, 0, 0]);
    }

    #[test]
    fn point_partition_block_diagonal_exhaustive() {
        // Block ccm against all partitions of n = 6 visited in the trace:
        // the block partition must win.
        let n = 6;
        let truth = vec![0usize, 0, 0, 1, 1, 1];
        let mut records = Vec::new();
        fn enumerate(n: usize) -> Vec<Vec<usize>> {
            let mut out = Vec::new();
            fn rec(
                i: usize,
                n: usize,
                labels: &mut Vec<usize>,
                k: usize,
                out: &mut Vec<Vec<usize>>,
            ) {
                if i == n {
                    out.push(labels.clone());
                    return;
                }
                for l in 0..=k {
                    labels.push(l);
                    rec(i + 1, n, labels, k.max(l + 1), out);
                    labels.pop();
                }
            }
            rec(0, n, &mut Vec::new(), 0, &mut out);
            out
        }
        for p in enumerate(n) {
            records.push(record(p, None));
        }
        let trace = Trace { records };
        let ccm = coclustering(
            &Trace {
                records: vec![record(truth.clone(), None)],
            },
            Level::Component,
        )
        .unwrap();
        let part = point_partition(&trace, &ccm, Level::Component).unwrap();
        assert_eq!(part, truth);
    }

    #[test]
    fn ess_iid_and_ar1() {
        let mut rng = substream(77, "ess");
        let n = 20_000;
        let iid: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let e = ess(&iid);
        assert!(
            (e - n as f64).abs() < 0.2 * n as f64,
            "iid ess {e} vs n {n}"
        );
        // AR(1) with phi = 0.9: ess ~ n (1 - phi) / (1 + phi).
        let phi = 0.9f64;
        let mut x = 0.0;
        let noise = rand_distr::Normal::new(0.0, 1.0).unwrap();
        let ar: Vec<f64> = (0..n)
            .map(|_| {
                x = phi * x + rand_distr::Distribution::sample(&noise, &mut rng);
                x
            })
            .collect();
        let e = ess(&ar);
        let expect = n as f64 * (1.0 - phi) / (1.0 + phi);
        assert!((e - expect).abs() < 0.3 * expect, "ar1 ess {e} vs {expect}");
        // Constant series is defined as zero.
        assert_eq!(ess(&vec![2.5; 100]), 0.0);
    }
}
