//! Post-burn-in draws in columnar form plus a JSON sidecar.
//!
//! On disk an archive is a directory holding `samples.csv` (one column per
//! monitored scalar), `samples_meta.json`, and for DP fits `labels.csv`
//! (one row per draw, one integer column per individual) and `atoms.csv`
//! (long form: draw, cluster, count, mean, variance).

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ItemParameters, ModelKind};
use crate::priors::Priors;
use crate::samplers::crp::Atom;
use crate::samplers::strategy::{Parameterization, StrategyConfig};

pub const SAMPLES_FILE: &str = "samples.csv";
pub const META_FILE: &str = "samples_meta.json";
pub const LABELS_FILE: &str = "labels.csv";
pub const ATOMS_FILE: &str = "atoms.csv";

/// Whether the item columns are the raw sampled ones or have been mapped to the
/// identified base parameterization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParameterizationState {
    Sampled,
    Base,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Timing {
    pub burnin_seconds: f64,
    pub sampling_seconds: f64,
    pub total_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveMeta {
    pub strategy: StrategyConfig,
    pub seed: u64,
    pub iterations: usize,
    pub burnin: usize,
    pub thin: usize,
    /// Iterations actually run (smaller than `iterations` when a time budget cut sampling short).
    pub iterations_completed: usize,
    pub n_individuals: usize,
    pub n_items: usize,
    pub parameterization: ParameterizationState,
    pub timing: Timing,
    pub acceptance: BTreeMap<String, f64>,
    pub priors: Priors,
}

/// Cluster labels and occupied atoms for every archived draw.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Clustering {
    n_individuals: usize,
    labels: Vec<u32>,
    atoms: Vec<Vec<Atom>>,
}

impl Clustering {
    pub fn new(n_individuals: usize) -> Self {
        Self {
            n_individuals,
            labels: Vec::new(),
            atoms: Vec::new(),
        }
    }

    pub fn push(&mut self, labels: &[usize], atoms: &[Atom]) -> Result<()> {
        if labels.len() != self.n_individuals {
            return Err(Error::Dimension("label vector length differs from N".into()));
        }
        if let Some(&z) = labels.iter().find(|&&z| z >= atoms.len()) {
            return Err(Error::State(format!("label {z} has no atom")));
        }
        self.labels.extend(labels.iter().map(|&z| z as u32));
        self.atoms.push(atoms.to_vec());
        Ok(())
    }

    pub fn n_draws(&self) -> usize {
        self.atoms.len()
    }

    pub fn n_individuals(&self) -> usize {
        self.n_individuals
    }

    pub fn labels(&self, draw: usize) -> &[u32] {
        &self.labels[draw * self.n_individuals..(draw + 1) * self.n_individuals]
    }

    pub fn atoms(&self, draw: usize) -> &[Atom] {
        &self.atoms[draw]
    }

    pub fn atoms_mut(&mut self, draw: usize) -> &mut [Atom] {
        &mut self.atoms[draw]
    }

    pub fn counts(&self, draw: usize) -> Vec<usize> {
        let mut c = vec![0; self.atoms[draw].len()];
        for &z in self.labels(draw) {
            c[z as usize] += 1;
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleArchive {
    pub meta: ArchiveMeta,
    columns: Vec<String>,
    index: BTreeMap<String, usize>,
    values: Vec<f64>,
    clustering: Option<Clustering>,
}

/// 1-based indexed column name such as `lambda[3]`.
pub fn indexed(name: &str, i: usize) -> String {
    format!("{name}[{}]", i + 1)
}

impl SampleArchive {
    pub fn new(meta: ArchiveMeta, columns: Vec<String>) -> Result<Self> {
        let mut index = BTreeMap::new();
        for (k, c) in columns.iter().enumerate() {
            if index.insert(c.clone(), k).is_some() {
                return Err(Error::Dimension(format!("duplicate column `{c}`")));
            }
        }
        Ok(Self {
            meta,
            columns,
            index,
            values: Vec::new(),
            clustering: None,
        })
    }

    pub fn with_clustering(mut self, clustering: Clustering) -> Self {
        self.clustering = Some(clustering);
        self
    }

    pub fn push_draw(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::Dimension(format!(
                "draw has {} values for {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        self.values.extend_from_slice(row);
        Ok(())
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn n_draws(&self) -> usize {
        if self.columns.is_empty() {
            0
        } else {
            self.values.len() / self.columns.len()
        }
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    fn require(&self, name: &str) -> Result<usize> {
        self.column_index(name)
            .ok_or_else(|| Error::Dimension(format!("archive has no column `{name}`")))
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let k = self.require(name)?;
        Ok(self.column_at(k))
    }

    pub fn column_at(&self, k: usize) -> Vec<f64> {
        let p = self.columns.len();
        self.values.iter().skip(k).step_by(p).copied().collect()
    }

    pub fn draw(&self, t: usize) -> &[f64] {
        let p = self.columns.len();
        &self.values[t * p..(t + 1) * p]
    }

    pub fn draw_mut(&mut self, t: usize) -> &mut [f64] {
        let p = self.columns.len();
        &mut self.values[t * p..(t + 1) * p]
    }

    pub fn clustering(&self) -> Option<&Clustering> {
        self.clustering.as_ref()
    }

    pub fn clustering_mut(&mut self) -> Option<&mut Clustering> {
        self.clustering.as_mut()
    }

    pub fn kind(&self) -> ModelKind {
        self.meta.strategy.kind
    }

    /// Name of the item location column group in this archive.
    pub fn location_name(&self) -> &'static str {
        match (self.meta.parameterization, self.meta.strategy.parameterization) {
            (ParameterizationState::Sampled, Parameterization::SlopeIntercept) => "gamma",
            _ => "beta",
        }
    }

    /// Column offsets of `name[1]..name[n]`, which must be contiguous.
    pub fn block(&self, name: &str, n: usize) -> Result<usize> {
        let start = self.require(&indexed(name, 0))?;
        for i in 1..n {
            if self.column_index(&indexed(name, i)) != Some(start + i) {
                return Err(Error::Dimension(format!("columns `{name}[..]` are not contiguous")));
            }
        }
        Ok(start)
    }

    /// Ability draws for draw `t`.
    pub fn abilities(&self, t: usize) -> Result<&[f64]> {
        let n = self.meta.n_individuals;
        let s = self.block("eta", n)?;
        Ok(&self.draw(t)[s..s + n])
    }

    /// Item parameters of draw `t` in IRT form (requires `beta` columns).
    pub fn items_irt(&self, t: usize) -> Result<ItemParameters> {
        let m = self.meta.n_items;
        let row = self.draw(t);
        let l = self.block("lambda", m)?;
        let discrimination = row[l..l + m].to_vec();
        let difficulty = if self.location_name() == "beta" {
            let b = self.block("beta", m)?;
            row[b..b + m].to_vec()
        } else {
            let g = self.block("gamma", m)?;
            row[g..g + m].iter().zip(&discrimination).map(|(g, l)| -g / l).collect()
        };
        let guessing = if self.kind().has_guessing() {
            let u = self.block("upsilon", m)?;
            Some(row[u..u + m].to_vec())
        } else {
            None
        };
        Ok(ItemParameters {
            discrimination,
            difficulty,
            guessing,
        })
    }

    /// Column-wise posterior means.
    pub fn column_means(&self) -> Vec<f64> {
        let p = self.columns.len();
        let n = self.n_draws();
        let mut out = vec![0.0; p];
        for t in 0..n {
            for (o, v) in out.iter_mut().zip(self.draw(t)) {
                *o += v;
            }
        }
        out.iter_mut().for_each(|o| *o /= n.max(1) as f64);
        out
    }

    pub fn posterior_mean(&self, name: &str) -> Result<f64> {
        Ok(crate::dist::mean(&self.column(name)?))
    }

    /// True when draws, columns and clustering agree exactly (timings are ignored).
    pub fn same_draws(&self, other: &SampleArchive) -> bool {
        self.columns == other.columns
            && self.values.len() == other.values.len()
            && self.values.iter().zip(&other.values).all(|(a, b)| a.to_bits() == b.to_bits())
            && self.clustering == other.clustering
    }

    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

        let path = dir.join(SAMPLES_FILE);
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = csv::Writer::from_writer(BufWriter::new(file));
        w.write_record(&self.columns)?;
        let mut buf = Vec::with_capacity(self.columns.len());
        for t in 0..self.n_draws() {
            buf.clear();
            buf.extend(self.draw(t).iter().map(|v| format!("{v}")));
            w.write_record(&buf)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;

        let path = dir.join(META_FILE);
        let mut f = BufWriter::new(File::create(&path).map_err(|e| Error::io(&path, e))?);
        serde_json::to_writer_pretty(&mut f, &self.meta)?;
        f.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
        f.flush().map_err(|e| Error::io(&path, e))?;

        for stale in [LABELS_FILE, ATOMS_FILE] {
            let p = dir.join(stale);
            if p.exists() {
                fs::remove_file(&p).map_err(|e| Error::io(&p, e))?;
            }
        }
        if let Some(c) = &self.clustering {
            let path = dir.join(LABELS_FILE);
            let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
            let mut w = csv::Writer::from_writer(BufWriter::new(file));
            w.write_record((0..c.n_individuals).map(|j| indexed("z", j)))?;
            for t in 0..c.n_draws() {
                w.write_record(c.labels(t).iter().map(|z| (z + 1).to_string()))?;
            }
            w.flush().map_err(|e| Error::io(&path, e))?;

            let path = dir.join(ATOMS_FILE);
            let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
            let mut w = csv::Writer::from_writer(BufWriter::new(file));
            w.write_record(["draw", "cluster", "count", "mean", "variance"])?;
            for t in 0..c.n_draws() {
                let counts = c.counts(t);
                for (k, a) in c.atoms(t).iter().enumerate() {
                    w.write_record([
                        (t + 1).to_string(),
                        (k + 1).to_string(),
                        counts[k].to_string(),
                        format!("{}", a.mean),
                        format!("{}", a.variance),
                    ])?;
                }
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }

    pub fn read_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let path = dir.join(META_FILE);
        let f = File::open(&path).map_err(|e| Error::io(&path, e))?;
        let meta: ArchiveMeta = serde_json::from_reader(BufReader::new(f))?;

        let path = dir.join(SAMPLES_FILE);
        let f = File::open(&path).map_err(|e| Error::io(&path, e))?;
        let mut r = csv::Reader::from_reader(BufReader::new(f));
        let columns: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let mut archive = SampleArchive::new(meta, columns)?;
        let mut row = Vec::with_capacity(archive.n_columns());
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            row.clear();
            for (col, field) in rec.iter().enumerate() {
                row.push(field.trim().parse::<f64>().map_err(|_| Error::Parse {
                    line: line + 2,
                    column: col + 1,
                    message: format!("`{field}` is not a number"),
                })?);
            }
            archive.push_draw(&row)?;
        }

        let labels_path = dir.join(LABELS_FILE);
        if labels_path.exists() {
            let n = archive.meta.n_individuals;
            let mut labels: Vec<Vec<usize>> = Vec::new();
            let f = File::open(&labels_path).map_err(|e| Error::io(&labels_path, e))?;
            let mut r = csv::Reader::from_reader(BufReader::new(f));
            for (line, rec) in r.records().enumerate() {
                let rec = rec?;
                let mut zs = Vec::with_capacity(n);
                for (col, field) in rec.iter().enumerate() {
                    let z: usize = field.trim().parse().map_err(|_| Error::Parse {
                        line: line + 2,
                        column: col + 1,
                        message: format!("`{field}` is not a cluster label"),
                    })?;
                    if z == 0 {
                        return Err(Error::Parse {
                            line: line + 2,
                            column: col + 1,
                            message: "cluster labels are 1-based".into(),
                        });
                    }
                    zs.push(z - 1);
                }
                labels.push(zs);
            }
            let atoms_path = dir.join(ATOMS_FILE);
            let f = File::open(&atoms_path).map_err(|e| Error::io(&atoms_path, e))?;
            let mut r = csv::Reader::from_reader(BufReader::new(f));
            let mut atoms: Vec<Vec<Atom>> = vec![Vec::new(); labels.len()];
            for (line, rec) in r.records().enumerate() {
                let rec = rec?;
                let parse = |k: usize| -> Result<f64> {
                    rec.get(k).and_then(|s| s.trim().parse().ok()).ok_or_else(|| Error::Parse {
                        line: line + 2,
                        column: k + 1,
                        message: "malformed atom record".into(),
                    })
                };
                let t = parse(0)? as usize;
                let k = parse(1)? as usize;
                if t == 0 || t > atoms.len() || k != atoms[t - 1].len() + 1 {
                    return Err(Error::Parse {
                        line: line + 2,
                        column: 1,
                        message: "atoms must be listed in draw and cluster order".into(),
                    });
                }
                atoms[t - 1].push(Atom::new(parse(3)?, parse(4)?));
            }
            let mut c = Clustering::new(n);
            for (zs, a) in labels.iter().zip(&atoms) {
                c.push(zs, a)?;
            }
            archive.clustering = Some(c);
        }
        Ok(archive)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::strategy::{AbilityModel, Algorithm, ConstraintMode};

    pub(crate) fn meta(n: usize, m: usize) -> ArchiveMeta {
        ArchiveMeta {
            strategy: StrategyConfig::new(
                ModelKind::TwoPL,
                Parameterization::Irt,
                ConstraintMode::Unconstrained,
                Algorithm::MhConjugate,
                AbilityModel::Semiparametric,
            )
            .unwrap(),
            seed: 1,
            iterations: 10,
            burnin: 2,
            thin: 1,
            iterations_completed: 10,
            n_individuals: n,
            n_items: m,
            parameterization: ParameterizationState::Sampled,
            timing: Timing::default(),
            acceptance: BTreeMap::new(),
            priors: Priors::default(),
        }
    }

    #[test]
    fn round_trips_through_disk_exactly() {
        let cols = vec![
            "lambda[1]".to_string(),
            "beta[1]".to_string(),
            "eta[1]".to_string(),
            "eta[2]".to_string(),
        ];
        let mut a = SampleArchive::new(meta(2, 1), cols).unwrap();
        a.push_draw(&[1.0 / 3.0, -2.5e-17, 0.1 + 0.2, 7.0]).unwrap();
        a.push_draw(&[std::f64::consts::PI, 1e300, -0.0, 5e-324]).unwrap();
        let mut c = Clustering::new(2);
        c.push(&[0, 1], &[Atom::new(0.1, 0.2), Atom::new(-1.0 / 7.0, 3.0)]).unwrap();
        c.push(&[0, 0], &[Atom::new(0.5, 1.5)]).unwrap();
        let a = a.with_clustering(c);
        let dir = tempfile::tempdir().unwrap();
        a.write_dir(dir.path()).unwrap();
        let b = SampleArchive::read_dir(dir.path()).unwrap();
        assert!(a.same_draws(&b));
        assert_eq!(a.meta, b.meta);
        assert_eq!(b.clustering().unwrap().counts(0), vec![1, 1]);
        assert_eq!(b.abilities(1).unwrap()[1], 5e-324);
    }

    #[test]
    fn rejects_bad_rows_and_duplicate_columns() {
        assert!(SampleArchive::new(meta(1, 1), vec!["a".into(), "a".into()]).is_err());
        let mut a = SampleArchive::new(meta(1, 1), vec!["a".into()]).unwrap();
        assert!(a.push_draw(&[1.0, 2.0]).is_err());
        let mut c = Clustering::new(2);
        assert!(c.push(&[0, 3], &[Atom::new(0.0, 1.0)]).is_err());
    }
}
