//! Bosonic codes read out through a photon-number flip set.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LogicalOutcome {
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "1")]
    One,
}

impl LogicalOutcome {
    pub fn label(self) -> &'static str {
        match self {
            LogicalOutcome::Zero => "0",
            LogicalOutcome::One => "1",
        }
    }
}

/// A code whose zero codeword lies inside the flip set and whose one
/// codeword lies outside it, so a flip votes for `Zero`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeSpec {
    pub name: String,
    pub zero_codeword: Vec<(usize, f64)>,
    pub one_codeword: Vec<(usize, f64)>,
    pub flip_set: Vec<usize>,
    pub distance: usize,
    /// Sparse prior over photon numbers.
    pub prior: Vec<(usize, f64)>,
}

impl CodeSpec {
    /// Builds a code, deriving the distance and the 0.5/0.5 prior.
    pub fn new(
        name: &str,
        zero_codeword: Vec<(usize, f64)>,
        one_codeword: Vec<(usize, f64)>,
        mut flip_set: Vec<usize>,
    ) -> Result<Self> {
        flip_set.sort_unstable();
        flip_set.dedup();
        let mut prior = Vec::new();
        for word in [&zero_codeword, &one_codeword] {
            let w = 0.5 / word.len().max(1) as f64;
            prior.extend(word.iter().map(|&(n, _)| (n, w)));
        }
        prior.sort_by_key(|&(n, _)| n);
        let distance = min_gap(&zero_codeword, &one_codeword);
        let code = Self {
            name: name.to_string(),
            zero_codeword,
            one_codeword,
            flip_set,
            distance,
            prior,
        };
        code.validate()?;
        Ok(code)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |why: String| Err(Error::invalid(format!("code {}", self.name), why));
        for (label, word) in [("zero", &self.zero_codeword), ("one", &self.one_codeword)] {
            if word.is_empty() {
                return bad(format!("{label} codeword is empty"));
            }
            let norm: f64 = word.iter().map(|&(_, a)| a * a).sum();
            if (norm - 1.0).abs() > 1e-12 {
                return bad(format!("{label} codeword norm {norm}"));
            }
        }
        if self
            .zero_codeword
            .iter()
            .any(|&(n, _)| self.one_codeword.iter().any(|&(m, _)| m == n))
        {
            return bad("a photon number appears in both codewords".into());
        }
        if !self.zero_codeword.iter().all(|&(n, _)| self.in_s(n)) {
            return bad("zero codeword must lie inside the flip set".into());
        }
        if self.one_codeword.iter().any(|&(n, _)| self.in_s(n)) {
            return bad("one codeword must lie outside the flip set".into());
        }
        let total: f64 = self.prior.iter().map(|&(_, p)| p).sum();
        if (total - 1.0).abs() > 1e-12 {
            return bad(format!("prior sums to {total}"));
        }
        for word in [&self.zero_codeword, &self.one_codeword] {
            let w = 0.5 / word.len() as f64;
            for &(n, _) in word.iter() {
                let p = self.prior.iter().find(|&&(m, _)| m == n).map(|&(_, p)| p);
                if p.is_none_or(|p| (p - w).abs() > 1e-12) {
                    return bad("prior must put 0.5 on each codeword, uniformly".into());
                }
            }
        }
        if self.prior.iter().any(|&(n, _)| self.codeword_of(n).is_none()) {
            return bad("prior has mass outside the codewords".into());
        }
        if self.distance != min_gap(&self.zero_codeword, &self.one_codeword) {
            return bad("distance does not match codeword supports".into());
        }
        Ok(())
    }

    pub fn in_s(&self, n: usize) -> bool {
        self.flip_set.binary_search(&n).is_ok()
    }

    pub fn codeword_of(&self, n: usize) -> Option<LogicalOutcome> {
        if self.zero_codeword.iter().any(|&(m, _)| m == n) {
            Some(LogicalOutcome::Zero)
        } else if self.one_codeword.iter().any(|&(m, _)| m == n) {
            Some(LogicalOutcome::One)
        } else {
            None
        }
    }

    pub fn codeword(&self, label: LogicalOutcome) -> &[(usize, f64)] {
        match label {
            LogicalOutcome::Zero => &self.zero_codeword,
            LogicalOutcome::One => &self.one_codeword,
        }
    }

    pub fn max_photon(&self) -> usize {
        self.zero_codeword
            .iter()
            .chain(&self.one_codeword)
            .map(|&(n, _)| n)
            .max()
            .unwrap_or(0)
    }

    /// Dense prior over 0..=n_max.
    pub fn prior_vec(&self, n_max: usize) -> Result<Vec<f64>> {
        if self.max_photon() > n_max {
            return Err(Error::invalid(
                "n_max",
                format!("code {} needs n_max >= {}", self.name, self.max_photon()),
            ));
        }
        let mut p = vec![0.0; n_max + 1];
        for &(n, w) in &self.prior {
            p[n] = w;
        }
        Ok(p)
    }
}

fn min_gap(a: &[(usize, f64)], b: &[(usize, f64)]) -> usize {
    a.iter()
        .flat_map(|&(n, _)| b.iter().map(move |&(m, _)| n.abs_diff(m)))
        .min()
        .unwrap_or(0)
}

/// The four Fock codes and two binomial codes of the experiment.
pub fn builtin_codes() -> Vec<CodeSpec> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut codes: Vec<CodeSpec> = (2..=5)
        .map(|l| {
            CodeSpec::new(&format!("fock-0-{l}"), vec![(0, 1.0)], vec![(l, 1.0)], vec![0, 1])
                .expect("builtin code is valid")
        })
        .collect();
    codes.push(
        CodeSpec::new("binomial-1", vec![(2, 1.0)], vec![(0, h), (4, h)], vec![1, 2])
            .expect("builtin code is valid"),
    );
    codes.push(
        CodeSpec::new("binomial-2", vec![(3, 1.0)], vec![(0, h), (6, h)], vec![1, 2, 3])
            .expect("builtin code is valid"),
    );
    codes
}

pub fn builtin_code(name: &str) -> Result<CodeSpec> {
    builtin_codes()
        .into_iter()
        .find(|c| c.name == name)
        .ok_or_else(|| Error::invalid("code", format!("unknown code `{name}`")))
}
