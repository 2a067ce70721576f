//! The JSON document format for interaction specs.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use qmarkov::linalg::{self, CMat, C64};
use qmarkov::markov::{BondData, Chain, InteractionSpec, LabelBlock, LogBase, SiteBlocks, SiteData};
use qmarkov::Tolerances;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecDocument {
    pub schema_version: u32,
    pub mode: Mode,
    pub chain: ChainDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub sites: Vec<SiteDoc>,
    pub bonds: Vec<BondDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<Tolerances>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Mode {
    Float,
    /// Exact eigenvalues `r` stand for `r ln(base)`; `base` is a rational
    /// `"p/q" > 1` or `"e"`.
    RationalLog { base: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChainDoc {
    Periodic { period: usize },
    Finite { first_site: i64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SiteDoc {
    pub blocks: Vec<BlockDoc>,
    /// Unitary placing the blocks into the site space, rows of `[re, im]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Vec<Vec<[f64; 2]>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockDoc {
    pub label: String,
    pub n: usize,
    pub nbar: usize,
    pub h: Payload,
    pub h_hat: Payload,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BondDoc {
    /// `blocks[ω][ω']` for the labels of this site and the next.
    pub blocks: Vec<Vec<Payload>>,
    /// Exact eigenvalues `"p/q"` of every block, for blocks given in full.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact_eigenvalues: Option<Vec<Vec<Vec<String>>>>,
}

/// A hermitian block given by its diagonal, its exact diagonal, or in full.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Payload {
    Diag(Vec<f64>),
    /// Rationals `"p/q"` in units of the log base.
    ExactDiag(Vec<String>),
    Matrix(Vec<Vec<[f64; 2]>>),
}

/// A problem in a document, located by a field path.
#[derive(Debug, Clone, PartialEq)]
pub struct DocumentError {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for DocumentError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

fn err(path: impl Into<String>, message: impl Into<String>) -> DocumentError {
    DocumentError {
        path: path.into(),
        message: message.into(),
    }
}

pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let d: BigInt = d.trim().parse().ok()?;
            let n: BigInt = n.trim().parse().ok()?;
            (!d.is_zero()).then(|| BigRational::new(n, d))
        }
        None => Some(BigRational::from_integer(s.parse().ok()?)),
    }
}

pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn complex_matrix(rows: &[Vec<[f64; 2]>], path: &str) -> Result<CMat, DocumentError> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(err(path, "matrix must be square"));
    }
    Ok(CMat::from_fn(n, n, |r, c| C64::new(rows[r][c][0], rows[r][c][1])))
}

fn complex_rows(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    m.row_iter().map(|r| r.iter().map(|z| [z.re, z.im]).collect()).collect()
}

struct Decoded {
    matrix: CMat,
    exact: Option<Vec<BigRational>>,
}

fn decode(p: &Payload, base: Option<&LogBase>, path: &str) -> Result<Decoded, DocumentError> {
    match p {
        Payload::Diag(v) => Ok(Decoded {
            matrix: linalg::diag(v),
            exact: None,
        }),
        Payload::ExactDiag(v) => {
            let base = base.ok_or_else(|| err(path, "exact_diag requires mode rational_log"))?;
            let exact: Vec<BigRational> = v
                .iter()
                .enumerate()
                .map(|(i, s)| parse_rational(s).ok_or_else(|| err(format!("{path}[{i}]"), format!("not a rational: {s:?}"))))
                .collect::<Result<_, _>>()?;
            let values: Vec<f64> = exact.iter().map(|r| base.value(r)).collect();
            Ok(Decoded {
                matrix: linalg::diag(&values),
                exact: Some(exact),
            })
        }
        Payload::Matrix(rows) => Ok(Decoded {
            matrix: complex_matrix(rows, path)?,
            exact: None,
        }),
    }
}

fn encode(m: &CMat) -> Payload {
    let diagonal = m.nrows() == m.ncols()
        && (0..m.nrows()).all(|r| {
            (0..m.ncols()).all(|c| if r == c { m[(r, c)].im == 0.0 } else { m[(r, c)] == C64::new(0.0, 0.0) })
        });
    if diagonal {
        Payload::Diag(m.diagonal().iter().map(|z| z.re).collect())
    } else {
        Payload::Matrix(complex_rows(m))
    }
}

impl SpecDocument {
    pub fn log_base(&self) -> Result<Option<LogBase>, DocumentError> {
        match &self.mode {
            Mode::Float => Ok(None),
            Mode::RationalLog { base } if base.trim() == "e" => Ok(Some(LogBase::Natural)),
            Mode::RationalLog { base } => {
                let b = parse_rational(base).ok_or_else(|| err("mode.base", format!("not a rational: {base:?}")))?;
                if b <= BigRational::one() {
                    return Err(err("mode.base", "base must exceed 1"));
                }
                Ok(Some(LogBase::Rational(b)))
            }
        }
    }

    /// Builds the library spec. Structural consistency is left to
    /// `validate_spec`; this only rejects what cannot be represented.
    pub fn to_spec(&self) -> Result<InteractionSpec, DocumentError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(err(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        let base = self.log_base()?;
        let chain = match self.chain {
            ChainDoc::Periodic { period } => Chain::Periodic { period },
            ChainDoc::Finite { first_site } => Chain::Finite { first_site },
        };
        let first = match chain {
            Chain::Finite { first_site } => first_site,
            Chain::Periodic { .. } => 0,
        };
        let mut sites = Vec::with_capacity(self.sites.len());
        for (i, s) in self.sites.iter().enumerate() {
            let mut h = Vec::new();
            let mut h_hat = Vec::new();
            for (w, b) in s.blocks.iter().enumerate() {
                h.push(decode(&b.h, base.as_ref(), &format!("sites[{i}].blocks[{w}].h"))?.matrix);
                h_hat.push(decode(&b.h_hat, base.as_ref(), &format!("sites[{i}].blocks[{w}].h_hat"))?.matrix);
            }
            let labels: Vec<LabelBlock> = s
                .blocks
                .iter()
                .map(|b| LabelBlock {
                    label: b.label.clone(),
                    n: b.n,
                    nbar: b.nbar,
                })
                .collect();
            let embedding = s
                .embedding
                .as_ref()
                .map(|rows| complex_matrix(rows, &format!("sites[{i}].embedding")))
                .transpose()?;
            sites.push(SiteData {
                blocks: SiteBlocks {
                    site: first + i as i64,
                    dim: labels.iter().map(LabelBlock::dim).sum(),
                    labels,
                },
                h,
                h_hat,
                embedding,
            });
        }
        let mut bonds = Vec::with_capacity(self.bonds.len());
        for (i, b) in self.bonds.iter().enumerate() {
            let mut blocks = Vec::new();
            let mut exact = Vec::new();
            for (w, row) in b.blocks.iter().enumerate() {
                let mut mats = Vec::new();
                let mut ex = Vec::new();
                for (wp, p) in row.iter().enumerate() {
                    let d = decode(p, base.as_ref(), &format!("bonds[{i}].blocks[{w}][{wp}]"))?;
                    mats.push(d.matrix);
                    ex.push(d.exact);
                }
                blocks.push(mats);
                exact.push(ex);
            }
            let all_exact = exact.iter().flatten().all(Option::is_some);
            let any_exact = exact.iter().flatten().any(Option::is_some);
            let exact = match &b.exact_eigenvalues {
                Some(_) if any_exact => {
                    return Err(err(format!("bonds[{i}]"), "use either exact_diag blocks or exact_eigenvalues"));
                }
                Some(lists) => {
                    let path = format!("bonds[{i}].exact_eigenvalues");
                    if base.is_none() {
                        return Err(err(path, "exact eigenvalues require mode rational_log"));
                    }
                    Some(
                        lists
                            .iter()
                            .map(|row| {
                                row.iter()
                                    .map(|list| {
                                        list.iter()
                                            .map(|s| parse_rational(s).ok_or_else(|| err(&path, format!("not a rational: {s:?}"))))
                                            .collect::<Result<Vec<_>, _>>()
                                    })
                                    .collect::<Result<Vec<_>, _>>()
                            })
                            .collect::<Result<Vec<_>, _>>()?,
                    )
                }
                None if any_exact && !all_exact => {
                    return Err(err(format!("bonds[{i}]"), "exact_diag must be used for every block of a bond or none"));
                }
                None => all_exact.then(|| {
                    exact
                        .into_iter()
                        .map(|row| row.into_iter().map(Option::unwrap_or_default).collect())
                        .collect()
                }),
            };
            bonds.push(BondData { blocks, exact });
        }
        Ok(InteractionSpec {
            chain,
            sites,
            bonds,
            log_base: base,
            seed: self.seed,
        })
    }

    pub fn from_spec(spec: &InteractionSpec) -> Self {
        let mode = match &spec.log_base {
            None => Mode::Float,
            Some(LogBase::Natural) => Mode::RationalLog { base: "e".into() },
            Some(LogBase::Rational(b)) => Mode::RationalLog {
                base: format_rational(b),
            },
        };
        let chain = match spec.chain {
            Chain::Periodic { period } => ChainDoc::Periodic { period },
            Chain::Finite { first_site } => ChainDoc::Finite { first_site },
        };
        let sites = spec
            .sites
            .iter()
            .map(|s| SiteDoc {
                blocks: s
                    .blocks
                    .labels
                    .iter()
                    .enumerate()
                    .map(|(w, b)| BlockDoc {
                        label: b.label.clone(),
                        n: b.n,
                        nbar: b.nbar,
                        h: encode(&s.h[w]),
                        h_hat: encode(&s.h_hat[w]),
                    })
                    .collect(),
                embedding: s.embedding.as_ref().map(complex_rows),
            })
            .collect();
        let bonds = spec
            .bonds
            .iter()
            .map(|b| {
                let diagonal = b.blocks.iter().flatten().all(is_diagonal);
                match &b.exact {
                    Some(e) if diagonal => BondDoc {
                        blocks: e
                            .iter()
                            .map(|row| row.iter().map(|l| Payload::ExactDiag(l.iter().map(format_rational).collect())).collect())
                            .collect(),
                        exact_eigenvalues: None,
                    },
                    exact => BondDoc {
                        blocks: b.blocks.iter().map(|row| row.iter().map(encode).collect()).collect(),
                        exact_eigenvalues: exact.as_ref().map(|e| {
                            e.iter()
                                .map(|row| row.iter().map(|l| l.iter().map(format_rational).collect()).collect())
                                .collect()
                        }),
                    },
                }
            })
            .collect();
        SpecDocument {
            schema_version: SCHEMA_VERSION,
            mode,
            chain,
            seed: spec.seed,
            sites,
            bonds,
            tolerances: None,
        }
    }
}

fn is_diagonal(m: &CMat) -> bool {
    matches!(encode(m), Payload::Diag(_))
}

#[cfg(test)]
mod tests {
    use super::*;
    use qmarkov::models::{gen_ising_exact, gen_random, RandomParams};

    fn round_trip(spec: &InteractionSpec) -> InteractionSpec {
        let text = serde_json::to_string(&SpecDocument::from_spec(spec)).unwrap();
        serde_json::from_str::<SpecDocument>(&text).unwrap().to_spec().unwrap()
    }

    #[test]
    fn rationals_parse_and_print() {
        let r = parse_rational(" -6/4 ").unwrap();
        assert_eq!(format_rational(&r), "-3/2");
        assert_eq!(format_rational(&parse_rational("7").unwrap()), "7");
        assert!(parse_rational("1/0").is_none());
        assert!(parse_rational("x").is_none());
    }

    #[test]
    fn specs_survive_serialization() {
        let two = BigRational::from_integer(2.into());
        let exact = gen_ising_exact(&BigRational::new(1.into(), 3.into()), &two);
        assert_eq!(round_trip(&exact), exact);
        let mut params = RandomParams::new(11, vec![3, 2]);
        params.lifting = false;
        let spec = gen_random(&params).unwrap();
        assert_eq!(round_trip(&spec), spec);
    }

    #[test]
    fn exact_mode_requires_a_base() {
        let mut doc = SpecDocument::from_spec(&gen_ising_exact(&BigRational::one(), &BigRational::one()));
        doc.mode = Mode::Float;
        let e = doc.to_spec().unwrap_err();
        assert!(e.path.starts_with("bonds"), "{e}");
        doc.mode = Mode::RationalLog { base: "1".into() };
        assert_eq!(doc.to_spec().unwrap_err().path, "mode.base");
    }
}

#[cfg(test)]
mod guide_example {
    use super::SpecDocument;

    #[test]
    fn guide_document_parses_and_validates() {
        let guide = include_str!("../../../book/src/cli.md");
        let start = guide.find("```json\n").unwrap() + 8;
        let end = start + guide[start..].find("```").unwrap();
        let doc: SpecDocument = serde_json::from_str(&guide[start..end]).unwrap();
        let spec = doc.to_spec().unwrap();
        assert!(qmarkov::markov::validate_spec(&spec, &qmarkov::Tolerances::default()).is_empty());
        assert!(spec.log_base.is_some());
    }
}
