//! Channel specification files: schema, validation, and channel construction.
//!
//! A specification is a JSON document with complex numbers written as
//! `[re, im]` pairs. Three kinds are supported: an explicit Kraus family, an
//! explicit Choi matrix, and a named catalog entry with parameters. An
//! optional `constraint` block carries an observable `H` and a level `h` for
//! the constrained commands.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use qcap_core::capacity::ConstraintSpec;
use qcap_core::channels::{
    bsst_plus, completely_depolarizing, cq_channel, dephasing_computational, depolarizing,
    noiseless, trine_channel, ChoiMatrix, DensityMatrix, KrausChannel,
};
use qcap_core::matops::{Complex64, ComplexMatrix};
use qcap_core::rand_gen::random_cq_structure;

use crate::Failure;

/// One complex matrix as nested rows of `[re, im]` entries.
pub type MatrixData = Vec<Vec<[f64; 2]>>;

pub const SUPPORTED_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpecFile {
    pub version: u32,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim_in: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim_out: Option<usize>,
    /// Kraus kind: each operator is a dim_out × dim_in matrix.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operators: Option<Vec<MatrixData>>,
    /// Choi kind: a (dim_in·dim_out)² matrix.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choi: Option<MatrixData>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub catalog: Option<CatalogSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraint: Option<ConstraintBlock>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogSpec {
    pub name: String,
    #[serde(default)]
    pub params: serde_json::Map<String, Value>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintBlock {
    #[serde(rename = "H")]
    pub observable: MatrixData,
    pub h: f64,
}

/// Read and validate a matrix: rectangular, with the expected shape.
pub fn matrix_from_data(
    data: &MatrixData,
    rows: usize,
    cols: usize,
    what: &str,
) -> Result<ComplexMatrix, Failure> {
    if data.len() != rows {
        return Err(Failure::parse(format!(
            "{what}: expected {rows} rows, found {}",
            data.len()
        )));
    }
    for (i, row) in data.iter().enumerate() {
        if row.len() != cols {
            return Err(Failure::parse(format!(
                "{what}: row {i} has {} entries, expected {cols}",
                row.len()
            )));
        }
    }
    Ok(ComplexMatrix::from_fn(rows, cols, |i, j| {
        Complex64::new(data[i][j][0], data[i][j][1])
    }))
}

/// Serialize a matrix into nested `[re, im]` rows.
pub fn matrix_to_data(m: &ComplexMatrix) -> MatrixData {
    (0..m.rows)
        .map(|i| {
            (0..m.cols)
                .map(|j| {
                    let z = m.get(i, j);
                    [z.re, z.im]
                })
                .collect()
        })
        .collect()
}

pub fn load_spec(path: &std::path::Path) -> Result<ChannelSpecFile, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::parse(format!("cannot read {}: {e}", path.display())))?;
    parse_spec(&text)
}

pub fn parse_spec(text: &str) -> Result<ChannelSpecFile, Failure> {
    let spec: ChannelSpecFile = serde_json::from_str(text)
        .map_err(|e| Failure::parse(format!("specification does not parse: {e}")))?;
    if spec.version != SUPPORTED_VERSION {
        return Err(Failure::parse(format!(
            "unsupported specification version {} (this build reads version {SUPPORTED_VERSION})",
            spec.version
        )));
    }
    Ok(spec)
}

/// Build the channel a specification describes. Schema problems are parse
/// failures (exit 2); a well-formed description of an object that is not a
/// channel is an invariant violation (exit 3).
pub fn build_channel(spec: &ChannelSpecFile) -> Result<KrausChannel, Failure> {
    match spec.kind.as_str() {
        "kraus" => {
            let dim_in = spec
                .dim_in
                .ok_or_else(|| Failure::parse("kraus kind requires dim_in"))?;
            let dim_out = spec
                .dim_out
                .ok_or_else(|| Failure::parse("kraus kind requires dim_out"))?;
            let ops = spec
                .operators
                .as_ref()
                .ok_or_else(|| Failure::parse("kraus kind requires operators"))?;
            if ops.is_empty() {
                return Err(Failure::parse("kraus kind requires at least one operator"));
            }
            let mut kraus = Vec::with_capacity(ops.len());
            for (k, data) in ops.iter().enumerate() {
                kraus.push(matrix_from_data(
                    data,
                    dim_out,
                    dim_in,
                    &format!("operator {k}"),
                )?);
            }
            KrausChannel::new(dim_in, dim_out, kraus).map_err(Failure::invariant)
        }
        "choi" => {
            let dim_in = spec
                .dim_in
                .ok_or_else(|| Failure::parse("choi kind requires dim_in"))?;
            let dim_out = spec
                .dim_out
                .ok_or_else(|| Failure::parse("choi kind requires dim_out"))?;
            let data = spec
                .choi
                .as_ref()
                .ok_or_else(|| Failure::parse("choi kind requires a choi matrix"))?;
            let d = dim_in * dim_out;
            let matrix = matrix_from_data(data, d, d, "choi matrix")?;
            let choi = ChoiMatrix {
                dim_in,
                dim_out,
                matrix,
            };
            choi.to_channel().map_err(Failure::invariant)
        }
        "catalog" => {
            let cat = spec
                .catalog
                .as_ref()
                .ok_or_else(|| Failure::parse("catalog kind requires a catalog block"))?;
            build_catalog(cat)
        }
        other => Err(Failure::parse(format!(
            "unknown channel kind {other:?} (expected kraus, choi, or catalog)"
        ))),
    }
}

struct Params<'a> {
    name: &'a str,
    map: &'a serde_json::Map<String, Value>,
    used: Vec<String>,
}

impl<'a> Params<'a> {
    fn new(name: &'a str, map: &'a serde_json::Map<String, Value>) -> Self {
        Params {
            name,
            map,
            used: Vec::new(),
        }
    }

    fn dim(&mut self, key: &str) -> Result<usize, Failure> {
        self.used.push(key.to_string());
        let v = self.map.get(key).ok_or_else(|| {
            Failure::parse(format!("catalog {} requires parameter {key}", self.name))
        })?;
        let n = v.as_u64().ok_or_else(|| {
            Failure::parse(format!(
                "catalog {}: parameter {key} must be a nonnegative integer",
                self.name
            ))
        })?;
        if n == 0 || n > 64 {
            return Err(Failure::invariant_msg(format!(
                "catalog {}: dimension {key}={n} outside the supported range 1..=64",
                self.name
            )));
        }
        Ok(n as usize)
    }

    fn real(&mut self, key: &str) -> Result<f64, Failure> {
        self.used.push(key.to_string());
        let v = self.map.get(key).ok_or_else(|| {
            Failure::parse(format!("catalog {} requires parameter {key}", self.name))
        })?;
        v.as_f64().ok_or_else(|| {
            Failure::parse(format!(
                "catalog {}: parameter {key} must be a number",
                self.name
            ))
        })
    }

    fn integer(&mut self, key: &str) -> Result<u64, Failure> {
        self.used.push(key.to_string());
        let v = self.map.get(key).ok_or_else(|| {
            Failure::parse(format!("catalog {} requires parameter {key}", self.name))
        })?;
        v.as_u64().ok_or_else(|| {
            Failure::parse(format!(
                "catalog {}: parameter {key} must be a nonnegative integer",
                self.name
            ))
        })
    }

    fn reject_unknown(self) -> Result<(), Failure> {
        for key in self.map.keys() {
            if !self.used.iter().any(|u| u == key) {
                return Err(Failure::parse(format!(
                    "catalog {}: unknown parameter {key}",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

fn build_catalog(cat: &CatalogSpec) -> Result<KrausChannel, Failure> {
    let mut p = Params::new(&cat.name, &cat.params);
    let ch = match cat.name.as_str() {
        "noiseless" => noiseless(p.dim("dim")?),
        "dephasing" => dephasing_computational(p.dim("dim")?),
        "trine" => trine_channel(),
        "bsst_plus" => bsst_plus(),
        "depolarizing" => {
            let dim = p.dim("dim")?;
            let prob = p.real("p")?;
            if !(0.0..=1.0).contains(&prob) {
                return Err(Failure::invariant_msg(format!(
                    "depolarizing weight p={prob} outside [0, 1]"
                )));
            }
            depolarizing(dim, prob)
        }
        "completely_depolarizing" => {
            let dim = p.dim("dim")?;
            completely_depolarizing(dim, &DensityMatrix::maximally_mixed(dim))
        }
        "cq" => {
            let dim_in = p.dim("dim_in")?;
            let dim_out = p.dim("dim_out")?;
            let seed = p.integer("seed")?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_cq_structure(dim_in, dim_out, &mut rng);
            cq_channel(&s).map_err(Failure::invariant)?
        }
        other => {
            return Err(Failure::parse(format!(
                "unknown catalog channel {other:?} (expected noiseless, dephasing, trine, \
                 bsst_plus, depolarizing, completely_depolarizing, or cq)"
            )))
        }
    };
    p.reject_unknown()?;
    Ok(ch)
}

/// Build the constraint a specification carries, validated against the
/// channel's input dimension. `Err` distinguishes infeasible levels (exit 5)
/// from malformed observables (exit 3).
pub fn build_constraint(
    block: &ConstraintBlock,
    dim_in: usize,
) -> Result<ConstraintSpec, Failure> {
    let h = matrix_from_data(&block.observable, dim_in, dim_in, "constraint observable")?;
    ConstraintSpec::new(h, block.h).map_err(|e| match e {
        qcap_core::Error::Infeasible(_) => Failure::infeasible(e),
        other => Failure::invariant(other),
    })
}
