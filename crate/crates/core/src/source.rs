//! Database source model: attribute roles, utility and privacy requirements,
//! model-file loading, CSV ingestion and empirical pmf estimation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{flatten, product_size, unflatten, Alphabet, JointPmf};
use crate::rd::DistortionMatrix;

/// Axis name used for side information when the model declares none.
pub const NO_SIDE_INFO: &str = "_z";

/// Suffix appended to a public attribute's name to name its reconstruction axis.
pub const HAT: &str = "_hat";

pub(crate) fn hat(name: &str) -> String {
    format!("{name}{HAT}")
}

/// Which attributes are public, private and visible to the encoder.
///
/// Every attribute is public, private, or both; the encoder sees at least the
/// public ones. Lists are kept in the model's attribute order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeRoles {
    all: Vec<String>,
    public: Vec<String>,
    private: Vec<String>,
    encoded: Vec<String>,
}

impl AttributeRoles {
    pub fn new(all: Vec<String>, public: &[String], private: &[String], encoded: Option<&[String]>) -> Result<Self> {
        for group in [public, private].into_iter().chain(encoded) {
            for n in group {
                if !all.contains(n) {
                    return Err(Error::Validation(format!("role refers to unknown attribute `{n}`")));
                }
            }
        }
        let in_order = |set: &[String]| -> Vec<String> { all.iter().filter(|a| set.contains(a)).cloned().collect() };
        let public = in_order(public);
        let private = in_order(private);
        if public.is_empty() || private.is_empty() {
            return Err(Error::Validation("public and private sets must be nonempty".into()));
        }
        if let Some(a) = all.iter().find(|a| !public.contains(a) && !private.contains(a)) {
            return Err(Error::Validation(format!(
                "attribute `{a}` is neither public nor private"
            )));
        }
        let encoded = match encoded {
            Some(e) => in_order(e),
            None => all.clone(),
        };
        if let Some(a) = public.iter().find(|a| !encoded.contains(a)) {
            return Err(Error::Validation(format!(
                "public attribute `{a}` is missing from the encoded set"
            )));
        }
        Ok(AttributeRoles {
            all,
            public,
            private,
            encoded,
        })
    }

    pub fn all(&self) -> &[String] {
        &self.all
    }
    pub fn public(&self) -> &[String] {
        &self.public
    }
    pub fn private(&self) -> &[String] {
        &self.private
    }
    pub fn encoded(&self) -> &[String] {
        &self.encoded
    }

    pub fn overlapping(&self) -> bool {
        self.public.iter().any(|a| self.private.contains(a))
    }
}

/// Per-symbol distortion between a value and its reconstruction.
#[derive(Debug, Clone, PartialEq)]
pub enum DistortionMeasure {
    /// Number of differing components.
    Hamming,
    /// Sum of squared differences of numeric labels.
    SquaredDifference,
    /// Explicit matrix indexed by (value image, reconstruction image).
    Table(Vec<Vec<f64>>),
}

/// The function whose distortion a utility constraint bounds.
#[derive(Debug, Clone, PartialEq)]
pub enum UtilityFunction {
    /// Tuple of the named public attributes (identity when all are named).
    Projection { attributes: Vec<String> },
    /// Lookup table from tuples of the named attributes to `outputs`; the
    /// table is indexed row-major over the attributes' source alphabets.
    Table {
        attributes: Vec<String>,
        outputs: Vec<String>,
        table: Vec<String>,
    },
}

impl UtilityFunction {
    pub fn attributes(&self) -> &[String] {
        match self {
            UtilityFunction::Projection { attributes } | UtilityFunction::Table { attributes, .. } => attributes,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UtilityConstraint {
    pub function: UtilityFunction,
    pub measure: DistortionMeasure,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UtilitySpec {
    pub constraints: Vec<UtilityConstraint>,
}

impl UtilitySpec {
    pub fn bounds(&self) -> Vec<f64> {
        self.constraints.iter().map(|c| c.bound).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacySpec {
    /// Required equivocation in bits.
    pub bound: f64,
}

/// A validated source model.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSpec {
    roles: AttributeRoles,
    attributes: Vec<Alphabet>,
    side_info: Option<Alphabet>,
    joint: JointPmf,
    reconstruction: Vec<Alphabet>,
    utility: UtilitySpec,
    privacy: PrivacySpec,
    distortions: Vec<DistortionMatrix>,
}

// ---------------------------------------------------------------------------
// Model document
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphabetDoc {
    pub name: String,
    pub symbols: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolesDoc {
    pub public: Vec<String>,
    pub private: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub encoded: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmfDoc {
    pub axes: Vec<String>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionDoc {
    pub attributes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeasureDoc {
    Named(String),
    Table { table: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<FunctionDoc>,
    pub g: MeasureDoc,
    #[serde(rename = "D")]
    pub d: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacyDoc {
    #[serde(rename = "E")]
    pub e: f64,
}

/// On-disk model file (JSON).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub alphabets: Vec<AlphabetDoc>,
    pub roles: RolesDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side_info: Option<String>,
    /// Reconstruction alphabets keyed by public attribute name; public
    /// attributes not listed reuse their source alphabet.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reconstruction: Vec<AlphabetDoc>,
    pub pmf: PmfDoc,
    pub utility: Vec<UtilityDoc>,
    pub privacy: PrivacyDoc,
}

/// Parses and validates a model file.
pub fn load_spec(document: &str) -> Result<SourceSpec> {
    let doc: ModelDocument = serde_json::from_str(document).map_err(|e| Error::Parse(e.to_string()))?;
    SourceSpec::from_document(&doc)
}

fn parse_number(label: &str) -> Result<f64> {
    label
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::Validation(format!("squared distortion needs numeric labels, got `{label}`")))
}

impl SourceSpec {
    pub fn from_document(doc: &ModelDocument) -> Result<Self> {
        let mut alphabets = Vec::with_capacity(doc.alphabets.len());
        for a in &doc.alphabets {
            alphabets.push(Alphabet::new(a.name.clone(), a.symbols.clone())?);
        }
        let side_info = match &doc.side_info {
            Some(name) => Some(
                alphabets
                    .iter()
                    .find(|a| a.name() == name)
                    .cloned()
                    .ok_or_else(|| Error::Validation(format!("side information `{name}` has no alphabet")))?,
            ),
            None => None,
        };
        let attributes: Vec<Alphabet> = alphabets
            .iter()
            .filter(|a| Some(a.name()) != doc.side_info.as_deref())
            .cloned()
            .collect();
        if attributes.is_empty() {
            return Err(Error::Validation("model declares no attributes".into()));
        }
        let names: Vec<String> = attributes.iter().map(|a| a.name().to_string()).collect();
        for n in &names {
            if n == NO_SIDE_INFO || n.ends_with(HAT) {
                return Err(Error::Validation(format!("attribute name `{n}` is reserved")));
            }
        }
        let roles = AttributeRoles::new(
            names.clone(),
            &doc.roles.public,
            &doc.roles.private,
            doc.roles.encoded.as_deref(),
        )?;

        // pmf, permuted into canonical order: attributes then side information
        let mut pmf_axes = Vec::with_capacity(doc.pmf.axes.len());
        for n in &doc.pmf.axes {
            let a = alphabets
                .iter()
                .find(|a| a.name() == n)
                .ok_or_else(|| Error::Validation(format!("pmf axis `{n}` has no alphabet")))?;
            pmf_axes.push(a.clone());
        }
        let side = side_info.clone().unwrap_or_else(|| Alphabet::constant(NO_SIDE_INFO));
        let expected = attributes.len() + usize::from(side_info.is_some());
        if pmf_axes.len() != expected {
            return Err(Error::Validation(
                "pmf axes must list every attribute and the side information exactly once".into(),
            ));
        }
        let pmf = JointPmf::new(pmf_axes, doc.pmf.values.clone())?;
        let pmf = if side_info.is_none() {
            let mass = pmf.mass().to_vec();
            let axes = pmf.axes().iter().cloned().chain([side.clone()]).collect();
            JointPmf::new(axes, mass)?
        } else {
            pmf
        };
        let order: Vec<&str> = attributes.iter().map(Alphabet::name).chain([side.name()]).collect();
        let joint = pmf.permuted(&order)?;

        let mut reconstruction = Vec::with_capacity(roles.public.len());
        for p in &roles.public {
            let src = attributes.iter().find(|a| a.name() == p).unwrap();
            let rec = match doc.reconstruction.iter().find(|r| &r.name == p) {
                Some(r) => Alphabet::new(hat(p), r.symbols.clone())?,
                None => src.renamed(hat(p)),
            };
            reconstruction.push(rec);
        }
        for r in &doc.reconstruction {
            if !roles.public.contains(&r.name) {
                return Err(Error::Validation(format!(
                    "reconstruction alphabet `{}` is not a public attribute",
                    r.name
                )));
            }
        }

        if doc.utility.is_empty() {
            return Err(Error::Validation("at least one utility constraint is required".into()));
        }
        let mut constraints = Vec::with_capacity(doc.utility.len());
        for u in &doc.utility {
            let function = match &u.f {
                None => UtilityFunction::Projection {
                    attributes: roles.public.clone(),
                },
                Some(f) => match (&f.outputs, &f.table) {
                    (None, None) => UtilityFunction::Projection {
                        attributes: f.attributes.clone(),
                    },
                    (Some(outputs), Some(table)) => UtilityFunction::Table {
                        attributes: f.attributes.clone(),
                        outputs: outputs.clone(),
                        table: table.clone(),
                    },
                    _ => {
                        return Err(Error::Validation(
                            "a utility function table needs both `outputs` and `table`".into(),
                        ))
                    }
                },
            };
            let measure = match &u.g {
                MeasureDoc::Named(n) if n == "hamming" => DistortionMeasure::Hamming,
                MeasureDoc::Named(n) if n == "squared" || n == "squared-difference" => {
                    DistortionMeasure::SquaredDifference
                }
                MeasureDoc::Named(n) => {
                    return Err(Error::Validation(format!("unknown distortion measure `{n}`")))
                }
                MeasureDoc::Table { table } => DistortionMeasure::Table(table.clone()),
            };
            if !(u.d.is_finite() && u.d >= 0.0) {
                return Err(Error::Validation(format!("distortion bound {} must be finite and nonnegative", u.d)));
            }
            constraints.push(UtilityConstraint {
                function,
                measure,
                bound: u.d,
            });
        }
        if !(doc.privacy.e.is_finite() && doc.privacy.e >= 0.0) {
            return Err(Error::Validation(format!("equivocation bound {} must be nonnegative", doc.privacy.e)));
        }

        let mut spec = SourceSpec {
            roles,
            attributes,
            side_info,
            joint,
            reconstruction,
            utility: UtilitySpec { constraints },
            privacy: PrivacySpec { bound: doc.privacy.e },
            distortions: Vec::new(),
        };
        spec.distortions = (0..spec.utility.constraints.len())
            .map(|l| spec.build_distortion(l))
            .collect::<Result<_>>()?;
        Ok(spec)
    }

    /// Serializes back to a model document.
    pub fn to_document(&self) -> ModelDocument {
        let doc_alpha = |a: &Alphabet| AlphabetDoc {
            name: a.name().to_string(),
            symbols: a.symbols().to_vec(),
        };
        let mut alphabets: Vec<AlphabetDoc> = self.attributes.iter().map(doc_alpha).collect();
        let mut axes: Vec<String> = self.roles.all.clone();
        if let Some(z) = &self.side_info {
            alphabets.push(doc_alpha(z));
            axes.push(z.name().to_string());
        }
        let reconstruction = self
            .roles
            .public
            .iter()
            .zip(&self.reconstruction)
            .filter(|(p, r)| self.attribute(p).map(|a| a.symbols() != r.symbols()).unwrap_or(true))
            .map(|(p, r)| AlphabetDoc {
                name: p.clone(),
                symbols: r.symbols().to_vec(),
            })
            .collect();
        let utility = self
            .utility
            .constraints
            .iter()
            .map(|c| UtilityDoc {
                f: match &c.function {
                    UtilityFunction::Projection { attributes } if attributes == &self.roles.public => None,
                    UtilityFunction::Projection { attributes } => Some(FunctionDoc {
                        attributes: attributes.clone(),
                        outputs: None,
                        table: None,
                    }),
                    UtilityFunction::Table {
                        attributes,
                        outputs,
                        table,
                    } => Some(FunctionDoc {
                        attributes: attributes.clone(),
                        outputs: Some(outputs.clone()),
                        table: Some(table.clone()),
                    }),
                },
                g: match &c.measure {
                    DistortionMeasure::Hamming => MeasureDoc::Named("hamming".into()),
                    DistortionMeasure::SquaredDifference => MeasureDoc::Named("squared".into()),
                    DistortionMeasure::Table(t) => MeasureDoc::Table { table: t.clone() },
                },
                d: c.bound,
            })
            .collect();
        ModelDocument {
            alphabets,
            roles: RolesDoc {
                public: self.roles.public.clone(),
                private: self.roles.private.clone(),
                encoded: (self.roles.encoded != self.roles.all).then(|| self.roles.encoded.clone()),
            },
            side_info: self.side_info.as_ref().map(|z| z.name().to_string()),
            reconstruction,
            pmf: PmfDoc {
                axes,
                values: self.joint.mass().to_vec(),
            },
            utility,
            privacy: PrivacyDoc { e: self.privacy.bound },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("model documents always serialize")
    }

    /// Copy with the requirement bounds replaced.
    pub fn with_requirements(&self, distortion: &[f64], equivocation: f64) -> Result<SourceSpec> {
        if distortion.len() != self.utility.constraints.len() {
            return Err(Error::Validation(format!(
                "expected {} distortion bounds, got {}",
                self.utility.constraints.len(),
                distortion.len()
            )));
        }
        let mut doc = self.to_document();
        for (u, &d) in doc.utility.iter_mut().zip(distortion) {
            u.d = d;
        }
        doc.privacy.e = equivocation;
        SourceSpec::from_document(&doc)
    }

    /// Copy with the side information replaced by a constant.
    pub fn without_side_info(&self) -> SourceSpec {
        let mut doc = self.to_document();
        if let Some(z) = doc.side_info.take() {
            let keep: Vec<&str> = self.roles.all.iter().map(String::as_str).collect();
            let marg = crate::prob::marginalize(&self.joint, &keep).expect("attribute axes exist");
            doc.alphabets.retain(|a| a.name != z);
            doc.pmf = PmfDoc {
                axes: self.roles.all.clone(),
                values: marg.mass().to_vec(),
            };
        }
        SourceSpec::from_document(&doc).expect("dropping side information keeps a valid model")
    }

    pub fn roles(&self) -> &AttributeRoles {
        &self.roles
    }

    /// Source attribute alphabets in model order.
    pub fn attributes(&self) -> &[Alphabet] {
        &self.attributes
    }

    pub fn attribute(&self, name: &str) -> Option<&Alphabet> {
        self.attributes.iter().find(|a| a.name() == name)
    }

    /// Joint pmf over the attributes followed by the side-information axis.
    pub fn joint(&self) -> &JointPmf {
        &self.joint
    }

    pub fn has_side_info(&self) -> bool {
        self.side_info.is_some()
    }

    /// The side-information axis (a one-symbol constant when absent).
    pub fn side_info_axis(&self) -> &Alphabet {
        self.joint.axes().last().expect("joint always has a side-information axis")
    }

    /// True when the side information takes at most one value with positive mass.
    pub fn side_info_is_constant(&self) -> bool {
        let n_z = self.side_info_axis().len();
        let mut seen = vec![0.0; n_z];
        for (i, m) in self.joint.mass().iter().enumerate() {
            seen[i % n_z] += m;
        }
        seen.iter().filter(|&&m| m > 0.0).count() <= 1
    }

    /// Reconstruction alphabets, one per public attribute, named `<attr>_hat`.
    pub fn reconstruction(&self) -> &[Alphabet] {
        &self.reconstruction
    }

    pub fn utility(&self) -> &UtilitySpec {
        &self.utility
    }

    pub fn privacy(&self) -> PrivacySpec {
        self.privacy
    }

    /// Distortion matrix of constraint `l` over (public tuple, reconstruction tuple).
    pub fn distortion(&self, l: usize) -> &DistortionMatrix {
        &self.distortions[l]
    }

    pub fn distortions(&self) -> &[DistortionMatrix] {
        &self.distortions
    }

    pub(crate) fn positions(&self, names: &[String]) -> Vec<usize> {
        names
            .iter()
            .map(|n| self.roles.all.iter().position(|a| a == n).expect("validated attribute"))
            .collect()
    }

    pub(crate) fn public_axes(&self) -> Vec<Alphabet> {
        self.roles
            .public
            .iter()
            .map(|n| self.attribute(n).unwrap().clone())
            .collect()
    }

    pub(crate) fn axes_of(&self, names: &[String]) -> Vec<Alphabet> {
        names.iter().map(|n| self.attribute(n).unwrap().clone()).collect()
    }

    /// Number of cells in the attribute product.
    pub fn source_size(&self) -> usize {
        product_size(&self.attributes)
    }

    /// Maps every attribute cell to its index in the product over `names`.
    pub(crate) fn projection(&self, names: &[String]) -> Vec<usize> {
        let pos = self.positions(names);
        let sub = self.axes_of(names);
        let mut idx = vec![0; self.attributes.len()];
        let mut part = vec![0; pos.len()];
        (0..self.source_size())
            .map(|x| {
                unflatten(x, &self.attributes, &mut idx);
                for (k, &p) in pos.iter().enumerate() {
                    part[k] = idx[p];
                }
                flatten(&part, &sub)
            })
            .collect()
    }

    /// Joint mass laid out as `[x * n_z + z]`.
    pub(crate) fn source_side_mass(&self) -> &[f64] {
        self.joint.mass()
    }

    fn build_distortion(&self, l: usize) -> Result<DistortionMatrix> {
        let c = &self.utility.constraints[l];
        let public = &self.roles.public;
        let attrs = c.function.attributes();
        if attrs.is_empty() {
            return Err(Error::Validation(format!("utility {l} names no attributes")));
        }
        for a in attrs {
            if !public.contains(a) {
                return Err(Error::Validation(format!(
                    "utility {l} uses `{a}`, which is not public"
                )));
            }
        }
        let src_axes = self.public_axes();
        let rec_axes = &self.reconstruction;
        let sel: Vec<usize> = attrs.iter().map(|a| public.iter().position(|p| p == a).unwrap()).collect();

        // images of every source and reconstruction tuple under f
        type Image = (usize, Vec<String>);
        let image_of = |axes: &[Alphabet], flat: usize| -> Result<Image> {
            let mut idx = vec![0; axes.len()];
            unflatten(flat, axes, &mut idx);
            let labels: Vec<String> = sel.iter().map(|&k| axes[k].symbols()[idx[k]].clone()).collect();
            match &c.function {
                UtilityFunction::Projection { .. } => {
                    let sub: Vec<Alphabet> = sel.iter().map(|&k| axes[k].clone()).collect();
                    let part: Vec<usize> = sel.iter().map(|&k| idx[k]).collect();
                    Ok((flatten(&part, &sub), labels))
                }
                UtilityFunction::Table { outputs, table, .. } => {
                    // reconstruction symbols are read in the source alphabet
                    let src_sub: Vec<Alphabet> = sel.iter().map(|&k| src_axes[k].clone()).collect();
                    let mut part = Vec::with_capacity(sel.len());
                    for (j, &k) in sel.iter().enumerate() {
                        let s = src_axes[k].index_of(&labels[j]).ok_or_else(|| {
                            Error::Validation(format!(
                                "utility {l}: reconstruction symbol `{}` of `{}` is outside its source alphabet",
                                labels[j],
                                public[k]
                            ))
                        })?;
                        part.push(s);
                    }
                    let out = &table[flatten(&part, &src_sub)];
                    let o = outputs
                        .iter()
                        .position(|v| v == out)
                        .ok_or_else(|| Error::Validation(format!("utility {l}: table value `{out}` is not an output")))?;
                    Ok((o, vec![out.clone()]))
                }
            }
        };
        if let UtilityFunction::Table { outputs, table, .. } = &c.function {
            let need: usize = sel.iter().map(|&k| src_axes[k].len()).product();
            if table.len() != need {
                return Err(Error::Validation(format!(
                    "utility {l}: function table has {} entries, expected {need}",
                    table.len()
                )));
            }
            Alphabet::new("f", outputs.clone())?;
        }
        let n_src = product_size(&src_axes);
        let n_rec = product_size(rec_axes);
        let src: Vec<Image> = (0..n_src).map(|s| image_of(&src_axes, s)).collect::<Result<_>>()?;
        let rec: Vec<Image> = (0..n_rec).map(|r| image_of(rec_axes, r)).collect::<Result<_>>()?;
        let mut values = vec![0.0; n_src * n_rec];
        for (s, (si, sl)) in src.iter().enumerate() {
            for (r, (ri, rl)) in rec.iter().enumerate() {
                values[s * n_rec + r] = match &c.measure {
                    DistortionMeasure::Hamming => sl.iter().zip(rl).filter(|(a, b)| a != b).count() as f64,
                    DistortionMeasure::SquaredDifference => {
                        let mut acc = 0.0;
                        for (a, b) in sl.iter().zip(rl) {
                            let d = parse_number(a)? - parse_number(b)?;
                            acc += d * d;
                        }
                        acc
                    }
                    DistortionMeasure::Table(t) => *t.get(*si).and_then(|row| row.get(*ri)).ok_or_else(|| {
                        Error::Validation(format!("utility {l}: distortion table is too small"))
                    })?,
                };
            }
        }
        DistortionMatrix::with_reconstruction(n_src, values, rec_axes.to_vec())
    }
}

// ---------------------------------------------------------------------------
// Databases
// ---------------------------------------------------------------------------

/// Rows of attribute symbols; columns keep the order of the CSV header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Database {
    schema: Vec<Alphabet>,
    rows: Vec<Vec<usize>>,
}

impl Database {
    pub fn new(schema: Vec<Alphabet>, rows: Vec<Vec<usize>>) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            if row.len() != schema.len() || row.iter().zip(&schema).any(|(&v, a)| v >= a.len()) {
                return Err(Error::Schema(format!("row {i} does not fit the schema")));
            }
        }
        Ok(Database { schema, rows })
    }

    pub fn schema(&self) -> &[Alphabet] {
        &self.schema
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.schema.iter().position(|a| a.name() == name)
    }

    /// CSV text with a header row and `\n` line endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<&str> = self.schema.iter().map(Alphabet::name).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for row in &self.rows {
            for (j, (&v, a)) in row.iter().zip(&self.schema).enumerate() {
                if j > 0 {
                    out.push(',');
                }
                out.push_str(&a.symbols()[v]);
            }
            out.push('\n');
        }
        out
    }
}

/// Parses CSV text whose header names every column of `schema`.
pub fn ingest_csv(text: &str, schema: &[Alphabet]) -> Result<Database> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::Schema(format!("unreadable header: {e}")))?
        .clone();
    let mut columns = Vec::with_capacity(header.len());
    for name in header.iter() {
        let a = schema
            .iter()
            .find(|a| a.name() == name)
            .ok_or_else(|| Error::Schema(format!("unknown column `{name}`")))?;
        if columns.iter().any(|c: &Alphabet| c.name() == name) {
            return Err(Error::Schema(format!("column `{name}` appears twice")));
        }
        columns.push(a.clone());
    }
    if let Some(a) = schema.iter().find(|a| !columns.iter().any(|c| c.name() == a.name())) {
        return Err(Error::Schema(format!("missing column `{}`", a.name())));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            Error::Row {
                line,
                message: e.to_string(),
            }
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let mut row = Vec::with_capacity(columns.len());
        for (cell, a) in record.iter().zip(&columns) {
            let v = a.index_of(cell).ok_or_else(|| Error::Row {
                line,
                message: format!("symbol `{cell}` is not in the alphabet of `{}`", a.name()),
            })?;
            row.push(v);
        }
        rows.push(row);
    }
    Ok(Database { schema: columns, rows })
}

/// Relative-frequency pmf over the database's columns.
pub fn estimate_empirical(db: &Database) -> Result<JointPmf> {
    if db.rows.is_empty() {
        return Err(Error::Validation("cannot estimate a pmf from an empty database".into()));
    }
    let mut counts = vec![0u64; product_size(&db.schema)];
    for row in &db.rows {
        counts[flatten(row, &db.schema)] += 1;
    }
    let n = db.rows.len() as f64;
    JointPmf::new(db.schema.clone(), counts.into_iter().map(|c| c as f64 / n).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::entropy;

    pub(crate) const MINIMAL: &str = r#"{
        "alphabets": [{"name": "x", "symbols": ["0", "1"]}],
        "roles": {"public": ["x"], "private": ["x"]},
        "pmf": {"axes": ["x"], "values": [0.5, 0.5]},
        "utility": [{"g": "hamming", "D": 0.1}],
        "privacy": {"E": 0.0}
    }"#;

    #[test]
    fn minimal_spec_loads() {
        let spec = load_spec(MINIMAL).unwrap();
        assert_eq!(spec.source_size(), 2);
        assert!(!spec.has_side_info());
        assert!(spec.side_info_is_constant());
        assert!((entropy(spec.joint()) - 1.0).abs() < 1e-15);
        let d = spec.distortion(0);
        assert_eq!(d.values(), &[0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn renormalizes_within_tolerance() {
        let text = MINIMAL.replace("[0.5, 0.5]", "[0.5, 0.4999999]");
        assert!(matches!(load_spec(&text), Err(Error::Validation(_))));
        let text = MINIMAL.replace("[0.5, 0.5]", "[0.5, 0.4999999999]");
        let spec = load_spec(&text).unwrap();
        assert!((spec.joint().mass().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_models() {
        let neg = MINIMAL.replace("[0.5, 0.5]", "[1.5, -0.5]");
        assert!(matches!(load_spec(&neg), Err(Error::Validation(_))));

        let uncovered = r#"{
            "alphabets": [{"name": "a", "symbols": ["0", "1"]}, {"name": "b", "symbols": ["0", "1"]}],
            "roles": {"public": ["a"], "private": []},
            "pmf": {"axes": ["a", "b"], "values": [0.25, 0.25, 0.25, 0.25]},
            "utility": [{"g": "hamming", "D": 0.1}],
            "privacy": {"E": 0.0}
        }"#;
        assert!(matches!(load_spec(uncovered), Err(Error::Validation(_))));

        let bad_enc = MINIMAL.replace(r#""private": ["x"]"#, r#""private": ["x"], "encoded": []"#);
        assert!(matches!(load_spec(&bad_enc), Err(Error::Validation(_))));
        assert!(matches!(load_spec("{"), Err(Error::Parse(_))));
    }

    #[test]
    fn squared_and_table_measures() {
        let text = r#"{
            "alphabets": [{"name": "age", "symbols": ["1", "2", "4"]}, {"name": "s", "symbols": ["n", "y"]}],
            "roles": {"public": ["age"], "private": ["s"]},
            "pmf": {"axes": ["s", "age"], "values": [0.1, 0.2, 0.2, 0.2, 0.2, 0.1]},
            "utility": [
                {"g": "squared", "D": 1.0},
                {"f": {"attributes": ["age"], "outputs": ["lo", "hi"], "table": ["lo", "lo", "hi"]},
                 "g": {"table": [[0, 1], [2, 0]]}, "D": 0.5}
            ],
            "privacy": {"E": 0.2}
        }"#;
        let spec = load_spec(text).unwrap();
        // canonical axis order is [age, s, _z]
        assert_eq!(spec.joint().axes()[0].name(), "age");
        assert!((spec.joint().get(&[0, 1, 0]) - 0.2).abs() < 1e-15);
        assert!((spec.joint().get(&[2, 0, 0]) - 0.2).abs() < 1e-15);
        let sq = spec.distortion(0);
        assert_eq!(sq.get(0, 2), 9.0);
        assert_eq!(sq.get(2, 1), 4.0);
        let t = spec.distortion(1);
        assert_eq!(t.get(0, 1), 0.0);
        assert_eq!(t.get(0, 2), 1.0);
        assert_eq!(t.get(2, 0), 2.0);
    }

    #[test]
    fn serialization_round_trip() {
        let text = r#"{
            "alphabets": [{"name": "a", "symbols": ["0", "1"]}, {"name": "b", "symbols": ["p", "q", "r"]},
                          {"name": "z", "symbols": ["0", "1"]}],
            "roles": {"public": ["a"], "private": ["b"]},
            "side_info": "z",
            "reconstruction": [{"name": "a", "symbols": ["0", "1", "?"]}],
            "pmf": {"axes": ["z", "a", "b"], "values": [0.1, 0.05, 0.05, 0.1, 0.1, 0.1, 0.05, 0.1, 0.05, 0.1, 0.1, 0.1]},
            "utility": [{"g": {"table": [[0, 1, 0.4], [1, 0, 0.4]]}, "D": 0.2}],
            "privacy": {"E": 0.3}
        }"#;
        let spec = load_spec(text).unwrap();
        let again = load_spec(&spec.to_json()).unwrap();
        assert_eq!(spec.roles(), again.roles());
        assert_eq!(spec.reconstruction(), again.reconstruction());
        assert_eq!(spec.utility(), again.utility());
        for (a, b) in spec.joint().mass().iter().zip(again.joint().mass()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn csv_examples() {
        let schema = vec![Alphabet::new("x", ["0", "1"]).unwrap()];
        let db = ingest_csv("x\n0\n1\n0\n", &schema).unwrap();
        assert_eq!(db.len(), 3);
        assert_eq!(db.rows(), &[vec![0], vec![1], vec![0]]);

        match ingest_csv("x\n0\n2\n", &schema) {
            Err(Error::Row { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected a row error, got {other:?}"),
        }
        assert!(ingest_csv("x\n", &schema).unwrap().is_empty());
        assert!(matches!(ingest_csv("y\n0\n", &schema), Err(Error::Schema(_))));
        let two = vec![schema[0].clone(), Alphabet::new("w", ["a"]).unwrap()];
        assert!(matches!(ingest_csv("x\n0\n", &two), Err(Error::Schema(_))));
    }

    #[test]
    fn empirical_examples() {
        let s = vec![Alphabet::new("a", ["0", "1"]).unwrap(), Alphabet::new("b", ["0", "1"]).unwrap()];
        let db = ingest_csv("a,b\n0,0\n0,1\n1,0\n1,1\n", &s).unwrap();
        assert_eq!(estimate_empirical(&db).unwrap().mass(), &[0.25; 4]);
        let db = ingest_csv("a,b\n1,0\n1,0\n", &s).unwrap();
        assert_eq!(estimate_empirical(&db).unwrap().mass(), &[0.0, 0.0, 1.0, 0.0]);
        let db = ingest_csv("a\n0\n0\n1\n", &s[..1]).unwrap();
        let p = estimate_empirical(&db).unwrap();
        assert!((p.mass()[0] - 2.0 / 3.0).abs() < 1e-15);
        let empty = ingest_csv("a\n", &s[..1]).unwrap();
        assert!(estimate_empirical(&empty).is_err());
    }
}
