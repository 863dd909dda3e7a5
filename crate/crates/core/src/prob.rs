//! Finite-alphabet probability arithmetic.
//!
//! A [`JointPmf`] is a dense tensor over a product of labeled [`Alphabet`]s,
//! stored row-major (the last axis varies fastest). Axes are addressed by
//! name. All information quantities are in bits and use `0 log 0 = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on total mass when loading a pmf; larger deviations are rejected.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Tolerance on each conditional slice of a [`Channel`].
pub const ROW_TOLERANCE: f64 = 1e-9;

/// A named, ordered set of distinct symbol labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    name: String,
    symbols: Vec<String>,
}

impl Alphabet {
    pub fn new<S: Into<String>>(name: impl Into<String>, symbols: impl IntoIterator<Item = S>) -> Result<Self> {
        let name = name.into();
        let symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        if symbols.is_empty() {
            return Err(Error::Validation(format!("alphabet `{name}` has no symbols")));
        }
        for (i, s) in symbols.iter().enumerate() {
            if symbols[..i].contains(s) {
                return Err(Error::Validation(format!(
                    "alphabet `{name}` repeats symbol `{s}`"
                )));
            }
        }
        Ok(Alphabet { name, symbols })
    }

    /// Alphabet with symbols `"0"`, `"1"`, ..., `"n-1"`.
    pub fn indexed(name: impl Into<String>, n: usize) -> Result<Self> {
        Alphabet::new(name, (0..n).map(|i| i.to_string()))
    }

    /// Single-symbol alphabet, used for absent side information.
    pub fn constant(name: impl Into<String>) -> Self {
        Alphabet {
            name: name.into(),
            symbols: vec!["0".to_string()],
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn index_of(&self, symbol: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s == symbol)
    }

    pub fn renamed(&self, name: impl Into<String>) -> Self {
        Alphabet {
            name: name.into(),
            symbols: self.symbols.clone(),
        }
    }
}

pub(crate) fn product_size(axes: &[Alphabet]) -> usize {
    axes.iter().map(Alphabet::len).product()
}

/// Row-major strides for `axes`.
pub(crate) fn strides(axes: &[Alphabet]) -> Vec<usize> {
    let mut out = vec![1; axes.len()];
    for i in (0..axes.len().saturating_sub(1)).rev() {
        out[i] = out[i + 1] * axes[i + 1].len();
    }
    out
}

/// Decomposes a flat row-major index into per-axis symbol indices.
pub(crate) fn unflatten(mut flat: usize, axes: &[Alphabet], out: &mut [usize]) {
    for i in (0..axes.len()).rev() {
        let n = axes[i].len();
        out[i] = flat % n;
        flat /= n;
    }
}

pub(crate) fn flatten(index: &[usize], axes: &[Alphabet]) -> usize {
    index
        .iter()
        .zip(axes)
        .fold(0, |acc, (&i, a)| acc * a.len() + i)
}

fn check_unique_names(axes: &[Alphabet]) -> Result<()> {
    for (i, a) in axes.iter().enumerate() {
        if axes[..i].iter().any(|b| b.name == a.name) {
            return Err(Error::Axis(format!("axis `{}` appears twice", a.name)));
        }
    }
    Ok(())
}

/// A probability mass function over a product of alphabets.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf {
    axes: Vec<Alphabet>,
    mass: Vec<f64>,
}

impl JointPmf {
    /// Builds a pmf from cell masses, renormalizing if the total is within
    /// [`MASS_TOLERANCE`] of one.
    pub fn new(axes: Vec<Alphabet>, mass: Vec<f64>) -> Result<Self> {
        check_unique_names(&axes)?;
        let size = product_size(&axes);
        if mass.len() != size {
            return Err(Error::Validation(format!(
                "pmf has {} values but the axes span {size} cells",
                mass.len()
            )));
        }
        if let Some(v) = mass.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::Validation(format!("pmf contains invalid mass {v}")));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::Validation(format!(
                "pmf mass sums to {total}, not 1"
            )));
        }
        Ok(JointPmf {
            axes,
            mass: mass.into_iter().map(|v| v / total).collect(),
        })
    }

    /// Builds a pmf from nonnegative weights with a positive total.
    pub fn from_weights(axes: Vec<Alphabet>, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::Validation("weights must have a positive finite total".into()));
        }
        JointPmf::new(axes, weights.into_iter().map(|w| w / total).collect())
    }

    pub fn uniform(axes: Vec<Alphabet>) -> Result<Self> {
        let n = product_size(&axes);
        JointPmf::new(axes, vec![1.0 / n as f64; n])
    }

    /// Point mass on the cell with the given per-axis symbol indices.
    pub fn point_mass(axes: Vec<Alphabet>, index: &[usize]) -> Result<Self> {
        if index.len() != axes.len() || index.iter().zip(&axes).any(|(&i, a)| i >= a.len()) {
            return Err(Error::Axis("point-mass index does not fit the axes".into()));
        }
        let mut mass = vec![0.0; product_size(&axes)];
        mass[flatten(index, &axes)] = 1.0;
        JointPmf::new(axes, mass)
    }

    pub fn axes(&self) -> &[Alphabet] {
        &self.axes
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn axis(&self, name: &str) -> Result<usize> {
        self.axes
            .iter()
            .position(|a| a.name == name)
            .ok_or_else(|| Error::Axis(format!("unknown axis `{name}`")))
    }

    fn axis_set(&self, names: &[&str]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(names.len());
        for n in names {
            let i = self.axis(n)?;
            if out.contains(&i) {
                return Err(Error::Axis(format!("axis `{n}` listed twice")));
            }
            out.push(i);
        }
        Ok(out)
    }

    /// Mass of one cell.
    pub fn get(&self, index: &[usize]) -> f64 {
        self.mass[flatten(index, &self.axes)]
    }

    /// Same distribution with axes reordered to `order` (which must name
    /// every axis exactly once).
    pub fn permuted(&self, order: &[&str]) -> Result<JointPmf> {
        if order.len() != self.axes.len() {
            return Err(Error::Axis("permutation must list every axis".into()));
        }
        self.marginal_raw(&self.axis_set(order)?)
    }

    fn marginal_raw(&self, keep: &[usize]) -> Result<JointPmf> {
        let out_axes: Vec<Alphabet> = keep.iter().map(|&i| self.axes[i].clone()).collect();
        let out_strides = strides(&out_axes);
        let mut mass = vec![0.0; product_size(&out_axes)];
        let mut idx = vec![0; self.axes.len()];
        for (flat, &m) in self.mass.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            unflatten(flat, &self.axes, &mut idx);
            let o: usize = keep.iter().zip(&out_strides).map(|(&k, s)| idx[k] * s).sum();
            mass[o] += m;
        }
        let total: f64 = mass.iter().sum();
        Ok(JointPmf {
            axes: out_axes,
            mass: mass.into_iter().map(|v| v / total).collect(),
        })
    }
}

/// Shannon entropy of a probability vector, in bits.
pub fn entropy_of(mass: &[f64]) -> f64 {
    -mass
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.log2())
        .sum::<f64>()
}

/// Binary entropy function in bits.
pub fn binary_entropy(p: f64) -> f64 {
    entropy_of(&[p, 1.0 - p])
}

/// Entropy of the whole joint pmf, in bits.
pub fn entropy(p: &JointPmf) -> f64 {
    entropy_of(&p.mass)
}

fn joint_entropy(p: &JointPmf, axes: &[usize]) -> Result<f64> {
    if axes.is_empty() {
        return Ok(0.0);
    }
    Ok(entropy(&p.marginal_raw(axes)?))
}

fn disjoint(p: &JointPmf, a: &[&str], b: &[&str]) -> Result<(Vec<usize>, Vec<usize>)> {
    let a = p.axis_set(a)?;
    let b = p.axis_set(b)?;
    if let Some(i) = a.iter().find(|i| b.contains(i)) {
        return Err(Error::Axis(format!(
            "axis `{}` appears in both sets",
            p.axes[*i].name
        )));
    }
    Ok((a, b))
}

/// `H(target | given)` in bits. Axes outside both sets are summed out.
pub fn conditional_entropy(p: &JointPmf, target: &[&str], given: &[&str]) -> Result<f64> {
    let (t, g) = disjoint(p, target, given)?;
    let both: Vec<usize> = t.iter().chain(&g).copied().collect();
    let h = joint_entropy(p, &both)? - joint_entropy(p, &g)?;
    Ok(h.max(0.0))
}

/// `I(left; right)` in bits.
pub fn mutual_information(p: &JointPmf, left: &[&str], right: &[&str]) -> Result<f64> {
    let (l, r) = disjoint(p, left, right)?;
    let both: Vec<usize> = l.iter().chain(&r).copied().collect();
    let i = joint_entropy(p, &l)? + joint_entropy(p, &r)? - joint_entropy(p, &both)?;
    Ok(i.max(0.0))
}

/// Marginal pmf over `keep`, in the order given.
pub fn marginalize(p: &JointPmf, keep: &[&str]) -> Result<JointPmf> {
    if keep.is_empty() {
        return Err(Error::Axis("cannot marginalize onto an empty axis set".into()));
    }
    p.marginal_raw(&p.axis_set(keep)?)
}

/// A conditional distribution from one product of alphabets to another.
///
/// `kernel[i * output_size + o]` is the probability of output cell `o` given
/// input cell `i`, both flattened row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    input_axes: Vec<Alphabet>,
    output_axes: Vec<Alphabet>,
    kernel: Vec<f64>,
}

impl Channel {
    pub fn new(input_axes: Vec<Alphabet>, output_axes: Vec<Alphabet>, kernel: Vec<f64>) -> Result<Self> {
        let all: Vec<Alphabet> = input_axes.iter().chain(&output_axes).cloned().collect();
        check_unique_names(&all)?;
        let n_in = product_size(&input_axes);
        let n_out = product_size(&output_axes);
        if kernel.len() != n_in * n_out {
            return Err(Error::Validation(format!(
                "channel kernel has {} entries, expected {}",
                kernel.len(),
                n_in * n_out
            )));
        }
        let mut kernel = kernel;
        for (i, row) in kernel.chunks_mut(n_out).enumerate() {
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::Validation(format!("channel row {i} has invalid entries")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_TOLERANCE {
                return Err(Error::Validation(format!("channel row {i} sums to {s}")));
            }
            row.iter_mut().for_each(|v| *v /= s);
        }
        Ok(Channel {
            input_axes,
            output_axes,
            kernel,
        })
    }

    /// Deterministic channel sending input cell `i` to output cell `map[i]`.
    pub fn deterministic(input_axes: Vec<Alphabet>, output_axes: Vec<Alphabet>, map: &[usize]) -> Result<Self> {
        let n_out = product_size(&output_axes);
        if map.len() != product_size(&input_axes) || map.iter().any(|&o| o >= n_out) {
            return Err(Error::Validation("deterministic map does not fit the axes".into()));
        }
        let mut kernel = vec![0.0; map.len() * n_out];
        for (i, &o) in map.iter().enumerate() {
            kernel[i * n_out + o] = 1.0;
        }
        Channel::new(input_axes, output_axes, kernel)
    }

    /// Identity channel from `input` to a copy of it named `output_name`.
    pub fn identity(input: &Alphabet, output_name: &str) -> Result<Self> {
        let map: Vec<usize> = (0..input.len()).collect();
        Channel::deterministic(vec![input.clone()], vec![input.renamed(output_name)], &map)
    }

    pub fn input_axes(&self) -> &[Alphabet] {
        &self.input_axes
    }

    pub fn output_axes(&self) -> &[Alphabet] {
        &self.output_axes
    }

    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }

    pub fn input_size(&self) -> usize {
        product_size(&self.input_axes)
    }

    pub fn output_size(&self) -> usize {
        product_size(&self.output_axes)
    }

    pub fn row(&self, input: usize) -> &[f64] {
        let n = self.output_size();
        &self.kernel[input * n..(input + 1) * n]
    }

    pub fn prob(&self, input: usize, output: usize) -> f64 {
        self.kernel[input * self.output_size() + output]
    }

    /// Cascade `self` then `next`; `next` must read exactly `self`'s outputs.
    pub fn then(&self, next: &Channel) -> Result<Channel> {
        if next.input_axes != self.output_axes {
            return Err(Error::Axis("cascade stages do not share an alphabet".into()));
        }
        let (n_in, n_mid, n_out) = (self.input_size(), self.output_size(), next.output_size());
        let mut kernel = vec![0.0; n_in * n_out];
        for i in 0..n_in {
            for m in 0..n_mid {
                let a = self.kernel[i * n_mid + m];
                if a == 0.0 {
                    continue;
                }
                for o in 0..n_out {
                    kernel[i * n_out + o] += a * next.kernel[m * n_out + o];
                }
            }
        }
        Channel::new(self.input_axes.clone(), next.output_axes.clone(), kernel)
    }
}

/// Joint pmf of `prior` and the output of `ch`, with mass `p(x) ch(y|x)`.
/// The result's axes are the prior's axes followed by the channel outputs.
pub fn attach_channel(prior: &JointPmf, ch: &Channel) -> Result<JointPmf> {
    let mut input_pos = Vec::with_capacity(ch.input_axes.len());
    for a in &ch.input_axes {
        let i = prior.axis(&a.name)?;
        if prior.axes[i] != *a {
            return Err(Error::Axis(format!(
                "channel input `{}` has a different alphabet than the prior",
                a.name
            )));
        }
        input_pos.push(i);
    }
    let axes: Vec<Alphabet> = prior.axes.iter().chain(&ch.output_axes).cloned().collect();
    check_unique_names(&axes)?;
    let n_out = ch.output_size();
    let in_strides = strides(&ch.input_axes);
    let mut mass = vec![0.0; prior.mass.len() * n_out];
    let mut idx = vec![0; prior.axes.len()];
    for (flat, &m) in prior.mass.iter().enumerate() {
        if m == 0.0 {
            continue;
        }
        unflatten(flat, &prior.axes, &mut idx);
        let row: usize = input_pos.iter().zip(&in_strides).map(|(&p, s)| idx[p] * s).sum();
        for (o, &k) in ch.row(row).iter().enumerate() {
            mass[flat * n_out + o] = m * k;
        }
    }
    let total: f64 = mass.iter().sum();
    Ok(JointPmf {
        axes,
        mass: mass.into_iter().map(|v| v / total).collect(),
    })
}
