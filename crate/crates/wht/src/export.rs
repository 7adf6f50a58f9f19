//! JSON and CSV views of tables, spectral data, curves and differentials.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use wht_core::model::Side;
use wht_core::oracle::TableRecord;
use wht_core::ring::{Scalar, Series, ZLaurent, C64, Q};
use wht_core::spectral::{FormalBranchpoint, SpectralData};
use wht_core::toprec::{NumericCurve, OmegaSet, Sample};

use crate::CliError;

/// Scalars written as decimal strings when exact and `[re, im]` otherwise.
pub trait ExportScalar: Scalar {
    fn to_json(&self) -> Value;
}

impl ExportScalar for Q {
    fn to_json(&self) -> Value {
        Value::String(self.to_string())
    }
}

impl ExportScalar for C64 {
    fn to_json(&self) -> Value {
        complex(*self)
    }
}

pub fn complex(z: C64) -> Value {
    json!([z.re, z.im])
}

pub fn series<F: ExportScalar>(s: &Series<F>) -> Value {
    Value::Array(s.coeffs().iter().map(|c| c.to_json()).collect())
}

/// `[{z, t}]` with `t` the coefficient series of `z^z`.
pub fn laurent<F: ExportScalar>(l: &ZLaurent<F>) -> Value {
    let Some((lo, hi)) = l.range() else {
        return json!([]);
    };
    Value::Array((lo..=hi).map(|k| json!({"z": k, "t": series(&l.coeff(k))})).collect())
}

pub fn table_json(records: &[(usize, TableRecord)]) -> Value {
    Value::Array(
        records
            .iter()
            .map(|(_, r)| {
                json!({
                    "lambda": r.lambda,
                    "mu": r.mu,
                    "ell": r.ell,
                    "ell_exp": r.ell_exp,
                    "connected": r.connected,
                    "genus": r.genus,
                    "count": r.count,
                })
            })
            .collect(),
    )
}

fn parts(p: &[u32]) -> String {
    p.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn table_csv(records: &[(usize, TableRecord)]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["d", "lambda", "mu", "ell", "ell_exp", "connected", "genus", "count"])?;
    for (d, r) in records {
        w.write_record([
            d.to_string(),
            parts(&r.lambda),
            parts(&r.mu),
            parts(&r.ell),
            r.ell_exp.map(|e| e.to_string()).unwrap_or_default(),
            r.connected.to_string(),
            r.genus.to_string(),
            r.count.clone(),
        ])?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

pub fn spectral_json<F: ExportScalar>(sd: &SpectralData<F>) -> Value {
    let colors: Vec<Value> = sd
        .classes
        .iter()
        .enumerate()
        .map(|(c, info)| {
            json!({
                "side": if info.side == Side::Num { "num" } else { "den" },
                "u": info.u.to_json(),
                "mult": info.mult,
                "A": laurent(&sd.a_laurent(c)),
                "B": laurent(&sd.b_laurent(c)),
            })
        })
        .collect();
    let mut out = json!({"T": sd.order, "colors": colors});
    if let Some(u) = &sd.params.u_exp {
        out["u_exp"] = u.to_json();
        out["eta"] = laurent(&sd.eta_laurent());
        out["theta"] = laurent(&sd.theta_laurent());
    }
    out
}

/// Product of `A_c^{mult}` over the classes on one side.
fn side_product<F: Scalar>(sd: &SpectralData<F>, side: Side) -> ZLaurent<F> {
    let mut acc = ZLaurent::new(0, vec![Series::one(sd.order)], sd.order);
    for (c, info) in sd.classes.iter().enumerate().filter(|(_, i)| i.side == side) {
        let a = sd.a_laurent(c);
        for _ in 0..info.mult {
            acc = acc.times(&a);
        }
    }
    acc
}

pub fn curve_json<F: ExportScalar>(
    sd: &SpectralData<F>,
    initial: &[C64],
    formal: &[FormalBranchpoint],
    numeric: Option<&NumericCurve>,
) -> Result<Value, CliError> {
    let h = sd.h()?;
    let mut out = json!({
        "X_num_coeffs": laurent(&side_product(sd, Side::Num)),
        "X_den_coeffs": laurent(&side_product(sd, Side::Den)),
        "H_coeffs": laurent(&h),
        "branchpoints": {
            "initial": initial.iter().map(|a| complex(*a)).collect::<Vec<_>>(),
            "formal": formal.iter().map(|f| json!({
                "a": complex(f.a),
                "t_coeffs_from_minus_one": f.laurent_coeffs().iter().map(|c| complex(*c)).collect::<Vec<_>>(),
                "residual": f.residual,
            })).collect::<Vec<_>>(),
        },
    });
    if let Some(c) = numeric {
        out["branchpoints"]["numeric"] = json!({
            "t_value": complex(c.t),
            "points": c.branchpoints.iter().map(|b| complex(*b)).collect::<Vec<_>>(),
            "tail": c.tail,
        });
    }
    Ok(out)
}

pub fn branchpoints_csv(curve: &NumericCurve) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["i", "re_a", "im_a", "re_b", "im_b"])?;
    for (i, (a, b)) in curve.initial.iter().zip(&curve.branchpoints).enumerate() {
        w.write_record([i.to_string(), a.re.to_string(), a.im.to_string(), b.re.to_string(), b.im.to_string()])?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.to_string()))
}

pub fn omega_json(set: &OmegaSet) -> Value {
    Value::Array(
        set.omegas
            .iter()
            .map(|((g, n), om)| {
                let terms: Vec<Value> = om
                    .entries
                    .iter()
                    .map(|(key, c)| {
                        json!({
                            "multi_index": key.iter().map(|(i, k)| json!([i, k])).collect::<Vec<_>>(),
                            "coeff": complex(*c),
                        })
                    })
                    .collect();
                json!({"g": g, "n": n, "terms": terms})
            })
            .collect(),
    )
}

pub fn samples_json(samples: &[Sample]) -> Value {
    Value::Array(
        samples
            .iter()
            .map(|s| {
                json!({
                    "z": s.z.iter().map(|z| complex(*z)).collect::<Vec<_>>(),
                    "tr": complex(s.tr),
                    "oracle": complex(s.oracle),
                    "rel": s.rel,
                    "budget": s.budget,
                })
            })
            .collect(),
    )
}

/// Writes `bytes` to `dir/name`, creating `dir`.
pub fn write(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

pub fn write_json(dir: &Path, name: &str, v: &Value) -> Result<PathBuf, CliError> {
    let mut text = serde_json::to_string_pretty(v).expect("values serialize");
    text.push('\n');
    write(dir, name, text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use wht_core::ring::Ring;

    #[test]
    fn scalars() {
        assert_eq!(Q::new(BigInt::from(-6), BigInt::from(4)).to_json(), json!("-3/2"));
        assert_eq!(Q::from_int(5).to_json(), json!("5"));
        assert_eq!(C64::new(0.5, -1.0).to_json(), json!([0.5, -1.0]));
        let s = Series::from_coeffs(vec![Q::from_int(1), Q::zero()], 1);
        assert_eq!(series(&s), json!(["1", "0"]));
    }
}
