use std::io::{Read, Write};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::config::Method;
use crate::error::{Result, SweepError};

/// Column order of `records.csv`.
pub const CSV_HEADER: [&str; 13] = [
    "n",
    "method",
    "seed",
    "d_eff",
    "rank",
    "kappa",
    "var_grad_mean",
    "var_grad_first",
    "product_var_deff",
    "loss_final",
    "closure_dim",
    "truncated_dim",
    "closure_defect",
];

/// One `(n, method)` cell of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub n: usize,
    pub method: Method,
    pub seed: u64,
    pub d_eff: f64,
    pub rank: usize,
    #[serde(serialize_with = "ser_kappa", deserialize_with = "de_kappa")]
    pub kappa: f64,
    pub var_grad_mean: f64,
    pub var_grad_first: f64,
    /// `var_grad_mean * d_eff`, computed once and stored.
    pub product_var_deff: f64,
    pub loss_final: f64,
    /// Dimension of the source circuit's Lie closure.
    pub closure_dim: usize,
    /// Dimension of the basis the model is built on.
    pub truncated_dim: usize,
    pub closure_defect: f64,
    pub closure_converged: bool,
    pub n_params: usize,
    /// Seconds spent on the cell. Not written to the CSV.
    pub wall_time: f64,
    /// Descending eigenvalues of the empirical metric.
    #[serde(default)]
    pub spectrum: Vec<f64>,
    #[serde(default)]
    pub loss_trajectory: Vec<f64>,
    #[serde(default)]
    pub jacobian_mean_sq_opnorm: f64,
}

fn ser_kappa<S: Serializer>(k: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if k.is_finite() {
        s.serialize_f64(*k)
    } else {
        s.serialize_str("inf")
    }
}

fn de_kappa<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum K {
        F(f64),
        S(String),
    }
    match K::deserialize(d)? {
        K::F(v) => Ok(v),
        K::S(s) if s == "inf" => Ok(f64::INFINITY),
        K::S(s) => Err(serde::de::Error::custom(format!("bad kappa `{s}`"))),
    }
}

fn fmt_f64(x: f64) -> String {
    if x.is_infinite() && x > 0.0 {
        "inf".to_string()
    } else {
        // shortest representation that parses back to the same bits
        format!("{x:?}")
    }
}

impl SweepRecord {
    pub fn csv_fields(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            self.method.to_string(),
            self.seed.to_string(),
            fmt_f64(self.d_eff),
            self.rank.to_string(),
            fmt_f64(self.kappa),
            fmt_f64(self.var_grad_mean),
            fmt_f64(self.var_grad_first),
            fmt_f64(self.product_var_deff),
            fmt_f64(self.loss_final),
            self.closure_dim.to_string(),
            self.truncated_dim.to_string(),
            fmt_f64(self.closure_defect),
        ]
    }

    /// `product_var_deff` recomputed from its stored factors.
    pub fn product_is_consistent(&self) -> bool {
        self.var_grad_mean * self.d_eff == self.product_var_deff
    }
}

pub fn write_csv<W: Write>(records: &[SweepRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record(r.csv_fields())?;
    }
    w.flush().map_err(|e| SweepError::io("records.csv", e))?;
    Ok(())
}

pub fn csv_string(records: &[SweepRecord]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(records, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

/// Reads the CSV columns back; fields that only live in JSON are left empty.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<SweepRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(SweepError::Records(format!("unexpected header {header:?}")));
    }
    let mut out = Vec::new();
    for (line, row) in rd.records().enumerate() {
        let row = row?;
        let bad = |col: &str| SweepError::Records(format!("row {}: bad `{col}`", line + 1));
        let int = |i: usize| row[i].parse::<u64>().map_err(|_| bad(CSV_HEADER[i]));
        let real = |i: usize| row[i].parse::<f64>().map_err(|_| bad(CSV_HEADER[i]));
        out.push(SweepRecord {
            n: int(0)? as usize,
            method: row[1].parse().map_err(|_| bad("method"))?,
            seed: int(2)?,
            d_eff: real(3)?,
            rank: int(4)? as usize,
            kappa: real(5)?,
            var_grad_mean: real(6)?,
            var_grad_first: real(7)?,
            product_var_deff: real(8)?,
            loss_final: real(9)?,
            closure_dim: int(10)? as usize,
            truncated_dim: int(11)? as usize,
            closure_defect: real(12)?,
            closure_converged: true,
            n_params: 0,
            wall_time: 0.0,
            spectrum: Vec::new(),
            loss_trajectory: Vec::new(),
            jacobian_mean_sq_opnorm: 0.0,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn sample() -> SweepRecord {
        SweepRecord {
            n: 3,
            method: Method::LieTrunc,
            seed: 42,
            d_eff: 11.37,
            rank: 12,
            kappa: f64::INFINITY,
            var_grad_mean: 0.1 + 0.2,
            var_grad_first: 1e-33,
            product_var_deff: (0.1 + 0.2) * 11.37,
            loss_final: -0.99,
            closure_dim: 36,
            truncated_dim: 12,
            closure_defect: 0.0,
            closure_converged: true,
            n_params: 12,
            wall_time: 0.5,
            spectrum: vec![2.0, 1.0],
            loss_trajectory: vec![0.1],
            jacobian_mean_sq_opnorm: 3.0,
        }
    }

    #[test]
    fn header_is_exact() {
        let s = csv_string(&[]).unwrap();
        assert_eq!(
            s,
            "n,method,seed,d_eff,rank,kappa,var_grad_mean,var_grad_first,product_var_deff,loss_final,closure_dim,truncated_dim,closure_defect\n"
        );
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let r = sample();
        let s = csv_string(&[r.clone()]).unwrap();
        assert!(s.contains(",inf,"));
        let back = read_csv(s.as_bytes()).unwrap();
        assert_eq!(back.len(), 1);
        let b = &back[0];
        assert_eq!(b.var_grad_mean.to_bits(), r.var_grad_mean.to_bits());
        assert_eq!(b.var_grad_first.to_bits(), r.var_grad_first.to_bits());
        assert!(b.kappa.is_infinite());
        assert!(b.product_is_consistent());
        assert_eq!(csv_string(&back).unwrap(), s);
    }

    #[test]
    fn json_kappa_sentinel() {
        let r = sample();
        let j = serde_json::to_string(&r).unwrap();
        assert!(j.contains("\"kappa\":\"inf\""));
        let back: SweepRecord = serde_json::from_str(&j).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn rejects_wrong_header() {
        assert!(read_csv("a,b\n1,2\n".as_bytes()).is_err());
    }
}
