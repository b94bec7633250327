use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::logistic;
use crate::error::{Error, Result};
use crate::rng::{chain_rng, standard_normal_vector};

/// Binary-response regression data.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    /// `r × d`, one datum per row.
    pub x: DMatrix<f64>,
    /// Labels in `{0, 1}`.
    pub y: DVector<f64>,
    pub beta_true: Option<DVector<f64>>,
}

impl Dataset {
    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.nrows() == 0
    }
}

/// Synthetic logistic-regression data.
///
/// `Z_i ~ N(0, I_d)` and `X_i = Z_i / ‖Z_i‖₂`; `β = W / ‖W‖₂` with
/// `W ~ N(0, I_d)`; `Y_i ~ Bernoulli(F(βᵀX_i))`. Draw order is fixed (all of
/// `Z`, then `W`, then one uniform per label) so the output is a pure
/// function of `(d, r, seed)`.
pub fn gen_synthetic(d: usize, r: usize, seed: u64) -> Result<Dataset> {
    if d == 0 || r == 0 {
        return Err(Error::invalid("gen_synthetic needs d >= 1 and r >= 1"));
    }
    let mut rng = chain_rng(seed);
    let mut x = DMatrix::zeros(r, d);
    for i in 0..r {
        // Redraw the (probability zero) all-zero row rather than divide by zero.
        let z = loop {
            let z = standard_normal_vector(&mut rng, d);
            if z.norm() > 0.0 {
                break z;
            }
        };
        x.set_row(i, &(z.normalize()).transpose());
    }
    let w = loop {
        let w = standard_normal_vector(&mut rng, d);
        if w.norm() > 0.0 {
            break w;
        }
    };
    let beta = w.normalize();
    let probs = &x * &beta;
    let y = probs.map(|s| {
        let u: f64 = rng.random();
        if u < logistic(s) {
            1.0
        } else {
            0.0
        }
    });
    Ok(Dataset {
        x,
        y,
        beta_true: Some(beta),
    })
}

/// Writes the dataset as CSV with header `f1,...,fd,y`.
pub fn write_dataset_csv<W: Write>(data: &Dataset, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let d = data.dim();
    let mut header: Vec<String> = (1..=d).map(|j| format!("f{j}")).collect();
    header.push("y".into());
    w.write_record(&header)?;
    for i in 0..data.len() {
        let mut rec: Vec<String> = data.x.row(i).iter().map(|v| format!("{v:?}")).collect();
        rec.push(format!("{}", data.y[i] as u8));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a dataset written by [`write_dataset_csv`], validating the header,
/// the column count of every row and the label domain.
pub fn read_dataset_csv<R: Read>(input: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rdr.headers()?.clone();
    let cols = header.len();
    if cols < 2 {
        return Err(Error::invalid("dataset needs at least one feature column and y"));
    }
    let d = cols - 1;
    for (j, name) in header.iter().take(d).enumerate() {
        if name.trim() != format!("f{}", j + 1) {
            return Err(Error::invalid(format!(
                "header column {} is {name:?}, expected \"f{}\"",
                j + 1,
                j + 1
            )));
        }
    }
    if header[d].trim() != "y" {
        return Err(Error::invalid("last header column must be \"y\""));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != cols {
            return Err(Error::invalid(format!(
                "row {} has {} columns, expected {cols}",
                line + 1,
                rec.len()
            )));
        }
        for field in rec.iter().take(d) {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::invalid(format!("row {}: cannot parse {field:?}", line + 1))
            })?;
            if !v.is_finite() {
                return Err(Error::invalid(format!("row {}: non-finite feature", line + 1)));
            }
            xs.push(v);
        }
        let y = match rec[d].trim() {
            "0" => 0.0,
            "1" => 1.0,
            other => {
                return Err(Error::invalid(format!(
                    "row {}: label {other:?} is not 0 or 1",
                    line + 1
                )))
            }
        };
        ys.push(y);
    }
    if ys.is_empty() {
        return Err(Error::invalid("dataset has no rows"));
    }
    Ok(Dataset {
        x: DMatrix::from_row_slice(ys.len(), d, &xs),
        y: DVector::from_vec(ys),
        beta_true: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_have_unit_norm() {
        let data = gen_synthetic(7, 30, 11).unwrap();
        for row in data.x.row_iter() {
            assert!((row.norm() - 1.0).abs() < 1e-12);
        }
        let beta = data.beta_true.unwrap();
        assert!((beta.norm() - 1.0).abs() < 1e-12);
        assert!(data.y.iter().all(|&y| y == 0.0 || y == 1.0));
    }

    #[test]
    fn deterministic_in_seed() {
        assert_eq!(gen_synthetic(5, 9, 3).unwrap(), gen_synthetic(5, 9, 3).unwrap());
        assert_ne!(gen_synthetic(5, 9, 3).unwrap(), gen_synthetic(5, 9, 4).unwrap());
    }

    #[test]
    fn rejects_empty_shapes() {
        assert!(gen_synthetic(0, 3, 1).is_err());
        assert!(gen_synthetic(3, 0, 1).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let data = gen_synthetic(3, 4, 5).unwrap();
        let mut buf = Vec::new();
        write_dataset_csv(&data, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("f1,f2,f3,y\n"));
        assert!(!text.contains('\r'));
        let back = read_dataset_csv(&buf[..]).unwrap();
        assert_eq!(back.x, data.x);
        assert_eq!(back.y, data.y);
    }

    #[test]
    fn loader_validates() {
        assert!(read_dataset_csv("f1,f2,y\n0.1,0.2,2\n".as_bytes()).is_err());
        assert!(read_dataset_csv("f1,f2,y\n0.1,1\n".as_bytes()).is_err());
        assert!(read_dataset_csv("a,b,y\n0.1,0.2,1\n".as_bytes()).is_err());
        assert!(read_dataset_csv("f1,f2,y\n".as_bytes()).is_err());
        let ok = read_dataset_csv("f1,f2,y\n0.1,0.2,1\n-1,3,0\n".as_bytes()).unwrap();
        assert_eq!(ok.len(), 2);
        assert_eq!(ok.y[1], 0.0);
    }
}
