use std::io::{Read, Write};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{FeatureMatrix, FeatureSchema};
use crate::error::{Error, Result};

/// Sidecar written next to a feature CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureFileSchema {
    pub schema: FeatureSchema,
    pub schema_fingerprint: String,
    pub config_fingerprint: String,
}

impl FeatureMatrix {
    /// `movie_id` followed by one column per schema entry.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["movie_id"];
        header.extend(self.schema.names());
        w.write_record(&header)?;
        for (id, row) in self.movie_ids.iter().zip(self.data.rows()) {
            let mut rec = vec![id.clone()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<features>", e))?;
        Ok(())
    }

    pub fn file_schema(&self, config_fingerprint: &str) -> FeatureFileSchema {
        FeatureFileSchema {
            schema: self.schema.clone(),
            schema_fingerprint: self.schema.fingerprint(),
            config_fingerprint: config_fingerprint.to_string(),
        }
    }
}

/// Reads a feature CSV back against its sidecar schema.
pub fn read_feature_csv<R: Read>(input: R, schema: &FeatureSchema) -> Result<FeatureMatrix> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    let expected: Vec<&str> = std::iter::once("movie_id").chain(schema.names()).collect();
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(Error::SchemaMismatch {
            expected: schema.fingerprint(),
            actual: "csv header differs from schema".into(),
        });
    }
    let mut ids = Vec::new();
    let mut values = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        ids.push(rec[0].to_string());
        for field in rec.iter().skip(1) {
            values.push(field.parse::<f64>().map_err(|_| Error::InvalidLine {
                line: i + 2,
                message: format!("bad number '{field}'"),
            })?);
        }
    }
    let data =
        Array2::from_shape_vec((ids.len(), schema.len()), values).map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(FeatureMatrix {
        schema: schema.clone(),
        movie_ids: ids,
        data,
    })
}
