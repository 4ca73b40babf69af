//! Run configuration: a single JSON document, resolved against defaults and
//! echoed back into every report.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use slitstone::admissibility::{validate_datum, InfinityDatum, Profile};
use slitstone::symmetry::{translated_datum, PairOptions};
use slitstone::vi_solver::{Mesh, PsorOptions, Stencil};

use crate::output::to_json;
use crate::CliError;

/// Configuration as written by the user; every field but `k` is optional.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub k: usize,
    pub a: Option<Vec<f64>>,
    #[serde(rename = "L")]
    pub l: Option<f64>,
    pub h: Option<f64>,
    pub omega: Option<f64>,
    pub tol: Option<f64>,
    pub err_tol: Option<f64>,
    pub max_iter: Option<usize>,
    #[serde(rename = "N")]
    pub n_terms: Option<usize>,
    pub rounds: Option<usize>,
    pub radii: Option<Vec<f64>>,
    pub boundary_mode: Option<String>,
    pub tau: Option<f64>,
    pub alpha: Option<Vec<f64>>,
    pub b: Option<Vec<f64>>,
    pub stencil: Option<String>,
    pub pair_tol: Option<f64>,
    pub alpha_tol: Option<f64>,
    pub defect_gain: Option<f64>,
    pub out_dir: Option<PathBuf>,
}

/// Fully resolved configuration.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub k: usize,
    pub a: Vec<f64>,
    #[serde(rename = "L")]
    pub l: f64,
    pub h: f64,
    pub omega: f64,
    pub tol: f64,
    pub err_tol: f64,
    pub max_iter: usize,
    #[serde(rename = "N")]
    pub n_terms: usize,
    pub rounds: usize,
    pub radii: Vec<f64>,
    pub boundary_mode: String,
    pub tau: Option<f64>,
    pub alpha: Option<Vec<f64>>,
    pub b: Option<Vec<f64>>,
    pub stencil: String,
    pub pair_tol: f64,
    pub alpha_tol: f64,
    pub defect_gain: f64,
    pub out_dir: PathBuf,
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("config field `{field}`: {msg}"))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let raw: RawConfig = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("config: {e}")))?;
        Self::resolve(raw)
    }

    /// Fills defaults and checks consistency.
    pub fn resolve(raw: RawConfig) -> Result<Self, CliError> {
        let k = raw.k;
        if k == 0 {
            return Err(invalid("k", "must be at least 1"));
        }
        let mode = raw.boundary_mode.unwrap_or_else(|| "datum".into());
        let l = raw.l.unwrap_or(8.0);
        let h = raw.h.unwrap_or(l / 512.0);
        let mesh = Mesh::new(l, h).map_err(|e| invalid(if l < 4.0 { "L" } else { "h" }, e))?;
        let stencil = raw.stencil.unwrap_or_else(|| Stencil::default().name().into());
        let st = Stencil::parse(&stencil).map_err(|e| invalid("stencil", e))?;
        let omega = raw.omega.unwrap_or_else(|| st.optimal_omega(mesh.n()));
        if !(1.0..2.0).contains(&omega) {
            return Err(invalid("omega", format!("{omega} is outside [1, 2)")));
        }
        let tol = raw.tol.unwrap_or(1e-10);
        let err_tol = raw.err_tol.unwrap_or(1e-13);
        for (name, v) in [("tol", tol), ("err_tol", err_tol)] {
            if !(v > 0.0) {
                return Err(invalid(name, "must be positive"));
            }
        }
        let alpha = match (&mode[..], raw.alpha) {
            ("exact", None) => Some(vec![0.0; 2 * k - 2]),
            (_, a) => a,
        };
        if let Some(al) = &alpha {
            Profile::new(k, al.clone()).map_err(|e| invalid("alpha", e))?;
        }
        let a = match &mode[..] {
            "exact" => {
                let tau = raw.tau.ok_or_else(|| invalid("tau", "required for boundary_mode exact"))?;
                let profile = Profile::new(k, alpha.clone().unwrap_or_default()).map_err(|e| invalid("alpha", e))?;
                translated_datum(&profile, tau).map_err(|e| invalid("tau", e))?.a().to_vec()
            }
            "datum" | "enriched" => {
                let a = raw.a.ok_or_else(|| invalid("a", "required"))?;
                validate_datum(k, &a).map_err(|e| invalid("a", e))?;
                a
            }
            other => return Err(invalid("boundary_mode", format!("unknown mode {other:?}"))),
        };
        if mode == "enriched" && raw.b.is_none() {
            return Err(invalid("b", "required for boundary_mode enriched"));
        }
        let radii = raw.radii.unwrap_or_else(|| [0.5, 0.625, 0.75].iter().map(|f| f * l).collect());
        if radii.is_empty() {
            return Err(invalid("radii", "must not be empty"));
        }
        for &r in &radii {
            if !(r > 0.0 && r + 2.0 * mesh.h() < l) {
                return Err(invalid("radii", format!("radius {r} is not strictly inside the mesh")));
            }
        }
        let rounds = raw.rounds.unwrap_or(3);
        if rounds == 0 {
            return Err(invalid("rounds", "must be at least 1"));
        }
        Ok(Self {
            k,
            a,
            l,
            h,
            omega,
            tol,
            err_tol,
            max_iter: raw.max_iter.unwrap_or(200 * mesh.n()),
            n_terms: raw.n_terms.unwrap_or(2 * k - 2),
            rounds,
            radii,
            boundary_mode: mode,
            tau: raw.tau,
            alpha,
            b: raw.b,
            stencil,
            pair_tol: raw.pair_tol.unwrap_or(0.02),
            alpha_tol: raw.alpha_tol.unwrap_or(0.01),
            defect_gain: raw.defect_gain.unwrap_or(1.0),
            out_dir: raw.out_dir.unwrap_or_else(|| PathBuf::from("out")),
        })
    }

    /// Hex SHA-256 of the resolved configuration.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(to_json(self).as_bytes()))
    }

    pub fn mesh(&self) -> Mesh {
        Mesh::new(self.l, self.h).expect("validated at load")
    }

    /// Datum; exact-mode data may lie outside the unit box.
    pub fn datum(&self) -> InfinityDatum {
        InfinityDatum::unchecked(self.k, self.a.clone()).expect("validated at load")
    }

    pub fn profile(&self) -> Option<Profile> {
        self.alpha.as_ref().map(|a| Profile::new(self.k, a.clone()).expect("validated at load"))
    }

    pub fn psor(&self) -> PsorOptions {
        PsorOptions {
            omega: Some(self.omega),
            tol: self.tol,
            err_tol: self.err_tol,
            max_iter: Some(self.max_iter),
        }
    }

    pub fn pair_options(&self) -> PairOptions {
        PairOptions {
            mesh: self.mesh(),
            psor: self.psor(),
            rounds: self.rounds,
            radii: Some(self.radii.clone()),
            pair_tol: self.pair_tol,
            alpha_tol: self.alpha_tol,
            defect_gain: self.defect_gain,
        }
    }

    pub fn stencil(&self) -> Stencil {
        Stencil::parse(&self.stencil).expect("validated at load")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(json: &str) -> RawConfig {
        serde_json::from_str(json).unwrap()
    }

    #[test]
    fn defaults_are_filled() {
        let c = RunConfig::resolve(raw(r#"{"k": 2, "a": [0, 0, 0]}"#)).unwrap();
        assert_eq!(c.l, 8.0);
        assert_eq!(c.h, 8.0 / 512.0);
        assert_eq!(c.n_terms, 2);
        assert_eq!(c.rounds, 3);
        assert_eq!(c.radii, vec![4.0, 5.0, 6.0]);
        assert_eq!(c.max_iter, 200 * 512);
        assert!(c.omega > 1.9 && c.omega < 2.0);
    }

    #[test]
    fn out_of_range_names_field() {
        let e = RunConfig::resolve(raw(r#"{"k": 2, "a": [1.5, 0, 0]}"#)).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("`a`") && msg.contains("CoefficientOutOfRange"), "{msg}");
        assert_eq!(e.exit_code(), 3);
    }

    #[test]
    fn rejects_bad_mesh_and_radii() {
        assert!(RunConfig::resolve(raw(r#"{"k": 2, "a": [0,0,0], "h": 0.3}"#)).is_err());
        assert!(RunConfig::resolve(raw(r#"{"k": 2, "a": [0,0,0], "radii": [7.99]}"#)).is_err());
        assert!(RunConfig::resolve(raw(r#"{"k": 2, "a": [0,0,0], "omega": 2.0}"#)).is_err());
        assert!(RunConfig::resolve(raw(r#"{"k": 2, "boundary_mode": "exact"}"#)).is_err());
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(serde_json::from_str::<RawConfig>(r#"{"k": 2, "bogus": 1}"#).is_err());
    }

    #[test]
    fn exact_mode_derives_datum() {
        let c = RunConfig::resolve(raw(r#"{"k": 2, "boundary_mode": "exact", "tau": 0.5}"#)).unwrap();
        assert_eq!(c.a, vec![-1.75, 1.09375, -0.2734375]);
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = RunConfig::resolve(raw(r#"{"k": 2, "a": [0, 0, 0]}"#)).unwrap();
        let b = RunConfig::resolve(raw(r#"{"k": 2, "a": [0, 0, 0], "L": 8}"#)).unwrap();
        let c = RunConfig::resolve(raw(r#"{"k": 2, "a": [0, 0, 0.5]}"#)).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
