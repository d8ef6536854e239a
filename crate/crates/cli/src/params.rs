//! Typed parameters for each operation. Every field has a default, so
//! `params` may be omitted or partial; unknown keys are configuration
//! errors.

use finsler_core::MapSpec;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::config::Operation;
use crate::HarnessError;

macro_rules! params {
    ($(#[$doc:meta])* $name:ident { $($field:ident : $ty:ty = $default:expr),* $(,)? }) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        #[serde(deny_unknown_fields, default)]
        pub struct $name {
            $(pub $field: $ty,)*
        }

        impl Default for $name {
            fn default() -> Self {
                $name { $($field: $default,)* }
            }
        }
    };
}

params!(ValidateParams { samples: usize = 200 });

params!(NormalRadiusParams {
    p: Option<Vec<f64>> = None,
    cap: f64 = 1.0,
});

params!(AuditParams {
    pairs: usize = 50,
    triples: usize = 50,
});

params!(ChartParams {
    p: Option<Vec<f64>> = None,
    budget: f64 = 0.5,
    roundtrip_points: usize = 8,
});

params!(IsometryParams {
    map: Option<MapSpec> = None,
    points: usize = 5,
    point_only: bool = false,
    expect_isometry: Option<bool> = None,
});

params!(MyersSteenrodParams {
    map: Option<MapSpec> = None,
    p: Option<Vec<f64>> = None,
    radius: f64 = 0.4,
});

params!(
    /// `q` defaults to the point at F-distance `distance` from `p` along `e_1`.
    BallImageParams {
        p: Option<Vec<f64>> = None,
        q: Option<Vec<f64>> = None,
        distance: f64 = 0.6,
        epsilon: f64 = 0.2,
        samples: usize = 4000,
    }
);

params!(DifferentialParams {
    p: Option<Vec<f64>> = None,
    q: Option<Vec<f64>> = None,
    distance: f64 = 0.6,
    delta: f64 = 0.1,
    sandwich_samples: usize = 16,
});

params!(GeodesicPathParams {
    p: Option<Vec<f64>> = None,
    v: Option<Vec<f64>> = None,
    t_min: f64 = -1.0,
    t_max: f64 = 1.0,
    tol: f64 = 1e-9,
});

params!(AsymmetryParams { pairs: usize = 20 });

params!(SpraySuiteParams {
    samples: usize = 100,
    corruption: f64 = 0.1,
});

params!(GeodesicSuiteParams {
    paths: usize = 10,
    rescaling_pairs: usize = 50,
    exp_points: usize = 5,
});

params!(DistanceSuiteParams {
    centers: usize = 3,
    pairs: usize = 10,
    polylines: usize = 200,
});

params!(BusemannMayerParams {
    pairs: usize = 20,
    t0: f64 = 1e-2,
    levels: usize = 4,
});

params!(ChartSuiteParams {
    centers: usize = 10,
    budget: f64 = 0.5,
    roundtrip_points: usize = 10,
});

params!(IsometrySuiteParams {
    points: usize = 5,
    pairs: usize = 4,
});

params!(MyersSteenrodSuiteParams { radius: f64 = 0.4 });

params!(SubmetrySuiteParams {
    distance: f64 = 0.6,
    epsilon: f64 = 0.2,
    samples: usize = 4000,
    delta: f64 = 0.1,
    sandwich_samples: usize = 16,
});

pub fn parse<T: DeserializeOwned>(op: Operation, params: &Map<String, Value>) -> Result<T, HarnessError> {
    serde_json::from_value(Value::Object(params.clone()))
        .map_err(|e| HarnessError::Config(format!("bad params for {op}: {e}")))
}

fn defaults_of<T: Default + Serialize>() -> Value {
    serde_json::to_value(T::default()).expect("defaults serialize")
}

/// Parameter names with their defaults.
pub fn defaults(op: Operation) -> Value {
    match op {
        Operation::ValidateMetric => defaults_of::<ValidateParams>(),
        Operation::NormalRadius => defaults_of::<NormalRadiusParams>(),
        Operation::QuasimetricAudit => defaults_of::<AuditParams>(),
        Operation::DistanceChart => defaults_of::<ChartParams>(),
        Operation::IsometryVerdict => defaults_of::<IsometryParams>(),
        Operation::MyersSteenrod => defaults_of::<MyersSteenrodParams>(),
        Operation::SubmetryBallImage => defaults_of::<BallImageParams>(),
        Operation::SubmetryDifferential => defaults_of::<DifferentialParams>(),
        Operation::GeodesicPath => defaults_of::<GeodesicPathParams>(),
        Operation::DistanceAsymmetry => defaults_of::<AsymmetryParams>(),
        Operation::SpraySuite => defaults_of::<SpraySuiteParams>(),
        Operation::GeodesicSuite => defaults_of::<GeodesicSuiteParams>(),
        Operation::DistanceSuite => defaults_of::<DistanceSuiteParams>(),
        Operation::BusemannMayerSuite => defaults_of::<BusemannMayerParams>(),
        Operation::DistanceChartSuite => defaults_of::<ChartSuiteParams>(),
        Operation::IsometrySuite => defaults_of::<IsometrySuiteParams>(),
        Operation::MyersSteenrodSuite => defaults_of::<MyersSteenrodSuiteParams>(),
        Operation::SubmetrySuite => defaults_of::<SubmetrySuiteParams>(),
    }
}

/// Type-check `params` for `op` without running anything.
pub fn validate(op: Operation, params: &Map<String, Value>) -> Result<(), HarnessError> {
    match op {
        Operation::ValidateMetric => parse::<ValidateParams>(op, params).map(drop),
        Operation::NormalRadius => parse::<NormalRadiusParams>(op, params).map(drop),
        Operation::QuasimetricAudit => parse::<AuditParams>(op, params).map(drop),
        Operation::DistanceChart => parse::<ChartParams>(op, params).map(drop),
        Operation::IsometryVerdict => {
            let p = parse::<IsometryParams>(op, params)?;
            p.map.map(drop).ok_or_else(|| HarnessError::Config("isometry-verdict needs params.map".into()))
        }
        Operation::MyersSteenrod => {
            let p = parse::<MyersSteenrodParams>(op, params)?;
            p.map.map(drop).ok_or_else(|| HarnessError::Config("myers-steenrod needs params.map".into()))
        }
        Operation::SubmetryBallImage => parse::<BallImageParams>(op, params).map(drop),
        Operation::SubmetryDifferential => parse::<DifferentialParams>(op, params).map(drop),
        Operation::GeodesicPath => parse::<GeodesicPathParams>(op, params).map(drop),
        Operation::DistanceAsymmetry => parse::<AsymmetryParams>(op, params).map(drop),
        Operation::SpraySuite => parse::<SpraySuiteParams>(op, params).map(drop),
        Operation::GeodesicSuite => parse::<GeodesicSuiteParams>(op, params).map(drop),
        Operation::DistanceSuite => parse::<DistanceSuiteParams>(op, params).map(drop),
        Operation::BusemannMayerSuite => parse::<BusemannMayerParams>(op, params).map(drop),
        Operation::DistanceChartSuite => parse::<ChartSuiteParams>(op, params).map(drop),
        Operation::IsometrySuite => parse::<IsometrySuiteParams>(op, params).map(drop),
        Operation::MyersSteenrodSuite => parse::<MyersSteenrodSuiteParams>(op, params).map(drop),
        Operation::SubmetrySuite => parse::<SubmetrySuiteParams>(op, params).map(drop),
    }
}
