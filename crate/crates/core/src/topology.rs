//! Solved plans as a feature collection in local meters: buildings, the
//! base station, installed devices, test points and one line per
//! (test point, serving device) pair.

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::activation::ActivationTables;
use crate::catalog::{Catalog, Technology};
use crate::optimizer::{PlanKind, PlanSolution};
use crate::scenario::{Mount, Point3, Scenario};

pub const CRS: &str = "local-meters";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopologyError {
    #[error("tables and scenario disagree: {0}")]
    Mismatch(String),
    #[error("install ({site}, {spec}) is out of range")]
    BadInstall { site: usize, spec: usize },
}

fn point(p: &Point3) -> Value {
    json!({ "type": "Point", "coordinates": [p.x, p.y, p.z] })
}

fn feature(geometry: Value, properties: Value) -> Value {
    json!({ "type": "Feature", "geometry": geometry, "properties": properties })
}

fn round_deg(rad: f64) -> f64 {
    (rad.to_degrees().rem_euclid(360.0) * 1e6).round() / 1e6
}

/// Builds the topology document. The tables must come from this scenario
/// and catalog.
pub fn export_topology(
    solution: &PlanSolution,
    scenario: &Scenario,
    tables: &ActivationTables,
    catalog: &Catalog,
) -> Result<Value, TopologyError> {
    check_ids(scenario, tables, catalog)?;
    for i in &solution.installs {
        if i.site >= scenario.sites.len() || i.spec >= catalog.len() {
            return Err(TopologyError::BadInstall { site: i.site, spec: i.spec });
        }
    }

    let mut features = Vec::new();
    for (index, b) in scenario.buildings.iter().enumerate() {
        let mut ring: Vec<Value> = b.footprint.iter().map(|v| json!([v[0], v[1]])).collect();
        ring.push(json!([b.footprint[0][0], b.footprint[0][1]]));
        features.push(feature(
            json!({ "type": "Polygon", "coordinates": [ring] }),
            json!({ "kind": "building", "index": index, "height": b.height }),
        ));
    }
    features.push(feature(
        point(&scenario.bs.position),
        json!({ "kind": "bs", "id": "BS", "array": scenario.bs.array }),
    ));

    for i in &solution.installs {
        let site = &scenario.sites[i.site];
        let spec = &catalog.specs[i.spec];
        let orientation = match (spec.technology, site.mount) {
            (Technology::Ris, Mount::Wall { normal }) => Some(normal[1].atan2(normal[0])),
            (Technology::Star, _) => Some(site.position.azimuth_to(&scenario.bs.position)),
            _ => spec.orientation,
        };
        features.push(feature(
            point(&site.position),
            json!({
                "kind": "device",
                "id": site.id,
                "spec": spec.id,
                "technology": spec.technology.label(),
                "mount": site.mount.kind(),
                "orientation_deg": orientation.map(round_deg),
                "cost": spec.cost,
                "config": spec.config,
            }),
        ));
    }

    let k = match solution.kind {
        PlanKind::Fcmc { k } => k,
        PlanKind::Mbcc { .. } => 1,
    };
    let mut links = Vec::new();
    for (t, tp) in scenario.tps.iter().enumerate() {
        let mut served_by = Vec::new();
        if tables.delta_bs[t] {
            served_by.push("BS".to_string());
        }
        for i in &solution.installs {
            if tables.get(t, i.site, i.spec) {
                let site = &scenario.sites[i.site];
                served_by.push(site.id.clone());
                links.push(feature(
                    json!({
                        "type": "LineString",
                        "coordinates": [
                            [tp.position.x, tp.position.y, tp.position.z],
                            [site.position.x, site.position.y, site.position.z],
                        ],
                    }),
                    json!({ "kind": "link", "tp": tp.id, "device": site.id, "snr_db": finite(tables.snr_at(t, i.site, i.spec)) }),
                ));
            }
        }
        let covered = served_by.len() as u32 >= k;
        features.push(feature(point(&tp.position), json!({ "kind": "tp", "id": tp.id, "covered": covered, "served_by": served_by })));
    }
    features.extend(links);

    let mut props = Map::new();
    match solution.kind {
        PlanKind::Fcmc { k } => {
            props.insert("model".into(), json!("fcmc"));
            props.insert("k".into(), json!(k));
        }
        PlanKind::Mbcc { budget } => {
            props.insert("model".into(), json!("mbcc"));
            props.insert("budget".into(), json!(budget));
        }
    }
    props.insert("gamma_db".into(), json!(tables.gamma_threshold));
    props.insert("catalog".into(), json!(catalog.flavor.label()));
    props.insert("objective".into(), json!(solution.objective));
    props.insert("total_cost".into(), json!(solution.total_cost));
    props.insert("optimal".into(), json!(solution.optimal));
    props.insert("bound_gap".into(), json!(finite(solution.bound_gap)));
    props.insert("tps".into(), json!(scenario.tps.len()));
    props.insert("covered".into(), json!(solution.covered.len()));
    props.insert("installs".into(), json!(solution.installs.len()));

    Ok(json!({
        "type": "FeatureCollection",
        "crs": CRS,
        "properties": Value::Object(props),
        "features": features,
    }))
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn check_ids(scenario: &Scenario, tables: &ActivationTables, catalog: &Catalog) -> Result<(), TopologyError> {
    let same = |a: &[String], b: Vec<&String>| a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x == y);
    if !same(&tables.tp_ids, scenario.tps.iter().map(|t| &t.id).collect()) {
        return Err(TopologyError::Mismatch("test point ids".into()));
    }
    if !same(&tables.site_ids, scenario.sites.iter().map(|s| &s.id).collect()) {
        return Err(TopologyError::Mismatch("site ids".into()));
    }
    if !same(&tables.spec_ids, catalog.specs.iter().map(|s| &s.id).collect()) {
        return Err(TopologyError::Mismatch("spec ids".into()));
    }
    Ok(())
}

/// Feature counts by kind: buildings, bs, devices, tps, links.
pub fn feature_counts(doc: &Value) -> [usize; 5] {
    let mut counts = [0; 5];
    for f in doc["features"].as_array().into_iter().flatten() {
        let slot = match f["properties"]["kind"].as_str() {
            Some("building") => 0,
            Some("bs") => 1,
            Some("device") => 2,
            Some("tp") => 3,
            Some("link") => 4,
            _ => continue,
        };
        counts[slot] += 1;
    }
    counts
}
