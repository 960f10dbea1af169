//! Line-oriented scene description format.
//!
//! ```text
//! ceiling <h>
//! wall <ax> <ay> <bx> <by>
//! door <label> <hx> <hy> <leaf> <heading_deg> [<angles_deg_csv>]
//! lum <label> <x> <y> <mount_h> <candela> iso|cos|ies:<path>
//! grid <minx> <miny> <maxx> <maxy> <spacing> <height> <nx> <ny> <nz>|omni
//! sensor <x> <y> <height> <nx> <ny> <nz>|omni
//! ```
//!
//! `#` starts a comment. IES paths are resolved against the scene file's
//! directory.

use std::fs;
use std::path::Path;

use super::ies::parse_ies;
use super::{
    Angle, Bounds, CandidatePoint, Door, GridSpec, Luminaire, PhotometricProfile, Point2, Scene,
    SensorNormal, WallSegment, DEFAULT_DOOR_ANGLES,
};
use crate::error::{ParseError, SceneError};

const DEFAULT_CEILING: f64 = 2.7;

struct Tokens<'a> {
    line: usize,
    items: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(line: usize, text: &'a str) -> Self {
        let mut items = Vec::new();
        let mut start = None;
        for (i, c) in text.char_indices() {
            match (c.is_whitespace(), start) {
                (true, Some(s)) => {
                    items.push((s, &text[s..i]));
                    start = None;
                }
                (false, None) => start = Some(i),
                _ => {}
            }
        }
        if let Some(s) = start {
            items.push((s, &text[s..]));
        }
        Self {
            line,
            items,
            pos: 0,
        }
    }

    fn syntax(&self, column: usize, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            line: self.line,
            column: column + 1,
            message: message.into(),
        }
    }

    fn semantic(&self, message: impl Into<String>) -> ParseError {
        ParseError::Semantic {
            line: self.line,
            message: message.into(),
        }
    }

    fn end_column(&self) -> usize {
        self.items.last().map_or(0, |(c, t)| c + t.len())
    }

    fn word(&mut self, what: &str) -> Result<(usize, &'a str), ParseError> {
        let item = self
            .items
            .get(self.pos)
            .copied()
            .ok_or_else(|| self.syntax(self.end_column(), format!("missing {what}")))?;
        self.pos += 1;
        Ok(item)
    }

    fn number(&mut self, what: &str) -> Result<f64, ParseError> {
        let (col, tok) = self.word(what)?;
        match tok.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.syntax(col, format!("expected number for {what}, found `{tok}`"))),
        }
    }

    fn normal(&mut self) -> Result<SensorNormal, ParseError> {
        if self.items.get(self.pos).map(|(_, t)| *t) == Some("omni") {
            self.pos += 1;
            return Ok(SensorNormal::Omni);
        }
        let n = [self.number("nx")?, self.number("ny")?, self.number("nz")?];
        SensorNormal::directed(n).map_err(|_| self.semantic("sensor normal must have unit length"))
    }

    fn finish(&self) -> Result<(), ParseError> {
        match self.items.get(self.pos) {
            Some((col, tok)) => Err(self.syntax(*col, format!("unexpected token `{tok}`"))),
            None => Ok(()),
        }
    }
}

/// Parses a scene, resolving IES paths relative to the working directory.
pub fn parse_scene(text: &str) -> Result<Scene, ParseError> {
    parse_scene_at(text, Path::new("."))
}

/// Reads and parses a scene file.
pub fn load_scene(path: &Path) -> Result<Scene, ParseError> {
    let text = fs::read_to_string(path).map_err(|e| ParseError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_scene_at(&text, path.parent().unwrap_or(Path::new(".")))
}

pub fn parse_scene_at(text: &str, base_dir: &Path) -> Result<Scene, ParseError> {
    let mut ceiling = None;
    let mut walls = Vec::new();
    let mut doors: Vec<Door> = Vec::new();
    let mut luminaires: Vec<Luminaire> = Vec::new();
    let mut grids = Vec::new();
    let mut sensors = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("");
        let mut t = Tokens::new(idx + 1, content);
        if t.items.is_empty() {
            continue;
        }
        let (kw_col, keyword) = t.word("keyword")?;
        match keyword {
            "ceiling" => {
                let h = t.number("height")?;
                if !(h.is_finite() && h > 0.0) {
                    return Err(t.semantic("ceiling height must be positive"));
                }
                if ceiling.replace(h).is_some() {
                    return Err(t.semantic("ceiling declared twice"));
                }
            }
            "wall" => {
                let a = Point2::new(t.number("ax")?, t.number("ay")?);
                let b = Point2::new(t.number("bx")?, t.number("by")?);
                let wall = WallSegment::new(a, b).map_err(|e| t.semantic(e.to_string()))?;
                walls.push(wall);
            }
            "door" => {
                let (_, label) = t.word("label")?;
                let hinge = Point2::new(t.number("hx")?, t.number("hy")?);
                let leaf = t.number("leaf length")?;
                let heading = Angle::from_degrees(t.number("heading")?);
                let angles = match t.items.get(t.pos).copied() {
                    None => DEFAULT_DOOR_ANGLES.to_vec(),
                    Some((col, csv)) => {
                        t.pos += 1;
                        csv.split(',')
                            .map(|s| match s.trim().parse::<f64>() {
                                Ok(v) if v.is_finite() => Ok(Angle::from_degrees(v)),
                                _ => Err(t.syntax(col, format!("bad angle list `{csv}`"))),
                            })
                            .collect::<Result<Vec<_>, _>>()?
                    }
                };
                let door = Door::new(label, hinge, leaf, heading, angles)
                    .map_err(|e| t.semantic(e.to_string()))?;
                if doors.iter().any(|d| d.label == door.label) {
                    return Err(t.semantic(format!("duplicate door label `{label}`")));
                }
                doors.push(door);
            }
            "lum" => {
                let (_, label) = t.word("label")?;
                if luminaires.iter().any(|l| l.label == label) {
                    return Err(t.semantic(format!("duplicate luminaire `{label}`")));
                }
                let position = Point2::new(t.number("x")?, t.number("y")?);
                let mount_height = t.number("mount height")?;
                let intensity = t.number("candela")?;
                let (pcol, ptok) = t.word("profile")?;
                let profile = match ptok {
                    "iso" => PhotometricProfile::Isotropic,
                    "cos" => PhotometricProfile::CosineLobe,
                    other => match other.strip_prefix("ies:") {
                        Some(source) if !source.is_empty() => {
                            let path = base_dir.join(source);
                            let text = fs::read_to_string(&path).map_err(|e| ParseError::Io {
                                path: path.display().to_string(),
                                message: e.to_string(),
                            })?;
                            let table = parse_ies(&text)
                                .map_err(|e| t.semantic(format!("{}: {e}", path.display())))?;
                            PhotometricProfile::Ies {
                                source: source.to_string(),
                                table,
                            }
                        }
                        _ => {
                            return Err(t.syntax(
                                pcol,
                                format!("profile must be iso, cos or ies:<path>, found `{other}`"),
                            ))
                        }
                    },
                };
                if !(intensity.is_finite() && intensity >= 0.0) {
                    return Err(t.semantic("candela must be non-negative"));
                }
                if !(mount_height.is_finite() && mount_height > 0.0) {
                    return Err(t.semantic("mount height must be positive"));
                }
                luminaires.push(Luminaire {
                    id: luminaires.len(),
                    label: label.to_string(),
                    position,
                    mount_height,
                    intensity,
                    profile,
                });
            }
            "grid" => {
                let min = Point2::new(t.number("minx")?, t.number("miny")?);
                let max = Point2::new(t.number("maxx")?, t.number("maxy")?);
                let spacing = t.number("spacing")?;
                let height = t.number("height")?;
                let normal = t.normal()?;
                let spec = GridSpec {
                    bounds: Bounds { min, max },
                    spacing,
                    height,
                    normal,
                };
                super::make_grid(&spec).map_err(|e| t.semantic(e.to_string()))?;
                grids.push(spec);
            }
            "sensor" => {
                let position = Point2::new(t.number("x")?, t.number("y")?);
                let height = t.number("height")?;
                let normal = t.normal()?;
                sensors.push(CandidatePoint {
                    position,
                    height,
                    normal,
                });
            }
            other => return Err(t.syntax(kw_col, format!("unknown keyword `{other}`"))),
        }
        t.finish()?;
    }

    Scene::new(
        ceiling.unwrap_or(DEFAULT_CEILING),
        walls,
        doors,
        luminaires,
        grids,
        sensors,
    )
    .map_err(|e: SceneError| ParseError::Invalid(e.to_string()))
}

fn fmt_normal(n: &SensorNormal) -> String {
    match n {
        SensorNormal::Omni => "omni".into(),
        SensorNormal::Directed([x, y, z]) => format!("{x} {y} {z}"),
    }
}

/// Writes a scene back to the text format. IES profiles are emitted by
/// reference, so the referenced files must stay alongside the output.
pub fn render_scene(scene: &Scene) -> String {
    let mut out = format!("ceiling {}\n", scene.ceiling_height);
    for w in &scene.walls {
        out.push_str(&format!("wall {} {} {} {}\n", w.a.x, w.a.y, w.b.x, w.b.y));
    }
    for d in &scene.doors {
        let angles = d
            .allowed_angles
            .iter()
            .map(|a| a.degrees().to_string())
            .collect::<Vec<_>>()
            .join(",");
        out.push_str(&format!(
            "door {} {} {} {} {} {}\n",
            d.label,
            d.hinge.x,
            d.hinge.y,
            d.leaf_length,
            d.closed_heading.degrees(),
            angles
        ));
    }
    for l in &scene.luminaires {
        let profile = match &l.profile {
            PhotometricProfile::Isotropic => "iso".to_string(),
            PhotometricProfile::CosineLobe => "cos".to_string(),
            PhotometricProfile::Ies { source, .. } => format!("ies:{source}"),
        };
        out.push_str(&format!(
            "lum {} {} {} {} {} {}\n",
            l.label, l.position.x, l.position.y, l.mount_height, l.intensity, profile
        ));
    }
    for g in &scene.grids {
        out.push_str(&format!(
            "grid {} {} {} {} {} {} {}\n",
            g.bounds.min.x,
            g.bounds.min.y,
            g.bounds.max.x,
            g.bounds.max.y,
            g.spacing,
            g.height,
            fmt_normal(&g.normal)
        ));
    }
    for s in &scene.sensors {
        out.push_str(&format!(
            "sensor {} {} {} {}\n",
            s.position.x,
            s.position.y,
            s.height,
            fmt_normal(&s.normal)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
# one room, one light
ceiling 2.5
wall 0 0 4 0
wall 4 0 4 3
wall 4 3 0 3
wall 0 3 0 0
lum A 2 1.5 2.4 100 iso
";

    #[test]
    fn minimal_scene() {
        let s = parse_scene(MINIMAL).unwrap();
        assert_eq!(s.luminaire_count(), 1);
        assert_eq!(s.doors.len(), 0);
        assert_eq!(s.walls.len(), 4);
        assert_eq!(s.ceiling_height, 2.5);
    }

    #[test]
    fn door_angle_out_of_range_is_semantic() {
        let text = format!("{MINIMAL}door d 0 1 0.8 90 0,120\n");
        match parse_scene(&text) {
            Err(ParseError::Semantic { line, .. }) => assert_eq!(line, 8),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn default_door_angles() {
        let text = format!("{MINIMAL}door d 4 1 0.8 90\n");
        let s = parse_scene(&text).unwrap();
        assert_eq!(s.doors[0].allowed_angles, DEFAULT_DOOR_ANGLES.to_vec());
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_scene("wall 0 0 x 1\n").unwrap_err();
        assert_eq!(
            err,
            ParseError::Syntax {
                line: 1,
                column: 10,
                message: "expected number for bx, found `x`".into()
            }
        );
        assert!(matches!(
            parse_scene("lamp A 1 1 1 1 iso\n"),
            Err(ParseError::Syntax {
                line: 1,
                column: 1,
                ..
            })
        ));
        assert!(matches!(
            parse_scene("wall 0 0 1 1 7\n"),
            Err(ParseError::Syntax { column: 14, .. })
        ));
    }

    #[test]
    fn semantic_errors() {
        let dup = format!("{MINIMAL}lum A 1 1 2 50 iso\n");
        assert!(matches!(
            parse_scene(&dup),
            Err(ParseError::Semantic { line: 8, .. })
        ));
        assert!(matches!(
            parse_scene("wall 1 1 1 1\nlum A 0 0 2 1 iso\n"),
            Err(ParseError::Semantic { line: 1, .. })
        ));
        assert!(matches!(
            parse_scene("wall 0 0 1 0\n"),
            Err(ParseError::Invalid(_))
        ));
    }

    #[test]
    fn missing_ies_file_is_io_error() {
        let text = "lum A 0 0 2 100 ies:does/not/exist.ies\n";
        assert!(matches!(parse_scene(text), Err(ParseError::Io { .. })));
    }

    #[test]
    fn render_round_trip() {
        let text = format!(
            "{MINIMAL}door d 4 1 0.8 90 0,30,90\ngrid 0 0 4 3 0.5 0.8 0 0 1\nsensor 1 1 1 omni\nlum B 1.25 0.1 1.7 33.3 cos\n"
        );
        let s = parse_scene(&text).unwrap();
        assert_eq!(parse_scene(&render_scene(&s)).unwrap(), s);
    }
}
