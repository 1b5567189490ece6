//! Plain-text domain descriptions.
//!
//! ```text
//! # unit disk
//! kind = circle
//! center = 0 0
//! radius = 1
//! ```
//!
//! Recognized kinds and keys:
//! `circle` (center, radius), `ellipse` (center, a, b), `annulus`
//! (center, r0), `fourier` (x_cos, x_sin, y_cos, y_sin, optional reach),
//! `spline` (points as `x y; x y; ...`, optional reach) and `strip`
//! (x_min, x_max, half_height).

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{Curve, Domain2D, FourierCurve, PeriodicSpline, Point};

struct Entries {
    path: String,
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn err<T>(&self, line: usize, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            path: self.path.clone(),
            line,
            message: message.into(),
        })
    }

    fn raw(&self, key: &str) -> Result<(usize, &str)> {
        match self.map.get(key) {
            Some((l, v)) => Ok((*l, v.as_str())),
            None => self.err(0, format!("missing key `{key}`")),
        }
    }

    fn numbers(&self, key: &str) -> Result<Vec<f64>> {
        let (line, v) = self.raw(key)?;
        v.split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| ())
                    .and_then(|x| if x.is_finite() { Ok(x) } else { Err(()) })
            })
            .collect::<std::result::Result<Vec<_>, _>>()
            .or_else(|_| self.err(line, format!("`{key}`: expected numbers, found `{v}`")))
    }

    fn number(&self, key: &str) -> Result<f64> {
        let (line, _) = self.raw(key)?;
        match self.numbers(key)?.as_slice() {
            [x] => Ok(*x),
            _ => self.err(line, format!("`{key}`: expected one number")),
        }
    }

    fn optional_number(&self, key: &str) -> Result<Option<f64>> {
        if self.map.contains_key(key) {
            self.number(key).map(Some)
        } else {
            Ok(None)
        }
    }

    fn point(&self, key: &str, default: Option<Point>) -> Result<Point> {
        if !self.map.contains_key(key) {
            if let Some(p) = default {
                return Ok(p);
            }
        }
        let (line, _) = self.raw(key)?;
        match self.numbers(key)?.as_slice() {
            [x, y] => Ok(Point::new(*x, *y)),
            _ => self.err(line, format!("`{key}`: expected two numbers")),
        }
    }

    fn points(&self, key: &str) -> Result<Vec<Point>> {
        let (line, v) = self.raw(key)?;
        v.split(';')
            .filter(|s| !s.trim().is_empty())
            .map(|pair| {
                let xy: Vec<f64> = pair.split_whitespace().filter_map(|t| t.parse().ok()).collect();
                match xy.as_slice() {
                    [x, y] => Ok(Point::new(*x, *y)),
                    _ => self.err(line, format!("`{key}`: bad point `{}`", pair.trim())),
                }
            })
            .collect()
    }

    fn line_of(&self, key: &str) -> usize {
        self.map.get(key).map_or(0, |(l, _)| *l)
    }
}

/// Parses a domain description; `path` is only used in error messages.
pub fn parse_domain(text: &str, path: &str) -> Result<Domain2D> {
    let mut entries = Entries {
        path: path.to_string(),
        map: BTreeMap::new(),
    };
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((k, v)) = content.split_once('=') else {
            return entries.err(line, format!("expected `key = value`, found `{content}`"));
        };
        let key = k.trim().to_ascii_lowercase();
        if entries.map.insert(key.clone(), (line, v.trim().to_string())).is_some() {
            return entries.err(line, format!("duplicate key `{key}`"));
        }
    }
    let (kind_line, kind) = entries.raw("kind")?;
    let kind = kind.to_ascii_lowercase();
    let origin = Some(Point::ORIGIN);
    let built = match kind.as_str() {
        "circle" => Domain2D::circle(entries.point("center", origin)?, entries.number("radius")?),
        "ellipse" => Domain2D::ellipse(entries.point("center", origin)?, entries.number("a")?, entries.number("b")?),
        "annulus" => Domain2D::annulus(entries.point("center", origin)?, entries.number("r0")?),
        "fourier" => FourierCurve::new(
            entries.numbers("x_cos")?,
            entries.numbers("x_sin")?,
            entries.numbers("y_cos")?,
            entries.numbers("y_sin")?,
        )
        .and_then(|c| Domain2D::from_curve(Curve::Fourier(c), entries.optional_number("reach")?)),
        "spline" => PeriodicSpline::new(entries.points("points")?)
            .and_then(|c| Domain2D::from_curve(Curve::Spline(c), entries.optional_number("reach")?)),
        "strip" => Domain2D::strip(
            entries.number("x_min")?,
            entries.number("x_max")?,
            entries.number("half_height")?,
        ),
        other => return entries.err(kind_line, format!("unknown kind `{other}`")),
    };
    built.or_else(|e| match e {
        Error::InvalidInput(m) => {
            let line = ["radius", "a", "b", "r0", "points", "x_cos", "x_max", "half_height"]
                .iter()
                .map(|k| entries.line_of(k))
                .find(|&l| l > 0)
                .unwrap_or(kind_line);
            entries.err(line, m)
        }
        other => Err(other),
    })
}

pub fn read_domain(path: impl AsRef<Path>) -> Result<Domain2D> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_domain(&text, &path.display().to_string())
}
