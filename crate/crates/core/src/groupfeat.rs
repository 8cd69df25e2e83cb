//! Dominant sign color as a group feature: sign localization from
//! chromaticity and color maps, a hue vote over the localized pixels, the
//! color → label-set map, and a channel-shift robustness check.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::{Error, Image, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColorName {
    Red,
    Yellow,
    Blue,
}

impl ColorName {
    /// Vote tie-break order.
    pub const ALL: [ColorName; 3] = [ColorName::Red, ColorName::Yellow, ColorName::Blue];

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "red" => Some(ColorName::Red),
            "yellow" => Some(ColorName::Yellow),
            "blue" => Some(ColorName::Blue),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ColorName::Red => "red",
            ColorName::Yellow => "yellow",
            ColorName::Blue => "blue",
        }
    }
}

impl fmt::Display for ColorName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Per-pixel `(r, g, b) / (r + g + b)`, black pixels map to zero.
pub fn normalize_channels<T: Scalar>(img: &Image<T>) -> Result<Image<T>> {
    if img.channels() != 3 {
        return Err(Error::domain("color normalization needs a 3-channel image"));
    }
    let eps = T::lit(1e-9);
    let mut px = Vec::with_capacity(img.len());
    for p in img.pixels().chunks_exact(3) {
        let s = p[0] + p[1] + p[2];
        if s > eps {
            px.extend(p.iter().map(|&v| v / s));
        } else {
            px.extend([T::zero(); 3]);
        }
    }
    img.with_pixels(px)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColorMaps<T> {
    pub c: Array2<T>,
    pub r: Array2<T>,
    pub g: Array2<T>,
    pub b: Array2<T>,
    pub y: Array2<T>,
}

/// Chromaticity and color maps of a normalized image.
pub fn color_maps<T: Scalar>(norm: &Image<T>) -> Result<ColorMaps<T>> {
    if norm.channels() != 3 {
        return Err(Error::domain("color maps need a 3-channel image"));
    }
    let shape = (norm.height(), norm.width());
    let half = T::lit(0.5);
    let mut maps = ColorMaps {
        c: Array2::zeros(shape),
        r: Array2::zeros(shape),
        g: Array2::zeros(shape),
        b: Array2::zeros(shape),
        y: Array2::zeros(shape),
    };
    for row in 0..shape.0 {
        for col in 0..shape.1 {
            let [r, g, b] = norm.rgb(row, col);
            let idx = [row, col];
            maps.c[idx] = r.max(g).max(b) - r.min(g).min(b);
            maps.r[idx] = r - (g + b) * half;
            maps.g[idx] = g - (r + b) * half;
            maps.b[idx] = b - (r + g) * half;
            maps.y[idx] = (r + g) * half - (r - g).abs() * half + b;
        }
    }
    Ok(maps)
}

/// Clamps negatives to zero and keeps pixels at or above the mean of the
/// strictly positive values.
pub fn binarize_map<T: Scalar>(map: &Array2<T>) -> Array2<bool> {
    let (mut sum, mut count) = (T::zero(), 0usize);
    for &v in map.iter() {
        if v > T::zero() {
            sum += v;
            count += 1;
        }
    }
    if count == 0 {
        return Array2::from_elem(map.raw_dim(), false);
    }
    // slack absorbs summation rounding when all positive values are equal
    let thr = sum / T::lit(count as f64) * T::lit(1.0 - 1e-9);
    map.mapv(|v| v > T::zero() && v >= thr)
}

pub const CENTER_BOX: usize = 10;
const MIN_BOX_FRACTION: f64 = 0.1;

/// Binary sign mask, `true` on sign pixels.
pub type SignMask = Array2<bool>;

/// Maps thresholded over the whole image, masked by the binarized
/// chromaticity map and scored inside the centered box. When no color map
/// fills 10% of the box, the inverted chromaticity mask is returned instead.
pub fn localize_sign<T: Scalar>(img: &Image<T>) -> Result<SignMask> {
    if img.channels() != 3 {
        return Err(Error::domain("sign localization needs a 3-channel image"));
    }
    let (h, w) = (img.height(), img.width());
    if h < CENTER_BOX || w < CENTER_BOX {
        return Err(Error::domain(format!(
            "image {h}x{w} is smaller than the {CENTER_BOX}x{CENTER_BOX} center box"
        )));
    }
    let maps = color_maps(&normalize_channels(img)?)?;
    let c = binarize_map(&maps.c);
    let (r0, c0) = ((h - CENTER_BOX) / 2, (w - CENTER_BOX) / 2);
    let mut best: Option<(usize, SignMask)> = None;
    for m in [&maps.r, &maps.g, &maps.b, &maps.y] {
        let mut masked = binarize_map(m);
        masked.zip_mut_with(&c, |a, &k| *a = *a && k);
        let score = (r0..r0 + CENTER_BOX)
            .flat_map(|i| (c0..c0 + CENTER_BOX).map(move |j| (i, j)))
            .filter(|&(i, j)| masked[[i, j]])
            .count();
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, masked));
        }
    }
    let (score, mask) = best.expect("four maps");
    if (score as f64) < MIN_BOX_FRACTION * (CENTER_BOX * CENTER_BOX) as f64 {
        return Ok(c.mapv(|v| !v));
    }
    Ok(mask)
}

/// Hue angles (degrees) of the three color centers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HueCenters {
    pub red: f64,
    pub yellow: f64,
    pub blue: f64,
}

impl Default for HueCenters {
    fn default() -> Self {
        Self {
            red: 0.0,
            yellow: 60.0,
            blue: 240.0,
        }
    }
}

impl HueCenters {
    pub fn new(red: f64, yellow: f64, blue: f64) -> Result<Self> {
        let all = [red, yellow, blue];
        if all.iter().any(|h| !(0.0..360.0).contains(h)) {
            return Err(Error::domain("hue centers must lie in [0, 360)"));
        }
        if red == yellow || red == blue || yellow == blue {
            return Err(Error::domain("hue centers must be pairwise distinct"));
        }
        Ok(Self { red, yellow, blue })
    }

    pub fn get(&self, c: ColorName) -> f64 {
        match c {
            ColorName::Red => self.red,
            ColorName::Yellow => self.yellow,
            ColorName::Blue => self.blue,
        }
    }
}

pub fn hue_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

pub const MIN_SATURATION: f64 = 0.05;

/// Hexagonal HSV hue in degrees and saturation; hue is `None` for gray.
pub fn hue_saturation(r: f64, g: f64, b: f64) -> (Option<f64>, f64) {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let chroma = max - min;
    let sat = if max > 0.0 { chroma / max } else { 0.0 };
    if chroma <= 0.0 {
        return (None, sat);
    }
    let h = if max == r {
        ((g - b) / chroma).rem_euclid(6.0)
    } else if max == g {
        (b - r) / chroma + 2.0
    } else {
        (r - g) / chroma + 4.0
    };
    (Some(60.0 * h), sat)
}

/// Weighted votes per color, in [`ColorName::ALL`] order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ColorVotes {
    pub red: f64,
    pub yellow: f64,
    pub blue: f64,
}

impl ColorVotes {
    pub fn get(&self, c: ColorName) -> f64 {
        match c {
            ColorName::Red => self.red,
            ColorName::Yellow => self.yellow,
            ColorName::Blue => self.blue,
        }
    }

    /// Largest total, ties toward red, then yellow.
    pub fn winner(&self) -> ColorName {
        let mut best = ColorName::Red;
        for c in ColorName::ALL {
            if self.get(c) > self.get(best) {
                best = c;
            }
        }
        best
    }
}

/// Each chromatic mask pixel votes for its nearest hue center with weight
/// `1 − d / 180`.
pub fn color_votes<T: Scalar>(img: &Image<T>, mask: &SignMask, centers: &HueCenters) -> Result<ColorVotes> {
    if img.channels() != 3 {
        return Err(Error::domain("color classification needs a 3-channel image"));
    }
    if mask.dim() != (img.height(), img.width()) {
        return Err(Error::shape(
            format!("{}x{} mask", img.height(), img.width()),
            mask.len(),
        ));
    }
    let mut votes = [0.0f64; 3];
    let mut voters = 0usize;
    for ((i, j), &on) in mask.indexed_iter() {
        if !on {
            continue;
        }
        let [r, g, b] = img.rgb(i, j);
        let (hue, sat) = hue_saturation(r.as_f64(), g.as_f64(), b.as_f64());
        let Some(h) = hue.filter(|_| sat >= MIN_SATURATION) else {
            continue;
        };
        let mut nearest = 0;
        let mut dist = f64::INFINITY;
        for (k, c) in ColorName::ALL.iter().enumerate() {
            let d = hue_distance(h, centers.get(*c));
            if d < dist {
                dist = d;
                nearest = k;
            }
        }
        votes[nearest] += 1.0 - dist / 180.0;
        voters += 1;
    }
    if voters == 0 {
        return Err(Error::NoChromaticPixels);
    }
    Ok(ColorVotes {
        red: votes[0],
        yellow: votes[1],
        blue: votes[2],
    })
}

pub fn classify_color<T: Scalar>(img: &Image<T>, mask: &SignMask, centers: &HueCenters) -> Result<ColorName> {
    Ok(color_votes(img, mask, centers)?.winner())
}

/// `classify_color ∘ localize_sign`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ColorExtractor {
    pub centers: HueCenters,
}

impl ColorExtractor {
    pub fn new(centers: HueCenters) -> Self {
        Self { centers }
    }

    pub fn extract<T: Scalar>(&self, img: &Image<T>) -> Result<ColorName> {
        Ok(self.extract_with_votes(img)?.0)
    }

    pub fn extract_with_votes<T: Scalar>(&self, img: &Image<T>) -> Result<(ColorName, ColorVotes)> {
        let mask = localize_sign(img)?;
        let votes = color_votes(img, &mask, &self.centers)?;
        Ok((votes.winner(), votes))
    }
}

/// Color → potential labels.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GroupLabelMap {
    groups: BTreeMap<ColorName, BTreeSet<usize>>,
}

impl GroupLabelMap {
    pub fn new(groups: BTreeMap<ColorName, BTreeSet<usize>>) -> Self {
        Self { groups }
    }

    /// Builds a map from class names, e.g. `red = ["stop", "doNotEnter"]`.
    pub fn from_names(table: &BTreeMap<String, Vec<String>>, class_names: &[&str]) -> Result<Self> {
        let mut groups = BTreeMap::new();
        for (color, names) in table {
            let c = ColorName::parse(color).ok_or_else(|| Error::domain(format!("unknown color `{color}`")))?;
            let mut set = BTreeSet::new();
            for n in names {
                let idx = class_names
                    .iter()
                    .position(|k| k == n)
                    .ok_or_else(|| Error::domain(format!("unknown class `{n}` in group `{color}`")))?;
                set.insert(idx);
            }
            groups.insert(c, set);
        }
        Ok(Self { groups })
    }

    /// Red: stop and doNotEnter; Blue: the eight mandatory, keep and
    /// traffic-circle classes; Yellow: the yellow superclass.
    pub fn default_signs() -> Self {
        use crate::data::synth::SIGN_CLASSES;
        let idx = |n: &str| SIGN_CLASSES.iter().position(|k| *k == n).expect("known class");
        let red: BTreeSet<usize> = ["stop", "doNotEnter"].iter().map(|n| idx(n)).collect();
        let yellow: BTreeSet<usize> = [idx("yellowSigns")].into_iter().collect();
        let blue: BTreeSet<usize> = (0..SIGN_CLASSES.len())
            .filter(|i| !red.contains(i) && !yellow.contains(i))
            .collect();
        Self::new(BTreeMap::from([
            (ColorName::Red, red),
            (ColorName::Yellow, yellow),
            (ColorName::Blue, blue),
        ]))
    }

    /// Configured labels; unmapped colors give the empty set.
    pub fn group_labels(&self, c: ColorName) -> BTreeSet<usize> {
        self.groups.get(&c).cloned().unwrap_or_default()
    }

    /// First color whose group contains `label`.
    pub fn color_of(&self, label: usize) -> Option<ColorName> {
        self.groups.iter().find(|(_, s)| s.contains(&label)).map(|(c, _)| *c)
    }

    pub fn groups(&self) -> &BTreeMap<ColorName, BTreeSet<usize>> {
        &self.groups
    }
}

/// Outcome of one shifted variant that did not reproduce the reference color.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftFailure {
    /// Offsets in units of ε per channel.
    pub shift: [i8; 3],
    pub color: Option<ColorName>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessVerdict {
    pub reference: ColorName,
    pub epsilon: f64,
    pub robust: bool,
    pub failures: Vec<ShiftFailure>,
}

/// The 26 non-zero shift patterns in `{−1, 0, 1}³`.
pub fn shift_patterns() -> Vec<[i8; 3]> {
    let mut out = Vec::with_capacity(26);
    for a in -1..=1 {
        for b in -1..=1 {
            for c in -1..=1 {
                if (a, b, c) != (0, 0, 0) {
                    out.push([a, b, c]);
                }
            }
        }
    }
    out
}

/// `img` with channel `k` shifted by `shift[k] · ε`, clamped to `[0, 1]`.
pub fn shifted<T: Scalar>(img: &Image<T>, shift: [i8; 3], epsilon: T) -> Result<Image<T>> {
    if img.channels() != 3 {
        return Err(Error::domain("channel shifts need a 3-channel image"));
    }
    let px = img
        .pixels()
        .chunks_exact(3)
        .flat_map(|p| (0..3).map(move |k| (p[k] + T::lit(shift[k] as f64) * epsilon).clamp_unit()))
        .collect();
    img.with_pixels(px)
}

/// Runs the extractor on every uniform per-channel shift by `{−ε, 0, +ε}`;
/// robust when all 26 variants reproduce the color of `img`.
pub fn verify_color_robustness<T: Scalar>(
    extractor: &ColorExtractor,
    img: &Image<T>,
    epsilon: T,
) -> Result<RobustnessVerdict> {
    if !(epsilon.is_finite() && epsilon >= T::zero() && epsilon <= T::one()) {
        return Err(Error::domain("ε must lie in [0, 1]"));
    }
    let reference = extractor.extract(img)?;
    let mut failures = Vec::new();
    for shift in shift_patterns() {
        let variant = shifted(img, shift, epsilon)?;
        match extractor.extract(&variant) {
            Ok(c) if c == reference => {}
            Ok(c) => failures.push(ShiftFailure {
                shift,
                color: Some(c),
                error: None,
            }),
            Err(e) => failures.push(ShiftFailure {
                shift,
                color: None,
                error: Some(e.to_string()),
            }),
        }
    }
    Ok(RobustnessVerdict {
        reference,
        epsilon: epsilon.as_f64(),
        robust: failures.is_empty(),
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synth::{synth_sign, SignShape, SignSpec};
    use ndarray::array;

    fn px(r: f64, g: f64, b: f64) -> Image<f64> {
        Image::new(1, 1, 3, vec![r, g, b]).unwrap()
    }

    #[test]
    fn normalization() {
        let n = normalize_channels(&px(0.2, 0.2, 0.2)).unwrap();
        for v in n.pixels() {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }
        assert_eq!(normalize_channels(&px(0.0, 0.0, 0.0)).unwrap().pixels(), &[0.0; 3]);
        assert!(normalize_channels(&Image::from_vec(vec![0.5]).unwrap()).is_err());
    }

    #[test]
    fn map_formulas() {
        let m = color_maps(&px(1.0, 0.0, 0.0)).unwrap();
        assert_eq!((m.c[[0, 0]], m.r[[0, 0]], m.g[[0, 0]], m.b[[0, 0]], m.y[[0, 0]]), (1.0, 1.0, -0.5, -0.5, 0.0));
        let t = 1.0 / 3.0;
        let m = color_maps(&px(t, t, t)).unwrap();
        assert_eq!(m.c[[0, 0]], 0.0);
        assert!(m.r[[0, 0]].abs() < 1e-15 && (m.y[[0, 0]] - 2.0 / 3.0).abs() < 1e-12);
        let m = color_maps(&px(0.5, 0.5, 0.0)).unwrap();
        assert_eq!((m.c[[0, 0]], m.r[[0, 0]], m.g[[0, 0]], m.b[[0, 0]], m.y[[0, 0]]), (0.5, 0.25, 0.25, -0.5, 0.5));
    }

    #[test]
    fn map_binarization() {
        assert_eq!(binarize_map(&array![[0.0, 0.2, 0.8]]), array![[false, false, true]]);
        assert_eq!(binarize_map(&array![[0.0, 0.0]]), array![[false, false]]);
        assert_eq!(binarize_map(&array![[-1.0, 0.4]]), array![[false, true]]);
    }

    #[test]
    fn hue_examples() {
        assert_eq!(hue_saturation(1.0, 0.0, 0.0).0, Some(0.0));
        assert_eq!(hue_saturation(1.0, 1.0, 0.0).0, Some(60.0));
        assert_eq!(hue_saturation(0.0, 0.0, 1.0).0, Some(240.0));
        assert_eq!(hue_saturation(0.5, 0.5, 0.5).0, None);
        assert_eq!(hue_distance(350.0, 0.0), 10.0);
        assert_eq!(hue_distance(350.0, 240.0), 110.0);
    }

    fn solid(colors: &[[f64; 3]]) -> (Image<f64>, SignMask) {
        let px: Vec<f64> = colors.iter().flatten().copied().collect();
        let img = Image::new(1, colors.len(), 3, px).unwrap();
        (img, Array2::from_elem((1, colors.len()), true))
    }

    #[test]
    fn voting() {
        let c = HueCenters::default();
        let (img, mask) = solid(&[[1.0, 0.0, 0.0]; 4]);
        let v = color_votes(&img, &mask, &c).unwrap();
        assert_eq!((v.red, v.winner()), (4.0, ColorName::Red));
        // hue 350°: r = 1, g = 0, b = 1/6
        let (img, mask) = solid(&[[1.0, 0.0, 1.0 / 6.0]]);
        assert_eq!(classify_color(&img, &mask, &c).unwrap(), ColorName::Red);
        let mut cols = vec![[1.0, 0.0, 0.0]; 60];
        cols.extend(vec![[0.0, 0.0, 1.0]; 40]);
        let (img, mask) = solid(&cols);
        assert_eq!(classify_color(&img, &mask, &c).unwrap(), ColorName::Red);
        let (img, mask) = solid(&[[0.5, 0.5, 0.5]; 3]);
        assert!(matches!(classify_color(&img, &mask, &c), Err(Error::NoChromaticPixels)));
        // one red and one blue pixel at full weight tie toward red
        let (img, mask) = solid(&[[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]);
        assert_eq!(classify_color(&img, &mask, &c).unwrap(), ColorName::Red);
    }

    #[test]
    fn gray_falls_back_to_all_ones() {
        let img = Image::filled(20, 20, 3, 0.5).unwrap();
        let m = localize_sign(&img).unwrap();
        assert!(m.iter().all(|&v| v));
        assert!(localize_sign(&Image::filled(8, 30, 3, 0.5).unwrap()).is_err());
    }

    #[test]
    fn blue_circle_uses_blue_map() {
        let s = synth_sign::<f64>(&SignSpec::new(SignShape::Circle, [0.08, 0.2, 0.8], [0.5, 0.5, 0.5], 32)).unwrap();
        let maps = color_maps(&normalize_channels(&s.image).unwrap()).unwrap();
        let c = binarize_map(&maps.c);
        let mut b = binarize_map(&maps.b);
        b.zip_mut_with(&c, |a, &k| *a = *a && k);
        assert_eq!(localize_sign(&s.image).unwrap(), b);
        assert_eq!(ColorExtractor::default().extract(&s.image).unwrap(), ColorName::Blue);
    }

    #[test]
    fn group_map() {
        let g = GroupLabelMap::default_signs();
        assert_eq!(g.group_labels(ColorName::Red), BTreeSet::from([0, 1]));
        assert_eq!(g.group_labels(ColorName::Blue).len(), 8);
        assert_eq!(g.color_of(10), Some(ColorName::Yellow));
        let partial = GroupLabelMap::new(BTreeMap::from([(ColorName::Red, BTreeSet::from([0]))]));
        assert!(partial.group_labels(ColorName::Blue).is_empty());
        let table = BTreeMap::from([("red".to_string(), vec!["b".to_string()])]);
        let m = GroupLabelMap::from_names(&table, &["a", "b"]).unwrap();
        assert_eq!(m.group_labels(ColorName::Red), BTreeSet::from([1]));
        assert!(GroupLabelMap::from_names(&table, &["a"]).is_err());
    }

    #[test]
    fn shifts() {
        assert_eq!(shift_patterns().len(), 26);
        let img = px(0.95, 0.5, 0.02);
        let s = shifted(&img, [1, 0, -1], 0.1).unwrap();
        assert_eq!(s.pixels(), &[1.0, 0.5, 0.0]);
    }

    #[test]
    fn zero_budget_is_robust() {
        let s = synth_sign::<f64>(&SignSpec::new(SignShape::Octagon, [0.85, 0.08, 0.08], [0.5, 0.5, 0.5], 32)).unwrap();
        let v = verify_color_robustness(&ColorExtractor::default(), &s.image, 0.0).unwrap();
        assert!(v.robust && v.reference == ColorName::Red);
    }

    #[test]
    fn dull_red_flips_under_large_shift() {
        let s = synth_sign::<f64>(&SignSpec::new(SignShape::Octagon, [0.5, 0.4, 0.4], [0.45, 0.45, 0.45], 32)).unwrap();
        let e = ColorExtractor::default();
        assert_eq!(e.extract(&s.image).unwrap(), ColorName::Red);
        let v = verify_color_robustness(&e, &s.image, 0.3).unwrap();
        assert!(!v.robust);
        // lowering red while raising blue turns the sign blue
        assert!(v.failures.iter().any(|f| f.shift == [-1, 0, 1]));
    }
}
