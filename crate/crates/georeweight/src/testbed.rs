//! Test integrands with independent reference values: the fixed
//! eight-branch 1D function, nearest-neighbor image functions loaded
//! from NetPBM PGM files, and synthetic 2D functions with analytic
//! integrals.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::estimators::Integrand;

/// The eight-branch 1D test function, scaled by 10. Branch boundaries
/// use the left-closed/right-open convention.
pub fn eval_test_function_1d(x: f64) -> f64 {
    assert!(x > 0.0 && x < 1.0, "argument {x} outside (0,1)");
    let inner = if x < 0.25 {
        (-x * x + 0.5 * x).sqrt()
    } else if x < 0.5 {
        -(-x * x + x - 0.1875).max(0.0).sqrt() + 0.25
    } else if x < 0.55 {
        20.0 * (x - 0.5)
    } else if x < 0.65 {
        1.0
    } else if x < 0.7 {
        -20.0 * (x - 0.7)
    } else if x < 0.8 {
        0.1 * (10.0 * PI * (x - 0.7)).sin()
    } else if x < 0.9 {
        0.25 * (10.0 * PI * (x - 0.8)).sin()
    } else {
        0.5 * (10.0 * PI * (x - 0.9)).sin()
    };
    10.0 * inner
}

/// Exact integral of [`eval_test_function_1d`] over (0,1).
///
/// The two circular branches are quarter circles of radius 1/4 whose
/// areas cancel, leaving 10 * 1/16. The ramp/plateau block contributes
/// 10 * (0.025 + 0.1 + 0.025), and each sine half-period contributes
/// amplitude * 2/(10 pi), summing to 10 * 0.85 / (5 pi) = 1.7 / pi.
pub fn reference_integral_test1d() -> f64 {
    2.125 + 1.7 / PI
}

/// The fixed 1D test function as an integrand.
#[derive(Debug, Clone, Copy, Default)]
pub struct Piecewise1DFunction;

impl Integrand for Piecewise1DFunction {
    fn dimension(&self) -> usize {
        1
    }

    fn evaluate(&self, point: &[f64]) -> f64 {
        eval_test_function_1d(point[0])
    }

    fn reference_integral(&self) -> Option<f64> {
        Some(reference_integral_test1d())
    }
}

/// Synthetic 2D integrands with analytic ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Synthetic2DFunction {
    /// f(x, y) = x * y, integral 1/4.
    Product,
    /// f == c.
    Constant(f64),
}

impl Integrand for Synthetic2DFunction {
    fn dimension(&self) -> usize {
        2
    }

    fn evaluate(&self, point: &[f64]) -> f64 {
        match self {
            Synthetic2DFunction::Product => point[0] * point[1],
            Synthetic2DFunction::Constant(c) => *c,
        }
    }

    fn reference_integral(&self) -> Option<f64> {
        Some(match self {
            Synthetic2DFunction::Product => 0.25,
            Synthetic2DFunction::Constant(c) => *c,
        })
    }
}

#[derive(Debug, Error)]
pub enum PgmError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad magic number, expected P2 or P5")]
    BadMagic,
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("image dimensions must be positive")]
    ZeroDimensions,
    #[error("maxval {0} out of range 1..=65535")]
    BadMaxval(u32),
    #[error("truncated or malformed pixel payload")]
    TruncatedPayload,
}

/// Grayscale image as a piecewise-constant function on the unit square,
/// nearest-neighbor lookup, row 0 at the top (y = 1).
#[derive(Debug, Clone, PartialEq)]
pub struct ImageFunction2D {
    pub width: usize,
    pub height: usize,
    /// Row-major normalized pixel values in [0, 1].
    pub pixels: Vec<f64>,
}

impl ImageFunction2D {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Self {
        assert!(width > 0 && height > 0);
        assert_eq!(pixels.len(), width * height);
        assert!(pixels.iter().all(|&v| (0.0..=1.0).contains(&v)));
        Self { width, height, pixels }
    }

    /// Arithmetic mean of all pixels; exact integral of the
    /// nearest-neighbor interpretation.
    pub fn pixel_mean(&self) -> f64 {
        self.pixels.iter().sum::<f64>() / self.pixels.len() as f64
    }
}

impl Integrand for ImageFunction2D {
    fn dimension(&self) -> usize {
        2
    }

    fn evaluate(&self, point: &[f64]) -> f64 {
        let c = ((point[0] * self.width as f64) as usize).min(self.width - 1);
        let r = (((1.0 - point[1]) * self.height as f64) as usize).min(self.height - 1);
        self.pixels[r * self.width + c]
    }

    fn reference_integral(&self) -> Option<f64> {
        Some(self.pixel_mean())
    }
}

/// Pull the next whitespace-delimited ASCII token, skipping `#` comments.
fn next_token(bytes: &[u8], pos: &mut usize) -> Option<Vec<u8>> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    if *pos >= bytes.len() {
        return None;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    Some(bytes[start..*pos].to_vec())
}

fn parse_header_number(bytes: &[u8], pos: &mut usize, what: &str) -> Result<u32, PgmError> {
    let tok = next_token(bytes, pos)
        .ok_or_else(|| PgmError::MalformedHeader(format!("missing {what}")))?;
    std::str::from_utf8(&tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| PgmError::MalformedHeader(format!("invalid {what}")))
}

/// Parse a NetPBM grayscale image, magic P2 (ASCII) or P5 (binary),
/// maxval up to 65535, `#` comments allowed in the header.
pub fn parse_pgm(bytes: &[u8]) -> Result<ImageFunction2D, PgmError> {
    let mut pos = 0usize;
    let magic = next_token(bytes, &mut pos).ok_or(PgmError::BadMagic)?;
    let binary = match magic.as_slice() {
        b"P2" => false,
        b"P5" => true,
        _ => return Err(PgmError::BadMagic),
    };
    let width = parse_header_number(bytes, &mut pos, "width")? as usize;
    let height = parse_header_number(bytes, &mut pos, "height")? as usize;
    if width == 0 || height == 0 {
        return Err(PgmError::ZeroDimensions);
    }
    let maxval = parse_header_number(bytes, &mut pos, "maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(PgmError::BadMaxval(maxval));
    }
    let count = width * height;
    let mut pixels = Vec::with_capacity(count);
    if binary {
        // exactly one whitespace byte separates the header from the payload
        if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
            return Err(PgmError::TruncatedPayload);
        }
        pos += 1;
        let wide = maxval > 255;
        let needed = count * if wide { 2 } else { 1 };
        let payload = bytes.get(pos..pos + needed).ok_or(PgmError::TruncatedPayload)?;
        if wide {
            for chunk in payload.chunks_exact(2) {
                let v = u16::from_be_bytes([chunk[0], chunk[1]]) as u32;
                if v > maxval {
                    return Err(PgmError::TruncatedPayload);
                }
                pixels.push(v as f64 / maxval as f64);
            }
        } else {
            for &b in payload {
                if b as u32 > maxval {
                    return Err(PgmError::TruncatedPayload);
                }
                pixels.push(b as f64 / maxval as f64);
            }
        }
    } else {
        for _ in 0..count {
            let v = parse_header_number(bytes, &mut pos, "pixel")
                .map_err(|_| PgmError::TruncatedPayload)?;
            if v > maxval {
                return Err(PgmError::TruncatedPayload);
            }
            pixels.push(v as f64 / maxval as f64);
        }
    }
    Ok(ImageFunction2D::new(width, height, pixels))
}

pub fn load_pgm(path: &Path) -> Result<ImageFunction2D, PgmError> {
    parse_pgm(&fs::read(path)?)
}

/// Serialize an image back to ASCII P2 (maxval 255).
pub fn write_pgm_p2(image: &ImageFunction2D) -> String {
    let mut out = format!("P2\n{} {}\n255\n", image.width, image.height);
    for row in image.pixels.chunks(image.width) {
        let line: Vec<String> = row
            .iter()
            .map(|v| format!("{}", (v * 255.0).round() as u32))
            .collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn branch_examples() {
        assert_eq!(eval_test_function_1d(0.6), 10.0);
        assert!((eval_test_function_1d(0.525) - 5.0).abs() < 1e-12);
        assert!((eval_test_function_1d(0.125) - 2.1650635094610964).abs() < 1e-12);
    }

    #[test]
    fn branch_boundaries_left_closed() {
        // the function is continuous, so both conventions agree at the
        // shared endpoints; spot-check a few
        assert!((eval_test_function_1d(0.25) - 2.5).abs() < 1e-9);
        assert!((eval_test_function_1d(0.55) - 10.0).abs() < 1e-12);
        assert!((eval_test_function_1d(0.7) - 0.0).abs() < 1e-12);
    }

    #[test]
    #[should_panic]
    fn rejects_out_of_domain() {
        eval_test_function_1d(1.0);
    }

    #[test]
    fn reference_value_and_bounds() {
        let v = reference_integral_test1d();
        assert!((v - 2.666126806512444).abs() < 1e-15);
        assert!(v > 0.0 && v < 10.0);
    }

    #[test]
    fn first_two_branches_partial_integral() {
        // trapezoid oracle over (0, 0.5): circle-segment areas cancel,
        // exact value 10 * 0.0625
        let m = 2_000_000usize;
        let h = 0.5 / m as f64;
        let mut sum = 0.0;
        for i in 1..m {
            sum += eval_test_function_1d(i as f64 * h);
        }
        sum += eval_test_function_1d(1e-12) / 2.0 + eval_test_function_1d(0.5 - 1e-12) / 2.0;
        let integral = sum * h;
        assert!((integral - 0.625).abs() < 1e-4, "{integral}");
    }

    #[test]
    fn function_bounded() {
        let mut rng = crate::sampling::SplitMix64::new(crate::sampling::Seed(9));
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for _ in 0..1_000_000 {
            let v = eval_test_function_1d(rng.next_open01());
            lo = lo.min(v);
            hi = hi.max(v);
        }
        assert!(lo >= 0.0 && hi <= 10.0, "observed range [{lo}, {hi}]");
    }

    #[test]
    fn synthetic_references() {
        assert_eq!(Synthetic2DFunction::Product.reference_integral(), Some(0.25));
        assert_eq!(
            Synthetic2DFunction::Product.evaluate(&[0.5, 0.5]),
            0.25
        );
        assert_eq!(Synthetic2DFunction::Constant(3.0).reference_integral(), Some(3.0));
    }

    #[test]
    fn pgm_2x2_checker() {
        let img = parse_pgm(b"P2\n# checker\n2 2\n255\n0 255\n255 0\n").unwrap();
        assert_eq!(img.evaluate(&[0.25, 0.75]), 0.0);
        assert_eq!(img.evaluate(&[0.75, 0.75]), 1.0);
        assert_eq!(img.evaluate(&[0.25, 0.25]), 1.0);
        assert_eq!(img.reference_integral(), Some(0.5));
    }

    #[test]
    fn pgm_1x1_constant() {
        let img = parse_pgm(b"P2 1 1 200\n100\n").unwrap();
        assert_eq!(img.evaluate(&[0.9, 0.1]), 0.5);
        assert_eq!(img.reference_integral(), Some(0.5));
    }

    #[test]
    fn pgm_p5_matches_p2() {
        let p2 = parse_pgm(b"P2\n3 2\n255\n0 10 20\n30 40 50\n").unwrap();
        let mut p5: Vec<u8> = b"P5\n3 2\n255\n".to_vec();
        p5.extend_from_slice(&[0, 10, 20, 30, 40, 50]);
        assert_eq!(parse_pgm(&p5).unwrap(), p2);
    }

    #[test]
    fn pgm_16bit_big_endian() {
        let mut p5: Vec<u8> = b"P5\n1 1\n65535\n".to_vec();
        p5.extend_from_slice(&0x8000u16.to_be_bytes());
        let img = parse_pgm(&p5).unwrap();
        assert!((img.pixels[0] - 32768.0 / 65535.0).abs() < 1e-15);
    }

    #[test]
    fn pgm_errors() {
        assert!(matches!(parse_pgm(b"P6\n1 1\n255\n"), Err(PgmError::BadMagic)));
        assert!(matches!(parse_pgm(b"P2\n0 2\n255\n"), Err(PgmError::ZeroDimensions)));
        assert!(matches!(
            parse_pgm(b"P2\n2 2\n255\n1 2 3\n"),
            Err(PgmError::TruncatedPayload)
        ));
        assert!(matches!(
            parse_pgm(b"P5\n2 2\n255\nab"),
            Err(PgmError::TruncatedPayload)
        ));
        assert!(matches!(parse_pgm(b"P2\n2 2\n70000\n"), Err(PgmError::BadMaxval(70000))));
    }

    #[test]
    fn pgm_round_trip() {
        let img = ImageFunction2D::new(4, 3, (0..12).map(|i| i as f64 / 255.0).collect());
        let back = parse_pgm(write_pgm_p2(&img).as_bytes()).unwrap();
        for (a, b) in img.pixels.iter().zip(&back.pixels) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
