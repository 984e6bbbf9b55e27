//! Scalar root and extremum finders used by the spectrum locator.

/// Safeguarded Newton iteration inside a sign-changing bracket; falls back to
/// bisection whenever the Newton step leaves the bracket or stalls.
pub fn newton_bracketed<F, D, E>(
    mut f: F,
    mut df: D,
    mut a: f64,
    mut b: f64,
    xtol: f64,
    max_iter: usize,
) -> Result<f64, E>
where
    F: FnMut(f64) -> Result<f64, E>,
    D: FnMut(f64) -> Result<f64, E>,
{
    let mut fa = f(a)?;
    let fb = f(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    debug_assert!(fa * fb < 0.0, "bracket does not change sign");
    // secant start
    let mut x = a - fa * (b - a) / (fb - fa);
    if !(x > a && x < b) {
        x = 0.5 * (a + b);
    }
    for _ in 0..max_iter {
        let fx = f(x)?;
        if fx == 0.0 {
            return Ok(x);
        }
        if fx * fa < 0.0 {
            b = x;
        } else {
            a = x;
            fa = fx;
        }
        let slope = df(x)?;
        let newton = x - fx / slope;
        let next = if slope != 0.0 && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
        let step = (next - x).abs();
        x = next;
        if step <= xtol || (b - a) <= xtol {
            return Ok(x);
        }
    }
    Ok(x)
}

/// Illinois regula falsi for a sign-changing bracket.
pub fn illinois<F, E>(mut f: F, mut a: f64, mut b: f64, xtol: f64, max_iter: usize) -> Result<f64, E>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    let mut side = 0i8;
    for _ in 0..max_iter {
        let x = (a * fb - b * fa) / (fb - fa);
        let x = if x.is_finite() && x > a.min(b) && x < a.max(b) {
            x
        } else {
            0.5 * (a + b)
        };
        let fx = f(x)?;
        if fx == 0.0 {
            return Ok(x);
        }
        if fx * fb < 0.0 {
            a = b;
            fa = fb;
            b = x;
            fb = fx;
            side = 0;
        } else {
            b = x;
            fb = fx;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
        if (b - a).abs() <= xtol {
            break;
        }
    }
    Ok(0.5 * (a + b))
}

/// Golden-section search for the maximum of a unimodal function on `[a, b]`.
pub fn golden_max<F, E>(mut f: F, mut a: f64, mut b: f64, xtol: f64) -> Result<f64, E>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a) > xtol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    Ok(0.5 * (a + b))
}
