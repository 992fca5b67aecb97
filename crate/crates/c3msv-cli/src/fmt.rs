//! Deterministic number formatting and output rendering. Floats are printed
//! with printf's %.Ng semantics so identical configurations always produce
//! byte-identical output.

use num_complex::Complex64;
use std::io::Write;

/// %.12g: twelve significant digits, positional or scientific as printf
/// would choose, trailing zeros stripped. Negative zero prints as "0".
pub fn g12(x: f64) -> String {
    g_sig(x, 12)
}

/// %.6g, used for sudden-death thresholds.
pub fn g6(x: f64) -> String {
    g_sig(x, 6)
}

fn g_sig(x: f64, sig: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".to_string()
        } else if x > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        };
    }
    let sci = format!("{:.*e}", sig - 1, x);
    let (mant, exp) = sci.split_once('e').expect("float in scientific form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= sig as i32 {
        format!(
            "{}e{}{:02}",
            trim_zeros(mant),
            if exp < 0 { '-' } else { '+' },
            exp.abs()
        )
    } else {
        let neg = mant.starts_with('-');
        let digits: String = mant.chars().filter(|c| c.is_ascii_digit()).collect();
        let point = exp + 1;
        let mut s = String::new();
        if neg {
            s.push('-');
        }
        if point <= 0 {
            s.push_str("0.");
            for _ in 0..(-point) {
                s.push('0');
            }
            s.push_str(&digits);
        } else if point as usize >= digits.len() {
            s.push_str(&digits);
            for _ in 0..(point as usize - digits.len()) {
                s.push('0');
            }
        } else {
            s.push_str(&digits[..point as usize]);
            s.push('.');
            s.push_str(&digits[point as usize..]);
        }
        trim_zeros(&s)
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Complex value as a compact scalar string. Values whose imaginary part is
/// negligible against the real part print as plain reals.
pub fn complex_str(z: Complex64) -> String {
    if z.im == 0.0 || z.im.abs() <= 1e-12 * (1.0 + z.re.abs()) {
        return g12(z.re);
    }
    if z.im < 0.0 {
        format!("{}-{}i", g12(z.re), g12(-z.im))
    } else {
        format!("{}+{}i", g12(z.re), g12(z.im))
    }
}

/// One table cell. Rendering differs between CSV and JSON only where the
/// target syntax demands it.
#[derive(Debug, Clone)]
pub enum Cell {
    Str(String),
    Num(f64),
    /// Six-significant-digit float (threshold columns).
    Num6(f64),
    Int(i64),
    Cpx(Complex64),
}

impl Cell {
    pub fn csv(&self) -> String {
        match self {
            Cell::Str(s) => s.clone(),
            Cell::Num(v) => g12(*v),
            Cell::Num6(v) => g6(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Cpx(z) => complex_str(*z),
        }
    }

    pub fn json(&self) -> JVal {
        match self {
            Cell::Str(s) => JVal::Str(s.clone()),
            Cell::Num(v) => JVal::num(*v),
            Cell::Num6(v) => {
                if v.is_finite() {
                    JVal::Raw(g6(*v))
                } else {
                    JVal::Null
                }
            }
            Cell::Int(v) => JVal::Raw(v.to_string()),
            Cell::Cpx(z) => JVal::Obj(vec![
                ("re".into(), JVal::num(z.re)),
                ("im".into(), JVal::num(z.im)),
            ]),
        }
    }
}

pub struct Table {
    pub headers: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(headers: Vec<&'static str>) -> Self {
        Table {
            headers,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }
}

/// Minimal JSON value. Raw carries a preformatted number literal so float
/// formatting stays under our control.
#[derive(Debug, Clone)]
pub enum JVal {
    Str(String),
    Raw(String),
    Bool(bool),
    Null,
    Obj(Vec<(String, JVal)>),
    Arr(Vec<JVal>),
}

impl JVal {
    pub fn num(v: f64) -> JVal {
        if v.is_finite() {
            JVal::Raw(g12(v))
        } else {
            JVal::Null
        }
    }

    pub fn int(v: i64) -> JVal {
        JVal::Raw(v.to_string())
    }

    fn write(&self, out: &mut String) {
        match self {
            JVal::Str(s) => {
                out.push('"');
                escape_into(s, out);
                out.push('"');
            }
            JVal::Raw(s) => out.push_str(s),
            JVal::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            JVal::Null => out.push_str("null"),
            JVal::Obj(pairs) => {
                out.push('{');
                for (i, (k, v)) in pairs.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push('"');
                    escape_into(k, out);
                    out.push_str("\":");
                    v.write(out);
                }
                out.push('}');
            }
            JVal::Arr(items) => {
                out.push('[');
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    v.write(out);
                }
                out.push(']');
            }
        }
    }
}

fn escape_into(s: &str, out: &mut String) {
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
}

pub fn table_to_csv(t: &Table) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&t.headers).expect("csv header");
    for row in &t.rows {
        let cells: Vec<String> = row.iter().map(Cell::csv).collect();
        w.write_record(&cells).expect("csv row");
    }
    String::from_utf8(w.into_inner().expect("csv flush")).expect("csv utf8")
}

/// Full JSON document: meta object, rows array (one object per line), and
/// an optional trailing status record describing a partial run.
pub fn table_to_json(meta: JVal, t: &Table, status: Option<JVal>) -> String {
    let mut out = String::new();
    out.push_str("{\"meta\":");
    meta.write(&mut out);
    out.push_str(",\"rows\":[");
    for (i, row) in t.rows.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push('\n');
        let obj = JVal::Obj(
            t.headers
                .iter()
                .zip(row.iter())
                .map(|(h, c)| (h.to_string(), c.json()))
                .collect(),
        );
        obj.write(&mut out);
    }
    out.push_str("\n]");
    if let Some(st) = status {
        out.push_str(",\"status\":");
        st.write(&mut out);
    }
    out.push_str("}\n");
    out
}

pub fn write_output(path: Option<&std::path::Path>, text: &str) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(text.as_bytes())?;
            so.flush()
        }
    }
}
