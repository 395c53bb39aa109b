//! Plain-text formatting helpers shared by the table renderers.

/// `$1,234` (whole dollars) or `$1,234.56` when `cents` is set.
pub fn usd(amount: f64, cents: bool) -> String {
    let negative = amount < 0.0;
    let scaled = if cents {
        (amount.abs() * 100.0).round() as u128
    } else {
        amount.abs().round() as u128
    };
    let (whole, frac) = if cents {
        (scaled / 100, Some(scaled % 100))
    } else {
        (scaled, None)
    };
    let digits = whole.to_string();
    let mut grouped = String::with_capacity(digits.len() + digits.len() / 3);
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            grouped.push(',');
        }
        grouped.push(ch);
    }
    let sign = if negative && scaled > 0 { "-" } else { "" };
    match frac {
        Some(c) => format!("{sign}${grouped}.{c:02}"),
        None => format!("{sign}${grouped}"),
    }
}

/// Left-aligned first column, right-aligned remainder.
pub fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let mut out = String::new();
        for (i, cell) in cells.iter().enumerate().take(cols) {
            if i > 0 {
                out.push_str("  ");
            }
            let pad = widths[i] - cell.chars().count();
            if i == 0 {
                out.push_str(cell);
                out.push_str(&" ".repeat(pad));
            } else {
                out.push_str(&" ".repeat(pad));
                out.push_str(cell);
            }
        }
        out.trim_end().to_string()
    };
    let mut out = line(header.to_vec());
    out.push('\n');
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (cols - 1)));
    out.push('\n');
    for row in rows {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
        out.push('\n');
    }
    out
}
