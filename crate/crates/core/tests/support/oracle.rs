//! Brute-force reference booster: exhaustive split search written directly
//! from the objective, with no sampling.

pub struct Params {
    pub depth: usize,
    pub alpha: f64,
    pub lambda: f64,
    pub mcw: f64,
    pub gamma: f64,
}

fn soft(g: f64, a: f64) -> f64 {
    if g > a {
        g - a
    } else if g < -a {
        g + a
    } else {
        0.0
    }
}

fn sum(rows: &[usize], grad: &[f64]) -> f64 {
    rows.iter().map(|&i| grad[i]).sum()
}

fn score(g: f64, h: f64, p: &Params) -> f64 {
    let t = soft(g, p.alpha);
    t * t / (h + p.lambda)
}

/// Assign a leaf weight to every row of `rows`, splitting exhaustively.
fn build(x: &[Vec<f64>], grad: &[f64], rows: Vec<usize>, p: &Params, depth: usize, out: &mut [f64]) {
    let g = sum(&rows, grad);
    let h = rows.len() as f64;
    let mut best: Option<(f64, Vec<usize>, Vec<usize>)> = None;
    if depth < p.depth {
        for f in 0..x[0].len() {
            let mut values: Vec<f64> = rows.iter().map(|&i| x[i][f]).collect();
            values.sort_by(f64::total_cmp);
            values.dedup();
            // every distinct value above the minimum is a cut "x < v"
            for &v in values.iter().skip(1) {
                let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| x[i][f] < v);
                let (hl, hr) = (l.len() as f64, r.len() as f64);
                if hl < p.mcw || hr < p.mcw {
                    continue;
                }
                let gain = 0.5
                    * (score(sum(&l, grad), hl, p) + score(sum(&r, grad), hr, p) - score(g, h, p))
                    - p.gamma;
                let better = match &best {
                    None => gain > 0.0,
                    // strictly better by more than rounding noise
                    Some((b, _, _)) => gain > b + 1e-9 * b.abs(),
                };
                if better {
                    best = Some((gain, l, r));
                }
            }
        }
    }
    match best {
        Some((_, l, r)) => {
            build(x, grad, l, p, depth + 1, out);
            build(x, grad, r, p, depth + 1, out);
        }
        None => {
            let w = -soft(g, p.alpha) / (h + p.lambda);
            for i in rows {
                out[i] = w;
            }
        }
    }
}

pub fn oracle_fit_predict(x: &[Vec<f64>], y: &[f64], trees: usize, lr: f64, p: &Params) -> Vec<f64> {
    let n = y.len();
    let base = y.iter().sum::<f64>() / n as f64;
    let mut pred = vec![base; n];
    for _ in 0..trees {
        let grad: Vec<f64> = pred.iter().zip(y).map(|(p, t)| p - t).collect();
        let mut w = vec![0.0; n];
        build(x, &grad, (0..n).collect(), p, 0, &mut w);
        for (p, wi) in pred.iter_mut().zip(&w) {
            *p += lr * wi;
        }
    }
    pred
}

pub fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}
