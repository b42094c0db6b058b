//! Walkthrough of digit recovery through a diagonal channel over `Z_8`.

use std::fmt::Write;

use mmc_core::linalg::{column_level, diagonal_extract, format_matrix, shape_of};
use mmc_core::{ChainRing, RingElem, RingMatrix, SShape};

use crate::CliError;

/// Renders the walkthrough; fails if the extracted digits contradict `Y`.
pub fn render() -> Result<String, CliError> {
    let ring = ChainRing::integers_mod(2, 3)?;
    let s = ring.s();
    let lambda = SShape::new(vec![1, 2, 2])?;
    let a = RingMatrix::diagonal(&ring, 4, 4, &[RingElem(1), RingElem(2), RingElem(2), RingElem(4)])?;
    let y = RingMatrix::from_rows(&ring, &[vec![7, 2], vec![4, 4], vec![6, 0], vec![4, 0]])?;
    let rho = shape_of(&a);
    let levels = diagonal_extract(&a, &y, &lambda)?;
    let valuations: Vec<usize> = (0..a.rows()).map(|r| ring.valuation(a.get(r, r))).collect();

    let mut out = String::new();
    let w = &mut out;
    writeln!(w, "Channel Y = A X over Z_8 (q = 2, s = 3), n = m = 4, lambda = ({lambda})").unwrap();
    writeln!(w, "A = diag(1, 2, 2, 4), shape(A) = ({rho})").unwrap();
    writeln!(w, "Y =").unwrap();
    for line in format_matrix(&y).lines().skip(1) {
        writeln!(w, "  {line}").unwrap();
    }
    let weights: Vec<u64> = (0..s).rev().map(|i| ring.q().pow(i as u32)).collect();
    for c in 0..y.cols() {
        writeln!(w).unwrap();
        writeln!(w, "column {}:", c + 1).unwrap();
        for r in 0..y.rows() {
            let v = valuations[r];
            let terms: Vec<String> = (0..s)
                .rev()
                .zip(&weights)
                .map(|(i, weight)| {
                    let cell = if column_level(&lambda, c) > i {
                        " 0 ".to_string()
                    } else if i + v >= s {
                        " ? ".to_string()
                    } else {
                        format!("[{}]", levels[i].get(r, c).0)
                    };
                    format!("{cell}*{weight}")
                })
                .collect();
            writeln!(
                w,
                "  {} * x{}{} = {}  =>  x{}{} = {}",
                a.get(r, r).0,
                r + 1,
                c + 1,
                y.get(r, c).0,
                r + 1,
                c + 1,
                terms.join(" + ")
            )
            .unwrap();
        }
    }
    writeln!(w).unwrap();
    writeln!(w, "[d] recovered digit, ? hidden by shape(A), bare 0 forced by lambda").unwrap();
    writeln!(w).unwrap();
    let mut counts = Vec::with_capacity(s);
    for (i, level) in levels.iter().enumerate() {
        let count = level.rows() * level.cols();
        writeln!(
            w,
            "level {i}: rho_{} = {} rows x lambda_{i} = {} columns = {count} digits",
            s - i - 1,
            level.rows(),
            level.cols()
        )
        .unwrap();
        counts.push(count);
    }
    let total: usize = counts.iter().sum();
    if total != rho.reversed_dot(&lambda)? {
        return Err(CliError::Verification("digit count disagrees with the shape formula".into()));
    }
    let parts: Vec<String> = counts.iter().map(usize::to_string).collect();
    writeln!(w, "total: {} = {total} bits", parts.join(" + ")).unwrap();
    Ok(out)
}
