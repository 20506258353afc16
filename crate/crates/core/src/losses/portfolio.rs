use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, LogNormal};

use super::{Loss, LossFunction, LossSequence, Problem};
use crate::error::check_dim;
use crate::{ConstraintSet, Error, Point, Result};

/// Log-wealth loss `f(x) = −log(rᵀx)`.
///
/// In the shifted form the argument is `y ∈ Δ'_n` and the portfolio is
/// recovered as `x = (y + 1) / 2n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioLoss {
    ratio: Point,
    shifted: bool,
}

impl PortfolioLoss {
    /// Loss on portfolio weights directly.
    pub fn new(ratio: Point) -> Result<Self> {
        if ratio.is_empty() || ratio.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
            return Err(Error::PriceData("price ratios must be positive and finite".into()));
        }
        Ok(Self { ratio, shifted: false })
    }

    /// Loss viewed as a function of `y = 2n·x − 1`.
    pub fn shifted(ratio: Point) -> Result<Self> {
        Ok(Self {
            shifted: true,
            ..Self::new(ratio)?
        })
    }

    pub fn ratio(&self) -> &Point {
        &self.ratio
    }

    pub fn is_shifted(&self) -> bool {
        self.shifted
    }

    /// Portfolio weights for an argument of this loss.
    pub fn weights(&self, y: &Point) -> Point {
        if self.shifted {
            let n = self.ratio.len() as f64;
            y.map(|v| (v + 1.0) / (2.0 * n))
        } else {
            y.clone()
        }
    }

    fn wealth(&self, y: &Point) -> Result<f64> {
        check_dim(self.ratio.len(), y.len())?;
        let growth = self.ratio.dot(&self.weights(y));
        if growth > 0.0 {
            Ok(growth)
        } else {
            Err(Error::Domain(format!("rᵀx = {growth} is not positive")))
        }
    }
}

impl LossFunction for PortfolioLoss {
    fn dim(&self) -> usize {
        self.ratio.len()
    }

    fn eval(&self, y: &Point) -> Result<f64> {
        Ok(-self.wealth(y)?.ln())
    }

    fn grad(&self, y: &Point) -> Result<Point> {
        let growth = self.wealth(y)?;
        let scale = if self.shifted {
            2.0 * self.ratio.len() as f64
        } else {
            1.0
        };
        Ok(-&self.ratio / (growth * scale))
    }
}

/// Synthetic market with `log r ~ N(0, 0.01²)` i.i.d. per stock and day.
pub fn gen_price_ratios<R: Rng + ?Sized>(n: usize, horizon: usize, rng: &mut R) -> Result<Problem> {
    if n == 0 || horizon == 0 {
        return Err(Error::InvalidParameter("portfolio experiment needs n, T ≥ 1".into()));
    }
    let dist = LogNormal::new(0.0, 0.01).expect("valid log-normal");
    let ratios = (0..horizon)
        .map(|_| Point::from_fn(n, |_, _| dist.sample(rng)))
        .collect();
    shifted_problem(ratios)
}

/// Day-over-day ratios `p_{t+1}(i) / p_t(i)`.
pub fn ratios_from_prices(prices: &[Vec<f64>]) -> Result<Vec<Point>> {
    let width = prices.first().map_or(0, Vec::len);
    if width == 0 {
        return Err(Error::PriceData("no prices".into()));
    }
    for (day, row) in prices.iter().enumerate() {
        if row.len() != width {
            return Err(Error::PriceData(format!(
                "day {} has {} prices, expected {width}",
                day + 1,
                row.len()
            )));
        }
        if let Some(p) = row.iter().find(|p| !(**p > 0.0 && p.is_finite())) {
            return Err(Error::PriceData(format!("day {} has non-positive price {p}", day + 1)));
        }
    }
    Ok(prices
        .windows(2)
        .map(|w| Point::from_fn(width, |i, _| w[1][i] / w[0][i]))
        .collect())
}

/// Reads a comma-separated price table (one row per day, optional ticker
/// header) and builds the portfolio problem on `Δ'_n`.
pub fn ingest_price_csv(path: impl AsRef<Path>) -> Result<Problem> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut prices = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) => prices.push(row),
            Err(_) if line == 0 => continue,
            Err(e) => return Err(Error::PriceData(format!("line {}: {e}", line + 1))),
        }
    }
    if prices.len() < 2 {
        return Err(Error::PriceData("need at least two days of prices".into()));
    }
    shifted_problem(ratios_from_prices(&prices)?)
}

fn shifted_problem(ratios: Vec<Point>) -> Result<Problem> {
    let n = ratios[0].len();
    let losses = ratios
        .into_iter()
        .map(|r| PortfolioLoss::shifted(r).map(Loss::Portfolio))
        .collect::<Result<Vec<_>>>()?;
    Ok(Problem {
        set: ConstraintSet::shifted_simplex(n)?,
        losses: LossSequence::new(losses),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::io::Write;

    fn p(v: &[f64]) -> Point {
        Point::from_row_slice(v)
    }

    #[test]
    fn raw_value_and_gradient() {
        let f = PortfolioLoss::new(p(&[1.0, 1.0])).unwrap();
        assert_eq!(f.eval(&p(&[0.5, 0.5])).unwrap(), 0.0);
        let f = PortfolioLoss::new(p(&[2.0, 0.5])).unwrap();
        let g = f.grad(&p(&[0.5, 0.5])).unwrap();
        assert!((g - p(&[-1.6, -0.4])).norm() < 1e-12);
    }

    #[test]
    fn nonpositive_wealth_is_a_domain_error() {
        let f = PortfolioLoss::new(p(&[1.0, 2.0])).unwrap();
        assert!(matches!(f.eval(&p(&[0.0, 0.0])), Err(Error::Domain(_))));
        assert!(matches!(f.grad(&p(&[-1.0, 0.0])), Err(Error::Domain(_))));
        assert!(PortfolioLoss::new(p(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn shifted_form_matches_weights() {
        let r = p(&[1.1, 0.9, 1.0]);
        let raw = PortfolioLoss::new(r.clone()).unwrap();
        let shifted = PortfolioLoss::shifted(r).unwrap();
        let x = p(&[0.2, 0.5, 0.3]);
        let y = x.map(|v| 6.0 * v - 1.0);
        assert!((raw.eval(&x).unwrap() - shifted.eval(&y).unwrap()).abs() < 1e-14);
        // uniform portfolio sits at y = 2n/n − 1 = 1
        let flat = PortfolioLoss::shifted(p(&[1.0, 1.0, 1.0])).unwrap();
        assert!(flat.eval(&p(&[1.0, 1.0, 1.0])).unwrap().abs() < 1e-15);
    }

    #[test]
    fn ratios_from_price_table() {
        let r = ratios_from_prices(&[vec![1.0, 1.0], vec![2.0, 1.0], vec![1.0, 1.0]]).unwrap();
        assert_eq!(r, vec![p(&[2.0, 1.0]), p(&[0.5, 1.0])]);
        assert!(ratios_from_prices(&[vec![1.0, 1.0], vec![2.0]]).is_err());
        assert!(ratios_from_prices(&[vec![1.0, 0.0], vec![2.0, 1.0]]).is_err());
    }

    fn write_csv(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    #[test]
    fn csv_with_and_without_header() {
        for body in ["AAA,BBB\n1,1\n2,1\n1,1\n", "1,1\n2,1\n1,1\n"] {
            let file = write_csv(body);
            let problem = ingest_price_csv(file.path()).unwrap();
            let Loss::Portfolio(first) = problem.losses.round(1) else {
                panic!()
            };
            assert_eq!(first.ratio(), &p(&[2.0, 1.0]));
            assert_eq!(problem.losses.len(), 2);
        }
        assert!(ingest_price_csv(write_csv("1,1\n2\n").path()).is_err());
        assert!(ingest_price_csv(write_csv("1,1\n2,-1\n").path()).is_err());
        assert!(ingest_price_csv(write_csv("1,1\n2,x\n").path()).is_err());
    }

    #[test]
    fn constant_prices_give_zero_loss_at_uniform() {
        let file = write_csv("5,5,5\n5,5,5\n5,5,5\n");
        let problem = ingest_price_csv(file.path()).unwrap();
        for loss in problem.losses.iter() {
            assert_eq!(loss.eval(&p(&[1.0, 1.0, 1.0])).unwrap(), 0.0);
        }
    }

    #[test]
    fn synthetic_ratios_stay_near_one() {
        // log r ~ N(0, 0.01²): leaving (0.9, 1.1) needs |z| > 9.5
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let problem = gen_price_ratios(100, 10_000, &mut rng).unwrap();
        for loss in problem.losses.iter() {
            let Loss::Portfolio(l) = loss else { panic!() };
            assert!(l.ratio().iter().all(|&r| r > 0.9 && r < 1.1));
        }
    }
}
