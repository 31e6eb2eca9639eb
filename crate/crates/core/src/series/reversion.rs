//! Compositional inverse of a univariate series.

use super::{SeriesError, SparseSeries, VarRole};
use crate::coefficients::Coeff;

impl<C: Coeff> SparseSeries<C> {
    /// `g` with `f(g(x)) = x` for `f = x + O(x^2)` in the series variable
    /// `var` (coefficients may involve ring generators).
    ///
    /// Newton iteration `g <- g - (f(g) - x) / f'(g)`, doubling the number of
    /// correct orders per step.
    pub fn reversion(&self, var: &str) -> Result<SparseSeries<C>, SeriesError> {
        let t = self.vars();
        let i = t.require(var)?;
        for (j, v) in t.iter().enumerate() {
            if j != i && v.role == VarRole::Series && self.iter().any(|(m, _)| m[j] != 0) {
                return Err(SeriesError::NoUnitLinearTerm(var.to_string()));
            }
        }
        let lin = self.coefficient_of(var, 1)?;
        if lin != self.one_like() || self.iter().any(|(m, _)| m[i] <= 0) {
            return Err(SeriesError::NoUnitLinearTerm(var.to_string()));
        }
        let deg = t.get(i).degree as i64;
        let limit = match (self.bound(), t.get(i).cap) {
            (Some(b), _) => b / deg,
            (None, Some(c)) => c as i64 - 1,
            (None, None) => return Err(SeriesError::Unbounded("reversion".into())),
        };
        let fprime = self.derivative(var)?;
        let mut g = SparseSeries::var(self.ring(), t, var, self.bound())?;
        // g is exact through var^prec
        let mut prec = 1i64;
        while prec < limit {
            prec = (2 * prec + 1).min(limit);
            let b = Some(prec * deg);
            let gb = g.with_bound(b);
            let x = SparseSeries::var(self.ring(), t, var, b)?;
            let residual = &self.with_bound(b).compose(var, &gb)? - &x;
            let slope = fprime.with_bound(b).compose(var, &gb)?.inverse()?;
            g = &gb - &(&residual * &slope);
        }
        Ok(g.with_bound(self.bound()))
    }
}
