use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// League salary cap by year, in USD.
pub type CapTable = BTreeMap<i32, f64>;

/// Expresses a salary signed in `contract_year` in `reference_year` cap dollars.
pub fn adjust_cap_inflation(salary: f64, contract_year: i32, cap_table: &CapTable, reference_year: i32) -> Result<f64> {
    let cap = |year: i32| -> Result<f64> {
        match cap_table.get(&year) {
            Some(&c) if c > 0.0 && c.is_finite() => Ok(c),
            Some(&c) => Err(Error::InvalidArgument(format!("cap for {year} must be positive, got {c}"))),
            None => Err(Error::MissingCapYear(year)),
        }
    };
    let (from, to) = (cap(contract_year)?, cap(reference_year)?);
    if contract_year == reference_year {
        return Ok(salary);
    }
    Ok(salary * to / from)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn table() -> CapTable {
        CapTable::from([(2013, 100.0), (2014, 110.0)])
    }

    #[test]
    fn ratio_adjustment() {
        assert!((adjust_cap_inflation(50.0, 2013, &table(), 2014).unwrap() - 55.0).abs() < 1e-12);
    }

    #[test]
    fn same_year_unchanged() {
        assert_eq!(adjust_cap_inflation(1234.5, 2014, &table(), 2014).unwrap(), 1234.5);
    }

    #[test]
    fn missing_year() {
        assert!(matches!(
            adjust_cap_inflation(50.0, 2012, &table(), 2014),
            Err(Error::MissingCapYear(2012))
        ));
    }

    proptest! {
        #[test]
        fn monotone_in_reference_cap(salary in 1.0f64..1e8, base in 1e6f64..2e8, lo in 1e6f64..2e8, bump in 1.0f64..1e7) {
            let mut t = CapTable::from([(2012, base), (2015, lo)]);
            let a = adjust_cap_inflation(salary, 2012, &t, 2015).unwrap();
            t.insert(2015, lo + bump);
            let b = adjust_cap_inflation(salary, 2012, &t, 2015).unwrap();
            prop_assert!(b > a);
        }
    }
}
