use crate::model::Table;
use crate::rng::SeededRng;

/// The row order `shuffle_rows` uses: output row `i` is input row `perm[i]`.
pub fn row_permutation(height: usize, seed: u64) -> Vec<usize> {
    SeededRng::new(seed).permutation(height)
}

/// The column order `shuffle_columns` uses: output column `k` is input
/// column `perm[k]`.
pub fn column_permutation(width: usize, seed: u64) -> Vec<usize> {
    SeededRng::new(seed).permutation(width)
}

pub fn shuffle_rows(table: &Table, seed: u64) -> Table {
    let perm = row_permutation(table.height(), seed);
    Table {
        header: table.header.clone(),
        rows: perm.iter().map(|&i| table.rows[i].clone()).collect(),
        caption: table.caption.clone(),
    }
}

pub fn permute_columns(table: &Table, perm: &[usize]) -> Table {
    let pick = |cells: &[String]| perm.iter().map(|&j| cells[j].clone()).collect::<Vec<_>>();
    Table {
        header: pick(&table.header),
        rows: table.rows.iter().map(|r| pick(r)).collect(),
        caption: table.caption.clone(),
    }
}

pub fn shuffle_columns(table: &Table, seed: u64) -> Table {
    permute_columns(table, &column_permutation(table.width(), seed))
}
