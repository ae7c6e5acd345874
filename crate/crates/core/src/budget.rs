//! Resource budgets for the exponential searches.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Budget {
    /// Branch-and-bound nodes per exact responsibility call.
    pub exact_nodes: u64,
    /// Largest number of relevant endogenous tuples brute force accepts.
    pub brute_tuples: usize,
    /// States explored when searching for a linear weakening.
    pub weakening_states: usize,
    /// Queries visited by the rewriting search.
    pub rewrite_nodes: usize,
    /// Images enumerated while generating a Datalog program.
    pub datalog_images: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            exact_nodes: 5_000_000,
            brute_tuples: 20,
            weakening_states: 200_000,
            rewrite_nodes: 50_000,
            datalog_images: 100_000,
        }
    }
}

impl Budget {
    /// Applies overrides written as `key=value,...` (keys: `exact-nodes`,
    /// `brute-tuples`, `weakening-states`, `rewrite-nodes`, `datalog-images`)
    /// or as a bare integer, which sets `exact-nodes`.
    pub fn with_overrides(mut self, text: &str) -> Result<Budget, String> {
        let text = text.trim();
        if text.is_empty() {
            return Ok(self);
        }
        if let Ok(n) = text.parse::<u64>() {
            self.exact_nodes = n;
            return Ok(self);
        }
        for part in text.split(',') {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| format!("expected key=value, found `{}`", part.trim()))?;
            let value: u64 = value
                .trim()
                .parse()
                .map_err(|_| format!("`{}` is not a non-negative integer", value.trim()))?;
            let as_usize = || usize::try_from(value).map_err(|_| "value too large".to_string());
            match key.trim().replace('_', "-").as_str() {
                "exact-nodes" => self.exact_nodes = value,
                "brute-tuples" => self.brute_tuples = as_usize()?,
                "weakening-states" => self.weakening_states = as_usize()?,
                "rewrite-nodes" => self.rewrite_nodes = as_usize()?,
                "datalog-images" => self.datalog_images = as_usize()?,
                other => return Err(format!("unknown budget `{other}`")),
            }
        }
        Ok(self)
    }
}
