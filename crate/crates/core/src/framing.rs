//! Pilot / data / guard layout of one transmitted block.
//!
//! Time index 0 is the first pilot slot of the leading guard period, so the
//! within-period offset of instant `k` is simply `k % L`. Every period starts
//! with `n_t` pilot slots, one transmit antenna active per slot in antenna
//! order. Data periods fill the remaining `L - n_t` slots with codeword
//! vectors; guard periods leave them silent. The block closes with one extra
//! pilot group so that every data instant sees `T` pilot groups on each side.

use serde::Serialize;

use crate::error::{param, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    /// Pilot vector `p_t` exciting only transmit antenna `antenna` (0-based).
    Pilot { antenna: usize },
    /// Codeword vector number `index` (0-based position within the codeword).
    Data { index: usize },
    Silent,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrameSchedule {
    period: usize,
    n_t: usize,
    window: usize,
    data_len: usize,
    slots: Vec<Slot>,
    pilots: Vec<usize>,
    data: Vec<usize>,
    silent: Vec<usize>,
}

/// JSON view of a schedule.
#[derive(Debug, Serialize)]
pub struct ScheduleDump {
    pub period: usize,
    pub n_t: usize,
    pub window: usize,
    pub data_len: usize,
    pub total_len: usize,
    pub pilot_count: usize,
    pub silent_count: usize,
    /// `[time, antenna]` pairs.
    pub pilots: Vec<[usize; 2]>,
    pub data: Vec<usize>,
    pub silent: Vec<usize>,
}

impl FrameSchedule {
    /// Lays out `data_len` data vectors with pilot spacing `period`, `n_t`
    /// transmit antennas and an estimator window of `window` pilot groups on
    /// each side.
    pub fn build(period: usize, n_t: usize, window: usize, data_len: usize) -> Result<Self> {
        if n_t == 0 {
            return param("need at least one transmit antenna");
        }
        if n_t >= period {
            return param(format!(
                "pilot period L = {period} must exceed n_t = {n_t} to leave room for data"
            ));
        }
        if window == 0 {
            return param("estimator window T must be at least 1");
        }
        let per_block = period - n_t;
        if data_len == 0 || !data_len.is_multiple_of(per_block) {
            return param(format!(
                "codeword length N = {data_len} must be a positive multiple of L - n_t = {per_block}"
            ));
        }
        let data_periods = data_len / per_block;
        let guard = window - 1;
        let periods = guard + data_periods + guard;
        let total = periods * period + n_t;

        let mut slots = Vec::with_capacity(total);
        let mut next_data = 0;
        for p in 0..periods {
            let carries_data = p >= guard && p < guard + data_periods;
            for s in 0..period {
                slots.push(if s < n_t {
                    Slot::Pilot { antenna: s }
                } else if carries_data {
                    next_data += 1;
                    Slot::Data { index: next_data - 1 }
                } else {
                    Slot::Silent
                });
            }
        }
        slots.extend((0..n_t).map(|antenna| Slot::Pilot { antenna }));
        debug_assert_eq!(slots.len(), total);

        let pick = |want: fn(&Slot) -> bool| -> Vec<usize> {
            slots.iter().enumerate().filter(|(_, s)| want(s)).map(|(k, _)| k).collect()
        };
        let pilots = pick(|s| matches!(s, Slot::Pilot { .. }));
        let data = pick(|s| matches!(s, Slot::Data { .. }));
        let silent = pick(|s| matches!(s, Slot::Silent));

        Ok(Self {
            period,
            n_t,
            window,
            data_len,
            slots,
            pilots,
            data,
            silent,
        })
    }

    /// `L`.
    pub fn period(&self) -> usize {
        self.period
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    /// `T`.
    pub fn window(&self) -> usize {
        self.window
    }

    /// `N`.
    pub fn data_len(&self) -> usize {
        self.data_len
    }

    /// `N' = N_p + N + N_un`.
    pub fn total_len(&self) -> usize {
        self.slots.len()
    }

    /// `N_p`.
    pub fn pilot_count(&self) -> usize {
        self.pilots.len()
    }

    /// `N_un`.
    pub fn silent_count(&self) -> usize {
        self.silent.len()
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn slot(&self, k: usize) -> Option<Slot> {
        self.slots.get(k).copied()
    }

    /// Pilot set `P`, increasing.
    pub fn pilot_indices(&self) -> &[usize] {
        &self.pilots
    }

    /// Data set `D`, increasing; position `i` carries codeword vector `i`.
    pub fn data_indices(&self) -> &[usize] {
        &self.data
    }

    pub fn silent_indices(&self) -> &[usize] {
        &self.silent
    }

    pub fn is_data(&self, k: usize) -> bool {
        matches!(self.slot(k), Some(Slot::Data { .. }))
    }

    /// Within-period offsets `k mod L` at which data vectors sit: `n_t..L`.
    pub fn data_offsets(&self) -> Vec<usize> {
        (self.n_t..self.period).collect()
    }

    /// Pilot instants of `antenna` within `[k - T L, k + T L]`, both ends
    /// inclusive, clipped to the block.
    pub fn pilot_window(&self, k: usize, antenna: usize) -> Vec<usize> {
        let reach = self.window * self.period;
        let lo = k.saturating_sub(reach);
        let hi = (k + reach).min(self.total_len() - 1);
        (lo..=hi)
            .filter(|&j| self.slots[j] == Slot::Pilot { antenna })
            .collect()
    }

    pub fn dump(&self) -> ScheduleDump {
        ScheduleDump {
            period: self.period,
            n_t: self.n_t,
            window: self.window,
            data_len: self.data_len,
            total_len: self.total_len(),
            pilot_count: self.pilot_count(),
            silent_count: self.silent_count(),
            pilots: self
                .pilots
                .iter()
                .map(|&k| match self.slots[k] {
                    Slot::Pilot { antenna } => [k, antenna],
                    _ => unreachable!(),
                })
                .collect(),
            data: self.data.clone(),
            silent: self.silent.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.dump())?)
    }
}

/// `N_p = (N / (L - n_t) + 1 + 2 (T - 1)) n_t`.
pub fn pilot_count_formula(period: usize, n_t: usize, window: usize, data_len: usize) -> usize {
    (data_len / (period - n_t) + 1 + 2 * (window - 1)) * n_t
}

/// `N_un = 2 (L - n_t)(T - 1)`.
pub fn silent_count_formula(period: usize, n_t: usize, window: usize) -> usize {
    2 * (period - n_t) * (window - 1)
}
