//! Battery accounting under the ESP8266 current model.
//!
//! Idle drain is settled lazily: the battery remembers when it was last
//! settled and charges the elapsed idle window on every interaction, so cost
//! is O(events) rather than O(time steps). Death times are exact: when an
//! idle window crosses zero the crossing instant is solved in closed form.

use crate::time::SimTime;

/// Radio/CPU constants for one node class.
#[derive(Debug, Clone, Copy)]
pub struct EnergyModel {
    pub deep_sleep_a: f64,
    pub modem_sleep_a: f64,
    pub awake_a: f64,
    pub tx_a: f64,
    pub rx_a: f64,
    pub voltage: f64,
    pub tx_time_s: f64,
    pub rx_time_s: f64,
    pub sensor_j: f64,
    pub bandwidth_bps: f64,
    pub hop_delay_s: f64,
}

impl Default for EnergyModel {
    fn default() -> Self {
        EnergyModel {
            deep_sleep_a: 1e-5,
            modem_sleep_a: 1.5e-3,
            awake_a: 8.1e-3,
            tx_a: 1.7e-2,
            rx_a: 5.6e-3,
            voltage: 3.7,
            tx_time_s: 30e-3,
            rx_time_s: 40e-3,
            sensor_j: 1.1e-9,
            bandwidth_bps: 54e6,
            hop_delay_s: 5e-3,
        }
    }
}

impl EnergyModel {
    pub fn tx_drain_j(&self) -> f64 {
        self.voltage * self.tx_a * self.tx_time_s
    }

    pub fn rx_drain_j(&self) -> f64 {
        self.voltage * self.rx_a * self.rx_time_s
    }

    pub fn idle_current_a(&self, state: IdleState) -> f64 {
        match state {
            IdleState::Awake => self.awake_a,
            IdleState::ModemSleep => self.modem_sleep_a,
            IdleState::DeepSleep => self.deep_sleep_a,
        }
    }
}

/// Power state a node sits in between radio events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IdleState {
    #[default]
    Awake,
    ModemSleep,
    DeepSleep,
}

#[derive(Debug, Clone)]
pub struct Battery {
    pub capacity_j: f64,
    initial_j: f64,
    remaining_j: f64,
    drained_j: f64,
    last_settle: SimTime,
    death: Option<SimTime>,
    idle: IdleState,
}

impl Battery {
    pub fn new(capacity_j: f64, initial_j: f64, idle: IdleState) -> Self {
        assert!(capacity_j > 0.0, "capacity must be positive");
        assert!(
            initial_j > 0.0 && initial_j <= capacity_j,
            "initial charge must be in (0, capacity]"
        );
        Battery {
            capacity_j,
            initial_j,
            remaining_j: initial_j,
            drained_j: 0.0,
            last_settle: SimTime::ZERO,
            death: None,
            idle,
        }
    }

    pub fn initial_j(&self) -> f64 {
        self.initial_j
    }

    pub fn drained_j(&self) -> f64 {
        self.drained_j
    }

    /// Accrues idle drain from the last settle point up to `now`. Computes
    /// the exact death instant if the window crosses zero.
    pub fn settle(&mut self, now: SimTime, model: &EnergyModel) {
        assert!(
            now >= self.last_settle,
            "settle time went backwards: {} < {}",
            now,
            self.last_settle
        );
        let dt = now.diff_secs(self.last_settle);
        if dt == 0.0 {
            self.last_settle = now;
            return;
        }
        if self.death.is_some() {
            self.last_settle = now;
            return;
        }
        let rate_w = model.voltage * model.idle_current_a(self.idle);
        let drain = rate_w * dt;
        if drain >= self.remaining_j {
            let secs_to_death = self.remaining_j / rate_w;
            self.death = Some(self.last_settle.plus_secs(secs_to_death));
            self.drained_j += self.remaining_j;
            self.remaining_j = 0.0;
        } else {
            self.remaining_j -= drain;
            self.drained_j += drain;
        }
        self.last_settle = now;
    }

    fn charge(&mut self, amount_j: f64, now: SimTime, model: &EnergyModel) -> f64 {
        self.settle(now, model);
        if self.death.is_some() {
            return 0.0;
        }
        let drain = amount_j.min(self.remaining_j);
        self.remaining_j -= drain;
        self.drained_j += drain;
        if self.remaining_j <= 0.0 {
            self.remaining_j = 0.0;
            self.death = Some(now);
        }
        drain
    }

    /// One transmission. A TX that empties the battery still goes out (it
    /// was in flight); the node is dead afterwards.
    pub fn charge_tx(&mut self, now: SimTime, model: &EnergyModel) -> f64 {
        self.charge(model.tx_drain_j(), now, model)
    }

    pub fn charge_rx(&mut self, now: SimTime, model: &EnergyModel) -> f64 {
        self.charge(model.rx_drain_j(), now, model)
    }

    pub fn charge_sense(&mut self, now: SimTime, model: &EnergyModel) -> f64 {
        self.charge(model.sensor_j, now, model)
    }

    pub fn remaining_j(&self) -> f64 {
        self.remaining_j
    }

    pub fn percent(&self) -> f64 {
        100.0 * self.remaining_j / self.capacity_j
    }

    pub fn is_alive(&self) -> bool {
        self.death.is_none()
    }

    pub fn death_time(&self) -> Option<SimTime> {
        self.death
    }

    /// Ledger check: initial == remaining + drained, within `tol` relative.
    pub fn conservation_rel_err(&self) -> f64 {
        ((self.initial_j - self.remaining_j - self.drained_j) / self.initial_j).abs()
    }
}
