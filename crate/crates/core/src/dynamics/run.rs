use super::{make_initial, step, BcMode, BodyForce, EnergyLedger, Increment, LedgerRow, Model, State, StepParams, BLOW_UP_FACTOR};
use crate::error::{Error, Result};

/// Receives every completed step.
pub trait StepObserver {
    fn on_step(&mut self, index: usize, prev: &State, next: &State, inc: &Increment, row: &LedgerRow) -> Result<()>;
}

impl StepObserver for () {
    fn on_step(&mut self, _: usize, _: &State, _: &State, _: &Increment, _: &LedgerRow) -> Result<()> {
        Ok(())
    }
}

impl<F> StepObserver for F
where
    F: FnMut(usize, &State, &State, &Increment, &LedgerRow) -> Result<()>,
{
    fn on_step(&mut self, index: usize, prev: &State, next: &State, inc: &Increment, row: &LedgerRow) -> Result<()> {
        self(index, prev, next, inc, row)
    }
}

/// A single trajectory together with its energy ledger.
#[derive(Clone, Debug)]
pub struct Simulation {
    pub model: Model,
    pub mode: BcMode,
    pub params: StepParams,
    pub force: BodyForce,
    state: State,
    ledger: EnergyLedger,
    steps_done: usize,
    guard: f64,
}

impl Simulation {
    pub fn new(model: Model, mode: BcMode, params: StepParams, force: BodyForce, initial: State) -> Result<Self> {
        mode.validate()?;
        if !(params.dt.is_finite() && params.dt > 0.0) {
            return Err(Error::Config(format!("time step must be positive, got {}", params.dt)));
        }
        let ledger = EnergyLedger::new(&model, &initial);
        let guard = BLOW_UP_FACTOR * initial.max_speed().max(1.0);
        Ok(Self { model, mode, params, force, state: initial, ledger, steps_done: 0, guard })
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn ledger(&self) -> &EnergyLedger {
        &self.ledger
    }

    pub fn steps_done(&self) -> usize {
        self.steps_done
    }

    pub fn advance(&mut self, observer: &mut dyn StepObserver) -> Result<()> {
        let (next, inc) = step(&self.model, &self.state, self.params, self.mode, &self.force)?;
        let vmax = next.max_speed();
        if !(vmax <= self.guard) {
            return Err(Error::BlowUp { step: self.steps_done + 1, t: next.t, vmax, guard: self.guard });
        }
        let row = self.ledger.record(&self.model, self.mode, &self.force, &self.state, &next, &inc)?;
        self.steps_done += 1;
        observer.on_step(self.steps_done, &self.state, &next, &inc, &row)?;
        self.state = next;
        Ok(())
    }

    pub fn run(&mut self, steps: usize, observer: &mut dyn StepObserver) -> Result<()> {
        for _ in 0..steps {
            self.advance(observer)?;
        }
        Ok(())
    }

    pub fn into_parts(self) -> (State, EnergyLedger) {
        (self.state, self.ledger)
    }
}

/// Everything needed to start a trajectory: model, boundary mode, time grid, forcing and
/// the raw initial data.
#[derive(Clone, Debug)]
pub struct Problem {
    pub model: Model,
    pub mode: BcMode,
    pub params: StepParams,
    pub steps: usize,
    pub force: BodyForce,
    /// Initial data before any λ-dependent lift.
    pub data: State,
    pub r_margin: f64,
    /// Lift the data with [`make_initial`] in dissipative mode.
    pub compatible: bool,
}

impl Problem {
    pub fn with_mode(&self, mode: BcMode) -> Self {
        Self { mode, ..self.clone() }
    }

    pub fn initial_state(&self) -> Result<State> {
        match self.mode {
            BcMode::Dissipative { lambda } if self.compatible => {
                Ok(make_initial(&self.model, &self.data, lambda, self.r_margin)?.state)
            }
            _ => Ok(self.data.clone()),
        }
    }

    pub fn simulation(&self) -> Result<Simulation> {
        Simulation::new(self.model.clone(), self.mode, self.params, self.force.clone(), self.initial_state()?)
    }

    /// Runs all steps and returns the finished simulation.
    pub fn run(&self, observer: &mut dyn StepObserver) -> Result<Simulation> {
        let mut sim = self.simulation()?;
        sim.run(self.steps, observer)?;
        Ok(sim)
    }
}
