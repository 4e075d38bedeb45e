//! Conserved densities and fluxes of the three currents
//!
//! | current   | density C⁰          | flux C¹                                   |
//! |-----------|---------------------|-------------------------------------------|
//! | Mass      | `u`                 | `-u_tx + f(u)`                            |
//! | Energy    | `(u² + u_x²)/2`     | `-u u_tx + h(u)`                          |
//! | Potential | `F(u)`              | `(u_tx² - u_t²)/2 - f(u) u_tx + f(u)²/2`  |
//!
//! with `F' = f`, `h' = u f'`. Time derivatives are always recomputed from
//! the current state through the flow's right-hand side.

use std::io::{self, Write};

use serde::Serialize;

use crate::evolution::{simulate, Blowup, EvolutionError, SimConfig, SimState};
use crate::fields::{self, h1_norm, integrate, Field};
use crate::kernel::{self, KernelError, KernelSpec};
use crate::nonlinearity::NonlinearitySpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CurrentId {
    Mass,
    Energy,
    Potential,
}

impl CurrentId {
    pub const ALL: [CurrentId; 3] = [CurrentId::Mass, CurrentId::Energy, CurrentId::Potential];
}

/// `u` and the derivatives the currents are built from.
#[derive(Debug, Clone)]
pub struct Jet {
    pub u: Field,
    pub u_x: Field,
    pub u_t: Field,
    pub u_tx: Field,
}

impl Jet {
    pub fn new(u: &Field, nonlinearity: &NonlinearitySpec, spec: &KernelSpec) -> Result<Self, KernelError> {
        let u_t = kernel::rhs(u, nonlinearity, spec)?;
        Ok(Self {
            u: u.clone(),
            u_x: fields::derivative(u, 1)?,
            u_tx: fields::derivative(&u_t, 1)?,
            u_t,
        })
    }
}

/// Pointwise conserved density.
pub fn density(jet: &Jet, id: CurrentId, nl: &NonlinearitySpec) -> Field {
    let u = jet.u.values();
    let v: Vec<f64> = match id {
        CurrentId::Mass => u.to_vec(),
        CurrentId::Energy => u
            .iter()
            .zip(jet.u_x.values())
            .map(|(a, b)| 0.5 * (a * a + b * b))
            .collect(),
        CurrentId::Potential => u.iter().map(|&a| nl.f_anti(a)).collect(),
    };
    Field::from_raw(*jet.u.domain(), v)
}

fn flux_value(jet: &Jet, id: CurrentId, nl: &NonlinearitySpec, j: usize) -> f64 {
    let u = jet.u.values()[j];
    let ut = jet.u_t.values()[j];
    let utx = jet.u_tx.values()[j];
    let f = nl.f(u);
    match id {
        CurrentId::Mass => -utx + f,
        CurrentId::Energy => -u * utx + nl.h_anti(u),
        CurrentId::Potential => 0.5 * (utx * utx - ut * ut) - f * utx + 0.5 * f * f,
    }
}

/// Pointwise conserved flux.
pub fn flux(jet: &Jet, id: CurrentId, nl: &NonlinearitySpec) -> Field {
    let n = jet.u.values().len();
    Field::from_raw(*jet.u.domain(), (0..n).map(|j| flux_value(jet, id, nl, j)).collect())
}

/// `∫ C⁰ dx` at the state's time.
pub fn density_integral(state: &SimState, id: CurrentId, nl: &NonlinearitySpec) -> Result<f64, KernelError> {
    let u = &state.u;
    Ok(match id {
        CurrentId::Mass => integrate(u),
        CurrentId::Energy => {
            let ux = fields::derivative(u, 1)?;
            integrate(&u.zip_with(&ux, |a, b| 0.5 * (a * a + b * b))?)
        }
        CurrentId::Potential => integrate(&u.map(|a| nl.f_anti(a))),
    })
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("x = {0} is not a grid point")]
    NotAGridPoint(f64),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// `C¹` at the grid point `x_point`.
pub fn flux_at(
    state: &SimState,
    id: CurrentId,
    x_point: f64,
    nl: &NonlinearitySpec,
    spec: &KernelSpec,
) -> Result<f64, DiagnosticsError> {
    let j = state
        .u
        .domain()
        .grid_index(x_point)
        .ok_or(DiagnosticsError::NotAGridPoint(x_point))?;
    let jet = Jet::new(&state.u, nl, spec)?;
    Ok(flux_value(&jet, id, nl, j))
}

/// Recorded conserved quantities along a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DiagnosticSeries {
    pub times: Vec<f64>,
    pub mass: Vec<f64>,
    pub energy: Vec<f64>,
    pub potential: Vec<f64>,
    pub h1_norm: Vec<f64>,
}

impl DiagnosticSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn record(&mut self, state: &SimState, nl: &NonlinearitySpec) -> Result<(), KernelError> {
        self.times.push(state.t);
        self.mass.push(density_integral(state, CurrentId::Mass, nl)?);
        self.energy.push(density_integral(state, CurrentId::Energy, nl)?);
        self.potential.push(density_integral(state, CurrentId::Potential, nl)?);
        self.h1_norm.push(h1_norm(&state.u));
        Ok(())
    }

    pub fn values(&self, id: CurrentId) -> &[f64] {
        match id {
            CurrentId::Mass => &self.mass,
            CurrentId::Energy => &self.energy,
            CurrentId::Potential => &self.potential,
        }
    }

    /// CSV with header `t,mass,energy,potential,h1norm`, 17 significant
    /// digits. `comment`, if given, is written first as a `# ` line.
    pub fn write_csv<W: Write>(&self, mut out: W, comment: Option<&str>) -> io::Result<()> {
        if let Some(c) = comment {
            writeln!(out, "# {c}")?;
        }
        writeln!(out, "t,mass,energy,potential,h1norm")?;
        for i in 0..self.len() {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                self.times[i], self.mass[i], self.energy[i], self.potential[i], self.h1_norm[i]
            )?;
        }
        Ok(())
    }
}

/// Relative drift `max_t |q(t) - q(0)| / max(|q(0)|, 1)`.
pub fn relative_drift(values: &[f64]) -> f64 {
    let Some(&first) = values.first() else {
        return 0.0;
    };
    let scale = first.abs().max(1.0);
    values.iter().fold(0.0f64, |m, v| m.max((v - first).abs())) / scale
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftReport {
    pub mass: f64,
    pub energy: f64,
    pub potential: f64,
    pub h1norm: f64,
    pub tolerance: f64,
    /// Names of quantities whose drift exceeds `tolerance`.
    pub flagged: Vec<String>,
}

impl DriftReport {
    pub fn ok(&self) -> bool {
        self.flagged.is_empty()
    }
}

pub fn drift_report(series: &DiagnosticSeries, tolerance: f64) -> DriftReport {
    let mass = relative_drift(&series.mass);
    let energy = relative_drift(&series.energy);
    let potential = relative_drift(&series.potential);
    let h1norm = relative_drift(&series.h1_norm);
    let flagged = [("mass", mass), ("energy", energy), ("potential", potential), ("h1norm", h1norm)]
        .into_iter()
        .filter(|(_, d)| *d > tolerance)
        .map(|(n, _)| n.to_string())
        .collect();
    DriftReport {
        mass,
        energy,
        potential,
        h1norm,
        tolerance,
        flagged,
    }
}

/// Outcome of a run with diagnostics recorded at every callback.
#[derive(Debug, Clone)]
pub struct TrackedRun {
    pub series: DiagnosticSeries,
    pub final_state: SimState,
    pub blowup: Option<Box<Blowup>>,
    /// Largest top-third spectral content seen at any recorded time.
    pub max_tail_fraction: f64,
}

/// Runs [`simulate`] recording the series. A blowup is captured in the
/// result (the series covers the run up to the last record before it).
pub fn run_tracked(u0: Field, config: &SimConfig) -> Result<TrackedRun, EvolutionError> {
    let mut series = DiagnosticSeries::default();
    let mut record_err = None;
    let mut tail = 0.0f64;
    let result = simulate(u0, config, |s| {
        tail = tail.max(fields::to_spectral(&s.u).tail_fraction());
        if let Err(e) = series.record(s, &config.nonlinearity) {
            record_err.get_or_insert(e);
        }
    });
    if let Some(e) = record_err {
        return Err(e.into());
    }
    match result {
        Ok(final_state) => Ok(TrackedRun {
            series,
            final_state,
            blowup: None,
            max_tail_fraction: tail,
        }),
        Err(EvolutionError::Blowup(b)) => Ok(TrackedRun {
            series,
            final_state: b.last_state.clone(),
            blowup: Some(b),
            max_tail_fraction: tail,
        }),
        Err(e) => Err(e),
    }
}
