use nalgebra::Vector3;

use crate::error::MagneticsError;
use crate::magnetics::{wrench_on_dipole, DipolePose, DrivenCoil, ForceModel, MagnetSpec, Winding};

/// Axial force on the magnet per ampere in each coil, tabulated across the
/// stroke for one vibration axis. The magnet's moment points along the axis.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceProfile {
    axis: Vector3<f64>,
    s_min: f64,
    spacing: f64,
    /// `nodes[k][coil]`, N/A
    nodes: Vec<[f64; 4]>,
}

impl ForceProfile {
    pub fn build(
        windings: &[Winding; 4],
        magnet: &MagnetSpec,
        axis: Vector3<f64>,
        half_stroke: f64,
        n_nodes: usize,
        model: ForceModel,
    ) -> Result<Self, MagneticsError> {
        let axis = axis.normalize();
        let spacing = 2.0 * half_stroke / (n_nodes - 1) as f64;
        let nodes = (0..n_nodes)
            .map(|k| {
                let s = -half_stroke + spacing * k as f64;
                let pose = DipolePose::new(axis * s, axis);
                let mut row = [0.0; 4];
                for (slot, w) in row.iter_mut().zip(windings) {
                    let wrench = wrench_on_dipole(&[DrivenCoil::new(w, 1.0)], magnet, &pose, model)?;
                    *slot = wrench.force.dot(&axis);
                }
                Ok(row)
            })
            .collect::<Result<Vec<_>, MagneticsError>>()?;
        Ok(Self {
            axis,
            s_min: -half_stroke,
            spacing,
            nodes,
        })
    }

    pub fn axis(&self) -> &Vector3<f64> {
        &self.axis
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Per-coil unit-current force at `s`, linearly interpolated and clamped
    /// to the tabulated range.
    pub fn unit_forces(&self, s: f64) -> [f64; 4] {
        let x = ((s - self.s_min) / self.spacing).max(0.0);
        let last = self.nodes.len() - 1;
        let k = (x.floor() as usize).min(last - 1);
        let w = (x - k as f64).min(1.0);
        let (a, b) = (&self.nodes[k], &self.nodes[k + 1]);
        std::array::from_fn(|c| a[c] + (b[c] - a[c]) * w)
    }

    /// Axial force for the given coil currents (A1, A2, B1, B2), N.
    pub fn force(&self, s: f64, currents: &[f64; 4]) -> f64 {
        let unit = self.unit_forces(s);
        unit.iter().zip(currents).map(|(f, i)| f * i).sum()
    }
}
