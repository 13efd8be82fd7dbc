use crate::mesh::Mesh;

/// Scale of the 1/h weights on faces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PenaltyMode {
    /// 1 / h_max everywhere.
    #[default]
    GlobalH,
    /// 1 / h_e of each face.
    FaceH,
}

impl PenaltyMode {
    pub fn weight(self, mesh: &Mesh, face: usize) -> f64 {
        match self {
            PenaltyMode::GlobalH => 1.0 / mesh.h_max,
            PenaltyMode::FaceH => 1.0 / mesh.faces[face].length,
        }
    }
}
