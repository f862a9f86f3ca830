#pragma once

#include "savflow/field.hpp"

namespace savflow {

/// Forward DFT, normalized so the mode-0 coefficient equals the mean of f.
SpectralField transform_forward(const Field& f);

/// Inverse of transform_forward; the imaginary residue is discarded
/// (Hermitian-symmetry projection for real fields).
Field transform_backward(const SpectralField& fh);

}  // namespace savflow
