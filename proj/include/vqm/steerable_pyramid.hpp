#pragma once

#include <utility>
#include <vector>

#include "vqm/field.hpp"

namespace vqm {

// Oriented bandpass decomposition at `scales` dyadic scales and
// `orientations` evenly spaced orientations (0, 30, ..., 150 degrees for the
// default 6). Built in the frequency domain with polar-separable windows:
// raised-cosine octave bands radially, |cos|^(K-1) lobes angularly,
// normalized so the squared masks tile the plane exactly (tight frame).
//
// Subbands at scale s live on grids halved s-1 times. Odd dimensions are
// zero-padded to even before each downsampling stage; `subband` returns the
// grid cropped back to its unpadded logical size, while the residuals and
// the internal bands keep the padded grids needed for exact reconstruction.
class PyramidDecomposition {
public:
    int scales = 0;
    int orientations = 0;
    int input_rows = 0;
    int input_cols = 0;

    std::vector<RealField> bands;                     // flat_index-ordered, padded grids
    RealField residual_high;                          // level-1 grid
    RealField residual_low;                           // deepest-level grid
    std::vector<std::pair<int, int>> logical_dims;    // per scale, pre-pad

    // Canonical ordering shared with the feature vector: 6*(s-1) + k where
    // k indexes 30-degree steps.
    int flat_index(int scale, int orientation) const {
        return orientations * (scale - 1) + orientation;
    }

    const RealField& band(int scale, int orientation) const {
        return bands[flat_index(scale, orientation)];
    }

    // Band cropped to the logical (unpadded) size of its scale.
    RealField subband(int scale, int orientation) const;
};

// Forward transform. Requires dimensions >= 16x16 and finite values.
PyramidDecomposition decompose(const RealField& field, int scales = 3, int orientations = 6);

// Inverse of decompose, exact to machine precision.
RealField reconstruct(const PyramidDecomposition& p);

} // namespace vqm
