#pragma once

#include <cstdint>
#include <vector>

#include "vqm/error.hpp"

namespace vqm {

// Dense row-major 2-D array. Used for luma planes (uint8_t) and all
// real-valued maps (double) flowing through the pipeline.
template <typename T>
struct Field2D {
    int rows = 0;
    int cols = 0;
    std::vector<T> data;

    Field2D() = default;
    Field2D(int r, int c, T fill = T{}) : rows(r), cols(c), data(static_cast<size_t>(r) * c, fill) {}

    T& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    const T& at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

    size_t size() const { return data.size(); }
    bool same_shape(const Field2D& o) const { return rows == o.rows && cols == o.cols; }
};

using LumaPlane = Field2D<uint8_t>;
using RealField = Field2D<double>;

inline RealField to_real(const LumaPlane& p) {
    RealField f(p.rows, p.cols);
    for (size_t i = 0; i < p.data.size(); ++i) f.data[i] = static_cast<double>(p.data[i]);
    return f;
}

} // namespace vqm
