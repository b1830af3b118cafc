#include "vqm/stereo_disparity.hpp"

#include <cmath>
#include <cstdlib>

#include "vqm/motion_est.hpp"

namespace vqm {

double ssim_block(const LumaPlane& a, int ay, int ax, const LumaPlane& b, int by, int bx,
                  int block, double c1, double c2) {
    if (c1 <= 0.0 || c2 <= 0.0) throw ValidationError("ssim_block: constants must be positive");
    const int n = block * block;
    double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
    for (int y = 0; y < block; ++y) {
        const uint8_t* pa = &a.at(ay + y, ax);
        const uint8_t* pb = &b.at(by + y, bx);
        for (int x = 0; x < block; ++x) {
            const double va = pa[x], vb = pb[x];
            sa += va;
            sb += vb;
            saa += va * va;
            sbb += vb * vb;
            sab += va * vb;
        }
    }
    const double ma = sa / n, mb = sb / n;
    const double va = saa / n - ma * ma;
    const double vb = sbb / n - mb * mb;
    const double cov = sab / n - ma * mb;
    return ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
           ((ma * ma + mb * mb + c1) * (va + vb + c2));
}

double ssim_block(const LumaPlane& a, const LumaPlane& b, double c1, double c2) {
    if (!a.same_shape(b) || a.rows != a.cols)
        throw ValidationError("ssim_block: blocks must be square and equally sized");
    return ssim_block(a, 0, 0, b, 0, 0, a.rows, c1, c2);
}

DisparityField estimate_disparity(const LumaPlane& left, const LumaPlane& right,
                                  int search_range) {
    if (!left.same_shape(right)) throw ValidationError("disparity: plane dimensions differ");
    if (left.rows < kBlockSize || left.cols < kBlockSize)
        throw ValidationError("disparity: plane smaller than one 8x8 block");
    if (search_range < 0) throw ValidationError("disparity search range must be >= 0");

    DisparityField field;
    field.block_rows = left.rows / kBlockSize;
    field.block_cols = left.cols / kBlockSize;
    field.disparities = RealField(field.block_rows, field.block_cols);

    for (int br = 0; br < field.block_rows; ++br) {
        for (int bc = 0; bc < field.block_cols; ++bc) {
            const int y = br * kBlockSize, x = bc * kBlockSize;
            double best_score = -2.0;
            int best_d = 0;
            // |d| ascending, negative before positive; first strictly better
            // candidate wins, which realizes the tie-break.
            for (int m = 0; m <= search_range; ++m) {
                for (int sign = 0; sign < (m == 0 ? 1 : 2); ++sign) {
                    const int d = sign == 0 ? -m : m;
                    const int rx = x + d;
                    if (rx < 0 || rx + kBlockSize > left.cols) continue;
                    const double s = ssim_block(left, y, x, right, y, rx, kBlockSize);
                    if (s > best_score) {
                        best_score = s;
                        best_d = d;
                    }
                }
            }
            field.disparities.at(br, bc) = best_d;
        }
    }
    return field;
}

RealField block_average_downsample(const RealField& map, int factor) {
    if (factor < 1) throw ValidationError("downsample factor must be >= 1");
    if (map.rows < factor || map.cols < factor)
        throw ValidationError("field smaller than one tile");
    RealField out(map.rows / factor, map.cols / factor);
    const double inv = 1.0 / (double(factor) * factor);
    for (int r = 0; r < out.rows; ++r)
        for (int c = 0; c < out.cols; ++c) {
            double acc = 0.0;
            for (int y = 0; y < factor; ++y)
                for (int x = 0; x < factor; ++x) acc += map.at(r * factor + y, c * factor + x);
            out.at(r, c) = acc * inv;
        }
    return out;
}

} // namespace vqm
